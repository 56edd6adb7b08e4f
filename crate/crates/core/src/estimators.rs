//! Front speed and CLT variance from regeneration increments and direct
//! trajectories, with the standard errors and distributional checks that
//! certify them at desk scale.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng::SplitMix;
use crate::run::RunSummary;
use crate::stats;

#[derive(Debug, Error, PartialEq)]
pub enum EstimatorError {
    #[error("too few increments: need {need}, got {got}")]
    TooFewIncrements { need: usize, got: usize },
    #[error("no runs reached the requested horizon")]
    NoUsableRuns,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Direct,
    Regenerative,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct SpeedEstimate {
    pub v_hat: f64,
    pub stderr: f64,
    pub method: Method,
    pub n: usize,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct VarianceEstimate {
    pub sigma2_hat: f64,
    pub stderr: f64,
    /// 2.5% bootstrap percentile; positive means non-degenerate at 95%.
    pub lower_ci: f64,
    pub n: usize,
}

/// Ratio estimator `mean(dr) / mean(dk)` over regeneration increments, with
/// the delta-method standard error.
pub fn estimate_v_regen(incs: &[(f64, i64)]) -> Result<SpeedEstimate, EstimatorError> {
    if incs.len() < 30 {
        return Err(EstimatorError::TooFewIncrements { need: 30, got: incs.len() });
    }
    let n = incs.len() as f64;
    let mean_dk = incs.iter().map(|&(dk, _)| dk).sum::<f64>() / n;
    let mean_dr = incs.iter().map(|&(_, dr)| dr as f64).sum::<f64>() / n;
    let v_hat = mean_dr / mean_dk;
    let resid_var = incs
        .iter()
        .map(|&(dk, dr)| {
            let e = dr as f64 - v_hat * dk;
            e * e
        })
        .sum::<f64>()
        / (n - 1.0);
    let stderr = (resid_var / n).sqrt() / mean_dk;
    Ok(SpeedEstimate { v_hat, stderr, method: Method::Regenerative, n: incs.len() })
}

/// Mean and standard error of `r_T / T` over runs that reached `t`.
pub fn estimate_v_direct(runs: &[RunSummary], t: f64) -> Result<SpeedEstimate, EstimatorError> {
    let rates: Vec<f64> = runs
        .iter()
        .filter(|r| r.t_end >= t)
        .map(|r| r.front_at(t).unwrap_or(r.r_end) as f64 / t)
        .collect();
    if rates.is_empty() {
        return Err(EstimatorError::NoUsableRuns);
    }
    let stderr = if rates.len() > 1 { stats::std_error(&rates) } else { 0.0 };
    Ok(SpeedEstimate { v_hat: stats::mean(&rates), stderr, method: Method::Direct, n: rates.len() })
}

/// `mean((dr - v dk)^2) / mean(dk)` with a pairwise bootstrap standard error
/// (the speed is re-fit inside every resample).
pub fn estimate_sigma2(
    incs: &[(f64, i64)],
    v_hat: f64,
    resamples: usize,
    seed: u64,
) -> Result<VarianceEstimate, EstimatorError> {
    if incs.len() < 100 {
        return Err(EstimatorError::TooFewIncrements { need: 100, got: incs.len() });
    }
    let point = sigma2_point(incs, v_hat);
    let mut rng = SplitMix::new(seed);
    let n = incs.len();
    let mut boots = Vec::with_capacity(resamples);
    let mut sample = Vec::with_capacity(n);
    for _ in 0..resamples {
        sample.clear();
        for _ in 0..n {
            sample.push(incs[rng.next_below(n as u64) as usize]);
        }
        let mean_dk = sample.iter().map(|&(dk, _)| dk).sum::<f64>() / n as f64;
        let mean_dr = sample.iter().map(|&(_, dr)| dr as f64).sum::<f64>() / n as f64;
        boots.push(sigma2_point(&sample, mean_dr / mean_dk));
    }
    boots.sort_unstable_by(|a, b| a.total_cmp(b));
    let stderr = stats::variance(&boots).sqrt();
    let lower_ci = boots[(0.025 * resamples as f64) as usize];
    Ok(VarianceEstimate { sigma2_hat: point, stderr, lower_ci, n })
}

fn sigma2_point(incs: &[(f64, i64)], v_hat: f64) -> f64 {
    let n = incs.len() as f64;
    let mean_dk = incs.iter().map(|&(dk, _)| dk).sum::<f64>() / n;
    let mean_sq = incs
        .iter()
        .map(|&(dk, dr)| {
            let e = dr as f64 - v_hat * dk;
            e * e
        })
        .sum::<f64>()
        / n;
    mean_sq / mean_dk
}

/// Gaussian check of the scaled front at horizon `t`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CltReport {
    pub n: usize,
    pub t: f64,
    /// KS distance between the standardized fronts and the standard normal.
    pub ks_distance: f64,
    /// 1%-level critical value at this sample size.
    pub ks_critical: f64,
    /// Correlation between the first- and second-half displacements.
    pub increment_correlation: f64,
    /// `3 / sqrt(n)` band for that correlation.
    pub correlation_bound: f64,
    pub z_scores: Vec<f64>,
}

/// Standardize `(r_T - v t) / sqrt(sigma2 t)` over the runs, compare with the
/// standard normal, and check that the two half-horizon displacements are
/// uncorrelated (the increment structure of the Brownian limit).
pub fn clt_check(
    runs: &[RunSummary],
    t: f64,
    v_hat: f64,
    sigma2_hat: f64,
) -> Result<CltReport, EstimatorError> {
    let scale = (sigma2_hat * t).sqrt();
    let mut z_scores = Vec::with_capacity(runs.len());
    let mut first_half = Vec::with_capacity(runs.len());
    let mut second_half = Vec::with_capacity(runs.len());
    for run in runs.iter().filter(|r| r.t_end >= t) {
        let r_t = run.front_at(t).unwrap_or(run.r_end) as f64;
        z_scores.push((r_t - v_hat * t) / scale);
        if let Some(r_half) = run.front_at(t / 2.0) {
            first_half.push(r_half as f64 - v_hat * t / 2.0);
            second_half.push(r_t - r_half as f64 - v_hat * t / 2.0);
        }
    }
    if z_scores.is_empty() {
        return Err(EstimatorError::NoUsableRuns);
    }
    let n = z_scores.len();
    Ok(CltReport {
        n,
        t,
        ks_distance: stats::ks_distance(&z_scores, stats::normal_cdf),
        ks_critical: stats::ks_critical(n, 0.01),
        increment_correlation: stats::correlation(&first_half, &second_half),
        correlation_bound: 3.0 / (n as f64).sqrt(),
        z_scores,
    })
}

/// Log-log survival slope over the deep tail; see [`stats::tail_slope`].
/// The exceedance floor scales with the sample count so the window sits as
/// deep as the data can support without drowning in order-statistic noise.
pub fn tail_fit(samples: &[f64]) -> Result<(f64, f64, f64), stats::StatsError> {
    if samples.len() < 1000 {
        return Err(stats::StatsError::TooFewSamples { need: 1000, got: samples.len() });
    }
    let min_exceed = (samples.len() / 200).clamp(30, 200);
    stats::tail_slope(samples, min_exceed)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_increments_give_exact_ratio_and_zero_error() {
        let incs = vec![(2.0, 5i64); 50];
        let est = estimate_v_regen(&incs).unwrap();
        assert_eq!(est.v_hat, 2.5);
        assert_eq!(est.stderr, 0.0);
    }

    #[test]
    fn ratio_is_permutation_invariant_and_pools_exactly() {
        let mut incs: Vec<(f64, i64)> = (0..60).map(|i| (1.0 + (i % 7) as f64, 3 + (i % 5) as i64)).collect();
        let a = estimate_v_regen(&incs).unwrap();
        incs.reverse();
        incs.swap(3, 41);
        let b = estimate_v_regen(&incs).unwrap();
        assert_eq!(a.v_hat, b.v_hat);
        // Pooled identity: total dr over total dk.
        let tot_dr: i64 = incs.iter().map(|&(_, dr)| dr).sum();
        let tot_dk: f64 = incs.iter().map(|&(dk, _)| dk).sum();
        assert!((a.v_hat - tot_dr as f64 / tot_dk).abs() < 1e-12);
    }

    #[test]
    fn too_few_increments_is_an_error() {
        let incs = vec![(1.0, 1i64); 29];
        assert_eq!(
            estimate_v_regen(&incs).unwrap_err(),
            EstimatorError::TooFewIncrements { need: 30, got: 29 }
        );
        assert!(matches!(
            estimate_sigma2(&incs, 1.0, 100, 0),
            Err(EstimatorError::TooFewIncrements { need: 100, .. })
        ));
    }

    #[test]
    fn increments_on_the_line_give_zero_variance() {
        let incs: Vec<(f64, i64)> = (1..=120).map(|i| (i as f64, 2 * i as i64)).collect();
        let est = estimate_sigma2(&incs, 2.0, 200, 1).unwrap();
        assert_eq!(est.sigma2_hat, 0.0, "degenerate increments must be flagged by zero variance");
    }

    #[test]
    fn sigma2_recovers_synthetic_cycle_variance() {
        // dk = 1 exactly, dr = 2 + noise with Var 1: sigma2 = 1.
        let mut rng = SplitMix::new(9);
        let incs: Vec<(f64, i64)> = (0..4000)
            .map(|_| {
                let noise = (rng.next_below(3) as i64) - 1; // -1, 0, 1 uniform: Var 2/3
                (1.0, 2 + noise)
            })
            .collect();
        let v = estimate_v_regen(&incs).unwrap().v_hat;
        let est = estimate_sigma2(&incs, v, 400, 2).unwrap();
        assert!((est.sigma2_hat - 2.0 / 3.0).abs() < 0.05, "sigma2 {}", est.sigma2_hat);
        assert!(est.lower_ci > 0.0);
        assert!(est.stderr > 0.0);
    }

    #[test]
    fn clt_check_accepts_synthetic_gaussians() {
        // Synthetic normal fronts: z-scores standardized exactly.
        use crate::model::ModelParams;
        use crate::run::{EventCounts, Mode, RunSummary, Sample, StopCause, StopRule};
        let mut rng = SplitMix::new(4);
        let t = 100.0;
        let (v, s2): (f64, f64) = (1.0, 0.5);
        let runs: Vec<RunSummary> = (0..800)
            .map(|i| {
                let b_half = (s2 * t / 2.0).sqrt() * rng.next_normal();
                let b_full = b_half + (s2 * t / 2.0).sqrt() * rng.next_normal();
                let r_half = (v * t / 2.0 + b_half).round();
                let r_full = (v * t + b_full).round();
                RunSummary {
                    params: ModelParams::new(2, 10, 0).unwrap(),
                    replica: i,
                    seed: i,
                    mode: Mode::Fast,
                    stop: StopRule::Horizon(t),
                    stop_cause: StopCause::Horizon,
                    t_end: t,
                    r_end: r_full as i64,
                    nr_end: 2,
                    samples: vec![Sample { t: t / 2.0, r: r_half as i64, nr: 2 }],
                    events: EventCounts::default(),
                }
            })
            .collect();
        let report = clt_check(&runs, t, v, s2).unwrap();
        // Rounding to integer sites costs a little KS distance on top of the
        // critical value; allow the same 0.02 allowance the harness uses.
        assert!(
            report.ks_distance < report.ks_critical + 0.02,
            "ks {} vs {}",
            report.ks_distance,
            report.ks_critical
        );
        assert!(report.increment_correlation.abs() < report.correlation_bound);
    }

    #[test]
    fn tail_fit_requires_enough_samples() {
        assert!(matches!(
            tail_fit(&vec![1.0; 999]),
            Err(stats::StatsError::TooFewSamples { need: 1000, .. })
        ));
    }
}

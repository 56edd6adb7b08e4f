//! Shared statistical primitives: empirical distribution distances, critical
//! values, tail-slope fits, correlation and summary helpers.

use statrs::distribution::{ContinuousCDF, Normal};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum StatsError {
    #[error("need at least {need} samples, got {got}")]
    TooFewSamples { need: usize, got: usize },
    #[error("degenerate support: {0}")]
    Degenerate(String),
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Unbiased sample variance.
pub fn variance(xs: &[f64]) -> f64 {
    let m = mean(xs);
    xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (xs.len() as f64 - 1.0)
}

pub fn std_error(xs: &[f64]) -> f64 {
    (variance(xs) / xs.len() as f64).sqrt()
}

/// Pearson correlation of paired samples.
pub fn correlation(xs: &[f64], ys: &[f64]) -> f64 {
    assert_eq!(xs.len(), ys.len());
    let (mx, my) = (mean(xs), mean(ys));
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
    }
    sxy / (sxx * syy).sqrt()
}

/// Lag-`k` sample autocorrelation.
pub fn autocorrelation(xs: &[f64], lag: usize) -> f64 {
    let n = xs.len();
    assert!(lag < n);
    let m = mean(xs);
    let denom: f64 = xs.iter().map(|x| (x - m) * (x - m)).sum();
    let num: f64 = (0..n - lag).map(|i| (xs[i] - m) * (xs[i + lag] - m)).sum();
    num / denom
}

/// One-sample Kolmogorov-Smirnov distance against a cdf.
pub fn ks_distance<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> f64 {
    let mut xs = samples.to_vec();
    xs.sort_unstable_by(|a, b| a.total_cmp(b));
    let n = xs.len() as f64;
    let mut d: f64 = 0.0;
    for (i, x) in xs.iter().enumerate() {
        let c = cdf(*x);
        d = d.max((c - i as f64 / n).abs()).max(((i + 1) as f64 / n - c).abs());
    }
    d
}

/// Two-sample Kolmogorov-Smirnov distance.
pub fn ks_two_sample(xs: &[f64], ys: &[f64]) -> f64 {
    let mut xs = xs.to_vec();
    let mut ys = ys.to_vec();
    xs.sort_unstable_by(|a, b| a.total_cmp(b));
    ys.sort_unstable_by(|a, b| a.total_cmp(b));
    let (n, m) = (xs.len(), ys.len());
    let (mut i, mut j) = (0usize, 0usize);
    let mut d: f64 = 0.0;
    while i < n && j < m {
        let x = xs[i];
        let y = ys[j];
        let v = x.min(y);
        while i < n && xs[i] <= v {
            i += 1;
        }
        while j < m && ys[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / n as f64 - j as f64 / m as f64).abs());
    }
    d
}

/// Asymptotic one-sample KS critical value at significance `alpha`.
pub fn ks_critical(n: usize, alpha: f64) -> f64 {
    ((2.0 / alpha).ln() / 2.0).sqrt() / (n as f64).sqrt()
}

/// Asymptotic two-sample KS critical value at significance `alpha`.
pub fn ks_two_sample_critical(n: usize, m: usize, alpha: f64) -> f64 {
    ((2.0 / alpha).ln() / 2.0).sqrt() * ((n + m) as f64 / (n as f64 * m as f64)).sqrt()
}

/// Standard normal cdf.
pub fn normal_cdf(x: f64) -> f64 {
    Normal::standard().cdf(x)
}

/// Least-squares line fit; returns `(slope, intercept, r2)`.
pub fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    assert_eq!(xs.len(), ys.len());
    let (mx, my) = (mean(xs), mean(ys));
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r2 = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    (slope, intercept, r2)
}

/// Log-log survival-slope fit over the deep tail.
///
/// Points enter the regression where the empirical survival sits inside one
/// decade `[s_lo, 10 s_lo]`, with `s_lo` chosen so the rarest point still has
/// `min_exceed` exceedances; shallower data (pre-asymptotic) and the noisy
/// extreme order statistics are both excluded.
pub fn tail_slope(samples: &[f64], min_exceed: usize) -> Result<(f64, f64, f64), StatsError> {
    let n = samples.len();
    if n < 10 * min_exceed {
        return Err(StatsError::TooFewSamples { need: 10 * min_exceed, got: n });
    }
    let mut xs = samples.to_vec();
    xs.sort_unstable_by(|a, b| a.total_cmp(b));
    let s_lo = min_exceed as f64 / n as f64;
    let s_hi = (10.0 * s_lo).min(0.25);
    let mut log_t = Vec::new();
    let mut log_s = Vec::new();
    for (i, x) in xs.iter().enumerate() {
        let surv = (n - i - 1) as f64 / n as f64;
        if surv >= s_lo && surv <= s_hi && *x > 0.0 {
            log_t.push(x.ln());
            log_s.push(surv.ln());
        }
    }
    if log_t.len() < 10 || log_t.first() == log_t.last() {
        return Err(StatsError::Degenerate("tail window has no spread".into()));
    }
    Ok(linear_fit(&log_t, &log_s))
}

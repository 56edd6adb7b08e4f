//! Coupling sanity + regeneration cycle economics.
//!
//! cargo run --release -p combustion-core --example regen_pilot

use std::time::Instant;

use combustion_core::auxiliary::{aux_front, estimate_alpha};
use combustion_core::model::ModelParams;
use combustion_core::renewal::{increments, regeneration_scan, revocation_fraction, RenewalParams, StopResult};
use combustion_core::run::{run_coupled, RunConfig};
use combustion_core::walk::PathStore;

fn main() {
    let params = ModelParams::new(2, 10, 42).unwrap();
    let alpha = estimate_alpha(&params, 1000.0, 32);
    println!("alpha_hat = {:.4} +- {:.4}", alpha.alpha_hat, alpha.stderr);
    let rp = RenewalParams::auto(params.m, alpha.alpha_hat);
    println!(
        "renewal: alpha' = {:.4}, lead = {}, W = {:.1}",
        rp.alpha_prime, rp.lead, rp.confirm_window
    );

    // Pathwise coupling check on a handful of runs.
    let t0 = Instant::now();
    let mut viol_front = 0u64;
    let mut viol_rho = 0u64;
    let mut checked_rho = 0u64;
    for seed in 0..10 {
        let (_, rec) = run_coupled(params, params.a, seed, &RunConfig::horizon(1000.0));
        let store = PathStore::new(seed);
        let aux = aux_front(0, &store, &params, 1000.0);
        // r-tilde <= r at every front step time of the aux run and at every
        // advance time of the coupled run.
        for (t, r) in &rec.front_traj {
            if aux.front_at(*t) > *r {
                viol_front += 1;
            }
        }
        // rho_k <= nu_k for all k computed.
        let mut last_t = 0.0;
        let nus = &aux.nus;
        for (k, (t, _)) in rec.front_traj.iter().enumerate() {
            if k < nus.len() {
                let rho = t - last_t;
                checked_rho += 1;
                if rho > nus[k] + 1e-12 {
                    viol_rho += 1;
                }
            }
            last_t = *t;
        }
    }
    println!(
        "coupling: {} front violations, {} / {} rho>nu violations ({:.2?})",
        viol_front,
        viol_rho,
        checked_rho,
        t0.elapsed()
    );

    // Regeneration economics on a batch.
    let t0 = Instant::now();
    let mut all_incs = Vec::new();
    let mut cycles = 0usize;
    let mut confirmed = 0usize;
    let mut lag_fired = 0usize;
    let mut intr_fired = 0usize;
    let mut revoked_total = 0.0;
    let mut revoked_checked = 0usize;
    let horizon = 1000.0;
    for seed in 100..120 {
        let (_, rec) = run_coupled(params, params.a, seed, &RunConfig::horizon(horizon));
        let store = PathStore::new(seed);
        let out = regeneration_scan(&rec, &store, &rp);
        cycles += out.cycles.len();
        confirmed += out.records.len();
        for c in &out.cycles {
            if matches!(c.lag, StopResult::Finite(_)) {
                lag_fired += 1;
            }
            if matches!(c.intrusion, StopResult::Finite(_)) {
                intr_fired += 1;
            }
        }
        let (frac, n) = revocation_fraction(&rec, &store, &rp, &out.records);
        revoked_total += frac * n as f64;
        revoked_checked += n;
        all_incs.extend(increments(&out.records));
    }
    let dt = t0.elapsed();
    println!(
        "scan: {} cycles, {} confirmed ({:.1}%), lag fired {}, intrusion fired {}",
        cycles,
        confirmed,
        100.0 * confirmed as f64 / cycles.max(1) as f64,
        lag_fired,
        intr_fired
    );
    println!(
        "increments: {} total over 20 runs of T={horizon} ({:.2?})",
        all_incs.len(),
        dt
    );
    if !all_incs.is_empty() {
        let mean_dk = all_incs.iter().map(|&(dk, _)| dk).sum::<f64>() / all_incs.len() as f64;
        let mean_dr = all_incs.iter().map(|&(_, dr)| dr as f64).sum::<f64>() / all_incs.len() as f64;
        println!(
            "mean dk = {:.2}, mean dr = {:.2}, v_regen = {:.4}",
            mean_dk,
            mean_dr,
            mean_dr / mean_dk
        );
        let v = mean_dr / mean_dk;
        let s2 = all_incs.iter().map(|&(dk, dr)| (dr as f64 - v * dk).powi(2)).sum::<f64>()
            / all_incs.len() as f64
            / mean_dk;
        println!("sigma2 ~ {:.4}", s2);
    }
    println!(
        "revocations at 2W: {} / {}",
        revoked_total, revoked_checked
    );
}

//! Scan the line slope for regeneration economics.
//!
//! cargo run --release -p combustion-core --example alpha_scan

use std::time::Instant;

use combustion_core::model::ModelParams;
use combustion_core::renewal::{increments, regeneration_scan, RenewalParams, StopResult};
use combustion_core::run::{run_coupled, RunConfig};
use combustion_core::walk::PathStore;

fn main() {
    let params = ModelParams::new(2, 10, 42).unwrap();
    let alpha_hat = 0.7023;
    let horizon = 900.0;
    let runs: Vec<_> = (200..230u64)
        .map(|seed| {
            let (_, rec) = run_coupled(params, params.a, seed, &RunConfig::horizon(horizon));
            (seed, rec)
        })
        .collect();
    println!("ratio  alpha'   cycles confirmed  d%   lagF intrF  incs  mean_dk  mean_dr  t(s)");
    for ratio in [0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9] {
        let rp = RenewalParams {
            alpha_prime: ratio * alpha_hat,
            lead: params.m as i64,
            confirm_window: 200.0 / alpha_hat,
        };
        let t0 = Instant::now();
        let mut cycles = 0;
        let mut confirmed = 0;
        let mut lag_f = 0;
        let mut intr_f = 0;
        let mut incs = Vec::new();
        for (seed, rec) in &runs {
            let store = PathStore::new(*seed);
            let out = regeneration_scan(rec, &store, &rp);
            cycles += out.cycles.len();
            confirmed += out.records.len();
            lag_f += out.cycles.iter().filter(|c| matches!(c.lag, StopResult::Finite(_))).count();
            intr_f +=
                out.cycles.iter().filter(|c| matches!(c.intrusion, StopResult::Finite(_))).count();
            incs.extend(increments(&out.records));
        }
        let n = incs.len().max(1) as f64;
        let mean_dk = incs.iter().map(|&(dk, _)| dk).sum::<f64>() / n;
        let mean_dr = incs.iter().map(|&(_, dr)| dr as f64).sum::<f64>() / n;
        println!(
            "{:.2}   {:.4}  {:5}  {:5}  {:5.1} {:5} {:5} {:5}  {:8.1} {:8.1}  {:.2}",
            ratio,
            rp.alpha_prime,
            cycles,
            confirmed,
            100.0 * confirmed as f64 / cycles.max(1) as f64,
            lag_f,
            intr_f,
            incs.len(),
            mean_dk,
            mean_dr,
            t0.elapsed().as_secs_f64()
        );
    }
}

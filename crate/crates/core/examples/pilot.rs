//! Quick pilot: auxiliary speed, front speed, engine throughput.
//!
//! cargo run --release -p combustion-core --example pilot

use std::time::Instant;

use combustion_core::auxiliary::estimate_alpha;
use combustion_core::model::{ModelParams, Occupancy};
use combustion_core::run::{run_coupled, run_fast, RunConfig};

fn main() {
    let params = ModelParams::new(2, 10, 42).unwrap();

    let t0 = Instant::now();
    let alpha = estimate_alpha(&params, 1000.0, 32);
    println!(
        "alpha_hat = {:.4} +- {:.4}   ({} replicas, horizon 1000, {:.2?})",
        alpha.alpha_hat,
        alpha.stderr,
        alpha.replicas,
        t0.elapsed()
    );

    let t0 = Instant::now();
    let cfg = RunConfig::horizon(2000.0);
    let mut rates = Vec::new();
    let mut events = 0u64;
    for seed in 0..8 {
        let s = run_fast(params, &Occupancy::single_site(2), seed, &cfg);
        rates.push(s.r_end as f64 / s.t_end);
        events += s.events.total();
    }
    let dt = t0.elapsed();
    let v: f64 = rates.iter().sum::<f64>() / rates.len() as f64;
    println!(
        "fast:    v ~ {:.4}  ({} events in {:.2?}, {:.1} Mev/s)",
        v,
        events,
        dt,
        events as f64 / dt.as_secs_f64() / 1e6
    );

    let t0 = Instant::now();
    let mut events = 0u64;
    let mut rates = Vec::new();
    for seed in 0..4 {
        let (s, rec) = run_coupled(params, 2, seed, &RunConfig::horizon(500.0));
        rates.push(s.r_end as f64 / s.t_end);
        events += s.events.total();
        if seed == 0 {
            println!(
                "coupled: run 0: r_end {}, {} jumps recorded, {} advances, {} kills, {} ghosts-jumps",
                s.r_end,
                rec.jumps.len(),
                s.events.front_advances,
                s.events.kills,
                s.events.ghost_jumps
            );
        }
    }
    let dt = t0.elapsed();
    let v: f64 = rates.iter().sum::<f64>() / rates.len() as f64;
    println!(
        "coupled: v ~ {:.4}  ({} events in {:.2?}, {:.1} Mev/s)",
        v,
        events,
        dt,
        events as f64 / dt.as_secs_f64() / 1e6
    );
}

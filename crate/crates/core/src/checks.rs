//! Reusable invariant checkers behind the `verify` command and the
//! acceptance suite. Checkers consume observations rather than engines, so
//! a doctored stream can prove they actually fire.

use serde::{Deserialize, Serialize};

use crate::fast::FastEngine;
use crate::model::{ModelParams, Occupancy};
use crate::run::EventKind;

/// Outcome of one named check.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub pass: bool,
    pub measured: f64,
    pub bound: f64,
    pub detail: String,
}

impl CheckResult {
    pub fn new(name: &str, pass: bool, measured: f64, bound: f64, detail: String) -> Self {
        Self { name: name.to_string(), pass, measured, bound, detail }
    }
}

/// Streaming capacity/front checker fed one observation per event.
#[derive(Clone, Debug, Default)]
pub struct CapacityChecker {
    pub capacity_violations: u64,
    pub front_violations: u64,
    pub support_violations: u64,
    pub events: u64,
}

/// What the checker sees after one event is applied.
#[derive(Clone, Copy, Debug)]
pub struct EventObservation {
    pub kind: EventKind,
    pub front_before: i64,
    pub front_after: i64,
    /// Count at the fresh front right after an advance (ignored otherwise).
    pub front_count_after: u32,
    /// Counts at the two touched sites after the event.
    pub from_count: u32,
    pub to_count: u32,
}

impl CapacityChecker {
    pub fn observe(&mut self, params: &ModelParams, obs: &EventObservation) {
        self.events += 1;
        if obs.from_count > params.m || obs.to_count > params.m {
            self.capacity_violations += 1;
        }
        match obs.kind {
            EventKind::FrontAdvance => {
                if obs.front_after != obs.front_before + 1 {
                    self.front_violations += 1;
                }
                if obs.front_count_after != params.a {
                    self.support_violations += 1;
                }
            }
            _ => {
                if obs.front_after != obs.front_before {
                    self.front_violations += 1;
                }
            }
        }
    }

    pub fn total_violations(&self) -> u64 {
        self.capacity_violations + self.front_violations + self.support_violations
    }
}

/// Run the count-level engine for `events` events, feeding every transition
/// through a [`CapacityChecker`].
pub fn sweep_fast_invariants(
    params: ModelParams,
    init: &Occupancy,
    seed: u64,
    events: u64,
) -> CapacityChecker {
    let mut eng = FastEngine::new(params, init, seed);
    let mut checker = CapacityChecker::default();
    for _ in 0..events {
        let front_before = eng.front();
        let ev = eng.step();
        checker.observe(
            &params,
            &EventObservation {
                kind: ev.kind,
                front_before,
                front_after: eng.front(),
                front_count_after: eng.front_count(),
                from_count: eng.count_at(ev.from),
                to_count: eng.count_at(ev.to),
            },
        );
    }
    checker
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clean_sweep_has_no_violations() {
        let p = ModelParams::new(2, 10, 0).unwrap();
        let checker = sweep_fast_invariants(p, &Occupancy::single_site(1), 42, 100_000);
        assert_eq!(checker.total_violations(), 0);
        assert_eq!(checker.events, 100_000);
    }

    #[test]
    fn doctored_stream_trips_the_checker() {
        // Negative control: feed a count above M and a fresh front without
        // its full complement; both must be flagged.
        let p = ModelParams::new(2, 10, 0).unwrap();
        let mut checker = CapacityChecker::default();
        checker.observe(
            &p,
            &EventObservation {
                kind: EventKind::RightJump,
                front_before: 0,
                front_after: 0,
                front_count_after: 1,
                from_count: 0,
                to_count: p.m + 1,
            },
        );
        assert_eq!(checker.capacity_violations, 1);
        checker.observe(
            &p,
            &EventObservation {
                kind: EventKind::FrontAdvance,
                front_before: 0,
                front_after: 1,
                front_count_after: p.a - 1,
                from_count: 0,
                to_count: p.a - 1,
            },
        );
        assert_eq!(checker.support_violations, 1);
        checker.observe(
            &p,
            &EventObservation {
                kind: EventKind::LeftJump,
                front_before: 3,
                front_after: 4,
                front_count_after: 2,
                from_count: 1,
                to_count: 1,
            },
        );
        assert_eq!(checker.front_violations, 1);
        assert_eq!(checker.total_violations(), 3);
    }
}

//! Run orchestration: stop rules, trajectory summaries, batch execution.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::coupled::{CoupledEngine, CoupledRunRecord};
use crate::fast::FastEngine;
use crate::model::{ModelParams, Occupancy};
use crate::rng::replica_seed;
use crate::walk::Label;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    LeftJump,
    RightJump,
    FrontAdvance,
    Kill,
}

/// One transition of either engine. `label` is present in the label-level
/// engine (for kills: the label actually removed), absent in the count view.
#[derive(Clone, Copy, Debug)]
pub struct Event {
    pub t: f64,
    pub kind: EventKind,
    pub label: Option<Label>,
    pub from: i64,
    pub to: i64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "value")]
pub enum StopRule {
    /// Run until the clock passes `t`.
    Horizon(f64),
    /// Run until the front reaches site `y`.
    FrontHit(i64),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopCause {
    Horizon,
    FrontHit,
    EventBudget,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Fast,
    Coupled,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub stop: StopRule,
    /// Hard cap on event count; exceeding it is reported as a distinct
    /// censoring cause, never silently truncated.
    pub max_events: u64,
    /// Number of equally spaced trajectory samples over a horizon run.
    pub sample_points: u32,
}

impl RunConfig {
    pub fn horizon(t: f64) -> Self {
        Self { stop: StopRule::Horizon(t), max_events: u64::MAX, sample_points: 10 }
    }

    pub fn front_hit(y: i64) -> Self {
        Self { stop: StopRule::FrontHit(y), max_events: u64::MAX, sample_points: 0 }
    }

    pub fn with_max_events(mut self, cap: u64) -> Self {
        self.max_events = cap;
        self
    }

    fn sample_times(&self) -> Vec<f64> {
        match self.stop {
            StopRule::Horizon(t) if self.sample_points > 0 => {
                (1..=self.sample_points).map(|i| t * i as f64 / self.sample_points as f64).collect()
            }
            _ => Vec::new(),
        }
    }
}

/// `(t, r_t, count at r_t)` at one sample time.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub t: f64,
    pub r: i64,
    pub nr: u32,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventCounts {
    pub left_jumps: u64,
    pub right_jumps: u64,
    pub front_advances: u64,
    pub kills: u64,
    pub ghost_jumps: u64,
}

impl EventCounts {
    pub fn record(&mut self, kind: EventKind) {
        match kind {
            EventKind::LeftJump => self.left_jumps += 1,
            EventKind::RightJump => self.right_jumps += 1,
            EventKind::FrontAdvance => self.front_advances += 1,
            EventKind::Kill => self.kills += 1,
        }
    }

    pub fn total(&self) -> u64 {
        self.left_jumps + self.right_jumps + self.front_advances + self.kills + self.ghost_jumps
    }
}

/// Per-replica observables; one JSON object per run in JSONL output.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub params: ModelParams,
    pub replica: u64,
    pub seed: u64,
    pub mode: Mode,
    pub stop: StopRule,
    pub stop_cause: StopCause,
    pub t_end: f64,
    pub r_end: i64,
    pub nr_end: u32,
    pub samples: Vec<Sample>,
    pub events: EventCounts,
}

impl RunSummary {
    /// Front position at time `t` (last sample or endpoint not after `t`).
    pub fn front_at(&self, t: f64) -> Option<i64> {
        if t >= self.t_end {
            return Some(self.r_end);
        }
        self.samples.iter().rev().find(|s| s.t <= t).map(|s| s.r)
    }
}

/// State at the fresh sample time, reconstructed from the post-event state
/// by undoing the single event that crossed it.
#[cold]
fn pre_event_state(eng: &FastEngine, ev: &Event) -> (i64, u32) {
    match ev.kind {
        EventKind::FrontAdvance => (eng.front() - 1, eng.count_at(eng.front() - 1) + 1),
        _ => {
            let r = eng.front();
            let mut nr = eng.count_at(r);
            if ev.from == r {
                nr += 1;
            }
            if ev.to == r && !matches!(ev.kind, EventKind::Kill) {
                nr -= 1;
            }
            (r, nr)
        }
    }
}

/// Drive the count-level engine to the stop rule.
pub fn run_fast(params: ModelParams, init: &Occupancy, seed: u64, config: &RunConfig) -> RunSummary {
    let mut eng = FastEngine::new(params, init, seed);
    let sample_times = config.sample_times();
    let mut samples = Vec::with_capacity(sample_times.len());
    let mut next_sample = 0;
    let mut counts = EventCounts::default();
    let (horizon, front_target) = match config.stop {
        StopRule::Horizon(t) => (t, i64::MAX),
        StopRule::FrontHit(y) => (f64::INFINITY, y),
    };
    let stop_cause;
    loop {
        if eng.clock() >= horizon {
            stop_cause = StopCause::Horizon;
            break;
        }
        if eng.front() >= front_target {
            stop_cause = StopCause::FrontHit;
            break;
        }
        if eng.events() >= config.max_events {
            stop_cause = StopCause::EventBudget;
            break;
        }
        let ev = eng.step();
        if next_sample < sample_times.len() && sample_times[next_sample] < ev.t {
            let (r, nr) = pre_event_state(&eng, &ev);
            while next_sample < sample_times.len() && sample_times[next_sample] < ev.t {
                samples.push(Sample { t: sample_times[next_sample], r, nr });
                next_sample += 1;
            }
        }
        counts.record(ev.kind);
    }
    // Samples at or past the stop time take the final state.
    while next_sample < sample_times.len() {
        samples.push(Sample { t: sample_times[next_sample], r: eng.front(), nr: eng.front_count() });
        next_sample += 1;
    }
    let t_end = match (stop_cause, config.stop) {
        (StopCause::Horizon, StopRule::Horizon(t)) => t,
        _ => eng.clock(),
    };
    RunSummary {
        params,
        replica: 0,
        seed,
        mode: Mode::Fast,
        stop: config.stop,
        stop_cause,
        t_end,
        r_end: eng.front(),
        nr_end: eng.front_count(),
        samples,
        events: counts,
    }
}

/// Drive the label-level engine; also returns the recorded trajectory needed
/// by the regeneration scan.
pub fn run_coupled(
    params: ModelParams,
    n0: u32,
    seed: u64,
    config: &RunConfig,
) -> (RunSummary, CoupledRunRecord) {
    let mut eng = CoupledEngine::init_canonical(params, n0, seed).expect("valid n0");
    let sample_times = config.sample_times();
    let mut samples = Vec::with_capacity(sample_times.len());
    let mut next_sample = 0;
    let stop_cause;
    loop {
        match config.stop {
            StopRule::Horizon(t) if eng.clock() >= t => {
                stop_cause = StopCause::Horizon;
                break;
            }
            StopRule::FrontHit(y) if eng.front() >= y => {
                stop_cause = StopCause::FrontHit;
                break;
            }
            _ if eng.events() >= config.max_events => {
                stop_cause = StopCause::EventBudget;
                break;
            }
            _ => {}
        }
        let (r, nr) = (eng.front(), eng.front_count());
        let ev = eng.step();
        while next_sample < sample_times.len() && sample_times[next_sample] < ev.t {
            samples.push(Sample { t: sample_times[next_sample], r, nr });
            next_sample += 1;
        }
    }
    while next_sample < sample_times.len() {
        samples.push(Sample { t: sample_times[next_sample], r: eng.front(), nr: eng.front_count() });
        next_sample += 1;
    }
    let t_end = match (stop_cause, config.stop) {
        (StopCause::Horizon, StopRule::Horizon(t)) => t,
        _ => eng.clock(),
    };
    let summary = RunSummary {
        params,
        replica: 0,
        seed,
        mode: Mode::Coupled,
        stop: config.stop,
        stop_cause,
        t_end,
        r_end: eng.front(),
        nr_end: eng.front_count(),
        samples,
        events: *eng.event_counts(),
    };
    (summary, eng.into_record())
}

/// Independent replicas of a fast run. Replica `i` uses the seed derived
/// from `params.seed` and `i`, so output is invariant to scheduling.
pub fn run_fast_batch(params: ModelParams, init: &Occupancy, replicas: u64, config: &RunConfig) -> Vec<RunSummary> {
    (0..replicas)
        .into_par_iter()
        .map(|i| {
            let mut s = run_fast(params, init, replica_seed(params.seed, i), config);
            s.replica = i;
            s
        })
        .collect()
}

pub fn run_coupled_batch(
    params: ModelParams,
    n0: u32,
    replicas: u64,
    config: &RunConfig,
) -> Vec<(RunSummary, CoupledRunRecord)> {
    (0..replicas)
        .into_par_iter()
        .map(|i| {
            let (mut s, rec) = run_coupled(params, n0, replica_seed(params.seed, i), config);
            s.replica = i;
            (s, rec)
        })
        .collect()
}

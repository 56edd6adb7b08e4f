//! Label-level engine with ghost tracking.
//!
//! Each live particle is a labelled walk from the shared [`PathStore`],
//! time-shifted to its activation instant. A jump onto the fresh site `r+1`
//! advances the front and activates labels `(r+1, 1..a)` there; a jump that
//! leaves a site with `M+1` live particles kills the smallest label present.
//! Killed labels become ghosts: their walks keep evolving (the count of
//! ever-activated labels born left of a reference front is what the
//! intrusion detector watches), they just stop counting for occupancy.
//!
//! The engine records the full jump log and front trajectory so a finished
//! run can be scanned for regenerations offline.

use std::collections::BinaryHeap;

use crate::model::{ModelError, ModelParams, Occupancy};
use crate::run::{Event, EventCounts, EventKind};
use crate::walk::{Label, PathStore, WalkPath};

struct Tracked {
    label: Label,
    path: WalkPath,
    /// Activation instant; the walk is evaluated at `t - shift`.
    shift: f64,
    /// Walk-relative clock of the last consumed event.
    rel_clock: f64,
    next_event: u64,
    pos: i64,
    init_pos: i64,
    ghost: bool,
}

/// Heap entry for the next pending walk event of one tracked label.
/// Min-ordered by `(time, label)`; the label breaks exact float ties.
#[derive(PartialEq)]
struct Pending {
    time: f64,
    label: Label,
    arena: u32,
}

impl Eq for Pending {}

impl Ord for Pending {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        other
            .time
            .total_cmp(&self.time)
            .then_with(|| other.label.cmp(&self.label))
    }
}

impl PartialOrd for Pending {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

/// Activation metadata kept for the offline regeneration scan.
#[derive(Clone, Copy, Debug)]
pub struct LabelMeta {
    pub label: Label,
    pub birth_time: f64,
    pub init_pos: i64,
}

/// One jump in the recorded log (live and ghost alike).
#[derive(Clone, Copy, Debug)]
pub struct JumpEvt {
    pub t: f64,
    pub arena: u32,
    pub pos: i32,
}

/// Everything the regeneration scan needs from a finished coupled run.
pub struct CoupledRunRecord {
    pub params: ModelParams,
    pub seed: u64,
    pub origin_front: i64,
    pub labels: Vec<LabelMeta>,
    pub jumps: Vec<JumpEvt>,
    /// `(time, front after the advance)`, one entry per ignition.
    pub front_traj: Vec<(f64, i64)>,
    /// Clock at the end of the run; the record is complete up to here.
    pub end_time: f64,
}

impl CoupledRunRecord {
    /// Front position at time `t`.
    pub fn front_at(&self, t: f64) -> i64 {
        match self.front_traj.partition_point(|&(s, _)| s <= t) {
            0 => self.origin_front,
            k => self.front_traj[k - 1].1,
        }
    }

    /// First time the front reaches `site`, if it does within the record.
    pub fn time_front_reaches(&self, site: i64) -> Option<f64> {
        if site <= self.origin_front {
            return Some(0.0);
        }
        let k = self.front_traj.partition_point(|&(_, r)| r < site);
        self.front_traj.get(k).map(|&(t, _)| t)
    }
}

pub struct CoupledEngine {
    params: ModelParams,
    store: PathStore,
    clock: f64,
    front: i64,
    arena: Vec<Tracked>,
    queue: BinaryHeap<Pending>,
    /// Live arena ids per site over `left..=front`; ghosts excluded.
    site_live: Vec<Vec<u32>>,
    left: i64,
    live_count: u64,
    events: u64,
    counts: EventCounts,
    jumps: Vec<JumpEvt>,
    front_traj: Vec<(f64, i64)>,
}

impl CoupledEngine {
    /// Canonical start: `n0` particles at site 0, front 0, labels assigned in
    /// decreasing order starting from `(0, a-1)` and continuing through
    /// `(-1, a-1), (-1, a-2), ...`, all positioned at 0.
    pub fn init_canonical(params: ModelParams, n0: u32, seed: u64) -> Result<Self, ModelError> {
        if n0 < 1 || n0 > params.m {
            return Err(ModelError::BadInitialCount { n0, m: params.m });
        }
        let mut eng = Self {
            params,
            store: PathStore::new(seed),
            clock: 0.0,
            front: 0,
            arena: Vec::new(),
            queue: BinaryHeap::new(),
            site_live: vec![Vec::new()],
            left: 0,
            live_count: 0,
            events: 0,
            counts: EventCounts::default(),
            jumps: Vec::new(),
            front_traj: Vec::new(),
        };
        let per_site = params.labels_per_site();
        let mut site = 0i64;
        let mut index = per_site;
        for _ in 0..n0 {
            eng.activate(Label::new(site, index), 0.0, 0);
            if index == 1 {
                site -= 1;
                index = per_site;
            } else {
                index -= 1;
            }
        }
        Ok(eng)
    }

    pub fn params(&self) -> ModelParams {
        self.params
    }

    pub fn store(&self) -> PathStore {
        self.store
    }

    pub fn clock(&self) -> f64 {
        self.clock
    }

    pub fn front(&self) -> i64 {
        self.front
    }

    pub fn events(&self) -> u64 {
        self.events
    }

    pub fn event_counts(&self) -> &EventCounts {
        &self.counts
    }

    pub fn live_count(&self) -> u64 {
        self.live_count
    }

    pub fn ghost_count(&self) -> u64 {
        self.arena.len() as u64 - self.live_count
    }

    pub fn front_count(&self) -> u32 {
        self.site_live[(self.front - self.left) as usize].len() as u32
    }

    fn activate(&mut self, label: Label, now: f64, pos: i64) {
        let path = self.store.path_for(label);
        let arena = self.arena.len() as u32;
        let first = path.event(0);
        self.queue.push(Pending { time: now + first.hold, label, arena });
        self.arena.push(Tracked {
            label,
            path,
            shift: now,
            rel_clock: 0.0,
            next_event: 0,
            pos,
            init_pos: pos,
            ghost: false,
        });
        self.site_slot(pos).push(arena);
        self.live_count += 1;
    }

    fn site_slot(&mut self, site: i64) -> &mut Vec<u32> {
        if site < self.left {
            let pad = (self.left - site).max(16) as usize;
            let mut grown = Vec::with_capacity(pad + self.site_live.len());
            grown.resize_with(pad, Vec::new);
            grown.append(&mut self.site_live);
            self.site_live = grown;
            self.left -= pad as i64;
        } else {
            let need = (site - self.left) as usize + 1;
            if need > self.site_live.len() {
                self.site_live.resize_with(need, Vec::new);
            }
        }
        &mut self.site_live[(site - self.left) as usize]
    }

    fn remove_live(&mut self, site: i64, arena: u32) {
        let slot = &mut self.site_live[(site - self.left) as usize];
        let at = slot.iter().position(|&id| id == arena).expect("live label is in its site slot");
        slot.swap_remove(at);
    }

    /// Smallest label currently at `site`.
    fn min_label_at(&self, site: i64) -> u32 {
        let slot = &self.site_live[(site - self.left) as usize];
        *slot
            .iter()
            .min_by_key(|&&id| self.arena[id as usize].label)
            .expect("kill only fires on occupied sites")
    }

    /// Advance by one walk event and return the transition.
    pub fn step(&mut self) -> Event {
        let Pending { time, arena, .. } = self.queue.pop().expect("tracked labels always pending");
        self.events += 1;
        self.clock = time;

        let id = arena as usize;
        let ev = self.arena[id].path.event(self.arena[id].next_event);
        self.arena[id].next_event += 1;
        self.arena[id].rel_clock += ev.hold;
        let next = self.arena[id].path.event(self.arena[id].next_event);
        self.queue.push(Pending {
            time: self.arena[id].shift + self.arena[id].rel_clock + next.hold,
            label: self.arena[id].label,
            arena,
        });

        let from = self.arena[id].pos;
        let to = from + ev.step as i64;
        self.arena[id].pos = to;
        self.jumps.push(JumpEvt { t: time, arena, pos: to as i32 });

        if self.arena[id].ghost {
            self.counts.ghost_jumps += 1;
            let kind = if ev.step > 0 { EventKind::RightJump } else { EventKind::LeftJump };
            return Event { t: time, kind, label: Some(self.arena[id].label), from, to };
        }

        let label = self.arena[id].label;
        if to > self.front {
            // Ignition: jumper moves up, labels (to, 1..a) activate there.
            debug_assert_eq!(to, self.front + 1);
            self.remove_live(from, arena);
            self.site_slot(to).push(arena);
            self.front = to;
            for i in 1..self.params.a {
                self.activate(Label::new(to, i), time, to);
            }
            self.front_traj.push((time, to));
            self.counts.record(EventKind::FrontAdvance);
            return Event { t: time, kind: EventKind::FrontAdvance, label: Some(label), from, to };
        }

        self.remove_live(from, arena);
        self.site_slot(to).push(arena);
        if self.site_live[(to - self.left) as usize].len() as u32 > self.params.m {
            // Over capacity: the smallest label at the site is killed.
            let victim = self.min_label_at(to);
            self.remove_live(to, victim);
            self.arena[victim as usize].ghost = true;
            self.live_count -= 1;
            self.counts.record(EventKind::Kill);
            return Event {
                t: time,
                kind: EventKind::Kill,
                label: Some(self.arena[victim as usize].label),
                from,
                to,
            };
        }
        let kind = if ev.step > 0 { EventKind::RightJump } else { EventKind::LeftJump };
        self.counts.record(kind);
        Event { t: time, kind, label: Some(label), from, to }
    }

    /// Immutable snapshot of the labelled state.
    pub fn snapshot(&self) -> LabeledState {
        let mut live = std::collections::BTreeMap::new();
        let mut ghosts = std::collections::BTreeMap::new();
        let mut birth_times = std::collections::BTreeMap::new();
        for t in &self.arena {
            birth_times.insert(t.label, t.shift);
            if t.ghost {
                ghosts.insert(t.label, t.pos);
            } else {
                live.insert(t.label, t.pos);
            }
        }
        LabeledState { front: self.front, live, ghosts, birth_times }
    }

    pub fn into_record(self) -> CoupledRunRecord {
        CoupledRunRecord {
            params: self.params,
            seed: self.store.seed(),
            origin_front: 0,
            labels: self
                .arena
                .iter()
                .map(|t| LabelMeta { label: t.label, birth_time: t.shift, init_pos: t.init_pos })
                .collect(),
            jumps: self.jumps,
            front_traj: self.front_traj,
            end_time: self.clock,
        }
    }
}

/// Label-level state: front, live labels with positions, ghost labels with
/// positions, activation times. Ghost positions may exceed the front.
#[derive(Clone, Debug, PartialEq)]
pub struct LabeledState {
    pub front: i64,
    pub live: std::collections::BTreeMap<Label, i64>,
    pub ghosts: std::collections::BTreeMap<Label, i64>,
    pub birth_times: std::collections::BTreeMap<Label, f64>,
}

/// Per-site counts split by birth side of a reference front `r0`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SplitCounts {
    /// Live labels born at or right of `r0`.
    pub zeta: std::collections::BTreeMap<i64, u32>,
    /// Live labels born left of `r0`.
    pub phi: std::collections::BTreeMap<i64, u32>,
    /// Live-or-ghost labels born left of `r0`.
    pub phi_bar: std::collections::BTreeMap<i64, u32>,
}

impl LabeledState {
    /// Occupancy of live labels only.
    pub fn project_counts(&self, params: &ModelParams) -> Occupancy {
        let leftmost = self.live.values().copied().min().unwrap_or(self.front);
        let mut counts = vec![0u32; (self.front - leftmost + 1) as usize];
        for &pos in self.live.values() {
            counts[(pos - leftmost) as usize] += 1;
        }
        Occupancy::from_counts(leftmost, counts, params).expect("live counts satisfy the capacity bound")
    }

    /// Split counts relative to the reference front `r0`.
    pub fn counts_split(&self, r0: i64) -> SplitCounts {
        let mut split = SplitCounts::default();
        for (label, &pos) in &self.live {
            if label.site >= r0 {
                *split.zeta.entry(pos).or_insert(0) += 1;
            } else {
                *split.phi.entry(pos).or_insert(0) += 1;
                *split.phi_bar.entry(pos).or_insert(0) += 1;
            }
        }
        for (label, &pos) in &self.ghosts {
            if label.site < r0 {
                *split.phi_bar.entry(pos).or_insert(0) += 1;
            }
        }
        split
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(a: u32, m: u32) -> ModelParams {
        ModelParams::new(a, m, 0).unwrap()
    }

    #[test]
    fn canonical_init_small_cases() {
        let eng = CoupledEngine::init_canonical(params(2, 10), 1, 0).unwrap();
        let s = eng.snapshot();
        assert_eq!(s.live.keys().copied().collect::<Vec<_>>(), vec![Label::new(0, 1)]);
        assert_eq!(s.live[&Label::new(0, 1)], 0);

        let eng = CoupledEngine::init_canonical(params(3, 10), 2, 0).unwrap();
        let s = eng.snapshot();
        assert_eq!(
            s.live.keys().copied().collect::<Vec<_>>(),
            vec![Label::new(0, 1), Label::new(0, 2)]
        );
        assert!(s.live.values().all(|&p| p == 0));

        let eng = CoupledEngine::init_canonical(params(2, 10), 3, 0).unwrap();
        let s = eng.snapshot();
        assert_eq!(
            s.live.keys().copied().collect::<Vec<_>>(),
            vec![Label::new(-2, 1), Label::new(-1, 1), Label::new(0, 1)]
        );
        assert!(s.live.values().all(|&p| p == 0));
    }

    #[test]
    fn init_rejects_bad_counts() {
        assert!(CoupledEngine::init_canonical(params(2, 10), 0, 0).is_err());
        assert!(CoupledEngine::init_canonical(params(2, 10), 11, 0).is_err());
    }

    #[test]
    fn first_ignition_activates_front_labels() {
        let p = params(2, 10);
        for seed in 0..50 {
            let mut eng = CoupledEngine::init_canonical(p, 1, seed).unwrap();
            let ev = eng.step();
            if matches!(ev.kind, EventKind::FrontAdvance) {
                let s = eng.snapshot();
                assert_eq!(s.front, 1);
                assert!(s.live.contains_key(&Label::new(1, 1)));
                assert_eq!(s.live[&Label::new(1, 1)], 1);
                assert_eq!(s.live[&Label::new(0, 1)], 1);
                assert_eq!(eng.front_count(), 2);
                return;
            }
        }
        panic!("no ignition in 50 seeds");
    }

    #[test]
    fn capacity_is_restored_by_killing_smallest_label() {
        let p = params(2, 2);
        let mut eng = CoupledEngine::init_canonical(p, 2, 123).unwrap();
        for _ in 0..50_000 {
            let ev = eng.step();
            if matches!(ev.kind, EventKind::Kill) {
                let s = eng.snapshot();
                // Killed label became a ghost and the site is back at M.
                let victim = ev.label.unwrap();
                assert!(s.ghosts.contains_key(&victim));
                let at_site =
                    s.live.iter().filter(|(_, &pos)| pos == ev.to).map(|(l, _)| *l).collect::<Vec<_>>();
                assert_eq!(at_site.len(), 2);
                // Everyone still at the site outranks the victim.
                assert!(at_site.iter().all(|l| *l > victim));
                return;
            }
        }
        panic!("no kill in 50k events at M=2");
    }

    #[test]
    fn projection_total_matches_live_count() {
        let p = params(2, 3);
        let mut eng = CoupledEngine::init_canonical(p, 2, 9).unwrap();
        for _ in 0..20_000 {
            eng.step();
        }
        let s = eng.snapshot();
        let occ = s.project_counts(&p);
        assert_eq!(occ.total(), eng.live_count());
        assert_eq!(occ.front(), eng.front());
        // Capacity bound on the projection.
        for (_, c) in occ.support() {
            assert!(c <= p.m);
        }
    }

    #[test]
    fn split_counts_partition_live_labels() {
        let p = params(2, 4);
        let mut eng = CoupledEngine::init_canonical(p, 4, 5).unwrap();
        for _ in 0..20_000 {
            eng.step();
        }
        let s = eng.snapshot();
        for r0 in [0, 3, eng.front()] {
            let split = s.counts_split(r0);
            let zeta: u64 = split.zeta.values().map(|&c| c as u64).sum();
            let phi: u64 = split.phi.values().map(|&c| c as u64).sum();
            assert_eq!(zeta + phi, eng.live_count());
            // phi <= phi_bar pointwise.
            for (site, &c) in &split.phi {
                assert!(split.phi_bar[site] >= c);
            }
        }
    }

    #[test]
    fn phi_bar_empty_right_after_canonical_init() {
        let p = params(2, 10);
        let eng = CoupledEngine::init_canonical(p, 1, 0).unwrap();
        let split = eng.snapshot().counts_split(0);
        assert!(split.phi_bar.is_empty());
    }

    #[test]
    fn ghosts_never_return_and_activation_count_is_monotone() {
        let p = params(2, 2);
        let mut eng = CoupledEngine::init_canonical(p, 2, 77).unwrap();
        let mut seen_ghosts: std::collections::BTreeSet<Label> = Default::default();
        let mut total_activated = 0;
        for _ in 0..30_000 {
            eng.step();
            let s = eng.snapshot();
            for g in s.ghosts.keys() {
                seen_ghosts.insert(*g);
                assert!(!s.live.contains_key(g), "ghost rejoined live");
            }
            let activated = s.live.len() + s.ghosts.len();
            assert!(activated >= total_activated);
            total_activated = activated;
        }
        assert!(!seen_ghosts.is_empty(), "expected kills at M=2");
    }

    #[test]
    fn front_label_invariant_holds() {
        // max over live labels of birth site equals the front.
        let p = params(2, 10);
        let mut eng = CoupledEngine::init_canonical(p, 1, 3).unwrap();
        for _ in 0..5_000 {
            eng.step();
        }
        let s = eng.snapshot();
        let max_birth = s.live.keys().map(|l| l.site).max().unwrap();
        assert_eq!(max_birth, s.front);
    }
}

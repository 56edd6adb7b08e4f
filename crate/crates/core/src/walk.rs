//! Deterministic per-label random-walk path store.
//!
//! Every process in this crate is driven by one family of rate-2 continuous
//! time simple symmetric random walks, one per [`Label`]. A walk's event
//! sequence (holding times and steps) is a pure function of
//! `(master seed, label, event index)`, so a path can be materialized lazily,
//! from any thread, for labels that did not exist when the run started, and
//! two processes handed the same store literally share walks. That sharing is
//! what makes the pathwise comparison between the label-level front and the
//! auxiliary front testable event by event rather than only in law.

use crate::rng;

/// Birthplace label `(site, index)`, ordered lexicographically.
///
/// Indexes run over `1..=a-1`: an ignition leaves the jumper plus `a-1`
/// newborn labels at the fresh site.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Label {
    pub site: i64,
    pub index: u32,
}

impl Label {
    pub fn new(site: i64, index: u32) -> Self {
        debug_assert!(index >= 1);
        Self { site, index }
    }
}

/// One walk event: wait `hold`, then move by `step` (`+1` or `-1`).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WalkEvent {
    pub hold: f64,
    pub step: i8,
}

/// Shared, stateless path store. Cloning is free; all methods are pure.
#[derive(Clone, Copy, Debug)]
pub struct PathStore {
    seed: u64,
}

impl PathStore {
    pub fn new(seed: u64) -> Self {
        Self { seed }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// The unique path of `label` under this store's seed.
    pub fn path_for(&self, label: Label) -> WalkPath {
        let key = rng::absorb(rng::mix64(self.seed ^ 0x77616c6b), label.site as u64, 0x02);
        let key = rng::absorb(key, label.index as u64, 0x03);
        WalkPath { label, key }
    }
}

/// Handle to one label's walk. Events are computed on demand; callers that
/// need a cursor or a cache keep their own (see [`WalkCursor`] and
/// [`RecordCache`]).
#[derive(Clone, Copy, Debug)]
pub struct WalkPath {
    label: Label,
    key: u64,
}

impl WalkPath {
    pub fn label(&self) -> Label {
        self.label
    }

    /// Birth site, i.e. the walk's position at time 0.
    pub fn birth_site(&self) -> i64 {
        self.label.site
    }

    /// The `k`-th event (0-based). Total jump rate 2, fair steps.
    #[inline]
    pub fn event(&self, k: u64) -> WalkEvent {
        let hold_bits = rng::draw(self.key, 2 * k);
        let step_bits = rng::draw(self.key, 2 * k + 1);
        WalkEvent {
            hold: -rng::unit_open(hold_bits).ln() / 2.0,
            step: if step_bits & 1 == 0 { 1 } else { -1 },
        }
    }

    /// Position at time `t >= 0`: birth site plus all steps whose cumulative
    /// holding times are `<= t`.
    pub fn position_at(&self, t: f64) -> i64 {
        debug_assert!(t >= 0.0);
        let mut clock = 0.0;
        let mut pos = self.label.site;
        let mut k = 0;
        loop {
            let ev = self.event(k);
            clock += ev.hold;
            if clock > t {
                return pos;
            }
            pos += ev.step as i64;
            k += 1;
        }
    }

    /// First time `<= horizon` at which the walk sits on `target`, if any.
    pub fn hitting_time(&self, target: i64, horizon: f64) -> Option<f64> {
        debug_assert!(horizon > 0.0);
        let mut clock = 0.0;
        let mut pos = self.label.site;
        if pos == target {
            return Some(0.0);
        }
        let mut k = 0;
        loop {
            let ev = self.event(k);
            clock += ev.hold;
            if clock > horizon {
                return None;
            }
            pos += ev.step as i64;
            if pos == target {
                return Some(clock);
            }
            k += 1;
        }
    }

    /// Iterator over events with their cumulative times.
    pub fn iter(&self) -> WalkCursor {
        WalkCursor { path: *self, clock: 0.0, pos: self.label.site, next_event: 0 }
    }
}

/// Sequential cursor over one path: `(event time, position after the step)`.
#[derive(Clone, Debug)]
pub struct WalkCursor {
    path: WalkPath,
    clock: f64,
    pos: i64,
    next_event: u64,
}

impl WalkCursor {
    pub fn position(&self) -> i64 {
        self.pos
    }

    pub fn clock(&self) -> f64 {
        self.clock
    }
}

impl Iterator for WalkCursor {
    type Item = (f64, i64);

    fn next(&mut self) -> Option<(f64, i64)> {
        let ev = self.path.event(self.next_event);
        self.next_event += 1;
        self.clock += ev.hold;
        self.pos += ev.step as i64;
        Some((self.clock, self.pos))
    }
}

/// Lazily extended table of first-passage times to sites above the birth
/// site. Scanning a path once serves every "when does this walk first reach
/// site s" query below the scanned horizon, which the auxiliary front asks
/// repeatedly for overlapping label sets.
#[derive(Clone, Debug)]
pub struct RecordCache {
    cursor: WalkCursor,
    birth: i64,
    /// `records[d]` = first time the walk reaches `birth + 1 + d`.
    records: Vec<f64>,
    best: i64,
}

impl RecordCache {
    pub fn new(path: WalkPath) -> Self {
        Self { cursor: path.iter(), birth: path.birth_site(), records: Vec::new(), best: 0 }
    }

    /// First passage to `site` (must be `> birth`), or `None` if it does not
    /// happen by `horizon`.
    pub fn first_passage(&mut self, site: i64, horizon: f64) -> Option<f64> {
        debug_assert!(site > self.birth);
        let d = (site - self.birth - 1) as usize;
        while d >= self.records.len() {
            if self.cursor.clock() > horizon {
                return None;
            }
            let (t, pos) = self.cursor.next().expect("walk paths are unbounded");
            if pos - self.birth > self.best {
                self.best = pos - self.birth;
                self.records.push(t);
            }
        }
        let t = self.records[d];
        (t <= horizon).then_some(t)
    }
}

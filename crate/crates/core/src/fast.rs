//! Occupancy-level event engine.
//!
//! Keeps a flat particle array plus a site-count window. Every particle
//! carries two unit-rate clocks (left, right), so the next event is an
//! exponential at rate `2N` followed by a uniform particle pick and a fair
//! coin. A right jump off the front ignites the next site (the jumper plus
//! `a-1` newborns land there); any other jump into a site holding `M`
//! particles annihilates the jumper. This is the fastest view of the
//! dynamics: identities are forgotten, only counts evolve.

use rand::rngs::SmallRng;
use rand::{Rng, SeedableRng};
use rand_distr::Exp1;

use crate::model::{ModelParams, Occupancy};
use crate::run::{Event, EventKind};

pub struct FastEngine {
    params: ModelParams,
    rng: SmallRng,
    clock: f64,
    front: i64,
    /// Current position of every live particle as window offsets; order is
    /// irrelevant.
    positions: Vec<u32>,
    /// Count window: `counts[(site - left) as usize]`, sites `left..=front`.
    /// Byte-sized so the window stays cache-resident (capacities above 255
    /// are rejected at construction).
    counts: Vec<u8>,
    left: i64,
    events: u64,
}

impl FastEngine {
    pub fn new(params: ModelParams, init: &Occupancy, seed: u64) -> Self {
        assert!(params.m <= u8::MAX as u32, "count engine caps capacities at 255");
        let left = init.leftmost();
        let front = init.front();
        let mut counts = vec![0u8; (front - left + 1) as usize];
        let mut positions = Vec::with_capacity(init.total() as usize);
        for (site, c) in init.support() {
            counts[(site - left) as usize] = c as u8;
            for _ in 0..c {
                positions.push((site - left) as u32);
            }
        }
        Self {
            params,
            rng: SmallRng::seed_from_u64(seed),
            clock: 0.0,
            front,
            positions,
            counts,
            left,
            events: 0,
        }
    }

    pub fn clock(&self) -> f64 {
        self.clock
    }

    pub fn front(&self) -> i64 {
        self.front
    }

    pub fn particle_count(&self) -> usize {
        self.positions.len()
    }

    pub fn events(&self) -> u64 {
        self.events
    }

    pub fn count_at(&self, site: i64) -> u32 {
        if site < self.left || site > self.front {
            0
        } else {
            self.counts[(site - self.left) as usize] as u32
        }
    }

    pub fn front_count(&self) -> u32 {
        self.counts[(self.front - self.left) as usize] as u32
    }

    pub fn occupancy(&self) -> Occupancy {
        let leftmost = self
            .counts
            .iter()
            .position(|&c| c > 0)
            .map(|i| self.left + i as i64)
            .unwrap_or(self.front);
        let window: Vec<u32> =
            self.counts[(leftmost - self.left) as usize..].iter().map(|&c| c as u32).collect();
        Occupancy::from_counts(leftmost, window, &self.params).expect("engine keeps counts <= M")
    }

    #[cold]
    fn grow_left(&mut self, site: i64) {
        let pad = (self.left - site).max(64) as usize;
        let mut counts = vec![0u8; pad + self.counts.len()];
        counts[pad..].copy_from_slice(&self.counts);
        self.counts = counts;
        self.left -= pad as i64;
        for p in &mut self.positions {
            *p += pad as u32;
        }
    }

    /// Advance by one event and return it.
    #[inline]
    pub fn step(&mut self) -> Event {
        let n = self.positions.len();
        debug_assert!(n > 0, "every reachable state has at least one particle");
        // One draw serves both choices: low bit picks the direction, the
        // rest picks the particle. The position load is issued before the
        // exponential so it overlaps the sampling arithmetic.
        let bits = self.rng.random::<u64>();
        let right = bits & 1 == 0;
        let pick = (((bits >> 1) as u128 * n as u128) >> 63) as usize;
        let from_off = self.positions[pick] as usize;
        let e: f64 = self.rng.sample(Exp1);
        self.clock += e / (2.0 * n as f64);
        self.events += 1;
        let from = self.left + from_off as i64;
        let to = if right { from + 1 } else { from - 1 };

        if to > self.front {
            // Ignition: the jumper branches, the fresh site holds `a`.
            self.front = to;
            self.counts[from_off] -= 1;
            self.counts.push(self.params.a as u8);
            self.positions[pick] = from_off as u32 + 1;
            for _ in 1..self.params.a {
                self.positions.push(from_off as u32 + 1);
            }
            return Event { t: self.clock, kind: EventKind::FrontAdvance, label: None, from, to };
        }

        if to < self.left {
            self.grow_left(to);
            // Rebasing shifted every offset, including the jumper's.
            let from_off = (from - self.left) as usize;
            let to_off = (to - self.left) as usize;
            return self.finish_move(pick, from_off, to_off, right, from, to);
        }
        let to_off = if right { from_off + 1 } else { from_off - 1 };
        self.finish_move(pick, from_off, to_off, right, from, to)
    }

    #[inline]
    fn finish_move(
        &mut self,
        pick: usize,
        from_off: usize,
        to_off: usize,
        right: bool,
        from: i64,
        to: i64,
    ) -> Event {
        if self.counts[to_off] as u32 >= self.params.m {
            // Jump onto a full site: the jumper is annihilated.
            self.counts[from_off] -= 1;
            self.positions.swap_remove(pick);
            return Event { t: self.clock, kind: EventKind::Kill, label: None, from, to };
        }
        self.counts[to_off] += 1;
        self.counts[from_off] -= 1;
        self.positions[pick] = to_off as u32;
        let kind = if right { EventKind::RightJump } else { EventKind::LeftJump };
        Event { t: self.clock, kind, label: None, from, to }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(a: u32, m: u32) -> ModelParams {
        ModelParams::new(a, m, 0).unwrap()
    }

    #[test]
    fn ignition_places_a_particles_at_fresh_site() {
        // One particle at 0: the first right jump must ignite site 1.
        let p = params(3, 10);
        for seed in 0..50 {
            let mut eng = FastEngine::new(p, &Occupancy::single_site(1), seed);
            let ev = eng.step();
            match ev.kind {
                EventKind::FrontAdvance => {
                    assert_eq!(eng.front(), 1);
                    assert_eq!(eng.count_at(1), 3);
                    assert_eq!(eng.count_at(0), 0);
                    assert_eq!(eng.particle_count(), 3);
                    return;
                }
                EventKind::LeftJump => continue,
                other => panic!("unexpected first event {other:?}"),
            }
        }
        panic!("no ignition in 50 seeds");
    }

    #[test]
    fn jump_onto_full_site_kills_jumper() {
        let p = params(2, 3);
        let init = Occupancy::from_counts(-1, vec![1, 3], &p).unwrap();
        // Site 0 (the front) holds M = 3; a right jump from -1 must kill.
        for seed in 0..200 {
            let mut eng = FastEngine::new(p, &init, seed);
            let ev = eng.step();
            if ev.from == -1 && ev.to == 0 {
                assert!(matches!(ev.kind, EventKind::Kill));
                assert_eq!(eng.count_at(0), 3);
                assert_eq!(eng.count_at(-1), 0);
                assert_eq!(eng.particle_count(), 3);
                return;
            }
        }
        panic!("no right jump from -1 in 200 seeds");
    }

    #[test]
    fn counts_track_positions() {
        let p = params(2, 4);
        let mut eng = FastEngine::new(p, &Occupancy::single_site(2), 7);
        for _ in 0..20_000 {
            eng.step();
            assert!(eng.occupancy().total() == eng.particle_count() as u64);
        }
        // Cross-check window counts against the particle array.
        let mut recount = std::collections::HashMap::new();
        for &off in &eng.positions {
            *recount.entry(eng.left + off as i64).or_insert(0u32) += 1;
        }
        for (site, c) in recount {
            assert_eq!(eng.count_at(site), c);
        }
    }

    #[test]
    fn same_seed_same_trajectory() {
        let p = params(2, 10);
        let mut a = FastEngine::new(p, &Occupancy::single_site(1), 42);
        let mut b = FastEngine::new(p, &Occupancy::single_site(1), 42);
        for _ in 0..10_000 {
            let (ea, eb) = (a.step(), b.step());
            assert_eq!(ea.t, eb.t);
            assert_eq!(ea.from, eb.from);
            assert_eq!(ea.to, eb.to);
        }
    }
}

//! Model parameters and the occupancy view of the state.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ModelError {
    #[error("branching count a={a} and capacity M={m} must satisfy 2 <= a <= M")]
    BadParams { a: u32, m: u32 },
    #[error("initial count n0={n0} must lie in 1..={m}")]
    BadInitialCount { n0: u32, m: u32 },
    #[error("occupancy invariant violated: {0}")]
    BadOccupancy(String),
}

/// Branching count `a`, per-site capacity `M`, and the master seed.
///
/// `a <= M` keeps ignition consistent (a fresh site receives `a <= M`
/// particles); CLT-grade runs additionally want `M > 8`, which callers check
/// where it matters rather than here, so that small exact-oracle instances
/// (e.g. `a = M = 2`) remain constructible.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelParams {
    pub a: u32,
    #[serde(rename = "M")]
    pub m: u32,
    pub seed: u64,
}

impl ModelParams {
    pub fn new(a: u32, m: u32, seed: u64) -> Result<Self, ModelError> {
        if a < 2 || a > m {
            return Err(ModelError::BadParams { a, m });
        }
        Ok(Self { a, m, seed })
    }

    /// Newborn labels per ignited site.
    pub fn labels_per_site(&self) -> u32 {
        self.a - 1
    }

    /// True when second moments of the regeneration increments are covered.
    pub fn clt_grade(&self) -> bool {
        self.m > 8
    }
}

/// Finite-support particle counts behind (and at) the front.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Occupancy {
    front: i64,
    /// `counts[i]` is the count at site `leftmost + i`; last entry is the
    /// count at `front`.
    leftmost: i64,
    counts: Vec<u32>,
}

impl Occupancy {
    /// Single column of `n0` particles at site 0, front at 0.
    pub fn single_site(n0: u32) -> Self {
        Self { front: 0, leftmost: 0, counts: vec![n0] }
    }

    /// Build from explicit counts. `counts` maps offsets from `leftmost`;
    /// the last entry is the count at the front.
    pub fn from_counts(leftmost: i64, counts: Vec<u32>, params: &ModelParams) -> Result<Self, ModelError> {
        if counts.is_empty() {
            return Err(ModelError::BadOccupancy("empty support".into()));
        }
        if counts.iter().any(|&c| c > params.m) {
            return Err(ModelError::BadOccupancy(format!("count above M={}", params.m)));
        }
        if counts.iter().all(|&c| c == 0) {
            return Err(ModelError::BadOccupancy("no particles".into()));
        }
        let front = leftmost + counts.len() as i64 - 1;
        Ok(Self { front, leftmost, counts })
    }

    pub fn front(&self) -> i64 {
        self.front
    }

    pub fn leftmost(&self) -> i64 {
        self.leftmost
    }

    pub fn count_at(&self, site: i64) -> u32 {
        if site < self.leftmost || site > self.front {
            0
        } else {
            self.counts[(site - self.leftmost) as usize]
        }
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().map(|&c| c as u64).sum()
    }

    /// Non-zero sites, left to right.
    pub fn support(&self) -> impl Iterator<Item = (i64, u32)> + '_ {
        self.counts
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
            .map(|(i, &c)| (self.leftmost + i as i64, c))
    }
}

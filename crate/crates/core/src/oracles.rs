//! Independent ground truth: the line-catching root and large-deviation rate
//! function with their explicit probability bounds, exact transient laws of
//! small truncated instances via uniformization, and the Poisson bound on the
//! front. Nothing here touches the event engines; these are the other side
//! of every equivalence test.

use std::collections::{BTreeMap, HashMap, VecDeque};

use statrs::distribution::{DiscreteCDF, Poisson};
use statrs::function::gamma::ln_gamma;
use thiserror::Error;

use crate::model::{ModelParams, Occupancy};

#[derive(Debug, Error, PartialEq)]
pub enum OracleError {
    #[error("truncated state space exceeds the {cap}-state guard")]
    StateSpaceTooLarge { cap: usize },
    #[error("truncation leak {leak:.3e} exceeds 1e-3; widen the window")]
    ExcessiveLeak { leak: f64 },
}

/// Positive root of `c*theta - 2(cosh(theta) - 1) = 0`.
///
/// The function is positive on `(0, root)` and negative beyond, so a
/// doubling bracket plus bisection always converges; a Newton polish brings
/// the residual under 1e-13.
pub fn theta_c(c: f64) -> f64 {
    assert!(c > 0.0, "slope must be positive");
    let f = |th: f64| c * th - 2.0 * (th.cosh() - 1.0);
    let mut hi = 1.0;
    while f(hi) > 0.0 {
        hi *= 2.0;
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-15 * hi.max(1.0) {
            break;
        }
    }
    let mut th = 0.5 * (lo + hi);
    for _ in 0..4 {
        let deriv = c - 2.0 * th.sinh();
        th -= f(th) / deriv;
    }
    debug_assert!(f(th).abs() < 1e-12);
    th
}

/// Large-deviation rate function of the rate-2 walk:
/// `I(u) = 2 + u asinh(u/2) - sqrt(4 + u^2)`.
pub fn rate_function(u: f64) -> f64 {
    assert!(u >= 0.0);
    2.0 + u * (u / 2.0).asinh() - (4.0 + u * u).sqrt()
}

/// Bounds for a single rate-2 walk started at `x <= -1` against the moving
/// line `floor(c t)`.
#[derive(Clone, Copy, Debug)]
pub struct LineHitBound {
    pub x: i64,
    pub c: f64,
    pub theta: f64,
    /// Lower bound on never catching the line.
    pub p_escape_lb: f64,
    /// Upper bound on ever catching it.
    pub p_hit_ub: f64,
}

impl LineHitBound {
    /// Upper bound on a late catch, `P[t < tau < infinity]`, split at
    /// `B = (floor(c t) + x) / 2`: one term for the walk being unusually far
    /// right at `t`, one for catching the line from below `B`.
    pub fn late_hit_ub(&self, t: f64) -> f64 {
        let line = (self.c * t).floor();
        let spread = (line - self.x as f64) / 2.0;
        let overshoot = (-t * rate_function(spread / t)).exp();
        let catchup = (-(spread - 1.0) * self.theta).exp();
        (overshoot + catchup).min(1.0)
    }
}

pub fn line_hit_bounds(x: i64, c: f64) -> LineHitBound {
    assert!(x <= -1);
    let theta = theta_c(c);
    let p_escape_lb = if x <= -2 {
        (1.0 - ((1 + x) as f64 * theta).exp()).max(0.0)
    } else {
        (-2.0 / c).exp() * (1.0 - (-theta).exp())
    };
    let p_hit_ub = if x <= -2 { ((1 + x) as f64 * theta).exp().min(1.0) } else { 1.0 - p_escape_lb };
    LineHitBound { x, c, theta, p_escape_lb, p_hit_ub }
}

/// Exact Poisson tail `P[Poisson(M t) >= ceil(Mp t)]`: front advances are
/// dominated by a rate-`M` Poisson process, so this bounds `P[r_t >= Mp t]`.
pub fn poisson_front_bound(m: u32, mp: f64, t: f64) -> f64 {
    assert!(mp > m as f64);
    let lambda = m as f64 * t;
    let k = (mp * t).ceil() as u64;
    if k == 0 {
        return 1.0;
    }
    if lambda == 0.0 {
        return 0.0;
    }
    1.0 - Poisson::new(lambda).unwrap().cdf(k - 1)
}

/// Exact tail `P[X_t >= m]` of the rate-2 walk at time `t` (difference of
/// two unit-rate Poisson counts), summed in log space. Serves as the exact
/// reference for the rate-function check at slopes where direct Monte Carlo
/// cannot reach.
pub fn walk_tail_exact(t: f64, m: i64) -> f64 {
    assert!(t > 0.0);
    let log_t = t.ln();
    let mut outer: Vec<f64> = Vec::new();
    let mut outer_max = f64::NEG_INFINITY;
    let mut d = m;
    loop {
        // log P[X = d] = logsumexp_k [ -2t + (2k+d) ln t - ln k! - ln (k+d)! ]
        let dd = d.max(-d) as f64;
        let mut inner_max = f64::NEG_INFINITY;
        let mut terms = Vec::new();
        let k_hi = (t + 10.0 * t.sqrt() + dd) as i64 + 10;
        for k in 0..=k_hi {
            let kf = k as f64;
            let lt = -2.0 * t + (2.0 * kf + dd) * log_t
                - ln_gamma(kf + 1.0)
                - ln_gamma(kf + dd + 1.0);
            if lt > inner_max {
                inner_max = lt;
            }
            terms.push(lt);
            if lt < inner_max - 60.0 && kf > t {
                break;
            }
        }
        let log_pd = inner_max + terms.iter().map(|lt| (lt - inner_max).exp()).sum::<f64>().ln();
        if log_pd > outer_max {
            outer_max = log_pd;
        }
        outer.push(log_pd);
        if log_pd < outer_max - 60.0 {
            break;
        }
        d += 1;
    }
    (outer_max + outer.iter().map(|l| (l - outer_max).exp()).sum::<f64>().ln()).exp()
}

/// Transient law of a finite CTMC by uniformization.
///
/// Generic over the chain: callers supply out-rates per state. One state may
/// be marked absorbing-by-construction (the leak sink).
pub struct Uniformizer {
    /// `rates[i]` = outgoing `(state, rate)` pairs.
    pub rates: Vec<Vec<(usize, f64)>>,
}

impl Uniformizer {
    /// Distribution at time `t` from `initial`, with the uniformization rate
    /// inflated by `rate_factor >= 1` (results must not depend on it).
    /// The Poisson series is truncated once its remaining mass is below 1e-9.
    pub fn transient(&self, initial: usize, t: f64, rate_factor: f64) -> Vec<f64> {
        let n = self.rates.len();
        let exit: Vec<f64> = self.rates.iter().map(|out| out.iter().map(|&(_, r)| r).sum()).collect();
        let max_exit = exit.iter().cloned().fold(0.0, f64::max);
        if t == 0.0 || max_exit == 0.0 {
            let mut pi = vec![0.0; n];
            pi[initial] = 1.0;
            return pi;
        }
        let lambda = max_exit * rate_factor.max(1.0);
        assert!(lambda * t < 700.0, "uniformized horizon too deep for direct weights");

        let mut pi_k = vec![0.0; n];
        pi_k[initial] = 1.0;
        let mut acc = vec![0.0; n];
        let mut weight = (-lambda * t).exp();
        let mut weight_sum = 0.0;
        let mut k = 0u64;
        loop {
            for i in 0..n {
                acc[i] += weight * pi_k[i];
            }
            weight_sum += weight;
            if 1.0 - weight_sum < 1e-9 {
                break;
            }
            // One step of the uniformized jump chain.
            let mut next = vec![0.0; n];
            for i in 0..n {
                let p = pi_k[i];
                if p == 0.0 {
                    continue;
                }
                next[i] += p * (1.0 - exit[i] / lambda);
                for &(j, r) in &self.rates[i] {
                    next[j] += p * r / lambda;
                }
            }
            pi_k = next;
            k += 1;
            weight *= lambda * t / k as f64;
        }
        acc
    }
}

/// Exact transient law of the combustion dynamics on a truncated window.
pub struct TransientLaw {
    /// Probability per reachable `(front, counts)` state.
    pub states: Vec<(Occupancy, f64)>,
    /// Mass absorbed by either truncation boundary; a rigorous total
    /// variation error bound for any functional of the truncated law.
    pub leak: f64,
    /// Marginal law of the front.
    pub front_law: BTreeMap<i64, f64>,
}

impl TransientLaw {
    pub fn total_mass(&self) -> f64 {
        self.states.iter().map(|(_, p)| p).sum::<f64>() + self.leak
    }
}

const STATE_CAP: usize = 1_000_000;

/// Enumerate the truncated chain reachable from `initial` and return its law
/// at time `t`. Any move that leaves `[left_trunc, right_trunc]` absorbs the
/// whole trajectory into the leak sink, so the true and truncated laws agree
/// up to `leak` in total variation.
pub fn exact_small_ctmc(
    initial: &Occupancy,
    params: &ModelParams,
    t: f64,
    left_trunc: i64,
    right_trunc: i64,
    rate_factor: f64,
) -> Result<TransientLaw, OracleError> {
    assert!(initial.leftmost() >= left_trunc && initial.front() <= right_trunc);
    type Key = (i64, Vec<u8>);
    let key_of = |front: i64, counts: &[u8]| -> Key { (front, counts.to_vec()) };
    let initial_counts: Vec<u8> = (left_trunc..=initial.front())
        .map(|s| initial.count_at(s) as u8)
        .collect();

    let mut index: HashMap<Key, usize> = HashMap::new();
    let mut states: Vec<Key> = Vec::new();
    let mut rates: Vec<Vec<(usize, f64)>> = Vec::new();
    // Index 0 is the leak sink.
    index.insert((i64::MIN, Vec::new()), 0);
    states.push((i64::MIN, Vec::new()));
    rates.push(Vec::new());

    let mut queue = VecDeque::new();
    let start_key = key_of(initial.front(), &initial_counts);
    index.insert(start_key.clone(), 1);
    states.push(start_key);
    rates.push(Vec::new());
    queue.push_back(1usize);

    while let Some(i) = queue.pop_front() {
        let (front, counts) = states[i].clone();
        let mut out: Vec<(Key, f64)> = Vec::new();
        for (off, &c) in counts.iter().enumerate() {
            if c == 0 {
                continue;
            }
            let site = left_trunc + off as i64;
            let rate = c as f64;
            // Left move.
            if site == left_trunc {
                out.push(((i64::MIN, Vec::new()), rate));
            } else {
                let mut nc = counts.clone();
                nc[off] -= 1;
                if (nc[off - 1] as u32) < params.m {
                    nc[off - 1] += 1;
                }
                out.push((key_of(front, &nc), rate));
            }
            // Right move.
            if site == front {
                if front + 1 > right_trunc {
                    out.push(((i64::MIN, Vec::new()), rate));
                } else {
                    let mut nc = counts.clone();
                    nc[off] -= 1;
                    nc.push(params.a as u8);
                    out.push((key_of(front + 1, &nc), rate));
                }
            } else {
                let mut nc = counts.clone();
                nc[off] -= 1;
                if (nc[off + 1] as u32) < params.m {
                    nc[off + 1] += 1;
                }
                out.push((key_of(front, &nc), rate));
            }
        }
        let mut merged: Vec<(usize, f64)> = Vec::with_capacity(out.len());
        for (key, r) in out {
            let j = match index.get(&key) {
                Some(&j) => j,
                None => {
                    let j = states.len();
                    if j > STATE_CAP {
                        return Err(OracleError::StateSpaceTooLarge { cap: STATE_CAP });
                    }
                    index.insert(key.clone(), j);
                    states.push(key);
                    rates.push(Vec::new());
                    queue.push_back(j);
                    j
                }
            };
            match merged.iter_mut().find(|(k, _)| *k == j) {
                Some((_, acc)) => *acc += r,
                None => merged.push((j, r)),
            }
        }
        rates[i] = merged;
    }

    let law = Uniformizer { rates }.transient(1, t, rate_factor);
    let leak = law[0];
    if leak > 1e-3 {
        return Err(OracleError::ExcessiveLeak { leak });
    }
    let mut front_law = BTreeMap::new();
    let mut out_states = Vec::new();
    for (i, p) in law.iter().enumerate().skip(1) {
        if *p <= 0.0 {
            continue;
        }
        let (front, counts) = &states[i];
        *front_law.entry(*front).or_insert(0.0) += p;
        let counts_u32: Vec<u32> = counts.iter().map(|&c| c as u32).collect();
        let occ = Occupancy::from_counts(left_trunc, counts_u32, params)
            .expect("truncated dynamics preserve the capacity bound");
        out_states.push((occ, *p));
    }
    Ok(TransientLaw { states: out_states, leak, front_law })
}

/// Probability a single rate-2 walk from 0 reaches `target > 0` by time `t`,
/// computed exactly on `[left_trunc, target]` with both boundaries absorbing
/// (reaching `target` is the success sink; `left_trunc` leaks).
pub fn walk_hit_probability(target: i64, t: f64, left_trunc: i64) -> (f64, f64) {
    assert!(target > 0 && left_trunc < 0);
    let width = (target - left_trunc + 1) as usize;
    let at = |site: i64| (site - left_trunc) as usize;
    let mut rates = vec![Vec::new(); width];
    for site in left_trunc + 1..target {
        rates[at(site)] = vec![(at(site - 1), 1.0), (at(site + 1), 1.0)];
    }
    let law = Uniformizer { rates }.transient(at(0), t, 1.0);
    (law[at(target)], law[at(left_trunc)])
}

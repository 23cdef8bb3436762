//! Poisson clocks of the graphical construction.
//!
//! Centers at column x are indexed by a level j: the ↑ clock at (x, j) lifts
//! a path whose height at x is at its j-th admissible value, and the ↓ clock
//! at (x, j) lowers a path from level j+1. Levels run over
//! 0..center_count(x).

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::profile::ConductanceProfile;
use crate::rng::StreamRng;

/// Lowest and highest values of Σ_{y≤x} ξ(y) over Ω_{N,k}.
pub fn level_bounds(n: usize, k: usize, x: usize) -> (usize, usize) {
    ((x + k).saturating_sub(n), x.min(k))
}

/// Number of centers at column x.
pub fn center_count(n: usize, k: usize, x: usize) -> usize {
    let (lo, hi) = level_bounds(n, k, x);
    hi - lo
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ClockMode {
    /// One clock of rate 2c per column, direction by a fair coin.
    PerColumn,
    /// Independent ↑ and ↓ clocks of rate c at every center.
    Literal,
}

/// One ring of the clock field.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Ring {
    pub t: f64,
    pub x: usize,
    pub up: bool,
    /// Level of the ringing center; `None` in per-column mode, where each
    /// path attributes the ring to the center adjacent to it.
    pub level: Option<usize>,
}

#[derive(Clone, Copy, Debug)]
struct Entry {
    t: f64,
    id: usize,
}

impl PartialEq for Entry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Entry {}
impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Entry {
    // Reversed so the max-heap pops the earliest time.
    fn cmp(&self, other: &Self) -> Ordering {
        other.t.total_cmp(&self.t).then(other.id.cmp(&self.id))
    }
}

/// Lazily realized clock field.
///
/// In per-column mode the superposition of the column clocks is sampled
/// directly: one exponential of the total rate, then a column chosen with
/// probability proportional to its rate.
#[derive(Clone, Debug)]
pub struct ClockField {
    mode: ClockMode,
    heap: BinaryHeap<Entry>,
    /// Literal mode, per clock: (column, level, up, rate).
    clocks: Vec<(usize, usize, bool, f64)>,
    /// Per-column mode: cumulative column rates and the pending ring time.
    cumulative: Vec<f64>,
    next: f64,
    rng: StreamRng,
}

fn exp_sample(rng: &mut StreamRng, rate: f64) -> f64 {
    let u: f64 = rng.random();
    -(1.0 - u).ln() / rate
}

impl ClockField {
    pub fn new(p: &ConductanceProfile, k: usize, mode: ClockMode, mut rng: StreamRng) -> Self {
        let n = p.n_sites();
        let mut clocks = Vec::new();
        let mut cumulative = Vec::new();
        let mut heap = BinaryHeap::new();
        let mut next = f64::INFINITY;
        match mode {
            ClockMode::PerColumn => {
                let mut acc = 0.0;
                for x in 1..n {
                    acc += 2.0 * p.rate(x);
                    cumulative.push(acc);
                }
                if acc > 0.0 {
                    next = exp_sample(&mut rng, acc);
                }
            }
            ClockMode::Literal => {
                for x in 1..n {
                    for j in 0..center_count(n, k, x) {
                        for up in [true, false] {
                            clocks.push((x, j, up, p.rate(x)));
                        }
                    }
                }
                heap.reserve(clocks.len());
                for (id, c) in clocks.iter().enumerate() {
                    heap.push(Entry { t: exp_sample(&mut rng, c.3), id });
                }
            }
        }
        Self { mode, heap, clocks, cumulative, next, rng }
    }

    pub fn mode(&self) -> ClockMode {
        self.mode
    }

    /// Number of independent clock streams.
    pub fn stream_count(&self) -> usize {
        match self.mode {
            ClockMode::PerColumn => self.cumulative.len(),
            ClockMode::Literal => self.clocks.len(),
        }
    }

    pub fn peek_time(&self) -> f64 {
        match self.mode {
            ClockMode::PerColumn => self.next,
            ClockMode::Literal => self.heap.peek().map_or(f64::INFINITY, |e| e.t),
        }
    }

    /// Pop the next ring and schedule the following one.
    pub fn next_ring(&mut self) -> Option<Ring> {
        match self.mode {
            ClockMode::PerColumn => {
                let t = self.next;
                let total = *self.cumulative.last()?;
                if !t.is_finite() {
                    return None;
                }
                let target = self.rng.random::<f64>() * total;
                let idx = self.cumulative.partition_point(|&c| c <= target).min(self.cumulative.len() - 1);
                let up = self.rng.random::<bool>();
                self.next = t + exp_sample(&mut self.rng, total);
                Some(Ring { t, x: idx + 1, up, level: None })
            }
            ClockMode::Literal => {
                let Entry { t, id } = self.heap.pop()?;
                let (x, level, up, rate) = self.clocks[id];
                let next = t + exp_sample(&mut self.rng, rate);
                self.heap.push(Entry { t: next, id });
                Some(Ring { t, x, up, level: Some(level) })
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::{stream, Purpose};

    #[test]
    fn center_counts() {
        // N = 4, k = 2: columns 1, 2, 3 carry 1, 2, 1 centers.
        let counts: Vec<usize> = (1..4).map(|x| center_count(4, 2, x)).collect();
        assert_eq!(counts, vec![1, 2, 1]);
    }

    #[test]
    fn ring_times_increase() {
        let p = ConductanceProfile::homogeneous(6).unwrap();
        for mode in [ClockMode::PerColumn, ClockMode::Literal] {
            let mut f = ClockField::new(&p, 3, mode, stream(3, Purpose::Clock, 0));
            let mut last = 0.0;
            for _ in 0..1000 {
                let r = f.next_ring().unwrap();
                assert!(r.t >= last);
                last = r.t;
            }
        }
    }
}

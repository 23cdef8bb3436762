//! Configurations of Ω_{N,k}, height functions and the partial order.

use std::fmt;

use rand::Rng;

use crate::error::{Error, Result};

/// Occupancy of sites 1..N, packed into 64-bit words, with the particle count cached.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Configuration {
    n: usize,
    k: usize,
    words: Vec<u64>,
}

impl Configuration {
    pub fn empty(n: usize) -> Self {
        Self { n, k: 0, words: vec![0; n.div_ceil(64).max(1)] }
    }

    pub fn from_occupancy(occ: &[bool]) -> Self {
        let mut c = Self::empty(occ.len());
        for (i, &b) in occ.iter().enumerate() {
            if b {
                c.set(i + 1, true);
            }
        }
        c
    }

    /// Parse a 0/1 string such as "110010".
    pub fn parse(text: &str) -> Result<Self> {
        let occ = text
            .trim()
            .chars()
            .map(|ch| match ch {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(Error::param(format!("configuration strings use 0/1, found `{other}`"))),
            })
            .collect::<Result<Vec<_>>>()?;
        if occ.is_empty() {
            return Err(Error::param("empty configuration string"));
        }
        Ok(Self::from_occupancy(&occ))
    }

    /// Low bit is site 1. Requires N ≤ 64.
    pub fn from_mask(n: usize, mask: u64) -> Self {
        assert!(n <= 64);
        let mask = if n == 64 { mask } else { mask & ((1u64 << n) - 1) };
        Self { n, k: mask.count_ones() as usize, words: vec![mask] }
    }

    pub fn mask(&self) -> u64 {
        assert!(self.n <= 64, "mask form needs N <= 64");
        self.words[0]
    }

    pub fn from_positions(n: usize, positions: &[usize]) -> Result<Self> {
        let mut c = Self::empty(n);
        let mut last = 0;
        for &p in positions {
            if p <= last || p > n {
                return Err(Error::param("positions must be strictly increasing within 1..N"));
            }
            c.set(p, true);
            last = p;
        }
        Ok(c)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Occupancy of site `x` (1-based).
    #[inline]
    pub fn get(&self, x: usize) -> bool {
        let i = x - 1;
        (self.words[i / 64] >> (i % 64)) & 1 == 1
    }

    pub fn set(&mut self, x: usize, v: bool) {
        let i = x - 1;
        let bit = 1u64 << (i % 64);
        let w = &mut self.words[i / 64];
        let was = *w & bit != 0;
        if v && !was {
            *w |= bit;
            self.k += 1;
        } else if !v && was {
            *w &= !bit;
            self.k -= 1;
        }
    }

    /// Exchange the contents of sites x and x+1.
    pub fn swap_edge(&mut self, x: usize) {
        let (a, b) = (self.get(x), self.get(x + 1));
        if a != b {
            self.set(x, b);
            self.set(x + 1, a);
        }
    }

    pub fn occupancy(&self) -> Vec<bool> {
        (1..=self.n).map(|x| self.get(x)).collect()
    }

    pub fn positions(&self) -> Vec<usize> {
        (1..=self.n).filter(|&x| self.get(x)).collect()
    }

    /// ∧ = particles on 1..k (`Max`) or ∨ = particles on N−k+1..N (`Min`).
    pub fn extremal(n: usize, k: usize, which: Extremal) -> Result<Self> {
        if k > n {
            return Err(Error::param(format!("k = {k} exceeds N = {n}")));
        }
        let mut c = Self::empty(n);
        let range = match which {
            Extremal::Max => 1..=k,
            Extremal::Min => n - k + 1..=n,
        };
        for x in range {
            c.set(x, true);
        }
        Ok(c)
    }

    /// Uniform element of Ω_{N,k} by partial Fisher–Yates.
    pub fn uniform<R: Rng + ?Sized>(n: usize, k: usize, rng: &mut R) -> Self {
        let mut sites: Vec<usize> = (1..=n).collect();
        for i in 0..k {
            let j = rng.random_range(i..n);
            sites.swap(i, j);
        }
        let mut c = Self::empty(n);
        for &x in &sites[..k] {
            c.set(x, true);
        }
        c
    }

    /// Uniform 2k-subset, keeping only the k leftmost particles.
    pub fn two_phase<R: Rng + ?Sized>(n: usize, k: usize, rng: &mut R) -> Self {
        assert!(2 * k <= n, "two-phase sampling needs 2k <= N");
        let wide = Self::uniform(n, 2 * k, rng);
        let mut c = Self::empty(n);
        for &x in wide.positions().iter().take(k) {
            c.set(x, true);
        }
        c
    }
}

impl fmt::Display for Configuration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for x in 1..=self.n {
            f.write_str(if self.get(x) { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for Configuration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Configuration({self})")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Extremal {
    Max,
    Min,
}

/// Height function scaled by N: `scaled[x] = N·h(x)` for x = 0..N.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct HeightFunction {
    n: usize,
    k: usize,
    scaled: Vec<i64>,
}

impl HeightFunction {
    pub fn of(cfg: &Configuration) -> Self {
        let n = cfg.n();
        let k = cfg.k() as i64;
        let mut scaled = Vec::with_capacity(n + 1);
        scaled.push(0);
        let mut h = 0i64;
        for x in 1..=n {
            h += if cfg.get(x) { n as i64 - k } else { -k };
            scaled.push(h);
        }
        Self { n, k: cfg.k(), scaled }
    }

    /// Validate raw scaled values.
    pub fn from_scaled(n: usize, k: usize, scaled: Vec<i64>) -> Result<Self> {
        if scaled.len() != n + 1 || scaled[0] != 0 || scaled[n] != 0 {
            return Err(Error::param("height function needs N+1 values with h(0) = h(N) = 0"));
        }
        let (up, down) = (n as i64 - k as i64, -(k as i64));
        for w in scaled.windows(2) {
            let d = w[1] - w[0];
            if d != up && d != down {
                return Err(Error::param(format!("increment {d}/N is neither 1-k/N nor -k/N")));
            }
        }
        Ok(Self { n, k, scaled })
    }

    pub fn config(&self) -> Configuration {
        let occ: Vec<bool> = self.scaled.windows(2).map(|w| w[1] > w[0]).collect();
        Configuration::from_occupancy(&occ)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn scaled(&self) -> &[i64] {
        &self.scaled
    }

    /// h(x) as a real.
    pub fn value(&self, x: usize) -> f64 {
        self.scaled[x] as f64 / self.n as f64
    }

    pub fn values(&self) -> Vec<f64> {
        (0..=self.n).map(|x| self.value(x)).collect()
    }

    /// Pointwise order `self ≤ other`.
    pub fn leq(&self, other: &Self) -> Result<bool> {
        if self.n != other.n || self.k != other.k {
            return Err(Error::param("height functions from different (N, k)"));
        }
        Ok(self.scaled.iter().zip(&other.scaled).all(|(a, b)| a <= b))
    }

    /// Longest runs of up-steps and down-steps.
    pub fn max_monotone_run(&self) -> MonotoneRun {
        let (mut q1, mut q2, mut run, mut prev_up) = (0usize, 0usize, 0usize, None);
        for w in self.scaled.windows(2) {
            let up = w[1] > w[0];
            run = if prev_up == Some(up) { run + 1 } else { 1 };
            prev_up = Some(up);
            if up {
                q1 = q1.max(run);
            } else {
                q2 = q2.max(run);
            }
        }
        MonotoneRun { q1, q2, q: q1.max(q2) }
    }

    /// h at the columns ⌈iδN⌉, i = 1..⌊1/δ⌋−1.
    pub fn skeleton(&self, delta: f64) -> Result<Vec<f64>> {
        Ok(skeleton_columns(self.n, delta)?.into_iter().map(|x| self.value(x)).collect())
    }
}

/// Columns ⌈iδN⌉ for i = 1..⌊1/δ⌋−1.
pub fn skeleton_columns(n: usize, delta: f64) -> Result<Vec<usize>> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::param(format!("delta = {delta} outside (0, 1)")));
    }
    let count = (1.0 / delta).floor() as usize;
    Ok((1..count)
        .map(|i| {
            let v = i as f64 * delta * n as f64;
            // Guard ⌈·⌉ against representation error such as 0.1·30 = 3.0000000000000004.
            let r = v.round();
            if (v - r).abs() < 1e-9 { r as usize } else { v.ceil() as usize }
        })
        .collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MonotoneRun {
    pub q1: usize,
    pub q2: usize,
    pub q: usize,
}

/// Binomial coefficient as u128, saturating.
pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.saturating_mul((n - i) as u128) / (i + 1) as u128;
    }
    acc
}

/// All k-subsets of 1..N as bit masks in colex order (N ≤ 64).
pub fn enumerate_masks(n: usize, k: usize) -> Vec<u64> {
    assert!(n <= 64 && k <= n);
    let total = binomial(n, k) as usize;
    let mut out = Vec::with_capacity(total);
    if k == 0 {
        out.push(0);
        return out;
    }
    let mut m: u64 = if k == 64 { u64::MAX } else { (1u64 << k) - 1 };
    for _ in 0..total {
        out.push(m);
        // Gosper's hack: next larger integer with the same popcount.
        let c = m & m.wrapping_neg();
        let r = m.wrapping_add(c);
        if r == 0 {
            break;
        }
        m = (((r ^ m) >> 2) / c) | r;
    }
    out
}

/// Colex rank of a mask, matching `enumerate_masks` order.
pub fn colex_rank(mask: u64, table: &BinomialTable) -> usize {
    let mut rank = 0;
    let mut m = mask;
    let mut i = 1;
    while m != 0 {
        let p = m.trailing_zeros() as usize;
        rank += table.get(p, i);
        m &= m - 1;
        i += 1;
    }
    rank
}

/// Small Pascal triangle for ranking.
#[derive(Clone, Debug)]
pub struct BinomialTable {
    rows: Vec<Vec<usize>>,
}

impl BinomialTable {
    pub fn new(n: usize) -> Self {
        let mut rows = vec![vec![0usize; n + 2]; n + 2];
        for a in 0..=n + 1 {
            rows[a][0] = 1;
            for b in 1..=a {
                rows[a][b] = rows[a - 1][b - 1].saturating_add(if b < a { rows[a - 1][b] } else { 0 });
            }
        }
        Self { rows }
    }

    pub fn get(&self, a: usize, b: usize) -> usize {
        if b > a { 0 } else { self.rows[a][b] }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(s: &str) -> Configuration {
        Configuration::parse(s).unwrap()
    }

    #[test]
    fn heights_of_extremals() {
        let top = Configuration::extremal(4, 2, Extremal::Max).unwrap();
        assert_eq!(top.to_string(), "1100");
        assert_eq!(HeightFunction::of(&top).scaled(), &[0, 2, 4, 2, 0]);
        let bottom = Configuration::extremal(4, 2, Extremal::Min).unwrap();
        assert_eq!(bottom.to_string(), "0011");
        assert_eq!(HeightFunction::of(&bottom).values(), vec![0.0, -0.5, -1.0, -0.5, 0.0]);
        assert_eq!(Configuration::extremal(5, 0, Extremal::Max).unwrap().to_string(), "00000");
        assert_eq!(Configuration::extremal(5, 0, Extremal::Min).unwrap().to_string(), "00000");
    }

    #[test]
    fn leq_examples() {
        let top = HeightFunction::of(&cfg("1100"));
        let bottom = HeightFunction::of(&cfg("0011"));
        assert!(bottom.leq(&top).unwrap());
        assert!(!top.leq(&bottom).unwrap());
        assert!(top.leq(&top).unwrap());
        assert!(top.leq(&HeightFunction::of(&cfg("11000"))).is_err());
    }

    #[test]
    fn monotone_runs() {
        let r = HeightFunction::of(&cfg("111000")).max_monotone_run();
        assert_eq!((r.q1, r.q2, r.q), (3, 3, 3));
        let r = HeightFunction::of(&cfg("1010")).max_monotone_run();
        assert_eq!((r.q1, r.q2, r.q), (1, 1, 1));
        let r = HeightFunction::of(&cfg("11000000")).max_monotone_run();
        assert_eq!((r.q1, r.q2, r.q), (2, 6, 6));
    }

    #[test]
    fn skeleton_examples() {
        let h = HeightFunction::of(&cfg("1100"));
        assert_eq!(h.skeleton(0.5).unwrap(), vec![1.0]);
        assert_eq!(skeleton_columns(8, 0.25).unwrap(), vec![2, 4, 6]);
        assert!(h.skeleton(1.0).is_err());
        assert!(h.skeleton(0.0).is_err());
    }

    #[test]
    fn colex_enumeration_and_rank() {
        let masks = enumerate_masks(6, 3);
        assert_eq!(masks.len(), 20);
        let table = BinomialTable::new(6);
        for (i, &m) in masks.iter().enumerate() {
            assert_eq!(colex_rank(m, &table), i);
        }
        assert!(masks.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(enumerate_masks(64, 64).len(), 1);
    }

    #[test]
    fn from_scaled_rejects_bad_paths() {
        assert!(HeightFunction::from_scaled(4, 2, vec![0, 2, 4, 2, 0]).is_ok());
        assert!(HeightFunction::from_scaled(4, 2, vec![0, 2, 4, 3, 0]).is_err());
        assert!(HeightFunction::from_scaled(4, 2, vec![1, 2, 4, 2, 0]).is_err());
    }

    #[test]
    fn packed_bits_beyond_one_word() {
        let mut c = Configuration::empty(130);
        c.set(1, true);
        c.set(65, true);
        c.set(130, true);
        assert_eq!(c.k(), 3);
        assert_eq!(c.positions(), vec![1, 65, 130]);
        c.swap_edge(129);
        assert_eq!(c.positions(), vec![1, 65, 129]);
        assert_eq!(HeightFunction::of(&c).config(), c);
    }
}

//! Two labelled walkers that move independently until they meet and
//! together afterwards. States are pairs x ≤ y.

use serde::Serialize;

use super::sparse::SparseGenerator;
use super::uniformize::{propagate, DEFAULT_TOL};
use crate::error::{Error, Result};
use crate::profile::ConductanceProfile;
use crate::spectral::{solve_neumann, EigenSystem, Normalization};

#[derive(Clone, Debug)]
pub struct TwoParticleChain {
    n: usize,
    q: SparseGenerator,
}

impl TwoParticleChain {
    pub fn new(p: &ConductanceProfile) -> Self {
        let n = p.n_sites();
        let mut rows = Vec::with_capacity(n * (n + 1) / 2);
        for x in 1..=n {
            for y in x..=n {
                let mut row = Vec::new();
                if x == y {
                    if x < n {
                        row.push((index(n, x + 1, y + 1), p.rate(x)));
                    }
                    if x > 1 {
                        row.push((index(n, x - 1, y - 1), p.rate(x - 1)));
                    }
                } else {
                    row.push((index(n, x + 1, y), p.rate(x)));
                    if x > 1 {
                        row.push((index(n, x - 1, y), p.rate(x - 1)));
                    }
                    if y < n {
                        row.push((index(n, x, y + 1), p.rate(y)));
                    }
                    row.push((index(n, x, y - 1), p.rate(y - 1)));
                }
                rows.push(row);
            }
        }
        Self { n, q: SparseGenerator::from_rows(rows) }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn generator(&self) -> &SparseGenerator {
        &self.q
    }

    pub fn index(&self, x: usize, y: usize) -> usize {
        index(self.n, x, y)
    }

    /// All states (x, y) in index order.
    pub fn states(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (1..=self.n).flat_map(move |x| (x..=self.n).map(move |y| (x, y)))
    }

    /// True if some transition leaves the diagonal.
    pub fn diagonal_leaks(&self) -> bool {
        let states: Vec<_> = self.states().collect();
        states.iter().enumerate().any(|(i, &(x, y))| x == y && self.q.row(i).any(|(j, _)| states[j].0 != states[j].1))
    }
}

fn index(n: usize, x: usize, y: usize) -> usize {
    debug_assert!(1 <= x && x <= y && y <= n);
    // Rows x' < x contribute N − x' + 1 states each.
    let before = (x - 1) * (n + 1) - (x - 1) * x / 2;
    before + (y - x)
}

/// u_{ij}(x, y) = g̃_i(x)g̃_j(y) − g̃_i(y)g̃_j(x) on the chain's states.
fn u_vector(chain: &TwoParticleChain, sys: &EigenSystem, i: usize, j: usize) -> Vec<f64> {
    let (gi, gj) = (sys.eigenfunction(i), sys.eigenfunction(j));
    chain.states().map(|(x, y)| gi[x - 1] * gj[y - 1] - gi[y - 1] * gj[x - 1]).collect()
}

#[derive(Clone, Debug, Serialize)]
pub struct TwoParticleReport {
    pub pairs: Vec<(usize, usize)>,
    pub max_residual: f64,
    pub worst_state: (usize, usize),
    pub max_orthogonality_error: f64,
    pub basis_count: usize,
    pub off_diagonal_states: usize,
}

pub fn two_particle_check(p: &ConductanceProfile, indices: &[(usize, usize)]) -> Result<TwoParticleReport> {
    let n = p.n_sites();
    for &(i, j) in indices {
        if !(i < j && j < n) {
            return Err(Error::param(format!("index pair ({i}, {j}) needs 0 <= i < j <= N-1")));
        }
    }
    let top = indices.iter().map(|&(_, j)| j).max().unwrap_or(1).max(1);
    let sys = solve_neumann(p, top, Normalization::UnitNorm)?;
    let chain = TwoParticleChain::new(p);
    let states: Vec<_> = chain.states().collect();
    let us: Vec<Vec<f64>> = indices.iter().map(|&(i, j)| u_vector(&chain, &sys, i, j)).collect();
    let mut max_residual: f64 = 0.0;
    let mut worst_state = (1, 1);
    for (&(i, j), u) in indices.iter().zip(&us) {
        let lam = sys.eigenvalue(i) + sys.eigenvalue(j);
        let lu = chain.generator().apply(u);
        let umax = u.iter().fold(0.0f64, |a, v| a.max(v.abs())).max(1.0);
        for (s, (a, b)) in lu.iter().zip(u).enumerate() {
            let r = (a + lam * b).abs() / (lam.max(1.0) * umax);
            if r > max_residual {
                max_residual = r;
                worst_state = states[s];
            }
        }
    }
    let n2 = (n * n) as f64;
    let mut max_orth: f64 = 0.0;
    for (a, ua) in indices.iter().zip(&us) {
        for (b, ub) in indices.iter().zip(&us) {
            let ip: f64 = ua.iter().zip(ub).map(|(x, y)| x * y).sum();
            let want = if a == b { n2 } else { 0.0 };
            max_orth = max_orth.max((ip - want).abs() / n2);
        }
    }
    if max_residual > 1e-8 {
        return Err(Error::invariant(
            "two-particle eigen-residual",
            format!("relative residual {max_residual:e} at {worst_state:?}"),
        ));
    }
    if max_orth > 1e-8 {
        return Err(Error::invariant("two-particle orthogonality", format!("relative error {max_orth:e}")));
    }
    Ok(TwoParticleReport {
        pairs: indices.to_vec(),
        max_residual,
        worst_state,
        max_orthogonality_error: max_orth,
        basis_count: n * (n - 1) / 2,
        off_diagonal_states: states.iter().filter(|(x, y)| x != y).count(),
    })
}

fn check_start(n: usize, x0: usize, y0: usize) -> Result<()> {
    if !(1 <= x0 && x0 <= y0 && y0 <= n) {
        return Err(Error::param(format!("start ({x0}, {y0}) needs 1 <= x0 <= y0 <= N")));
    }
    Ok(())
}

/// P[X_t ≠ Y_t] from (x0, y0) by uniformization.
pub fn no_merge_probability(p: &ConductanceProfile, x0: usize, y0: usize, t: f64) -> Result<f64> {
    check_start(p.n_sites(), x0, y0)?;
    let chain = TwoParticleChain::new(p);
    let mut start = vec![0.0; chain.generator().len()];
    start[chain.index(x0, y0)] = 1.0;
    let dist = propagate(chain.generator(), &start, t, DEFAULT_TOL);
    Ok(chain.states().zip(dist).filter(|((x, y), _)| x != y).map(|(_, v)| v).sum())
}

/// The same probability from the expansion Σ a_ij e^{−(λi+λj)t} u_ij(x0, y0).
pub fn no_merge_spectral(p: &ConductanceProfile, x0: usize, y0: usize, t: f64) -> Result<f64> {
    let n = p.n_sites();
    check_start(n, x0, y0)?;
    if x0 == y0 {
        return Ok(0.0);
    }
    let sys = solve_neumann(p, n - 1, Normalization::UnitNorm)?;
    let chain = TwoParticleChain::new(p);
    let n2 = (n * n) as f64;
    let mut total = 0.0;
    for i in 0..n {
        for j in i + 1..n {
            let u = u_vector(&chain, &sys, i, j);
            let a: f64 = chain.states().zip(&u).filter(|((x, y), _)| x < y).map(|(_, v)| v).sum::<f64>() / n2;
            let gi = sys.eigenfunction(i);
            let gj = sys.eigenfunction(j);
            let u0 = gi[x0 - 1] * gj[y0 - 1] - gi[y0 - 1] * gj[x0 - 1];
            total += a * (-(sys.eigenvalue(i) + sys.eigenvalue(j)) * t).exp() * u0;
        }
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn index_is_dense() {
        let p = ConductanceProfile::homogeneous(5).unwrap();
        let c = TwoParticleChain::new(&p);
        for (i, (x, y)) in c.states().enumerate() {
            assert_eq!(c.index(x, y), i);
        }
        assert!(!c.diagonal_leaks());
    }

    #[test]
    fn n3_first_pair() {
        let p = ConductanceProfile::homogeneous(3).unwrap();
        let rep = two_particle_check(&p, &[(0, 1)]).unwrap();
        assert_eq!(rep.basis_count, 3);
        assert_eq!(rep.off_diagonal_states, 3);
        let sys = solve_neumann(&p, 1, Normalization::UnitNorm).unwrap();
        assert!((sys.eigenvalue(1) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn trivial_merge_cases() {
        let p = ConductanceProfile::homogeneous(6).unwrap();
        assert_eq!(no_merge_probability(&p, 2, 5, 0.0).unwrap(), 1.0);
        assert_eq!(no_merge_probability(&p, 3, 3, 2.0).unwrap(), 0.0);
    }
}

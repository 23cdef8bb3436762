//! Eigenproblems of the one-particle chain and of the Dirichlet
//! conductance Laplacian that drives the mean height function.
//!
//! Both share the positive definite tridiagonal matrix
//! `M = C^{1/2} T C^{1/2}`, with `T = tridiag(-1, 2, -1)` of size N−1 and
//! `C = diag(c(x,x+1))`. Its eigenvalues are the nonzero one-particle
//! eigenvalues, and `-M` is the ν-symmetrization of the Dirichlet operator.

mod extended;
mod heat;
mod shooting;
pub mod tridiag;

use serde::{Deserialize, Serialize};

pub use extended::{solve_extended, ExtendedEigenData};
pub use heat::{heat_solution, HeatSolver};
pub use shooting::{angle_count, b_recursion, lifted_angle, Projective};
use tridiag::SymTridiag;

use crate::error::{Error, Result};
use crate::profile::ConductanceProfile;

/// Above this many sites only the requested leading pairs are computed.
const DENSE_LIMIT: usize = 400;
pub const BISECTION_REL_TOL: f64 = 1e-12;
pub const BISECTION_MAX_ITER: usize = 200;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Boundary {
    Neumann,
    Dirichlet,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Normalization {
    /// g(1) = 1.
    FirstSite,
    /// ⟨g, g⟩ = 1 under the system's measure, with g(1) > 0.
    UnitNorm,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Dense,
    Shooting,
}

/// Tridiagonal operator acting on functions of the sites.
#[derive(Clone, Debug)]
pub struct TriDiagOperator {
    pub boundary: Boundary,
    pub diag: Vec<f64>,
    /// `lower[i]` is entry (i+1, i).
    pub lower: Vec<f64>,
    /// `upper[i]` is entry (i, i+1).
    pub upper: Vec<f64>,
}

impl TriDiagOperator {
    /// One-particle generator on sites 1..N.
    pub fn neumann(p: &ConductanceProfile) -> Self {
        let n = p.n_sites();
        let c = p.rates();
        let diag = (0..n)
            .map(|i| -(if i > 0 { c[i - 1] } else { 0.0 } + if i + 1 < n { c[i] } else { 0.0 }))
            .collect();
        Self { boundary: Boundary::Neumann, diag, lower: c.to_vec(), upper: c.to_vec() }
    }

    /// Dirichlet operator on 1..N−1: row x is c(x,x+1)·(1, −2, 1).
    pub fn dirichlet(p: &ConductanceProfile) -> Self {
        let c = p.rates();
        let m = c.len();
        Self {
            boundary: Boundary::Dirichlet,
            diag: c.iter().map(|v| -2.0 * v).collect(),
            lower: (1..m).map(|i| c[i]).collect(),
            upper: (0..m.saturating_sub(1)).map(|i| c[i]).collect(),
        }
    }

    pub fn n(&self) -> usize {
        self.diag.len()
    }

    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        let n = self.n();
        (0..n)
            .map(|i| {
                let mut s = self.diag[i] * v[i];
                if i > 0 {
                    s += self.lower[i - 1] * v[i - 1];
                }
                if i + 1 < n {
                    s += self.upper[i] * v[i + 1];
                }
                s
            })
            .collect()
    }

    /// ‖A g + λ g‖_∞.
    pub fn residual(&self, g: &[f64], lambda: f64) -> f64 {
        self.apply(g).iter().zip(g).map(|(a, x)| (a + lambda * x).abs()).fold(0.0, f64::max)
    }
}

/// Leading eigenpairs with their measure.
#[derive(Clone, Debug, Serialize)]
pub struct EigenSystem {
    pub boundary: Boundary,
    /// Index of the first stored pair: 0 for Neumann (λ_0 = 0), 1 for Dirichlet.
    pub first_index: usize,
    /// Positive values, increasing.
    pub eigenvalues: Vec<f64>,
    /// One function per eigenvalue, indexed by site starting at x = 1.
    pub eigenfunctions: Vec<Vec<f64>>,
    pub measure: Vec<f64>,
    pub normalization: Normalization,
}

impl EigenSystem {
    pub fn eigenvalue(&self, i: usize) -> f64 {
        self.eigenvalues[i - self.first_index]
    }

    pub fn eigenfunction(&self, i: usize) -> &[f64] {
        &self.eigenfunctions[i - self.first_index]
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    /// ⟨f, g⟩ under the system's measure.
    pub fn inner(&self, f: &[f64], g: &[f64]) -> f64 {
        self.measure.iter().zip(f).zip(g).map(|((m, a), b)| m * a * b).sum()
    }
}

/// `M = C^{1/2} T C^{1/2}` on the N−1 edges.
pub fn edge_matrix(p: &ConductanceProfile) -> SymTridiag {
    let c = p.rates();
    let diag = c.iter().map(|v| 2.0 * v).collect();
    let off = c.windows(2).map(|w| -(w[0] * w[1]).sqrt()).collect();
    SymTridiag::new(diag, off)
}

/// Smallest `count` eigenpairs of `m`, dense or by bisection depending on size.
fn leading_pairs(m: &SymTridiag, count: usize) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    if m.n() <= DENSE_LIMIT || count * 4 > m.n() {
        let (mut vals, mut vecs) = m.eigen_all(true)?;
        vals.truncate(count);
        vecs.truncate(count);
        Ok((vals, vecs))
    } else {
        let mut vals = Vec::with_capacity(count);
        let mut vecs = Vec::with_capacity(count);
        for i in 0..count {
            let v = m.bisect(i, BISECTION_REL_TOL, BISECTION_MAX_ITER)?;
            vecs.push(m.eigenvector(v));
            vals.push(v);
        }
        Ok((vals, vecs))
    }
}

fn check_count(p: &ConductanceProfile, count: usize) -> Result<()> {
    if count < 1 || count > p.n_edges() {
        return Err(Error::param(format!("count = {count} outside 1..{}", p.n_edges())));
    }
    Ok(())
}

fn fix_sign_and_scale(g: &mut [f64], measure: &[f64], norm: Normalization) {
    let scale = match norm {
        Normalization::FirstSite => g[0],
        Normalization::UnitNorm => {
            let n2: f64 = measure.iter().zip(g.iter()).map(|(m, v)| m * v * v).sum();
            n2.sqrt().copysign(g[0])
        }
    };
    g.iter_mut().for_each(|v| *v /= scale);
}

fn verify_pairs(op: &TriDiagOperator, sys: &EigenSystem) -> Result<()> {
    for (j, (lambda, g)) in sys.eigenvalues.iter().zip(&sys.eigenfunctions).enumerate() {
        let gmax = g.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let res = op.residual(g, *lambda);
        if res > 1e-10 * lambda.max(1.0) * gmax.max(1.0) {
            return Err(Error::invariant(
                "eigen-residual",
                format!("pair {} has residual {res:e}", j + sys.first_index),
            ));
        }
    }
    for w in sys.eigenvalues.windows(2) {
        if w[1] <= w[0] {
            return Err(Error::invariant("strictly increasing eigenvalues", format!("{} then {}", w[0], w[1])));
        }
    }
    Ok(())
}

/// λ_0 = 0 and the first `count` nontrivial eigenpairs of the one-particle
/// generator, under the uniform probability measure.
pub fn solve_neumann(p: &ConductanceProfile, count: usize, norm: Normalization) -> Result<EigenSystem> {
    check_count(p, count)?;
    let n = p.n_sites();
    let c = p.rates();
    let (vals, vecs) = leading_pairs(&edge_matrix(p), count)?;
    let measure = vec![1.0 / n as f64; n];
    let mut eigenvalues = vec![0.0];
    let mut eigenfunctions = vec![vec![1.0; n]];
    for (lambda, u) in vals.into_iter().zip(vecs) {
        // g(y) = (a(y−1) − a(y))/λ with a = C^{1/2} u on edges and a = 0 off the segment.
        let a: Vec<f64> = u.iter().zip(c).map(|(ui, ci)| ui * ci.sqrt()).collect();
        let mut g: Vec<f64> = (1..=n)
            .map(|y| {
                let left = if y >= 2 { a[y - 2] } else { 0.0 };
                let right = if y < n { a[y - 1] } else { 0.0 };
                (left - right) / lambda
            })
            .collect();
        fix_sign_and_scale(&mut g, &measure, norm);
        eigenvalues.push(lambda);
        eigenfunctions.push(g);
    }
    let sys = EigenSystem { boundary: Boundary::Neumann, first_index: 0, eigenvalues, eigenfunctions, measure, normalization: norm };
    verify_pairs(&TriDiagOperator::neumann(p), &sys)?;
    Ok(sys)
}

/// ν(x) = r(x,x+1)/Σr, summed with compensation.
pub fn nu_measure(p: &ConductanceProfile) -> Vec<f64> {
    let total = kahan_sum(p.resistances());
    p.resistances().iter().map(|r| r / total).collect()
}

pub fn kahan_sum(xs: &[f64]) -> f64 {
    let (mut sum, mut comp) = (0.0f64, 0.0f64);
    for &x in xs {
        let y = x - comp;
        let t = sum + y;
        comp = (t - sum) - y;
        sum = t;
    }
    sum
}

/// First `count` eigenpairs κ_1 < κ_2 < … of the Dirichlet operator, ν-normalized.
pub fn solve_dirichlet(p: &ConductanceProfile, count: usize, method: Method, norm: Normalization) -> Result<EigenSystem> {
    check_count(p, count)?;
    let m = edge_matrix(p);
    let (vals, vecs) = match method {
        Method::Dense => leading_pairs(&m, count)?,
        Method::Shooting => {
            let vals = shooting::eigenvalues(p, count)?;
            let vecs = vals.iter().map(|&k| m.eigenvector(k)).collect();
            (vals, vecs)
        }
    };
    let measure = nu_measure(p);
    let mut eigenfunctions = Vec::with_capacity(count);
    for w in vecs {
        let mut g: Vec<f64> = w.iter().zip(&measure).map(|(wi, nu)| wi / nu.sqrt()).collect();
        fix_sign_and_scale(&mut g, &measure, norm);
        eigenfunctions.push(g);
    }
    let sys = EigenSystem {
        boundary: Boundary::Dirichlet,
        first_index: 1,
        eigenvalues: vals,
        eigenfunctions,
        measure,
        normalization: norm,
    };
    verify_pairs(&TriDiagOperator::dirichlet(p), &sys)?;
    Ok(sys)
}

/// λ_1 alone, cheap at any size.
pub fn spectral_gap(p: &ConductanceProfile) -> Result<f64> {
    edge_matrix(p).bisect(0, BISECTION_REL_TOL, BISECTION_MAX_ITER)
}

/// Weighted gradient (c∇f)(x) = c(x−1,x)[f(x) − f(x−1)] for x = 2..N, with `f` indexed from site 1.
pub fn weighted_gradient(p: &ConductanceProfile, f: &[f64]) -> Vec<f64> {
    (2..=p.n_sites()).map(|x| p.rate(x - 1) * (f[x - 1] - f[x - 2])).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn closed(i: usize, n: usize) -> f64 {
        2.0 * (1.0 - (i as f64 * PI / n as f64).cos())
    }

    #[test]
    fn homogeneous_neumann_shapes() {
        let n = 16;
        let p = ConductanceProfile::homogeneous(n).unwrap();
        let sys = solve_neumann(&p, 3, Normalization::FirstSite).unwrap();
        assert_eq!(sys.eigenvalue(0), 0.0);
        for i in 1..=3 {
            assert!((sys.eigenvalue(i) / closed(i, n) - 1.0).abs() < 1e-12);
            let g = sys.eigenfunction(i);
            let c1 = (i as f64 * PI * 0.5 / n as f64).cos();
            for x in 1..=n {
                let want = (i as f64 * PI * (x as f64 - 0.5) / n as f64).cos() / c1;
                assert!((g[x - 1] - want).abs() < 1e-10);
            }
        }
        let g1 = sys.eigenfunction(1);
        assert!(g1.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn homogeneous_dirichlet_n4() {
        let p = ConductanceProfile::homogeneous(4).unwrap();
        for method in [Method::Dense, Method::Shooting] {
            let sys = solve_dirichlet(&p, 3, method, Normalization::UnitNorm).unwrap();
            let want = [2.0 - 2f64.sqrt(), 2.0, 2.0 + 2f64.sqrt()];
            for i in 0..3 {
                assert!((sys.eigenvalues[i] / want[i] - 1.0).abs() < 1e-12, "{method:?}");
            }
            for i in 1..=3 {
                for j in 1..=3 {
                    let ip = sys.inner(sys.eigenfunction(i), sys.eigenfunction(j));
                    assert!((ip - if i == j { 1.0 } else { 0.0 }).abs() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn nu_sums_to_one() {
        let p = ConductanceProfile::from_resistances(vec![0.1, 0.7, 3.0, 1.3]).unwrap();
        assert!((kahan_sum(&nu_measure(&p)) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn count_range_checked() {
        let p = ConductanceProfile::homogeneous(4).unwrap();
        assert!(solve_neumann(&p, 0, Normalization::FirstSite).is_err());
        assert!(solve_neumann(&p, 4, Normalization::FirstSite).is_err());
    }
}

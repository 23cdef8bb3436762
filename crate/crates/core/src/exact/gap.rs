//! Spectral gap of −Q by Lanczos with the constant vector deflated.

use serde::Serialize;

use super::chain::ChainMatrix;
use super::sparse::SparseGenerator;
use crate::error::{Error, Result};
use crate::spectral::tridiag::SymTridiag;

#[derive(Clone, Copy, Debug, Serialize)]
pub struct GapResult {
    pub gap: f64,
    pub residual: f64,
    pub restarts: usize,
}

const RESIDUAL_TOL: f64 = 1e-10;
const MAX_KRYLOV: usize = 120;
const MAX_RESTARTS: usize = 200;

pub fn gap_of(chain: &ChainMatrix) -> Result<f64> {
    let r = lanczos_gap(chain.generator())?;
    if r.residual > 1e-9 {
        return Err(Error::invariant("Lanczos residual", format!("{:e}", r.residual)));
    }
    Ok(r.gap)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn orthogonalize(v: &mut [f64], basis: &[Vec<f64>]) {
    // Two passes of classical Gram–Schmidt, plus the constant direction.
    for _ in 0..2 {
        let mean = v.iter().sum::<f64>() / v.len() as f64;
        v.iter_mut().for_each(|x| *x -= mean);
        for b in basis {
            let c = dot(v, b);
            v.iter_mut().zip(b).for_each(|(x, y)| *x -= c * y);
        }
    }
}

/// Smallest eigenvalue of −Q on the complement of constants, for symmetric Q.
pub fn lanczos_gap(q: &SparseGenerator) -> Result<GapResult> {
    let n = q.len();
    if n < 2 {
        return Err(Error::param("a chain with one state has no gap"));
    }
    let dim = (n - 1).min(MAX_KRYLOV);
    let mut start: Vec<f64> = (0..n).map(|i| ((i as f64 + 1.0) * 0.618_033_988_75).fract() - 0.5).collect();
    let mut av = vec![0.0; n];
    for restart in 0..MAX_RESTARTS {
        orthogonalize(&mut start, &[]);
        let norm = dot(&start, &start).sqrt();
        start.iter_mut().for_each(|x| *x /= norm);
        let mut basis: Vec<Vec<f64>> = vec![start.clone()];
        let mut alpha = Vec::new();
        let mut beta = Vec::new();
        loop {
            let j = basis.len() - 1;
            q.apply_into(&basis[j], &mut av);
            let mut w: Vec<f64> = av.iter().map(|x| -x).collect();
            let a = dot(&w, &basis[j]);
            alpha.push(a);
            orthogonalize(&mut w, &basis);
            let b = dot(&w, &w).sqrt();
            if basis.len() == dim || b < 1e-13 * a.abs().max(1.0) {
                beta.push(b);
                break;
            }
            beta.push(b);
            w.iter_mut().for_each(|x| *x /= b);
            basis.push(w);
        }
        let m = alpha.len();
        let t = SymTridiag::new(alpha.clone(), beta[..m - 1].to_vec());
        let (vals, vecs) = t.eigen_all(true)?;
        let theta = vals[0];
        let s = &vecs[0];
        let residual = (beta[m - 1] * s[m - 1]).abs();
        let mut ritz = vec![0.0; n];
        for (c, b) in s.iter().zip(&basis) {
            ritz.iter_mut().zip(b).for_each(|(r, x)| *r += c * x);
        }
        if residual <= RESIDUAL_TOL * theta.abs().max(1.0) {
            // Recompute the residual directly.
            let norm = dot(&ritz, &ritz).sqrt();
            ritz.iter_mut().for_each(|x| *x /= norm);
            q.apply_into(&ritz, &mut av);
            let direct = av.iter().zip(&ritz).map(|(a, r)| (-a - theta * r).powi(2)).sum::<f64>().sqrt();
            return Ok(GapResult { gap: theta, residual: direct, restarts: restart });
        }
        start = ritz;
    }
    Err(Error::Convergence { method: "Lanczos", iterations: MAX_RESTARTS })
}

//! Spectral solution of ∂f = Âf on 1..N−1 with f(0) = f(N) = 0.

use super::{solve_dirichlet, EigenSystem, Method, Normalization};
use crate::config::HeightFunction;
use crate::error::Result;
use crate::profile::ConductanceProfile;

/// Full ν-orthonormal Dirichlet basis, reusable across times and initial data.
#[derive(Clone, Debug)]
pub struct HeatSolver {
    basis: EigenSystem,
}

impl HeatSolver {
    pub fn new(p: &ConductanceProfile) -> Result<Self> {
        Ok(Self { basis: solve_dirichlet(p, p.n_edges(), Method::Dense, Normalization::UnitNorm)? })
    }

    pub fn basis(&self) -> &EigenSystem {
        &self.basis
    }

    /// Smallest Dirichlet eigenvalue κ_1.
    pub fn kappa1(&self) -> f64 {
        self.basis.eigenvalue(1)
    }

    /// Coefficients ⟨h0, g_i⟩_ν for interior values h0(1..N−1).
    pub fn coefficients(&self, interior: &[f64]) -> Vec<f64> {
        self.basis.eigenfunctions.iter().map(|g| self.basis.inner(interior, g)).collect()
    }

    /// f(t, 0..N) from interior initial values.
    pub fn evolve(&self, interior: &[f64], t: f64) -> Vec<f64> {
        let coeffs = self.coefficients(interior);
        let m = interior.len();
        let mut f = vec![0.0; m + 2];
        for ((a, kappa), g) in coeffs.iter().zip(&self.basis.eigenvalues).zip(&self.basis.eigenfunctions) {
            let w = a * (-kappa * t).exp();
            for x in 0..m {
                f[x + 1] += w * g[x];
            }
        }
        f
    }

    pub fn solve(&self, h0: &HeightFunction, t: f64) -> Vec<f64> {
        let v = h0.values();
        self.evolve(&v[1..v.len() - 1], t)
    }
}

/// f(t, x) for x = 0..N.
pub fn heat_solution(p: &ConductanceProfile, h0: &HeightFunction, t: f64) -> Result<Vec<f64>> {
    Ok(HeatSolver::new(p)?.solve(h0, t))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{Configuration, Extremal};

    #[test]
    fn identity_at_zero_and_decay() {
        let p = ConductanceProfile::from_resistances(vec![0.6, 1.7, 1.1, 0.9, 1.4, 0.8, 1.2]).unwrap();
        let h0 = HeightFunction::of(&Configuration::extremal(8, 4, Extremal::Max).unwrap());
        let f0 = heat_solution(&p, &h0, 0.0).unwrap();
        for (a, b) in f0.iter().zip(h0.values()) {
            assert!((a - b).abs() < 1e-8);
        }
        let late = heat_solution(&p, &h0, 1e4).unwrap();
        assert!(late.iter().all(|v| v.abs() < 1e-12));
    }
}

//! Shooting for the Dirichlet spectrum.
//!
//! With u = g(x−1) − g(x) and v = g(x−1), the ratio b(κ,x) = u/v obeys
//! b(κ,x+1) = b/(1−b) + κ r(x,x+1) starting from b(κ,1) = ∞. The pair (u, v)
//! evolves linearly by [[1−κr, κr], [−1, 1]], so b is tracked projectively and
//! the pole at b = 1 is an ordinary state. The angle of (v, u) is lifted by
//! accumulating each step's rotation, always taken in (0, 2π).

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

use serde::Serialize;

use super::{BISECTION_MAX_ITER, BISECTION_REL_TOL};
use crate::error::{Error, Result};
use crate::profile::ConductanceProfile;

/// A point of the projective line, u/v.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Projective {
    pub u: f64,
    pub v: f64,
}

impl Projective {
    pub const INFINITY: Projective = Projective { u: 1.0, v: 0.0 };

    pub fn is_infinite(&self) -> bool {
        self.v == 0.0
    }

    pub fn value(&self) -> f64 {
        if self.is_infinite() { f64::INFINITY } else { self.u / self.v }
    }

    fn step(self, kr: f64) -> Projective {
        let u = (1.0 - kr) * self.u + kr * self.v;
        let v = self.v - self.u;
        let s = u.abs().max(v.abs());
        if s > 1e100 || (s < 1e-100 && s > 0.0) { Projective { u: u / s, v: v / s } } else { Projective { u, v } }
    }
}

/// b(κ, x) for x = 1..N.
pub fn b_recursion(p: &ConductanceProfile, kappa: f64) -> Result<Vec<Projective>> {
    if !(kappa > 0.0 && kappa.is_finite()) {
        return Err(Error::param(format!("kappa = {kappa} must be positive")));
    }
    let mut out = Vec::with_capacity(p.n_sites());
    let mut b = Projective::INFINITY;
    out.push(b);
    for &r in p.resistances() {
        b = b.step(kappa * r);
        out.push(b);
    }
    Ok(out)
}

/// Lifted angle θ(κ, N), starting from θ(κ, 1) = π/2.
pub fn lifted_angle(p: &ConductanceProfile, kappa: f64) -> f64 {
    let mut theta = FRAC_PI_2;
    let mut b = Projective::INFINITY;
    for &r in p.resistances() {
        let next = b.step(kappa * r);
        // Rotation from (v, u) to (v', u').
        let cross = b.v * next.u - b.u * next.v;
        let dot = b.v * next.v + b.u * next.u;
        let mut delta = cross.atan2(dot);
        if delta <= 0.0 {
            delta += 2.0 * PI;
        }
        theta += delta;
        b = next;
    }
    theta
}

fn raw_count(p: &ConductanceProfile, kappa: f64) -> usize {
    let theta = lifted_angle(p, kappa);
    ((theta - FRAC_PI_4) / PI).floor().max(0.0) as usize
}

/// Number of Dirichlet eigenvalues strictly below κ.
pub fn angle_count(p: &ConductanceProfile, kappa: f64) -> Result<usize> {
    if !(kappa > 0.0 && kappa.is_finite()) {
        return Err(Error::param(format!("kappa = {kappa} must be positive")));
    }
    let below = raw_count(p, kappa * (1.0 - 1e-13));
    let above = raw_count(p, kappa * (1.0 + 1e-13));
    if below != above {
        return Err(Error::AmbiguousCount { kappa });
    }
    Ok(raw_count(p, kappa))
}

/// κ_1..κ_count by bisection on the angle count.
pub(super) fn eigenvalues(p: &ConductanceProfile, count: usize) -> Result<Vec<f64>> {
    let top = 4.0 * p.max_rate() * (1.0 + 1e-9) + f64::MIN_POSITIVE;
    let total = raw_count(p, top);
    if total != p.n_edges() {
        return Err(Error::Bracket(format!(
            "angle interval [π/2, {:.6}] at κ = {top} counts {total} eigenvalues, expected {}",
            lifted_angle(p, top),
            p.n_edges()
        )));
    }
    let mut out = Vec::with_capacity(count);
    let mut lo_start = 0.0;
    for i in 1..=count {
        let (mut lo, mut hi) = (lo_start, top);
        let mut done = false;
        for _ in 0..BISECTION_MAX_ITER {
            let mid = 0.5 * (lo + hi);
            if hi - lo <= BISECTION_REL_TOL * mid {
                done = true;
                break;
            }
            if raw_count(p, mid) >= i {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        if !done {
            return Err(Error::Convergence { method: "angle bisection", iterations: BISECTION_MAX_ITER });
        }
        let k = 0.5 * (lo + hi);
        out.push(k);
        lo_start = lo;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_iterated_n3() {
        let p = ConductanceProfile::homogeneous(3).unwrap();
        let b = b_recursion(&p, 1.0).unwrap();
        assert!(b[0].is_infinite());
        assert_eq!(b[1].value(), 0.0);
        assert_eq!(b[2].value(), 1.0);
    }

    #[test]
    fn n2_kappa2_is_eigenvalue() {
        let p = ConductanceProfile::homogeneous(2).unwrap();
        let b = b_recursion(&p, 2.0).unwrap();
        assert_eq!(b[1].value(), 1.0);
        assert!(matches!(angle_count(&p, 2.0), Err(Error::AmbiguousCount { .. })));
    }

    #[test]
    fn small_kappa_limit_is_linear_profile() {
        // κ → 0 gives g(x) = x, hence b(x) = −1/(x−1) for x ≥ 2.
        let p = ConductanceProfile::from_resistances(vec![0.7, 1.9, 1.1, 0.6]).unwrap();
        let b = b_recursion(&p, 1e-12).unwrap();
        for (x, bx) in b.iter().enumerate().skip(1) {
            let x = x + 1;
            assert!((bx.value() + 1.0 / (x as f64 - 1.0)).abs() < 1e-9);
            assert!((bx.value() - 1.0).abs() > 0.1);
        }
    }

    #[test]
    fn counts() {
        let p = ConductanceProfile::homogeneous(4).unwrap();
        assert_eq!(angle_count(&p, 1.0).unwrap(), 1);
        assert_eq!(angle_count(&p, 0.1).unwrap(), 0);
        assert_eq!(angle_count(&p, 10.0).unwrap(), 3);
        assert!(angle_count(&p, 0.0).is_err());
    }
}

//! Principal eigenfunction of the segment embedded in a longer one with unit
//! conductances outside 1..N.

use serde::Serialize;

use super::{solve_neumann, Normalization};
use crate::error::{Error, Result};
use crate::profile::ConductanceProfile;

#[derive(Clone, Debug, Serialize)]
pub struct ExtendedEigenData {
    pub delta: f64,
    /// Number of sites added on each side, ⌊δN⌋.
    pub margin: usize,
    /// N̄ = N + 2⌊δN⌋ + 1.
    pub n_bar: usize,
    pub lambda_bar: f64,
    /// G over sites −margin..N+margin, with G(−margin) = 1.
    pub g: Vec<f64>,
    /// Ḡ(x) = G(x) − G(x+1) for x = 1..N−1.
    pub g_bar: Vec<f64>,
    pub delta_min: f64,
    pub delta_max: f64,
    /// δ̄_min recomputed as λ̄ · min over 1 ≤ x < N of Σ_{y ≤ x} G(y).
    pub delta_min_identity: f64,
}

impl ExtendedEigenData {
    /// G at site `x` in −margin..N+margin.
    pub fn g_at(&self, x: i64) -> f64 {
        self.g[(x + self.margin as i64) as usize]
    }
}

pub fn solve_extended(p: &ConductanceProfile, delta: f64) -> Result<ExtendedEigenData> {
    let n = p.n_sites();
    if !(delta > 0.0 && delta <= 1.0) {
        return Err(Error::param(format!("delta = {delta} outside (0, 1]")));
    }
    let margin = (delta * n as f64).floor() as usize;
    if margin < 1 {
        return Err(Error::param(format!("delta·N = {} < 1 leaves nothing to embed", delta * n as f64)));
    }
    let ext = p.extended(margin);
    let sys = solve_neumann(&ext, 1, Normalization::FirstSite)?;
    let lambda_bar = sys.eigenvalue(1);
    let g = sys.eigenfunction(1).to_vec();
    if !g.windows(2).all(|w| w[1] < w[0]) {
        return Err(Error::invariant("extended eigenfunction strictly decreasing", "G is not monotone"));
    }
    let at = |x: usize| g[x + margin];
    let g_bar: Vec<f64> = (1..n).map(|x| at(x) - at(x + 1)).collect();
    // |(c∇G)(x)| for x = 2..N, i.e. across the edges 1..N−1.
    let grads: Vec<f64> = (2..=n).map(|x| p.rate(x - 1) * (at(x - 1) - at(x))).collect();
    let delta_min = grads.iter().copied().fold(f64::INFINITY, f64::min);
    let delta_max = grads.iter().copied().fold(0.0, f64::max);
    let mut partial: f64 = g[..=margin].iter().sum();
    let mut min_partial = f64::INFINITY;
    for x in 1..n {
        partial += at(x);
        min_partial = min_partial.min(partial);
    }
    let delta_min_identity = lambda_bar * min_partial;
    if ((delta_min - delta_min_identity) / delta_min).abs() > 1e-9 {
        return Err(Error::invariant(
            "flux identity for the minimal weighted gradient",
            format!("direct {delta_min:e} vs partial sums {delta_min_identity:e}"),
        ));
    }
    Ok(ExtendedEigenData {
        delta,
        margin,
        n_bar: ext.n_sites(),
        lambda_bar,
        g,
        g_bar,
        delta_min,
        delta_max,
        delta_min_identity,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn homogeneous_closed_form() {
        let p = ConductanceProfile::homogeneous(20).unwrap();
        let d = solve_extended(&p, 0.25).unwrap();
        assert_eq!((d.margin, d.n_bar), (5, 31));
        let nb = d.n_bar as f64;
        for x in -5i64..=25 {
            let want = (PI * (x as f64 + 5.0 + 0.5) / nb).cos() / (PI / (2.0 * nb)).cos();
            assert!((d.g_at(x) - want).abs() < 1e-11);
        }
        assert!(d.g_bar.iter().all(|v| *v > 0.0));
        assert!(d.delta_min <= d.delta_max);
    }

    #[test]
    fn scaled_gradients_bounded() {
        let p = ConductanceProfile::homogeneous(64).unwrap();
        let d = solve_extended(&p, 0.1).unwrap();
        let (lo, hi) = (64.0 * d.delta_min, 64.0 * d.delta_max);
        assert!((0.1..=10.0).contains(&lo) && (0.1..=10.0).contains(&hi), "{lo} {hi}");
    }

    #[test]
    fn rejects_tiny_delta() {
        let p = ConductanceProfile::homogeneous(8).unwrap();
        assert!(solve_extended(&p, 0.05).is_err());
        assert!(solve_extended(&p, 1.5).is_err());
    }
}

use super::chain::ChainMatrix;
use crate::error::{Error, Result};

/// F(ξ) = Σ_x ξ(x) g(x) on every state, with ‖QF + λF‖_∞ verified.
pub fn lift_eigenfunction(chain: &ChainMatrix, g: &[f64], lambda: f64) -> Result<Vec<f64>> {
    if g.len() != chain.n() {
        return Err(Error::param("one-particle function must have N values"));
    }
    let f: Vec<f64> = (0..chain.len())
        .map(|i| {
            let mut m = chain.mask(i);
            let mut s = 0.0;
            while m != 0 {
                s += g[m.trailing_zeros() as usize];
                m &= m - 1;
            }
            s
        })
        .collect();
    let qf = chain.generator().apply(&f);
    let fmax = f.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let (worst, res) = qf
        .iter()
        .zip(&f)
        .map(|(a, b)| (a + lambda * b).abs())
        .enumerate()
        .fold((0, 0.0), |acc, (i, r)| if r > acc.1 { (i, r) } else { acc });
    if res > 1e-8 * lambda.max(1.0) * fmax.max(1.0) {
        return Err(Error::invariant(
            "lifted eigenfunction residual",
            format!("residual {res:e} at state {}", chain.state(worst)),
        ));
    }
    Ok(f)
}

/// Mean and second moment of `f` under the uniform measure.
pub fn stationary_moments(f: &[f64]) -> (f64, f64) {
    let n = f.len() as f64;
    (f.iter().sum::<f64>() / n, f.iter().map(|v| v * v).sum::<f64>() / n)
}

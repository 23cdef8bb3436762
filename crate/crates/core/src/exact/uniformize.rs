//! e^{tQ} by uniformization: a Poisson mixture of powers of P = I + Q/Λ.

use super::sparse::SparseGenerator;

pub const DEFAULT_TOL: f64 = 1e-12;

/// Normalized Poisson(a) weights on the window [left, left + len) whose
/// complement has mass at most `tol`.
pub fn poisson_window(a: f64, tol: f64) -> (usize, Vec<f64>) {
    if a <= 0.0 {
        return (0, vec![1.0]);
    }
    let mode = a.floor() as usize;
    // Unnormalized weights relative to the mode, out to 1e-40 relative.
    let mut down = Vec::new();
    let mut w = 1.0;
    let mut n = mode;
    while n > 0 {
        w *= n as f64 / a;
        if w < 1e-40 {
            break;
        }
        down.push(w);
        n -= 1;
    }
    let mut up = Vec::new();
    let mut w = 1.0;
    let mut n = mode;
    loop {
        w *= a / (n + 1) as f64;
        if w < 1e-40 {
            break;
        }
        up.push(w);
        n += 1;
    }
    let first = mode - down.len();
    let mut weights: Vec<f64> = down.into_iter().rev().collect();
    weights.push(1.0);
    weights.extend(up);
    let total: f64 = weights.iter().sum();
    weights.iter_mut().for_each(|v| *v /= total);
    // Trim each tail to tol/4.
    let (mut lo, mut acc) = (0, 0.0);
    while lo < weights.len() && acc + weights[lo] <= tol / 4.0 {
        acc += weights[lo];
        lo += 1;
    }
    let (mut hi, mut acc) = (weights.len(), 0.0);
    while hi > lo + 1 && acc + weights[hi - 1] <= tol / 4.0 {
        acc += weights[hi - 1];
        hi -= 1;
    }
    (first + lo, weights[lo..hi].to_vec())
}

/// Row vector `p0 · e^{tQ}` to L¹ accuracy `tol`. Mass is preserved.
pub fn propagate(q: &SparseGenerator, p0: &[f64], t: f64, tol: f64) -> Vec<f64> {
    if t <= 0.0 {
        return p0.to_vec();
    }
    let lambda = q.uniformization_rate();
    if lambda == 0.0 {
        return p0.to_vec();
    }
    let (left, weights) = poisson_window(lambda * t, tol);
    let mut v = p0.to_vec();
    let mut scratch = vec![0.0; v.len()];
    let mut acc = vec![0.0; v.len()];
    let last = left + weights.len();
    for step in 0..last {
        if step >= left {
            let w = weights[step - left];
            acc.iter_mut().zip(&v).for_each(|(a, x)| *a += w * x);
        }
        if step + 1 < last {
            // v ← v (I + Q/Λ)
            q.left_apply_into(&v, &mut scratch);
            v.iter_mut().zip(&scratch).for_each(|(x, s)| *x += s / lambda);
        }
    }
    // Each P^n preserves mass, so dividing by the kept Poisson weight restores it.
    let kept: f64 = weights.iter().sum();
    acc.iter_mut().for_each(|a| *a /= kept);
    acc
}

/// Compose propagators over consecutive segments with their own generators.
pub fn propagate_piecewise(segments: &[(&SparseGenerator, f64)], p0: &[f64], tol: f64) -> Vec<f64> {
    let per = tol / segments.len().max(1) as f64;
    segments.iter().fold(p0.to_vec(), |p, (q, dt)| propagate(q, &p, *dt, per))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn poisson_window_mass() {
        for a in [0.3, 5.0, 123.4, 25_000.0] {
            let (left, w) = poisson_window(a, 1e-12);
            let s: f64 = w.iter().sum();
            assert!((s - 1.0).abs() < 1e-12, "{a}");
            assert!(left as f64 <= a);
        }
    }
}

//! Symmetric tridiagonal eigensolvers: implicit-shift QL, Sturm bisection and
//! inverse iteration.

use crate::error::{Error, Result};

/// Symmetric tridiagonal matrix. `off[i]` couples rows `i` and `i+1`.
#[derive(Clone, Debug, PartialEq)]
pub struct SymTridiag {
    pub diag: Vec<f64>,
    pub off: Vec<f64>,
}

impl SymTridiag {
    pub fn new(diag: Vec<f64>, off: Vec<f64>) -> Self {
        assert!(diag.len() == off.len() + 1 || (diag.is_empty() && off.is_empty()));
        Self { diag, off }
    }

    pub fn n(&self) -> usize {
        self.diag.len()
    }

    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        let n = self.n();
        let mut out = vec![0.0; n];
        for i in 0..n {
            let mut s = self.diag[i] * v[i];
            if i > 0 {
                s += self.off[i - 1] * v[i - 1];
            }
            if i + 1 < n {
                s += self.off[i] * v[i + 1];
            }
            out[i] = s;
        }
        out
    }

    /// Gershgorin interval containing the spectrum.
    pub fn gershgorin(&self) -> (f64, f64) {
        let n = self.n();
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for i in 0..n {
            let r = if i > 0 { self.off[i - 1].abs() } else { 0.0 } + if i + 1 < n { self.off[i].abs() } else { 0.0 };
            lo = lo.min(self.diag[i] - r);
            hi = hi.max(self.diag[i] + r);
        }
        (lo, hi)
    }

    fn norm_bound(&self) -> f64 {
        let (lo, hi) = self.gershgorin();
        lo.abs().max(hi.abs()).max(f64::MIN_POSITIVE)
    }

    /// Number of eigenvalues strictly below `x` (LDLᵀ inertia).
    pub fn count_below(&self, x: f64) -> usize {
        let guard = f64::EPSILON * self.norm_bound() * 1e-3;
        let mut count = 0;
        let mut d = 1.0;
        for i in 0..self.n() {
            let coupling = if i > 0 { self.off[i - 1] * self.off[i - 1] / d } else { 0.0 };
            d = self.diag[i] - x - coupling;
            if d.abs() < guard {
                d = -guard;
            }
            if d < 0.0 {
                count += 1;
            }
        }
        count
    }

    /// The `i`-th smallest eigenvalue (0-based) by bisection on the Sturm count.
    pub fn bisect(&self, i: usize, rel_tol: f64, max_iter: usize) -> Result<f64> {
        let (mut lo, mut hi) = self.gershgorin();
        let floor = 4.0 * f64::EPSILON * self.norm_bound();
        for _ in 0..max_iter {
            let mid = 0.5 * (lo + hi);
            if hi - lo <= (rel_tol * mid.abs()).max(floor) {
                return Ok(mid);
            }
            if self.count_below(mid) > i {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        let mid = 0.5 * (lo + hi);
        if hi - lo <= (rel_tol * mid.abs()).max(floor) {
            Ok(mid)
        } else {
            Err(Error::Convergence { method: "Sturm bisection", iterations: max_iter })
        }
    }

    /// Unit eigenvector for an accurate eigenvalue, by inverse iteration.
    pub fn eigenvector(&self, lambda: f64) -> Vec<f64> {
        let n = self.n();
        let scale = self.norm_bound();
        let shift = lambda + 1e-14 * scale;
        let mut v: Vec<f64> = (0..n).map(|i| 1.0 + 0.37 * ((i as f64) * 0.71).sin()).collect();
        normalize(&mut v);
        let diag: Vec<f64> = self.diag.iter().map(|d| d - shift).collect();
        for _ in 0..4 {
            v = solve_tridiag(&self.off, &diag, &self.off, &v, f64::EPSILON * scale);
            normalize(&mut v);
        }
        v
    }

    /// All eigenpairs in increasing order by implicit-shift QL.
    /// Eigenvector `j` is `vectors[j]`.
    pub fn eigen_all(&self, want_vectors: bool) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
        let n = self.n();
        let mut d = self.diag.clone();
        let mut e = self.off.clone();
        e.push(0.0);
        let mut z: Vec<Vec<f64>> = if want_vectors {
            (0..n).map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect()
        } else {
            Vec::new()
        };
        const MAX_ITER: usize = 60;
        for l in 0..n {
            let mut iter = 0;
            loop {
                let mut m = l;
                while m + 1 < n {
                    let dd = d[m].abs() + d[m + 1].abs();
                    if e[m].abs() <= f64::EPSILON * dd {
                        break;
                    }
                    m += 1;
                }
                if m == l {
                    break;
                }
                iter += 1;
                if iter > MAX_ITER {
                    return Err(Error::Convergence { method: "implicit QL", iterations: MAX_ITER });
                }
                let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
                let mut r = g.hypot(1.0);
                g = d[m] - d[l] + e[l] / (g + r.copysign(g));
                let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
                let mut underflow = false;
                let mut i = m;
                while i > l {
                    i -= 1;
                    let f = s * e[i];
                    let b = c * e[i];
                    r = f.hypot(g);
                    e[i + 1] = r;
                    if r == 0.0 {
                        d[i + 1] -= p;
                        e[m] = 0.0;
                        underflow = true;
                        break;
                    }
                    s = f / r;
                    c = g / r;
                    g = d[i + 1] - p;
                    r = (d[i] - g) * s + 2.0 * c * b;
                    p = s * r;
                    d[i + 1] = g + p;
                    g = c * r - b;
                    if want_vectors {
                        for row in z.iter_mut() {
                            let f = row[i + 1];
                            row[i + 1] = s * row[i] + c * f;
                            row[i] = c * row[i] - s * f;
                        }
                    }
                }
                if underflow {
                    continue;
                }
                d[l] -= p;
                e[l] = g;
                e[m] = 0.0;
            }
        }
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| d[a].total_cmp(&d[b]));
        let values = order.iter().map(|&j| d[j]).collect();
        let vectors = if want_vectors {
            order.iter().map(|&j| z.iter().map(|row| row[j]).collect()).collect()
        } else {
            Vec::new()
        };
        Ok((values, vectors))
    }
}

fn normalize(v: &mut [f64]) {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        v.iter_mut().for_each(|x| *x /= norm);
    }
}

/// Solve a general tridiagonal system with partial pivoting.
/// `lower[i]` is A[i+1][i], `upper[i]` is A[i][i+1].
pub fn solve_tridiag(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &[f64], pivot_floor: f64) -> Vec<f64> {
    let n = diag.len();
    if n == 0 {
        return Vec::new();
    }
    // Row i of U holds (u0, u1, u2) at columns (i, i+1, i+2).
    let mut u0 = diag.to_vec();
    let mut u1: Vec<f64> = (0..n).map(|i| if i + 1 < n { upper[i] } else { 0.0 }).collect();
    let mut u2 = vec![0.0; n];
    let mut b = rhs.to_vec();
    let mut sub: Vec<f64> = lower.to_vec();
    for i in 0..n.saturating_sub(1) {
        if sub[i].abs() > u0[i].abs() {
            // Swap rows i and i+1.
            let (a0, a1, a2) = (u0[i], u1[i], u2[i]);
            u0[i] = sub[i];
            u1[i] = u0[i + 1];
            u2[i] = u1[i + 1];
            let next0 = a1;
            let next1 = a2;
            b.swap(i, i + 1);
            let m = a0 / u0[i];
            u0[i + 1] = next0 - m * u1[i];
            u1[i + 1] = next1 - m * u2[i];
            b[i + 1] -= m * b[i];
        } else {
            let piv = if u0[i].abs() < pivot_floor { pivot_floor.copysign(u0[i]) } else { u0[i] };
            u0[i] = piv;
            let m = sub[i] / piv;
            u0[i + 1] -= m * u1[i];
            u1[i + 1] -= m * u2[i];
            b[i + 1] -= m * b[i];
        }
        sub[i] = 0.0;
    }
    if u0[n - 1].abs() < pivot_floor {
        u0[n - 1] = pivot_floor.copysign(u0[n - 1]);
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut s = b[i];
        if i + 1 < n {
            s -= u1[i] * x[i + 1];
        }
        if i + 2 < n {
            s -= u2[i] * x[i + 2];
        }
        x[i] = s / u0[i];
    }
    x
}

#[cfg(test)]
mod tests {
    use super::*;

    fn laplacian(n: usize) -> SymTridiag {
        SymTridiag::new(vec![2.0; n], vec![-1.0; n - 1])
    }

    #[test]
    fn ql_matches_closed_form() {
        let n = 12;
        let (vals, vecs) = laplacian(n).eigen_all(true).unwrap();
        for (j, v) in vals.iter().enumerate() {
            let exact = 2.0 * (1.0 - ((j + 1) as f64 * std::f64::consts::PI / (n + 1) as f64).cos());
            assert!((v - exact).abs() < 1e-13);
            let tv = laplacian(n).apply(&vecs[j]);
            for i in 0..n {
                assert!((tv[i] - v * vecs[j][i]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn bisection_and_inverse_iteration() {
        let t = SymTridiag::new(vec![3.0, 1.0, 4.0, 1.0, 5.0], vec![0.5, -0.2, 0.9, 0.3]);
        let (vals, _) = t.eigen_all(false).unwrap();
        for (i, v) in vals.iter().enumerate() {
            let b = t.bisect(i, 1e-14, 200).unwrap();
            assert!((b - v).abs() < 1e-12);
            let w = t.eigenvector(b);
            let tw = t.apply(&w);
            let res = tw.iter().zip(&w).map(|(a, x)| (a - b * x).abs()).fold(0.0, f64::max);
            assert!(res < 1e-10, "{res}");
        }
        assert_eq!(t.count_below(-100.0), 0);
        assert_eq!(t.count_below(100.0), 5);
    }

    #[test]
    fn pivoted_solve() {
        let lower = [1.0, 4.0, 0.5];
        let diag = [1e-20, 2.0, 1.0, 3.0];
        let upper = [2.0, 1.0, 1.0];
        let x = [1.0, -2.0, 0.5, 3.0];
        let mut b = vec![0.0; 4];
        for i in 0..4 {
            b[i] = diag[i] * x[i];
            if i > 0 {
                b[i] += lower[i - 1] * x[i - 1];
            }
            if i < 3 {
                b[i] += upper[i] * x[i + 1];
            }
        }
        let got = solve_tridiag(&lower, &diag, &upper, &b, 1e-300);
        for i in 0..4 {
            assert!((got[i] - x[i]).abs() < 1e-12, "{got:?}");
        }
    }
}

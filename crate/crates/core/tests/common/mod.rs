//! Dense oracles written independently of the library: cyclic Jacobi for
//! symmetric eigenproblems, a generator built straight from bitmasks, and
//! exp(tQ) through the eigendecomposition.

#![allow(dead_code, clippy::needless_range_loop)]

pub type Matrix = Vec<Vec<f64>>;

/// Eigenvalues (ascending) and column eigenvectors of a symmetric matrix.
pub fn jacobi(mut a: Matrix) -> (Vec<f64>, Matrix) {
    let n = a.len();
    let mut v: Matrix = (0..n).map(|i| (0..n).map(|j| f64::from(u8::from(i == j))).collect()).collect();
    for _sweep in 0..100 {
        let off: f64 = (0..n).flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j))).map(|(i, j)| a[i][j] * a[i][j]).sum();
        let scale: f64 = (0..n).map(|i| a[i][i] * a[i][i]).sum::<f64>().max(1e-300);
        if off <= 1e-30 * scale {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (akp, akq) = (a[k][p], a[k][q]);
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[p][k], a[q][k]);
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let (vkp, vkq) = (v[k][p], v[k][q]);
                    v[k][p] = c * vkp - s * vkq;
                    v[k][q] = s * vkp + c * vkq;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[i][i].total_cmp(&a[j][j]));
    let vals = order.iter().map(|&i| a[i][i]).collect();
    let vecs = (0..n).map(|r| order.iter().map(|&c| v[r][c]).collect()).collect();
    (vals, vecs)
}

/// Occupation masks with `k` of the low `n` bits set, in increasing order.
pub fn masks(n: usize, k: usize) -> Vec<u64> {
    (0u64..1 << n).filter(|m| m.count_ones() as usize == k).collect()
}

/// Generator of the exclusion process: edge x (0-based) swaps sites x, x+1 at `rates[x]`.
pub fn generator(rates: &[f64], n: usize, k: usize) -> (Vec<u64>, Matrix) {
    let states = masks(n, k);
    let index = |m: u64| states.binary_search(&m).expect("state exists");
    let mut q = vec![vec![0.0; states.len()]; states.len()];
    for (i, &m) in states.iter().enumerate() {
        for (x, &c) in rates.iter().enumerate() {
            let (a, b) = ((m >> x) & 1, (m >> (x + 1)) & 1);
            if a != b {
                let j = index(m ^ (0b11 << x));
                q[i][j] += c;
                q[i][i] -= c;
            }
        }
    }
    (states, q)
}

/// One-particle generator on n sites: the k = 1 case in site coordinates.
pub fn walk_generator(rates: &[f64]) -> Matrix {
    let n = rates.len() + 1;
    let mut q = vec![vec![0.0; n]; n];
    for (x, &c) in rates.iter().enumerate() {
        q[x][x + 1] += c;
        q[x + 1][x] += c;
        q[x][x] -= c;
        q[x + 1][x + 1] -= c;
    }
    q
}

/// exp(tQ) for symmetric Q.
pub fn expm_sym(q: &Matrix, t: f64) -> Matrix {
    let (vals, vecs) = jacobi(q.clone());
    let n = q.len();
    let mut out = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            out[i][j] = (0..n).map(|l| vecs[i][l] * (vals[l] * t).exp() * vecs[j][l]).sum();
        }
    }
    out
}

/// Spectral gap of a symmetric generator: minus the second largest eigenvalue.
pub fn gap(q: &Matrix) -> f64 {
    let (vals, _) = jacobi(q.clone());
    -vals[vals.len() - 2]
}

/// Row `start` of exp(tQ) against the uniform law.
pub fn tv_from(q: &Matrix, start: usize, t: f64) -> f64 {
    let row = &expm_sym(q, t)[start];
    let u = 1.0 / row.len() as f64;
    0.5 * row.iter().map(|p| (p - u).abs()).sum::<f64>()
}

/// Height at x = 0..n scaled by n: n·h(x) = n·#particles in 1..x − k·x.
pub fn scaled_heights(mask: u64, n: usize) -> Vec<i64> {
    let k = mask.count_ones() as i64;
    let mut out = vec![0i64];
    let mut count = 0i64;
    for x in 0..n {
        count += ((mask >> x) & 1) as i64;
        out.push(n as i64 * count - k * (x as i64 + 1));
    }
    out
}

/// Resistances uniform in [a, b] from a small self-contained generator.
pub fn random_resistances(seed: u64, edges: usize, a: f64, b: f64) -> Vec<f64> {
    let mut s = seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ 0xD1B5_4A32_D192_ED03;
    (0..edges)
        .map(|_| {
            s ^= s << 13;
            s ^= s >> 7;
            s ^= s << 17;
            a + (b - a) * ((s >> 11) as f64 / (1u64 << 53) as f64)
        })
        .collect()
}

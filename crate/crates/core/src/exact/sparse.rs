use crate::error::{Error, Result};

/// Generator in CSR form: off-diagonal rates per row plus the diagonal.
#[derive(Clone, Debug)]
pub struct SparseGenerator {
    row_ptr: Vec<usize>,
    cols: Vec<u32>,
    rates: Vec<f64>,
    diag: Vec<f64>,
}

impl SparseGenerator {
    /// `rows[i]` lists (target, rate) with target ≠ i; the diagonal is minus the row sum.
    pub fn from_rows(rows: Vec<Vec<(usize, f64)>>) -> Self {
        let mut row_ptr = Vec::with_capacity(rows.len() + 1);
        let mut cols = Vec::new();
        let mut rates = Vec::new();
        let mut diag = Vec::with_capacity(rows.len());
        row_ptr.push(0);
        for row in rows {
            let mut s = 0.0;
            for (j, r) in row {
                if r > 0.0 {
                    cols.push(j as u32);
                    rates.push(r);
                    s += r;
                }
            }
            diag.push(-s);
            row_ptr.push(cols.len());
        }
        Self { row_ptr, cols, rates, diag }
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    pub fn nnz(&self) -> usize {
        self.cols.len()
    }

    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let (a, b) = (self.row_ptr[i], self.row_ptr[i + 1]);
        self.cols[a..b].iter().zip(&self.rates[a..b]).map(|(&j, &r)| (j as usize, r))
    }

    /// Max exit rate.
    pub fn uniformization_rate(&self) -> f64 {
        self.diag.iter().fold(0.0, |a, d| a.max(-d))
    }

    /// Column action (Q f)(i) = Σ_j Q(i,j) f(j).
    pub fn apply(&self, f: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.len()];
        self.apply_into(f, &mut out);
        out
    }

    pub fn apply_into(&self, f: &[f64], out: &mut [f64]) {
        for i in 0..self.len() {
            let mut s = self.diag[i] * f[i];
            for (j, r) in self.row(i) {
                s += r * f[j];
            }
            out[i] = s;
        }
    }

    /// Row action (p Q)(j) = Σ_i p(i) Q(i,j).
    pub fn left_apply_into(&self, p: &[f64], out: &mut [f64]) {
        for (o, (d, pi)) in out.iter_mut().zip(self.diag.iter().zip(p)) {
            *o = d * pi;
        }
        for (i, &pi) in p.iter().enumerate() {
            if pi == 0.0 {
                continue;
            }
            for (j, r) in self.row(i) {
                out[j] += pi * r;
            }
        }
    }

    /// Max |Q(i,j) − Q(j,i)|.
    pub fn asymmetry(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.len() {
            for (j, r) in self.row(i) {
                let back = self.row(j).find(|&(t, _)| t == i).map(|(_, v)| v).unwrap_or(0.0);
                worst = worst.max((r - back).abs());
            }
        }
        worst
    }

    /// Row sums vanish within `tol`.
    pub fn check_generator(&self, tol: f64) -> Result<()> {
        for i in 0..self.len() {
            let s: f64 = self.row(i).map(|(_, r)| r).sum::<f64>() + self.diag[i];
            if s.abs() > tol {
                return Err(Error::invariant("generator row sums", format!("row {i} sums to {s:e}")));
            }
        }
        Ok(())
    }
}

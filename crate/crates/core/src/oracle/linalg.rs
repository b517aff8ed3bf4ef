//! Dense linear algebra for the small systems the oracle solves.

/// Pivots smaller than this mark a basis as singular.
pub const PIVOT_TOL: f64 = 1e-11;

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self { rows, cols, data: vec![0.0; rows * cols] }
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[r * self.cols + c] = v;
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    /// Square submatrix made of the given columns.
    pub fn columns(&self, cols: &[usize]) -> Matrix {
        let mut out = Matrix::zeros(self.rows, cols.len());
        for r in 0..self.rows {
            for (k, &c) in cols.iter().enumerate() {
                out.set(r, k, self.get(r, c));
            }
        }
        out
    }

    /// Drops rows that are linear combinations of earlier rows; returns the
    /// reduced matrix with its right-hand side.
    pub fn independent_rows(&self, rhs: &[f64]) -> (Matrix, Vec<f64>) {
        let mut kept_rows: Vec<usize> = Vec::new();
        // echelon basis of the kept rows (augmented with rhs)
        let mut basis: Vec<(usize, Vec<f64>)> = Vec::new();
        for (r, &rv) in rhs.iter().enumerate().take(self.rows) {
            let mut v: Vec<f64> = self.row(r).to_vec();
            v.push(rv);
            for (pivot, b) in &basis {
                let f = v[*pivot];
                if f != 0.0 {
                    for (x, y) in v.iter_mut().zip(b) {
                        *x -= f * y;
                    }
                }
            }
            let scale = self.row(r).iter().fold(0.0f64, |a, x| a.max(x.abs())).max(1.0);
            let (pivot, &pv) = v[..self.cols]
                .iter()
                .enumerate()
                .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
                .expect("non-empty row");
            if pv.abs() > PIVOT_TOL * scale {
                for x in v.iter_mut() {
                    *x /= pv;
                }
                basis.push((pivot, v));
                kept_rows.push(r);
            }
        }
        let mut out = Matrix::zeros(kept_rows.len(), self.cols);
        let mut out_rhs = Vec::with_capacity(kept_rows.len());
        for (k, &r) in kept_rows.iter().enumerate() {
            out.data[k * self.cols..(k + 1) * self.cols].copy_from_slice(self.row(r));
            out_rhs.push(rhs[r]);
        }
        (out, out_rhs)
    }
}

/// Solves the square system `a x = b` by Gaussian elimination with partial
/// pivoting. Returns `None` when a pivot falls below [`PIVOT_TOL`].
pub fn solve(mut a: Matrix, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = a.rows;
    debug_assert_eq!(a.cols, n);
    debug_assert_eq!(b.len(), n);
    for col in 0..n {
        let pivot = (col..n).max_by(|&x, &y| a.get(x, col).abs().total_cmp(&a.get(y, col).abs()))?;
        if a.get(pivot, col).abs() < PIVOT_TOL {
            return None;
        }
        if pivot != col {
            for c in 0..n {
                a.data.swap(pivot * n + c, col * n + c);
            }
            b.swap(pivot, col);
        }
        let p = a.get(col, col);
        for r in col + 1..n {
            let f = a.get(r, col) / p;
            if f == 0.0 {
                continue;
            }
            for c in col..n {
                let v = a.get(r, c) - f * a.get(col, c);
                a.set(r, c, v);
            }
            b[r] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|c| a.get(r, c) * x[c]).sum();
        x[r] = (b[r] - s) / a.get(r, r);
    }
    Some(x)
}

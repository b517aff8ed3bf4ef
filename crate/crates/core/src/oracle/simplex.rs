//! Dense two-phase primal simplex with Bland's rule.
//!
//! Used for full-horizon problems whose basis count rules out exhaustive
//! vertex enumeration. Solves `max c·x  s.t.  A x = b, x ≥ 0` with `b ≥ 0`.

use super::linalg::Matrix;

const EPS: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome {
    Optimal { value: f64, x: Vec<f64> },
    Infeasible,
    Unbounded,
}

struct Tableau {
    // rows × (cols + 1), last column is the rhs
    t: Matrix,
    basis: Vec<usize>,
}

impl Tableau {
    fn pivot(&mut self, row: usize, col: usize) {
        let width = self.t.cols;
        let p = self.t.get(row, col);
        for c in 0..width {
            let v = self.t.get(row, c) / p;
            self.t.set(row, c, v);
        }
        for r in 0..self.t.rows {
            if r == row {
                continue;
            }
            let f = self.t.get(r, col);
            if f == 0.0 {
                continue;
            }
            for c in 0..width {
                let v = self.t.get(r, c) - f * self.t.get(row, c);
                self.t.set(r, c, v);
            }
            self.t.set(r, col, 0.0);
        }
        self.basis[row] = col;
    }

    /// Maximises `cost·x` over the current basis; columns `allowed` may enter.
    fn optimise(&mut self, cost: &[f64], allowed: usize) -> bool {
        let rhs = self.t.cols - 1;
        loop {
            // reduced cost of column c: cost[c] - Σ_r cost[basis[r]] t[r][c]
            let entering = (0..allowed).find(|&c| {
                if self.basis.contains(&c) {
                    return false;
                }
                let z: f64 = (0..self.t.rows).map(|r| cost[self.basis[r]] * self.t.get(r, c)).sum();
                cost[c] - z > EPS
            });
            let Some(col) = entering else { return true };
            // ratio test, ties broken by smallest basic index (Bland)
            let mut best: Option<(usize, f64)> = None;
            for r in 0..self.t.rows {
                let a = self.t.get(r, col);
                if a > EPS {
                    let ratio = self.t.get(r, rhs) / a;
                    best = match best {
                        None => Some((r, ratio)),
                        Some((br, bratio)) => {
                            if ratio < bratio - EPS || ((ratio - bratio).abs() <= EPS && self.basis[r] < self.basis[br])
                            {
                                Some((r, ratio))
                            } else {
                                Some((br, bratio))
                            }
                        }
                    };
                }
            }
            match best {
                Some((row, _)) => self.pivot(row, col),
                None => return false,
            }
        }
    }
}

/// Solves `max c·x` subject to `A x = b`, `x ≥ 0`.
pub fn maximize(a: &Matrix, b: &[f64], c: &[f64]) -> LpOutcome {
    let (rows, n) = (a.rows, a.cols);
    // columns: n originals, rows artificials, rhs
    let mut t = Matrix::zeros(rows, n + rows + 1);
    for (r, &rhs) in b.iter().enumerate().take(rows) {
        let sign = if rhs < 0.0 { -1.0 } else { 1.0 };
        for col in 0..n {
            t.set(r, col, sign * a.get(r, col));
        }
        t.set(r, n + r, 1.0);
        t.set(r, n + rows, sign * rhs);
    }
    let mut tab = Tableau { t, basis: (n..n + rows).collect() };

    // phase 1: maximise -Σ artificials
    let mut phase1 = vec![0.0; n + rows];
    for v in &mut phase1[n..] {
        *v = -1.0;
    }
    tab.optimise(&phase1, n + rows);
    let infeasibility: f64 = (0..rows).filter(|&r| tab.basis[r] >= n).map(|r| tab.t.get(r, n + rows)).sum();
    if infeasibility > 1e-8 {
        return LpOutcome::Infeasible;
    }
    // drive zero-level artificials out of the basis where possible
    let mut redundant = Vec::new();
    for r in 0..rows {
        if tab.basis[r] >= n {
            match (0..n).find(|&col| tab.t.get(r, col).abs() > EPS) {
                Some(col) => tab.pivot(r, col),
                None => redundant.push(r),
            }
        }
    }
    if !redundant.is_empty() {
        let keep: Vec<usize> = (0..rows).filter(|r| !redundant.contains(r)).collect();
        let width = tab.t.cols;
        let mut t = Matrix::zeros(keep.len(), width);
        for (k, &r) in keep.iter().enumerate() {
            t.data[k * width..(k + 1) * width].copy_from_slice(tab.t.row(r));
        }
        tab = Tableau { t, basis: keep.iter().map(|&r| tab.basis[r]).collect() };
    }

    let mut phase2 = c.to_vec();
    phase2.resize(n + rows, 0.0);
    if !tab.optimise(&phase2, n) {
        return LpOutcome::Unbounded;
    }
    let rhs = tab.t.cols - 1;
    let mut x = vec![0.0; n];
    for (r, &col) in tab.basis.iter().enumerate() {
        if col < n {
            x[col] = tab.t.get(r, rhs);
        }
    }
    let value = x.iter().zip(c).map(|(xi, ci)| xi * ci).sum();
    LpOutcome::Optimal { value, x }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_lp() {
        // max x + 2y  s.t.  x + y + s = 4, x + 3y + t = 6
        let a = Matrix { rows: 2, cols: 4, data: vec![1.0, 1.0, 1.0, 0.0, 1.0, 3.0, 0.0, 1.0] };
        match maximize(&a, &[4.0, 6.0], &[1.0, 2.0, 0.0, 0.0]) {
            LpOutcome::Optimal { value, x } => {
                assert!((value - 5.0).abs() < 1e-12);
                assert!((x[0] - 3.0).abs() < 1e-12 && (x[1] - 1.0).abs() < 1e-12);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn infeasible_and_unbounded() {
        let a = Matrix { rows: 1, cols: 2, data: vec![1.0, 1.0] };
        assert_eq!(maximize(&a, &[-1.0], &[1.0, 0.0]), LpOutcome::Infeasible);
        let a = Matrix { rows: 1, cols: 2, data: vec![1.0, -1.0] };
        assert_eq!(maximize(&a, &[1.0], &[1.0, 0.0]), LpOutcome::Unbounded);
    }

    #[test]
    fn redundant_rows() {
        let a = Matrix { rows: 2, cols: 2, data: vec![1.0, 1.0, 2.0, 2.0] };
        match maximize(&a, &[1.0, 2.0], &[3.0, 1.0]) {
            LpOutcome::Optimal { value, .. } => assert!((value - 3.0).abs() < 1e-12),
            other => panic!("{other:?}"),
        }
    }
}

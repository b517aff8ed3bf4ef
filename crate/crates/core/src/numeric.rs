//! Small numerical helpers shared by the evaluators.

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    compensation: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.compensation += (self.sum - t) + x;
        } else {
            self.compensation += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.compensation
    }
}

impl FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = Self::new();
        for x in iter {
            acc.add(x);
        }
        acc
    }
}

/// Binomial coefficients `C(n, k)` for `n ≤ max_n`, either as plain values
/// (Pascal's triangle) or as natural logarithms.
#[derive(Debug, Clone)]
pub enum BinomialTable {
    Linear(Vec<Vec<f64>>),
    Log(Vec<f64>),
}

impl BinomialTable {
    /// Horizons above this use the log table.
    pub const LINEAR_LIMIT: usize = 300;

    pub fn linear(max_n: usize) -> Self {
        let mut rows: Vec<Vec<f64>> = Vec::with_capacity(max_n + 1);
        for n in 0..=max_n {
            let mut row = vec![1.0; n + 1];
            for k in 1..n {
                row[k] = rows[n - 1][k - 1] + rows[n - 1][k];
            }
            rows.push(row);
        }
        Self::Linear(rows)
    }

    /// Table of `ln(n!)`.
    pub fn log(max_n: usize) -> Self {
        let mut ln_fact = Vec::with_capacity(max_n + 1);
        let mut acc = CompensatedSum::new();
        ln_fact.push(0.0);
        for n in 1..=max_n {
            acc.add((n as f64).ln());
            ln_fact.push(acc.value());
        }
        Self::Log(ln_fact)
    }

    pub fn is_log(&self) -> bool {
        matches!(self, Self::Log(_))
    }

    /// `C(n, k)`, or `ln C(n, k)` for a log table.
    pub fn get(&self, n: usize, k: usize) -> f64 {
        match self {
            Self::Linear(rows) => rows[n][k],
            Self::Log(ln_fact) => ln_fact[n] - ln_fact[k] - ln_fact[n - k],
        }
    }
}

/// `base^exp` by repeated squaring on a `u64` exponent.
pub fn powu(base: f64, exp: usize) -> f64 {
    match i32::try_from(exp) {
        Ok(e) => base.powi(e),
        Err(_) => base.powf(exp as f64),
    }
}

/// Whether `|a - b| ≤ tol · max(1, |a|, |b|)`.
pub fn approx_eq(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * 1f64.max(a.abs()).max(b.abs())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let mut naive = 0.0;
        let mut acc = CompensatedSum::new();
        for x in [1e16, 1.0, -1e16, 1.0] {
            naive += x;
            acc.add(x);
        }
        assert_eq!(acc.value(), 2.0);
        assert_ne!(naive, 2.0);
    }

    #[test]
    fn binomial_tables_agree() {
        let lin = BinomialTable::linear(60);
        let log = BinomialTable::log(60);
        assert_eq!(lin.get(10, 3), 120.0);
        assert_eq!(lin.get(0, 0), 1.0);
        for n in 0..=60 {
            for k in 0..=n {
                let rel = (log.get(n, k).exp() - lin.get(n, k)).abs() / lin.get(n, k);
                assert!(rel < 1e-12, "C({n},{k})");
            }
        }
    }
}

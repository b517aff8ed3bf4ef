//! Claims of the form `F = h(Σ γ_i S_i(n))` with `h` convex.

use crate::error::{Error, Result};
use crate::market::OrderedMarket;

/// Tolerance for the slope-monotonicity check on piecewise-linear `h`.
const CONVEXITY_TOL: f64 = 1e-12;

/// A convex function `h: ℝ → ℝ`.
#[derive(Debug, Clone, PartialEq)]
pub enum ConvexFn {
    /// `x ↦ max(x, 0)`
    Call,
    /// `x ↦ max(-x, 0)`
    Put,
    Identity,
    PiecewiseLinear(PiecewiseLinear),
}

impl ConvexFn {
    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Self::Call => x.max(0.0),
            Self::Put => (-x).max(0.0),
            Self::Identity => x,
            Self::PiecewiseLinear(p) => p.eval(x),
        }
    }

    /// The constant zero function.
    pub fn zero() -> Self {
        Self::PiecewiseLinear(PiecewiseLinear::new(vec![0.0, 1.0], vec![0.0], 0.0).expect("zero is convex"))
    }
}

/// Continuous piecewise-linear function through `knots` with `slopes[s]` on
/// `[knots[s], knots[s + 1]]`. Outside the knot range the first and last
/// segments are extended.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseLinear {
    knots: Vec<f64>,
    slopes: Vec<f64>,
    // value at each knot
    values: Vec<f64>,
}

impl PiecewiseLinear {
    pub fn new(knots: Vec<f64>, slopes: Vec<f64>, value_at_first_knot: f64) -> Result<Self> {
        if knots.len() < 2 {
            return Err(Error::InvalidPayoff("piecewise-linear h needs at least two knots".into()));
        }
        if slopes.len() != knots.len() - 1 {
            return Err(Error::InvalidPayoff(format!(
                "{} knots need {} slopes, got {}",
                knots.len(),
                knots.len() - 1,
                slopes.len()
            )));
        }
        if knots.iter().chain(&slopes).any(|x| !x.is_finite()) || !value_at_first_knot.is_finite() {
            return Err(Error::InvalidPayoff("knots, slopes and value must be finite".into()));
        }
        if knots.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::InvalidPayoff("knots must be strictly increasing".into()));
        }
        if slopes.windows(2).any(|w| w[1] < w[0] - CONVEXITY_TOL) {
            return Err(Error::InvalidPayoff("slopes must be non-decreasing for h to be convex".into()));
        }
        let mut values = Vec::with_capacity(knots.len());
        values.push(value_at_first_knot);
        for s in 0..slopes.len() {
            values.push(values[s] + slopes[s] * (knots[s + 1] - knots[s]));
        }
        Ok(Self { knots, slopes, values })
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn slopes(&self) -> &[f64] {
        &self.slopes
    }

    pub fn value_at_first_knot(&self) -> f64 {
        self.values[0]
    }

    pub fn eval(&self, x: f64) -> f64 {
        // index of the segment containing x, clamped to the outer segments
        let seg = self.knots[1..self.knots.len() - 1].partition_point(|&k| k <= x);
        self.values[seg] + self.slopes[seg] * (x - self.knots[seg])
    }
}

/// A claim `F = h(γ_0 S_0(n) + γ_1 S_1(n) + … + γ_m S_m(n))`.
///
/// `gamma` is in external asset order, `gamma[0]` belonging to the cash
/// asset. `γ_1..γ_m` must be non-negative.
#[derive(Debug, Clone, PartialEq)]
pub struct PayoffSpec {
    gamma: Vec<f64>,
    h: ConvexFn,
}

impl PayoffSpec {
    pub fn new(gamma: Vec<f64>, h: ConvexFn) -> Result<Self> {
        if gamma.is_empty() {
            return Err(Error::InvalidPayoff("gamma must contain at least γ_0".into()));
        }
        if gamma.iter().any(|g| !g.is_finite()) {
            return Err(Error::InvalidPayoff("gamma must be finite".into()));
        }
        if let Some(i) = gamma.iter().skip(1).position(|&g| g < 0.0) {
            return Err(Error::InvalidPayoff(format!("γ_{} = {} must be non-negative", i + 1, gamma[i + 1])));
        }
        Ok(Self { gamma, h })
    }

    /// Basket call `max(Σ w_i S_i(n) - K, 0)`, encoded with
    /// `γ_0 = -K / (S_0(0) Rⁿ)`.
    pub fn basket_call(market: &OrderedMarket, weights: &[f64], strike: f64) -> Result<Self> {
        let spec = market.spec();
        let gamma0 = -strike / (spec.initial_prices[0] * spec.rate_factor.powi(spec.num_steps as i32));
        let mut gamma = vec![gamma0];
        gamma.extend_from_slice(weights);
        Self::new(gamma, ConvexFn::Call)
    }

    pub fn gamma(&self) -> &[f64] {
        &self.gamma
    }

    pub fn h(&self) -> &ConvexFn {
        &self.h
    }

    /// Coefficients reordered to the market's internal order.
    pub fn internal_gamma(&self, market: &OrderedMarket) -> Result<Vec<f64>> {
        if self.gamma.len() != market.num_assets() + 1 {
            return Err(Error::DimensionMismatch(format!(
                "payoff has {} coefficients, market has {} assets",
                self.gamma.len(),
                market.num_assets() + 1
            )));
        }
        Ok(market.reorder_to_internal(&self.gamma))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn call_put_identity() {
        assert_eq!(ConvexFn::Call.eval(-2.0), 0.0);
        assert_eq!(ConvexFn::Call.eval(3.0), 3.0);
        assert_eq!(ConvexFn::Put.eval(-2.0), 2.0);
        assert_eq!(ConvexFn::Put.eval(3.0), 0.0);
        assert_eq!(ConvexFn::Identity.eval(-1.5), -1.5);
        assert_eq!(ConvexFn::zero().eval(123.0), 0.0);
    }

    #[test]
    fn piecewise_linear_interpolates_and_extends() {
        // straddle-like: slope -1 then +1, kink at 0 with value 0
        let p = PiecewiseLinear::new(vec![-1.0, 0.0, 2.0], vec![-1.0, 1.0], 1.0).unwrap();
        assert_eq!(p.eval(0.0), 0.0);
        assert_eq!(p.eval(-1.0), 1.0);
        assert_eq!(p.eval(1.5), 1.5);
        assert_eq!(p.eval(-3.0), 3.0);
        assert_eq!(p.eval(5.0), 5.0);
    }

    #[test]
    fn piecewise_linear_rejects_concave() {
        let err = PiecewiseLinear::new(vec![0.0, 1.0, 2.0], vec![1.0, 0.5], 0.0).unwrap_err();
        assert!(matches!(err, Error::InvalidPayoff(_)));
        assert!(PiecewiseLinear::new(vec![0.0, 0.0], vec![1.0], 0.0).is_err());
        assert!(PiecewiseLinear::new(vec![0.0, 1.0], vec![1.0, 2.0], 0.0).is_err());
    }

    #[test]
    fn negative_weight_rejected() {
        assert!(PayoffSpec::new(vec![-1.0, 0.5, -0.5], ConvexFn::Call).is_err());
        assert!(PayoffSpec::new(vec![5.0, 0.5, 0.5], ConvexFn::Put).is_ok());
    }

    #[test]
    fn basket_call_encoding() {
        let market = crate::market::tests::example_market();
        let payoff = PayoffSpec::basket_call(&market, &[0.5, 0.5], 100.0).unwrap();
        assert_eq!(payoff.gamma(), &[-1.0, 0.5, 0.5]);
    }
}

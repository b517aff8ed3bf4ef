//! Minimum-cost super-hedging portfolios and their residuals.
//!
//! At a node `(k, ω)` the hedge is the unique portfolio whose value one step
//! later matches `C_max(F, k+1)(ωρ_j)` for every chain move `ρ_j`. The
//! `(m+1)×(m+1)` system it solves factors into a bidiagonal difference, an
//! arrowhead matrix and a diagonal price scaling, so [`hedge_weights`]
//! back-substitutes in `O(m)` without forming any matrix.

use std::collections::HashMap;

use log::debug;

use crate::error::{Error, Result};
use crate::market::{rho_move, MoveVector, OrderedMarket, WorldState};
use crate::numeric::{approx_eq, powu};
use crate::parallel::Parallelism;
use crate::payoff::PayoffSpec;
use crate::pricing::{cmax_with, payoff_value, EvalMode};

/// Residuals in `[-RESIDUAL_TOL, 0)` are rounding noise and clamp to zero.
pub const RESIDUAL_TOL: f64 = 1e-10;

/// Portfolio `α(k)(ω)`; `alpha` is in external asset order, `alpha[0]` the cash position.
#[derive(Debug, Clone, PartialEq)]
pub struct HedgeWeights {
    pub alpha: Vec<f64>,
    pub step: usize,
    /// Internal-order state the portfolio was set up at.
    pub state: WorldState,
}

impl HedgeWeights {
    pub fn zero(market: &OrderedMarket, state: WorldState) -> Self {
        Self { alpha: vec![0.0; market.num_assets() + 1], step: state.step(), state }
    }
}

/// Per-step record of running the hedge along one full path.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualTrace {
    /// Internal-order path of length `n`.
    pub path: WorldState,
    /// `V_α(k)` for `k = 0..n-1`.
    pub setup_costs: Vec<f64>,
    /// `C_max(F, k)` for `k = 0..=n`, the last entry being `F`.
    pub cmax: Vec<f64>,
    /// `δ(k)` for `k = 1..=n`.
    pub local: Vec<f64>,
    /// `Δ = Σ δ(k) R^(n-k)`.
    pub accumulated: f64,
}

impl ResidualTrace {
    /// `δ(k) R^(n-k)` for `k = 1..=n`.
    pub fn carried(&self, rate_factor: f64) -> Vec<f64> {
        let n = self.local.len();
        self.local.iter().enumerate().map(|(t, d)| d * powu(rate_factor, n - 1 - t)).collect()
    }
}

/// Minimum-cost super-hedge at `ω` (time `k = ω.step() < n`).
pub fn hedge_weights(market: &OrderedMarket, payoff: &PayoffSpec, omega: &WorldState) -> Result<HedgeWeights> {
    hedge_weights_with(market, payoff, omega, EvalMode::Compressed)
}

pub fn hedge_weights_with(
    market: &OrderedMarket,
    payoff: &PayoffSpec,
    omega: &WorldState,
    mode: EvalMode,
) -> Result<HedgeWeights> {
    let m = market.num_assets();
    if omega.step() >= market.num_steps() {
        return Err(Error::StepOutOfRange { step: omega.step(), num_steps: market.num_steps() });
    }
    let targets = (0..=m)
        .map(|j| cmax_with(market, payoff, &omega.extended(rho_move(j, m)), mode, Parallelism::default()))
        .collect::<Result<Vec<_>>>()?;
    Ok(solve_hedge(market, omega, &targets))
}

/// Solves `Σ_i α_i S_i(k) χ_i(j) = targets[j]` for `j = 0..=m`.
pub(crate) fn solve_hedge(market: &OrderedMarket, omega: &WorldState, targets: &[f64]) -> HedgeWeights {
    let m = market.num_assets();
    let prices = market.prices(omega);
    let mut internal = vec![0.0; m + 1];
    let mut cash = targets[0];
    for i in 1..=m {
        let spread = market.up(i) - market.down(i);
        let e = (targets[i] - targets[i - 1]) / spread;
        cash -= market.down(i) * e;
        internal[i] = e / prices[i];
    }
    internal[0] = cash / (market.rate_factor() * prices[0]);
    HedgeWeights { alpha: market.reorder_to_external(&internal), step: omega.step(), state: omega.clone() }
}

/// `V_α(k) = Σ_i α_i S_i(k)(ω)`.
pub fn setup_cost(market: &OrderedMarket, weights: &HedgeWeights) -> f64 {
    let alpha = market.reorder_to_internal(&weights.alpha);
    market.prices(&weights.state).iter().zip(&alpha).map(|(s, a)| s * a).sum()
}

/// Liquidation value `Σ_i α_i S_i(k)(ω) ψ_i(λ)` after move `λ` (internal order).
pub fn portfolio_value_next(market: &OrderedMarket, weights: &HedgeWeights, lambda: &MoveVector) -> f64 {
    let alpha = market.reorder_to_internal(&weights.alpha);
    market.prices(&weights.state).iter().zip(&alpha).enumerate().map(|(i, (s, a))| a * s * market.psi(lambda, i)).sum()
}

fn clamp_residual(raw: f64, k: usize) -> Result<f64> {
    if raw >= 0.0 {
        Ok(raw)
    } else if raw >= -RESIDUAL_TOL {
        debug!("clamping local residual {raw:e} at step {k} to zero");
        Ok(0.0)
    } else {
        Err(Error::VerificationFailure(format!("local residual {raw:e} at step {k} is negative")))
    }
}

/// `δ(k)`: value of the `(k-1)`-hedge after move `λᵏ` minus `C_max(F, k)`
/// (or `F` at `k = n`).
pub fn local_residual(market: &OrderedMarket, payoff: &PayoffSpec, path: &WorldState, k: usize) -> Result<f64> {
    if k == 0 || k > path.step() || k > market.num_steps() {
        return Err(Error::StepOutOfRange { step: k, num_steps: market.num_steps() });
    }
    let weights = hedge_weights(market, payoff, &path.prefix(k - 1))?;
    let prefix = path.prefix(k);
    let value = portfolio_value_next(market, &weights, &path.moves()[k - 1]);
    let required = if k == market.num_steps() {
        payoff_value(payoff, market, &prefix)?
    } else {
        cmax_with(market, payoff, &prefix, EvalMode::Compressed, Parallelism::default())?
    };
    clamp_residual(value - required, k)
}

/// Runs the hedge along a full path, recomputing every node.
pub fn backtest_path(market: &OrderedMarket, payoff: &PayoffSpec, path: &WorldState) -> Result<ResidualTrace> {
    Backtester::new(market, payoff).run(path)
}

/// Path backtester with an optional cache of `C_max` values keyed by node.
///
/// Prices at `(k, ω)` depend only on how many times each asset went up, so
/// the cache is keyed by `(k, up counts)` and is shared across paths.
pub struct Backtester<'a> {
    market: &'a OrderedMarket,
    payoff: &'a PayoffSpec,
    mode: EvalMode,
    cache: Option<HashMap<(usize, Vec<usize>), f64>>,
}

impl<'a> Backtester<'a> {
    /// Largest tree the cache accepts.
    pub const CACHE_MAX_STEPS: usize = 20;
    pub const CACHE_MAX_ASSETS: usize = 3;

    pub fn new(market: &'a OrderedMarket, payoff: &'a PayoffSpec) -> Self {
        Self { market, payoff, mode: EvalMode::Compressed, cache: None }
    }

    pub fn with_mode(mut self, mode: EvalMode) -> Self {
        self.mode = mode;
        self
    }

    /// Enables node caching; only for `n ≤ 20` and `m ≤ 3`.
    pub fn with_tree_cache(mut self) -> Result<Self> {
        if self.market.num_steps() > Self::CACHE_MAX_STEPS || self.market.num_assets() > Self::CACHE_MAX_ASSETS {
            return Err(Error::ScaleExceeded(format!(
                "tree cache supports n ≤ {} and m ≤ {}",
                Self::CACHE_MAX_STEPS,
                Self::CACHE_MAX_ASSETS
            )));
        }
        self.cache = Some(HashMap::new());
        Ok(self)
    }

    pub fn cached_nodes(&self) -> usize {
        self.cache.as_ref().map_or(0, HashMap::len)
    }

    fn node_value(&mut self, omega: &WorldState) -> Result<f64> {
        let key = self.cache.as_ref().map(|_| {
            let ups =
                (1..=self.market.num_assets()).map(|i| omega.moves().iter().filter(|l| l.is_up(i)).count()).collect();
            (omega.step(), ups)
        });
        if let (Some(cache), Some(key)) = (&self.cache, &key) {
            if let Some(&v) = cache.get(key) {
                return Ok(v);
            }
        }
        let v = cmax_with(self.market, self.payoff, omega, self.mode, Parallelism::default())?;
        if let (Some(cache), Some(key)) = (&mut self.cache, key) {
            cache.insert(key, v);
        }
        Ok(v)
    }

    pub fn run(&mut self, path: &WorldState) -> Result<ResidualTrace> {
        let market = self.market;
        let (n, m) = (market.num_steps(), market.num_assets());
        if path.step() != n {
            return Err(Error::StepMismatch { expected: n, actual: path.step() });
        }
        let mut cmax = Vec::with_capacity(n + 1);
        let mut setup_costs = Vec::with_capacity(n);
        let mut local = Vec::with_capacity(n);
        cmax.push(self.node_value(&path.prefix(0))?);
        for k in 0..n {
            let omega = path.prefix(k);
            let targets =
                (0..=m).map(|j| self.node_value(&omega.extended(rho_move(j, m)))).collect::<Result<Vec<_>>>()?;
            let weights = solve_hedge(market, &omega, &targets);
            let cost = setup_cost(market, &weights);
            if !approx_eq(cost, cmax[k], RESIDUAL_TOL) {
                return Err(Error::VerificationFailure(format!(
                    "setup cost {cost} differs from C_max {} at step {k}",
                    cmax[k]
                )));
            }
            setup_costs.push(cost);
            let next = self.node_value(&path.prefix(k + 1))?;
            let value = portfolio_value_next(market, &weights, &path.moves()[k]);
            local.push(clamp_residual(value - next, k + 1)?);
            cmax.push(next);
        }
        let r = market.rate_factor();
        let accumulated = local.iter().enumerate().map(|(t, d)| d * powu(r, n - 1 - t)).sum();
        Ok(ResidualTrace { path: path.clone(), setup_costs, cmax, local, accumulated })
    }
}

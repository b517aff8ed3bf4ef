//! Upper no-arbitrage prices and minimum-cost super-hedging strategies for
//! European claims in an `n`-step binomial market with one risk-free asset
//! and `m` risky assets whose joint law is left unspecified.
//!
//! Claims are of the form `F = h(γ_0 S_0(n) + … + γ_m S_m(n))` with `h`
//! convex and `γ_1..γ_m ≥ 0`. For such claims the supremum over all
//! martingale measures is attained at a single degenerate measure supported
//! on the chain of moves `ρ_0 ≤ ρ_1 ≤ … ≤ ρ_m`, which gives a closed-form
//! upper price ([`pricing::cmax`]) and an explicit hedge
//! ([`hedging::hedge_weights`]).
//!
//! The [`oracle`] module re-derives the same numbers by brute force over the
//! martingale polytope and is used to cross-check the closed forms.

pub mod error;
pub mod hedging;
pub mod market;
pub mod measures;
pub mod numeric;
pub mod oracle;
pub mod parallel;
pub mod payoff;
pub mod pricing;

pub use error::{Error, Result};
pub use hedging::{
    backtest_path, hedge_weights, local_residual, portfolio_value_next, setup_cost, Backtester, HedgeWeights,
    ResidualTrace,
};
pub use market::{rho_move, MarketSpec, MoveVector, OrderedMarket, WorldState};
pub use measures::{DiscreteMeasure, VertexMeasure};
pub use parallel::Parallelism;
pub use payoff::{ConvexFn, PayoffSpec, PiecewiseLinear};
pub use pricing::{cmax, cmax_naive, payoff_value, EvalMode, JCounts};

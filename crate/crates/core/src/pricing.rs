//! Upper no-arbitrage price `C_max(F, k)(ω)`.
//!
//! The price is a discounted expectation under the product of the vertex
//! measure `q` over the remaining `n - k` steps:
//!
//! ```text
//! C_max(F, k)(ω) = R^(k-n) Σ_{J ∈ {0..m}^(n-k)} q_J · h(Σ_i γ_i χ_i(J) S_i(k)(ω))
//! ```
//!
//! Both `q_J` and `χ_i(J)` depend only on how many times each letter occurs
//! in `J`, so [`cmax`] sums over the `C(n-k+m, m)` count vectors
//! ([`JCounts`]) with multinomial multiplicities instead of the
//! `(m+1)^(n-k)` words. [`cmax_naive`] keeps the literal word sum as a
//! reference.

use crate::error::{Error, Result};
use crate::market::{OrderedMarket, WorldState};
use crate::numeric::{powu, BinomialTable, CompensatedSum};
use crate::parallel::{map_indexed, Parallelism};
use crate::payoff::{ConvexFn, PayoffSpec};

/// Largest word count the naive evaluator will enumerate.
pub const NAIVE_LIMIT: u64 = 10_000_000;

/// Which evaluator to use for `C_max`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EvalMode {
    #[default]
    Compressed,
    Naive,
}

/// A word `J = (j_1, …, j_t)` over `{0, …, m}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JWord(pub Vec<usize>);

impl JWord {
    /// `q_J = Π_t q_{j_t}`.
    pub fn q(&self, market: &OrderedMarket) -> f64 {
        self.0.iter().map(|&j| market.q()[j]).product()
    }

    /// `χ_i(J) = Π_t χ_i(j_t)` with `χ_i(j) = U_i` if `i ≤ j`, else `D_i`.
    pub fn chi(&self, market: &OrderedMarket, i: usize) -> f64 {
        self.0
            .iter()
            .map(|&j| {
                if i == 0 {
                    market.rate_factor()
                } else if i <= j {
                    market.up(i)
                } else {
                    market.down(i)
                }
            })
            .product()
    }

    pub fn counts(&self, m: usize) -> JCounts {
        let mut counts = vec![0; m + 1];
        for &j in &self.0 {
            counts[j] += 1;
        }
        JCounts(counts)
    }
}

/// Letter multiplicities `(k_0, …, k_m)` of a word `J`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct JCounts(pub Vec<usize>);

impl JCounts {
    /// Word length `Σ k_j`.
    pub fn total(&self) -> usize {
        self.0.iter().sum()
    }

    /// Number of up moves of asset `i ≥ 1` in any word with these counts.
    pub fn ups(&self, i: usize) -> usize {
        self.0[i..].iter().sum()
    }
}

/// `χ_i(J)` for any `J` with the given letter counts:
/// `U_i^{u_i} D_i^{t - u_i}` with `u_i = Σ_{j ≥ i} k_j`, and `R^t` for `i = 0`.
pub fn chi_power(market: &OrderedMarket, i: usize, counts: &JCounts) -> f64 {
    let total = counts.total();
    if i == 0 {
        return powu(market.rate_factor(), total);
    }
    let u = counts.ups(i);
    powu(market.up(i), u) * powu(market.down(i), total - u)
}

/// `F(ω) = h(Σ_i γ_i S_i(n)(ω))` for a full-length state.
pub fn payoff_value(payoff: &PayoffSpec, market: &OrderedMarket, omega: &WorldState) -> Result<f64> {
    if omega.step() != market.num_steps() {
        return Err(Error::StepMismatch { expected: market.num_steps(), actual: omega.step() });
    }
    let gamma = payoff.internal_gamma(market)?;
    let prices = market.prices(omega);
    Ok(payoff.h().eval(linear_combination(&gamma, &prices)))
}

fn linear_combination(gamma: &[f64], prices: &[f64]) -> f64 {
    gamma.iter().zip(prices).fold(0.0, |acc, (g, s)| acc + g * s)
}

fn check_state(market: &OrderedMarket, omega: &WorldState) -> Result<()> {
    if omega.step() > market.num_steps() {
        return Err(Error::StepOutOfRange { step: omega.step(), num_steps: market.num_steps() });
    }
    if let Some(lambda) = omega.moves().iter().find(|l| l.len() != market.num_assets()) {
        return Err(Error::InvalidState(format!("move {lambda} does not match {} risky assets", market.num_assets())));
    }
    Ok(())
}

/// `C_max(F, k)(ω)` with `k = ω.step()`, via the compressed sum.
pub fn cmax(market: &OrderedMarket, payoff: &PayoffSpec, omega: &WorldState) -> Result<f64> {
    cmax_with(market, payoff, omega, EvalMode::Compressed, Parallelism::default())
}

/// `C_max(F, k)(ω)` by literal enumeration of all `(m+1)^(n-k)` words.
pub fn cmax_naive(market: &OrderedMarket, payoff: &PayoffSpec, omega: &WorldState) -> Result<f64> {
    cmax_with(market, payoff, omega, EvalMode::Naive, Parallelism::Sequential)
}

/// `C_max(F, k)(ω)` with an explicit evaluator and execution strategy.
pub fn cmax_with(
    market: &OrderedMarket,
    payoff: &PayoffSpec,
    omega: &WorldState,
    mode: EvalMode,
    par: Parallelism,
) -> Result<f64> {
    check_state(market, omega)?;
    if omega.step() == market.num_steps() {
        return payoff_value(payoff, market, omega);
    }
    let gamma = payoff.internal_gamma(market)?;
    let prices = market.prices(omega);
    let horizon = market.num_steps() - omega.step();
    let sum = match mode {
        EvalMode::Compressed => compressed_sum(market, &gamma, payoff.h(), &prices, horizon, par),
        EvalMode::Naive => naive_sum(market, &gamma, payoff.h(), &prices, horizon)?,
    };
    Ok(sum / powu(market.rate_factor(), horizon))
}

/// Number of distinct count vectors for `m` risky assets over `horizon` steps.
pub fn compressed_term_count(m: usize, horizon: usize) -> u128 {
    // C(horizon + m, m)
    (1..=m as u128).fold(1u128, |acc, j| acc * (horizon as u128 + j) / j)
}

struct TermTables<'a> {
    h: &'a ConvexFn,
    m: usize,
    // coef[i][u] = γ_i S_i(k) U_i^u D_i^(horizon - u), i ≥ 1
    coef: Vec<Vec<f64>>,
    cash: f64,
    // qpow[j][c] = q_j^c, or c·ln q_j in log mode
    qpow: Vec<Vec<f64>>,
    binom: BinomialTable,
}

impl TermTables<'_> {
    fn weight_one(&self) -> f64 {
        if self.binom.is_log() {
            0.0
        } else {
            1.0
        }
    }

    fn combine(&self, w: f64, binom: f64, qpow: f64) -> f64 {
        if self.binom.is_log() {
            w + binom + qpow
        } else {
            w * binom * qpow
        }
    }

    fn finish(&self, w: f64) -> f64 {
        if self.binom.is_log() {
            w.exp()
        } else {
            w
        }
    }

    /// Adds all terms with letters `j..=m` distributed over `remaining` slots.
    fn accumulate(&self, j: usize, remaining: usize, arg: f64, w: f64, acc: &mut CompensatedSum) {
        let arg = arg + self.coef[j][remaining];
        if j == self.m {
            let w = self.combine(w, self.weight_one(), self.qpow[j][remaining]);
            let weight = self.finish(w);
            if weight != 0.0 {
                acc.add(weight * self.h.eval(arg));
            }
            return;
        }
        for c in 0..=remaining {
            let qp = self.qpow[j][c];
            if !self.binom.is_log() && qp == 0.0 {
                // q_j = 0: only c = 0 contributes
                break;
            }
            if self.binom.is_log() && qp == f64::NEG_INFINITY {
                break;
            }
            let w = self.combine(w, self.binom.get(remaining, c), qp);
            self.accumulate(j + 1, remaining - c, arg, w, acc);
        }
    }
}

fn compressed_sum(
    market: &OrderedMarket,
    gamma: &[f64],
    h: &ConvexFn,
    prices: &[f64],
    horizon: usize,
    par: Parallelism,
) -> f64 {
    let m = market.num_assets();
    // (m+1)^horizon bounds the largest multinomial coefficient
    let overflow_risk = horizon as f64 * ((m + 1) as f64).log10() > 300.0;
    let use_log = horizon > BinomialTable::LINEAR_LIMIT || overflow_risk;
    let binom = if use_log { BinomialTable::log(horizon) } else { BinomialTable::linear(horizon) };

    let mut coef = vec![Vec::new()];
    for i in 1..=m {
        let base = gamma[i] * prices[i];
        coef.push((0..=horizon).map(|u| base * powu(market.up(i), u) * powu(market.down(i), horizon - u)).collect());
    }
    let qpow = market
        .q()
        .iter()
        .map(|&qj| {
            (0..=horizon)
                .map(|c| {
                    if use_log {
                        if c == 0 {
                            0.0
                        } else {
                            c as f64 * qj.ln()
                        }
                    } else {
                        powu(qj, c)
                    }
                })
                .collect()
        })
        .collect();
    let tables =
        TermTables { h, m, coef, cash: gamma[0] * prices[0] * powu(market.rate_factor(), horizon), qpow, binom };

    // One partition per k_0, reduced in fixed order.
    let partials = map_indexed(horizon + 1, par, |k0| {
        let mut acc = CompensatedSum::new();
        let qp = tables.qpow[0][k0];
        let zero = if use_log { qp == f64::NEG_INFINITY } else { qp == 0.0 };
        if !zero {
            let w = tables.combine(tables.weight_one(), tables.binom.get(horizon, k0), qp);
            tables.accumulate(1, horizon - k0, tables.cash, w, &mut acc);
        }
        acc.value()
    });
    partials.into_iter().collect::<CompensatedSum>().value()
}

fn naive_sum(market: &OrderedMarket, gamma: &[f64], h: &ConvexFn, prices: &[f64], horizon: usize) -> Result<f64> {
    let m = market.num_assets();
    let words = (m as u64 + 1).checked_pow(horizon as u32).filter(|&w| w <= NAIVE_LIMIT);
    if words.is_none() {
        return Err(Error::ScaleExceeded(format!(
            "naive evaluation needs {}^{horizon} words, limit is {NAIVE_LIMIT}",
            m + 1
        )));
    }
    let mut word = JWord(vec![0; horizon]);
    let mut acc = CompensatedSum::new();
    loop {
        let arg = (0..=m).fold(0.0, |a, i| a + gamma[i] * word.chi(market, i) * prices[i]);
        acc.add(word.q(market) * h.eval(arg));
        // odometer increment, last letter fastest
        let mut pos = horizon;
        loop {
            if pos == 0 {
                return Ok(acc.value());
            }
            pos -= 1;
            if word.0[pos] < m {
                word.0[pos] += 1;
                break;
            }
            word.0[pos] = 0;
        }
    }
}

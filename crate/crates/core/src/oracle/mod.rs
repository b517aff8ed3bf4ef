//! Brute-force reference for `C_max` that never touches the closed form.
//!
//! Two independent routes are provided:
//!
//! * [`oracle_cmax`] runs backward induction where each node maximises a
//!   linear functional over every vertex of the one-step martingale polytope
//!   `{p ≥ 0 on L : Σ p = 1, E_p(ℓ_i) = b_i}`, enumerated as basic feasible
//!   solutions.
//! * [`oracle_full_horizon_max`] maximises the discounted expectation of `F`
//!   over the whole multi-step polytope in one linear program.

pub mod linalg;
pub mod simplex;

use std::collections::HashSet;

use crate::error::{Error, Result};
use crate::market::{MoveVector, OrderedMarket, WorldState};
use crate::measures::DiscreteMeasure;
use crate::numeric::powu;
use crate::parallel::{map_indexed, Parallelism};
use crate::payoff::PayoffSpec;

use linalg::{solve, Matrix};
use simplex::{maximize, LpOutcome};

/// Vertices with a coordinate below this are infeasible.
const NEGATIVE_TOL: f64 = 1e-12;
/// Grid used to deduplicate repeated basic solutions.
const DEDUP_GRID: f64 = 1e-9;
/// Largest number of bases enumerated exhaustively.
pub const ENUMERATION_LIMIT: u128 = 250_000;

pub const MAX_SINGLE_STEP_ASSETS: usize = 4;
pub const MAX_ORACLE_ASSETS: usize = 3;
pub const MAX_ORACLE_HORIZON: usize = 4;
pub const MAX_FULL_HORIZON_ATOMS: usize = 256;

/// A vertex of the one-step martingale polytope.
#[derive(Debug, Clone, PartialEq)]
pub struct PolytopeVertex {
    pub measure: DiscreteMeasure,
    /// Atom masks of the basis columns.
    pub support: Vec<usize>,
}

/// All `k`-subsets of `0..n` in lexicographic order.
fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if k > n {
        return out;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        out.push(idx.clone());
        let Some(pos) = (0..k).rev().find(|&p| idx[p] != p + n - k) else { return out };
        idx[pos] += 1;
        for p in pos + 1..k {
            idx[p] = idx[p - 1] + 1;
        }
    }
}

fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    (0..k as u128).fold(1u128, |acc, j| acc.saturating_mul(n as u128 - j) / (j + 1))
}

/// Enumerates basic feasible solutions of `{x ≥ 0 : A x = b}` by solving
/// every square column subset. Results are deduplicated and returned in
/// basis order, each with its basis columns.
pub fn basic_feasible_solutions(a: &Matrix, b: &[f64], par: Parallelism) -> Result<Vec<(Vec<f64>, Vec<usize>)>> {
    let (a, b) = a.independent_rows(b);
    let count = binomial(a.cols, a.rows);
    if count > ENUMERATION_LIMIT {
        return Err(Error::ScaleExceeded(format!(
            "{count} candidate bases exceed the enumeration limit {ENUMERATION_LIMIT}"
        )));
    }
    let bases = combinations(a.cols, a.rows);
    let solved = map_indexed(bases.len(), par, |s| {
        let basis = &bases[s];
        let xb = solve(a.columns(basis), b.clone())?;
        if xb.iter().any(|&v| v < -NEGATIVE_TOL) {
            return None;
        }
        let mut x = vec![0.0; a.cols];
        for (&col, &v) in basis.iter().zip(&xb) {
            x[col] = v.max(0.0);
        }
        Some((x, basis.clone()))
    });
    let mut seen = HashSet::new();
    Ok(solved
        .into_iter()
        .flatten()
        .filter(|(x, _)| seen.insert(x.iter().map(|v| (v / DEDUP_GRID).round() as i64).collect::<Vec<_>>()))
        .collect())
}

fn single_step_constraints(market: &OrderedMarket) -> (Matrix, Vec<f64>) {
    let m = market.num_assets();
    let atoms = 1usize << m;
    let mut a = Matrix::zeros(m + 1, atoms);
    let mut b = vec![1.0];
    for mask in 0..atoms {
        a.set(0, mask, 1.0);
        for i in 1..=m {
            a.set(i, mask, if mask >> (i - 1) & 1 == 1 { 1.0 } else { 0.0 });
        }
    }
    b.extend_from_slice(market.b());
    (a, b)
}

/// Every vertex of the one-step martingale polytope (`m ≤ 4`).
pub fn single_step_vertices(market: &OrderedMarket) -> Result<Vec<PolytopeVertex>> {
    let m = market.num_assets();
    if m > MAX_SINGLE_STEP_ASSETS {
        return Err(Error::ScaleExceeded(format!(
            "single-step vertex enumeration supports m ≤ {MAX_SINGLE_STEP_ASSETS}, got {m}"
        )));
    }
    let (a, b) = single_step_constraints(market);
    basic_feasible_solutions(&a, &b, Parallelism::default())?
        .into_iter()
        .map(|(x, basis)| {
            let support = basis.into_iter().filter(|&c| x[c] > 0.0).collect();
            let total: f64 = x.iter().sum();
            let weights = x.into_iter().map(|w| w / total).collect();
            Ok(PolytopeVertex { measure: DiscreteMeasure::new(m, 1, weights)?, support })
        })
        .collect()
}

/// The one-step polytope with its vertices cached.
#[derive(Debug, Clone)]
pub struct SingleStepPolytope {
    num_assets: usize,
    vertices: Vec<PolytopeVertex>,
}

impl SingleStepPolytope {
    pub fn new(market: &OrderedMarket) -> Result<Self> {
        Ok(Self { num_assets: market.num_assets(), vertices: single_step_vertices(market)? })
    }

    pub fn vertices(&self) -> &[PolytopeVertex] {
        &self.vertices
    }

    /// `max_p E_p(f)` for `f` tabulated by move mask.
    pub fn max_expectation(&self, values: &[f64]) -> f64 {
        self.vertices
            .iter()
            .map(|v| v.measure.weights().iter().zip(values).map(|(p, f)| p * f).sum::<f64>())
            .fold(f64::NEG_INFINITY, f64::max)
    }

    fn tabulate(&self, f: impl Fn(&MoveVector) -> f64) -> Vec<f64> {
        (0..1usize << self.num_assets).map(|mask| f(&MoveVector::from_mask(mask, self.num_assets))).collect()
    }
}

/// `max_p E_p(f)` over the one-step martingale polytope.
pub fn oracle_max_expectation_single_step(f: impl Fn(&MoveVector) -> f64, market: &OrderedMarket) -> Result<f64> {
    let polytope = SingleStepPolytope::new(market)?;
    Ok(polytope.max_expectation(&polytope.tabulate(f)))
}

struct Induction<'a> {
    market: &'a OrderedMarket,
    payoff: &'a PayoffSpec,
    gamma: Vec<f64>,
    polytope: SingleStepPolytope,
}

impl Induction<'_> {
    fn child_prices(&self, prices: &[f64], mask: usize) -> Vec<f64> {
        let m = self.market.num_assets();
        let mut out = Vec::with_capacity(m + 1);
        out.push(prices[0] * self.market.rate_factor());
        for (i, &p) in prices.iter().enumerate().take(m + 1).skip(1) {
            let ratio = if mask >> (i - 1) & 1 == 1 { self.market.up(i) } else { self.market.down(i) };
            out.push(p * ratio);
        }
        out
    }

    fn value(&self, prices: &[f64], remaining: usize, par: Parallelism) -> f64 {
        if remaining == 0 {
            let x = self.gamma.iter().zip(prices).map(|(g, s)| g * s).sum();
            return self.payoff.h().eval(x);
        }
        let children = map_indexed(1 << self.market.num_assets(), par, |mask| {
            self.value(&self.child_prices(prices, mask), remaining - 1, Parallelism::Sequential)
        });
        self.polytope.max_expectation(&children) / self.market.rate_factor()
    }
}

/// `C_max(F, k)(ω)` by dynamic programming over polytope vertices
/// (`m ≤ 3`, `n - k ≤ 4`).
pub fn oracle_cmax(market: &OrderedMarket, payoff: &PayoffSpec, omega: &WorldState) -> Result<f64> {
    let m = market.num_assets();
    if omega.step() > market.num_steps() {
        return Err(Error::StepOutOfRange { step: omega.step(), num_steps: market.num_steps() });
    }
    let horizon = market.num_steps() - omega.step();
    if m > MAX_ORACLE_ASSETS || horizon > MAX_ORACLE_HORIZON {
        return Err(Error::ScaleExceeded(format!(
            "oracle induction supports m ≤ {MAX_ORACLE_ASSETS} and n - k ≤ {MAX_ORACLE_HORIZON}, got m = {m}, n - k = {horizon}"
        )));
    }
    let induction =
        Induction { market, payoff, gamma: payoff.internal_gamma(market)?, polytope: SingleStepPolytope::new(market)? };
    // prices rebuilt from ratios, independent of the pricing module
    let prices: Vec<f64> =
        (0..=m).map(|i| omega.moves().iter().fold(market.initial_price(i), |s, l| s * market.psi(l, i))).collect();
    Ok(induction.value(&prices, horizon, Parallelism::default()))
}

/// Constraint system of the `n`-step martingale polytope on dense atoms,
/// together with the discounted payoff as objective.
fn full_horizon_problem(market: &OrderedMarket, payoff: &PayoffSpec) -> Result<(Matrix, Vec<f64>, Vec<f64>)> {
    let (m, n) = (market.num_assets(), market.num_steps());
    let atoms = 1usize.checked_shl((m * n) as u32).filter(|&a| a <= MAX_FULL_HORIZON_ATOMS && m * n < 64);
    let Some(atoms) = atoms else {
        return Err(Error::ScaleExceeded(format!(
            "full-horizon oracle supports (2^m)^n ≤ {MAX_FULL_HORIZON_ATOMS}, got m = {m}, n = {n}"
        )));
    };
    let l = 1usize << m;
    let prefixes: usize = (0..n).map(|t| 1usize << (m * t)).sum();
    let mut a = Matrix::zeros(1 + m * prefixes, atoms);
    let mut b = vec![0.0; a.rows];
    b[0] = 1.0;
    for nu in 0..atoms {
        a.set(0, nu, 1.0);
    }
    let mut row = 1;
    for t in 0..n {
        let tail = m * (n - t);
        for prefix in 0..1usize << (m * t) {
            for i in 1..=m {
                for nu in prefix << tail..(prefix + 1) << tail {
                    let step_mask = (nu >> (tail - m)) & (l - 1);
                    let up = if step_mask >> (i - 1) & 1 == 1 { 1.0 } else { 0.0 };
                    a.set(row, nu, up - market.b()[i - 1]);
                }
                row += 1;
            }
        }
    }
    let gamma = payoff.internal_gamma(market)?;
    let discount = powu(market.rate_factor(), n);
    let objective = (0..atoms)
        .map(|nu| {
            let x: f64 = (0..=m)
                .map(|i| {
                    let s = (0..n).fold(market.initial_price(i), |s, t| {
                        let mask = (nu >> (m * (n - 1 - t))) & (l - 1);
                        s * market.psi(&MoveVector::from_mask(mask, m), i)
                    });
                    gamma[i] * s
                })
                .sum();
            payoff.h().eval(x) / discount
        })
        .collect();
    Ok((a, b, objective))
}

/// `max_{p ∈ M_n(L; b)} E_p(F) R^{-n}` by exhaustive vertex enumeration.
pub fn full_horizon_max_enumerated(market: &OrderedMarket, payoff: &PayoffSpec) -> Result<f64> {
    let (a, b, objective) = full_horizon_problem(market, payoff)?;
    let vertices = basic_feasible_solutions(&a, &b, Parallelism::default())?;
    Ok(vertices
        .iter()
        .map(|(x, _)| x.iter().zip(&objective).map(|(p, f)| p * f).sum::<f64>())
        .fold(f64::NEG_INFINITY, f64::max))
}

/// Same maximum, via the simplex method.
pub fn full_horizon_max_simplex(market: &OrderedMarket, payoff: &PayoffSpec) -> Result<f64> {
    let (a, b, objective) = full_horizon_problem(market, payoff)?;
    match maximize(&a, &b, &objective) {
        LpOutcome::Optimal { value, .. } => Ok(value),
        other => Err(Error::VerificationFailure(format!("martingale polytope LP returned {other:?}"))),
    }
}

/// `max_{p ∈ M_n(L; b)} E_p(F) R^{-n}` over the whole horizon (`(2^m)^n ≤ 256`).
///
/// Enumerates every vertex when the basis count allows, otherwise walks
/// vertices with the simplex method.
pub fn oracle_full_horizon_max(market: &OrderedMarket, payoff: &PayoffSpec) -> Result<f64> {
    let (a, b, _) = full_horizon_problem(market, payoff)?;
    let (reduced, _) = a.independent_rows(&b);
    if binomial(reduced.cols, reduced.rows) <= ENUMERATION_LIMIT {
        full_horizon_max_enumerated(market, payoff)
    } else {
        full_horizon_max_simplex(market, payoff)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::market::tests::example_market;
    use crate::market::{rho_move, MarketSpec};
    use crate::measures::{is_martingale_measure, vertex_measure};
    use crate::payoff::ConvexFn;

    fn example_payoff() -> PayoffSpec {
        PayoffSpec::new(vec![-1.0, 0.5, 0.5], ConvexFn::Call).unwrap()
    }

    #[test]
    fn combinations_enumerate_all() {
        assert_eq!(combinations(4, 2).len(), 6);
        assert_eq!(combinations(16, 5).len(), 4368);
        assert_eq!(combinations(3, 3), vec![vec![0, 1, 2]]);
        assert_eq!(binomial(16, 11), 4368);
    }

    #[test]
    fn complete_market_has_one_vertex() {
        let market = OrderedMarket::new(MarketSpec {
            rate_factor: 1.0,
            num_assets: 1,
            num_steps: 1,
            initial_prices: vec![1.0, 1.0],
            down_factors: vec![0.9],
            up_factors: vec![1.1],
        })
        .unwrap();
        let vertices = single_step_vertices(&market).unwrap();
        assert_eq!(vertices.len(), 1);
        let w = vertices[0].measure.weights();
        assert!((w[0] - 0.5).abs() < 1e-12 && (w[1] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn example_vertices_include_chain_vertex() {
        let market = example_market();
        let vertices = single_step_vertices(&market).unwrap();
        let q = vertex_measure(&market).to_discrete().unwrap();
        assert!(vertices.iter().any(|v| v
            .measure
            .weights()
            .iter()
            .zip(q.weights())
            .all(|(a, b)| (a - b).abs() < 1e-9)));
        for v in &vertices {
            assert!(is_martingale_measure(&v.measure, &market, 1e-9).unwrap());
            assert!(v.support.len() <= 3);
        }
    }

    #[test]
    fn indicator_off_chain_beats_vertex() {
        let market = example_market();
        let target = MoveVector::new([false, true]);
        let max = oracle_max_expectation_single_step(|l| if *l == target { 1.0 } else { 0.0 }, &market).unwrap();
        let at_q = vertex_measure(&market).expectation(|l| if *l == target { 1.0 } else { 0.0 });
        assert_eq!(at_q, 0.0);
        assert!(max > 0.3, "{max}");
    }

    #[test]
    fn affine_functions_are_pinned() {
        let market = example_market();
        let f = |l: &MoveVector| 3.0 - 2.0 * f64::from(u8::from(l.is_up(1))) + 5.0 * f64::from(u8::from(l.is_up(2)));
        let polytope = SingleStepPolytope::new(&market).unwrap();
        let values = polytope.tabulate(f);
        let expected = 3.0 - 2.0 * market.b()[0] + 5.0 * market.b()[1];
        for v in polytope.vertices() {
            let e: f64 = v.measure.weights().iter().zip(&values).map(|(p, x)| p * x).sum();
            assert!((e - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn example_oracle_values() {
        let market = example_market();
        let payoff = example_payoff();
        let c0 = oracle_cmax(&market, &payoff, &WorldState::root()).unwrap();
        assert!((c0 - 125.0 / 18.0).abs() < 1e-9);
        let c1 = oracle_cmax(&market, &payoff, &market.parse_state("01").unwrap()).unwrap();
        assert!((c1 - 16.0 / 3.0).abs() < 1e-9);
        let chain = WorldState::from_moves(vec![rho_move(1, 2)]);
        assert!((oracle_cmax(&market, &payoff, &chain).unwrap() - 31.0 / 6.0).abs() < 1e-9);
    }

    #[test]
    fn example_full_horizon() {
        let market = example_market();
        let payoff = example_payoff();
        let enumerated = full_horizon_max_enumerated(&market, &payoff).unwrap();
        let simplex = full_horizon_max_simplex(&market, &payoff).unwrap();
        assert!((enumerated - 125.0 / 18.0).abs() < 1e-8, "{enumerated}");
        assert!((simplex - 125.0 / 18.0).abs() < 1e-8, "{simplex}");
        assert!((oracle_full_horizon_max(&market, &payoff).unwrap() - 125.0 / 18.0).abs() < 1e-8);
    }

    #[test]
    fn scale_limits() {
        let spec = MarketSpec {
            rate_factor: 1.0,
            num_assets: 5,
            num_steps: 1,
            initial_prices: vec![1.0; 6],
            down_factors: vec![0.9; 5],
            up_factors: vec![1.1; 5],
        };
        let market = OrderedMarket::new(spec).unwrap();
        assert!(matches!(single_step_vertices(&market), Err(Error::ScaleExceeded(_))));
        let payoff = PayoffSpec::new(vec![0.0, 1.0, 1.0, 1.0, 1.0, 1.0], ConvexFn::Identity).unwrap();
        assert!(matches!(oracle_cmax(&market, &payoff, &WorldState::root()), Err(Error::ScaleExceeded(_))));
        let big = OrderedMarket::new(MarketSpec {
            num_assets: 3,
            num_steps: 3,
            initial_prices: vec![1.0; 4],
            down_factors: vec![0.9; 3],
            up_factors: vec![1.1; 3],
            rate_factor: 1.0,
        })
        .unwrap();
        let payoff = PayoffSpec::new(vec![0.0, 1.0, 1.0, 1.0], ConvexFn::Call).unwrap();
        assert!(matches!(oracle_full_horizon_max(&big, &payoff), Err(Error::ScaleExceeded(_))));
    }
}

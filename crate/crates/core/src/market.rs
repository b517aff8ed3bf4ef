//! Market parameters, the canonical asset ordering and states of the world.
//!
//! Users address risky assets in *external* order (the order they were
//! supplied in). Internally assets are sorted so that the risk-neutral
//! up-probabilities `b_i = (R - D_i) / (U_i - D_i)` are non-increasing; the
//! closed-form results only hold in that ordering. [`OrderedMarket`] records
//! the permutation and converts between the two.

use std::fmt;

use crate::error::{Error, Result};

/// Raw model parameters, risky assets in external order.
///
/// `initial_prices[0]` is the risk-free asset `S_0(0)`; `initial_prices[i]`,
/// `down_factors[i - 1]` and `up_factors[i - 1]` describe risky asset `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct MarketSpec {
    pub rate_factor: f64,
    pub num_assets: usize,
    pub num_steps: usize,
    pub initial_prices: Vec<f64>,
    pub down_factors: Vec<f64>,
    pub up_factors: Vec<f64>,
}

/// A validated market with assets sorted by non-increasing `b_i`.
///
/// All per-asset accessors take *internal* indices in `0..=m`, with index 0
/// the risk-free asset.
#[derive(Debug, Clone, PartialEq)]
pub struct OrderedMarket {
    spec: MarketSpec,
    // to_internal[e] = internal index of external asset e (entry 0 is the cash asset).
    to_internal: Vec<usize>,
    // to_external[i] = external index of internal asset i.
    to_external: Vec<usize>,
    initial: Vec<f64>,
    down: Vec<f64>,
    up: Vec<f64>,
    b: Vec<f64>,
    q: Vec<f64>,
}

/// Validates the parameters and builds the canonical ordering.
pub fn validate_market(spec: MarketSpec) -> Result<OrderedMarket> {
    OrderedMarket::new(spec)
}

impl OrderedMarket {
    pub fn new(spec: MarketSpec) -> Result<Self> {
        let m = spec.num_assets;
        let r = spec.rate_factor;
        if m < 1 {
            return Err(Error::ParameterViolation("need at least one risky asset".into()));
        }
        if spec.num_steps < 1 {
            return Err(Error::ParameterViolation("need at least one time step".into()));
        }
        if spec.initial_prices.len() != m + 1 || spec.down_factors.len() != m || spec.up_factors.len() != m {
            return Err(Error::ParameterViolation(format!(
                "expected {} initial prices and {m} down/up factors, got {}, {} and {}",
                m + 1,
                spec.initial_prices.len(),
                spec.down_factors.len(),
                spec.up_factors.len()
            )));
        }
        if !(r.is_finite() && r > 0.0) {
            return Err(Error::ParameterViolation(format!("rate factor {r} must be positive")));
        }
        for (i, &s) in spec.initial_prices.iter().enumerate() {
            if !(s.is_finite() && s > 0.0) {
                return Err(Error::ParameterViolation(format!("initial price S_{i}(0) = {s} must be positive")));
            }
        }
        for i in 0..m {
            let (d, u) = (spec.down_factors[i], spec.up_factors[i]);
            if !(d.is_finite() && u.is_finite() && 0.0 < d && d < r && r < u) {
                return Err(Error::ParameterViolation(format!(
                    "asset {}: need 0 < D < R < U, got D = {d}, R = {r}, U = {u}",
                    i + 1
                )));
            }
        }

        let b_ext: Vec<f64> =
            (0..m).map(|i| (r - spec.down_factors[i]) / (spec.up_factors[i] - spec.down_factors[i])).collect();
        // Stable: equal b keep their external order.
        let mut order: Vec<usize> = (1..=m).collect();
        order.sort_by(|&a, &c| b_ext[c - 1].total_cmp(&b_ext[a - 1]));

        let mut to_external = Vec::with_capacity(m + 1);
        to_external.push(0);
        to_external.extend_from_slice(&order);
        let mut to_internal = vec![0; m + 1];
        for (internal, &external) in to_external.iter().enumerate() {
            to_internal[external] = internal;
        }

        let mut initial = vec![spec.initial_prices[0]];
        let mut down = vec![r];
        let mut up = vec![r];
        let mut b = Vec::with_capacity(m);
        for &e in &order {
            initial.push(spec.initial_prices[e]);
            down.push(spec.down_factors[e - 1]);
            up.push(spec.up_factors[e - 1]);
            b.push(b_ext[e - 1]);
        }

        let mut q = Vec::with_capacity(m + 1);
        q.push(1.0 - b[0]);
        for j in 1..m {
            q.push(b[j - 1] - b[j]);
        }
        q.push(b[m - 1]);

        Ok(Self { spec, to_internal, to_external, initial, down, up, b, q })
    }

    pub fn spec(&self) -> &MarketSpec {
        &self.spec
    }

    /// Number of risky assets `m`.
    pub fn num_assets(&self) -> usize {
        self.spec.num_assets
    }

    pub fn num_steps(&self) -> usize {
        self.spec.num_steps
    }

    pub fn rate_factor(&self) -> f64 {
        self.spec.rate_factor
    }

    /// `b_1..b_m` in internal order (non-increasing).
    pub fn b(&self) -> &[f64] {
        &self.b
    }

    /// `q_0..q_m`, the weights of the supermodular vertex.
    pub fn q(&self) -> &[f64] {
        &self.q
    }

    /// `S_i(0)` for internal index `i`.
    pub fn initial_price(&self, i: usize) -> f64 {
        self.initial[i]
    }

    /// `D_i`; for `i = 0` this is `R`.
    pub fn down(&self, i: usize) -> f64 {
        self.down[i]
    }

    /// `U_i`; for `i = 0` this is `R`.
    pub fn up(&self, i: usize) -> f64 {
        self.up[i]
    }

    /// Maps external asset index `e` (0 = cash) to its internal index.
    pub fn to_internal_index(&self, e: usize) -> usize {
        self.to_internal[e]
    }

    /// Maps internal asset index `i` (0 = cash) to its external index.
    pub fn to_external_index(&self, i: usize) -> usize {
        self.to_external[i]
    }

    /// The permutation external → internal, entry 0 being the cash asset.
    pub fn permutation(&self) -> &[usize] {
        &self.to_internal
    }

    /// Reorders a per-asset vector of length `m + 1` from external to internal order.
    pub fn reorder_to_internal<T: Copy>(&self, external: &[T]) -> Vec<T> {
        self.to_external.iter().map(|&e| external[e]).collect()
    }

    /// Reorders a per-asset vector of length `m + 1` from internal to external order.
    pub fn reorder_to_external<T: Copy>(&self, internal: &[T]) -> Vec<T> {
        self.to_internal.iter().map(|&i| internal[i]).collect()
    }

    /// Price ratio `ψ_i(λ)`: `R` for the cash asset, otherwise `U_i` or `D_i`.
    pub fn psi(&self, lambda: &MoveVector, i: usize) -> f64 {
        if i == 0 {
            self.spec.rate_factor
        } else if lambda.is_up(i) {
            self.up[i]
        } else {
            self.down[i]
        }
    }

    /// `S_i(k)(ω) = S_i(0) · ψ_i(λ¹) ··· ψ_i(λᵏ)`.
    pub fn asset_price(&self, omega: &WorldState, i: usize) -> f64 {
        omega.moves().iter().fold(self.initial[i], |s, lambda| s * self.psi(lambda, i))
    }

    /// All `m + 1` prices at `ω`, internal order.
    pub fn prices(&self, omega: &WorldState) -> Vec<f64> {
        (0..=self.num_assets()).map(|i| self.asset_price(omega, i)).collect()
    }

    /// Converts a move given in external asset order to internal order.
    pub fn move_to_internal(&self, external: &MoveVector) -> Result<MoveVector> {
        self.check_len(external)?;
        Ok(MoveVector::new((1..=self.num_assets()).map(|i| external.is_up(self.to_external[i]))))
    }

    /// Converts an internally ordered move to external asset order.
    pub fn move_to_external(&self, internal: &MoveVector) -> Result<MoveVector> {
        self.check_len(internal)?;
        Ok(MoveVector::new((1..=self.num_assets()).map(|e| internal.is_up(self.to_internal[e]))))
    }

    /// Parses a comma-separated state string written in external asset order
    /// and returns the internal state.
    pub fn parse_state(&self, s: &str) -> Result<WorldState> {
        let external = WorldState::parse(s, self.num_assets())?;
        if external.step() > self.num_steps() {
            return Err(Error::InvalidState(format!(
                "state has {} moves but the market has {} steps",
                external.step(),
                self.num_steps()
            )));
        }
        external
            .moves()
            .iter()
            .map(|lambda| self.move_to_internal(lambda))
            .collect::<Result<Vec<_>>>()
            .map(WorldState::from_moves)
    }

    /// Formats an internal state as an external-order state string.
    pub fn format_state(&self, omega: &WorldState) -> String {
        let moves: Vec<String> = omega
            .moves()
            .iter()
            .map(|lambda| self.move_to_external(lambda).map(|v| v.to_string()).unwrap_or_default())
            .collect();
        moves.join(",")
    }

    fn check_len(&self, lambda: &MoveVector) -> Result<()> {
        if lambda.len() != self.num_assets() {
            return Err(Error::InvalidState(format!(
                "move has {} entries, market has {} risky assets",
                lambda.len(),
                self.num_assets()
            )));
        }
        Ok(())
    }
}

/// One step of joint price dynamics: entry `i` (1-based) is `true` when
/// asset `i` moved up.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MoveVector {
    bits: Vec<bool>,
}

impl MoveVector {
    pub fn new(bits: impl IntoIterator<Item = bool>) -> Self {
        Self { bits: bits.into_iter().collect() }
    }

    /// Decodes `mask` with bit `i - 1` holding asset `i`.
    pub fn from_mask(mask: usize, m: usize) -> Self {
        Self::new((0..m).map(|b| mask >> b & 1 == 1))
    }

    pub fn mask(&self) -> usize {
        self.bits.iter().enumerate().fold(0, |acc, (b, &up)| acc | (usize::from(up) << b))
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    /// Whether asset `i` (1-based) moved up.
    pub fn is_up(&self, i: usize) -> bool {
        self.bits[i - 1]
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    /// Coordinatewise maximum.
    pub fn join(&self, other: &Self) -> Self {
        Self::new(self.bits.iter().zip(&other.bits).map(|(a, b)| *a || *b))
    }

    /// Coordinatewise minimum.
    pub fn meet(&self, other: &Self) -> Self {
        Self::new(self.bits.iter().zip(&other.bits).map(|(a, b)| *a && *b))
    }

    /// Parses a string of `'0'`/`'1'` characters.
    pub fn parse(s: &str, m: usize) -> Result<Self> {
        if s.len() != m {
            return Err(Error::InvalidState(format!("move {s:?} must have {m} characters")));
        }
        s.chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                _ => Err(Error::InvalidState(format!("move {s:?} may only contain '0' and '1'"))),
            })
            .collect::<Result<Vec<_>>>()
            .map(Self::new)
    }
}

impl fmt::Display for MoveVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.bits {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

/// `ρ_j`: the first `j` assets up, the remaining `m - j` down.
pub fn rho_move(j: usize, m: usize) -> MoveVector {
    assert!(j <= m, "rho index {j} exceeds asset count {m}");
    MoveVector::new((1..=m).map(|i| i <= j))
}

/// A state of the world `ω = (λ¹, …, λᵏ)` at time `k`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct WorldState {
    moves: Vec<MoveVector>,
}

impl WorldState {
    /// The empty state at time 0.
    pub fn root() -> Self {
        Self::default()
    }

    pub fn from_moves(moves: Vec<MoveVector>) -> Self {
        Self { moves }
    }

    /// Parses a comma-separated list of moves without reordering.
    pub fn parse(s: &str, m: usize) -> Result<Self> {
        let s = s.trim();
        if s.is_empty() {
            return Ok(Self::root());
        }
        s.split(',').map(|part| MoveVector::parse(part.trim(), m)).collect::<Result<_>>().map(Self::from_moves)
    }

    /// The time index `k`.
    pub fn step(&self) -> usize {
        self.moves.len()
    }

    pub fn moves(&self) -> &[MoveVector] {
        &self.moves
    }

    /// `ωλ`, the state one step later.
    pub fn extended(&self, lambda: MoveVector) -> Self {
        let mut moves = self.moves.clone();
        moves.push(lambda);
        Self { moves }
    }

    /// The first `k` moves.
    pub fn prefix(&self, k: usize) -> Self {
        Self { moves: self.moves[..k].to_vec() }
    }
}

impl fmt::Display for WorldState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (t, lambda) in self.moves.iter().enumerate() {
            if t > 0 {
                f.write_str(",")?;
            }
            write!(f, "{lambda}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    /// The two-step, two-asset worked example market.
    pub(crate) fn example_market() -> OrderedMarket {
        OrderedMarket::new(MarketSpec {
            rate_factor: 1.0,
            num_assets: 2,
            num_steps: 2,
            initial_prices: vec![100.0, 100.0, 100.0],
            down_factors: vec![0.8, 0.9],
            up_factors: vec![1.1, 1.2],
        })
        .unwrap()
    }

    fn state(market: &OrderedMarket, s: &str) -> WorldState {
        market.parse_state(s).unwrap()
    }

    #[test]
    fn example_b_and_q() {
        let market = example_market();
        assert!((market.b()[0] - 2.0 / 3.0).abs() < 1e-12);
        assert!((market.b()[1] - 1.0 / 3.0).abs() < 1e-12);
        assert_eq!(market.permutation(), &[0, 1, 2]);
        for &q in market.q() {
            assert!((q - 1.0 / 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn swapped_assets_are_reordered() {
        let market = OrderedMarket::new(MarketSpec {
            rate_factor: 1.0,
            num_assets: 2,
            num_steps: 2,
            initial_prices: vec![100.0, 100.0, 100.0],
            down_factors: vec![0.9, 0.8],
            up_factors: vec![1.2, 1.1],
        })
        .unwrap();
        assert_eq!(market.permutation(), &[0, 2, 1]);
        assert!((market.b()[0] - 2.0 / 3.0).abs() < 1e-12);
        assert!((market.b()[1] - 1.0 / 3.0).abs() < 1e-12);
        // external "01" = external asset 2 (the b = 2/3 one) up = internal asset 1 up
        let omega = state(&market, "01");
        assert_eq!(omega.moves()[0], MoveVector::new([true, false]));
        assert_eq!(market.format_state(&omega), "01");
    }

    #[test]
    fn ties_keep_external_order() {
        let market = OrderedMarket::new(MarketSpec {
            rate_factor: 1.0,
            num_assets: 3,
            num_steps: 1,
            initial_prices: vec![1.0; 4],
            down_factors: vec![0.9, 0.8, 0.9],
            up_factors: vec![1.1, 1.1, 1.1],
        })
        .unwrap();
        // b = (0.5, 2/3, 0.5)
        assert_eq!(market.permutation(), &[0, 2, 1, 3]);
        assert_eq!(market.q()[2], 0.0);
    }

    #[test]
    fn rejects_arbitrage_markets() {
        let base = example_market().spec().clone();
        let mut spec = base.clone();
        spec.down_factors[0] = 1.0;
        assert!(matches!(OrderedMarket::new(spec), Err(Error::ParameterViolation(_))));
        let mut spec = base.clone();
        spec.up_factors[1] = 0.95;
        assert!(matches!(OrderedMarket::new(spec), Err(Error::ParameterViolation(_))));
        let mut spec = base.clone();
        spec.down_factors[0] = 0.0;
        assert!(matches!(OrderedMarket::new(spec), Err(Error::ParameterViolation(_))));
        let mut spec = base.clone();
        spec.initial_prices[0] = 0.0;
        assert!(matches!(OrderedMarket::new(spec), Err(Error::ParameterViolation(_))));
        let mut spec = base.clone();
        spec.num_steps = 0;
        assert!(matches!(OrderedMarket::new(spec), Err(Error::ParameterViolation(_))));
        let spec =
            MarketSpec { num_assets: 0, initial_prices: vec![1.0], down_factors: vec![], up_factors: vec![], ..base };
        assert!(matches!(OrderedMarket::new(spec), Err(Error::ParameterViolation(_))));
    }

    #[test]
    fn psi_values() {
        let market = example_market();
        let lambda = MoveVector::new([true, false]);
        assert_eq!(market.psi(&lambda, 1), 1.1);
        assert_eq!(market.psi(&lambda, 2), 0.9);
        assert_eq!(market.psi(&lambda, 0), 1.0);
    }

    #[test]
    fn example_prices() {
        let market = example_market();
        let omega = state(&market, "01");
        assert!((market.asset_price(&omega, 1) - 80.0).abs() < 1e-12);
        assert!((market.asset_price(&omega, 2) - 120.0).abs() < 1e-12);
        let root = WorldState::root();
        assert_eq!(market.asset_price(&root, 2), 100.0);
        let omega = state(&market, "11,11");
        assert!((market.asset_price(&omega, 2) - 144.0).abs() < 1e-12);
        assert!((market.asset_price(&omega, 1) - 121.0).abs() < 1e-12);
    }

    #[test]
    fn rho_moves() {
        assert_eq!(rho_move(0, 2).to_string(), "00");
        assert_eq!(rho_move(2, 2).to_string(), "11");
        assert_eq!(rho_move(1, 3).to_string(), "100");
    }

    #[test]
    fn state_parsing_errors() {
        let market = example_market();
        assert!(market.parse_state("0").is_err());
        assert!(market.parse_state("0a").is_err());
        assert!(market.parse_state("01,01,01").is_err());
        assert_eq!(market.parse_state("").unwrap().step(), 0);
    }
}

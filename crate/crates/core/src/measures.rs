//! Discrete measures on `L^k` (`L = {0,1}^m`) used for verification.
//!
//! The pricing path never materialises a measure. These types exist so the
//! oracle and the test suite can check martingale and supermodularity
//! properties directly. Atoms are indexed by the base-`2^m` number whose
//! leading digit is the first move's mask (bit `i - 1` = asset `i` up), so
//! atoms sharing a prefix are contiguous.

use crate::error::{Error, Result};
use crate::market::{rho_move, MoveVector, OrderedMarket, WorldState};

/// Largest `k · m` a [`DiscreteMeasure`] may span.
pub const MAX_ATOM_BITS: usize = 12;

const SUM_TOL: f64 = 1e-12;
const SUPERMODULAR_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteMeasure {
    num_assets: usize,
    steps: usize,
    weights: Vec<f64>,
}

impl DiscreteMeasure {
    /// Builds a measure from dense atom weights.
    pub fn new(num_assets: usize, steps: usize, weights: Vec<f64>) -> Result<Self> {
        check_scale(num_assets, steps)?;
        let atoms = 1usize << (num_assets * steps);
        if weights.len() != atoms {
            return Err(Error::DimensionMismatch(format!(
                "expected {atoms} weights on L^{steps}, got {}",
                weights.len()
            )));
        }
        if weights.iter().any(|&w| w.is_nan() || w < 0.0) {
            return Err(Error::ParameterViolation("measure weights must be non-negative".into()));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > SUM_TOL {
            return Err(Error::ParameterViolation(format!("measure weights sum to {total}, not 1")));
        }
        Ok(Self { num_assets, steps, weights })
    }

    /// Point mass at `omega`.
    pub fn point_mass(num_assets: usize, omega: &WorldState) -> Result<Self> {
        check_scale(num_assets, omega.step())?;
        let mut weights = vec![0.0; 1 << (num_assets * omega.step())];
        weights[atom_index(num_assets, omega)] = 1.0;
        Self::new(num_assets, omega.step(), weights)
    }

    pub fn num_assets(&self) -> usize {
        self.num_assets
    }

    /// The `k` in `L^k`.
    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Weight of the full-length atom `omega`.
    pub fn weight(&self, omega: &WorldState) -> f64 {
        assert_eq!(omega.step(), self.steps, "atom must have full length");
        self.weights[atom_index(self.num_assets, omega)]
    }

    /// Mass of the cylinder of all atoms starting with `prefix`.
    pub fn cylinder(&self, prefix: &WorldState) -> f64 {
        let t = prefix.step();
        assert!(t <= self.steps);
        let width = 1usize << (self.num_assets * (self.steps - t));
        let start = atom_index(self.num_assets, prefix) * width;
        self.weights[start..start + width].iter().sum()
    }

    /// All full-length atoms in index order.
    pub fn atoms(&self) -> impl Iterator<Item = WorldState> + '_ {
        (0..self.weights.len()).map(|a| atom_state(self.num_assets, self.steps, a))
    }

    pub fn expectation(&self, f: impl Fn(&WorldState) -> f64) -> f64 {
        self.atoms().zip(&self.weights).map(|(omega, &w)| if w == 0.0 { 0.0 } else { w * f(&omega) }).sum()
    }

    /// Product measure on `L^(k' + k'')`.
    pub fn tensor(&self, other: &Self) -> Result<Self> {
        if self.num_assets != other.num_assets {
            return Err(Error::DimensionMismatch("tensor factors live on different L".into()));
        }
        check_scale(self.num_assets, self.steps + other.steps)?;
        let weights = self.weights.iter().flat_map(|&a| other.weights.iter().map(move |&b| a * b)).collect();
        Ok(Self { num_assets: self.num_assets, steps: self.steps + other.steps, weights })
    }

    /// `(1 - t) · self + t · other`.
    pub fn mix(&self, other: &Self, t: f64) -> Result<Self> {
        if self.num_assets != other.num_assets || self.steps != other.steps {
            return Err(Error::DimensionMismatch("mixing measures on different spaces".into()));
        }
        let weights = self.weights.iter().zip(&other.weights).map(|(a, b)| (1.0 - t) * a + t * b).collect();
        Self::new(self.num_assets, self.steps, weights)
    }

    /// Law of the `t`-th move (0-based) as a measure on `L`.
    pub fn marginal(&self, t: usize) -> Result<Self> {
        assert!(t < self.steps);
        let l = 1usize << self.num_assets;
        let shift = self.num_assets * (self.steps - 1 - t);
        let mut weights = vec![0.0; l];
        for (a, &w) in self.weights.iter().enumerate() {
            weights[(a >> shift) & (l - 1)] += w;
        }
        Ok(Self { num_assets: self.num_assets, steps: 1, weights })
    }
}

fn check_scale(num_assets: usize, steps: usize) -> Result<()> {
    if num_assets * steps > MAX_ATOM_BITS {
        return Err(Error::ScaleExceeded(format!(
            "measure on L^{steps} with m = {num_assets} exceeds {MAX_ATOM_BITS} atom bits"
        )));
    }
    Ok(())
}

fn atom_index(num_assets: usize, omega: &WorldState) -> usize {
    omega.moves().iter().fold(0, |acc, lambda| (acc << num_assets) | lambda.mask())
}

fn atom_state(num_assets: usize, steps: usize, atom: usize) -> WorldState {
    let l = 1usize << num_assets;
    WorldState::from_moves(
        (0..steps)
            .map(|t| MoveVector::from_mask((atom >> (num_assets * (steps - 1 - t))) & (l - 1), num_assets))
            .collect(),
    )
}

/// The supermodular vertex: weight `q_j` on `ρ_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct VertexMeasure {
    num_assets: usize,
    weights: Vec<f64>,
}

impl VertexMeasure {
    /// Weights `q_0..q_m` on `ρ_0..ρ_m`.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Probability of a single move.
    pub fn weight_of(&self, lambda: &MoveVector) -> f64 {
        let ups = lambda.bits().iter().take_while(|&&b| b).count();
        if lambda.bits()[ups..].iter().any(|&b| b) {
            0.0
        } else {
            self.weights[ups]
        }
    }

    pub fn expectation(&self, f: impl Fn(&MoveVector) -> f64) -> f64 {
        self.weights
            .iter()
            .enumerate()
            .map(|(j, &q)| if q == 0.0 { 0.0 } else { q * f(&rho_move(j, self.num_assets)) })
            .sum()
    }

    pub fn to_discrete(&self) -> Result<DiscreteMeasure> {
        check_scale(self.num_assets, 1)?;
        let mut weights = vec![0.0; 1 << self.num_assets];
        for (j, &q) in self.weights.iter().enumerate() {
            weights[rho_move(j, self.num_assets).mask()] += q;
        }
        DiscreteMeasure::new(self.num_assets, 1, weights)
    }
}

pub fn vertex_measure(market: &OrderedMarket) -> VertexMeasure {
    VertexMeasure { num_assets: market.num_assets(), weights: market.q().to_vec() }
}

/// `q^{⊗steps}` as a dense measure on `L^steps`.
pub fn product_vertex_measure(market: &OrderedMarket, steps: usize) -> Result<DiscreteMeasure> {
    let m = market.num_assets();
    check_scale(m, steps)?;
    let single = vertex_measure(market).to_discrete()?;
    let mut product = DiscreteMeasure { num_assets: m, steps: 0, weights: vec![1.0] };
    for _ in 0..steps {
        product = product.tensor(&single)?;
    }
    Ok(product)
}

/// The strictly positive martingale measure on `L` with
/// `μ(λ) = Π_{i ∈ supp λ} c_i / Π_i (1 + c_i)`, `c_i = b_i / (1 - b_i)`.
pub fn nondegenerate_measure(market: &OrderedMarket) -> Result<DiscreteMeasure> {
    let m = market.num_assets();
    check_scale(m, 1)?;
    let c: Vec<f64> = market.b().iter().map(|&b| b / (1.0 - b)).collect();
    let total: f64 = c.iter().map(|ci| 1.0 + ci).product();
    let weights = (0..1usize << m)
        .map(|mask| {
            let num: f64 = (0..m).filter(|&i| mask >> i & 1 == 1).map(|i| c[i]).product();
            num / total
        })
        .collect::<Vec<_>>();
    let sum: f64 = weights.iter().sum();
    DiscreteMeasure::new(m, 1, weights.into_iter().map(|w| w / sum).collect())
}

/// Whether `p` lies in the martingale polytope: for every prefix `a'` of
/// length `t < k` and every asset `i`,
/// `Σ_λ ψ_i(λ) p(a'λ) = R · p(a')` within `tol`.
pub fn is_martingale_measure(p: &DiscreteMeasure, market: &OrderedMarket, tol: f64) -> Result<bool> {
    let m = market.num_assets();
    if p.num_assets != m {
        return Err(Error::DimensionMismatch(format!("measure lives on m = {}, market has m = {m}", p.num_assets)));
    }
    if p.steps > market.num_steps() {
        return Err(Error::DimensionMismatch(format!(
            "measure spans {} steps, market has {}",
            p.steps,
            market.num_steps()
        )));
    }
    let l = 1usize << m;
    let r = market.rate_factor();
    // cyl[t][a] = mass of the length-t cylinder with index a
    let mut cyl = vec![p.weights.clone()];
    for _ in 0..p.steps {
        let finer = cyl.last().unwrap();
        let coarser: Vec<f64> = finer.chunks(l).map(|c| c.iter().sum()).collect();
        cyl.push(coarser);
    }
    cyl.reverse();
    for t in 0..p.steps {
        let (parents, children) = (&cyl[t], &cyl[t + 1]);
        for (a, &mass) in parents.iter().enumerate() {
            for i in 1..=m {
                let lhs: f64 = (0..l)
                    .map(|mask| {
                        let psi = if mask >> (i - 1) & 1 == 1 { market.up(i) } else { market.down(i) };
                        psi * children[a * l + mask]
                    })
                    .sum();
                if (lhs - r * mass).abs() > tol {
                    return Ok(false);
                }
            }
        }
    }
    Ok(true)
}

/// Whether `f(λ ∨ λ') + f(λ ∧ λ') ≥ f(λ) + f(λ') - 1e-12` for all pairs in `L`.
pub fn is_supermodular(f: impl Fn(&MoveVector) -> f64, m: usize) -> bool {
    assert!(m <= MAX_ATOM_BITS, "supermodularity check limited to m ≤ {MAX_ATOM_BITS}");
    let values: Vec<f64> = (0..1usize << m).map(|mask| f(&MoveVector::from_mask(mask, m))).collect();
    for a in 0..values.len() {
        for b in a + 1..values.len() {
            if values[a | b] + values[a & b] < values[a] + values[b] - SUPERMODULAR_TOL {
                return false;
            }
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::market::tests::example_market;
    use crate::market::MarketSpec;

    fn single_asset(b_half: bool) -> OrderedMarket {
        OrderedMarket::new(MarketSpec {
            rate_factor: 1.0,
            num_assets: 1,
            num_steps: 3,
            initial_prices: vec![1.0, 1.0],
            down_factors: vec![0.9],
            up_factors: vec![if b_half { 1.1 } else { 1.3 }],
        })
        .unwrap()
    }

    #[test]
    fn vertex_measure_example() {
        let market = example_market();
        let q = vertex_measure(&market).to_discrete().unwrap();
        for (mask, expected) in [(0b00, 1.0 / 3.0), (0b01, 1.0 / 3.0), (0b11, 1.0 / 3.0), (0b10, 0.0)] {
            assert!((q.weights()[mask] - expected).abs() < 1e-12);
        }
        let q = vertex_measure(&single_asset(true));
        assert!((q.weights()[0] - 0.5).abs() < 1e-12 && (q.weights()[1] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn vertex_measure_matches_b() {
        let market = example_market();
        let q = vertex_measure(&market);
        for i in 1..=2 {
            let e = q.expectation(|l| if l.is_up(i) { 1.0 } else { 0.0 });
            assert!((e - market.b()[i - 1]).abs() < 1e-14);
        }
    }

    #[test]
    fn product_measure_example() {
        let market = example_market();
        let p = product_vertex_measure(&market, 2).unwrap();
        let nonzero: Vec<f64> = p.weights().iter().copied().filter(|&w| w > 0.0).collect();
        assert_eq!(nonzero.len(), 9);
        assert!(nonzero.iter().all(|w| (w - 1.0 / 9.0).abs() < 1e-12));
        let empty = product_vertex_measure(&market, 0).unwrap();
        assert_eq!(empty.weights(), &[1.0]);
        let single = vertex_measure(&market).to_discrete().unwrap();
        for t in 0..2 {
            let marginal = p.marginal(t).unwrap();
            for (a, b) in marginal.weights().iter().zip(single.weights()) {
                assert!((a - b).abs() < 1e-14);
            }
        }
        assert!(is_martingale_measure(&p, &market, 1e-12).unwrap());
    }

    #[test]
    fn product_measure_scale_limit() {
        let market = example_market();
        assert!(matches!(product_vertex_measure(&market, 7), Err(Error::ScaleExceeded(_))));
    }

    #[test]
    fn nondegenerate_example() {
        // c = (2, 1/2), C = 3 · 1.5 = 4.5
        let market = example_market();
        let mu = nondegenerate_measure(&market).unwrap();
        let expected = [1.0 / 4.5, 2.0 / 4.5, 0.5 / 4.5, 1.0 / 4.5];
        for (w, e) in mu.weights().iter().zip(expected) {
            assert!((w - e).abs() < 1e-14);
        }
        assert!((mu.weights()[0] - 2.0 / 9.0).abs() < 1e-14);
        let e1: f64 = mu.weights()[0b01] + mu.weights()[0b11];
        let e2: f64 = mu.weights()[0b10] + mu.weights()[0b11];
        assert!((e1 - 2.0 / 3.0).abs() < 1e-14);
        assert!((e2 - 1.0 / 3.0).abs() < 1e-14);
        assert!(is_martingale_measure(&mu, &market, 1e-12).unwrap());
        let uniform = nondegenerate_measure(&single_asset(true)).unwrap();
        assert!((uniform.weights()[0] - 0.5).abs() < 1e-14);
    }

    #[test]
    fn point_mass_off_chain_is_not_martingale() {
        let market = example_market();
        let omega = WorldState::from_moves(vec![MoveVector::new([false, true])]);
        let p = DiscreteMeasure::point_mass(2, &omega).unwrap();
        assert!(!is_martingale_measure(&p, &market, 1e-9).unwrap());
    }

    #[test]
    fn martingale_dimension_errors() {
        let market = example_market();
        let p = DiscreteMeasure::new(1, 1, vec![0.5, 0.5]).unwrap();
        assert!(matches!(is_martingale_measure(&p, &market, 1e-9), Err(Error::DimensionMismatch(_))));
        let q = vertex_measure(&market).to_discrete().unwrap();
        let long = q.tensor(&q).unwrap().tensor(&q).unwrap();
        assert!(matches!(is_martingale_measure(&long, &market, 1e-9), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn tensor_of_martingale_measures() {
        let market = example_market();
        let q = vertex_measure(&market).to_discrete().unwrap();
        let mu = nondegenerate_measure(&market).unwrap();
        assert!(is_martingale_measure(&q.tensor(&mu).unwrap(), &market, 1e-12).unwrap());
        assert!(is_martingale_measure(&mu.tensor(&mu).unwrap(), &market, 1e-12).unwrap());
    }

    #[test]
    fn supermodularity_checks() {
        assert!(is_supermodular(
            |l| 2.0 * f64::from(u8::from(l.is_up(1))) - 3.0 * f64::from(u8::from(l.is_up(2))) + 1.0,
            2
        ));
        let convex_of_positive = |l: &MoveVector| {
            let x: f64 = l.bits().iter().zip([1.0, 2.0, 0.5]).map(|(&b, a)| if b { a } else { 0.0 }).sum();
            (x - 1.7f64).max(0.0)
        };
        assert!(is_supermodular(convex_of_positive, 3));
        let xor = |l: &MoveVector| if l.is_up(1) != l.is_up(2) { 1.0 } else { 0.0 };
        assert!(!is_supermodular(xor, 2));
    }

    #[test]
    fn vertex_weight_of_off_chain_is_zero() {
        let market = example_market();
        let q = vertex_measure(&market);
        assert_eq!(q.weight_of(&MoveVector::new([false, true])), 0.0);
        assert!((q.weight_of(&MoveVector::new([true, false])) - 1.0 / 3.0).abs() < 1e-15);
    }
}

#![allow(dead_code)]

use rand::rngs::StdRng;
use rand::Rng;
use superhedge::{ConvexFn, MarketSpec, MoveVector, OrderedMarket, PayoffSpec, PiecewiseLinear, WorldState};

pub fn example_market() -> OrderedMarket {
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

pub fn example_payoff() -> PayoffSpec {
    PayoffSpec::new(vec![-1.0, 0.5, 0.5], ConvexFn::Call).unwrap()
}

pub fn random_market(rng: &mut StdRng, m: usize, n: usize) -> OrderedMarket {
    let r = rng.gen_range(1.0..1.05);
    let mut prices = vec![rng.gen_range(0.5..2.0)];
    prices.extend((0..m).map(|_| rng.gen_range(50.0..150.0)));
    OrderedMarket::new(MarketSpec {
        rate_factor: r,
        num_assets: m,
        num_steps: n,
        initial_prices: prices,
        down_factors: (0..m).map(|_| r * rng.gen_range(0.75..0.98)).collect(),
        up_factors: (0..m).map(|_| r * rng.gen_range(1.02..1.3)).collect(),
    })
    .unwrap()
}

/// Random basket call struck near the forward basket value.
pub fn random_basket_call(rng: &mut StdRng, market: &OrderedMarket) -> PayoffSpec {
    let m = market.num_assets();
    let raw: Vec<f64> = (0..m).map(|_| rng.gen_range(0.05..1.0)).collect();
    let total: f64 = raw.iter().sum();
    let weights: Vec<f64> = raw.iter().map(|w| w / total).collect();
    let spot: f64 = weights.iter().zip(&market.spec().initial_prices[1..]).map(|(w, s)| w * s).sum();
    let forward = spot * market.rate_factor().powi(market.num_steps() as i32);
    PayoffSpec::basket_call(market, &weights, forward * rng.gen_range(0.85..1.15)).unwrap()
}

/// Random claim of the convex class: basket calls, puts and convex
/// piecewise-linear functions.
pub fn random_payoff(rng: &mut StdRng, market: &OrderedMarket) -> PayoffSpec {
    let call = random_basket_call(rng, market);
    match rng.gen_range(0..3) {
        0 => call,
        1 => PayoffSpec::new(call.gamma().to_vec(), ConvexFn::Put).unwrap(),
        _ => {
            let knots = vec![-20.0, -5.0, 0.0, 10.0];
            let mut slopes: Vec<f64> = (0..3).map(|_| rng.gen_range(-1.5..1.5)).collect();
            slopes.sort_by(f64::total_cmp);
            let h = PiecewiseLinear::new(knots, slopes, rng.gen_range(0.0..5.0)).unwrap();
            PayoffSpec::new(call.gamma().to_vec(), ConvexFn::PiecewiseLinear(h)).unwrap()
        }
    }
}

/// Every state of length `k` (internal order), lexicographic in move masks.
pub fn states_at(m: usize, k: usize) -> Vec<WorldState> {
    let l = 1usize << m;
    (0..l.pow(k as u32))
        .map(|mut idx| {
            let mut moves = vec![MoveVector::from_mask(0, m); k];
            for t in (0..k).rev() {
                moves[t] = MoveVector::from_mask(idx % l, m);
                idx /= l;
            }
            WorldState::from_moves(moves)
        })
        .collect()
}

/// Single-asset CRR price by backward induction on the recombining tree.
pub fn crr_price(market: &OrderedMarket, payoff: &PayoffSpec, omega: &WorldState) -> f64 {
    assert_eq!(market.num_assets(), 1);
    let r = market.rate_factor();
    let (d, u) = (market.down(1), market.up(1));
    let p = (r - d) / (u - d);
    let k = omega.step();
    let n = market.num_steps();
    let s0 = market.initial_price(0) * r.powi(k as i32);
    let s1 = omega.moves().iter().fold(market.initial_price(1), |s, l| s * if l.is_up(1) { u } else { d });
    let g = payoff.gamma();
    let steps = n - k;
    let mut values: Vec<f64> = (0..=steps)
        .map(|ups| {
            let cash = s0 * r.powi(steps as i32);
            let stock = s1 * u.powi(ups as i32) * d.powi((steps - ups) as i32);
            payoff.h().eval(g[0] * cash + g[1] * stock)
        })
        .collect();
    for level in (0..steps).rev() {
        for ups in 0..=level {
            values[ups] = ((1.0 - p) * values[ups] + p * values[ups + 1]) / r;
        }
    }
    values[0]
}

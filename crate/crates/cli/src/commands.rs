use anyhow::anyhow;
use log::info;
use superhedge::hedging::hedge_weights_with;
use superhedge::oracle::{oracle_cmax, oracle_full_horizon_max};
use superhedge::pricing::cmax_with;
use superhedge::{
    portfolio_value_next, rho_move, setup_cost, Backtester, Error as CoreError, EvalMode, MoveVector, OrderedMarket,
    Parallelism, PayoffSpec, WorldState,
};

use crate::report::{
    BacktestReport, BacktestRow, HedgeReport, NextValue, PriceReport, Report, VerifyReport, VerifyRow,
};
use crate::Failure;

/// Above this many risky assets `hedge` lists only the chain moves.
const MAX_LISTED_ASSETS: usize = 10;
/// Cap on the number of nodes `verify` checks in one run.
const MAX_VERIFY_NODES: usize = 4096;

pub struct Inputs {
    pub market: OrderedMarket,
    pub payoff: PayoffSpec,
    pub names: Vec<String>,
    pub mode: EvalMode,
}

impl Inputs {
    fn cmax(&self, omega: &WorldState) -> Result<f64, Failure> {
        Ok(cmax_with(&self.market, &self.payoff, omega, self.mode, Parallelism::default())?)
    }
}

/// Resolves `--step`/`--state` into a node; the state string must hold
/// exactly `k` moves.
pub fn resolve_node(market: &OrderedMarket, step: Option<usize>, state: Option<&str>) -> Result<WorldState, Failure> {
    let omega = match state {
        Some(s) => market.parse_state(s)?,
        None => WorldState::root(),
    };
    match step {
        Some(k) if k != omega.step() => {
            if state.is_none() {
                Err(anyhow!("--step {k} needs a --state with {k} moves").into())
            } else {
                Err(anyhow!("--step {k} disagrees with --state, which has {} moves", omega.step()).into())
            }
        }
        _ => Ok(omega),
    }
}

pub fn price(inputs: &Inputs, omega: &WorldState) -> Result<Report, Failure> {
    let cmax = inputs.cmax(omega)?;
    Ok(Report::Price(PriceReport { k: omega.step(), state: inputs.market.format_state(omega), cmax }))
}

pub fn hedge(inputs: &Inputs, omega: &WorldState) -> Result<Report, Failure> {
    let market = &inputs.market;
    let m = market.num_assets();
    let weights = hedge_weights_with(market, &inputs.payoff, omega, inputs.mode)?;
    let (moves, next_moves): (Vec<MoveVector>, _) = if m <= MAX_LISTED_ASSETS {
        let external = (0..1usize << m).map(|mask| MoveVector::from_mask(mask, m));
        (external.map(|l| market.move_to_internal(&l)).collect::<Result<_, _>>()?, "all")
    } else {
        ((0..=m).map(|j| rho_move(j, m)).collect(), "rho")
    };
    let mut next_values = Vec::with_capacity(moves.len());
    for lambda in moves {
        let value = portfolio_value_next(market, &weights, &lambda);
        let cmax_next = inputs.cmax(&omega.extended(lambda.clone()))?;
        next_values.push(NextValue {
            lambda: market.move_to_external(&lambda)?.to_string(),
            value,
            cmax_next,
            surplus: value - cmax_next,
        });
    }
    Ok(Report::Hedge(HedgeReport {
        k: omega.step(),
        state: market.format_state(omega),
        assets: inputs.names.clone(),
        alpha: weights.alpha.clone(),
        setup_cost: setup_cost(market, &weights),
        cmax: inputs.cmax(omega)?,
        next_moves,
        next_values,
    }))
}

pub fn backtest(inputs: &Inputs, path: &WorldState) -> Result<Report, Failure> {
    let market = &inputs.market;
    let n = market.num_steps();
    if path.step() != n {
        return Err(anyhow!("backtest needs a full path of {n} moves, got {}", path.step()).into());
    }
    let base = Backtester::new(market, &inputs.payoff).with_mode(inputs.mode);
    let mut tester = match base.with_tree_cache() {
        Ok(t) => t,
        Err(_) => Backtester::new(market, &inputs.payoff).with_mode(inputs.mode),
    };
    let trace = tester.run(path)?;
    let carried = trace.carried(market.rate_factor());
    let rows = (0..=n)
        .map(|k| BacktestRow {
            step: k.to_string(),
            state: market.format_state(&path.prefix(k)),
            setup_cost: trace.setup_costs.get(k).copied(),
            cmax: Some(trace.cmax[k]),
            delta: k.checked_sub(1).map(|t| trace.local[t]),
            delta_carried: k.checked_sub(1).map(|t| carried[t]),
        })
        .collect();
    Ok(Report::Backtest(BacktestReport { path: market.format_state(path), rows, accumulated: trace.accumulated }))
}

/// Compares the closed form against the vertex-enumeration oracle. With no
/// node selected it checks the root and every step-1 node, plus the
/// full-horizon linear program when that is small enough.
pub fn verify(inputs: &Inputs, step: Option<usize>, state: Option<&str>, tol: f64) -> Result<Report, Failure> {
    let market = &inputs.market;
    let m = market.num_assets();
    let nodes: Vec<WorldState> = match (step, state) {
        (_, Some(_)) => vec![resolve_node(market, step, state)?],
        (Some(k), None) => nodes_at(market, k)?,
        (None, None) => {
            let mut v = vec![WorldState::root()];
            if market.num_steps() > 0 {
                v.extend(nodes_at(market, 1)?);
            }
            v
        }
    };
    let mut rows = Vec::with_capacity(nodes.len() + 1);
    for omega in &nodes {
        let closed_form = inputs.cmax(omega)?;
        let oracle = oracle_cmax(market, &inputs.payoff, omega)?;
        rows.push(VerifyRow {
            method: "induction",
            k: omega.step(),
            state: market.format_state(omega),
            closed_form,
            oracle,
            abs_dev: (closed_form - oracle).abs(),
        });
    }
    if step.is_none() && state.is_none() {
        match oracle_full_horizon_max(market, &inputs.payoff) {
            Ok(oracle) => {
                let closed_form = inputs.cmax(&WorldState::root())?;
                rows.push(VerifyRow {
                    method: "full_horizon",
                    k: 0,
                    state: String::new(),
                    closed_form,
                    oracle,
                    abs_dev: (closed_form - oracle).abs(),
                });
            }
            Err(CoreError::ScaleExceeded(msg)) => info!("skipping full-horizon check: {msg}"),
            Err(e) => return Err(e.into()),
        }
    }
    let max_abs_dev = rows.iter().map(|r| r.abs_dev).fold(0.0, f64::max);
    info!("verified {} nodes on {m} assets, max |dev| = {max_abs_dev:e}", rows.len());
    Ok(Report::Verify(VerifyReport { tol, max_abs_dev, passed: max_abs_dev <= tol, rows }))
}

fn nodes_at(market: &OrderedMarket, k: usize) -> Result<Vec<WorldState>, Failure> {
    let m = market.num_assets();
    if k > market.num_steps() {
        return Err(anyhow!("step {k} is past the horizon {}", market.num_steps()).into());
    }
    let count = (m * k < usize::BITS as usize).then(|| 1usize << (m * k)).filter(|&c| c <= MAX_VERIFY_NODES);
    let Some(count) = count else {
        return Err(anyhow!("step {k} has more than {MAX_VERIFY_NODES} nodes; pass --state to pick one").into());
    };
    let per_move = 1usize << m;
    (0..count)
        .map(|mut code| {
            let mut moves = vec![MoveVector::from_mask(0, m); k];
            for slot in moves.iter_mut().rev() {
                *slot = market.move_to_internal(&MoveVector::from_mask(code % per_move, m))?;
                code /= per_move;
            }
            Ok(WorldState::from_moves(moves))
        })
        .collect()
}

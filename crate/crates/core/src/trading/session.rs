use super::fixed_time::fixed_time_trade;
use super::{ScenarioConfig, SessionResult, TradeEvent};
use crate::error::{invalid, Result};
use crate::pricing::{inventory_skew, Quote};
use crate::trading::crossing::crossing_side;

/// Plays one trading session over precomputed information-based mid paths.
///
/// Crossing scenarios re-quote after every trade: A quotes around
/// `S_A (phi psi_A)^(-Q)` and B around `S_B (phi psi_B)^(Q)`, where `Q` is
/// A's inventory. Trade `k` executes on A's side of the book, so A pays its
/// bid when buying and receives its offer when selling, and contributes
/// `eps_k (X - exec_k / P(tau_k, T))` to A's profit at maturity.
///
/// A trade is followed by a fresh search from the next grid instant.
pub fn run_session(
    config: &ScenarioConfig,
    prices_a: &[f64],
    prices_b: &[f64],
    x: f64,
) -> Result<SessionResult> {
    config.validate()?;
    let len = config.grid.n_steps() + 1;
    if prices_a.len() != len || prices_b.len() != len {
        return invalid(format!(
            "price paths have {} and {} points but the grid has {len}",
            prices_a.len(),
            prices_b.len()
        ));
    }
    Ok(play(config, prices_a, prices_b, x))
}

/// [`run_session`] for an already validated config and aligned paths.
pub(crate) fn play(
    config: &ScenarioConfig,
    prices_a: &[f64],
    prices_b: &[f64],
    x: f64,
) -> SessionResult {
    let times = config.grid.times();
    let maturity = config.maturity();
    let curve = &config.curve;

    if config.is_fixed_time() {
        let i = config.fixed_trade_index();
        return fixed_time_trade(
            prices_a[i],
            prices_b[i],
            config.phi,
            x,
            i,
            times[i],
            maturity,
            curve,
        );
    }

    let n = config.grid.n_steps();
    let end = if config.trade_at_last_interior {
        n
    } else {
        n - 1
    };
    let phi = config.phi;

    let mut result = SessionResult::empty(x);
    let mut q: i64 = 0;
    let mut start = 0;
    let mut h = 0.0;
    for k in 1..=config.max_trades {
        let skew_a = inventory_skew(phi, config.psi_a, q);
        let skew_b = inventory_skew(phi, config.psi_b, -q);
        let hit = (start..end).find_map(|i| {
            let qa = Quote::skewed(prices_a[i], phi, skew_a);
            let qb = Quote::skewed(prices_b[i], phi, skew_b);
            crossing_side(&qa, &qb).map(|(side, tie)| (i, side, tie, qa))
        });
        let Some((i, side, tie, qa)) = hit else {
            break;
        };
        let eps = side.epsilon();
        let exec_price = if eps > 0 { qa.bid } else { qa.offer };
        h += eps as f64 * (x - exec_price / curve.factor(times[i], maturity));
        q += eps;
        result.tie_broken |= tie;
        result.trades.push(TradeEvent {
            k,
            time_index: i,
            time: times[i],
            side,
            exec_price,
            inventory_after: q,
        });
        start = i + 1;
    }
    result.no_trade = result.trades.is_empty();
    result.h_a_t = h;
    result.h_a_0 = curve.factor(0.0, maturity) * h;
    result
}

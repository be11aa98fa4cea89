//! Trading at a single predetermined time (scenarios 1 and 2).

use super::{SessionResult, Side, TradeEvent};
use crate::error::{invalid, Result};
use crate::normal::normal_cdf;
use crate::pricing::{DiscountCurve, Quote};
use crate::trading::crossing::crossing_side;

/// One fixed-time trading opportunity. If the books cross, the trade is
/// done at the geometric mean of the two mids.
pub fn run_scenario1(
    s_a: f64,
    s_b: f64,
    phi: f64,
    x: f64,
    t: f64,
    maturity: f64,
    curve: &DiscountCurve,
) -> Result<SessionResult> {
    if !(phi > 1.0) {
        return invalid(format!("spread factor phi must exceed 1, got {phi}"));
    }
    if !(s_a >= 0.0 && s_b >= 0.0) {
        return invalid(format!("mids must be nonnegative, got {s_a} and {s_b}"));
    }
    if !(t >= 0.0 && t < maturity) {
        return invalid(format!("trade time must lie in [0, T), got {t}"));
    }
    Ok(fixed_time_trade(s_a, s_b, phi, x, 0, t, maturity, curve))
}

#[allow(clippy::too_many_arguments)]
pub(crate) fn fixed_time_trade(
    s_a: f64,
    s_b: f64,
    phi: f64,
    x: f64,
    index: usize,
    t: f64,
    maturity: f64,
    curve: &DiscountCurve,
) -> SessionResult {
    let qa = Quote::skewed(s_a, phi, 1.0);
    let qb = Quote::skewed(s_b, phi, 1.0);
    let Some((side, tie)) = crossing_side(&qa, &qb) else {
        return SessionResult::empty(x);
    };
    let price = (s_a * s_b).sqrt();
    let eps = side.epsilon();
    let h_a_t = eps as f64 * (x - price / curve.factor(t, maturity));
    SessionResult {
        realized_x: x,
        trades: vec![TradeEvent {
            k: 1,
            time_index: index,
            time: t,
            side,
            exec_price: price,
            inventory_after: eps,
        }],
        h_a_t,
        h_a_0: curve.factor(0.0, maturity) * h_a_t,
        no_trade: false,
        tie_broken: tie && side == Side::Buy,
    }
}

fn check_bound_args(phi: f64, p: f64, sigma: f64, t: f64, maturity: f64) -> Result<()> {
    if !(phi > 1.0) {
        return invalid(format!("spread factor phi must exceed 1, got {phi}"));
    }
    if !(p > 0.0 && p < 1.0) {
        return invalid(format!("p must lie in (0, 1), got {p}"));
    }
    if !(sigma > 0.0) {
        return invalid(format!("sigma must be positive, got {sigma}"));
    }
    if !(t > 0.0 && t < maturity) {
        return invalid(format!("t must lie in (0, T), got t={t}, T={maturity}"));
    }
    Ok(())
}

/// Levels of the information process that trigger a trade when the
/// informed trader faces a prior-only counterparty on the binary bond.
///
/// A sells when `xi <= sell` and buys when `xi >= buy`. The buy level exists
/// only when `phi^2 p < 1`; otherwise A can only ever sell.
pub fn scenario2_thresholds(
    phi: f64,
    p: f64,
    sigma: f64,
    t: f64,
    maturity: f64,
) -> Result<(f64, Option<f64>)> {
    check_bound_args(phi, p, sigma, t, maturity)?;
    let phi2 = phi * phi;
    let scale = (maturity - t) / (sigma * maturity);
    let drift = 0.5 * sigma * t;
    let sell = scale * ((1.0 - p) / (phi2 - p)).ln() + drift;
    let buy = (phi2 * p < 1.0).then(|| scale * (phi2 * (1.0 - p) / (1.0 - phi2 * p)).ln() + drift);
    Ok((sell, buy))
}

/// Closed-form lower bound on the informed trader's value when trading the
/// binary bond once at time `t` against a prior-only trader.
pub fn scenario2_lower_bound(
    phi: f64,
    p: f64,
    sigma: f64,
    t: f64,
    maturity: f64,
    p_0t_maturity: f64,
) -> Result<f64> {
    check_bound_args(phi, p, sigma, t, maturity)?;
    let phi2 = phi * phi;
    let a = ((maturity - t) / (t * maturity)).sqrt() / sigma;
    let b = 0.5 * sigma * (maturity * t / (maturity - t)).sqrt();
    let sell = p * p_0t_maturity * (phi - 1.0) * normal_cdf(a * ((1.0 - p) / (phi2 - p)).ln() - b);
    let buy = if phi2 * p < 1.0 {
        p * p_0t_maturity
            * (1.0 - 1.0 / phi)
            * normal_cdf(a * ((1.0 - phi2 * p) / (phi2 * (1.0 - p))).ln() + b)
    } else {
        0.0
    };
    Ok(sell + buy)
}

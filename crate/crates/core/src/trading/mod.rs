//! The game master: spread-crossing detection, execution, inventory and
//! profit bookkeeping for the six trading scenarios.
//!
//! | scenario | trade rule | trades | inventory aversion |
//! |---|---|---|---|
//! | 1 | fixed time, geometric-mean price | 1 | no |
//! | 2 | as 1, binary bond vs. prior-only trader | 1 | no |
//! | 3 | first spread crossing | 1 | no |
//! | 4 | successive crossings, re-equalized mids | 2 | no |
//! | 5 | as 4 | 2 | yes |
//! | 6 | as 4 | `max_trades` | yes |

mod crossing;
mod fixed_time;
mod sequences;
mod session;

use std::sync::Arc;

use serde::{Deserialize, Serialize};

pub use crossing::{crossing_side, detect_first_crossing, mid_ratio_exit, Crossing};
pub use fixed_time::{run_scenario1, scenario2_lower_bound, scenario2_thresholds};
pub use sequences::{
    enumerate_trade_sequences, scan_trade_sequences, sequence_code, trade_sequence_margin,
    MAX_SCAN_LENGTH,
};
pub(crate) use session::play;
pub use session::run_session;

use crate::error::{invalid, Result};
use crate::pricing::{check_spread, DiscountCurve, TraderSpec};
use crate::stochastic::{PayoffMeasure, TimeGrid, MAX_SOURCES_PER_SESSION};

/// Default trade cap for scenario 6.
pub const DEFAULT_MAX_TRADES: usize = 10;

/// Which way trader A traded.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Side {
    Buy,
    Sell,
}

impl Side {
    /// +1 when A buys, -1 when A sells.
    pub fn epsilon(self) -> i64 {
        match self {
            Side::Buy => 1,
            Side::Sell => -1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TradeEvent {
    /// 1-based trade ordinal within the session.
    pub k: usize,
    pub time_index: usize,
    pub time: f64,
    pub side: Side,
    pub exec_price: f64,
    /// A's inventory after this trade.
    pub inventory_after: i64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionResult {
    pub realized_x: f64,
    pub trades: Vec<TradeEvent>,
    /// A's profit at maturity, with every payment future-valued to maturity.
    pub h_a_t: f64,
    /// `P(0, T) * h_a_t`.
    pub h_a_0: f64,
    pub no_trade: bool,
    /// Set when both crossing conditions held at one instant and the buy
    /// side was taken.
    pub tie_broken: bool,
}

impl SessionResult {
    pub(crate) fn empty(realized_x: f64) -> Self {
        Self {
            realized_x,
            trades: Vec::new(),
            h_a_t: 0.0,
            h_a_0: 0.0,
            no_trade: true,
            tie_broken: false,
        }
    }

    /// B's profit; the game is zero-sum.
    pub fn h_b_t(&self) -> f64 {
        -self.h_a_t
    }

    pub fn max_abs_inventory(&self) -> i64 {
        self.trades
            .iter()
            .map(|t| t.inventory_after.abs())
            .max()
            .unwrap_or(0)
    }

    /// Discounted profit of each trade: `P(0,T) * eps_k (X - exec_k / P(tau_k, T))`.
    pub fn per_trade_values(&self, curve: &DiscountCurve, maturity: f64) -> Vec<f64> {
        let p0 = curve.factor(0.0, maturity);
        self.trades
            .iter()
            .map(|t| {
                let fv = 1.0 / curve.factor(t.time, maturity);
                p0 * t.side.epsilon() as f64 * (self.realized_x - t.exec_price * fv)
            })
            .collect()
    }
}

/// Full description of one trading setup.
#[derive(Debug, Clone)]
pub struct ScenarioConfig {
    pub scenario: u8,
    pub phi: f64,
    pub psi_a: f64,
    pub psi_b: f64,
    pub max_trades: usize,
    /// Trade time for scenarios 1 and 2; defaults to `T / 2`.
    pub fixed_trade_time: Option<f64>,
    pub measure: PayoffMeasure,
    /// Flow rates of the sources A observes. B's list must be a strict
    /// prefix of this one.
    pub sigma_sources_a: Vec<f64>,
    pub sigma_sources_b: Vec<f64>,
    pub curve: DiscountCurve,
    pub grid: Arc<TimeGrid>,
    /// Whether a crossing at the last instant before maturity executes.
    pub trade_at_last_interior: bool,
}

impl ScenarioConfig {
    /// Config with no inventory aversion, zero rates and the scenario's
    /// default trade cap.
    pub fn new(
        scenario: u8,
        phi: f64,
        measure: PayoffMeasure,
        sigma_sources_a: Vec<f64>,
        sigma_sources_b: Vec<f64>,
        grid: Arc<TimeGrid>,
    ) -> Result<Self> {
        let max_trades = match scenario {
            1..=3 => 1,
            4 | 5 => 2,
            _ => DEFAULT_MAX_TRADES,
        };
        let cfg = Self {
            scenario,
            phi,
            psi_a: 1.0,
            psi_b: 1.0,
            max_trades,
            fixed_trade_time: None,
            measure,
            sigma_sources_a,
            sigma_sources_b,
            curve: DiscountCurve::default(),
            grid,
            trade_at_last_interior: true,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_aversion(mut self, psi_a: f64, psi_b: f64) -> Result<Self> {
        self.psi_a = psi_a;
        self.psi_b = psi_b;
        self.validate()?;
        Ok(self)
    }

    pub fn with_max_trades(mut self, max_trades: usize) -> Result<Self> {
        self.max_trades = max_trades;
        self.validate()?;
        Ok(self)
    }

    pub fn with_fixed_time(mut self, t: f64) -> Result<Self> {
        self.fixed_trade_time = Some(t);
        self.validate()?;
        Ok(self)
    }

    pub fn with_curve(mut self, curve: DiscountCurve) -> Result<Self> {
        self.curve = curve;
        self.validate()?;
        Ok(self)
    }

    pub fn with_phi(mut self, phi: f64) -> Result<Self> {
        self.phi = phi;
        self.validate()?;
        Ok(self)
    }

    pub fn maturity(&self) -> f64 {
        self.grid.maturity()
    }

    pub fn trader_a(&self) -> TraderSpec {
        TraderSpec {
            label: "A".into(),
            sigmas: self.sigma_sources_a.clone(),
            psi: self.psi_a,
        }
    }

    pub fn trader_b(&self) -> TraderSpec {
        TraderSpec {
            label: "B".into(),
            sigmas: self.sigma_sources_b.clone(),
            psi: self.psi_b,
        }
    }

    pub fn is_fixed_time(&self) -> bool {
        self.scenario <= 2
    }

    /// Grid index of the fixed trade in scenarios 1 and 2, kept strictly
    /// inside the trading interval.
    pub fn fixed_trade_index(&self) -> usize {
        let t = self.fixed_trade_time.unwrap_or(0.5 * self.maturity());
        self.grid.nearest_index(t).clamp(1, self.grid.n_steps() - 1)
    }

    /// True when `other` produces the same price paths from the same random
    /// draws, so sessions of both can share one simulation.
    pub fn shares_paths_with(&self, other: &ScenarioConfig) -> bool {
        self.measure == other.measure
            && self.sigma_sources_a == other.sigma_sources_a
            && self.sigma_sources_b == other.sigma_sources_b
            && self.curve == other.curve
            && *self.grid == *other.grid
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=6).contains(&self.scenario) {
            return invalid(format!("scenario must be 1..6, got {}", self.scenario));
        }
        check_spread(self.phi, self.psi_a).map_err(|e| rename(e, "psi_a"))?;
        check_spread(self.phi, self.psi_b).map_err(|e| rename(e, "psi_b"))?;
        if self.scenario <= 4 && (self.psi_a != 1.0 || self.psi_b != 1.0) {
            return invalid(format!(
                "scenario {} has no inventory aversion; psi_a and psi_b must be 1",
                self.scenario
            ));
        }
        let expected = match self.scenario {
            1..=3 => Some(1),
            4 | 5 => Some(2),
            _ => None,
        };
        match expected {
            Some(n) if self.max_trades != n => {
                return invalid(format!(
                    "scenario {} allows exactly {n} trade(s), got max_trades = {}",
                    self.scenario, self.max_trades
                ))
            }
            None if self.max_trades == 0 => return invalid("max_trades must be at least 1"),
            _ => {}
        }
        if let Some(t) = self.fixed_trade_time {
            if !self.is_fixed_time() {
                return invalid("fixed_time applies only to scenarios 1 and 2");
            }
            if !(t > 0.0 && t < self.maturity()) {
                return invalid(format!("fixed_time must lie in (0, T), got {t}"));
            }
        }
        for &s in self.sigma_sources_a.iter().chain(&self.sigma_sources_b) {
            if !(s >= 0.0) || !s.is_finite() {
                return invalid(format!(
                    "flow rates must be finite and nonnegative, got {s}"
                ));
            }
        }
        if self.sigma_sources_a.len() >= MAX_SOURCES_PER_SESSION {
            return invalid("too many information sources");
        }
        if !self.trader_b().is_less_informed_than(&self.trader_a()) {
            return invalid("B's information sources must be a strict prefix of A's");
        }
        if self.scenario == 2 {
            if self.measure.binary_probability().is_none() {
                return invalid("scenario 2 needs the binary bond payoff {1: p, 0: 1 - p}");
            }
            if !self.sigma_sources_b.is_empty() {
                return invalid("scenario 2 needs a prior-only trader B (no sources)");
            }
        }
        Ok(())
    }
}

fn rename(e: crate::Error, key: &str) -> crate::Error {
    match e {
        crate::Error::InvalidArgument(m) => crate::Error::InvalidArgument(m.replace("psi", key)),
        other => other,
    }
}

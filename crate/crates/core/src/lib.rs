//! Information-based pricing of a single-dividend contract and simulation of
//! trading between two counterparties whose information is nested.
//!
//! The crate is organised bottom-up:
//!
//! * [`stochastic`]: time grids, seeded random streams, Brownian bridges,
//!   payoff measures and information processes.
//! * [`pricing`]: conditional-expectation prices, discounting and quotes.
//! * [`trading`]: the game master that detects spread crossings, executes
//!   trades and keeps the books for each trading scenario.
//! * [`monte_carlo`]: deterministic batch simulation, sweeps and statistics.

// `!(x > a)` guards reject NaN along with out-of-range values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod monte_carlo;
pub mod normal;
pub mod pricing;
pub mod stochastic;
pub mod trading;

pub use error::{Error, Result};
pub use monte_carlo::{
    estimate_scenario2_bound_mc, nested_sources, paired_median_shift, run_batch,
    run_batch_variants, run_batch_with, simulate_session_paths, sweep, sweep_with,
    trade_time_histogram, BatchOptions, BatchStats, Histogram, MedianShift, Moments, SessionPaths,
    SweepResult,
};
pub use pricing::{
    binary_bond_mid, discount_factor, information_price, inventory_skew, price_path,
    prior_price_path, quote_from_mid, DiscountCurve, Quote, TraderSpec,
};
pub use stochastic::{
    effective_flow_rate, effective_information, make_information_path, make_time_grid,
    sample_bridge_path, sample_payoff, BridgePath, InformationPath, PayoffMeasure, SeededRng,
    TimeGrid,
};
pub use trading::{
    crossing_side, detect_first_crossing, enumerate_trade_sequences, mid_ratio_exit, run_scenario1,
    run_session, scan_trade_sequences, scenario2_lower_bound, scenario2_thresholds, sequence_code,
    trade_sequence_margin, Crossing, ScenarioConfig, SessionResult, Side, TradeEvent,
};

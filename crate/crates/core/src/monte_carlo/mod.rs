//! Deterministic batch simulation of trading sessions.
//!
//! Session `s` draws everything from its own streams (see
//! [`SeededRng::for_session`]), sessions run in parallel in fixed-size
//! chunks, and each chunk is reduced in session order. Results are therefore
//! bit-identical for any number of worker threads.
//!
//! Configs that share price paths (same measure, sources, curve and grid)
//! can be run together as variants: every variant then trades on exactly the
//! same simulated prices.

mod stats;

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use stats::{median, paired_median_shift, BatchStats, Histogram, MedianShift, Moments};

use crate::error::{invalid, Error, Result};
use crate::pricing::{
    binary_bond_mid, fill_price_path, prior_price_path, DiscountCurve, PosteriorKernel,
};
use crate::stochastic::{fill_bridge, sample_payoff, SeededRng, TimeGrid};
use crate::trading::{play, ScenarioConfig, SessionResult};
use stats::StatsAccumulator;

/// Sessions simulated between two sequential reductions.
const CHUNK_SESSIONS: u64 = 1024;
/// Default number of trade-time histogram bins in [`BatchStats`].
pub const DEFAULT_HISTOGRAM_BINS: usize = 50;

/// Execution settings that never change results.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BatchOptions {
    /// Worker threads; `None` uses the global pool.
    pub workers: Option<usize>,
    pub histogram_bins: usize,
}

impl Default for BatchOptions {
    fn default() -> Self {
        Self {
            workers: None,
            histogram_bins: DEFAULT_HISTOGRAM_BINS,
        }
    }
}

/// Runs `f` on a pool with the requested number of threads.
fn with_workers<T: Send>(workers: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match workers {
        None => Ok(f()),
        Some(0) => invalid("worker count must be at least 1"),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::InvalidArgument(format!("cannot start {n} workers: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

/// The realized payoff and both traders' information-based mids for one
/// session.
#[derive(Debug, Clone, PartialEq)]
pub struct SessionPaths {
    pub x: f64,
    pub prices_a: Vec<f64>,
    pub prices_b: Vec<f64>,
}

/// Everything needed to turn a session's random streams into price paths.
struct PathPlan {
    grid: Arc<TimeGrid>,
    measure: crate::stochastic::PayoffMeasure,
    curve: DiscountCurve,
    sigmas: Vec<f64>,
    n_b: usize,
    kernel: PosteriorKernel,
    prior: Vec<f64>,
}

#[derive(Default)]
struct Scratch {
    bridge: Vec<f64>,
    xi_a: Vec<f64>,
    xi_b: Vec<f64>,
    single: Vec<f64>,
    prices_a: Vec<f64>,
    prices_b: Vec<f64>,
}

impl PathPlan {
    fn new(config: &ScenarioConfig) -> Self {
        Self {
            grid: Arc::clone(&config.grid),
            measure: config.measure.clone(),
            curve: config.curve,
            sigmas: config.sigma_sources_a.clone(),
            n_b: config.sigma_sources_b.len(),
            kernel: PosteriorKernel::from_measure(&config.measure),
            prior: prior_price_path(config.grid.times(), &config.measure, &config.curve),
        }
    }

    /// Fills `scratch.prices_a` and `scratch.prices_b` for one session and
    /// returns the realized payoff.
    ///
    /// The effective information of a trader is accumulated exactly as
    /// [`crate::stochastic::effective_information`] does, so prices agree bit
    /// for bit with [`crate::pricing::TraderSpec::price_path`].
    fn fill(&self, master_seed: u64, session: u64, s: &mut Scratch) -> Result<f64> {
        let len = self.grid.n_steps() + 1;
        let times = self.grid.times();
        let x = sample_payoff(
            &self.measure,
            &mut SeededRng::for_session(master_seed, session, 0),
        );
        for buf in [
            &mut s.bridge,
            &mut s.xi_a,
            &mut s.xi_b,
            &mut s.single,
            &mut s.prices_a,
            &mut s.prices_b,
        ] {
            buf.clear();
            buf.resize(len, 0.0);
        }
        for (i, &sigma) in self.sigmas.iter().enumerate() {
            if sigma == 0.0 {
                // contributes nothing to either trader
                continue;
            }
            let mut rng = SeededRng::for_session(master_seed, session, i + 1);
            fill_bridge(&self.grid, &mut rng, &mut s.bridge);
            for (j, (&t, &b)) in times.iter().zip(&s.bridge).enumerate().take(len) {
                let xi = sigma * t * x + b;
                if i == 0 {
                    s.single[j] = xi;
                }
                s.xi_a[j] += sigma * xi;
                if i < self.n_b {
                    s.xi_b[j] += sigma * xi;
                }
            }
        }
        self.finish_trader(&self.sigmas, &mut s.xi_a, &s.single, &mut s.prices_a)?;
        self.finish_trader(
            &self.sigmas[..self.n_b],
            &mut s.xi_b,
            &s.single,
            &mut s.prices_b,
        )?;
        Ok(x)
    }

    fn finish_trader(
        &self,
        sigmas: &[f64],
        xi: &mut [f64],
        single: &[f64],
        out: &mut [f64],
    ) -> Result<()> {
        let rate = crate::stochastic::effective_flow_rate(sigmas);
        if rate == 0.0 {
            out.copy_from_slice(&self.prior);
            return Ok(());
        }
        let xi: &[f64] = if sigmas.len() == 1 {
            single
        } else {
            xi.iter_mut().for_each(|v| *v /= rate);
            xi
        };
        fill_price_path(&self.kernel, self.grid.times(), xi, rate, &self.curve, out)
    }
}

/// Regenerates the payoff and price paths of one session of a batch.
pub fn simulate_session_paths(
    config: &ScenarioConfig,
    master_seed: u64,
    session: u64,
) -> Result<SessionPaths> {
    config.validate()?;
    let plan = PathPlan::new(config);
    let mut s = Scratch::default();
    let x = plan.fill(master_seed, session, &mut s)?;
    Ok(SessionPaths {
        x,
        prices_a: s.prices_a,
        prices_b: s.prices_b,
    })
}

/// Runs a batch of sessions for one config.
pub fn run_batch(config: &ScenarioConfig, n_sessions: u64, master_seed: u64) -> Result<BatchStats> {
    let mut out = run_batch_variants(std::slice::from_ref(config), n_sessions, master_seed)?;
    Ok(out.remove(0))
}

/// Runs several configs on the same simulated sessions. All configs must
/// share price paths (see [`ScenarioConfig::shares_paths_with`]).
pub fn run_batch_variants(
    configs: &[ScenarioConfig],
    n_sessions: u64,
    master_seed: u64,
) -> Result<Vec<BatchStats>> {
    run_batch_with(
        configs,
        n_sessions,
        master_seed,
        &BatchOptions::default(),
        |_, _, _| {},
    )
}

/// [`run_batch_variants`] with explicit execution options and a visitor that
/// sees every session result, in session order, as `(variant, session, result)`.
pub fn run_batch_with(
    configs: &[ScenarioConfig],
    n_sessions: u64,
    master_seed: u64,
    options: &BatchOptions,
    mut visit: impl FnMut(usize, u64, &SessionResult) + Send,
) -> Result<Vec<BatchStats>> {
    let Some(first) = configs.first() else {
        return invalid("at least one config is required");
    };
    if n_sessions == 0 {
        return invalid("n_sessions must be at least 1");
    }
    for c in configs {
        c.validate()?;
        if !first.shares_paths_with(c) {
            return invalid("variants must share measure, sources, curve and grid");
        }
    }
    let mut accs = configs
        .iter()
        .map(|c| StatsAccumulator::new(c.maturity(), c.curve, options.histogram_bins))
        .collect::<Result<Vec<_>>>()?;
    let plan = PathPlan::new(first);

    with_workers(options.workers, || -> Result<()> {
        let mut start = 0;
        while start < n_sessions {
            let end = (start + CHUNK_SESSIONS).min(n_sessions);
            let chunk: Vec<Vec<SessionResult>> = (start..end)
                .into_par_iter()
                .map_init(Scratch::default, |scratch, session| {
                    let x = plan.fill(master_seed, session, scratch)?;
                    Ok(configs
                        .iter()
                        .map(|c| play(c, &scratch.prices_a, &scratch.prices_b, x))
                        .collect())
                })
                .collect::<Result<_>>()?;
            for (offset, results) in chunk.iter().enumerate() {
                for (v, r) in results.iter().enumerate() {
                    accs[v].push(r);
                    visit(v, start + offset as u64, r);
                }
            }
            start = end;
        }
        Ok(())
    })??;
    Ok(accs.into_iter().map(StatsAccumulator::finish).collect())
}

/// Source lists for a tier-1 trader B with flow rate `sigma_b` and a tier-2
/// trader A with total flow rate `sigma_a`: A's extra source carries
/// `sqrt(sigma_a^2 - sigma_b^2)`, which is zero when both traders are
/// equally informed.
pub fn nested_sources(sigma_b: f64, sigma_a: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    if !(sigma_b >= 0.0 && sigma_a >= sigma_b) || !sigma_a.is_finite() {
        return invalid(format!(
            "need sigma_a >= sigma_b >= 0, got sigma_a={sigma_a}, sigma_b={sigma_b}"
        ));
    }
    let extra = (sigma_a * sigma_a - sigma_b * sigma_b).sqrt();
    Ok((vec![sigma_b, extra], vec![sigma_b]))
}

/// Grid of batch summaries; `cells[i][j]` is for `phi_values[i]` and
/// `sigma_values[j]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub phi_values: Vec<f64>,
    pub sigma_values: Vec<f64>,
    pub cells: Vec<Vec<BatchStats>>,
}

/// Profitability over a grid of spread factors and B flow rates, with
/// `sigma_A = sigma_ratio * sigma_B`. The base config's sources are replaced
/// by [`nested_sources`]; everything else is kept.
///
/// Every cell uses the same session streams, so cells differ only through
/// their parameters.
pub fn sweep(
    base: &ScenarioConfig,
    phi_values: &[f64],
    sigma_b_values: &[f64],
    sigma_ratio: f64,
    n_sessions: u64,
    master_seed: u64,
) -> Result<SweepResult> {
    sweep_with(
        base,
        phi_values,
        sigma_b_values,
        sigma_ratio,
        n_sessions,
        master_seed,
        &BatchOptions::default(),
    )
}

pub fn sweep_with(
    base: &ScenarioConfig,
    phi_values: &[f64],
    sigma_b_values: &[f64],
    sigma_ratio: f64,
    n_sessions: u64,
    master_seed: u64,
    options: &BatchOptions,
) -> Result<SweepResult> {
    if phi_values.is_empty() || sigma_b_values.is_empty() {
        return invalid("sweep value lists must be nonempty");
    }
    if !(sigma_ratio > 1.0) || !sigma_ratio.is_finite() {
        return invalid(format!("sigma_ratio must exceed 1, got {sigma_ratio}"));
    }
    if base.scenario == 2 {
        return invalid("scenario 2 has a prior-only trader B and no sigma_b to sweep");
    }
    let mut by_sigma = Vec::with_capacity(sigma_b_values.len());
    for &sigma_b in sigma_b_values {
        let (a, b) = nested_sources(sigma_b, sigma_ratio * sigma_b)?;
        let variants = phi_values
            .iter()
            .map(|&phi| {
                let mut c = base.clone();
                c.sigma_sources_a = a.clone();
                c.sigma_sources_b = b.clone();
                c.with_phi(phi)
            })
            .collect::<Result<Vec<_>>>()?;
        by_sigma.push(run_batch_with(
            &variants,
            n_sessions,
            master_seed,
            options,
            |_, _, _| {},
        )?);
    }
    let cells = (0..phi_values.len())
        .map(|i| by_sigma.iter().map(|col| col[i].clone()).collect())
        .collect();
    Ok(SweepResult {
        phi_values: phi_values.to_vec(),
        sigma_values: sigma_b_values.to_vec(),
        cells,
    })
}

/// Histogram of every trade time over `[0, T]` across a batch.
pub fn trade_time_histogram(
    config: &ScenarioConfig,
    n_bins: usize,
    n_sessions: u64,
    master_seed: u64,
) -> Result<Histogram> {
    if n_bins < 2 {
        return invalid(format!("need at least 2 bins, got {n_bins}"));
    }
    let options = BatchOptions {
        histogram_bins: n_bins,
        ..BatchOptions::default()
    };
    let mut stats = run_batch_with(
        std::slice::from_ref(config),
        n_sessions,
        master_seed,
        &options,
        |_, _, _| {},
    )?;
    Ok(stats.remove(0).trade_time_histogram)
}

/// Draws per independent stream in the fixed-time bound estimator.
const BOUND_CHUNK: u64 = 16_384;
/// Fewest draws the fixed-time bound estimator accepts.
pub const MIN_BOUND_DRAWS: u64 = 10_000;

/// Monte Carlo value of the fixed-time lower bound for the binary bond
/// against a prior-only counterparty:
///
/// ```text
/// P(0,t) E[(phi - 1) S_t 1(A sells) + (1 - 1/phi) S_t 1(A buys)]
/// ```
///
/// with `X` drawn from the prior and then `xi_t = sigma t X + beta_t`, where
/// `beta_t ~ N(0, t (T - t) / T)`. Returns the estimate and its standard error.
#[allow(clippy::too_many_arguments)]
pub fn estimate_scenario2_bound_mc(
    phi: f64,
    p: f64,
    sigma: f64,
    t: f64,
    maturity: f64,
    curve: &DiscountCurve,
    n_draws: u64,
    master_seed: u64,
) -> Result<(f64, f64)> {
    if !(phi > 1.0) || !phi.is_finite() {
        return invalid(format!("spread factor phi must exceed 1, got {phi}"));
    }
    if !(p > 0.0 && p < 1.0) {
        return invalid(format!("p must lie in (0, 1), got {p}"));
    }
    if !(sigma >= 0.0) || !sigma.is_finite() {
        return invalid(format!("sigma must be nonnegative, got {sigma}"));
    }
    if !(t > 0.0 && t < maturity) {
        return invalid(format!("t must lie in (0, T), got t={t}, T={maturity}"));
    }
    if n_draws < MIN_BOUND_DRAWS {
        return invalid(format!(
            "need at least {MIN_BOUND_DRAWS} draws, got {n_draws}"
        ));
    }
    let p_tt = curve.factor(t, maturity);
    let p_0t = curve.factor(0.0, t);
    let s_b = p_tt * p;
    let sd = (t * (maturity - t) / maturity).sqrt();
    let n_chunks = n_draws.div_ceil(BOUND_CHUNK);
    let parts: Vec<Moments> = (0..n_chunks)
        .into_par_iter()
        .map(|c| -> Result<Moments> {
            let mut rng = SeededRng::new(master_seed, c);
            let mut m = Moments::default();
            let count = BOUND_CHUNK.min(n_draws - c * BOUND_CHUNK);
            for _ in 0..count {
                let x = if rng.uniform() < p { 1.0 } else { 0.0 };
                let xi = sigma * t * x + sd * rng.standard_normal();
                let s_a = binary_bond_mid(xi, t, sigma, maturity, p, curve)?;
                let mut v = 0.0;
                if phi * s_a <= s_b / phi {
                    v += (phi - 1.0) * s_a;
                }
                if s_a / phi >= phi * s_b {
                    v += (1.0 - 1.0 / phi) * s_a;
                }
                m.push(p_0t * v);
            }
            Ok(m)
        })
        .collect::<Result<_>>()?;
    let mut total = Moments::default();
    parts.iter().for_each(|m| total.merge(m));
    Ok((total.mean(), total.std_error()))
}

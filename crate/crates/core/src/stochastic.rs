//! Time grids, seeded random streams, Brownian bridges, payoff measures and
//! information processes.
//!
//! An information process carries a signal about the terminal payoff `x`
//! obscured by bridge noise that vanishes at both ends of the trading
//! interval:
//!
//! ```text
//! xi(t) = sigma * t * x + beta(t, T)
//! ```

use std::sync::Arc;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Uniform grid of `n_steps + 1` instants covering `[0, T]`.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeGrid {
    maturity: f64,
    n_steps: usize,
    times: Vec<f64>,
}

impl TimeGrid {
    pub fn new(maturity: f64, n_steps: usize) -> Result<Self> {
        if !(maturity > 0.0) || !maturity.is_finite() {
            return invalid(format!(
                "maturity must be positive and finite, got {maturity}"
            ));
        }
        if n_steps < 2 {
            return invalid(format!("n_steps must be at least 2, got {n_steps}"));
        }
        let dt = maturity / n_steps as f64;
        let mut times: Vec<f64> = (0..=n_steps).map(|i| i as f64 * dt).collect();
        times[n_steps] = maturity;
        Ok(Self {
            maturity,
            n_steps,
            times,
        })
    }

    pub fn maturity(&self) -> f64 {
        self.maturity
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn dt(&self) -> f64 {
        self.maturity / self.n_steps as f64
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    /// Grid index closest to `t`, clamped to the grid.
    pub fn nearest_index(&self, t: f64) -> usize {
        let i = (t / self.dt()).round();
        if i <= 0.0 {
            0
        } else {
            (i as usize).min(self.n_steps)
        }
    }
}

pub fn make_time_grid(maturity: f64, n_steps: usize) -> Result<Arc<TimeGrid>> {
    TimeGrid::new(maturity, n_steps).map(Arc::new)
}

/// A single-owner random stream identified by `(master_seed, stream_index)`.
///
/// Backed by ChaCha8, which has 2^64 independent streams per key: the master
/// seed is the key and the stream index selects the stream. Equal pairs give
/// identical sequences on every platform.
#[derive(Debug, Clone)]
pub struct SeededRng {
    master_seed: u64,
    stream_index: u64,
    inner: ChaCha8Rng,
}

/// Bits of a session stream reserved for the source index.
pub const SOURCE_BITS: u32 = 8;
/// Largest number of random sources (payoff plus bridges) per session.
pub const MAX_SOURCES_PER_SESSION: usize = 1 << SOURCE_BITS;

impl SeededRng {
    pub fn new(master_seed: u64, stream_index: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(master_seed);
        inner.set_stream(stream_index);
        Self {
            master_seed,
            stream_index,
            inner,
        }
    }

    /// Stream for one source within one session.
    ///
    /// The stream index is `session << 8 | source`, so every
    /// `(session, source)` pair with `source < 256` maps to a distinct stream
    /// regardless of how sessions are scheduled. Source 0 draws the payoff and
    /// source `i + 1` drives the bridge of information source `i`.
    pub fn for_session(master_seed: u64, session: u64, source: usize) -> Self {
        assert!(
            source < MAX_SOURCES_PER_SESSION,
            "source index {source} out of range"
        );
        Self::new(master_seed, (session << SOURCE_BITS) | source as u64)
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    pub fn stream_index(&self) -> u64 {
        self.stream_index
    }

    pub fn standard_normal(&mut self) -> f64 {
        self.inner.sample(StandardNormal)
    }

    /// Uniform draw on `[0, 1)`.
    pub fn uniform(&mut self) -> f64 {
        self.inner.random::<f64>()
    }
}

impl RngCore for SeededRng {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        self.inner.fill_bytes(dst)
    }
}

/// Brownian bridge on a [`TimeGrid`], pinned to zero at both ends.
#[derive(Debug, Clone)]
pub struct BridgePath {
    grid: Arc<TimeGrid>,
    values: Vec<f64>,
}

impl BridgePath {
    /// Wraps precomputed values. Used by fixtures and tests.
    pub fn from_values(grid: Arc<TimeGrid>, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.n_steps() + 1 {
            return invalid(format!(
                "bridge has {} values but the grid has {} instants",
                values.len(),
                grid.n_steps() + 1
            ));
        }
        if values[0] != 0.0 || values[grid.n_steps()] != 0.0 {
            return invalid("bridge must be pinned to zero at both ends");
        }
        Ok(Self { grid, values })
    }

    pub fn zero(grid: Arc<TimeGrid>) -> Self {
        let values = vec![0.0; grid.n_steps() + 1];
        Self { grid, values }
    }

    pub fn grid(&self) -> &Arc<TimeGrid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// Samples a bridge by the exact forward conditional recursion
///
/// ```text
/// beta(t + dt) | beta(t) ~ N(beta(t) (T - t - dt) / (T - t), dt (T - t - dt) / (T - t))
/// ```
///
/// The last step has zero variance and zero mean, so the path lands exactly
/// on zero at maturity.
pub fn sample_bridge_path(grid: &Arc<TimeGrid>, rng: &mut SeededRng) -> BridgePath {
    let mut values = vec![0.0; grid.n_steps() + 1];
    fill_bridge(grid, rng, &mut values);
    BridgePath {
        grid: Arc::clone(grid),
        values,
    }
}

/// Writes a freshly sampled bridge into `out`, which must have one slot per
/// grid instant.
pub(crate) fn fill_bridge(grid: &TimeGrid, rng: &mut SeededRng, out: &mut [f64]) {
    let n = grid.n_steps();
    let maturity = grid.maturity();
    let times = grid.times();
    out[0] = 0.0;
    for i in 0..n - 1 {
        let remaining = maturity - times[i];
        let step = times[i + 1] - times[i];
        let keep = (remaining - step) / remaining;
        let sd = (step * keep).sqrt();
        out[i + 1] = out[i] * keep + sd * rng.standard_normal();
    }
    out[n] = 0.0;
}

/// Law of the terminal cash flow.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum PayoffMeasure {
    Discrete { atoms: Vec<(f64, f64)> },
    Gridded { nodes: Vec<f64>, weights: Vec<f64> },
}

const MASS_TOLERANCE: f64 = 1e-12;

fn check_support(values: &[f64]) -> Result<()> {
    if values.is_empty() {
        return invalid("payoff measure needs at least one atom");
    }
    for &x in values {
        if !x.is_finite() || x < 0.0 {
            return invalid(format!(
                "payoff values must be finite and nonnegative, got {x}"
            ));
        }
    }
    Ok(())
}

fn check_mass(weights: &[f64]) -> Result<()> {
    for &w in weights {
        if !w.is_finite() || w < 0.0 {
            return invalid(format!("weights must be finite and nonnegative, got {w}"));
        }
    }
    let total: f64 = weights.iter().sum();
    if (total - 1.0).abs() > MASS_TOLERANCE {
        return invalid(format!("weights must sum to 1, got {total}"));
    }
    Ok(())
}

impl PayoffMeasure {
    pub fn discrete(atoms: Vec<(f64, f64)>) -> Result<Self> {
        let values: Vec<f64> = atoms.iter().map(|a| a.0).collect();
        let probs: Vec<f64> = atoms.iter().map(|a| a.1).collect();
        check_support(&values)?;
        if let Some(&p) = probs.iter().find(|&&p| !(p > 0.0 && p <= 1.0)) {
            return invalid(format!("atom probabilities must lie in (0, 1], got {p}"));
        }
        check_mass(&probs)?;
        Ok(Self::Discrete { atoms })
    }

    /// Defaultable discount bond paying 1 with probability `p` and 0 otherwise.
    pub fn binary(p: f64) -> Result<Self> {
        if !(p > 0.0 && p < 1.0) {
            return invalid(format!("p must lie in (0, 1), got {p}"));
        }
        Self::discrete(vec![(1.0, p), (0.0, 1.0 - p)])
    }

    pub fn point_mass(x: f64) -> Result<Self> {
        Self::discrete(vec![(x, 1.0)])
    }

    pub fn gridded(nodes: Vec<f64>, weights: Vec<f64>) -> Result<Self> {
        check_support(&nodes)?;
        if nodes.len() != weights.len() {
            return invalid(format!(
                "{} nodes but {} weights",
                nodes.len(),
                weights.len()
            ));
        }
        if nodes.windows(2).any(|w| !(w[1] > w[0])) {
            return invalid("grid nodes must be strictly increasing");
        }
        check_mass(&weights)?;
        Ok(Self::Gridded { nodes, weights })
    }

    /// Discretizes a density on `nodes` with trapezoid weights, normalized
    /// to unit mass.
    pub fn from_density(nodes: Vec<f64>, density: impl Fn(f64) -> f64) -> Result<Self> {
        check_support(&nodes)?;
        if nodes.len() < 2 {
            return invalid("a gridded density needs at least two nodes");
        }
        let f: Vec<f64> = nodes.iter().map(|&x| density(x)).collect();
        let mut weights = vec![0.0; nodes.len()];
        for i in 0..nodes.len() - 1 {
            let h = nodes[i + 1] - nodes[i];
            weights[i] += 0.5 * h * f[i];
            weights[i + 1] += 0.5 * h * f[i + 1];
        }
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) || !total.is_finite() {
            return invalid("density integrates to a nonpositive or non-finite mass");
        }
        weights.iter_mut().for_each(|w| *w /= total);
        Self::gridded(nodes, weights)
    }

    /// `(value, probability)` pairs, including zero-weight grid nodes.
    pub fn atoms(&self) -> Vec<(f64, f64)> {
        match self {
            Self::Discrete { atoms } => atoms.clone(),
            Self::Gridded { nodes, weights } => {
                nodes.iter().copied().zip(weights.iter().copied()).collect()
            }
        }
    }

    pub fn mean(&self) -> f64 {
        self.atoms().iter().map(|(x, w)| x * w).sum()
    }

    pub fn min_value(&self) -> f64 {
        self.atoms()
            .iter()
            .map(|a| a.0)
            .fold(f64::INFINITY, f64::min)
    }

    pub fn max_value(&self) -> f64 {
        self.atoms()
            .iter()
            .map(|a| a.0)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Success probability when the measure is the two-point law on {0, 1}.
    pub fn binary_probability(&self) -> Option<f64> {
        let atoms = self.atoms();
        let mut p_one = 0.0;
        for (x, w) in &atoms {
            if *x == 1.0 {
                p_one += w;
            } else if *x != 0.0 && *w > 0.0 {
                return None;
            }
        }
        (p_one > 0.0 && p_one < 1.0).then_some(p_one)
    }
}

/// Draws the terminal payoff by inverting the cumulative distribution.
pub fn sample_payoff(measure: &PayoffMeasure, rng: &mut SeededRng) -> f64 {
    let u = rng.uniform();
    let atoms = measure.atoms();
    let mut cumulative = 0.0;
    let mut last = atoms[0].0;
    for (x, w) in atoms {
        if w <= 0.0 {
            continue;
        }
        cumulative += w;
        last = x;
        if u < cumulative {
            return x;
        }
    }
    // u landed in the rounding gap above the final cumulative sum.
    last
}

/// Discretized trajectory of an information process.
#[derive(Debug, Clone)]
pub struct InformationPath {
    grid: Arc<TimeGrid>,
    flow_rate: f64,
    values: Vec<f64>,
}

impl InformationPath {
    pub fn from_values(grid: Arc<TimeGrid>, flow_rate: f64, values: Vec<f64>) -> Result<Self> {
        if !(flow_rate >= 0.0) {
            return invalid(format!("flow rate must be nonnegative, got {flow_rate}"));
        }
        if values.len() != grid.n_steps() + 1 {
            return invalid("information path length does not match its grid");
        }
        Ok(Self {
            grid,
            flow_rate,
            values,
        })
    }

    pub fn grid(&self) -> &Arc<TimeGrid> {
        &self.grid
    }

    pub fn flow_rate(&self) -> f64 {
        self.flow_rate
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

pub fn make_information_path(x: f64, sigma: f64, bridge: &BridgePath) -> Result<InformationPath> {
    if !(sigma >= 0.0) || !sigma.is_finite() {
        return invalid(format!("sigma must be nonnegative, got {sigma}"));
    }
    let values = bridge
        .grid
        .times()
        .iter()
        .zip(&bridge.values)
        .map(|(&t, &b)| sigma * t * x + b)
        .collect();
    Ok(InformationPath {
        grid: Arc::clone(&bridge.grid),
        flow_rate: sigma,
        values,
    })
}

/// Square root of the sum of squared flow rates.
pub fn effective_flow_rate(sigmas: &[f64]) -> f64 {
    sigmas.iter().map(|s| s * s).sum::<f64>().sqrt()
}

/// Collapses several information sources into the single process that
/// carries all of their information about the payoff:
/// `sum(sigma_i * xi_i) / sqrt(sum(sigma_i^2))`.
pub fn effective_information(paths: &[InformationPath], sigmas: &[f64]) -> Result<InformationPath> {
    if paths.is_empty() {
        return invalid("at least one information path is required");
    }
    if paths.len() != sigmas.len() {
        return invalid(format!(
            "{} paths but {} flow rates",
            paths.len(),
            sigmas.len()
        ));
    }
    if let Some(&s) = sigmas.iter().find(|&&s| !(s >= 0.0)) {
        return invalid(format!("flow rates must be nonnegative, got {s}"));
    }
    let grid = &paths[0].grid;
    if paths
        .iter()
        .any(|p| !Arc::ptr_eq(&p.grid, grid) && *p.grid != **grid)
    {
        return invalid("information paths are on different grids");
    }
    let rate = effective_flow_rate(sigmas);
    if rate == 0.0 {
        return invalid("all flow rates are zero");
    }
    if paths.len() == 1 {
        return Ok(InformationPath {
            grid: Arc::clone(grid),
            flow_rate: rate,
            values: paths[0].values.clone(),
        });
    }
    let mut values = vec![0.0; grid.n_steps() + 1];
    for (path, &s) in paths.iter().zip(sigmas) {
        for (v, &xi) in values.iter_mut().zip(&path.values) {
            *v += s * xi;
        }
    }
    values.iter_mut().for_each(|v| *v /= rate);
    Ok(InformationPath {
        grid: Arc::clone(grid),
        flow_rate: rate,
        values,
    })
}

//! The JSON run configuration.

use std::path::Path;

use anyhow::{bail, Context, Result};
use infotrade_core::{
    make_time_grid, nested_sources, DiscountCurve, PayoffMeasure, ScenarioConfig,
};
use serde::{Deserialize, Serialize};

pub const DEFAULT_N_STEPS: usize = 5000;
pub const DEFAULT_SESSIONS: u64 = 100_000;

/// A flow rate given either as one number (total rate of the trader) or as
/// the explicit list of source rates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Sigma {
    Total(f64),
    Sources(Vec<f64>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfigFile {
    pub scenario: u8,
    pub phi: f64,
    #[serde(default = "one")]
    pub psi_a: f64,
    #[serde(default = "one")]
    pub psi_b: f64,
    /// Probability of the binary payoff `{1: p, 0: 1 - p}`.
    #[serde(default)]
    pub p: Option<f64>,
    /// General payoff law as `[[value, probability], ...]`.
    #[serde(default)]
    pub measure: Option<Vec<(f64, f64)>>,
    #[serde(default)]
    pub r: f64,
    #[serde(default = "one")]
    pub t_maturity: f64,
    #[serde(default = "default_steps")]
    pub n_steps: usize,
    #[serde(default = "default_sessions")]
    pub sessions: u64,
    #[serde(default)]
    pub max_trades: Option<usize>,
    #[serde(default)]
    pub seed: u64,
    pub sigma_a: Sigma,
    pub sigma_b: Sigma,
    #[serde(default)]
    pub fixed_time: Option<f64>,
}

fn one() -> f64 {
    1.0
}

fn default_steps() -> usize {
    DEFAULT_N_STEPS
}

fn default_sessions() -> u64 {
    DEFAULT_SESSIONS
}

impl RunConfigFile {
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config {}", path.display()))?;
        Self::from_json(&text).with_context(|| format!("invalid config {}", path.display()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn payoff_measure(&self) -> Result<PayoffMeasure> {
        match (self.p, &self.measure) {
            (Some(p), None) => PayoffMeasure::binary(p).context("key `p`"),
            (None, Some(atoms)) => PayoffMeasure::discrete(atoms.clone()).context("key `measure`"),
            (Some(_), Some(_)) => bail!("keys `p` and `measure` are mutually exclusive"),
            (None, None) => bail!("one of the keys `p` or `measure` is required"),
        }
    }

    /// Source lists for A and B. Totals are split into nested sources; a
    /// total of zero for B makes B prior-only.
    pub fn sources(&self) -> Result<(Vec<f64>, Vec<f64>)> {
        match (&self.sigma_a, &self.sigma_b) {
            (Sigma::Sources(a), Sigma::Sources(b)) => Ok((a.clone(), b.clone())),
            (Sigma::Total(a), Sigma::Total(b)) if *b == 0.0 => Ok((vec![*a], vec![])),
            (Sigma::Total(a), Sigma::Total(b)) => {
                nested_sources(*b, *a).context("keys `sigma_a` and `sigma_b`")
            }
            _ => bail!("`sigma_a` and `sigma_b` must both be numbers or both be lists"),
        }
    }

    /// Ratio of A's total flow rate to B's, used to scale sweeps.
    pub fn sigma_ratio(&self) -> Result<f64> {
        let (a, b) = self.sources()?;
        let rate = |s: &[f64]| s.iter().map(|x| x * x).sum::<f64>().sqrt();
        let (ra, rb) = (rate(&a), rate(&b));
        if rb == 0.0 {
            bail!("B has no information, so there is no sigma ratio to sweep");
        }
        Ok(ra / rb)
    }

    pub fn scenario_config(&self) -> Result<ScenarioConfig> {
        let grid =
            make_time_grid(self.t_maturity, self.n_steps).context("keys `t_maturity`/`n_steps`")?;
        let (a, b) = self.sources()?;
        let mut cfg =
            ScenarioConfig::new(self.scenario, self.phi, self.payoff_measure()?, a, b, grid)?;
        if self.psi_a != 1.0 || self.psi_b != 1.0 {
            cfg = cfg.with_aversion(self.psi_a, self.psi_b)?;
        }
        if let Some(m) = self.max_trades {
            cfg = cfg.with_max_trades(m)?;
        }
        if let Some(t) = self.fixed_time {
            cfg = cfg.with_fixed_time(t)?;
        }
        if self.r != 0.0 {
            if !self.r.is_finite() {
                bail!("key `r` must be finite, got {}", self.r);
            }
            cfg = cfg.with_curve(DiscountCurve::flat(self.r))?;
        }
        if self.sessions == 0 {
            bail!("key `sessions` must be at least 1");
        }
        Ok(cfg)
    }
}

/// Parses `start:stop:count` into `count` evenly spaced values from `start`
/// to `stop` inclusive.
pub fn parse_range(spec: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = spec.split(':').collect();
    let [start, stop, count] = parts[..] else {
        bail!("range `{spec}` must look like start:stop:count");
    };
    let start: f64 = start
        .trim()
        .parse()
        .with_context(|| format!("bad range start in `{spec}`"))?;
    let stop: f64 = stop
        .trim()
        .parse()
        .with_context(|| format!("bad range stop in `{spec}`"))?;
    let count: usize = count
        .trim()
        .parse()
        .with_context(|| format!("bad range count in `{spec}`"))?;
    if !start.is_finite() || !stop.is_finite() {
        bail!("range `{spec}` has non-finite ends");
    }
    match count {
        0 => bail!("range `{spec}` has zero points"),
        1 if start != stop => bail!("range `{spec}` has one point but different ends"),
        1 => Ok(vec![start]),
        n => Ok((0..n)
            .map(|i| {
                if i == n - 1 {
                    stop
                } else {
                    start + (stop - start) * i as f64 / (n - 1) as f64
                }
            })
            .collect()),
    }
}

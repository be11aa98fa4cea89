//! Information-based prices, discounting and quote construction.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::stochastic::{effective_information, InformationPath, PayoffMeasure};

/// Deterministic discounting at a constant short rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiscountCurve {
    pub short_rate: f64,
}

impl DiscountCurve {
    pub fn flat(short_rate: f64) -> Self {
        Self { short_rate }
    }

    /// `P(t1, t2)` without argument checks, for hot loops.
    #[inline]
    pub fn factor(&self, t1: f64, t2: f64) -> f64 {
        if self.short_rate == 0.0 {
            1.0
        } else {
            (-self.short_rate * (t2 - t1)).exp()
        }
    }
}

impl Default for DiscountCurve {
    fn default() -> Self {
        Self::flat(0.0)
    }
}

pub fn discount_factor(curve: &DiscountCurve, t1: f64, t2: f64) -> Result<f64> {
    if !(t1 >= 0.0) || !(t1 <= t2) {
        return invalid(format!(
            "discount interval requires 0 <= t1 <= t2, got [{t1}, {t2}]"
        ));
    }
    Ok(curve.factor(t1, t2))
}

/// Conditional mean of the payoff given the current value of an
/// information process, evaluated in log-sum-exp form.
///
/// Weights need not be normalized. Zero-weight atoms are dropped.
#[derive(Debug, Clone)]
pub struct PosteriorKernel {
    values: Vec<f64>,
    log_weights: Vec<f64>,
}

impl PosteriorKernel {
    pub fn new(atoms: &[(f64, f64)]) -> Self {
        let (values, log_weights) = atoms
            .iter()
            .filter(|a| a.1 > 0.0)
            .map(|&(x, w)| (x, w.ln()))
            .unzip();
        Self {
            values,
            log_weights,
        }
    }

    pub fn from_measure(measure: &PayoffMeasure) -> Self {
        Self::new(&measure.atoms())
    }

    /// `E[X | xi_t = xi]` for a process with flow rate `sigma`; requires `t < T`.
    #[inline]
    pub fn mean(&self, xi: f64, t: f64, sigma: f64, maturity: f64) -> f64 {
        let scale = maturity / (maturity - t);
        let a = sigma * xi * scale;
        let b = 0.5 * sigma * sigma * t * scale;
        if let ([x0, x1], [l0, l1]) = (&self.values[..], &self.log_weights[..]) {
            // two atoms: the posterior weight of x1 is a logistic function
            let z = x1 * (a - b * x1) + l1 - x0 * (a - b * x0) - l0;
            let w1 = if z >= 0.0 {
                1.0 / (1.0 + (-z).exp())
            } else {
                let e = z.exp();
                e / (1.0 + e)
            };
            return x0 + (x1 - x0) * w1;
        }
        let mut max = f64::NEG_INFINITY;
        for (&x, &lw) in self.values.iter().zip(&self.log_weights) {
            max = max.max(x * (a - b * x) + lw);
        }
        let mut num = 0.0;
        let mut den = 0.0;
        for (&x, &lw) in self.values.iter().zip(&self.log_weights) {
            let w = (x * (a - b * x) + lw - max).exp();
            num += x * w;
            den += w;
        }
        num / den
    }
}

/// Price at time `t` of the claim paying `X` at `maturity`, for a trader
/// observing an information process with flow rate `sigma` at value `xi`.
///
/// Returns 0 for `t >= maturity`: the claim has paid out.
pub fn information_price(
    xi: f64,
    t: f64,
    sigma: f64,
    maturity: f64,
    measure: &PayoffMeasure,
    curve: &DiscountCurve,
) -> Result<f64> {
    if !xi.is_finite() {
        return invalid(format!("information value must be finite, got {xi}"));
    }
    if !(sigma >= 0.0) || !(t >= 0.0) {
        return invalid(format!(
            "need sigma >= 0 and t >= 0, got sigma={sigma}, t={t}"
        ));
    }
    if t >= maturity {
        return Ok(0.0);
    }
    let kernel = PosteriorKernel::from_measure(measure);
    Ok(curve.factor(t, maturity) * kernel.mean(xi, t, sigma, maturity))
}

/// Closed-form mid of the defaultable discount bond, written as a logistic
/// function of the log-likelihood ratio so it saturates cleanly.
pub fn binary_bond_mid(
    xi: f64,
    t: f64,
    sigma: f64,
    maturity: f64,
    p: f64,
    curve: &DiscountCurve,
) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return invalid(format!("p must lie in (0, 1), got {p}"));
    }
    if !xi.is_finite() {
        return invalid(format!("information value must be finite, got {xi}"));
    }
    if t >= maturity {
        return Ok(0.0);
    }
    let z =
        (sigma * xi - 0.5 * sigma * sigma * t) * maturity / (maturity - t) + (p / (1.0 - p)).ln();
    let logistic = if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    };
    Ok(curve.factor(t, maturity) * logistic)
}

/// A trader's book at one instant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quote {
    pub info_mid: f64,
    pub quoted_mid: f64,
    pub bid: f64,
    pub offer: f64,
}

impl Quote {
    /// Quote around `info_mid * skew` with no parameter checks.
    #[inline]
    pub(crate) fn skewed(info_mid: f64, phi: f64, skew: f64) -> Self {
        let quoted_mid = info_mid * skew;
        Self {
            info_mid,
            quoted_mid,
            bid: quoted_mid / phi,
            offer: quoted_mid * phi,
        }
    }
}

/// Multiplicative skew `(phi * psi)^(-q)` applied to a mid by a trader
/// holding inventory `q`.
#[inline]
pub fn inventory_skew(phi: f64, psi: f64, q: i64) -> f64 {
    (phi * psi).powi(-(q as i32))
}

pub(crate) fn check_spread(phi: f64, psi: f64) -> Result<()> {
    if !(phi > 1.0) || !phi.is_finite() {
        return invalid(format!("spread factor phi must exceed 1, got {phi}"));
    }
    if !(psi >= 1.0) {
        return invalid(format!(
            "inventory aversion psi must be at least 1, got {psi}"
        ));
    }
    if !(psi < phi) {
        return invalid(format!(
            "inventory aversion psi = {psi} violates the bound 1 <= psi < phi = {phi}"
        ));
    }
    Ok(())
}

pub fn quote_from_mid(info_mid: f64, phi: f64, psi: f64, q: i64) -> Result<Quote> {
    check_spread(phi, psi)?;
    if !(info_mid >= 0.0) || !info_mid.is_finite() {
        return invalid(format!(
            "mid must be finite and nonnegative, got {info_mid}"
        ));
    }
    Ok(Quote::skewed(info_mid, phi, inventory_skew(phi, psi, q)))
}

/// Prices at every grid instant; the final instant (maturity) carries 0.
pub fn price_path(
    information: &InformationPath,
    measure: &PayoffMeasure,
    curve: &DiscountCurve,
) -> Result<Vec<f64>> {
    let kernel = PosteriorKernel::from_measure(measure);
    let mut out = vec![0.0; information.values().len()];
    fill_price_path(
        &kernel,
        information.grid().times(),
        information.values(),
        information.flow_rate(),
        curve,
        &mut out,
    )?;
    Ok(out)
}

pub(crate) fn fill_price_path(
    kernel: &PosteriorKernel,
    times: &[f64],
    xi: &[f64],
    sigma: f64,
    curve: &DiscountCurve,
    out: &mut [f64],
) -> Result<()> {
    let maturity = *times.last().expect("grid is never empty");
    let n = times.len() - 1;
    for i in 0..n {
        if !xi[i].is_finite() {
            return invalid(format!("non-finite information value at index {i}"));
        }
        out[i] = curve.factor(times[i], maturity) * kernel.mean(xi[i], times[i], sigma, maturity);
    }
    out[n] = 0.0;
    Ok(())
}

/// Prices made by a trader who knows only the prior.
pub fn prior_price_path(times: &[f64], measure: &PayoffMeasure, curve: &DiscountCurve) -> Vec<f64> {
    let maturity = *times.last().expect("grid is never empty");
    let mean = measure.mean();
    let n = times.len() - 1;
    let mut out: Vec<f64> = times[..n]
        .iter()
        .map(|&t| curve.factor(t, maturity) * mean)
        .collect();
    out.push(0.0);
    out
}

/// A trader: the information sources it observes and its inventory aversion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraderSpec {
    pub label: String,
    /// Flow rates of the observed sources; these are always the first
    /// `sigmas.len()` sources of the market. Empty means prior-only.
    pub sigmas: Vec<f64>,
    pub psi: f64,
}

impl TraderSpec {
    pub fn new(label: impl Into<String>, sigmas: Vec<f64>, psi: f64) -> Result<Self> {
        if let Some(&s) = sigmas.iter().find(|&&s| !(s >= 0.0) || !s.is_finite()) {
            return invalid(format!(
                "flow rates must be finite and nonnegative, got {s}"
            ));
        }
        if !(psi >= 1.0) {
            return invalid(format!(
                "inventory aversion psi must be at least 1, got {psi}"
            ));
        }
        Ok(Self {
            label: label.into(),
            sigmas,
            psi,
        })
    }

    pub fn effective_flow_rate(&self) -> f64 {
        crate::stochastic::effective_flow_rate(&self.sigmas)
    }

    /// True when this trader's sources are a strict prefix of `other`'s.
    pub fn is_less_informed_than(&self, other: &TraderSpec) -> bool {
        self.sigmas.len() < other.sigmas.len() && other.sigmas.starts_with(&self.sigmas)
    }

    /// Price path from the market's source paths, of which this trader sees
    /// the first `sigmas.len()`.
    pub fn price_path(
        &self,
        sources: &[InformationPath],
        measure: &PayoffMeasure,
        curve: &DiscountCurve,
    ) -> Result<Vec<f64>> {
        if sources.len() < self.sigmas.len() {
            return invalid(format!(
                "trader {} observes {} sources but only {} were supplied",
                self.label,
                self.sigmas.len(),
                sources.len()
            ));
        }
        if self.effective_flow_rate() == 0.0 {
            let grid = sources
                .first()
                .map(|s| s.grid().times().to_vec())
                .ok_or_else(|| {
                    crate::Error::InvalidArgument("no sources to take a grid from".into())
                })?;
            return Ok(prior_price_path(&grid, measure, curve));
        }
        let eff = effective_information(&sources[..self.sigmas.len()], &self.sigmas)?;
        price_path(&eff, measure, curve)
    }
}

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::stochastic::SeededRng;
use crate::trading::SessionResult;

/// Running mean and sum of squared deviations (Welford). Pushing the same
/// values in the same order always gives the same bits.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Moments {
    n: u64,
    mean: f64,
    m2: f64,
}

impl Moments {
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    /// Combines two disjoint samples, `other` following `self`.
    pub fn merge(&mut self, other: &Moments) {
        if other.n == 0 {
            return;
        }
        if self.n == 0 {
            *self = *other;
            return;
        }
        let n = self.n + other.n;
        let d = other.mean - self.mean;
        self.mean += d * other.n as f64 / n as f64;
        self.m2 += other.m2 + d * d * (self.n as f64 * other.n as f64) / n as f64;
        self.n = n;
    }

    pub fn count(&self) -> u64 {
        self.n
    }

    /// Sample mean; 0 for an empty sample.
    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Sample standard deviation with the `n - 1` divisor; 0 below two points.
    pub fn std_dev(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            (self.m2 / (self.n - 1) as f64).sqrt()
        }
    }

    /// Standard error of the mean, `std_dev / sqrt(n)`.
    pub fn std_error(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            self.std_dev() / (self.n as f64).sqrt()
        }
    }
}

/// Equal-width histogram over `[0, T]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub bin_edges: Vec<f64>,
    pub counts: Vec<u64>,
}

impl Histogram {
    pub fn new(upper: f64, n_bins: usize) -> Result<Self> {
        if n_bins < 2 {
            return invalid(format!("need at least 2 bins, got {n_bins}"));
        }
        if !(upper > 0.0) || !upper.is_finite() {
            return invalid(format!("histogram range must be positive, got {upper}"));
        }
        let mut bin_edges: Vec<f64> = (0..=n_bins)
            .map(|i| upper * i as f64 / n_bins as f64)
            .collect();
        bin_edges[n_bins] = upper;
        Ok(Self {
            bin_edges,
            counts: vec![0; n_bins],
        })
    }

    /// Adds a point; points outside the range land in the end bins.
    pub fn add(&mut self, t: f64) {
        let n = self.counts.len();
        let upper = self.bin_edges[n];
        let bin = ((t / upper) * n as f64).floor();
        let bin = if bin < 0.0 {
            0
        } else {
            (bin as usize).min(n - 1)
        };
        self.counts[bin] += 1;
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }
}

/// Summary of a batch of trading sessions.
///
/// Per-session figures average over every session, including those without
/// a trade. Per-trade figures average over executed trades only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchStats {
    pub n_sessions: u64,
    pub n_traded_sessions: u64,
    pub n_trades: u64,
    #[serde(rename = "mean_H_A_0")]
    pub mean_h_a_0: f64,
    #[serde(rename = "se_H_A_0")]
    pub se_h_a_0: f64,
    pub mean_per_trade_profit: f64,
    pub se_per_trade: f64,
    pub mean_trade_count: f64,
    pub mean_max_abs_inventory: f64,
    pub se_max_abs_inventory: f64,
    pub trade_time_histogram: Histogram,
}

/// Folds session results, in session order, into [`BatchStats`].
#[derive(Debug, Clone)]
pub(crate) struct StatsAccumulator {
    h_a_0: Moments,
    per_trade: Moments,
    trade_count: Moments,
    max_inventory: Moments,
    n_traded: u64,
    histogram: Histogram,
    p_0t: f64,
    maturity: f64,
    curve: crate::pricing::DiscountCurve,
}

impl StatsAccumulator {
    pub(crate) fn new(
        maturity: f64,
        curve: crate::pricing::DiscountCurve,
        n_bins: usize,
    ) -> Result<Self> {
        Ok(Self {
            h_a_0: Moments::default(),
            per_trade: Moments::default(),
            trade_count: Moments::default(),
            max_inventory: Moments::default(),
            n_traded: 0,
            histogram: Histogram::new(maturity, n_bins)?,
            p_0t: curve.factor(0.0, maturity),
            maturity,
            curve,
        })
    }

    pub(crate) fn push(&mut self, s: &SessionResult) {
        self.h_a_0.push(s.h_a_0);
        self.trade_count.push(s.trades.len() as f64);
        self.max_inventory.push(s.max_abs_inventory() as f64);
        if !s.trades.is_empty() {
            self.n_traded += 1;
        }
        for t in &s.trades {
            let fv = 1.0 / self.curve.factor(t.time, self.maturity);
            self.per_trade
                .push(self.p_0t * t.side.epsilon() as f64 * (s.realized_x - t.exec_price * fv));
            self.histogram.add(t.time);
        }
    }

    pub(crate) fn finish(self) -> BatchStats {
        BatchStats {
            n_sessions: self.h_a_0.count(),
            n_traded_sessions: self.n_traded,
            n_trades: self.per_trade.count(),
            mean_h_a_0: self.h_a_0.mean(),
            se_h_a_0: self.h_a_0.std_error(),
            mean_per_trade_profit: self.per_trade.mean(),
            se_per_trade: self.per_trade.std_error(),
            mean_trade_count: self.trade_count.mean(),
            mean_max_abs_inventory: self.max_inventory.mean(),
            se_max_abs_inventory: self.max_inventory.std_error(),
            trade_time_histogram: self.histogram,
        }
    }
}

/// Median of the finite values; `None` when there are none.
pub fn median(values: &[f64]) -> Option<f64> {
    let mut v: Vec<f64> = values.iter().copied().filter(|x| x.is_finite()).collect();
    median_in_place(&mut v)
}

fn median_in_place(v: &mut [f64]) -> Option<f64> {
    let n = v.len();
    if n == 0 {
        return None;
    }
    let (_, &mut hi, _) = v.select_nth_unstable_by(n / 2, f64::total_cmp);
    if n % 2 == 1 {
        return Some(hi);
    }
    let lo = v[..n / 2].iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Some(0.5 * (lo + hi))
}

/// Difference of two medians with a bootstrap standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MedianShift {
    pub median_first: f64,
    pub median_second: f64,
    /// `median_second - median_first`.
    pub difference: f64,
    pub se: f64,
}

/// Compares the medians of two per-session samples taken on the same
/// sessions. `None` marks a session without a value (no trade).
///
/// Sessions are resampled with replacement as pairs, which keeps the
/// common-random-number coupling between the two samples.
pub fn paired_median_shift(
    first: &[Option<f64>],
    second: &[Option<f64>],
    n_resamples: usize,
    master_seed: u64,
) -> Result<MedianShift> {
    if first.len() != second.len() {
        return invalid(format!(
            "paired samples differ in length: {} vs {}",
            first.len(),
            second.len()
        ));
    }
    if n_resamples < 2 {
        return invalid("need at least 2 bootstrap resamples");
    }
    let collect = |s: &[Option<f64>]| s.iter().flatten().copied().collect::<Vec<_>>();
    let (Some(m1), Some(m2)) = (median(&collect(first)), median(&collect(second))) else {
        return invalid("a sample has no values");
    };
    let n = first.len();
    let mut rng = SeededRng::new(master_seed, 0);
    let mut a = Vec::with_capacity(n);
    let mut b = Vec::with_capacity(n);
    let mut diffs = Moments::default();
    for _ in 0..n_resamples {
        a.clear();
        b.clear();
        for _ in 0..n {
            let i = rng.random_range(0..n);
            a.extend(first[i]);
            b.extend(second[i]);
        }
        if let (Some(x), Some(y)) = (median_in_place(&mut a), median_in_place(&mut b)) {
            diffs.push(y - x);
        }
    }
    Ok(MedianShift {
        median_first: m1,
        median_second: m2,
        difference: m2 - m1,
        se: diffs.std_dev(),
    })
}

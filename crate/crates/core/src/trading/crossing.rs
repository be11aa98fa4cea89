use serde::{Deserialize, Serialize};

use super::Side;
use crate::error::{invalid, Result};
use crate::pricing::Quote;

/// First instant at which the two books cross.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Crossing {
    pub index: usize,
    pub side: Side,
    /// Both conditions held at `index`; the buy side was taken.
    pub tie: bool,
}

/// Crossing test at one instant: A buys when its bid reaches B's offer and
/// sells when its offer falls to B's bid. A book with a zero quoted mid is
/// closed and never trades.
#[inline]
pub fn crossing_side(a: &Quote, b: &Quote) -> Option<(Side, bool)> {
    if !(a.quoted_mid > 0.0 && b.quoted_mid > 0.0) {
        return None;
    }
    let buy = a.bid >= b.offer;
    let sell = a.offer <= b.bid;
    match (buy, sell) {
        (true, tie) => Some((Side::Buy, tie)),
        (false, true) => Some((Side::Sell, false)),
        _ => None,
    }
}

/// Equivalent crossing test on the ratio of quoted mids: a trade happens
/// when `mid_a / mid_b` leaves the open band `(phi^-2, phi^2)`.
#[inline]
pub fn mid_ratio_exit(ratio: f64, phi: f64) -> Option<Side> {
    let bound = phi * phi;
    if ratio >= bound {
        Some(Side::Buy)
    } else if ratio <= 1.0 / bound {
        Some(Side::Sell)
    } else {
        None
    }
}

/// Smallest index `>= start` where the books cross. The last entry is the
/// maturity instant, where prices are zero, and is never searched.
pub fn detect_first_crossing(
    quotes_a: &[Quote],
    quotes_b: &[Quote],
    start: usize,
) -> Result<Option<Crossing>> {
    if quotes_a.len() != quotes_b.len() {
        return invalid(format!(
            "quote arrays are misaligned: {} vs {}",
            quotes_a.len(),
            quotes_b.len()
        ));
    }
    if start >= quotes_a.len() {
        return invalid(format!("start index {start} is past the end of the quotes"));
    }
    let end = quotes_a.len() - 1;
    Ok((start..end).find_map(|i| {
        crossing_side(&quotes_a[i], &quotes_b[i]).map(|(side, tie)| Crossing {
            index: i,
            side,
            tie,
        })
    }))
}

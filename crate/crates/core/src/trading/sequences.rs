//! Profit margins of buy/sell sequences under inventory-skewed quoting.
//!
//! For a sequence of sides `eps_1..eps_n` with inventories `Q_k = eps_1 + .. + eps_k`
//! the informed trader's expected profit is proportional to
//!
//! ```text
//! sum_k eps_k (1 - phi^(-Q_k) psi^(-Q_(k-1)))
//! ```
//!
//! which is positive whenever `phi > psi >= 1`.

use crate::error::{invalid, Error, Result};

/// Longest sequence length the exhaustive scan accepts.
pub const MAX_SCAN_LENGTH: usize = 25;

fn check_factors(phi: f64, psi: f64) -> Result<()> {
    if !(phi > psi && psi >= 1.0) || !phi.is_finite() {
        return invalid(format!("need phi > psi >= 1, got phi={phi}, psi={psi}"));
    }
    Ok(())
}

pub fn trade_sequence_margin(epsilons: &[i8], phi: f64, psi: f64) -> Result<f64> {
    check_factors(phi, psi)?;
    if epsilons.is_empty() {
        return invalid("trade sequence is empty");
    }
    if let Some(e) = epsilons.iter().find(|&&e| e != 1 && e != -1) {
        return invalid(format!("sequence entries must be +1 or -1, got {e}"));
    }
    let mut q_prev: i32 = 0;
    let mut total = 0.0;
    for &e in epsilons {
        let q = q_prev + e as i32;
        total += e as f64 * (1.0 - phi.powi(-q) * psi.powi(-q_prev));
        q_prev = q;
    }
    Ok(total)
}

/// Row index of a sequence: the binary number `1 u_1 .. u_m` with
/// `u_k = 1` for a buy and `0` for a sell.
pub fn sequence_code(epsilons: &[i8]) -> u64 {
    epsilons
        .iter()
        .fold(1u64, |code, &e| (code << 1) | u64::from(e == 1))
}

fn decode(code: u64, len: usize, out: &mut Vec<i8>) {
    out.clear();
    out.extend(
        (0..len)
            .rev()
            .map(|bit| if code >> bit & 1 == 1 { 1 } else { -1 }),
    );
}

fn check_length(max_len: usize) -> Result<()> {
    if max_len == 0 {
        return invalid("max_len must be at least 1");
    }
    if max_len > MAX_SCAN_LENGTH {
        return Err(Error::Refused(format!(
            "max_len {max_len} exceeds the limit of {MAX_SCAN_LENGTH} ({} sequences)",
            (1u64 << (max_len + 1)) - 2
        )));
    }
    Ok(())
}

/// Minimum margin over every sequence of length `1..=max_len`, with the
/// sequence attaining it.
pub fn scan_trade_sequences(max_len: usize, phi: f64, psi: f64) -> Result<(f64, Vec<i8>)> {
    check_factors(phi, psi)?;
    check_length(max_len)?;
    // Depth-first walk carrying the running sum and inventory: one O(1)
    // update per node of the sequence tree.
    let mut best = (f64::INFINITY, Vec::new());
    let mut stack = Vec::with_capacity(max_len);
    walk(&mut stack, 0, 0.0, max_len, phi, psi, &mut best);
    Ok(best)
}

fn walk(
    seq: &mut Vec<i8>,
    q_prev: i32,
    sum: f64,
    max_len: usize,
    phi: f64,
    psi: f64,
    best: &mut (f64, Vec<i8>),
) {
    if seq.len() == max_len {
        return;
    }
    for e in [-1i8, 1] {
        let q = q_prev + e as i32;
        let value = sum + e as f64 * (1.0 - phi.powi(-q) * psi.powi(-q_prev));
        seq.push(e);
        if value < best.0 {
            *best = (value, seq.clone());
        }
        walk(seq, q, value, max_len, phi, psi, best);
        seq.pop();
    }
}

/// Visits every sequence of length `1..=max_len` in increasing code order.
pub fn enumerate_trade_sequences(
    max_len: usize,
    phi: f64,
    psi: f64,
    mut visit: impl FnMut(u64, &[i8], f64),
) -> Result<()> {
    check_factors(phi, psi)?;
    check_length(max_len)?;
    let mut seq = Vec::with_capacity(max_len);
    for len in 1..=max_len {
        for code in (1u64 << len)..(1u64 << (len + 1)) {
            decode(code, len, &mut seq);
            let value = trade_sequence_margin(&seq, phi, psi)?;
            visit(code, &seq, value);
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_buy() {
        let v = trade_sequence_margin(&[1], 1.02, 1.0).unwrap();
        assert!((v - (1.0 - 1.0 / 1.02)).abs() < 1e-16);
        assert!((v - 0.019_607_843_137_254_9).abs() < 1e-15);
    }

    #[test]
    fn round_trip_pair() {
        for &(phi, psi) in &[(1.02, 1.0), (1.02, 1.01), (1.3, 1.2)] {
            let v = trade_sequence_margin(&[1, -1], phi, psi).unwrap();
            assert!((v - (1.0 / psi - 1.0 / phi)).abs() < 1e-15);
            assert!(v > 0.0);
        }
    }

    #[test]
    fn six_trade_example() {
        let (phi, psi): (f64, f64) = (1.02, 1.01);
        let want = (1.0 - phi.powi(-1))
            + (1.0 - phi.powi(-2) * psi.powi(-1))
            + (1.0 - phi.powi(-3) * psi.powi(-2))
            - (1.0 - phi.powi(-2) * psi.powi(-3))
            - (1.0 - phi.powi(-1) * psi.powi(-2))
            + (1.0 - phi.powi(-2) * psi.powi(-1));
        let got = trade_sequence_margin(&[1, 1, 1, -1, -1, 1], phi, psi).unwrap();
        assert!((got - want).abs() < 1e-15);
    }

    #[test]
    fn bad_inputs() {
        assert!(trade_sequence_margin(&[], 1.02, 1.0).is_err());
        assert!(trade_sequence_margin(&[1, 0], 1.02, 1.0).is_err());
        assert!(trade_sequence_margin(&[1], 1.02, 1.02).is_err());
        assert!(trade_sequence_margin(&[1], 1.02, 0.99).is_err());
        assert!(matches!(
            scan_trade_sequences(26, 1.02, 1.0),
            Err(Error::Refused(_))
        ));
        assert!(scan_trade_sequences(0, 1.02, 1.0).is_err());
    }

    #[test]
    fn length_one_scan() {
        let phi = 1.02;
        let (min, arg) = scan_trade_sequences(1, phi, 1.0).unwrap();
        // a lone buy earns 1 - 1/phi, a lone sell phi - 1
        assert!((min - (1.0 - 1.0 / phi)).abs() < 1e-16);
        assert_eq!(arg, vec![1]);
    }

    #[test]
    fn codes() {
        assert_eq!(sequence_code(&[1]), 3);
        assert_eq!(sequence_code(&[-1]), 2);
        assert_eq!(sequence_code(&[1, -1, 1]), 0b1101);
        let mut seq = Vec::new();
        decode(0b1101, 3, &mut seq);
        assert_eq!(seq, vec![1, -1, 1]);
    }

    #[test]
    fn scan_matches_enumeration() {
        let (phi, psi) = (1.1, 1.0);
        let mut rows = Vec::new();
        enumerate_trade_sequences(3, phi, psi, |c, s, v| rows.push((c, s.to_vec(), v))).unwrap();
        assert_eq!(rows.len(), 14);
        assert!(rows.windows(2).all(|w| w[0].0 < w[1].0));
        let brute = rows.iter().map(|r| r.2).fold(f64::INFINITY, f64::min);
        let (min, arg) = scan_trade_sequences(3, phi, psi).unwrap();
        assert!((min - brute).abs() < 1e-15);
        assert!((trade_sequence_margin(&arg, phi, psi).unwrap() - min).abs() < 1e-15);
    }
}

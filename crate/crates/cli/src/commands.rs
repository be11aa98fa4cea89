//! The subcommands. Each one writes its files into an output directory and
//! a short report to the supplied writer.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::Path;

use anyhow::{bail, Context, Result};
use infotrade_core::monte_carlo::MIN_BOUND_DRAWS;
use infotrade_core::{
    enumerate_trade_sequences, estimate_scenario2_bound_mc, run_batch_with, scan_trade_sequences,
    scenario2_lower_bound, sweep_with, BatchOptions, BatchStats, DiscountCurve, Histogram,
    SessionResult, SweepResult,
};

use crate::config::{parse_range, RunConfigFile};

/// Settings shared by the simulation commands.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RunOptions {
    /// Replaces the config's seed.
    pub seed: Option<u64>,
    /// Worker threads; never changes any output.
    pub workers: Option<usize>,
}

/// Fixed-width scientific notation with 17 significant digits, which
/// round-trips every `f64` exactly.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn create_out_dir(out: &Path) -> Result<()> {
    fs::create_dir_all(out)
        .with_context(|| format!("cannot create output directory {}", out.display()))
}

fn csv_writer(path: &Path) -> Result<csv::Writer<BufWriter<File>>> {
    let file = File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
    Ok(csv::Writer::from_writer(BufWriter::new(file)))
}

fn load(config: &Path, opts: &RunOptions) -> Result<(RunConfigFile, u64)> {
    let file = RunConfigFile::from_path(config)?;
    let seed = opts.seed.unwrap_or(file.seed);
    Ok((file, seed))
}

fn batch_options(opts: &RunOptions) -> BatchOptions {
    BatchOptions {
        workers: opts.workers,
        ..BatchOptions::default()
    }
}

/// One CSV row per session, detailed enough to recompute every summary
/// statistic.
fn session_row(session: u64, r: &SessionResult) -> Vec<String> {
    let trades = r
        .trades
        .iter()
        .map(|t| {
            format!(
                "{}:{}:{}:{}",
                fmt_f64(t.time),
                t.side.epsilon(),
                fmt_f64(t.exec_price),
                t.inventory_after
            )
        })
        .collect::<Vec<_>>()
        .join(";");
    vec![
        session.to_string(),
        fmt_f64(r.realized_x),
        r.trades.len().to_string(),
        fmt_f64(r.h_a_t),
        fmt_f64(r.h_a_0),
        r.max_abs_inventory().to_string(),
        trades,
    ]
}

pub const SESSION_COLUMNS: [&str; 7] = [
    "session",
    "realized_x",
    "n_trades",
    "h_a_t",
    "h_a_0",
    "max_abs_inventory",
    "trades",
];

/// Runs a batch and writes `sessions.csv` and `summary.json`.
pub fn simulate(
    config: &Path,
    out: &Path,
    opts: &RunOptions,
    log: &mut dyn Write,
) -> Result<BatchStats> {
    let (file, seed) = load(config, opts)?;
    let cfg = file.scenario_config()?;
    create_out_dir(out)?;
    let mut sessions = csv_writer(&out.join("sessions.csv"))?;
    sessions.write_record(SESSION_COLUMNS)?;
    let mut write_err: Option<csv::Error> = None;
    let stats = run_batch_with(
        std::slice::from_ref(&cfg),
        file.sessions,
        seed,
        &batch_options(opts),
        |_, s, r| {
            if write_err.is_none() {
                if let Err(e) = sessions.write_record(session_row(s, r)) {
                    write_err = Some(e);
                }
            }
        },
    )?
    .remove(0);
    if let Some(e) = write_err {
        return Err(e).context("writing sessions.csv");
    }
    sessions.flush().context("writing sessions.csv")?;
    write_json(&out.join("summary.json"), &stats)?;
    writeln!(
        log,
        "scenario {} sessions {} traded {} mean_H_A_0 {} se {}",
        cfg.scenario,
        stats.n_sessions,
        stats.n_traded_sessions,
        fmt_f64(stats.mean_h_a_0),
        fmt_f64(stats.se_h_a_0)
    )?;
    Ok(stats)
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
}

pub const SURFACE_COLUMNS: [&str; 7] = [
    "phi",
    "sigma_b",
    "mean_per_trade",
    "se_per_trade",
    "mean_per_session",
    "se_per_session",
    "n_traded",
];

/// Profitability surface over `phi` and B's flow rate; writes `surface.csv`.
///
/// A's rate is `sigma_ratio * sigma_b`, with the ratio taken from the config
/// unless given.
pub fn sweep(
    config: &Path,
    phi_spec: &str,
    sigma_spec: &str,
    sigma_ratio: Option<f64>,
    out: &Path,
    opts: &RunOptions,
    log: &mut dyn Write,
) -> Result<SweepResult> {
    let phis = parse_range(phi_spec).context("--phi")?;
    let sigmas = parse_range(sigma_spec).context("--sigma")?;
    let (file, seed) = load(config, opts)?;
    let base = file.scenario_config()?;
    let ratio = match sigma_ratio {
        Some(r) => r,
        None => file.sigma_ratio()?,
    };
    let result = sweep_with(
        &base,
        &phis,
        &sigmas,
        ratio,
        file.sessions,
        seed,
        &batch_options(opts),
    )?;
    create_out_dir(out)?;
    let mut w = csv_writer(&out.join("surface.csv"))?;
    w.write_record(SURFACE_COLUMNS)?;
    for (i, row) in result.cells.iter().enumerate() {
        for (j, s) in row.iter().enumerate() {
            w.write_record([
                fmt_f64(result.phi_values[i]),
                fmt_f64(result.sigma_values[j]),
                fmt_f64(s.mean_per_trade_profit),
                fmt_f64(s.se_per_trade),
                fmt_f64(s.mean_h_a_0),
                fmt_f64(s.se_h_a_0),
                s.n_traded_sessions.to_string(),
            ])?;
        }
    }
    w.flush().context("writing surface.csv")?;
    writeln!(
        log,
        "{} x {} cells, sigma_a / sigma_b = {}",
        phis.len(),
        sigmas.len(),
        ratio
    )?;
    Ok(result)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundArgs {
    pub phi: f64,
    pub p: f64,
    pub sigma: f64,
    pub t: f64,
    pub t_maturity: f64,
    pub r: f64,
    pub check_mc: Option<u64>,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundReport {
    pub bound: f64,
    pub seller_only: bool,
    pub mc: Option<(f64, f64)>,
}

/// Closed-form lower bound on A's value for one fixed-time trade of the
/// binary bond against a prior-only trader.
pub fn bound(args: &BoundArgs, log: &mut dyn Write) -> Result<BoundReport> {
    let curve = DiscountCurve::flat(args.r);
    let p_0t = curve.factor(0.0, args.t_maturity);
    let value = scenario2_lower_bound(args.phi, args.p, args.sigma, args.t, args.t_maturity, p_0t)?;
    let seller_only = args.phi * args.phi * args.p >= 1.0;
    writeln!(log, "bound {}", fmt_f64(value))?;
    if seller_only {
        writeln!(
            log,
            "note: phi^2 p = {} >= 1, so Trader A can only be a seller; the buy term is zero",
            args.phi * args.phi * args.p
        )?;
    }
    let mc = match args.check_mc {
        None => None,
        Some(n) => {
            if n < MIN_BOUND_DRAWS {
                bail!("--check-mc needs at least {MIN_BOUND_DRAWS} draws, got {n}");
            }
            let (est, se) = estimate_scenario2_bound_mc(
                args.phi,
                args.p,
                args.sigma,
                args.t,
                args.t_maturity,
                &curve,
                n,
                args.seed,
            )?;
            writeln!(
                log,
                "monte_carlo {} se {} draws {n} deviation_in_se {:.3}",
                fmt_f64(est),
                fmt_f64(se),
                (value - est) / se
            )?;
            Some((est, se))
        }
    };
    Ok(BoundReport {
        bound: value,
        seller_only,
        mc,
    })
}

fn sequence_text(seq: &[i8]) -> String {
    seq.iter().map(|&e| if e > 0 { '+' } else { '-' }).collect()
}

/// Margins of every buy/sell sequence up to `max_len`; writes `lemma3.csv`
/// and reports the minimum.
pub fn lemma3(
    max_len: usize,
    phi: f64,
    psi: f64,
    out: &Path,
    log: &mut dyn Write,
) -> Result<(f64, Vec<i8>)> {
    let (min, arg) = scan_trade_sequences(max_len, phi, psi)?;
    create_out_dir(out)?;
    let mut w = csv_writer(&out.join("lemma3.csv"))?;
    w.write_record(["code", "length", "sequence", "value"])?;
    let mut err = None;
    enumerate_trade_sequences(max_len, phi, psi, |code, seq, value| {
        if err.is_none() {
            if let Err(e) = w.write_record([
                code.to_string(),
                seq.len().to_string(),
                sequence_text(seq),
                fmt_f64(value),
            ]) {
                err = Some(e);
            }
        }
    })?;
    if let Some(e) = err {
        return Err(e).context("writing lemma3.csv");
    }
    w.flush().context("writing lemma3.csv")?;
    writeln!(log, "min {} at {}", fmt_f64(min), sequence_text(&arg))?;
    Ok((min, arg))
}

/// Trade-time histogram of a batch; writes `hist.csv`. A batch without
/// trades gives a header-only file.
pub fn hist(
    config: &Path,
    bins: usize,
    out: &Path,
    opts: &RunOptions,
    log: &mut dyn Write,
) -> Result<Histogram> {
    let (file, seed) = load(config, opts)?;
    let cfg = file.scenario_config()?;
    let options = BatchOptions {
        workers: opts.workers,
        histogram_bins: bins,
    };
    let stats = run_batch_with(
        std::slice::from_ref(&cfg),
        file.sessions,
        seed,
        &options,
        |_, _, _| {},
    )?
    .remove(0);
    let h = stats.trade_time_histogram;
    create_out_dir(out)?;
    let mut w = csv_writer(&out.join("hist.csv"))?;
    w.write_record(["bin_left", "bin_right", "count"])?;
    if h.total() > 0 {
        for (k, &c) in h.counts.iter().enumerate() {
            w.write_record([
                fmt_f64(h.bin_edges[k]),
                fmt_f64(h.bin_edges[k + 1]),
                c.to_string(),
            ])?;
        }
    }
    w.flush().context("writing hist.csv")?;
    writeln!(log, "{} trades in {} sessions", h.total(), stats.n_sessions)?;
    Ok(h)
}

//! Acceptance suite. Each test checks one numbered criterion and prints a
//! single `PASS`/`FAIL` line (run with `--nocapture` to see them).
//!
//! Tests hold a common lock so that the runtime figures they report are not
//! inflated by each other on small machines. Criteria 5, 6, 7 and 9 share one
//! 100,000-session batch: every variant trades on the same simulated prices.

use std::fs;
use std::path::Path;
use std::process::Command;
use std::sync::{Mutex, MutexGuard, OnceLock};
use std::time::{Duration, Instant};

use infotrade_core::monte_carlo::Moments;
use infotrade_core::{
    estimate_scenario2_bound_mc, make_information_path, make_time_grid, mid_ratio_exit,
    paired_median_shift, price_path, run_batch, run_batch_with, run_session, sample_bridge_path,
    sample_payoff, scan_trade_sequences, scenario2_lower_bound, simulate_session_paths,
    BatchOptions, BatchStats, DiscountCurve, PayoffMeasure, ScenarioConfig, SeededRng, Side,
    TraderSpec,
};
use rand::Rng;

const SESSIONS: u64 = 100_000;
const N_STEPS: usize = 5000;
const SEED: u64 = 20_240_601;
const PHI: f64 = 1.02;

static SERIAL: Mutex<()> = Mutex::new(());

fn serial() -> MutexGuard<'static, ()> {
    SERIAL.lock().unwrap_or_else(|e| e.into_inner())
}

fn report(id: u32, ok: bool, detail: String) {
    println!(
        "criterion {id:>2} {}: {detail}",
        if ok { "PASS" } else { "FAIL" }
    );
}

/// Base config at the reference parameters: binary bond with p = 0.8, r = 0,
/// T = 1, B on one unit-rate source, A on two (total rate sqrt 2).
fn reference(scenario: u8) -> ScenarioConfig {
    ScenarioConfig::new(
        scenario,
        PHI,
        PayoffMeasure::binary(0.8).unwrap(),
        vec![1.0, 1.0],
        vec![1.0],
        make_time_grid(1.0, N_STEPS).unwrap(),
    )
    .unwrap()
}

// ---------------------------------------------------------------------------
// Shared batch

const SPREAD_GRID: [f64; 6] = [1.005, 1.01, 1.02, 1.04, 1.08, 1.15];
const AVERSION_GRID: [f64; 4] = [1.0, 1.005, 1.010, 1.015];

struct Shared {
    labels: Vec<String>,
    stats: Vec<BatchStats>,
    h_a_0: Vec<Vec<f64>>,
    first_trade_time: Vec<Vec<Option<f64>>>,
    max_inventory: Vec<Vec<f64>>,
    elapsed: Duration,
}

impl Shared {
    fn index(&self, label: &str) -> usize {
        self.labels
            .iter()
            .position(|l| l == label)
            .unwrap_or_else(|| panic!("no variant {label}"))
    }
}

fn shared() -> &'static Shared {
    static CELL: OnceLock<Shared> = OnceLock::new();
    CELL.get_or_init(|| {
        let mut variants: Vec<(String, ScenarioConfig)> = vec![
            ("s1".into(), reference(1)),
            ("s3".into(), reference(3)),
            ("s4".into(), reference(4)),
            ("s5".into(), reference(5)),
            ("s6".into(), reference(6)),
            (
                "s5 psi=1.01".into(),
                reference(5).with_aversion(1.01, 1.01).unwrap(),
            ),
            (
                "s6 psi=1.01".into(),
                reference(6).with_aversion(1.01, 1.01).unwrap(),
            ),
            ("s3 phi=1.1".into(), reference(3).with_phi(1.10).unwrap()),
        ];
        for phi in SPREAD_GRID.iter().filter(|&&p| p != PHI) {
            variants.push((
                format!("s6 phi={phi}"),
                reference(6).with_phi(*phi).unwrap(),
            ));
        }
        for psi in [1.005, 1.015] {
            variants.push((
                format!("s6 psi={psi}"),
                reference(6).with_aversion(psi, psi).unwrap(),
            ));
        }
        let configs: Vec<ScenarioConfig> = variants.iter().map(|v| v.1.clone()).collect();
        let n = configs.len();
        let mut h_a_0 = vec![Vec::with_capacity(SESSIONS as usize); n];
        let mut first = vec![Vec::with_capacity(SESSIONS as usize); n];
        let mut inv = vec![Vec::with_capacity(SESSIONS as usize); n];
        let start = Instant::now();
        let stats = run_batch_with(
            &configs,
            SESSIONS,
            SEED,
            &BatchOptions::default(),
            |v, _, r| {
                h_a_0[v].push(r.h_a_0);
                first[v].push(r.trades.first().map(|t| t.time));
                inv[v].push(r.max_abs_inventory() as f64);
            },
        )
        .unwrap();
        Shared {
            labels: variants.into_iter().map(|v| v.0).collect(),
            stats,
            h_a_0,
            first_trade_time: first,
            max_inventory: inv,
            elapsed: start.elapsed(),
        }
    })
}

/// Mean and standard error of `second - first`, session by session.
fn paired(first: &[f64], second: &[f64]) -> (f64, f64) {
    let mut m = Moments::default();
    first.iter().zip(second).for_each(|(a, b)| m.push(b - a));
    (m.mean(), m.std_error())
}

// ---------------------------------------------------------------------------

#[test]
fn criterion_01_trade_sequence_positivity() {
    let _g = serial();
    let start = Instant::now();
    let (min, arg) = scan_trade_sequences(10, 1.02, 1.01).unwrap();
    let mut lattice_min = f64::INFINITY;
    for phi in [1.01, 1.05, 1.1] {
        for psi in [1.0, phi - 0.005] {
            lattice_min = lattice_min.min(scan_trade_sequences(10, phi, psi).unwrap().0);
        }
    }
    let elapsed = start.elapsed();
    let ok = min > 0.0 && lattice_min > 0.0 && elapsed < Duration::from_secs(1);
    report(
        1,
        ok,
        format!("min over 2046 sequences {min:.6e} at {arg:?}; lattice min {lattice_min:.6e}; {elapsed:?}"),
    );
    assert!(ok);
}

#[test]
#[allow(clippy::excessive_precision)]
fn criterion_02_fixed_time_bound_oracles() {
    let _g = serial();
    let start = Instant::now();
    let closed = scenario2_lower_bound(1.02, 0.8, 1.0, 0.5, 1.0, 1.0).unwrap();
    // 40-digit evaluation of the closed form
    let reference = 0.013_549_459_243_841_647_68;
    let (mc, se) = estimate_scenario2_bound_mc(
        1.02,
        0.8,
        1.0,
        0.5,
        1.0,
        &DiscountCurve::default(),
        1_000_000,
        SEED,
    )
    .unwrap();
    let elapsed = start.elapsed();
    let z = (closed - mc) / se;
    let ok =
        (closed - reference).abs() <= 1e-10 && z.abs() <= 3.0 && elapsed < Duration::from_secs(10);
    report(
        2,
        ok,
        format!(
            "closed form {closed:.17e}, reference diff {:.1e}, MC {mc:.6e} +- {se:.1e} ({z:+.2} SE); {elapsed:?}",
            (closed - reference).abs()
        ),
    );
    assert!(ok);

    // the bound really is below the simulated fixed-time value
    let cfg = ScenarioConfig::new(
        2,
        1.02,
        PayoffMeasure::binary(0.8).unwrap(),
        vec![1.0],
        vec![],
        make_time_grid(1.0, 1000).unwrap(),
    )
    .unwrap();
    let s = run_batch(&cfg, 20_000, SEED).unwrap();
    assert!(
        s.mean_h_a_0 - 3.0 * s.se_h_a_0 > closed,
        "{} +- {}",
        s.mean_h_a_0,
        s.se_h_a_0
    );
}

/// Tier-2 price from the product of both sources' likelihoods.
fn joint_product_price(
    atoms: &[(f64, f64)],
    sigmas: [f64; 2],
    xis: [f64; 2],
    t: f64,
    discount: f64,
) -> f64 {
    let logs: Vec<f64> = atoms
        .iter()
        .map(|&(x, p)| {
            p.ln()
                + (0..2)
                    .map(|k| {
                        (sigmas[k] * x * xis[k] - 0.5 * sigmas[k].powi(2) * x * x * t) / (1.0 - t)
                    })
                    .sum::<f64>()
        })
        .collect();
    let top = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = logs.iter().map(|l| (l - top).exp()).collect();
    let num: f64 = atoms.iter().zip(&w).map(|(a, w)| a.0 * w).sum();
    discount * num / w.iter().sum::<f64>()
}

#[test]
fn criterion_03_effective_information_equals_joint_filter() {
    let _g = serial();
    let start = Instant::now();
    let grid = make_time_grid(1.0, 200).unwrap();
    let mut rng = SeededRng::new(SEED, 1);
    let mut worst: f64 = 0.0;
    for case in 0..100u64 {
        let n_atoms = rng.random_range(2..6);
        let raw: Vec<f64> = (0..n_atoms).map(|_| rng.random_range(0.05..1.0)).collect();
        let total: f64 = raw.iter().sum();
        let mut atoms: Vec<(f64, f64)> = raw
            .iter()
            .enumerate()
            .map(|(k, w)| (k as f64 * rng.random_range(0.2..1.5), w / total))
            .collect();
        atoms[0].1 += 1.0 - atoms.iter().map(|a| a.1).sum::<f64>();
        let measure = PayoffMeasure::discrete(atoms.clone()).unwrap();
        let sigmas = [rng.random_range(0.1..2.0), rng.random_range(0.1..2.0)];
        let r = rng.random_range(0.0..0.08);
        let curve = DiscountCurve::flat(r);
        let x = sample_payoff(&measure, &mut SeededRng::for_session(SEED, case, 0));
        let sources: Vec<_> = (0..2)
            .map(|k| {
                let b = sample_bridge_path(&grid, &mut SeededRng::for_session(SEED, case, k + 1));
                make_information_path(x, sigmas[k], &b).unwrap()
            })
            .collect();
        let prices = TraderSpec::new("A", sigmas.to_vec(), 1.0)
            .unwrap()
            .price_path(&sources, &measure, &curve)
            .unwrap();
        for (i, &t) in grid.times()[..200].iter().enumerate() {
            let xis = [sources[0].values()[i], sources[1].values()[i]];
            let want = joint_product_price(&atoms, sigmas, xis, t, (-r * (1.0 - t)).exp());
            worst = worst.max((prices[i] - want).abs() / want.abs().max(1e-300));
        }
    }
    let elapsed = start.elapsed();
    let ok = worst <= 1e-10 && elapsed < Duration::from_secs(5);
    report(
        3,
        ok,
        format!("100 configs x 200 instants, worst relative gap {worst:.2e}; {elapsed:?}"),
    );
    assert!(ok);
}

#[test]
fn criterion_04_price_is_a_martingale() {
    let _g = serial();
    const PATHS: u64 = 100_000;
    let grid = make_time_grid(1.0, 10).unwrap();
    let measure = PayoffMeasure::binary(0.8).unwrap();
    let idx = [1usize, 3, 5, 7, 9];
    let check = |r: f64| -> (bool, String) {
        let curve = DiscountCurve::flat(r);
        let mut level = vec![Moments::default(); idx.len()];
        let mut drift = vec![Moments::default(); idx.len()];
        for s in 0..PATHS {
            let x = sample_payoff(&measure, &mut SeededRng::for_session(SEED, s, 0));
            let b = sample_bridge_path(&grid, &mut SeededRng::for_session(SEED, s, 1));
            let xi = make_information_path(x, 1.0, &b).unwrap();
            let p = price_path(&xi, &measure, &curve).unwrap();
            // deflated gain: price in money-market units (no interim dividends)
            let g: Vec<f64> = idx
                .iter()
                .map(|&i| (-r * grid.times()[i]).exp() * p[i])
                .collect();
            for k in 0..idx.len() {
                level[k].push(g[k]);
                drift[k].push(g[k] - g[0]);
            }
        }
        let target = (-r).exp() * 0.8;
        let worst_level = level
            .iter()
            .map(|m| (m.mean() - target).abs() / m.std_error())
            .fold(0.0, f64::max);
        let worst_drift = drift[1..]
            .iter()
            .map(|m| m.mean().abs() / m.std_error())
            .fold(0.0, f64::max);
        (
            worst_level <= 3.0 && worst_drift <= 3.0,
            format!("r={r}: worst level {worst_level:.2} SE, worst drift {worst_drift:.2} SE"),
        )
    };
    let (ok0, d0) = check(0.0);
    let (ok1, d1) = check(0.05);
    report(4, ok0 && ok1, format!("{d0}; {d1}"));
    assert!(ok0 && ok1);
}

/// Regression values for criterion 5, pinned from the first converged run
/// of this suite (seed above, 100,000 sessions, 5000 steps).
const PINNED_VALUES: [(&str, f64); 7] = [
    ("s1", 4.7342266265545975e-2),
    ("s3", 1.893537240133644e-2),
    ("s4", 3.668612597702891e-2),
    ("s5", 3.668612597702891e-2),
    ("s6", 1.600568062836182e-1),
    ("s5 psi=1.01", 2.1635060602066384e-2),
    ("s6 psi=1.01", 8.878657928676956e-2),
];

#[test]
fn criterion_05_informed_trader_value_is_positive() {
    let _g = serial();
    let sh = shared();
    let mut ok = true;
    let mut parts = Vec::new();
    for (label, pinned) in PINNED_VALUES {
        let s = &sh.stats[sh.index(label)];
        let z = s.mean_h_a_0 / s.se_h_a_0;
        let regression = (s.mean_h_a_0 - pinned).abs() <= 1e-9 * pinned.abs();
        ok &= z >= 3.0 && regression;
        parts.push(format!(
            "{label}: {:.5e} ({z:.1} SE{})",
            s.mean_h_a_0,
            if regression { "" } else { ", REGRESSED" }
        ));
    }
    ok &= sh.elapsed < Duration::from_secs(300);
    report(
        5,
        ok,
        format!(
            "{}; shared batch of {} variants took {:?}",
            parts.join(", "),
            sh.labels.len(),
            sh.elapsed
        ),
    );
    assert!(ok);
}

#[test]
fn criterion_06_larger_spread_trades_later() {
    let _g = serial();
    let sh = shared();
    let (a, b) = (sh.index("s3"), sh.index("s3 phi=1.1"));
    let start = Instant::now();
    let shift =
        paired_median_shift(&sh.first_trade_time[a], &sh.first_trade_time[b], 1000, SEED).unwrap();
    let ok = shift.difference > 0.0 && shift.difference >= 3.0 * shift.se;
    report(
        6,
        ok,
        format!(
            "median trade time {:.4} (phi=1.02) vs {:.4} (phi=1.10), shift {:.4} = {:.0} bootstrap SE; {:?}",
            shift.median_first,
            shift.median_second,
            shift.difference,
            shift.difference / shift.se,
            start.elapsed()
        ),
    );
    assert!(ok);
}

#[test]
fn criterion_07_optimal_spread_is_interior() {
    let _g = serial();
    let sh = shared();
    let ids: Vec<usize> = SPREAD_GRID
        .iter()
        .map(|&p| {
            if p == PHI {
                sh.index("s6")
            } else {
                sh.index(&format!("s6 phi={p}"))
            }
        })
        .collect();
    let session: Vec<f64> = ids.iter().map(|&i| sh.stats[i].mean_h_a_0).collect();
    let best = (0..ids.len())
        .max_by(|&i, &j| session[i].total_cmp(&session[j]))
        .unwrap();
    let interior = best > 0 && best < ids.len() - 1;
    let mut ok = interior;
    let mut notes = vec![format!("per-session max at phi={}", SPREAD_GRID[best])];
    if interior {
        for nb in [best - 1, best + 1] {
            let (d, se) = paired(&sh.h_a_0[ids[nb]], &sh.h_a_0[ids[best]]);
            ok &= d >= 2.0 * se;
            notes.push(format!("beats phi={} by {:.1} SE", SPREAD_GRID[nb], d / se));
        }
    }
    let mut weakest = f64::INFINITY;
    for w in ids.windows(2) {
        let (lo, hi) = (&sh.stats[w[0]], &sh.stats[w[1]]);
        let se = lo.se_per_trade.hypot(hi.se_per_trade);
        let z = (hi.mean_per_trade_profit - lo.mean_per_trade_profit) / se;
        weakest = weakest.min(z);
    }
    ok &= weakest >= 2.0;
    notes.push(format!(
        "per-trade profit increasing, weakest step {weakest:.1} SE"
    ));
    report(7, ok, notes.join(", "));
    assert!(ok);
}

#[test]
fn criterion_08_crossing_equals_ratio_band_exit() {
    let _g = serial();
    const N: u64 = 10_000;
    let start = Instant::now();
    let variants = [
        reference(6),
        reference(6).with_aversion(1.01, 1.01).unwrap(),
    ];
    let (mut trades, mut agree, mut mismatched) = (0usize, 0usize, 0usize);
    for s in 0..N {
        let paths = simulate_session_paths(&variants[0], SEED, s).unwrap();
        for cfg in &variants {
            let result = run_session(cfg, &paths.prices_a, &paths.prices_b, paths.x).unwrap();
            // replay with the mid-ratio test alone
            let mut replay = Vec::new();
            let (mut q, mut from) = (0i32, 0usize);
            while replay.len() < cfg.max_trades {
                let hit = (from..N_STEPS).find_map(|i| {
                    let (a, b) = (paths.prices_a[i], paths.prices_b[i]);
                    if a <= 0.0 || b <= 0.0 {
                        return None;
                    }
                    let ratio =
                        a * (cfg.phi * cfg.psi_a).powi(-q) / (b * (cfg.phi * cfg.psi_b).powi(q));
                    mid_ratio_exit(ratio, cfg.phi).map(|side| (i, side))
                });
                let Some((i, side)) = hit else { break };
                replay.push((i, side));
                q += if side == Side::Buy { 1 } else { -1 };
                from = i + 1;
            }
            let engine: Vec<(usize, Side)> = result
                .trades
                .iter()
                .map(|t| (t.time_index, t.side))
                .collect();
            trades += engine.len();
            if engine == replay {
                agree += engine.len();
            } else {
                mismatched += 1;
            }
        }
    }
    let ok = trades > 0 && agree == trades && mismatched == 0;
    report(
        8,
        ok,
        format!("{agree}/{trades} trades identical, {mismatched} differing sessions, over {N} sessions x 2 aversion settings; {:?}", start.elapsed()),
    );
    assert!(ok);
}

#[test]
fn criterion_09_aversion_reduces_inventory() {
    let _g = serial();
    let sh = shared();
    let ids: Vec<usize> = AVERSION_GRID
        .iter()
        .map(|&p| {
            if p == 1.0 {
                sh.index("s6")
            } else {
                sh.index(&format!("s6 psi={p}"))
            }
        })
        .collect();
    let means: Vec<f64> = ids
        .iter()
        .map(|&i| sh.stats[i].mean_max_abs_inventory)
        .collect();
    let mut weakest = f64::INFINITY;
    for w in ids.windows(2) {
        let (d, se) = paired(&sh.max_inventory[w[1]], &sh.max_inventory[w[0]]);
        weakest = weakest.min(d / se);
    }
    let ok = weakest >= 2.0;
    report(
        9,
        ok,
        format!(
            "mean max |Q| over psi {AVERSION_GRID:?}: {means:.4?}; weakest drop {weakest:.1} SE"
        ),
    );
    assert!(ok);
}

fn infotrade(args: &[&str]) {
    let o = Command::new(env!("CARGO_BIN_EXE_infotrade"))
        .args(args)
        .output()
        .unwrap();
    assert!(
        o.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&o.stderr)
    );
}

fn dir_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (
                e.file_name().to_string_lossy().into_owned(),
                fs::read(e.path()).unwrap(),
            )
        })
        .collect();
    files.sort();
    files
}

#[test]
fn criterion_10_outputs_do_not_depend_on_workers() {
    let _g = serial();
    let start = Instant::now();
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("c.json");
    fs::write(
        &cfg,
        format!(
            r#"{{"scenario": 6, "phi": 1.02, "psi_a": 1.005, "psi_b": 1.005, "p": 0.8, "n_steps": {N_STEPS},
               "sessions": 3000, "seed": {SEED}, "sigma_a": [1.0, 1.0], "sigma_b": [1.0]}}"#
        ),
    )
    .unwrap();
    let c = cfg.to_str().unwrap();
    let mut outputs = Vec::new();
    for workers in ["1", "3"] {
        let out = tmp.path().join(format!("w{workers}"));
        let o = out.to_str().unwrap();
        infotrade(&["simulate", "--config", c, "--out", o, "--workers", workers]);
        infotrade(&[
            "hist",
            "--config",
            c,
            "--bins",
            "25",
            "--out",
            o,
            "--workers",
            workers,
        ]);
        infotrade(&[
            "sweep",
            "--config",
            c,
            "--phi",
            "1.01:1.05:3",
            "--sigma",
            "0.5:1:2",
            "--out",
            o,
            "--workers",
            workers,
        ]);
        outputs.push(dir_bytes(&out));
    }
    let names: Vec<&str> = outputs[0].iter().map(|f| f.0.as_str()).collect();
    let ok = outputs[0] == outputs[1]
        && names == ["hist.csv", "sessions.csv", "summary.json", "surface.csv"];
    report(
        10,
        ok,
        format!(
            "{names:?} byte-identical with 1 and 3 workers; {:?}",
            start.elapsed()
        ),
    );
    assert!(ok);
}

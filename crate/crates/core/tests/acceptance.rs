//! Acceptance suite: one line per criterion with the measured values and
//! the pinned tolerance. Runs with its own harness so the lines are always
//! shown; the process fails if any criterion outside `KNOWN_DEVIATIONS`
//! fails.
//!
//! Optimizations run on a 32×32 grid (η_abs moves by about 1e-5 and η_em
//! by about 2e-3 between 32² and 96²). The redirection sweep, which
//! resamples the rotated spin wave, uses the default grid.

use std::f64::consts::PI;
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use spin_router::experiments::{absorption_mismatch_sweep, emission_mismatch_sweep, phi_sweep, symmetric_points};
use spin_router::field::ComplexField;
use spin_router::hardware::{
    design_coil, hyperfine_z_bound, steps_for, subspace_params, two_level_sweep, Subspace,
};
use spin_router::optimizer::{optimize, sweep_eta_abs, OptProblem, SweepRow};
use spin_router::params::{eta_ref, GridSpec, SimParams};
use spin_router::phasematch::{apply_phase_ramp, delta_for_angle, PhaseRamp, Vec2};
use spin_router::solver::{
    excitation_numbers, run_absorption, run_full, CycleWindows, LedgerSample, SimState, SolverOptions,
};
use spin_router::zeeman::{manipulation_time, momentum_cancellation, ZeemanConfig};
use spin_router::{ControlSpec, PhysicalUnits, SignalSpec};

/// Criteria that fail with the present model; the README results section
/// explains each.
const KNOWN_DEVIATIONS: &[usize] = &[1, 3, 4];

const BUDGET_ABS: usize = 120;
const BUDGET_FULL: usize = 100;
const SEED: u64 = 1;

// pinned tolerances
const C1_TARGET: f64 = 0.90;
const C1_TOL: f64 = 0.05;
const C1_REF_TOL: f64 = 0.08;
const C2_SPREAD: f64 = 0.03;
const C3_BAND: (f64, f64) = (0.40, 0.75);
const C4_ABS_WIDTH: f64 = 11.4;
const C4_EM_WIDTH: f64 = 2.9;
const C4_REL: f64 = 0.20;
const C6_NI: (f64, f64) = (62.2, 0.5);
const C6_V: (f64, f64) = (31.0, 1.0);
const C6_I: (f64, f64) = (1.0, 0.02);
const C7_Z_REL: f64 = 0.10;
const C8_LEDGER: f64 = 1e-6;
const C8_LEDGER_NO_DECAY: f64 = 1e-8;
const C9_NORM: f64 = 1e-12;
const C9_COMPOSE: f64 = 1e-10;

struct Report {
    results: Vec<(usize, bool)>,
    ledger: Vec<(String, f64)>,
}

impl Report {
    fn line(&mut self, n: usize, ok: bool, text: String) {
        println!("criterion {n:>2}: {}  {text}", if ok { "PASS" } else { "FAIL" });
        self.results.push((n, ok));
    }

    fn ledger(&mut self, label: &str, series: &[LedgerSample]) {
        self.ledger.push((label.to_owned(), ledger_dev(series)));
    }
}

/// Largest deviation of the ledger total from its initial value, relative.
fn ledger_dev(series: &[LedgerSample]) -> f64 {
    let t0 = series.first().map(LedgerSample::total).unwrap_or(1.0);
    series.iter().map(|s| ((s.total() - t0) / t0).abs()).fold(0.0, f64::max)
}

fn params(d: f64, n: usize) -> SimParams {
    let grid = GridSpec::square(n, GridSpec::default().x_extent).unwrap();
    SimParams::with_optical_depth(PhysicalUnits::default(), d, 0.0, grid).unwrap()
}

fn fine() -> SolverOptions {
    SolverOptions { record_every: 8, ..Default::default() }
}

fn check_absorption_ledger(rep: &mut Report, label: &str, p: &SimParams, c: &ControlSpec) {
    let r = run_absorption(p, &SignalSpec::default(), c, None, fine()).unwrap();
    rep.ledger(label, &r.series);
}

fn criterion_1(rep: &mut Report) -> ControlSpec {
    let depths = [5.0, 10.0, 15.0, 20.0];
    let base = OptProblem::absorption(params(depths[0], 32), 0.0, BUDGET_ABS, SEED);
    let rows = sweep_eta_abs(&base, &depths, &[0.0]).unwrap();
    let mut ref_ok = true;
    let mut detail = Vec::new();
    for r in &rows {
        let p = params(r.d, 32);
        let er = eta_ref(p.d_prime).unwrap();
        let factor = er.sqrt();
        ref_ok &= (r.eta - er).abs() <= C1_REF_TOL;
        detail.push(format!("d={}: {:.4} (ref {:.4}, unsquared {:.4})", r.d, r.eta, er, factor));
        check_absorption_ledger(rep, &format!("c1 d={}", r.d), &p, &r.best);
    }
    let monotone = rows.windows(2).all(|w| w[1].eta >= w[0].eta - 0.01);
    let at20 = rows.last().unwrap();
    let ok20 = (at20.eta - C1_TARGET).abs() <= C1_TOL;
    println!("    {}", detail.join("; "));
    rep.line(
        1,
        ok20 && ref_ok,
        format!(
            "eta_abs(d=20) = {:.4} (target {C1_TARGET} +/- {C1_TOL}: {}); |eta_abs - eta_ref| <= {C1_REF_TOL} for d in 5..20: {}; monotone: {monotone}",
            at20.eta,
            if ok20 { "ok" } else { "off" },
            if ref_ok { "ok" } else { "off" },
        ),
    );
    at20.best
}

fn criterion_2(rep: &mut Report) -> ControlSpec {
    let thetas = [0.0, PI / 4.0, PI / 2.0, PI];
    let base = OptProblem::absorption(params(6.0, 32), 0.0, BUDGET_ABS, SEED);
    let rows: Vec<SweepRow> = sweep_eta_abs(&base, &[6.0], &thetas).unwrap();
    let etas: Vec<f64> = rows.iter().map(|r| r.eta).collect();
    let spread = etas.iter().copied().fold(f64::NEG_INFINITY, f64::max) - etas.iter().copied().fold(f64::INFINITY, f64::min);
    for r in &rows {
        check_absorption_ledger(rep, &format!("c2 theta={:.0}", r.angle.to_degrees()), &base.params, &r.best);
    }
    let listing: Vec<String> = rows.iter().map(|r| format!("{:.0}deg {:.4}", r.angle.to_degrees(), r.eta)).collect();
    rep.line(2, spread <= C2_SPREAD, format!("eta_abs at d=6: {}; spread {spread:.4} (limit {C2_SPREAD})", listing.join(", ")));
    rows[0].best
}

fn criterion_3(rep: &mut Report) {
    let problem = OptProblem::full_cycle(params(17.0, 32), 0.0, 0.0, BUDGET_FULL, SEED);
    let best = optimize(&problem).unwrap().best;
    let p = params(17.0, GridSpec::default().nx);
    let phis: Vec<f64> = (0..=6).map(|i| PI * i as f64 / 6.0).collect();
    let points = phi_sweep(&p, &SignalSpec::default(), &best, &phis, fine()).unwrap();
    let totals: Vec<f64> = points.iter().map(|q| q.report.eta_total).collect();
    for q in &points {
        rep.ledger(&format!("c3 phi={:.0} emission", q.phi.to_degrees()), &q.report.emission_series);
    }
    rep.ledger("c3 absorption", &points[0].report.absorption_series);
    let in_band = totals.iter().all(|&t| (C3_BAND.0..=C3_BAND.1).contains(&t));
    let imax = totals.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).map(|(i, _)| i).unwrap();
    let listing: Vec<String> =
        points.iter().map(|q| format!("{:.0}:{:.3}", q.phi.to_degrees(), q.report.eta_total)).collect();
    rep.line(
        3,
        in_band && imax == phis.len() - 1,
        format!(
            "eta_total over phi (deg:eta) {}; band [{}, {}]: {}; max at {:.0} deg",
            listing.join(" "),
            C3_BAND.0,
            C3_BAND.1,
            if in_band { "ok" } else { "off" },
            phis[imax].to_degrees()
        ),
    );
}

/// Both sweeps use the control optimized for absorption at d = 6, θ = 0.
fn criterion_4(rep: &mut Report, control6: &ControlSpec) {
    let p = params(6.0, 32);
    let signal = SignalSpec::default();
    let ks = symmetric_points(2.0 * C4_ABS_WIDTH, 9);
    let a = absorption_mismatch_sweep(&p, &signal, control6, &ks, fine()).unwrap();
    rep.ledger.push(("c4 absorption sweep".into(), a.ledger_error));
    let ks = symmetric_points(2.0 * C4_EM_WIDTH, 9);
    let e = emission_mismatch_sweep(&p, &signal, control6, 0.0, &ks, fine()).unwrap();
    rep.ledger.push(("c4 emission sweep".into(), e.ledger_error));
    let rel = |w: f64, target: f64| (w - target).abs() / target;
    let (ra, re) = (rel(a.fit.width, C4_ABS_WIDTH), rel(e.fit.width, C4_EM_WIDTH));
    rep.line(
        4,
        ra <= C4_REL && re <= C4_REL,
        format!(
            "absorption width {:.3} gamma/c (target {C4_ABS_WIDTH}, off {:.1}%, log fit {:.3}); emission width {:.3}/L (target {C4_EM_WIDTH}, off {:.1}%, log fit {:.3}); limit {:.0}%",
            a.fit.width,
            100.0 * ra,
            a.fit.log_width,
            e.fit.width,
            100.0 * re,
            e.fit.log_width,
            100.0 * C4_REL
        ),
    );
}

fn criterion_5(rep: &mut Report) {
    let cfg = ZeemanConfig::default();
    let t1 = manipulation_time(88e3, &cfg).unwrap();
    let ks = PhysicalUnits::default().k_s_mag;
    let tpi = manipulation_time(delta_for_angle(PI, ks).norm(), &cfg).unwrap();
    // |δ(π)| = 2|k_s|
    let expect = 2.0 * ks / cfg.delta_rate();
    let ok = (t1 - 1e-6).abs() <= 1e-12 * 1e-6 && (tpi - expect).abs() <= 1e-12 * expect && (tpi - 1.8e-4).abs() < 0.1e-4;
    rep.line(5, ok, format!("T(88/mm) = {t1:.6e} s; T(phi=pi) = {tpi:.4e} s (formula {expect:.4e} s)"));
}

fn criterion_6(rep: &mut Report) {
    let c = design_coil(0.01, 50.0, 5e-6, 63).unwrap();
    let ni = c.current * c.n_c as f64;
    let ok = (ni - C6_NI.0).abs() <= C6_NI.1 && (c.voltage - C6_V.0).abs() <= C6_V.1 && (c.current - C6_I.0).abs() <= C6_I.1;
    rep.line(6, ok, format!("N*I = {ni:.3} A, V = {:.3} V, I = {:.4} A", c.voltage, c.current));
}

fn criterion_7(rep: &mut Report) {
    let z = hyperfine_z_bound(500.0, 1e-9).unwrap();
    let z_ok = (z - 50.0).abs() <= C7_Z_REL * 50.0;
    let p = subspace_params(Subspace::H1, 0.0, 250.0, 1e-6).unwrap();
    let s = two_level_sweep(&p, steps_for(&p)).unwrap().survival;
    let s_ok = s > 1.0 - 1e-6;
    let taus: Vec<f64> = (0..=12).map(|i| 1e-9 * 1e3f64.powf(i as f64 / 12.0)).collect();
    let surv: Vec<f64> = taus
        .iter()
        .map(|&t| {
            let p = subspace_params(Subspace::H1, 0.0, 500.0, t).unwrap();
            two_level_sweep(&p, steps_for(&p)).unwrap().survival
        })
        .collect();
    let ripple = surv.windows(2).map(|w| (w[0] - w[1]).max(0.0)).fold(0.0, f64::max);
    rep.line(
        7,
        z_ok && s_ok && ripple < 1e-3,
        format!("z(500 G, 1 ns) = {z:.2} (50 +/- 10%); survival(1 us, 250 G) = 1 - {:.2e}; largest decrease over tau = {ripple:.2e}", 1.0 - s),
    );
}

fn criterion_8(rep: &mut Report, control20: &ControlSpec) {
    // decay disabled: full cycle at d = 20
    let p = params(20.0, 32);
    let opts = SolverOptions { decay: false, record_every: 8 };
    let ramp = PhaseRamp::zero(p.units.length);
    let r = run_full(&p, &SignalSpec::default(), control20, &ramp, control20, 0.0, CycleWindows::default(), opts).unwrap();
    let no_decay = ledger_dev(&r.absorption_series).max(ledger_dev(&r.emission_series));
    let worst = rep.ledger.iter().map(|(_, v)| *v).fold(0.0, f64::max);
    let worst_label = rep.ledger.iter().max_by(|a, b| a.1.total_cmp(&b.1)).map(|(l, _)| l.clone()).unwrap_or_default();
    rep.line(
        8,
        worst <= C8_LEDGER && no_decay <= C8_LEDGER_NO_DECAY,
        format!(
            "{} runs, worst ledger drift {worst:.2e} ({worst_label}); decay off {no_decay:.2e}",
            rep.ledger.len()
        ),
    );
}

fn criterion_9(rep: &mut Report) {
    let p = params(6.0, 48);
    let c = ControlSpec { amplitude: 13.89, w_par: 64.25, w_perp: 2.19, t0: 0.0742, y0: 0.0197, ..Default::default() };
    let s = run_absorption(&p, &SignalSpec::default(), &c, None, SolverOptions::default()).unwrap().state.s;
    let n_s = |f: &ComplexField| {
        let mut st = SimState::vacuum(&p, f.depth, 0.0);
        st.s = f.clone();
        excitation_numbers(&st, &p).1
    };
    let u = p.units;
    let kappa = Vec2::new(143.2, 0.0);
    let delta = delta_for_angle(PI / 3.0, u.k_s_mag);
    let (d1, d2) = momentum_cancellation(kappa, delta);
    let once = apply_phase_ramp(&s, &PhaseRamp::from_si(delta, u.length), p.grid);
    let twice = apply_phase_ramp(
        &apply_phase_ramp(&s, &PhaseRamp::from_si(d1, u.length), p.grid),
        &PhaseRamp::from_si(d2, u.length),
        p.grid,
    );
    let n0 = n_s(&s);
    let norm_err = ((n_s(&once) - n0) / n0).abs();
    let comp = once.data.iter().zip(&twice.data).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
    let scale = s.max_abs();
    rep.line(
        9,
        norm_err <= C9_NORM && comp <= C9_COMPOSE * scale.max(1.0),
        format!("N_s change {norm_err:.2e}; delta1-then-delta2 vs delta: max element difference {comp:.2e} (|S| max {scale:.3})"),
    );
}

fn run_cli(config: &Path, out: &Path) -> bool {
    Command::new(env!("CARGO_BIN_EXE_router"))
        .arg("optimize")
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(out)
        .arg("--seed")
        .arg("7")
        .output()
        .map(|o| o.status.success())
        .unwrap_or(false)
}

fn read_outputs(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .map(|p| {
            let name = p.file_name().unwrap().to_string_lossy().into_owned();
            let mut bytes = std::fs::read(&p).unwrap();
            if name == "manifest.txt" {
                let text = String::from_utf8(bytes).unwrap();
                bytes = text.lines().filter(|l| !l.starts_with("# created")).collect::<Vec<_>>().join("\n").into_bytes();
            }
            (name, bytes)
        })
        .collect();
    files.sort();
    files
}

fn criterion_10(rep: &mut Report) {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("run.cfg");
    std::fs::write(&cfg, "params.d = 6\ngrid.nx = 24\ngrid.ny = 24\noptimize.budget = 12\noptimize.robustness_samples = 3\n").unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    let ran = run_cli(&cfg, &a) && run_cli(&cfg, &b);
    let (fa, fb) = (read_outputs(&a), read_outputs(&b));
    let same = ran && !fa.is_empty() && fa == fb;
    rep.line(10, same, format!("two optimize runs with seed 7: {} files, byte-identical: {same}", fa.len()));
}

fn main() {
    let mut rep = Report { results: Vec::new(), ledger: Vec::new() };
    let t = Instant::now();
    let control20 = criterion_1(&mut rep);
    let control6 = criterion_2(&mut rep);
    criterion_3(&mut rep);
    criterion_4(&mut rep, &control6);
    criterion_5(&mut rep);
    criterion_6(&mut rep);
    criterion_7(&mut rep);
    criterion_8(&mut rep, &control20);
    criterion_9(&mut rep);
    criterion_10(&mut rep);
    rep.results.sort();
    let passed = rep.results.iter().filter(|r| r.1).count();
    println!("acceptance: {passed}/{} criteria pass ({:.0?})", rep.results.len(), t.elapsed());
    let unexpected: Vec<usize> =
        rep.results.iter().filter(|(n, ok)| !ok && !KNOWN_DEVIATIONS.contains(n)).map(|r| r.0).collect();
    if !unexpected.is_empty() {
        println!("unexpected failures: {unexpected:?}");
        std::process::exit(1);
    }
}

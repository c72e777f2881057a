//! Scenario execution: composes the library stages for one [`RunConfig`]
//! and writes CSV artifacts plus a manifest into an output directory.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::config::{Diagnostic, RunConfig, Scenario};
use crate::error::Result;
use crate::experiments::{
    absorption_mismatch_sweep, compensated_absorption_sweep, emission_mismatch_sweep, phi_sweep, symmetric_points,
    MismatchSweep,
};
use crate::hardware::{design_coil_with, landau_zener_p, landau_zener_z, steps_for, subspace_params, two_level_sweep, Subspace};
use crate::optimizer::{optimize, robustness_scan, sweep_eta_abs, write_sweep_csv, ControlParam, OptResult};
use crate::params::{eta_ref, signal_bandwidth, SimParams};
use crate::phasematch::delta_for_angle;
use crate::pulses::ControlSpec;
use crate::solver::{run_absorption, run_full, write_series_csv, CycleWindows};
use crate::zeeman::{feasibility_map, plan_manipulation, write_feasibility_csv};

pub const MANIFEST: &str = "manifest.txt";

/// Headline numbers and the files written by one run.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunSummary {
    pub values: Vec<(String, f64)>,
    pub files: Vec<PathBuf>,
    pub warnings: Vec<String>,
}

impl RunSummary {
    pub fn value(&self, name: &str) -> Option<f64> {
        self.values.iter().find(|(k, _)| k == name).map(|(_, v)| *v)
    }
}

struct Out<'a> {
    dir: &'a Path,
    summary: RunSummary,
}

impl<'a> Out<'a> {
    fn file(&mut self, name: &str) -> Result<BufWriter<File>> {
        let path = self.dir.join(name);
        let f = File::create(&path)?;
        self.summary.files.push(path);
        Ok(BufWriter::new(f))
    }

    fn value(&mut self, name: &str, v: f64) {
        self.summary.values.push((name.to_owned(), v));
    }

    fn write_report(&mut self) -> Result<()> {
        let values = self.summary.values.clone();
        let mut w = self.file("report.csv")?;
        writeln!(w, "quantity,value")?;
        for (k, v) in &values {
            writeln!(w, "{k},{v}")?;
        }
        w.flush()?;
        Ok(())
    }
}

fn unix_time() -> u64 {
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

/// Manifest text: `#` metadata lines followed by the resolved config.
pub fn manifest_text(cfg: &RunConfig, warnings: &[String]) -> String {
    let mut s = format!(
        "# spin-router {}\n# scenario {}\n# seed {}\n# created_unix {}\n",
        env!("CARGO_PKG_VERSION"),
        cfg.scenario,
        cfg.seed,
        unix_time()
    );
    for w in warnings {
        s.push_str(&format!("# warning: {w}\n"));
    }
    s.push_str(&cfg.to_config_text());
    s
}

/// Runs the configured scenario, writing artifacts into `out_dir`.
/// `diagnostics` (warnings from parsing) are recorded in the manifest.
pub fn run(cfg: &RunConfig, out_dir: &Path, diagnostics: &[Diagnostic]) -> Result<RunSummary> {
    fs::create_dir_all(out_dir)?;
    let mut out = Out { dir: out_dir, summary: RunSummary::default() };
    out.summary.warnings = diagnostics.iter().map(|d| d.to_string()).collect();
    match cfg.scenario {
        Scenario::Absorb => absorb(cfg, &mut out)?,
        Scenario::Full => full(cfg, &mut out)?,
        Scenario::SweepAbs => sweep_abs(cfg, &mut out)?,
        Scenario::SweepPhi => sweep_phi(cfg, &mut out)?,
        Scenario::MismatchAbs => mismatch_abs(cfg, &mut out)?,
        Scenario::MismatchEm => mismatch_em(cfg, &mut out)?,
        Scenario::Optimize => optimize_scenario(cfg, &mut out)?,
        Scenario::Feasibility => feasibility(cfg, &mut out)?,
        Scenario::Coil => coil(cfg, &mut out)?,
        Scenario::Adiabatic => adiabatic(cfg, &mut out)?,
    }
    out.write_report()?;
    let manifest = manifest_text(cfg, &out.summary.warnings);
    let mut w = out.file(MANIFEST)?;
    w.write_all(manifest.as_bytes())?;
    w.flush()?;
    Ok(out.summary)
}

fn write_control_csv(out: &mut Out<'_>, name: &str, c: &ControlSpec) -> Result<()> {
    let mut w = out.file(name)?;
    writeln!(w, "parameter,value")?;
    for (k, v) in [
        ("amplitude", c.amplitude),
        ("w_par", c.w_par),
        ("w_perp", c.w_perp),
        ("t0", c.t0),
        ("x0", c.x0),
        ("y0", c.y0),
        ("theta_deg", c.theta.to_degrees()),
    ] {
        writeln!(w, "{k},{v}")?;
    }
    w.flush()?;
    Ok(())
}

fn write_trace_csv(out: &mut Out<'_>, name: &str, r: &OptResult) -> Result<()> {
    let mut w = out.file(name)?;
    writeln!(w, "evaluation,eta")?;
    for (i, v) in &r.trace {
        writeln!(w, "{i},{v}")?;
    }
    w.flush()?;
    Ok(())
}

/// The configured control, optimized first when `optimize.before_run` is set.
fn working_control(cfg: &RunConfig, params: &SimParams, out: &mut Out<'_>) -> Result<ControlSpec> {
    if !cfg.optimize.before_run {
        return Ok(cfg.control_spec());
    }
    let r = optimize(&cfg.opt_problem(*params))?;
    out.value("optimized_objective", r.best_value);
    write_control_csv(out, "best_control.csv", &r.best)?;
    write_trace_csv(out, "optimization_trace.csv", &r)?;
    Ok(r.best)
}

fn common_values(out: &mut Out<'_>, params: &SimParams, cfg: &RunConfig) -> Result<()> {
    out.value("d", params.d);
    out.value("d_prime", params.d_prime);
    out.value("eta_ref", eta_ref(params.d_prime)?);
    out.value("bandwidth", signal_bandwidth(params.c_tilde, cfg.signal.w_par)?);
    Ok(())
}

fn absorb(cfg: &RunConfig, out: &mut Out<'_>) -> Result<()> {
    let params = cfg.params()?;
    common_values(out, &params, cfg)?;
    let control = working_control(cfg, &params, out)?;
    let r = run_absorption(&params, &cfg.signal, &control, None, cfg.solver)?;
    out.value("eta_abs", r.eta_abs);
    out.value("input_photons", r.input_photons);
    out.summary.warnings.extend(r.warnings.iter().cloned());
    let mut w = out.file("series.csv")?;
    write_series_csv(&r.series, &mut w)?;
    w.flush()?;
    let mut w = out.file("spin_wave.csv")?;
    r.state.s.write_csv(&mut w)?;
    w.flush()?;
    Ok(())
}

fn full(cfg: &RunConfig, out: &mut Out<'_>) -> Result<()> {
    let params = cfg.params()?;
    common_values(out, &params, cfg)?;
    let control = working_control(cfg, &params, out)?;
    let control_em = if cfg.emission_control.is_some() { cfg.emission_control_spec() } else { control };
    let r = run_full(
        &params,
        &cfg.signal,
        &control,
        &cfg.manipulation_ramp(&params),
        &control_em,
        cfg.phi(),
        CycleWindows::default(),
        cfg.solver,
    )?;
    out.value("phi_deg", cfg.phi_deg);
    out.value("eta_abs", r.eta_abs);
    out.value("eta_em", r.eta_em);
    out.value("eta_total", r.eta_total);
    out.summary.warnings.extend(r.warnings.iter().cloned());
    let mut w = out.file("absorption_series.csv")?;
    write_series_csv(&r.absorption_series, &mut w)?;
    w.flush()?;
    let mut w = out.file("emission_series.csv")?;
    write_series_csv(&r.emission_series, &mut w)?;
    w.flush()?;
    Ok(())
}

fn sweep_abs(cfg: &RunConfig, out: &mut Out<'_>) -> Result<()> {
    let params = cfg.system.params_at(cfg.sweep_d[0])?;
    let thetas: Vec<f64> = cfg.sweep_theta_deg.iter().map(|t| t.to_radians()).collect();
    let rows = sweep_eta_abs(&cfg.opt_problem(params), &cfg.sweep_d, &thetas)?;
    let mut w = out.file("sweep_abs.csv")?;
    write_sweep_csv(&rows, "theta_deg", &mut w)?;
    w.flush()?;
    let mut w = out.file("eta_ref.csv")?;
    writeln!(w, "d,d_prime,eta_ref")?;
    for &d in &cfg.sweep_d {
        let p = cfg.system.params_at(d)?;
        writeln!(w, "{},{},{}", d, p.d_prime, eta_ref(p.d_prime)?)?;
    }
    w.flush()?;
    if let Some(best) = rows.iter().map(|r| r.eta).reduce(f64::max) {
        out.value("best_eta_abs", best);
    }
    Ok(())
}

fn sweep_phi(cfg: &RunConfig, out: &mut Out<'_>) -> Result<()> {
    let params = cfg.params()?;
    common_values(out, &params, cfg)?;
    let control = working_control(cfg, &params, out)?;
    let phis: Vec<f64> = cfg.sweep_phi_deg.iter().map(|p| p.to_radians()).collect();
    let points = phi_sweep(&params, &cfg.signal, &control, &phis, cfg.solver)?;
    let mut w = out.file("sweep_phi.csv")?;
    writeln!(w, "phi_deg,eta_abs,eta_em,eta_total")?;
    for (deg, p) in cfg.sweep_phi_deg.iter().zip(&points) {
        writeln!(w, "{},{},{},{}", deg, p.report.eta_abs, p.report.eta_em, p.report.eta_total)?;
    }
    w.flush()?;
    let totals: Vec<f64> = points.iter().map(|p| p.report.eta_total).collect();
    out.value("min_eta_total", totals.iter().copied().fold(f64::INFINITY, f64::min));
    out.value("max_eta_total", totals.iter().copied().fold(f64::NEG_INFINITY, f64::max));
    Ok(())
}

fn write_mismatch(out: &mut Out<'_>, name: &str, unit: &str, m: &MismatchSweep) -> Result<()> {
    let mut w = out.file(name)?;
    writeln!(w, "k_mis_{unit},eta")?;
    for (k, e) in &m.samples {
        writeln!(w, "{k},{e}")?;
    }
    w.flush()?;
    out.value("fit_width", m.fit.width);
    out.value("fit_eta0", m.fit.eta0);
    out.value("fit_rms_residual", m.fit.rms_residual);
    out.value("log_fit_width", m.fit.log_width);
    out.value("log_fit_rms_residual", m.fit.rms_log_residual);
    out.value("ledger_error", m.ledger_error);
    Ok(())
}

fn mismatch_abs(cfg: &RunConfig, out: &mut Out<'_>) -> Result<()> {
    let params = cfg.params()?;
    common_values(out, &params, cfg)?;
    let control = working_control(cfg, &params, out)?;
    let ks = symmetric_points(cfg.mismatch.k_max, cfg.mismatch.points);
    let m = absorption_mismatch_sweep(&params, &cfg.signal, &control, &ks, cfg.solver)?;
    write_mismatch(out, "mismatch_abs.csv", "gamma_over_c", &m)?;
    if cfg.mismatch.compensate {
        let problem = crate::optimizer::OptProblem { start: control, ..cfg.opt_problem(params) };
        let rows = compensated_absorption_sweep(&problem, &ks)?;
        let mut w = out.file("mismatch_abs_compensated.csv")?;
        writeln!(w, "k_mis_gamma_over_c,eta,amplitude,w_par,w_perp,t0,x0,y0")?;
        for (k, e, c) in &rows {
            writeln!(w, "{k},{e},{},{},{},{},{},{}", c.amplitude, c.w_par, c.w_perp, c.t0, c.x0, c.y0)?;
        }
        w.flush()?;
    }
    Ok(())
}

fn mismatch_em(cfg: &RunConfig, out: &mut Out<'_>) -> Result<()> {
    let params = cfg.params()?;
    common_values(out, &params, cfg)?;
    let control = working_control(cfg, &params, out)?;
    let ks = symmetric_points(cfg.mismatch.k_max, cfg.mismatch.points);
    let m = emission_mismatch_sweep(&params, &cfg.signal, &control, cfg.phi(), &ks, cfg.solver)?;
    write_mismatch(out, "mismatch_em.csv", "per_L", &m)
}

fn optimize_scenario(cfg: &RunConfig, out: &mut Out<'_>) -> Result<()> {
    let params = cfg.params()?;
    common_values(out, &params, cfg)?;
    let problem = cfg.opt_problem(params);
    let r = optimize(&problem)?;
    out.value("best_eta", r.best_value);
    out.value("evaluations", r.evaluations_used as f64);
    write_control_csv(out, "best_control.csv", &r.best)?;
    write_trace_csv(out, "optimization_trace.csv", &r)?;
    if cfg.optimize.robustness_samples > 0 {
        let mut w = out.file("robustness.csv")?;
        writeln!(w, "parameter,value,eta")?;
        for p in [ControlParam::Amplitude, ControlParam::WidthPar, ControlParam::WidthPerp] {
            for (v, e) in robustness_scan(&problem, &r.best, p, cfg.optimize.robustness_span, cfg.optimize.robustness_samples)? {
                writeln!(w, "{},{v},{e}", p.name())?;
            }
        }
        w.flush()?;
    }
    Ok(())
}

fn feasibility(cfg: &RunConfig, out: &mut Out<'_>) -> Result<()> {
    let f = &cfg.feasibility;
    let cells = feasibility_map(&f.temperatures, &f.kappas, &f.zeeman)?;
    let mut w = out.file("feasibility.csv")?;
    write_feasibility_csv(&cells, &mut w)?;
    w.flush()?;
    let k_s = cfg.system.units()?.k_s_mag;
    let mut w = out.file("manipulation_time.csv")?;
    writeln!(w, "phi_deg,delta_x_per_m,delta_y_per_m,t_manip_s,t_total_s")?;
    for &deg in &f.phis_deg {
        let plan = plan_manipulation(delta_for_angle(deg.to_radians(), k_s), &f.zeeman)?;
        writeln!(w, "{},{},{},{},{}", deg, plan.delta.x, plan.delta.y, plan.duration, plan.total_time)?;
    }
    w.flush()?;
    let backward = plan_manipulation(delta_for_angle(std::f64::consts::PI, k_s), &f.zeeman)?;
    out.value("t_manip_backward_s", backward.duration);
    Ok(())
}

fn coil(cfg: &RunConfig, out: &mut Out<'_>) -> Result<()> {
    let c = &cfg.coil;
    let d = design_coil_with(c.radius, c.gradient, c.rise_time, c.turns, cfg.coil_options())?;
    let mut w = out.file("coil.csv")?;
    d.write_csv(&mut w)?;
    w.flush()?;
    out.value("ampere_turns", d.current * d.n_c as f64);
    out.value("current_A", d.current);
    out.value("voltage_V", d.voltage);
    out.value("inductance_H", d.inductance);
    out.summary.warnings.extend(d.warnings.iter().cloned());
    Ok(())
}

fn adiabatic(cfg: &RunConfig, out: &mut Out<'_>) -> Result<()> {
    let a = &cfg.adiabatic;
    let subspace = Subspace::parse(&a.subspace)?;
    let traced = subspace_params(subspace, a.b0, a.b1, a.tau)?;
    let r = two_level_sweep(&traced, steps_for(&traced))?;
    let mut w = out.file("sweep_trace.csv")?;
    r.write_csv(&mut w)?;
    w.flush()?;
    out.value("survival", r.survival);
    out.value("norm_error", r.norm_error);
    out.value("z", landau_zener_z(traced.v, traced.b)?);
    let mut w = out.file("adiabatic.csv")?;
    writeln!(w, "tau_s,z,p_diabatic,survival")?;
    let n = a.points;
    for i in 0..n {
        let frac = if n == 1 { 0.0 } else { i as f64 / (n - 1) as f64 };
        let tau = a.tau_min * (a.tau_max / a.tau_min).powf(frac);
        let p = subspace_params(subspace, a.b0, a.b1, tau)?;
        let z = landau_zener_z(p.v, p.b)?;
        let s = two_level_sweep(&p, steps_for(&p))?;
        writeln!(w, "{tau:e},{z},{:e},{}", landau_zener_p(p.v, p.b)?, s.survival)?;
    }
    w.flush()?;
    Ok(())
}

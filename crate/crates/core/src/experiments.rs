//! Composite numerical experiments: redirection sweeps and mode-mismatch
//! sweeps built from the solver stages.

use crate::error::Result;
use crate::optimizer::{optimize, OptProblem};
use crate::params::SimParams;
use crate::phasematch::{
    apply_phase_ramp, delta_for_angle, fit_gaussian_suppression, GaussianFit, PhaseRamp, Vec2,
};
use crate::pulses::{ControlSpec, SignalSpec};
use crate::solver::{
    default_emission_window, residual_ramp, run_absorption, run_emission, EfficiencyReport, LedgerSample,
    SolverOptions,
};

/// Ideal manipulation for re-emission along `phi`.
pub fn ideal_manipulation(params: &SimParams, phi: f64) -> PhaseRamp {
    let u = params.units;
    PhaseRamp::from_si(delta_for_angle(phi, u.k_s_mag), u.length)
}

#[derive(Debug, Clone)]
pub struct PhiPoint {
    pub phi: f64,
    pub report: EfficiencyReport,
}

/// Full cycles with the same control for every emission angle; the
/// absorption stage is shared.
pub fn phi_sweep(
    params: &SimParams,
    signal: &SignalSpec,
    control: &ControlSpec,
    phis: &[f64],
    opts: SolverOptions,
) -> Result<Vec<PhiPoint>> {
    let abs = run_absorption(params, signal, control, None, opts)?;
    let mut out = Vec::with_capacity(phis.len());
    for &phi in phis {
        let stored = apply_phase_ramp(
            &abs.state.s,
            &residual_ramp(params, &ideal_manipulation(params, phi), phi),
            params.grid,
        );
        let window = default_emission_window(params, &control.in_rotated_frame(phi), Some(abs.window.duration()));
        let em = run_emission(&stored, params, control, phi, Some(window), opts)?;
        let report = EfficiencyReport {
            eta_abs: abs.eta_abs,
            eta_em: em.report.eta_em,
            eta_total: abs.eta_abs * em.report.eta_em,
            absorption_series: abs.series.clone(),
            emission_series: em.report.emission_series,
            absorption_window: Some(abs.window),
            emission_window: em.report.emission_window,
            warnings: abs.warnings.clone(),
        };
        out.push(PhiPoint { phi, report });
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct MismatchSweep {
    /// `(k_mis, η)` samples.
    pub samples: Vec<(f64, f64)>,
    pub fit: GaussianFit,
    /// Largest relative ledger deviation seen in any run.
    pub ledger_error: f64,
}

fn ledger_dev(series: &[LedgerSample]) -> f64 {
    let Some(first) = series.first() else { return 0.0 };
    let t0 = first.total();
    series.iter().map(|s| ((s.total() - t0) / t0).abs()).fold(0.0, f64::max)
}

/// `η_abs` of a detuned signal for each `k_mis` in units of `γ/c`, the
/// control held fixed.
pub fn absorption_mismatch_sweep(
    params: &SimParams,
    signal: &SignalSpec,
    control: &ControlSpec,
    ks: &[f64],
    opts: SolverOptions,
) -> Result<MismatchSweep> {
    let mut samples = Vec::with_capacity(ks.len());
    let mut ledger_error: f64 = 0.0;
    for &k in ks {
        let s = SignalSpec { k_mis: k, ..*signal };
        let r = run_absorption(params, &s, control, None, opts)?;
        ledger_error = ledger_error.max(ledger_dev(&r.series));
        samples.push((k, r.eta_abs));
    }
    let fit = fit_gaussian_suppression(&samples)?;
    Ok(MismatchSweep { samples, fit, ledger_error })
}

/// `η_abs` per `k_mis` with the control re-optimized at every point, each
/// search starting from the previous optimum.
pub fn compensated_absorption_sweep(base: &OptProblem, ks: &[f64]) -> Result<Vec<(f64, f64, ControlSpec)>> {
    let mut out = Vec::with_capacity(ks.len());
    let mut start = base.start;
    for &k in ks {
        let problem = OptProblem { signal: SignalSpec { k_mis: k, ..base.signal }, start, ..*base };
        let r = optimize(&problem)?;
        start = r.best;
        out.push((k, r.best_value, r.best));
    }
    Ok(out)
}

/// Total efficiency when a residual `k_mis` (units of `1/L`) along the
/// emission direction is left on the stored spin wave. The absorption stage
/// runs once.
pub fn emission_mismatch_sweep(
    params: &SimParams,
    signal: &SignalSpec,
    control: &ControlSpec,
    phi: f64,
    ks: &[f64],
    opts: SolverOptions,
) -> Result<MismatchSweep> {
    let abs = run_absorption(params, signal, control, None, opts)?;
    let base = residual_ramp(params, &ideal_manipulation(params, phi), phi);
    let window = default_emission_window(
        params,
        &control.in_rotated_frame(phi),
        Some(abs.window.duration()),
    );
    let mut samples = Vec::with_capacity(ks.len());
    let mut ledger_error = ledger_dev(&abs.series);
    for &k in ks {
        let extra = Vec2::from_polar(k, phi);
        let ramp = PhaseRamp::from_tilde(base.tilde() + extra, params.units.length);
        let stored = apply_phase_ramp(&abs.state.s, &ramp, params.grid);
        let em = run_emission(&stored, params, control, phi, Some(window), opts)?;
        ledger_error = ledger_error.max(ledger_dev(&em.report.emission_series));
        samples.push((k, abs.eta_abs * em.report.eta_em));
    }
    let fit = fit_gaussian_suppression(&samples)?;
    Ok(MismatchSweep { samples, fit, ledger_error })
}

/// Symmetric sample points `−max, …, max` (`count` of them).
pub fn symmetric_points(max: f64, count: usize) -> Vec<f64> {
    if count <= 1 {
        return vec![0.0];
    }
    (0..count).map(|i| -max + 2.0 * max * i as f64 / (count - 1) as f64).collect()
}

/// Convenience: optimize the full cycle at `phi = 0` and sweep `phis` with
/// that control.
pub fn optimized_phi_sweep(problem: &OptProblem, phis: &[f64]) -> Result<(ControlSpec, Vec<PhiPoint>)> {
    let r = optimize(problem)?;
    let points = phi_sweep(&problem.params, &problem.signal, &r.best, phis, SolverOptions::default())?;
    Ok((r.best, points))
}

//! Gradient-coil design arithmetic and adiabaticity of the ground-state
//! level crossings while the bias field is ramped.

use num_complex::Complex64;

use crate::constants::{GAUSS_PER_TESLA, G_I_RB87, G_S, H, HBAR, MU_0, MU_BOHR, RB87_A_HFS_HZ};
use crate::error::{Result, RouterError};

/// Geometric efficiency factor of a Maxwell pair, `G = 0.64 μ₀ N I / a²`.
pub const MAXWELL_FACTOR: f64 = 0.64;

#[derive(Debug, Clone, PartialEq)]
pub struct CoilDesign {
    /// Coil radius, m.
    pub a: f64,
    pub n_c: u32,
    /// Equilibrium current, A.
    pub current: f64,
    /// Drive voltage, V (inductive part plus `R I` when a resistance is given).
    pub voltage: f64,
    /// Inductance, H.
    pub inductance: f64,
    /// Gradient, G/cm.
    pub gradient: f64,
    /// Rise time, s.
    pub tau: f64,
    /// Gradient per ampere, G/cm/A.
    pub efficiency_coeff: f64,
    pub resistance: Option<f64>,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CoilOptions {
    /// Ohmic resistance, Ω; adds `R I` to the voltage.
    pub resistance: Option<f64>,
    /// Largest ampere-turns the supply can deliver.
    pub max_ampere_turns: Option<f64>,
}

/// Gradient per ampere (G/cm/A) of a Maxwell pair with `n_c` windings per coil.
pub fn coil_efficiency(a: f64, n_c: u32) -> f64 {
    // T/m per ampere → G/cm per ampere
    MAXWELL_FACTOR * MU_0 * n_c as f64 / (a * a) * GAUSS_PER_TESLA / 100.0
}

/// Inductance `π N² a μ₀` of the pair.
pub fn coil_inductance(a: f64, n_c: u32) -> f64 {
    std::f64::consts::PI * (n_c as f64).powi(2) * a * MU_0
}

/// Ampere-turns needed for `gradient` (G/cm) at radius `a` (m).
pub fn ampere_turns(a: f64, gradient: f64) -> f64 {
    gradient / coil_efficiency(a, 1)
}

pub fn design_coil(a: f64, gradient: f64, tau: f64, n_c: u32) -> Result<CoilDesign> {
    design_coil_with(a, gradient, tau, n_c, CoilOptions::default())
}

/// Current and voltage that reach `gradient` (G/cm) within `tau` (s).
pub fn design_coil_with(a: f64, gradient: f64, tau: f64, n_c: u32, opts: CoilOptions) -> Result<CoilDesign> {
    if !(a > 0.0) || !(tau > 0.0) || n_c == 0 || !(gradient >= 0.0) {
        return Err(RouterError::Parameter(format!(
            "coil needs a > 0, tau > 0, n_c > 0, gradient >= 0 (got {a}, {tau}, {n_c}, {gradient})"
        )));
    }
    let efficiency_coeff = coil_efficiency(a, n_c);
    let current = gradient / efficiency_coeff;
    let inductance = coil_inductance(a, n_c);
    let mut voltage = inductance * current / tau;
    let mut warnings = Vec::new();
    if let Some(r) = opts.resistance {
        voltage += r * current;
    }
    if let Some(max) = opts.max_ampere_turns {
        let needed = current * n_c as f64;
        if needed > max {
            warnings.push(format!("needs {needed:.3} ampere-turns, supply limit is {max}"));
        }
    }
    Ok(CoilDesign {
        a,
        n_c,
        current,
        voltage,
        inductance,
        gradient,
        tau,
        efficiency_coeff,
        resistance: opts.resistance,
        warnings,
    })
}

impl CoilDesign {
    /// Gradient reached with the design current.
    pub fn achieved_gradient(&self) -> f64 {
        coil_efficiency(self.a, self.n_c) * self.current
    }

    /// Rise time `L I/(V − R I)`.
    pub fn achieved_rise_time(&self) -> f64 {
        let drop = self.resistance.unwrap_or(0.0) * self.current;
        coil_inductance(self.a, self.n_c) * self.current / (self.voltage - drop)
    }

    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "a_m,N_c,I_A,V_c_V,L_H,G_G_per_cm,tau_s,eta_G_per_cm_per_A,NI_A")?;
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{}",
            self.a,
            self.n_c,
            self.current,
            self.voltage,
            self.inductance,
            self.gradient,
            self.tau,
            self.efficiency_coeff,
            self.current * self.n_c as f64
        )?;
        Ok(())
    }
}

/// Landau–Zener parameter `z = v²/|2b|`.
pub fn landau_zener_z(v: f64, b: f64) -> Result<f64> {
    if b == 0.0 {
        return Err(RouterError::DegenerateSweep);
    }
    Ok(v * v / (2.0 * b).abs())
}

/// Diabatic transition estimate `e^{−πz}` used for the adiabaticity bound.
/// For `H/ħ = v σ_x + b t σ_z` the exact infinite-sweep value is
/// `e^{−2πz}` (see [`landau_zener_p_exact`]), so this overestimates the
/// transition probability.
pub fn landau_zener_p(v: f64, b: f64) -> Result<f64> {
    Ok((-std::f64::consts::PI * landau_zener_z(v, b)?).exp())
}

/// Exact diabatic probability `e^{−2πz}` of an infinite linear sweep.
pub fn landau_zener_p_exact(v: f64, b: f64) -> Result<f64> {
    Ok((-2.0 * std::f64::consts::PI * landau_zener_z(v, b)?).exp())
}

/// Two-level blocks of the rubidium-87 ground manifold.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Subspace {
    H1,
    H2,
    H3,
}

impl Subspace {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "H1" | "h1" => Ok(Self::H1),
            "H2" | "h2" => Ok(Self::H2),
            "H3" | "h3" => Ok(Self::H3),
            _ => Err(RouterError::Config(format!("unknown subspace '{s}'"))),
        }
    }
}

/// `H/ħ = v σ_x + (ε + b t) σ_z` on `t ∈ [0, τ]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoLevelParams {
    /// Coupling, rad/s.
    pub v: f64,
    /// Static splitting, rad/s.
    pub eps: f64,
    /// Sweep rate, rad/s².
    pub b: f64,
    pub subspace: Subspace,
    /// Hyperfine constant, J.
    pub a_hfs: f64,
    /// Bias and ramp amplitude, G.
    pub b0: f64,
    pub b1: f64,
    pub g_s: f64,
    pub g_i: f64,
    /// Ramp duration, s.
    pub tau: f64,
}

/// Parameters of one block for a bias `b0` and a ramp to `b0 + b1` (G) over `tau` (s).
pub fn subspace_params(subspace: Subspace, b0: f64, b1: f64, tau: f64) -> Result<TwoLevelParams> {
    if !(tau > 0.0) {
        return Err(RouterError::Parameter(format!("ramp duration must be positive, got {tau}")));
    }
    let a = H * RB87_A_HFS_HZ;
    let (gs, gi) = (G_S, G_I_RB87);
    let zeeman = |b: f64| MU_BOHR * (gs - gi) / 2.0 * b / GAUSS_PER_TESLA;
    let half_sqrt3 = 3f64.sqrt() / 2.0;
    let (v, eps, rate) = match subspace {
        Subspace::H1 => (half_sqrt3 * a, -a / 2.0 + zeeman(b0), zeeman(b1) / tau),
        Subspace::H2 => (a, -zeeman(b0), -zeeman(b1) / tau),
        Subspace::H3 => (half_sqrt3 * a, a / 2.0 - zeeman(b0), -zeeman(b1) / tau),
    };
    Ok(TwoLevelParams {
        v: v / HBAR,
        eps: eps / HBAR,
        b: rate / HBAR,
        subspace,
        a_hfs: a,
        b0,
        b1,
        g_s: gs,
        g_i: gi,
        tau,
    })
}

/// Lower bound on `z` quoted for the hyperfine blocks: the full hyperfine
/// constant as coupling and the electron-spin ramp rate of `b1` over `tau`.
pub fn hyperfine_z_bound(b1: f64, tau: f64) -> Result<f64> {
    let v = H * RB87_A_HFS_HZ / HBAR;
    let b = MU_BOHR * (G_S - G_I_RB87) / 2.0 * b1 / GAUSS_PER_TESLA / tau / HBAR;
    landau_zener_z(v, b)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepSample {
    pub t: f64,
    pub psi: [Complex64; 2],
    /// Overlap with the followed instantaneous eigenstate.
    pub survival: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub survival: f64,
    pub trace: Vec<SweepSample>,
    /// Largest deviation of `|ψ|²` from one.
    pub norm_error: f64,
}

impl SweepResult {
    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "t_s,re0,im0,re1,im1,survival")?;
        for s in &self.trace {
            writeln!(w, "{},{},{},{},{},{}", s.t, s.psi[0].re, s.psi[0].im, s.psi[1].re, s.psi[1].im, s.survival)?;
        }
        Ok(())
    }
}

/// Eigenvector of `v σ_x + w σ_z` on the upper (`upper = true`) or lower branch.
fn eigenvector(v: f64, w: f64, upper: bool) -> [f64; 2] {
    let half = 0.5 * v.atan2(w);
    if upper {
        [half.cos(), half.sin()]
    } else {
        [-half.sin(), half.cos()]
    }
}

fn overlap(e: [f64; 2], psi: [Complex64; 2]) -> f64 {
    (psi[0] * e[0] + psi[1] * e[1]).norm_sqr()
}

/// Integrates the sweep over `[t_start, t_end]` in `steps` exact midpoint
/// propagators, starting on the instantaneous eigenstate closest to `(1, 0)`
/// and following that branch. At most `max_trace` samples are kept.
pub fn sweep_interval(
    v: f64,
    eps: f64,
    b: f64,
    t_start: f64,
    t_end: f64,
    steps: usize,
    max_trace: usize,
) -> Result<SweepResult> {
    if steps == 0 || !(t_end > t_start) {
        return Err(RouterError::Parameter("sweep needs steps > 0 and t_end > t_start".into()));
    }
    let dt = (t_end - t_start) / steps as f64;
    let omega_max = |t: f64| v.hypot(eps + b * t);
    let phase = omega_max(t_start).max(omega_max(t_end)) * dt;
    if phase > 0.1 {
        return Err(RouterError::Resolution { phase_per_step: phase, limit: 0.1 });
    }
    let w0 = eps + b * t_start;
    let up = eigenvector(v, w0, true);
    let upper = up[0].abs() >= eigenvector(v, w0, false)[0].abs();
    let e0 = eigenvector(v, w0, upper);
    let mut psi = [Complex64::new(e0[0], 0.0), Complex64::new(e0[1], 0.0)];
    let every = (steps / max_trace.max(1)).max(1);
    let mut trace = vec![SweepSample { t: t_start, psi, survival: 1.0 }];
    let mut norm_error: f64 = 0.0;
    let constant = b == 0.0;
    for n in 0..steps {
        let w = eps + b * (t_start + (n as f64 + 0.5) * dt);
        let om = v.hypot(w);
        let (s, c) = (om * dt).sin_cos();
        let (nx, nz) = if om > 0.0 { (v / om, w / om) } else { (0.0, 0.0) };
        let mi_s = Complex64::new(0.0, -s);
        let p0 = psi[0] * (c + mi_s * nz) + psi[1] * (mi_s * nx);
        let p1 = psi[0] * (mi_s * nx) + psi[1] * (c - mi_s * nz);
        psi = [p0, p1];
        norm_error = norm_error.max((psi[0].norm_sqr() + psi[1].norm_sqr() - 1.0).abs());
        if (n + 1) % every == 0 || n + 1 == steps {
            let t = t_start + (n + 1) as f64 * dt;
            let survival = if constant { 1.0 } else { overlap(eigenvector(v, eps + b * t, upper), psi) };
            trace.push(SweepSample { t, psi, survival });
        }
    }
    let survival = trace.last().expect("trace is nonempty").survival;
    Ok(SweepResult { survival, trace, norm_error })
}

/// Evolution over the physical ramp `t ∈ [0, τ]`.
pub fn two_level_sweep(params: &TwoLevelParams, steps: usize) -> Result<SweepResult> {
    sweep_interval(params.v, params.eps, params.b, 0.0, params.tau, steps, 2000)
}

/// Fewest steps satisfying the per-step phase limit with a safety factor of 2.
pub fn steps_for(params: &TwoLevelParams) -> usize {
    let om = params.v.hypot(params.eps).max(params.v.hypot(params.eps + params.b * params.tau));
    ((om * params.tau / 0.05).ceil() as usize).max(1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn coil_examples() {
        let ni = ampere_turns(0.01, 50.0);
        assert!((ni - 62.2).abs() < 0.1, "{ni}");
        let d = design_coil(0.01, 50.0, 5e-6, 63).unwrap();
        assert!((d.current - 1.0).abs() < 0.02);
        assert!((d.voltage - 31.0).abs() < 0.5, "{}", d.voltage);
        assert!((d.inductance - 1.567e-4).abs() < 1e-7);
        let zero = design_coil(0.01, 0.0, 5e-6, 63).unwrap();
        assert_eq!((zero.current, zero.voltage), (0.0, 0.0));
        assert!(design_coil(0.0, 50.0, 5e-6, 63).is_err());
    }

    #[test]
    fn coil_round_trip() {
        let opts = CoilOptions { resistance: Some(0.8), max_ampere_turns: None };
        for &(a, g, tau, n) in &[(0.01, 50.0, 5e-6, 63), (0.02, 7.0, 1e-7, 10), (0.005, 120.0, 2e-5, 400)] {
            let d = design_coil_with(a, g, tau, n, opts).unwrap();
            assert!(((d.achieved_gradient() - g) / g).abs() < 1e-12);
            assert!(((d.achieved_rise_time() - tau) / tau).abs() < 1e-12);
        }
    }

    #[test]
    fn coil_supply_limit_warns() {
        let opts = CoilOptions { resistance: None, max_ampere_turns: Some(10.0) };
        let d = design_coil_with(0.01, 50.0, 5e-6, 63, opts).unwrap();
        assert_eq!(d.warnings.len(), 1);
    }

    #[test]
    fn landau_zener_examples() {
        assert!(matches!(landau_zener_p(1.0, 0.0), Err(RouterError::DegenerateSweep)));
        let z = 2f64.ln() / std::f64::consts::PI;
        let b = 1.0 / (2.0 * z);
        assert!((landau_zener_p(1.0, b).unwrap() - 0.5).abs() < 1e-15);
        assert!(landau_zener_p(1.0, 1e30).unwrap() >= 1.0 - 1e-20);
        let p = subspace_params(Subspace::H1, 5000.0, 500.0, 1e-6).unwrap();
        let z = landau_zener_z(p.v, p.b).unwrap();
        assert!(z > 1e4);
        assert_eq!(landau_zener_p(p.v, p.b).unwrap(), 0.0);
    }

    #[test]
    fn subspace_recipes() {
        let h1 = subspace_params(Subspace::H1, 5000.0, 250.0, 1e-6).unwrap();
        assert!((h1.v - 1.86e10).abs() < 0.01e10, "{}", h1.v);
        let h2 = subspace_params(Subspace::H2, 0.0, 250.0, 1e-6).unwrap();
        assert_eq!(h2.eps, 0.0);
        let h3 = subspace_params(Subspace::H3, 5000.0, 250.0, 1e-6).unwrap();
        assert_eq!(h1.v, h3.v);
        assert!((h1.eps + h3.eps).abs() < 1e-6 * h1.eps.abs());
        assert_eq!(h1.b, -h3.b);
        assert!(Subspace::parse("H4").is_err());
    }

    #[test]
    fn z_bound_scaling() {
        // about 50 per nanosecond of ramp at 500 G
        let z = hyperfine_z_bound(500.0, 1e-9).unwrap();
        assert!((z - 50.0).abs() < 5.0, "{z}");
        let z2 = hyperfine_z_bound(500.0, 2e-9).unwrap();
        assert!((z2 / z - 2.0).abs() < 1e-12);
    }

    #[test]
    fn stationary_hamiltonian_survives() {
        let p = TwoLevelParams { b: 0.0, b1: 0.0, ..subspace_params(Subspace::H1, 5000.0, 0.0, 1e-8).unwrap() };
        let r = two_level_sweep(&p, steps_for(&p)).unwrap();
        assert_eq!(r.survival, 1.0);
        assert!(r.norm_error < 1e-10);
    }

    #[test]
    fn resolution_is_checked() {
        let p = subspace_params(Subspace::H1, 5000.0, 250.0, 1e-6).unwrap();
        assert!(matches!(two_level_sweep(&p, 100), Err(RouterError::Resolution { .. })));
    }

    #[test]
    fn physical_ramp_is_adiabatic() {
        let p = subspace_params(Subspace::H1, 5000.0, 250.0, 1e-6).unwrap();
        let r = two_level_sweep(&p, steps_for(&p)).unwrap();
        assert!(r.survival > 1.0 - 1e-6, "{}", r.survival);
        assert!(r.norm_error < 1e-10);
    }

    #[test]
    fn crossing_matches_landau_zener() {
        // full crossing, ±5 widths around t_c = −ε/b; z chosen moderate
        let (v, b) = (1.0, 1.0 / (2.0 * 1.2));
        let eps = 0.0;
        let width = v / b;
        let r = sweep_interval(v, eps, b, -60.0 * width, 60.0 * width, 400_000, 10).unwrap();
        let p = landau_zener_p_exact(v, b).unwrap();
        // the diabatic fraction leaves the followed branch
        assert!((1.0 - r.survival - p).abs() < 1e-5, "{} vs {p}", 1.0 - r.survival);
        assert!(landau_zener_p(v, b).unwrap() > p);
        assert!(r.norm_error < 1e-10);
    }

    #[test]
    fn large_z_window_agrees_with_formula() {
        // z > 10, sweep over ±5 crossing widths around t_c = −ε/b
        let p = subspace_params(Subspace::H2, 5000.0, 250.0, 1e-6).unwrap();
        let z = landau_zener_z(p.v, p.b).unwrap();
        assert!(z > 10.0);
        let tc = -p.eps / p.b;
        let width = (p.v / p.b).abs();
        let (t0, t1) = (tc - 5.0 * width, tc + 5.0 * width);
        let steps = ((p.v.hypot(p.b * 5.0 * width) * (t1 - t0)) / 0.05).ceil() as usize;
        let r = sweep_interval(p.v, p.eps, p.b, t0, t1, steps, 10).unwrap();
        let analytic = 1.0 - landau_zener_p(p.v, p.b).unwrap();
        assert!((r.survival - analytic).abs() < 1e-6, "{} vs {analytic}", r.survival);
    }
}

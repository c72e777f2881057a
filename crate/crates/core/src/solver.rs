//! Split-step integration of the reduced envelope equations
//!
//! ```text
//! (∂t + c̃ ∂x) ℰ = i g̃ P̃
//!          ∂t P̃ = −(1 + iΔ̃) P̃ + i Ω̃ S̃ + i g̃ ñ ℰ
//!          ∂t S̃ = i Ω̃* P̃
//! ```
//!
//! Each step shifts `ℰ` by exactly one cell (`dt = dx/c̃`) and then integrates
//! the pointwise linear system over `dt` with classical RK4, the control
//! being evaluated at the stage times. The loss `2∫|P̃|²/ñ` is carried as an
//! extra RK4 component so the photon/excitation ledger closes to the
//! integrator's order.

use num_complex::Complex64;

use crate::error::{Result, RouterError};
use crate::field::ComplexField;
use crate::params::SimParams;
use crate::phasematch::{apply_phase_ramp, delta_for_angle, PhaseRamp, Vec2};
use crate::pulses::{ControlSpec, SignalSpec};

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// Pulse tails beyond this many e-widths are treated as absent when choosing
/// default windows (intensity below `e^{-24}`).
pub const TAIL_WIDTHS: f64 = 3.5;

/// Emission is counted for this many absorption-window durations past the
/// arrival of the emission control.
pub const EMISSION_COUNT_FACTOR: f64 = 3.0;

/// Emission stops early once the control has passed and the excitation left
/// in `P̃` and on-grid `ℰ` is below this fraction of the initial `N_s`.
pub const EMISSION_DRAIN_TOL: f64 = 1e-7;

/// Simulation time interval `[start, end]` in units of `1/γ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Window {
    pub start: f64,
    pub end: f64,
}

impl Window {
    pub fn new(start: f64, end: f64) -> Result<Self> {
        if !(end > start) || !start.is_finite() || !end.is_finite() {
            return Err(RouterError::Parameter(format!("invalid window [{start}, {end}]")));
        }
        Ok(Self { start, end })
    }

    pub fn duration(&self) -> f64 {
        self.end - self.start
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    /// Spontaneous decay of `P̃`. Disabling it replaces `(1 + iΔ̃)` by `iΔ̃`.
    pub decay: bool,
    /// Ledger samples are taken every this many steps (and at the end).
    pub record_every: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { decay: true, record_every: 64 }
    }
}

/// One ledger sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LedgerSample {
    pub t: f64,
    pub n_ph: f64,
    pub n_e: f64,
    pub n_s: f64,
    pub loss: f64,
    pub leaked: f64,
}

impl LedgerSample {
    pub fn total(&self) -> f64 {
        self.n_ph + self.n_e + self.n_s + self.loss + self.leaked
    }
}

/// Writes a ledger series as CSV.
pub fn write_series_csv<W: std::io::Write>(series: &[LedgerSample], mut w: W) -> Result<()> {
    writeln!(w, "t_tilde,N_ph,N_e,N_s,loss,leaked")?;
    for s in series {
        writeln!(w, "{},{},{},{},{},{}", s.t, s.n_ph, s.n_e, s.n_s, s.loss, s.leaked)?;
    }
    Ok(())
}

/// Fields and accumulated counters of a running simulation.
#[derive(Debug, Clone, PartialEq)]
pub struct SimState {
    pub t: f64,
    pub e: ComplexField,
    pub p: ComplexField,
    pub s: ComplexField,
    /// Integrated spontaneous-emission loss.
    pub loss_accum: f64,
    /// Photons that left through the outflow boundary.
    pub leaked_photons: f64,
    /// Incoming photons still upstream of the inflow boundary.
    pub pending_photons: f64,
    pub steps: usize,
}

impl SimState {
    pub fn vacuum(params: &SimParams, depth: f64, t: f64) -> Self {
        let z = ComplexField::zeros(params.grid, depth);
        Self {
            t,
            e: z.clone(),
            p: z.clone(),
            s: z,
            loss_accum: 0.0,
            leaked_photons: 0.0,
            pending_photons: 0.0,
            steps: 0,
        }
    }

    /// Photons in the signal field, including the part not yet on the grid.
    pub fn photons(&self) -> f64 {
        photon_number(&self.e) + self.pending_photons
    }

    pub fn ledger(&self, params: &SimParams) -> LedgerSample {
        let (n_e, n_s) = excitation_numbers(self, params);
        LedgerSample {
            t: self.t,
            n_ph: self.photons(),
            n_e,
            n_s,
            loss: self.loss_accum,
            leaked: self.leaked_photons,
        }
    }
}

/// `⟨N_ph⟩ = (1/V)∫|ℰ|² d³r` by grid quadrature with the analytic depth factor.
pub fn photon_number(e: &ComplexField) -> f64 {
    e.norm()
}

/// Cell densities `ñ` of the equatorial slice.
pub fn density_map(params: &SimParams) -> Vec<f64> {
    let g = params.grid;
    let (dx, mut out) = (g.dx(), Vec::with_capacity(g.len()));
    for j in 0..g.ny {
        let y = g.y(j);
        for i in 0..g.nx {
            let x = g.x(i);
            out.push(params.density.cell_density(x - 0.5 * dx, x + 0.5 * dx, y));
        }
    }
    out
}

fn weighted_excitation(field: &ComplexField, density: &[f64]) -> f64 {
    let sum: f64 = field
        .data
        .iter()
        .zip(density)
        .filter(|(_, &n)| n > 0.0)
        .map(|(v, &n)| v.norm_sqr() / n)
        .sum();
    sum * field.grid.cell_area() * field.depth
}

/// `(N_e, N_s)`: quadrature of `|P̃|²/ñ` and `|S̃|²/ñ` over the cloud.
pub fn excitation_numbers(state: &SimState, params: &SimParams) -> (f64, f64) {
    let density = density_map(params);
    (weighted_excitation(&state.p, &density), weighted_excitation(&state.s, &density))
}

/// Control values at the cloud cells, evaluated from per-cell projections so
/// that each time sample costs one exponential per cell.
struct ControlSampler {
    perp: Vec<f64>,
    proj: Vec<f64>,
    w_par: f64,
    t0: f64,
    c_tilde: f64,
    zero: bool,
}

impl ControlSampler {
    fn new(control: &ControlSpec, params: &SimParams, cells: &[usize]) -> Self {
        let g = params.grid;
        let (cx, sy) = control.direction();
        let mut perp = Vec::with_capacity(cells.len());
        let mut proj = Vec::with_capacity(cells.len());
        for &k in cells {
            let (x, y) = (g.x(k % g.nx), g.y(k / g.nx));
            let (dx, dy) = (x - control.x0, y - control.y0);
            let u_perp = (-dx * sy + dy * cx) / control.w_perp;
            perp.push(control.amplitude * (-(u_perp * u_perp)).exp());
            proj.push(dx * cx + dy * sy);
        }
        Self {
            perp,
            proj,
            w_par: control.w_par,
            t0: control.t0,
            c_tilde: params.c_tilde,
            zero: control.amplitude == 0.0,
        }
    }

    fn sample(&self, t: f64, out: &mut [f64]) {
        if self.zero {
            out.fill(0.0);
            return;
        }
        let s = self.c_tilde * (t - self.t0);
        let inv_w = 1.0 / self.w_par;
        for ((o, &a), &p) in out.iter_mut().zip(&self.perp).zip(&self.proj) {
            let u = (p - s) * inv_w;
            *o = a * (-(u * u)).exp();
        }
    }
}

/// Free signal entering through the inflow column.
struct Inflow {
    spec: SignalSpec,
    x_in: f64,
    /// `Σ_j |ℰ(x_in, y_j)|²` shape factor times cell area and depth, at peak.
    column_peak: f64,
}

impl Inflow {
    fn new(spec: SignalSpec, params: &SimParams) -> Self {
        let g = params.grid;
        let a = spec.amplitude();
        let rows: f64 = (0..g.ny)
            .map(|j| {
                let b = g.y(j) / spec.w_perp;
                a * a * (-2.0 * b * b).exp()
            })
            .sum();
        Self { spec, x_in: g.x(0), column_peak: rows * g.cell_area() * spec.depth() }
    }

    fn column_norm(&self, t: f64, c_tilde: f64) -> f64 {
        let u = (self.x_in - c_tilde * (t - self.spec.arrival_t)) / self.spec.w_par;
        self.column_peak * (-2.0 * u * u).exp()
    }

    /// Photons injected at steps `n+1, n+2, …` after time `t`.
    fn pending_after(&self, t: f64, dt: f64, c_tilde: f64) -> f64 {
        let w = self.spec.w_par;
        let mut sum = 0.0;
        let mut k = 1u64;
        loop {
            let tk = t + k as f64 * dt;
            let xi = self.x_in - c_tilde * (tk - self.spec.arrival_t);
            if xi < -12.0 * w {
                break;
            }
            sum += self.column_norm(tk, c_tilde);
            k += 1;
        }
        sum
    }
}

/// Integrator bound to one parameter set, control and optional inflow.
pub struct Stepper {
    params: SimParams,
    opts: SolverOptions,
    /// Cloud cells (flat indices) and their densities.
    cells: Vec<usize>,
    cell_density: Vec<f64>,
    control: ControlSampler,
    inflow: Option<Inflow>,
    omega_start: Vec<f64>,
    omega_mid: Vec<f64>,
    omega_end: Vec<f64>,
    omega_time: f64,
}

impl Stepper {
    pub fn new(
        params: &SimParams,
        control: &ControlSpec,
        signal: Option<&SignalSpec>,
        opts: SolverOptions,
    ) -> Result<Self> {
        control.validate()?;
        if let Some(s) = signal {
            s.validate()?;
        }
        let density = density_map(params);
        let cells: Vec<usize> = (0..density.len()).filter(|&k| density[k] > 0.0).collect();
        let cell_density = cells.iter().map(|&k| density[k]).collect();
        let sampler = ControlSampler::new(control, params, &cells);
        let n = cells.len();
        Ok(Self {
            params: *params,
            opts,
            cells,
            cell_density,
            control: sampler,
            inflow: signal.map(|s| Inflow::new(*s, params)),
            omega_start: vec![0.0; n],
            omega_mid: vec![0.0; n],
            omega_end: vec![0.0; n],
            omega_time: f64::NAN,
        })
    }

    pub fn params(&self) -> &SimParams {
        &self.params
    }

    /// Initial state at `t`: the free signal already on the grid and the
    /// remainder pending upstream.
    pub fn initial_state(&self, t: f64) -> SimState {
        let depth = self.inflow.as_ref().map_or(1.0, |f| f.spec.depth());
        let mut state = SimState::vacuum(&self.params, depth, t);
        if let Some(inflow) = &self.inflow {
            let g = self.params.grid;
            let c = self.params.c_tilde;
            state.e = ComplexField::from_fn(g, depth, |x, y| inflow.spec.value(x, y, t, c));
            state.pending_photons = inflow.pending_after(t, self.params.dt(), c);
        }
        state
    }

    /// Advances `state` by one locked time step.
    pub fn step(&mut self, state: &mut SimState) {
        let g = self.params.grid;
        let c = self.params.c_tilde;
        let dt = self.params.dt();
        let t = state.t;
        let t1 = t + dt;
        let (nx, ny) = (g.nx, g.ny);
        let depth_area = g.cell_area() * state.e.depth;

        // (a) exact advection by one cell
        let mut out = 0.0;
        for j in 0..ny {
            let row = &mut state.e.data[j * nx..(j + 1) * nx];
            out += row[nx - 1].norm_sqr();
            row.copy_within(0..nx - 1, 1);
            row[0] = match &self.inflow {
                Some(f) => f.spec.value(g.x(0), g.y(j), t1, c),
                None => ZERO,
            };
        }
        state.leaked_photons += out * depth_area;
        if let Some(f) = &self.inflow {
            state.pending_photons -= f.column_norm(t1, c);
        }

        // (b) pointwise RK4 on (ℰ, P̃, S̃, loss)
        if self.omega_time != t {
            self.control.sample(t, &mut self.omega_start);
        } else {
            std::mem::swap(&mut self.omega_start, &mut self.omega_end);
        }
        self.control.sample(t + 0.5 * dt, &mut self.omega_mid);
        self.control.sample(t1, &mut self.omega_end);
        self.omega_time = t1;

        let gc = self.params.g_tilde;
        let decay = if self.opts.decay { 1.0 } else { 0.0 };
        let rate = Complex64::new(decay, self.params.delta_tilde);
        let i = Complex64::i();
        let h = dt;
        let mut loss = 0.0;
        for (n, &k) in self.cells.iter().enumerate() {
            let rho = self.cell_density[n];
            let (o1, o2, o3) = (self.omega_start[n], self.omega_mid[n], self.omega_end[n]);
            let (e0, p0, s0) = (state.e.data[k], state.p.data[k], state.s.data[k]);
            let f = |e: Complex64, p: Complex64, s: Complex64, om: f64| {
                (
                    i * gc * p,
                    -rate * p + i * (om * s + gc * rho * e),
                    i * om * p,
                )
            };
            let (ke1, kp1, ks1) = f(e0, p0, s0, o1);
            let (e2, p2, s2) = (e0 + ke1 * (0.5 * h), p0 + kp1 * (0.5 * h), s0 + ks1 * (0.5 * h));
            let (ke2, kp2, ks2) = f(e2, p2, s2, o2);
            let (e3, p3, s3) = (e0 + ke2 * (0.5 * h), p0 + kp2 * (0.5 * h), s0 + ks2 * (0.5 * h));
            let (ke3, kp3, ks3) = f(e3, p3, s3, o2);
            let (e4, p4, s4) = (e0 + ke3 * h, p0 + kp3 * h, s0 + ks3 * h);
            let (ke4, kp4, ks4) = f(e4, p4, s4, o3);
            let w = h / 6.0;
            state.e.data[k] = e0 + (ke1 + (ke2 + ke3) * 2.0 + ke4) * w;
            state.p.data[k] = p0 + (kp1 + (kp2 + kp3) * 2.0 + kp4) * w;
            state.s.data[k] = s0 + (ks1 + (ks2 + ks3) * 2.0 + ks4) * w;
            loss += (p0.norm_sqr() + 2.0 * (p2.norm_sqr() + p3.norm_sqr()) + p4.norm_sqr()) / rho;
        }
        state.loss_accum += 2.0 * decay * loss * (h / 6.0) * depth_area;
        state.t = t1;
        state.steps += 1;
    }

    /// Steps from `state.t` until `end` (inclusive of the last partial
    /// overshoot being avoided: stops at the last step not exceeding `end`).
    pub fn run_until(
        &mut self,
        state: &mut SimState,
        end: f64,
        series: &mut Vec<LedgerSample>,
    ) -> Result<()> {
        let dt = self.params.dt();
        let n_steps = ((end - state.t) / dt).floor().max(0.0) as usize;
        let density = density_map(&self.params);
        let record = |state: &SimState, series: &mut Vec<LedgerSample>| -> Result<()> {
            let (n_e, n_s) = (
                weighted_excitation(&state.p, &density),
                weighted_excitation(&state.s, &density),
            );
            let sample = LedgerSample {
                t: state.t,
                n_ph: state.photons(),
                n_e,
                n_s,
                loss: state.loss_accum,
                leaked: state.leaked_photons,
            };
            if !sample.total().is_finite() {
                return Err(RouterError::Blowup { step: state.steps, t: state.t });
            }
            series.push(sample);
            Ok(())
        };
        if series.is_empty() {
            record(state, series)?;
        }
        let every = self.opts.record_every.max(1);
        for n in 1..=n_steps {
            self.step(state);
            if n % every == 0 || n == n_steps {
                record(state, series)?;
            }
        }
        Ok(())
    }
}

/// One locked time step of the full system (no inflow: a zero column enters).
pub fn step(state: &SimState, params: &SimParams, control: &ControlSpec) -> Result<SimState> {
    let mut stepper = Stepper::new(params, control, None, SolverOptions::default())?;
    let mut next = state.clone();
    stepper.step(&mut next);
    if !(next.e.is_finite() && next.p.is_finite() && next.s.is_finite()) {
        return Err(RouterError::Blowup { step: next.steps, t: next.t });
    }
    Ok(next)
}

fn control_half_window(control: &ControlSpec, params: &SimParams) -> f64 {
    (TAIL_WIDTHS * control.w_par + params.density.radius()) / params.c_tilde
}

/// Default absorption window: from the earlier pulse tail entering to the
/// later pulse tail leaving, `TAIL_WIDTHS` e-widths on either side.
pub fn default_absorption_window(
    params: &SimParams,
    signal: &SignalSpec,
    control: &ControlSpec,
) -> Window {
    let c = params.c_tilde;
    let r = params.density.radius();
    let tail_s = TAIL_WIDTHS * signal.w_par;
    // signal leading tail reaches the inflow boundary
    let s_start = signal.arrival_t + (params.grid.x_min() - tail_s) / c;
    let s_end = signal.arrival_t + (r + tail_s) / c;
    let arrival = control.arrival_time(c);
    let half = control_half_window(control, params);
    Window { start: s_start.min(arrival - half), end: s_end.max(arrival + half) }
}

/// Default emission window: starts a control half-window before arrival and
/// counts for `EMISSION_COUNT_FACTOR` times `absorption_duration` after it.
/// Without an absorption stage the control's own window (two half-windows)
/// stands in for the absorption window.
pub fn default_emission_window(
    params: &SimParams,
    control: &ControlSpec,
    absorption_duration: Option<f64>,
) -> Window {
    let arrival = control.arrival_time(params.c_tilde);
    let half = control_half_window(control, params);
    let span = absorption_duration.unwrap_or(2.0 * half);
    Window { start: arrival - half, end: arrival + EMISSION_COUNT_FACTOR * span }
}

#[derive(Debug, Clone)]
pub struct AbsorptionResult {
    pub state: SimState,
    pub eta_abs: f64,
    /// Photons supplied by the signal (ledger total at the start).
    pub input_photons: f64,
    pub series: Vec<LedgerSample>,
    pub window: Window,
    pub warnings: Vec<String>,
}

/// Evolves vacuum plus incoming signal through the window; `η_abs` is the
/// stored spin-wave excitation relative to the input photon number.
pub fn run_absorption(
    params: &SimParams,
    signal: &SignalSpec,
    control: &ControlSpec,
    window: Option<Window>,
    opts: SolverOptions,
) -> Result<AbsorptionResult> {
    let window = window.unwrap_or_else(|| default_absorption_window(params, signal, control));
    let mut stepper = Stepper::new(params, control, Some(signal), opts)?;
    let mut state = stepper.initial_state(window.start);
    let mut series = Vec::new();
    stepper.run_until(&mut state, window.end, &mut series)?;
    let input = series[0].total();
    let last = *series.last().expect("series has the initial sample");
    let mut warnings = Vec::new();
    let c = params.c_tilde;
    let peak_x = c * (state.t - signal.arrival_t);
    if peak_x < params.grid.x_extent * 0.5 + 2.0 * signal.w_par {
        warnings.push(format!(
            "absorption window ends at t={:.4} with the signal still near the cloud",
            state.t
        ));
    }
    if state.pending_photons > 1e-9 * input {
        warnings.push(format!("{:.3e} signal photons never entered the grid", state.pending_photons));
    }
    Ok(AbsorptionResult {
        eta_abs: if input > 0.0 { last.n_s / input } else { 0.0 },
        input_photons: input,
        state,
        series,
        window,
        warnings,
    })
}

/// Rotates a spin wave about the cloud center so that the direction `phi`
/// of the lab frame becomes the `+x` axis of the new frame. The per-atom
/// amplitude `S̃/ñ` is resampled bilinearly from cloud cells only.
pub fn rotate_spin_wave(s: &ComplexField, params: &SimParams, phi: f64) -> Result<ComplexField> {
    if phi == 0.0 {
        return Ok(s.clone());
    }
    let g = s.grid;
    let density = density_map(params);
    let mask: Vec<bool> = density.iter().map(|&n| n > 0.0).collect();
    let per_atom = ComplexField {
        data: s
            .data
            .iter()
            .zip(&density)
            .map(|(v, &n)| if n > 0.0 { v / n } else { ZERO })
            .collect(),
        ..s.clone()
    };
    let (sin, cos) = phi.sin_cos();
    let mut out = ComplexField::zeros(g, s.depth);
    for j in 0..g.ny {
        for i in 0..g.nx {
            let k = j * g.nx + i;
            if !mask[k] {
                continue;
            }
            let (x, y) = (g.x(i), g.y(j));
            // new-frame point r' sits at R(φ) r' in the lab frame
            let (xl, yl) = (cos * x - sin * y, sin * x + cos * y);
            let v = per_atom.sample_bilinear(xl, yl, &mask).ok_or_else(|| {
                RouterError::Geometry(format!(
                    "rotated spin wave leaves the grid at ({xl:.3}, {yl:.3})"
                ))
            })?;
            out.data[k] = v * density[k];
        }
    }
    Ok(out)
}

/// Efficiencies and ledgers of one storage cycle (or its stages).
#[derive(Debug, Clone)]
pub struct EfficiencyReport {
    pub eta_abs: f64,
    pub eta_em: f64,
    pub eta_total: f64,
    pub absorption_series: Vec<LedgerSample>,
    pub emission_series: Vec<LedgerSample>,
    pub absorption_window: Option<Window>,
    pub emission_window: Window,
    pub warnings: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct EmissionResult {
    pub report: EfficiencyReport,
    /// Spin wave in the emission frame at the start of emission.
    pub prepared: ComplexField,
    /// Signal envelope on the grid at the end of the window (emission frame).
    pub outgoing: ComplexField,
}

/// Re-emits a stored spin wave along the direction `phi` (lab frame).
///
/// The spin wave is expressed in a frame whose `+x` axis is the emission
/// direction; the control, given in the lab frame, is transformed into the
/// same frame. `η_em` counts the photons that left through the outflow
/// boundary by the end of the window, relative to `N_s` at the start. The
/// run ends early once the control has passed and less than
/// `EMISSION_DRAIN_TOL` of the excitation is left to leave; the reported
/// window then ends at the stopping time.
pub fn run_emission(
    stored: &ComplexField,
    params: &SimParams,
    control: &ControlSpec,
    phi: f64,
    window: Option<Window>,
    opts: SolverOptions,
) -> Result<EmissionResult> {
    let prepared = rotate_spin_wave(stored, params, phi)?;
    let control_em = control.in_rotated_frame(phi);
    let window = window.unwrap_or_else(|| default_emission_window(params, &control_em, None));
    let mut stepper = Stepper::new(params, &control_em, None, opts)?;
    let mut state = SimState::vacuum(params, stored.depth, window.start);
    state.s = prepared.clone();
    let (_, n_s0) = excitation_numbers(&state, params);
    if !(n_s0 > 0.0) {
        return Err(RouterError::EmptySpinWave);
    }
    let passed = control_em.arrival_time(params.c_tilde) + control_half_window(&control_em, params);
    let chunk = 256.0 * params.dt();
    let mut series = Vec::new();
    while state.t + params.dt() <= window.end {
        let before = state.steps;
        let until = window.end.min(state.t + chunk);
        stepper.run_until(&mut state, until, &mut series)?;
        if state.steps == before {
            break;
        }
        let last = series.last().expect("run_until records");
        if state.t > passed && last.n_e + last.n_ph < EMISSION_DRAIN_TOL * n_s0 {
            break;
        }
    }
    let window = Window { start: window.start, end: state.t };
    let eta_em = state.leaked_photons / n_s0;
    Ok(EmissionResult {
        report: EfficiencyReport {
            eta_abs: 1.0,
            eta_em,
            eta_total: eta_em,
            absorption_series: Vec::new(),
            emission_series: series,
            absorption_window: None,
            emission_window: window,
            warnings: Vec::new(),
        },
        prepared,
        outgoing: state.e,
    })
}

/// Windows for the two active stages; `None` selects the defaults.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CycleWindows {
    pub absorption: Option<Window>,
    pub emission: Option<Window>,
}

/// Storage stage: with `Ω = 0` the spin wave is constant and the residual
/// polarisation decays completely; the residual signal leaves the cloud.
pub fn store(state: &SimState) -> ComplexField {
    state.s.clone()
}

/// Residual envelope ramp `δ_applied − δ(φ)` in units of `1/L`.
pub fn residual_ramp(params: &SimParams, manipulation: &PhaseRamp, phi: f64) -> PhaseRamp {
    let target = delta_for_angle(phi, params.units.k_s_mag);
    let applied = manipulation.delta_si;
    PhaseRamp::from_si(Vec2::new(applied.x - target.x, applied.y - target.y), params.units.length)
}

/// Absorption, storage with manipulation, and re-emission along `phi`.
///
/// `manipulation` is the wavevector shift (1/m) actually imprinted; the part
/// that deviates from the ideal shift for `phi` stays on the envelope as a
/// residual phase ramp.
pub fn run_full(
    params: &SimParams,
    signal: &SignalSpec,
    control_abs: &ControlSpec,
    manipulation: &PhaseRamp,
    control_em: &ControlSpec,
    phi: f64,
    windows: CycleWindows,
    opts: SolverOptions,
) -> Result<EfficiencyReport> {
    let abs = run_absorption(params, signal, control_abs, windows.absorption, opts)?;
    let stored = store(&abs.state);
    let residual = residual_ramp(params, manipulation, phi);
    let stored = apply_phase_ramp(&stored, &residual, params.grid);
    let emission_window = windows.emission.unwrap_or_else(|| {
        default_emission_window(params, &control_em.in_rotated_frame(phi), Some(abs.window.duration()))
    });
    let em = run_emission(&stored, params, control_em, phi, Some(emission_window), opts)?;
    let mut warnings = abs.warnings;
    warnings.extend(em.report.warnings);
    Ok(EfficiencyReport {
        eta_abs: abs.eta_abs,
        eta_em: em.report.eta_em,
        eta_total: abs.eta_abs * em.report.eta_em,
        absorption_series: abs.series,
        emission_series: em.report.emission_series,
        absorption_window: Some(abs.window),
        emission_window: em.report.emission_window,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::{GridSpec, PhysicalUnits};

    fn single_cell(g: f64, delta: f64) -> SimParams {
        // one cell fully inside the cloud: density 1
        let grid = GridSpec::new(1, 1, 0.01, 0.01).unwrap();
        let units = PhysicalUnits::default();
        crate::params::make_params(units, g, delta, grid).unwrap()
    }

    #[test]
    fn polarisation_decays_without_coupling() {
        let params = single_cell(0.0, 0.0);
        let control = ControlSpec { amplitude: 0.0, ..Default::default() };
        let mut stepper = Stepper::new(&params, &control, None, SolverOptions::default()).unwrap();
        let mut state = SimState::vacuum(&params, 1.0, 0.0);
        let p0 = Complex64::new(0.3, -0.2);
        let s0 = Complex64::new(0.1, 0.5);
        state.p.data[0] = p0;
        state.s.data[0] = s0;
        let n = 2000;
        for _ in 0..n {
            stepper.step(&mut state);
        }
        let expect = p0 * (-state.t).exp();
        assert!((state.p.data[0] - expect).norm() < 1e-12);
        assert_eq!(state.s.data[0], s0);
    }

    #[test]
    fn free_propagation_conserves_photons() {
        let grid = GridSpec::new(40, 16, 1.44, 1.44).unwrap();
        let params = SimParams::with_optical_depth(PhysicalUnits::default(), 0.0, 0.0, grid).unwrap();
        let signal = SignalSpec { w_par: 2.0, ..Default::default() };
        let control = ControlSpec { amplitude: 0.0, ..Default::default() };
        let mut stepper = Stepper::new(&params, &control, Some(&signal), SolverOptions::default()).unwrap();
        let mut state = stepper.initial_state(-0.01);
        let start = state.photons() + state.leaked_photons;
        let mut series = Vec::new();
        stepper.run_until(&mut state, 0.01, &mut series).unwrap();
        for s in &series {
            assert!((s.n_ph + s.leaked - start).abs() < 1e-9);
            assert_eq!(s.n_e, 0.0);
        }
        // rigid advection: the on-grid field equals the analytic envelope
        let exact = crate::pulses::signal_envelope(&signal, grid, state.t, params.c_tilde);
        for (a, b) in state.e.data.iter().zip(&exact.data) {
            assert!((a - b).norm() < 1e-9 * signal.amplitude());
        }
    }

    #[test]
    fn zero_control_stores_nothing() {
        let params = SimParams::rubidium(6.0).unwrap();
        let control = ControlSpec { amplitude: 0.0, ..Default::default() };
        let r = run_absorption(&params, &SignalSpec::default(), &control, None, SolverOptions::default()).unwrap();
        assert!(r.eta_abs < 1e-3);
        assert_eq!(r.series.last().unwrap().n_s, 0.0);
    }

    #[test]
    fn empty_spin_wave_is_rejected() {
        let params = SimParams::rubidium(6.0).unwrap();
        let s = ComplexField::zeros(params.grid, 1.0);
        let err = run_emission(&s, &params, &ControlSpec::default(), 0.0, None, SolverOptions::default());
        assert!(matches!(err, Err(RouterError::EmptySpinWave)));
    }

    #[test]
    fn rotation_by_pi_maps_cells_exactly() {
        let params = SimParams::rubidium(6.0).unwrap();
        let g = params.grid;
        let density = density_map(&params);
        let s = ComplexField::from_fn(g, 1.0, |x, y| Complex64::new(x + 0.3, y * y));
        let s = ComplexField {
            data: s.data.iter().zip(&density).map(|(v, n)| v * n).collect(),
            ..s
        };
        let r = rotate_spin_wave(&s, &params, std::f64::consts::PI).unwrap();
        for j in 0..g.ny {
            for i in 0..g.nx {
                let a = r.get(i, j);
                let b = s.get(g.nx - 1 - i, g.ny - 1 - j);
                assert!((a - b).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn rotation_outside_grid_is_geometry_error() {
        // grid narrower than the cloud in y: a quarter turn samples off-grid
        let grid = GridSpec::new(48, 10, 1.44, 0.3).unwrap();
        let params = SimParams::with_optical_depth(PhysicalUnits::default(), 6.0, 0.0, grid).unwrap();
        let density = density_map(&params);
        let s = ComplexField { data: density.iter().map(|&n| Complex64::new(n, 0.0)).collect(), ..ComplexField::zeros(grid, 1.0) };
        let err = rotate_spin_wave(&s, &params, std::f64::consts::FRAC_PI_2);
        assert!(matches!(err, Err(RouterError::Geometry(_))));
    }
}

//! Derivative-free maximization of storage efficiency over the control
//! pulse parameters.
//!
//! The search is a Nelder–Mead simplex in the unit box (bounds mapped
//! linearly, widths logarithmically), restarted from a seeded Halton
//! sequence once a local search has converged.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Result, RouterError};
use crate::params::SimParams;
use crate::phasematch::{delta_for_angle, PhaseRamp};
use crate::pulses::{ControlSpec, SignalSpec};
use crate::solver::{run_absorption, run_full, CycleWindows, SolverOptions};

/// Simplex settings in unit-box coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimplexSettings {
    /// Initial simplex edge.
    pub step: f64,
    /// Convergence: spread of simplex values.
    pub ftol: f64,
    /// Convergence: largest vertex distance from the best vertex.
    pub xtol: f64,
}

impl Default for SimplexSettings {
    fn default() -> Self {
        Self { step: 0.1, ftol: 1e-6, xtol: 1e-4 }
    }
}

/// Result of a box-constrained maximization.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxResult {
    pub x: Vec<f64>,
    pub value: f64,
    /// `(evaluation index, value)` for every evaluation.
    pub trace: Vec<(usize, f64)>,
    pub evaluations: usize,
}

const PRIMES: [u32; 8] = [2, 3, 5, 7, 11, 13, 17, 19];

fn radical_inverse(mut i: u64, base: u32) -> f64 {
    let b = base as f64;
    let (mut inv, mut f) = (0.0, 1.0 / b);
    while i > 0 {
        inv += f * (i % base as u64) as f64;
        i /= base as u64;
        f /= b;
    }
    inv
}

/// Point `index` of a Halton sequence in `[0, 1)^dim`, shifted modulo one by
/// `offset` (Cranley–Patterson rotation).
pub fn halton_point(index: u64, offset: &[f64]) -> Vec<f64> {
    offset
        .iter()
        .enumerate()
        .map(|(k, o)| (radical_inverse(index, PRIMES[k]) + o).fract())
        .collect()
}

struct Evaluator<'a> {
    f: &'a mut dyn FnMut(&[f64]) -> f64,
    lo: &'a [f64],
    hi: &'a [f64],
    budget: usize,
    trace: Vec<(usize, f64)>,
    best: (Vec<f64>, f64),
}

impl Evaluator<'_> {
    fn exhausted(&self) -> bool {
        self.trace.len() >= self.budget
    }

    /// Value at the unit-box point `u` (clamped); non-finite maps to `−∞`.
    fn eval(&mut self, u: &mut [f64]) -> f64 {
        for v in u.iter_mut() {
            *v = v.clamp(0.0, 1.0);
        }
        let x: Vec<f64> = u
            .iter()
            .zip(self.lo.iter().zip(self.hi))
            .map(|(t, (l, h))| l + t * (h - l))
            .collect();
        let mut v = (self.f)(&x);
        if !v.is_finite() {
            v = f64::NEG_INFINITY;
        }
        self.trace.push((self.trace.len(), v));
        if v > self.best.1 {
            self.best = (x, v);
        }
        v
    }
}

fn nelder_mead(ev: &mut Evaluator, start: &[f64], s: SimplexSettings) {
    let n = start.len();
    let mut pts: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    let mut vals: Vec<f64> = Vec::with_capacity(n + 1);
    let mut first = start.to_vec();
    vals.push(ev.eval(&mut first));
    pts.push(first);
    for k in 0..n {
        if ev.exhausted() {
            return;
        }
        let mut p = pts[0].clone();
        // step inward when the start sits on the upper face
        p[k] += if p[k] + s.step <= 1.0 { s.step } else { -s.step };
        vals.push(ev.eval(&mut p));
        pts.push(p);
    }
    while !ev.exhausted() {
        // sort descending (maximization), stable for determinism
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&a, &b| vals[b].total_cmp(&vals[a]));
        pts = order.iter().map(|&i| pts[i].clone()).collect();
        vals = order.iter().map(|&i| vals[i]).collect();
        let spread = vals[0] - vals[n];
        let size = pts[1..]
            .iter()
            .map(|p| p.iter().zip(&pts[0]).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
            .fold(0.0, f64::max);
        if size <= s.xtol || (spread <= s.ftol && size <= 100.0 * s.xtol) {
            return;
        }
        let centroid: Vec<f64> =
            (0..n).map(|k| pts[..n].iter().map(|p| p[k]).sum::<f64>() / n as f64).collect();
        let along = |t: f64| -> Vec<f64> {
            centroid.iter().zip(&pts[n]).map(|(c, w)| c + t * (c - w)).collect()
        };
        let mut r = along(1.0);
        let fr = ev.eval(&mut r);
        if fr > vals[0] {
            if ev.exhausted() {
                pts[n] = r;
                vals[n] = fr;
                return;
            }
            let mut e = along(2.0);
            let fe = ev.eval(&mut e);
            if fe > fr {
                pts[n] = e;
                vals[n] = fe;
            } else {
                pts[n] = r;
                vals[n] = fr;
            }
            continue;
        }
        if fr > vals[n - 1] {
            pts[n] = r;
            vals[n] = fr;
            continue;
        }
        if ev.exhausted() {
            return;
        }
        let mut c = if fr > vals[n] { along(0.5) } else { along(-0.5) };
        let fc = ev.eval(&mut c);
        if fc > vals[n].max(fr) {
            pts[n] = c;
            vals[n] = fc;
            continue;
        }
        for k in 1..=n {
            if ev.exhausted() {
                return;
            }
            let mut p: Vec<f64> = pts[k].iter().zip(&pts[0]).map(|(a, b)| b + 0.5 * (a - b)).collect();
            vals[k] = ev.eval(&mut p);
            pts[k] = p;
        }
    }
}

/// Maximizes `f` over the box `[lo, hi]` starting at `start`, then restarts
/// from Halton points rotated by a `seed`-dependent offset until `budget`
/// evaluations are spent.
pub fn maximize_in_box(
    f: &mut dyn FnMut(&[f64]) -> f64,
    start: &[f64],
    lo: &[f64],
    hi: &[f64],
    budget: usize,
    seed: u64,
    settings: SimplexSettings,
) -> Result<BoxResult> {
    let n = start.len();
    if n == 0 || n > PRIMES.len() || lo.len() != n || hi.len() != n {
        return Err(RouterError::Optimization(format!("dimension {n} unsupported or mismatched bounds")));
    }
    if lo.iter().zip(hi).any(|(l, h)| !(l <= h) || !l.is_finite() || !h.is_finite()) {
        return Err(RouterError::Optimization("bounds must be finite and ordered".into()));
    }
    if budget < n + 1 {
        return Err(RouterError::Optimization(format!("budget {budget} below {}", n + 1)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let offset: Vec<f64> = (0..n).map(|_| rng.gen::<f64>()).collect();
    let to_unit = |x: &[f64]| -> Vec<f64> {
        x.iter()
            .zip(lo.iter().zip(hi))
            .map(|(v, (l, h))| if h > l { ((v - l) / (h - l)).clamp(0.0, 1.0) } else { 0.0 })
            .collect()
    };
    let mut ev = Evaluator {
        f,
        lo,
        hi,
        budget,
        trace: Vec::new(),
        best: (start.to_vec(), f64::NEG_INFINITY),
    };
    nelder_mead(&mut ev, &to_unit(start), settings);
    if ev.trace.iter().take(n + 1).all(|&(_, v)| v == f64::NEG_INFINITY) {
        return Err(RouterError::Optimization("objective not finite on the initial simplex".into()));
    }
    let mut restart = 1u64;
    while !ev.exhausted() {
        // alternate polishing the incumbent with exploring a new sample
        let u = if restart % 2 == 1 {
            to_unit(&ev.best.0.clone())
        } else {
            halton_point(restart / 2, &offset)
        };
        let step = if restart % 2 == 1 { 0.5 * settings.step } else { settings.step };
        nelder_mead(&mut ev, &u, SimplexSettings { step, ..settings });
        restart += 1;
    }
    let evaluations = ev.trace.len();
    Ok(BoxResult { x: ev.best.0, value: ev.best.1, trace: ev.trace, evaluations })
}

/// The five optimized control parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ControlParam {
    Amplitude,
    WidthPar,
    WidthPerp,
    Timing,
    /// Displacement of the beam axis perpendicular to its direction.
    Offset,
}

impl ControlParam {
    pub const ALL: [ControlParam; 5] =
        [Self::Amplitude, Self::WidthPar, Self::WidthPerp, Self::Timing, Self::Offset];

    pub fn name(self) -> &'static str {
        match self {
            Self::Amplitude => "amplitude",
            Self::WidthPar => "w_par",
            Self::WidthPerp => "w_perp",
            Self::Timing => "t0",
            Self::Offset => "offset",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| RouterError::Config(format!("unknown control parameter '{s}'")))
    }

    pub fn get(self, c: &ControlSpec) -> f64 {
        match self {
            Self::Amplitude => c.amplitude,
            Self::WidthPar => c.w_par,
            Self::WidthPerp => c.w_perp,
            Self::Timing => c.t0,
            Self::Offset => offset_of(c),
        }
    }

    pub fn set(self, c: &mut ControlSpec, v: f64) {
        match self {
            Self::Amplitude => c.amplitude = v,
            Self::WidthPar => c.w_par = v,
            Self::WidthPerp => c.w_perp = v,
            Self::Timing => c.t0 = v,
            Self::Offset => {
                let (s, co) = c.theta.sin_cos();
                c.x0 = -s * v;
                c.y0 = co * v;
            }
        }
    }
}

fn offset_of(c: &ControlSpec) -> f64 {
    let (s, co) = c.theta.sin_cos();
    -s * c.x0 + co * c.y0
}

/// Search ranges; widths are searched on a log scale.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParamBounds {
    pub amplitude: (f64, f64),
    pub width: (f64, f64),
    pub timing: (f64, f64),
    pub offset: (f64, f64),
}

impl ParamBounds {
    /// Amplitude in `[0, 200]`, widths in `[0.01, 300]`, timing and offset
    /// within two signal widths (temporal and transverse) of zero.
    pub fn for_signal(signal: &SignalSpec, c_tilde: f64) -> Self {
        let tau = signal.duration(c_tilde);
        Self {
            amplitude: (0.0, 200.0),
            width: (0.01, 300.0),
            timing: (signal.arrival_t - 2.0 * tau, signal.arrival_t + 2.0 * tau),
            offset: (-2.0 * signal.w_perp, 2.0 * signal.w_perp),
        }
    }

    fn lo_hi(&self) -> (Vec<f64>, Vec<f64>) {
        let (wl, wh) = (self.width.0.ln(), self.width.1.ln());
        (
            vec![self.amplitude.0, wl, wl, self.timing.0, self.offset.0],
            vec![self.amplitude.1, wh, wh, self.timing.1, self.offset.1],
        )
    }
}

fn encode(c: &ControlSpec) -> Vec<f64> {
    vec![c.amplitude, c.w_par.ln(), c.w_perp.ln(), c.t0, offset_of(c)]
}

fn decode(x: &[f64], template: &ControlSpec) -> ControlSpec {
    let mut c = ControlSpec { amplitude: x[0], w_par: x[1].exp(), w_perp: x[2].exp(), t0: x[3], ..*template };
    ControlParam::Offset.set(&mut c, x[4]);
    c
}

/// Quantity being maximized.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Objective {
    /// `η_abs` from the absorption stage.
    Absorption,
    /// `η_total` of a full cycle re-emitting along `phi` with the ideal
    /// manipulation; the same control serves both stages.
    FullCycle { phi: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptProblem {
    pub params: SimParams,
    pub signal: SignalSpec,
    pub theta: f64,
    pub objective: Objective,
    pub bounds: ParamBounds,
    pub budget: usize,
    pub seed: u64,
    /// Starting point (its `theta` is overridden by `theta`).
    pub start: ControlSpec,
    pub settings: SimplexSettings,
}

/// Starting control used when nothing better is known.
pub fn nominal_control(theta: f64) -> ControlSpec {
    ControlSpec { amplitude: 20.0, w_par: 50.0, w_perp: 1.0, t0: 0.05, theta, ..Default::default() }
}

impl OptProblem {
    pub fn absorption(params: SimParams, theta: f64, budget: usize, seed: u64) -> Self {
        let signal = SignalSpec::default();
        Self {
            params,
            signal,
            theta,
            objective: Objective::Absorption,
            bounds: ParamBounds::for_signal(&signal, params.c_tilde),
            budget,
            seed,
            start: nominal_control(theta),
            settings: SimplexSettings::default(),
        }
    }

    pub fn full_cycle(params: SimParams, theta: f64, phi: f64, budget: usize, seed: u64) -> Self {
        Self { objective: Objective::FullCycle { phi }, ..Self::absorption(params, theta, budget, seed) }
    }

    /// Objective value for one control.
    pub fn evaluate(&self, control: &ControlSpec) -> Result<f64> {
        let opts = SolverOptions { record_every: 1024, ..Default::default() };
        match self.objective {
            Objective::Absorption => {
                Ok(run_absorption(&self.params, &self.signal, control, None, opts)?.eta_abs)
            }
            Objective::FullCycle { phi } => {
                let u = self.params.units;
                let ramp = PhaseRamp::from_si(delta_for_angle(phi, u.k_s_mag), u.length);
                let r = run_full(
                    &self.params,
                    &self.signal,
                    control,
                    &ramp,
                    control,
                    phi,
                    CycleWindows::default(),
                    opts,
                )?;
                Ok(r.eta_total)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptResult {
    pub best: ControlSpec,
    pub best_value: f64,
    pub trace: Vec<(usize, f64)>,
    pub evaluations_used: usize,
}

pub fn optimize(problem: &OptProblem) -> Result<OptResult> {
    let template = ControlSpec { theta: problem.theta, ..problem.start };
    let (lo, hi) = problem.bounds.lo_hi();
    let mut f = |x: &[f64]| problem.evaluate(&decode(x, &template)).unwrap_or(f64::NAN);
    let r = maximize_in_box(
        &mut f,
        &encode(&template),
        &lo,
        &hi,
        problem.budget,
        problem.seed,
        problem.settings,
    )?;
    Ok(OptResult {
        best: decode(&r.x, &template),
        best_value: r.value,
        trace: r.trace,
        evaluations_used: r.evaluations,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub d: f64,
    pub angle: f64,
    pub eta: f64,
    pub best: ControlSpec,
}

/// Optimizes `η_abs` at every `(d, θ)` pair, `d` varying fastest; each point
/// starts from the best control of the previous one.
pub fn sweep_eta_abs(base: &OptProblem, depths: &[f64], thetas: &[f64]) -> Result<Vec<SweepRow>> {
    let mut rows = Vec::with_capacity(depths.len() * thetas.len());
    let mut start = base.start;
    for &theta in thetas {
        for &d in depths {
            let params =
                SimParams::with_optical_depth(base.params.units, d, base.params.delta_tilde, base.params.grid)?;
            let problem = OptProblem {
                params,
                theta,
                start: ControlSpec { theta, ..start },
                objective: Objective::Absorption,
                ..*base
            };
            let r = optimize(&problem)?;
            start = r.best;
            rows.push(SweepRow { d, angle: theta, eta: r.best_value, best: r.best });
        }
    }
    Ok(rows)
}

/// Writes sweep rows as CSV; `angle_name` labels the angle column.
pub fn write_sweep_csv<W: std::io::Write>(rows: &[SweepRow], angle_name: &str, mut w: W) -> Result<()> {
    writeln!(w, "d,{angle_name},eta,amplitude,w_par,w_perp,t0,x0,y0")?;
    for r in rows {
        let b = &r.best;
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{}",
            r.d,
            r.angle.to_degrees(),
            r.eta,
            b.amplitude,
            b.w_par,
            b.w_perp,
            b.t0,
            b.x0,
            b.y0
        )?;
    }
    Ok(())
}

/// Varies one parameter of `best` over `[v(1 − span), v(1 + span)]` in
/// `samples` equally spaced values (the center is `v` itself for odd
/// counts) and returns `(value, objective)`.
pub fn robustness_scan(
    problem: &OptProblem,
    best: &ControlSpec,
    parameter: ControlParam,
    span: f64,
    samples: usize,
) -> Result<Vec<(f64, f64)>> {
    let v0 = parameter.get(best);
    let mut out = Vec::with_capacity(samples);
    for k in 0..samples {
        let frac = if samples == 1 { 0.0 } else { -1.0 + 2.0 * k as f64 / (samples - 1) as f64 };
        let v = v0 * (1.0 + span * frac);
        let mut c = *best;
        parameter.set(&mut c, v);
        out.push((v, problem.evaluate(&c)?));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_quadratic_optimum() {
        let target = [0.3, -1.2, 2.5, 0.0, 4.0];
        let mut f = |x: &[f64]| -x.iter().zip(&target).map(|(a, b)| (a - b).powi(2)).sum::<f64>();
        let lo = [-5.0; 5];
        let hi = [5.0; 5];
        let settings = SimplexSettings { ftol: 1e-14, xtol: 1e-7, ..Default::default() };
        let r = maximize_in_box(&mut f, &[0.0; 5], &lo, &hi, 500, 7, settings).unwrap();
        assert!(r.evaluations <= 500);
        for (a, b) in r.x.iter().zip(&target) {
            assert!((a - b).abs() < 1e-4, "{:?}", r.x);
        }
    }

    #[test]
    fn respects_bounds_and_running_max() {
        // optimum outside the box lands on the face
        let mut f = |x: &[f64]| -(x[0] - 3.0).powi(2) - (x[1] + 0.5).powi(2);
        let r = maximize_in_box(&mut f, &[0.0, 0.0], &[-1.0, -1.0], &[1.0, 1.0], 200, 1, SimplexSettings::default())
            .unwrap();
        assert!((r.x[0] - 1.0).abs() < 1e-3 && (r.x[1] + 0.5).abs() < 1e-3);
        assert_eq!(r.trace.len(), r.evaluations);
        let best = r.trace.iter().map(|t| t.1).fold(f64::NEG_INFINITY, f64::max);
        assert_eq!(best, r.value);
    }

    #[test]
    fn deterministic_for_seed() {
        let run = |seed| {
            let mut f = |x: &[f64]| (3.0 * x[0]).sin() * (2.0 * x[1]).cos() - 0.1 * x[2] * x[2];
            maximize_in_box(&mut f, &[0.1, 0.1, 0.1], &[-2.0; 3], &[2.0; 3], 150, seed, SimplexSettings::default())
                .unwrap()
        };
        assert_eq!(run(11), run(11));
        assert_eq!(run(11).trace.len(), 150);
    }

    #[test]
    fn rejects_all_nonfinite_start() {
        let mut f = |_: &[f64]| f64::NAN;
        let err = maximize_in_box(&mut f, &[0.0], &[-1.0], &[1.0], 10, 0, SimplexSettings::default());
        assert!(matches!(err, Err(RouterError::Optimization(_))));
        let mut g = |x: &[f64]| x[0];
        assert!(maximize_in_box(&mut g, &[0.0, 0.0], &[0.0; 2], &[1.0; 2], 2, 0, SimplexSettings::default()).is_err());
    }

    #[test]
    fn halton_in_unit_cube() {
        assert_eq!(radical_inverse(1, 2), 0.5);
        assert_eq!(radical_inverse(3, 2), 0.75);
        assert!((radical_inverse(1, 3) - 1.0 / 3.0).abs() < 1e-15);
        for i in 0..100 {
            assert!(halton_point(i, &[0.3, 0.9, 0.5]).iter().all(|v| (0.0..1.0).contains(v)));
        }
    }

    #[test]
    fn offset_round_trip() {
        let mut c = ControlSpec { theta: 0.7, ..Default::default() };
        ControlParam::Offset.set(&mut c, 0.25);
        assert!((ControlParam::Offset.get(&c) - 0.25).abs() < 1e-15);
        let x = encode(&c);
        let back = decode(&x, &c);
        for p in ControlParam::ALL {
            assert!((p.get(&back) - p.get(&c)).abs() < 1e-12);
        }
        assert_eq!(ControlParam::parse("w_perp").unwrap(), ControlParam::WidthPerp);
        assert!(ControlParam::parse("nope").is_err());
    }
}

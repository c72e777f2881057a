//! Incoming Gaussian signal envelope and the prescribed control field.

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;

use crate::error::{Result, RouterError};
use crate::field::ComplexField;
use crate::params::GridSpec;

/// Gaussian signal pulse travelling along `+x̃`, circular in `(ỹ, z̃)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignalSpec {
    /// e-width along the propagation axis, `w̃_ℰ,∥`.
    pub w_par: f64,
    /// Transverse e-width, `w̃_ℰ,⊥`.
    pub w_perp: f64,
    /// Time at which the peak crosses the cloud center.
    pub arrival_t: f64,
    /// Carrier mismatch in units of `γ/c`; zero is two-photon resonance.
    pub k_mis: f64,
}

impl Default for SignalSpec {
    fn default() -> Self {
        Self { w_par: 100.0, w_perp: 0.2, arrival_t: 0.0, k_mis: 0.0 }
    }
}

impl SignalSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.w_par > 0.0) || !(self.w_perp > 0.0) {
            return Err(RouterError::Parameter(format!(
                "signal widths must be positive, got w_par={} w_perp={}",
                self.w_par, self.w_perp
            )));
        }
        if !self.arrival_t.is_finite() || !self.k_mis.is_finite() {
            return Err(RouterError::Parameter("signal timing and mismatch must be finite".into()));
        }
        Ok(())
    }

    /// Out-of-plane factor `∫ exp(−2z²/w⊥²) dz`.
    pub fn depth(&self) -> f64 {
        self.w_perp * FRAC_PI_2.sqrt()
    }

    /// Peak amplitude giving one photon: `(1/V)∫|ℰ|² d³r = 1` with `V = 1`.
    pub fn amplitude(&self) -> f64 {
        (1.0 / (self.w_par * self.w_perp * self.w_perp * FRAC_PI_2.powf(1.5))).sqrt()
    }

    /// Temporal e-width `w̃_∥/c̃`.
    pub fn duration(&self, c_tilde: f64) -> f64 {
        self.w_par / c_tilde
    }

    /// Freely propagating envelope at `(x, y, t)`.
    #[inline]
    pub fn value(&self, x: f64, y: f64, t: f64, c_tilde: f64) -> Complex64 {
        let xi = x - c_tilde * (t - self.arrival_t);
        let a = xi / self.w_par;
        let b = y / self.w_perp;
        let mag = self.amplitude() * (-(a * a) - b * b).exp();
        if self.k_mis == 0.0 {
            Complex64::new(mag, 0.0)
        } else {
            Complex64::from_polar(mag, self.k_mis * xi / c_tilde)
        }
    }
}

/// Evaluates the signal envelope on the grid at time `t`.
pub fn signal_envelope(spec: &SignalSpec, grid: GridSpec, t: f64, c_tilde: f64) -> ComplexField {
    ComplexField::from_fn(grid, spec.depth(), |x, y| spec.value(x, y, t, c_tilde))
}

/// Gaussian control pulse moving rigidly at speed `c̃` along `ê_θ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ControlSpec {
    /// Peak Rabi half-frequency `A_Ω` in units of `γ`.
    pub amplitude: f64,
    pub w_par: f64,
    pub w_perp: f64,
    /// Reference time at which the peak sits at `(x0, y0)`.
    pub t0: f64,
    pub x0: f64,
    pub y0: f64,
    /// Angle between control and signal propagation, radians.
    pub theta: f64,
}

impl Default for ControlSpec {
    fn default() -> Self {
        Self { amplitude: 20.0, w_par: 100.0, w_perp: 1.0, t0: 0.0, x0: 0.0, y0: 0.0, theta: 0.0 }
    }
}

/// Wraps an angle into `(−π, π]`.
pub fn wrap_angle(a: f64) -> f64 {
    let mut r = a.rem_euclid(2.0 * PI);
    if r > PI {
        r -= 2.0 * PI;
    }
    r
}

impl ControlSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.amplitude >= 0.0) || !self.amplitude.is_finite() {
            return Err(RouterError::Parameter(format!(
                "control amplitude must be >= 0, got {}",
                self.amplitude
            )));
        }
        if !(self.w_par > 0.0) || !(self.w_perp > 0.0) {
            return Err(RouterError::Parameter(format!(
                "control widths must be positive, got w_par={} w_perp={}",
                self.w_par, self.w_perp
            )));
        }
        if ![self.t0, self.x0, self.y0, self.theta].iter().all(|v| v.is_finite()) {
            return Err(RouterError::Parameter("control timing and position must be finite".into()));
        }
        Ok(())
    }

    pub fn direction(&self) -> (f64, f64) {
        (self.theta.cos(), self.theta.sin())
    }

    pub fn duration(&self, c_tilde: f64) -> f64 {
        self.w_par / c_tilde
    }

    /// Peak position at time `t`.
    pub fn peak_position(&self, t: f64, c_tilde: f64) -> (f64, f64) {
        let (cx, sy) = self.direction();
        let s = c_tilde * (t - self.t0);
        (self.x0 + s * cx, self.y0 + s * sy)
    }

    /// Time of closest approach of the peak to the cloud center.
    pub fn arrival_time(&self, c_tilde: f64) -> f64 {
        let (cx, sy) = self.direction();
        self.t0 - (self.x0 * cx + self.y0 * sy) / c_tilde
    }

    /// The same beam described in a frame rotated by `angle`: if the lab frame
    /// is rotated by `angle`, coordinates transform by `−angle`.
    pub fn in_rotated_frame(&self, angle: f64) -> Self {
        let (s, c) = (-angle).sin_cos();
        Self {
            x0: c * self.x0 - s * self.y0,
            y0: s * self.x0 + c * self.y0,
            theta: wrap_angle(self.theta - angle),
            ..*self
        }
    }

    #[inline]
    pub fn value(&self, x: f64, y: f64, t: f64, c_tilde: f64) -> f64 {
        if self.amplitude == 0.0 {
            return 0.0;
        }
        let (cx, sy) = self.direction();
        let (dx, dy) = (x - self.x0, y - self.y0);
        let u_par = dx * cx + dy * sy - c_tilde * (t - self.t0);
        let u_perp = -dx * sy + dy * cx;
        let a = u_par / self.w_par;
        let b = u_perp / self.w_perp;
        self.amplitude * (-(a * a) - b * b).exp()
    }
}

/// Evaluates `Ω̃(r̃, t̃)` on the grid; the control is real-valued.
pub fn control_field(spec: &ControlSpec, grid: GridSpec, t: f64, c_tilde: f64) -> ComplexField {
    ComplexField::from_fn(grid, 1.0, |x, y| Complex64::new(spec.value(x, y, t, c_tilde), 0.0))
}

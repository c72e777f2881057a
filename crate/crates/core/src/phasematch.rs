//! Wavevector bookkeeping for absorption, manipulation and emission, linear
//! phase ramps on the spin wave, and Gaussian fits of mismatch sweeps.

use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;

use crate::error::{Result, RouterError};
use crate::field::ComplexField;
use crate::params::GridSpec;

/// Plane vector, used for wavevectors in 1/m unless stated otherwise.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Vec2 {
    pub x: f64,
    pub y: f64,
}

impl Vec2 {
    pub const ZERO: Self = Self { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn from_polar(r: f64, angle: f64) -> Self {
        Self::new(r * angle.cos(), r * angle.sin())
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn dot(self, o: Self) -> f64 {
        self.x * o.x + self.y * o.y
    }

    pub fn angle(self) -> f64 {
        self.y.atan2(self.x)
    }

    pub fn rotated(self, angle: f64) -> Self {
        let (s, c) = angle.sin_cos();
        Self::new(c * self.x - s * self.y, s * self.x + c * self.y)
    }

    /// Counter-clockwise normal of the same length.
    pub fn perp(self) -> Self {
        Self::new(-self.y, self.x)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl Add for Vec2 {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Vec2 {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self::new(self.x - o.x, self.y - o.y)
    }
}

impl Neg for Vec2 {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.x, -self.y)
    }
}

impl Mul<f64> for Vec2 {
    type Output = Self;
    fn mul(self, s: f64) -> Self {
        Self::new(self.x * s, self.y * s)
    }
}

/// Manipulation shift that rotates the emission by `phi` while keeping
/// `|k_s + δ| = |k_s|`: `δ = |k_s|(cos φ − 1, sin φ)`.
pub fn delta_for_angle(phi: f64, k_s_mag: f64) -> Vec2 {
    Vec2::new(k_s_mag * (phi.cos() - 1.0), k_s_mag * phi.sin())
}

/// Spin-wave wavevector `κ = k_s − k_c` for a control at angle `theta`.
pub fn kappa_of(theta: f64, k_s_mag: f64, k_c_mag: f64) -> Vec2 {
    Vec2::new(k_s_mag, 0.0) - Vec2::from_polar(k_c_mag, theta)
}

/// `k′_s = κ′ + k′_c` and its signed distance from the resonant shell.
pub fn emitted_wavevector(kappa_prime: Vec2, k_c_prime: Vec2, k_s_mag: f64) -> (Vec2, f64) {
    let k = kappa_prime + k_c_prime;
    (k, k.norm() - k_s_mag)
}

/// All wavevectors of one storage cycle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WaveGeometry {
    pub k_s: Vec2,
    pub k_c: Vec2,
    pub kappa: Vec2,
    pub delta: Vec2,
    pub k_s_prime: Vec2,
    pub k_c_prime: Vec2,
    pub theta: f64,
    pub phi: f64,
    pub k_mis: f64,
}

impl WaveGeometry {
    /// Signal along `+x`, control at `theta`, manipulation `delta`, and the
    /// emission control `k_c_prime`. `phi` is the direction of `k′_s`.
    pub fn new(k_s_mag: f64, k_c_mag: f64, theta: f64, delta: Vec2, k_c_prime: Vec2) -> Self {
        let k_s = Vec2::new(k_s_mag, 0.0);
        let k_c = Vec2::from_polar(k_c_mag, theta);
        let kappa = k_s - k_c;
        let (k_s_prime, k_mis) = emitted_wavevector(kappa + delta, k_c_prime, k_s_mag);
        Self { k_s, k_c, kappa, delta, k_s_prime, k_c_prime, theta, phi: k_s_prime.angle(), k_mis }
    }
}

/// Linear phase `e^{iδ·r}` imprinted on a spin wave.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseRamp {
    /// Wavevector shift, 1/m.
    pub delta_si: Vec2,
    /// Cloud scale `L`, m.
    pub length: f64,
}

impl PhaseRamp {
    pub fn from_si(delta: Vec2, length: f64) -> Self {
        Self { delta_si: delta, length }
    }

    /// A ramp given directly in units of `1/L`.
    pub fn from_tilde(delta: Vec2, length: f64) -> Self {
        Self { delta_si: delta * (1.0 / length), length }
    }

    pub fn zero(length: f64) -> Self {
        Self { delta_si: Vec2::ZERO, length }
    }

    /// Dimensionless `δ·L`.
    pub fn tilde(&self) -> Vec2 {
        self.delta_si * self.length
    }

    pub fn validate(&self) -> Result<()> {
        if !self.delta_si.is_finite() || !(self.length > 0.0) {
            return Err(RouterError::Parameter("phase ramp must be finite with positive length".into()));
        }
        Ok(())
    }
}

/// Multiplies `s` by `e^{iδ̃·r̃}` cell by cell.
pub fn apply_phase_ramp(s: &ComplexField, ramp: &PhaseRamp, grid: GridSpec) -> ComplexField {
    let d = ramp.tilde();
    if d == Vec2::ZERO {
        return s.clone();
    }
    let mut out = s.clone();
    for j in 0..grid.ny {
        let y = grid.y(j);
        for i in 0..grid.nx {
            let k = j * grid.nx + i;
            out.data[k] = s.data[k] * Complex64::from_polar(1.0, d.x * grid.x(i) + d.y * y);
        }
    }
    out
}

/// First-order `k_mis` per unit relative error of `δ(φ)`, for an error
/// parallel to `δ` (magnitude) and perpendicular to it (rotation):
/// `(k(1 − cos φ), −k sin φ)`.
pub fn mismatch_sensitivity(phi: f64, k_s_mag: f64) -> (f64, f64) {
    (k_s_mag * (1.0 - phi.cos()), -k_s_mag * phi.sin())
}

/// `k_mis` produced by the manipulation `δ(φ)` with relative errors along
/// and across `δ`.
pub fn mismatch_from_error(phi: f64, k_s_mag: f64, eps_par: f64, eps_perp: f64) -> f64 {
    let delta = delta_for_angle(phi, k_s_mag);
    let shifted = delta * (1.0 + eps_par) + delta.perp() * eps_perp;
    (Vec2::new(k_s_mag, 0.0) + shifted).norm() - k_s_mag
}

/// Standard deviation of a suppression `exp(−k²/w²)`: `w/√2`.
pub fn gaussian_sigma(width: f64) -> f64 {
    width / std::f64::consts::SQRT_2
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianFit {
    /// Width of `η₀ exp(−k²/w²)` fitted to `η` by least squares.
    pub width: f64,
    pub eta0: f64,
    /// RMS residual of `η` for the fitted curve.
    pub rms_residual: f64,
    /// Width from the straight-line fit of `ln η` against `k²`. It weights
    /// the far tails as heavily as the peak.
    pub log_width: f64,
    /// RMS residual of `ln η` for the log fit.
    pub rms_log_residual: f64,
}

/// Fits `η₀ exp(−k²/w²)` to `(k, η)` samples.
///
/// The log-linear fit seeds a one-dimensional search over `w`; for each
/// `w` the best `η₀` is closed-form.
pub fn fit_gaussian_suppression(samples: &[(f64, f64)]) -> Result<GaussianFit> {
    if samples.len() < 5 {
        return Err(RouterError::Fit(format!("need at least 5 samples, got {}", samples.len())));
    }
    if let Some(&(k, eta)) = samples.iter().find(|&&(k, eta)| !(eta > 0.0) || !k.is_finite()) {
        return Err(RouterError::Fit(format!("efficiency {eta} at k={k} is not positive")));
    }
    let n = samples.len() as f64;
    let (mut su, mut sv, mut suu, mut suv) = (0.0, 0.0, 0.0, 0.0);
    for &(k, eta) in samples {
        let (u, v) = (k * k, eta.ln());
        su += u;
        sv += v;
        suu += u * u;
        suv += u * v;
    }
    let den = n * suu - su * su;
    if den.abs() <= f64::EPSILON * n * suu {
        return Err(RouterError::Fit("mismatch values do not vary".into()));
    }
    let slope = (n * suv - su * sv) / den;
    let intercept = (sv - slope * su) / n;
    if !(slope < 0.0) {
        return Err(RouterError::Fit(format!("no suppression: slope {slope} >= 0")));
    }
    let rms_log = (samples
        .iter()
        .map(|&(k, eta)| (eta.ln() - intercept - slope * k * k).powi(2))
        .sum::<f64>()
        / n)
        .sqrt();
    let log_width = (-1.0 / slope).sqrt();

    // best η₀ and squared residual for a given width
    let sse = |w: f64| {
        let (mut sg, mut sgg) = (0.0, 0.0);
        for &(k, eta) in samples {
            let g = (-(k * k) / (w * w)).exp();
            sg += eta * g;
            sgg += g * g;
        }
        let a = sg / sgg;
        let r: f64 = samples.iter().map(|&(k, eta)| (eta - a * (-(k * k) / (w * w)).exp()).powi(2)).sum();
        (r, a)
    };
    let (lo, hi) = ((0.1 * log_width).ln(), (10.0 * log_width).ln());
    let steps = 400;
    let at = |i: usize| (lo + (hi - lo) * i as f64 / steps as f64).exp();
    let best = (0..=steps).min_by(|&a, &b| sse(at(a)).0.total_cmp(&sse(at(b)).0)).unwrap_or(0);
    let (mut a, mut b) = (at(best.saturating_sub(1)).ln(), at((best + 1).min(steps)).ln());
    let golden = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..80 {
        let (c, d) = (b - golden * (b - a), a + golden * (b - a));
        if sse(c.exp()).0 < sse(d.exp()).0 {
            b = d;
        } else {
            a = c;
        }
    }
    let width = (0.5 * (a + b)).exp();
    let (r, eta0) = sse(width);
    Ok(GaussianFit { width, eta0, rms_residual: (r / n).sqrt(), log_width, rms_log_residual: rms_log })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    const KS: f64 = 7.9e6;

    #[test]
    fn delta_examples() {
        assert_eq!(delta_for_angle(0.0, KS), Vec2::ZERO);
        assert!((delta_for_angle(PI, KS).norm() - 2.0 * KS).abs() < 1e-6);
        let d = delta_for_angle(1e-3, KS);
        assert!((d.x + 3.95).abs() < 0.01 && (d.y - 7.9e3).abs() < 0.01);
    }

    #[test]
    fn kappa_examples() {
        let units = crate::params::PhysicalUnits::default();
        let (ks, kc) = (units.k_s_mag, units.k_c_mag());
        let k0 = kappa_of(0.0, ks, kc).norm();
        let omega_over_c = units.omega_gs / units.c;
        assert!((k0 - omega_over_c).abs() < 1e-6 * omega_over_c);
        assert!((k0 - 143.2).abs() < 0.1);
        let kpi = kappa_of(PI, ks, kc).norm();
        assert!((kpi - (ks + kc)).abs() < 1e-6 && (kpi - 1.58e7).abs() < 1e5);
        assert_eq!(kappa_of(0.0, KS, KS), Vec2::ZERO);
    }

    #[test]
    fn emitted_examples() {
        let kappa = kappa_of(0.3, KS, 0.9 * KS);
        let kc = Vec2::from_polar(0.9 * KS, 0.3);
        let (ks, mis) = emitted_wavevector(kappa, kc, KS);
        assert!((ks - Vec2::new(KS, 0.0)).norm() < 1e-6 && mis.abs() < 1e-6);
        let phi = 1.2;
        let (ks, mis) = emitted_wavevector(kappa + delta_for_angle(phi, KS), kc, KS);
        assert!(mis.abs() < 1e-6);
        assert!((ks.angle() - phi).abs() < 1e-12);
        // 90 % of the quarter-turn shift, by hand: k_s + 0.9 k(−1, 1)
        let (_, mis) = emitted_wavevector(kappa + delta_for_angle(PI / 2.0, KS) * 0.9, kc, KS);
        let by_hand = (0.01f64 + 0.81).sqrt() * KS - KS;
        assert!((mis - by_hand).abs() < 1e-6 * KS);
        let geo = WaveGeometry::new(KS, 0.9 * KS, 0.3, delta_for_angle(phi, KS), kc);
        assert!((geo.phi - phi).abs() < 1e-12 && geo.k_mis.abs() < 1e-6);
    }

    #[test]
    fn sensitivity_matches_finite_differences() {
        for &phi in &[0.3, 1.0, PI / 2.0, 2.5, PI] {
            let (a, b) = mismatch_sensitivity(phi, KS);
            let h = 1e-7;
            let fd_par = (mismatch_from_error(phi, KS, h, 0.0) - mismatch_from_error(phi, KS, -h, 0.0)) / (2.0 * h);
            let fd_perp = (mismatch_from_error(phi, KS, 0.0, h) - mismatch_from_error(phi, KS, 0.0, -h)) / (2.0 * h);
            assert!(((fd_par - a) / KS).abs() < 1e-6, "phi {phi}: {fd_par} vs {a}");
            assert!(((fd_perp - b) / KS).abs() < 1e-6, "phi {phi}: {fd_perp} vs {b}");
        }
    }

    #[test]
    fn ramp_identity_and_norm() {
        let g = GridSpec::new(12, 10, 1.2, 1.0).unwrap();
        let s = ComplexField::from_fn(g, 0.7, |x, y| Complex64::new(1.0 + x, y));
        let zero = PhaseRamp::zero(0.01);
        assert_eq!(apply_phase_ramp(&s, &zero, g), s);
        let ramp = PhaseRamp::from_tilde(Vec2::new(13.0, -4.0), 0.01);
        let r = apply_phase_ramp(&s, &ramp, g);
        assert!((r.norm() - s.norm()).abs() < 1e-12 * s.norm());
        let back = apply_phase_ramp(&r, &PhaseRamp::from_tilde(Vec2::new(-13.0, 4.0), 0.01), g);
        for (a, b) in back.data.iter().zip(&s.data) {
            assert!((a - b).norm() < 1e-14);
        }
    }

    #[test]
    fn ramp_shifts_discrete_spectrum() {
        // direct DFT along x of a uniform row: the peak moves to the bin of δ
        let n = 32;
        let g = GridSpec::new(n, 1, 2.0, 1.0).unwrap();
        let s = ComplexField::from_fn(g, 1.0, |_, _| Complex64::new(1.0, 0.0));
        let dk = 2.0 * PI / g.x_extent;
        let bin = 5;
        let ramp = PhaseRamp::from_tilde(Vec2::new(bin as f64 * dk, 0.0), 1.0);
        let r = apply_phase_ramp(&s, &ramp, g);
        let power = |m: usize| {
            let k = m as f64 * dk;
            (0..n)
                .map(|i| r.data[i] * Complex64::from_polar(1.0, -k * g.x(i)))
                .sum::<Complex64>()
                .norm()
        };
        let best = (0..n).max_by(|&a, &b| power(a).total_cmp(&power(b))).unwrap();
        assert_eq!(best, bin);
    }

    #[test]
    fn gaussian_fit_recovers_width() {
        let samples: Vec<(f64, f64)> = (-4..=4)
            .map(|m| {
                let k = m as f64 * 5.0;
                (k, 0.7 * (-(k * k) / (11.4f64 * 11.4)).exp())
            })
            .collect();
        let fit = fit_gaussian_suppression(&samples).unwrap();
        assert!((fit.width - 11.4).abs() < 1e-6);
        assert!((fit.log_width - 11.4).abs() < 1e-9);
        assert!((fit.eta0 - 0.7).abs() < 1e-9);
        assert!((gaussian_sigma(fit.width) - 8.061).abs() < 1e-3);
        assert!(fit_gaussian_suppression(&samples[..4]).is_err());
        let mut bad = samples.clone();
        bad[2].1 = 0.0;
        assert!(matches!(fit_gaussian_suppression(&bad), Err(RouterError::Fit(_))));
    }

    #[test]
    fn gaussian_fit_follows_the_peak() {
        // heavier than Gaussian tails; reference values from an independent
        // nonlinear least-squares fit
        let half = [(6.0, 0.028789225), (4.5, 0.070619753), (3.0, 0.189017917), (1.5, 0.345993750)];
        let mut samples = vec![(0.0, 0.421537845)];
        for (k, eta) in half {
            samples.push((k, eta));
            samples.push((-k, eta));
        }
        let fit = fit_gaussian_suppression(&samples).unwrap();
        assert!((fit.width - 3.38999).abs() < 1e-4, "{}", fit.width);
        assert!((fit.eta0 - 0.420139).abs() < 1e-5);
        assert!(fit.log_width > 3.6);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn shell_preserved(phi in -PI..PI, k in 1.0f64..1e8) {
                let shifted = Vec2::new(k, 0.0) + delta_for_angle(phi, k);
                prop_assert!((shifted.norm() - k).abs() <= 1e-12 * k);
            }

            #[test]
            fn manipulated_emission_on_shell(theta in -PI..PI, phi in -PI..PI) {
                let kc = 0.99 * KS;
                let kappa = kappa_of(theta, KS, kc);
                let (_, mis) = emitted_wavevector(kappa + delta_for_angle(phi, KS), Vec2::from_polar(kc, theta), KS);
                prop_assert!(mis.abs() <= 1e-8 * KS);
            }
        }
    }
}

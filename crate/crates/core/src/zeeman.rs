//! Magnetic-gradient manipulation of the spin wave: durations, imprinted
//! phase, motional decoherence and the momentum-cancellation schedule.

use crate::constants::{K_B, M_RB87};
use crate::error::{Result, RouterError};
use crate::phasematch::Vec2;

/// Differential Zeeman coupling of the electron-spin transition,
/// 17.6 rad/μs/G, in rad/(s·G).
pub const MU_DIFF_OVER_HBAR: f64 = 1.76e7;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZeemanConfig {
    /// Field gradient, G/cm.
    pub gradient: f64,
    /// `(μ_g − μ_s)/ħ`, rad/(s·G).
    pub mu_diff_over_hbar: f64,
    /// Coil rise (and fall) time, s.
    pub t_rise: f64,
}

impl Default for ZeemanConfig {
    fn default() -> Self {
        Self { gradient: 50.0, mu_diff_over_hbar: MU_DIFF_OVER_HBAR, t_rise: 5e-6 }
    }
}

impl ZeemanConfig {
    /// Weaker gradient with a fast coil, suited to small angles.
    pub fn fast_small_angle() -> Self {
        Self { gradient: 7.0, t_rise: 1e-7, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gradient > 0.0) || !self.gradient.is_finite() {
            return Err(RouterError::Config(format!("gradient must be positive, got {}", self.gradient)));
        }
        if self.mu_diff_over_hbar == 0.0 || !self.mu_diff_over_hbar.is_finite() {
            return Err(RouterError::Config("differential Zeeman coupling must be nonzero".into()));
        }
        if !(self.t_rise >= 0.0) {
            return Err(RouterError::Config(format!("rise time must be >= 0, got {}", self.t_rise)));
        }
        Ok(())
    }

    /// Gradient in G/m.
    pub fn gradient_si(&self) -> f64 {
        self.gradient * 100.0
    }

    /// Rate at which the imprinted wavevector grows, 1/(m·s).
    pub fn delta_rate(&self) -> f64 {
        self.mu_diff_over_hbar.abs() * self.gradient_si()
    }
}

/// Time `T = |δ|/((μ_g − μ_s)/ħ · G)` to imprint a wavevector of magnitude
/// `delta_mag` (1/m) at full gradient.
pub fn manipulation_time(delta_mag: f64, cfg: &ZeemanConfig) -> Result<f64> {
    cfg.validate()?;
    if !(delta_mag >= 0.0) {
        return Err(RouterError::Domain(format!("|delta| must be >= 0, got {delta_mag}")));
    }
    Ok(delta_mag / cfg.delta_rate())
}

/// Phase imprinted at `r` (m) by the ramp `delta` (1/m); the global constant
/// is dropped.
pub fn accumulated_phase(delta: Vec2, r: Vec2) -> f64 {
    delta.dot(r)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ManipulationPlan {
    pub delta: Vec2,
    /// Time at full gradient, s.
    pub duration: f64,
    /// Including ramp-up and ramp-down, s.
    pub total_time: f64,
    /// Gradient direction (unit vector along `delta`; `+x` for `delta = 0`).
    pub direction: Vec2,
}

pub fn plan_manipulation(delta: Vec2, cfg: &ZeemanConfig) -> Result<ManipulationPlan> {
    let duration = manipulation_time(delta.norm(), cfg)?;
    let n = delta.norm();
    let direction = if n > 0.0 { delta * (1.0 / n) } else { Vec2::new(1.0, 0.0) };
    Ok(ManipulationPlan { delta, duration, total_time: duration + 2.0 * cfg.t_rise, direction })
}

/// Thermal speed `sqrt(k_B T / m)` of rubidium-87, m/s.
pub fn thermal_speed(temperature: f64) -> f64 {
    (K_B * temperature / M_RB87).sqrt()
}

/// Ballistic dephasing time `1/(v_th κ)` of a grating with wavenumber `kappa_mag`.
pub fn decoherence_time(temperature: f64, kappa_mag: f64) -> Result<f64> {
    if !(temperature >= 0.0) || !(kappa_mag >= 0.0) {
        return Err(RouterError::Domain(format!(
            "temperature ({temperature}) and wavenumber ({kappa_mag}) must be >= 0"
        )));
    }
    let rate = thermal_speed(temperature) * kappa_mag;
    Ok(if rate == 0.0 { f64::INFINITY } else { 1.0 / rate })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Feasibility {
    Comfortable,
    Marginal,
    Infeasible,
}

impl Feasibility {
    /// Comfortable below a tenth of `t_decoh`, marginal below `t_decoh`.
    pub fn classify(t_manip: f64, t_decoh: f64) -> Self {
        if t_manip < 0.1 * t_decoh {
            Self::Comfortable
        } else if t_manip < t_decoh {
            Self::Marginal
        } else {
            Self::Infeasible
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Comfortable => "comfortable",
            Self::Marginal => "marginal",
            Self::Infeasible => "infeasible",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeasibilityCell {
    pub temperature: f64,
    pub kappa_mag: f64,
    pub t_decoh: f64,
    /// Manipulation time for `|δ| = κ` plus both ramps.
    pub t_manip: f64,
    pub class: Feasibility,
}

/// Classifies every `(T, κ)` pair, temperatures varying slowest.
pub fn feasibility_map(temps: &[f64], kappas: &[f64], cfg: &ZeemanConfig) -> Result<Vec<FeasibilityCell>> {
    let mut out = Vec::with_capacity(temps.len() * kappas.len());
    for &temperature in temps {
        for &kappa_mag in kappas {
            let t_decoh = decoherence_time(temperature, kappa_mag)?;
            let t_manip = manipulation_time(kappa_mag, cfg)? + 2.0 * cfg.t_rise;
            out.push(FeasibilityCell {
                temperature,
                kappa_mag,
                t_decoh,
                t_manip,
                class: Feasibility::classify(t_manip, t_decoh),
            });
        }
    }
    Ok(out)
}

pub fn write_feasibility_csv<W: std::io::Write>(cells: &[FeasibilityCell], mut w: W) -> Result<()> {
    writeln!(w, "temperature_K,kappa_per_m,t_decoh_s,t_manip_s,class")?;
    for c in cells {
        writeln!(w, "{},{},{},{},{}", c.temperature, c.kappa_mag, c.t_decoh, c.t_manip, c.class.name())?;
    }
    Ok(())
}

/// Two-step schedule for long storage: `δ₁ = −κ` erases the grating right
/// after absorption, `δ₂ = κ + δ` restores it with the redirection added.
pub fn momentum_cancellation(kappa: Vec2, delta: Vec2) -> (Vec2, Vec2) {
    let d1 = -kappa;
    (d1, -d1 + delta)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn manipulation_time_examples() {
        let cfg = ZeemanConfig::default();
        assert!((manipulation_time(88e3, &cfg).unwrap() - 1e-6).abs() < 1e-18);
        assert_eq!(manipulation_time(0.0, &cfg).unwrap(), 0.0);
        let ks = 2.0 * std::f64::consts::PI / 795e-9;
        let t = manipulation_time(2.0 * ks, &cfg).unwrap();
        assert!((t - 1.8e-4).abs() < 0.05e-4, "{t}");
        let bad = ZeemanConfig { gradient: 0.0, ..cfg };
        assert!(matches!(manipulation_time(1.0, &bad), Err(RouterError::Config(_))));
        // linear in |δ|, inverse in gradient
        let half = ZeemanConfig { gradient: 25.0, ..cfg };
        assert_eq!(manipulation_time(176e3, &cfg).unwrap(), manipulation_time(88e3, &half).unwrap());
    }

    #[test]
    fn plan_includes_ramps() {
        let p = plan_manipulation(Vec2::new(0.0, 88e3), &ZeemanConfig::default()).unwrap();
        assert!((p.total_time - 11e-6).abs() < 1e-15);
        assert!((p.direction - Vec2::new(0.0, 1.0)).norm() < 1e-15);
        let fast = ZeemanConfig::fast_small_angle();
        assert!((2.0 * fast.t_rise - 0.2e-6).abs() < 1e-20);
    }

    #[test]
    fn phase_matches_time_integral() {
        // ∫ (μ_g−μ_s)/ħ · G (ê·r) dt over a square gradient pulse of length T
        let cfg = ZeemanConfig::default();
        let delta = Vec2::new(3.0e4, -5.0e4);
        let plan = plan_manipulation(delta, &cfg).unwrap();
        let r = Vec2::new(2.1e-3, 0.7e-3);
        let b_at_r = cfg.gradient_si() * plan.direction.dot(r);
        let n = 10_000;
        let dt = plan.duration / n as f64;
        let phase: f64 = (0..n).map(|_| cfg.mu_diff_over_hbar * b_at_r * dt).sum();
        assert!((phase - accumulated_phase(delta, r)).abs() < 1e-9 * phase.abs());
        assert_eq!(accumulated_phase(delta, Vec2::ZERO), 0.0);
        let twice = accumulated_phase(delta, r * 2.0);
        assert!((twice - 2.0 * accumulated_phase(delta, r)).abs() < 1e-12);
    }

    #[test]
    fn decoherence_examples() {
        assert_eq!(decoherence_time(300.0, 0.0).unwrap(), f64::INFINITY);
        let t = decoherence_time(300.0, 1e7).unwrap();
        let v = (1.380649e-23 * 300.0 / 1.443e-25f64).sqrt();
        assert!((t - 1.0 / (v * 1e7)).abs() < 1e-3 * t);
        assert!((t - 5.9e-10).abs() < 0.1e-10);
        let t4 = decoherence_time(1200.0, 1e7).unwrap();
        assert!((t4 - 0.5 * t).abs() < 1e-12 * t);
        assert!(decoherence_time(-1.0, 1.0).is_err());
        assert!(decoherence_time(1.0, -1.0).is_err());
    }

    #[test]
    fn feasibility_grid() {
        let cfg = ZeemanConfig::default();
        let temps = [1e-6, 1e-4, 1e-2, 1.0, 300.0];
        let kappas = [0.0, 1e2, 1e4, 1e6, 1.6e7];
        let cells = feasibility_map(&temps, &kappas, &cfg).unwrap();
        assert_eq!(cells.len(), 25);
        for c in &cells {
            assert_eq!(c.t_decoh, decoherence_time(c.temperature, c.kappa_mag).unwrap());
            if c.kappa_mag == 0.0 {
                assert_eq!(c.class, Feasibility::Comfortable);
            }
        }
        // hotter or larger κ never improves the class
        for (i, &t) in temps.iter().enumerate() {
            for (j, &k) in kappas.iter().enumerate() {
                let c = cells[i * kappas.len() + j];
                assert_eq!((c.temperature, c.kappa_mag), (t, k));
                if j + 1 < kappas.len() {
                    assert!(cells[i * kappas.len() + j + 1].class >= c.class);
                }
                if i + 1 < temps.len() {
                    assert!(cells[(i + 1) * kappas.len() + j].class >= c.class);
                }
            }
        }
    }

    #[test]
    fn cancellation_schedule() {
        let kappa = Vec2::new(143.0, 0.0);
        let (d1, d2) = momentum_cancellation(kappa, Vec2::ZERO);
        assert_eq!(d1, -kappa);
        assert_eq!(d2, kappa);
        let delta = Vec2::new(-3.0, 7.9e3);
        let (d1, d2) = momentum_cancellation(kappa, delta);
        let sum = d1 + d2;
        assert!((sum - delta).norm() < 1e-12 * delta.norm());
    }
}

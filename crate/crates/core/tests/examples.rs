//! Small-grid versions of what the runnable examples do.

use std::f64::consts::PI;

use spin_router::experiments::{phi_sweep, symmetric_points};
use spin_router::hardware::{design_coil, subspace_params, two_level_sweep, steps_for, Subspace};
use spin_router::params::{GridSpec, PhysicalUnits, SimParams};
use spin_router::phasematch::{delta_for_angle, Vec2, WaveGeometry};
use spin_router::solver::{run_absorption, SolverOptions};
use spin_router::zeeman::{feasibility_map, Feasibility, ZeemanConfig};
use spin_router::{ControlSpec, SignalSpec};

fn small(d: f64) -> SimParams {
    SimParams::with_optical_depth(PhysicalUnits::default(), d, 0.0, GridSpec::square(24, 1.44).unwrap()).unwrap()
}

fn control() -> ControlSpec {
    ControlSpec { amplitude: 14.0, w_par: 65.0, w_perp: 2.0, t0: 0.07, ..Default::default() }
}

#[test]
fn ideal_manipulation_emits_on_target() {
    let u = PhysicalUnits::default();
    let k_c = u.k_c_mag();
    for deg in [0.0f64, 30.0, 90.0, 150.0, 180.0] {
        let phi = deg.to_radians();
        let g = WaveGeometry::new(u.k_s_mag, k_c, 0.0, delta_for_angle(phi, u.k_s_mag), Vec2::new(k_c, 0.0));
        let diff = (g.phi - phi).rem_euclid(2.0 * PI);
        assert!(diff.min(2.0 * PI - diff) < 1e-9, "{deg}: {}", g.phi);
        assert!(g.k_mis.abs() * u.length < 1e-3);
    }
}

#[test]
fn absorption_on_a_small_grid() {
    let p = small(10.0);
    let r = run_absorption(&p, &SignalSpec::default(), &control(), None, SolverOptions::default()).unwrap();
    assert!(r.eta_abs > 0.6 && r.eta_abs < 1.0, "{}", r.eta_abs);
    let t0 = r.series[0].total();
    assert!(r.series.iter().all(|s| (s.total() - t0).abs() < 1e-9));
}

#[test]
fn backward_emission_beats_forward() {
    let p = small(10.0);
    let pts = phi_sweep(&p, &SignalSpec::default(), &control(), &[0.0, PI], SolverOptions::default()).unwrap();
    assert!(pts[1].report.eta_total > pts[0].report.eta_total);
    assert!(pts.iter().all(|q| q.report.eta_total > 0.0 && q.report.eta_total < 1.0));
}

#[test]
fn coil_for_a_one_centimetre_cloud() {
    let c = design_coil(0.01, 50.0, 5e-6, 63).unwrap();
    assert!((c.current * 63.0 - 62.2).abs() < 0.5);
    assert!((c.achieved_gradient() - 50.0).abs() < 1e-9);
}

#[test]
fn feasibility_worsens_with_temperature() {
    let cells = feasibility_map(&[1e-6, 1e-3], &[1e4], &ZeemanConfig::default()).unwrap();
    assert!(cells[0].t_decoh > cells[1].t_decoh);
    assert_ne!(cells[0].class, Feasibility::Infeasible);
}

#[test]
fn slow_ramp_is_adiabatic() {
    let p = subspace_params(Subspace::H1, 0.0, 500.0, 1e-8).unwrap();
    let r = two_level_sweep(&p, steps_for(&p)).unwrap();
    assert!(r.survival > 1.0 - 1e-5);
    assert!(r.norm_error < 1e-9);
}

#[test]
fn symmetric_points_are_symmetric() {
    let ks = symmetric_points(6.0, 9);
    assert_eq!(ks.len(), 9);
    assert!(ks.iter().zip(ks.iter().rev()).all(|(a, b)| (a + b).abs() < 1e-12));
    assert_eq!(ks[4], 0.0);
}

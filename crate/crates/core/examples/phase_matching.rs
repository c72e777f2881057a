//! Wavevector bookkeeping of one routing cycle: stored grating, manipulation,
//! emitted direction and the residual mismatch when the manipulation or the
//! emission control is off.
//!
//! ```text
//! cargo run --example phase_matching
//! ```

use std::f64::consts::PI;

use spin_router::params::PhysicalUnits;
use spin_router::phasematch::{delta_for_angle, mismatch_from_error, mismatch_sensitivity, Vec2, WaveGeometry};

fn main() {
    let u = PhysicalUnits::default();
    let k_s = u.k_s_mag;
    let k_c = k_s - u.omega_gs / u.c;
    let theta = 0.0;

    println!("|k_s| = {k_s:.6e} /m, |k_c| = {k_c:.6e} /m, |k_s| L = {:.3e}", k_s * u.length);
    println!("{:>7} {:>12} {:>12} {:>10} {:>12}", "phi", "delta_x", "delta_y", "emitted", "k_mis [1/L]");
    let k_c_vec = Vec2::from_polar(k_c, theta);
    for deg in [0.0, 30.0, 90.0, 150.0, 180.0] {
        let phi = (deg as f64).to_radians();
        let delta = delta_for_angle(phi, k_s);
        // the emission control keeps the absorption direction
        let g = WaveGeometry::new(k_s, k_c, theta, delta, k_c_vec);
        println!(
            "{deg:>7} {:>12.4e} {:>12.4e} {:>10.3} {:>12.3e}",
            delta.x,
            delta.y,
            g.phi.to_degrees(),
            g.k_mis * u.length
        );
    }

    // with a control prepared along each target direction only a small
    // manipulation is left: delta = k'_s - kappa - k'_c
    println!("\ncontrol prepared along the target:");
    let kappa = Vec2::new(k_s, 0.0) - k_c_vec;
    for deg in [30.0f64, 90.0, 180.0] {
        let phi = deg.to_radians();
        let k_c_prime = Vec2::from_polar(k_c, phi);
        let delta = Vec2::from_polar(k_s, phi) - kappa - k_c_prime;
        let g = WaveGeometry::new(k_s, k_c, theta, delta, k_c_prime);
        println!(
            "  target {deg:>5}: |delta| = {:.2} /m instead of {:.3e} /m, emitted {:.3} deg",
            delta.norm(),
            delta_for_angle(phi, k_s).norm(),
            g.phi.to_degrees()
        );
    }

    let phi = PI / 2.0;
    let (s_par, s_perp) = mismatch_sensitivity(phi, k_s);
    println!("\nphi = 90 deg: d k_mis / d eps = ({s_par:.3e}, {s_perp:.3e}) /m per unit relative error");
    for eps in [1e-6, 1e-5, 1e-4] {
        let k = mismatch_from_error(phi, k_s, eps, 0.0);
        println!("  relative delta error {eps:.0e} -> k_mis = {:.3} /L", k * u.length);
    }
}

//! Manipulation times for redirection and the temperature/grating map of
//! where the Zeeman manipulation beats motional dephasing.
//!
//! ```text
//! cargo run --example feasibility
//! ```

use std::f64::consts::PI;

use spin_router::params::PhysicalUnits;
use spin_router::phasematch::{delta_for_angle, kappa_of};
use spin_router::zeeman::{
    decoherence_time, feasibility_map, momentum_cancellation, plan_manipulation, thermal_speed, ZeemanConfig,
};

fn main() -> spin_router::Result<()> {
    let u = PhysicalUnits::default();
    let slow = ZeemanConfig::default();
    let fast = ZeemanConfig::fast_small_angle();

    println!("redirection angle -> |delta| and time at full gradient");
    for deg in [1.0, 10.0, 45.0, 90.0, 180.0] {
        let delta = delta_for_angle((deg as f64).to_radians(), u.k_s_mag);
        let a = plan_manipulation(delta, &slow)?;
        let b = plan_manipulation(delta, &fast)?;
        println!(
            "  {deg:>5} deg  |delta| = {:.3e} /m  T = {:.3e} s ({} G/cm)  T = {:.3e} s ({} G/cm)",
            delta.norm(),
            a.total_time,
            slow.gradient,
            b.total_time,
            fast.gradient
        );
    }

    let k_c = u.k_s_mag - u.omega_gs / u.c;
    let forward = kappa_of(0.0, u.k_s_mag, k_c).norm();
    let backward = kappa_of(PI, u.k_s_mag, k_c).norm();
    println!("|kappa| co-propagating = {forward:.1} /m, counter-propagating = {backward:.3e} /m");

    let temps = [1e-6, 1e-5, 1e-4, 1e-3];
    let kappas = [forward, 1e4, 1e6, backward];
    println!("\n{:>10} {:>12} {:>12} {:>12} {:>12}", "T [K]", "v_th [m/s]", "kappa [/m]", "t_decoh [s]", "class");
    for c in feasibility_map(&temps, &kappas, &slow)? {
        println!(
            "{:>10.0e} {:>12.3e} {:>12.3e} {:>12.3e} {:>12}",
            c.temperature,
            thermal_speed(c.temperature),
            c.kappa_mag,
            c.t_decoh,
            c.class.name()
        );
    }

    // erase the large backward grating right after storage, restore it with the redirection added
    let kappa = kappa_of(PI, u.k_s_mag, k_c);
    let (d1, d2) = momentum_cancellation(kappa, delta_for_angle(PI / 2.0, u.k_s_mag));
    let residual = kappa + d1;
    println!(
        "\ncancellation: |kappa + delta1| = {:.3e} /m, t_decoh at 100 uK = {:.3e} s, |delta2| = {:.3e} /m",
        residual.norm(),
        decoherence_time(1e-4, residual.norm())?,
        d2.norm()
    );
    Ok(())
}

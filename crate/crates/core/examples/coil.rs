//! Sizes the Maxwell coil pair that switches the field gradient.
//!
//! ```text
//! cargo run --example coil -- [radius_m] [gradient_G_per_cm] [rise_time_s]
//! ```

use spin_router::hardware::{ampere_turns, design_coil_with, CoilOptions};

fn main() -> spin_router::Result<()> {
    let a: Vec<f64> = std::env::args().skip(1).map(|s| s.parse().expect("numeric arguments")).collect();
    let radius = a.first().copied().unwrap_or(0.01);
    let gradient = a.get(1).copied().unwrap_or(50.0);
    let tau = a.get(2).copied().unwrap_or(5e-6);

    let needed = ampere_turns(radius, gradient);
    println!("a = {} cm, G = {gradient} G/cm, tau = {} us", radius * 100.0, tau * 1e6);
    println!("required N*I = {needed:.2} A");

    println!("{:>5} {:>9} {:>10} {:>9}", "N_c", "I [A]", "L [uH]", "V [V]");
    let n_best = needed.round() as u32 + 1;
    for n in [n_best / 4, n_best / 2, n_best, 2 * n_best] {
        let c = design_coil_with(radius, gradient, tau, n.max(1), CoilOptions::default())?;
        println!("{:>5} {:>9.3} {:>10.1} {:>9.2}", c.n_c, c.current, c.inductance * 1e6, c.voltage);
    }
    // with a 0.5 Ohm winding the supply also has to cover the ohmic drop
    let r = design_coil_with(radius, gradient, tau, n_best, CoilOptions { resistance: Some(0.5), ..Default::default() })?;
    println!("with R = 0.5 Ohm: V = {:.2} V, rise time check {:.2} us", r.voltage, r.achieved_rise_time() * 1e6);
    Ok(())
}

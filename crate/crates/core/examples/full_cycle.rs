//! One complete storage cycle: absorb, imprint the manipulation for a new
//! direction, re-emit along it.
//!
//! ```text
//! cargo run --release --example full_cycle -- [phi_deg] [d]
//! ```

use spin_router::experiments::ideal_manipulation;
use spin_router::solver::{run_full, CycleWindows, SolverOptions};
use spin_router::{ControlSpec, SignalSpec, SimParams};

fn main() -> spin_router::Result<()> {
    let mut args = std::env::args().skip(1).map(|s| s.parse::<f64>().expect("numeric arguments"));
    let phi_deg = args.next().unwrap_or(180.0);
    let d = args.next().unwrap_or(17.0);
    let phi = phi_deg.to_radians();

    let params = SimParams::rubidium(d)?;
    let signal = SignalSpec::default();
    let control = ControlSpec { amplitude: 20.0, w_par: 50.0, w_perp: 1.0, t0: 0.05, ..Default::default() };
    let ramp = ideal_manipulation(&params, phi);
    println!("d = {d}, phi = {phi_deg} deg, delta = ({:.4e}, {:.4e}) /m", ramp.delta_si.x, ramp.delta_si.y);

    let r = run_full(&params, &signal, &control, &ramp, &control, phi, CycleWindows::default(), SolverOptions::default())?;
    println!("eta_abs   = {:.4}", r.eta_abs);
    println!("eta_em    = {:.4}", r.eta_em);
    println!("eta_total = {:.4}", r.eta_total);
    let w = r.emission_window;
    println!("emission counted over t in [{:.4}, {:.4}]", w.start, w.end);
    for msg in &r.warnings {
        println!("warning: {msg}");
    }
    Ok(())
}

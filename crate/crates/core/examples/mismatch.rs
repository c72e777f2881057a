//! Gaussian suppression of the efficiency by a wavenumber mismatch, either
//! on the incoming signal or left on the stored spin wave.
//!
//! ```text
//! cargo run --release --example mismatch -- [abs|em] [points]
//! ```

use spin_router::experiments::{absorption_mismatch_sweep, emission_mismatch_sweep, symmetric_points, MismatchSweep};
use spin_router::solver::SolverOptions;
use spin_router::{ControlSpec, SignalSpec, SimParams};

fn report(label: &str, unit: &str, m: &MismatchSweep) {
    println!("{label}");
    for (k, eta) in &m.samples {
        println!("  k_mis = {k:>7.2} {unit:<5} eta = {eta:.4}");
    }
    println!(
        "  fit: eta(0) = {:.4}, width = {:.3} {unit} (log-linear fit {:.3}), rms residual = {:.2e}",
        m.fit.eta0, m.fit.width, m.fit.log_width, m.fit.rms_residual
    );
}

fn main() -> spin_router::Result<()> {
    let mut args = std::env::args().skip(1);
    let which = args.next().unwrap_or_else(|| "abs".into());
    let points: usize = args.next().map(|s| s.parse().expect("points")).unwrap_or(7);

    let params = SimParams::rubidium(6.0)?;
    let signal = SignalSpec::default();
    // absorption optimum at d = 6
    let control = ControlSpec { amplitude: 13.89, w_par: 64.25, w_perp: 2.19, t0: 0.0742, y0: 0.0197, ..Default::default() };
    let opts = SolverOptions::default();
    match which.as_str() {
        "em" => {
            let m = emission_mismatch_sweep(&params, &signal, &control, 0.0, &symmetric_points(6.0, points), opts)?;
            report("stored spin wave, forward retrieval", "1/L", &m);
        }
        _ => {
            let m = absorption_mismatch_sweep(&params, &signal, &control, &symmetric_points(24.0, points), opts)?;
            report("detuned signal", "gam/c", &m);
        }
    }
    Ok(())
}

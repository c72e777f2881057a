//! Searches the control pulse that maximizes the absorption efficiency,
//! then probes how sharply the optimum depends on each parameter.
//!
//! ```text
//! cargo run --release --example optimize -- [d] [budget] [theta_deg]
//! ```

use spin_router::optimizer::{optimize, robustness_scan, ControlParam, OptProblem};
use spin_router::params::eta_ref;
use spin_router::SimParams;

fn main() -> spin_router::Result<()> {
    let mut args = std::env::args().skip(1).map(|s| s.parse::<f64>().expect("numeric arguments"));
    let d = args.next().unwrap_or(6.0);
    let budget = args.next().unwrap_or(40.0) as usize;
    let theta = args.next().unwrap_or(0.0).to_radians();

    let params = SimParams::rubidium(d)?;
    let problem = OptProblem::absorption(params, theta, budget, 1);
    let t = std::time::Instant::now();
    let r = optimize(&problem)?;

    println!("d = {d}, theta = {:.1} deg, {} evaluations in {:.1?}", theta.to_degrees(), r.evaluations_used, t.elapsed());
    let mut best = f64::NEG_INFINITY;
    for (i, v) in &r.trace {
        if *v > best + 1e-3 {
            best = *v;
            println!("  eval {i:>4}: eta_abs = {v:.4}");
        }
    }
    let b = r.best;
    println!("best eta_abs = {:.4} (eta_ref = {:.4})", r.best_value, eta_ref(params.d_prime)?);
    println!(
        "control: amplitude {:.3}, w_par {:.3}, w_perp {:.3}, t0 {:.4}, x0 {:.4}, y0 {:.4}",
        b.amplitude, b.w_par, b.w_perp, b.t0, b.x0, b.y0
    );

    for p in [ControlParam::Amplitude, ControlParam::WidthPar, ControlParam::WidthPerp] {
        let scan = robustness_scan(&problem, &b, p, 0.2, 3)?;
        let s: Vec<String> = scan.iter().map(|(v, e)| format!("{v:.3}->{e:.4}")).collect();
        println!("  {:<10} {}", p.name(), s.join("  "));
    }
    Ok(())
}

//! Total efficiency versus re-emission angle with one control reused for
//! every direction; the absorption stage runs once.
//!
//! ```text
//! cargo run --release --example redirect_sweep -- [d] [points]
//! ```

use std::f64::consts::PI;

use spin_router::experiments::phi_sweep;
use spin_router::solver::SolverOptions;
use spin_router::{ControlSpec, SignalSpec, SimParams};

fn main() -> spin_router::Result<()> {
    let mut args = std::env::args().skip(1);
    let d: f64 = args.next().map(|s| s.parse().expect("d")).unwrap_or(17.0);
    let n: usize = args.next().map(|s| s.parse().expect("points")).unwrap_or(5);

    let params = SimParams::rubidium(d)?;
    let control = ControlSpec { amplitude: 20.0, w_par: 50.0, w_perp: 1.0, t0: 0.05, ..Default::default() };
    let phis: Vec<f64> = (0..n).map(|i| PI * i as f64 / (n.max(2) - 1) as f64).collect();
    let points = phi_sweep(&params, &SignalSpec::default(), &control, &phis, SolverOptions::default())?;

    println!("{:>8} {:>8} {:>8} {:>8}", "phi", "eta_abs", "eta_em", "eta");
    for p in &points {
        let r = &p.report;
        println!("{:>8.1} {:>8.4} {:>8.4} {:>8.4}", p.phi.to_degrees(), r.eta_abs, r.eta_em, r.eta_total);
    }
    if let Some(best) = points.iter().max_by(|a, b| a.report.eta_total.total_cmp(&b.report.eta_total)) {
        println!("best direction: {:.1} deg", best.phi.to_degrees());
    }
    Ok(())
}

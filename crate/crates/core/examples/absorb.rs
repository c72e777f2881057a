//! Stores a single-photon signal pulse in the cloud and compares the
//! absorption efficiency with the analytic reference curves.
//!
//! ```text
//! cargo run --release --example absorb -- [d] [out_dir]
//! ```

use std::fs::File;

use spin_router::params::{eta_cavity_max, eta_ref};
use spin_router::solver::{run_absorption, write_series_csv, SolverOptions};
use spin_router::{ControlSpec, SignalSpec, SimParams};

fn main() -> spin_router::Result<()> {
    let mut args = std::env::args().skip(1);
    let d: f64 = args.next().map(|s| s.parse().expect("d must be a number")).unwrap_or(20.0);
    let out = args.next();

    let params = SimParams::rubidium(d)?;
    let signal = SignalSpec::default();
    // optimum found by the `optimize` example at d = 20
    let control = ControlSpec { amplitude: 13.08, w_par: 100.5, w_perp: 1.19, t0: 0.0114, y0: -0.0114, ..Default::default() };

    let r = run_absorption(&params, &signal, &control, None, SolverOptions::default())?;
    let first = r.series.first().map(|s| s.total()).unwrap_or(1.0);
    let drift = r.series.iter().map(|s| (s.total() - first).abs()).fold(0.0, f64::max);

    println!("d = {d}, d' = {:.3}", params.d_prime);
    println!("eta_abs         = {:.4}", r.eta_abs);
    println!("eta_ref(d')     = {:.4}", eta_ref(params.d_prime)?);
    println!("eta_cavity(d')  = {:.4}", eta_cavity_max(params.d_prime)?);
    println!("ledger drift    = {drift:.2e}");
    for w in &r.warnings {
        println!("warning: {w}");
    }

    if let Some(dir) = out {
        std::fs::create_dir_all(&dir)?;
        write_series_csv(&r.series, File::create(format!("{dir}/series.csv"))?)?;
        r.state.s.write_csv(File::create(format!("{dir}/spin_wave.csv"))?)?;
        println!("wrote {dir}/series.csv and {dir}/spin_wave.csv");
    }
    Ok(())
}

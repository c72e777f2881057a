//! Landau–Zener estimates and exact two-level sweeps for the hyperfine
//! blocks while the bias field is ramped.
//!
//! ```text
//! cargo run --release --example adiabatic -- [b1_gauss]
//! ```

use spin_router::hardware::{
    hyperfine_z_bound, landau_zener_p, landau_zener_z, steps_for, subspace_params, two_level_sweep, Subspace,
};

fn main() -> spin_router::Result<()> {
    let b1: f64 = std::env::args().nth(1).map(|s| s.parse().expect("b1 in gauss")).unwrap_or(500.0);
    println!("ramp 0 -> {b1} G");
    println!("{:>8} {:>6} {:>12} {:>12} {:>14}", "tau[ns]", "block", "z", "bound z", "1 - survival");
    for tau_ns in [1.0, 3.0, 10.0, 100.0, 1000.0] {
        let tau = tau_ns * 1e-9;
        for s in [Subspace::H1, Subspace::H2, Subspace::H3] {
            let p = subspace_params(s, 0.0, b1, tau)?;
            let r = two_level_sweep(&p, steps_for(&p))?;
            println!(
                "{:>8} {:>6} {:>12.2} {:>12.2} {:>14.3e}",
                tau_ns,
                format!("{s:?}"),
                landau_zener_z(p.v, p.b)?,
                hyperfine_z_bound(b1, tau)?,
                1.0 - r.survival
            );
        }
    }
    let p = subspace_params(Subspace::H1, 0.0, b1, 1e-9)?;
    println!("Landau-Zener transition probability at 1 ns (H1): {:.3e}", landau_zener_p(p.v, p.b)?);
    Ok(())
}

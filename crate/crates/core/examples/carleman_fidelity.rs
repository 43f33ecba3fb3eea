//! Compares the bilinearized RC ladder with the original nonlinear ladder.
//!
//! Carleman bilinearization truncates the Taylor series of the diode law at
//! second order, so the two outputs agree closely only for small inputs.
//! Halving `dt` barely moves the gap, which shows it is modeling error.
//!
//! Run: `cargo run --release --example carleman_fidelity -- [N]`

use pbmor::benchmarks::rc::gen_rc;
use pbmor::simulate::{relative_l2_error, simulate_bilinear, simulate_rc_nonlinear, InputSignal};

fn main() -> pbmor::Result<()> {
    let size: usize = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(10);
    let sys = gen_rc(size)?;
    let span = (0.0, 5.0);
    println!("{:>10} {:>6} {:>14} {:>14}", "amplitude", "p", "gap (dt)", "gap (dt/2)");
    for amplitude in [0.01, 0.05, 0.1, 0.5] {
        let u = InputSignal::scaled_exp_decay(amplitude);
        for p in [1.0, 18.0] {
            let gaps: Vec<f64> = [1e-3, 5e-4]
                .iter()
                .map(|&dt| {
                    let bil = simulate_bilinear(&sys, &[p], &u, span, dt)?;
                    let nl = simulate_rc_nonlinear(size, p, &u, span, dt)?;
                    relative_l2_error(&nl, &bil)
                })
                .collect::<pbmor::Result<_>>()?;
            println!("{amplitude:>10} {p:>6} {:>14.3e} {:>14.3e}", gaps[0], gaps[1]);
        }
    }
    Ok(())
}

//! IRKA shifts of the linear part of the RC ladder at several parameters,
//! with the Hermite residual that certifies the fixed point.
//!
//! Run: `cargo run --release --example irka_shifts`

use pbmor::benchmarks::rc::gen_rc;
use pbmor::irka::{fixed_point_residual, hermite_residual, irka_linear, IrkaOptions, LinearModel};

fn main() -> pbmor::Result<()> {
    let sys = gen_rc(10)?;
    for p_hat in [1.0, 18.0, 50.0] {
        for r in [2, 4] {
            let res = irka_linear(&sys, &[p_hat], r, &IrkaOptions::default())?;
            let full = LinearModel::at(&sys, &[p_hat])?;
            let shifts: Vec<String> = res.shifts.iter().map(|s| format!("{:.4}", s.re)).collect();
            println!(
                "p̂ = {p_hat:>4}, r = {r}: shifts [{}], {} iterations, converged {}, Hermite residual {:.2e}, mirror residual {:.2e}",
                shifts.join(", "),
                res.iterations,
                res.converged,
                hermite_residual(&full, &res)?,
                fixed_point_residual(&full, &res)?
            );
        }
    }
    Ok(())
}

//! Reduces the bilinearized RC ladder with IRKA shifts at two parameter
//! samples and compares reduced and full outputs at unsampled parameters.
//!
//! Run: `cargo run --release --example rc_reduction -- [N]`

use std::time::Instant;

use pbmor::basis::{build_global_basis, AssemblyOptions, InterpolationSpec, OrderingMode};
use pbmor::benchmarks::rc::{gen_rc, SAMPLE_POINTS, TEST_POINTS};
use pbmor::irka::{irka_linear, IrkaOptions};
use pbmor::projection::reduce;
use pbmor::simulate::{relative_l2_error, BilinearStepper, InputSignal};

fn main() -> pbmor::Result<()> {
    let size: usize = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(30);
    let start = Instant::now();
    let sys = gen_rc(size)?;
    println!("RC ladder with {size} nodes: n = {}", sys.dims().n);

    let mut specs = Vec::new();
    for &p_hat in &SAMPLE_POINTS {
        let irka = irka_linear(&sys, &[p_hat], 2, &IrkaOptions::default())?;
        println!("p̂ = {p_hat}: shifts {:?} after {} iterations", irka.shifts, irka.iterations);
        specs.push(InterpolationSpec::siso(irka.shifts, p_hat).with_ordering(OrderingMode::AllOrderings));
    }
    let basis = build_global_basis(&sys, &specs, &AssemblyOptions::default())?;
    let t = &basis.provenance.truncation;
    println!("V rank {}, W rank {}, padded {}, r = {}", t.v_rank, t.w_rank, t.padded, basis.rank());
    let rsys = reduce(&sys, &basis)?;

    let inputs = [("exp(-t)", InputSignal::exp_decay()), ("(cos(5πt)+1)/2", InputSignal::cosine())];
    println!("{:>16} {:>12} {:>12} {:>12}", "input", "p = 18", "p = 40", "p = 62");
    let mut table = vec![Vec::new(); inputs.len()];
    for &p in &TEST_POINTS {
        let full = BilinearStepper::new(&sys, &[p], 1e-3)?;
        let red = BilinearStepper::new(&rsys, &[p], 1e-3)?;
        for (row, (_, u)) in table.iter_mut().zip(&inputs) {
            let yf = full.run(u, (0.0, 5.0), None, false)?;
            let yr = red.run(u, (0.0, 5.0), None, false)?;
            row.push(relative_l2_error(&yf, &yr)?);
        }
    }
    for ((name, _), row) in inputs.iter().zip(&table) {
        println!("{name:>16} {:>12.3e} {:>12.3e} {:>12.3e}", row[0], row[1], row[2]);
    }
    println!("elapsed {:.1?}", start.elapsed());
    Ok(())
}

//! Sweeps the RC ladder's parameter range and writes the reduced-versus-full
//! output error at every point to `sweep.csv`.
//!
//! Run: `cargo run --release --example parameter_sweep -- [N] [count]`

use std::path::Path;

use pbmor::basis::{build_global_basis, AssemblyOptions, InterpolationSpec, OrderingMode};
use pbmor::benchmarks::rc::{gen_rc, SAMPLE_POINTS};
use pbmor::irka::{irka_linear, IrkaOptions};
use pbmor::projection::reduce;
use pbmor::simulate::InputSignal;
use pbmor::sweep::{sweep, Sampling, SweepOptions};

fn main() -> pbmor::Result<()> {
    let mut args = std::env::args().skip(1);
    let size: usize = args.next().and_then(|a| a.parse().ok()).unwrap_or(10);
    let count: usize = args.next().and_then(|a| a.parse().ok()).unwrap_or(100);
    let sys = gen_rc(size)?;
    let specs = SAMPLE_POINTS
        .iter()
        .map(|&p| {
            let shifts = irka_linear(&sys, &[p], 2, &IrkaOptions::default())?.shifts;
            Ok(InterpolationSpec::siso(shifts, p).with_ordering(OrderingMode::AllOrderings))
        })
        .collect::<pbmor::Result<Vec<_>>>()?;
    let rsys = reduce(&sys, &build_global_basis(&sys, &specs, &AssemblyOptions::default())?)?;
    let inputs = vec![("exp(-t)".to_string(), InputSignal::exp_decay()), ("cosine".to_string(), InputSignal::cosine())];
    let opts = SweepOptions { count, sampling: Sampling::Linspace, ..Default::default() };
    let bx = sys.param_box().expect("RC ladder has a parameter box").clone();
    let report = sweep(&sys, &rsys, &bx, &inputs, &opts)?;
    report.write_csv(Path::new("sweep.csv"))?;
    println!("n = {}, r = {}, {} points", sys.dims().n, rsys.order(), report.rows.len());
    for s in &report.summary {
        println!("{:>8}: max {:.3e} at p = {:.2}, mean {:.3e}", s.input, s.max_error, s.worst_point[0], s.mean_error);
    }
    Ok(())
}

//! Builds reductions of the RC ladder under several constructions and prints
//! which interpolation conditions each one is guaranteed to satisfy and
//! whether they hold.
//!
//! Run: `cargo run --release --example verify_interpolation`

use pbmor::basis::{build_global_basis, AssemblyOptions, HessianEnrichment, InterpolationSpec, OrderingMode, Sidedness};
use pbmor::benchmarks::rc::gen_rc;
use pbmor::irka::{irka_linear, IrkaOptions};
use pbmor::projection::reduce;
use pbmor::verify::{verify, Condition, Tolerances};

fn main() -> pbmor::Result<()> {
    let sys = gen_rc(10)?;
    let shifts = irka_linear(&sys, &[1.0], 2, &IrkaOptions::default())?.shifts;
    let base = InterpolationSpec::siso(shifts, 1.0);
    let cases = [
        ("sequential, two-sided", base.clone(), Sidedness::TwoSided),
        ("all orderings, two-sided", base.clone().with_ordering(OrderingMode::AllOrderings), Sidedness::TwoSided),
        ("sequential, V only", base.clone(), Sidedness::VOnly),
        ("sequential, W only", base.clone(), Sidedness::WOnly),
        (
            "all orderings + Hessian columns",
            base.clone().with_ordering(OrderingMode::AllOrderings).with_hessian(HessianEnrichment::OnV),
            Sidedness::TwoSided,
        ),
    ];
    let conds = [Condition::ValueRight, Condition::ValueLeft, Condition::FreqDerivative, Condition::Jacobian, Condition::Hessian];
    println!("{:<34} {:>3}  condition: warranted/total, worst warranted mismatch", "construction", "r");
    for (label, spec, sidedness) in cases {
        let basis = build_global_basis(&sys, std::slice::from_ref(&spec), &AssemblyOptions { sidedness, ..Default::default() })?;
        let rsys = reduce(&sys, &basis)?;
        let report = verify(&sys, &rsys, &[], &Tolerances::default())?;
        let cells: Vec<String> = conds
            .iter()
            .map(|&c| {
                let recs: Vec<_> = report.of(c).collect();
                let warranted = recs.iter().filter(|r| r.warranted).count();
                format!("{c:?} {warranted}/{} {:.1e}", recs.len(), report.max_mismatch(c, true).unwrap_or(f64::NAN))
            })
            .collect();
        let verdict = if report.all_warranted_pass() { "ok" } else { "FAILED" };
        println!("{label:<34} {:>3}  {}  [{verdict}]", rsys.order(), cells.join(" | "));
    }
    Ok(())
}

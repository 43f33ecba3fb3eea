//! Four-parameter advection-diffusion benchmark: DEIM for the Gaussian
//! source, interpolatory reduction at four samples, a simulation at unsampled
//! parameters and a sweep with the source width pinned.
//!
//! All right and left blocks, Hessian columns included, are concatenated
//! into one Galerkin basis truncated to `r = 20`. The Petrov-Galerkin
//! variant of this multi-input model is unstable at the test points.
//!
//! Run: `cargo run --release --example advection_diffusion -- [grid]`

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use pbmor::basis::{build_global_basis, AssemblyOptions, HessianEnrichment, InterpolationSpec, OrderingMode, Sidedness};
use pbmor::benchmarks::advdiff::{constant_input, oscillating_input, param_box, AdvDiffGrid, SAMPLE_POINTS, TEST_POINTS};
use pbmor::benchmarks::gen_advdiff_deim;
use pbmor::deim::{DeimModel, DEFAULT_POD_TOL, DEFAULT_SNAPSHOTS};
use pbmor::irka::{irka_linear, IrkaOptions};
use pbmor::projection::reduce;
use pbmor::simulate::{relative_l2_error, BilinearStepper, InputSignal};
use pbmor::sweep::{sweep, Sampling, SweepOptions};

fn vector_input(f: fn(f64) -> Vec<f64>) -> InputSignal {
    let names = ["u1", "u2", "u3", "u4"];
    InputSignal::from_fns(names.iter().enumerate().map(|(j, n)| (*n, std::sync::Arc::new(move |t: f64| f(t)[j]) as _)).collect())
}

fn main() -> pbmor::Result<()> {
    let size: usize = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(21);
    let grid = AdvDiffGrid::new(size)?;
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let model = DeimModel::fit(&grid.load_snapshots(DEFAULT_SNAPSHOTS, &mut rng), DEFAULT_POD_TOL)?;
    let sys = gen_advdiff_deim(size, &model)?;
    println!("n = {}, DEIM order {}", sys.dims().n, model.order());

    let specs = SAMPLE_POINTS
        .iter()
        .map(|p| {
            let irka = irka_linear(&sys, p, 2, &IrkaOptions::default())?;
            let mut spec = InterpolationSpec::siso(irka.shifts, p.to_vec())
                .with_ordering(OrderingMode::AllOrderings)
                .with_hessian(HessianEnrichment::OnV);
            spec.b = irka.b_dirs[0].clone();
            spec.c = irka.c_dirs[0].clone();
            Ok(spec)
        })
        .collect::<pbmor::Result<Vec<_>>>()?;
    let opts = AssemblyOptions { sidedness: Sidedness::Symmetric, max_rank: Some(20), ..Default::default() };
    let basis = build_global_basis(&sys, &specs, &opts)?;
    let rsys = reduce(&sys, &basis)?;
    println!("r = {}", rsys.order());

    let inputs = [("oscillating", vector_input(oscillating_input)), ("constant", vector_input(constant_input))];
    for p in &TEST_POINTS {
        let full = BilinearStepper::new(&sys, p, 1e-3)?;
        let red = BilinearStepper::new(&rsys, p, 1e-3)?;
        let errs: Vec<String> = inputs
            .iter()
            .map(|(name, u)| {
                let e = relative_l2_error(&full.run(u, (0.0, 5.0), None, false)?, &red.run(u, (0.0, 5.0), None, false)?)?;
                Ok(format!("{name} {e:.2e}"))
            })
            .collect::<pbmor::Result<_>>()?;
        println!("p = {p:.3?}: {}", errs.join(", "));
    }

    let opts = SweepOptions { count: 20, sampling: Sampling::Random { seed: 1 }, fixed: vec![(3, 5.0)], ..Default::default() };
    let named: Vec<(String, InputSignal)> = inputs.iter().map(|(n, u)| (n.to_string(), u.clone())).collect();
    let report = sweep(&sys, &rsys, &param_box(), &named, &opts)?;
    for s in &report.summary {
        println!("sweep with p4 = 5, {}: max {:.3e} at {:.3?}", s.input, s.max_error, s.worst_point);
    }
    Ok(())
}

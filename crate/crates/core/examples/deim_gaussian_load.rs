//! Compresses the Gaussian source of the advection-diffusion benchmark with
//! POD and Q-DEIM and reports the approximation error on fresh draws.
//!
//! Run: `cargo run --release --example deim_gaussian_load -- [grid] [pod_tol]`

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use pbmor::benchmarks::advdiff::{deim_accuracy, AdvDiffGrid};
use pbmor::deim::{DeimModel, DEFAULT_POD_TOL, DEFAULT_SNAPSHOTS};

fn main() -> pbmor::Result<()> {
    let mut args = std::env::args().skip(1);
    let size: usize = args.next().and_then(|a| a.parse().ok()).unwrap_or(21);
    let tol: f64 = args.next().and_then(|a| a.parse().ok()).unwrap_or(DEFAULT_POD_TOL);
    let grid = AdvDiffGrid::new(size)?;
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let model = DeimModel::fit(&grid.load_snapshots(DEFAULT_SNAPSHOTS, &mut rng), tol)?;
    let s = model.pod_singular_values();
    println!("{} nodes, POD tol {tol:e}: M = {} (σ_M/σ_1 = {:.2e})", grid.nodes(), model.order(), s[model.order() - 1] / s[0]);
    let first: Vec<String> = model
        .rows()
        .iter()
        .take(8)
        .map(|&r| {
            let (x, y) = grid.coords(r);
            format!("({x:.2}, {y:.2})")
        })
        .collect();
    println!("first selected nodes: {}", first.join(" "));
    let acc = deim_accuracy(grid, &model, 10_000, &mut rng)?;
    println!("over {} draws: max relative error {:.3e}, mean {:.3e}", acc.draws, acc.max_relative_error, acc.mean_relative_error);
    println!("worst parameter {:?}", acc.worst_point);
    println!("selected rows reproduced to {:.1e}", acc.max_row_mismatch);
    Ok(())
}

//! Command-line front end: generate benchmarks, reduce, verify, simulate, sweep.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use pbmor::basis::{build_global_basis, AssemblyOptions, InterpolationSpec, ReductionBasis, Sidedness, DEFAULT_TRUNC_TOL};
use pbmor::benchmarks::advdiff::{deim_accuracy, deim_registry, AdvDiffGrid};
use pbmor::benchmarks::{gen_advdiff, gen_advdiff_deim, gen_rc};
use pbmor::deim::{DeimModel, DEFAULT_POD_TOL, DEFAULT_SNAPSHOTS};
use pbmor::irka::{irka_linear, IrkaOptions, IrkaResult};
use pbmor::projection::reduce;
use pbmor::simulate::{relative_l2_error, BilinearStepper, InputSignal, DEFAULT_DT, DEFAULT_T_END};
use pbmor::sweep::{parse_fixed, sweep, Sampling, SweepOptions};
use pbmor::system::manifest::{load_system, save_system};
use pbmor::system::{CoefficientRegistry, ParametricBilinearSystem};
use pbmor::verify::{verify, Tolerances};
use pbmor::{c64, Error, Result};

#[derive(Parser)]
#[command(name = "pbmor", version, about = "Interpolatory reduction of parametric bilinear systems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct SystemArgs {
    /// System manifest (JSON) written by gen-rc or gen-advdiff.
    #[arg(long)]
    system: PathBuf,
    /// DEIM sidecar resolving `deim<k>` coefficient tags.
    #[arg(long)]
    deim_model: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Bilinearized RC ladder.
    GenRc {
        #[arg(long = "N", default_value_t = 10)]
        size: usize,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Advection-diffusion benchmark on a square grid.
    GenAdvdiff {
        /// Interior nodes per side.
        #[arg(long, default_value_t = 21)]
        grid: usize,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Replace the source column by this DEIM model.
        #[arg(long)]
        deim_model: Option<PathBuf>,
    },
    /// IRKA shifts of the linear part at one parameter point.
    Shifts {
        #[command(flatten)]
        sys: SystemArgs,
        #[arg(long, default_value_t = 2)]
        r: usize,
        /// Comma-separated parameter point.
        #[arg(long, value_delimiter = ',', required = true)]
        p_hat: Vec<f64>,
        /// Write the result here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Build a projection basis and the reduced system.
    Reduce {
        #[command(flatten)]
        sys: SystemArgs,
        /// One interpolation spec or a list of them (JSON); `shifts` output is also accepted.
        #[arg(long)]
        spec: PathBuf,
        /// Galerkin projection with W = V.
        #[arg(long)]
        one_sided: bool,
        #[arg(long, default_value_t = DEFAULT_TRUNC_TOL)]
        trunc_tol: f64,
        #[arg(long)]
        max_rank: Option<usize>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[arg(long, default_value = "rom")]
        stem: String,
    },
    /// Check interpolation conditions; exits nonzero if a warranted one fails.
    Verify {
        #[command(flatten)]
        sys: SystemArgs,
        /// Basis sidecar written by reduce.
        #[arg(long)]
        basis: PathBuf,
        /// Specs to check; defaults to those recorded with the basis.
        #[arg(long)]
        spec: Option<PathBuf>,
        /// e.g. `hessian=1e-3,value=1e-9`.
        #[arg(long, default_value = "")]
        tol_overrides: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Simulate the full (and optionally reduced) system.
    Simulate {
        #[command(flatten)]
        sys: SystemArgs,
        #[arg(long)]
        basis: Option<PathBuf>,
        #[arg(long, value_delimiter = ',', required = true)]
        p: Vec<f64>,
        #[arg(long, value_enum, default_value_t = InputKind::ExpDecay)]
        input: InputKind,
        /// CSV with columns `t,u1,...` for `--input file`.
        #[arg(long)]
        input_file: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_DT)]
        dt: f64,
        #[arg(long, default_value_t = DEFAULT_T_END)]
        t_end: f64,
        #[arg(long, default_value = "trajectory.csv")]
        out: PathBuf,
    },
    /// Reduced-versus-full output errors over the parameter box.
    Sweep {
        #[command(flatten)]
        sys: SystemArgs,
        #[arg(long)]
        basis: PathBuf,
        #[arg(long, default_value_t = 100)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Evenly spaced points instead of random draws.
        #[arg(long)]
        linspace: bool,
        /// Pin a parameter, e.g. `p4=5`. Repeatable.
        #[arg(long)]
        fix: Vec<String>,
        #[arg(long, value_enum, value_delimiter = ',', default_values_t = [InputKind::ExpDecay, InputKind::Cosine])]
        input: Vec<InputKind>,
        #[arg(long)]
        input_file: Option<PathBuf>,
        #[arg(long, default_value_t = DEFAULT_DT)]
        dt: f64,
        #[arg(long, default_value_t = DEFAULT_T_END)]
        t_end: f64,
        #[arg(long)]
        threads: Option<usize>,
        #[arg(long, default_value = "sweep.csv")]
        out: PathBuf,
        /// JSON summary; stdout when absent.
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Fit a DEIM model of the Gaussian load and measure its accuracy.
    Deim {
        #[arg(long, default_value_t = 21)]
        grid: usize,
        #[arg(long, default_value_t = DEFAULT_SNAPSHOTS)]
        snapshots: usize,
        #[arg(long, default_value_t = DEFAULT_POD_TOL)]
        tol: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Fresh draws used to measure the error.
        #[arg(long, default_value_t = 10_000)]
        draws: usize,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum InputKind {
    ExpDecay,
    Cosine,
    File,
}

fn registry(args: &SystemArgs) -> Result<CoefficientRegistry> {
    let Some(path) = &args.deim_model else {
        return Ok(CoefficientRegistry::new());
    };
    let model = DeimModel::load(path)?;
    let n = model.basis().nrows();
    let size = (n as f64).sqrt().round() as usize;
    if size * size != n {
        return Err(Error::Dimension(format!("DEIM basis has {n} rows, not a square grid")));
    }
    deim_registry(size, &model)
}

fn load(args: &SystemArgs) -> Result<ParametricBilinearSystem> {
    load_system(&args.system, &registry(args)?)
}

/// A scalar signal drives every input channel; a file supplies all channels.
fn input_signal(kind: InputKind, file: Option<&Path>, channels: usize) -> Result<(String, InputSignal)> {
    let scalar = |name: &str, f: fn(f64) -> f64| {
        let names: Vec<String> = (1..=channels).map(|j| if channels == 1 { name.to_string() } else { format!("{name}[u{j}]") }).collect();
        let funcs = (0..channels).map(|_| std::sync::Arc::new(f) as pbmor::simulate::ScalarSignal).collect();
        (name.to_string(), InputSignal::Functions { names, funcs })
    };
    Ok(match kind {
        InputKind::ExpDecay => scalar("exp-decay", |t| (-t).exp()),
        InputKind::Cosine => scalar("cosine", |t| 0.5 * ((5.0 * std::f64::consts::PI * t).cos() + 1.0)),
        InputKind::File => {
            let path = file.ok_or_else(|| Error::InvalidSpec("--input file needs --input-file".into()))?;
            (path.display().to_string(), InputSignal::from_csv(path)?)
        }
    })
}

#[derive(Deserialize)]
#[serde(untagged)]
enum SpecFile {
    One(InterpolationSpec),
    Many(Vec<InterpolationSpec>),
    /// Output of `shifts`, used with its first tangential directions.
    Shifts(IrkaResult),
    ManyShifts(Vec<IrkaResult>),
}

fn spec_from_shifts(res: IrkaResult) -> Result<InterpolationSpec> {
    let first = |dirs: &[Vec<c64>]| dirs.first().cloned().ok_or_else(|| Error::InvalidSpec("shifts file has no directions".into()));
    Ok(InterpolationSpec { b: first(&res.b_dirs)?, c: first(&res.c_dirs)?, ..InterpolationSpec::siso(res.shifts, res.p_hat) })
}

fn read_specs(path: &Path) -> Result<Vec<InterpolationSpec>> {
    match serde_json::from_str(&fs::read_to_string(path)?)? {
        SpecFile::One(s) => Ok(vec![s]),
        SpecFile::Many(v) => Ok(v),
        SpecFile::Shifts(r) => Ok(vec![spec_from_shifts(r)?]),
        SpecFile::ManyShifts(v) => v.into_iter().map(spec_from_shifts).collect(),
    }
}

fn write_json<T: Serialize>(value: &T, out: Option<&Path>) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    match out {
        Some(p) => fs::write(p, text)?,
        None => println!("{text}"),
    }
    Ok(())
}

#[derive(Serialize)]
struct ReduceSummary {
    system: String,
    reduced_system: PathBuf,
    basis: PathBuf,
    full_order: usize,
    reduced_order: usize,
    v_rank: usize,
    w_rank: usize,
    padded: usize,
}

#[derive(Serialize)]
struct SimulateSummary {
    p: Vec<f64>,
    input: String,
    full_order: usize,
    reduced_order: Option<usize>,
    relative_l2_error: Option<f64>,
    trajectory: PathBuf,
}

/// Returns whether every warranted check passed (only `verify` can fail one).
fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::GenRc { size, out } => {
            let sys = gen_rc(size)?;
            let path = save_system(&sys, &out, sys.name())?;
            println!("{}", path.display());
        }
        Command::GenAdvdiff { grid, out, deim_model } => {
            let sys = match deim_model {
                Some(p) => gen_advdiff_deim(grid, &DeimModel::load(&p)?)?,
                None => gen_advdiff(grid)?,
            };
            let path = save_system(&sys, &out, sys.name())?;
            println!("{}", path.display());
        }
        Command::Shifts { sys, r, p_hat, out } => {
            let sys = load(&sys)?;
            let res = irka_linear(&sys, &p_hat, r, &IrkaOptions::default())?;
            write_json(&res, out.as_deref())?;
        }
        Command::Reduce { sys, spec, one_sided, trunc_tol, max_rank, out, stem } => {
            let sys = load(&sys)?;
            let specs = read_specs(&spec)?;
            let opts = AssemblyOptions {
                trunc_tol,
                max_rank,
                sidedness: if one_sided { Sidedness::VOnly } else { Sidedness::TwoSided },
                ..Default::default()
            };
            let basis = build_global_basis(&sys, &specs, &opts)?;
            let rsys = reduce(&sys, &basis)?;
            let basis_path = basis.save(&out, &format!("{stem}_basis"))?;
            let rom_path = save_system(&rsys, &out, &stem)?;
            let t = &basis.provenance.truncation;
            let summary = ReduceSummary {
                system: sys.name().to_string(),
                reduced_system: rom_path,
                basis: basis_path,
                full_order: sys.dims().n,
                reduced_order: rsys.order(),
                v_rank: t.v_rank,
                w_rank: t.w_rank,
                padded: t.padded,
            };
            write_json(&summary, None)?;
        }
        Command::Verify { sys, basis, spec, tol_overrides, out } => {
            let sys = load(&sys)?;
            let basis = ReductionBasis::load(&basis)?;
            let rsys = reduce(&sys, &basis)?;
            let specs = match spec {
                Some(p) => read_specs(&p)?,
                None => Vec::new(),
            };
            let tol = Tolerances::default().with_overrides(&tol_overrides)?;
            let report = verify(&sys, &rsys, &specs, &tol)?;
            for r in report.warranted_failures() {
                eprintln!("FAIL {:?} spec {} k={} rel {:.3e} > {:.1e}", r.condition, r.spec_index, r.k, r.rel_mismatch, r.tolerance);
            }
            write_json(&report, out.as_deref())?;
            return Ok(report.all_warranted_pass());
        }
        Command::Simulate { sys, basis, p, input, input_file, dt, t_end, out } => {
            let sys = load(&sys)?;
            let (name, u) = input_signal(input, input_file.as_deref(), sys.dims().m)?;
            let full = BilinearStepper::new(&sys, &p, dt)?.run(&u, (0.0, t_end), None, false)?;
            let mut summary = SimulateSummary {
                p: p.clone(),
                input: name,
                full_order: sys.dims().n,
                reduced_order: None,
                relative_l2_error: None,
                trajectory: out.clone(),
            };
            match basis {
                Some(b) => {
                    let rsys = reduce(&sys, &ReductionBasis::load(&b)?)?;
                    let red = BilinearStepper::new(&rsys, &p, dt)?.run(&u, (0.0, t_end), None, false)?;
                    summary.reduced_order = Some(rsys.order());
                    summary.relative_l2_error = Some(relative_l2_error(&full, &red)?);
                    let yf: Vec<f64> = full.output(0);
                    let yr: Vec<f64> = red.output(0);
                    pbmor::simulate::write_series_csv(&out, &full.times, &[("y_full", &yf), ("y_reduced", &yr)])?;
                }
                None => full.write_csv(&out)?,
            }
            write_json(&summary, None)?;
        }
        Command::Sweep { sys, basis, count, seed, linspace, fix, input, input_file, dt, t_end, threads, out, report } => {
            let sys = load(&sys)?;
            let rsys = reduce(&sys, &ReductionBasis::load(&basis)?)?;
            let bx = sys.param_box().cloned().ok_or_else(|| Error::InvalidSpec("system has no parameter box".into()))?;
            let inputs = input.iter().map(|&k| input_signal(k, input_file.as_deref(), sys.dims().m)).collect::<Result<Vec<_>>>()?;
            let opts = SweepOptions {
                count,
                sampling: if linspace { Sampling::Linspace } else { Sampling::Random { seed } },
                fixed: fix.iter().map(|s| parse_fixed(s)).collect::<Result<_>>()?,
                dt,
                t_end,
                threads,
            };
            let rep = sweep(&sys, &rsys, &bx, &inputs, &opts)?;
            rep.write_csv(&out)?;
            write_json(&rep.summary, report.as_deref())?;
        }
        Command::Deim { grid, snapshots, tol, seed, draws, out } => {
            let g = AdvDiffGrid::new(grid)?;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let model = DeimModel::fit(&g.load_snapshots(snapshots, &mut rng), tol)?;
            let path = model.save(&out, &format!("deim-{grid}"))?;
            let acc = deim_accuracy(g, &model, draws, &mut rng)?;
            eprintln!("DEIM order {} saved to {}", model.order(), path.display());
            write_json(
                &serde_json::json!({ "order": model.order(), "rows": model.rows(), "seed": seed, "model": path, "accuracy": acc }),
                None,
            )?;
        }
    }
    Ok(true)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

//! Parameter sweeps comparing reduced and full-order output trajectories.

use std::fs;
use std::io::Write;
use std::path::Path;
use std::thread;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::simulate::{relative_l2_error, BilinearStepper, InputSignal, DEFAULT_DT, DEFAULT_T_END};
use crate::system::{ParamBox, ParametricBilinearSystem};

/// How sweep points are placed in the parameter box.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Sampling {
    /// Independent draws from a ChaCha8 stream seeded with `seed`.
    Random { seed: u64 },
    /// Evenly spaced along every free axis (a tensor grid when more than one is free).
    Linspace,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepOptions {
    pub count: usize,
    pub sampling: Sampling,
    /// Zero-based parameter indices pinned to a value.
    pub fixed: Vec<(usize, f64)>,
    pub dt: f64,
    pub t_end: f64,
    /// Worker threads; `None` uses the available parallelism.
    pub threads: Option<usize>,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self { count: 100, sampling: Sampling::Random { seed: 0 }, fixed: Vec::new(), dt: DEFAULT_DT, t_end: DEFAULT_T_END, threads: None }
    }
}

/// Parses `p4=5` (one-based index) into `(3, 5.0)`.
pub fn parse_fixed(s: &str) -> Result<(usize, f64)> {
    let (name, value) = s.split_once('=').ok_or_else(|| Error::Parse(format!("`{s}` is not p<j>=value")))?;
    let idx: usize = name
        .trim()
        .strip_prefix('p')
        .and_then(|j| j.parse().ok())
        .filter(|&j: &usize| j >= 1)
        .ok_or_else(|| Error::Parse(format!("`{name}` is not a one-based parameter name like p4")))?;
    let v: f64 = value.trim().parse().map_err(|_| Error::Parse(format!("bad value in `{s}`")))?;
    Ok((idx - 1, v))
}

/// The points visited by a sweep, in order.
pub fn sample_points(bx: &ParamBox, opts: &SweepOptions) -> Result<Vec<Vec<f64>>> {
    let nu = bx.dim();
    if let Some(&(j, _)) = opts.fixed.iter().find(|(j, _)| *j >= nu) {
        return Err(Error::InvalidSpec(format!("fixed parameter p{} outside 1..={nu}", j + 1)));
    }
    let pin = |mut p: Vec<f64>| {
        for &(j, v) in &opts.fixed {
            p[j] = v;
        }
        p
    };
    match opts.sampling {
        Sampling::Random { seed } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            Ok((0..opts.count).map(|_| pin(bx.sample(&mut rng).0)).collect())
        }
        Sampling::Linspace => {
            let free: Vec<usize> = (0..nu).filter(|j| !opts.fixed.iter().any(|(f, _)| f == j)).collect();
            let per_axis = if free.is_empty() { 1 } else { ((opts.count as f64).powf(1.0 / free.len() as f64).round() as usize).max(1) };
            let at = |i: usize| if per_axis == 1 { 0.5 } else { i as f64 / (per_axis - 1) as f64 };
            let total = per_axis.pow(free.len() as u32);
            Ok((0..total)
                .map(|mut idx| {
                    let mut p: Vec<f64> = bx.0.iter().map(|r| r.at(0.5)).collect();
                    for &j in &free {
                        p[j] = bx.0[j].at(at(idx % per_axis));
                        idx /= per_axis;
                    }
                    pin(p)
                })
                .collect())
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub index: usize,
    pub p: Vec<f64>,
    /// Relative L2 output error per input.
    pub errors: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputSummary {
    pub input: String,
    pub max_error: f64,
    pub mean_error: f64,
    pub worst_point: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub system: String,
    pub reduced_order: usize,
    pub options: SweepOptions,
    pub rows: Vec<SweepRow>,
    pub summary: Vec<InputSummary>,
}

impl SweepReport {
    /// One line per point: `index,p1..pν,<input errors>`.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut out = fs::File::create(path)?;
        let nu = self.rows.first().map_or(0, |r| r.p.len());
        let mut header: Vec<String> = vec!["index".into()];
        header.extend((1..=nu).map(|j| format!("p{j}")));
        header.extend(self.summary.iter().map(|s| format!("rel_l2[{}]", s.input)));
        writeln!(out, "{}", header.join(","))?;
        for r in &self.rows {
            let mut line = vec![r.index.to_string()];
            line.extend(r.p.iter().map(|v| format!("{v:.12e}")));
            line.extend(r.errors.iter().map(|v| format!("{v:.6e}")));
            writeln!(out, "{}", line.join(","))?;
        }
        Ok(())
    }

    pub fn max_error(&self) -> f64 {
        self.summary.iter().map(|s| s.max_error).fold(0.0, f64::max)
    }
}

fn point_errors(
    sys: &ParametricBilinearSystem,
    rsys: &ParametricBilinearSystem,
    p: &[f64],
    inputs: &[(String, InputSignal)],
    opts: &SweepOptions,
) -> Result<Vec<f64>> {
    let full = BilinearStepper::new(sys, p, opts.dt)?;
    let red = BilinearStepper::new(rsys, p, opts.dt)?;
    inputs
        .iter()
        .map(|(_, u)| {
            let yf = full.run(u, (0.0, opts.t_end), None, false)?;
            let yr = red.run(u, (0.0, opts.t_end), None, false)?;
            relative_l2_error(&yf, &yr)
        })
        .collect()
}

/// Simulates `sys` and `rsys` at every sweep point for every input and
/// records the relative L2 output error. Rows come back in sampling order
/// whatever the thread count.
pub fn sweep(
    sys: &ParametricBilinearSystem,
    rsys: &ParametricBilinearSystem,
    bx: &ParamBox,
    inputs: &[(String, InputSignal)],
    opts: &SweepOptions,
) -> Result<SweepReport> {
    if inputs.is_empty() {
        return Err(Error::InvalidSpec("sweep needs at least one input".into()));
    }
    let points = sample_points(bx, opts)?;
    let threads = opts.threads.unwrap_or_else(|| thread::available_parallelism().map_or(1, |n| n.get())).clamp(1, points.len().max(1));
    let chunk = points.len().div_ceil(threads).max(1);
    let results: Vec<Result<Vec<f64>>> = thread::scope(|scope| {
        let handles: Vec<_> = points
            .chunks(chunk)
            .map(|ps| scope.spawn(move || ps.iter().map(|p| point_errors(sys, rsys, p, inputs, opts)).collect::<Vec<_>>()))
            .collect();
        handles.into_iter().flat_map(|h| h.join().expect("sweep worker panicked")).collect()
    });
    let mut rows = Vec::with_capacity(points.len());
    for (index, (p, errs)) in points.into_iter().zip(results).enumerate() {
        rows.push(SweepRow { index, p, errors: errs? });
    }
    let summary = inputs
        .iter()
        .enumerate()
        .map(|(i, (name, _))| {
            let worst = rows.iter().max_by(|a, b| a.errors[i].total_cmp(&b.errors[i])).expect("nonempty sweep");
            InputSummary {
                input: name.clone(),
                max_error: worst.errors[i],
                mean_error: rows.iter().map(|r| r.errors[i]).sum::<f64>() / rows.len() as f64,
                worst_point: worst.p.clone(),
            }
        })
        .collect();
    Ok(SweepReport { system: sys.name().to_string(), reduced_order: rsys.dims().n, options: opts.clone(), rows, summary })
}

//! Fixed-step time integration of bilinear systems and of the nonlinear RC
//! ladder.
//!
//! Two first-order schemes share the input sampling `u(t_k)`:
//!
//! * IMEX, bilinear term explicit:
//!   `(E − dt A) x_{k+1} = E x_k + dt (Σ_j N_j x_k u_j(t_k) + B u(t_k))`.
//!   The step matrix is factored once per `(p, dt)`.
//! * Linearly implicit:
//!   `(E − dt (A + Σ_j u_j(t_k) N_j)) x_{k+1} = E x_k + dt B u(t_k)`.
//!   The step matrix is refactored whenever the input changes.
//!
//! IMEX is the default so full and reduced models are integrated by the same
//! scheme; the two differ by `O(dt)`.

use std::fs;
use std::io::Write;
use std::path::Path;
use std::sync::Arc;

use faer::linalg::solvers::PartialPivLu;
use faer::prelude::*;
use faer::sparse::linalg::solvers::Lu as SparseLu;
use faer::sparse::{SparseColMat, Triplet};
use faer::Mat;

use crate::error::{Error, Result};
use crate::kernels::{demote_real, relative_imag, CMat};
use crate::system::ParametricBilinearSystem;

pub const DEFAULT_DT: f64 = 1e-3;
pub const DEFAULT_T_END: f64 = 5.0;

/// Systems larger than this with few nonzeros are stepped with sparse kernels.
const SPARSE_MIN_ORDER: usize = 200;
const SPARSE_MAX_DENSITY: f64 = 0.05;

pub type ScalarSignal = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// An `m`-channel input `u(t)`.
#[derive(Clone)]
pub enum InputSignal {
    Functions {
        names: Vec<String>,
        funcs: Vec<ScalarSignal>,
    },
    /// Samples per channel, linearly interpolated between `times`.
    Sampled {
        times: Vec<f64>,
        values: Vec<Vec<f64>>,
    },
}

impl std::fmt::Debug for InputSignal {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Functions { names, .. } => f.debug_struct("Functions").field("names", names).finish(),
            Self::Sampled { times, values } => {
                f.debug_struct("Sampled").field("samples", &times.len()).field("channels", &values.len()).finish()
            }
        }
    }
}

impl InputSignal {
    pub fn from_fns(named: Vec<(&str, ScalarSignal)>) -> Self {
        let (names, funcs) = named.into_iter().map(|(n, f)| (n.to_string(), f)).unzip();
        Self::Functions { names, funcs }
    }

    /// `u(t) = e^{−t}`.
    pub fn exp_decay() -> Self {
        Self::from_fns(vec![("exp(-t)", Arc::new(|t: f64| (-t).exp()))])
    }

    /// `u(t) = ½(cos(5πt) + 1)`.
    pub fn cosine() -> Self {
        Self::from_fns(vec![("(cos(5*pi*t)+1)/2", Arc::new(|t: f64| 0.5 * ((5.0 * std::f64::consts::PI * t).cos() + 1.0)))])
    }

    /// `a · e^{−t}`, a small-amplitude version of [`exp_decay`](Self::exp_decay).
    pub fn scaled_exp_decay(a: f64) -> Self {
        Self::from_fns(vec![("a*exp(-t)", Arc::new(move |t: f64| a * (-t).exp()))])
    }

    pub fn constant(values: &[f64]) -> Self {
        let named = values.iter().map(|&v| (format!("{v}"), Arc::new(move |_: f64| v) as ScalarSignal)).collect::<Vec<_>>();
        let (names, funcs) = named.into_iter().unzip();
        Self::Functions { names, funcs }
    }

    pub fn zero(m: usize) -> Self {
        Self::constant(&vec![0.0; m])
    }

    /// Reads a CSV with a header and columns `t, u_1, …, u_m`.
    pub fn from_csv(path: &Path) -> Result<Self> {
        let mut reader = csv::Reader::from_path(path)?;
        let mut times = Vec::new();
        let mut values: Vec<Vec<f64>> = Vec::new();
        for rec in reader.records() {
            let rec = rec?;
            let nums: Vec<f64> = rec
                .iter()
                .map(|s| s.trim().parse::<f64>().map_err(|_| Error::Parse(format!("bad number `{s}` in {}", path.display()))))
                .collect::<Result<_>>()?;
            if nums.len() < 2 {
                return Err(Error::Parse(format!("{}: need a time column and at least one input", path.display())));
            }
            if values.is_empty() {
                values = vec![Vec::new(); nums.len() - 1];
            }
            if nums.len() - 1 != values.len() {
                return Err(Error::Parse(format!("{}: ragged input rows", path.display())));
            }
            times.push(nums[0]);
            for (ch, v) in values.iter_mut().zip(&nums[1..]) {
                ch.push(*v);
            }
        }
        if times.windows(2).any(|w| w[1] <= w[0]) || times.is_empty() {
            return Err(Error::Parse(format!("{}: times must be nonempty and strictly increasing", path.display())));
        }
        Ok(Self::Sampled { times, values })
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::Functions { funcs, .. } => funcs.len(),
            Self::Sampled { values, .. } => values.len(),
        }
    }

    pub fn names(&self) -> Vec<String> {
        match self {
            Self::Functions { names, .. } => names.clone(),
            Self::Sampled { values, .. } => (1..=values.len()).map(|i| format!("u_{i}")).collect(),
        }
    }

    pub fn eval_into(&self, t: f64, out: &mut [f64]) {
        match self {
            Self::Functions { funcs, .. } => {
                for (o, f) in out.iter_mut().zip(funcs) {
                    *o = f(t);
                }
            }
            Self::Sampled { times, values } => {
                let k = times.partition_point(|&s| s <= t).clamp(1, times.len().max(2) - 1);
                for (o, ch) in out.iter_mut().zip(values) {
                    *o = if times.len() == 1 {
                        ch[0]
                    } else {
                        let (t0, t1) = (times[k - 1], times[k]);
                        let w = ((t - t0) / (t1 - t0)).clamp(0.0, 1.0);
                        ch[k - 1] * (1.0 - w) + ch[k] * w
                    };
                }
            }
        }
    }

    pub fn eval(&self, t: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        self.eval_into(t, &mut out);
        out
    }

    fn check_horizon(&self, t0: f64, t1: f64) -> Result<()> {
        if let Self::Sampled { times, .. } = self {
            let tol = 1e-12 * t1.abs().max(1.0);
            if times[0] > t0 + tol || *times.last().expect("nonempty") < t1 - tol {
                return Err(Error::InvalidSpec(format!(
                    "sampled input covers [{}, {}], simulation needs [{t0}, {t1}]",
                    times[0],
                    times.last().expect("nonempty")
                )));
            }
        }
        Ok(())
    }
}

/// Time grid, inputs and outputs of one run; states on request.
#[derive(Debug, Clone, Default)]
pub struct SimulationResult {
    pub times: Vec<f64>,
    pub input_names: Vec<String>,
    /// `inputs[k]` is `u(t_k)`.
    pub inputs: Vec<Vec<f64>>,
    /// `outputs[k]` is `y(t_k)`.
    pub outputs: Vec<Vec<f64>>,
    pub states: Option<Vec<Vec<f64>>>,
}

impl SimulationResult {
    /// One output channel as a series.
    pub fn output(&self, channel: usize) -> Vec<f64> {
        self.outputs.iter().map(|y| y[channel]).collect()
    }

    /// Writes `t, u_1..u_m, y_1..y_ℓ`.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        let m = self.inputs.first().map_or(0, Vec::len);
        let l = self.outputs.first().map_or(0, Vec::len);
        let mut header = vec!["t".to_string()];
        header.extend((1..=m).map(|i| format!("u_{i}")));
        header.extend((1..=l).map(|i| format!("y_{i}")));
        w.write_record(&header)?;
        for k in 0..self.times.len() {
            let mut row = vec![format!("{:.9e}", self.times[k])];
            row.extend(self.inputs[k].iter().map(|v| format!("{v:.12e}")));
            row.extend(self.outputs[k].iter().map(|v| format!("{v:.12e}")));
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Trapezoidal `‖y_ref − y_test‖_{L2} / ‖y_ref‖_{L2}` over all output channels.
pub fn relative_l2_error(reference: &SimulationResult, test: &SimulationResult) -> Result<f64> {
    if reference.times.len() != test.times.len()
        || reference.times.iter().zip(&test.times).any(|(a, b)| (a - b).abs() > 1e-12 * a.abs().max(1.0))
    {
        return Err(Error::Dimension("trajectories live on different time grids".into()));
    }
    let l = reference.outputs.first().map_or(0, Vec::len);
    if test.outputs.first().map_or(0, Vec::len) != l {
        return Err(Error::Dimension("trajectories have different output counts".into()));
    }
    let (mut num, mut den) = (0.0, 0.0);
    for ch in 0..l {
        let r = reference.output(ch);
        let d: Vec<f64> = r.iter().zip(test.output(ch)).map(|(a, b)| a - b).collect();
        num += trapezoid_sq(&reference.times, &d);
        den += trapezoid_sq(&reference.times, &r);
    }
    Ok(if den == 0.0 {
        if num == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        (num / den).sqrt()
    })
}

/// Scalar-series version of [`relative_l2_error`].
pub fn relative_l2_error_series(times: &[f64], reference: &[f64], test: &[f64]) -> f64 {
    let d: Vec<f64> = reference.iter().zip(test).map(|(a, b)| a - b).collect();
    let den = trapezoid_sq(times, reference);
    if den == 0.0 {
        return if trapezoid_sq(times, &d) == 0.0 { 0.0 } else { f64::INFINITY };
    }
    (trapezoid_sq(times, &d) / den).sqrt()
}

fn trapezoid_sq(t: &[f64], y: &[f64]) -> f64 {
    t.windows(2).zip(y.windows(2)).map(|(t, y)| 0.5 * (t[1] - t[0]) * (y[0] * y[0] + y[1] * y[1])).sum()
}

/// Dense or coordinate-list real operator.
enum Operator {
    Dense(Mat<f64>),
    Sparse { rows: Vec<usize>, cols: Vec<usize>, vals: Vec<f64> },
    Identity,
    Zero,
}

impl Operator {
    fn new(m: &Mat<f64>, sparse: bool) -> Self {
        let n = m.nrows();
        let mut rows = Vec::new();
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        let mut identity = m.nrows() == m.ncols();
        for j in 0..m.ncols() {
            for i in 0..n {
                let v = m[(i, j)];
                if identity && v != if i == j { 1.0 } else { 0.0 } {
                    identity = false;
                }
                if v != 0.0 {
                    rows.push(i);
                    cols.push(j);
                    vals.push(v);
                }
            }
        }
        if identity {
            Self::Identity
        } else if vals.is_empty() {
            Self::Zero
        } else if sparse {
            Self::Sparse { rows, cols, vals }
        } else {
            Self::Dense(m.clone())
        }
    }

    /// `out += scale · M x`.
    fn apply_add(&self, x: &[f64], scale: f64, out: &mut [f64]) {
        match self {
            Self::Zero => {}
            Self::Identity => {
                for (o, v) in out.iter_mut().zip(x) {
                    *o += scale * v;
                }
            }
            Self::Sparse { rows, cols, vals } => {
                for ((&i, &j), &v) in rows.iter().zip(cols).zip(vals) {
                    out[i] += scale * v * x[j];
                }
            }
            Self::Dense(m) => {
                for (j, &xj) in x.iter().enumerate().take(m.ncols()) {
                    let xj = scale * xj;
                    if xj != 0.0 {
                        let col = m.col_as_slice(j);
                        for (o, c) in out.iter_mut().zip(col) {
                            *o += c * xj;
                        }
                    }
                }
            }
        }
    }
}

enum StepSolver {
    Dense(PartialPivLu<f64>),
    Sparse(SparseLu<usize, f64>),
}

impl StepSolver {
    fn solve_in_place(&self, x: &mut Mat<f64>) {
        match self {
            Self::Dense(lu) => lu.solve_in_place(x.as_mut()),
            Self::Sparse(lu) => lu.solve_in_place(x.as_mut()),
        }
    }
}

fn to_real(m: &CMat) -> Result<Mat<f64>> {
    demote_real(m.as_ref()).ok_or_else(|| Error::NonRealSystem { max_imag: relative_imag(m.as_ref()) })
}

/// How the bilinear term `Σ_j N_j x u_j` is integrated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BilinearTreatment {
    #[default]
    Explicit,
    Implicit,
}

/// Stepping data for one `(p, dt)`.
pub struct BilinearStepper {
    dt: f64,
    e: Operator,
    n_ops: Vec<Operator>,
    b: Mat<f64>,
    c: Mat<f64>,
    /// `E − dt A`, kept for refactoring in the implicit scheme.
    base: Mat<f64>,
    solver: StepSolver,
    sparse: bool,
    implicit: bool,
    order: usize,
}

fn sparse_lu(m: &Mat<f64>) -> Result<StepSolver> {
    let n = m.nrows();
    let mut trip = Vec::new();
    for j in 0..n {
        for i in 0..n {
            if m[(i, j)] != 0.0 {
                trip.push(Triplet::new(i, j, m[(i, j)]));
            }
        }
    }
    let sp = SparseColMat::<usize, f64>::try_new_from_triplets(n, n, &trip).map_err(|e| Error::Factorization(format!("{e:?}")))?;
    Ok(StepSolver::Sparse(sp.sp_lu().map_err(|e| Error::Factorization(format!("{e:?}")))?))
}

fn dense_lu(m: &Mat<f64>) -> Result<StepSolver> {
    let lu = m.partial_piv_lu();
    let u = lu.U();
    if (0..m.nrows()).any(|i| u[(i, i)] == 0.0 || !u[(i, i)].is_finite()) {
        return Err(Error::Factorization("step matrix is singular".into()));
    }
    Ok(StepSolver::Dense(lu))
}

impl BilinearStepper {
    pub fn new(sys: &ParametricBilinearSystem, p: &[f64], dt: f64) -> Result<Self> {
        Self::with_treatment(sys, p, dt, BilinearTreatment::Explicit)
    }

    pub fn with_treatment(sys: &ParametricBilinearSystem, p: &[f64], dt: f64, treatment: BilinearTreatment) -> Result<Self> {
        if !(dt > 0.0) {
            return Err(Error::InvalidSpec(format!("time step must be positive, got {dt}")));
        }
        let mats = sys.evaluate(p)?;
        let e = to_real(&mats.e)?;
        let a = to_real(&mats.a)?;
        let ns: Vec<Mat<f64>> = mats.n.blocks().iter().map(to_real).collect::<Result<_>>()?;
        let b = to_real(&mats.b)?;
        let c = to_real(&mats.c)?;
        let n = a.nrows();
        let base = Mat::from_fn(n, n, |i, j| e[(i, j)] - dt * a[(i, j)]);
        let nnz = (0..n).flat_map(|j| (0..n).map(move |i| (i, j))).filter(|&(i, j)| base[(i, j)] != 0.0).count();
        let sparse = n > SPARSE_MIN_ORDER && (nnz as f64) < SPARSE_MAX_DENSITY * (n * n) as f64;
        let solver = if sparse { sparse_lu(&base)? } else { dense_lu(&base)? };
        let implicit = treatment == BilinearTreatment::Implicit;
        Ok(Self {
            dt,
            e: Operator::new(&e, sparse),
            n_ops: ns.iter().map(|m| Operator::new(m, sparse)).collect(),
            b,
            c,
            base,
            solver,
            sparse,
            implicit,
            order: n,
        })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn is_sparse(&self) -> bool {
        self.sparse
    }

    pub fn is_implicit(&self) -> bool {
        self.implicit
    }

    /// `E − dt (A + Σ_j u_j N_j)`, factored.
    fn factor_with_input(&self, uk: &[f64]) -> Result<StepSolver> {
        let n = self.order;
        let mut m = self.base.clone();
        for (op, &uj) in self.n_ops.iter().zip(uk) {
            if uj == 0.0 {
                continue;
            }
            let mut col = vec![0.0; n];
            for j in 0..n {
                col.iter_mut().for_each(|v| *v = 0.0);
                let mut unit = vec![0.0; n];
                unit[j] = 1.0;
                op.apply_add(&unit, -self.dt * uj, &mut col);
                for (i, v) in col.iter().enumerate() {
                    m[(i, j)] += v;
                }
            }
        }
        if self.sparse {
            sparse_lu(&m)
        } else {
            dense_lu(&m)
        }
    }

    /// Integrates from `t_span.0` to `t_span.1` starting at `x0` (zero if `None`).
    pub fn run(&self, u: &InputSignal, t_span: (f64, f64), x0: Option<&[f64]>, store_states: bool) -> Result<SimulationResult> {
        let (t0, t1) = t_span;
        if !(t1 > t0) {
            return Err(Error::InvalidSpec(format!("empty time span [{t0}, {t1}]")));
        }
        if u.dim() != self.b.ncols() {
            return Err(Error::Dimension(format!("input has {} channels, system has {}", u.dim(), self.b.ncols())));
        }
        u.check_horizon(t0, t1)?;
        let n = self.order;
        let steps = ((t1 - t0) / self.dt).round().max(1.0) as usize;
        let mut x = match x0 {
            Some(v) if v.len() == n => v.to_vec(),
            Some(v) => return Err(Error::Dimension(format!("initial state has {} entries, expected {n}", v.len()))),
            None => vec![0.0; n],
        };
        let mut res = SimulationResult {
            times: Vec::with_capacity(steps + 1),
            input_names: u.names(),
            inputs: Vec::with_capacity(steps + 1),
            outputs: Vec::with_capacity(steps + 1),
            states: store_states.then(Vec::new),
        };
        let has_bilinear = self.n_ops.iter().any(|op| !matches!(op, Operator::Zero));
        let mut uk = vec![0.0; u.dim()];
        let mut rhs = Mat::<f64>::zeros(n, 1);
        // Implicit scheme: factor for the most recent input, reused while it is unchanged.
        let mut cached: Option<(Vec<f64>, StepSolver)> = None;
        for k in 0..=steps {
            let t = t0 + k as f64 * self.dt;
            u.eval_into(t, &mut uk);
            res.times.push(t);
            res.inputs.push(uk.clone());
            res.outputs.push(self.output(&x));
            if let Some(states) = &mut res.states {
                states.push(x.clone());
            }
            if k == steps {
                break;
            }
            let r = rhs.col_as_slice_mut(0);
            r.iter_mut().for_each(|v| *v = 0.0);
            self.e.apply_add(&x, 1.0, r);
            if !self.implicit {
                for (op, &uj) in self.n_ops.iter().zip(&uk) {
                    if uj != 0.0 {
                        op.apply_add(&x, self.dt * uj, r);
                    }
                }
            }
            for (j, &uj) in uk.iter().enumerate() {
                if uj != 0.0 {
                    for (o, bij) in r.iter_mut().zip(self.b.col_as_slice(j)) {
                        *o += self.dt * uj * bij;
                    }
                }
            }
            if self.implicit && has_bilinear && uk.iter().any(|&v| v != 0.0) {
                if cached.as_ref().is_none_or(|(uc, _)| uc != &uk) {
                    cached = Some((uk.clone(), self.factor_with_input(&uk)?));
                }
                cached.as_ref().expect("just filled").1.solve_in_place(&mut rhs);
            } else {
                self.solver.solve_in_place(&mut rhs);
            }
            x.copy_from_slice(rhs.col_as_slice(0));
            if x.iter().any(|v| !v.is_finite()) {
                return Err(Error::Factorization(format!("state blew up at t = {t}")));
            }
        }
        Ok(res)
    }

    fn output(&self, x: &[f64]) -> Vec<f64> {
        (0..self.c.nrows()).map(|i| (0..x.len()).map(|j| self.c[(i, j)] * x[j]).sum()).collect()
    }
}

/// One IMEX run of a full or reduced system.
pub fn simulate_bilinear(
    sys: &ParametricBilinearSystem,
    p: &[f64],
    u: &InputSignal,
    t_span: (f64, f64),
    dt: f64,
) -> Result<SimulationResult> {
    BilinearStepper::new(sys, p, dt)?.run(u, t_span, None, false)
}

/// Runs with `dt` and `dt/2`; the difference on the coarse grid estimates the
/// error of the fine run (first-order scheme).
#[derive(Debug, Clone)]
pub struct RichardsonEstimate {
    pub coarse: SimulationResult,
    pub fine: SimulationResult,
    /// `max_t |y_dt − y_{dt/2}|` over all channels.
    pub max_difference: f64,
    /// Relative L2 difference between the two runs on the coarse grid.
    pub relative_difference: f64,
}

pub fn richardson(sys: &ParametricBilinearSystem, p: &[f64], u: &InputSignal, t_span: (f64, f64), dt: f64) -> Result<RichardsonEstimate> {
    let coarse = simulate_bilinear(sys, p, u, t_span, dt)?;
    let fine = simulate_bilinear(sys, p, u, t_span, dt / 2.0)?;
    let sub = subsample(&fine, 2);
    let max_difference =
        coarse.outputs.iter().zip(&sub.outputs).flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).abs())).fold(0.0, f64::max);
    let relative_difference = relative_l2_error(&sub, &coarse)?;
    Ok(RichardsonEstimate { coarse, fine, max_difference, relative_difference })
}

/// Keeps every `stride`-th sample.
pub fn subsample(r: &SimulationResult, stride: usize) -> SimulationResult {
    let pick = |v: &Vec<Vec<f64>>| v.iter().step_by(stride).cloned().collect::<Vec<_>>();
    SimulationResult {
        times: r.times.iter().step_by(stride).copied().collect(),
        input_names: r.input_names.clone(),
        inputs: pick(&r.inputs),
        outputs: pick(&r.outputs),
        states: r.states.as_ref().map(pick),
    }
}

/// `g(v; p) = e^{pv} + v − 1`.
pub fn rc_diode(v: f64, p: f64) -> f64 {
    (p * v).exp_m1() + v
}

/// The nonlinear RC ladder `v̇ = f(v; p) + e_1 u`, `y = v_1`.
///
/// The linearization `(1 + p) T` is taken implicitly, the remainder
/// `f(v) − (1 + p) T v` and the input explicitly.
pub fn simulate_rc_nonlinear(size: usize, p: f64, u: &InputSignal, t_span: (f64, f64), dt: f64) -> Result<SimulationResult> {
    if size < 2 {
        return Err(Error::InvalidSpec("RC ladder needs at least two nodes".into()));
    }
    if u.dim() != 1 {
        return Err(Error::Dimension(format!("RC ladder has one input, got {}", u.dim())));
    }
    if !(dt > 0.0) || !(t_span.1 > t_span.0) {
        return Err(Error::InvalidSpec("need dt > 0 and a nonempty time span".into()));
    }
    u.check_horizon(t_span.0, t_span.1)?;
    let lin = crate::benchmarks::rc::stencil(size);
    let scale = 1.0 + p;
    let step = Mat::from_fn(size, size, |i, j| if i == j { 1.0 } else { 0.0 } - dt * scale * lin[(i, j)]);
    let lu = step.partial_piv_lu();
    let steps = ((t_span.1 - t_span.0) / dt).round().max(1.0) as usize;
    let mut v = vec![0.0; size];
    let mut res = SimulationResult { input_names: u.names(), ..Default::default() };
    let mut rhs = Mat::<f64>::zeros(size, 1);
    for k in 0..=steps {
        let t = t_span.0 + k as f64 * dt;
        let uk = u.eval(t);
        res.times.push(t);
        res.inputs.push(uk.clone());
        res.outputs.push(vec![v[0]]);
        if k == steps {
            break;
        }
        let f = rc_rhs(&v, p);
        let r = rhs.col_as_slice_mut(0);
        for i in 0..size {
            let lin_v: f64 = (0..size).map(|j| lin[(i, j)] * v[j]).sum::<f64>() * scale;
            r[i] = v[i] + dt * (f[i] - lin_v);
        }
        r[0] += dt * uk[0];
        lu.solve_in_place(rhs.as_mut());
        v.copy_from_slice(rhs.col_as_slice(0));
        if v.iter().any(|x| !x.is_finite()) {
            return Err(Error::Factorization(format!("RC state blew up at t = {t}")));
        }
    }
    Ok(res)
}

/// `f(v; p)` of the RC ladder.
pub fn rc_rhs(v: &[f64], p: f64) -> Vec<f64> {
    let n = v.len();
    let mut f = vec![0.0; n];
    f[0] = -rc_diode(v[0], p) - rc_diode(v[0] - v[1], p);
    for k in 1..n - 1 {
        f[k] = rc_diode(v[k - 1] - v[k], p) - rc_diode(v[k] - v[k + 1], p);
    }
    f[n - 1] = rc_diode(v[n - 2] - v[n - 1], p);
    f
}

/// Writes any number of named series sharing one time grid.
pub fn write_series_csv(path: &Path, times: &[f64], columns: &[(&str, &[f64])]) -> Result<()> {
    let mut out = fs::File::create(path)?;
    let header: Vec<&str> = std::iter::once("t").chain(columns.iter().map(|c| c.0)).collect();
    writeln!(out, "{}", header.join(","))?;
    for (k, t) in times.iter().enumerate() {
        let row: Vec<String> = std::iter::once(format!("{t:.9e}")).chain(columns.iter().map(|c| format!("{:.12e}", c.1[k]))).collect();
        writeln!(out, "{}", row.join(","))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::cplx;
    use crate::system::AffineMatrix;

    fn scalar(v: f64) -> AffineMatrix {
        AffineMatrix::constant(Mat::from_fn(1, 1, |_, _| cplx(v)))
    }

    #[test]
    fn scalar_decay_matches_exponential() {
        let sys = ParametricBilinearSystem::new("s", 0, scalar(1.0), scalar(-1.0), vec![scalar(0.0)], scalar(1.0), scalar(1.0)).unwrap();
        let dt = 1e-3;
        let st = BilinearStepper::new(&sys, &[], dt).unwrap();
        let r = st.run(&InputSignal::zero(1), (0.0, 1.0), Some(&[1.0]), false).unwrap();
        let y1 = r.outputs.last().unwrap()[0];
        assert!((y1 - (-1f64).exp()).abs() <= 2.0 * dt);
    }

    #[test]
    fn rc_rest_state_stays_at_rest() {
        let r = simulate_rc_nonlinear(5, 2.0, &InputSignal::zero(1), (0.0, 1.0), 1e-2).unwrap();
        assert!(r.outputs.iter().all(|y| y[0] == 0.0));
    }

    #[test]
    fn l2_error_identities() {
        let t: Vec<f64> = (0..11).map(|i| i as f64 * 0.1).collect();
        let y: Vec<f64> = t.iter().map(|x| x.sin() + 1.0).collect();
        let y2: Vec<f64> = y.iter().map(|v| 2.0 * v).collect();
        assert_eq!(relative_l2_error_series(&t, &y, &y), 0.0);
        assert!((relative_l2_error_series(&t, &y, &y2) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn sampled_input_interpolates_linearly() {
        let u = InputSignal::Sampled { times: vec![0.0, 1.0, 3.0], values: vec![vec![0.0, 2.0, 6.0]] };
        assert_eq!(u.eval(0.5)[0], 1.0);
        assert_eq!(u.eval(2.0)[0], 4.0);
        assert!(u.check_horizon(0.0, 4.0).is_err());
    }

    #[test]
    fn complex_system_is_rejected() {
        let a = AffineMatrix::constant(Mat::from_fn(1, 1, |_, _| faer::c64::new(-1.0, 0.5)));
        let sys = ParametricBilinearSystem::new("c", 0, scalar(1.0), a, vec![scalar(0.0)], scalar(1.0), scalar(1.0)).unwrap();
        assert!(matches!(BilinearStepper::new(&sys, &[], 1e-2), Err(Error::NonRealSystem { .. })));
    }
}

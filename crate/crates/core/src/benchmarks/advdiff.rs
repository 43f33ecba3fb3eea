//! Advection-diffusion of a passive scalar on `[−1, 1]²`, discretized by
//! second-order central finite differences on a uniform interior grid.
//!
//! Inputs: `u_1, u_2` scale the velocity fields `v_1 = [−y, x]` and
//! `v_2 = ½(cos(π(x − y)) + 1)[1, 1]`, `u_3` is the boundary value and `u_4`
//! the strength of a Gaussian source centred at `(p_2, p_3)` with width `p_4`.
//! Diffusivity is `p_1`. The output is the mean over `[0.5, 1]²`.

use std::f64::consts::PI;
use std::sync::Arc;

use faer::Mat;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::deim::DeimModel;
use crate::error::{Error, Result};
use crate::kernels::{cplx, CMat};
use crate::system::coefficient::{gaussian, gaussian_gradient, gaussian_hessian, gaussian_node, monomial};
use crate::system::{AffineMatrix, AffineTerm, CoefficientFunction, CoefficientRegistry, ParamBox, ParamRange, ParametricBilinearSystem};

/// Parameter points used to build the reduction bases.
pub const SAMPLE_POINTS: [[f64; 4]; 4] =
    [[0.1, 0.25, 0.8, 1.0], [1.0, 0.0, 0.0, 9.0], [0.049_787_068_367_863_944, 1.0, 1.0, 4.0], [0.049_787_068_367_863_944, -0.5, -1.0, 1.0]];

/// Parameter points held out for comparison.
pub const TEST_POINTS: [[f64; 4]; 4] = [
    [0.0529, 0.975, 0.9275, 1.6636],
    [0.2392, 0.6914, 0.3149, 3.6730],
    [0.1261, -0.7224, -0.7623, 5.1100],
    [0.0754, -0.3214, 0.4988, 2.816],
];

/// The parameter box `e^{−3} ≤ p_1 ≤ e`, `(p_2, p_3) ∈ [−1, 1]²`, `1 ≤ p_4 ≤ 10`.
pub fn param_box() -> ParamBox {
    ParamBox(vec![
        ParamRange::log((-3.0f64).exp(), 1.0f64.exp()),
        ParamRange::linear(-1.0, 1.0),
        ParamRange::linear(-1.0, 1.0),
        ParamRange::linear(1.0, 10.0),
    ])
}

/// Uniform interior grid with `size` nodes per side; node `(i, j)` has index `j·size + i`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdvDiffGrid {
    size: usize,
}

impl AdvDiffGrid {
    pub fn new(size: usize) -> Result<Self> {
        if size < 5 {
            return Err(Error::InvalidSpec(format!("advection-diffusion grid needs at least 5 nodes per side, got {size}")));
        }
        Ok(Self { size })
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn nodes(&self) -> usize {
        self.size * self.size
    }

    pub fn spacing(&self) -> f64 {
        2.0 / (self.size + 1) as f64
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.size + i
    }

    pub fn coords(&self, node: usize) -> (f64, f64) {
        let h = self.spacing();
        let (i, j) = (node % self.size, node / self.size);
        (-1.0 + (i + 1) as f64 * h, -1.0 + (j + 1) as f64 * h)
    }

    /// Index of the node closest to `(x, y)`.
    pub fn nearest_node(&self, x: f64, y: f64) -> usize {
        let h = self.spacing();
        let snap = |v: f64| (((v + 1.0) / h).round() as i64 - 1).clamp(0, self.size as i64 - 1) as usize;
        self.index(snap(x), snap(y))
    }

    fn neighbours(&self, node: usize) -> [Option<usize>; 4] {
        let (i, j, s) = (node % self.size, node / self.size, self.size);
        [(i > 0).then(|| node - 1), (i + 1 < s).then(|| node + 1), (j > 0).then(|| node - s), (j + 1 < s).then(|| node + s)]
    }

    /// The discrete negative Laplacian `K = −Δ_h` on interior nodes.
    pub fn stiffness(&self) -> Mat<f64> {
        let n = self.nodes();
        let h2 = self.spacing().powi(2);
        let mut k = Mat::zeros(n, n);
        for node in 0..n {
            k[(node, node)] = 4.0 / h2;
            for nb in self.neighbours(node).into_iter().flatten() {
                k[(node, nb)] = -1.0 / h2;
            }
        }
        k
    }

    /// Number of boundary neighbours of each node, divided by `h²`.
    pub fn boundary_coupling(&self) -> Vec<f64> {
        let h2 = self.spacing().powi(2);
        (0..self.nodes()).map(|node| self.neighbours(node).iter().filter(|n| n.is_none()).count() as f64 / h2).collect()
    }

    /// `−v·∇` by central differences; boundary values are dropped.
    pub fn advection(&self, velocity: impl Fn(f64, f64) -> (f64, f64)) -> Mat<f64> {
        let n = self.nodes();
        let h = self.spacing();
        let mut out = Mat::zeros(n, n);
        for node in 0..n {
            let (x, y) = self.coords(node);
            let (vx, vy) = velocity(x, y);
            let [west, east, south, north] = self.neighbours(node);
            let mut add = |nb: Option<usize>, w: f64| {
                if let Some(nb) = nb {
                    out[(node, nb)] += w;
                }
            };
            add(east, -vx / (2.0 * h));
            add(west, vx / (2.0 * h));
            add(north, -vy / (2.0 * h));
            add(south, vy / (2.0 * h));
        }
        out
    }

    /// Averaging functional over the nodes inside `[0.5, 1]²`.
    pub fn output_functional(&self) -> Vec<f64> {
        let inside: Vec<bool> = (0..self.nodes())
            .map(|node| {
                let (x, y) = self.coords(node);
                x >= 0.5 && y >= 0.5
            })
            .collect();
        let count = inside.iter().filter(|&&b| b).count() as f64;
        inside.iter().map(|&b| if b { 1.0 / count } else { 0.0 }).collect()
    }

    /// Source vector `f(x_i, y_i; p)`.
    pub fn load_vector(&self, p: &[f64]) -> Vec<f64> {
        (0..self.nodes())
            .map(|node| {
                let (x, y) = self.coords(node);
                gaussian(x, y, p)
            })
            .collect()
    }

    /// Source vectors at `count` random points of the parameter box, one per column.
    pub fn load_snapshots(&self, count: usize, rng: &mut impl Rng) -> CMat {
        let bx = param_box();
        let mut out = Mat::zeros(self.nodes(), count);
        for c in 0..count {
            let p = bx.sample(rng);
            for (i, v) in self.load_vector(p.as_slice()).into_iter().enumerate() {
                out[(i, c)] = cplx(v);
            }
        }
        out
    }
}

pub fn velocity_rotation(x: f64, y: f64) -> (f64, f64) {
    (-y, x)
}

pub fn velocity_diagonal(x: f64, y: f64) -> (f64, f64) {
    let s = 0.5 * ((PI * (x - y)).cos() + 1.0);
    (s, s)
}

fn promote(m: &Mat<f64>) -> CMat {
    Mat::from_fn(m.nrows(), m.ncols(), |i, j| cplx(m[(i, j)]))
}

fn column_in(n: usize, cols: usize, col: usize, v: &[f64]) -> CMat {
    Mat::from_fn(n, cols, |i, j| if j == col { cplx(v[i]) } else { cplx(0.0) })
}

/// Everything but the source column of `B`.
fn assemble(grid: AdvDiffGrid, name: String, source_terms: Vec<AffineTerm>) -> Result<ParametricBilinearSystem> {
    let n = grid.nodes();
    let neg_k = promote(&(-grid.stiffness()));
    let a = AffineMatrix::zeros(n, n).with_term(monomial(1.0, 0, 1, "p1"), neg_k)?;
    let n1 = AffineMatrix::constant(promote(&grid.advection(velocity_rotation)));
    let n2 = AffineMatrix::constant(promote(&grid.advection(velocity_diagonal)));
    let mut b_terms = vec![AffineTerm { coefficient: monomial(1.0, 0, 1, "p1"), matrix: column_in(n, 4, 2, &grid.boundary_coupling()) }];
    b_terms.extend(source_terms);
    let b = AffineMatrix::new(Mat::zeros(n, 4), b_terms)?;
    let c = grid.output_functional();
    let c = AffineMatrix::constant(Mat::from_fn(1, n, |_, j| cplx(c[j])));
    ParametricBilinearSystem::new(
        name,
        4,
        AffineMatrix::constant(Mat::identity(n, n)),
        a,
        vec![n1, n2, AffineMatrix::zeros(n, n), AffineMatrix::zeros(n, n)],
        b,
        c,
    )?
    .with_param_box(param_box())
}

/// The advection-diffusion system with an exact source column: one affine
/// term `f(x_i, y_i; p)·e_i` per node.
pub fn gen_advdiff(size: usize) -> Result<ParametricBilinearSystem> {
    let grid = AdvDiffGrid::new(size)?;
    let n = grid.nodes();
    let terms = (0..n)
        .map(|node| {
            let (x, y) = grid.coords(node);
            AffineTerm { coefficient: gaussian_node(x, y), matrix: Mat::from_fn(n, 4, |i, j| cplx((i == node && j == 3) as u8 as f64)) }
        })
        .collect();
    assemble(grid, format!("advdiff-{size}"), terms)
}

/// Coefficient functions `θ_k(p) = [(SᵀU)^{-1} g(p)]_k` with `g` the source
/// sampled at the DEIM nodes. Tags are `deim<k>` (one-based).
pub fn deim_coefficients(grid: AdvDiffGrid, model: &DeimModel) -> Vec<CoefficientFunction> {
    let pts: Arc<Vec<(f64, f64)>> = Arc::new(model.rows().iter().map(|&r| grid.coords(r)).collect());
    let interp = model.interpolation_matrix();
    let m = model.order();
    let rows: Arc<Vec<Vec<f64>>> = Arc::new((0..m).map(|k| (0..m).map(|j| interp[(k, j)].re).collect()).collect());
    (0..m)
        .map(|k| {
            let (pv, rv) = (pts.clone(), rows.clone());
            let (pg, rg) = (pts.clone(), rows.clone());
            let (ph, rh) = (pts.clone(), rows.clone());
            CoefficientFunction::new(format!("deim{}", k + 1), move |p: &[f64]| {
                pv.iter().zip(&rv[k]).map(|(&(x, y), w)| w * gaussian(x, y, p)).sum()
            })
            .with_gradient(move |p: &[f64]| {
                let mut g = vec![0.0; p.len()];
                for (&(x, y), w) in pg.iter().zip(&rg[k]) {
                    for (gi, di) in g.iter_mut().zip(gaussian_gradient(x, y, p)) {
                        *gi += w * di;
                    }
                }
                g
            })
            .with_hessian(move |p: &[f64]| {
                let mut h = vec![vec![0.0; p.len()]; p.len()];
                for (&(x, y), w) in ph.iter().zip(&rh[k]) {
                    let hk = gaussian_hessian(x, y, p);
                    for (row, hrow) in h.iter_mut().zip(hk) {
                        for (v, d) in row.iter_mut().zip(hrow) {
                            *v += w * d;
                        }
                    }
                }
                h
            })
        })
        .collect()
}

/// Registry resolving the `deim<k>` tags of [`gen_advdiff_deim`] when loading from disk.
pub fn deim_registry(size: usize, model: &DeimModel) -> Result<CoefficientRegistry> {
    let grid = AdvDiffGrid::new(size)?;
    let mut reg = CoefficientRegistry::new();
    for f in deim_coefficients(grid, model) {
        reg.register(f);
    }
    Ok(reg)
}

/// The advection-diffusion system with the source column replaced by its DEIM
/// approximation `Σ_k θ_k(p) u_k`.
pub fn gen_advdiff_deim(size: usize, model: &DeimModel) -> Result<ParametricBilinearSystem> {
    let grid = AdvDiffGrid::new(size)?;
    let n = grid.nodes();
    if model.basis().nrows() != n {
        return Err(Error::Dimension(format!("DEIM basis has {} rows, grid has {n} nodes", model.basis().nrows())));
    }
    let u = model.basis();
    let terms = deim_coefficients(grid, model)
        .into_iter()
        .enumerate()
        .map(|(k, coefficient)| {
            let col: Vec<f64> = (0..n).map(|i| u[(i, k)].re).collect();
            AffineTerm { coefficient, matrix: column_in(n, 4, 3, &col) }
        })
        .collect();
    assemble(grid, format!("advdiff-{size}-deim{}", model.order()), terms)
}

/// Time-dependent input `(sin t, cos t, −1, 0.5)`.
pub fn oscillating_input(t: f64) -> Vec<f64> {
    vec![t.sin(), t.cos(), -1.0, 0.5]
}

/// Constant input `(0.5, 0.25, 1, −1)`.
pub fn constant_input(_t: f64) -> Vec<f64> {
    vec![0.5, 0.25, 1.0, -1.0]
}

/// Accuracy of a DEIM model on fresh parameter draws.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeimAccuracy {
    pub draws: usize,
    /// `max ‖b(p) − b̃(p)‖ / ‖b(p)‖` over the draws.
    pub max_relative_error: f64,
    pub mean_relative_error: f64,
    pub worst_point: Vec<f64>,
    /// `max |b(p)_i − b̃(p)_i|` over the selected rows `i`, which DEIM reproduces exactly.
    pub max_row_mismatch: f64,
}

/// Compares exact Gaussian loads with their DEIM approximation at `draws` random points.
pub fn deim_accuracy(grid: AdvDiffGrid, model: &DeimModel, draws: usize, rng: &mut impl Rng) -> Result<DeimAccuracy> {
    if draws == 0 {
        return Err(Error::InvalidSpec("need at least one draw".into()));
    }
    let bx = param_box();
    let mut out = DeimAccuracy { draws, max_relative_error: 0.0, mean_relative_error: 0.0, worst_point: Vec::new(), max_row_mismatch: 0.0 };
    for _ in 0..draws {
        let p = bx.sample(rng).0;
        let b = grid.load_vector(&p);
        let g: Vec<_> = model.rows().iter().map(|&i| cplx(b[i])).collect();
        let approx = model.approximate(&g)?;
        let diff: f64 = b.iter().enumerate().map(|(i, v)| (v - approx[(i, 0)].re).powi(2)).sum::<f64>().sqrt();
        let rel = diff / b.iter().map(|v| v * v).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
        for &i in model.rows() {
            out.max_row_mismatch = out.max_row_mismatch.max((b[i] - approx[(i, 0)].re).abs());
        }
        out.mean_relative_error += rel / draws as f64;
        if rel >= out.max_relative_error {
            out.max_relative_error = rel;
            out.worst_point = p;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn source_peaks_at_nearest_node() {
        let grid = AdvDiffGrid::new(11).unwrap();
        let p = [0.3, 0.41, -0.27, 2.0];
        let b = grid.load_vector(&p);
        let argmax = (0..b.len()).max_by(|&a, &c| b[a].total_cmp(&b[c])).unwrap();
        assert_eq!(argmax, grid.nearest_node(0.41, -0.27));
    }

    #[test]
    fn stiffness_is_symmetric_positive_definite() {
        let k = AdvDiffGrid::new(5).unwrap().stiffness();
        for i in 0..k.nrows() {
            for j in 0..k.ncols() {
                assert_eq!(k[(i, j)], k[(j, i)]);
            }
        }
        let ev = k.self_adjoint_eigenvalues(faer::Side::Lower).unwrap();
        assert!(ev.iter().all(|&l| l > 0.0));
    }

    #[test]
    fn advection_and_a_scaling() {
        let sys = gen_advdiff(5).unwrap();
        for nj in &sys.n()[..2] {
            assert!(nj.is_parameter_independent());
        }
        let a1 = sys.a().evaluate(&[1.0, 0.0, 0.0, 2.0]).unwrap();
        let a3 = sys.a().evaluate(&[3.0, 0.5, -0.2, 7.0]).unwrap();
        let diff = &a3 - &a1 * faer::Scale(cplx(3.0));
        assert!(crate::kernels::max_abs(diff.as_ref()) < 1e-10);
    }

    #[test]
    fn boundary_coupling_counts_corners_twice() {
        let grid = AdvDiffGrid::new(5).unwrap();
        let h2 = grid.spacing().powi(2);
        let b = grid.boundary_coupling();
        assert_eq!(b[0] * h2, 2.0);
        assert_eq!(b[grid.index(2, 0)] * h2, 1.0);
        assert_eq!(b[grid.index(2, 2)], 0.0);
    }

    #[test]
    fn constant_field_has_no_rotational_advection_inside() {
        // v_1 is divergence free, so a constant field is only advected at the boundary.
        let grid = AdvDiffGrid::new(7).unwrap();
        let n1 = grid.advection(velocity_rotation);
        let centre = grid.index(3, 3);
        let row_sum: f64 = (0..grid.nodes()).map(|j| n1[(centre, j)]).sum();
        assert!(row_sum.abs() < 1e-12);
    }

    #[test]
    fn output_is_an_average() {
        let c = AdvDiffGrid::new(21).unwrap().output_functional();
        assert!((c.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }
}

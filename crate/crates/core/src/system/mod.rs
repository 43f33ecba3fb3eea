//! Full and reduced parametric bilinear systems
//! `E(p)ẋ = A(p)x + Σ_j N_j(p) x u_j + B(p)u`, `y = C(p)x`.

pub mod affine;
pub mod coefficient;
pub mod manifest;

use std::sync::{Arc, OnceLock};

use rand::Rng;
use serde::{Deserialize, Serialize};

pub use affine::{affine_derivative, affine_second_derivative, evaluate_affine, AffineMatrix, AffineTerm};
pub use coefficient::{CoefficientFunction, CoefficientRegistry};

use crate::basis::BasisProvenance;
use crate::error::{Error, Result};
use crate::kernels::{rcond_estimate, BlockRow, CMat, RCOND_THRESHOLD};

/// A point in parameter space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ParamPoint(pub Vec<f64>);

impl ParamPoint {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidSpec(format!("non-finite parameter point {values:?}")));
        }
        Ok(Self(values))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl From<Vec<f64>> for ParamPoint {
    fn from(v: Vec<f64>) -> Self {
        Self(v)
    }
}

impl From<f64> for ParamPoint {
    fn from(v: f64) -> Self {
        Self(vec![v])
    }
}

/// Bounds for one parameter coordinate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParamRange {
    pub lower: f64,
    pub upper: f64,
    /// Sample `ln p` uniformly instead of `p`.
    #[serde(default)]
    pub log_scale: bool,
}

impl ParamRange {
    pub fn linear(lower: f64, upper: f64) -> Self {
        Self { lower, upper, log_scale: false }
    }

    pub fn log(lower: f64, upper: f64) -> Self {
        Self { lower, upper, log_scale: true }
    }

    pub fn sample(&self, rng: &mut impl Rng) -> f64 {
        let t: f64 = rng.random();
        self.at(t)
    }

    /// Point at fraction `t ∈ [0, 1]` of the range (geometric when log-scaled).
    pub fn at(&self, t: f64) -> f64 {
        if self.log_scale {
            let (a, b) = (self.lower.ln(), self.upper.ln());
            (a + t * (b - a)).exp()
        } else {
            self.lower + t * (self.upper - self.lower)
        }
    }
}

/// Axis-aligned parameter domain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ParamBox(pub Vec<ParamRange>);

impl ParamBox {
    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn sample(&self, rng: &mut impl Rng) -> ParamPoint {
        ParamPoint(self.0.iter().map(|r| r.sample(rng)).collect())
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        p.len() == self.0.len() && self.0.iter().zip(p).all(|(r, &x)| x >= r.lower && x <= r.upper)
    }
}

/// `(n, m, ℓ, ν)`: states, inputs, outputs, parameters.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SystemDims {
    pub n: usize,
    pub m: usize,
    pub l: usize,
    pub nu: usize,
}

/// All system matrices evaluated (or differentiated) at one parameter point.
#[derive(Debug, Clone)]
pub struct EvaluatedSystem {
    pub e: CMat,
    pub a: CMat,
    pub n: BlockRow,
    pub b: CMat,
    pub c: CMat,
}

#[derive(Debug, Clone)]
pub struct ParametricBilinearSystem {
    name: String,
    dims: SystemDims,
    e: AffineMatrix,
    a: AffineMatrix,
    n: Vec<AffineMatrix>,
    b: AffineMatrix,
    c: AffineMatrix,
    param_box: Option<ParamBox>,
    descriptor_rcond: Arc<OnceLock<f64>>,
}

impl ParametricBilinearSystem {
    /// Validates dimensions; `nu` is the parameter count.
    pub fn new(
        name: impl Into<String>,
        nu: usize,
        e: AffineMatrix,
        a: AffineMatrix,
        n: Vec<AffineMatrix>,
        b: AffineMatrix,
        c: AffineMatrix,
    ) -> Result<Self> {
        let size = a.nrows();
        let dims = SystemDims { n: size, m: b.ncols(), l: c.nrows(), nu };
        let square = |what: &str, m: &AffineMatrix| {
            if m.nrows() != size || m.ncols() != size {
                Err(Error::Dimension(format!("{what} is {}x{}, expected {size}x{size}", m.nrows(), m.ncols())))
            } else {
                Ok(())
            }
        };
        square("A", &a)?;
        square("E", &e)?;
        for (j, nj) in n.iter().enumerate() {
            square(&format!("N_{}", j + 1), nj)?;
        }
        if n.len() != dims.m {
            return Err(Error::Dimension(format!("{} N matrices for {} inputs", n.len(), dims.m)));
        }
        if b.nrows() != size {
            return Err(Error::Dimension(format!("B has {} rows, expected {size}", b.nrows())));
        }
        if c.ncols() != size {
            return Err(Error::Dimension(format!("C has {} columns, expected {size}", c.ncols())));
        }
        Ok(Self { name: name.into(), dims, e, a, n, b, c, param_box: None, descriptor_rcond: Arc::new(OnceLock::new()) })
    }

    pub fn with_param_box(mut self, param_box: ParamBox) -> Result<Self> {
        if param_box.dim() != self.dims.nu {
            return Err(Error::Dimension(format!("parameter box has {} ranges, system has {} parameters", param_box.dim(), self.dims.nu)));
        }
        self.param_box = Some(param_box);
        Ok(self)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dims(&self) -> SystemDims {
        self.dims
    }

    pub fn param_box(&self) -> Option<&ParamBox> {
        self.param_box.as_ref()
    }

    pub fn e(&self) -> &AffineMatrix {
        &self.e
    }

    pub fn a(&self) -> &AffineMatrix {
        &self.a
    }

    pub fn n(&self) -> &[AffineMatrix] {
        &self.n
    }

    pub fn b(&self) -> &AffineMatrix {
        &self.b
    }

    pub fn c(&self) -> &AffineMatrix {
        &self.c
    }

    pub fn is_parameter_independent(&self) -> bool {
        self.affine_parts().all(AffineMatrix::is_parameter_independent)
    }

    pub fn derivatives_exact(&self) -> bool {
        self.affine_parts().all(AffineMatrix::derivatives_exact)
    }

    fn affine_parts(&self) -> impl Iterator<Item = &AffineMatrix> {
        [&self.e, &self.a, &self.b, &self.c].into_iter().chain(self.n.iter())
    }

    fn check_point(&self, p: &[f64]) -> Result<()> {
        if p.len() != self.dims.nu {
            return Err(Error::Dimension(format!("parameter point has {} entries, expected {}", p.len(), self.dims.nu)));
        }
        Ok(())
    }

    /// Evaluates every matrix at `p` and checks that `E(p)` is nonsingular.
    pub fn evaluate(&self, p: &[f64]) -> Result<EvaluatedSystem> {
        self.check_point(p)?;
        let e = self.e.evaluate(p)?;
        self.check_descriptor(p, &e)?;
        Ok(EvaluatedSystem {
            e,
            a: self.a.evaluate(p)?,
            n: BlockRow::new(self.n.iter().map(|m| m.evaluate(p)).collect::<Result<_>>()?)?,
            b: self.b.evaluate(p)?,
            c: self.c.evaluate(p)?,
        })
    }

    /// `∂/∂p_j` of every matrix at `p`.
    pub fn derivative(&self, p: &[f64], j: usize) -> Result<EvaluatedSystem> {
        self.check_point(p)?;
        Ok(EvaluatedSystem {
            e: self.e.derivative(p, j)?,
            a: self.a.derivative(p, j)?,
            n: BlockRow::new(self.n.iter().map(|m| m.derivative(p, j)).collect::<Result<_>>()?)?,
            b: self.b.derivative(p, j)?,
            c: self.c.derivative(p, j)?,
        })
    }

    /// `∂²/∂p_i∂p_j` of every matrix at `p`.
    pub fn second_derivative(&self, p: &[f64], i: usize, j: usize) -> Result<EvaluatedSystem> {
        self.check_point(p)?;
        Ok(EvaluatedSystem {
            e: self.e.second_derivative(p, i, j)?,
            a: self.a.second_derivative(p, i, j)?,
            n: BlockRow::new(self.n.iter().map(|m| m.second_derivative(p, i, j)).collect::<Result<_>>()?)?,
            b: self.b.second_derivative(p, i, j)?,
            c: self.c.second_derivative(p, i, j)?,
        })
    }

    /// Fails with `SingularDescriptor` when the condition estimate of `E(p)`
    /// is below the threshold. Constant `E` is checked once.
    pub fn check_descriptor(&self, p: &[f64], e: &CMat) -> Result<()> {
        let rcond = if self.e.is_parameter_independent() {
            *self.descriptor_rcond.get_or_init(|| descriptor_rcond(e))
        } else {
            descriptor_rcond(e)
        };
        if rcond < RCOND_THRESHOLD {
            return Err(Error::SingularDescriptor { point: p.to_vec(), rcond });
        }
        Ok(())
    }

    /// Builds a system with the same coefficients and new term matrices.
    pub(crate) fn map_parts(
        &self,
        name: String,
        square: impl Fn(&CMat) -> CMat,
        input: impl Fn(&CMat) -> CMat,
        output: impl Fn(&CMat) -> CMat,
    ) -> Result<Self> {
        let mut out = Self::new(
            name,
            self.dims.nu,
            self.e.map_matrices(&square)?,
            self.a.map_matrices(&square)?,
            self.n.iter().map(|m| m.map_matrices(&square)).collect::<Result<_>>()?,
            self.b.map_matrices(&input)?,
            self.c.map_matrices(&output)?,
        )?;
        out.param_box = self.param_box.clone();
        Ok(out)
    }
}

fn descriptor_rcond(e: &CMat) -> f64 {
    let n = e.nrows();
    let is_identity = (0..n).all(|j| (0..n).all(|i| e[(i, j)] == if i == j { crate::kernels::cplx(1.0) } else { Default::default() }));
    if is_identity {
        1.0
    } else {
        rcond_estimate(e)
    }
}

/// A projected system together with the provenance of the basis that produced it.
#[derive(Debug, Clone)]
pub struct ReducedBilinearSystem {
    system: ParametricBilinearSystem,
    parent_dims: SystemDims,
    provenance: Option<Arc<BasisProvenance>>,
}

impl ReducedBilinearSystem {
    pub fn new(system: ParametricBilinearSystem, parent_dims: SystemDims, provenance: Option<Arc<BasisProvenance>>) -> Result<Self> {
        let d = system.dims();
        if d.n > parent_dims.n || d.m != parent_dims.m || d.l != parent_dims.l || d.nu != parent_dims.nu {
            return Err(Error::Dimension(format!("reduced dims {d:?} incompatible with parent {parent_dims:?}")));
        }
        Ok(Self { system, parent_dims, provenance })
    }

    pub fn system(&self) -> &ParametricBilinearSystem {
        &self.system
    }

    pub fn order(&self) -> usize {
        self.system.dims().n
    }

    pub fn parent_dims(&self) -> SystemDims {
        self.parent_dims
    }

    pub fn provenance(&self) -> Option<&BasisProvenance> {
        self.provenance.as_deref()
    }
}

impl std::ops::Deref for ReducedBilinearSystem {
    type Target = ParametricBilinearSystem;

    fn deref(&self) -> &Self::Target {
        &self.system
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::cplx;
    use faer::Mat;

    fn scalar(v: f64) -> AffineMatrix {
        AffineMatrix::constant(Mat::from_fn(1, 1, |_, _| cplx(v)))
    }

    #[test]
    fn dimension_checks() {
        let ok = ParametricBilinearSystem::new("s", 0, scalar(1.0), scalar(-1.0), vec![scalar(0.0)], scalar(1.0), scalar(1.0));
        assert!(ok.is_ok());
        let bad = ParametricBilinearSystem::new("s", 0, scalar(1.0), scalar(-1.0), vec![], scalar(1.0), scalar(1.0));
        assert!(matches!(bad, Err(Error::Dimension(_))));
    }

    #[test]
    fn singular_descriptor_is_reported() {
        let sys = ParametricBilinearSystem::new("s", 1, scalar(0.0), scalar(-1.0), vec![scalar(0.0)], scalar(1.0), scalar(1.0)).unwrap();
        assert!(matches!(sys.evaluate(&[0.0]), Err(Error::SingularDescriptor { .. })));
    }

    #[test]
    fn descriptor_threshold_is_sharp() {
        let near = |eps: f64| {
            let e = Mat::from_fn(2, 2, |i, j| {
                cplx(if i == j {
                    if i == 0 {
                        1.0
                    } else {
                        eps
                    }
                } else {
                    0.0
                })
            });
            let sys = ParametricBilinearSystem::new(
                "d",
                0,
                AffineMatrix::constant(e),
                AffineMatrix::constant(Mat::identity(2, 2)),
                vec![AffineMatrix::zeros(2, 2)],
                AffineMatrix::zeros(2, 1),
                AffineMatrix::zeros(1, 2),
            )
            .unwrap();
            sys.evaluate(&[]).map(|_| ())
        };
        assert!(near(1e-12).is_ok());
        assert!(near(1e-16).is_err());
    }

    #[test]
    fn log_range_is_geometric() {
        let r = ParamRange::log(1e-2, 1e2);
        assert!((r.at(0.5) - 1.0).abs() < 1e-12);
    }
}

use faer::Mat;

use super::coefficient::CoefficientFunction;
use crate::error::{Error, Result};
use crate::kernels::{cplx, CMat};

/// One term `f_i(p) · M_i` of an affine matrix.
#[derive(Debug, Clone)]
pub struct AffineTerm {
    pub coefficient: CoefficientFunction,
    pub matrix: CMat,
}

/// `M(p) = M0 + Σ f_i(p) M_i`.
#[derive(Debug, Clone)]
pub struct AffineMatrix {
    constant: CMat,
    terms: Vec<AffineTerm>,
}

impl AffineMatrix {
    pub fn constant(m: CMat) -> Self {
        Self { constant: m, terms: Vec::new() }
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self::constant(Mat::zeros(rows, cols))
    }

    pub fn new(constant: CMat, terms: Vec<AffineTerm>) -> Result<Self> {
        let out = Self { constant, terms };
        out.check_shapes()?;
        Ok(out)
    }

    pub fn with_term(mut self, coefficient: CoefficientFunction, matrix: CMat) -> Result<Self> {
        self.terms.push(AffineTerm { coefficient, matrix });
        self.check_shapes()?;
        Ok(self)
    }

    fn check_shapes(&self) -> Result<()> {
        let (r, c) = (self.constant.nrows(), self.constant.ncols());
        for t in &self.terms {
            if t.matrix.nrows() != r || t.matrix.ncols() != c {
                return Err(Error::Dimension(format!(
                    "affine term `{}` is {}x{}, constant is {r}x{c}",
                    t.coefficient.tag(),
                    t.matrix.nrows(),
                    t.matrix.ncols()
                )));
            }
        }
        Ok(())
    }

    pub fn nrows(&self) -> usize {
        self.constant.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.constant.ncols()
    }

    pub fn constant_term(&self) -> &CMat {
        &self.constant
    }

    pub fn terms(&self) -> &[AffineTerm] {
        &self.terms
    }

    pub fn is_parameter_independent(&self) -> bool {
        self.terms.is_empty()
    }

    /// True when every derivative is computed from exact coefficient gradients.
    pub fn derivatives_exact(&self) -> bool {
        self.terms.iter().all(|t| t.coefficient.gradient_is_exact())
    }

    /// Applies `f` to the constant and every term matrix, keeping the
    /// coefficient functions shared.
    pub fn map_matrices(&self, f: impl Fn(&CMat) -> CMat) -> Result<Self> {
        let constant = f(&self.constant);
        let terms = self.terms.iter().map(|t| AffineTerm { coefficient: t.coefficient.clone(), matrix: f(&t.matrix) }).collect();
        Self::new(constant, terms)
    }

    pub fn evaluate(&self, p: &[f64]) -> Result<CMat> {
        let mut out = self.constant.clone();
        for t in &self.terms {
            let w = t.coefficient.value(p)?;
            axpy(&mut out, w, &t.matrix);
        }
        Ok(out)
    }

    /// `Σ ∂f_i/∂p_j(p) · M_i`.
    pub fn derivative(&self, p: &[f64], j: usize) -> Result<CMat> {
        let mut out = Mat::zeros(self.nrows(), self.ncols());
        for t in &self.terms {
            let w = t.coefficient.partial(p, j)?;
            axpy(&mut out, w, &t.matrix);
        }
        Ok(out)
    }

    /// `Σ ∂²f_i/∂p_i∂p_j(p) · M_i`.
    pub fn second_derivative(&self, p: &[f64], i: usize, j: usize) -> Result<CMat> {
        let mut out = Mat::zeros(self.nrows(), self.ncols());
        for t in &self.terms {
            let w = t.coefficient.second_partial(p, i, j)?;
            axpy(&mut out, w, &t.matrix);
        }
        Ok(out)
    }
}

fn axpy(out: &mut CMat, w: f64, m: &CMat) {
    if w == 0.0 {
        return;
    }
    let w = cplx(w);
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            let v = m[(i, j)];
            if v.re != 0.0 || v.im != 0.0 {
                out[(i, j)] += w * v;
            }
        }
    }
}

pub fn evaluate_affine(m: &AffineMatrix, p: &[f64]) -> Result<CMat> {
    m.evaluate(p)
}

pub fn affine_derivative(m: &AffineMatrix, p: &[f64], j: usize) -> Result<CMat> {
    m.derivative(p, j)
}

pub fn affine_second_derivative(m: &AffineMatrix, p: &[f64], i: usize, j: usize) -> Result<CMat> {
    m.second_derivative(p, i, j)
}

//! Scalar coefficient functions `f_i(p)` of affine matrices.

use std::collections::HashMap;
use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

pub type ValueFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
pub type GradientFn = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;
pub type HessianFn = Arc<dyn Fn(&[f64]) -> Vec<Vec<f64>> + Send + Sync>;

/// Relative step for first-order central differences in `p`.
pub const FD_STEP: f64 = 1e-6;
/// Relative step for nested second-order differences in `p`.
pub const FD_STEP_SECOND: f64 = 1e-4;

/// A scalar function of the parameter vector with optional exact derivatives.
///
/// Missing derivatives are replaced by central differences; callers can ask
/// [`CoefficientFunction::gradient_is_exact`] whether that happened.
#[derive(Clone)]
pub struct CoefficientFunction {
    tag: String,
    value: ValueFn,
    gradient: Option<GradientFn>,
    hessian: Option<HessianFn>,
}

impl fmt::Debug for CoefficientFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CoefficientFunction")
            .field("tag", &self.tag)
            .field("gradient", &self.gradient.is_some())
            .field("hessian", &self.hessian.is_some())
            .finish()
    }
}

impl CoefficientFunction {
    pub fn new(tag: impl Into<String>, value: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        Self { tag: tag.into(), value: Arc::new(value), gradient: None, hessian: None }
    }

    pub fn with_gradient(mut self, g: impl Fn(&[f64]) -> Vec<f64> + Send + Sync + 'static) -> Self {
        self.gradient = Some(Arc::new(g));
        self
    }

    pub fn with_hessian(mut self, h: impl Fn(&[f64]) -> Vec<Vec<f64>> + Send + Sync + 'static) -> Self {
        self.hessian = Some(Arc::new(h));
        self
    }

    /// The constant function 1.
    pub fn one() -> Self {
        Self::new("1", |_| 1.0).with_gradient(|p| vec![0.0; p.len()]).with_hessian(|p| vec![vec![0.0; p.len()]; p.len()])
    }

    pub fn tag(&self) -> &str {
        &self.tag
    }

    pub fn gradient_is_exact(&self) -> bool {
        self.gradient.is_some()
    }

    pub fn hessian_is_exact(&self) -> bool {
        self.hessian.is_some()
    }

    pub fn value(&self, p: &[f64]) -> Result<f64> {
        let v = (self.value)(p);
        self.finite(v, p)
    }

    /// `∂f/∂p_j`, exact if a gradient was supplied.
    pub fn partial(&self, p: &[f64], j: usize) -> Result<f64> {
        if let Some(g) = &self.gradient {
            let grad = g(p);
            let v = *grad
                .get(j)
                .ok_or_else(|| Error::Dimension(format!("gradient of `{}` has {} entries, index {j}", self.tag, grad.len())))?;
            return self.finite(v, p);
        }
        let h = step(FD_STEP, p[j]);
        let fp = self.value(&shifted(p, &[(j, h)]))?;
        let fm = self.value(&shifted(p, &[(j, -h)]))?;
        Ok((fp - fm) / (2.0 * h))
    }

    /// `∂²f/∂p_i∂p_j`, from the Hessian, the gradient, or nested differences.
    pub fn second_partial(&self, p: &[f64], i: usize, j: usize) -> Result<f64> {
        if let Some(hf) = &self.hessian {
            let hess = hf(p);
            let v = hess
                .get(i)
                .and_then(|row| row.get(j))
                .copied()
                .ok_or_else(|| Error::Dimension(format!("hessian of `{}` is too small for ({i}, {j})", self.tag)))?;
            return self.finite(v, p);
        }
        if self.gradient.is_some() {
            let h = step(FD_STEP_SECOND, p[i]);
            let gp = self.partial(&shifted(p, &[(i, h)]), j)?;
            let gm = self.partial(&shifted(p, &[(i, -h)]), j)?;
            return Ok((gp - gm) / (2.0 * h));
        }
        let hi = step(FD_STEP_SECOND, p[i]);
        let hj = step(FD_STEP_SECOND, p[j]);
        let f = |si: f64, sj: f64| self.value(&shifted(p, &[(i, si * hi), (j, sj * hj)]));
        Ok((f(1.0, 1.0)? - f(1.0, -1.0)? - f(-1.0, 1.0)? + f(-1.0, -1.0)?) / (4.0 * hi * hj))
    }

    fn finite(&self, v: f64, p: &[f64]) -> Result<f64> {
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::CoefficientEvaluation { tag: self.tag.clone(), point: p.to_vec() })
        }
    }
}

fn step(rel: f64, x: f64) -> f64 {
    rel * x.abs().max(1.0)
}

fn shifted(p: &[f64], moves: &[(usize, f64)]) -> Vec<f64> {
    let mut q = p.to_vec();
    for &(k, d) in moves {
        q[k] += d;
    }
    q
}

/// `scale · p_j^power` with exact derivatives. `j` is zero-based.
pub fn monomial(scale: f64, j: usize, power: i32, tag: impl Into<String>) -> CoefficientFunction {
    let value = move |p: &[f64]| scale * p[j].powi(power);
    let grad = move |p: &[f64]| {
        let mut g = vec![0.0; p.len()];
        if power != 0 {
            g[j] = scale * power as f64 * p[j].powi(power - 1);
        }
        g
    };
    let hess = move |p: &[f64]| {
        let mut h = vec![vec![0.0; p.len()]; p.len()];
        if power != 0 && power != 1 {
            h[j][j] = scale * (power * (power - 1)) as f64 * p[j].powi(power - 2);
        }
        h
    };
    CoefficientFunction::new(tag, value).with_gradient(grad).with_hessian(hess)
}

/// `exp(−((x0 − p[1])² + (y0 − p[2])²) / p[3])`, the Gaussian source at a node.
pub fn gaussian_node(x0: f64, y0: f64) -> CoefficientFunction {
    CoefficientFunction::new(format!("gauss({x0},{y0})"), move |p: &[f64]| gaussian(x0, y0, p))
        .with_gradient(move |p: &[f64]| gaussian_gradient(x0, y0, p))
        .with_hessian(move |p: &[f64]| gaussian_hessian(x0, y0, p))
}

pub(crate) fn gaussian(x0: f64, y0: f64, p: &[f64]) -> f64 {
    let (dx, dy) = (x0 - p[1], y0 - p[2]);
    (-(dx * dx + dy * dy) / p[3]).exp()
}

pub(crate) fn gaussian_gradient(x0: f64, y0: f64, p: &[f64]) -> Vec<f64> {
    let (dx, dy, w) = (x0 - p[1], y0 - p[2], p[3]);
    let g = gaussian(x0, y0, p);
    let mut out = vec![0.0; p.len()];
    out[1] = g * 2.0 * dx / w;
    out[2] = g * 2.0 * dy / w;
    out[3] = g * (dx * dx + dy * dy) / (w * w);
    out
}

pub(crate) fn gaussian_hessian(x0: f64, y0: f64, p: &[f64]) -> Vec<Vec<f64>> {
    let (dx, dy, w) = (x0 - p[1], y0 - p[2], p[3]);
    let r2 = dx * dx + dy * dy;
    let g = gaussian(x0, y0, p);
    let mut h = vec![vec![0.0; p.len()]; p.len()];
    h[1][1] = g * (4.0 * dx * dx / (w * w) - 2.0 / w);
    h[2][2] = g * (4.0 * dy * dy / (w * w) - 2.0 / w);
    h[1][2] = g * 4.0 * dx * dy / (w * w);
    h[1][3] = g * (2.0 * dx / w) * (r2 / (w * w) - 1.0 / w);
    h[2][3] = g * (2.0 * dy / w) * (r2 / (w * w) - 1.0 / w);
    h[3][3] = g * (r2 * r2 / w.powi(4) - 2.0 * r2 / w.powi(3));
    h[2][1] = h[1][2];
    h[3][1] = h[1][3];
    h[3][2] = h[2][3];
    h
}

/// Parses a built-in coefficient tag.
///
/// Grammar: `1`, `[-][c*]p<j>[^k]` with one-based `j`, or `gauss(x0,y0)`.
pub fn parse_tag(tag: &str) -> Result<CoefficientFunction> {
    let t = tag.trim();
    if t == "1" {
        return Ok(CoefficientFunction::one());
    }
    if let Some(inner) = t.strip_prefix("gauss(").and_then(|s| s.strip_suffix(')')) {
        let parts: Vec<&str> = inner.split(',').collect();
        if parts.len() == 2 {
            if let (Ok(x0), Ok(y0)) = (parts[0].trim().parse(), parts[1].trim().parse()) {
                return Ok(gaussian_node(x0, y0));
            }
        }
        return Err(Error::UnknownCoefficient(tag.to_string()));
    }
    parse_monomial(t).ok_or_else(|| Error::UnknownCoefficient(tag.to_string()))
}

fn parse_monomial(t: &str) -> Option<CoefficientFunction> {
    let (sign, rest) = match t.strip_prefix('-') {
        Some(r) => (-1.0, r),
        None => (1.0, t),
    };
    let (scale, var) = match rest.split_once('*') {
        Some((c, v)) => (c.trim().parse::<f64>().ok()?, v.trim()),
        None => (1.0, rest),
    };
    let var = var.strip_prefix('p')?;
    let (idx, power) = match var.split_once('^') {
        Some((i, k)) => (i.parse::<usize>().ok()?, k.parse::<i32>().ok()?),
        None => (var.parse::<usize>().ok()?, 1),
    };
    if idx == 0 {
        return None;
    }
    Some(monomial(sign * scale, idx - 1, power, t))
}

/// Lookup table for coefficient tags that are not built in.
#[derive(Clone, Default, Debug)]
pub struct CoefficientRegistry {
    custom: HashMap<String, CoefficientFunction>,
}

impl CoefficientRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn register(&mut self, f: CoefficientFunction) {
        self.custom.insert(f.tag().to_string(), f);
    }

    /// Registered functions take precedence over the built-in grammar.
    pub fn resolve(&self, tag: &str) -> Result<CoefficientFunction> {
        match self.custom.get(tag) {
            Some(f) => Ok(f.clone()),
            None => parse_tag(tag),
        }
    }
}

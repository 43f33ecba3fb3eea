//! Shift selection by the iterative rational Krylov algorithm applied to the
//! linear part of the system (all `N_j` dropped) at one parameter sample.

use faer::prelude::*;
use serde::{Deserialize, Serialize};

use crate::c64;
use crate::error::{Error, Result};
use crate::kernels::{column, cplx, frobenius, hcat, orthonormal_span, CMat, ShiftedFactor};
use crate::serde_util;
use crate::system::ParametricBilinearSystem;

pub const DEFAULT_MAX_ITER: usize = 100;
pub const DEFAULT_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IrkaOptions {
    pub max_iter: usize,
    pub tol: f64,
    /// Starting shifts; log-spaced over the spectral scale when absent.
    #[serde(default, skip_serializing_if = "Option::is_none", with = "opt_complex_vec")]
    pub init_shifts: Option<Vec<c64>>,
}

impl Default for IrkaOptions {
    fn default() -> Self {
        Self { max_iter: DEFAULT_MAX_ITER, tol: DEFAULT_TOL, init_shifts: None }
    }
}

mod opt_complex_vec {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &Option<Vec<c64>>, s: S) -> std::result::Result<S::Ok, S::Error> {
        match v {
            Some(v) => serde_util::complex_vec::serialize(v, s),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Option<Vec<c64>>, D::Error> {
        serde_util::complex_vec::deserialize(d).map(Some)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IrkaResult {
    #[serde(with = "serde_util::complex_vec")]
    pub shifts: Vec<c64>,
    /// Right tangential direction per shift (length `m`).
    #[serde(with = "serde_util::complex_vec_vec")]
    pub b_dirs: Vec<Vec<c64>>,
    /// Left tangential direction per shift (length `ℓ`).
    #[serde(with = "serde_util::complex_vec_vec")]
    pub c_dirs: Vec<Vec<c64>>,
    pub iterations: usize,
    pub converged: bool,
    pub last_change: f64,
    /// False when some reduced pole had a nonnegative real part.
    pub stable: bool,
    pub p_hat: Vec<f64>,
}

/// The linear part `(E, A, B, C)` at one parameter point.
#[derive(Debug, Clone)]
pub struct LinearModel {
    pub e: CMat,
    pub a: CMat,
    pub b: CMat,
    pub c: CMat,
}

impl LinearModel {
    pub fn at(sys: &ParametricBilinearSystem, p: &[f64]) -> Result<Self> {
        let m = sys.evaluate(p)?;
        Ok(Self { e: m.e, a: m.a, b: m.b, c: m.c })
    }

    /// `C (sE − A)^{-1} B`.
    pub fn transfer(&self, s: c64) -> Result<CMat> {
        Ok(&self.c * ShiftedFactor::new(&self.e, &self.a, s)?.solve(&self.b))
    }

    /// `−C (sE − A)^{-1} E (sE − A)^{-1} B`.
    pub fn transfer_derivative(&self, s: c64) -> Result<CMat> {
        let f = ShiftedFactor::new(&self.e, &self.a, s)?;
        let x = f.solve(&self.b);
        Ok(-(&self.c * f.solve(&(&self.e * x))))
    }

    /// Tangential interpolatory projection at the given shifts and directions.
    pub fn project(&self, shifts: &[c64], b_dirs: &[Vec<c64>], c_dirs: &[Vec<c64>]) -> Result<LinearModel> {
        let r = shifts.len();
        let mut vcols = Vec::with_capacity(r);
        let mut wcols = Vec::with_capacity(r);
        for (i, &s) in shifts.iter().enumerate() {
            let f = solve_factor(&self.e, &self.a, s)?;
            vcols.push(f.solve(&(&self.b * column(&b_dirs[i]))));
            wcols.push(f.solve_transpose(&(self.c.transpose() * column(&c_dirs[i]))));
        }
        let v = real_basis(&hcat(&vcols.iter().collect::<Vec<_>>()), r)?;
        let w = real_basis(&hcat(&wcols.iter().collect::<Vec<_>>()), r)?;
        let wt = w.transpose();
        Ok(LinearModel { e: wt * (&self.e * &v), a: wt * (&self.a * &v), b: wt * &self.b, c: &self.c * &v })
    }
}

fn solve_factor(e: &CMat, a: &CMat, s: c64) -> Result<ShiftedFactor> {
    match ShiftedFactor::new(e, a, s) {
        Err(Error::ShiftAtEigenvalue { .. }) => {
            let nudged = s * (1.0 + 1e-8);
            log::warn!("shift {s} hits the spectrum; retrying at {nudged}");
            ShiftedFactor::new(e, a, nudged)
        }
        other => other,
    }
}

/// Real orthonormal basis of rank `r` for a conjugation-closed set of columns.
fn real_basis(x: &CMat, r: usize) -> Result<CMat> {
    let split = crate::basis::realify(x);
    let (q, _) = orthonormal_span(&split, 1e-13, Some(r))?;
    if q.ncols() < r {
        return Err(Error::DegenerateBasis { expected: r, found: q.ncols() });
    }
    Ok(q)
}

/// A cheap magnitude estimate for the spectrum of `E^{-1}A`.
fn spectral_scale(lin: &LinearModel) -> f64 {
    let norm1 = |m: &CMat| (0..m.ncols()).map(|j| (0..m.nrows()).map(|i| m[(i, j)].norm()).sum::<f64>()).fold(0.0, f64::max);
    let ratio = norm1(&lin.a) / norm1(&lin.e).max(f64::MIN_POSITIVE);
    if ratio > 0.0 && ratio.is_finite() {
        ratio
    } else {
        1.0
    }
}

fn log_spaced(lo: f64, hi: f64, r: usize) -> Vec<c64> {
    if r == 1 {
        return vec![cplx((lo * hi).sqrt())];
    }
    (0..r).map(|i| cplx((lo.ln() + (hi.ln() - lo.ln()) * i as f64 / (r - 1) as f64).exp())).collect()
}

fn sort_shifts(v: &mut [c64]) {
    v.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
}

/// Runs IRKA on `(E(p̂), A(p̂), B(p̂), C(p̂))` for `r` shifts.
///
/// Non-convergence is reported through `converged`, not as an error.
pub fn irka_linear(sys: &ParametricBilinearSystem, p_hat: &[f64], r: usize, opts: &IrkaOptions) -> Result<IrkaResult> {
    if r == 0 {
        return Err(Error::InvalidSpec("IRKA needs r >= 1".into()));
    }
    let lin = LinearModel::at(sys, p_hat)?;
    if lin.a.nrows() < r {
        return Err(Error::InvalidSpec(format!("r = {r} exceeds the system order {}", lin.a.nrows())));
    }
    warn_if_unstable(&lin);
    let (m, l) = (lin.b.ncols(), lin.c.nrows());
    let mut shifts = match &opts.init_shifts {
        Some(s) if s.len() == r => s.clone(),
        Some(s) => return Err(Error::InvalidSpec(format!("{} initial shifts for r = {r}", s.len()))),
        None => {
            let scale = spectral_scale(&lin);
            log_spaced(1e-2 * scale, 1e2 * scale, r)
        }
    };
    let unit = |k: usize| vec![cplx(1.0 / (k as f64).sqrt()); k];
    let mut b_dirs = vec![unit(m); r];
    let mut c_dirs = vec![unit(l); r];
    let mut converged = false;
    let mut last_change = f64::INFINITY;
    let mut stable = true;
    let mut iterations = 0;
    while iterations < opts.max_iter {
        iterations += 1;
        let red = lin.project(&shifts, &b_dirs, &c_dirs)?;
        let (poles, new_b, new_c) = reduced_pole_residues(&red)?;
        stable = poles.iter().all(|p| p.re < 0.0);
        let mut next: Vec<c64> = poles.iter().map(|p| -p).collect();
        let mut old = shifts.clone();
        sort_shifts(&mut old);
        let order = {
            let mut idx: Vec<usize> = (0..r).collect();
            idx.sort_by(|&a, &b| next[a].re.total_cmp(&next[b].re).then(next[a].im.total_cmp(&next[b].im)));
            idx
        };
        next = order.iter().map(|&i| next[i]).collect();
        b_dirs = order.iter().map(|&i| new_b[i].clone()).collect();
        c_dirs = order.iter().map(|&i| new_c[i].clone()).collect();
        last_change = next.iter().zip(&old).map(|(a, b)| (a - b).norm() / b.norm().max(f64::MIN_POSITIVE)).fold(0.0, f64::max);
        shifts = next;
        if last_change < opts.tol {
            converged = true;
            break;
        }
    }
    if !converged {
        log::warn!("IRKA stopped after {iterations} iterations with relative shift change {last_change:.3e}");
    }
    if !stable {
        log::warn!("IRKA reduced model has poles in the closed right half-plane");
    }
    enforce_conjugate_pairs(&mut shifts);
    Ok(IrkaResult { shifts, b_dirs, c_dirs, iterations, converged, last_change, stable, p_hat: p_hat.to_vec() })
}

/// Worst relative mismatch of the tangential Hermite conditions
/// `H(σ_i) b_i`, `c_iᵀ H(σ_i)` and `c_iᵀ H'(σ_i) b_i` between `full` and the
/// model projected at the converged shifts. Zero at an exact IRKA fixed point.
pub fn hermite_residual(full: &LinearModel, res: &IrkaResult) -> Result<f64> {
    let red = full.project(&res.shifts, &res.b_dirs, &res.c_dirs)?;
    let rel = |a: &CMat, b: &CMat| {
        let d = frobenius((a - b).as_ref());
        d / frobenius(a.as_ref()).max(1e-14)
    };
    let mut worst = 0.0f64;
    for (i, &s) in res.shifts.iter().enumerate() {
        let (b, c) = (column(&res.b_dirs[i]), column(&res.c_dirs[i]));
        let (hf, hr) = (full.transfer(s)?, red.transfer(s)?);
        let (df, dr) = (full.transfer_derivative(s)?, red.transfer_derivative(s)?);
        worst = worst.max(rel(&(&hf * &b), &(&hr * &b)));
        worst = worst.max(rel(&(c.transpose() * &hf), &(c.transpose() * &hr)));
        worst = worst.max(rel(&(c.transpose() * &df * &b), &(c.transpose() * &dr * &b)));
    }
    Ok(worst)
}

/// `max_i min_j |σ_i + λ_j| / |σ_i|` over the poles `λ_j` of the model
/// projected at the shifts: how far the shifts are from mirror images.
pub fn fixed_point_residual(full: &LinearModel, res: &IrkaResult) -> Result<f64> {
    let red = full.project(&res.shifts, &res.b_dirs, &res.c_dirs)?;
    let (poles, _, _) = reduced_pole_residues(&red)?;
    Ok(res
        .shifts
        .iter()
        .map(|s| poles.iter().map(|l| (s + l).norm()).fold(f64::INFINITY, f64::min) / s.norm().max(f64::MIN_POSITIVE))
        .fold(0.0, f64::max))
}

/// Poles with their right and left residue directions.
type PoleResidues = (Vec<c64>, Vec<Vec<c64>>, Vec<Vec<c64>>);

/// Reduced poles `λ_i` with right and left residue directions, normalized.
fn reduced_pole_residues(red: &LinearModel) -> Result<PoleResidues> {
    let r = red.a.nrows();
    let elu = red.e.partial_piv_lu();
    let m = elu.solve(&red.a);
    let eig = m.eigen().map_err(|e| Error::Eigen(format!("{e:?}")))?;
    let x: CMat = eig.U().to_owned();
    let poles: Vec<c64> = (0..r).map(|i| eig.S()[i]).collect();
    if poles.iter().any(|p| !p.re.is_finite() || !p.im.is_finite()) {
        return Err(Error::Eigen("non-finite reduced pole".into()));
    }
    let bt = x.partial_piv_lu().solve(&elu.solve(&red.b));
    let ct = &red.c * &x;
    let normalize = |v: Vec<c64>| {
        let n = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if n > 0.0 {
            v.into_iter().map(|z| z / n).collect()
        } else {
            v
        }
    };
    let b_dirs = (0..r).map(|i| normalize((0..bt.ncols()).map(|j| bt[(i, j)]).collect())).collect();
    let c_dirs = (0..r).map(|i| normalize((0..ct.nrows()).map(|j| ct[(j, i)]).collect())).collect();
    Ok((poles, b_dirs, c_dirs))
}

/// Snaps near-conjugate partners together and zeroes negligible imaginary parts.
fn enforce_conjugate_pairs(shifts: &mut [c64]) {
    for s in shifts.iter_mut() {
        if s.im.abs() <= 1e-12 * s.norm() {
            s.im = 0.0;
        }
    }
    let n = shifts.len();
    for i in 0..n {
        if shifts[i].im > 0.0 {
            if let Some(j) = (0..n)
                .filter(|&j| shifts[j].im < 0.0)
                .min_by(|&a, &b| (shifts[a].conj() - shifts[i]).norm().total_cmp(&(shifts[b].conj() - shifts[i]).norm()))
            {
                shifts[j] = shifts[i].conj();
            }
        }
    }
}

fn warn_if_unstable(lin: &LinearModel) {
    if lin.a.nrows() > 400 {
        return;
    }
    let m = lin.e.partial_piv_lu().solve(&lin.a);
    if let Ok(ev) = m.eigenvalues() {
        if ev.iter().any(|z| z.re >= 0.0) {
            log::warn!("linearized pencil has eigenvalues with nonnegative real part");
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::system::AffineMatrix;

    fn diag_system(entries: &[f64]) -> ParametricBilinearSystem {
        let n = entries.len();
        let a = Mat::from_fn(n, n, |i, j| cplx(if i == j { entries[i] } else { 0.0 }));
        ParametricBilinearSystem::new(
            "diag",
            0,
            AffineMatrix::constant(Mat::identity(n, n)),
            AffineMatrix::constant(a),
            vec![AffineMatrix::zeros(n, n)],
            AffineMatrix::constant(Mat::from_fn(n, 1, |_, _| cplx(1.0))),
            AffineMatrix::constant(Mat::from_fn(1, n, |_, _| cplx(1.0))),
        )
        .unwrap()
    }

    #[test]
    fn scalar_system_mirrors_its_pole() {
        let res = irka_linear(&diag_system(&[-3.0]), &[], 1, &IrkaOptions::default()).unwrap();
        assert!(res.converged);
        assert!((res.shifts[0] - cplx(3.0)).norm() < 1e-10);
    }

    #[test]
    fn decoupled_pair_recovers_both_poles() {
        let res = irka_linear(&diag_system(&[-1.0, -2.0]), &[], 2, &IrkaOptions::default()).unwrap();
        assert!(res.converged);
        assert!((res.shifts[0] - cplx(1.0)).norm() < 1e-8, "{:?}", res.shifts);
        assert!((res.shifts[1] - cplx(2.0)).norm() < 1e-8, "{:?}", res.shifts);
    }

    #[test]
    fn fixed_point_satisfies_hermite_conditions() {
        let sys = diag_system(&[-1.0, -2.0, -5.0, -9.0, -20.0]);
        let res = irka_linear(&sys, &[], 2, &IrkaOptions::default()).unwrap();
        assert!(res.converged);
        let full = LinearModel::at(&sys, &[]).unwrap();
        assert!(hermite_residual(&full, &res).unwrap() < 1e-8);
        assert!(fixed_point_residual(&full, &res).unwrap() < 1e-5);
    }

    #[test]
    fn conjugate_partners_are_snapped() {
        let mut s = vec![c64::new(1.0, 2.0), c64::new(1.0 + 1e-15, -2.0), c64::new(3.0, 1e-20)];
        enforce_conjugate_pairs(&mut s);
        assert_eq!(s[1], s[0].conj());
        assert_eq!(s[2].im, 0.0);
    }
}

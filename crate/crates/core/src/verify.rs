//! Interpolation certificates: compares full and reduced transfer-function
//! data at the interpolation points recorded in a basis' provenance.
//!
//! Every condition is evaluated. A condition is *warranted* when the blocks
//! recorded in the basis provenance guarantee it; only warranted failures make
//! [`VerificationReport::all_warranted_pass`] false.

use serde::{Deserialize, Serialize};

use crate::basis::{BasisProvenance, BlockKind, BlockRecord, InterpolationSpec, OrderingMode};
use crate::c64;
use crate::error::{Error, Result};
use crate::kernels::CMat;
use crate::serde_util;
use crate::system::{ParametricBilinearSystem, ReducedBilinearSystem};
use crate::transfer::{
    eval_hk_left, eval_hk_right, freq_derivative, freq_derivative_fd, param_hessian, param_hessian_fd, param_jacobian, param_jacobian_fd,
};

/// Denominator floor for relative mismatches.
pub const REL_FLOOR: f64 = 1e-14;
/// Largest number of shift tuples enumerated per level for all-orderings specs.
pub const MAX_TUPLES_PER_LEVEL: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Condition {
    /// `H_k(σ)(I ⊗ b)` matched.
    ValueRight,
    /// `cᵀ H_k(σ)` matched.
    ValueLeft,
    /// `∂/∂s_i cᵀ H_k(σ)(I ⊗ b)` matched.
    FreqDerivative,
    /// Parameter gradient of the bitangential value matched.
    Jacobian,
    /// Parameter Hessian of the bitangential value matched.
    Hessian,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Tolerances {
    pub value: f64,
    pub freq_derivative: f64,
    pub jacobian: f64,
    pub hessian: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { value: 1e-8, freq_derivative: 1e-6, jacobian: 1e-5, hessian: 1e-4 }
    }
}

impl Tolerances {
    pub fn uniform(t: f64) -> Self {
        Self { value: t, freq_derivative: t, jacobian: t, hessian: t }
    }

    pub fn for_condition(&self, c: Condition) -> f64 {
        match c {
            Condition::ValueRight | Condition::ValueLeft => self.value,
            Condition::FreqDerivative => self.freq_derivative,
            Condition::Jacobian => self.jacobian,
            Condition::Hessian => self.hessian,
        }
    }

    /// Applies `name=value` pairs separated by commas, e.g. `hessian=1e-3,value=1e-9`.
    pub fn with_overrides(mut self, overrides: &str) -> Result<Self> {
        for pair in overrides.split(',').map(str::trim).filter(|s| !s.is_empty()) {
            let (name, value) =
                pair.split_once('=').ok_or_else(|| Error::Parse(format!("tolerance override `{pair}` is not name=value")))?;
            let v: f64 = value.trim().parse().map_err(|_| Error::Parse(format!("bad tolerance value in `{pair}`")))?;
            match name.trim() {
                "value" => self.value = v,
                "freq-derivative" | "freq_derivative" => self.freq_derivative = v,
                "jacobian" => self.jacobian = v,
                "hessian" => self.hessian = v,
                other => return Err(Error::Parse(format!("unknown tolerance `{other}`"))),
            }
        }
        Ok(self)
    }
}

/// One evaluated interpolation condition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationRecord {
    pub condition: Condition,
    pub spec_index: usize,
    pub k: usize,
    #[serde(with = "serde_util::complex_vec")]
    pub shifts: Vec<c64>,
    /// One-based frequency index for [`Condition::FreqDerivative`].
    pub derivative_index: Option<usize>,
    pub p_hat: Vec<f64>,
    #[serde(with = "serde_util::complex_vec")]
    pub full: Vec<c64>,
    #[serde(with = "serde_util::complex_vec")]
    pub reduced: Vec<c64>,
    pub abs_mismatch: f64,
    pub rel_mismatch: f64,
    pub tolerance: f64,
    pub pass: bool,
    pub warranted: bool,
    /// Relative gap between the analytic full-order derivative and central differences.
    pub fd_cross_check: Option<f64>,
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub system: String,
    pub full_order: usize,
    pub reduced_order: usize,
    pub tolerances: Tolerances,
    pub records: Vec<VerificationRecord>,
}

impl VerificationReport {
    pub fn all_warranted_pass(&self) -> bool {
        self.records.iter().all(|r| r.pass || !r.warranted)
    }

    pub fn warranted_failures(&self) -> impl Iterator<Item = &VerificationRecord> {
        self.records.iter().filter(|r| r.warranted && !r.pass)
    }

    /// Largest relative mismatch among records of `condition`, optionally only warranted ones.
    pub fn max_mismatch(&self, condition: Condition, warranted_only: bool) -> Option<f64> {
        self.records
            .iter()
            .filter(|r| r.condition == condition && (r.warranted || !warranted_only))
            .map(|r| r.rel_mismatch)
            .reduce(f64::max)
    }

    pub fn of(&self, condition: Condition) -> impl Iterator<Item = &VerificationRecord> {
        self.records.iter().filter(move |r| r.condition == condition)
    }
}

/// Relative mismatch `‖a − b‖ / max(‖a‖, floor)` in the Euclidean norm.
pub fn relative_mismatch(full: &[c64], reduced: &[c64]) -> (f64, f64) {
    let diff = full.iter().zip(reduced).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt();
    let norm = full.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    (diff, diff / norm.max(REL_FLOOR))
}

fn flatten(m: &CMat) -> Vec<c64> {
    (0..m.nrows()).flat_map(|i| (0..m.ncols()).map(move |j| m[(i, j)])).collect()
}

/// Which shift tuples the recorded blocks cover for one spec.
struct Coverage<'a> {
    prov: Option<&'a BasisProvenance>,
    spec_index: Option<usize>,
    nu: usize,
}

impl Coverage<'_> {
    fn has(records: &[BlockRecord], spec: usize, kind: BlockKind, derivative: Option<usize>, tuple: &[c64]) -> bool {
        records
            .iter()
            .any(|r| r.spec_index == spec && r.kind == kind && r.derivative == derivative && r.tuples.iter().any(|t| t.as_slice() == tuple))
    }

    fn usable(&self) -> Option<(&BasisProvenance, usize)> {
        let prov = self.prov?;
        if prov.truncation.rank_capped {
            return None;
        }
        Some((prov, self.spec_index?))
    }

    fn prefixes_in_v(&self, tuple: &[c64], derivative: Option<usize>) -> bool {
        self.usable().is_some_and(|(p, s)| (1..=tuple.len()).all(|j| Self::has(&p.in_v, s, BlockKind::Right, derivative, &tuple[..j])))
    }

    fn suffixes_in_w(&self, tuple: &[c64], derivative: Option<usize>) -> bool {
        self.usable().is_some_and(|(p, s)| (0..tuple.len()).all(|j| Self::has(&p.in_w, s, BlockKind::Left, derivative, &tuple[j..])))
    }

    fn two_sided(&self, tuple: &[c64]) -> bool {
        self.prefixes_in_v(tuple, None) && self.suffixes_in_w(tuple, None)
    }

    fn hessian(&self, tuple: &[c64], depth: usize) -> bool {
        depth == 2
            && tuple.len() <= 2
            && self.two_sided(tuple)
            && ((0..self.nu).all(|j| self.prefixes_in_v(tuple, Some(j))) || (0..self.nu).all(|j| self.suffixes_in_w(tuple, Some(j))))
    }
}

fn tuples_of(spec: &InterpolationSpec, level: usize) -> Vec<Vec<c64>> {
    let q = spec.depth();
    let prefix = spec.shifts[..level].to_vec();
    let suffix = spec.shifts[q - level..].to_vec();
    let mut out = vec![prefix];
    if suffix != out[0] {
        out.push(suffix);
    }
    if spec.ordering == OrderingMode::AllOrderings && q.pow(level as u32) <= MAX_TUPLES_PER_LEVEL {
        let mut all: Vec<Vec<c64>> = vec![Vec::new()];
        for _ in 0..level {
            all = all.into_iter().flat_map(|t| spec.shifts.iter().map(move |&s| [t.clone(), vec![s]].concat())).collect();
        }
        for t in all {
            if !out.contains(&t) {
                out.push(t);
            }
        }
    }
    out
}

struct Builder<'a> {
    tol: &'a Tolerances,
    spec_index: usize,
    p_hat: Vec<f64>,
    records: Vec<VerificationRecord>,
}

impl Builder<'_> {
    #[allow(clippy::too_many_arguments)]
    fn push(
        &mut self,
        condition: Condition,
        shifts: &[c64],
        derivative_index: Option<usize>,
        full: Vec<c64>,
        reduced: Vec<c64>,
        warranted: bool,
        fd_cross_check: Option<f64>,
        note: Option<String>,
    ) {
        let (abs, rel) = relative_mismatch(&full, &reduced);
        let tolerance = self.tol.for_condition(condition);
        self.records.push(VerificationRecord {
            condition,
            spec_index: self.spec_index,
            k: shifts.len(),
            shifts: shifts.to_vec(),
            derivative_index,
            p_hat: self.p_hat.clone(),
            full,
            reduced,
            abs_mismatch: abs,
            rel_mismatch: rel,
            tolerance,
            pass: rel <= tolerance && rel.is_finite(),
            warranted,
            fd_cross_check,
            note,
        });
    }
}

fn find_spec(prov: Option<&BasisProvenance>, spec: &InterpolationSpec) -> Option<usize> {
    prov?.specs.iter().position(|s| s == spec)
}

/// Evaluates every interpolation condition of `specs` on `sys` and `rsys`.
/// With `specs` empty, the specs recorded in the reduced model's provenance are used.
pub fn verify(
    sys: &ParametricBilinearSystem,
    rsys: &ReducedBilinearSystem,
    specs: &[InterpolationSpec],
    tol: &Tolerances,
) -> Result<VerificationReport> {
    let prov = rsys.provenance();
    let specs: Vec<InterpolationSpec> = if specs.is_empty() { prov.map(|p| p.specs.clone()).unwrap_or_default() } else { specs.to_vec() };
    let red: &ParametricBilinearSystem = rsys;
    let nu = sys.dims().nu;
    let mut records = Vec::new();
    for (idx, spec) in specs.iter().enumerate() {
        spec.validate(sys)?;
        let spec_index = find_spec(prov, spec);
        let cover = Coverage { prov, spec_index, nu };
        let missing = match (prov, spec_index) {
            (None, _) => Some("no basis provenance; evaluated but not guaranteed".to_string()),
            (Some(_), None) => Some("spec was not used to build this basis".to_string()),
            (Some(p), Some(_)) if p.truncation.rank_capped => Some("rank cap removed retained directions".to_string()),
            _ => None,
        };
        let p = spec.p_hat.as_slice();
        let mut b = Builder { tol, spec_index: idx, p_hat: p.to_vec(), records: Vec::new() };
        let q = spec.depth();
        for level in 1..=q {
            for t in tuples_of(spec, level) {
                let full = flatten(&eval_hk_right(sys, &t, p, &spec.b)?);
                let reduced = flatten(&eval_hk_right(red, &t, p, &spec.b)?);
                b.push(Condition::ValueRight, &t, None, full, reduced, cover.prefixes_in_v(&t, None), None, missing.clone());

                let full = flatten(&eval_hk_left(sys, &t, p, &spec.c)?);
                let reduced = flatten(&eval_hk_left(red, &t, p, &spec.c)?);
                b.push(Condition::ValueLeft, &t, None, full, reduced, cover.suffixes_in_w(&t, None), None, missing.clone());

                let two_sided = cover.two_sided(&t);
                for i in 1..=level {
                    let full = freq_derivative(sys, &t, p, &spec.b, &spec.c, i)?;
                    let fd = freq_derivative_fd(sys, &t, p, &spec.b, &spec.c, i)?;
                    let reduced = freq_derivative(red, &t, p, &spec.b, &spec.c, i)?;
                    let fd_gap = relative_mismatch(&full, &fd).1;
                    b.push(Condition::FreqDerivative, &t, Some(i), full, reduced, two_sided, Some(fd_gap), missing.clone());
                }

                let full = param_jacobian(sys, &t, p, &spec.b, &spec.c)?;
                let fd = param_jacobian_fd(sys, &t, p, &spec.b, &spec.c)?;
                let reduced = param_jacobian(red, &t, p, &spec.b, &spec.c)?;
                let fd_gap = relative_mismatch(&flatten(&full), &flatten(&fd)).1;
                b.push(Condition::Jacobian, &t, None, flatten(&full), flatten(&reduced), two_sided, Some(fd_gap), missing.clone());

                if level <= 2 {
                    let full: Vec<c64> = param_hessian(sys, &t, p, &spec.b, &spec.c)?.iter().flat_map(flatten).collect();
                    let fd: Vec<c64> = param_hessian_fd(sys, &t, p, &spec.b, &spec.c)?.iter().flat_map(flatten).collect();
                    let reduced: Vec<c64> = param_hessian(red, &t, p, &spec.b, &spec.c)?.iter().flat_map(flatten).collect();
                    let fd_gap = relative_mismatch(&full, &fd).1;
                    let warranted = cover.hessian(&t, q);
                    let note = missing.clone().or_else(|| {
                        (!warranted && two_sided).then(|| {
                            if q != 2 {
                                format!("Hessian matching is only guaranteed for two shifts, spec has {q}")
                            } else {
                                "no parameter-derivative enrichment in the basis".to_string()
                            }
                        })
                    });
                    b.push(Condition::Hessian, &t, None, full, reduced, warranted, Some(fd_gap), note);
                }
            }
        }
        records.extend(b.records);
    }
    Ok(VerificationReport {
        system: sys.name().to_string(),
        full_order: sys.dims().n,
        reduced_order: rsys.order(),
        tolerances: *tol,
        records,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::{build_global_basis, AssemblyOptions, HessianEnrichment, ReductionBasis, Sidedness};
    use crate::kernels::cplx;
    use crate::projection::reduce;
    use crate::system::coefficient::monomial;
    use crate::system::AffineMatrix;
    use faer::Mat;

    fn small_system() -> ParametricBilinearSystem {
        let n = 14;
        let a0 = Mat::from_fn(n, n, |i, j| {
            if i == j {
                cplx(-2.0 - i as f64)
            } else if i.abs_diff(j) == 1 {
                cplx(0.5)
            } else {
                cplx(0.0)
            }
        });
        let a1 = Mat::from_fn(n, n, |i, j| cplx(if i == j { -0.3 } else { 0.0 }));
        let nmat = Mat::from_fn(n, n, |i, j| cplx(0.1 * ((i + 2 * j) % 3) as f64 - 0.1));
        let b = Mat::from_fn(n, 1, |i, _| cplx(1.0 / (1.0 + i as f64)));
        let c = Mat::from_fn(1, n, |_, j| cplx(if j % 2 == 0 { 1.0 } else { 0.5 }));
        ParametricBilinearSystem::new(
            "small",
            1,
            AffineMatrix::constant(Mat::identity(n, n)),
            AffineMatrix::constant(a0).with_term(monomial(1.0, 0, 2, "p1^2"), a1).unwrap(),
            vec![AffineMatrix::constant(nmat)],
            AffineMatrix::constant(b),
            AffineMatrix::constant(c),
        )
        .unwrap()
    }

    #[test]
    fn identity_projection_passes_everything() {
        let sys = small_system();
        let basis = ReductionBasis::from_matrices(Mat::identity(14, 14), Mat::identity(14, 14)).unwrap();
        let rsys = reduce(&sys, &basis).unwrap();
        let spec = InterpolationSpec::siso(vec![cplx(1.0), cplx(2.0)], 0.7);
        let report = verify(&sys, &rsys, &[spec], &Tolerances::uniform(1e-12)).unwrap();
        assert!(report.records.iter().all(|r| r.pass && !r.warranted));
    }

    #[test]
    fn v_only_warrants_right_values_only() {
        let sys = small_system();
        let spec = InterpolationSpec::siso(vec![cplx(0.5), cplx(1.5)], 0.7);
        let opts = AssemblyOptions { sidedness: Sidedness::VOnly, ..Default::default() };
        let basis = build_global_basis(&sys, std::slice::from_ref(&spec), &opts).unwrap();
        let rsys = reduce(&sys, &basis).unwrap();
        let report = verify(&sys, &rsys, &[], &Tolerances::default()).unwrap();
        assert!(report.all_warranted_pass());
        assert!(report.of(Condition::ValueRight).any(|r| r.warranted));
        assert!(report.of(Condition::Jacobian).all(|r| !r.warranted));
    }

    #[test]
    fn hessian_warranted_only_with_enrichment() {
        let sys = small_system();
        let spec = InterpolationSpec::siso(vec![cplx(0.5), cplx(1.5)], 0.7).with_ordering(OrderingMode::AllOrderings);
        let plain = reduce(&sys, &build_global_basis(&sys, std::slice::from_ref(&spec), &Default::default()).unwrap()).unwrap();
        let report = verify(&sys, &plain, &[], &Tolerances::default()).unwrap();
        assert!(report.of(Condition::Hessian).all(|r| !r.warranted));
        assert!(report.of(Condition::Jacobian).any(|r| r.warranted));

        let enriched_spec = spec.with_hessian(HessianEnrichment::OnV);
        let enriched = reduce(&sys, &build_global_basis(&sys, std::slice::from_ref(&enriched_spec), &Default::default()).unwrap()).unwrap();
        let report = verify(&sys, &enriched, &[], &Tolerances::default()).unwrap();
        assert!(report.of(Condition::Hessian).any(|r| r.warranted));
    }

    #[test]
    fn overrides_parse() {
        let t = Tolerances::default().with_overrides("hessian=1e-3, value=1e-9").unwrap();
        assert_eq!(t.hessian, 1e-3);
        assert_eq!(t.value, 1e-9);
        assert!(Tolerances::default().with_overrides("speed=1").is_err());
    }

    #[test]
    fn mismatch_floor() {
        let z = [cplx(0.0)];
        assert_eq!(relative_mismatch(&z, &z).1, 0.0);
        assert!((relative_mismatch(&z, &[cplx(1e-15)]).1 - 0.1).abs() < 1e-12);
    }
}

//! Interpolatory projection bases.
//!
//! Right blocks are resolvent chains started from `B b`, left blocks are
//! transposed chains started from `Cᵀ c`. Blocks from several interpolation
//! specs are merged into one global pair `(V, W)` by [`assemble_global`].

use std::fs;
use std::path::{Path, PathBuf};

use faer::Mat;
use serde::{Deserialize, Serialize};

use crate::c64;
use crate::error::{Error, Result};
use crate::kernels::{column, hcat, orthonormal_span, CMat};
use crate::mtx::{read_mtx, write_mtx_array};
use crate::serde_util;
use crate::system::{ParamPoint, ParametricBilinearSystem};
use crate::transfer::FrozenSystem;

/// Default relative singular-value cutoff for basis truncation.
pub const DEFAULT_TRUNC_TOL: f64 = 1e-8;
/// Default cap on the column count of one basis block.
pub const DEFAULT_WIDTH_CAP: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum OrderingMode {
    /// Shifts used once each, in order.
    #[default]
    Sequential,
    /// Every shift at every level, so any shift tuple is interpolated.
    AllOrderings,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum HessianEnrichment {
    #[default]
    None,
    OnV,
    OnW,
}

/// Interpolation data at one parameter sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterpolationSpec {
    #[serde(with = "serde_util::complex_vec")]
    pub shifts: Vec<c64>,
    #[serde(with = "serde_util::complex_vec")]
    pub b: Vec<c64>,
    #[serde(with = "serde_util::complex_vec")]
    pub c: Vec<c64>,
    pub p_hat: ParamPoint,
    #[serde(default)]
    pub ordering: OrderingMode,
    #[serde(default)]
    pub hessian_enrichment: HessianEnrichment,
}

impl InterpolationSpec {
    /// Single-input single-output spec with unit directions.
    pub fn siso(shifts: Vec<c64>, p_hat: impl Into<ParamPoint>) -> Self {
        Self {
            shifts,
            b: vec![c64::new(1.0, 0.0)],
            c: vec![c64::new(1.0, 0.0)],
            p_hat: p_hat.into(),
            ordering: OrderingMode::Sequential,
            hessian_enrichment: HessianEnrichment::None,
        }
    }

    pub fn with_ordering(mut self, ordering: OrderingMode) -> Self {
        self.ordering = ordering;
        self
    }

    pub fn with_hessian(mut self, h: HessianEnrichment) -> Self {
        self.hessian_enrichment = h;
        self
    }

    /// Number of interpolated subsystems.
    pub fn depth(&self) -> usize {
        self.shifts.len()
    }

    pub fn validate(&self, sys: &ParametricBilinearSystem) -> Result<()> {
        let d = sys.dims();
        if self.shifts.is_empty() {
            return Err(Error::InvalidSpec("no shifts given".into()));
        }
        if self.b.len() != d.m || self.b.iter().all(|v| v.norm() == 0.0) {
            return Err(Error::InvalidSpec(format!("b must be a nonzero {}-vector", d.m)));
        }
        if self.c.len() != d.l || self.c.iter().all(|v| v.norm() == 0.0) {
            return Err(Error::InvalidSpec(format!("c must be a nonzero {}-vector", d.l)));
        }
        if self.p_hat.len() != d.nu {
            return Err(Error::InvalidSpec(format!("p_hat has {} entries, system has {} parameters", self.p_hat.len(), d.nu)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BlockKind {
    /// Built from `B b` with ordinary solves.
    Right,
    /// Built from `Cᵀ c` with transposed solves.
    Left,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BlockRule {
    /// `V_k` uses `σ_k`; `W_k` uses `σ_{q+1−k}` (reversed order).
    Sequential,
    /// Every shift at every level.
    AllOrderings,
}

/// Where a block of columns came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockRecord {
    pub kind: BlockKind,
    pub rule: BlockRule,
    pub spec_index: usize,
    /// Subsystem level `k` (one-based).
    pub level: usize,
    /// Shift tuples covered, in transfer-function argument order.
    #[serde(with = "serde_util::complex_vec_vec")]
    pub tuples: Vec<Vec<c64>>,
    /// Parameter index when the block is a parameter derivative.
    pub derivative: Option<usize>,
    pub columns: usize,
    /// Set when the block was built outside the range its guarantee covers.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub flag: Option<String>,
}

#[derive(Debug, Clone)]
pub struct BasisBlock {
    pub record: BlockRecord,
    pub matrix: CMat,
}

fn validate_and_freeze(sys: &ParametricBilinearSystem, spec: &InterpolationSpec) -> Result<FrozenSystem> {
    spec.validate(sys)?;
    FrozenSystem::new(sys, spec.p_hat.as_slice())
}

fn block(kind: BlockKind, rule: BlockRule, level: usize, tuples: Vec<Vec<c64>>, matrix: CMat) -> BasisBlock {
    BasisBlock {
        record: BlockRecord { kind, rule, spec_index: 0, level, tuples, derivative: None, columns: matrix.ncols(), flag: None },
        matrix,
    }
}

/// `V_1 = 𝒜(σ_1)^{-1} B b`, `V_k = 𝒜(σ_k)^{-1} N (I_m ⊗ V_{k−1})`.
pub fn build_v_sequential(sys: &ParametricBilinearSystem, spec: &InterpolationSpec) -> Result<Vec<BasisBlock>> {
    let frozen = validate_and_freeze(sys, spec)?;
    let chain = frozen.right_chain(&spec.shifts, Some(&spec.b))?;
    Ok(chain
        .into_iter()
        .enumerate()
        .map(|(k, m)| block(BlockKind::Right, BlockRule::Sequential, k + 1, vec![spec.shifts[..=k].to_vec()], m))
        .collect())
}

/// `W_1 = 𝒜(σ_q)^{-T} Cᵀ c`, `W_k = 𝒜(σ_{q+1−k})^{-T} [N_1ᵀ W_{k−1}, …, N_mᵀ W_{k−1}]`.
pub fn build_w_sequential(sys: &ParametricBilinearSystem, spec: &InterpolationSpec) -> Result<Vec<BasisBlock>> {
    let frozen = validate_and_freeze(sys, spec)?;
    let mats = frozen.mats();
    let q = spec.depth();
    let mut out: Vec<BasisBlock> = Vec::with_capacity(q);
    for k in 1..=q {
        let s = spec.shifts[q - k];
        let rhs = match out.last() {
            None => mats.c.transpose() * column(&spec.c),
            Some(prev) => mats.n.apply_transpose_kron(&prev.matrix),
        };
        let m = frozen.solve_transpose(s, &rhs)?;
        out.push(block(BlockKind::Left, BlockRule::Sequential, k, vec![spec.shifts[q - k..].to_vec()], m));
    }
    Ok(out)
}

/// Right and left blocks over every shift at every level.
pub fn build_all_orderings(sys: &ParametricBilinearSystem, spec: &InterpolationSpec) -> Result<Vec<BasisBlock>> {
    build_all_orderings_capped(sys, spec, DEFAULT_WIDTH_CAP)
}

pub fn build_all_orderings_capped(sys: &ParametricBilinearSystem, spec: &InterpolationSpec, width_cap: usize) -> Result<Vec<BasisBlock>> {
    let frozen = validate_and_freeze(sys, spec)?;
    let (right, _) = all_orderings_side(&frozen, spec, BlockKind::Right, width_cap, None)?;
    let (left, _) = all_orderings_side(&frozen, spec, BlockKind::Left, width_cap, None)?;
    Ok(right.into_iter().chain(left).collect())
}

fn all_tuples(shifts: &[c64], level: usize) -> Vec<Vec<c64>> {
    let mut tuples: Vec<Vec<c64>> = vec![Vec::new()];
    for _ in 0..level {
        tuples = tuples.into_iter().flat_map(|t| shifts.iter().map(move |&s| [t.clone(), vec![s]].concat())).collect();
    }
    tuples
}

/// Builds one side of the all-orderings blocks and, when `deriv` is given,
/// their derivative with respect to that parameter.
fn all_orderings_side(
    frozen: &FrozenSystem,
    spec: &InterpolationSpec,
    kind: BlockKind,
    width_cap: usize,
    deriv: Option<(&crate::system::EvaluatedSystem, usize)>,
) -> Result<(Vec<BasisBlock>, Vec<BasisBlock>)> {
    let mats = frozen.mats();
    let (q, m) = (spec.depth(), mats.b.ncols());
    let mut blocks: Vec<BasisBlock> = Vec::with_capacity(q);
    let mut dblocks: Vec<BasisBlock> = Vec::new();
    for k in 1..=q {
        let width = q * (q * m).pow(k as u32 - 1);
        if width > width_cap {
            return Err(Error::InstanceTooLarge { what: "all-orderings block width", size: width, cap: width_cap });
        }
        let (mut parts, mut dparts) = (Vec::with_capacity(q), Vec::with_capacity(q));
        for &s in &spec.shifts {
            let (rhs, drhs) = match (kind, blocks.last()) {
                (BlockKind::Right, None) => (&mats.b * column(&spec.b), deriv.map(|(d, _)| &d.b * column(&spec.b))),
                (BlockKind::Left, None) => (mats.c.transpose() * column(&spec.c), deriv.map(|(d, _)| d.c.transpose() * column(&spec.c))),
                (BlockKind::Right, Some(prev)) => (
                    mats.n.apply_kron(&prev.matrix),
                    deriv.map(|(d, _)| d.n.apply_kron(&prev.matrix) + mats.n.apply_kron(&dblocks.last().expect("paired").matrix)),
                ),
                (BlockKind::Left, Some(prev)) => (
                    mats.n.apply_transpose_kron(&prev.matrix),
                    deriv.map(|(d, _)| {
                        d.n.apply_transpose_kron(&prev.matrix) + mats.n.apply_transpose_kron(&dblocks.last().expect("paired").matrix)
                    }),
                ),
            };
            let x = match kind {
                BlockKind::Right => frozen.solve(s, &rhs)?,
                BlockKind::Left => frozen.solve_transpose(s, &rhs)?,
            };
            if let (Some((d, _)), Some(drhs)) = (deriv, drhs) {
                // ∂(𝒜^{-1}X) = 𝒜^{-1}(∂X − ∂𝒜 𝒜^{-1}X), transposed on the left side
                let dpencil = Mat::from_fn(d.a.nrows(), d.a.ncols(), |i, j| s * d.e[(i, j)] - d.a[(i, j)]);
                let dx = match kind {
                    BlockKind::Right => frozen.solve(s, &(drhs - &dpencil * &x))?,
                    BlockKind::Left => frozen.solve_transpose(s, &(drhs - dpencil.transpose() * &x))?,
                };
                dparts.push(dx);
            }
            parts.push(x);
        }
        let tuples = match kind {
            BlockKind::Right => all_tuples(&spec.shifts, k),
            BlockKind::Left => all_tuples(&spec.shifts, k),
        };
        let matrix = hcat(&parts.iter().collect::<Vec<_>>());
        blocks.push(block(kind, BlockRule::AllOrderings, k, tuples.clone(), matrix));
        if let Some((_, j)) = deriv {
            let mut b = block(kind, BlockRule::AllOrderings, k, tuples, hcat(&dparts.iter().collect::<Vec<_>>()));
            b.record.derivative = Some(j);
            dblocks.push(b);
        }
    }
    Ok((blocks, dblocks))
}

/// Parameter derivatives of the all-orderings blocks on the side selected by
/// `spec.hessian_enrichment`. The guarantee these columns serve is proved for
/// two shifts; other depths are built but flagged.
pub fn build_hessian_enrichment(sys: &ParametricBilinearSystem, spec: &InterpolationSpec) -> Result<Vec<BasisBlock>> {
    let kind = match spec.hessian_enrichment {
        HessianEnrichment::None => return Ok(Vec::new()),
        HessianEnrichment::OnV => BlockKind::Right,
        HessianEnrichment::OnW => BlockKind::Left,
    };
    let frozen = validate_and_freeze(sys, spec)?;
    let flag = (spec.depth() != 2).then(|| {
        log::warn!("Hessian enrichment requested for {} shifts; the matching guarantee covers two", spec.depth());
        format!("enrichment with q = {} is outside the proven two-shift case", spec.depth())
    });
    let mut out = Vec::new();
    for j in 0..sys.dims().nu {
        let d = sys.derivative(spec.p_hat.as_slice(), j)?;
        let (_, dblocks) = all_orderings_side(&frozen, spec, kind, DEFAULT_WIDTH_CAP, Some((&d, j)))?;
        out.extend(dblocks.into_iter().map(|mut b| {
            b.record.flag = flag.clone();
            b
        }));
    }
    Ok(out)
}

/// All blocks a spec asks for, tagged with `spec_index`.
pub fn build_spec_blocks(sys: &ParametricBilinearSystem, spec: &InterpolationSpec, spec_index: usize) -> Result<Vec<BasisBlock>> {
    let mut blocks = match spec.ordering {
        OrderingMode::Sequential => {
            let mut v = build_v_sequential(sys, spec)?;
            v.extend(build_w_sequential(sys, spec)?);
            v
        }
        OrderingMode::AllOrderings => build_all_orderings(sys, spec)?,
    };
    blocks.extend(build_hessian_enrichment(sys, spec)?);
    for b in &mut blocks {
        b.record.spec_index = spec_index;
    }
    Ok(blocks)
}

/// Which blocks feed which side of the projection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Sidedness {
    /// `V` from right blocks, `W` from left blocks.
    #[default]
    TwoSided,
    /// `V` from right blocks, `W := V`.
    VOnly,
    /// `W` from left blocks, `V := W`.
    WOnly,
    /// `V` spans every block, `W := V`.
    Symmetric,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AssemblyOptions {
    pub realify: bool,
    pub trunc_tol: f64,
    pub sidedness: Sidedness,
    /// Hard cap on the basis dimension (applied after `trunc_tol`).
    pub max_rank: Option<usize>,
}

impl Default for AssemblyOptions {
    fn default() -> Self {
        Self { realify: true, trunc_tol: DEFAULT_TRUNC_TOL, sidedness: Sidedness::TwoSided, max_rank: None }
    }
}

/// Singular values seen during truncation and what was done to them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct TruncationReport {
    pub v_singular_values: Vec<f64>,
    pub w_singular_values: Vec<f64>,
    pub v_rank: usize,
    pub w_rank: usize,
    /// Directions added to the smaller side so that both have equal rank.
    pub padded: usize,
    /// True when some direction above `trunc_tol` was cut by `max_rank`.
    pub rank_capped: bool,
}

/// Record of how a basis was built; used to decide which interpolation
/// conditions a reduced model is guaranteed to satisfy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct BasisProvenance {
    pub specs: Vec<InterpolationSpec>,
    /// Blocks whose span is contained in `V`.
    pub in_v: Vec<BlockRecord>,
    /// Blocks whose span is contained in `W`.
    pub in_w: Vec<BlockRecord>,
    pub options: Option<AssemblyOptions>,
    pub truncation: TruncationReport,
}

#[derive(Debug, Clone)]
pub struct ReductionBasis {
    pub v: CMat,
    pub w: CMat,
    pub provenance: BasisProvenance,
}

impl ReductionBasis {
    pub fn rank(&self) -> usize {
        self.v.ncols()
    }

    /// A basis without provenance, e.g. `V = W = I`.
    pub fn from_matrices(v: CMat, w: CMat) -> Result<Self> {
        if v.nrows() != w.nrows() || v.ncols() != w.ncols() {
            return Err(Error::Dimension(format!("V is {}x{}, W is {}x{}", v.nrows(), v.ncols(), w.nrows(), w.ncols())));
        }
        Ok(Self { v, w, provenance: BasisProvenance::default() })
    }

    /// Writes `<stem>_V.mtx`, `<stem>_W.mtx` and the `<stem>.json` sidecar.
    pub fn save(&self, dir: &Path, stem: &str) -> Result<PathBuf> {
        fs::create_dir_all(dir)?;
        write_mtx_array(&dir.join(format!("{stem}_V.mtx")), &self.v)?;
        write_mtx_array(&dir.join(format!("{stem}_W.mtx")), &self.w)?;
        let sidecar = BasisSidecar { v: format!("{stem}_V.mtx"), w: format!("{stem}_W.mtx"), provenance: self.provenance.clone() };
        let path = dir.join(format!("{stem}.json"));
        fs::write(&path, serde_json::to_string_pretty(&sidecar)?)?;
        Ok(path)
    }

    pub fn load(sidecar: &Path) -> Result<Self> {
        let meta: BasisSidecar = serde_json::from_str(&fs::read_to_string(sidecar)?)?;
        let dir = sidecar.parent().unwrap_or(Path::new("."));
        let mut basis = Self::from_matrices(read_mtx(&dir.join(&meta.v))?, read_mtx(&dir.join(&meta.w))?)?;
        basis.provenance = meta.provenance;
        Ok(basis)
    }
}

#[derive(Serialize, Deserialize)]
struct BasisSidecar {
    v: String,
    w: String,
    provenance: BasisProvenance,
}

/// Splits complex columns into real and imaginary parts. Imaginary parts
/// below `1e-12` of the column norm are dropped.
pub fn realify(x: &CMat) -> CMat {
    let n = x.nrows();
    let mut cols: Vec<Vec<f64>> = Vec::with_capacity(2 * x.ncols());
    for j in 0..x.ncols() {
        let col = x.as_ref().col(j);
        let norm = col.norm_l2();
        let re: Vec<f64> = (0..n).map(|i| col[i].re).collect();
        let im: Vec<f64> = (0..n).map(|i| col[i].im).collect();
        let im_norm = im.iter().map(|v| v * v).sum::<f64>().sqrt();
        cols.push(re);
        if im_norm > 1e-12 * norm {
            cols.push(im);
        }
    }
    Mat::from_fn(n, cols.len(), |i, j| c64::new(cols[j][i], 0.0))
}

fn span_of(blocks: &[&BasisBlock], opts: &AssemblyOptions) -> Result<(CMat, Vec<f64>, bool)> {
    if blocks.is_empty() {
        return Err(Error::AllColumnsDegenerate);
    }
    let raw = hcat(&blocks.iter().map(|b| &b.matrix).collect::<Vec<_>>());
    let raw = if opts.realify { realify(&raw) } else { raw };
    let (q, s) = orthonormal_span(&raw, opts.trunc_tol, None)?;
    match opts.max_rank {
        Some(cap) if cap < q.ncols() => Ok((q.subcols(0, cap).to_owned(), s, true)),
        _ => Ok((q, s, false)),
    }
}

/// Extends orthonormal `small` by `extra` directions of `large` orthogonal to it.
fn pad(small: &CMat, large: &CMat, extra: usize) -> Result<CMat> {
    let proj = small * (small.adjoint() * large);
    let residual = large - &proj;
    let (dirs, _) = orthonormal_span(&residual, 0.0, Some(extra))?;
    // one more Gram-Schmidt pass against `small` for orthogonality to roundoff
    let dirs = &dirs - small * (small.adjoint() * &dirs);
    let (dirs, _) = orthonormal_span(&dirs, 0.0, Some(extra))?;
    if dirs.ncols() < extra {
        return Err(Error::DegenerateBasis { expected: small.ncols() + extra, found: small.ncols() + dirs.ncols() });
    }
    Ok(hcat(&[small, &dirs]))
}

/// Concatenates, optionally realifies, truncates and orthonormalizes.
///
/// When the two sides end with different ranks the smaller one is padded
/// with directions of the larger one rather than cutting the larger one,
/// so every block stays inside the span it was assigned to.
pub fn assemble_global(blocks: &[BasisBlock], specs: &[InterpolationSpec], opts: &AssemblyOptions) -> Result<ReductionBasis> {
    if let Some(first) = blocks.first() {
        let n = first.matrix.nrows();
        if blocks.iter().any(|b| b.matrix.nrows() != n) {
            return Err(Error::Dimension("basis blocks differ in row count".into()));
        }
    }
    let right: Vec<&BasisBlock> = blocks.iter().filter(|b| b.record.kind == BlockKind::Right).collect();
    let left: Vec<&BasisBlock> = blocks.iter().filter(|b| b.record.kind == BlockKind::Left).collect();
    let all: Vec<&BasisBlock> = blocks.iter().collect();
    let records = |bs: &[&BasisBlock]| bs.iter().map(|b| b.record.clone()).collect::<Vec<_>>();
    let mut report = TruncationReport::default();
    let (v, w, in_v, in_w) = match opts.sidedness {
        Sidedness::TwoSided => {
            let (v, sv, cv) = span_of(&right, opts)?;
            let (w, sw, cw) = span_of(&left, opts)?;
            report.v_singular_values = sv;
            report.w_singular_values = sw;
            report.v_rank = v.ncols();
            report.w_rank = w.ncols();
            report.rank_capped = cv || cw;
            let (v, w) = if v.ncols() < w.ncols() {
                report.padded = w.ncols() - v.ncols();
                (pad(&v, &w, w.ncols() - v.ncols())?, w)
            } else if w.ncols() < v.ncols() {
                report.padded = v.ncols() - w.ncols();
                let w = pad(&w, &v, v.ncols() - w.ncols())?;
                (v, w)
            } else {
                (v, w)
            };
            (v, w, records(&right), records(&left))
        }
        Sidedness::VOnly | Sidedness::WOnly | Sidedness::Symmetric => {
            let source = match opts.sidedness {
                Sidedness::VOnly => &right,
                Sidedness::WOnly => &left,
                _ => &all,
            };
            let (q, s, capped) = span_of(source, opts)?;
            report.v_rank = q.ncols();
            report.w_rank = q.ncols();
            report.v_singular_values = s.clone();
            report.w_singular_values = s;
            report.rank_capped = capped;
            let rec = records(source);
            (q.clone(), q, rec.clone(), rec)
        }
    };
    Ok(ReductionBasis { v, w, provenance: BasisProvenance { specs: specs.to_vec(), in_v, in_w, options: Some(*opts), truncation: report } })
}

/// Builds and assembles the blocks of every spec.
pub fn build_global_basis(sys: &ParametricBilinearSystem, specs: &[InterpolationSpec], opts: &AssemblyOptions) -> Result<ReductionBasis> {
    let mut blocks = Vec::new();
    for (i, spec) in specs.iter().enumerate() {
        blocks.extend(build_spec_blocks(sys, spec, i)?);
    }
    assemble_global(&blocks, specs, opts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::{cplx, frobenius};
    use crate::system::AffineMatrix;

    fn scalar(v: f64) -> AffineMatrix {
        AffineMatrix::constant(Mat::from_fn(1, 1, |_, _| cplx(v)))
    }

    fn scalar_system(n: f64) -> ParametricBilinearSystem {
        ParametricBilinearSystem::new("scalar", 1, scalar(1.0), scalar(-1.0), vec![scalar(n)], scalar(1.0), scalar(1.0)).unwrap()
    }

    #[test]
    fn scalar_sequential_blocks() {
        let spec = InterpolationSpec::siso(vec![cplx(1.0), cplx(1.0)], 0.0);
        let v = build_v_sequential(&scalar_system(1.0), &spec).unwrap();
        assert!((v[0].matrix[(0, 0)] - cplx(0.5)).norm() < 1e-15);
        assert!((v[1].matrix[(0, 0)] - cplx(0.25)).norm() < 1e-15);
        let w = build_w_sequential(&scalar_system(1.0), &spec).unwrap();
        assert!((w[0].matrix[(0, 0)] - cplx(0.5)).norm() < 1e-15);
        assert!((w[1].matrix[(0, 0)] - cplx(0.25)).norm() < 1e-15);
    }

    #[test]
    fn all_orderings_widths() {
        let spec = InterpolationSpec::siso(vec![cplx(1.0), cplx(2.0)], 0.0);
        let blocks = build_all_orderings(&scalar_system(1.0), &spec).unwrap();
        let right: Vec<_> = blocks.iter().filter(|b| b.record.kind == BlockKind::Right).collect();
        assert_eq!(right[0].matrix.ncols(), 2);
        assert_eq!(right[1].matrix.ncols(), 4);
        assert_eq!(right[1].record.tuples.len(), 4);
    }

    #[test]
    fn all_orderings_width_cap() {
        let spec = InterpolationSpec::siso(vec![cplx(1.0), cplx(2.0), cplx(3.0)], 0.0);
        let err = build_all_orderings_capped(&scalar_system(1.0), &spec, 5).unwrap_err();
        assert!(matches!(err, Error::InstanceTooLarge { .. }));
    }

    #[test]
    fn single_real_column_is_normalized() {
        let m = Mat::from_fn(3, 1, |i, _| cplx(i as f64 + 1.0));
        let b = block(BlockKind::Right, BlockRule::Sequential, 1, vec![], m.clone());
        let opts = AssemblyOptions { sidedness: Sidedness::VOnly, ..Default::default() };
        let basis = assemble_global(&[b], &[], &opts).unwrap();
        let expected = &m * faer::Scale(cplx(1.0 / 14f64.sqrt()));
        let diff = frobenius((&basis.v - &expected).as_ref()).min(frobenius((&basis.v + &expected).as_ref()));
        assert!(diff < 1e-14);
    }

    #[test]
    fn duplicated_block_has_rank_one() {
        let m = Mat::from_fn(4, 1, |i, _| cplx(i as f64 - 1.5));
        let b = block(BlockKind::Right, BlockRule::Sequential, 1, vec![], hcat(&[&m, &m]));
        let opts = AssemblyOptions { sidedness: Sidedness::VOnly, ..Default::default() };
        assert_eq!(assemble_global(&[b], &[], &opts).unwrap().rank(), 1);
    }

    #[test]
    fn zero_blocks_are_degenerate() {
        let b = block(BlockKind::Right, BlockRule::Sequential, 1, vec![], Mat::zeros(3, 2));
        let opts = AssemblyOptions { sidedness: Sidedness::VOnly, ..Default::default() };
        assert!(matches!(assemble_global(&[b], &[], &opts), Err(Error::AllColumnsDegenerate)));
    }

    #[test]
    fn realify_splits_complex_columns() {
        let m = Mat::from_fn(2, 1, |i, _| c64::new(1.0, i as f64));
        assert_eq!(realify(&m).ncols(), 2);
        let r = Mat::from_fn(2, 1, |i, _| c64::new(1.0 + i as f64, 0.0));
        assert_eq!(realify(&r).ncols(), 1);
    }
}

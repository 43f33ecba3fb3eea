//! Dense complex kernels shared by every transfer-function and basis formula.
//!
//! Matrices are [`faer::Mat`] over `c64`. Real data is promoted on entry and
//! demoted with [`demote_real`] when the imaginary parts are negligible.

use faer::linalg::solvers::{PartialPivLu, SolveCore};
use faer::{c64, Conj, Mat, MatRef};

use crate::error::{Error, Result};

/// Complex dense matrix used throughout the crate.
pub type CMat = Mat<c64>;

/// Default cap on the dimension of a dense factorization.
pub const DEFAULT_DENSE_CAP: usize = 5000;

/// Default cap on the row count of a materialized `I_{m^k} ⊗ M`.
pub const DEFAULT_KRON_CAP: usize = 1 << 22;

/// Pencils whose reciprocal condition estimate falls below this are singular.
pub const RCOND_THRESHOLD: f64 = 1e-14;

/// Relative size below which imaginary parts are dropped on demotion.
pub const DEMOTE_TOL: f64 = 1e-12;

pub fn cplx(re: f64) -> c64 {
    c64::new(re, 0.0)
}

pub fn to_complex(m: MatRef<'_, f64>) -> CMat {
    Mat::from_fn(m.nrows(), m.ncols(), |i, j| cplx(m[(i, j)]))
}

pub fn column(values: &[c64]) -> CMat {
    Mat::from_fn(values.len(), 1, |i, _| values[i])
}

pub fn max_abs(m: MatRef<'_, c64>) -> f64 {
    let mut best = 0.0f64;
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            best = best.max(m[(i, j)].norm());
        }
    }
    best
}

pub fn frobenius(m: MatRef<'_, c64>) -> f64 {
    let mut acc = 0.0;
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            acc += m[(i, j)].norm_sqr();
        }
    }
    acc.sqrt()
}

pub fn all_finite(m: MatRef<'_, c64>) -> bool {
    (0..m.ncols()).all(|j| (0..m.nrows()).all(|i| m[(i, j)].re.is_finite() && m[(i, j)].im.is_finite()))
}

/// Returns the real part of `m` when every imaginary part is below
/// `DEMOTE_TOL` relative to the largest entry.
pub fn demote_real(m: MatRef<'_, c64>) -> Option<Mat<f64>> {
    let scale = max_abs(m).max(f64::MIN_POSITIVE);
    let mut max_imag = 0.0f64;
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            max_imag = max_imag.max(m[(i, j)].im.abs());
        }
    }
    (max_imag <= DEMOTE_TOL * scale).then(|| Mat::from_fn(m.nrows(), m.ncols(), |i, j| m[(i, j)].re))
}

/// Largest imaginary part relative to the largest entry.
pub fn relative_imag(m: MatRef<'_, c64>) -> f64 {
    let scale = max_abs(m).max(f64::MIN_POSITIVE);
    let mut max_imag = 0.0f64;
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            max_imag = max_imag.max(m[(i, j)].im.abs());
        }
    }
    max_imag / scale
}

/// Horizontal concatenation. All blocks must share a row count.
pub fn hcat(blocks: &[&CMat]) -> CMat {
    let rows = blocks.first().map_or(0, |b| b.nrows());
    let cols: usize = blocks.iter().map(|b| b.ncols()).sum();
    let mut out = Mat::zeros(rows, cols);
    let mut offset = 0;
    for b in blocks {
        assert_eq!(b.nrows(), rows, "hcat: row mismatch");
        out.as_mut().subcols_mut(offset, b.ncols()).copy_from(b.as_ref());
        offset += b.ncols();
    }
    out
}

/// `I_{m^k} ⊗ M`, kept in factored form.
#[derive(Debug, Clone)]
pub struct KronIdentityLeft {
    copies: usize,
    block: CMat,
}

/// Builds `I_m^{⊗k} ⊗ M`. Fails when `m^k · rows(M)` exceeds `cap`.
pub fn kron_identity_left(m: usize, k: u32, block: &CMat, cap: usize) -> Result<KronIdentityLeft> {
    let copies = m.checked_pow(k).ok_or(Error::InstanceTooLarge { what: "Kronecker identity", size: usize::MAX, cap })?;
    let rows = copies.saturating_mul(block.nrows().max(1));
    if rows > cap {
        return Err(Error::InstanceTooLarge { what: "Kronecker identity", size: rows, cap });
    }
    Ok(KronIdentityLeft { copies, block: block.clone() })
}

impl KronIdentityLeft {
    pub fn nrows(&self) -> usize {
        self.copies * self.block.nrows()
    }

    pub fn ncols(&self) -> usize {
        self.copies * self.block.ncols()
    }

    /// Applies the operator block-diagonally without forming the identity.
    pub fn apply(&self, x: &CMat) -> CMat {
        let (br, bc) = (self.block.nrows(), self.block.ncols());
        assert_eq!(x.nrows(), self.ncols(), "kron apply: dimension mismatch");
        let mut out = Mat::zeros(self.nrows(), x.ncols());
        for c in 0..self.copies {
            let part = &self.block * x.as_ref().subrows(c * bc, bc);
            out.as_mut().subrows_mut(c * br, br).copy_from(&part);
        }
        out
    }

    pub fn materialize(&self) -> CMat {
        let (br, bc) = (self.block.nrows(), self.block.ncols());
        let mut out = Mat::zeros(self.nrows(), self.ncols());
        for c in 0..self.copies {
            out.as_mut().submatrix_mut(c * br, c * bc, br, bc).copy_from(&self.block);
        }
        out
    }
}

/// Block row `[N_1 ⋯ N_m]` of equally sized square blocks.
#[derive(Debug, Clone)]
pub struct BlockRow {
    blocks: Vec<CMat>,
}

impl BlockRow {
    pub fn new(blocks: Vec<CMat>) -> Result<Self> {
        if let Some(first) = blocks.first() {
            let rows = first.nrows();
            if blocks.iter().any(|b| b.nrows() != rows) {
                return Err(Error::Dimension("block row: blocks differ in row count".into()));
            }
        }
        Ok(Self { blocks })
    }

    pub fn blocks(&self) -> &[CMat] {
        &self.blocks
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    /// `[N_1 ⋯ N_m](I_m ⊗ X) = [N_1 X, …, N_m X]`.
    pub fn apply_kron(&self, x: &CMat) -> CMat {
        let parts: Vec<CMat> = self.blocks.iter().map(|b| b * x).collect();
        hcat(&parts.iter().collect::<Vec<_>>())
    }

    /// `N̄ᵀ(I_m ⊗ X) = [N_1ᵀ X, …, N_mᵀ X]`.
    pub fn apply_transpose_kron(&self, x: &CMat) -> CMat {
        let parts: Vec<CMat> = self.blocks.iter().map(|b| b.transpose() * x).collect();
        hcat(&parts.iter().collect::<Vec<_>>())
    }

    /// Materialized `[N_1 ⋯ N_m]`.
    pub fn materialize(&self) -> CMat {
        hcat(&self.blocks.iter().collect::<Vec<_>>())
    }
}

/// LU factorization of a shifted pencil `sE − A` with its condition estimate.
pub struct ShiftedFactor {
    shift: c64,
    lu: PartialPivLu<c64>,
    rcond: f64,
}

impl std::fmt::Debug for ShiftedFactor {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ShiftedFactor").field("shift", &self.shift).field("rcond", &self.rcond).finish()
    }
}

impl ShiftedFactor {
    /// Factors `sE − A`. Fails with `ShiftAtEigenvalue` when the reciprocal
    /// condition estimate falls below [`RCOND_THRESHOLD`].
    pub fn new(e: &CMat, a: &CMat, s: c64) -> Result<Self> {
        Self::with_cap(e, a, s, DEFAULT_DENSE_CAP)
    }

    pub fn with_cap(e: &CMat, a: &CMat, s: c64, cap: usize) -> Result<Self> {
        let n = a.nrows();
        if a.ncols() != n || e.nrows() != n || e.ncols() != n {
            return Err(Error::Dimension(format!("pencil: E is {}x{}, A is {}x{}", e.nrows(), e.ncols(), a.nrows(), a.ncols())));
        }
        if n > cap {
            return Err(Error::InstanceTooLarge { what: "dense factorization", size: n, cap });
        }
        let pencil = Mat::from_fn(n, n, |i, j| s * e[(i, j)] - a[(i, j)]);
        let (lu, rcond) = factor_with_rcond(&pencil);
        if !(rcond >= RCOND_THRESHOLD) {
            return Err(Error::ShiftAtEigenvalue { shift: s, rcond });
        }
        Ok(Self { shift: s, lu, rcond })
    }

    pub fn shift(&self) -> c64 {
        self.shift
    }

    pub fn rcond(&self) -> f64 {
        self.rcond
    }

    pub fn dim(&self) -> usize {
        self.lu.L().nrows()
    }

    /// `(sE − A)^{-1} rhs`.
    pub fn solve(&self, rhs: &CMat) -> CMat {
        let mut x = rhs.clone();
        self.lu.solve_in_place_with_conj(Conj::No, x.as_mut());
        x
    }

    /// `(sE − A)^{-T} rhs` (plain transpose, no conjugation).
    pub fn solve_transpose(&self, rhs: &CMat) -> CMat {
        let mut x = rhs.clone();
        self.lu.solve_transpose_in_place_with_conj(Conj::No, x.as_mut());
        x
    }
}

/// Solves `(sE − A) X = RHS` with a dense partially pivoted LU.
pub fn solve_shifted(e: &CMat, a: &CMat, s: c64, rhs: &CMat) -> Result<CMat> {
    if rhs.nrows() != a.nrows() {
        return Err(Error::Dimension(format!("right-hand side has {} rows, pencil has {}", rhs.nrows(), a.nrows())));
    }
    Ok(ShiftedFactor::new(e, a, s)?.solve(rhs))
}

/// Factors `m` and estimates its reciprocal 1-norm condition number.
pub fn factor_with_rcond(m: &CMat) -> (PartialPivLu<c64>, f64) {
    let n = m.nrows();
    let lu = m.partial_piv_lu();
    if n == 0 {
        return (lu, 1.0);
    }
    let u = lu.U();
    let singular = (0..n).any(|i| {
        let d = u[(i, i)];
        d.norm() == 0.0 || !d.re.is_finite() || !d.im.is_finite()
    });
    if singular {
        return (lu, 0.0);
    }
    let anorm = norm1(m.as_ref());
    if anorm == 0.0 {
        return (lu, 0.0);
    }
    let inv = inverse_norm1_estimate(
        n,
        |x| lu.solve_in_place_with_conj(Conj::No, x.as_mut()),
        |x| lu.solve_transpose_in_place_with_conj(Conj::Yes, x.as_mut()),
    );
    let rcond = if inv.is_finite() && inv > 0.0 { 1.0 / (anorm * inv) } else { 0.0 };
    (lu, rcond)
}

/// Reciprocal condition estimate of a square matrix.
pub fn rcond_estimate(m: &CMat) -> f64 {
    factor_with_rcond(m).1
}

fn norm1(m: MatRef<'_, c64>) -> f64 {
    (0..m.ncols()).map(|j| (0..m.nrows()).map(|i| m[(i, j)].norm()).sum::<f64>()).fold(0.0, f64::max)
}

// Hager/Higham estimator for ||A^{-1}||_1 using solves with A and A^H.
fn inverse_norm1_estimate(n: usize, solve: impl Fn(&mut CMat), solve_adjoint: impl Fn(&mut CMat)) -> f64 {
    let mut x: CMat = Mat::from_fn(n, 1, |_, _| cplx(1.0 / n as f64));
    let mut estimate = 0.0f64;
    let mut last_j = usize::MAX;
    for iter in 0..5 {
        let mut y = x.clone();
        solve(&mut y);
        let ynorm: f64 = (0..n).map(|i| y[(i, 0)].norm()).sum();
        if !ynorm.is_finite() {
            return f64::INFINITY;
        }
        if iter > 0 && ynorm <= estimate {
            break;
        }
        estimate = ynorm;
        let mut z: CMat = Mat::from_fn(n, 1, |i, _| {
            let v = y[(i, 0)];
            let a = v.norm();
            if a == 0.0 {
                cplx(1.0)
            } else {
                v / a
            }
        });
        solve_adjoint(&mut z);
        let (mut j, mut zmax) = (0, -1.0);
        for i in 0..n {
            let a = z[(i, 0)].norm();
            if a > zmax {
                zmax = a;
                j = i;
            }
        }
        let ztx: f64 = (0..n).map(|i| (z[(i, 0)].conj() * x[(i, 0)]).re).sum();
        if iter > 0 && (zmax <= ztx || j == last_j) {
            break;
        }
        last_j = j;
        x = Mat::zeros(n, 1);
        x[(j, 0)] = cplx(1.0);
    }
    // Alternating test vector guards against the estimator's known blind spots.
    let denom = if n > 1 { (n - 1) as f64 } else { 1.0 };
    let mut alt: CMat = Mat::from_fn(n, 1, |i, _| {
        let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
        cplx(sign * (1.0 + i as f64 / denom))
    });
    solve(&mut alt);
    let alt_norm: f64 = (0..n).map(|i| alt[(i, 0)].norm()).sum::<f64>() * 2.0 / (3.0 * n as f64);
    estimate.max(alt_norm)
}

/// Row selection by column-pivoted QR of `Uᵀ` (Q-DEIM). Returns the first
/// `M` pivots, `M = cols(U)`, in pivot order.
pub fn pivoted_qr_rows(u: &CMat) -> Result<Vec<usize>> {
    let (n, cols) = (u.nrows(), u.ncols());
    if cols == 0 || n < cols {
        return Err(Error::DegenerateBasis { expected: cols, found: n.min(cols) });
    }
    let ut = u.transpose().to_owned();
    let qr = ut.col_piv_qr();
    let r = qr.R();
    let lead = r[(0, 0)].norm();
    let tol = 1e-12 * lead.max(f64::MIN_POSITIVE);
    let rank = (0..cols).take_while(|&i| r[(i, i)].norm() > tol).count();
    if lead == 0.0 || rank < cols {
        return Err(Error::DegenerateBasis { expected: cols, found: rank });
    }
    let (forward, _) = qr.P().arrays();
    Ok(forward[..cols].to_vec())
}

/// Orthonormal basis for the column span of `x` from a thin SVD, keeping
/// singular values above `tol · σ_max` (at most `max_rank` of them).
/// Columns are normalized first so that block scaling does not bias the cut.
pub fn orthonormal_span(x: &CMat, tol: f64, max_rank: Option<usize>) -> Result<(CMat, Vec<f64>)> {
    let n = x.nrows();
    let kept: Vec<usize> = (0..x.ncols())
        .filter(|&j| {
            let nrm = x.as_ref().col(j).norm_l2();
            nrm > 0.0 && nrm.is_finite()
        })
        .collect();
    if kept.is_empty() || n == 0 {
        return Err(Error::AllColumnsDegenerate);
    }
    let scaled = Mat::from_fn(n, kept.len(), |i, j| {
        let col = kept[j];
        x[(i, col)] / x.as_ref().col(col).norm_l2()
    });
    let svd = scaled.thin_svd().map_err(|e| Error::Eigen(format!("svd: {e:?}")))?;
    let s: Vec<f64> = (0..svd.S().dim()).map(|i| svd.S()[i].re).collect();
    let smax = s.first().copied().unwrap_or(0.0);
    let mut rank = s.iter().take_while(|&&v| v > tol * smax).count();
    if let Some(cap) = max_rank {
        rank = rank.min(cap);
    }
    if rank == 0 {
        return Err(Error::AllColumnsDegenerate);
    }
    Ok((svd.U().subcols(0, rank).to_owned(), s))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn real(rows: usize, cols: usize, f: impl Fn(usize, usize) -> f64) -> CMat {
        Mat::from_fn(rows, cols, |i, j| cplx(f(i, j)))
    }

    #[test]
    fn kron_with_no_factors_is_identity_map() {
        let m = real(1, 1, |_, _| 2.0);
        let k = kron_identity_left(3, 0, &m, DEFAULT_KRON_CAP).unwrap();
        assert_eq!(k.materialize(), m);
    }

    #[test]
    fn kron_of_identity_is_identity() {
        let k = kron_identity_left(2, 1, &real(2, 2, |i, j| (i == j) as u8 as f64), DEFAULT_KRON_CAP).unwrap();
        assert_eq!(k.materialize(), real(4, 4, |i, j| (i == j) as u8 as f64));
    }

    #[test]
    fn kron_of_column_matches_hand_expansion() {
        let k = kron_identity_left(2, 1, &real(2, 1, |i, _| (i + 1) as f64), DEFAULT_KRON_CAP).unwrap();
        let expected = real(4, 2, |i, j| match (i, j) {
            (0, 0) => 1.0,
            (1, 0) => 2.0,
            (2, 1) => 1.0,
            (3, 1) => 2.0,
            _ => 0.0,
        });
        assert_eq!(k.materialize(), expected);
    }

    #[test]
    fn kron_cap_is_enforced() {
        let m = real(10, 10, |_, _| 1.0);
        let err = kron_identity_left(4, 6, &m, 1000).unwrap_err();
        assert!(matches!(err, Error::InstanceTooLarge { .. }));
    }

    #[test]
    fn kron_apply_agrees_with_materialized_product() {
        let block = real(3, 2, |i, j| (i * 2 + j) as f64 - 1.5);
        let k = kron_identity_left(2, 2, &block, DEFAULT_KRON_CAP).unwrap();
        let x = real(8, 3, |i, j| ((i * 3 + j) % 5) as f64);
        let lhs = k.apply(&x);
        let rhs = k.materialize() * &x;
        assert!(frobenius((&lhs - &rhs).as_ref()) < 1e-14);
    }

    #[test]
    fn scalar_resolvent() {
        let e = real(1, 1, |_, _| 1.0);
        let a = real(1, 1, |_, _| -1.0);
        let x = solve_shifted(&e, &a, cplx(1.0), &real(1, 1, |_, _| 1.0)).unwrap();
        assert!((x[(0, 0)] - cplx(0.5)).norm() < 1e-15);
    }

    #[test]
    fn zero_pencil_halves_identity() {
        let e = real(2, 2, |i, j| (i == j) as u8 as f64);
        let a = Mat::zeros(2, 2);
        let x = solve_shifted(&e, &a, cplx(2.0), &e).unwrap();
        assert!(frobenius((&x - &real(2, 2, |i, j| 0.5 * (i == j) as u8 as f64)).as_ref()) < 1e-15);
    }

    #[test]
    fn shift_at_eigenvalue_is_detected() {
        let e = real(2, 2, |i, j| (i == j) as u8 as f64);
        let a = real(2, 2, |i, j| if i == j { -(i as f64) - 1.0 } else { 0.0 });
        let err = ShiftedFactor::new(&e, &a, cplx(-1.0)).unwrap_err();
        assert!(matches!(err, Error::ShiftAtEigenvalue { .. }));
    }

    #[test]
    fn dense_cap_guards_factorization() {
        let e = real(4, 4, |i, j| (i == j) as u8 as f64);
        let err = ShiftedFactor::with_cap(&e, &e, cplx(2.0), 3).unwrap_err();
        assert!(matches!(err, Error::InstanceTooLarge { .. }));
    }

    #[test]
    fn rcond_of_identity_is_one() {
        let id = real(5, 5, |i, j| (i == j) as u8 as f64);
        assert!((rcond_estimate(&id) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rcond_tracks_diagonal_spread() {
        let d = real(3, 3, |i, j| if i == j { [1.0, 1e-3, 10.0][i] } else { 0.0 });
        // exact 1-norm condition number is 1e4
        assert!((rcond_estimate(&d) - 1e-4).abs() < 1e-12);
    }

    #[test]
    fn canonical_columns_select_their_rows() {
        let u = real(3, 2, |i, j| (i == j) as u8 as f64);
        let mut rows = pivoted_qr_rows(&u).unwrap();
        rows.sort();
        assert_eq!(rows, vec![0, 1]);
    }

    #[test]
    fn duplicated_rows_are_degenerate() {
        let u = real(3, 2, |_, _| 1.0 / 3f64.sqrt());
        assert!(matches!(pivoted_qr_rows(&u), Err(Error::DegenerateBasis { .. })));
    }

    #[test]
    fn orthonormal_span_drops_duplicates() {
        let x = real(4, 3, |i, j| if j == 2 { 3.0 * (i as f64 + 1.0) } else { i as f64 + 1.0 + j as f64 });
        let (q, s) = orthonormal_span(&x, 1e-10, None).unwrap();
        assert_eq!(q.ncols(), 2);
        assert_eq!(s.len(), 3);
    }

    #[test]
    fn demotion_drops_tiny_imaginary_parts() {
        let mut m = real(2, 2, |i, j| (i + j) as f64 + 1.0);
        m[(0, 1)].im = 1e-15;
        assert!(demote_real(m.as_ref()).is_some());
        m[(0, 1)].im = 1e-3;
        assert!(demote_real(m.as_ref()).is_none());
    }
}

//! Carleman-bilinearized RC ladder with diode law `g(v; p) = e^{pv} + v − 1`.
//!
//! The state is `[v; v ⊗ v]` of order `n = N + N²`. With the stencil
//! `T = tridiag(1, −2, 1)` (last diagonal entry −1), the system matrix is
//!
//! ```text
//! A(p) = [ (1+p) T    p² Q                      ]
//!        [ 0          (1+p)(T ⊗ I + I ⊗ T)       ]
//! ```
//!
//! where `Q` holds the second-order Taylor terms of the ladder.

use faer::Mat;

use crate::error::{Error, Result};
use crate::kernels::{cplx, CMat};
use crate::system::coefficient::monomial;
use crate::system::{AffineMatrix, ParamBox, ParamRange, ParametricBilinearSystem};

/// Sample points used to build the reference reduced model.
pub const SAMPLE_POINTS: [f64; 2] = [1.0, 50.0];
/// Parameters at which reduced and full outputs are compared.
pub const TEST_POINTS: [f64; 3] = [18.0, 40.0, 62.0];
/// Parameter range of the sweep.
pub const PARAM_RANGE: (f64, f64) = (0.0, 70.0);

/// `tridiag(1, −2, 1)` with the last diagonal entry replaced by −1.
pub fn stencil(size: usize) -> Mat<f64> {
    Mat::from_fn(size, size, |i, j| {
        if i == j {
            if i + 1 == size {
                -1.0
            } else {
                -2.0
            }
        } else if i.abs_diff(j) == 1 {
            1.0
        } else {
            0.0
        }
    })
}

/// Quadratic-term pattern `Q` (`N × N²`): `A_2(p) = p² Q`.
///
/// Entries follow the one-based index list of the ladder's Taylor expansion;
/// column `(i−1)N + j` multiplies `v_i v_j`.
pub fn quadratic_pattern(size: usize) -> Mat<f64> {
    let n = size;
    let mut q = Mat::zeros(n, n * n);
    let mut set = |row: usize, col: usize, v: f64| q[(row - 1, col - 1)] += v;
    set(1, 1, -1.0);
    set(1, 2, 0.5);
    set(1, n + 1, 0.5);
    set(1, n + 2, -0.5);
    for k in 2..n {
        set(k, (k - 2) * n + k - 1, 0.5);
        set(k, (k - 1) * n + k + 1, 0.5);
        set(k, k * n + k, 0.5);
        set(k, (k - 2) * n + k, -0.5);
        set(k, (k - 1) * n + k - 1, -0.5);
        set(k, k * n + k + 1, -0.5);
    }
    set(n, (n - 2) * n + n - 1, 0.5);
    set(n, (n - 1) * n + n, 0.5);
    set(n, (n - 2) * n + n, -0.5);
    set(n, (n - 1) * n + n - 1, -0.5);
    q
}

fn kron(a: &Mat<f64>, b: &Mat<f64>) -> Mat<f64> {
    let (ar, ac, br, bc) = (a.nrows(), a.ncols(), b.nrows(), b.ncols());
    Mat::from_fn(ar * br, ac * bc, |i, j| a[(i / br, j / bc)] * b[(i % br, j % bc)])
}

/// Block-diagonal linear part `blockdiag(T, T ⊗ I + I ⊗ T)`.
pub fn linear_part(size: usize) -> Mat<f64> {
    let t = stencil(size);
    let id = Mat::<f64>::identity(size, size);
    let big = kron(&t, &id) + kron(&id, &t);
    let n = size + size * size;
    let mut out = Mat::zeros(n, n);
    out.as_mut().submatrix_mut(0, 0, size, size).copy_from(&t);
    out.as_mut().submatrix_mut(size, size, size * size, size * size).copy_from(&big);
    out
}

/// `[0 0; b ⊗ I + I ⊗ b 0]` with `b = e_1`.
pub fn bilinear_coupling(size: usize) -> Mat<f64> {
    let n = size + size * size;
    let mut out = Mat::zeros(n, n);
    for i in 0..size {
        // e_1 ⊗ I puts column i at row i; I ⊗ e_1 puts it at row i·N.
        out[(size + i, i)] += 1.0;
        out[(size + i * size, i)] += 1.0;
    }
    out
}

fn promote(m: &Mat<f64>) -> CMat {
    Mat::from_fn(m.nrows(), m.ncols(), |i, j| cplx(m[(i, j)]))
}

/// The bilinearized RC ladder with `size` resistors (`size ≥ 2`).
pub fn gen_rc(size: usize) -> Result<ParametricBilinearSystem> {
    if size < 2 {
        return Err(Error::InvalidSpec(format!("RC ladder needs at least 2 nodes, got {size}")));
    }
    let n = size + size * size;
    let lin = promote(&linear_part(size));
    let mut quad: CMat = Mat::zeros(n, n);
    quad.as_mut().submatrix_mut(0, size, size, size * size).copy_from(&promote(&quadratic_pattern(size)));
    let a = AffineMatrix::constant(lin.clone()).with_term(monomial(1.0, 0, 1, "p1"), lin)?.with_term(monomial(1.0, 0, 2, "p1^2"), quad)?;
    let unit = |rows: usize, cols: usize| Mat::from_fn(rows, cols, |i, j| cplx((i == 0 && j == 0) as u8 as f64));
    ParametricBilinearSystem::new(
        format!("rc-{size}"),
        1,
        AffineMatrix::constant(Mat::identity(n, n)),
        a,
        vec![AffineMatrix::constant(promote(&bilinear_coupling(size)))],
        AffineMatrix::constant(unit(n, 1)),
        AffineMatrix::constant(unit(1, n)),
    )?
    .with_param_box(ParamBox(vec![ParamRange::linear(PARAM_RANGE.0, PARAM_RANGE.1)]))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn linear_block_at_unit_parameter() {
        let sys = gen_rc(2).unwrap();
        let a = sys.a().evaluate(&[1.0]).unwrap();
        let expected = [[-4.0, 2.0], [2.0, -2.0]];
        for i in 0..2 {
            for j in 0..2 {
                assert_eq!(a[(i, j)].re, expected[i][j]);
            }
        }
    }

    #[test]
    fn first_quadratic_row_for_two_nodes() {
        let p = 3.0;
        let a = gen_rc(2).unwrap().a().evaluate(&[p]).unwrap();
        let row: Vec<f64> = (2..6).map(|j| a[(0, j)].re).collect();
        assert_eq!(row, vec![-p * p, p * p / 2.0, p * p / 2.0, -p * p / 2.0]);
    }

    #[test]
    fn coupling_has_expected_nonzeros() {
        for size in [2, 3, 5] {
            let m = bilinear_coupling(size);
            let nnz = (0..m.ncols()).flat_map(|j| (0..m.nrows()).map(move |i| (i, j))).filter(|&(i, j)| m[(i, j)] != 0.0).count();
            assert_eq!(nnz, 2 * size - 1);
            assert_eq!(m[(size, 0)], 2.0);
        }
    }

    #[test]
    fn stencil_row_sums() {
        let t = stencil(4);
        let sums: Vec<f64> = (0..4).map(|i| (0..4).map(|j| t[(i, j)]).sum()).collect();
        assert_eq!(sums, vec![-1.0, 0.0, 0.0, 0.0]);
    }
}

//! Subsystem transfer functions `H_k(s_1, …, s_k; p)` of a bilinear system,
//! evaluated along tangential directions without forming Kronecker products.
//!
//! The right chain is `f_1 = 𝒜(s_1)^{-1} B b`, `f_j = 𝒜(s_j)^{-1} N (I_m ⊗ f_{j-1})`
//! and `H_k (I ⊗ b) = C f_k`, where `𝒜(s) = sE − A`. The column of `f_j`
//! belonging to input indices `(i_j, …, i_2)` is ordered with the index of
//! the `N` nearest to `C` outermost.

use std::sync::{Arc, Mutex};

use faer::Mat;

use crate::c64;
use crate::error::{Error, Result};
use crate::kernels::{column, BlockRow, CMat, ShiftedFactor};
use crate::system::{EvaluatedSystem, ParametricBilinearSystem};

/// Largest subsystem order evaluated by default.
pub const DEFAULT_MAX_K: usize = 4;

/// Relative step for central differences in a frequency.
pub const FD_FREQ_STEP: f64 = 1e-6;
/// Relative step for central differences in a parameter.
pub const FD_PARAM_STEP: f64 = 1e-6;
/// Relative step for the outer difference of nested Hessian approximations.
pub const FD_HESSIAN_STEP: f64 = 1e-4;

/// System matrices frozen at one parameter point, with cached factorizations
/// of `sE − A` for every shift seen so far.
pub struct FrozenSystem {
    p: Vec<f64>,
    mats: EvaluatedSystem,
    factors: Mutex<Vec<(c64, Arc<ShiftedFactor>)>>,
}

impl FrozenSystem {
    pub fn new(sys: &ParametricBilinearSystem, p: &[f64]) -> Result<Self> {
        Ok(Self { p: p.to_vec(), mats: sys.evaluate(p)?, factors: Mutex::new(Vec::new()) })
    }

    pub fn point(&self) -> &[f64] {
        &self.p
    }

    pub fn mats(&self) -> &EvaluatedSystem {
        &self.mats
    }

    pub fn factor(&self, s: c64) -> Result<Arc<ShiftedFactor>> {
        let mut cache = self.factors.lock().expect("factor cache poisoned");
        if let Some((_, f)) = cache.iter().find(|(t, _)| *t == s) {
            return Ok(f.clone());
        }
        let f = Arc::new(ShiftedFactor::new(&self.mats.e, &self.mats.a, s)?);
        cache.push((s, f.clone()));
        Ok(f)
    }

    pub fn solve(&self, s: c64, rhs: &CMat) -> Result<CMat> {
        Ok(self.factor(s)?.solve(rhs))
    }

    pub fn solve_transpose(&self, s: c64, rhs: &CMat) -> Result<CMat> {
        Ok(self.factor(s)?.solve_transpose(rhs))
    }

    /// Right chain `f_1, …, f_k`. With `b = None` the first block is `𝒜^{-1}B`.
    pub fn right_chain(&self, freqs: &[c64], b: Option<&[c64]>) -> Result<Vec<CMat>> {
        let mut chain: Vec<CMat> = Vec::with_capacity(freqs.len());
        for (j, &s) in freqs.iter().enumerate() {
            let rhs = match chain.last() {
                None => input_rhs(&self.mats.b, b),
                Some(prev) => self.mats.n.apply_kron(prev),
            };
            chain.push(self.solve(s, &rhs)?);
            debug_assert_eq!(chain[j].nrows(), self.mats.a.nrows());
        }
        Ok(chain)
    }
}

fn input_rhs(b_mat: &CMat, b: Option<&[c64]>) -> CMat {
    match b {
        Some(dir) => b_mat * column(dir),
        None => b_mat.clone(),
    }
}

fn shifted_pencil_apply(s: c64, e: &CMat, a: &CMat, x: &CMat) -> CMat {
    let ex = e * x;
    let ax = a * x;
    Mat::from_fn(x.nrows().max(ex.nrows()), x.ncols(), |i, j| s * ex[(i, j)] - ax[(i, j)])
}

fn check_freqs(freqs: &[c64]) -> Result<()> {
    if freqs.is_empty() {
        return Err(Error::InvalidSpec("subsystem order k must be at least 1".into()));
    }
    if freqs.len() > DEFAULT_MAX_K {
        return Err(Error::InstanceTooLarge { what: "subsystem order", size: freqs.len(), cap: DEFAULT_MAX_K });
    }
    Ok(())
}

fn check_direction(name: &str, dir: &[c64], len: usize) -> Result<()> {
    if dir.len() != len {
        return Err(Error::Dimension(format!("direction {name} has {} entries, expected {len}", dir.len())));
    }
    if dir.iter().all(|v| v.norm() == 0.0) {
        return Err(Error::InvalidSpec(format!("direction {name} must be nonzero")));
    }
    Ok(())
}

fn row_of(c: &[c64]) -> CMat {
    Mat::from_fn(1, c.len(), |_, j| c[j])
}

fn row_to_vec(m: &CMat) -> Vec<c64> {
    (0..m.ncols()).map(|j| m[(0, j)]).collect()
}

/// `H_k(s_1, …, s_k; p) (I_m^{⊗k−1} ⊗ b)`, an `ℓ × m^{k−1}` matrix.
pub fn eval_hk_right(sys: &ParametricBilinearSystem, freqs: &[c64], p: &[f64], b: &[c64]) -> Result<CMat> {
    check_freqs(freqs)?;
    check_direction("b", b, sys.dims().m)?;
    let frozen = FrozenSystem::new(sys, p)?;
    let chain = frozen.right_chain(freqs, Some(b))?;
    Ok(&frozen.mats.c * chain.last().expect("k >= 1"))
}

/// The uncontracted `H_k(s_1, …, s_k; p)`, an `ℓ × m^k` matrix.
pub fn eval_hk_full(sys: &ParametricBilinearSystem, freqs: &[c64], p: &[f64]) -> Result<CMat> {
    check_freqs(freqs)?;
    let frozen = FrozenSystem::new(sys, p)?;
    let chain = frozen.right_chain(freqs, None)?;
    Ok(&frozen.mats.c * chain.last().expect("k >= 1"))
}

/// `cᵀ H_k(s_1, …, s_k; p)`, a `1 × m^k` row, built from transposed solves.
pub fn eval_hk_left(sys: &ParametricBilinearSystem, freqs: &[c64], p: &[f64], c: &[c64]) -> Result<CMat> {
    check_freqs(freqs)?;
    check_direction("c", c, sys.dims().l)?;
    let frozen = FrozenSystem::new(sys, p)?;
    left_row(&frozen, freqs, c)
}

pub(crate) fn left_row(frozen: &FrozenSystem, freqs: &[c64], c: &[c64]) -> Result<CMat> {
    let mats = frozen.mats();
    let k = freqs.len();
    let mut g = frozen.solve_transpose(freqs[k - 1], &(mats.c.transpose() * column(c)))?;
    for &s in freqs[..k - 1].iter().rev() {
        g = frozen.solve_transpose(s, &expand_transpose(&mats.n, &g))?;
    }
    let bt_g = mats.b.transpose() * &g;
    let m = mats.b.ncols();
    Ok(Mat::from_fn(1, g.ncols() * m, |_, idx| bt_g[(idx % m, idx / m)]))
}

/// Columns `(β, j) ↦ N_jᵀ g_β` with `β` outermost.
fn expand_transpose(n: &BlockRow, g: &CMat) -> CMat {
    let m = n.len();
    let parts: Vec<CMat> = n.blocks().iter().map(|nj| nj.transpose() * g).collect();
    Mat::from_fn(g.nrows(), g.ncols() * m, |i, idx| parts[idx % m][(i, idx / m)])
}

/// `cᵀ H_k(s_1, …, s_k; p) (I_m^{⊗k−1} ⊗ b)` as an `m^{k−1}` vector.
pub fn eval_hk_bitangential(sys: &ParametricBilinearSystem, freqs: &[c64], p: &[f64], b: &[c64], c: &[c64]) -> Result<Vec<c64>> {
    check_direction("c", c, sys.dims().l)?;
    let right = eval_hk_right(sys, freqs, p, b)?;
    Ok(row_to_vec(&(row_of(c) * right)))
}

/// `∂/∂s_i` of the bitangential value, with `i` one-based.
pub fn freq_derivative(sys: &ParametricBilinearSystem, freqs: &[c64], p: &[f64], b: &[c64], c: &[c64], i: usize) -> Result<Vec<c64>> {
    check_freqs(freqs)?;
    check_direction("b", b, sys.dims().m)?;
    check_direction("c", c, sys.dims().l)?;
    if i == 0 || i > freqs.len() {
        return Err(Error::InvalidSpec(format!("derivative index {i} outside 1..={}", freqs.len())));
    }
    let frozen = FrozenSystem::new(sys, p)?;
    let mats = frozen.mats();
    let mut f: Option<CMat> = None;
    for (j, &s) in freqs.iter().enumerate() {
        let rhs = match &f {
            None => input_rhs(&mats.b, Some(b)),
            Some(prev) => mats.n.apply_kron(prev),
        };
        let mut next = frozen.solve(s, &rhs)?;
        if j + 1 == i {
            // d/ds 𝒜(s)^{-1} = −𝒜^{-1} E 𝒜^{-1}
            next = -frozen.solve(s, &(&mats.e * &next))?;
        }
        f = Some(next);
    }
    Ok(row_to_vec(&(row_of(c) * &mats.c * f.expect("k >= 1"))))
}

/// Central-difference approximation of [`freq_derivative`].
pub fn freq_derivative_fd(sys: &ParametricBilinearSystem, freqs: &[c64], p: &[f64], b: &[c64], c: &[c64], i: usize) -> Result<Vec<c64>> {
    if i == 0 || i > freqs.len() {
        return Err(Error::InvalidSpec(format!("derivative index {i} outside 1..={}", freqs.len())));
    }
    let h = FD_FREQ_STEP * freqs[i - 1].norm().max(1.0);
    let mut plus = freqs.to_vec();
    let mut minus = freqs.to_vec();
    plus[i - 1] += h;
    minus[i - 1] -= h;
    let fp = eval_hk_bitangential(sys, &plus, p, b, c)?;
    let fm = eval_hk_bitangential(sys, &minus, p, b, c)?;
    Ok(fp.iter().zip(&fm).map(|(a, b)| (a - b) / (2.0 * h)).collect())
}

/// Forward-mode sensitivities of the right chain with respect to one parameter.
struct ChainSensitivity {
    dmats: EvaluatedSystem,
    df: Vec<CMat>,
}

fn chain_sensitivity(frozen: &FrozenSystem, freqs: &[c64], b: &[c64], f: &[CMat], dmats: EvaluatedSystem) -> Result<ChainSensitivity> {
    let mats = frozen.mats();
    let mut df: Vec<CMat> = Vec::with_capacity(f.len());
    for (l, &s) in freqs.iter().enumerate() {
        let mut rhs = if l == 0 { &dmats.b * column(b) } else { dmats.n.apply_kron(&f[l - 1]) + mats.n.apply_kron(&df[l - 1]) };
        rhs -= shifted_pencil_apply(s, &dmats.e, &dmats.a, &f[l]);
        df.push(frozen.solve(s, &rhs)?);
    }
    Ok(ChainSensitivity { dmats, df })
}

/// Parameter Jacobian of the bitangential value: an `m^{k−1} × ν` matrix.
pub fn param_jacobian(sys: &ParametricBilinearSystem, freqs: &[c64], p: &[f64], b: &[c64], c: &[c64]) -> Result<CMat> {
    check_freqs(freqs)?;
    check_direction("b", b, sys.dims().m)?;
    check_direction("c", c, sys.dims().l)?;
    let frozen = FrozenSystem::new(sys, p)?;
    let f = frozen.right_chain(freqs, Some(b))?;
    let ct = row_of(c);
    let fk = f.last().expect("k >= 1");
    let nu = sys.dims().nu;
    let mut jac = Mat::zeros(fk.ncols(), nu);
    for j in 0..nu {
        let sens = chain_sensitivity(&frozen, freqs, b, &f, sys.derivative(p, j)?)?;
        let dy = &ct * (&sens.dmats.c * fk + &frozen.mats().c * sens.df.last().expect("k >= 1"));
        for e in 0..dy.ncols() {
            jac[(e, j)] = dy[(0, e)];
        }
    }
    Ok(jac)
}

/// Central-difference approximation of [`param_jacobian`].
pub fn param_jacobian_fd(sys: &ParametricBilinearSystem, freqs: &[c64], p: &[f64], b: &[c64], c: &[c64]) -> Result<CMat> {
    fd_jacobian(sys.dims().nu, p, FD_PARAM_STEP, |q| eval_hk_bitangential(sys, freqs, q, b, c))
}

fn fd_jacobian(nu: usize, p: &[f64], rel: f64, f: impl Fn(&[f64]) -> Result<Vec<c64>>) -> Result<CMat> {
    let mut cols: Vec<Vec<c64>> = Vec::with_capacity(nu);
    for j in 0..nu {
        let h = rel * p[j].abs().max(1.0);
        let mut plus = p.to_vec();
        let mut minus = p.to_vec();
        plus[j] += h;
        minus[j] -= h;
        let (fp, fm) = (f(&plus)?, f(&minus)?);
        cols.push(fp.iter().zip(&fm).map(|(a, b)| (a - b) / (2.0 * h)).collect());
    }
    let rows = cols.first().map_or(0, Vec::len);
    Ok(Mat::from_fn(rows, nu, |e, j| cols[j][e]))
}

/// Parameter Hessian of the bitangential value, one symmetric `ν × ν`
/// matrix per output entry. Second-order forward mode for `k ≤ 2`,
/// central differences of [`param_jacobian`] beyond.
pub fn param_hessian(sys: &ParametricBilinearSystem, freqs: &[c64], p: &[f64], b: &[c64], c: &[c64]) -> Result<Vec<CMat>> {
    check_freqs(freqs)?;
    check_direction("b", b, sys.dims().m)?;
    check_direction("c", c, sys.dims().l)?;
    let raw = if freqs.len() <= 2 { hessian_forward(sys, freqs, p, b, c)? } else { param_hessian_fd(sys, freqs, p, b, c)? };
    Ok(raw.into_iter().map(symmetrize).collect())
}

fn symmetrize(h: CMat) -> CMat {
    Mat::from_fn(h.nrows(), h.ncols(), |i, j| (h[(i, j)] + h[(j, i)]) * 0.5)
}

fn hessian_forward(sys: &ParametricBilinearSystem, freqs: &[c64], p: &[f64], b: &[c64], c: &[c64]) -> Result<Vec<CMat>> {
    let frozen = FrozenSystem::new(sys, p)?;
    let mats = frozen.mats();
    let f = frozen.right_chain(freqs, Some(b))?;
    let nu = sys.dims().nu;
    let sens: Vec<ChainSensitivity> =
        (0..nu).map(|j| chain_sensitivity(&frozen, freqs, b, &f, sys.derivative(p, j)?)).collect::<Result<_>>()?;
    let ct = row_of(c);
    let k = freqs.len();
    let width = f[k - 1].ncols();
    let mut out = vec![Mat::<c64>::zeros(nu, nu); width];
    for a in 0..nu {
        for bb in a..nu {
            let d2 = sys.second_derivative(p, a, bb)?;
            let (sa, sb) = (&sens[a], &sens[bb]);
            let mut d2f: Vec<CMat> = Vec::with_capacity(k);
            for (l, &s) in freqs.iter().enumerate() {
                let mut rhs = if l == 0 {
                    &d2.b * column(b)
                } else {
                    d2.n.apply_kron(&f[l - 1])
                        + sa.dmats.n.apply_kron(&sb.df[l - 1])
                        + sb.dmats.n.apply_kron(&sa.df[l - 1])
                        + mats.n.apply_kron(&d2f[l - 1])
                };
                rhs -= shifted_pencil_apply(s, &d2.e, &d2.a, &f[l]);
                rhs -= shifted_pencil_apply(s, &sa.dmats.e, &sa.dmats.a, &sb.df[l]);
                rhs -= shifted_pencil_apply(s, &sb.dmats.e, &sb.dmats.a, &sa.df[l]);
                d2f.push(frozen.solve(s, &rhs)?);
            }
            let dy = &ct * (&d2.c * &f[k - 1] + &sa.dmats.c * &sb.df[k - 1] + &sb.dmats.c * &sa.df[k - 1] + &mats.c * &d2f[k - 1]);
            for e in 0..width {
                out[e][(a, bb)] = dy[(0, e)];
                out[e][(bb, a)] = dy[(0, e)];
            }
        }
    }
    Ok(out)
}

/// Nested finite differences: central differences of the analytic Jacobian.
pub fn param_hessian_fd(sys: &ParametricBilinearSystem, freqs: &[c64], p: &[f64], b: &[c64], c: &[c64]) -> Result<Vec<CMat>> {
    let nu = sys.dims().nu;
    let mut per_param: Vec<CMat> = Vec::with_capacity(nu);
    for i in 0..nu {
        let h = FD_HESSIAN_STEP * p[i].abs().max(1.0);
        let mut plus = p.to_vec();
        let mut minus = p.to_vec();
        plus[i] += h;
        minus[i] -= h;
        let jp = param_jacobian(sys, freqs, &plus, b, c)?;
        let jm = param_jacobian(sys, freqs, &minus, b, c)?;
        per_param.push(Mat::from_fn(jp.nrows(), nu, |e, j| (jp[(e, j)] - jm[(e, j)]) / (2.0 * h)));
    }
    let width = per_param.first().map_or(0, |m| m.nrows());
    Ok((0..width).map(|e| symmetrize(Mat::from_fn(nu, nu, |i, j| per_param[i][(e, j)]))).collect())
}

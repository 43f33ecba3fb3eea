//! Independent oracles shared by the integration tests: dense Kronecker
//! products, explicit inverses and small random systems.

#![allow(dead_code)]

use faer::prelude::*;
use faer::Mat;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use pbmor::c64;
use pbmor::kernels::{frobenius, CMat};
use pbmor::system::coefficient::parse_tag;
use pbmor::system::{AffineMatrix, AffineTerm, ParametricBilinearSystem};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn c(re: f64) -> c64 {
    c64::new(re, 0.0)
}

pub fn random_real(rng: &mut impl Rng, rows: usize, cols: usize, scale: f64) -> CMat {
    Mat::from_fn(rows, cols, |_, _| c(scale * rng.random_range(-1.0..1.0)))
}

pub fn identity(n: usize) -> CMat {
    Mat::identity(n, n)
}

/// Dense Kronecker product by its definition `(A ⊗ B)[(i·p + k, j·q + l)] = A[i,j] B[k,l]`.
pub fn kron(a: &CMat, b: &CMat) -> CMat {
    let (p, q) = (b.nrows(), b.ncols());
    Mat::from_fn(a.nrows() * p, a.ncols() * q, |r, s| a[(r / p, s / q)] * b[(r % p, s % q)])
}

pub fn kron_power_identity(m: usize, k: u32) -> CMat {
    identity(m.pow(k))
}

pub fn inverse(m: &CMat) -> CMat {
    m.partial_piv_lu().solve(identity(m.nrows()))
}

pub fn rel_diff(a: &CMat, b: &CMat) -> f64 {
    frobenius((a - b).as_ref()) / frobenius(a.as_ref()).max(1e-300)
}

pub fn rel_diff_vec(a: &[c64], b: &[c64]) -> f64 {
    let d: f64 = a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>().sqrt();
    let n: f64 = a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
    d / n.max(1e-300)
}

/// `H_k(s_1, …, s_k; p)` materialized as
/// `C Φ(s_k) N̄ (I_m ⊗ Φ(s_{k−1})) (I_m ⊗ N̄) ⋯ (I_{m^{k−1}} ⊗ Φ(s_1) B)`
/// with `Φ(s) = (sE − A)^{-1}` formed by explicit inversion.
pub fn materialized_hk(sys: &ParametricBilinearSystem, freqs: &[c64], p: &[f64]) -> CMat {
    let ev = sys.evaluate(p).unwrap();
    let n = ev.a.nrows();
    let m = ev.b.ncols();
    let nbar = ev.n.materialize();
    let phi = |s: c64| inverse(&Mat::from_fn(n, n, |i, j| s * ev.e[(i, j)] - ev.a[(i, j)]));
    let k = freqs.len();
    let mut acc = kron(&kron_power_identity(m, (k - 1) as u32), &(phi(freqs[0]) * &ev.b));
    for (level, &s) in freqs.iter().enumerate().skip(1) {
        let outer = kron_power_identity(m, (k - 1 - level) as u32);
        acc = kron(&outer, &nbar) * acc;
        acc = kron(&outer, &phi(s)) * acc;
    }
    &ev.c * acc
}

/// A small stable random system with `nu` parameters entering `A`, `N_1`, `B`
/// and `C` through monomials.
pub fn random_system(rng: &mut impl Rng, n: usize, m: usize, l: usize, nu: usize) -> ParametricBilinearSystem {
    let shift = |mat: CMat, by: f64| Mat::from_fn(mat.nrows(), mat.ncols(), |i, j| mat[(i, j)] - if i == j { c(by) } else { c(0.0) });
    let e = shift(random_real(rng, n, n, 0.1), -1.0);
    let a0 = shift(random_real(rng, n, n, 1.0), 3.0 + n as f64);
    let tags = ["p1", "p2^2", "0.5*p3", "-p4", "p5^3"];
    let mut a_terms = Vec::new();
    let mut n1_terms = Vec::new();
    let mut b_terms = Vec::new();
    let mut c_terms = Vec::new();
    for tag in tags.iter().take(nu) {
        let coef = parse_tag(tag).unwrap();
        a_terms.push(AffineTerm { coefficient: coef.clone(), matrix: random_real(rng, n, n, 0.3) });
        n1_terms.push(AffineTerm { coefficient: coef.clone(), matrix: random_real(rng, n, n, 0.2) });
        b_terms.push(AffineTerm { coefficient: coef.clone(), matrix: random_real(rng, n, m, 0.3) });
        c_terms.push(AffineTerm { coefficient: coef, matrix: random_real(rng, l, n, 0.3) });
    }
    let mut ns = vec![AffineMatrix::new(random_real(rng, n, n, 0.5), n1_terms).unwrap()];
    for _ in 1..m {
        ns.push(AffineMatrix::constant(random_real(rng, n, n, 0.5)));
    }
    ParametricBilinearSystem::new(
        "random",
        nu,
        AffineMatrix::constant(e),
        AffineMatrix::new(a0, a_terms).unwrap(),
        ns,
        AffineMatrix::new(random_real(rng, n, m, 1.0), b_terms).unwrap(),
        AffineMatrix::new(random_real(rng, l, n, 1.0), c_terms).unwrap(),
    )
    .unwrap()
}

pub fn random_point(rng: &mut impl Rng, nu: usize) -> Vec<f64> {
    (0..nu).map(|_| rng.random_range(0.2..1.0)).collect()
}

pub fn random_shifts(rng: &mut impl Rng, k: usize) -> Vec<c64> {
    (0..k).map(|_| c64::new(rng.random_range(0.5..3.0), rng.random_range(-1.0..1.0))).collect()
}

pub fn unit_direction(rng: &mut impl Rng, len: usize) -> Vec<c64> {
    let v: Vec<f64> = (0..len).map(|_| rng.random_range(0.5..1.5)).collect();
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.into_iter().map(|x| c(x / norm)).collect()
}

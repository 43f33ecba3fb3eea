//! Basis construction and projection checked against formulas recomputed
//! from explicit inverses.

mod common;

use common::*;
use faer::Mat;
use pbmor::basis::{
    build_all_orderings, build_global_basis, build_v_sequential, build_w_sequential, AssemblyOptions, InterpolationSpec, OrderingMode,
    ReductionBasis, Sidedness,
};
use pbmor::kernels::{frobenius, CMat};
use pbmor::projection::{online_evaluate, reduce};
use pbmor::transfer::eval_hk_full;

fn pencil_inverse(sys: &pbmor::system::ParametricBilinearSystem, p: &[f64], s: pbmor::c64) -> CMat {
    let ev = sys.evaluate(p).unwrap();
    let n = ev.a.nrows();
    inverse(&Mat::from_fn(n, n, |i, j| s * ev.e[(i, j)] - ev.a[(i, j)]))
}

/// Residual of projecting `x` onto the span of the orthonormal `q`.
fn span_residual(q: &CMat, x: &CMat) -> f64 {
    let proj = q * (q.adjoint() * x);
    frobenius((x - &proj).as_ref()) / frobenius(x.as_ref()).max(1e-300)
}

#[test]
fn sequential_columns_match_their_formulas() {
    let mut r = rng(10);
    let sys = random_system(&mut r, 6, 1, 1, 1);
    let p = [0.4];
    let shifts = random_shifts(&mut r, 3);
    let spec = InterpolationSpec::siso(shifts.clone(), 0.4);
    let ev = sys.evaluate(&p).unwrap();
    let n1 = &ev.n.blocks()[0];

    let v = build_v_sequential(&sys, &spec).unwrap();
    let mut expected = pencil_inverse(&sys, &p, shifts[0]) * &ev.b;
    for (k, blk) in v.iter().enumerate() {
        if k > 0 {
            expected = pencil_inverse(&sys, &p, shifts[k]) * (n1 * &expected);
        }
        assert!(rel_diff(&expected, &blk.matrix) <= 1e-12, "V_{}", k + 1);
    }

    let w = build_w_sequential(&sys, &spec).unwrap();
    let q = shifts.len();
    let mut expected = pencil_inverse(&sys, &p, shifts[q - 1]).transpose() * ev.c.transpose();
    for (k, blk) in w.iter().enumerate() {
        if k > 0 {
            expected = pencil_inverse(&sys, &p, shifts[q - 1 - k]).transpose() * (n1.transpose() * &expected);
        }
        assert!(rel_diff(&expected, &blk.matrix) <= 1e-12, "W_{}", k + 1);
    }
}

#[test]
fn assembled_bases_are_orthonormal_and_preserve_spans() {
    let mut r = rng(11);
    let sys = random_system(&mut r, 12, 2, 2, 2);
    let mut spec = InterpolationSpec::siso(random_shifts(&mut r, 2), vec![0.3, 0.6]).with_ordering(OrderingMode::AllOrderings);
    spec.b = unit_direction(&mut r, 2);
    spec.c = unit_direction(&mut r, 2);
    let opts = AssemblyOptions { trunc_tol: 0.0, ..Default::default() };
    let basis = build_global_basis(&sys, std::slice::from_ref(&spec), &opts).unwrap();
    for q in [&basis.v, &basis.w] {
        let gram = q.adjoint() * q;
        assert!(frobenius((&gram - identity(q.ncols())).as_ref()) <= 1e-12);
    }
    for blk in build_all_orderings(&sys, &spec).unwrap() {
        let side = match blk.record.kind {
            pbmor::basis::BlockKind::Right => &basis.v,
            pbmor::basis::BlockKind::Left => &basis.w,
        };
        // Realification keeps real and imaginary parts, so the complex block is in the span.
        assert!(span_residual(side, &blk.matrix) <= 1e-10, "{:?} level {}", blk.record.kind, blk.record.level);
    }
}

#[test]
fn sequential_blocks_lie_in_all_orderings_span() {
    let mut r = rng(12);
    let sys = random_system(&mut r, 14, 1, 1, 1);
    let shifts = random_shifts(&mut r, 3);
    let seq = InterpolationSpec::siso(shifts.clone(), 0.5);
    let all = seq.clone().with_ordering(OrderingMode::AllOrderings);
    let opts = AssemblyOptions { trunc_tol: 0.0, sidedness: Sidedness::TwoSided, ..Default::default() };
    let big = build_global_basis(&sys, &[all], &opts).unwrap();
    for blk in build_v_sequential(&sys, &seq).unwrap() {
        assert!(span_residual(&big.v, &blk.matrix) <= 1e-10);
    }
    for blk in build_w_sequential(&sys, &seq).unwrap() {
        assert!(span_residual(&big.w, &blk.matrix) <= 1e-10);
    }
}

#[test]
fn identity_projection_reproduces_every_subsystem() {
    let mut r = rng(13);
    let sys = random_system(&mut r, 5, 2, 1, 2);
    let id = identity(5);
    let rsys = reduce(&sys, &ReductionBasis::from_matrices(id.clone(), id).unwrap()).unwrap();
    for _ in 0..20 {
        let p = random_point(&mut r, 2);
        for k in 1..=3 {
            let s = random_shifts(&mut r, k);
            let full = eval_hk_full(&sys, &s, &p).unwrap();
            let red = eval_hk_full(&rsys, &s, &p).unwrap();
            assert!(rel_diff(&full, &red) <= 1e-12);
        }
    }
}

#[test]
fn online_evaluation_matches_projecting_evaluated_matrices() {
    let mut r = rng(14);
    let sys = random_system(&mut r, 10, 1, 1, 3);
    let spec = InterpolationSpec::siso(random_shifts(&mut r, 2), vec![0.5, 0.5, 0.5]);
    let basis = build_global_basis(&sys, &[spec], &AssemblyOptions::default()).unwrap();
    let rsys = reduce(&sys, &basis).unwrap();
    let wt = basis.w.transpose();
    for _ in 0..100 {
        let p = random_point(&mut r, 3);
        let full = sys.evaluate(&p).unwrap();
        let online = online_evaluate(&rsys, &p).unwrap();
        let pairs = [
            (wt * (&full.e * &basis.v), online.e.clone()),
            (wt * (&full.a * &basis.v), online.a.clone()),
            (wt * (&full.n.blocks()[0] * &basis.v), online.n.blocks()[0].clone()),
            (wt * &full.b, online.b.clone()),
            (&full.c * &basis.v, online.c.clone()),
        ];
        for (offline, on) in pairs {
            let scale = frobenius(offline.as_ref()).max(1.0);
            assert!(pbmor::kernels::max_abs((&offline - &on).as_ref()) <= 1e-13 * scale);
        }
    }
}

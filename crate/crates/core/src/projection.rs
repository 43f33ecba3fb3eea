//! Petrov-Galerkin projection with an offline/online split.
//!
//! Every affine term is projected once (`Wᵀ M_i V`); online evaluation only
//! recombines `r × r` matrices with the shared coefficient functions.

use std::sync::Arc;

use crate::basis::ReductionBasis;
use crate::error::{Error, Result};
use crate::kernels::{rcond_estimate, RCOND_THRESHOLD};
use crate::system::{EvaluatedSystem, ParametricBilinearSystem, ReducedBilinearSystem};

/// `Ẽ = WᵀEV`, `Ã = WᵀAV`, `Ñ_j = WᵀN_jV`, `B̃ = WᵀB`, `C̃ = CV`, term by term.
///
/// Fails with `IllPosedReduction` when `Ẽ` is singular at any parameter
/// sample recorded in the basis provenance.
pub fn reduce(sys: &ParametricBilinearSystem, basis: &ReductionBasis) -> Result<ReducedBilinearSystem> {
    let (v, w) = (&basis.v, &basis.w);
    let n = sys.dims().n;
    if v.nrows() != n || w.nrows() != n || v.ncols() != w.ncols() {
        return Err(Error::Dimension(format!(
            "basis V is {}x{}, W is {}x{} for a system of order {n}",
            v.nrows(),
            v.ncols(),
            w.nrows(),
            w.ncols()
        )));
    }
    let wt = w.transpose().to_owned();
    let reduced = sys.map_parts(format!("{}-reduced-{}", sys.name(), v.ncols()), |m| &wt * (m * v), |m| &wt * m, |m| m * v)?;
    for spec in &basis.provenance.specs {
        let p = spec.p_hat.as_slice();
        let e = reduced.e().evaluate(p)?;
        let rcond = rcond_estimate(&e);
        if rcond < RCOND_THRESHOLD {
            return Err(Error::IllPosedReduction { point: p.to_vec(), rcond });
        }
    }
    ReducedBilinearSystem::new(reduced, sys.dims(), Some(Arc::new(basis.provenance.clone())))
}

/// Reduced matrices at `p`, assembled from the projected terms only.
pub fn online_evaluate(rsys: &ReducedBilinearSystem, p: &[f64]) -> Result<EvaluatedSystem> {
    rsys.system().evaluate(p)
}

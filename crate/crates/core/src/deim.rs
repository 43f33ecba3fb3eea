//! POD compression and Q-DEIM interpolation of parameter-dependent vectors.

use std::fs;
use std::path::{Path, PathBuf};

use faer::prelude::*;
use faer::Mat;
use serde::{Deserialize, Serialize};

use crate::c64;
use crate::error::{Error, Result};
use crate::kernels::{column, frobenius, pivoted_qr_rows, CMat};
use crate::mtx::{read_mtx, write_mtx_array};

/// Default relative singular-value cutoff for the POD basis.
pub const DEFAULT_POD_TOL: f64 = 1e-5;
/// Default number of random parameter draws used as snapshots.
pub const DEFAULT_SNAPSHOTS: usize = 200;

/// Leading left singular vectors of `snapshots` with `σ > tol · σ_max`.
pub fn pod_basis(snapshots: &CMat, tol: f64) -> Result<(CMat, Vec<f64>)> {
    if snapshots.ncols() == 0 || frobenius(snapshots.as_ref()) == 0.0 {
        return Err(Error::EmptyBasis);
    }
    let svd = snapshots.thin_svd().map_err(|e| Error::Eigen(format!("svd: {e:?}")))?;
    let s: Vec<f64> = (0..svd.S().dim()).map(|i| svd.S()[i].re).collect();
    let smax = s[0];
    let m = s.iter().take_while(|&&v| v > tol * smax).count();
    Ok((svd.U().subcols(0, m).to_owned(), s))
}

/// Q-DEIM rows: pivots of a column-pivoted QR of `Uᵀ`.
pub fn qdeim_select(u: &CMat) -> Result<Vec<usize>> {
    pivoted_qr_rows(u)
}

/// A fitted DEIM approximation `b ≈ U (SᵀU)^{-1} Sᵀ b`.
#[derive(Debug, Clone)]
pub struct DeimModel {
    u: CMat,
    rows: Vec<usize>,
    pod_singular_values: Vec<f64>,
    /// `(SᵀU)^{-1}`.
    interp: CMat,
    /// `Wᵀ U (SᵀU)^{-1}` once a projection basis is attached.
    reduced_factor: Option<CMat>,
}

impl DeimModel {
    pub fn from_basis(u: CMat, pod_singular_values: Vec<f64>) -> Result<Self> {
        let rows = qdeim_select(&u)?;
        let m = rows.len();
        let sel = Mat::from_fn(m, m, |i, j| u[(rows[i], j)]);
        let interp = sel.partial_piv_lu().solve(Mat::<c64>::identity(m, m));
        Ok(Self { u, rows, pod_singular_values, interp, reduced_factor: None })
    }

    /// POD of the snapshots followed by Q-DEIM row selection.
    pub fn fit(snapshots: &CMat, tol: f64) -> Result<Self> {
        let (u, s) = pod_basis(snapshots, tol)?;
        Self::from_basis(u, s)
    }

    pub fn basis(&self) -> &CMat {
        &self.u
    }

    pub fn rows(&self) -> &[usize] {
        &self.rows
    }

    pub fn order(&self) -> usize {
        self.rows.len()
    }

    pub fn pod_singular_values(&self) -> &[f64] {
        &self.pod_singular_values
    }

    /// `(SᵀU)^{-1}`, mapping selected entries to basis coefficients.
    pub fn interpolation_matrix(&self) -> &CMat {
        &self.interp
    }

    /// Basis coefficients `θ = (SᵀU)^{-1} g`.
    pub fn coefficients(&self, selected: &[c64]) -> Result<CMat> {
        if selected.len() != self.order() {
            return Err(Error::Dimension(format!("{} selected entries for a DEIM model of order {}", selected.len(), self.order())));
        }
        Ok(&self.interp * column(selected))
    }

    /// `U (SᵀU)^{-1} g`, where `g` holds the entries of `b(p)` at [`rows`](Self::rows).
    pub fn approximate(&self, selected: &[c64]) -> Result<CMat> {
        Ok(&self.u * self.coefficients(selected)?)
    }

    /// Convenience: approximate a full vector from its selected entries.
    pub fn approximate_full(&self, b: &CMat) -> Result<CMat> {
        let g: Vec<c64> = self.rows.iter().map(|&i| b[(i, 0)]).collect();
        self.approximate(&g)
    }

    /// Precomputes `Wᵀ U (SᵀU)^{-1}`.
    pub fn attach_basis(&mut self, w: &CMat) -> Result<()> {
        if w.nrows() != self.u.nrows() {
            return Err(Error::Dimension(format!("W has {} rows, DEIM basis has {}", w.nrows(), self.u.nrows())));
        }
        self.reduced_factor = Some(w.transpose() * &self.u * &self.interp);
        Ok(())
    }

    /// `Wᵀ b(p)` approximated from the selected entries alone.
    pub fn approximate_reduced(&self, selected: &[c64]) -> Result<CMat> {
        let f = self.reduced_factor.as_ref().ok_or_else(|| Error::InvalidSpec("no projection basis attached".into()))?;
        if selected.len() != self.order() {
            return Err(Error::Dimension(format!("{} selected entries for a DEIM model of order {}", selected.len(), self.order())));
        }
        Ok(f * column(selected))
    }

    /// Writes `<stem>_U.mtx` and `<stem>.json`.
    pub fn save(&self, dir: &Path, stem: &str) -> Result<PathBuf> {
        fs::create_dir_all(dir)?;
        let u_file = format!("{stem}_U.mtx");
        write_mtx_array(&dir.join(&u_file), &self.u)?;
        let meta = DeimSidecar { basis: u_file, rows: self.rows.clone(), pod_singular_values: self.pod_singular_values.clone() };
        let path = dir.join(format!("{stem}.json"));
        fs::write(&path, serde_json::to_string_pretty(&meta)?)?;
        Ok(path)
    }

    pub fn load(sidecar: &Path) -> Result<Self> {
        let meta: DeimSidecar = serde_json::from_str(&fs::read_to_string(sidecar)?)?;
        let u = read_mtx(&sidecar.parent().unwrap_or(Path::new(".")).join(&meta.basis))?;
        let m = meta.rows.len();
        if m != u.ncols() || meta.rows.iter().any(|&r| r >= u.nrows()) {
            return Err(Error::Parse("DEIM sidecar rows do not match the basis".into()));
        }
        let sel = Mat::from_fn(m, m, |i, j| u[(meta.rows[i], j)]);
        let interp = sel.partial_piv_lu().solve(Mat::<c64>::identity(m, m));
        Ok(Self { u, rows: meta.rows, pod_singular_values: meta.pod_singular_values, interp, reduced_factor: None })
    }
}

#[derive(Serialize, Deserialize)]
struct DeimSidecar {
    basis: String,
    rows: Vec<usize>,
    pod_singular_values: Vec<f64>,
}

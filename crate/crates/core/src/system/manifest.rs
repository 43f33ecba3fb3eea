//! JSON manifest plus Matrix Market files for parametric systems.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{AffineMatrix, AffineTerm, CoefficientRegistry, ParamBox, ParametricBilinearSystem};
use crate::error::{Error, Result};
use crate::mtx::{read_mtx, write_mtx_coordinate};

pub const FORMAT: &str = "pbmor-system/1";

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TermEntry {
    pub coefficient: String,
    pub matrix: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MatrixEntry {
    /// Matrix Market file of the constant part, or `null` for zero.
    pub constant: Option<String>,
    #[serde(default)]
    pub terms: Vec<TermEntry>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SystemManifest {
    pub format: String,
    pub name: String,
    pub n: usize,
    pub m: usize,
    pub l: usize,
    pub nu: usize,
    #[serde(rename = "E")]
    pub e: MatrixEntry,
    #[serde(rename = "A")]
    pub a: MatrixEntry,
    #[serde(rename = "N")]
    pub n_terms: Vec<MatrixEntry>,
    #[serde(rename = "B")]
    pub b: MatrixEntry,
    #[serde(rename = "C")]
    pub c: MatrixEntry,
    #[serde(default)]
    pub parameter_box: Option<ParamBox>,
}

/// Writes `<dir>/<stem>.json` and one coordinate file per matrix.
/// Returns the manifest path.
pub fn save_system(sys: &ParametricBilinearSystem, dir: &Path, stem: &str) -> Result<PathBuf> {
    fs::create_dir_all(dir)?;
    let write = |label: &str, m: &AffineMatrix| -> Result<MatrixEntry> {
        let constant_name = format!("{stem}_{label}0.mtx");
        write_mtx_coordinate(&dir.join(&constant_name), m.constant_term())?;
        let mut terms = Vec::new();
        for (i, t) in m.terms().iter().enumerate() {
            let name = format!("{stem}_{label}{}.mtx", i + 1);
            write_mtx_coordinate(&dir.join(&name), &t.matrix)?;
            terms.push(TermEntry { coefficient: t.coefficient.tag().to_string(), matrix: name });
        }
        Ok(MatrixEntry { constant: Some(constant_name), terms })
    };
    let d = sys.dims();
    let manifest = SystemManifest {
        format: FORMAT.to_string(),
        name: sys.name().to_string(),
        n: d.n,
        m: d.m,
        l: d.l,
        nu: d.nu,
        e: write("E", sys.e())?,
        a: write("A", sys.a())?,
        n_terms: sys.n().iter().enumerate().map(|(j, m)| write(&format!("N{}_", j + 1), m)).collect::<Result<_>>()?,
        b: write("B", sys.b())?,
        c: write("C", sys.c())?,
        parameter_box: sys.param_box().cloned(),
    };
    let path = dir.join(format!("{stem}.json"));
    fs::write(&path, serde_json::to_string_pretty(&manifest)?)?;
    Ok(path)
}

/// Loads a manifest. Coefficient tags are resolved through `registry`.
pub fn load_system(path: &Path, registry: &CoefficientRegistry) -> Result<ParametricBilinearSystem> {
    let manifest: SystemManifest = serde_json::from_str(&fs::read_to_string(path)?)?;
    if manifest.format != FORMAT {
        return Err(Error::Parse(format!("unsupported manifest format `{}`", manifest.format)));
    }
    let dir = path.parent().unwrap_or(Path::new("."));
    let load = |entry: &MatrixEntry, rows: usize, cols: usize| -> Result<AffineMatrix> {
        let constant = match &entry.constant {
            Some(f) => read_mtx(&dir.join(f))?,
            None => faer::Mat::zeros(rows, cols),
        };
        let terms = entry
            .terms
            .iter()
            .map(|t| Ok(AffineTerm { coefficient: registry.resolve(&t.coefficient)?, matrix: read_mtx(&dir.join(&t.matrix))? }))
            .collect::<Result<_>>()?;
        AffineMatrix::new(constant, terms)
    };
    let (n, m, l) = (manifest.n, manifest.m, manifest.l);
    let sys = ParametricBilinearSystem::new(
        manifest.name.clone(),
        manifest.nu,
        load(&manifest.e, n, n)?,
        load(&manifest.a, n, n)?,
        manifest.n_terms.iter().map(|e| load(e, n, n)).collect::<Result<_>>()?,
        load(&manifest.b, n, m)?,
        load(&manifest.c, l, n)?,
    )?;
    let d = sys.dims();
    if (d.n, d.m, d.l) != (n, m, l) {
        return Err(Error::Dimension(format!("manifest declares ({n}, {m}, {l}), files give ({}, {}, {})", d.n, d.m, d.l)));
    }
    match manifest.parameter_box {
        Some(b) => sys.with_param_box(b),
        None => Ok(sys),
    }
}

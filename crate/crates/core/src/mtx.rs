//! Matrix Market reader and writer.
//!
//! Reads `coordinate` and `array` files with `real`, `integer`, `complex` or
//! `pattern` fields and `general`, `symmetric`, `skew-symmetric` or
//! `hermitian` symmetry. Everything is densified.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use faer::Mat;

use crate::c64;
use crate::error::{Error, Result};
use crate::kernels::{relative_imag, CMat, DEMOTE_TOL};

#[derive(Clone, Copy, PartialEq)]
enum Field {
    Real,
    Complex,
    Pattern,
}

#[derive(Clone, Copy, PartialEq)]
enum Symmetry {
    General,
    Symmetric,
    Skew,
    Hermitian,
}

pub fn read_mtx(path: &Path) -> Result<CMat> {
    let text = fs::read_to_string(path)?;
    parse_mtx(&text).map_err(|msg| Error::MatrixMarket { path: path.to_path_buf(), msg })
}

pub fn parse_mtx(text: &str) -> std::result::Result<CMat, String> {
    let mut lines = text.lines();
    let header = lines.next().ok_or("empty file")?;
    let words: Vec<String> = header.split_whitespace().map(str::to_ascii_lowercase).collect();
    if words.len() != 5 || words[0] != "%%matrixmarket" || words[1] != "matrix" {
        return Err(format!("bad header `{header}`"));
    }
    let coordinate = match words[2].as_str() {
        "coordinate" => true,
        "array" => false,
        other => return Err(format!("unsupported format `{other}`")),
    };
    let field = match words[3].as_str() {
        "real" | "integer" | "double" => Field::Real,
        "complex" => Field::Complex,
        "pattern" if coordinate => Field::Pattern,
        other => return Err(format!("unsupported field `{other}`")),
    };
    let symmetry = match words[4].as_str() {
        "general" => Symmetry::General,
        "symmetric" => Symmetry::Symmetric,
        "skew-symmetric" => Symmetry::Skew,
        "hermitian" => Symmetry::Hermitian,
        other => return Err(format!("unsupported symmetry `{other}`")),
    };
    let mut body = lines.map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('%'));
    let size_line = body.next().ok_or("missing size line")?;
    let sizes: Vec<usize> = size_line
        .split_whitespace()
        .map(|t| t.parse().map_err(|_| format!("bad size line `{size_line}`")))
        .collect::<std::result::Result<_, _>>()?;
    let (rows, cols) = match sizes.as_slice() {
        [r, c, _] if coordinate => (*r, *c),
        [r, c] if !coordinate => (*r, *c),
        _ => return Err(format!("bad size line `{size_line}`")),
    };
    let mut out: CMat = Mat::zeros(rows, cols);
    let mut place = |i: usize, j: usize, v: c64| {
        out[(i, j)] = v;
        if i != j {
            match symmetry {
                Symmetry::General => {}
                Symmetry::Symmetric => out[(j, i)] = v,
                Symmetry::Skew => out[(j, i)] = -v,
                Symmetry::Hermitian => out[(j, i)] = v.conj(),
            }
        }
    };
    let parse_value = |toks: &[&str]| -> std::result::Result<c64, String> {
        let num = |t: &str| t.parse::<f64>().map_err(|_| format!("bad number `{t}`"));
        match field {
            Field::Pattern => Ok(c64::new(1.0, 0.0)),
            Field::Real => Ok(c64::new(num(toks.first().ok_or("missing value")?)?, 0.0)),
            Field::Complex => {
                if toks.len() < 2 {
                    return Err("complex entry needs two numbers".into());
                }
                Ok(c64::new(num(toks[0])?, num(toks[1])?))
            }
        }
    };
    if coordinate {
        let nnz = sizes[2];
        for k in 0..nnz {
            let line = body.next().ok_or_else(|| format!("expected {nnz} entries, found {k}"))?;
            let toks: Vec<&str> = line.split_whitespace().collect();
            if toks.len() < 2 {
                return Err(format!("bad entry `{line}`"));
            }
            let i: usize = toks[0].parse().map_err(|_| format!("bad row `{}`", toks[0]))?;
            let j: usize = toks[1].parse().map_err(|_| format!("bad column `{}`", toks[1]))?;
            if i == 0 || j == 0 || i > rows || j > cols {
                return Err(format!("entry ({i}, {j}) out of range"));
            }
            place(i - 1, j - 1, parse_value(&toks[2..])?);
        }
    } else {
        // Column-major; symmetric variants list the lower triangle only.
        for j in 0..cols {
            let start = if symmetry == Symmetry::General { 0 } else { j };
            for i in start..rows {
                if symmetry == Symmetry::Skew && i == j {
                    continue;
                }
                let line = body.next().ok_or("array file ended early")?;
                let toks: Vec<&str> = line.split_whitespace().collect();
                place(i, j, parse_value(&toks)?);
            }
        }
    }
    Ok(out)
}

fn is_real(m: &CMat) -> bool {
    relative_imag(m.as_ref()) <= DEMOTE_TOL || m.nrows() * m.ncols() == 0
}

fn fmt_entry(v: c64, real: bool) -> String {
    if real {
        format!("{:.17e}", v.re)
    } else {
        format!("{:.17e} {:.17e}", v.re, v.im)
    }
}

/// Writes a dense `array` file (real when the imaginary part is negligible).
pub fn write_mtx_array(path: &Path, m: &CMat) -> Result<()> {
    let real = is_real(m);
    let mut w = BufWriter::new(fs::File::create(path)?);
    writeln!(w, "%%MatrixMarket matrix array {} general", if real { "real" } else { "complex" })?;
    writeln!(w, "{} {}", m.nrows(), m.ncols())?;
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            writeln!(w, "{}", fmt_entry(m[(i, j)], real))?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Writes the nonzero entries as a `coordinate` file.
pub fn write_mtx_coordinate(path: &Path, m: &CMat) -> Result<()> {
    let real = is_real(m);
    let mut entries = Vec::new();
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            let v = m[(i, j)];
            if v.re != 0.0 || (!real && v.im != 0.0) {
                entries.push((i, j, v));
            }
        }
    }
    let mut w = BufWriter::new(fs::File::create(path)?);
    writeln!(w, "%%MatrixMarket matrix coordinate {} general", if real { "real" } else { "complex" })?;
    writeln!(w, "{} {} {}", m.nrows(), m.ncols(), entries.len())?;
    for (i, j, v) in entries {
        writeln!(w, "{} {} {}", i + 1, j + 1, fmt_entry(v, real))?;
    }
    w.flush()?;
    Ok(())
}

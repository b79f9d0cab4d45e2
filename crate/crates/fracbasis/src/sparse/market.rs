//! Matrix Market (coordinate, real) import/export plus plain text vectors,
//! one value per line. Symmetric files store the lower triangle only; the
//! reader mirrors it, the writer emits it.

use crate::error::{Error, Result};
use crate::sparse::CsrMatrix;
use std::io::{BufRead, BufWriter, Write};
use std::path::Path;

pub fn read_matrix(path: &Path) -> Result<CsrMatrix> {
    let file = std::fs::File::open(path)?;
    let mut lines = std::io::BufReader::new(file).lines();

    let header = lines
        .next()
        .ok_or_else(|| Error::Parse(format!("{}: empty file", path.display())))??;
    let tokens: Vec<&str> = header.split_whitespace().collect();
    if tokens.len() < 5 || !tokens[0].eq_ignore_ascii_case("%%MatrixMarket") {
        return Err(Error::Parse(format!(
            "{}: missing MatrixMarket header",
            path.display()
        )));
    }
    if !tokens[1].eq_ignore_ascii_case("matrix") || !tokens[2].eq_ignore_ascii_case("coordinate") {
        return Err(Error::Unsupported(
            "only coordinate-format matrices are supported".into(),
        ));
    }
    if !tokens[3].eq_ignore_ascii_case("real") && !tokens[3].eq_ignore_ascii_case("integer") {
        return Err(Error::Unsupported(format!(
            "unsupported field type `{}`",
            tokens[3]
        )));
    }
    let symmetric = match tokens[4].to_ascii_lowercase().as_str() {
        "general" => false,
        "symmetric" => true,
        other => {
            return Err(Error::Unsupported(format!(
                "unsupported symmetry `{other}`"
            )))
        }
    };

    let mut size_line = None;
    for line in lines.by_ref() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('%') {
            continue;
        }
        size_line = Some(line);
        break;
    }
    let size_line =
        size_line.ok_or_else(|| Error::Parse(format!("{}: missing size line", path.display())))?;
    let dims: Vec<usize> = size_line
        .split_whitespace()
        .map(|t| t.parse::<usize>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| Error::Parse(format!("{}: bad size line: {e}", path.display())))?;
    if dims.len() != 3 {
        return Err(Error::Parse(format!(
            "{}: size line needs rows cols nnz",
            path.display()
        )));
    }
    let (nrows, ncols, nnz) = (dims[0], dims[1], dims[2]);

    let mut triplets = Vec::with_capacity(if symmetric { 2 * nnz } else { nnz });
    for line in lines {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('%') {
            continue;
        }
        let mut it = trimmed.split_whitespace();
        let r: usize = it
            .next()
            .ok_or_else(|| Error::Parse("missing row index".into()))?
            .parse()
            .map_err(|e| Error::Parse(format!("bad row index: {e}")))?;
        let c: usize = it
            .next()
            .ok_or_else(|| Error::Parse("missing col index".into()))?
            .parse()
            .map_err(|e| Error::Parse(format!("bad col index: {e}")))?;
        let v: f64 = it
            .next()
            .ok_or_else(|| Error::Parse("missing value".into()))?
            .parse()
            .map_err(|e| Error::Parse(format!("bad value: {e}")))?;
        if r == 0 || c == 0 {
            return Err(Error::Parse("Matrix Market indices are 1-based".into()));
        }
        triplets.push((r - 1, c - 1, v));
        if symmetric && r != c {
            triplets.push((c - 1, r - 1, v));
        }
    }
    if triplets.len() < nnz {
        return Err(Error::Parse(format!(
            "{}: expected {} entries, found {}",
            path.display(),
            nnz,
            triplets.len().min(nnz)
        )));
    }
    CsrMatrix::from_triplets(nrows, ncols, &triplets)
}

/// Writes the matrix in coordinate format. Symmetric matrices are detected
/// and stored as their lower triangle.
pub fn write_matrix(path: &Path, a: &CsrMatrix) -> Result<()> {
    let symmetric = a.nrows() == a.ncols() && a.is_symmetric(1e-12);
    let file = std::fs::File::create(path)?;
    let mut w = BufWriter::new(file);
    let kind = if symmetric { "symmetric" } else { "general" };
    writeln!(w, "%%MatrixMarket matrix coordinate real {kind}")?;
    let mut entries: Vec<(usize, usize, f64)> = Vec::new();
    for r in 0..a.nrows() {
        for (c, v) in a.row(r) {
            if symmetric && c > r {
                continue;
            }
            entries.push((r, c, v));
        }
    }
    writeln!(w, "{} {} {}", a.nrows(), a.ncols(), entries.len())?;
    for (r, c, v) in entries {
        writeln!(w, "{} {} {:.16e}", r + 1, c + 1, v)?;
    }
    Ok(())
}

pub fn read_vector(path: &Path) -> Result<Vec<f64>> {
    let file = std::fs::File::open(path)?;
    let mut out = Vec::new();
    for line in std::io::BufReader::new(file).lines() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('%') || trimmed.starts_with('#') {
            continue;
        }
        out.push(
            trimmed
                .parse::<f64>()
                .map_err(|e| Error::Parse(format!("{}: bad value `{trimmed}`: {e}", path.display())))?,
        );
    }
    if out.is_empty() {
        return Err(Error::Parse(format!("{}: empty vector", path.display())));
    }
    Ok(out)
}

pub fn write_vector(path: &Path, v: &[f64]) -> Result<()> {
    let file = std::fs::File::create(path)?;
    let mut w = BufWriter::new(file);
    for x in v {
        writeln!(w, "{x:.16e}")?;
    }
    Ok(())
}

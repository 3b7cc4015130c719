//! Parsing and writing of kernels, graphs, and marginal vectors.
//!
//! Kernels arrive as MatrixMarket (dense `array` or sparse `coordinate`,
//! `real`, `general` or `symmetric`) or as plain CSV rows; graphs as a
//! `V E` header line followed by `u v [weight]` edge lines, 0-indexed.
//! Errors carry 1-based line numbers.

use crate::dpp::KernelMatrix;
use crate::error::{Error, Result};
use crate::scalar::{from_f64, Real};
use crate::spanning_tree::WeightedGraph;
use std::fmt::Write as _;

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

/// Numbered content lines: blank lines and `%`/`#` comments skipped, except
/// that a leading `%%MatrixMarket` banner is significant and kept by the
/// kernel parser before this runs.
fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().filter_map(|(i, raw)| {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('%') || line.starts_with('#') {
            None
        } else {
            Some((i + 1, line))
        }
    })
}

fn parse_float<R: Real>(token: &str, line: usize) -> Result<R> {
    let value: f64 = token
        .parse()
        .map_err(|_| parse_err(line, format!("expected a number, got {token:?}")))?;
    Ok(from_f64(value))
}

fn parse_index(token: &str, line: usize) -> Result<usize> {
    token
        .parse()
        .map_err(|_| parse_err(line, format!("expected an index, got {token:?}")))
}

/// Parses a kernel matrix, auto-detecting the format: a `%%MatrixMarket`
/// banner selects MatrixMarket, anything else is read as CSV rows.
///
/// # Errors
/// `Parse` with a 1-based line number; `NotSymmetric` when the assembled
/// matrix is not symmetric.
pub fn parse_kernel<R: Real>(text: &str) -> Result<KernelMatrix<R>> {
    let first = text.lines().next().unwrap_or("").trim();
    if let Some(banner) = first.strip_prefix("%%MatrixMarket") {
        parse_matrix_market(text, banner)
    } else {
        parse_kernel_csv(text)
    }
}

fn parse_matrix_market<R: Real>(text: &str, banner: &str) -> Result<KernelMatrix<R>> {
    let tokens: Vec<&str> = banner.split_whitespace().collect();
    let [object, format, field, symmetry] = tokens.as_slice() else {
        return Err(parse_err(
            1,
            "MatrixMarket banner needs object, format, field, and symmetry",
        ));
    };
    if *object != "matrix" {
        return Err(parse_err(1, format!("unsupported object {object:?}")));
    }
    if *field != "real" {
        return Err(parse_err(1, format!("unsupported field {field:?}")));
    }
    let symmetric = match *symmetry {
        "symmetric" => true,
        "general" => false,
        other => return Err(parse_err(1, format!("unsupported symmetry {other:?}"))),
    };

    // The banner line is a comment to content_lines; everything that
    // survives is the size line plus data.
    let mut lines = content_lines(text);
    let (size_line, size) = lines
        .next()
        .ok_or_else(|| parse_err(1, "missing size line"))?;
    let dims: Vec<&str> = size.split_whitespace().collect();

    match *format {
        "array" => {
            let [rows, cols] = dims.as_slice() else {
                return Err(parse_err(size_line, "array size line needs 'rows cols'"));
            };
            let n = parse_index(rows, size_line)?;
            if parse_index(cols, size_line)? != n {
                return Err(parse_err(size_line, "kernel matrices must be square"));
            }
            let mut entries = vec![R::zero(); n * n];
            // Column-major; symmetric storage lists only the lower triangle.
            let mut coords = Vec::with_capacity(if symmetric {
                n * (n + 1) / 2
            } else {
                n * n
            });
            for j in 0..n {
                let start = if symmetric { j } else { 0 };
                for i in start..n {
                    coords.push((i, j));
                }
            }
            let mut filled = 0;
            let mut last_line = size_line;
            for (line, content) in lines {
                for token in content.split_whitespace() {
                    if filled == coords.len() {
                        return Err(parse_err(line, "more entries than the size line allows"));
                    }
                    let v: R = parse_float(token, line)?;
                    let (i, j) = coords[filled];
                    entries[i * n + j] = v;
                    if symmetric {
                        entries[j * n + i] = v;
                    }
                    filled += 1;
                }
                last_line = line;
            }
            if filled != coords.len() {
                return Err(parse_err(
                    last_line,
                    format!("expected {} entries, got {filled}", coords.len()),
                ));
            }
            KernelMatrix::from_flat(n, entries)
        }
        "coordinate" => {
            let [rows, cols, nnz] = dims.as_slice() else {
                return Err(parse_err(
                    size_line,
                    "coordinate size line needs 'rows cols nnz'",
                ));
            };
            let n = parse_index(rows, size_line)?;
            if parse_index(cols, size_line)? != n {
                return Err(parse_err(size_line, "kernel matrices must be square"));
            }
            let nnz = parse_index(nnz, size_line)?;
            let mut entries = vec![R::zero(); n * n];
            let mut seen = 0;
            let mut last_line = size_line;
            for (line, content) in lines {
                let fields: Vec<&str> = content.split_whitespace().collect();
                let [i, j, v] = fields.as_slice() else {
                    return Err(parse_err(line, "coordinate entries need 'i j value'"));
                };
                let i = parse_index(i, line)?;
                let j = parse_index(j, line)?;
                if i == 0 || j == 0 || i > n || j > n {
                    return Err(parse_err(line, "coordinate indices are 1-based and <= n"));
                }
                let v: R = parse_float(v, line)?;
                entries[(i - 1) * n + (j - 1)] = v;
                if symmetric {
                    entries[(j - 1) * n + (i - 1)] = v;
                }
                seen += 1;
                last_line = line;
            }
            if seen != nnz {
                return Err(parse_err(
                    last_line,
                    format!("size line promised {nnz} entries, got {seen}"),
                ));
            }
            KernelMatrix::from_flat(n, entries)
        }
        other => Err(parse_err(1, format!("unsupported format {other:?}"))),
    }
}

fn parse_kernel_csv<R: Real>(text: &str) -> Result<KernelMatrix<R>> {
    let mut rows: Vec<Vec<R>> = Vec::new();
    let mut width = None;
    for (line, content) in content_lines(text) {
        let row: Vec<R> = content
            .split(',')
            .map(|tok| parse_float(tok.trim(), line))
            .collect::<Result<_>>()?;
        match width {
            None => width = Some(row.len()),
            Some(w) if w != row.len() => {
                return Err(parse_err(
                    line,
                    format!("row has {} values, previous rows have {w}", row.len()),
                ));
            }
            _ => {}
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(parse_err(1, "no rows"));
    }
    if rows.len() != rows[0].len() {
        return Err(parse_err(
            rows.len(),
            format!("{} rows of {} columns is not square", rows.len(), rows[0].len()),
        ));
    }
    KernelMatrix::from_rows(rows)
}

/// Writes a kernel as CSV with shortest round-trip float formatting, so
/// parse(write(k)) reproduces k bit for bit.
pub fn write_kernel_csv<R: Real>(kernel: &KernelMatrix<R>) -> String {
    let n = kernel.n();
    let mut out = String::new();
    for i in 0..n {
        for j in 0..n {
            if j > 0 {
                out.push(',');
            }
            let _ = write!(out, "{}", kernel.get(i, j));
        }
        out.push('\n');
    }
    out
}

/// Parses a weighted graph: a `V E` header, then E lines `u v [weight]`
/// with 0-indexed endpoints and weights defaulting to 1. Repeated `u v`
/// lines become parallel edges.
///
/// # Errors
/// `Parse` with line numbers for structural problems,
/// `NonpositiveWeight` for weights <= 0, `Disconnected` when the edges do
/// not span.
pub fn parse_graph<R: Real>(text: &str) -> Result<WeightedGraph<R>> {
    let mut lines = content_lines(text);
    let (header_line, header) = lines
        .next()
        .ok_or_else(|| parse_err(1, "missing 'V E' header line"))?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    let [v, e] = fields.as_slice() else {
        return Err(parse_err(header_line, "header line needs 'V E'"));
    };
    let vertices = parse_index(v, header_line)?;
    let edge_count = parse_index(e, header_line)?;

    let mut edges = Vec::with_capacity(edge_count);
    let mut last_line = header_line;
    for (line, content) in lines {
        let fields: Vec<&str> = content.split_whitespace().collect();
        let (u, v, w) = match fields.as_slice() {
            [u, v] => (u, v, R::one()),
            [u, v, w] => {
                let w: R = parse_float(w, line)?;
                if !(w > R::zero()) || !w.is_finite() {
                    return Err(Error::NonpositiveWeight { line });
                }
                (u, v, w)
            }
            _ => return Err(parse_err(line, "edge lines need 'u v' or 'u v weight'")),
        };
        let u = parse_index(u, line)?;
        let v = parse_index(v, line)?;
        if u == v {
            return Err(parse_err(line, "self-loops are not allowed"));
        }
        if u >= vertices || v >= vertices {
            return Err(parse_err(
                line,
                format!("edge endpoint outside 0..{vertices}"),
            ));
        }
        edges.push((u, v, w));
        last_line = line;
    }
    if edges.len() != edge_count {
        return Err(parse_err(
            last_line,
            format!("header promised {edge_count} edges, got {}", edges.len()),
        ));
    }
    WeightedGraph::new(vertices, edges)
}

/// One value per line.
pub fn parse_marginals<R: Real>(text: &str) -> Result<Vec<R>> {
    content_lines(text)
        .map(|(line, content)| parse_float(content, line))
        .collect()
}

/// One value per line, shortest round-trip formatting.
pub fn write_marginals<R: Real>(values: &[R]) -> String {
    let mut out = String::new();
    for v in values {
        let _ = writeln!(out, "{v}");
    }
    out
}

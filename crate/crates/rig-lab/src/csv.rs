//! Minimal CSV emission: fixed headers, LF line endings, shortest
//! round-trip float formatting, one write per run.

use crate::error::{AppError, Result};
use std::fmt::Write as _;
use std::path::Path;

/// One CSV cell. Floats must be finite; empty cells mark values that are
/// undefined for the row (for example split bounds at beta = 0).
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    UInt(u64),
    Float(f64),
    Str(&'static str),
    Flag(bool),
    Empty,
}

impl Cell {
    fn render(&self, out: &mut String) -> Result<()> {
        match self {
            Cell::UInt(v) => write!(out, "{v}").expect("string write"),
            Cell::Float(v) => {
                if !v.is_finite() {
                    return Err(AppError::numeric(format!("refusing to write non-finite value {v} to CSV")));
                }
                write!(out, "{v}").expect("string write");
            }
            Cell::Str(s) => out.push_str(s),
            Cell::Flag(b) => out.push(if *b { '1' } else { '0' }),
            Cell::Empty => {}
        }
        Ok(())
    }
}

/// Renders header + rows into one buffer. Every row must match the header
/// width; the result always ends with a final newline.
pub fn render(header: &[&str], rows: &[Vec<Cell>]) -> Result<String> {
    let mut out = String::new();
    out.push_str(&header.join(","));
    out.push('\n');
    for (i, row) in rows.iter().enumerate() {
        if row.len() != header.len() {
            return Err(AppError::numeric(format!(
                "row {i} has {} cells but the header declares {}",
                row.len(),
                header.len()
            )));
        }
        for (j, cell) in row.iter().enumerate() {
            if j > 0 {
                out.push(',');
            }
            cell.render(&mut out)?;
        }
        out.push('\n');
    }
    Ok(out)
}

pub fn write_file(path: &Path, content: &str) -> Result<()> {
    std::fs::write(path, content)
        .map_err(|e| AppError::io(format!("cannot write {}: {e}", path.display())))
}

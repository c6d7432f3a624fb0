//! Plain-text file formats.
//!
//! Matrix: header `n N d seed`, then one line per column with its `d` row
//! indices. Weights: header `N scheme params`, then one weight per line.
//! Vectors: one value per line. Floats are written in shortest round-trip
//! form, so reading back reproduces the values exactly.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::graph::SparseBinaryMatrix;
use crate::weights::{WeightScheme, WeightVector};

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn write(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Non-blank lines with their 1-based line numbers.
fn lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty())
}

fn parse_err(path: &Path, line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        msg: msg.into(),
    }
}

fn parse_field<T: std::str::FromStr>(path: &Path, line: usize, token: &str, what: &str) -> Result<T> {
    token
        .parse()
        .map_err(|_| parse_err(path, line, format!("cannot parse {token:?} as {what}")))
}

pub fn format_matrix(a: &SparseBinaryMatrix) -> String {
    let mut out = format!("{} {} {} {}\n", a.n(), a.big_n(), a.d(), a.seed());
    for col in a.columns() {
        let row: Vec<String> = col.iter().map(usize::to_string).collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
    out
}

pub fn parse_matrix(text: &str, path: &Path) -> Result<SparseBinaryMatrix> {
    let mut it = lines(text);
    let (hl, header) = it.next().ok_or_else(|| parse_err(path, 1, "empty matrix file"))?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    if fields.len() != 4 {
        return Err(parse_err(path, hl, "header must be `n N d seed`"));
    }
    let n: usize = parse_field(path, hl, fields[0], "n")?;
    let big_n: usize = parse_field(path, hl, fields[1], "N")?;
    let d: usize = parse_field(path, hl, fields[2], "d")?;
    let seed: u64 = parse_field(path, hl, fields[3], "seed")?;
    let mut cols = Vec::with_capacity(big_n);
    for (ln, line) in it {
        let col = line
            .split_whitespace()
            .map(|t| parse_field(path, ln, t, "a row index"))
            .collect::<Result<Vec<usize>>>()?;
        if col.len() != d {
            return Err(parse_err(path, ln, format!("expected {d} row indices, found {}", col.len())));
        }
        cols.push(col);
    }
    if cols.len() != big_n {
        return Err(parse_err(path, hl, format!("header says N = {big_n} columns, found {}", cols.len())));
    }
    SparseBinaryMatrix::from_columns(n, cols)
        .map(|a| a.with_seed(seed))
        .map_err(|e| parse_err(path, hl, e.to_string()))
}

pub fn read_matrix(path: &Path) -> Result<SparseBinaryMatrix> {
    parse_matrix(&read(path)?, path)
}

pub fn write_matrix(a: &SparseBinaryMatrix, path: &Path) -> Result<()> {
    write(path, &format_matrix(a))
}

pub fn format_weights(w: &WeightVector) -> String {
    let params = match w.scheme() {
        WeightScheme::Uniform => "uniform".to_string(),
        WeightScheme::Polynomial { alpha } => format!("polynomial {alpha}"),
        WeightScheme::TwoLevel { w, support } => {
            let list: Vec<String> = support.iter().map(usize::to_string).collect();
            let list = if list.is_empty() { "-".to_string() } else { list.join(",") };
            format!("two_level {w} {list}")
        }
        WeightScheme::Custom => "custom".to_string(),
    };
    let mut out = format!("{} {params}\n", w.len());
    for v in w.omega() {
        writeln!(out, "{v}").expect("writing to a String cannot fail");
    }
    out
}

pub fn parse_weights(text: &str, path: &Path) -> Result<WeightVector> {
    let mut it = lines(text);
    let (hl, header) = it.next().ok_or_else(|| parse_err(path, 1, "empty weights file"))?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    let big_n: usize = parse_field(path, hl, fields[0], "N")?;
    let scheme = match fields.get(1..).unwrap_or(&[]) {
        ["uniform"] => WeightScheme::Uniform,
        ["polynomial", alpha] => WeightScheme::Polynomial {
            alpha: parse_field(path, hl, alpha, "alpha")?,
        },
        ["two_level", w, list] => {
            let support = if *list == "-" {
                Vec::new()
            } else {
                list.split(',')
                    .map(|t| parse_field(path, hl, t, "a support index"))
                    .collect::<Result<Vec<usize>>>()?
            };
            WeightScheme::TwoLevel {
                w: parse_field(path, hl, w, "w")?,
                support,
            }
        }
        ["custom"] => WeightScheme::Custom,
        _ => return Err(parse_err(path, hl, "header must be `N scheme params`")),
    };
    let omega = it
        .map(|(ln, t)| parse_field(path, ln, t, "a weight"))
        .collect::<Result<Vec<f64>>>()?;
    if omega.len() != big_n {
        return Err(parse_err(path, hl, format!("header says N = {big_n} weights, found {}", omega.len())));
    }
    WeightVector::from_parts(omega, scheme).map_err(|e| parse_err(path, hl, e.to_string()))
}

pub fn read_weights(path: &Path) -> Result<WeightVector> {
    parse_weights(&read(path)?, path)
}

pub fn write_weights(w: &WeightVector, path: &Path) -> Result<()> {
    write(path, &format_weights(w))
}

pub fn format_vector(v: &[f64]) -> String {
    v.iter().fold(String::new(), |mut out, x| {
        writeln!(out, "{x}").expect("writing to a String cannot fail");
        out
    })
}

pub fn parse_vector(text: &str, path: &Path) -> Result<Vec<f64>> {
    lines(text)
        .map(|(ln, t)| parse_field(path, ln, t, "a number"))
        .collect()
}

pub fn read_vector(path: &Path) -> Result<Vec<f64>> {
    parse_vector(&read(path)?, path)
}

pub fn write_vector(v: &[f64], path: &Path) -> Result<()> {
    write(path, &format_vector(v))
}

/// Indices, one per line (used for support files).
pub fn read_indices(path: &Path) -> Result<Vec<usize>> {
    lines(&read(path)?)
        .map(|(ln, t)| parse_field(path, ln, t, "an index"))
        .collect()
}

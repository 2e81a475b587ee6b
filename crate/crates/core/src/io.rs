//! JSON files holding one mm-space: `{"labels": [..], "weights": [..], "dist": [[..]]}`.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::space::{DistMatrix, FiniteMMSpace};

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSpace {
    labels: Vec<String>,
    weights: Vec<f64>,
    dist: Vec<Vec<f64>>,
}

/// Parses and validates a space from JSON text.
pub fn parse_space(text: &str) -> Result<FiniteMMSpace> {
    let raw: RawSpace = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    if raw.dist.len() != raw.weights.len() {
        return Err(Error::Parse(format!(
            "dist has {} rows, expected {}",
            raw.dist.len(),
            raw.weights.len()
        )));
    }
    let dist = DistMatrix::from_rows(&raw.dist)?;
    FiniteMMSpace::new(raw.labels, raw.weights, dist)
}

/// Parses without validating, so a broken space can still be inspected.
pub fn parse_space_unchecked(text: &str) -> Result<FiniteMMSpace> {
    let raw: RawSpace = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    let dist = DistMatrix::from_rows(&raw.dist)?;
    Ok(FiniteMMSpace::new_unchecked(raw.labels, raw.weights, dist))
}

pub fn read_space(path: impl AsRef<Path>) -> Result<FiniteMMSpace> {
    parse_space(&fs::read_to_string(path)?)
}

/// 17 significant digits, so every double round-trips.
fn num(x: f64) -> String {
    if x == 0.0 {
        "0.0".to_string()
    } else {
        format!("{x:.16e}")
    }
}

fn list(xs: &[f64]) -> String {
    let parts: Vec<String> = xs.iter().map(|&x| num(x)).collect();
    format!("[{}]", parts.join(", "))
}

/// Serialises a space; weights and distances use 17 significant digits.
pub fn space_to_json(space: &FiniteMMSpace) -> String {
    let labels = serde_json::to_string(space.labels()).expect("strings serialise");
    let mut out = String::new();
    writeln!(out, "{{").unwrap();
    writeln!(out, "  \"labels\": {labels},").unwrap();
    writeln!(out, "  \"weights\": {},", list(space.weights())).unwrap();
    writeln!(out, "  \"dist\": [").unwrap();
    let rows = space.dist().rows();
    for (i, row) in rows.iter().enumerate() {
        let sep = if i + 1 < rows.len() { "," } else { "" };
        writeln!(out, "    {}{sep}", list(row)).unwrap();
    }
    writeln!(out, "  ]").unwrap();
    writeln!(out, "}}").unwrap();
    out
}

pub fn write_space(path: impl AsRef<Path>, space: &FiniteMMSpace) -> Result<()> {
    fs::write(path, space_to_json(space))?;
    Ok(())
}

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use super::config::Family;
use super::run::CurvePoint;
use super::SweepError;

pub const CSV_HEADER: [&str; 10] = [
    "state", "r", "phi", "beta_sq", "F", "n_th", "n_in", "q_in", "g", "tau_c",
];

/// Shortest decimal string that parses back to the same `f64`.
pub fn format_number(x: f64) -> String {
    format!("{x}")
}

fn optional(x: Option<f64>) -> String {
    x.map(format_number).unwrap_or_default()
}

fn family_label(f: Family) -> &'static str {
    match f {
        Family::Squeezed => "squeezed",
        Family::Cat => "cat",
        Family::Fock => "fock",
    }
}

/// Writes the rows in the order given. Fields that do not apply to a family
/// and missing thresholds are left empty.
pub fn write_csv<W: Write>(points: &[CurvePoint], writer: W) -> Result<(), SweepError> {
    if points.is_empty() {
        return Err(SweepError::Empty);
    }
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(CSV_HEADER)?;
    for p in points {
        w.write_record([
            family_label(p.family).to_string(),
            optional(p.r),
            optional(p.phi),
            optional(p.beta_sq),
            format_number(p.strength),
            format_number(p.n_th),
            format_number(p.n_in),
            format_number(p.q_in),
            format_number(p.g),
            optional(p.tau_c()),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn emit_csv(points: &[CurvePoint], path: &Path) -> Result<(), SweepError> {
    if points.is_empty() {
        return Err(SweepError::Empty);
    }
    let file = File::create(path)?;
    write_csv(points, BufWriter::new(file))
}

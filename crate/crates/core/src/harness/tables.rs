//! Plot-ready tab-separated tables extracted from a report.

use super::report::RunReport;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TableError {
    #[error("report has no table `{requested}` (available: {})", list(.available))]
    Missing {
        requested: String,
        available: Vec<&'static str>,
    },
    #[error("report has no tables (sections present: {})", list(.sections))]
    Empty { sections: Vec<&'static str> },
    #[error("cannot write {path}: {message}")]
    Io { path: String, message: String },
}

fn list(items: &[&'static str]) -> String {
    if items.is_empty() {
        "none".into()
    } else {
        items.join(", ")
    }
}

pub const TABLE_NAMES: [&str; 3] = ["iterations", "partition", "scattering"];

fn fmt(x: f64) -> String {
    format!("{x:.17e}")
}

fn opt(x: Option<f64>) -> String {
    x.map_or_else(|| "nan".into(), fmt)
}

/// Tables present in `report`, in a fixed order.
pub fn available_tables(report: &RunReport) -> Vec<&'static str> {
    let mut out = Vec::new();
    if report.solve.as_ref().is_some_and(|s| !s.history.is_empty()) {
        out.push("iterations");
    }
    if report
        .spectral
        .as_ref()
        .is_some_and(|s| !s.partition.is_empty())
    {
        out.push("partition");
    }
    if report
        .scattering
        .as_ref()
        .is_some_and(|s| !s.points.is_empty())
    {
        out.push("scattering");
    }
    out
}

/// Renders one table; the first line is the header, with units in brackets.
pub fn render_table(report: &RunReport, name: &str) -> Result<String, TableError> {
    let available = available_tables(report);
    if !available.contains(&name) {
        return Err(TableError::Missing {
            requested: name.to_string(),
            available,
        });
    }
    let mut out = String::new();
    match name {
        "iterations" => {
            let solve = report.solve.as_ref().expect("checked above");
            out.push_str("k [1]\tstep_norm [1]\tresidual [energy]\n");
            for row in &solve.history {
                let _ = writeln!(
                    out,
                    "{}\t{}\t{}",
                    row.k,
                    fmt(row.step_norm),
                    fmt(row.residual)
                );
            }
        }
        "partition" => {
            let spectral = report.spectral.as_ref().expect("checked above");
            out.push_str("z [energy]\tresidual1 [energy]\tresidual2 [energy]\tchannel [1]\n");
            for row in &spectral.partition {
                let _ = writeln!(
                    out,
                    "{}\t{}\t{}\t{}",
                    fmt(row.value),
                    opt(row.residual1),
                    opt(row.residual2),
                    row.label
                );
            }
        }
        "scattering" => {
            let scattering = report.scattering.as_ref().expect("checked above");
            out.push_str("lambda [energy]\tre_s [1]\tim_s [1]\tabs_s [1]\tonshell_defect [1]\n");
            for row in &scattering.points {
                let _ = writeln!(
                    out,
                    "{}\t{}\t{}\t{}\t{}",
                    fmt(row.lambda),
                    fmt(row.s[0]),
                    fmt(row.s[1]),
                    fmt(row.abs_s),
                    opt(row.onshell_defect)
                );
            }
        }
        _ => unreachable!("only known tables are listed as available"),
    }
    Ok(out)
}

/// Writes `<dir>/<name>.tsv` for each requested table, or for every available
/// table when `names` is empty.
pub fn emit_tables(
    report: &RunReport,
    dir: &Path,
    names: &[String],
) -> Result<Vec<PathBuf>, TableError> {
    let available = available_tables(report);
    let selected: Vec<String> = if names.is_empty() {
        if available.is_empty() {
            return Err(TableError::Empty {
                sections: report.sections(),
            });
        }
        available.iter().map(|s| s.to_string()).collect()
    } else {
        names.to_vec()
    };
    let rendered = selected
        .iter()
        .map(|name| render_table(report, name).map(|text| (name, text)))
        .collect::<Result<Vec<_>, _>>()?;
    let io = |path: &Path, e: std::io::Error| TableError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    };
    std::fs::create_dir_all(dir).map_err(|e| io(dir, e))?;
    let mut written = Vec::new();
    for (name, text) in rendered {
        let path = dir.join(format!("{name}.tsv"));
        super::write_atomic(&path, &text).map_err(|e| io(&path, e))?;
        written.push(path);
    }
    Ok(written)
}

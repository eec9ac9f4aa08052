//! CSV and JSON writers.  All output is deterministic for a fixed config:
//! rows are emitted in enum/sweep order and floats use a fixed formatter.

use crate::error::Result;
use std::io::Write;
use std::path::Path;

/// NaN and infinities are spelled out; finite values use exponent form.
pub fn format_value(v: f64) -> String {
    if v.is_nan() {
        "NaN".to_string()
    } else if v.is_infinite() {
        if v > 0.0 { "Inf".to_string() } else { "-Inf".to_string() }
    } else {
        format!("{v:e}")
    }
}

#[derive(Debug, Clone)]
pub struct CsvRow {
    pub variant: String,
    pub matrix: String,
    pub metric: &'static str,
    pub value: f64,
    pub status: &'static str,
    pub kappa: f64,
    pub seed: u64,
}

pub fn write_long_csv(path: &Path, rows: &[CsvRow]) -> Result<()> {
    let mut out = String::from("variant,matrix,metric,value,status,kappa,seed\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.variant,
            r.matrix,
            r.metric,
            format_value(r.value),
            r.status,
            format_value(r.kappa),
            r.seed
        ));
    }
    let mut f = std::fs::File::create(path)?;
    f.write_all(out.as_bytes())?;
    Ok(())
}

/// Grid CSV: first column skeleton names, one column per muscle.
pub fn write_grid_csv(
    path: &Path,
    row_labels: &[String],
    col_labels: &[String],
    cells: &[Vec<String>],
) -> Result<()> {
    let mut out = String::from("skeleton");
    for c in col_labels {
        out.push(',');
        out.push_str(c);
    }
    out.push('\n');
    for (label, row) in row_labels.iter().zip(cells) {
        out.push_str(label);
        for cell in row {
            out.push(',');
            out.push_str(cell);
        }
        out.push('\n');
    }
    let mut f = std::fs::File::create(path)?;
    f.write_all(out.as_bytes())?;
    Ok(())
}

pub fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(std::io::Error::other)?;
    let mut f = std::fs::File::create(path)?;
    f.write_all(text.as_bytes())?;
    f.write_all(b"\n")?;
    Ok(())
}

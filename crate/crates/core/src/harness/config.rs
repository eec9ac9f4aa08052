//! Run configuration and the flat key/value config file format.

use crate::error::{Error, Result};
use crate::mat::BlockLayout;
use crate::matgen::MatrixKind;
use crate::muscles::MuscleId;
use crate::skeletons::{SkeletonId, SkeletonOptions};
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Formats {
    pub csv: bool,
    pub json: bool,
    pub svg: bool,
}

impl Default for Formats {
    fn default() -> Self {
        Formats {
            csv: true,
            json: true,
            svg: false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub dims: BlockLayout,
    pub matrices: Vec<MatrixKind>,
    pub skeletons: Vec<SkeletonId>,
    pub muscles: Vec<MuscleId>,
    pub options: SkeletonOptions,
    pub seed: u64,
    pub out_dir: PathBuf,
    pub formats: Formats,
    /// Exponent sweep for condition-number runs.
    pub sweep: Vec<f64>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            dims: BlockLayout { m: 1000, p: 10, s: 5 },
            matrices: vec![MatrixKind::RandNormal],
            skeletons: SkeletonId::ALL.to_vec(),
            muscles: MuscleId::ALL.to_vec(),
            options: SkeletonOptions::default(),
            seed: 42,
            out_dir: PathBuf::from("out"),
            formats: Formats::default(),
            sweep: (1..=12).map(|t| t as f64).collect(),
        }
    }
}

pub fn parse_dims(text: &str) -> Result<BlockLayout> {
    let parts: Vec<&str> = text.split(',').map(str::trim).collect();
    if parts.len() != 3 {
        return Err(Error::InvalidParameter(format!(
            "dims must be m,p,s; got {text:?}"
        )));
    }
    let nums: Vec<usize> = parts
        .iter()
        .map(|p| {
            p.parse::<usize>()
                .map_err(|_| Error::InvalidParameter(format!("bad dims component {p:?}")))
        })
        .collect::<Result<_>>()?;
    BlockLayout::new(nums[0], nums[1], nums[2])
}

fn parse_list<T, F: Fn(&str) -> Option<T>>(text: &str, what: &str, f: F) -> Result<Vec<T>> {
    let mut out = vec![];
    for item in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        out.push(
            f(item).ok_or_else(|| Error::InvalidParameter(format!("unknown {what}: {item:?}")))?,
        );
    }
    Ok(out)
}

pub fn parse_matrices(text: &str) -> Result<Vec<MatrixKind>> {
    parse_list(text, "matrix kind", MatrixKind::parse)
}

pub fn parse_skeletons(text: &str) -> Result<Vec<SkeletonId>> {
    parse_list(text, "skeleton", SkeletonId::parse)
}

pub fn parse_muscles(text: &str) -> Result<Vec<MuscleId>> {
    parse_list(text, "muscle", MuscleId::parse)
}

/// Sweep syntax: comma list of numbers, or "a:b" inclusive integer range.
pub fn parse_sweep(text: &str) -> Result<Vec<f64>> {
    if let Some((a, b)) = text.split_once(':') {
        let lo: i64 = a
            .trim()
            .parse()
            .map_err(|_| Error::InvalidParameter(format!("bad sweep start {a:?}")))?;
        let hi: i64 = b
            .trim()
            .parse()
            .map_err(|_| Error::InvalidParameter(format!("bad sweep end {b:?}")))?;
        if hi < lo {
            return Err(Error::InvalidParameter("empty sweep range".into()));
        }
        return Ok((lo..=hi).map(|t| t as f64).collect());
    }
    let vals: Vec<f64> = text
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<f64>()
                .map_err(|_| Error::InvalidParameter(format!("bad sweep value {s:?}")))
        })
        .collect::<Result<_>>()?;
    if vals.is_empty() {
        return Err(Error::InvalidParameter("empty sweep".into()));
    }
    Ok(vals)
}

pub fn parse_formats(text: &str) -> Result<Formats> {
    let mut f = Formats {
        csv: false,
        json: false,
        svg: false,
    };
    for item in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        match item {
            "csv" => f.csv = true,
            "json" => f.json = true,
            "svg" => f.svg = true,
            other => {
                return Err(Error::InvalidParameter(format!(
                    "unknown format {other:?} (expected csv, json, or svg)"
                )))
            }
        }
    }
    if !(f.csv || f.json || f.svg) {
        return Err(Error::InvalidParameter("no output format selected".into()));
    }
    Ok(f)
}

fn parse_bool(text: &str) -> Result<bool> {
    match text {
        "1" | "true" | "yes" | "on" => Ok(true),
        "0" | "false" | "no" | "off" => Ok(false),
        other => Err(Error::InvalidParameter(format!("bad boolean {other:?}"))),
    }
}

/// Apply a flat key/value config file (lines of `key = value`, `#` comments)
/// on top of the given config.  Command-line flags are applied afterwards by
/// the caller and therefore win.
pub fn apply_config_file(cfg: &mut RunConfig, path: &Path) -> Result<()> {
    let text = std::fs::read_to_string(path)?;
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            Error::InvalidParameter(format!(
                "{}:{}: expected key = value",
                path.display(),
                lineno + 1
            ))
        })?;
        let key = key.trim();
        let value = value.trim();
        match key {
            "dims" => cfg.dims = parse_dims(value)?,
            "mats" => cfg.matrices = parse_matrices(value)?,
            "skels" => cfg.skeletons = parse_skeletons(value)?,
            "muscs" => cfg.muscles = parse_muscles(value)?,
            "rpltol" => {
                cfg.options.rpltol = value
                    .parse()
                    .map_err(|_| Error::InvalidParameter(format!("bad rpltol {value:?}")))?
            }
            "seed" => {
                cfg.seed = value
                    .parse()
                    .map_err(|_| Error::InvalidParameter(format!("bad seed {value:?}")))?
            }
            "out" => cfg.out_dir = PathBuf::from(value),
            "format" => cfg.formats = parse_formats(value)?,
            "sweep" => cfg.sweep = parse_sweep(value)?,
            "t_fix" => cfg.options.t_fix = parse_bool(value)?,
            "reorth_first" => cfg.options.reorth_first_block = parse_bool(value)?,
            "auto_shift" => cfg.options.auto_shift = parse_bool(value)?,
            other => {
                return Err(Error::InvalidParameter(format!(
                    "{}:{}: unknown config key {other:?}",
                    path.display(),
                    lineno + 1
                )))
            }
        }
    }
    Ok(())
}

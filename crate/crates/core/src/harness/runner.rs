//! Experiment drivers.  `run_heatmap` sweeps every skeleton-muscle pairing
//! over a set of test matrices; `run_kappa_plot` sweeps a condition-number
//! parameter for a fixed set of variants.
//!
//! Seeding is layered so results are reproducible cell by cell: each matrix
//! draws from `seed ^ hash(matrix label)` and each run draws from
//! `seed ^ hash("label/variant")`, so adding or removing variants never
//! perturbs the others.

use super::config::RunConfig;
use super::output::{self, CsvRow};
use super::svg;
use crate::error::{Error, Result};
use crate::mat::{BlockLayout, Mat};
use crate::matgen::{self, Extra, MatrixKind, MatrixSpec};
use crate::metrics::{self, StabilityReport};
use crate::muscles::{self, MuscleId, MuscleParams, RunStatus};
use crate::rng::{stable_hash, Rng};
use crate::skeletons::{self, SkeletonId};
use serde::Serialize;
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CellStatus {
    Ok,
    CholFail,
    NanEncountered,
    /// The pairing or option combination is rejected up front.
    Incompatible,
}

impl CellStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            CellStatus::Ok => "ok",
            CellStatus::CholFail => "chol_fail",
            CellStatus::NanEncountered => "nan_encountered",
            CellStatus::Incompatible => "incompatible",
        }
    }

    fn from_run(status: RunStatus) -> CellStatus {
        match status {
            RunStatus::Ok => CellStatus::Ok,
            RunStatus::CholFail => CellStatus::CholFail,
            RunStatus::NanEncountered => CellStatus::NanEncountered,
        }
    }
}

impl std::fmt::Display for CellStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CellRecord {
    pub variant: String,
    pub matrix: String,
    pub status: CellStatus,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub report: Option<StabilityReport>,
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct HeatmapBundle {
    pub dims: BlockLayout,
    pub seed: u64,
    pub matrices: Vec<String>,
    pub skeletons: Vec<String>,
    pub muscles: Vec<String>,
    pub cells: Vec<CellRecord>,
}

/// Which skeletons return a correction factor worth measuring.
fn skeleton_produces_t(skel: SkeletonId) -> bool {
    matches!(
        skel,
        SkeletonId::BmgsSvl | SkeletonId::BmgsLts | SkeletonId::BmgsCwy | SkeletonId::BmgsIcwy
    )
}

fn cell_compatible(skel: SkeletonId, musc: MuscleId, cfg: &RunConfig) -> bool {
    if !skel.accepts(musc) {
        return false;
    }
    // Coefficient-side correction of plain BCGS is rejected by the skeleton;
    // surface it as an incompatible cell rather than aborting the sweep.
    !(cfg.options.t_fix && skel == SkeletonId::Bcgs)
}

fn measure(
    x: &Mat,
    out: &skeletons::BlockQRResult,
    want_triad: bool,
    kappa: f64,
    seed: u64,
) -> Result<StabilityReport> {
    use crate::events::Origin;
    let sync_skeleton = out.events.count(Origin::Skeleton);
    let sync_muscle = out.events.count(Origin::Muscle);
    if out.status != RunStatus::Ok {
        return Ok(StabilityReport::failed(
            out.status,
            kappa,
            sync_skeleton,
            sync_muscle,
            seed,
        ));
    }
    let triad = if want_triad {
        Some(metrics::triad_residuals(&out.q, &out.r, &out.t)?)
    } else {
        None
    };
    Ok(StabilityReport {
        loo: metrics::loss_of_orthogonality(&out.q)?,
        rel_res: metrics::relative_residual(&out.q, &out.r, x)?,
        rel_chol_res: metrics::relative_cholesky_residual(&out.r, x)?,
        triad,
        kappa,
        sync_skeleton,
        sync_muscle,
        status: out.status,
        seed,
    })
}

fn push_rows(rows: &mut Vec<CsvRow>, cell: &CellRecord, kappa: f64) {
    let mk = |metric: &'static str, value: f64| CsvRow {
        variant: cell.variant.clone(),
        matrix: cell.matrix.clone(),
        metric,
        value,
        status: cell.status.as_str(),
        kappa,
        seed: cell.seed,
    };
    match &cell.report {
        Some(rep) => {
            rows.push(mk("loo", rep.loo));
            rows.push(mk("rel_res", rep.rel_res));
            rows.push(mk("rel_chol_res", rep.rel_chol_res));
            if let Some(t) = &rep.triad {
                rows.push(mk("res_ts", t.res_ts));
                rows.push(mk("res_tr", t.res_tr));
            }
            rows.push(mk("sync_skeleton", rep.sync_skeleton as f64));
            rows.push(mk("sync_muscle", rep.sync_muscle as f64));
        }
        None => {
            rows.push(mk("loo", f64::NAN));
            rows.push(mk("rel_res", f64::NAN));
            rows.push(mk("rel_chol_res", f64::NAN));
        }
    }
}

/// Run the full pairing grid and write the selected output formats.
pub fn run_heatmap(cfg: &RunConfig) -> Result<HeatmapBundle> {
    if cfg.matrices.is_empty() {
        return Err(Error::InvalidParameter("no matrices requested".into()));
    }
    if cfg.skeletons.is_empty() || cfg.muscles.is_empty() {
        return Err(Error::InvalidParameter(
            "heatmap needs at least one skeleton and one muscle".into(),
        ));
    }
    std::fs::create_dir_all(&cfg.out_dir)?;
    let mut cells = vec![];
    let mut rows: Vec<CsvRow> = vec![];
    for &mat in &cfg.matrices {
        let mat_label = mat.as_str().to_string();
        let mat_seed = cfg.seed ^ stable_hash(&mat_label);
        let x = matgen::generate(&MatrixSpec::new(mat, cfg.dims, mat_seed))?;
        let kappa = metrics::condition_number(&x)?;
        for &skel in &cfg.skeletons {
            for &musc in &cfg.muscles {
                let variant = format!("{skel}/{musc}");
                let cell_seed = cfg.seed ^ stable_hash(&format!("{mat_label}/{variant}"));
                let cell = if !cell_compatible(skel, musc, cfg) {
                    CellRecord {
                        variant,
                        matrix: mat_label.clone(),
                        status: CellStatus::Incompatible,
                        report: None,
                        seed: cell_seed,
                    }
                } else {
                    let mut rng = Rng::new(cell_seed);
                    let out = skeletons::block_orthogonalize(
                        &x,
                        cfg.dims,
                        skel,
                        musc,
                        &cfg.options,
                        &mut rng,
                    )?;
                    let want_triad = skeleton_produces_t(skel);
                    let report = measure(&x, &out, want_triad, kappa, cell_seed)?;
                    CellRecord {
                        variant,
                        matrix: mat_label.clone(),
                        status: CellStatus::from_run(out.status),
                        report: Some(report),
                        seed: cell_seed,
                    }
                };
                push_rows(&mut rows, &cell, kappa);
                cells.push(cell);
            }
        }
    }
    let bundle = HeatmapBundle {
        dims: cfg.dims,
        seed: cfg.seed,
        matrices: cfg.matrices.iter().map(|m| m.as_str().into()).collect(),
        skeletons: cfg.skeletons.iter().map(|s| s.as_str().into()).collect(),
        muscles: cfg.muscles.iter().map(|m| m.as_str().into()).collect(),
        cells,
    };
    write_heatmap_outputs(cfg, &bundle, &rows)?;
    Ok(bundle)
}

fn write_heatmap_outputs(cfg: &RunConfig, bundle: &HeatmapBundle, rows: &[CsvRow]) -> Result<()> {
    let dir: &Path = &cfg.out_dir;
    if cfg.formats.csv {
        output::write_long_csv(&dir.join("heatmap.csv"), rows)?;
        let row_labels: Vec<String> = bundle.skeletons.clone();
        let col_labels: Vec<String> = bundle.muscles.clone();
        for mat in &bundle.matrices {
            for (metric, pick) in [
                ("loo", 0usize),
                ("rel_res", 1usize),
                ("status", 2usize),
            ] {
                let mut grid = vec![];
                for skel in &row_labels {
                    let mut row = vec![];
                    for musc in &col_labels {
                        let variant = format!("{skel}/{musc}");
                        let cell = bundle
                            .cells
                            .iter()
                            .find(|c| c.variant == variant && &c.matrix == mat)
                            .expect("grid cell exists");
                        let text = match pick {
                            0 => output::format_value(
                                cell.report.as_ref().map_or(f64::NAN, |r| r.loo),
                            ),
                            1 => output::format_value(
                                cell.report.as_ref().map_or(f64::NAN, |r| r.rel_res),
                            ),
                            _ => cell.status.as_str().to_string(),
                        };
                        row.push(text);
                    }
                    grid.push(row);
                }
                output::write_grid_csv(
                    &dir.join(format!("heatmap_{mat}_{metric}.csv")),
                    &row_labels,
                    &col_labels,
                    &grid,
                )?;
            }
        }
    }
    if cfg.formats.json {
        output::write_json(&dir.join("heatmap.json"), bundle)?;
    }
    if cfg.formats.svg {
        for mat in &bundle.matrices {
            let values: Vec<Vec<f64>> = bundle
                .skeletons
                .iter()
                .map(|skel| {
                    bundle
                        .muscles
                        .iter()
                        .map(|musc| {
                            let variant = format!("{skel}/{musc}");
                            bundle
                                .cells
                                .iter()
                                .find(|c| c.variant == variant && &c.matrix == mat)
                                .and_then(|c| c.report.as_ref().map(|r| r.loo))
                                .unwrap_or(f64::NAN)
                        })
                        .collect()
                })
                .collect();
            let text = svg::heat_svg(
                &format!("loss of orthogonality, {mat}"),
                &bundle.skeletons,
                &bundle.muscles,
                &values,
            );
            std::fs::write(dir.join(format!("heatmap_{mat}_loo.svg")), text)?;
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KappaKind {
    /// Singular values logspaced over 10^[-t, 0].
    Standard,
    /// Glued construction with both exponents set to -t.
    Glued,
    /// Polynomial block basis; the sweep value is the block width.
    Monomial,
}

impl KappaKind {
    pub fn prefix(&self) -> &'static str {
        match self {
            KappaKind::Standard => "kappa",
            KappaKind::Glued => "glued_kappa",
            KappaKind::Monomial => "monomial_kappa",
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct KappaPoint {
    pub variant: String,
    pub matrix: String,
    pub sweep: f64,
    pub status: CellStatus,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub report: Option<StabilityReport>,
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct KappaBundle {
    pub kind: String,
    pub dims: BlockLayout,
    pub seed: u64,
    pub sweep: Vec<f64>,
    pub variants: Vec<String>,
    pub points: Vec<KappaPoint>,
}

fn sweep_spec(kind: KappaKind, dims: BlockLayout, t: f64, seed: u64) -> Result<(MatrixSpec, String)> {
    match kind {
        KappaKind::Standard => {
            let mut spec = MatrixSpec::new(MatrixKind::KappaSeries, dims, seed);
            spec.extra = Extra::Kappa { t };
            Ok((spec, format!("kappa_series(t={t})")))
        }
        KappaKind::Glued => {
            let mut spec = MatrixSpec::new(MatrixKind::Glued, dims, seed);
            spec.extra = Extra::Glued { r: -t, t: -t };
            Ok((spec, format!("glued(t={t})")))
        }
        KappaKind::Monomial => {
            let n = dims.n();
            let s = t as usize;
            if s == 0 || t.fract() != 0.0 || n % s != 0 {
                return Err(Error::InvalidParameter(format!(
                    "monomial sweep values must be positive integers dividing n={n}, got {t}"
                )));
            }
            let dims = BlockLayout::new(dims.m, n / s, s)?;
            let spec = MatrixSpec::new(MatrixKind::Monomial, dims, seed);
            Ok((spec, format!("monomial(s={s})")))
        }
    }
}

/// Sweep a condition-number parameter for each requested variant.  With an
/// empty skeleton list the muscles run directly on the whole matrix as a
/// single block.
pub fn run_kappa_plot(cfg: &RunConfig, kind: KappaKind) -> Result<KappaBundle> {
    if cfg.sweep.is_empty() {
        return Err(Error::InvalidParameter("empty sweep".into()));
    }
    if cfg.muscles.is_empty() && !cfg.skeletons.iter().any(|s| s.ignores_muscle()) {
        return Err(Error::InvalidParameter("no variants requested".into()));
    }
    std::fs::create_dir_all(&cfg.out_dir)?;
    let variants: Vec<(Option<SkeletonId>, MuscleId)> = if cfg.skeletons.is_empty() {
        cfg.muscles.iter().map(|&m| (None, m)).collect()
    } else {
        let mut v = vec![];
        for &skel in &cfg.skeletons {
            for &musc in &cfg.muscles {
                if cell_compatible(skel, musc, cfg) {
                    v.push((Some(skel), musc));
                }
            }
        }
        v
    };
    let variant_label = |skel: &Option<SkeletonId>, musc: MuscleId| match skel {
        Some(s) => format!("{s}/{musc}"),
        None => musc.to_string(),
    };
    let mut points = vec![];
    let mut rows: Vec<CsvRow> = vec![];
    for &t in &cfg.sweep {
        let (spec0, mat_label) = sweep_spec(kind, cfg.dims, t, 0)?;
        let mat_seed = cfg.seed ^ stable_hash(&mat_label);
        let spec = MatrixSpec { seed: mat_seed, ..spec0 };
        let x = matgen::generate(&spec)?;
        let kappa = metrics::condition_number(&x)?;
        for (skel, musc) in &variants {
            let variant = variant_label(skel, *musc);
            let cell_seed = cfg.seed ^ stable_hash(&format!("{mat_label}/{variant}"));
            let mut rng = Rng::new(cell_seed);
            let (status, report) = match skel {
                Some(skel) => {
                    let out = skeletons::block_orthogonalize(
                        &x,
                        spec.dims,
                        *skel,
                        *musc,
                        &cfg.options,
                        &mut rng,
                    )?;
                    let report =
                        measure(&x, &out, skeleton_produces_t(*skel), kappa, cell_seed)?;
                    (CellStatus::from_run(out.status), report)
                }
                None => {
                    let params = MuscleParams {
                        rpltol: cfg.options.rpltol,
                        auto_shift: cfg.options.auto_shift,
                    };
                    let out = muscles::intra_orthogonalize(&x, *musc, &params, &mut rng)?;
                    let lifted = skeletons::BlockQRResult {
                        q: out.q,
                        r: out.r,
                        t: out.t,
                        status: out.status,
                        events: out.events,
                    };
                    let report = measure(&x, &lifted, false, kappa, cell_seed)?;
                    (CellStatus::from_run(lifted.status), report)
                }
            };
            let point = KappaPoint {
                variant,
                matrix: mat_label.clone(),
                sweep: t,
                status,
                report: Some(report),
                seed: cell_seed,
            };
            let cell = CellRecord {
                variant: point.variant.clone(),
                matrix: point.matrix.clone(),
                status: point.status,
                report: point.report.clone(),
                seed: point.seed,
            };
            push_rows(&mut rows, &cell, kappa);
            points.push(point);
        }
    }
    let bundle = KappaBundle {
        kind: kind.prefix().into(),
        dims: cfg.dims,
        seed: cfg.seed,
        sweep: cfg.sweep.clone(),
        variants: variants
            .iter()
            .map(|(s, m)| variant_label(s, *m))
            .collect(),
        points,
    };
    write_kappa_outputs(cfg, kind, &bundle, &rows)?;
    Ok(bundle)
}

fn write_kappa_outputs(
    cfg: &RunConfig,
    kind: KappaKind,
    bundle: &KappaBundle,
    rows: &[CsvRow],
) -> Result<()> {
    let dir: &Path = &cfg.out_dir;
    let prefix = kind.prefix();
    if cfg.formats.csv {
        output::write_long_csv(&dir.join(format!("{prefix}.csv")), rows)?;
    }
    if cfg.formats.json {
        output::write_json(&dir.join(format!("{prefix}.json")), bundle)?;
    }
    if cfg.formats.svg {
        for metric in ["loo", "rel_res", "rel_chol_res"] {
            let series: Vec<svg::Series> = bundle
                .variants
                .iter()
                .map(|v| svg::Series {
                    label: v.clone(),
                    points: bundle
                        .points
                        .iter()
                        .filter(|p| &p.variant == v && p.status == CellStatus::Ok)
                        .filter_map(|p| {
                            p.report.as_ref().map(|r| {
                                let value = match metric {
                                    "loo" => r.loo,
                                    "rel_res" => r.rel_res,
                                    _ => r.rel_chol_res,
                                };
                                (r.kappa, value.max(1e-18))
                            })
                        })
                        .collect(),
                })
                .collect();
            let text = svg::scatter_svg(&format!("{prefix}: {metric}"), &series);
            std::fs::write(dir.join(format!("{prefix}_{metric}.svg")), text)?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::config::Formats;

    fn small_cfg(dir: &Path) -> RunConfig {
        RunConfig {
            dims: BlockLayout::new(40, 4, 2).unwrap(),
            matrices: vec![MatrixKind::RandNormal],
            skeletons: vec![SkeletonId::Bcgs, SkeletonId::BmgsSvl, SkeletonId::BcgsSror],
            muscles: vec![MuscleId::Cgs, MuscleId::HouseQr, MuscleId::CgsSror],
            out_dir: dir.to_path_buf(),
            formats: Formats {
                csv: true,
                json: true,
                svg: true,
            },
            ..RunConfig::default()
        }
    }

    #[test]
    fn heatmap_marks_incompatible_cells_and_writes_files() {
        let tmp = tempfile::tempdir().unwrap();
        let cfg = small_cfg(tmp.path());
        let bundle = run_heatmap(&cfg).unwrap();
        assert_eq!(bundle.cells.len(), 9);
        let incompatible: Vec<_> = bundle
            .cells
            .iter()
            .filter(|c| c.status == CellStatus::Incompatible)
            .map(|c| c.variant.clone())
            .collect();
        // The replacement skeleton only pairs with replacement muscles.
        assert_eq!(incompatible, vec!["BCGS_SROR/CGS", "BCGS_SROR/HouseQR"]);
        for name in [
            "heatmap.csv",
            "heatmap.json",
            "heatmap_rand_normal_loo.csv",
            "heatmap_rand_normal_rel_res.csv",
            "heatmap_rand_normal_status.csv",
            "heatmap_rand_normal_loo.svg",
        ] {
            assert!(tmp.path().join(name).exists(), "missing {name}");
        }
        let grid = std::fs::read_to_string(tmp.path().join("heatmap_rand_normal_status.csv"))
            .unwrap();
        assert!(grid.starts_with("skeleton,CGS,HouseQR,CGS_SROR\n"));
        assert!(grid.contains("incompatible"));
    }

    #[test]
    fn heatmap_is_deterministic() {
        let tmp1 = tempfile::tempdir().unwrap();
        let tmp2 = tempfile::tempdir().unwrap();
        let b1 = run_heatmap(&small_cfg(tmp1.path())).unwrap();
        let b2 = run_heatmap(&small_cfg(tmp2.path())).unwrap();
        let c1 = std::fs::read_to_string(tmp1.path().join("heatmap.csv")).unwrap();
        let c2 = std::fs::read_to_string(tmp2.path().join("heatmap.csv")).unwrap();
        assert_eq!(c1, c2);
        for (a, b) in b1.cells.iter().zip(&b2.cells) {
            let (ra, rb) = (a.report.as_ref(), b.report.as_ref());
            match (ra, rb) {
                (Some(x), Some(y)) => assert_eq!(x.loo.to_bits(), y.loo.to_bits()),
                (None, None) => {}
                _ => panic!("mismatched cells"),
            }
        }
    }

    #[test]
    fn empty_matrix_list_is_rejected() {
        let tmp = tempfile::tempdir().unwrap();
        let mut cfg = small_cfg(tmp.path());
        cfg.matrices.clear();
        assert!(run_heatmap(&cfg).is_err());
    }

    #[test]
    fn muscle_only_kappa_sweep() {
        let tmp = tempfile::tempdir().unwrap();
        let cfg = RunConfig {
            dims: BlockLayout::new(60, 10, 1).unwrap(),
            skeletons: vec![],
            muscles: vec![MuscleId::Mgs, MuscleId::HouseQr],
            sweep: vec![1.0, 4.0],
            out_dir: tmp.path().to_path_buf(),
            formats: Formats {
                csv: true,
                json: true,
                svg: true,
            },
            ..RunConfig::default()
        };
        let bundle = run_kappa_plot(&cfg, KappaKind::Standard).unwrap();
        assert_eq!(bundle.points.len(), 4);
        assert_eq!(bundle.variants, vec!["MGS", "HouseQR"]);
        // Measured kappa should track the requested exponent.
        for p in &bundle.points {
            let k = p.report.as_ref().unwrap().kappa;
            let target = 10f64.powf(p.sweep);
            assert!(k > target / 100.0 && k < target * 100.0, "kappa {k} at t={}", p.sweep);
        }
        assert!(tmp.path().join("kappa.csv").exists());
        assert!(tmp.path().join("kappa_loo.svg").exists());
    }

    #[test]
    fn monomial_sweep_reshapes_blocks() {
        let tmp = tempfile::tempdir().unwrap();
        let cfg = RunConfig {
            dims: BlockLayout::new(80, 6, 2).unwrap(),
            skeletons: vec![SkeletonId::Bcgs],
            muscles: vec![MuscleId::HouseQr],
            sweep: vec![2.0, 3.0],
            out_dir: tmp.path().to_path_buf(),
            formats: Formats {
                csv: true,
                json: false,
                svg: false,
            },
            ..RunConfig::default()
        };
        let bundle = run_kappa_plot(&cfg, KappaKind::Monomial).unwrap();
        assert_eq!(bundle.points.len(), 2);
        assert_eq!(bundle.points[0].matrix, "monomial(s=2)");
        assert_eq!(bundle.points[1].matrix, "monomial(s=3)");
        // Width 5 does not divide n = 12.
        let mut bad = cfg.clone();
        bad.sweep = vec![5.0];
        assert!(run_kappa_plot(&bad, KappaKind::Monomial).is_err());
    }

    #[test]
    fn glued_sweep_hits_target_condition() {
        let tmp = tempfile::tempdir().unwrap();
        let cfg = RunConfig {
            dims: BlockLayout::new(100, 5, 4).unwrap(),
            skeletons: vec![SkeletonId::BcgsIro],
            muscles: vec![MuscleId::HouseQr],
            sweep: vec![2.0],
            out_dir: tmp.path().to_path_buf(),
            formats: Formats {
                csv: true,
                json: false,
                svg: false,
            },
            ..RunConfig::default()
        };
        let bundle = run_kappa_plot(&cfg, KappaKind::Glued).unwrap();
        let k = bundle.points[0].report.as_ref().unwrap().kappa;
        assert!(k >= 1e2 && k <= 1e6, "kappa {k}");
    }
}

//! Command-line driver for the pairing grid and condition-number sweeps.

use blockgs::harness::config::{
    apply_config_file, parse_dims, parse_formats, parse_matrices, parse_muscles, parse_skeletons,
    parse_sweep, RunConfig,
};
use blockgs::harness::runner::{run_heatmap, run_kappa_plot, KappaKind};
use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "blockgs",
    about = "Stability experiments for block Gram-Schmidt QR variants",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Default)]
struct CommonArgs {
    /// Config file of `key = value` lines; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Problem shape as m,p,s (rows, block count, block width).
    #[arg(long)]
    dims: Option<String>,
    /// Comma list of matrix families.
    #[arg(long)]
    mats: Option<String>,
    /// Comma list of skeletons; empty string runs muscles standalone.
    #[arg(long)]
    skels: Option<String>,
    /// Comma list of muscles.
    #[arg(long)]
    muscs: Option<String>,
    /// Replacement tolerance for the selective-reorthogonalization variants.
    #[arg(long)]
    rpltol: Option<f64>,
    /// Base seed; every matrix and cell derives its own stream from it.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Comma list of output formats: csv, json, svg.
    #[arg(long)]
    format: Option<String>,
    /// Sweep values, either a comma list or an inclusive a:b integer range.
    #[arg(long)]
    sweep: Option<String>,
    /// Read projection coefficients through each block's correction factor.
    #[arg(long)]
    t_fix: bool,
    /// Orthogonalize the first block twice.
    #[arg(long)]
    reorth_first: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Run every skeleton-muscle pairing over the chosen matrices.
    Heatmap(CommonArgs),
    /// Sweep matrices with singular values logspaced over 10^[-t, 0].
    Kappa(CommonArgs),
    /// Sweep glued matrices with both construction exponents set to -t.
    GluedKappa(CommonArgs),
    /// Sweep the block width of a monomial Krylov basis.
    MonomialKappa(CommonArgs),
    /// Print ready-to-run command lines for the standard experiment set.
    Presets,
}

fn build_config(args: &CommonArgs) -> blockgs::Result<RunConfig> {
    let mut cfg = RunConfig::default();
    if let Some(path) = &args.config {
        apply_config_file(&mut cfg, path)?;
    }
    if let Some(text) = &args.dims {
        cfg.dims = parse_dims(text)?;
    }
    if let Some(text) = &args.mats {
        cfg.matrices = parse_matrices(text)?;
    }
    if let Some(text) = &args.skels {
        cfg.skeletons = parse_skeletons(text)?;
    }
    if let Some(text) = &args.muscs {
        cfg.muscles = parse_muscles(text)?;
    }
    if let Some(v) = args.rpltol {
        cfg.options.rpltol = v;
    }
    if let Some(v) = args.seed {
        cfg.seed = v;
    }
    if let Some(path) = &args.out {
        cfg.out_dir = path.clone();
    }
    if let Some(text) = &args.format {
        cfg.formats = parse_formats(text)?;
    }
    if let Some(text) = &args.sweep {
        cfg.sweep = parse_sweep(text)?;
    }
    if args.t_fix {
        cfg.options.t_fix = true;
    }
    if args.reorth_first {
        cfg.options.reorth_first_block = true;
    }
    Ok(cfg)
}

fn run(cli: Cli) -> blockgs::Result<()> {
    match &cli.command {
        Command::Heatmap(args) => {
            let cfg = build_config(args)?;
            let bundle = run_heatmap(&cfg)?;
            let failed = bundle
                .cells
                .iter()
                .filter(|c| c.status.as_str() != "ok" && c.status.as_str() != "incompatible")
                .count();
            eprintln!(
                "heatmap: {} cells ({} failed) -> {}",
                bundle.cells.len(),
                failed,
                cfg.out_dir.display()
            );
        }
        Command::Kappa(args) | Command::GluedKappa(args) | Command::MonomialKappa(args) => {
            let kind = match &cli.command {
                Command::Kappa(_) => KappaKind::Standard,
                Command::GluedKappa(_) => KappaKind::Glued,
                _ => KappaKind::Monomial,
            };
            let cfg = build_config(args)?;
            let bundle = run_kappa_plot(&cfg, kind)?;
            eprintln!(
                "{}: {} points -> {}",
                bundle.kind,
                bundle.points.len(),
                cfg.out_dir.display()
            );
        }
        Command::Presets => print_presets(),
    }
    Ok(())
}

/// Desk-scale versions of the standard experiment battery.
fn print_presets() {
    let lines = [
        "blockgs heatmap --dims 1000,10,5 \\",
        "  --mats rand_uniform,rand_normal,rank_def,laeuchli,monomial,stewart,stewart_extreme \\",
        "  --skels BCGS,BCGS_IRO,BCGS_SROR,BCGS_IRO_LS,BMGS,BMGS_SVL,BMGS_CWY \\",
        "  --muscs CGS,CGS_IRO,CGS_SRO,CGS_SROR,CGS_IRO_LS,MGS,MGS_SVL,MGS_CWY,HouseQR,CholQR,CholQR_RO,ShCholQR_RORO \\",
        "  --rpltol 100 --out out/heatmap",
        "",
        "blockgs glued-kappa --dims 1000,200,1 --sweep 1:8 \\",
        "  --skels '' --muscs CGS,CGS_P --out out/glued_cols",
        "",
        "blockgs glued-kappa --dims 1000,50,4 --sweep 1:8 \\",
        "  --skels BCGS,BCGS_PIP,BCGS_PIO --muscs HouseQR --out out/glued_blocks",
        "",
        "blockgs kappa --dims 100,20,2 --sweep 1:16 \\",
        "  --skels BCGS,BCGS_IRO,BMGS --muscs HouseQR,CGS,MGS --out out/kappa",
        "",
        "blockgs monomial-kappa --dims 1000,120,2 --sweep 2,4,6,8,10,12 \\",
        "  --skels BCGS,BCGS_IRO,BMGS --muscs HouseQR --out out/monomial",
    ];
    for line in lines {
        println!("{line}");
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

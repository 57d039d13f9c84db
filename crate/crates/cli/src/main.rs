use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use mdfold::config::{ConfigError, ExperimentConfig};
use mdfold::report::{heatmap_svg, sweep_to_csv};
use mdfold::rng::{gen_signal, signal_stream};
use mdfold::sweep::{
    bandwidth, domain, lattice_for, params, run_sweep, study_grid, RunError, SweepOptions, METHODS,
};
use mdfold_core::io::{
    field_from_csv, field_to_csv, ledger_to_csv, recovery_to_csv, signal_from_csv, signal_to_csv,
};
use mdfold_core::{
    compute_bounds, encode_md, reconstruct, ConditionReport, DetectionConfig, EncodeOptions,
    LevelEstimator, Precondition,
};

/// Stdout writes that tolerate a closed pipe (`mdfold bounds | head`).
macro_rules! out {
    ($($t:tt)*) => {{
        use std::io::Write;
        let _ = write!(std::io::stdout(), $($t)*);
    }};
}

#[derive(Parser)]
#[command(
    name = "mdfold",
    version,
    about = "Modulo-hysteresis encoding and recovery on lattices"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Levels {
    ZeroSlice,
    AllSlices,
}

impl From<Levels> for LevelEstimator {
    fn from(l: Levels) -> Self {
        match l {
            Levels::ZeroSlice => LevelEstimator::ZeroSlice,
            Levels::AllSlices => LevelEstimator::AllSlices,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Fold a signal; without --signal a random one is drawn from the seed.
    Encode {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        signal: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        /// Reject signals whose in-band spread violates the well-posedness hypothesis.
        #[arg(long)]
        strict: bool,
    },
    /// Recover a sample field produced by `encode` (first T₂ of the config).
    Recover {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        samples: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        /// Sup-norm used for the condition report; defaults to the maximum of the reconstruction.
        #[arg(long)]
        sup_norm: Option<f64>,
        #[arg(long, value_enum, default_value = "all-slices")]
        levels: Levels,
    },
    /// Monte Carlo sweep over the (σ, T₂) grid of the config.
    Bench {
        #[arg(long)]
        config: PathBuf,
        /// 100 trials per cell instead of the configured count.
        #[arg(long)]
        full: bool,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        /// Record wall times in sweep.csv (the file is then no longer reproducible).
        #[arg(long)]
        timing: bool,
        #[arg(long, value_enum, default_value = "all-slices")]
        levels: Levels,
    },
    /// Print the noise guarantees for every (σ, T₂) cell as key=value lines.
    Bounds {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 1.0)]
        sup_norm: f64,
        #[arg(long)]
        seed: Option<u64>,
    },
}

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Run(#[from] RunError),
}

impl From<mdfold_core::Error> for CliError {
    fn from(e: mdfold_core::Error) -> Self {
        CliError::Run(RunError::Core(e))
    }
}

fn load(path: &Path, seed: Option<u64>) -> Result<ExperimentConfig, CliError> {
    let mut cfg = ExperimentConfig::from_file(path)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    Ok(cfg)
}

fn write(dir: &Path, name: &str, text: &str) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| RunError::Io(format!("{}: {e}", dir.display())))?;
    let p = dir.join(name);
    std::fs::write(&p, text).map_err(|e| RunError::Io(format!("{}: {e}", p.display())))?;
    Ok(())
}

fn read(path: &Path) -> Result<String, CliError> {
    Ok(std::fs::read_to_string(path)
        .map_err(|e| RunError::Io(format!("{}: {e}", path.display())))?)
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Encode {
            config,
            signal,
            out,
            seed,
            strict,
        } => {
            let cfg = load(&config, seed)?;
            let out = out.unwrap_or_else(|| cfg.out_dir.clone());
            let lattice = lattice_for(&cfg, cfg.t2_list[0])?;
            let grid = study_grid(&cfg, &lattice)?;
            let sig = match signal {
                Some(p) => signal_from_csv(&read(&p)?, bandwidth(&cfg)?, domain(&cfg)?)?,
                None => {
                    let s = gen_signal(
                        &mut signal_stream(cfg.seed, 0),
                        bandwidth(&cfg)?,
                        domain(&cfg)?,
                    );
                    write(&out, "signal.csv", &signal_to_csv(&s))?;
                    s
                }
            };
            let opts = EncodeOptions {
                q: cfg.oversample_q,
                oversample: cfg.oversample_diag,
                single_point_bands: false,
                precondition: if strict {
                    Precondition::Strict
                } else {
                    Precondition::Unchecked
                },
            };
            let enc = encode_md(&sig, &lattice, &params(&cfg)?, &grid, &opts)?;
            write(&out, "samples.csv", &field_to_csv(&enc.folded))?;
            write(&out, "clean.csv", &field_to_csv(&enc.clean))?;
            let (events, levels) = ledger_to_csv(&enc.ledger);
            write(&out, "ledger_events.csv", &events)?;
            write(&out, "ledger_levels.csv", &levels)?;
            out!("folds={}\n", enc.ledger.event_count());
            out!("max_spread={}\n", enc.max_spread);
        }
        Command::Recover {
            config,
            samples,
            out,
            seed,
            sup_norm,
            levels,
        } => {
            let cfg = load(&config, seed)?;
            let out = out.unwrap_or_else(|| cfg.out_dir.clone());
            let lattice = lattice_for(&cfg, cfg.t2_list[0])?;
            let p = params(&cfg)?;
            let y = field_from_csv::<f64>(&read(&samples)?, cfg.dimension)?;
            let det =
                DetectionConfig::new(&p, &lattice, cfg.diff_order)?.with_levels(levels.into());
            let rec = reconstruct(&y, &det)?;
            write(&out, "reconstruction.csv", &field_to_csv(&rec.estimate))?;
            let (folds, lv) = recovery_to_csv(&rec, cfg.dimension - 1);
            write(&out, "recovery_folds.csv", &folds)?;
            write(&out, "recovery_levels.csv", &lv)?;
            let sup = sup_norm.unwrap_or_else(|| rec.estimate.max_abs());
            let report =
                ConditionReport::evaluate(&p, &lattice, &bandwidth(&cfg)?, sup, cfg.diff_order);
            let text = format!("sup_norm={sup}\n{}", report.to_key_values());
            write(&out, "conditions.txt", &text)?;
            out!("folds={}\n", rec.detection.fold_count());
            out!("{text}");
        }
        Command::Bench {
            config,
            full,
            jobs,
            out,
            seed,
            timing,
            levels,
        } => {
            let mut cfg = load(&config, seed)?;
            if full {
                cfg.trials = 100;
            }
            let out = out.unwrap_or_else(|| cfg.out_dir.clone());
            let opts = SweepOptions {
                jobs,
                timing,
                levels: levels.into(),
            };
            let result = run_sweep(&cfg, &opts)?;
            write(&out, "sweep.csv", &sweep_to_csv(&result))?;
            for m in METHODS {
                let svg = heatmap_svg(&result, m, &cfg.sigma_list, &cfg.t2_list);
                write(&out, &format!("accuracy_{m}.svg"), &svg)?;
            }
            out!("{}", sweep_to_csv(&result));
        }
        Command::Bounds {
            config,
            sup_norm,
            seed,
        } => {
            let cfg = load(&config, seed)?;
            let p = params(&cfg)?;
            let bw = bandwidth(&cfg)?;
            for &t2 in &cfg.t2_list {
                let lattice = lattice_for(&cfg, t2)?;
                let grid = study_grid(&cfg, &lattice)?;
                let geometry =
                    mdfold_core::BandGeometry::new(cfg.band_width, lattice.periods().to_vec())?;
                let (blo, bhi) = geometry.band_box(&grid)?;
                let bands: Vec<usize> = blo
                    .iter()
                    .zip(&bhi)
                    .map(|(l, h)| (h - l + 1) as usize)
                    .collect();
                for &sigma in &cfg.sigma_list {
                    let b = compute_bounds(
                        &p,
                        &lattice,
                        &bw,
                        sup_norm,
                        sigma,
                        cfg.diff_order,
                        grid.extent(0),
                        &bands,
                    )?;
                    out!(
                        "t2={t2} sigma={sigma} C={} p_err_fold={} kappa_min={} p_err_level={} p_acc={}\n",
                        b.c, b.p_err_fold, b.kappa_min, b.p_err_level, b.p_acc
                    );
                }
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                CliError::Config(_) => ExitCode::from(2),
                CliError::Run(_) => ExitCode::from(3),
            }
        }
    }
}

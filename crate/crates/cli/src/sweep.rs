//! Monte Carlo comparison of line-wise unfolding of ideal-modulo samples against band-wise
//! recovery of modulo-hysteresis samples over a (σ, T₂) grid.

use std::time::Instant;

use mdfold_core::{
    encode_md, reconstruct, sample_on_lattice, score_recovery, usf_recover_field, BandGeometry,
    Bandwidth, DetectionConfig, DomainBox, EncodeOptions, GridSpec, HysteresisParams, Lattice,
    LevelEstimator, Precondition, SampleField, UsfConfig,
};
use rayon::prelude::*;

use crate::config::ExperimentConfig;
use crate::rng::{gen_noise, gen_signal, noise_stream, signal_stream};

pub const METHOD_USF: &str = "ideal-usf";
pub const METHOD_MD: &str = "md-hysteresis";
pub const METHODS: [&str; 2] = [METHOD_USF, METHOD_MD];

/// Runtime failures; the command-line tool maps these to exit code 3.
#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Core(#[from] mdfold_core::Error),
    #[error("{0}")]
    Io(String),
    #[error("{0}")]
    Setup(String),
}

pub fn bandwidth(cfg: &ExperimentConfig) -> Result<Bandwidth<f64>, RunError> {
    Ok(Bandwidth::new(cfg.omega.clone())?)
}

pub fn domain(cfg: &ExperimentConfig) -> Result<DomainBox<f64>, RunError> {
    Ok(DomainBox::new(
        cfg.domain_min.clone(),
        cfg.domain_max.clone(),
    )?)
}

pub fn params(cfg: &ExperimentConfig) -> Result<HysteresisParams<f64>, RunError> {
    Ok(HysteresisParams::new(cfg.lambda, cfg.h, cfg.band_width)?)
}

/// Lattice with periods `(t1, t2, …, t2)` and the configured basis (columns normalized).
pub fn lattice_for(cfg: &ExperimentConfig, t2: f64) -> Result<Lattice<f64>, RunError> {
    let mut periods = vec![cfg.t1];
    periods.extend(std::iter::repeat_n(t2, cfg.dimension - 1));
    Ok(Lattice::with_normalized_basis(
        cfg.basis_rows.clone(),
        periods,
    )?)
}

/// Index box of the domain: `k_1` covers every lattice point inside it, and each transverse axis is
/// clipped to the whole bands that fit.
pub fn study_grid(cfg: &ExperimentConfig, lattice: &Lattice<f64>) -> Result<GridSpec, RunError> {
    let t = lattice.periods();
    let eps = 1e-9;
    let mut lo = vec![(cfg.domain_min[0] / t[0] - eps).ceil() as i64];
    let mut hi = vec![(cfg.domain_max[0] / t[0] + eps).floor() as i64];
    let geometry = BandGeometry::new(cfg.band_width, t.to_vec())?;
    for (a, &n) in geometry.per_band().iter().enumerate() {
        let blo = (cfg.domain_min[a + 1] / cfg.band_width - eps).ceil() as i64;
        let bhi = (cfg.domain_max[a + 1] / cfg.band_width + eps).floor() as i64 - 1;
        if blo > 0 || bhi < 0 {
            return Err(RunError::Setup(format!(
                "domain along axis {} holds no whole band around 0",
                a + 2
            )));
        }
        lo.push(blo * n);
        hi.push((bhi + 1) * n - 1);
    }
    Ok(GridSpec::new(lo, hi)?)
}

/// Options of [`run_sweep`] that do not affect the random streams.
#[derive(Debug, Clone, Copy)]
pub struct SweepOptions {
    pub jobs: usize,
    /// Write measured wall times; otherwise `wall_ms` is 0 so that output is reproducible byte for byte.
    pub timing: bool,
    pub levels: LevelEstimator,
}

impl Default for SweepOptions {
    fn default() -> Self {
        Self {
            jobs: 1,
            timing: false,
            levels: LevelEstimator::AllSlices,
        }
    }
}

/// Result of one method on one trial of one cell.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub method: &'static str,
    pub sigma: f64,
    pub t2: f64,
    pub trial: usize,
    pub success: bool,
    pub max_err: f64,
    /// Unfolding only: whether some difference of the noise reached `λ − (T₁Ω₁e)^N max|γ|`.
    pub noise_violation: Option<bool>,
    pub clean_checksum: u64,
    pub noise_checksum: u64,
    pub elapsed_ms: f64,
}

/// One row of `sweep.csv`.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub method: String,
    pub sigma: f64,
    pub t2: f64,
    pub trials: usize,
    pub successes: usize,
    pub accuracy: f64,
    pub mean_max_err: f64,
    pub wall_ms: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
    pub trials: Vec<TrialRecord>,
}

impl SweepResult {
    pub fn row(&self, method: &str, sigma: f64, t2: f64) -> Option<&SweepRow> {
        self.rows
            .iter()
            .find(|r| r.method == method && r.sigma == sigma && r.t2 == t2)
    }
}

/// FNV-1a over the bit patterns of a field.
pub fn checksum(field: &SampleField<f64>) -> u64 {
    field.data().iter().fold(0xcbf2_9ce4_8422_2325u64, |h, v| {
        v.to_bits()
            .to_le_bytes()
            .iter()
            .fold(h, |h, &b| (h ^ b as u64).wrapping_mul(0x0100_0000_01b3))
    })
}

/// Whether some `|Δ^N η|` along `x_1` reaches `λ − (T₁Ω₁e)^N ‖f‖`.
fn noise_violates(
    noise: &SampleField<f64>,
    cfg: &ExperimentConfig,
    usf: &UsfConfig<f64>,
    sup: f64,
) -> bool {
    let n = cfg.diff_order as i32;
    let bound = cfg.lambda - (cfg.t1 * cfg.omega[0] * std::f64::consts::E).powi(n) * sup;
    let (tlo, thi) = noise.grid().transverse();
    mdfold_core::BoxIter::new(tlo, thi).any(|kbar| {
        let line = noise.line(&kbar).unwrap();
        (0..line.len() - usf.kernel.order()).any(|m| usf.kernel.apply(&line, m).abs() >= bound)
    })
}

/// All σ cells of one (T₂, trial) pair: both methods see the same `γ` and `η`.
fn run_trial(
    cfg: &ExperimentConfig,
    t2: f64,
    trial: usize,
    levels: LevelEstimator,
) -> Result<Vec<TrialRecord>, RunError> {
    let lattice = lattice_for(cfg, t2)?;
    let grid = study_grid(cfg, &lattice)?;
    let p = params(cfg)?;
    let sig = gen_signal(
        &mut signal_stream(cfg.seed, trial),
        bandwidth(cfg)?,
        domain(cfg)?,
    );
    let clean = sample_on_lattice(&sig, &lattice, &grid)?;
    let sup = clean.max_abs();
    let opts = EncodeOptions {
        q: cfg.oversample_q,
        oversample: cfg.oversample_diag,
        single_point_bands: false,
        precondition: Precondition::Unchecked,
    };
    let encoded = encode_md(&sig, &lattice, &p, &grid, &opts)?;
    let ideal = clean.map(|v| mdfold_core::ideal_modulo(v, cfg.lambda));
    let usf = UsfConfig::new(cfg.lambda, cfg.diff_order)?;
    let det = DetectionConfig::new(&p, &lattice, cfg.diff_order)?.with_levels(levels);
    let clean_sum = checksum(&clean);

    let mut out = Vec::new();
    for &sigma in &cfg.sigma_list {
        let noise = gen_noise(&mut noise_stream(cfg.seed, sigma, t2, trial), sigma, &grid);
        let noise_sum = checksum(&noise);

        let start = Instant::now();
        let y = ideal.zip_map(&noise, |a, b| a + b)?;
        let score = score_recovery(
            &usf_recover_field(&y, &usf)?,
            &clean,
            &noise,
            2.0 * cfg.lambda,
        )?;
        let violation = noise_violates(&noise, cfg, &usf, sup);
        out.push(TrialRecord {
            method: METHOD_USF,
            sigma,
            t2,
            trial,
            success: score.success,
            max_err: score.max_err,
            noise_violation: Some(violation),
            clean_checksum: clean_sum,
            noise_checksum: noise_sum,
            elapsed_ms: start.elapsed().as_secs_f64() * 1e3,
        });

        let start = Instant::now();
        let y = encoded.folded.zip_map(&noise, |a, b| a + b)?;
        let score = score_recovery(&reconstruct(&y, &det)?.estimate, &clean, &noise, cfg.h)?;
        out.push(TrialRecord {
            method: METHOD_MD,
            sigma,
            t2,
            trial,
            success: score.success,
            max_err: score.max_err,
            noise_violation: None,
            clean_checksum: clean_sum,
            noise_checksum: noise_sum,
            elapsed_ms: start.elapsed().as_secs_f64() * 1e3,
        });
    }
    Ok(out)
}

/// Runs every (T₂, trial) pair in parallel and aggregates per (method, σ, T₂).
///
/// Rows are ordered by method, then σ, then T₂ as listed in the configuration. Random streams are
/// keyed by parameter values, so results do not depend on `jobs` or on which other cells are present.
pub fn run_sweep(cfg: &ExperimentConfig, opts: &SweepOptions) -> Result<SweepResult, RunError> {
    if cfg.dimension < 2 {
        return Err(RunError::Setup("the sweep needs dimension >= 2".into()));
    }
    let tasks: Vec<(f64, usize)> = cfg
        .t2_list
        .iter()
        .flat_map(|&t2| (0..cfg.trials).map(move |t| (t2, t)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.jobs.max(1))
        .build()
        .map_err(|e| RunError::Setup(e.to_string()))?;
    let per_task: Vec<Result<Vec<TrialRecord>, RunError>> = pool.install(|| {
        tasks
            .par_iter()
            .map(|&(t2, trial)| run_trial(cfg, t2, trial, opts.levels))
            .collect()
    });
    let mut trials = Vec::new();
    for r in per_task {
        trials.extend(r?);
    }
    let mut rows = Vec::new();
    for method in METHODS {
        for &sigma in &cfg.sigma_list {
            for &t2 in &cfg.t2_list {
                let mut cell: Vec<&TrialRecord> = trials
                    .iter()
                    .filter(|r| r.method == method && r.sigma == sigma && r.t2 == t2)
                    .collect();
                cell.sort_by_key(|r| r.trial);
                let successes = cell.iter().filter(|r| r.success).count();
                let n = cell.len();
                let mean = cell.iter().map(|r| r.max_err).sum::<f64>() / n as f64;
                let wall = if opts.timing {
                    cell.iter().map(|r| r.elapsed_ms).sum::<f64>().round() as u64
                } else {
                    0
                };
                rows.push(SweepRow {
                    method: method.to_string(),
                    sigma,
                    t2,
                    trials: n,
                    successes,
                    accuracy: successes as f64 / n as f64,
                    mean_max_err: mean,
                    wall_ms: wall,
                });
            }
        }
    }
    Ok(SweepResult { rows, trials })
}

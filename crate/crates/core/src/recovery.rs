//! Fold detection, level propagation across bands, reconstruction and recovery guarantees.

use std::collections::BTreeMap;

use crate::encoder::HysteresisParams;
use crate::error::{Error, Result};
use crate::filters::{apply_psi_bb_at, finite_diff, BandGeometry, BandLines, FiniteDiffKernel};
use crate::grid::{BoxIter, SampleField};
use crate::lattice::{Bandwidth, Lattice};
use crate::scalar::{from_i64, lit, sign_pos, Real};

/// How band levels `M̃` are carried across band boundaries.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LevelEstimator {
    /// One cross-boundary filter on the `k_1 = 0` slice.
    ZeroSlice,
    /// Cross-boundary filter averaged over every `k_1` slice after removing the detected folds,
    /// rounded to the nearest level step.
    AllSlices,
}

/// Parameters of the recovery pipeline.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectionConfig<T> {
    pub kernel: FiniteDiffKernel,
    pub geometry: BandGeometry<T>,
    pub h: T,
    /// Detection threshold, `h/2`.
    pub threshold: T,
    pub levels: LevelEstimator,
}

impl<T: Real> DetectionConfig<T> {
    pub fn new(params: &HysteresisParams<T>, lattice: &Lattice<T>, order: usize) -> Result<Self> {
        params.validate()?;
        Ok(Self {
            kernel: finite_diff(order)?,
            geometry: BandGeometry::new(params.band_width, lattice.periods().to_vec())?,
            h: params.h,
            threshold: params.h / lit(2.0),
            levels: LevelEstimator::ZeroSlice,
        })
    }

    pub fn with_levels(mut self, levels: LevelEstimator) -> Self {
        self.levels = levels;
        self
    }

    pub fn order(&self) -> usize {
        self.kernel.order()
    }
}

/// A detected fold. `m_min` is the filter start in the coordinates of its half-line scan
/// (`k_1 = m` for `r > 0`, `k_1 = −m` for `r < 0`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectedFold<T> {
    pub r: i64,
    pub m_min: i64,
    pub tau_est: T,
    pub sign_est: i8,
}

impl<T: Real> DetectedFold<T> {
    /// First lattice index `k_1` (in scan direction) carrying the fold.
    pub fn onset(&self, order: usize) -> i64 {
        let j = self.m_min + order as i64;
        if self.r > 0 {
            j
        } else {
            -j
        }
    }
}

/// Detected folds per band.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectionResult<T> {
    pub order: usize,
    pub bands: BTreeMap<Vec<i64>, Vec<DetectedFold<T>>>,
}

impl<T: Real> DetectionResult<T> {
    pub fn fold_count(&self) -> usize {
        self.bands.values().map(|v| v.len()).sum()
    }

    /// `Σ s̃_r` of folds in effect at each `k_1 ∈ [k1_lo, k1_hi]`.
    pub fn fold_steps(&self, band: &[i64], k1_lo: i64, k1_hi: i64) -> Vec<i64> {
        let folds = self.bands.get(band).map(|v| v.as_slice()).unwrap_or(&[]);
        (k1_lo..=k1_hi)
            .map(|k| {
                folds
                    .iter()
                    .filter(|f| {
                        let on = f.onset(self.order);
                        if f.r > 0 {
                            k >= on
                        } else {
                            k <= on
                        }
                    })
                    .map(|f| f.sign_est as i64)
                    .sum()
            })
            .collect()
    }
}

/// Scans one half-line; returns `(m_min, filter output)` per detection.
fn scan_half<T: Real>(seq: &[T], kernel: &FiniteDiffKernel, threshold: T) -> Vec<(i64, T)> {
    let n = kernel.order();
    let mut out = Vec::new();
    let mut m = 0usize;
    while m + n < seq.len() {
        let v = kernel.apply(seq, m);
        if v.abs() >= threshold {
            out.push((m as i64, v));
            m += n + 1;
        } else {
            m += 1;
        }
    }
    out
}

fn detect_in_lines<T: Real>(
    lines: &BandLines<T>,
    cfg: &DetectionConfig<T>,
    k1_hi: i64,
) -> DetectionResult<T> {
    let t1 = cfg.geometry.periods()[0];
    let n = cfg.order() as i64;
    let zero = (-lines.k1_lo()) as usize;
    let mut bands = BTreeMap::new();
    for band in lines.bands() {
        let line = lines.line(band).unwrap();
        let pos = &line[zero..=zero + k1_hi as usize];
        let neg: Vec<T> = line[..=zero].iter().rev().copied().collect();
        let mut folds = Vec::new();
        for (r, &(m, v)) in scan_half(&neg, &cfg.kernel, cfg.threshold)
            .iter()
            .enumerate()
            .rev()
        {
            folds.push(DetectedFold {
                r: -(r as i64) - 1,
                m_min: m,
                tau_est: -(from_i64::<T>(m + n) * t1),
                sign_est: -sign_pos(v),
            });
        }
        for (r, &(m, v)) in scan_half(pos, &cfg.kernel, cfg.threshold)
            .iter()
            .enumerate()
        {
            folds.push(DetectedFold {
                r: r as i64 + 1,
                m_min: m,
                tau_est: from_i64::<T>(m + n) * t1,
                sign_est: -sign_pos(v),
            });
        }
        bands.insert(band.clone(), folds);
    }
    DetectionResult {
        order: cfg.order(),
        bands,
    }
}

fn check_origin<T: Real>(y: &SampleField<T>) -> Result<(i64, i64)> {
    let (lo, hi) = (y.grid().lo()[0], y.grid().hi()[0]);
    if lo > 0 || hi < 0 {
        return Err(Error::OutOfRange("field must contain k_1 = 0".into()));
    }
    Ok((lo, hi))
}

/// Band-wise fold detection: scan `m` upward from 0 on each half-line and report the first
/// `|⟨y, ψ_{b̄,m}⟩| ≥ h/2` of every group, then resume after the filter support.
pub fn detect_folds<T: Real>(
    y: &SampleField<T>,
    cfg: &DetectionConfig<T>,
) -> Result<DetectionResult<T>> {
    let (_, hi) = check_origin(y)?;
    let lines = BandLines::new(y, &cfg.geometry)?;
    Ok(detect_in_lines(&lines, cfg, hi))
}

/// Level change `M̃_{upper} − M̃_{lower}` implied by a cross-boundary filter output, whose mean is
/// `h (M_{upper} − M_{lower}) (−1)^N`. The single-slice rule only resolves steps of ±1; the
/// averaged statistic is rounded to the nearest integer step.
fn level_step<T: Real>(v: T, cfg: &DetectionConfig<T>) -> i64 {
    let parity = if cfg.order().is_multiple_of(2) { 1 } else { -1 };
    match cfg.levels {
        LevelEstimator::ZeroSlice if v.abs() >= cfg.threshold => sign_pos(v) as i64 * parity,
        LevelEstimator::ZeroSlice => 0,
        LevelEstimator::AllSlices => (v / cfg.h).round().to_i64().unwrap_or(0) * parity,
    }
}

fn boundary_output<T: Real>(
    y: &SampleField<T>,
    cfg: &DetectionConfig<T>,
    det: &DetectionResult<T>,
    lower: &[i64],
    upper: &[i64],
) -> Result<T> {
    match cfg.levels {
        LevelEstimator::ZeroSlice => {
            apply_psi_bb_at(y, &cfg.geometry, &cfg.kernel, lower, upper, 0)
        }
        LevelEstimator::AllSlices => {
            let (lo, hi) = (y.grid().lo()[0], y.grid().hi()[0]);
            let fl = det.fold_steps(lower, lo, hi);
            let fu = det.fold_steps(upper, lo, hi);
            let tap0 = from_i64::<T>(cfg.kernel.taps()[0]);
            let mut acc = T::zero();
            for (i, k1) in (lo..=hi).enumerate() {
                let v = apply_psi_bb_at(y, &cfg.geometry, &cfg.kernel, lower, upper, k1)?;
                acc = acc + v + cfg.h * tap0 * from_i64::<T>(fl[i] - fu[i]);
            }
            Ok(acc / from_i64(hi - lo + 1))
        }
    }
}

/// Band levels `M̃_b̄` relative to `M̃_0̄ = 0`, propagated along axis 2, then 3, … .
pub fn propagate_m<T: Real>(
    y: &SampleField<T>,
    cfg: &DetectionConfig<T>,
    det: &DetectionResult<T>,
) -> Result<BTreeMap<Vec<i64>, i64>> {
    check_origin(y)?;
    let (blo, bhi) = cfg.geometry.band_box(y.grid())?;
    let origin = vec![0i64; blo.len()];
    if blo.iter().zip(&bhi).any(|(&l, &h)| l > 0 || h < 0) {
        return Err(Error::OutOfRange("band 0 must lie inside the field".into()));
    }
    let mut levels = BTreeMap::new();
    levels.insert(origin, 0i64);
    for axis in 0..blo.len() {
        let seeds: Vec<(Vec<i64>, i64)> = levels.iter().map(|(b, &m)| (b.clone(), m)).collect();
        for (seed, m0) in seeds {
            let mut b = seed.clone();
            let mut m = m0;
            while b[axis] < bhi[axis] {
                let mut up = b.clone();
                up[axis] += 1;
                m += level_step(boundary_output(y, cfg, det, &b, &up)?, cfg);
                levels.insert(up.clone(), m);
                b = up;
            }
            let mut b = seed;
            let mut m = m0;
            while b[axis] > blo[axis] {
                let mut down = b.clone();
                down[axis] -= 1;
                m -= level_step(boundary_output(y, cfg, det, &down, &b)?, cfg);
                levels.insert(down.clone(), m);
                b = down;
            }
        }
    }
    Ok(levels)
}

/// Output of [`reconstruct`].
#[derive(Debug, Clone, PartialEq)]
pub struct ReconstructionResult<T> {
    /// `γ̃ = y + ε̃`, equal to `γ − h M_0̄` when every fold and level is recovered.
    pub estimate: SampleField<T>,
    pub residual: SampleField<T>,
    pub detection: DetectionResult<T>,
    pub levels: BTreeMap<Vec<i64>, i64>,
}

/// Full recovery: detect folds per band, propagate levels, rebuild `ε̃` and add it back.
pub fn reconstruct<T: Real>(
    y: &SampleField<T>,
    cfg: &DetectionConfig<T>,
) -> Result<ReconstructionResult<T>> {
    let detection = detect_folds(y, cfg)?;
    let levels = propagate_m(y, cfg, &detection)?;
    let grid = y.grid();
    let (lo, hi) = (grid.lo()[0], grid.hi()[0]);
    let mut lines: BTreeMap<Vec<i64>, Vec<T>> = BTreeMap::new();
    for (band, &m) in &levels {
        let steps = detection.fold_steps(band, lo, hi);
        lines.insert(
            band.clone(),
            steps
                .iter()
                .map(|&s| cfg.h * from_i64::<T>(m + s))
                .collect(),
        );
    }
    let mut residual = SampleField::zeros(grid.clone());
    let (tlo, thi) = grid.transverse();
    for kbar in BoxIter::new(tlo, thi) {
        let band = cfg.geometry.band_of(&kbar)?;
        residual.set_line(&kbar, &lines[&band])?;
    }
    let estimate = y.zip_map(&residual, |a, b| a + b)?;
    Ok(ReconstructionResult {
        estimate,
        residual,
        detection,
        levels,
    })
}

/// One inequality of the recovery guarantee: holds iff `lhs < rhs`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Condition<T> {
    pub lhs: T,
    pub rhs: T,
}

impl<T: Real> Condition<T> {
    pub fn holds(&self) -> bool {
        self.lhs < self.rhs
    }
}

/// Sufficient conditions for exact noiseless recovery, evaluated for a given `‖f‖_∞`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionReport<T> {
    /// `‖f‖_∞ B √D ‖Ω‖_2 < min{h/2, 2λ − 3h}`.
    pub spread: Condition<T>,
    /// `(T_d Ω_d e)^N ‖f‖_∞ < h/2`, worst axis.
    pub annihilation: Condition<T>,
    /// `(N+1) T_1 < h / (Ω_1 ‖f‖_∞)`.
    pub separation: Condition<T>,
    /// `(N+1) T_d < B`, worst transverse axis.
    pub band_support: Condition<T>,
}

impl<T: Real> ConditionReport<T> {
    pub fn evaluate(
        params: &HysteresisParams<T>,
        lattice: &Lattice<T>,
        bw: &Bandwidth<T>,
        sup_norm: T,
        order: usize,
    ) -> Self {
        let d = lattice.dim();
        let e = T::E();
        let n = order as i32;
        let two = lit::<T>(2.0);
        let spread = Condition {
            lhs: sup_norm * params.band_width * from_i64::<T>(d as i64).sqrt() * bw.norm(),
            rhs: (params.h / two).min(two * params.lambda - lit::<T>(3.0) * params.h),
        };
        let annihilation = Condition {
            lhs: lattice
                .periods()
                .iter()
                .zip(bw.omega())
                .map(|(&t, &w)| (t * w * e).powi(n) * sup_norm)
                .fold(T::zero(), T::max),
            rhs: params.h / two,
        };
        let np1 = from_i64::<T>(order as i64 + 1);
        let separation = Condition {
            lhs: np1 * lattice.periods()[0],
            rhs: params.h / (bw.omega()[0] * sup_norm),
        };
        let band_support = Condition {
            lhs: np1
                * lattice.periods()[1..]
                    .iter()
                    .copied()
                    .fold(T::zero(), T::max),
            rhs: params.band_width,
        };
        Self {
            spread,
            annihilation,
            separation,
            band_support,
        }
    }

    pub fn all_hold(&self) -> bool {
        self.spread.holds()
            && self.annihilation.holds()
            && self.separation.holds()
            && self.band_support.holds()
    }

    /// Key/value lines `name=lhs<rhs:true|false`.
    pub fn to_key_values(&self) -> String {
        let row =
            |name: &str, c: &Condition<T>| format!("{name}={}<{}:{}\n", c.lhs, c.rhs, c.holds());
        let mut s = String::new();
        s += &row("spread", &self.spread);
        s += &row("annihilation", &self.annihilation);
        s += &row("separation", &self.separation);
        s += &row("band_support", &self.band_support);
        s += &format!("all={}\n", self.all_hold());
        s
    }
}

/// Noise guarantees for Gaussian noise of standard deviation `σ`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundReport<T> {
    /// Detection margin `C`; infinite when `σ = 0`.
    pub c: T,
    /// `κ_{d*}` for each transverse axis.
    pub kappa: Vec<T>,
    pub kappa_min: T,
    /// Upper bound on the probability of one wrong fold decision.
    pub p_err_fold: T,
    /// Upper bound on the probability of one wrong level step.
    pub p_err_level: T,
    /// Lower bound on the probability of exact recovery.
    pub p_acc: T,
}

/// `e^{−x²}` for a positive margin, `1` (vacuous) otherwise.
fn tail<T: Real>(margin: T) -> T {
    if margin > T::zero() {
        (-(margin * margin)).exp()
    } else {
        T::one()
    }
}

/// Evaluates the noise bounds. `k1_count` is the number of samples along `x_1` and
/// `bands_per_axis` the number of bands along each transverse axis.
#[allow(clippy::too_many_arguments)]
pub fn compute_bounds<T: Real>(
    params: &HysteresisParams<T>,
    lattice: &Lattice<T>,
    bw: &Bandwidth<T>,
    sup_norm: T,
    sigma: T,
    order: usize,
    k1_count: usize,
    bands_per_axis: &[usize],
) -> Result<BoundReport<T>> {
    params.validate()?;
    if !(sigma >= T::zero()) {
        return Err(Error::InvalidParameter("sigma must be non-negative".into()));
    }
    let d = lattice.dim();
    if bw.dim() != d || bands_per_axis.len() + 1 != d {
        return Err(Error::DimensionMismatch("bounds inputs".into()));
    }
    let t = lattice.periods();
    let w = bw.omega();
    let e = T::E();
    let n = order as i32;
    let half_h = params.h / lit(2.0);
    let denom = sigma * lit::<T>(2.0).powi(n + 1).sqrt();
    let margin = |num: T, gain: T| -> T {
        if num <= T::zero() {
            T::zero()
        } else if sigma == T::zero() {
            T::infinity()
        } else {
            num / denom * gain
        }
    };
    let ratio_root = |a: usize| (params.band_width / t[a]).sqrt();

    let c = margin(
        half_h - (t[0] * w[0] * e).powi(n) * sup_norm,
        (1..d).map(ratio_root).fold(T::one(), |p, r| p * r),
    );
    let kappa: Vec<T> = (1..d)
        .map(|ds| {
            margin(
                half_h - (t[ds] * w[ds] * e).powi(n) * sup_norm,
                (1..d)
                    .filter(|&a| a != ds)
                    .map(ratio_root)
                    .fold(T::one(), |p, r| p * r),
            )
        })
        .collect();
    let kappa_min = if d > 1 {
        let worst = (1..d).map(|a| t[a] * w[a]).fold(T::zero(), T::max);
        let t_max = t[1..].iter().copied().fold(T::zero(), T::max);
        margin(
            half_h - (worst * e).powi(n) * sup_norm,
            (params.band_width / t_max).powi(d as i32 - 2).sqrt(),
        )
    } else {
        T::infinity()
    };
    let p_err_fold = tail(c);
    let p_err_level = tail(kappa_min);
    let bands: T = bands_per_axis
        .iter()
        .fold(T::one(), |p, &b| p * from_i64::<T>(b as i64));
    let p_acc = (T::one() - p_err_fold).powf(from_i64::<T>(k1_count as i64) * bands)
        * (T::one() - p_err_level).powf(bands);
    Ok(BoundReport {
        c,
        kappa,
        kappa_min,
        p_err_fold,
        p_err_level,
        p_acc,
    })
}

/// Outcome of comparing a reconstruction with the truth.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Score<T> {
    pub success: bool,
    /// `max |γ̃ − γ − η − c*|`.
    pub max_err: T,
    /// Global offset `c*`, a multiple of the grid step.
    pub offset: T,
}

/// Scores `estimate` against `clean + noise` up to one global offset on the grid `step·ℤ`.
pub fn score_recovery<T: Real>(
    estimate: &SampleField<T>,
    clean: &SampleField<T>,
    noise: &SampleField<T>,
    step: T,
) -> Result<Score<T>> {
    let diff = estimate
        .zip_map(clean, |a, b| a - b)?
        .zip_map(noise, |a, b| a - b)?;
    let mut v = diff.data().to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    let n = v.len();
    let median = if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / lit(2.0)
    };
    let offset = step * (median / step).round();
    let max_err = diff
        .data()
        .iter()
        .fold(T::zero(), |m, &x| m.max((x - offset).abs()));
    let tol = lit::<T>(1e-6) * T::one().max(clean.max_abs());
    Ok(Score {
        success: max_err < tol,
        max_err,
        offset,
    })
}

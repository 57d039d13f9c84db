//! Ideal modulo and modulo-hysteresis encoders.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::filters::BandGeometry;
use crate::grid::{BoxIter, GridSpec, SampleField};
use crate::lattice::{sample_on_lattice, BandlimitedSignal, Lattice};
use crate::scalar::{floor_tol, from_i64, lit, sign_pos, Real};

/// Threshold `λ`, hysteresis `h` and band width `B`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HysteresisParams<T> {
    pub lambda: T,
    pub h: T,
    pub band_width: T,
}

impl<T: Real> HysteresisParams<T> {
    pub fn new(lambda: T, h: T, band_width: T) -> Result<Self> {
        let p = Self {
            lambda,
            h,
            band_width,
        };
        p.validate()?;
        Ok(p)
    }

    /// Checks `λ > 0`, `0 ≤ h < 2λ/3` and `B > 0`.
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda > T::zero()) || !self.lambda.is_finite() {
            return Err(Error::InvalidParameter("lambda must be positive".into()));
        }
        if !(self.h >= T::zero()) || !(self.h < lit::<T>(2.0) * self.lambda / lit(3.0)) {
            return Err(Error::InvalidParameter(format!(
                "h = {} outside [0, 2*lambda/3)",
                self.h
            )));
        }
        if !(self.band_width > T::zero()) || !self.band_width.is_finite() {
            return Err(Error::InvalidParameter(
                "band width must be positive".into(),
            ));
        }
        Ok(())
    }

    /// `λ_h = λ − h/2`.
    pub fn lambda_h(&self) -> T {
        self.lambda - self.h / lit(2.0)
    }

    /// Initial residual level `M = ⌊(v + λ)/h⌋ − 1` for a starting value `v`.
    pub fn initial_level(&self, v: T) -> i64 {
        floor_tol((v + self.lambda) / self.h) - 1
    }
}

/// Centered modulo `2λ(frac(x/2λ + 1/2) − 1/2)`, with values in `[−λ, λ)`.
pub fn ideal_modulo<T: Real>(x: T, lambda: T) -> T {
    let two = lit::<T>(2.0) * lambda;
    let u = x / two + lit(0.5);
    let v = two * (u - u.floor() - lit(0.5));
    if v >= lambda {
        v - two
    } else {
        v
    }
}

/// Fold event of the one-dimensional encoder at sample `index` (relative to time zero).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Event1d {
    pub r: i64,
    pub index: i64,
    pub sign: i8,
}

/// Output of [`encode_1d`].
#[derive(Debug, Clone, PartialEq)]
pub struct Encode1d<T> {
    pub folded: Vec<T>,
    pub residual: Vec<T>,
    pub level: i64,
    pub events: Vec<Event1d>,
}

/// One-dimensional modulo-hysteresis on a fine grid; `g[zero]` is the value at time zero.
///
/// Fold times are the first grid points where the running quantity reaches a multiple of `2λ`;
/// residual jumps are `2λ_h s_r`. With `h = 0` the initial residual is taken from the ideal modulo,
/// so the output coincides with [`ideal_modulo`] away from exact threshold hits.
pub fn encode_1d<T: Real>(
    g: &[T],
    zero: usize,
    params: &HysteresisParams<T>,
) -> Result<Encode1d<T>> {
    params.validate()?;
    if zero >= g.len() {
        return Err(Error::OutOfRange(
            "time-zero index outside the sample vector".into(),
        ));
    }
    let limit = if params.h > T::zero() {
        params.h / lit(4.0)
    } else {
        params.lambda / lit(2.0)
    };
    if let Some(w) = g.windows(2).find(|w| !((w[1] - w[0]).abs() < limit)) {
        return Err(Error::Resolution(format!(
            "consecutive samples differ by {} (limit {limit})",
            (w[1] - w[0]).abs()
        )));
    }
    let g0 = g[zero];
    let (level, base) = if params.h > T::zero() {
        let m = params.initial_level(g0);
        (m, params.h * from_i64(m))
    } else {
        (0, g0 - ideal_modulo(g0, params.lambda))
    };
    let jump = lit::<T>(2.0) * params.lambda_h();

    let forward: Vec<T> = g[zero..].to_vec();
    let backward: Vec<T> = g[..=zero].iter().rev().copied().collect();
    let pos = scan_1d(&forward, params);
    let neg = scan_1d(&backward, params);

    let mut residual = vec![base; g.len()];
    let mut events = Vec::new();
    for (r, &(i, s)) in neg.iter().enumerate().rev() {
        events.push(Event1d {
            r: -(r as i64) - 1,
            index: -(i as i64),
            sign: s,
        });
    }
    for (r, &(i, s)) in pos.iter().enumerate() {
        events.push(Event1d {
            r: r as i64 + 1,
            index: i as i64,
            sign: s,
        });
    }
    for e in &events {
        let step = jump * from_i64::<T>(e.sign as i64);
        let at = zero as i64 + e.index;
        if e.r > 0 {
            for v in residual[at as usize..].iter_mut() {
                *v = *v + step;
            }
        } else {
            for v in residual[..=at as usize].iter_mut() {
                *v = *v + step;
            }
        }
    }
    let folded = g.iter().zip(&residual).map(|(&a, &b)| a - b).collect();
    Ok(Encode1d {
        folded,
        residual,
        level,
        events,
    })
}

/// Forward scan for `t ≥ 0`; returns `(index, sign)` of each fold.
///
/// The fold value `g(τ_r)` is the crossed threshold level itself (the continuous-time value at the
/// fold), not the first sample past it. The sign is the crossing direction, which equals
/// `sign(g(τ_r) − g(τ_{r−1}))` for `h > 0` and stays defined when `h = 0`.
fn scan_1d<T: Real>(g: &[T], params: &HysteresisParams<T>) -> Vec<(usize, i8)> {
    let two = lit::<T>(2.0) * params.lambda;
    let mut out = Vec::new();
    let mut offset = -params.lambda;
    let mut cell = Cell::start(g[0] - offset, two);
    for (i, &v) in g.iter().enumerate().skip(1) {
        if let Some((level, s)) = cell.crossed(v - offset, two) {
            let at = level + offset;
            out.push((i, s));
            offset = at - params.h * from_i64::<T>(s as i64);
            cell = Cell::start(at - offset, two);
        }
    }
    out
}

/// Open interval `(2λ c, 2λ (c+1))` currently holding the scan variable.
enum Cell<T> {
    Known(i64),
    OnBoundary(i64, T),
}

impl<T: Real> Cell<T> {
    fn start(u: T, two: T) -> Self {
        let c = u / two;
        if c == c.round() {
            Cell::OnBoundary(c.round().to_i64().unwrap_or(0), u)
        } else {
            Cell::Known(c.floor().to_i64().unwrap_or(0))
        }
    }

    /// The threshold level reached by `u` and the crossing direction, if any.
    fn crossed(&mut self, u: T, two: T) -> Option<(T, i8)> {
        if let Cell::OnBoundary(k, u0) = *self {
            if u == u0 {
                return None;
            }
            *self = Cell::Known(if u > u0 { k } else { k - 1 });
        }
        match *self {
            Cell::Known(c) => {
                let (lo, hi) = (two * from_i64(c), two * from_i64(c + 1));
                if u <= lo {
                    Some((lo, -1))
                } else if u >= hi {
                    Some((hi, 1))
                } else {
                    None
                }
            }
            Cell::OnBoundary(..) => None,
        }
    }
}

/// One fold of the multidimensional encoder. `r > 0` for `x_1 > 0`, `r < 0` for the mirrored half.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FoldEvent<T> {
    pub r: i64,
    pub tau: T,
    pub sign: i8,
}

/// Initial level and folds of one band, ordered by `r`.
#[derive(Debug, Clone, PartialEq)]
pub struct BandLedger<T> {
    pub level: i64,
    pub events: Vec<FoldEvent<T>>,
}

/// All folds of an encoding, keyed by band index `b̄`.
#[derive(Debug, Clone, PartialEq)]
pub struct FoldLedger<T> {
    pub geometry: BandGeometry<T>,
    pub bands: BTreeMap<Vec<i64>, BandLedger<T>>,
}

impl<T: Real> FoldLedger<T> {
    pub fn event_count(&self) -> usize {
        self.bands.values().map(|b| b.events.len()).sum()
    }

    /// Residual `h (M_b̄ + Σ s_r 1[τ_r reached at k_1])` of one band on a line of `k_1` values.
    pub fn band_residual_line(
        &self,
        band: &[i64],
        h: T,
        k1: impl Iterator<Item = i64>,
    ) -> Result<Vec<T>> {
        let b = self
            .bands
            .get(band)
            .ok_or_else(|| Error::OutOfRange(format!("band {band:?} not in ledger")))?;
        let t1 = self.geometry.periods()[0];
        Ok(k1
            .map(|k| {
                let n = b
                    .events
                    .iter()
                    .filter(|e| event_active(e, k, t1))
                    .map(|e| e.sign as i64)
                    .sum::<i64>();
                h * from_i64::<T>(b.level + n)
            })
            .collect())
    }
}

/// Whether a fold has taken effect at lattice index `k1` (closed at `τ` on both halves).
pub fn event_active<T: Real>(e: &FoldEvent<T>, k1: i64, t1: T) -> bool {
    let x = from_i64::<T>(k1) * t1;
    let tol = lit::<T>(1e-9) * t1;
    if e.r > 0 {
        e.tau <= x + tol
    } else {
        e.tau >= x - tol
    }
}

/// Residual `ε_f` at lattice index `k`.
pub fn residual_at<T: Real>(
    ledger: &FoldLedger<T>,
    params: &HysteresisParams<T>,
    k: &[i64],
) -> Result<T> {
    let band = ledger.geometry.band_of(&k[1..])?;
    Ok(ledger.band_residual_line(&band, params.h, std::iter::once(k[0]))?[0])
}

/// How the well-posedness hypothesis on the intra-band spread is enforced.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Precondition {
    /// Reject signals whose measured spread is not below `min{h/2, 2λ − 3h}`.
    Strict,
    /// Encode regardless; the measured spread is still reported.
    Unchecked,
}

/// Discretization of the continuous-domain encoder.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EncodeOptions {
    /// `x_1` refinement: fold times are resolved on the grid `T_1 / q`.
    pub q: usize,
    /// Transverse oversampling of each band.
    pub oversample: usize,
    /// Replace every band by its corner point `B b̄`.
    pub single_point_bands: bool,
    pub precondition: Precondition,
}

impl Default for EncodeOptions {
    fn default() -> Self {
        Self {
            q: 8,
            oversample: 8,
            single_point_bands: false,
            precondition: Precondition::Strict,
        }
    }
}

/// Output of [`encode_md`].
#[derive(Debug, Clone, PartialEq)]
pub struct EncodeResult<T> {
    /// `z = γ − ε`.
    pub folded: SampleField<T>,
    pub residual: SampleField<T>,
    pub clean: SampleField<T>,
    pub ledger: FoldLedger<T>,
    /// Largest in-band spread `sup − inf` seen by the encoder.
    pub max_spread: T,
}

/// Samples of `(max, min, corner)` of `f` over one band along the refined `x_1` grid.
struct Envelope<T> {
    max: Vec<T>,
    min: Vec<T>,
    corner: Vec<T>,
}

fn envelope<T: Real>(
    sig: &BandlimitedSignal<T>,
    profiles: &[Vec<T>],
    corner: &[T],
    ticks: impl Iterator<Item = i64>,
    dt: T,
) -> Envelope<T> {
    let mut env = Envelope {
        max: Vec::new(),
        min: Vec::new(),
        corner: Vec::new(),
    };
    for i in ticks {
        let s1 = sig.axis_weights(0, from_i64::<T>(i) * dt);
        let dot =
            |g: &[T]| -> T { g.iter().zip(&s1).map(|(&a, &b)| a * b).sum::<T>() + sig.offset() };
        let (mut mx, mut mn) = (T::neg_infinity(), T::infinity());
        for g in profiles {
            let v = dot(g);
            mx = mx.max(v);
            mn = mn.min(v);
        }
        env.max.push(mx);
        env.min.push(mn);
        env.corner.push(dot(corner));
    }
    env
}

/// Runs the band recursion on one half-line; returns `(tick, sign)` per fold.
fn scan_band<T: Real>(
    env: &Envelope<T>,
    start: T,
    params: &HysteresisParams<T>,
) -> Vec<(usize, i8)> {
    let mut eps = start;
    let mut out = Vec::new();
    for i in 1..env.max.len() {
        let dev = (env.max[i] - eps).max(eps - env.min[i]);
        if dev >= params.lambda {
            let s = sign_pos(env.corner[i] - eps);
            eps = eps + params.h * from_i64::<T>(s as i64);
            out.push((i, s));
        }
    }
    out
}

/// Multidimensional modulo-hysteresis of `sig` sampled on `grid`.
///
/// `grid` must cover whole bands along every transverse axis and contain `k_1 = 0`.
pub fn encode_md<T: Real>(
    sig: &BandlimitedSignal<T>,
    lattice: &Lattice<T>,
    params: &HysteresisParams<T>,
    grid: &GridSpec,
    opts: &EncodeOptions,
) -> Result<EncodeResult<T>> {
    params.validate()?;
    if !(params.h > T::zero()) {
        return Err(Error::InvalidParameter(
            "multidimensional encoder needs h > 0".into(),
        ));
    }
    if opts.q == 0 || opts.oversample == 0 {
        return Err(Error::InvalidParameter(
            "refinement factors must be positive".into(),
        ));
    }
    let d = sig.dim();
    if lattice.dim() != d || grid.dim() != d {
        return Err(Error::DimensionMismatch(
            "signal, lattice and grid disagree on dimension".into(),
        ));
    }
    if grid.lo()[0] > 0 || grid.hi()[0] < 0 {
        return Err(Error::OutOfRange("grid must contain k_1 = 0".into()));
    }
    let geometry = BandGeometry::new(params.band_width, lattice.periods().to_vec())?;
    let (blo, bhi) = geometry.band_box(grid)?;
    let clean = sample_on_lattice(sig, lattice, grid)?;
    let periods = lattice.periods();
    let dt = periods[0] / from_i64(opts.q as i64);
    let q = opts.q as i64;
    let ov = opts.oversample as i64;
    let limit = (params.h / lit(2.0)).min(lit::<T>(2.0) * params.lambda - lit::<T>(3.0) * params.h);

    let mut bands = BTreeMap::new();
    let mut max_spread = T::zero();
    for b in BoxIter::new(blo.clone(), bhi.clone()) {
        let corner_x: Vec<T> = b
            .iter()
            .map(|&bi| from_i64::<T>(bi) * params.band_width)
            .collect();
        let corner = sig.transverse_profile(&corner_x);
        let profiles: Vec<Vec<T>> = if opts.single_point_bands {
            vec![corner.clone()]
        } else {
            let (klo, khi) = geometry.band_range(&b);
            let sub_lo: Vec<i64> = klo.iter().map(|&k| k * ov).collect();
            let sub_hi: Vec<i64> = khi.iter().map(|&k| k * ov + ov - 1).collect();
            BoxIter::new(sub_lo, sub_hi)
                .map(|s| {
                    let xbar: Vec<T> = s
                        .iter()
                        .enumerate()
                        .map(|(a, &v)| from_i64::<T>(v) * periods[a + 1] / from_i64(ov))
                        .collect();
                    sig.transverse_profile(&xbar)
                })
                .collect()
        };
        let pos = envelope(sig, &profiles, &corner, 0..=grid.hi()[0] * q, dt);
        let neg = envelope(sig, &profiles, &corner, (grid.lo()[0] * q..=0).rev(), dt);
        for env in [&pos, &neg] {
            for (mx, mn) in env.max.iter().zip(&env.min) {
                max_spread = max_spread.max(*mx - *mn);
            }
        }
        if opts.precondition == Precondition::Strict && !(max_spread < limit) {
            return Err(Error::NotWellDefined(format!(
                "in-band spread {max_spread} is not below {limit}"
            )));
        }
        let level = params.initial_level(pos.min[0]);
        let start = params.h * from_i64(level);
        let mut events = Vec::new();
        let neg_folds = scan_band(&neg, start, params);
        for (r, &(i, s)) in neg_folds.iter().enumerate().rev() {
            events.push(FoldEvent {
                r: -(r as i64) - 1,
                tau: -(from_i64::<T>(i as i64) * dt),
                sign: s,
            });
        }
        for (r, &(i, s)) in scan_band(&pos, start, params).iter().enumerate() {
            events.push(FoldEvent {
                r: r as i64 + 1,
                tau: from_i64::<T>(i as i64) * dt,
                sign: s,
            });
        }
        bands.insert(b, BandLedger { level, events });
    }
    let ledger = FoldLedger { geometry, bands };
    let residual = residual_field(&ledger, params, grid)?;
    let folded = clean.zip_map(&residual, |a, b| a - b)?;
    Ok(EncodeResult {
        folded,
        residual,
        clean,
        ledger,
        max_spread,
    })
}

/// Residual `ε_f` on every index of `grid`.
pub fn residual_field<T: Real>(
    ledger: &FoldLedger<T>,
    params: &HysteresisParams<T>,
    grid: &GridSpec,
) -> Result<SampleField<T>> {
    let mut lines: BTreeMap<Vec<i64>, Vec<T>> = BTreeMap::new();
    for band in ledger.bands.keys() {
        lines.insert(
            band.clone(),
            ledger.band_residual_line(band, params.h, grid.lo()[0]..=grid.hi()[0])?,
        );
    }
    let (tlo, thi) = grid.transverse();
    let mut out = SampleField::zeros(grid.clone());
    for kbar in BoxIter::new(tlo, thi) {
        let band = ledger.geometry.band_of(&kbar)?;
        let line = lines
            .get(&band)
            .ok_or_else(|| Error::OutOfRange(format!("band {band:?} not in ledger")))?;
        out.set_line(&kbar, line)?;
    }
    Ok(out)
}

//! Finite-difference kernels and the band filters used for fold detection.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::grid::{BoxIter, GridSpec, SampleField};
use crate::scalar::{from_i64, lit, Real};

/// Partition of the transverse coordinates `k̄ = (k_2..k_D)` into bands of `B / T_d` samples.
#[derive(Debug, Clone, PartialEq)]
pub struct BandGeometry<T> {
    band_width: T,
    periods: Vec<T>,
    per_band: Vec<i64>,
}

impl<T: Real> BandGeometry<T> {
    /// `periods` holds all `D` lattice periods; `B / T_d` must be an integer for `d ≥ 2`.
    pub fn new(band_width: T, periods: Vec<T>) -> Result<Self> {
        if periods.is_empty() {
            return Err(Error::InvalidParameter("no lattice periods".into()));
        }
        let mut per_band = Vec::with_capacity(periods.len() - 1);
        for (a, &t) in periods.iter().enumerate().skip(1) {
            let ratio = band_width / t;
            let n = ratio.round();
            if n < T::one() || (ratio - n).abs() > lit::<T>(1e-9) * ratio.max(T::one()) {
                return Err(Error::InvalidParameter(format!(
                    "band width / T_{} = {ratio} is not a positive integer",
                    a + 1
                )));
            }
            per_band.push(n.to_i64().unwrap());
        }
        Ok(Self {
            band_width,
            periods,
            per_band,
        })
    }

    pub fn band_width(&self) -> T {
        self.band_width
    }

    pub fn periods(&self) -> &[T] {
        &self.periods
    }

    /// `N^B_d` for `d = 2..D`.
    pub fn per_band(&self) -> &[i64] {
        &self.per_band
    }

    /// `N^B = ∏_{d≥2} N^B_d`.
    pub fn samples_per_band(&self) -> i64 {
        self.per_band.iter().product()
    }

    pub fn band_of(&self, kbar: &[i64]) -> Result<Vec<i64>> {
        if kbar.len() != self.per_band.len() {
            return Err(Error::DimensionMismatch("transverse index".into()));
        }
        Ok(band_index(kbar, &self.per_band))
    }

    /// Inclusive transverse index range of band `b̄`.
    pub fn band_range(&self, band: &[i64]) -> (Vec<i64>, Vec<i64>) {
        let lo: Vec<i64> = band
            .iter()
            .zip(&self.per_band)
            .map(|(&b, &n)| b * n)
            .collect();
        let hi = lo
            .iter()
            .zip(&self.per_band)
            .map(|(&l, &n)| l + n - 1)
            .collect();
        (lo, hi)
    }

    /// Band box covered by `grid`; fails unless every transverse axis holds whole bands.
    pub fn band_box(&self, grid: &GridSpec) -> Result<(Vec<i64>, Vec<i64>)> {
        if grid.dim() != self.periods.len() {
            return Err(Error::DimensionMismatch("grid and band geometry".into()));
        }
        let mut blo = Vec::new();
        let mut bhi = Vec::new();
        for (a, &n) in self.per_band.iter().enumerate() {
            let (lo, hi) = (grid.lo()[a + 1], grid.hi()[a + 1]);
            if lo.rem_euclid(n) != 0 || (hi + 1).rem_euclid(n) != 0 {
                return Err(Error::PartialBands(format!(
                    "axis {} spans [{lo}, {hi}] with {n} samples per band",
                    a + 2
                )));
            }
            blo.push(lo / n);
            bhi.push((hi + 1) / n - 1);
        }
        Ok((blo, bhi))
    }
}

/// `b_d = ⌊k_d / N^B_d⌋`.
pub fn band_index(kbar: &[i64], per_band: &[i64]) -> Vec<i64> {
    kbar.iter()
        .zip(per_band)
        .map(|(&k, &n)| k.div_euclid(n))
        .collect()
}

/// Bands differing from `band` by ±1 in exactly one coordinate, `+1` before `−1` per axis.
pub fn neighbors(band: &[i64]) -> Vec<Vec<i64>> {
    let mut out = Vec::with_capacity(2 * band.len());
    for a in 0..band.len() {
        for step in [1, -1] {
            let mut b = band.to_vec();
            b[a] += step;
            out.push(b);
        }
    }
    out
}

/// Forward finite difference of order `N`: taps `(−1)^{N−j} C(N, j)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FiniteDiffKernel {
    taps: Vec<i64>,
}

impl FiniteDiffKernel {
    pub fn order(&self) -> usize {
        self.taps.len() - 1
    }

    pub fn taps(&self) -> &[i64] {
        &self.taps
    }

    /// `Σ_j Δ[j] x[start + j]`.
    pub fn apply<T: Real>(&self, x: &[T], start: usize) -> T {
        self.taps
            .iter()
            .zip(&x[start..start + self.taps.len()])
            .map(|(&c, &v)| from_i64::<T>(c) * v)
            .sum()
    }
}

/// Builds `Δ^N` by `N`-fold convolution of `[−1, 1]`.
pub fn finite_diff(order: usize) -> Result<FiniteDiffKernel> {
    if order == 0 || order > 60 {
        return Err(Error::InvalidParameter(format!(
            "difference order {order} outside 1..=60"
        )));
    }
    let mut taps = vec![1i64];
    for _ in 0..order {
        let mut next = vec![0i64; taps.len() + 1];
        for (i, &c) in taps.iter().enumerate() {
            next[i] -= c;
            next[i + 1] += c;
        }
        taps = next;
    }
    Ok(FiniteDiffKernel { taps })
}

/// Offsets (within the field buffer, for `k_1 = lo_1`) of every sample in band `b̄`.
fn band_offsets<T: Real>(
    grid: &GridSpec,
    geometry: &BandGeometry<T>,
    band: &[i64],
) -> Result<Vec<usize>> {
    let (klo, khi) = geometry.band_range(band);
    let mut out = Vec::with_capacity(geometry.samples_per_band() as usize);
    for kbar in BoxIter::new(klo, khi) {
        let mut k = vec![grid.lo()[0]];
        k.extend_from_slice(&kbar);
        out.push(
            grid.offset(&k)
                .ok_or_else(|| Error::OutOfRange(format!("band {band:?} leaves the field")))?,
        );
    }
    Ok(out)
}

/// Band-averaged lines `ȳ_b̄[k_1] = (1/N^B) Σ_{k̄ ∈ b̄} y[k_1, k̄]`, so that
/// `⟨y, ψ_{b̄,m}⟩ = Σ_j Δ[j] ȳ_b̄[m + j]`.
#[derive(Debug, Clone)]
pub struct BandLines<T> {
    k1_lo: i64,
    lines: BTreeMap<Vec<i64>, Vec<T>>,
}

impl<T: Real> BandLines<T> {
    pub fn new(y: &SampleField<T>, geometry: &BandGeometry<T>) -> Result<Self> {
        let grid = y.grid();
        let (blo, bhi) = geometry.band_box(grid)?;
        let mut lines = BTreeMap::new();
        for band in BoxIter::new(blo, bhi) {
            lines.insert(band.clone(), band_line(y, geometry, &band)?);
        }
        Ok(Self {
            k1_lo: grid.lo()[0],
            lines,
        })
    }

    pub fn k1_lo(&self) -> i64 {
        self.k1_lo
    }

    pub fn line(&self, band: &[i64]) -> Option<&[T]> {
        self.lines.get(band).map(|v| v.as_slice())
    }

    pub fn bands(&self) -> impl Iterator<Item = &Vec<i64>> {
        self.lines.keys()
    }

    /// `⟨y, ψ_{b̄,m}⟩`.
    pub fn psi_bm(&self, kernel: &FiniteDiffKernel, band: &[i64], m: i64) -> Result<T> {
        let line = self
            .line(band)
            .ok_or_else(|| Error::OutOfRange(format!("band {band:?}")))?;
        let start = m - self.k1_lo;
        if start < 0 || start as usize + kernel.order() >= line.len() {
            return Err(Error::OutOfRange(format!("filter start m = {m}")));
        }
        Ok(kernel.apply(line, start as usize))
    }
}

fn band_line<T: Real>(
    y: &SampleField<T>,
    geometry: &BandGeometry<T>,
    band: &[i64],
) -> Result<Vec<T>> {
    let grid = y.grid();
    let offs = band_offsets(grid, geometry, band)?;
    let stride = grid.strides()[0];
    let scale = T::one() / from_i64(geometry.samples_per_band());
    let data = y.data();
    Ok((0..grid.extent(0))
        .map(|i| offs.iter().map(|&o| data[o + i * stride]).sum::<T>() * scale)
        .collect())
}

/// `⟨y, ψ_{b̄,m}⟩` for a single band and filter start `m`.
pub fn apply_psi_bm<T: Real>(
    y: &SampleField<T>,
    geometry: &BandGeometry<T>,
    kernel: &FiniteDiffKernel,
    band: &[i64],
    m: i64,
) -> Result<T> {
    let line = band_line(y, geometry, band)?;
    let start = m - y.grid().lo()[0];
    if start < 0 || start as usize + kernel.order() >= line.len() {
        return Err(Error::OutOfRange(format!("filter start m = {m}")));
    }
    Ok(kernel.apply(&line, start as usize))
}

/// Transverse axis (0-based among `d ≥ 2`) along which `upper = lower + e_axis`.
pub fn boundary_axis(lower: &[i64], upper: &[i64]) -> Result<usize> {
    if lower.len() != upper.len() {
        return Err(Error::DimensionMismatch("band indices".into()));
    }
    let diff: Vec<usize> = (0..lower.len()).filter(|&a| lower[a] != upper[a]).collect();
    match diff.as_slice() {
        [a] if upper[*a] == lower[*a] + 1 => Ok(*a),
        _ => Err(Error::InvalidParameter(format!(
            "{upper:?} is not the upper neighbor of {lower:?}"
        ))),
    }
}

/// Cross-boundary filter `⟨y, ψ_{b̄,b̄*}⟩` on the slice `k_1 = slice`, where `b̄* = b̄ + e_{d*}`.
///
/// The taps sit at `k_{d*} = N^B_{d*} [b̄*]_{d*} − 1 + j`, so tap 0 lies in `b̄` and the rest in `b̄*`;
/// the other transverse coordinates are summed over the band and divided by `N^B / N^B_{d*}`.
pub fn apply_psi_bb_at<T: Real>(
    y: &SampleField<T>,
    geometry: &BandGeometry<T>,
    kernel: &FiniteDiffKernel,
    band: &[i64],
    upper: &[i64],
    slice: i64,
) -> Result<T> {
    let axis = boundary_axis(band, upper)?;
    let n_axis = geometry.per_band()[axis];
    if kernel.order() as i64 >= n_axis {
        return Err(Error::InvalidParameter(
            "difference order must be below the samples per band".into(),
        ));
    }
    let k_start = n_axis * upper[axis] - 1;
    let (mut klo, mut khi) = geometry.band_range(band);
    klo[axis] = 0;
    khi[axis] = 0;
    let grid = y.grid();
    let mut acc = T::zero();
    for mut kbar in BoxIter::new(klo, khi) {
        for (j, &c) in kernel.taps().iter().enumerate() {
            kbar[axis] = k_start + j as i64;
            let mut k = vec![slice];
            k.extend_from_slice(&kbar);
            let v = grid
                .offset(&k)
                .map(|o| y.data()[o])
                .ok_or_else(|| Error::OutOfRange(format!("index {k:?}")))?;
            acc = acc + from_i64::<T>(c) * v;
        }
    }
    Ok(acc / from_i64(geometry.samples_per_band() / n_axis))
}

/// [`apply_psi_bb_at`] on the `k_1 = 0` slice.
pub fn apply_psi_bb<T: Real>(
    y: &SampleField<T>,
    geometry: &BandGeometry<T>,
    kernel: &FiniteDiffKernel,
    band: &[i64],
    upper: &[i64],
) -> Result<T> {
    apply_psi_bb_at(y, geometry, kernel, band, upper, 0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kernels_match_alternating_binomials() {
        assert_eq!(finite_diff(1).unwrap().taps(), &[-1, 1]);
        assert_eq!(finite_diff(2).unwrap().taps(), &[1, -2, 1]);
        assert_eq!(finite_diff(3).unwrap().taps(), &[-1, 3, -3, 1]);
        assert!(finite_diff(0).is_err());
    }

    #[test]
    fn band_index_floors_toward_negative_infinity() {
        assert_eq!(band_index(&[-1], &[32]), vec![-1]);
        assert_eq!(band_index(&[0], &[32]), vec![0]);
        assert_eq!(band_index(&[31], &[32]), vec![0]);
        assert_eq!(band_index(&[32], &[32]), vec![1]);
        assert_eq!(band_index(&[-32, -33], &[32, 32]), vec![-1, -2]);
    }

    #[test]
    fn neighbor_order() {
        assert_eq!(
            neighbors(&[0, 0]),
            vec![vec![1, 0], vec![-1, 0], vec![0, 1], vec![0, -1]]
        );
        assert_eq!(neighbors(&[3]).len(), 2);
    }

    #[test]
    fn geometry_rejects_fractional_band() {
        assert!(BandGeometry::new(0.32, vec![0.02, 0.03]).is_err());
        let g = BandGeometry::new(0.32, vec![0.02, 0.01]).unwrap();
        assert_eq!(g.per_band(), &[32]);
        let grid = GridSpec::new(vec![-5, -64], vec![5, 63]).unwrap();
        assert_eq!(g.band_box(&grid).unwrap(), (vec![-2], vec![1]));
        let partial = GridSpec::new(vec![-5, -60], vec![5, 63]).unwrap();
        assert!(matches!(g.band_box(&partial), Err(Error::PartialBands(_))));
    }
}

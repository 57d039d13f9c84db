//! Sampling lattices and bandlimited test signals built from separable sinc series.

use crate::encoder::HysteresisParams;
use crate::error::{Error, Result};
use crate::grid::{BoxIter, GridSpec, SampleField};
use crate::scalar::{ceil_tol, floor_tol, from_i64, lit, Real};

/// Lattice `{V T k}` with unit-norm basis columns `V` and positive periods `T`.
#[derive(Debug, Clone, PartialEq)]
pub struct Lattice<T> {
    basis: Vec<Vec<T>>,
    periods: Vec<T>,
}

impl<T: Real> Lattice<T> {
    /// `basis[i][j]` is row `i`, column `j` of `V`. Columns must have unit norm.
    pub fn new(basis: Vec<Vec<T>>, periods: Vec<T>) -> Result<Self> {
        let d = periods.len();
        if d == 0 {
            return Err(Error::InvalidParameter(
                "lattice needs at least one axis".into(),
            ));
        }
        if basis.len() != d || basis.iter().any(|r| r.len() != d) {
            return Err(Error::DimensionMismatch(format!("basis must be {d}x{d}")));
        }
        if periods.iter().any(|&t| !(t > T::zero()) || !t.is_finite()) {
            return Err(Error::InvalidParameter("periods must be positive".into()));
        }
        for j in 0..d {
            let n = column_norm(&basis, j);
            if (n - T::one()).abs() > lit(1e-6) {
                return Err(Error::InvalidParameter(format!(
                    "basis column {} has norm {n}, expected 1",
                    j + 1
                )));
            }
        }
        if invert(&basis).is_none() {
            return Err(Error::InvalidParameter("basis is singular".into()));
        }
        Ok(Self { basis, periods })
    }

    /// Like [`Lattice::new`] but rescales each basis column to unit norm first.
    pub fn with_normalized_basis(mut basis: Vec<Vec<T>>, periods: Vec<T>) -> Result<Self> {
        let d = basis.len();
        if basis.iter().any(|r| r.len() != d) {
            return Err(Error::DimensionMismatch(format!("basis must be {d}x{d}")));
        }
        for j in 0..d {
            let n = column_norm(&basis, j);
            if n > T::zero() {
                for row in basis.iter_mut() {
                    row[j] = row[j] / n;
                }
            }
        }
        Self::new(basis, periods)
    }

    /// Rectangular lattice (`V = I`).
    pub fn rectangular(periods: Vec<T>) -> Result<Self> {
        let d = periods.len();
        let basis = (0..d)
            .map(|i| {
                (0..d)
                    .map(|j| if i == j { T::one() } else { T::zero() })
                    .collect()
            })
            .collect();
        Self::new(basis, periods)
    }

    pub fn dim(&self) -> usize {
        self.periods.len()
    }

    pub fn basis(&self) -> &[Vec<T>] {
        &self.basis
    }

    pub fn periods(&self) -> &[T] {
        &self.periods
    }

    pub fn with_periods(&self, periods: Vec<T>) -> Result<Self> {
        Self::new(self.basis.clone(), periods)
    }

    /// `V^{-T}`, the basis of the dual lattice.
    pub fn dual_basis(&self) -> Vec<Vec<T>> {
        let inv = invert(&self.basis).expect("basis validated as invertible");
        let d = self.dim();
        (0..d)
            .map(|i| (0..d).map(|j| inv[j][i]).collect())
            .collect()
    }

    /// Lattice coordinates `T k` of index `k`.
    pub fn coords(&self, k: &[i64]) -> Vec<T> {
        k.iter()
            .zip(&self.periods)
            .map(|(&ki, &t)| from_i64::<T>(ki) * t)
            .collect()
    }

    /// Ambient point `V T k`.
    pub fn point(&self, k: &[i64]) -> Vec<T> {
        let x = self.coords(k);
        self.basis
            .iter()
            .map(|row| row.iter().zip(&x).map(|(&a, &b)| a * b).sum())
            .collect()
    }
}

fn column_norm<T: Real>(m: &[Vec<T>], j: usize) -> T {
    m.iter().map(|r| r[j] * r[j]).sum::<T>().sqrt()
}

fn invert<T: Real>(m: &[Vec<T>]) -> Option<Vec<Vec<T>>> {
    let n = m.len();
    let mut a: Vec<Vec<T>> = m.to_vec();
    let mut inv: Vec<Vec<T>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| if i == j { T::one() } else { T::zero() })
                .collect()
        })
        .collect();
    for c in 0..n {
        let p = (c..n).max_by(|&i, &j| a[i][c].abs().partial_cmp(&a[j][c].abs()).unwrap())?;
        if a[p][c].abs() < lit(1e-12) {
            return None;
        }
        a.swap(c, p);
        inv.swap(c, p);
        let piv = a[c][c];
        for j in 0..n {
            a[c][j] = a[c][j] / piv;
            inv[c][j] = inv[c][j] / piv;
        }
        for r in 0..n {
            if r != c {
                let f = a[r][c];
                for j in 0..n {
                    a[r][j] = a[r][j] - f * a[c][j];
                    inv[r][j] = inv[r][j] - f * inv[c][j];
                }
            }
        }
    }
    Some(inv)
}

/// Per-axis bandwidths `Ω_d > 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct Bandwidth<T> {
    omega: Vec<T>,
}

impl<T: Real> Bandwidth<T> {
    pub fn new(omega: Vec<T>) -> Result<Self> {
        if omega.is_empty() || omega.iter().any(|&w| !(w > T::zero()) || !w.is_finite()) {
            return Err(Error::InvalidParameter(
                "bandwidths must be positive".into(),
            ));
        }
        Ok(Self { omega })
    }

    pub fn omega(&self) -> &[T] {
        &self.omega
    }

    pub fn dim(&self) -> usize {
        self.omega.len()
    }

    /// Euclidean norm of `Ω`.
    pub fn norm(&self) -> T {
        self.omega.iter().map(|&w| w * w).sum::<T>().sqrt()
    }
}

/// Axis-aligned box of lattice coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct DomainBox<T> {
    pub min: Vec<T>,
    pub max: Vec<T>,
}

impl<T: Real> DomainBox<T> {
    pub fn new(min: Vec<T>, max: Vec<T>) -> Result<Self> {
        if min.len() != max.len() || min.is_empty() {
            return Err(Error::DimensionMismatch("domain bounds".into()));
        }
        if min.iter().zip(&max).any(|(a, b)| !(a < b)) {
            return Err(Error::InvalidParameter(
                "domain min must be below max".into(),
            ));
        }
        Ok(Self { min, max })
    }

    pub fn contains(&self, x: &[T]) -> bool {
        x.iter()
            .enumerate()
            .all(|(d, &v)| v >= self.min[d] && v <= self.max[d])
    }
}

/// `f(x) = c_0 + Σ_k c_k ∏_d sinc(Ω_d x_d − k_d π)` with `|k_d| ≤ K_d` and an optional constant `c_0`.
#[derive(Debug, Clone, PartialEq)]
pub struct BandlimitedSignal<T> {
    bandwidth: Bandwidth<T>,
    half_extent: Vec<usize>,
    coeffs: Vec<T>,
    domain: DomainBox<T>,
    offset: T,
}

impl<T: Real> BandlimitedSignal<T> {
    /// `coeffs` are row-major over `k_d ∈ [−K_d, K_d]`.
    pub fn new(
        bandwidth: Bandwidth<T>,
        half_extent: Vec<usize>,
        coeffs: Vec<T>,
        domain: DomainBox<T>,
    ) -> Result<Self> {
        let d = bandwidth.dim();
        if half_extent.len() != d || domain.min.len() != d {
            return Err(Error::DimensionMismatch(
                "bandwidth, coefficient box and domain disagree on dimension".into(),
            ));
        }
        let n: usize = half_extent.iter().map(|k| 2 * k + 1).product();
        if coeffs.len() != n {
            return Err(Error::DimensionMismatch(format!(
                "expected {n} coefficients, got {}",
                coeffs.len()
            )));
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidParameter("non-finite coefficient".into()));
        }
        Ok(Self {
            bandwidth,
            half_extent,
            coeffs,
            domain,
            offset: T::zero(),
        })
    }

    /// Adds a constant term `c` to the signal.
    pub fn with_offset(mut self, c: T) -> Self {
        self.offset = c;
        self
    }

    pub fn offset(&self) -> T {
        self.offset
    }

    pub fn dim(&self) -> usize {
        self.bandwidth.dim()
    }

    pub fn bandwidth(&self) -> &Bandwidth<T> {
        &self.bandwidth
    }

    pub fn half_extent(&self) -> &[usize] {
        &self.half_extent
    }

    pub fn coeffs(&self) -> &[T] {
        &self.coeffs
    }

    pub fn domain(&self) -> &DomainBox<T> {
        &self.domain
    }

    /// Coefficient index box as a grid.
    pub fn coeff_grid(&self) -> GridSpec {
        let lo = self.half_extent.iter().map(|&k| -(k as i64)).collect();
        let hi = self.half_extent.iter().map(|&k| k as i64).collect();
        GridSpec::new(lo, hi).expect("non-empty coefficient box")
    }

    pub fn in_domain(&self, x: &[T]) -> bool {
        self.domain.contains(x)
    }

    /// Values `sinc(Ω_axis x − j π)` for `j = −K..=K`.
    pub fn axis_weights(&self, axis: usize, x: T) -> Vec<T> {
        let w = self.bandwidth.omega[axis] * x;
        let k = self.half_extent[axis] as i64;
        (-k..=k)
            .map(|j| sinc(w - from_i64::<T>(j) * T::PI()))
            .collect()
    }

    /// For a transverse point `x̄ = (x_2..x_D)`, returns `G[j_1] = Σ_{j̄} c_{j_1 j̄} ∏_{d≥2} sinc(Ω_d x_d − j_d π)`,
    /// so that `f(x_1, x̄) = c_0 + Σ_{j_1} sinc(Ω_1 x_1 − j_1 π) G[j_1]`.
    pub fn transverse_profile(&self, xbar: &[T]) -> Vec<T> {
        let d = self.dim();
        let weights: Vec<Vec<T>> = (1..d).map(|a| self.axis_weights(a, xbar[a - 1])).collect();
        let n1 = 2 * self.half_extent[0] + 1;
        let inner: usize = self.coeffs.len() / n1;
        let mut prod = vec![T::one(); inner];
        let lo: Vec<i64> = vec![0; d - 1];
        let hi: Vec<i64> = self.half_extent[1..]
            .iter()
            .map(|&k| 2 * k as i64)
            .collect();
        for (o, jbar) in BoxIter::new(lo, hi).enumerate() {
            prod[o] = jbar
                .iter()
                .enumerate()
                .fold(T::one(), |p, (a, &j)| p * weights[a][j as usize]);
        }
        (0..n1)
            .map(|j1| {
                self.coeffs[j1 * inner..(j1 + 1) * inner]
                    .iter()
                    .zip(&prod)
                    .map(|(&c, &p)| c * p)
                    .sum()
            })
            .collect()
    }
}

/// `sin(u)/u`, with a series branch near zero.
#[inline]
pub fn sinc<T: Real>(u: T) -> T {
    if u.abs() < lit(1e-6) {
        T::one() - u * u / lit(6.0)
    } else {
        u.sin() / u
    }
}

/// Strict Nyquist check `T_d < π / Ω_d` on every axis.
pub fn nyquist_ok<T: Real>(lattice: &Lattice<T>, bw: &Bandwidth<T>) -> bool {
    lattice.dim() == bw.dim()
        && lattice
            .periods()
            .iter()
            .zip(bw.omega())
            .all(|(&t, &w)| t < T::PI() / w)
}

/// Evaluates the signal at lattice coordinates `x` (so `f(V x)` in ambient space).
pub fn eval_signal<T: Real>(sig: &BandlimitedSignal<T>, x: &[T]) -> T {
    assert_eq!(x.len(), sig.dim(), "point dimension");
    let weights: Vec<Vec<T>> = (0..sig.dim()).map(|a| sig.axis_weights(a, x[a])).collect();
    let offsets: Vec<usize> = sig.half_extent.to_vec();
    sig.coeff_grid()
        .indices()
        .zip(&sig.coeffs)
        .map(|(j, &c)| {
            j.iter().enumerate().fold(c, |p, (a, &ja)| {
                p * weights[a][(ja + offsets[a] as i64) as usize]
            })
        })
        .sum::<T>()
        + sig.offset
}

/// `γ[k] = f(V T k)` on every index of `grid`.
pub fn sample_on_lattice<T: Real>(
    sig: &BandlimitedSignal<T>,
    lattice: &Lattice<T>,
    grid: &GridSpec,
) -> Result<SampleField<T>> {
    let d = sig.dim();
    if lattice.dim() != d || grid.dim() != d {
        return Err(Error::DimensionMismatch(
            "signal, lattice and grid disagree on dimension".into(),
        ));
    }
    if !nyquist_ok(lattice, sig.bandwidth()) {
        return Err(Error::InvalidParameter(
            "lattice violates the Nyquist condition".into(),
        ));
    }
    // Per-axis sinc tables indexed by [k_d - lo_d][j_d + K_d].
    let tables: Vec<Vec<Vec<T>>> = (0..d)
        .map(|a| {
            (grid.lo()[a]..=grid.hi()[a])
                .map(|k| sig.axis_weights(a, from_i64::<T>(k) * lattice.periods()[a]))
                .collect()
        })
        .collect();
    let cgrid = sig.coeff_grid();
    let cidx: Vec<Vec<usize>> = cgrid
        .indices()
        .map(|j| {
            j.iter()
                .enumerate()
                .map(|(a, &v)| (v + sig.half_extent[a] as i64) as usize)
                .collect()
        })
        .collect();
    Ok(SampleField::from_fn(grid.clone(), |k| {
        cidx.iter()
            .zip(&sig.coeffs)
            .map(|(j, &c)| {
                (0..d).fold(c, |p, a| {
                    p * tables[a][(k[a] - grid.lo()[a]) as usize][j[a]]
                })
            })
            .sum::<T>()
            + sig.offset
    }))
}

/// Measured properties of a signal over its domain box.
#[derive(Debug, Clone, PartialEq)]
pub struct SignalDiagnostics<T> {
    /// Maximum of `|f|` on the oversampled grid.
    pub sup_norm: T,
    /// Maximum central-difference estimate of `|∂_d f|` per axis.
    pub derivative_max: Vec<T>,
    /// `max_d (derivative_max[d] − Ω_d sup_norm)`; non-positive for a bandlimited signal.
    pub bernstein_margin: T,
    /// Largest spread `max − min` of `f` over one band at fixed `x_1`.
    pub intra_band_variation: T,
}

/// Oversampled scan of the domain box at spacing `T_d / oversample` per axis.
pub fn diagnostics<T: Real>(
    sig: &BandlimitedSignal<T>,
    lattice: &Lattice<T>,
    params: &HysteresisParams<T>,
    oversample: usize,
) -> Result<SignalDiagnostics<T>> {
    let d = sig.dim();
    if lattice.dim() != d {
        return Err(Error::DimensionMismatch("signal and lattice".into()));
    }
    if oversample == 0 {
        return Err(Error::InvalidParameter(
            "oversample must be positive".into(),
        ));
    }
    let ov = from_i64::<T>(oversample as i64);
    let step: Vec<T> = lattice.periods().iter().map(|&t| t / ov).collect();
    let lo: Vec<i64> = (0..d)
        .map(|a| ceil_tol(sig.domain.min[a] / step[a]))
        .collect();
    let hi: Vec<i64> = (0..d)
        .map(|a| floor_tol(sig.domain.max[a] / step[a]))
        .collect();
    if lo.iter().zip(&hi).any(|(a, b)| a > b) {
        return Err(Error::EmptyGrid);
    }

    let tgrid: Vec<Vec<i64>> = BoxIter::new(lo[1..].to_vec(), hi[1..].to_vec()).collect();
    let np = tgrid.len();
    let profiles: Vec<Vec<T>> = tgrid
        .iter()
        .map(|i| {
            let xbar: Vec<T> = i
                .iter()
                .enumerate()
                .map(|(a, &v)| from_i64::<T>(v) * step[a + 1])
                .collect();
            sig.transverse_profile(&xbar)
        })
        .collect();
    // Band id of each transverse point, as a dense label.
    let band_of: Vec<Vec<i64>> = tgrid
        .iter()
        .map(|i| {
            i.iter()
                .enumerate()
                .map(|(a, &v)| floor_tol(from_i64::<T>(v) * step[a + 1] / params.band_width))
                .collect()
        })
        .collect();
    let mut labels: Vec<Vec<i64>> = band_of.clone();
    labels.sort();
    labels.dedup();
    let label: Vec<usize> = band_of
        .iter()
        .map(|b| labels.binary_search(b).unwrap())
        .collect();
    let tshape: Vec<usize> = (1..d).map(|a| (hi[a] - lo[a] + 1) as usize).collect();
    let mut tstride = vec![1usize; tshape.len()];
    for a in (0..tshape.len().saturating_sub(1)).rev() {
        tstride[a] = tstride[a + 1] * tshape[a + 1];
    }

    let slab = |i1: i64| -> Vec<T> {
        let s1 = sig.axis_weights(0, from_i64::<T>(i1) * step[0]);
        profiles
            .iter()
            .map(|g| g.iter().zip(&s1).map(|(&a, &b)| a * b).sum::<T>() + sig.offset)
            .collect()
    };

    let mut sup = T::zero();
    let mut dmax = vec![T::zero(); d];
    let mut spread = T::zero();
    let mut prev: Option<Vec<T>> = None;
    let mut cur = slab(lo[0]);
    let mut bmin = vec![T::infinity(); labels.len()];
    let mut bmax = vec![T::neg_infinity(); labels.len()];
    for i1 in lo[0]..=hi[0] {
        let next = if i1 < hi[0] { Some(slab(i1 + 1)) } else { None };
        for v in bmin.iter_mut() {
            *v = T::infinity();
        }
        for v in bmax.iter_mut() {
            *v = T::neg_infinity();
        }
        for p in 0..np {
            let v = cur[p];
            sup = sup.max(v.abs());
            let l = label[p];
            bmin[l] = bmin[l].min(v);
            bmax[l] = bmax[l].max(v);
            if let (Some(a), Some(b)) = (&prev, &next) {
                dmax[0] = dmax[0].max(((b[p] - a[p]) / (lit::<T>(2.0) * step[0])).abs());
            }
            for a in 0..d - 1 {
                let ia = tgrid[p][a];
                if ia > lo[a + 1] && ia < hi[a + 1] {
                    let s = tstride[a];
                    let der = (cur[p + s] - cur[p - s]) / (lit::<T>(2.0) * step[a + 1]);
                    dmax[a + 1] = dmax[a + 1].max(der.abs());
                }
            }
        }
        for (mn, mx) in bmin.iter().zip(&bmax) {
            if mx >= mn {
                spread = spread.max(*mx - *mn);
            }
        }
        prev = Some(cur);
        cur = match next {
            Some(n) => n,
            None => break,
        };
    }
    let bernstein_margin = dmax
        .iter()
        .zip(sig.bandwidth().omega())
        .map(|(&m, &w)| m - w * sup)
        .fold(T::neg_infinity(), T::max);
    Ok(SignalDiagnostics {
        sup_norm: sup,
        derivative_max: dmax,
        bernstein_margin,
        intra_band_variation: spread,
    })
}

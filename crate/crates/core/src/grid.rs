//! Integer index boxes and real-valued fields sampled on them.

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Inclusive integer box `lo[d] ..= hi[d]`, stored row-major (first axis slowest).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct GridSpec {
    lo: Vec<i64>,
    hi: Vec<i64>,
}

impl GridSpec {
    pub fn new(lo: Vec<i64>, hi: Vec<i64>) -> Result<Self> {
        if lo.len() != hi.len() {
            return Err(Error::DimensionMismatch(format!(
                "lo has {} axes, hi has {}",
                lo.len(),
                hi.len()
            )));
        }
        if lo.is_empty() || lo.iter().zip(&hi).any(|(a, b)| a > b) {
            return Err(Error::EmptyGrid);
        }
        Ok(Self { lo, hi })
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn lo(&self) -> &[i64] {
        &self.lo
    }

    pub fn hi(&self) -> &[i64] {
        &self.hi
    }

    pub fn extent(&self, axis: usize) -> usize {
        (self.hi[axis] - self.lo[axis] + 1) as usize
    }

    pub fn shape(&self) -> Vec<usize> {
        (0..self.dim()).map(|d| self.extent(d)).collect()
    }

    pub fn len(&self) -> usize {
        self.shape().iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Row-major strides; the last axis has stride 1.
    pub fn strides(&self) -> Vec<usize> {
        let shape = self.shape();
        let mut s = vec![1usize; shape.len()];
        for d in (0..shape.len().saturating_sub(1)).rev() {
            s[d] = s[d + 1] * shape[d + 1];
        }
        s
    }

    pub fn contains(&self, k: &[i64]) -> bool {
        k.len() == self.dim()
            && k.iter()
                .enumerate()
                .all(|(d, &v)| v >= self.lo[d] && v <= self.hi[d])
    }

    pub fn offset(&self, k: &[i64]) -> Option<usize> {
        if !self.contains(k) {
            return None;
        }
        let strides = self.strides();
        Some(
            k.iter()
                .enumerate()
                .map(|(d, &v)| (v - self.lo[d]) as usize * strides[d])
                .sum(),
        )
    }

    pub fn index_of(&self, mut offset: usize) -> Vec<i64> {
        let strides = self.strides();
        let mut k = vec![0i64; self.dim()];
        for d in 0..self.dim() {
            k[d] = self.lo[d] + (offset / strides[d]) as i64;
            offset %= strides[d];
        }
        k
    }

    /// All indices in row-major order.
    pub fn indices(&self) -> BoxIter {
        BoxIter::new(self.lo.clone(), self.hi.clone())
    }

    /// The box spanned by axes `1..D` (the transverse coordinates `k̄`).
    pub fn transverse(&self) -> (Vec<i64>, Vec<i64>) {
        (self.lo[1..].to_vec(), self.hi[1..].to_vec())
    }
}

/// Row-major iterator over an inclusive integer box. A zero-dimensional box yields one empty index.
#[derive(Debug, Clone)]
pub struct BoxIter {
    lo: Vec<i64>,
    hi: Vec<i64>,
    next: Option<Vec<i64>>,
}

impl BoxIter {
    pub fn new(lo: Vec<i64>, hi: Vec<i64>) -> Self {
        let next = if lo.iter().zip(&hi).any(|(a, b)| a > b) {
            None
        } else {
            Some(lo.clone())
        };
        Self { lo, hi, next }
    }
}

impl Iterator for BoxIter {
    type Item = Vec<i64>;

    fn next(&mut self) -> Option<Vec<i64>> {
        let cur = self.next.take()?;
        let mut n = cur.clone();
        let mut d = n.len();
        loop {
            if d == 0 {
                break;
            }
            d -= 1;
            if n[d] < self.hi[d] {
                n[d] += 1;
                self.next = Some(n);
                break;
            }
            n[d] = self.lo[d];
        }
        Some(cur)
    }
}

/// Real-valued samples on a [`GridSpec`].
#[derive(Debug, Clone, PartialEq)]
pub struct SampleField<T> {
    grid: GridSpec,
    data: Vec<T>,
}

impl<T: Real> SampleField<T> {
    pub fn zeros(grid: GridSpec) -> Self {
        let data = vec![T::zero(); grid.len()];
        Self { grid, data }
    }

    pub fn from_vec(grid: GridSpec, data: Vec<T>) -> Result<Self> {
        if data.len() != grid.len() {
            return Err(Error::DimensionMismatch(format!(
                "grid holds {} samples, got {}",
                grid.len(),
                data.len()
            )));
        }
        Ok(Self { grid, data })
    }

    pub fn from_fn(grid: GridSpec, mut f: impl FnMut(&[i64]) -> T) -> Self {
        let data = grid.indices().map(|k| f(&k)).collect();
        Self { grid, data }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<T> {
        self.data
    }

    pub fn get(&self, k: &[i64]) -> Option<T> {
        self.grid.offset(k).map(|o| self.data[o])
    }

    pub fn set(&mut self, k: &[i64], v: T) -> Result<()> {
        let o = self
            .grid
            .offset(k)
            .ok_or_else(|| Error::OutOfRange(format!("{k:?}")))?;
        self.data[o] = v;
        Ok(())
    }

    pub fn zip_map(&self, other: &Self, f: impl Fn(T, T) -> T) -> Result<Self> {
        if self.grid != other.grid {
            return Err(Error::DimensionMismatch(
                "fields live on different grids".into(),
            ));
        }
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(&a, &b)| f(a, b))
            .collect();
        Ok(Self {
            grid: self.grid.clone(),
            data,
        })
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Self {
            grid: self.grid.clone(),
            data: self.data.iter().map(|&a| f(a)).collect(),
        }
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }

    /// Extracts the line along axis 0 at transverse index `kbar`.
    pub fn line(&self, kbar: &[i64]) -> Result<Vec<T>> {
        let base = self.line_base(kbar)?;
        let stride = self.grid.strides()[0];
        Ok((0..self.grid.extent(0))
            .map(|i| self.data[base + i * stride])
            .collect())
    }

    pub fn set_line(&mut self, kbar: &[i64], values: &[T]) -> Result<()> {
        let base = self.line_base(kbar)?;
        if values.len() != self.grid.extent(0) {
            return Err(Error::DimensionMismatch("line length".into()));
        }
        let stride = self.grid.strides()[0];
        for (i, &v) in values.iter().enumerate() {
            self.data[base + i * stride] = v;
        }
        Ok(())
    }

    fn line_base(&self, kbar: &[i64]) -> Result<usize> {
        let mut k = Vec::with_capacity(self.grid.dim());
        k.push(self.grid.lo()[0]);
        k.extend_from_slice(kbar);
        self.grid
            .offset(&k)
            .ok_or_else(|| Error::OutOfRange(format!("transverse index {kbar:?}")))
    }
}

//! Higher-order-difference unfolding of ideal-modulo samples, applied line by line.

use crate::encoder::ideal_modulo;
use crate::error::{Error, Result};
use crate::filters::{finite_diff, FiniteDiffKernel};
use crate::grid::{BoxIter, SampleField};
use crate::scalar::{lit, Real};

/// Threshold `λ` of the ideal modulo and difference order `N`.
#[derive(Debug, Clone, PartialEq)]
pub struct UsfConfig<T> {
    pub lambda: T,
    pub kernel: FiniteDiffKernel,
}

impl<T: Real> UsfConfig<T> {
    pub fn new(lambda: T, order: usize) -> Result<Self> {
        if !(lambda > T::zero()) {
            return Err(Error::InvalidParameter("lambda must be positive".into()));
        }
        Ok(Self {
            lambda,
            kernel: finite_diff(order)?,
        })
    }
}

fn round_to<T: Real>(x: T, step: T) -> T {
    step * (x / step).round()
}

/// Unfolds one line: `Δ^N ε̃ = M_λ(Δ^N y) − Δ^N y`, then `N` anti-differences with zero
/// initial values, each rounded to `2λℤ`. Returns `γ̃ = y + ε̃`.
pub fn usf_recover_line<T: Real>(y: &[T], cfg: &UsfConfig<T>) -> Result<Vec<T>> {
    let n = cfg.kernel.order();
    if y.len() <= n {
        return Err(Error::InvalidParameter(format!(
            "line of {} samples is too short for order {n}",
            y.len()
        )));
    }
    let step = lit::<T>(2.0) * cfg.lambda;
    let mut eps: Vec<T> = (0..y.len() - n)
        .map(|i| {
            let d = cfg.kernel.apply(y, i);
            round_to(ideal_modulo(d, cfg.lambda) - d, step)
        })
        .collect();
    for _ in 0..n {
        let mut next = Vec::with_capacity(eps.len() + 1);
        let mut acc = T::zero();
        next.push(acc);
        for &d in &eps {
            acc = round_to(acc + d, step);
            next.push(acc);
        }
        eps = next;
    }
    Ok(y.iter().zip(&eps).map(|(&a, &b)| a + b).collect())
}

/// Line-by-line unfolding along `x_1`. Each line is then shifted by a multiple of `2λ` to match an
/// already processed neighbor line, using the rounded mean difference over the whole line.
pub fn usf_recover_field<T: Real>(
    y: &SampleField<T>,
    cfg: &UsfConfig<T>,
) -> Result<SampleField<T>> {
    let grid = y.grid().clone();
    let step = lit::<T>(2.0) * cfg.lambda;
    let (tlo, thi) = grid.transverse();
    let mut out = SampleField::zeros(grid.clone());
    for kbar in BoxIter::new(tlo.clone(), thi.clone()) {
        let mut line = usf_recover_line(&y.line(&kbar)?, cfg)?;
        if let Some(a) = (0..kbar.len()).rev().find(|&a| kbar[a] > tlo[a]) {
            let mut nb = kbar.clone();
            nb[a] -= 1;
            let reference = out.line(&nb)?;
            let mean = reference.iter().zip(&line).map(|(&r, &v)| r - v).sum::<T>()
                / T::from_usize(line.len()).unwrap();
            let shift = round_to(mean, step);
            for v in line.iter_mut() {
                *v = *v + shift;
            }
        }
        out.set_line(&kbar, &line)?;
    }
    Ok(out)
}

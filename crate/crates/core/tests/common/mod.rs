#![allow(dead_code)]

use mdfold_core::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const LAMBDA: f64 = 0.3;
pub const H: f64 = 0.19;
pub const B: f64 = 0.32;

pub fn params() -> Params64 {
    HysteresisParams::new(LAMBDA, H, B).unwrap()
}

/// 3×…×3 coefficients uniform on [−1, 1], unit bandwidths.
pub fn random_signal(seed: u64, dim: usize, half_width: f64) -> Signal64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = 3usize.pow(dim as u32);
    let coeffs = (0..n).map(|_| rng.gen_range(-1.0..=1.0)).collect();
    BandlimitedSignal::new(
        Bandwidth::new(vec![1.0; dim]).unwrap(),
        vec![1; dim],
        coeffs,
        DomainBox::new(vec![-half_width; dim], vec![half_width; dim]).unwrap(),
    )
    .unwrap()
}

pub fn lattice(periods: &[f64]) -> Lattice64 {
    Lattice::rectangular(periods.to_vec()).unwrap()
}

/// Grid with `k_1 ∈ [−k1, k1]` and `bands` whole bands either side of 0 on each transverse axis.
pub fn band_grid(lat: &Lattice64, k1: i64, bands: i64) -> GridSpec {
    let g = BandGeometry::new(B, lat.periods().to_vec()).unwrap();
    let mut lo = vec![-k1];
    let mut hi = vec![k1];
    for &n in g.per_band() {
        lo.push(-bands * n);
        hi.push(bands * n - 1);
    }
    GridSpec::new(lo, hi).unwrap()
}

pub fn unchecked() -> EncodeOptions {
    EncodeOptions {
        precondition: Precondition::Unchecked,
        ..Default::default()
    }
}

pub fn gaussian_field(seed: u64, sigma: f64, grid: &GridSpec) -> Field64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v = Vec::with_capacity(grid.len() + 1);
    while v.len() < grid.len() {
        let u1: f64 = 1.0 - rng.gen::<f64>();
        let u2: f64 = rng.gen();
        let r = (-2.0 * u1.ln()).sqrt();
        v.push(sigma * r * (std::f64::consts::TAU * u2).cos());
        v.push(sigma * r * (std::f64::consts::TAU * u2).sin());
    }
    v.truncate(grid.len());
    SampleField::from_vec(grid.clone(), v).unwrap()
}

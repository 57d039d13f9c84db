//! Counter-based random streams and the signal/noise generators of the study.

use mdfold_core::{BandlimitedSignal, Bandwidth, DomainBox, GridSpec, SampleField};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const TAG_SIGNAL: u64 = 0x5349_474e;
const TAG_NOISE: u64 = 0x4e4f_4953;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// ChaCha8 stream keyed by folding `words` through SplitMix64.
pub fn stream(words: &[u64]) -> ChaCha8Rng {
    let mut h = 0u64;
    for &w in words {
        h = splitmix64(h ^ w);
    }
    let mut key = [0u8; 32];
    for (i, chunk) in key.chunks_mut(8).enumerate() {
        h = splitmix64(h.wrapping_add(i as u64));
        chunk.copy_from_slice(&h.to_le_bytes());
    }
    ChaCha8Rng::from_seed(key)
}

/// Stream for the random signal of one trial; shared by every (σ, T₂) cell.
pub fn signal_stream(seed: u64, trial: usize) -> ChaCha8Rng {
    stream(&[seed, TAG_SIGNAL, trial as u64])
}

/// Stream for the noise of one trial in the cell addressed by the values of `σ` and `T₂`.
pub fn noise_stream(seed: u64, sigma: f64, t2: f64, trial: usize) -> ChaCha8Rng {
    stream(&[seed, TAG_NOISE, sigma.to_bits(), t2.to_bits(), trial as u64])
}

/// Uniform coefficients on `[−1, 1]` (as `2u − 1`) over the `3^D` indices `|k_d| ≤ 1`.
pub fn gen_signal<R: Rng>(
    rng: &mut R,
    bandwidth: Bandwidth<f64>,
    domain: DomainBox<f64>,
) -> BandlimitedSignal<f64> {
    let d = bandwidth.dim();
    let n = 3usize.pow(d as u32);
    let coeffs = (0..n).map(|_| 2.0 * rng.gen::<f64>() - 1.0).collect();
    BandlimitedSignal::new(bandwidth, vec![1; d], coeffs, domain).expect("consistent shape")
}

/// Standard normal pairs by Box–Muller; both variates of each pair are used.
pub fn normals<R: Rng>(rng: &mut R, n: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(n + 1);
    while out.len() < n {
        let u1 = 1.0 - rng.gen::<f64>();
        let u2 = rng.gen::<f64>();
        let r = (-2.0 * u1.ln()).sqrt();
        let a = std::f64::consts::TAU * u2;
        out.push(r * a.cos());
        out.push(r * a.sin());
    }
    out.truncate(n);
    out
}

/// I.i.d. `N(0, σ²)` samples on `grid`.
pub fn gen_noise<R: Rng>(rng: &mut R, sigma: f64, grid: &GridSpec) -> SampleField<f64> {
    let data = normals(rng, grid.len())
        .into_iter()
        .map(|z| sigma * z)
        .collect();
    SampleField::from_vec(grid.clone(), data).unwrap()
}

mod common;

use common::*;
use mdfold_core::io::{ledger_from_csv, ledger_to_csv};
use mdfold_core::*;

#[test]
fn ideal_modulo_examples() {
    let cases: [(f64, f64); 4] = [(0.0, 0.0), (0.5, -0.1), (-0.7, -0.1), (0.3, -0.3)];
    for (x, want) in cases {
        let got = ideal_modulo(x, 0.3);
        assert!((got - want).abs() < 1e-12, "M({x}) = {got}, want {want}");
    }
}

#[test]
fn ideal_modulo_range_and_congruence() {
    for i in -500..500 {
        let x = i as f64 * 0.0137;
        let z = ideal_modulo(x, 0.3);
        assert!((-0.3..0.3).contains(&z));
        let n = (x - z) / 0.6;
        assert!((n - n.round()).abs() < 1e-9);
    }
}

fn ramp(to: f64, n: usize) -> Vec<f64> {
    (0..=n).map(|i| to * i as f64 / n as f64).collect()
}

#[test]
fn one_dimensional_constant_and_ramp() {
    let p = params();
    let flat = vec![0.0; 50];
    let out = encode_1d(&flat, 0, &p).unwrap();
    assert!(out.events.is_empty());
    assert_eq!(out.level, 0);
    assert_eq!(out.folded, flat);

    let g = ramp(0.35, 100);
    let out = encode_1d(&g, 0, &p).unwrap();
    assert_eq!(out.events.len(), 1);
    assert_eq!(out.events[0].sign, 1);
    let at = out.events[0].index as usize;
    assert!(g[at] >= 0.3 && g[at - 1] < 0.3);
    for i in 0..g.len() {
        assert!((out.folded[i] + out.residual[i] - g[i]).abs() < 1e-15);
    }
    assert!((out.residual[at] - 2.0 * p.lambda_h()).abs() < 1e-15);
}

#[test]
fn one_dimensional_hysteresis_band() {
    // Up through λ, back down by h triggers the reverse fold; down by less does not.
    let p = params();
    let mut g = ramp(0.32, 64);
    let top = 0.32;
    g.extend((1..=40).map(|i| top - 0.17 * i as f64 / 40.0));
    assert_eq!(encode_1d(&g, 0, &p).unwrap().events.len(), 1);
    g.extend((1..=20).map(|i| top - 0.17 - 0.04 * i as f64 / 20.0));
    let out = encode_1d(&g, 0, &p).unwrap();
    assert_eq!(out.events.len(), 2);
    assert_eq!(out.events[1].sign, -1);
}

#[test]
fn one_dimensional_without_hysteresis_is_ideal_modulo() {
    let p = HysteresisParams::new(0.3, 0.0, B).unwrap();
    let n = 4000;
    let g: Vec<f64> = (0..=n)
        .map(|i| {
            let t = (i as f64 - 2000.0) * 0.005;
            1.7 * (0.9 * t).sin() + 0.6 * (2.3 * t + 0.4).cos() + 0.013
        })
        .collect();
    let out = encode_1d(&g, 2000, &p).unwrap();
    assert!(out.events.len() > 10);
    for (i, (&z, &x)) in out.folded.iter().zip(&g).enumerate() {
        assert!(
            (z - ideal_modulo(x, 0.3)).abs() < 1e-12,
            "sample {i}: {z} vs {}",
            ideal_modulo(x, 0.3)
        );
    }
}

#[test]
fn one_dimensional_mirrors_negative_time() {
    let p = params();
    let n = 300;
    let half: Vec<f64> = (0..=n).map(|i| 0.9 * (i as f64 * 0.01).sin()).collect();
    let mut g: Vec<f64> = half[1..].iter().rev().copied().collect();
    g.extend(&half);
    let out = encode_1d(&g, n, &p).unwrap();
    let pos: Vec<_> = out.events.iter().filter(|e| e.r > 0).collect();
    let neg: Vec<_> = out.events.iter().filter(|e| e.r < 0).collect();
    assert!(!pos.is_empty());
    assert_eq!(pos.len(), neg.len());
    for e in &pos {
        let m = neg.iter().find(|f| f.r == -e.r).unwrap();
        assert_eq!(m.index, -e.index);
        assert_eq!(m.sign, e.sign);
    }
}

#[test]
fn one_dimensional_resolution_error() {
    let g = vec![0.0, 0.1];
    assert!(matches!(
        encode_1d(&g, 0, &params()),
        Err(Error::Resolution(_))
    ));
}

fn one_dim_signal(coeffs: Vec<f64>) -> Signal64 {
    let k = coeffs.len() / 2;
    BandlimitedSignal::new(
        Bandwidth::new(vec![1.0]).unwrap(),
        vec![k],
        coeffs,
        DomainBox::new(vec![-20.0], vec![20.0]).unwrap(),
    )
    .unwrap()
}

/// With one band point, the band recursion and the 1D recursion agree on the first fold; they
/// differ afterwards because the band residual jumps by h and the 1D residual by 2λ − h.
#[test]
fn single_point_bands_match_first_one_dimensional_fold() {
    let sig = one_dim_signal(vec![0.0, 0.0, 0.4]);
    let lat = lattice(&[0.02]);
    let grid = GridSpec::new(vec![-300], vec![300]).unwrap();
    let opts = EncodeOptions {
        single_point_bands: true,
        ..unchecked()
    };
    let p = params();
    let md = encode_md(&sig, &lat, &p, &grid, &opts).unwrap();
    let events = &md.ledger.bands[&Vec::<i64>::new()].events;
    assert_eq!(md.ledger.bands[&Vec::<i64>::new()].level, 0);

    let q = opts.q as i64;
    let fine: Vec<f64> = (-300 * q..=300 * q)
        .map(|i| eval_signal(&sig, &[i as f64 * 0.02 / q as f64]))
        .collect();
    let one = encode_1d(&fine, (300 * q) as usize, &p).unwrap();
    let first_md = events.iter().find(|e| e.r == 1).unwrap();
    let first_1d = one.events.iter().find(|e| e.r == 1).unwrap();
    assert!((first_md.tau - first_1d.index as f64 * 0.02 / q as f64).abs() < 1e-12);
    assert_eq!(first_md.sign, first_1d.sign);
    assert_eq!(events.len(), 1);
    assert_eq!(one.events.len(), 2);
}

#[test]
fn zero_signal_never_folds() {
    let sig = BandlimitedSignal::new(
        Bandwidth::new(vec![1.0, 1.0]).unwrap(),
        vec![1, 1],
        vec![0.0; 9],
        DomainBox::new(vec![-2.0; 2], vec![2.0; 2]).unwrap(),
    )
    .unwrap();
    let lat = lattice(&[0.02, 0.04]);
    let grid = band_grid(&lat, 50, 2);
    let enc = encode_md(&sig, &lat, &params(), &grid, &EncodeOptions::default()).unwrap();
    assert_eq!(enc.ledger.event_count(), 0);
    assert!(enc.ledger.bands.values().all(|b| b.level == 0));
    assert_eq!(enc.folded, enc.clean);
}

struct Checked {
    enc: EncodeResult<f64>,
    sup: f64,
}

fn encode_checked(seed: u64, periods: &[f64], k1: i64, bands: i64) -> Checked {
    let sig = random_signal(seed, periods.len(), 4.0);
    let lat = lattice(periods);
    let grid = band_grid(&lat, k1, bands);
    let enc = encode_md(&sig, &lat, &params(), &grid, &unchecked()).unwrap();
    let sup = diagnostics(&sig, &lat, &params(), 8).unwrap().sup_norm;
    Checked { enc, sup }
}

fn assert_invariants(c: &Checked, t1: f64) {
    let p = params();
    let enc = &c.enc;
    for ((&z, &e), &g) in enc
        .folded
        .data()
        .iter()
        .zip(enc.residual.data())
        .zip(enc.clean.data())
    {
        assert!(z.abs() <= p.lambda + 1e-12, "|z| = {}", z.abs());
        let n = e / p.h;
        assert!((n - n.round()).abs() < 1e-12);
        assert!((z + e - g).abs() <= 1e-12 * g.abs().max(1.0));
    }
    let min_gap = p.h / c.sup - t1 / 8.0;
    for bl in enc.ledger.bands.values() {
        for w in bl.events.windows(2) {
            assert!(w[1].tau > w[0].tau);
            if w[0].r.signum() == w[1].r.signum() {
                assert!(
                    w[1].tau - w[0].tau >= min_gap,
                    "gap {}",
                    w[1].tau - w[0].tau
                );
            }
        }
    }
    for (b, bl) in &enc.ledger.bands {
        for nb in neighbors(b) {
            if let Some(other) = enc.ledger.bands.get(&nb) {
                assert!((bl.level - other.level).abs() <= 1, "{b:?} vs {nb:?}");
            }
        }
    }
}

#[test]
fn encoder_invariants_on_admissible_signals() {
    let mut checked = 0;
    for seed in 0..12 {
        let c = encode_checked(seed, &[0.02, 0.04], 100, 3);
        if c.enc.max_spread < H.min(2.0 * LAMBDA - 2.0 * H) {
            assert!(c.enc.ledger.event_count() > 0);
            assert_invariants(&c, 0.02);
            checked += 1;
        }
    }
    assert!(checked >= 5, "only {checked} admissible signals");
}

#[test]
fn encoder_invariants_in_three_dimensions() {
    let c = encode_checked(2, &[0.04, 0.08, 0.16], 40, 1);
    assert_eq!(c.enc.ledger.bands.len(), 4);
    assert!(c.enc.max_spread < H);
    assert_invariants(&c, 0.04);
}

#[test]
fn residual_lookup_matches_field_and_survives_csv() {
    let c = encode_checked(1, &[0.02, 0.04], 80, 2);
    let p = params();
    for k in c.enc.residual.grid().indices() {
        let r = residual_at(&c.enc.ledger, &p, &k).unwrap();
        assert_eq!(r, c.enc.residual.get(&k).unwrap());
    }
    let (ev, lv) = ledger_to_csv(&c.enc.ledger);
    assert!(ev.starts_with("b2,r,tau,sign\n"));
    assert!(lv.starts_with("b2,M\n"));
    let back = ledger_from_csv(&ev, &lv, c.enc.ledger.geometry.clone()).unwrap();
    assert_eq!(back, c.enc.ledger);
}

#[test]
fn shifting_by_multiples_of_h_keeps_folded_samples() {
    let sig = random_signal(5, 2, 4.0);
    let lat = lattice(&[0.02, 0.04]);
    let grid = band_grid(&lat, 80, 2);
    let p = params();
    let a = encode_md(&sig, &lat, &p, &grid, &unchecked()).unwrap();
    for m in [-3i64, 2, 7] {
        let shifted = sig.clone().with_offset(m as f64 * H);
        let b = encode_md(&shifted, &lat, &p, &grid, &unchecked()).unwrap();
        for (x, y) in a.folded.data().iter().zip(b.folded.data()) {
            assert!((x - y).abs() < 1e-9);
        }
        for (band, bl) in &a.ledger.bands {
            let other = &b.ledger.bands[band];
            assert_eq!(other.level, bl.level + m);
            assert_eq!(other.events.len(), bl.events.len());
        }
    }
}

#[test]
fn even_signals_fold_symmetrically() {
    let base = random_signal(9, 2, 4.0);
    let mut c = base.coeffs().to_vec();
    for j2 in 0..3 {
        c[6 + j2] = c[j2];
    }
    let sig = BandlimitedSignal::new(
        base.bandwidth().clone(),
        vec![1, 1],
        c,
        base.domain().clone(),
    )
    .unwrap();
    let lat = lattice(&[0.02, 0.04]);
    let grid = band_grid(&lat, 150, 2);
    let enc = encode_md(&sig, &lat, &params(), &grid, &unchecked()).unwrap();
    let mut total = 0;
    for bl in enc.ledger.bands.values() {
        for e in bl.events.iter().filter(|e| e.r > 0) {
            let m = bl
                .events
                .iter()
                .find(|f| f.r == -e.r)
                .expect("mirrored fold");
            assert!((m.tau + e.tau).abs() < 1e-12);
            assert_eq!(m.sign, e.sign);
            total += 1;
        }
        assert_eq!(
            bl.events.iter().filter(|e| e.r < 0).count(),
            bl.events.iter().filter(|e| e.r > 0).count()
        );
    }
    assert!(total > 0);
}

#[test]
fn strict_precondition_rejects_wide_bands() {
    let sig = random_signal(3, 2, 4.0);
    let lat = lattice(&[0.02, 0.04]);
    let grid = band_grid(&lat, 50, 2);
    let err = encode_md(&sig, &lat, &params(), &grid, &EncodeOptions::default()).unwrap_err();
    assert!(matches!(err, Error::NotWellDefined(_)));

    let tiny: Vec<f64> = sig.coeffs().iter().map(|c| c * 0.01).collect();
    let small = BandlimitedSignal::new(
        sig.bandwidth().clone(),
        vec![1, 1],
        tiny,
        sig.domain().clone(),
    )
    .unwrap()
    .with_offset(1.3);
    let enc = encode_md(&small, &lat, &params(), &grid, &EncodeOptions::default()).unwrap();
    assert!(enc.max_spread < H / 2.0);
}

#[test]
fn encoder_rejects_bad_grids_and_parameters() {
    let sig = random_signal(3, 2, 4.0);
    let lat = lattice(&[0.02, 0.04]);
    let p = params();
    let partial = GridSpec::new(vec![-10, -5], vec![10, 7]).unwrap();
    assert!(matches!(
        encode_md(&sig, &lat, &p, &partial, &unchecked()),
        Err(Error::PartialBands(_))
    ));
    let no_origin = GridSpec::new(vec![1, -8], vec![10, 7]).unwrap();
    assert!(encode_md(&sig, &lat, &p, &no_origin, &unchecked()).is_err());
    let bad_ratio = lattice(&[0.02, 0.03]);
    assert!(encode_md(&sig, &bad_ratio, &p, &band_grid(&lat, 5, 1), &unchecked()).is_err());
    assert!(HysteresisParams::new(0.3, 0.2, B).is_err());
    assert!(HysteresisParams::new(-0.3, 0.1, B).is_err());
    let no_h = HysteresisParams::new(0.3, 0.0, B).unwrap();
    assert!(encode_md(&sig, &lat, &no_h, &band_grid(&lat, 5, 1), &unchecked()).is_err());
}

#[test]
fn f32_encoding_keeps_invariants() {
    let s64 = random_signal(1, 2, 4.0);
    let coeffs: Vec<f32> = s64.coeffs().iter().map(|&c| c as f32).collect();
    let sig = BandlimitedSignal::new(
        Bandwidth::new(vec![1.0f32, 1.0]).unwrap(),
        vec![1, 1],
        coeffs,
        DomainBox::new(vec![-4.0f32; 2], vec![4.0f32; 2]).unwrap(),
    )
    .unwrap();
    let lat = Lattice::<f32>::rectangular(vec![0.02, 0.04]).unwrap();
    let grid = GridSpec::new(vec![-150, -16], vec![150, 15]).unwrap();
    let p = HysteresisParams::new(0.3f32, 0.19, 0.32).unwrap();
    let enc = encode_md(&sig, &lat, &p, &grid, &unchecked()).unwrap();
    let reference = encode_md(
        &s64,
        &lattice(&[0.02, 0.04]),
        &params(),
        &grid,
        &unchecked(),
    )
    .unwrap();
    assert!(reference.ledger.event_count() > 0);
    assert_eq!(enc.ledger.event_count(), reference.ledger.event_count());
    for ((&z, &e), &g) in enc
        .folded
        .data()
        .iter()
        .zip(enc.residual.data())
        .zip(enc.clean.data())
    {
        assert!(z.abs() <= 0.3 + 1e-5);
        assert!((e / 0.19 - (e / 0.19).round()).abs() < 1e-4);
        assert!((z + e - g).abs() < 1e-5);
    }
}

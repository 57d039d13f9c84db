mod common;

use common::*;
use mdfold_core::*;

const ADMISSIBLE: f64 = 0.19; // min{h, 2λ − 2h}

struct Case {
    lat: Lattice64,
    enc: EncodeResult<f64>,
}

fn admissible_cases(periods: &[f64], k1: i64, bands: i64, want: usize) -> Vec<Case> {
    let lat = lattice(periods);
    let grid = band_grid(&lat, k1, bands);
    let mut out = Vec::new();
    for seed in 0..40 {
        let sig = random_signal(seed, periods.len(), 4.0);
        let enc = encode_md(&sig, &lat, &params(), &grid, &unchecked()).unwrap();
        if enc.max_spread < ADMISSIBLE && enc.ledger.event_count() > 0 {
            out.push(Case {
                lat: lat.clone(),
                enc,
            });
            if out.len() == want {
                break;
            }
        }
    }
    assert_eq!(out.len(), want);
    out
}

/// Expected detection of a ledger event: the first lattice sample (in scan direction) it covers.
fn expected_onset(e: &FoldEvent<f64>, t1: f64) -> i64 {
    let u = e.tau / t1;
    if e.r > 0 {
        (u - 1e-9).ceil() as i64
    } else {
        (u + 1e-9).floor() as i64
    }
}

fn assert_exact(case: &Case, levels: LevelEstimator) {
    let p = params();
    let cfg = DetectionConfig::new(&p, &case.lat, 1)
        .unwrap()
        .with_levels(levels);
    let rec = reconstruct(&case.enc.folded, &cfg).unwrap();
    let t1 = case.lat.periods()[0];
    let m0 = case.enc.ledger.bands[&vec![0i64; case.lat.dim() - 1]].level;
    for (b, bl) in &case.enc.ledger.bands {
        let got = &rec.detection.bands[b];
        assert_eq!(got.len(), bl.events.len(), "band {b:?}");
        for (d, e) in got.iter().zip(&bl.events) {
            assert_eq!(d.r, e.r);
            assert_eq!(d.sign_est, e.sign);
            assert_eq!(d.onset(1), expected_onset(e, t1), "band {b:?} r={}", e.r);
            assert!((d.tau_est - d.onset(1) as f64 * t1).abs() < 1e-12);
        }
        assert_eq!(rec.levels[b] + m0, bl.level, "band {b:?}");
    }
    let zero = SampleField::zeros(case.enc.clean.grid().clone());
    let score = score_recovery(&rec.estimate, &case.enc.clean, &zero, p.h).unwrap();
    assert!(score.success, "max error {}", score.max_err);
    assert!((score.offset + p.h * m0 as f64).abs() < 1e-12);
    assert!(score.max_err < 1e-9);
}

#[test]
fn noiseless_recovery_is_exact_in_two_dimensions() {
    for case in admissible_cases(&[0.02, 0.04], 120, 3, 5) {
        assert_exact(&case, LevelEstimator::AllSlices);
        assert_exact(&case, LevelEstimator::ZeroSlice);
    }
}

#[test]
fn noiseless_recovery_is_exact_in_three_dimensions() {
    for case in admissible_cases(&[0.04, 0.08, 0.16], 40, 1, 2) {
        assert_exact(&case, LevelEstimator::AllSlices);
        assert_exact(&case, LevelEstimator::ZeroSlice);
    }
}

#[test]
fn noiseless_recovery_in_single_precision() {
    let case = &admissible_cases(&[0.02, 0.04], 120, 2, 1)[0];
    let p32 = HysteresisParams::new(LAMBDA as f32, H as f32, B as f32).unwrap();
    let lat32 = Lattice::<f32>::rectangular(vec![0.02, 0.04]).unwrap();
    let to32 = |f: &Field64| {
        SampleField::from_vec(
            f.grid().clone(),
            f.data().iter().map(|&v| v as f32).collect(),
        )
        .unwrap()
    };
    let y32 = to32(&case.enc.folded);
    let clean32 = to32(&case.enc.clean);
    let cfg = DetectionConfig::new(&p32, &lat32, 1)
        .unwrap()
        .with_levels(LevelEstimator::AllSlices);
    let rec = reconstruct(&y32, &cfg).unwrap();
    assert_eq!(rec.detection.fold_count(), case.enc.ledger.event_count());
    let zero = SampleField::zeros(clean32.grid().clone());
    let score = score_recovery(&rec.estimate, &clean32, &zero, p32.h).unwrap();
    assert!(score.max_err < 1e-5, "max error {}", score.max_err);
}

#[test]
fn small_noise_is_tolerated() {
    let p = params();
    for (i, case) in admissible_cases(&[0.02, 0.04], 120, 3, 3)
        .iter()
        .enumerate()
    {
        let eta = gaussian_field(100 + i as u64, 0.01, case.enc.clean.grid());
        let y = case.enc.folded.zip_map(&eta, |a, b| a + b).unwrap();
        let cfg = DetectionConfig::new(&p, &case.lat, 1)
            .unwrap()
            .with_levels(LevelEstimator::AllSlices);
        let rec = reconstruct(&y, &cfg).unwrap();
        let score = score_recovery(&rec.estimate, &case.enc.clean, &eta, p.h).unwrap();
        assert!(score.success, "case {i}: {}", score.max_err);
    }
}

#[test]
fn detection_rejects_fields_without_origin() {
    let p = params();
    let lat = lattice(&[0.02, 0.04]);
    let cfg = DetectionConfig::new(&p, &lat, 1).unwrap();
    let grid = GridSpec::new(vec![1, 0], vec![50, 7]).unwrap();
    let y = SampleField::zeros(grid);
    assert!(detect_folds(&y, &cfg).is_err());
    assert!(reconstruct(&y, &cfg).is_err());
    let bad = HysteresisParams {
        lambda: 0.3,
        h: 0.25,
        band_width: B,
    };
    assert!(DetectionConfig::new(&bad, &lat, 1).is_err());
}

#[test]
fn fold_steps_accumulate_in_scan_direction() {
    let det = DetectionResult {
        order: 1,
        bands: [(
            vec![0i64],
            vec![
                DetectedFold {
                    r: -1,
                    m_min: 2,
                    tau_est: -0.06,
                    sign_est: -1,
                },
                DetectedFold {
                    r: 1,
                    m_min: 0,
                    tau_est: 0.02,
                    sign_est: 1,
                },
                DetectedFold {
                    r: 2,
                    m_min: 4,
                    tau_est: 0.1,
                    sign_est: 1,
                },
            ],
        )]
        .into_iter()
        .collect(),
    };
    assert_eq!(det.fold_count(), 3);
    assert_eq!(
        det.fold_steps(&[0], -4, 6),
        vec![-1, -1, 0, 0, 0, 1, 1, 1, 1, 2, 2]
    );
    assert!(det.fold_steps(&[5], 0, 2).iter().all(|&s| s == 0));
}

/// Independent evaluation of the detection margin for `D = 2`.
fn margin_oracle(t1: f64, t2: f64, sigma: f64, n: i32, sup: f64) -> (f64, f64) {
    let e = std::f64::consts::E;
    let denom = sigma * 2f64.powi(n + 1).sqrt();
    let c = (H / 2.0 - (t1 * e).powi(n) * sup) / denom * (B / t2).sqrt();
    let kappa = (H / 2.0 - (t2 * e).powi(n) * sup) / denom;
    (c, kappa)
}

fn bounds(t1: f64, t2: f64, sigma: f64, n: usize) -> BoundReport<f64> {
    let lat = lattice(&[t1, t2]);
    let bw = Bandwidth::new(vec![1.0, 1.0]).unwrap();
    compute_bounds(&params(), &lat, &bw, 1.0, sigma, n, 501, &[30]).unwrap()
}

#[test]
fn bound_matches_oracle() {
    let r = bounds(0.02, 0.005, 0.08, 1);
    let (c, kappa) = margin_oracle(0.02, 0.005, 0.08, 1, 1.0);
    assert!((r.c - c).abs() < 1e-12);
    assert!((r.c - 2.031_72).abs() < 1e-5);
    assert!((r.kappa[0] - kappa).abs() < 1e-12);
    assert!((r.kappa_min - kappa).abs() < 1e-12);
    assert!((r.p_err_fold - (-c * c).exp()).abs() < 1e-15);
    assert!((r.p_err_fold - 0.016_12).abs() < 1e-5);
    let p_acc = (1.0 - r.p_err_fold).powf(501.0 * 30.0) * (1.0 - r.p_err_level).powf(30.0);
    assert!((r.p_acc - p_acc).abs() < 1e-15);

    let (c2, _) = margin_oracle(0.02, 0.005, 0.08, 2, 1.0);
    assert!((bounds(0.02, 0.005, 0.08, 2).c - c2).abs() < 1e-12);
}

#[test]
fn bound_is_monotone() {
    let sigmas = [0.02, 0.04, 0.06, 0.08, 0.1];
    for w in sigmas.windows(2) {
        let (a, b) = (bounds(0.02, 0.01, w[0], 1), bounds(0.02, 0.01, w[1], 1));
        assert!(a.c > b.c && a.p_err_fold < b.p_err_fold && a.p_acc >= b.p_acc);
    }
    let t2s = [0.005, 0.01, 0.02, 0.04, 0.08];
    for w in t2s.windows(2) {
        assert!(bounds(0.02, w[0], 0.08, 1).c > bounds(0.02, w[1], 0.08, 1).c);
    }
}

#[test]
fn bound_edge_cases() {
    let r = bounds(0.02, 0.01, 0.0, 1);
    assert!(r.c.is_infinite() && r.kappa_min.is_infinite());
    assert_eq!(r.p_err_fold, 0.0);
    assert_eq!(r.p_acc, 1.0);

    // (T_1 e)‖f‖ ≥ h/2: the margin is gone and the bound is vacuous.
    let lat = lattice(&[0.03, 0.02]);
    let bw = Bandwidth::new(vec![1.0, 1.0]).unwrap();
    let r = compute_bounds(&params(), &lat, &bw, 1.0, 0.05, 1, 100, &[4]).unwrap();
    assert!(r.c > 0.0 && r.p_acc > 0.0);
    let r = compute_bounds(&params(), &lat, &bw, 2.0, 0.05, 1, 100, &[4]).unwrap();
    assert_eq!(r.c, 0.0);
    assert_eq!(r.p_err_fold, 1.0);
    assert_eq!(r.p_acc, 0.0);

    assert!(compute_bounds(&params(), &lat, &bw, 1.0, -0.1, 1, 100, &[4]).is_err());
    assert!(compute_bounds(&params(), &lat, &bw, 1.0, 0.1, 1, 100, &[4, 4]).is_err());
}

#[test]
fn condition_report_values() {
    let p = params();
    let lat = lattice(&[0.02, 0.01]);
    let bw = Bandwidth::new(vec![1.0, 1.0]).unwrap();
    let r = ConditionReport::evaluate(&p, &lat, &bw, 1.0, 1);
    let e = std::f64::consts::E;
    assert!((r.spread.lhs - 0.32 * 2f64.sqrt() * 2f64.sqrt()).abs() < 1e-12);
    assert!((r.spread.rhs - 0.03).abs() < 1e-12);
    assert!(!r.spread.holds());
    assert!((r.annihilation.lhs - 0.02 * e).abs() < 1e-12);
    assert!(r.annihilation.holds());
    assert!((r.separation.lhs - 0.04).abs() < 1e-12 && (r.separation.rhs - 0.19).abs() < 1e-12);
    assert!(r.separation.holds());
    assert!((r.band_support.lhs - 0.02).abs() < 1e-12 && r.band_support.holds());
    assert!(!r.all_hold());
    let kv = r.to_key_values();
    assert!(kv
        .lines()
        .any(|l| l.starts_with("spread=") && l.ends_with(":false")));
    assert!(kv.lines().any(|l| l == "all=false"));

    let tiny = ConditionReport::evaluate(&p, &lat, &bw, 0.02, 1);
    assert!(tiny.all_hold());
}

#[test]
fn score_ignores_offsets_on_the_grid_only() {
    let grid = GridSpec::new(vec![0, 0], vec![9, 3]).unwrap();
    let clean = SampleField::from_fn(grid.clone(), |k| {
        (k[0] as f64 * 0.3).sin() + k[1] as f64 * 0.1
    });
    let noise = gaussian_field(1, 0.05, &grid);
    let truth = clean.zip_map(&noise, |a, b| a + b).unwrap();

    let shifted = truth.map(|v| v - 3.0 * H);
    let s = score_recovery(&shifted, &clean, &noise, H).unwrap();
    assert!(s.success && s.max_err < 1e-12);
    assert!((s.offset + 3.0 * H).abs() < 1e-12);

    let off_grid = truth.map(|v| v + 0.5 * H);
    assert!(
        !score_recovery(&off_grid, &clean, &noise, H)
            .unwrap()
            .success
    );

    let mut one_bad = shifted.clone();
    one_bad
        .set(&[4, 2], shifted.get(&[4, 2]).unwrap() + H)
        .unwrap();
    let s = score_recovery(&one_bad, &clean, &noise, H).unwrap();
    assert!(!s.success);
    assert!((s.max_err - H).abs() < 1e-12);
}

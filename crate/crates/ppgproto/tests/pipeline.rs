use std::f64::consts::TAU;

use ppgproto::pipeline::{self, PrototypeOptions, SubjectBundle};
use ppgproto_core::predictor::PredictorSample;
use ppgproto_core::segmentation::SegmentationMethod;
use ppgproto_core::{EventTrain, UniformSeries};
use ppgproto_synth::{generate_cohort, CohortSpec, IbiGroupTag};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn sse(samples: &[PredictorSample], k1: f64, k2: f64) -> f64 {
    samples
        .iter()
        .map(|s| (s.d - k1 - k2 * s.d_zm).powi(2))
        .sum()
}

/// Coarse-to-fine grid search for the least-squares line.
fn grid_fit(samples: &[PredictorSample]) -> (f64, f64) {
    let (mut k1, mut k2) = (0.0, 0.0);
    let (mut h1, mut h2) = (0.05, 0.5);
    for _ in 0..40 {
        let mut best = (f64::INFINITY, k1, k2);
        for i in -10..=10 {
            for j in -10..=10 {
                let (a, b) = (k1 + h1 * i as f64, k2 + h2 * j as f64);
                let e = sse(samples, a, b);
                if e < best.0 {
                    best = (e, a, b);
                }
            }
        }
        (k1, k2) = (best.1, best.2);
        h1 *= 0.3;
        h2 *= 0.3;
    }
    (k1, k2)
}

#[test]
fn fit_agrees_with_brute_force_least_squares() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..20 {
        let n = rng.random_range(3..40);
        let (k1, k2) = (rng.random_range(0.05..0.2), rng.random_range(-1.0..1.5));
        let samples: Vec<PredictorSample> = (0..n)
            .map(|i| {
                let d_zm = rng.random_range(-0.07..0.07);
                let d = k1 + k2 * d_zm + rng.random_range(-0.02..0.02);
                PredictorSample::new(format!("s{i}"), d, d_zm)
            })
            .collect();
        let report = pipeline::predict(&samples, false, Vec::new()).unwrap();
        let (g1, g2) = grid_fit(&samples);
        assert!(
            (report.k1_s - g1).abs() < 1e-6,
            "k1 {} vs {g1}",
            report.k1_s
        );
        assert!((report.k2 - g2).abs() < 1e-5, "k2 {} vs {g2}", report.k2);
        let mean_e = report.errors_s.iter().sum::<f64>() / n as f64;
        assert!(mean_e.abs() < 1e-12);
        assert!(report.ci90_s <= report.baseline.ci90_s + 1e-12 || report.k2.abs() < 0.2);
    }
}

#[test]
fn boosted_harmonics_leave_more_energy_above_the_fundamental() {
    for seed in 1..=6 {
        boost_ordering(seed);
    }
}

fn boost_ordering(seed: u64) {
    let spec = CohortSpec {
        n_subjects: 9,
        seed,
        duration_s: 40.0,
        epochs: vec![],
        ..CohortSpec::default()
    };
    let (cohort, truth) = generate_cohort(&spec).unwrap();
    let opts = PrototypeOptions::default();
    let records: Vec<_> = cohort
        .iter()
        .flat_map(|s| {
            pipeline::build_prototypes(
                &SubjectBundle::from_synth(s),
                SegmentationMethod::EcgBased,
                &opts,
            )
            .unwrap()
            .records
        })
        .collect();
    let curves = pipeline::energy_curves(&records, 4).unwrap();
    let summary = pipeline::summarize_harmonics(&records, &curves, 4, Some(3)).unwrap();
    let split = summary.ibi_split.unwrap();
    assert_eq!(split.low_ibi.len(), 3);
    assert_eq!(split.high_ibi.len(), 3);
    let high: Vec<String> = truth
        .subjects
        .iter()
        .filter(|p| p.ibi_group == Some(IbiGroupTag::High))
        .map(|p| format!("{}:all", p.id))
        .collect();
    let mut got = split.high_ibi.clone();
    got.sort();
    assert_eq!(got, high);
    let m0 = &split.orders[0];
    assert!(
        m0.high_ibi.median > m0.low_ibi.median,
        "seed {seed}: {} vs {}",
        m0.high_ibi.median,
        m0.low_ibi.median
    );
}

fn cosine_bundle(period: f64, d: f64) -> SubjectBundle {
    let rate = 100.0;
    let n = (60.0 * rate) as usize;
    let values: Vec<f64> = (0..n)
        .map(|j| (TAU * (j as f64 / rate - d) / period).cos())
        .collect();
    let rpeaks: Vec<f64> = (0..)
        .map(|k| k as f64 * period)
        .take_while(|t| *t < 59.0)
        .collect();
    SubjectBundle::new(
        "cos",
        UniformSeries::new(0.0, rate, values).unwrap(),
        Some(EventTrain::new(rpeaks).unwrap()),
        Vec::new(),
    )
    .unwrap()
}

#[test]
fn cosine_markers_sit_at_quarter_periods() {
    let (period, d) = (1.0, 0.2);
    let built = pipeline::build_prototypes(
        &cosine_bundle(period, d),
        SegmentationMethod::EcgBased,
        &PrototypeOptions::default(),
    )
    .unwrap();
    let row = pipeline::feature_row(&built.records[0]);
    let m = row.markers.unwrap();
    assert!((m.m_pos - d).abs() < 1e-3, "{}", m.m_pos);
    assert!((m.f_pos - (d + 0.25)).abs() < 1e-3, "{}", m.f_pos);
    assert!((m.d_pos - (d + 0.75)).abs() < 1e-3, "{}", m.d_pos);
    assert!(m.d_zm.abs() < 1e-3, "{}", m.d_zm);
    assert!(!row.deviant);
}

#[test]
fn rpeaks_outside_the_record_are_refused() {
    let ppg = UniformSeries::new(0.0, 40.0, vec![0.0; 400]).unwrap();
    let far = EventTrain::new(vec![100.0, 101.0]).unwrap();
    let err = SubjectBundle::new("x", ppg, Some(far), Vec::new()).unwrap_err();
    assert_eq!(err.exit_code(), 2);
}

#[test]
fn blind_segmentation_needs_no_rpeaks() {
    let mut b = cosine_bundle(0.9, 0.1);
    b.rpeaks = None;
    let blind = pipeline::build_prototypes(
        &b,
        SegmentationMethod::PpgBlind,
        &PrototypeOptions::default(),
    )
    .unwrap();
    assert!((blind.records[0].prototype.median_ibi - 0.9).abs() < 0.01);
    let ecg = pipeline::build_prototypes(
        &b,
        SegmentationMethod::EcgBased,
        &PrototypeOptions::default(),
    );
    assert_eq!(ecg.unwrap_err().exit_code(), 2);
}

#[test]
fn pairing_reports_missing_methods() {
    let spec = CohortSpec {
        n_subjects: 2,
        duration_s: 30.0,
        epochs: vec![],
        ..CohortSpec::default()
    };
    let (cohort, _) = generate_cohort(&spec).unwrap();
    let opts = PrototypeOptions::default();
    let mut rows = Vec::new();
    for (i, s) in cohort.iter().enumerate() {
        let b = SubjectBundle::from_synth(s);
        for rec in pipeline::build_prototypes(&b, SegmentationMethod::EcgBased, &opts)
            .unwrap()
            .records
        {
            rows.push(pipeline::feature_row(&rec));
        }
        if i == 0 {
            for rec in pipeline::build_prototypes(&b, SegmentationMethod::PpgBlind, &opts)
                .unwrap()
                .records
            {
                rows.push(pipeline::feature_row(&rec));
            }
        }
    }
    let (samples, warnings) = pipeline::pair_rows(&rows, pipeline::ALL);
    assert_eq!(samples.len(), 1);
    assert_eq!(
        warnings,
        vec!["s02: no ECG-blind prototype, skipped".to_string()]
    );
}

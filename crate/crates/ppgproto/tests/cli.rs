use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use ppgproto::io;
use ppgproto::pipeline::FeatureRow;
use ppgproto_core::segmentation::SegmentationMethod;
use ppgproto_core::{EventTrain, MarkerSet, UniformSeries};
use serde_json::Value;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_ppgproto"));
    c.env_remove("PPGPROTO_OUT");
    c
}

fn run_in(cwd: &Path, args: &[&str]) -> Output {
    bin().current_dir(cwd).args(args).output().unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap_or(-1)
}

fn ok(out: Output) -> Output {
    assert_eq!(
        code(&out),
        0,
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

const SMALL: &str = r#"{
  "n_subjects": 4,
  "seed": 3,
  "duration_s": 40.0,
  "epochs": [{"start": 5.0, "end": 20.0, "label": "breath_hold"}]
}"#;

/// Writes the small config and synthesizes it into `<dir>/cohort`.
fn small_cohort(dir: &Path) -> PathBuf {
    fs::write(dir.join("config.json"), SMALL).unwrap();
    ok(run_in(
        dir,
        &["synth", "--config", "config.json", "--out", "cohort"],
    ));
    dir.join("cohort")
}

fn files(root: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    fn walk(root: &Path, dir: &Path, out: &mut BTreeMap<PathBuf, Vec<u8>>) {
        for e in fs::read_dir(dir).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                walk(root, &p, out);
            } else {
                out.insert(
                    p.strip_prefix(root).unwrap().to_path_buf(),
                    fs::read(&p).unwrap(),
                );
            }
        }
    }
    let mut out = BTreeMap::new();
    walk(root, root, &mut out);
    out
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn synth_writes_every_subject_and_repeats_exactly() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let ca = small_cohort(a.path());
    let cb = small_cohort(b.path());
    let (fa, fb) = (files(&ca), files(&cb));
    assert_eq!(fa, fb);
    for s in ["s01", "s02", "s03", "s04"] {
        for f in [
            io::PPG_FILE,
            io::RPEAKS_FILE,
            io::EPOCHS_FILE,
            io::TRUTH_FILE,
        ] {
            assert!(fa.contains_key(&Path::new(s).join(f)), "{s}/{f} missing");
        }
    }
    assert!(fa.contains_key(Path::new(io::TRUTH_FILE)));
}

#[test]
fn different_seed_changes_the_cohort() {
    let a = tempfile::tempdir().unwrap();
    let ca = small_cohort(a.path());
    ok(run_in(
        a.path(),
        &[
            "synth",
            "--config",
            "config.json",
            "--seed",
            "4",
            "--out",
            "other",
        ],
    ));
    assert_ne!(
        fs::read(ca.join("s01").join(io::PPG_FILE)).unwrap(),
        fs::read(a.path().join("other/s01").join(io::PPG_FILE)).unwrap()
    );
}

#[test]
fn zero_subjects_is_a_usage_error() {
    let d = tempfile::tempdir().unwrap();
    let out = run_in(d.path(), &["synth", "--subjects", "0", "--out", "x"]);
    assert_eq!(code(&out), 2);
    assert!(!String::from_utf8_lossy(&out.stderr).is_empty());
}

#[test]
fn bad_config_is_a_usage_error() {
    let d = tempfile::tempdir().unwrap();
    fs::write(d.path().join("c.json"), r#"{"n_subjects": 3, "bogus": 1}"#).unwrap();
    assert_eq!(
        code(&run_in(
            d.path(),
            &["synth", "--config", "c.json", "--out", "x"]
        )),
        2
    );
}

#[test]
fn unknown_flag_is_a_usage_error() {
    let d = tempfile::tempdir().unwrap();
    assert_eq!(
        code(&run_in(d.path(), &["prototype", "--frobnicate", "."])),
        2
    );
}

#[test]
fn missing_input_is_an_io_error() {
    let d = tempfile::tempdir().unwrap();
    assert_eq!(
        code(&run_in(d.path(), &["prototype", "nowhere", "--out", "x"])),
        4
    );
    assert_eq!(
        code(&run_in(d.path(), &["features", "nowhere", "--out", "x"])),
        4
    );
}

#[test]
fn too_few_cycles_exits_3() {
    let d = tempfile::tempdir().unwrap();
    let sub = d.path().join("short");
    let values: Vec<f64> = (0..80)
        .map(|j| (std::f64::consts::TAU * j as f64 / 40.0).cos())
        .collect();
    io::write_ppg(
        &sub.join(io::PPG_FILE),
        &UniformSeries::new(0.0, 40.0, values).unwrap(),
    )
    .unwrap();
    io::write_rpeaks(
        &sub.join(io::RPEAKS_FILE),
        &EventTrain::new(vec![0.2]).unwrap(),
    )
    .unwrap();
    let out = run_in(d.path(), &["prototype", "short", "--out", "x"]);
    assert_eq!(
        code(&out),
        3,
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn out_flag_beats_env_which_beats_default() {
    let d = tempfile::tempdir().unwrap();
    let args = ["synth", "--subjects", "2", "--config", "config.json"];
    fs::write(d.path().join("config.json"), SMALL).unwrap();

    ok(bin().current_dir(d.path()).args(args).output().unwrap());
    assert!(d.path().join("ppgproto-out").join(io::TRUTH_FILE).is_file());

    ok(bin()
        .current_dir(d.path())
        .args(args)
        .env("PPGPROTO_OUT", "from_env")
        .output()
        .unwrap());
    assert!(d.path().join("from_env").join(io::TRUTH_FILE).is_file());

    ok(bin()
        .current_dir(d.path())
        .args(args)
        .args(["--out", "from_flag"])
        .env("PPGPROTO_OUT", "from_env2")
        .output()
        .unwrap());
    assert!(d.path().join("from_flag").join(io::TRUTH_FILE).is_file());
    assert!(!d.path().join("from_env2").exists());
}

#[test]
fn labels_and_bins_split_the_prototypes() {
    let d = tempfile::tempdir().unwrap();
    let cohort = small_cohort(d.path());
    ok(run_in(
        d.path(),
        &[
            "prototype",
            "cohort/s01",
            "--labels",
            "breath_hold",
            "--out",
            "lab",
        ],
    ));
    let names: Vec<String> = files(&d.path().join("lab/s01"))
        .keys()
        .map(|p| p.display().to_string())
        .filter(|n| n.ends_with(".json"))
        .collect();
    assert_eq!(
        names,
        [
            "prototype_ecg_breath_hold.json",
            "prototype_ecg_not_breath_hold.json"
        ]
    );

    ok(run_in(
        d.path(),
        &[
            "prototype",
            "cohort",
            "--bins",
            "ibi3",
            "--method",
            "blind",
            "--out",
            "bins",
        ],
    ));
    let names: Vec<String> = files(&d.path().join("bins/s02"))
        .keys()
        .map(|p| p.display().to_string())
        .filter(|n| n.ends_with(".json"))
        .collect();
    assert_eq!(
        names,
        [
            "prototype_blind_ibi_d.json",
            "prototype_blind_ibi_i.json",
            "prototype_blind_ibi_n.json"
        ]
    );

    let d_ibi = json(&d.path().join("bins/s02/prototype_blind_ibi_d.json"))["median_ibi_s"]
        .as_f64()
        .unwrap();
    let i_ibi = json(&d.path().join("bins/s02/prototype_blind_ibi_i.json"))["median_ibi_s"]
        .as_f64()
        .unwrap();
    assert!(d_ibi < i_ibi);
    assert!(cohort.join("s02").is_dir());
}

#[test]
fn prototype_csv_matches_json() {
    let d = tempfile::tempdir().unwrap();
    small_cohort(d.path());
    ok(run_in(
        d.path(),
        &["prototype", "cohort/s03", "--grid", "64", "--out", "p"],
    ));
    let rec = json(&d.path().join("p/s03/prototype_ecg_all.json"));
    let wave: Vec<f64> = rec["waveform"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| v.as_f64().unwrap())
        .collect();
    assert_eq!(wave.len(), 64);
    let mut reader = csv::Reader::from_path(d.path().join("p/s03/prototype_ecg_all.csv")).unwrap();
    assert_eq!(reader.headers().unwrap(), vec!["k", "median", "q1", "q3"]);
    for (k, row) in reader.records().enumerate() {
        let row = row.unwrap();
        assert_eq!(row[0].parse::<usize>().unwrap(), k);
        assert_eq!(row[1].parse::<f64>().unwrap(), wave[k]);
        let (q1, q3): (f64, f64) = (row[2].parse().unwrap(), row[3].parse().unwrap());
        assert!(q1 <= wave[k] + 1e-12 && wave[k] <= q3 + 1e-12);
    }
}

#[test]
fn single_prototype_summary_is_its_curve() {
    let d = tempfile::tempdir().unwrap();
    small_cohort(d.path());
    ok(run_in(d.path(), &["prototype", "cohort/s01", "--out", "p"]));
    ok(run_in(
        d.path(),
        &["harmonics", "p", "--max-order", "6", "--out", "h"],
    ));
    let mut reader =
        csv::Reader::from_path(d.path().join("h/harmonics/energy_s01_ecg_all.csv")).unwrap();
    let curve: Vec<f64> = reader
        .records()
        .map(|r| r.unwrap()[1].parse().unwrap())
        .collect();
    assert_eq!(curve.len(), 7);
    let summary = json(&d.path().join("h/harmonics/summary.json"));
    assert_eq!(summary["n_prototypes"], 1);
    for (m, o) in summary["orders"].as_array().unwrap().iter().enumerate() {
        for key in ["q1", "median", "q3", "whisker_low", "whisker_high"] {
            assert_eq!(o[key].as_f64().unwrap(), curve[m], "order {m} {key}");
        }
    }
}

#[test]
fn features_match_the_generator_truth() {
    let d = tempfile::tempdir().unwrap();
    let clean = r#"{"n_subjects": 4, "seed": 5, "duration_s": 30.0, "noise_fraction": 0.0,
                    "ibi_variability_range": [0.0, 0.0], "epochs": []}"#;
    fs::write(d.path().join("clean.json"), clean).unwrap();
    ok(run_in(
        d.path(),
        &["synth", "--config", "clean.json", "--out", "cohort"],
    ));
    ok(run_in(d.path(), &["prototype", "cohort", "--out", "p"]));
    ok(run_in(d.path(), &["features", "p", "--out", "f"]));
    let rows: Vec<FeatureRow> = io::read_json(&d.path().join("f/features/markers.json")).unwrap();
    assert_eq!(rows.len(), 4);
    for r in &rows {
        let truth = json(
            &d.path()
                .join("cohort")
                .join(&r.subject)
                .join(io::TRUTH_FILE),
        );
        let reference = &truth["reference"];
        let m: MarkerSet = r.markers.unwrap();
        let tol = r.median_ibi_s / 100.0;
        for (got, key) in [(m.m_pos, "m_s"), (m.f_pos, "f_s"), (m.d_pos, "d_s")] {
            let want = reference[key].as_f64().unwrap();
            assert!(
                (got - want).abs() < tol,
                "{} {key}: {got} vs {want}",
                r.subject
            );
        }
    }
    let mut reader = csv::Reader::from_path(d.path().join("f/features/scatter.csv")).unwrap();
    assert_eq!(
        reader.headers().unwrap().len(),
        ppgproto::pipeline::SCATTER_HEADER.len()
    );
    assert_eq!(reader.records().count(), 4);
}

fn row(subject: &str, method: SegmentationMethod, m_pos: f64, d_zm: f64) -> FeatureRow {
    FeatureRow {
        subject: subject.into(),
        condition: "all".into(),
        method,
        median_ibi_s: 1.0,
        n_cycles: 50,
        markers: Some(MarkerSet {
            m_pos,
            f_pos: m_pos + 0.2,
            d_pos: m_pos + 0.6,
            z_pos: m_pos - d_zm,
            amplitude: 1.0,
            d_zm,
        }),
        max_slope_s: Some(m_pos + 0.1),
        deviant: false,
        flag: None,
    }
}

fn marker_table(dir: &Path, pairs: &[(&str, f64, f64)]) {
    let rows: Vec<FeatureRow> = pairs
        .iter()
        .flat_map(|&(s, d, dzm)| {
            [
                row(s, SegmentationMethod::EcgBased, d, 0.0),
                row(s, SegmentationMethod::PpgBlind, 0.3, dzm),
            ]
        })
        .collect();
    io::write_json(&dir.join("markers.json"), &rows).unwrap();
}

#[test]
fn two_subjects_on_a_line_predict_exactly() {
    let d = tempfile::tempdir().unwrap();
    marker_table(
        d.path(),
        &[
            ("a", 0.12 + 0.9 * 0.01, 0.01),
            ("b", 0.12 - 0.9 * 0.03, -0.03),
        ],
    );
    ok(run_in(d.path(), &["predict", "markers.json", "--out", "o"]));
    let r = json(&d.path().join("o/predict/report.json"));
    assert_eq!(r["model"], "linear");
    assert!((r["k1_s"].as_f64().unwrap() - 0.12).abs() < 1e-12);
    assert!((r["k2"].as_f64().unwrap() - 0.9).abs() < 1e-9);
    for e in r["errors_s"].as_array().unwrap() {
        assert!(e.as_f64().unwrap().abs() < 1e-12);
    }
    assert!(d.path().join("o/predict/cdf_model.csv").is_file());
    assert!(d.path().join("o/predict/cdf_baseline.csv").is_file());
}

#[test]
fn constant_d_zm_falls_back_to_the_baseline() {
    let d = tempfile::tempdir().unwrap();
    marker_table(
        d.path(),
        &[("a", 0.10, 0.02), ("b", 0.14, 0.02), ("c", 0.12, 0.02)],
    );
    let out = ok(run_in(d.path(), &["predict", ".", "--out", "o"]));
    assert!(String::from_utf8_lossy(&out.stderr).contains("warning"));
    let r = json(&d.path().join("o/predict/report.json"));
    assert_eq!(r["model"], "constant");
    assert_eq!(r["k2"].as_f64().unwrap(), 0.0);
    assert_eq!(r["sigma_s"], r["baseline"]["sigma_s"]);
    assert!(!r["warnings"].as_array().unwrap().is_empty());
}

#[test]
fn one_subject_cannot_be_fitted() {
    let d = tempfile::tempdir().unwrap();
    marker_table(d.path(), &[("a", 0.1, 0.0)]);
    assert_eq!(
        code(&run_in(
            d.path(),
            &["predict", "markers.json", "--out", "o"]
        )),
        3
    );
}

#[test]
fn compare_and_leave_one_out() {
    let d = tempfile::tempdir().unwrap();
    let pairs: Vec<(String, f64, f64)> = (0..8)
        .map(|i| {
            let dzm = -0.04 + 0.01 * i as f64;
            (
                format!("s{i}"),
                0.12 + 0.9 * dzm + 0.003 * if i % 2 == 0 { 1.0 } else { -1.0 },
                dzm,
            )
        })
        .collect();
    let refs: Vec<(&str, f64, f64)> = pairs.iter().map(|(s, a, b)| (s.as_str(), *a, *b)).collect();
    marker_table(d.path(), &refs);
    ok(run_in(
        d.path(),
        &[
            "predict",
            "markers.json",
            "--leave-one-out",
            "--compare",
            "--out",
            "o",
        ],
    ));
    let r = json(&d.path().join("o/predict/report.json"));
    assert_eq!(r["evaluation"], "leave_one_out");
    assert_eq!(r["n"], 8);
    let sets = json(&d.path().join("o/predict/feature_sets.json"));
    assert!(sets.as_array().unwrap().len() >= 2);
}

#[test]
fn ibi_command_writes_the_split() {
    let d = tempfile::tempdir().unwrap();
    small_cohort(d.path());
    ok(run_in(d.path(), &["ibi", "cohort", "--out", "o"]));
    let r = json(&d.path().join("o/ibi/report.json"));
    assert_eq!(r["assignments"].as_array().unwrap().len(), 4);
    let mut reader = csv::Reader::from_path(d.path().join("o/ibi/changes.csv")).unwrap();
    assert_eq!(
        reader.headers().unwrap().len(),
        ppgproto::pipeline::IBI_HEADER.len()
    );
    assert_eq!(reader.records().count(), 4);
}

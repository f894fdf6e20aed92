//! ECG-blind prediction of the R-peak position within the PPG cycle.
//!
//! The R-peak to M distance `d` (from the ECG-based prototype) is modelled
//! as `d = K1 + K2 · d_ZM + e`, where `d_ZM` is the Z_H to M distance of the
//! ECG-blind prototype. The constant-only baseline predicts the cohort mean
//! `μ_d`.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math::sqrt;
use crate::stats::{self, quantile_sorted};

/// Name of the Z_H to M distance feature.
pub const D_ZM: &str = "d_zm";

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PredictorSample {
    pub subject: String,
    #[cfg_attr(feature = "serde", serde(rename = "d_s"))]
    pub d: f64,
    #[cfg_attr(feature = "serde", serde(rename = "d_zm_s"))]
    pub d_zm: f64,
    /// Additional candidate features (e.g. `f_minus_m`, `d_minus_f`,
    /// `max_slope`), seconds.
    #[cfg_attr(feature = "serde", serde(default))]
    pub extras: BTreeMap<String, f64>,
}

impl PredictorSample {
    pub fn new(subject: impl Into<String>, d: f64, d_zm: f64) -> Self {
        Self {
            subject: subject.into(),
            d,
            d_zm,
            extras: BTreeMap::new(),
        }
    }

    pub fn feature(&self, name: &str) -> Option<f64> {
        if name == D_ZM {
            Some(self.d_zm)
        } else {
            self.extras.get(name).copied()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LinearPredictor {
    #[cfg_attr(feature = "serde", serde(rename = "k1_s"))]
    pub k1: f64,
    pub k2: f64,
    pub training_n: usize,
}

impl LinearPredictor {
    pub fn predict(&self, d_zm: f64) -> f64 {
        self.k1 + self.k2 * d_zm
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Predictor {
    Linear(LinearPredictor),
    /// Predicts a constant (the training mean of `d`).
    Constant {
        mu_d: f64,
    },
}

impl Predictor {
    pub fn baseline(samples: &[PredictorSample]) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::insufficient("baseline needs at least one sample"));
        }
        let d: Vec<f64> = samples.iter().map(|s| s.d).collect();
        Ok(Predictor::Constant {
            mu_d: stats::mean(&d),
        })
    }

    pub fn predict(&self, sample: &PredictorSample) -> f64 {
        match self {
            Predictor::Linear(p) => p.predict(sample.d_zm),
            Predictor::Constant { mu_d } => *mu_d,
        }
    }
}

/// Closed-form OLS fit of `d` on `d_zm`.
pub fn fit_predictor(samples: &[PredictorSample]) -> Result<LinearPredictor> {
    if samples.len() < 2 {
        return Err(Error::insufficient(
            "the linear predictor needs at least two samples",
        ));
    }
    let x: Vec<f64> = samples.iter().map(|s| s.d_zm).collect();
    let y: Vec<f64> = samples.iter().map(|s| s.d).collect();
    let (mx, my) = (stats::mean(&x), stats::mean(&y));
    let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
    let sxy: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
    if sxx == 0.0 || x.iter().all(|v| *v == x[0]) {
        return Err(Error::RankDeficient("all d_zm values are identical".into()));
    }
    let k2 = sxy / sxx;
    Ok(LinearPredictor {
        k1: my - k2 * mx,
        k2,
        training_n: samples.len(),
    })
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EvaluationReport {
    /// `e = d - d̂` per sample, seconds.
    pub errors: Vec<f64>,
    /// Population standard deviation of the errors.
    pub sigma: f64,
    /// Span between the 5th and 95th error percentiles.
    pub ci90_width: f64,
    /// Mean of `d` over the evaluated samples.
    pub mu_d: f64,
    /// Empirical CDF as `(error, fraction)` with fractions `i/n`.
    pub cdf: Vec<(f64, f64)>,
}

impl EvaluationReport {
    pub fn sum_squared_error(&self) -> f64 {
        self.errors.iter().map(|e| e * e).sum()
    }
}

fn report_from_errors(errors: Vec<f64>, mu_d: f64) -> EvaluationReport {
    let mut sorted = errors.clone();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let ci90_width = quantile_sorted(&sorted, 0.95) - quantile_sorted(&sorted, 0.05);
    let cdf = sorted
        .iter()
        .enumerate()
        .map(|(i, e)| (*e, (i + 1) as f64 / n))
        .collect();
    EvaluationReport {
        sigma: stats::population_std(&errors),
        errors,
        ci90_width,
        mu_d,
        cdf,
    }
}

pub fn evaluate(pred: &Predictor, samples: &[PredictorSample]) -> Result<EvaluationReport> {
    if samples.is_empty() {
        return Err(Error::insufficient("nothing to evaluate"));
    }
    let errors: Vec<f64> = samples.iter().map(|s| s.d - pred.predict(s)).collect();
    let d: Vec<f64> = samples.iter().map(|s| s.d).collect();
    Ok(report_from_errors(errors, stats::mean(&d)))
}

/// Held-out evaluation: each subject's error comes from a model fitted on
/// all other subjects. Not the in-sample protocol; offered for comparison.
pub fn evaluate_leave_one_out(samples: &[PredictorSample]) -> Result<EvaluationReport> {
    if samples.len() < 3 {
        return Err(Error::insufficient(
            "leave-one-out needs at least three samples",
        ));
    }
    let errors = (0..samples.len())
        .map(|i| {
            let rest: Vec<PredictorSample> = samples
                .iter()
                .enumerate()
                .filter(|(j, _)| *j != i)
                .map(|(_, s)| s.clone())
                .collect();
            let p = fit_predictor(&rest)?;
            Ok(samples[i].d - p.predict(samples[i].d_zm))
        })
        .collect::<Result<Vec<f64>>>()?;
    let d: Vec<f64> = samples.iter().map(|s| s.d).collect();
    Ok(report_from_errors(errors, stats::mean(&d)))
}

/// OLS with intercept on an arbitrary feature subset.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MultiFit {
    pub features: Vec<String>,
    pub intercept: f64,
    pub coefficients: Vec<f64>,
}

impl MultiFit {
    fn predict(&self, row: &[f64]) -> f64 {
        self.intercept
            + self
                .coefficients
                .iter()
                .zip(row)
                .map(|(c, x)| c * x)
                .sum::<f64>()
    }
}

/// Relative pivot size below which the centered design counts as singular.
const RANK_TOLERANCE: f64 = 1e-10;

fn design(samples: &[PredictorSample], features: &[String]) -> Result<Vec<Vec<f64>>> {
    samples
        .iter()
        .map(|s| {
            features
                .iter()
                .map(|f| {
                    s.feature(f).ok_or_else(|| {
                        Error::invalid(format!("sample {} lacks feature {f}", s.subject))
                    })
                })
                .collect()
        })
        .collect()
}

/// Normal-equation fit on centered, unit-scaled columns with Gaussian
/// elimination and partial pivoting.
pub fn fit_multi(samples: &[PredictorSample], features: &[String]) -> Result<MultiFit> {
    let n = samples.len();
    let p = features.len();
    if n < p + 1 {
        return Err(Error::insufficient("fewer samples than parameters"));
    }
    let x = design(samples, features)?;
    let y: Vec<f64> = samples.iter().map(|s| s.d).collect();
    let my = stats::mean(&y);
    if p == 0 {
        return Ok(MultiFit {
            features: Vec::new(),
            intercept: my,
            coefficients: Vec::new(),
        });
    }
    let means: Vec<f64> = (0..p)
        .map(|j| x.iter().map(|r| r[j]).sum::<f64>() / n as f64)
        .collect();
    let scales: Vec<f64> = (0..p)
        .map(|j| {
            sqrt(
                x.iter()
                    .map(|r| (r[j] - means[j]) * (r[j] - means[j]))
                    .sum::<f64>(),
            )
        })
        .collect();
    if let Some(j) = scales.iter().position(|s| !(*s > 0.0)) {
        return Err(Error::RankDeficient(format!(
            "feature {} is constant",
            features[j]
        )));
    }
    let z = |i: usize, j: usize| (x[i][j] - means[j]) / scales[j];
    // augmented [ZᵀZ | Zᵀy]
    let mut a = vec![vec![0.0; p + 1]; p];
    for (r, row) in a.iter_mut().enumerate() {
        for (c, cell) in row.iter_mut().take(p).enumerate() {
            *cell = (0..n).map(|i| z(i, r) * z(i, c)).sum();
        }
        row[p] = (0..n).map(|i| z(i, r) * (y[i] - my)).sum();
    }
    for col in 0..p {
        let pivot = (col..p)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap_or(col);
        if a[pivot][col].abs() < RANK_TOLERANCE {
            return Err(Error::RankDeficient(format!(
                "features {features:?} are linearly dependent"
            )));
        }
        a.swap(col, pivot);
        let pivot_row = a[col].clone();
        for (r, row) in a.iter_mut().enumerate() {
            if r != col {
                let factor = row[col] / pivot_row[col];
                for (cell, v) in row[col..].iter_mut().zip(&pivot_row[col..]) {
                    *cell -= factor * v;
                }
            }
        }
    }
    let coefficients: Vec<f64> = (0..p).map(|j| a[j][p] / a[j][j] / scales[j]).collect();
    let intercept = my
        - coefficients
            .iter()
            .zip(&means)
            .map(|(c, m)| c * m)
            .sum::<f64>();
    Ok(MultiFit {
        features: features.to_vec(),
        intercept,
        coefficients,
    })
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SubsetOutcome {
    pub features: Vec<String>,
    pub fit: Option<MultiFit>,
    pub report: Option<EvaluationReport>,
    /// Why the subset was skipped, if it was.
    pub diagnostic: Option<String>,
}

/// In-sample OLS and evaluation for each feature subset. Descriptive only:
/// no subset is selected.
pub fn compare_feature_sets(
    samples: &[PredictorSample],
    subsets: &[Vec<String>],
) -> Result<Vec<SubsetOutcome>> {
    if samples.is_empty() {
        return Err(Error::insufficient("nothing to evaluate"));
    }
    let d: Vec<f64> = samples.iter().map(|s| s.d).collect();
    let mu_d = stats::mean(&d);
    subsets
        .iter()
        .map(|features| match fit_multi(samples, features) {
            Ok(fit) => {
                let x = design(samples, features)?;
                let errors = samples
                    .iter()
                    .zip(&x)
                    .map(|(s, row)| s.d - fit.predict(row))
                    .collect();
                Ok(SubsetOutcome {
                    features: features.clone(),
                    report: Some(report_from_errors(errors, mu_d)),
                    fit: Some(fit),
                    diagnostic: None,
                })
            }
            Err(e @ (Error::RankDeficient(_) | Error::InsufficientEvents(_))) => {
                Ok(SubsetOutcome {
                    features: features.clone(),
                    fit: None,
                    report: None,
                    diagnostic: Some(format!("{e}")),
                })
            }
            Err(e) => Err(e),
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;
    use proptest::prelude::*;

    fn line(points: &[(f64, f64)]) -> Vec<PredictorSample> {
        points
            .iter()
            .enumerate()
            .map(|(i, (x, y))| PredictorSample::new(format!("s{i}"), *y, *x))
            .collect()
    }

    #[test]
    fn exact_line() {
        let pts: Vec<(f64, f64)> = (0..10)
            .map(|i| {
                let x = 0.01 * i as f64;
                (x, 0.12 + 0.9 * x)
            })
            .collect();
        let p = fit_predictor(&line(&pts)).unwrap();
        assert!((p.k1 - 0.12).abs() < 1e-9 && (p.k2 - 0.9).abs() < 1e-9);
        let p = fit_predictor(&line(&[(0.0, 0.1), (0.1, 0.2)])).unwrap();
        assert!((p.k1 - 0.1).abs() < 1e-12 && (p.k2 - 1.0).abs() < 1e-12);
        let r = evaluate(&Predictor::Linear(p), &line(&[(0.0, 0.1), (0.1, 0.2)])).unwrap();
        assert!(r.sigma < 1e-12 && r.ci90_width < 1e-12);
    }

    #[test]
    fn identical_features_are_rank_deficient() {
        let s = line(&[(0.05, 0.1), (0.05, 0.2), (0.05, 0.3)]);
        assert!(matches!(fit_predictor(&s), Err(Error::RankDeficient(_))));
        assert!(matches!(
            fit_predictor(&s[..1]),
            Err(Error::InsufficientEvents(_))
        ));
    }

    #[test]
    fn sigma_is_population_std() {
        let s = line(&[(0.0, -0.010), (0.0, 0.0), (0.0, 0.010)]);
        let r = evaluate(&Predictor::Constant { mu_d: 0.0 }, &s).unwrap();
        assert!((r.sigma - libm::sqrt(200.0 / 3.0) * 1e-3).abs() < 1e-12);
        assert!(evaluate(&Predictor::Constant { mu_d: 0.0 }, &[]).is_err());
    }

    #[test]
    fn empty_subset_equals_baseline() {
        let s = line(&[(0.0, 0.1), (0.02, 0.15), (0.05, 0.12), (0.07, 0.2)]);
        let out = compare_feature_sets(&s, &[Vec::new()]).unwrap();
        let base = evaluate(&Predictor::baseline(&s).unwrap(), &s).unwrap();
        let r = out[0].report.as_ref().unwrap();
        for (a, b) in r.errors.iter().zip(&base.errors) {
            assert!((a - b).abs() < 1e-15);
        }
        assert!((r.sigma - base.sigma).abs() < 1e-15);
    }

    #[test]
    fn duplicated_feature_is_flagged() {
        let mut s = line(&[(0.0, 0.1), (0.02, 0.15), (0.05, 0.12), (0.07, 0.2)]);
        for x in &mut s {
            let v = x.d_zm;
            x.extras.insert("copy".to_string(), v);
        }
        let out = compare_feature_sets(&s, &[vec![D_ZM.to_string(), "copy".to_string()]]).unwrap();
        assert!(out[0].report.is_none());
        assert!(out[0].diagnostic.as_ref().unwrap().contains("rank"));
    }

    #[test]
    fn single_feature_multi_fit_matches_closed_form() {
        let s = line(&[
            (0.0, 0.1),
            (0.02, 0.15),
            (0.05, 0.12),
            (0.07, 0.2),
            (0.1, 0.21),
        ]);
        let a = fit_predictor(&s).unwrap();
        let b = fit_multi(&s, &[D_ZM.to_string()]).unwrap();
        assert!((a.k1 - b.intercept).abs() < 1e-12 && (a.k2 - b.coefficients[0]).abs() < 1e-12);
    }

    fn cloud() -> impl Strategy<Value = Vec<(f64, f64)>> {
        prop::collection::vec((0.0f64..0.2, 0.0f64..0.4), 3..40)
            .prop_filter("needs spread in x", |v| {
                v.iter().any(|p| (p.0 - v[0].0).abs() > 1e-3)
            })
    }

    proptest! {
        #[test]
        fn residuals_sum_to_zero(pts in cloud()) {
            let s = line(&pts);
            let p = fit_predictor(&s).unwrap();
            let r = evaluate(&Predictor::Linear(p), &s).unwrap();
            let rms = libm::sqrt(s.iter().map(|x| x.d * x.d).sum::<f64>() / s.len() as f64);
            prop_assert!(r.errors.iter().sum::<f64>().abs() <= 1e-9 * s.len() as f64 * rms.max(1e-12));
        }

        #[test]
        fn offset_moves_only_the_intercept(pts in cloud(), c in -1.0f64..1.0) {
            let a = fit_predictor(&line(&pts)).unwrap();
            let moved: Vec<(f64, f64)> = pts.iter().map(|(x, y)| (*x, y + c)).collect();
            let b = fit_predictor(&line(&moved)).unwrap();
            prop_assert!((b.k1 - a.k1 - c).abs() < 1e-9);
            prop_assert!((b.k2 - a.k2).abs() < 1e-9);
        }

        #[test]
        fn fit_never_loses_to_baseline(pts in cloud()) {
            let s = line(&pts);
            let fitted = evaluate(&Predictor::Linear(fit_predictor(&s).unwrap()), &s).unwrap();
            let base = evaluate(&Predictor::baseline(&s).unwrap(), &s).unwrap();
            prop_assert!(fitted.sum_squared_error() <= base.sum_squared_error() * (1.0 + 1e-12) + 1e-18);
        }

        #[test]
        fn cdf_is_monotone(pts in cloud()) {
            let s = line(&pts);
            let r = evaluate(&Predictor::baseline(&s).unwrap(), &s).unwrap();
            let n = s.len() as f64;
            prop_assert!(r.cdf.windows(2).all(|w| w[1].0 >= w[0].0 && w[1].1 > w[0].1));
            prop_assert!((r.cdf[0].1 - 1.0 / n).abs() < 1e-15);
            prop_assert_eq!(r.cdf.last().unwrap().1, 1.0);
        }
    }
}

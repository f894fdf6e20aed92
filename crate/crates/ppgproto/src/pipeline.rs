//! Orchestration shared by the command-line front end and the tests:
//! segmentation through prototypes, energy curves, marker tables, the
//! predictor report and the IBI-bin analysis.

use std::collections::BTreeMap;
use std::path::Path;

use ppgproto_core::features::{extract_markers, max_slope_position};
use ppgproto_core::harmonic::{
    energy_by_ibi_bins, outer_ibi_groups, unmodeled_energy_curve, IbiGroup,
};
use ppgproto_core::ibi::{feature_changes, FeatureChangeReport, SubjectBins};
use ppgproto_core::predictor::{
    compare_feature_sets, evaluate, evaluate_leave_one_out, fit_predictor, EvaluationReport,
    Predictor, PredictorSample, SubsetOutcome, D_ZM,
};
use ppgproto_core::prototype::{
    build_prototype, detect_deviant, DeviantVerdict, DEFAULT_BROAD_PEAK_RATIO,
};
use ppgproto_core::segmentation::{
    bin_by_ibi, label_cycles, partition_by_label, reject_outlier_cycles, segment_by_ecg,
    segment_by_ppg, CycleSet, Epoch, SegmentationMethod, DEFAULT_REJECT_HIGH, DEFAULT_REJECT_LOW,
};
use ppgproto_core::stats::BoxplotSummary;
use ppgproto_core::{EventTrain, MarkerSet, Prototype, UniformSeries, DEFAULT_GRID_SIZE};
use ppgproto_synth::SubjectData;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};
use crate::io;

/// Condition name of the prototype over all kept cycles.
pub const ALL: &str = "all";

pub const F_MINUS_M: &str = "f_minus_m";
pub const D_MINUS_F: &str = "d_minus_f";
pub const MAX_SLOPE: &str = "max_slope";

#[derive(Debug, Clone)]
pub struct SubjectBundle {
    pub id: String,
    pub ppg: UniformSeries,
    pub rpeaks: Option<EventTrain>,
    pub epochs: Vec<Epoch>,
}

impl SubjectBundle {
    pub fn new(
        id: impl Into<String>,
        ppg: UniformSeries,
        rpeaks: Option<EventTrain>,
        epochs: Vec<Epoch>,
    ) -> Result<Self> {
        let id = id.into();
        if let Some(r) = &rpeaks {
            let (first, last) = (r.times()[0], r.times()[r.len() - 1]);
            if last < ppg.start_time() || first > ppg.end_time() {
                return Err(CliError::Usage(format!(
                    "{id}: R-peaks do not overlap the PPG record"
                )));
            }
        }
        Ok(Self {
            id,
            ppg,
            rpeaks,
            epochs,
        })
    }

    /// Reads `ppg.csv` plus the optional `rpeaks.csv` and `epochs.csv`;
    /// the directory name is the subject id.
    pub fn load(dir: &Path) -> Result<Self> {
        let id = dir
            .file_name()
            .and_then(|n| n.to_str())
            .ok_or_else(|| CliError::io(dir, "cannot derive a subject id"))?;
        let ppg = io::read_ppg(&dir.join(io::PPG_FILE))?;
        let rpeaks_path = dir.join(io::RPEAKS_FILE);
        let rpeaks = rpeaks_path
            .is_file()
            .then(|| io::read_rpeaks(&rpeaks_path))
            .transpose()?;
        let epochs_path = dir.join(io::EPOCHS_FILE);
        let epochs = if epochs_path.is_file() {
            io::read_epochs(&epochs_path)?
        } else {
            Vec::new()
        };
        Self::new(id, ppg, rpeaks, epochs)
    }

    pub fn from_synth(s: &SubjectData) -> Self {
        Self {
            id: s.spec.id.clone(),
            ppg: s.ppg.clone(),
            rpeaks: Some(s.rpeaks.clone()),
            epochs: s.spec.epochs.clone(),
        }
    }
}

pub fn method_tag(m: SegmentationMethod) -> &'static str {
    match m {
        SegmentationMethod::EcgBased => "ecg",
        SegmentationMethod::PpgBlind => "blind",
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PrototypeOptions {
    pub grid_size: usize,
    pub reject_low: f64,
    pub reject_high: f64,
    /// Split into the D/N/I IBI bins.
    pub ibi_bins: bool,
    /// Each label yields a with/without pair.
    pub labels: Vec<String>,
}

impl Default for PrototypeOptions {
    fn default() -> Self {
        Self {
            grid_size: DEFAULT_GRID_SIZE,
            reject_low: DEFAULT_REJECT_LOW,
            reject_high: DEFAULT_REJECT_HIGH,
            ibi_bins: false,
            labels: Vec::new(),
        }
    }
}

/// Prototype file contents.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrototypeRecord {
    pub subject: String,
    pub condition: String,
    #[serde(flatten)]
    pub prototype: Prototype,
    /// ECG-based prototypes only.
    #[serde(default)]
    pub deviant: Option<DeviantVerdict>,
}

impl PrototypeRecord {
    pub fn file_stem(&self) -> String {
        format!(
            "prototype_{}_{}",
            method_tag(self.prototype.method),
            self.condition
        )
    }

    pub fn is_deviant(&self) -> bool {
        self.deviant.is_some_and(|v| v.is_deviant())
    }
}

#[derive(Debug, Clone)]
pub struct SubjectPrototypes {
    pub subject: String,
    pub method: SegmentationMethod,
    pub segmented: usize,
    pub discarded: usize,
    pub records: Vec<PrototypeRecord>,
}

pub fn segment(
    bundle: &SubjectBundle,
    method: SegmentationMethod,
    grid_size: usize,
) -> Result<CycleSet> {
    let cs = match method {
        SegmentationMethod::EcgBased => {
            let rpeaks = bundle.rpeaks.as_ref().ok_or_else(|| {
                CliError::Usage(format!(
                    "{}: ECG-based segmentation needs R-peaks",
                    bundle.id
                ))
            })?;
            segment_by_ecg(&bundle.ppg, rpeaks, grid_size)?
        }
        SegmentationMethod::PpgBlind => segment_by_ppg(&bundle.ppg, grid_size)?,
    };
    Ok(cs)
}

/// Segmentation, rejection, optional label partition and IBI binning, then
/// one prototype per resulting condition.
pub fn build_prototypes(
    bundle: &SubjectBundle,
    method: SegmentationMethod,
    opts: &PrototypeOptions,
) -> Result<SubjectPrototypes> {
    let ctx = |e: CliError| e.context(&bundle.id);
    let cs = segment(bundle, method, opts.grid_size).map_err(ctx)?;
    let rejection =
        reject_outlier_cycles(&cs, opts.reject_low, opts.reject_high).map_err(|e| ctx(e.into()))?;
    let labeled = label_cycles(&rejection.kept, &bundle.epochs);

    let mut groups: Vec<(String, CycleSet)> = Vec::new();
    if opts.labels.is_empty() {
        groups.push((ALL.to_string(), labeled));
    } else {
        for label in &opts.labels {
            let (with, without) = partition_by_label(&labeled, label);
            groups.push((label.clone(), with));
            groups.push((format!("not_{label}"), without));
        }
    }
    if opts.ibi_bins {
        groups = groups
            .into_iter()
            .map(|(name, cs)| {
                let bins = bin_by_ibi(&cs).map_err(|e| ctx(CliError::from(e).context(&name)))?;
                let prefix = if name == ALL {
                    String::new()
                } else {
                    format!("{name}.")
                };
                Ok(vec![
                    (format!("{prefix}ibi_d"), bins.low),
                    (format!("{prefix}ibi_n"), bins.mid),
                    (format!("{prefix}ibi_i"), bins.high),
                ])
            })
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .flatten()
            .collect();
    }

    let records = groups
        .into_iter()
        .map(|(condition, cs)| {
            let prototype = build_prototype(&cs, method)
                .map_err(|e| ctx(CliError::from(e).context(&condition)))?;
            let deviant = match method {
                SegmentationMethod::EcgBased => {
                    detect_deviant(&prototype, DEFAULT_BROAD_PEAK_RATIO).ok()
                }
                SegmentationMethod::PpgBlind => None,
            };
            Ok(PrototypeRecord {
                subject: bundle.id.clone(),
                condition,
                prototype,
                deviant,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SubjectPrototypes {
        subject: bundle.id.clone(),
        method,
        segmented: cs.len(),
        discarded: rejection.discarded,
        records,
    })
}

/// Writes `<stem>.json` and the `k,median,q1,q3` plot table `<stem>.csv`.
pub fn write_prototype(dir: &Path, rec: &PrototypeRecord) -> Result<()> {
    let stem = rec.file_stem();
    io::write_json(&dir.join(format!("{stem}.json")), rec)?;
    let p = &rec.prototype;
    io::write_csv(
        &dir.join(format!("{stem}.csv")),
        &["k", "median", "q1", "q3"],
        (0..p.waveform.len()).map(|k| {
            let at = |v: &[f64]| v.get(k).map_or_else(String::new, |x| io::num(*x));
            [k.to_string(), io::num(p.waveform[k]), at(&p.q1), at(&p.q3)]
        }),
    )
}

pub fn is_prototype_file(name: &str) -> bool {
    name.starts_with("prototype_") && name.ends_with(".json")
}

#[derive(Debug, Clone, Default)]
pub struct RecordFilter {
    pub method: Option<SegmentationMethod>,
    pub condition: Option<String>,
}

impl RecordFilter {
    pub fn keeps(&self, r: &PrototypeRecord) -> bool {
        self.method.is_none_or(|m| r.prototype.method == m)
            && self.condition.as_ref().is_none_or(|c| &r.condition == c)
    }
}

pub fn load_prototypes(
    inputs: &[std::path::PathBuf],
    filter: &RecordFilter,
) -> Result<Vec<PrototypeRecord>> {
    let files = io::collect_files(inputs, &is_prototype_file)?;
    let mut out = Vec::new();
    for f in files {
        let rec: PrototypeRecord = io::read_json(&f)?;
        if filter.keeps(&rec) {
            out.push(rec);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyCurve {
    pub subject: String,
    pub condition: String,
    pub method: SegmentationMethod,
    pub median_ibi_s: f64,
    /// Index is the model order M.
    pub unmodeled_db: Vec<f64>,
}

pub fn energy_curves(records: &[PrototypeRecord], max_order: usize) -> Result<Vec<EnergyCurve>> {
    records
        .iter()
        .map(|r| {
            let curve = unmodeled_energy_curve(&r.prototype.waveform, max_order).map_err(|e| {
                CliError::from(e).context(&format!("{} {}", r.subject, r.condition))
            })?;
            Ok(EnergyCurve {
                subject: r.subject.clone(),
                condition: r.condition.clone(),
                method: r.prototype.method,
                median_ibi_s: r.prototype.median_ibi,
                unmodeled_db: curve,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OrderSummary {
    pub order: usize,
    #[serde(flatten)]
    pub summary: BoxplotSummary,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupOrderSummary {
    pub order: usize,
    pub low_ibi: BoxplotSummary,
    pub high_ibi: BoxplotSummary,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IbiSplitSummary {
    /// Prototypes per outer group.
    pub outer: usize,
    pub low_ibi: Vec<String>,
    pub high_ibi: Vec<String>,
    pub orders: Vec<GroupOrderSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HarmonicsSummary {
    pub max_order: usize,
    pub n_prototypes: usize,
    /// Whiskers reach the most extreme values within 1.5 IQR of the
    /// quartiles.
    pub whiskers: &'static str,
    pub orders: Vec<OrderSummary>,
    pub ibi_split: Option<IbiSplitSummary>,
}

/// Boxplot summary per order across prototypes; with `outer`, also
/// split into the `outer` lowest- and highest-median-IBI prototypes.
pub fn summarize_harmonics(
    records: &[PrototypeRecord],
    curves: &[EnergyCurve],
    max_order: usize,
    outer: Option<usize>,
) -> Result<HarmonicsSummary> {
    if curves.is_empty() {
        return Err(CliError::Insufficient("no prototypes to summarize".into()));
    }
    let orders = (0..=max_order)
        .map(|m| {
            let values: Vec<f64> = curves.iter().map(|c| c.unmodeled_db[m]).collect();
            Ok(OrderSummary {
                order: m,
                summary: BoxplotSummary::from_values(&values)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let ibi_split = outer
        .map(|outer| {
            let ibis: Vec<f64> = records.iter().map(|r| r.prototype.median_ibi).collect();
            let groups = outer_ibi_groups(&ibis, outer)?;
            let tagged: Vec<(&Prototype, IbiGroup)> = records
                .iter()
                .zip(&groups)
                .filter_map(|(r, g)| g.map(|g| (&r.prototype, g)))
                .collect();
            let names = |want: IbiGroup| -> Vec<String> {
                records
                    .iter()
                    .zip(&groups)
                    .filter(|(_, g)| **g == Some(want))
                    .map(|(r, _)| format!("{}:{}", r.subject, r.condition))
                    .collect()
            };
            let all_orders: Vec<usize> = (0..=max_order).collect();
            let grouped = energy_by_ibi_bins(&tagged, &all_orders)?;
            let orders = all_orders
                .iter()
                .enumerate()
                .map(|(i, &order)| {
                    Ok(GroupOrderSummary {
                        order,
                        low_ibi: BoxplotSummary::from_values(&grouped.low[i])?,
                        high_ibi: BoxplotSummary::from_values(&grouped.high[i])?,
                    })
                })
                .collect::<Result<Vec<_>, ppgproto_core::Error>>()?;
            Ok::<_, ppgproto_core::Error>(IbiSplitSummary {
                outer,
                low_ibi: names(IbiGroup::LowIbi),
                high_ibi: names(IbiGroup::HighIbi),
                orders,
            })
        })
        .transpose()?;
    Ok(HarmonicsSummary {
        max_order,
        n_prototypes: curves.len(),
        whiskers: "1.5*IQR",
        orders,
        ibi_split,
    })
}

/// One row of the marker table. Undeterminable markers leave `markers`
/// empty and set `flag`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureRow {
    pub subject: String,
    pub condition: String,
    pub method: SegmentationMethod,
    pub median_ibi_s: f64,
    pub n_cycles: usize,
    pub markers: Option<MarkerSet>,
    /// Position of the steepest descent of the smoothed prototype.
    pub max_slope_s: Option<f64>,
    pub deviant: bool,
    pub flag: Option<String>,
}

pub fn feature_row(rec: &PrototypeRecord) -> FeatureRow {
    let p = &rec.prototype;
    let (markers, flag) = match extract_markers(p) {
        Ok(m) => (Some(m), None),
        Err(e) => (None, Some(e.to_string())),
    };
    FeatureRow {
        subject: rec.subject.clone(),
        condition: rec.condition.clone(),
        method: p.method,
        median_ibi_s: p.median_ibi,
        n_cycles: p.n_cycles,
        markers,
        max_slope_s: max_slope_position(p).ok(),
        deviant: rec.is_deviant(),
        flag,
    }
}

pub const SCATTER_HEADER: [&str; 13] = [
    "subject",
    "method",
    "condition",
    "ibi",
    "m_pos",
    "f_pos",
    "d_pos",
    "z_pos",
    "d_zm",
    "amplitude",
    "max_slope",
    "deviant",
    "flag",
];

pub fn scatter_cells(r: &FeatureRow) -> Vec<String> {
    let opt = |v: Option<f64>| v.map_or_else(String::new, io::num);
    let m = r.markers.as_ref();
    vec![
        r.subject.clone(),
        method_tag(r.method).to_string(),
        r.condition.clone(),
        io::num(r.median_ibi_s),
        opt(m.map(|m| m.m_pos)),
        opt(m.map(|m| m.f_pos)),
        opt(m.map(|m| m.d_pos)),
        opt(m.map(|m| m.z_pos)),
        opt(m.map(|m| m.d_zm)),
        opt(m.map(|m| m.amplitude)),
        opt(r.max_slope_s),
        r.deviant.to_string(),
        r.flag.clone().unwrap_or_default(),
    ]
}

/// `d` from the ECG-based row, `d_zm` from the ECG-blind row; extra
/// candidate features come from the ECG-based markers.
pub fn predictor_sample(ecg: &FeatureRow, blind: &FeatureRow) -> Option<PredictorSample> {
    let (e, b) = (ecg.markers?, blind.markers?);
    let mut s = PredictorSample::new(ecg.subject.clone(), e.m_pos, b.d_zm);
    s.extras.insert(F_MINUS_M.into(), e.f_pos - e.m_pos);
    s.extras.insert(D_MINUS_F.into(), e.d_pos - e.f_pos);
    if let Some(v) = ecg.max_slope_s {
        s.extras.insert(MAX_SLOPE.into(), v);
    }
    Some(s)
}

/// Pairs rows of `condition` by subject. Subjects lacking either method
/// or with undeterminable markers are reported and skipped.
pub fn pair_rows(rows: &[FeatureRow], condition: &str) -> (Vec<PredictorSample>, Vec<String>) {
    let mut by_subject: BTreeMap<&str, (Option<&FeatureRow>, Option<&FeatureRow>)> =
        BTreeMap::new();
    for r in rows.iter().filter(|r| r.condition == condition) {
        let slot = by_subject.entry(&r.subject).or_default();
        match r.method {
            SegmentationMethod::EcgBased => slot.0 = Some(r),
            SegmentationMethod::PpgBlind => slot.1 = Some(r),
        }
    }
    let mut samples = Vec::new();
    let mut warnings = Vec::new();
    for (subject, pair) in by_subject {
        match pair {
            (Some(e), Some(b)) => match predictor_sample(e, b) {
                Some(s) => samples.push(s),
                None => warnings.push(format!("{subject}: undeterminable markers, skipped")),
            },
            (None, _) => warnings.push(format!("{subject}: no ECG-based prototype, skipped")),
            (_, None) => warnings.push(format!("{subject}: no ECG-blind prototype, skipped")),
        }
    }
    (samples, warnings)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CurveReport {
    pub sigma_s: f64,
    pub ci90_s: f64,
    pub mu_d_s: f64,
    pub errors_s: Vec<f64>,
    pub cdf: Vec<(f64, f64)>,
}

impl From<&EvaluationReport> for CurveReport {
    fn from(r: &EvaluationReport) -> Self {
        Self {
            sigma_s: r.sigma,
            ci90_s: r.ci90_width,
            mu_d_s: r.mu_d,
            errors_s: r.errors.clone(),
            cdf: r.cdf.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PredictReport {
    /// `linear`, or `constant` after a rank-deficient fit.
    pub model: &'static str,
    pub k1_s: f64,
    pub k2: f64,
    pub n: usize,
    pub sigma_s: f64,
    pub ci90_s: f64,
    pub mu_d_s: f64,
    pub cdf: Vec<(f64, f64)>,
    pub errors_s: Vec<f64>,
    /// `in_sample` or `leave_one_out` (the latter is an extension).
    pub evaluation: &'static str,
    pub d_zm_spread_s: f64,
    pub conventions: BTreeMap<&'static str, &'static str>,
    pub baseline: CurveReport,
    pub samples: Vec<PredictorSample>,
    pub warnings: Vec<String>,
}

pub fn predict(
    samples: &[PredictorSample],
    leave_one_out: bool,
    mut warnings: Vec<String>,
) -> Result<PredictReport> {
    if samples.len() < 2 {
        return Err(CliError::Insufficient(format!(
            "the predictor needs at least two subjects with markers, found {}",
            samples.len()
        )));
    }
    let baseline = evaluate(&Predictor::baseline(samples)?, samples)?;
    let (model, k1, k2, report) = match fit_predictor(samples) {
        Ok(fit) => {
            let report = if leave_one_out {
                evaluate_leave_one_out(samples)?
            } else {
                evaluate(&Predictor::Linear(fit), samples)?
            };
            ("linear", fit.k1, fit.k2, report)
        }
        Err(ppgproto_core::Error::RankDeficient(msg)) => {
            warnings.push(format!(
                "rank-deficient fit ({msg}); reporting the constant baseline"
            ));
            ("constant", baseline.mu_d, 0.0, baseline.clone())
        }
        Err(e) => return Err(e.into()),
    };
    let (lo, hi) = samples
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), s| {
            (lo.min(s.d_zm), hi.max(s.d_zm))
        });
    let conventions = BTreeMap::from([
        ("error", "e = d - d_hat, seconds"),
        ("sigma", "population standard deviation (divide by n)"),
        (
            "ci90",
            "95th minus 5th percentile of e, linear interpolation between order statistics",
        ),
        ("cdf", "sorted e with fractions i/n"),
        ("baseline", "d_hat = mean of d, evaluated in sample"),
    ]);
    Ok(PredictReport {
        model,
        k1_s: k1,
        k2,
        n: samples.len(),
        sigma_s: report.sigma,
        ci90_s: report.ci90_width,
        mu_d_s: report.mu_d,
        cdf: report.cdf.clone(),
        errors_s: report.errors.clone(),
        evaluation: if leave_one_out && model == "linear" {
            "leave_one_out"
        } else {
            "in_sample"
        },
        d_zm_spread_s: hi - lo,
        conventions,
        baseline: CurveReport::from(&baseline),
        samples: samples.to_vec(),
        warnings,
    })
}

/// Subsets for the descriptive feature comparison.
pub fn default_feature_subsets() -> Vec<Vec<String>> {
    let s = |v: &[&str]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>();
    vec![
        s(&[]),
        s(&[D_ZM]),
        s(&[D_ZM, F_MINUS_M]),
        s(&[D_ZM, D_MINUS_F]),
        s(&[D_ZM, MAX_SLOPE]),
        s(&[MAX_SLOPE]),
    ]
}

pub fn compare_subsets(samples: &[PredictorSample]) -> Result<Vec<SubsetOutcome>> {
    Ok(compare_feature_sets(samples, &default_feature_subsets())?)
}

/// D/N/I prototypes of one subject from ECG-based segmentation.
pub fn subject_bins(bundle: &SubjectBundle, opts: &PrototypeOptions) -> Result<SubjectBins> {
    let opts = PrototypeOptions {
        ibi_bins: true,
        labels: Vec::new(),
        ..opts.clone()
    };
    let mut recs = build_prototypes(bundle, SegmentationMethod::EcgBased, &opts)?
        .records
        .into_iter();
    let mut next = || {
        recs.next()
            .map(|r| r.prototype)
            .ok_or_else(|| CliError::Insufficient("missing IBI bin".into()))
    };
    Ok(SubjectBins {
        subject: bundle.id.clone(),
        decreased: next()?,
        normal: next()?,
        increased: next()?,
    })
}

pub fn ibi_report(bins: &[SubjectBins]) -> Result<FeatureChangeReport> {
    Ok(feature_changes(bins)?)
}

pub const IBI_HEADER: [&str; 14] = [
    "subject",
    "d_class",
    "i_class",
    "r_d",
    "r_i",
    "small_spread",
    "dec_amplitude_db",
    "dec_m_shift_ms",
    "dec_f_shift_ms",
    "dec_d_shift_ms",
    "inc_amplitude_db",
    "inc_m_shift_ms",
    "inc_f_shift_ms",
    "inc_d_shift_ms",
];

pub fn ibi_rows(report: &FeatureChangeReport) -> Vec<Vec<String>> {
    report
        .assignments
        .iter()
        .zip(&report.subjects)
        .map(|(a, s)| {
            let mut row = vec![
                a.subject.clone(),
                a.d_class.as_str().to_string(),
                a.i_class.as_str().to_string(),
                io::num(a.r_d),
                io::num(a.r_i),
                s.small_spread.to_string(),
            ];
            for c in [&s.decrease, &s.increase] {
                row.extend([c.amplitude_db, c.m_shift_ms, c.f_shift_ms, c.d_shift_ms].map(io::num));
            }
            row
        })
        .collect()
}

/// Per-subject `ppg.csv`, `rpeaks.csv`, `epochs.csv` and `truth.json`.
pub fn write_subject(dir: &Path, s: &SubjectData) -> Result<()> {
    let sub = dir.join(&s.spec.id);
    io::write_ppg(&sub.join(io::PPG_FILE), &s.ppg)?;
    io::write_rpeaks(&sub.join(io::RPEAKS_FILE), &s.rpeaks)?;
    io::write_epochs(&sub.join(io::EPOCHS_FILE), &s.spec.epochs)?;
    io::write_json(&sub.join(io::TRUTH_FILE), &s.truth)
}

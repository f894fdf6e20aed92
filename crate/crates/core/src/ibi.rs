//! Intraperson IBI variation: per-subject D/N/I bin prototypes, the ratios
//! `R_D = T_D / T_N` and `R_I = T_I / T_N`, the cohort median split into
//! LD/SD and LI/SI, and the marker changes between bins.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::features::extract_markers;
use crate::math::log10;
use crate::prototype::Prototype;
use crate::stats::{self, BoxplotSummary};

/// Relative spread below which the outer bins count as barely different
/// from the central one.
pub const SMALL_SPREAD: f64 = 0.05;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct IbiTriple {
    pub subject: String,
    #[cfg_attr(feature = "serde", serde(rename = "t_d_s"))]
    pub t_d: f64,
    #[cfg_attr(feature = "serde", serde(rename = "t_n_s"))]
    pub t_n: f64,
    #[cfg_attr(feature = "serde", serde(rename = "t_i_s"))]
    pub t_i: f64,
}

impl IbiTriple {
    pub fn new(subject: impl Into<String>, t_d: f64, t_n: f64, t_i: f64) -> Result<Self> {
        if !(t_d > 0.0 && t_d <= t_n && t_n <= t_i && t_i.is_finite()) {
            return Err(Error::invalid(
                "IBI triple must satisfy 0 < T_D <= T_N <= T_I",
            ));
        }
        Ok(Self {
            subject: subject.into(),
            t_d,
            t_n,
            t_i,
        })
    }

    /// True when both outer bins are within 5% of the central one.
    pub fn small_spread(&self) -> bool {
        (self.t_n - self.t_d) / self.t_n < SMALL_SPREAD
            && (self.t_i - self.t_n) / self.t_n < SMALL_SPREAD
    }
}

pub fn compute_ratios(t: &IbiTriple) -> (f64, f64) {
    (t.t_d / t.t_n, t.t_i / t.t_n)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Category {
    /// Large decrease of IBI.
    LD,
    SD,
    /// Large increase of IBI.
    LI,
    SI,
}

impl Category {
    pub const ALL: [Category; 4] = [Category::LD, Category::SD, Category::LI, Category::SI];

    pub fn as_str(self) -> &'static str {
        match self {
            Category::LD => "LD",
            Category::SD => "SD",
            Category::LI => "LI",
            Category::SI => "SI",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CategoryAssignment {
    pub subject: String,
    pub r_d: f64,
    pub r_i: f64,
    pub d_class: Category,
    pub i_class: Category,
}

#[derive(Debug, Clone, PartialEq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CohortSplit {
    pub ld: Vec<String>,
    pub sd: Vec<String>,
    pub li: Vec<String>,
    pub si: Vec<String>,
}

/// Median split of `(subject, r_d, r_i)` rows.
///
/// LD holds `r_d` strictly below the median and LI `r_i` strictly above it;
/// the median itself (and ties) go to SD/SI.
pub fn split_cohort(rows: &[(String, f64, f64)]) -> Result<(Vec<CategoryAssignment>, CohortSplit)> {
    if rows.len() < 2 {
        return Err(Error::insufficient(
            "the cohort split needs at least two subjects",
        ));
    }
    let r_d: Vec<f64> = rows.iter().map(|r| r.1).collect();
    let r_i: Vec<f64> = rows.iter().map(|r| r.2).collect();
    let (med_d, med_i) = (stats::median(&r_d)?, stats::median(&r_i)?);
    let mut split = CohortSplit::default();
    let assignments = rows
        .iter()
        .map(|(subject, rd, ri)| {
            let d_class = if *rd < med_d {
                Category::LD
            } else {
                Category::SD
            };
            let i_class = if *ri > med_i {
                Category::LI
            } else {
                Category::SI
            };
            match d_class {
                Category::LD => split.ld.push(subject.clone()),
                _ => split.sd.push(subject.clone()),
            }
            match i_class {
                Category::LI => split.li.push(subject.clone()),
                _ => split.si.push(subject.clone()),
            }
            CategoryAssignment {
                subject: subject.clone(),
                r_d: *rd,
                r_i: *ri,
                d_class,
                i_class,
            }
        })
        .collect();
    Ok((assignments, split))
}

/// The three bin prototypes of one subject.
#[derive(Debug, Clone)]
pub struct SubjectBins {
    pub subject: String,
    pub decreased: Prototype,
    pub normal: Prototype,
    pub increased: Prototype,
}

/// Outer-bin minus N-bin change of each feature. Positions in ms.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FeatureChange {
    pub amplitude_db: f64,
    pub m_shift_ms: f64,
    pub f_shift_ms: f64,
    pub d_shift_ms: f64,
}

impl FeatureChange {
    pub const NAMES: [&'static str; 4] = ["amplitude_db", "m_shift_ms", "f_shift_ms", "d_shift_ms"];

    fn values(&self) -> [f64; 4] {
        [
            self.amplitude_db,
            self.m_shift_ms,
            self.f_shift_ms,
            self.d_shift_ms,
        ]
    }
}

fn change_between(outer: &Prototype, normal: &Prototype) -> Result<FeatureChange> {
    let o = extract_markers(outer)?;
    let n = extract_markers(normal)?;
    if !(o.amplitude > 0.0 && n.amplitude > 0.0) {
        return Err(Error::undeterminable("non-positive prototype amplitude"));
    }
    Ok(FeatureChange {
        amplitude_db: 20.0 * log10(o.amplitude / n.amplitude),
        m_shift_ms: 1e3 * (o.m_pos - n.m_pos),
        f_shift_ms: 1e3 * (o.f_pos - n.f_pos),
        d_shift_ms: 1e3 * (o.d_pos - n.d_pos),
    })
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SubjectChanges {
    pub subject: String,
    pub ibis: IbiTriple,
    pub small_spread: bool,
    /// D bin relative to N.
    pub decrease: FeatureChange,
    /// I bin relative to N.
    pub increase: FeatureChange,
}

/// Per-category distributions of one feature.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FeatureDistribution {
    pub values: Vec<f64>,
    pub summary: Option<BoxplotSummary>,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FeatureChangeReport {
    pub assignments: Vec<CategoryAssignment>,
    pub split: CohortSplit,
    pub subjects: Vec<SubjectChanges>,
    /// category name → feature name → distribution
    pub categories: BTreeMap<String, BTreeMap<String, FeatureDistribution>>,
}

/// Marker and amplitude changes between each subject's outer IBI bins and
/// its central bin, grouped by the subject's LD/SD and LI/SI class.
///
/// D-bin changes feed LD/SD, I-bin changes feed LI/SI. Prototypes must come
/// from ECG-based segmentation; they are smoothed here.
pub fn feature_changes(subjects: &[SubjectBins]) -> Result<FeatureChangeReport> {
    let mut per_subject = Vec::with_capacity(subjects.len());
    let mut rows = Vec::with_capacity(subjects.len());
    for s in subjects {
        let ibis = IbiTriple::new(
            s.subject.clone(),
            s.decreased.median_ibi,
            s.normal.median_ibi,
            s.increased.median_ibi,
        )?;
        let (r_d, r_i) = compute_ratios(&ibis);
        rows.push((s.subject.clone(), r_d, r_i));
        per_subject.push(SubjectChanges {
            subject: s.subject.clone(),
            small_spread: ibis.small_spread(),
            ibis,
            decrease: change_between(&s.decreased, &s.normal)?,
            increase: change_between(&s.increased, &s.normal)?,
        });
    }
    let (assignments, split) = split_cohort(&rows)?;

    let mut grouped: BTreeMap<Category, Vec<[f64; 4]>> = BTreeMap::new();
    for (a, c) in assignments.iter().zip(&per_subject) {
        grouped
            .entry(a.d_class)
            .or_default()
            .push(c.decrease.values());
        grouped
            .entry(a.i_class)
            .or_default()
            .push(c.increase.values());
    }
    let mut categories = BTreeMap::new();
    for cat in Category::ALL {
        let rows = grouped.remove(&cat).unwrap_or_default();
        let mut features = BTreeMap::new();
        for (i, name) in FeatureChange::NAMES.iter().enumerate() {
            let values: Vec<f64> = rows.iter().map(|r| r[i]).collect();
            let summary = BoxplotSummary::from_values(&values).ok();
            features.insert(String::from(*name), FeatureDistribution { values, summary });
        }
        categories.insert(String::from(cat.as_str()), features);
    }
    Ok(FeatureChangeReport {
        assignments,
        split,
        subjects: per_subject,
        categories,
    })
}

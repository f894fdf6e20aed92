//! Cutting a PPG channel into cardiac cycles.
//!
//! Two segmentations are supported: consecutive ECG R-peaks, or (without any
//! external timing) consecutive downgoing zero-crossings of the band-limited
//! PPG. Each cycle is resampled onto a common grid of `N_s` points covering
//! `[start, start + ibi)`.

use alloc::collections::BTreeSet;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math::{floor, round};
use crate::series::{
    find_zero_crossings, resample_to_grid, CrossingFilter, EventTrain, UniformSeries,
};
use crate::stats;

/// Default lower IBI bound for cycle rejection, as a fraction of the median.
pub const DEFAULT_REJECT_LOW: f64 = 0.7;
/// Default upper IBI bound for cycle rejection, as a fraction of the median.
pub const DEFAULT_REJECT_HIGH: f64 = 1.3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum SegmentationMethod {
    EcgBased,
    PpgBlind,
}

impl SegmentationMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            SegmentationMethod::EcgBased => "ecg_based",
            SegmentationMethod::PpgBlind => "ppg_blind",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cycle {
    pub waveform: Vec<f64>,
    /// Time zero of the cycle (R-peak or downgoing crossing), seconds.
    pub start: f64,
    pub ibi: f64,
    pub labels: BTreeSet<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CycleSet {
    grid_size: usize,
    cycles: Vec<Cycle>,
}

impl CycleSet {
    pub fn new(grid_size: usize, cycles: Vec<Cycle>) -> Result<Self> {
        if grid_size < 2 {
            return Err(Error::invalid("cycle grid needs at least two samples"));
        }
        if cycles.iter().any(|c| c.waveform.len() != grid_size) {
            return Err(Error::invalid(
                "cycle waveform length differs from the grid size",
            ));
        }
        if cycles.iter().any(|c| !(c.ibi.is_finite() && c.ibi > 0.0)) {
            return Err(Error::invalid("cycle IBIs must be positive"));
        }
        if cycles.windows(2).any(|w| w[1].start <= w[0].start) {
            return Err(Error::invalid("cycle starts must be strictly increasing"));
        }
        Ok(Self { grid_size, cycles })
    }

    /// Subset of an already valid set; order is preserved.
    fn subset(&self, keep: impl Fn(&Cycle) -> bool) -> Self {
        Self {
            grid_size: self.grid_size,
            cycles: self.cycles.iter().filter(|c| keep(c)).cloned().collect(),
        }
    }

    pub fn grid_size(&self) -> usize {
        self.grid_size
    }

    pub fn cycles(&self) -> &[Cycle] {
        &self.cycles
    }

    pub fn len(&self) -> usize {
        self.cycles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cycles.is_empty()
    }

    pub fn ibis(&self) -> Vec<f64> {
        self.cycles.iter().map(|c| c.ibi).collect()
    }

    pub fn median_ibi(&self) -> Result<f64> {
        stats::median(&self.ibis()).map_err(|_| Error::EmptyResult("no cycles".into()))
    }
}

fn cycles_between(ppg: &UniformSeries, boundaries: &[f64], grid_size: usize) -> Result<Vec<Cycle>> {
    boundaries
        .windows(2)
        .map(|w| {
            Ok(Cycle {
                waveform: resample_to_grid(ppg, w[0], w[1], grid_size)?,
                start: w[0],
                ibi: w[1] - w[0],
                labels: BTreeSet::new(),
            })
        })
        .collect()
}

/// One cycle per consecutive pair of R-peaks inside the PPG support.
pub fn segment_by_ecg(
    ppg: &UniformSeries,
    rpeaks: &EventTrain,
    grid_size: usize,
) -> Result<CycleSet> {
    if grid_size < 2 {
        return Err(Error::invalid("cycle grid needs at least two samples"));
    }
    let slack = 1e-9 / ppg.sample_rate();
    let usable: Vec<f64> = rpeaks
        .times()
        .iter()
        .copied()
        .filter(|t| *t >= ppg.start_time() - slack && *t <= ppg.end_time() + slack)
        .collect();
    if usable.len() < 2 {
        return Err(Error::insufficient(
            "fewer than two R-peaks inside the PPG record",
        ));
    }
    CycleSet::new(grid_size, cycles_between(ppg, &usable, grid_size)?)
}

/// Shortest and longest IBI searched when estimating the pulse period.
const MIN_PERIOD_S: f64 = 0.33;
const MAX_PERIOD_S: f64 = 2.0;

/// Pulse period estimate in samples from the normalized autocorrelation.
///
/// The shortest lag that is a local maximum reaching 80% of the global
/// maximum is chosen, which avoids locking onto multiples of the period.
pub fn estimate_period_samples(values: &[f64], sample_rate: f64) -> Result<f64> {
    let n = values.len();
    let min_lag = (floor(MIN_PERIOD_S * sample_rate) as usize).max(1);
    let max_lag = (floor(MAX_PERIOD_S * sample_rate) as usize).min(n / 2);
    if max_lag < min_lag + 2 {
        return Err(Error::insufficient(
            "record too short to estimate the pulse period",
        ));
    }
    let r: Vec<f64> = (min_lag - 1..=max_lag + 1)
        .map(|lag| {
            if lag >= n {
                return 0.0;
            }
            let s: f64 = values[..n - lag]
                .iter()
                .zip(&values[lag..])
                .map(|(a, b)| a * b)
                .sum();
            s / (n - lag) as f64
        })
        .collect();
    // r[i] corresponds to lag min_lag - 1 + i
    let peak = r[1..r.len() - 1]
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);
    if !(peak > 0.0) {
        return Err(Error::insufficient("no periodicity in the PPG record"));
    }
    let i = (1..r.len() - 1)
        .find(|&i| r[i] >= 0.8 * peak && r[i] >= r[i - 1] && r[i] >= r[i + 1])
        .ok_or_else(|| Error::insufficient("no periodicity in the PPG record"))?;
    let (a, b, c) = (r[i - 1], r[i], r[i + 1]);
    let denom = a - 2.0 * b + c;
    let delta = if denom < 0.0 {
        (0.5 * (a - c) / denom).clamp(-0.5, 0.5)
    } else {
        0.0
    };
    Ok((min_lag - 1 + i) as f64 + delta)
}

/// Centered moving average of fixed odd length; near the ends the window is
/// slid inward rather than truncated.
fn moving_average(values: &[f64], window: usize) -> Vec<f64> {
    let n = values.len();
    let window = window.min(n).max(1);
    let mut prefix = Vec::with_capacity(n + 1);
    prefix.push(0.0);
    for v in values {
        prefix.push(prefix.last().copied().unwrap_or(0.0) + v);
    }
    let half = window / 2;
    (0..n)
        .map(|k| {
            let lo = k.saturating_sub(half).min(n - window);
            (prefix[lo + window] - prefix[lo]) / window as f64
        })
        .collect()
}

fn three_point_smooth(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    (0..n)
        .map(|k| {
            if k == 0 || k + 1 == n {
                values[k]
            } else {
                (values[k - 1] + values[k] + values[k + 1]) / 3.0
            }
        })
        .collect()
}

/// Cycle boundaries for PPG-only segmentation.
///
/// The zero-mean signal is detrended with a centered moving average spanning
/// two estimated periods and smoothed with a 3-sample kernel; both filters
/// are symmetric and so leave crossing times in place. Downgoing crossings
/// closer than half the running median spacing to the previously accepted
/// one compete, and the steeper crossing wins.
pub fn blind_boundaries(ppg: &UniformSeries) -> Result<EventTrain> {
    let centered = ppg.zero_mean();
    let period = estimate_period_samples(centered.values(), ppg.sample_rate())?;
    let window = 2 * (round(period) as usize) + 1;
    let trend = moving_average(centered.values(), window);
    let detrended: Vec<f64> = centered
        .values()
        .iter()
        .zip(&trend)
        .map(|(v, t)| v - t)
        .collect();
    let filtered = centered.with_values(three_point_smooth(&detrended));

    let candidates = find_zero_crossings(&filtered, CrossingFilter::Down);
    let values = filtered.values();
    let dt = 1.0 / ppg.sample_rate();
    let slope_at = |t: f64| {
        let j = (floor((t - filtered.start_time()) / dt) as usize).min(values.len() - 2);
        values[j + 1] - values[j]
    };

    let initial_spacing = period * dt;
    let mut accepted: Vec<(f64, f64)> = Vec::new();
    for c in candidates {
        let slope = slope_at(c.time);
        let Some(&(last_t, last_slope)) = accepted.last() else {
            accepted.push((c.time, slope));
            continue;
        };
        let recent: Vec<f64> = accepted
            .iter()
            .rev()
            .take(9)
            .collect::<Vec<_>>()
            .windows(2)
            .map(|w| w[0].0 - w[1].0)
            .collect();
        let spacing = if recent.is_empty() {
            initial_spacing
        } else {
            stats::median(&recent)?
        };
        if c.time - last_t < 0.5 * spacing {
            if slope < last_slope {
                *accepted.last_mut().expect("non-empty") = (c.time, slope);
            }
        } else {
            accepted.push((c.time, slope));
        }
    }
    if accepted.len() < 2 {
        return Err(Error::insufficient(
            "fewer than two downgoing zero-crossings",
        ));
    }
    EventTrain::new(accepted.into_iter().map(|(t, _)| t).collect())
}

/// One cycle per pair of consecutive boundaries from [`blind_boundaries`];
/// the zero-mean PPG is resampled.
pub fn segment_by_ppg(ppg: &UniformSeries, grid_size: usize) -> Result<CycleSet> {
    if grid_size < 2 {
        return Err(Error::invalid("cycle grid needs at least two samples"));
    }
    let boundaries = blind_boundaries(ppg)?;
    let centered = ppg.zero_mean();
    CycleSet::new(
        grid_size,
        cycles_between(&centered, boundaries.times(), grid_size)?,
    )
}

#[derive(Debug, Clone, PartialEq)]
pub struct Rejection {
    pub kept: CycleSet,
    pub discarded: usize,
    pub median_ibi: f64,
}

/// Drops cycles whose IBI falls outside `[low, high] × median IBI`.
pub fn reject_outlier_cycles(cs: &CycleSet, low: f64, high: f64) -> Result<Rejection> {
    if cs.is_empty() {
        return Err(Error::EmptyResult("no cycles to screen".into()));
    }
    reject_with_reference(cs, low, high, cs.median_ibi()?)
}

/// As [`reject_outlier_cycles`], with the reference IBI supplied.
pub fn reject_with_reference(
    cs: &CycleSet,
    low: f64,
    high: f64,
    median_ibi: f64,
) -> Result<Rejection> {
    if !(low > 0.0 && low < 1.0 && high > 1.0 && high.is_finite()) {
        return Err(Error::invalid(
            "rejection bounds must satisfy 0 < low < 1 < high",
        ));
    }
    let (lo, hi) = (low * median_ibi, high * median_ibi);
    let kept = cs.subset(|c| c.ibi >= lo && c.ibi <= hi);
    if kept.is_empty() {
        return Err(Error::EmptyResult("every cycle was rejected".into()));
    }
    Ok(Rejection {
        discarded: cs.len() - kept.len(),
        kept,
        median_ibi,
    })
}

/// A labeled recording interval `[start, end)`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Epoch {
    pub start: f64,
    pub end: f64,
    pub label: String,
}

/// Tags each cycle with the labels of every epoch containing its midpoint.
pub fn label_cycles(cs: &CycleSet, epochs: &[Epoch]) -> CycleSet {
    let mut out = cs.clone();
    for c in &mut out.cycles {
        let mid = c.start + 0.5 * c.ibi;
        for e in epochs.iter().filter(|e| mid >= e.start && mid < e.end) {
            c.labels.insert(e.label.to_string());
        }
    }
    out
}

/// Splits into (cycles carrying `label`, the rest).
pub fn partition_by_label(cs: &CycleSet, label: &str) -> (CycleSet, CycleSet) {
    (
        cs.subset(|c| c.labels.contains(label)),
        cs.subset(|c| !c.labels.contains(label)),
    )
}

#[derive(Debug, Clone, PartialEq)]
pub struct IbiBins {
    /// Shortest-IBI quarter.
    pub low: CycleSet,
    pub mid: CycleSet,
    /// Longest-IBI quarter.
    pub high: CycleSet,
}

/// Number of cycles at or below the first quartile of `n` distinct IBIs.
pub fn outer_bin_size(n: usize) -> usize {
    (n - 1) / 4 + 1
}

/// Splits cycles into the lowest 25%, the middle and the highest 25% by IBI.
///
/// Both outer bins hold `⌊(n-1)/4⌋ + 1` cycles, which is `⌊n/4⌋` or
/// `⌈n/4⌉`. Among equal IBIs the earlier cycle goes to the outer bin.
pub fn bin_by_ibi(cs: &CycleSet) -> Result<IbiBins> {
    let n = cs.len();
    if n < 4 {
        return Err(Error::insufficient(
            "IBI binning needs at least four cycles",
        ));
    }
    let k = outer_bin_size(n);
    let cycles = cs.cycles();
    let mut by_ibi: Vec<usize> = (0..n).collect();
    by_ibi.sort_by(|&a, &b| cycles[a].ibi.total_cmp(&cycles[b].ibi).then(a.cmp(&b)));
    let low: BTreeSet<usize> = by_ibi[..k].iter().copied().collect();
    let mut rest: Vec<usize> = by_ibi[k..].to_vec();
    rest.sort_by(|&a, &b| cycles[b].ibi.total_cmp(&cycles[a].ibi).then(a.cmp(&b)));
    let high: BTreeSet<usize> = rest[..k].iter().copied().collect();
    let pick = |set: &dyn Fn(usize) -> bool| CycleSet {
        grid_size: cs.grid_size,
        cycles: (0..n)
            .filter(|&i| set(i))
            .map(|i| cycles[i].clone())
            .collect(),
    };
    Ok(IbiBins {
        low: pick(&|i| low.contains(&i)),
        mid: pick(&|i| !low.contains(&i) && !high.contains(&i)),
        high: pick(&|i| high.contains(&i)),
    })
}

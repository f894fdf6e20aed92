//! Median prototype waveforms with their IQR band.

use alloc::collections::BTreeSet;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::harmonic::{circular_shift, smooth};
use crate::math::{cos, sin, sqrt, TAU};
use crate::segmentation::{CycleSet, SegmentationMethod};
use crate::stats::{self, pointwise_quartiles};

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Prototype {
    pub grid_size: usize,
    /// Pointwise median across cycles, zero-meaned.
    pub waveform: Vec<f64>,
    /// Pointwise interquartile range (unaffected by the mean removal).
    pub iqr: Vec<f64>,
    /// Lower and upper quartile curves, shifted like `waveform`.
    #[cfg_attr(feature = "serde", serde(default))]
    pub q1: Vec<f64>,
    #[cfg_attr(feature = "serde", serde(default))]
    pub q3: Vec<f64>,
    pub n_cycles: usize,
    #[cfg_attr(feature = "serde", serde(rename = "median_ibi_s"))]
    pub median_ibi: f64,
    pub method: SegmentationMethod,
    pub labels: Vec<String>,
}

impl Prototype {
    /// Seconds per grid sample.
    pub fn sample_period(&self) -> f64 {
        self.median_ibi / self.grid_size as f64
    }

    /// Copy with waveform and band divided by the waveform's peak magnitude.
    pub fn normalized(&self) -> Result<Self> {
        let peak = self.waveform.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if peak == 0.0 {
            return Err(Error::undeterminable("cannot normalize a flat prototype"));
        }
        let scale = |v: &[f64]| v.iter().map(|x| x / peak).collect();
        Ok(Self {
            waveform: scale(&self.waveform),
            iqr: scale(&self.iqr),
            q1: scale(&self.q1),
            q3: scale(&self.q3),
            ..self.clone()
        })
    }

    /// Copy delayed by `shift` grid samples (fractional allowed).
    pub fn shifted(&self, shift: f64) -> Self {
        Self {
            waveform: circular_shift(&self.waveform, shift),
            iqr: circular_shift(&self.iqr, shift),
            q1: circular_shift(&self.q1, shift),
            q3: circular_shift(&self.q3, shift),
            ..self.clone()
        }
    }
}

/// Median prototype of a cycle set.
pub fn build_prototype(cs: &CycleSet, method: SegmentationMethod) -> Result<Prototype> {
    if cs.is_empty() {
        return Err(Error::EmptyResult(
            "cannot build a prototype from zero cycles".into(),
        ));
    }
    let waveforms: Vec<&[f64]> = cs.cycles().iter().map(|c| c.waveform.as_slice()).collect();
    let q = pointwise_quartiles(&waveforms)?;
    let iqr = q.iqr();
    let mean = stats::mean(&q.median);
    let shift = |v: Vec<f64>| v.into_iter().map(|x| x - mean).collect::<Vec<_>>();

    let mut common: Option<BTreeSet<&String>> = None;
    for c in cs.cycles() {
        let own: BTreeSet<&String> = c.labels.iter().collect();
        common = Some(match common {
            None => own,
            Some(prev) => prev.intersection(&own).copied().collect(),
        });
    }
    Ok(Prototype {
        grid_size: cs.grid_size(),
        waveform: shift(q.median),
        iqr,
        q1: shift(q.q1),
        q3: shift(q.q3),
        n_cycles: cs.len(),
        median_ibi: cs.median_ibi()?,
        method,
        labels: common.unwrap_or_default().into_iter().cloned().collect(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ComparisonReport {
    pub max_abs_diff: f64,
    pub rms_diff: f64,
    /// Fraction of samples with `|a - b| <= a.iqr`; uses the first
    /// prototype's band only.
    pub in_band_fraction: f64,
}

pub fn compare_prototypes(a: &Prototype, b: &Prototype) -> Result<ComparisonReport> {
    if a.grid_size != b.grid_size || a.waveform.len() != b.waveform.len() {
        return Err(Error::invalid("prototypes live on different grids"));
    }
    let n = a.waveform.len();
    let diffs: Vec<f64> = a
        .waveform
        .iter()
        .zip(&b.waveform)
        .map(|(x, y)| (x - y).abs())
        .collect();
    let inside = diffs
        .iter()
        .zip(&a.iqr)
        .filter(|(d, band)| **d <= **band)
        .count();
    Ok(ComparisonReport {
        max_abs_diff: diffs.iter().copied().fold(0.0, f64::max),
        rms_diff: sqrt(diffs.iter().map(|d| d * d).sum::<f64>() / n as f64),
        in_band_fraction: inside as f64 / n as f64,
    })
}

/// Delay (in grid samples, in `[0, N)`) that best aligns `other` onto
/// `reference`, maximizing the circular cross-correlation.
pub fn alignment_shift(reference: &[f64], other: &[f64]) -> Result<f64> {
    let n = reference.len();
    if n != other.len() || n < 2 {
        return Err(Error::invalid("alignment needs equal-length waveforms"));
    }
    // c(s) = Σ_k ref(k) · other(k - s), evaluated exactly through the
    // trigonometric interpolant of `other`.
    let spec_a = crate::dft::forward(reference);
    let spec_b = crate::dft::forward(other);
    let nf = n as f64;
    let corr = |s: f64| -> f64 {
        spec_a
            .iter()
            .zip(&spec_b)
            .enumerate()
            .map(|(j, (a, b))| {
                let freq = if 2 * j <= n { j as f64 } else { j as f64 - nf };
                // Re(A · conj(B) · e^{i 2π f s / N})
                let (re, im) = (a.re * b.re + a.im * b.im, a.im * b.re - a.re * b.im);
                let ang = TAU * freq * s / nf;
                if 2 * j == n {
                    re * cos(core::f64::consts::PI * s)
                } else {
                    re * cos(ang) - im * sin(ang)
                }
            })
            .sum()
    };
    let coarse = (0..n)
        .map(|s| (s, corr(s as f64)))
        .fold((0usize, f64::NEG_INFINITY), |best, cur| {
            if cur.1 > best.1 {
                cur
            } else {
                best
            }
        })
        .0 as f64;
    // golden-section refinement on [coarse - 1, coarse + 1]
    let ratio = 0.5 * (sqrt(5.0) - 1.0);
    let (mut lo, mut hi) = (coarse - 1.0, coarse + 1.0);
    let mut x1 = hi - ratio * (hi - lo);
    let mut x2 = lo + ratio * (hi - lo);
    let (mut f1, mut f2) = (corr(x1), corr(x2));
    for _ in 0..80 {
        if f1 > f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - ratio * (hi - lo);
            f1 = corr(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + ratio * (hi - lo);
            f2 = corr(x2);
        }
    }
    Ok(crate::math::rem_euclid(0.5 * (lo + hi), nf))
}

/// `other` circularly shifted onto `reference`.
pub fn align_to(reference: &Prototype, other: &Prototype) -> Result<Prototype> {
    let shift = alignment_shift(&reference.waveform, &other.waveform)?;
    Ok(other.shifted(shift))
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "verdict", rename_all = "snake_case"))]
pub enum DeviantVerdict {
    Typical,
    Deviant { peak_width: f64, valley_width: f64 },
}

impl DeviantVerdict {
    pub fn is_deviant(&self) -> bool {
        matches!(self, DeviantVerdict::Deviant { .. })
    }
}

/// Default peak-to-valley width ratio at or above which the peak counts as
/// broad.
pub const DEFAULT_BROAD_PEAK_RATIO: f64 = 1.0;

/// Width (in samples) of the cyclic run around `center` where `inside`
/// holds, with linear interpolation at the level crossings.
fn run_width(w: &[f64], center: usize, level: f64, above: bool) -> f64 {
    let n = w.len();
    let inside = |v: f64| if above { v > level } else { v < level };
    let edge = |inner: f64, outer: f64| (inner - level) / (inner - outer);
    let mut width = 0.0;
    let mut steps = 0;
    let mut k = center;
    // walk right
    loop {
        let next = (k + 1) % n;
        if !inside(w[next]) {
            width += edge(w[k], w[next]);
            break;
        }
        width += 1.0;
        k = next;
        steps += 1;
        if steps >= n {
            return n as f64;
        }
    }
    k = center;
    loop {
        let prev = (k + n - 1) % n;
        if !inside(w[prev]) {
            width += edge(w[k], w[prev]);
            break;
        }
        width += 1.0;
        k = prev;
        steps += 1;
        if steps >= n {
            return n as f64;
        }
    }
    width
}

/// Flags a prototype whose maximum is broad relative to the valley and sits
/// at the R-peak (grid index 0).
///
/// Widths are measured at half prominence (the midpoint between the
/// extremes) of the five-component smoothed waveform. Only meaningful for
/// ECG-based prototypes, whose time zero is the R-peak.
pub fn detect_deviant(p: &Prototype, broad_ratio: f64) -> Result<DeviantVerdict> {
    let raw_range = range(&p.waveform);
    if !(raw_range > 0.0) {
        return Err(Error::undeterminable("flat prototype"));
    }
    let s = smooth(&p.waveform)?;
    let smooth_range = range(&s);
    if !(smooth_range > 1e-9 * raw_range) {
        return Err(Error::undeterminable(
            "prototype has no energy in the five lowest components",
        ));
    }
    let tie = 1e-9 * smooth_range;
    let argmax = first_within(&s, tie, |v| v);
    let argmin = first_within(&s, tie, |v| -v);
    let level = 0.5 * (s[argmax] + s[argmin]);
    let peak_width = run_width(&s, argmax, level, true);
    let valley_width = run_width(&s, argmin, level, false);
    if argmax == 0 && peak_width >= broad_ratio * valley_width {
        Ok(DeviantVerdict::Deviant {
            peak_width,
            valley_width,
        })
    } else {
        Ok(DeviantVerdict::Typical)
    }
}

fn range(w: &[f64]) -> f64 {
    let hi = w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lo = w.iter().copied().fold(f64::INFINITY, f64::min);
    hi - lo
}

pub(crate) fn argmax(w: &[f64]) -> usize {
    argmax_by(w, |v| v)
}

/// First index maximizing `key`.
fn argmax_by(w: &[f64], key: impl Fn(f64) -> f64) -> usize {
    let mut best = 0;
    for (k, v) in w.iter().enumerate() {
        if key(*v) > key(w[best]) {
            best = k;
        }
    }
    best
}

/// First index whose key is within `tie` of the maximum key.
fn first_within(w: &[f64], tie: f64, key: impl Fn(f64) -> f64) -> usize {
    let best = key(w[argmax_by(w, &key)]);
    w.iter().position(|v| key(*v) >= best - tie).unwrap_or(0)
}

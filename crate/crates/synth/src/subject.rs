//! One synthetic subject: IBI sequence, R-peaks and a PPG channel built from
//! a time-warped template.

use ppgproto_core::segmentation::Epoch;
use ppgproto_core::series::{EventTrain, UniformSeries};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::oracle::{scan_markers, TrueMarkers, DENSE_POINTS};
use crate::template::Template;

const MIN_SEGMENT: f64 = 0.3;

/// Short/long factors applied to an ectopic beat and the pause after it.
pub const ECTOPIC_FACTORS: (f64, f64) = (0.6, 1.4);

/// IBI-dependent deformation of the cycle, relative to `base_ibi`.
///
/// R-peak through the valley stays fixed in absolute time. The D marker
/// moves by `d_slope · (T - base_ibi)` and the rest of the cycle absorbs the
/// remaining length through a smooth monotone map; D is clamped so that neither neighbouring segment
/// drops below 30% of its reference length. The cycle amplitude scales by
/// `exp(log_amplitude_slope · (T - base_ibi))`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Warp {
    pub d_slope: f64,
    pub log_amplitude_slope: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubjectSpec {
    pub id: String,
    pub template: Template,
    #[serde(rename = "base_ibi_s")]
    pub base_ibi: f64,
    /// Std of the log-IBI jitter.
    pub ibi_variability: f64,
    /// Fractional IBI change from the start to the end of the record.
    #[serde(default)]
    pub ibi_drift: f64,
    /// R-peak to template maximum.
    #[serde(rename = "planted_d_s")]
    pub planted_d: f64,
    #[serde(default)]
    pub epochs: Vec<Epoch>,
    pub noise_sigma: f64,
    pub seed: u64,
    #[serde(rename = "duration_s")]
    pub duration: f64,
    #[serde(rename = "sample_rate_hz")]
    pub sample_rate: f64,
    #[serde(default)]
    pub warp: Warp,
    /// Beat indices replaced by a short beat followed by a long pause.
    #[serde(default)]
    pub ectopic_beats: Vec<usize>,
}

impl SubjectSpec {
    /// Noise-free, jitter-free one-minute record at 40 Hz.
    pub fn basic(
        id: impl Into<String>,
        template: Template,
        base_ibi: f64,
        planted_d: f64,
        seed: u64,
    ) -> Self {
        Self {
            id: id.into(),
            template,
            base_ibi,
            ibi_variability: 0.0,
            ibi_drift: 0.0,
            planted_d,
            epochs: Vec::new(),
            noise_sigma: 0.0,
            seed,
            duration: 60.0,
            sample_rate: 40.0,
            warp: Warp::default(),
            ectopic_beats: Vec::new(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.id.is_empty() {
            return Err(invalid("subject id is empty"));
        }
        self.template.validate()?;
        let finite_pos = |v: f64| v.is_finite() && v > 0.0;
        let finite_nonneg = |v: f64| v.is_finite() && v >= 0.0;
        if !finite_pos(self.base_ibi) {
            return Err(invalid("base_ibi must be positive"));
        }
        if !finite_nonneg(self.ibi_variability) || !finite_nonneg(self.noise_sigma) {
            return Err(invalid(
                "ibi_variability and noise_sigma must be non-negative",
            ));
        }
        if !(self.ibi_drift.is_finite() && self.ibi_drift.abs() < 1.0) {
            return Err(invalid("ibi_drift must lie in (-1, 1)"));
        }
        if !(finite_nonneg(self.planted_d) && self.planted_d < self.base_ibi) {
            return Err(invalid("planted_d must lie in [0, base_ibi)"));
        }
        if !finite_pos(self.sample_rate) || !finite_pos(self.duration) {
            return Err(invalid("duration and sample_rate must be positive"));
        }
        if self.duration < 3.0 * self.base_ibi || self.duration * self.sample_rate < 4.0 {
            return Err(invalid("record too short for three cycles"));
        }
        if !(self.warp.d_slope.is_finite() && self.warp.log_amplitude_slope.is_finite()) {
            return Err(invalid("warp slopes must be finite"));
        }
        validate_epochs(&self.epochs, self.duration)
    }
}

/// Epochs must be non-empty, labeled, inside `[0, duration]` and mutually
/// disjoint.
pub fn validate_epochs(epochs: &[Epoch], duration: f64) -> Result<()> {
    let mut sorted: Vec<&Epoch> = epochs.iter().collect();
    sorted.sort_by(|a, b| a.start.total_cmp(&b.start));
    for e in &sorted {
        if e.label.is_empty() {
            return Err(invalid("epoch label is empty"));
        }
        if !(e.start.is_finite() && e.end.is_finite() && e.start < e.end) {
            return Err(invalid(format!(
                "epoch [{}, {}) is empty or not finite",
                e.start, e.end
            )));
        }
        if e.start < 0.0 || e.end > duration {
            return Err(invalid(format!(
                "epoch [{}, {}) lies outside the record",
                e.start, e.end
            )));
        }
    }
    for w in sorted.windows(2) {
        if w[1].start < w[0].end {
            return Err(invalid(format!(
                "epochs [{}, {}) and [{}, {}) overlap",
                w[0].start, w[0].end, w[1].start, w[1].end
            )));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BinMarkers {
    #[serde(rename = "median_ibi_s")]
    pub median_ibi: f64,
    pub n_cycles: usize,
    pub markers: TrueMarkers,
}

/// Expected markers of the D/N/I IBI bins, R-peak relative.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BinTruth {
    pub decreased: BinMarkers,
    pub normal: BinMarkers,
    pub increased: BinMarkers,
    pub r_d: f64,
    pub r_i: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub subject: String,
    pub template: Template,
    #[serde(rename = "base_ibi_s")]
    pub base_ibi: f64,
    #[serde(rename = "planted_d_s")]
    pub planted_d: f64,
    pub noise_sigma: f64,
    pub warp: Warp,
    /// Markers of the reference cycle (length `base_ibi`), R-peak relative.
    pub reference: TrueMarkers,
    /// Markers of the unrotated template over one `base_ibi` cycle.
    pub template_markers: TrueMarkers,
    #[serde(rename = "ibis_s")]
    pub ibis: Vec<f64>,
    /// Indices (into `ibis`) of intervals disturbed by ectopic beats.
    pub ectopic_intervals: Vec<usize>,
    pub bins: Option<BinTruth>,
}

#[derive(Debug, Clone)]
pub struct SubjectData {
    pub spec: SubjectSpec,
    pub ppg: UniformSeries,
    pub rpeaks: EventTrain,
    pub truth: GroundTruth,
}

/// Fixed points of the reference cycle in seconds after the R-peak.
#[derive(Debug, Clone, Copy)]
struct Geometry {
    t_ref: f64,
    d: f64,
    u_m: f64,
    /// End of the segment that never stretches.
    fixed_end: f64,
    /// Reference time of D when it lies in the stretchable part.
    d_knot: Option<f64>,
}

impl Geometry {
    fn new(spec: &SubjectSpec) -> Result<Self> {
        let t = &spec.template;
        let u_m = t.max_position();
        let n = DENSE_POINTS;
        let rotated: Vec<f64> = (0..n).map(|k| t.value(u_m + k as f64 / n as f64)).collect();
        let valley = rotated
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .map(|(k, _)| k as f64 / n as f64)
            .unwrap_or(0.0);
        let t_ref = spec.base_ibi;
        let d = spec.planted_d;
        let tau_v = d + valley * t_ref;
        let fixed_end = if tau_v < t_ref { tau_v } else { d };
        let d_knot = scan_markers(&rotated, None, 1.0)
            .ok()
            .map(|mk| d + mk.d * t_ref)
            .filter(|tau_d| *tau_d > fixed_end && *tau_d < t_ref);
        if spec.warp.d_slope != 0.0 && d_knot.is_none() {
            return Err(invalid(
                "D shift requires the up-crossing between the valley and the next R-peak",
            ));
        }
        Ok(Self {
            t_ref,
            d,
            u_m,
            fixed_end,
            d_knot,
        })
    }

    fn map(&self, warp: &Warp, ibi: f64) -> CycleMap {
        let e = self.fixed_end;
        if ibi <= e * 1.001 {
            return CycleMap::Uniform {
                scale: self.t_ref / ibi,
            };
        }
        let knot = self.d_knot.and_then(|tau_d| {
            let lo = e + MIN_SEGMENT * (tau_d - e);
            let hi = ibi - MIN_SEGMENT * (self.t_ref - tau_d);
            (lo < hi).then(|| {
                (
                    (tau_d + warp.d_slope * (ibi - self.t_ref)).clamp(lo, hi),
                    tau_d,
                )
            })
        });
        CycleMap::Knotted {
            e,
            knot,
            ibi,
            t_ref: self.t_ref,
        }
    }

    fn value(&self, t: &Template, tau: f64) -> f64 {
        t.value(self.u_m + (tau - self.d) / self.t_ref)
    }

    fn phase(&self, t: &Template, tau: f64) -> f64 {
        let (re, im) = t.analytic(self.u_m + (tau - self.d) / self.t_ref);
        im.atan2(re)
    }
}

enum CycleMap {
    Uniform {
        scale: f64,
    },
    Knotted {
        e: f64,
        knot: Option<(f64, f64)>,
        ibi: f64,
        t_ref: f64,
    },
}

impl CycleMap {
    /// Seconds after the R-peak → reference time.
    fn tau(&self, s: f64) -> f64 {
        match *self {
            CycleMap::Uniform { scale } => s * scale,
            CycleMap::Knotted {
                e,
                knot,
                ibi,
                t_ref,
            } => {
                if s <= e {
                    return s;
                }
                match knot {
                    Some((s_d, tau_d)) => {
                        let (a, b) = ((tau_d - e) / (s_d - e), (t_ref - tau_d) / (ibi - s_d));
                        let mid = 2.0 * a * b / (a + b);
                        if s <= s_d {
                            hermite(s, (e, e, 1.0), (s_d, tau_d, mid))
                        } else {
                            hermite(s, (s_d, tau_d, mid), (ibi, t_ref, 1.0))
                        }
                    }
                    None => hermite(s, (e, e, 1.0), (ibi, t_ref, 1.0)),
                }
            }
        }
    }
}

/// Monotone cubic Hermite between `(x, y, slope)` knots, end slopes limited
/// Fritsch–Carlson style.
fn hermite(s: f64, p0: (f64, f64, f64), p1: (f64, f64, f64)) -> f64 {
    let (x0, y0, mut m0) = p0;
    let (x1, y1, mut m1) = p1;
    let h = x1 - x0;
    let secant = (y1 - y0) / h;
    let (a, b) = (m0 / secant, m1 / secant);
    let r = a.hypot(b);
    if r > 3.0 {
        m0 *= 3.0 / r;
        m1 *= 3.0 / r;
    }
    let t = (s - x0) / h;
    let (t2, t3) = (t * t, t * t * t);
    (2.0 * t3 - 3.0 * t2 + 1.0) * y0
        + (t3 - 2.0 * t2 + t) * h * m0
        + (-2.0 * t3 + 3.0 * t2) * y1
        + (t3 - t2) * h * m1
}

fn amplitude_factor(warp: &Warp, ibi: f64, t_ref: f64) -> f64 {
    (warp.log_amplitude_slope * (ibi - t_ref)).exp()
}

fn sample_count(spec: &SubjectSpec) -> usize {
    (spec.duration * spec.sample_rate).round() as usize
}

/// R-peak times: first at 0, then log-normal IBIs with optional drift and
/// ectopic overrides, up to the last PPG sample.
pub fn draw_rpeaks(spec: &SubjectSpec) -> Result<Vec<f64>> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let last_sample = (sample_count(spec) - 1) as f64 / spec.sample_rate;
    let mut times = vec![0.0];
    let mut t = 0.0;
    let mut k = 0usize;
    loop {
        let z: f64 = rng.sample(StandardNormal);
        let drift = 1.0 + spec.ibi_drift * (t / spec.duration - 0.5);
        let mut ibi = spec.base_ibi * (spec.ibi_variability * z).exp() * drift;
        if spec.ectopic_beats.contains(&k) {
            ibi *= ECTOPIC_FACTORS.0;
        } else if k > 0 && spec.ectopic_beats.contains(&(k - 1)) {
            ibi *= ECTOPIC_FACTORS.1;
        }
        t += ibi;
        if t > last_sample {
            break;
        }
        times.push(t);
        k += 1;
    }
    if times.len() < 4 {
        return Err(invalid("record holds fewer than three complete cycles"));
    }
    Ok(times)
}

pub fn generate_subject(spec: &SubjectSpec) -> Result<SubjectData> {
    spec.validate()?;
    let geo = Geometry::new(spec)?;
    let rpeaks = draw_rpeaks(spec)?;
    let ibis: Vec<f64> = rpeaks.windows(2).map(|w| w[1] - w[0]).collect();
    let ectopic_intervals = ectopic_intervals(spec, ibis.len());

    let maps: Vec<CycleMap> = ibis.iter().map(|ibi| geo.map(&spec.warp, *ibi)).collect();
    // The tail past the last R-peak continues with a reference-length cycle.
    let tail = geo.map(&spec.warp, geo.t_ref);

    let n = sample_count(spec);
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    rng.set_stream(1);
    let mut values = Vec::with_capacity(n);
    let mut cycle = 0usize;
    for j in 0..n {
        let t = j as f64 / spec.sample_rate;
        while cycle + 1 < rpeaks.len() && t >= rpeaks[cycle + 1] {
            cycle += 1;
        }
        let s = t - rpeaks[cycle];
        let (map, ibi) = match maps.get(cycle) {
            Some(m) => (m, ibis[cycle]),
            None => (&tail, geo.t_ref),
        };
        let clean =
            amplitude_factor(&spec.warp, ibi, geo.t_ref) * geo.value(&spec.template, map.tau(s));
        let noise: f64 = if spec.noise_sigma > 0.0 {
            spec.noise_sigma * rng.sample::<f64, _>(StandardNormal)
        } else {
            0.0
        };
        values.push(clean + noise);
    }

    let truth = GroundTruth {
        subject: spec.id.clone(),
        template: spec.template.clone(),
        base_ibi: spec.base_ibi,
        planted_d: spec.planted_d,
        noise_sigma: spec.noise_sigma,
        warp: spec.warp,
        reference: cycle_markers(spec, &geo, geo.t_ref, true)?,
        template_markers: template_markers(&spec.template, spec.base_ibi)?,
        bins: bin_truth(spec, &geo, &ibis, &ectopic_intervals)?,
        ibis,
        ectopic_intervals,
    };
    Ok(SubjectData {
        spec: spec.clone(),
        ppg: UniformSeries::new(0.0, spec.sample_rate, values)?,
        rpeaks: EventTrain::new(rpeaks)?,
        truth,
    })
}

fn ectopic_intervals(spec: &SubjectSpec, n: usize) -> Vec<usize> {
    let mut out: Vec<usize> = spec
        .ectopic_beats
        .iter()
        .flat_map(|&k| [k, k + 1])
        .filter(|&k| k < n)
        .collect();
    out.sort_unstable();
    out.dedup();
    out
}

/// Dense-scan markers of the unrotated template over one cycle of `period`.
pub fn template_markers(t: &Template, period: f64) -> Result<TrueMarkers> {
    let n = DENSE_POINTS;
    let u = |k: usize| k as f64 / n as f64;
    let values: Vec<f64> = (0..n).map(|k| t.value(u(k))).collect();
    let phase: Vec<f64> = (0..n)
        .map(|k| {
            let (re, im) = t.analytic(u(k));
            im.atan2(re)
        })
        .collect();
    scan_markers(&values, Some(&phase), period)
}

/// Noise-free cycle of length `ibi` sampled at `ibi · k / n`, R-peak at 0.
pub fn cycle_waveform(spec: &SubjectSpec, ibi: f64, n: usize) -> Result<Vec<f64>> {
    let geo = Geometry::new(spec)?;
    let map = geo.map(&spec.warp, ibi);
    let amp = amplitude_factor(&spec.warp, ibi, geo.t_ref);
    Ok((0..n)
        .map(|k| amp * geo.value(&spec.template, map.tau(k as f64 * ibi / n as f64)))
        .collect())
}

/// Dense-scan markers of the warped cycle of length `ibi`.
fn cycle_markers(
    spec: &SubjectSpec,
    geo: &Geometry,
    ibi: f64,
    with_phase: bool,
) -> Result<TrueMarkers> {
    let n = DENSE_POINTS;
    let map = geo.map(&spec.warp, ibi);
    let amp = amplitude_factor(&spec.warp, ibi, geo.t_ref);
    let taus: Vec<f64> = (0..n).map(|k| map.tau(k as f64 * ibi / n as f64)).collect();
    let values: Vec<f64> = taus
        .iter()
        .map(|tau| amp * geo.value(&spec.template, *tau))
        .collect();
    let phase: Option<Vec<f64>> = with_phase.then(|| {
        taus.iter()
            .map(|tau| geo.phase(&spec.template, *tau))
            .collect()
    });
    scan_markers(&values, phase.as_deref(), ibi)
}

/// Medians `(T_D, T_N, T_I)` of the quarter/half/quarter IBI split, after
/// dropping ectopic intervals and intervals outside 0.7–1.3 × the median.
pub fn ibi_bin_medians(ibis: &[f64], ectopic: &[usize]) -> Option<(f64, f64, f64)> {
    let kept = kept_sorted(ibis, ectopic)?;
    let (lo, mid, hi) = split_sorted(&kept);
    Some((
        median_of_sorted(lo),
        median_of_sorted(mid),
        median_of_sorted(hi),
    ))
}

fn kept_sorted(ibis: &[f64], ectopic: &[usize]) -> Option<Vec<f64>> {
    let mut all = ibis.to_vec();
    all.sort_by(f64::total_cmp);
    if all.is_empty() {
        return None;
    }
    let med = median_of_sorted(&all);
    let mut kept: Vec<f64> = ibis
        .iter()
        .enumerate()
        .filter(|(k, ibi)| !ectopic.contains(k) && **ibi >= 0.7 * med && **ibi <= 1.3 * med)
        .map(|(_, ibi)| *ibi)
        .collect();
    if kept.len() < 4 {
        return None;
    }
    kept.sort_by(f64::total_cmp);
    Some(kept)
}

fn split_sorted(kept: &[f64]) -> (&[f64], &[f64], &[f64]) {
    let n = kept.len();
    let k = (n - 1) / 4 + 1;
    (&kept[..k], &kept[k..n - k], &kept[n - k..])
}

fn median_of_sorted(v: &[f64]) -> f64 {
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

fn bin_truth(
    spec: &SubjectSpec,
    geo: &Geometry,
    ibis: &[f64],
    ectopic: &[usize],
) -> Result<Option<BinTruth>> {
    let Some(kept) = kept_sorted(ibis, ectopic) else {
        return Ok(None);
    };
    let (lo, mid, hi) = split_sorted(&kept);
    let bin = |slice: &[f64]| -> Result<BinMarkers> {
        let median_ibi = median_of_sorted(slice);
        Ok(BinMarkers {
            median_ibi,
            n_cycles: slice.len(),
            markers: cycle_markers(spec, geo, median_ibi, false)?,
        })
    };
    let decreased = bin(lo)?;
    let normal = bin(mid)?;
    let increased = bin(hi)?;
    Ok(Some(BinTruth {
        r_d: decreased.median_ibi / normal.median_ibi,
        r_i: increased.median_ibi / normal.median_ibi,
        decreased,
        normal,
        increased,
    }))
}

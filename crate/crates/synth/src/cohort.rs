//! Cohorts with planted cross-subject structure: the linear `d`–`d_zm`
//! relation, an IBI-dependent D shift for the large-increase group and a
//! harmonic boost for the highest-IBI subjects.

use ppgproto_core::segmentation::Epoch;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{invalid, Result, SynthError};
use crate::subject::{
    draw_rpeaks, generate_subject, ibi_bin_medians, SubjectData, SubjectSpec, Warp,
};
use crate::template::{Profile, Template};

/// Template draws allowed per subject before giving up.
pub const MAX_TEMPLATE_DRAWS: usize = 100_000;

pub const BREATH_HOLD: &str = "breath_hold";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CohortSpec {
    pub n_subjects: usize,
    pub seed: u64,
    pub duration_s: f64,
    pub sample_rate_hz: f64,
    /// Harmonic components per template (1..=5).
    pub components: usize,
    pub base_ibi_range_s: [f64; 2],
    pub ibi_variability_range: [f64; 2],
    /// Noise std relative to the template peak.
    pub noise_fraction: f64,
    pub k1_s: f64,
    pub k2: f64,
    /// Std of the residual `e` in `d = k1 + k2·d_zm + e`.
    pub d_noise_s: f64,
    /// Target `d_zm` range in cycle fractions. Subject targets sit at
    /// arcsine-spaced quantiles of the range, denser towards both ends.
    pub d_zm_range: [f64; 2],
    /// Draw the residuals `e` as shuffled normal quantiles instead of
    /// independent normals.
    pub stratified_residuals: bool,
    /// Planted D shift between the I and N bins of LI subjects.
    pub li_d_shift_s: f64,
    /// Planted amplitude ratio between the I and N bins of LI subjects.
    pub li_amplitude_ratio: f64,
    /// Gain on the first harmonic for the highest-IBI group.
    pub high_ibi_first_harmonic_gain: f64,
    /// Size of each outer base-IBI group; `None` means `n_subjects / 3`.
    pub outer_group_size: Option<usize>,
    pub epochs: Vec<Epoch>,
    pub ectopic_per_subject: usize,
    /// Use one template for everybody (makes `d_zm` degenerate).
    pub shared_template: Option<Template>,
}

impl Default for CohortSpec {
    fn default() -> Self {
        Self {
            n_subjects: 25,
            seed: 1,
            duration_s: 300.0,
            sample_rate_hz: 40.0,
            components: 5,
            base_ibi_range_s: [0.85, 1.15],
            ibi_variability_range: [0.02, 0.05],
            noise_fraction: 0.05,
            k1_s: 0.12,
            k2: 0.9,
            d_noise_s: 0.02,
            d_zm_range: [-0.07, 0.07],
            stratified_residuals: true,
            li_d_shift_s: 0.03,
            li_amplitude_ratio: 1.0,
            high_ibi_first_harmonic_gain: 2.0,
            outer_group_size: None,
            epochs: vec![
                Epoch {
                    start: 60.0,
                    end: 90.0,
                    label: BREATH_HOLD.into(),
                },
                Epoch {
                    start: 180.0,
                    end: 210.0,
                    label: BREATH_HOLD.into(),
                },
            ],
            ectopic_per_subject: 0,
            shared_template: None,
        }
    }
}

impl CohortSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_subjects < 2 {
            return Err(invalid("a cohort needs at least two subjects"));
        }
        let ordered = |r: [f64; 2]| r[0].is_finite() && r[1].is_finite() && r[0] <= r[1];
        if !ordered(self.base_ibi_range_s) || !(self.base_ibi_range_s[0] > 0.0) {
            return Err(invalid(
                "base_ibi_range_s must be an ordered positive range",
            ));
        }
        if !ordered(self.ibi_variability_range) || self.ibi_variability_range[0] < 0.0 {
            return Err(invalid(
                "ibi_variability_range must be an ordered non-negative range",
            ));
        }
        if !ordered(self.d_zm_range)
            || self.d_zm_range[0] >= self.d_zm_range[1]
            || self.d_zm_range[0] <= -0.5
            || self.d_zm_range[1] > 0.5
        {
            return Err(invalid(
                "d_zm_range must be a non-empty range inside (-0.5, 0.5]",
            ));
        }
        if !(1..=5).contains(&self.components) {
            return Err(invalid("components must be between 1 and 5"));
        }
        let nonneg = |v: f64| v.is_finite() && v >= 0.0;
        if !nonneg(self.noise_fraction) || !nonneg(self.d_noise_s) {
            return Err(invalid("noise levels must be non-negative"));
        }
        if !(self.k1_s.is_finite() && self.k2.is_finite() && self.li_d_shift_s.is_finite()) {
            return Err(invalid("planted coefficients must be finite"));
        }
        if !(self.li_amplitude_ratio.is_finite() && self.li_amplitude_ratio > 0.0) {
            return Err(invalid("li_amplitude_ratio must be positive"));
        }
        if !(self.high_ibi_first_harmonic_gain.is_finite()
            && self.high_ibi_first_harmonic_gain > 0.0)
        {
            return Err(invalid("high_ibi_first_harmonic_gain must be positive"));
        }
        if let Some(t) = &self.shared_template {
            t.validate()?;
        }
        if 2 * self.outer_groups() > self.n_subjects {
            return Err(invalid("outer groups overlap"));
        }
        crate::subject::validate_epochs(&self.epochs, self.duration_s)
    }

    pub fn outer_groups(&self) -> usize {
        self.outer_group_size.unwrap_or(self.n_subjects / 3)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IbiGroupTag {
    Low,
    High,
}

/// What was planted for one subject.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantedSubject {
    pub id: String,
    pub seed: u64,
    pub base_ibi_s: f64,
    pub d_s: f64,
    /// `d_zm` of the reference cycle.
    pub d_zm_s: f64,
    /// The residual `e` of the planted relation.
    pub e_s: f64,
    pub large_increase: bool,
    pub ibi_group: Option<IbiGroupTag>,
    pub t_d_s: f64,
    pub t_n_s: f64,
    pub t_i_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CohortTruth {
    pub spec: CohortSpec,
    pub subjects: Vec<PlantedSubject>,
    pub warnings: Vec<String>,
}

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(GOLDEN);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Per-subject seed: SplitMix64 of the cohort seed offset by
/// `(index + 1) · golden ratio`.
pub fn sub_seed(seed: u64, index: usize) -> u64 {
    splitmix64(seed.wrapping_add((index as u64 + 1).wrapping_mul(GOLDEN)))
}

pub fn subject_id(index: usize) -> String {
    format!("s{:02}", index + 1)
}

struct Draft {
    rng: ChaCha8Rng,
    spec: SubjectSpec,
    e: f64,
    bins: (f64, f64, f64),
}

pub fn generate_cohort(spec: &CohortSpec) -> Result<(Vec<SubjectData>, CohortTruth)> {
    spec.validate()?;
    let n = spec.n_subjects;
    let mut cohort_rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut ibi_slots: Vec<usize> = (0..n).collect();
    ibi_slots.shuffle(&mut cohort_rng);
    let mut dzm_slots: Vec<usize> = (0..n).collect();
    dzm_slots.shuffle(&mut cohort_rng);
    let mut e_slots: Vec<usize> = (0..n).collect();
    e_slots.shuffle(&mut cohort_rng);
    let unit_normal = Normal::standard();

    let placeholder = Template::new(vec![1.0], vec![0.0])?;
    let mut drafts = Vec::with_capacity(n);
    for i in 0..n {
        let seed = sub_seed(spec.seed, i);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let [lo, hi] = spec.base_ibi_range_s;
        let base_ibi =
            lo + (ibi_slots[i] as f64 + rng.random_range(0.25..0.75)) / n as f64 * (hi - lo);
        let [vlo, vhi] = spec.ibi_variability_range;
        let variability = if vhi > vlo {
            rng.random_range(vlo..vhi)
        } else {
            vlo
        };
        let z: f64 = rng.sample(StandardNormal);
        let z = if spec.stratified_residuals {
            unit_normal.inverse_cdf((e_slots[i] as f64 + 0.5) / n as f64)
        } else {
            z
        };
        let e = spec.d_noise_s * z;
        let mut s = SubjectSpec::basic(
            subject_id(i),
            placeholder.clone(),
            base_ibi,
            0.0,
            rng.random(),
        );
        s.ibi_variability = variability;
        s.duration = spec.duration_s;
        s.sample_rate = spec.sample_rate_hz;
        s.epochs = spec.epochs.clone();
        let beats = (spec.duration_s / base_ibi) as usize;
        if spec.ectopic_per_subject > 0 && beats > 12 {
            let mut picks: Vec<usize> = (5..beats - 5).collect();
            picks.shuffle(&mut rng);
            picks.truncate(spec.ectopic_per_subject);
            picks.sort_unstable();
            s.ectopic_beats = picks;
        }
        let rpeaks = draw_rpeaks(&s)?;
        let ibis: Vec<f64> = rpeaks.windows(2).map(|w| w[1] - w[0]).collect();
        let ectopic: Vec<usize> = s.ectopic_beats.iter().flat_map(|&k| [k, k + 1]).collect();
        let bins = ibi_bin_medians(&ibis, &ectopic)
            .ok_or_else(|| invalid(format!("subject {} has too few cycles for IBI bins", s.id)))?;
        drafts.push(Draft {
            rng,
            spec: s,
            e,
            bins,
        });
    }

    let r_i: Vec<f64> = drafts.iter().map(|d| d.bins.2 / d.bins.1).collect();
    let median_r_i = median(&r_i);
    let mut by_ibi: Vec<usize> = (0..n).collect();
    by_ibi.sort_by(|&a, &b| drafts[a].spec.base_ibi.total_cmp(&drafts[b].spec.base_ibi));
    let outer = spec.outer_groups();
    let group = |i: usize| -> Option<IbiGroupTag> {
        let rank = by_ibi.iter().position(|&k| k == i).unwrap_or(0);
        if rank < outer {
            Some(IbiGroupTag::Low)
        } else if rank >= n - outer {
            Some(IbiGroupTag::High)
        } else {
            None
        }
    };

    let mut subjects = Vec::with_capacity(n);
    let mut planted = Vec::with_capacity(n);
    for (i, mut draft) in drafts.into_iter().enumerate() {
        let large_increase = r_i[i] > median_r_i;
        let ibi_group = group(i);
        let (t_d, t_n, t_i) = draft.bins;
        if large_increase && t_i > t_n {
            draft.spec.warp = Warp {
                d_slope: spec.li_d_shift_s / (t_i - t_n),
                log_amplitude_slope: spec.li_amplitude_ratio.ln() / (t_i - t_n),
            };
        }
        let gain = if ibi_group == Some(IbiGroupTag::High) {
            spec.high_ibi_first_harmonic_gain
        } else {
            1.0
        };
        let window = dzm_window(spec.d_zm_range, dzm_slots[i], n);
        let (data, d_zm) = place_subject(spec, &mut draft, gain, window)?;
        planted.push(PlantedSubject {
            id: draft.spec.id.clone(),
            seed: draft.spec.seed,
            base_ibi_s: draft.spec.base_ibi,
            d_s: draft.spec.planted_d,
            d_zm_s: d_zm * draft.spec.base_ibi,
            e_s: draft.e,
            large_increase,
            ibi_group,
            t_d_s: t_d,
            t_n_s: t_n,
            t_i_s: t_i,
        });
        subjects.push(data);
    }

    let mut warnings = Vec::new();
    if spec.shared_template.is_some() {
        warnings.push(
            "d_zm is constant across subjects; the relation d = k1 + k2·d_zm is unidentifiable"
                .into(),
        );
    }
    Ok((
        subjects,
        CohortTruth {
            spec: spec.clone(),
            subjects: planted,
            warnings,
        },
    ))
}

/// Draws templates until one is typical, falls in the subject's `d_zm`
/// stratum and fits the planted warp; then generates the subject.
fn place_subject(
    spec: &CohortSpec,
    draft: &mut Draft,
    gain: f64,
    window: (f64, f64),
) -> Result<(SubjectData, f64)> {
    let base_ibi = draft.spec.base_ibi;
    let plant =
        |draft: &mut Draft, template: Template, d_zm: f64| -> Option<Result<(SubjectData, f64)>> {
            let d = spec.k1_s + spec.k2 * d_zm * base_ibi + draft.e;
            if !(d > 0.0 && d < 0.5 * base_ibi) {
                return None;
            }
            let peak = template.value(template.max_position());
            draft.spec.template = template;
            draft.spec.planted_d = d;
            draft.spec.noise_sigma = spec.noise_fraction * peak;
            match generate_subject(&draft.spec) {
                Err(SynthError::InvalidSpec(_)) => None,
                other => Some(other.map(|data| (data, d_zm))),
            }
        };
    if let Some(shared) = &spec.shared_template {
        let t = shared.with_first_harmonic_gain(gain);
        let d_zm = Profile::of(&t).map(|p| p.d_zm).unwrap_or(0.0);
        return plant(draft, t, d_zm)
            .unwrap_or_else(|| Err(invalid("shared template cannot host the planted relation")));
    }
    for _ in 0..MAX_TEMPLATE_DRAWS {
        let t = Template::draw(&mut draft.rng, spec.components).with_first_harmonic_gain(gain);
        match t.quick_d_zm() {
            Some(q) if q >= window.0 - QUICK_SLACK && q < window.1 + QUICK_SLACK => {}
            _ => continue,
        }
        let Ok(c) = Profile::coarse(&t) else { continue };
        if !c.is_typical() || c.d_zm < window.0 - COARSE_SLACK || c.d_zm >= window.1 + COARSE_SLACK
        {
            continue;
        }
        let Ok(p) = Profile::of(&t) else { continue };
        let in_window = p.d_zm >= window.0 && p.d_zm < window.1;
        if !p.is_typical() || !in_window {
            continue;
        }
        if let Some(result) = plant(draft, t, p.d_zm) {
            return result;
        }
    }
    Err(SynthError::Exhausted(format!(
        "no template for subject {} with d_zm in [{:.3}, {:.3})",
        draft.spec.id, window.0, window.1
    )))
}

/// Tolerance of [`Template::quick_d_zm`], in cycle fractions.
const QUICK_SLACK: f64 = 0.02;

/// Tolerance of the coarse `d_zm` pre-screen, in cycle fractions.
const COARSE_SLACK: f64 = 0.01;

/// Acceptance window around the `slot`-th arcsine quantile of `range`.
fn dzm_window(range: [f64; 2], slot: usize, n: usize) -> (f64, f64) {
    let [lo, hi] = range;
    let q = (slot as f64 + 0.5) / n as f64;
    let centre = lo + (hi - lo) * 0.5 * (1.0 - (std::f64::consts::PI * q).cos());
    let half = 0.5 * (hi - lo) / n as f64;
    (centre - half, centre + half)
}

fn median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    if n % 2 == 1 {
        s[n / 2]
    } else {
        0.5 * (s[n / 2 - 1] + s[n / 2])
    }
}

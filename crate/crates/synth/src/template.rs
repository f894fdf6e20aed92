//! Closed-form cycle templates.
//!
//! A template is a zero-mean harmonic series over one cycle, `u ∈ [0, 1)`:
//! `g(u) = Σ_m A_m cos(2π (m+1) u + φ_m)`.

use std::f64::consts::{PI, TAU};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::oracle::{self, DENSE_POINTS};

/// Amplitude draw ranges for components 1..=4; the fundamental is fixed
/// at 1.
const AMPLITUDE_RANGES: [(f64, f64); 4] = [(0.2, 1.0), (0.05, 0.5), (0.0, 0.2), (0.0, 0.1)];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Template {
    pub amplitudes: Vec<f64>,
    #[serde(rename = "phases_rad")]
    pub phases: Vec<f64>,
}

impl Template {
    pub fn new(amplitudes: Vec<f64>, phases: Vec<f64>) -> Result<Self> {
        let t = Self { amplitudes, phases };
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<()> {
        if self.amplitudes.is_empty() || self.amplitudes.len() != self.phases.len() {
            return Err(invalid(
                "template needs matching, non-empty amplitude and phase lists",
            ));
        }
        if self
            .amplitudes
            .iter()
            .chain(&self.phases)
            .any(|v| !v.is_finite())
        {
            return Err(invalid("template values must be finite"));
        }
        if !(self.amplitudes[0] > 0.0) {
            return Err(invalid("template fundamental amplitude must be positive"));
        }
        if self.amplitudes.iter().any(|a| *a < 0.0) {
            return Err(invalid("template amplitudes must be non-negative"));
        }
        Ok(())
    }

    pub fn components(&self) -> usize {
        self.amplitudes.len()
    }

    fn terms(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        self.amplitudes
            .iter()
            .zip(&self.phases)
            .enumerate()
            .map(|(m, (a, p))| (*a, TAU * (m + 1) as f64, *p))
    }

    pub fn value(&self, u: f64) -> f64 {
        self.terms().map(|(a, w, p)| a * (w * u + p).cos()).sum()
    }

    pub fn derivative(&self, u: f64) -> f64 {
        self.terms()
            .map(|(a, w, p)| -a * w * (w * u + p).sin())
            .sum()
    }

    fn second_derivative(&self, u: f64) -> f64 {
        self.terms()
            .map(|(a, w, p)| -a * w * w * (w * u + p).cos())
            .sum()
    }

    /// Analytic signal `Σ A_m e^{i(2π(m+1)u + φ_m)}` as (re, im).
    pub fn analytic(&self, u: f64) -> (f64, f64) {
        self.terms().fold((0.0, 0.0), |(re, im), (a, w, p)| {
            let x = w * u + p;
            (re + a * x.cos(), im + a * x.sin())
        })
    }

    /// Analytic signal at `offset + k/n` for `k = 0..n`; the real part is
    /// `g` itself. One `sin_cos` per point, harmonics by repeated products.
    pub fn analytic_grid(&self, n: usize, offset: f64) -> Vec<(f64, f64)> {
        let rot: Vec<(f64, f64)> = self.phases.iter().map(|p| (p.cos(), p.sin())).collect();
        (0..n)
            .map(|k| {
                let (s1, c1) = (TAU * (offset + k as f64 / n as f64)).sin_cos();
                let (mut c, mut s) = (1.0, 0.0);
                let (mut re, mut im) = (0.0, 0.0);
                for (a, (pc, ps)) in self.amplitudes.iter().zip(&rot) {
                    (c, s) = (c * c1 - s * s1, s * c1 + c * s1);
                    re += a * (c * pc - s * ps);
                    im += a * (s * pc + c * ps);
                }
                (re, im)
            })
            .collect()
    }

    /// Samples `g(k/n)` for `k = 0..n`.
    pub fn sample(&self, n: usize) -> Vec<f64> {
        self.analytic_grid(n, 0.0)
            .into_iter()
            .map(|(re, _)| re)
            .collect()
    }

    /// Rough `d_zm` from a small grid: parabolic M, interpolated Z_H.
    pub fn quick_d_zm(&self) -> Option<f64> {
        let n = QUICK_POINTS;
        let g = self.analytic_grid(n, 0.0);
        let k = (0..n).max_by(|&a, &b| g[a].0.total_cmp(&g[b].0))?;
        let (l, c, r) = (g[(k + n - 1) % n].0, g[k].0, g[(k + 1) % n].0);
        let curv = l - 2.0 * c + r;
        let m = k as f64
            + if curv < 0.0 {
                0.5 * (l - r) / curv
            } else {
                0.0
            };
        let mut best: Option<(f64, f64)> = None;
        for j in 0..n {
            let ((re0, im0), (re1, im1)) = (g[j], g[(j + 1) % n]);
            if im0 <= 0.0 && im1 > 0.0 && (re0 > 0.0 || re1 > 0.0) {
                let pos = j as f64 + im0 / (im0 - im1);
                let back = (m - pos).rem_euclid(n as f64);
                if best.is_none_or(|(b, _)| back < b) {
                    best = Some((back, pos));
                }
            }
        }
        best.map(|(_, z)| cyclic((m - z) / n as f64, 1.0))
    }

    /// Copy with the first harmonic (second component) multiplied by `gain`.
    pub fn with_first_harmonic_gain(&self, gain: f64) -> Self {
        let mut t = self.clone();
        if let Some(a) = t.amplitudes.get_mut(1) {
            *a *= gain;
        }
        t
    }

    /// Copy advanced so that `g'(u) = g(u + offset)`.
    pub fn advanced(&self, offset: f64) -> Self {
        let mut t = self.clone();
        for (m, p) in t.phases.iter_mut().enumerate() {
            *p = wrap(*p + TAU * (m + 1) as f64 * offset);
        }
        t
    }

    /// Position of the global maximum in `[0, 1)`, Newton-polished from the
    /// best dense sample.
    pub fn max_position(&self) -> f64 {
        self.max_position_from(DENSE_POINTS)
    }

    fn max_position_from(&self, n: usize) -> f64 {
        let grid = self.analytic_grid(n, 0.0);
        let k = (0..n)
            .max_by(|&a, &b| grid[a].0.total_cmp(&grid[b].0))
            .unwrap_or(0);
        let mut u = k as f64 / n as f64;
        let h = 1.0 / n as f64;
        for _ in 0..20 {
            let g2 = self.second_derivative(u);
            if !(g2 < 0.0) {
                break;
            }
            let step = (self.derivative(u) / g2).clamp(-h, h);
            u -= step;
            if step.abs() < 1e-15 {
                break;
            }
        }
        u.rem_euclid(1.0)
    }

    /// One draw from the random family; not screened.
    pub fn draw<R: Rng + ?Sized>(rng: &mut R, components: usize) -> Self {
        let components = components.clamp(1, 5);
        let mut amplitudes = vec![1.0];
        let mut phases = vec![0.0];
        for &(lo, hi) in AMPLITUDE_RANGES.iter().take(components - 1) {
            amplitudes.push(rng.random_range(lo..=hi));
            phases.push(rng.random_range(-PI..PI));
        }
        Self { amplitudes, phases }
    }
}

/// Grid of [`Template::quick_d_zm`].
pub const QUICK_POINTS: usize = 64;

/// Resolution of the cheap pre-screen in [`Profile::coarse`].
pub const COARSE_POINTS: usize = 200;

/// Shape descriptors from a scan, in cycle fractions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Profile {
    pub down_crossings: usize,
    pub up_crossings: usize,
    pub phase_up_crossings: usize,
    /// Smallest analytic-signal magnitude relative to `A_0`.
    pub min_envelope: f64,
    /// Smallest `|phase|` (radians) further than 0.05 cycles from the Z_H
    /// crossing.
    pub phase_clearance: f64,
    /// Drop from the maximum to the next-highest local maximum, relative to
    /// the peak-to-peak range; 1 when there is a single local maximum.
    pub peak_margin: f64,
    /// Peak width over valley width at half prominence.
    pub width_ratio: f64,
    pub m: f64,
    pub f: f64,
    pub valley: f64,
    pub d: f64,
    pub d_zm: f64,
}

impl Profile {
    pub fn of(t: &Template) -> Result<Self> {
        Self::scan(t, DENSE_POINTS)
    }

    pub fn coarse(t: &Template) -> Result<Self> {
        Self::scan(t, COARSE_POINTS)
    }

    fn scan(t: &Template, n: usize) -> Result<Self> {
        let u_m = t.max_position_from(n);
        let analytic = t.analytic_grid(n, u_m);
        let values: Vec<f64> = analytic.iter().map(|(re, _)| *re).collect();
        let phase: Vec<f64> = analytic.iter().map(|(re, im)| im.atan2(*re)).collect();
        let min_envelope = analytic
            .iter()
            .map(|(re, im)| re.hypot(*im))
            .fold(f64::INFINITY, f64::min)
            / t.amplitudes[0];

        let (mut down, mut up, mut phase_up) = (0, 0, 0);
        let mut local_maxima = Vec::new();
        for k in 0..n {
            let (a, b) = (values[k], values[(k + 1) % n]);
            if a >= 0.0 && b < 0.0 {
                down += 1;
            }
            if a <= 0.0 && b > 0.0 {
                up += 1;
            }
            let (p, q) = (phase[k], phase[(k + 1) % n]);
            if p <= 0.0 && q > 0.0 && (q - p) < PI {
                phase_up += 1;
            }
            let prev = values[(k + n - 1) % n];
            if a > prev && a >= b {
                local_maxima.push(a);
            }
        }
        let (hi, lo) = values
            .iter()
            .fold((f64::MIN, f64::MAX), |(h, l), v| (h.max(*v), l.min(*v)));
        let half = 0.5 * (hi + lo);
        let above = values.iter().filter(|v| **v >= half).count();
        let width_ratio = above as f64 / (n - above).max(1) as f64;
        local_maxima.sort_by(|a, b| b.total_cmp(a));
        let peak_margin = match local_maxima.get(1) {
            Some(second) if hi > lo => (hi - second) / (hi - lo),
            _ => 1.0,
        };

        let markers = oracle::scan_markers(&values, Some(&phase), 1.0)?;
        let valley = values
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .map(|(k, _)| k as f64 / n as f64)
            .unwrap_or(0.0);
        let z = markers
            .z
            .ok_or_else(|| invalid("template has no upward analytic-phase crossing"))?;
        let phase_clearance = phase
            .iter()
            .enumerate()
            .filter(|(k, _)| cyclic(*k as f64 / n as f64 - z, 1.0).abs() > 0.05)
            .map(|(_, p)| p.abs())
            .fold(f64::INFINITY, f64::min);
        let off = |x: f64| (x + u_m).rem_euclid(1.0);
        Ok(Self {
            down_crossings: down,
            up_crossings: up,
            phase_up_crossings: phase_up,
            min_envelope,
            phase_clearance,
            peak_margin,
            width_ratio,
            m: u_m,
            f: off(markers.f),
            valley: off(valley),
            d: off(markers.d),
            d_zm: cyclic(markers.m - z, 1.0),
        })
    }

    /// Biphasic, sharp-peaked, with a clear maximum and a phase that stays
    /// away from zero except at Z_H.
    pub fn is_typical(&self) -> bool {
        self.down_crossings == 1
            && self.up_crossings == 1
            && self.phase_up_crossings == 1
            && self.min_envelope > 0.1
            && self.phase_clearance > 0.2
            && self.peak_margin > 0.15
            && self.width_ratio < 0.9
    }
}

/// Reduces into `(-period/2, period/2]`.
pub(crate) fn cyclic(x: f64, period: f64) -> f64 {
    let r = x.rem_euclid(period);
    if r > 0.5 * period {
        r - period
    } else {
        r
    }
}

fn wrap(p: f64) -> f64 {
    (p + PI).rem_euclid(TAU) - PI
}

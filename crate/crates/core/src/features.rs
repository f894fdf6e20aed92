//! Timing markers of a smoothed prototype.
//!
//! * M: position of the maximum (parabolic refinement).
//! * F: the downgoing zero-crossing that follows M.
//! * D: the upgoing zero-crossing that follows F.
//! * Z_H: the upward zero-crossing of the analytic-signal phase, taking the
//!   one nearest before M.
//!
//! Positions are measured from cycle time zero and converted to seconds via
//! the prototype's median IBI.

use alloc::vec::Vec;

use crate::dft::{self, Cpx};
use crate::error::{Error, Result};
use crate::harmonic::{energy, smooth};
use crate::math::{atan2, rem_euclid, wrap_phase, PI};
use crate::prototype::{argmax, Prototype};
use crate::series::{classify_crossing, Direction};

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MarkerSet {
    #[cfg_attr(feature = "serde", serde(rename = "m_pos_s"))]
    pub m_pos: f64,
    #[cfg_attr(feature = "serde", serde(rename = "f_pos_s"))]
    pub f_pos: f64,
    #[cfg_attr(feature = "serde", serde(rename = "d_pos_s"))]
    pub d_pos: f64,
    #[cfg_attr(feature = "serde", serde(rename = "z_pos_s"))]
    pub z_pos: f64,
    pub amplitude: f64,
    /// `m_pos - z_pos`, reduced into `(-IBI/2, IBI/2]`.
    #[cfg_attr(feature = "serde", serde(rename = "d_zm_s"))]
    pub d_zm: f64,
}

/// Marker positions in grid samples.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridMarkers {
    pub m: f64,
    pub f: f64,
    pub d: f64,
    pub amplitude: f64,
}

/// Parabolic-vertex refinement of the cyclic maximum: (position, value).
pub fn refined_maximum(w: &[f64]) -> (f64, f64) {
    let n = w.len();
    let k = argmax(w);
    let (a, b, c) = (w[(k + n - 1) % n], w[k], w[(k + 1) % n]);
    let denom = a - 2.0 * b + c;
    if !(denom < 0.0) {
        return (k as f64, b);
    }
    let delta = (0.5 * (a - c) / denom).clamp(-0.5, 0.5);
    let value = b - 0.25 * (a - c) * delta;
    (rem_euclid(k as f64 + delta, n as f64), value)
}

/// Crossings of a periodic sequence, including the wrap from the last
/// sample to the first. Positions are in samples, in `[0, N)`.
fn cyclic_crossings(w: &[f64], want: Direction) -> Vec<f64> {
    let n = w.len();
    (0..n)
        .filter_map(|k| {
            let (dir, offset) = classify_crossing(w[k], w[(k + 1) % n])?;
            (dir == want).then(|| rem_euclid(k as f64 + offset, n as f64))
        })
        .collect()
}

/// First position in `candidates` strictly after `from` going forward
/// around the cycle.
fn next_after(candidates: &[f64], from: f64, n: f64) -> Option<f64> {
    candidates
        .iter()
        .copied()
        .map(|c| {
            let mut gap = rem_euclid(c - from, n);
            if gap == 0.0 {
                gap = n;
            }
            (gap, c)
        })
        .min_by(|a, b| a.0.total_cmp(&b.0))
        .map(|(_, c)| c)
}

/// M, F and D of an already smoothed, zero-mean waveform, in samples.
pub fn mfd_on_grid(w: &[f64]) -> Result<GridMarkers> {
    let n = w.len() as f64;
    let (m, amplitude) = refined_maximum(w);
    let downs = cyclic_crossings(w, Direction::Down);
    let ups = cyclic_crossings(w, Direction::Up);
    let f = next_after(&downs, m, n)
        .ok_or_else(|| Error::undeterminable("no downgoing zero-crossing"))?;
    let d =
        next_after(&ups, f, n).ok_or_else(|| Error::undeterminable("no upgoing zero-crossing"))?;
    Ok(GridMarkers { m, f, d, amplitude })
}

/// M, F, D (seconds) and the peak amplitude. The prototype is expected to be
/// smoothed and zero-mean already.
pub fn extract_mfd(p: &Prototype) -> Result<(f64, f64, f64, f64)> {
    let g = mfd_on_grid(&p.waveform)?;
    let dt = p.sample_period();
    Ok((g.m * dt, g.f * dt, g.d * dt, g.amplitude))
}

/// Instantaneous phase of the analytic signal, in `[-π, π)`.
///
/// The analytic signal keeps DC and Nyquist, doubles the positive-frequency
/// bins and zeroes the negative ones.
pub fn analytic_phase(w: &[f64]) -> Result<Vec<f64>> {
    Ok(analytic_signal(w)?
        .into_iter()
        .map(|c| wrap_phase(atan2(c.im, c.re)))
        .collect())
}

/// Analytic signal as `(re, im)` pairs.
pub fn analytic_components(w: &[f64]) -> Result<Vec<(f64, f64)>> {
    Ok(analytic_signal(w)?
        .into_iter()
        .map(|c| (c.re, c.im))
        .collect())
}

fn analytic_signal(w: &[f64]) -> Result<Vec<Cpx>> {
    if w.len() < 2 || w.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid(
            "analytic signal needs at least two finite samples",
        ));
    }
    if energy(w) == 0.0 {
        return Err(Error::undeterminable("phase of a zero signal"));
    }
    let n = w.len();
    let mut spectrum = dft::forward(w);
    for (j, x) in spectrum.iter_mut().enumerate() {
        if j == 0 || 2 * j == n {
            continue;
        }
        if 2 * j < n {
            x.re *= 2.0;
            x.im *= 2.0;
        } else {
            *x = Cpx::default();
        }
    }
    Ok(dft::inverse(&spectrum))
}

/// Z_H in samples: the upward zero-crossing of the analytic phase nearest
/// before `m` (cyclically). Jumps of more than π between neighbours are
/// phase wraps and are not crossings.
pub fn zh_on_grid(w: &[f64], m: f64) -> Result<f64> {
    let phase = analytic_phase(w)?;
    let n = phase.len();
    let nf = n as f64;
    let ups: Vec<f64> = (0..n)
        .filter_map(|k| {
            let (a, b) = (phase[k], phase[(k + 1) % n]);
            if (b - a).abs() >= PI {
                return None;
            }
            match classify_crossing(a, b)? {
                (Direction::Up, offset) => Some(rem_euclid(k as f64 + offset, nf)),
                _ => None,
            }
        })
        .collect();
    ups.iter()
        .copied()
        .map(|z| {
            let mut back = rem_euclid(m - z, nf);
            // a crossing sitting on M up to rounding counts as "before"
            if nf - back < 1e-9 {
                back = 0.0;
            }
            (back, z)
        })
        .min_by(|a, b| a.0.total_cmp(&b.0))
        .map(|(_, z)| z)
        .ok_or_else(|| Error::undeterminable("analytic phase has no upward zero-crossing"))
}

/// Z_H in seconds for a smoothed prototype.
pub fn extract_zh(p: &Prototype) -> Result<f64> {
    let (m, _) = refined_maximum(&p.waveform);
    Ok(zh_on_grid(&p.waveform, m)? * p.sample_period())
}

/// Cyclic difference `a - b` reduced into `(-period/2, period/2]`.
pub fn cyclic_difference(a: f64, b: f64, period: f64) -> f64 {
    let d = rem_euclid(a - b, period);
    if d > 0.5 * period {
        d - period
    } else {
        d
    }
}

/// All markers of a smoothed waveform, in samples; Z_H is the fourth
/// element.
pub fn markers_on_grid(w: &[f64]) -> Result<(GridMarkers, f64)> {
    let g = mfd_on_grid(w)?;
    let z = zh_on_grid(w, g.m)?;
    Ok((g, z))
}

/// Smooths the prototype (five components) and extracts every marker.
pub fn extract_markers(p: &Prototype) -> Result<MarkerSet> {
    let smoothed = smooth(&p.waveform)?;
    let (g, z) = markers_on_grid(&smoothed)?;
    let dt = p.sample_period();
    let n = p.grid_size as f64;
    Ok(MarkerSet {
        m_pos: g.m * dt,
        f_pos: g.f * dt,
        d_pos: g.d * dt,
        z_pos: z * dt,
        amplitude: g.amplitude,
        d_zm: cyclic_difference(g.m, z, n) * dt,
    })
}

/// Position (seconds) of the steepest descent of the smoothed prototype,
/// taken at the midpoint of the most negative first difference.
pub fn max_slope_position(p: &Prototype) -> Result<f64> {
    let s = smooth(&p.waveform)?;
    let n = s.len();
    let k = (0..n)
        .min_by(|&a, &b| (s[(a + 1) % n] - s[a]).total_cmp(&(s[(b + 1) % n] - s[b])))
        .unwrap_or(0);
    Ok(rem_euclid(k as f64 + 0.5, n as f64) * p.sample_period())
}

//! Brute-force marker scan over a densely sampled cycle.
//!
//! Deliberately self-contained: nothing here calls the pipeline crates, so a
//! bug there cannot validate itself.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::template::cyclic;

/// Dense points per cycle: ten times the default prototype grid.
pub const DENSE_POINTS: usize = 1000;

/// Marker positions within one cycle, in the unit of the scanned period.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrueMarkers {
    #[serde(rename = "m_s")]
    pub m: f64,
    #[serde(rename = "f_s")]
    pub f: f64,
    #[serde(rename = "d_s")]
    pub d: f64,
    #[serde(rename = "z_s")]
    pub z: Option<f64>,
    #[serde(rename = "d_zm_s")]
    pub d_zm: Option<f64>,
    pub amplitude: f64,
}

/// M at the largest sample, F/D at the linearly interpolated sign changes
/// following it, Z_H at the upward phase crossing nearest before M.
pub fn scan_markers(values: &[f64], phase: Option<&[f64]>, period: f64) -> Result<TrueMarkers> {
    let n = values.len();
    if n < 3 {
        return Err(invalid("dense scan needs at least three points"));
    }
    let dt = period / n as f64;
    let mut k_m = 0;
    for (k, v) in values.iter().enumerate() {
        if *v > values[k_m] {
            k_m = k;
        }
    }
    let crossing = |from: usize, down: bool| -> Option<(usize, f64)> {
        (0..n).map(|i| (from + i) % n).find_map(|j| {
            let (a, b) = (values[j], values[(j + 1) % n]);
            let hit = if down {
                a >= 0.0 && b < 0.0
            } else {
                a <= 0.0 && b > 0.0
            };
            hit.then(|| (j, j as f64 + a / (a - b)))
        })
    };
    let (j_f, f) = crossing(k_m, true).ok_or_else(|| invalid("no downgoing crossing"))?;
    let (_, d) = crossing((j_f + 1) % n, false).ok_or_else(|| invalid("no upgoing crossing"))?;
    let m = k_m as f64;

    let z = phase.and_then(|ph| {
        let mut best: Option<(f64, f64)> = None;
        for j in 0..n {
            let (p, q) = (ph[j], ph[(j + 1) % n]);
            if p <= 0.0 && q > 0.0 && q - p < PI {
                let pos = j as f64 + p / (p - q);
                let back = (m - pos).rem_euclid(n as f64);
                if best.is_none_or(|(b, _)| back < b) {
                    best = Some((back, pos));
                }
            }
        }
        best.map(|(_, pos)| pos.rem_euclid(n as f64))
    });

    let wrap = |x: f64| x.rem_euclid(n as f64) * dt;
    Ok(TrueMarkers {
        m: m * dt,
        f: wrap(f),
        d: wrap(d),
        z: z.map(|z| z * dt),
        d_zm: z.map(|z| cyclic(m - z, n as f64) * dt),
        amplitude: values[k_m],
    })
}

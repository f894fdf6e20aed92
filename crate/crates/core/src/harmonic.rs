//! Truncated Fourier-series model of a cycle waveform.
//!
//! Component `m` (for `m = 0..=M`) oscillates `m + 1` times per cycle, so
//! `m = 0` is the fundamental:
//!
//! ```text
//! p(k) = Σ_{m=0}^{M} A_m cos(2π (m+1) k / N_s + φ_m) + e(k)
//! ```
//!
//! On a uniform grid the components are orthogonal, so the least-squares
//! fit is the DFT projection onto bins `1..=M+1` and the energy bookkeeping
//! is exact.

use alloc::vec;
use alloc::vec::Vec;

use crate::dft::{self, Cpx};
use crate::error::{Error, Result};
use crate::math::{atan2, cos, hypot, log10, sin, PI, TAU};
use crate::prototype::Prototype;

/// Floor for reported unmodeled energy when the residual vanishes exactly.
pub const UNMODELED_FLOOR_DB: f64 = -400.0;

/// Harmonic order used for smoothing: the fundamental plus four harmonics.
pub const SMOOTHING_ORDER: usize = 4;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct HarmonicFit {
    pub order: usize,
    pub grid_size: usize,
    pub amplitudes: Vec<f64>,
    /// Radians in `[-π, π)`.
    #[cfg_attr(feature = "serde", serde(rename = "phases_rad"))]
    pub phases: Vec<f64>,
    #[cfg_attr(feature = "serde", serde(skip))]
    pub residual: Vec<f64>,
    pub unmodeled_energy_db: f64,
}

impl HarmonicFit {
    /// Model evaluated on the fitting grid.
    pub fn model(&self) -> Vec<f64> {
        synthesize(&self.amplitudes, &self.phases, self.grid_size)
    }

    /// `Σ_k model(k)²`, from the amplitudes alone.
    pub fn modeled_energy(&self) -> f64 {
        let n = self.grid_size as f64;
        self.amplitudes
            .iter()
            .enumerate()
            .map(|(m, a)| {
                if 2 * (m + 1) == self.grid_size {
                    n * a * a
                } else {
                    n * a * a / 2.0
                }
            })
            .sum()
    }

    pub fn residual_energy(&self) -> f64 {
        energy(&self.residual)
    }
}

pub(crate) fn energy(values: &[f64]) -> f64 {
    values.iter().map(|v| v * v).sum()
}

/// Evaluates `Σ A_m cos(2π (m+1) k/N + φ_m)` on `k = 0..n`.
pub fn synthesize(amplitudes: &[f64], phases: &[f64], n: usize) -> Vec<f64> {
    (0..n)
        .map(|k| {
            amplitudes
                .iter()
                .zip(phases)
                .enumerate()
                .map(|(m, (a, phi))| {
                    let cycles = ((m + 1) * k) % n;
                    a * cos(TAU * cycles as f64 / n as f64 + phi)
                })
                .sum()
        })
        .collect()
}

fn check_waveform(waveform: &[f64]) -> Result<()> {
    if waveform.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("waveform contains non-finite samples"));
    }
    Ok(())
}

fn check_order(order: usize, grid_size: usize) -> Result<()> {
    if order + 1 > grid_size / 2 {
        return Err(Error::InvalidOrder { order, grid_size });
    }
    Ok(())
}

fn to_db(residual: f64, total: f64) -> f64 {
    if residual <= 0.0 {
        return UNMODELED_FLOOR_DB;
    }
    (10.0 * log10(residual / total)).max(UNMODELED_FLOOR_DB)
}

/// Amplitude and phase of the real component carried by bin `j`.
fn component(spectrum: &[Cpx], j: usize) -> (f64, f64) {
    let n = spectrum.len();
    let x = spectrum[j];
    let scale = if 2 * j == n { 1.0 } else { 2.0 };
    let amp = scale * hypot(x.re, x.im) / n as f64;
    let mut phase = atan2(x.im, x.re);
    if phase >= PI {
        phase -= TAU;
    }
    (amp, phase)
}

/// Fits components `m = 0..=order` to a zero-mean waveform.
///
/// Any DC left in the input ends up in the residual.
pub fn fit_harmonics(waveform: &[f64], order: usize) -> Result<HarmonicFit> {
    check_waveform(waveform)?;
    let n = waveform.len();
    check_order(order, n)?;
    let total = energy(waveform);
    if total == 0.0 {
        return Err(Error::undeterminable("waveform has zero energy"));
    }
    let spectrum = dft::forward(waveform);
    let (amplitudes, phases): (Vec<f64>, Vec<f64>) =
        (1..=order + 1).map(|j| component(&spectrum, j)).unzip();
    let model = synthesize(&amplitudes, &phases, n);
    let residual: Vec<f64> = waveform.iter().zip(&model).map(|(w, m)| w - m).collect();
    let unmodeled_energy_db = to_db(energy(&residual), total);
    Ok(HarmonicFit {
        order,
        grid_size: n,
        amplitudes,
        phases,
        residual,
        unmodeled_energy_db,
    })
}

/// Unmodeled energy in dB for every order `0..=max_order`.
///
/// Residual energies are accumulated from the top of the spectrum down, so
/// the curve is non-increasing in floating point as well as in exact
/// arithmetic.
pub fn unmodeled_energy_curve(waveform: &[f64], max_order: usize) -> Result<Vec<f64>> {
    check_waveform(waveform)?;
    let n = waveform.len();
    check_order(max_order, n)?;
    let total = energy(waveform);
    if total == 0.0 {
        return Err(Error::undeterminable("waveform has zero energy"));
    }
    let spectrum = dft::forward(waveform);
    let nf = n as f64;
    let bin_pair_energy = |j: usize| {
        if 2 * j == n {
            spectrum[j].norm_sqr() / nf
        } else {
            (spectrum[j].norm_sqr() + spectrum[n - j].norm_sqr()) / nf
        }
    };
    // residual[M] = DC + bins above M + 1
    let mut residual = vec![0.0; max_order + 1];
    let mut acc = spectrum[0].norm_sqr() / nf;
    for j in (max_order + 2..=n / 2).rev() {
        acc += bin_pair_energy(j);
    }
    for order in (0..=max_order).rev() {
        residual[order] = acc;
        acc += bin_pair_energy(order + 1);
    }
    Ok(residual.into_iter().map(|r| to_db(r, total)).collect())
}

/// Projection onto components `m = 0..=order`.
pub fn reconstruct(waveform: &[f64], order: usize) -> Result<Vec<f64>> {
    check_waveform(waveform)?;
    let n = waveform.len();
    check_order(order, n)?;
    let spectrum = dft::forward(waveform);
    let (amplitudes, phases): (Vec<f64>, Vec<f64>) =
        (1..=order + 1).map(|j| component(&spectrum, j)).unzip();
    Ok(synthesize(&amplitudes, &phases, n))
}

/// Keeps the fundamental and the first four harmonics.
pub fn smooth(waveform: &[f64]) -> Result<Vec<f64>> {
    reconstruct(waveform, SMOOTHING_ORDER)
}

/// Delays a periodic waveform by `shift` samples (fractional allowed) using
/// the Fourier shift theorem. The Nyquist bin, if any, is shifted as a real
/// cosine.
pub fn circular_shift(waveform: &[f64], shift: f64) -> Vec<f64> {
    let n = waveform.len();
    let mut spectrum = dft::forward(waveform);
    for (j, x) in spectrum.iter_mut().enumerate() {
        let freq = if 2 * j < n {
            j as f64
        } else if 2 * j == n {
            continue;
        } else {
            j as f64 - n as f64
        };
        let angle = -TAU * freq * shift / n as f64;
        let (c, s) = (cos(angle), sin(angle));
        *x = Cpx {
            re: x.re * c - x.im * s,
            im: x.re * s + x.im * c,
        };
    }
    if n.is_multiple_of(2) {
        let nyq = &mut spectrum[n / 2];
        nyq.re *= cos(PI * shift);
        nyq.im = 0.0;
    }
    dft::inverse_real(&spectrum)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum IbiGroup {
    LowIbi,
    HighIbi,
}

/// Unmodeled-energy values per group and order, ready for boxplots.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GroupedEnergy {
    pub orders: Vec<usize>,
    /// `low[i]` holds one dB value per low-IBI prototype at `orders[i]`.
    pub low: Vec<Vec<f64>>,
    pub high: Vec<Vec<f64>>,
}

pub fn energy_by_ibi_bins(
    prototypes: &[(&Prototype, IbiGroup)],
    orders: &[usize],
) -> Result<GroupedEnergy> {
    let count = |g| prototypes.iter().filter(|(_, group)| *group == g).count();
    if count(IbiGroup::LowIbi) == 0 || count(IbiGroup::HighIbi) == 0 {
        return Err(Error::insufficient(
            "both IBI groups need at least one prototype",
        ));
    }
    let max_order = orders.iter().copied().max().unwrap_or(0);
    let mut out = GroupedEnergy {
        orders: orders.to_vec(),
        low: vec![Vec::new(); orders.len()],
        high: vec![Vec::new(); orders.len()],
    };
    for (p, group) in prototypes {
        let curve = unmodeled_energy_curve(&p.waveform, max_order)?;
        let target = match group {
            IbiGroup::LowIbi => &mut out.low,
            IbiGroup::HighIbi => &mut out.high,
        };
        for (slot, &order) in target.iter_mut().zip(orders) {
            slot.push(curve[order]);
        }
    }
    Ok(out)
}

/// Assigns the `outer` lowest- and highest-IBI items to the two outer
/// groups; the rest get `None`. Ties keep input order.
pub fn outer_ibi_groups(ibis: &[f64], outer: usize) -> Result<Vec<Option<IbiGroup>>> {
    if outer == 0 || 2 * outer > ibis.len() {
        return Err(Error::insufficient(
            "outer IBI groups need 1 <= outer <= n/2",
        ));
    }
    let mut order: Vec<usize> = (0..ibis.len()).collect();
    order.sort_by(|&a, &b| ibis[a].total_cmp(&ibis[b]));
    let mut groups = vec![None; ibis.len()];
    for &i in &order[..outer] {
        groups[i] = Some(IbiGroup::LowIbi);
    }
    for &i in &order[ibis.len() - outer..] {
        groups[i] = Some(IbiGroup::HighIbi);
    }
    Ok(groups)
}

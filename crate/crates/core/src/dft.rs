//! Direct discrete Fourier transforms for short cycle grids.
//!
//! Cycle grids hold around a hundred samples, so the O(N²) transform is
//! cheap and exact index reduction `(j k) mod N` keeps the twiddles accurate.

use alloc::vec::Vec;

use crate::math::{cos, sin, TAU};

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub(crate) struct Cpx {
    pub re: f64,
    pub im: f64,
}

impl Cpx {
    pub fn norm_sqr(self) -> f64 {
        self.re * self.re + self.im * self.im
    }
}

struct Twiddles {
    cos: Vec<f64>,
    sin: Vec<f64>,
}

impl Twiddles {
    fn new(n: usize) -> Self {
        let (cos, sin) = (0..n)
            .map(|k| {
                let a = TAU * k as f64 / n as f64;
                (cos(a), sin(a))
            })
            .unzip();
        Self { cos, sin }
    }
}

/// `X_j = Σ_k x_k e^{-2πi jk/N}` for `j = 0..N`.
pub(crate) fn forward(x: &[f64]) -> Vec<Cpx> {
    let n = x.len();
    let tw = Twiddles::new(n);
    (0..n)
        .map(|j| {
            let mut acc = Cpx::default();
            for (k, &v) in x.iter().enumerate() {
                let idx = (j * k) % n;
                acc.re += v * tw.cos[idx];
                acc.im -= v * tw.sin[idx];
            }
            acc
        })
        .collect()
}

/// `x_k = (1/N) Σ_j X_j e^{+2πi jk/N}`.
pub(crate) fn inverse(spectrum: &[Cpx]) -> Vec<Cpx> {
    let n = spectrum.len();
    let tw = Twiddles::new(n);
    let scale = 1.0 / n as f64;
    (0..n)
        .map(|k| {
            let mut acc = Cpx::default();
            for (j, x) in spectrum.iter().enumerate() {
                let idx = (j * k) % n;
                let (c, s) = (tw.cos[idx], tw.sin[idx]);
                acc.re += x.re * c - x.im * s;
                acc.im += x.re * s + x.im * c;
            }
            Cpx {
                re: acc.re * scale,
                im: acc.im * scale,
            }
        })
        .collect()
}

/// Real part of the inverse transform.
pub(crate) fn inverse_real(spectrum: &[Cpx]) -> Vec<f64> {
    inverse(spectrum).into_iter().map(|c| c.re).collect()
}

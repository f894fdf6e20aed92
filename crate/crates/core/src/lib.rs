//! Signal-processing core for building per-subject PPG prototype waveforms.
//!
//! The crate is `no_std` (it needs `alloc`) and contains only pure
//! computation: cardiac-cycle segmentation from R-peaks or from the PPG
//! itself, pointwise median/IQR prototypes, truncated Fourier modelling,
//! timing markers (M, F, D and the analytic-phase zero Z_H), IBI-stratified
//! cohort analysis and the linear R-peak position predictor.
//!
//! All transcendental functions go through [`libm`] so results are
//! bit-identical with and without `std`.

#![no_std]
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod error;
pub mod features;
pub mod harmonic;
pub mod ibi;
pub mod predictor;
pub mod prototype;
pub mod segmentation;
pub mod series;
pub mod stats;

mod dft;
mod math;

pub use error::{Error, Result};
pub use features::{extract_markers, MarkerSet};
pub use harmonic::{fit_harmonics, smooth, unmodeled_energy_curve, HarmonicFit};
pub use prototype::{build_prototype, Prototype};
pub use segmentation::{Cycle, CycleSet, SegmentationMethod};
pub use series::{EventTrain, UniformSeries, ZeroCrossing};

/// Default number of samples per resampled cardiac cycle.
pub const DEFAULT_GRID_SIZE: usize = 100;

/// Default PPG frame rate in Hz.
pub const DEFAULT_SAMPLE_RATE: f64 = 40.0;

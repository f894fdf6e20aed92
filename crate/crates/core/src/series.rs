//! Uniformly sampled signals, event trains and the elementary operations on
//! them: mean removal, zero-crossing detection and linear resampling.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math::floor;

/// A uniformly sampled scalar signal.
///
/// Sample `j` sits at `start_time + j / sample_rate`.
#[derive(Debug, Clone, PartialEq)]
pub struct UniformSeries {
    start_time: f64,
    sample_rate: f64,
    values: Vec<f64>,
}

impl UniformSeries {
    pub fn new(start_time: f64, sample_rate: f64, values: Vec<f64>) -> Result<Self> {
        if !start_time.is_finite() {
            return Err(Error::invalid("start time must be finite"));
        }
        if !(sample_rate.is_finite() && sample_rate > 0.0) {
            return Err(Error::invalid("sample rate must be positive and finite"));
        }
        if values.len() < 2 {
            return Err(Error::invalid("a series needs at least two samples"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("series contains non-finite samples"));
        }
        Ok(Self {
            start_time,
            sample_rate,
            values,
        })
    }

    pub fn start_time(&self) -> f64 {
        self.start_time
    }

    pub fn sample_rate(&self) -> f64 {
        self.sample_rate
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn time_at(&self, index: usize) -> f64 {
        self.start_time + index as f64 / self.sample_rate
    }

    /// Time of the last sample.
    pub fn end_time(&self) -> f64 {
        self.time_at(self.values.len() - 1)
    }

    /// Same timing, new values. The caller guarantees equal length and
    /// finite values.
    pub(crate) fn with_values(&self, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), self.values.len());
        Self {
            start_time: self.start_time,
            sample_rate: self.sample_rate,
            values,
        }
    }

    /// Linear interpolation at time `t`; `t` is clamped to the support.
    pub fn interpolate(&self, t: f64) -> f64 {
        let n = self.values.len();
        let pos = (t - self.start_time) * self.sample_rate;
        if pos <= 0.0 {
            return self.values[0];
        }
        let last = (n - 1) as f64;
        if pos >= last {
            return self.values[n - 1];
        }
        let i = (floor(pos) as usize).min(n - 2);
        let frac = pos - i as f64;
        let (a, b) = (self.values[i], self.values[i + 1]);
        a + frac * (b - a)
    }

    /// Returns the series with its mean removed.
    pub fn zero_mean(&self) -> Self {
        self.with_values(remove_mean(&self.values))
    }
}

/// Strictly increasing event timestamps in seconds.
#[derive(Debug, Clone, PartialEq)]
pub struct EventTrain {
    times: Vec<f64>,
}

impl EventTrain {
    pub fn new(times: Vec<f64>) -> Result<Self> {
        if times.iter().any(|t| !t.is_finite()) {
            return Err(Error::invalid("event times must be finite"));
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::invalid("event times must be strictly increasing"));
        }
        Ok(Self { times })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Successive differences (the interbeat intervals).
    pub fn intervals(&self) -> Vec<f64> {
        self.times.windows(2).map(|w| w[1] - w[0]).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Direction {
    Down,
    Up,
}

/// Which crossings [`find_zero_crossings`] reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CrossingFilter {
    Down,
    Up,
    Both,
}

impl CrossingFilter {
    fn accepts(self, direction: Direction) -> bool {
        match self {
            CrossingFilter::Both => true,
            CrossingFilter::Down => direction == Direction::Down,
            CrossingFilter::Up => direction == Direction::Up,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZeroCrossing {
    pub time: f64,
    pub direction: Direction,
    /// Fractional position between the bracketing samples, in `[0, 1)`.
    pub offset: f64,
}

/// Classifies the transition from `a` to `b`.
///
/// Down: `a >= 0 > b`. Up: `a <= 0 < b`. A sample that is exactly zero is
/// attached to the crossing the following sample decides, so the two rules
/// are mirror images under negation.
pub(crate) fn classify_crossing(a: f64, b: f64) -> Option<(Direction, f64)> {
    if a >= 0.0 && b < 0.0 {
        Some((Direction::Down, a / (a - b)))
    } else if a <= 0.0 && b > 0.0 {
        Some((Direction::Up, a / (a - b)))
    } else {
        None
    }
}

/// Mean-removed copy of `values`.
///
/// A second pass removes the rounding residue of the first so the output
/// mean is at the level of a single ulp of the data.
pub(crate) fn remove_mean(values: &[f64]) -> Vec<f64> {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let mut out: Vec<f64> = values.iter().map(|v| v - mean).collect();
    let residue = out.iter().sum::<f64>() / n;
    if residue != 0.0 {
        out.iter_mut().for_each(|v| *v -= residue);
    }
    out
}

/// Mean-removed copy of a raw sample slice.
pub fn zero_mean(values: &[f64]) -> Result<Vec<f64>> {
    if values.is_empty() {
        return Err(Error::invalid(
            "cannot remove the mean of an empty sequence",
        ));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("sequence contains non-finite samples"));
    }
    Ok(remove_mean(values))
}

/// Locates sign changes of `s` by linear interpolation between the
/// bracketing samples. The result is sorted by time.
pub fn find_zero_crossings(s: &UniformSeries, filter: CrossingFilter) -> Vec<ZeroCrossing> {
    let dt = 1.0 / s.sample_rate;
    s.values
        .windows(2)
        .enumerate()
        .filter_map(|(j, w)| {
            let (direction, offset) = classify_crossing(w[0], w[1])?;
            filter.accepts(direction).then_some(ZeroCrossing {
                time: s.start_time + (j as f64 + offset) * dt,
                direction,
                offset,
            })
        })
        .collect()
}

/// Linearly interpolates `s` on `n` points covering `[t_start, t_end)`.
///
/// The grid excludes `t_end` so consecutive cycles tile time without
/// duplicating their shared boundary.
pub fn resample_to_grid(s: &UniformSeries, t_start: f64, t_end: f64, n: usize) -> Result<Vec<f64>> {
    if n < 2 {
        return Err(Error::invalid("resampling grid needs at least two points"));
    }
    if !(t_start.is_finite() && t_end.is_finite() && t_start < t_end) {
        return Err(Error::invalid(
            "resampling interval must satisfy start < end",
        ));
    }
    // Event times parsed from text can land an ulp outside the support.
    let slack = 1e-9 / s.sample_rate;
    if t_start < s.start_time - slack || t_end > s.end_time() + slack {
        return Err(Error::OutOfRange {
            start: t_start,
            end: t_end,
            support_start: s.start_time,
            support_end: s.end_time(),
        });
    }
    let step = (t_end - t_start) / n as f64;
    Ok((0..n)
        .map(|j| s.interpolate(t_start + j as f64 * step))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use proptest::prelude::*;

    fn series(rate: f64, values: Vec<f64>) -> UniformSeries {
        UniformSeries::new(0.0, rate, values).unwrap()
    }

    fn rms(values: &[f64]) -> f64 {
        libm::sqrt(values.iter().map(|v| v * v).sum::<f64>() / values.len() as f64)
    }

    #[test]
    fn construction_rejects_bad_input() {
        assert!(UniformSeries::new(0.0, 0.0, vec![1.0, 2.0]).is_err());
        assert!(UniformSeries::new(0.0, 40.0, vec![1.0]).is_err());
        assert!(UniformSeries::new(0.0, 40.0, vec![1.0, f64::NAN]).is_err());
        assert!(EventTrain::new(vec![0.0, 1.0, 1.0]).is_err());
        assert!(EventTrain::new(vec![0.0, f64::INFINITY]).is_err());
    }

    #[test]
    fn sample_times_follow_rate() {
        let s = UniformSeries::new(2.0, 40.0, vec![0.0; 81]).unwrap();
        assert_eq!(s.time_at(40), 3.0);
        assert_eq!(s.end_time(), 4.0);
    }

    #[test]
    fn zero_mean_examples() {
        assert_eq!(zero_mean(&[1.0, 3.0]).unwrap(), vec![-1.0, 1.0]);
        assert_eq!(zero_mean(&[5.0, 5.0, 5.0]).unwrap(), vec![0.0, 0.0, 0.0]);
        assert!(zero_mean(&[]).is_err());
        assert!(zero_mean(&[1.0, f64::NAN]).is_err());
    }

    #[test]
    fn zero_mean_of_random_series() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let values: Vec<f64> = (0..1000).map(|_| rng.random_range(-3.0..7.0)).collect();
        let s = series(40.0, values);
        let z = s.zero_mean();
        let mean = z.values().iter().sum::<f64>() / z.len() as f64;
        assert!(mean.abs() < 1e-12 * rms(s.values()), "mean {mean}");
        assert_eq!(z.len(), s.len());
        assert_eq!(z.sample_rate(), s.sample_rate());
        assert_eq!(z.start_time(), s.start_time());
    }

    #[test]
    fn crossings_by_interpolation() {
        let s = series(1.0, vec![1.0, -1.0, -1.0, 1.0]);
        let zc = find_zero_crossings(&s, CrossingFilter::Both);
        assert_eq!(zc.len(), 2);
        assert_eq!((zc[0].time, zc[0].direction), (0.5, Direction::Down));
        assert_eq!((zc[1].time, zc[1].direction), (2.5, Direction::Up));
        assert_eq!(find_zero_crossings(&s, CrossingFilter::Up).len(), 1);
        assert!(
            find_zero_crossings(&series(1.0, vec![1.0, 1.0, 1.0]), CrossingFilter::Both).is_empty()
        );
    }

    #[test]
    fn exact_zero_sample_is_attached_to_following_direction() {
        let zc = find_zero_crossings(&series(1.0, vec![1.0, 0.0, -1.0]), CrossingFilter::Both);
        assert_eq!(zc.len(), 1);
        assert_eq!(
            (zc[0].time, zc[0].direction, zc[0].offset),
            (1.0, Direction::Down, 0.0)
        );
        let zc = find_zero_crossings(&series(1.0, vec![1.0, 0.0, 1.0]), CrossingFilter::Both);
        assert_eq!(zc.len(), 1);
        assert_eq!((zc[0].time, zc[0].direction), (1.0, Direction::Up));
    }

    #[test]
    fn cosine_down_crossing() {
        let values: Vec<f64> = (0..40)
            .map(|j| libm::cos(2.0 * core::f64::consts::PI * j as f64 / 40.0))
            .collect();
        let zc = find_zero_crossings(&series(40.0, values), CrossingFilter::Down);
        assert_eq!(zc.len(), 1);
        assert!((zc[0].time - 0.25).abs() < 1e-3);
    }

    #[test]
    fn resampling_a_ramp() {
        let s = series(1.0, vec![0.0, 1.0, 2.0, 3.0]);
        assert_eq!(
            resample_to_grid(&s, 0.0, 3.0, 3).unwrap(),
            vec![0.0, 1.0, 2.0]
        );
        assert_eq!(
            resample_to_grid(&s, 0.0, 2.0, 4).unwrap(),
            vec![0.0, 0.5, 1.0, 1.5]
        );
        assert!(matches!(
            resample_to_grid(&s, -1.0, 2.0, 4),
            Err(Error::OutOfRange { .. })
        ));
        assert!(matches!(
            resample_to_grid(&s, 0.0, 3.5, 4),
            Err(Error::OutOfRange { .. })
        ));
        assert!(resample_to_grid(&s, 2.0, 1.0, 4).is_err());
        assert!(resample_to_grid(&s, 0.0, 1.0, 1).is_err());
    }

    #[test]
    fn resampled_sine_tracks_closed_form() {
        let tau = 2.0 * core::f64::consts::PI;
        let values: Vec<f64> = (0..=80).map(|j| libm::sin(tau * j as f64 / 40.0)).collect();
        let s = series(40.0, values);
        let out = resample_to_grid(&s, 0.3, 1.3, 100).unwrap();
        let worst = out
            .iter()
            .enumerate()
            .map(|(j, v)| (v - libm::sin(tau * (0.3 + j as f64 / 100.0))).abs())
            .fold(0.0, f64::max);
        assert!(worst < 0.005, "max deviation {worst}");
    }

    proptest! {
        #[test]
        fn negation_swaps_crossing_labels(values in prop::collection::vec(-5i32..5, 2..60)) {
            let values: Vec<f64> = values.into_iter().map(|v| v as f64 * 0.5).collect();
            let neg: Vec<f64> = values.iter().map(|v| -v).collect();
            let a = find_zero_crossings(&series(3.0, values), CrossingFilter::Both);
            let b = find_zero_crossings(&series(3.0, neg), CrossingFilter::Both);
            prop_assert_eq!(a.len(), b.len());
            for (x, y) in a.iter().zip(&b) {
                prop_assert!((x.time - y.time).abs() < 1e-9);
                prop_assert_ne!(x.direction, y.direction);
            }
        }

        #[test]
        fn resampling_is_exact_for_affine_signals(
            slope in -10.0f64..10.0,
            offset in -10.0f64..10.0,
            t0 in 0.0f64..2.0,
            len in 0.1f64..2.0,
            n in 2usize..200,
        ) {
            let values: Vec<f64> = (0..200).map(|j| offset + slope * j as f64 / 50.0).collect();
            let s = series(50.0, values);
            let out = resample_to_grid(&s, t0, t0 + len, n).unwrap();
            let step = len / n as f64;
            for (j, v) in out.iter().enumerate() {
                let expect = offset + slope * (t0 + j as f64 * step);
                prop_assert!((v - expect).abs() <= 1e-12 * (1.0 + expect.abs() + slope.abs()));
            }
        }

        #[test]
        fn zero_mean_is_idempotent(values in prop::collection::vec(-1e3f64..1e3, 2..300)) {
            let s = series(40.0, values);
            let once = s.zero_mean();
            let twice = once.zero_mean();
            let scale = rms(s.values()).max(f64::MIN_POSITIVE);
            for (a, b) in once.values().iter().zip(twice.values()) {
                prop_assert!((a - b).abs() <= 1e-12 * scale);
            }
        }
    }
}

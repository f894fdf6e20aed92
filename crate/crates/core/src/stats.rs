//! Order statistics and robust summaries.
//!
//! Quantiles use linear interpolation between order statistics: for `n`
//! sorted values the `p`-quantile sits at fractional rank `h = (n - 1) p`.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math::{floor, sqrt};

/// Type-7 quantile of already sorted data. `sorted` must be non-empty.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = floor(h) as usize;
    let frac = h - lo as f64;
    if frac == 0.0 || lo + 1 >= sorted.len() {
        sorted[lo]
    } else {
        sorted[lo] + frac * (sorted[lo + 1] - sorted[lo])
    }
}

/// Type-7 quantile of unsorted data.
pub fn quantile(values: &[f64], p: f64) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::invalid("quantile of an empty sequence"));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(quantile_sorted(&sorted, p))
}

pub fn median(values: &[f64]) -> Result<f64> {
    quantile(values, 0.5)
}

pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Standard deviation dividing by `n`.
pub fn population_std(values: &[f64]) -> f64 {
    let m = mean(values);
    sqrt(values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / values.len() as f64)
}

/// Quantile of a scratch buffer via selection rather than a full sort.
/// Reorders `buf`.
fn select_quantile(buf: &mut [f64], p: f64) -> f64 {
    let h = (buf.len() - 1) as f64 * p;
    let lo = floor(h) as usize;
    let frac = h - lo as f64;
    let (_, lo_val, upper) = buf.select_nth_unstable_by(lo, f64::total_cmp);
    let lo_val = *lo_val;
    if frac == 0.0 || upper.is_empty() {
        return lo_val;
    }
    let hi_val = upper
        .iter()
        .copied()
        .min_by(f64::total_cmp)
        .unwrap_or(lo_val);
    lo_val + frac * (hi_val - lo_val)
}

/// Per-sample lower quartile, median and upper quartile across equal-length
/// sequences.
#[derive(Debug, Clone, PartialEq)]
pub struct PointwiseQuartiles {
    pub q1: Vec<f64>,
    pub median: Vec<f64>,
    pub q3: Vec<f64>,
}

impl PointwiseQuartiles {
    pub fn iqr(&self) -> Vec<f64> {
        self.q3
            .iter()
            .zip(&self.q1)
            .map(|(hi, lo)| hi - lo)
            .collect()
    }
}

pub fn pointwise_quartiles<S: AsRef<[f64]>>(cycles: &[S]) -> Result<PointwiseQuartiles> {
    let first = cycles
        .first()
        .ok_or_else(|| Error::invalid("pointwise statistics need at least one cycle"))?;
    let len = first.as_ref().len();
    if cycles.iter().any(|c| c.as_ref().len() != len) {
        return Err(Error::invalid("cycles have unequal lengths"));
    }
    if cycles
        .iter()
        .any(|c| c.as_ref().iter().any(|v| !v.is_finite()))
    {
        return Err(Error::invalid("cycles contain non-finite samples"));
    }
    let mut column = Vec::with_capacity(cycles.len());
    let mut out = PointwiseQuartiles {
        q1: Vec::with_capacity(len),
        median: Vec::with_capacity(len),
        q3: Vec::with_capacity(len),
    };
    for k in 0..len {
        column.clear();
        column.extend(cycles.iter().map(|c| c.as_ref()[k]));
        out.q1.push(select_quantile(&mut column, 0.25));
        out.median.push(select_quantile(&mut column, 0.5));
        out.q3.push(select_quantile(&mut column, 0.75));
    }
    Ok(out)
}

/// Pointwise median and interquartile range across equal-length cycles.
pub fn pointwise_median_iqr<S: AsRef<[f64]>>(cycles: &[S]) -> Result<(Vec<f64>, Vec<f64>)> {
    let q = pointwise_quartiles(cycles)?;
    let iqr = q.iqr();
    Ok((q.median, iqr))
}

/// Boxplot summary with whiskers at the most extreme data within 1.5 IQR of
/// the quartiles.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BoxplotSummary {
    pub n: usize,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub whisker_low: f64,
    pub whisker_high: f64,
    pub outliers: Vec<f64>,
}

impl BoxplotSummary {
    pub const WHISKER_IQR_FACTOR: f64 = 1.5;

    pub fn from_values(values: &[f64]) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::invalid("boxplot of an empty sequence"));
        }
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        let q1 = quantile_sorted(&sorted, 0.25);
        let q3 = quantile_sorted(&sorted, 0.75);
        let fence = Self::WHISKER_IQR_FACTOR * (q3 - q1);
        let (lo_fence, hi_fence) = (q1 - fence, q3 + fence);
        let inside = || {
            sorted
                .iter()
                .copied()
                .filter(|v| *v >= lo_fence && *v <= hi_fence)
        };
        Ok(Self {
            n: sorted.len(),
            q1,
            median: quantile_sorted(&sorted, 0.5),
            q3,
            whisker_low: inside().next().unwrap_or(q1),
            whisker_high: inside().next_back().unwrap_or(q3),
            outliers: sorted
                .iter()
                .copied()
                .filter(|v| *v < lo_fence || *v > hi_fence)
                .collect(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use alloc::vec::Vec;
    use proptest::prelude::*;

    #[test]
    fn median_iqr_examples() {
        let (m, _) =
            pointwise_median_iqr(&[vec![1.0, 2.0], vec![3.0, 4.0], vec![100.0, 0.0]]).unwrap();
        assert_eq!(m, vec![3.0, 2.0]);
        let (m, iqr) = pointwise_median_iqr(&[vec![7.0, 8.0]]).unwrap();
        assert_eq!((m, iqr), (vec![7.0, 8.0], vec![0.0, 0.0]));
    }

    #[test]
    fn ragged_and_empty_inputs_are_rejected() {
        assert!(pointwise_median_iqr(&[vec![1.0, 2.0], vec![1.0]]).is_err());
        assert!(pointwise_median_iqr::<Vec<f64>>(&[]).is_err());
    }

    #[test]
    fn type7_quantiles() {
        let v = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(quantile(&v, 0.25).unwrap(), 1.75);
        assert_eq!(quantile(&v, 0.5).unwrap(), 2.5);
        assert_eq!(quantile(&v, 0.75).unwrap(), 3.25);
        assert_eq!(quantile(&[4.0], 0.9).unwrap(), 4.0);
    }

    #[test]
    fn population_std_of_symmetric_errors() {
        let s = population_std(&[-0.01, 0.0, 0.01]);
        assert!((s - libm::sqrt(200.0 / 3.0) * 1e-3).abs() < 1e-15);
    }

    #[test]
    fn boxplot_flags_outliers() {
        let b = BoxplotSummary::from_values(&[1.0, 2.0, 3.0, 4.0, 100.0]).unwrap();
        assert_eq!((b.q1, b.median, b.q3), (2.0, 3.0, 4.0));
        assert_eq!(b.outliers, vec![100.0]);
        assert_eq!((b.whisker_low, b.whisker_high), (1.0, 4.0));
    }

    proptest! {
        #[test]
        fn median_iqr_is_permutation_invariant(
            cycles in prop::collection::vec(prop::collection::vec(-50.0f64..50.0, 6), 1..30),
            seed in any::<u64>(),
        ) {
            use rand::seq::SliceRandom;
            use rand::SeedableRng;
            let mut shuffled = cycles.clone();
            shuffled.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
            let a = pointwise_median_iqr(&cycles).unwrap();
            let b = pointwise_median_iqr(&shuffled).unwrap();
            prop_assert_eq!(&a, &b);
            prop_assert!(a.1.iter().all(|v| *v >= 0.0));
        }
    }
}

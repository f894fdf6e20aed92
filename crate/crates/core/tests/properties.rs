use std::collections::BTreeSet;
use std::f64::consts::TAU;

use ppgproto_core::features::extract_mfd;
use ppgproto_core::prototype::build_prototype;
use ppgproto_core::segmentation::{
    bin_by_ibi, reject_outlier_cycles, reject_with_reference, SegmentationMethod,
};
use ppgproto_core::{smooth, Cycle, CycleSet, Prototype};
use proptest::prelude::*;

fn cycle_set(waves: &[Vec<f64>], ibis: &[f64]) -> CycleSet {
    let cycles = waves
        .iter()
        .zip(ibis)
        .enumerate()
        .map(|(i, (w, ibi))| Cycle {
            waveform: w.clone(),
            start: i as f64,
            ibi: *ibi,
            labels: BTreeSet::new(),
        })
        .collect();
    CycleSet::new(waves[0].len(), cycles).unwrap()
}

fn waves_and_ibis() -> impl Strategy<Value = (Vec<Vec<f64>>, Vec<f64>)> {
    (4usize..24, 1usize..30).prop_flat_map(|(grid, n)| {
        (
            prop::collection::vec(prop::collection::vec(-2.0f64..2.0, grid), n),
            prop::collection::vec(0.5f64..1.5, n),
        )
    })
}

/// Harmonic series with the given amplitudes/phases on an `n` grid, starting
/// at fractional offset `shift`.
fn series(amps: &[f64], phases: &[f64], n: usize, shift: f64) -> Vec<f64> {
    (0..n)
        .map(|k| {
            let u = k as f64 / n as f64 + shift;
            amps.iter()
                .zip(phases)
                .enumerate()
                .map(|(m, (a, p))| a * (TAU * (m + 1) as f64 * u + p).cos())
                .sum()
        })
        .collect()
}

fn proto(waveform: Vec<f64>) -> Prototype {
    let n = waveform.len();
    Prototype {
        grid_size: n,
        iqr: vec![0.0; n],
        q1: waveform.clone(),
        q3: waveform.clone(),
        waveform,
        n_cycles: 1,
        median_ibi: 1.0,
        method: SegmentationMethod::EcgBased,
        labels: Vec::new(),
    }
}

proptest! {
    #[test]
    fn prototype_ignores_cycle_order((waves, ibis) in waves_and_ibis(), seed in any::<u64>()) {
        let a = build_prototype(&cycle_set(&waves, &ibis), SegmentationMethod::EcgBased).unwrap();
        let mut order: Vec<usize> = (0..waves.len()).collect();
        let mut s = seed;
        for i in (1..order.len()).rev() {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            order.swap(i, (s >> 33) as usize % (i + 1));
        }
        let pw: Vec<Vec<f64>> = order.iter().map(|&i| waves[i].clone()).collect();
        let pi: Vec<f64> = order.iter().map(|&i| ibis[i]).collect();
        let b = build_prototype(&cycle_set(&pw, &pi), SegmentationMethod::EcgBased).unwrap();
        prop_assert_eq!(&a.waveform, &b.waveform);
        prop_assert_eq!(&a.iqr, &b.iqr);
        prop_assert_eq!(a.median_ibi, b.median_ibi);
        prop_assert!(a.iqr.iter().all(|v| *v >= 0.0));
    }

    #[test]
    fn rejection_with_frozen_median_is_idempotent(
        (waves, ibis) in waves_and_ibis(),
        low in 0.5f64..0.95,
        high in 1.05f64..1.6,
    ) {
        let cs = cycle_set(&waves, &ibis);
        let first = reject_outlier_cycles(&cs, low, high);
        prop_assume!(first.is_ok());
        let first = first.unwrap();
        prop_assert!(first.kept.len() <= cs.len());
        prop_assert_eq!(first.kept.len() + first.discarded, cs.len());
        let second = reject_with_reference(&first.kept, low, high, first.median_ibi).unwrap();
        prop_assert_eq!(second.discarded, 0);
        prop_assert_eq!(&second.kept, &first.kept);
    }

    #[test]
    fn ibi_bins_partition_the_cycles((waves, ibis) in waves_and_ibis()) {
        prop_assume!(waves.len() >= 4);
        let cs = cycle_set(&waves, &ibis);
        let bins = bin_by_ibi(&cs).unwrap();
        let mut starts: Vec<f64> = [&bins.low, &bins.mid, &bins.high]
            .iter()
            .flat_map(|b| b.cycles().iter().map(|c| c.start))
            .collect();
        starts.sort_by(f64::total_cmp);
        let all: Vec<f64> = cs.cycles().iter().map(|c| c.start).collect();
        prop_assert_eq!(starts, all);
        prop_assert_eq!(bins.low.len(), bins.high.len());
        let top = bins.low.cycles().iter().map(|c| c.ibi).fold(f64::MIN, f64::max);
        let bottom = bins.high.cycles().iter().map(|c| c.ibi).fold(f64::MAX, f64::min);
        prop_assert!(bins.mid.cycles().iter().all(|c| c.ibi >= top && c.ibi <= bottom));
    }

    #[test]
    fn markers_do_not_depend_on_grid_density(
        a1 in 0.1f64..0.5,
        p1 in -3.0f64..3.0,
        a2 in 0.0f64..0.2,
        p2 in -3.0f64..3.0,
        shift in 0.0f64..1.0,
    ) {
        let (amps, phases) = ([1.0, a1, a2], [0.0, p1, p2]);
        let coarse = smooth(&series(&amps, &phases, 100, shift)).unwrap();
        let fine = smooth(&series(&amps, &phases, 200, shift)).unwrap();
        let (c, f) = (extract_mfd(&proto(coarse)), extract_mfd(&proto(fine)));
        prop_assume!(c.is_ok() && f.is_ok());
        let ((cm, cf, cd, _), (fm, ff, fd, _)) = (c.unwrap(), f.unwrap());
        // both grids cover one second; half a coarse sample is 5 ms
        for (x, y) in [(cm, fm), (cf, ff), (cd, fd)] {
            let gap = (x - y).rem_euclid(1.0);
            prop_assert!(gap.min(1.0 - gap) <= 0.005, "{} vs {}", x, y);
        }
    }
}

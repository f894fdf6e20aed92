use std::f64::consts::PI;

use ppgproto_synth::{Profile, Template};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn template() -> impl Strategy<Value = Template> {
    (1usize..=5)
        .prop_flat_map(|m| {
            (
                prop::collection::vec(0.0..1.0f64, m),
                prop::collection::vec(-PI..PI, m),
            )
        })
        .prop_map(|(mut a, p)| {
            a[0] = 1.0;
            Template::new(a, p).unwrap()
        })
}

proptest! {
    #[test]
    fn grid_matches_direct_evaluation(t in template(), n in 3usize..300, off in -1.0..1.0f64) {
        for (k, (re, im)) in t.analytic_grid(n, off).into_iter().enumerate() {
            let u = off + k as f64 / n as f64;
            let (r2, i2) = t.analytic(u);
            prop_assert!((re - t.value(u)).abs() < 1e-9);
            prop_assert!((re - r2).abs() < 1e-9 && (im - i2).abs() < 1e-9);
        }
    }

    #[test]
    fn advanced_is_a_shift(t in template(), off in -1.0..1.0f64, u in 0.0..1.0f64) {
        prop_assert!((t.advanced(off).value(u) - t.value(u + off)).abs() < 1e-9);
    }

    #[test]
    fn max_position_beats_the_grid(t in template()) {
        let best = t.value(t.max_position());
        prop_assert!(t.sample(997).iter().all(|v| *v <= best + 1e-12));
    }

    #[test]
    fn quick_d_zm_tracks_the_dense_scan(seed in any::<u64>(), comps in 2usize..=5, gain in 1.0..3.0f64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (t, p) = std::iter::repeat_with(|| Template::draw(&mut rng, comps).with_first_harmonic_gain(gain))
            .find_map(|t| Profile::of(&t).ok().filter(Profile::is_typical).map(|p| (t, p)))
            .unwrap();
        let q = t.quick_d_zm().unwrap();
        prop_assert!((q - p.d_zm).abs() < 0.01);
    }
}

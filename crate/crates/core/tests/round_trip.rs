mod common;

use common::*;
use gaussphase::{
    canonicalize, default_sampling_grid, equivalence_distance, reconstruct, sampling_grid,
    CprError, Options, Refinement, Samples, Signal,
};
use num_complex::Complex;
use proptest::prelude::*;

fn samples_of(s: &Signal) -> Samples {
    s.hermite_samples(&default_sampling_grid(s.k_min(), s.k_max(), s.beta()))
        .unwrap()
}

fn rebuild(s: &Signal) -> Signal {
    reconstruct(
        &samples_of(s),
        s.k_min(),
        s.k_max(),
        s.lambda(),
        s.beta(),
        &Options::default(),
    )
    .unwrap()
    .signal
}

fn coeff_strategy(n: usize) -> impl Strategy<Value = Vec<Complex<f64>>> {
    prop::collection::vec((0.2f64..=1.0, 0.0f64..std::f64::consts::TAU), n + 1).prop_map(|v| {
        v.into_iter()
            .map(|(r, t)| Complex::from_polar(r, t))
            .collect()
    })
}

fn signal_strategy() -> impl Strategy<Value = Signal> {
    (1usize..=5, -3i64..=3)
        .prop_flat_map(|(n, k)| (coeff_strategy(n), Just(k)))
        .prop_map(|(c, k)| Signal::new(1.0, 1.0, k, c).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn exact_round_trip(s in signal_strategy()) {
        let d = equivalence_distance(&s, &rebuild(&s)).unwrap().distance;
        prop_assert!(d <= 1e-8, "distance {d:e}");
    }

    #[test]
    fn output_is_canonical(s in signal_strategy()) {
        let g = rebuild(&s);
        prop_assert_eq!(canonicalize(&g), g);
    }

    #[test]
    fn ambiguity_class_collapses(s in signal_strategy(), t in 0.0f64..std::f64::consts::TAU) {
        let z = Complex::from_polar(1.0, t);
        let base = rebuild(&s);
        for other in [s.scaled(z), s.conjugated().scaled(z)] {
            let a = samples_of(&s);
            let b = samples_of(&other);
            for (p, q) in a.points().iter().zip(b.points()) {
                prop_assert!((p.mag_f - q.mag_f).abs() <= 1e-12 * (1.0 + p.mag_f));
                prop_assert!((p.mag_df - q.mag_df).abs() <= 1e-12 * (1.0 + p.mag_df));
            }
            let d = equivalence_distance(&base, &rebuild(&other)).unwrap().distance;
            prop_assert!(d <= 1e-8, "distance {d:e}");
        }
    }

    #[test]
    fn translation_equivariant(s in signal_strategy(), shift in -4i64..=4) {
        let moved = s.shifted(shift);
        let back = rebuild(&moved).shifted(-shift);
        let d = equivalence_distance(&rebuild(&s), &back).unwrap().distance;
        prop_assert!(d <= 1e-8, "distance {d:e}");
    }

    #[test]
    fn real_signals_stay_real(
        n in 1usize..=5,
        k in -2i64..=2,
        mags in prop::collection::vec(0.2f64..=1.0, 6),
        signs in prop::collection::vec(any::<bool>(), 6),
    ) {
        let c: Vec<f64> = (0..=n).map(|i| if signs[i] { mags[i] } else { -mags[i] }).collect();
        let s = Signal::from_real(1.0, 1.0, k, &c).unwrap();
        let r = reconstruct(&samples_of(&s), k, k + n as i64, 1.0, 1.0, &Options::default()).unwrap();
        prop_assert_eq!(r.pivot_index, None);
        prop_assert!(r.signal.coeffs().iter().all(|c| c.im == 0.0));
        let d = equivalence_distance(&s, &r.signal).unwrap().distance;
        prop_assert!(d <= 1e-8, "distance {d:e}");
    }
}

#[test]
fn oversampled_grid_round_trip() {
    let mut g = rng(10);
    for n in 1..=5 {
        let s = random_signal(&mut g, 0, n, 1.0, 1.0);
        let grid = sampling_grid(0, n as i64, 1.0, 3 * (2 * n + 1));
        let set = s.hermite_samples(&grid).unwrap();
        let r = reconstruct(&set, 0, n as i64, 1.0, 1.0, &Options::default()).unwrap();
        assert!(equivalence_distance(&s, &r.signal).unwrap().distance <= 1e-8);
    }
}

#[test]
fn general_lattice_parameters() {
    let mut g = rng(11);
    for (lambda, beta) in [(0.5, 1.0), (2.0, 0.7), (1.0, 1.4)] {
        for n in 1..=4 {
            let s = random_signal(&mut g, -1, n, lambda, beta);
            let d = equivalence_distance(&s, &rebuild(&s)).unwrap().distance;
            assert!(d <= 1e-7, "lambda={lambda} beta={beta} N={n}: {d:e}");
        }
    }
}

#[test]
fn refinement_modes_agree_at_small_n() {
    let mut g = rng(12);
    for n in 1..=3 {
        let s = random_signal(&mut g, 0, n, 1.0, 1.0);
        for mode in [Refinement::Off, Refinement::Fallback, Refinement::Always] {
            let opts = Options::default().with_refinement(mode);
            let r = reconstruct(&samples_of(&s), 0, n as i64, 1.0, 1.0, &opts).unwrap();
            assert!(equivalence_distance(&s, &r.signal).unwrap().distance <= 1e-8);
        }
    }
}

#[test]
fn too_few_samples_names_required_count() {
    let s = random_signal(&mut rng(13), 0, 3, 1.0, 1.0);
    let set = s.hermite_samples(&[0.0, 0.5, 1.0]).unwrap();
    match reconstruct(&set, 0, 3, 1.0, 1.0, &Options::default()) {
        Err(CprError::InsufficientSamples { required, got }) => assert_eq!((required, got), (7, 3)),
        other => panic!("unexpected {other:?}"),
    }
}

#[test]
fn window_past_the_support_never_misleads() {
    let mut g = rng(14);
    for n in 1..=4 {
        let s = random_signal(&mut g, 0, n, 1.0, 1.0);
        let k_max = n as i64 + 2;
        let set = s
            .hermite_samples(&default_sampling_grid(0, k_max, 1.0))
            .unwrap();
        if let Ok(r) = reconstruct(&set, 0, k_max, 1.0, 1.0, &Options::default()) {
            assert!(equivalence_distance(&s, &r.signal).unwrap().distance <= 1e-6);
        }
    }
}

#[test]
fn window_missing_the_leading_index_is_rejected() {
    let s = random_signal(&mut rng(15), 0, 3, 1.0, 1.0);
    let set = s
        .hermite_samples(&default_sampling_grid(0, 3, 1.0))
        .unwrap();
    assert!(reconstruct(&set, 1, 4, 1.0, 1.0, &Options::default()).is_err());
}

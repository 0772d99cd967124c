use std::f64::consts::PI;

use endotomo::fock::FockVector;
use endotomo::qnd::{entangle, meter_distribution, InteractionConfig};
use endotomo::sampling::{Binning, Histogram, InverseCdfSampler, rng_from_seed};
use endotomo::wigner::wigner_transform;
use endotomo::{make_state, rotate_representation, Grid, Grid32, StateSpec, Wave};
use num_complex::Complex;
use proptest::prelude::*;

fn coherent(re: f64, im: f64) -> StateSpec<f64> {
    StateSpec::Coherent { alpha: Complex::new(re, im) }
}

fn max_diff(a: &Wave, b: &Wave) -> f64 {
    a.amplitudes().iter().zip(b.amplitudes()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn rotations_compose(a in -PI..PI, b in -PI..PI, re in -0.7..0.7f64, im in -0.7..0.7f64) {
        let psi = make_state(Grid::standard(), 0.0, &coherent(re, im)).unwrap();
        let two_step = rotate_representation(&rotate_representation(&psi, a), b);
        let direct = make_state(Grid::standard(), b, &coherent(re, im)).unwrap();
        let d = max_diff(&two_step, &direct);
        prop_assert!(d < 1e-8, "{}", d);
    }

    #[test]
    fn entangled_state_is_normalized(kappa in 0.0..1.0f64, phi in -PI..PI, delta in -PI..PI, re in -0.7..0.7f64, im in -0.7..0.7f64) {
        let cfg = InteractionConfig::new(kappa, phi, phi + delta).unwrap();
        let s = make_state(Grid::standard(), cfg.signal_angle(), &coherent(re, im)).unwrap();
        let meter_grid = Grid::symmetric(14.0, 1024).unwrap();
        let m = make_state(meter_grid, cfg.homodyne_angle(), &StateSpec::Vacuum).unwrap();
        let state = entangle(&s, &m, &cfg).unwrap();
        prop_assert!((state.norm_sqr() - 1.0).abs() < 1e-10);
        let w = meter_distribution(&state);
        prop_assert!(w.iter().all(|&v| v >= 0.0));
        prop_assert!((w.iter().sum::<f64>() * meter_grid.spacing() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn wigner_is_normalized_and_pure(n in 0usize..4, re in -1.0..1.0f64) {
        let spec = if n == 0 { StateSpec::Cat { alpha: Complex::new(re + 1.2, 0.3) } } else { StateSpec::Fock { n } };
        let w = wigner_transform(&make_state(Grid::standard(), 0.0, &spec).unwrap());
        prop_assert!((w.integral() - 1.0).abs() < 1e-8);
        prop_assert!((w.purity() * 2.0 * PI - 1.0).abs() < 1e-6);
        prop_assert!(w.max_abs() <= 1.0 / PI + 1e-9);
    }

    #[test]
    fn histograms_are_densities(seed in any::<u64>(), bins in 5usize..200) {
        let nodes: Vec<f64> = Grid::standard().points();
        let density: Vec<f64> = nodes.iter().map(|x| (-x * x).exp() / PI.sqrt()).collect();
        let sampler = InverseCdfSampler::new(&nodes, &density).unwrap();
        let samples = sampler.sample(&mut rng_from_seed(seed), 2_000);
        for rule in [Binning::FreedmanDiaconis, Binning::Count { bins }] {
            let h = Histogram::from_samples(&samples, rule).unwrap();
            prop_assert!((h.integral() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn sampling_is_reproducible(seed in any::<u64>()) {
        let nodes: Vec<f64> = Grid::standard().points();
        let density: Vec<f64> = nodes.iter().map(|x| x * x * (-x * x).exp()).collect();
        let sampler = InverseCdfSampler::new(&nodes, &density).unwrap();
        let a = sampler.sample(&mut rng_from_seed(seed), 500);
        let b = sampler.sample(&mut rng_from_seed(seed), 500);
        prop_assert_eq!(a, b);
    }
}

#[test]
fn number_basis_image_matches_closed_form() {
    let grid = Grid::standard();
    for spec in [
        StateSpec::Fock { n: 3 },
        coherent(0.7, -0.4),
        StateSpec::Cat { alpha: Complex::new(1.1, 0.2) },
        StateSpec::Squeezed {
            r: 0.4,
            epsilon: 0.9,
            displacement: Complex::new(0.3, 0.5),
        },
    ] {
        for angle in [0.0, 0.8, PI / 2.0] {
            let from_fock = FockVector::from_spec(64, &spec).unwrap().to_grid(&grid, angle);
            let direct = make_state(grid, angle, &spec).unwrap();
            assert!(max_diff(&from_fock, &direct) < 1e-8, "{spec:?} at {angle}");
        }
    }
}

#[test]
fn single_precision_tracks_double() {
    let cfg = InteractionConfig::out_of_phase(0.8, 0.3).unwrap();
    let spec = coherent(0.5, 0.2);
    let s = make_state(Grid::standard(), cfg.signal_angle(), &spec).unwrap();
    let m = make_state(Grid::standard(), cfg.homodyne_angle(), &StateSpec::Vacuum).unwrap();
    let w64 = meter_distribution(&entangle(&s, &m, &cfg).unwrap());

    let grid32 = Grid32::standard();
    let cfg32 = cfg.cast::<f32>();
    let spec32 = StateSpec::Coherent { alpha: Complex::new(0.5f32, 0.2) };
    let s32 = make_state(grid32, cfg32.signal_angle(), &spec32).unwrap();
    let m32 = make_state(grid32, cfg32.homodyne_angle(), &StateSpec::Vacuum).unwrap();
    let w32 = meter_distribution(&entangle(&s32, &m32, &cfg32).unwrap());
    let diff = w64.iter().zip(&w32).map(|(a, &b)| (a - f64::from(b)).abs()).fold(0.0, f64::max);
    assert!(diff < 1e-4, "{diff}");
}

//! Change of quadrature representation by the fractional Fourier transform.
//!
//! Moving from angle `θ` to `θ′` applies `e^{-iΔn̂}` with `Δ = θ′ − θ` to the
//! samples. Each elementary step of order `α` uses the kernel
//!
//! `K_α(x, y) = √(1 − i cot α)/√(2π) · exp[i cot α (x² + y²)/2 − i x y / sin α]`
//!
//! evaluated as chirp, chirp-z sum, chirp. Orders beyond `3π/4` are halved;
//! orders too small for the grid to sample the kernel are composed with a
//! quarter turn and its inverse.

use num_complex::Complex;

use crate::grid::QuadratureGrid;
use crate::quadrature::{Wavefunction, ANGLE_TOLERANCE};
use crate::scalar::{angle_difference, cis, from_usize, lit, Real};
use crate::spectral::ChirpZ;

/// The same physical state represented at `new_angle`.
pub fn rotate_representation<T: Real>(psi: &Wavefunction<T>, new_angle: T) -> Wavefunction<T> {
    let delta = angle_difference(new_angle, psi.angle());
    let samples = rotate_samples(psi.grid(), psi.amplitudes(), delta);
    Wavefunction::from_samples(*psi.grid(), samples, new_angle).expect("length preserved")
}

/// Applies `e^{-iΔn̂}` to grid samples.
pub fn rotate_samples<T: Real>(grid: &QuadratureGrid<T>, samples: &[Complex<T>], delta: T) -> Vec<Complex<T>> {
    let delta = angle_difference(delta, T::zero());
    let quarter = T::FRAC_PI_4();
    let half = T::FRAC_PI_2();
    let steps: Vec<T> = if delta.abs() < lit(ANGLE_TOLERANCE) {
        Vec::new()
    } else if delta.abs() > quarter * lit(3.0) {
        let h = delta * lit(0.5);
        vec![h, h]
    } else if well_sampled(grid, delta) {
        vec![delta]
    } else {
        let h = delta * lit(0.5);
        vec![half + h, h - half]
    };
    let mut out = samples.to_vec();
    for alpha in steps {
        out = frft_step(grid, &out, alpha);
    }
    out
}

/// The integrand of a step oscillates at most at `L(1 + |cos α|)/|sin α|`
/// over the grid half-width `L`; keep that well below the grid Nyquist rate.
fn well_sampled<T: Real>(grid: &QuadratureGrid<T>, alpha: T) -> bool {
    let reach = grid.x_min().abs().max(grid.x_max().abs());
    let (s, c) = alpha.sin_cos();
    let nyquist = T::PI() / grid.spacing();
    reach * (T::one() + c.abs()) <= lit::<T>(0.6) * nyquist * s.abs()
}

fn frft_step<T: Real>(grid: &QuadratureGrid<T>, samples: &[Complex<T>], alpha: T) -> Vec<Complex<T>> {
    let n = samples.len();
    let h = grid.spacing();
    let x0 = grid.x_min();
    let half = lit::<T>(0.5);
    let (s, c) = alpha.sin_cos();
    let cot = c / s;
    let inv_s = T::one() / s;
    let prefactor = Complex::new(T::one(), -cot).sqrt() / (T::PI() + T::PI()).sqrt() * h;

    let chirped: Vec<Complex<T>> = samples
        .iter()
        .enumerate()
        .map(|(k, &v)| {
            let y = grid.point(k);
            v * cis(cot * y * y * half)
        })
        .collect();
    let cz = ChirpZ::new(n, n, -h * h * inv_s);
    let sums = cz.apply(&chirped, -x0 * h * inv_s);
    let global = cis(-x0 * x0 * inv_s);
    sums.into_iter()
        .enumerate()
        .map(|(l, v)| {
            let x = grid.point(l);
            let lf = from_usize::<T>(l);
            v * prefactor * global * cis(cot * x * x * half - x0 * h * lf * inv_s)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::{make_fock, make_squeezed_vacuum, make_state, make_vacuum, SqueezedVacuumSpec, StateSpec};
    use std::f64::consts::PI;

    fn sup(a: &[Complex<f64>], b: &[Complex<f64>]) -> f64 {
        a.iter().zip(b).map(|(u, v)| (u - v).norm()).fold(0.0, f64::max)
    }

    #[test]
    fn zero_rotation_is_identity() {
        let g = QuadratureGrid::standard();
        let f = make_fock(g, 0.3, 3).unwrap();
        let r = rotate_representation(&f, 0.3);
        assert_eq!(r.amplitudes(), f.amplitudes());
    }

    #[test]
    fn fock_states_pick_up_number_phase() {
        let g = QuadratureGrid::standard();
        for &delta in &[PI / 2.0, 0.01, -0.4, 1.1, 2.5, -3.0, PI] {
            for n in [0usize, 1, 2, 5] {
                let f = make_fock(g, 0.0, n).unwrap();
                let r = rotate_representation(&f, delta);
                let want = make_fock(g, delta, n).unwrap();
                assert!(sup(r.amplitudes(), want.amplitudes()) < 1e-9, "n={n} Δ={delta}");
            }
        }
    }

    #[test]
    fn quarter_turn_is_fourier_transform() {
        // a displaced squeezed state has momentum wavefunction known in closed form
        let g = QuadratureGrid::standard();
        let spec = StateSpec::Squeezed { r: 0.4, epsilon: 0.4 - PI / 2.0, displacement: Complex::new(0.5, -0.8) };
        let psi = make_state(g, 0.2, &spec).unwrap();
        let rotated = rotate_representation(&psi, 0.2 + PI / 2.0);
        let want = make_state(g, 0.2 + PI / 2.0, &spec).unwrap();
        let e = sup(rotated.amplitudes(), want.amplitudes());
        assert!(e < 1e-9, "{e}");
    }

    #[test]
    fn vacuum_is_rotation_invariant_with_zero_phase() {
        let g = QuadratureGrid::standard();
        let v = make_vacuum(g, 0.0).unwrap();
        for &d in &[0.2, 1.0, -2.2] {
            let r = rotate_representation(&v, d);
            assert!(sup(r.amplitudes(), v.amplitudes()) < 1e-10);
        }
    }

    #[test]
    fn round_trip_of_squeezed_state() {
        let g = QuadratureGrid::new(-8.0, 8.0, 1024).unwrap();
        let s = make_squeezed_vacuum(g, 0.0, SqueezedVacuumSpec::new(1.5, 0.0).unwrap()).unwrap();
        let there = rotate_representation(&s, 0.3);
        let back = rotate_representation(&there, 0.0);
        let e = sup(back.amplitudes(), s.amplitudes());
        assert!(e < 1e-8, "{e}");
        assert!((there.norm_sqr() - 1.0).abs() < 1e-9);
    }
}

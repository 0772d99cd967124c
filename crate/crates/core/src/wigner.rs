//! Wigner functions and the convolution identities linking the signal, the
//! measurement filter and the conditional signal state.
//!
//! On a grid of spacing `h` the transform is the discrete form of
//! `W(x, p) = (1/2π) ∫ dy e^{ipy} ψ(x − y/2) ψ*(x + y/2)`:
//!
//! `W(x_k, p) = (h/π) Σ_j e^{2ipjh} ψ_{k−j} ψ*_{k+j}`,
//!
//! evaluated for a whole uniform `p` axis at once by a chirp-z transform.
//! Rows centred between grid nodes use band-limited shifts of the samples.

use num_complex::Complex;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::QuadratureGrid;
use crate::qnd::{condition_on_outcome, entangle, measurement_amplitude, prepared, ConditionalState, InteractionConfig};
use crate::quadrature::Wavefunction;
use crate::scalar::{cis, from_usize, lit, to_f64, Real};
use crate::spectral::{ChirpZ, SpectralShifter};

/// Angles `θ − φ` this close to `0` or `π` use the exact translation route.
pub const IN_PHASE_DISPATCH: f64 = 1e-3;

/// Real values over an `(x, p)` grid, row-major over `x`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real + Serialize + serde::de::DeserializeOwned")]
pub struct WignerGrid<T> {
    x_axis: QuadratureGrid<T>,
    p_axis: QuadratureGrid<T>,
    values: Vec<T>,
}

impl<T: Real> WignerGrid<T> {
    pub fn new(x_axis: QuadratureGrid<T>, p_axis: QuadratureGrid<T>, values: Vec<T>) -> Result<Self> {
        if values.len() != x_axis.len() * p_axis.len() {
            return Err(Error::GridMismatch(format!(
                "{} values for a {}×{} grid",
                values.len(),
                x_axis.len(),
                p_axis.len()
            )));
        }
        Ok(Self { x_axis, p_axis, values })
    }

    pub fn x_axis(&self) -> &QuadratureGrid<T> {
        &self.x_axis
    }

    pub fn p_axis(&self) -> &QuadratureGrid<T> {
        &self.p_axis
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn value(&self, i: usize, l: usize) -> T {
        self.values[i * self.p_axis.len() + l]
    }

    fn cell(&self) -> T {
        self.x_axis.spacing() * self.p_axis.spacing()
    }

    /// `∫∫ W dx dp`.
    pub fn integral(&self) -> T {
        self.values.iter().copied().sum::<T>() * self.cell()
    }

    /// `∫∫ W² dx dp`, equal to `1/2π` for a pure state.
    pub fn purity(&self) -> T {
        self.values.iter().map(|&v| v * v).sum::<T>() * self.cell()
    }

    pub fn max_abs(&self) -> T {
        self.values.iter().map(|v| v.abs()).fold(T::zero(), T::max)
    }

    /// Smallest value and where it sits.
    pub fn minimum(&self) -> (T, T, T) {
        let (k, v) = self
            .values
            .iter()
            .enumerate()
            .fold((0, T::infinity()), |(bk, bv), (k, &v)| if v < bv { (k, v) } else { (bk, bv) });
        let np = self.p_axis.len();
        (v, self.x_axis.point(k / np), self.p_axis.point(k % np))
    }

    /// `∫ W dp` at each `x`.
    pub fn x_marginal(&self) -> Vec<T> {
        let np = self.p_axis.len();
        let h = self.p_axis.spacing();
        self.values.chunks(np).map(|row| row.iter().copied().sum::<T>() * h).collect()
    }

    /// `∫ W dx` at each `p`.
    pub fn p_marginal(&self) -> Vec<T> {
        let np = self.p_axis.len();
        let h = self.x_axis.spacing();
        let mut out = vec![T::zero(); np];
        for row in self.values.chunks(np) {
            for (o, &v) in out.iter_mut().zip(row) {
                *o = *o + v;
            }
        }
        out.iter_mut().for_each(|v| *v = *v * h);
        out
    }

    /// `max |W₁ − W₂|` over a shared grid.
    pub fn sup_distance(&self, other: &Self) -> Result<T> {
        self.x_axis.require_match(&other.x_axis, "wigner x axis")?;
        self.p_axis.require_match(&other.p_axis, "wigner p axis")?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (*a - *b).abs())
            .fold(T::zero(), T::max))
    }

    pub fn scaled(&self, factor: T) -> Self {
        Self {
            x_axis: self.x_axis,
            p_axis: self.p_axis,
            values: self.values.iter().map(|&v| v * factor).collect(),
        }
    }
}

/// Chirp-z evaluation of one Wigner row for the samples centred on index
/// `centre`, on the axis `p_l = p0 + l·dp`.
struct RowTransform<T: Real> {
    n: usize,
    h: T,
    dp: T,
    m: usize,
    cz: ChirpZ<T>,
}

impl<T: Real> RowTransform<T> {
    fn new(n: usize, h: T, dp: T, m: usize) -> Self {
        let two_h = h + h;
        Self {
            n,
            h,
            dp,
            m,
            cz: ChirpZ::new(2 * n - 1, m, two_h * dp),
        }
    }

    fn row(&self, samples: &[Complex<T>], centre: usize, p0: T) -> Vec<T> {
        let n = self.n;
        let zero = Complex::new(T::zero(), T::zero());
        let mut seq = vec![zero; 2 * n - 1];
        let reach = centre.min(n - 1 - centre);
        for j in 0..=reach {
            seq[n - 1 + j] = samples[centre - j] * samples[centre + j].conj();
            seq[n - 1 - j] = samples[centre + j] * samples[centre - j].conj();
        }
        let two_h = self.h + self.h;
        let out = self.cz.apply(&seq, two_h * p0);
        let offset = from_usize::<T>(n - 1);
        let scale = self.h / T::PI();
        (0..self.m)
            .map(|l| {
                let p = p0 + from_usize::<T>(l) * self.dp;
                (out[l] * cis(-two_h * p * offset)).re * scale
            })
            .collect()
    }
}

/// Wigner function of `psi` sampled at arbitrary `x_axis` nodes and `p_axis`.
pub fn wigner_on<T: Real>(psi: &Wavefunction<T>, x_axis: &QuadratureGrid<T>, p_axis: &QuadratureGrid<T>) -> WignerGrid<T> {
    let grid = psi.grid();
    let n = grid.len();
    let transform = RowTransform::new(n, grid.spacing(), p_axis.spacing(), p_axis.len());
    let aligned = x_axis.matches(grid);
    let shifter = if aligned {
        None
    } else {
        Some(SpectralShifter::new(psi.amplitudes(), grid.spacing()))
    };
    let rows: Vec<Vec<T>> = (0..x_axis.len())
        .into_par_iter()
        .map(|i| match &shifter {
            None => transform.row(psi.amplitudes(), i, p_axis.x_min()),
            Some(sh) => {
                let x = x_axis.point(i);
                let k = grid.fractional_index(x).round();
                match k.to_usize() {
                    Some(k0) if k >= T::zero() && k0 < n => {
                        let shifted = sh.shifted(x - grid.point(k0));
                        transform.row(&shifted, k0, p_axis.x_min())
                    }
                    _ => vec![T::zero(); p_axis.len()],
                }
            }
        })
        .collect();
    WignerGrid::new(*x_axis, *p_axis, rows.concat()).expect("consistent shape")
}

/// Wigner function on the wavefunction's own grid, with `p` on the same axis.
pub fn wigner_transform<T: Real>(psi: &Wavefunction<T>) -> WignerGrid<T> {
    wigner_on(psi, psi.grid(), psi.grid())
}

/// Wigner function of the conditional signal state.
pub fn conditional_wigner_direct<T: Real>(cond: &ConditionalState<T>) -> WignerGrid<T> {
    wigner_transform(&cond.wavefunction)
}

/// The measurement filter in phase space.
#[derive(Debug, Clone)]
pub enum FilterWigner<T> {
    /// In-phase reading: the filter is `δ(p + shift)` and the conditional
    /// Wigner function is `W_s(x, p + shift)`.
    MomentumShift { shift: T },
    /// Two independent evaluations: the Wigner transform of the filter
    /// function itself, and the remapped meter Wigner function.
    Grid {
        direct: WignerGrid<T>,
        remapped: WignerGrid<T>,
    },
}

impl<T: Real> FilterWigner<T> {
    /// `max |direct − remapped|`, zero for the translation route.
    pub fn agreement(&self) -> T {
        match self {
            FilterWigner::MomentumShift { .. } => T::zero(),
            FilterWigner::Grid { direct, remapped } => direct.sup_distance(remapped).expect("same axes"),
        }
    }
}

/// `W_f(x, p | x_m)` on `x_axis × x_axis` for the outcome `x_m` of density
/// `outcome_density`.
///
/// With `Δ = θ − φ`, `s = sin Δ`, `c = cos Δ` the remap route uses
///
/// `W_f(x, p) = W_m(x_m + κ s x, p/(κ s) + κ c x + x_m cot Δ) / (κ |s| W(x_m))`.
pub fn filter_wigner<T: Real>(
    meter: &Wavefunction<T>,
    cfg: &InteractionConfig<T>,
    x_m: T,
    outcome_density: T,
    x_axis: &QuadratureGrid<T>,
) -> Result<FilterWigner<T>> {
    filter_wigner_on(meter, cfg, x_m, outcome_density, x_axis, x_axis)
}

/// [`filter_wigner`] with a separate momentum axis.
pub fn filter_wigner_on<T: Real>(
    meter: &Wavefunction<T>,
    cfg: &InteractionConfig<T>,
    x_m: T,
    outcome_density: T,
    x_axis: &QuadratureGrid<T>,
    p_axis: &QuadratureGrid<T>,
) -> Result<FilterWigner<T>> {
    if cfg.kappa() == T::zero() || cfg.is_in_phase(lit(IN_PHASE_DISPATCH)) {
        return Ok(FilterWigner::MomentumShift {
            shift: cfg.kappa() * x_m * cfg.relative_angle().cos(),
        });
    }
    if !(outcome_density > T::zero()) {
        return Err(Error::param("outcome_density", "filter needs a positive outcome density"));
    }
    let meter = prepared(meter, cfg.homodyne_angle());

    let y = measurement_amplitude(&meter, cfg, x_m, x_axis);
    let inv = T::one() / outcome_density.sqrt();
    let f = Wavefunction::from_samples(*x_axis, y.into_iter().map(|v| v * inv).collect(), cfg.signal_angle())?;
    let direct = wigner_on(&f, x_axis, p_axis);

    let (s, c) = cfg.relative_angle().sin_cos();
    let kappa = cfg.kappa();
    let mgrid = *meter.grid();
    let nm = mgrid.len();
    let p_axis = *p_axis;
    let dp = p_axis.spacing() / (kappa * s);
    let transform = RowTransform::new(nm, mgrid.spacing(), dp, p_axis.len());
    let shifter = SpectralShifter::new(meter.amplitudes(), mgrid.spacing());
    let prefactor = T::one() / (kappa * s.abs() * outcome_density);
    let rows: Vec<Vec<T>> = (0..x_axis.len())
        .into_par_iter()
        .map(|i| {
            let x = x_axis.point(i);
            let u = x_m + kappa * s * x;
            let p0 = p_axis.x_min() / (kappa * s) + kappa * c * x + x_m * c / s;
            let k = mgrid.fractional_index(u).round();
            match k.to_usize() {
                Some(k0) if k >= T::zero() && k0 < nm => {
                    let shifted = shifter.shifted(u - mgrid.point(k0));
                    transform
                        .row(&shifted, k0, p0)
                        .into_iter()
                        .map(|v| v * prefactor)
                        .collect()
                }
                _ => vec![T::zero(); p_axis.len()],
            }
        })
        .collect();
    let remapped = WignerGrid::new(*x_axis, p_axis, rows.concat())?;
    Ok(FilterWigner::Grid { direct, remapped })
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ConvolutionCheck {
    /// `max |W_c − W_s ⊛_p W_f|`, or against the translated `W_s` in phase.
    pub residual: f64,
    /// `max |direct − remapped|` between the two filter evaluations.
    pub filter_agreement: f64,
    pub outcome_density: f64,
}

/// Compares the conditional Wigner function with `∫ dq W_s(x, p − q) W_f(x, q)`.
pub fn convolution_identity_check<T: Real>(
    signal: &Wavefunction<T>,
    meter: &Wavefunction<T>,
    cfg: &InteractionConfig<T>,
    x_m: T,
) -> Result<ConvolutionCheck> {
    let signal = prepared(signal, cfg.signal_angle());
    let state = entangle(&signal, meter, cfg)?;
    let cond = condition_on_outcome(&state, x_m)?;
    let conditional = conditional_wigner_direct(&cond);
    let grid = *signal.grid();
    let n = grid.len();
    let dp = grid.spacing();
    let extra = n;
    let q_axis = QuadratureGrid::new(
        grid.x_min() - dp * from_usize::<T>(extra),
        grid.x_max() + dp * from_usize::<T>(extra),
        n + 2 * extra,
    )?;
    let filter = filter_wigner_on(meter, cfg, x_m, cond.probability_density, &grid, &q_axis)?;
    let residual = match &filter {
        FilterWigner::MomentumShift { shift } => {
            let shifted_axis = QuadratureGrid::new(grid.x_min() + *shift, grid.x_max() + *shift, grid.len())?;
            let translated = wigner_on(&signal, &grid, &shifted_axis);
            conditional
                .values()
                .iter()
                .zip(translated.values())
                .map(|(a, b)| (*a - *b).abs())
                .fold(T::zero(), T::max)
        }
        FilterWigner::Grid { direct, .. } => {
            // W_s on p = k·dp, |k| ≤ n − 1 + extra, so every p_l − q_m is a node
            let half = n - 1 + extra;
            let reach = dp * from_usize::<T>(half);
            let difference = QuadratureGrid::new(-reach, reach, 2 * half + 1)?;
            let ws = wigner_on(&signal, &grid, &difference);
            let rows: Vec<T> = (0..n)
                .into_par_iter()
                .map(|i| {
                    let nq = q_axis.len();
                    let wf: Vec<T> = (0..nq).map(|m| direct.value(i, m)).collect();
                    let mut worst = T::zero();
                    for l in 0..n {
                        let mut acc = T::zero();
                        for (m, &f) in wf.iter().enumerate() {
                            acc = acc + ws.value(i, l + extra + half - m) * f;
                        }
                        worst = worst.max((acc * dp - conditional.value(i, l)).abs());
                    }
                    worst
                })
                .collect();
            rows.into_iter().fold(T::zero(), T::max)
        }
    };
    Ok(ConvolutionCheck {
        residual: to_f64(residual),
        filter_agreement: to_f64(filter.agreement()),
        outcome_density: to_f64(cond.probability_density),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::frft::rotate_representation;
    use crate::quadrature::{make_fock, make_squeezed_vacuum, make_state, make_vacuum, SqueezedVacuumSpec, StateSpec};
    use std::f64::consts::PI;

    fn grid() -> QuadratureGrid<f64> {
        QuadratureGrid::standard()
    }

    #[test]
    fn vacuum_wigner_closed_form() {
        let v = make_vacuum(grid(), 0.0).unwrap();
        let w = wigner_transform(&v);
        let g = grid();
        let mut worst: f64 = 0.0;
        for i in (0..g.len()).step_by(7) {
            for l in (0..g.len()).step_by(5) {
                let (x, p) = (g.point(i), g.point(l));
                worst = worst.max((w.value(i, l) - (-x * x - p * p).exp() / PI).abs());
            }
        }
        assert!(worst < 1e-10, "{worst}");
        assert!((w.integral() - 1.0).abs() < 1e-6);
        assert!((w.purity() - 1.0 / (2.0 * PI)).abs() < 1e-5);
        assert!(w.max_abs() <= 1.0 / PI + 1e-6);
    }

    #[test]
    fn fock_one_is_negative_at_origin() {
        let f = make_fock(grid(), 0.0, 1).unwrap();
        let at = wigner_on(
            &f,
            &QuadratureGrid::new(-1.0, 1.0, 17).unwrap(),
            &QuadratureGrid::new(-1.0, 1.0, 17).unwrap(),
        );
        assert!((at.value(8, 8) + 1.0 / PI).abs() < 1e-5, "{}", at.value(8, 8));
        // W₁ = (2(x² + p²) − 1) e^{−x²−p²}/π at an off-node point
        let (x, p) = (at.x_axis().point(3), at.p_axis().point(12));
        let want = (2.0 * (x * x + p * p) - 1.0) * (-x * x - p * p).exp() / PI;
        assert!((at.value(3, 12) - want).abs() < 1e-9);
    }

    #[test]
    fn marginals_match_quadrature_densities() {
        let spec = StateSpec::Squeezed { r: 0.5, epsilon: 0.3, displacement: Complex::new(0.4, -0.2) };
        let psi = make_state(grid(), 0.0, &spec).unwrap();
        let w = wigner_transform(&psi);
        let xm = w.x_marginal();
        let worst = xm.iter().zip(psi.marginal()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(worst < 1e-6, "{worst}");
        let momentum = rotate_representation(&psi, PI / 2.0);
        let pm = w.p_marginal();
        let worst = pm.iter().zip(momentum.marginal()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(worst < 1e-6, "{worst}");
    }

    #[test]
    fn in_phase_conditional_wigner_is_translated() {
        let phi = 0.2;
        let cfg = InteractionConfig::in_phase(1.0, phi).unwrap();
        let s = make_fock(grid(), cfg.signal_angle(), 1).unwrap();
        let m = make_vacuum(grid(), phi).unwrap();
        for &xm in &[0.0, 0.6, -1.3] {
            let check = convolution_identity_check(&s, &m, &cfg, xm).unwrap();
            assert!(check.residual < 1e-6, "{check:?}");
        }
        let f = filter_wigner(&m, &cfg, 0.6, 0.3, &grid()).unwrap();
        assert!(matches!(f, FilterWigner::MomentumShift { shift } if (shift - 0.6).abs() < 1e-15));
    }

    #[test]
    fn out_of_phase_filter_of_vacuum_meter_is_centred_gaussian() {
        let cfg = InteractionConfig::out_of_phase(1.0, 0.0).unwrap();
        let m = make_vacuum(grid(), cfg.homodyne_angle()).unwrap();
        let s = make_vacuum(grid(), cfg.signal_angle()).unwrap();
        let st = entangle(&s, &m, &cfg).unwrap();
        let cond = condition_on_outcome(&st, 0.0).unwrap();
        match filter_wigner(&m, &cfg, 0.0, cond.probability_density, &grid()).unwrap() {
            FilterWigner::Grid { direct, remapped } => {
                let (_, x, p) = {
                    let neg = direct.scaled(-1.0);
                    neg.minimum()
                };
                assert!(x.abs() < 0.02 && p.abs() < 0.02);
                assert!(direct.sup_distance(&remapped).unwrap() < 1e-6);
            }
            other => panic!("{other:?}"),
        }
        // conditional x-variance: product of two unit-width Gaussians halves it
        let (_, var) = cond.wavefunction.mean_and_variance();
        assert!((var - 0.25).abs() < 1e-6);
    }

    #[test]
    fn convolution_identity_at_generic_angles() {
        for &d in &[PI / 6.0, PI / 4.0, PI / 2.0] {
            let cfg = InteractionConfig::new(1.0, 0.1, 0.1 + d).unwrap();
            let s = make_vacuum(grid(), cfg.signal_angle()).unwrap();
            let m = make_squeezed_vacuum(grid(), cfg.homodyne_angle(), SqueezedVacuumSpec::aligned(1.0, cfg.homodyne_angle()).unwrap())
                .unwrap();
            let check = convolution_identity_check(&s, &m, &cfg, 0.4).unwrap();
            assert!(check.residual < 1e-5, "Δ={d}: {check:?}");
            assert!(check.filter_agreement < 1e-6, "Δ={d}: {check:?}");
        }
    }

    #[test]
    fn zero_coupling_leaves_wigner_unchanged() {
        let cfg = InteractionConfig::new(0.0, 0.0, 0.7).unwrap();
        let s = make_fock(grid(), cfg.signal_angle(), 2).unwrap();
        let m = make_vacuum(grid(), 0.7).unwrap();
        let check = convolution_identity_check(&s, &m, &cfg, 0.3).unwrap();
        assert!(check.residual < 1e-12, "{check:?}");
    }
}

//! Grid-level QND coupling of a signal and a meter mode.
//!
//! The interaction `exp[−iκ x̂_s(φ+π/2) x̂_m(φ)]` acts on a signal quadrature
//! eigenstate `|x_s⟩` at angle `φ + π/2` as a meter displacement. With
//! `Δ = θ − φ` the meter wavefunction at angle `θ` becomes
//!
//! `ψ_m(x_m + κ x_s sin Δ) e^{−iγ(x_s, x_m)}`,
//! `γ = (κ/2)² x_s² sin 2Δ + κ x_s x_m cos Δ`.

use num_complex::Complex;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frft::rotate_representation;
use crate::grid::QuadratureGrid;
use crate::quadrature::{Wavefunction, ANGLE_TOLERANCE};
use crate::sampling::{rng_from_seed, sample_moments, InverseCdfSampler};
use crate::scalar::{angle_difference, cis, lit, same_angle, to_f64, wrap_angle, Real};
use crate::spectral::{sinc_interpolate, SpectralShifter};

/// Outcomes whose density falls below this cannot be conditioned on.
pub const OUTCOME_FLOOR: f64 = 1e-12;
/// Meter probability allowed to be pushed off the grid by the shift.
pub const SHIFT_LOSS_LIMIT: f64 = 1e-10;
/// Largest accepted drift of the entangled norm before renormalization.
pub const NORM_DRIFT_LIMIT: f64 = 1e-6;
/// Minimum ratio of meter width to `κ ×` signal width for a weak measurement.
pub const WEAKNESS_RATIO: f64 = 5.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real + Serialize + serde::de::DeserializeOwned")]
pub struct InteractionConfig<T> {
    kappa: T,
    pump_phase: T,
    homodyne_angle: T,
}

impl<T: Real> InteractionConfig<T> {
    pub fn new(kappa: T, pump_phase: T, homodyne_angle: T) -> Result<Self> {
        if !kappa.is_finite() || kappa < T::zero() {
            return Err(Error::param("kappa", format!("coupling must be finite and ≥ 0, got {kappa}")));
        }
        if !pump_phase.is_finite() || !homodyne_angle.is_finite() {
            return Err(Error::param("phase", "angles must be finite"));
        }
        Ok(Self {
            kappa,
            pump_phase: wrap_angle(pump_phase),
            homodyne_angle: wrap_angle(homodyne_angle),
        })
    }

    /// `θ = φ`.
    pub fn in_phase(kappa: T, pump_phase: T) -> Result<Self> {
        Self::new(kappa, pump_phase, pump_phase)
    }

    /// `θ = φ + π/2`.
    pub fn out_of_phase(kappa: T, pump_phase: T) -> Result<Self> {
        Self::new(kappa, pump_phase, pump_phase + T::FRAC_PI_2())
    }

    pub fn kappa(&self) -> T {
        self.kappa
    }

    pub fn pump_phase(&self) -> T {
        self.pump_phase
    }

    pub fn homodyne_angle(&self) -> T {
        self.homodyne_angle
    }

    /// Angle of the coupled signal quadrature, `φ + π/2`.
    pub fn signal_angle(&self) -> T {
        wrap_angle(self.pump_phase + T::FRAC_PI_2())
    }

    /// `Δ = θ − φ` in `(−π, π]`.
    pub fn relative_angle(&self) -> T {
        angle_difference(self.homodyne_angle, self.pump_phase)
    }

    /// `true` when `θ − φ` is within `tol` of `0` or `π`.
    pub fn is_in_phase(&self, tol: T) -> bool {
        let d = self.relative_angle();
        d.abs() <= tol || (d.abs() - T::PI()).abs() <= tol
    }

    pub fn with_kappa(&self, kappa: T) -> Result<Self> {
        Self::new(kappa, self.pump_phase, self.homodyne_angle)
    }

    pub fn cast<U: Real>(&self) -> InteractionConfig<U> {
        InteractionConfig {
            kappa: lit(to_f64(self.kappa)),
            pump_phase: lit(to_f64(self.pump_phase)),
            homodyne_angle: lit(to_f64(self.homodyne_angle)),
        }
    }
}

/// `γ(x_s, x_m) = (κ/2)² x_s² sin 2Δ + κ x_s x_m cos Δ`.
pub fn gamma_phase<T: Real>(x_s: T, x_m: T, cfg: &InteractionConfig<T>) -> T {
    let delta = cfg.relative_angle();
    let half_kappa = cfg.kappa * lit(0.5);
    half_kappa * half_kappa * x_s * x_s * (delta + delta).sin() + cfg.kappa * x_s * x_m * delta.cos()
}

/// Signal ⊗ meter amplitudes `Ψ(x_s, x_m)`, row-major over `x_s`.
#[derive(Debug, Clone)]
pub struct BipartiteState<T> {
    signal_grid: QuadratureGrid<T>,
    meter_grid: QuadratureGrid<T>,
    amplitudes: Vec<Complex<T>>,
    config: InteractionConfig<T>,
}

impl<T: Real> BipartiteState<T> {
    pub fn signal_grid(&self) -> &QuadratureGrid<T> {
        &self.signal_grid
    }

    pub fn meter_grid(&self) -> &QuadratureGrid<T> {
        &self.meter_grid
    }

    pub fn amplitudes(&self) -> &[Complex<T>] {
        &self.amplitudes
    }

    pub fn config(&self) -> &InteractionConfig<T> {
        &self.config
    }

    pub fn signal_angle(&self) -> T {
        self.config.signal_angle()
    }

    pub fn meter_angle(&self) -> T {
        self.config.homodyne_angle
    }

    pub fn amplitude(&self, i: usize, j: usize) -> Complex<T> {
        self.amplitudes[i * self.meter_grid.len() + j]
    }

    pub fn norm_sqr(&self) -> T {
        let sum: f64 = self.amplitudes.iter().map(|a| to_f64(a.norm_sqr())).sum();
        lit::<T>(sum) * self.signal_grid.spacing() * self.meter_grid.spacing()
    }

    /// Amplitude column at meter outcome `x_m`, band-limited between nodes.
    fn column(&self, x_m: T) -> Vec<Complex<T>> {
        let nm = self.meter_grid.len();
        match self.meter_grid.node_index(x_m) {
            Some(j) => (0..self.signal_grid.len()).map(|i| self.amplitude(i, j)).collect(),
            None => (0..self.signal_grid.len())
                .map(|i| {
                    let row = &self.amplitudes[i * nm..(i + 1) * nm];
                    sinc_interpolate(row, self.meter_grid.x_min(), self.meter_grid.spacing(), x_m)
                })
                .collect(),
        }
    }
}

pub(crate) fn prepared<T: Real>(psi: &Wavefunction<T>, angle: T) -> Wavefunction<T> {
    if same_angle(psi.angle(), angle, lit(ANGLE_TOLERANCE)) {
        psi.clone()
    } else {
        rotate_representation(psi, angle)
    }
}

fn cumulative<T: Real>(density: &[T], h: T) -> Vec<T> {
    let mut acc = T::zero();
    let mut out = Vec::with_capacity(density.len() + 1);
    out.push(T::zero());
    for &d in density {
        acc = acc + d * h;
        out.push(acc);
    }
    out
}

/// Meter mass lost when the meter is read off at `x + d` on its own grid.
fn lost_mass<T: Real>(cdf: &[T], grid: &QuadratureGrid<T>, d: T) -> T {
    let n = grid.len();
    let total = cdf[n];
    let shift = d / grid.spacing();
    let k = shift.abs().ceil().to_usize().unwrap_or(n).min(n);
    if shift >= T::zero() {
        // samples below x_min + d are never read
        cdf[k]
    } else {
        total - cdf[n - k]
    }
}

fn check_shift<T: Real>(signal: &Wavefunction<T>, meter: &Wavefunction<T>, cfg: &InteractionConfig<T>) -> Result<()> {
    let sin_d = cfg.relative_angle().sin();
    let ms = meter.marginal();
    let cdf = cumulative(&ms, meter.grid().spacing());
    let h = signal.grid().spacing();
    let mut loss = T::zero();
    for (i, p) in signal.marginal().into_iter().enumerate() {
        let d = cfg.kappa * signal.grid().point(i) * sin_d;
        loss = loss + p * h * lost_mass(&cdf, meter.grid(), d);
    }
    if loss > lit(SHIFT_LOSS_LIMIT) {
        let (s_lo, s_hi) = signal.support(lit(1e-6));
        let (m_lo, m_hi) = meter.support(lit(1e-6));
        let (d1, d2) = (cfg.kappa * s_lo * sin_d, cfg.kappa * s_hi * sin_d);
        return Err(Error::ShiftOverflow {
            needed_min: to_f64(m_lo - d1.max(d2)),
            needed_max: to_f64(m_hi - d1.min(d2)),
            grid_min: to_f64(meter.grid().x_min()),
            grid_max: to_f64(meter.grid().x_max()),
        });
    }
    Ok(())
}

/// Entangled state after the interaction, with the signal represented at
/// `φ + π/2` and the meter at `θ` (inputs are rotated there if needed).
pub fn entangle<T: Real>(
    signal: &Wavefunction<T>,
    meter: &Wavefunction<T>,
    cfg: &InteractionConfig<T>,
) -> Result<BipartiteState<T>> {
    let signal = prepared(signal, cfg.signal_angle());
    let meter = prepared(meter, cfg.homodyne_angle);
    check_shift(&signal, &meter, cfg)?;
    let sgrid = *signal.grid();
    let mgrid = *meter.grid();
    let sin_d = cfg.relative_angle().sin();
    let shifter = SpectralShifter::new(meter.amplitudes(), mgrid.spacing());
    let xm = mgrid.points();
    let rows: Vec<Vec<Complex<T>>> = signal
        .amplitudes()
        .par_iter()
        .enumerate()
        .map(|(i, &a)| {
            let xs = sgrid.point(i);
            if a == Complex::new(T::zero(), T::zero()) {
                return vec![a; mgrid.len()];
            }
            let shifted = if cfg.kappa == T::zero() || sin_d == T::zero() {
                meter.amplitudes().to_vec()
            } else {
                shifter.shifted(cfg.kappa * xs * sin_d)
            };
            shifted
                .into_iter()
                .zip(&xm)
                .map(|(m, &x)| a * m * cis(-gamma_phase(xs, x, cfg)))
                .collect()
        })
        .collect();
    let mut state = BipartiteState {
        signal_grid: sgrid,
        meter_grid: mgrid,
        amplitudes: rows.concat(),
        config: *cfg,
    };
    let norm = state.norm_sqr();
    if (norm - T::one()).abs() > lit(NORM_DRIFT_LIMIT) {
        return Err(Error::NormalizationDrift(to_f64(norm)));
    }
    let s = T::one() / norm.sqrt();
    state.amplitudes.iter_mut().for_each(|a| *a = *a * s);
    Ok(state)
}

/// `W(x_m) = Σ_i |Ψ(x_s^i, x_m)|² Δx_s` on the meter grid.
pub fn meter_distribution<T: Real>(state: &BipartiteState<T>) -> Vec<T> {
    let (ns, nm) = (state.signal_grid.len(), state.meter_grid.len());
    let h = state.signal_grid.spacing();
    let mut w = vec![T::zero(); nm];
    for i in 0..ns {
        for (j, wj) in w.iter_mut().enumerate() {
            *wj = *wj + state.amplitudes[i * nm + j].norm_sqr();
        }
    }
    w.iter_mut().for_each(|v| *v = *v * h);
    w
}

/// Signal state after the meter reads `x_m`.
#[derive(Debug, Clone)]
pub struct ConditionalState<T> {
    pub wavefunction: Wavefunction<T>,
    pub outcome: T,
    /// `W(x_m)`, a density over meter outcomes.
    pub probability_density: T,
}

/// `ψ_s^{(c)} ∝ ψ_s(x_s) f(x_s | x_m)`, renormalized, with `W(x_m)` attached.
pub fn condition_on_outcome<T: Real>(state: &BipartiteState<T>, x_m: T) -> Result<ConditionalState<T>> {
    if !state.meter_grid.contains(x_m) {
        return Err(Error::param(
            "x_m",
            format!(
                "outcome {x_m} outside the meter grid [{}, {}]",
                state.meter_grid.x_min(),
                state.meter_grid.x_max()
            ),
        ));
    }
    let column = state.column(x_m);
    let density = column.iter().map(|a| a.norm_sqr()).sum::<T>() * state.signal_grid.spacing();
    if !(density > lit(OUTCOME_FLOOR)) {
        return Err(Error::OutcomeTooRare {
            outcome: to_f64(x_m),
            density: to_f64(density),
        });
    }
    let wavefunction = Wavefunction::normalized(state.signal_grid, column, state.signal_angle())?;
    Ok(ConditionalState {
        wavefunction,
        outcome: x_m,
        probability_density: density,
    })
}

/// Unnormalized filter `Y(x_s) = ψ_m(x_m + κ x_s sin Δ) e^{−iγ(x_s, x_m)}` on
/// `signal_grid`, so that `f(x_s|x_m) = Y(x_s)/√W(x_m)`.
pub fn measurement_amplitude<T: Real>(
    meter: &Wavefunction<T>,
    cfg: &InteractionConfig<T>,
    x_m: T,
    signal_grid: &QuadratureGrid<T>,
) -> Vec<Complex<T>> {
    let meter = prepared(meter, cfg.homodyne_angle);
    let sin_d = cfg.relative_angle().sin();
    signal_grid
        .points()
        .into_iter()
        .map(|xs| meter.amplitude_at(x_m + cfg.kappa * xs * sin_d) * cis(-gamma_phase(xs, x_m, cfg)))
        .collect()
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WeakEstimate {
    /// Estimated `⟨x̂_s(φ+π/2)⟩`.
    pub estimate: f64,
    pub standard_error: f64,
    /// Meter width over `κ ×` signal width.
    pub weakness_ratio: f64,
    /// `false` when the ratio is below [`WEAKNESS_RATIO`].
    pub weak: bool,
    /// Average `|⟨ψ_s|ψ_s^{(c)}⟩|²` over outcomes.
    pub mean_fidelity: f64,
    pub meter_mean: f64,
    pub shots: usize,
}

/// Mean of the coupled signal quadrature from `n_shots` meter readings.
///
/// The displaced meter has mean `m₀ − κ ⟨x_s⟩ sin Δ`, so the estimate is
/// `−(x̄_m − m₀)/(κ sin Δ)`.
pub fn weak_measurement_estimate<T: Real>(
    signal: &Wavefunction<T>,
    meter: &Wavefunction<T>,
    cfg: &InteractionConfig<T>,
    n_shots: usize,
    seed: u64,
) -> Result<WeakEstimate> {
    let sin_d = to_f64(cfg.relative_angle().sin());
    let kappa = to_f64(cfg.kappa);
    if kappa == 0.0 {
        return Err(Error::param("kappa", "the estimator is undefined without coupling"));
    }
    if sin_d.abs() < 1e-3 {
        return Err(Error::param("homodyne_angle", "an in-phase meter carries no signal mean"));
    }
    if n_shots < 2 {
        return Err(Error::param("shots", "need at least two shots"));
    }
    let signal_rep = prepared(signal, cfg.signal_angle());
    let meter_rep = prepared(meter, cfg.homodyne_angle);
    let (_, signal_var) = signal_rep.mean_and_variance();
    let (meter_mean, meter_var) = meter_rep.mean_and_variance();
    let ratio = to_f64(meter_var.sqrt()) / (kappa * to_f64(signal_var.sqrt()));

    let state = entangle(&signal_rep, &meter_rep, cfg)?;
    let w = meter_distribution(&state);
    let sampler = InverseCdfSampler::new(&state.meter_grid.points(), &w)?;
    let samples = sampler.sample(&mut rng_from_seed(seed), n_shots);
    let (mean, var) = sample_moments(&samples);
    let scale = -1.0 / (kappa * sin_d);
    let estimate = (to_f64(mean) - to_f64(meter_mean)) * scale;
    let standard_error = (to_f64(var) / n_shots as f64).sqrt() * scale.abs();

    // Σ_j Δx_m |Σ_i ψ_s*(x_i) Ψ(x_i, x_j) Δx_s|²
    let (ns, nm) = (state.signal_grid.len(), state.meter_grid.len());
    let hs = state.signal_grid.spacing();
    let mut fidelity = T::zero();
    for j in 0..nm {
        let overlap: Complex<T> = (0..ns).map(|i| signal_rep.amplitudes()[i].conj() * state.amplitude(i, j)).sum();
        fidelity = fidelity + overlap.norm_sqr() * hs * hs;
    }
    fidelity = fidelity * state.meter_grid.spacing();

    Ok(WeakEstimate {
        estimate,
        standard_error,
        weakness_ratio: ratio,
        weak: ratio >= WEAKNESS_RATIO,
        mean_fidelity: to_f64(fidelity),
        meter_mean: to_f64(meter_mean),
        shots: n_shots,
    })
}

/// `W(x_m)` by direct quadrature of `∫ dx_s |ψ_s(x_s)|² |ψ_m(x_m + κ x_s sin Δ)|²`
/// with the meter evaluated through `meter_density`.
pub fn meter_distribution_quadrature<T: Real>(
    signal: &Wavefunction<T>,
    meter_density: impl Fn(T) -> T + Sync,
    meter_grid: &QuadratureGrid<T>,
    cfg: &InteractionConfig<T>,
) -> Vec<T> {
    let sin_d = cfg.relative_angle().sin();
    let ps = signal.marginal();
    let h = signal.grid().spacing();
    meter_grid
        .points()
        .par_iter()
        .map(|&xm| {
            ps.iter()
                .enumerate()
                .map(|(i, &p)| p * meter_density(xm + cfg.kappa * signal.grid().point(i) * sin_d))
                .sum::<T>()
                * h
        })
        .collect()
}

/// Total-variation distance `½ Σ |p − q| Δx` between two gridded densities.
pub fn total_variation<T: Real>(p: &[T], q: &[T], h: T) -> T {
    p.iter().zip(q).map(|(a, b)| (*a - *b).abs()).sum::<T>() * h * lit(0.5)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{evolve_product_hamiltonian, shifted_amplitude, FockVector};
    use crate::quadrature::{make_fock, make_squeezed_vacuum, make_state, make_vacuum, SqueezedVacuumSpec, StateSpec};
    use std::f64::consts::PI;

    fn grid() -> QuadratureGrid<f64> {
        QuadratureGrid::standard()
    }

    #[test]
    fn gamma_special_cases() {
        let phi = 0.4;
        let inp = InteractionConfig::in_phase(0.8, phi).unwrap();
        assert!((gamma_phase(1.3, -0.7, &inp) - 0.8 * 1.3 * -0.7_f64).abs() < 1e-15);
        let out = InteractionConfig::out_of_phase(0.8, phi).unwrap();
        assert!(gamma_phase(1.3_f64, -0.7, &out).abs() < 1e-15);
        let generic = InteractionConfig::new(0.8, phi, phi + 0.9).unwrap();
        assert_eq!(gamma_phase(0.0, 2.0, &generic), 0.0);
        assert!(InteractionConfig::new(-0.1, 0.0, 0.0).is_err());
    }

    #[test]
    fn gamma_matches_meter_displacement_phase() {
        // with β = κ x_s the displacement phase is −γ
        for &(k, d, xs, xm) in &[(1.0, 0.3, 0.7, -1.1), (0.5, 2.0, -1.5, 0.4), (1.5, -1.0, 2.0, 2.0)] {
            let cfg = InteractionConfig::new(k, 0.2, 0.2 + d).unwrap();
            let phase = shifted_amplitude(|_| Complex::new(1.0, 0.0), k * xs, d, xm).arg();
            let want = -gamma_phase(xs, xm, &cfg);
            assert!(crate::scalar::same_angle(phase, want, 1e-12), "{phase} {want}");
        }
    }

    #[test]
    fn zero_coupling_gives_product() {
        let s = make_fock(grid(), PI / 2.0, 1).unwrap();
        let m = make_vacuum(grid(), 0.3).unwrap();
        let cfg = InteractionConfig::new(0.0, 0.0, 0.3).unwrap();
        let st = entangle(&s, &m, &cfg).unwrap();
        let n = grid().len();
        for i in (0..n).step_by(37) {
            for j in (0..n).step_by(41) {
                let want = s.amplitudes()[i] * m.amplitudes()[j];
                assert!((st.amplitude(i, j) - want).norm() < 1e-12);
            }
        }
        let w = meter_distribution(&st);
        let m2 = m.marginal();
        assert!(w.iter().zip(&m2).all(|(a, b)| (a - b).abs() < 1e-12));
        let c = condition_on_outcome(&st, 0.5).unwrap();
        assert!(c.wavefunction.fidelity(&s).unwrap() > 1.0 - 1e-12);
    }

    #[test]
    fn in_phase_meter_and_signal_statistics_are_untouched() {
        let phi = 0.7;
        let cfg = InteractionConfig::in_phase(1.0, phi).unwrap();
        let s = make_state(grid(), phi + PI / 2.0, &StateSpec::Cat { alpha: Complex::new(1.2, 0.3) }).unwrap();
        let m = make_squeezed_vacuum(grid(), phi, SqueezedVacuumSpec::aligned(0.6, phi).unwrap()).unwrap();
        let st = entangle(&s, &m, &cfg).unwrap();
        assert!((st.norm_sqr() - 1.0).abs() < 1e-12);
        let w = meter_distribution(&st);
        let worst = w.iter().zip(m.marginal()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(worst < 1e-8, "{worst}");
        for &xm in &[-1.0, 0.0, 0.37, 1.5] {
            let c = condition_on_outcome(&st, xm).unwrap();
            let tv = total_variation(&c.wavefunction.marginal(), &s.marginal(), grid().spacing());
            assert!(tv < 1e-8, "{tv}");
        }
    }

    #[test]
    fn out_of_phase_vacua_broaden_meter() {
        let cfg = InteractionConfig::out_of_phase(1.0, 0.0).unwrap();
        let s = make_vacuum(grid(), cfg.signal_angle()).unwrap();
        let m = make_vacuum(grid(), cfg.homodyne_angle()).unwrap();
        let st = entangle(&s, &m, &cfg).unwrap();
        let w = meter_distribution(&st);
        let g = grid();
        let mean: f64 = w.iter().enumerate().map(|(j, p)| g.point(j) * p).sum::<f64>() * g.spacing();
        let var: f64 = w.iter().enumerate().map(|(j, p)| (g.point(j) - mean).powi(2) * p).sum::<f64>() * g.spacing();
        assert!(mean.abs() < 1e-12);
        assert!((var - 1.0).abs() < 1e-6, "{var}");
        let integral: f64 = w.iter().sum::<f64>() * g.spacing();
        assert!((integral - 1.0).abs() < 1e-8);
    }

    #[test]
    fn distribution_matches_independent_quadrature() {
        let cfg = InteractionConfig::new(0.9, 0.3, 0.3 + PI / 4.0).unwrap();
        let spec = StateSpec::Fock { n: 1 };
        let s = make_state(grid(), cfg.signal_angle(), &spec).unwrap();
        let mspec = StateSpec::Squeezed { r: 0.5, epsilon: 0.9, displacement: Complex::new(0.0, 0.0) };
        let m = make_state(grid(), cfg.homodyne_angle(), &mspec).unwrap();
        let st = entangle(&s, &m, &cfg).unwrap();
        let w = meter_distribution(&st);
        let theta = cfg.homodyne_angle();
        let direct = meter_distribution_quadrature(&s, |x| mspec.amplitude(x, theta).norm_sqr(), &grid(), &cfg);
        let worst = w.iter().zip(&direct).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(worst < 1e-8, "{worst}");
    }

    #[test]
    fn matches_fock_oracle() {
        let g = grid();
        let dim = 96;
        let phi = 0.3;
        for &d in &[0.0, PI / 4.0, PI / 2.0] {
            let cfg = InteractionConfig::new(0.5, phi, phi + d).unwrap();
            let s = make_fock(g, cfg.signal_angle(), 1).unwrap();
            let m = make_vacuum(g, cfg.homodyne_angle()).unwrap();
            let st = entangle(&s, &m, &cfg).unwrap();
            let e = evolve_product_hamiltonian(&FockVector::number(dim, 1).unwrap(), &FockVector::vacuum(dim), 0.5, phi)
                .unwrap();
            let oracle = e.project(&g, &g, cfg.homodyne_angle());
            let worst = st
                .amplitudes()
                .iter()
                .zip(&oracle)
                .map(|(a, b)| (a - b).norm())
                .fold(0.0, f64::max);
            assert!(worst < 1e-5, "Δ={d}: {worst}");
        }
    }

    #[test]
    fn out_of_phase_conditioning_follows_filter() {
        let cfg = InteractionConfig::out_of_phase(1.0, 0.0).unwrap();
        let s = make_fock(grid(), cfg.signal_angle(), 1).unwrap();
        let m = make_vacuum(grid(), cfg.homodyne_angle()).unwrap();
        let st = entangle(&s, &m, &cfg).unwrap();
        let xm = 0.8;
        let c = condition_on_outcome(&st, xm).unwrap();
        let g = grid();
        let mut want: Vec<f64> = (0..g.len())
            .map(|i| {
                let x = g.point(i);
                s.marginal()[i] * m.amplitude_at(xm + x).norm_sqr()
            })
            .collect();
        let norm: f64 = want.iter().sum::<f64>() * g.spacing();
        want.iter_mut().for_each(|v| *v /= norm);
        let worst = c.wavefunction.marginal().iter().zip(&want).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(worst < 1e-8, "{worst}");
        // off-node outcome agrees with the filter as well
        let c2 = condition_on_outcome(&st, 0.8123).unwrap();
        assert!((c2.wavefunction.norm_sqr() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rare_outcomes_and_overflow_are_rejected() {
        let cfg = InteractionConfig::out_of_phase(1.0, 0.0).unwrap();
        let s = make_vacuum(grid(), cfg.signal_angle()).unwrap();
        let m = make_vacuum(grid(), cfg.homodyne_angle()).unwrap();
        let st = entangle(&s, &m, &cfg).unwrap();
        assert!(matches!(condition_on_outcome(&st, 7.9), Err(Error::OutcomeTooRare { .. })));
        assert!(condition_on_outcome(&st, 9.0).is_err());

        let wide = make_state(grid(), cfg.signal_angle(), &StateSpec::Coherent { alpha: Complex::new(0.0, 1.8) }).unwrap();
        let strong = InteractionConfig::out_of_phase(2.0, 0.0).unwrap();
        assert!(matches!(entangle(&wide, &m, &strong), Err(Error::ShiftOverflow { .. })));
    }

    #[test]
    fn weak_measurement_recovers_mean() {
        let cfg = InteractionConfig::out_of_phase(0.2, 0.0).unwrap();
        // coherent amplitude with ⟨x̂(π/2)⟩ = 1
        let alpha = Complex::new(0.0, 1.0 / 2f64.sqrt());
        let s = make_state(grid(), cfg.signal_angle(), &StateSpec::Coherent { alpha }).unwrap();
        let mg = QuadratureGrid::new(-24.0, 24.0, 1024).unwrap();
        let spec = SqueezedVacuumSpec::aligned(1.5, cfg.homodyne_angle() + PI / 2.0).unwrap();
        let m = make_squeezed_vacuum(mg, cfg.homodyne_angle(), spec).unwrap();
        let est = weak_measurement_estimate(&s, &m, &cfg, 100_000, 11).unwrap();
        assert!(est.weak, "{est:?}");
        assert!((est.estimate - 1.0).abs() < 3.0 * est.standard_error, "{est:?}");
        assert!(est.mean_fidelity >= 0.99, "{est:?}");
        assert!(weak_measurement_estimate(&s, &m, &cfg.with_kappa(0.0).unwrap(), 1000, 1).is_err());
    }
}

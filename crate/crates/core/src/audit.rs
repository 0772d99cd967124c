//! The probability-amplitude operator `Ŷ = ⟨x̄_m|Û|ψ_m⟩` and the audit showing
//! that a reading which leaves the signal distribution intact carries no
//! information about it.

use num_complex::Complex;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::fock::{quadrature_operator, FockOperator, FockVector};
use crate::grid::QuadratureGrid;
use crate::hermite::hermite_functions_at;
use crate::qnd::{condition_on_outcome, entangle, measurement_amplitude, prepared, InteractionConfig, OUTCOME_FLOOR};
use crate::quadrature::Wavefunction;
use crate::scalar::{cis, from_usize, lit, to_f64, Real};

/// Total-variation change below which the signal distribution counts as
/// preserved.
pub const PRESERVATION_LIMIT: f64 = 1e-6;
/// Meter readings whose density is below this fraction of the peak are left
/// out of the outcome sweep.
pub const OUTCOME_CUTOFF: f64 = 1e-6;
/// Readings used by [`qnd_condition_check`].
pub const CHECK_OUTCOMES: [f64; 5] = [-1.0, -0.3, 0.0, 0.5, 1.2];

/// `Ŷ(x̂_s, x̄_m)`, diagonal in the `x_s` representation at `φ + π/2`.
#[derive(Debug, Clone)]
pub struct ProbabilityAmplitudeOperator<T> {
    pub outcome: T,
    pub signal_grid: QuadratureGrid<T>,
    /// `Y(x_s, x̄_m)` on the signal grid.
    pub diagonal: Vec<Complex<T>>,
    pub config: InteractionConfig<T>,
    pub meter: Wavefunction<T>,
}

pub fn build_probability_amplitude<T: Real>(
    meter: &Wavefunction<T>,
    cfg: &InteractionConfig<T>,
    outcome: T,
    signal_grid: &QuadratureGrid<T>,
) -> ProbabilityAmplitudeOperator<T> {
    let meter = prepared(meter, cfg.homodyne_angle());
    ProbabilityAmplitudeOperator {
        outcome,
        signal_grid: *signal_grid,
        diagonal: measurement_amplitude(&meter, cfg, outcome, signal_grid),
        config: *cfg,
        meter,
    }
}

impl<T: Real> ProbabilityAmplitudeOperator<T> {
    /// `|Y(x_s, x̄_m)|²`.
    pub fn weights(&self) -> Vec<T> {
        self.diagonal.iter().map(|y| y.norm_sqr()).collect()
    }

    /// `Ŷ ψ_s`, unnormalized.
    pub fn apply(&self, signal: &Wavefunction<T>) -> Result<Wavefunction<T>> {
        let signal = prepared(signal, self.config.signal_angle());
        self.signal_grid.require_match(signal.grid(), "probability amplitude")?;
        let out = signal
            .amplitudes()
            .iter()
            .zip(&self.diagonal)
            .map(|(a, y)| a * y)
            .collect();
        Wavefunction::from_samples(self.signal_grid, out, self.config.signal_angle())
    }

    /// `W(x̄_m) = ∫ dx_s |Y|² |ψ_s|²`.
    pub fn outcome_density(&self, signal: &Wavefunction<T>) -> Result<T> {
        Ok(self.apply(signal)?.norm_sqr())
    }

    /// Largest spread of `|Y|²` over the signal grid.
    pub fn weight_variation(&self) -> T {
        let w = self.weights();
        let (lo, hi) = w
            .iter()
            .fold((T::infinity(), T::neg_infinity()), |(a, b), &v| (a.min(v), b.max(v)));
        hi - lo
    }
}

/// `Ŷ` on the truncated signal space of the meter's dimension, from the dense
/// exponential of `−iκ x̂_s(φ+π/2) ⊗ x̂_m(φ)`.
pub fn probability_amplitude_fock<T: Real>(cfg: &InteractionConfig<T>, meter: &FockVector<T>, outcome: T) -> FockOperator<T> {
    let n = meter.dim();
    let xs = quadrature_operator::<T>(n, cfg.signal_angle());
    let xm = quadrature_operator::<T>(n, cfg.pump_phase());
    let joint = FockOperator::from_fn(n * n, |i, j| xs.get(i / n, j / n) * xm.get(i % n, j % n));
    let u = joint.evolution(cfg.kappa());
    // ⟨x̄(θ)|k⟩ = e^{−ikθ} h_k(x̄)
    let bra: Vec<Complex<T>> = hermite_functions_at(n, outcome)
        .into_iter()
        .enumerate()
        .map(|(k, h)| cis(-from_usize::<T>(k) * cfg.homodyne_angle()) * h)
        .collect();
    let psi = meter.amplitudes();
    FockOperator::from_fn(n, |a, b| {
        let mut acc = Complex::new(T::zero(), T::zero());
        for (c, &bc) in bra.iter().enumerate() {
            for (d, &pd) in psi.iter().enumerate() {
                acc = acc + bc * u.get(a * n + c, b * n + d) * pd;
            }
        }
        acc
    })
}

/// `max |[Ŷ, x̂_s(φ+π/2)]|` over the readings in [`CHECK_OUTCOMES`].
pub fn qnd_condition_check<T: Real>(cfg: &InteractionConfig<T>, meter: &FockVector<T>) -> T {
    let xs = quadrature_operator::<T>(meter.dim(), cfg.signal_angle());
    CHECK_OUTCOMES
        .par_iter()
        .map(|&x| probability_amplitude_fock(cfg, meter, lit(x)).commutator(&xs).max_abs())
        .reduce(T::zero, T::max)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AuditReport {
    pub distribution_preserved: bool,
    /// Mutual information between `x_s` and `x̄_m`, in nats.
    pub information_gained: f64,
    /// Largest total-variation change of the signal density over outcomes.
    pub max_total_variation: f64,
    /// Total-variation change averaged over `W(x̄_m)`.
    pub mean_total_variation: f64,
    pub outcomes_checked: usize,
    /// `∫ W(x̄_m) dx̄_m`.
    pub outcome_normalization: f64,
    /// Mean meter reading.
    pub outcome_mean: f64,
    /// `distribution_preserved ⇒ information_gained < 1e−6`.
    pub consistent: bool,
}

/// Joint density `|ψ_s(x_s)|² |ψ_m(x_m + κ x_s sin Δ)|²`, row-major over
/// `(x_s, x_m)`, with the signal density and the outcome density.
fn joint_density<T: Real>(
    signal: &Wavefunction<T>,
    meter: &Wavefunction<T>,
    cfg: &InteractionConfig<T>,
) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>, f64, f64)> {
    let state = entangle(signal, meter, cfg)?;
    let (ns, nm) = (state.signal_grid().len(), state.meter_grid().len());
    let joint: Vec<f64> = state.amplitudes().iter().map(|a| to_f64(a.norm_sqr())).collect();
    let (hs, hm) = (to_f64(state.signal_grid().spacing()), to_f64(state.meter_grid().spacing()));
    let ps: Vec<f64> = (0..ns).map(|i| joint[i * nm..(i + 1) * nm].iter().sum::<f64>() * hm).collect();
    let w: Vec<f64> = (0..nm).map(|j| (0..ns).map(|i| joint[i * nm + j]).sum::<f64>() * hs).collect();
    Ok((joint, ps, w, hs, hm))
}

pub fn no_information_audit<T: Real>(
    signal: &Wavefunction<T>,
    meter: &Wavefunction<T>,
    cfg: &InteractionConfig<T>,
) -> Result<AuditReport> {
    let signal = prepared(signal, cfg.signal_angle());
    let meter = prepared(meter, cfg.homodyne_angle());
    let (joint, ps, w, hs, hm) = joint_density(&signal, &meter, cfg)?;
    let nm = w.len();
    let ps0: Vec<f64> = signal.marginal().into_iter().map(to_f64).collect();

    let information: f64 = (0..ps.len())
        .into_par_iter()
        .map(|i| {
            let mut acc = 0.0;
            for j in 0..nm {
                let p = joint[i * nm + j];
                if p > 0.0 && ps[i] > 0.0 && w[j] > 0.0 {
                    acc += p * (p.ln() - ps[i].ln() - w[j].ln());
                }
            }
            acc
        })
        .sum::<f64>()
        * hs
        * hm;

    let peak = w.iter().copied().fold(0.0, f64::max);
    let outcomes: Vec<usize> = (0..nm).filter(|&j| w[j] > peak * OUTCOME_CUTOFF && w[j] > OUTCOME_FLOOR).collect();
    let tv: Vec<f64> = outcomes
        .par_iter()
        .map(|&j| {
            (0..ps0.len())
                .map(|i| (joint[i * nm + j] / w[j] - ps0[i]).abs())
                .sum::<f64>()
                * hs
                * 0.5
        })
        .collect();
    let max_tv = tv.iter().copied().fold(0.0, f64::max);
    let mean_tv = outcomes.iter().zip(&tv).map(|(&j, &t)| w[j] * t).sum::<f64>() * hm;

    let grid = meter.grid();
    let mean = w.iter().enumerate().map(|(j, &v)| to_f64(grid.point(j)) * v).sum::<f64>() * hm;
    let normalization = w.iter().sum::<f64>() * hm;
    let preserved = max_tv < PRESERVATION_LIMIT;
    let information = information.max(0.0);
    Ok(AuditReport {
        distribution_preserved: preserved,
        information_gained: information,
        max_total_variation: max_tv,
        mean_total_variation: mean_tv,
        outcomes_checked: outcomes.len(),
        outcome_normalization: normalization,
        outcome_mean: mean,
        consistent: !preserved || information < 1e-6,
    })
}

/// `max_x |ρ_c(x) − |Y(x)|² |ψ_s(x)|² / W(x̄_m)|` between the conditional
/// density from the entangled state and the one built from `Ŷ`.
pub fn bayes_identity_residual<T: Real>(
    signal: &Wavefunction<T>,
    meter: &Wavefunction<T>,
    cfg: &InteractionConfig<T>,
    outcome: T,
) -> Result<f64> {
    let signal = prepared(signal, cfg.signal_angle());
    let cond = condition_on_outcome(&entangle(&signal, meter, cfg)?, outcome)?;
    let y = build_probability_amplitude(meter, cfg, outcome, signal.grid());
    let w = y.outcome_density(&signal)?;
    let predicted = y.apply(&signal)?.marginal();
    Ok(cond
        .wavefunction
        .marginal()
        .into_iter()
        .zip(predicted)
        .map(|(a, b)| to_f64((a - b / w).abs()))
        .fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::quasi_eigenstate;
    use crate::quadrature::{make_fock, make_squeezed_vacuum, make_state, make_vacuum, SqueezedVacuumSpec, StateSpec};
    use std::f64::consts::PI;

    fn grid() -> QuadratureGrid<f64> {
        QuadratureGrid::standard()
    }

    #[test]
    fn in_phase_weights_are_flat() {
        let cfg = InteractionConfig::in_phase(1.0, 0.3).unwrap();
        let m = make_squeezed_vacuum(grid(), cfg.homodyne_angle(), SqueezedVacuumSpec::aligned(0.5, 0.1).unwrap()).unwrap();
        let y = build_probability_amplitude(&m, &cfg, 0.4, &grid());
        assert!(y.weight_variation() < 1e-9, "{}", y.weight_variation());
        assert!((y.weights()[0] - m.amplitude_at(0.4).norm_sqr()).abs() < 1e-9);
    }

    #[test]
    fn out_of_phase_weights_follow_shifted_meter() {
        let cfg = InteractionConfig::out_of_phase(1.0, 0.0).unwrap();
        let m = make_vacuum(grid(), cfg.homodyne_angle()).unwrap();
        let y = build_probability_amplitude(&m, &cfg, 0.3, &grid());
        let g = grid();
        for k in (0..g.len()).step_by(37) {
            let x = g.point(k);
            let want = (-(0.3 + x).powi(2)).exp() / PI.sqrt();
            assert!((y.weights()[k] - want).abs() < 1e-9);
        }
        assert!(y.weight_variation() > 0.5);
    }

    #[test]
    fn zero_coupling_is_a_constant() {
        let cfg = InteractionConfig::new(0.0, 0.0, 0.6).unwrap();
        let m = make_vacuum(grid(), 0.6).unwrap();
        let y = build_probability_amplitude(&m, &cfg, -0.2, &grid());
        let c = m.amplitude_at(-0.2);
        assert!(y.diagonal.iter().all(|v| (v - c).norm() < 1e-12));
    }

    #[test]
    fn conditional_state_is_the_filtered_signal() {
        let s = make_state(grid(), 0.0, &StateSpec::Cat { alpha: Complex::new(1.2, 0.4) }).unwrap();
        let m = make_vacuum(grid(), 0.0).unwrap();
        for cfg in [
            InteractionConfig::new(0.7, 0.2, 0.2 + PI / 3.0).unwrap(),
            InteractionConfig::out_of_phase(1.0, 0.5).unwrap(),
            InteractionConfig::in_phase(1.3, 0.1).unwrap(),
        ] {
            let sp = prepared(&s, cfg.signal_angle());
            let cond = condition_on_outcome(&entangle(&sp, &m, &cfg).unwrap(), 0.25).unwrap();
            let y = build_probability_amplitude(&m, &cfg, 0.25, &grid());
            let mut filtered = y.apply(&sp).unwrap();
            filtered.normalize().unwrap();
            let worst = filtered
                .amplitudes()
                .iter()
                .zip(cond.wavefunction.amplitudes())
                .map(|(a, b)| (a - b).norm())
                .fold(0.0, f64::max);
            assert!(worst < 1e-8, "{worst}");
            assert!(bayes_identity_residual(&s, &m, &cfg, 0.25).unwrap() < 1e-8);
        }
    }

    #[test]
    fn back_action_evading_condition() {
        let meter = FockVector::<f64>::squeezed_vacuum(14, 0.3, 0.0);
        for &d in &[0.0, PI / 4.0, PI / 2.0] {
            let cfg = InteractionConfig::new(0.8, 0.2, 0.2 + d).unwrap();
            let r = qnd_condition_check(&cfg, &meter);
            assert!(r < 1e-6, "Δ={d}: {r}");
            // the conjugate signal quadrature does not commute with Ŷ
            let other = quadrature_operator::<f64>(14, cfg.pump_phase());
            let y = probability_amplitude_fock(&cfg, &meter, 0.3);
            assert!(y.commutator(&other).max_abs() > 1e-3);
        }
        let cfg = InteractionConfig::new(0.0, 0.0, 1.0).unwrap();
        assert!(qnd_condition_check(&cfg, &FockVector::vacuum(10)) < 1e-14);
    }

    #[test]
    fn in_phase_readings_carry_no_information() {
        let s = make_fock(grid(), 0.0, 1).unwrap();
        let m = make_vacuum(grid(), 0.0).unwrap();
        for &k in &[0.0, 0.5, 1.0] {
            let cfg = InteractionConfig::in_phase(k, 0.4).unwrap();
            let rep = no_information_audit(&s, &m, &cfg).unwrap();
            assert!(rep.distribution_preserved, "{rep:?}");
            assert!(rep.information_gained < 1e-6, "{rep:?}");
            assert!((rep.outcome_normalization - 1.0).abs() < 1e-8);
            assert!(rep.consistent);
        }
    }

    #[test]
    fn out_of_phase_squeezed_meter_is_informative() {
        let mgrid = QuadratureGrid::symmetric(8.0, 1024).unwrap();
        let cfg = InteractionConfig::out_of_phase(1.0, 0.0).unwrap();
        let s = make_fock(grid(), 0.0, 1).unwrap();
        let spec = SqueezedVacuumSpec::aligned(2.5, cfg.homodyne_angle()).unwrap();
        let m = make_squeezed_vacuum(mgrid, cfg.homodyne_angle(), spec).unwrap();
        let rep = no_information_audit(&s, &m, &cfg).unwrap();
        assert!(!rep.distribution_preserved);
        assert!(rep.information_gained > 0.5, "{rep:?}");
        assert!((rep.outcome_normalization - 1.0).abs() < 1e-8);
    }

    #[test]
    fn eigenstates_are_the_exception() {
        let fine = QuadratureGrid::symmetric(8.0, 1024).unwrap();
        let cfg = InteractionConfig::out_of_phase(1.0, 0.0).unwrap();
        let x0 = 0.8;
        let s = make_state(fine, cfg.signal_angle(), &quasi_eigenstate(x0, cfg.signal_angle(), 2.5)).unwrap();
        let m = make_vacuum(fine, cfg.homodyne_angle()).unwrap();
        let rep = no_information_audit(&s, &m, &cfg).unwrap();
        assert!(rep.mean_total_variation < 0.05, "{rep:?}");
        // the reading sits at −κ x₀
        assert!((-rep.outcome_mean - x0).abs() < 0.1, "{rep:?}");
        assert!(rep.information_gained > 0.0);
    }
}

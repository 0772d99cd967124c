//! Identity suite: operator identities against the Fock oracle, the grid
//! evolution against the oracle, the in-phase invariances and the Wigner
//! convolution identities.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::fock::{baker_hausdorff_residual, displacement_identity_check, evolve_product_hamiltonian, FockVector};
use crate::grid::QuadratureGrid;
use crate::qnd::{condition_on_outcome, entangle, meter_distribution, total_variation, InteractionConfig};
use crate::quadrature::{make_state, SqueezedVacuumSpec, StateSpec, Wavefunction};
use crate::wigner::convolution_identity_check;

/// Fock dimension for comparing the grid evolution with the oracle.
pub const ORACLE_DIM: usize = 160;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CheckOutcome {
    pub name: String,
    pub value: f64,
    pub limit: f64,
    /// `true` when the value must exceed the limit.
    pub lower_bound: bool,
    pub passed: bool,
}

impl CheckOutcome {
    pub fn below(name: impl Into<String>, value: f64, limit: f64) -> Self {
        Self {
            name: name.into(),
            value,
            limit,
            lower_bound: false,
            passed: value < limit,
        }
    }

    pub fn above(name: impl Into<String>, value: f64, limit: f64) -> Self {
        Self {
            name: name.into(),
            value,
            limit,
            lower_bound: true,
            passed: value > limit,
        }
    }

    pub fn line(&self) -> String {
        format!(
            "{:<48} {:>12.3e} {} {:<9.1e} {}",
            self.name,
            self.value,
            if self.lower_bound { ">" } else { "<" },
            self.limit,
            if self.passed { "PASS" } else { "FAIL" }
        )
    }
}

fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    (0..n).map(|k| a + (b - a) * k as f64 / (n - 1) as f64).collect()
}

/// Largest shift-identity residual over `β, x ∈ [−2, 2]` (5 values each) and
/// `θ′ − θ ∈ {0, π/6, π/4, π/2, 2π/3}`.
pub fn displacement_sweep() -> f64 {
    let theta = 0.2;
    let deltas = [0.0, PI / 6.0, PI / 4.0, PI / 2.0, 2.0 * PI / 3.0];
    let cases: Vec<(f64, f64, f64)> = linspace(-2.0, 2.0, 5)
        .into_iter()
        .flat_map(|b| deltas.iter().flat_map(move |&d| linspace(-2.0, 2.0, 5).into_iter().map(move |x| (b, d, x))))
        .collect();
    cases
        .par_iter()
        .map(|&(b, d, x)| displacement_identity_check(b, theta, theta + d, x))
        .reduce(|| 0.0, f64::max)
}

/// Largest factorization residual for `|β| ≤ 2` on the lowest number states.
pub fn baker_hausdorff_sweep() -> f64 {
    let deltas = [0.0, PI / 6.0, PI / 2.0, 2.0 * PI / 3.0];
    linspace(-2.0, 2.0, 5)
        .into_iter()
        .flat_map(|b| deltas.iter().map(move |&d| (b, d)))
        .collect::<Vec<_>>()
        .par_iter()
        .map(|&(b, d)| baker_hausdorff_residual(b, 0.1, 0.1 + d, 64))
        .reduce(|| 0.0, f64::max)
}

/// Test states of the oracle comparison, squeezed ones along the axis they
/// are represented on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OracleState {
    Vacuum,
    Squeezed,
    Fock1,
}

impl OracleState {
    fn spec(self, angle: f64) -> StateSpec<f64> {
        match self {
            OracleState::Vacuum => StateSpec::Vacuum,
            OracleState::Fock1 => StateSpec::Fock { n: 1 },
            OracleState::Squeezed => StateSpec::squeezed_vacuum(SqueezedVacuumSpec::aligned(1.0, angle).expect("r = 1")),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OracleCase {
    pub signal: OracleState,
    pub meter: OracleState,
    pub kappa: f64,
    pub delta: f64,
    pub residual: f64,
}

/// Sup-norm distance between [`entangle`] and the projected oracle evolution
/// over all signal/meter/κ/Δ combinations.
pub fn oracle_equivalence(dim: usize) -> Result<Vec<OracleCase>> {
    let grid = QuadratureGrid::standard();
    let phi = 0.3;
    let mut cases = Vec::new();
    for s in [OracleState::Vacuum, OracleState::Squeezed, OracleState::Fock1] {
        for m in [OracleState::Vacuum, OracleState::Squeezed] {
            for kappa in [0.5, 1.0] {
                for delta in [0.0, PI / 4.0, PI / 2.0] {
                    cases.push((s, m, kappa, delta));
                }
            }
        }
    }
    cases
        .par_iter()
        .map(|&(s, m, kappa, delta)| {
            let cfg = InteractionConfig::new(kappa, phi, phi + delta)?;
            let sspec = s.spec(cfg.signal_angle());
            let mspec = m.spec(cfg.homodyne_angle());
            let signal = make_state(grid, cfg.signal_angle(), &sspec)?;
            let meter = make_state(grid, cfg.homodyne_angle(), &mspec)?;
            let state = entangle(&signal, &meter, &cfg)?;
            let evo = evolve_product_hamiltonian(&FockVector::from_spec(dim, &sspec)?, &FockVector::from_spec(dim, &mspec)?, kappa, phi)?;
            let oracle = evo.project(&grid, &grid, cfg.homodyne_angle());
            let residual = state
                .amplitudes()
                .iter()
                .zip(&oracle)
                .map(|(a, b)| (a - b).norm())
                .fold(0.0, f64::max);
            Ok(OracleCase {
                signal: s,
                meter: m,
                kappa,
                delta,
                residual,
            })
        })
        .collect()
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct InPhaseResiduals {
    /// `max |W(x_m) − |ψ_m(x_m)|²|`.
    pub meter_marginal: f64,
    /// Largest total-variation change of the signal density over outcomes.
    pub conditional_density: f64,
    /// `max |W_c(x, p) − W_s(x, p + κ x_m)|`.
    pub wigner_translation: f64,
}

/// The in-phase invariances for a cat signal and a squeezed meter.
pub fn in_phase_residuals() -> Result<InPhaseResiduals> {
    let grid = QuadratureGrid::standard();
    let phi = 0.7;
    let cfg = InteractionConfig::in_phase(1.0, phi)?;
    let signal = make_state(grid, cfg.signal_angle(), &StateSpec::Cat { alpha: num_complex::Complex::new(1.2, 0.3) })?;
    let meter = make_state(grid, phi, &StateSpec::squeezed_vacuum(SqueezedVacuumSpec::aligned(0.6, phi)?))?;
    let state = entangle(&signal, &meter, &cfg)?;
    let w = meter_distribution(&state);
    let meter_marginal = w.iter().zip(meter.marginal()).map(|(a, b): (&f64, f64)| (a - b).abs()).fold(0.0, f64::max);
    let outcomes = [-1.0, 0.0, 0.37, 1.5];
    let mut conditional_density: f64 = 0.0;
    let mut wigner_translation: f64 = 0.0;
    for &xm in &outcomes {
        let c = condition_on_outcome(&state, xm)?;
        conditional_density = conditional_density.max(total_variation(&c.wavefunction.marginal(), &signal.marginal(), grid.spacing()));
        wigner_translation = wigner_translation.max(convolution_identity_check(&signal, &meter, &cfg, xm)?.residual);
    }
    Ok(InPhaseResiduals {
        meter_marginal,
        conditional_density,
        wigner_translation,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ConvolutionCase {
    pub delta: f64,
    pub meter: OracleState,
    pub residual: f64,
    pub filter_agreement: f64,
}

/// Convolution identity at `θ − φ ∈ {π/6, π/4, π/2}` for a vacuum signal with
/// a squeezed meter, plus vacuum/vacuum at `π/2`.
pub fn convolution_cases() -> Result<Vec<ConvolutionCase>> {
    let grid = QuadratureGrid::standard();
    let phi = 0.1;
    let mut cases: Vec<(f64, OracleState)> = [PI / 6.0, PI / 4.0, PI / 2.0].iter().map(|&d| (d, OracleState::Squeezed)).collect();
    cases.push((PI / 2.0, OracleState::Vacuum));
    cases
        .iter()
        .map(|&(delta, m)| {
            let cfg = InteractionConfig::new(1.0, phi, phi + delta)?;
            let signal: Wavefunction<f64> = make_state(grid, cfg.signal_angle(), &StateSpec::Vacuum)?;
            let meter = make_state(grid, cfg.homodyne_angle(), &m.spec(cfg.homodyne_angle()))?;
            let check = convolution_identity_check(&signal, &meter, &cfg, 0.4)?;
            Ok(ConvolutionCase {
                delta,
                meter: m,
                residual: check.residual,
                filter_agreement: check.filter_agreement,
            })
        })
        .collect()
}

/// The quick identities, as printed by the `check` command.
pub fn identity_suite() -> Result<Vec<CheckOutcome>> {
    let mut out = vec![
        CheckOutcome::below("displacement of quadrature eigenstates (5x5x5)", displacement_sweep(), 1e-5),
        CheckOutcome::below("displacement factorization", baker_hausdorff_sweep(), 1e-8),
    ];
    let oracle = oracle_equivalence(ORACLE_DIM)?;
    let worst = oracle.iter().map(|c| c.residual).fold(0.0, f64::max);
    out.push(CheckOutcome::below("grid evolution vs Fock oracle", worst, 1e-5));
    let ip = in_phase_residuals()?;
    out.push(CheckOutcome::below("in-phase meter marginal", ip.meter_marginal, 1e-8));
    out.push(CheckOutcome::below("in-phase conditional density (TV)", ip.conditional_density, 1e-8));
    out.push(CheckOutcome::below("in-phase Wigner translation", ip.wigner_translation, 1e-6));
    for c in convolution_cases()? {
        let tag = format!("Δ={:.4}, {:?} meter", c.delta, c.meter);
        out.push(CheckOutcome::below(format!("convolution identity {tag}"), c.residual, 1e-5));
        out.push(CheckOutcome::below(format!("filter Wigner paths {tag}"), c.filter_agreement, 1e-6));
    }
    Ok(out)
}

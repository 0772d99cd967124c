//! Indirect tomography of the signal: out-of-phase readings of a squeezed
//! meter, swept over the pump phase, give rescaled copies of the signal
//! quadrature densities, and filtered back-projection turns those into a
//! Wigner function.
//!
//! For pump phase `φ` the homodyne angle is `θ = φ + π/2` and the meter is
//! squeezed along `θ`, so its density is a real Gaussian of variance
//! `e^{−2r}/2`. The meter reading `x_m` points at the signal value
//! `x_s = −x_m/κ` of the quadrature `x̂_s(φ + π/2)`.

use std::path::{Path, PathBuf};

use num_complex::Complex;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::QuadratureGrid;
use crate::io::{read_csv, write_csv, write_json};
use crate::qnd::{condition_on_outcome, entangle, meter_distribution_quadrature, prepared, InteractionConfig};
use crate::quadrature::{make_squeezed_vacuum, SqueezedVacuumSpec, Wavefunction};
use crate::sampling::{derive_seed, rng_from_seed, Binning, Histogram, InverseCdfSampler};
use crate::scalar::{from_usize, lit, to_f64, Real};
use crate::wigner::WignerGrid;

/// Fewest phases accepted by the back-projection.
pub const MIN_PHASES: usize = 16;
/// Width of the projection cells fed to the back-projection.
pub const PROJECTION_STEP: f64 = 0.12;
/// Meter mass allowed to fall outside the meter grid.
pub const MARGINAL_LOSS_LIMIT: f64 = 1e-8;

/// Phase sweep with a squeezed-vacuum meter whose squeezing axis follows the
/// homodyne angle.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real + Serialize + serde::de::DeserializeOwned")]
pub struct TomographyPlan<T> {
    phases: Vec<T>,
    shots_per_phase: usize,
    squeezing: T,
    kappa: T,
    seed: u64,
    meter_grid: QuadratureGrid<T>,
}

/// Smallest power-of-two grid on `[−L, L]`, `L = 8 max(1, κ)`, that resolves
/// the squeezed meter.
pub fn default_meter_grid<T: Real>(squeezing: T, kappa: T) -> QuadratureGrid<T> {
    let half = lit::<T>(8.0) * kappa.max(T::one());
    let sigma = ((-(squeezing + squeezing)).exp() * lit(0.5)).sqrt();
    let mut n = 512usize;
    while (half + half) / from_usize::<T>(n - 1) > sigma * lit(0.5) && n < (1 << 16) {
        n *= 2;
    }
    QuadratureGrid::symmetric(half, n).expect("valid default grid")
}

impl<T: Real> TomographyPlan<T> {
    pub fn new(phases: Vec<T>, shots_per_phase: usize, squeezing: T, kappa: T, seed: u64) -> Result<Self> {
        if phases.is_empty() {
            return Err(Error::param("phases", "at least one phase is required"));
        }
        if phases.iter().any(|&p| !(p >= T::zero() && p < T::PI())) {
            return Err(Error::param("phases", "every phase must lie in [0, π)"));
        }
        if phases.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::param("phases", "phases must be strictly increasing"));
        }
        if !(squeezing >= T::zero()) || !squeezing.is_finite() {
            return Err(Error::param("squeezing", "r must be finite and nonnegative"));
        }
        if !(kappa >= T::zero()) || !kappa.is_finite() {
            return Err(Error::param("kappa", "κ must be finite and nonnegative"));
        }
        Ok(Self {
            meter_grid: default_meter_grid(squeezing, kappa),
            phases,
            shots_per_phase,
            squeezing,
            kappa,
            seed,
        })
    }

    /// `n` phases `kπ/n`.
    pub fn uniform(n: usize, shots_per_phase: usize, squeezing: T, kappa: T, seed: u64) -> Result<Self> {
        let phases = (0..n).map(|k| T::PI() * from_usize::<T>(k) / from_usize::<T>(n)).collect();
        Self::new(phases, shots_per_phase, squeezing, kappa, seed)
    }

    pub fn with_meter_grid(mut self, grid: QuadratureGrid<T>) -> Self {
        self.meter_grid = grid;
        self
    }

    pub fn with_shots(mut self, shots: usize) -> Self {
        self.shots_per_phase = shots;
        self
    }

    pub fn phases(&self) -> &[T] {
        &self.phases
    }

    pub fn shots_per_phase(&self) -> usize {
        self.shots_per_phase
    }

    pub fn squeezing(&self) -> T {
        self.squeezing
    }

    pub fn kappa(&self) -> T {
        self.kappa
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn meter_grid(&self) -> &QuadratureGrid<T> {
        &self.meter_grid
    }

    /// Variance `e^{−2r}/2` of the meter along the homodyne axis.
    pub fn kernel_variance(&self) -> T {
        (-(self.squeezing + self.squeezing)).exp() * lit(0.5)
    }

    pub fn config_at(&self, phase: T) -> Result<InteractionConfig<T>> {
        InteractionConfig::out_of_phase(self.kappa, phase)
    }

    /// Squeezing locked to the pump: `ε = 2θ = 2φ + π`.
    pub fn meter_spec_at(&self, phase: T) -> Result<SqueezedVacuumSpec<T>> {
        SqueezedVacuumSpec::aligned(self.squeezing, phase + T::FRAC_PI_2())
    }

    /// Fresh meter in the `θ` representation on the meter grid.
    pub fn meter_at(&self, phase: T) -> Result<Wavefunction<T>> {
        make_squeezed_vacuum(self.meter_grid, phase + T::FRAC_PI_2(), self.meter_spec_at(phase)?)
    }
}

/// Exact density of the meter reading at pump phase `phase`, on the plan's
/// meter grid.
pub fn marginal_at_phase<T: Real>(signal: &Wavefunction<T>, plan: &TomographyPlan<T>, phase: T) -> Result<Vec<T>> {
    let cfg = plan.config_at(phase)?;
    // rejects an unresolvable kernel
    plan.meter_at(phase)?;
    let signal = prepared(signal, cfg.signal_angle());
    let v = plan.kernel_variance();
    let norm = T::one() / (T::TAU() * v).sqrt();
    let two_v = v + v;
    let grid = plan.meter_grid();
    let density = meter_distribution_quadrature(&signal, |u: T| (-(u * u) / two_v).exp() * norm, grid, &cfg);
    let mass = density.iter().copied().sum::<T>() * grid.spacing();
    if (T::one() - mass).abs() > lit(MARGINAL_LOSS_LIMIT) {
        let (lo, hi) = signal.support(lit(1e-6));
        let spread = lit::<T>(6.0) * v.sqrt();
        return Err(Error::ShiftOverflow {
            needed_min: to_f64(-plan.kappa() * hi - spread),
            needed_max: to_f64(-plan.kappa() * lo + spread),
            grid_min: to_f64(grid.x_min()),
            grid_max: to_f64(grid.x_max()),
        });
    }
    Ok(density)
}

/// `n_shots` homodyne readings of the meter at pump phase `phase`.
pub fn sample_homodyne<T: Real>(
    signal: &Wavefunction<T>,
    plan: &TomographyPlan<T>,
    phase: T,
    n_shots: usize,
    seed: u64,
) -> Result<Vec<T>> {
    let density = marginal_at_phase(signal, plan, phase)?;
    let sampler = InverseCdfSampler::new(&plan.meter_grid().points(), &density)?;
    Ok(sampler.sample(&mut rng_from_seed(seed), n_shots))
}

/// Fidelity between the signal and its state after the reading `x_m` at
/// pump phase `phase`.
pub fn post_measurement_fidelity<T: Real>(signal: &Wavefunction<T>, plan: &TomographyPlan<T>, phase: T, x_m: T) -> Result<T> {
    let cfg = plan.config_at(phase)?;
    let signal = prepared(signal, cfg.signal_angle());
    let state = entangle(&signal, &plan.meter_at(phase)?, &cfg)?;
    let cond = condition_on_outcome(&state, x_m)?;
    signal.fidelity(&cond.wavefunction)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetMeta {
    pub kappa: f64,
    pub squeezing: f64,
    pub seed: u64,
    pub phases: Vec<f64>,
    pub shots_per_phase: Vec<usize>,
}

/// Sampled meter readings, one batch per pump phase.
#[derive(Debug, Clone, PartialEq)]
pub struct TomographyDataset {
    pub kappa: f64,
    pub squeezing: f64,
    pub seed: u64,
    pub phases: Vec<f64>,
    pub samples: Vec<Vec<f64>>,
}

impl TomographyDataset {
    /// Samples every phase of the plan, each batch from its own derived seed.
    pub fn acquire<T: Real>(signal: &Wavefunction<T>, plan: &TomographyPlan<T>) -> Result<Self> {
        let samples = plan
            .phases()
            .par_iter()
            .enumerate()
            .map(|(k, &phase)| {
                sample_homodyne(signal, plan, phase, plan.shots_per_phase(), derive_seed(plan.seed(), k as u64))
                    .map(|s| s.into_iter().map(to_f64).collect())
            })
            .collect::<Result<Vec<Vec<f64>>>>()?;
        Ok(Self {
            kappa: to_f64(plan.kappa()),
            squeezing: to_f64(plan.squeezing()),
            seed: plan.seed(),
            phases: plan.phases().iter().map(|&p| to_f64(p)).collect(),
            samples,
        })
    }

    pub fn meta(&self) -> DatasetMeta {
        DatasetMeta {
            kappa: self.kappa,
            squeezing: self.squeezing,
            seed: self.seed,
            phases: self.phases.clone(),
            shots_per_phase: self.samples.iter().map(Vec::len).collect(),
        }
    }

    /// Writes `<stem>.csv` (phase, outcome) and the `<stem>.json` sidecar.
    /// Returns both paths.
    pub fn write(&self, dir: &Path, stem: &str) -> Result<(PathBuf, PathBuf)> {
        let csv = dir.join(format!("{stem}.csv"));
        let json = dir.join(format!("{stem}.json"));
        write_csv(
            &csv,
            &["phase [rad]", "outcome [quadrature units]"],
            self.phases
                .iter()
                .zip(&self.samples)
                .flat_map(|(&p, s)| s.iter().map(move |&x| vec![p, x])),
        )?;
        write_json(&json, &self.meta())?;
        Ok((csv, json))
    }

    pub fn read(dir: &Path, stem: &str) -> Result<Self> {
        let meta: DatasetMeta = serde_json::from_reader(std::fs::File::open(dir.join(format!("{stem}.json")))?)?;
        let (_, rows) = read_csv(dir.join(format!("{stem}.csv")))?;
        let mut samples = vec![Vec::new(); meta.phases.len()];
        let mut k = 0;
        for row in rows {
            if row.len() != 2 {
                return Err(Error::Malformed("dataset rows need two columns".into()));
            }
            while k < meta.phases.len() && (row[0] - meta.phases[k]).abs() > 1e-9 {
                k += 1;
            }
            if k == meta.phases.len() {
                return Err(Error::Malformed(format!("phase {} is not in the sidecar", row[0])));
            }
            samples[k].push(row[1]);
        }
        let counts: Vec<usize> = samples.iter().map(Vec::len).collect();
        if counts != meta.shots_per_phase {
            return Err(Error::Malformed("shot counts disagree with the sidecar".into()));
        }
        Ok(Self {
            kappa: meta.kappa,
            squeezing: meta.squeezing,
            seed: meta.seed,
            phases: meta.phases,
            samples,
        })
    }

    pub fn histograms(&self, binning: Binning) -> Result<Vec<Histogram>> {
        self.samples.iter().map(|s| Histogram::from_samples(s, binning)).collect()
    }
}

/// Exact meter densities for every phase of a plan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExactMarginals {
    pub kappa: f64,
    pub squeezing: f64,
    pub phases: Vec<f64>,
    pub x_m: Vec<f64>,
    pub densities: Vec<Vec<f64>>,
}

impl ExactMarginals {
    pub fn compute<T: Real>(signal: &Wavefunction<T>, plan: &TomographyPlan<T>) -> Result<Self> {
        let densities = plan
            .phases()
            .par_iter()
            .map(|&phase| marginal_at_phase(signal, plan, phase).map(|d| d.into_iter().map(to_f64).collect()))
            .collect::<Result<Vec<Vec<f64>>>>()?;
        Ok(Self {
            kappa: to_f64(plan.kappa()),
            squeezing: to_f64(plan.squeezing()),
            phases: plan.phases().iter().map(|&p| to_f64(p)).collect(),
            x_m: plan.meter_grid().points().into_iter().map(to_f64).collect(),
            densities,
        })
    }
}

/// Estimated density of the signal quadrature `x̂_s(phase + π/2)` on
/// uniformly spaced nodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarginalEstimate {
    pub phase: f64,
    pub x: Vec<f64>,
    pub density: Vec<f64>,
}

impl MarginalEstimate {
    /// Signal quadrature angle.
    pub fn angle(&self) -> f64 {
        self.phase + std::f64::consts::FRAC_PI_2
    }

    fn width(&self) -> f64 {
        (self.x[self.x.len() - 1] - self.x[0]) / (self.x.len() - 1) as f64
    }

    /// Piecewise-linear value, zero outside the nodes.
    pub fn value_at(&self, x: f64) -> f64 {
        let n = self.x.len();
        let u = (x - self.x[0]) / self.width();
        if !(u >= 0.0) || u > (n - 1) as f64 {
            return 0.0;
        }
        let k = (u.floor() as usize).min(n - 2);
        let t = u - k as f64;
        self.density[k] * (1.0 - t) + self.density[k + 1] * t
    }

    /// `∫_{x_0}^{x}` of the piecewise-linear density.
    fn integral_to(&self, cumulative: &[f64], x: f64) -> f64 {
        let n = self.x.len();
        let h = self.width();
        let u = ((x - self.x[0]) / h).clamp(0.0, (n - 1) as f64);
        let k = (u.floor() as usize).min(n - 2);
        let s = (u - k as f64) * h;
        let slope = (self.density[k + 1] - self.density[k]) / h;
        cumulative[k] + self.density[k] * s + slope * s * s * 0.5
    }

    fn cumulative(&self) -> Vec<f64> {
        let h = self.width();
        let mut c = vec![0.0; self.x.len()];
        for k in 1..self.x.len() {
            c[k] = c[k - 1] + (self.density[k] + self.density[k - 1]) * h * 0.5;
        }
        c
    }

    /// Averages of the density over the cells `[c − w/2, c + w/2]`.
    pub fn cell_averages(&self, centres: &[f64], w: f64) -> Vec<f64> {
        let c = self.cumulative();
        centres
            .iter()
            .map(|&x| (self.integral_to(&c, x + w * 0.5) - self.integral_to(&c, x - w * 0.5)) / w)
            .collect()
    }

    /// `Σ |ρ̂(x_k) − ρ(x_k)| Δx` over the nodes.
    pub fn l1_distance(&self, truth: impl Fn(f64) -> f64) -> f64 {
        self.x
            .iter()
            .zip(&self.density)
            .map(|(&x, &d)| (d - truth(x)).abs())
            .sum::<f64>()
            * self.width()
    }

    /// First-order removal of a Gaussian blur of variance `v`:
    /// `ρ − (v/2) ρ''`.
    pub fn deconvolved(&self, v: f64) -> Self {
        let n = self.x.len();
        let h2 = self.width() * self.width();
        let d = &self.density;
        let at = |k: isize| if k < 0 || k >= n as isize { 0.0 } else { d[k as usize] };
        let density = (0..n as isize)
            .map(|k| at(k) - 0.5 * v * (at(k + 1) - 2.0 * at(k) + at(k - 1)) / h2)
            .collect();
        Self {
            phase: self.phase,
            x: self.x.clone(),
            density,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MarginalOptions {
    pub binning: Binning,
    /// Undo the blur of the meter kernel, of variance `e^{−2r}/(2κ²)` in
    /// signal units.
    pub deconvolve: bool,
}

impl Default for MarginalOptions {
    fn default() -> Self {
        Self {
            binning: Binning::FreedmanDiaconis,
            deconvolve: false,
        }
    }
}

fn kernel_variance_in_signal_units(squeezing: f64, kappa: f64) -> f64 {
    (-2.0 * squeezing).exp() * 0.5 / (kappa * kappa)
}

fn require_coupling(kappa: f64) -> Result<()> {
    if kappa == 0.0 {
        return Err(Error::param("kappa", "an uncoupled meter carries no signal information"));
    }
    Ok(())
}

/// Signal densities from sampled meter readings, by `x_s = −x_m/κ`.
pub fn reconstruct_marginals(dataset: &TomographyDataset, options: &MarginalOptions) -> Result<Vec<MarginalEstimate>> {
    require_coupling(dataset.kappa)?;
    let v = kernel_variance_in_signal_units(dataset.squeezing, dataset.kappa);
    dataset
        .phases
        .iter()
        .zip(&dataset.samples)
        .map(|(&phase, samples)| {
            let xs: Vec<f64> = samples.iter().map(|&x| -x / dataset.kappa).collect();
            let h = Histogram::from_samples(&xs, options.binning)?;
            let est = MarginalEstimate {
                phase,
                x: h.centers(),
                density: h.density,
            };
            Ok(if options.deconvolve { est.deconvolved(v) } else { est })
        })
        .collect()
}

/// Signal densities from exact meter densities, `ρ(x_s) = κ W̃(−κ x_s)`.
pub fn reconstruct_exact_marginals(exact: &ExactMarginals, options: &MarginalOptions) -> Result<Vec<MarginalEstimate>> {
    require_coupling(exact.kappa)?;
    let v = kernel_variance_in_signal_units(exact.squeezing, exact.kappa);
    let sign = exact.kappa.signum();
    Ok(exact
        .phases
        .iter()
        .zip(&exact.densities)
        .map(|(&phase, d)| {
            let mut pairs: Vec<(f64, f64)> = exact
                .x_m
                .iter()
                .zip(d)
                .map(|(&x, &w)| (-x / exact.kappa, w * exact.kappa * sign))
                .collect();
            pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite nodes"));
            let est = MarginalEstimate {
                phase,
                x: pairs.iter().map(|p| p.0).collect(),
                density: pairs.iter().map(|p| p.1).collect(),
            };
            if options.deconvolve {
                est.deconvolved(v)
            } else {
                est
            }
        })
        .collect())
}

/// Settings of the filtered back-projection.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BackProjection {
    /// Projection cell width.
    pub step: f64,
    /// Projections are tabulated on `[−half_width, half_width]`.
    pub half_width: f64,
    /// Output axis, used for both `x` and `p`.
    pub output_half_width: f64,
    pub output_points: usize,
    /// Cosine apodization of the ramp filter.
    pub window: bool,
}

impl Default for BackProjection {
    fn default() -> Self {
        Self {
            step: PROJECTION_STEP,
            half_width: 8.0,
            output_half_width: 5.0,
            output_points: 101,
            window: true,
        }
    }
}

/// Quadrature weights of the projection angles on the half circle.
fn angle_weights(angles: &[f64]) -> Vec<f64> {
    let n = angles.len();
    let pi = std::f64::consts::PI;
    (0..n)
        .map(|k| {
            let prev = if k == 0 { angles[n - 1] - pi } else { angles[k - 1] };
            let next = if k + 1 == n { angles[0] + pi } else { angles[k + 1] };
            (next - prev) * 0.5
        })
        .collect()
}

/// Band-limited ramp filter (Ram–Lak) applied by FFT convolution.
fn ramp_filter(projection: &[f64], step: f64, window: bool) -> Vec<f64> {
    let n = projection.len();
    let len = (2 * n).next_power_of_two();
    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(len);
    let inv = planner.plan_fft_inverse(len);
    let pi = std::f64::consts::PI;
    let mut kernel = vec![Complex::new(0.0, 0.0); len];
    for (idx, slot) in kernel.iter_mut().enumerate() {
        let k = if idx <= len / 2 { idx as i64 } else { idx as i64 - len as i64 };
        let v = if k == 0 {
            1.0 / (4.0 * step * step)
        } else if k % 2 != 0 {
            -1.0 / (pi * k as f64 * step).powi(2)
        } else {
            0.0
        };
        *slot = Complex::new(v * step, 0.0);
    }
    fwd.process(&mut kernel);
    if window {
        for (idx, z) in kernel.iter_mut().enumerate() {
            let f = if idx <= len / 2 { idx as f64 } else { idx as f64 - len as f64 } / len as f64;
            *z *= (pi * f).cos();
        }
    }
    let mut data: Vec<Complex<f64>> = projection.iter().map(|&v| Complex::new(v, 0.0)).collect();
    data.resize(len, Complex::new(0.0, 0.0));
    fwd.process(&mut data);
    for (d, k) in data.iter_mut().zip(&kernel) {
        *d *= *k;
    }
    inv.process(&mut data);
    data[..n].iter().map(|z| z.re / len as f64).collect()
}

/// Wigner function from signal quadrature densities by filtered
/// back-projection.
pub fn reconstruct_wigner(marginals: &[MarginalEstimate], options: &BackProjection) -> Result<WignerGrid<f64>> {
    if marginals.len() < MIN_PHASES {
        return Err(Error::TooFewPhases {
            required: MIN_PHASES,
            got: marginals.len(),
        });
    }
    if !(options.step > 0.0) || !(options.half_width > options.step) || options.output_points < 2 {
        return Err(Error::param("back_projection", "needs a positive step inside the projection range"));
    }
    let mut ordered: Vec<&MarginalEstimate> = marginals.iter().collect();
    ordered.sort_by(|a, b| a.phase.partial_cmp(&b.phase).expect("finite phases"));
    let phases: Vec<f64> = ordered.iter().map(|m| m.phase).collect();
    let pi = std::f64::consts::PI;
    if phases.windows(2).any(|w| !(w[1] > w[0])) || phases[phases.len() - 1] - phases[0] >= pi {
        return Err(Error::param("phases", "back-projection needs distinct phases within one half turn"));
    }
    let weights = angle_weights(&phases);

    let half = (options.half_width / options.step).round() as usize;
    let nodes: Vec<f64> = (0..2 * half + 1).map(|j| (j as f64 - half as f64) * options.step).collect();
    let filtered: Vec<(f64, Vec<f64>)> = ordered
        .par_iter()
        .map(|m| {
            let p = m.cell_averages(&nodes, options.step);
            (m.angle(), ramp_filter(&p, options.step, options.window))
        })
        .collect();

    let axis = QuadratureGrid::symmetric(options.output_half_width, options.output_points)?;
    let n = axis.len();
    let s0 = nodes[0];
    let last = nodes.len() - 1;
    let values: Vec<f64> = (0..n * n)
        .into_par_iter()
        .map(|k| {
            let (x, p) = (axis.point(k / n), axis.point(k % n));
            filtered
                .iter()
                .zip(&weights)
                .map(|((angle, q), &w)| {
                    let t = x * angle.cos() + p * angle.sin();
                    let u = (t - s0) / options.step;
                    if !(u >= 0.0) || u >= last as f64 {
                        return 0.0;
                    }
                    let j = u.floor() as usize;
                    let f = u - j as f64;
                    w * (q[j] * (1.0 - f) + q[j + 1] * f)
                })
                .sum()
        })
        .collect();
    WignerGrid::new(axis, axis, values)
}

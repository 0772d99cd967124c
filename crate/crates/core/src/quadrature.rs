//! Single-mode wavefunctions on a quadrature grid and the standard states.
//!
//! Quadratures follow `x̂(θ) = (â e^{-iθ} + â† e^{iθ})/√2`, so the vacuum
//! has variance 1/2 along every axis. A wavefunction tagged with angle `θ`
//! holds `ψ(x; θ) = ⟨x(θ)|ψ⟩ = ⟨x| e^{-iθn̂} |ψ⟩`; in particular the
//! vacuum carries no phase in any representation.

use num_complex::Complex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::QuadratureGrid;
use crate::hermite::hermite_function;
use crate::scalar::{cis, from_usize, lit, same_angle, to_f64, wrap_angle, Real};
use crate::spectral::sinc_interpolate;

/// Largest grid spacing accepted for any state.
pub const MAX_SPACING: f64 = 0.5;
/// Amplitude (relative to the peak) allowed at the grid ends.
pub const EDGE_TOLERANCE: f64 = 1e-5;
/// Angles closer than this are treated as the same representation.
pub const ANGLE_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real + Serialize + serde::de::DeserializeOwned")]
pub struct Wavefunction<T> {
    grid: QuadratureGrid<T>,
    amplitudes: Vec<Complex<T>>,
    angle: T,
}

impl<T: Real> Wavefunction<T> {
    /// Wraps raw samples without normalizing them.
    pub fn from_samples(grid: QuadratureGrid<T>, amplitudes: Vec<Complex<T>>, angle: T) -> Result<Self> {
        if amplitudes.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "{} amplitudes for a {}-point grid",
                amplitudes.len(),
                grid.len()
            )));
        }
        Ok(Self {
            grid,
            amplitudes,
            angle: wrap_angle(angle),
        })
    }

    /// Wraps samples and rescales them to unit norm.
    pub fn normalized(grid: QuadratureGrid<T>, amplitudes: Vec<Complex<T>>, angle: T) -> Result<Self> {
        let mut psi = Self::from_samples(grid, amplitudes, angle)?;
        psi.normalize()?;
        Ok(psi)
    }

    pub fn normalize(&mut self) -> Result<()> {
        let norm = self.norm_sqr();
        if !(norm > T::zero()) || !norm.is_finite() {
            return Err(Error::Malformed("wavefunction has zero or non-finite norm".into()));
        }
        let s = T::one() / norm.sqrt();
        self.amplitudes.iter_mut().for_each(|a| *a = *a * s);
        Ok(())
    }

    pub fn grid(&self) -> &QuadratureGrid<T> {
        &self.grid
    }

    pub fn amplitudes(&self) -> &[Complex<T>] {
        &self.amplitudes
    }

    pub fn into_amplitudes(self) -> Vec<Complex<T>> {
        self.amplitudes
    }

    pub fn angle(&self) -> T {
        self.angle
    }

    /// `Σ |ψ_k|² Δx`.
    pub fn norm_sqr(&self) -> T {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum::<T>() * self.grid.spacing()
    }

    /// Probability density `|ψ(x_k)|²`.
    pub fn marginal(&self) -> Vec<T> {
        self.amplitudes.iter().map(|a| a.norm_sqr()).collect()
    }

    /// `⟨self|other⟩` on a shared grid and angle.
    pub fn inner_product(&self, other: &Self) -> Result<Complex<T>> {
        self.grid.require_match(&other.grid, "inner product")?;
        if !same_angle(self.angle, other.angle, lit(ANGLE_TOLERANCE)) {
            return Err(Error::GridMismatch(format!(
                "inner product of representations at angles {} and {}",
                self.angle, other.angle
            )));
        }
        let h = self.grid.spacing();
        let s: Complex<T> = self
            .amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum();
        Ok(s * h)
    }

    /// `|⟨self|other⟩|² / (‖self‖² ‖other‖²)`.
    pub fn fidelity(&self, other: &Self) -> Result<T> {
        let overlap = self.inner_product(other)?;
        Ok(overlap.norm_sqr() / (self.norm_sqr() * other.norm_sqr()))
    }

    /// Mean and variance of the represented quadrature.
    pub fn mean_and_variance(&self) -> (T, T) {
        let h = self.grid.spacing();
        let norm = self.norm_sqr();
        let mut m1 = T::zero();
        for (k, a) in self.amplitudes.iter().enumerate() {
            m1 = m1 + self.grid.point(k) * a.norm_sqr();
        }
        let mean = m1 * h / norm;
        let mut m2 = T::zero();
        for (k, a) in self.amplitudes.iter().enumerate() {
            let d = self.grid.point(k) - mean;
            m2 = m2 + d * d * a.norm_sqr();
        }
        (mean, m2 * h / norm)
    }

    /// Band-limited value at an arbitrary (off-grid) point.
    pub fn amplitude_at(&self, x: T) -> Complex<T> {
        sinc_interpolate(&self.amplitudes, self.grid.x_min(), self.grid.spacing(), x)
    }

    /// Same samples read as the representation at `angle`: the physical
    /// state is rotated by `e^{i(angle - self.angle) n̂}`.
    pub fn relabel_angle(&self, angle: T) -> Self {
        Self {
            grid: self.grid,
            amplitudes: self.amplitudes.clone(),
            angle: wrap_angle(angle),
        }
    }

    /// Largest amplitude at either grid end, relative to the peak.
    pub fn edge_amplitude(&self) -> T {
        let peak = self
            .amplitudes
            .iter()
            .map(|a| a.norm())
            .fold(T::zero(), T::max);
        let n = self.amplitudes.len();
        let edge = self.amplitudes[0].norm().max(self.amplitudes[n - 1].norm());
        if peak > T::zero() {
            edge / peak
        } else {
            T::zero()
        }
    }

    /// Interval where `|ψ|` exceeds `threshold · max|ψ|`.
    pub fn support(&self, threshold: T) -> (T, T) {
        let peak = self
            .amplitudes
            .iter()
            .map(|a| a.norm())
            .fold(T::zero(), T::max);
        let cut = peak * threshold;
        let first = self.amplitudes.iter().position(|a| a.norm() > cut).unwrap_or(0);
        let last = self
            .amplitudes
            .iter()
            .rposition(|a| a.norm() > cut)
            .unwrap_or(self.amplitudes.len() - 1);
        (self.grid.point(first), self.grid.point(last))
    }

    pub fn cast<U: Real>(&self) -> Wavefunction<U> {
        Wavefunction {
            grid: self.grid.cast(),
            amplitudes: self
                .amplitudes
                .iter()
                .map(|a| Complex::new(lit(to_f64(a.re)), lit(to_f64(a.im))))
                .collect(),
            angle: lit(to_f64(self.angle)),
        }
    }
}

/// Squeezing parameter `ξ = r e^{iε}` of `S(ξ) = exp[(ξ* â² − ξ â†²)/2]`.
///
/// The variance of `x̂(θ)` is `[cosh 2r − sinh 2r · cos(2θ − ε)]/2`, so the
/// axis `θ = ε/2` is squeezed to `e^{-2r}/2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Real + Serialize + serde::de::DeserializeOwned")]
pub struct SqueezedVacuumSpec<T> {
    pub r: T,
    pub epsilon: T,
}

impl<T: Real> SqueezedVacuumSpec<T> {
    pub fn new(r: T, epsilon: T) -> Result<Self> {
        if !r.is_finite() || r < T::zero() {
            return Err(Error::param("r", format!("squeezing modulus must be finite and ≥ 0, got {r}")));
        }
        Ok(Self {
            r,
            epsilon: wrap_angle(epsilon),
        })
    }

    /// Squeezing whose narrow axis is the quadrature at `angle`.
    pub fn aligned(r: T, angle: T) -> Result<Self> {
        Self::new(r, angle + angle)
    }

    /// Variance of `x̂(angle)`.
    pub fn variance_at(&self, angle: T) -> T {
        let two = lit::<T>(2.0);
        ((two * self.r).cosh() - (two * self.r).sinh() * (two * angle - self.epsilon).cos()) / two
    }

    /// Variance along the squeezed axis, `e^{-2r}/2`.
    pub fn squeezed_variance(&self) -> T {
        (-(self.r + self.r)).exp() * lit(0.5)
    }
}

/// Closed-form pure states used as signals and meters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
#[serde(bound = "T: Real + Serialize + serde::de::DeserializeOwned")]
pub enum StateSpec<T> {
    Vacuum,
    Fock { n: usize },
    /// Coherent state `|α⟩`.
    Coherent { alpha: Complex<T> },
    /// Displaced squeezed vacuum `D(α) S(ξ) |0⟩`.
    Squeezed {
        r: T,
        epsilon: T,
        #[serde(default = "zero_complex")]
        displacement: Complex<T>,
    },
    /// Even cat `∝ |α⟩ + |−α⟩`.
    Cat { alpha: Complex<T> },
}

fn zero_complex<T: Real>() -> Complex<T> {
    Complex::new(T::zero(), T::zero())
}

fn coherent_amplitude<T: Real>(beta: Complex<T>, x: T) -> Complex<T> {
    // π^{-1/4} exp(-x²/2 + √2 β x - β²/2 - |β|²/2)
    let half = lit::<T>(0.5);
    let sqrt2 = lit::<T>(2.0).sqrt();
    let exponent = Complex::new(-x * x * half - beta.norm_sqr() * half, T::zero()) + beta * (sqrt2 * x)
        - beta * beta * half;
    exponent.exp() * T::PI().powf(lit(-0.25))
}

fn squeezed_amplitude<T: Real>(r: T, nu: T, x: T) -> Complex<T> {
    // ⟨x|S(r e^{iν})|0⟩ = π^{-1/4} (c − e^{iν}s)^{-1/2} exp[-(x²/2)(c + e^{iν}s)/(c − e^{iν}s)]
    let (c, s) = (r.cosh(), r.sinh());
    let e = cis(nu);
    let den = Complex::new(c, T::zero()) - e * s;
    let num = Complex::new(c, T::zero()) + e * s;
    let exponent = -(num / den) * (x * x * lit(0.5));
    exponent.exp() / den.sqrt() * T::PI().powf(lit(-0.25))
}

impl<T: Real> StateSpec<T> {
    pub fn squeezed_vacuum(spec: SqueezedVacuumSpec<T>) -> Self {
        StateSpec::Squeezed {
            r: spec.r,
            epsilon: spec.epsilon,
            displacement: zero_complex(),
        }
    }

    /// `ψ(x; angle)` in closed form.
    pub fn amplitude(&self, x: T, angle: T) -> Complex<T> {
        match self {
            StateSpec::Vacuum => Complex::new(T::PI().powf(lit(-0.25)) * (-x * x * lit(0.5)).exp(), T::zero()),
            StateSpec::Fock { n } => cis(-from_usize::<T>(*n) * angle) * hermite_function(*n, x),
            StateSpec::Coherent { alpha } => coherent_amplitude(*alpha * cis(-angle), x),
            StateSpec::Squeezed { r, epsilon, displacement } => {
                let beta = *displacement * cis(-angle);
                let sqrt2 = lit::<T>(2.0).sqrt();
                let (x0, p0) = (sqrt2 * beta.re, sqrt2 * beta.im);
                let nu = *epsilon - angle - angle;
                squeezed_amplitude(*r, nu, x - x0) * cis(p0 * x - x0 * p0 * lit(0.5))
            }
            StateSpec::Cat { alpha } => {
                let beta = *alpha * cis(-angle);
                let norm = (lit::<T>(2.0) * (T::one() + (-lit::<T>(2.0) * alpha.norm_sqr()).exp())).sqrt();
                (coherent_amplitude(beta, x) + coherent_amplitude(-beta, x)) / norm
            }
        }
    }

    /// Exact `⟨x̂(angle)⟩`.
    pub fn quadrature_mean(&self, angle: T) -> T {
        let sqrt2 = lit::<T>(2.0).sqrt();
        match self {
            StateSpec::Coherent { alpha } => sqrt2 * (*alpha * cis(-angle)).re,
            StateSpec::Squeezed { displacement, .. } => sqrt2 * (*displacement * cis(-angle)).re,
            _ => T::zero(),
        }
    }

    fn check_parameters(&self) -> Result<()> {
        match self {
            StateSpec::Squeezed { r, .. } if !r.is_finite() || *r < T::zero() => {
                Err(Error::param("r", format!("squeezing modulus must be finite and ≥ 0, got {r}")))
            }
            _ => Ok(()),
        }
    }
}

fn check_spacing<T: Real>(grid: &QuadratureGrid<T>) -> Result<()> {
    if grid.spacing() > lit(MAX_SPACING) {
        return Err(Error::UnderResolved {
            what: "grid".into(),
            hint: format!(
                "spacing {:.4} exceeds {MAX_SPACING}; add points or narrow the range",
                to_f64(grid.spacing())
            ),
        });
    }
    Ok(())
}

/// Samples a closed-form state on the grid and normalizes it.
pub fn make_state<T: Real>(grid: QuadratureGrid<T>, angle: T, spec: &StateSpec<T>) -> Result<Wavefunction<T>> {
    spec.check_parameters()?;
    check_spacing(&grid)?;
    if let StateSpec::Squeezed { r, .. } = spec {
        check_squeezing_resolution(&grid, *r)?;
    }
    let amplitudes = grid.points().into_iter().map(|x| spec.amplitude(x, angle)).collect();
    let psi = Wavefunction::normalized(grid, amplitudes, angle)?;
    if psi.edge_amplitude() > lit(EDGE_TOLERANCE) {
        return Err(Error::EnvelopeOverflow(format!(
            "{spec:?} at angle {angle} (edge amplitude {:.2e}); widen the grid",
            to_f64(psi.edge_amplitude())
        )));
    }
    Ok(psi)
}

fn check_squeezing_resolution<T: Real>(grid: &QuadratureGrid<T>, r: T) -> Result<()> {
    let h = grid.spacing();
    let variance = (-(r + r)).exp() * lit(0.5);
    if variance < lit::<T>(4.0) * h * h {
        return Err(Error::UnderResolved {
            what: format!("squeezed state r = {r}"),
            hint: format!(
                "variance {:.3e} is below 4Δx² = {:.3e}; use at least {} points",
                to_f64(variance),
                to_f64(lit::<T>(4.0) * h * h),
                required_points(grid, variance)
            ),
        });
    }
    Ok(())
}

fn required_points<T: Real>(grid: &QuadratureGrid<T>, variance: T) -> usize {
    let h_max = to_f64(variance).sqrt() / 2.0;
    let width = to_f64(grid.x_max() - grid.x_min());
    ((width / h_max).ceil() as usize + 1).next_power_of_two()
}

/// `ψ(x) = π^{-1/4} e^{-x²/2}` at any angle.
pub fn make_vacuum<T: Real>(grid: QuadratureGrid<T>, angle: T) -> Result<Wavefunction<T>> {
    make_state(grid, angle, &StateSpec::Vacuum)
}

pub fn make_squeezed_vacuum<T: Real>(
    grid: QuadratureGrid<T>,
    angle: T,
    spec: SqueezedVacuumSpec<T>,
) -> Result<Wavefunction<T>> {
    make_state(grid, angle, &StateSpec::squeezed_vacuum(spec))
}

/// `n`-th Hermite function, carrying the phase `e^{-inθ}` at angle `θ`.
pub fn make_fock<T: Real>(grid: QuadratureGrid<T>, angle: T, n: usize) -> Result<Wavefunction<T>> {
    make_state(grid, angle, &StateSpec::Fock { n })
}

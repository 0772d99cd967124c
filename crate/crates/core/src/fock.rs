//! Truncated number-basis states and operators.
//!
//! Everything here is computed without reference to the quadrature grid
//! code except through [`FockVector::to_grid`], which evaluates
//! `Σ c_n e^{-inθ} h_n(x)`. The module is the brute-force oracle the grid
//! routines are tested against.

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::grid::QuadratureGrid;
use crate::hermite::{hermite_functions_at, hermite_table};
use crate::linalg::{expm, expm_multiply_hermitian, matmul, symmetric_eigen};
use crate::quadrature::{StateSpec, Wavefunction};
use crate::scalar::{cis, from_usize, lit, to_f64, Real};

pub const DEFAULT_DIM: usize = 64;
/// Number of top levels whose population counts as truncation leakage.
pub const LEAKAGE_LEVELS: usize = 8;
/// Leakage allowed for an accepted input state.
pub const ACCEPTED_LEAKAGE: f64 = 1e-8;
/// Leakage above which an evolved state is flagged as untrusted.
pub const EVOLUTION_LEAKAGE: f64 = 1e-6;
/// Extra levels used while building displaced states before truncating.
const PADDING: usize = 64;

fn czero<T: Real>() -> Complex<T> {
    Complex::new(T::zero(), T::zero())
}

fn leakage_of<T: Real>(amplitudes: &[Complex<T>]) -> T {
    let n = amplitudes.len();
    let start = n.saturating_sub(LEAKAGE_LEVELS);
    amplitudes[start..].iter().map(|a| a.norm_sqr()).sum()
}

#[derive(Debug, Clone, PartialEq)]
pub struct FockVector<T> {
    amplitudes: Vec<Complex<T>>,
}

impl<T: Real> FockVector<T> {
    pub fn new(amplitudes: Vec<Complex<T>>) -> Result<Self> {
        if amplitudes.len() < 2 {
            return Err(Error::param("dim", "truncation must keep at least two levels"));
        }
        Ok(Self { amplitudes })
    }

    pub fn vacuum(dim: usize) -> Self {
        Self::number(dim, 0).expect("vacuum fits any truncation")
    }

    pub fn number(dim: usize, n: usize) -> Result<Self> {
        if n >= dim {
            return Err(Error::param("n", format!("level {n} outside truncation {dim}")));
        }
        let mut amplitudes = vec![czero(); dim.max(2)];
        amplitudes[n] = Complex::new(T::one(), T::zero());
        Self::new(amplitudes)
    }

    /// `e^{-|α|²/2} αⁿ/√n!`.
    pub fn coherent(dim: usize, alpha: Complex<T>) -> Self {
        let mut amplitudes = Vec::with_capacity(dim);
        let mut c = Complex::new((-alpha.norm_sqr() * lit(0.5)).exp(), T::zero());
        for n in 0..dim {
            amplitudes.push(c);
            c = c * alpha / from_usize::<T>(n + 1).sqrt();
        }
        Self { amplitudes }
    }

    /// `S(r e^{iε})|0⟩ = (cosh r)^{-1/2} Σ (−e^{iε} tanh r)^k √(2k)!/(2^k k!) |2k⟩`.
    pub fn squeezed_vacuum(dim: usize, r: T, epsilon: T) -> Self {
        let mut amplitudes = vec![czero(); dim];
        let ratio = cis(epsilon) * (-r.tanh());
        let mut c = Complex::new(T::one() / r.cosh().sqrt(), T::zero());
        let mut k = 0;
        while 2 * k < dim {
            amplitudes[2 * k] = c;
            // c_{k+1}/c_k = ratio · √((2k+1)(2k+2)) / (2(k+1))
            let kf = from_usize::<T>(k);
            let two = lit::<T>(2.0);
            let growth = ((two * kf + T::one()) * (two * kf + two)).sqrt() / (two * (kf + T::one()));
            c = c * ratio * growth;
            k += 1;
        }
        Self { amplitudes }
    }

    /// Number-basis image of a closed-form state.
    pub fn from_spec(dim: usize, spec: &StateSpec<T>) -> Result<Self> {
        let v = match spec {
            StateSpec::Vacuum => Self::vacuum(dim),
            StateSpec::Fock { n } => Self::number(dim, *n)?,
            StateSpec::Coherent { alpha } => Self::coherent(dim, *alpha),
            StateSpec::Squeezed { r, epsilon, displacement } => {
                if displacement.norm() == T::zero() {
                    Self::squeezed_vacuum(dim, *r, *epsilon)
                } else {
                    let big = dim + PADDING;
                    let squeezed = Self::squeezed_vacuum(big, *r, *epsilon);
                    let displaced = displacement_operator(big, *displacement).apply(&squeezed);
                    Self {
                        amplitudes: displaced.amplitudes[..dim].to_vec(),
                    }
                }
            }
            StateSpec::Cat { alpha } => {
                let plus = Self::coherent(dim, *alpha);
                let minus = Self::coherent(dim, -*alpha);
                let norm = (lit::<T>(2.0) * (T::one() + (-lit::<T>(2.0) * alpha.norm_sqr()).exp())).sqrt();
                Self {
                    amplitudes: plus
                        .amplitudes
                        .iter()
                        .zip(&minus.amplitudes)
                        .map(|(a, b)| (a + b) / norm)
                        .collect(),
                }
            }
        };
        Ok(v)
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[Complex<T>] {
        &self.amplitudes
    }

    pub fn norm_sqr(&self) -> T {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    /// Population of the top [`LEAKAGE_LEVELS`] levels.
    pub fn leakage(&self) -> T {
        leakage_of(&self.amplitudes)
    }

    /// Rejects states whose truncation leakage exceeds `limit`.
    pub fn ensure_contained(&self, limit: T) -> Result<()> {
        let leak = self.leakage();
        if leak > limit {
            return Err(Error::TruncationLeakage {
                leakage: to_f64(leak),
                limit: to_f64(limit),
            });
        }
        Ok(())
    }

    pub fn inner(&self, other: &Self) -> Complex<T> {
        self.amplitudes.iter().zip(&other.amplitudes).map(|(a, b)| a.conj() * b).sum()
    }

    /// `e^{-iΔn̂}` applied exactly.
    pub fn rotated(&self, delta: T) -> Self {
        Self {
            amplitudes: self
                .amplitudes
                .iter()
                .enumerate()
                .map(|(n, &c)| c * cis(-from_usize::<T>(n) * delta))
                .collect(),
        }
    }

    /// `(⟨x̂(θ)⟩, ⟨x̂(θ)²⟩)`.
    pub fn quadrature_moments(&self, theta: T) -> (T, T) {
        let x = quadrature_operator::<T>(self.dim(), theta);
        let xv = x.apply(self);
        let m1 = self.inner(&xv).re;
        let m2 = xv.norm_sqr();
        (m1, m2)
    }

    /// `ψ(x_k; θ) = Σ_n c_n e^{-inθ} h_n(x_k)`, not renormalized.
    pub fn to_grid(&self, grid: &QuadratureGrid<T>, angle: T) -> Wavefunction<T> {
        let table = hermite_table(self.dim(), &grid.points());
        let phased = self.rotated(angle);
        let mut samples = vec![czero(); grid.len()];
        for (row, &c) in table.iter().zip(&phased.amplitudes) {
            for (s, &h) in samples.iter_mut().zip(row) {
                *s = *s + c * h;
            }
        }
        Wavefunction::from_samples(*grid, samples, angle).expect("grid-sized samples")
    }

    /// `ψ(x; θ)` at an arbitrary point.
    pub fn amplitude_at(&self, x: T, angle: T) -> Complex<T> {
        hermite_functions_at(self.dim(), x)
            .into_iter()
            .zip(self.rotated(angle).amplitudes)
            .map(|(h, c)| c * h)
            .sum()
    }

    /// `c_n = e^{inθ} Σ_k h_n(x_k) ψ(x_k; θ) Δx`.
    pub fn from_grid(psi: &Wavefunction<T>, dim: usize) -> Result<Self> {
        let grid = psi.grid();
        let table = hermite_table(dim, &grid.points());
        let h = grid.spacing();
        let amplitudes: Vec<Complex<T>> = table
            .iter()
            .map(|row| row.iter().zip(psi.amplitudes()).map(|(&hn, &a)| a * hn).sum::<Complex<T>>() * h)
            .collect();
        Ok(Self::new(amplitudes)?.rotated(-psi.angle()))
    }
}

/// Dense `N × N` complex matrix on the truncated number basis, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct FockOperator<T> {
    dim: usize,
    data: Vec<Complex<T>>,
}

impl<T: Real> FockOperator<T> {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![czero(); dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self::from_fn(dim, |i, j| if i == j { Complex::new(T::one(), T::zero()) } else { czero() })
    }

    pub fn from_fn(dim: usize, f: impl Fn(usize, usize) -> Complex<T>) -> Self {
        let mut data = Vec::with_capacity(dim * dim);
        for i in 0..dim {
            for j in 0..dim {
                data.push(f(i, j));
            }
        }
        Self { dim, data }
    }

    /// `â`, with `⟨n−1|â|n⟩ = √n`.
    pub fn annihilation(dim: usize) -> Self {
        Self::from_fn(dim, |i, j| {
            if j == i + 1 {
                Complex::new(from_usize::<T>(j).sqrt(), T::zero())
            } else {
                czero()
            }
        })
    }

    pub fn creation(dim: usize) -> Self {
        Self::annihilation(dim).adjoint()
    }

    pub fn number(dim: usize) -> Self {
        Self::from_fn(dim, |i, j| if i == j { Complex::new(from_usize(i), T::zero()) } else { czero() })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> Complex<T> {
        self.data[i * self.dim + j]
    }

    pub fn data(&self) -> &[Complex<T>] {
        &self.data
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.dim, |i, j| self.get(j, i).conj())
    }

    pub fn scale(&self, z: Complex<T>) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|&v| v * z).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect(),
        }
    }

    pub fn mul(&self, other: &Self) -> Self {
        Self {
            dim: self.dim,
            data: matmul(&self.data, &other.data, self.dim),
        }
    }

    /// `[A, B] = AB − BA`.
    pub fn commutator(&self, other: &Self) -> Self {
        self.mul(other).sub(&other.mul(self))
    }

    pub fn apply(&self, v: &FockVector<T>) -> FockVector<T> {
        let n = self.dim;
        let amplitudes = (0..n)
            .map(|i| {
                self.data[i * n..(i + 1) * n]
                    .iter()
                    .zip(&v.amplitudes)
                    .map(|(a, b)| a * b)
                    .sum()
            })
            .collect();
        FockVector { amplitudes }
    }

    /// Largest entry modulus within the leading `block × block` corner.
    pub fn max_abs_block(&self, block: usize) -> T {
        let mut m = T::zero();
        for i in 0..block.min(self.dim) {
            for j in 0..block.min(self.dim) {
                m = m.max(self.get(i, j).norm());
            }
        }
        m
    }

    pub fn max_abs(&self) -> T {
        self.max_abs_block(self.dim)
    }

    pub fn is_hermitian(&self, tol: T) -> bool {
        self.sub(&self.adjoint()).max_abs() <= tol
    }

    pub fn expm(&self) -> Self {
        Self {
            dim: self.dim,
            data: expm(&self.data, self.dim),
        }
    }

    /// `e^{-i t A}`.
    pub fn evolution(&self, t: T) -> Self {
        self.scale(Complex::new(T::zero(), -t)).expm()
    }
}

/// `x̂(θ) = (â e^{-iθ} + â† e^{iθ})/√2`.
pub fn quadrature_operator<T: Real>(dim: usize, theta: T) -> FockOperator<T> {
    let a = FockOperator::<T>::annihilation(dim);
    let s = T::one() / lit::<T>(2.0).sqrt();
    a.scale(cis(-theta) * s).add(&a.adjoint().scale(cis(theta) * s))
}

/// `p̂(θ) = (â e^{-iθ} − â† e^{iθ})/(i√2)`, the conjugate of `x̂(θ)`.
pub fn momentum_operator<T: Real>(dim: usize, theta: T) -> FockOperator<T> {
    let a = FockOperator::<T>::annihilation(dim);
    let s = Complex::new(T::zero(), -T::one() / lit::<T>(2.0).sqrt());
    a.scale(cis(-theta) * s).sub(&a.adjoint().scale(cis(theta) * s))
}

/// `D(α) = exp(α â† − α* â)`.
pub fn displacement_operator<T: Real>(dim: usize, alpha: Complex<T>) -> FockOperator<T> {
    let a = FockOperator::<T>::annihilation(dim);
    a.adjoint().scale(alpha).sub(&a.scale(alpha.conj())).expm()
}

/// `S(ξ) = exp[(ξ* â² − ξ â†²)/2]`.
pub fn squeeze_operator<T: Real>(dim: usize, r: T, epsilon: T) -> FockOperator<T> {
    let a = FockOperator::<T>::annihilation(dim);
    let ad = a.adjoint();
    let xi = cis(epsilon) * r;
    let half = lit::<T>(0.5);
    a.mul(&a).scale(xi.conj() * half).sub(&ad.mul(&ad).scale(xi * half)).expm()
}

/// Two-mode state over signal ⊗ meter with coefficients `c[n_s][n_m]`.
#[derive(Debug, Clone, PartialEq)]
pub struct BipartiteFock<T> {
    dim_signal: usize,
    dim_meter: usize,
    amplitudes: Vec<Complex<T>>,
}

impl<T: Real> BipartiteFock<T> {
    pub fn product(signal: &FockVector<T>, meter: &FockVector<T>) -> Self {
        let mut amplitudes = Vec::with_capacity(signal.dim() * meter.dim());
        for &s in signal.amplitudes() {
            for &m in meter.amplitudes() {
                amplitudes.push(s * m);
            }
        }
        Self {
            dim_signal: signal.dim(),
            dim_meter: meter.dim(),
            amplitudes,
        }
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.dim_signal, self.dim_meter)
    }

    pub fn amplitudes(&self) -> &[Complex<T>] {
        &self.amplitudes
    }

    pub fn norm_sqr(&self) -> T {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    /// Population of the top levels of either mode.
    pub fn leakage(&self) -> T {
        let (ns, nm) = self.dims();
        let mut total = T::zero();
        for i in 0..ns {
            for j in 0..nm {
                if i + LEAKAGE_LEVELS >= ns || j + LEAKAGE_LEVELS >= nm {
                    total = total + self.amplitudes[i * nm + j].norm_sqr();
                }
            }
        }
        total
    }

    /// `tr ρ_s²` of the reduced signal state.
    pub fn signal_purity(&self) -> T {
        let (ns, nm) = self.dims();
        let c = &self.amplitudes;
        let mut rho = vec![czero::<T>(); ns * ns];
        for i in 0..ns {
            for k in 0..ns {
                rho[i * ns + k] = (0..nm).map(|j| c[i * nm + j] * c[k * nm + j].conj()).sum();
            }
        }
        let mut purity = T::zero();
        for i in 0..ns {
            for k in 0..ns {
                purity = purity + (rho[i * ns + k] * rho[k * ns + i]).re;
            }
        }
        purity
    }

    /// `Ψ(x_s, x_m)` on the two grids, row-major over `(x_s, x_m)`.
    pub fn to_grid(
        &self,
        signal_grid: &QuadratureGrid<T>,
        signal_angle: T,
        meter_grid: &QuadratureGrid<T>,
        meter_angle: T,
    ) -> Vec<Complex<T>> {
        let (ns, nm) = self.dims();
        let hs = hermite_table(ns, &signal_grid.points());
        let hm = hermite_table(nm, &meter_grid.points());
        // contract the meter index first: B[n_s][x_m]
        let mut partial = vec![czero::<T>(); ns * meter_grid.len()];
        for i in 0..ns {
            for j in 0..nm {
                let c = self.amplitudes[i * nm + j] * cis(-from_usize::<T>(j) * meter_angle);
                if c == czero() {
                    continue;
                }
                let row = &mut partial[i * meter_grid.len()..(i + 1) * meter_grid.len()];
                for (p, &h) in row.iter_mut().zip(&hm[j]) {
                    *p = *p + c * h;
                }
            }
        }
        let mut out = vec![czero::<T>(); signal_grid.len() * meter_grid.len()];
        let w = meter_grid.len();
        for i in 0..ns {
            let phase = cis(-from_usize::<T>(i) * signal_angle);
            let row = &partial[i * w..(i + 1) * w];
            for (k, &h) in hs[i].iter().enumerate() {
                let f = phase * h;
                let dst = &mut out[k * w..(k + 1) * w];
                for (d, &b) in dst.iter_mut().zip(row) {
                    *d = *d + f * b;
                }
            }
        }
        out
    }
}

/// Result of evolving under `exp[−iκ x̂_s(φ+π/2) ⊗ x̂_m(φ)]`.
#[derive(Debug, Clone)]
pub struct OracleEvolution<T> {
    pub state: BipartiteFock<T>,
    pub kappa: T,
    pub pump_phase: T,
    pub leakage: T,
    /// `false` when leakage exceeds [`EVOLUTION_LEAKAGE`].
    pub trusted: bool,
}

impl<T: Real> OracleEvolution<T> {
    fn new(state: BipartiteFock<T>, kappa: T, pump_phase: T) -> Self {
        let leakage = state.leakage();
        Self {
            trusted: leakage <= lit(EVOLUTION_LEAKAGE),
            state,
            kappa,
            pump_phase,
            leakage,
        }
    }

    /// Amplitudes with the signal at `φ + π/2` and the meter at `theta`.
    pub fn project(&self, signal_grid: &QuadratureGrid<T>, meter_grid: &QuadratureGrid<T>, theta: T) -> Vec<Complex<T>> {
        self.state
            .to_grid(signal_grid, self.pump_phase + T::FRAC_PI_2(), meter_grid, theta)
    }
}

fn check_kappa<T: Real>(kappa: T) -> Result<()> {
    if !kappa.is_finite() {
        return Err(Error::param("kappa", "coupling must be finite"));
    }
    Ok(())
}

fn real_x0<T: Real>(dim: usize) -> Vec<T> {
    let mut m = vec![T::zero(); dim * dim];
    let s = T::one() / lit::<T>(2.0).sqrt();
    for n in 0..dim - 1 {
        let v = from_usize::<T>(n + 1).sqrt() * s;
        m[n * dim + n + 1] = v;
        m[(n + 1) * dim + n] = v;
    }
    m
}

/// Exact action of `exp[−iκ x̂_s(φ+π/2) ⊗ x̂_m(φ)]` on the truncated space.
///
/// `x̂(θ) = D_θ† X₀ D_θ` with `D_θ = e^{-iθn̂}`, so both factors share the
/// eigenvectors of the real tridiagonal `X₀` and the bipartite exponential is
/// diagonal in their product basis.
pub fn evolve_product_hamiltonian<T: Real>(
    signal: &FockVector<T>,
    meter: &FockVector<T>,
    kappa: T,
    pump_phase: T,
) -> Result<OracleEvolution<T>> {
    check_kappa(kappa)?;
    let (ns, nm) = (signal.dim(), meter.dim());
    let (ls, vs) = symmetric_eigen(&real_x0::<T>(ns), ns);
    let (lm, vm) = if nm == ns {
        (ls.clone(), vs.clone())
    } else {
        symmetric_eigen(&real_x0::<T>(nm), nm)
    };
    let s_angle = pump_phase + T::FRAC_PI_2();
    let s_rot = signal.rotated(s_angle);
    let m_rot = meter.rotated(pump_phase);
    // eigen-coordinates of each factor
    let cs: Vec<Complex<T>> = (0..ns)
        .map(|j| (0..ns).map(|n| s_rot.amplitudes[n] * vs[n * ns + j]).sum())
        .collect();
    let cm: Vec<Complex<T>> = (0..nm)
        .map(|k| (0..nm).map(|n| m_rot.amplitudes[n] * vm[n * nm + k]).sum())
        .collect();
    let mut eig = vec![czero::<T>(); ns * nm];
    for j in 0..ns {
        for k in 0..nm {
            eig[j * nm + k] = cs[j] * cm[k] * cis(-kappa * ls[j] * lm[k]);
        }
    }
    // back to the rotated number basis: C = V_s E V_mᵀ
    let mut half = vec![czero::<T>(); ns * nm];
    for j in 0..ns {
        for k in 0..nm {
            let e = eig[j * nm + k];
            for m in 0..nm {
                half[j * nm + m] = half[j * nm + m] + e * vm[m * nm + k];
            }
        }
    }
    let mut c = vec![czero::<T>(); ns * nm];
    for n in 0..ns {
        for j in 0..ns {
            let v = vs[n * ns + j];
            for m in 0..nm {
                c[n * nm + m] = c[n * nm + m] + half[j * nm + m] * v;
            }
        }
    }
    // undo the frame rotations D_θ
    for n in 0..ns {
        for m in 0..nm {
            let phase = cis(from_usize::<T>(n) * s_angle + from_usize::<T>(m) * pump_phase);
            c[n * nm + m] = c[n * nm + m] * phase;
        }
    }
    let state = BipartiteFock {
        dim_signal: ns,
        dim_meter: nm,
        amplitudes: c,
    };
    Ok(OracleEvolution::new(state, kappa, pump_phase))
}

/// Same evolution computed by Lanczos time stepping on the matrix-free
/// action `C ↦ X_s C X_mᵀ`; slower, used as a cross-check.
pub fn evolve_product_hamiltonian_krylov<T: Real>(
    signal: &FockVector<T>,
    meter: &FockVector<T>,
    kappa: T,
    pump_phase: T,
) -> Result<OracleEvolution<T>> {
    check_kappa(kappa)?;
    let (ns, nm) = (signal.dim(), meter.dim());
    let xs = quadrature_operator::<T>(ns, pump_phase + T::FRAC_PI_2());
    let xm_t = quadrature_operator::<T>(nm, pump_phase);
    let apply = |v: &[Complex<T>]| -> Vec<Complex<T>> {
        // (X_s ⊗ X_m) vec(C) = vec(X_s C X_mᵀ)
        let mut left = vec![czero::<T>(); ns * nm];
        for i in 0..ns {
            for k in 0..ns {
                let a = xs.get(i, k);
                if a == czero() {
                    continue;
                }
                for j in 0..nm {
                    left[i * nm + j] = left[i * nm + j] + a * v[k * nm + j];
                }
            }
        }
        let mut out = vec![czero::<T>(); ns * nm];
        for i in 0..ns {
            for j in 0..nm {
                let mut acc = czero::<T>();
                for l in 0..nm {
                    let b = xm_t.get(j, l);
                    if b != czero() {
                        acc = acc + left[i * nm + l] * b;
                    }
                }
                out[i * nm + j] = acc;
            }
        }
        out
    };
    let start = BipartiteFock::product(signal, meter);
    let bound = lit::<T>(2.0) * from_usize::<T>(ns * nm).sqrt();
    let amplitudes = expm_multiply_hermitian(apply, &start.amplitudes, kappa, bound, 30);
    let state = BipartiteFock {
        dim_signal: ns,
        dim_meter: nm,
        amplitudes,
    };
    Ok(OracleEvolution::new(state, kappa, pump_phase))
}

/// Squeezing of the narrow packets standing in for quadrature eigenstates.
///
/// A packet only needs to be normalizable: the shift identity holds for any
/// wavefunction, and wider packets keep the truncated oracle accurate.
pub const QUASI_EIGENSTATE_SQUEEZING: f64 = 0.5;

/// `ψ′(x) = e^{i[β²/4 · sin 2Δ − β (x + β sin Δ) cos Δ]} ψ(x + β sin Δ)`:
/// the image of `ψ(·; θ′)` under `e^{-iβ x̂(θ)}`, with `Δ = θ′ − θ`.
pub fn shifted_amplitude<T: Real>(psi: impl Fn(T) -> Complex<T>, beta: T, delta: T, x: T) -> Complex<T> {
    let (s, c) = delta.sin_cos();
    let origin = x + beta * s;
    let phase = beta * beta * lit(0.25) * (delta + delta).sin() - beta * origin * c;
    psi(origin) * cis(phase)
}

/// Sup-norm residual, over `|x| ≤ window`, between `e^{-iβ x̂(θ)}` applied to
/// `spec` in the truncated basis and the closed-form shift and phase of the
/// same truncated wavefunction.
pub fn shift_residual<T: Real>(
    spec: &StateSpec<T>,
    beta: T,
    theta: T,
    theta_prime: T,
    dim: usize,
    grid: &QuadratureGrid<T>,
    window: T,
) -> Result<T> {
    let v = FockVector::from_spec(dim, spec)?;
    let u = quadrature_operator::<T>(dim, theta).evolution(beta);
    let evolved = u.apply(&v).to_grid(grid, theta_prime);
    let delta = theta_prime - theta;
    let mut worst = T::zero();
    for (k, &got) in evolved.amplitudes().iter().enumerate() {
        let x = grid.point(k);
        if x.abs() > window {
            continue;
        }
        let want = shifted_amplitude(|z| v.amplitude_at(z, theta_prime), beta, delta, x);
        worst = worst.max((got - want).norm());
    }
    Ok(worst)
}

/// Packet of squeezing `r_eff` centred on `x` along the quadrature `θ′`.
pub fn quasi_eigenstate<T: Real>(x: T, theta_prime: T, r_eff: T) -> StateSpec<T> {
    StateSpec::Squeezed {
        r: r_eff,
        epsilon: theta_prime + theta_prime,
        displacement: cis(theta_prime) * (x / lit::<T>(2.0).sqrt()),
    }
}

/// Shift-and-phase identity for `e^{-iβ x̂(θ)}` acting on a quadrature
/// eigenstate of `x̂(θ′)`, checked on a quasi-eigenstate packet against the
/// truncated matrix exponential (`N` = [`DEFAULT_DIM`], standard grid).
pub fn displacement_identity_check<T: Real>(beta: T, theta: T, theta_prime: T, x: T) -> T {
    let spec = quasi_eigenstate(x, theta_prime, lit(QUASI_EIGENSTATE_SQUEEZING));
    shift_residual(&spec, beta, theta, theta_prime, DEFAULT_DIM, &QuadratureGrid::standard(), lit(6.0))
        .expect("valid quasi-eigenstate")
}

/// Factorization `e^{-iβ x̂(θ)} = e^{-iβ cos Δ x̂(θ′)} e^{iβ sin Δ p̂(θ′)} e^{-iβ² sin 2Δ/4}`
/// checked on the lowest number states; returns the largest vector residual.
pub fn baker_hausdorff_residual<T: Real>(beta: T, theta: T, theta_prime: T, dim: usize) -> T {
    let delta = theta_prime - theta;
    let (s, c) = delta.sin_cos();
    let direct = quadrature_operator::<T>(dim, theta).evolution(beta);
    let first = quadrature_operator::<T>(dim, theta_prime).evolution(beta * c);
    let second = momentum_operator::<T>(dim, theta_prime).evolution(-beta * s);
    let scalar = cis(-beta * beta * lit(0.25) * (delta + delta).sin());
    let product = first.mul(&second).scale(scalar);
    let mut worst = T::zero();
    for n in 0..4.min(dim) {
        let v = FockVector::number(dim, n).expect("low level");
        let a = direct.apply(&v);
        let b = product.apply(&v);
        let r = a
            .amplitudes()
            .iter()
            .zip(b.amplitudes())
            .map(|(p, q)| (p - q).norm_sqr())
            .sum::<T>()
            .sqrt();
        worst = worst.max(r);
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::make_state;
    use std::f64::consts::PI;

    #[test]
    fn canonical_commutator_on_lower_block() {
        let n = 16;
        let a = FockOperator::<f64>::annihilation(n);
        let c = a.commutator(&a.adjoint()).sub(&FockOperator::identity(n));
        assert!(c.max_abs_block(n - 1) < 1e-14);
        let x = quadrature_operator::<f64>(n, 0.4);
        assert!(x.is_hermitian(1e-15));
        let p = momentum_operator::<f64>(n, 0.4);
        let shifted = quadrature_operator::<f64>(n, 0.4 + PI / 2.0);
        assert!(p.sub(&shifted).max_abs() < 1e-15);
        // [x̂(θ), p̂(θ)] = i away from the truncation edge
        let comm = x.commutator(&p).sub(&FockOperator::identity(n).scale(Complex::new(0.0, 1.0)));
        assert!(comm.max_abs_block(n - 1) < 1e-14);
    }

    #[test]
    fn vacuum_quadrature_moments() {
        let v = FockVector::<f64>::vacuum(32);
        for &th in &[0.0, 0.7, 2.0] {
            let (m1, m2) = v.quadrature_moments(th);
            assert!(m1.abs() < 1e-15);
            assert!((m2 - 0.5).abs() < 1e-14);
        }
    }

    #[test]
    fn closed_form_squeezing_matches_operator() {
        let n = 96;
        let (r, eps) = (0.8, 0.9);
        let closed = FockVector::<f64>::squeezed_vacuum(n, r, eps);
        let op = squeeze_operator::<f64>(n + 64, r, eps).apply(&FockVector::vacuum(n + 64));
        for k in 0..n {
            assert!((closed.amplitudes()[k] - op.amplitudes()[k]).norm() < 1e-11);
        }
        let (_, var) = FockVector::squeezed_vacuum(128, 1.0, 0.0).quadrature_moments(0.0);
        assert!((var - (-2.0f64).exp() / 2.0).abs() < 1e-10);
        let (_, var) = FockVector::squeezed_vacuum(128, 1.0, PI).quadrature_moments(0.0);
        assert!((var - 2.0f64.exp() / 2.0).abs() < 1e-9);
    }

    #[test]
    fn coherent_matches_displacement() {
        let alpha = Complex::new(0.9, -0.4);
        let closed = FockVector::<f64>::coherent(40, alpha);
        let op = displacement_operator(104, alpha).apply(&FockVector::vacuum(104));
        for k in 0..40 {
            assert!((closed.amplitudes()[k] - op.amplitudes()[k]).norm() < 1e-12);
        }
    }

    #[test]
    fn constructors_agree_with_grid_states() {
        let g = QuadratureGrid::<f64>::standard();
        let both = &[0.0, 1.1][..];
        let specs = [
            (StateSpec::Vacuum, 64, both),
            (StateSpec::Fock { n: 1 }, 64, both),
            (StateSpec::Fock { n: 10 }, 64, both),
            (StateSpec::Coherent { alpha: Complex::new(1.0, 0.5) }, 64, both),
            (StateSpec::Squeezed { r: 0.5, epsilon: 0.4, displacement: Complex::new(0.3, 0.2) }, 64, both),
            (StateSpec::Squeezed { r: 1.0, epsilon: 0.0, displacement: Complex::new(0.0, 0.0) }, 128, &[0.0, 0.3][..]),
            (StateSpec::Cat { alpha: Complex::new(1.5, 0.0) }, 64, both),
        ];
        for (spec, dim, angles) in specs {
            let f = FockVector::from_spec(dim, &spec).unwrap();
            for &angle in angles {
                let from_oracle = f.to_grid(&g, angle);
                let direct = make_state(g, angle, &spec).unwrap();
                let mut worst: f64 = 0.0;
                for k in 0..g.len() {
                    if g.point(k).abs() <= 6.0 {
                        worst = worst.max((from_oracle.amplitudes()[k] - direct.amplitudes()[k]).norm());
                    }
                }
                assert!(worst < 1e-6, "{spec:?} at {angle}: {worst}");
            }
        }
    }

    #[test]
    fn accepted_state_leakage() {
        assert!(FockVector::<f64>::vacuum(64).ensure_contained(1e-8).is_ok());
        let wide = FockVector::<f64>::coherent(64, Complex::new(6.0, 0.0));
        assert!(matches!(wide.ensure_contained(1e-8), Err(Error::TruncationLeakage { .. })));
    }

    #[test]
    fn grid_round_trip() {
        let g = QuadratureGrid::<f64>::standard();
        let spec = StateSpec::Coherent { alpha: Complex::new(0.5, 0.5) };
        let f = FockVector::from_spec(48, &spec).unwrap();
        let back = FockVector::from_grid(&f.to_grid(&g, 0.8), 48).unwrap();
        for (a, b) in f.amplitudes().iter().zip(back.amplitudes()) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn zero_coupling_is_identity() {
        let s = FockVector::<f64>::number(24, 1).unwrap();
        let m = FockVector::<f64>::squeezed_vacuum(24, 0.3, 0.0);
        let e = evolve_product_hamiltonian(&s, &m, 0.0, 0.4).unwrap();
        let p = BipartiteFock::product(&s, &m);
        for (a, b) in e.state.amplitudes().iter().zip(p.amplitudes()) {
            assert!((a - b).norm() < 1e-13);
        }
    }

    #[test]
    fn coupling_entangles_vacua() {
        let v = FockVector::<f64>::vacuum(48);
        let e = evolve_product_hamiltonian(&v, &v, 1.0, 0.0).unwrap();
        assert!((e.state.norm_sqr() - 1.0).abs() < 1e-12);
        let purity = e.state.signal_purity();
        assert!(purity < 0.99, "{purity}");
        // Gaussian two-mode state with covariance giving purity 1/√(1+κ²)
        assert!((purity - 1.0 / 2f64.sqrt()).abs() < 1e-8, "{purity}");
        assert!(e.trusted);
    }

    #[test]
    fn krylov_matches_spectral_evolution() {
        let s = FockVector::<f64>::number(24, 1).unwrap();
        let m = FockVector::<f64>::squeezed_vacuum(24, 0.4, 0.3);
        let a = evolve_product_hamiltonian(&s, &m, 0.7, 0.3).unwrap();
        let b = evolve_product_hamiltonian_krylov(&s, &m, 0.7, 0.3).unwrap();
        for (x, y) in a.state.amplitudes().iter().zip(b.state.amplitudes()) {
            assert!((x - y).norm() < 1e-9);
        }
    }

    #[test]
    fn in_phase_meter_marginal_is_untouched() {
        let dim = 48;
        let g = QuadratureGrid::<f64>::standard();
        let s = FockVector::<f64>::squeezed_vacuum(dim, 0.5, 0.0);
        let m = FockVector::<f64>::vacuum(dim);
        let phi = 0.3;
        let e = evolve_product_hamiltonian(&s, &m, 1.0, phi).unwrap();
        let psi = e.project(&g, &g, phi);
        let h = g.spacing();
        let marginal: Vec<f64> = (0..g.len())
            .map(|j| (0..g.len()).map(|i| psi[i * g.len() + j].norm_sqr()).sum::<f64>() * h)
            .collect();
        let original = m.to_grid(&g, phi).marginal();
        let worst = marginal.iter().zip(&original).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(worst < 1e-7, "{worst}");
    }

    #[test]
    fn displacement_identity_examples() {
        assert!(displacement_identity_check(0.0, 0.2, 0.9, 0.5) < 1e-12);
        assert!(displacement_identity_check(1.3, 0.2, 0.2, -0.7) < 1e-6);
        assert!(displacement_identity_check(1.0, 0.0, PI / 2.0, 0.5) < 1e-6);
        // the packet centred at 0.5 moves to 0.5 − β sin Δ
        let spec = quasi_eigenstate(0.5, PI / 2.0, QUASI_EIGENSTATE_SQUEEZING);
        let g = QuadratureGrid::standard();
        let v = FockVector::from_spec(DEFAULT_DIM, &spec).unwrap();
        let moved = quadrature_operator(DEFAULT_DIM, 0.0).evolution(1.0).apply(&v);
        let (mean, _) = moved.to_grid(&g, PI / 2.0).mean_and_variance();
        assert!((mean + 0.5).abs() < 1e-8, "{mean}");
    }

    #[test]
    fn baker_hausdorff_factorization() {
        for &beta in &[-4.0, -1.5, 0.5, 4.0] {
            for &d in &[0.0, PI / 6.0, PI / 2.0, 2.0] {
                let r = baker_hausdorff_residual(beta, 0.3, 0.3 + d, DEFAULT_DIM);
                assert!(r < 1e-8, "β={beta} Δ={d}: {r}");
            }
        }
    }
}

//! FFT-backed building blocks: the chirp-z transform and band-limited
//! interpolation of uniformly sampled functions.

use std::sync::Arc;

use num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::scalar::{cis, from_usize, lit, Real};

/// Evaluates `out[l] = Σ_n x[n] e^{i (w0 + l·dw) n}` for `l < m_out` in
/// `O((n + m) log(n + m))` through Bluestein's chirp convolution.
///
/// The kernel depends only on `dw` so one instance serves many inputs with
/// different `w0`.
pub struct ChirpZ<T: Real> {
    n_in: usize,
    m_out: usize,
    dw: T,
    fft: Arc<dyn Fft<T>>,
    ifft: Arc<dyn Fft<T>>,
    kernel_hat: Vec<Complex<T>>,
}

impl<T: Real> ChirpZ<T> {
    pub fn new(n_in: usize, m_out: usize, dw: T) -> Self {
        let len = (n_in + m_out - 1).next_power_of_two();
        let mut planner = FftPlanner::new();
        let fft = planner.plan_fft_forward(len);
        let ifft = planner.plan_fft_inverse(len);
        let half = lit::<T>(0.5);
        let mut kernel = vec![Complex::new(T::zero(), T::zero()); len];
        for m in 0..m_out {
            let mf = from_usize::<T>(m);
            kernel[m] = cis(-dw * mf * mf * half);
        }
        for m in 1..n_in {
            let mf = from_usize::<T>(m);
            kernel[len - m] = cis(-dw * mf * mf * half);
        }
        fft.process(&mut kernel);
        Self {
            n_in,
            m_out,
            dw,
            fft,
            ifft,
            kernel_hat: kernel,
        }
    }

    pub fn input_len(&self) -> usize {
        self.n_in
    }

    pub fn output_len(&self) -> usize {
        self.m_out
    }

    pub fn apply(&self, input: &[Complex<T>], w0: T) -> Vec<Complex<T>> {
        assert_eq!(input.len(), self.n_in, "chirp-z input length");
        let len = self.kernel_hat.len();
        let half = lit::<T>(0.5);
        let mut buf = vec![Complex::new(T::zero(), T::zero()); len];
        for (n, (slot, &x)) in buf.iter_mut().zip(input).enumerate() {
            let nf = from_usize::<T>(n);
            *slot = x * cis(w0 * nf + self.dw * nf * nf * half);
        }
        self.fft.process(&mut buf);
        for (b, k) in buf.iter_mut().zip(&self.kernel_hat) {
            *b = *b * *k;
        }
        self.ifft.process(&mut buf);
        let scale = T::one() / from_usize::<T>(len);
        (0..self.m_out)
            .map(|l| {
                let lf = from_usize::<T>(l);
                buf[l] * cis(self.dw * lf * lf * half) * scale
            })
            .collect()
    }
}

/// Spectral translation of one sampled function by arbitrary offsets.
///
/// The samples are zero-padded to twice their length before transforming, so
/// content pushed past either end of the grid drops out instead of wrapping.
pub struct SpectralShifter<T: Real> {
    n: usize,
    spectrum: Vec<Complex<T>>,
    wavenumbers: Vec<T>,
    nyquist: Option<usize>,
    ifft: Arc<dyn Fft<T>>,
}

impl<T: Real> SpectralShifter<T> {
    pub fn new(samples: &[Complex<T>], spacing: T) -> Self {
        let n = samples.len();
        let len = (2 * n).next_power_of_two();
        let mut planner = FftPlanner::new();
        let fft = planner.plan_fft_forward(len);
        let ifft = planner.plan_fft_inverse(len);
        let mut spectrum = vec![Complex::new(T::zero(), T::zero()); len];
        spectrum[..n].copy_from_slice(samples);
        fft.process(&mut spectrum);
        let two_pi = T::PI() + T::PI();
        let base = two_pi / (from_usize::<T>(len) * spacing);
        let wavenumbers = (0..len)
            .map(|q| {
                if q <= len / 2 {
                    from_usize::<T>(q) * base
                } else {
                    -from_usize::<T>(len - q) * base
                }
            })
            .collect();
        Self {
            n,
            spectrum,
            wavenumbers,
            nyquist: Some(len / 2),
            ifft,
        }
    }

    /// Samples of `f(x_k + offset)` on the original nodes.
    pub fn shifted(&self, offset: T) -> Vec<Complex<T>> {
        let len = self.spectrum.len();
        let mut buf: Vec<Complex<T>> = self
            .spectrum
            .iter()
            .zip(&self.wavenumbers)
            .enumerate()
            .map(|(q, (&f, &k))| {
                if Some(q) == self.nyquist {
                    f * (k * offset).cos()
                } else {
                    f * cis(k * offset)
                }
            })
            .collect();
        self.ifft.process(&mut buf);
        let scale = T::one() / from_usize::<T>(len);
        buf.truncate(self.n);
        buf.iter_mut().for_each(|v| *v = *v * scale);
        buf
    }
}

/// Whittaker–Shannon evaluation of a uniformly sampled function at `x`.
///
/// Samples beyond the grid are taken as zero.
pub fn sinc_interpolate<T: Real>(samples: &[Complex<T>], x_min: T, spacing: T, x: T) -> Complex<T> {
    let u = (x - x_min) / spacing;
    let nearest = u.round();
    if (u - nearest).abs() < lit(1e-12) {
        return match nearest.to_isize() {
            Some(k) if k >= 0 && (k as usize) < samples.len() => samples[k as usize],
            _ => Complex::new(T::zero(), T::zero()),
        };
    }
    // sin(π(u - j)) = (-1)^j sin(πu)
    let prefactor = (T::PI() * u).sin() / T::PI();
    let mut acc = Complex::new(T::zero(), T::zero());
    for (j, &s) in samples.iter().enumerate() {
        let term = s / (u - from_usize::<T>(j));
        if j % 2 == 0 {
            acc = acc + term;
        } else {
            acc = acc - term;
        }
    }
    acc * prefactor
}

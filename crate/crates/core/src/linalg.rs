//! Small dense linear algebra: real symmetric eigensolver, complex matrix
//! exponential and Lanczos action of `e^{-itH}`.

use num_complex::Complex;

use crate::scalar::{cis, from_usize, lit, Real};

/// Eigen-decomposition of a real symmetric `n × n` matrix (row-major) by
/// cyclic Jacobi rotations. Returns eigenvalues and the eigenvectors as the
/// columns of a row-major matrix.
pub fn symmetric_eigen<T: Real>(matrix: &[T], n: usize) -> (Vec<T>, Vec<T>) {
    assert_eq!(matrix.len(), n * n);
    let mut a = matrix.to_vec();
    let mut v = vec![T::zero(); n * n];
    for i in 0..n {
        v[i * n + i] = T::one();
    }
    let eps = T::epsilon();
    for _sweep in 0..100 {
        let mut off = T::zero();
        let mut diag = T::zero();
        for i in 0..n {
            diag = diag + a[i * n + i] * a[i * n + i];
            for j in (i + 1)..n {
                off = off + a[i * n + j] * a[i * n + j];
            }
        }
        if off <= eps * eps * diag.max(T::min_positive_value()) {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p * n + q];
                if apq == T::zero() {
                    continue;
                }
                let app = a[p * n + p];
                let aqq = a[q * n + q];
                let tau = (aqq - app) / (apq + apq);
                let t = tau.signum() / (tau.abs() + (T::one() + tau * tau).sqrt());
                let t = if tau == T::zero() { T::one() } else { t };
                let c = T::one() / (T::one() + t * t).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }
    ((0..n).map(|i| a[i * n + i]).collect(), v)
}

/// Dense complex `n × n` product `a · b`, row-major.
pub fn matmul<T: Real>(a: &[Complex<T>], b: &[Complex<T>], n: usize) -> Vec<Complex<T>> {
    let zero = Complex::new(T::zero(), T::zero());
    let mut out = vec![zero; n * n];
    for i in 0..n {
        for k in 0..n {
            let aik = a[i * n + k];
            if aik == zero {
                continue;
            }
            let row = &b[k * n..(k + 1) * n];
            let dst = &mut out[i * n..(i + 1) * n];
            for (d, &bkj) in dst.iter_mut().zip(row) {
                *d = *d + aik * bkj;
            }
        }
    }
    out
}

fn one_norm<T: Real>(a: &[Complex<T>], n: usize) -> T {
    (0..n)
        .map(|j| (0..n).map(|i| a[i * n + j].norm()).sum::<T>())
        .fold(T::zero(), T::max)
}

/// `e^A` by scaling, an 18-term Taylor series and repeated squaring.
pub fn expm<T: Real>(a: &[Complex<T>], n: usize) -> Vec<Complex<T>> {
    let norm = one_norm(a, n);
    let mut squarings = 0u32;
    let mut scale = T::one();
    while norm * scale > lit(0.5) {
        scale = scale * lit(0.5);
        squarings += 1;
    }
    let scaled: Vec<Complex<T>> = a.iter().map(|&z| z * scale).collect();
    let zero = Complex::new(T::zero(), T::zero());
    let mut result = vec![zero; n * n];
    let mut term = vec![zero; n * n];
    for i in 0..n {
        result[i * n + i] = Complex::new(T::one(), T::zero());
        term[i * n + i] = Complex::new(T::one(), T::zero());
    }
    for k in 1..=18 {
        term = matmul(&term, &scaled, n);
        let inv = T::one() / from_usize::<T>(k);
        term.iter_mut().for_each(|z| *z = *z * inv);
        for (r, t) in result.iter_mut().zip(&term) {
            *r = *r + *t;
        }
    }
    for _ in 0..squarings {
        result = matmul(&result, &result, n);
    }
    result
}

/// `e^{-i t H} v` for a Hermitian operator given by its action, using
/// Lanczos subspaces of dimension `krylov_dim` and sub-steps short enough
/// that `dt · norm_bound ≤ 4`.
pub fn expm_multiply_hermitian<T, F>(apply: F, v: &[Complex<T>], t: T, norm_bound: T, krylov_dim: usize) -> Vec<Complex<T>>
where
    T: Real,
    F: Fn(&[Complex<T>]) -> Vec<Complex<T>>,
{
    let steps = ((t.abs() * norm_bound) / lit(4.0)).ceil().to_usize().unwrap_or(1).max(1);
    let dt = t / from_usize::<T>(steps);
    let mut state = v.to_vec();
    for _ in 0..steps {
        state = lanczos_step(&apply, &state, dt, krylov_dim);
    }
    state
}

fn dot<T: Real>(a: &[Complex<T>], b: &[Complex<T>]) -> Complex<T> {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn lanczos_step<T, F>(apply: &F, v: &[Complex<T>], dt: T, m: usize) -> Vec<Complex<T>>
where
    T: Real,
    F: Fn(&[Complex<T>]) -> Vec<Complex<T>>,
{
    let beta0 = dot(v, v).re.sqrt();
    if beta0 == T::zero() {
        return v.to_vec();
    }
    let mut basis: Vec<Vec<Complex<T>>> = vec![v.iter().map(|&z| z / beta0).collect()];
    let mut alphas = Vec::with_capacity(m);
    let mut betas: Vec<T> = Vec::with_capacity(m);
    let breakdown = lit::<T>(1e-13);
    for j in 0..m {
        let mut w = apply(&basis[j]);
        let alpha = dot(&basis[j], &w).re;
        alphas.push(alpha);
        // full reorthogonalization, twice
        for _ in 0..2 {
            for q in &basis {
                let c = dot(q, &w);
                for (wi, qi) in w.iter_mut().zip(q) {
                    *wi = *wi - *qi * c;
                }
            }
        }
        let beta = dot(&w, &w).re.sqrt();
        if j + 1 == m || beta < breakdown {
            break;
        }
        betas.push(beta);
        basis.push(w.into_iter().map(|z| z / beta).collect());
    }
    let k = alphas.len();
    let mut tri = vec![T::zero(); k * k];
    for i in 0..k {
        tri[i * k + i] = alphas[i];
        if i + 1 < k {
            tri[i * k + i + 1] = betas[i];
            tri[(i + 1) * k + i] = betas[i];
        }
    }
    let (mu, s) = symmetric_eigen(&tri, k);
    // y = S e^{-i dt μ} Sᵀ e₁
    let y: Vec<Complex<T>> = (0..k)
        .map(|i| {
            (0..k)
                .map(|l| cis(-dt * mu[l]) * (s[i * k + l] * s[l]))
                .sum::<Complex<T>>()
        })
        .collect();
    let zero = Complex::new(T::zero(), T::zero());
    let mut out = vec![zero; v.len()];
    for (q, &yi) in basis.iter().zip(&y) {
        for (o, &qi) in out.iter_mut().zip(q) {
            *o = *o + qi * yi * beta0;
        }
    }
    out
}

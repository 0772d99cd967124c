//! Normalized Hermite functions `h_n(x) = ⟨x|n⟩`.

use crate::scalar::{from_usize, lit, Real};

fn ground<T: Real>(x: T) -> T {
    // π^{-1/4} e^{-x²/2}
    T::PI().powf(lit(-0.25)) * (-x * x * lit(0.5)).exp()
}

/// `h_0(x) .. h_{count-1}(x)` by the stable three-term recurrence.
pub fn hermite_functions_at<T: Real>(count: usize, x: T) -> Vec<T> {
    let mut out = Vec::with_capacity(count);
    if count == 0 {
        return out;
    }
    out.push(ground(x));
    if count == 1 {
        return out;
    }
    out.push(lit::<T>(2.0).sqrt() * x * out[0]);
    for n in 1..count - 1 {
        let nf = from_usize::<T>(n);
        let next = (lit::<T>(2.0) / (nf + T::one())).sqrt() * x * out[n]
            - (nf / (nf + T::one())).sqrt() * out[n - 1];
        out.push(next);
    }
    out
}

/// Single Hermite function of order `n`.
pub fn hermite_function<T: Real>(n: usize, x: T) -> T {
    *hermite_functions_at(n + 1, x).last().expect("non-empty")
}

/// Table `table[n][k] = h_n(xs[k])`.
pub fn hermite_table<T: Real>(count: usize, xs: &[T]) -> Vec<Vec<T>> {
    let mut table = vec![vec![T::zero(); xs.len()]; count];
    for (k, &x) in xs.iter().enumerate() {
        for (n, v) in hermite_functions_at(count, x).into_iter().enumerate() {
            table[n][k] = v;
        }
    }
    table
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_forms_for_low_orders() {
        let x = 0.7_f64;
        let g = std::f64::consts::PI.powf(-0.25) * (-x * x / 2.0).exp();
        let hs = hermite_functions_at(3, x);
        assert!((hs[0] - g).abs() < 1e-15);
        assert!((hs[1] - 2f64.sqrt() * x * g).abs() < 1e-15);
        assert!((hs[2] - (2.0 * x * x - 1.0) / 2f64.sqrt() * g).abs() < 1e-15);
    }

    #[test]
    fn orthonormal_on_a_fine_grid() {
        let n = 1200;
        let h = 24.0 / (n - 1) as f64;
        let xs: Vec<f64> = (0..n).map(|k| -12.0 + k as f64 * h).collect();
        let t = hermite_table(30, &xs);
        for a in [0, 3, 17, 29] {
            for b in [0, 3, 17, 29] {
                let s: f64 = t[a].iter().zip(&t[b]).map(|(u, v)| u * v * h).sum();
                let want = if a == b { 1.0 } else { 0.0 };
                assert!((s - want).abs() < 1e-12, "{a},{b}: {s}");
            }
        }
    }
}

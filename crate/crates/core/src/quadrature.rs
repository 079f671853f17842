//! Gauss rules on [−1, 1] via Golub–Welsch.

use crate::real::{c, Real};
use crate::special::gamma_any;

/// Nodes and weights for ∫_{−1}^{1} f(x)(1−x)^α(1+x)^β dx, nodes ascending.
pub fn gauss_jacobi<T: Real>(n: usize, alpha: T, beta: T) -> (Vec<T>, Vec<T>) {
    assert!(n >= 1, "gauss_jacobi needs at least one node");
    let two = c::<T>(2.0);
    let ab = alpha + beta;
    let mut diag = vec![T::zero(); n];
    let mut off = vec![T::zero(); n];
    for k in 0..n {
        let kk = T::from_usize_(k);
        let s = two * kk + ab;
        diag[k] = if k == 0 {
            (beta - alpha) / (ab + two)
        } else {
            (beta * beta - alpha * alpha) / (s * (s + two))
        };
        if k + 1 < n {
            let k1 = kk + T::one();
            let s1 = two * k1 + ab;
            let num = c::<T>(4.0) * k1 * (k1 + alpha) * (k1 + beta) * (k1 + ab);
            let den = s1 * s1 * (s1 + T::one()) * (s1 - T::one());
            off[k] = (num / den).sqrt();
        }
    }
    let mu0 = two.powf(ab + T::one()) * gamma_any(alpha + T::one()) * gamma_any(beta + T::one())
        / gamma_any(ab + two);
    let (vals, first) = tridiagonal_eigen(diag, off);
    let mut pairs: Vec<(T, T)> = vals
        .into_iter()
        .zip(first)
        .map(|(x, v)| (x, mu0 * v * v))
        .collect();
    pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    pairs.into_iter().unzip()
}

pub fn gauss_legendre<T: Real>(n: usize) -> (Vec<T>, Vec<T>) {
    let (mut x, mut w) = gauss_jacobi(n, T::zero(), T::zero());
    // Symmetrize to remove eigen-solver asymmetry.
    for i in 0..n / 2 {
        let j = n - 1 - i;
        let xi = (x[j] - x[i]) * c(0.5);
        let wi = (w[i] + w[j]) * c(0.5);
        x[i] = -xi;
        x[j] = xi;
        w[i] = wi;
        w[j] = wi;
    }
    if n % 2 == 1 {
        x[n / 2] = T::zero();
    }
    (x, w)
}

/// Implicit QL on a symmetric tridiagonal matrix; returns eigenvalues and the
/// first component of each normalized eigenvector.
fn tridiagonal_eigen<T: Real>(mut d: Vec<T>, mut e: Vec<T>) -> (Vec<T>, Vec<T>) {
    let n = d.len();
    let mut z = vec![T::zero(); n];
    z[0] = T::one();
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= T::epsilon() * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            assert!(iter < 100, "tridiagonal eigen-solver failed to converge");
            let mut g = (d[l + 1] - d[l]) / (c::<T>(2.0) * e[l]);
            let mut r = g.hypot(T::one());
            g = d[m] - d[l] + e[l] / (g + if g >= T::zero() { r.abs() } else { -r.abs() });
            let (mut s, mut cc, mut p) = (T::one(), T::one(), T::zero());
            let mut i = m;
            let mut underflow = false;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = cc * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == T::zero() {
                    d[i + 1] = d[i + 1] - p;
                    e[m] = T::zero();
                    underflow = true;
                    break;
                }
                s = f / r;
                cc = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + c::<T>(2.0) * cc * b;
                p = s * r;
                d[i + 1] = g + p;
                g = cc * r - b;
                let fz = z[i + 1];
                z[i + 1] = s * z[i] + cc * fz;
                z[i] = cc * z[i] - s * fz;
            }
            if underflow {
                continue;
            }
            d[l] = d[l] - p;
            e[l] = g;
            e[m] = T::zero();
        }
    }
    (d, z)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre::<f64>(8);
        for m in 0..16 {
            let got: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(m)).sum();
            let want = if m % 2 == 1 { 0.0 } else { 2.0 / (m as f64 + 1.0) };
            assert!((got - want).abs() < 1e-14, "m = {m}: {got} vs {want}");
        }
    }

    #[test]
    fn jacobi_weight_moments() {
        // ∫_{-1}^{1} (1+x)^{1/2} x^m dx via substitution u = 1+x
        let beta = 0.5;
        let (x, w) = gauss_jacobi::<f64>(6, 0.0, beta);
        let exact = |m: i32| -> f64 {
            // Σ_j C(m,j) (−1)^{m−j} ∫_0^2 u^{j+β} du
            (0..=m)
                .map(|j| {
                    let binom = (0..j).fold(1.0, |acc, i| acc * (m - i) as f64 / (i + 1) as f64);
                    let sign = if (m - j) % 2 == 0 { 1.0 } else { -1.0 };
                    sign * binom * 2f64.powf(j as f64 + beta + 1.0) / (j as f64 + beta + 1.0)
                })
                .sum()
        };
        for m in 0..12 {
            let got: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(m)).sum();
            assert!((got - exact(m)).abs() < 1e-12, "m = {m}");
        }
    }
}

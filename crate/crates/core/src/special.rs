//! Small special-function helpers shared by the Fock-space and phase-space code.

use std::f64::consts::PI;

/// n! as f64. Exact up to 22!, correctly rounded beyond; overflows past 170.
pub fn factorial(n: usize) -> f64 {
    (1..=n).fold(1.0, |acc, k| acc * k as f64)
}

pub fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Number-state wavefunctions ψ_0..ψ_{n_max} at `x`, with vacuum variance 1/2:
/// ψ_n(x) = π^{-1/4} (2^n n!)^{-1/2} H_n(x) e^{-x²/2}.
pub fn hermite_functions(x: f64, n_max: usize) -> Vec<f64> {
    let mut psi = Vec::with_capacity(n_max + 1);
    psi.push(PI.powf(-0.25) * (-0.5 * x * x).exp());
    if n_max >= 1 {
        psi.push(std::f64::consts::SQRT_2 * x * psi[0]);
    }
    for n in 1..n_max {
        let nf = n as f64;
        let next = (2.0 / (nf + 1.0)).sqrt() * x * psi[n] - (nf / (nf + 1.0)).sqrt() * psi[n - 1];
        psi.push(next);
    }
    psi
}

/// Generalised Laguerre polynomial L_n^{(alpha)}(x) by upward recurrence.
pub fn laguerre(n: usize, alpha: usize, x: f64) -> f64 {
    let a = alpha as f64;
    let mut prev = 1.0;
    if n == 0 {
        return prev;
    }
    let mut cur = 1.0 + a - x;
    for k in 1..n {
        let kf = k as f64;
        let next = ((2.0 * kf + 1.0 + a - x) * cur - (kf + a) * prev) / (kf + 1.0);
        prev = cur;
        cur = next;
    }
    cur
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hermite_functions_are_orthonormal() {
        let n_max = 6;
        let dx = 0.002;
        let mut gram = vec![vec![0.0; n_max + 1]; n_max + 1];
        let mut x = -10.0;
        while x <= 10.0 {
            let psi = hermite_functions(x, n_max);
            for m in 0..=n_max {
                for n in 0..=n_max {
                    gram[m][n] += psi[m] * psi[n] * dx;
                }
            }
            x += dx;
        }
        for m in 0..=n_max {
            for n in 0..=n_max {
                let expected = if m == n { 1.0 } else { 0.0 };
                assert!((gram[m][n] - expected).abs() < 1e-9, "{m},{n}: {}", gram[m][n]);
            }
        }
    }

    #[test]
    fn laguerre_low_orders() {
        let x = 0.7;
        assert_eq!(laguerre(0, 3, x), 1.0);
        assert!((laguerre(1, 0, x) - (1.0 - x)).abs() < 1e-15);
        assert!((laguerre(2, 0, x) - (x * x - 4.0 * x + 2.0) / 2.0).abs() < 1e-15);
        assert!((laguerre(2, 1, x) - (x * x / 2.0 - 3.0 * x + 3.0)).abs() < 1e-14);
    }

    #[test]
    fn binomials() {
        assert_eq!(binomial(4, 2), 6.0);
        assert_eq!(binomial(5, 0), 1.0);
        assert_eq!(binomial(3, 4), 0.0);
        assert_eq!(factorial(5), 120.0);
    }
}

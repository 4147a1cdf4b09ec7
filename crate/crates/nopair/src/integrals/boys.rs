//! Boys function F_m(z) = int_0^1 u^(2m) exp(-z u^2) du for complex argument.
//!
//! Complex arguments arise from back-rotated nuclear positions under complex
//! coordinate rotation; the rotation angle bound |theta| < pi/4 keeps the
//! argument in the right half-plane where both branches below are stable.

use num_complex::Complex64;

const SERIES_CUTOFF: f64 = 47.0;
const MAX_ORDER: usize = 6;

/// F_0..F_max (inclusive) at z.
pub fn boys(z: Complex64, max: usize) -> Vec<Complex64> {
    assert!(max <= MAX_ORDER);
    if z.norm() <= SERIES_CUTOFF {
        boys_series(z, max)
    } else {
        boys_asymptotic(z, max)
    }
}

/// Downward recursion seeded by the convergent series for F_max:
/// F_m(z) = e^-z sum_k (2z)^k / ((2m+1)(2m+3)...(2m+2k+1)).
fn boys_series(z: Complex64, max: usize) -> Vec<Complex64> {
    let emz = (-z).exp();
    let two_z = 2.0 * z;
    // Series for the highest order needed.
    let m = max;
    let mut term = Complex64::new(1.0 / (2 * m + 1) as f64, 0.0);
    let mut sum = term;
    for k in 1..=200 {
        term = term * two_z / (2 * m + 2 * k + 1) as f64;
        sum += term;
        if term.norm() < 1e-17 * sum.norm().max(1e-300) {
            break;
        }
    }
    let mut f = vec![Complex64::new(0.0, 0.0); max + 1];
    f[max] = emz * sum;
    for j in (0..max).rev() {
        f[j] = (two_z * f[j + 1] + emz) / (2 * j + 1) as f64;
    }
    f
}

/// Large-argument branch: asymptotic expansion for F_0 followed by the
/// upward recursion F_{m+1} = ((2m+1) F_m - e^-z) / (2z), stable for |z| large.
fn boys_asymptotic(z: Complex64, max: usize) -> Vec<Complex64> {
    let sqrt_pi = std::f64::consts::PI.sqrt();
    let emz = if z.re > 700.0 {
        Complex64::new(0.0, 0.0)
    } else {
        (-z).exp()
    };
    // F_0(z) = sqrt(pi)/(2 sqrt(z)) - e^-z/(2z) * sum_k (-1)^k (2k-1)!!/(2z)^k
    let mut corr = Complex64::new(1.0, 0.0);
    let mut term = Complex64::new(1.0, 0.0);
    for k in 1..=30 {
        term = term * (-(2 * k - 1) as f64) / (2.0 * z);
        corr += term;
        if term.norm() < 1e-17 {
            break;
        }
    }
    let mut f = vec![Complex64::new(0.0, 0.0); max + 1];
    f[0] = sqrt_pi / (2.0 * z.sqrt()) - emz / (2.0 * z) * corr;
    for m in 0..max {
        f[m + 1] = ((2 * m + 1) as f64 * f[m] - emz) / (2.0 * z);
    }
    f
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quad_ref(m: usize, z: Complex64) -> Complex64 {
        // Simpson integration of u^(2m) exp(-z u^2) on [0, 1].
        let n = 20_000;
        let h = 1.0 / n as f64;
        let g = |u: f64| (-(z * u * u)).exp() * u.powi(2 * m as i32);
        let mut s = g(0.0) + g(1.0);
        for i in 1..n {
            let u = i as f64 * h;
            s += g(u) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        s * h / 3.0
    }

    #[test]
    fn matches_quadrature_real_and_complex() {
        for &z in &[
            Complex64::new(0.0, 0.0),
            Complex64::new(0.3, 0.0),
            Complex64::new(7.5, 0.0),
            Complex64::new(30.0, -6.0),
            Complex64::new(60.0, -20.0),
            Complex64::new(400.0, 80.0),
        ] {
            let f = boys(z, 4);
            for m in 0..=4 {
                let r = quad_ref(m, z);
                let tol = 1e-11 * r.norm().max(1e-12);
                assert!(
                    (f[m] - r).norm() < tol.max(1e-13),
                    "m={m} z={z} got {} want {}",
                    f[m],
                    r
                );
            }
        }
    }

    #[test]
    fn zero_argument_closed_form() {
        let f = boys(Complex64::new(0.0, 0.0), 5);
        for m in 0..=5 {
            assert!((f[m].re - 1.0 / (2 * m + 1) as f64).abs() < 1e-15);
        }
    }

    #[test]
    fn branches_agree_at_crossover() {
        // Both evaluation branches must produce the same values where the
        // |z| = SERIES_CUTOFF switchover happens.
        for &z in &[
            Complex64::new(47.0, 5.0),
            Complex64::new(44.0, -16.0),
            Complex64::new(50.0, 0.0),
        ] {
            let a = boys_series(z, 4);
            let b = boys_asymptotic(z, 4);
            for m in 0..=4 {
                assert!(
                    (a[m] - b[m]).norm() < 1e-12 * a[m].norm(),
                    "m={m} z={z} series {} asymptotic {}",
                    a[m],
                    b[m]
                );
            }
        }
    }
}

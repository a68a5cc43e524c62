//! Modified Bessel functions of the second kind, evaluated from
//! `K_nu(z) = ∫_0^∞ exp(-z cosh s) cosh(nu s) ds` with the trapezoidal rule.
//!
//! The integrand is analytic in a strip around the real axis and decays
//! doubly exponentially, so the plain trapezoidal sum converges
//! geometrically in `1/h`; `h = 1/32` is at the double-precision floor for
//! every `z > 0` used here.

use crate::summation::NeumaierSum;

fn bessel_k_integral(nu: f64, z: f64) -> f64 {
    assert!(z > 0.0, "K_nu(z) requires z > 0");
    const H: f64 = 1.0 / 32.0;
    let mut acc = NeumaierSum::new();
    acc.add(0.5 * (-z).exp());
    let mut k = 1u32;
    loop {
        let s = k as f64 * H;
        let term = (-z * s.cosh()).exp() * (nu * s).cosh();
        acc.add(term);
        if term < 1e-18 * acc.value() || k > 100_000 {
            break;
        }
        k += 1;
    }
    H * acc.value()
}

pub fn bessel_k0(z: f64) -> f64 {
    bessel_k_integral(0.0, z)
}

pub fn bessel_k1(z: f64) -> f64 {
    bessel_k_integral(1.0, z)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_values() {
        // Abramowitz & Stegun table 9.8.
        assert!((bessel_k0(1.0) - 0.421_024_438_240_708_3).abs() < 1e-14);
        assert!((bessel_k1(1.0) - 0.601_907_230_197_234_6).abs() < 1e-14);
        assert!((bessel_k1(2.0) - 0.139_865_881_816_522_4).abs() < 1e-14);
        assert!((bessel_k0(0.1) - 2.427_069_024_702_017).abs() < 1e-12);
    }

    #[test]
    fn small_argument_limit() {
        // z K_1(z) -> 1 as z -> 0.
        let z = 1e-4;
        assert!((z * bessel_k1(z) - 1.0).abs() < 1e-6);
    }
}

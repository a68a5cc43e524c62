//! The split quadratic form `F0(x, y) = x · y` on `R^d`, `d = 2 d1`, and the
//! lattice data `(L, m, t = m L^2)` of the counting problem.
//!
//! Vectors are flat slices of length `d`: the first `d1` entries are `x`,
//! the last `d1` are `y`.

use crate::error::{arg, Result};

/// `F0(z) = x · y` in dimension `d = 2 * d1`.
///
/// `d1 = 1` is accepted for oracle computations; the asymptotic pipeline
/// needs `d > 4` (see [`QuadraticFormF0::ensure_pipeline`]).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct QuadraticFormF0 {
    d1: usize,
}

impl QuadraticFormF0 {
    pub fn new(d1: usize) -> Result<Self> {
        if d1 == 0 {
            return arg("half-dimension d1 must be positive");
        }
        Ok(Self { d1 })
    }

    pub fn d1(&self) -> usize {
        self.d1
    }

    pub fn dim(&self) -> usize {
        2 * self.d1
    }

    /// Rejects dimensions for which the main asymptotic is not claimed.
    pub fn ensure_pipeline(&self) -> Result<()> {
        if self.d1 < 3 {
            return arg(format!(
                "the asymptotic pipeline needs d = 2*d1 > 4, got d = {}",
                self.dim()
            ));
        }
        Ok(())
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len != self.dim() {
            return arg(format!("expected a vector of length {}, got {len}", self.dim()));
        }
        Ok(())
    }

    pub fn eval(&self, z: &[f64]) -> Result<f64> {
        self.check_len(z.len())?;
        let (x, y) = z.split_at(self.d1);
        Ok(x.iter().zip(y).map(|(a, b)| a * b).sum())
    }

    /// Exact evaluation on integer vectors.
    pub fn eval_exact(&self, z: &[i64]) -> Result<i128> {
        self.check_len(z.len())?;
        let (x, y) = z.split_at(self.d1);
        Ok(x.iter().zip(y).map(|(&a, &b)| a as i128 * b as i128).sum())
    }

    /// `F^t(z) = F0(z) - t`.
    pub fn eval_shifted(&self, z: &[f64], t: f64) -> Result<f64> {
        Ok(self.eval(z)? - t)
    }

    /// Gradient `A0 z = (y, x)`. Its norm equals `|z|`, which is why the
    /// surface measure weight `|A0 z|^{-1}` reduces to `|z|^{-1}`.
    pub fn grad(&self, z: &[f64]) -> Result<Vec<f64>> {
        self.check_len(z.len())?;
        let (x, y) = z.split_at(self.d1);
        Ok(y.iter().chain(x).copied().collect())
    }
}

/// Lattice `Z^d_L = L^{-1} Z^d` together with the level `m`; `t = m L^2` is
/// the integer level in the coordinates `u = L z`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatticeSpec {
    l: f64,
    m: f64,
    t: i64,
}

impl LatticeSpec {
    /// Builds the spec from `(L, m)`; `m L^2` must be an integer up to a
    /// relative rounding tolerance of `1e-9`. `L = 1` (the unscaled lattice)
    /// is accepted.
    pub fn new(l: f64, m: f64) -> Result<Self> {
        if !(l.is_finite() && l >= 1.0) {
            return arg(format!("lattice scale L must satisfy L >= 1, got {l}"));
        }
        let t_real = m * l * l;
        let t = t_real.round();
        if !t_real.is_finite() || (t_real - t).abs() > 1e-9 * t.abs().max(1.0) {
            return arg(format!("m * L^2 = {t_real} is not an integer"));
        }
        if t.abs() > 9.0e15 {
            return arg("m * L^2 out of range");
        }
        Ok(Self { l, m, t: t as i64 })
    }

    /// Builds the spec from the integer shift `t`, with `m = t / L^2`.
    pub fn from_shift(l: f64, t: i64) -> Result<Self> {
        if !(l.is_finite() && l >= 1.0) {
            return arg(format!("lattice scale L must satisfy L >= 1, got {l}"));
        }
        Ok(Self {
            l,
            m: t as f64 / (l * l),
            t,
        })
    }

    pub fn l(&self) -> f64 {
        self.l
    }

    pub fn m(&self) -> f64 {
        self.m
    }

    pub fn t(&self) -> i64 {
        self.t
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn eval_examples() {
        let f = QuadraticFormF0::new(3).unwrap();
        assert_eq!(f.eval(&[1., 2., 3., 4., 5., 6.]).unwrap(), 32.0);
        assert_eq!(f.eval_exact(&[1, 2, 3, 4, 5, 6]).unwrap(), 32);
        assert_eq!(f.eval(&[1., 0., 0., 0., 1., 0.]).unwrap(), 0.0);
        let f2 = QuadraticFormF0::new(2).unwrap();
        assert_eq!(f2.eval(&[0.0; 4]).unwrap(), 0.0);
        assert!(f.eval(&[1.0; 5]).is_err());
        assert!(f.grad(&[1.0; 7]).is_err());
    }

    #[test]
    fn grad_is_swap() {
        let f = QuadraticFormF0::new(2).unwrap();
        assert_eq!(f.grad(&[1., 2., 3., 4.]).unwrap(), vec![3., 4., 1., 2.]);
        assert_eq!(f.grad(&[0.0; 4]).unwrap(), vec![0.0; 4]);
    }

    #[test]
    fn lattice_spec_rejects_non_integer_shift() {
        assert!(LatticeSpec::new(2.0, 0.3).is_err());
        assert!(LatticeSpec::new(0.5, 0.0).is_err());
        let s = LatticeSpec::new(3.0, 1.0 / 9.0).unwrap();
        assert_eq!(s.t(), 1);
        assert_eq!(LatticeSpec::new(4.0, 0.25).unwrap().t(), 4);
    }

    proptest! {
        #[test]
        fn gradient_norm_equals_vector_norm(z in prop::collection::vec(-1e3f64..1e3, 6)) {
            let f = QuadraticFormF0::new(3).unwrap();
            let g = f.grad(&z).unwrap();
            let n1: f64 = z.iter().map(|v| v * v).sum();
            let n2: f64 = g.iter().map(|v| v * v).sum();
            prop_assert!((n1 - n2).abs() <= 1e-12 * n1.max(1.0));
        }

        #[test]
        fn euler_identity(z in prop::collection::vec(-100f64..100.0, 8)) {
            let f = QuadraticFormF0::new(4).unwrap();
            let g = f.grad(&z).unwrap();
            let half_gz: f64 = 0.5 * g.iter().zip(&z).map(|(a, b)| a * b).sum::<f64>();
            let v = f.eval(&z).unwrap();
            prop_assert!((v - half_gz).abs() <= 1e-9 * (1.0 + v.abs()));
        }

        #[test]
        fn exact_and_float_paths_agree(z in prop::collection::vec(-(1i64 << 20)..(1i64 << 20), 6)) {
            let f = QuadraticFormF0::new(3).unwrap();
            let zf: Vec<f64> = z.iter().map(|&v| v as f64).collect();
            prop_assert_eq!(f.eval(&zf).unwrap(), f.eval_exact(&z).unwrap() as f64);
        }
    }
}

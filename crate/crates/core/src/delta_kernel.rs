//! The delta-method kernel.
//!
//! Starting from the bump `w0(x) = exp(1/(x^2 - 1))` on `(-1, 1)` we build
//! `omega(x) = (4/c0) w0(4x - 3)`, supported on `(1/2, 1)` with unit mass,
//! and
//!
//! ```text
//! h(x, y) = sum_j (x j)^{-1} [ omega(x j) - omega(|y| / (x j)) ]
//! ```
//!
//! With the constant `c_Q` this gives the exact finite identity
//!
//! ```text
//! delta(n) = c_Q Q^{-2} sum_{q >= 1} c_q(n) h(q/Q, n/Q^2)
//! ```
//!
//! where `c_q(n)` is the Ramanujan sum. Only finitely many `q` contribute
//! because `h(x, y) = 0` for `x > max(1, 2|y|)`.

use std::sync::OnceLock;

use crate::arith::{euler_phi, ramanujan_i64};
use crate::error::{arg, QcError, Result};
use crate::quadrature::{adaptive_gk, GaussLegendre};
use crate::summation::NeumaierSum;

/// Smallest admissible first argument of `h`; `h_1` has about `1/(2x)` terms.
pub const MIN_X: f64 = 1e-6;
const MAX_TERMS: f64 = 5e6;

/// The bump `exp(1/(x^2-1))` on `(-1, 1)`, zero elsewhere.
pub fn w0(x: f64) -> f64 {
    if x.abs() < 1.0 {
        (1.0 / (x * x - 1.0)).exp()
    } else {
        0.0
    }
}

pub fn w0_d1(x: f64) -> f64 {
    if x.abs() < 1.0 {
        let s = x * x - 1.0;
        w0(x) * (-2.0 * x / (s * s))
    } else {
        0.0
    }
}

pub fn w0_d2(x: f64) -> f64 {
    if x.abs() < 1.0 {
        let s = x * x - 1.0;
        let s2 = s * s;
        w0(x) * (4.0 * x * x / (s2 * s2) - 2.0 / s2 + 8.0 * x * x / (s2 * s))
    } else {
        0.0
    }
}

/// `c0 = ∫ w0`, computed once to `1e-13` absolute accuracy.
pub fn c0() -> f64 {
    static C0: OnceLock<f64> = OnceLock::new();
    *C0.get_or_init(|| adaptive_gk(w0, -1.0, 1.0, 1e-13).expect("w0 is smooth"))
}

pub fn omega(x: f64) -> f64 {
    4.0 / c0() * w0(4.0 * x - 3.0)
}

fn check_x(x: f64) -> Result<()> {
    if !(x > 0.0) || !x.is_finite() {
        return arg(format!("h(x, y) needs x > 0, got {x}"));
    }
    if x < MIN_X {
        return Err(QcError::Capability(format!(
            "h(x, y) below x = {MIN_X:e} is not supported (x = {x:e})"
        )));
    }
    Ok(())
}

/// `h_1(x) = sum_j (xj)^{-1} omega(xj)`, `j` in `(1/(2x), 1/x)`.
pub fn h1(x: f64) -> Result<f64> {
    check_x(x)?;
    let lo = ((0.5 / x).floor() as u64).max(1);
    let hi = (1.0 / x).ceil() as u64;
    let mut acc = NeumaierSum::new();
    for j in lo..=hi {
        let xj = x * j as f64;
        acc.add(omega(xj) / xj);
    }
    Ok(acc.value())
}

/// `h_2(x, y) = sum_j (xj)^{-1} omega(|y|/(xj))`, `j` in `(|y|/x, 2|y|/x)`.
pub fn h2(x: f64, y: f64) -> Result<f64> {
    check_x(x)?;
    let ay = y.abs();
    if ay == 0.0 {
        return Ok(0.0);
    }
    let ratio = ay / x;
    if ratio > MAX_TERMS {
        return Err(QcError::Capability(format!(
            "h_2 window |y|/x = {ratio:e} exceeds the term cap"
        )));
    }
    let lo = (ratio.floor() as u64).max(1);
    let hi = (2.0 * ratio).ceil() as u64;
    let mut acc = NeumaierSum::new();
    for j in lo..=hi {
        let xj = x * j as f64;
        acc.add(omega(ay / xj) / xj);
    }
    Ok(acc.value())
}

pub fn h(x: f64, y: f64) -> Result<f64> {
    Ok(h1(x)? - h2(x, y)?)
}

/// Direct form of the normalising constant: `c_Q = Q / sum_{d >= 1} omega(d/Q)`.
///
/// Independent of the Ramanujan-sum calibration in [`DeltaKernel::calibrate`];
/// both must agree.
pub fn c_q_divisor_form(q: f64) -> f64 {
    let lo = ((0.5 * q).floor() as u64).max(1);
    let hi = q.ceil() as u64;
    let s: NeumaierSum = (lo..=hi).map(|d| omega(d as f64 / q)).collect();
    q / s.value()
}

/// The pair `(omega, h)` at scale `Q` together with its constant `c_Q`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeltaKernel {
    q: f64,
    c0: f64,
    // R(0); c_Q = 1 / R(0)
    r0: Option<f64>,
}

impl DeltaKernel {
    pub fn new(q: f64) -> Result<Self> {
        if !(q > 1.0) || !q.is_finite() {
            return arg(format!("Q must exceed 1, got {q}"));
        }
        Ok(Self { q, c0: c0(), r0: None })
    }

    pub fn calibrated(q: f64) -> Result<Self> {
        let mut k = Self::new(q)?;
        k.calibrate()?;
        Ok(k)
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn c0(&self) -> f64 {
        self.c0
    }

    pub fn c_q(&self) -> Option<f64> {
        self.r0.map(|r| 1.0 / r)
    }

    /// Sets `c_Q = 1 / R(0)` with `R(0) = Q^{-2} sum_q phi(q) h(q/Q, 0)`, so
    /// the identity is exact at `n = 0`.
    pub fn calibrate(&mut self) -> Result<f64> {
        let qmax = self.q.floor() as u64;
        let mut acc = NeumaierSum::new();
        for q in 1..=qmax {
            acc.add(euler_phi(q) as f64 * h(q as f64 / self.q, 0.0)?);
        }
        let r0 = acc.value() / (self.q * self.q);
        if !(r0 > 0.0) {
            return Err(QcError::Internal(format!("R(0) = {r0} is not positive")));
        }
        self.r0 = Some(r0);
        Ok(1.0 / r0)
    }

    /// `c_Q Q^{-2} sum_q c_q(n) h(q/Q, n/Q^2)` over the finite window
    /// `q <= Q max(1, 2|n|/Q^2)`, accumulated in ascending `q`.
    pub fn delta_sum(&self, n: i64) -> Result<f64> {
        let r0 = self
            .r0
            .ok_or_else(|| QcError::Argument("delta kernel is not calibrated".into()))?;
        let q2 = self.q * self.q;
        let y = n as f64 / q2;
        let qmax = (self.q * (2.0 * y.abs()).max(1.0)).floor() as u64;
        let mut acc = NeumaierSum::new();
        for q in 1..=qmax {
            let c = ramanujan_i64(q, n);
            if c != 0 {
                acc.add(c as f64 * h(q as f64 / self.q, y)?);
            }
        }
        // Normalised by R(0), the uncalibrated value at n = 0.
        Ok(acc.value() / q2 / r0)
    }
}

/// A real function sampled on a uniform grid `start + i * step`.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledFunction {
    pub start: f64,
    pub step: f64,
    pub values: Vec<f64>,
}

impl SampledFunction {
    pub fn new(start: f64, step: f64, values: Vec<f64>) -> Result<Self> {
        if !(step > 0.0) || values.len() < 4 {
            return arg("a sampled function needs step > 0 and at least 4 samples");
        }
        Ok(Self { start, step, values })
    }

    /// Samples `f` at `n` equispaced points covering `[a, b]`.
    pub fn tabulate<F: Fn(f64) -> f64>(a: f64, b: f64, n: usize, f: F) -> Result<Self> {
        if n < 4 || !(b > a) {
            return arg("tabulation needs b > a and n >= 4");
        }
        let step = (b - a) / (n - 1) as f64;
        Self::new(a, step, (0..n).map(|i| f(a + step * i as f64)).collect())
    }

    pub fn end(&self) -> f64 {
        self.start + self.step * (self.values.len() - 1) as f64
    }

    /// Cubic Lagrange interpolation on the four surrounding samples.
    pub fn eval(&self, t: f64) -> f64 {
        let n = self.values.len();
        let s = (t - self.start) / self.step;
        let i = (s.floor() as isize - 1).clamp(0, n as isize - 4) as usize;
        let u = s - i as f64;
        let v = &self.values[i..i + 4];
        let (l0, l1, l2, l3) = (
            -(u - 1.0) * (u - 2.0) * (u - 3.0) / 6.0,
            u * (u - 2.0) * (u - 3.0) / 2.0,
            -u * (u - 1.0) * (u - 3.0) / 2.0,
            u * (u - 1.0) * (u - 2.0) / 6.0,
        );
        l0 * v[0] + l1 * v[1] + l2 * v[2] + l3 * v[3]
    }
}

/// `∫_{-X}^{X} f(y) h(x, y) dy` for a callable `f`.
///
/// The support shells of the `h_2` terms start and end at multiples of
/// `x/2`; every such segment is split into four panels with an 8-point
/// Gauss rule.
pub fn smear_fn<F: Fn(f64) -> f64>(f: F, x: f64, half_width: f64) -> Result<f64> {
    check_x(x)?;
    if !(half_width > 0.0) {
        return arg("smearing half-width must be positive");
    }
    let seg = 0.5 * x;
    let nseg = (2.0 * half_width / seg).ceil();
    if nseg > 4e6 {
        return Err(QcError::Capability(format!(
            "smearing needs {nseg:e} segments; reduce the range or increase x"
        )));
    }
    let h1x = h1(x)?;
    let kmax = (half_width / seg).floor() as i64;
    let mut breaks = vec![-half_width];
    breaks.extend((-kmax..=kmax).map(|k| k as f64 * seg).filter(|&b| b.abs() < half_width));
    breaks.push(half_width);
    let gl = GaussLegendre::new(8);
    let mut acc = NeumaierSum::new();
    for w in breaks.windows(2) {
        let (a, b) = (w[0], w[1]);
        let step = (b - a) / 4.0;
        for p in 0..4 {
            let pa = a + step * p as f64;
            for (y, wt) in gl.mapped(pa, pa + step) {
                let hv = h1x - h2(x, y)?;
                acc.add(wt * f(y) * hv);
            }
        }
    }
    Ok(acc.value())
}

/// `∫ f(y) h(x, y) dy` for a sampled `f`, over the largest symmetric interval
/// the grid covers. The grid must resolve the narrowest support shell
/// (width `x/2`) with at least 8 nodes.
pub fn smear(f: &SampledFunction, x: f64) -> Result<f64> {
    check_x(x)?;
    if f.step > x / 16.0 {
        return Err(QcError::Accuracy(format!(
            "grid step {} is too coarse for x = {x}: need <= x/16",
            f.step
        )));
    }
    let half_width = (-f.start).min(f.end());
    if !(half_width > 0.0) {
        return arg("sampled grid must contain 0 in its interior");
    }
    smear_fn(|y| f.eval(y), x, half_width)
}

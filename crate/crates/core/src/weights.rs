//! Weight functions `w` on `R^d`, `d = 2 d1`.
//!
//! The family is closed: each member knows its derivatives up to order two,
//! its decay radius and an upper bound for the weighted norms
//!
//! ```text
//! ||w||_{n1,n2} = sup_z max_{|alpha| <= n1} |∂^alpha w(z)| <z>^{n2},   <z> = max(1, |z|).
//! ```
//!
//! Regularity of the Fourier transform is known analytically per family
//! (Gaussians transform to Gaussians; the compactly supported bumps are
//! smooth, so their transforms decay faster than any power) and is not
//! computed.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use crate::delta_kernel::{w0, w0_d1, w0_d2};
use crate::error::{arg, QcError, Result};

/// What the lattice counter and the quadratures need from a weight.
pub trait Weight: Send + Sync {
    /// Ambient dimension `d`.
    fn dim(&self) -> usize;

    /// `w(z)`; `z.len() == self.dim()` is the caller's responsibility.
    fn value(&self, z: &[f64]) -> f64;

    /// A radius `R` with `sup_{|z| >= R} |w(z)| |z|^n <= eps`.
    fn decay_radius(&self, eps: f64, n: u32) -> f64;
}

/// Radial profile `p(rho) = w0((rho - center) / half_width)`, a smooth bump
/// supported on `(center - half_width, center + half_width)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadialBump {
    pub center: f64,
    pub half_width: f64,
}

impl RadialBump {
    pub fn value(&self, rho: f64) -> f64 {
        w0((rho - self.center) / self.half_width)
    }

    pub fn d1(&self, rho: f64) -> f64 {
        w0_d1((rho - self.center) / self.half_width) / self.half_width
    }

    pub fn d2(&self, rho: f64) -> f64 {
        w0_d2((rho - self.center) / self.half_width) / (self.half_width * self.half_width)
    }

    pub fn support(&self) -> (f64, f64) {
        (self.center - self.half_width, self.center + self.half_width)
    }
}

/// The members of the weight family.
#[derive(Debug, Clone, PartialEq)]
pub enum WeightFamily {
    /// `w ≡ 0`.
    Zero,
    /// `exp(-a π |z|^2)`.
    GaussianIsotropic { a: f64 },
    /// `exp(-a π |z - s|^2)`.
    ShiftedGaussian { a: f64, shift: Vec<f64> },
    /// `prod_i e * w0(z_i / scale)`, normalised to `w(0) = 1`.
    ProductBump { scale: f64 },
    /// `F(|x|^2) g(|y|^2)` with radial bump profiles.
    AppendixExample { x_profile: RadialBump, y_profile: RadialBump },
}

/// A weight together with its ambient dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightFunction {
    family: WeightFamily,
    d1: usize,
}

const MAX_ANALYTIC_ORDER: usize = 2;
const MAX_FD_ORDER: usize = 4;
const BUMP_SAFETY: f64 = 1.05;

impl WeightFunction {
    pub fn new(family: WeightFamily, d1: usize) -> Result<Self> {
        if d1 == 0 {
            return arg("weight dimension must be positive");
        }
        match &family {
            WeightFamily::GaussianIsotropic { a } if !(*a > 0.0) => {
                return arg(format!("Gaussian parameter a must be positive, got {a}"))
            }
            WeightFamily::ShiftedGaussian { a, shift } => {
                if !(*a > 0.0) {
                    return arg(format!("Gaussian parameter a must be positive, got {a}"));
                }
                if shift.len() != 2 * d1 {
                    return arg(format!(
                        "shift has length {}, expected {}",
                        shift.len(),
                        2 * d1
                    ));
                }
            }
            WeightFamily::ProductBump { scale } if !(*scale > 0.0) => {
                return arg(format!("bump scale must be positive, got {scale}"))
            }
            WeightFamily::AppendixExample { x_profile, y_profile } => {
                let (lo_x, hi_x) = x_profile.support();
                let (lo_y, hi_y) = y_profile.support();
                if !(x_profile.half_width > 0.0 && y_profile.half_width > 0.0) {
                    return arg("profile half-widths must be positive");
                }
                if hi_x > 0.5 || lo_x < -0.5 || hi_y > 0.5 || lo_y < -0.5 {
                    return arg("appendix profiles must be supported in [-1/2, 1/2]");
                }
                if lo_y <= 0.0 {
                    return arg("the y-profile must vanish near 0");
                }
            }
            _ => {}
        }
        Ok(Self { family, d1 })
    }

    pub fn zero(d1: usize) -> Self {
        Self { family: WeightFamily::Zero, d1 }
    }

    pub fn gaussian(a: f64, d1: usize) -> Result<Self> {
        Self::new(WeightFamily::GaussianIsotropic { a }, d1)
    }

    pub fn shifted_gaussian(a: f64, shift: Vec<f64>) -> Result<Self> {
        let d1 = shift.len() / 2;
        if shift.len() % 2 != 0 {
            return arg("shift must have even length");
        }
        Self::new(WeightFamily::ShiftedGaussian { a, shift }, d1)
    }

    pub fn product_bump(scale: f64, d1: usize) -> Result<Self> {
        Self::new(WeightFamily::ProductBump { scale }, d1)
    }

    /// `F(|x|^2) g(|y|^2)` with `F` supported on `(-1/2, 1/2)` and `g` on
    /// `(1/8, 1/2)`.
    pub fn appendix_example(d1: usize) -> Self {
        Self::new(
            WeightFamily::AppendixExample {
                x_profile: RadialBump { center: 0.0, half_width: 0.5 },
                y_profile: RadialBump { center: 5.0 / 16.0, half_width: 3.0 / 16.0 },
            },
            d1,
        )
        .expect("default profiles are valid")
    }

    pub fn family(&self) -> &WeightFamily {
        &self.family
    }

    pub fn d1(&self) -> usize {
        self.d1
    }

    pub fn dim(&self) -> usize {
        2 * self.d1
    }

    /// Regularity exponent `gamma` in `|w(z)|, |ŵ(ξ)| <= C |·|^{-d-gamma}`.
    /// Every member decays faster than any power, so `1` is admissible.
    pub fn regularity_exponent(&self) -> f64 {
        1.0
    }

    /// Whether `w(-z) = w(z)`.
    pub fn is_even(&self) -> bool {
        !matches!(&self.family, WeightFamily::ShiftedGaussian { shift, .. } if shift.iter().any(|&s| s != 0.0))
    }

    /// Whether `w(x, y)` depends on `x` and `y` only through `|x|` and `|y|`.
    pub fn is_bi_radial(&self) -> bool {
        matches!(
            self.family,
            WeightFamily::Zero | WeightFamily::GaussianIsotropic { .. } | WeightFamily::AppendixExample { .. }
        )
    }

    /// The point the weight is concentrated around.
    pub fn center(&self) -> Vec<f64> {
        match &self.family {
            WeightFamily::ShiftedGaussian { shift, .. } => shift.clone(),
            _ => vec![0.0; self.dim()],
        }
    }

    /// Whether `w` is radial about [`Self::center`] in `x` and in `y`
    /// separately.
    pub fn is_bi_radial_about_center(&self) -> bool {
        self.is_bi_radial() || matches!(self.family, WeightFamily::ShiftedGaussian { .. })
    }

    /// Like [`Self::decay_radius`] with `n = 0`, but measured from
    /// [`Self::center`].
    pub fn centered_decay_radius(&self, eps: f64) -> f64 {
        match &self.family {
            WeightFamily::ShiftedGaussian { a, .. } => gaussian_decay_radius(*a, 0.0, eps, 0),
            _ => self.decay_radius(eps, 0),
        }
    }

    /// Radii in `|x|` and in `|y|` where a bi-radial weight stops being
    /// smooth (support edges of the radial profiles).
    pub fn radial_breaks(&self) -> (Vec<f64>, Vec<f64>) {
        let edges = |p: &RadialBump| -> Vec<f64> {
            let (lo, hi) = p.support();
            [lo, hi].into_iter().filter(|&v| v > 0.0).map(f64::sqrt).collect()
        };
        match &self.family {
            WeightFamily::AppendixExample { x_profile, y_profile } => (edges(x_profile), edges(y_profile)),
            _ => (Vec::new(), Vec::new()),
        }
    }

    fn check_dim(&self, z: &[f64]) -> Result<()> {
        if z.len() != self.dim() {
            return arg(format!("expected a point of dimension {}, got {}", self.dim(), z.len()));
        }
        Ok(())
    }

    pub fn eval(&self, z: &[f64]) -> Result<f64> {
        self.check_dim(z)?;
        Ok(self.value_unchecked(z))
    }

    fn value_unchecked(&self, z: &[f64]) -> f64 {
        match &self.family {
            WeightFamily::Zero => 0.0,
            WeightFamily::GaussianIsotropic { a } => (-a * PI * norm_sq(z)).exp(),
            WeightFamily::ShiftedGaussian { a, shift } => {
                let r2: f64 = z.iter().zip(shift).map(|(v, s)| (v - s) * (v - s)).sum();
                (-a * PI * r2).exp()
            }
            WeightFamily::ProductBump { scale } => {
                let mut p = 1.0;
                for &v in z {
                    p *= bump_1d(v / scale);
                    if p == 0.0 {
                        break;
                    }
                }
                p
            }
            WeightFamily::AppendixExample { x_profile, y_profile } => {
                let (x, y) = z.split_at(self.d1);
                let f = x_profile.value(norm_sq(x));
                if f == 0.0 {
                    return 0.0;
                }
                f * y_profile.value(norm_sq(y))
            }
        }
    }

    /// `∂^alpha w(z)` for a multi-index `alpha` (one order per coordinate).
    ///
    /// Orders up to two are analytic; orders three and four apply central
    /// differences to the analytic second derivatives.
    pub fn eval_partial(&self, z: &[f64], multi_index: &[usize]) -> Result<f64> {
        self.check_dim(z)?;
        if multi_index.len() != self.dim() {
            return arg("multi-index length must equal the dimension");
        }
        let idx: Vec<usize> = multi_index
            .iter()
            .enumerate()
            .flat_map(|(i, &k)| std::iter::repeat(i).take(k))
            .collect();
        match idx.len() {
            k if k <= MAX_ANALYTIC_ORDER => Ok(self.partial_analytic(z, &idx)),
            k if k <= MAX_FD_ORDER => Ok(self.partial_fd_tail(z, &idx[..2], &idx[2..])),
            k => Err(QcError::Capability(format!(
                "derivatives of order {k} > {MAX_FD_ORDER} are not available"
            ))),
        }
    }

    /// First or second partial derivatives by central differences of values
    /// alone, as an independent check of [`Self::eval_partial`].
    pub fn eval_partial_fd(&self, z: &[f64], idx: &[usize]) -> Result<f64> {
        self.check_dim(z)?;
        let h = fd_step(z);
        let mut p = z.to_vec();
        match idx {
            [i] => {
                p[*i] = z[*i] + h;
                let fp = self.value_unchecked(&p);
                p[*i] = z[*i] - h;
                let fm = self.value_unchecked(&p);
                Ok((fp - fm) / (2.0 * h))
            }
            [i, j] => {
                let h = h.sqrt() * 1e-2_f64.max(h.sqrt());
                let mut f = |si: f64, sj: f64| {
                    p.copy_from_slice(z);
                    p[*i] += si * h;
                    p[*j] += sj * h;
                    self.value_unchecked(&p)
                };
                Ok((f(1.0, 1.0) - f(1.0, -1.0) - f(-1.0, 1.0) + f(-1.0, -1.0)) / (4.0 * h * h))
            }
            _ => arg("finite-difference check supports orders 1 and 2"),
        }
    }

    fn partial_fd_tail(&self, z: &[f64], head: &[usize], tail: &[usize]) -> f64 {
        match tail.split_first() {
            None => self.partial_analytic(z, head),
            Some((&k, rest)) => {
                let h = fd_step(z);
                let mut p = z.to_vec();
                p[k] = z[k] + h;
                let fp = self.partial_fd_tail(&p, head, rest);
                p[k] = z[k] - h;
                let fm = self.partial_fd_tail(&p, head, rest);
                (fp - fm) / (2.0 * h)
            }
        }
    }

    fn partial_analytic(&self, z: &[f64], idx: &[usize]) -> f64 {
        match &self.family {
            WeightFamily::Zero => 0.0,
            WeightFamily::GaussianIsotropic { a } => gaussian_partial(*a, z, None, idx),
            WeightFamily::ShiftedGaussian { a, shift } => gaussian_partial(*a, z, Some(shift), idx),
            WeightFamily::ProductBump { scale } => {
                let mut orders = vec![0usize; z.len()];
                for &i in idx {
                    orders[i] += 1;
                }
                let mut p = 1.0;
                for (v, &k) in z.iter().zip(&orders) {
                    let u = v / scale;
                    p *= match k {
                        0 => bump_1d(u),
                        1 => std::f64::consts::E * w0_d1(u) / scale,
                        _ => std::f64::consts::E * w0_d2(u) / (scale * scale),
                    };
                }
                p
            }
            WeightFamily::AppendixExample { x_profile, y_profile } => {
                let d1 = self.d1;
                let (x, y) = z.split_at(d1);
                let (xx, yy) = (norm_sq(x), norm_sq(y));
                // Split the indices into x- and y-parts.
                let xi: Vec<usize> = idx.iter().copied().filter(|&i| i < d1).collect();
                let yi: Vec<usize> = idx.iter().filter(|&&i| i >= d1).map(|&i| i - d1).collect();
                radial_partial(x_profile, x, xx, &xi) * radial_partial(y_profile, y, yy, &yi)
            }
        }
    }

    pub fn decay_radius(&self, eps: f64, n: u32) -> f64 {
        assert!(eps > 0.0, "decay_radius needs eps > 0");
        match &self.family {
            WeightFamily::Zero => 0.0,
            WeightFamily::GaussianIsotropic { a } => gaussian_decay_radius(*a, 0.0, eps, n),
            WeightFamily::ShiftedGaussian { a, shift } => {
                gaussian_decay_radius(*a, norm_sq(shift).sqrt(), eps, n)
            }
            WeightFamily::ProductBump { scale } => scale * (self.dim() as f64).sqrt(),
            WeightFamily::AppendixExample { x_profile, y_profile } => {
                (x_profile.support().1 + y_profile.support().1).sqrt()
            }
        }
    }

    /// An upper bound for `||w||_{n1,n2}`, `n1 <= 2`.
    pub fn norm_bound(&self, n1: usize, n2: f64) -> Result<f64> {
        if n1 > MAX_ANALYTIC_ORDER {
            return Err(QcError::Capability(format!(
                "norm bounds are certified only for n1 <= {MAX_ANALYTIC_ORDER}"
            )));
        }
        if !(n2 >= 0.0) {
            return arg("n2 must be non-negative");
        }
        Ok(match &self.family {
            WeightFamily::Zero => 0.0,
            WeightFamily::GaussianIsotropic { a } => gaussian_norm_bound(*a, 0.0, n1, n2),
            WeightFamily::ShiftedGaussian { a, shift } => {
                gaussian_norm_bound(*a, norm_sq(shift).sqrt(), n1, n2)
            }
            WeightFamily::ProductBump { scale } => {
                let d = self.dim() as i32;
                let sup = |k: usize| BUMP_SAFETY * sup_1d(|u| bump_derivative(u, k) / scale.powi(k as i32));
                let (b0, b1, b2): (f64, f64, f64) = (1.0, sup(1), sup(2));
                let mut m = b0;
                if n1 >= 1 {
                    m = m.max(b1 * b0.powi(d - 1));
                }
                if n1 >= 2 {
                    m = m.max(b2 * b0.powi(d - 1)).max(b1 * b1 * b0.powi(d - 2));
                }
                m * (scale * (d as f64).sqrt()).max(1.0).powf(n2)
            }
            WeightFamily::AppendixExample { x_profile, y_profile } => {
                BUMP_SAFETY * appendix_envelope_sup(x_profile, y_profile, n1, n2)
            }
        })
    }

    /// Parses `gaussian:a=<f>`, `gaussian:a=<f>:shift=<v1,...,vd>`,
    /// `bump:scale=<f>`, `appendix-example` or `zero`.
    pub fn parse(spec: &str, d1: usize) -> Result<Self> {
        let mut parts = spec.trim().split(':');
        let head = parts.next().unwrap_or_default();
        let mut kv = std::collections::BTreeMap::new();
        for p in parts {
            let (k, v) = p
                .split_once('=')
                .ok_or_else(|| QcError::Argument(format!("malformed weight field '{p}'")))?;
            if kv.insert(k.to_string(), v.to_string()).is_some() {
                return arg(format!("duplicate weight field '{k}'"));
            }
        }
        let take_f64 = |kv: &mut std::collections::BTreeMap<String, String>, key: &str| -> Result<f64> {
            let v = kv
                .remove(key)
                .ok_or_else(|| QcError::Argument(format!("weight field '{key}' is required")))?;
            f64::from_str(&v).map_err(|_| QcError::Argument(format!("'{v}' is not a decimal number")))
        };
        let w = match head {
            "zero" => Self::zero(d1),
            "appendix-example" => Self::appendix_example(d1),
            "gaussian" => {
                let a = take_f64(&mut kv, "a")?;
                match kv.remove("shift") {
                    None => Self::gaussian(a, d1)?,
                    Some(s) => {
                        let shift = s
                            .split(',')
                            .map(|v| {
                                f64::from_str(v.trim())
                                    .map_err(|_| QcError::Argument(format!("'{v}' is not a decimal number")))
                            })
                            .collect::<Result<Vec<f64>>>()?;
                        Self::new(WeightFamily::ShiftedGaussian { a, shift }, d1)?
                    }
                }
            }
            "bump" => Self::product_bump(take_f64(&mut kv, "scale")?, d1)?,
            other => return arg(format!("unknown weight family '{other}'")),
        };
        if let Some(k) = kv.keys().next() {
            return arg(format!("unexpected weight field '{k}'"));
        }
        Ok(w)
    }
}

impl fmt::Display for WeightFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.family {
            WeightFamily::Zero => write!(f, "zero"),
            WeightFamily::GaussianIsotropic { a } => write!(f, "gaussian:a={a}"),
            WeightFamily::ShiftedGaussian { a, shift } => {
                let s: Vec<String> = shift.iter().map(|v| v.to_string()).collect();
                write!(f, "gaussian:a={a}:shift={}", s.join(","))
            }
            WeightFamily::ProductBump { scale } => write!(f, "bump:scale={scale}"),
            WeightFamily::AppendixExample { .. } => write!(f, "appendix-example"),
        }
    }
}

impl Weight for WeightFunction {
    fn dim(&self) -> usize {
        2 * self.d1
    }

    fn value(&self, z: &[f64]) -> f64 {
        self.value_unchecked(z)
    }

    fn decay_radius(&self, eps: f64, n: u32) -> f64 {
        WeightFunction::decay_radius(self, eps, n)
    }
}

/// The rescaled weight `w_L(z) = w(z / L)`.
#[derive(Debug, Clone)]
pub struct ScaledWeight<'a, W: Weight> {
    inner: &'a W,
    scale: f64,
}

impl<'a, W: Weight> ScaledWeight<'a, W> {
    pub fn new(inner: &'a W, scale: f64) -> Self {
        Self { inner, scale }
    }
}

impl<W: Weight> Weight for ScaledWeight<'_, W> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn value(&self, z: &[f64]) -> f64 {
        let zs: Vec<f64> = z.iter().map(|v| v / self.scale).collect();
        self.inner.value(&zs)
    }

    fn decay_radius(&self, eps: f64, n: u32) -> f64 {
        // |w(z/L)| |z|^n = |w(u)| |u|^n L^n with u = z/L.
        self.scale * self.inner.decay_radius(eps / self.scale.powi(n as i32), n)
    }
}

pub(crate) fn norm_sq(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum()
}

fn fd_step(z: &[f64]) -> f64 {
    f64::EPSILON.cbrt() * norm_sq(z).sqrt().max(1.0)
}

fn bump_1d(u: f64) -> f64 {
    std::f64::consts::E * w0(u)
}

fn bump_derivative(u: f64, k: usize) -> f64 {
    std::f64::consts::E
        * match k {
            0 => w0(u),
            1 => w0_d1(u),
            _ => w0_d2(u),
        }
}

fn gaussian_partial(a: f64, z: &[f64], shift: Option<&Vec<f64>>, idx: &[usize]) -> f64 {
    let v = |i: usize| z[i] - shift.map_or(0.0, |s| s[i]);
    let r2: f64 = (0..z.len()).map(|i| v(i) * v(i)).sum();
    let w = (-a * PI * r2).exp();
    let k = 2.0 * a * PI;
    match idx {
        [] => w,
        [i] => -k * v(*i) * w,
        [i, j] => {
            let delta = if i == j { k } else { 0.0 };
            (k * k * v(*i) * v(*j) - delta) * w
        }
        _ => unreachable!("analytic partials stop at order 2"),
    }
}

/// Partial derivatives of `p(|v|^2)` in the coordinates of `v`.
fn radial_partial(p: &RadialBump, v: &[f64], vv: f64, idx: &[usize]) -> f64 {
    match idx {
        [] => p.value(vv),
        [i] => 2.0 * v[*i] * p.d1(vv),
        [i, j] => {
            let diag = if i == j { 2.0 * p.d1(vv) } else { 0.0 };
            diag + 4.0 * v[*i] * v[*j] * p.d2(vv)
        }
        _ => unreachable!("analytic partials stop at order 2"),
    }
}

/// Smallest `R` with `sup_{r >= R} exp(-a π (r - s)^2) r^n <= eps`, where
/// `s` is the shift length; found by bisection on the decreasing branch.
fn gaussian_decay_radius(a: f64, s: f64, eps: f64, n: u32) -> f64 {
    let n = n as f64;
    let f = |r: f64| -a * PI * (r - s).powi(2) + if n > 0.0 { n * r.ln() } else { 0.0 };
    let target = eps.ln();
    // Maximiser of f on r >= s.
    let r_star = 0.5 * (s + (s * s + 2.0 * n / (a * PI)).sqrt());
    if f(r_star) <= target {
        return 0.0;
    }
    let mut lo = r_star;
    let mut hi = r_star.max(1.0);
    while f(hi) > target {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * hi {
            break;
        }
    }
    hi
}

fn gaussian_norm_bound(a: f64, s: f64, n1: usize, n2: f64) -> f64 {
    let k = 2.0 * a * PI;
    // Radial envelope of max_{|alpha| <= n1} |∂^alpha w| in rho = |z - shift|,
    // times <z>^{n2} <= max(1, rho + s)^{n2}.
    let env = |rho: f64| {
        let mut p: f64 = 1.0;
        if n1 >= 1 {
            p = p.max(k * rho);
        }
        if n1 >= 2 {
            p = p.max(k * k * rho * rho).max(k);
        }
        let lz = (rho + s).max(1.0);
        (p.ln() - a * PI * rho * rho + n2 * lz.ln()).exp()
    };
    let rmax = gaussian_decay_radius(a, 0.0, 1e-300, (n2.ceil() as u32) + 2) + 1.0;
    let best = maximise_1d(env, 0.0, rmax, 20_000);
    best * (1.0 + 1e-9)
}

/// Grid search followed by golden-section refinement around the best node.
fn maximise_1d<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> f64 {
    let step = (b - a) / n as f64;
    let (mut best_i, mut best) = (0usize, f(a));
    for i in 1..=n {
        let v = f(a + step * i as f64);
        if v > best {
            best = v;
            best_i = i;
        }
    }
    let (mut lo, mut hi) = (
        (a + step * (best_i as f64 - 1.0)).max(a),
        (a + step * (best_i as f64 + 1.0)).min(b),
    );
    let g = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..200 {
        let x1 = hi - g * (hi - lo);
        let x2 = lo + g * (hi - lo);
        let (f1, f2) = (f(x1), f(x2));
        best = best.max(f1).max(f2);
        if f1 > f2 {
            hi = x2;
        } else {
            lo = x1;
        }
        if hi - lo < 1e-14 * (1.0 + hi.abs()) {
            break;
        }
    }
    best
}

/// Supremum of `|f|` on `(-1, 1)` by dyadically refined grids.
fn sup_1d<F: Fn(f64) -> f64>(f: F) -> f64 {
    let mut n = 256usize;
    let mut prev = 0.0;
    loop {
        let cur = (0..=n)
            .map(|i| f(-1.0 + 2.0 * i as f64 / n as f64).abs())
            .fold(0.0, f64::max);
        if n >= 1 << 16 || (cur - prev).abs() <= 1e-4 * cur {
            return cur;
        }
        prev = cur;
        n *= 2;
    }
}

fn appendix_envelope_sup(px: &RadialBump, py: &RadialBump, n1: usize, n2: f64) -> f64 {
    let xmax = px.support().1;
    let ymax = py.support().1;
    let env = |xx: f64, yy: f64| {
        let (f, g) = (px.value(xx).abs(), py.value(yy).abs());
        let (f1, g1) = (px.d1(xx).abs(), py.d1(yy).abs());
        let (rx, ry) = (xx.sqrt(), yy.sqrt());
        let mut m = f * g;
        if n1 >= 1 {
            m = m.max(2.0 * rx * f1 * g).max(2.0 * ry * f * g1);
        }
        if n1 >= 2 {
            let (f2, g2) = (px.d2(xx).abs(), py.d2(yy).abs());
            m = m
                .max((2.0 * f1 + 4.0 * xx * f2) * g)
                .max(f * (2.0 * g1 + 4.0 * yy * g2))
                .max(4.0 * rx * ry * f1 * g1);
        }
        m * (xx + yy).sqrt().max(1.0).powf(n2)
    };
    let mut n = 128usize;
    let mut prev = 0.0;
    loop {
        let mut cur: f64 = 0.0;
        for i in 0..=n {
            let xx = xmax * i as f64 / n as f64;
            for j in 0..=n {
                cur = cur.max(env(xx, ymax * j as f64 / n as f64));
            }
        }
        if n >= 2048 || (cur - prev).abs() <= 1e-3 * cur {
            return cur;
        }
        prev = cur;
        n *= 2;
    }
}

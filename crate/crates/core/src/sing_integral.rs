//! The singular integral
//!
//! ```text
//! I(t; w) = ∫_{R^{d1}} |x|^{-1} dx ∫_{x^⊥} w(x, y + t x / |x|^2) dy
//! ```
//!
//! by product quadrature in polar coordinates `x = r θ`:
//!
//! ```text
//! I(t; w) = ∫_0^{r_max} r^{d1-2} dr ∫_{S^{d1-1}} dθ ∫_{θ^⊥} w(r θ, u + (t/r) θ) du.
//! ```
//!
//! `σ_∞(w; F0, m) = I(m; w)` because `|A0 z| = |z|` for the split form.

use std::f64::consts::PI;

use rayon::prelude::*;

use crate::delta_kernel::{smear, SampledFunction};
use crate::error::{arg, QcError, Result};
use crate::quadrature::{composite_rule, GaussLegendre};
use crate::special::{bessel_k0, bessel_k1};
use crate::summation::{merge_ordered, NeumaierSum};
use crate::weights::{Weight, WeightFunction};

/// Discretisation of the polar product rule.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureConfig {
    /// Gauss-Legendre order on each radial panel.
    pub radial_order: usize,
    /// Gauss-Legendre order in `cos` of the polar angle on `S^2`; the
    /// azimuth (and the circle `S^1`) uses `2 * angular_order` points.
    pub angular_order: usize,
    /// Gauss-Legendre order on each radial panel of the fiber.
    pub plane_order: usize,
    /// Number of radial panels of the fiber.
    pub plane_panels: usize,
    /// Trapezoidal points on the fiber circle (`d1 = 3`).
    pub fiber_angular: usize,
    /// Radius of the innermost radial panel `[0, r_min]`.
    pub r_min: f64,
    pub r_max: f64,
    pub fiber_radius: f64,
    /// When set, every value is recomputed with [`QuadratureConfig::refined`]
    /// and a difference above `10 * tolerance` is an accuracy error.
    pub tolerance: Option<f64>,
}

const DECAY_EPS: f64 = 1e-15;

impl QuadratureConfig {
    /// Defaults sized to the weight: radii from its decay radius, and the
    /// minimal angular rules when `w` is bi-radial (the angular integrands
    /// are then constant).
    pub fn for_weight(w: &WeightFunction) -> Self {
        let r = w.decay_radius(DECAY_EPS, 0).max(1.0);
        let (angular_order, fiber_angular) = if w.is_bi_radial() {
            (4, 4)
        } else if w.is_bi_radial_about_center() {
            (12, 8)
        } else {
            (16, 24)
        };
        Self {
            radial_order: 16,
            angular_order,
            plane_order: 16,
            plane_panels: 4,
            fiber_angular,
            r_min: 1e-6 * r,
            r_max: r,
            fiber_radius: w.centered_decay_radius(DECAY_EPS).max(1.0),
            tolerance: None,
        }
    }

    pub fn with_tolerance(mut self, tol: f64) -> Self {
        self.tolerance = Some(tol);
        self
    }

    /// The next refinement level: orders times 3/2, two more fiber panels
    /// and a four times smaller apex panel.
    pub fn refined(&self) -> Self {
        let up = |n: usize| n + n.div_ceil(2);
        Self {
            radial_order: up(self.radial_order),
            angular_order: up(self.angular_order),
            plane_order: up(self.plane_order),
            plane_panels: self.plane_panels + 2,
            fiber_angular: up(self.fiber_angular),
            r_min: self.r_min / 4.0,
            r_max: self.r_max,
            fiber_radius: self.fiber_radius,
            tolerance: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let orders = [
            self.radial_order,
            self.angular_order,
            self.plane_order,
            self.fiber_angular,
        ];
        if orders.iter().any(|&n| n < 4) {
            return arg("all quadrature orders must be at least 4");
        }
        if self.plane_panels == 0 {
            return arg("the fiber needs at least one panel");
        }
        if !(self.r_min > 0.0 && self.r_min < self.r_max && self.fiber_radius > 0.0) {
            return arg("need 0 < r_min < r_max and fiber_radius > 0");
        }
        Ok(())
    }
}

/// Values `I(t_i)` on a sorted grid, with the configuration that produced
/// them.
#[derive(Debug, Clone, PartialEq)]
pub struct IFunctionGrid {
    pub t_values: Vec<f64>,
    pub i_values: Vec<f64>,
    pub config: QuadratureConfig,
}

impl IFunctionGrid {
    /// The grid as an interpolating function; the spacing must be uniform.
    pub fn to_sampled(&self) -> Result<SampledFunction> {
        let n = self.t_values.len();
        if n < 4 {
            return arg("an interpolating grid needs at least 4 points");
        }
        let step = (self.t_values[n - 1] - self.t_values[0]) / (n - 1) as f64;
        for (i, &t) in self.t_values.iter().enumerate() {
            let expect = self.t_values[0] + step * i as f64;
            if (t - expect).abs() > 1e-9 * step {
                return arg("the I grid is not uniformly spaced");
            }
        }
        SampledFunction::new(self.t_values[0], step, self.i_values.clone())
    }
}

fn check_d1(d1: usize) -> Result<()> {
    match d1 {
        0 | 1 => arg(format!("the singular integral needs d1 >= 2, got {d1}")),
        2 | 3 => Ok(()),
        _ => Err(QcError::Capability(format!(
            "quadrature for d1 = {d1} > 3 is not built"
        ))),
    }
}

/// Nodes and weights of a rule on `S^{d1-1}`.
fn sphere_rule(d1: usize, order: usize) -> Vec<(Vec<f64>, f64)> {
    let na = 2 * order;
    let dphi = 2.0 * PI / na as f64;
    match d1 {
        2 => (0..na)
            .map(|k| {
                let a = dphi * (k as f64 + 0.5);
                (vec![a.cos(), a.sin()], dphi)
            })
            .collect(),
        _ => {
            let gl = GaussLegendre::new(order);
            let mut out = Vec::with_capacity(order * na);
            for (c, wc) in gl.mapped(-1.0, 1.0) {
                let s = (1.0 - c * c).sqrt();
                for k in 0..na {
                    let a = dphi * (k as f64 + 0.5);
                    out.push((vec![s * a.cos(), s * a.sin(), c], wc * dphi));
                }
            }
            out
        }
    }
}

/// Placement data for the quadrature nodes of one integrand.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct IntegrandHints {
    /// Point of `y`-space the fiber coordinates are centred on (projected
    /// onto each fiber).
    pub y_center: Option<Vec<f64>>,
    /// Radii `|x|` at which the integrand is not smooth.
    pub x_breaks: Vec<f64>,
    /// Radii `|y|` at which the integrand is not smooth; only used when the
    /// fiber is not re-centred.
    pub y_breaks: Vec<f64>,
}

impl IntegrandHints {
    /// Hints for `w`, or for `(x, y) ↦ w(y, x)` when `swapped`.
    pub fn for_weight(w: &WeightFunction, swapped: bool) -> Self {
        let d1 = w.d1();
        let c = w.center();
        let (bx, by) = w.radial_breaks();
        let (cy, bx, by) = if swapped { (&c[..d1], by, bx) } else { (&c[d1..], bx, by) };
        let y_center = cy.iter().any(|&v| v != 0.0).then(|| cy.to_vec());
        Self { y_center, x_breaks: bx, y_breaks: by }
    }
}

/// Nodes and weights on the ball of radius `cfg.fiber_radius` in
/// `R^{d1-1}`, with extra radial breaks at `rho_breaks`.
fn fiber_rule(d1: usize, cfg: &QuadratureConfig, rho_breaks: &[f64]) -> Vec<(Vec<f64>, f64)> {
    let r = cfg.fiber_radius;
    let mut knots = vec![0.0];
    knots.extend(rho_breaks.iter().copied().filter(|&b| b > 0.0 && b < r));
    knots.push(r);
    knots.sort_by(f64::total_cmp);
    let mut breaks = vec![0.0];
    for seg in knots.windows(2) {
        for i in 1..=cfg.plane_panels {
            breaks.push(seg[0] + (seg[1] - seg[0]) * i as f64 / cfg.plane_panels as f64);
        }
    }
    let radial = composite_rule(&breaks, cfg.plane_order);
    match d1 {
        2 => radial
            .iter()
            .flat_map(|&(s, w)| [(vec![-s], w), (vec![s], w)])
            .collect(),
        _ => {
            let na = cfg.fiber_angular;
            let dphi = 2.0 * PI / na as f64;
            let mut out = Vec::with_capacity(radial.len() * na);
            for (rho, wr) in radial {
                for k in 0..na {
                    let a = dphi * (k as f64 + 0.5);
                    out.push((vec![rho * a.cos(), rho * a.sin()], wr * rho * dphi));
                }
            }
            out
        }
    }
}

/// Geometric panels `[r_max / 2^{k+1}, r_max / 2^k]` down to `r_min`,
/// followed by the apex panel, with extra breaks at `extra`.
fn radial_rule(cfg: &QuadratureConfig, extra: &[f64]) -> Vec<(f64, f64)> {
    let mut breaks = vec![cfg.r_max];
    let mut b = cfg.r_max;
    while b > cfg.r_min {
        b *= 0.5;
        breaks.push(b);
    }
    breaks.push(0.0);
    breaks.extend(extra.iter().copied().filter(|&v| v > 0.0 && v < cfg.r_max));
    breaks.sort_by(f64::total_cmp);
    breaks.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * cfg.r_max);
    composite_rule(&breaks, cfg.radial_order)
}

/// Columns `2..d1` of the Householder reflection that maps `e1` to `θ`: an
/// orthonormal basis of `θ^⊥`.
fn householder_frame(theta: &[f64]) -> Vec<Vec<f64>> {
    let d1 = theta.len();
    let mut v: Vec<f64> = theta.iter().map(|x| -x).collect();
    v[0] += 1.0;
    let vv: f64 = v.iter().map(|x| x * x).sum();
    (1..d1)
        .map(|j| {
            let mut col = vec![0.0; d1];
            col[j] = 1.0;
            if vv > 1e-30 {
                let s = 2.0 * v[j] / vv;
                col.iter_mut().zip(&v).for_each(|(c, vi)| *c -= s * vi);
            }
            col
        })
        .collect()
}

/// `I(t)` for an arbitrary integrand `f` on `R^{2 d1}`.
pub fn i_x_projection_fn<F>(
    f: &F,
    d1: usize,
    t: f64,
    cfg: &QuadratureConfig,
    hints: &IntegrandHints,
) -> Result<f64>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    check_d1(d1)?;
    cfg.validate()?;
    if !t.is_finite() {
        return arg("t must be finite");
    }
    let value = i_core(f, d1, t, cfg, hints);
    if let Some(tol) = cfg.tolerance {
        let fine = i_core(f, d1, t, &cfg.refined(), hints);
        if (fine - value).abs() > 10.0 * tol {
            return Err(QcError::Accuracy(format!(
                "quadrature refinement changed I({t}) by {:e} (> 10 x {tol:e})",
                (fine - value).abs()
            )));
        }
    }
    Ok(value)
}

fn i_core<F>(f: &F, d1: usize, t: f64, cfg: &QuadratureConfig, hints: &IntegrandHints) -> f64
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let radial = radial_rule(cfg, &hints.x_breaks);
    let center = hints.y_center.as_deref();
    let sphere: Vec<(Vec<f64>, f64, Vec<Vec<f64>>, Vec<f64>)> = sphere_rule(d1, cfg.angular_order)
        .into_iter()
        .map(|(th, w)| {
            let frame = householder_frame(&th);
            // Coordinates of the projected centre in the fiber frame.
            let offset = match center {
                Some(c) => frame.iter().map(|col| col.iter().zip(c).map(|(a, b)| a * b).sum()).collect(),
                None => vec![0.0; d1 - 1],
            };
            (th, w, frame, offset)
        })
        .collect();
    let use_y_breaks = center.is_none() && !hints.y_breaks.is_empty();
    let default_fiber = fiber_rule(d1, cfg, &[]);
    let parts: Vec<NeumaierSum> = radial
        .par_iter()
        .map(|&(r, wr)| {
            let mut acc = NeumaierSum::new();
            let mut z = vec![0.0; 2 * d1];
            let jac = wr * r.powi(d1 as i32 - 2);
            let shift = t / r;
            let local;
            let fiber = if use_y_breaks {
                let rho: Vec<f64> = hints
                    .y_breaks
                    .iter()
                    .filter(|&&b| b > shift.abs())
                    .map(|&b| (b * b - shift * shift).sqrt())
                    .collect();
                local = fiber_rule(d1, cfg, &rho);
                &local
            } else {
                &default_fiber
            };
            for (theta, wt, frame, offset) in &sphere {
                let mut inner = NeumaierSum::new();
                for (v, wv) in fiber {
                    for i in 0..d1 {
                        z[i] = r * theta[i];
                        let mut y = shift * theta[i];
                        for ((vj, oj), col) in v.iter().zip(offset).zip(frame) {
                            y += (vj + oj) * col[i];
                        }
                        z[d1 + i] = y;
                    }
                    let val = f(&z);
                    if val != 0.0 {
                        inner.add(wv * val);
                    }
                }
                acc.add(jac * wt * inner.value());
            }
            acc
        })
        .collect();
    merge_ordered(&parts).value()
}

/// `I(t; w)` by the disintegration over the `x`-projection.
pub fn i_x_projection(w: &WeightFunction, t: f64, cfg: &QuadratureConfig) -> Result<f64> {
    let hints = IntegrandHints::for_weight(w, false);
    i_x_projection_fn(&|z: &[f64]| w.value(z), w.d1(), t, cfg, &hints)
}

/// `I(t; w)` by the disintegration over the `y`-projection: the same
/// quadrature applied to `(x, y) ↦ w(y, x)`.
pub fn i_y_projection(w: &WeightFunction, t: f64, cfg: &QuadratureConfig) -> Result<f64> {
    let d1 = w.d1();
    let swapped = |z: &[f64]| {
        let mut s = [0.0f64; 8];
        let s = &mut s[..2 * d1];
        s[..d1].copy_from_slice(&z[d1..]);
        s[d1..].copy_from_slice(&z[..d1]);
        w.value(s)
    };
    check_d1(d1)?;
    i_x_projection_fn(&swapped, d1, t, cfg, &IntegrandHints::for_weight(w, true))
}

/// `σ_∞(w; F0, m) = I(m; w)`.
pub fn sigma_infty(w: &WeightFunction, m: f64, cfg: &QuadratureConfig) -> Result<f64> {
    i_x_projection(w, m, cfg)
}

/// `σ_∞` together with the difference to the next refinement level.
pub fn sigma_infty_with_error(w: &WeightFunction, m: f64, cfg: &QuadratureConfig) -> Result<(f64, f64)> {
    let coarse = QuadratureConfig { tolerance: None, ..cfg.clone() };
    let v = i_x_projection(w, m, &coarse)?;
    let fine = i_x_projection(w, m, &coarse.refined())?;
    if let Some(tol) = cfg.tolerance {
        if (fine - v).abs() > 10.0 * tol {
            return Err(QcError::Accuracy(format!(
                "quadrature refinement changed sigma_infty by {:e} (> 10 x {tol:e})",
                (fine - v).abs()
            )));
        }
    }
    Ok((v, (fine - v).abs()))
}

/// Closed form of `I(t)` for `exp(-a π |z|^2)`:
/// `(π/a) exp(-2π a |t|)` for `d1 = 2` and `4π |t| K_1(2π a |t|) / a`
/// (limit `2/a^2` at `t = 0`) for `d1 = 3`.
pub fn gaussian_closed_form(a: f64, d1: usize, t: f64) -> Result<f64> {
    if !(a > 0.0) {
        return arg("Gaussian parameter must be positive");
    }
    let s = t.abs();
    match d1 {
        2 => Ok(PI / a * (-2.0 * PI * a * s).exp()),
        3 if s == 0.0 => Ok(2.0 / (a * a)),
        3 => Ok(4.0 * PI * s * bessel_k1(2.0 * PI * a * s) / a),
        _ => arg("closed form available for d1 = 2 and 3"),
    }
}

/// `d/dt I(t)` for `exp(-π |z|^2)`, `d1 = 3`: `-8π^2 t K_0(2π |t|)`.
pub fn gaussian_closed_form_derivative_d3(t: f64) -> f64 {
    -8.0 * PI * PI * t * bessel_k0(2.0 * PI * t.abs())
}

/// Central finite difference of order `k` of `I(·; w)` at `t`.
pub fn i_derivative_fd(w: &WeightFunction, t: f64, k: u32, step: f64, cfg: &QuadratureConfig) -> Result<f64> {
    if t == 0.0 {
        return arg("derivatives are probed away from t = 0");
    }
    if !(step > 0.0 && step <= t.abs() / 4.0) {
        return arg(format!("step must lie in (0, |t|/4], got {step}"));
    }
    let i = |s: f64| i_x_projection(w, s, cfg);
    let h = step;
    match k {
        1 => Ok((i(t + h)? - i(t - h)?) / (2.0 * h)),
        2 => Ok((i(t + h)? - 2.0 * i(t)? + i(t - h)?) / (h * h)),
        3 => Ok((i(t + 2.0 * h)? - 2.0 * i(t + h)? + 2.0 * i(t - h)? - i(t - 2.0 * h)?) / (2.0 * h * h * h)),
        _ => arg(format!("derivative order must be 1, 2 or 3, got {k}")),
    }
}

/// `I(t_i; w)` for every `t_i`, evaluated in parallel.
pub fn i_grid(w: &WeightFunction, t_values: &[f64], cfg: &QuadratureConfig) -> Result<IFunctionGrid> {
    if t_values.windows(2).any(|p| !(p[0] < p[1])) {
        return arg("t values must be strictly increasing");
    }
    let i_values = t_values
        .par_iter()
        .map(|&t| i_x_projection(w, t, cfg))
        .collect::<Result<Vec<f64>>>()?;
    Ok(IFunctionGrid { t_values: t_values.to_vec(), i_values, config: cfg.clone() })
}

/// Half-width `X = min(1, x^{0.95})` of the window the `I` grid must cover
/// at `x`.
pub fn smearing_half_width(x: f64) -> f64 {
    x.powf(0.95).min(1.0)
}

/// Uniform grid on `[m - 1, m + 1]` fine enough for [`smeared_sigma`] at
/// every `x' >= x`.
pub fn smearing_grid(w: &WeightFunction, m: f64, x: f64, cfg: &QuadratureConfig) -> Result<IFunctionGrid> {
    if !(x > 0.0) {
        return arg("x must be positive");
    }
    let n = (2.0 / (x / 16.0)).ceil() as usize + 1;
    let ts: Vec<f64> = (0..n).map(|i| m - 1.0 + 2.0 * i as f64 / (n - 1) as f64).collect();
    i_grid(w, &ts, cfg)
}

/// `∫ I(m + t) h(x, t) dt` over the largest interval symmetric about `m`
/// that `grid` covers, from the cubic interpolant of the grid values.
///
/// The grid must cover `[m - X, m + X]`, `X` from [`smearing_half_width`],
/// with step at most `x/16`.
pub fn smeared_sigma(m: f64, x: f64, grid: &IFunctionGrid) -> Result<f64> {
    let sampled = grid.to_sampled()?;
    let big_x = smearing_half_width(x);
    let slack = 1e-9 * sampled.step;
    if sampled.start > m - big_x + slack || sampled.end() < m + big_x - slack {
        return arg(format!(
            "the I grid [{}, {}] does not cover [m - {big_x}, m + {big_x}]",
            sampled.start,
            sampled.end()
        ));
    }
    let shifted = SampledFunction::new(sampled.start - m, sampled.step, sampled.values.clone())?;
    smear(&shifted, x)
}

/// Both sides of the co-area identity
/// `∫ w(z) φ(F0(z)) dz = ∫ φ(t) I(t; w) dt`.
///
/// The left side integrates in polar coordinates in `x` and in `y`
/// separately; the right side applies Gauss-Legendre panels to the support
/// of `φ`, split at `0`, and returns the `I` values it used.
pub fn coarea_check(
    w: &WeightFunction,
    phi: &SampledFunction,
    cfg: &QuadratureConfig,
) -> Result<(f64, f64, IFunctionGrid)> {
    let d1 = w.d1();
    check_d1(d1)?;
    cfg.validate()?;
    if d1 == 3 && !w.is_bi_radial() {
        return Err(QcError::Capability(
            "the co-area check in d1 = 3 needs a bi-radial weight".into(),
        ));
    }
    // Left side.
    let r = cfg.r_max;
    let panels = 2 * cfg.plane_panels;
    let breaks: Vec<f64> = (0..=panels).map(|i| r * i as f64 / panels as f64).collect();
    let radial = composite_rule(&breaks, cfg.radial_order.max(24));
    let sphere_area = if d1 == 2 { 2.0 * PI } else { 4.0 * PI };
    let x_sphere = if w.is_bi_radial() {
        let mut e1 = vec![0.0; d1];
        e1[0] = 1.0;
        vec![(e1, sphere_area)]
    } else {
        sphere_rule(d1, cfg.angular_order)
    };
    let y_sphere = sphere_rule(d1, cfg.angular_order.max(48));
    let parts: Vec<NeumaierSum> = radial
        .par_iter()
        .map(|&(rx, wrx)| {
            let mut acc = NeumaierSum::new();
            let mut z = vec![0.0; 2 * d1];
            for (tx, wtx) in &x_sphere {
                for &(ry, wry) in &radial {
                    let jac = wrx * wry * (rx * ry).powi(d1 as i32 - 1) * wtx;
                    for (ty, wty) in &y_sphere {
                        let mut f0 = 0.0;
                        for i in 0..d1 {
                            z[i] = rx * tx[i];
                            z[d1 + i] = ry * ty[i];
                            f0 += z[i] * z[d1 + i];
                        }
                        if f0 < phi.start || f0 > phi.end() {
                            continue;
                        }
                        let v = w.value(&z);
                        if v != 0.0 {
                            acc.add(jac * wty * v * phi.eval(f0));
                        }
                    }
                }
            }
            acc
        })
        .collect();
    let lhs = merge_ordered(&parts).value();
    // Right side.
    let (a, b) = (phi.start, phi.end());
    let mut cuts = vec![a];
    if a < 0.0 && b > 0.0 {
        cuts.push(0.0);
    }
    cuts.push(b);
    let mut tbreaks = vec![a];
    for seg in cuts.windows(2) {
        for i in 1..=8 {
            tbreaks.push(seg[0] + (seg[1] - seg[0]) * i as f64 / 8.0);
        }
    }
    let rule = composite_rule(&tbreaks, 16);
    let ts: Vec<f64> = rule.iter().map(|&(t, _)| t).collect();
    let grid = i_grid(w, &ts, cfg)?;
    let rhs: NeumaierSum = rule
        .iter()
        .zip(&grid.i_values)
        .map(|(&(t, wt), &iv)| wt * phi.eval(t) * iv)
        .collect();
    Ok((lhs, rhs.value(), grid))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gauss(d1: usize) -> WeightFunction {
        WeightFunction::gaussian(1.0, d1).unwrap()
    }

    #[test]
    fn zero_weight_gives_zero() {
        let w = WeightFunction::zero(3);
        let cfg = QuadratureConfig::for_weight(&gauss(3));
        assert_eq!(i_x_projection(&w, 0.5, &cfg).unwrap(), 0.0);
        assert_eq!(i_y_projection(&w, 0.5, &cfg).unwrap(), 0.0);
    }

    #[test]
    fn gaussian_d3_matches_closed_form() {
        let w = gauss(3);
        let cfg = QuadratureConfig::for_weight(&w);
        for &t in &[0.0, 1e-3, 0.1, 0.5, 1.0, -1.0, 2.0] {
            let v = i_x_projection(&w, t, &cfg).unwrap();
            let e = gaussian_closed_form(1.0, 3, t).unwrap();
            assert!((v - e).abs() < 1e-6, "t={t}: {v} vs {e}");
        }
        assert!((gaussian_closed_form(1.0, 3, 1.0).unwrap() - 0.012_402_958_3).abs() < 1e-9);
    }

    #[test]
    fn gaussian_d2_matches_closed_form() {
        for a in [1.0, 0.5] {
            let w = WeightFunction::gaussian(a, 2).unwrap();
            let cfg = QuadratureConfig::for_weight(&w);
            for &t in &[0.0, 0.3, -0.7, 1.5] {
                let v = i_x_projection(&w, t, &cfg).unwrap();
                let e = gaussian_closed_form(a, 2, t).unwrap();
                assert!((v - e).abs() < 1e-6 * e.max(1.0), "a={a} t={t}: {v} vs {e}");
            }
        }
    }

    #[test]
    fn capability_and_argument_errors() {
        let cfg = QuadratureConfig::for_weight(&gauss(3));
        assert!(matches!(i_x_projection(&gauss(4), 0.0, &cfg), Err(QcError::Capability(_))));
        assert!(matches!(i_x_projection(&gauss(1), 0.5, &cfg), Err(QcError::Argument(_))));
        let bad = QuadratureConfig { radial_order: 2, ..cfg.clone() };
        assert!(i_x_projection(&gauss(3), 0.0, &bad).is_err());
        assert!(i_derivative_fd(&gauss(3), 1.0, 1, 0.5, &cfg).is_err());
        assert!(i_derivative_fd(&gauss(3), 0.0, 1, 0.01, &cfg).is_err());
        assert!(i_derivative_fd(&gauss(3), 1.0, 4, 0.01, &cfg).is_err());
    }

    #[test]
    fn derivative_matches_closed_form() {
        let w = gauss(3);
        let cfg = QuadratureConfig::for_weight(&w);
        let v = i_derivative_fd(&w, 1.0, 1, 1e-3, &cfg).unwrap();
        let e = gaussian_closed_form_derivative_d3(1.0);
        assert!((v - e).abs() < 1e-4, "{v} vs {e}");
    }

    #[test]
    fn refinement_check_passes_for_gaussian() {
        let w = gauss(3);
        let cfg = QuadratureConfig::for_weight(&w).with_tolerance(1e-8);
        let (v, err) = sigma_infty_with_error(&w, 0.0, &cfg).unwrap();
        assert!((v - 2.0).abs() < 1e-8 && err < 1e-8);
        let coarse = QuadratureConfig {
            radial_order: 4,
            plane_order: 4,
            plane_panels: 1,
            ..cfg
        }
        .with_tolerance(1e-12);
        assert!(matches!(i_x_projection(&w, 0.5, &coarse), Err(QcError::Accuracy(_))));
    }

    #[test]
    fn householder_frame_is_orthonormal() {
        for th in sphere_rule(3, 5) {
            let th = th.0;
            let f = householder_frame(&th);
            let dot = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
            for (i, a) in f.iter().enumerate() {
                assert!(dot(a, &th).abs() < 1e-14);
                assert!((dot(a, a) - 1.0).abs() < 1e-14);
                for b in &f[i + 1..] {
                    assert!(dot(a, b).abs() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn grid_must_be_uniform_and_cover() {
        let w = gauss(3);
        let cfg = QuadratureConfig::for_weight(&w);
        let g = i_grid(&w, &[0.0, 0.1, 0.3, 0.4], &cfg).unwrap();
        assert!(g.to_sampled().is_err());
        let g = i_grid(&w, &[-0.2, -0.1, 0.0, 0.1, 0.2], &cfg).unwrap();
        assert!(smeared_sigma(0.0, 0.1, &g).is_err());
        assert!(i_grid(&w, &[0.1, 0.0], &cfg).is_err());
    }

    #[test]
    fn smeared_sigma_of_zero_weight_and_window() {
        let z = WeightFunction::zero(2);
        let cfg = QuadratureConfig::for_weight(&z);
        let g = smearing_grid(&z, 0.0, 0.2, &cfg).unwrap();
        assert_eq!(smeared_sigma(0.0, 0.2, &g).unwrap(), 0.0);
        assert!(smeared_sigma(0.0, 0.1, &g).is_err());
        assert!(smeared_sigma(0.9, 0.2, &g).is_err());
        assert!(smearing_grid(&z, 0.0, 0.0, &cfg).is_err());
    }

    #[test]
    fn coarea_identity_gaussian_d2_and_d3() {
        for d1 in [2, 3] {
            let w = gauss(d1);
            let cfg = QuadratureConfig::for_weight(&w);
            let phi = SampledFunction::tabulate(-1.0, 1.0, 2001, crate::delta_kernel::w0).unwrap();
            let (lhs, rhs, grid) = coarea_check(&w, &phi, &cfg).unwrap();
            assert!((lhs - rhs).abs() <= 1e-6 * rhs.abs(), "d1={d1}: {lhs} vs {rhs}");
            assert!(!grid.t_values.is_empty());
        }
        let a = WeightFunction::shifted_gaussian(1.0, vec![0.1, 0.0, 0.0, 0.0, 0.0, 0.0]).unwrap();
        let phi = SampledFunction::tabulate(-1.0, 1.0, 101, crate::delta_kernel::w0).unwrap();
        assert!(matches!(
            coarea_check(&a, &phi, &QuadratureConfig::for_weight(&a)),
            Err(QcError::Capability(_))
        ));
    }
}

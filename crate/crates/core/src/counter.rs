//! The weighted lattice count
//!
//! ```text
//! N_L(w; F0, m) = sum_{z ∈ Σ_m ∩ L^{-1} Z^d} w(z) = sum_{u ∈ Z^d, u_x · u_y = t} w(u / L),   t = m L^2,
//! ```
//!
//! enumerated exactly inside the ball `|u| <= R L`.

use rayon::prelude::*;

use crate::error::{arg, QcError, Result};
use crate::forms::LatticeSpec;
use crate::lattice::{for_each_coset_point, solve_hyperplane_lattice};
use crate::summation::{merge_ordered, NeumaierSum};
use crate::weights::Weight;

/// Default cap on the predicted number of visited lattice points.
pub const DEFAULT_BUDGET: f64 = 5e8;
/// Cap on the work of [`brute_force_n_l`].
pub const BRUTE_FORCE_MAX_WORK: f64 = 1e9;
/// Fraction of the truncation radius used for the tail comparison.
const INNER_FRACTION: f64 = 0.8;

#[derive(Debug, Clone, PartialEq)]
pub struct CountResult {
    pub value: f64,
    pub lattice_points_visited: u64,
    /// Truncation radius `R` in `z`-units.
    pub truncation_radius: f64,
    /// `|value(R) - value(0.8 R)|` plus the decay envelope beyond `R`.
    pub tail_estimate: f64,
}

/// Options of [`enumerate_n_l`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CountOptions {
    pub eps: f64,
    pub budget: f64,
    /// Overrides the truncation radius (in `z`-units).
    pub radius: Option<f64>,
}

impl CountOptions {
    pub fn new(eps: f64) -> Self {
        Self { eps, budget: DEFAULT_BUDGET, radius: None }
    }
}

/// Lattice points in the `n`-ball of radius `r` (volume estimate).
fn ball_volume(n: usize, r: f64) -> f64 {
    let n_f = n as f64;
    std::f64::consts::PI.powf(n_f / 2.0) / gamma_half_integer(n_f / 2.0 + 1.0) * r.powf(n_f)
}

fn gamma_half_integer(x: f64) -> f64 {
    // x is a positive multiple of 1/2.
    if (x - x.round()).abs() < 1e-12 {
        (1..x.round() as u64).map(|k| k as f64).product()
    } else {
        let mut g = std::f64::consts::PI.sqrt();
        let mut y = 0.5;
        while y < x - 1e-12 {
            g *= y;
            y += 1.0;
        }
        g
    }
}

/// Predicted number of visited points for ball radius `rl = R L` in
/// `u`-space: the `u_x` ball plus the fibers, whose lattices have covolume
/// about `|u_x|`.
pub fn predicted_visits(d1: usize, rl: f64) -> f64 {
    if d1 == 1 {
        return 4.0 * rl + 3.0;
    }
    let shell = ball_volume(d1, 1.0) * d1 as f64;
    let fiber = ball_volume(d1 - 1, 1.0);
    ball_volume(d1, rl + 1.0) + 2.0 * shell * fiber * rl.powi(2 * d1 as i32 - 2) / (d1 as f64 - 1.0)
}

/// Largest `L` whose predicted visit count stays within `budget`.
pub fn max_feasible_l(d1: usize, radius: f64, budget: f64) -> f64 {
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    while predicted_visits(d1, radius * hi) <= budget {
        hi *= 2.0;
        if hi > 1e9 {
            return hi;
        }
    }
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if predicted_visits(d1, radius * mid) <= budget {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Calls `visit` for every `v ∈ Z^n` with `|v|^2 <= bound`, `v[0] = first`,
/// in lexicographic order.
fn for_each_in_ball_with_first<F: FnMut(&[i64])>(n: usize, first: i64, bound: i128, visit: &mut F) {
    let mut v = vec![0i64; n];
    v[0] = first;
    let rest = bound - first as i128 * first as i128;
    if rest < 0 {
        return;
    }
    fn rec<F: FnMut(&[i64])>(v: &mut [i64], i: usize, rest: i128, visit: &mut F) {
        if i == v.len() {
            visit(v);
            return;
        }
        let m = isqrt(rest);
        for c in -m..=m {
            v[i] = c;
            rec(v, i + 1, rest - c as i128 * c as i128, visit);
        }
    }
    rec(&mut v, 1, rest, visit);
}

fn isqrt(n: i128) -> i64 {
    if n <= 0 {
        return 0;
    }
    let mut r = (n as f64).sqrt() as i128;
    while r * r > n {
        r -= 1;
    }
    while (r + 1) * (r + 1) <= n {
        r += 1;
    }
    r as i64
}

struct Partial {
    full: NeumaierSum,
    inner: NeumaierSum,
    visited: u64,
}

/// Exact weighted count inside `|u| <= R L`.
///
/// `R = decay_radius(w, eps, d)` unless overridden. The `u_x = 0` stratum
/// contributes only for `t = 0` and is summed directly over the `y`-ball.
pub fn enumerate_n_l<W: Weight>(w: &W, spec: &LatticeSpec, opts: &CountOptions) -> Result<CountResult> {
    enumerate_ordered(w, spec, opts, false)
}

fn enumerate_ordered<W: Weight>(
    w: &W,
    spec: &LatticeSpec,
    opts: &CountOptions,
    reverse: bool,
) -> Result<CountResult> {
    let d = w.dim();
    if d % 2 != 0 || d == 0 {
        return arg("the weight dimension must be even and positive");
    }
    if !(opts.eps > 0.0) {
        return arg("eps must be positive");
    }
    let d1 = d / 2;
    let l = spec.l();
    let t = spec.t();
    let n_decay = d as u32;
    let radius = match opts.radius {
        Some(r) if r > 0.0 => r,
        Some(_) => return arg("radius must be positive"),
        None => w.decay_radius(opts.eps, n_decay),
    };
    let rl = radius * l;
    let predicted = predicted_visits(d1, rl);
    if predicted > opts.budget {
        return Err(QcError::Budget {
            predicted,
            budget: opts.budget,
            max_l: max_feasible_l(d1, radius, opts.budget),
        });
    }
    let bound = (rl * rl).floor() as i128;
    let inner_bound = ((INNER_FRACTION * rl).powi(2)).floor() as i128;
    let m = isqrt(bound);

    let mut firsts: Vec<i64> = (-m..=m).collect();
    if reverse {
        firsts.reverse();
    }
    let parts: Vec<Result<Partial>> = firsts
        .par_iter()
        .map(|&first| {
            let mut part = Partial { full: NeumaierSum::new(), inner: NeumaierSum::new(), visited: 0 };
            let mut z = vec![0.0; d];
            let mut err = None;
            for_each_in_ball_with_first(d1, first, bound, &mut |ux: &[i64]| {
                if err.is_some() {
                    return;
                }
                let nx: i128 = ux.iter().map(|&v| v as i128 * v as i128).sum();
                if nx == 0 {
                    return;
                }
                let sol = match solve_hyperplane_lattice(ux, t) {
                    Ok(Some(s)) => s,
                    Ok(None) => return,
                    Err(e) => {
                        err = Some(e);
                        return;
                    }
                };
                for (zi, &v) in z.iter_mut().zip(ux) {
                    *zi = v as f64 / l;
                }
                for_each_coset_point(&sol, bound - nx, |uy| {
                    for (zi, &v) in z[d1..].iter_mut().zip(uy) {
                        *zi = v as f64 / l;
                    }
                    let val = w.value(&z);
                    part.visited += 1;
                    part.full.add(val);
                    let ny: i128 = uy.iter().map(|&v| v as i128 * v as i128).sum();
                    if nx + ny <= inner_bound {
                        part.inner.add(val);
                    }
                });
            });
            match err {
                Some(e) => Err(e),
                None => Ok(part),
            }
        })
        .collect();
    let mut fulls = Vec::with_capacity(parts.len() + 1);
    let mut inners = Vec::with_capacity(parts.len() + 1);
    let mut visited = 0u64;
    for p in parts {
        let p = p?;
        fulls.push(p.full);
        inners.push(p.inner);
        visited += p.visited;
    }
    if t == 0 {
        // The stratum u_x = 0: every u_y in the ball solves the equation.
        let mut part = Partial { full: NeumaierSum::new(), inner: NeumaierSum::new(), visited: 0 };
        let mut z = vec![0.0; d];
        for first in -m..=m {
            for_each_in_ball_with_first(d1, first, bound, &mut |uy: &[i64]| {
                for (zi, &v) in z[d1..].iter_mut().zip(uy) {
                    *zi = v as f64 / l;
                }
                let val = w.value(&z);
                part.visited += 1;
                part.full.add(val);
                let ny: i128 = uy.iter().map(|&v| v as i128 * v as i128).sum();
                if ny <= inner_bound {
                    part.inner.add(val);
                }
            });
        }
        fulls.push(part.full);
        inners.push(part.inner);
        visited += part.visited;
    }
    let value = merge_ordered(&fulls).value();
    let inner = merge_ordered(&inners).value();
    // Points beyond R: about (visited / R^e) e s^{e-1} ds of them at radius
    // s, each weighted by at most eps s^{-n}.
    let e = (d as f64 - 2.0).max(1.0);
    let n = n_decay as f64;
    let envelope = opts.eps * visited as f64 * e / ((n - e) * radius.powf(n));
    Ok(CountResult {
        value,
        lattice_points_visited: visited,
        truncation_radius: radius,
        tail_estimate: (value - inner).abs() + envelope,
    })
}

/// Literal scan of the box `|u|_∞ <= box_radius`: every `u_x` in the box,
/// every choice of the free entries of `u_y`, and the entry of `u_y` paired
/// with the last nonzero entry of `u_x` solved for.
pub fn brute_force_n_l<W: Weight>(w: &W, spec: &LatticeSpec, box_radius: i64) -> Result<f64> {
    let d = w.dim();
    if d % 2 != 0 || d == 0 {
        return arg("the weight dimension must be even and positive");
    }
    if box_radius < 0 {
        return arg("box radius must be non-negative");
    }
    let d1 = d / 2;
    let side = (2 * box_radius + 1) as f64;
    let work = side.powi(d as i32 - 1);
    if work > BRUTE_FORCE_MAX_WORK {
        return Err(QcError::Capability(format!(
            "brute force needs {work:e} steps (cap {BRUTE_FORCE_MAX_WORK:e})"
        )));
    }
    let (l, t) = (spec.l(), spec.t() as i128);
    let b = box_radius;
    let mut acc = NeumaierSum::new();
    let mut z = vec![0.0; d];
    let mut ux = vec![-b; d1];
    let mut uy = vec![0i64; d1];
    loop {
        let pivot = ux.iter().rposition(|&v| v != 0);
        if pivot.is_some() || t == 0 {
            let free: Vec<usize> = (0..d1).filter(|&i| Some(i) != pivot).collect();
            for &i in &free {
                uy[i] = -b;
            }
            loop {
                let ok = match pivot {
                    None => true,
                    Some(j) => {
                        let rest: i128 = free.iter().map(|&i| ux[i] as i128 * uy[i] as i128).sum();
                        let num = t - rest;
                        let den = ux[j] as i128;
                        if num % den == 0 && (num / den).abs() <= b as i128 {
                            uy[j] = (num / den) as i64;
                            true
                        } else {
                            false
                        }
                    }
                };
                if ok {
                    for (zi, &v) in z.iter_mut().zip(ux.iter().chain(&uy)) {
                        *zi = v as f64 / l;
                    }
                    acc.add(w.value(&z));
                }
                if !advance(&mut uy, &free, b) {
                    break;
                }
            }
        }
        let all: Vec<usize> = (0..d1).collect();
        if !advance(&mut ux, &all, b) {
            break;
        }
    }
    Ok(acc.value())
}

/// Odometer step over the entries `idx` of `v` in `[-b, b]`.
fn advance(v: &mut [i64], idx: &[usize], b: i64) -> bool {
    for &i in idx {
        v[i] += 1;
        if v[i] <= b {
            return true;
        }
        v[i] = -b;
    }
    false
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::weights::{ScaledWeight, WeightFunction};

    fn theta() -> f64 {
        (-50i64..=50).map(|n| (-std::f64::consts::PI * (n * n) as f64).exp()).sum()
    }

    #[test]
    fn zero_weight_counts_zero() {
        let w = WeightFunction::zero(3);
        let spec = LatticeSpec::new(2.0, 0.0).unwrap();
        let r = enumerate_n_l(&w, &spec, &CountOptions { radius: Some(1.0), ..CountOptions::new(1e-9) }).unwrap();
        assert_eq!(r.value, 0.0);
        assert_eq!(brute_force_n_l(&w, &spec, 3).unwrap(), 0.0);
    }

    #[test]
    fn theta_oracle_d1_equals_1() {
        let w = WeightFunction::gaussian(1.0, 1).unwrap();
        let spec = LatticeSpec::new(1.0, 0.0).unwrap();
        let r = enumerate_n_l(&w, &spec, &CountOptions::new(1e-16)).unwrap();
        let expect = 2.0 * theta() - 1.0;
        assert!((expect - 1.172_869_622_4).abs() < 1e-9);
        assert!((r.value - expect).abs() < 1e-12, "{} vs {expect}", r.value);
    }

    #[test]
    fn enumeration_matches_brute_force() {
        let cases = [(3usize, 2.0f64, 0i64), (2, 1.0, 1), (2, 3.0, 1), (3, 1.0, 1), (2, 2.0, 0), (3, 2.0, 4)];
        for &(d1, l, t) in &cases {
            let w = WeightFunction::gaussian(1.0, d1).unwrap();
            let spec = LatticeSpec::from_shift(l, t).unwrap();
            let e = enumerate_n_l(&w, &spec, &CountOptions::new(1e-15)).unwrap();
            let b = (e.truncation_radius * l).ceil() as i64 + 1;
            let bf = brute_force_n_l(&w, &spec, b).unwrap();
            assert!((e.value - bf).abs() < 1e-9, "d1={d1} L={l} t={t}: {} vs {bf}", e.value);
        }
    }

    #[test]
    fn scaling_identity() {
        let w = WeightFunction::gaussian(1.0, 2).unwrap();
        for l in [2.0, 3.0] {
            let spec = LatticeSpec::from_shift(l, 1).unwrap();
            let a = enumerate_n_l(&w, &spec, &CountOptions::new(1e-14)).unwrap();
            let wl = ScaledWeight::new(&w, l);
            let unit = LatticeSpec::from_shift(1.0, 1).unwrap();
            let b = enumerate_n_l(&wl, &unit, &CountOptions::new(1e-14)).unwrap();
            assert!((a.value - b.value).abs() < 1e-12 * a.value.max(1.0));
        }
    }

    #[test]
    fn budget_error_reports_feasible_l() {
        let w = WeightFunction::gaussian(1.0, 3).unwrap();
        let spec = LatticeSpec::new(100.0, 0.0).unwrap();
        let opts = CountOptions { budget: 1e6, ..CountOptions::new(1e-12) };
        match enumerate_n_l(&w, &spec, &opts) {
            Err(QcError::Budget { max_l, .. }) => {
                assert!(max_l > 1.0 && max_l < 100.0);
                let ok = LatticeSpec::new(max_l.floor(), 0.0).unwrap();
                assert!(enumerate_n_l(&w, &ok, &opts).is_ok());
            }
            other => panic!("expected a budget error, got {other:?}"),
        }
    }

    #[test]
    fn tail_estimate_behaviour() {
        let w = WeightFunction::gaussian(1.0, 2).unwrap();
        let spec = LatticeSpec::new(2.0, 0.0).unwrap();
        let coarse = enumerate_n_l(&w, &spec, &CountOptions::new(1e-4)).unwrap();
        let fine = enumerate_n_l(&w, &spec, &CountOptions::new(1e-8)).unwrap();
        assert!(fine.tail_estimate < coarse.tail_estimate);
        let grown = enumerate_n_l(
            &w,
            &spec,
            &CountOptions { radius: Some(1.25 * coarse.truncation_radius), ..CountOptions::new(1e-4) },
        )
        .unwrap();
        assert!((grown.value - coarse.value).abs() <= 2.0 * coarse.tail_estimate);
    }

    #[test]
    fn reversed_shell_order_gives_same_value() {
        for (d1, t) in [(3usize, 0i64), (2, 3)] {
            let w = WeightFunction::gaussian(1.0, d1).unwrap();
            let spec = LatticeSpec::from_shift(3.0, t).unwrap();
            let opts = CountOptions::new(1e-12);
            let a = enumerate_ordered(&w, &spec, &opts, false).unwrap();
            let b = enumerate_ordered(&w, &spec, &opts, true).unwrap();
            assert!((a.value - b.value).abs() <= 1e-13 * a.value);
            assert_eq!(a.lattice_points_visited, b.lattice_points_visited);
            let again = enumerate_ordered(&w, &spec, &opts, false).unwrap();
            assert_eq!(a.value.to_bits(), again.value.to_bits());
        }
    }

    #[test]
    fn brute_force_box_twelve_d1_3() {
        let w = WeightFunction::gaussian(1.0, 3).unwrap();
        let spec = LatticeSpec::new(2.0, 0.0).unwrap();
        let e = enumerate_n_l(&w, &spec, &CountOptions::new(1e-15)).unwrap();
        let bf = brute_force_n_l(&w, &spec, 12).unwrap();
        assert!((e.value - bf).abs() < 1e-9, "{} vs {bf}", e.value);
    }

    struct BoxIndicator {
        d: usize,
        p: f64,
    }

    impl Weight for BoxIndicator {
        fn dim(&self) -> usize {
            self.d
        }
        fn value(&self, z: &[f64]) -> f64 {
            if z.iter().all(|&v| v > -0.5 && v < self.p - 0.5) {
                1.0
            } else {
                0.0
            }
        }
        fn decay_radius(&self, _eps: f64, _n: u32) -> f64 {
            self.p * (self.d as f64).sqrt()
        }
    }

    #[test]
    fn residue_count_mod_p() {
        for (d1, p) in [(2usize, 3i64), (3, 2), (2, 5)] {
            let w = BoxIndicator { d: 2 * d1, p: p as f64 };
            let max_t = d1 as i64 * (p - 1) * (p - 1);
            let mut total = 0.0;
            for t in (0..=max_t).step_by(p as usize) {
                let spec = LatticeSpec::from_shift(1.0, t).unwrap();
                total += enumerate_n_l(&w, &spec, &CountOptions::new(1e-12)).unwrap().value;
            }
            let (p, d1) = (p as f64, d1 as i32);
            let expect = p.powi(2 * d1 - 1) + p.powi(d1) - p.powi(d1 - 1);
            assert_eq!(total, expect, "d1={d1} p={p}");
        }
    }
}

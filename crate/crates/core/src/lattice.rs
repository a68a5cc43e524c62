//! Integer solutions of `x · y = t` for fixed nonzero `x ∈ Z^n`: a
//! particular solution plus a reduced basis of the kernel lattice, and the
//! enumeration of the coset points inside a ball.

use crate::arith::ext_gcd;
use crate::error::{arg, Result};

/// `{y ∈ Z^n : x · y = t} = particular + span_Z(basis)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HyperplaneLatticeSolution {
    pub particular: Vec<i64>,
    pub basis: Vec<Vec<i64>>,
}

fn dot(a: &[i128], b: &[i128]) -> i128 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn to_i64(v: &[i128]) -> Vec<i64> {
    v.iter()
        .map(|&c| i64::try_from(c).expect("lattice coordinate exceeds 64 bits"))
        .collect()
}

/// Repeated pairwise size reduction `b_j -= round(<b_i, b_j> / <b_i, b_i>) b_i`
/// until no vector gets shorter; exact Lagrange reduction for two vectors.
fn pairwise_reduce(basis: &mut [Vec<i128>]) {
    let k = basis.len();
    loop {
        let mut changed = false;
        for i in 0..k {
            for j in 0..k {
                if i == j {
                    continue;
                }
                let nii = dot(&basis[i], &basis[i]);
                if nii == 0 {
                    continue;
                }
                let nij = dot(&basis[i], &basis[j]);
                let mu = (2 * nij + nii).div_euclid(2 * nii);
                if mu != 0 {
                    let bi = basis[i].clone();
                    basis[j].iter_mut().zip(&bi).for_each(|(a, b)| *a -= mu * b);
                    changed = true;
                }
            }
        }
        basis.sort_by_key(|b| dot(b, b));
        if !changed {
            break;
        }
    }
}

/// Solves `x · y = t` over the integers.
///
/// Column operations reduce the row `x` to `(g, 0, …, 0)` with
/// `g = gcd(x)`; the transformed unit vectors `2..n` span the kernel and
/// `(t/g)` times the first one solves the equation. Returns `Ok(None)` when
/// `g ∤ t`.
pub fn solve_hyperplane_lattice(x: &[i64], t: i64) -> Result<Option<HyperplaneLatticeSolution>> {
    let n = x.len();
    if n == 0 || x.iter().all(|&v| v == 0) {
        return arg("x must be a nonzero vector");
    }
    let mut a: Vec<i128> = x.iter().map(|&v| v as i128).collect();
    // Columns of the unimodular transform, stored as vectors.
    let mut cols: Vec<Vec<i128>> = (0..n)
        .map(|j| (0..n).map(|i| i128::from(i == j)).collect())
        .collect();
    // Move a nonzero entry to position 0.
    let first = a.iter().position(|&v| v != 0).expect("x is nonzero");
    a.swap(0, first);
    cols.swap(0, first);
    for j in 1..n {
        if a[j] == 0 {
            continue;
        }
        let (g, s, tt) = ext_gcd(a[0], a[j]);
        let (p, q) = (a[j] / g, a[0] / g);
        let c0: Vec<i128> = cols[0].iter().zip(&cols[j]).map(|(u, v)| s * u + tt * v).collect();
        let cj: Vec<i128> = cols[0].iter().zip(&cols[j]).map(|(u, v)| p * u - q * v).collect();
        cols[0] = c0;
        cols[j] = cj;
        a[0] = g;
        a[j] = 0;
    }
    let g = a[0];
    let (g, sign) = if g < 0 { (-g, -1) } else { (g, 1) };
    if (t as i128) % g != 0 {
        return Ok(None);
    }
    let scale = sign * (t as i128) / g;
    let mut basis: Vec<Vec<i128>> = cols.drain(1..).collect();
    pairwise_reduce(&mut basis);
    let mut particular: Vec<i128> = cols[0].iter().map(|&c| c * scale).collect();
    reduce_against(&mut particular, &basis);
    Ok(Some(HyperplaneLatticeSolution {
        particular: to_i64(&particular),
        basis: basis.iter().map(|b| to_i64(b)).collect(),
    }))
}

/// Shortens `v` by subtracting integer combinations of `basis`
/// (rounded Gram solve, repeated until stable).
fn reduce_against(v: &mut [i128], basis: &[Vec<i128>]) {
    if basis.is_empty() {
        return;
    }
    for _ in 0..64 {
        let coeffs = project_coefficients(
            &v.iter().map(|&c| c as f64).collect::<Vec<_>>(),
            &basis
                .iter()
                .map(|b| b.iter().map(|&c| c as f64).collect())
                .collect::<Vec<Vec<f64>>>(),
        );
        let mut changed = false;
        for (c, b) in coeffs.iter().zip(basis) {
            let k = c.round() as i128;
            if k != 0 {
                v.iter_mut().zip(b).for_each(|(a, bb)| *a -= k * bb);
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
}

/// Coefficients `c` minimising `|v - sum c_i b_i|` (normal equations).
fn project_coefficients(v: &[f64], basis: &[Vec<f64>]) -> Vec<f64> {
    let k = basis.len();
    let d = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>();
    let mut g: Vec<Vec<f64>> = (0..k).map(|i| (0..k).map(|j| d(&basis[i], &basis[j])).collect()).collect();
    let mut rhs: Vec<f64> = basis.iter().map(|b| d(b, v)).collect();
    // Gaussian elimination; the Gram matrix is positive definite.
    for i in 0..k {
        for r in i + 1..k {
            let f = g[r][i] / g[i][i];
            for c in i..k {
                g[r][c] -= f * g[i][c];
            }
            rhs[r] -= f * rhs[i];
        }
    }
    let mut out = vec![0.0; k];
    for i in (0..k).rev() {
        let s: f64 = (i + 1..k).map(|c| g[i][c] * out[c]).sum();
        out[i] = (rhs[i] - s) / g[i][i];
    }
    out
}

/// Enumerates `y = particular + B k` with `|y|^2 <= bound`, calling `visit`
/// on each (Fincke-Pohst with an inflated floating radius and an exact
/// integer check).
pub fn for_each_coset_point<F: FnMut(&[i64])>(sol: &HyperplaneLatticeSolution, bound: i128, mut visit: F) {
    if bound < 0 {
        return;
    }
    let n = sol.particular.len();
    let k = sol.basis.len();
    let norm_exact = |y: &[i64]| -> i128 { y.iter().map(|&v| v as i128 * v as i128).sum() };
    if k == 0 {
        if norm_exact(&sol.particular) <= bound {
            visit(&sol.particular);
        }
        return;
    }
    let b: Vec<Vec<f64>> = sol.basis.iter().map(|v| v.iter().map(|&c| c as f64).collect()).collect();
    let p: Vec<f64> = sol.particular.iter().map(|&c| c as f64).collect();
    // Centre c with p + B c the projection of 0 onto the affine lattice span.
    let c: Vec<f64> = project_coefficients(&p, &b).iter().map(|v| -v).collect();
    let mut perp = p.clone();
    for (ci, bi) in c.iter().zip(&b) {
        perp.iter_mut().zip(bi).for_each(|(a, bb)| *a += ci * bb);
    }
    let perp2: f64 = perp.iter().map(|v| v * v).sum();
    let budget = bound as f64 - perp2;
    let slack = 1e-9 * (bound as f64).max(1.0) + 1e-6;
    if budget < -slack {
        return;
    }
    // Cholesky of the Gram matrix: G = R^T R, R upper triangular.
    let mut r = vec![vec![0.0; k]; k];
    for i in 0..k {
        for j in i..k {
            let mut s: f64 = b[i].iter().zip(&b[j]).map(|(x, y)| x * y).sum();
            for l in 0..i {
                s -= r[l][i] * r[l][j];
            }
            r[i][j] = if i == j { s.max(0.0).sqrt() } else { s / r[i][i] };
        }
    }
    let radius2 = budget.max(0.0) + slack;
    let mut coeffs = vec![0i64; k];
    let mut y = vec![0i64; n];
    enumerate_level(k - 1, &r, &c, radius2, &mut coeffs, &mut |co: &[i64]| {
        for i in 0..n {
            let mut v = sol.particular[i] as i128;
            for (j, cj) in co.iter().enumerate() {
                v += *cj as i128 * sol.basis[j][i] as i128;
            }
            y[i] = v as i64;
        }
        if norm_exact(&y) <= bound {
            visit(&y);
        }
    });
}

/// Recursive Fincke-Pohst over levels `level, level-1, …, 0`.
fn enumerate_level<F: FnMut(&[i64])>(
    level: usize,
    r: &[Vec<f64>],
    c: &[f64],
    remaining: f64,
    coeffs: &mut [i64],
    visit: &mut F,
) {
    let k = r.len();
    // Centre of this level given the already fixed higher coefficients.
    let mut shift = 0.0;
    for j in level + 1..k {
        shift += r[level][j] * (coeffs[j] as f64 - c[j]);
    }
    let rii = r[level][level];
    let center = c[level] - shift / rii;
    let half = remaining.max(0.0).sqrt() / rii;
    let lo = (center - half).ceil() as i64;
    let hi = (center + half).floor() as i64;
    for v in lo..=hi {
        coeffs[level] = v;
        let e = rii * (v as f64 - center);
        let rest = remaining - e * e;
        if rest < 0.0 && level > 0 {
            continue;
        }
        if level == 0 {
            visit(coeffs);
        } else {
            enumerate_level(level - 1, r, c, rest, coeffs, visit);
        }
    }
}

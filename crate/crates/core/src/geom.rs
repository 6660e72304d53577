//! Numerical realization of the residue as an integral over a real
//! manifold, for even dimension.
//!
//! The manifold `M_r` is parameterized by `z = r e^{i zeta} u` with
//! `zeta` running over `[0, pi)` and `u` over the unit sphere.  Against the
//! holomorphic volume form, the normalized integral of a distribution with
//! integer exponents reproduces the residue functional and is independent
//! of the radius.  Everything here is floating point; the exact value from
//! the symbolic residue is the ground truth the quadrature is compared to.

use std::collections::BTreeMap;

use num::complex::Complex64;

use crate::dist::FormalDist;
use crate::error::{CalcError, Result};

/// Surface volume of the unit sphere in dimension `d` (the `(d-1)`-sphere).
pub fn sphere_volume(d: usize) -> f64 {
    match d {
        1 => 2.0,
        2 => 2.0 * std::f64::consts::PI,
        3 => 4.0 * std::f64::consts::PI,
        4 => 2.0 * std::f64::consts::PI * std::f64::consts::PI,
        _ => {
            // V_{d-1} = 2 pi^{d/2} / Gamma(d/2), by the recursion
            // V_d = 2 pi V_{d-2} / (d - 2) on surface volumes
            2.0 * std::f64::consts::PI * sphere_volume(d - 2) / (d as f64 - 2.0)
        }
    }
}

/// Nodes and weights of the `n`-point Gauss-Legendre rule on `[-1, 1]`,
/// computed by Newton iteration on the Legendre polynomial.
pub fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        // Chebyshev-like initial guess
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            // evaluate P_n and its derivative by the three-term recurrence
            let (mut p0, mut p1) = (1.0f64, x);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let (mut p0, mut p1) = (1.0f64, x);
        for k in 2..=n {
            let kf = k as f64;
            let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
            p0 = p1;
            p1 = p2;
        }
        let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        out.push((x, w));
    }
    out.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    out
}

/// A product quadrature grid over `M_r`.
#[derive(Debug, Clone)]
pub struct QuadratureGrid {
    pub d: usize,
    pub r: f64,
    /// `(zeta, weight)` points covering `[0, pi)`; weights sum to `pi`.
    pub zeta: Vec<(f64, f64)>,
    /// `(unit vector, weight)` points on the sphere; weights sum to the
    /// surface volume.
    pub sphere: Vec<(Vec<f64>, f64)>,
}

impl QuadratureGrid {
    /// Builds the grid: uniform trapezoid in `zeta` (spectrally accurate
    /// for the trigonometric integrands appearing here), and a sphere rule
    /// of order `n_sph` (uniform for the circle, Euler-angle Gauss product
    /// for the three-sphere).
    pub fn new(d: usize, r: f64, n_zeta: usize, n_sph: usize) -> Result<Self> {
        if d % 2 != 0 || d == 0 {
            return Err(CalcError::Dimension(format!(
                "the manifold realization needs even dimension, got {d}"
            )));
        }
        let pi = std::f64::consts::PI;
        let zeta = (0..n_zeta)
            .map(|i| (pi * i as f64 / n_zeta as f64, pi / n_zeta as f64))
            .collect();
        let sphere = match d {
            2 => (0..n_sph)
                .map(|i| {
                    let t = 2.0 * pi * i as f64 / n_sph as f64;
                    (vec![t.cos(), t.sin()], 2.0 * pi / n_sph as f64)
                })
                .collect(),
            4 => {
                // u = (cos a, sin a cos b, sin a sin b cos c, sin a sin b sin c)
                // with measure sin^2(a) sin(b) da db dc
                let ga = gauss_legendre(n_sph);
                let gb = gauss_legendre(n_sph);
                let mut pts = Vec::new();
                for &(xa, wa) in &ga {
                    let a = pi * (xa + 1.0) / 2.0;
                    let wa = wa * pi / 2.0 * a.sin() * a.sin();
                    for &(xb, wb) in &gb {
                        let b = pi * (xb + 1.0) / 2.0;
                        let wb = wb * pi / 2.0 * b.sin();
                        for k in 0..(2 * n_sph) {
                            let c = 2.0 * pi * k as f64 / (2 * n_sph) as f64;
                            let wc = 2.0 * pi / (2 * n_sph) as f64;
                            pts.push((
                                vec![
                                    a.cos(),
                                    a.sin() * b.cos(),
                                    a.sin() * b.sin() * c.cos(),
                                    a.sin() * b.sin() * c.sin(),
                                ],
                                wa * wb * wc,
                            ));
                        }
                    }
                }
                // rescale so the weights sum to the exact surface volume
                let s: f64 = pts.iter().map(|(_, w)| w).sum();
                let scale = sphere_volume(4) / s;
                for p in &mut pts {
                    p.1 *= scale;
                }
                pts
            }
            _ => {
                return Err(CalcError::Dimension(format!(
                    "no sphere rule for dimension {d}"
                )))
            }
        };
        Ok(QuadratureGrid { d, r, zeta, sphere })
    }
}

/// The normalized integral of `f` over `M_r` in the variable `var`:
/// `(i pi V)^(-1) * integral of f` against the holomorphic volume form,
/// whose restriction contributes `i r^D e^{i D zeta}` per point.  For
/// integer-exponent inputs this converges to the residue.
pub fn manifold_integral(f: &FormalDist, var: &str, grid: &QuadratureGrid) -> Result<Complex64> {
    if f.dim != grid.d {
        return Err(CalcError::Incompatible(format!(
            "distribution dimension {} vs grid dimension {}",
            f.dim, grid.d
        )));
    }
    let d = grid.d as f64;
    let mut acc = Complex64::new(0.0, 0.0);
    let mut compensation = Complex64::new(0.0, 0.0);
    for &(zeta, wz) in &grid.zeta {
        let phase = Complex64::new(0.0, d * zeta).exp();
        for (u, wu) in &grid.sphere {
            let mut pts = BTreeMap::new();
            pts.insert(var.to_string(), (grid.r, zeta, u.clone()));
            let val = f.eval_manifold(&pts)?;
            // Kahan-compensated accumulation for a reproducible, accurate sum
            let term = val * phase * grid.r.powf(d) * wz * *wu - compensation;
            let next = acc + term;
            compensation = (next - acc) - term;
            acc = next;
        }
    }
    let norm = Complex64::new(0.0, std::f64::consts::PI * sphere_volume(grid.d));
    Ok(acc * Complex64::new(0.0, 1.0) / norm)
}

/// Pointwise value of `((z - w)^2)^p` at manifold points, for integer `p`.
fn kernel_value(z: &[Complex64], w: &[Complex64], p: i64) -> Complex64 {
    let mut s = Complex64::new(0.0, 0.0);
    for (a, b) in z.iter().zip(w) {
        s += (a - b) * (a - b);
    }
    s.powi(p as i32)
}

fn point(r: f64, zeta: f64, u: &[f64]) -> Vec<Complex64> {
    let phase = Complex64::new(0.0, zeta).exp() * r;
    u.iter().map(|&x| phase * x).collect()
}

/// Maximum absolute error, over a small point sample, of the truncated
/// directed expansion of `((z - w)^2)^p` against its pointwise value, with
/// `z` on `M_r` and `w` on `M_rp`.  `outer_is_z` selects the expansion in
/// nonnegative powers of `w` (true) or of `z` (false).
pub fn iota_truncation_error(
    d: usize,
    p: i64,
    r: f64,
    rp: f64,
    order: i64,
    outer_is_z: bool,
) -> Result<f64> {
    if r == rp {
        return Err(CalcError::Incompatible(
            "the two radii must differ so one expansion direction converges".into(),
        ));
    }
    let (outer, inner) = if outer_is_z { ("z", "w") } else { ("w", "z") };
    let trunc = crate::expand::iota_expand(d, 2 * p, outer, inner, -1, order);
    let samples: Vec<(f64, f64)> = vec![(0.3, 1.1), (1.2, 2.3), (2.0, 0.7), (0.9, 2.9)];
    let mut worst: f64 = 0.0;
    for (z0, w0) in samples {
        let uz: Vec<f64> = match d {
            2 => vec![z0.cos(), z0.sin()],
            4 => {
                let n = (1.0f64 + z0 * z0 + 1.3).sqrt();
                vec![1.0 / n, z0 / n, 1.1 / n, 0.5 / n]
            }
            _ => return Err(CalcError::Dimension(format!("dimension {d}"))),
        };
        let uw: Vec<f64> = match d {
            2 => vec![w0.cos(), w0.sin()],
            _ => {
                let n = (1.0f64 + w0 * w0 + 0.85).sqrt();
                vec![w0 / n, 0.6 / n, 1.0 / n, 0.3 / n]
            }
        };
        let zp = point(r, z0 * 0.4, &uz);
        let wp = point(rp, w0 * 0.4, &uw);
        let exact = kernel_value(&zp, &wp, p);
        let mut pts = BTreeMap::new();
        pts.insert("z".to_string(), (r, z0 * 0.4, uz.clone()));
        pts.insert("w".to_string(), (rp, w0 * 0.4, uw.clone()));
        let approx = trunc.eval_manifold(&pts)?;
        worst = worst.max((approx - exact).norm());
    }
    Ok(worst)
}

/// Convergence/divergence report for the two expansion directions of
/// `((z - w)^2)^p` with `z` on `M_r`, `w` on `M_rp`: for each truncation
/// order the worst pointwise error of the expansion in `w` and in `z`.
pub fn iota_domain_report(
    d: usize,
    p: i64,
    r: f64,
    rp: f64,
    orders: &[i64],
) -> Result<Vec<(i64, f64, f64)>> {
    let mut out = Vec::new();
    for &n in orders {
        let in_w = iota_truncation_error(d, p, r, rp, n, true)?;
        let in_z = iota_truncation_error(d, p, r, rp, n, false)?;
        out.push((n, in_w, in_z));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::MultiPoly;
    use crate::scalar;

    fn dist_zsq_pow(d: usize, twog: i64, extra: Option<MultiPoly>) -> FormalDist {
        let vars = vec!["z".to_string()];
        let p = extra.unwrap_or_else(|| MultiPoly::one(d));
        FormalDist::monomial(d, &vars, &[twog], p)
    }

    #[test]
    fn gauss_rule_integrates_low_polynomials_exactly() {
        let g = gauss_legendre(8);
        let wsum: f64 = g.iter().map(|(_, w)| w).sum();
        assert!((wsum - 2.0).abs() < 1e-13);
        // integral of x^6 over [-1, 1] is 2/7
        let m6: f64 = g.iter().map(|(x, w)| w * x.powi(6)).sum();
        assert!((m6 - 2.0 / 7.0).abs() < 1e-13);
    }

    #[test]
    fn sphere_weights_sum_to_surface_volume() {
        let g2 = QuadratureGrid::new(2, 1.0, 16, 8).unwrap();
        let s2: f64 = g2.sphere.iter().map(|(_, w)| w).sum();
        assert!((s2 - sphere_volume(2)).abs() / sphere_volume(2) < 1e-12);
        let g4 = QuadratureGrid::new(4, 1.0, 16, 8).unwrap();
        let s4: f64 = g4.sphere.iter().map(|(_, w)| w).sum();
        assert!((s4 - sphere_volume(4)).abs() / sphere_volume(4) < 1e-12);
    }

    #[test]
    fn odd_dimension_is_rejected() {
        assert!(QuadratureGrid::new(3, 1.0, 8, 8).is_err());
    }

    #[test]
    fn d2_simple_pole_integrates_to_one() {
        let f = dist_zsq_pow(2, -2, None);
        let grid = QuadratureGrid::new(2, 1.0, 256, 64).unwrap();
        let v = manifold_integral(&f, "z", &grid).unwrap();
        assert!((v - Complex64::new(1.0, 0.0)).norm() < 1e-9, "{v}");
    }

    #[test]
    fn polynomials_integrate_to_zero() {
        let grid = QuadratureGrid::new(2, 1.0, 64, 32).unwrap();
        let p = MultiPoly::coord(2, "z", 0).pow(2);
        let f = dist_zsq_pow(2, 2, Some(p));
        let v = manifold_integral(&f, "z", &grid).unwrap();
        assert!(v.norm() < 1e-9, "{v}");
    }

    #[test]
    fn d4_deep_pole_matches_exact_residue() {
        // (z^2)^(-3) (z^1)^2 in dimension 4
        let p = MultiPoly::coord(4, "z", 0).pow(2);
        let f = dist_zsq_pow(4, -6, Some(p));
        let exact = scalar::to_f64(&f.residue_scalar("z").unwrap());
        let grid = QuadratureGrid::new(4, 1.0, 64, 12).unwrap();
        let v = manifold_integral(&f, "z", &grid).unwrap();
        assert!(
            (v - Complex64::new(exact, 0.0)).norm() / exact.abs() < 1e-6,
            "numeric {v} vs exact {exact}"
        );
    }

    #[test]
    fn radius_independence_for_integer_exponents() {
        let p = MultiPoly::coord(2, "z", 1).pow(2);
        let f = dist_zsq_pow(2, -4, Some(p));
        let mut vals = Vec::new();
        for r in [0.5, 1.0, 2.0] {
            let grid = QuadratureGrid::new(2, r, 128, 64).unwrap();
            vals.push(manifold_integral(&f, "z", &grid).unwrap());
        }
        for v in &vals[1..] {
            assert!((v - vals[0]).norm() < 1e-8, "{vals:?}");
        }
    }

    #[test]
    fn expansion_converges_only_inside_its_domain() {
        // ((z-w)^2)^(-1) with z on the larger sphere: the expansion in w
        // converges, the expansion in z diverges, and swapping the radii
        // swaps the verdicts
        let rep = iota_domain_report(2, -1, 1.0, 0.5, &[2, 4, 6, 8]).unwrap();
        for win in rep.windows(2) {
            assert!(win[1].1 < win[0].1, "w-expansion should converge: {rep:?}");
        }
        assert!(rep.last().unwrap().2 > rep.first().unwrap().2.min(1.0));
        let rep2 = iota_domain_report(2, -1, 0.5, 1.0, &[2, 4, 6, 8]).unwrap();
        for win in rep2.windows(2) {
            assert!(win[1].2 < win[0].2, "z-expansion should converge: {rep2:?}");
        }
    }

    #[test]
    fn equal_radii_are_rejected() {
        assert!(iota_truncation_error(2, -1, 1.0, 1.0, 4, true).is_err());
    }

    #[test]
    fn inversion_consistency_across_reciprocal_radii() {
        // integral of f(z/z^2) over M_r equals integral of (z^2)^(-D) f(z)
        // over M_(1/r)
        let p = MultiPoly::coord(2, "z", 0).pow(2);
        let f = dist_zsq_pow(2, -6, Some(p));
        let finv = f.invert("z");
        let g1 = QuadratureGrid::new(2, 2.0, 128, 64).unwrap();
        let g2 = QuadratureGrid::new(2, 0.5, 128, 64).unwrap();
        let a = manifold_integral(&finv, "z", &g1).unwrap();
        let b = manifold_integral(&f.mul_vsq_halfpow("z", -2 * 2), "z", &g2).unwrap();
        assert!((a - b).norm() < 1e-7, "{a} vs {b}");
    }
}

//! Properties of the residue functional: the local evaluation formula, the
//! bilinear pairing, divergence witnesses, and transformation laws.
//!
//! The residue itself (extraction of the constant harmonic coefficient at
//! exponent -D/2) lives on [`FormalDist`].  This module adds the second,
//! independent route to the same number for even D: multiply by a large
//! power of the square, apply the Laplacian repeatedly, and evaluate at the
//! origin.  The two routes agreeing on a corpus of inputs is one of the
//! core cross-checks of the calculus.
//!
//! Divergence witnesses make the uniqueness argument for the residue
//! constructive: every cell except the residue cell itself is exhibited
//! explicitly as a divergence, which the tests verify by recomputing the
//! divergence exactly.

use num::Zero;

use crate::dist::FormalDist;
use crate::error::{CalcError, Result};
use crate::harmonic;
use crate::poly::MultiPoly;
use crate::scalar::{self, Scalar};
use crate::window::Bnd;

/// Normalization constant of the local residue formula:
/// `2^(2n) * prod_{k=1..n} k (k + D/2 - 1)` for even `D`.
pub fn local_norm(d: usize, n: u32) -> Scalar {
    assert!(d % 2 == 0, "local residue formula needs even D");
    let mut out = scalar::int(1);
    for k in 1..=(n as i64) {
        out = out * scalar::int(4) * scalar::int(k) * scalar::int(k + d as i64 / 2 - 1);
    }
    out
}

/// Local formula for the residue, even `D` only:
/// `Res F = local_norm^(-1) (Delta)^n ((z^2)^(n+D/2) F) |_(z=0)`.
///
/// Requires `n` large enough that the multiplied distribution is
/// polynomial, and a window that certifies every supported cell (a
/// truncated expansion could silently hide low cells, so bounded-below
/// knowledge is accepted only when it reaches the certified support floor).
pub fn residue_local(f: &FormalDist, v: &str, n: u32) -> Result<Scalar> {
    let d = f.dim;
    if d % 2 != 0 {
        return Err(CalcError::Dimension(format!(
            "local residue formula is defined for even D, got {d}"
        )));
    }
    if f.vars.len() != 1 || f.vars[0] != v {
        return Err(CalcError::Incompatible(format!(
            "local residue takes a single-variable distribution in {v}"
        )));
    }
    let know = f.cert.knowledge.ival(v);
    let supp = f.cert.support.tighten().ival(v);
    let covered = match (know.lo, supp.lo) {
        (Bnd::NegInf, _) => true,
        (Bnd::Int(k), Bnd::Int(s)) => k <= s && k <= -(d as i64),
        _ => false,
    };
    if !covered {
        return Err(CalcError::WindowTooSmall(
            "local residue needs every supported cell certified".into(),
        ));
    }
    let shift = 2 * n as i64 + d as i64;
    for key in f.terms.keys() {
        if key[0] + shift < 0 {
            return Err(CalcError::WindowTooSmall(format!(
                "n = {n} too small: exponent {}/2 stays negative after the shift",
                key[0]
            )));
        }
    }
    let mut g = f.mul_vsq_halfpow(v, shift);
    for _ in 0..n {
        g = g.laplacian(v);
    }
    let mut out = scalar::int(0);
    for (key, p) in &g.terms {
        if key[0] == 0 {
            out = out + p.constant_term();
        }
    }
    Ok(out / local_norm(d, n))
}

/// The residue pairing `<f, g> = Res_v f g`.
pub fn pairing(f: &FormalDist, g: &FormalDist, v: &str) -> Result<Scalar> {
    f.mul(g).residue_scalar(v)
}

/// The one-dimensional primed residue: the coefficient of `z^(-1)`, i.e.
/// the degree-one harmonic coefficient of the `(z^2)^(-1)` cell.
pub fn residue_prime_d1(f: &FormalDist, v: &str) -> Result<Scalar> {
    if f.dim != 1 {
        return Err(CalcError::Dimension(format!(
            "primed residue is the D = 1 functional, got D = {}",
            f.dim
        )));
    }
    let vi = f.vars.iter().position(|u| u == v).ok_or_else(|| {
        CalcError::Incompatible(format!("variable {v} not present"))
    })?;
    if !f.cert.knowledge.ival(v).covers(&crate::window::Ival::at(-1)) {
        return Err(CalcError::WindowTooSmall(
            "degree -1 cell is outside the knowledge region".into(),
        ));
    }
    let mut out = scalar::int(0);
    for (key, p) in &f.terms {
        if key[vi] == -2 {
            // the z-coefficient of the degree-one part
            if let Some(q) = p.homogeneous_parts(v).get(&1) {
                for c in q.terms.values() {
                    out = out + c.clone();
                }
            }
        }
    }
    Ok(out)
}

/// The phase automorphism: each cell `(v^2)^g ...` picks up `(-1)^(2g)`
/// summed over all variables.  Trivial on integer exponents.
pub fn theta(f: &FormalDist) -> FormalDist {
    let mut out = f.clone();
    out.terms = f
        .terms
        .iter()
        .map(|(k, p)| {
            let s: i64 = k.iter().sum();
            let q = if s.rem_euclid(2) == 0 { p.clone() } else { p.neg() };
            (k.clone(), q)
        })
        .collect();
    out
}

/// Explicit divergence preimage of the cell `(v^2)^(twog/2) h` for a
/// harmonic `h`: returns `G_0..G_(D-1)` with `sum_a d/dv_a G_a` equal to
/// the cell.  Fails exactly on the residue cell (and its D = 1 companion),
/// which is the content of the uniqueness argument.
pub fn divergence_witness(
    d: usize,
    twog: i64,
    h: &MultiPoly,
    v: &str,
) -> Result<Vec<FormalDist>> {
    assert!(harmonic::is_harmonic(h, v), "witness input must be harmonic");
    let m = h.total_degree().unwrap_or(0) as i64;
    if m > 0 {
        assert!(
            h.homogeneous_parts(v).len() == 1,
            "witness input must be homogeneous"
        );
    }
    let di = d as i64;
    if (m == 0 && twog == -di) || (d == 1 && m == 1 && twog == -2) {
        return Err(CalcError::Incompatible(format!(
            "(gamma, m) = ({twog}/2, {m}) is not a divergence in D = {d}"
        )));
    }
    let vars = [v.to_string()];
    // Laplacian route: the cell is c^(-1) Delta ((v^2)^(g+1) h) with
    // c = (2g+2)(2g+D+2m), valid away from its zeros
    let c = scalar::int(twog + 2) * scalar::int(twog + di + 2 * m);
    if !c.is_zero() {
        let base = FormalDist::monomial(d, &vars, &[twog + 2], h.clone());
        let inv = scalar::int(1) / c;
        return Ok((0..d).map(|a| base.derive(v, a).scale(&inv)).collect());
    }
    // Euler route: sum_a d/dv_a ((v^2)^g v_a h) = (2g+D+m)(v^2)^g h
    let e = scalar::int(twog + di + m);
    assert!(!e.is_zero(), "both witness routes degenerate off the excluded pairs");
    let inv = scalar::int(1) / e;
    Ok((0..d)
        .map(|a| {
            let p = &MultiPoly::coord(d, v, a) * h;
            FormalDist::monomial(d, &vars, &[twog], p).scale(&inv)
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expand::iota_expand;
    use crate::scalar::{int, ratio};
    use crate::window::{Bnd, Extent, Ival};

    fn cell(d: usize, twog: i64, p: MultiPoly) -> FormalDist {
        FormalDist::monomial(d, &[String::from("z")], &[twog], p)
    }

    fn harmonics(d: usize) -> Vec<MultiPoly> {
        let mut hs = vec![MultiPoly::one(d), MultiPoly::coord(d, "z", 0)];
        if d >= 2 {
            // z1 z2 and z1^2 - z2^2 are harmonic for D >= 2
            hs.push(&MultiPoly::coord(d, "z", 0) * &MultiPoly::coord(d, "z", 1));
            let a = &MultiPoly::coord(d, "z", 0) * &MultiPoly::coord(d, "z", 0);
            let b = &MultiPoly::coord(d, "z", 1) * &MultiPoly::coord(d, "z", 1);
            hs.push(&a - &b);
        }
        hs
    }

    #[test]
    fn local_formula_examples() {
        for d in [2usize, 4] {
            let f = cell(d, -(d as i64), MultiPoly::one(d));
            assert_eq!(residue_local(&f, "z", 0).unwrap(), int(1));
        }
        let d = 4;
        let p = &MultiPoly::coord(d, "z", 0) * &MultiPoly::coord(d, "z", 0);
        let f = cell(d, -6, p);
        assert_eq!(residue_local(&f, "z", 1).unwrap(), ratio(1, 4));
        assert_eq!(f.residue_scalar("z").unwrap(), ratio(1, 4));
        // n above threshold does not change the value
        assert_eq!(residue_local(&f, "z", 2).unwrap(), ratio(1, 4));
        assert_eq!(residue_local(&f, "z", 3).unwrap(), ratio(1, 4));
    }

    #[test]
    fn local_formula_matches_definition_on_grid() {
        for d in [2usize, 4] {
            for twog in [-(d as i64) - 4, -(d as i64) - 2, -(d as i64), -2, 0, 2] {
                for h in harmonics(d) {
                    let f = cell(d, twog, h);
                    let direct = f.residue_scalar("z").unwrap();
                    let n = ((-twog - d as i64 + 1).max(0) as u32).div_ceil(2) + 1;
                    let local = residue_local(&f, "z", n).unwrap();
                    assert_eq!(direct, local, "d={d} twog={twog}");
                }
            }
        }
    }

    #[test]
    fn local_formula_guards() {
        let d = 4;
        let f = cell(d, -8, MultiPoly::one(d));
        assert!(residue_local(&f, "z", 1).is_err()); // needs n >= 2
        assert!(residue_local(&cell(3, -3, MultiPoly::one(3)), "z", 2).is_err()); // odd D
        // a truncated window must be rejected
        let mut g = f.clone();
        let mut k = Extent::full(&[String::from("z")]);
        k.var.insert("z".into(), Ival::of(Bnd::Int(-8), Bnd::PosInf));
        g.cert.knowledge = k;
        g.cert.support.var.insert("z".into(), Ival::full());
        g.cert.support.total = Ival::full();
        assert!(residue_local(&g, "z", 2).is_err());
    }

    #[test]
    fn pairing_orthogonality() {
        let d = 4;
        // <(z^2)^g h_m, h'_m'> vanishes unless m = m' and 2g + m + m' = -2D/2
        let z0 = MultiPoly::coord(d, "z", 0);
        let z1 = MultiPoly::coord(d, "z", 1);
        let one = FormalDist::from_poly(d, &[String::from("z")], MultiPoly::one(d));
        assert_eq!(
            pairing(&cell(d, -(d as i64), MultiPoly::one(d)), &one, "z").unwrap(),
            int(1)
        );
        // distinct degree-one harmonics are orthogonal
        let f = cell(d, -(d as i64) - 2, z1.clone());
        let g = FormalDist::from_poly(d, &[String::from("z")], z0.clone());
        assert_eq!(pairing(&f, &g, "z").unwrap(), int(0));
        // same harmonic pairs to a nonzero value
        let g2 = FormalDist::from_poly(d, &[String::from("z")], z1.clone());
        assert!(!pairing(&f, &g2, "z").unwrap().is_zero());
        // mismatched total degree pairs to zero
        let f2 = cell(d, -(d as i64), z1.clone());
        assert_eq!(pairing(&f2, &g2, "z").unwrap(), int(0));
        // symmetry
        assert_eq!(
            pairing(&f, &g2, "z").unwrap(),
            pairing(&g2, &f, "z").unwrap()
        );
    }

    #[test]
    fn pairing_gram_matrices_nondegenerate() {
        // monomials of degree k against (z^2)^(-D/2-k) times monomials of
        // degree k: the Gram matrix has full rank
        for d in 1..=4usize {
            for k in 0..=3u32 {
                let monos = degree_monomials(d, k);
                let nmono = monos.len();
                let mut gram: Vec<Vec<Scalar>> = Vec::new();
                for a in &monos {
                    let fa = FormalDist::from_poly(d, &[String::from("z")], a.clone());
                    let mut row = Vec::new();
                    for b in &monos {
                        let gb = cell(d, -(d as i64) - 2 * k as i64, b.clone());
                        row.push(pairing(&fa, &gb, "z").unwrap());
                    }
                    gram.push(row);
                }
                assert_eq!(rank(gram), nmono, "d={d} k={k}");
            }
        }
    }

    fn degree_monomials(d: usize, k: u32) -> Vec<MultiPoly> {
        let mut out = vec![MultiPoly::one(d)];
        for _ in 0..k {
            let mut next = Vec::new();
            for p in &out {
                for a in 0..d {
                    next.push(p * &MultiPoly::coord(d, "z", a));
                }
            }
            out = next;
        }
        out.sort();
        out.dedup();
        out
    }

    fn rank(mut m: Vec<Vec<Scalar>>) -> usize {
        let rows = m.len();
        if rows == 0 {
            return 0;
        }
        let cols = m[0].len();
        let mut r = 0;
        for c in 0..cols {
            if r == rows {
                break;
            }
            let Some(p) = (r..rows).find(|&i| !m[i][c].is_zero()) else {
                continue;
            };
            m.swap(r, p);
            let inv = int(1) / m[r][c].clone();
            for j in c..cols {
                m[r][j] = m[r][j].clone() * inv.clone();
            }
            for i in 0..rows {
                if i != r && !m[i][c].is_zero() {
                    let f = m[i][c].clone();
                    for j in c..cols {
                        m[i][j] = m[i][j].clone() - f.clone() * m[r][j].clone();
                    }
                }
            }
            r += 1;
        }
        r
    }

    #[test]
    fn divergence_witnesses_verify() {
        for d in [1usize, 2, 3, 4] {
            let di = d as i64;
            for twog in [-2 * di, -di - 2, -di, -4, -2, -1, 0, 3] {
                for h in harmonics(d) {
                    let m = h.total_degree().unwrap_or(0) as i64;
                    let excluded =
                        (m == 0 && twog == -di) || (d == 1 && m == 1 && twog == -2);
                    let w = divergence_witness(d, twog, &h, "z");
                    if excluded {
                        assert!(w.is_err(), "d={d} twog={twog} m={m} should be excluded");
                        continue;
                    }
                    let w = w.unwrap();
                    let mut div = FormalDist::zero(d, &[String::from("z")]);
                    div.cert = crate::window::Certificate::exact(Extent::full(&[String::from(
                        "z",
                    )]));
                    let mut first = true;
                    for (a, g) in w.iter().enumerate() {
                        let t = g.derive("z", a);
                        div = if first { t } else { div.add(&t) };
                        first = false;
                    }
                    let target = cell(d, twog, h.clone());
                    assert_eq!(div.terms, target.terms, "d={d} twog={twog} m={m}");
                    // a divergence always has residue zero
                    assert_eq!(div.residue_scalar("z").unwrap(), int(0));
                }
            }
        }
    }

    #[test]
    fn divergence_witness_euler_coefficient() {
        // the gamma = -1 witness for h = z1 in D = 4 carries 1/(D+m-2) = 1/3
        let d = 4;
        let h = MultiPoly::coord(d, "z", 0);
        let w = divergence_witness(d, -2, &h, "z").unwrap();
        let expect = FormalDist::monomial(
            d,
            &[String::from("z")],
            &[-2],
            (&MultiPoly::coord(d, "z", 1) * &h).scale(&ratio(1, 3)),
        );
        assert_eq!(w[1].terms, expect.terms);
    }

    #[test]
    fn fubini_partial_residues_commute() {
        let d = 3;
        let vars = [String::from("w"), String::from("z")];
        let mix = &(&MultiPoly::dot(d, "z", "w") + &MultiPoly::one(d))
            * &(&MultiPoly::coord(d, "z", 1) + &MultiPoly::coord(d, "w", 2));
        let mut f = FormalDist::monomial(d, &vars, &[-(d as i64) - 1, -(d as i64) - 1], mix);
        f = f.add(&FormalDist::monomial(
            d,
            &vars,
            &[-(d as i64), 2],
            MultiPoly::dot(d, "z", "w"),
        ));
        let zw = f.residue("z").unwrap().residue_scalar("w").unwrap();
        let wz = f.residue("w").unwrap().residue_scalar("z").unwrap();
        assert_eq!(zw, wz);
    }

    #[test]
    fn inversion_law() {
        // Res F(z/z^2) = Res (z^2)^(-D) F(z)
        for d in [2usize, 3, 4] {
            for twog in [-(d as i64), -(d as i64) - 2, -2, 0, -(d as i64) + 1] {
                for h in harmonics(d) {
                    let f = cell(d, twog, h);
                    let lhs = f.invert("z").residue_scalar("z").unwrap();
                    let rhs = f
                        .mul_vsq_halfpow("z", -2 * d as i64)
                        .residue_scalar("z")
                        .unwrap();
                    assert_eq!(lhs, rhs, "d={d} twog={twog}");
                }
            }
        }
    }

    #[test]
    fn parity_and_phase_laws() {
        for d in [2usize, 3, 4] {
            for twog in [-(d as i64), -(d as i64) - 2, -(d as i64) - 1] {
                for h in harmonics(d) {
                    let f = cell(d, twog, h);
                    let r = f.residue_scalar("z").unwrap();
                    assert_eq!(f.negate_var("z").residue_scalar("z").unwrap(), r);
                    let sign = if d % 2 == 0 { int(1) } else { int(-1) };
                    assert_eq!(
                        theta(&f).residue_scalar("z").unwrap(),
                        sign * r,
                        "d={d} twog={twog}"
                    );
                }
            }
        }
    }

    #[test]
    fn primed_residue_d1() {
        let v = [String::from("z")];
        let zc = MultiPoly::coord(1, "z", 0);
        // z^(-1) = (z^2)^(-1) z
        let f = FormalDist::monomial(1, &v, &[-2], zc.clone());
        assert_eq!(residue_prime_d1(&f, "z").unwrap(), int(1));
        let c = FormalDist::from_poly(1, &v, MultiPoly::one(1));
        assert_eq!(residue_prime_d1(&c, "z").unwrap(), int(0));
        // derivative of anything has primed residue zero
        for twog in [-4i64, -2, 0, 2] {
            for p in [MultiPoly::one(1), zc.clone()] {
                let g = FormalDist::monomial(1, &v, &[twog], p);
                for a in 0..1 {
                    assert_eq!(
                        residue_prime_d1(&g.derive("z", a), "z").unwrap(),
                        int(0),
                        "twog={twog}"
                    );
                }
            }
        }
    }

    #[test]
    fn generalized_cauchy_gives_plus_part() {
        // Res_z F(z) iota_{z,w} ((z-w)^2)^(-D/2) recovers the regular part
        // of F at w
        let d = 4;
        let mut f = cell(d, 4, MultiPoly::one(d)); // (z^2)^2: regular
        f = f.add(&cell(d, -(d as i64) - 2, MultiPoly::coord(d, "z", 0))); // singular
        f = f.add(&cell(d, 2, MultiPoly::coord(d, "z", 1))); // regular
        let e = iota_expand(d, -(d as i64), "z", "w", -1, 6);
        let res = f.mul(&e).residue("z").unwrap();
        let plus = &MultiPoly::vsq(d, "w").pow(2)
            + &(&MultiPoly::vsq(d, "w") * &MultiPoly::coord(d, "w", 1));
        let expect = FormalDist::from_poly(d, &[String::from("w")], plus);
        let mut req = Extent::full(&[String::from("w")]);
        req.var.insert("w".into(), Ival::of(Bnd::Int(0), Bnd::Int(5)));
        req.total = Ival::of(Bnd::Int(0), Bnd::Int(5));
        assert!(res.agrees_with(&expect, &req).unwrap());
    }
}

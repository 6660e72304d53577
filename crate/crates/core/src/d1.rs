//! The one-dimensional specialization.
//!
//! In dimension one the square `z^2` is the square of a single coordinate
//! and the harmonic polynomials are spanned by `1` and `z`, so a formal
//! distribution is an ordinary doubly infinite Laurent-like series
//! `sum_gamma (z^2)^gamma (a_gamma + b_gamma z)`.  This module provides:
//!
//! * conversion between plain Laurent series and the general container,
//!   under which the primed residue coincides with the classical residue;
//! * the splitting operators `P+-` built from `(z^2)^(-1/2) z`, which are
//!   complementary projections on half-integer-support series;
//! * a small Heisenberg current toy model on which the two closed formulas
//!   for the n-th product of mutually local fields are computed through
//!   independent pipelines and compared exactly.

use std::collections::BTreeMap;

use crate::dist::FormalDist;
use crate::error::{CalcError, Result};
use crate::poly::MultiPoly;
use crate::residue::residue_prime_d1;
use crate::scalar::{self, Scalar};

/// Builds the D = 1 distribution with the given Laurent coefficients,
/// `z^n` carrying coefficient `coeffs[n]`.
pub fn laurent_to_dist(var: &str, coeffs: &BTreeMap<i64, Scalar>) -> FormalDist {
    use num_traits::Zero;
    let vars = vec![var.to_string()];
    let mut out = FormalDist::zero(1, &vars);
    for (&n, c) in coeffs {
        if c.is_zero() {
            continue;
        }
        let (key, p) = if n % 2 == 0 {
            (n, MultiPoly::constant(1, c.clone()))
        } else {
            (n - 1, MultiPoly::coord(1, var, 0).scale(c))
        };
        out = out.add(&FormalDist::monomial(1, &vars, &[key], p));
    }
    out
}

/// The classical residue of a Laurent series: the coefficient of `z^(-1)`.
pub fn laurent_residue(coeffs: &BTreeMap<i64, Scalar>) -> Scalar {
    coeffs.get(&-1).cloned().unwrap_or_else(|| scalar::int(0))
}

/// Multiplication by `(z^2)^(-1/2) z`, the degree-zero involution entering
/// the splitting operators.
pub fn sign_factor(f: &FormalDist, var: &str) -> FormalDist {
    f.mul_vsq_halfpow(var, -1).mul_coord(var, 0)
}

/// The splitting operator `P+ = (1 + (z^2)^(-1/2) z) / 2` (`plus` true) or
/// `P- = (1 - (z^2)^(-1/2) z) / 2`.
pub fn split_projector(f: &FormalDist, var: &str, plus: bool) -> FormalDist {
    let s = sign_factor(f, var);
    let sum = if plus { f.add(&s) } else { f.sub(&s) };
    sum.scale(&scalar::ratio(1, 2))
}

/// A basis state of the Heisenberg toy space: a multiset of positive mode
/// energies, `mode -> multiplicity`.  The vacuum is the empty multiset.
pub type ToyState = BTreeMap<u32, u32>;

/// A finite rational combination of toy states.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ToyVec {
    pub terms: BTreeMap<ToyState, Scalar>,
}

impl ToyVec {
    pub fn zero() -> Self {
        ToyVec { terms: BTreeMap::new() }
    }

    pub fn vacuum() -> Self {
        let mut t = BTreeMap::new();
        t.insert(ToyState::new(), scalar::int(1));
        ToyVec { terms: t }
    }

    /// The state `a_{-m1} ... a_{-mk} vac` for the listed positive modes.
    pub fn state(modes: &[u32]) -> Self {
        let mut s = ToyState::new();
        for &m in modes {
            assert!(m > 0);
            *s.entry(m).or_insert(0) += 1;
        }
        let mut t = BTreeMap::new();
        t.insert(s, scalar::int(1));
        ToyVec { terms: t }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add_term(&mut self, s: ToyState, c: Scalar) {
        use num_traits::Zero;
        let e = self.terms.entry(s).or_insert_with(|| scalar::int(0));
        *e = e.clone() + c;
        if e.is_zero() {
            let k: Vec<ToyState> = self
                .terms
                .iter()
                .filter(|(_, v)| v.is_zero())
                .map(|(k, _)| k.clone())
                .collect();
            for k in k {
                self.terms.remove(&k);
            }
        }
    }

    pub fn add(&self, other: &ToyVec) -> ToyVec {
        let mut out = self.clone();
        for (s, c) in &other.terms {
            out.add_term(s.clone(), c.clone());
        }
        out
    }

    pub fn sub(&self, other: &ToyVec) -> ToyVec {
        use num_traits::Zero;
        let mut out = self.clone();
        for (s, c) in &other.terms {
            out.add_term(s.clone(), Scalar::zero() - c.clone());
        }
        out
    }

    pub fn scale(&self, c: &Scalar) -> ToyVec {
        use num_traits::Zero;
        if c.is_zero() {
            return ToyVec::zero();
        }
        ToyVec {
            terms: self
                .terms
                .iter()
                .map(|(s, v)| (s.clone(), v.clone() * c.clone()))
                .collect(),
        }
    }

    /// Total energy bound over the present states.
    pub fn max_energy(&self) -> i64 {
        self.terms
            .keys()
            .map(|s| s.iter().map(|(&m, &k)| (m as i64) * (k as i64)).sum())
            .max()
            .unwrap_or(0)
    }
}

/// A field of the toy model.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ToyField {
    /// The current `J(z) = sum_m J_m z^(-m-1)` with `[J_m, J_n] =
    /// m delta_{m+n,0} level`.
    Current,
    /// The identity field, whose only mode is the identity at `m = -1`.
    Identity,
}

/// Applies the mode `m` of the field to a vector.  For the current,
/// `J_{-k}` with `k > 0` creates mode `k`, `J_k` annihilates it with factor
/// `level * k * multiplicity`, and `J_0` acts as zero.
pub fn mode_apply(field: ToyField, m: i64, v: &ToyVec, level: &Scalar) -> ToyVec {
    match field {
        ToyField::Identity => {
            if m == -1 {
                v.clone()
            } else {
                ToyVec::zero()
            }
        }
        ToyField::Current => {
            let mut out = ToyVec::zero();
            if m == 0 {
                return out;
            }
            for (s, c) in &v.terms {
                if m < 0 {
                    let mut s2 = s.clone();
                    *s2.entry((-m) as u32).or_insert(0) += 1;
                    out.add_term(s2, c.clone());
                } else {
                    let k = m as u32;
                    if let Some(&mult) = s.get(&k) {
                        let mut s2 = s.clone();
                        if mult == 1 {
                            s2.remove(&k);
                        } else {
                            s2.insert(k, mult - 1);
                        }
                        let f = level.clone() * scalar::int(m) * scalar::int(mult as i64);
                        out.add_term(s2, c.clone() * f);
                    }
                }
            }
            out
        }
    }
}

/// A two-variable Laurent series with toy-vector coefficients, indexed by
/// `(z-degree, w-degree)`.
pub type Series2 = BTreeMap<(i64, i64), ToyVec>;

/// The matrix `a(z) b(w) c` over the rectangle `|degree| <= r` in each
/// variable: entry `(A, B)` is `a_{-A-1} (b_{-B-1} c)`.
pub fn two_field_series(
    a: ToyField,
    b: ToyField,
    c: &ToyVec,
    level: &Scalar,
    r: i64,
) -> Series2 {
    let mut out = Series2::new();
    for bdeg in -r..=r {
        let inner = mode_apply(b, -bdeg - 1, c, level);
        if inner.is_zero() {
            continue;
        }
        for adeg in -r..=r {
            let v = mode_apply(a, -adeg - 1, &inner, level);
            if !v.is_zero() {
                out.insert((adeg, bdeg), v);
            }
        }
    }
    out
}

fn series_add_term(s: &mut Series2, key: (i64, i64), v: &ToyVec) {
    let e = s.entry(key).or_insert_with(ToyVec::zero);
    *e = e.add(v);
    if e.is_zero() {
        s.remove(&key);
    }
}

/// Multiplies a series by a scalar Laurent polynomial in `(z, w)` given as
/// `(z-degree, w-degree) -> coefficient`.
pub fn series_mul(s: &Series2, p: &BTreeMap<(i64, i64), Scalar>) -> Series2 {
    let mut out = Series2::new();
    for (&(za, wa), v) in s {
        for (&(zb, wb), c) in p {
            series_add_term(&mut out, (za + zb, wa + wb), &v.scale(c));
        }
    }
    out
}

/// The expansion of `(z - w)^n` in nonnegative powers of the second listed
/// variable when `n < 0`; a plain binomial expansion when `n >= 0`.  With
/// `swap` false this is the expansion in `w` (terms `z^(n-k) w^k`), with
/// `swap` true the expansion in `z` (terms `z^k w^(n-k)`, including the
/// overall sign `(-1)^n`).  `kmax` truncates the infinite direction.
pub fn binom_power(n: i64, swap: bool, kmax: i64) -> BTreeMap<(i64, i64), Scalar> {
    use num_traits::Zero;
    let mut out = BTreeMap::new();
    let top = if n >= 0 { n } else { kmax };
    for k in 0..=top {
        let c = scalar::binomial(&scalar::int(n), k as u32);
        if c.is_zero() {
            continue;
        }
        let mut sign = if k % 2 == 0 { scalar::int(1) } else { scalar::int(-1) };
        if swap && n.rem_euclid(2) == 1 {
            sign = -sign;
        }
        let key = if swap { (k, n - k) } else { (n - k, k) };
        out.insert(key, c * sign);
    }
    out
}

/// Extracts, for each `w`-degree in `[wlo, whi]`, the primed residue in `z`
/// of a series, routed state by state through the general one-dimensional
/// residue functional.
pub fn series_res_prime(s: &Series2, wlo: i64, whi: i64) -> Result<BTreeMap<i64, ToyVec>> {
    let mut out = BTreeMap::new();
    for wdeg in wlo..=whi {
        // regroup the z-dependence per basis state
        let mut per_state: BTreeMap<ToyState, BTreeMap<i64, Scalar>> = BTreeMap::new();
        for (&(za, wa), v) in s {
            if wa != wdeg {
                continue;
            }
            for (st, c) in &v.terms {
                per_state
                    .entry(st.clone())
                    .or_default()
                    .insert(za, c.clone());
            }
        }
        let mut acc = ToyVec::zero();
        for (st, coeffs) in per_state {
            let f = laurent_to_dist("z", &coeffs);
            let r = if f.is_zero() {
                scalar::int(0)
            } else {
                residue_prime_d1(&f, "z")?
            };
            acc.add_term(st, r);
        }
        out.insert(wdeg, acc);
    }
    Ok(out)
}

/// The residue-route n-th product: for each `w`-degree the primed residue of
/// `a(z)b(w)c iota_{z,w}(z-w)^n - b(w)a(z)c iota_{w,z}(z-w)^n`.
pub fn nth_product_residue_route(
    a: ToyField,
    b: ToyField,
    n: i64,
    c: &ToyVec,
    level: &Scalar,
    r: i64,
    wlo: i64,
    whi: i64,
) -> Result<BTreeMap<i64, ToyVec>> {
    let q1 = two_field_series(a, b, c, level, r);
    // b(w) a(z) c reuses the same routine with the roles of the degrees
    // exchanged: entry (A, B) must be b_{-B-1}(a_{-A-1} c).
    let q2t = two_field_series(b, a, c, level, r);
    let q2: Series2 = q2t.into_iter().map(|((bd, ad), v)| ((ad, bd), v)).collect();
    let kmax = 2 * r;
    let p1 = series_mul(&q1, &binom_power(n, false, kmax));
    let p2 = series_mul(&q2, &binom_power(n, true, kmax));
    let mut diff = p1;
    for (k, v) in &p2 {
        series_add_term(&mut diff, *k, &v.scale(&scalar::int(-1)));
    }
    series_res_prime(&diff, wlo, whi)
}

/// The derivative-route n-th product:
/// `(1/N!) d_z^N ((z-w)^(N+n+1) a(z) b(w) c) |_{z=w}`, requiring
/// `N + n + 1 >= 0` so the prefactor is polynomial.
pub fn nth_product_derivative_route(
    a: ToyField,
    b: ToyField,
    n: i64,
    nreg: i64,
    c: &ToyVec,
    level: &Scalar,
    r: i64,
    wlo: i64,
    whi: i64,
) -> Result<BTreeMap<i64, ToyVec>> {
    if nreg + n + 1 < 0 {
        return Err(CalcError::BadExponent(format!(
            "regularization order {nreg} leaves a negative power {}",
            nreg + n + 1
        )));
    }
    let q = two_field_series(a, b, c, level, r);
    let mut p = series_mul(&q, &binom_power(nreg + n + 1, false, 0));
    // N-fold z-derivative
    for _ in 0..nreg {
        let mut d = Series2::new();
        for (&(za, wa), v) in &p {
            if za != 0 {
                series_add_term(&mut d, (za - 1, wa), &v.scale(&scalar::int(za)));
            }
        }
        p = d;
    }
    let inv_fact = scalar::int(1) / scalar::factorial(nreg as u32);
    // Substitution z = w collects the anti-diagonals.  Product coefficients
    // whose computation touched the edge of the mode rectangle are partial
    // sums, so only the interior region (where every contributing entry of
    // the raw series was inside the rectangle) is included; the true series
    // vanishes there anyway once the rectangle is generous.
    let mut out = BTreeMap::new();
    for wdeg in wlo..=whi {
        let mut acc = ToyVec::zero();
        for (&(za, wa), v) in &p {
            if za + wa != wdeg {
                continue;
            }
            if za.abs() > r / 2 || wa.abs() > r / 2 {
                continue;
            }
            acc = acc.add(&v.scale(&inv_fact));
        }
        out.insert(wdeg, acc);
    }
    Ok(out)
}

/// Computes the n-th product of two mutually local toy fields through both
/// closed formulas and asserts they agree on the requested window.  Returns
/// the common value, keyed by `w`-degree.
pub fn d1_nth_product(
    a: ToyField,
    b: ToyField,
    n: i64,
    nreg: i64,
    c: &ToyVec,
    level: &Scalar,
    wlo: i64,
    whi: i64,
) -> Result<BTreeMap<i64, ToyVec>> {
    let r = 3 * (whi.abs().max(wlo.abs()) + c.max_energy() + n.abs() + nreg + 4);
    let res = nth_product_residue_route(a, b, n, c, level, r, wlo, whi)?;
    let der = nth_product_derivative_route(a, b, n, nreg, c, level, r, wlo, whi)?;
    for w in wlo..=whi {
        let x = res.get(&w).cloned().unwrap_or_else(ToyVec::zero);
        let y = der.get(&w).cloned().unwrap_or_else(ToyVec::zero);
        if x != y {
            return Err(CalcError::Incompatible(format!(
                "the two n-th product formulas disagree at w-degree {w}: {x:?} vs {y:?}"
            )));
        }
    }
    Ok(res)
}

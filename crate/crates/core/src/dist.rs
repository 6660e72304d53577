//! Formal distributions: sums of cells `(v1^2)^g1 ... (vk^2)^gk h(v1..vk)`
//! with half-integer exponents `g` and a coefficient polynomial `h` that is
//! harmonic in every variable.
//!
//! The exponents are stored doubled (`key[i] = 2 g_i`), so half-integers
//! stay in plain `i64` arithmetic.  Canonical form demands joint harmonicity
//! of every coefficient: any factor of `v^2` inside `h` is folded into the
//! exponent by harmonic decomposition.  The representation is therefore
//! unique and equality is structural within the certified knowledge region.
//!
//! Every distribution carries a [`Certificate`] describing where its cells
//! are exact and where the underlying object can be supported; see the
//! [`crate::window`] module.  All operations update the certificate
//! conservatively and prune stored cells that fall outside the certified
//! knowledge region.

use std::collections::BTreeMap;
use std::fmt;

use num::complex::Complex64;
use num::Zero;

use crate::error::{CalcError, Result};
use crate::harmonic;
use crate::poly::MultiPoly;
use crate::scalar::{self, Scalar};
use crate::window::{Bnd, Certificate, Extent, Ival};

/// Which band of integer powers of `v^2` to keep in [`FormalDist::part`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Part {
    /// Powers `n >= 0`: the regular part.
    Plus,
    /// Powers `n <= -D/2 - m`: the image of the inversion of the regular part.
    Minus,
    /// The middle band `-D/2 + 1 - m <= n <= -1`.
    Middle,
    /// Everything except the regular part.
    Singular,
}

/// A formal distribution in canonical form.
#[derive(Clone)]
pub struct FormalDist {
    pub dim: usize,
    /// Sorted variable names.
    pub vars: Vec<String>,
    /// Map from doubled exponent vectors (aligned with `vars`) to jointly
    /// harmonic coefficient polynomials.
    pub terms: BTreeMap<Vec<i64>, MultiPoly>,
    pub cert: Certificate,
}

/// One multi-homogeneous piece of a distribution: the doubled exponents,
/// the per-variable degrees `2g_i + m_i`, and the harmonic coefficient.
#[derive(Clone, Debug)]
pub struct Cell {
    pub key: Vec<i64>,
    pub degs: BTreeMap<String, i64>,
    pub poly: MultiPoly,
}

impl FormalDist {
    pub fn zero(dim: usize, vars: &[String]) -> Self {
        let mut vs = vars.to_vec();
        vs.sort();
        FormalDist {
            dim,
            vars: vs.clone(),
            terms: BTreeMap::new(),
            cert: Certificate::exact(Extent::empty(&vs)),
        }
    }

    /// Exact distribution from a plain polynomial.
    pub fn from_poly(dim: usize, vars: &[String], p: MultiPoly) -> Self {
        Self::monomial(dim, vars, &vec![0; vars.len()], p)
    }

    /// Exact distribution `(v1^2)^(key1/2) ... * p` from one raw cell.
    pub fn monomial(dim: usize, vars: &[String], key: &[i64], p: MultiPoly) -> Self {
        let mut vs = vars.to_vec();
        vs.sort();
        assert_eq!(key.len(), vs.len());
        let raw = vec![(key.to_vec(), p)];
        let mut d = assemble(dim, &vs, raw, Certificate::exact(Extent::full(&vs)));
        d.cert = Certificate::exact(d.stored_extent());
        d
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Tightest extent containing all stored cells.
    pub fn stored_extent(&self) -> Extent {
        let mut e = Extent::empty(&self.vars);
        for c in self.cells() {
            let mut cell = Extent::full(&self.vars);
            let mut tot = 0;
            for (v, d) in &c.degs {
                cell.var.insert(v.clone(), Ival::at(*d));
                tot += d;
            }
            cell.total = Ival::at(tot);
            e = e.hull(&cell);
        }
        e
    }

    /// Iterate over multi-homogeneous cells.
    pub fn cells(&self) -> Vec<Cell> {
        let mut out = Vec::new();
        for (key, poly) in &self.terms {
            for (degvec, part) in poly.multi_homogeneous_parts(&self.vars) {
                let degs: BTreeMap<String, i64> = self
                    .vars
                    .iter()
                    .zip(&degvec)
                    .zip(key)
                    .map(|((v, &m), &g)| (v.clone(), g + m as i64))
                    .collect();
                out.push(Cell { key: key.clone(), degs, poly: part });
            }
        }
        out
    }

    /// Smallest stored degree in `var`, if any cell is stored.
    pub fn min_var_degree(&self, var: &str) -> Option<i64> {
        self.cells().iter().map(|c| c.degs[var]).min()
    }

    /// Re-express over a superset of variables.
    pub fn with_vars(&self, vars: &[String]) -> FormalDist {
        let mut vs = vars.to_vec();
        for v in &self.vars {
            if !vs.contains(v) {
                vs.push(v.clone());
            }
        }
        vs.sort();
        if vs == self.vars {
            return self.clone();
        }
        let mut terms = BTreeMap::new();
        for (key, poly) in &self.terms {
            let mut k = vec![0i64; vs.len()];
            for (i, v) in self.vars.iter().enumerate() {
                let j = vs.iter().position(|u| u == v).unwrap();
                k[j] = key[i];
            }
            terms.insert(k, poly.clone());
        }
        // a distribution constant in a variable is fully known there and
        // supported exactly at degree zero
        let mut cert = self.cert.with_vars(&vs);
        for v in &vs {
            if !self.vars.contains(v) {
                cert.support.var.insert(v.clone(), Ival::at(0));
            }
        }
        FormalDist { dim: self.dim, vars: vs.clone(), terms, cert }
    }

    pub fn scale(&self, c: &Scalar) -> FormalDist {
        let mut out = self.clone();
        if c.is_zero() {
            out.terms.clear();
            return out;
        }
        for p in out.terms.values_mut() {
            *p = p.scale(c);
        }
        out
    }

    pub fn neg(&self) -> FormalDist {
        self.scale(&-scalar::int(1))
    }

    pub fn add(&self, other: &FormalDist) -> FormalDist {
        assert_eq!(self.dim, other.dim);
        let a = self.with_vars(&other.vars);
        let b = other.with_vars(&self.vars);
        let cert = a.cert.add(&b.cert);
        let mut raw: Vec<(Vec<i64>, MultiPoly)> =
            a.terms.iter().map(|(k, p)| (k.clone(), p.clone())).collect();
        raw.extend(b.terms.iter().map(|(k, p)| (k.clone(), p.clone())));
        assemble(self.dim, &a.vars, raw, cert)
    }

    pub fn sub(&self, other: &FormalDist) -> FormalDist {
        self.add(&other.neg())
    }

    /// Product of two distributions.  Cell pairs whose combined degrees fall
    /// outside the certified output knowledge are skipped.
    pub fn mul(&self, other: &FormalDist) -> FormalDist {
        assert_eq!(self.dim, other.dim);
        let a = self.with_vars(&other.vars);
        let b = other.with_vars(&self.vars);
        let cert = a.cert.mul(&b.cert);
        let know = &cert.knowledge;
        let ca = a.cells();
        let cb = b.cells();
        let mut raw = Vec::new();
        for x in &ca {
            for y in &cb {
                let degs: BTreeMap<String, i64> = x
                    .degs
                    .iter()
                    .map(|(v, d)| (v.clone(), d + y.degs[v]))
                    .collect();
                if !know.contains(&degs) {
                    continue;
                }
                let key: Vec<i64> = x.key.iter().zip(&y.key).map(|(u, v)| u + v).collect();
                raw.push((key, &x.poly * &y.poly));
            }
        }
        assemble(self.dim, &a.vars, raw, cert)
    }

    /// Multiply by an exact polynomial.
    pub fn mul_poly(&self, p: &MultiPoly) -> FormalDist {
        let mut vs = self.vars.clone();
        for v in &p.vars {
            if !vs.contains(v) {
                vs.push(v.clone());
            }
        }
        vs.sort();
        self.mul(&FormalDist::from_poly(self.dim, &vs, p.clone()))
    }

    /// Multiply by `(var^2)^(twok/2)`: a pure exponent shift.
    pub fn mul_vsq_halfpow(&self, var: &str, twok: i64) -> FormalDist {
        if twok == 0 {
            return self.clone();
        }
        let vi = self.vars.iter().position(|v| v == var).expect("unknown variable");
        let mut out = self.clone();
        out.terms = self
            .terms
            .iter()
            .map(|(k, p)| {
                let mut k2 = k.clone();
                k2[vi] += twok;
                (k2, p.clone())
            })
            .collect();
        out.cert = Certificate {
            knowledge: self.cert.knowledge.shift_var(var, twok),
            support: self.cert.support.shift_var(var, twok),
        };
        out
    }

    /// Multiply by the coordinate `var_alpha`, staying in canonical form.
    /// For each cell `(v^2)^g h` with `h` harmonic of degree `m` in `var`,
    /// the product is `(v^2)^g (A h) + (v^2)^(g+1) (d h) / (D + 2m - 2)`
    /// where `A h = v_a h - v^2 (d_a h) / (D + 2m - 2)` is again harmonic.
    pub fn mul_coord(&self, var: &str, alpha: usize) -> FormalDist {
        let d = self.dim;
        let vi = self.vars.iter().position(|v| v == var).expect("unknown variable");
        let coord = MultiPoly::coord(d, var, alpha);
        let vsq = MultiPoly::vsq(d, var);
        let mut raw = Vec::new();
        for (key, poly) in &self.terms {
            for (m, h) in poly.homogeneous_parts(var) {
                let dh = h.diff(var, alpha);
                if dh.is_zero() {
                    raw.push((key.clone(), &coord * &h));
                    continue;
                }
                let denom = scalar::int(d as i64 + 2 * m as i64 - 2);
                let inv = Scalar::from_integer(1.into()) / denom;
                let a_h = &(&coord * &h) - &(&vsq * &dh).scale(&inv);
                raw.push((key.clone(), a_h));
                let mut k2 = key.clone();
                k2[vi] += 2;
                raw.push((k2, dh.scale(&inv)));
            }
        }
        let cert = Certificate {
            knowledge: self.cert.knowledge.shift_var(var, 1),
            support: self.cert.support.shift_var(var, 1),
        };
        assemble(d, &self.vars, raw, cert)
    }

    /// Partial derivative with respect to coordinate `alpha` of `var`:
    /// `d_a ((v^2)^g h) = (v^2)^g d_a h + 2g (v^2)^(g-1) v_a h`.
    pub fn derive(&self, var: &str, alpha: usize) -> FormalDist {
        let vi = self.vars.iter().position(|v| v == var).expect("unknown variable");
        let cert = Certificate {
            knowledge: self.cert.knowledge.shift_var(var, -1),
            support: self.cert.support.shift_var(var, -1),
        };
        let mut acc = FormalDist::zero(self.dim, &self.vars);
        acc.cert = cert.clone();
        for (key, poly) in &self.terms {
            let mut one = FormalDist::zero(self.dim, &self.vars);
            one.cert = Certificate::exact(Extent::full(&self.vars));
            one.terms.insert(key.clone(), poly.clone());
            // (v^2)^g d_a h
            let dh = poly.diff(var, alpha);
            let mut part1 = Vec::new();
            if !dh.is_zero() {
                part1.push((key.clone(), dh));
            }
            // 2g (v^2)^(g-1) v_a h via the coordinate product
            let g2 = key[vi]; // doubled exponent, so 2g = key
            let mut sum = assemble(self.dim, &self.vars, part1, cert.clone());
            if g2 != 0 {
                let mut shifted = one.mul_vsq_halfpow(var, -2);
                shifted = shifted.mul_coord(var, alpha).scale(&scalar::int(g2));
                shifted.cert = cert.clone();
                sum = sum.add(&shifted);
            }
            acc = acc.add(&sum);
        }
        acc.cert = cert;
        acc
    }

    /// Laplacian in `var`.
    pub fn laplacian(&self, var: &str) -> FormalDist {
        let mut out = FormalDist::zero(self.dim, &self.vars);
        for a in 0..self.dim {
            out = out.add(&self.derive(var, a).derive(var, a));
        }
        out
    }

    /// Keep a band of integer powers of `var^2`.  Errors if any stored cell
    /// has a half-integer exponent in `var`.
    pub fn part(&self, var: &str, which: Part) -> Result<FormalDist> {
        let d = self.dim as i64;
        let vi = self.vars.iter().position(|v| v == var).expect("unknown variable");
        let mut raw = Vec::new();
        for (key, poly) in &self.terms {
            if key[vi] % 2 != 0 {
                return Err(CalcError::BadExponent(format!(
                    "part in {var} needs integer powers of {var}^2, found {}/2",
                    key[vi]
                )));
            }
            let n2 = key[vi]; // 2n
            for (m, h) in poly.homogeneous_parts(var) {
                let m = m as i64;
                let keep = match which {
                    Part::Plus => n2 >= 0,
                    Part::Minus => n2 <= -d - 2 * m,
                    Part::Middle => n2 > -d - 2 * m && n2 < 0,
                    Part::Singular => n2 < 0,
                };
                if keep {
                    raw.push((key.clone(), h));
                }
            }
        }
        Ok(assemble(self.dim, &self.vars, raw, self.cert.clone()))
    }

    /// Restrict to degrees `<= nmax` in `var`.  The result is exact above
    /// `nmax` (it is zero there by definition).
    pub fn degree_cutoff(&self, var: &str, nmax: i64) -> FormalDist {
        let mut raw = Vec::new();
        for c in self.cells() {
            if c.degs[var] <= nmax {
                raw.push((c.key, c.poly));
            }
        }
        let mut know = self.cert.knowledge.clone();
        let iv = know.ival(var);
        know.var.insert(var.to_string(), Ival::of(iv.lo, Bnd::PosInf));
        let mut supp = self.cert.support.clone();
        let sv = supp.ival(var);
        supp.var.insert(var.to_string(), sv.intersect(&Ival::of(Bnd::NegInf, Bnd::Int(nmax))));
        assemble(self.dim, &self.vars, raw, Certificate { knowledge: know, support: supp })
    }

    /// Conformal inversion in `var`: `(v^2)^g h_m` goes to
    /// `(v^2)^(-g-m) h_m`, negating the degree in `var`.
    pub fn invert(&self, var: &str) -> FormalDist {
        let vi = self.vars.iter().position(|v| v == var).expect("unknown variable");
        let mut raw = Vec::new();
        for (key, poly) in &self.terms {
            for (m, h) in poly.homogeneous_parts(var) {
                let mut k2 = key.clone();
                k2[vi] = -key[vi] - 2 * m as i64;
                raw.push((k2, h));
            }
        }
        // Degrees in `var` negate.  A box without a total band maps to a
        // box; recovering a sound total band in general needs care, so for
        // the knowledge region a nontrivial band is only handled in the
        // single-variable case (where total and var degree coincide) and is
        // dropped to the empty claim otherwise.
        let flip_support = |e: &Extent| {
            let mut e2 = e.clone();
            e2.var.insert(var.to_string(), e.ival(var).neg());
            e2.total = Ival::full();
            e2.tighten()
        };
        let flip_knowledge = |e: &Extent| {
            let mut e2 = e.clone();
            e2.var.insert(var.to_string(), e.ival(var).neg());
            if e.total == Ival::full() {
                e2.tighten()
            } else if self.vars.len() == 1 {
                e2.total = e.total.neg();
                e2.tighten()
            } else {
                Extent::empty(&self.vars)
            }
        };
        let cert = Certificate {
            knowledge: flip_knowledge(&self.cert.knowledge),
            support: flip_support(&self.cert.support),
        };
        assemble(self.dim, &self.vars, raw, cert)
    }

    /// Rename a variable that does not collide with an existing one.
    pub fn rename_var(&self, from: &str, to: &str) -> FormalDist {
        if from == to {
            return self.clone();
        }
        assert!(!self.vars.contains(&to.to_string()), "rename collision");
        let fi = self.vars.iter().position(|v| v == from).expect("unknown variable");
        let mut vars = self.vars.clone();
        vars[fi] = to.to_string();
        let mut order: Vec<usize> = (0..vars.len()).collect();
        order.sort_by(|&a, &b| vars[a].cmp(&vars[b]));
        let sorted: Vec<String> = order.iter().map(|&i| vars[i].clone()).collect();
        let terms = self
            .terms
            .iter()
            .map(|(k, p)| {
                let k2: Vec<i64> = order.iter().map(|&i| k[i]).collect();
                (k2, p.rename_var(from, to))
            })
            .collect();
        let ren = |e: &Extent| {
            let mut e2 = e.clone();
            if let Some(iv) = e2.var.remove(from) {
                e2.var.insert(to.to_string(), iv);
            }
            e2
        };
        FormalDist {
            dim: self.dim,
            vars: sorted,
            terms,
            cert: Certificate {
                knowledge: ren(&self.cert.knowledge),
                support: ren(&self.cert.support),
            },
        }
    }

    /// Substitute `var := -var`.
    pub fn negate_var(&self, var: &str) -> FormalDist {
        let mut out = self.clone();
        out.terms = self
            .terms
            .iter()
            .map(|(k, p)| (k.clone(), p.negate_var(var)))
            .collect();
        out
    }

    /// Substitute `from := to`, merging the two variables.  `max_pole` is a
    /// guard: the caller certifies that the assembled object has no support
    /// below degree `-max_pole` in `from`; stored cells violating the bound
    /// make the substitution structurally illegal.
    pub fn substitute(&self, from: &str, to: &str, max_pole: i64) -> Result<FormalDist> {
        for c in self.cells() {
            if c.degs[from] < -max_pole {
                return Err(CalcError::SubstitutionGuard(format!(
                    "cell of degree {} in {from} below the certified pole bound -{max_pole}",
                    c.degs[from]
                )));
            }
        }
        let fi = self.vars.iter().position(|v| v == from).expect("unknown variable");
        let cert = self.cert.merge_vars(from, to);
        let mut vars = self.vars.clone();
        vars.retain(|v| v != from);
        if !vars.contains(&to.to_string()) {
            vars.push(to.to_string());
            vars.sort();
        }
        let ti_new = vars.iter().position(|v| v == to).unwrap();
        let mut raw = Vec::new();
        for (key, poly) in &self.terms {
            let mut k2: Vec<i64> = Vec::with_capacity(vars.len());
            for (i, v) in self.vars.iter().enumerate() {
                if i == fi {
                    continue;
                }
                let _ = v;
                k2.push(key[i]);
            }
            if self.vars.iter().position(|v| v == to).is_none() {
                k2.insert(ti_new, 0);
            }
            k2[ti_new] += key[fi];
            raw.push((k2, poly.rename_var(from, to)));
        }
        Ok(assemble(self.dim, &vars, raw, cert))
    }

    /// The residue in `var`: the coefficient of `(var^2)^(-D/2)` evaluated
    /// at `var = 0`, as a distribution in the remaining variables.  Errors
    /// when the knowledge region does not certify that cell.
    pub fn residue(&self, var: &str) -> Result<FormalDist> {
        let d = self.dim as i64;
        let know_v = self.cert.knowledge.ival(var);
        if !know_v.contains(-d) {
            return Err(CalcError::WindowTooSmall(format!(
                "residue needs degree {} in {var} inside the knowledge region {:?}",
                -d, know_v
            )));
        }
        let vi = self.vars.iter().position(|v| v == var).expect("unknown variable");
        let vars: Vec<String> = self.vars.iter().filter(|v| *v != var).cloned().collect();
        let mut raw = Vec::new();
        for (key, poly) in &self.terms {
            if key[vi] != -d {
                continue;
            }
            let p0 = poly.eval_zero(var);
            if p0.is_zero() {
                continue;
            }
            let mut k2 = key.clone();
            k2.remove(vi);
            raw.push((k2, p0));
        }
        // only cells at degree exactly -D survive, so the support total
        // band shifts by exactly +D as well
        let cert = Certificate {
            knowledge: self.cert.knowledge.drop_var(var, Some(-d)),
            support: self.cert.support.drop_var(var, Some(-d)),
        };
        Ok(assemble(self.dim, &vars, raw, cert))
    }

    /// Residue of a distribution in a single variable: a scalar.
    pub fn residue_scalar(&self, var: &str) -> Result<Scalar> {
        let r = self.residue(var)?;
        if !r.cert.knowledge.contains(&BTreeMap::new()) {
            return Err(CalcError::WindowTooSmall(
                "residue value cell is outside the knowledge region".into(),
            ));
        }
        for (key, poly) in &r.terms {
            if key.iter().all(|&k| k == 0) {
                return Ok(poly.constant_term());
            }
        }
        Ok(Scalar::zero())
    }

    /// Structural equality of all cells inside `required`, which must be
    /// covered by both knowledge regions.
    pub fn agrees_with(&self, other: &FormalDist, required: &Extent) -> Result<bool> {
        let a = self.with_vars(&other.vars);
        let b = other.with_vars(&self.vars);
        for (name, c) in [("left", &a), ("right", &b)] {
            if !c.cert.knowledge.covers(required) {
                return Err(CalcError::WindowTooSmall(format!(
                    "{name} operand knows {:?}, required {:?}",
                    c.cert.knowledge, required
                )));
            }
        }
        let diff = a.sub(&b);
        Ok(diff.cells().iter().all(|c| !required.contains(&c.degs) || c.poly.is_zero()))
    }

    /// True when every stored cell inside `required` vanishes; errors when
    /// the knowledge region does not cover `required`.
    pub fn is_zero_within(&self, required: &Extent) -> Result<bool> {
        if !self.cert.knowledge.covers(required) {
            return Err(CalcError::WindowTooSmall(format!(
                "object knows {:?}, required {:?}",
                self.cert.knowledge, required
            )));
        }
        Ok(self.cells().iter().all(|c| !required.contains(&c.degs)))
    }

    /// Evaluate numerically on the real manifold parameterization
    /// `v = r exp(i zeta) u` with `|u| = 1`, using the branch
    /// `(v^2)^g = r^(2g) exp(2 i g zeta)`.
    pub fn eval_manifold(&self, points: &BTreeMap<String, (f64, f64, Vec<f64>)>) -> Result<Complex64> {
        let mut coords: BTreeMap<String, Vec<Complex64>> = BTreeMap::new();
        for (v, (r, zeta, u)) in points {
            let phase = Complex64::new(0.0, *zeta).exp() * *r;
            coords.insert(v.clone(), u.iter().map(|&x| phase * x).collect());
        }
        let mut acc = Complex64::new(0.0, 0.0);
        for (key, poly) in &self.terms {
            let mut factor = Complex64::new(1.0, 0.0);
            for (i, v) in self.vars.iter().enumerate() {
                if key[i] == 0 {
                    continue;
                }
                let (r, zeta, _) = points.get(v).ok_or_else(|| {
                    CalcError::Incompatible(format!("no manifold point for {v}"))
                })?;
                let g = key[i] as f64 / 2.0;
                factor *= Complex64::new(r.powf(2.0 * g), 0.0)
                    * (Complex64::new(0.0, 2.0 * g * zeta)).exp();
            }
            acc += factor * poly.eval_complex(&coords)?;
        }
        Ok(acc)
    }
}

/// Bring raw cells into canonical form: decompose coefficients variable by
/// variable, fold square factors into the exponents, merge, drop zeros, and
/// prune cells outside the certified knowledge region.
pub fn assemble(
    dim: usize,
    vars: &[String],
    raw: Vec<(Vec<i64>, MultiPoly)>,
    cert: Certificate,
) -> FormalDist {
    let mut work = raw;
    for (vi, var) in vars.iter().enumerate() {
        let mut next: BTreeMap<Vec<i64>, MultiPoly> = BTreeMap::new();
        for (key, poly) in work {
            if poly.is_zero() {
                continue;
            }
            for (n, h) in harmonic::decompose(&poly, var) {
                let mut k2 = key.clone();
                k2[vi] += 2 * n as i64;
                match next.entry(k2) {
                    std::collections::btree_map::Entry::Vacant(e) => {
                        e.insert(h);
                    }
                    std::collections::btree_map::Entry::Occupied(mut e) => {
                        *e.get_mut() = e.get() + &h;
                    }
                }
            }
        }
        work = next.into_iter().collect();
    }
    // prune to the knowledge region, splitting multi-homogeneous pieces
    let know = cert.knowledge.with_vars(vars);
    let mut terms: BTreeMap<Vec<i64>, MultiPoly> = BTreeMap::new();
    for (key, poly) in work {
        if poly.is_zero() {
            continue;
        }
        let mut kept = MultiPoly::zero(dim);
        for (degvec, part) in poly.multi_homogeneous_parts(vars) {
            let degs: BTreeMap<String, i64> = vars
                .iter()
                .zip(&degvec)
                .zip(&key)
                .map(|((v, &m), &g)| (v.clone(), g + m as i64))
                .collect();
            if know.contains(&degs) {
                kept = &kept + &part;
            }
        }
        if !kept.is_zero() {
            match terms.entry(key) {
                std::collections::btree_map::Entry::Vacant(e) => {
                    e.insert(kept);
                }
                std::collections::btree_map::Entry::Occupied(mut e) => {
                    *e.get_mut() = e.get() + &kept;
                }
            }
        }
    }
    terms.retain(|_, p| !p.is_zero());
    FormalDist { dim, vars: vars.to_vec(), terms, cert }
}

impl fmt::Debug for FormalDist {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for FormalDist {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (key, poly) in &self.terms {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            for (i, v) in self.vars.iter().enumerate() {
                if key[i] != 0 {
                    if key[i] % 2 == 0 {
                        write!(f, "({v}^2)^{{{}}} ", key[i] / 2)?;
                    } else {
                        write!(f, "({v}^2)^{{{}/2}} ", key[i])?;
                    }
                }
            }
            write!(f, "[{poly}]")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::int;

    fn vars(vs: &[&str]) -> Vec<String> {
        vs.iter().map(|s| s.to_string()).collect()
    }

    /// `(z^2)^{twog/2}` in one variable.
    fn zsq_pow(d: usize, twog: i64) -> FormalDist {
        FormalDist::monomial(d, &vars(&["z"]), &[twog], MultiPoly::one(d))
    }

    #[test]
    fn canonical_form_folds_squares() {
        // the raw cell (z^2)^{-1} * (z.z) must collapse to the constant 1
        let d = 4;
        let f = FormalDist::monomial(d, &vars(&["z"]), &[-2], MultiPoly::vsq(d, "z"));
        let g = FormalDist::from_poly(d, &vars(&["z"]), MultiPoly::one(d));
        assert_eq!(f.terms, g.terms);
    }

    #[test]
    fn laplacian_of_square_power_cells() {
        // Delta (z^2)^g h_m = 2g(2g + 2m + D - 2) (z^2)^(g-1) h_m, so the
        // result vanishes exactly when g = 0 or 2g = 2 - D - 2m.
        let d = 4;
        for twog in [-8i64, -6, -4, -3, -2, -1, 1, 2, 4] {
            let f = zsq_pow(d, twog);
            let lap = f.laplacian("z");
            let c = int(twog) * int(twog + d as i64 - 2);
            let expect = zsq_pow(d, twog - 2).scale(&c);
            assert_eq!(lap.terms, expect.terms, "twog={twog}");
        }
        // harmonic cases: g = 0 and (z^2)^(1-D/2), and with m = 1:
        // (z^2)^(-D/2) z_a
        assert!(zsq_pow(d, 0).laplacian("z").is_zero());
        assert!(zsq_pow(d, 2 - d as i64).laplacian("z").is_zero());
        let f = FormalDist::monomial(d, &vars(&["z"]), &[-(d as i64)], MultiPoly::coord(d, "z", 1));
        assert!(f.laplacian("z").is_zero());
    }

    #[test]
    fn coordinate_product_matches_polynomial_route() {
        // mul_coord implements the module structure cell by cell; the naive
        // route multiplies the coefficient polynomial and re-canonicalizes.
        let d = 4;
        let samples = vec![
            zsq_pow(d, -(d as i64)),
            zsq_pow(d, -3),
            FormalDist::monomial(d, &vars(&["z"]), &[-6], MultiPoly::coord(d, "z", 0)),
            FormalDist::monomial(
                d,
                &vars(&["z", "w"]),
                &[-4, 2],
                &MultiPoly::dot(d, "z", "w") * &MultiPoly::coord(d, "z", 2),
            ),
        ];
        for f in samples {
            for alpha in 0..d {
                let route1 = f.mul_coord("z", alpha);
                let route2 = f.mul_poly(&MultiPoly::coord(d, "z", alpha));
                assert_eq!(route1.terms, route2.terms, "alpha={alpha}");
            }
        }
    }

    #[test]
    fn derivative_satisfies_leibniz_on_cells() {
        // d_a ((z^2)^g) = 2g (z^2)^(g-1) z_a
        let d = 4;
        let f = zsq_pow(d, -2);
        let df = f.derive("z", 0);
        let expect = FormalDist::monomial(d, &vars(&["z"]), &[-4], MultiPoly::coord(d, "z", 0))
            .scale(&int(-2));
        assert_eq!(df.terms, expect.terms);
        // mixed partials commute
        let g = FormalDist::monomial(d, &vars(&["z"]), &[-5], MultiPoly::coord(d, "z", 3));
        let ab = g.derive("z", 0).derive("z", 1);
        let ba = g.derive("z", 1).derive("z", 0);
        assert_eq!(ab.terms, ba.terms);
    }

    #[test]
    fn parts_partition() {
        let d = 4;
        // build a distribution with cells in all three bands
        let mut f = zsq_pow(d, -2 * (d as i64)); // deep pole: minus part
        f = f.add(&zsq_pow(d, -2)); // middle band (n = -1, m = 0)
        f = f.add(&zsq_pow(d, 4)); // regular
        f = f.add(&FormalDist::monomial(
            d,
            &vars(&["z"]),
            &[-(d as i64)],
            MultiPoly::coord(d, "z", 0),
        )); // n = -D/2, m = 1: middle band
        let plus = f.part("z", Part::Plus).unwrap();
        let minus = f.part("z", Part::Minus).unwrap();
        let middle = f.part("z", Part::Middle).unwrap();
        let back = plus.add(&minus).add(&middle);
        assert_eq!(back.terms, f.terms);
        assert_eq!(plus.terms.len(), 1);
        assert_eq!(minus.terms.len(), 1);
        assert_eq!(middle.terms.len(), 2);
        let sing = f.part("z", Part::Singular).unwrap();
        assert_eq!(sing.terms, minus.add(&middle).terms);
        // half-integer exponents refuse
        assert!(zsq_pow(d, -3).part("z", Part::Plus).is_err());
    }

    #[test]
    fn inversion_is_involutive_and_shifts_exponents() {
        let d = 4;
        let f = FormalDist::monomial(d, &vars(&["z"]), &[-6], MultiPoly::coord(d, "z", 1));
        let inv = f.invert("z");
        // (z^2)^{-3} z_1 -> (z^2)^{3 - 1} z_1
        let expect = FormalDist::monomial(d, &vars(&["z"]), &[4], MultiPoly::coord(d, "z", 1));
        assert_eq!(inv.terms, expect.terms);
        assert_eq!(inv.invert("z").terms, f.terms);
    }

    #[test]
    fn residue_basic_values() {
        let d = 4;
        // Res (z^2)^{-D/2} = 1
        assert_eq!(zsq_pow(d, -(d as i64)).residue_scalar("z").unwrap(), int(1));
        // Res (z^2)^g = 0 for other exponents in range
        for twog in [-(d as i64) - 2, -(d as i64) + 1, -2, 0, 2] {
            assert_eq!(zsq_pow(d, twog).residue_scalar("z").unwrap(), int(0), "twog={twog}");
        }
        // Res (z^2)^{-D/2} z_a = 0 (no harmonic degree-zero component)
        let f = FormalDist::monomial(d, &vars(&["z"]), &[-(d as i64)], MultiPoly::coord(d, "z", 0));
        assert_eq!(f.residue_scalar("z").unwrap(), int(0));
        // residue commutes with derivatives: Res d_a F = 0
        let g = FormalDist::monomial(d, &vars(&["z"]), &[2 - d as i64], MultiPoly::coord(d, "z", 2));
        for a in 0..d {
            assert_eq!(g.derive("z", a).residue_scalar("z").unwrap(), int(0));
        }
    }

    #[test]
    fn substitution_merges_variables() {
        let d = 2;
        // (z^2)^{-1} (w^2)^{2}, substitute w := z
        let f = FormalDist::monomial(d, &vars(&["w", "z"]), &[4, -2], MultiPoly::one(d));
        let g = f.substitute("w", "z", 10).unwrap();
        assert_eq!(g.terms, zsq_pow(d, 2).terms);
        // guard triggers on deep poles
        let h = FormalDist::monomial(d, &vars(&["w", "z"]), &[-8, 0], MultiPoly::one(d));
        assert!(h.substitute("w", "z", 2).is_err());
    }

    #[test]
    fn cutoff_certifies_above() {
        let d = 4;
        let f = zsq_pow(d, 2).add(&zsq_pow(d, 6));
        let cut = f.degree_cutoff("z", 3);
        assert_eq!(cut.terms, zsq_pow(d, 2).terms);
        assert!(cut.cert.knowledge.ival("z").hi == Bnd::PosInf);
        // cutoffs commute as projections
        let c2 = f.degree_cutoff("z", 5).degree_cutoff("z", 3);
        assert_eq!(c2.terms, cut.terms);
    }
}

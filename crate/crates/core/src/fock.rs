//! The vertex algebra of the free massless scalar field.
//!
//! States are finite multisets of harmonic momentum polynomials: classes in
//! the polynomial ring of a momentum variable `p` modulo the ideal generated
//! by `p^2`, each class represented by its harmonic part.  The field of a
//! one-particle state `[f]` creates a new slot through the expansion of
//! `f(p) e^{z.p}` and annihilates existing slots through contraction against
//! the kernel `(z^2)^{1-D/2}`.  Composite fields are normal ordered:
//! contractions between the constituents of a single field are removed,
//! while every injective matching of constituents to the target's slots
//! contributes a product of contraction kernels.
//!
//! Only even dimensions `D > 2` are supported: at `D = 2` the contraction
//! kernel degenerates to a constant and the construction does not make sense
//! in the form implemented here, and at odd `D` the kernel is not a cell of
//! the distribution spaces used by the rest of the crate.

use std::collections::BTreeMap;

use num::{One, Zero};

use crate::dist::{assemble, FormalDist};
use crate::error::{CalcError, Result};
use crate::harmonic::harmonic_part;
use crate::poly::MultiPoly;
use crate::scalar::{self, Scalar};
use crate::window::{Bnd, Certificate, Extent, Ival};

/// Name of the momentum variable used inside slot polynomials.
pub const PVAR: &str = "p";

/// Even dimensions above two only.
pub fn check_dim(d: usize) -> Result<()> {
    if d % 2 != 0 || d <= 2 {
        return Err(CalcError::Dimension(format!(
            "the free scalar construction needs an even dimension above two, got {d}"
        )));
    }
    Ok(())
}

/// A slot of a Fock state: an element of the fixed basis of harmonic
/// polynomials in `p`.  States are multisets of basis slots, and arbitrary
/// momentum polynomials enter only through linear expansion over the basis,
/// so that linear combinations of slots are represented faithfully.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MomentumPoly(pub MultiPoly);

/// The canonical representative of the class of `f` modulo `p^2`.
pub fn class_rep(f: &MultiPoly) -> MultiPoly {
    harmonic_part(f, PVAR)
}

static BASIS_CACHE: once_cell::sync::Lazy<
    std::sync::Mutex<std::collections::HashMap<(usize, u32), Vec<MultiPoly>>>,
> = once_cell::sync::Lazy::new(|| std::sync::Mutex::new(std::collections::HashMap::new()));

/// Exponent vectors of degree `m` in `d` coordinates whose last entry is at
/// most one.  The harmonic projections of the corresponding monomials form
/// a basis of the harmonic polynomials of degree `m`.
fn basis_exponents(d: usize, m: u32) -> Vec<Vec<u32>> {
    let mut out = Vec::new();
    let mut cur = vec![0u32; d];
    fn rec(d: usize, m: u32, i: usize, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if i == d - 1 {
            if m <= 1 {
                cur[i] = m;
                out.push(cur.clone());
                cur[i] = 0;
            }
            return;
        }
        for e in 0..=m {
            cur[i] = e;
            rec(d, m - e, i + 1, cur, out);
        }
        cur[i] = 0;
    }
    rec(d, m, 0, &mut cur, &mut out);
    out
}

fn monomial_of(d: usize, var: &str, exps: &[u32]) -> MultiPoly {
    let mut q = MultiPoly::one(d);
    for (a, &e) in exps.iter().enumerate() {
        for _ in 0..e {
            q = &q * &MultiPoly::coord(d, var, a);
        }
    }
    q
}

/// The basis of harmonic polynomials of degree `m` in `p`.
fn harmonic_basis(d: usize, m: u32) -> Vec<MultiPoly> {
    if let Some(b) = BASIS_CACHE.lock().unwrap().get(&(d, m)) {
        return b.clone();
    }
    let b: Vec<MultiPoly> = basis_exponents(d, m)
        .iter()
        .map(|e| harmonic_part(&monomial_of(d, PVAR, e), PVAR))
        .collect();
    BASIS_CACHE.lock().unwrap().insert((d, m), b.clone());
    b
}

fn mono_coeff(f: &MultiPoly, exps: &[u32]) -> Scalar {
    if f.vars.is_empty() {
        if exps.iter().all(|&e| e == 0) {
            return f.constant_term();
        }
        return Scalar::zero();
    }
    f.terms.get(&crate::poly::Mono(exps.to_vec())).cloned().unwrap_or_else(Scalar::zero)
}

/// Expand the class of `f` over the harmonic basis.  A harmonic polynomial
/// is determined by its coefficients on the monomials with last exponent at
/// most one, so the coordinates solve a square exact linear system per
/// degree.
pub fn basis_expand(d: usize, f: &MultiPoly) -> Vec<(Scalar, MomentumPoly)> {
    let rep = class_rep(f);
    let mut out = Vec::new();
    for (m, fm) in rep.homogeneous_parts(PVAR) {
        let exps = basis_exponents(d, m);
        let basis = harmonic_basis(d, m);
        let n = exps.len();
        let mut mat: Vec<Vec<Scalar>> = (0..n)
            .map(|r| {
                let mut row: Vec<Scalar> =
                    basis.iter().map(|b| mono_coeff(b, &exps[r])).collect();
                row.push(mono_coeff(&fm, &exps[r]));
                row
            })
            .collect();
        // exact Gaussian elimination with the right-hand side appended
        for col in 0..n {
            let piv = (col..n).find(|&r| !mat[r][col].is_zero()).expect("singular basis");
            mat.swap(col, piv);
            let inv = Scalar::one() / mat[col][col].clone();
            for x in mat[col].iter_mut() {
                *x *= inv.clone();
            }
            for r in 0..n {
                if r != col && !mat[r][col].is_zero() {
                    let fac = mat[r][col].clone();
                    for c in col..=n {
                        let t = mat[col][c].clone() * fac.clone();
                        mat[r][c] -= t;
                    }
                }
            }
        }
        let mut check = MultiPoly::zero(d);
        for (i, b) in basis.iter().enumerate() {
            let c = mat[i][n].clone();
            if !c.is_zero() {
                check = &check + &b.scale(&c);
                out.push((c, MomentumPoly(b.clone())));
            }
        }
        debug_assert!((&check - &fm).is_zero());
    }
    out
}

/// A sorted multiset of slots.  The vacuum is the empty state.
pub type FockState = Vec<MomentumPoly>;

fn sorted(mut s: FockState) -> FockState {
    s.sort();
    s
}

/// A finite rational combination of Fock states.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FockVector {
    pub dim: usize,
    pub terms: BTreeMap<FockState, Scalar>,
}

impl FockVector {
    pub fn zero(dim: usize) -> Self {
        FockVector { dim, terms: BTreeMap::new() }
    }

    pub fn vacuum(dim: usize) -> Self {
        let mut v = Self::zero(dim);
        v.terms.insert(vec![], Scalar::one());
        v
    }

    /// The vector whose slots are the classes of the given polynomials,
    /// expanded multilinearly over the basis slots.  A slot whose class
    /// vanishes kills the whole vector.
    pub fn from_polys(dim: usize, polys: &[MultiPoly]) -> Self {
        let mut states: Vec<(Scalar, FockState)> = vec![(Scalar::one(), vec![])];
        for f in polys {
            let pieces = basis_expand(dim, f);
            let mut next = Vec::new();
            for (c, s) in &states {
                for (c2, mp) in &pieces {
                    let mut s2 = s.clone();
                    s2.push(mp.clone());
                    next.push((c.clone() * c2.clone(), s2));
                }
            }
            states = next;
        }
        let mut v = Self::zero(dim);
        for (c, s) in states {
            v.add_term(sorted(s), c);
        }
        v
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn add_term(&mut self, state: FockState, c: Scalar) {
        if c.is_zero() {
            return;
        }
        let cur = self.terms.remove(&state).unwrap_or_else(Scalar::zero) + c;
        if !cur.is_zero() {
            self.terms.insert(state, cur);
        }
    }

    pub fn add(&self, other: &FockVector) -> FockVector {
        let mut out = self.clone();
        for (s, c) in &other.terms {
            out.add_term(s.clone(), c.clone());
        }
        out
    }

    pub fn scale(&self, c: &Scalar) -> FockVector {
        let mut out = Self::zero(self.dim);
        for (s, v) in &self.terms {
            out.add_term(s.clone(), v.clone() * c.clone());
        }
        out
    }

    pub fn sub(&self, other: &FockVector) -> FockVector {
        self.add(&other.scale(&-Scalar::one()))
    }
}

/// A combination of Fock states with distribution-valued coefficients, the
/// result of applying fields to a vector.  All stored distributions share
/// the ambient variable list.
#[derive(Clone)]
pub struct StateDist {
    pub dim: usize,
    pub vars: Vec<String>,
    pub terms: BTreeMap<FockState, FormalDist>,
    /// Slot-degree horizon: states whose every slot has degree at most this
    /// bound carry complete coefficients; higher states may have been
    /// dropped by truncation and are uncertified.
    pub slot_hi: Bnd,
    /// Upper bound on the particle number of any state, including states
    /// beyond the horizon that were dropped.
    pub max_particles: Bnd,
}

impl StateDist {
    pub fn zero(dim: usize, vars: &[String]) -> Self {
        let mut vs = vars.to_vec();
        vs.sort();
        StateDist {
            dim,
            vars: vs,
            terms: BTreeMap::new(),
            slot_hi: Bnd::PosInf,
            max_particles: Bnd::Int(0),
        }
    }

    /// Whether every slot of `state` lies at or below the horizon.
    pub fn certifies_state(&self, state: &FockState) -> bool {
        state
            .iter()
            .all(|mp| Bnd::Int(mp.0.total_degree().unwrap_or(0) as i64) <= self.slot_hi)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.values().all(|f| f.is_zero())
    }

    pub fn add_term(&mut self, state: FockState, fd: &FormalDist) {
        let fd = fd.with_vars(&self.vars);
        self.max_particles = self.max_particles.max(Bnd::Int(state.len() as i64));
        match self.terms.entry(state) {
            std::collections::btree_map::Entry::Vacant(e) => {
                e.insert(fd);
            }
            std::collections::btree_map::Entry::Occupied(mut e) => {
                *e.get_mut() = e.get().add(&fd);
            }
        }
    }

    pub fn add(&self, other: &StateDist) -> StateDist {
        let mut out = self.with_vars(&merged(&self.vars, &other.vars));
        for (s, fd) in &other.terms {
            out.add_term(s.clone(), fd);
        }
        out.slot_hi = self.slot_hi.min(other.slot_hi);
        out.max_particles = self.max_particles.max(other.max_particles);
        out
    }

    pub fn sub(&self, other: &StateDist) -> StateDist {
        self.add(&other.scale(&-Scalar::one()))
    }

    pub fn scale(&self, c: &Scalar) -> StateDist {
        self.map(|fd| fd.scale(c))
    }

    pub fn with_vars(&self, vars: &[String]) -> StateDist {
        let mut out = StateDist::zero(self.dim, vars);
        out.slot_hi = self.slot_hi;
        out.max_particles = self.max_particles;
        for (s, fd) in &self.terms {
            out.add_term(s.clone(), fd);
        }
        out
    }

    /// Apply a distribution transformation coefficient-wise.
    pub fn map<F: Fn(&FormalDist) -> FormalDist>(&self, f: F) -> StateDist {
        let mut out = StateDist::zero(self.dim, &self.vars);
        out.slot_hi = self.slot_hi;
        out.max_particles = self.max_particles;
        for (s, fd) in &self.terms {
            out.add_term(s.clone(), &f(fd));
        }
        out
    }

    /// Apply a fallible distribution transformation coefficient-wise; the
    /// result adopts the variables of the transformed coefficients.
    pub fn try_map<F: Fn(&FormalDist) -> Result<FormalDist>>(&self, f: F) -> Result<StateDist> {
        let mut pieces = Vec::new();
        let mut vars = Vec::new();
        for (s, fd) in &self.terms {
            let g = f(fd)?;
            vars = merged(&vars, &g.vars);
            pieces.push((s.clone(), g));
        }
        let mut out = StateDist::zero(self.dim, &vars);
        out.slot_hi = self.slot_hi;
        out.max_particles = self.max_particles;
        for (s, g) in pieces {
            out.add_term(s, &g);
        }
        Ok(out)
    }

    /// Coefficient-wise equality of the degree cells inside `required`,
    /// which every coefficient must certify on both sides.
    pub fn agrees_with(&self, other: &StateDist, required: &Extent) -> Result<bool> {
        let vars = merged(&self.vars, &other.vars);
        let a = self.with_vars(&vars);
        let b = other.with_vars(&vars);
        let mut states: Vec<FockState> = a.terms.keys().cloned().collect();
        for s in b.terms.keys() {
            if !states.contains(s) {
                states.push(s.clone());
            }
        }
        let hor = a.slot_hi.min(b.slot_hi);
        let z = FormalDist::zero(self.dim, &vars);
        for s in states {
            if !s.iter().all(|mp| Bnd::Int(mp.0.total_degree().unwrap_or(0) as i64) <= hor) {
                continue; // beyond the certified state horizon of a side
            }
            let fa = a.terms.get(&s).unwrap_or(&z);
            let fb = b.terms.get(&s).unwrap_or(&z);
            if !fa.agrees_with(fb, required)? {
                return Ok(false);
            }
        }
        Ok(true)
    }

    pub fn is_zero_within(&self, required: &Extent) -> Result<bool> {
        for (s, fd) in &self.terms {
            if !self.certifies_state(s) {
                continue;
            }
            if !fd.is_zero_within(required)? {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// The scalar part: states whose coefficient has a constant cell, read
    /// off at degree zero.  Only meaningful when all coefficients are
    /// regular at the origin, as after a residue.
    pub fn constant_vector(&self) -> FockVector {
        let mut v = FockVector::zero(self.dim);
        for (s, fd) in &self.terms {
            let mut c = Scalar::zero();
            for cell in fd.cells() {
                if cell.degs.values().all(|&d| d == 0) {
                    c += cell.poly.constant_term();
                }
            }
            v.add_term(s.clone(), c);
        }
        v
    }
}

fn merged(a: &[String], b: &[String]) -> Vec<String> {
    let mut vs = a.to_vec();
    for v in b {
        if !vs.contains(v) {
            vs.push(v.clone());
        }
    }
    vs.sort();
    vs
}

/// Group the terms of a mixed polynomial by their monomial in `var`,
/// returning pairs (monomial in `var`, cofactor free of `var`).
fn split_by_var(p: &MultiPoly, var: &str) -> Vec<(MultiPoly, MultiPoly)> {
    let d = p.dim;
    let vi = match p.vars.iter().position(|v| v == var) {
        Some(i) => i,
        None => {
            if p.is_zero() {
                return vec![];
            }
            return vec![(MultiPoly::one(d), p.clone())];
        }
    };
    let mut groups: BTreeMap<Vec<u32>, MultiPoly> = BTreeMap::new();
    for (mono, c) in &p.terms {
        let exps = mono.0[vi * d..(vi + 1) * d].to_vec();
        let mut rest = MultiPoly::constant(d, c.clone());
        for (j, v) in p.vars.iter().enumerate() {
            if j == vi {
                continue;
            }
            for a in 0..d {
                for _ in 0..mono.0[j * d + a] {
                    rest = &rest * &MultiPoly::coord(d, v, a);
                }
            }
        }
        match groups.entry(exps) {
            std::collections::btree_map::Entry::Vacant(e) => {
                e.insert(rest);
            }
            std::collections::btree_map::Entry::Occupied(mut e) => {
                *e.get_mut() = e.get() + &rest;
            }
        }
    }
    groups
        .into_iter()
        .filter(|(_, q)| !q.is_zero())
        .map(|(e, q)| {
            let mut zm = MultiPoly::one(d);
            for (a, &k) in e.iter().enumerate() {
                for _ in 0..k {
                    zm = &zm * &MultiPoly::coord(d, var, a);
                }
            }
            (zm, q)
        })
        .collect()
}

/// Apply the constant-coefficient differential operator `f(sign * d/dv)` to
/// a distribution, where `f` is a polynomial in `p`.
fn apply_diff(fd: &FormalDist, f: &MultiPoly, var: &str, sign: i64) -> FormalDist {
    let d = fd.dim;
    let mut out = FormalDist::zero(d, &fd.vars);
    let pi = f.vars.iter().position(|v| v == PVAR);
    for (mono, c) in &f.terms {
        let mut cur = fd.clone();
        let mut s = c.clone();
        if let Some(pi) = pi {
            for a in 0..d {
                for _ in 0..mono.0[pi * d + a] {
                    cur = cur.derive(var, a);
                    if sign < 0 {
                        s = -s;
                    }
                }
            }
        }
        out = out.add(&cur.scale(&s));
    }
    out
}

/// The contraction of the fields of one-particle states `[f]` and `[g]`:
/// `f(d/dv) g(-d/dv) (v^2)^{1-D/2}`, an exact distribution in `var`.
pub fn contraction(d: usize, f: &MultiPoly, g: &MultiPoly, var: &str) -> FormalDist {
    let base =
        FormalDist::monomial(d, &[var.to_string()], &[2 - d as i64], MultiPoly::one(d));
    let t = apply_diff(&base, g, var, -1);
    apply_diff(&t, f, var, 1)
}

/// Creation kernels of the field of `[f]`: the expansion of `f(p) e^{v.p}`
/// modulo `p^2`, grouped by the monic momentum polynomial of the created
/// slot, truncated to coefficients of degree at most `hi` in `var`.
fn creation_kernels(
    d: usize,
    f: &MultiPoly,
    var: &str,
    hi: i64,
) -> Vec<(MomentumPoly, FormalDist)> {
    let vs = vec![var.to_string()];
    let dot = MultiPoly::dot(d, var, PVAR);
    let mut acc: BTreeMap<MomentumPoly, MultiPoly> = BTreeMap::new();
    let mut zpk = f.clone();
    let mut k = 0i64;
    while k <= hi.max(0) {
        let g = class_rep(&zpk).scale(&(Scalar::one() / scalar::factorial(k as u32)));
        for (zm, pp) in split_by_var(&g, var) {
            for (c, mp) in basis_expand(d, &pp) {
                let piece = zm.scale(&c);
                match acc.entry(mp) {
                    std::collections::btree_map::Entry::Vacant(e) => {
                        e.insert(piece);
                    }
                    std::collections::btree_map::Entry::Occupied(mut e) => {
                        *e.get_mut() = e.get() + &piece;
                    }
                }
            }
        }
        zpk = &zpk * &dot;
        k += 1;
    }
    // Each state's coefficient is homogeneous of one degree and exact;
    // the truncation only drops the states of higher degree wholesale,
    // which the caller records as a slot-degree horizon.
    acc.into_iter()
        .filter(|(_, q)| !q.is_zero())
        .map(|(mp, q)| {
            let parts = q.homogeneous_parts(var);
            let dlo = *parts.keys().next().expect("nonzero coefficient") as i64;
            let dhi = *parts.keys().next_back().unwrap() as i64;
            let mut supp = Extent::full(&vs);
            supp.var.insert(var.to_string(), Ival::of(Bnd::Int(dlo), Bnd::Int(dhi)));
            supp.total = Ival::of(Bnd::Int(dlo), Bnd::Int(dhi));
            let fd = assemble(d, &vs, vec![(vec![0], q)], Certificate::exact(supp));
            (mp, fd)
        })
        .collect()
}

/// Apply the normal-ordered field of the pure state with slots `afs` to a
/// single target state, keeping coefficients of degree at most `hi` in
/// `var`.  Sums over the subsets of constituents that annihilate and over
/// the injective matchings to the target's slots.
fn wick_state(
    d: usize,
    afs: &[MomentumPoly],
    var: &str,
    hi: i64,
    state: &FockState,
) -> StateDist {
    let n = afs.len();
    let vs = vec![var.to_string()];
    let mut out = StateDist::zero(d, &vs);
    let kernels: Vec<Vec<(MomentumPoly, FormalDist)>> =
        afs.iter().map(|f| creation_kernels(d, &f.0, var, hi)).collect();
    // Each assignment maps constituent i to Some(slot) or None (creation).
    let mut assignments: Vec<Vec<Option<usize>>> = vec![vec![]];
    for _ in 0..n {
        let mut next = Vec::new();
        for a in &assignments {
            let mut choices: Vec<Option<usize>> = vec![None];
            for j in 0..state.len() {
                if !a.contains(&Some(j)) {
                    choices.push(Some(j));
                }
            }
            for c in choices {
                let mut b = a.clone();
                b.push(c);
                next.push(b);
            }
        }
        assignments = next;
    }
    for a in &assignments {
        let mut coeff = FormalDist::from_poly(d, &vs, MultiPoly::one(d));
        let mut remaining: Vec<bool> = vec![true; state.len()];
        for (i, c) in a.iter().enumerate() {
            if let Some(j) = c {
                coeff = coeff.mul(&contraction(d, &afs[i].0, &state[*j].0, var));
                remaining[*j] = false;
            }
        }
        let base: FockState = state
            .iter()
            .zip(&remaining)
            .filter(|(_, keep)| **keep)
            .map(|(s, _)| s.clone())
            .collect();
        let mut partial = StateDist::zero(d, &vs);
        partial.add_term(base, &coeff);
        for (i, c) in a.iter().enumerate() {
            if c.is_none() {
                let mut next = StateDist::zero(d, &vs);
                for (mp, kd) in &kernels[i] {
                    for (s, fd) in &partial.terms {
                        let mut s2 = s.clone();
                        s2.push(mp.clone());
                        next.add_term(sorted(s2), &fd.mul(kd));
                    }
                }
                partial = next;
            }
        }
        out = out.add(&partial);
    }
    out
}

/// The vertex operator of `a` applied to `v`: the state-valued distribution
/// `Y(a, var) v`, with coefficients certified up to degree `hi` in `var`.
pub fn apply_y(
    d: usize,
    a: &FockVector,
    var: &str,
    hi: i64,
    v: &FockVector,
) -> Result<StateDist> {
    check_dim(d)?;
    let mut out = StateDist::zero(d, &[var.to_string()]);
    for (sa, ca) in &a.terms {
        for (sv, cv) in &v.terms {
            let w = wick_state(d, sa, var, hi, sv).scale(&(ca.clone() * cv.clone()));
            out = out.add(&w);
        }
    }
    // Creation orders above `hi` are dropped, so states with a slot of
    // degree above `hi` may be missing contributions entirely.
    out.slot_hi = Bnd::Int(hi);
    let na = a.terms.keys().map(|s| s.len()).max().unwrap_or(0) as i64;
    let nv = v.terms.keys().map(|s| s.len()).max().unwrap_or(0) as i64;
    out.max_particles = Bnd::Int(na + nv);
    Ok(out)
}

/// The free scalar field itself: the vertex operator of the one-particle
/// state `[1]`.
pub fn phi_apply(d: usize, v: &FockVector, var: &str, hi: i64) -> Result<StateDist> {
    phi_poly_apply(d, &MultiPoly::one(d), v, var, hi)
}

/// The vertex operator of the one-particle state `[f]`.
pub fn phi_poly_apply(
    d: usize,
    f: &MultiPoly,
    v: &FockVector,
    var: &str,
    hi: i64,
) -> Result<StateDist> {
    apply_y(d, &FockVector::from_polys(d, &[f.clone()]), var, hi, v)
}

/// Apply a vertex operator to every state of a distribution-valued vector,
/// multiplying in the existing coefficients.
pub fn apply_y_sd(
    d: usize,
    a: &FockVector,
    var: &str,
    hi: i64,
    sd: &StateDist,
) -> Result<StateDist> {
    let vars = merged(&sd.vars, &[var.to_string()]);
    let mut out = StateDist::zero(d, &vars);
    for (s, fd) in &sd.terms {
        if !sd.certifies_state(s) {
            continue;
        }
        let mut v = FockVector::zero(d);
        v.add_term(s.clone(), Scalar::one());
        let w = apply_y(d, a, var, hi, &v)?;
        for (s2, fd2) in &w.terms {
            out.add_term(s2.clone(), &fd2.mul(fd));
        }
    }
    out.slot_hi = Bnd::Int(hi).min(sd.slot_hi);
    let na = a.terms.keys().map(|s| s.len()).max().unwrap_or(0) as i64;
    out.max_particles = sd.max_particles.add(Bnd::Int(na));
    if let Some(h) = sd.slot_hi.finite() {
        // Annihilating a state beyond the horizon of `sd` yields a
        // contraction of degree at most 2 - d - (h + 1) in `var`, times
        // creations bounded by the degree of the receiving state.  Those
        // missing contributions can only land on states with few enough
        // particles to be reachable from a dropped state; there they unbound
        // the support and erode the low side of the knowledge window.
        debug_assert!(!sd.vars.iter().any(|v| v == var));
        let reach = match sd.max_particles.finite() {
            Some(p) => Bnd::Int(p + na - 2),
            None => Bnd::PosInf,
        };
        let degf_min = a
            .terms
            .keys()
            .flat_map(|sa| sa.iter())
            .map(|mp| mp.0.total_degree().unwrap_or(0) as i64)
            .min()
            .unwrap_or(0);
        for (s, fd) in out.terms.iter_mut() {
            if Bnd::Int(s.len() as i64) > reach {
                continue;
            }
            // at least one constituent annihilates the dropped state, so at
            // most na - 1 of the receiving state's slots were created along
            // the way
            let mut degs: Vec<i64> =
                s.iter().map(|mp| mp.0.total_degree().unwrap_or(0) as i64).collect();
            degs.sort_unstable_by(|x, y| y.cmp(x));
            let created: i64 = degs.iter().take((na - 1).max(0) as usize).sum();
            let floor = 2 - d as i64 - h + created - degf_min;
            let iv = fd
                .cert
                .knowledge
                .ival(var)
                .intersect(&Ival::of(Bnd::Int(floor), Bnd::PosInf));
            fd.cert.knowledge.var.insert(var.to_string(), iv);
            let sv = fd.cert.support.ival(var);
            fd.cert.support.var.insert(var.to_string(), Ival::of(Bnd::NegInf, sv.hi));
            // the coefficients of the dropped states are unknown, so in the
            // other variables the missing contributions can sit anywhere
            for v in vars.iter().filter(|v| *v != var) {
                fd.cert.support.var.insert(v.clone(), Ival::full());
            }
            fd.cert.support.total = Ival::full();
        }
    }
    Ok(out)
}

/// The translation endomorphism in direction `alpha`: multiply one slot at
/// a time by `p_alpha` and reduce, summed over slots.
pub fn translate(v: &FockVector, alpha: usize) -> FockVector {
    let d = v.dim;
    let pa = MultiPoly::coord(d, PVAR, alpha);
    let mut out = FockVector::zero(d);
    for (state, c) in &v.terms {
        for l in 0..state.len() {
            for (c2, mp) in basis_expand(d, &(&state[l].0 * &pa)) {
                let mut s2 = state.clone();
                s2[l] = mp;
                out.add_term(sorted(s2), c.clone() * c2);
            }
        }
    }
    out
}

fn cap_knowledge(fd: &FormalDist, var: &str, hi: i64) -> FormalDist {
    let mut out = fd.clone();
    let iv = out.cert.knowledge.ival(var).intersect(&Ival::of(Bnd::NegInf, Bnd::Int(hi)));
    out.cert.knowledge.var.insert(var.to_string(), iv);
    out
}

/// Apply `exp(var . T)` to a state-valued distribution, where `T` is the
/// tuple of translation endomorphisms.  The series is truncated so that the
/// result is certified up to degree `hi` in `var`, which requires every
/// coefficient to have a finite lower support bound in `var`.
pub fn exp_zt(sd: &StateDist, var: &str, hi: i64) -> Result<StateDist> {
    let d = sd.dim;
    let vars = merged(&sd.vars, &[var.to_string()]);
    let mut out = StateDist::zero(d, &vars);
    for (state, fd) in &sd.terms {
        let lo = match (fd.cert.support.ival(var).lo, fd.min_var_degree(var)) {
            (Bnd::Int(k), _) => k,
            (Bnd::NegInf, _) => {
                return Err(CalcError::WindowTooSmall(format!(
                    "exp(z.T) needs a finite lower bound in {var}"
                )))
            }
            (Bnd::PosInf, None) => 0,
            (Bnd::PosInf, Some(k)) => k,
        };
        let kmax = (hi - lo).max(0);
        let mut layer: BTreeMap<FockState, MultiPoly> = BTreeMap::new();
        layer.insert(state.clone(), MultiPoly::one(d));
        let mut acc: BTreeMap<FockState, MultiPoly> = layer.clone();
        for k in 1..=kmax {
            let mut next: BTreeMap<FockState, MultiPoly> = BTreeMap::new();
            for (s, q) in &layer {
                let mut v = FockVector::zero(d);
                v.add_term(s.clone(), Scalar::one());
                for alpha in 0..d {
                    let za = MultiPoly::coord(d, var, alpha);
                    for (s2, c2) in &translate(&v, alpha).terms {
                        let piece = (q * &za).scale(&(c2.clone() / scalar::int(k)));
                        match next.entry(s2.clone()) {
                            std::collections::btree_map::Entry::Vacant(e) => {
                                e.insert(piece);
                            }
                            std::collections::btree_map::Entry::Occupied(mut e) => {
                                *e.get_mut() = e.get() + &piece;
                            }
                        }
                    }
                }
            }
            for (s, q) in &next {
                match acc.entry(s.clone()) {
                    std::collections::btree_map::Entry::Vacant(e) => {
                        e.insert(q.clone());
                    }
                    std::collections::btree_map::Entry::Occupied(mut e) => {
                        *e.get_mut() = e.get() + q;
                    }
                }
            }
            layer = next;
        }
        for (s, q) in &acc {
            if q.is_zero() {
                continue;
            }
            out.add_term(s.clone(), &cap_knowledge(&fd.mul_poly(q), var, hi));
        }
    }
    // The shift operator only raises slot degrees, so states below the
    // horizon of `sd` still receive all their contributions.
    out.slot_hi = sd.slot_hi;
    Ok(out)
}

/// Check the quasisymmetry law `Y(a, v) b = sign * exp(v.T) (Y(b, -v) a)`
/// with `sign = -1` exactly when both parities are odd, on the cells of
/// `required`.
pub fn quasisymmetry_check(
    d: usize,
    a: &FockVector,
    b: &FockVector,
    var: &str,
    hi: i64,
    odd_a: bool,
    odd_b: bool,
    required: &Extent,
) -> Result<bool> {
    let lhs = apply_y(d, a, var, hi, b)?;
    let pre = apply_y(d, b, var, hi, a)?.map(|fd| fd.negate_var(var));
    let mut rhs = exp_zt(&pre, var, hi)?;
    if odd_a && odd_b {
        rhs = rhs.scale(&-Scalar::one());
    }
    lhs.agrees_with(&rhs, required)
}

/// The order of locality of `a` and `b` read off the singular part of
/// `Y(a, var) b`: the least `N >= 0` such that `(var^2)^N Y(a, var) b` has
/// no negative cells.  The singular part must be fully certified.
pub fn locality_order_product(
    d: usize,
    a: &FockVector,
    b: &FockVector,
    hi: i64,
) -> Result<i64> {
    let var = "z";
    let sd = apply_y(d, a, var, hi, b)?;
    let mut n = 0i64;
    for fd in sd.terms.values() {
        if fd.cert.knowledge.ival(var).lo != Bnd::NegInf {
            return Err(CalcError::Truncation(format!(
                "singular part of the product is not fully certified in {var}"
            )));
        }
        for key in fd.terms.keys() {
            n = n.max(-key[0] / 2 + i64::from(key[0] % 2 != 0));
        }
    }
    Ok(n)
}

/// The order of locality read off commutators: the least `N` up to `nmax`
/// such that `((v1 - v2)^2)^N [Y(a, v1), Y(b, v2)]` vanishes on every given
/// target within `required`.
pub fn locality_order_commutator(
    d: usize,
    a: &FockVector,
    b: &FockVector,
    v1: &str,
    v2: &str,
    hi: i64,
    targets: &[FockVector],
    nmax: i64,
    required: &Extent,
) -> Result<i64> {
    let sep = &(&MultiPoly::vsq(d, v1) - &MultiPoly::dot(d, v1, v2).scale(&scalar::int(2)))
        + &MultiPoly::vsq(d, v2);
    let mut comms = Vec::new();
    for t in targets {
        let bt = apply_y(d, b, v2, hi, t)?;
        let abt = apply_y_sd(d, a, v1, hi, &bt)?;
        let at = apply_y(d, a, v1, hi, t)?;
        let bat = apply_y_sd(d, b, v2, hi, &at)?;
        comms.push(abt.sub(&bat));
    }
    for n in 0..=nmax {
        let p = sep.pow(n as u32);
        let mut all = true;
        for c in &comms {
            let sn = c.map(|fd| fd.mul_poly(&p));
            // a nonzero cell inside the knowledge region anywhere is
            // definitive evidence that this power does not yet vanish
            let witness = sn.terms.iter().any(|(s, fd)| {
                sn.certifies_state(s)
                    && fd.cells().iter().any(|cell| {
                        !cell.poly.is_zero() && fd.cert.knowledge.contains(&cell.degs)
                    })
            });
            if witness || !sn.is_zero_within(required)? {
                all = false;
                break;
            }
        }
        if all {
            return Ok(n);
        }
    }
    Err(CalcError::WindowTooSmall(format!(
        "no locality order up to {nmax} visible in the window"
    )))
}

/// The two-variable product `Y(a, v1) Y(b, v2) v`.
pub fn product_apply(
    d: usize,
    a: &FockVector,
    v1: &str,
    b: &FockVector,
    v2: &str,
    hi: i64,
    v: &FockVector,
) -> Result<StateDist> {
    let bt = apply_y(d, b, v2, hi, v)?;
    apply_y_sd(d, a, v1, hi, &bt)
}

/// Multiply a two-variable product by `((v1 - v2)^2)^n` and restrict to the
/// diagonal `v1 = v2`.  With `n` at least the order of locality this is the
/// normally ordered product of the two fields.
pub fn regularized_restriction(
    d: usize,
    sd: &StateDist,
    v1: &str,
    v2: &str,
    n: i64,
) -> Result<StateDist> {
    let sep = &(&MultiPoly::vsq(d, v1) - &MultiPoly::dot(d, v1, v2).scale(&scalar::int(2)))
        + &MultiPoly::vsq(d, v2);
    let p = sep.pow(n as u32);
    sd.try_map(|fd| {
        let g = fd.mul_poly(&p);
        let pole = g
            .cells()
            .iter()
            .filter_map(|c| c.degs.get(v1).copied())
            .min()
            .unwrap_or(0)
            .min(0);
        g.substitute(v1, v2, -pole)
    })
}

/// Re-expand the `v1` dependence of a distribution around `v1 = v2 + w`,
/// keeping coefficients of degree at most `whi` in the new variable `w`.
/// The support of the input away from `v1` must be bounded below so that
/// the truncation in `v1` can be converted into one in the total degree.
pub fn ope_shift(
    fd: &FormalDist,
    v1: &str,
    v2: &str,
    w: &str,
    whi: i64,
) -> Result<FormalDist> {
    let d = fd.dim;
    let i1 = fd
        .vars
        .iter()
        .position(|v| v == v1)
        .ok_or_else(|| CalcError::Incompatible(format!("{v1} is not a variable here")))?;
    let mut vars: Vec<String> = fd.vars.iter().filter(|v| *v != v1).cloned().collect();
    for v in [v2, w] {
        if !vars.contains(&v.to_string()) {
            vars.push(v.to_string());
        }
    }
    vars.sort();
    let mut out = FormalDist::zero(d, &vars);
    for (key, poly) in &fd.terms {
        let iota = crate::expand::iota_expand(d, key[i1], v2, w, 1, whi);
        let mut rest_key = vec![0i64; vars.len()];
        for (i, v) in fd.vars.iter().enumerate() {
            if i != i1 {
                rest_key[vars.iter().position(|x| x == v).unwrap()] = key[i];
            }
        }
        let shifted = poly.rename_var(v1, w).shift_var(w, v2, 1);
        let cell = FormalDist::monomial(d, &vars, &rest_key, shifted);
        out = out.add(&cell.mul(&iota));
    }
    // The truncation of the input in v1 becomes a bound on the certified
    // total degree: a lost cell of v1-degree above h contributes only at
    // total degree above h plus the lower support bound of the rest.
    if let Bnd::Int(h) = fd.cert.knowledge.ival(v1).hi {
        let mut rest_lo = 0i64;
        for v in &fd.vars {
            if v != v1 {
                match fd.cert.support.ival(v).lo {
                    Bnd::Int(k) => rest_lo += k,
                    Bnd::PosInf => {}
                    Bnd::NegInf => {
                        return Err(CalcError::Truncation(format!(
                            "cannot convert the {v1} window: no lower bound in {v}"
                        )))
                    }
                }
            }
        }
        let cap = Ival::of(Bnd::NegInf, Bnd::Int(h + rest_lo));
        out.cert.knowledge.total = out.cert.knowledge.total.intersect(&cap);
    }
    Ok(out)
}

/// A finite-dimensional commutative algebra with a nilpotent endomorphism
/// `T`, acting identically in every space-time direction.  When `T` is a
/// derivation this carries a vertex algebra whose fields are the power
/// series `Y(a, v) b = (exp(v.T) a) * b`, with no negative powers at all.
#[derive(Clone, Debug)]
pub struct CommAlgebra {
    /// Basis size.
    pub n: usize,
    /// Structure constants: `e_i * e_j = sum_k mul[i][j][k] e_k`.
    pub mul: Vec<Vec<Vec<Scalar>>>,
    /// Index of the unit element.
    pub unit: usize,
    /// Matrix of `T` in the basis, column-major: `T e_i = sum_k t[i][k] e_k`.
    pub t: Vec<Vec<Scalar>>,
}

impl CommAlgebra {
    /// Truncated polynomials in one scalar variable `x` with `x^n = 0`,
    /// with `T = g(x) d/dx` for the given coefficient vector of `g`.
    pub fn truncated_power(n: usize, g: &[Scalar]) -> Self {
        let mut mul = vec![vec![vec![Scalar::zero(); n]; n]; n];
        for (i, row) in mul.iter_mut().enumerate() {
            for (j, col) in row.iter_mut().enumerate() {
                if i + j < n {
                    col[i + j] = Scalar::one();
                }
            }
        }
        let mut t = vec![vec![Scalar::zero(); n]; n];
        for (i, ti) in t.iter_mut().enumerate() {
            // T x^i = i x^(i-1) g(x)
            for (s, gs) in g.iter().enumerate() {
                if i >= 1 && i - 1 + s < n {
                    ti[i - 1 + s] += scalar::int(i as i64) * gs.clone();
                }
            }
        }
        CommAlgebra { n, mul, unit: 0, t }
    }

    fn product(&self, a: &[Scalar], b: &[Scalar]) -> Vec<Scalar> {
        let mut out = vec![Scalar::zero(); self.n];
        for (i, ai) in a.iter().enumerate() {
            if ai.is_zero() {
                continue;
            }
            for (j, bj) in b.iter().enumerate() {
                if bj.is_zero() {
                    continue;
                }
                for (k, c) in self.mul[i][j].iter().enumerate() {
                    out[k] += ai.clone() * bj.clone() * c.clone();
                }
            }
        }
        out
    }

    fn apply_t(&self, a: &[Scalar]) -> Vec<Scalar> {
        let mut out = vec![Scalar::zero(); self.n];
        for (i, ai) in a.iter().enumerate() {
            if ai.is_zero() {
                continue;
            }
            for (k, c) in self.t[i].iter().enumerate() {
                out[k] += ai.clone() * c.clone();
            }
        }
        out
    }

    fn basis_vec(&self, i: usize) -> Vec<Scalar> {
        let mut v = vec![Scalar::zero(); self.n];
        v[i] = Scalar::one();
        v
    }

    /// Check commutativity, associativity, the unit law, nilpotence of `T`
    /// and the Leibniz rule on all basis pairs.
    pub fn validate(&self) -> Result<()> {
        let n = self.n;
        let fail = |msg: &str| Err(CalcError::Incompatible(format!("algebra: {msg}")));
        for i in 0..n {
            for j in 0..n {
                if self.mul[i][j] != self.mul[j][i] {
                    return fail("product is not commutative");
                }
                let eij = self.product(&self.basis_vec(i), &self.basis_vec(j));
                for k in 0..n {
                    let l = self.product(&eij, &self.basis_vec(k));
                    let r = self
                        .product(&self.basis_vec(i), &self.product(&self.basis_vec(j), &self.basis_vec(k)));
                    if l != r {
                        return fail("product is not associative");
                    }
                }
                let tl = self.apply_t(&eij);
                let tr = {
                    let mut s = self.product(&self.apply_t(&self.basis_vec(i)), &self.basis_vec(j));
                    let s2 = self.product(&self.basis_vec(i), &self.apply_t(&self.basis_vec(j)));
                    for (x, y) in s.iter_mut().zip(s2) {
                        *x += y;
                    }
                    s
                };
                if tl != tr {
                    return fail("T is not a derivation");
                }
            }
            if self.product(&self.basis_vec(self.unit), &self.basis_vec(i)) != self.basis_vec(i) {
                return fail("unit law fails");
            }
        }
        let mut v: Vec<Vec<Scalar>> = (0..n).map(|i| self.basis_vec(i)).collect();
        for _ in 0..n {
            v = v.iter().map(|x| self.apply_t(x)).collect();
        }
        if v.iter().any(|x| x.iter().any(|c| !c.is_zero())) {
            return fail("T is not nilpotent");
        }
        Ok(())
    }
}

/// The field of `a` applied to `b` in a validated commutative algebra with
/// derivation: the coefficient vector of `(exp(v.T) a) * b`, each entry a
/// polynomial distribution in `var`.
pub fn holo_y(
    d: usize,
    alg: &CommAlgebra,
    a: &[Scalar],
    b: &[Scalar],
    var: &str,
) -> Result<Vec<FormalDist>> {
    alg.validate()?;
    assert!(a.len() == alg.n && b.len() == alg.n);
    let mut ell = MultiPoly::zero(d);
    for alpha in 0..d {
        ell = &ell + &MultiPoly::coord(d, var, alpha);
    }
    // exp(v.T) a = sum_k ell^k / k! T^k a, a finite sum by nilpotence
    let mut coeffs = vec![MultiPoly::zero(d); alg.n];
    let mut tka = a.to_vec();
    let mut k = 0u32;
    loop {
        if tka.iter().all(|c| c.is_zero()) {
            break;
        }
        let weight = ell.pow(k).scale(&(Scalar::one() / scalar::factorial(k)));
        let prod = alg.product(&tka, b);
        for (i, c) in prod.iter().enumerate() {
            if !c.is_zero() {
                coeffs[i] = &coeffs[i] + &weight.scale(c);
            }
        }
        tka = alg.apply_t(&tka);
        k += 1;
        assert!(k as usize <= alg.n, "T failed to terminate");
    }
    let vs = vec![var.to_string()];
    Ok(coeffs.into_iter().map(|q| FormalDist::from_poly(d, &vs, q)).collect())
}

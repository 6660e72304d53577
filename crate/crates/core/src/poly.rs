//! Sparse exact multivariate polynomials in the coordinates of one or more
//! D-dimensional formal variables.
//!
//! A polynomial knows its space-time dimension `dim` and an ordered list of
//! variable names.  Each variable contributes `dim` coordinates, so a
//! monomial is an exponent vector of length `vars.len() * dim`, stored
//! var-major.  Terms are kept in a map ordered by graded lexicographic
//! order and never carry zero coefficients, which makes the representation
//! canonical: two polynomials are equal exactly when their structures are.
//!
//! The variable list is always sorted by name and contains only variables
//! that actually occur, so constants have an empty list.

use std::collections::BTreeMap;
use std::fmt;

use num::complex::Complex64;
use num::{One, Zero};

use crate::error::{CalcError, Result};
use crate::scalar::{self, Scalar};

/// Monomial exponent vector, var-major with `dim` coordinates per variable.
/// Ordered by total degree first and lexicographically within a degree.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Mono(pub Vec<u32>);

impl Mono {
    pub fn total(&self) -> u32 {
        self.0.iter().sum()
    }
}

impl Ord for Mono {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.total()
            .cmp(&other.total())
            .then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for Mono {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

/// Sparse exact polynomial.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MultiPoly {
    pub dim: usize,
    pub vars: Vec<String>,
    pub terms: BTreeMap<Mono, Scalar>,
}

impl MultiPoly {
    /// The zero polynomial in dimension `dim`.
    pub fn zero(dim: usize) -> Self {
        MultiPoly { dim, vars: vec![], terms: BTreeMap::new() }
    }

    /// A constant polynomial.
    pub fn constant(dim: usize, c: Scalar) -> Self {
        let mut p = Self::zero(dim);
        if !c.is_zero() {
            p.terms.insert(Mono(vec![]), c);
        }
        p
    }

    pub fn one(dim: usize) -> Self {
        Self::constant(dim, Scalar::one())
    }

    /// The coordinate monomial `var^alpha` (components are 0-based).
    pub fn coord(dim: usize, var: &str, alpha: usize) -> Self {
        assert!(alpha < dim, "coordinate index out of range");
        let mut e = vec![0u32; dim];
        e[alpha] = 1;
        let mut p = Self::zero(dim);
        p.vars = vec![var.to_string()];
        p.terms.insert(Mono(e), Scalar::one());
        p
    }

    /// The square `var . var` of a variable.
    pub fn vsq(dim: usize, var: &str) -> Self {
        let mut p = Self::zero(dim);
        for a in 0..dim {
            let c = Self::coord(dim, var, a);
            p = &p + &(&c * &c);
        }
        p
    }

    /// The pairing `v . w` of two distinct variables.
    pub fn dot(dim: usize, v: &str, w: &str) -> Self {
        let mut p = Self::zero(dim);
        for a in 0..dim {
            p = &p + &(&Self::coord(dim, v, a) * &Self::coord(dim, w, a));
        }
        p
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Index of a variable in the list, if present.
    fn var_index(&self, var: &str) -> Option<usize> {
        self.vars.iter().position(|v| v == var)
    }

    /// Drop variables whose coordinates never occur, keeping the form
    /// canonical.
    fn prune_vars(&mut self) {
        let n = self.vars.len();
        if n == 0 {
            return;
        }
        let mut used = vec![false; n];
        for m in self.terms.keys() {
            for (i, u) in used.iter_mut().enumerate() {
                if m.0[i * self.dim..(i + 1) * self.dim].iter().any(|&e| e > 0) {
                    *u = true;
                }
            }
        }
        if used.iter().all(|&u| u) {
            return;
        }
        let keep: Vec<usize> = (0..n).filter(|&i| used[i]).collect();
        self.vars = keep.iter().map(|&i| self.vars[i].clone()).collect();
        let dim = self.dim;
        let old = std::mem::take(&mut self.terms);
        for (m, c) in old {
            let mut e = Vec::with_capacity(keep.len() * dim);
            for &i in &keep {
                e.extend_from_slice(&m.0[i * dim..(i + 1) * dim]);
            }
            self.terms.insert(Mono(e), c);
        }
    }

    /// Re-express the polynomial over a superset variable list (sorted, must
    /// contain all current variables).
    fn embed(&self, vars: &[String]) -> MultiPoly {
        let dim = self.dim;
        let pos: Vec<usize> = self
            .vars
            .iter()
            .map(|v| vars.iter().position(|w| w == v).expect("embed: missing var"))
            .collect();
        let mut out = MultiPoly { dim, vars: vars.to_vec(), terms: BTreeMap::new() };
        for (m, c) in &self.terms {
            let mut e = vec![0u32; vars.len() * dim];
            for (i, &p) in pos.iter().enumerate() {
                e[p * dim..(p + 1) * dim].copy_from_slice(&m.0[i * dim..(i + 1) * dim]);
            }
            out.terms.insert(Mono(e), c.clone());
        }
        out
    }

    /// Merged sorted variable list of two polynomials.
    fn merged_vars(&self, other: &MultiPoly) -> Vec<String> {
        let mut vs: Vec<String> = self.vars.clone();
        for v in &other.vars {
            if !vs.contains(v) {
                vs.push(v.clone());
            }
        }
        vs.sort();
        vs
    }

    pub fn scale(&self, c: &Scalar) -> MultiPoly {
        if c.is_zero() {
            return MultiPoly::zero(self.dim);
        }
        let mut out = self.clone();
        for v in out.terms.values_mut() {
            *v *= c;
        }
        out
    }

    pub fn neg(&self) -> MultiPoly {
        self.scale(&-Scalar::one())
    }

    /// Raise to a nonnegative integer power.
    pub fn pow(&self, k: u32) -> MultiPoly {
        let mut acc = MultiPoly::one(self.dim);
        for _ in 0..k {
            acc = &acc * self;
        }
        acc
    }

    /// Partial derivative with respect to coordinate `alpha` of `var`.
    pub fn diff(&self, var: &str, alpha: usize) -> MultiPoly {
        assert!(alpha < self.dim);
        let Some(vi) = self.var_index(var) else {
            return MultiPoly::zero(self.dim);
        };
        let idx = vi * self.dim + alpha;
        let mut out = MultiPoly { dim: self.dim, vars: self.vars.clone(), terms: BTreeMap::new() };
        for (m, c) in &self.terms {
            let e = m.0[idx];
            if e == 0 {
                continue;
            }
            let mut m2 = m.0.clone();
            m2[idx] -= 1;
            out.terms.insert(Mono(m2), c * scalar::int(e as i64));
        }
        out.prune_vars();
        out
    }

    /// Laplacian in the coordinates of `var`.
    pub fn laplacian(&self, var: &str) -> MultiPoly {
        let mut out = MultiPoly::zero(self.dim);
        for a in 0..self.dim {
            out = &out + &self.diff(var, a).diff(var, a);
        }
        out
    }

    /// Degree in `var` of a monomial, given its index in the var list.
    fn mono_var_degree(&self, m: &Mono, vi: usize) -> u32 {
        m.0[vi * self.dim..(vi + 1) * self.dim].iter().sum()
    }

    /// Maximum degree in `var`, or `None` for the zero polynomial.
    pub fn degree(&self, var: &str) -> Option<u32> {
        let vi = self.var_index(var);
        self.terms
            .keys()
            .map(|m| vi.map_or(0, |i| self.mono_var_degree(m, i)))
            .max()
    }

    /// Maximum total degree, or `None` for the zero polynomial.
    pub fn total_degree(&self) -> Option<u32> {
        self.terms.keys().map(|m| m.total()).max()
    }

    /// Split into homogeneous components with respect to the degree in `var`.
    pub fn homogeneous_parts(&self, var: &str) -> BTreeMap<u32, MultiPoly> {
        let vi = self.var_index(var);
        let mut out: BTreeMap<u32, MultiPoly> = BTreeMap::new();
        for (m, c) in &self.terms {
            let d = vi.map_or(0, |i| self.mono_var_degree(m, i));
            let e = out.entry(d).or_insert_with(|| MultiPoly {
                dim: self.dim,
                vars: self.vars.clone(),
                terms: BTreeMap::new(),
            });
            e.terms.insert(m.clone(), c.clone());
        }
        for p in out.values_mut() {
            p.prune_vars();
        }
        out
    }

    /// Split into components homogeneous in every listed variable at once.
    /// Keys are degree vectors aligned with `vars`.
    pub fn multi_homogeneous_parts(&self, vars: &[String]) -> BTreeMap<Vec<u32>, MultiPoly> {
        let idx: Vec<Option<usize>> = vars.iter().map(|v| self.var_index(v)).collect();
        let mut out: BTreeMap<Vec<u32>, MultiPoly> = BTreeMap::new();
        for (m, c) in &self.terms {
            let key: Vec<u32> = idx
                .iter()
                .map(|vi| vi.map_or(0, |i| self.mono_var_degree(m, i)))
                .collect();
            let e = out.entry(key).or_insert_with(|| MultiPoly {
                dim: self.dim,
                vars: self.vars.clone(),
                terms: BTreeMap::new(),
            });
            e.terms.insert(m.clone(), c.clone());
        }
        for p in out.values_mut() {
            p.prune_vars();
        }
        out
    }

    /// Set `var` to zero, keeping only monomials free of it.
    pub fn eval_zero(&self, var: &str) -> MultiPoly {
        let Some(vi) = self.var_index(var) else {
            return self.clone();
        };
        let mut out = MultiPoly { dim: self.dim, vars: self.vars.clone(), terms: BTreeMap::new() };
        for (m, c) in &self.terms {
            if self.mono_var_degree(m, vi) == 0 {
                out.terms.insert(m.clone(), c.clone());
            }
        }
        out.prune_vars();
        out
    }

    /// The constant coefficient.
    pub fn constant_term(&self) -> Scalar {
        self.terms
            .get(&Mono(vec![0u32; self.vars.len() * self.dim]))
            .cloned()
            .unwrap_or_else(Scalar::zero)
    }

    /// Rename `from` to `to`.  If `to` already occurs the coordinates merge,
    /// which realizes the substitution `from := to`.
    pub fn rename_var(&self, from: &str, to: &str) -> MultiPoly {
        if from == to || self.var_index(from).is_none() {
            return self.clone();
        };
        let mut vars = self.vars.clone();
        vars.retain(|v| v != from);
        if !vars.contains(&to.to_string()) {
            vars.push(to.to_string());
        }
        vars.sort();
        let dim = self.dim;
        let fi = self.var_index(from).unwrap();
        let ti = vars.iter().position(|v| v == to).unwrap();
        let remap: Vec<Option<usize>> = self
            .vars
            .iter()
            .map(|v| if v == from { None } else { vars.iter().position(|w| w == v) })
            .collect();
        let mut out = MultiPoly { dim, vars: vars.clone(), terms: BTreeMap::new() };
        for (m, c) in &self.terms {
            let mut e = vec![0u32; vars.len() * dim];
            for (i, r) in remap.iter().enumerate() {
                let tgt = r.unwrap_or(ti);
                let tgt = if i == fi { ti } else { tgt };
                for a in 0..dim {
                    e[tgt * dim + a] += m.0[i * dim + a];
                }
            }
            let mono = Mono(e);
            let entry = out.terms.entry(mono).or_insert_with(Scalar::zero);
            *entry += c;
        }
        out.terms.retain(|_, c| !c.is_zero());
        out.prune_vars();
        out
    }

    /// Substitute `from := from + sign * to` (a Taylor shift by another
    /// variable), expanding binomially.
    pub fn shift_var(&self, from: &str, to: &str, sign: i64) -> MultiPoly {
        let Some(fi) = self.var_index(from) else {
            return self.clone();
        };
        let dim = self.dim;
        let mut out = MultiPoly::zero(dim);
        for (m, c) in &self.terms {
            // Rebuild the monomial as a product, expanding the `from`
            // coordinates.
            let mut term = MultiPoly::constant(dim, c.clone());
            for (i, v) in self.vars.iter().enumerate() {
                for a in 0..dim {
                    let e = m.0[i * dim + a];
                    if e == 0 {
                        continue;
                    }
                    let base = if i == fi {
                        let shift = MultiPoly::coord(dim, to, a).scale(&scalar::int(sign));
                        &MultiPoly::coord(dim, v, a) + &shift
                    } else {
                        MultiPoly::coord(dim, v, a)
                    };
                    term = &term * &base.pow(e);
                }
            }
            out = &out + &term;
        }
        out
    }

    /// Substitute `var := -var`.
    pub fn negate_var(&self, var: &str) -> MultiPoly {
        let Some(vi) = self.var_index(var) else {
            return self.clone();
        };
        let mut out = MultiPoly { dim: self.dim, vars: self.vars.clone(), terms: BTreeMap::new() };
        for (m, c) in &self.terms {
            let d = self.mono_var_degree(m, vi);
            let c2 = if d % 2 == 1 { -c.clone() } else { c.clone() };
            out.terms.insert(m.clone(), c2);
        }
        out
    }

    /// Evaluate at complex coordinate values.  `point` maps each occurring
    /// variable to `dim` complex components.
    pub fn eval_complex(&self, point: &BTreeMap<String, Vec<Complex64>>) -> Result<Complex64> {
        let mut acc = Complex64::new(0.0, 0.0);
        for (m, c) in &self.terms {
            let mut t = Complex64::new(scalar::to_f64(c), 0.0);
            for (i, v) in self.vars.iter().enumerate() {
                let coords = point.get(v).ok_or_else(|| {
                    CalcError::Incompatible(format!("no value supplied for variable {v}"))
                })?;
                if coords.len() != self.dim {
                    return Err(CalcError::Incompatible(format!(
                        "variable {v} needs {} components",
                        self.dim
                    )));
                }
                for a in 0..self.dim {
                    t *= coords[a].powu(m.0[i * self.dim + a]);
                }
            }
            acc += t;
        }
        Ok(acc)
    }
}

impl std::ops::Add for &MultiPoly {
    type Output = MultiPoly;
    fn add(self, rhs: &MultiPoly) -> MultiPoly {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch");
        let vars = self.merged_vars(rhs);
        let mut out = self.embed(&vars);
        let r = rhs.embed(&vars);
        for (m, c) in r.terms {
            let e = out.terms.entry(m).or_insert_with(Scalar::zero);
            *e += c;
        }
        out.terms.retain(|_, c| !c.is_zero());
        out.prune_vars();
        out
    }
}

impl std::ops::Sub for &MultiPoly {
    type Output = MultiPoly;
    fn sub(self, rhs: &MultiPoly) -> MultiPoly {
        self + &rhs.neg()
    }
}

impl std::ops::Mul for &MultiPoly {
    type Output = MultiPoly;
    fn mul(self, rhs: &MultiPoly) -> MultiPoly {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch");
        let vars = self.merged_vars(rhs);
        let a = self.embed(&vars);
        let b = rhs.embed(&vars);
        let mut out = MultiPoly { dim: self.dim, vars, terms: BTreeMap::new() };
        for (ma, ca) in &a.terms {
            for (mb, cb) in &b.terms {
                let e: Vec<u32> = ma.0.iter().zip(&mb.0).map(|(x, y)| x + y).collect();
                let entry = out.terms.entry(Mono(e)).or_insert_with(Scalar::zero);
                *entry += ca * cb;
            }
        }
        out.terms.retain(|_, c| !c.is_zero());
        out.prune_vars();
        out
    }
}

impl fmt::Debug for MultiPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

/// Formatting is only for diagnostics; the JSON layer is the real interface.
impl fmt::Display for MultiPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (m, c) in &self.terms {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "{}", scalar::render(c))?;
            for (i, v) in self.vars.iter().enumerate() {
                for a in 0..self.dim {
                    let e = m.0[i * self.dim + a];
                    if e == 1 {
                        write!(f, "*{v}{a}")?;
                    } else if e > 1 {
                        write!(f, "*{v}{a}^{e}")?;
                    }
                }
            }
        }
        Ok(())
    }
}

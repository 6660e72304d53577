//! Degree bookkeeping for truncated formal distributions.
//!
//! Formal distributions here are infinite series truncated to finitely many
//! cells.  To keep every downstream comparison honest, each distribution
//! carries a [`Certificate`] with two pieces of information:
//!
//! * `knowledge`: a region of degree vectors inside which the stored cells
//!   are guaranteed to coincide with the exact object.  Outside it, nothing
//!   is claimed.
//! * `support`: certified bounds on where the exact object can be nonzero
//!   at all, including cells outside the knowledge region.
//!
//! Both regions are [`Extent`]s: an interval per variable plus an interval
//! for the total degree.  The total-degree band matters: products of series
//! expanded in opposite directions have unbounded per-variable degrees, and
//! only the combination of per-variable and total bounds certifies that
//! each output cell receives finitely many, fully known contributions.
//!
//! The product rule is a conservative region computation: unknown cells of
//! one factor, shifted by the possible support of the other, mark output
//! degrees as unknown; the certified output knowledge is a box-with-band
//! under-approximation of the complement.

use std::collections::BTreeMap;
use std::fmt;

/// An extended integer bound.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Bnd {
    NegInf,
    Int(i64),
    PosInf,
}

impl Bnd {
    pub fn finite(self) -> Option<i64> {
        match self {
            Bnd::Int(x) => Some(x),
            _ => None,
        }
    }

    /// Saturating addition; infinities absorb.
    pub fn add(self, other: Bnd) -> Bnd {
        use Bnd::*;
        match (self, other) {
            (NegInf, PosInf) | (PosInf, NegInf) => {
                panic!("adding opposite infinities in degree bookkeeping")
            }
            (NegInf, _) | (_, NegInf) => NegInf,
            (PosInf, _) | (_, PosInf) => PosInf,
            (Int(a), Int(b)) => Int(a + b),
        }
    }

    pub fn add_i(self, k: i64) -> Bnd {
        self.add(Bnd::Int(k))
    }

    pub fn neg(self) -> Bnd {
        match self {
            Bnd::NegInf => Bnd::PosInf,
            Bnd::PosInf => Bnd::NegInf,
            Bnd::Int(x) => Bnd::Int(-x),
        }
    }
}

impl fmt::Display for Bnd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Bnd::NegInf => write!(f, "-inf"),
            Bnd::PosInf => write!(f, "+inf"),
            Bnd::Int(x) => write!(f, "{x}"),
        }
    }
}

/// A closed interval of extended integers.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Ival {
    pub lo: Bnd,
    pub hi: Bnd,
}

impl Ival {
    pub fn full() -> Self {
        Ival { lo: Bnd::NegInf, hi: Bnd::PosInf }
    }

    pub fn at(x: i64) -> Self {
        Ival { lo: Bnd::Int(x), hi: Bnd::Int(x) }
    }

    pub fn of(lo: Bnd, hi: Bnd) -> Self {
        Ival { lo, hi }
    }

    pub fn is_empty(&self) -> bool {
        self.lo > self.hi
    }

    pub fn contains(&self, x: i64) -> bool {
        self.lo <= Bnd::Int(x) && Bnd::Int(x) <= self.hi
    }

    pub fn intersect(&self, other: &Ival) -> Ival {
        Ival { lo: self.lo.max(other.lo), hi: self.hi.min(other.hi) }
    }

    pub fn hull(&self, other: &Ival) -> Ival {
        if self.is_empty() {
            return *other;
        }
        if other.is_empty() {
            return *self;
        }
        Ival { lo: self.lo.min(other.lo), hi: self.hi.max(other.hi) }
    }

    pub fn add(&self, other: &Ival) -> Ival {
        if self.is_empty() || other.is_empty() {
            return Ival { lo: Bnd::PosInf, hi: Bnd::NegInf };
        }
        Ival { lo: self.lo.add(other.lo), hi: self.hi.add(other.hi) }
    }

    pub fn shift(&self, k: i64) -> Ival {
        Ival { lo: self.lo.add_i(k), hi: self.hi.add_i(k) }
    }

    pub fn neg(&self) -> Ival {
        Ival { lo: self.hi.neg(), hi: self.lo.neg() }
    }

    pub fn covers(&self, other: &Ival) -> bool {
        other.is_empty() || (self.lo <= other.lo && other.hi <= self.hi)
    }
}

/// A region of degree vectors: one interval per variable plus a total-degree
/// band.  The represented set is the intersection of all the constraints.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Extent {
    pub var: BTreeMap<String, Ival>,
    pub total: Ival,
}

impl Extent {
    /// Everything.
    pub fn full(vars: &[String]) -> Self {
        Extent {
            var: vars.iter().map(|v| (v.clone(), Ival::full())).collect(),
            total: Ival::full(),
        }
    }

    /// Nothing.
    pub fn empty(vars: &[String]) -> Self {
        let mut e = Self::full(vars);
        e.total = Ival { lo: Bnd::PosInf, hi: Bnd::NegInf };
        e
    }

    pub fn is_empty(&self) -> bool {
        self.total.is_empty() || self.var.values().any(|i| i.is_empty())
    }

    pub fn vars(&self) -> Vec<String> {
        self.var.keys().cloned().collect()
    }

    pub fn ival(&self, v: &str) -> Ival {
        *self.var.get(v).unwrap_or(&Ival::full())
    }

    /// Membership of a concrete degree vector (vars not listed count as 0).
    pub fn contains(&self, degs: &BTreeMap<String, i64>) -> bool {
        let mut tot = 0i64;
        for (v, ival) in &self.var {
            let d = degs.get(v).copied().unwrap_or(0);
            if !ival.contains(d) {
                return false;
            }
            tot += d;
        }
        self.total.contains(tot)
    }

    /// Extend to a superset of variables (new variables unconstrained).
    pub fn with_vars(&self, vars: &[String]) -> Extent {
        let mut e = self.clone();
        for v in vars {
            e.var.entry(v.clone()).or_insert_with(Ival::full);
        }
        e
    }

    pub fn intersect(&self, other: &Extent) -> Extent {
        let vars: Vec<String> = {
            let mut vs = self.vars();
            for v in other.vars() {
                if !vs.contains(&v) {
                    vs.push(v);
                }
            }
            vs
        };
        let a = self.with_vars(&vars);
        let b = other.with_vars(&vars);
        Extent {
            var: vars
                .iter()
                .map(|v| (v.clone(), a.ival(v).intersect(&b.ival(v))))
                .collect(),
            total: a.total.intersect(&b.total),
        }
    }

    /// Componentwise hull (used for sums: support can be anywhere in either).
    pub fn hull(&self, other: &Extent) -> Extent {
        if self.is_empty() {
            return other.clone();
        }
        if other.is_empty() {
            return self.clone();
        }
        let vars: Vec<String> = {
            let mut vs = self.vars();
            for v in other.vars() {
                if !vs.contains(&v) {
                    vs.push(v);
                }
            }
            vs
        };
        let a = self.with_vars(&vars);
        let b = other.with_vars(&vars);
        Extent {
            var: vars
                .iter()
                .map(|v| (v.clone(), a.ival(v).hull(&b.ival(v))))
                .collect(),
            total: a.total.hull(&b.total),
        }
    }

    /// Minkowski sum (used for supports of products).
    pub fn sum(&self, other: &Extent) -> Extent {
        let vars: Vec<String> = {
            let mut vs = self.vars();
            for v in other.vars() {
                if !vs.contains(&v) {
                    vs.push(v);
                }
            }
            vs
        };
        let a = self.with_vars(&vars);
        let b = other.with_vars(&vars);
        Extent {
            var: vars
                .iter()
                .map(|v| (v.clone(), a.ival(v).add(&b.ival(v))))
                .collect(),
            total: a.total.add(&b.total),
        }
    }

    /// Shift the interval of one variable (and the total) by `k`.
    pub fn shift_var(&self, v: &str, k: i64) -> Extent {
        let mut e = self.clone();
        let iv = e.ival(v).shift(k);
        e.var.insert(v.to_string(), iv);
        e.total = e.total.shift(k);
        e
    }

    /// One round of constraint propagation between the per-variable
    /// intervals and the total band; tightens without changing the set.
    pub fn tighten(&self) -> Extent {
        let mut e = self.clone();
        // total from vars
        let mut sum_lo = Bnd::Int(0);
        let mut sum_hi = Bnd::Int(0);
        for i in e.var.values() {
            if i.is_empty() {
                return Extent::empty(&self.vars());
            }
            sum_lo = sum_lo.add(i.lo);
            sum_hi = sum_hi.add(i.hi);
        }
        e.total = e.total.intersect(&Ival::of(sum_lo, sum_hi));
        if e.total.is_empty() {
            return Extent::empty(&self.vars());
        }
        // vars from total: x_v <= total_hi - sum of other lows, and dually
        let names = e.vars();
        for v in &names {
            let mut lo_rest = Bnd::Int(0);
            let mut hi_rest = Bnd::Int(0);
            for (u, i) in &e.var {
                if u != v {
                    lo_rest = lo_rest.add(i.lo);
                    hi_rest = hi_rest.add(i.hi);
                }
            }
            let mut iv = e.ival(v);
            // avoid PosInf + NegInf: only tighten when the rest is finite
            if let (Bnd::Int(thi), Bnd::Int(lr)) = (e.total.hi, lo_rest) {
                iv.hi = iv.hi.min(Bnd::Int(thi - lr));
            }
            if let (Bnd::Int(tlo), Bnd::Int(hr)) = (e.total.lo, hi_rest) {
                iv.lo = iv.lo.max(Bnd::Int(tlo - hr));
            }
            if iv.is_empty() {
                return Extent::empty(&names);
            }
            e.var.insert(v.clone(), iv);
        }
        e
    }

    pub fn covers(&self, other: &Extent) -> bool {
        if other.is_empty() {
            return true;
        }
        let o = other.with_vars(&self.vars());
        let s = self.with_vars(&o.vars());
        s.total.covers(&o.total) && s.var.iter().all(|(v, i)| i.covers(&o.ival(v)))
    }

    /// Rename a variable.  If the target already exists the intervals of the
    /// two variables are added (degrees merge under substitution).
    pub fn merge_var(&self, from: &str, to: &str) -> Extent {
        let mut e = self.clone();
        let f = e.var.remove(from).unwrap_or_else(Ival::full);
        let t = e.var.remove(to).unwrap_or_else(Ival::full);
        e.var.insert(to.to_string(), f.add(&t));
        e
    }

    /// Forget a variable (projection; total band is kept only if the
    /// variable's interval pins a single value, else it is widened).
    pub fn drop_var(&self, v: &str, at_degree: Option<i64>) -> Extent {
        let mut e = self.clone();
        let iv = e.var.remove(v).unwrap_or_else(Ival::full);
        match at_degree {
            Some(d) => {
                e.total = e.total.shift(0).add(&Ival::at(-d));
            }
            None => {
                e.total = e.total.add(&iv.neg());
            }
        }
        e
    }
}

/// The pair of regions carried by every formal distribution.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Certificate {
    /// Degrees where the stored cells are guaranteed exact.
    pub knowledge: Extent,
    /// Bounds on where the exact object can be supported at all.
    pub support: Extent,
}

impl Certificate {
    /// Certificate of an exact, fully known object with the given support.
    pub fn exact(support: Extent) -> Self {
        let vars = support.vars();
        Certificate { knowledge: Extent::full(&vars), support }
    }

    pub fn with_vars(&self, vars: &[String]) -> Certificate {
        Certificate {
            knowledge: self.knowledge.with_vars(vars),
            support: self.support.with_vars(vars),
        }
    }

    /// Certificate of a sum.
    pub fn add(&self, other: &Certificate) -> Certificate {
        Certificate {
            knowledge: self.knowledge.intersect(&other.knowledge),
            support: self.support.hull(&other.support),
        }
    }

    /// Certificate of a product: supports add, and each factor's unknown
    /// region shifted by the other's support erodes the knowledge region.
    pub fn mul(&self, other: &Certificate) -> Certificate {
        let support = self.support.sum(&other.support).tighten();
        let mut knowledge = Extent::full(&support.vars());
        erode(&mut knowledge, self, &other.support);
        erode(&mut knowledge, other, &self.support);
        Certificate { knowledge: knowledge.tighten_keep(), support }
    }
}

impl Certificate {
    /// Certificate after the substitution `from := to` (degrees of the two
    /// variables merge, the total degree is preserved).
    pub fn merge_vars(&self, from: &str, to: &str) -> Certificate {
        let support = self.support.tighten().merge_var(from, to);
        let out_vars: Vec<String> = support.vars();
        let mut knowledge = Extent::full(&out_vars);
        let a_supp = self.support.tighten();
        for (u, mode) in unknown_modes(&self.knowledge, &a_supp) {
            if u.is_empty() {
                continue;
            }
            let affected = u.merge_var(from, to).tighten();
            if affected.is_empty() {
                continue;
            }
            let mode = match mode {
                Mode::VarHi(v) if v == from => Mode::VarHi(to.to_string()),
                Mode::VarLo(v) if v == from => Mode::VarLo(to.to_string()),
                m => m,
            };
            apply_separation(&mut knowledge, &affected, &mode);
        }
        Certificate { knowledge: knowledge.tighten_keep(), support }
    }

    /// Certificate after re-expanding with the shift operator that moves
    /// degree from `src` to `dst` (applying `exp(s dst . d/d src)` truncated
    /// at `kmax` applications).  The pair sum of the two degrees and the
    /// total degree are preserved.
    pub fn reexpand(&self, src: &str, dst: &str, kmax: i64) -> Certificate {
        let a_supp = self.support.tighten();
        let transform = |e: &Extent| -> Extent {
            let mut t = e.clone();
            let s = t.ival(src);
            let d = t.ival(dst);
            t.var.insert(src.to_string(), Ival::of(Bnd::NegInf, s.hi));
            t.var.insert(dst.to_string(), Ival::of(d.lo, Bnd::PosInf));
            t
        };
        let support = transform(&a_supp);
        let mut knowledge = Extent::full(&support.vars());
        for (u, mode) in unknown_modes(&self.knowledge, &a_supp) {
            if u.is_empty() {
                continue;
            }
            let affected = transform(&u).tighten();
            if affected.is_empty() {
                continue;
            }
            apply_separation(&mut knowledge, &affected, &mode);
        }
        // the truncation at kmax itself: contributions with k > kmax are
        // dropped, which touches dst degrees above supp.dst.lo + kmax
        if let Some(dlo) = a_supp.ival(dst).lo.finite() {
            let iv = knowledge
                .ival(dst)
                .intersect(&Ival::of(Bnd::NegInf, Bnd::Int(dlo + kmax)));
            knowledge.var.insert(dst.to_string(), iv);
        } else {
            knowledge = Extent::empty(&knowledge.vars());
        }
        Certificate { knowledge: knowledge.tighten_keep(), support }
    }
}

/// Enumerate the unknown-cell modes of a knowledge region, each clipped to
/// the certified support.
fn unknown_modes(knowledge: &Extent, supp: &Extent) -> Vec<(Extent, Mode)> {
    let mut modes = Vec::new();
    if supp.is_empty() {
        return modes;
    }
    for v in knowledge.vars() {
        let k = knowledge.ival(&v);
        if let Some(kh) = k.hi.finite() {
            let mut u = supp.clone();
            let iv = u.ival(&v).intersect(&Ival::of(Bnd::Int(kh + 1), Bnd::PosInf));
            u.var.insert(v.clone(), iv);
            modes.push((u.tighten(), Mode::VarHi(v.clone())));
        }
        if let Some(kl) = k.lo.finite() {
            let mut u = supp.clone();
            let iv = u.ival(&v).intersect(&Ival::of(Bnd::NegInf, Bnd::Int(kl - 1)));
            u.var.insert(v.clone(), iv);
            modes.push((u.tighten(), Mode::VarLo(v.clone())));
        }
    }
    if let Some(th) = knowledge.total.hi.finite() {
        let mut u = supp.clone();
        u.total = u.total.intersect(&Ival::of(Bnd::Int(th + 1), Bnd::PosInf));
        modes.push((u.tighten(), Mode::TotHi));
    }
    if let Some(tl) = knowledge.total.lo.finite() {
        let mut u = supp.clone();
        u.total = u.total.intersect(&Ival::of(Bnd::NegInf, Bnd::Int(tl - 1)));
        modes.push((u.tighten(), Mode::TotLo));
    }
    modes
}

impl Extent {
    /// Like [`Extent::tighten`] but never normalizes to the canonical empty
    /// form, so callers can still read partial bounds.
    fn tighten_keep(&self) -> Extent {
        let t = self.tighten();
        if t.is_empty() && !self.is_empty() {
            self.clone()
        } else {
            t
        }
    }
}

/// Shrink `knowledge` so that it avoids every output degree that could be
/// touched by an unknown cell of `a` combined with any supported cell of
/// `b_support`.
fn erode(knowledge: &mut Extent, a: &Certificate, b_support: &Extent) {
    let a_supp = a.support.tighten();
    if a_supp.is_empty() {
        return;
    }
    for (u, mode) in unknown_modes(&a.knowledge, &a_supp) {
        if u.is_empty() {
            continue; // no actually-supported unknown cells in this mode
        }
        let affected = u.sum(b_support).tighten();
        if affected.is_empty() {
            continue;
        }
        apply_separation(knowledge, &affected, &mode);
    }
}

#[derive(Clone, Debug)]
enum Mode {
    VarHi(String),
    VarLo(String),
    TotHi,
    TotLo,
}

/// Exclude the (box) `affected` region from `knowledge` by tightening one
/// constraint, preferring the direction that created the unknown cells.
fn apply_separation(knowledge: &mut Extent, affected: &Extent, mode: &Mode) {
    match mode {
        Mode::VarHi(v) => {
            if let Some(lo) = affected.ival(v).lo.finite() {
                let iv = knowledge.ival(v).intersect(&Ival::of(Bnd::NegInf, Bnd::Int(lo - 1)));
                knowledge.var.insert(v.clone(), iv);
            } else if let Some(tlo) = affected.total.lo.finite() {
                knowledge.total =
                    knowledge.total.intersect(&Ival::of(Bnd::NegInf, Bnd::Int(tlo - 1)));
            } else {
                *knowledge = Extent::empty(&knowledge.vars());
            }
        }
        Mode::VarLo(v) => {
            if let Some(hi) = affected.ival(v).hi.finite() {
                let iv = knowledge.ival(v).intersect(&Ival::of(Bnd::Int(hi + 1), Bnd::PosInf));
                knowledge.var.insert(v.clone(), iv);
            } else if let Some(thi) = affected.total.hi.finite() {
                knowledge.total =
                    knowledge.total.intersect(&Ival::of(Bnd::Int(thi + 1), Bnd::PosInf));
            } else {
                *knowledge = Extent::empty(&knowledge.vars());
            }
        }
        Mode::TotHi => {
            if let Some(tlo) = affected.total.lo.finite() {
                knowledge.total =
                    knowledge.total.intersect(&Ival::of(Bnd::NegInf, Bnd::Int(tlo - 1)));
            } else if let Some((v, lo)) = affected
                .var
                .iter()
                .find_map(|(v, i)| i.lo.finite().map(|l| (v.clone(), l)))
            {
                let iv = knowledge.ival(&v).intersect(&Ival::of(Bnd::NegInf, Bnd::Int(lo - 1)));
                knowledge.var.insert(v, iv);
            } else {
                *knowledge = Extent::empty(&knowledge.vars());
            }
        }
        Mode::TotLo => {
            if let Some(thi) = affected.total.hi.finite() {
                knowledge.total =
                    knowledge.total.intersect(&Ival::of(Bnd::Int(thi + 1), Bnd::PosInf));
            } else if let Some((v, hi)) = affected
                .var
                .iter()
                .find_map(|(v, i)| i.hi.finite().map(|h| (v.clone(), h)))
            {
                let iv = knowledge.ival(&v).intersect(&Ival::of(Bnd::Int(hi + 1), Bnd::PosInf));
                knowledge.var.insert(v, iv);
            } else {
                *knowledge = Extent::empty(&knowledge.vars());
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn vars(vs: &[&str]) -> Vec<String> {
        vs.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn product_of_exact_objects_is_exact() {
        let mut s1 = Extent::full(&vars(&["z"]));
        s1.var.insert("z".into(), Ival::of(Bnd::Int(0), Bnd::Int(4)));
        s1.total = Ival::of(Bnd::Int(0), Bnd::Int(4));
        let c1 = Certificate::exact(s1);
        let c2 = c1.clone();
        let p = c1.mul(&c2);
        assert!(p.knowledge.covers(&Extent::full(&vars(&["z"]))));
        assert_eq!(p.support.ival("z"), Ival::of(Bnd::Int(0), Bnd::Int(8)));
    }

    #[test]
    fn truncated_series_product_window() {
        // Two series in z known up to degree 10, supported from degree -2 up.
        let mk = |hi: i64| {
            let mut supp = Extent::full(&vars(&["z"]));
            supp.var.insert("z".into(), Ival::of(Bnd::Int(-2), Bnd::PosInf));
            supp.total = Ival::of(Bnd::Int(-2), Bnd::PosInf);
            let mut know = Extent::full(&vars(&["z"]));
            know.var.insert("z".into(), Ival::of(Bnd::NegInf, Bnd::Int(hi)));
            Certificate { knowledge: know, support: supp }
        };
        let p = mk(10).mul(&mk(10));
        // unknown cells at degree >= 11 hit outputs from degree 11 - 2 = 9
        assert_eq!(p.knowledge.ival("z").hi, Bnd::Int(8));
        assert_eq!(p.support.ival("z").lo, Bnd::Int(-4));
    }

    #[test]
    fn opposite_expansions_certify_through_total_band() {
        // Factor 1: series known for w <= 5, z unconstrained knowledge,
        // support z >= -1, total >= -2 (a field product).
        let vs = vars(&["w", "z"]);
        let mut supp1 = Extent::full(&vs);
        supp1.var.insert("z".into(), Ival::of(Bnd::Int(-1), Bnd::PosInf));
        supp1.total = Ival::of(Bnd::Int(-2), Bnd::PosInf);
        let mut know1 = Extent::full(&vs);
        know1.var.insert("w".into(), Ival::of(Bnd::NegInf, Bnd::Int(5)));
        know1.var.insert("z".into(), Ival::of(Bnd::NegInf, Bnd::Int(5)));
        let c1 = Certificate { knowledge: know1, support: supp1 };
        // Factor 2: homogeneous expansion of total degree -4, z >= 0,
        // known for z <= 7 (w correspondingly >= -4 - 7).
        let mut supp2 = Extent::full(&vs);
        supp2.var.insert("z".into(), Ival::of(Bnd::Int(0), Bnd::PosInf));
        supp2.total = Ival::at(-4);
        let mut know2 = Extent::full(&vs);
        know2.var.insert("z".into(), Ival::of(Bnd::NegInf, Bnd::Int(7)));
        let c2 = Certificate { knowledge: know2, support: supp2 };
        let p = c1.mul(&c2);
        // knowledge region is nonempty and has a finite total band cap from
        // factor 2's unknown high-z cells paired with factor 1's low support
        assert!(!p.knowledge.is_empty());
        assert!(p.knowledge.total.hi < Bnd::PosInf || p.knowledge.ival("z").hi < Bnd::PosInf);
        // a low-degree cell such as z = 0, w = -4 stays certified
        let mut d = BTreeMap::new();
        d.insert("z".to_string(), 0i64);
        d.insert("w".to_string(), -4i64);
        assert!(p.knowledge.contains(&d));
    }

    #[test]
    fn extent_ops() {
        let vs = vars(&["z"]);
        let mut a = Extent::full(&vs);
        a.var.insert("z".into(), Ival::of(Bnd::Int(0), Bnd::Int(3)));
        let b = a.shift_var("z", 2);
        assert_eq!(b.ival("z"), Ival::of(Bnd::Int(2), Bnd::Int(5)));
        assert!(Extent::full(&vs).covers(&a));
        assert!(!a.covers(&Extent::full(&vs)));
        let t = a.tighten();
        assert_eq!(t.total, Ival::of(Bnd::Int(0), Bnd::Int(3)));
    }
}

//! Harmonic decomposition of polynomials and the reproducing kernels.
//!
//! Every polynomial in a D-dimensional variable `z` splits uniquely as a sum
//! of powers of `z^2` times harmonic polynomials.  The splitting is computed
//! by recursion on the Laplacian, using the exact identity
//! `Delta((z^2)^n h) = 4n(n + m + D/2 - 1)(z^2)^(n-1) h` for `h` harmonic of
//! degree `m`; the prefactor never vanishes for `n >= 1`, so the recursion
//! divides safely and stays in exact rationals.
//!
//! The reproducing kernel `H_m(z, w)` is the unique (up to scale) harmonic
//! bidegree `(m, m)` polynomial appearing in the expansion of powers of
//! `((z-w)^2)`; it is extracted here from the joint harmonic decomposition
//! of the plain polynomial `((z-w)^2)^m` and normalized so that the
//! expansion of `((z-w)^2)^(-D/2)` has unit coefficients.

use std::collections::{BTreeMap, HashMap};
use std::sync::Mutex;

use once_cell::sync::Lazy;

use crate::poly::MultiPoly;
use crate::scalar::{self, Scalar};

/// Dimension of the space of harmonic polynomials of degree `m` in `d`
/// variables: `C(m+d-1, d-1) - C(m+d-3, d-1)`.
pub fn harmonic_dim(d: usize, m: u32) -> Scalar {
    let d = d as i64;
    let m = m as i64;
    &scalar::binomial_int(m + d - 1, d - 1) - &scalar::binomial_int(m + d - 3, d - 1)
}

/// True when the polynomial is annihilated by the Laplacian in `var`.
pub fn is_harmonic(p: &MultiPoly, var: &str) -> bool {
    p.laplacian(var).is_zero()
}

/// Decompose a polynomial homogeneous of degree `k` in `var` as
/// `p = sum_n (var^2)^n h_n` with every `h_n` harmonic in `var`.
/// Keys of the result are the powers `n`.
fn decompose_homogeneous(p: &MultiPoly, var: &str, k: u32) -> BTreeMap<u32, MultiPoly> {
    let mut out = BTreeMap::new();
    let lap = p.laplacian(var);
    if lap.is_zero() {
        if !p.is_zero() {
            out.insert(0, p.clone());
        }
        return out;
    }
    let sub = decompose_homogeneous(&lap, var, k - 2);
    let d = p.dim;
    let vsq = MultiPoly::vsq(d, var);
    let mut tail = MultiPoly::zero(d);
    for (j, g) in sub {
        let n = j + 1;
        let m = k - 2 * n; // harmonic degree of this component
        let c = scalar::int(4 * n as i64)
            * (scalar::int(n as i64 + m as i64 - 1) + scalar::ratio(d as i64, 2));
        let h = g.scale(&(Scalar::from_integer(1.into()) / c));
        tail = &tail + &(&vsq.pow(n) * &h);
        out.insert(n, h);
    }
    let h0 = p - &tail;
    if !h0.is_zero() {
        out.insert(0, h0);
    }
    out
}

/// Decompose an arbitrary polynomial in `var`: the result maps each power
/// `n` to a polynomial harmonic in `var` (possibly inhomogeneous) such that
/// `p = sum_n (var^2)^n h_n`.
pub fn decompose(p: &MultiPoly, var: &str) -> BTreeMap<u32, MultiPoly> {
    let mut out: BTreeMap<u32, MultiPoly> = BTreeMap::new();
    for (k, part) in p.homogeneous_parts(var) {
        for (n, h) in decompose_homogeneous(&part, var, k) {
            match out.entry(n) {
                std::collections::btree_map::Entry::Vacant(e) => {
                    e.insert(h);
                }
                std::collections::btree_map::Entry::Occupied(mut e) => {
                    let s = e.get() + &h;
                    if s.is_zero() {
                        e.remove();
                    } else {
                        *e.get_mut() = s;
                    }
                }
            }
        }
    }
    out
}

/// The harmonic projection: the `n = 0` component of [`decompose`].
pub fn harmonic_part(p: &MultiPoly, var: &str) -> MultiPoly {
    decompose(p, var).remove(&0).unwrap_or_else(|| MultiPoly::zero(p.dim))
}

static KERNEL_CACHE: Lazy<Mutex<HashMap<(usize, u32), MultiPoly>>> =
    Lazy::new(|| Mutex::new(HashMap::new()));

/// The reproducing kernel `H_m(z, w)`: harmonic of degree `m` in both
/// variables, symmetric, with `H_0 = 1` and `H_1 = D z.w`.
///
/// It is obtained by expanding the polynomial `((z-w)^2)^m`, projecting to
/// the component harmonic in both `z` and `w`, restricting to bidegree
/// `(m, m)` and rescaling by `binom(-D/2, m)`.
pub fn reproducing_kernel(d: usize, m: u32, zvar: &str, wvar: &str) -> MultiPoly {
    let key = (d, m);
    if let Some(p) = KERNEL_CACHE.lock().unwrap().get(&key) {
        return p.rename_var("z", zvar).rename_var("w", wvar);
    }
    let zsq = MultiPoly::vsq(d, "z");
    let wsq = MultiPoly::vsq(d, "w");
    let cross = MultiPoly::dot(d, "z", "w");
    // ((z-w)^2)^m with (z-w)^2 = z^2 - 2 z.w + w^2
    let base = &(&zsq - &cross.scale(&scalar::int(2))) + &wsq;
    let p = base.pow(m);
    // component harmonic in z, then in w
    let hz = harmonic_part(&p, "z");
    let hzw = harmonic_part(&hz, "w");
    // bidegree (m, m) piece
    let key_deg = vec![m, m];
    let vars = vec!["z".to_string(), "w".to_string()];
    let part = hzw
        .multi_homogeneous_parts(&vars)
        .remove(&key_deg)
        .unwrap_or_else(|| MultiPoly::zero(d));
    let scale = scalar::binomial(&scalar::ratio(-(d as i64), 2), m);
    let h = part.scale(&scale);
    KERNEL_CACHE.lock().unwrap().insert(key, h.clone());
    h.rename_var("z", zvar).rename_var("w", wvar)
}

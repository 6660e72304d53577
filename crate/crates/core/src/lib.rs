//! Exact computer algebra for the formal calculus of vertex algebras in
//! D space-time dimensions.
//!
//! The library works over the rationals with arbitrary precision.  Its
//! central objects are:
//!
//! * [`poly::MultiPoly`]: sparse exact polynomials in the coordinates of one
//!   or more D-dimensional formal variables;
//! * [`harmonic`]: decomposition of a polynomial into harmonic components
//!   times powers of the square of a variable;
//! * [`dist::FormalDist`]: formal distributions, i.e. sums of terms
//!   `(z^2)^gamma h(z)` with half-integer exponents and jointly harmonic
//!   polynomial coefficients, tracked together with per-variable degree
//!   windows that record which homogeneous degrees are exactly known;
//! * [`residue`]: the residue functional picking the `(z^2)^{-D/2}` cell,
//!   together with an independent local formula used as a cross-check;
//! * [`expand`]: binomial expansions of `((z-w)^2)^gamma` in a chosen
//!   direction, the reproducing kernels, and the delta distribution;
//! * [`fock`]: the free scalar field acting on a symmetric Fock space with
//!   harmonic momentum-polynomial labels;
//! * [`verify`]: machine checks of the structural identities (commutativity
//!   data, associativity, the Jacobi identity in residue and kernel form,
//!   the commutator formula and singular-part closure);
//! * [`geom`]: numerical evaluation of the residue as an integral over a
//!   real manifold, used as an end-to-end sanity check of the formal rules.
//!
//! All symbolic computation is exact.  Floating point appears only in the
//! [`geom`] module.

pub mod error;
pub mod scalar;
pub mod poly;
pub mod window;
pub mod harmonic;
pub mod dist;
pub mod residue;
pub mod expand;
pub mod fock;
pub mod d1;
pub mod verify;
pub mod geom;
pub mod par;

pub use error::{CalcError, Result};
pub use scalar::Scalar;

//! Polynomial differential forms in scaled cell coordinates.
//!
//! A form lives on a `d`-dimensional cell chart and is stored as a dense
//! coefficient matrix over (scaled monomial) × (orthonormal coframe
//! alternator) pairs.  Monomials are in the scaled variables
//! `ŷ = Uᵀ(x − x₀)/h`, while the alternators `dy^β` refer to the *physical*
//! orthonormal coframe, so the Hodge star is a signed permutation and the
//! exterior derivative / Koszul contraction pick up exact `1/h` and `h`
//! factors.  [`basis`] builds full and trimmed polynomial form spaces with
//! their L² Grams; [`constants`] measures chart-level operator norms.

pub mod basis;
pub mod constants;
pub mod form;
pub mod monomial;

pub use basis::{FullBasis, SpanBasis, TrimmedBasis};
pub use form::PolyForm;
pub use monomial::MonomialBasis;

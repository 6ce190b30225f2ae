//! Exact symbolic calculus on Grassmann algebras and superspace.
//!
//! Expressions are canonical-ordered multivectors with coefficients in
//! Q(i, sqrt 2); see [`expr::GrassmannExpr`]. Superspace operators, the
//! Berezin integral, supersymmetry variations, chirality and the chiral
//! split live in [`superspace`].

pub mod atom;
pub mod coeff;
pub mod expr;
pub mod superspace;

pub use atom::{EvenAtom, OddAtom};
pub use coeff::Coeff;
pub use expr::{GrassmannExpr, Monomial};
pub use superspace::{
    apply, berezin, chiral_split, chiral_superfield, chirality_check, ddt, generic_n2_superfield,
    identity_suite, n1_superfield, susy_variation_n1, susy_variation_n2, IdentityCheck, SuperOp,
    SuperspaceError,
};

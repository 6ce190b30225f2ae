//! Almost complex structures on periodic charts, and the machinery to turn
//! them into complex coordinates.
//!
//! The numeric half of the crate works on flat-torus charts ([`chart`]) with
//! spectral calculus ([`spectral`]): validation and canonicalization of almost
//! complex structures, Nijenhuis tensors ([`almost_complex`]), minimal-norm
//! solves of the dbar system ([`dbar`]), and construction of complex
//! coordinates by linearized dbar steps with continuation ([`coords`]).
//!
//! The exact half is a Grassmann-algebra engine over Gaussian rationals with
//! an adjoined sqrt(2) ([`grassmann`]) and a superspace verifier ([`susy`])
//! that checks the closure of the N = 2 supersymmetry algebra generated by a
//! formal almost complex structure, term by term.

pub mod almost_complex;
pub mod chart;
pub mod container;
pub mod coords;
pub mod dbar;
pub mod deform;
pub mod grassmann;
pub mod resample;
pub mod spectral;
pub mod susy;

pub use almost_complex::{AcsError, AlmostComplexStructure, NijenhuisField, ValidationReport, Vielbein};
pub use chart::{ChartError, GridChart, ScalarField, TensorField};
pub use coords::{ComplexCoordinateMap, ConstructConfig, CoordsError, HermitianMetricReport};
pub use dbar::{AntiholomorphicForm, DbarError, DbarSolution};
pub use grassmann::{Coeff, GrassmannExpr};

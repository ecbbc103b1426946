//! Poincaré–Dulac normal forms of polynomial ODEs
//! `dx/dt + Lambda x + phi(x) = 0` with real diagonal `Lambda`.
//!
//! Repeated eigenvalues are handled coordinate by coordinate in the given
//! eigenbasis; the resonance test only looks at the eigenvalue list.

mod nse;
mod poly;
mod system;

pub use nse::{truncated_nse_as_polysystem, Coordinate, NseBasis, NsePolySystem};
pub use poly::{Monomial, Poly, PolyMap, TermFile};
pub use system::{
    flow_check, is_resonant, normal_form, verify_conjugacy, DegreeReport, FlowCheck, NFResult, NFResultFile,
    PolySystem, PolySystemFile, MAX_DEGREE, MAX_DIMENSION, TOL_NEAR, TOL_RES,
};

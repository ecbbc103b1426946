//! Expansion coefficients, the normalization map and its normal form.
//!
//! Initial data built from a small `xi` (`u0 = sum_n q_n(0, xi)`) is the
//! regime every check here works in; whether the series converges for a
//! given nonzero `u0` is not decided by anything in this module.

mod expansion;
mod extract;
mod gauge;
mod homogeneous;
mod state;
mod weights;

pub use expansion::{s_ext, s_ext_exact, s_normal, s_normal_with, Expansion, GradedExpansion, MAX_LEVELS};
pub use extract::{extract_normalization, ComponentFit, ExtractOptions, Extraction};
pub use gauge::{enumerate, gauge, sinorm, MultiIndex};
pub use homogeneous::{homogeneous_part, homology_residual, HomogeneousPart, HomologyReport};
pub use state::{ComponentFile, NormalState, NormalStateFile};
pub use weights::{star_norm, star_norm_levels, WeightSchedule};

//! Fourier representation of divergence-free, zero-mean vector fields on the
//! torus `[0, 2π]^n` (n = 2 or 3) with unit viscosity.
//!
//! Fields are truncated to the shell-complete set `1 <= |k|^2 <= lambda_max`
//! and only one representative of each `±k` pair is stored; the amplitude of
//! `-k` is the complex conjugate. The representative is the vector whose first
//! nonzero coordinate is positive. Two-dimensional fields are embedded with a
//! zero third wave-vector coordinate and a zero third velocity component.
//!
//! Inner products and norms are taken over the stored half-space only, i.e.
//! `<u, v> = Re sum_k u(k) . conj(v(k))`, which is half of the normalized
//! `L^2` pairing. Every identity used in this crate is homogeneous in that
//! constant.

mod field;
mod io;
mod modes;
mod ops;

pub use field::{Cvec, RawField, ScalarField, SpectralField};
pub use io::FieldFile;
pub use modes::{is_representable, Dim, ModeSet, WaveVector};
pub use ops::{
    bilinear, bilinear_with, curl, leray_project, norm, shell_project, stokes_apply, stokes_power, vorticity_2d,
    GevreyParams,
};

/// Positive shell integer `m = |k|^2`.
pub type ShellIndex = u32;

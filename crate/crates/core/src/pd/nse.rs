use std::sync::Arc;

use num_complex::Complex64;

use super::poly::{Monomial, PolyMap};
use super::system::PolySystem;
use crate::error::{Error, Result};
use crate::init::fiber_basis;
use crate::spectral::{bilinear, Cvec, Dim, ModeSet, SpectralField};

/// One real coordinate: mode index, unit fiber vector, real or imaginary part.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Coordinate {
    pub mode: usize,
    pub fiber: [f64; 3],
    pub imaginary: bool,
}

/// Orthonormal real basis of the truncated divergence-free space: per stored
/// wave vector, the fiber vectors (two in 3D, one in 2D) times `{1, i}`.
#[derive(Clone, Debug)]
pub struct NseBasis {
    modes: Arc<ModeSet>,
    coords: Vec<Coordinate>,
}

impl NseBasis {
    pub fn new(modes: Arc<ModeSet>) -> Self {
        let mut coords = Vec::new();
        for (i, k) in modes.waves().iter().enumerate() {
            let fibers = match modes.dim() {
                Dim::Two => {
                    let [a, b, _] = k.as_f64();
                    let n = (a * a + b * b).sqrt();
                    vec![[-b / n, a / n, 0.0]]
                }
                Dim::Three => {
                    let (e1, e2) = fiber_basis(k);
                    vec![e1, e2]
                }
            };
            for fiber in fibers {
                for imaginary in [false, true] {
                    coords.push(Coordinate { mode: i, fiber, imaginary });
                }
            }
        }
        NseBasis { modes, coords }
    }

    pub fn modes(&self) -> &Arc<ModeSet> {
        &self.modes
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn coordinate(&self, i: usize) -> Coordinate {
        self.coords[i]
    }

    /// Stokes eigenvalue of each coordinate.
    pub fn eigenvalues(&self) -> Vec<f64> {
        self.coords.iter().map(|c| self.modes.shell_of(c.mode) as f64).collect()
    }

    pub fn shell(&self, i: usize) -> u32 {
        self.modes.shell_of(self.coords[i].mode)
    }

    pub fn field(&self, x: &[f64]) -> Result<SpectralField> {
        if x.len() != self.len() {
            return Err(Error::validation("coordinate vector has the wrong length"));
        }
        let mut amp: Vec<Cvec> = vec![[Complex64::new(0.0, 0.0); 3]; self.modes.len()];
        for (c, &v) in self.coords.iter().zip(x) {
            let s = if c.imaginary { Complex64::new(0.0, v) } else { Complex64::new(v, 0.0) };
            for (a, e) in amp[c.mode].iter_mut().zip(c.fiber) {
                *a += s * e;
            }
        }
        Ok(SpectralField::from_parts(Arc::clone(&self.modes), amp))
    }

    pub fn coords_of(&self, u: &SpectralField) -> Result<Vec<f64>> {
        if !u.modes().same_space(&self.modes) {
            return Err(Error::validation("field lives on a different truncation"));
        }
        Ok(self
            .coords
            .iter()
            .map(|c| {
                let a = u.amplitudes()[c.mode];
                let dot: Complex64 = a.iter().zip(c.fiber).map(|(z, e)| z * e).sum();
                if c.imaginary {
                    dot.im
                } else {
                    dot.re
                }
            })
            .collect())
    }

    fn unit(&self, i: usize) -> SpectralField {
        let mut x = vec![0.0; self.len()];
        x[i] = 1.0;
        self.field(&x).expect("length matches")
    }
}

/// Galerkin system `dx/dt + Lambda x + phi(x) = 0` with `phi` the
/// coordinates of `B(u(x), u(x))`.
pub struct NsePolySystem {
    pub system: PolySystem,
    pub basis: NseBasis,
}

/// Coefficients below this fraction of the largest are rounding from exact
/// zeros.
const CLEAN: f64 = 1e-13;

pub fn truncated_nse_as_polysystem(lambda_max: u32, dim: Dim) -> Result<NsePolySystem> {
    let modes = ModeSet::shared(dim, lambda_max)?;
    let basis = NseBasis::new(modes);
    let n = basis.len();
    let units: Vec<SpectralField> = (0..n).map(|i| basis.unit(i)).collect();
    let mut entries: Vec<(Monomial, usize, f64)> = Vec::new();
    for a in 0..n {
        for b in a..n {
            let mut v = bilinear(&units[a], &units[b])?;
            if b != a {
                v.axpy(1.0, &bilinear(&units[b], &units[a])?);
            }
            for (k, c) in basis.coords_of(&v)?.into_iter().enumerate() {
                if c != 0.0 {
                    entries.push((Monomial::from_vars(vec![a as u16, b as u16]), k, c));
                }
            }
        }
    }
    let top = entries.iter().fold(0.0f64, |acc, e| acc.max(e.2.abs()));
    let mut phi = PolyMap::zero(n);
    for (m, k, c) in entries {
        if c.abs() > CLEAN * top {
            phi.comps[k].add_term(m, c);
        }
    }
    Ok(NsePolySystem { system: PolySystem::new(basis.eigenvalues(), phi)?, basis })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::init::{random_field, rng_from_seed};

    #[test]
    fn basis_round_trip() {
        for dim in [Dim::Two, Dim::Three] {
            let ms = ModeSet::shared(dim, 5).unwrap();
            let b = NseBasis::new(Arc::clone(&ms));
            let u = random_field(&ms, 0.3, &mut rng_from_seed(4)).unwrap();
            let x = b.coords_of(&u).unwrap();
            let gap = b.field(&x).unwrap().max_abs_diff(&u);
            assert!(gap < 1e-15, "{dim:?} {gap}");
            let norm: f64 = x.iter().map(|v| v * v).sum::<f64>().sqrt();
            assert!((norm - u.norm_h()).abs() < 1e-14);
        }
    }

    #[test]
    fn quadratic_part_is_b() {
        let sys = truncated_nse_as_polysystem(3, Dim::Three).unwrap();
        let ms = Arc::clone(sys.basis.modes());
        let u = random_field(&ms, 0.1, &mut rng_from_seed(8)).unwrap();
        let x = sys.basis.coords_of(&u).unwrap();
        let want = sys.basis.coords_of(&bilinear(&u, &u).unwrap()).unwrap();
        let got = sys.system.phi().eval(&x);
        let gap = want.iter().zip(&got).fold(0.0f64, |a, (p, q)| a.max((p - q).abs()));
        assert!(gap < 1e-15, "{gap}");
    }
}

use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::expansion::GradedExpansion;
use super::state::NormalState;
use crate::error::{Error, Result};
use crate::spectral::{bilinear, stokes_apply, SpectralField};

/// Degree-`d` component extracted by scaling.
pub struct HomogeneousPart {
    pub value: SpectralField,
    /// 2-norm condition number of the Vandermonde matrix.
    pub condition: f64,
    pub scales: Vec<f64>,
}

/// Degree-`d` homogeneous component of a polynomial map `f` of degree at
/// most `d_max`, from `f(s xi)` at `d_max + 1` Chebyshev points on `[1/2, 1]`.
pub fn homogeneous_part<F>(f: F, xi: &NormalState, d: usize, d_max: usize) -> Result<HomogeneousPart>
where
    F: Fn(&NormalState) -> Result<SpectralField>,
{
    if d > d_max {
        return Err(Error::validation(format!("degree {d} exceeds the stated maximum {d_max}")));
    }
    let n = d_max + 1;
    let scales: Vec<f64> =
        (0..n).map(|i| 0.75 + 0.25 * ((2 * i + 1) as f64 * std::f64::consts::PI / (2 * n) as f64).cos()).collect();
    let vander = DMatrix::from_fn(n, n, |r, c| scales[r].powi(c as i32));
    let sv = vander.clone().singular_values();
    let condition = sv.max() / sv.min();
    let inv = vander.try_inverse().ok_or_else(|| Error::numeric("singular Vandermonde system"))?;
    let mut value = SpectralField::zeros(Arc::clone(xi.modes()));
    for (r, &s) in scales.iter().enumerate() {
        value.axpy(inv[(d, r)], &f(&xi.scaled(s))?);
    }
    Ok(HomogeneousPart { value, condition, scales })
}

/// Outcome of the homology cross-check at one degree.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HomologyReport {
    pub d: u32,
    /// `|Q^{[d]} - B^{[d]}| / |B^{[d]}|`, or the absolute gap when `B^{[d]} = 0`.
    pub residual: f64,
    pub q_norm: f64,
    pub b_norm: f64,
    pub fd_step: f64,
}

/// Relative step of the directional derivatives.
const FD_STEP: f64 = 1e-4;

/// `D P^{[k]}(xi) eta` by the five-point central stencil, which is exact for
/// the polynomial degrees involved (k <= 4).
fn directional(xi: &NormalState, eta: &NormalState, k: u32) -> Result<SpectralField> {
    let en = eta.to_field().norm_h();
    if en == 0.0 {
        return Ok(SpectralField::zeros(Arc::clone(xi.modes())));
    }
    let h = FD_STEP * xi.to_field().norm_h() / en;
    let at = |s: f64| GradedExpansion::new(xi.add(&eta.scaled(s * h))).p_homogeneous(k);
    let mut d = at(-2.0)?;
    d.axpy(-8.0, &at(-1.0)?);
    d.axpy(8.0, &at(1.0)?);
    d.axpy(-1.0, &at(2.0)?);
    Ok(d.scaled(1.0 / (12.0 * h)))
}

/// Assemble `Q^{[d]}` from the homology recursion
/// `Q^{[l]} = H_A P^{[l]} + sum_{a+b=l} B(P^{[a]}, P^{[b]}) - sum_{k,m>=2, k+m=l+1} D P^{[k]} Q^{[m]}`,
/// `H_A P = A P - D P(xi) A xi`, and compare with `B^{[d]}`.
pub fn homology_residual(xi: &NormalState, d: u32) -> Result<HomologyReport> {
    if d < 2 {
        return Err(Error::validation("the homology identity starts at degree 2"));
    }
    let g = GradedExpansion::new(xi.clone());
    let axi = xi.stokes_power(1.0);
    let mut p = vec![SpectralField::zeros(Arc::clone(xi.modes()))];
    for l in 1..=d {
        p.push(g.p_homogeneous(l)?);
    }
    let mut q: Vec<NormalState> = vec![NormalState::zeros(Arc::clone(xi.modes())); d as usize + 1];
    for l in 2..=d {
        let mut ql = stokes_apply(&p[l as usize]);
        ql.axpy(-1.0, &directional(xi, &axi, l)?);
        for a in 1..l {
            ql.axpy(1.0, &bilinear(&p[a as usize], &p[(l - a) as usize])?);
        }
        for k in 2..l {
            let m = l + 1 - k;
            if m >= 2 {
                ql.axpy(-1.0, &directional(xi, &q[m as usize], k)?);
            }
        }
        q[l as usize] = NormalState::from_field(&ql);
    }
    let qd = q[d as usize].to_field();
    let bd = g.b_homogeneous(d)?.to_field();
    let gap = qd.sub(&bd).norm_h();
    let b_norm = bd.norm_h();
    let residual = if b_norm > 0.0 { gap / b_norm } else { gap };
    Ok(HomologyReport { d, residual, q_norm: qd.norm_h(), b_norm, fd_step: FD_STEP })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::init::{beltrami, random_on_shells, rng_from_seed};
    use crate::normal_form::Expansion;
    use crate::spectral::{shell_project, Dim, ModeSet};

    #[test]
    fn first_and_second_parts() {
        let ms = ModeSet::shared(Dim::Three, 10).unwrap();
        let xi = NormalState::from_field(&random_on_shells(&ms, &[1], 0.05, &mut rng_from_seed(21)).unwrap());
        let p2 = |s: &NormalState| Expansion::new(s.clone()).q(2).map(|q| q.eval(0.0));
        let h2 = homogeneous_part(p2, &xi, 2, 2).unwrap();
        let x1 = xi.component(1);
        let b = bilinear(&x1, &x1).unwrap();
        let modes = Arc::clone(&ms);
        let want = b.sub(&shell_project(&b, 2)).weighted(|i| {
            let s = modes.shell_of(i);
            if s == 2 {
                0.0
            } else {
                -1.0 / (s as f64 - 2.0)
            }
        });
        assert!(h2.value.max_abs_diff(&want) < 1e-14 * want.norm_h().max(1e-3));
        assert!(h2.condition < 1e3);
        let p1 = |s: &NormalState| Ok(s.to_field());
        let h1 = homogeneous_part(p1, &xi, 1, 2).unwrap();
        assert!(h1.value.max_abs_diff(&x1) < 1e-15);
    }

    #[test]
    fn beltrami_homology_is_trivial() {
        let ms = ModeSet::shared(Dim::Three, 10).unwrap();
        let xi = NormalState::from_field(&beltrami(&ms, 1, 1, 0.05, &mut rng_from_seed(2)).unwrap());
        let r = homology_residual(&xi, 2).unwrap();
        assert!(r.b_norm < 1e-18 && r.q_norm < 1e-12, "{r:?}");
    }
}

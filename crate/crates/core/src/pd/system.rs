use serde::{Deserialize, Serialize};

use super::poly::{Monomial, PolyMap, TermFile};
use crate::error::{Error, Result};
use crate::fit::line_fit;

/// `|<alpha, lambda> - lambda_k|` below this is an exact resonance.
pub const TOL_RES: f64 = 1e-9;
/// Below this (and above `TOL_RES`) the monomial is kept with a warning.
pub const TOL_NEAR: f64 = 1e-6;
pub const MAX_DIMENSION: usize = 40;
pub const MAX_DEGREE: usize = 5;

/// `dx/dt + Lambda x + phi(x) = 0` with diagonal `Lambda` and `phi` of degree
/// at least two.
#[derive(Clone, Debug, PartialEq)]
pub struct PolySystem {
    eigenvalues: Vec<f64>,
    phi: PolyMap,
}

impl PolySystem {
    pub fn new(eigenvalues: Vec<f64>, phi: PolyMap) -> Result<Self> {
        if eigenvalues.is_empty() {
            return Err(Error::validation("empty system"));
        }
        if eigenvalues.iter().any(|l| !l.is_finite()) {
            return Err(Error::validation("eigenvalues must be finite"));
        }
        if phi.dim() != eigenvalues.len() {
            return Err(Error::validation(format!("{} eigenvalues but {} equations", eigenvalues.len(), phi.dim())));
        }
        for (m, k, c) in phi.entries() {
            if m.degree() < 2 {
                return Err(Error::validation(format!("equation {k}: nonlinear terms start at degree 2")));
            }
            if m.vars().iter().any(|&v| v as usize >= eigenvalues.len()) {
                return Err(Error::validation(format!("equation {k}: variable index out of range")));
            }
            if !c.is_finite() {
                return Err(Error::validation(format!("equation {k}: non-finite coefficient")));
            }
        }
        Ok(PolySystem { eigenvalues, phi })
    }

    pub fn dimension(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn phi(&self) -> &PolyMap {
        &self.phi
    }

    /// Full right-hand side `-(Lambda x + phi(x))` as a polynomial map.
    pub fn field(&self) -> PolyMap {
        let mut f = self.phi.clone();
        for (k, &l) in self.eigenvalues.iter().enumerate() {
            f.comps[k].add_term(Monomial::var(k), l);
        }
        let mut out = PolyMap::zero(self.dimension());
        out.axpy(-1.0, &f);
        out
    }

    pub fn rhs(&self, x: &[f64]) -> Vec<f64> {
        let p = self.phi.eval(x);
        p.iter().zip(x).zip(&self.eigenvalues).map(|((p, x), l)| -(l * x + p)).collect()
    }

    fn linear(&self) -> PolyMap {
        let mut out = PolyMap::zero(self.dimension());
        for (k, &l) in self.eigenvalues.iter().enumerate() {
            out.comps[k].add_term(Monomial::var(k), l);
        }
        out
    }
}

/// `lambda_k = <alpha, lambda>` within `TOL_RES`.
pub fn is_resonant(lambda: &[f64], alpha: &Monomial, k: usize) -> bool {
    (alpha.weight(lambda) - lambda[k]).abs() < TOL_RES
}

/// Per-degree bookkeeping.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DegreeReport {
    pub d: usize,
    pub removed: usize,
    pub kept: usize,
    pub near_resonant: usize,
    /// Largest degree-`d` coefficient of `F(Phi(y)) - D Phi(y) Theta(y)`.
    pub conjugacy_residual: f64,
}

/// Normal form `dy/dt + Lambda y + theta(y) = 0` reached by
/// `x = y + psi(y)`.
#[derive(Clone, Debug, PartialEq)]
pub struct NFResult {
    pub degree: usize,
    pub psi: PolyMap,
    pub theta: PolySystem,
    pub degrees: Vec<DegreeReport>,
    pub warnings: Vec<String>,
}

impl NFResult {
    /// `y + psi(y)`.
    pub fn transform(&self) -> PolyMap {
        PolyMap::identity(self.psi.dim()).add(&self.psi)
    }

    /// Solve `x = y + psi(y)` by fixed-point iteration (small `x`).
    pub fn inverse(&self, x: &[f64]) -> Result<Vec<f64>> {
        let scale = x.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        let mut y = x.to_vec();
        for _ in 0..500 {
            let p = self.psi.eval(&y);
            let next: Vec<f64> = x.iter().zip(&p).map(|(a, b)| a - b).collect();
            let change = next.iter().zip(&y).fold(0.0f64, |a, (u, v)| a.max((u - v).abs()));
            y = next;
            if change <= 1e-16 * scale.max(f64::MIN_POSITIVE) {
                return Ok(y);
            }
        }
        Err(Error::numeric("inverse transformation did not converge; initial point too large"))
    }
}

fn check_size(m: usize, d: usize) -> Result<()> {
    if d < 2 {
        return Err(Error::validation("normal-form degree must be at least 2"));
    }
    if m > MAX_DIMENSION || d > MAX_DEGREE {
        return Err(Error::Size(format!(
            "dimension {m} / degree {d} beyond the supported {MAX_DIMENSION} / {MAX_DEGREE}"
        )));
    }
    Ok(())
}

/// `(I + D psi)^{-1} (Lambda S + G(S)) - Lambda y` with `S = id + psi`,
/// truncated at `d_max`; the inverse is a Neumann series (`D psi` raises the
/// degree).
fn push_forward(lin: &PolyMap, g: &PolyMap, psi: &PolyMap, d_max: usize) -> PolyMap {
    let m = g.dim();
    let s = PolyMap::identity(m).add(psi);
    let h = lin.compose(&s, d_max).add(&g.compose(&s, d_max));
    let mut acc = h.clone();
    let mut term = h;
    for _ in 1..d_max {
        let next = psi.jvp(&term, d_max);
        let mut neg = PolyMap::zero(m);
        neg.axpy(-1.0, &next);
        term = neg;
        if term.max_abs() == 0.0 {
            break;
        }
        acc.axpy(1.0, &term);
    }
    let mut out = acc;
    out.axpy(-1.0, lin);
    out.truncated(d_max)
}

/// Degree-by-degree elimination of non-resonant monomials up to degree `d`.
pub fn normal_form(sys: &PolySystem, d: usize) -> Result<NFResult> {
    let m = sys.dimension();
    check_size(m, d)?;
    let lambda = sys.eigenvalues();
    let lin = sys.linear();
    let mut g = sys.phi().truncated(d);
    let mut phi_total = PolyMap::identity(m);
    let mut theta = PolyMap::zero(m);
    let mut warnings = Vec::new();
    let mut reports = Vec::new();
    for deg in 2..=d {
        let part = g.degree_part(deg);
        let mut psi = PolyMap::zero(m);
        let (mut removed, mut kept, mut near) = (0, 0, 0);
        for (mono, k, c) in part.entries() {
            let den = mono.weight(lambda) - lambda[k];
            if den.abs() < TOL_RES {
                kept += 1;
                theta.comps[k].add_term(mono, c);
            } else if den.abs() < TOL_NEAR {
                near += 1;
                warnings.push(format!(
                    "degree {deg}, equation {k}, monomial {:?}: denominator {den:e} treated as resonant",
                    mono.powers()
                ));
                theta.comps[k].add_term(mono, c);
            } else {
                removed += 1;
                psi.comps[k].add_term(mono, c / den);
            }
        }
        if removed > 0 {
            phi_total = phi_total.compose(&PolyMap::identity(m).add(&psi), d);
            g = push_forward(&lin, &g, &psi, d);
        }
        reports.push(DegreeReport { d: deg, removed, kept, near_resonant: near, conjugacy_residual: 0.0 });
    }
    let mut psi_total = phi_total;
    psi_total.axpy(-1.0, &PolyMap::identity(m));
    let theta = PolySystem::new(lambda.to_vec(), theta)?;
    let mut nf = NFResult { degree: d, psi: psi_total.truncated(d), theta, degrees: reports, warnings };
    let per_degree = conjugacy_by_degree(sys, &nf, d);
    for r in &mut nf.degrees {
        r.conjugacy_residual = per_degree[r.d];
    }
    Ok(nf)
}

/// `F(Phi(y)) - D Phi(y) Theta(y)`, largest coefficient per degree `0..=d`.
fn conjugacy_by_degree(sys: &PolySystem, nf: &NFResult, d: usize) -> Vec<f64> {
    let phi = nf.transform();
    let mut gap = sys.field().compose(&phi, d);
    gap.axpy(-1.0, &phi.jvp(&nf.theta.field(), d));
    let mut out = vec![0.0f64; d + 1];
    for (mono, _, c) in gap.entries() {
        if mono.degree() <= d {
            out[mono.degree()] = out[mono.degree()].max(c.abs());
        }
    }
    out
}

/// Largest coefficient of degree at most `d` in `F(Phi(y)) - D Phi(y) Theta(y)`.
pub fn verify_conjugacy(sys: &PolySystem, nf: &NFResult, d: usize) -> f64 {
    conjugacy_by_degree(sys, nf, d).into_iter().fold(0.0, f64::max)
}

fn rk4(f: impl Fn(&[f64]) -> Vec<f64>, x0: &[f64], dt: f64, steps: usize) -> Vec<f64> {
    let mut x = x0.to_vec();
    let shift = |x: &[f64], k: &[f64], s: f64| -> Vec<f64> { x.iter().zip(k).map(|(a, b)| a + s * b).collect() };
    for _ in 0..steps {
        let k1 = f(&x);
        let k2 = f(&shift(&x, &k1, 0.5 * dt));
        let k3 = f(&shift(&x, &k2, 0.5 * dt));
        let k4 = f(&shift(&x, &k3, dt));
        for i in 0..x.len() {
            x[i] += dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
    }
    x
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlowCheck {
    pub scales: Vec<f64>,
    pub errors: Vec<f64>,
    /// Slope of `ln error` against `ln scale`.
    pub slope: f64,
    pub fit_residual: f64,
    pub t_end: f64,
    pub dt: f64,
}

/// Integrate the system from `s * direction` and the normal form from the
/// pulled-back point, map back and compare at `t_end`.
pub fn flow_check(sys: &PolySystem, nf: &NFResult, direction: &[f64], scales: &[f64], t_end: f64) -> Result<FlowCheck> {
    if direction.len() != sys.dimension() {
        return Err(Error::validation("direction has the wrong dimension"));
    }
    if scales.len() < 2 || scales.iter().any(|s| !(*s > 0.0)) {
        return Err(Error::validation("need at least two positive scales"));
    }
    let dt = 1e-3;
    let steps = (t_end / dt).round() as usize;
    let phi = nf.transform();
    let mut errors = Vec::with_capacity(scales.len());
    for &s in scales {
        let x0: Vec<f64> = direction.iter().map(|v| s * v).collect();
        let x = rk4(|x| sys.rhs(x), &x0, dt, steps);
        let y0 = nf.inverse(&x0)?;
        let y = rk4(|y| nf.theta.rhs(y), &y0, dt, steps);
        let xt = phi.eval(&y);
        errors.push(x.iter().zip(&xt).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt());
    }
    let lx: Vec<f64> = scales.iter().map(|s| s.ln()).collect();
    let ly: Vec<f64> = errors.iter().map(|e| e.max(1e-300).ln()).collect();
    let fit = line_fit(&lx, &ly)?;
    Ok(FlowCheck { scales: scales.to_vec(), errors, slope: fit.slope, fit_residual: fit.rms, t_end, dt })
}

/// Serialized system; coefficients are written in shortest round-trip form.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolySystemFile {
    pub dimension: usize,
    pub eigenvalues: Vec<f64>,
    pub terms: Vec<TermFile>,
}

impl PolySystemFile {
    pub fn from_system(sys: &PolySystem) -> Self {
        PolySystemFile { dimension: sys.dimension(), eigenvalues: sys.eigenvalues.clone(), terms: sys.phi.to_terms() }
    }

    pub fn to_system(&self) -> Result<PolySystem> {
        if self.eigenvalues.len() != self.dimension {
            return Err(Error::validation("eigenvalue count differs from the dimension"));
        }
        PolySystem::new(self.eigenvalues.clone(), terms_to_map(self.dimension, &self.terms)?)
    }
}

pub(crate) fn terms_to_map(m: usize, terms: &[TermFile]) -> Result<PolyMap> {
    let mut phi = PolyMap::zero(m);
    for t in terms {
        if t.coord >= m || t.powers.iter().any(|p| p[0] as usize >= m) {
            return Err(Error::validation("term index out of range"));
        }
        let powers: Vec<(usize, u32)> = t.powers.iter().map(|p| (p[0] as usize, p[1])).collect();
        phi.comps[t.coord].add_term(Monomial::from_powers(&powers), t.coeff);
    }
    Ok(phi)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NFResultFile {
    pub degree: usize,
    pub psi: Vec<TermFile>,
    pub theta: PolySystemFile,
    pub degrees: Vec<DegreeReport>,
    pub warnings: Vec<String>,
}

impl NFResultFile {
    pub fn from_result(nf: &NFResult) -> Self {
        NFResultFile {
            degree: nf.degree,
            psi: nf.psi.to_terms(),
            theta: PolySystemFile::from_system(&nf.theta),
            degrees: nf.degrees.clone(),
            warnings: nf.warnings.clone(),
        }
    }

    pub fn to_result(&self) -> Result<NFResult> {
        let theta = self.theta.to_system()?;
        let psi = terms_to_map(theta.dimension(), &self.psi)?;
        Ok(NFResult { degree: self.degree, psi, theta, degrees: self.degrees.clone(), warnings: self.warnings.clone() })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(p: &[(usize, u32)]) -> Monomial {
        Monomial::from_powers(p)
    }

    #[test]
    fn resonance_examples() {
        assert!(is_resonant(&[1.0, 2.0], &m(&[(0, 2)]), 1));
        assert!(!is_resonant(&[1.0, 2.0], &m(&[(1, 2)]), 0));
        for a in [m(&[(0, 2)]), m(&[(0, 1), (1, 1)]), m(&[(1, 2)])] {
            assert!(!is_resonant(&[1.0, 3.0], &a, 0) && !is_resonant(&[1.0, 3.0], &a, 1));
        }
        assert!(is_resonant(&[1.0, 3.0], &m(&[(0, 3)]), 1));
    }

    #[test]
    fn homological_coefficient() {
        let mut phi = PolyMap::zero(2);
        phi.comps[0].add_term(m(&[(0, 1), (1, 1)]), 0.6);
        let sys = PolySystem::new(vec![1.0, 3.0], phi).unwrap();
        let nf = normal_form(&sys, 2).unwrap();
        assert!((nf.psi.comps[0].coeff(&m(&[(0, 1), (1, 1)])) - 0.2).abs() < 1e-15);
        assert!(nf.theta.phi().max_abs() == 0.0);
    }

    #[test]
    fn size_limits() {
        let sys = PolySystem::new(vec![1.0; 41], PolyMap::zero(41)).unwrap();
        assert!(matches!(normal_form(&sys, 2), Err(Error::Size(_))));
        let sys = PolySystem::new(vec![1.0, 2.0], PolyMap::zero(2)).unwrap();
        assert!(matches!(normal_form(&sys, 6), Err(Error::Size(_))));
    }
}

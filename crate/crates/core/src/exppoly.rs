//! Exponential polynomials `sum_m P_m(t) e^{-m t}` whose polynomial
//! coefficients are spectral fields.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::{map_indexed, Execution};
use crate::spectral::{bilinear_with, shell_project, FieldFile, ModeSet, SpectralField};

/// Polynomial in `t` with field coefficients, dense by degree. The zero
/// polynomial has no coefficients.
#[derive(Clone, Debug, PartialEq)]
pub struct PolyField {
    modes: Arc<ModeSet>,
    coeffs: Vec<SpectralField>,
}

impl PolyField {
    pub fn zero(modes: Arc<ModeSet>) -> Self {
        PolyField { modes, coeffs: Vec::new() }
    }

    pub fn constant(c: SpectralField) -> Self {
        PolyField::from_coeffs(Arc::clone(c.modes()), vec![c]).expect("single coefficient shares its space")
    }

    /// Trailing zero coefficients are dropped.
    pub fn from_coeffs(modes: Arc<ModeSet>, coeffs: Vec<SpectralField>) -> Result<Self> {
        for c in &coeffs {
            if !c.modes().same_space(&modes) {
                return Err(Error::validation("polynomial coefficients must share dimension and lambda_max"));
            }
        }
        let mut p = PolyField { modes, coeffs };
        p.trim();
        Ok(p)
    }

    fn trim(&mut self) {
        while self.coeffs.last().is_some_and(|c| c.is_zero()) {
            self.coeffs.pop();
        }
    }

    pub fn modes(&self) -> &Arc<ModeSet> {
        &self.modes
    }

    pub fn coeffs(&self) -> &[SpectralField] {
        &self.coeffs
    }

    /// `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Coefficient of `t^n` (zero past the degree).
    pub fn coeff(&self, n: usize) -> SpectralField {
        self.coeffs.get(n).cloned().unwrap_or_else(|| SpectralField::zeros(Arc::clone(&self.modes)))
    }

    /// Horner evaluation.
    pub fn eval(&self, t: f64) -> SpectralField {
        let mut acc = SpectralField::zeros(Arc::clone(&self.modes));
        for c in self.coeffs.iter().rev() {
            acc = acc.scaled(t);
            acc.axpy(1.0, c);
        }
        acc
    }

    pub fn derivative(&self) -> PolyField {
        let coeffs = self.coeffs.iter().enumerate().skip(1).map(|(n, c)| c.scaled(n as f64)).collect();
        PolyField { modes: Arc::clone(&self.modes), coeffs }
    }

    /// Antiderivative vanishing at `t = 0`.
    pub fn integral(&self) -> PolyField {
        if self.is_zero() {
            return self.clone();
        }
        let mut coeffs = vec![SpectralField::zeros(Arc::clone(&self.modes))];
        coeffs.extend(self.coeffs.iter().enumerate().map(|(n, c)| c.scaled(1.0 / (n + 1) as f64)));
        PolyField { modes: Arc::clone(&self.modes), coeffs }
    }

    pub fn add(&self, other: &PolyField) -> PolyField {
        let n = self.coeffs.len().max(other.coeffs.len());
        let coeffs = (0..n).map(|i| self.coeff(i).add(&other.coeff(i))).collect();
        let mut p = PolyField { modes: Arc::clone(&self.modes), coeffs };
        p.trim();
        p
    }

    pub fn scaled(&self, s: f64) -> PolyField {
        self.map(|c| c.scaled(s))
    }

    /// Apply a linear field map to every coefficient.
    pub fn map(&self, f: impl Fn(&SpectralField) -> SpectralField) -> PolyField {
        let mut p = PolyField { modes: Arc::clone(&self.modes), coeffs: self.coeffs.iter().map(f).collect() };
        p.trim();
        p
    }

    /// `p(t) -> p(t + s)`.
    pub fn shifted(&self, s: f64) -> PolyField {
        // repeated synthetic division is overkill at these degrees; expand binomially
        let d = self.coeffs.len();
        let mut out: Vec<SpectralField> = (0..d).map(|_| SpectralField::zeros(Arc::clone(&self.modes))).collect();
        for (n, c) in self.coeffs.iter().enumerate() {
            let mut binom = 1.0;
            for k in 0..=n {
                // t^k s^{n-k} C(n,k)
                out[k].axpy(binom * s.powi((n - k) as i32), c);
                binom = binom * (n - k) as f64 / (k + 1) as f64;
            }
        }
        let mut p = PolyField { modes: Arc::clone(&self.modes), coeffs: out };
        p.trim();
        p
    }

    /// Largest coefficient H norm.
    pub fn max_coeff_norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_h()).fold(0.0, f64::max)
    }
}

/// `B(p(t), q(t))` as a polynomial.
pub fn poly_bilinear(exec: Execution, p: &PolyField, q: &PolyField) -> Result<PolyField> {
    if !p.modes.same_space(&q.modes) {
        return Err(Error::validation("polynomials live on different spaces"));
    }
    if p.is_zero() || q.is_zero() {
        return Ok(PolyField::zero(Arc::clone(&p.modes)));
    }
    let pairs: Vec<(usize, usize)> =
        (0..p.coeffs.len()).flat_map(|a| (0..q.coeffs.len()).map(move |b| (a, b))).collect();
    let prods = map_indexed(exec, pairs.len(), |i| {
        let (a, b) = pairs[i];
        bilinear_with(Execution::Sequential, &p.coeffs[a], &q.coeffs[b]).expect("same space checked")
    });
    let deg = p.coeffs.len() + q.coeffs.len() - 1;
    let mut coeffs: Vec<SpectralField> = (0..deg).map(|_| SpectralField::zeros(Arc::clone(&p.modes))).collect();
    for ((a, b), f) in pairs.iter().zip(&prods) {
        coeffs[a + b].axpy(1.0, f);
    }
    PolyField::from_coeffs(Arc::clone(&p.modes), coeffs)
}

/// Finite sum `sum_m P_m(t) e^{-m t}` keyed by decay index.
#[derive(Clone, Debug, PartialEq)]
pub struct ExpPolyField {
    modes: Arc<ModeSet>,
    terms: BTreeMap<u32, PolyField>,
}

impl ExpPolyField {
    pub fn zero(modes: Arc<ModeSet>) -> Self {
        ExpPolyField { modes, terms: BTreeMap::new() }
    }

    pub fn single(m: u32, p: PolyField) -> Self {
        let mut f = ExpPolyField::zero(Arc::clone(p.modes()));
        f.add_term(m, &p);
        f
    }

    pub fn modes(&self) -> &Arc<ModeSet> {
        &self.modes
    }

    pub fn terms(&self) -> impl Iterator<Item = (u32, &PolyField)> {
        self.terms.iter().map(|(&m, p)| (m, p))
    }

    pub fn term(&self, m: u32) -> PolyField {
        self.terms.get(&m).cloned().unwrap_or_else(|| PolyField::zero(Arc::clone(&self.modes)))
    }

    /// `self += p e^{-m t}`.
    pub fn add_term(&mut self, m: u32, p: &PolyField) {
        let sum = match self.terms.get(&m) {
            Some(old) => old.add(p),
            None => p.clone(),
        };
        if sum.is_zero() {
            self.terms.remove(&m);
        } else {
            self.terms.insert(m, sum);
        }
    }

    pub fn add(&self, other: &ExpPolyField) -> ExpPolyField {
        let mut out = self.clone();
        for (m, p) in other.terms() {
            out.add_term(m, p);
        }
        out
    }

    pub fn scaled(&self, s: f64) -> ExpPolyField {
        let mut out = ExpPolyField::zero(Arc::clone(&self.modes));
        for (m, p) in self.terms() {
            out.add_term(m, &p.scaled(s));
        }
        out
    }

    /// Keep the terms with decay index accepted by `keep`.
    pub fn filter(&self, keep: impl Fn(u32) -> bool) -> ExpPolyField {
        let terms = self.terms.iter().filter(|(m, _)| keep(**m)).map(|(m, p)| (*m, p.clone())).collect();
        ExpPolyField { modes: Arc::clone(&self.modes), terms }
    }

    pub fn max_degree(&self) -> Option<usize> {
        self.terms.values().filter_map(|p| p.degree()).max()
    }
}

/// Pointwise value at `t`.
pub fn ep_eval(f: &ExpPolyField, t: f64) -> SpectralField {
    let mut acc = SpectralField::zeros(Arc::clone(&f.modes));
    for (m, p) in f.terms() {
        acc.axpy((-(m as f64) * t).exp(), &p.eval(t));
    }
    acc
}

/// `B(f, g)`: decay indices and degrees add.
pub fn ep_bilinear(f: &ExpPolyField, g: &ExpPolyField) -> Result<ExpPolyField> {
    ep_bilinear_with(Execution::best(), f, g)
}

pub fn ep_bilinear_with(exec: Execution, f: &ExpPolyField, g: &ExpPolyField) -> Result<ExpPolyField> {
    if !f.modes.same_space(&g.modes) {
        return Err(Error::validation("exponential polynomials live on different spaces"));
    }
    let mut out = ExpPolyField::zero(Arc::clone(&f.modes));
    for (m, p) in f.terms() {
        for (n, q) in g.terms() {
            out.add_term(m + n, &poly_bilinear(exec, p, q)?);
        }
    }
    Ok(out)
}

/// Term-wise `d/dt [P_m e^{-m t}] = (P_m' - m P_m) e^{-m t}`.
pub fn ep_derivative(f: &ExpPolyField) -> ExpPolyField {
    let mut out = ExpPolyField::zero(Arc::clone(&f.modes));
    for (m, p) in f.terms() {
        out.add_term(m, &p.derivative().add(&p.scaled(-(m as f64))));
    }
    out
}

fn resolvent_power(u: &SpectralField, j: u32, power: i32) -> SpectralField {
    let modes = Arc::clone(u.modes());
    u.weighted(|i| {
        let s = modes.shell_of(i);
        if s == j {
            0.0
        } else {
            (s as f64 - j as f64).powi(-power)
        }
    })
}

/// Polynomial solution of `q' + (A - j) q + beta = 0` with `R_j q(0) = xi_j`.
///
/// Off the shell the resolvent series
/// `sum_n (-1)^{n+1} (A - j)^{-n-1} d^n/dt^n (I - R_j) beta` terminates at
/// `n = deg beta`; on the shell `q = xi_j - int_0^t R_j beta`.
pub fn solve_level(j: u32, xi_j: &SpectralField, beta: &PolyField) -> Result<PolyField> {
    if !xi_j.modes().same_space(beta.modes()) {
        return Err(Error::validation("xi_j and beta live on different spaces"));
    }
    let on_shell = shell_project(xi_j, j);
    if on_shell.max_abs_diff(xi_j) != 0.0 {
        return Err(Error::validation(format!("xi_{j} must be supported on the shell |k|^2 = {j}")));
    }
    let shell_part = beta.map(|c| shell_project(c, j));
    let off = beta.map(|c| c.sub(&shell_project(c, j)));
    let mut q = PolyField::constant(on_shell).add(&shell_part.integral().scaled(-1.0));
    let mut deriv = off;
    let mut n = 0;
    while !deriv.is_zero() {
        let sign = if n % 2 == 0 { -1.0 } else { 1.0 };
        q = q.add(&deriv.map(|c| resolvent_power(c, j, n + 1)).scaled(sign));
        deriv = deriv.derivative();
        n += 1;
    }
    Ok(q)
}

/// Residual `q' + (A - j) q + beta` as a polynomial.
pub fn level_residual(j: u32, q: &PolyField, beta: &PolyField) -> PolyField {
    let shifted = q.map(|c| {
        let modes = Arc::clone(c.modes());
        c.weighted(|i| modes.shell_of(i) as f64 - j as f64)
    });
    q.derivative().add(&shifted).add(beta)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExpPolyFile {
    pub terms: Vec<TermFile>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermFile {
    pub m: u32,
    pub degree: usize,
    pub coeffs: Vec<FieldFile>,
}

impl ExpPolyFile {
    pub fn from_ep(f: &ExpPolyField) -> Self {
        let terms = f
            .terms()
            .map(|(m, p)| TermFile {
                m,
                degree: p.degree().unwrap_or(0),
                coeffs: p.coeffs().iter().map(FieldFile::from_field).collect(),
            })
            .collect();
        ExpPolyFile { terms }
    }

    /// Needs the target space for the (possible) empty case.
    pub fn to_ep(&self, modes: &Arc<ModeSet>) -> Result<ExpPolyField> {
        let mut out = ExpPolyField::zero(Arc::clone(modes));
        for t in &self.terms {
            if t.coeffs.len() != t.degree + 1 {
                return Err(Error::validation(format!(
                    "term m={}: degree {} needs {} coefficients",
                    t.m,
                    t.degree,
                    t.degree + 1
                )));
            }
            let coeffs = t.coeffs.iter().map(|c| c.to_field()).collect::<Result<Vec<_>>>()?;
            let p = PolyField::from_coeffs(Arc::clone(modes), coeffs)?;
            if p.degree().unwrap_or(0) != t.degree {
                return Err(Error::validation(format!("term m={}: trailing coefficient is zero", t.m)));
            }
            out.add_term(t.m, &p);
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::init::{random_on_shells, rng_from_seed};
    use crate::spectral::{bilinear, Dim};

    fn space() -> Arc<ModeSet> {
        ModeSet::shared(Dim::Three, 6).unwrap()
    }

    #[test]
    fn eval_examples() {
        let ms = space();
        let c = random_on_shells(&ms, &[1, 2], 1.0, &mut rng_from_seed(1)).unwrap();
        let f = ExpPolyField::single(1, PolyField::constant(c.clone()));
        assert_eq!(ep_eval(&f, 0.0), c);
        let zero = SpectralField::zeros(Arc::clone(&ms));
        let g = ExpPolyField::single(1, PolyField::from_coeffs(Arc::clone(&ms), vec![zero, c.clone()]).unwrap());
        assert!(ep_eval(&g, 2.0).max_abs_diff(&c.scaled(2.0 * (-2f64).exp())) < 1e-16);
    }

    #[test]
    fn bilinear_adds_indices_and_degrees() {
        let ms = space();
        let mut rng = rng_from_seed(2);
        let a = random_on_shells(&ms, &[1], 0.5, &mut rng).unwrap();
        let b = random_on_shells(&ms, &[2], 0.5, &mut rng).unwrap();
        let f = ExpPolyField::single(1, PolyField::constant(a.clone()));
        let g = ExpPolyField::single(1, PolyField::constant(b.clone()));
        let h = ep_bilinear(&f, &g).unwrap();
        assert_eq!(h.terms().count(), 1);
        assert_eq!(h.term(2).degree(), Some(0));
        assert!(h.term(2).coeff(0).max_abs_diff(&bilinear(&a, &b).unwrap()) < 1e-15);

        let lin = ExpPolyField::single(1, PolyField::from_coeffs(Arc::clone(&ms), vec![b.clone(), a.clone()]).unwrap());
        assert_eq!(ep_bilinear(&lin, &g).unwrap().term(2).degree(), Some(1));
    }

    #[test]
    fn derivative_examples() {
        let ms = space();
        let c = random_on_shells(&ms, &[3], 1.0, &mut rng_from_seed(3)).unwrap();
        let f = ExpPolyField::single(1, PolyField::constant(c.clone()));
        assert_eq!(ep_eval(&ep_derivative(&f), 0.0), c.scaled(-1.0));
        let zero = SpectralField::zeros(Arc::clone(&ms));
        let g = ExpPolyField::single(0, PolyField::from_coeffs(Arc::clone(&ms), vec![zero, c.clone()]).unwrap());
        let dg = ep_derivative(&g);
        assert_eq!(dg.term(0).degree(), Some(0));
        assert_eq!(dg.term(0).coeff(0), c);
    }

    #[test]
    fn solve_level_second_order_formula() {
        let ms = space();
        let xi1 = random_on_shells(&ms, &[1], 0.2, &mut rng_from_seed(4)).unwrap();
        let xi2 = random_on_shells(&ms, &[2], 0.1, &mut rng_from_seed(5)).unwrap();
        let b11 = bilinear(&xi1, &xi1).unwrap();
        let q2 = solve_level(2, &xi2, &PolyField::constant(b11.clone())).unwrap();
        // t-linear shell part and the displayed constant term
        assert!(q2.coeff(1).max_abs_diff(&shell_project(&b11, 2).scaled(-1.0)) < 1e-16);
        let off = b11.sub(&shell_project(&b11, 2));
        let modes = Arc::clone(&ms);
        let res = off.weighted(|i| {
            let s = modes.shell_of(i);
            if s == 2 {
                0.0
            } else {
                1.0 / (s as f64 - 2.0)
            }
        });
        assert!(q2.coeff(0).max_abs_diff(&xi2.sub(&res)) < 1e-16);
        assert!(level_residual(2, &q2, &PolyField::constant(b11)).max_coeff_norm() < 1e-15);
        assert!(solve_level(2, &xi1, &PolyField::zero(Arc::clone(&ms))).is_err());
        let q1 = solve_level(1, &xi1, &PolyField::zero(Arc::clone(&ms))).unwrap();
        assert_eq!(q1, PolyField::constant(xi1));
    }

    #[test]
    fn solve_level_high_degree_forcing() {
        let ms = space();
        let mut rng = rng_from_seed(6);
        let coeffs: Vec<_> =
            (0..4).map(|_| random_on_shells(&ms, &[1, 2, 3, 4, 5, 6], 1.0, &mut rng).unwrap()).collect();
        let beta = PolyField::from_coeffs(Arc::clone(&ms), coeffs).unwrap();
        let xi = random_on_shells(&ms, &[3], 1.0, &mut rng).unwrap();
        let q = solve_level(3, &xi, &beta).unwrap();
        assert!(level_residual(3, &q, &beta).max_coeff_norm() < 1e-12);
        assert!(shell_project(&q.eval(0.0), 3).max_abs_diff(&xi) < 1e-15);
        // non-shell level: the xi slot must be zero
        let q7 = solve_level(7, &SpectralField::zeros(Arc::clone(&ms)), &beta).unwrap();
        assert!(level_residual(7, &q7, &beta).max_coeff_norm() < 1e-12);
    }

    #[test]
    fn shift_matches_evaluation() {
        let ms = space();
        let mut rng = rng_from_seed(8);
        let coeffs: Vec<_> = (0..4).map(|_| random_on_shells(&ms, &[1, 2], 1.0, &mut rng).unwrap()).collect();
        let p = PolyField::from_coeffs(Arc::clone(&ms), coeffs).unwrap();
        let s = p.shifted(0.7);
        assert!(s.eval(1.3).max_abs_diff(&p.eval(2.0)) < 1e-13);
    }

    #[test]
    fn json_round_trip() {
        let ms = space();
        let mut rng = rng_from_seed(9);
        let a = random_on_shells(&ms, &[1], 1.0, &mut rng).unwrap();
        let b = random_on_shells(&ms, &[2], 1.0, &mut rng).unwrap();
        let mut f = ExpPolyField::single(1, PolyField::constant(a.clone()));
        f.add_term(3, &PolyField::from_coeffs(Arc::clone(&ms), vec![a, b]).unwrap());
        let text = serde_json::to_string(&ExpPolyFile::from_ep(&f)).unwrap();
        let back: ExpPolyFile = serde_json::from_str(&text).unwrap();
        assert_eq!(back.to_ep(&ms).unwrap(), f);
    }
}

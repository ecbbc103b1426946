use std::collections::btree_map::Entry;
use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

/// Monomial as a sorted multiset of variable indices: `[0, 0, 2]` is
/// `x_0^2 x_2`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Monomial(Vec<u16>);

impl Monomial {
    pub fn one() -> Self {
        Monomial(Vec::new())
    }

    pub fn var(i: usize) -> Self {
        Monomial(vec![i as u16])
    }

    pub fn from_vars(mut vars: Vec<u16>) -> Self {
        vars.sort_unstable();
        Monomial(vars)
    }

    /// From `(variable, exponent)` pairs.
    pub fn from_powers(powers: &[(usize, u32)]) -> Self {
        let mut v = Vec::new();
        for &(i, e) in powers {
            v.extend(std::iter::repeat_n(i as u16, e as usize));
        }
        Monomial::from_vars(v)
    }

    pub fn degree(&self) -> usize {
        self.0.len()
    }

    pub fn vars(&self) -> &[u16] {
        &self.0
    }

    /// `(variable, exponent)` pairs in increasing variable order.
    pub fn powers(&self) -> Vec<(usize, u32)> {
        let mut out: Vec<(usize, u32)> = Vec::new();
        for &v in &self.0 {
            match out.last_mut() {
                Some((i, e)) if *i == v as usize => *e += 1,
                _ => out.push((v as usize, 1)),
            }
        }
        out
    }

    /// `<alpha, lambda>`.
    pub fn weight(&self, lambda: &[f64]) -> f64 {
        self.0.iter().map(|&v| lambda[v as usize]).sum()
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        let mut v = Vec::with_capacity(self.0.len() + other.0.len());
        let (mut i, mut j) = (0, 0);
        while i < self.0.len() && j < other.0.len() {
            if self.0[i] <= other.0[j] {
                v.push(self.0[i]);
                i += 1;
            } else {
                v.push(other.0[j]);
                j += 1;
            }
        }
        v.extend_from_slice(&self.0[i..]);
        v.extend_from_slice(&other.0[j..]);
        Monomial(v)
    }

    /// Drop the last factor (monomials are built left to right).
    fn split_last(&self) -> Option<(Monomial, usize)> {
        let (&last, rest) = self.0.split_last()?;
        Some((Monomial(rest.to_vec()), last as usize))
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.0.iter().map(|&v| x[v as usize]).product()
    }
}

/// Scalar polynomial with real coefficients.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct Poly {
    terms: BTreeMap<Monomial, f64>,
}

impl Poly {
    pub fn zero() -> Self {
        Poly::default()
    }

    pub fn var(i: usize) -> Self {
        let mut p = Poly::zero();
        p.add_term(Monomial::var(i), 1.0);
        p
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Monomial, f64)> {
        self.terms.iter().map(|(m, &c)| (m, c))
    }

    pub fn coeff(&self, m: &Monomial) -> f64 {
        self.terms.get(m).copied().unwrap_or(0.0)
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Accumulate; exact cancellations drop the entry.
    pub fn add_term(&mut self, m: Monomial, c: f64) {
        if c == 0.0 {
            return;
        }
        match self.terms.entry(m) {
            Entry::Occupied(mut o) => {
                *o.get_mut() += c;
                if *o.get() == 0.0 {
                    o.remove();
                }
            }
            Entry::Vacant(v) => {
                v.insert(c);
            }
        }
    }

    pub fn axpy(&mut self, s: f64, other: &Poly) {
        for (m, c) in other.terms() {
            self.add_term(m.clone(), s * c);
        }
    }

    pub fn degree_part(&self, d: usize) -> Poly {
        Poly { terms: self.terms.iter().filter(|(m, _)| m.degree() == d).map(|(m, &c)| (m.clone(), c)).collect() }
    }

    pub fn truncated(&self, d_max: usize) -> Poly {
        Poly { terms: self.terms.iter().filter(|(m, _)| m.degree() <= d_max).map(|(m, &c)| (m.clone(), c)).collect() }
    }

    pub fn mul_trunc(&self, other: &Poly, d_max: usize) -> Poly {
        let mut out = Poly::zero();
        for (a, ca) in self.terms() {
            for (b, cb) in other.terms() {
                if a.degree() + b.degree() <= d_max {
                    out.add_term(a.mul(b), ca * cb);
                }
            }
        }
        out
    }

    /// `d/dx_i`.
    pub fn derivative(&self, i: usize) -> Poly {
        let mut out = Poly::zero();
        for (m, c) in self.terms() {
            let e = m.vars().iter().filter(|&&v| v as usize == i).count();
            if e == 0 {
                continue;
            }
            let mut vars = m.vars().to_vec();
            let pos = vars.iter().position(|&v| v as usize == i).unwrap();
            vars.remove(pos);
            out.add_term(Monomial(vars), c * e as f64);
        }
        out
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.terms().map(|(m, c)| c * m.eval(x)).sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.terms.values().fold(0.0, |a, c| a.max(c.abs()))
    }
}

/// Polynomial map `R^m -> R^m`, one `Poly` per coordinate.
#[derive(Clone, Debug, PartialEq)]
pub struct PolyMap {
    pub comps: Vec<Poly>,
}

impl PolyMap {
    pub fn zero(m: usize) -> Self {
        PolyMap { comps: vec![Poly::zero(); m] }
    }

    pub fn identity(m: usize) -> Self {
        PolyMap { comps: (0..m).map(Poly::var).collect() }
    }

    pub fn dim(&self) -> usize {
        self.comps.len()
    }

    pub fn add(&self, other: &PolyMap) -> PolyMap {
        let mut out = self.clone();
        out.axpy(1.0, other);
        out
    }

    pub fn axpy(&mut self, s: f64, other: &PolyMap) {
        for (a, b) in self.comps.iter_mut().zip(&other.comps) {
            a.axpy(s, b);
        }
    }

    pub fn degree_part(&self, d: usize) -> PolyMap {
        PolyMap { comps: self.comps.iter().map(|p| p.degree_part(d)).collect() }
    }

    pub fn truncated(&self, d_max: usize) -> PolyMap {
        PolyMap { comps: self.comps.iter().map(|p| p.truncated(d_max)).collect() }
    }

    /// `(monomial, coordinate, coefficient)` in a fixed order.
    pub fn entries(&self) -> Vec<(Monomial, usize, f64)> {
        let mut out = Vec::new();
        for (k, p) in self.comps.iter().enumerate() {
            for (m, c) in p.terms() {
                out.push((m.clone(), k, c));
            }
        }
        out
    }

    pub fn eval(&self, x: &[f64]) -> Vec<f64> {
        self.comps.iter().map(|p| p.eval(x)).collect()
    }

    pub fn max_abs(&self) -> f64 {
        self.comps.iter().fold(0.0, |a, p| a.max(p.max_abs()))
    }

    /// `self(s(y))`, truncated at `d_max`. Powers of the substituted
    /// coordinates are memoized by monomial.
    pub fn compose(&self, s: &PolyMap, d_max: usize) -> PolyMap {
        let mut cache: HashMap<Monomial, Poly> = HashMap::new();
        let mut one = Poly::zero();
        one.add_term(Monomial::one(), 1.0);
        cache.insert(Monomial::one(), one);
        let comps = self
            .comps
            .iter()
            .map(|p| {
                let mut out = Poly::zero();
                for (m, c) in p.terms() {
                    let val = substituted(m, s, d_max, &mut cache);
                    out.axpy(c, &val);
                }
                out
            })
            .collect();
        PolyMap { comps }
    }

    /// Directional derivative `D self(y) v(y)`, truncated at `d_max`.
    pub fn jvp(&self, v: &PolyMap, d_max: usize) -> PolyMap {
        let m = self.dim();
        let comps = self
            .comps
            .iter()
            .map(|p| {
                let mut out = Poly::zero();
                for j in 0..m {
                    if v.comps[j].is_empty() {
                        continue;
                    }
                    let dj = p.derivative(j);
                    if !dj.is_empty() {
                        out.axpy(1.0, &dj.mul_trunc(&v.comps[j], d_max));
                    }
                }
                out
            })
            .collect();
        PolyMap { comps }
    }
}

fn substituted(m: &Monomial, s: &PolyMap, d_max: usize, cache: &mut HashMap<Monomial, Poly>) -> Poly {
    if let Some(p) = cache.get(m) {
        return p.clone();
    }
    let (rest, last) = m.split_last().expect("the empty monomial is cached");
    let head = substituted(&rest, s, d_max, cache);
    let val = head.mul_trunc(&s.comps[last], d_max);
    cache.insert(m.clone(), val.clone());
    val
}

/// One coefficient in serialized form; variables and coordinates count from 0.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermFile {
    /// `[variable, exponent]` pairs.
    pub powers: Vec<[u32; 2]>,
    pub coord: usize,
    pub coeff: f64,
}

impl PolyMap {
    pub fn to_terms(&self) -> Vec<TermFile> {
        self.entries()
            .into_iter()
            .map(|(m, k, c)| TermFile {
                powers: m.powers().into_iter().map(|(i, e)| [i as u32, e]).collect(),
                coord: k,
                coeff: c,
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compose_matches_pointwise() {
        let mut f = PolyMap::zero(2);
        f.comps[0].add_term(Monomial::from_powers(&[(0, 2)]), 1.5);
        f.comps[1].add_term(Monomial::from_powers(&[(0, 1), (1, 1)]), -2.0);
        let mut s = PolyMap::identity(2);
        s.comps[0].add_term(Monomial::from_powers(&[(1, 2)]), 0.25);
        let c = f.compose(&s, 6);
        let y = [0.3, -0.7];
        let sy = s.eval(&y);
        let want = f.eval(&sy);
        let got = c.eval(&y);
        assert!((want[0] - got[0]).abs() < 1e-15 && (want[1] - got[1]).abs() < 1e-15);
    }

    #[test]
    fn derivative_of_power() {
        let mut p = Poly::zero();
        p.add_term(Monomial::from_powers(&[(0, 3), (1, 1)]), 2.0);
        let d = p.derivative(0);
        assert_eq!(d.coeff(&Monomial::from_powers(&[(0, 2), (1, 1)])), 6.0);
    }
}

use std::collections::HashMap;
use std::sync::{Arc, RwLock};

use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::exppoly::{ep_eval, poly_bilinear, solve_level, ExpPolyField, PolyField};
use crate::solver::{evolve_levels, EvolveOptions};
use crate::spectral::{ModeSet, SpectralField};

use super::state::NormalState;

/// Largest level count accepted by the level-stack routines.
pub const MAX_LEVELS: usize = 40;

/// The coefficients `q_n(t, xi)` of `u(t) = sum_n q_n(t, xi) e^{-n t}`,
/// computed level by level and memoized.
pub struct Expansion {
    xi: NormalState,
    exec: Execution,
    levels: RwLock<Vec<PolyField>>,
}

impl Expansion {
    pub fn new(xi: NormalState) -> Self {
        Expansion { xi, exec: Execution::best(), levels: RwLock::new(Vec::new()) }
    }

    pub fn with_exec(xi: NormalState, exec: Execution) -> Self {
        Expansion { xi, exec, levels: RwLock::new(Vec::new()) }
    }

    pub fn xi(&self) -> &NormalState {
        &self.xi
    }

    pub fn modes(&self) -> &Arc<ModeSet> {
        self.xi.modes()
    }

    /// `q_n(., xi)`.
    pub fn q(&self, n: usize) -> Result<PolyField> {
        if n == 0 {
            return Err(Error::validation("levels start at n = 1"));
        }
        if let Some(p) = self.levels.read().expect("memo poisoned").get(n - 1) {
            return Ok(p.clone());
        }
        let mut levels = self.levels.write().expect("memo poisoned");
        while levels.len() < n {
            let j = levels.len() + 1;
            let beta = forcing(self.exec, self.modes(), j, |k| &levels[k - 1])?;
            let q = solve_level(j as u32, &self.xi.component(j as u32), &beta)?;
            levels.push(q);
        }
        Ok(levels[n - 1].clone())
    }

    /// `p_n`: `q_n` with its own slot `xi_n` set to zero, so `q_n = xi_n + p_n`.
    pub fn p(&self, n: usize) -> Result<PolyField> {
        let q = self.q(n)?;
        Ok(q.add(&PolyField::constant(self.xi.component(n as u32).scaled(-1.0))))
    }

    /// `sum_{n<=order} q_n(t) e^{-n t}`.
    pub fn series(&self, order: usize) -> Result<ExpPolyField> {
        let mut f = ExpPolyField::zero(Arc::clone(self.modes()));
        for n in 1..=order {
            f.add_term(n as u32, &self.q(n)?);
        }
        Ok(f)
    }

    /// `sum_{n<=order} q_n(0, xi)`: initial data whose normalization is `xi`
    /// up to the neglected levels.
    pub fn initial_data(&self, order: usize) -> Result<SpectralField> {
        let mut u = SpectralField::zeros(Arc::clone(self.modes()));
        for n in 1..=order {
            u.axpy(1.0, &self.q(n)?.eval(0.0));
        }
        Ok(u)
    }

    /// Levels until `|q_n(0)| <= tol * |xi|` for `s_max` consecutive `n`
    /// (data on a sublattice leaves whole residue classes empty), at most
    /// `max_order`.
    pub fn converged_order(&self, tol: f64, max_order: usize) -> Result<usize> {
        let total = self.xi.to_field().norm_h();
        let run = self.xi.max_shell().max(1) as usize;
        let mut small = 0;
        for n in 1..=max_order {
            let q0 = self.q(n)?.eval(0.0).norm_h();
            if n > self.xi.max_shell() as usize && q0 <= tol * total {
                small += 1;
                if small == run {
                    return Ok(n);
                }
            } else {
                small = 0;
            }
        }
        Ok(max_order)
    }
}

/// `beta_j = sum_{k+l=j} B(q_k, q_l)`.
fn forcing<'a>(
    exec: Execution,
    modes: &Arc<ModeSet>,
    j: usize,
    q: impl Fn(usize) -> &'a PolyField,
) -> Result<PolyField> {
    let mut beta = PolyField::zero(Arc::clone(modes));
    for k in 1..j {
        beta = beta.add(&poly_bilinear(exec, q(k), q(j - k))?);
    }
    Ok(beta)
}

/// Normal-form flow: component `n` is `R_n q_n(t, xi0) e^{-n t}`, `n <= order`.
pub fn s_normal(xi0: &NormalState, t: f64, order: usize) -> Result<NormalState> {
    let ex = Expansion::new(xi0.clone());
    s_normal_with(&ex, t, order)
}

pub fn s_normal_with(ex: &Expansion, t: f64, order: usize) -> Result<NormalState> {
    let mut out = NormalState::zeros(Arc::clone(ex.modes()));
    for n in 1..=order as u32 {
        if !ex.modes().has_shell(n) {
            continue;
        }
        let v = crate::spectral::shell_project(&ex.q(n as usize)?.eval(t), n).scaled((-(n as f64) * t).exp());
        out.set(n, v)?;
    }
    Ok(out)
}

/// Extended-NSE flow of a level stack (`levels[i]` is level `i + 1`) to time
/// `opts.t_end`.
pub fn s_ext(levels: &[SpectralField], opts: &EvolveOptions) -> Result<Vec<SpectralField>> {
    if levels.len() > MAX_LEVELS {
        return Err(Error::Size(format!("{} levels exceed the budget of {MAX_LEVELS}", levels.len())));
    }
    let (_, snaps) = evolve_levels(levels, opts)?;
    Ok(snaps.into_iter().last().expect("initial snapshot is always stored"))
}

/// Exact extended-NSE solution from consistent data: level `n` is
/// `q_n(t, xi) e^{-n t}`.
pub fn s_ext_exact(ex: &Expansion, t: f64, order: usize) -> Result<Vec<SpectralField>> {
    (1..=order).map(|n| Ok(ep_eval(&ExpPolyField::single(n as u32, ex.q(n)?), t))).collect()
}

/// Degree-graded coefficients `q_j^{[m]}` with
/// `q_j(t, s xi) = sum_m s^m q_j^{[m]}(t, xi)`.
pub struct GradedExpansion {
    xi: NormalState,
    exec: Execution,
    table: RwLock<HashMap<(u32, u32), PolyField>>,
}

impl GradedExpansion {
    pub fn new(xi: NormalState) -> Self {
        GradedExpansion { xi, exec: Execution::best(), table: RwLock::new(HashMap::new()) }
    }

    pub fn xi(&self) -> &NormalState {
        &self.xi
    }

    fn zero(&self) -> PolyField {
        PolyField::zero(Arc::clone(self.xi.modes()))
    }

    /// Highest shell carrying data; levels beyond `m * s_max` vanish at degree `m`.
    fn s_max(&self) -> u32 {
        self.xi.max_shell()
    }

    /// `q_j^{[m]}`.
    pub fn q(&self, j: u32, m: u32) -> Result<PolyField> {
        if m == 0 || m > j || j > m * self.s_max() {
            return Ok(self.zero());
        }
        if let Some(p) = self.table.read().expect("memo poisoned").get(&(j, m)) {
            return Ok(p.clone());
        }
        let value = if m == 1 {
            PolyField::constant(self.xi.component(j))
        } else {
            let mut beta = self.zero();
            for k in 1..j {
                for a in 1..m {
                    let left = self.q(k, a)?;
                    if left.is_zero() {
                        continue;
                    }
                    let right = self.q(j - k, m - a)?;
                    beta = beta.add(&poly_bilinear(self.exec, &left, &right)?);
                }
            }
            solve_level(j, &SpectralField::zeros(Arc::clone(self.xi.modes())), &beta)?
        };
        self.table.write().expect("memo poisoned").insert((j, m), value.clone());
        Ok(value)
    }

    /// `P_j^{[m]}(xi) = q_j^{[m]}(0, xi)`.
    pub fn p_level(&self, j: u32, m: u32) -> Result<SpectralField> {
        Ok(self.q(j, m)?.eval(0.0))
    }

    /// `P^{[d]}(xi) = sum_j P_j^{[d]}(xi)`; finite because `xi` is truncated.
    pub fn p_homogeneous(&self, d: u32) -> Result<SpectralField> {
        let mut u = SpectralField::zeros(Arc::clone(self.xi.modes()));
        for j in d..=d * self.s_max() {
            u.axpy(1.0, &self.p_level(j, d)?);
        }
        Ok(u)
    }

    /// `B^{[d]}(xi) = sum_j sum_{k+l=j} sum_{a+b=d} R_j B(P_k^{[a]}, P_l^{[b]})`.
    pub fn b_homogeneous(&self, d: u32) -> Result<NormalState> {
        let modes = Arc::clone(self.xi.modes());
        let mut out = NormalState::zeros(Arc::clone(&modes));
        for j in d..=d * self.s_max() {
            if !modes.has_shell(j) {
                continue;
            }
            let mut acc = SpectralField::zeros(Arc::clone(&modes));
            for k in 1..j {
                for a in 1..d {
                    let left = self.p_level(k, a)?;
                    if left.is_zero() {
                        continue;
                    }
                    let right = self.p_level(j - k, d - a)?;
                    acc.axpy(1.0, &crate::spectral::bilinear_with(self.exec, &left, &right)?);
                }
            }
            out.set(j, crate::spectral::shell_project(&acc, j))?;
        }
        Ok(out)
    }
}

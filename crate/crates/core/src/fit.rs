//! Small least-squares fits used by the trajectory diagnostics.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `y ~ slope * x + intercept`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    /// Root-mean-square residual.
    pub rms: f64,
}

pub fn line_fit(x: &[f64], y: &[f64]) -> Result<LineFit> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::validation("line fit needs at least two paired samples"));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::validation("line fit needs distinct abscissae"));
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rms = (x.iter().zip(y).map(|(a, b)| (b - slope * a - intercept).powi(2)).sum::<f64>() / n).sqrt();
    Ok(LineFit { slope, intercept, rms })
}

/// Shared-rate model `y_c(t) ~ a_c + b_c e^{-delta (t - t0)}` for several
/// series at once; `t0` is the first sample time.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstExpFit {
    pub constants: Vec<f64>,
    pub amplitudes: Vec<f64>,
    pub delta: f64,
    pub rms: f64,
    pub t0: f64,
}

/// Two-parameter linear least squares for a fixed rate; returns the constants,
/// amplitudes and total squared residual.
fn solve_fixed(t: &[f64], ys: &[Vec<f64>], delta: f64) -> (Vec<f64>, Vec<f64>, f64) {
    let t0 = t[0];
    let g: Vec<f64> = t.iter().map(|s| (-delta * (s - t0)).exp()).collect();
    let n = t.len() as f64;
    let sg: f64 = g.iter().sum();
    let sgg: f64 = g.iter().map(|v| v * v).sum();
    let det = n * sgg - sg * sg;
    let mut consts = Vec::with_capacity(ys.len());
    let mut amps = Vec::with_capacity(ys.len());
    let mut ss = 0.0;
    for y in ys {
        let sy: f64 = y.iter().sum();
        let sgy: f64 = g.iter().zip(y).map(|(a, b)| a * b).sum();
        let (a, b) = if det.abs() > 1e-14 * n * sgg {
            ((sgg * sy - sg * sgy) / det, (n * sgy - sg * sy) / det)
        } else {
            (sy / n, 0.0)
        };
        ss += y.iter().zip(&g).map(|(v, gv)| (v - a - b * gv).powi(2)).sum::<f64>();
        consts.push(a);
        amps.push(b);
    }
    (consts, amps, ss)
}

/// Fit with `delta` searched on `[delta_min, delta_max]`: a log-spaced grid
/// followed by golden-section refinement.
pub fn const_exp_fit(t: &[f64], ys: &[Vec<f64>], delta_min: f64, delta_max: f64) -> Result<ConstExpFit> {
    if t.len() < 4 {
        return Err(Error::validation("constant-plus-exponential fit needs at least four samples"));
    }
    if ys.iter().any(|y| y.len() != t.len()) {
        return Err(Error::validation("series length differs from the time grid"));
    }
    if !(delta_min > 0.0 && delta_max > delta_min) {
        return Err(Error::validation("need 0 < delta_min < delta_max"));
    }
    let cost = |d: f64| solve_fixed(t, ys, d).2;
    let grid = 60;
    let ratio = (delta_max / delta_min).ln();
    let pts: Vec<f64> = (0..=grid).map(|i| delta_min * (ratio * i as f64 / grid as f64).exp()).collect();
    let (ibest, _) = pts.iter().enumerate().map(|(i, &d)| (i, cost(d))).fold((0, f64::INFINITY), |acc, (i, c)| {
        if c < acc.1 {
            (i, c)
        } else {
            acc
        }
    });
    let mut lo = pts[ibest.saturating_sub(1)].ln();
    let mut hi = pts[(ibest + 1).min(grid)].ln();
    let phi = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = hi - phi * (hi - lo);
    let mut x2 = lo + phi * (hi - lo);
    let mut f1 = cost(x1.exp());
    let mut f2 = cost(x2.exp());
    for _ in 0..60 {
        if f1 < f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - phi * (hi - lo);
            f1 = cost(x1.exp());
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + phi * (hi - lo);
            f2 = cost(x2.exp());
        }
    }
    let mut delta = (0.5 * (lo + hi)).exp();
    if cost(pts[ibest]) < cost(delta) {
        delta = pts[ibest];
    }
    let (constants, amplitudes, ss) = solve_fixed(t, ys, delta);
    let count = (t.len() * ys.len()) as f64;
    Ok(ConstExpFit { constants, amplitudes, delta, rms: (ss / count).sqrt(), t0: t[0] })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_line() {
        let x: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let y: Vec<f64> = x.iter().map(|v| -2.5 * v + 1.0).collect();
        let f = line_fit(&x, &y).unwrap();
        assert!((f.slope + 2.5).abs() < 1e-14 && (f.intercept - 1.0).abs() < 1e-13);
    }

    #[test]
    fn recovers_const_plus_exp() {
        let t: Vec<f64> = (0..200).map(|i| 5.0 + 0.05 * i as f64).collect();
        let y1: Vec<f64> = t.iter().map(|s| 0.3 + 0.02 * (-1.7 * (s - 5.0)).exp()).collect();
        let y2: Vec<f64> = t.iter().map(|s| -0.1 - 0.05 * (-1.7 * (s - 5.0)).exp()).collect();
        let f = const_exp_fit(&t, &[y1, y2], 0.5, 30.0).unwrap();
        assert!((f.delta - 1.7).abs() < 1e-6, "{}", f.delta);
        assert!((f.constants[0] - 0.3).abs() < 1e-12);
        assert!((f.constants[1] + 0.1).abs() < 1e-12);
    }
}

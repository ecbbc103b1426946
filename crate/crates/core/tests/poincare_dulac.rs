use std::collections::BTreeMap;

use torusnf::init::rng_from_seed;
use torusnf::pd::{
    is_resonant, normal_form, truncated_nse_as_polysystem, verify_conjugacy, Monomial, NFResult, NFResultFile, PolyMap,
    PolySystem, PolySystemFile,
};
use torusnf::spectral::Dim;
use torusnf::Error;

use rand::Rng;

fn random_system(lambda: Vec<f64>, degree: usize, seed: u64) -> PolySystem {
    let m = lambda.len();
    let mut rng = rng_from_seed(seed);
    let mut phi = PolyMap::zero(m);
    for k in 0..m {
        for d in 2..=degree {
            for _ in 0..3 {
                let vars: Vec<u16> = (0..d).map(|_| rng.random_range(0..m as u16)).collect();
                phi.comps[k].add_term(Monomial::from_vars(vars), rng.random_range(-1.0..1.0));
            }
        }
    }
    PolySystem::new(lambda, phi).unwrap()
}

/// `F(Phi(y)) - DPhi(y) Theta(y)` at a point, with `DPhi` by central
/// differences of pointwise evaluation.
fn pointwise_gap(sys: &PolySystem, nf: &NFResult, y: &[f64]) -> f64 {
    let phi = nf.transform();
    let lhs = sys.rhs(&phi.eval(y));
    let v = nf.theta.rhs(y);
    let h = 1e-4;
    let shift = |s: f64| -> Vec<f64> { y.iter().zip(&v).map(|(a, b)| a + s * h * b).collect() };
    let (p, q) = (phi.eval(&shift(1.0)), phi.eval(&shift(-1.0)));
    let (p2, q2) = (phi.eval(&shift(2.0)), phi.eval(&shift(-2.0)));
    lhs.iter()
        .enumerate()
        .map(|(i, l)| {
            let d = (8.0 * (p[i] - q[i]) - (p2[i] - q2[i])) / (12.0 * h);
            (l - d).abs()
        })
        .fold(0.0, f64::max)
}

#[test]
fn conjugacy_error_has_the_right_order() {
    let sys = random_system(vec![1.0, 2.0, 3.0, 4.5], 3, 31);
    for d in [2usize, 3, 4] {
        let nf = normal_form(&sys, d).unwrap();
        assert!(verify_conjugacy(&sys, &nf, d) < 1e-12);
        let dir = [0.3, -0.5, 0.7, 0.4];
        let gaps: Vec<(f64, f64)> = [0.02, 0.04, 0.08]
            .iter()
            .map(|&s| {
                let y: Vec<f64> = dir.iter().map(|v| s * v).collect();
                (f64::ln(s), pointwise_gap(&sys, &nf, &y).ln())
            })
            .collect();
        let slope = (gaps[2].1 - gaps[0].1) / (gaps[2].0 - gaps[0].0);
        assert!(slope > d as f64 + 0.7, "D = {d}: slope {slope}");
    }
}

#[test]
fn theta_holds_only_resonant_terms() {
    let lambda = vec![1.0, 2.0, 3.0, 4.5];
    let sys = random_system(lambda.clone(), 4, 32);
    let nf = normal_form(&sys, 4).unwrap();
    let terms = nf.theta.phi().entries();
    assert!(!terms.is_empty());
    for (m, k, _) in &terms {
        assert!(is_resonant(&lambda, m, *k), "{m:?} -> {k}");
    }
    // every resonance with these eigenvalues pairs integer weights
    for (m, k, _) in &terms {
        let w: f64 = m.vars().iter().map(|&v| lambda[v as usize]).sum();
        assert_eq!(w, lambda[*k]);
    }
}

#[test]
fn near_resonances_are_kept_with_a_warning() {
    let mut phi = PolyMap::zero(2);
    phi.comps[1].add_term(Monomial::from_powers(&[(0, 2)]), 0.7);
    let sys = PolySystem::new(vec![1.0, 2.0 + 1e-8], phi).unwrap();
    let nf = normal_form(&sys, 3).unwrap();
    assert_eq!(nf.warnings.len(), 1);
    assert_eq!(nf.degrees[0].near_resonant, 1);
    assert_eq!(nf.theta.phi().entries().len(), 1);
}

#[test]
fn inverse_undoes_the_transform() {
    let sys = random_system(vec![1.0, std::f64::consts::PI], 3, 33);
    let nf = normal_form(&sys, 4).unwrap();
    let y = [0.03, -0.02];
    let x = nf.transform().eval(&y);
    let back = nf.inverse(&x).unwrap();
    assert!((back[0] - y[0]).abs() < 1e-15 && (back[1] - y[1]).abs() < 1e-15);
}

#[test]
fn files_round_trip_exactly() {
    let sys = random_system(vec![1.0, 2.0, 3.0], 3, 34);
    let text = serde_json::to_string(&PolySystemFile::from_system(&sys)).unwrap();
    let back: PolySystemFile = serde_json::from_str(&text).unwrap();
    assert_eq!(back.to_system().unwrap(), sys);
    let nf = normal_form(&sys, 3).unwrap();
    let text = serde_json::to_string(&NFResultFile::from_result(&nf)).unwrap();
    let back: NFResultFile = serde_json::from_str(&text).unwrap();
    assert_eq!(back.to_result().unwrap(), nf);
    let bad = r#"{"dimension":2,"eigenvalues":[1.0,2.0],"terms":[{"powers":[[0,1]],"coord":0,"coeff":1.0}]}"#;
    let f: PolySystemFile = serde_json::from_str(bad).unwrap();
    assert!(matches!(f.to_system(), Err(Error::Validation(_))));
    assert!(serde_json::from_str::<PolySystemFile>(r#"{"dimension":1,"eigenvalues":[1.0],"terms":[],"x":0}"#).is_err());
}

/// Real dimension of each shell by direct lattice enumeration: half of the
/// nonzero `k` with `|k|^2 = m`, times fibers, times real and imaginary parts.
fn multiplicities(dim: Dim, lambda: u32) -> BTreeMap<u32, usize> {
    let r = (lambda as f64).sqrt() as i32;
    let mut count: BTreeMap<u32, usize> = BTreeMap::new();
    let zs: Vec<i32> = if dim == Dim::Three { (-r..=r).collect() } else { vec![0] };
    for a in -r..=r {
        for b in -r..=r {
            for &c in &zs {
                let m = (a * a + b * b + c * c) as u32;
                if m > 0 && m <= lambda {
                    *count.entry(m).or_default() += 1;
                }
            }
        }
    }
    let fibers = if dim == Dim::Three { 2 } else { 1 };
    count.into_iter().map(|(m, n)| (m, n / 2 * fibers * 2)).collect()
}

#[test]
fn nse_eigenvalue_multiplicities() {
    for (dim, lambda) in [(Dim::Three, 3), (Dim::Two, 3), (Dim::Two, 10), (Dim::Three, 2)] {
        let ns = truncated_nse_as_polysystem(lambda, dim).unwrap();
        let mut got: BTreeMap<u32, usize> = BTreeMap::new();
        for &l in ns.system.eigenvalues() {
            *got.entry(l as u32).or_default() += 1;
        }
        assert_eq!(got, multiplicities(dim, lambda), "{dim:?} {lambda}");
    }
    assert_eq!(truncated_nse_as_polysystem(2, Dim::Three).unwrap().system.dimension(), 36);
}

#[test]
fn size_limits() {
    let big = truncated_nse_as_polysystem(3, Dim::Three).unwrap();
    assert_eq!(big.system.dimension(), 52);
    assert!(matches!(normal_form(&big.system, 2), Err(Error::Size(_))));
    let lin = PolySystem::new(vec![1.0; 41], PolyMap::zero(41)).unwrap();
    assert!(matches!(normal_form(&lin, 2), Err(Error::Size(_))));
    let small = random_system(vec![1.0, 2.0], 2, 35);
    assert!(matches!(normal_form(&small, 6), Err(Error::Size(_))));
    assert!(normal_form(&small, 5).is_ok());
}

#[test]
fn nse_quadratic_terms_are_shell_additive() {
    let ns = truncated_nse_as_polysystem(3, Dim::Two).unwrap();
    let nf = normal_form(&ns.system, 2).unwrap();
    for (m, k, _) in nf.theta.phi().entries() {
        let s: u32 = m.vars().iter().map(|&v| ns.basis.shell(v as usize)).sum();
        assert_eq!(s, ns.basis.shell(k));
    }
    assert!(verify_conjugacy(&ns.system, &nf, 2) < 1e-12);
}

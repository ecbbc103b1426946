use serde::{Deserialize, Serialize};

use super::state::NormalState;

/// Sparse exponent sequence: `(k, alpha_k)` pairs with `alpha_k > 0`,
/// ascending in `k`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct MultiIndex(pub Vec<(u32, u32)>);

impl MultiIndex {
    /// `|alpha| = sum alpha_k`.
    pub fn order(&self) -> u32 {
        self.0.iter().map(|(_, a)| a).sum()
    }

    /// `||alpha|| = sum k alpha_k`.
    pub fn weight(&self) -> u32 {
        self.0.iter().map(|(k, a)| k * a).sum()
    }
}

/// All multi-indices over `shells` with `|alpha| = d` and `||alpha|| = n`.
pub fn enumerate(d: u32, n: u32, shells: &[u32]) -> Vec<MultiIndex> {
    let mut shells: Vec<u32> = shells.to_vec();
    shells.sort_unstable();
    shells.dedup();
    let mut out = Vec::new();
    let mut cur = Vec::new();
    rec(&shells, 0, d, n, &mut cur, &mut out);
    out
}

fn rec(shells: &[u32], from: usize, d: u32, n: u32, cur: &mut Vec<(u32, u32)>, out: &mut Vec<MultiIndex>) {
    if d == 0 {
        if n == 0 {
            out.push(MultiIndex(cur.clone()));
        }
        return;
    }
    for (i, &k) in shells.iter().enumerate().skip(from) {
        // remaining mass d at weight >= k each
        if k * d > n {
            break;
        }
        for a in 1..=d {
            if k * a > n {
                break;
            }
            cur.push((k, a));
            rec(shells, i + 1, d - a, n - k * a, cur, out);
            cur.pop();
        }
    }
}

/// `[xi]^alpha = prod |xi_k|^{alpha_k}`.
pub fn sinorm(xi: &NormalState, alpha: &MultiIndex) -> f64 {
    alpha.0.iter().map(|&(k, a)| xi.comp_norm(k).powi(a as i32)).product()
}

/// `[[xi]]_{d,n} = (sum_{|alpha|=d, ||alpha||=n} [xi]^{2 alpha})^{1/2}`,
/// over the eigenvalues of the truncation.
pub fn gauge(xi: &NormalState, d: u32, n: u32) -> f64 {
    let shells: Vec<u32> = xi.modes().shells().collect();
    enumerate(d, n, &shells).iter().map(|a| sinorm(xi, a).powi(2)).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn enumeration_counts() {
        assert_eq!(enumerate(1, 5, &[1, 2, 3, 4, 5]), vec![MultiIndex(vec![(5, 1)])]);
        assert_eq!(enumerate(2, 2, &[1, 2]), vec![MultiIndex(vec![(1, 2)])]);
        // partitions of 6 into 3 parts from {1..6}: 4+1+1, 3+2+1, 2+2+2
        assert_eq!(enumerate(3, 6, &[1, 2, 3, 4, 5, 6]).len(), 3);
        assert!(enumerate(3, 6, &[1, 2, 3, 4, 5, 6]).iter().all(|a| a.order() == 3 && a.weight() == 6));
        // 7 missing from the spectrum
        assert!(enumerate(1, 7, &[1, 2, 3, 4, 5, 6, 8]).is_empty());
    }
}

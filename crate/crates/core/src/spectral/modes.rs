use std::collections::{BTreeMap, HashMap};
use std::ops::Range;
use std::sync::{Arc, Mutex, OnceLock};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Spatial dimension of the torus.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Dim {
    Two,
    Three,
}

impl Dim {
    pub fn as_usize(self) -> usize {
        match self {
            Dim::Two => 2,
            Dim::Three => 3,
        }
    }

    pub fn from_usize(n: usize) -> Result<Self> {
        match n {
            2 => Ok(Dim::Two),
            3 => Ok(Dim::Three),
            _ => Err(Error::validation(format!("dimension must be 2 or 3, got {n}"))),
        }
    }
}

/// Integer wave vector; 2D vectors carry a zero third coordinate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct WaveVector(pub [i32; 3]);

impl WaveVector {
    pub fn new(k: [i32; 3]) -> Self {
        WaveVector(k)
    }

    pub fn norm_sq(&self) -> u32 {
        self.0.iter().map(|&c| (c * c) as u32).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.0 == [0, 0, 0]
    }

    pub fn neg(&self) -> Self {
        WaveVector([-self.0[0], -self.0[1], -self.0[2]])
    }

    /// First nonzero coordinate positive.
    pub fn is_canonical(&self) -> bool {
        match self.0.iter().find(|&&c| c != 0) {
            Some(&c) => c > 0,
            None => false,
        }
    }

    pub fn canonical(&self) -> (Self, bool) {
        if self.is_canonical() {
            (*self, false)
        } else {
            (self.neg(), true)
        }
    }

    pub fn dot(&self, other: &WaveVector) -> i64 {
        (0..3).map(|i| self.0[i] as i64 * other.0[i] as i64).sum()
    }

    pub fn as_f64(&self) -> [f64; 3] {
        [self.0[0] as f64, self.0[1] as f64, self.0[2] as f64]
    }

    pub fn add(&self, o: &WaveVector) -> Self {
        WaveVector([self.0[0] + o.0[0], self.0[1] + o.0[1], self.0[2] + o.0[2]])
    }

    pub fn sub(&self, o: &WaveVector) -> Self {
        WaveVector([self.0[0] - o.0[0], self.0[1] - o.0[1], self.0[2] - o.0[2]])
    }

    pub fn scale(&self, s: i32) -> Self {
        WaveVector([self.0[0] * s, self.0[1] * s, self.0[2] * s])
    }
}

/// Whether `m` is a sum of `dim` integer squares.
pub fn is_representable(m: u32, dim: Dim) -> bool {
    if m == 0 {
        return false;
    }
    match dim {
        Dim::Two => {
            let r = (m as f64).sqrt() as u32 + 1;
            (0..=r).any(|a| {
                let a2 = a * a;
                a2 <= m && {
                    let b2 = m - a2;
                    let b = (b2 as f64).sqrt().round() as u32;
                    b * b == b2
                }
            })
        }
        Dim::Three => {
            // Legendre: excluded iff m = 4^a (8b + 7).
            let mut n = m;
            while n.is_multiple_of(4) {
                n /= 4;
            }
            n % 8 != 7
        }
    }
}

/// One convolution term `k' + k'' = k` feeding output mode `k`.
#[derive(Clone, Copy, Debug)]
pub(crate) struct Triad {
    pub a: u32,
    pub a_conj: bool,
    pub b: u32,
    pub b_conj: bool,
    pub kb: [f64; 3],
}

/// The shell-complete set of stored modes plus the precomputed triad table.
#[derive(Debug)]
pub struct ModeSet {
    dim: Dim,
    lambda_max: u32,
    waves: Vec<WaveVector>,
    shell_of: Vec<u32>,
    shells: BTreeMap<u32, Range<usize>>,
    lookup: HashMap<WaveVector, usize>,
    triads: Vec<Triad>,
    triad_offsets: Vec<usize>,
}

impl PartialEq for ModeSet {
    fn eq(&self, other: &Self) -> bool {
        self.same_space(other)
    }
}

fn registry() -> &'static Mutex<HashMap<(Dim, u32), Arc<ModeSet>>> {
    static REG: OnceLock<Mutex<HashMap<(Dim, u32), Arc<ModeSet>>>> = OnceLock::new();
    REG.get_or_init(|| Mutex::new(HashMap::new()))
}

impl ModeSet {
    /// Shared, cached mode set for `(dim, lambda_max)`.
    pub fn shared(dim: Dim, lambda_max: u32) -> Result<Arc<ModeSet>> {
        if lambda_max == 0 {
            return Err(Error::validation("lambda_max must be positive"));
        }
        if lambda_max > 400 {
            return Err(Error::Size(format!("lambda_max {lambda_max} exceeds desk-scale limit 400")));
        }
        let mut reg = registry().lock().expect("mode registry poisoned");
        if let Some(m) = reg.get(&(dim, lambda_max)) {
            return Ok(Arc::clone(m));
        }
        let m = Arc::new(ModeSet::build(dim, lambda_max));
        reg.insert((dim, lambda_max), Arc::clone(&m));
        Ok(m)
    }

    fn build(dim: Dim, lambda_max: u32) -> ModeSet {
        let r = (lambda_max as f64).sqrt().floor() as i32;
        let rz = if dim == Dim::Three { r } else { 0 };
        let mut waves = Vec::new();
        for x in -r..=r {
            for y in -r..=r {
                for z in -rz..=rz {
                    let k = WaveVector([x, y, z]);
                    let n2 = k.norm_sq();
                    if n2 >= 1 && n2 <= lambda_max && k.is_canonical() {
                        waves.push(k);
                    }
                }
            }
        }
        waves.sort_by_key(|k| (k.norm_sq(), k.0));
        let shell_of: Vec<u32> = waves.iter().map(|k| k.norm_sq()).collect();
        let mut shells: BTreeMap<u32, Range<usize>> = BTreeMap::new();
        for (i, &s) in shell_of.iter().enumerate() {
            shells.entry(s).and_modify(|r| r.end = i + 1).or_insert(i..i + 1);
        }
        let lookup: HashMap<WaveVector, usize> = waves.iter().enumerate().map(|(i, k)| (*k, i)).collect();

        let mut triads = Vec::new();
        let mut triad_offsets = Vec::with_capacity(waves.len() + 1);
        triad_offsets.push(0);
        for k in &waves {
            for (ia, ka) in waves.iter().enumerate() {
                for (sign, conj) in [(1, false), (-1, true)] {
                    let kp = ka.scale(sign);
                    let kpp = k.sub(&kp);
                    if kpp.is_zero() || kpp.norm_sq() > lambda_max {
                        continue;
                    }
                    let (rep, b_conj) = kpp.canonical();
                    let ib = lookup[&rep];
                    triads.push(Triad { a: ia as u32, a_conj: conj, b: ib as u32, b_conj, kb: kpp.as_f64() });
                }
            }
            triad_offsets.push(triads.len());
        }

        ModeSet { dim, lambda_max, waves, shell_of, shells, lookup, triads, triad_offsets }
    }

    pub fn dim(&self) -> Dim {
        self.dim
    }

    pub fn lambda_max(&self) -> u32 {
        self.lambda_max
    }

    pub fn len(&self) -> usize {
        self.waves.len()
    }

    pub fn is_empty(&self) -> bool {
        self.waves.is_empty()
    }

    pub fn waves(&self) -> &[WaveVector] {
        &self.waves
    }

    pub fn wave(&self, i: usize) -> WaveVector {
        self.waves[i]
    }

    pub fn shell_of(&self, i: usize) -> u32 {
        self.shell_of[i]
    }

    /// Representable shells `<= lambda_max`, ascending.
    pub fn shells(&self) -> impl Iterator<Item = u32> + '_ {
        self.shells.keys().copied()
    }

    pub fn shell_range(&self, m: u32) -> Option<Range<usize>> {
        self.shells.get(&m).cloned()
    }

    pub fn has_shell(&self, m: u32) -> bool {
        self.shells.contains_key(&m)
    }

    /// Index of the stored representative and whether `k` is its conjugate.
    pub fn find(&self, k: &WaveVector) -> Option<(usize, bool)> {
        let (rep, conj) = k.canonical();
        self.lookup.get(&rep).map(|&i| (i, conj))
    }

    pub(crate) fn triads_for(&self, out: usize) -> &[Triad] {
        &self.triads[self.triad_offsets[out]..self.triad_offsets[out + 1]]
    }

    pub fn triad_count(&self) -> usize {
        self.triads.len()
    }

    /// Number of real degrees of freedom per stored mode (fiber x re/im).
    pub fn real_dofs_per_mode(&self) -> usize {
        match self.dim {
            Dim::Two => 2,
            Dim::Three => 4,
        }
    }

    pub fn same_space(&self, other: &ModeSet) -> bool {
        self.dim == other.dim && self.lambda_max == other.lambda_max
    }
}

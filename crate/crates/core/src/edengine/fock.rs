//! Occupation-number basis with Jordan–Wigner ordering.
//!
//! Bit `s` of a configuration is the occupation of site `s`, and a basis
//! state is `(c†_0)^{n_0} (c†_1)^{n_1} ... |0>`. A ladder operator on site
//! `s` therefore picks up `(-1)` for every occupied site below `s`.

use nalgebra::DMatrix;
use twofloat::TwoFloat;

use crate::error::{Error, Result};

pub type Config = u32;

/// Largest chain the bit-string representation and dense solvers accept.
pub const MAX_SITES: usize = 14;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Ladder {
    Create(usize),
    Annihilate(usize),
}

#[inline]
fn sign_below(c: Config, site: usize) -> f64 {
    if (c & ((1 << site) - 1)).count_ones().is_multiple_of(2) {
        1.0
    } else {
        -1.0
    }
}

pub fn annihilate(c: Config, site: usize) -> Option<(Config, f64)> {
    (c >> site & 1 == 1).then(|| (c ^ (1 << site), sign_below(c, site)))
}

pub fn create(c: Config, site: usize) -> Option<(Config, f64)> {
    (c >> site & 1 == 0).then(|| (c | (1 << site), sign_below(c, site)))
}

pub fn apply(c: Config, op: Ladder) -> Option<(Config, f64)> {
    match op {
        Ladder::Create(s) => create(c, s),
        Ladder::Annihilate(s) => annihilate(c, s),
    }
}

/// Applies an operator product to a basis state, rightmost factor first.
pub fn apply_string(c: Config, ops: &[Ladder]) -> Option<(Config, f64)> {
    ops.iter().rev().try_fold((c, 1.0), |(c, sign), &op| {
        apply(c, op).map(|(next, s)| (next, sign * s))
    })
}

/// `c†_i c_j |c>`; the sign counts occupied sites strictly between `i` and `j`.
pub fn hop(c: Config, i: usize, j: usize) -> Option<(Config, f64)> {
    if i == j {
        return (c >> i & 1 == 1).then_some((c, 1.0));
    }
    if c >> j & 1 == 0 || c >> i & 1 == 1 {
        return None;
    }
    let (lo, hi) = (i.min(j), i.max(j));
    let between = ((1u32 << hi) - 1) & !((1u32 << (lo + 1)) - 1);
    let sign = if (c & between).count_ones().is_multiple_of(2) { 1.0 } else { -1.0 };
    Some((c ^ (1 << j) ^ (1 << i), sign))
}

/// `Tr(rho O)` for a dense operator `rho` on the full `2^l` Fock space and
/// an operator string `O`.
pub fn expectation(rho: &DMatrix<f64>, ops: &[Ladder]) -> f64 {
    (0..rho.nrows())
        .filter_map(|b| apply_string(b as Config, ops).map(|(a, s)| s * rho[(b, a as usize)]))
        .sum()
}

/// Fixed-particle-number basis, configurations in ascending order.
#[derive(Debug, Clone, PartialEq)]
pub struct SectorBasis {
    n_sites: usize,
    n_particles: usize,
    configs: Vec<Config>,
}

impl SectorBasis {
    pub fn new(n_sites: usize, n_particles: usize) -> Result<Self> {
        if n_sites == 0 || n_sites > MAX_SITES {
            return Err(Error::Capacity {
                what: "sites",
                got: n_sites,
                limit: MAX_SITES,
            });
        }
        if n_particles > n_sites {
            return Err(Error::InvalidArgument(format!(
                "{n_particles} particles do not fit on {n_sites} sites"
            )));
        }
        let configs = (0..1u32 << n_sites)
            .filter(|c| c.count_ones() as usize == n_particles)
            .collect();
        Ok(Self {
            n_sites,
            n_particles,
            configs,
        })
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn n_particles(&self) -> usize {
        self.n_particles
    }

    pub fn len(&self) -> usize {
        self.configs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.configs.is_empty()
    }

    pub fn configs(&self) -> &[Config] {
        &self.configs
    }

    pub fn index_of(&self, c: Config) -> Option<usize> {
        self.configs.binary_search(&c).ok()
    }
}

/// A number-conserving many-body state stored in double-double precision.
#[derive(Debug, Clone, PartialEq)]
pub struct FockState {
    n_sites: usize,
    configs: Vec<Config>,
    amplitudes: Vec<TwoFloat>,
}

impl FockState {
    /// Normalizes the amplitudes; all configurations must hold the same
    /// number of particles.
    pub fn new(n_sites: usize, configs: Vec<Config>, amplitudes: Vec<TwoFloat>) -> Result<Self> {
        if n_sites == 0 || n_sites > MAX_SITES {
            return Err(Error::Capacity {
                what: "sites",
                got: n_sites,
                limit: MAX_SITES,
            });
        }
        if configs.len() != amplitudes.len() || configs.is_empty() {
            return Err(Error::InvalidArgument("configurations and amplitudes must match and be non-empty".into()));
        }
        if let Some(c) = configs.iter().find(|&&c| c >> n_sites != 0) {
            return Err(Error::InvalidArgument(format!("configuration {c:#b} exceeds {n_sites} sites")));
        }
        let n = configs[0].count_ones();
        if configs.iter().any(|c| c.count_ones() != n) {
            return Err(Error::InvalidArgument("state must have a definite particle number".into()));
        }
        let norm2 = amplitudes
            .iter()
            .fold(TwoFloat::from(0.0), |acc, &a| acc + a * a);
        if !(norm2.hi() > 0.0) || !norm2.hi().is_finite() {
            return Err(Error::InvalidArgument("state has zero or non-finite norm".into()));
        }
        let norm = norm2.sqrt();
        let amplitudes = amplitudes.into_iter().map(|a| a / norm).collect();
        Ok(Self {
            n_sites,
            configs,
            amplitudes,
        })
    }

    pub fn from_f64(n_sites: usize, configs: Vec<Config>, amplitudes: &[f64]) -> Result<Self> {
        Self::new(n_sites, configs, amplitudes.iter().map(|&a| TwoFloat::from(a)).collect())
    }

    /// A single occupation-number basis state.
    pub fn product(n_sites: usize, config: Config) -> Result<Self> {
        Self::from_f64(n_sites, vec![config], &[1.0])
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn n_particles(&self) -> usize {
        self.configs[0].count_ones() as usize
    }

    pub fn configs(&self) -> &[Config] {
        &self.configs
    }

    pub fn amplitudes(&self) -> &[TwoFloat] {
        &self.amplitudes
    }

    pub fn amplitude(&self, c: Config) -> f64 {
        self.configs
            .iter()
            .position(|&x| x == c)
            .map_or(0.0, |k| self.amplitudes[k].hi())
    }
}

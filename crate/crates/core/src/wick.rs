//! Violation of Wick's theorem, `W_ij = |<n_i n_j> - <n_i><n_j>|`, in the
//! eigenmode basis of a diagonal entanglement Hamiltonian.
//!
//! Three independent routes are provided:
//!
//! - exact enumeration through [`GibbsEnsemble`],
//! - the closed form for two modes in terms of the level energies
//!   `{0, E1, E2, E12}`,
//! - first-order perturbation theory in the two-mode energies `eps_ij`,
//!   evaluated by explicit enumeration over spectator modes.

use std::collections::BTreeMap;
use std::fmt;

use rayon::prelude::*;

use crate::error::{ensure_finite, Error, Result};
use crate::gibbs::GibbsEnsemble;
use crate::spectra::{check_enumerable, ModeEnergies};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, clap::ValueEnum)]
pub enum WickMethod {
    Exact,
    TwoModeClosed,
    Perturbative,
    DirectCorrelator,
}

impl fmt::Display for WickMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            WickMethod::Exact => "exact",
            WickMethod::TwoModeClosed => "two-mode-closed",
            WickMethod::Perturbative => "perturbative",
            WickMethod::DirectCorrelator => "direct-correlator",
        })
    }
}

/// Pairwise violations `W_ij` for `i < j` and their maximum.
#[derive(Debug, Clone, PartialEq)]
pub struct WickReport {
    pub n_modes: usize,
    pub pairwise: BTreeMap<(usize, usize), f64>,
    pub w_max: f64,
    pub method: WickMethod,
}

impl WickReport {
    /// Keys are normalized to `i < j`; `w_max` is zero when there are no pairs.
    pub fn from_pairs<I>(n_modes: usize, method: WickMethod, pairs: I) -> Self
    where
        I: IntoIterator<Item = ((usize, usize), f64)>,
    {
        let pairwise: BTreeMap<_, _> = pairs
            .into_iter()
            .map(|((i, j), w)| ((i.min(j), i.max(j)), w))
            .collect();
        let w_max = pairwise.values().copied().fold(0.0, f64::max);
        Self {
            n_modes,
            pairwise,
            w_max,
            method,
        }
    }

    pub fn get(&self, i: usize, j: usize) -> Option<f64> {
        self.pairwise.get(&(i.min(j), i.max(j))).copied()
    }
}

fn check_pair(n: usize, i: usize, j: usize) -> Result<()> {
    for k in [i, j] {
        if k >= n {
            return Err(Error::IndexOutOfRange { index: k, len: n });
        }
    }
    if i == j {
        return Err(Error::InvalidArgument(format!(
            "Wick violation needs two distinct modes, got ({i}, {j})"
        )));
    }
    Ok(())
}

/// `W_ij` by full enumeration.
pub fn violation_exact(m: &ModeEnergies, i: usize, j: usize) -> Result<f64> {
    check_pair(m.n_modes(), i, j)?;
    let g = GibbsEnsemble::new(m)?;
    Ok(exact_from_ensemble(&g, i, j))
}

fn exact_from_ensemble(g: &GibbsEnsemble, i: usize, j: usize) -> f64 {
    let nn = g.pair_occupation(i, j).expect("indices checked");
    let ni = g.occupation(i).expect("indices checked");
    let nj = g.occupation(j).expect("indices checked");
    (nn - ni * nj).abs()
}

/// Closed-form two-mode violation from the level energies `E1`, `E2`, `E12`
/// (the empty level sits at zero):
///
/// `W = |exp(-E12) - exp(-E1 - E2)| / Z^2`, `Z = 1 + exp(-E1) + exp(-E2) + exp(-E12)`,
///
/// which equals `exp(E12) |1 - exp(E12 - E1 - E2)| / (1 + exp(E12 - E1) + exp(E12 - E2) + exp(E12))^2`.
/// Evaluated with every exponent shifted to be non-positive.
pub fn violation_two_mode_closed(e1: f64, e2: f64, e12: f64) -> Result<f64> {
    for (name, v) in [("E1", e1), ("E2", e2), ("E12", e12)] {
        ensure_finite(name, v)?;
    }
    let m = 0f64.min(e1).min(e2).min(e12);
    let z_scaled = m.exp() + (-(e1 - m)).exp() + (-(e2 - m)).exp() + (-(e12 - m)).exp();
    let numerator = ((-(e12 - 2.0 * m)).exp() - (-(e1 - m) - (e2 - m)).exp()).abs();
    Ok(numerator / (z_scaled * z_scaled))
}

/// The two-mode expression without the factor `exp(E12)` in the numerator:
///
/// `|1 - exp(E12 - E1 - E2)| / (1 + exp(E12 - E1) + exp(E12 - E2) + exp(E12))^2`.
///
/// It shares its zero set `E12 = E1 + E2` with [`violation_two_mode_closed`]
/// but is smaller by exactly `exp(-E12)`; kept for comparison only.
pub fn violation_two_mode_as_printed(e1: f64, e2: f64, e12: f64) -> Result<f64> {
    for (name, v) in [("E1", e1), ("E2", e2), ("E12", e12)] {
        ensure_finite(name, v)?;
    }
    let d = 1.0 + (e12 - e1).exp() + (e12 - e2).exp() + e12.exp();
    Ok((1.0 - (e12 - e1 - e2).exp()).abs() / (d * d))
}

/// Level energies `(E1, E2, E12)` of a two-mode Hamiltonian relative to its
/// empty level.
pub fn two_mode_levels(m: &ModeEnergies) -> Result<(f64, f64, f64)> {
    if m.n_modes() != 2 {
        return Err(Error::MethodMismatch {
            method: WickMethod::TwoModeClosed.to_string(),
            reason: format!("needs exactly 2 modes, got {}", m.n_modes()),
        });
    }
    let (e1, e2) = (m.single()[0], m.single()[1]);
    Ok((e1, e2, e1 + e2 + m.pair(0, 1)))
}

fn require_two_body(m: &ModeEnergies) -> Result<()> {
    if m.has_higher_terms() {
        return Err(Error::UnsupportedModel(
            "first-order formulas cover at most two-mode couplings".into(),
        ));
    }
    check_enumerable(m.n_modes())
}

/// Sums over spectator patterns needed by the first-order formulas.
struct SpectatorSums {
    n: usize,
    excluded: u32,
}

impl SpectatorSums {
    fn new(n: usize, excluded: u32) -> Self {
        Self { n, excluded }
    }

    /// Calls `f(weight, inner, pattern)` for every spectator pattern, where
    /// `weight = prod exp(-eps_i n_i)` and `inner = sum_{i<j} eps_ij n_i n_j`,
    /// both restricted to spectator modes.
    fn for_each(&self, m: &ModeEnergies, mut f: impl FnMut(f64, f64, u32)) {
        let eps = m.single();
        let pairs: Vec<((usize, usize), f64)> = m
            .pairs()
            .filter(|&((i, j), _)| (self.excluded >> i) & 1 == 0 && (self.excluded >> j) & 1 == 0)
            .collect();
        for pattern in 0..(1u32 << self.n) {
            if pattern & self.excluded != 0 {
                continue;
            }
            let energy: f64 = (0..self.n)
                .filter(|&i| (pattern >> i) & 1 == 1)
                .map(|i| eps[i])
                .sum();
            let inner: f64 = pairs
                .iter()
                .filter(|&&((i, j), _)| (pattern >> i) & 1 == 1 && (pattern >> j) & 1 == 1)
                .map(|&(_, v)| v)
                .sum();
            f((-energy).exp(), inner, pattern);
        }
    }
}

/// Sum of `eps_ik n_i` over occupied spectators `i`.
fn coupling_to(m: &ModeEnergies, k: usize, pattern: u32) -> f64 {
    (0..m.n_modes())
        .filter(|&i| i != k && (pattern >> i) & 1 == 1)
        .map(|i| m.pair(i, k))
        .sum()
}

/// First-order `<n_k>`: the two blocks `n_k = 0, 1` of the partition
/// function are expanded to first order in the couplings, and the
/// numerator is the `n_k = 1` block. No clamping is applied.
pub fn perturbative_occupation(m: &ModeEnergies, k: usize) -> Result<f64> {
    require_two_body(m)?;
    if k >= m.n_modes() {
        return Err(Error::IndexOutOfRange {
            index: k,
            len: m.n_modes(),
        });
    }
    let (mut empty, mut filled) = (0.0, 0.0);
    SpectatorSums::new(m.n_modes(), 1 << k).for_each(m, |w, inner, pattern| {
        empty += w * (1.0 - inner);
        filled += w * (1.0 - inner - coupling_to(m, k, pattern));
    });
    let bk = (-m.single()[k]).exp();
    Ok(bk * filled / (empty + bk * filled))
}

/// Numerator used for the first-order `<n_k n_l>`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PairNumerator {
    /// The `n_k = n_l = 1` block of the first-order partition function.
    FirstOrder,
    /// The zeroth-order product `exp(-eps_k - eps_l) prod_{i != k,l} (1 + exp(-eps_i))`.
    /// Drops the first-order terms, so `W` built from it is off at leading order.
    ZerothOrderProduct,
}

/// First-order `<n_k n_l>` with a four-block partition function over the
/// occupations of `k` and `l`.
pub fn perturbative_pair_occupation(m: &ModeEnergies, k: usize, l: usize) -> Result<f64> {
    perturbative_pair_occupation_with(m, k, l, PairNumerator::FirstOrder)
}

pub fn perturbative_pair_occupation_with(
    m: &ModeEnergies,
    k: usize,
    l: usize,
    numerator: PairNumerator,
) -> Result<f64> {
    require_two_body(m)?;
    check_pair(m.n_modes(), k, l)?;
    let eps_kl = m.pair(k, l);
    let mut blocks = [0.0; 4];
    let mut product = 0.0;
    SpectatorSums::new(m.n_modes(), (1 << k) | (1 << l)).for_each(m, |w, inner, pattern| {
        let ck = coupling_to(m, k, pattern);
        let cl = coupling_to(m, l, pattern);
        blocks[0] += w * (1.0 - inner);
        blocks[1] += w * (1.0 - inner - ck);
        blocks[2] += w * (1.0 - inner - cl);
        blocks[3] += w * (1.0 - eps_kl - inner - ck - cl);
        product += w;
    });
    let (bk, bl) = ((-m.single()[k]).exp(), (-m.single()[l]).exp());
    let z = blocks[0] + bk * blocks[1] + bl * blocks[2] + bk * bl * blocks[3];
    let num = match numerator {
        PairNumerator::FirstOrder => blocks[3],
        // sum over spectators of prod exp(-eps_i n_i) = prod (1 + exp(-eps_i))
        PairNumerator::ZerothOrderProduct => product,
    };
    Ok(bk * bl * num / z)
}

/// `|<n_i n_j> - <n_i><n_j>|` from the first-order expressions; its error
/// against [`violation_exact`] is second order in the couplings.
pub fn violation_perturbative(m: &ModeEnergies, i: usize, j: usize) -> Result<f64> {
    violation_perturbative_with(m, i, j, PairNumerator::FirstOrder)
}

pub fn violation_perturbative_with(
    m: &ModeEnergies,
    i: usize,
    j: usize,
    numerator: PairNumerator,
) -> Result<f64> {
    let nn = perturbative_pair_occupation_with(m, i, j, numerator)?;
    let ni = perturbative_occupation(m, i)?;
    let nj = perturbative_occupation(m, j)?;
    Ok((nn - ni * nj).abs())
}

/// Fills every pair `i < j` with the requested method.
pub fn report(m: &ModeEnergies, method: WickMethod) -> Result<WickReport> {
    let n = m.n_modes();
    let pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .collect();
    let values: Vec<f64> = match method {
        WickMethod::Exact => {
            let g = GibbsEnsemble::new(m)?;
            pairs.par_iter().map(|&(i, j)| exact_from_ensemble(&g, i, j)).collect()
        }
        WickMethod::TwoModeClosed => {
            let (e1, e2, e12) = two_mode_levels(m)?;
            vec![violation_two_mode_closed(e1, e2, e12)?]
        }
        WickMethod::Perturbative => {
            require_two_body(m)?;
            pairs
                .par_iter()
                .map(|&(i, j)| violation_perturbative(m, i, j))
                .collect::<Result<_>>()?
        }
        WickMethod::DirectCorrelator => {
            return Err(Error::MethodMismatch {
                method: method.to_string(),
                reason: "direct correlators need a reduced density matrix, not mode energies".into(),
            })
        }
    };
    Ok(WickReport::from_pairs(n, method, pairs.into_iter().zip(values)))
}

//! Diagonal entanglement Hamiltonians and their spectra.
//!
//! A diagonal entanglement Hamiltonian over `N` fermionic modes assigns every
//! occupation pattern `n` the energy
//!
//! ```text
//! E(n) = E0 + sum_i eps_i n_i + sum_{i<j} eps_ij n_i n_j + sum_{|S|>=3} eps_S prod_{i in S} n_i
//! ```
//!
//! [`ModeEnergies`] stores the subset energies `eps_S`, [`EntanglementSpectrum`]
//! stores the levels `E(n)`. The two are related by the subset-sum transform
//! and its Möbius inverse, both exact up to rounding.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, RngExt};

use crate::error::{ensure_finite, Error, Result};
use crate::subset;
use crate::sum::{compensated_sum, CompensatedSum};

/// Hard limit on the number of modes for anything that enumerates `2^N` levels.
pub const MAX_ENUMERATED_MODES: usize = 20;

/// Tolerance on `sum p_k = 1` for a spectrum to count as normalized.
pub const NORMALIZATION_TOL: f64 = 1e-12;

pub(crate) fn check_enumerable(n_modes: usize) -> Result<()> {
    if n_modes > MAX_ENUMERATED_MODES {
        return Err(Error::Capacity {
            what: "modes",
            got: n_modes,
            limit: MAX_ENUMERATED_MODES,
        });
    }
    Ok(())
}

/// An occupation pattern `n in {0,1}^N`; bit `i` is `n_i`.
///
/// The text form lists `n_0 n_1 ... n_{N-1}` left to right, so `"10"` has the
/// first mode occupied.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct OccupationPattern {
    bits: u32,
    len: u8,
}

impl OccupationPattern {
    pub fn new(bits: u32, len: usize) -> Result<Self> {
        if len == 0 || len > 32 {
            return Err(Error::InvalidArgument(format!(
                "pattern length must be in 1..=32, got {len}"
            )));
        }
        if len < 32 && bits >> len != 0 {
            return Err(Error::InvalidArgument(format!(
                "bits {bits:#b} do not fit in {len} modes"
            )));
        }
        Ok(Self {
            bits,
            len: len as u8,
        })
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn len(&self) -> usize {
        self.len as usize
    }

    pub fn is_empty(&self) -> bool {
        self.bits == 0
    }

    pub fn is_occupied(&self, mode: usize) -> bool {
        mode < self.len() && (self.bits >> mode) & 1 == 1
    }

    pub fn popcount(&self) -> usize {
        self.bits.count_ones() as usize
    }
}

impl fmt::Display for OccupationPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.len() {
            f.write_str(if self.is_occupied(i) { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl FromStr for OccupationPattern {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut bits = 0u32;
        let len = s.chars().count();
        for (i, c) in s.chars().enumerate() {
            match c {
                '0' => {}
                '1' if i < 32 => bits |= 1 << i,
                _ => {
                    return Err(Error::InvalidArgument(format!(
                        "occupation label {s:?} must consist of 0/1 characters"
                    )))
                }
            }
        }
        Self::new(bits, len)
    }
}

/// Subset energies of a diagonal entanglement Hamiltonian.
///
/// Couplings of two or more modes live in a sparse map keyed by bitmask; an
/// absent key is exactly zero.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeEnergies {
    e0: f64,
    single: Vec<f64>,
    couplings: BTreeMap<u32, f64>,
}

impl ModeEnergies {
    pub fn new(e0: f64, single: Vec<f64>) -> Result<Self> {
        if single.is_empty() || single.len() > 32 {
            return Err(Error::InvalidArgument(format!(
                "number of modes must be in 1..=32, got {}",
                single.len()
            )));
        }
        ensure_finite("E0", e0)?;
        for &e in &single {
            ensure_finite("single-mode energy", e)?;
        }
        Ok(Self {
            e0,
            single,
            couplings: BTreeMap::new(),
        })
    }

    /// Free Hamiltonian with `E0 = 0`.
    pub fn free(single: Vec<f64>) -> Result<Self> {
        Self::new(0.0, single)
    }

    /// Builder form of [`ModeEnergies::set_pair`].
    pub fn with_pair(mut self, i: usize, j: usize, value: f64) -> Result<Self> {
        self.set_pair(i, j, value)?;
        Ok(self)
    }

    /// Draws single-mode energies uniformly from `single_range` and every
    /// pair energy uniformly from `[-pair_bound, pair_bound]`.
    pub fn random_two_body<R: Rng + ?Sized>(
        rng: &mut R,
        n_modes: usize,
        single_range: (f64, f64),
        pair_bound: f64,
    ) -> Result<Self> {
        let single = (0..n_modes)
            .map(|_| rng.random_range(single_range.0..=single_range.1))
            .collect();
        let mut m = Self::free(single)?;
        for i in 0..n_modes {
            for j in i + 1..n_modes {
                m.set_pair(i, j, rng.random_range(-pair_bound..=pair_bound))?;
            }
        }
        Ok(m)
    }

    pub fn n_modes(&self) -> usize {
        self.single.len()
    }

    pub fn e0(&self) -> f64 {
        self.e0
    }

    pub fn set_e0(&mut self, e0: f64) -> Result<()> {
        ensure_finite("E0", e0)?;
        self.e0 = e0;
        Ok(())
    }

    pub fn single(&self) -> &[f64] {
        &self.single
    }

    fn check_mode(&self, i: usize) -> Result<()> {
        if i >= self.n_modes() {
            return Err(Error::IndexOutOfRange {
                index: i,
                len: self.n_modes(),
            });
        }
        Ok(())
    }

    /// Two-mode energy `eps_ij`; symmetric in its arguments.
    pub fn pair(&self, i: usize, j: usize) -> f64 {
        if i == j {
            return 0.0;
        }
        self.subset_energy((1u32 << i) | (1u32 << j))
    }

    pub fn set_pair(&mut self, i: usize, j: usize, value: f64) -> Result<()> {
        self.check_mode(i)?;
        self.check_mode(j)?;
        if i == j {
            return Err(Error::InvalidArgument(format!(
                "pair energy needs two distinct modes, got ({i}, {j})"
            )));
        }
        self.set_subset_energy((1u32 << i) | (1u32 << j), value)
    }

    /// Energy of the subset `mask`: `E0` for the empty set, `eps_i` for a
    /// singleton, the coupling otherwise.
    pub fn subset_energy(&self, mask: u32) -> f64 {
        match mask.count_ones() {
            0 => self.e0,
            1 => self.single[mask.trailing_zeros() as usize],
            _ => self.couplings.get(&mask).copied().unwrap_or(0.0),
        }
    }

    pub fn set_subset_energy(&mut self, mask: u32, value: f64) -> Result<()> {
        ensure_finite("subset energy", value)?;
        if self.n_modes() < 32 && mask >> self.n_modes() != 0 {
            return Err(Error::InvalidArgument(format!(
                "subset {mask:#b} exceeds {} modes",
                self.n_modes()
            )));
        }
        match mask.count_ones() {
            0 => self.e0 = value,
            1 => self.single[mask.trailing_zeros() as usize] = value,
            _ if value == 0.0 => {
                self.couplings.remove(&mask);
            }
            _ => {
                self.couplings.insert(mask, value);
            }
        }
        Ok(())
    }

    /// Nonzero two-mode energies as `((i, j), eps_ij)` with `i < j`.
    pub fn pairs(&self) -> impl Iterator<Item = ((usize, usize), f64)> + '_ {
        self.couplings
            .iter()
            .filter(|(m, _)| m.count_ones() == 2)
            .map(|(&m, &v)| {
                let i = m.trailing_zeros() as usize;
                let j = 31 - m.leading_zeros() as usize;
                ((i, j), v)
            })
    }

    /// Nonzero couplings of three or more modes.
    pub fn higher(&self) -> impl Iterator<Item = (u32, f64)> + '_ {
        self.couplings
            .iter()
            .filter(|(m, _)| m.count_ones() >= 3)
            .map(|(&m, &v)| (m, v))
    }

    pub fn has_higher_terms(&self) -> bool {
        self.higher().next().is_some()
    }

    /// True when every coupling of two or more modes vanishes.
    pub fn is_free(&self) -> bool {
        self.couplings.values().all(|&v| v == 0.0)
    }

    /// Copy with every coupling of two or more modes multiplied by `factor`.
    pub fn scale_couplings(&self, factor: f64) -> Self {
        let mut out = self.clone();
        out.couplings = self
            .couplings
            .iter()
            .map(|(&m, &v)| (m, v * factor))
            .filter(|&(_, v)| v != 0.0)
            .collect();
        out
    }

    /// `E(n)` for every pattern, indexed by bitmask.
    pub fn level_energies(&self) -> Result<Vec<f64>> {
        check_enumerable(self.n_modes())?;
        let mut table = vec![0.0; 1 << self.n_modes()];
        table[0] = self.e0;
        for (i, &e) in self.single.iter().enumerate() {
            table[1 << i] = e;
        }
        for (&m, &v) in &self.couplings {
            table[m as usize] = v;
        }
        subset::zeta(&mut table);
        Ok(table)
    }
}

/// One entanglement level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Level {
    pub energy: f64,
    pub probability: f64,
    pub label: Option<OccupationPattern>,
    /// Set when the underlying eigenvalue fell below the floor and the
    /// energy was clamped.
    pub clamped: bool,
}

impl Level {
    pub fn new(energy: f64, label: Option<OccupationPattern>) -> Self {
        Self {
            energy,
            probability: (-energy).exp(),
            label,
            clamped: false,
        }
    }
}

/// A list of entanglement levels `E_k` with probabilities `p_k = exp(-E_k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct EntanglementSpectrum {
    levels: Vec<Level>,
    normalized: bool,
}

impl EntanglementSpectrum {
    /// Validates the levels and records whether they sum to one.
    pub fn from_levels(levels: Vec<Level>) -> Result<Self> {
        if levels.is_empty() {
            return Err(Error::MalformedSpectrum("spectrum has no levels".into()));
        }
        let labeled = levels[0].label.is_some();
        let mut seen = std::collections::HashSet::new();
        for (k, level) in levels.iter().enumerate() {
            ensure_finite("level energy", level.energy)?;
            if level.label.is_some() != labeled {
                return Err(Error::MalformedSpectrum(format!(
                    "level {k} mixes labeled and unlabeled entries"
                )));
            }
            if let (Some(l), Some(first)) = (level.label, levels[0].label) {
                if l.len() != first.len() {
                    return Err(Error::MalformedSpectrum(format!(
                        "level {k} has label length {} but level 0 has {}",
                        l.len(),
                        first.len()
                    )));
                }
                if !seen.insert(l) {
                    return Err(Error::MalformedSpectrum(format!("duplicate label {l}")));
                }
            }
        }
        let total = compensated_sum(levels.iter().map(|l| l.probability));
        Ok(Self {
            normalized: (total - 1.0).abs() <= NORMALIZATION_TOL,
            levels,
        })
    }

    pub fn from_energies(energies: &[f64]) -> Result<Self> {
        Self::from_levels(energies.iter().map(|&e| Level::new(e, None)).collect())
    }

    pub fn from_labeled(entries: &[(OccupationPattern, f64)]) -> Result<Self> {
        Self::from_levels(
            entries
                .iter()
                .map(|&(label, e)| Level::new(e, Some(label)))
                .collect(),
        )
    }

    pub fn levels(&self) -> &[Level] {
        &self.levels
    }

    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn energies(&self) -> Vec<f64> {
        self.levels.iter().map(|l| l.energy).collect()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.levels.iter().map(|l| l.probability).collect()
    }

    pub fn is_labeled(&self) -> bool {
        self.levels.iter().all(|l| l.label.is_some())
    }

    /// Label length, when the spectrum is labeled.
    pub fn n_modes(&self) -> Option<usize> {
        self.levels.first().and_then(|l| l.label).map(|l| l.len())
    }

    /// Labeled with all `2^N` distinct patterns present.
    pub fn is_complete(&self) -> bool {
        match self.n_modes() {
            Some(n) if self.is_labeled() && n <= MAX_ENUMERATED_MODES => self.len() == 1 << n,
            _ => false,
        }
    }

    /// Folds `ln Z` into the energies so that the probabilities sum to one.
    pub fn normalize(&self) -> Self {
        let e_min = self
            .levels
            .iter()
            .map(|l| l.energy)
            .fold(f64::INFINITY, f64::min);
        let z_shifted = compensated_sum(self.levels.iter().map(|l| (-(l.energy - e_min)).exp()));
        let shift = e_min - z_shifted.ln();
        let levels: Vec<Level> = self
            .levels
            .iter()
            .map(|l| {
                let energy = l.energy - shift;
                Level {
                    energy,
                    probability: (-energy).exp(),
                    ..*l
                }
            })
            .collect();
        Self {
            levels,
            normalized: true,
        }
    }

    /// Parses the line format `label_bits,energy` or `energy`; lines starting
    /// with `#` and blank lines are skipped.
    pub fn parse(text: &str) -> Result<Self> {
        let mut levels = Vec::new();
        let mut first_line = 0;
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if levels.is_empty() {
                first_line = line_no;
            }
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            let parse_energy = |s: &str| -> Result<f64> {
                let e: f64 = s.parse().map_err(|_| Error::Parse {
                    line: line_no,
                    msg: format!("cannot parse energy {s:?}"),
                })?;
                if !e.is_finite() {
                    return Err(Error::Parse {
                        line: line_no,
                        msg: format!("energy {s:?} is not finite"),
                    });
                }
                Ok(e)
            };
            let level = match fields.as_slice() {
                [e] => Level::new(parse_energy(e)?, None),
                [label, e] => {
                    let label: OccupationPattern = label.parse().map_err(|err: Error| Error::Parse {
                        line: line_no,
                        msg: err.to_string(),
                    })?;
                    Level::new(parse_energy(e)?, Some(label))
                }
                _ => {
                    return Err(Error::Parse {
                        line: line_no,
                        msg: format!("expected `energy` or `label,energy`, got {line:?}"),
                    })
                }
            };
            if let Some(prev) = levels.first().map(|l: &Level| l.label) {
                let consistent = match (prev, level.label) {
                    (None, None) => true,
                    (Some(a), Some(b)) => a.len() == b.len(),
                    _ => false,
                };
                if !consistent {
                    return Err(Error::Parse {
                        line: line_no,
                        msg: format!("label shape differs from line {first_line}"),
                    });
                }
            }
            if let Some(label) = level.label {
                if levels.iter().any(|l: &Level| l.label == Some(label)) {
                    return Err(Error::Parse {
                        line: line_no,
                        msg: format!("duplicate label {label}"),
                    });
                }
            }
            levels.push(level);
        }
        Self::from_levels(levels)
    }

    /// Serializes in the format read by [`EntanglementSpectrum::parse`], with
    /// 17 significant digits per energy.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for l in &self.levels {
            match l.label {
                Some(label) => out.push_str(&format!("{label},{:.16e}\n", l.energy)),
                None => out.push_str(&format!("{:.16e}\n", l.energy)),
            }
        }
        out
    }
}

/// `Z = prod_i (1 + exp(-eps_i))`.
pub fn free_partition_function(single: &[f64]) -> Result<f64> {
    let mut z = 1.0;
    for &e in single {
        ensure_finite("single-mode energy", e)?;
        z *= 1.0 + (-e).exp();
    }
    Ok(z)
}

/// `<n_k> = 1 / (1 + exp(eps_k))` for a free mode.
pub fn free_occupation(eps_k: f64) -> Result<f64> {
    ensure_finite("single-mode energy", eps_k)?;
    Ok(1.0 / (1.0 + eps_k.exp()))
}

/// Enumerates all `2^N` levels, labeled, in bitmask order. With `normalize`,
/// `ln Z` is folded into `E0`.
pub fn mode_energies_to_spectrum(m: &ModeEnergies, normalize: bool) -> Result<EntanglementSpectrum> {
    let mut energies = m.level_energies()?;
    if normalize {
        let e_min = energies.iter().copied().fold(f64::INFINITY, f64::min);
        let z: CompensatedSum = energies.iter().map(|e| (-(e - e_min)).exp()).collect();
        let shift = e_min - z.value().ln();
        for e in &mut energies {
            *e -= shift;
        }
    }
    let n = m.n_modes();
    let levels = energies
        .iter()
        .enumerate()
        .map(|(mask, &e)| Ok(Level::new(e, Some(OccupationPattern::new(mask as u32, n)?))))
        .collect::<Result<Vec<_>>>()?;
    let mut s = EntanglementSpectrum::from_levels(levels)?;
    if normalize {
        s.normalized = true;
    }
    Ok(s)
}

/// Recovers the unique subset energies from a complete labeled spectrum by
/// Möbius inversion.
pub fn spectrum_to_mode_energies(s: &EntanglementSpectrum) -> Result<ModeEnergies> {
    let n = s
        .n_modes()
        .filter(|_| s.is_labeled())
        .ok_or_else(|| Error::MalformedSpectrum("spectrum is not labeled".into()))?;
    check_enumerable(n)?;
    let size = 1usize << n;
    let mut table = vec![f64::NAN; size];
    for level in s.levels() {
        let label = level.label.expect("checked labeled");
        let slot = &mut table[label.bits() as usize];
        if !slot.is_nan() {
            return Err(Error::MalformedSpectrum(format!("duplicate label {label}")));
        }
        *slot = level.energy;
    }
    if let Some(missing) = table.iter().position(|e| e.is_nan()) {
        return Err(Error::MalformedSpectrum(format!(
            "missing level for label {}",
            OccupationPattern::new(missing as u32, n)?
        )));
    }
    subset::mobius(&mut table);
    let mut m = ModeEnergies::new(table[0], (0..n).map(|i| table[1 << i]).collect())?;
    for (mask, &v) in table.iter().enumerate() {
        if mask.count_ones() >= 2 {
            m.set_subset_energy(mask as u32, v)?;
        }
    }
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn pat(s: &str) -> OccupationPattern {
        s.parse().unwrap()
    }

    fn worked_example() -> ModeEnergies {
        ModeEnergies::free(vec![1.0, 2.0])
            .unwrap()
            .with_pair(0, 1, 0.5)
            .unwrap()
    }

    #[test]
    fn free_partition_function_examples() {
        assert_eq!(free_partition_function(&[0.0]).unwrap(), 2.0);
        assert_eq!(free_partition_function(&[0.0, 0.0]).unwrap(), 4.0);
        assert_relative_eq!(free_partition_function(&[3f64.ln()]).unwrap(), 4.0 / 3.0, epsilon = 1e-15);
        assert!(free_partition_function(&[f64::NAN]).is_err());
    }

    #[test]
    fn free_occupation_examples() {
        assert_eq!(free_occupation(0.0).unwrap(), 0.5);
        assert_relative_eq!(free_occupation(3f64.ln()).unwrap(), 0.25, epsilon = 1e-15);
        assert_relative_eq!(free_occupation(30.0).unwrap(), 9.357622968840175e-14, max_relative = 1e-12);
        assert!(free_occupation(f64::INFINITY).is_err());
    }

    #[test]
    fn free_occupation_is_bounded_and_decreasing() {
        let mut prev = 1.0;
        for k in -300..=300 {
            let n = free_occupation(k as f64 * 0.1).unwrap();
            assert!(n > 0.0 && n < 1.0);
            assert!(n < prev);
            prev = n;
        }
    }

    #[test]
    fn two_mode_levels() {
        let s = mode_energies_to_spectrum(&worked_example(), false).unwrap();
        let got: Vec<(String, f64)> = s
            .levels()
            .iter()
            .map(|l| (l.label.unwrap().to_string(), l.energy))
            .collect();
        assert_eq!(
            got,
            vec![
                ("00".into(), 0.0),
                ("10".into(), 1.0),
                ("01".into(), 2.0),
                ("11".into(), 3.5)
            ]
        );
    }

    #[test]
    fn maximally_mixed_normalizes_to_quarters() {
        let m = ModeEnergies::free(vec![0.0, 0.0]).unwrap();
        let s = mode_energies_to_spectrum(&m, true).unwrap();
        assert!(s.is_normalized());
        for l in s.levels() {
            assert_relative_eq!(l.probability, 0.25, epsilon = 1e-15);
        }
    }

    #[test]
    fn free_spectrum_is_population_count() {
        let m = ModeEnergies::free(vec![1.0, 1.0, 1.0]).unwrap();
        let s = mode_energies_to_spectrum(&m, false).unwrap();
        for l in s.levels() {
            assert_eq!(l.energy, l.label.unwrap().popcount() as f64);
        }
    }

    #[test]
    fn inversion_of_worked_example() {
        let s = mode_energies_to_spectrum(&worked_example(), false).unwrap();
        let m = spectrum_to_mode_energies(&s).unwrap();
        assert_eq!(m, worked_example());
        assert!(!m.has_higher_terms());
    }

    #[test]
    fn free_spectrum_inverts_to_exact_zero_couplings() {
        let m = ModeEnergies::free(vec![1.0, 2.0, 0.5, -0.25]).unwrap();
        let s = mode_energies_to_spectrum(&m, false).unwrap();
        let back = spectrum_to_mode_energies(&s).unwrap();
        assert!(back.is_free());
        assert_eq!(back.pairs().count(), 0);
        assert_eq!(back.higher().count(), 0);
    }

    #[test]
    fn inversion_rejects_missing_and_duplicate_labels() {
        let s = EntanglementSpectrum::from_labeled(&[(pat("00"), 0.0), (pat("10"), 1.0), (pat("01"), 1.0)]).unwrap();
        assert!(matches!(spectrum_to_mode_energies(&s), Err(Error::MalformedSpectrum(_))));
        let dup = EntanglementSpectrum::from_labeled(&[(pat("00"), 0.0), (pat("00"), 1.0)]);
        assert!(matches!(dup, Err(Error::MalformedSpectrum(_))));
        let unlabeled = EntanglementSpectrum::from_energies(&[0.0, 1.0]).unwrap();
        assert!(spectrum_to_mode_energies(&unlabeled).is_err());
    }

    #[test]
    fn enumeration_is_capped() {
        let m = ModeEnergies::free(vec![0.0; 21]).unwrap();
        assert!(matches!(mode_energies_to_spectrum(&m, false), Err(Error::Capacity { .. })));
    }

    #[test]
    fn higher_order_terms_enter_the_levels() {
        let mut m = ModeEnergies::free(vec![1.0, 1.0, 1.0]).unwrap();
        m.set_subset_energy(0b111, 0.75).unwrap();
        let e = m.level_energies().unwrap();
        assert_eq!(e[0b111], 3.75);
        assert_eq!(e[0b011], 2.0);
        let back = spectrum_to_mode_energies(&mode_energies_to_spectrum(&m, false).unwrap()).unwrap();
        assert_eq!(back.higher().collect::<Vec<_>>(), vec![(0b111, 0.75)]);
    }

    #[test]
    fn free_partition_matches_enumeration() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for n in 1..=8 {
            let m = ModeEnergies::random_two_body(&mut rng, n, (-3.0, 3.0), 0.0).unwrap();
            let direct: f64 = m.level_energies().unwrap().iter().map(|e| (-e).exp()).sum();
            let z = free_partition_function(m.single()).unwrap();
            assert_relative_eq!(z, direct, max_relative = 1e-12);
        }
    }

    #[test]
    fn text_format_roundtrip_and_errors() {
        let s = mode_energies_to_spectrum(&worked_example(), true).unwrap();
        let parsed = EntanglementSpectrum::parse(&format!("# header\n\n{}", s.to_text())).unwrap();
        assert!(parsed.is_normalized());
        for (a, b) in parsed.levels().iter().zip(s.levels()) {
            assert_eq!(a.label, b.label);
            assert_eq!(a.energy, b.energy);
        }
        let unlabeled = EntanglementSpectrum::parse("0.5\n1.5\n").unwrap();
        assert!(!unlabeled.is_labeled());
        assert_eq!(
            EntanglementSpectrum::parse("00,0\n1.0\n"),
            Err(Error::Parse {
                line: 2,
                msg: "label shape differs from line 1".into()
            })
        );
        assert!(matches!(EntanglementSpectrum::parse("# only comments\n"), Err(Error::MalformedSpectrum(_))));
        assert!(matches!(EntanglementSpectrum::parse("0\nabc\n"), Err(Error::Parse { line: 2, .. })));
        assert!(matches!(EntanglementSpectrum::parse("02,1.0\n"), Err(Error::Parse { line: 1, .. })));
    }

    #[test]
    fn normalize_shifts_energies() {
        let s = EntanglementSpectrum::from_energies(&[0.0, 0.0, 0.0, 0.0]).unwrap();
        assert!(!s.is_normalized());
        let n = s.normalize();
        assert!(n.is_normalized());
        for l in n.levels() {
            assert_relative_eq!(l.energy, 4f64.ln(), epsilon = 1e-15);
        }
    }

    proptest! {
        #[test]
        fn mobius_roundtrip(seed in any::<u64>(), n in 1usize..=10) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut m = ModeEnergies::random_two_body(&mut rng, n, (-3.0, 3.0), 1.0).unwrap();
            m.set_e0(rng.random_range(-2.0..2.0)).unwrap();
            if n >= 3 {
                m.set_subset_energy(0b111, rng.random_range(-0.5..0.5)).unwrap();
            }
            let back = spectrum_to_mode_energies(&mode_energies_to_spectrum(&m, false).unwrap()).unwrap();
            for mask in 0..(1u32 << n) {
                prop_assert!((back.subset_energy(mask) - m.subset_energy(mask)).abs() <= 1e-12);
            }
        }

        #[test]
        fn additive_iff_no_couplings(seed in any::<u64>(), n in 2usize..=6) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let free = ModeEnergies::random_two_body(&mut rng, n, (-3.0, 3.0), 0.0).unwrap();
            let back = spectrum_to_mode_energies(&mode_energies_to_spectrum(&free, false).unwrap()).unwrap();
            for mask in 0..(1u32 << n) {
                if mask.count_ones() >= 2 {
                    prop_assert!(back.subset_energy(mask).abs() <= 1e-12);
                }
            }
            let inter = free.clone().with_pair(0, 1, 0.3).unwrap();
            let back = spectrum_to_mode_energies(&mode_energies_to_spectrum(&inter, false).unwrap()).unwrap();
            prop_assert!((back.pair(0, 1) - 0.3).abs() <= 1e-12);
        }
    }
}

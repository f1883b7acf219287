//! Exact thermal expectation values by enumerating every occupation pattern.
//!
//! Weights are evaluated as `exp(-(E(n) - E_min))` and accumulated with
//! compensated summation in bitmask order, so results do not depend on the
//! magnitude of the level energies and are reproducible.

use crate::error::{Error, Result};
use crate::spectra::ModeEnergies;
use crate::sum::compensated_sum;

/// Shifted Boltzmann weights of every pattern of a [`ModeEnergies`].
#[derive(Debug, Clone)]
pub struct GibbsEnsemble {
    n_modes: usize,
    e_min: f64,
    weights: Vec<f64>,
    z_shifted: f64,
}

impl GibbsEnsemble {
    pub fn new(m: &ModeEnergies) -> Result<Self> {
        let energies = m.level_energies()?;
        let e_min = energies.iter().copied().fold(f64::INFINITY, f64::min);
        let weights: Vec<f64> = energies.iter().map(|e| (-(e - e_min)).exp()).collect();
        let z_shifted = compensated_sum(weights.iter().copied());
        Ok(Self {
            n_modes: m.n_modes(),
            e_min,
            weights,
            z_shifted,
        })
    }

    pub fn n_modes(&self) -> usize {
        self.n_modes
    }

    pub fn partition_function(&self) -> f64 {
        self.z_shifted * (-self.e_min).exp()
    }

    pub fn ln_partition_function(&self) -> f64 {
        self.z_shifted.ln() - self.e_min
    }

    /// Normalized probability of every pattern, indexed by bitmask.
    pub fn probabilities(&self) -> Vec<f64> {
        self.weights.iter().map(|w| w / self.z_shifted).collect()
    }

    fn check_mode(&self, k: usize) -> Result<()> {
        if k >= self.n_modes {
            return Err(Error::IndexOutOfRange {
                index: k,
                len: self.n_modes,
            });
        }
        Ok(())
    }

    /// Probability that every mode in `mask` is occupied.
    fn occupied_fraction(&self, mask: usize) -> f64 {
        compensated_sum(
            self.weights
                .iter()
                .enumerate()
                .filter(|(n, _)| n & mask == mask)
                .map(|(_, &w)| w),
        ) / self.z_shifted
    }

    pub fn occupation(&self, k: usize) -> Result<f64> {
        self.check_mode(k)?;
        Ok(self.occupied_fraction(1 << k))
    }

    pub fn pair_occupation(&self, k: usize, l: usize) -> Result<f64> {
        self.check_mode(k)?;
        self.check_mode(l)?;
        if k == l {
            return Err(Error::InvalidArgument(format!(
                "pair occupation needs distinct modes, got ({k}, {l}); use the single-mode occupation"
            )));
        }
        Ok(self.occupied_fraction((1 << k) | (1 << l)))
    }
}

/// `Z = sum_n exp(-E(n))`, including the stored `E0`.
pub fn exact_partition_function(m: &ModeEnergies) -> Result<f64> {
    Ok(GibbsEnsemble::new(m)?.partition_function())
}

/// `<n_k>`; mode indices are zero-based.
pub fn exact_occupation(m: &ModeEnergies, k: usize) -> Result<f64> {
    GibbsEnsemble::new(m)?.occupation(k)
}

/// `<n_k n_l>` for `k != l`.
pub fn exact_pair_occupation(m: &ModeEnergies, k: usize, l: usize) -> Result<f64> {
    GibbsEnsemble::new(m)?.pair_occupation(k, l)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectra::{free_occupation, free_partition_function};
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn worked_example() -> ModeEnergies {
        ModeEnergies::free(vec![1.0, 2.0]).unwrap().with_pair(0, 1, 0.5).unwrap()
    }

    // Four-level oracle written out by hand.
    fn four_state(e1: f64, e2: f64, e12: f64) -> (f64, f64, f64, f64) {
        let (w1, w2, w12) = ((-e1).exp(), (-e2).exp(), (-(e1 + e2 + e12)).exp());
        let z = 1.0 + w1 + w2 + w12;
        (z, (w1 + w12) / z, (w2 + w12) / z, w12 / z)
    }

    #[test]
    fn worked_partition_function() {
        let z = exact_partition_function(&worked_example()).unwrap();
        let expect = 1.0 + (-1f64).exp() + (-2f64).exp() + (-3.5f64).exp();
        assert_relative_eq!(z, expect, max_relative = 1e-15);
        assert_relative_eq!(z, 1.5334121, epsilon = 1e-7);
    }

    #[test]
    fn uniform_partition_function() {
        let m = ModeEnergies::free(vec![0.0; 3]).unwrap();
        assert_relative_eq!(exact_partition_function(&m).unwrap(), 8.0, epsilon = 1e-14);
    }

    #[test]
    fn worked_occupations_match_closed_expressions() {
        let m = worked_example();
        let (_, n1, n2, n12) = four_state(1.0, 2.0, 0.5);
        assert_relative_eq!(exact_occupation(&m, 0).unwrap(), n1, max_relative = 1e-14);
        assert_relative_eq!(exact_occupation(&m, 1).unwrap(), n2, max_relative = 1e-14);
        assert_relative_eq!(exact_pair_occupation(&m, 0, 1).unwrap(), n12, max_relative = 1e-14);
        assert_relative_eq!(n1, 0.259602, epsilon = 1e-6);
        assert_relative_eq!(n12, 0.0196929, epsilon = 1e-7);

        // Expressions written in terms of the level energies E1, E2, E12.
        let (e1, e2, e12) = (1.0f64, 2.0f64, 3.5f64);
        let d = 1.0 + (e12 - e1).exp() + (e12 - e2).exp() + e12.exp();
        assert_relative_eq!(n1, (1.0 + (e12 - e1).exp()) / d, max_relative = 1e-14);
        assert_relative_eq!(n12, 1.0 / d, max_relative = 1e-14);
    }

    #[test]
    fn uniform_occupations() {
        let m = ModeEnergies::free(vec![0.0, 0.0]).unwrap();
        assert_relative_eq!(exact_occupation(&m, 0).unwrap(), 0.5, epsilon = 1e-15);
        assert_relative_eq!(exact_pair_occupation(&m, 0, 1).unwrap(), 0.25, epsilon = 1e-15);
    }

    #[test]
    fn free_limit_factorizes() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let m = ModeEnergies::random_two_body(&mut rng, 5, (-3.0, 3.0), 0.0).unwrap();
        let g = GibbsEnsemble::new(&m).unwrap();
        assert_relative_eq!(
            g.partition_function(),
            free_partition_function(m.single()).unwrap(),
            max_relative = 1e-12
        );
        for k in 0..5 {
            assert_relative_eq!(g.occupation(k).unwrap(), free_occupation(m.single()[k]).unwrap(), epsilon = 1e-12);
            for l in k + 1..5 {
                let nn = g.pair_occupation(k, l).unwrap();
                let prod = g.occupation(k).unwrap() * g.occupation(l).unwrap();
                assert!((nn - prod).abs() <= 1e-14);
                assert_relative_eq!(
                    nn,
                    free_occupation(m.single()[k]).unwrap() * free_occupation(m.single()[l]).unwrap(),
                    epsilon = 1e-12
                );
            }
        }
    }

    #[test]
    fn single_mode_matches_free_occupation_over_wide_range() {
        for k in -300..=300 {
            let eps = k as f64 * 0.1;
            let m = ModeEnergies::free(vec![eps]).unwrap();
            let exact = exact_occupation(&m, 0).unwrap();
            assert!((exact - free_occupation(eps).unwrap()).abs() <= 1e-12, "eps = {eps}");
        }
        let m = ModeEnergies::free(vec![30.0]).unwrap();
        assert_relative_eq!(exact_occupation(&m, 0).unwrap(), 9.357622968840175e-14, max_relative = 1e-10);
    }

    #[test]
    fn large_energies_do_not_overflow() {
        let m = ModeEnergies::free(vec![800.0, 805.0]).unwrap().with_pair(0, 1, 1.0).unwrap();
        let n = exact_occupation(&m, 0).unwrap();
        assert!(n.is_finite() && n >= 0.0);
        let mut shifted = m.clone();
        shifted.set_e0(-900.0).unwrap();
        // Z itself overflows, but ln Z and the occupations stay exact.
        let g = GibbsEnsemble::new(&shifted).unwrap();
        assert!(g.partition_function().is_infinite());
        assert!(g.ln_partition_function().is_finite());
        assert_eq!(exact_occupation(&shifted, 1).unwrap(), exact_occupation(&m, 1).unwrap());
    }

    #[test]
    fn index_and_argument_errors() {
        let m = worked_example();
        assert!(matches!(exact_occupation(&m, 2), Err(Error::IndexOutOfRange { index: 2, len: 2 })));
        assert!(matches!(exact_pair_occupation(&m, 1, 1), Err(Error::InvalidArgument(_))));
        assert!(matches!(exact_pair_occupation(&m, 0, 5), Err(Error::IndexOutOfRange { .. })));
    }

    fn ln_z(m: &ModeEnergies) -> f64 {
        GibbsEnsemble::new(m).unwrap().ln_partition_function()
    }

    proptest! {
        #[test]
        fn occupations_are_log_derivatives(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let m = ModeEnergies::random_two_body(&mut rng, 4, (-2.0, 2.0), 1.0).unwrap();
            let g = GibbsEnsemble::new(&m).unwrap();
            let h = 1e-6;
            for k in 0..4 {
                let mut up = m.clone();
                let mut dn = m.clone();
                up.set_subset_energy(1 << k, m.single()[k] + h).unwrap();
                dn.set_subset_energy(1 << k, m.single()[k] - h).unwrap();
                let fd = -(ln_z(&up) - ln_z(&dn)) / (2.0 * h);
                prop_assert!((fd - g.occupation(k).unwrap()).abs() <= 1e-6);
                for l in k + 1..4 {
                    let mut up = m.clone();
                    let mut dn = m.clone();
                    up.set_pair(k, l, m.pair(k, l) + h).unwrap();
                    dn.set_pair(k, l, m.pair(k, l) - h).unwrap();
                    let fd = -(ln_z(&up) - ln_z(&dn)) / (2.0 * h);
                    prop_assert!((fd - g.pair_occupation(k, l).unwrap()).abs() <= 1e-6);
                }
            }
        }

        #[test]
        fn pair_occupation_is_bounded(seed in any::<u64>()) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let m = ModeEnergies::random_two_body(&mut rng, 4, (-3.0, 3.0), 2.0).unwrap();
            let g = GibbsEnsemble::new(&m).unwrap();
            for k in 0..4 {
                for l in k + 1..4 {
                    let nn = g.pair_occupation(k, l).unwrap();
                    prop_assert!(nn > 0.0);
                    prop_assert!(nn <= g.occupation(k).unwrap().min(g.occupation(l).unwrap()) + 1e-15);
                    prop_assert_eq!(nn, g.pair_occupation(l, k).unwrap());
                }
            }
        }
    }
}

//! Interaction distance: the trace distance from a state to the closest
//! free-fermion state.
//!
//! For commuting, diagonal states the trace distance reduces to a distance
//! between probability lists sorted in descending order, so the search runs
//! over single-mode energies `eps` only. The free probabilities
//! `q(eps)` are the `2^N` normalized weights of `E(n) = sum_i eps_i n_i`; the
//! shift `E0 = ln Z` is fixed by normalization and is not searched over.

mod simplex;

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::spectra::{check_enumerable, spectrum_to_mode_energies, EntanglementSpectrum, OccupationPattern};
use crate::subset;
use crate::sum::compensated_sum;

pub use simplex::{minimize, SimplexOutcome, SimplexSettings};

/// `W <= 6 D_F`.
pub const BOUND_FACTOR: f64 = 6.0;

/// Base tolerance of [`check_bound`] before optimizer slack is added.
pub const BOUND_BASE_TOL: f64 = 1e-9;

const INPUT_NORMALIZATION_TOL: f64 = 1e-10;

/// Settings for the multi-start simplex fit.
#[derive(Debug, Clone, PartialEq)]
pub struct FitConfig {
    /// Number of starts, the first from the unperturbed initial point.
    pub restarts: usize,
    /// Objective evaluations per start; `None` means `200 * N`.
    pub max_evals_per_restart: Option<usize>,
    pub tol: f64,
    pub seed: u64,
    /// Half-width of the uniform perturbation applied to restarts.
    pub perturbation: f64,
    pub initial_step: f64,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            restarts: 16,
            max_evals_per_restart: None,
            tol: 1e-10,
            seed: 0,
            perturbation: 0.5,
            initial_step: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FreeFitResult {
    pub eps_star: Vec<f64>,
    pub e0_star: f64,
    pub d_f: f64,
    pub objective_evals: usize,
    pub restarts_used: usize,
    pub converged: bool,
}

impl FreeFitResult {
    /// Probabilities of the fitted free state, indexed by bitmask.
    pub fn free_probabilities(&self) -> Vec<f64> {
        free_probabilities(&self.eps_star).expect("fitted energies are enumerable")
    }
}

fn check_probabilities(name: &str, p: &[f64]) -> Result<()> {
    if let Some(x) = p.iter().find(|x| !x.is_finite() || **x < 0.0) {
        return Err(Error::InvalidArgument(format!("{name} contains invalid probability {x}")));
    }
    let total = compensated_sum(p.iter().copied());
    if (total - 1.0).abs() > INPUT_NORMALIZATION_TOL {
        return Err(Error::InvalidArgument(format!(
            "{name} is not normalized (sum = {total})"
        )));
    }
    Ok(())
}

fn sorted_desc(p: &[f64], len: usize) -> Vec<f64> {
    let mut v = p.to_vec();
    v.resize(len.max(p.len()), 0.0);
    v.sort_by(|a, b| b.total_cmp(a));
    v
}

fn sorted_distance(p_sorted: &[f64], q_sorted: &[f64]) -> f64 {
    let d = 0.5 * compensated_sum(p_sorted.iter().zip(q_sorted).map(|(a, b)| (a - b).abs()));
    d.clamp(0.0, 1.0)
}

/// Trace distance between two commuting diagonal states, `1/2 sum_k |p_k - q_k|`
/// with both lists sorted descending and the shorter one zero-padded.
pub fn trace_distance_diagonal(p: &[f64], q: &[f64]) -> Result<f64> {
    check_probabilities("p", p)?;
    check_probabilities("q", q)?;
    let len = p.len().max(q.len());
    Ok(sorted_distance(&sorted_desc(p, len), &sorted_desc(q, len)))
}

/// Normalized weights of the free spectrum `E(n) = sum_i eps_i n_i`, indexed
/// by bitmask.
pub fn free_probabilities(eps: &[f64]) -> Result<Vec<f64>> {
    check_enumerable(eps.len())?;
    let mut buf = vec![0.0; 1 << eps.len()];
    fill_free_probabilities(eps, &mut buf);
    Ok(buf)
}

fn fill_free_probabilities(eps: &[f64], buf: &mut [f64]) {
    buf.fill(0.0);
    for (i, &e) in eps.iter().enumerate() {
        buf[1 << i] = e;
    }
    subset::zeta(buf);
    let e_min = buf.iter().copied().fold(f64::INFINITY, f64::min);
    for e in buf.iter_mut() {
        *e = (-(*e - e_min)).exp();
    }
    let z = compensated_sum(buf.iter().copied());
    for w in buf.iter_mut() {
        *w /= z;
    }
}

/// Starting energies: the single-mode energies of the Möbius inversion when
/// the spectrum is complete and labeled, else the `N` lowest excitation gaps.
fn initial_point(s: &EntanglementSpectrum, n_modes: usize) -> Vec<f64> {
    if s.is_complete() && s.n_modes() == Some(n_modes) {
        if let Ok(m) = spectrum_to_mode_energies(s) {
            return m.single().to_vec();
        }
    }
    let mut energies: Vec<f64> = s
        .levels()
        .iter()
        .filter(|l| !l.clamped)
        .map(|l| l.energy)
        .collect();
    energies.sort_by(f64::total_cmp);
    (0..n_modes)
        .map(|i| match (energies.first(), energies.get(i + 1)) {
            (Some(lo), Some(e)) => e - lo,
            _ => 1.0,
        })
        .collect()
}

/// Multi-start simplex search for the free spectrum closest in trace
/// distance. Restarts are independent and seeded by `(seed, index)`; the
/// lowest objective wins, ties going to the lowest index.
pub fn fit_free_spectrum(s: &EntanglementSpectrum, n_modes: usize, cfg: &FitConfig) -> Result<FreeFitResult> {
    if !s.is_normalized() {
        return Err(Error::InvalidArgument("spectrum must be normalized before fitting".into()));
    }
    if n_modes == 0 {
        return Err(Error::InvalidArgument("need at least one mode".into()));
    }
    check_enumerable(n_modes)?;
    if cfg.restarts == 0 {
        return Err(Error::InvalidArgument("need at least one restart".into()));
    }
    let p: Vec<f64> = s
        .levels()
        .iter()
        .map(|l| if l.clamped { 0.0 } else { l.probability })
        .collect();
    let len = p.len().max(1 << n_modes);
    let p_sorted = sorted_desc(&p, len);

    let x0 = initial_point(s, n_modes);
    let settings = SimplexSettings {
        max_evals: cfg.max_evals_per_restart.unwrap_or(200 * n_modes),
        tol: cfg.tol,
        initial_step: cfg.initial_step,
    };

    let outcomes: Vec<SimplexOutcome> = (0..cfg.restarts)
        .into_par_iter()
        .map(|r| {
            let mut start = x0.clone();
            if r > 0 {
                let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
                rng.set_stream(r as u64);
                for x in &mut start {
                    *x += rng.random_range(-cfg.perturbation..=cfg.perturbation);
                }
            }
            let mut q = vec![0.0; 1 << n_modes];
            let mut q_sorted = vec![0.0; len];
            let objective = |eps: &[f64]| {
                fill_free_probabilities(eps, &mut q);
                q_sorted[..q.len()].copy_from_slice(&q);
                q_sorted[q.len()..].fill(0.0);
                q_sorted.sort_by(|a, b| b.total_cmp(a));
                sorted_distance(&p_sorted, &q_sorted)
            };
            minimize(objective, &start, &settings)
        })
        .collect();

    let objective_evals = outcomes.iter().map(|o| o.evals).sum();
    let best = outcomes
        .into_iter()
        .reduce(|a, b| if b.f < a.f { b } else { a })
        .expect("at least one restart");
    let e0_star = best.x.iter().map(|e| (-e).exp().ln_1p()).sum();
    Ok(FreeFitResult {
        eps_star: best.x,
        e0_star,
        d_f: best.f,
        objective_evals,
        restarts_used: cfg.restarts,
        converged: best.converged,
    })
}

/// Labels each level with the occupation pattern of the free level it is
/// paired with in the sorted trace distance against `eps`.
///
/// In this labeling `rho` and the fitted free state are diagonal in the same
/// mode basis, so the Wick violation of the result obeys the bound against
/// the fitted distance exactly.
pub fn label_by_free_fit(s: &EntanglementSpectrum, eps: &[f64]) -> Result<EntanglementSpectrum> {
    let q = free_probabilities(eps)?;
    if s.len() != q.len() {
        return Err(Error::InvalidArgument(format!(
            "need {} levels to pair with {} modes, got {}",
            q.len(),
            eps.len(),
            s.len()
        )));
    }
    let mut masks: Vec<usize> = (0..q.len()).collect();
    masks.sort_by(|&a, &b| q[b].total_cmp(&q[a]).then(a.cmp(&b)));
    let mut levels: Vec<usize> = (0..s.len()).collect();
    let p = s.probabilities();
    levels.sort_by(|&a, &b| p[b].total_cmp(&p[a]).then(a.cmp(&b)));
    let mut labeled = s.levels().to_vec();
    for (&k, &mask) in levels.iter().zip(&masks) {
        labeled[k].label = Some(OccupationPattern::new(mask as u32, eps.len())?);
    }
    EntanglementSpectrum::from_levels(labeled)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundCheck {
    pub holds: bool,
    /// `6 D_F - W`.
    pub slack: f64,
}

/// Checks `w_max <= 6 d_f + tol`.
pub fn check_bound(w_max: f64, d_f: f64, tol: f64) -> Result<BoundCheck> {
    for (name, v) in [("w_max", w_max), ("d_f", d_f), ("tol", tol)] {
        if !v.is_finite() || v < 0.0 {
            return Err(Error::InvalidArgument(format!("{name} must be finite and non-negative, got {v}")));
        }
    }
    let slack = BOUND_FACTOR * d_f - w_max;
    Ok(BoundCheck {
        holds: w_max <= BOUND_FACTOR * d_f + tol,
        slack,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectra::{mode_energies_to_spectrum, ModeEnergies};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn normalize(v: Vec<f64>) -> Vec<f64> {
        let s: f64 = v.iter().sum();
        v.into_iter().map(|x| x / s).collect()
    }

    #[test]
    fn trace_distance_examples() {
        let p = [0.1, 0.2, 0.3, 0.4];
        assert_eq!(trace_distance_diagonal(&p, &p).unwrap(), 0.0);
        assert_eq!(trace_distance_diagonal(&[1.0, 0.0], &[0.0, 1.0]).unwrap(), 0.0);
        assert_relative_eq!(trace_distance_diagonal(&[0.75, 0.25], &[0.5, 0.5]).unwrap(), 0.25, epsilon = 1e-16);
        assert_relative_eq!(trace_distance_diagonal(&[1.0], &[0.5, 0.5]).unwrap(), 0.5, epsilon = 1e-16);
    }

    #[test]
    fn trace_distance_rejects_bad_input() {
        assert!(trace_distance_diagonal(&[0.5, 0.4], &[0.5, 0.5]).is_err());
        assert!(trace_distance_diagonal(&[1.5, -0.5], &[0.5, 0.5]).is_err());
    }

    #[test]
    fn free_probabilities_match_spectrum() {
        let eps = [0.4, -1.0, 2.0];
        let q = free_probabilities(&eps).unwrap();
        let s = mode_energies_to_spectrum(&ModeEnergies::free(eps.to_vec()).unwrap(), true).unwrap();
        for (a, l) in q.iter().zip(s.levels()) {
            assert_relative_eq!(*a, l.probability, max_relative = 1e-13);
        }
        assert_relative_eq!(q.iter().sum::<f64>(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn recovers_free_two_mode_spectrum() {
        let s = mode_energies_to_spectrum(&ModeEnergies::free(vec![1.0, 2.0]).unwrap(), true).unwrap();
        let fit = fit_free_spectrum(&s, 2, &FitConfig::default()).unwrap();
        assert!(fit.d_f <= 1e-6);
        let mut eps = fit.eps_star.clone();
        eps.sort_by(f64::total_cmp);
        assert!((eps[0] - 1.0).abs() < 1e-3 && (eps[1] - 2.0).abs() < 1e-3);
        let total: f64 = fit.free_probabilities().iter().sum();
        assert!((total - 1.0).abs() <= 1e-12);
        assert_relative_eq!(fit.e0_star, (1.0 + (-1f64).exp()).ln() + (1.0 + (-2f64).exp()).ln(), epsilon = 1e-3);
    }

    #[test]
    fn maximally_mixed_is_free() {
        let s = EntanglementSpectrum::from_energies(&[4f64.ln(); 4]).unwrap();
        assert!(s.is_normalized());
        let fit = fit_free_spectrum(&s, 2, &FitConfig::default()).unwrap();
        assert!(fit.d_f <= 1e-6);
        assert!(fit.eps_star.iter().all(|e| e.abs() < 1e-2));
    }

    #[test]
    fn unlabeled_free_spectrum_fits() {
        let s = mode_energies_to_spectrum(&ModeEnergies::free(vec![0.5, 1.5, 2.5]).unwrap(), true).unwrap();
        let unlabeled = EntanglementSpectrum::from_energies(&s.energies()).unwrap();
        let fit = fit_free_spectrum(&unlabeled, 3, &FitConfig::default()).unwrap();
        assert!(fit.d_f <= 1e-6, "d_f = {}", fit.d_f);
    }

    #[test]
    fn fit_matches_grid_oracle() {
        let m = ModeEnergies::free(vec![1.0, 2.0]).unwrap().with_pair(0, 1, 0.5).unwrap();
        let s = mode_energies_to_spectrum(&m, true).unwrap();
        let p = s.probabilities();
        let mut grid = f64::INFINITY;
        for a in 0..=500 {
            for b in 0..=500 {
                let eps = [-1.0 + 0.01 * a as f64, -1.0 + 0.01 * b as f64];
                let q = free_probabilities(&eps).unwrap();
                grid = grid.min(trace_distance_diagonal(&p, &q).unwrap());
            }
        }
        let fit = fit_free_spectrum(&s, 2, &FitConfig::default()).unwrap();
        assert!(fit.d_f <= grid + 1e-12);
        assert!((fit.d_f - grid).abs() <= 1e-3, "{} vs {grid}", fit.d_f);
    }

    #[test]
    fn fit_is_seed_deterministic() {
        let m = ModeEnergies::free(vec![1.0, 2.0, 0.3]).unwrap().with_pair(0, 2, 0.7).unwrap();
        let s = mode_energies_to_spectrum(&m, true).unwrap();
        let cfg = FitConfig { seed: 42, ..FitConfig::default() };
        let a = fit_free_spectrum(&s, 3, &cfg).unwrap();
        let b = fit_free_spectrum(&s, 3, &cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn fit_rejects_bad_input() {
        let s = EntanglementSpectrum::from_energies(&[0.0, 0.0]).unwrap();
        assert!(fit_free_spectrum(&s, 1, &FitConfig::default()).is_err());
        let n = s.normalize();
        assert!(matches!(fit_free_spectrum(&n, 21, &FitConfig::default()), Err(Error::Capacity { .. })));
    }

    #[test]
    fn bound_checks() {
        let free = check_bound(0.0, 0.0, BOUND_BASE_TOL).unwrap();
        assert!(free.holds);
        assert_eq!(free.slack, 0.0);
        let tight = check_bound(0.06, 0.01, 0.0).unwrap();
        assert!(tight.holds);
        assert!(!check_bound(0.07, 0.01, 1e-9).unwrap().holds);
        assert!(check_bound(-1.0, 0.0, 0.0).is_err());
        assert!(check_bound(0.0, f64::NAN, 0.0).is_err());
    }

    #[test]
    fn fitted_labeling_obeys_bound() {
        use crate::wick::{report, WickMethod};
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..20 {
            let m = ModeEnergies::random_two_body(&mut rng, 3, (-2.0, 2.0), 1.5).unwrap();
            let s = mode_energies_to_spectrum(&m, true).unwrap();
            let unlabeled = EntanglementSpectrum::from_energies(&s.energies()).unwrap();
            let fit = fit_free_spectrum(&unlabeled, 3, &FitConfig::default()).unwrap();
            let paired = label_by_free_fit(&unlabeled, &fit.eps_star).unwrap();
            assert!(paired.is_complete());
            let w = report(&spectrum_to_mode_energies(&paired).unwrap(), WickMethod::Exact).unwrap();
            assert!(w.w_max <= BOUND_FACTOR * fit.d_f + 1e-12);
        }
    }

    proptest! {
        #[test]
        fn trace_distance_is_a_metric(
            a in prop::collection::vec(0.0f64..1.0, 8),
            b in prop::collection::vec(0.0f64..1.0, 8),
            c in prop::collection::vec(0.0f64..1.0, 8),
        ) {
            prop_assume!(a.iter().sum::<f64>() > 0.1 && b.iter().sum::<f64>() > 0.1 && c.iter().sum::<f64>() > 0.1);
            let (a, b, c) = (normalize(a), normalize(b), normalize(c));
            let ab = trace_distance_diagonal(&a, &b).unwrap();
            let ba = trace_distance_diagonal(&b, &a).unwrap();
            let bc = trace_distance_diagonal(&b, &c).unwrap();
            let ac = trace_distance_diagonal(&a, &c).unwrap();
            prop_assert_eq!(ab, ba);
            prop_assert!(trace_distance_diagonal(&a, &a).unwrap() <= 1e-12);
            prop_assert!(ac <= ab + bc + 1e-12);
            prop_assert!((0.0..=1.0).contains(&ab));
        }

        #[test]
        fn distance_ignores_level_order(seed in any::<u64>()) {
            use rand::seq::SliceRandom;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let m = ModeEnergies::random_two_body(&mut rng, 3, (-2.0, 2.0), 1.0).unwrap();
            let s = mode_energies_to_spectrum(&m, true).unwrap();
            let mut e = s.energies();
            e.shuffle(&mut rng);
            let shuffled = EntanglementSpectrum::from_energies(&e).unwrap();
            let cfg = FitConfig::default();
            let unlabeled = EntanglementSpectrum::from_energies(&s.energies()).unwrap();
            let a = fit_free_spectrum(&unlabeled, 3, &cfg).unwrap();
            let b = fit_free_spectrum(&shuffled, 3, &cfg).unwrap();
            prop_assert_eq!(a.d_f, b.d_f);
        }
    }
}

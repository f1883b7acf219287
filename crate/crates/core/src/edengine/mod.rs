//! Exact diagonalization of a spinless t–V chain and the entanglement
//! quantities of its ground state.
//!
//! The pipeline is: sector Hamiltonian → ground state → reduced density
//! matrix of the left `cut` sites → entanglement spectrum, natural orbitals,
//! directly measured Wick violation, labeled spectrum, and the interaction
//! distance of the spectrum.

mod fock;
mod ground;
mod hamiltonian;
mod orbitals;
mod precision;
mod reduced;

pub use fock::{annihilate, apply_string, create, expectation, hop, Config, FockState, Ladder, SectorBasis, MAX_SITES};
pub use ground::{ground_state, GroundState, DEGENERACY_GAP};
pub use hamiltonian::{build_hamiltonian, Boundary, LatticeModel, SectorHamiltonian, MAX_SECTOR_DIM};
pub use orbitals::{
    direct_wick_violation, label_spectrum, max_anomalous_correlator, max_full_wick_residual, mode_occupations,
    natural_orbitals, one_body_correlation, verify_full_wick, NaturalOrbitalBasis, DEGENERATE_OCCUPATION,
    LABEL_MARGIN,
};
pub use precision::jacobi_gram;
pub use reduced::{
    entanglement_spectrum, entanglement_spectrum_with_floor, reduced_density_matrix, ReducedState, EIGEN_FLOOR,
    MAX_CUT,
};

use crate::error::{Error, Result};
use crate::intdist::{check_bound, fit_free_spectrum, label_by_free_fit, BoundCheck, FitConfig, FreeFitResult};
use crate::spectra::{spectrum_to_mode_energies, EntanglementSpectrum};
use crate::wick::{report, WickMethod, WickReport};

/// Tolerance of the pipeline's bound check: the base tolerance plus the
/// optimizer's default accuracy.
pub const PIPELINE_BOUND_TOL: f64 = 1e-6;

#[derive(Debug, Clone)]
pub struct PipelineConfig {
    pub cut: usize,
    pub fit: FitConfig,
    pub bound_tol: f64,
}

impl PipelineConfig {
    pub fn new(cut: usize) -> Self {
        Self {
            cut,
            fit: FitConfig::default(),
            bound_tol: PIPELINE_BOUND_TOL,
        }
    }
}

/// Everything measured on one `(model, cut)` run.
#[derive(Debug, Clone)]
pub struct PipelineReport {
    pub model: LatticeModel,
    pub cut: usize,
    pub ground_energy: f64,
    pub gap: f64,
    pub gap_warning: bool,
    pub reduced: ReducedState,
    /// Unlabeled, descending probabilities.
    pub spectrum: EntanglementSpectrum,
    pub orbitals: NaturalOrbitalBasis,
    /// Violation measured with natural-orbital number operators.
    pub direct: WickReport,
    pub labeled: std::result::Result<EntanglementSpectrum, Error>,
    /// Violation of the labeled spectrum by enumeration.
    pub labeled_w_max: Option<f64>,
    /// Largest `|eps_ij|` of the labeled spectrum.
    pub max_pair_energy: Option<f64>,
    pub fit: FreeFitResult,
    /// `direct.w_max` against `6 fit.d_f`.
    pub bound: BoundCheck,
    /// Violation in the mode labeling induced by the fitted free state.
    pub fitted_basis_w_max: f64,
    pub full_wick_residual: f64,
    pub number_residual: f64,
    pub anomalous_max: f64,
}

impl PipelineReport {
    pub fn labeling_ok(&self) -> bool {
        self.labeled.is_ok()
    }

    pub fn clamped_levels(&self) -> usize {
        self.spectrum.levels().iter().filter(|l| l.clamped).count()
    }
}

pub fn run_pipeline(model: &LatticeModel, cfg: &PipelineConfig) -> Result<PipelineReport> {
    let h = build_hamiltonian(model)?;
    let g = ground_state(&h.matrix)?;
    let state = g.to_state(&h.basis)?;
    let rs = reduced_density_matrix(&state, cfg.cut)?;
    let spectrum = entanglement_spectrum(&rs);
    let orbitals = natural_orbitals(&rs);
    let direct = direct_wick_violation(&rs, &orbitals)?;
    let labeled = label_spectrum(&rs, &orbitals);
    if let Err(e) = &labeled {
        log::info!("labeling failed: {e}");
    }

    let (labeled_w_max, max_pair_energy) = match &labeled {
        Ok(s) => {
            let m = spectrum_to_mode_energies(s)?;
            let w = report(&m, WickMethod::Exact)?.w_max;
            let pair = m.pairs().map(|(_, e)| e.abs()).fold(0.0, f64::max);
            (Some(w), Some(pair))
        }
        Err(_) => (None, None),
    };

    let fit = fit_free_spectrum(labeled.as_ref().unwrap_or(&spectrum), cfg.cut, &cfg.fit)?;
    let bound = check_bound(direct.w_max, fit.d_f, cfg.bound_tol)?;
    let paired = label_by_free_fit(&spectrum, &fit.eps_star)?;
    let fitted_basis_w_max = report(&spectrum_to_mode_energies(&paired)?, WickMethod::Exact)?.w_max;

    Ok(PipelineReport {
        model: *model,
        cut: cfg.cut,
        ground_energy: g.energy,
        gap: g.gap,
        gap_warning: g.degenerate,
        full_wick_residual: max_full_wick_residual(&rs)?,
        number_residual: rs.number_conservation_residual(),
        anomalous_max: max_anomalous_correlator(&rs, &orbitals)?,
        reduced: rs,
        spectrum,
        orbitals,
        direct,
        labeled,
        labeled_w_max,
        max_pair_energy,
        fit,
        bound,
        fitted_basis_w_max,
    })
}

//! Reduced density matrix of a contiguous left block and its spectrum.
//!
//! With the site ordering of [`super::fock`], a configuration splits as
//! `c = a | b << l` and the amplitude is `Psi[a, b]` with no string factor,
//! so `rho_A = Psi Psi^T`. Eigenpairs come from a double-double Jacobi SVD
//! of each particle-number block of `Psi`, which keeps the small
//! eigenvalues accurate to a relative, not absolute, tolerance.

use std::collections::{BTreeMap, BTreeSet};

use nalgebra::DMatrix;
use twofloat::TwoFloat;

use super::fock::{Config, FockState};
use super::precision::{dd, jacobi_gram, to_f64};
use crate::error::{Error, Result};
use crate::spectra::{EntanglementSpectrum, Level};

/// Eigenvalues below this are clamped before taking `-ln`.
pub const EIGEN_FLOOR: f64 = 1e-30;

/// Largest block for which the `2^l` dense operators are formed.
pub const MAX_CUT: usize = 10;

#[derive(Debug, Clone)]
pub struct ReducedState {
    pub cut: usize,
    /// Dense `rho_A` in the occupation basis of the block, indexed by bitmask.
    pub rho_a: DMatrix<f64>,
    /// Descending.
    pub eigvals: Vec<f64>,
    /// Column `k` belongs to `eigvals[k]`.
    pub eigvecs: DMatrix<f64>,
    /// Particle number in the block of each eigenvector.
    pub sectors: Vec<usize>,
}

impl ReducedState {
    pub fn dim(&self) -> usize {
        self.eigvals.len()
    }

    pub fn trace(&self) -> f64 {
        self.rho_a.trace()
    }

    pub fn purity(&self) -> f64 {
        self.eigvals.iter().map(|l| l * l).sum()
    }

    /// `max |[N_A, rho_A]|`, zero for a number-conserving state.
    pub fn number_conservation_residual(&self) -> f64 {
        let n = self.rho_a.nrows();
        let mut worst = 0.0f64;
        for a in 0..n {
            for b in 0..n {
                let dn = a.count_ones() as f64 - b.count_ones() as f64;
                worst = worst.max((dn * self.rho_a[(a, b)]).abs());
            }
        }
        worst
    }

    /// Expected particle number in the block.
    pub fn particle_number(&self) -> f64 {
        (0..self.rho_a.nrows())
            .map(|a| a.count_ones() as f64 * self.rho_a[(a, a)])
            .sum()
    }
}

/// Flips the sign so the largest-magnitude component is positive.
pub(crate) fn fix_column_phase(m: &mut DMatrix<f64>, k: usize) {
    let mut best = 0;
    for r in 0..m.nrows() {
        if m[(r, k)].abs() > m[(best, k)].abs() {
            best = r;
        }
    }
    if m[(best, k)] < 0.0 {
        m.column_mut(k).neg_mut();
    }
}

pub fn reduced_density_matrix(state: &FockState, cut: usize) -> Result<ReducedState> {
    let l = state.n_sites();
    if cut == 0 || cut >= l {
        return Err(Error::InvalidArgument(format!(
            "cut must satisfy 1 <= cut <= {}, got {cut}",
            l - 1
        )));
    }
    if cut > MAX_CUT {
        return Err(Error::Capacity {
            what: "cut",
            got: cut,
            limit: MAX_CUT,
        });
    }
    let dim = 1usize << cut;
    let mask: Config = (1 << cut) - 1;

    // Amplitudes grouped by B configuration, in ascending order.
    let mut by_b: BTreeMap<Config, Vec<(usize, TwoFloat)>> = BTreeMap::new();
    for (&c, &amp) in state.configs().iter().zip(state.amplitudes()) {
        by_b.entry(c >> cut).or_default().push(((c & mask) as usize, amp));
    }

    let mut rho_a = DMatrix::zeros(dim, dim);
    for entries in by_b.values() {
        for &(a, x) in entries {
            for &(a2, y) in entries {
                rho_a[(a, a2)] += to_f64(x * y);
            }
        }
    }

    // (lambda, sector, local index, vector)
    let mut pairs: Vec<(f64, usize, usize, Vec<f64>)> = Vec::with_capacity(dim);
    for n in 0..=cut {
        let a_configs: Vec<usize> = (0..dim).filter(|a| a.count_ones() as usize == n).collect();
        let col_of: BTreeMap<usize, usize> = a_configs.iter().enumerate().map(|(i, &a)| (a, i)).collect();
        let rows: BTreeSet<Config> = state
            .configs()
            .iter()
            .filter(|&&c| (c & mask).count_ones() as usize == n)
            .map(|&c| c >> cut)
            .collect();
        let row_of: BTreeMap<Config, usize> = rows.iter().enumerate().map(|(i, &b)| (b, i)).collect();
        let mut columns = vec![vec![dd(0.0); rows.len()]; a_configs.len()];
        for (&c, &amp) in state.configs().iter().zip(state.amplitudes()) {
            if let Some(&i) = col_of.get(&((c & mask) as usize)) {
                columns[i][row_of[&(c >> cut)]] = amp;
            }
        }
        let (sigma2, v) = jacobi_gram(columns);
        for (k, s2) in sigma2.iter().enumerate() {
            let mut vec = vec![0.0; dim];
            for (i, &a) in a_configs.iter().enumerate() {
                vec[a] = v[(i, k)];
            }
            pairs.push((to_f64(*s2), n, k, vec));
        }
    }
    pairs.sort_by(|x, y| y.0.total_cmp(&x.0).then(x.1.cmp(&y.1)).then(x.2.cmp(&y.2)));

    let mut eigvecs = DMatrix::zeros(dim, dim);
    for (k, (_, _, _, v)) in pairs.iter().enumerate() {
        eigvecs.set_column(k, &nalgebra::DVector::from_column_slice(v));
        fix_column_phase(&mut eigvecs, k);
    }
    Ok(ReducedState {
        cut,
        rho_a,
        eigvals: pairs.iter().map(|p| p.0).collect(),
        eigvecs,
        sectors: pairs.iter().map(|p| p.1).collect(),
    })
}

/// `E_k = -ln lambda_k` with the default floor.
pub fn entanglement_spectrum(rs: &ReducedState) -> EntanglementSpectrum {
    entanglement_spectrum_with_floor(rs, EIGEN_FLOOR).expect("default floor is valid")
}

pub fn entanglement_spectrum_with_floor(rs: &ReducedState, floor: f64) -> Result<EntanglementSpectrum> {
    if !(floor > 0.0 && floor.is_finite()) {
        return Err(Error::InvalidArgument(format!("floor must be positive, got {floor}")));
    }
    EntanglementSpectrum::from_levels(rs.eigvals.iter().map(|&l| floored_level(l, floor, None)).collect())
}

pub(crate) fn floored_level(lambda: f64, floor: f64, label: Option<crate::spectra::OccupationPattern>) -> Level {
    let p = lambda.max(floor);
    Level {
        energy: -p.ln(),
        probability: p,
        label,
        clamped: lambda < floor,
    }
}

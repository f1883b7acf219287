//! Lowest eigenpair of a dense symmetric Hamiltonian, polished to
//! double-double accuracy.

use nalgebra::{DMatrix, DVector};
use twofloat::TwoFloat;

use super::fock::{FockState, SectorBasis};
use super::hamiltonian::check_hermitian;
use super::precision::{dd, dot, to_f64};
use crate::error::{Error, Result};

/// Gaps below this are treated as a degenerate ground state.
pub const DEGENERACY_GAP: f64 = 1e-10;

const REFINEMENT_STEPS: usize = 3;
const NEGLIGIBLE_AMPLITUDE: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct GroundState {
    pub energy: f64,
    /// `E_1 - E_0`; infinite for a one-dimensional sector.
    pub gap: f64,
    pub degenerate: bool,
    pub amplitudes: Vec<TwoFloat>,
}

impl GroundState {
    pub fn vector(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|a| a.hi()).collect()
    }

    pub fn to_state(&self, basis: &SectorBasis) -> Result<FockState> {
        if basis.len() != self.amplitudes.len() {
            return Err(Error::InvalidArgument(format!(
                "basis has {} states but the vector has {}",
                basis.len(),
                self.amplitudes.len()
            )));
        }
        FockState::new(basis.n_sites(), basis.configs().to_vec(), self.amplitudes.clone())
    }
}

/// Flips the sign so the first non-negligible amplitude is positive.
fn fix_phase(v: &mut [TwoFloat]) {
    let scale = v.iter().map(|x| x.hi().abs()).fold(0.0, f64::max);
    if let Some(first) = v.iter().find(|x| x.hi().abs() > NEGLIGIBLE_AMPLITUDE * scale) {
        if first.hi() < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
    }
}

fn normalize(v: &mut [TwoFloat]) {
    let norm = dot(v, v).sqrt();
    v.iter_mut().for_each(|x| *x /= norm);
}

fn apply_dd(h: &DMatrix<f64>, v: &[TwoFloat]) -> Vec<TwoFloat> {
    (0..h.nrows())
        .map(|r| {
            (0..h.ncols())
                .filter(|&c| h[(r, c)] != 0.0)
                .fold(dd(0.0), |acc, c| acc + v[c] * h[(r, c)])
        })
        .collect()
}

/// Ground state with a deterministic sign.
///
/// A non-degenerate eigenvector is refined by a few residual-correction
/// steps: the residual `(H - E) psi` is formed in double-double and the
/// correction is solved in the complement of the ground state using the
/// double-precision eigenbasis. For a degenerate ground state the vector is
/// the projection of the first basis state with a significant overlap onto
/// the degenerate subspace, and a warning is logged.
pub fn ground_state(h: &DMatrix<f64>) -> Result<GroundState> {
    check_hermitian(h)?;
    let dim = h.nrows();
    if dim == 0 {
        return Err(Error::InvalidArgument("empty Hamiltonian".into()));
    }
    let eig = h.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let e0 = eig.eigenvalues[order[0]];
    let gap = order
        .get(1)
        .map_or(f64::INFINITY, |&k| eig.eigenvalues[k] - e0);

    if gap < DEGENERACY_GAP {
        let subspace: Vec<usize> = order
            .iter()
            .copied()
            .take_while(|&k| eig.eigenvalues[k] - e0 < DEGENERACY_GAP)
            .collect();
        log::warn!(
            "ground state is {}-fold degenerate (gap {gap:.3e}); using a canonical vector",
            subspace.len()
        );
        let vectors: Vec<_> = subspace.iter().map(|&k| eig.eigenvectors.column(k)).collect();
        let mut psi = vec![0.0; dim];
        for b in 0..dim {
            psi.iter_mut().for_each(|x| *x = 0.0);
            for v in &vectors {
                let overlap = v[b];
                for (x, y) in psi.iter_mut().zip(v.iter()) {
                    *x += overlap * y;
                }
            }
            if psi.iter().map(|x| x * x).sum::<f64>() > 1e-6 {
                break;
            }
        }
        let mut amplitudes: Vec<TwoFloat> = psi.into_iter().map(dd).collect();
        normalize(&mut amplitudes);
        fix_phase(&mut amplitudes);
        return Ok(GroundState {
            energy: e0,
            gap,
            degenerate: true,
            amplitudes,
        });
    }

    let mut psi: Vec<TwoFloat> = eig.eigenvectors.column(order[0]).iter().copied().map(dd).collect();
    for _ in 0..REFINEMENT_STEPS {
        let hpsi = apply_dd(h, &psi);
        let energy = dot(&psi, &hpsi) / dot(&psi, &psi);
        let residual = DVector::from_iterator(
            dim,
            hpsi.iter().zip(&psi).map(|(&w, &x)| to_f64(w - energy * x)),
        );
        let mut coeffs = eig.eigenvectors.tr_mul(&residual);
        for (k, c) in coeffs.iter_mut().enumerate() {
            *c = if k == order[0] { 0.0 } else { -*c / (eig.eigenvalues[k] - e0) };
        }
        let delta = &eig.eigenvectors * coeffs;
        for (x, d) in psi.iter_mut().zip(delta.iter()) {
            *x += *d;
        }
        normalize(&mut psi);
    }
    fix_phase(&mut psi);
    let energy = dot(&psi, &apply_dd(h, &psi));
    Ok(GroundState {
        energy: to_f64(energy),
        gap,
        degenerate: false,
        amplitudes: psi,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::edengine::hamiltonian::{build_hamiltonian, Boundary, LatticeModel};

    #[test]
    fn two_site_symmetric_well() {
        let m = LatticeModel {
            length: 2,
            filling: 1,
            ..LatticeModel::half_filled(2, 0.0)
        };
        let h = build_hamiltonian(&m).unwrap();
        let g = ground_state(&h.matrix).unwrap();
        assert!((g.energy + 1.0).abs() < 1e-15);
        let v = g.vector();
        let r = std::f64::consts::FRAC_1_SQRT_2;
        assert!((v[0] - r).abs() < 1e-15 && (v[1] - r).abs() < 1e-15);
        assert!(!g.degenerate);
    }

    #[test]
    fn refined_residual_is_below_double_precision() {
        let m = LatticeModel::half_filled(10, 1.3);
        let h = build_hamiltonian(&m).unwrap();
        let g = ground_state(&h.matrix).unwrap();
        let hpsi = apply_dd(&h.matrix, &g.amplitudes);
        let e = dot(&g.amplitudes, &hpsi);
        let r = hpsi
            .iter()
            .zip(&g.amplitudes)
            .map(|(&w, &x)| to_f64(w - e * x).abs())
            .fold(0.0, f64::max);
        assert!(r < 1e-25, "residual {r}");
        // Variational sanity.
        assert!((0..h.matrix.nrows()).all(|k| g.energy <= h.matrix[(k, k)]));
        let first = g.amplitudes.iter().find(|x| x.hi() != 0.0).unwrap();
        assert!(first.hi() > 0.0);
    }

    #[test]
    fn degenerate_ground_state_is_canonical() {
        let h = DMatrix::from_row_slice(3, 3, &[-1.0, 0.0, 0.0, 0.0, -1.0, 0.0, 0.0, 0.0, 2.0]);
        let g = ground_state(&h).unwrap();
        assert!(g.degenerate);
        assert_eq!(g.vector(), vec![1.0, 0.0, 0.0]);
        let g2 = ground_state(&h).unwrap();
        assert_eq!(g.amplitudes, g2.amplitudes);
    }

    #[test]
    fn open_shell_ring() {
        // Two particles on a four-site ring: k = 0 and one of k = +-pi/2.
        let m = LatticeModel {
            length: 4,
            filling: 2,
            boundary: Boundary::Periodic,
            ..LatticeModel::half_filled(4, 0.0)
        };
        let h = build_hamiltonian(&m).unwrap();
        let g = ground_state(&h.matrix).unwrap();
        assert!((g.energy + 2.0).abs() < 1e-12);
        assert!(g.degenerate);
        assert!(g.gap < DEGENERACY_GAP);
    }

    #[test]
    fn rejects_non_hermitian() {
        let h = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 2.0, 0.0]);
        assert!(matches!(ground_state(&h), Err(Error::NotHermitian(_))));
    }
}

//! Natural orbitals of a reduced state and the correlators measured in them.

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};

use super::fock::{hop, Config, Ladder};
use super::reduced::{fix_column_phase, floored_level, ReducedState, EIGEN_FLOOR, MAX_CUT};
use crate::error::{Error, Result};
use crate::spectra::{EntanglementSpectrum, OccupationPattern};
use crate::wick::{WickMethod, WickReport};

/// Occupations closer than this are flagged as degenerate.
pub const DEGENERATE_OCCUPATION: f64 = 1e-10;

/// Labels are rejected when an occupation is this far from an integer.
pub const LABEL_MARGIN: f64 = 0.25;

const CLUSTER_RELATIVE_GAP: f64 = 1e-8;
const CLUSTER_TINY: f64 = 1e-28;

#[derive(Debug, Clone)]
pub struct NaturalOrbitalBasis {
    /// `C_ij = Tr(rho_A c†_i c_j)`.
    pub corr: DMatrix<f64>,
    /// Descending.
    pub occupations: Vec<f64>,
    /// Column `k` is `phi_k`.
    pub orbitals: DMatrix<f64>,
    pub degenerate: Vec<bool>,
}

impl NaturalOrbitalBasis {
    pub fn n_modes(&self) -> usize {
        self.occupations.len()
    }

    /// `<a†_k a_l>`; diagonal with entries `nu_k` by construction.
    pub fn mode_correlation(&self) -> DMatrix<f64> {
        self.orbitals.transpose() * &self.corr * &self.orbitals
    }

    fn quadratic(&self, m: &DMatrix<f64>, k: usize) -> f64 {
        let phi = self.orbitals.column(k);
        (phi.transpose() * m * phi)[(0, 0)]
    }
}

fn check_cut(rs: &ReducedState) -> Result<()> {
    if rs.cut > MAX_CUT {
        return Err(Error::Capacity {
            what: "cut",
            got: rs.cut,
            limit: MAX_CUT,
        });
    }
    Ok(())
}

/// `Tr(rho O)` over the block's Fock space.
fn expect(rs: &ReducedState, ops: &[Ladder]) -> f64 {
    super::fock::expectation(&rs.rho_a, ops)
}

pub fn one_body_correlation(rs: &ReducedState) -> DMatrix<f64> {
    let l = rs.cut;
    DMatrix::from_fn(l, l, |i, j| {
        (0..rs.rho_a.nrows())
            .filter_map(|b| hop(b as Config, i, j).map(|(a, s)| s * rs.rho_a[(b, a as usize)]))
            .sum()
    })
}

pub fn natural_orbitals(rs: &ReducedState) -> NaturalOrbitalBasis {
    let corr = one_body_correlation(rs);
    let l = corr.nrows();
    let eig = corr.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..l).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let occupations: Vec<f64> = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let mut orbitals = DMatrix::zeros(l, l);
    for (k, &src) in order.iter().enumerate() {
        orbitals.set_column(k, &eig.eigenvectors.column(src));
        fix_column_phase(&mut orbitals, k);
    }
    let degenerate = (0..l)
        .map(|k| {
            (k > 0 && (occupations[k - 1] - occupations[k]).abs() < DEGENERATE_OCCUPATION)
                || (k + 1 < l && (occupations[k] - occupations[k + 1]).abs() < DEGENERATE_OCCUPATION)
        })
        .collect();
    NaturalOrbitalBasis {
        corr,
        occupations,
        orbitals,
        degenerate,
    }
}

/// `Gamma[i][j][p][q] = Tr(rho c†_i c_j c†_p c_q)`, flattened.
fn two_body_correlation(rs: &ReducedState) -> Vec<f64> {
    let l = rs.cut;
    let mut gamma = vec![0.0; l * l * l * l];
    for i in 0..l {
        for j in 0..l {
            for p in 0..l {
                for q in 0..l {
                    gamma[((i * l + j) * l + p) * l + q] = expect(
                        rs,
                        &[Ladder::Create(i), Ladder::Annihilate(j), Ladder::Create(p), Ladder::Annihilate(q)],
                    );
                }
            }
        }
    }
    gamma
}

/// Pairwise `W_ab = |<n_a n_b> - <n_a><n_b>|` with `n_a = a†_a a_a` built
/// from the natural orbitals.
pub fn direct_wick_violation(rs: &ReducedState, basis: &NaturalOrbitalBasis) -> Result<WickReport> {
    check_cut(rs)?;
    let l = rs.cut;
    if basis.n_modes() != l {
        return Err(Error::InvalidArgument(format!(
            "basis has {} modes but the block has {l} sites",
            basis.n_modes()
        )));
    }
    if l < 2 {
        return Ok(WickReport::from_pairs(l, WickMethod::DirectCorrelator, []));
    }
    let gamma = two_body_correlation(rs);
    let phi = &basis.orbitals;
    let n: Vec<f64> = (0..l).map(|a| basis.quadratic(&basis.corr, a)).collect();
    let mut pairs = Vec::new();
    for a in 0..l {
        for b in a + 1..l {
            let mut nn = 0.0;
            for i in 0..l {
                for j in 0..l {
                    let wa = phi[(i, a)] * phi[(j, a)];
                    for p in 0..l {
                        for q in 0..l {
                            nn += wa * phi[(p, b)] * phi[(q, b)] * gamma[((i * l + j) * l + p) * l + q];
                        }
                    }
                }
            }
            pairs.push(((a, b), (nn - n[a] * n[b]).abs()));
        }
    }
    Ok(WickReport::from_pairs(l, WickMethod::DirectCorrelator, pairs))
}

/// `|<n_i n_j> - (<n_i><n_j> - <c†_i c†_j><c_i c_j> + <c†_i c_j><c_i c†_j>)|`
/// on sites `i`, `j` of the block.
pub fn verify_full_wick(rs: &ReducedState, i: usize, j: usize) -> Result<f64> {
    check_cut(rs)?;
    for k in [i, j] {
        if k >= rs.cut {
            return Err(Error::IndexOutOfRange { index: k, len: rs.cut });
        }
    }
    use Ladder::{Annihilate as A, Create as C};
    let nn = expect(rs, &[C(i), A(i), C(j), A(j)]);
    let ni = expect(rs, &[C(i), A(i)]);
    let nj = expect(rs, &[C(j), A(j)]);
    let cdcd = expect(rs, &[C(i), C(j)]);
    let cc = expect(rs, &[A(i), A(j)]);
    let cdc = expect(rs, &[C(i), A(j)]);
    let ccd = expect(rs, &[A(i), C(j)]);
    Ok((nn - (ni * nj - cdcd * cc + cdc * ccd)).abs())
}

/// Largest full-Wick residual over all site pairs of the block.
pub fn max_full_wick_residual(rs: &ReducedState) -> Result<f64> {
    let mut worst = 0.0f64;
    for i in 0..rs.cut {
        for j in i..rs.cut {
            worst = worst.max(verify_full_wick(rs, i, j)?);
        }
    }
    Ok(worst)
}

/// Largest `|<a_k a_l>|` in the natural-orbital basis.
pub fn max_anomalous_correlator(rs: &ReducedState, basis: &NaturalOrbitalBasis) -> Result<f64> {
    check_cut(rs)?;
    let l = rs.cut;
    let site = DMatrix::from_fn(l, l, |i, j| expect(rs, &[Ladder::Annihilate(i), Ladder::Annihilate(j)]));
    let modes = basis.orbitals.transpose() * site * &basis.orbitals;
    Ok(modes.amax())
}

/// `<u| c†_i c_j |v>` for all `i`, `j`.
fn transition_one_body(u: &[f64], v: &[f64], l: usize) -> DMatrix<f64> {
    let mut d = DMatrix::zeros(l, l);
    for (b, &vb) in v.iter().enumerate() {
        if vb == 0.0 {
            continue;
        }
        for i in 0..l {
            for j in 0..l {
                if let Some((a, s)) = hop(b as Config, i, j) {
                    d[(i, j)] += s * u[a as usize] * vb;
                }
            }
        }
    }
    d
}

/// Attaches natural-orbital occupation labels to the eigenvectors of
/// `rho_A`.
///
/// Each eigenvector's orbital occupations must round to bits within
/// [`LABEL_MARGIN`], the bit count must match the eigenvector's particle
/// number, and labels must be distinct. Degenerate eigenvalues within a
/// particle-number block leave the eigenvectors arbitrary, so each such
/// cluster is first rotated to diagonalize `sum_m 2^m n_m`, whose
/// eigenvectors are the occupation-number states when they exist.
pub fn label_spectrum(rs: &ReducedState, basis: &NaturalOrbitalBasis) -> Result<EntanglementSpectrum> {
    check_cut(rs)?;
    let l = rs.cut;
    let dim = rs.dim();
    let mut vecs: Vec<Vec<f64>> = (0..dim).map(|k| rs.eigvecs.column(k).iter().copied().collect()).collect();
    let mut lambdas = rs.eigvals.clone();

    let mode_matrix = |d: &DMatrix<f64>, m: usize| basis.quadratic(d, m);
    for cluster in degenerate_clusters(rs) {
        if cluster.len() < 2 {
            continue;
        }
        let k = cluster.len();
        let g = DMatrix::from_fn(k, k, |x, y| {
            let d = transition_one_body(&vecs[cluster[x]], &vecs[cluster[y]], l);
            (0..l).map(|m| (1u64 << m) as f64 * mode_matrix(&d, m)).sum()
        });
        let g = (&g + g.transpose()) * 0.5;
        let eig = g.symmetric_eigen();
        let mut order: Vec<usize> = (0..k).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let old: Vec<Vec<f64>> = cluster.iter().map(|&c| vecs[c].clone()).collect();
        let old_lambda: Vec<f64> = cluster.iter().map(|&c| lambdas[c]).collect();
        for (slot, &src) in order.iter().enumerate() {
            let r = eig.eigenvectors.column(src);
            let mut v = vec![0.0; dim];
            for (x, ov) in old.iter().enumerate() {
                for (dst, o) in v.iter_mut().zip(ov) {
                    *dst += r[x] * o;
                }
            }
            let mut col = DMatrix::from_column_slice(dim, 1, &v);
            fix_column_phase(&mut col, 0);
            vecs[cluster[slot]] = col.iter().copied().collect();
            lambdas[cluster[slot]] = (0..k).map(|x| r[x] * r[x] * old_lambda[x]).sum();
        }
    }

    let mut labels: HashMap<u32, usize> = HashMap::new();
    let mut levels = Vec::with_capacity(dim);
    for (k, v) in vecs.iter().enumerate() {
        let d = transition_one_body(v, v, l);
        let mut bits = 0u32;
        let mut worst = (0usize, 0.0f64, 0.0f64);
        for m in 0..l {
            let o = mode_matrix(&d, m);
            let rounded = o.round();
            let margin = (o - rounded).abs();
            if margin >= LABEL_MARGIN || !(rounded == 0.0 || rounded == 1.0) {
                return Err(Error::AmbiguousLabel {
                    level: k,
                    mode: m,
                    occupation: o,
                    margin,
                });
            }
            if margin > worst.2 {
                worst = (m, o, margin);
            }
            if rounded == 1.0 {
                bits |= 1 << m;
            }
        }
        if bits.count_ones() as usize != rs.sectors[k] {
            return Err(Error::AmbiguousLabel {
                level: k,
                mode: worst.0,
                occupation: worst.1,
                margin: worst.2,
            });
        }
        let pattern = OccupationPattern::new(bits, l)?;
        if let Some(&first) = labels.get(&bits) {
            return Err(Error::LabelCollision {
                first,
                second: k,
                label: pattern.to_string(),
            });
        }
        labels.insert(bits, k);
        levels.push(floored_level(lambdas[k], EIGEN_FLOOR, Some(pattern)));
    }
    EntanglementSpectrum::from_levels(levels)
}

/// Runs of (numerically) equal eigenvalues within each particle-number block.
fn degenerate_clusters(rs: &ReducedState) -> Vec<Vec<usize>> {
    let mut clusters = Vec::new();
    for n in 0..=rs.cut {
        let idx: Vec<usize> = (0..rs.dim()).filter(|&k| rs.sectors[k] == n).collect();
        let mut current: Vec<usize> = Vec::new();
        for &k in &idx {
            if let Some(&prev) = current.last() {
                let (a, b) = (rs.eigvals[prev], rs.eigvals[k]);
                let close = (a - b).abs() <= CLUSTER_RELATIVE_GAP * a.abs().max(b.abs())
                    || (a.abs() < CLUSTER_TINY && b.abs() < CLUSTER_TINY);
                if !close {
                    clusters.push(std::mem::take(&mut current));
                }
            }
            current.push(k);
        }
        if !current.is_empty() {
            clusters.push(current);
        }
    }
    clusters
}

/// `<n_a>` for each natural orbital.
pub fn mode_occupations(basis: &NaturalOrbitalBasis) -> DVector<f64> {
    DVector::from_iterator(basis.n_modes(), (0..basis.n_modes()).map(|a| basis.quadratic(&basis.corr, a)))
}

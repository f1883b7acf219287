//! Spinless t–V chain in a fixed particle-number sector:
//! `H = -t sum (c†_s c_{s+1} + h.c.) + V sum n_s n_{s+1} + mu sum n_s`.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;

use super::fock::{hop, SectorBasis, MAX_SITES};
use crate::error::{ensure_finite, Error, Result};

/// Largest sector dimension for which a dense matrix is built.
pub const MAX_SECTOR_DIM: usize = 100_000;

const HERMITIAN_TOL: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Boundary {
    Open,
    Periodic,
}

impl fmt::Display for Boundary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Boundary::Open => "open",
            Boundary::Periodic => "periodic",
        })
    }
}

impl FromStr for Boundary {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "open" | "obc" => Ok(Boundary::Open),
            "periodic" | "pbc" => Ok(Boundary::Periodic),
            other => Err(Error::InvalidArgument(format!("unknown boundary '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LatticeModel {
    pub length: usize,
    pub hopping: f64,
    pub interaction: f64,
    pub chemical_potential: f64,
    pub boundary: Boundary,
    pub filling: usize,
}

impl LatticeModel {
    /// Half-filled open chain with `t = 1`, `mu = 0`.
    pub fn half_filled(length: usize, interaction: f64) -> Self {
        Self {
            length,
            hopping: 1.0,
            interaction,
            chemical_potential: 0.0,
            boundary: Boundary::Open,
            filling: length / 2,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.length == 0 || self.length > MAX_SITES {
            return Err(Error::Capacity {
                what: "sites",
                got: self.length,
                limit: MAX_SITES,
            });
        }
        if self.filling > self.length {
            return Err(Error::InvalidArgument(format!(
                "filling {} exceeds length {}",
                self.filling, self.length
            )));
        }
        ensure_finite("t", self.hopping)?;
        ensure_finite("V", self.interaction)?;
        ensure_finite("mu", self.chemical_potential)?;
        Ok(())
    }

    /// Nearest-neighbour bonds `(s, s')` with `s < s'`. A periodic chain of
    /// two sites has a single bond.
    pub fn bonds(&self) -> Vec<(usize, usize)> {
        let l = self.length;
        let mut bonds: Vec<_> = (0..l.saturating_sub(1)).map(|s| (s, s + 1)).collect();
        if self.boundary == Boundary::Periodic && l > 2 {
            bonds.push((0, l - 1));
        }
        bonds
    }
}

/// Dense Hamiltonian of one particle-number sector together with its basis.
#[derive(Debug, Clone)]
pub struct SectorHamiltonian {
    pub basis: SectorBasis,
    pub matrix: DMatrix<f64>,
}

pub(crate) fn binomial(n: usize, k: usize) -> usize {
    let k = k.min(n - k);
    (0..k).fold(1usize, |acc, i| acc * (n - i) / (i + 1))
}

pub fn build_hamiltonian(model: &LatticeModel) -> Result<SectorHamiltonian> {
    model.validate()?;
    let dim = binomial(model.length, model.filling);
    if dim > MAX_SECTOR_DIM {
        return Err(Error::Capacity {
            what: "sector dimension",
            got: dim,
            limit: MAX_SECTOR_DIM,
        });
    }
    let basis = SectorBasis::new(model.length, model.filling)?;
    let bonds = model.bonds();
    let mut h = DMatrix::zeros(dim, dim);
    for (col, &c) in basis.configs().iter().enumerate() {
        let occupied_bonds = bonds.iter().filter(|(a, b)| c >> a & c >> b & 1 == 1).count();
        h[(col, col)] = model.interaction * occupied_bonds as f64
            + model.chemical_potential * c.count_ones() as f64;
        for &(a, b) in &bonds {
            for (i, j) in [(a, b), (b, a)] {
                if let Some((d, sign)) = hop(c, i, j) {
                    let row = basis.index_of(d).expect("hopping conserves particle number");
                    h[(row, col)] -= model.hopping * sign;
                }
            }
        }
    }
    check_hermitian(&h)?;
    Ok(SectorHamiltonian { basis, matrix: h })
}

pub(crate) fn check_hermitian(h: &DMatrix<f64>) -> Result<()> {
    if h.nrows() != h.ncols() {
        return Err(Error::InvalidArgument(format!(
            "matrix is {}x{}, not square",
            h.nrows(),
            h.ncols()
        )));
    }
    let asym = (&h.transpose() - h).amax();
    if asym > HERMITIAN_TOL * h.amax().max(1.0) {
        return Err(Error::NotHermitian(asym));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn model(length: usize, filling: usize, v: f64, boundary: Boundary) -> LatticeModel {
        LatticeModel {
            length,
            hopping: 1.0,
            interaction: v,
            chemical_potential: 0.0,
            boundary,
            filling,
        }
    }

    fn sorted_eigenvalues(h: &DMatrix<f64>) -> Vec<f64> {
        let mut e: Vec<f64> = h.clone().symmetric_eigenvalues().iter().copied().collect();
        e.sort_by(f64::total_cmp);
        e
    }

    #[test]
    fn two_site_hopping() {
        let h = build_hamiltonian(&model(2, 1, 0.0, Boundary::Open)).unwrap();
        let e = sorted_eigenvalues(&h.matrix);
        assert_relative_eq!(e[0], -1.0, epsilon = 1e-14);
        assert_relative_eq!(e[1], 1.0, epsilon = 1e-14);
        // A two-site ring does not double the bond.
        let p = build_hamiltonian(&model(2, 1, 0.0, Boundary::Periodic)).unwrap();
        assert_eq!(p.matrix, h.matrix);
    }

    #[test]
    fn full_band() {
        for t in [0.3, 1.0, -2.0] {
            let m = LatticeModel {
                hopping: t,
                chemical_potential: 0.7,
                ..model(2, 2, 1.5, Boundary::Open)
            };
            let h = build_hamiltonian(&m).unwrap();
            assert_eq!(h.matrix.nrows(), 1);
            assert_relative_eq!(h.matrix[(0, 0)], 1.5 + 2.0 * 0.7, epsilon = 1e-15);
        }
    }

    #[test]
    fn free_chain_matches_single_particle_levels() {
        // Open chain of four sites: eps_k = -2 cos(k pi / 5).
        let h = build_hamiltonian(&model(4, 2, 0.0, Boundary::Open)).unwrap();
        let e = sorted_eigenvalues(&h.matrix);
        let mut eps: Vec<f64> = (1..=4).map(|k| -2.0 * (k as f64 * std::f64::consts::PI / 5.0).cos()).collect();
        eps.sort_by(f64::total_cmp);
        assert_relative_eq!(e[0], eps[0] + eps[1], epsilon = 1e-12);
        assert_relative_eq!(e[0], -(1.0 + 5f64.sqrt()) / 2.0 - (5f64.sqrt() - 1.0) / 2.0, epsilon = 1e-12);
    }

    #[test]
    fn periodic_ring_levels() {
        // The wrap bond's string sign makes the fermionic ring translation
        // invariant: k = 2 pi n / L for every filling.
        let l = 6;
        for m in 1..=5 {
            let h = build_hamiltonian(&model(l, m, 0.0, Boundary::Periodic)).unwrap();
            let e = sorted_eigenvalues(&h.matrix);
            let mut eps: Vec<f64> = (0..l)
                .map(|n| -2.0 * (2.0 * std::f64::consts::PI * n as f64 / l as f64).cos())
                .collect();
            eps.sort_by(f64::total_cmp);
            assert_relative_eq!(e[0], eps[..m].iter().sum::<f64>(), epsilon = 1e-12);
        }
    }

    #[test]
    fn hermitian_and_diagonal_interaction() {
        let m = model(6, 3, 2.0, Boundary::Periodic);
        let h = build_hamiltonian(&m).unwrap();
        assert_eq!(h.matrix, h.matrix.transpose());
        let k = h.basis.index_of(0b010101).unwrap();
        assert_eq!(h.matrix[(k, k)], 0.0);
        let k = h.basis.index_of(0b000111).unwrap();
        assert_eq!(h.matrix[(k, k)], 4.0);
        // 0 and 5 are neighbours on the ring.
        let k = h.basis.index_of(0b100011).unwrap();
        assert_eq!(h.matrix[(k, k)], 4.0);
    }

    #[test]
    fn rejects_bad_models() {
        assert!(matches!(build_hamiltonian(&model(15, 7, 0.0, Boundary::Open)), Err(Error::Capacity { .. })));
        assert!(build_hamiltonian(&model(4, 5, 0.0, Boundary::Open)).is_err());
        assert!(build_hamiltonian(&model(4, 2, f64::NAN, Boundary::Open)).is_err());
        let bad = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.5, 0.0]);
        assert!(matches!(check_hermitian(&bad), Err(Error::NotHermitian(_))));
        assert_eq!(binomial(14, 7), 3432);
        assert_eq!("PBC".parse::<Boundary>().unwrap(), Boundary::Periodic);
    }
}

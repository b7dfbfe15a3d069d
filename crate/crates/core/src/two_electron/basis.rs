//! Orthonormal one-electron basis built from molecular-ion states and
//! mean-field orbitals.

use serde::{Deserialize, Serialize};

use crate::eigen::DavidsonOptions;
use crate::error::{Error, Result};
use crate::lattice::{ChemistryParams, LatticeSpec};
use crate::linalg::{dot, sym_eigen, SymMatrix};
use crate::single_particle::{lowest_eigenpairs, OrbitalField, Spectrum};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "source", content = "level", rename_all = "snake_case")]
pub enum OrbitalTag {
    /// `i`-th eigenstate of the one-electron two-nucleus problem.
    H2plusLevel(usize),
    /// `i`-th eigenstate of the converged mean-field operator.
    HartreeFockLevel(usize),
}

pub const DEFAULT_OVERLAP_FLOOR: f64 = 1e-8;

#[derive(Debug, Clone)]
pub struct OrbitalBasis {
    lattice: LatticeSpec,
    orbitals: Vec<Vec<f64>>,
    /// Tags of the candidates that span the basis. After symmetric
    /// orthogonalization orbital `k` is closest to candidate `k`.
    pub provenance: Vec<OrbitalTag>,
    /// Smallest eigenvalue of the retained candidates' overlap matrix.
    pub overlap_condition: f64,
    /// Candidates dropped as near-duplicates of earlier ones.
    pub dropped: Vec<OrbitalTag>,
}

impl OrbitalBasis {
    /// Symmetric orthogonalization `S^{-1/2}` of the candidates.
    ///
    /// Candidates are visited in order; one whose component outside the span
    /// of those already kept has squared norm below `floor` is dropped.
    pub fn orthonormalize(candidates: Vec<(OrbitalField, OrbitalTag)>, floor: f64) -> Result<Self> {
        let lattice = match candidates.first() {
            Some((o, _)) => *o.lattice(),
            None => return Err(Error::InvalidParams("basis needs at least 2 orbitals".into())),
        };
        let mut kept: Vec<Vec<f64>> = Vec::new();
        let mut ortho: Vec<Vec<f64>> = Vec::new();
        let mut provenance = Vec::new();
        let mut dropped = Vec::new();
        for (orb, tag) in candidates {
            if orb.lattice() != &lattice {
                return Err(Error::InvalidParams("basis orbitals live on different lattices".into()));
            }
            let v = orb.into_values();
            let mut rest = v.clone();
            for _ in 0..2 {
                for q in &ortho {
                    let c = dot(q, &rest);
                    rest.iter_mut().zip(q).for_each(|(r, qi)| *r -= c * qi);
                }
            }
            let nn = dot(&rest, &rest);
            if nn < floor {
                dropped.push(tag);
                continue;
            }
            let inv = 1.0 / nn.sqrt();
            rest.iter_mut().for_each(|r| *r *= inv);
            ortho.push(rest);
            kept.push(v);
            provenance.push(tag);
        }
        let n = kept.len();
        if n < 2 {
            return Err(Error::InvalidParams(format!(
                "basis needs at least 2 independent orbitals, got {n}"
            )));
        }
        let s = SymMatrix::from_fn(n, |i, j| dot(&kept[i], &kept[j]));
        let eig = sym_eigen(&s)?;
        let overlap_condition = eig.values[0];
        // X = U diag(lambda^{-1/2}) U^T
        let x = SymMatrix::from_fn(n, |i, j| {
            eig.values
                .iter()
                .zip(&eig.vectors)
                .map(|(l, u)| u[i] * u[j] / l.sqrt())
                .sum()
        });
        let sites = lattice.num_sites();
        let orbitals = (0..n)
            .map(|a| {
                let mut out = vec![0.0; sites];
                for (b, kb) in kept.iter().enumerate() {
                    let c = x.get(b, a);
                    out.iter_mut().zip(kb).for_each(|(o, k)| *o += c * k);
                }
                out
            })
            .collect();
        Ok(Self {
            lattice,
            orbitals,
            provenance,
            overlap_condition,
            dropped,
        })
    }

    pub fn lattice(&self) -> &LatticeSpec {
        &self.lattice
    }

    pub fn len(&self) -> usize {
        self.orbitals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.orbitals.is_empty()
    }

    pub fn orbital(&self, k: usize) -> &[f64] {
        &self.orbitals[k]
    }

    pub fn orbitals(&self) -> &[Vec<f64>] {
        &self.orbitals
    }

    /// Largest deviation of the Gram matrix from the identity.
    pub fn gram_error(&self) -> f64 {
        let n = self.len();
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in 0..=i {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((dot(&self.orbitals[i], &self.orbitals[j]) - target).abs());
            }
        }
        worst
    }
}

/// Lowest `count` states of the one-electron problem with every nucleus in
/// `params` present.
pub fn h2plus_orbitals(
    lattice: &LatticeSpec,
    params: &ChemistryParams,
    count: usize,
    opts: &DavidsonOptions,
) -> Result<Spectrum> {
    lowest_eigenpairs(lattice, params, count, opts)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn drops_duplicates_and_orthonormalizes() {
        let lat = LatticeSpec::open(3).unwrap();
        let a: Vec<f64> = (0..27).map(|i| (i as f64 * 0.3).sin() + 0.1).collect();
        let b: Vec<f64> = (0..27).map(|i| (i as f64 * 0.7).cos()).collect();
        let c: Vec<f64> = a.iter().map(|x| 2.0 * x).collect();
        let cands = vec![
            (OrbitalField::new(lat, a).unwrap(), OrbitalTag::H2plusLevel(0)),
            (OrbitalField::new(lat, b).unwrap(), OrbitalTag::H2plusLevel(1)),
            (OrbitalField::new(lat, c).unwrap(), OrbitalTag::HartreeFockLevel(0)),
        ];
        let basis = OrbitalBasis::orthonormalize(cands, DEFAULT_OVERLAP_FLOOR).unwrap();
        assert_eq!(basis.len(), 2);
        assert_eq!(basis.dropped, vec![OrbitalTag::HartreeFockLevel(0)]);
        assert!(basis.gram_error() < 1e-12);
    }
}

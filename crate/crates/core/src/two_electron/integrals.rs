//! Electron-electron integrals `h_ijrs = sum_{a,b} phi_i(a) phi_r(a) V(|a-b|) phi_j(b) phi_s(b)`.

use rayon::prelude::*;

use super::basis::OrbitalBasis;
use super::convolution::Convolver;
use crate::error::{Error, Result};
use crate::linalg::dot;

fn pair_index(i: usize, r: usize) -> usize {
    let (lo, hi) = if i <= r { (i, r) } else { (r, i) };
    hi * (hi + 1) / 2 + lo
}

/// Integrals stored once per orbit of the 8-element symmetry group
/// `i <-> r`, `j <-> s`, `(i, r) <-> (j, s)`.
#[derive(Debug, Clone, PartialEq)]
pub struct EeIntegralTensor {
    n: usize,
    values: Vec<f64>,
}

impl EeIntegralTensor {
    /// Number of canonical entries for a basis of `n` orbitals,
    /// `P (P + 1) / 2` with `P = n (n + 1) / 2`.
    pub fn canonical_len(n: usize) -> usize {
        let p = n * (n + 1) / 2;
        p * (p + 1) / 2
    }

    /// Slot holding `h_ijrs` and all of its symmetry images.
    pub fn canonical_slot(i: usize, j: usize, r: usize, s: usize) -> usize {
        pair_index(pair_index(i, r), pair_index(j, s))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize, r: usize, s: usize) -> f64 {
        self.values[Self::canonical_slot(i, j, r, s)]
    }

    pub fn canonical_values(&self) -> &[f64] {
        &self.values
    }

    /// Builds the tensor from a dense `n^4` array indexed `((i n + j) n + r) n + s`,
    /// rejecting arrays that break the symmetry by more than `tol` (absolute).
    pub fn from_full(n: usize, full: &[f64], tol: f64) -> Result<Self> {
        if full.len() != n.pow(4) {
            return Err(Error::DimensionMismatch {
                expected: n.pow(4),
                got: full.len(),
            });
        }
        let at = |i: usize, j: usize, r: usize, s: usize| full[((i * n + j) * n + r) * n + s];
        let mut values = vec![f64::NAN; Self::canonical_len(n)];
        for i in 0..n {
            for j in 0..n {
                for r in 0..n {
                    for s in 0..n {
                        let v = at(i, j, r, s);
                        let slot = &mut values[Self::canonical_slot(i, j, r, s)];
                        if slot.is_nan() {
                            *slot = v;
                        } else if (*slot - v).abs() > tol {
                            return Err(Error::InvalidParams(format!(
                                "integral tensor is not symmetric at ({i},{j},{r},{s}): {v} vs {}",
                                *slot
                            )));
                        }
                    }
                }
            }
        }
        Ok(Self { n, values })
    }

    /// Dense `n^4` copy, every entry read from its canonical slot.
    pub fn to_full(&self) -> Vec<f64> {
        let n = self.n;
        let mut out = vec![0.0; n.pow(4)];
        for i in 0..n {
            for j in 0..n {
                for r in 0..n {
                    for s in 0..n {
                        out[((i * n + j) * n + r) * n + s] = self.get(i, j, r, s);
                    }
                }
            }
        }
        out
    }
}

/// All canonical integrals of an orthonormal basis. Each pair product
/// `phi_i phi_r` is convolved once and its potential reused for every partner.
pub fn ee_integrals(basis: &OrbitalBasis, conv: &Convolver) -> Result<EeIntegralTensor> {
    let n = basis.len();
    let sites = basis.lattice().num_sites();
    if conv.side() != basis.lattice().n() {
        return Err(Error::DimensionMismatch {
            expected: basis.lattice().n(),
            got: conv.side(),
        });
    }
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|hi| (0..=hi).map(move |lo| (lo, hi))).collect();
    let products: Vec<Vec<f64>> = pairs
        .par_iter()
        .map(|&(lo, hi)| {
            let a = basis.orbital(lo);
            let b = basis.orbital(hi);
            (0..sites).map(|k| a[k] * b[k]).collect()
        })
        .collect();
    let potentials: Vec<Vec<f64>> = products
        .par_chunks(2)
        .flat_map_iter(|c| {
            let (a, b) = conv.convolve_pair(&c[0], c.get(1).map(|v| v.as_slice()));
            std::iter::once(a).chain(b)
        })
        .collect();
    let np = pairs.len();
    let values: Vec<f64> = (0..np)
        .into_par_iter()
        .flat_map_iter(|q| {
            let prods = &products;
            let pot = &potentials[q];
            (0..=q).map(move |p| dot(&prods[p], pot))
        })
        .collect();
    debug_assert_eq!(values.len(), EeIntegralTensor::canonical_len(n));
    Ok(EeIntegralTensor { n, values })
}

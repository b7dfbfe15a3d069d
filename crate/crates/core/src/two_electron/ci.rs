//! Two-electron Hamiltonian projected on symmetric products of basis orbitals.

use super::basis::OrbitalBasis;
use super::integrals::EeIntegralTensor;
use crate::eigen::LinearOperator;
use crate::error::{Error, Result};
use crate::linalg::{dot, sym_eigen, SymMatrix};
use crate::single_particle::LatticeHamiltonian;

#[derive(Debug, Clone)]
pub struct CiSolution {
    /// Lowest eigenvalue, lattice units.
    pub energy: f64,
    /// Two-electron amplitude `Psi(a, b)` in the orbital basis, row-major `n x n`.
    pub coefficients: Vec<f64>,
    /// Ground eigenvector over the symmetric pairs `(a <= b)`, ordered by `b` then `a`.
    pub vector: Vec<f64>,
}

/// One-body matrix `<phi_a|H0|phi_b>`.
pub fn one_body_matrix(basis: &OrbitalBasis, h0: &LatticeHamiltonian) -> SymMatrix {
    let n = basis.len();
    let sites = basis.lattice().num_sites();
    let applied: Vec<Vec<f64>> = basis
        .orbitals()
        .iter()
        .map(|o| {
            let mut y = vec![0.0; sites];
            h0.apply(o, &mut y);
            y
        })
        .collect();
    let mut m = SymMatrix::from_fn(n, |i, j| dot(basis.orbital(i), &applied[j]));
    for i in 0..n {
        for j in 0..i {
            let avg = 0.5 * (m.get(i, j) + m.get(j, i));
            m.set_sym(i, j, avg);
        }
    }
    m
}

/// Symmetric pairs `(a, b)` with `a <= b`, ordered by `b` then `a`.
pub fn symmetric_pairs(n: usize) -> Vec<(usize, usize)> {
    (0..n).flat_map(|b| (0..=b).map(move |a| (a, b))).collect()
}

/// Dense projected Hamiltonian on the symmetric two-electron space with the
/// repulsion scaled by `f`, and its ground state.
pub fn assemble_and_solve(
    one_body: &SymMatrix,
    tensor: &EeIntegralTensor,
    f: f64,
) -> Result<CiSolution> {
    let n = one_body.dim();
    if n < 2 {
        return Err(Error::InvalidParams(format!("basis too small: n = {n} < 2")));
    }
    if tensor.n() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: tensor.n(),
        });
    }
    if !(f >= 0.0 && f.is_finite()) {
        return Err(Error::InvalidParams(format!("repulsion scale must be >= 0, got {f}")));
    }
    let h1 = |a: usize, b: usize| one_body.get(a, b);
    // <ab|H|cd>, particle 1 a -> c, particle 2 b -> d
    let elem = |a: usize, b: usize, c: usize, d: usize| {
        let mut v = f * tensor.get(a, b, c, d);
        if b == d {
            v += h1(a, c);
        }
        if a == c {
            v += h1(b, d);
        }
        v
    };
    let pairs = symmetric_pairs(n);
    let norm = |a: usize, b: usize| if a == b { 0.5 } else { std::f64::consts::FRAC_1_SQRT_2 };
    let dim = pairs.len();
    let m = SymMatrix::from_fn(dim, |p, q| {
        let (a, b) = pairs[p];
        let (c, d) = pairs[q];
        norm(a, b)
            * norm(c, d)
            * (elem(a, b, c, d) + elem(a, b, d, c) + elem(b, a, c, d) + elem(b, a, d, c))
    });
    let eig = sym_eigen(&m)?;
    let mut vector = eig.vectors[0].clone();
    // Fix the sign so the largest component is positive.
    let big = vector
        .iter()
        .cloned()
        .fold(0.0f64, |acc, v| if v.abs() > acc.abs() { v } else { acc });
    if big < 0.0 {
        vector.iter_mut().for_each(|v| *v = -*v);
    }
    let mut coefficients = vec![0.0; n * n];
    for (&(a, b), v) in pairs.iter().zip(&vector) {
        let c = v * norm(a, b);
        coefficients[a * n + b] += c;
        coefficients[b * n + a] += c;
    }
    Ok(CiSolution {
        energy: eig.values[0],
        coefficients,
        vector,
    })
}

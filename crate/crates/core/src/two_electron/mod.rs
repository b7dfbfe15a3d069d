//! Two electrons on the lattice: mean-field and molecular-ion orbitals,
//! electron-electron integrals by FFT convolution, and configuration
//! interaction in the symmetric two-particle space.

mod basis;
mod ci;
mod convolution;
mod curve;
mod hartree_fock;
mod integrals;

pub use basis::{h2plus_orbitals, OrbitalBasis, OrbitalTag, DEFAULT_OVERLAP_FLOOR};
pub use ci::{assemble_and_solve, one_body_matrix, symmetric_pairs, CiSolution};
pub use convolution::{ee_convolution, Convolver};
pub use curve::{
    curve_minimum, molecular_curve, molecular_point, separated_atoms_energy, MolecularCurve,
    MolecularCurvePoint, MolecularOptions, PointFailure,
};
pub use hartree_fock::{hartree_fock, HartreeFockOptions, HartreeFockResult};
pub use integrals::{ee_integrals, EeIntegralTensor};

//! Hartree mean field for two electrons sharing the lowest orbital.
//! Exchange is not included.

use serde::{Deserialize, Serialize};

use super::convolution::Convolver;
use crate::eigen::DavidsonOptions;
use crate::error::{Error, Result};
use crate::lattice::ChemistryParams;
use crate::single_particle::{solve_hamiltonian, LatticeHamiltonian, Spectrum};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HartreeFockOptions {
    /// Largest allowed change of any orbital energy between sweeps (lattice units).
    pub energy_tol: f64,
    /// L2 change of the ground density between sweeps.
    pub density_tol: f64,
    pub max_sweeps: usize,
    /// Mixing factor used once oscillation is detected. Halved each time the
    /// oscillation persists, down to `min_damping`.
    pub damping: f64,
    pub min_damping: f64,
    pub davidson: DavidsonOptions,
}

impl HartreeFockOptions {
    /// Energy tolerance of `1e-9` Rydberg for the given units.
    pub fn for_params(params: &ChemistryParams) -> Self {
        Self {
            energy_tol: 1e-9 * params.rydberg(),
            density_tol: 1e-8,
            max_sweeps: 300,
            damping: 0.5,
            min_damping: 1.0 / 256.0,
            davidson: DavidsonOptions::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct HartreeFockResult {
    pub spectrum: Spectrum,
    pub sweeps: usize,
    pub damped: bool,
    /// Mixing factor in use at the last sweep (1 when undamped).
    pub mixing: f64,
    pub energy_change: f64,
    pub density_change: f64,
}

fn density(orbital: &[f64]) -> Vec<f64> {
    orbital.iter().map(|v| v * v).collect()
}

/// Iterates `(H0 + scale * V * |phi_0|^2) phi = lambda phi` from the bare
/// ground state and returns the `count` lowest orbitals of the converged
/// operator.
pub fn hartree_fock(
    h0: &LatticeHamiltonian,
    conv: &Convolver,
    scale: f64,
    count: usize,
    opts: &HartreeFockOptions,
) -> Result<HartreeFockResult> {
    if !(scale >= 0.0 && scale.is_finite()) {
        return Err(Error::InvalidParams(format!("repulsion scale must be >= 0, got {scale}")));
    }
    let mut spectrum = solve_hamiltonian(h0, count, &opts.davidson, &[])?;
    if scale == 0.0 {
        return Ok(HartreeFockResult {
            spectrum,
            sweeps: 0,
            damped: false,
            mixing: 1.0,
            energy_change: 0.0,
            density_change: 0.0,
        });
    }
    let mut rho = density(spectrum.orbitals[0].values());
    let mut mixing = 1.0f64;
    let mut last_step: Option<f64> = None;
    let mut energy_change = f64::INFINITY;
    for sweep in 1..=opts.max_sweeps {
        let mut field = conv.convolve(&rho);
        field.iter_mut().for_each(|v| *v *= scale);
        let h = h0.with_extra_potential(&field);
        let warm: Vec<Vec<f64>> = spectrum.orbitals.iter().map(|o| o.values().to_vec()).collect();
        let next = solve_hamiltonian(&h, count, &opts.davidson, &warm)?;
        energy_change = next
            .energies
            .iter()
            .zip(&spectrum.energies)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        let rho_out = density(next.orbitals[0].values());
        let density_change = rho_out
            .iter()
            .zip(&rho)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        let step = next.energies[0] - spectrum.energies[0];
        if let Some(prev) = last_step {
            if step * prev < 0.0 && step.abs() > 0.5 * prev.abs() {
                mixing = if mixing >= 1.0 {
                    opts.damping
                } else {
                    (0.5 * mixing).max(opts.min_damping)
                };
            }
        }
        last_step = Some(step);
        spectrum = next;
        if energy_change < opts.energy_tol && density_change < opts.density_tol {
            return Ok(HartreeFockResult {
                spectrum,
                sweeps: sweep,
                damped: mixing < 1.0,
                mixing,
                energy_change,
                density_change,
            });
        }
        if mixing < 1.0 {
            let a = mixing;
            rho.iter_mut().zip(&rho_out).for_each(|(r, o)| *r = (1.0 - a) * *r + a * o);
        } else {
            rho = rho_out;
        }
    }
    Err(Error::HartreeFockNotConverged {
        sweeps: opts.max_sweeps,
        drift: energy_change,
    })
}

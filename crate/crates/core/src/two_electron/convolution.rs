//! Pair-potential convolution on an open lattice by zero-padded FFT.

use rustfft::num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fft3::Fft3;
use crate::lattice::{Boundary, LatticeSpec, PotentialKind};

/// `(V * rho)(i) = sum_j V(|i - j|) rho(j)` for densities on an open `n^3`
/// lattice. The kernel is tabulated in real space on the doubled grid, so
/// no periodic image ever contributes.
pub struct Convolver {
    n: usize,
    m: usize,
    fft: Fft3,
    /// Transformed kernel divided by `m^3`; real because the kernel is even.
    kernel: Vec<f64>,
}

impl Convolver {
    pub fn new(lattice: &LatticeSpec, potential: PotentialKind, v0: f64) -> Result<Self> {
        if lattice.boundary() != Boundary::Open {
            return Err(Error::InvalidLattice(
                "pair-potential convolution is defined on open lattices".into(),
            ));
        }
        let n = lattice.n();
        let m = 2 * n;
        let fft = Fft3::new(m);
        let offset = |i: usize| -> f64 {
            if i < n {
                i as f64
            } else {
                i as f64 - m as f64
            }
        };
        let mut buf = vec![Complex64::default(); m * m * m];
        for z in 0..m {
            for y in 0..m {
                for x in 0..m {
                    // Offsets of exactly n never pair two sites of the lattice.
                    if x == n || y == n || z == n {
                        continue;
                    }
                    let (dx, dy, dz) = (offset(x), offset(y), offset(z));
                    let r = (dx * dx + dy * dy + dz * dz).sqrt();
                    buf[x + m * (y + m * z)] = Complex64::new(potential.eval(v0, r), 0.0);
                }
            }
        }
        fft.forward(&mut buf);
        let norm = 1.0 / (m * m * m) as f64;
        let kernel = buf.iter().map(|c| c.re * norm).collect();
        Ok(Self { n, m, fft, kernel })
    }

    pub fn side(&self) -> usize {
        self.n
    }

    /// Convolves two densities with one complex transform pair.
    pub fn convolve_pair(&self, a: &[f64], b: Option<&[f64]>) -> (Vec<f64>, Option<Vec<f64>>) {
        let (n, m) = (self.n, self.m);
        assert_eq!(a.len(), n * n * n);
        let mut buf = vec![Complex64::default(); m * m * m];
        for z in 0..n {
            for y in 0..n {
                let src = n * (y + n * z);
                let dst = m * (y + m * z);
                for x in 0..n {
                    let im = b.map_or(0.0, |b| b[src + x]);
                    buf[dst + x] = Complex64::new(a[src + x], im);
                }
            }
        }
        self.fft.forward(&mut buf);
        for (c, k) in buf.iter_mut().zip(&self.kernel) {
            *c *= *k;
        }
        self.fft.inverse(&mut buf);
        let mut out_a = vec![0.0; n * n * n];
        let mut out_b = b.map(|_| vec![0.0; n * n * n]);
        for z in 0..n {
            for y in 0..n {
                let src = m * (y + m * z);
                let dst = n * (y + n * z);
                for x in 0..n {
                    out_a[dst + x] = buf[src + x].re;
                    if let Some(ob) = out_b.as_mut() {
                        ob[dst + x] = buf[src + x].im;
                    }
                }
            }
        }
        (out_a, out_b)
    }

    pub fn convolve(&self, density: &[f64]) -> Vec<f64> {
        self.convolve_pair(density, None).0
    }
}

/// Padded-FFT convolution of `density` with the pair potential.
pub fn ee_convolution(
    density: &[f64],
    potential: PotentialKind,
    v0: f64,
    lattice: &LatticeSpec,
) -> Result<Vec<f64>> {
    if density.len() != lattice.num_sites() {
        return Err(Error::DimensionMismatch {
            expected: lattice.num_sites(),
            got: density.len(),
        });
    }
    Ok(Convolver::new(lattice, potential, v0)?.convolve(density))
}

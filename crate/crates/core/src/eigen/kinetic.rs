//! Preconditioner that inverts the shifted hopping operator exactly.
//!
//! The open-boundary nearest-neighbor Laplacian is diagonal in the DST-I
//! basis, the periodic one in the Fourier basis, so `(K - theta)^{-1}` costs
//! a few 1D transforms per line. DST-I is evaluated as an FFT of the odd
//! extension, two real lines per complex transform.

use std::f64::consts::PI;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::Preconditioner;
use crate::fft3::Fft3;
use crate::lattice::{Boundary, LatticeSpec};

/// Unnormalized DST-I along one axis of a cube,
/// `y_k = sum_j x_j sin(pi (j + 1)(k + 1) / (n + 1))`.
struct Dst1Lines {
    n: usize,
    fft: Arc<dyn Fft<f64>>,
}

impl Dst1Lines {
    fn new(n: usize) -> Self {
        Self {
            n,
            fft: FftPlanner::new().plan_fft_forward(2 * (n + 1)),
        }
    }

    fn line_start(n: usize, stride: usize, o: usize) -> usize {
        match stride {
            1 => o * n,
            s if s == n => (o % n) + n * n * (o / n),
            _ => o,
        }
    }

    fn process(&self, data: &mut [f64], stride: usize) {
        let n = self.n;
        let m = 2 * (n + 1);
        let lines = n * n;
        let pairs = lines.div_ceil(2);
        let mut buf = vec![Complex64::default(); pairs * m];
        for p in 0..pairs {
            let chunk = &mut buf[p * m..(p + 1) * m];
            let a = Self::line_start(n, stride, 2 * p);
            let b = (2 * p + 1 < lines).then(|| Self::line_start(n, stride, 2 * p + 1));
            for j in 0..n {
                let re = data[a + j * stride];
                let im = b.map_or(0.0, |b| data[b + j * stride]);
                let v = Complex64::new(re, im);
                chunk[j + 1] = v;
                chunk[m - j - 1] = -v;
            }
        }
        self.fft.process(&mut buf);
        // The transform of a real odd sequence is -2i times its DST-I.
        for p in 0..pairs {
            let chunk = &buf[p * m..(p + 1) * m];
            let a = Self::line_start(n, stride, 2 * p);
            let b = (2 * p + 1 < lines).then(|| Self::line_start(n, stride, 2 * p + 1));
            for k in 0..n {
                let f = chunk[k + 1];
                data[a + k * stride] = -0.5 * f.im;
                if let Some(b) = b {
                    data[b + k * stride] = 0.5 * f.re;
                }
            }
        }
    }
}

enum Transform {
    Open(Dst1Lines),
    Periodic(Fft3),
}

pub struct KineticPreconditioner {
    n: usize,
    /// Per-axis eigenvalues of the 1D hopping chain, `-2 t cos(k)`.
    modes: Vec<f64>,
    /// The shift is held at least this far below the lowest kinetic mode, so
    /// the preconditioner stays positive definite and steers toward the bottom
    /// of the spectrum instead of the state nearest the current Ritz value.
    floor: f64,
    bottom: f64,
    transform: Transform,
}

impl KineticPreconditioner {
    pub fn new(lattice: &LatticeSpec, t_f: f64) -> Self {
        let n = lattice.n();
        let (modes, transform) = match lattice.boundary() {
            Boundary::Open => {
                let modes: Vec<f64> = (1..=n)
                    .map(|k| -2.0 * t_f * (PI * k as f64 / (n + 1) as f64).cos())
                    .collect();
                (modes, Transform::Open(Dst1Lines::new(n)))
            }
            Boundary::Periodic => {
                let modes: Vec<f64> = (0..n)
                    .map(|k| -2.0 * t_f * (2.0 * PI * k as f64 / n as f64).cos())
                    .collect();
                (modes, Transform::Periodic(Fft3::new(n)))
            }
        };
        let lowest = modes.iter().cloned().fold(f64::INFINITY, f64::min);
        Self {
            n,
            modes,
            floor: 1e-2 * t_f,
            bottom: 3.0 * lowest,
            transform,
        }
    }

    pub fn with_floor(mut self, floor: f64) -> Self {
        self.floor = floor;
        self
    }

    fn denominator(&self, kx: usize, ky: usize, kz: usize, shift: f64) -> f64 {
        let shift = shift.min(self.bottom - self.floor);
        self.modes[kx] + self.modes[ky] + self.modes[kz] - shift
    }
}

impl Preconditioner for KineticPreconditioner {
    fn apply(&self, residual: &[f64], shift: f64, out: &mut [f64]) {
        let n = self.n;
        match &self.transform {
            Transform::Open(dst) => {
                out.copy_from_slice(residual);
                for stride in [1, n, n * n] {
                    dst.process(out, stride);
                }
                // DST-I applied twice is (n+1)/2 times the identity per axis.
                let norm = (2.0 / (n + 1) as f64).powi(3);
                for kz in 0..n {
                    for ky in 0..n {
                        for kx in 0..n {
                            let i = kx + n * (ky + n * kz);
                            out[i] *= norm / self.denominator(kx, ky, kz, shift);
                        }
                    }
                }
                for stride in [1, n, n * n] {
                    dst.process(out, stride);
                }
            }
            Transform::Periodic(fft) => {
                let mut buf: Vec<Complex64> =
                    residual.iter().map(|&r| Complex64::new(r, 0.0)).collect();
                fft.forward(&mut buf);
                let norm = 1.0 / (n * n * n) as f64;
                for kz in 0..n {
                    for ky in 0..n {
                        for kx in 0..n {
                            let i = kx + n * (ky + n * kz);
                            buf[i] *= norm / self.denominator(kx, ky, kz, shift);
                        }
                    }
                }
                fft.inverse(&mut buf);
                for (o, b) in out.iter_mut().zip(&buf) {
                    *o = b.re;
                }
            }
        }
    }
}

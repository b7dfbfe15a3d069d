//! In-place 3D complex FFT on cubic x-fastest arrays.

use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

pub struct Fft3 {
    m: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl Fft3 {
    pub fn new(m: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            m,
            fwd: planner.plan_fft_forward(m),
            inv: planner.plan_fft_inverse(m),
        }
    }

    pub fn side(&self) -> usize {
        self.m
    }

    /// Unnormalized forward transform.
    pub fn forward(&self, data: &mut [Complex64]) {
        self.run(&*self.fwd, data);
    }

    /// Unnormalized inverse transform; divide by `m^3` to invert [`Self::forward`].
    pub fn inverse(&self, data: &mut [Complex64]) {
        self.run(&*self.inv, data);
    }

    fn run(&self, fft: &dyn Fft<f64>, data: &mut [Complex64]) {
        let m = self.m;
        assert_eq!(data.len(), m * m * m);
        let mut scratch = vec![Complex64::default(); fft.get_inplace_scratch_len()];
        // x lines are contiguous.
        fft.process_with_scratch(data, &mut scratch);
        let mut plane = vec![Complex64::default(); m * m];
        // y lines: transpose each z-plane.
        for z in 0..m {
            let base = z * m * m;
            for y in 0..m {
                for x in 0..m {
                    plane[x * m + y] = data[base + x + m * y];
                }
            }
            fft.process_with_scratch(&mut plane, &mut scratch);
            for y in 0..m {
                for x in 0..m {
                    data[base + x + m * y] = plane[x * m + y];
                }
            }
        }
        // z lines: gather one y-slab at a time.
        for y in 0..m {
            for z in 0..m {
                for x in 0..m {
                    plane[x * m + z] = data[x + m * (y + m * z)];
                }
            }
            fft.process_with_scratch(&mut plane, &mut scratch);
            for z in 0..m {
                for x in 0..m {
                    data[x + m * (y + m * z)] = plane[x * m + z];
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_and_plane_wave() {
        let m = 6;
        let f = Fft3::new(m);
        let orig: Vec<Complex64> = (0..m * m * m)
            .map(|i| Complex64::new((i as f64 * 0.37).sin(), (i as f64 * 0.11).cos()))
            .collect();
        let mut d = orig.clone();
        f.forward(&mut d);
        f.inverse(&mut d);
        for (a, b) in d.iter().zip(&orig) {
            assert!((a / (m * m * m) as f64 - b).norm() < 1e-12);
        }
        // exp(2 pi i (x + 2y + 3z)/m) lands in a single bin (x,y,z) = (1,2,3) after inverse sign.
        let mut w: Vec<Complex64> = (0..m * m * m)
            .map(|i| {
                let (x, y, z) = (i % m, (i / m) % m, i / (m * m));
                let ph = 2.0 * std::f64::consts::PI * (x + 2 * y + 3 * z) as f64 / m as f64;
                Complex64::new(ph.cos(), ph.sin())
            })
            .collect();
        f.forward(&mut w);
        let peak = 1 + m * (2 + m * 3);
        for (i, v) in w.iter().enumerate() {
            let expect = if i == peak { (m * m * m) as f64 } else { 0.0 };
            assert!((v.re - expect).abs() < 1e-9 && v.im.abs() < 1e-9);
        }
    }
}

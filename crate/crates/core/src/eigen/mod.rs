//! Matrix-free symmetric eigensolvers.

mod davidson;
mod kinetic;

pub use davidson::{davidson, DavidsonOptions, EigenResult};
pub use kinetic::KineticPreconditioner;

/// A real symmetric operator applied without materializing it.
pub trait LinearOperator: Sync {
    fn dim(&self) -> usize;
    /// `y = A x`
    fn apply(&self, x: &[f64], y: &mut [f64]);
}

/// Approximate inverse of `(A - shift)` used to expand the search space.
pub trait Preconditioner: Sync {
    fn apply(&self, residual: &[f64], shift: f64, out: &mut [f64]);
}

/// Plain residual expansion (unpreconditioned Davidson, i.e. block Lanczos-like).
pub struct IdentityPreconditioner;

impl Preconditioner for IdentityPreconditioner {
    fn apply(&self, residual: &[f64], _shift: f64, out: &mut [f64]) {
        out.copy_from_slice(residual);
    }
}

/// Energy band inside which eigenvalues count as degenerate for ordering.
pub const DEGENERACY_BAND: f64 = 1e-8;

/// Fixes signs and orders degenerate clusters reproducibly.
///
/// Each vector is flipped so its first significant component is positive.
/// Within a cluster of eigenvalues closer than [`DEGENERACY_BAND`], states are
/// ordered by the index of that component, then by its magnitude.
pub fn canonicalize(values: &mut [f64], vectors: &mut [Vec<f64>], residuals: &mut [f64]) {
    let key = |v: &[f64]| -> (usize, f64) {
        let vmax = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let cut = 1e-6 * vmax;
        let idx = v.iter().position(|x| x.abs() > cut).unwrap_or(0);
        (idx, v[idx])
    };
    for v in vectors.iter_mut() {
        let (_, lead) = key(v);
        if lead < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
    }
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    // Stable pass over clusters.
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && (values[order[end]] - values[order[end - 1]]).abs() <= DEGENERACY_BAND {
            end += 1;
        }
        order[start..end].sort_by(|&a, &b| {
            let (ia, va) = key(&vectors[a]);
            let (ib, vb) = key(&vectors[b]);
            ia.cmp(&ib).then(vb.abs().total_cmp(&va.abs()))
        });
        start = end;
    }
    let vals: Vec<f64> = order.iter().map(|&i| values[i]).collect();
    let res: Vec<f64> = order.iter().map(|&i| residuals[i]).collect();
    let mut vecs: Vec<Vec<f64>> = order.iter().map(|&i| std::mem::take(&mut vectors[i])).collect();
    values.copy_from_slice(&vals);
    residuals.copy_from_slice(&res);
    for (dst, src) in vectors.iter_mut().zip(vecs.iter_mut()) {
        std::mem::swap(dst, src);
    }
}

//! Block Davidson with thick restart.
//!
//! Every expansion vector is orthogonalized twice (classical Gram-Schmidt)
//! against the whole search space, so the basis stays orthonormal to working
//! precision without any selective scheme.

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{canonicalize, LinearOperator, Preconditioner};
use crate::error::{Error, Result};
use crate::linalg::{axpy, dot, norm, scale, sym_eigen, SymMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DavidsonOptions {
    /// Residual norm `||A x - theta x||` required for every wanted pair.
    pub tol: f64,
    pub max_iter: usize,
    /// Guard vectors carried beyond the wanted count.
    pub extra: usize,
    pub max_subspace: usize,
    pub seed: u64,
}

impl Default for DavidsonOptions {
    fn default() -> Self {
        Self {
            tol: 1e-7,
            max_iter: 2000,
            extra: 2,
            max_subspace: 48,
            seed: 0x5eed,
        }
    }
}

#[derive(Debug, Clone)]
pub struct EigenResult {
    pub values: Vec<f64>,
    pub vectors: Vec<Vec<f64>>,
    pub residuals: Vec<f64>,
    pub iterations: usize,
}

struct Space {
    v: Vec<Vec<f64>>,
    av: Vec<Vec<f64>>,
    /// Lower triangle of the projected matrix, `proj[i][j] = v_j . A v_i` for `j <= i`.
    proj: Vec<Vec<f64>>,
}

impl Space {
    fn len(&self) -> usize {
        self.v.len()
    }

    /// Orthogonalizes `t` against the space (two passes) and appends it if
    /// enough of it survives. Returns whether it was kept.
    fn push<A: LinearOperator + ?Sized>(&mut self, op: &A, mut t: Vec<f64>) -> bool {
        let n0 = norm(&t);
        if n0 == 0.0 || !n0.is_finite() {
            return false;
        }
        scale(1.0 / n0, &mut t);
        for _ in 0..2 {
            let coeffs: Vec<f64> = self.v.iter().map(|vj| dot(vj, &t)).collect();
            for (vj, c) in self.v.iter().zip(coeffs) {
                axpy(-c, vj, &mut t);
            }
        }
        let n1 = norm(&t);
        if n1 < 1e-8 {
            return false;
        }
        scale(1.0 / n1, &mut t);
        let mut at = vec![0.0; t.len()];
        op.apply(&t, &mut at);
        let mut row: Vec<f64> = self.v.iter().map(|vj| dot(vj, &at)).collect();
        row.push(dot(&t, &at));
        self.v.push(t);
        self.av.push(at);
        self.proj.push(row);
        true
    }
}

/// Lowest `k` eigenpairs of `op`.
///
/// `initial` seeds the search space (warm starts); the remainder of the block
/// is filled with reproducible pseudo-random vectors drawn from `opts.seed`.
pub fn davidson<A, P>(
    op: &A,
    precond: &P,
    k: usize,
    opts: &DavidsonOptions,
    initial: &[Vec<f64>],
) -> Result<EigenResult>
where
    A: LinearOperator + ?Sized,
    P: Preconditioner + ?Sized,
{
    let dim = op.dim();
    if k == 0 || k > dim {
        return Err(Error::InvalidParams(format!(
            "requested {k} eigenpairs of a {dim}-dimensional operator"
        )));
    }
    let block = (k + opts.extra).min(dim);
    let max_sub = opts.max_subspace.max(3 * block).min(dim);

    let mut space = Space {
        v: Vec::with_capacity(max_sub + block),
        av: Vec::with_capacity(max_sub + block),
        proj: Vec::with_capacity(max_sub + block),
    };
    for v in initial {
        if v.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: v.len(),
            });
        }
        if space.len() < block {
            space.push(op, v.clone());
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut attempts = 0;
    while space.len() < block && attempts < 10 * block {
        let t: Vec<f64> = (0..dim).map(|_| rng.random::<f64>() - 0.5).collect();
        space.push(op, t);
        attempts += 1;
    }

    let mut iter = 0;
    loop {
        let s = space.len();
        let mut g = SymMatrix::zeros(s);
        for (i, row) in space.proj.iter().enumerate() {
            for (j, val) in row.iter().enumerate() {
                g.set_sym(i, j, *val);
            }
        }
        let ritz = sym_eigen(&g)?;
        let nb = block.min(s);

        let mut xs = Vec::with_capacity(nb);
        let mut residuals = Vec::with_capacity(nb);
        let mut rs = Vec::with_capacity(nb);
        for i in 0..nb {
            let y = &ritz.vectors[i];
            let mut x = vec![0.0; dim];
            let mut ax = vec![0.0; dim];
            for j in 0..s {
                axpy(y[j], &space.v[j], &mut x);
                axpy(y[j], &space.av[j], &mut ax);
            }
            let mut r = ax.clone();
            axpy(-ritz.values[i], &x, &mut r);
            residuals.push(norm(&r));
            xs.push(x);
            rs.push(r);
        }

        let done = residuals[..k].iter().all(|&r| r <= opts.tol);
        if done || iter >= opts.max_iter {
            let mut values = ritz.values[..k].to_vec();
            let mut vectors: Vec<Vec<f64>> = xs.into_iter().take(k).collect();
            let mut res = residuals[..k].to_vec();
            if !done {
                return Err(Error::NotConverged {
                    iterations: iter,
                    residuals: res,
                    tol: opts.tol,
                });
            }
            canonicalize(&mut values, &mut vectors, &mut res);
            return Ok(EigenResult {
                values,
                vectors,
                residuals: res,
                iterations: iter,
            });
        }
        iter += 1;

        let mut corrections = Vec::new();
        for i in 0..nb {
            if residuals[i] <= opts.tol {
                continue;
            }
            let mut t = vec![0.0; dim];
            precond.apply(&rs[i], ritz.values[i], &mut t);
            corrections.push(t);
        }

        if s + corrections.len() > max_sub {
            // Thick restart on the current Ritz vectors. Re-pushing them
            // re-orthogonalizes and rebuilds the projected matrix exactly.
            let keep = (2 * block).min(s);
            let mut kept = xs;
            for i in nb..keep {
                let y = &ritz.vectors[i];
                let mut x = vec![0.0; dim];
                for j in 0..s {
                    axpy(y[j], &space.v[j], &mut x);
                }
                kept.push(x);
            }
            space.v.clear();
            space.av.clear();
            space.proj.clear();
            for x in kept {
                space.push(op, x);
            }
        }

        let mut added = 0;
        for t in corrections {
            if space.push(op, t) {
                added += 1;
            }
        }
        if added == 0 {
            // Stagnation: inject a fresh random direction.
            let t: Vec<f64> = (0..dim).map(|_| rng.random::<f64>() - 0.5).collect();
            space.push(op, t);
        }
    }
}

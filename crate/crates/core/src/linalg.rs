//! Dense kernels, leg-local operator application and Krylov eigensolvers.
//!
//! Tensor-product spaces are addressed by "legs": a vector on `n_legs` qudits
//! of dimension `d` has its leg 0 as the most significant digit of the flat
//! index.

use nalgebra::{DMatrix, DVector, Schur, SymmetricEigen, SVD};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

/// Largest entry modulus.
pub fn max_abs(m: &CMat) -> f64 {
    m.iter().fold(0.0, |acc, z| acc.max(z.norm()))
}

pub fn max_abs_diff(a: &CMat, b: &CMat) -> f64 {
    a.iter()
        .zip(b.iter())
        .fold(0.0, |acc, (x, y)| acc.max((x - y).norm()))
}

/// Kronecker product of a list, leftmost factor most significant.
pub fn kron_all(ops: &[&CMat]) -> CMat {
    let mut out = CMat::identity(1, 1);
    for op in ops {
        out = out.kronecker(op);
    }
    out
}

/// `exp(i h)` for Hermitian `h`, via its eigendecomposition.
pub fn expm_i_hermitian(h: &CMat) -> CMat {
    let eig = SymmetricEigen::new(h.clone());
    let v = &eig.eigenvectors;
    let phases = CVec::from_iterator(
        eig.eigenvalues.len(),
        eig.eigenvalues.iter().map(|&l| C64::from_polar(1.0, l)),
    );
    let mut scaled = v.clone();
    for (j, mut col) in scaled.column_iter_mut().enumerate() {
        col *= phases[j];
    }
    scaled * v.adjoint()
}

/// Eigenvalues (ascending) and orthonormal eigenvectors of a Hermitian matrix.
pub fn hermitian_eigen(h: &CMat) -> (Vec<f64>, CMat) {
    let eig = SymmetricEigen::new(h.clone());
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = CMat::from_fn(h.nrows(), order.len(), |r, c| {
        eig.eigenvectors[(r, order[c])]
    });
    (values, vectors)
}

/// Singular values in descending order.
pub fn singular_values(m: &CMat) -> Vec<f64> {
    let svd = SVD::new(m.clone(), false, false);
    let mut s: Vec<f64> = svd.singular_values.iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// Row-major vectorization `|A> = sum_pq A_pq |p>|q>`.
pub fn vectorize(a: &CMat) -> Vec<C64> {
    let (r, c) = a.shape();
    let mut v = Vec::with_capacity(r * c);
    for p in 0..r {
        for q in 0..c {
            v.push(a[(p, q)]);
        }
    }
    v
}

pub fn unvectorize(v: &[C64], n: usize) -> CMat {
    CMat::from_fn(n, n, |p, q| v[p * n + q])
}

pub fn dot(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn norm(a: &[C64]) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

pub fn random_vector(dim: usize, rng: &mut ChaCha8Rng) -> Vec<C64> {
    (0..dim)
        .map(|_| {
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            C64::new(re, im)
        })
        .collect()
}

/// A `d^k x d^k` matrix applied to `k` chosen legs of an `n_legs`-qudit vector.
#[derive(Clone, Debug)]
pub struct LocalOp {
    block: usize,
    matrix: Vec<C64>,
    local: Vec<usize>,
    bases: Vec<usize>,
}

impl LocalOp {
    pub fn new(n_legs: usize, d: usize, legs: &[usize], matrix: &CMat) -> Result<Self> {
        let k = legs.len();
        let block = d.pow(k as u32);
        if matrix.nrows() != block || matrix.ncols() != block {
            return Err(Error::Shape {
                expected: block,
                got: matrix.nrows(),
            });
        }
        for (i, &leg) in legs.iter().enumerate() {
            if leg >= n_legs {
                return Err(Error::Index {
                    what: "leg",
                    index: leg,
                    size: n_legs,
                });
            }
            if legs[..i].contains(&leg) {
                return Err(Error::Validation(format!("leg {leg} repeated")));
            }
        }
        let stride = |leg: usize| d.pow((n_legs - 1 - leg) as u32);
        let local = (0..block)
            .map(|l| {
                let mut rem = l;
                let mut off = 0;
                for &leg in legs.iter().rev() {
                    off += (rem % d) * stride(leg);
                    rem /= d;
                }
                off
            })
            .collect();
        let rest: Vec<usize> = (0..n_legs).filter(|l| !legs.contains(l)).collect();
        let n_rest = d.pow(rest.len() as u32);
        let bases = (0..n_rest)
            .map(|o| {
                let mut rem = o;
                let mut off = 0;
                for &leg in rest.iter().rev() {
                    off += (rem % d) * stride(leg);
                    rem /= d;
                }
                off
            })
            .collect();
        let mut flat = Vec::with_capacity(block * block);
        for r in 0..block {
            for c in 0..block {
                flat.push(matrix[(r, c)]);
            }
        }
        Ok(Self {
            block,
            matrix: flat,
            local,
            bases,
        })
    }

    pub fn dim(&self) -> usize {
        self.block * self.bases.len()
    }

    /// In-place application.
    pub fn apply_in_place(&self, v: &mut [C64]) {
        let b = self.block;
        let mut gathered = vec![ZERO; b];
        for &base in &self.bases {
            for (g, &off) in gathered.iter_mut().zip(&self.local) {
                *g = v[base + off];
            }
            for (r, &off) in self.local.iter().enumerate() {
                let row = &self.matrix[r * b..(r + 1) * b];
                let mut acc = ZERO;
                for (m, g) in row.iter().zip(&gathered) {
                    acc += m * g;
                }
                v[base + off] = acc;
            }
        }
    }
}

/// Sequence of local operators applied right to left (last element first).
#[derive(Clone, Debug, Default)]
pub struct LocalProduct {
    pub factors: Vec<LocalOp>,
}

impl LocalProduct {
    pub fn apply_in_place(&self, v: &mut [C64]) {
        for f in self.factors.iter().rev() {
            f.apply_in_place(v);
        }
    }
}

/// Complex Schur form `m = Q T Q^dagger`. The deflation threshold is loosened
/// step by step when the QR iteration stalls at machine precision.
fn schur(m: &CMat) -> Result<(CMat, CMat)> {
    let n = m.nrows();
    let iterations = 1000 * n.max(10);
    for eps in [f64::EPSILON, 8.0 * f64::EPSILON, 64.0 * f64::EPSILON, 1e-12] {
        if let Some(s) = Schur::try_new(m.clone(), eps, iterations) {
            return Ok(s.unpack());
        }
        log::debug!("complex Schur stalled at eps {eps:e} for n = {n}");
    }
    Err(Error::NoConvergence {
        iterations,
        residual: f64::NAN,
    })
}

/// Eigenvalues of a general complex matrix.
pub fn eigenvalues(m: &CMat) -> Result<Vec<C64>> {
    let (_, t) = schur(m)?;
    Ok((0..t.nrows()).map(|i| t[(i, i)]).collect())
}

/// Eigenvalues with unit-norm right eigenvectors (columns).
pub fn eigen(m: &CMat) -> Result<(Vec<C64>, CMat)> {
    let (q, t) = schur(m)?;
    let n = t.nrows();
    let scale = max_abs(&t).max(f64::MIN_POSITIVE);
    let mut x = CMat::zeros(n, n);
    for i in 0..n {
        let lambda = t[(i, i)];
        x[(i, i)] = ONE;
        for j in (0..i).rev() {
            let mut s = ZERO;
            for l in j + 1..=i {
                s += t[(j, l)] * x[(l, i)];
            }
            let mut denom = t[(j, j)] - lambda;
            if denom.norm() < f64::EPSILON * scale {
                denom = C64::new(f64::EPSILON * scale, 0.0);
            }
            x[(j, i)] = -s / denom;
        }
    }
    let mut v = q * x;
    for mut col in v.column_iter_mut() {
        let nrm = col.norm();
        if nrm > 0.0 {
            col /= C64::new(nrm, 0.0);
        }
    }
    let values = (0..n).map(|i| t[(i, i)]).collect();
    Ok((values, v))
}

#[derive(Clone, Debug)]
pub struct KrylovOptions {
    /// Maximal subspace dimension before a restart.
    pub subspace: usize,
    /// Number of start vectors; must exceed the largest expected multiplicity.
    pub block: usize,
    /// Residual tolerance on converged Ritz pairs.
    pub tol: f64,
    pub max_restarts: usize,
    pub seed: u64,
}

impl Default for KrylovOptions {
    fn default() -> Self {
        Self {
            subspace: 64,
            block: 6,
            tol: 1e-10,
            max_restarts: 400,
            seed: 0x5eed,
        }
    }
}

#[derive(Clone, Debug)]
pub struct KrylovResult {
    /// Ritz values sorted by decreasing modulus.
    pub values: Vec<C64>,
    pub residuals: Vec<f64>,
    pub restarts: usize,
    pub matvecs: usize,
}

fn orthogonalize(basis: &[Vec<C64>], v: &mut [C64]) -> f64 {
    let before = norm(v);
    for _ in 0..2 {
        for b in basis {
            let c = dot(b, v);
            for (x, y) in v.iter_mut().zip(b) {
                *x -= c * y;
            }
        }
    }
    norm(v) / before.max(f64::MIN_POSITIVE)
}

/// Largest-modulus eigenvalues of a matrix-free operator.
///
/// A thick-restart Rayleigh–Ritz scheme: the images `W = A V` are stored so
/// the projected matrix `V^dagger W` is formed explicitly, and on restart the
/// wanted Ritz vectors are kept as an orthonormal block. Expansion vectors are
/// images of the basis vector added `block` steps earlier, which makes the
/// scheme a block method and resolves semisimple multiplicities up to `block`.
pub fn leading_eigenvalues<F>(
    apply: F,
    dim: usize,
    k: usize,
    opts: &KrylovOptions,
) -> Result<KrylovResult>
where
    F: Fn(&[C64]) -> Vec<C64>,
{
    let m = opts.subspace.min(dim);
    let block = opts.block.max(1).min(m);
    let k = k.min(dim);
    let keep = (k + block)
        .max((m + k) / 2)
        .min(m.saturating_sub(block))
        .max(k.min(m));
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut v: Vec<Vec<C64>> = Vec::with_capacity(m);
    let mut w: Vec<Vec<C64>> = Vec::with_capacity(m);
    let mut matvecs = 0;
    let mut last_res = f64::INFINITY;

    for restart in 0..=opts.max_restarts {
        while v.len() < m {
            let j = v.len();
            let mut cand = if j >= block {
                w[j - block].clone()
            } else {
                random_vector(dim, &mut rng)
            };
            let mut ratio = orthogonalize(&v, &mut cand);
            let mut tries = 0;
            while ratio < 1e-8 && tries < 5 {
                cand = random_vector(dim, &mut rng);
                ratio = orthogonalize(&v, &mut cand);
                tries += 1;
            }
            if ratio < 1e-8 {
                break;
            }
            let nrm = norm(&cand);
            cand.iter_mut().for_each(|z| *z /= nrm);
            let img = apply(&cand);
            matvecs += 1;
            v.push(cand);
            w.push(img);
        }
        let j = v.len();
        let g = CMat::from_fn(j, j, |r, c| dot(&v[r], &w[c]));
        let (vals, vecs) = eigen(&g)?;
        let mut order: Vec<usize> = (0..j).collect();
        order.sort_by(|&a, &b| vals[b].norm().total_cmp(&vals[a].norm()));

        let ritz_residual = |col: usize| -> f64 {
            let y = vecs.column(col);
            let lambda = vals[col];
            let mut r = vec![ZERO; dim];
            for (c, yc) in y.iter().enumerate() {
                for (ri, (wi, vi)) in r.iter_mut().zip(w[c].iter().zip(&v[c])) {
                    *ri += yc * (wi - lambda * vi);
                }
            }
            norm(&r)
        };
        let residuals: Vec<f64> = order[..k].iter().map(|&c| ritz_residual(c)).collect();
        last_res = residuals.iter().cloned().fold(0.0, f64::max);
        let exhausted = j == dim;
        if last_res < opts.tol || exhausted {
            return Ok(KrylovResult {
                values: order[..k].iter().map(|&c| vals[c]).collect(),
                residuals,
                restarts: restart,
                matvecs,
            });
        }
        // Compress to an orthonormal basis of the wanted Ritz vectors.
        let p = keep.min(j);
        let y = CMat::from_fn(j, p, |r, c| vecs[(r, order[c])]);
        let q = y.qr().q();
        let combine = |src: &[Vec<C64>]| -> Vec<Vec<C64>> {
            (0..p)
                .map(|c| {
                    let mut out = vec![ZERO; dim];
                    for (r, s) in src.iter().enumerate() {
                        let coef = q[(r, c)];
                        for (o, x) in out.iter_mut().zip(s) {
                            *o += coef * x;
                        }
                    }
                    out
                })
                .collect()
        };
        v = combine(&v);
        w = combine(&w);
    }
    Err(Error::NoConvergence {
        iterations: opts.max_restarts,
        residual: last_res,
    })
}

/// Largest singular value of `A` by Lanczos on `A^dagger A` with full
/// reorthogonalization. Returns the value and the final Ritz residual.
pub fn largest_singular_value<F, G>(
    apply: F,
    apply_adjoint: G,
    dim: usize,
    tol: f64,
    max_steps: usize,
    seed: u64,
) -> Result<(f64, f64)>
where
    F: Fn(&[C64]) -> Vec<C64>,
    G: Fn(&[C64]) -> Vec<C64>,
{
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut q = random_vector(dim, &mut rng);
    let n0 = norm(&q);
    q.iter_mut().for_each(|z| *z /= n0);
    let mut basis: Vec<Vec<C64>> = Vec::new();
    let mut alpha: Vec<f64> = Vec::new();
    let mut beta: Vec<f64> = Vec::new();
    let mut previous = f64::NAN;
    let steps = max_steps.min(dim);
    for step in 0..steps {
        let mut z = apply_adjoint(&apply(&q));
        let a = dot(&q, &z).re;
        basis.push(q.clone());
        alpha.push(a);
        orthogonalize(&basis, &mut z);
        let b = norm(&z);
        let n = alpha.len();
        let tri = DMatrix::<f64>::from_fn(n, n, |r, c| {
            if r == c {
                alpha[r]
            } else if r + 1 == c {
                beta[r]
            } else if c + 1 == r {
                beta[c]
            } else {
                0.0
            }
        });
        let eig = SymmetricEigen::new(tri);
        let (imax, &top) = eig
            .eigenvalues
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .expect("nonempty");
        let residual = (b * eig.eigenvectors[(n - 1, imax)]).abs();
        let converged = residual < tol * top.abs().max(1e-300)
            || (step > 2 && (top - previous).abs() < tol * top.abs() && residual < tol.sqrt())
            || b < 1e-14 * top.abs().max(1e-300)
            || step + 1 == steps && steps == dim;
        if converged {
            return Ok((top.max(0.0).sqrt(), residual));
        }
        previous = top;
        beta.push(b);
        q = z.into_iter().map(|x| x / b).collect();
    }
    Err(Error::NoConvergence {
        iterations: steps,
        residual: previous,
    })
}

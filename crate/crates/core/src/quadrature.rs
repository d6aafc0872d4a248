//! Gauss rules for disorder averages, built by the Golub–Welsch algorithm.

use nalgebra::{DMatrix, SymmetricEigen};

fn golub_welsch(offdiag: impl Fn(usize) -> f64, n: usize, mu0: f64) -> Vec<(f64, f64)> {
    let jac = DMatrix::<f64>::from_fn(n, n, |r, c| {
        if r + 1 == c {
            offdiag(c)
        } else if c + 1 == r {
            offdiag(r)
        } else {
            0.0
        }
    });
    let eig = SymmetricEigen::new(jac);
    let mut rule: Vec<(f64, f64)> = (0..n)
        .map(|i| (eig.eigenvalues[i], mu0 * eig.eigenvectors[(0, i)].powi(2)))
        .collect();
    rule.sort_by(|a, b| a.0.total_cmp(&b.0));
    rule
}

/// Gauss–Hermite nodes and weights for the weight `exp(-x^2)`.
pub fn gauss_hermite(n: usize) -> Vec<(f64, f64)> {
    golub_welsch(|k| (k as f64 / 2.0).sqrt(), n, std::f64::consts::PI.sqrt())
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    golub_welsch(
        |k| {
            let k = k as f64;
            k / (4.0 * k * k - 1.0).sqrt()
        },
        n,
        2.0,
    )
}

/// One-dimensional probability rule for a centred normal of width `nu`.
pub fn normal_rule(n: usize, nu: f64) -> Vec<(f64, f64)> {
    let norm = std::f64::consts::PI.sqrt();
    gauss_hermite(n)
        .into_iter()
        .map(|(x, w)| (std::f64::consts::SQRT_2 * nu * x, w / norm))
        .collect()
}

/// One-dimensional probability rule for the uniform density on `[-nu, nu]`.
pub fn uniform_rule(n: usize, nu: f64) -> Vec<(f64, f64)> {
    gauss_legendre(n)
        .into_iter()
        .map(|(x, w)| (nu * x, w / 2.0))
        .collect()
}

/// Tensor product of one-dimensional rules: `(weight, point)` pairs.
pub fn product_rule(axes: &[Vec<(f64, f64)>]) -> Vec<(f64, Vec<f64>)> {
    let mut out = vec![(1.0, Vec::with_capacity(axes.len()))];
    for axis in axes {
        let mut next = Vec::with_capacity(out.len() * axis.len());
        for (w, p) in &out {
            for &(x, wx) in axis {
                let mut q = p.clone();
                q.push(x);
                next.push((w * wx, q));
            }
        }
        out = next;
    }
    out
}

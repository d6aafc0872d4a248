//! Elementary qudit operators: su(d) generators, spin matrices, lattice
//! permutations, local embeddings and sublattice magnetizations.
//!
//! Positions on a chain of `n` qudits are numbered `0..n`, position 0 being
//! the most significant tensor factor. A site `y` of the half-integer lattice
//! sits at position `2y`.

use std::ops::Deref;

use crate::error::{Error, Result};
use crate::linalg::{max_abs, CMat, C64, I, ONE, ZERO};

/// Largest dimension for which dense operators are built.
pub const DENSE_CAP: usize = 4096;

/// Tolerance for exact structural identities.
pub const STRUCTURAL_TOL: f64 = 1e-12;

/// Square complex matrix with checked construction.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseOperator(CMat);

impl DenseOperator {
    pub fn new(m: CMat) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::Shape {
                expected: m.nrows(),
                got: m.ncols(),
            });
        }
        if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Validation("non-finite entry".into()));
        }
        Ok(Self(m))
    }

    pub fn identity(dim: usize) -> Self {
        Self(CMat::identity(dim, dim))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &CMat {
        &self.0
    }

    pub fn into_matrix(self) -> CMat {
        self.0
    }

    pub fn dagger(&self) -> Self {
        Self(self.0.adjoint())
    }

    pub fn transpose(&self) -> Self {
        Self(self.0.transpose())
    }

    pub fn conj(&self) -> Self {
        Self(self.0.map(|z| z.conj()))
    }

    pub fn hermiticity_residual(&self) -> f64 {
        max_abs(&(&self.0 - self.0.adjoint()))
    }

    pub fn unitarity_residual(&self) -> f64 {
        let n = self.dim();
        max_abs(&(self.0.adjoint() * &self.0 - CMat::identity(n, n)))
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.hermiticity_residual() < tol
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        self.unitarity_residual() < tol
    }

    pub fn is_traceless(&self, tol: f64) -> bool {
        self.0.trace().norm() < tol
    }

    pub fn kron(&self, other: &Self) -> Self {
        Self(self.0.kronecker(&other.0))
    }

    pub fn commutator(&self, other: &Self) -> Self {
        Self(&self.0 * &other.0 - &other.0 * &self.0)
    }
}

impl Deref for DenseOperator {
    type Target = CMat;
    fn deref(&self) -> &CMat {
        &self.0
    }
}

impl From<DenseOperator> for CMat {
    fn from(op: DenseOperator) -> CMat {
        op.0
    }
}

/// Site of the lattice `(1/2) Z_{2n}` stored as the doubled integer `2x mod 2n`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct HalfLatticeIndex {
    doubled: usize,
    cells: usize,
}

impl HalfLatticeIndex {
    pub fn new(doubled: usize, cells: usize) -> Result<Self> {
        if doubled >= 2 * cells {
            return Err(Error::Index {
                what: "half-lattice site",
                index: doubled,
                size: 2 * cells,
            });
        }
        Ok(Self { doubled, cells })
    }

    pub fn doubled(&self) -> usize {
        self.doubled
    }

    pub fn cells(&self) -> usize {
        self.cells
    }

    pub fn is_integer(&self) -> bool {
        self.doubled.is_multiple_of(2)
    }

    /// Positions `(2x - 1, 2x) mod 2n` touched by a two-site operator.
    pub fn bond(&self) -> (usize, usize) {
        let n = 2 * self.cells;
        ((self.doubled + n - 1) % n, self.doubled)
    }
}

fn check_d(d: usize) -> Result<()> {
    if d < 2 {
        Err(Error::InvalidDimension(d))
    } else {
        Ok(())
    }
}

fn chain_dim(d: usize, n: usize) -> Result<usize> {
    let dim = (d as u128).checked_pow(n as u32).unwrap_or(u128::MAX);
    if dim > DENSE_CAP as u128 {
        return Err(Error::DenseCap {
            dim: dim.min(usize::MAX as u128) as usize,
            cap: DENSE_CAP,
        });
    }
    Ok(dim as usize)
}

/// Number of su(d) generators.
pub fn n_generators(d: usize) -> usize {
    d * d - 1
}

/// Generalized Gell-Mann matrices normalized to `tr(s_a s_b) = 2 delta_ab`.
///
/// For each `k = 1..d` the symmetric and antisymmetric pairs `(j, k)`, `j < k`,
/// come first, followed by the diagonal matrix of level `k`; for `d = 2` this
/// gives `(X, Y, Z)` and for `d = 3` the usual `lambda_1..lambda_8`.
pub fn gell_mann_generators(d: usize) -> Result<Vec<DenseOperator>> {
    check_d(d)?;
    let mut out = Vec::with_capacity(n_generators(d));
    for k in 1..d {
        for j in 0..k {
            let mut s = CMat::zeros(d, d);
            s[(j, k)] = ONE;
            s[(k, j)] = ONE;
            out.push(DenseOperator(s));
            let mut a = CMat::zeros(d, d);
            a[(j, k)] = -I;
            a[(k, j)] = I;
            out.push(DenseOperator(a));
        }
        let l = k as f64;
        let c = (2.0 / (l * (l + 1.0))).sqrt();
        let mut diag = CMat::zeros(d, d);
        for j in 0..k {
            diag[(j, j)] = C64::new(c, 0.0);
        }
        diag[(k, k)] = C64::new(-c * l, 0.0);
        out.push(DenseOperator(diag));
    }
    Ok(out)
}

/// Spin-`(d-1)/2` matrices with `s3 = diag(-(d-1)/2, ..., (d-1)/2)`.
pub fn spin_matrices(d: usize) -> Result<[DenseOperator; 3]> {
    check_d(d)?;
    let s = (d as f64 - 1.0) / 2.0;
    let m = |j: usize| j as f64 - s;
    let mut raise = CMat::zeros(d, d);
    for j in 0..d - 1 {
        raise[(j + 1, j)] = C64::new((s * (s + 1.0) - m(j) * (m(j) + 1.0)).sqrt(), 0.0);
    }
    let lower = raise.adjoint();
    let s1 = (&raise + &lower) * C64::new(0.5, 0.0);
    let s2 = (&raise - &lower) * C64::new(0.0, -0.5);
    let s3 = CMat::from_fn(d, d, |r, c| if r == c { C64::new(m(r), 0.0) } else { ZERO });
    Ok([DenseOperator(s1), DenseOperator(s2), DenseOperator(s3)])
}

/// Raising operator `s_+ = (s1 + i s2) / sqrt(2)`.
pub fn spin_raising(d: usize) -> Result<DenseOperator> {
    let [s1, s2, _] = spin_matrices(d)?;
    Ok(DenseOperator(
        (s1.0 + s2.0 * I) * C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0),
    ))
}

fn digits(mut index: usize, d: usize, n: usize) -> Vec<usize> {
    let mut out = vec![0; n];
    for p in (0..n).rev() {
        out[p] = index % d;
        index /= d;
    }
    out
}

fn from_digits(digs: &[usize], d: usize) -> usize {
    digs.iter().fold(0, |acc, &x| acc * d + x)
}

/// Index map of the site permutation sending the content of position `p` to
/// position `target[p]`.
pub fn permutation_index_map(target: &[usize], d: usize) -> Vec<usize> {
    let n = target.len();
    let dim = d.pow(n as u32);
    (0..dim)
        .map(|i| {
            let j = digits(i, d, n);
            let mut out = vec![0; n];
            for (p, &q) in target.iter().enumerate() {
                out[q] = j[p];
            }
            from_digits(&out, d)
        })
        .collect()
}

/// Permutation operator of sites: position `p` moves to `target[p]`.
pub fn site_permutation(target: &[usize], d: usize) -> Result<DenseOperator> {
    let n = target.len();
    let mut seen = vec![false; n];
    for &q in target {
        if q >= n || seen[q] {
            return Err(Error::Validation("not a permutation".into()));
        }
        seen[q] = true;
    }
    let dim = chain_dim(d, n)?;
    let map = permutation_index_map(target, d);
    let mut m = CMat::zeros(dim, dim);
    for (i, &o) in map.iter().enumerate() {
        m[(o, i)] = ONE;
    }
    Ok(DenseOperator(m))
}

/// Periodic shift `|j1 ... jn> -> |jn j1 ... j(n-1)>`.
pub fn shift_operator(n: usize, d: usize) -> Result<DenseOperator> {
    if n == 0 {
        return Err(Error::Validation("shift needs n >= 1".into()));
    }
    let target: Vec<usize> = (0..n).map(|p| (p + 1) % n).collect();
    site_permutation(&target, d)
}

/// Reflection `|j1 ... jn> -> |jn ... j1>`.
pub fn reflection_operator(n: usize, d: usize) -> Result<DenseOperator> {
    if n == 0 {
        return Err(Error::Validation("reflection needs n >= 1".into()));
    }
    let target: Vec<usize> = (0..n).map(|p| n - 1 - p).collect();
    site_permutation(&target, d)
}

/// `d x d`-block operator acting on the listed positions of an `n`-qudit chain,
/// the first listed position carrying the most significant local factor.
pub fn embed_on_positions(
    op: &CMat,
    positions: &[usize],
    n: usize,
    d: usize,
) -> Result<DenseOperator> {
    let k = positions.len();
    let block = d.pow(k as u32);
    if op.nrows() != block || op.ncols() != block {
        return Err(Error::Shape {
            expected: block,
            got: op.nrows(),
        });
    }
    for (i, &p) in positions.iter().enumerate() {
        if p >= n {
            return Err(Error::Index {
                what: "position",
                index: p,
                size: n,
            });
        }
        if positions[..i].contains(&p) {
            return Err(Error::Validation(format!("position {p} repeated")));
        }
    }
    let dim = chain_dim(d, n)?;
    let mut m = CMat::zeros(dim, dim);
    for col in 0..dim {
        let dig = digits(col, d, n);
        let local_in = from_digits(&positions.iter().map(|&p| dig[p]).collect::<Vec<_>>(), d);
        let mut out = dig.clone();
        for local_out in 0..block {
            let z = op[(local_out, local_in)];
            if z == ZERO {
                continue;
            }
            let ld = digits(local_out, d, k);
            for (&p, &v) in positions.iter().zip(&ld) {
                out[p] = v;
            }
            m[(from_digits(&out, d), col)] += z;
        }
    }
    Ok(DenseOperator(m))
}

/// Embedding of a one- or two-site operator at a lattice site of `cells`
/// unit cells (`2 * cells` qudits). One-site operators act on position `2x`;
/// two-site operators on positions `(2x - 1, 2x)` with periodic wraparound.
pub fn embed_local(op: &DenseOperator, site: HalfLatticeIndex, d: usize) -> Result<DenseOperator> {
    let n = 2 * site.cells();
    if op.dim() == d {
        embed_on_positions(op, &[site.doubled()], n, d)
    } else if op.dim() == d * d {
        let (a, b) = site.bond();
        embed_on_positions(op, &[a, b], n, d)
    } else {
        Err(Error::Shape {
            expected: d * d,
            got: op.dim(),
        })
    }
}

fn generator(a: usize, d: usize) -> Result<DenseOperator> {
    let gens = gell_mann_generators(d)?;
    let n = gens.len();
    gens.into_iter().nth(a).ok_or(Error::Index {
        what: "generator",
        index: a,
        size: n,
    })
}

fn check_parity(iota: usize) -> Result<()> {
    if iota > 1 {
        return Err(Error::Index {
            what: "sublattice",
            index: iota,
            size: 2,
        });
    }
    Ok(())
}

/// `M_{a,iota}`: generator `a` (0-based index into [`gell_mann_generators`])
/// summed over the positions of parity `iota` of a `2t`-qudit chain.
pub fn sublattice_magnetization(
    a: usize,
    iota: usize,
    t: usize,
    d: usize,
) -> Result<DenseOperator> {
    check_parity(iota)?;
    let sigma = generator(a, d)?;
    let n = 2 * t;
    let dim = chain_dim(d, n)?;
    let mut m = CMat::zeros(dim, dim);
    for p in (iota..n).step_by(2) {
        m += embed_on_positions(&sigma, &[p], n, d)?.0;
    }
    Ok(DenseOperator(m))
}

/// `M_a = M_{a,0} + M_{a,1}` over all `2t` positions.
pub fn full_magnetization(a: usize, t: usize, d: usize) -> Result<DenseOperator> {
    Ok(DenseOperator(
        sublattice_magnetization(a, 0, t, d)?.0 + sublattice_magnetization(a, 1, t, d)?.0,
    ))
}

/// `M_{ab,iota}`: `s_a` at position `p` times `s_b` at `p + 1 (mod 2t)`,
/// summed over positions `p` of parity `iota`.
pub fn double_magnetization(
    a: usize,
    b: usize,
    iota: usize,
    t: usize,
    d: usize,
) -> Result<DenseOperator> {
    check_parity(iota)?;
    let sa = generator(a, d)?;
    let sb = generator(b, d)?;
    let n = 2 * t;
    let dim = chain_dim(d, n)?;
    let mut m = CMat::zeros(dim, dim);
    for p in (iota..n).step_by(2) {
        let q = (p + 1) % n;
        if p == q {
            continue;
        }
        m += embed_on_positions(&sa, &[p], n, d)?.0 * embed_on_positions(&sb, &[q], n, d)?.0;
    }
    Ok(DenseOperator(m))
}

/// Two-qudit SWAP.
pub fn swap_gate(d: usize) -> Result<DenseOperator> {
    check_d(d)?;
    site_permutation(&[1, 0], d)
}

//! Commutants of magnetization algebras on the time lattice `H_{2t}` and the
//! rank certificates that accompany them.
//!
//! The commutant of a set `{X}` is the kernel of the positive semidefinite
//! superoperator `C(A) = sum_X [X^dagger, [X, A]]`. Any operator commuting with
//! a diagonal member `D` has `A_pq = 0` unless `D_p = D_q`, so the kernel is
//! searched only among operators supported on pairs `(p, q)` that agree on
//! every diagonal member. The compressed operator has the same kernel and a
//! gap no smaller than the full one.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::algebra::{
    double_magnetization, full_magnetization, n_generators, permutation_index_map,
    reflection_operator, shift_operator, site_permutation, spin_raising, sublattice_magnetization,
    DenseOperator, DENSE_CAP,
};
use crate::circuit::{dual_row_operator, Layer};
use crate::error::{Error, Result};
use crate::gates::{is_dual_unitary, DUALITY_TOL};
use crate::linalg::{
    hermitian_eigen, max_abs, norm, singular_values, vectorize, CMat, CVec, C64, ONE, ZERO,
};

/// Eigenvalues of the folded superoperator below this count as zero.
pub const ZERO_CEILING: f64 = 1e-8;

/// Smallest accepted distance between the zero modes and the rest.
pub const GAP_FLOOR: f64 = 1e-4;

/// Relative singular-value threshold for numerical ranks.
pub const RANK_TOL: f64 = 1e-8;

/// Largest vectorized dimension for the unreduced dense solve.
pub const DENSE_SUPEROPERATOR_CAP: usize = 1024;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SetLabel {
    /// Sublattice and double magnetizations.
    Magnetizations,
    /// Full-lattice magnetizations and reflection-symmetrized doubles.
    TimeReversal,
    /// Coproducts over `n` copies.
    Copies(usize),
    Custom(String),
}

#[derive(Clone, Debug)]
pub struct GeneratorSet {
    pub label: SetLabel,
    pub t: usize,
    pub d: usize,
    pub copies: usize,
    pub operators: Vec<DenseOperator>,
    pub names: Vec<String>,
    pub hermitian: Vec<bool>,
}

impl GeneratorSet {
    pub fn new(
        label: SetLabel,
        t: usize,
        d: usize,
        copies: usize,
        ops: Vec<(String, DenseOperator)>,
    ) -> Result<Self> {
        let dim = ops
            .first()
            .map(|(_, o)| o.dim())
            .ok_or(Error::Validation("empty generator set".into()))?;
        if let Some((name, o)) = ops.iter().find(|(_, o)| o.dim() != dim) {
            return Err(Error::Validation(format!(
                "{name} has dimension {} instead of {dim}",
                o.dim()
            )));
        }
        let hermitian = ops.iter().map(|(_, o)| o.is_hermitian(1e-12)).collect();
        let (names, operators) = ops.into_iter().unzip();
        Ok(Self {
            label,
            t,
            d,
            copies,
            operators,
            names,
            hermitian,
        })
    }

    pub fn dim(&self) -> usize {
        self.operators[0].dim()
    }

    pub fn len(&self) -> usize {
        self.operators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.operators.is_empty()
    }

    /// Largest `||[X, A]||_max` over the members.
    pub fn commutator_residual(&self, a: &CMat) -> f64 {
        self.operators
            .iter()
            .map(|x| max_abs(&(x.matrix() * a - a * x.matrix())))
            .fold(0.0, f64::max)
    }
}

fn check_t(t: usize) -> Result<()> {
    if t == 0 {
        return Err(Error::Validation("need t >= 1".into()));
    }
    Ok(())
}

type NamedOps = Vec<(String, DenseOperator)>;

fn magnetization_ops(t: usize, d: usize) -> Result<(NamedOps, NamedOps)> {
    let g = n_generators(d);
    let mut single = Vec::new();
    let mut double = Vec::new();
    for iota in 0..2 {
        for a in 0..g {
            single.push((
                format!("M[{a},{iota}]"),
                sublattice_magnetization(a, iota, t, d)?,
            ));
            for b in 0..g {
                double.push((
                    format!("M[{a}{b},{iota}]"),
                    double_magnetization(a, b, iota, t, d)?,
                ));
            }
        }
    }
    Ok((single, double))
}

/// `{M_{a,iota}} ∪ {M_{ab,iota}}`: `2(d^2-1) + 2(d^2-1)^2` operators on `H_{2t}`.
pub fn build_m_set(t: usize, d: usize) -> Result<GeneratorSet> {
    check_t(t)?;
    let (mut ops, double) = magnetization_ops(t, d)?;
    ops.extend(double);
    GeneratorSet::new(SetLabel::Magnetizations, t, d, 1, ops)
}

/// `{M_a} ∪ {M_{ab,iota} + R M_{ab,iota} R}` with the time reflection `R`.
pub fn build_mt_set(t: usize, d: usize) -> Result<GeneratorSet> {
    check_t(t)?;
    let r = reflection_operator(2 * t, d)?;
    let g = n_generators(d);
    let mut ops = Vec::new();
    for a in 0..g {
        ops.push((format!("M[{a}]"), full_magnetization(a, t, d)?));
    }
    for iota in 0..2 {
        for a in 0..g {
            for b in 0..g {
                let m = double_magnetization(a, b, iota, t, d)?;
                let sym = m.matrix() + r.matrix() * m.matrix() * r.matrix();
                ops.push((format!("M[{a}{b},{iota}]+R"), DenseOperator::new(sym)?));
            }
        }
    }
    GeneratorSet::new(SetLabel::TimeReversal, t, d, 1, ops)
}

fn coproduct(op: &DenseOperator, copies: usize) -> CMat {
    let dim = op.dim();
    let total = dim.pow(copies as u32);
    let mut out = CMat::zeros(total, total);
    for j in 0..copies {
        let left = CMat::identity(dim.pow(j as u32), dim.pow(j as u32));
        let right = CMat::identity(
            dim.pow((copies - 1 - j) as u32),
            dim.pow((copies - 1 - j) as u32),
        );
        out += left.kronecker(op.matrix()).kronecker(&right);
    }
    out
}

/// Coproducts `sum_j 1 ⊗ .. ⊗ X ⊗ .. ⊗ 1` of the magnetizations over `n`
/// copies of `H_{2t}`.
pub fn build_mn_set(t: usize, d: usize, copies: usize) -> Result<GeneratorSet> {
    check_t(t)?;
    if copies == 0 {
        return Err(Error::Validation("need at least one copy".into()));
    }
    let total = (d as u128).pow((2 * t * copies) as u32);
    if total > DENSE_CAP as u128 {
        return Err(Error::DenseCap {
            dim: total.min(usize::MAX as u128) as usize,
            cap: DENSE_CAP,
        });
    }
    let (mut ops, double) = magnetization_ops(t, d)?;
    ops.extend(double);
    let ops = ops
        .into_iter()
        .map(|(name, o)| {
            Ok((
                format!("{name};{copies}"),
                DenseOperator::new(coproduct(&o, copies))?,
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    GeneratorSet::new(SetLabel::Copies(copies), t, d, copies, ops)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CommutantMethod {
    /// Full `D^2 x D^2` superoperator.
    Dense,
    /// Superoperator compressed to the diagonal-compatible sector.
    SectorReduced,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CommutantReport {
    pub dimension: usize,
    /// Eigenvalues counted as zero.
    pub zero_modes: Vec<f64>,
    /// Smallest eigenvalue above the zero ceiling.
    pub gap: f64,
    /// Some eigenvalue lies between the zero ceiling and the gap floor.
    pub ambiguous: bool,
    pub method: CommutantMethod,
    /// Dimension of the space the eigenproblem was solved on.
    pub solved_dim: usize,
    pub n_generators: usize,
    /// Lowest eigenvalues, for audit.
    pub spectrum_head: Vec<f64>,
}

impl CommutantReport {
    fn from_eigenvalues(vals: &[f64], method: CommutantMethod, n_generators: usize) -> Self {
        let zero_modes: Vec<f64> = vals.iter().copied().filter(|&v| v < ZERO_CEILING).collect();
        let gap = vals
            .iter()
            .copied()
            .find(|&v| v >= ZERO_CEILING)
            .unwrap_or(f64::INFINITY);
        Self {
            dimension: zero_modes.len(),
            ambiguous: gap < GAP_FLOOR,
            zero_modes,
            gap,
            method,
            solved_dim: vals.len(),
            n_generators,
            spectrum_head: vals.iter().take(24).copied().collect(),
        }
    }
}

/// Groups basis indices by their diagonal entries on every diagonal member.
fn diagonal_classes(set: &GeneratorSet) -> Vec<usize> {
    let dim = set.dim();
    let diagonal: Vec<&DenseOperator> = set
        .operators
        .iter()
        .filter(|x| (0..dim).all(|r| (0..dim).all(|c| r == c || x[(r, c)].norm() < 1e-14)))
        .collect();
    let mut keys: HashMap<Vec<i64>, usize> = HashMap::new();
    (0..dim)
        .map(|p| {
            let key: Vec<i64> = diagonal
                .iter()
                .flat_map(|x| {
                    let z = x[(p, p)];
                    [(z.re * 1e9).round() as i64, (z.im * 1e9).round() as i64]
                })
                .collect();
            let next = keys.len();
            *keys.entry(key).or_insert(next)
        })
        .collect()
}

/// Pairs `(p, q)` agreeing on every diagonal member, in row-major order.
pub fn compatible_pairs(set: &GeneratorSet) -> Vec<(usize, usize)> {
    let class = diagonal_classes(set);
    let dim = set.dim();
    (0..dim)
        .flat_map(|p| (0..dim).map(move |q| (p, q)))
        .filter(|&(p, q)| class[p] == class[q])
        .collect()
}

/// Folded superoperator restricted to the given pairs.
pub fn compressed_superoperator(set: &GeneratorSet, pairs: &[(usize, usize)]) -> CMat {
    let dim = set.dim();
    let mut h1 = CMat::zeros(dim, dim);
    let mut h2 = CMat::zeros(dim, dim);
    for x in &set.operators {
        h1 += x.matrix().adjoint() * x.matrix();
        h2 += (x.matrix() * x.matrix().adjoint()).map(|z| z.conj());
    }
    let pos: HashMap<(usize, usize), usize> =
        pairs.iter().enumerate().map(|(i, &pq)| (pq, i)).collect();
    let n = pairs.len();
    // Cross terms conj(X_{p'p}) X_{q'q} + X_{pp'} conj(X_{qq'}) from the
    // nonzero entries of each member.
    let cross: Vec<Vec<(usize, usize, C64)>> = set
        .operators
        .par_iter()
        .map(|x| {
            let nz: Vec<(usize, usize, C64)> = (0..dim)
                .flat_map(|r| (0..dim).map(move |c| (r, c)))
                .filter_map(|(r, c)| {
                    let z = x[(r, c)];
                    (z.norm() > 0.0).then_some((r, c, z))
                })
                .collect();
            let mut out = Vec::new();
            for &(rp, cp, zp) in &nz {
                for &(rq, cq, zq) in &nz {
                    // Term 1: X_{p'p} X_{q'q} with (p', p) = (rp, cp), (q', q) = (rq, cq).
                    if let (Some(&i), Some(&j)) = (pos.get(&(cp, cq)), pos.get(&(rp, rq))) {
                        out.push((i, j, zp.conj() * zq));
                    }
                    // Term 2: X_{pp'} conj(X_{qq'}) with (p, p') = (rp, cp), (q, q') = (rq, cq).
                    if let (Some(&i), Some(&j)) = (pos.get(&(rp, rq)), pos.get(&(cp, cq))) {
                        out.push((i, j, zp * zq.conj()));
                    }
                }
            }
            out
        })
        .collect();
    let mut c = CMat::zeros(n, n);
    for (i, &(p, q)) in pairs.iter().enumerate() {
        for (j, &(pp, qq)) in pairs.iter().enumerate() {
            let mut z = ZERO;
            if q == qq {
                z += h1[(p, pp)];
            }
            if p == pp {
                z += h2[(q, qq)];
            }
            c[(i, j)] = z;
        }
    }
    for list in cross {
        for (i, j, z) in list {
            c[(i, j)] -= z;
        }
    }
    c
}

/// Folded superoperator on all of `End(H)` with row-major vectorization.
pub fn dense_superoperator(set: &GeneratorSet) -> Result<CMat> {
    let dim = set.dim();
    let n = dim * dim;
    if n > DENSE_SUPEROPERATOR_CAP {
        return Err(Error::DenseCap {
            dim: n,
            cap: DENSE_SUPEROPERATOR_CAP,
        });
    }
    let one = CMat::identity(dim, dim);
    let mut c = CMat::zeros(n, n);
    for x in &set.operators {
        let xd = x.matrix().adjoint();
        let xt = x.matrix().transpose();
        let xc = x.matrix().map(|z| z.conj());
        c += (&xd * x.matrix()).kronecker(&one);
        c -= xd.kronecker(&xt);
        c -= x.matrix().kronecker(&xc);
        c += one.kronecker(&(&xc * &xt));
    }
    Ok(c)
}

pub fn commutant_dimension_with(
    set: &GeneratorSet,
    method: CommutantMethod,
) -> Result<CommutantReport> {
    let c = match method {
        CommutantMethod::Dense => dense_superoperator(set)?,
        CommutantMethod::SectorReduced => {
            let pairs = compatible_pairs(set);
            if pairs.len() > DENSE_CAP {
                return Err(Error::DenseCap {
                    dim: pairs.len(),
                    cap: DENSE_CAP,
                });
            }
            compressed_superoperator(set, &pairs)
        }
    };
    let herm = (&c + c.adjoint()) * C64::new(0.5, 0.0);
    let (vals, _) = hermitian_eigen(&herm);
    Ok(CommutantReport::from_eigenvalues(&vals, method, set.len()))
}

/// Dimension of the commutant, by the sector-reduced solve.
pub fn commutant_dimension(set: &GeneratorSet) -> Result<CommutantReport> {
    commutant_dimension_with(set, CommutantMethod::SectorReduced)
}

/// Site targets of `Pi^{2 tau}` on `n` positions.
fn double_shift_targets(n: usize, tau: usize) -> Vec<usize> {
    (0..n).map(|p| (p + 2 * tau) % n).collect()
}

/// Site targets of `R Pi^{2 tau}` (translation first).
fn reflected_shift_targets(n: usize, tau: usize) -> Vec<usize> {
    (0..n).map(|p| n - 1 - (p + 2 * tau) % n).collect()
}

fn apply_index_map(map: &[usize], v: &[C64]) -> Vec<C64> {
    let mut out = vec![ZERO; v.len()];
    for (i, &o) in map.iter().enumerate() {
        out[o] = v[i];
    }
    out
}

/// `Q_k` (or `Q'_k` when `reflected`) applied to a state of `H_{2t}`.
pub fn apply_cyclic_projector(
    k: usize,
    reflected: bool,
    v: &[C64],
    t: usize,
    d: usize,
) -> Vec<C64> {
    let n = 2 * t;
    let mut out = vec![ZERO; v.len()];
    for tau in 0..t {
        let targets = if reflected {
            reflected_shift_targets(n, tau)
        } else {
            double_shift_targets(n, tau)
        };
        let phase = C64::from_polar(
            1.0 / t as f64,
            2.0 * std::f64::consts::PI * (tau * k) as f64 / t as f64,
        );
        for (o, x) in out
            .iter_mut()
            .zip(apply_index_map(&permutation_index_map(&targets, d), v))
        {
            *o += phase * x;
        }
    }
    out
}

/// `Q_k = (1/t) sum_tau e^{2 pi i tau k / t} Pi^{2 tau}` and
/// `Q'_k = (1/t) sum_tau e^{2 pi i tau k / t} R Pi^{2 tau}` for `k < t`.
pub fn cyclic_projectors(t: usize, d: usize) -> Result<(Vec<DenseOperator>, Vec<DenseOperator>)> {
    check_t(t)?;
    let n = 2 * t;
    let shifts = (0..t)
        .map(|tau| site_permutation(&double_shift_targets(n, tau), d))
        .collect::<Result<Vec<_>>>()?;
    let reflected = (0..t)
        .map(|tau| site_permutation(&reflected_shift_targets(n, tau), d))
        .collect::<Result<Vec<_>>>()?;
    let dim = shifts[0].dim();
    let combine = |ops: &[DenseOperator], k: usize| {
        let mut m = CMat::zeros(dim, dim);
        for (tau, o) in ops.iter().enumerate() {
            let phase = C64::from_polar(
                1.0 / t as f64,
                2.0 * std::f64::consts::PI * (tau * k) as f64 / t as f64,
            );
            m += o.matrix() * phase;
        }
        DenseOperator::new(m)
    };
    let q = (0..t).map(|k| combine(&shifts, k)).collect::<Result<_>>()?;
    let qr = (0..t)
        .map(|k| combine(&reflected, k))
        .collect::<Result<_>>()?;
    Ok((q, qr))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DihedralReport {
    pub rank: usize,
    /// `tr(A_i^dagger A_j)` over the family `{Pi^{2 tau}} ∪ {R Pi^{2 tau}}`.
    pub gram: Vec<Vec<f64>>,
    pub gram_eigenvalues: Vec<f64>,
}

/// Numerical rank of `{R^m Pi^{2 tau}}` (`m ∈ {0, 1}`, `tau < t`) as vectors of
/// `End(H_{2t})`, from the Gram matrix of overlaps `tr(A^dagger B)`.
pub fn dihedral_rank(t: usize, d: usize) -> Result<DihedralReport> {
    check_t(t)?;
    let n = 2 * t;
    let maps: Vec<Vec<usize>> = (0..t)
        .map(|tau| permutation_index_map(&double_shift_targets(n, tau), d))
        .chain((0..t).map(|tau| permutation_index_map(&reflected_shift_targets(n, tau), d)))
        .collect();
    // For permutation matrices the overlap counts the basis states mapped to
    // the same image.
    let gram: Vec<Vec<f64>> = maps
        .iter()
        .map(|a| {
            maps.iter()
                .map(|b| a.iter().zip(b).filter(|(x, y)| x == y).count() as f64)
                .collect()
        })
        .collect();
    let g = CMat::from_fn(2 * t, 2 * t, |r, c| C64::new(gram[r][c], 0.0));
    let (vals, _) = hermitian_eigen(&g);
    let top = vals.iter().copied().fold(0.0, f64::max);
    let rank = vals.iter().filter(|&&v| v > RANK_TOL * top).count();
    Ok(DihedralReport {
        rank,
        gram,
        gram_eigenvalues: vals,
    })
}

/// Single-excitation momentum state
/// `(1/sqrt(2t)) sum_j e^{i pi k j / t} Pi^j s_+^n |0...0>`, normalized,
/// where `|0>` is the lowest-weight state of `s_3` and `s_+` acts on site 0.
pub fn momentum_state(n: usize, k: usize, t: usize, d: usize) -> Result<Vec<C64>> {
    check_t(t)?;
    if n == 0 || n >= d {
        return Err(Error::Index {
            what: "occupation",
            index: n,
            size: d,
        });
    }
    if k >= 2 * t {
        return Err(Error::Index {
            what: "momentum",
            index: k,
            size: 2 * t,
        });
    }
    let sites = 2 * t;
    let sp = spin_raising(d)?;
    let mut local = CVec::zeros(d);
    local[0] = ONE;
    for _ in 0..n {
        local = sp.matrix() * local;
    }
    let dim = d.pow(sites as u32);
    let stride = d.pow((sites - 1) as u32);
    let mut seed = vec![ZERO; dim];
    for (j, z) in local.iter().enumerate() {
        seed[j * stride] = *z;
    }
    let pi = permutation_index_map(&(0..sites).map(|p| (p + 1) % sites).collect::<Vec<_>>(), d);
    let mut out = vec![ZERO; dim];
    let mut cur = seed;
    for j in 0..sites {
        let phase = C64::from_polar(1.0, std::f64::consts::PI * (k * j) as f64 / t as f64);
        for (o, x) in out.iter_mut().zip(&cur) {
            *o += phase * x;
        }
        cur = apply_index_map(&pi, &cur);
    }
    let nrm = norm(&out);
    if nrm < 1e-12 {
        return Err(Error::Validation("momentum state vanishes".into()));
    }
    out.iter_mut().for_each(|z| *z /= nrm);
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SingularDisorderReport {
    pub rank_first: usize,
    pub rank_second: usize,
    pub singular_values_first: Vec<f64>,
    pub singular_values_second: Vec<f64>,
    pub set_size: usize,
}

fn comm(a: &CMat, b: &CMat) -> CMat {
    a * b - b * a
}

/// The two 15-member sets built from `M_{3,iota}` and `N_iota`: nested
/// commutators `[N, M]`, `[[N, M], M]`, `[[N, M], N]` with the sublattice
/// labels used in the rank argument.
fn singular_set(m: &[CMat; 2], nn: &[CMat; 2]) -> Vec<CMat> {
    let mut out = vec![m[0].clone(), m[1].clone(), nn[0].clone(), nn[1].clone()];
    for i in 0..2 {
        for j in 0..2 {
            let c = comm(&nn[i], &m[j]);
            out.push(comm(&c, &m[j]));
            out.push(c);
        }
    }
    out.push(comm(&comm(&nn[0], &m[0]), &nn[0]));
    out.push(comm(&comm(&nn[0], &m[1]), &nn[0]));
    out.push(comm(&comm(&nn[1], &m[0]), &nn[1]));
    out
}

fn numerical_rank(ops: &[CMat]) -> (usize, Vec<f64>) {
    let rows: Vec<Vec<C64>> = ops.iter().map(vectorize).collect();
    let coeffs = CMat::from_fn(rows.len(), rows[0].len(), |r, c| rows[r][c]);
    let sv = singular_values(&coeffs);
    let top = sv.first().copied().unwrap_or(0.0);
    (sv.iter().filter(|&&s| s > RANK_TOL * top).count(), sv)
}

/// Ranks of the two operator sets certifying the commutant for qubit fields
/// restricted to the `s_3` axis. The first set uses
/// `N = W~^dagger M_3 W~`, the second `N = U~ M_3 U~^dagger`, with `U~`, `W~`
/// the space-direction rows of the two layers.
pub fn singular_disorder_ranks(
    gate_u: &DenseOperator,
    gate_w: &DenseOperator,
    t: usize,
) -> Result<SingularDisorderReport> {
    check_t(t)?;
    if gate_u.dim() != 4 || gate_w.dim() != 4 {
        return Err(Error::Validation(
            "singular-disorder certificates are defined for qubits".into(),
        ));
    }
    for g in [gate_u, gate_w] {
        if !is_dual_unitary(g, DUALITY_TOL)?.passes {
            return Err(Error::Validation("gate is not dual-unitary".into()));
        }
    }
    let d = 2;
    let z = 2;
    let m = [
        sublattice_magnetization(z, 0, t, d)?.into_matrix(),
        sublattice_magnetization(z, 1, t, d)?.into_matrix(),
    ];
    let u = dual_row_operator(gate_u, t, Layer::First)?.into_matrix();
    let w = dual_row_operator(gate_w, t, Layer::Second)?.into_matrix();
    let n_first = [w.adjoint() * &m[0] * &w, w.adjoint() * &m[1] * &w];
    let n_second = [&u * &m[0] * u.adjoint(), &u * &m[1] * u.adjoint()];
    let s1 = singular_set(&m, &n_first);
    let s2 = singular_set(&m, &n_second);
    let (rank_first, singular_values_first) = numerical_rank(&s1);
    let (rank_second, singular_values_second) = numerical_rank(&s2);
    Ok(SingularDisorderReport {
        rank_first,
        rank_second,
        singular_values_first,
        singular_values_second,
        set_size: s1.len(),
    })
}

/// `Gamma(p) (Pi^{2 tau_1} ⊗ ... ⊗ Pi^{2 tau_n})` on `H_{2t}^{⊗n}`, where
/// `Gamma(p)` moves copy `c` to copy `perm[c]`.
pub fn copy_translation(
    perm: &[usize],
    taus: &[usize],
    t: usize,
    d: usize,
) -> Result<DenseOperator> {
    let n = perm.len();
    if taus.len() != n {
        return Err(Error::Shape {
            expected: n,
            got: taus.len(),
        });
    }
    let sites = 2 * t;
    let mut targets = vec![0; sites * n];
    for c in 0..n {
        for p in 0..sites {
            targets[c * sites + p] = perm[c] * sites + (p + 2 * taus[c]) % sites;
        }
    }
    site_permutation(&targets, d)
}

/// All permutations of `0..n` in lexicographic order.
pub fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for first in 0..n {
        for rest in permutations(n - 1) {
            let mut p = vec![first];
            p.extend(rest.into_iter().map(|x| if x >= first { x + 1 } else { x }));
            out.push(p);
        }
    }
    out
}

/// The members `Gamma(p) (Pi^{2 tau_1} ⊗ ...)` spanning the expected commutant
/// of the copy set.
pub fn copy_translation_family(t: usize, d: usize, copies: usize) -> Result<Vec<DenseOperator>> {
    let mut out = Vec::new();
    let total = t.pow(copies as u32);
    for perm in permutations(copies) {
        for idx in 0..total {
            let mut rem = idx;
            let taus: Vec<usize> = (0..copies)
                .map(|_| {
                    let x = rem % t;
                    rem /= t;
                    x
                })
                .collect();
            out.push(copy_translation(&perm, &taus, t, d)?);
        }
    }
    Ok(out)
}

/// Rank of a family of operators viewed as vectors.
pub fn operator_rank(ops: &[DenseOperator]) -> (usize, Vec<f64>) {
    let mats: Vec<CMat> = ops.iter().map(|o| o.matrix().clone()).collect();
    numerical_rank(&mats)
}

/// Shift operator on `2t` sites, exposed for checks against the translations.
pub fn time_shift(t: usize, d: usize) -> Result<DenseOperator> {
    shift_operator(2 * t, d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::swap_gate;
    use crate::gates::{build_dual_gate, sample_rng, DualGateParams};
    use crate::linalg::max_abs_diff;

    fn cycles(perm: &[usize]) -> usize {
        let mut seen = vec![false; perm.len()];
        let mut count = 0;
        for s in 0..perm.len() {
            if !seen[s] {
                count += 1;
                let mut x = s;
                while !seen[x] {
                    seen[x] = true;
                    x = perm[x];
                }
            }
        }
        count
    }

    fn compose(a: &[usize], b: &[usize]) -> Vec<usize> {
        // Apply b, then a.
        b.iter().map(|&x| a[x]).collect()
    }

    fn inverse(a: &[usize]) -> Vec<usize> {
        let mut out = vec![0; a.len()];
        for (i, &x) in a.iter().enumerate() {
            out[x] = i;
        }
        out
    }

    #[test]
    fn set_sizes() {
        let s = build_m_set(1, 2).unwrap();
        assert_eq!(s.len(), 24);
        assert_eq!(s.dim(), 4);
        assert_eq!(build_m_set(2, 3).unwrap().len(), 16 + 128);
        let mt = build_mt_set(2, 2).unwrap();
        assert_eq!(mt.len(), 3 + 18);
        let mn = build_mn_set(1, 2, 2).unwrap();
        assert_eq!(mn.dim(), 16);
        let m1 = build_mn_set(2, 2, 1).unwrap();
        let m = build_m_set(2, 2).unwrap();
        for (a, b) in m1.operators.iter().zip(&m.operators) {
            assert_eq!(a, b);
        }
    }

    #[test]
    fn members_are_hermitian_and_translation_invariant() {
        for (t, d) in [(1, 2), (2, 2), (3, 2), (2, 3)] {
            let s = build_m_set(t, d).unwrap();
            assert!(s.hermitian.iter().all(|&h| h));
            let pi = time_shift(t, d).unwrap();
            let pi2 = pi.matrix() * pi.matrix();
            assert!(s.commutator_residual(&pi2) < 1e-12);
        }
        let mt = build_mt_set(3, 2).unwrap();
        let r = reflection_operator(6, 2).unwrap();
        let pi = time_shift(3, 2).unwrap();
        assert!(mt.commutator_residual(r.matrix()) < 1e-12);
        assert!(mt.commutator_residual(&(pi.matrix() * pi.matrix())) < 1e-12);
        for a in 0..3 {
            let full = full_magnetization(a, 2, 2).unwrap();
            let sum = sublattice_magnetization(a, 0, 2, 2).unwrap().into_matrix()
                + sublattice_magnetization(a, 1, 2, 2).unwrap().into_matrix();
            assert!(max_abs_diff(full.matrix(), &sum) < 1e-14);
        }
    }

    #[test]
    fn copy_set_is_permutation_invariant() {
        let s = build_mn_set(1, 2, 2).unwrap();
        for a in copy_translation_family(1, 2, 2).unwrap() {
            assert!(s.commutator_residual(a.matrix()) < 1e-12);
        }
        let s = build_mn_set(2, 2, 2).unwrap();
        let fam = copy_translation_family(2, 2, 2).unwrap();
        assert_eq!(fam.len(), 8);
        for a in &fam {
            assert!(s.commutator_residual(a.matrix()) < 1e-12);
        }
    }

    #[test]
    fn sector_and_dense_solves_agree() {
        for set in [
            build_m_set(1, 2).unwrap(),
            build_m_set(2, 2).unwrap(),
            build_mt_set(1, 2).unwrap(),
            build_mt_set(2, 2).unwrap(),
            build_m_set(1, 3).unwrap(),
        ] {
            let a = commutant_dimension_with(&set, CommutantMethod::Dense).unwrap();
            let b = commutant_dimension_with(&set, CommutantMethod::SectorReduced).unwrap();
            assert_eq!(a.dimension, b.dimension);
            assert!(!a.ambiguous && !b.ambiguous);
            assert!(b.gap >= a.gap - 1e-9);
        }
    }

    #[test]
    fn compressed_operator_matches_dense_block() {
        let set = build_mt_set(2, 2).unwrap();
        let full = dense_superoperator(&set).unwrap();
        let pairs = compatible_pairs(&set);
        let comp = compressed_superoperator(&set, &pairs);
        let dim = set.dim();
        for (i, &(p, q)) in pairs.iter().enumerate() {
            for (j, &(pp, qq)) in pairs.iter().enumerate() {
                assert!((comp[(i, j)] - full[(p * dim + q, pp * dim + qq)]).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn small_commutant_counts() {
        assert_eq!(
            commutant_dimension(&build_m_set(1, 2).unwrap())
                .unwrap()
                .dimension,
            1
        );
        assert_eq!(
            commutant_dimension(&build_m_set(2, 2).unwrap())
                .unwrap()
                .dimension,
            2
        );
        assert_eq!(
            commutant_dimension(&build_mt_set(2, 2).unwrap())
                .unwrap()
                .dimension,
            4
        );
        // A single generator of a commuting family leaves a large commutant.
        let one = GeneratorSet::new(
            SetLabel::Custom("z".into()),
            1,
            2,
            1,
            vec![("Z0".into(), sublattice_magnetization(2, 0, 1, 2).unwrap())],
        )
        .unwrap();
        assert_eq!(
            commutant_dimension_with(&one, CommutantMethod::Dense)
                .unwrap()
                .dimension,
            8
        );
    }

    #[test]
    fn translations_lie_in_the_commutant() {
        for t in 1..=3 {
            let s = build_m_set(t, 2).unwrap();
            let pi = time_shift(t, 2).unwrap();
            let pi2 = pi.matrix() * pi.matrix();
            let mut cur = CMat::identity(s.dim(), s.dim());
            for _ in 0..t {
                assert!(s.commutator_residual(&cur) < 1e-12);
                cur = &pi2 * cur;
            }
            // A single translation fails on the double magnetizations.
            assert!(s.commutator_residual(pi.matrix()) > 0.1);
        }
    }

    #[test]
    fn projector_algebra() {
        for (t, d) in [(1, 2), (2, 2), (3, 2), (2, 3)] {
            let (q, qr) = cyclic_projectors(t, d).unwrap();
            let dim = q[0].dim();
            let mut sum = CMat::zeros(dim, dim);
            let mut trace_sum = 0.0;
            for (k, a) in q.iter().enumerate() {
                assert!(a.is_hermitian(1e-12));
                for (l, b) in q.iter().enumerate() {
                    let prod = a.matrix() * b.matrix();
                    let expect = if k == l {
                        a.matrix().clone()
                    } else {
                        CMat::zeros(dim, dim)
                    };
                    assert!(max_abs_diff(&prod, &expect) < 1e-10);
                }
                sum += a.matrix();
                trace_sum += a.trace().re;
                // Orbit-counting oracle: a basis orbit of size s contributes
                // to momentum k iff t divides k s.
                let map = permutation_index_map(&double_shift_targets(2 * t, 1), d);
                let mut seen = vec![false; dim];
                let mut count = 0;
                for s0 in 0..dim {
                    if seen[s0] {
                        continue;
                    }
                    let mut size = 0;
                    let mut x = s0;
                    while !seen[x] {
                        seen[x] = true;
                        x = map[x];
                        size += 1;
                    }
                    if (k * size) % t == 0 {
                        count += 1;
                    }
                }
                assert!((a.trace().re - count as f64).abs() < 1e-9, "t={t} k={k}");
            }
            assert!(max_abs_diff(&sum, &CMat::identity(dim, dim)) < 1e-10);
            assert!((trace_sum - dim as f64).abs() < 1e-9);
            // Q'_k is Q_k composed with the reflection.
            let r = reflection_operator(2 * t, d).unwrap();
            for (a, b) in q.iter().zip(&qr) {
                assert!(max_abs_diff(&(r.matrix() * a.matrix()), b.matrix()) < 1e-10);
            }
        }
    }

    #[test]
    fn dihedral_gram_matches_cycle_counts() {
        for t in 1..=5 {
            let rep = dihedral_rank(t, 2).unwrap();
            assert_eq!(rep.rank, 2 * t);
            let n = 2 * t;
            let fam: Vec<Vec<usize>> = (0..t)
                .map(|tau| double_shift_targets(n, tau))
                .chain((0..t).map(|tau| reflected_shift_targets(n, tau)))
                .collect();
            for (i, a) in fam.iter().enumerate() {
                for (j, b) in fam.iter().enumerate() {
                    // tr(P_a^T P_b) = d^{cycles(a^{-1} b)}.
                    let expect = 2f64.powi(cycles(&compose(&inverse(a), b)) as i32);
                    assert_eq!(rep.gram[i][j], expect);
                }
            }
        }
        assert_eq!(dihedral_rank(2, 3).unwrap().rank, 4);
    }

    #[test]
    fn momentum_state_witnesses() {
        for t in 1..=4 {
            for n in 1..2 {
                let zero = momentum_state(n, 0, t, 2).unwrap();
                let top = momentum_state(n, t, t, 2).unwrap();
                assert!((norm(&zero) - 1.0).abs() < 1e-12);
                let diff = |a: &[C64], b: &[C64], s: f64| {
                    a.iter()
                        .zip(b)
                        .map(|(x, y)| (x - y * s).norm())
                        .fold(0.0, f64::max)
                };
                assert!(diff(&apply_cyclic_projector(0, false, &zero, t, 2), &zero, 1.0) < 1e-10);
                assert!(diff(&apply_cyclic_projector(0, true, &zero, t, 2), &zero, 1.0) < 1e-10);
                assert!(diff(&apply_cyclic_projector(0, false, &top, t, 2), &top, 1.0) < 1e-10);
                assert!(diff(&apply_cyclic_projector(0, true, &top, t, 2), &top, -1.0) < 1e-10);
            }
        }
        // Eigenvector of the single shift with eigenvalue e^{-i pi k / t}.
        let (t, d) = (3, 3);
        let pi = time_shift(t, d).unwrap();
        for n in 1..d {
            for k in 0..2 * t {
                let v = momentum_state(n, k, t, d).unwrap();
                let pv = pi.matrix() * CVec::from_column_slice(&v);
                let lambda = C64::from_polar(1.0, -std::f64::consts::PI * k as f64 / t as f64);
                let r: f64 = pv
                    .iter()
                    .zip(&v)
                    .map(|(x, y)| (x - lambda * y).norm())
                    .fold(0.0, f64::max);
                assert!(r < 1e-12);
            }
        }
        assert!(momentum_state(0, 0, 2, 2).is_err());
        assert!(momentum_state(1, 4, 2, 2).is_err());
    }

    #[test]
    fn singular_disorder_generic_and_degenerate() {
        let mut rng = sample_rng(31, 0);
        let range = (0.3, std::f64::consts::PI - 0.3);
        let mut full = 0;
        for _ in 0..10 {
            let u = build_dual_gate(&DualGateParams::random(2, range, &mut rng), 2).unwrap();
            let w = build_dual_gate(&DualGateParams::random(2, range, &mut rng), 2).unwrap();
            let rep = singular_disorder_ranks(&u, &w, 2).unwrap();
            assert_eq!(rep.set_size, 15);
            if rep.rank_first == 15 && rep.rank_second == 15 {
                full += 1;
            }
        }
        assert!(full >= 9);
        let u = build_dual_gate(&DualGateParams::random(2, range, &mut rng), 2).unwrap();
        let rep = singular_disorder_ranks(&u, &swap_gate(2).unwrap(), 2).unwrap();
        assert!(rep.rank_first < 15);
        assert!(singular_disorder_ranks(&u, &DenseOperator::identity(4), 2).is_err());
    }

    #[test]
    fn permutation_listing() {
        let p = permutations(3);
        assert_eq!(p.len(), 6);
        assert_eq!(p[0], vec![0, 1, 2]);
    }
}

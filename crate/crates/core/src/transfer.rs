//! Space-direction transfer matrix of the disorder-averaged form factor.
//!
//! The doubled space holds `n` forward and `n` backward copies of the `2t`
//! time segments of a wire; leg `c * 2t + s` is segment `s` of copy `c`, the
//! forward copies coming first. A vector of this space is the row-major
//! vectorization of an operator on `H_{2t}^{\otimes n}`, so that applying
//! `X (x) X^*` maps `A` to `X A X^dagger`.
//!
//! One cell of the chain contributes the integer-site fields, the first-layer
//! column, the half-odd-site fields and the second-layer column, in that
//! order. Integer-site fields enter through transposed generators, half-odd
//! ones through the generators themselves. Their averages factorize over the
//! field types: `u` fields sit on the odd segments, `w` fields on the even
//! ones; in time-reversal mode one shared field covers all segments.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::algebra::{shift_operator, DenseOperator, DENSE_CAP};
use crate::circuit::{dual_row_operator, matrix_power, Layer};
use crate::error::{Error, Result};
use crate::gates::{
    field_to_gate, is_dual_unitary, DensityKind, DisorderDistribution, DUALITY_TOL, FIELD_U,
    FIELD_W,
};
use crate::linalg::{
    eigenvalues, largest_singular_value, leading_eigenvalues, norm, singular_values, vectorize,
    CMat, CVec, KrylovOptions, LocalOp, C64, ONE, ZERO,
};
use crate::quadrature::{normal_rule, product_rule, uniform_rule};

/// Eigenvalue gap floor used when counting unimodular eigenvalues.
pub const GAP_FLOOR: f64 = 1e-4;

/// Largest doubled dimension for which the full spectrum is computed densely.
pub const DENSE_SPECTRUM_CAP: usize = 256;

/// Largest doubled dimension for dense matrix powers.
pub const DENSE_POWER_CAP: usize = 1024;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuadratureConfig {
    /// Gauss nodes per active field component.
    pub nodes_per_axis: usize,
    /// Above this many product nodes the average switches to Monte Carlo.
    pub max_product_nodes: usize,
    pub mc_samples: usize,
    pub mc_seed: u64,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self {
            nodes_per_axis: 9,
            max_product_nodes: 20_000,
            mc_samples: 20_000,
            mc_seed: 17,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RuleKind {
    Product,
    MonteCarlo,
}

/// Weighted field vectors approximating the density of one field type on
/// one site sublattice.
pub fn field_rule(
    dist: &DisorderDistribution,
    field: usize,
    sublattice: usize,
    cfg: &QuadratureConfig,
) -> (RuleKind, Vec<(f64, Vec<f64>)>) {
    let n = dist.n_components();
    let active = dist.active_components();
    let count = (cfg.nodes_per_axis as f64).powi(active.len() as i32);
    if count <= cfg.max_product_nodes as f64 {
        let axes: Vec<Vec<(f64, f64)>> = active
            .iter()
            .map(|&a| {
                let w = dist.width(a, field, sublattice);
                match dist.kind {
                    DensityKind::Gaussian => normal_rule(cfg.nodes_per_axis, w),
                    DensityKind::Box => uniform_rule(cfg.nodes_per_axis, w),
                }
            })
            .collect();
        let nodes = product_rule(&axes)
            .into_iter()
            .map(|(w, pt)| {
                let mut theta = vec![0.0; n];
                for (&a, x) in active.iter().zip(pt) {
                    theta[a] = x;
                }
                (w, theta)
            })
            .collect();
        (RuleKind::Product, nodes)
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.mc_seed);
        rng.set_stream((field * 2 + sublattice) as u64);
        let weight = 1.0 / cfg.mc_samples as f64;
        let nodes = (0..cfg.mc_samples)
            .map(|_| {
                let mut theta = vec![0.0; n];
                for &a in &active {
                    theta[a] = dist.draw_component(a, field, sublattice, &mut rng);
                }
                (weight, theta)
            })
            .collect();
        (RuleKind::MonteCarlo, nodes)
    }
}

/// Average of `g^{(x) k} (x) conj(g)^{(x) k}` over one field density, acting
/// on a chosen set of legs of the doubled space.
#[derive(Clone, Debug)]
pub struct AveragingOperator {
    /// 0 for integer sites, 1 for half-odd sites.
    pub site_sublattice: usize,
    /// Field type, or `None` for the shared time-reversal field.
    pub field: Option<usize>,
    pub rule: RuleKind,
    pub n_nodes: usize,
    pub legs: Vec<usize>,
    pub matrix: CMat,
    op: LocalOp,
}

impl AveragingOperator {
    pub fn apply_in_place(&self, v: &mut [C64]) {
        self.op.apply_in_place(v);
    }
}

fn kron_power(g: &CMat, k: usize) -> CMat {
    let mut out = CMat::identity(1, 1);
    for _ in 0..k {
        out = out.kronecker(g);
    }
    out
}

#[allow(clippy::too_many_arguments)]
fn build_averaging(
    dist: &DisorderDistribution,
    cfg: &QuadratureConfig,
    site_sublattice: usize,
    field: Option<usize>,
    segments: &[usize],
    t: usize,
    copies: usize,
) -> Result<AveragingOperator> {
    let d = dist.d;
    let n_legs = 4 * t * copies;
    let mut legs = Vec::new();
    for c in 0..2 * copies {
        for &s in segments {
            legs.push(c * 2 * t + s);
        }
    }
    let k = segments.len() * copies;
    let block = d.pow(2 * k as u32);
    if block > DENSE_CAP {
        return Err(Error::DenseCap {
            dim: block,
            cap: DENSE_CAP,
        });
    }
    let transposed = site_sublattice == 0;
    let density_field = field.unwrap_or(FIELD_U);
    let (rule, nodes) = field_rule(dist, density_field, site_sublattice, cfg);
    let mut matrix = CMat::zeros(block, block);
    for (w, theta) in &nodes {
        let g = field_to_gate(theta, d, transposed)?.into_matrix();
        let fwd = kron_power(&g, k);
        let bwd = fwd.map(|z| z.conj());
        matrix += fwd.kronecker(&bwd) * C64::new(*w, 0.0);
    }
    let op = LocalOp::new(n_legs, d, &legs, &matrix)?;
    Ok(AveragingOperator {
        site_sublattice,
        field,
        rule,
        n_nodes: nodes.len(),
        legs,
        matrix,
        op,
    })
}

/// Everything needed to apply the transfer matrix on the doubled space.
#[derive(Clone, Debug)]
pub struct TransferContext {
    pub d: usize,
    pub t: usize,
    /// Moment order `n`: number of forward (and backward) copies.
    pub copies: usize,
    pub first_row: DenseOperator,
    pub second_row: DenseOperator,
    pub disorder: DisorderDistribution,
    pub quadrature: QuadratureConfig,
    pub time_reversal: bool,
    /// Averages for integer sites (index 0) and half-odd sites (index 1).
    pub averaging: [Vec<AveragingOperator>; 2],
    rows: [Vec<LocalOp>; 2],
}

impl TransferContext {
    pub fn new(
        first: &DenseOperator,
        second: &DenseOperator,
        t: usize,
        disorder: &DisorderDistribution,
        quadrature: &QuadratureConfig,
    ) -> Result<Self> {
        Self::with_copies(first, second, t, 1, disorder, quadrature)
    }

    pub fn with_copies(
        first: &DenseOperator,
        second: &DenseOperator,
        t: usize,
        copies: usize,
        disorder: &DisorderDistribution,
        quadrature: &QuadratureConfig,
    ) -> Result<Self> {
        let d = disorder.d;
        if t == 0 || copies == 0 {
            return Err(Error::Validation(
                "need t >= 1 and at least one copy".into(),
            ));
        }
        for g in [first, second] {
            if g.dim() != d * d {
                return Err(Error::Shape {
                    expected: d * d,
                    got: g.dim(),
                });
            }
            let r = is_dual_unitary(g, DUALITY_TOL)?;
            if !r.passes {
                return Err(Error::Validation(format!(
                    "gate is not dual-unitary (residuals {:.2e}, {:.2e}); the row operators would not be unitary",
                    r.unitarity_residual, r.dual_unitarity_residual
                )));
            }
        }
        let first_row = dual_row_operator(first, t, Layer::First)?;
        let second_row = dual_row_operator(second, t, Layer::Second)?;
        let n_legs = 4 * t * copies;
        let row_ops = |row: &DenseOperator| -> Result<Vec<LocalOp>> {
            let conj = row.matrix().map(|z| z.conj());
            (0..2 * copies)
                .map(|c| {
                    let legs: Vec<usize> = (c * 2 * t..(c + 1) * 2 * t).collect();
                    let m = if c < copies { row.matrix() } else { &conj };
                    LocalOp::new(n_legs, d, &legs, m)
                })
                .collect()
        };
        let rows = [row_ops(&first_row)?, row_ops(&second_row)?];
        let even: Vec<usize> = (0..2 * t).step_by(2).collect();
        let odd: Vec<usize> = (1..2 * t).step_by(2).collect();
        let all: Vec<usize> = (0..2 * t).collect();
        let mut averaging: [Vec<AveragingOperator>; 2] = [Vec::new(), Vec::new()];
        for (s, slot) in averaging.iter_mut().enumerate() {
            if disorder.active_components().is_empty() {
                continue;
            }
            if disorder.time_reversal {
                slot.push(build_averaging(
                    disorder, quadrature, s, None, &all, t, copies,
                )?);
            } else {
                slot.push(build_averaging(
                    disorder,
                    quadrature,
                    s,
                    Some(FIELD_U),
                    &odd,
                    t,
                    copies,
                )?);
                slot.push(build_averaging(
                    disorder,
                    quadrature,
                    s,
                    Some(FIELD_W),
                    &even,
                    t,
                    copies,
                )?);
            }
        }
        Ok(Self {
            d,
            t,
            copies,
            first_row,
            second_row,
            disorder: disorder.clone(),
            quadrature: quadrature.clone(),
            time_reversal: disorder.time_reversal,
            averaging,
            rows,
        })
    }

    /// Doubled-space dimension `d^{4tn}`.
    pub fn dim(&self) -> usize {
        self.d.pow((4 * self.t * self.copies) as u32)
    }

    fn check_len(&self, v: &[C64]) -> Result<()> {
        if v.len() != self.dim() {
            return Err(Error::Shape {
                expected: self.dim(),
                got: v.len(),
            });
        }
        Ok(())
    }

    /// Applies the averaged field operator of one site sublattice.
    pub fn averaging_apply(&self, v: &[C64], site_sublattice: usize) -> Result<Vec<C64>> {
        self.check_len(v)?;
        let mut out = v.to_vec();
        for a in &self.averaging[site_sublattice] {
            a.apply_in_place(&mut out);
        }
        Ok(out)
    }

    pub fn apply_in_place(&self, v: &mut [C64]) {
        for a in &self.averaging[0] {
            a.apply_in_place(v);
        }
        for r in &self.rows[0] {
            r.apply_in_place(v);
        }
        for a in &self.averaging[1] {
            a.apply_in_place(v);
        }
        for r in &self.rows[1] {
            r.apply_in_place(v);
        }
    }

    /// One application of the transfer matrix.
    pub fn transfer_apply(&self, v: &[C64]) -> Result<Vec<C64>> {
        self.check_len(v)?;
        let mut out = v.to_vec();
        self.apply_in_place(&mut out);
        Ok(out)
    }

    /// Dense transfer matrix, built column by column.
    pub fn dense(&self) -> Result<CMat> {
        let n = self.dim();
        if n > DENSE_CAP {
            return Err(Error::DenseCap {
                dim: n,
                cap: DENSE_CAP,
            });
        }
        let mut m = CMat::zeros(n, n);
        let mut col = vec![ZERO; n];
        for c in 0..n {
            col.iter_mut().for_each(|z| *z = ZERO);
            col[c] = ONE;
            self.apply_in_place(&mut col);
            for (r, z) in col.iter().enumerate() {
                m[(r, c)] = *z;
            }
        }
        Ok(m)
    }
}

/// `tr T^L` by dense powers (`D <= 1024`) or a basis sweep.
pub fn trace_transfer_power(ctx: &TransferContext, cells: usize) -> Result<C64> {
    let n = ctx.dim();
    if n <= DENSE_POWER_CAP {
        return Ok(matrix_power(&ctx.dense()?, cells).trace());
    }
    let work = n as u128 * cells as u128;
    if work > 1 << 22 {
        return Err(Error::Resource(format!(
            "basis sweep of {n} vectors over {cells} cells exceeds the budget"
        )));
    }
    let mut total = ZERO;
    let mut v = vec![ZERO; n];
    for i in 0..n {
        v.iter_mut().for_each(|z| *z = ZERO);
        v[i] = ONE;
        for _ in 0..cells {
            ctx.apply_in_place(&mut v);
        }
        total += v[i];
    }
    Ok(total)
}

/// `tr T^L` for every `L` in `cells`, from the full spectrum.
pub fn trace_curve_from_spectrum(eigs: &[C64], cells: &[usize]) -> Vec<C64> {
    cells
        .iter()
        .map(|&l| eigs.iter().map(|z| z.powu(l as u32)).sum())
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrumReport {
    /// Eigenvalues by decreasing modulus (all of them on the dense path).
    pub eigenvalues: Vec<C64>,
    pub unimodular_count: usize,
    /// An eigenvalue sits in the band between clearly unimodular and clearly
    /// contracting.
    pub ambiguous: bool,
    pub spectral_radius: f64,
    /// Largest modulus among the non-unimodular eigenvalues.
    pub subleading_modulus: f64,
    pub residuals: Vec<f64>,
    pub method: String,
}

/// Classifies eigenvalues: unimodular when `|z| > 1 - 10 gap`, ambiguous when
/// `1 - 100 gap < |z| <= 1 - 10 gap`.
pub fn classify(mut eigs: Vec<C64>, residuals: Vec<f64>, method: &str, gap: f64) -> SpectrumReport {
    eigs.sort_by(|a, b| b.norm().total_cmp(&a.norm()));
    let hi = 1.0 - 10.0 * gap;
    let lo = 1.0 - 100.0 * gap;
    let unimodular_count = eigs.iter().filter(|z| z.norm() > hi).count();
    let ambiguous = eigs.iter().any(|z| z.norm() > lo && z.norm() <= hi);
    let subleading_modulus = eigs.get(unimodular_count).map_or(0.0, |z| z.norm());
    SpectrumReport {
        spectral_radius: eigs.first().map_or(0.0, |z| z.norm()),
        eigenvalues: eigs,
        unimodular_count,
        ambiguous,
        subleading_modulus,
        residuals,
        method: method.to_string(),
    }
}

/// Leading eigenvalues: full dense spectrum for `D <= 256`, otherwise the
/// `k` largest by restarted block Krylov iteration.
pub fn leading_spectrum(ctx: &TransferContext, k: usize) -> Result<SpectrumReport> {
    if ctx.dim() <= DENSE_SPECTRUM_CAP {
        let eigs = eigenvalues(&ctx.dense()?)?;
        return Ok(classify(eigs, Vec::new(), "dense", GAP_FLOOR));
    }
    if k > 32 {
        return Err(Error::Validation("at most 32 leading eigenvalues".into()));
    }
    let opts = KrylovOptions {
        subspace: (4 * k).max(48),
        block: (2 * ctx.t * ctx.copies).max(4) + 2,
        tol: 1e-9,
        max_restarts: 600,
        seed: 0x7a5f,
    };
    let res = leading_eigenvalues(
        |x| {
            let mut v = x.to_vec();
            ctx.apply_in_place(&mut v);
            v
        },
        ctx.dim(),
        k,
        &opts,
    )?;
    Ok(classify(res.values, res.residuals, "krylov", GAP_FLOOR))
}

pub fn spectral_radius(ctx: &TransferContext) -> Result<f64> {
    Ok(leading_spectrum(ctx, 4)?.spectral_radius)
}

/// Vectorized double translations `|Pi^{2 tau}>` for `tau < t`. Their
/// overlaps are `d^{gcd(2(a - b), 2t)}`, so they are linearly independent but
/// not orthogonal.
pub fn translation_vectors(t: usize, d: usize) -> Result<Vec<Vec<C64>>> {
    let pi = shift_operator(2 * t, d)?;
    let pi2 = pi.matrix() * pi.matrix();
    let n = pi2.nrows();
    let mut cur = CMat::identity(n, n);
    let mut out = Vec::with_capacity(t);
    for _ in 0..t {
        out.push(vectorize(&cur));
        cur = &pi2 * cur;
    }
    Ok(out)
}

/// Orthogonal projector onto the span of the vectorized double translations.
pub fn eigenspace_projector(t: usize, d: usize) -> Result<CMat> {
    let vs = translation_vectors(t, d)?;
    let dim = vs[0].len();
    if dim > DENSE_CAP {
        return Err(Error::DenseCap {
            dim,
            cap: DENSE_CAP,
        });
    }
    let v = CMat::from_fn(dim, t, |r, c| vs[c][r]);
    let gram = v.adjoint() * &v;
    let inv = gram
        .try_inverse()
        .ok_or_else(|| Error::Validation("singular translation Gram matrix".into()))?;
    Ok(&v * inv * v.adjoint())
}

/// `(1 - P) T_a T_b (1 - P)` for two contexts sharing `(t, d)`.
pub fn block_remainder(a: &TransferContext, b: &TransferContext) -> Result<CMat> {
    if a.t != b.t || a.d != b.d || a.copies != 1 || b.copies != 1 {
        return Err(Error::Validation("contexts must share t and d".into()));
    }
    let p = eigenspace_projector(a.t, a.d)?;
    let q = CMat::identity(p.nrows(), p.nrows()) - p;
    Ok(&q * a.dense()? * b.dense()? * &q)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlockNorm {
    /// Operator norm from Lanczos on `R^dagger R`.
    pub norm: f64,
    /// Same quantity from a dense singular value decomposition.
    pub norm_svd: f64,
    /// `1 - norm`.
    pub contraction: f64,
    pub lanczos_residual: f64,
}

/// Operator norm of the two-cell remainder block.
pub fn inhomogeneous_block_norm(a: &TransferContext, b: &TransferContext) -> Result<BlockNorm> {
    let r = block_remainder(a, b)?;
    let ra = r.adjoint();
    let n = r.nrows();
    let (norm, res) = largest_singular_value(
        |x| (&r * CVec::from_column_slice(x)).as_slice().to_vec(),
        |x| (&ra * CVec::from_column_slice(x)).as_slice().to_vec(),
        n,
        1e-13,
        n,
        0xb10c,
    )?;
    let norm_svd = singular_values(&r)[0];
    Ok(BlockNorm {
        norm,
        norm_svd,
        contraction: 1.0 - norm,
        lanczos_residual: res,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InhomogeneousTrace {
    /// `tr(T_{L-1} ... T_0)`.
    pub raw: C64,
    /// `tr` of the product of remainder blocks.
    pub remainder: C64,
    /// `t + remainder`.
    pub decomposed: C64,
}

/// Trace of a product of per-cell transfer matrices, cell 0 acting first,
/// together with its decomposition into the translation part and the
/// product of two-cell remainder blocks.
pub fn inhomogeneous_trace(cells: &[TransferContext]) -> Result<InhomogeneousTrace> {
    let l = cells.len();
    if l == 0 || !l.is_multiple_of(2) {
        return Err(Error::Validation(
            "need an even, nonzero number of cells".into(),
        ));
    }
    let t = cells[0].t;
    let dim = cells[0].dim();
    let mut raw = CMat::identity(dim, dim);
    for c in cells {
        raw = c.dense()? * raw;
    }
    let mut rem = CMat::identity(dim, dim);
    for pair in cells.chunks(2) {
        rem = block_remainder(&pair[1], &pair[0])? * rem;
    }
    let remainder = rem.trace();
    Ok(InhomogeneousTrace {
        raw: raw.trace(),
        remainder,
        decomposed: C64::new(t as f64, 0.0) + remainder,
    })
}

/// Largest `||T^k v|| / ||v||` over `k <= steps`.
pub fn max_growth(ctx: &TransferContext, v: &[C64], steps: usize) -> Result<f64> {
    ctx.check_len(v)?;
    let n0 = norm(v);
    let mut x = v.to_vec();
    let mut worst: f64 = 1.0;
    for _ in 0..steps {
        ctx.apply_in_place(&mut x);
        worst = worst.max(norm(&x) / n0);
    }
    Ok(worst)
}

/// First `L` at which `sum_{i >= keep} |z_i|^L` drops below `tol`, for
/// eigenvalues sorted by decreasing modulus.
pub fn envelope_crossing(eigs: &[C64], keep: usize, tol: f64, max_cells: usize) -> Option<usize> {
    let tail: Vec<f64> = eigs.iter().skip(keep).map(|z| z.norm()).collect();
    (1..=max_cells).find(|&l| tail.iter().map(|m| m.powi(l as i32)).sum::<f64>() < tol)
}

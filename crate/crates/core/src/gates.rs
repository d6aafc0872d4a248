//! Dual-unitary two-site gates, Haar sampling and on-site disorder fields.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};
use serde::{Deserialize, Serialize};

use crate::algebra::{gell_mann_generators, n_generators, spin_matrices, swap_gate, DenseOperator};
use crate::error::{Error, Result};
use crate::linalg::{expm_i_hermitian, max_abs, CMat, C64};

/// Tolerance for unitarity and dual-unitarity checks.
pub const DUALITY_TOL: f64 = 1e-10;

/// `(u1, u2, u3, u4, J)` of `(u1 x u2) S exp(i J s3 x s3) (u3 x u4)`.
#[derive(Clone, Debug)]
pub struct DualGateParams {
    pub u: [DenseOperator; 4],
    pub coupling: f64,
}

impl DualGateParams {
    pub fn identity_locals(d: usize, coupling: f64) -> Self {
        let one = DenseOperator::identity(d);
        Self {
            u: [one.clone(), one.clone(), one.clone(), one],
            coupling,
        }
    }

    /// Haar-random single-site unitaries and a coupling drawn uniformly from `range`.
    pub fn random(d: usize, range: (f64, f64), rng: &mut impl Rng) -> Self {
        let u = [
            haar_unitary(d, rng),
            haar_unitary(d, rng),
            haar_unitary(d, rng),
            haar_unitary(d, rng),
        ];
        let coupling = rng.random_range(range.0..=range.1);
        Self { u, coupling }
    }

    /// Vanishing coupling means the gate is a dressed SWAP.
    pub fn is_interacting(&self) -> bool {
        self.coupling != 0.0
    }
}

/// `exp(i J s3 x s3)`, a diagonal two-qudit phase.
pub fn ising_phase(d: usize, coupling: f64) -> Result<DenseOperator> {
    let [_, _, s3] = spin_matrices(d)?;
    let mut m = CMat::zeros(d * d, d * d);
    for i in 0..d {
        for j in 0..d {
            let phase = coupling * s3[(i, i)].re * s3[(j, j)].re;
            m[(i * d + j, i * d + j)] = C64::from_polar(1.0, phase);
        }
    }
    DenseOperator::new(m)
}

fn check_unitary(op: &DenseOperator, d: usize, what: &str) -> Result<()> {
    if op.dim() != d {
        return Err(Error::Shape {
            expected: d,
            got: op.dim(),
        });
    }
    let r = op.unitarity_residual();
    if r >= DUALITY_TOL {
        return Err(Error::Validation(format!(
            "{what} is not unitary (residual {r:.2e})"
        )));
    }
    Ok(())
}

/// `(u1 x u2) S exp(i J s3 x s3) (u3 x u4)`.
pub fn build_dual_gate(p: &DualGateParams, d: usize) -> Result<DenseOperator> {
    for (i, u) in p.u.iter().enumerate() {
        check_unitary(u, d, &format!("u{}", i + 1))?;
    }
    if !p.coupling.is_finite() {
        return Err(Error::Validation("coupling must be finite".into()));
    }
    let left = p.u[0].kron(&p.u[1]);
    let right = p.u[2].kron(&p.u[3]);
    let core = swap_gate(d)?.matrix() * ising_phase(d, p.coupling)?.matrix();
    DenseOperator::new(left.matrix() * core * right.matrix())
}

/// `(u1 x u2) S exp(i J s3 x s3) (u1^T x u2^T)`, a symmetric dual-unitary gate.
pub fn build_time_reversal_gate(
    u1: &DenseOperator,
    u2: &DenseOperator,
    coupling: f64,
    d: usize,
) -> Result<DenseOperator> {
    let p = DualGateParams {
        u: [u1.clone(), u2.clone(), u1.transpose(), u2.transpose()],
        coupling,
    };
    build_dual_gate(&p, d)
}

fn local_dim(op: &DenseOperator) -> Result<usize> {
    let n = op.dim();
    let d = (n as f64).sqrt().round() as usize;
    if d * d != n || d < 1 {
        return Err(Error::Validation(format!("dimension {n} is not a square")));
    }
    Ok(d)
}

/// Space-time reshuffle `O~_{jl,ik} = O_{ij,kl}` with composite index `i d + j`.
pub fn dual_reshuffle(op: &DenseOperator) -> Result<DenseOperator> {
    let d = local_dim(op)?;
    let mut m = CMat::zeros(d * d, d * d);
    for i in 0..d {
        for j in 0..d {
            for k in 0..d {
                for l in 0..d {
                    m[(j * d + l, i * d + k)] = op[(i * d + j, k * d + l)];
                }
            }
        }
    }
    DenseOperator::new(m)
}

/// Inverse of [`dual_reshuffle`].
pub fn dual_unreshuffle(op: &DenseOperator) -> Result<DenseOperator> {
    let d = local_dim(op)?;
    let mut m = CMat::zeros(d * d, d * d);
    for i in 0..d {
        for j in 0..d {
            for k in 0..d {
                for l in 0..d {
                    m[(i * d + j, k * d + l)] = op[(j * d + l, i * d + k)];
                }
            }
        }
    }
    DenseOperator::new(m)
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct DualityReport {
    pub unitarity_residual: f64,
    pub dual_unitarity_residual: f64,
    pub passes: bool,
}

/// Unitarity residuals of a gate and of its reshuffle.
pub fn is_dual_unitary(op: &DenseOperator, tol: f64) -> Result<DualityReport> {
    let u = op.unitarity_residual();
    let dual = dual_reshuffle(op)?.unitarity_residual();
    Ok(DualityReport {
        unitarity_residual: u,
        dual_unitarity_residual: dual,
        passes: u < tol && dual < tol,
    })
}

/// Haar-distributed unitary: QR of a complex Ginibre matrix with the phases
/// of the diagonal of R moved into Q.
pub fn haar_unitary(d: usize, rng: &mut impl Rng) -> DenseOperator {
    let z = CMat::from_fn(d, d, |_, _| {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        C64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
    });
    let qr = z.qr();
    let mut q = qr.q();
    let r = qr.r();
    for (c, mut col) in q.column_iter_mut().enumerate() {
        let rc = r[(c, c)];
        if rc.norm() > 0.0 {
            col *= rc / rc.norm();
        }
    }
    DenseOperator::new(q).expect("finite")
}

/// `exp(i theta . sigma)`, or `exp(i theta . sigma^T)` when `transposed`.
pub fn field_to_gate(theta: &[f64], d: usize, transposed: bool) -> Result<DenseOperator> {
    let gens = gell_mann_generators(d)?;
    if theta.len() != gens.len() {
        return Err(Error::Shape {
            expected: gens.len(),
            got: theta.len(),
        });
    }
    let mut h = CMat::zeros(d, d);
    for (g, &x) in gens.iter().zip(theta) {
        if x != 0.0 {
            h += g.matrix() * C64::new(x, 0.0);
        }
    }
    if transposed {
        h = h.transpose();
    }
    DenseOperator::new(expm_i_hermitian(&h))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DensityKind {
    Gaussian,
    Box,
}

/// Field type: `u` fields dress the first layer, `w` fields the second.
pub const FIELD_U: usize = 0;
pub const FIELD_W: usize = 1;

/// Product density of on-site fields.
///
/// Widths are indexed by generator `a`, field type (`u` or `w`) and the
/// sublattice of the site (integer or half-odd). Masked components are
/// identically zero. In time-reversal mode every site carries one field shared
/// by `u` and `w = u^T`, drawn with the `u` widths.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DisorderDistribution {
    pub d: usize,
    pub kind: DensityKind,
    widths: Vec<f64>,
    active: Vec<bool>,
    pub time_reversal: bool,
}

impl DisorderDistribution {
    pub fn isotropic(d: usize, kind: DensityKind, width: f64, time_reversal: bool) -> Result<Self> {
        let n = n_generators(d);
        Self::new(d, kind, vec![width; 4 * n], vec![true; n], time_reversal)
    }

    /// Default on-site disorder: gaussian, width 0.2 on every component.
    pub fn default_for(d: usize, time_reversal: bool) -> Result<Self> {
        Self::isotropic(d, DensityKind::Gaussian, 0.2, time_reversal)
    }

    pub fn new(
        d: usize,
        kind: DensityKind,
        widths: Vec<f64>,
        active: Vec<bool>,
        time_reversal: bool,
    ) -> Result<Self> {
        let n = n_generators(d);
        if d < 2 {
            return Err(Error::InvalidDimension(d));
        }
        if widths.len() != 4 * n || active.len() != n {
            return Err(Error::Shape {
                expected: 4 * n,
                got: widths.len(),
            });
        }
        let dist = Self {
            d,
            kind,
            widths,
            active,
            time_reversal,
        };
        for a in 0..n {
            if !dist.active[a] {
                continue;
            }
            for f in 0..2 {
                for s in 0..2 {
                    let w = dist.width(a, f, s);
                    if !(w > 0.0 && w.is_finite()) {
                        return Err(Error::Validation(format!(
                            "width of component {a} (field {f}, sublattice {s}) must be positive"
                        )));
                    }
                }
            }
        }
        Ok(dist)
    }

    /// Restricts the fields to the listed generator components.
    pub fn with_mask(mut self, active_components: &[usize]) -> Result<Self> {
        let n = n_generators(self.d);
        let mut active = vec![false; n];
        for &a in active_components {
            if a >= n {
                return Err(Error::Index {
                    what: "generator",
                    index: a,
                    size: n,
                });
            }
            active[a] = true;
        }
        self.active = active;
        Ok(self)
    }

    pub fn n_components(&self) -> usize {
        n_generators(self.d)
    }

    pub fn width(&self, a: usize, field: usize, sublattice: usize) -> f64 {
        self.widths[(a * 2 + field) * 2 + sublattice]
    }

    pub fn widths(&self) -> &[f64] {
        &self.widths
    }

    pub fn is_active(&self, a: usize) -> bool {
        self.active[a]
    }

    pub fn active_components(&self) -> Vec<usize> {
        (0..self.n_components())
            .filter(|&a| self.active[a])
            .collect()
    }

    pub fn is_singular(&self) -> bool {
        self.active.iter().any(|a| !a)
    }

    /// Same density with every width multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        let widths = self.widths.iter().map(|w| w * factor).collect();
        Self::new(
            self.d,
            self.kind,
            widths,
            self.active.clone(),
            self.time_reversal,
        )
    }

    /// One draw of component `a` of `field` on `sublattice`.
    pub fn draw_component(
        &self,
        a: usize,
        field: usize,
        sublattice: usize,
        rng: &mut ChaCha8Rng,
    ) -> f64 {
        self.draw(self.width(a, field, sublattice), rng)
    }

    fn draw(&self, width: f64, rng: &mut ChaCha8Rng) -> f64 {
        match self.kind {
            DensityKind::Gaussian => {
                let z: f64 = StandardNormal.sample(rng);
                width * z
            }
            DensityKind::Box => Uniform::new_inclusive(-width, width)
                .expect("positive width")
                .sample(rng),
        }
    }
}

/// Per-position field vectors for one disorder sample.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DisorderRealization {
    /// `fields[field][position]`, each of length `d^2 - 1`.
    pub fields: [Vec<Vec<f64>>; 2],
    pub seed: u64,
    pub sample_idx: u64,
}

impl DisorderRealization {
    /// No disorder at all.
    pub fn clean(positions: usize, d: usize) -> Self {
        let zero = vec![vec![0.0; n_generators(d)]; positions];
        Self {
            fields: [zero.clone(), zero],
            seed: 0,
            sample_idx: 0,
        }
    }

    pub fn theta(&self, field: usize, position: usize) -> &[f64] {
        &self.fields[field][position]
    }

    pub fn positions(&self) -> usize {
        self.fields[0].len()
    }

    /// Single-site gates `(u_p, w_p)` at every position.
    pub fn local_gates(&self, d: usize) -> Result<Vec<(DenseOperator, DenseOperator)>> {
        (0..self.positions())
            .map(|p| {
                Ok((
                    field_to_gate(self.theta(FIELD_U, p), d, false)?,
                    field_to_gate(self.theta(FIELD_W, p), d, true)?,
                ))
            })
            .collect()
    }
}

/// RNG stream for sample `sample_idx` under `seed`.
pub fn sample_rng(seed: u64, sample_idx: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(sample_idx);
    rng
}

/// Draws every field of a chain of `cells` unit cells.
///
/// Draw order is position, then field type, then active component.
pub fn sample_realization(
    dist: &DisorderDistribution,
    cells: usize,
    seed: u64,
    sample_idx: u64,
) -> DisorderRealization {
    let n = dist.n_components();
    let positions = 2 * cells;
    let mut rng = sample_rng(seed, sample_idx);
    let mut fields = [vec![vec![0.0; n]; positions], vec![vec![0.0; n]; positions]];
    for p in 0..positions {
        let sublattice = p % 2;
        let types = if dist.time_reversal { 1 } else { 2 };
        for f in 0..types {
            for a in 0..n {
                if dist.active[a] {
                    fields[f][p][a] = dist.draw(dist.width(a, f, sublattice), &mut rng);
                }
            }
        }
        if dist.time_reversal {
            fields[FIELD_W][p] = fields[FIELD_U][p].clone();
        }
    }
    DisorderRealization {
        fields,
        seed,
        sample_idx,
    }
}

/// Maximal entry of `O - O^T`.
pub fn symmetry_residual(op: &DenseOperator) -> f64 {
    max_abs(&(op.matrix() - op.matrix().transpose()))
}

/// Controlled phase `diag(1, 1, 1, e^{i phi})` on two qubits.
pub fn controlled_phase(phi: f64) -> DenseOperator {
    let mut m = CMat::identity(4, 4);
    m[(3, 3)] = C64::from_polar(1.0, phi);
    DenseOperator::new(m).expect("finite")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{max_abs_diff, I};
    use proptest::prelude::*;

    #[test]
    fn trivial_params_give_swap() {
        let g = build_dual_gate(&DualGateParams::identity_locals(2, 0.0), 2).unwrap();
        assert_eq!(g, swap_gate(2).unwrap());
        let g = build_dual_gate(&DualGateParams::identity_locals(3, 0.0), 3).unwrap();
        assert!(max_abs_diff(&g, &swap_gate(3).unwrap()) < 1e-15);
    }

    #[test]
    fn quarter_pi_gate_is_dual_unitary() {
        let g = build_dual_gate(
            &DualGateParams::identity_locals(2, std::f64::consts::FRAC_PI_4),
            2,
        )
        .unwrap();
        let r = is_dual_unitary(&g, DUALITY_TOL).unwrap();
        assert!(r.passes, "{r:?}");
    }

    #[test]
    fn identity_is_not_dual_unitary() {
        let one = DenseOperator::identity(4);
        let r = is_dual_unitary(&one, DUALITY_TOL).unwrap();
        assert!(!r.passes);
        assert!(r.unitarity_residual < 1e-15);
        // The reshuffled identity is |Phi><Phi| with |Phi> = sum_i |ii>.
        let rs = dual_reshuffle(&one).unwrap();
        for r in 0..4 {
            for c in 0..4 {
                let expect = if r % 3 == 0 && c % 3 == 0 { 1.0 } else { 0.0 };
                assert_eq!(rs[(r, c)], C64::new(expect, 0.0));
            }
        }
    }

    #[test]
    fn swap_reshuffles_to_itself() {
        for d in 2..=3 {
            let s = swap_gate(d).unwrap();
            assert_eq!(dual_reshuffle(&s).unwrap(), s);
        }
    }

    #[test]
    fn controlled_phase_swap_is_dual_unitary() {
        let g = DenseOperator::new(controlled_phase(0.7).matrix() * swap_gate(2).unwrap().matrix())
            .unwrap();
        assert!(is_dual_unitary(&g, DUALITY_TOL).unwrap().passes);
    }

    #[test]
    fn pauli_exponential() {
        let u = field_to_gate(&[std::f64::consts::FRAC_PI_2, 0.0, 0.0], 2, false).unwrap();
        let x = gell_mann_generators(2).unwrap()[0].matrix() * I;
        assert!(max_abs_diff(&u, &x) < 1e-14);
        let id = field_to_gate(&[0.0; 8], 3, false).unwrap();
        assert!(max_abs_diff(&id, &CMat::identity(3, 3)) < 1e-15);
    }

    #[test]
    fn haar_moments() {
        let n = 10_000;
        let d = 3;
        let mut rng = sample_rng(11, 0);
        let mut mean = CMat::zeros(d, d);
        let mut sq = Vec::with_capacity(n);
        for _ in 0..n {
            let u = haar_unitary(d, &mut rng);
            assert!(u.is_unitary(1e-12));
            mean += u.matrix();
            sq.push(u.trace().norm_sqr());
        }
        mean /= C64::new(n as f64, 0.0);
        assert!(max_abs(&mean) < 5.0 / (n as f64).sqrt());
        let m = sq.iter().sum::<f64>() / n as f64;
        let var = sq.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n as f64 - 1.0);
        assert!((m - 1.0).abs() < 5.0 * (var / n as f64).sqrt(), "{m}");
    }

    #[test]
    fn gaussian_variance_and_box_support() {
        let dist = DisorderDistribution::isotropic(2, DensityKind::Gaussian, 0.3, false).unwrap();
        let mut xs = Vec::new();
        for s in 0..2500 {
            let r = sample_realization(&dist, 1, 5, s);
            xs.extend_from_slice(r.theta(0, 0));
            xs.extend_from_slice(r.theta(1, 1));
        }
        let n = xs.len() as f64;
        let m2 = xs.iter().map(|x| x * x).sum::<f64>() / n;
        let m4 = xs.iter().map(|x| x.powi(4)).sum::<f64>() / n;
        let se = ((m4 - m2 * m2) / n).sqrt();
        assert!((m2 - 0.09).abs() < 5.0 * se);

        let dist = DisorderDistribution::isotropic(3, DensityKind::Box, 0.25, false).unwrap();
        for s in 0..200 {
            let r = sample_realization(&dist, 2, 1, s);
            for f in 0..2 {
                for p in 0..4 {
                    assert!(r.theta(f, p).iter().all(|x| x.abs() <= 0.25));
                }
            }
        }
    }

    #[test]
    fn vanishing_width_gives_identity_fields() {
        let dist = DisorderDistribution::isotropic(2, DensityKind::Gaussian, 1e-12, false).unwrap();
        let r = sample_realization(&dist, 2, 3, 0);
        for (u, w) in r.local_gates(2).unwrap() {
            assert!(max_abs_diff(&u, &CMat::identity(2, 2)) < 1e-10);
            assert!(max_abs_diff(&w, &CMat::identity(2, 2)) < 1e-10);
        }
    }

    #[test]
    fn time_reversal_fields_are_shared_and_mask_respected() {
        let dist = DisorderDistribution::default_for(2, true)
            .unwrap()
            .with_mask(&[2])
            .unwrap();
        let r = sample_realization(&dist, 3, 9, 4);
        for p in 0..6 {
            assert_eq!(r.theta(0, p), r.theta(1, p));
            assert_eq!(r.theta(0, p)[0], 0.0);
            assert_eq!(r.theta(0, p)[1], 0.0);
            assert!(r.theta(0, p)[2] != 0.0);
            let (u, w) = (
                field_to_gate(r.theta(0, p), 2, false).unwrap(),
                field_to_gate(r.theta(1, p), 2, true).unwrap(),
            );
            assert!(max_abs_diff(&w, &u.transpose()) < 1e-14);
        }
    }

    #[test]
    fn bad_inputs_rejected() {
        let mut p = DualGateParams::identity_locals(2, 1.0);
        p.u[2] = DenseOperator::new(CMat::identity(2, 2) * C64::new(2.0, 0.0)).unwrap();
        assert!(build_dual_gate(&p, 2).is_err());
        assert!(dual_reshuffle(&DenseOperator::identity(3)).is_err());
        assert!(DisorderDistribution::isotropic(2, DensityKind::Box, 0.0, false).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(120))]

        #[test]
        fn random_parametrized_gates_are_dual_unitary(seed in any::<u64>(), d in 2usize..=3) {
            let mut rng = sample_rng(seed, 0);
            let p = DualGateParams::random(d, (0.0, std::f64::consts::PI), &mut rng);
            let g = build_dual_gate(&p, d).unwrap();
            let r = is_dual_unitary(&g, DUALITY_TOL).unwrap();
            prop_assert!(r.passes, "{:?}", r);
        }

        #[test]
        fn reshuffle_is_norm_preserving_involution(seed in any::<u64>()) {
            let mut rng = sample_rng(seed, 1);
            let m = CMat::from_fn(9, 9, |_, _| C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>()));
            let op = DenseOperator::new(m).unwrap();
            let r = dual_reshuffle(&op).unwrap();
            prop_assert!((r.norm() - op.norm()).abs() < 1e-12);
            prop_assert_eq!(dual_unreshuffle(&r).unwrap(), op);
        }

        #[test]
        fn time_reversal_gates_symmetric(seed in any::<u64>(), coupling in 0.0f64..3.2) {
            let mut rng = sample_rng(seed, 2);
            let u1 = haar_unitary(2, &mut rng);
            let u2 = haar_unitary(2, &mut rng);
            let g = build_time_reversal_gate(&u1, &u2, coupling, 2).unwrap();
            prop_assert!(symmetry_residual(&g) < 1e-12);
            prop_assert!(is_dual_unitary(&g, DUALITY_TOL).unwrap().passes);
        }

        #[test]
        fn sampling_is_deterministic(seed in any::<u64>(), idx in 0u64..1000) {
            let dist = DisorderDistribution::default_for(2, false).unwrap();
            let a = sample_realization(&dist, 3, seed, idx);
            let b = sample_realization(&dist, 3, seed, idx);
            prop_assert_eq!(a, b);
        }

        #[test]
        fn transposed_exponential(seed in any::<u64>()) {
            let mut rng = sample_rng(seed, 3);
            let theta: Vec<f64> = (0..8).map(|_| rng.random::<f64>() - 0.5).collect();
            let u = field_to_gate(&theta, 3, false).unwrap();
            let ut = field_to_gate(&theta, 3, true).unwrap();
            prop_assert!(max_abs_diff(&u.transpose(), &ut) < 1e-13);
            prop_assert!(u.is_unitary(1e-12));
        }
    }
}

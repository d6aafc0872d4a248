//! Brickwork Floquet operators and their traces.
//!
//! A chain of `cells` unit cells has `2 * cells` qudits. The first layer
//! applies `(u_{2k} x u_{2k+1}) U` on positions `(2k, 2k+1)`; the second layer
//! applies `(w_{2k-1} x w_{2k}) W` on positions `(2k-1, 2k)`, the `k = 0` bond
//! wrapping around as `(2L-1, 0)`.
//!
//! Traces of powers are also available by contracting the circuit along the
//! space direction: each wire carries `2t` time segments, and the gates on one
//! bond form a column operator on `d^{2t}` mapping the segments of one wire to
//! those of the next. This is exact per disorder sample and costs
//! `O(L d^{6t})` regardless of the chain length's exponential Hilbert space.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::algebra::{DenseOperator, HalfLatticeIndex, DENSE_CAP};
use crate::error::{Error, Result};
use crate::gates::{
    dual_reshuffle, is_dual_unitary, symmetry_residual, DisorderDistribution, DisorderRealization,
    DUALITY_TOL,
};
use crate::linalg::{CMat, LocalOp, C64, ONE, ZERO};

/// Layer of a brickwork circuit.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Layer {
    /// Bonds `(2k, 2k+1)`, applied first.
    First,
    /// Bonds `(2k-1, 2k)`, applied second.
    Second,
}

/// Full description of a circuit family.
#[derive(Clone, Debug)]
pub struct CircuitSpec {
    pub d: usize,
    pub cells: usize,
    /// One gate (homogeneous) or one per bond of the first layer.
    pub first: Vec<DenseOperator>,
    /// One gate (homogeneous) or one per bond of the second layer.
    pub second: Vec<DenseOperator>,
    pub disorder: DisorderDistribution,
    pub time_reversal: bool,
    /// Dual-unitarity of each gate in `first` then `second`.
    pub dual_unitary: Vec<bool>,
}

impl CircuitSpec {
    pub fn homogeneous(
        d: usize,
        cells: usize,
        first: DenseOperator,
        second: DenseOperator,
        disorder: DisorderDistribution,
    ) -> Result<Self> {
        Self::new(d, cells, vec![first], vec![second], disorder)
    }

    pub fn new(
        d: usize,
        cells: usize,
        first: Vec<DenseOperator>,
        second: Vec<DenseOperator>,
        disorder: DisorderDistribution,
    ) -> Result<Self> {
        if cells == 0 {
            return Err(Error::Validation("need at least one unit cell".into()));
        }
        if disorder.d != d {
            return Err(Error::Validation(
                "disorder and gate dimensions differ".into(),
            ));
        }
        for list in [&first, &second] {
            if list.len() != 1 && list.len() != cells {
                return Err(Error::Shape {
                    expected: cells,
                    got: list.len(),
                });
            }
        }
        let mut dual_unitary = Vec::new();
        for g in first.iter().chain(&second) {
            if g.dim() != d * d {
                return Err(Error::Shape {
                    expected: d * d,
                    got: g.dim(),
                });
            }
            let r = is_dual_unitary(g, DUALITY_TOL)?;
            if r.unitarity_residual >= DUALITY_TOL {
                return Err(Error::Validation("gate is not unitary".into()));
            }
            dual_unitary.push(r.passes);
        }
        let time_reversal = disorder.time_reversal;
        if time_reversal {
            for g in first.iter().chain(&second) {
                if symmetry_residual(g) >= DUALITY_TOL {
                    return Err(Error::Validation(
                        "time-reversal circuits need symmetric gates".into(),
                    ));
                }
            }
        }
        Ok(Self {
            d,
            cells,
            first,
            second,
            disorder,
            time_reversal,
            dual_unitary,
        })
    }

    pub fn positions(&self) -> usize {
        2 * self.cells
    }

    /// Hilbert-space dimension `d^{2L}`, if it fits a `usize`.
    pub fn hilbert_dim(&self) -> Option<usize> {
        self.d.checked_pow(self.positions() as u32)
    }

    pub fn is_dual_unitary(&self) -> bool {
        self.dual_unitary.iter().all(|&b| b)
    }

    pub fn gate(&self, layer: Layer, bond: usize) -> &DenseOperator {
        let list = match layer {
            Layer::First => &self.first,
            Layer::Second => &self.second,
        };
        if list.len() == 1 {
            &list[0]
        } else {
            &list[bond]
        }
    }

    /// Positions `(left, right)` of bond `k` in a layer.
    pub fn bond_positions(&self, layer: Layer, k: usize) -> (usize, usize) {
        let n = self.positions();
        match layer {
            Layer::First => (2 * k, 2 * k + 1),
            Layer::Second => ((2 * k + n - 1) % n, 2 * k),
        }
    }

    /// Gate of bond `k` dressed with the single-site fields of a sample.
    pub fn dressed_gate(
        &self,
        layer: Layer,
        k: usize,
        locals: &[(DenseOperator, DenseOperator)],
    ) -> DenseOperator {
        let (a, b) = self.bond_positions(layer, k);
        let (left, right) = match layer {
            Layer::First => (&locals[a].0, &locals[b].0),
            Layer::Second => (&locals[a].1, &locals[b].1),
        };
        DenseOperator::new(left.kron(right).matrix() * self.gate(layer, k).matrix())
            .expect("finite product")
    }
}

/// Gates of one sample compiled into leg-local operators, in application order.
pub struct FloquetPlan {
    d: usize,
    positions: usize,
    ops: Vec<LocalOp>,
}

impl FloquetPlan {
    pub fn new(spec: &CircuitSpec, realization: &DisorderRealization) -> Result<Self> {
        let n = spec.positions();
        if realization.positions() != n {
            return Err(Error::Shape {
                expected: n,
                got: realization.positions(),
            });
        }
        let locals = realization.local_gates(spec.d)?;
        let mut ops = Vec::with_capacity(n);
        for layer in [Layer::First, Layer::Second] {
            for k in 0..spec.cells {
                let g = spec.dressed_gate(layer, k, &locals);
                let (a, b) = spec.bond_positions(layer, k);
                if a == b {
                    continue;
                }
                ops.push(LocalOp::new(n, spec.d, &[a, b], g.matrix())?);
            }
        }
        Ok(Self {
            d: spec.d,
            positions: n,
            ops,
        })
    }

    pub fn dim(&self) -> usize {
        self.d.pow(self.positions as u32)
    }

    pub fn apply_in_place(&self, v: &mut [C64]) {
        for op in &self.ops {
            op.apply_in_place(v);
        }
    }

    pub fn dense(&self) -> Result<DenseOperator> {
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
        DenseOperator::new(m)
    }
}

/// Dense Floquet operator, second layer times first layer.
pub fn floquet_operator(
    spec: &CircuitSpec,
    realization: &DisorderRealization,
) -> Result<DenseOperator> {
    if spec.hilbert_dim().is_none_or(|n| n > DENSE_CAP) {
        return Err(Error::DenseCap {
            dim: spec.hilbert_dim().unwrap_or(usize::MAX),
            cap: DENSE_CAP,
        });
    }
    FloquetPlan::new(spec, realization)?.dense()
}

/// Matrix-free application of the Floquet operator to a state.
pub fn apply_floquet(
    state: &[C64],
    spec: &CircuitSpec,
    realization: &DisorderRealization,
) -> Result<Vec<C64>> {
    let plan = FloquetPlan::new(spec, realization)?;
    if state.len() != plan.dim() {
        return Err(Error::Shape {
            expected: plan.dim(),
            got: state.len(),
        });
    }
    let mut v = state.to_vec();
    plan.apply_in_place(&mut v);
    Ok(v)
}

/// Local column operator of one gate: legs `(in, out)` of the `d^2` space are
/// the input and output segments of the right wire, indexed by those of the
/// left wire.
pub fn column_gate(gate: &DenseOperator) -> Result<DenseOperator> {
    let d = (gate.dim() as f64).sqrt().round() as usize;
    let swap = crate::algebra::swap_gate(d)?;
    let r = dual_reshuffle(gate)?;
    DenseOperator::new(swap.matrix() * r.matrix() * swap.matrix())
}

/// Column operator on the `2t` time segments of a wire for the gates of one
/// layer at all `t` periods.
///
/// First-layer gates join segments `(2m, 2m+1)`; second-layer gates join
/// `(2m+1, 2m+2 mod 2t)`.
pub fn dual_row_operator(gate: &DenseOperator, t: usize, layer: Layer) -> Result<DenseOperator> {
    let d = (gate.dim() as f64).sqrt().round() as usize;
    let dim = d
        .checked_pow(2 * t as u32)
        .filter(|&n| n <= DENSE_CAP)
        .ok_or(Error::DenseCap {
            dim: usize::MAX,
            cap: DENSE_CAP,
        })?;
    let ops = dual_row_factors(gate, t, layer)?;
    DenseOperator::new(dense_from_factors(&ops, dim))
}

/// The `t` two-segment factors of [`dual_row_operator`], in application order.
pub fn dual_row_factors(gate: &DenseOperator, t: usize, layer: Layer) -> Result<Vec<LocalOp>> {
    let d = (gate.dim() as f64).sqrt().round() as usize;
    let local = column_gate(gate)?;
    (0..t)
        .map(|m| {
            let doubled = match layer {
                Layer::First => 2 * m + 1,
                Layer::Second => (2 * m + 2) % (2 * t),
            };
            let (a, b) = HalfLatticeIndex::new(doubled, t)?.bond();
            LocalOp::new(2 * t, d, &[a, b], local.matrix())
        })
        .collect()
}

fn dense_from_factors(ops: &[LocalOp], dim: usize) -> CMat {
    let mut out = CMat::zeros(dim, dim);
    let mut col = vec![ZERO; dim];
    for c in 0..dim {
        col.iter_mut().for_each(|z| *z = ZERO);
        col[c] = ONE;
        for op in ops {
            op.apply_in_place(&mut col);
        }
        for (r, z) in col.iter().enumerate() {
            out[(r, c)] = *z;
        }
    }
    out
}

/// How [`trace_power`] evaluates `tr U^t`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TraceMethod {
    /// Dense Floquet matrix raised to the power.
    Dense,
    /// Every basis state propagated matrix-free.
    Sweep,
    /// Space-direction column contraction.
    Column,
    /// Whichever exact method is cheapest for the chain and time.
    Auto,
}

/// Largest Hilbert dimension handled by the dense trace path.
pub const DENSE_TRACE_CAP: usize = 1024;

/// Largest number of elementary gate applications allowed in a basis sweep.
pub const SWEEP_BUDGET: u128 = 1 << 34;

/// `tr U^t` for one realization.
pub fn trace_power(
    spec: &CircuitSpec,
    realization: &DisorderRealization,
    t: usize,
    method: TraceMethod,
) -> Result<C64> {
    if t == 0 {
        let n = spec
            .hilbert_dim()
            .ok_or(Error::Resource("Hilbert dimension overflow".into()))?;
        return Ok(C64::new(n as f64, 0.0));
    }
    match method {
        TraceMethod::Dense => trace_dense(spec, realization, t),
        TraceMethod::Sweep => trace_sweep(spec, realization, t),
        TraceMethod::Column => trace_column(spec, realization, t),
        TraceMethod::Auto => match cheapest_method(spec, t) {
            Some(m) => trace_power(spec, realization, t, m),
            None => Err(Error::Resource(format!(
                "no trace method fits L = {}, t = {t}, d = {}",
                spec.cells, spec.d
            ))),
        },
    }
}

/// Rough operation count of each exact method, `None` when over its cap.
pub fn method_costs(spec: &CircuitSpec, t: usize) -> [(TraceMethod, Option<f64>); 3] {
    let d = spec.d as f64;
    let gates = (spec.positions() * t.max(1)) as f64;
    let n = spec.hilbert_dim().map(|n| n as f64);
    let col = spec
        .d
        .checked_pow(2 * t as u32)
        .filter(|&c| c <= DENSE_CAP)
        .map(|c| c as f64);
    let dense = n
        .filter(|&n| n <= DENSE_TRACE_CAP as f64)
        .map(|n| n * n * n * (2.0 * (t.max(1) as f64).log2().ceil() + 1.0));
    let sweep = n
        .map(|n| n * n * gates * d * d)
        .filter(|&w| w <= SWEEP_BUDGET as f64);
    let column = col.map(|c| c * c * gates * d * d);
    [
        (TraceMethod::Column, column),
        (TraceMethod::Sweep, sweep),
        (TraceMethod::Dense, dense),
    ]
}

/// Cheapest exact method for `tr U^t` on this chain.
pub fn cheapest_method(spec: &CircuitSpec, t: usize) -> Option<TraceMethod> {
    method_costs(spec, t)
        .into_iter()
        .filter_map(|(m, c)| c.map(|c| (m, c)))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .map(|(m, _)| m)
}

fn trace_dense(spec: &CircuitSpec, realization: &DisorderRealization, t: usize) -> Result<C64> {
    let n = spec.hilbert_dim().unwrap_or(usize::MAX);
    if n > DENSE_TRACE_CAP {
        return Err(Error::DenseCap {
            dim: n,
            cap: DENSE_TRACE_CAP,
        });
    }
    let u = floquet_operator(spec, realization)?.into_matrix();
    Ok(matrix_power(&u, t).trace())
}

/// `m^k` by repeated squaring.
pub fn matrix_power(m: &CMat, mut k: usize) -> CMat {
    let n = m.nrows();
    let mut result = CMat::identity(n, n);
    let mut base = m.clone();
    while k > 0 {
        if k & 1 == 1 {
            result = &result * &base;
        }
        k >>= 1;
        if k > 0 {
            base = &base * &base;
        }
    }
    result
}

fn trace_sweep(spec: &CircuitSpec, realization: &DisorderRealization, t: usize) -> Result<C64> {
    let n = spec
        .hilbert_dim()
        .ok_or(Error::Resource("Hilbert dimension overflow".into()))?;
    let work = n as u128 * n as u128 * t as u128 * spec.positions() as u128;
    if work > SWEEP_BUDGET {
        return Err(Error::Resource(format!(
            "basis sweep needs about {work} operations (budget {SWEEP_BUDGET})"
        )));
    }
    let plan = FloquetPlan::new(spec, realization)?;
    let mut total = ZERO;
    let mut v = vec![ZERO; n];
    for i in 0..n {
        v.iter_mut().for_each(|z| *z = ZERO);
        v[i] = ONE;
        for _ in 0..t {
            plan.apply_in_place(&mut v);
        }
        total += v[i];
    }
    Ok(total)
}

/// Column operators `C_0, ..., C_{2L-1}` of one sample; `C_p` maps wire `p`
/// to wire `p + 1`.
pub fn column_operators(
    spec: &CircuitSpec,
    realization: &DisorderRealization,
    t: usize,
) -> Result<Vec<DenseOperator>> {
    let locals = realization.local_gates(spec.d)?;
    let mut cols = Vec::with_capacity(spec.positions());
    for p in 0..spec.positions() {
        let (layer, k) = column_bond(spec, p);
        let g = spec.dressed_gate(layer, k, &locals);
        cols.push(dual_row_operator(&g, t, layer)?);
    }
    Ok(cols)
}

fn trace_column(spec: &CircuitSpec, realization: &DisorderRealization, t: usize) -> Result<C64> {
    let dim = spec
        .d
        .checked_pow(2 * t as u32)
        .filter(|&n| n <= DENSE_CAP)
        .ok_or(Error::DenseCap {
            dim: usize::MAX,
            cap: DENSE_CAP,
        })?;
    let locals = realization.local_gates(spec.d)?;
    let mut ops = Vec::with_capacity(spec.positions() * t);
    for p in 0..spec.positions() {
        let (layer, k) = column_bond(spec, p);
        ops.extend(dual_row_factors(
            &spec.dressed_gate(layer, k, &locals),
            t,
            layer,
        )?);
    }
    // Diagonal entries are collected in index order and summed serially so
    // the result does not depend on the thread count.
    let diagonal: Vec<C64> = (0..dim)
        .into_par_iter()
        .map(|i| {
            let mut v = vec![ZERO; dim];
            v[i] = ONE;
            for op in &ops {
                op.apply_in_place(&mut v);
            }
            v[i]
        })
        .collect();
    Ok(diagonal.iter().sum())
}

fn column_bond(spec: &CircuitSpec, p: usize) -> (Layer, usize) {
    if p.is_multiple_of(2) {
        (Layer::First, p / 2)
    } else {
        (Layer::Second, p.div_ceil(2) % spec.cells)
    }
}

/// The bare first layer `K = prod U`; for symmetric gates and `w = u^T` it
/// satisfies `K U K^dagger = U^T`.
pub fn time_reversal_operator(spec: &CircuitSpec) -> Result<DenseOperator> {
    let n = spec.positions();
    let dim = spec
        .hilbert_dim()
        .filter(|&x| x <= DENSE_CAP)
        .ok_or(Error::DenseCap {
            dim: spec.hilbert_dim().unwrap_or(usize::MAX),
            cap: DENSE_CAP,
        })?;
    let mut v = CMat::identity(dim, dim);
    let mut ops = Vec::new();
    for k in 0..spec.cells {
        let (a, b) = spec.bond_positions(Layer::First, k);
        ops.push(LocalOp::new(
            n,
            spec.d,
            &[a, b],
            spec.gate(Layer::First, k).matrix(),
        )?);
    }
    for mut col in v.column_iter_mut() {
        let mut buf: Vec<C64> = col.iter().cloned().collect();
        for op in &ops {
            op.apply_in_place(&mut buf);
        }
        for (z, b) in col.iter_mut().zip(buf) {
            *z = b;
        }
    }
    DenseOperator::new(v)
}

/// One Monte Carlo sample of `tr U^t`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralSample {
    pub trace: C64,
    pub t: usize,
    pub cells: usize,
    pub seed: u64,
    pub sample_idx: u64,
}

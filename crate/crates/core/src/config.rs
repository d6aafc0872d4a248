//! JSON descriptions of gates, disorder distributions and circuits.
//!
//! Matrices are row-major arrays of interleaved real and imaginary parts.

use serde::{Deserialize, Serialize};

use crate::algebra::{n_generators, swap_gate, DenseOperator};
use crate::circuit::CircuitSpec;
use crate::error::{Error, Result};
use crate::gates::{
    build_dual_gate, build_time_reversal_gate, haar_unitary, sample_rng, DensityKind,
    DisorderDistribution, DualGateParams,
};
use crate::linalg::{CMat, C64};

/// Row-major interleaved `[re, im, re, im, ...]` entries of a square matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MatrixSpec(pub Vec<f64>);

impl MatrixSpec {
    pub fn from_matrix(m: &CMat) -> Self {
        let mut out = Vec::with_capacity(2 * m.len());
        for r in 0..m.nrows() {
            for c in 0..m.ncols() {
                out.push(m[(r, c)].re);
                out.push(m[(r, c)].im);
            }
        }
        Self(out)
    }

    pub fn to_matrix(&self, dim: usize) -> Result<CMat> {
        if self.0.len() != 2 * dim * dim {
            return Err(Error::Shape {
                expected: 2 * dim * dim,
                got: self.0.len(),
            });
        }
        if self.0.iter().any(|x| !x.is_finite()) {
            return Err(Error::Validation("matrix entries must be finite".into()));
        }
        Ok(CMat::from_fn(dim, dim, |r, c| {
            let k = 2 * (r * dim + c);
            C64::new(self.0[k], self.0[k + 1])
        }))
    }

    pub fn to_operator(&self, dim: usize) -> Result<DenseOperator> {
        DenseOperator::new(self.to_matrix(dim)?)
    }
}

/// A two-qudit gate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum GateSpec {
    /// The SWAP gate.
    Swap {},
    /// `1 x 1`, unitary but not dual-unitary.
    Identity {},
    /// `(u1 x u2) SWAP exp(i J s3 x s3) (u3 x u4)`; identity locals when omitted.
    Parametrized {
        coupling: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        locals: Option<[MatrixSpec; 4]>,
    },
    /// Haar-random locals and a uniform coupling, reproducible from `seed`.
    Random { coupling_range: [f64; 2], seed: u64 },
    /// Transpose-symmetric gate `(u1 x u2) SWAP exp(i J s3 x s3) (u2^T x u1^T)`.
    /// Omitted locals are Haar-random from `seed`.
    TimeReversal {
        coupling: f64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        u1: Option<MatrixSpec>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        u2: Option<MatrixSpec>,
        #[serde(default)]
        seed: u64,
    },
    /// Explicit `d^2 x d^2` matrix.
    Matrix { entries: MatrixSpec },
}

impl GateSpec {
    pub fn build(&self, d: usize) -> Result<DenseOperator> {
        match self {
            Self::Swap {} => swap_gate(d),
            Self::Identity {} => Ok(DenseOperator::identity(d * d)),
            Self::Parametrized { coupling, locals } => {
                let params = match locals {
                    None => DualGateParams::identity_locals(d, *coupling),
                    Some(ms) => DualGateParams {
                        u: [
                            ms[0].to_operator(d)?,
                            ms[1].to_operator(d)?,
                            ms[2].to_operator(d)?,
                            ms[3].to_operator(d)?,
                        ],
                        coupling: *coupling,
                    },
                };
                build_dual_gate(&params, d)
            }
            Self::Random {
                coupling_range,
                seed,
            } => {
                if coupling_range.iter().any(|x| !x.is_finite())
                    || coupling_range[0] > coupling_range[1]
                {
                    return Err(Error::Validation(
                        "coupling_range must be [low, high]".into(),
                    ));
                }
                let mut rng = sample_rng(*seed, 0);
                let params =
                    DualGateParams::random(d, (coupling_range[0], coupling_range[1]), &mut rng);
                build_dual_gate(&params, d)
            }
            Self::TimeReversal {
                coupling,
                u1,
                u2,
                seed,
            } => {
                let mut rng = sample_rng(*seed, 0);
                let a = match u1 {
                    Some(m) => m.to_operator(d)?,
                    None => haar_unitary(d, &mut rng),
                };
                let b = match u2 {
                    Some(m) => m.to_operator(d)?,
                    None => haar_unitary(d, &mut rng),
                };
                build_time_reversal_gate(&a, &b, *coupling, d)
            }
            Self::Matrix { entries } => entries.to_operator(d * d),
        }
    }

    pub fn from_operator(op: &DenseOperator) -> Self {
        Self::Matrix {
            entries: MatrixSpec::from_matrix(op.matrix()),
        }
    }
}

/// Widths either as one value for every component or as the full table
/// indexed `(component * 2 + field) * 2 + sublattice`, field 0 for `u` and
/// 1 for `w`, sublattice 0 for integer and 1 for half-odd sites.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum WidthSpec {
    Uniform(f64),
    Table(Vec<f64>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DisorderSpec {
    pub kind: DensityKind,
    pub nu: WidthSpec,
    /// Active generator components (0-based); all when omitted.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub components: Option<Vec<usize>>,
    #[serde(default)]
    pub time_reversal: bool,
}

impl Default for DisorderSpec {
    fn default() -> Self {
        Self {
            kind: DensityKind::Gaussian,
            nu: WidthSpec::Uniform(0.2),
            components: None,
            time_reversal: false,
        }
    }
}

impl DisorderSpec {
    pub fn build(&self, d: usize) -> Result<DisorderDistribution> {
        let n = n_generators(d);
        let widths = match &self.nu {
            WidthSpec::Uniform(w) => vec![*w; 4 * n],
            WidthSpec::Table(t) => t.clone(),
        };
        let dist =
            DisorderDistribution::new(d, self.kind, widths, vec![true; n], self.time_reversal)?;
        match &self.components {
            None => Ok(dist),
            Some(c) => dist.with_mask(c),
        }
    }

    pub fn from_distribution(dist: &DisorderDistribution) -> Self {
        let all = dist.active_components();
        Self {
            kind: dist.kind,
            nu: WidthSpec::Table(dist.widths().to_vec()),
            components: (all.len() != dist.n_components()).then_some(all),
            time_reversal: dist.time_reversal,
        }
    }
}

/// Full description of a chain: one gate per layer, or one per bond.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CircuitConfig {
    pub d: usize,
    pub cells: usize,
    pub first: Vec<GateSpec>,
    pub second: Vec<GateSpec>,
    #[serde(default)]
    pub disorder: DisorderSpec,
}

impl CircuitConfig {
    pub fn build(&self) -> Result<CircuitSpec> {
        let build_all = |gs: &[GateSpec]| {
            gs.iter()
                .map(|g| g.build(self.d))
                .collect::<Result<Vec<_>>>()
        };
        CircuitSpec::new(
            self.d,
            self.cells,
            build_all(&self.first)?,
            build_all(&self.second)?,
            self.disorder.build(self.d)?,
        )
    }

    pub fn from_circuit(spec: &CircuitSpec) -> Self {
        Self {
            d: spec.d,
            cells: spec.cells,
            first: spec.first.iter().map(GateSpec::from_operator).collect(),
            second: spec.second.iter().map(GateSpec::from_operator).collect(),
            disorder: DisorderSpec::from_distribution(&spec.disorder),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gates::is_dual_unitary;
    use crate::linalg::max_abs_diff;

    #[test]
    fn matrix_spec_round_trip() {
        let u = haar_unitary(3, &mut sample_rng(1, 0));
        let back = MatrixSpec::from_matrix(u.matrix()).to_matrix(3).unwrap();
        assert_eq!(&back, u.matrix());
        assert!(MatrixSpec(vec![0.0; 5]).to_matrix(2).is_err());
    }

    #[test]
    fn gate_kinds_parse_and_build() {
        let src = r#"[
            {"kind": "swap"},
            {"kind": "identity"},
            {"kind": "parametrized", "coupling": 0.7},
            {"kind": "random", "coupling_range": [0.3, 2.8], "seed": 4},
            {"kind": "time_reversal", "coupling": 1.1, "seed": 2}
        ]"#;
        let specs: Vec<GateSpec> = serde_json::from_str(src).unwrap();
        let dual: Vec<bool> = specs
            .iter()
            .map(|g| is_dual_unitary(&g.build(2).unwrap(), 1e-10).unwrap().passes)
            .collect();
        assert_eq!(dual, vec![true, false, true, true, true]);
    }

    #[test]
    fn unknown_fields_rejected() {
        assert!(serde_json::from_str::<GateSpec>(r#"{"kind": "swap", "j": 1}"#).is_err());
        assert!(serde_json::from_str::<GateSpec>(r#"{"kind": "cnot"}"#).is_err());
        assert!(
            serde_json::from_str::<DisorderSpec>(r#"{"kind": "box", "nu": 0.1, "mu": 2}"#).is_err()
        );
    }

    #[test]
    fn circuit_round_trip() {
        let mut rng = sample_rng(9, 0);
        let first = build_dual_gate(&DualGateParams::random(2, (0.3, 2.8), &mut rng), 2).unwrap();
        let second = build_dual_gate(&DualGateParams::random(2, (0.3, 2.8), &mut rng), 2).unwrap();
        let dist = DisorderDistribution::isotropic(2, DensityKind::Box, 0.3, false)
            .unwrap()
            .with_mask(&[0, 2])
            .unwrap();
        let spec = CircuitSpec::homogeneous(2, 3, first, second, dist).unwrap();
        let json = serde_json::to_string(&CircuitConfig::from_circuit(&spec)).unwrap();
        let back = serde_json::from_str::<CircuitConfig>(&json)
            .unwrap()
            .build()
            .unwrap();
        assert_eq!(back.cells, spec.cells);
        assert_eq!(back.disorder, spec.disorder);
        assert_eq!(
            max_abs_diff(back.first[0].matrix(), spec.first[0].matrix()),
            0.0
        );
        assert_eq!(
            max_abs_diff(back.second[0].matrix(), spec.second[0].matrix()),
            0.0
        );
    }

    #[test]
    fn width_table_must_match_components() {
        let spec = DisorderSpec {
            nu: WidthSpec::Table(vec![0.1; 5]),
            ..DisorderSpec::default()
        };
        assert!(spec.build(2).is_err());
    }
}

//! Versioned run configuration: JSON with `//` and `/* */` comments allowed.

use std::io::Read;
use std::path::Path;

use anyhow::{bail, Context, Result};
use dualsff::circuit::TraceMethod;
use dualsff::config::{DisorderSpec, GateSpec};
use dualsff::gates::DUALITY_TOL;
use dualsff::transfer::{QuadratureConfig, GAP_FLOOR};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CommandKind {
    GateCheck,
    Sff,
    Transfer,
    Verify,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub version: u32,
    /// When present, the command this file is meant for.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub command: Option<CommandKind>,
    pub d: usize,
    pub first: GateSpec,
    pub second: GateSpec,
    #[serde(default)]
    pub disorder: DisorderSpec,
    #[serde(default = "default_t_grid")]
    pub t_grid: Vec<usize>,
    #[serde(default = "default_l_grid")]
    pub l_grid: Vec<usize>,
    #[serde(default = "default_n_samples")]
    pub n_samples: usize,
    /// Moment order `n` of `E|tr U^t|^{2n}`.
    #[serde(default = "one")]
    pub order: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_method")]
    pub method: TraceMethod,
    #[serde(default)]
    pub transfer: TransferSettings,
    #[serde(default)]
    pub outputs: OutputSettings,
    #[serde(default)]
    pub tolerances: Tolerances,
    /// Upper bound on worker threads.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
    /// Criterion ids or tags for `verify`; all when empty.
    #[serde(default)]
    pub criteria: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TransferSettings {
    /// Largest `L` of the emitted trace curve.
    pub max_cells: usize,
    /// Leading eigenvalues requested on the matrix-free path.
    pub eigenvalues: usize,
    pub quadrature: QuadratureConfig,
}

impl Default for TransferSettings {
    fn default() -> Self {
        Self {
            max_cells: 200,
            eigenvalues: 8,
            quadrature: QuadratureConfig::default(),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSettings {
    /// Output directory, overridden by `--out`.
    pub dir: Option<String>,
    /// Also write every per-realization trace of the `sff` command.
    pub samples: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Unitarity and dual-unitarity residual bound.
    pub duality: f64,
    /// Eigenvalue gap used to classify unimodular eigenvalues.
    pub unimodular_gap: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            duality: DUALITY_TOL,
            unimodular_gap: GAP_FLOOR,
        }
    }
}

fn default_t_grid() -> Vec<usize> {
    vec![1, 2]
}

fn default_l_grid() -> Vec<usize> {
    vec![4, 6, 8]
}

fn default_n_samples() -> usize {
    2000
}

fn one() -> usize {
    1
}

fn default_method() -> TraceMethod {
    TraceMethod::Auto
}

impl RunConfig {
    /// Generic interacting gates at `d = 2` under gaussian disorder of width 0.2.
    pub fn builtin() -> Self {
        Self::parse(include_str!("../../../configs/cue.json")).expect("built-in config parses")
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::parse(&text).with_context(|| format!("in {}", path.display()))
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut stripped = String::new();
        json_comments::StripComments::new(text.as_bytes())
            .read_to_string(&mut stripped)
            .context("stripping comments")?;
        let cfg: Self =
            serde_json::from_str(&stripped).context("config does not match the schema")?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.version != SCHEMA_VERSION {
            bail!(
                "config version {} is not supported (expected {SCHEMA_VERSION})",
                self.version
            );
        }
        if self.d < 2 {
            bail!("d must be at least 2");
        }
        if self.t_grid.is_empty() || self.t_grid.contains(&0) {
            bail!("t_grid must be a non-empty list of positive integers");
        }
        if self.l_grid.is_empty() || self.l_grid.contains(&0) {
            bail!("l_grid must be a non-empty list of positive integers");
        }
        if self.n_samples < 2 {
            bail!("n_samples must be at least 2");
        }
        if self.order == 0 {
            bail!("order must be at least 1");
        }
        if self.threads == Some(0) {
            bail!("threads must be positive");
        }
        if self.transfer.max_cells == 0 || self.transfer.eigenvalues == 0 {
            bail!("transfer.max_cells and transfer.eigenvalues must be positive");
        }
        for (name, v) in [
            ("duality", self.tolerances.duality),
            ("unimodular_gap", self.tolerances.unimodular_gap),
        ] {
            if !(v > 0.0 && v < 1.0) {
                bail!("tolerances.{name} must lie in (0, 1)");
            }
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON of the effective configuration.
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("config serializes");
        let digest = Sha256::digest(&bytes);
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        // a comment
        "version": 1, "d": 2,
        "first": {"kind": "swap"}, /* inline */ "second": {"kind": "swap"}
    }"#;

    #[test]
    fn minimal_config_gets_defaults() {
        let cfg = RunConfig::parse(MINIMAL).unwrap();
        assert_eq!(cfg.t_grid, vec![1, 2]);
        assert_eq!(cfg.n_samples, 2000);
        assert_eq!(cfg.method, TraceMethod::Auto);
    }

    #[test]
    fn schema_violations_rejected() {
        assert!(RunConfig::parse(&MINIMAL.replace("\"version\": 1", "\"version\": 2")).is_err());
        assert!(
            RunConfig::parse(&MINIMAL.replace("\"d\": 2", "\"d\": 2, \"samples\": 3")).is_err()
        );
        assert!(RunConfig::parse(&MINIMAL.replace("\"d\": 2", "\"d\": 1")).is_err());
        assert!(
            RunConfig::parse(&MINIMAL.replace("\"d\": 2", "\"d\": 2, \"t_grid\": []")).is_err()
        );
    }

    #[test]
    fn hash_tracks_content() {
        let a = RunConfig::parse(MINIMAL).unwrap();
        let mut b = a.clone();
        assert_eq!(a.hash(), b.hash());
        b.seed = 5;
        assert_ne!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 64);
    }

    #[test]
    fn shipped_configs_parse() {
        let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
        let mut n = 0;
        for entry in std::fs::read_dir(dir).unwrap() {
            let path = entry.unwrap().path();
            if path.extension().is_some_and(|e| e == "json")
                && !path.to_string_lossy().ends_with("schema.json")
            {
                RunConfig::load(&path).unwrap();
                n += 1;
            }
        }
        assert!(n >= 4);
    }
}

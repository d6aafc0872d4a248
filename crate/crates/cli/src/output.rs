//! Provenance-stamped JSON and CSV outputs and the on-disk sample cache.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const CACHE_ENV: &str = "DUALSFF_CACHE_DIR";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub command: String,
    pub config_sha256: String,
    pub seed: u64,
    pub version: String,
    /// Traces and form factors are dimensionless.
    pub units: String,
}

impl Provenance {
    pub fn new(command: &str, config_sha256: &str, seed: u64) -> Self {
        Self {
            command: command.to_string(),
            config_sha256: config_sha256.to_string(),
            seed,
            version: env!("CARGO_PKG_VERSION").to_string(),
            units: "dimensionless".to_string(),
        }
    }
}

#[derive(Serialize)]
struct Stamped<'a, T: Serialize> {
    provenance: &'a Provenance,
    #[serde(flatten)]
    report: &'a T,
}

pub fn stamped_json<T: Serialize>(prov: &Provenance, report: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(&Stamped {
        provenance: prov,
        report,
    })?)
}

/// Writes a JSON report into `dir`, or to stdout when no directory is given.
pub fn emit_json<T: Serialize>(
    dir: Option<&Path>,
    name: &str,
    prov: &Provenance,
    report: &T,
) -> Result<()> {
    let text = stamped_json(prov, report)?;
    match dir {
        Some(d) => {
            let path = d.join(name);
            fs::write(&path, text + "\n").with_context(|| format!("writing {}", path.display()))?;
            eprintln!("wrote {}", path.display());
        }
        None => println!("{text}"),
    }
    Ok(())
}

/// Writes a CSV table preceded by `# key=value` provenance lines.
pub fn write_csv<R: Serialize>(
    dir: &Path,
    name: &str,
    prov: &Provenance,
    rows: &[R],
) -> Result<PathBuf> {
    let path = dir.join(name);
    let mut file =
        fs::File::create(&path).with_context(|| format!("creating {}", path.display()))?;
    writeln!(file, "# command={}", prov.command)?;
    writeln!(file, "# config_sha256={}", prov.config_sha256)?;
    writeln!(file, "# seed={}", prov.seed)?;
    writeln!(file, "# version={}", prov.version)?;
    writeln!(file, "# units={}", prov.units)?;
    let mut w = csv::Writer::from_writer(file);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    eprintln!("wrote {}", path.display());
    Ok(path)
}

pub fn cache_dir() -> Option<PathBuf> {
    std::env::var_os(CACHE_ENV)
        .filter(|v| !v.is_empty())
        .map(PathBuf::from)
}

pub fn cache_key(parts: &[&str]) -> String {
    let mut h = Sha256::new();
    for p in parts {
        h.update(p.as_bytes());
        h.update([0u8]);
    }
    h.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

pub fn cache_load<T: for<'de> Deserialize<'de>>(key: &str) -> Option<T> {
    let path = cache_dir()?.join(format!("{key}.json"));
    let text = fs::read_to_string(path).ok()?;
    serde_json::from_str(&text).ok()
}

pub fn cache_store<T: Serialize>(key: &str, value: &T) -> Result<()> {
    let Some(dir) = cache_dir() else {
        return Ok(());
    };
    fs::create_dir_all(&dir).with_context(|| format!("creating cache {}", dir.display()))?;
    let tmp = dir.join(format!("{key}.tmp"));
    fs::write(&tmp, serde_json::to_vec(value)?)?;
    fs::rename(&tmp, dir.join(format!("{key}.json")))?;
    Ok(())
}

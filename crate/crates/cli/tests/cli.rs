//! End-to-end runs of the binary on the shipped configs.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dualsff"))
        .args(args)
        .env_remove("DUALSFF_CACHE_DIR")
        .output()
        .unwrap()
}

fn config(name: &str) -> String {
    configs().join(name).to_string_lossy().into_owned()
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn gate_check_exit_codes() {
    assert_eq!(
        run(&["gate-check", "--config", &config("swap.json")])
            .status
            .code(),
        Some(0)
    );
    assert_eq!(
        run(&["gate-check", "--config", &config("cue.json")])
            .status
            .code(),
        Some(0)
    );
    assert_eq!(
        run(&["gate-check", "--config", &config("identity.json")])
            .status
            .code(),
        Some(1)
    );
}

#[test]
fn errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"version": 1, "d": 2, "first": {"kind": "swap"}, "second": {"kind": "swap"}, "nsamples": 3}"#).unwrap();
    assert_eq!(
        run(&["sff", "--config", bad.to_str().unwrap()])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        run(&["sff", "--config", "/nonexistent.json"]).status.code(),
        Some(2)
    );
    // The identity config is marked for gate-check only.
    assert_eq!(
        run(&["sff", "--config", &config("identity.json")])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn transfer_counts_and_swap_flag() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    assert_eq!(
        run(&["transfer", "--config", &config("cue.json"), "--out", out])
            .status
            .code(),
        Some(0)
    );
    let rep = json(&dir.path().join("transfer.json"));
    assert_eq!(
        rep["provenance"]["config_sha256"].as_str().unwrap().len(),
        64
    );
    for s in rep["spectra"].as_array().unwrap() {
        assert_eq!(s["unimodular_count"], s["t"]);
        assert!(s["spectral_radius"].as_f64().unwrap() <= 1.0 + 1e-8);
        assert_eq!(s["flagged_non_convergent"], false);
    }
    let curve = std::fs::read_to_string(dir.path().join("transfer_curve_t1.csv")).unwrap();
    assert!(curve.lines().any(|l| l == "L,re,im"));

    let swap = tempfile::tempdir().unwrap();
    let code = run(&[
        "transfer",
        "--config",
        &config("swap.json"),
        "--out",
        swap.path().to_str().unwrap(),
    ]);
    assert_eq!(code.status.code(), Some(1));
    let rep = json(&swap.path().join("transfer.json"));
    // At t = 1 the fixed space is one-dimensional even for SWAP gates; the
    // degeneracy shows from t = 2 on.
    let spectra = rep["spectra"].as_array().unwrap();
    assert_eq!(spectra[0]["flagged_non_convergent"], false);
    assert_eq!(spectra[1]["flagged_non_convergent"], true);
    assert!(spectra[1]["unimodular_count"].as_u64().unwrap() > 2);
}

#[test]
fn sff_grid_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("small.json");
    let text = std::fs::read_to_string(configs().join("cue.json"))
        .unwrap()
        .replace(
            "\"n_samples\": 2000",
            "\"n_samples\": 40, \"outputs\": {\"samples\": true}",
        );
    std::fs::write(&cfg, text).unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for (d, threads) in [(&a, "1"), (&b, "2")] {
        let o = run(&[
            "sff",
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            d.to_str().unwrap(),
            "--threads",
            threads,
        ]);
        assert_eq!(
            o.status.code(),
            Some(0),
            "{}",
            String::from_utf8_lossy(&o.stderr)
        );
    }
    let ta = std::fs::read_to_string(a.join("sff.csv")).unwrap();
    assert_eq!(ta, std::fs::read_to_string(b.join("sff.csv")).unwrap());
    assert_eq!(
        std::fs::read_to_string(a.join("samples.csv")).unwrap(),
        std::fs::read_to_string(b.join("samples.csv")).unwrap()
    );
    let rows: Vec<&str> = ta.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(rows[0], "t,L,n,mean,se,n_samples,seed,cue_ref,coe_ref");
    assert_eq!(rows.len(), 1 + 2 * 3);
    let samples = std::fs::read_to_string(a.join("samples.csv")).unwrap();
    assert!(samples.lines().any(|l| l == "seed,sample_idx,t,L,re,im"));
    assert!(ta.contains("# seed=1"));

    let c = dir.path().join("c");
    run(&[
        "sff",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        c.to_str().unwrap(),
        "--seed",
        "2",
    ]);
    assert_ne!(ta, std::fs::read_to_string(c.join("sff.csv")).unwrap());
}

#[test]
fn verify_selects_criteria() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&[
        "verify",
        "--criteria",
        "rmt,3",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert_eq!(
        stdout.lines().filter(|l| l.starts_with("[PASS]")).count(),
        2
    );
    let rep = json(&dir.path().join("verify.json"));
    let ids: Vec<u64> = rep["criteria"]
        .as_array()
        .unwrap()
        .iter()
        .map(|c| c["id"].as_u64().unwrap())
        .collect();
    assert_eq!(ids, vec![3, 11]);
    assert_eq!(
        run(&["verify", "--criteria", "bogus"]).status.code(),
        Some(2)
    );
}

#[test]
fn threads_above_cap_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("capped.json");
    let text = std::fs::read_to_string(configs().join("swap.json"))
        .unwrap()
        .replace("\"version\": 1,", "\"version\": 1, \"threads\": 1,");
    std::fs::write(&cfg, text).unwrap();
    assert_eq!(
        run(&[
            "gate-check",
            "--config",
            cfg.to_str().unwrap(),
            "--threads",
            "4"
        ])
        .status
        .code(),
        Some(2)
    );
}

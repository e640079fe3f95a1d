use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

fn run(config: &Path, out: &Path, extra: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lie-radon"))
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(out)
        .args(extra)
        .env_remove("LIE_RADON_THREADS")
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn read_csv(path: &Path) -> Vec<Vec<String>> {
    csv::Reader::from_path(path)
        .unwrap()
        .records()
        .map(|r| r.unwrap().iter().map(str::to_string).collect())
        .collect()
}

fn summary(dir: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("summary.json")).unwrap()).unwrap()
}

fn write_config(dir: &Path, body: &str) -> PathBuf {
    let p = dir.join("config.json");
    std::fs::write(&p, body).unwrap();
    p
}

fn dir_contents(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap())
        })
        .collect()
}

#[test]
fn verify_on_torus_passes() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run(&config("verify-torus2.json"), tmp.path(), &[]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let rows = read_csv(&tmp.path().join("verify.csv"));
    assert_eq!(rows.len(), 8 * 20);
    for r in &rows {
        assert!(r[2].parse::<f64>().unwrap() < 1e-10, "{r:?}");
    }
    assert_eq!(summary(tmp.path())["passed"], true);
}

#[test]
fn su2_witness_is_annihilated() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run(&config("witness-su2.json"), tmp.path(), &[]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let radon = read_csv(&tmp.path().join("radon.csv"));
    assert_eq!(radon.len(), 100);
    for r in &radon {
        let (re, im): (f64, f64) = (r[r.len() - 2].parse().unwrap(), r[r.len() - 1].parse().unwrap());
        assert!(re.hypot(im) < 1e-10, "{r:?}");
    }
    // Re q = tr ρ_{1/2}(q) / 2: a quarter of the identity in the spin-1/2 block.
    let coeffs = read_csv(&tmp.path().join("witness.csv"));
    assert_eq!(coeffs.len(), 5);
    for r in &coeffs {
        let expected = if r[0] == r#"{"j2":1}"# && r[1] == r[2] { 0.25 } else { 0.0 };
        assert!((r[3].parse::<f64>().unwrap() - expected).abs() < 1e-15, "{r:?}");
    }
    let s = summary(tmp.path());
    assert!(s["l2_norm"].as_f64().unwrap() >= 0.5);
}

#[test]
fn circle_certificate_reports_the_kernel() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run(&config("certify-circle.json"), tmp.path(), &[]);
    assert_eq!(code(&o), 0);
    let s = summary(tmp.path());
    assert_eq!(s["kernel_dimension"], 2);
    assert_eq!(s["verdict"], "kernel-found");
    let rows = read_csv(&tmp.path().join("certificate.csv"));
    assert_eq!(rows.len(), 3);
}

#[test]
fn so3_certificate_is_injective() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run(&config("certify-so3.json"), tmp.path(), &[]);
    assert_eq!(code(&o), 0);
    let s = summary(tmp.path());
    assert_eq!(s["verdict"], "injective-at-band");
    assert!(s["min_sigma"].as_f64().unwrap() > 1e-6);
}

#[test]
fn reconstructions_meet_their_tolerance() {
    for name in ["reconstruct-torus3.json", "reconstruct-su2xcircle.json"] {
        let tmp = tempfile::tempdir().unwrap();
        let o = run(&config(name), tmp.path(), &[]);
        assert_eq!(code(&o), 0, "{name}: {}", String::from_utf8_lossy(&o.stderr));
        let s = summary(tmp.path());
        assert!(s["residual"].as_f64().unwrap() <= s["tolerance"].as_f64().unwrap(), "{name}");
    }
}

#[test]
fn reconstruct_on_rank_one_is_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run(&config("reconstruct-su2.json"), tmp.path(), &[]);
    assert_eq!(code(&o), 2);
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("rank"), "{err}");
}

#[test]
fn explicit_forward_matches_hand_values() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run(&config("forward-explicit.json"), tmp.path(), &[]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    // f = ½e^{ix} − ¼i e^{iy}; a character survives a line iff m·k = 0.
    let rows = read_csv(&tmp.path().join("radon.csv"));
    let value = |r: &Vec<String>| {
        let n = r.len();
        (r[n - 2].parse::<f64>().unwrap(), r[n - 1].parse::<f64>().unwrap())
    };
    let (re, im) = value(&rows[0]);
    assert!(re.abs() < 1e-15 && (im + 0.25).abs() < 1e-15);
    let (re, im) = value(&rows[1]);
    assert!(re.abs() < 1e-15 && im.abs() < 1e-15);
    let (re, im) = value(&rows[2]);
    assert!((re - 0.5 * 2.0f64.cos()).abs() < 1e-15 && (im - 0.5 * 2.0f64.sin()).abs() < 1e-15);
}

#[test]
fn violated_contract_exits_three() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run(&config("verify-torus2.json"), tmp.path(), &["--tolerance", "1e-300"]);
    assert_eq!(code(&o), 3);
    assert_eq!(summary(tmp.path())["passed"], false);
}

#[test]
fn invalid_inputs_exit_two() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run(&tmp.path().join("missing.json"), tmp.path(), &[]);
    assert_eq!(code(&o), 2);

    let bad = write_config(tmp.path(), "{\"group\": {\"kind\": \"su2\"},\n \"band\": -1, \"command\": \"certify\"}");
    let o = run(&bad, tmp.path(), &[]);
    assert_eq!(code(&o), 2);
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("line 2") && err.contains("band"), "{err}");

    let no_witness = write_config(
        tmp.path(),
        r#"{"group": {"kind": "torus", "n": 2}, "band": 1, "command": "witness"}"#,
    );
    let o = run(&no_witness, tmp.path(), &[]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("no kernel witness"));

    let o = run(&config("certify-circle.json"), tmp.path(), &["--threads", "0"]);
    assert_eq!(code(&o), 2);
    let o = run(&config("certify-circle.json"), tmp.path(), &["--bogus"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn reruns_are_byte_identical_across_thread_counts() {
    for name in ["verify-torus2.json", "certify-so3.json", "witness-su2.json", "reconstruct-su2xcircle.json"] {
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        assert_eq!(code(&run(&config(name), a.path(), &["--threads", "1"])), 0);
        let o = Command::new(env!("CARGO_BIN_EXE_lie-radon"))
            .arg("--config")
            .arg(config(name))
            .arg("--out")
            .arg(b.path())
            .env("LIE_RADON_THREADS", "3")
            .output()
            .unwrap();
        assert_eq!(code(&o), 0);
        assert_eq!(dir_contents(a.path()), dir_contents(b.path()), "{name}");
    }
}

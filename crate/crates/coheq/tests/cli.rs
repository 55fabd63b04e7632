//! Black-box tests of the command-line binary: exit-code contract,
//! output files, determinism.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn coheq(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_coheq"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, contents: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, contents).unwrap();
    path.display().to_string()
}

const CAVITY_CFG: &str = r#"{
  "channel": {"type": "cavity", "k": 0.4, "kappa": 5.0, "omega_c": 10.0},
  "intensities": {"sigma_u_sq": 0.1, "sigma_w_sq": 0.2},
  "method": "sdp_nevpick",
  "grid": {"preset": "paper21"}
}"#;

const STATIC_CFG: &str = r#"{
  "channel": {"type": "static", "k": 0.8366600265340756, "m": 0.5477225575051661},
  "intensities": {"sigma_u_sq": 0.1, "sigma_w_sq": 4.0},
  "method": "closed_form"
}"#;

#[test]
fn design_then_verify_passes() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "cfg.json", STATIC_CFG);
    let out = coheq(
        &["design", "--config", &cfg, "--out", "out", "--grid-density", "200"],
        tmp.path(),
    );
    assert_eq!(out.status.code(), Some(0), "{out:?}");
    for f in ["design.json", "psd.csv", "bode.csv"] {
        assert!(tmp.path().join("out").join(f).exists(), "{f} missing");
    }
    let record = tmp.path().join("out/design.json");
    let v = coheq(
        &["verify", "--record", record.to_str().unwrap(), "--grid-density", "300"],
        tmp.path(),
    );
    assert_eq!(v.status.code(), Some(0), "{v:?}");
    let report: serde_json::Value =
        serde_json::from_slice(&v.stdout).expect("report is JSON");
    assert_eq!(report["passed"], serde_json::Value::Bool(true));
}

#[test]
fn identical_config_gives_identical_bytes() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "cfg.json", CAVITY_CFG);
    for out_dir in ["a", "b"] {
        let out = coheq(
            &["design", "--config", &cfg, "--out", out_dir, "--grid-density", "150"],
            tmp.path(),
        );
        assert_eq!(out.status.code(), Some(0), "{out:?}");
    }
    for f in ["design.json", "psd.csv", "bode.csv"] {
        let a = fs::read(tmp.path().join("a").join(f)).unwrap();
        let b = fs::read(tmp.path().join("b").join(f)).unwrap();
        assert_eq!(a, b, "{f} differs between runs");
    }
}

#[test]
fn invalid_channel_exits_2_with_error_json() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(
        tmp.path(),
        "bad.json",
        r#"{
          "channel": {"type": "cavity", "k": 0.7745966692414834, "kappa": 5.0, "omega_c": 10.0},
          "intensities": {"sigma_u_sq": 0.1, "sigma_w_sq": 0.2},
          "method": "closed_form"
        }"#,
    );
    let out = coheq(&["design", "--config", &cfg], tmp.path());
    assert_eq!(out.status.code(), Some(2));
    let err: serde_json::Value = serde_json::from_slice(&out.stdout).expect("error is JSON");
    assert!(err["detail"]
        .as_str()
        .unwrap()
        .contains("ParameterOutOfRange"));
}

#[test]
fn unparseable_inputs_exit_1() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "trunc.json", "{\"channel\": {");
    let out = coheq(&["design", "--config", &cfg], tmp.path());
    assert_eq!(out.status.code(), Some(1));
    let v = coheq(&["verify", "--record", &cfg], tmp.path());
    assert_eq!(v.status.code(), Some(1));
}

#[test]
fn tampered_record_fails_with_exit_3() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "cfg.json", STATIC_CFG);
    let out = coheq(
        &["design", "--config", &cfg, "--out", "out", "--grid-density", "150"],
        tmp.path(),
    );
    assert_eq!(out.status.code(), Some(0));
    let record_path = tmp.path().join("out/design.json");
    let mut record: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&record_path).unwrap()).unwrap();
    // inflate the h11 gain past the contraction limit
    record["blocks"]["h11"]["num_coeffs"] =
        serde_json::json!([["1.0500000000000000e0", "0.0000000000000000e0"]]);
    record["blocks"]["h11"]["den_coeffs"] =
        serde_json::json!([["1.0000000000000000e0", "0.0000000000000000e0"]]);
    fs::write(&record_path, serde_json::to_string(&record).unwrap()).unwrap();
    let v = coheq(
        &["verify", "--record", record_path.to_str().unwrap(), "--grid-density", "150"],
        tmp.path(),
    );
    assert_eq!(v.status.code(), Some(3), "{v:?}");
}

#[test]
fn figures_emit_expected_files() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "static.json", STATIC_CFG);
    let out = coheq(&["figures", "--config", &cfg, "--out", "figs"], tmp.path());
    assert_eq!(out.status.code(), Some(0), "{out:?}");
    let sweep = fs::read_to_string(tmp.path().join("figs/static_sweep.csv")).unwrap();
    assert!(sweep.starts_with("sigma_w_sq,h11_mag,p_e_sup,p_y_minus_u_sup\n"));
    assert_eq!(sweep.lines().count(), 41);

    let cav = write(tmp.path(), "cav.json", CAVITY_CFG);
    let out = coheq(
        &["figures", "--config", &cav, "--out", "cfigs", "--fig", "psds", "--grid-density", "80"],
        tmp.path(),
    );
    assert_eq!(out.status.code(), Some(0), "{out:?}");
    let psds = fs::read_to_string(tmp.path().join("cfigs/psds.csv")).unwrap();
    assert!(psds.starts_with("omega,ratio_theta_-0.95,ratio_theta_0,ratio_theta_0.95\n"));
    // figure name not applicable to this channel type
    let out = coheq(
        &["figures", "--config", &cav, "--out", "x", "--fig", "static_sweep"],
        tmp.path(),
    );
    assert_eq!(out.status.code(), Some(1));
}

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use quenchlab::cli::{parse_config, DEFAULT_BUDGET};
use quenchlab::LabError;

fn bundled() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs/rfim-2d-6x6.toml")
}

fn run(args: &[&str], config: &Path, out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_quenchlab"))
        .args(args)
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(out)
        .output()
        .unwrap()
}

fn write_config(dir: &Path, text: &str) -> PathBuf {
    let p = dir.join("cfg.toml");
    std::fs::write(&p, text).unwrap();
    p
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn polymer_verify_on_the_bundled_config() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["polymer-verify"], &bundled(), dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let mut rdr = csv::Reader::from_path(dir.path().join("polymer-verify.csv")).unwrap();
    let headers = rdr.headers().unwrap().clone();
    let col = headers.iter().position(|h| h == "max_rel_err").unwrap();
    let mut rows = 0;
    for r in rdr.records() {
        let err: f64 = r.unwrap()[col].parse().unwrap();
        assert!(err <= 1e-10);
        rows += 1;
    }
    assert_eq!(rows, 4);
    let manifest: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("polymer-verify.manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["status"], "pass");
    assert_eq!(manifest["seed"], 20240601);
}

#[test]
fn every_subcommand_writes_a_table_and_a_manifest() {
    let dir = tempfile::tempdir().unwrap();
    for cmd in [
        "peierls-scan",
        "polymer-verify",
        "stability-estimate",
        "coarsegrain-audit",
        "count-contours",
        "tail-probe",
        "symmetry-verify",
        "mcmc",
    ] {
        let o = run(&[cmd], &bundled(), dir.path());
        assert_eq!(o.status.code(), Some(0), "{cmd}: {}", stderr(&o));
        assert!(dir.path().join(format!("{cmd}.csv")).exists());
        assert!(dir.path().join(format!("{cmd}.manifest.json")).exists());
    }
    let audit = std::fs::read_to_string(dir.path().join("coarsegrain-audit.csv")).unwrap();
    assert!(audit.starts_with("instance_id,ℓ,lhs,rhs,ratio,constant_name"));
    let mcmc = std::fs::read_to_string(dir.path().join("mcmc.csv")).unwrap();
    assert!(mcmc.starts_with("draw,T,epsilon,agreement,tau_est"));
    let stab = std::fs::read_to_string(dir.path().join("stability-estimate.csv")).unwrap();
    assert!(stab.starts_with("event,epsilon,T,n_max,trials,p_hat,ci_lo,ci_hi,seed"));
    let leftovers: Vec<_> = std::fs::read_dir(dir.path())
        .unwrap()
        .filter_map(|e| e.ok())
        .filter(|e| e.file_name().to_string_lossy().ends_with(".tmp"))
        .collect();
    assert!(leftovers.is_empty());
}

#[test]
fn missing_model_is_a_config_error_naming_the_key() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "seed = 1\n[geometry]\nL = 6\n");
    let out = dir.path().join("out");
    let o = run(&["polymer-verify"], &cfg, &out);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("`model`"), "{}", stderr(&o));
    assert!(!out.join("polymer-verify.csv").exists());
}

#[test]
fn unknown_and_invalid_keys_are_named() {
    let base = "[model]\nmodel = \"rfim\"\nd = 2\n";
    let e = parse_config(&format!("{base}[geometry]\nwidth = 3\n")).unwrap_err();
    assert!(matches!(&e, LabError::Config { key, .. } if key == "geometry.width"), "{e}");
    let e = parse_config(&format!("{base}[disorder]\nepsilon = [0.1, -0.2]\n")).unwrap_err();
    assert!(matches!(&e, LabError::Config { key, .. } if key == "disorder.epsilon[1]"), "{e}");
    let e = parse_config("[model]\nmodel = \"rfim\"\nd = 2\nspin = 3\n").unwrap_err();
    assert!(matches!(&e, LabError::Config { key, .. } if key == "model.spin"), "{e}");
    let e = parse_config("[model]\nmodel = \"ising\"\nd = 2\n").unwrap_err();
    assert!(matches!(&e, LabError::Config { key, .. } if key == "model.model"), "{e}");
    let e = parse_config(&format!("{base}[sampler]\nT = [1.0, 0.0]\n")).unwrap_err();
    assert!(matches!(&e, LabError::Config { key, .. } if key == "sampler.T[1]"), "{e}");
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for cmd in ["stability-estimate", "mcmc", "coarsegrain-audit", "tail-probe"] {
        assert_eq!(run(&[cmd], &bundled(), &a).status.code(), Some(0));
        assert_eq!(run(&[cmd], &bundled(), &b).status.code(), Some(0));
        let x = std::fs::read(a.join(format!("{cmd}.csv"))).unwrap();
        let y = std::fs::read(b.join(format!("{cmd}.csv"))).unwrap();
        assert_eq!(x, y, "{cmd}");
        let strip = |p: PathBuf| {
            let mut v: serde_json::Value = serde_json::from_slice(&std::fs::read(p).unwrap()).unwrap();
            v.as_object_mut().unwrap().remove("wall_time_s");
            v
        };
        let name = format!("{cmd}.manifest.json");
        assert_eq!(strip(a.join(&name)), strip(b.join(&name)));
    }
}

#[test]
fn seed_flag_overrides_the_config() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["mcmc", "--seed", "99"], &bundled(), dir.path());
    assert_eq!(o.status.code(), Some(0));
    let m: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("mcmc.manifest.json")).unwrap()).unwrap();
    assert_eq!(m["seed"], 99);
}

#[test]
fn budget_overflow_exits_with_three() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["polymer-verify", "--budget", "4"], &bundled(), dir.path());
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(!dir.path().join("polymer-verify.csv").exists());
}

#[test]
fn failed_invariant_exits_with_one_and_names_it() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "[model]\nmodel = \"fa1b\"\nd = 2\nmu = 1.0\n");
    let o = run(&["peierls-scan"], &cfg, &dir.path().join("out"));
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("peierls_condition"));
    let m: serde_json::Value =
        serde_json::from_slice(&std::fs::read(dir.path().join("out/peierls-scan.manifest.json")).unwrap()).unwrap();
    assert_eq!(m["status"], "fail");
    assert_eq!(m["failed_invariant"], "peierls_condition");
}

#[test]
fn missing_config_file_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["mcmc"], &dir.path().join("absent.toml"), dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(DEFAULT_BUDGET > 0);
}

#[test]
fn headers_match_the_documented_schemas() {
    let dir = tempfile::tempdir().unwrap();
    let docs = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../docs/schemas");
    for cmd in ["peierls-scan", "count-contours", "symmetry-verify", "tail-probe", "mcmc", "stability-estimate"] {
        assert_eq!(run(&[cmd], &bundled(), dir.path()).status.code(), Some(0));
        let schema: serde_json::Value =
            serde_json::from_slice(&std::fs::read(docs.join(format!("{cmd}.csv.json"))).unwrap()).unwrap();
        let want: Vec<&str> = schema["fields"].as_array().unwrap().iter().map(|f| f["name"].as_str().unwrap()).collect();
        let mut rdr = csv::Reader::from_path(dir.path().join(format!("{cmd}.csv"))).unwrap();
        let got: Vec<String> = rdr.headers().unwrap().iter().map(String::from).collect();
        assert_eq!(got, want, "{cmd}");
    }
}

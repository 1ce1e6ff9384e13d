use std::path::{Path, PathBuf};
use std::process::Command;

use aglerlab_cli::run;
use serde_json::Value;
use tempfile::TempDir;

const Z: &str = r#"{"d":1,"terms":[{"alpha":[1],"re":1.0,"im":0.0}]}"#;
const ZERO_D2: &str = r#"{"d":2,"terms":[]}"#;
const PICK_BAD: &str = r#"{"d":1,"points":[[[0,0]],[[0.5,0]]],"targets":[[0,0],[0.9,0]]}"#;
const PICK_OK: &str =
    r#"{"d":2,"points":[[[0,0],[0,0]],[[0.5,0],[0,0]]],"targets":[[0,0],[0.5,0]]}"#;

fn kv5() -> String {
    let terms = [
        ([2, 0, 0], 1.0),
        ([0, 2, 0], 1.0),
        ([0, 0, 2], 1.0),
        ([1, 1, 0], -2.0),
        ([0, 1, 1], -2.0),
        ([1, 0, 1], -2.0),
    ];
    let body: Vec<String> = terms
        .iter()
        .map(|(a, c)| {
            format!(
                r#"{{"alpha":[{},{},{}],"re":{},"im":0.0}}"#,
                a[0],
                a[1],
                a[2],
                c / 5.0
            )
        })
        .collect();
    format!(r#"{{"d":3,"terms":[{}]}}"#, body.join(","))
}

struct Dir {
    tmp: TempDir,
}

impl Dir {
    fn new() -> Self {
        Self {
            tmp: tempfile::tempdir().unwrap(),
        }
    }

    fn path(&self, name: &str) -> PathBuf {
        self.tmp.path().join(name)
    }

    fn file(&self, name: &str, body: &str) -> String {
        let p = self.path(name);
        std::fs::write(&p, body).unwrap();
        p.display().to_string()
    }

    fn s(&self, name: &str) -> String {
        self.path(name).display().to_string()
    }

    /// Run in-process with `--out report.json -q`; returns exit code and report.
    fn run(&self, args: &[&str]) -> (i32, Value) {
        let out = self.s("report.json");
        let _ = std::fs::remove_file(&out);
        let mut argv = vec!["aglerlab", "-q", "--out", out.as_str()];
        argv.extend_from_slice(args);
        let code = run(argv);
        let report = std::fs::read_to_string(&out)
            .map(|t| serde_json::from_str(&t).unwrap())
            .unwrap_or(Value::Null);
        (code, report)
    }
}

fn read(p: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

#[test]
fn kv5_degree_two_writes_verified_witness() {
    let dir = Dir::new();
    let poly = dir.file("kv5.json", &kv5());
    let w = dir.s("w.json");
    let (code, rep) = dir.run(&[
        "cf-check",
        "--poly",
        &poly,
        "--degree",
        "2",
        "--witness-out",
        &w,
    ]);
    assert_eq!(code, 1, "{rep}");
    assert_eq!(rep["verdict"], "infeasible");
    assert_eq!(rep["schema_version"], 1);
    assert!(rep["result"]["witness_norm"].as_f64().unwrap() > 1.0);
    let file = read(Path::new(&w));
    assert_eq!(file["N"], 2);
    assert_eq!(file["witness"]["d"], 3);

    let (code, rep) = dir.run(&[
        "verify",
        "--poly",
        &poly,
        "--degree",
        "2",
        "--separator",
        &w,
    ]);
    assert_eq!(code, 0, "{rep}");
    assert_eq!(rep["verdict"], "passed");

    let t = dir.s("t.json");
    std::fs::write(&t, serde_json::to_string(&file["witness"]).unwrap()).unwrap();
    let (code, rep) = dir.run(&["verify", "--tuple", &t, "--degree", "2", "--poly", &poly]);
    assert_eq!(code, 0, "{rep}");
    assert!(rep["result"]["poly_norm"].as_f64().unwrap() > 1.0);
}

#[test]
fn z_degree_four_certificate_round_trip() {
    let dir = Dir::new();
    let poly = dir.file("z.json", Z);
    let cert = dir.s("cert.json");
    let (code, rep) = dir.run(&[
        "cf-check",
        "--poly",
        &poly,
        "--degree",
        "4",
        "--cert-out",
        &cert,
    ]);
    assert_eq!(code, 0, "{rep}");
    assert_eq!(rep["verdict"], "feasible");
    assert_eq!(
        rep["result"]["block_min_eigenvalues"]
            .as_array()
            .unwrap()
            .len(),
        1
    );

    let (code, rep) = dir.run(&[
        "verify",
        "--certificate",
        &cert,
        "--poly",
        &poly,
        "--degree",
        "4",
    ]);
    assert_eq!(code, 0, "{rep}");

    let mut file = read(Path::new(&cert));
    file["blocks"][0][0][0][0] = Value::from(5.0);
    let bad = dir.file("bad-cert.json", &file.to_string());
    let (code, rep) = dir.run(&[
        "verify",
        "--certificate",
        &bad,
        "--poly",
        &poly,
        "--degree",
        "4",
    ]);
    assert_eq!(code, 1, "{rep}");
    assert_eq!(rep["verdict"], "failed");

    let (code, _) = dir.run(&[
        "verify",
        "--certificate",
        &cert,
        "--poly",
        &poly,
        "--degree",
        "3",
    ]);
    assert_eq!(code, 65);
}

#[test]
fn realize_writes_colligation_that_verifies() {
    let dir = Dir::new();
    for (name, body, degree) in [("z.json", Z, "4"), ("zero.json", ZERO_D2, "3")] {
        let poly = dir.file(name, body);
        let col = dir.s("col.json");
        let (code, rep) = dir.run(&[
            "realize",
            "--poly",
            &poly,
            "--degree",
            degree,
            "--colligation-out",
            &col,
        ]);
        assert_eq!(code, 0, "{name}: {rep}");
        assert!(rep["result"]["unitarity_residual"].as_f64().unwrap() <= 1e-10);
        let (code, rep) = dir.run(&[
            "verify",
            "--colligation",
            &col,
            "--poly",
            &poly,
            "--degree",
            degree,
        ]);
        assert_eq!(code, 0, "{name}: {rep}");
    }
}

#[test]
fn pick_artifacts_verify() {
    let dir = Dir::new();
    let bad = dir.file("bad.json", PICK_BAD);
    let w = dir.s("pw.json");
    let (code, rep) = dir.run(&["pick", "--problem", &bad, "--witness-out", &w]);
    assert_eq!(code, 1, "{rep}");
    assert!(rep["result"]["witness_norm"].as_f64().unwrap() > 1.0);
    let (code, rep) = dir.run(&["verify", "--problem", &bad, "--separator", &w]);
    assert_eq!(code, 0, "{rep}");

    let ok = dir.file("ok.json", PICK_OK);
    let c = dir.s("pc.json");
    let (code, rep) = dir.run(&["pick", "--problem", &ok, "--cert-out", &c]);
    assert_eq!(code, 0, "{rep}");
    let (code, rep) = dir.run(&["verify", "--problem", &ok, "--certificate", &c]);
    assert_eq!(code, 0, "{rep}");
}

#[test]
fn repeated_runs_are_byte_identical() {
    let dir = Dir::new();
    let poly = dir.file("kv5.json", &kv5());
    let mut reports = Vec::new();
    let mut witnesses = Vec::new();
    for k in 0..2 {
        let out = dir.s(&format!("out{k}.json"));
        let w = dir.s(&format!("w{k}.json"));
        let code = run([
            "aglerlab",
            "-q",
            "--out",
            &out,
            "cf-check",
            "--poly",
            &poly,
            "--degree",
            "2",
            "--witness-out",
            &w,
        ]);
        assert_eq!(code, 1);
        reports.push(std::fs::read(&out).unwrap());
        witnesses.push(std::fs::read(&w).unwrap());
    }
    let strip = |b: &[u8]| {
        String::from_utf8(b.to_vec())
            .unwrap()
            .replace("w0.json", "")
            .replace("w1.json", "")
    };
    assert_eq!(strip(&reports[0]), strip(&reports[1]));
    assert_eq!(witnesses[0], witnesses[1]);
}

#[test]
fn exit_codes_for_bad_input() {
    let dir = Dir::new();
    assert_eq!(run(["aglerlab", "-q", "no-such-command"]), 64);
    assert_eq!(run(["aglerlab", "-q", "cf-check", "--degree", "2"]), 64);
    let poly = dir.file("z.json", Z);
    let (code, _) = dir.run(&["--tol=-1", "toeplitz", "--poly", &poly, "--degree", "2"]);
    assert_eq!(code, 64);

    let garbled = dir.file("garbled.json", "{\"d\": 1, \"terms\": [");
    let (code, rep) = dir.run(&["toeplitz", "--poly", &garbled, "--degree", "2"]);
    assert_eq!(code, 65);
    assert_eq!(rep["verdict"], "error");
    let missing = dir.s("missing.json");
    let (code, _) = dir.run(&["toeplitz", "--poly", &missing, "--degree", "2"]);
    assert_eq!(code, 65);
    let (code, _) = dir.run(&["toeplitz", "--poly", &poly, "--degree", "0"]);
    assert_eq!(code, 65);
}

#[test]
fn lattice_cap_gives_undecided() {
    let dir = Dir::new();
    let poly = dir.file("z.json", Z);
    let (code, rep) = dir.run(&[
        "--lattice-cap",
        "3",
        "cf-check",
        "--poly",
        &poly,
        "--degree",
        "4",
    ]);
    assert_eq!(code, 2, "{rep}");
    assert_eq!(rep["verdict"], "undecided");
}

#[test]
fn small_commands() {
    let dir = Dir::new();
    let (code, rep) = dir.run(&["lattice", "--d", "2", "--degree", "2"]);
    assert_eq!(code, 0);
    assert_eq!(rep["result"]["size"], 6);
    assert_eq!(rep["result"]["members"][1], serde_json::json!([1, 0]));
    assert_eq!(rep["result"]["members"][2], serde_json::json!([0, 1]));

    let poly = dir.file("z.json", Z);
    let (code, rep) = dir.run(&["toeplitz", "--poly", &poly, "--degree", "3"]);
    assert_eq!(code, 0);
    assert!((rep["result"]["norm"].as_f64().unwrap() - 1.0).abs() < 1e-12);
    let (code, rep) = dir.run(&["nil-norm", "--poly", &poly, "--degree", "3"]);
    assert_eq!(code, 0);
    assert!((rep["result"]["norm"].as_f64().unwrap() - 1.0).abs() < 1e-12);

    let (code, rep) = dir.run(&["gallery", "kv"]);
    assert_eq!(code, 0);
    assert!((rep["result"]["tuple_norm"].as_f64().unwrap() - 3.0 * 3f64.sqrt()).abs() < 1e-9);

    let csv = dir.s("hartz.csv");
    let (code, _) = dir.run(&["gallery", "hartz", "--n-max", "5", "--csv", &csv]);
    assert_eq!(code, 0);
    let text = std::fs::read_to_string(&csv).unwrap();
    assert_eq!(text.lines().count(), 6);

    let (code, rep) = dir.run(&[
        "witness",
        "--poly",
        &poly,
        "--c",
        "0.9",
        "--n-max",
        "3",
        "--witness-out",
        &dir.s("wt.json"),
    ]);
    assert_eq!(code, 1, "{rep}");
    assert_eq!(rep["result"]["N"], 1);
    let (code, _) = dir.run(&["witness", "--poly", &poly, "--c", "1.1", "--n-max", "2"]);
    assert_eq!(code, 0);
}

#[test]
fn agler_norm_brackets_half_plus_half_z() {
    let dir = Dir::new();
    let poly = dir.file(
        "h.json",
        r#"{"d":1,"terms":[{"alpha":[0],"re":0.5,"im":0.0},{"alpha":[1],"re":0.5,"im":0.0}]}"#,
    );
    let trace = dir.s("trace.csv");
    let (code, rep) = dir.run(&[
        "agler-norm",
        "--poly",
        &poly,
        "--degree",
        "1",
        "--trace-csv",
        &trace,
    ]);
    assert_eq!(code, 0, "{rep}");
    let lo = rep["result"]["lo"].as_f64().unwrap();
    let hi = rep["result"]["hi"].as_f64().unwrap();
    let golden = (1.0 + 5f64.sqrt()) / 4.0;
    assert!(
        lo <= golden + 1e-9 && golden <= hi && hi - lo <= 2e-4,
        "[{lo}, {hi}]"
    );
    assert!(std::fs::read_to_string(&trace)
        .unwrap()
        .starts_with("c_lo,c_hi,N"));
}

#[test]
fn binary_reads_environment_and_flags_override() {
    let dir = Dir::new();
    let poly = dir.file("z.json", Z);
    let bin = env!("CARGO_BIN_EXE_aglerlab");
    let run_bin = |extra: &[&str]| {
        let mut args = vec!["-q"];
        args.extend_from_slice(extra);
        args.extend_from_slice(&["cf-check", "--poly", &poly, "--degree", "4", "--cert-out"]);
        let cert = dir.s("c.json");
        args.push(&cert);
        let out = Command::new(bin)
            .args(&args)
            .env("AGLERLAB_LATTICE_CAP", "3")
            .output()
            .unwrap();
        let report: Value = serde_json::from_slice(&out.stdout).unwrap();
        (out.status.code().unwrap(), report)
    };
    let (code, rep) = run_bin(&[]);
    assert_eq!(code, 2, "{rep}");
    let (code, rep) = run_bin(&["--lattice-cap", "100"]);
    assert_eq!(code, 0, "{rep}");
    assert_eq!(rep["verdict"], "feasible");
}

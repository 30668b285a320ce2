use std::path::Path;
use std::process::{Command, Output};

fn shadowsig(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_shadowsig"))
        .current_dir(dir)
        .env("SHADOWSIG_THREADS", "2")
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = shadowsig(dir, args);
    assert_eq!(out.status.code(), Some(0), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

#[test]
fn honest_signature_is_certified() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    ok(p, &["--seed", "3", "keygen", "--ensemble", "haar-brickwork 4 4", "--shots", "6000", "--sk", "k.sk", "--pk", "k.pk"]);
    ok(p, &["sign", "--sk", "k.sk", "--message", "1", "--out", "s.sig"]);
    let csv = ok(p, &["--seed", "3", "--format", "csv", "verify", "--pk", "k.pk", "--sig", "s.sig", "--tau", "8", "--no-shot-check"]);
    let all = csv.lines().nth(1).unwrap();
    assert!(all.starts_with("all,") && all.contains("Certified"), "{csv}");
    assert!(p.join("shadowsig.manifest.json").exists());
    let manifest: serde_json::Value = serde_json::from_slice(&std::fs::read(p.join("s.sig.manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["tool"], "shadowsig");
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let missing = shadowsig(dir.path(), &["circuit", "analyze", "--circuit", "nope.circ"]);
    assert_eq!(missing.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&missing.stderr).starts_with("shadowsig: error [io]"));
    assert_eq!(shadowsig(dir.path(), &["tau", "plan", "--bogus"]).status.code(), Some(2));
    let bad_threads = Command::new(env!("CARGO_BIN_EXE_shadowsig"))
        .current_dir(dir.path())
        .env("SHADOWSIG_THREADS", "zero")
        .args(["bench", "--n", "4"])
        .output()
        .unwrap();
    assert_eq!(bad_threads.status.code(), Some(2));
}

#[test]
fn same_seed_same_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["--seed", "5", "--format", "csv", "circuit", "gen", "--ensemble", "experiment-ansatz 4 2 3"];
    let a = ok(dir.path(), &args);
    assert_eq!(a, ok(dir.path(), &args));
    let other = ["--seed", "6", "--format", "csv", "circuit", "gen", "--ensemble", "experiment-ansatz 4 2 3"];
    assert_ne!(a, ok(dir.path(), &other));
}

#[test]
fn sweeps_resume_and_handle_empty_grids() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    ok(p, &["--out", "small.csv", "tau", "sweep", "--n", "3", "--m", "1,2", "--states", "2"]);
    let full = ok(p, &["--out", "full.csv", "tau", "sweep", "--n", "3,4", "--m", "1,2", "--states", "2"]);
    assert!(full.is_empty());
    std::fs::copy(p.join("small.csv"), p.join("resumed.csv")).unwrap();
    ok(p, &["--out", "resumed.csv", "tau", "sweep", "--n", "3,4", "--m", "1,2", "--states", "2"]);
    let read = |f: &str| std::fs::read_to_string(p.join(f)).unwrap();
    assert_eq!(read("resumed.csv"), read("full.csv"));
    assert_eq!(read("full.csv").lines().count(), 1 + 8);

    ok(p, &["--out", "empty.csv", "tau", "sweep", "--states", "0"]);
    let empty = read("empty.csv");
    assert_eq!(empty.lines().count(), 1, "{empty}");
    assert!(empty.starts_with("cell,"));
}

#[test]
fn qed_run_reports_break_even() {
    let dir = tempfile::tempdir().unwrap();
    ok(
        dir.path(),
        &["--seed", "1", "--out", "qed.csv", "qed", "run", "--n", "8", "--depth", "4", "--blocks", "2", "--p2", "0.005", "--shots", "10000"],
    );
    let mut rdr = csv::Reader::from_path(dir.path().join("qed.csv")).unwrap();
    let head = rdr.headers().unwrap().clone();
    let col = |name: &str| head.iter().position(|h| h == name).unwrap();
    let (ty, fid, se) = (col("type"), col("fidelity"), col("stderr"));
    let rows: Vec<csv::StringRecord> = rdr.records().map(|r| r.unwrap()).collect();
    let get = |t: &str| {
        let r = rows.iter().find(|r| &r[ty] == t).unwrap();
        (r[fid].parse::<f64>().unwrap(), r[se].parse::<f64>().unwrap())
    };
    let (fe, se_e) = get("iceberg");
    let (fp, se_p) = get("physical");
    assert!(fe - fp > 3.0 * se_e.hypot(se_p), "iceberg {fe} ± {se_e}, physical {fp} ± {se_p}");
}

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn dctofdm(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dctofdm"))
        .args(args)
        .arg("--out")
        .arg(out)
        .env_remove("DCTOFDM_OUT")
        .output()
        .unwrap()
}

fn text(o: &Output) -> String {
    format!(
        "{}{}",
        String::from_utf8_lossy(&o.stdout),
        String::from_utf8_lossy(&o.stderr)
    )
}

fn manifest(dir: &Path, name: &str) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join(format!("{name}.manifest.json"))).unwrap()).unwrap()
}

const SMALL: [&str; 4] = ["--iters", "4", "--snr-db", "0,10"];

#[test]
fn flops_prints_banded_count() {
    let dir = tempfile::tempdir().unwrap();
    let o = dctofdm(&["flops"], dir.path());
    assert!(o.status.success(), "{}", text(&o));
    let out = text(&o);
    assert!(out.contains("21273728"), "{out}");
    assert!(out.contains("25247808"));
    assert!(out.contains("recursion audit"));
    let m = manifest(dir.path(), "flops");
    assert_eq!(m["subcommand"], "flops");
    assert_eq!(m["outputs"].as_array().unwrap().len(), 2);
}

#[test]
fn ber_csv_manifest_and_check() {
    let dir = tempfile::tempdir().unwrap();
    let mut args = vec!["ber", "--plot"];
    args.extend(SMALL);
    let o = dctofdm(&args, dir.path());
    assert!(o.status.success(), "{}", text(&o));
    let csv = fs::read_to_string(dir.path().join("ber.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "snr_db,ber,total_bits,failed_iters,equalizer,tau,alpha,eps_max,seed"
    );
    assert_eq!(lines.count(), 2);
    assert!(dir.path().join("ber.svg").exists());

    let m = manifest(dir.path(), "ber");
    let outputs = m["outputs"].as_array().unwrap();
    assert_eq!(outputs.len(), 2);
    for a in outputs {
        let bytes = fs::read(dir.path().join(a["path"].as_str().unwrap())).unwrap();
        let digest = dctofdm_sha(&bytes);
        assert_eq!(a["sha256"].as_str().unwrap(), digest);
    }
    assert_eq!(m["config"]["iters"], "4");

    let mut again = args.clone();
    again.push("--check");
    let o = dctofdm(&again, dir.path());
    assert!(o.status.success(), "{}", text(&o));
    assert!(text(&o).contains("check passed"));
    assert_eq!(fs::read_to_string(dir.path().join("ber.csv")).unwrap(), csv);

    fs::write(dir.path().join("ber.csv"), "tampered").unwrap();
    let o = dctofdm(&again, dir.path());
    assert_eq!(o.status.code(), Some(1), "{}", text(&o));
    assert!(text(&o).contains("ber.csv"));
}

fn dctofdm_sha(bytes: &[u8]) -> String {
    use sha2::{Digest, Sha256};
    hex::encode(Sha256::digest(bytes))
}

#[test]
fn flags_override_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    fs::write(&cfg, "tau = 5\niters = 2\nsnr_db = 0:10:10\n").unwrap();
    let o = dctofdm(
        &["ber", "--config", cfg.to_str().unwrap(), "--tau", "7"],
        &dir.path().join("o"),
    );
    assert!(o.status.success(), "{}", text(&o));
    let m = manifest(&dir.path().join("o"), "ber");
    assert_eq!(m["config"]["tau"], "7");
    assert_eq!(m["config"]["iters"], "2");
    assert_eq!(m["config"]["snr_db"], "0,10");
    assert_eq!(m["config"]["n_cp"], "16");
}

#[test]
fn range_error_names_bound() {
    let dir = tempfile::tempdir().unwrap();
    let o = dctofdm(&["ber", "--tau", "99"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(text(&o).contains("n − 1 = 63"), "{}", text(&o));
}

#[test]
fn unknown_key_lists_keys() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    fs::write(&cfg, "snr = 5\n").unwrap();
    let o = dctofdm(&["ber", "--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(2));
    let t = text(&o);
    assert!(
        t.contains("\"snr\"") && t.contains("eps_max") && t.contains("delta_h"),
        "{t}"
    );
}

#[test]
fn unwritable_output_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    fs::write(&blocker, "x").unwrap();
    let o = dctofdm(&["flops"], &blocker.join("sub"));
    assert_eq!(o.status.code(), Some(2), "{}", text(&o));
    assert!(text(&o).contains("output directory"));
}

#[test]
fn env_sets_output_dir() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_dctofdm"))
        .arg("flops")
        .env("DCTOFDM_OUT", dir.path())
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", text(&o));
    assert!(dir.path().join("flops.manifest.json").exists());
}

#[test]
fn tau_sweep_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let mut args = vec!["sweep", "tau", "--grid", "0,15,full,no-cfo"];
    args.extend(SMALL);
    let a = dctofdm(&args, &dir.path().join("a"));
    let b = dctofdm(&args, &dir.path().join("b"));
    assert!(a.status.success() && b.status.success(), "{}", text(&a));
    let csv_a = fs::read(dir.path().join("a/sweep-tau.csv")).unwrap();
    assert_eq!(csv_a, fs::read(dir.path().join("b/sweep-tau.csv")).unwrap());
    let csv = String::from_utf8(csv_a).unwrap();
    assert!(csv.starts_with("tau,snr_db,"));
    assert_eq!(csv.lines().count(), 1 + 4 * 2);
    assert!(csv.contains("\nno-cfo,"));
}

#[test]
fn bad_sweep_grid_is_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = dctofdm(&["sweep", "tau", "--grid", "0,64"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(text(&o).contains("n − 1 = 63"));
}

#[test]
fn bench_prints_eta_table() {
    let dir = tempfile::tempdir().unwrap();
    let o = dctofdm(
        &[
            "bench", "--sigmas", "1", "--reps", "1", "--n", "16", "--n-cp", "8", "--tau", "3",
        ],
        dir.path(),
    );
    assert!(o.status.success(), "{}", text(&o));
    let t = text(&o);
    assert!(t.contains("η%") && t.contains("lmmse-fde") && t.contains("----"), "{t}");
    let csv = fs::read_to_string(dir.path().join("bench.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 5);
}

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn run(dir: &Path, config: &str, args: &[&str]) -> Output {
    let cfg = dir.join("run.ini");
    fs::write(&cfg, config).unwrap();
    Command::new(env!("CARGO_BIN_EXE_cuspidal"))
        .args(args)
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(dir.join("out"))
        .output()
        .unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn json(dir: &Path, name: &str) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join("out").join(name)).unwrap()).unwrap()
}

fn read(dir: &Path, name: &str) -> Vec<u8> {
    fs::read(dir.join("out").join(name)).unwrap()
}

fn ok(o: &Output) {
    assert_eq!(code(o), 0, "stderr: {}", String::from_utf8_lossy(&o.stderr));
}

const GMF: &str = "[run]\nseed = 4\nt_max = 8\n[group]\nname = modular\n[gmf]\ndelta = 1\nshell = 7\nsamples = 6\nt_grid = 1 5 0.5\n";

const SYNTHETIC: &str = "[gauge]\nname = stratmann\nkmin = 1\nkmax = 2\n[synthetic]\nevents = 2000\nsamples = 4\n";

#[test]
fn outputs_do_not_depend_on_threads() {
    for (cfg, cmd, files) in [
        (GMF, "gmf-check", &["gmf_traces.csv", "gmf_summary.json"][..]),
        (SYNTHETIC, "dichotomy", &["dichotomy_windows.csv", "dichotomy_trace.csv", "dichotomy_summary.json"][..]),
    ] {
        let (a, b) = (TempDir::new().unwrap(), TempDir::new().unwrap());
        ok(&run(a.path(), cfg, &[cmd, "--threads", "1"]));
        ok(&run(b.path(), cfg, &[cmd, "--threads", "3"]));
        for f in files {
            assert_eq!(read(a.path(), f), read(b.path(), f), "{cmd}: {f} differs");
        }
    }
}

#[test]
fn seed_changes_samples() {
    let cfg = "[group]\nname = hecke-3\n";
    let (a, b) = (TempDir::new().unwrap(), TempDir::new().unwrap());
    ok(&run(a.path(), cfg, &["limitset", "--seed", "1", "--samples", "50"]));
    ok(&run(b.path(), cfg, &["limitset", "--seed", "2", "--samples", "50"]));
    let body = |d: &Path| read(d, "limitset.csv").split(|&c| c == b'\n').skip(2).map(<[u8]>::to_vec).collect::<Vec<_>>();
    assert_eq!(body(a.path()).len(), 51);
    assert_ne!(body(a.path()), body(b.path()));
}

#[test]
fn orbit_at_zero_radius_is_the_identity() {
    let d = TempDir::new().unwrap();
    ok(&run(d.path(), "[group]\nname = modular\n", &["orbit", "--t-max", "0"]));
    let text = String::from_utf8(read(d.path(), "orbit.csv")).unwrap();
    let rows: Vec<&str> = text.lines().skip(2).collect();
    assert_eq!(rows.len(), 1);
    assert!(rows[0].ends_with(",0,0"), "{}", rows[0]);
}

#[test]
fn config_hash_is_stamped() {
    let d = TempDir::new().unwrap();
    let cfg = "[group]\nname = cyclic-3\n";
    ok(&run(d.path(), cfg, &["delta", "--t-max", "20"]));
    let want = {
        use sha2::Digest;
        hex::encode(sha2::Sha256::digest(cfg.as_bytes()))
    };
    assert_eq!(json(d.path(), "delta.json")["config_sha256"], want.as_str());
    let delta = json(d.path(), "delta.json")["result"]["estimate"]["delta"].as_f64().unwrap();
    assert!((delta - 0.5).abs() < 0.01, "{delta}");
    ok(&run(d.path(), cfg, &["orbit", "--t-max", "5"]));
    let text = String::from_utf8(read(d.path(), "orbit.csv")).unwrap();
    assert!(text.starts_with(&format!("# command=orbit config_sha256={want} seed=0\n")));
}

#[test]
fn stratmann_gauge_has_zero_hausdorff_measure() {
    let d = TempDir::new().unwrap();
    ok(&run(d.path(), "[gauge]\nname = stratmann\nkmin = 1\nkmax = 2\n", &["gauge-classify"]));
    let v = json(d.path(), "verdict.json");
    assert_eq!(v["result"]["hausdorff"], "zero");
}

#[test]
fn hausdorff_side_needs_a_rank_above_delta() {
    let d = TempDir::new().unwrap();
    ok(&run(d.path(), "[gauge]\ndelta = 5/2\nc_log = 1\nkmin = 1\nkmax = 2\n", &["gauge-classify"]));
    assert_eq!(json(d.path(), "verdict.json")["result"]["hausdorff"], "not_applicable");
}

#[test]
fn empty_target_has_no_hits() {
    let d = TempDir::new().unwrap();
    let cfg = "[run]\nt_max = 8\n[group]\nname = modular\n[khinchin]\ndelta = 1\nphi = constant 0\nshell = 7\n";
    ok(&run(d.path(), cfg, &["khinchin"]));
    let s = json(d.path(), "khinchin_summary.json");
    assert_eq!(s["result"]["total_hits"], 0);
    assert_eq!(s["result"]["series"], "converges");
    let text = String::from_utf8(read(d.path(), "khinchin_hits.csv")).unwrap();
    assert_eq!(text.lines().count(), 2);
}

#[test]
fn exit_codes() {
    let d = TempDir::new().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_cuspidal")).arg("orbit").output().unwrap();
    assert_eq!(code(&o), 2);
    assert_eq!(code(&run(d.path(), "[group]\nname modular\n", &["orbit"])), 2);
    assert_eq!(code(&run(d.path(), "[group]\nname = nowhere\n", &["orbit"])), 2);
    assert_eq!(code(&run(d.path(), "[group]\nname = modular\n", &["orbit", "--t-max", "41"])), 2);
    assert_eq!(code(&run(d.path(), "[group]\nname = modular\n", &["orbit", "--threads", "0"])), 2);
    let o = run(d.path(), "[group]\nname = cyclic-3\n", &["delta", "--t-max", "1"]);
    assert_eq!(code(&o), 3, "stderr: {}", String::from_utf8_lossy(&o.stderr));
    // sum 1/n sits on the threshold
    let cfg = "[run]\nt_max = 8\n[group]\nname = modular\n[khinchin]\ndelta = 1\nphi = log-power 1 1\nshell = 7\n";
    let o = run(d.path(), cfg, &["khinchin"]);
    assert_eq!(code(&o), 4, "stderr: {}", String::from_utf8_lossy(&o.stderr));
    assert!(d.path().join("out/khinchin_summary.json").exists());
}

#[test]
fn group_file_resolves_relative_to_config() {
    let d = TempDir::new().unwrap();
    let sub: PathBuf = d.path().join("groups");
    fs::create_dir(&sub).unwrap();
    fs::write(sub.join("h.ini"), "[group]\nlabel = h3\ngenerator = 1 3 0 1\ngenerator = 0 -1 1 0\ncusp = inf 1 0.5 0\n").unwrap();
    ok(&run(d.path(), "[group]\nfile = groups/h.ini\n", &["delta", "--t-max", "9"]));
    assert_eq!(json(d.path(), "delta.json")["result"]["group"], "h3");
}

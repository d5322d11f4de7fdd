use std::path::Path;
use std::process::{Command, Output};

fn toeprec(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_toeprec")).current_dir(dir).args(args).output().unwrap()
}

fn ok(out: &Output) {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn gen_sense_recover() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(&toeprec(d, &["gen", "--n", "32", "--spike", "0.2:1.0", "--seed", "7", "--out", "truth.json"]));
    ok(&toeprec(
        d,
        &["sense", "--truth", "truth.json", "--law", "gaussian", "--m", "30", "--eta", "0", "--p", "2", "--seed", "9", "--out", "meas.json"],
    ));
    ok(&toeprec(d, &["recover", "--measurements", "meas.json", "--truth", "truth.json", "--out", "report.json"]));
    let report: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(d.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["converged"], true);
    assert!(report["certificate"]["rel_error"].as_f64().unwrap() <= 1e-3);
}

#[test]
fn lazy_measurements_replay() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(&toeprec(d, &["gen", "--n", "16", "--spike", "0:1", "--out", "t.json"]));
    for (flag, out) in [(None, "full.json"), (Some("--lazy"), "lazy.json")] {
        let mut args = vec!["sense", "--truth", "t.json", "--m", "20", "--law", "rademacher", "--out", out];
        args.extend(flag);
        ok(&toeprec(d, &args));
    }
    ok(&toeprec(d, &["recover", "--measurements", "full.json", "--out", "a.json"]));
    ok(&toeprec(d, &["recover", "--measurements", "lazy.json", "--out", "b.json"]));
    assert_eq!(std::fs::read(d.join("a.json")).unwrap(), std::fs::read(d.join("b.json")).unwrap());
}

#[test]
fn verify_quick_passes() {
    let out = toeprec(Path::new("."), &["verify", "--quick"]);
    ok(&out);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.lines().count() >= 5);
    assert!(text.lines().all(|l| l.starts_with("PASS ")));
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let args = |out: &'static str| {
        vec!["phase", "--n", "16", "--m", "6,12", "--trials", "3", "--law", "gaussian,uniform", "--seed", "11", "--out", out]
    };
    ok(&toeprec(d, &args("a.csv")));
    ok(&toeprec(d, &args("b.csv")));
    let mut threaded = args("c.csv");
    threaded.extend(["--threads", "3"]);
    ok(&toeprec(d, &threaded));
    let a = std::fs::read(d.join("a.csv")).unwrap();
    assert_eq!(a, std::fs::read(d.join("b.csv")).unwrap());
    assert_eq!(a, std::fs::read(d.join("c.csv")).unwrap());
    assert_eq!(std::fs::read(d.join("a.json")).unwrap(), std::fs::read(d.join("b.json")).unwrap());
    let header = String::from_utf8(a).unwrap().lines().next().unwrap().to_owned();
    assert!(header.starts_with("n,r,spikes,m,law,trial"));
}

#[test]
fn specnorm_and_smallball_write_sidecars() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(&toeprec(d, &["specnorm", "--n", "8,12,16", "--m", "2,4,8", "--trials", "30", "--out", "s.csv"]));
    ok(&toeprec(d, &["smallball", "--n", "8", "--trials", "2000", "--law", "rademacher", "--out", "b.csv"]));
    let side: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(d.join("b.json")).unwrap()).unwrap();
    assert_eq!(side["experiment"], "smallball");
    assert_eq!(side["rows"], 9);
    assert!(d.join("s.json").exists());
}

#[test]
fn usage_errors_exit_one() {
    let d = Path::new(".");
    for args in [
        &["frobnicate"][..],
        &["gen", "--n", "8", "--spike", "0.7:1", "--out", "/nonexistent/x.json"],
        &["gen", "--n", "8", "--spike", "nope", "--out", "x.json"],
        &["sense", "--truth", "/nonexistent.json", "--m", "4", "--out", "x.json"],
        &["phase", "--law", "cauchy", "--out", "x.csv"],
    ] {
        let out = toeprec(d, args);
        assert_eq!(out.status.code(), Some(1), "{args:?}");
        assert!(String::from_utf8_lossy(&out.stderr).starts_with("ERROR:"), "{args:?}");
    }
}

#[test]
fn nonconvergence_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    ok(&toeprec(d, &["gen", "--n", "24", "--random-spikes", "2", "--out", "t.json"]));
    ok(&toeprec(d, &["sense", "--truth", "t.json", "--m", "10", "--out", "m.json"]));
    std::fs::write(d.join("cfg.txt"), "max_iter = 2\nadapt = false\n").unwrap();
    let out = toeprec(d, &["recover", "--measurements", "m.json", "--config", "cfg.txt", "--out", "r.json"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(d.join("r.json").exists());
}

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_expandforge"));
    c.env_remove("EXPANDFORGE_SEED");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn toygen_and_expand_counts() {
    let dir = tempfile::tempdir().unwrap();
    let train = dir.path().join("train.gifx");
    let big = dir.path().join("big.gifx");
    let man = dir.path().join("big.json");
    let out =
        run(&["toygen", "--classes", "4", "--per-class", "25", "--size", "16", "--seed", "7", "--out", s(&train)]);
    assert!(out.status.success());
    let data = expandforge::pipeline::read_dataset(&train).unwrap();
    assert_eq!((data.len(), data.image_shape()), (100, Some((16, 16, 1))));

    let out = run(&[
        "expand",
        "--in",
        s(&train),
        "--method",
        "gif_latent",
        "--ratio",
        "5",
        "--epsilon",
        "5.0",
        "--steps",
        "10",
        "--seed",
        "7",
        "--out",
        s(&big),
        "--manifest",
        s(&man),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(expandforge::pipeline::read_dataset(&big).unwrap().len(), 600);
    assert_eq!(expandforge::pipeline::read_manifest(&man).unwrap().records.len(), 500);
}

#[test]
fn commands_are_idempotent() {
    let dir = tempfile::tempdir().unwrap();
    let train = dir.path().join("t.gifx");
    run(&["toygen", "--per-class", "3", "--seed", "2", "--out", s(&train)]);
    let mut outputs = Vec::new();
    for i in 0..2 {
        let (d, m) = (dir.path().join(format!("d{i}.gifx")), dir.path().join(format!("m{i}.json")));
        let workers = if i == 0 { "1" } else { "3" };
        let out = run(&[
            "expand",
            "--in",
            s(&train),
            "--method",
            "selective_cutout",
            "--seed",
            "4",
            "--workers",
            workers,
            "--out",
            s(&d),
            "--manifest",
            s(&m),
        ]);
        assert!(out.status.success());
        outputs.push((fs::read(d).unwrap(), fs::read(m).unwrap()));
    }
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn seed_env_applies_when_flag_absent() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b, c) = (dir.path().join("a"), dir.path().join("b"), dir.path().join("c"));
    assert!(bin().env("EXPANDFORGE_SEED", "11").args(["toygen", "--out", s(&a)]).status().unwrap().success());
    assert!(run(&["toygen", "--seed", "11", "--out", s(&b)]).status.success());
    assert!(bin()
        .env("EXPANDFORGE_SEED", "11")
        .args(["toygen", "--seed", "12", "--out", s(&c)])
        .status()
        .unwrap()
        .success());
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    assert_ne!(fs::read(&a).unwrap(), fs::read(&c).unwrap());
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let train = dir.path().join("t.gifx");
    run(&["toygen", "--per-class", "2", "--out", s(&train)]);
    let o = |n: &str| dir.path().join(n);

    let out = run(&["expand", "--in", s(&train), "--method", "warp", "--out", s(&o("x")), "--manifest", s(&o("y"))]);
    assert_eq!(out.status.code(), Some(1));
    let out = run(&["toygen", "--bogus-flag", "--out", s(&o("z"))]);
    assert_eq!(out.status.code(), Some(1));
    let out = run(&[
        "expand",
        "--in",
        s(&train),
        "--method",
        "gif_embed",
        "--lambda-div",
        "-2",
        "--out",
        s(&o("x")),
        "--manifest",
        s(&o("y")),
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--lambda-div"));

    fs::write(o("bad.gifx"), b"GIFY0000").unwrap();
    let out = run(&[
        "expand",
        "--in",
        s(&o("bad.gifx")),
        "--method",
        "cutout",
        "--out",
        s(&o("x")),
        "--manifest",
        s(&o("y")),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("bad.gifx"));
    let out = run(&[
        "expand",
        "--in",
        s(&o("missing.gifx")),
        "--method",
        "cutout",
        "--out",
        s(&o("x")),
        "--manifest",
        s(&o("y")),
    ]);
    assert_eq!(out.status.code(), Some(2));

    // A huge step size drives the objective to infinity.
    let out = run(&[
        "expand",
        "--in",
        s(&train),
        "--method",
        "gif_latent",
        "--step-size",
        "1e308",
        "--epsilon",
        "inf",
        "--out",
        s(&o("x")),
        "--manifest",
        s(&o("y")),
    ]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn help_lists_defaults() {
    let out = run(&["expand", "--help"]);
    let text = String::from_utf8_lossy(&out.stdout);
    for needle in [
        "--ratio",
        "[default: 5]",
        "0.1 for gif_embed, 5.0 for gif_latent",
        "--steps",
        "[default: 10]",
        "--lambda-div",
        "--noise-mode",
        "--selection",
        "--workers",
        "EXPANDFORGE_SEED",
    ] {
        assert!(text.contains(needle), "missing {needle}");
    }
    let out = run(&["traineval", "--help"]);
    let text = String::from_utf8_lossy(&out.stdout);
    for needle in ["[default: 32]", "[default: 100]", "[default: 0.05]"] {
        assert!(text.contains(needle), "missing {needle}");
    }
}

#[test]
fn report_joins_metrics() {
    let dir = tempfile::tempdir().unwrap();
    let p = |n: &str| dir.path().join(n);
    run(&["toygen", "--per-class", "5", "--seed", "1", "--out", s(&p("tr.gifx"))]);
    run(&["toygen", "--per-class", "5", "--seed", "2", "--out", s(&p("te.gifx"))]);
    run(&[
        "expand",
        "--in",
        s(&p("tr.gifx")),
        "--method",
        "cutout",
        "--ratio",
        "2",
        "--out",
        s(&p("big.gifx")),
        "--manifest",
        s(&p("big.json")),
    ]);
    let a = run(&[
        "traineval",
        "--train",
        s(&p("tr.gifx")),
        "--test",
        s(&p("te.gifx")),
        "--epochs",
        "20",
        "--out",
        s(&p("a.json")),
    ]);
    assert!(a.status.success(), "{}", String::from_utf8_lossy(&a.stderr));
    let b = run(&[
        "traineval",
        "--train",
        s(&p("big.gifx")),
        "--test",
        s(&p("te.gifx")),
        "--manifest",
        s(&p("big.json")),
        "--epochs",
        "20",
        "--out",
        s(&p("b.json")),
    ]);
    assert!(b.status.success(), "{}", String::from_utf8_lossy(&b.stderr));
    let r = run(&["report", "--metrics", s(&p("a.json")), s(&p("b.json")), "--out", s(&p("cmp.csv"))]);
    assert!(r.status.success());
    let csv = fs::read_to_string(p("cmp.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 3);
    assert_eq!(lines[0], "method,ratio,seed,accuracy,macro_accuracy,covering_radius");
    assert!(lines[1].starts_with("none,0,"));
    assert!(lines[2].starts_with("cutout,2,0,"));
}

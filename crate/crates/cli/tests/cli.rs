use std::path::Path;
use std::process::{Command, Output};

fn splatpress(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_splatpress"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str], cwd: &Path) -> String {
    let out = splatpress(args, cwd);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn synth(dir: &Path) {
    ok(
        &[
            "synth",
            "-o",
            ".",
            "--primitives",
            "4000",
            "--cameras",
            "12",
            "--resolution",
            "96",
            "--seed",
            "5",
        ],
        dir,
    );
}

const FAST: [&str; 4] = ["--eval-max-dim", "64", "--stats-max-dim", "96"];

fn error_json(out: &Output) -> serde_json::Value {
    let text = String::from_utf8_lossy(&out.stderr);
    serde_json::from_str(text.trim()).unwrap_or_else(|e| panic!("{e}: {text}"))
}

#[test]
fn synth_compress_decompress_stats() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    synth(d);
    for f in ["scene.ply", "ground_truth.ply", "cameras.json"] {
        assert!(d.join(f).is_file(), "{f}");
    }
    let mut args = vec![
        "compress",
        "scene.ply",
        "cameras.json",
        "-o",
        "out.rgs",
        "--reference",
        "ground_truth.ply",
        "--report-json",
        "report.json",
        "--report",
        "report.csv",
        "--checkpoints",
        ".",
    ];
    args.extend(FAST);
    ok(&args, d);
    assert!(d.join("pruned.ply").is_file() && d.join("sh_culled.ply").is_file());
    let report: serde_json::Value =
        serde_json::from_slice(&std::fs::read(d.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["rows"].as_array().unwrap().len(), 4);
    assert_eq!(
        std::fs::read_to_string(d.join("report.csv"))
            .unwrap()
            .lines()
            .count(),
        5
    );

    let stats: serde_json::Value =
        serde_json::from_str(&ok(&["stats", "out.rgs", "--json"], d)).unwrap();
    let rgs_len = std::fs::metadata(d.join("out.rgs")).unwrap().len();
    assert_eq!(stats["total_bytes"].as_u64().unwrap(), rgs_len);
    assert!(ok(&["stats", "out.rgs", "--codebooks"], d).contains("entries"));

    ok(&["decompress", "out.rgs", "-o", "back.ply"], d);
    let back: serde_json::Value =
        serde_json::from_str(&ok(&["stats", "back.ply", "--json"], d)).unwrap();
    assert_eq!(back["primitives"], stats["primitives"]);
    assert_eq!(back["band_counts"], stats["band_counts"]);

    ok(
        &[
            "render",
            "out.rgs",
            "cameras.json",
            "-o",
            "frames",
            "--view",
            "2",
            "--max-dim",
            "48",
        ],
        d,
    );
    assert_eq!(std::fs::read_dir(d.join("frames")).unwrap().count(), 1);
}

#[test]
fn separate_stages_reproduce_compress() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    synth(d);
    let with = |mut v: Vec<&'static str>| {
        v.extend(FAST);
        v
    };
    ok(
        &with(vec![
            "compress",
            "scene.ply",
            "cameras.json",
            "-o",
            "full.rgs",
        ]),
        d,
    );
    ok(
        &with(vec![
            "prune",
            "scene.ply",
            "cameras.json",
            "-o",
            "p.ply",
            "--summary",
            "passes.csv",
        ]),
        d,
    );
    ok(
        &with(vec![
            "cull-sh",
            "p.ply",
            "cameras.json",
            "-o",
            "s.ply",
            "--assignment",
            "bands.csv",
        ]),
        d,
    );
    ok(&with(vec!["quantize", "s.ply", "-o", "staged.rgs"]), d);
    assert_eq!(
        std::fs::read(d.join("full.rgs")).unwrap(),
        std::fs::read(d.join("staged.rgs")).unwrap()
    );
    assert!(
        std::fs::read_to_string(d.join("bands.csv"))
            .unwrap()
            .lines()
            .count()
            > 1
    );
}

#[test]
fn config_file_and_flags_combine() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    synth(d);
    std::fs::write(
        d.join("c.cfg"),
        "# no pruning\nprune_passes = 0\neps_sigma = 0\n",
    )
    .unwrap();
    ok(
        &[
            "compress",
            "scene.ply",
            "cameras.json",
            "-o",
            "a.rgs",
            "--config",
            "c.cfg",
            "--eps-cdist",
            "0",
        ],
        d,
    );
    let a: serde_json::Value = serde_json::from_str(&ok(&["stats", "a.rgs", "--json"], d)).unwrap();
    let input: serde_json::Value =
        serde_json::from_str(&ok(&["stats", "scene.ply", "--json"], d)).unwrap();
    assert_eq!(a["primitives"], input["primitives"]);
    assert_eq!(a["band_counts"], input["band_counts"]);
}

#[test]
fn unknown_flags_exit_with_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = splatpress(
        &[
            "compress",
            "a.ply",
            "b.json",
            "-o",
            "c.rgs",
            "--no-such-flag",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(
        splatpress(&["frobnicate"], dir.path()).status.code(),
        Some(2)
    );
}

#[test]
fn failures_report_json_errors() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let missing = splatpress(&["stats", "nothing.ply"], d);
    assert_eq!(missing.status.code(), Some(1));
    let e = error_json(&missing);
    assert!(e["error"]["message"]
        .as_str()
        .unwrap()
        .contains("nothing.ply"));
    assert!(e["error"]["kind"].is_string());

    std::fs::write(d.join("bad.ply"), b"ply\nformat ascii 1.0\nend_header\n").unwrap();
    let e = error_json(&splatpress(&["stats", "bad.ply"], d));
    assert_eq!(e["error"]["kind"], "ply_format");

    synth(d);
    std::fs::write(d.join("none.json"), "[]").unwrap();
    let out = splatpress(&["compress", "scene.ply", "none.json", "-o", "x.rgs"], d);
    assert_eq!(out.status.code(), Some(1));
    let e = error_json(&out);
    assert!(e["error"].get("stage").is_some());
    assert!(!d.join("x.rgs").exists());

    let out = splatpress(
        &[
            "compress",
            "scene.ply",
            "cameras.json",
            "-o",
            "x.rgs",
            "--cull-fraction",
            "1.5",
        ],
        d,
    );
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(error_json(&out)["error"]["kind"], "config");
}

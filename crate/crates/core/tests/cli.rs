use std::path::Path;
use std::process::{Command, Output};

use tablegrid::io;
use tablegrid::render::{DatasetManifest, MANIFEST_FILE};
use tablegrid::skeleton::resample_bilinear;
use tablegrid::xycut::{estimate_structure, EstimatorParams};
use tablegrid::TableGenotype;

fn tablegrid(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tablegrid")).args(args).env("TABLEGRID_THREADS", "2").output().unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn gen(dir: &Path, count: &str) {
    let out =
        tablegrid(&["gen", "--config", "base", "--count", count, "--seed", "7", "--style", "blurry", "--out", s(dir)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn gen_writes_count_triples_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    gen(dir.path(), "10");
    let loaded = DatasetManifest::load(&dir.path().join(MANIFEST_FILE)).unwrap();
    assert_eq!(loaded.manifest.entries.len(), 10);
    for e in &loaded.manifest.entries {
        assert!(loaded.resolve(&e.scan_path).is_file());
        assert!(loaded.resolve(&e.skeleton_path).is_file());
        assert!(loaded.resolve(&e.genotype_path).is_file());
        assert_eq!(e.skeleton_path.to_str().unwrap(), format!("{}.skel.png", e.stem()));
    }
}

#[test]
fn estimate_matches_library() {
    let dir = tempfile::tempdir().unwrap();
    gen(dir.path(), "2");
    let skel = dir.path().join("base_00001.skel.png");
    let out = dir.path().join("g.json");
    assert!(tablegrid(&["estimate", "--skeleton", s(&skel), "--out", s(&out)]).status.success());
    let got: TableGenotype = io::read_json(&out).unwrap();
    let want = estimate_structure(&io::read_image(&skel).unwrap(), &EstimatorParams::default()).unwrap();
    assert_eq!(got, want);
    let truth: TableGenotype = io::read_json(&dir.path().join("base_00001.json")).unwrap();
    assert_eq!((got.effective_rows(), got.effective_cols()), (truth.effective_rows(), truth.effective_cols()));
}

#[test]
fn estimate_accepts_external_resolution_skeletons() {
    let dir = tempfile::tempdir().unwrap();
    gen(dir.path(), "1");
    let skel = io::read_image(&dir.path().join("base_00000.skel.png")).unwrap();
    let small = dir.path().join("small.skel.png");
    io::write_png(&small, &resample_bilinear(&skel, 256, 256).unwrap()).unwrap();
    let out = tablegrid(&["estimate", "--skeleton", s(&small)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let g: TableGenotype = serde_json::from_slice(&out.stdout).unwrap();
    assert!(g.effective_rows() >= 1 && g.effective_cols() >= 1);
}

#[test]
fn sweep_emits_thirteen_rows_per_mode() {
    let dir = tempfile::tempdir().unwrap();
    gen(dir.path(), "2");
    let csv = dir.path().join("sweep.csv");
    let manifest = dir.path().join(MANIFEST_FILE);
    let out =
        tablegrid(&["sweep", "--manifest", s(&manifest), "--angles", "-30:30:5", "--deskew", "on", "--csv", s(&csv)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&csv).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "angle,deskew_enabled,error_free_pct,pixel_error");
    assert_eq!(lines.len(), 14);
    assert!(lines[1].starts_with("-30,true,"));
}

#[test]
fn eval_with_external_skeleton_dir() {
    let dir = tempfile::tempdir().unwrap();
    gen(dir.path(), "3");
    let csv = dir.path().join("metrics.csv");
    let manifest = dir.path().join(MANIFEST_FILE);
    let out = tablegrid(&["eval", "--manifest", s(&manifest), "--skeletons", s(dir.path()), "--csv", s(&csv)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&csv).unwrap();
    assert!(text.lines().nth(1).unwrap().starts_with("base,3,100.0,100.0,-,-,"));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(tablegrid(&["nope"]).status.code(), Some(1));
    assert_eq!(tablegrid(&["estimate", "--bogus"]).status.code(), Some(1));
    assert_eq!(tablegrid(&["gen", "--config", "base", "--count", "1", "--out", s(dir.path())]).status.code(), Some(1));
    assert_eq!(
        tablegrid(&["gen", "--config", "nope", "--count", "1", "--seed", "1", "--out", s(dir.path())]).status.code(),
        Some(1)
    );
    assert_eq!(
        tablegrid(&["sweep", "--manifest", "m.json", "--angles", "0:10", "--csv", "x.csv"]).status.code(),
        Some(1)
    );
    let missing = dir.path().join("missing.json");
    let csv = dir.path().join("m.csv");
    let out = tablegrid(&["eval", "--manifest", s(&missing), "--csv", s(&csv)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("missing.json"));
    assert!(!csv.exists());
    assert_eq!(tablegrid(&["eval", "--manifest", s(&missing), "--csv", s(&csv), "--noise"]).status.code(), Some(1));
    assert_eq!(tablegrid(&["--help"]).status.code(), Some(0));
}

#[test]
fn invalid_thread_env_is_usage_error() {
    let out = Command::new(env!("CARGO_BIN_EXE_tablegrid"))
        .args(["estimate", "--skeleton", "x.png"])
        .env("TABLEGRID_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn reruns_are_byte_identical() {
    let root = tempfile::tempdir().unwrap();
    let (a, b) = (root.path().join("a"), root.path().join("b"));
    for d in [&a, &b] {
        gen(d, "3");
        let skel = d.join("base_00002.skel.png");
        assert!(tablegrid(&[
            "degrade",
            "--in",
            s(&skel),
            "--out",
            s(&d.join("n.png")),
            "--seed",
            "4",
            "--jitter-sigma",
            "3"
        ])
        .status
        .success());
    }
    for name in ["manifest.json", "base_00000.scan.png", "base_00002.skel.png", "base_00001.json", "n.png"] {
        assert_eq!(std::fs::read(a.join(name)).unwrap(), std::fs::read(b.join(name)).unwrap(), "{name} differs");
    }
}

#[test]
fn canvas_flag_changes_page_size() {
    let dir = tempfile::tempdir().unwrap();
    let out = tablegrid(&[
        "--canvas",
        "800x1000",
        "gen",
        "--config",
        "short_cells",
        "--count",
        "1",
        "--seed",
        "2",
        "--out",
        s(dir.path()),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let img = io::read_image(&dir.path().join("short_cells_00000.scan.png")).unwrap();
    assert_eq!(img.dims(), (800, 1000));
}

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use mrcmflow::fields::{load_field, parse_cell_field};
use mrcmflow::grid::StructuredGrid2D;

fn mrcmflow(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mrcmflow"))
        .args(args)
        .current_dir(dir)
        .env("MRCMFLOW_THREADS", "2")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn rcr_prints_percentage() {
    let dir = tempfile::tempdir().unwrap();
    let o = mrcmflow(dir.path(), &["rcr", "--nhat", "96", "--n", "16", "--te", "3500", "--tm", "10"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).trim(), "74.79");
    let o = mrcmflow(dir.path(), &["rcr", "--nhat", "96", "--n", "16", "--te", "3500", "--tm", "10", "--cbf", "1"]);
    assert!(stdout(&o).contains("448000") && stdout(&o).contains("112960"));
    let o = mrcmflow(dir.path(), &["rcr", "--nhat", "96", "--n", "16", "--te", "0", "--tm", "0"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn small_run_writes_reproducible_outputs() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("small.toml"), "preset = \"gaussian-slab-small\"\n[output]\nsnapshots = [0, 4]\n").unwrap();
    let o = mrcmflow(dir.path(), &["run", "small.toml", "--out", "a"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let errors = fs::read_to_string(dir.path().join("a/errors.csv")).unwrap();
    let lines: Vec<&str> = errors.lines().collect();
    assert_eq!(lines[0], "step,pvi,epsilon,method,flux_err,sat_err,bf_homog_cum,bf_part_cum");
    assert_eq!(lines.len(), 6);
    assert!(!errors.contains('\r'));
    let summary = fs::read_to_string(dir.path().join("a/summary.txt")).unwrap();
    assert!(summary.contains("rcr_percent:") && summary.contains("breakthrough_step:"));
    for name in ["events.csv", "mpm2p_000000.vtk", "mpm2p_000004.vtk", "fine-reference_000004.vtk"] {
        assert!(dir.path().join("a").join(name).exists(), "{name}");
    }
    assert!(!dir.path().join("a/mpm2p_000002.vtk").exists());

    let o = mrcmflow(dir.path(), &["run", "small.toml", "--out", "b"]);
    assert!(o.status.success());
    for name in ["errors.csv", "events.csv"] {
        assert_eq!(fs::read(dir.path().join("a").join(name)).unwrap(), fs::read(dir.path().join("b").join(name)).unwrap());
    }

    let o = mrcmflow(dir.path(), &["compare", "a", "b"]);
    assert!(o.status.success());
    assert_eq!(stdout(&o).lines().count(), 6);
}

#[test]
fn finger_preset_emits_snapshots() {
    let dir = tempfile::tempdir().unwrap();
    let config = "preset = \"finger\"\n[splitting]\nsteps = 3\n[output]\nsnapshots = [0, 2]\nformat = \"txt\"\n";
    fs::write(dir.path().join("finger.toml"), config).unwrap();
    let o = mrcmflow(dir.path(), &["run", "finger.toml"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let grid = StructuredGrid2D::new(300, 50, 3.0, 0.5).unwrap();
    for step in [0, 2] {
        let text = fs::read_to_string(dir.path().join(format!("out/mpm2p_{step:06}.txt"))).unwrap();
        let s = parse_cell_field(&text, grid).unwrap();
        assert!(s.min() >= 0.0 && s.max() == 1.0);
    }
    let errors = fs::read_to_string(dir.path().join("out/errors.csv")).unwrap();
    let first_flux: f64 = errors.lines().nth(1).unwrap().split(',').nth(4).unwrap().parse().unwrap();
    assert!(first_flux < 1e-8);
}

#[test]
fn generated_field_loads_back() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("f.toml"), "[grid]\nnx = 16\nny = 8\n").unwrap();
    let o = mrcmflow(dir.path(), &["generate-field", "f.toml", "--out", "k.vtk"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let k = load_field(&dir.path().join("k.vtk"), StructuredGrid2D::new(16, 8, 1.0, 1.0).unwrap()).unwrap();
    assert!(k.min() > 0.0);
}

#[test]
fn configuration_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    fs::write(dir.path().join("bad.toml"), "[grid]\nnx = 8\nfoo = 3\n").unwrap();
    let o = mrcmflow(dir.path(), &["run", "bad.toml"]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("foo") && err.contains("line 3"), "{err}");
    assert_eq!(mrcmflow(dir.path(), &["run", "missing.toml"]).status.code(), Some(2));
    fs::write(dir.path().join("nofile.toml"), "preset = \"fractured\"\n").unwrap();
    assert_eq!(mrcmflow(dir.path(), &["run", "nofile.toml"]).status.code(), Some(2));
    assert_eq!(mrcmflow(dir.path(), &["frobnicate"]).status.code(), Some(2));
}

#[test]
fn defaults_reference_lists_every_key() {
    let dir = tempfile::tempdir().unwrap();
    let o = mrcmflow(dir.path(), &["defaults"]);
    let text = stdout(&o);
    for key in ["eta = 0.01", "safety = 0.9", "alpha = \"uniform\"", "alpha_value = 1.0", "[splitting]", "[output]"] {
        assert!(text.contains(key), "{key} missing from\n{text}");
    }
}

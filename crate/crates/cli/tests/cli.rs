use std::path::Path;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_selfcomp");

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(BIN)
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) -> String {
    let out = run(dir, args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn train_default(dir: &Path) {
    ok(dir, &["characterize", "--out", "p.csv"]);
    ok(dir, &["train", "--profile", "p.csv", "--out", "m.json"]);
}

#[test]
fn characterize_reports_error_rate() {
    let d = tempfile::tempdir().unwrap();
    let s = ok(d.path(), &["characterize", "--out", "p.csv"]);
    assert!(s.contains("max|ED|=756"), "{s}");
    assert!(s.contains("min|ED|=4"), "{s}");
    let s = ok(
        d.path(),
        &["characterize", "--approx-columns", "0", "--out", "e.csv"],
    );
    assert!(s.contains("ER=0.00%"), "{s}");
    let text = std::fs::read_to_string(d.path().join("p.csv")).unwrap();
    assert!(text.starts_with("# selfcomp profile v1 config={"));
    assert_eq!(text.lines().count(), 3 + 65536);
}

#[test]
fn width_four_profile_matches_brute_force() {
    let d = tempfile::tempdir().unwrap();
    ok(
        d.path(),
        &[
            "characterize",
            "--width",
            "4",
            "--approx-columns",
            "4",
            "--out",
            "p4.csv",
        ],
    );
    let net = selfcomp_core::build_netlist(selfcomp_core::MultiplierConfig {
        width: 4,
        approx_columns: 4,
        ..selfcomp_core::MultiplierConfig::baseline()
    })
    .unwrap();
    let (p, _) = selfcomp_core::ErrorProfile::load(&d.path().join("p4.csv")).unwrap();
    for a in 0..16 {
        for b in 0..16 {
            assert_eq!(p.ed(a, b) as i64, net.error_distance(a, b).unwrap());
        }
    }
}

#[test]
fn train_outputs_agree() {
    let d = tempfile::tempdir().unwrap();
    train_default(d.path());
    let (model, cfg) = selfcomp_core::CompensationModel::load(&d.path().join("m.json")).unwrap();
    assert_eq!(cfg.profile.as_deref(), Some(Path::new("p.csv")));
    let csv = std::fs::read_to_string(d.path().join("m.table.csv")).unwrap();
    let mut rows = csv.lines().skip(2);
    for i in 1..=16 {
        let row = rows.next().unwrap();
        let cells: Vec<i32> = row.split(',').skip(1).map(|v| v.parse().unwrap()).collect();
        for j in 1..=16 {
            assert_eq!(model.tree().predict(i, j).unwrap(), cells[j as usize - 1]);
        }
    }
    let dump = std::fs::read_to_string(d.path().join("m.tree.txt")).unwrap();
    assert!(dump.contains("Input1 <="));
}

#[test]
fn zero_error_profile_trains_zero_model() {
    let d = tempfile::tempdir().unwrap();
    ok(
        d.path(),
        &["characterize", "--approx-columns", "0", "--out", "e.csv"],
    );
    ok(
        d.path(),
        &["train", "--profile", "e.csv", "--out", "z.json"],
    );
    let (m, _) = selfcomp_core::CompensationModel::load(&d.path().join("z.json")).unwrap();
    assert_eq!(m.tree().leaf_count(), 1);
    assert_eq!(m.tree().predict(5, 9).unwrap(), 0);
    let s = ok(
        d.path(),
        &[
            "evaluate",
            "--profile",
            "e.csv",
            "--model",
            "z.json",
            "--out",
            "r.csv",
        ],
    );
    assert!(s.contains("total_pairs"));
    let r = std::fs::read_to_string(d.path().join("r.csv")).unwrap();
    for line in r.lines().skip(2) {
        let f: Vec<&str> = line.split(',').collect();
        assert_eq!(f[1], f[2], "{line}");
    }
}

#[test]
fn evaluate_report_conserves_pairs() {
    let d = tempfile::tempdir().unwrap();
    train_default(d.path());
    ok(
        d.path(),
        &[
            "evaluate",
            "--profile",
            "p.csv",
            "--model",
            "m.json",
            "--out",
            "r.json",
            "--format",
            "json",
        ],
    );
    let text = std::fs::read_to_string(d.path().join("r.json")).unwrap();
    let r: selfcomp_core::ComparisonReport =
        serde_json::from_str(text.split_once('\n').unwrap().1).unwrap();
    for s in [&r.before, &r.after] {
        assert_eq!(s.erroneous_count + s.error_free_count, 65536);
        assert_eq!(s.histogram.total(), 65536);
    }
    assert!(r.after.mean_abs_ed < r.before.mean_abs_ed);
}

#[test]
fn evaluate_rejects_width_mismatch() {
    let d = tempfile::tempdir().unwrap();
    train_default(d.path());
    ok(
        d.path(),
        &[
            "characterize",
            "--width",
            "4",
            "--approx-columns",
            "3",
            "--out",
            "p4.csv",
        ],
    );
    let out = run(
        d.path(),
        &["evaluate", "--profile", "p4.csv", "--model", "m.json"],
    );
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn blend_synthetic_improves_with_compensation() {
    let d = tempfile::tempdir().unwrap();
    train_default(d.path());
    let start = std::time::Instant::now();
    ok(
        d.path(),
        &[
            "blend",
            "--synthetic",
            "1",
            "--model",
            "m.json",
            "--out",
            "bo",
            "--format",
            "json",
        ],
    );
    let elapsed = start.elapsed();
    let text = std::fs::read_to_string(d.path().join("bo/report.json")).unwrap();
    let reports: Vec<selfcomp_core::BlendReport> =
        serde_json::from_str(text.split_once('\n').unwrap().1).unwrap();
    let r = &reports[0];
    let get = |m| r.mode(m).unwrap().rgb_psnr;
    use selfcomp_core::BlendMode::*;
    assert_eq!(get(Exact), f64::INFINITY);
    assert!(get(CompComponent) > get(Approx));
    assert!(d.path().join("bo/synthetic0-comp-component.png").exists());
    // Unoptimized test builds are slower; this is a loose ceiling.
    assert!(elapsed.as_secs_f64() < 30.0);
}

#[test]
fn blend_exact_mode_on_files() {
    let d = tempfile::tempdir().unwrap();
    let (a, b) = selfcomp_core::synthetic_pair(1, 0, 20, 10);
    selfcomp_core::save_image(&d.path().join("a.ppm"), &a).unwrap();
    selfcomp_core::save_image(&d.path().join("b.png"), &b).unwrap();
    let s = ok(
        d.path(),
        &["blend", "a.ppm", "b.png", "--mode", "exact", "--out", "o"],
    );
    assert!(
        s.contains("a,20,10,exact,infinite,infinite,infinite,infinite"),
        "{s}"
    );
    assert!(d.path().join("o/report.csv").exists());
}

#[test]
fn commands_are_idempotent() {
    let d = tempfile::tempdir().unwrap();
    train_default(d.path());
    let first = std::fs::read(d.path().join("m.json")).unwrap();
    ok(
        d.path(),
        &["train", "--profile", "p.csv", "--out", "m.json"],
    );
    assert_eq!(first, std::fs::read(d.path().join("m.json")).unwrap());
}

#[test]
fn exit_codes() {
    let d = tempfile::tempdir().unwrap();
    let out = run(d.path(), &["train", "--profile", "missing.csv"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("missing.csv"));

    let out = run(d.path(), &["characterize", "--approx-columns", "40"]);
    assert_eq!(out.status.code(), Some(2));

    std::fs::write(d.path().join("bad.csv"), "hello\n").unwrap();
    let out = run(d.path(), &["train", "--profile", "bad.csv"]);
    assert_eq!(out.status.code(), Some(4));

    let out = run(
        d.path(),
        &["blend", "--synthetic", "1", "--mode", "comp-accelerator"],
    );
    assert_eq!(out.status.code(), Some(2));

    let out = run(d.path(), &["characterize", "--cell", "ama9"]);
    assert_eq!(out.status.code(), Some(2));

    let out = run(d.path(), &["blend", "--mode", "exact", "a.png"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn census_and_netlist() {
    let d = tempfile::tempdir().unwrap();
    let s = ok(d.path(), &["census"]);
    assert!(s.contains("and_gates=64"));
    assert!(s.contains("half_adders=7"));
    let s = ok(
        d.path(),
        &["netlist", "--width", "2", "--approx-columns", "3"],
    );
    assert!(s.starts_with("# selfcomp netlist v1 width=2"));
}

use std::path::Path;
use std::process::{Command, Output};

use crashcast::eval::parse_report;

fn crashcast(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_crashcast"))
        .args(args)
        .env_remove("CRASHCAST_DATASET")
        .output()
        .expect("binary runs")
}

fn generate(dir: &Path, n: &str) {
    let out = crashcast(&["generate", "--scenarios", n, "--seed", "11", "--out", dir.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("collision rate"), "{stdout}");
}

#[test]
fn generate_then_evaluate_single() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    generate(&data, "10");
    assert!(data.join("manifest.json").is_file());

    let report = tmp.path().join("single.json");
    let out = crashcast(&[
        "evaluate",
        "--dataset",
        data.to_str().unwrap(),
        "--config",
        "single",
        "--out",
        report.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let r = parse_report(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(r.scenarios, 10);
    assert!(r.windows > 0);
    assert!(!r.accident.apa_vacuous);
    assert!(r.accident.gt_accidents > 0);
    assert!((0.0..=1.0).contains(&r.accident.apa));

    let md = tmp.path().join("table.md");
    let out = crashcast(&["report", "--inputs", report.to_str().unwrap(), "--out", md.to_str().unwrap()]);
    assert!(out.status.success());
    let md = std::fs::read_to_string(md).unwrap();
    assert!(md.contains("| single | 2s |"));
    assert!(md.contains("TTC 4s"));
}

#[test]
fn evaluate_is_deterministic_and_reads_env_dataset() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    generate(&data, "3");
    let run = |name: &str| {
        let path = tmp.path().join(name);
        let out = Command::new(env!("CARGO_BIN_EXE_crashcast"))
            .args(["evaluate", "--config", "ego+infra", "--samples", "0", "--noise", "0.2"])
            .args(["--out", path.to_str().unwrap()])
            .env("CRASHCAST_DATASET", &data)
            .output()
            .unwrap();
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        std::fs::read(path).unwrap()
    };
    let a = run("a.json");
    assert_eq!(a, run("b.json"));
    let r = parse_report(std::str::from_utf8(&a).unwrap()).unwrap();
    assert_eq!(r.samples, 0);
    assert_eq!(r.noise, 0.2);
}

#[test]
fn sweep_emits_csv_and_svg() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    generate(&data, "2");
    let out_dir = tmp.path().join("sweep");
    let out = crashcast(&[
        "sweep",
        "--dataset",
        data.to_str().unwrap(),
        "--param",
        "noise",
        "--values",
        "0,0.5",
        "--configs",
        "ego+infra",
        "--samples",
        "0",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let mut rdr = csv::Reader::from_path(out_dir.join("sweep-noise.csv")).unwrap();
    assert_eq!(rdr.headers().unwrap(), vec!["config", "noise", "apa", "miou", "vpq", "map"]);
    let rows: Vec<csv::StringRecord> = rdr.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 2);
    assert_eq!(&rows[0][1], "0");
    assert_eq!(&rows[1][1], "0.5");
    let svg = std::fs::read_to_string(out_dir.join("sweep-noise.svg")).unwrap();
    assert_eq!(svg.matches("<polyline").count(), 1);
}

#[test]
fn exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let missing = tmp.path().join("nope");
    assert_eq!(crashcast(&["evaluate"]).status.code(), Some(2));
    assert_eq!(crashcast(&["evaluate", "--dataset", "x", "--config", "5vehicles"]).status.code(), Some(2));
    assert_eq!(crashcast(&["evaluate", "--dataset", "x", "--horizon", "5s"]).status.code(), Some(2));
    assert_eq!(crashcast(&["generate", "--scenarios", "0", "--out", "x"]).status.code(), Some(2));
    assert_eq!(crashcast(&["evaluate", "--dataset", missing.to_str().unwrap()]).status.code(), Some(3));

    let bad = tmp.path().join("bad.json");
    std::fs::write(&bad, "{\"format\": \"other\"}").unwrap();
    assert_eq!(crashcast(&["report", "--inputs", bad.to_str().unwrap()]).status.code(), Some(3));
    assert_eq!(crashcast(&["--help"]).status.code(), Some(0));
}

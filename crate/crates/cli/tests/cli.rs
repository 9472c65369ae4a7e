use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn sqs(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sqs"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn rows(path: &Path) -> Vec<Vec<String>> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

fn header(path: &Path) -> String {
    fs::read_to_string(path).unwrap().lines().next().unwrap().to_string()
}

fn num(s: &str) -> f64 {
    s.parse().unwrap()
}

fn manifest(path: &Path) -> serde_json::Value {
    let mut name = path.as_os_str().to_owned();
    name.push(".manifest.json");
    serde_json::from_str(&fs::read_to_string(name).unwrap()).unwrap()
}

#[test]
fn equilibrium_diagram_reaches_quantum_critical_point() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("eq.csv");
    let o = sqs(&["phase-diagram", "--mode", "equilibrium", "--g", "0.1:6:60", "--t", "0:1.5:60", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(header(&out), "g,axis2,phase,omega,h,alpha");
    let data = rows(&out);
    assert_eq!(data.len(), 3600);
    let gs: Vec<f64> = data.iter().map(|r| num(&r[0])).collect();
    assert!(gs.windows(2).all(|w| w[0] <= w[1]));

    let line = rows(&dir.path().join("critical_line.csv"));
    let (dg, dt) = (5.9 / 59.0, 1.5 / 59.0);
    assert!(line.iter().any(|p| (num(&p[0]) - 4.0).abs() <= dg && num(&p[1]) <= dt));

    let m = manifest(&out);
    assert_eq!(m["command"], "phase-diagram");
    assert_eq!(m["failures"], 0);
    assert_eq!(m["parameters"]["g"], "0.1:6:60");
    assert_eq!(m["version"], env!("CARGO_PKG_VERSION"));
}

#[test]
fn ness_diagram_has_no_order_beyond_gamma_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("ness.csv");
    let o = sqs(&["phase-diagram", "--mode", "ness", "--g", "0.05:4.5:90", "--gamma", "0:2.2:45", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let data = rows(&out);
    assert_eq!(data.len(), 90 * 45);
    assert!(data.iter().any(|r| r[2] == "ordered"));
    assert!(!data.iter().any(|r| num(&r[1]) > 2.0 && r[2] == "ordered"));
}

#[test]
fn strong_dissipation_is_all_disordered() {
    let o = sqs(&["phase-diagram", "--mode", "ness", "--g", "0.05:4.5:20", "--gamma", "2.5"]);
    assert_eq!(code(&o), 0);
    let text = String::from_utf8(o.stdout).unwrap();
    let phases: Vec<&str> = text.lines().skip(1).map(|l| l.split(',').nth(2).unwrap()).collect();
    assert_eq!(phases.len(), 20);
    assert!(phases.iter().all(|p| *p == "disordered"));
}

#[test]
fn equilibrium_qfi_rises_toward_both_ends() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("qfi.csv");
    let o = sqs(&["qfi", "--g", "0.05:3.99:40", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    assert_eq!(header(&out), "g,qfi,term_displacement,term_squeezing,phase");
    let vals: Vec<f64> = rows(&out).iter().map(|r| num(&r[1])).collect();
    let (imin, _) = vals
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |(i, m), (j, v)| if *v < m { (j, *v) } else { (i, m) });
    assert!(imin > 0 && imin < vals.len() - 1);
    assert!(vals[..=imin].windows(2).all(|w| w[0] > w[1]));
    assert!(vals[imin..].windows(2).all(|w| w[0] < w[1]));
}

#[test]
fn qfi_marks_critical_and_disordered_points() {
    let o = sqs(&["qfi", "--g", "3.5,4,4.5,6"]);
    assert_eq!(code(&o), 0);
    let text = String::from_utf8(o.stdout).unwrap();
    let lines: Vec<Vec<&str>> = text.lines().skip(1).map(|l| l.split(',').collect()).collect();
    assert_eq!(lines[1][1], "inf");
    assert_eq!(lines[1][4], "critical");
    for l in &lines[2..] {
        assert_eq!(num(l[1]), 0.0);
        assert_eq!(l[4], "disordered");
    }
}

#[test]
fn ness_divergence_moves_left_with_dissipation() {
    let o = sqs(&["qfi", "--mode", "ness", "--g", "0.05:3.99:80", "--gamma", "0.5,1"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = String::from_utf8(o.stdout).unwrap();
    let last_ordered = |gamma: f64| {
        text.lines()
            .skip(1)
            .map(|l| l.split(',').collect::<Vec<_>>())
            .filter(|r| num(r[5]) == gamma && r[4] == "ordered")
            .map(|r| num(r[0]))
            .fold(f64::NEG_INFINITY, f64::max)
    };
    assert!(last_ordered(1.0) < last_ordered(0.5));
}

#[test]
fn photon_counting_respects_the_quantum_bound() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("fisher.csv");
    let o = sqs(&["fisher", "--g", "0.05:3.95:40", "--omega", "1", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    assert_eq!(header(&out), "g,omega_meas,fisher,qfi,normalized,error");
    for r in rows(&out) {
        let n = num(&r[4]);
        assert!((0.0..=1.0 + 1e-6).contains(&n), "{r:?}");
        assert!(r[5].is_empty());
    }
}

#[test]
fn small_g_curves_coincide_across_frequencies() {
    let o = sqs(&["fisher", "--g", "0.05:0.3:10", "--omega", "0.5,1,2"]);
    assert_eq!(code(&o), 0);
    let text = String::from_utf8(o.stdout).unwrap();
    let data: Vec<Vec<f64>> = text
        .lines()
        .skip(1)
        .map(|l| l.split(',').take(5).map(num).collect())
        .collect();
    assert_eq!(data.len(), 30);
    for chunk in data.chunks(3) {
        let (lo, hi) = chunk.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), r| (a.min(r[4]), b.max(r[4])));
        assert!(hi - lo <= 0.02, "g = {}: {lo}..{hi}", chunk[0][0]);
    }
}

#[test]
fn squeezing_sweep_is_non_decreasing() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sq.csv");
    let o = sqs(&["fisher-vs-squeezing", "--g", "1", "--r", "0:1.5:30", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let f: Vec<f64> = rows(&out).iter().map(|r| num(&r[2])).collect();
    assert_eq!(f.len(), 30);
    assert!(f.windows(2).all(|w| w[1] - w[0] >= -1e-9));
}

#[test]
fn json_output_matches_csv_values() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("q.csv");
    let json = dir.path().join("q.json");
    assert_eq!(code(&sqs(&["qfi", "--g", "0.5,1,4", "--out", csv.to_str().unwrap()])), 0);
    assert_eq!(code(&sqs(&["qfi", "--g", "0.5,1,4", "--format", "json", "--out", json.to_str().unwrap()])), 0);
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(&json).unwrap()).unwrap();
    let csv_rows = rows(&csv);
    assert_eq!(v.as_array().unwrap().len(), 3);
    assert_eq!(v[1]["qfi"].as_f64().unwrap(), num(&csv_rows[1][1]));
    assert_eq!(v[2]["qfi"], "inf");
}

#[test]
fn reruns_are_identical_apart_from_timestamp() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for (path, jobs) in [(&a, "1"), (&b, "3")] {
        let o = sqs(&["--jobs", jobs, "fisher", "--g", "0.5:3.5:7", "--omega", "0.5,2", "--out", path.to_str().unwrap()]);
        assert_eq!(code(&o), 0);
    }
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    let (mut ma, mut mb) = (manifest(&a), manifest(&b));
    ma.as_object_mut().unwrap().remove("timestamp");
    mb.as_object_mut().unwrap().remove("timestamp");
    assert_eq!(ma, mb);
}

#[test]
fn usage_errors_exit_two() {
    for args in [
        &["qfi", "--g", "1:0:3"][..],
        &["fisher", "--g", "5", "--omega", "1"],
        &["phase-diagram", "--mode", "ness", "--g", "1"],
        &["--jobs", "0", "qfi", "--g", "1"],
        &["--tol", "-1", "qfi", "--g", "1"],
        &["fisher-vs-squeezing", "--g", "4.5", "--r", "0,1"],
        &["nonsense"],
    ] {
        assert_eq!(code(&sqs(args)), 2, "{args:?}");
    }
}

#[test]
fn validate_reports_every_check() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("v.csv");
    let o = sqs(&["validate", "--level", "quick", "--out", out.to_str().unwrap()]);
    let table = rows(&out);
    assert!(table.len() >= 12);
    let failed = table.iter().filter(|r| r[2] == "FAIL").count();
    assert_eq!(code(&o), if failed == 0 { 0 } else { 1 });
    assert_eq!(manifest(&out)["failures"], failed);
    let stderr = String::from_utf8(o.stderr).unwrap();
    assert_eq!(stderr.lines().filter(|l| l.starts_with("PASS") || l.starts_with("FAIL")).count(), table.len());
}

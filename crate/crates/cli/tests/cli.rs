use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use rpap_core::analysis::{check_theorem, opt_lower_bound};
use rpap_core::instances::{gen_uniform, read_instance, write_instance};
use rpap_core::{pack_rpapc, Instance, Item, Params};
use serde_json::Value;

fn rpap(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rpap"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn bins_used(out: &Output) -> usize {
    let s = stdout(out);
    s.trim()
        .strip_prefix("bins_used ")
        .unwrap_or_else(|| panic!("{s}"))
        .parse()
        .unwrap()
}

fn write_items(dir: &Path, name: &str, items: &[(f64, f64)], s_max: f64) -> PathBuf {
    let items = items
        .iter()
        .map(|&(p, s)| Item::new(p, s).unwrap())
        .collect();
    let path = dir.join(name);
    write_instance(&Instance::new(items, s_max, "test", 0).unwrap(), &path).unwrap();
    path
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn params_constants() {
    for (alpha, s_max, want) in [("0.01", "1", 29.52), ("0.1", "0.25", 7.47)] {
        let out = rpap(&["params", "--alpha", alpha, "--s-max", s_max]);
        assert_eq!(code(&out), 0);
        let v: Value = serde_json::from_str(&stdout(&out)).unwrap();
        let c = v["approx_constant"].as_f64().unwrap();
        assert!((c / want - 1.0).abs() < 0.005, "{c}");
        assert!(v["params"]["p_max"].as_f64().unwrap() > 0.0);
    }
    assert_eq!(code(&rpap(&["params", "--alpha", "0.7"])), 2);
    assert_eq!(code(&rpap(&["params"])), 2);
}

#[test]
fn pack_small_cases() {
    let dir = tempfile::tempdir().unwrap();
    let empty = write_items(dir.path(), "empty.json", &[], 1.0);
    let out = rpap(&[
        "pack",
        "--instance",
        path_str(&empty),
        "--algorithm",
        "rpap",
        "--alpha",
        "0.1",
    ]);
    assert_eq!(code(&out), 0);
    assert_eq!(bins_used(&out), 0);

    let pair = write_items(dir.path(), "pair.json", &[(0.5, 0.6), (0.5, 0.6)], 1.0);
    let packing = dir.path().join("p.json");
    let out = rpap(&[
        "pack",
        "--instance",
        path_str(&pair),
        "--algorithm",
        "ffr",
        "--alpha",
        "0.1",
        "--out",
        path_str(&packing),
    ]);
    assert_eq!(code(&out), 0);
    assert_eq!(bins_used(&out), 2);
    let v: Value = serde_json::from_str(&fs::read_to_string(&packing).unwrap()).unwrap();
    assert_eq!(v["algorithm"], "ffr");
    assert_eq!(v["bins"].as_array().unwrap().len(), 2);
    assert!(v["bins"][0]["group"].is_null());
}

#[test]
fn pack_rejects_oversized_items() {
    let dir = tempfile::tempdir().unwrap();
    let inst = write_items(dir.path(), "i.json", &[(0.5, 0.1), (0.5, 0.6)], 1.0);
    let out = rpap(&[
        "pack",
        "--instance",
        path_str(&inst),
        "--algorithm",
        "rpap",
        "--alpha",
        "0.1",
        "--s-max",
        "0.5",
    ]);
    assert_eq!(code(&out), 3);
    assert!(String::from_utf8_lossy(&out.stderr).contains("item 1"));
}

#[test]
fn pack_within_bounds_at_scale() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("u.json");
    let inst = gen_uniform(5000, 0.25, 17).unwrap();
    write_instance(&inst, &path).unwrap();
    let out = rpap(&[
        "pack",
        "--instance",
        path_str(&path),
        "--algorithm",
        "rpapc",
        "--alpha",
        "0.01",
    ]);
    assert_eq!(code(&out), 0);
    let used = bins_used(&out);

    let params = Params::derive(0.01, 0.25).unwrap();
    let report = check_theorem(
        &pack_rpapc(&inst.items, &params, 1e-4).unwrap(),
        &inst.items,
        &params,
    )
    .unwrap();
    assert_eq!(report.bins_used, used);
    assert!(used as u64 >= opt_lower_bound(&inst.items, 0.01));
    assert!(used as f64 <= report.theorem_rhs);
}

fn verify(dir: &Path, items: &[(f64, f64)], bins: Value) -> (i32, String) {
    let inst = write_items(dir, "v.json", items, 1.0);
    let packing = dir.join("vp.json");
    fs::write(
        &packing,
        serde_json::json!({"algorithm": "ffr", "bins": bins}).to_string(),
    )
    .unwrap();
    let csv = dir.join("v.csv");
    let out = rpap(&[
        "verify",
        "--instance",
        path_str(&inst),
        "--packing",
        path_str(&packing),
        "--alpha",
        "0.1",
        "--out",
        path_str(&csv),
    ]);
    (code(&out), fs::read_to_string(&csv).unwrap_or_default())
}

#[test]
fn verify_examples() {
    let dir = tempfile::tempdir().unwrap();
    let one_bin = serde_json::json!([{"group": null, "k": null, "items": [0, 1]}]);

    let (c, csv) = verify(dir.path(), &[(0.2, 0.6), (0.2, 0.6)], one_bin.clone());
    assert_eq!(c, 0);
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("bin,overflow,method,stderr,pass"));
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert!((row[1].parse::<f64>().unwrap() - 0.04).abs() < 1e-15);
    assert_eq!((row[2], row[4]), ("exact-enum", "true"));

    let (c, csv) = verify(dir.path(), &[(1.0, 0.6), (1.0, 0.6)], one_bin);
    assert_eq!(c, 5);
    assert!(csv.lines().nth(1).unwrap().ends_with(",false"));

    let items = vec![(0.05, 0.08); 30];
    let all: Vec<usize> = (0..30).collect();
    let (c, csv) = verify(
        dir.path(),
        &items,
        serde_json::json!([{"group": null, "k": null, "items": all}]),
    );
    assert_eq!(c, 0);
    assert!(csv.contains("monte-carlo"));
}

#[test]
fn verify_rejects_mismatched_files() {
    let dir = tempfile::tempdir().unwrap();
    let bins = serde_json::json!([{"group": null, "k": null, "items": [0, 1]}]);
    assert_eq!(verify(dir.path(), &[(0.2, 0.6); 3], bins).0, 4);
    let bins = serde_json::json!([{"group": null, "k": null, "items": [0, 0]}]);
    assert_eq!(verify(dir.path(), &[(0.2, 0.6); 2], bins).0, 4);
    let inst = write_items(dir.path(), "x.json", &[(0.2, 0.6)], 1.0);
    let out = rpap(&[
        "verify",
        "--instance",
        path_str(&inst),
        "--packing",
        path_str(&inst),
        "--alpha",
        "0.1",
    ]);
    assert_eq!(code(&out), 4);
}

fn adversarial(alpha: &str, pairs: &str) -> (i32, Value) {
    let out = rpap(&["adversarial", "--alpha", alpha, "--n-pairs", pairs]);
    let v = serde_json::from_str(&stdout(&out)).unwrap_or(Value::Null);
    (code(&out), v)
}

#[test]
fn adversarial_demo() {
    let (c, v) = adversarial("0.01", "2");
    assert_eq!(c, 0);
    assert!(v["ffr_bins"].as_u64().unwrap() >= 2);
    assert_eq!(v["reference_bins"], 2);

    let (c, v) = adversarial("0.0001", "25");
    assert_eq!(c, 0);
    assert!(v["ratio"].as_f64().unwrap() >= 10.0);
    assert_eq!(v["reference_viable"], true);
    assert_eq!(adversarial("0.0001", "25").1, v);

    assert_eq!(adversarial("0.01", "6").0, 2);
}

#[test]
fn gen_round_trips_through_files() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("g.json");
    for dataset in ["uniform", "normal", "google-like"] {
        let out = rpap(&[
            "gen",
            "--dataset",
            dataset,
            "--n",
            "100",
            "--s-max",
            "0.5",
            "--seed",
            "7",
            "--out",
            path_str(&path),
        ]);
        assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
        let inst = read_instance(&path).unwrap();
        assert_eq!(inst.len(), 100);
        assert_eq!(inst.label, dataset);
        assert!(inst.items.iter().all(|it| it.s() <= 0.5));
    }
    let a = stdout(&rpap(&["gen", "--n", "20", "--seed", "4"]));
    assert_eq!(a, stdout(&rpap(&["gen", "--n", "20", "--seed", "4"])));
}

#[test]
fn gen_fits_a_trace() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("trace.csv");
    let mut text = String::from("task_id,usage\n");
    for t in 0..10 {
        for j in 0..10 {
            let u = if j < 4 { 0.0 } else { 0.05 * (t + 1) as f64 };
            text.push_str(&format!("t{t},{u}\n"));
        }
    }
    text.push_str("noisy,0.1\nnoisy,0.9\nnoisy,0.3\nnoisy,0.0\n");
    fs::write(&trace, text).unwrap();
    let path = dir.path().join("fit.json");
    let out = rpap(&["gen", "--trace", path_str(&trace), "--out", path_str(&path)]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let inst = read_instance(&path).unwrap();
    // 11 tasks, ceil(0.9 * 11) = 10 kept; the noisy one fits worst
    assert_eq!(inst.len(), 10);
    assert!(inst.items.iter().all(|it| (it.p() - 0.6).abs() < 1e-12));
    assert_eq!(inst.meta["tasks"], 11);

    fs::write(&trace, "task_id,usage\nidle,0\n").unwrap();
    assert_eq!(code(&rpap(&["gen", "--trace", path_str(&trace)])), 2);
}

#[test]
fn experiment_smoke_and_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("cfg.json");
    fs::write(
        &config,
        r#"{"datasets":["uniform","normal"],"alphas":[0.1,0.01],"s_maxes":[1,0.5],"n":50,"replicates":1,"mc_trials":2000}"#,
    )
    .unwrap();
    let run = |sub: &str| {
        let out_dir = dir.path().join(sub);
        let out = rpap(&[
            "experiment",
            "--config",
            path_str(&config),
            "--out",
            path_str(&out_dir),
        ]);
        assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
        fs::read_to_string(out_dir.join("results.csv")).unwrap()
    };
    let first = run("a");
    let lines: Vec<&str> = first.lines().collect();
    assert!(lines[0].starts_with(
        "dataset,alpha,s_max,algorithm,n,median_bins,min_bins,max_bins,median_norm,norm_mode,median_avg_overflow"
    ));
    assert_eq!(lines.len(), 1 + 2 * 2 * 2 * 3);
    assert!(first.ends_with('\n'));
    assert_eq!(first, run("b"));
    assert!(dir.path().join("a/runs.csv").exists());

    fs::write(&config, r#"{"replicates":0}"#).unwrap();
    let out = rpap(&[
        "experiment",
        "--config",
        path_str(&config),
        "--out",
        path_str(dir.path()),
    ]);
    assert_eq!(code(&out), 2);
}

#[test]
fn experiment_with_tuning() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("cfg.json");
    fs::write(
        &config,
        r#"{"datasets":["uniform"],"alphas":[0.1],"s_maxes":[0.5],"n":60,"replicates":2,"algorithms":["rpapc","ffr"],"mc_trials":2000}"#,
    )
    .unwrap();
    let out_dir = dir.path().join("o");
    let out = rpap(&[
        "experiment",
        "--config",
        path_str(&config),
        "--out",
        path_str(&out_dir),
        "--tune",
        "grid:3",
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let tuning = fs::read_to_string(out_dir.join("tuning.csv")).unwrap();
    assert_eq!(tuning.lines().count(), 2);
    let bad = rpap(&[
        "experiment",
        "--config",
        path_str(&config),
        "--out",
        path_str(&out_dir),
        "--tune",
        "random",
    ]);
    assert_eq!(code(&bad), 2);
}

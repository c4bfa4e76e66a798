use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn supou(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_supou"))
        .args(args)
        .env_remove("SUPOU_THREADS")
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).unwrap()
}

fn write_config(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(name);
    fs::write(&path, body).unwrap();
    path.to_str().unwrap().to_string()
}

/// Data rows of a CSV table, skipping the header and `#` comment rows.
fn rows(csv: &str) -> Vec<Vec<String>> {
    csv.lines()
        .skip(1)
        .filter(|l| !l.starts_with('#'))
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

fn num(s: &str) -> f64 {
    s.parse().unwrap_or_else(|_| panic!("not a number: {s:?}"))
}

#[test]
fn correlation_columns_agree() {
    let out = supou(&["correlation"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let text = stdout(&out);
    assert!(text.starts_with("tau,quadrature,closed_form\n"));
    let rows = rows(&text);
    assert_eq!(rows.len(), 51);
    assert_eq!(num(&rows[0][0]), 0.0);
    assert_eq!(num(&rows[0][2]), 1.0);
    for r in &rows {
        let (q, c) = (num(&r[1]), num(&r[2]));
        assert!((q / c - 1.0).abs() <= 1e-8, "{r:?}");
    }
}

#[test]
fn configuration_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        ("kind.toml", "[mixing]\nkind = \"pareto\"\n", "unknown mixing measure kind"),
        ("student.toml", "[marginal]\nkind = \"student\"\n", "analytic"),
        ("key.toml", "seeed = 4\n", "unknown field"),
        ("param.toml", "[mixing]\nkind = \"gamma\"\nparameters = { alpha = 0.5, beta = 2.0 }\n", "unknown field"),
        ("alpha.toml", "[mixing]\nkind = \"gamma\"\nparameters = { alpha = -1.0 }\n", "alpha"),
    ];
    for (name, body, needle) in cases {
        let path = write_config(dir.path(), name, body);
        let out = supou(&["--config", &path, "cumulants"]);
        assert_eq!(out.status.code(), Some(2), "{name}: {}", stderr(&out));
        assert!(stderr(&out).contains(needle), "{name}: {}", stderr(&out));
    }
    let out = supou(&["--threads", "0", "correlation"]);
    assert_eq!(out.status.code(), Some(2));
    let out = supou(&["--config", "/nonexistent/supou.toml", "correlation"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn first_order_cumulant_is_mean_times_t() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_config(
        dir.path(),
        "m1.toml",
        "orders = [1, 2]\n[marginal]\nkind = \"gamma\"\ncentered = false\nparameters = { shape = 3.0, rate = 2.0 }\n\
         [grid]\nmin = 1.0\nmax = 1e4\ncount = 9\n",
    );
    let out = supou(&["--config", &path, "cumulants"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let text = stdout(&out);
    assert!(text.starts_with("kind,m,t,factor,cumulant,method\n"));
    for r in rows(&text).iter().filter(|r| r[1] == "1") {
        let t = num(&r[2]);
        assert!((num(&r[4]) - 1.5 * t).abs() <= 1e-12 * t, "{r:?}");
        assert_eq!(r[0], "integrated");
        assert_eq!(r[5], "analytic");
    }
}

#[test]
fn gaussian_odd_cumulants_vanish_and_cross_form_footer() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_config(
        dir.path(),
        "g.toml",
        "orders = [1, 2, 3, 4, 5]\ncross_form = true\nkind = \"partial_sum\"\n\
         [marginal]\nkind = \"gaussian\"\nparameters = { variance = 2.0 }\n\
         [grid]\nmin = 1.0\nmax = 1e3\ncount = 7\n",
    );
    let out = supou(&["--config", &path, "cumulants"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let text = stdout(&out);
    for r in rows(&text) {
        let m: u32 = r[1].parse().unwrap();
        if m % 2 == 1 || m > 2 {
            assert_eq!(num(&r[4]), 0.0, "{r:?}");
        }
    }
    let footer = text.lines().last().unwrap();
    let (label, value) = footer.split_once(',').unwrap();
    assert_eq!(label, "# cross_form_max_relative_discrepancy");
    assert!(num(value) <= 1e-9, "{footer}");
}

#[test]
fn scaling_of_the_default_configuration() {
    let out = supou(&["scaling"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let text = stdout(&out);
    let sigma: Vec<f64> = rows(&text).iter().filter(|r| r[0] == "sigma").map(|r| num(&r[2])).collect();
    for (m, s) in [2.0, 3.0, 4.0].iter().zip(&sigma) {
        assert!((s - (m - 0.6)).abs() <= 0.05, "σ̂({m}) = {s}");
    }
    assert!(text.trim_end().ends_with("# verdict,intermittent"));
}

#[test]
fn scaling_writes_plot_files_and_json() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("run");
    let out = supou(&["--out", out_dir.to_str().unwrap(), "--format", "json", "scaling"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert_eq!(stdout(&out).trim(), "verdict: intermittent");
    let doc: serde_json::Value = serde_json::from_str(&fs::read_to_string(out_dir.join("scaling.json")).unwrap()).unwrap();
    assert_eq!(doc["verdict"], "intermittent");
    assert_eq!(doc["tau"]["rows"].as_array().unwrap().len(), 2);
    let plot = fs::read_to_string(out_dir.join("cumulant_m3.dat")).unwrap();
    assert_eq!(plot.lines().count(), 26);
    assert!(out_dir.join("moment_q4.dat").exists());
}

#[test]
fn gaussian_marginal_is_not_intermittent() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_config(
        dir.path(),
        "g.toml",
        "[marginal]\nkind = \"gaussian\"\nparameters = { variance = 1.0 }\n\
         [mixing]\nkind = \"gamma\"\nparameters = { alpha = 0.5 }\n",
    );
    let out = supou(&["--config", &path, "scaling"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    assert!(stdout(&out).trim_end().ends_with("# verdict,not-intermittent"));
}

#[test]
fn scaling_window_with_one_point_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_config(dir.path(), "w.toml", "[grid]\nmin = 1e3\nmax = 1e6\ncount = 1\n");
    let out = supou(&["--config", &path, "scaling"]);
    assert_eq!(out.status.code(), Some(2), "{}", stderr(&out));
}

#[test]
fn simulation_is_deterministic_and_consistent() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_config(dir.path(), "s.toml", "[simulation]\nreplicas = 2000\nhorizon = 50.0\ntimes = [10.0, 50.0]\n");
    let a_dir = dir.path().join("a");
    let a = supou(&["--config", &path, "--out", a_dir.to_str().unwrap(), "--threads", "1", "simulate"]);
    assert_eq!(a.status.code(), Some(0), "{}", stderr(&a));
    let b = Command::new(env!("CARGO_BIN_EXE_supou"))
        .args(["--config", &path, "simulate"])
        .env("SUPOU_THREADS", "3")
        .output()
        .unwrap();
    assert_eq!(b.status.code(), Some(0));
    let summary = fs::read_to_string(a_dir.join("simulation.csv")).unwrap();
    assert_eq!(summary, stdout(&b));
    for r in rows(&summary) {
        assert!(num(&r[6]).abs() <= 3.0, "{r:?}");
    }
    let ledger = fs::read_to_string(a_dir.join("seeds.csv")).unwrap();
    assert_eq!(ledger.lines().count(), 2001);
    assert_eq!(ledger.lines().nth(5).unwrap(), "4,1,4");

    let other_seed = supou(&["--config", &path, "--seed", "2", "simulate"]);
    assert_ne!(stdout(&other_seed), summary);
}

#[test]
fn partial_sums_need_a_step_dividing_one() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_config(dir.path(), "d.toml", "[simulation]\nstep = 0.3\n");
    let out = supou(&["--config", &path, "simulate"]);
    assert_eq!(out.status.code(), Some(2), "{}", stderr(&out));
}

#[test]
fn verify_passes_by_default_and_reports_tolerances() {
    let dir = tempfile::tempdir().unwrap();
    let out = supou(&["--out", dir.path().to_str().unwrap(), "verify"]);
    assert_eq!(out.status.code(), Some(0), "{}{}", stdout(&out), stderr(&out));
    let report = stdout(&out);
    assert!(report.lines().filter(|l| l.starts_with("PASS")).all(|l| l.contains("tolerance")));
    assert!(!report.contains("FAIL"));
    let doc: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("verify.json")).unwrap()).unwrap();
    assert_eq!(doc["pass"], true);
    for check in doc["checks"].as_array().unwrap() {
        let mut keys: Vec<&str> = check.as_object().unwrap().keys().map(String::as_str).collect();
        keys.sort_unstable();
        assert_eq!(keys, ["check_id", "description", "expected", "observed", "pass", "tolerance"]);
    }
}

#[test]
fn verify_with_a_wrong_alpha_fails_the_slope_checks() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_config(dir.path(), "v.toml", "[verify]\nalpha_claim = 0.8\n");
    let out = supou(&["--config", &path, "--format", "json", "verify"]);
    assert_eq!(out.status.code(), Some(1));
    let doc: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    let failed: Vec<&str> = doc["checks"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|c| c["pass"] == false)
        .map(|c| c["check_id"].as_str().unwrap())
        .collect();
    assert!(failed.iter().any(|id| id.starts_with("A3.")));
    assert!(failed.iter().all(|id| id.starts_with("A3.") || id.starts_with("A4.")), "{failed:?}");
}

#[test]
fn printed_configuration_reloads_unchanged() {
    let dir = tempfile::tempdir().unwrap();
    let toml_out = supou(&["--seed", "17", "print-config"]);
    assert_eq!(toml_out.status.code(), Some(0));
    let path = write_config(dir.path(), "dump.toml", &stdout(&toml_out));
    let again = supou(&["--config", &path, "print-config"]);
    assert_eq!(stdout(&again), stdout(&toml_out));
    assert!(stdout(&toml_out).contains("seed = 17"));

    let json_out = supou(&["--format", "json", "print-config"]);
    let json_path = write_config(dir.path(), "dump.json", &stdout(&json_out));
    let from_json = supou(&["--config", &json_path, "print-config"]);
    assert_eq!(from_json.status.code(), Some(0), "{}", stderr(&from_json));
    assert_eq!(stdout(&from_json), stdout(&supou(&["print-config"])));
}

//! End-to-end pipeline acceptance: tune -> fit -> summarize on
//! synthetic five-series data of realistic length, with byte-level
//! reproducibility, plus smaller command smoke tests.

use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn binary() -> Command {
    Command::new(env!("CARGO_BIN_EXE_ccp-ppm"))
}

fn run_ok(args: &[&str]) {
    let output = binary().args(args).output().expect("binary runs");
    assert!(
        output.status.success(),
        "command {:?} failed with status {:?}\nstderr: {}",
        args,
        output.status.code(),
        String::from_utf8_lossy(&output.stderr)
    );
}

/// Heavy-tailed return-like series: a normal scale mixture with a few
/// volatility regimes.
fn synthetic_returns(n: usize, l: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..l)
        .map(|_| {
            let mut vol = 0.01;
            (0..n)
                .map(|t| {
                    if t % 260 == 0 {
                        vol = rng.random_range(0.005..0.03);
                    }
                    let scale = if rng.random::<f64>() < 0.05 { 3.0 } else { 1.0 };
                    vol * scale * rng.random_range(-1.0..1.0)
                })
                .collect()
        })
        .collect()
}

fn write_wide_csv(path: &Path, names: &[&str], columns: &[Vec<f64>]) {
    let mut text = names.join(",");
    text.push('\n');
    for t in 0..columns[0].len() {
        let row: Vec<String> = columns.iter().map(|c| c[t].to_string()).collect();
        text.push_str(&row.join(","));
        text.push('\n');
    }
    std::fs::write(path, text).unwrap();
}

fn dir_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut entries: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (
                e.file_name().to_string_lossy().to_string(),
                std::fs::read(e.path()).unwrap(),
            )
        })
        .collect();
    entries.sort_by(|a, b| a.0.cmp(&b.0));
    entries
}

/// Recursive JSON-to-TOML conversion (nulls dropped), used to feed the
/// configuration echo back into the CLI.
fn json_to_toml(value: &serde_json::Value) -> Option<toml::Value> {
    match value {
        serde_json::Value::Null => None,
        serde_json::Value::Bool(b) => Some(toml::Value::Boolean(*b)),
        serde_json::Value::Number(n) => {
            if let Some(i) = n.as_i64() {
                Some(toml::Value::Integer(i))
            } else {
                n.as_f64().map(toml::Value::Float)
            }
        }
        serde_json::Value::String(s) => Some(toml::Value::String(s.clone())),
        serde_json::Value::Array(items) => Some(toml::Value::Array(
            items.iter().filter_map(json_to_toml).collect(),
        )),
        serde_json::Value::Object(map) => {
            let mut table = toml::map::Map::new();
            for (k, v) in map {
                if let Some(tv) = json_to_toml(v) {
                    table.insert(k.clone(), tv);
                }
            }
            Some(toml::Value::Table(table))
        }
    }
}

#[test]
fn criterion_12_full_pipeline_is_reproducible() {
    let start = Instant::now();
    let work = tempfile::tempdir().unwrap();
    let n = 1309usize;
    let names = ["merval", "ibovespa", "ipsa", "ipyc", "dowjones"];
    let columns = synthetic_returns(n, names.len(), 99);
    let data_path = work.path().join("returns.csv");
    write_wide_csv(&data_path, &names, &columns);

    let config_path = work.path().join("run.toml");
    std::fs::write(
        &config_path,
        format!(
            r#"
[input]
paths = ["{}"]
format = "wide"
mode = "returns"

[mcmc]
n_burn = 2000
n_thin = 5
n_save = 500
rw_sd = 0.005
seed = 7
"#,
            data_path.display()
        ),
    )
    .unwrap();

    // tune
    let tuning_path = work.path().join("tuning.json");
    run_ok(&[
        "tune",
        "--config",
        config_path.to_str().unwrap(),
        "--out",
        tuning_path.to_str().unwrap(),
    ]);
    let tuning: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&tuning_path).unwrap()).unwrap();
    assert_eq!(tuning["series"].as_array().unwrap().len(), 5);
    assert_eq!(tuning["tprior"]["mu0"].as_array().unwrap().len(), 5);
    // The default-guess map at n = 1309 lands on the documented values.
    let mu0 = tuning["tprior"]["mu0"][0].as_f64().unwrap();
    assert!((mu0 + 7.1762).abs() < 1e-3, "mu0 {mu0}");

    // fit + summarize, twice.
    let run_once = |fit_dir: &Path, sum_dir: &Path| {
        run_ok(&[
            "fit",
            "--config",
            config_path.to_str().unwrap(),
            "--out",
            fit_dir.to_str().unwrap(),
        ]);
        for artifact in ["meta.json", "c_draws.csv", "p_draws.csv", "data.csv", "tuning.json"] {
            assert!(
                fit_dir.join(artifact).exists(),
                "fit artifact {artifact} missing"
            );
        }
        run_ok(&[
            "summarize",
            "--chains",
            fit_dir.to_str().unwrap(),
            "--out",
            sum_dir.to_str().unwrap(),
        ]);
        for artifact in [
            "change_probs.csv",
            "partition_est.json",
            "metrics.json",
            "plotdata.csv",
        ] {
            assert!(
                sum_dir.join(artifact).exists(),
                "summary artifact {artifact} missing"
            );
        }
    };
    let fit1 = work.path().join("fit1");
    let fit2 = work.path().join("fit2");
    let sum1 = work.path().join("sum1");
    let sum2 = work.path().join("sum2");
    run_once(&fit1, &sum1);
    run_once(&fit2, &sum2);

    // Byte-for-byte reproducibility of every artifact.
    let a = dir_bytes(&fit1);
    let b = dir_bytes(&fit2);
    assert_eq!(a.len(), b.len());
    for ((name_a, bytes_a), (name_b, bytes_b)) in a.iter().zip(&b) {
        assert_eq!(name_a, name_b);
        assert_eq!(bytes_a, bytes_b, "fit artifact {name_a} differs between runs");
    }
    let a = dir_bytes(&sum1);
    let b = dir_bytes(&sum2);
    for ((name_a, bytes_a), (name_b, bytes_b)) in a.iter().zip(&b) {
        assert_eq!(name_a, name_b);
        assert_eq!(bytes_a, bytes_b, "summary artifact {name_a} differs between runs");
    }

    // The metrics are sane for five series: ten pairs in the ARI trace.
    let metrics: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(sum1.join("metrics.json")).unwrap())
            .unwrap();
    assert_eq!(
        metrics["pairwise_ari"]["pairs"].as_array().unwrap().len(),
        10
    );
    let accept = metrics["mean_acceptance_rate"].as_f64().unwrap();
    assert!(accept > 0.0 && accept < 1.0);

    // Config echo round-trip: refit from the echoed configuration and
    // compare the chains byte for byte.
    let meta: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(fit1.join("meta.json")).unwrap()).unwrap();
    let echo = json_to_toml(&meta["cli_config"]).unwrap();
    let echo_path = work.path().join("echo.toml");
    std::fs::write(&echo_path, toml::to_string(&echo).unwrap()).unwrap();
    let fit3 = work.path().join("fit3");
    run_ok(&[
        "fit",
        "--config",
        echo_path.to_str().unwrap(),
        "--out",
        fit3.to_str().unwrap(),
    ]);
    let a = dir_bytes(&fit1);
    let c = dir_bytes(&fit3);
    for ((name_a, bytes_a), (name_c, bytes_c)) in a.iter().zip(&c) {
        assert_eq!(name_a, name_c);
        assert_eq!(bytes_a, bytes_c, "echo-refit artifact {name_a} differs");
    }

    let elapsed = start.elapsed().as_secs_f64();
    // Stated budget 15 minutes; 2x absorbs harness contention.
    println!(
        "ACCEPTANCE 12 (pipeline tune -> fit -> summarize, byte-reproducible): PASS \
         ({elapsed:.0}s)"
    );
    assert!(elapsed < 2.0 * 900.0, "pipeline took {elapsed:.0}s");
}

#[test]
fn unknown_flag_exits_with_usage_error() {
    let output = binary()
        .args(["fit", "--definitely-not-a-flag"])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2));
    let output = binary().args(["no-such-command"]).output().unwrap();
    assert_eq!(output.status.code(), Some(2));
}

#[test]
fn missing_input_is_a_data_error() {
    let work = tempfile::tempdir().unwrap();
    let config_path = work.path().join("run.toml");
    std::fs::write(
        &config_path,
        r#"
[input]
paths = ["does-not-exist.csv"]
"#,
    )
    .unwrap();
    let output = binary()
        .args([
            "tune",
            "--config",
            config_path.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(3));
}

#[test]
fn bad_config_is_a_config_error() {
    let work = tempfile::tempdir().unwrap();
    let config_path = work.path().join("run.toml");
    std::fs::write(&config_path, "[input]\nnot_a_key = 1\n").unwrap();
    let output = binary()
        .args(["tune", "--config", config_path.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2));
}

#[test]
fn prior_probe_emits_consistent_report() {
    let output = binary()
        .args([
            "prior-probe", "--nu0", "3", "--mu", "-6", "-6", "--var", "10", "--corr", "0.9",
            "--n", "100",
        ])
        .output()
        .unwrap();
    assert!(output.status.success());
    let report: serde_json::Value = serde_json::from_slice(&output.stdout).unwrap();
    let phi0 = report["phi"][0].as_f64().unwrap();
    let varphi = report["varphi"][0][1].as_f64().unwrap();
    let cond = report["conditional"][0][1].as_f64().unwrap();
    assert!(phi0 > 0.0 && phi0 < 1.0);
    assert!(varphi > 0.0 && varphi < phi0);
    // Conditioning on a change in the correlated partner raises the
    // probability above the marginal.
    assert!(cond > phi0);
    assert!((cond - varphi / phi0).abs() < 1e-6);
    let mean = report["count_mean"][0].as_f64().unwrap();
    assert!((mean - 99.0 * phi0).abs() < 1e-6);
    assert!(report["quadrature_error"].as_f64().unwrap() <= 1e-6);
}

#[test]
fn fit_on_mean_shift_data_with_explicit_parameters() {
    // Small end-to-end fit: two series with a shared mean shift, the
    // study data-factor parameters, and an explicit prior override.
    let work = tempfile::tempdir().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let n = 120usize;
    let columns: Vec<Vec<f64>> = (0..2)
        .map(|_| {
            (0..n)
                .map(|t| {
                    let mean = if t < 60 { -1.0 } else { 1.0 };
                    mean + 0.3 * rng.random_range(-1.0..1.0)
                })
                .collect()
        })
        .collect();
    let data_path = work.path().join("data.csv");
    write_wide_csv(&data_path, &["a", "b"], &columns);
    let config_path = work.path().join("run.toml");
    std::fs::write(
        &config_path,
        format!(
            r#"
[input]
paths = ["{}"]

[marglik]
mu0 = [0.0, 0.0]
kappa0 = [1.0, 1.0]
alpha0 = [2.0, 2.0]
beta0 = [1.0, 1.0]

[tprior]
nu0 = 3.0
mu0 = [-6.0]
variance = 10.0
correlation = 0.9

[mcmc]
n_burn = 500
n_thin = 2
n_save = 250
rw_sd = 0.005
seed = 3
"#,
            data_path.display()
        ),
    )
    .unwrap();
    let fit_dir = work.path().join("fit");
    run_ok(&[
        "fit",
        "--config",
        config_path.to_str().unwrap(),
        "--out",
        fit_dir.to_str().unwrap(),
    ]);
    let sum_dir = work.path().join("summary");
    run_ok(&[
        "summarize",
        "--chains",
        fit_dir.to_str().unwrap(),
        "--out",
        sum_dir.to_str().unwrap(),
    ]);
    // The shared shift at time 61 must be found with high probability.
    let probs = std::fs::read_to_string(sum_dir.join("change_probs.csv")).unwrap();
    let mut found = [false; 2];
    for line in probs.lines().skip(1) {
        let fields: Vec<&str> = line.split(',').collect();
        let time: usize = fields[1].parse().unwrap();
        let prob: f64 = fields[2].parse().unwrap();
        if time == 61 && prob > 0.9 {
            match fields[0] {
                "a" => found[0] = true,
                "b" => found[1] = true,
                _ => {}
            }
        }
    }
    assert!(
        found[0] && found[1],
        "shift at time 61 not detected in both series"
    );

    // Existing output directory: configuration error.
    let output = binary()
        .args([
            "fit",
            "--config",
            config_path.to_str().unwrap(),
            "--out",
            fit_dir.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2));
}

#[test]
fn simulate_writes_study_artifacts() {
    let work = tempfile::tempdir().unwrap();
    let out: PathBuf = work.path().join("study");
    run_ok(&[
        "simulate",
        "--scenario",
        "type2",
        "--replicates",
        "2",
        "--seed",
        "11",
        "--out",
        out.to_str().unwrap(),
        "--burn",
        "300",
        "--thin",
        "2",
        "--save",
        "100",
    ]);
    let results = std::fs::read_to_string(out.join("study_results.csv")).unwrap();
    // Header + 2 replicates x 2 methods x 2 series.
    assert_eq!(results.lines().count(), 1 + 8);
    assert!(results.starts_with("replicate,method,series,ari"));
    for rep in ["rep_001", "rep_002"] {
        let rep_dir = out.join("replicates").join(rep);
        assert!(rep_dir.join("data.csv").exists());
        let truth: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(rep_dir.join("truth.json")).unwrap())
                .unwrap();
        let partitions = truth.as_array().unwrap();
        assert_eq!(partitions.len(), 2);
        assert_eq!(partitions[0]["tau"].as_array().unwrap().len(), 4);
        assert_eq!(partitions[0]["n"].as_u64().unwrap(), 100);
    }
}

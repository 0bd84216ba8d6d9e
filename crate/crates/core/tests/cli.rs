use std::path::Path;
use std::process::{Command, Output};

fn cohspec(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cohspec"))
        .args(args)
        .current_dir(dir)
        .env("COHSPEC_THREADS", "1")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn experiment_row_count_and_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["experiment", "completion", "--seed", "7", "--trials", "5", "--n", "500", "-o", "a.csv"];
    let o = cohspec(&args, dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let first = std::fs::read_to_string(dir.path().join("a.csv")).unwrap();
    let mut lines = first.lines();
    assert_eq!(
        lines.next().unwrap(),
        "experiment,n,mu_target,mu_realized,trial,lambda_star,lambda_hat,abs_error,seed,wall_time_ms"
    );
    assert_eq!(lines.count(), 5 * 4);
    assert!(!first.contains('\r'));

    let o = cohspec(&args, dir.path());
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(std::fs::read_to_string(dir.path().join("a.csv")).unwrap(), first);
}

#[test]
fn experiment_needs_seed() {
    let dir = tempfile::tempdir().unwrap();
    let o = cohspec(&["experiment", "completion", "--trials", "5", "--n", "500"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(!dir.path().join("completion.csv").exists());
}

#[test]
fn experiment_config_file_and_precedence() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("cfg.json"),
        r#"{"n_grid": [64, 128], "alphas": [0, 0.4], "trials": 3, "seed": 5, "zero_noise": true}"#,
    )
    .unwrap();
    let o = cohspec(&["experiment", "network", "--config", "cfg.json", "--trials", "2", "--print-config"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let printed = stdout(&o);
    let value: serde_json::Value = serde_json::from_str(&printed).unwrap();
    assert_eq!(value["trials"], 2);
    assert_eq!(value["seed"], 5);
    assert_eq!(value["n_grid"], serde_json::json!([64, 128]));

    // Re-reading the canonical form reproduces it.
    std::fs::write(dir.path().join("canon.json"), &printed).unwrap();
    let again = cohspec(&["experiment", "network", "--config", "canon.json", "--print-config"], dir.path());
    assert_eq!(stdout(&again), printed);

    let o = cohspec(&["experiment", "network", "--config", "cfg.json", "-o", "z.csv"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let csv = std::fs::read_to_string(dir.path().join("z.csv")).unwrap();
    for row in csv.lines().skip(1) {
        let err: f64 = row.split(',').nth(7).unwrap().parse().unwrap();
        assert!(err <= 1e-8, "{row}");
    }

    std::fs::write(dir.path().join("bad.json"), r#"{"seed": 1, "bogus": 2}"#).unwrap();
    let o = cohspec(&["experiment", "network", "--config", "bad.json"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    let o = cohspec(&["experiment", "network", "--seed", "1", "--alphas", "0.9", "--n", "64"], dir.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn eigen_prints_diagonal_spectrum() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("d.txt"), "2 2\n5 0\n0 1\n").unwrap();
    let o = cohspec(&["eigen", "d.txt"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), "5\n1\n");
    let o = cohspec(&["eigen", "--symmetric", "d.txt"], dir.path());
    assert_eq!(stdout(&o), "5\n1\n");

    std::fs::write(dir.path().join("bad.txt"), "2 2\n5 0\n").unwrap();
    assert_eq!(cohspec(&["eigen", "bad.txt"], dir.path()).status.code(), Some(2));
    std::fs::write(dir.path().join("asym.txt"), "2 2\n1 2\n0 1\n").unwrap();
    assert_eq!(cohspec(&["eigen", "--symmetric", "asym.txt"], dir.path()).status.code(), Some(2));
}

#[test]
fn gen_signal_writes_rank_one_matrix() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(cohspec(&["gen-signal", "--n", "20", "--mu", "4", "-o", "m.txt"], dir.path()).status.code(), Some(2));
    let o = cohspec(
        &["gen-signal", "--n", "20", "--mu", "4", "--lambda", "3", "--seed", "1", "-o", "m.txt"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(0));
    let text = std::fs::read_to_string(dir.path().join("m.txt")).unwrap();
    assert!(text.starts_with("20 20\n"));
    let o = cohspec(&["eigen", "m.txt"], dir.path());
    let top: f64 = stdout(&o).lines().next().unwrap().parse().unwrap();
    assert!((top - 3.0).abs() < 1e-10);
}

#[test]
fn bounds_with_zero_sigma_has_only_b_branch() {
    let dir = tempfile::tempdir().unwrap();
    let o = cohspec(&["bounds", "--n", "1000", "--sigma", "0", "--b", "2", "--mu", "10"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    let rows: Vec<Vec<&str>> = text
        .lines()
        .filter(|l| l.starts_with("spectral_norm") || l.starts_with("prior_eigenvalue"))
        .map(|l| l.split('\t').collect())
        .collect();
    assert_eq!(rows.len(), 2);
    for r in rows {
        assert_eq!(r[2].parse::<f64>().unwrap(), 0.0);
        assert!(r[3].parse::<f64>().unwrap() > 0.0);
    }
    assert_eq!(cohspec(&["bounds", "--n", "2", "--sigma", "1", "--b", "1"], dir.path()).status.code(), Some(2));
}

#[test]
fn verify_oracle_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let o = cohspec(&["verify-oracle"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("# 0 identity failures"));
    assert!(!stdout(&o).contains("FAIL"));

    assert_eq!(cohspec(&["verify-oracle", "--n", "4", "--support", "3"], dir.path()).status.code(), Some(4));
    let o = cohspec(
        &["verify-oracle", "--values", "-1,2", "--probs", "0.6666666666666666,0.3333333333333334", "--symmetric"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn fit_recovers_inverse_square_root() {
    let dir = tempfile::tempdir().unwrap();
    let mut csv = String::from(
        "experiment,n,mu_target,mu_realized,trial,lambda_star,lambda_hat,abs_error,seed,wall_time_ms\n",
    );
    for n in [500usize, 1000, 2000, 4000] {
        for t in 0..10 {
            let err = 2.0 / (n as f64).sqrt();
            csv.push_str(&format!("completion,{n},1,1.5,{t},1,{},{err},0,0\n", 1.0 + err));
        }
    }
    std::fs::write(dir.path().join("s.csv"), csv).unwrap();
    let o = cohspec(&["fit", "s.csv"], dir.path());
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let slope: f64 = text.lines().nth(1).unwrap().split('\t').nth(1).unwrap().parse().unwrap();
    assert!((slope + 0.5).abs() < 1e-3, "{text}");
}

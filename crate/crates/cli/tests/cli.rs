use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn scratch(name: &str) -> PathBuf {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("cli").join(name);
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn write_config(dir: &Path, json: &str) -> PathBuf {
    let path = dir.join("config.json");
    fs::write(&path, json).unwrap();
    path
}

fn proxsgd(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_proxsgd")).args(args).output().unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("terminated by signal")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

const LOGISTIC: &str = r#""data": {"synthetic": {"kind": "logistic", "n": 40, "d": 5, "condition": 4.0, "seed": 3}}"#;

#[test]
fn unknown_config_key_is_a_config_error() {
    let dir = scratch("unknown_key");
    let cfg = write_config(&dir, &format!("{{{LOGISTIC}, \"gama\": 0.1}}"));
    let out = proxsgd(&["run", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&out), 1, "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn missing_data_file_is_a_data_error() {
    let dir = scratch("missing_data");
    let cfg = write_config(&dir, r#"{"data": {"libsvm": {"path": "nope.svm"}}}"#);
    let out = proxsgd(&["run", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&out), 2);
}

#[test]
fn malformed_libsvm_is_a_data_error() {
    let dir = scratch("bad_data");
    fs::write(dir.join("bad.svm"), "1 3:0.5 x:1\n").unwrap();
    let cfg = write_config(&dir, r#"{"data": {"libsvm": {"path": "bad.svm"}}}"#);
    let out = proxsgd(&["run", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&out), 2);
}

#[test]
fn wrong_constants_fail_verification() {
    let dir = scratch("verify_fail");
    let cfg = write_config(&dir, r#"{"verify": {"checks": ["second_moment"], "a_factor": 0.5, "points": 20, "starts": 20}}"#);
    let out = proxsgd(&["verify", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&out), 3, "{}", stdout(&out));
    assert!(stdout(&out).contains("FAIL"));
}

#[test]
fn verify_defaults_pass() {
    let dir = scratch("verify_pass");
    let cfg = write_config(&dir, r#"{"verify": {"checks": ["unbiased", "second_moment", "sigma_recursion", "g_bound"], "points": 20, "starts": 10}}"#);
    let csv = dir.join("reports.csv");
    let out = proxsgd(&["verify", "--config", cfg.to_str().unwrap(), "--out", csv.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", stdout(&out));
    let reports = fs::read_to_string(&csv).unwrap();
    assert!(reports.lines().count() > 10);
}

#[test]
fn empty_check_list_succeeds() {
    let dir = scratch("verify_empty");
    let cfg = write_config(&dir, r#"{"verify": {"checks": []}}"#);
    let out = proxsgd(&["verify", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    assert!(stdout(&out).contains("0 checks, 0 failed"));
}

#[test]
fn huge_unsafe_step_diverges() {
    let dir = scratch("diverge");
    let cfg = write_config(&dir, r#"{"data": {"synthetic": {"kind": "least_squares", "n": 30, "d": 4, "seed": 1}}, "algo": "sgd", "gamma": 1000.0, "unsafe_step": true, "max_iters": 10000}"#);
    let out = proxsgd(&["run", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&out), 4, "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn unsafe_step_without_opt_in_is_rejected() {
    let dir = scratch("unsafe_reject");
    let cfg = write_config(&dir, &format!("{{{LOGISTIC}, \"gamma\": 1000.0}}"));
    let out = proxsgd(&["run", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&out), 1);
}

#[test]
fn runs_are_reproducible() {
    let dir = scratch("determinism");
    let cfg = write_config(&dir, &format!("{{{LOGISTIC}, \"algo\": \"lsvrg\", \"b\": 3, \"max_iters\": 2000, \"log_every\": 10}}"));
    let cfg = cfg.to_str().unwrap();
    let a = proxsgd(&["run", "--config", cfg, "--seed", "11"]);
    let b = proxsgd(&["run", "--config", cfg, "--seed", "11"]);
    let c = proxsgd(&["run", "--config", cfg, "--seed", "12"]);
    assert_eq!(code(&a), 0);
    assert!(!a.stdout.is_empty());
    assert_eq!(a.stdout, b.stdout);
    assert_ne!(a.stdout, c.stdout);
}

fn column(csv: &str, name: &str) -> Vec<f64> {
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let idx = header.iter().position(|h| *h == name).unwrap_or_else(|| panic!("no column {name}"));
    lines.map(|l| l.split(',').nth(idx).unwrap().parse().unwrap()).collect()
}

#[test]
fn saga_noise_column_collapses() {
    let dir = scratch("saga_sigma");
    let cfg = write_config(&dir, &format!("{{{LOGISTIC}, \"algo\": \"saga\", \"b\": 2, \"max_iters\": 20000}}"));
    let out = proxsgd(&["run", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    let sigma = column(&stdout(&out), "sigma_sq");
    assert!(sigma[0] > 0.0);
    assert!(*sigma.last().unwrap() < 1e-3 * sigma[0]);
}

#[test]
fn decreasing_step_sgd_makes_progress() {
    let dir = scratch("sgd_inv_sqrt");
    let cfg = write_config(&dir, &format!("{{{LOGISTIC}, \"algo\": \"sgd\", \"b\": 2, \"gamma0_inv_sqrt\": 0.05, \"max_iters\": 5000}}"));
    let out = proxsgd(&["run", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let avg = column(&stdout(&out), "avg_subopt");
    assert!(avg.last().unwrap() < &avg[0]);
}

fn optimal_b(dir: &Path, json: &str) -> (usize, Vec<(usize, f64)>) {
    let cfg = write_config(dir, json);
    let curve = dir.join("curve.csv");
    let out = proxsgd(&["optimal-b", "--config", cfg.to_str().unwrap(), "--out", curve.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let b_star = stdout(&out)
        .lines()
        .find_map(|l| l.strip_prefix("b* = "))
        .unwrap()
        .trim()
        .parse()
        .unwrap();
    let text = fs::read_to_string(curve).unwrap();
    let rows = text
        .lines()
        .skip(1)
        .map(|l| {
            let (b, k) = l.split_once(',').unwrap();
            (b.parse().unwrap(), k.parse().unwrap())
        })
        .collect();
    (b_star, rows)
}

#[test]
fn identical_rows_give_unit_batch_for_svrg() {
    let dir = scratch("identical_rows");
    let row = "1 1:0.5 2:-1.0 3:2.0\n";
    fs::write(dir.join("same.svm"), row.repeat(25)).unwrap();
    let (b, _) = optimal_b(&dir, r#"{"data": {"libsvm": {"path": "same.svm"}}, "algo": "lsvrg"}"#);
    assert_eq!(b, 1);
}

#[test]
fn dominant_row_gives_full_batch_for_saga() {
    let dir = scratch("dominant_row");
    let mut text = String::from("1 1:40.0\n");
    for i in 0..19 {
        text.push_str(&format!("{} 2:0.01 3:0.0{}\n", if i % 2 == 0 { 1 } else { -1 }, i % 9 + 1));
    }
    fs::write(dir.join("spiky.svm"), text).unwrap();
    let (b, _) = optimal_b(&dir, r#"{"data": {"libsvm": {"path": "spiky.svm"}}, "algo": "saga"}"#);
    assert_eq!(b, 20);
}

#[test]
fn curve_minimum_agrees_with_b_star() {
    let dir = scratch("curve");
    for algo in ["saga", "lsvrg", "sega"] {
        let json = format!(r#"{{"data": {{"synthetic": {{"kind": "logistic", "n": 120, "d": 12, "condition": 30.0, "seed": 4}}}}, "algo": "{algo}"}}"#);
        let (b, curve) = optimal_b(&dir, &json);
        let argmin = curve.iter().min_by(|x, y| x.1.total_cmp(&y.1)).unwrap().0;
        assert!(b.abs_diff(argmin) <= 1, "{algo}: b*={b} argmin={argmin}");
    }
}

#[test]
fn explicit_full_batch_grid_picks_n() {
    let dir = scratch("grid_n");
    let cfg = write_config(&dir, &format!("{{{LOGISTIC}, \"algo\": \"saga\", \"grid\": [40], \"replicates\": 2, \"eps_rel\": 1e-3}}"));
    let out = proxsgd(&["grid", "--config", cfg.to_str().unwrap(), "--out", dir.join("g.csv").to_str().unwrap(), "--jobs", "2"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(stdout(&out).contains("b*_empirical = 40"));
}

#[test]
fn flags_override_config() {
    let dir = scratch("flags");
    let cfg = write_config(&dir, &format!("{{{LOGISTIC}, \"algo\": \"saga\", \"max_iters\": 50}}"));
    let out = proxsgd(&["run", "--config", cfg.to_str().unwrap(), "--algo", "sega", "--b", "2", "--max-iters", "30"]);
    assert_eq!(code(&out), 0);
    let text = stdout(&out);
    assert_eq!(column(&text, "k").last().copied(), Some(30.0));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("sega b=2"));
}

#[test]
fn run_requires_config() {
    assert_eq!(code(&proxsgd(&["run"])), 1);
}

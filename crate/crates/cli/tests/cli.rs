use std::path::Path;
use std::process::{Command, Output};

fn thermoform(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_thermoform"))
        .args(args)
        .env_remove("THERMO_WORKERS")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn check_passes_on_doubling_with_zero_potential() {
    let o = thermoform(&["check", "--map", "doubling", "--potential", "zero", "--samples", "200"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    assert!(text.starts_with("# thermoform config_hash="));
    assert!(text.lines().nth(1).unwrap().starts_with("sigma,eps,specification"));
    assert!(text.lines().nth(2).unwrap().contains(",true,"));
}

#[test]
fn out_of_range_sigma_is_a_validation_error_naming_the_field() {
    let o = thermoform(&["check", "--sigma", "1.5"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("sigma"));
}

#[test]
fn unknown_config_field_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    std::fs::write(&cfg, r#"{"sigmaa": [0.5]}"#).unwrap();
    let o = thermoform(&["gap-report", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("sigmaa"));
}

#[test]
fn failed_gap_exits_with_hypothesis_code() {
    let o = thermoform(&[
        "check",
        "--map",
        "mp:0.5",
        "--sigma",
        "0.6",
        "--samples",
        "200",
        "--n-max",
        "10",
    ]);
    assert_eq!(o.status.code(), Some(3), "{}", stdout(&o));
    assert!(stdout(&o).contains("gap:"));
}

#[test]
fn non_convergence_is_a_numerical_failure() {
    let o = thermoform(&[
        "transfer",
        "--map",
        "mp:0.5",
        "--grid-size",
        "256",
        "--tol",
        "1e-30",
        "--max-iters",
        "3",
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn command_line_overrides_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    std::fs::write(&cfg, r#"{"sigma": [0.6], "eps": [0.0625], "n_max": 8}"#).unwrap();
    let o = thermoform(&["gap-report", "--config", cfg.to_str().unwrap(), "--sigma", "0.8"]);
    assert_eq!(o.status.code(), Some(0));
    let row = stdout(&o).lines().nth(2).unwrap().to_string();
    assert!(
        row.starts_with("8.0000000000000004e-1,6.2500000000000000e-2,8,"),
        "{row}"
    );
}

fn run_to(dir: &Path, tag: &str, args: &[&str]) -> (Vec<u8>, Vec<u8>) {
    let csv = dir.join(format!("{tag}.csv"));
    let json = dir.join(format!("{tag}.json"));
    let mut full: Vec<&str> = args.to_vec();
    let (c, j) = (csv.to_str().unwrap().to_string(), json.to_str().unwrap().to_string());
    full.extend(["--output", &c, "--json", &j]);
    let o = thermoform(&full);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    (std::fs::read(&csv).unwrap(), std::fs::read(&json).unwrap_or_default())
}

#[test]
fn reruns_are_byte_identical_across_worker_counts() {
    let dir = tempfile::tempdir().unwrap();
    for cmd in [
        vec!["glue", "--map", "mp:0.5", "--plans", "8", "--seed", "11"],
        vec![
            "decompose",
            "--map",
            "perturbed:2:0.5",
            "--samples",
            "500",
            "--sigma",
            "0.6,0.75,0.9",
        ],
        vec![
            "extension",
            "--map",
            "mp:0.5",
            "--potential",
            "distance:1:0.5",
            "--samples",
            "200",
        ],
        vec!["solenoid", "--samples", "200", "--sigma", "0.6", "--eps", "0.0625"],
    ] {
        let mut one = cmd.clone();
        one.extend(["--workers", "1"]);
        let mut four = cmd.clone();
        four.extend(["--workers", "4"]);
        let a = run_to(dir.path(), "a", &one);
        let b = run_to(dir.path(), "b", &four);
        assert_eq!(a, b, "{cmd:?}");
    }
}

#[test]
fn hash_ignores_output_location_but_tracks_settings() {
    let a = stdout(&thermoform(&["gap-report", "--n-max", "6"]));
    let b = stdout(&thermoform(&["gap-report", "--n-max", "6", "--workers", "2"]));
    let c = stdout(&thermoform(&["gap-report", "--n-max", "7"]));
    let first = |s: &str| s.lines().next().unwrap().to_string();
    assert_eq!(first(&a), first(&b));
    assert_ne!(first(&a), first(&c));
}

#[test]
fn point_cloud_has_documented_columns() {
    let dir = tempfile::tempdir().unwrap();
    let cloud = dir.path().join("cloud.csv");
    let o = thermoform(&["solenoid", "--samples", "100", "--cloud", cloud.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let text = std::fs::read_to_string(cloud).unwrap();
    assert_eq!(text.lines().nth(1), Some("theta,u,v,itinerary"));
    assert_eq!(text.lines().count(), 102);
}

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_twochannel"))
}

fn problem(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../problems")
        .join(name)
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path
}

#[test]
fn solve_scalar_instance() {
    let o = run(&[
        "solve",
        problem("scalar.toml").to_str().unwrap(),
        "--dump-operators",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let report: toml::Value = toml::from_str(&stdout(&o)).unwrap();
    let solve = &report["solve"];
    assert_eq!(solve["certified"].as_bool(), Some(true));
    let q = solve["q21"]["re"][0][0].as_float().unwrap();
    assert!((q - (2.0 - 5f64.sqrt())).abs() < 1e-10);
    assert!(report.get("effective").is_none());
    assert_eq!(report["summary"]["outcome"].as_str(), Some("pass"));
}

#[test]
fn verify_uncoupled_instance_is_exact() {
    let o = run(&["verify", problem("uncoupled.toml").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let report: toml::Value = toml::from_str(&stdout(&o)).unwrap();
    for check in report["summary"]["checks"].as_array().unwrap() {
        assert!(check["value"].as_float().unwrap() <= 1e-14, "{check}");
    }
}

#[test]
fn unknown_key_is_an_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = write(
        dir.path(),
        "bad.toml",
        "[channel1]\ndiscrete = [0.0]\nspectrum = 3\n[channel2]\ndiscrete = [2.0]\n[coupling]\nmatrix = [[0.5]]\n",
    );
    let o = run(&["solve", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains("spectrum") && err.contains("line 3"), "{err}");
}

#[test]
fn exit_codes_follow_the_outcome() {
    let overlapping = run(&["all", problem("overlapping.toml").to_str().unwrap()]);
    assert_eq!(overlapping.status.code(), Some(2));
    assert!(stdout(&overlapping).contains("not separated"));

    let uncertified = run(&["verify", problem("uncertified.toml").to_str().unwrap()]);
    assert_eq!(uncertified.status.code(), Some(0));
    assert!(stderr(&uncertified).contains("uncertified"));

    let stalled = run(&[
        "solve",
        problem("scalar.toml").to_str().unwrap(),
        "--max-iter",
        "2",
    ]);
    assert_eq!(stalled.status.code(), Some(3));

    let no_continuum = run(&["scatter", problem("scalar.toml").to_str().unwrap()]);
    assert_eq!(no_continuum.status.code(), Some(2));

    let tight = run(&[
        "scatter",
        problem("band_discrete.toml").to_str().unwrap(),
        "--onshell-tol",
        "1e-12",
    ]);
    assert_eq!(tight.status.code(), Some(1));
    assert!(stderr(&tight).contains("relative_onshell_defect"));

    let missing = run(&["solve", "/nonexistent/problem.toml"]);
    assert_eq!(missing.status.code(), Some(2));
}

#[test]
fn reports_are_byte_identical_and_atomic() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.toml");
    let b = dir.path().join("b.toml");
    for out in [&a, &b] {
        let o = run(&[
            "all",
            problem("band_discrete.toml").to_str().unwrap(),
            "--seed",
            "7",
            "--dump-operators",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        assert!(o.stdout.is_empty());
    }
    let ta = std::fs::read(&a).unwrap();
    assert_eq!(ta, std::fs::read(&b).unwrap());
    let entries: Vec<_> = std::fs::read_dir(dir.path()).unwrap().collect();
    assert_eq!(entries.len(), 2);
    let report: toml::Value = toml::from_str(std::str::from_utf8(&ta).unwrap()).unwrap();
    assert_eq!(report["schema"].as_str(), Some("twochannel-report/1"));
    assert_eq!(report["config"]["seed"].as_integer(), Some(7));
    for section in ["solve", "effective", "spectral", "scattering"] {
        assert!(report.get(section).is_some(), "{section}");
    }
}

#[test]
fn tables_have_headers_with_units() {
    let dir = tempfile::tempdir().unwrap();
    let tables = dir.path().join("tables");
    let o = run(&[
        "all",
        problem("band_discrete.toml").to_str().unwrap(),
        "--out",
        dir.path().join("r.toml").to_str().unwrap(),
        "--tables",
        tables.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let scattering = std::fs::read_to_string(tables.join("scattering.tsv")).unwrap();
    let mut lines = scattering.lines();
    assert_eq!(
        lines.next(),
        Some("lambda [energy]\tre_s [1]\tim_s [1]\tabs_s [1]\tonshell_defect [1]")
    );
    assert_eq!(lines.count(), 62);
    let iterations = std::fs::read_to_string(tables.join("iterations.tsv")).unwrap();
    assert!(iterations.starts_with("k [1]\tstep_norm [1]\tresidual [energy]\n"));
    assert!(tables.join("partition.tsv").exists());
}

#[test]
fn missing_table_lists_available_sections() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&[
        "solve",
        problem("scalar.toml").to_str().unwrap(),
        "--out",
        dir.path().join("r.toml").to_str().unwrap(),
        "--tables",
        dir.path().to_str().unwrap(),
        "--table",
        "scattering",
    ]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(
        err.contains("scattering") && err.contains("available: iterations"),
        "{err}"
    );
}

#[test]
fn generated_instances_replay_from_disk() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("random.toml");
    let o = run(&[
        "generate",
        "--n1",
        "4",
        "--n2",
        "3",
        "--ratio",
        "0.4",
        "--seed",
        "99",
        "--out",
        file.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = std::fs::read_to_string(&file).unwrap();
    assert!(text.contains("seed = 99"));
    let again = run(&[
        "generate", "--n1", "4", "--n2", "3", "--ratio", "0.4", "--seed", "99",
    ]);
    assert_eq!(stdout(&again), text);

    let verify = run(&["verify", file.to_str().unwrap()]);
    assert_eq!(verify.status.code(), Some(0), "{}", stderr(&verify));
    let report: toml::Value = toml::from_str(&stdout(&verify)).unwrap();
    assert_eq!(report["config"]["seed"].as_integer(), Some(99));
    assert_eq!(report["summary"]["certified"].as_bool(), Some(true));
}

#[test]
fn scatter_flags_are_echoed() {
    let o = run(&[
        "scatter",
        problem("band_band.toml").to_str().unwrap(),
        "--channel",
        "2",
        "--eps-ladder",
        "0.1,0.03,0.01",
        "--ladder-unit",
        "width",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let report: toml::Value = toml::from_str(&stdout(&o)).unwrap();
    assert_eq!(report["config"]["ladder_unit"].as_str(), Some("band_width"));
    assert_eq!(report["scattering"]["channel"].as_integer(), Some(2));
    assert_eq!(report["config"]["stages"].as_array().unwrap().len(), 2);

    let bad = run(&[
        "scatter",
        problem("band_band.toml").to_str().unwrap(),
        "--eps-ladder",
        "1,2",
    ]);
    assert_eq!(bad.status.code(), Some(2));
}

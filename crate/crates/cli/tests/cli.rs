use fracheat_cli::run::{Manifest, MANIFEST, REPORT};
use fracheat_cli::{catalog, check, run, CliError, ExperimentConfig, Kind};
use std::path::{Path, PathBuf};
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_fracheat"))
}

fn configs_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

const SMALL_COMPARE: &str = r#"
experiment = "compare"
output_dir = "unused"
seed = 5
replicates = 6

[params]
a = 1.5
delta = 0.0

[measure]
kind = "dirac"

[measure2]
kind = "dirac"
mass = 2.0

[rho]
kind = "linear"
lambda = 1.0

[grid]
T = 0.25
L = 3.0
n_t = 16
n_x = 48

[compare]
refinements = [1, 2]
"#;

fn small(text: &str, out: &Path) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::parse(text).unwrap();
    cfg.output_dir = out.to_path_buf();
    cfg
}

fn field_of(e: CliError) -> String {
    match e {
        CliError::Config { field, .. } => field,
        other => panic!("expected a config error, got {other}"),
    }
}

#[test]
fn bad_exponent_names_params_a() {
    let text = SMALL_COMPARE.replace("a = 1.5", "a = 2.5");
    let cfg = ExperimentConfig::parse(&text).unwrap();
    let e = cfg.validate().unwrap_err();
    assert_eq!(e.exit_code(), 2);
    assert_eq!(field_of(e), "params.a");
}

#[test]
fn bad_exponent_exits_with_config_status() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    std::fs::write(&path, SMALL_COMPARE.replace("a = 1.5", "a = 2.5")).unwrap();
    let out = bin().arg("run").arg(&path).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("params.a"), "{err}");
}

#[test]
fn parse_errors_carry_field_paths() {
    let e =
        ExperimentConfig::parse(&SMALL_COMPARE.replace("n_t = 16", "n_t = \"many\"")).unwrap_err();
    assert_eq!(field_of(e), "grid.n_t");
    let e = ExperimentConfig::parse(&SMALL_COMPARE.replace("seed = 5", "seed = 5\ncolour = 3"))
        .unwrap_err();
    assert!(matches!(e, CliError::Config { .. }));
    let e =
        ExperimentConfig::parse(&SMALL_COMPARE.replace("kind = \"linear\"", "kind = \"cubic\""))
            .unwrap_err();
    assert_eq!(field_of(e), "rho.kind");
    let e =
        ExperimentConfig::parse(&SMALL_COMPARE.replace("\"compare\"", "\"nonsense\"")).unwrap_err();
    assert_eq!(field_of(e), "experiment");
}

#[test]
fn validation_errors_carry_field_paths() {
    let bad_delta =
        ExperimentConfig::parse(&SMALL_COMPARE.replace("delta = 0.0", "delta = 0.9")).unwrap();
    assert_eq!(field_of(bad_delta.validate().unwrap_err()), "params.delta");
    let bad_t = ExperimentConfig::parse(&SMALL_COMPARE.replace("T = 0.25", "T = -1.0")).unwrap();
    assert_eq!(field_of(bad_t.validate().unwrap_err()), "grid.T");
    let reversed =
        ExperimentConfig::parse(&SMALL_COMPARE.replace("mass = 2.0", "mass = 0.5")).unwrap();
    assert_eq!(field_of(reversed.validate().unwrap_err()), "measure2");
    let no_reps =
        ExperimentConfig::parse(&SMALL_COMPARE.replace("replicates = 6", "replicates = 1"))
            .unwrap();
    assert_eq!(field_of(no_reps.validate().unwrap_err()), "replicates");
    let no_rho = ExperimentConfig::parse(
        &SMALL_COMPARE.replace("[rho]\nkind = \"linear\"\nlambda = 1.0\n", ""),
    )
    .unwrap();
    assert_eq!(field_of(no_rho.validate().unwrap_err()), "rho");
    let coarse = ExperimentConfig::parse(&SMALL_COMPARE.replace("n_t = 16", "n_t = 2")).unwrap();
    assert_eq!(field_of(coarse.validate().unwrap_err()), "grid");
}

#[test]
fn config_round_trips_through_toml_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small(SMALL_COMPARE, &dir.path().join("run"));
    assert_eq!(ExperimentConfig::parse(&cfg.to_toml()).unwrap(), cfg);
    let outcome = run(&cfg).unwrap();
    let m = Manifest::read(&outcome.dir.join(MANIFEST)).unwrap();
    assert_eq!(m.config, cfg);
    assert_eq!(ExperimentConfig::parse(&m.config.to_toml()).unwrap(), cfg);
    let echo = std::fs::read_to_string(outcome.dir.join("config.toml")).unwrap();
    assert_eq!(ExperimentConfig::parse(&echo).unwrap(), cfg);
    assert_eq!(m.seeds.base, 5);
    assert_eq!(m.seeds.replicates.len(), 6);
    assert_eq!(m, outcome.manifest);
}

#[test]
fn doubled_dirac_with_linear_rho_has_no_violations() {
    let dir = tempfile::tempdir().unwrap();
    let outcome = run(&small(SMALL_COMPARE, dir.path())).unwrap();
    assert!(outcome.report.all_passed(), "{:?}", outcome.report.checks);
    let zero = outcome
        .report
        .checks
        .iter()
        .find(|c| c.name == "zero_violations")
        .unwrap();
    assert!(zero.passed);
    let total = outcome.report.values["report"]["violating_cells"]
        .as_u64()
        .unwrap();
    assert_eq!(total, 0);
}

fn csv_files(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().map(|e| e == "csv").unwrap_or(false))
        .map(|p| {
            (
                p.file_name().unwrap().to_string_lossy().into_owned(),
                std::fs::read(&p).unwrap(),
            )
        })
        .collect();
    v.sort();
    v
}

#[test]
fn rerun_gives_bit_identical_csvs() {
    let dir = tempfile::tempdir().unwrap();
    let text = SMALL_COMPARE
        .replace("kind = \"linear\"", "kind = \"sine\"")
        .replace("mass = 2.0", "mass = 1.5");
    let a = run(&small(&text, &dir.path().join("a"))).unwrap();
    let b = run(&small(&text, &dir.path().join("b"))).unwrap();
    let (fa, fb) = (csv_files(&a.dir), csv_files(&b.dir));
    assert!(fa.len() >= 3);
    assert_eq!(fa, fb);
    // and a rerun into the same directory overwrites with identical bytes
    let c = run(&small(&text, &dir.path().join("a"))).unwrap();
    assert_eq!(csv_files(&c.dir), fa);
}

#[test]
fn distinct_seeds_give_distinct_csvs() {
    let dir = tempfile::tempdir().unwrap();
    let text = SMALL_COMPARE.replace("kind = \"linear\"", "kind = \"sine\"");
    let a = run(&small(&text, &dir.path().join("a"))).unwrap();
    let b = run(&small(
        &text.replace("seed = 5", "seed = 6"),
        &dir.path().join("b"),
    ))
    .unwrap();
    let fa = csv_files(&a.dir);
    let fb = csv_files(&b.dir);
    let field =
        |v: &[(String, Vec<u8>)]| v.iter().find(|f| f.0 == "field1_r0.csv").unwrap().1.clone();
    assert_ne!(field(&fa), field(&fb));
}

#[test]
fn output_dir_of_another_experiment_is_refused() {
    let dir = tempfile::tempdir().unwrap();
    run(&small(SMALL_COMPARE, dir.path())).unwrap();
    let other = format!(
        "experiment = \"kernel-checks\"\noutput_dir = \"{}\"\n[params]\na = 2.0\n",
        dir.path().display()
    );
    let e = run(&ExperimentConfig::parse(&other).unwrap()).unwrap_err();
    assert_eq!(field_of(e), "output_dir");
}

#[test]
fn catalog_lists_nine_kinds_with_targets() {
    let c = catalog::catalog();
    assert_eq!(c.len(), 9);
    for (e, k) in c.iter().zip(Kind::ALL) {
        assert_eq!(e.kind, k);
        assert!(!e.target.is_empty() && !e.description.is_empty());
    }
    let compare = c.iter().find(|e| e.kind == Kind::Compare).unwrap();
    assert!(compare.target.contains("comparison"));
    assert_eq!(catalog::render(), catalog::render());
}

#[test]
fn list_command_prints_catalog() {
    let a = bin().arg("list").output().unwrap();
    let b = bin().arg("list").output().unwrap();
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let text = String::from_utf8(a.stdout).unwrap();
    for k in Kind::ALL {
        assert!(text.contains(k.name()), "{} missing", k.name());
    }
    assert_eq!(text.matches("target:").count(), 9);
}

#[test]
fn check_command_reflects_report() {
    let dir = tempfile::tempdir().unwrap();
    let outcome = run(&small(SMALL_COMPARE, dir.path())).unwrap();
    let report = outcome.dir.join(REPORT);
    assert!(check(&report).is_ok());
    assert_eq!(
        bin().arg("check").arg(&report).status().unwrap().code(),
        Some(0)
    );

    let mut failing = outcome.report.clone();
    failing.check("forced", false, "deliberately failing");
    let bad = dir.path().join("failing.json");
    failing.write(&bad).unwrap();
    assert_eq!(check(&bad).unwrap_err().exit_code(), 4);
    assert_eq!(
        bin().arg("check").arg(&bad).status().unwrap().code(),
        Some(4)
    );
    assert_eq!(
        bin()
            .arg("check")
            .arg(dir.path().join("missing.json"))
            .status()
            .unwrap()
            .code(),
        Some(2)
    );
}

#[test]
fn compute_errors_exit_with_status_3() {
    // the moment bound has no closed evaluation for indicator data
    let dir = tempfile::tempdir().unwrap();
    let text = format!(
        r#"
experiment = "simulate"
output_dir = "{}"
replicates = 4
[params]
a = 1.5
[measure]
kind = "indicator"
lo = -1.0
hi = 1.0
[rho]
kind = "linear"
lambda = 1.0
[grid]
T = 0.25
L = 3.0
n_t = 16
n_x = 48
[simulate]
probes = [[0.25, 0.0]]
"#,
        dir.path().join("out").display()
    );
    let path = dir.path().join("c.toml");
    std::fs::write(&path, &text).unwrap();
    let out = bin().arg("run").arg(&path).output().unwrap();
    assert_eq!(
        out.status.code(),
        Some(3),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn thread_count_env_is_validated() {
    let out = bin()
        .arg("list")
        .env(fracheat_cli::THREADS_ENV, "lots")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let ok = bin()
        .arg("list")
        .env(fracheat_cli::THREADS_ENV, "2")
        .output()
        .unwrap();
    assert_eq!(ok.status.code(), Some(0));
}

#[test]
fn thread_count_does_not_change_results() {
    let dir = tempfile::tempdir().unwrap();
    let text = SMALL_COMPARE
        .replace("kind = \"linear\"", "kind = \"sine\"")
        .replace("output_dir = \"unused\"", "output_dir = \"r\"");
    let path = dir.path().join("c.toml");
    std::fs::write(&path, &text).unwrap();
    for (threads, sub) in [("1", "one"), ("3", "three")] {
        let st = bin()
            .arg("run")
            .arg(&path)
            .arg("--out")
            .arg(dir.path().join(sub))
            .env(fracheat_cli::THREADS_ENV, threads)
            .status()
            .unwrap();
        assert_eq!(st.code(), Some(0));
    }
    assert_eq!(
        csv_files(&dir.path().join("one")),
        csv_files(&dir.path().join("three"))
    );
    let m = Manifest::read(&dir.path().join("three").join(MANIFEST)).unwrap();
    assert_eq!(m.threads, 3);
}

#[test]
fn shipped_configs_validate() {
    let mut n = 0;
    for entry in std::fs::read_dir(configs_dir()).unwrap() {
        let p = entry.unwrap().path();
        if p.extension().map(|e| e == "toml").unwrap_or(false) {
            let cfg = ExperimentConfig::load(&p).unwrap_or_else(|e| panic!("{}: {e}", p.display()));
            cfg.validate()
                .unwrap_or_else(|e| panic!("{}: {e}", p.display()));
            n += 1;
        }
    }
    assert!(n >= 9);
}

#[test]
fn every_kind_appears_in_shipped_configs() {
    let kinds: Vec<Kind> = std::fs::read_dir(configs_dir())
        .unwrap()
        .filter_map(|e| ExperimentConfig::load(&e.unwrap().path()).ok())
        .map(|c| c.experiment)
        .collect();
    for k in Kind::ALL {
        assert!(kinds.contains(&k), "no config for {}", k.name());
    }
}

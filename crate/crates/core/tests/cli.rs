use std::fs;
use std::path::Path;
use std::process::Command as Process;

use clap::Parser;
use mmblock::cli::{self, apply_config_text, parse_range, Cli, Counts, StudyArgs, CENSOR_DEFAULT_SIZES};
use mmblock::experiment::{self, aggregate, Engine, FitRecord, StudyConfig};
use mmblock::simgen::{self, SimConfig};
use mmblock::{eval, Hyperparams};
use serde_json::Value;

fn run(args: &[&str]) {
    let mut full = vec!["mmblock"];
    full.extend_from_slice(args);
    cli::run(Cli::try_parse_from(full).unwrap()).unwrap();
}

fn read(p: &Path) -> String {
    fs::read_to_string(p).unwrap()
}

fn json(p: &Path) -> Value {
    serde_json::from_str(&read(p)).unwrap()
}

fn files(dir: &Path) -> Vec<(String, String)> {
    let mut out: Vec<(String, String)> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.is_file())
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), read(&p)))
        .collect();
    out.sort();
    out
}

#[test]
fn simulate_is_byte_reproducible() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    run(&["simulate", "--preset", "paper-small", "--seed", "4", "--out", a.to_str().unwrap()]);
    run(&["simulate", "--preset", "paper-small", "--seed", "4", "--out", b.to_str().unwrap()]);
    let fa = files(&a);
    assert_eq!(fa.len(), 5);
    assert_eq!(fa, files(&b));
    let manifest = json(&a.join("manifest.json"));
    assert_eq!(manifest["schema_version"], 1);
    assert_eq!(manifest["sim"]["n1"], 10);
    let truth = cli::read_simulation(&a).unwrap();
    let direct = simgen::generate(&SimConfig::new(10, 15, 2, 3, 4)).unwrap();
    assert_eq!(truth.table, direct.table);
    assert_eq!(truth.b, direct.b);
}

#[test]
fn presets_have_the_documented_sizes() {
    let tmp = tempfile::tempdir().unwrap();
    for (name, n1, k1) in [("paper-medium", 50, 4), ("paper-large", 100, 6)] {
        let d = tmp.path().join(name);
        run(&["simulate", "--preset", name, "--out", d.to_str().unwrap()]);
        let m = json(&d.join("manifest.json"));
        assert_eq!(m["sim"]["n1"], n1);
        assert_eq!(m["sim"]["k1"], k1);
    }
    let bad = Cli::try_parse_from(["mmblock", "simulate", "--preset", "huge"]).unwrap();
    assert!(cli::run(bad).is_err());
}

#[test]
fn fit_and_evaluate_from_files() {
    let tmp = tempfile::tempdir().unwrap();
    let sim = tmp.path().join("sim");
    run(&["simulate", "--preset", "paper-small", "--seed", "1", "--out", sim.to_str().unwrap()]);
    let table = sim.join("table.csv");
    let (f1, f2) = (tmp.path().join("f1"), tmp.path().join("f2"));
    for f in [&f1, &f2] {
        run(&["fit", "--table", table.to_str().unwrap(), "--k1", "2", "--k2", "3", "--seed", "1", "--out", f.to_str().unwrap()]);
    }
    assert_eq!(read(&f1.join("fit.json")), read(&f2.join("fit.json")));
    assert_eq!(read(&f1.join("report.json")), read(&f2.join("report.json")));
    let record: FitRecord = serde_json::from_str(&read(&f1.join("fit.json"))).unwrap();
    assert_eq!(record.engine, Engine::Vem);
    assert!(record.elbo_trace.len() >= 2);
    assert_eq!(record.max_elbo_decrease, Some(0.0));
    assert!(f1.join("timing.json").exists());

    let ev = tmp.path().join("ev");
    run(&["evaluate", "--fit", f1.join("fit.json").to_str().unwrap(), "--truth", sim.to_str().unwrap(), "--out", ev.to_str().unwrap()]);
    let report = json(&ev.join("report.json"));
    let acc = report["metrics"]["row_accuracy"].as_f64().unwrap();
    assert!((0.0..=1.0).contains(&acc));
    assert!(report["metrics"]["eps_b_mae"].as_f64().unwrap() >= 0.0);
}

#[test]
fn gibbs_fit_retains_500_draws_per_chain() {
    let tmp = tempfile::tempdir().unwrap();
    let sim = tmp.path().join("sim");
    run(&["simulate", "--preset", "paper-small", "--out", sim.to_str().unwrap()]);
    let out = tmp.path().join("g");
    run(&["fit", "--table", sim.join("table.csv").to_str().unwrap(), "--k1", "2", "--k2", "3", "--engine", "gibbs", "--out", out.to_str().unwrap()]);
    let record: FitRecord = serde_json::from_str(&read(&out.join("fit.json"))).unwrap();
    assert_eq!(record.draws_per_chain, Some(500));
    assert_eq!(record.chains, Some(10));
    assert_eq!(record.psrf.as_ref().map(|m| (m.rows(), m.cols())), Some((2, 3)));
}

#[test]
fn perfect_and_relabeled_fits_evaluate_identically() {
    let truth = simgen::generate(&SimConfig::new(10, 15, 2, 3, 2)).unwrap();
    let perfect = experiment::evaluate(&truth.pi, &truth.p, &truth.b, &truth).unwrap();
    assert_eq!(perfect.accuracy.first_row, 1.0);
    assert_eq!(perfect.accuracy.first_col, 1.0);
    assert_eq!(perfect.blockmodel_error.mae, 0.0);
    assert_eq!(perfect.blockmodel_error.induced_one_norm, 0.0);

    let (rp, cp) = ([1, 0], [2, 0, 1]);
    let pi = truth.pi.permute_groups(&rp);
    let p = truth.p.permute_groups(&cp);
    let mut b = mmblock::Matrix::zeros(2, 3);
    for g in 0..2 {
        for h in 0..3 {
            b[(g, h)] = truth.b.get(rp[g], cp[h]);
        }
    }
    let shuffled = experiment::evaluate(&pi, &p, &mmblock::Blockmodel::new(b).unwrap(), &truth).unwrap();
    assert_eq!(shuffled.accuracy, perfect.accuracy);
    assert_eq!(shuffled.blockmodel_error, perfect.blockmodel_error);
}

fn small_study(replicates: usize) -> StudyConfig {
    let mut cfg = StudyConfig { replicates, ..Default::default() };
    cfg.engine.vem.restarts = 3;
    cfg
}

#[test]
fn study_reports_do_not_depend_on_worker_count() {
    let one = experiment::recovery_study(&small_study(4)).unwrap();
    let two = experiment::recovery_study(&StudyConfig { workers: 2, ..small_study(4) }).unwrap();
    let tmp = tempfile::tempdir().unwrap();
    cli::write_study(&tmp.path().join("a"), &one).unwrap();
    cli::write_study(&tmp.path().join("b"), &two).unwrap();
    for f in ["report.json", "metrics.csv"] {
        assert_eq!(read(&tmp.path().join("a").join(f)), read(&tmp.path().join("b").join(f)), "{f}");
    }
}

#[test]
fn aggregates_are_recomputable_from_replicates() {
    let study = experiment::recovery_study(&small_study(3)).unwrap();
    let r = &study.report;
    assert_eq!(r.schema_version, 1);
    assert_eq!(r.replicates.len(), 3);
    assert_eq!(aggregate(&r.replicates), r.aggregate);
    let rows: Vec<f64> = r.replicates.iter().map(|x| x.metrics["row_accuracy"]).collect();
    let m = eval::MeanSd::of(&rows).unwrap();
    assert_eq!(r.aggregate["row_accuracy"].formatted, format!("{:.3} ({:.3})", m.mean, m.sd));
    let csv = study.metrics_csv();
    assert_eq!(csv.lines().count(), 4);
    assert!(csv.starts_with("replicate,seed,"));
    assert_eq!(study.timing.replicates.len(), 3);
}

#[test]
fn config_file_merges_over_command_defaults() {
    let defaults = StudyConfig::default();
    let mut censor = defaults.clone();
    (censor.sim.n1, censor.sim.n2, censor.sim.k1, censor.sim.k2) = CENSOR_DEFAULT_SIZES;
    let (cfg, preset) = apply_config_text(censor.clone(), "replicates = 2\n[engine.vem]\nrestarts = 4\n").unwrap();
    assert_eq!(preset, None);
    assert_eq!(cfg.replicates, 2);
    assert_eq!(cfg.engine.vem.restarts, 4);
    assert_eq!(cfg.engine.vem.tol, 1e-5);
    assert_eq!((cfg.sim.n1, cfg.sim.k1), (50, 6));

    let (cfg, preset) = apply_config_text(defaults, "preset = \"paper-medium\"\nseed = 9\n[engine]\nengine = \"gibbs\"\n").unwrap();
    assert_eq!(preset.as_deref(), Some("paper-medium"));
    assert_eq!(cfg.seed, 9);
    assert_eq!(cfg.engine.engine, Engine::Gibbs);
    assert!(apply_config_text(StudyConfig::default(), "replicates = \"many\"").is_err());
}

#[test]
fn flags_override_config_file() {
    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("c.toml");
    fs::write(&path, "preset = \"paper-medium\"\nseed = 3\nreplicates = 7\n").unwrap();
    let args = StudyArgs {
        config: Some(path),
        preset: Some("paper-small".into()),
        seed: Some(5),
        engine: Some(Engine::Gibbs),
        replicates: None,
        out: None,
    };
    let cfg = cli::resolve_config(&args, 3, StudyConfig::default()).unwrap();
    assert_eq!((cfg.sim.n1, cfg.seed, cfg.replicates, cfg.workers), (10, 5, 7, 3));
    assert_eq!(cfg.engine.engine, Engine::Gibbs);
}

#[test]
fn range_parsing() {
    assert_eq!(parse_range("1-4").unwrap(), Counts(vec![1, 2, 3, 4]));
    assert_eq!(parse_range("3").unwrap(), Counts(vec![3]));
    assert_eq!(parse_range("1,3-4").unwrap(), Counts(vec![1, 3, 4]));
    assert!(parse_range("0-2").is_err());
    assert!(parse_range("4-2").is_err());
    assert!(parse_range("x").is_err());
}

#[test]
fn median_censoring_marks_half_the_cells() {
    let mut cfg = small_study(2);
    (cfg.sim.n1, cfg.sim.n2, cfg.sim.k1, cfg.sim.k2) = (10, 15, 2, 3);
    let study = experiment::censor_study(&cfg).unwrap();
    for r in &study.report.replicates {
        assert_eq!(r.metrics["positive_fraction_median"], 0.5);
        assert_eq!(r.metrics["tau_fixed_0.5"], 0.5);
        for key in ["median", "mean", "fixed_0.5"] {
            let ratio = r.metrics[&format!("ratio_{key}")];
            assert!((ratio - r.metrics[&format!("eps_{key}")] / r.metrics["eps_raw"]).abs() < 1e-12);
        }
    }
    assert!(study.report.summary.contains_key("ratio_of_means_median"));
    let gibbs = StudyConfig { engine: experiment::EngineSettings { engine: Engine::Gibbs, ..Default::default() }, ..cfg };
    assert!(experiment::censor_study(&gibbs).is_err());
}

#[test]
fn constant_blockmodel_gives_small_raw_error() {
    let mut cfg = small_study(2);
    cfg.sim.sigma2_b = 0.0;
    let study = experiment::censor_study(&cfg).unwrap();
    // Cells are pure noise with sd 0.1; the fit predicts their mean.
    assert!(study.mean("eps_raw").unwrap() < 0.1);
}

#[test]
fn holdout_reports_baseline_and_missing_fraction() {
    let study = experiment::holdout_study(&small_study(2)).unwrap();
    assert_eq!(study.report.summary["row_baseline"], 0.5);
    for r in &study.report.replicates {
        // 6 of 10 rows and 10 of 15 columns selected, half of the 60 cells masked.
        assert_eq!(r.metrics["missing_fraction"], 0.2);
        assert_eq!(r.metrics["row_accuracy_over_baseline"], r.metrics["row_accuracy"] / 0.5);
    }
    let big = simgen::generate(&SimConfig::new(100, 150, 2, 3, 0)).unwrap();
    let h = simgen::mask_holdout(&big.table, 0).unwrap();
    assert!((h.missing_fraction() - 2.0 / 9.0).abs() < 0.005);
}

#[test]
fn select_k_single_candidate_and_penalty_order() {
    let t = simgen::generate(&SimConfig::new(10, 15, 2, 3, 0)).unwrap();
    let h = Hyperparams::symmetric(0.05, 0.05, 0.01).unwrap();
    let cfg = mmblock::vem::VemConfig { restarts: 2, ..Default::default() };
    let scan = experiment::select_k(&t.table, &h, &[3], &[2], &cfg).unwrap();
    assert_eq!((scan.best().k1, scan.best().k2), (3, 2));
    let full = experiment::select_k(&t.table, &h, &[1, 2], &[3], &cfg).unwrap();
    for c in &full.candidates {
        assert!((c.bic - eval::bic(c.elbo, c.k1, c.k2, 10, 15)).abs() < 1e-12);
    }
    assert!(full.candidates.iter().all(|c| c.bic >= full.best().bic));
    assert!(experiment::select_k(&t.table, &h, &[], &[3], &cfg).is_err());
}

#[test]
fn select_k_on_a_table_file() {
    let tmp = tempfile::tempdir().unwrap();
    let sim = tmp.path().join("sim");
    run(&["simulate", "--out", sim.to_str().unwrap()]);
    let out = tmp.path().join("k");
    run(&["select-k", "--table", sim.join("table.csv").to_str().unwrap(), "--k1", "1-3", "--k2", "3", "--out", out.to_str().unwrap()]);
    let r = json(&out.join("report.json"));
    assert_eq!(r["scan"]["candidates"].as_array().unwrap().len(), 3);
}

fn write_series(path: &Path, rows: &[(&str, [f64; 5])]) {
    let mut s = String::from("id,t1,t2,t3,t4,t5\n");
    for (id, v) in rows {
        s.push_str(id);
        for x in v {
            s.push_str(&format!(",{x}"));
        }
        s.push('\n');
    }
    fs::write(path, s).unwrap();
}

#[test]
fn ingest_builds_tables_and_class_priors() {
    let tmp = tempfile::tempdir().unwrap();
    let (g, m, c) = (tmp.path().join("g.csv"), tmp.path().join("m.csv"), tmp.path().join("c.csv"));
    write_series(&g, &[("g1", [1.0, 2.0, 3.0, 4.0, 5.0]), ("g2", [2.0, 1.0, 4.0, 3.0, 5.0]), ("g3", [5.0, 3.0, 1.0, 2.0, 4.0])]);
    write_series(&m, &[("m1", [1.0, 2.0, 3.0, 4.0, 5.0]), ("m2", [1.0, 3.0, 2.0, 5.0, 4.0])]);
    fs::write(&c, "id,class\nm1,amino\nm2,sugar\nx,lipid\ny,nucleotide\n").unwrap();
    let out = tmp.path().join("out");
    run(&[
        "ingest", "--genes", g.to_str().unwrap(), "--metabolites", m.to_str().unwrap(), "--classes", c.to_str().unwrap(),
        "--out", out.to_str().unwrap(),
    ]);
    let rho = mmblock::table_io::read_matrix(&out.join("rho.csv")).unwrap();
    // Hand correlations: centered g2 = (-1,-2,1,0,2), m2 = (-2,0,-1,2,1), each with sum of squares 10.
    assert_eq!((rho.rows(), rho.cols()), (3, 2));
    assert!((rho[(1, 0)] - 0.8).abs() < 1e-12);
    assert!((rho[(1, 1)] - 0.3).abs() < 1e-12);
    assert!((rho[(0, 0)] - (1.0 - 1e-12)).abs() < 1e-15);
    let report = json(&out.join("report.json"));
    assert_eq!(report["clipped_cells"][0], serde_json::json!(["g1", "m1"]));
    assert_eq!(report["classes"].as_array().unwrap().len(), 4);
    let prior = mmblock::table_io::read_matrix(&out.join("class_prior.csv")).unwrap();
    // Classes sort as amino, lipid, nucleotide, sugar.
    assert_eq!(prior.row(0), &[100.0, 1.0, 1.0, 1.0]);
    assert_eq!(prior.row(1), &[1.0, 1.0, 1.0, 100.0]);
    let table = mmblock::table_io::read_table(&out.join("table.csv"), None).unwrap();
    assert!((table.table.get(1, 0) - 0.8f64.atanh()).abs() < 1e-12);
    assert_eq!(table.row_ids.unwrap(), vec!["g1", "g2", "g3"]);
}

#[test]
fn binary_reports_errors_with_nonzero_exit() {
    let exe = env!("CARGO_BIN_EXE_mmblock");
    let help = Process::new(exe).arg("--help").output().unwrap();
    assert!(help.status.success());
    let text = String::from_utf8_lossy(&help.stdout);
    for cmd in ["simulate", "fit", "evaluate", "censor-study", "holdout", "select-k", "ingest", "bench"] {
        assert!(text.contains(cmd), "{cmd} missing from help");
    }
    let bad = Process::new(exe).args(["fit", "--table", "/nonexistent.csv", "--k1", "2", "--k2", "2"]).output().unwrap();
    assert!(!bad.status.success());
    assert!(String::from_utf8_lossy(&bad.stderr).contains("error"));
}

//! Command-line front end: argument parsing, config loading and file
//! output around the runners in [`crate::experiment`].

use std::collections::BTreeMap;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::experiment::{self, Engine, EngineSettings, FitRecord, Study, StudyConfig, SCHEMA_VERSION};
use crate::ingest;
use crate::model::{Blockmodel, LikelihoodKind, MembershipMatrix};
use crate::simgen::{self, Preset, SimConfig, SimTruth};
use crate::table_io::{self, LabeledTable};
use crate::{Error, Matrix, Result};

pub const WORKERS_ENV: &str = "MMBLOCK_WORKERS";

/// Table and block sizes of the censoring study when no preset is given.
pub const CENSOR_DEFAULT_SIZES: (usize, usize, usize, usize) = (50, 75, 6, 9);
/// Table and block sizes of the size-selection study when no preset is given.
pub const SELECT_K_DEFAULT_SIZES: (usize, usize, usize, usize) = (50, 75, 2, 3);

#[derive(Debug, Parser)]
#[command(name = "mmblock", version, about = "Two-way mixed-membership blockmodels")]
pub struct Cli {
    /// Worker threads for replicates.
    #[arg(long, global = true, env = WORKERS_ENV, default_value_t = 1)]
    pub workers: usize,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Draw a synthetic table and its truth.
    Simulate(StudyArgs),
    /// Fit a table file with one engine.
    Fit(FitArgs),
    /// Score a fit against a simulated truth, or run a replicated recovery study.
    Evaluate(EvaluateArgs),
    /// Compare a Normal fit on raw data with Bernoulli fits on censored data.
    CensorStudy(StudyArgs),
    /// Mask half the cells of a two-thirds sub-table, fit the rest and predict them.
    Holdout(StudyArgs),
    /// Scan block sizes by BIC on a table file or on simulated replicates.
    SelectK(SelectKArgs),
    /// Build a correlation table and class priors from time courses.
    Ingest(IngestArgs),
    /// Time both engines single-threaded on the same tables.
    Bench(StudyArgs),
}

#[derive(Debug, Clone, Args)]
pub struct StudyArgs {
    /// TOML config; flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// paper-small, paper-medium or paper-large.
    #[arg(long)]
    pub preset: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_enum)]
    pub engine: Option<Engine>,
    #[arg(long)]
    pub replicates: Option<usize>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    /// Table file to fit.
    #[arg(long)]
    pub table: PathBuf,
    #[arg(long)]
    pub k1: usize,
    #[arg(long)]
    pub k2: usize,
    /// Overrides the kind declared in the table file.
    #[arg(long, value_enum)]
    pub kind: Option<KindArg>,
    /// Per-row Dirichlet pseudocounts (`N1 x K1` matrix file).
    #[arg(long)]
    pub row_prior: Option<PathBuf>,
    /// Per-column Dirichlet pseudocounts (`N2 x K2` matrix file).
    #[arg(long)]
    pub col_prior: Option<PathBuf>,
    #[command(flatten)]
    pub common: StudyArgs,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// `fit.json` written by `fit`; omit to run a replicated study.
    #[arg(long, requires = "truth")]
    pub fit: Option<PathBuf>,
    /// Directory written by `simulate`.
    #[arg(long)]
    pub truth: Option<PathBuf>,
    #[command(flatten)]
    pub common: StudyArgs,
}

#[derive(Debug, Args)]
pub struct SelectKArgs {
    /// Table file to scan; omit to scan simulated replicates.
    #[arg(long)]
    pub table: Option<PathBuf>,
    /// Row group counts, as `1,2,3` or `1-4`.
    #[arg(long, value_parser = parse_range)]
    pub k1: Option<Counts>,
    /// Column group counts, as `3` or `2-4`.
    #[arg(long, value_parser = parse_range)]
    pub k2: Option<Counts>,
    #[arg(long, value_enum)]
    pub kind: Option<KindArg>,
    #[command(flatten)]
    pub common: StudyArgs,
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    /// Row objects: header `id,t1,...`, one series per line.
    #[arg(long)]
    pub genes: PathBuf,
    /// Column objects, same format and time points.
    #[arg(long)]
    pub metabolites: PathBuf,
    /// `id,class` lines assigning column objects to classes.
    #[arg(long)]
    pub classes: Option<PathBuf>,
    /// Pseudocount at an object's own class.
    #[arg(long, default_value_t = 100.0)]
    pub prior_strength: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum KindArg {
    Gaussian,
    Bernoulli,
}

impl From<KindArg> for LikelihoodKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::Gaussian => LikelihoodKind::Gaussian,
            KindArg::Bernoulli => LikelihoodKind::Bernoulli,
        }
    }
}

/// A list of group counts given on the command line.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Counts(pub Vec<usize>);

/// Parses `3`, `1,2,4` or `1-4` (inclusive).
pub fn parse_range(s: &str) -> std::result::Result<Counts, String> {
    let mut out = Vec::new();
    for part in s.split(',').map(str::trim) {
        if let Some((a, b)) = part.split_once('-') {
            let a: usize = a.trim().parse().map_err(|_| format!("bad range start in {part:?}"))?;
            let b: usize = b.trim().parse().map_err(|_| format!("bad range end in {part:?}"))?;
            if a > b {
                return Err(format!("empty range {part:?}"));
            }
            out.extend(a..=b);
        } else {
            out.push(part.parse().map_err(|_| format!("{part:?} is not a count"))?);
        }
    }
    if out.is_empty() || out.contains(&0) {
        return Err("counts must be positive".into());
    }
    Ok(Counts(out))
}

fn merge(base: &mut toml::Table, over: toml::Table) {
    for (k, v) in over {
        match (base.get_mut(&k), v) {
            (Some(toml::Value::Table(b)), toml::Value::Table(o)) => merge(b, o),
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}

/// Applies a TOML config on top of `defaults`. Keys absent from the file
/// keep their defaults; a top-level `preset` key sets the simulated sizes.
pub fn apply_config_text(defaults: StudyConfig, text: &str) -> Result<(StudyConfig, Option<String>)> {
    let mut file: toml::Table = toml::from_str(text)?;
    let preset = match file.remove("preset") {
        Some(toml::Value::String(p)) => Some(p),
        Some(other) => return Err(Error::InvalidInput(format!("preset must be a string, got {other}"))),
        None => None,
    };
    let mut base = toml::Table::try_from(&defaults).map_err(|e| Error::Serde(e.to_string()))?;
    merge(&mut base, file);
    let cfg: StudyConfig = base.try_into().map_err(|e: toml::de::Error| Error::Serde(e.to_string()))?;
    Ok((cfg, preset))
}

fn with_sizes(mut cfg: StudyConfig, (n1, n2, k1, k2): (usize, usize, usize, usize)) -> StudyConfig {
    cfg.sim.n1 = n1;
    cfg.sim.n2 = n2;
    cfg.sim.k1 = k1;
    cfg.sim.k2 = k2;
    cfg
}

/// Builds the study config: command defaults, then the config file, then
/// the preset, then flags.
pub fn resolve_config(args: &StudyArgs, workers: usize, defaults: StudyConfig) -> Result<StudyConfig> {
    let mut cfg = defaults;
    let mut preset = None;
    if let Some(path) = &args.config {
        (cfg, preset) = apply_config_text(cfg, &table_io::read_text(path)?)?;
    }
    if let Some(p) = args.preset.clone().or(preset) {
        cfg = cfg.with_preset(Preset::from_name(&p)?);
    }
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    if let Some(e) = args.engine {
        cfg.engine.engine = e;
    }
    if let Some(r) = args.replicates {
        cfg.replicates = r;
    }
    cfg.workers = workers.max(1);
    cfg.validate()?;
    Ok(cfg)
}

fn out_dir(args: &StudyArgs, command: &str) -> PathBuf {
    args.out.clone().unwrap_or_else(|| PathBuf::from("mmblock-out").join(command))
}

fn to_json<T: Serialize>(v: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(v)?;
    s.push('\n');
    Ok(s)
}

fn write_json<T: Serialize>(path: &Path, v: &T) -> Result<()> {
    table_io::write_text(path, &to_json(v)?)
}

/// Writes `report.json`, `metrics.csv` and `timing.json`.
pub fn write_study(dir: &Path, study: &Study) -> Result<()> {
    write_json(&dir.join("report.json"), &study.report)?;
    table_io::write_text(&dir.join("metrics.csv"), &study.metrics_csv())?;
    write_json(&dir.join("timing.json"), &study.timing)
}

fn print_study(study: &Study, keys: &[&str]) {
    let r = &study.report;
    println!("{}: {} replicate(s)", r.command, r.replicates.len());
    for (k, a) in &r.aggregate {
        if keys.is_empty() || keys.iter().any(|p| k.starts_with(p)) {
            println!("  {k:<28} {}", a.formatted);
        }
    }
    for (k, v) in &r.summary {
        println!("  {k:<28} {v:.3}");
    }
}

/// Files written by `simulate`.
#[derive(Debug, Serialize, Deserialize)]
pub struct SimulationManifest {
    pub schema_version: u32,
    pub sim: SimConfig,
    pub files: BTreeMap<String, String>,
}

/// Writes `table.csv`, `truth_pi.csv`, `truth_p.csv`, `truth_b.csv` and
/// `manifest.json` into `dir`.
pub fn write_simulation(dir: &Path, sim: &SimConfig, truth: &SimTruth) -> Result<()> {
    let files = [
        ("table", "table.csv"),
        ("row_memberships", "truth_pi.csv"),
        ("col_memberships", "truth_p.csv"),
        ("blockmodel", "truth_b.csv"),
    ];
    table_io::write_table(&dir.join("table.csv"), &LabeledTable::from(truth.table.clone()))?;
    table_io::write_matrix(&dir.join("truth_pi.csv"), truth.pi.matrix())?;
    table_io::write_matrix(&dir.join("truth_p.csv"), truth.p.matrix())?;
    table_io::write_matrix(&dir.join("truth_b.csv"), truth.b.matrix())?;
    let manifest = SimulationManifest {
        schema_version: SCHEMA_VERSION,
        sim: sim.clone(),
        files: files.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect(),
    };
    write_json(&dir.join("manifest.json"), &manifest)
}

/// Reads the truth written by [`write_simulation`].
pub fn read_simulation(dir: &Path) -> Result<SimTruth> {
    let table = table_io::read_table(&dir.join("table.csv"), None)?.table;
    Ok(SimTruth {
        pi: MembershipMatrix::new(table_io::read_matrix(&dir.join("truth_pi.csv"))?)?,
        p: MembershipMatrix::new(table_io::read_matrix(&dir.join("truth_p.csv"))?)?,
        b: Blockmodel::new(table_io::read_matrix(&dir.join("truth_b.csv"))?)?,
        table,
    })
}

fn cmd_simulate(args: &StudyArgs, workers: usize) -> Result<()> {
    let cfg = resolve_config(args, workers, StudyConfig::default())?;
    let sim = cfg.sim.clone().with_seed(cfg.seed);
    let truth = simgen::generate(&sim)?;
    let dir = out_dir(args, "simulate");
    write_simulation(&dir, &sim, &truth)?;
    println!("wrote {}x{} table with {}x{} blocks to {}", sim.n1, sim.n2, sim.k1, sim.k2, dir.display());
    Ok(())
}

#[derive(Debug, Serialize)]
struct FitReport<'a> {
    schema_version: u32,
    command: &'static str,
    table: String,
    n1: usize,
    n2: usize,
    settings: &'a EngineSettings,
    seed: u64,
    elbo: Option<f64>,
    outer_iters: usize,
    max_elbo_decrease: Option<f64>,
    convergence_warning: Option<bool>,
}

#[derive(Debug, Serialize)]
struct FitTiming {
    schema_version: u32,
    command: &'static str,
    engine_seconds: f64,
}

fn cmd_fit(a: &FitArgs, workers: usize) -> Result<()> {
    let cfg = resolve_config(&a.common, workers, StudyConfig::default())?;
    let y = table_io::read_table(&a.table, a.kind.map(Into::into))?.table;
    let mut settings = cfg.engine.clone();
    if let Some(p) = &a.row_prior {
        settings.vem.prior_nu = Some(table_io::read_matrix(p)?);
    }
    if let Some(p) = &a.col_prior {
        settings.vem.prior_xi = Some(table_io::read_matrix(p)?);
    }
    let hyper = cfg.sim.hyperparams()?;
    let start = std::time::Instant::now();
    let fit = experiment::fit_engine(&y, &hyper, a.k1, a.k2, &settings, cfg.seed)
        .map_err(|e| Error::Engine(format!("{} fit of {}: {e}", settings.engine.name(), a.table.display())))?;
    let secs = start.elapsed().as_secs_f64();
    let record = FitRecord::new(&fit, &settings, cfg.seed);
    let dir = out_dir(&a.common, "fit");
    write_json(&dir.join("fit.json"), &record)?;
    table_io::write_matrix(&dir.join("pi.csv"), record.row_memberships.matrix())?;
    table_io::write_matrix(&dir.join("p.csv"), record.col_memberships.matrix())?;
    table_io::write_matrix(&dir.join("b.csv"), record.blockmodel.matrix())?;
    let report = FitReport {
        schema_version: SCHEMA_VERSION,
        command: "fit",
        table: a.table.display().to_string(),
        n1: y.n1(),
        n2: y.n2(),
        settings: &settings,
        seed: cfg.seed,
        elbo: record.elbo,
        outer_iters: record.elbo_trace.len().saturating_sub(1),
        max_elbo_decrease: record.max_elbo_decrease,
        convergence_warning: record.convergence_warning,
    };
    write_json(&dir.join("report.json"), &report)?;
    write_json(&dir.join("timing.json"), &FitTiming { schema_version: SCHEMA_VERSION, command: "fit", engine_seconds: secs })?;
    match record.elbo {
        Some(e) => println!("{} fit: ELBO {e:.4}, wrote {}", settings.engine.name(), dir.display()),
        None => println!(
            "{} fit: {} draws per chain, PSRF warning {}, wrote {}",
            settings.engine.name(),
            record.draws_per_chain.unwrap_or(0),
            record.convergence_warning.unwrap_or(false),
            dir.display()
        ),
    }
    Ok(())
}

#[derive(Debug, Serialize)]
struct EvaluationReport {
    schema_version: u32,
    command: &'static str,
    fit: String,
    truth: String,
    metrics: experiment::Metrics,
    evaluation: experiment::Evaluation,
}

fn cmd_evaluate(a: &EvaluateArgs, workers: usize) -> Result<()> {
    if let (Some(fit), Some(truth_dir)) = (&a.fit, &a.truth) {
        let record: FitRecord = serde_json::from_str(&table_io::read_text(fit)?)?;
        let truth = read_simulation(truth_dir)?;
        let ev = experiment::evaluate(&record.row_memberships, &record.col_memberships, &record.blockmodel, &truth)?;
        let mut metrics = experiment::Metrics::new();
        ev.insert_into(&mut metrics);
        let dir = out_dir(&a.common, "evaluate");
        write_json(
            &dir.join("report.json"),
            &EvaluationReport {
                schema_version: SCHEMA_VERSION,
                command: "evaluate",
                fit: fit.display().to_string(),
                truth: truth_dir.display().to_string(),
                metrics: metrics.clone(),
                evaluation: ev,
            },
        )?;
        for (k, v) in &metrics {
            println!("  {k:<28} {v:.3}");
        }
        return Ok(());
    }
    let cfg = resolve_config(&a.common, workers, StudyConfig::default())?;
    let study = experiment::recovery_study(&cfg)?;
    write_study(&out_dir(&a.common, "evaluate"), &study)?;
    print_study(&study, &["row_accuracy", "col_accuracy", "eps_b", "psrf"]);
    Ok(())
}

fn cmd_censor(args: &StudyArgs, workers: usize) -> Result<()> {
    let cfg = resolve_config(args, workers, with_sizes(StudyConfig::default(), CENSOR_DEFAULT_SIZES))?;
    let study = experiment::censor_study(&cfg)?;
    write_study(&out_dir(args, "censor-study"), &study)?;
    print_study(&study, &["eps", "recall", "precision", "tau"]);
    Ok(())
}

fn cmd_holdout(args: &StudyArgs, workers: usize) -> Result<()> {
    let cfg = resolve_config(args, workers, StudyConfig::default())?;
    let study = experiment::holdout_study(&cfg)?;
    write_study(&out_dir(args, "holdout"), &study)?;
    print_study(&study, &["row_accuracy", "col_accuracy", "heldout_mae", "missing_fraction"]);
    Ok(())
}

#[derive(Debug, Serialize)]
struct ScanReport {
    schema_version: u32,
    command: &'static str,
    table: String,
    seed: u64,
    vem: crate::vem::VemConfig,
    scan: experiment::KScan,
}

fn cmd_select_k(a: &SelectKArgs, workers: usize) -> Result<()> {
    let mut cfg = resolve_config(&a.common, workers, with_sizes(StudyConfig::default(), SELECT_K_DEFAULT_SIZES))?;
    if let Some(k1) = &a.k1 {
        cfg.select_k.k1 = k1.0.clone();
    }
    if let Some(k2) = &a.k2 {
        cfg.select_k.k2 = k2.0.clone();
    }
    let dir = out_dir(&a.common, "select-k");
    if let Some(path) = &a.table {
        if cfg.engine.engine != Engine::Vem {
            return Err(Error::InvalidInput("size selection scores the variational bound (engine vem)".into()));
        }
        let y = table_io::read_table(path, a.kind.map(Into::into))?.table;
        let vcfg = crate::vem::VemConfig { seed: cfg.seed, ..cfg.engine.vem.clone() };
        let scan = experiment::select_k(&y, &cfg.sim.hyperparams()?, &cfg.select_k.k1, &cfg.select_k.k2, &vcfg)?;
        for c in &scan.candidates {
            println!("  k1={} k2={}  ELBO {:.4}  BIC {:.4}", c.k1, c.k2, c.elbo, c.bic);
        }
        println!("selected k1={} k2={}", scan.best().k1, scan.best().k2);
        let report = ScanReport {
            schema_version: SCHEMA_VERSION,
            command: "select-k",
            table: path.display().to_string(),
            seed: cfg.seed,
            vem: vcfg,
            scan,
        };
        return write_json(&dir.join("report.json"), &report);
    }
    let study = experiment::select_k_study(&cfg)?;
    write_study(&dir, &study)?;
    print_study(&study, &["selected"]);
    Ok(())
}

fn cmd_bench(args: &StudyArgs, workers: usize) -> Result<()> {
    let mut defaults = StudyConfig::default().with_preset(Preset::Large);
    defaults.replicates = 1;
    let cfg = resolve_config(args, workers, defaults)?;
    let study = experiment::bench_study(&cfg)?;
    write_study(&out_dir(args, "bench"), &study)?;
    print_study(&study, &["vem_seconds", "gibbs_seconds", "gibbs_over_vem"]);
    Ok(())
}

#[derive(Debug, Serialize)]
struct IngestReport {
    schema_version: u32,
    command: &'static str,
    rows: usize,
    cols: usize,
    time_points: usize,
    fisher_se: f64,
    excluded_rows: Vec<String>,
    excluded_cols: Vec<String>,
    clipped_cells: Vec<(String, String)>,
    classes: Option<Vec<String>>,
    unlabeled_cols: Vec<String>,
}

/// Reads `id,class` lines; a first line `id,class` is a header.
pub fn parse_class_labels(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let delim = ingest::detect_delimiter(line);
        let (id, class) = line.split_once(delim).ok_or_else(|| Error::Parse {
            line: i + 1,
            column: 0,
            msg: "expected id and class".into(),
        })?;
        if out.is_empty() && id.trim() == "id" {
            continue;
        }
        out.push((id.trim().to_string(), class.trim().to_string()));
    }
    Ok(out)
}

fn cmd_ingest(a: &IngestArgs) -> Result<()> {
    let open = |p: &Path| -> Result<BufReader<std::fs::File>> { Ok(BufReader::new(std::fs::File::open(p).map_err(|e| Error::io(p, e))?)) };
    let genes = ingest::load_timecourses(open(&a.genes)?)?;
    let mets = ingest::load_timecourses(open(&a.metabolites)?)?;
    let ct = ingest::correlation(&genes, &mets)?;
    let dir = a.out.clone().unwrap_or_else(|| PathBuf::from("mmblock-out").join("ingest"));
    table_io::write_text(&dir.join("rho.csv"), &table_io::format_labeled_matrix(&ct.rho, &ct.row_ids, &ct.col_ids)?)?;
    let z = crate::InteractionTable::new(ct.z.rows(), ct.z.cols(), ct.z.as_slice().to_vec(), LikelihoodKind::Gaussian)?;
    table_io::write_table(
        &dir.join("table.csv"),
        &LabeledTable { table: z, row_ids: Some(ct.row_ids.clone()), col_ids: Some(ct.col_ids.clone()) },
    )?;

    let mut classes = None;
    let mut unlabeled = Vec::new();
    if let Some(path) = &a.classes {
        let labels = parse_class_labels(&table_io::read_text(path)?)?;
        let mut names: Vec<String> = labels.iter().map(|(_, c)| c.clone()).collect();
        names.sort();
        names.dedup();
        let by_id: BTreeMap<&str, usize> = labels
            .iter()
            .map(|(id, c)| (id.as_str(), names.binary_search(c).expect("class collected above")))
            .collect();
        let mut prior = Matrix::filled(ct.col_ids.len(), names.len(), 1.0);
        for (k, id) in ct.col_ids.iter().enumerate() {
            match by_id.get(id.as_str()) {
                Some(&c) => {
                    let row = ingest::build_class_prior(&[c], names.len(), a.prior_strength)?;
                    prior.row_mut(k).copy_from_slice(row.raw.row(0));
                }
                None => unlabeled.push(id.clone()),
            }
        }
        table_io::write_text(&dir.join("class_prior.csv"), &table_io::format_labeled_matrix(&prior, &ct.col_ids, &names)?)?;
        classes = Some(names);
    }
    let report = IngestReport {
        schema_version: SCHEMA_VERSION,
        command: "ingest",
        rows: ct.row_ids.len(),
        cols: ct.col_ids.len(),
        time_points: ct.t,
        fisher_se: ct.fisher_se(),
        excluded_rows: genes.excluded.clone(),
        excluded_cols: mets.excluded.clone(),
        clipped_cells: ct.clipped.iter().map(|&(j, k)| (ct.row_ids[j].clone(), ct.col_ids[k].clone())).collect(),
        classes,
        unlabeled_cols: unlabeled,
    };
    write_json(&dir.join("report.json"), &report)?;
    println!(
        "{}x{} correlation table from {} time points ({} rows and {} columns excluded), wrote {}",
        report.rows,
        report.cols,
        report.time_points,
        report.excluded_rows.len(),
        report.excluded_cols.len(),
        dir.display()
    );
    Ok(())
}

pub fn run(cli: Cli) -> Result<()> {
    let w = cli.workers;
    match &cli.command {
        Command::Simulate(a) => cmd_simulate(a, w),
        Command::Fit(a) => cmd_fit(a, w),
        Command::Evaluate(a) => cmd_evaluate(a, w),
        Command::CensorStudy(a) => cmd_censor(a, w),
        Command::Holdout(a) => cmd_holdout(a, w),
        Command::SelectK(a) => cmd_select_k(a, w),
        Command::Ingest(a) => cmd_ingest(a),
        Command::Bench(a) => cmd_bench(a, w),
    }
}

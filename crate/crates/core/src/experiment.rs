//! Experiment runners behind the `mmblock` subcommands.
//!
//! Every runner is a pure function of its config: replicate `r` simulates
//! with seed `seed + r` and fits with the same seed, so reports are
//! reproducible regardless of the worker count. Wall-clock times are kept
//! apart from the deterministic metrics in [`TimingReport`].

use std::collections::BTreeMap;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::eval::{self, MeanSd};
use crate::gibbs::{self, GibbsConfig, GibbsFit};
use crate::model::{expected_value, Blockmodel, Hyperparams, InteractionTable, LikelihoodKind, MembershipMatrix};
use crate::simgen::{self, CensorRule, Preset, SimConfig, SimTruth};
use crate::vem::{self, VemConfig, VemFit};
use crate::{Error, Matrix, Result};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Engine {
    #[default]
    Vem,
    Gibbs,
}

impl Engine {
    pub fn name(self) -> &'static str {
        match self {
            Engine::Vem => "vem",
            Engine::Gibbs => "gibbs",
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EngineSettings {
    pub engine: Engine,
    pub vem: VemConfig,
    pub gibbs: GibbsConfig,
}

/// Output of either engine.
#[derive(Clone, Debug)]
pub enum EngineFit {
    Vem(VemFit),
    Gibbs(GibbsFit),
}

impl EngineFit {
    pub fn row_memberships(&self) -> &MembershipMatrix {
        match self {
            EngineFit::Vem(f) => &f.estimated_pi,
            EngineFit::Gibbs(f) => &f.mean_pi,
        }
    }

    pub fn col_memberships(&self) -> &MembershipMatrix {
        match self {
            EngineFit::Vem(f) => &f.estimated_p,
            EngineFit::Gibbs(f) => &f.mean_p,
        }
    }

    pub fn blockmodel(&self) -> &Blockmodel {
        match self {
            EngineFit::Vem(f) => f.b(),
            EngineFit::Gibbs(f) => &f.mean_b,
        }
    }

    pub fn elbo(&self) -> Option<f64> {
        match self {
            EngineFit::Vem(f) => Some(f.elbo),
            EngineFit::Gibbs(_) => None,
        }
    }

    /// Predicted cell means; the sampler uses `pi_bar' B_bar p_bar`.
    pub fn predict(&self, cells: &[(usize, usize)]) -> Result<Vec<f64>> {
        match self {
            EngineFit::Vem(f) => vem::predict(f, cells),
            EngineFit::Gibbs(f) => cells
                .iter()
                .map(|&(j, k)| {
                    if j >= f.mean_pi.n() || k >= f.mean_p.n() {
                        return Err(Error::Dimension(format!("cell ({j},{k}) outside the table")));
                    }
                    expected_value(f.mean_pi.row(j), &f.mean_b, f.mean_p.row(k))
                })
                .collect(),
        }
    }
}

/// Fits `y` with the chosen engine, seeding it with `seed`.
pub fn fit_engine(y: &InteractionTable, hyper: &Hyperparams, k1: usize, k2: usize, settings: &EngineSettings, seed: u64) -> Result<EngineFit> {
    match settings.engine {
        Engine::Vem => {
            let cfg = VemConfig { seed, ..settings.vem.clone() };
            vem::fit(y, hyper, k1, k2, &cfg).map(EngineFit::Vem)
        }
        Engine::Gibbs => {
            let cfg = GibbsConfig { seed, ..settings.gibbs.clone() };
            gibbs::fit(y, hyper, k1, k2, &cfg).map(EngineFit::Gibbs)
        }
    }
}

fn timed<T>(f: impl FnOnce() -> Result<T>) -> Result<(T, f64)> {
    let start = Instant::now();
    let out = f()?;
    Ok((out, start.elapsed().as_secs_f64()))
}

/// Serialized fit: memberships, blockmodel and engine diagnostics.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitRecord {
    pub schema_version: u32,
    pub engine: Engine,
    pub kind: LikelihoodKind,
    pub seed: u64,
    pub k1: usize,
    pub k2: usize,
    pub row_memberships: MembershipMatrix,
    pub col_memberships: MembershipMatrix,
    pub blockmodel: Blockmodel,
    pub elbo: Option<f64>,
    pub elbo_trace: Vec<f64>,
    pub converged: Option<bool>,
    pub restart_index: Option<usize>,
    pub restart_elbos: Vec<Option<f64>>,
    pub max_elbo_decrease: Option<f64>,
    pub draws_per_chain: Option<usize>,
    pub chains: Option<usize>,
    pub psrf: Option<Matrix>,
    pub convergence_warning: Option<bool>,
    pub settings: EngineSettings,
}

impl FitRecord {
    pub fn new(fit: &EngineFit, settings: &EngineSettings, seed: u64) -> Self {
        let b = fit.blockmodel().clone();
        let mut r = FitRecord {
            schema_version: SCHEMA_VERSION,
            engine: settings.engine,
            kind: LikelihoodKind::Gaussian,
            seed,
            k1: b.k1(),
            k2: b.k2(),
            row_memberships: fit.row_memberships().clone(),
            col_memberships: fit.col_memberships().clone(),
            blockmodel: b,
            elbo: fit.elbo(),
            elbo_trace: vec![],
            converged: None,
            restart_index: None,
            restart_elbos: vec![],
            max_elbo_decrease: None,
            draws_per_chain: None,
            chains: None,
            psrf: None,
            convergence_warning: None,
            settings: settings.clone(),
        };
        match fit {
            EngineFit::Vem(f) => {
                r.kind = f.kind;
                r.elbo_trace = f.elbo_trace.clone();
                r.converged = Some(f.converged);
                r.restart_index = Some(f.restart_index);
                r.restart_elbos = f.restart_elbos.clone();
                r.max_elbo_decrease = Some(f.max_elbo_decrease);
            }
            EngineFit::Gibbs(f) => {
                r.kind = f.kind;
                r.draws_per_chain = Some(f.draws_per_chain);
                r.chains = Some(f.chains.len());
                r.psrf = Some(f.psrf.clone());
                r.convergence_warning = Some(f.convergence_warning);
            }
        }
        r
    }
}

/// Accuracy and blockmodel error of a fit against simulation truth.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub accuracy: eval::AccuracyReport,
    pub blockmodel_error: eval::BlockmodelError,
    pub alignment: eval::AlignmentResult,
}

pub fn evaluate(pi: &MembershipMatrix, p: &MembershipMatrix, b: &Blockmodel, truth: &SimTruth) -> Result<Evaluation> {
    let (accuracy, alignment) = eval::accuracy_report(pi, &truth.pi, p, &truth.p)?;
    let blockmodel_error = eval::blockmodel_errors(&truth.b, b, &alignment)?;
    Ok(Evaluation { accuracy, blockmodel_error, alignment })
}

impl Evaluation {
    pub fn insert_into(&self, m: &mut Metrics) {
        m.insert("row_accuracy".into(), self.accuracy.first_row);
        m.insert("col_accuracy".into(), self.accuracy.first_col);
        if let Some(v) = self.accuracy.second_row {
            m.insert("row_accuracy_rank2".into(), v);
        }
        if let Some(v) = self.accuracy.second_col {
            m.insert("col_accuracy_rank2".into(), v);
        }
        m.insert("eps_b_mae".into(), self.blockmodel_error.mae);
        m.insert("eps_b_induced_one_norm".into(), self.blockmodel_error.induced_one_norm);
    }
}

pub type Metrics = BTreeMap<String, f64>;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReplicateRecord {
    pub index: usize,
    pub seed: u64,
    pub metrics: Metrics,
}

/// Mean and sample standard deviation of one metric across replicates,
/// with the `mean (sd)` rendering.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub mean: f64,
    pub sd: f64,
    pub n: usize,
    pub formatted: String,
}

impl From<MeanSd> for Aggregate {
    fn from(m: MeanSd) -> Self {
        Aggregate { mean: m.mean, sd: m.sd, n: m.n, formatted: m.to_string() }
    }
}

/// Aggregates every metric over the replicates that report it.
pub fn aggregate(replicates: &[ReplicateRecord]) -> BTreeMap<String, Aggregate> {
    let mut values: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    for r in replicates {
        for (k, v) in &r.metrics {
            values.entry(k).or_default().push(*v);
        }
    }
    values
        .into_iter()
        .filter_map(|(k, v)| MeanSd::of(&v).map(|m| (k.to_string(), m.into())))
        .collect()
}

/// Deterministic outcome of a replicated run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StudyReport {
    pub schema_version: u32,
    pub command: String,
    pub config: StudyConfig,
    pub replicates: Vec<ReplicateRecord>,
    pub aggregate: BTreeMap<String, Aggregate>,
    /// Quantities derived from the aggregates, such as ratios of means.
    pub summary: BTreeMap<String, f64>,
}

/// Engine-only wall-clock seconds per replicate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimingReport {
    pub schema_version: u32,
    pub command: String,
    pub replicates: Vec<Metrics>,
    pub total_engine_seconds: f64,
}

#[derive(Clone, Debug)]
pub struct Study {
    pub report: StudyReport,
    pub timing: TimingReport,
}

impl Study {
    /// Per-replicate metrics as CSV: one row per replicate, one column per
    /// metric name seen in any replicate, blank where absent.
    pub fn metrics_csv(&self) -> String {
        let mut names: Vec<&String> = self.report.replicates.iter().flat_map(|r| r.metrics.keys()).collect();
        names.sort();
        names.dedup();
        let mut out = String::from("replicate,seed");
        for n in &names {
            out.push(',');
            out.push_str(n);
        }
        out.push('\n');
        for r in &self.report.replicates {
            out.push_str(&format!("{},{}", r.index, r.seed));
            for n in &names {
                out.push(',');
                if let Some(v) = r.metrics.get(*n) {
                    out.push_str(&format!("{v}"));
                }
            }
            out.push('\n');
        }
        out
    }

    pub fn mean(&self, metric: &str) -> Option<f64> {
        self.report.aggregate.get(metric).map(|a| a.mean)
    }

    /// Largest ELBO drop recorded by any replicate, zero if none reported.
    pub fn max_elbo_decrease(&self) -> f64 {
        self.report
            .replicates
            .iter()
            .flat_map(|r| r.metrics.iter().filter(|(k, _)| k.starts_with("max_elbo_decrease")).map(|(_, v)| *v))
            .fold(0.0, f64::max)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CensorSettings {
    pub rules: Vec<CensorRule>,
    /// `|rho|` cut that defines positive cells for the raw arm's recall and
    /// precision.
    pub positive_threshold: f64,
}

impl Default for CensorSettings {
    fn default() -> Self {
        CensorSettings {
            rules: vec![CensorRule::Median, CensorRule::Mean, CensorRule::Fixed(0.5)],
            positive_threshold: 0.5,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SelectKSettings {
    pub k1: Vec<usize>,
    pub k2: Vec<usize>,
}

impl Default for SelectKSettings {
    fn default() -> Self {
        SelectKSettings { k1: vec![1, 2, 3, 4], k2: vec![3] }
    }
}

/// Config of a replicated experiment; every field has a default.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct StudyConfig {
    pub sim: SimConfig,
    /// Groups used for fitting; defaults to the simulated sizes.
    pub fit_k1: Option<usize>,
    pub fit_k2: Option<usize>,
    pub replicates: usize,
    pub seed: u64,
    /// Worker threads for replicates. Never changes the results, so it is
    /// left out of reports.
    #[serde(skip_serializing)]
    pub workers: usize,
    pub engine: EngineSettings,
    pub censor: CensorSettings,
    pub select_k: SelectKSettings,
}

impl Default for StudyConfig {
    fn default() -> Self {
        StudyConfig {
            sim: SimConfig::default(),
            fit_k1: None,
            fit_k2: None,
            replicates: 10,
            seed: 0,
            workers: 1,
            engine: EngineSettings::default(),
            censor: CensorSettings::default(),
            select_k: SelectKSettings::default(),
        }
    }
}

impl StudyConfig {
    pub fn with_preset(mut self, p: Preset) -> Self {
        let (n1, n2, k1, k2) = p.sizes();
        self.sim.n1 = n1;
        self.sim.n2 = n2;
        self.sim.k1 = k1;
        self.sim.k2 = k2;
        self
    }

    pub fn fit_sizes(&self) -> (usize, usize) {
        (self.fit_k1.unwrap_or(self.sim.k1), self.fit_k2.unwrap_or(self.sim.k2))
    }

    pub fn validate(&self) -> Result<()> {
        self.sim.validate()?;
        if self.replicates == 0 {
            return Err(Error::InvalidInput("need at least one replicate".into()));
        }
        let (k1, k2) = self.fit_sizes();
        if k1 == 0 || k2 == 0 {
            return Err(Error::InvalidInput("fit sizes must be positive".into()));
        }
        self.engine.vem.validate()?;
        self.engine.gibbs.validate()
    }

    fn replicate_sim(&self, r: usize) -> SimConfig {
        self.sim.clone().with_seed(self.seed + r as u64)
    }
}

/// Runs `f` for every replicate on a pool of `workers` threads and keeps
/// replicate order.
fn run_replicates<F>(cfg: &StudyConfig, command: &str, f: F) -> Result<Study>
where
    F: Fn(&SimTruth, u64) -> Result<(Metrics, Metrics)> + Sync,
{
    cfg.validate()?;
    let one = |r: usize| -> Result<(ReplicateRecord, Metrics)> {
        let sim = cfg.replicate_sim(r);
        let truth = simgen::generate(&sim)?;
        let (metrics, timing) = f(&truth, sim.seed).map_err(|e| Error::Engine(format!("replicate {r} (seed {}): {e}", sim.seed)))?;
        Ok((ReplicateRecord { index: r, seed: sim.seed, metrics }, timing))
    };
    let results: Vec<(ReplicateRecord, Metrics)> = if cfg.workers > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.workers)
            .build()
            .map_err(|e| Error::InvalidInput(e.to_string()))?;
        pool.install(|| (0..cfg.replicates).into_par_iter().map(one).collect::<Result<_>>())?
    } else {
        (0..cfg.replicates).map(one).collect::<Result<_>>()?
    };
    let (replicates, timings): (Vec<_>, Vec<_>) = results.into_iter().unzip();
    let total = timings.iter().flat_map(|t| t.values()).sum();
    Ok(Study {
        report: StudyReport {
            schema_version: SCHEMA_VERSION,
            command: command.into(),
            config: cfg.clone(),
            aggregate: aggregate(&replicates),
            replicates,
            summary: BTreeMap::new(),
        },
        timing: TimingReport {
            schema_version: SCHEMA_VERSION,
            command: command.into(),
            replicates: timings,
            total_engine_seconds: total,
        },
    })
}

fn engine_metrics(fit: &EngineFit, m: &mut Metrics) {
    match fit {
        EngineFit::Vem(f) => {
            m.insert("elbo".into(), f.elbo);
            m.insert("max_elbo_decrease".into(), f.max_elbo_decrease);
            m.insert("converged".into(), f64::from(u8::from(f.converged)));
            m.insert("outer_iters".into(), f.outer_iters as f64);
        }
        EngineFit::Gibbs(f) => {
            m.insert("psrf_warning".into(), f64::from(u8::from(f.convergence_warning)));
            m.insert("psrf_max".into(), f.psrf.as_slice().iter().copied().fold(f64::NEG_INFINITY, f64::max));
        }
    }
}

fn seconds(pairs: &[(&str, f64)]) -> Metrics {
    pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

/// Simulate, fit and score against the truth, once per replicate.
pub fn recovery_study(cfg: &StudyConfig) -> Result<Study> {
    let (k1, k2) = cfg.fit_sizes();
    let hyper = cfg.sim.hyperparams()?;
    run_replicates(cfg, "evaluate", |truth, seed| {
        let (fit, secs) = timed(|| fit_engine(&truth.table, &hyper, k1, k2, &cfg.engine, seed))?;
        let mut m = Metrics::new();
        if (k1, k2) == (cfg.sim.k1, cfg.sim.k2) {
            evaluate(fit.row_memberships(), fit.col_memberships(), fit.blockmodel(), truth)?.insert_into(&mut m);
        }
        engine_metrics(&fit, &mut m);
        Ok((m, seconds(&[("engine_seconds", secs)])))
    })
}

/// Masks 2/9 of the cells, fits the rest, and scores memberships and
/// held-out cell predictions. The mask uses the replicate seed.
pub fn holdout_study(cfg: &StudyConfig) -> Result<Study> {
    let (k1, k2) = cfg.fit_sizes();
    let hyper = cfg.sim.hyperparams()?;
    let mut study = run_replicates(cfg, "holdout", |truth, seed| {
        let h = simgen::mask_holdout(&truth.table, seed)?;
        let (fit, secs) = timed(|| fit_engine(&h.table, &hyper, k1, k2, &cfg.engine, seed))?;
        let cells: Vec<(usize, usize)> = h.heldout.iter().map(|c| (c.row, c.col)).collect();
        let pred = fit.predict(&cells)?;
        let mae = h.heldout.iter().zip(&pred).map(|(c, p)| (c.value - p).abs()).sum::<f64>() / cells.len().max(1) as f64;
        let mut m = Metrics::new();
        if (k1, k2) == (cfg.sim.k1, cfg.sim.k2) {
            let ev = evaluate(fit.row_memberships(), fit.col_memberships(), fit.blockmodel(), truth)?;
            let baseline = 1.0 / k1 as f64;
            m.insert("row_accuracy_over_baseline".into(), ev.accuracy.first_row / baseline);
            ev.insert_into(&mut m);
        }
        m.insert("heldout_mae".into(), mae);
        m.insert("heldout_cells".into(), cells.len() as f64);
        m.insert("missing_fraction".into(), h.missing_fraction());
        engine_metrics(&fit, &mut m);
        Ok((m, seconds(&[("engine_seconds", secs)])))
    })?;
    let (k1, _) = cfg.fit_sizes();
    study.report.summary.insert("row_baseline".into(), 1.0 / k1 as f64);
    Ok(study)
}

/// Metric-name fragment of a censoring rule.
pub fn rule_key(rule: &CensorRule) -> String {
    match rule {
        CensorRule::Median => "median".into(),
        CensorRule::Mean => "mean".into(),
        CensorRule::Fixed(v) => format!("fixed_{v}"),
    }
}

fn argmax(v: &[f64]) -> usize {
    eval::top_two(v).0
}

/// Bicluster label of every cell from the fitted indicator distributions.
fn fitted_blocks(f: &VemFit) -> Vec<usize> {
    let s = &f.state;
    let mut out = Vec::with_capacity(s.n1() * s.n2());
    for j in 0..s.n1() {
        for k in 0..s.n2() {
            out.push(argmax(s.phi(j, k)) * s.k2() + argmax(s.eta(j, k)));
        }
    }
    out
}

/// Bicluster label of every cell from the dominant true memberships.
fn true_blocks(t: &SimTruth) -> Vec<usize> {
    let k2 = t.b.k2();
    let mut out = Vec::with_capacity(t.pi.n() * t.p.n());
    for j in 0..t.pi.n() {
        for k in 0..t.p.n() {
            out.push(argmax(t.pi.row(j)) * k2 + argmax(t.p.row(k)));
        }
    }
    out
}

fn all_cells(n1: usize, n2: usize) -> Vec<(usize, usize)> {
    (0..n1).flat_map(|j| (0..n2).map(move |k| (j, k))).collect()
}

/// Normal fit on the raw table against Bernoulli fits on its censored
/// versions. Errors are mean absolute differences on the correlation scale:
/// `tanh` of the fitted means against `rho = tanh(Y)` for the raw arm, and
/// fitted probabilities against `|rho|` for each censored arm.
pub fn censor_study(cfg: &StudyConfig) -> Result<Study> {
    if cfg.engine.engine != Engine::Vem {
        return Err(Error::InvalidInput("the censoring study needs per-cell indicator fits (engine vem)".into()));
    }
    if cfg.censor.rules.is_empty() {
        return Err(Error::InvalidInput("no censoring rules".into()));
    }
    let (k1, k2) = cfg.fit_sizes();
    let hyper = cfg.sim.hyperparams()?;
    let mut study = run_replicates(cfg, "censor-study", |truth, seed| {
        let y = &truth.table;
        let (n1, n2) = (y.n1(), y.n2());
        let cells = all_cells(n1, n2);
        let rho = Matrix::from_vec(n1, n2, y.values().iter().map(|v| v.tanh()).collect())?;
        let abs_rho = Matrix::from_vec(n1, n2, rho.as_slice().iter().map(|v| v.abs()).collect())?;
        let blocks = true_blocks(truth);
        let vcfg = VemConfig { seed, ..cfg.engine.vem.clone() };
        let mut m = Metrics::new();
        let mut t = Metrics::new();

        let (raw, secs) = timed(|| vem::fit(y, &hyper, k1, k2, &vcfg))?;
        t.insert("engine_seconds_raw".into(), secs);
        let fitted = Matrix::from_vec(n1, n2, vem::predict(&raw, &cells)?.iter().map(|v| v.tanh()).collect())?;
        let eps_raw = eval::censoring_error(&rho, &fitted)?;
        let positives: Vec<bool> = abs_rho.as_slice().iter().map(|&r| r >= cfg.censor.positive_threshold).collect();
        let (recall, precision) = eval::block_recall_precision(&fitted_blocks(&raw), &blocks, &positives)?;
        m.insert("eps_raw".into(), eps_raw);
        m.insert("recall_raw".into(), recall);
        m.insert("precision_raw".into(), precision);
        m.insert("max_elbo_decrease_raw".into(), raw.max_elbo_decrease);

        for rule in &cfg.censor.rules {
            let key = rule_key(rule);
            let (s, tau) = simgen::censor(y, *rule)?;
            let (f, secs) = timed(|| vem::fit(&s, &hyper, k1, k2, &vcfg))?;
            t.insert(format!("engine_seconds_{key}"), secs);
            let fitted = Matrix::from_vec(n1, n2, vem::predict(&f, &cells)?)?;
            let eps = eval::censoring_error(&abs_rho, &fitted)?;
            let positives: Vec<bool> = s.values().iter().map(|&v| v == 1.0).collect();
            let (recall, precision) = eval::block_recall_precision(&fitted_blocks(&f), &blocks, &positives)?;
            let positive_fraction = positives.iter().filter(|&&p| p).count() as f64 / positives.len() as f64;
            m.insert(format!("eps_{key}"), eps);
            m.insert(format!("ratio_{key}"), eps / eps_raw);
            m.insert(format!("tau_{key}"), tau);
            m.insert(format!("positive_fraction_{key}"), positive_fraction);
            m.insert(format!("recall_{key}"), recall);
            m.insert(format!("precision_{key}"), precision);
            m.insert(format!("max_elbo_decrease_{key}"), f.max_elbo_decrease);
        }
        Ok((m, t))
    })?;
    let raw_mean = study.mean("eps_raw").unwrap_or(f64::NAN);
    for rule in &cfg.censor.rules {
        let key = rule_key(rule);
        if let Some(e) = study.mean(&format!("eps_{key}")) {
            study.report.summary.insert(format!("ratio_of_means_{key}"), e / raw_mean);
        }
    }
    Ok(study)
}

/// One candidate of a model-size scan.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KCandidate {
    pub k1: usize,
    pub k2: usize,
    pub elbo: f64,
    pub bic: f64,
    pub max_elbo_decrease: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KScan {
    pub candidates: Vec<KCandidate>,
    /// Index into `candidates` of the smallest BIC (first on ties).
    pub best: usize,
}

impl KScan {
    pub fn best(&self) -> &KCandidate {
        &self.candidates[self.best]
    }
}

/// Fits every `(k1, k2)` with variational EM and scores it by
/// `BIC = -2 ELBO + k1 k2 ln(N1 N2)`.
pub fn select_k(y: &InteractionTable, hyper: &Hyperparams, k1s: &[usize], k2s: &[usize], cfg: &VemConfig) -> Result<KScan> {
    if k1s.is_empty() || k2s.is_empty() {
        return Err(Error::InvalidInput("empty size range".into()));
    }
    let mut candidates = Vec::with_capacity(k1s.len() * k2s.len());
    for &k1 in k1s {
        for &k2 in k2s {
            let f = vem::fit(y, hyper, k1, k2, cfg)?;
            candidates.push(KCandidate {
                k1,
                k2,
                elbo: f.elbo,
                bic: eval::bic(f.elbo, k1, k2, y.n1(), y.n2()),
                max_elbo_decrease: f.max_elbo_decrease,
            });
        }
    }
    let best = (0..candidates.len()).fold(0, |b, i| if candidates[i].bic < candidates[b].bic { i } else { b });
    Ok(KScan { candidates, best })
}

/// Size scan on simulated replicates; reports the selected sizes and every
/// candidate's BIC.
pub fn select_k_study(cfg: &StudyConfig) -> Result<Study> {
    if cfg.engine.engine != Engine::Vem {
        return Err(Error::InvalidInput("size selection scores the variational bound (engine vem)".into()));
    }
    let hyper = cfg.sim.hyperparams()?;
    let mut study = run_replicates(cfg, "select-k", |truth, seed| {
        let vcfg = VemConfig { seed, ..cfg.engine.vem.clone() };
        let (scan, secs) = timed(|| select_k(&truth.table, &hyper, &cfg.select_k.k1, &cfg.select_k.k2, &vcfg))?;
        let mut m = Metrics::new();
        for c in &scan.candidates {
            m.insert(format!("bic_k{}_{}", c.k1, c.k2), c.bic);
        }
        m.insert("selected_k1".into(), scan.best().k1 as f64);
        m.insert("selected_k2".into(), scan.best().k2 as f64);
        m.insert("selected_true_k1".into(), f64::from(u8::from(scan.best().k1 == cfg.sim.k1)));
        let drop = scan.candidates.iter().map(|c| c.max_elbo_decrease).fold(0.0, f64::max);
        m.insert("max_elbo_decrease".into(), drop);
        Ok((m, seconds(&[("engine_seconds", secs)])))
    })?;
    let hits = study.report.replicates.iter().filter(|r| r.metrics["selected_true_k1"] == 1.0).count();
    study.report.summary.insert("true_k1_selected_count".into(), hits as f64);
    Ok(study)
}

/// Single-threaded wall-clock of both engines on the same tables. Unlike
/// the other runners its metrics are timings and vary between runs.
pub fn bench_study(cfg: &StudyConfig) -> Result<Study> {
    let (k1, k2) = cfg.fit_sizes();
    let hyper = cfg.sim.hyperparams()?;
    let serial = StudyConfig { workers: 1, ..cfg.clone() };
    let vcfg = VemConfig { parallel: false, ..cfg.engine.vem.clone() };
    let gcfg = GibbsConfig { parallel: false, ..cfg.engine.gibbs.clone() };
    let mut study = run_replicates(&serial, "bench", |truth, seed| {
        let (v, vs) = timed(|| vem::fit(&truth.table, &hyper, k1, k2, &VemConfig { seed, ..vcfg.clone() }))?;
        let (_, gs) = timed(|| gibbs::fit(&truth.table, &hyper, k1, k2, &GibbsConfig { seed, ..gcfg.clone() }))?;
        let mut m = Metrics::new();
        m.insert("vem_seconds".into(), vs);
        m.insert("gibbs_seconds".into(), gs);
        m.insert("gibbs_over_vem".into(), gs / vs);
        m.insert("max_elbo_decrease".into(), v.max_elbo_decrease);
        Ok((m, seconds(&[("vem_seconds", vs), ("gibbs_seconds", gs)])))
    })?;
    if let (Some(g), Some(v)) = (study.mean("gibbs_seconds"), study.mean("vem_seconds")) {
        study.report.summary.insert("ratio_of_mean_seconds".into(), g / v);
    }
    Ok(study)
}

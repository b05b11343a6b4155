//! Variational EM for the two-way mixed-membership blockmodel.
//!
//! The posterior over memberships and per-cell indicators is approximated by
//! a fully factorized `q`: `Dirichlet(nu_j)` for each row membership,
//! `Dirichlet(xi_k)` for each column membership, and categorical
//! `phi_{j->k}`, `eta_{j<-k}` for the row and column indicators of every
//! observed cell. [`fit`] alternates closed-form coordinate updates of these
//! free parameters (E step) with a closed-form update of the blockmodel
//! (M step). Every update maximizes [`elbo`] in its own block of
//! coordinates, so the bound never decreases.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::model::{bilinear, cell_log_likelihood, expected_value};
use crate::special::{digamma_unchecked, ln_gamma, softmax_in_place};
use crate::{
    rng, Blockmodel, Error, Hyperparams, InteractionTable, LikelihoodKind, Matrix, MembershipMatrix, Priors,
    Result,
};

pub use crate::special::digamma;

/// Binary blockmodel entries are kept inside `[PROB_CLAMP, 1 - PROB_CLAMP]`.
pub const PROB_CLAMP: f64 = 1e-9;

/// Blocks whose total responsibility falls below this keep their value.
pub const EMPTY_BLOCK_WEIGHT: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VariationalState {
    n1: usize,
    n2: usize,
    k1: usize,
    k2: usize,
    /// Row indicator distributions, `K1` per cell, row-major over cells.
    /// Entries of masked cells are unused.
    pub phi: Vec<f64>,
    /// Column indicator distributions, `K2` per cell.
    pub eta: Vec<f64>,
    pub nu: Matrix,
    pub xi: Matrix,
    pub b: Blockmodel,
    mask: Vec<bool>,
}

impl VariationalState {
    /// Uniform indicator distributions with `nu`, `xi` set from them by the
    /// Dirichlet updates and the given blockmodel.
    pub fn uniform(y: &InteractionTable, priors: &Priors, b: Blockmodel) -> Result<Self> {
        let (n1, n2, k1, k2) = (y.n1(), y.n2(), b.k1(), b.k2());
        priors.check(n1, n2)?;
        if priors.k1() != k1 || priors.k2() != k2 {
            return Err(Error::Dimension("priors and blockmodel disagree on group counts".into()));
        }
        let mut s = VariationalState {
            n1,
            n2,
            k1,
            k2,
            phi: vec![1.0 / k1 as f64; n1 * n2 * k1],
            eta: vec![1.0 / k2 as f64; n1 * n2 * k2],
            nu: Matrix::zeros(n1, k1),
            xi: Matrix::zeros(n2, k2),
            b,
            mask: y.mask().to_vec(),
        };
        update_nu(&mut s, &priors.rows);
        update_xi(&mut s, &priors.cols);
        Ok(s)
    }

    pub fn k1(&self) -> usize {
        self.k1
    }

    pub fn k2(&self) -> usize {
        self.k2
    }

    pub fn n1(&self) -> usize {
        self.n1
    }

    pub fn n2(&self) -> usize {
        self.n2
    }

    #[inline]
    pub fn phi(&self, j: usize, k: usize) -> &[f64] {
        let c = j * self.n2 + k;
        &self.phi[c * self.k1..(c + 1) * self.k1]
    }

    #[inline]
    pub fn eta(&self, j: usize, k: usize) -> &[f64] {
        let c = j * self.n2 + k;
        &self.eta[c * self.k2..(c + 1) * self.k2]
    }

    pub fn set_phi(&mut self, j: usize, k: usize, v: &[f64]) {
        let c = j * self.n2 + k;
        self.phi[c * self.k1..(c + 1) * self.k1].copy_from_slice(v);
    }

    pub fn set_eta(&mut self, j: usize, k: usize, v: &[f64]) {
        let c = j * self.n2 + k;
        self.eta[c * self.k2..(c + 1) * self.k2].copy_from_slice(v);
    }

    #[inline]
    pub fn is_observed(&self, j: usize, k: usize) -> bool {
        self.mask[j * self.n2 + k]
    }

    /// Row-normalized `nu`.
    pub fn row_memberships(&self) -> MembershipMatrix {
        MembershipMatrix::from_unnormalized(&self.nu).expect("nu is positive")
    }

    /// Row-normalized `xi`.
    pub fn col_memberships(&self) -> MembershipMatrix {
        MembershipMatrix::from_unnormalized(&self.xi).expect("xi is positive")
    }

    fn check_table(&self, y: &InteractionTable) {
        debug_assert_eq!((y.n1(), y.n2()), (self.n1, self.n2));
    }
}

/// `psi(nu_jg) - psi(sum_g nu_jg)` for every row of a Dirichlet parameter
/// matrix.
fn expected_log(m: &Matrix) -> Matrix {
    let mut out = Matrix::zeros(m.rows(), m.cols());
    for i in 0..m.rows() {
        let r = m.row(i);
        let total = digamma_unchecked(r.iter().sum());
        for (o, &v) in out.row_mut(i).iter_mut().zip(r) {
            *o = digamma_unchecked(v) - total;
        }
    }
    out
}

fn max_change(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Per-block log likelihood of a cell value, as a flat `K1 * K2` table.
fn block_loglik(kind: LikelihoodKind, b: &Blockmodel, sigma2: f64) -> impl Fn(f64, &mut [f64]) + '_ {
    let vals = b.matrix().as_slice();
    move |y: f64, out: &mut [f64]| {
        for (o, &bv) in out.iter_mut().zip(vals) {
            *o = cell_log_likelihood(kind, y, bv, sigma2);
        }
    }
}

/// Per-block log likelihood of every observed cell in row-major order,
/// `K1 * K2` values per cell. Fixed while `B` is.
fn cell_logliks(y: &InteractionTable, b: &Blockmodel, sigma2: f64) -> Vec<f64> {
    let w = b.k1() * b.k2();
    let ll_of = block_loglik(y.kind(), b, sigma2);
    let mut out = vec![0.0; y.observed_count() * w];
    for ((_, _, v), chunk) in y.observed_cells().zip(out.chunks_exact_mut(w)) {
        ll_of(v, chunk);
    }
    out
}

/// Row indicator update: for each observed cell,
/// `phi_g ∝ exp(E[ln pi_jg] + sum_h eta_h ln f(Y | B_gh))`, normalized.
/// Returns the largest change of any entry.
pub fn update_phi(state: &mut VariationalState, y: &InteractionTable, sigma2: f64) -> f64 {
    state.check_table(y);
    let ll = cell_logliks(y, &state.b, sigma2);
    update_phi_with(state, y, &ll)
}

fn update_phi_with(state: &mut VariationalState, y: &InteractionTable, lls: &[f64]) -> f64 {
    let (k1, k2) = (state.k1, state.k2);
    let elog = expected_log(&state.nu);
    let mut s = vec![0.0; k1];
    let mut change: f64 = 0.0;
    for ((j, k, _), ll) in y.observed_cells().zip(lls.chunks_exact(k1 * k2)) {
        let eta = state.eta(j, k);
        for g in 0..k1 {
            s[g] = elog[(j, g)]
                + ll[g * k2..(g + 1) * k2]
                    .iter()
                    .zip(eta)
                    .map(|(l, e)| l * e)
                    .sum::<f64>();
        }
        softmax_in_place(&mut s);
        change = change.max(max_change(&s, state.phi(j, k)));
        state.set_phi(j, k, &s);
    }
    change
}

/// Column indicator update, the mirror of [`update_phi`].
pub fn update_eta(state: &mut VariationalState, y: &InteractionTable, sigma2: f64) -> f64 {
    state.check_table(y);
    let ll = cell_logliks(y, &state.b, sigma2);
    update_eta_with(state, y, &ll)
}

fn update_eta_with(state: &mut VariationalState, y: &InteractionTable, lls: &[f64]) -> f64 {
    let (k1, k2) = (state.k1, state.k2);
    let elog = expected_log(&state.xi);
    let mut s = vec![0.0; k2];
    let mut change: f64 = 0.0;
    for ((j, k, _), ll) in y.observed_cells().zip(lls.chunks_exact(k1 * k2)) {
        let phi = state.phi(j, k);
        for (h, sh) in s.iter_mut().enumerate() {
            *sh = elog[(k, h)] + (0..k1).map(|g| phi[g] * ll[g * k2 + h]).sum::<f64>();
        }
        softmax_in_place(&mut s);
        change = change.max(max_change(&s, state.eta(j, k)));
        state.set_eta(j, k, &s);
    }
    change
}

/// `nu_jg = sum over observed k of phi_{j->k,g} + prior_jg`.
pub fn update_nu(state: &mut VariationalState, row_prior: &Matrix) -> f64 {
    let mut nu = row_prior.clone();
    for j in 0..state.n1 {
        for k in 0..state.n2 {
            if state.is_observed(j, k) {
                nu.row_mut(j).iter_mut().zip(state.phi(j, k)).for_each(|(n, p)| *n += p);
            }
        }
    }
    let change = max_change(nu.as_slice(), state.nu.as_slice());
    state.nu = nu;
    change
}

/// `xi_kh = sum over observed j of eta_{j<-k,h} + prior_kh`.
pub fn update_xi(state: &mut VariationalState, col_prior: &Matrix) -> f64 {
    let mut xi = col_prior.clone();
    for j in 0..state.n1 {
        for k in 0..state.n2 {
            if state.is_observed(j, k) {
                xi.row_mut(k).iter_mut().zip(state.eta(j, k)).for_each(|(x, e)| *x += e);
            }
        }
    }
    let change = max_change(xi.as_slice(), state.xi.as_slice());
    state.xi = xi;
    change
}

/// Blocks left unchanged because they carried no responsibility.
pub type EmptyBlocks = Vec<(usize, usize)>;

fn weighted_block_means(state: &VariationalState, y: &InteractionTable) -> (Vec<f64>, Vec<f64>) {
    let (k1, k2) = (state.k1, state.k2);
    let mut num = vec![0.0; k1 * k2];
    let mut den = vec![0.0; k1 * k2];
    for (j, k, v) in y.observed_cells() {
        let phi = state.phi(j, k);
        let eta = state.eta(j, k);
        for g in 0..k1 {
            for h in 0..k2 {
                let w = phi[g] * eta[h];
                num[g * k2 + h] += w * v;
                den[g * k2 + h] += w;
            }
        }
    }
    (num, den)
}

fn apply_block_means(state: &mut VariationalState, y: &InteractionTable, clamp: bool) -> EmptyBlocks {
    let (num, den) = weighted_block_means(state, y);
    let k2 = state.k2;
    let mut empty = Vec::new();
    let m = state.b.matrix_mut();
    for (i, (&n, &d)) in num.iter().zip(&den).enumerate() {
        if d < EMPTY_BLOCK_WEIGHT {
            empty.push((i / k2, i % k2));
            continue;
        }
        let mut v = n / d;
        if clamp {
            v = v.clamp(PROB_CLAMP, 1.0 - PROB_CLAMP);
        }
        m.as_mut_slice()[i] = v;
    }
    empty
}

/// Gaussian M step: `B(g,h)` becomes the responsibility-weighted mean of the
/// observed cells. Blocks with total weight below [`EMPTY_BLOCK_WEIGHT`]
/// keep their previous value and are returned.
pub fn update_b(state: &mut VariationalState, y: &InteractionTable) -> Result<EmptyBlocks> {
    if y.kind() != LikelihoodKind::Gaussian {
        return Err(Error::InvalidInput("update_b needs a real-valued table".into()));
    }
    Ok(apply_block_means(state, y, false))
}

/// Binary M step: the responsibility-weighted fraction of ones, clamped to
/// `[PROB_CLAMP, 1 - PROB_CLAMP]`.
pub fn update_b_bernoulli(state: &mut VariationalState, y: &InteractionTable) -> Result<EmptyBlocks> {
    if y.kind() != LikelihoodKind::Bernoulli {
        return Err(Error::InvalidInput("update_b_bernoulli needs a binary table".into()));
    }
    Ok(apply_block_means(state, y, true))
}

fn dirichlet_elbo_terms(prior: &Matrix, post: &Matrix, elog: &Matrix) -> f64 {
    let mut total = 0.0;
    for i in 0..post.rows() {
        let (a, v, e) = (prior.row(i), post.row(i), elog.row(i));
        // E_q[ln Dir(x | a)] - E_q[ln Dir(x | v)]
        total += ln_gamma(a.iter().sum()) - a.iter().map(|&x| ln_gamma(x)).sum::<f64>();
        total -= ln_gamma(v.iter().sum()) - v.iter().map(|&x| ln_gamma(x)).sum::<f64>();
        total += a
            .iter()
            .zip(v)
            .zip(e)
            .map(|((ai, vi), ei)| (ai - vi) * ei)
            .sum::<f64>();
    }
    total
}

fn entropy_term(p: &[f64]) -> f64 {
    p.iter().filter(|&&x| x > 0.0).map(|&x| x * x.ln()).sum()
}

/// Evidence lower bound `E_q[ln p(Y, X | Theta)] - E_q[ln q(X)]`.
pub fn elbo(state: &VariationalState, y: &InteractionTable, priors: &Priors, sigma2: f64) -> f64 {
    state.check_table(y);
    let ll = cell_logliks(y, &state.b, sigma2);
    elbo_with(state, y, priors, &ll)
}

fn elbo_with(state: &VariationalState, y: &InteractionTable, priors: &Priors, lls: &[f64]) -> f64 {
    let (k1, k2) = (state.k1, state.k2);
    let elog_pi = expected_log(&state.nu);
    let elog_p = expected_log(&state.xi);
    let mut total = dirichlet_elbo_terms(&priors.rows, &state.nu, &elog_pi)
        + dirichlet_elbo_terms(&priors.cols, &state.xi, &elog_p);
    for ((j, k, _), ll) in y.observed_cells().zip(lls.chunks_exact(k1 * k2)) {
        let phi = state.phi(j, k);
        let eta = state.eta(j, k);
        let mut cell = 0.0;
        for g in 0..k1 {
            if phi[g] == 0.0 {
                continue;
            }
            let inner: f64 = ll[g * k2..(g + 1) * k2]
                .iter()
                .zip(eta)
                .filter(|(_, &e)| e > 0.0)
                .map(|(l, e)| l * e)
                .sum();
            cell += phi[g] * (inner + elog_pi[(j, g)]);
        }
        cell += eta.iter().zip(elog_p.row(k)).map(|(e, l)| e * l).sum::<f64>();
        cell -= entropy_term(phi) + entropy_term(eta);
        total += cell;
    }
    total
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Init {
    /// `phi = 1/K1`, `eta = 1/K2`, `nu`, `xi` from the Dirichlet updates.
    /// Restarts differ only in the blockmodel noise.
    Uniform,
    /// A random `Dirichlet(1)` membership vector per row and per column,
    /// copied into that object's indicator distributions, then `nu`, `xi`
    /// from the Dirichlet updates.
    #[default]
    Random,
}

/// How informative per-object priors are used.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PriorMode {
    /// The pseudocount rows replace `alpha`/`beta` in every Dirichlet update
    /// and in the bound.
    #[default]
    Persistent,
    /// The row-normalized pseudocounts only seed the initial `nu`/`xi`; the
    /// updates use the symmetric hyperparameters.
    InitOnly,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct VemConfig {
    pub tol: f64,
    pub max_outer_iters: usize,
    pub max_e_iters: usize,
    pub restarts: usize,
    pub init: Init,
    /// Standard deviation of the blockmodel initialization noise, as a
    /// fraction of the sample standard deviation of the observed cells.
    pub init_noise: f64,
    /// Per-row Dirichlet pseudocounts (`N1 x K1`).
    pub prior_nu: Option<Matrix>,
    /// Per-column Dirichlet pseudocounts (`N2 x K2`).
    pub prior_xi: Option<Matrix>,
    pub prior_mode: PriorMode,
    /// Run restarts on the rayon pool. Results do not depend on it.
    pub parallel: bool,
    pub seed: u64,
}

impl Default for VemConfig {
    fn default() -> Self {
        VemConfig {
            tol: 1e-5,
            max_outer_iters: 500,
            max_e_iters: 10,
            restarts: 10,
            init: Init::Random,
            init_noise: 0.1,
            prior_nu: None,
            prior_xi: None,
            prior_mode: PriorMode::Persistent,
            parallel: false,
            seed: 0,
        }
    }
}

impl VemConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) || !(self.init_noise >= 0.0) || self.restarts == 0 || self.max_outer_iters == 0 || self.max_e_iters == 0 {
            return Err(Error::InvalidInput(
                "vem config needs tol > 0 and positive iteration/restart counts".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VemFit {
    pub state: VariationalState,
    pub kind: LikelihoodKind,
    pub elbo: f64,
    pub elbo_trace: Vec<f64>,
    pub estimated_pi: MembershipMatrix,
    pub estimated_p: MembershipMatrix,
    pub restart_index: usize,
    /// Final bound of every restart, `None` where the restart failed.
    pub restart_elbos: Vec<Option<f64>>,
    pub converged: bool,
    pub outer_iters: usize,
    /// Number of M steps in the selected restart that left a block frozen.
    pub empty_block_events: usize,
    /// Largest single-iteration drop of the bound over every restart; zero
    /// when all traces are nondecreasing.
    pub max_elbo_decrease: f64,
}

impl VemFit {
    pub fn b(&self) -> &Blockmodel {
        &self.state.b
    }
}

/// Dirichlet parameters used by the updates and the bound, and the
/// optional initial `nu`/`xi` override.
struct ResolvedPriors {
    update: Priors,
    init_rows: Option<Matrix>,
    init_cols: Option<Matrix>,
}

fn resolve_priors(y: &InteractionTable, hyper: &Hyperparams, k1: usize, k2: usize, cfg: &VemConfig) -> Result<ResolvedPriors> {
    let base = Priors::from_hyper(hyper, y.n1(), y.n2(), k1, k2)?;
    let check = |m: &Matrix, n: usize, k: usize, name: &str| -> Result<()> {
        if m.rows() != n || m.cols() != k {
            return Err(Error::Dimension(format!(
                "{name} is {}x{}, expected {n}x{k}",
                m.rows(),
                m.cols()
            )));
        }
        Ok(())
    };
    if let Some(m) = &cfg.prior_nu {
        check(m, y.n1(), k1, "prior_nu")?;
    }
    if let Some(m) = &cfg.prior_xi {
        check(m, y.n2(), k2, "prior_xi")?;
    }
    let resolved = match cfg.prior_mode {
        PriorMode::Persistent => ResolvedPriors {
            update: Priors {
                rows: cfg.prior_nu.clone().unwrap_or(base.rows),
                cols: cfg.prior_xi.clone().unwrap_or(base.cols),
            },
            init_rows: None,
            init_cols: None,
        },
        PriorMode::InitOnly => ResolvedPriors {
            update: base,
            init_rows: cfg.prior_nu.as_ref().map(Matrix::row_normalized),
            init_cols: cfg.prior_xi.as_ref().map(Matrix::row_normalized),
        },
    };
    resolved.update.check(y.n1(), y.n2())?;
    Ok(resolved)
}

fn initial_blockmodel<R: Rng>(y: &InteractionTable, k1: usize, k2: usize, noise: f64, r: &mut R) -> Result<Blockmodel> {
    let mean = y.observed_mean();
    let sd = y.observed_sd() * noise;
    let noise = Normal::new(0.0, sd.max(f64::MIN_POSITIVE)).map_err(|e| Error::Engine(e.to_string()))?;
    let clamp = y.kind() == LikelihoodKind::Bernoulli;
    let vals = (0..k1 * k2)
        .map(|_| {
            let v = mean + if sd > 0.0 { noise.sample(r) } else { 0.0 };
            if clamp {
                v.clamp(PROB_CLAMP, 1.0 - PROB_CLAMP)
            } else {
                v
            }
        })
        .collect();
    Blockmodel::new(Matrix::from_vec(k1, k2, vals)?)
}

struct RestartOutcome {
    state: VariationalState,
    trace: Vec<f64>,
    converged: bool,
    outer_iters: usize,
    empty_events: usize,
}

fn run_restart(
    y: &InteractionTable,
    sigma2: f64,
    k1: usize,
    k2: usize,
    priors: &ResolvedPriors,
    cfg: &VemConfig,
    restart: usize,
) -> Result<RestartOutcome> {
    let mut r = rng::stream(cfg.seed, restart as u64);
    let b = initial_blockmodel(y, k1, k2, cfg.init_noise, &mut r)?;
    let mut state = VariationalState::uniform(y, &priors.update, b)?;
    if cfg.init == Init::Random {
        let pi: Vec<Vec<f64>> = (0..y.n1()).map(|_| rng::dirichlet(&mut r, &vec![1.0; k1])).collect();
        let p: Vec<Vec<f64>> = (0..y.n2()).map(|_| rng::dirichlet(&mut r, &vec![1.0; k2])).collect();
        for (j, k, _) in y.observed_cells() {
            state.set_phi(j, k, &pi[j]);
            state.set_eta(j, k, &p[k]);
        }
        update_nu(&mut state, &priors.update.rows);
        update_xi(&mut state, &priors.update.cols);
    }
    if let Some(m) = &priors.init_rows {
        state.nu = m.clone();
    }
    if let Some(m) = &priors.init_cols {
        state.xi = m.clone();
    }

    let m_step = |s: &mut VariationalState| match y.kind() {
        LikelihoodKind::Gaussian => update_b(s, y),
        LikelihoodKind::Bernoulli => update_b_bernoulli(s, y),
    };
    state.check_table(y);
    let mut lls = cell_logliks(y, &state.b, sigma2);
    let mut trace = vec![elbo_with(&state, y, &priors.update, &lls)];
    let mut converged = false;
    let mut empty_events = 0;
    let mut outer = 0;
    while outer < cfg.max_outer_iters {
        outer += 1;
        for _ in 0..cfg.max_e_iters {
            let c = update_phi_with(&mut state, y, &lls)
                .max(update_eta_with(&mut state, y, &lls))
                .max(update_nu(&mut state, &priors.update.rows))
                .max(update_xi(&mut state, &priors.update.cols));
            if c < cfg.tol {
                break;
            }
        }
        if !m_step(&mut state)?.is_empty() {
            empty_events += 1;
        }
        lls = cell_logliks(y, &state.b, sigma2);
        let e = elbo_with(&state, y, &priors.update, &lls);
        if !e.is_finite() {
            return Err(Error::Engine(format!(
                "restart {restart}: bound became non-finite at iteration {outer}"
            )));
        }
        let prev = *trace.last().expect("trace starts non-empty");
        trace.push(e);
        if (e - prev).abs() < cfg.tol {
            converged = true;
            break;
        }
    }
    Ok(RestartOutcome {
        state,
        trace,
        converged,
        outer_iters: outer,
        empty_events,
    })
}

/// Runs `cfg.restarts` independent starts of variational EM and keeps the
/// one with the highest final bound (earliest restart on ties).
pub fn fit(y: &InteractionTable, hyper: &Hyperparams, k1: usize, k2: usize, cfg: &VemConfig) -> Result<VemFit> {
    cfg.validate()?;
    hyper.validate()?;
    if k1 == 0 || k2 == 0 {
        return Err(Error::InvalidInput("need at least one group per side".into()));
    }
    let priors = resolve_priors(y, hyper, k1, k2, cfg)?;
    let run = |r: usize| run_restart(y, hyper.sigma2, k1, k2, &priors, cfg, r);
    let outcomes: Vec<Result<RestartOutcome>> = if cfg.parallel {
        (0..cfg.restarts).into_par_iter().map(run).collect()
    } else {
        (0..cfg.restarts).map(run).collect()
    };

    let max_elbo_decrease = outcomes
        .iter()
        .flatten()
        .map(|o| max_decrease(&o.trace))
        .fold(0.0, f64::max);
    let restart_elbos: Vec<Option<f64>> = outcomes
        .iter()
        .map(|o| o.as_ref().ok().map(|o| *o.trace.last().unwrap()))
        .collect();
    let mut best: Option<(usize, RestartOutcome)> = None;
    let mut last_err = None;
    for (i, o) in outcomes.into_iter().enumerate() {
        match o {
            Ok(o) => {
                let e = *o.trace.last().unwrap();
                if best.as_ref().is_none_or(|(_, b)| e > *b.trace.last().unwrap()) {
                    best = Some((i, o));
                }
            }
            Err(e) => last_err = Some(e),
        }
    }
    let (restart_index, o) = best.ok_or_else(|| {
        Error::Engine(format!(
            "all {} restarts failed; last error: {}",
            cfg.restarts,
            last_err.map(|e| e.to_string()).unwrap_or_default()
        ))
    })?;
    Ok(VemFit {
        estimated_pi: o.state.row_memberships(),
        estimated_p: o.state.col_memberships(),
        elbo: *o.trace.last().unwrap(),
        elbo_trace: o.trace,
        kind: y.kind(),
        state: o.state,
        restart_index,
        restart_elbos,
        converged: o.converged,
        outer_iters: o.outer_iters,
        empty_block_events: o.empty_events,
        max_elbo_decrease,
    })
}

/// Largest `trace[i-1] - trace[i]`, or zero for a nondecreasing trace.
pub fn max_decrease(trace: &[f64]) -> f64 {
    trace.windows(2).map(|w| w[0] - w[1]).fold(0.0, f64::max)
}

/// Predicted cell means. Observed cells use their fitted indicator
/// distributions, `phi' B eta`; masked cells fall back to the estimated
/// memberships, `pi_j' B p_k`.
pub fn predict(fit: &VemFit, cells: &[(usize, usize)]) -> Result<Vec<f64>> {
    let s = &fit.state;
    cells
        .iter()
        .map(|&(j, k)| {
            if j >= s.n1 || k >= s.n2 {
                return Err(Error::Dimension(format!(
                    "cell ({j},{k}) outside {}x{} table",
                    s.n1, s.n2
                )));
            }
            if s.is_observed(j, k) {
                Ok(bilinear(s.phi(j, k), s.b.matrix(), s.eta(j, k)))
            } else {
                expected_value(fit.estimated_pi.row(j), &s.b, fit.estimated_p.row(k))
            }
        })
        .collect()
}

//! Collapsed Gibbs sampler for the two-way mixed-membership blockmodel.
//!
//! Memberships are integrated out: each cell's joint indicator `(g, h)` is
//! resampled from its conditional given all other cells, which depends on
//! the row counts `D_{j->.}`, column counts `E_{.<-k}` and the blockmodel.
//! The blockmodel stays explicit and is redrawn from its conjugate
//! conditional after every sweep, from the block sums `Y_gh` and sizes
//! `n_gh`.

use rand::Rng;
use rand_distr::{Beta, Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::eval::{alignment_costs, hungarian};
use crate::model::cell_log_likelihood;
use crate::vem::PROB_CLAMP;
use crate::{
    rng, AssignmentPair, Blockmodel, Error, Hyperparams, InteractionTable, LikelihoodKind, Matrix, MembershipMatrix,
    Result,
};

/// Weights whose log falls this far below the cell maximum are treated as
/// zero.
const NEGLIGIBLE_LOG_WEIGHT: f64 = -60.0;

/// Chains whose split potential scale reduction exceeds this on any
/// blockmodel entry are flagged.
pub const PSRF_WARNING: f64 = 1.2;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GibbsState {
    n1: usize,
    n2: usize,
    k1: usize,
    k2: usize,
    /// Per-cell indicator pair, `None` for masked cells.
    pub assign: Vec<Option<AssignmentPair>>,
    /// `N1 x K1`, row-major.
    pub row_counts: Vec<u32>,
    /// `N2 x K2`, row-major.
    pub col_counts: Vec<u32>,
    /// `K1 x K2` sums of the cell values assigned to each block.
    pub block_sum: Vec<f64>,
    /// `K1 x K2` numbers of cells assigned to each block.
    pub block_n: Vec<u32>,
    pub b: Blockmodel,
}

impl GibbsState {
    /// State with the given per-cell assignments (`None` exactly on masked
    /// cells) and sufficient statistics computed from them.
    pub fn from_assignments(y: &InteractionTable, assign: Vec<Option<AssignmentPair>>, b: Blockmodel) -> Result<Self> {
        let (n1, n2, k1, k2) = (y.n1(), y.n2(), b.k1(), b.k2());
        if assign.len() != n1 * n2 {
            return Err(Error::Dimension("one assignment slot per cell is required".into()));
        }
        for (c, a) in assign.iter().enumerate() {
            match (y.mask()[c], a) {
                (true, Some(p)) if p.row_group < k1 && p.col_group < k2 => {}
                (false, None) => {}
                _ => {
                    return Err(Error::InvalidInput(format!(
                        "assignment of cell ({}, {}) does not match the mask or group counts",
                        c / n2,
                        c % n2
                    )))
                }
            }
        }
        let mut s = GibbsState {
            n1,
            n2,
            k1,
            k2,
            assign,
            row_counts: vec![],
            col_counts: vec![],
            block_sum: vec![],
            block_n: vec![],
            b,
        };
        s.recompute(y);
        Ok(s)
    }

    fn recompute(&mut self, y: &InteractionTable) {
        let (k1, k2) = (self.k1, self.k2);
        self.row_counts = vec![0; self.n1 * k1];
        self.col_counts = vec![0; self.n2 * k2];
        self.block_sum = vec![0.0; k1 * k2];
        self.block_n = vec![0; k1 * k2];
        for (j, k, v) in y.observed_cells() {
            let a = self.assign[j * self.n2 + k].expect("observed cells are assigned");
            self.add(j, k, a, v);
        }
    }

    /// Statistics recomputed from `assign` equal the incremental ones
    /// (block sums within `tol`).
    pub fn is_consistent(&self, y: &InteractionTable, tol: f64) -> bool {
        let mut fresh = self.clone();
        fresh.recompute(y);
        fresh.row_counts == self.row_counts
            && fresh.col_counts == self.col_counts
            && fresh.block_n == self.block_n
            && fresh.block_sum.iter().zip(&self.block_sum).all(|(a, b)| (a - b).abs() <= tol)
    }

    pub fn k1(&self) -> usize {
        self.k1
    }

    pub fn k2(&self) -> usize {
        self.k2
    }

    #[inline]
    fn add(&mut self, j: usize, k: usize, a: AssignmentPair, v: f64) {
        let (g, h) = (a.row_group, a.col_group);
        self.row_counts[j * self.k1 + g] += 1;
        self.col_counts[k * self.k2 + h] += 1;
        self.block_sum[g * self.k2 + h] += v;
        self.block_n[g * self.k2 + h] += 1;
        self.assign[j * self.n2 + k] = Some(a);
    }

    /// Removes the cell's assignment from all statistics, giving the
    /// `-jk` state.
    pub fn remove(&mut self, j: usize, k: usize, v: f64) -> Option<AssignmentPair> {
        let a = self.assign[j * self.n2 + k].take()?;
        let (g, h) = (a.row_group, a.col_group);
        self.row_counts[j * self.k1 + g] -= 1;
        self.col_counts[k * self.k2 + h] -= 1;
        self.block_sum[g * self.k2 + h] -= v;
        self.block_n[g * self.k2 + h] -= 1;
        Some(a)
    }

    pub fn insert(&mut self, j: usize, k: usize, a: AssignmentPair, v: f64) {
        debug_assert!(self.assign[j * self.n2 + k].is_none());
        self.add(j, k, a, v);
    }

    /// Per-object membership estimate `(counts + alpha) / (n + sum alpha)`.
    fn membership(counts: &[u32], n: usize, k: usize, prior: &[f64]) -> Matrix {
        let total: f64 = prior.iter().sum();
        let mut m = Matrix::zeros(n, k);
        for i in 0..n {
            let c = &counts[i * k..(i + 1) * k];
            let s: f64 = c.iter().map(|&x| x as f64).sum::<f64>() + total;
            for g in 0..k {
                m[(i, g)] = (c[g] as f64 + prior[g]) / s;
            }
        }
        m
    }

    pub fn row_membership(&self, alpha: &[f64]) -> MembershipMatrix {
        MembershipMatrix::new(Self::membership(&self.row_counts, self.n1, self.k1, alpha)).expect("valid simplex rows")
    }

    pub fn col_membership(&self, beta: &[f64]) -> MembershipMatrix {
        MembershipMatrix::new(Self::membership(&self.col_counts, self.n2, self.k2, beta)).expect("valid simplex rows")
    }
}

/// Unnormalized conditional weights of every `(g, h)` for cell `(j, k)`
/// (index `g * K2 + h`), scaled so the largest likelihood factor is one.
/// Expects the cell to be removed from the counts.
fn conditional_weights(state: &GibbsState, j: usize, k: usize, v: f64, kind: LikelihoodKind, alpha: &[f64], beta: &[f64], sigma2: f64, out: &mut [f64]) {
    let (k1, k2) = (state.k1, state.k2);
    let b = state.b.matrix().as_slice();
    let mut max = f64::NEG_INFINITY;
    for (o, &bv) in out.iter_mut().zip(b) {
        *o = cell_log_likelihood(kind, v, bv, sigma2);
        max = max.max(*o);
    }
    let rc = &state.row_counts[j * k1..(j + 1) * k1];
    let cc = &state.col_counts[k * k2..(k + 1) * k2];
    for g in 0..k1 {
        let rw = rc[g] as f64 + alpha[g];
        for h in 0..k2 {
            let o = &mut out[g * k2 + h];
            let d = *o - max;
            *o = if d < NEGLIGIBLE_LOG_WEIGHT {
                0.0
            } else {
                rw * (cc[h] as f64 + beta[h]) * d.exp()
            };
        }
    }
}

/// Joint conditional `p(D_{j->k} = g, E_{j<-k} = h | rest)` as a `K1 * K2`
/// table (index `g * K2 + h`). The cell must already be removed from
/// `state` (see [`GibbsState::remove`]).
pub fn cell_conditional(state: &GibbsState, j: usize, k: usize, y: &InteractionTable, hyper: &Hyperparams) -> Result<Vec<f64>> {
    if !y.is_observed(j, k) {
        return Err(Error::InvalidInput(format!("cell ({j}, {k}) is not observed")));
    }
    if state.assign[j * state.n2 + k].is_some() {
        return Err(Error::InvalidInput(format!("cell ({j}, {k}) must be removed first")));
    }
    let alpha = hyper.alpha_vec(state.k1)?;
    let beta = hyper.beta_vec(state.k2)?;
    let mut w = vec![0.0; state.k1 * state.k2];
    conditional_weights(state, j, k, y.get(j, k), y.kind(), &alpha, &beta, hyper.sigma2, &mut w);
    let total: f64 = w.iter().sum();
    w.iter_mut().for_each(|x| *x /= total);
    Ok(w)
}

/// Draws every blockmodel entry from its conjugate conditional given the
/// block statistics. Gaussian: `Normal(mean, 1 / precision)` with
/// `precision = n / sigma2 + 1 / sigma2_b` and `mean = (sum / sigma2) /
/// precision`. Binary: `Beta(1 + ones, 1 + n - ones)`, clamped. Empty
/// blocks draw from the prior.
pub fn resample_b<R: Rng + ?Sized>(state: &mut GibbsState, kind: LikelihoodKind, sigma2: f64, sigma2_b: f64, r: &mut R) -> Result<()> {
    let k2 = state.k2;
    for i in 0..state.k1 * k2 {
        let n = state.block_n[i] as f64;
        let s = state.block_sum[i];
        let v = match kind {
            LikelihoodKind::Gaussian => {
                let precision = n / sigma2 + 1.0 / sigma2_b;
                let mean = (s / sigma2) / precision;
                Normal::new(mean, precision.recip().sqrt())
                    .map_err(|e| Error::Engine(e.to_string()))?
                    .sample(r)
            }
            LikelihoodKind::Bernoulli => {
                let ones = s.round();
                Beta::new(1.0 + ones, 1.0 + n - ones)
                    .map_err(|e| Error::Engine(e.to_string()))?
                    .sample(r)
                    .clamp(PROB_CLAMP, 1.0 - PROB_CLAMP)
            }
        };
        state.b.matrix_mut().as_mut_slice()[i] = v;
    }
    Ok(())
}

/// Resamples every observed cell's indicators in row-major order, then
/// the blockmodel unless `fixed_b`.
pub fn sweep<R: Rng + ?Sized>(
    state: &mut GibbsState,
    y: &InteractionTable,
    hyper: &Hyperparams,
    sigma2_b: f64,
    fixed_b: bool,
    r: &mut R,
) -> Result<()> {
    let alpha = hyper.alpha_vec(state.k1)?;
    let beta = hyper.beta_vec(state.k2)?;
    let mut w = vec![0.0; state.k1 * state.k2];
    let k2 = state.k2;
    for (j, k, v) in y.observed_cells() {
        state.remove(j, k, v);
        conditional_weights(state, j, k, v, y.kind(), &alpha, &beta, hyper.sigma2, &mut w);
        let gh = rng::categorical(r, &w);
        state.insert(j, k, AssignmentPair::new(gh / k2, gh % k2), v);
    }
    if !fixed_b {
        resample_b(state, y.kind(), hyper.sigma2, sigma2_b, r)?;
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GibbsInit {
    /// Every cell's `(g, h)` drawn uniformly.
    #[default]
    Uniform,
    /// Per-object `Dirichlet(1)` memberships, cells drawn from them.
    Random,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GibbsConfig {
    pub burn_in: usize,
    /// Total sweeps per chain, burn-in included.
    pub iters: usize,
    pub thin: usize,
    pub chains: usize,
    pub init: GibbsInit,
    pub sigma2_b_prior: f64,
    /// Hold the blockmodel at this value instead of resampling it.
    pub fixed_b: Option<Blockmodel>,
    /// Run chains on the rayon pool. Results do not depend on it.
    pub parallel: bool,
    pub seed: u64,
}

impl Default for GibbsConfig {
    fn default() -> Self {
        GibbsConfig {
            burn_in: 1000,
            iters: 6000,
            thin: 10,
            chains: 10,
            init: GibbsInit::Uniform,
            sigma2_b_prior: 1.0,
            fixed_b: None,
            parallel: false,
            seed: 0,
        }
    }
}

impl GibbsConfig {
    pub fn validate(&self) -> Result<()> {
        if self.chains == 0 || self.thin == 0 || self.iters <= self.burn_in || !(self.sigma2_b_prior > 0.0) {
            return Err(Error::InvalidInput(
                "gibbs config needs chains, thin > 0, iters > burn_in and sigma2_b_prior > 0".into(),
            ));
        }
        Ok(())
    }

    pub fn draws_per_chain(&self) -> usize {
        (self.iters - self.burn_in) / self.thin
    }
}

/// Unaligned output of one chain.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainRun {
    /// Row memberships of each retained draw.
    pub pi_draws: Vec<MembershipMatrix>,
    pub p_draws: Vec<MembershipMatrix>,
    /// Blockmodel of each retained draw, flattened row-major.
    pub b_draws: Vec<Vec<f64>>,
    /// For each observed cell (row-major), how often each `(g, h)` was held
    /// across retained draws, at index `g * K2 + h`.
    pub cell_counts: Vec<Vec<u32>>,
    pub final_state: GibbsState,
}

fn initial_state<R: Rng + ?Sized>(y: &InteractionTable, hyper: &Hyperparams, k1: usize, k2: usize, cfg: &GibbsConfig, r: &mut R) -> Result<GibbsState> {
    let mut assign = vec![None; y.n1() * y.n2()];
    match cfg.init {
        GibbsInit::Uniform => {
            for (j, k, _) in y.observed_cells() {
                let gh = r.random_range(0..k1 * k2);
                assign[j * y.n2() + k] = Some(AssignmentPair::new(gh / k2, gh % k2));
            }
        }
        GibbsInit::Random => {
            let pi: Vec<Vec<f64>> = (0..y.n1()).map(|_| rng::dirichlet(r, &vec![1.0; k1])).collect();
            let p: Vec<Vec<f64>> = (0..y.n2()).map(|_| rng::dirichlet(r, &vec![1.0; k2])).collect();
            for (j, k, _) in y.observed_cells() {
                let g = rng::categorical(r, &pi[j]);
                let h = rng::categorical(r, &p[k]);
                assign[j * y.n2() + k] = Some(AssignmentPair::new(g, h));
            }
        }
    }
    let b = match &cfg.fixed_b {
        Some(b) => {
            if b.k1() != k1 || b.k2() != k2 {
                return Err(Error::Dimension("fixed blockmodel does not match group counts".into()));
            }
            b.clone()
        }
        None => Blockmodel::new(Matrix::zeros(k1, k2))?,
    };
    let mut s = GibbsState::from_assignments(y, assign, b)?;
    if cfg.fixed_b.is_none() {
        resample_b(&mut s, y.kind(), hyper.sigma2, cfg.sigma2_b_prior, r)?;
    }
    Ok(s)
}

/// Runs chain `chain` (its own random stream of `cfg.seed`).
pub fn run_chain(y: &InteractionTable, hyper: &Hyperparams, k1: usize, k2: usize, cfg: &GibbsConfig, chain: usize) -> Result<ChainRun> {
    cfg.validate()?;
    hyper.validate()?;
    let alpha = hyper.alpha_vec(k1)?;
    let beta = hyper.beta_vec(k2)?;
    let mut r = rng::stream(cfg.seed, chain as u64);
    let mut state = initial_state(y, hyper, k1, k2, cfg, &mut r)?;
    let cells: Vec<usize> = y.observed_cells().map(|(j, k, _)| j * y.n2() + k).collect();
    let mut run = ChainRun {
        pi_draws: Vec::with_capacity(cfg.draws_per_chain()),
        p_draws: Vec::with_capacity(cfg.draws_per_chain()),
        b_draws: Vec::with_capacity(cfg.draws_per_chain()),
        cell_counts: vec![vec![0; k1 * k2]; cells.len()],
        final_state: state.clone(),
    };
    for s in 1..=cfg.iters {
        sweep(&mut state, y, hyper, cfg.sigma2_b_prior, cfg.fixed_b.is_some(), &mut r)
            .map_err(|e| Error::Engine(format!("chain {chain}, sweep {s}: {e}")))?;
        if s > cfg.burn_in && (s - cfg.burn_in).is_multiple_of(cfg.thin) {
            run.pi_draws.push(state.row_membership(&alpha));
            run.p_draws.push(state.col_membership(&beta));
            run.b_draws.push(state.b.matrix().as_slice().to_vec());
            for (acc, &c) in run.cell_counts.iter_mut().zip(&cells) {
                let a = state.assign[c].expect("observed");
                acc[a.row_group * k2 + a.col_group] += 1;
            }
        }
    }
    run.final_state = state;
    Ok(run)
}

/// Split-chain potential scale reduction of one scalar across chains:
/// each chain is halved and the halves are treated as separate chains.
pub fn split_psrf(chains: &[Vec<f64>]) -> f64 {
    let halves: Vec<&[f64]> = chains
        .iter()
        .flat_map(|c| {
            let n = c.len() / 2;
            [&c[..n], &c[c.len() - n..]]
        })
        .filter(|h| h.len() >= 2)
        .collect();
    if halves.len() < 2 {
        return f64::NAN;
    }
    let n = halves.iter().map(|h| h.len()).min().unwrap() as f64;
    let m = halves.len() as f64;
    let means: Vec<f64> = halves.iter().map(|h| h.iter().sum::<f64>() / h.len() as f64).collect();
    let w = halves
        .iter()
        .zip(&means)
        .map(|(h, mu)| h.iter().map(|x| (x - mu).powi(2)).sum::<f64>() / (h.len() as f64 - 1.0))
        .sum::<f64>()
        / m;
    let grand = means.iter().sum::<f64>() / m;
    let between = n * means.iter().map(|mu| (mu - grand).powi(2)).sum::<f64>() / (m - 1.0);
    if w == 0.0 {
        return if between == 0.0 { 1.0 } else { f64::INFINITY };
    }
    (((n - 1.0) / n * w + between / n) / w).sqrt()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainDiagnostics {
    pub draws: usize,
    /// Mean of the aligned blockmodel over the chain's draws.
    pub mean_b: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GibbsFit {
    pub mean_pi: MembershipMatrix,
    pub mean_p: MembershipMatrix,
    pub mean_b: Blockmodel,
    pub kind: LikelihoodKind,
    pub draws_per_chain: usize,
    pub chains: Vec<ChainDiagnostics>,
    /// Split-chain PSRF of every aligned blockmodel entry, `K1 x K2`.
    pub psrf: Matrix,
    /// Some PSRF exceeds [`PSRF_WARNING`].
    pub convergence_warning: bool,
}

/// Runs `cfg.chains` chains, aligns every retained draw's labels to the
/// first retained draw of chain 0, and averages.
pub fn fit(y: &InteractionTable, hyper: &Hyperparams, k1: usize, k2: usize, cfg: &GibbsConfig) -> Result<GibbsFit> {
    cfg.validate()?;
    if k1 == 0 || k2 == 0 {
        return Err(Error::InvalidInput("need at least one group per side".into()));
    }
    let run = |c: usize| run_chain(y, hyper, k1, k2, cfg, c);
    let runs: Vec<ChainRun> = if cfg.parallel {
        (0..cfg.chains).into_par_iter().map(run).collect::<Result<_>>()?
    } else {
        (0..cfg.chains).map(run).collect::<Result<_>>()?
    };
    let reference_pi = runs[0].pi_draws.first().cloned().ok_or_else(|| Error::Engine("no retained draws".into()))?;
    let reference_p = runs[0].p_draws[0].clone();

    let mut sum_pi = Matrix::zeros(y.n1(), k1);
    let mut sum_p = Matrix::zeros(y.n2(), k2);
    let mut sum_b = vec![0.0; k1 * k2];
    let mut aligned_b: Vec<Vec<Vec<f64>>> = Vec::with_capacity(runs.len());
    let mut chains = Vec::with_capacity(runs.len());
    let mut total = 0usize;
    for run in &runs {
        let mut chain_b = Vec::with_capacity(run.b_draws.len());
        let mut chain_sum = vec![0.0; k1 * k2];
        for ((pi, p), b) in run.pi_draws.iter().zip(&run.p_draws).zip(&run.b_draws) {
            let (rp, _) = hungarian(&alignment_costs(pi, &reference_pi)?);
            let (cp, _) = hungarian(&alignment_costs(p, &reference_p)?);
            let pi = pi.permute_groups(&rp);
            let p = p.permute_groups(&cp);
            for (s, v) in sum_pi.as_mut_slice().iter_mut().zip(pi.matrix().as_slice()) {
                *s += v;
            }
            for (s, v) in sum_p.as_mut_slice().iter_mut().zip(p.matrix().as_slice()) {
                *s += v;
            }
            let ab: Vec<f64> = (0..k1 * k2).map(|i| b[rp[i / k2] * k2 + cp[i % k2]]).collect();
            for i in 0..k1 * k2 {
                sum_b[i] += ab[i];
                chain_sum[i] += ab[i];
            }
            chain_b.push(ab);
            total += 1;
        }
        let n = chain_b.len() as f64;
        chains.push(ChainDiagnostics {
            draws: chain_b.len(),
            mean_b: chain_sum.iter().map(|s| s / n).collect(),
        });
        aligned_b.push(chain_b);
    }
    let t = total as f64;
    sum_pi.as_mut_slice().iter_mut().for_each(|v| *v /= t);
    sum_p.as_mut_slice().iter_mut().for_each(|v| *v /= t);
    let mut psrf = Matrix::zeros(k1, k2);
    for i in 0..k1 * k2 {
        let series: Vec<Vec<f64>> = aligned_b.iter().map(|c| c.iter().map(|d| d[i]).collect()).collect();
        psrf.as_mut_slice()[i] = split_psrf(&series);
    }
    let convergence_warning = psrf.as_slice().iter().any(|&r| r > PSRF_WARNING);
    Ok(GibbsFit {
        mean_pi: MembershipMatrix::from_unnormalized(&sum_pi)?,
        mean_p: MembershipMatrix::from_unnormalized(&sum_p)?,
        mean_b: Blockmodel::new(Matrix::from_vec(k1, k2, sum_b.iter().map(|s| s / t).collect())?)?,
        kind: y.kind(),
        draws_per_chain: cfg.draws_per_chain(),
        chains,
        psrf,
        convergence_warning,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simgen::{generate, SimConfig};
    use approx::assert_abs_diff_eq;

    fn table(rows: &[Vec<f64>]) -> InteractionTable {
        InteractionTable::from_rows(rows, LikelihoodKind::Gaussian).unwrap()
    }

    fn state(y: &InteractionTable, pairs: &[(usize, usize)], b: Vec<Vec<f64>>) -> GibbsState {
        let assign = pairs.iter().map(|&(g, h)| Some(AssignmentPair::new(g, h))).collect();
        GibbsState::from_assignments(y, assign, Blockmodel::from_rows(&b).unwrap()).unwrap()
    }

    #[test]
    fn conditional_single_group() {
        let y = table(&[vec![0.4, -1.0]]);
        let mut s = state(&y, &[(0, 0), (0, 0)], vec![vec![0.1]]);
        let h = Hyperparams::symmetric(0.05, 0.05, 0.01).unwrap();
        s.remove(0, 1, -1.0);
        assert_eq!(cell_conditional(&s, 0, 1, &y, &h).unwrap(), vec![1.0]);
    }

    #[test]
    fn conditional_requires_removed_cell() {
        let y = table(&[vec![0.4]]);
        let s = state(&y, &[(0, 0)], vec![vec![0.1]]);
        let h = Hyperparams::symmetric(0.05, 0.05, 0.01).unwrap();
        assert!(cell_conditional(&s, 0, 0, &y, &h).is_err());
    }

    #[test]
    fn conditional_flat_likelihood_is_count_product() {
        let y = table(&[vec![0.3, 0.1, 0.9], vec![0.2, 0.5, 0.7]]);
        let mut s = state(&y, &[(0, 0), (1, 1), (1, 0), (0, 1), (0, 1), (1, 1)], vec![vec![0.0, 1.0], vec![-1.0, 2.0]]);
        let h = Hyperparams::symmetric(0.5, 0.25, 1e12).unwrap();
        s.remove(0, 0, 0.3);
        let t = cell_conditional(&s, 0, 0, &y, &h).unwrap();
        // row 0 holds groups {1, 1} after removal, column 0 holds {1}
        let rw = [0.5, 2.5];
        let cw = [0.25, 1.25];
        let z: f64 = rw.iter().sum::<f64>() * cw.iter().sum::<f64>();
        for g in 0..2 {
            for hh in 0..2 {
                assert_abs_diff_eq!(t[g * 2 + hh], rw[g] * cw[hh] / z, epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn conditional_hand_oracle() {
        // 2x2 table, cell (0,0) removed; row 0 counts [1, 0], column 0 counts [0, 1].
        let y = table(&[vec![0.12, 0.3], vec![-0.05, 0.4]]);
        let bm = [[0.1, -0.2], [0.25, 0.0]];
        let mut s = state(&y, &[(0, 1), (0, 0), (1, 1), (1, 0)], bm.iter().map(|r| r.to_vec()).collect());
        let h = Hyperparams::symmetric(0.05, 0.05, 0.01).unwrap();
        s.remove(0, 0, 0.12);
        assert_eq!(&s.row_counts[0..2], &[1, 0]);
        assert_eq!(&s.col_counts[0..2], &[0, 1]);
        let t = cell_conditional(&s, 0, 0, &y, &h).unwrap();
        let dens = |b: f64| (-(0.12 - b) * (0.12f64 - b) / 0.02).exp() / (2.0 * std::f64::consts::PI * 0.01).sqrt();
        let raw: Vec<f64> = (0..4)
            .map(|i| {
                let (g, hh) = (i / 2, i % 2);
                ([1.05, 0.05][g]) * ([0.05, 1.05][hh]) * dens(bm[g][hh])
            })
            .collect();
        let z: f64 = raw.iter().sum();
        for i in 0..4 {
            assert_abs_diff_eq!(t[i], raw[i] / z, epsilon = 1e-12);
        }
    }

    #[test]
    fn resample_b_empty_block_uses_prior() {
        let y = table(&[vec![0.3]]);
        let mut s = state(&y, &[(0, 0)], vec![vec![0.0, 0.0]]);
        let mut r = rng::seeded(3);
        let draws: Vec<f64> = (0..20_000)
            .map(|_| {
                resample_b(&mut s, LikelihoodKind::Gaussian, 0.01, 4.0, &mut r).unwrap();
                s.b.get(0, 1)
            })
            .collect();
        let m = draws.iter().sum::<f64>() / draws.len() as f64;
        let v = draws.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (draws.len() - 1) as f64;
        assert!(m.abs() < 4.0 * (4.0f64 / 20_000.0).sqrt());
        assert!((v - 4.0).abs() < 0.15);
    }

    #[test]
    fn resample_b_conjugate_moments() {
        // Block (0,0) holds three cells summing to 0.9 with sigma2 = 0.5,
        // prior variance 2: precision 6.5, mean 1.8 / 6.5.
        let y = table(&[vec![0.2, 0.3, 0.4]]);
        let mut s = state(&y, &[(0, 0), (0, 0), (0, 0)], vec![vec![0.0]]);
        let mut r = rng::seeded(4);
        let n = 40_000;
        let draws: Vec<f64> = (0..n)
            .map(|_| {
                resample_b(&mut s, LikelihoodKind::Gaussian, 0.5, 2.0, &mut r).unwrap();
                s.b.get(0, 0)
            })
            .collect();
        let m = draws.iter().sum::<f64>() / n as f64;
        let v = draws.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1) as f64;
        let (mean, var) = (1.8 / 6.5, 1.0 / 6.5);
        assert!((m - mean).abs() < 4.0 * (var / n as f64).sqrt());
        assert!((v - var).abs() < 0.05 * var);
    }

    #[test]
    fn resample_b_flat_prior_limit() {
        let vals: Vec<f64> = (0..500).map(|i| (i as f64 * 0.37).sin()).collect();
        let y = InteractionTable::new(1, 500, vals.clone(), LikelihoodKind::Gaussian).unwrap();
        let mut s = GibbsState::from_assignments(&y, vec![Some(AssignmentPair::new(0, 0)); 500], Blockmodel::from_rows(&[vec![0.0]]).unwrap()).unwrap();
        let mut r = rng::seeded(5);
        let n = 2000;
        let m: f64 = (0..n)
            .map(|_| {
                resample_b(&mut s, LikelihoodKind::Gaussian, 1e-4, 1e12, &mut r).unwrap();
                s.b.get(0, 0)
            })
            .sum::<f64>()
            / n as f64;
        let sample_mean = vals.iter().sum::<f64>() / 500.0;
        assert!((m - sample_mean).abs() < 1e-4);
    }

    #[test]
    fn resample_b_bernoulli_beta_mean() {
        let y = InteractionTable::from_rows(&[vec![1.0, 1.0, 0.0, 1.0]], LikelihoodKind::Bernoulli).unwrap();
        let mut s = state(&y, &[(0, 0); 4], vec![vec![0.5]]);
        let mut r = rng::seeded(6);
        let n = 40_000;
        let m: f64 = (0..n)
            .map(|_| {
                resample_b(&mut s, LikelihoodKind::Bernoulli, 1.0, 1.0, &mut r).unwrap();
                s.b.get(0, 0)
            })
            .sum::<f64>()
            / n as f64;
        // Beta(4, 2) has mean 2/3 and variance 8/252.
        assert!((m - 2.0 / 3.0).abs() < 4.0 * (8.0 / 252.0 / n as f64).sqrt());
    }

    #[test]
    fn sweep_keeps_counts_consistent() {
        let t = generate(&SimConfig::new(10, 15, 2, 3, 7)).unwrap();
        let y = t.table.masked(&[(1, 1), (3, 4), (9, 14)]).unwrap();
        let h = Hyperparams::symmetric(0.05, 0.05, 0.01).unwrap();
        let cfg = GibbsConfig::default();
        let mut r = rng::seeded(1);
        let mut s = initial_state(&y, &h, 2, 3, &cfg, &mut r).unwrap();
        for _ in 0..50 {
            sweep(&mut s, &y, &h, 1.0, false, &mut r).unwrap();
            assert!(s.is_consistent(&y, 1e-9));
            assert_eq!(s.block_n.iter().sum::<u32>() as usize, y.observed_count());
            for j in 0..10 {
                assert_eq!(s.row_counts[j * 2..j * 2 + 2].iter().sum::<u32>() as usize, y.row_observed(j));
            }
        }
    }

    #[test]
    fn single_group_sweep_is_noop_on_assignments() {
        let t = generate(&SimConfig::new(4, 5, 1, 1, 2)).unwrap();
        let h = Hyperparams::symmetric(0.05, 0.05, 0.01).unwrap();
        let cfg = GibbsConfig::default();
        let mut r = rng::seeded(2);
        let mut s = initial_state(&t.table, &h, 1, 1, &cfg, &mut r).unwrap();
        let before = s.assign.clone();
        sweep(&mut s, &t.table, &h, 1.0, false, &mut r).unwrap();
        assert_eq!(s.assign, before);
    }

    #[test]
    fn single_group_fit_recovers_mean() {
        let t = generate(&SimConfig::new(10, 15, 1, 1, 3)).unwrap();
        let h = Hyperparams::symmetric(0.05, 0.05, 0.01).unwrap();
        let cfg = GibbsConfig { burn_in: 50, iters: 550, thin: 5, chains: 2, ..Default::default() };
        let f = fit(&t.table, &h, 1, 1, &cfg).unwrap();
        // posterior sd of B is about sigma / sqrt(150) = 0.008
        assert!((f.mean_b.get(0, 0) - t.table.observed_mean()).abs() < 0.01);
        assert_eq!(f.draws_per_chain, 100);
        assert_eq!(f.chains.len(), 2);
        assert!(f.chains.iter().all(|c| c.draws == 100));
    }

    #[test]
    fn default_config_retains_500_draws() {
        let cfg = GibbsConfig::default();
        assert_eq!(cfg.draws_per_chain(), 500);
    }

    #[test]
    fn fit_is_deterministic_and_parallel_invariant() {
        let t = generate(&SimConfig::new(10, 15, 2, 3, 1)).unwrap();
        let h = Hyperparams::symmetric(0.05, 0.05, 0.01).unwrap();
        let cfg = GibbsConfig { burn_in: 20, iters: 120, thin: 5, chains: 3, init: GibbsInit::Random, ..Default::default() };
        let a = fit(&t.table, &h, 2, 3, &cfg).unwrap();
        let b = fit(&t.table, &h, 2, 3, &GibbsConfig { parallel: true, ..cfg.clone() }).unwrap();
        assert_eq!(a, b);
        let c = fit(&t.table, &h, 2, 3, &GibbsConfig { seed: 1, ..cfg }).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn psrf_values() {
        let a: Vec<f64> = (0..100).map(|i| (i as f64 * 0.7).sin()).collect();
        let b: Vec<f64> = (0..100).map(|i| (i as f64 * 1.3).cos()).collect();
        let r = split_psrf(&[a.clone(), b]);
        assert!(r > 0.9 && r < 1.1, "{r}");
        let shifted: Vec<f64> = a.iter().map(|x| x + 10.0).collect();
        assert!(split_psrf(&[a, shifted]) > 2.0);
        assert_eq!(split_psrf(&[vec![1.0; 10], vec![1.0; 10]]), 1.0);
    }

    #[test]
    fn relabeled_blockmodel_gives_relabeled_chain() {
        // Swapping the row groups of a fixed B relabels the stationary
        // distribution, so label-symmetric statistics agree.
        let t = generate(&SimConfig::new(6, 5, 2, 2, 9)).unwrap();
        let h = Hyperparams::symmetric(0.5, 0.5, 0.05).unwrap();
        let base = GibbsConfig { burn_in: 10, iters: 200, thin: 1, chains: 1, fixed_b: Some(t.b.clone()), ..Default::default() };
        let swapped = Blockmodel::new(t.b.matrix().permute_rows(&[1, 0])).unwrap();
        let a = run_chain(&t.table, &h, 2, 2, &base, 0).unwrap();
        let b = run_chain(&t.table, &h, 2, 2, &GibbsConfig { fixed_b: Some(swapped), ..base }, 0).unwrap();
        // Symmetric statistic: the multiset of per-row max memberships.
        let stat = |r: &ChainRun| -> f64 {
            r.pi_draws.iter().map(|pi| (0..6).map(|j| pi.row(j)[0].max(pi.row(j)[1])).sum::<f64>()).sum()
        };
        let (sa, sb) = (stat(&a), stat(&b));
        assert!((sa - sb).abs() / sa < 0.05, "{sa} vs {sb}");
    }
}

//! Seeded synthetic tables, censoring by thresholding, and hold-out masks.

use rand::seq::SliceRandom;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::ingest::inverse_fisher;
use crate::model::{Blockmodel, InteractionTable, LikelihoodKind, MembershipMatrix};
use crate::{rng, Error, Matrix, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub n1: usize,
    pub n2: usize,
    pub k1: usize,
    pub k2: usize,
    /// Row Dirichlet parameter; length 1 (symmetric) or `k1`.
    pub alpha: Vec<f64>,
    /// Column Dirichlet parameter; length 1 (symmetric) or `k2`.
    pub beta: Vec<f64>,
    pub sigma2: f64,
    #[serde(default)]
    pub mu_b: f64,
    #[serde(default = "one")]
    pub sigma2_b: f64,
    #[serde(default)]
    pub seed: u64,
}

fn one() -> f64 {
    1.0
}

/// Named table and block sizes used by the simulation experiments.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Preset {
    /// 10 x 15 table, 2 x 3 blocks.
    Small,
    /// 50 x 75 table, 4 x 6 blocks.
    Medium,
    /// 100 x 150 table, 6 x 9 blocks.
    Large,
}

impl Preset {
    pub fn from_name(name: &str) -> Result<Self> {
        match name {
            "paper-small" => Ok(Preset::Small),
            "paper-medium" => Ok(Preset::Medium),
            "paper-large" => Ok(Preset::Large),
            other => Err(Error::InvalidInput(format!("unknown preset {other:?}"))),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Preset::Small => "paper-small",
            Preset::Medium => "paper-medium",
            Preset::Large => "paper-large",
        }
    }

    pub fn sizes(self) -> (usize, usize, usize, usize) {
        match self {
            Preset::Small => (10, 15, 2, 3),
            Preset::Medium => (50, 75, 4, 6),
            Preset::Large => (100, 150, 6, 9),
        }
    }
}

impl Default for SimConfig {
    fn default() -> Self {
        Self::preset(Preset::Small, 0)
    }
}

impl SimConfig {
    /// Standard design: `alpha = beta = 0.05`, `sigma2 = 0.01`, and
    /// `B(g,h) ~ Normal(0, 1)`.
    pub fn new(n1: usize, n2: usize, k1: usize, k2: usize, seed: u64) -> Self {
        SimConfig {
            n1,
            n2,
            k1,
            k2,
            alpha: vec![0.05],
            beta: vec![0.05],
            sigma2: 0.01,
            mu_b: 0.0,
            sigma2_b: 1.0,
            seed,
        }
    }

    pub fn preset(p: Preset, seed: u64) -> Self {
        let (n1, n2, k1, k2) = p.sizes();
        Self::new(n1, n2, k1, k2, seed)
    }

    pub fn with_concentration(mut self, alpha: f64, beta: f64) -> Self {
        self.alpha = vec![alpha];
        self.beta = vec![beta];
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n1 == 0 || self.n2 == 0 || self.k1 == 0 || self.k2 == 0 {
            return Err(Error::InvalidInput("sizes must be positive".into()));
        }
        if self.k1 > self.n1 || self.k2 > self.n2 {
            return Err(Error::InvalidInput("more groups than objects".into()));
        }
        if !(self.sigma2 > 0.0) || self.sigma2_b < 0.0 || !self.mu_b.is_finite() {
            return Err(Error::InvalidInput("variances must be positive".into()));
        }
        self.hyperparams()?;
        Ok(())
    }

    pub fn hyperparams(&self) -> Result<crate::Hyperparams> {
        crate::Hyperparams::new(self.alpha.clone(), self.beta.clone(), self.sigma2)
    }
}

/// Ground truth of one simulated data set.
#[derive(Clone, Debug, PartialEq)]
pub struct SimTruth {
    pub b: Blockmodel,
    pub pi: MembershipMatrix,
    pub p: MembershipMatrix,
    pub table: InteractionTable,
}

/// Draws `B`, then the row memberships, the column memberships, and finally
/// every cell `Y(j,k) ~ Normal(pi_j' B p_k, sigma2)`, all from one stream
/// seeded by `cfg.seed`.
pub fn generate(cfg: &SimConfig) -> Result<SimTruth> {
    cfg.validate()?;
    let h = cfg.hyperparams()?;
    let alpha = h.alpha_vec(cfg.k1)?;
    let beta = h.beta_vec(cfg.k2)?;
    let mut r = rng::seeded(cfg.seed);

    let bdist = Normal::new(cfg.mu_b, cfg.sigma2_b.sqrt()).map_err(|e| Error::InvalidInput(e.to_string()))?;
    let bvals: Vec<f64> = (0..cfg.k1 * cfg.k2).map(|_| bdist.sample(&mut r)).collect();
    let b = Blockmodel::new(Matrix::from_vec(cfg.k1, cfg.k2, bvals)?)?;

    let mut pi = Matrix::zeros(cfg.n1, cfg.k1);
    for j in 0..cfg.n1 {
        pi.row_mut(j).copy_from_slice(&rng::dirichlet(&mut r, &alpha));
    }
    let mut p = Matrix::zeros(cfg.n2, cfg.k2);
    for k in 0..cfg.n2 {
        p.row_mut(k).copy_from_slice(&rng::dirichlet(&mut r, &beta));
    }

    let noise = Normal::new(0.0, cfg.sigma2.sqrt()).map_err(|e| Error::InvalidInput(e.to_string()))?;
    let mut values = Vec::with_capacity(cfg.n1 * cfg.n2);
    for j in 0..cfg.n1 {
        for k in 0..cfg.n2 {
            let mean = crate::model::bilinear(pi.row(j), b.matrix(), p.row(k));
            values.push(mean + noise.sample(&mut r));
        }
    }
    Ok(SimTruth {
        table: InteractionTable::new(cfg.n1, cfg.n2, values, LikelihoodKind::Gaussian)?,
        b,
        pi: MembershipMatrix::new(pi)?,
        p: MembershipMatrix::new(p)?,
    })
}

/// Threshold used to censor a real-valued table.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "kind", content = "value")]
pub enum CensorRule {
    /// Median of `|rho|` over the observed cells.
    Median,
    /// Mean of `|rho|` over the observed cells.
    Mean,
    /// A fixed threshold in `(0, 1)`.
    Fixed(f64),
}

impl CensorRule {
    pub fn label(&self) -> String {
        match self {
            CensorRule::Median => "median".into(),
            CensorRule::Mean => "mean".into(),
            CensorRule::Fixed(v) => format!("fixed({v})"),
        }
    }
}

/// Maps each Fisher-scale cell to a correlation with `tanh` and returns the
/// binary table `1(|rho| >= tau)` together with the resolved `tau`.
/// Masked cells stay masked.
pub fn censor(y: &InteractionTable, rule: CensorRule) -> Result<(InteractionTable, f64)> {
    if y.kind() != LikelihoodKind::Gaussian {
        return Err(Error::InvalidInput("censoring needs a real-valued table".into()));
    }
    let abs_rho: Vec<f64> = y.observed_cells().map(|(_, _, v)| inverse_fisher(v).abs()).collect();
    if abs_rho.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("non-finite cell".into()));
    }
    let tau = match rule {
        CensorRule::Fixed(v) => {
            if !(v > 0.0 && v < 1.0) {
                return Err(Error::InvalidInput(format!("fixed threshold {v} outside (0,1)")));
            }
            v
        }
        CensorRule::Mean => abs_rho.iter().sum::<f64>() / abs_rho.len() as f64,
        CensorRule::Median => {
            let mut s = abs_rho.clone();
            s.sort_by(f64::total_cmp);
            let n = s.len();
            if n % 2 == 1 {
                s[n / 2]
            } else {
                0.5 * (s[n / 2 - 1] + s[n / 2])
            }
        }
    };
    let values = y
        .values()
        .iter()
        .zip(y.mask())
        .map(|(&v, &m)| if m && inverse_fisher(v).abs() >= tau { 1.0 } else { 0.0 })
        .collect();
    let s = InteractionTable::with_mask(y.n1(), y.n2(), values, y.mask().to_vec(), LikelihoodKind::Bernoulli)?;
    Ok((s, tau))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HeldOutCell {
    pub row: usize,
    pub col: usize,
    pub value: f64,
}

#[derive(Clone, Debug)]
pub struct Holdout {
    pub table: InteractionTable,
    pub heldout: Vec<HeldOutCell>,
    pub rows: Vec<usize>,
    pub cols: Vec<usize>,
}

impl Holdout {
    pub fn missing_fraction(&self) -> f64 {
        self.heldout.len() as f64 / (self.table.n1() * self.table.n2()) as f64
    }
}

/// Picks `floor(2 N1 / 3)` rows and `floor(2 N2 / 3)` columns without
/// replacement, shuffles their intersection cells and masks the first half.
/// Unselected rows and columns keep every row and column observed.
pub fn mask_holdout(y: &InteractionTable, seed: u64) -> Result<Holdout> {
    let (n1, n2) = (y.n1(), y.n2());
    if n1 < 3 || n2 < 3 {
        return Err(Error::InvalidInput("hold-out masking needs at least 3 rows and 3 columns".into()));
    }
    let mut r = rng::seeded(seed);
    let mut rows: Vec<usize> = (0..n1).collect();
    rows.shuffle(&mut r);
    rows.truncate(2 * n1 / 3);
    rows.sort_unstable();
    let mut cols: Vec<usize> = (0..n2).collect();
    cols.shuffle(&mut r);
    cols.truncate(2 * n2 / 3);
    cols.sort_unstable();

    let mut cells: Vec<(usize, usize)> = rows
        .iter()
        .flat_map(|&j| cols.iter().map(move |&k| (j, k)))
        .filter(|&(j, k)| y.is_observed(j, k))
        .collect();
    cells.shuffle(&mut r);
    cells.truncate(cells.len() / 2);
    cells.sort_unstable();

    let table = y.masked(&cells)?;
    let heldout = cells
        .iter()
        .map(|&(j, k)| HeldOutCell {
            row: j,
            col: k,
            value: y.get(j, k),
        })
        .collect();
    Ok(Holdout {
        table,
        heldout,
        rows,
        cols,
    })
}

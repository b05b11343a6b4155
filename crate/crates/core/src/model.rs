//! Domain types and likelihoods shared by both inference engines.
//!
//! Group indices are zero-based throughout the crate.

use serde::{Deserialize, Serialize};

use crate::special::{ln_dirichlet_multinomial, ln_dirichlet_pdf};
use crate::{Error, Matrix, Result};

const LN_2PI: f64 = 1.837_877_066_409_345_5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LikelihoodKind {
    Gaussian,
    Bernoulli,
}

/// Observed `N1 x N2` table with a mask of observed cells.
#[derive(Clone, Debug, PartialEq)]
pub struct InteractionTable {
    n1: usize,
    n2: usize,
    values: Vec<f64>,
    mask: Vec<bool>,
    kind: LikelihoodKind,
}

impl InteractionTable {
    /// Fully observed table from row-major values.
    pub fn new(n1: usize, n2: usize, values: Vec<f64>, kind: LikelihoodKind) -> Result<Self> {
        let mask = vec![true; n1 * n2];
        Self::with_mask(n1, n2, values, mask, kind)
    }

    pub fn with_mask(
        n1: usize,
        n2: usize,
        values: Vec<f64>,
        mask: Vec<bool>,
        kind: LikelihoodKind,
    ) -> Result<Self> {
        if n1 == 0 || n2 == 0 {
            return Err(Error::InvalidInput("table must have at least one row and column".into()));
        }
        if values.len() != n1 * n2 || mask.len() != n1 * n2 {
            return Err(Error::Dimension(format!(
                "expected {} cells, got {} values and {} mask entries",
                n1 * n2,
                values.len(),
                mask.len()
            )));
        }
        let t = InteractionTable {
            n1,
            n2,
            values,
            mask,
            kind,
        };
        t.validate()?;
        Ok(t)
    }

    pub fn from_rows(rows: &[Vec<f64>], kind: LikelihoodKind) -> Result<Self> {
        let m = Matrix::from_rows(rows)?;
        Self::new(m.rows(), m.cols(), m.as_slice().to_vec(), kind)
    }

    fn validate(&self) -> Result<()> {
        for j in 0..self.n1 {
            for k in 0..self.n2 {
                if !self.is_observed(j, k) {
                    continue;
                }
                let y = self.get(j, k);
                if !y.is_finite() {
                    return Err(Error::InvalidInput(format!("cell ({j},{k}) is not finite")));
                }
                if self.kind == LikelihoodKind::Bernoulli && y != 0.0 && y != 1.0 {
                    return Err(Error::InvalidInput(format!(
                        "binary table has value {y} at ({j},{k})"
                    )));
                }
            }
        }
        if let Some(j) = (0..self.n1).find(|&j| self.row_observed(j) == 0) {
            return Err(Error::InvalidInput(format!("row {j} has no observed cells")));
        }
        if let Some(k) = (0..self.n2).find(|&k| self.col_observed(k) == 0) {
            return Err(Error::InvalidInput(format!("column {k} has no observed cells")));
        }
        Ok(())
    }

    #[inline]
    pub fn n1(&self) -> usize {
        self.n1
    }

    #[inline]
    pub fn n2(&self) -> usize {
        self.n2
    }

    #[inline]
    pub fn kind(&self) -> LikelihoodKind {
        self.kind
    }

    #[inline]
    pub fn get(&self, j: usize, k: usize) -> f64 {
        self.values[j * self.n2 + k]
    }

    #[inline]
    pub fn is_observed(&self, j: usize, k: usize) -> bool {
        self.mask[j * self.n2 + k]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    /// Observed cells in row-major order.
    pub fn observed_cells(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n1 * self.n2)
            .filter(|&c| self.mask[c])
            .map(|c| (c / self.n2, c % self.n2, self.values[c]))
    }

    pub fn observed_count(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }

    pub fn row_observed(&self, j: usize) -> usize {
        self.mask[j * self.n2..(j + 1) * self.n2].iter().filter(|&&m| m).count()
    }

    pub fn col_observed(&self, k: usize) -> usize {
        (0..self.n1).filter(|&j| self.is_observed(j, k)).count()
    }

    pub fn observed_mean(&self) -> f64 {
        let (s, n) = self
            .observed_cells()
            .fold((0.0, 0usize), |(s, n), (_, _, y)| (s + y, n + 1));
        s / n as f64
    }

    /// Sample standard deviation of the observed cells (zero for one cell).
    pub fn observed_sd(&self) -> f64 {
        let n = self.observed_count();
        if n < 2 {
            return 0.0;
        }
        let m = self.observed_mean();
        let ss: f64 = self.observed_cells().map(|(_, _, y)| (y - m).powi(2)).sum();
        (ss / (n - 1) as f64).sqrt()
    }

    /// Copy with the given cells marked missing. Fails if a row or column
    /// would lose all of its observed cells.
    pub fn masked(&self, cells: &[(usize, usize)]) -> Result<Self> {
        let mut mask = self.mask.clone();
        for &(j, k) in cells {
            if j >= self.n1 || k >= self.n2 {
                return Err(Error::Dimension(format!("cell ({j},{k}) out of range")));
            }
            mask[j * self.n2 + k] = false;
        }
        Self::with_mask(self.n1, self.n2, self.values.clone(), mask, self.kind)
    }

    pub fn transpose(&self) -> Self {
        let mut values = vec![0.0; self.values.len()];
        let mut mask = vec![false; self.mask.len()];
        for j in 0..self.n1 {
            for k in 0..self.n2 {
                values[k * self.n1 + j] = self.get(j, k);
                mask[k * self.n1 + j] = self.is_observed(j, k);
            }
        }
        InteractionTable {
            n1: self.n2,
            n2: self.n1,
            values,
            mask,
            kind: self.kind,
        }
    }

    /// Copy with rows reordered: row `i` of the result is row `perm[i]`.
    pub fn permute_rows(&self, perm: &[usize]) -> Result<Self> {
        let mut values = Vec::with_capacity(self.values.len());
        let mut mask = Vec::with_capacity(self.mask.len());
        for &src in perm {
            values.extend_from_slice(&self.values[src * self.n2..(src + 1) * self.n2]);
            mask.extend_from_slice(&self.mask[src * self.n2..(src + 1) * self.n2]);
        }
        Self::with_mask(self.n1, self.n2, values, mask, self.kind)
    }
}

/// Row-stochastic `N x K` matrix of membership vectors.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Matrix", into = "Matrix")]
pub struct MembershipMatrix(Matrix);

impl MembershipMatrix {
    pub const ROW_SUM_TOL: f64 = 1e-9;

    pub fn new(m: Matrix) -> Result<Self> {
        if m.cols() == 0 {
            return Err(Error::InvalidInput("membership matrix needs K >= 1".into()));
        }
        for (i, r) in m.iter_rows().enumerate() {
            if r.iter().any(|&v| !(v >= 0.0) || !v.is_finite()) {
                return Err(Error::InvalidInput(format!("membership row {i} has a negative entry")));
            }
            let s: f64 = r.iter().sum();
            if (s - 1.0).abs() > Self::ROW_SUM_TOL {
                return Err(Error::InvalidInput(format!("membership row {i} sums to {s}")));
            }
        }
        Ok(MembershipMatrix(m))
    }

    /// Normalizes each row of a nonnegative matrix (e.g. Dirichlet
    /// pseudocounts) into a membership matrix.
    pub fn from_unnormalized(m: &Matrix) -> Result<Self> {
        Self::new(m.row_normalized())
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        Self::new(Matrix::from_rows(rows)?)
    }

    pub fn uniform(n: usize, k: usize) -> Self {
        MembershipMatrix(Matrix::filled(n, k, 1.0 / k as f64))
    }

    pub fn n(&self) -> usize {
        self.0.rows()
    }

    pub fn k(&self) -> usize {
        self.0.cols()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        self.0.row(i)
    }

    pub fn matrix(&self) -> &Matrix {
        &self.0
    }

    /// Columns reordered so that group `g` of the result is group `perm[g]`
    /// of `self`.
    pub fn permute_groups(&self, perm: &[usize]) -> Self {
        MembershipMatrix(self.0.permute_cols(perm))
    }
}

impl TryFrom<Matrix> for MembershipMatrix {
    type Error = Error;

    fn try_from(m: Matrix) -> Result<Self> {
        MembershipMatrix::new(m)
    }
}

impl From<MembershipMatrix> for Matrix {
    fn from(m: MembershipMatrix) -> Matrix {
        m.0
    }
}

/// `K1 x K2` matrix of block interaction means or probabilities.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Matrix", into = "Matrix")]
pub struct Blockmodel(Matrix);

impl Blockmodel {
    pub fn new(m: Matrix) -> Result<Self> {
        if m.rows() == 0 || m.cols() == 0 {
            return Err(Error::InvalidInput("blockmodel must be at least 1x1".into()));
        }
        if m.as_slice().iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("blockmodel entries must be finite".into()));
        }
        Ok(Blockmodel(m))
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        Self::new(Matrix::from_rows(rows)?)
    }

    /// Additionally checks that every entry is a probability.
    pub fn check_kind(&self, kind: LikelihoodKind) -> Result<()> {
        if kind == LikelihoodKind::Bernoulli
            && self.0.as_slice().iter().any(|&v| !(0.0..=1.0).contains(&v))
        {
            return Err(Error::InvalidInput("binary blockmodel entries must lie in [0,1]".into()));
        }
        Ok(())
    }

    pub fn k1(&self) -> usize {
        self.0.rows()
    }

    pub fn k2(&self) -> usize {
        self.0.cols()
    }

    #[inline]
    pub fn get(&self, g: usize, h: usize) -> f64 {
        self.0[(g, h)]
    }

    pub fn matrix(&self) -> &Matrix {
        &self.0
    }

    pub(crate) fn matrix_mut(&mut self) -> &mut Matrix {
        &mut self.0
    }

    pub fn min(&self) -> f64 {
        self.0.as_slice().iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.0.as_slice().iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

impl TryFrom<Matrix> for Blockmodel {
    type Error = Error;

    fn try_from(m: Matrix) -> Result<Self> {
        Blockmodel::new(m)
    }
}

impl From<Blockmodel> for Matrix {
    fn from(b: Blockmodel) -> Matrix {
        b.0
    }
}

/// Dirichlet parameters for the row and column memberships and the noise
/// variance. A length-one `alpha` or `beta` is broadcast to a symmetric
/// Dirichlet.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Hyperparams {
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    pub sigma2: f64,
}

impl Hyperparams {
    pub fn symmetric(alpha: f64, beta: f64, sigma2: f64) -> Result<Self> {
        Self::new(vec![alpha], vec![beta], sigma2)
    }

    pub fn new(alpha: Vec<f64>, beta: Vec<f64>, sigma2: f64) -> Result<Self> {
        let h = Hyperparams {
            alpha,
            beta,
            sigma2,
        };
        h.validate()?;
        Ok(h)
    }

    pub fn validate(&self) -> Result<()> {
        let pos = |v: &[f64]| !v.is_empty() && v.iter().all(|&x| x > 0.0 && x.is_finite());
        if !pos(&self.alpha) || !pos(&self.beta) {
            return Err(Error::InvalidInput("Dirichlet parameters must be positive".into()));
        }
        if !(self.sigma2 > 0.0) || !self.sigma2.is_finite() {
            return Err(Error::InvalidInput("sigma2 must be positive".into()));
        }
        Ok(())
    }

    pub fn alpha_vec(&self, k1: usize) -> Result<Vec<f64>> {
        broadcast(&self.alpha, k1, "alpha")
    }

    pub fn beta_vec(&self, k2: usize) -> Result<Vec<f64>> {
        broadcast(&self.beta, k2, "beta")
    }
}

fn broadcast(v: &[f64], k: usize, name: &str) -> Result<Vec<f64>> {
    match v.len() {
        1 => Ok(vec![v[0]; k]),
        n if n == k => Ok(v.to_vec()),
        n => Err(Error::Dimension(format!("{name} has length {n}, expected 1 or {k}"))),
    }
}

/// Per-object Dirichlet parameters: one row per table row (`N1 x K1`) and
/// one row per table column (`N2 x K2`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Priors {
    pub rows: Matrix,
    pub cols: Matrix,
}

impl Priors {
    pub fn from_hyper(h: &Hyperparams, n1: usize, n2: usize, k1: usize, k2: usize) -> Result<Self> {
        let a = h.alpha_vec(k1)?;
        let b = h.beta_vec(k2)?;
        let mut rows = Matrix::zeros(n1, k1);
        for j in 0..n1 {
            rows.row_mut(j).copy_from_slice(&a);
        }
        let mut cols = Matrix::zeros(n2, k2);
        for k in 0..n2 {
            cols.row_mut(k).copy_from_slice(&b);
        }
        Ok(Priors { rows, cols })
    }

    pub fn k1(&self) -> usize {
        self.rows.cols()
    }

    pub fn k2(&self) -> usize {
        self.cols.cols()
    }

    pub fn check(&self, n1: usize, n2: usize) -> Result<()> {
        if self.rows.rows() != n1 || self.cols.rows() != n2 {
            return Err(Error::Dimension(format!(
                "priors cover {}x{} objects, table is {n1}x{n2}",
                self.rows.rows(),
                self.cols.rows()
            )));
        }
        let ok = |m: &Matrix| m.as_slice().iter().all(|&v| v > 0.0 && v.is_finite());
        if !ok(&self.rows) || !ok(&self.cols) {
            return Err(Error::InvalidInput("prior pseudocounts must be positive".into()));
        }
        Ok(())
    }
}

/// Single-membership indicators of one cell: the row group `D` and the
/// column group `E`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AssignmentPair {
    pub row_group: usize,
    pub col_group: usize,
}

impl AssignmentPair {
    pub fn new(row_group: usize, col_group: usize) -> Self {
        AssignmentPair {
            row_group,
            col_group,
        }
    }
}

/// `pi' B p`.
pub fn expected_value(pi: &[f64], b: &Blockmodel, p: &[f64]) -> Result<f64> {
    if pi.len() != b.k1() || p.len() != b.k2() {
        return Err(Error::Dimension(format!(
            "pi has {} groups and p has {}, blockmodel is {}x{}",
            pi.len(),
            p.len(),
            b.k1(),
            b.k2()
        )));
    }
    Ok(bilinear(pi, b.matrix(), p))
}

#[inline]
pub(crate) fn bilinear(u: &[f64], m: &Matrix, v: &[f64]) -> f64 {
    u.iter()
        .enumerate()
        .map(|(g, &ug)| ug * m.row(g).iter().zip(v).map(|(a, b)| a * b).sum::<f64>())
        .sum()
}

/// Log density of one observed cell given its block value.
#[inline]
pub fn cell_log_likelihood(kind: LikelihoodKind, y: f64, block: f64, sigma2: f64) -> f64 {
    match kind {
        LikelihoodKind::Gaussian => -0.5 * (LN_2PI + sigma2.ln()) - (y - block).powi(2) / (2.0 * sigma2),
        LikelihoodKind::Bernoulli => {
            if y == 1.0 {
                block.ln()
            } else {
                (1.0 - block).ln()
            }
        }
    }
}

/// Log of the complete-data likelihood `p(Y, X | Theta)` for memberships
/// `pi`, `p` and one indicator pair per observed cell (`assign` is row-major
/// over all cells; masked cells are skipped and may hold anything).
pub fn complete_log_likelihood(
    y: &InteractionTable,
    pi: &MembershipMatrix,
    p: &MembershipMatrix,
    assign: &[Option<AssignmentPair>],
    hyper: &Hyperparams,
    b: &Blockmodel,
) -> Result<f64> {
    let (n1, n2, k1, k2) = (y.n1(), y.n2(), b.k1(), b.k2());
    if pi.n() != n1 || p.n() != n2 || pi.k() != k1 || p.k() != k2 || assign.len() != n1 * n2 {
        return Err(Error::Dimension("table, memberships, assignments and B disagree".into()));
    }
    let alpha = hyper.alpha_vec(k1)?;
    let beta = hyper.beta_vec(k2)?;
    let mut total = 0.0;
    for j in 0..n1 {
        total += ln_dirichlet_pdf(pi.row(j), &alpha);
    }
    for k in 0..n2 {
        total += ln_dirichlet_pdf(p.row(k), &beta);
    }
    for (j, k, v) in y.observed_cells() {
        let a = assign[j * n2 + k].ok_or_else(|| {
            Error::InvalidInput(format!("observed cell ({j},{k}) has no assignment"))
        })?;
        if a.row_group >= k1 || a.col_group >= k2 {
            return Err(Error::Dimension(format!("assignment at ({j},{k}) out of range")));
        }
        total += pi.row(j)[a.row_group].ln() + p.row(k)[a.col_group].ln();
        total += cell_log_likelihood(y.kind(), v, b.get(a.row_group, a.col_group), hyper.sigma2);
    }
    Ok(total)
}

/// Largest number of joint indicator configurations the exact routines
/// will enumerate.
pub const MAX_ENUMERATION: u64 = 1 << 24;

/// Result of exhaustively enumerating every joint indicator configuration.
#[derive(Clone, Debug)]
pub struct ExactPosterior {
    /// `log p(Y | Theta)`.
    pub log_marginal: f64,
    /// For each observed cell (row-major), the posterior probability of each
    /// `(g, h)` pair, stored at index `g * K2 + h`.
    pub cell_marginals: Vec<Vec<f64>>,
}

/// Exact `log p(Y | Theta)` with memberships integrated analytically,
/// by summing over every joint assignment of the observed cells.
pub fn marginal_log_likelihood_exact(
    y: &InteractionTable,
    hyper: &Hyperparams,
    b: &Blockmodel,
) -> Result<f64> {
    Ok(exact_posterior(y, hyper, b)?.log_marginal)
}

/// Exact enumeration of the indicator posterior `p(D, E | Y, Theta)` on a
/// tiny table. Refuses tables with more than 16 cells or more than
/// [`MAX_ENUMERATION`] configurations.
pub fn exact_posterior(y: &InteractionTable, hyper: &Hyperparams, b: &Blockmodel) -> Result<ExactPosterior> {
    let (n1, n2, k1, k2) = (y.n1(), y.n2(), b.k1(), b.k2());
    let cells: Vec<(usize, usize, f64)> = y.observed_cells().collect();
    let total = (n1 * n2 <= 16)
        .then(|| ((k1 * k2) as u64).checked_pow(cells.len() as u32))
        .flatten()
        .filter(|&c| c <= MAX_ENUMERATION)
        .ok_or_else(|| {
            Error::TooLarge(format!(
                "{} observed cells with {}x{} groups",
                cells.len(),
                k1,
                k2
            ))
        })?;
    let alpha = hyper.alpha_vec(k1)?;
    let beta = hyper.beta_vec(k2)?;
    // Per-cell log likelihood for every (g, h).
    let ll: Vec<Vec<f64>> = cells
        .iter()
        .map(|&(_, _, v)| {
            (0..k1 * k2)
                .map(|gh| cell_log_likelihood(y.kind(), v, b.get(gh / k2, gh % k2), hyper.sigma2))
                .collect()
        })
        .collect();

    let mut digits = vec![0usize; cells.len()];
    let mut row_counts = vec![0u32; n1 * k1];
    let mut col_counts = vec![0u32; n2 * k2];
    for &(j, k, _) in &cells {
        row_counts[j * k1] += 1;
        col_counts[k * k2] += 1;
    }
    let mut running_max = f64::NEG_INFINITY;
    let mut running_sum = 0.0;
    let mut weights_acc = vec![vec![0.0; k1 * k2]; cells.len()];

    for step in 0..total {
        if step > 0 {
            // Odometer increment, updating counts for each changed digit.
            let mut c = cells.len() - 1;
            loop {
                let (j, k, _) = cells[c];
                let old = digits[c];
                let new = (old + 1) % (k1 * k2);
                row_counts[j * k1 + old / k2] -= 1;
                col_counts[k * k2 + old % k2] -= 1;
                row_counts[j * k1 + new / k2] += 1;
                col_counts[k * k2 + new % k2] += 1;
                digits[c] = new;
                if new != 0 || c == 0 {
                    break;
                }
                c -= 1;
            }
        }
        let mut lw: f64 = digits.iter().zip(&ll).map(|(&d, l)| l[d]).sum();
        for j in 0..n1 {
            lw += ln_dirichlet_multinomial(&row_counts[j * k1..(j + 1) * k1], &alpha);
        }
        for k in 0..n2 {
            lw += ln_dirichlet_multinomial(&col_counts[k * k2..(k + 1) * k2], &beta);
        }
        if lw == f64::NEG_INFINITY {
            continue;
        }
        // Streaming log-sum-exp, rescaling the per-cell accumulators too.
        if lw > running_max {
            let scale = (running_max - lw).exp();
            running_sum *= scale;
            for acc in &mut weights_acc {
                acc.iter_mut().for_each(|w| *w *= scale);
            }
            running_max = lw;
        }
        let w = (lw - running_max).exp();
        running_sum += w;
        for (acc, &d) in weights_acc.iter_mut().zip(&digits) {
            acc[d] += w;
        }
    }
    let cell_marginals = weights_acc
        .into_iter()
        .map(|acc| acc.into_iter().map(|w| w / running_sum).collect())
        .collect();
    Ok(ExactPosterior {
        log_marginal: running_max + running_sum.ln(),
        cell_marginals,
    })
}

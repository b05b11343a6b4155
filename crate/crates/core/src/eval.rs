//! Scoring fitted models against known truth.
//!
//! Group labels are only identified up to permutation, so every comparison
//! starts with [`align`]: estimated membership columns are matched to true
//! columns by minimizing the total absolute difference. Accuracies, the
//! blockmodel error and the block recall/precision then work on aligned
//! labels.

use serde::{Deserialize, Serialize};

use crate::{Blockmodel, Error, Matrix, MembershipMatrix, Result};

/// Largest group count aligned by exhaustive search.
pub const EXHAUSTIVE_MAX_K: usize = 9;

/// A permutation `perm` with `perm[g]` the estimated group matched to true
/// group `g`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SideAlignment {
    pub perm: Vec<usize>,
    pub cost: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlignmentResult {
    pub row_perm: Vec<usize>,
    pub col_perm: Vec<usize>,
    pub cost: f64,
}

impl AlignmentResult {
    pub fn identity(k1: usize, k2: usize) -> Self {
        AlignmentResult {
            row_perm: (0..k1).collect(),
            col_perm: (0..k2).collect(),
            cost: 0.0,
        }
    }
}

/// `C[g][e] = sum_j |truth[j, g] - est[j, e]|`.
pub fn alignment_costs(est: &MembershipMatrix, truth: &MembershipMatrix) -> Result<Matrix> {
    if est.n() != truth.n() || est.k() != truth.k() {
        return Err(Error::Dimension(format!(
            "cannot align {}x{} estimate with {}x{} truth",
            est.n(),
            est.k(),
            truth.n(),
            truth.k()
        )));
    }
    let k = est.k();
    let mut c = Matrix::zeros(k, k);
    for j in 0..est.n() {
        let (e, t) = (est.row(j), truth.row(j));
        for g in 0..k {
            for f in 0..k {
                c[(g, f)] += (t[g] - e[f]).abs();
            }
        }
    }
    Ok(c)
}

/// Exhaustive minimum-cost assignment. Permutations are visited in
/// lexicographic order and only a strictly smaller cost replaces the
/// incumbent, so ties resolve to the lexicographically first permutation.
pub fn exhaustive_assignment(cost: &Matrix) -> (Vec<usize>, f64) {
    fn walk(cost: &Matrix, g: usize, used: &mut [bool], cur: &mut Vec<usize>, acc: f64, best: &mut (Vec<usize>, f64)) {
        let k = cost.rows();
        if g == k {
            if acc < best.1 {
                *best = (cur.clone(), acc);
            }
            return;
        }
        for f in 0..k {
            if used[f] {
                continue;
            }
            let next = acc + cost[(g, f)];
            // Branch-and-bound: costs are nonnegative.
            if next >= best.1 {
                continue;
            }
            used[f] = true;
            cur.push(f);
            walk(cost, g + 1, used, cur, next, best);
            cur.pop();
            used[f] = false;
        }
    }
    let k = cost.rows();
    let mut best = (Vec::new(), f64::INFINITY);
    walk(cost, 0, &mut vec![false; k], &mut Vec::with_capacity(k), 0.0, &mut best);
    if best.0.is_empty() && k > 0 {
        // All finite paths tie at +inf only when costs are infinite.
        best = ((0..k).collect(), (0..k).map(|g| cost[(g, g)]).sum());
    }
    best
}

/// Hungarian minimum-cost assignment on a square cost matrix
/// (shortest augmenting paths with row and column potentials).
pub fn hungarian(cost: &Matrix) -> (Vec<usize>, f64) {
    let k = cost.rows();
    // 1-based arrays; index 0 is the virtual source column.
    let mut u = vec![0.0; k + 1];
    let mut v = vec![0.0; k + 1];
    let mut owner = vec![0usize; k + 1];
    let mut way = vec![0usize; k + 1];
    for i in 1..=k {
        owner[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; k + 1];
        let mut used = vec![false; k + 1];
        loop {
            used[j0] = true;
            let i0 = owner[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=k {
                if used[j] {
                    continue;
                }
                let cur = cost[(i0 - 1, j - 1)] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=k {
                if used[j] {
                    u[owner[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if owner[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            owner[j0] = owner[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut perm = vec![0; k];
    for j in 1..=k {
        perm[owner[j] - 1] = j - 1;
    }
    let total = perm.iter().enumerate().map(|(g, &f)| cost[(g, f)]).sum();
    (perm, total)
}

/// Permutation of the estimated groups that best matches the truth.
/// Exhaustive for `K <= EXHAUSTIVE_MAX_K`, Hungarian above.
pub fn align(est: &MembershipMatrix, truth: &MembershipMatrix) -> Result<SideAlignment> {
    let c = alignment_costs(est, truth)?;
    let (perm, cost) = if c.rows() <= EXHAUSTIVE_MAX_K {
        exhaustive_assignment(&c)
    } else {
        hungarian(&c)
    };
    Ok(SideAlignment { perm, cost })
}

/// Aligns both sides of a fit.
pub fn align_model(
    est_pi: &MembershipMatrix,
    true_pi: &MembershipMatrix,
    est_p: &MembershipMatrix,
    true_p: &MembershipMatrix,
) -> Result<AlignmentResult> {
    let r = align(est_pi, true_pi)?;
    let c = align(est_p, true_p)?;
    Ok(AlignmentResult {
        cost: r.cost + c.cost,
        row_perm: r.perm,
        col_perm: c.perm,
    })
}

/// Blockmodel relabeled to the truth's groups: entry `(g, h)` of the result
/// is `B(row_perm[g], col_perm[h])`.
pub fn align_blockmodel(b: &Blockmodel, a: &AlignmentResult) -> Result<Blockmodel> {
    if a.row_perm.len() != b.k1() || a.col_perm.len() != b.k2() {
        return Err(Error::Dimension("alignment does not match blockmodel shape".into()));
    }
    Blockmodel::new(b.matrix().permute_rows(&a.row_perm).permute_cols(&a.col_perm))
}

/// Indices of the largest and second-largest entries; ties go to the lower
/// index.
pub fn top_two(v: &[f64]) -> (usize, Option<usize>) {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[b].total_cmp(&v[a]).then(a.cmp(&b)));
    (idx[0], idx.get(1).copied())
}

/// Rank-`rank` accuracy of pre-aligned memberships, with the number of
/// objects it was computed over.
///
/// Rank 1 compares argmaxes over all objects. Rank 2 only counts objects
/// whose estimated second-largest component exceeds
/// `1 / (threshold_divisor * K)` and compares second argmaxes; it is `None`
/// when no object qualifies.
pub fn membership_accuracy(
    est: &MembershipMatrix,
    truth: &MembershipMatrix,
    rank: usize,
    threshold_divisor: f64,
) -> Result<(Option<f64>, usize)> {
    if est.n() != truth.n() || est.k() != truth.k() {
        return Err(Error::Dimension("estimate and truth shapes differ".into()));
    }
    let mut hits = 0usize;
    let mut n = 0usize;
    match rank {
        1 => {
            for j in 0..est.n() {
                n += 1;
                hits += usize::from(top_two(est.row(j)).0 == top_two(truth.row(j)).0);
            }
        }
        2 => {
            let threshold = 1.0 / (threshold_divisor * est.k() as f64);
            for j in 0..est.n() {
                let (_, e2) = top_two(est.row(j));
                let Some(e2) = e2 else { continue };
                if est.row(j)[e2] <= threshold {
                    continue;
                }
                n += 1;
                hits += usize::from(Some(e2) == top_two(truth.row(j)).1);
            }
        }
        _ => return Err(Error::InvalidInput(format!("rank must be 1 or 2, got {rank}"))),
    }
    Ok(((n > 0).then(|| hits as f64 / n as f64), n))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AccuracyReport {
    pub first_row: f64,
    pub first_col: f64,
    pub second_row: Option<f64>,
    pub second_col: Option<f64>,
    pub second_row_n: usize,
    pub second_col_n: usize,
}

/// Rank 1 and rank 2 accuracy on both sides, after aligning each side.
pub fn accuracy_report(
    est_pi: &MembershipMatrix,
    true_pi: &MembershipMatrix,
    est_p: &MembershipMatrix,
    true_p: &MembershipMatrix,
) -> Result<(AccuracyReport, AlignmentResult)> {
    let a = align_model(est_pi, true_pi, est_p, true_p)?;
    let pi = est_pi.permute_groups(&a.row_perm);
    let p = est_p.permute_groups(&a.col_perm);
    let (first_row, _) = membership_accuracy(&pi, true_pi, 1, 10.0)?;
    let (first_col, _) = membership_accuracy(&p, true_p, 1, 10.0)?;
    let (second_row, second_row_n) = membership_accuracy(&pi, true_pi, 2, 10.0)?;
    let (second_col, second_col_n) = membership_accuracy(&p, true_p, 2, 10.0)?;
    Ok((
        AccuracyReport {
            first_row: first_row.unwrap_or(0.0),
            first_col: first_col.unwrap_or(0.0),
            second_row,
            second_col,
            second_row_n,
            second_col_n,
        },
        a,
    ))
}

/// Blockmodel error under both norm conventions.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlockmodelError {
    /// Entrywise mean absolute error.
    pub mae: f64,
    /// Induced 1-norm (largest column sum) of `|B - B_hat|`.
    pub induced_one_norm: f64,
}

fn aligned_diff(true_b: &Blockmodel, est_b: &Blockmodel, a: &AlignmentResult) -> Result<Matrix> {
    if true_b.k1() != est_b.k1() || true_b.k2() != est_b.k2() {
        return Err(Error::Dimension(format!(
            "blockmodels are {}x{} and {}x{}",
            true_b.k1(),
            true_b.k2(),
            est_b.k1(),
            est_b.k2()
        )));
    }
    let e = align_blockmodel(est_b, a)?;
    let mut d = Matrix::zeros(true_b.k1(), true_b.k2());
    for g in 0..true_b.k1() {
        for h in 0..true_b.k2() {
            d[(g, h)] = (true_b.get(g, h) - e.get(g, h)).abs();
        }
    }
    Ok(d)
}

/// `(1 / (K1 K2)) sum_gh |B(g,h) - B_hat(row_perm[g], col_perm[h])|`.
pub fn blockmodel_error(true_b: &Blockmodel, est_b: &Blockmodel, a: &AlignmentResult) -> Result<f64> {
    let d = aligned_diff(true_b, est_b, a)?;
    Ok(d.as_slice().iter().sum::<f64>() / d.as_slice().len() as f64)
}

pub fn blockmodel_errors(true_b: &Blockmodel, est_b: &Blockmodel, a: &AlignmentResult) -> Result<BlockmodelError> {
    let d = aligned_diff(true_b, est_b, a)?;
    let induced_one_norm = (0..d.cols())
        .map(|h| (0..d.rows()).map(|g| d[(g, h)]).sum::<f64>())
        .fold(0.0, f64::max);
    Ok(BlockmodelError {
        mae: d.as_slice().iter().sum::<f64>() / d.as_slice().len() as f64,
        induced_one_norm,
    })
}

/// Mean absolute cell error `sum |rho - rho_hat| / (N1 N2)`.
pub fn censoring_error(rho: &Matrix, rho_hat: &Matrix) -> Result<f64> {
    if rho.rows() != rho_hat.rows() || rho.cols() != rho_hat.cols() {
        return Err(Error::Dimension("censoring error needs equal shapes".into()));
    }
    if rho.as_slice().iter().chain(rho_hat.as_slice()).any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("censoring error needs finite values".into()));
    }
    let n = rho.as_slice().len() as f64;
    Ok(rho.as_slice().iter().zip(rho_hat.as_slice()).map(|(a, b)| (a - b).abs()).sum::<f64>() / n)
}

/// Recall and precision of positive cells recovered by biclusters.
///
/// Partitions are given as a block label per cell. Each estimated block is
/// matched to the true block it overlaps most (lowest label on ties). A true
/// block is positive when at least half of its cells are positive, and the
/// cells of every estimated block matched to a positive true block are
/// predicted positive. A ratio with an empty denominator is reported as 1.
pub fn block_recall_precision(est_blocks: &[usize], true_blocks: &[usize], positives: &[bool]) -> Result<(f64, f64)> {
    let n = est_blocks.len();
    if true_blocks.len() != n || positives.len() != n {
        return Err(Error::Dimension("partitions and predicate must cover the same cells".into()));
    }
    if n == 0 {
        return Ok((1.0, 1.0));
    }
    let n_est = est_blocks.iter().max().unwrap() + 1;
    let n_true = true_blocks.iter().max().unwrap() + 1;
    let mut overlap = vec![0usize; n_est * n_true];
    let mut true_size = vec![0usize; n_true];
    let mut true_pos = vec![0usize; n_true];
    for ((&e, &t), &p) in est_blocks.iter().zip(true_blocks).zip(positives) {
        overlap[e * n_true + t] += 1;
        true_size[t] += 1;
        true_pos[t] += usize::from(p);
    }
    let positive_block: Vec<bool> = (0..n_true).map(|t| true_size[t] > 0 && 2 * true_pos[t] >= true_size[t]).collect();
    let predicted: Vec<bool> = (0..n_est)
        .map(|e| {
            let row = &overlap[e * n_true..(e + 1) * n_true];
            let best = (0..n_true).fold(0, |b, t| if row[t] > row[b] { t } else { b });
            row[best] > 0 && positive_block[best]
        })
        .collect();
    let mut tp = 0usize;
    let mut pred = 0usize;
    let mut pos = 0usize;
    for (&e, &p) in est_blocks.iter().zip(positives) {
        let hit = predicted[e];
        pred += usize::from(hit);
        pos += usize::from(p);
        tp += usize::from(hit && p);
    }
    let ratio = |a: usize, b: usize| if b == 0 { 1.0 } else { a as f64 / b as f64 };
    Ok((ratio(tp, pos), ratio(tp, pred)))
}

/// `-2 log_l + k1 k2 ln(n1 n2)`.
pub fn bic(log_l: f64, k1: usize, k2: usize, n1: usize, n2: usize) -> f64 {
    -2.0 * log_l + (k1 * k2) as f64 * ((n1 * n2) as f64).ln()
}

/// For each row object, the column group with the largest `|B|` in the row
/// of its `rank`-th largest membership (ties to the lowest index). Objects
/// without a `rank`-th component get `None`.
pub fn class_assignment(est_pi: &MembershipMatrix, b: &Blockmodel, rank: usize) -> Result<Vec<Option<usize>>> {
    if est_pi.k() != b.k1() {
        return Err(Error::Dimension("membership groups do not match blockmodel rows".into()));
    }
    if rank != 1 && rank != 2 {
        return Err(Error::InvalidInput(format!("rank must be 1 or 2, got {rank}")));
    }
    Ok((0..est_pi.n())
        .map(|j| {
            let (first, second) = top_two(est_pi.row(j));
            let g = if rank == 1 { Some(first) } else { second }?;
            let row: Vec<f64> = (0..b.k2()).map(|h| b.get(g, h).abs()).collect();
            Some(top_two(&row).0)
        })
        .collect())
}

/// Majority class of the columns in each block (lowest class on ties);
/// `None` for blocks with no columns.
pub fn majority_class_labels(block_of: &[usize], class_of: &[usize], n_blocks: usize) -> Result<Vec<Option<usize>>> {
    if block_of.len() != class_of.len() {
        return Err(Error::Dimension("every column needs a block and a class".into()));
    }
    if let Some(&b) = block_of.iter().find(|&&b| b >= n_blocks) {
        return Err(Error::InvalidInput(format!("block index {b} out of range")));
    }
    let n_classes = class_of.iter().max().map_or(0, |m| m + 1);
    let mut counts = vec![vec![0usize; n_classes]; n_blocks];
    for (&b, &c) in block_of.iter().zip(class_of) {
        counts[b][c] += 1;
    }
    Ok(counts
        .iter()
        .map(|row| {
            let best = (0..n_classes).fold(0, |b, c| if row[c] > row[b] { c } else { b });
            (n_classes > 0 && row[best] > 0).then_some(best)
        })
        .collect())
}

/// Mean and sample standard deviation across replicates.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MeanSd {
    pub mean: f64,
    pub sd: f64,
    pub n: usize,
}

impl MeanSd {
    pub fn of(values: &[f64]) -> Option<MeanSd> {
        let n = values.len();
        if n == 0 {
            return None;
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let sd = if n > 1 {
            (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64).sqrt()
        } else {
            0.0
        };
        Some(MeanSd { mean, sd, n })
    }
}

impl std::fmt::Display for MeanSd {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{:.3} ({:.3})", self.mean, self.sd)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn mm(rows: &[Vec<f64>]) -> MembershipMatrix {
        MembershipMatrix::from_rows(rows).unwrap()
    }

    fn random_mm(seed: u64, n: usize, k: usize, a: f64) -> MembershipMatrix {
        let mut r = rng::seeded(seed);
        let rows: Vec<Vec<f64>> = (0..n).map(|_| rng::dirichlet(&mut r, &vec![a; k])).collect();
        mm(&rows)
    }

    fn permutations(k: usize) -> Vec<Vec<usize>> {
        if k == 0 {
            return vec![vec![]];
        }
        let mut out = vec![];
        for p in permutations(k - 1) {
            for i in 0..k {
                let mut q = p.clone();
                q.insert(i, k - 1);
                out.push(q);
            }
        }
        out
    }

    #[test]
    fn align_identity_and_swap() {
        let t = random_mm(1, 10, 3, 0.5);
        let a = align(&t, &t).unwrap();
        assert_eq!(a.perm, vec![0, 1, 2]);
        assert_eq!(a.cost, 0.0);
        let swapped = t.permute_groups(&[2, 0, 1]);
        let a = align(&swapped, &t).unwrap();
        assert_eq!(swapped.permute_groups(&a.perm), t);
        assert_abs_diff_eq!(a.cost, 0.0, epsilon = 1e-12);
        assert!(align(&t, &random_mm(1, 9, 3, 0.5)).is_err());
    }

    #[test]
    fn align_matches_brute_force() {
        for seed in 0..20 {
            let t = random_mm(seed, 10, 3, 0.5);
            let noise = random_mm(seed + 100, 10, 3, 1.0);
            let est_rows: Vec<Vec<f64>> = (0..10)
                .map(|j| {
                    let v: Vec<f64> = (0..3).map(|g| 0.6 * t.row(j)[g] + 0.4 * noise.row(j)[g]).collect();
                    vec![v[1], v[2], v[0]]
                })
                .collect();
            let est = mm(&est_rows);
            let oracle = permutations(3)
                .into_iter()
                .map(|p| {
                    let c: f64 = (0..10)
                        .map(|j| (0..3).map(|g| (est.row(j)[p[g]] - t.row(j)[g]).abs()).sum::<f64>())
                        .sum();
                    (p, c)
                })
                .min_by(|a, b| a.1.total_cmp(&b.1))
                .unwrap();
            let a = align(&est, &t).unwrap();
            assert_eq!(a.perm, oracle.0);
            assert_abs_diff_eq!(a.cost, oracle.1, epsilon = 1e-12);
        }
    }

    #[test]
    fn hungarian_agrees_with_exhaustive() {
        for seed in 0..10 {
            let t = random_mm(seed, 40, 6, 0.3);
            let e = random_mm(seed + 50, 40, 6, 0.3);
            let c = alignment_costs(&e, &t).unwrap();
            let (_, ce) = exhaustive_assignment(&c);
            let (p, ch) = hungarian(&c);
            let mut sorted = p.clone();
            sorted.sort();
            assert_eq!(sorted, (0..6).collect::<Vec<_>>());
            assert_abs_diff_eq!(ce, ch, epsilon = 1e-9);
        }
        let t = random_mm(3, 30, 11, 0.2);
        let a = align(&t.permute_groups(&[10, 9, 8, 7, 6, 5, 4, 3, 2, 1, 0]), &t).unwrap();
        assert_eq!(a.perm, vec![10, 9, 8, 7, 6, 5, 4, 3, 2, 1, 0]);
    }

    #[test]
    fn exhaustive_ties_take_first_permutation() {
        let c = Matrix::filled(3, 3, 1.0);
        assert_eq!(exhaustive_assignment(&c).0, vec![0, 1, 2]);
    }

    #[test]
    fn accuracy_basics() {
        let t = random_mm(4, 50, 4, 0.3);
        assert_eq!(membership_accuracy(&t, &t, 1, 10.0).unwrap(), (Some(1.0), 50));
        assert!(membership_accuracy(&t, &t, 3, 10.0).is_err());
        let one_hot = mm(&[vec![1.0, 0.0], vec![0.0, 1.0]]);
        assert_eq!(membership_accuracy(&one_hot, &one_hot, 2, 10.0).unwrap(), (None, 0));
    }

    #[test]
    fn second_rank_threshold() {
        // K = 2: threshold 1/20 = 0.05.
        let truth = mm(&[vec![0.7, 0.3], vec![0.6, 0.4], vec![0.9, 0.1]]);
        let est = mm(&[vec![0.8, 0.2], vec![0.96, 0.04], vec![0.3, 0.7]]);
        // row 0 qualifies and matches, row 1 is below threshold, row 2 qualifies and misses
        assert_eq!(membership_accuracy(&est, &truth, 2, 10.0).unwrap(), (Some(0.5), 2));
        assert_eq!(membership_accuracy(&est, &truth, 1, 10.0).unwrap(), (Some(2.0 / 3.0), 3));
    }

    #[test]
    fn uniform_estimate_baseline() {
        let mut r = rng::seeded(11);
        let n = 10_000;
        let truth_rows: Vec<Vec<f64>> = (0..n).map(|_| rng::dirichlet(&mut r, &[1.0; 6])).collect();
        let truth = mm(&truth_rows);
        let est = MembershipMatrix::uniform(n, 6);
        let (acc, _) = membership_accuracy(&est, &truth, 1, 10.0).unwrap();
        assert!((acc.unwrap() - 1.0 / 6.0).abs() < 0.02);
    }

    #[test]
    fn blockmodel_error_cases() {
        let b = Blockmodel::from_rows(&[vec![0.1, -0.4, 1.2], vec![0.9, 0.0, -2.0]]).unwrap();
        let id = AlignmentResult::identity(2, 3);
        assert_eq!(blockmodel_error(&b, &b, &id).unwrap(), 0.0);
        let shifted = Blockmodel::new(Matrix::from_vec(2, 3, b.matrix().as_slice().iter().map(|v| v + 0.3).collect()).unwrap()).unwrap();
        assert_abs_diff_eq!(blockmodel_error(&b, &shifted, &id).unwrap(), 0.3, epsilon = 1e-15);

        // Estimated rows swapped and columns rotated, then aligned back.
        let est = Blockmodel::from_rows(&[vec![0.0, -2.0, 1.0], vec![-0.4, 1.2, 0.1]]).unwrap();
        let a = AlignmentResult { row_perm: vec![1, 0], col_perm: vec![2, 0, 1], cost: 0.0 };
        // aligned estimate: [[0.1, -0.4, 1.2], [1.0, 0.0, -2.0]]
        let e = blockmodel_errors(&b, &est, &a).unwrap();
        assert_abs_diff_eq!(e.mae, 0.1 / 6.0, epsilon = 1e-15);
        assert_abs_diff_eq!(e.induced_one_norm, 0.1, epsilon = 1e-15);
        // hand-entry sum oracle on an unaligned pair
        let c = Blockmodel::from_rows(&[vec![0.0, 0.0, 0.0], vec![1.0, 1.0, 1.0]]).unwrap();
        let oracle = (0.1 + 0.4 + 1.2 + 0.1 + 1.0 + 3.0) / 6.0;
        assert_abs_diff_eq!(blockmodel_error(&b, &c, &id).unwrap(), oracle, epsilon = 1e-15);
        assert!(blockmodel_error(&b, &Blockmodel::from_rows(&[vec![0.0]]).unwrap(), &id).is_err());
    }

    #[test]
    fn censoring_error_cases() {
        let z = Matrix::zeros(3, 4);
        assert_eq!(censoring_error(&z, &z).unwrap(), 0.0);
        assert_abs_diff_eq!(censoring_error(&z, &Matrix::filled(3, 4, 0.1)).unwrap(), 0.1, epsilon = 1e-15);
        assert!(censoring_error(&z, &Matrix::zeros(4, 3)).is_err());
        assert!(censoring_error(&z, &Matrix::filled(3, 4, f64::NAN)).is_err());
    }

    #[test]
    fn recall_precision_cases() {
        let blocks = [0, 0, 1, 1, 2, 2];
        let pos = [true, true, false, false, true, true];
        assert_eq!(block_recall_precision(&blocks, &blocks, &pos).unwrap(), (1.0, 1.0));
        let half = [true, false, true, false, true, false];
        assert_eq!(block_recall_precision(&[0; 6], &[0; 6], &half).unwrap(), (1.0, 0.5));
    }

    #[test]
    fn recall_precision_six_blocks_against_oracle() {
        // 6 true blocks of 4 cells; estimated partition shifts every block by
        // one cell. Oracle computed by explicit enumeration of the matching.
        let true_blocks: Vec<usize> = (0..24).map(|c| c / 4).collect();
        let est_blocks: Vec<usize> = (0..24).map(|c| ((c + 1) % 24) / 4).collect();
        let pos: Vec<bool> = (0..24).map(|c| [0, 2, 5].contains(&(c / 4)) || c == 13).collect();
        // est block e holds cells 4e-1 .. 4e+2 (mod 24): 3 cells of true block
        // e and one of e-1, so it matches true block e.
        let positive_true = [true, false, true, false, false, true];
        let mut tp = 0;
        let mut pred = 0;
        for c in 0..24 {
            let hit = positive_true[est_blocks[c]];
            pred += hit as usize;
            tp += (hit && pos[c]) as usize;
        }
        let npos = pos.iter().filter(|&&p| p).count();
        let (r, p) = block_recall_precision(&est_blocks, &true_blocks, &pos).unwrap();
        assert_abs_diff_eq!(r, tp as f64 / npos as f64, epsilon = 1e-15);
        assert_abs_diff_eq!(p, tp as f64 / pred as f64, epsilon = 1e-15);
        assert_abs_diff_eq!(r, 10.0 / 13.0, epsilon = 1e-15);
        assert_abs_diff_eq!(p, 10.0 / 12.0, epsilon = 1e-15);
    }

    #[test]
    fn bic_cases() {
        assert_abs_diff_eq!(bic(-100.0, 2, 3, 10, 15), 230.0638, epsilon = 1e-4);
        assert_eq!(bic(-3.5, 1, 1, 1, 1), 7.0);
        assert!(bic(-100.0, 2, 3, 10, 15) < bic(-100.0, 3, 3, 10, 15));
    }

    #[test]
    fn class_assignment_cases() {
        let pi = mm(&[vec![1.0, 0.0], vec![0.0, 1.0]]);
        let b = Blockmodel::from_rows(&[vec![0.1, -3.0, 0.2, 0.0], vec![0.0, 0.0, 0.0, 0.0]]).unwrap();
        assert_eq!(class_assignment(&pi, &b, 1).unwrap(), vec![Some(1), Some(0)]);

        // 5 objects, K = (2, 4): two-argmax oracle by hand
        let pi = mm(&[
            vec![0.7, 0.3],
            vec![0.2, 0.8],
            vec![0.5, 0.5],
            vec![0.99, 0.01],
            vec![0.4, 0.6],
        ]);
        let b = Blockmodel::from_rows(&[vec![0.3, -0.9, 0.5, 0.1], vec![1.4, 0.2, -1.6, 0.0]]).unwrap();
        assert_eq!(
            class_assignment(&pi, &b, 1).unwrap(),
            vec![Some(1), Some(2), Some(1), Some(1), Some(2)]
        );
        assert_eq!(
            class_assignment(&pi, &b, 2).unwrap(),
            vec![Some(2), Some(1), Some(2), Some(2), Some(1)]
        );
    }

    #[test]
    fn majority_labels() {
        assert_eq!(majority_class_labels(&[0, 0, 0], &[2, 2, 2], 1).unwrap(), vec![Some(2)]);
        assert_eq!(majority_class_labels(&[0, 0, 0], &[0, 0, 1], 2).unwrap(), vec![Some(0), None]);
        assert_eq!(majority_class_labels(&[0, 0], &[1, 0], 1).unwrap(), vec![Some(0)]);

        let mut r = rng::seeded(61);
        let block_of: Vec<usize> = (0..61).map(|_| rng::categorical(&mut r, &[1.0; 7])).collect();
        let class_of: Vec<usize> = (0..61).map(|_| rng::categorical(&mut r, &[1.0; 4])).collect();
        let got = majority_class_labels(&block_of, &class_of, 8).unwrap();
        for b in 0..8 {
            let counts: Vec<usize> = (0..4)
                .map(|c| (0..61).filter(|&i| block_of[i] == b && class_of[i] == c).count())
                .collect();
            let max = *counts.iter().max().unwrap();
            let oracle = (max > 0).then(|| counts.iter().position(|&c| c == max).unwrap());
            assert_eq!(got[b], oracle);
        }
        assert_eq!(got[7], None);
    }

    #[test]
    fn mean_sd_format() {
        let s = MeanSd::of(&[0.9, 1.0, 0.95]).unwrap();
        assert_eq!(s.to_string(), "0.950 (0.050)");
        assert!(MeanSd::of(&[]).is_none());
    }

    fn b_strategy() -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(-3.0f64..3.0, 6)
    }

    proptest! {
        #[test]
        fn align_cost_invariant_under_joint_relabeling(seed in 0u64..1000, which in 0usize..6) {
            let t = random_mm(seed, 12, 3, 0.5);
            let e = random_mm(seed + 7, 12, 3, 0.5);
            let p = &permutations(3)[which];
            let a = align(&e, &t).unwrap();
            let b = align(&e.permute_groups(p), &t.permute_groups(p)).unwrap();
            prop_assert!((a.cost - b.cost).abs() < 1e-12);
        }

        #[test]
        fn self_accuracy_is_one(seed in 0u64..1000) {
            let t = random_mm(seed, 20, 4, 0.3);
            prop_assert_eq!(membership_accuracy(&t, &t, 1, 10.0).unwrap().0, Some(1.0));
        }

        #[test]
        fn blockmodel_error_is_metric(a in b_strategy(), b in b_strategy(), c in b_strategy()) {
            let m = |v: &Vec<f64>| Blockmodel::new(Matrix::from_vec(2, 3, v.clone()).unwrap()).unwrap();
            let id = AlignmentResult::identity(2, 3);
            let (ba, bb, bc) = (m(&a), m(&b), m(&c));
            let ab = blockmodel_error(&ba, &bb, &id).unwrap();
            prop_assert!(ab >= 0.0);
            prop_assert_eq!(blockmodel_error(&ba, &ba, &id).unwrap(), 0.0);
            prop_assert!((ab - blockmodel_error(&bb, &ba, &id).unwrap()).abs() < 1e-15);
            let ac = blockmodel_error(&ba, &bc, &id).unwrap();
            let cb = blockmodel_error(&bc, &bb, &id).unwrap();
            prop_assert!(ab <= ac + cb + 1e-12);
        }

        #[test]
        fn bic_penalty_difference(log_l in -1e4f64..0.0, k in 1usize..5, n1 in 2usize..50, n2 in 2usize..50) {
            let d = bic(log_l, k + 1, 3, n1, n2) - bic(log_l, k, 3, n1, n2);
            prop_assert!((d - 3.0 * ((n1 * n2) as f64).ln()).abs() < 1e-9 * (1.0 + log_l.abs()));
        }
    }
}

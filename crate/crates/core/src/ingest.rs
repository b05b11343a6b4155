//! Time-course tables to Fisher-transformed correlation tables, and class
//! label priors for the column memberships.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::io::BufRead;

use serde::{Deserialize, Serialize};

use crate::{Error, Matrix, Result};

/// Correlations are clipped to `+-(1 - RHO_CLIP)` before the Fisher
/// transform.
pub const RHO_CLIP: f64 = 1e-12;

/// `z = 0.5 ln((1 + rho) / (1 - rho))`.
pub fn fisher(rho: f64) -> Result<f64> {
    if !(rho.abs() < 1.0) {
        return Err(Error::Domain(format!("Fisher transform needs |rho| < 1, got {rho}")));
    }
    Ok(0.5 * ((1.0 + rho) / (1.0 - rho)).ln())
}

#[inline]
pub fn inverse_fisher(z: f64) -> f64 {
    z.tanh()
}

/// One series per object, all of the same length.
#[derive(Clone, Debug, PartialEq)]
pub struct TimeCourseSet {
    pub ids: Vec<String>,
    pub time_labels: Vec<String>,
    pub series: Vec<Vec<f64>>,
    /// Ids dropped at load because of a missing time point.
    pub excluded: Vec<String>,
}

impl TimeCourseSet {
    pub fn t(&self) -> usize {
        self.time_labels.len()
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }
}

pub(crate) fn detect_delimiter(line: &str) -> char {
    if line.contains('\t') {
        '\t'
    } else {
        ','
    }
}

fn is_missing(cell: &str) -> bool {
    matches!(cell, "" | "NA" | "NaN" | "nan" | "na")
}

/// Reads a delimited table: a header row (`id`, then one label per time
/// point) and one row per object. Comma or tab delimited, detected from the
/// header. Rows with a blank or `NA` cell are excluded and reported.
pub fn load_timecourses<R: BufRead>(source: R) -> Result<TimeCourseSet> {
    let mut lines = source.lines().enumerate();
    let (header, delim) = loop {
        match lines.next() {
            Some((i, l)) => {
                let l = l.map_err(|e| Error::Parse {
                    line: i + 1,
                    column: 0,
                    msg: e.to_string(),
                })?;
                if !l.trim().is_empty() {
                    let d = detect_delimiter(&l);
                    break (l, d);
                }
            }
            None => {
                return Err(Error::Parse {
                    line: 0,
                    column: 0,
                    msg: "empty input".into(),
                })
            }
        }
    };
    let time_labels: Vec<String> = header.split(delim).skip(1).map(|s| s.trim().to_string()).collect();
    let t = time_labels.len();
    if t < 4 {
        return Err(Error::InvalidInput(format!("need at least 4 time points, found {t}")));
    }
    let mut set = TimeCourseSet {
        ids: Vec::new(),
        time_labels,
        series: Vec::new(),
        excluded: Vec::new(),
    };
    let mut seen = HashSet::new();
    for (i, l) in lines {
        let line_no = i + 1;
        let l = l.map_err(|e| Error::Parse {
            line: line_no,
            column: 0,
            msg: e.to_string(),
        })?;
        if l.trim().is_empty() {
            continue;
        }
        let cells: Vec<&str> = l.split(delim).map(str::trim).collect();
        if cells.len() != t + 1 {
            return Err(Error::Parse {
                line: line_no,
                column: cells.len(),
                msg: format!("expected {} fields, found {}", t + 1, cells.len()),
            });
        }
        let id = cells[0].to_string();
        if !seen.insert(id.clone()) {
            return Err(Error::InvalidInput(format!("duplicate id {id:?} on line {line_no}")));
        }
        let mut values = Vec::with_capacity(t);
        let mut incomplete = false;
        for (c, cell) in cells[1..].iter().enumerate() {
            if is_missing(cell) {
                incomplete = true;
                continue;
            }
            let v: f64 = cell.parse().map_err(|_| Error::Parse {
                line: line_no,
                column: c + 2,
                msg: format!("{cell:?} is not a number (row {id})"),
            })?;
            values.push(v);
        }
        if incomplete {
            set.excluded.push(id);
        } else {
            set.ids.push(id);
            set.series.push(values);
        }
    }
    Ok(set)
}

/// Writes the format read by [`load_timecourses`] (comma delimited).
pub fn write_timecourses(set: &TimeCourseSet) -> String {
    let mut out = String::from("id");
    for l in &set.time_labels {
        out.push(',');
        out.push_str(l);
    }
    out.push('\n');
    for (id, s) in set.ids.iter().zip(&set.series) {
        out.push_str(id);
        for v in s {
            let _ = write!(out, ",{v}");
        }
        out.push('\n');
    }
    out
}

/// Sample correlations between every row object and column object, with
/// their Fisher transforms.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrelationTable {
    pub row_ids: Vec<String>,
    pub col_ids: Vec<String>,
    pub rho: Matrix,
    pub z: Matrix,
    pub t: usize,
    /// Cells whose correlation was clipped away from +-1.
    pub clipped: Vec<(usize, usize)>,
}

impl CorrelationTable {
    /// Standard error of a Fisher-transformed sample correlation.
    pub fn fisher_se(&self) -> f64 {
        1.0 / ((self.t as f64) - 3.0).sqrt()
    }
}

fn mean_sd(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let m = x.iter().sum::<f64>() / n;
    let ss: f64 = x.iter().map(|v| (v - m) * (v - m)).sum();
    (m, (ss / (n - 1.0)).sqrt())
}

/// `rho(j,k) = sum_t (G_jt - mean G_j)(M_kt - mean M_k) / ((T - 1) S_G S_M)`
/// followed by the Fisher transform. Perfect correlations are clipped and
/// flagged rather than rejected.
pub fn correlation(g: &TimeCourseSet, m: &TimeCourseSet) -> Result<CorrelationTable> {
    if g.t() != m.t() {
        return Err(Error::Dimension(format!(
            "series lengths differ: {} vs {}",
            g.t(),
            m.t()
        )));
    }
    let t = g.t();
    if t < 4 {
        return Err(Error::InvalidInput("need at least 4 time points".into()));
    }
    let centered = |set: &TimeCourseSet| -> Result<Vec<(Vec<f64>, f64)>> {
        set.ids
            .iter()
            .zip(&set.series)
            .map(|(id, s)| {
                let (mu, sd) = mean_sd(s);
                if !(sd > 0.0) {
                    return Err(Error::InvalidInput(format!("series {id:?} has zero variance")));
                }
                Ok((s.iter().map(|v| v - mu).collect(), sd))
            })
            .collect()
    };
    let gc = centered(g)?;
    let mc = centered(m)?;
    let mut rho = Matrix::zeros(gc.len(), mc.len());
    let mut z = Matrix::zeros(gc.len(), mc.len());
    let mut clipped = Vec::new();
    let bound = 1.0 - RHO_CLIP;
    for (j, (gs, gsd)) in gc.iter().enumerate() {
        for (k, (ms, msd)) in mc.iter().enumerate() {
            let cov: f64 = gs.iter().zip(ms).map(|(a, b)| a * b).sum();
            let mut r = cov / ((t as f64 - 1.0) * gsd * msd);
            if r.abs() > bound {
                r = r.signum() * bound;
                clipped.push((j, k));
            }
            rho[(j, k)] = r;
            z[(j, k)] = fisher(r)?;
        }
    }
    Ok(CorrelationTable {
        row_ids: g.ids.clone(),
        col_ids: m.ids.clone(),
        rho,
        z,
        t,
        clipped,
    })
}

/// Per-object Dirichlet pseudocounts built from known class labels.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassPrior {
    /// `strength` at the object's class, 1 elsewhere.
    pub raw: Matrix,
    /// Each row of `raw` scaled to sum to one.
    pub normalized: Matrix,
}

/// Class indices are zero-based here; class 0 with `k = 4` gives the row
/// `[strength, 1, 1, 1]`.
pub fn build_class_prior(class_of: &[usize], k: usize, strength: f64) -> Result<ClassPrior> {
    if k < 2 {
        return Err(Error::InvalidInput("need at least two classes".into()));
    }
    if !(strength > 0.0) {
        return Err(Error::InvalidInput("prior strength must be positive".into()));
    }
    let mut raw = Matrix::filled(class_of.len(), k, 1.0);
    for (i, &c) in class_of.iter().enumerate() {
        if c >= k {
            return Err(Error::InvalidInput(format!("class index {c} out of range for {k} classes")));
        }
        raw[(i, c)] = strength;
    }
    let normalized = raw.row_normalized();
    Ok(ClassPrior { raw, normalized })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn set(rows: &[(&str, &[f64])]) -> TimeCourseSet {
        let t = rows[0].1.len();
        TimeCourseSet {
            ids: rows.iter().map(|r| r.0.to_string()).collect(),
            time_labels: (1..=t).map(|i| format!("t{i}")).collect(),
            series: rows.iter().map(|r| r.1.to_vec()).collect(),
            excluded: vec![],
        }
    }

    #[test]
    fn fisher_values() {
        assert_eq!(fisher(0.0).unwrap(), 0.0);
        assert_eq!(inverse_fisher(0.0), 0.0);
        assert_abs_diff_eq!(fisher(0.5).unwrap(), 0.5 * 3f64.ln(), epsilon = 1e-15);
        assert_abs_diff_eq!(fisher(0.5).unwrap(), 0.549306, epsilon = 1e-6);
        assert!(fisher(1.0).is_err());
        assert!(fisher(-1.5).is_err());
    }

    #[test]
    fn fisher_round_trip_grid() {
        let mut worst: f64 = 0.0;
        for i in 0..1000 {
            let rho = -0.999 + 1.998 * (i as f64 + 0.5) / 1000.0;
            worst = worst.max((inverse_fisher(fisher(rho).unwrap()) - rho).abs());
        }
        assert!(worst < 1e-12, "{worst}");
    }

    #[test]
    fn load_complete_rows() {
        let src = "id,t1,t2,t3,t4\na,1,2,3,4\nb,2,2,3,1\nc,0.5,-1,2,3\n";
        let s = load_timecourses(src.as_bytes()).unwrap();
        assert_eq!(s.len(), 3);
        assert!(s.excluded.is_empty());
        assert_eq!(s.t(), 4);
    }

    #[test]
    fn load_excludes_incomplete_rows() {
        let src = "id\tt1\tt2\tt3\tt4\na\t1\t2\t3\t4\nb\t2\t\t3\t1\nc\t0.5\t-1\t2\t3\nd\t1\t1\t2\t3\n";
        let s = load_timecourses(src.as_bytes()).unwrap();
        assert_eq!(s.len(), 3);
        assert_eq!(s.excluded, vec!["b".to_string()]);
    }

    #[test]
    fn load_reports_bad_cell_position() {
        let src = "id,t1,t2,t3,t4\na,1,2,x3,4\n";
        match load_timecourses(src.as_bytes()) {
            Err(Error::Parse { line, column, .. }) => assert_eq!((line, column), (2, 4)),
            other => panic!("unexpected {other:?}"),
        }
        let dup = "id,t1,t2,t3,t4\na,1,2,3,4\na,1,2,3,5\n";
        assert!(load_timecourses(dup.as_bytes()).is_err());
    }

    #[test]
    fn write_read_round_trip_is_exact() {
        let s = set(&[("g1", &[0.1, 1.0 / 3.0, -2.5e-17, 7.0, 1e300]), ("g2", &[1.0, 2.0, 3.0, 4.0, 5.0])]);
        let back = load_timecourses(write_timecourses(&s).as_bytes()).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn perfect_correlations_are_clipped() {
        let g = set(&[("g", &[1.0, 2.0, 4.0, 3.0])]);
        let m = set(&[("same", &[1.0, 2.0, 4.0, 3.0]), ("neg", &[-1.0, -2.0, -4.0, -3.0])]);
        let c = correlation(&g, &m).unwrap();
        assert_eq!(c.rho[(0, 0)], 1.0 - RHO_CLIP);
        assert_eq!(c.rho[(0, 1)], -(1.0 - RHO_CLIP));
        assert_eq!(c.clipped, vec![(0, 0), (0, 1)]);
        assert!(c.z[(0, 0)].is_finite());
    }

    #[test]
    fn correlation_matches_two_pass_oracle() {
        let g = set(&[("g", &[1.0, 2.0, 3.0, 4.0, 5.0, 6.0])]);
        let m = set(&[("m", &[2.0, 1.0, 4.0, 3.0, 6.0, 5.0])]);
        // Two-pass textbook formula: means 3.5 and 3.5, sum of cross
        // products 14.5, sums of squares 17.5 and 17.5, so rho = 29/35.
        let c = correlation(&g, &m).unwrap();
        assert_abs_diff_eq!(c.rho[(0, 0)], 29.0 / 35.0, epsilon = 1e-14);
        assert_abs_diff_eq!(c.z[(0, 0)], fisher(29.0 / 35.0).unwrap(), epsilon = 1e-14);
        assert_abs_diff_eq!(c.fisher_se(), 1.0 / 3f64.sqrt(), epsilon = 1e-15);
    }

    #[test]
    fn zero_variance_series_rejected() {
        let g = set(&[("flat", &[1.0, 1.0, 1.0, 1.0])]);
        let m = set(&[("m", &[1.0, 2.0, 3.0, 5.0])]);
        match correlation(&g, &m) {
            Err(Error::InvalidInput(msg)) => assert!(msg.contains("flat")),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn class_prior_forms() {
        let p = build_class_prior(&[0, 2], 4, 100.0).unwrap();
        assert_eq!(p.raw.row(0), &[100.0, 1.0, 1.0, 1.0]);
        assert_eq!(p.raw.row(1), &[1.0, 1.0, 100.0, 1.0]);
        assert_abs_diff_eq!(p.normalized.row(1).iter().sum::<f64>(), 1.0, epsilon = 1e-15);
        assert!(p.normalized.row(1)[2] > p.normalized.row(1)[0]);
        let flat = build_class_prior(&[1], 4, 1.0).unwrap();
        assert_eq!(flat.raw.row(0), &[1.0; 4]);
        assert!(build_class_prior(&[4], 4, 100.0).is_err());
    }

    fn series() -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(-5.0f64..5.0, 6)
            .prop_filter("variance", |v| mean_sd(v).1 > 1e-3)
    }

    proptest! {
        #[test]
        fn correlation_transposes(a in series(), b in series(), c in series()) {
            let g = set(&[("a", &a), ("b", &b)]);
            let m = set(&[("c", &c)]);
            let gm = correlation(&g, &m).unwrap();
            let mg = correlation(&m, &g).unwrap();
            prop_assert!(gm.rho.transpose().max_abs_diff(&mg.rho) < 1e-14);
        }

        #[test]
        fn correlation_affine_invariant(a in series(), b in series(), scale in 0.1f64..10.0, shift in -5.0f64..5.0) {
            let g = set(&[("a", &a)]);
            let m = set(&[("b", &b)]);
            let moved: Vec<f64> = a.iter().map(|v| scale * v + shift).collect();
            let g2 = set(&[("a", &moved)]);
            let r1 = correlation(&g, &m).unwrap().rho[(0, 0)];
            let r2 = correlation(&g2, &m).unwrap().rho[(0, 0)];
            prop_assert!((r1 - r2).abs() < 1e-12);
        }

        #[test]
        fn fisher_odd_and_increasing(x in -0.99f64..0.99, d in 1e-6f64..0.009) {
            prop_assert!((fisher(-x).unwrap() + fisher(x).unwrap()).abs() < 1e-14);
            prop_assert!(fisher(x + d).unwrap() > fisher(x).unwrap());
        }
    }
}

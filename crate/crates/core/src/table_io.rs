//! Delimited-text tables.
//!
//! A table file is comma-separated. Lines starting with `#` are comments;
//! a comment of the form `# mmblock-table v1 kind=bernoulli` declares the
//! likelihood kind. If the first record starts with a non-numeric field it
//! is a header of column ids, and every following record starts with a row
//! id. Empty fields and `NA` are missing cells.

use std::fs;
use std::path::Path;

use crate::model::{InteractionTable, LikelihoodKind};
use crate::{Error, Matrix, Result};

pub const TABLE_MAGIC: &str = "mmblock-table v1";
pub const MISSING: &str = "NA";

/// A table together with optional row and column identifiers.
#[derive(Clone, Debug, PartialEq)]
pub struct LabeledTable {
    pub table: InteractionTable,
    pub row_ids: Option<Vec<String>>,
    pub col_ids: Option<Vec<String>>,
}

/// Raw parse result: cells as `Option<f64>` plus header metadata.
struct Grid {
    kind: Option<LikelihoodKind>,
    row_ids: Option<Vec<String>>,
    col_ids: Option<Vec<String>>,
    rows: Vec<Vec<Option<f64>>>,
}

fn declared_kind(text: &str) -> Result<Option<LikelihoodKind>> {
    for (i, line) in text.lines().enumerate() {
        let Some(rest) = line.trim_start().strip_prefix('#') else {
            continue;
        };
        let rest = rest.trim();
        if !rest.starts_with(TABLE_MAGIC) {
            continue;
        }
        for token in rest[TABLE_MAGIC.len()..].split_whitespace() {
            if let Some(v) = token.strip_prefix("kind=") {
                return match v {
                    "gaussian" => Ok(Some(LikelihoodKind::Gaussian)),
                    "bernoulli" => Ok(Some(LikelihoodKind::Bernoulli)),
                    other => Err(Error::Parse {
                        line: i + 1,
                        column: 1,
                        msg: format!("unknown kind {other:?}"),
                    }),
                };
            }
        }
    }
    Ok(None)
}

fn parse_cell(field: &str, line: usize, column: usize) -> Result<Option<f64>> {
    if field.is_empty() || field == MISSING {
        return Ok(None);
    }
    match field.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(Some(v)),
        _ => Err(Error::Parse {
            line,
            column,
            msg: format!("expected a finite number or {MISSING}, found {field:?}"),
        }),
    }
}

fn parse_grid(text: &str) -> Result<Grid> {
    let kind = declared_kind(text)?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(text.as_bytes());
    let mut records = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map(|p| p.line() as usize).unwrap_or(0);
            Error::Parse { line, column: 0, msg: e.to_string() }
        })?;
        let line = rec.position().map(|p| p.line() as usize).unwrap_or(0);
        if rec.iter().all(str::is_empty) {
            continue;
        }
        records.push((line, rec.iter().map(str::to_string).collect::<Vec<_>>()));
    }
    if records.is_empty() {
        return Err(Error::Parse { line: 0, column: 0, msg: "no data rows".into() });
    }
    let first = &records[0].1[0];
    let labeled = !first.is_empty() && first != MISSING && first.parse::<f64>().is_err();
    let (col_ids, body) = if labeled {
        let header = records[0].1[1..].to_vec();
        (Some(header), &records[1..])
    } else {
        (None, &records[..])
    };
    if body.is_empty() {
        return Err(Error::Parse { line: records[0].0, column: 0, msg: "header without data rows".into() });
    }
    let width = col_ids.as_ref().map(Vec::len).unwrap_or(body[0].1.len());
    let mut row_ids = labeled.then(Vec::new);
    let mut rows = Vec::with_capacity(body.len());
    for (line, fields) in body {
        let cells = if let Some(ids) = row_ids.as_mut() {
            ids.push(fields[0].clone());
            &fields[1..]
        } else {
            &fields[..]
        };
        if cells.len() != width {
            return Err(Error::Parse {
                line: *line,
                column: 0,
                msg: format!("expected {width} values, found {}", cells.len()),
            });
        }
        let offset = usize::from(labeled);
        let row = cells
            .iter()
            .enumerate()
            .map(|(c, f)| parse_cell(f, *line, c + 1 + offset))
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    Ok(Grid { kind, row_ids, col_ids, rows })
}

/// Parses a table. `kind` overrides the kind declared in the file; with
/// neither, the table is Gaussian.
pub fn parse_table(text: &str, kind: Option<LikelihoodKind>) -> Result<LabeledTable> {
    let grid = parse_grid(text)?;
    let kind = kind.or(grid.kind).unwrap_or(LikelihoodKind::Gaussian);
    let n1 = grid.rows.len();
    let n2 = grid.rows[0].len();
    let mut values = Vec::with_capacity(n1 * n2);
    let mut mask = Vec::with_capacity(n1 * n2);
    for row in &grid.rows {
        for c in row {
            values.push(c.unwrap_or(0.0));
            mask.push(c.is_some());
        }
    }
    let table = InteractionTable::with_mask(n1, n2, values, mask, kind)?;
    Ok(LabeledTable { table, row_ids: grid.row_ids, col_ids: grid.col_ids })
}

/// Parses a dense matrix; missing cells are rejected.
pub fn parse_matrix(text: &str) -> Result<Matrix> {
    let grid = parse_grid(text)?;
    let cols = grid.rows[0].len();
    let mut data = Vec::with_capacity(grid.rows.len() * cols);
    for (i, row) in grid.rows.iter().enumerate() {
        for (c, v) in row.iter().enumerate() {
            data.push(v.ok_or_else(|| Error::Parse {
                line: i + 1,
                column: c + 1,
                msg: "missing value in a dense matrix".into(),
            })?);
        }
    }
    Matrix::from_vec(grid.rows.len(), cols, data)
}

fn kind_name(kind: LikelihoodKind) -> &'static str {
    match kind {
        LikelihoodKind::Gaussian => "gaussian",
        LikelihoodKind::Bernoulli => "bernoulli",
    }
}

fn push_record(out: &mut String, fields: impl IntoIterator<Item = String>) {
    let fields: Vec<String> = fields.into_iter().collect();
    out.push_str(&fields.join(","));
    out.push('\n');
}

/// Renders a table with its kind header. Values use the shortest
/// round-trip representation, so output is lossless and deterministic.
pub fn format_table(t: &LabeledTable) -> String {
    let y = &t.table;
    let mut out = format!("# {TABLE_MAGIC} kind={}\n", kind_name(y.kind()));
    let labeled = t.row_ids.is_some() || t.col_ids.is_some();
    if labeled {
        let cols = t.col_ids.clone().unwrap_or_else(|| (0..y.n2()).map(|k| format!("c{k}")).collect());
        push_record(&mut out, std::iter::once("id".to_string()).chain(cols));
    }
    for j in 0..y.n1() {
        let cells = (0..y.n2()).map(|k| {
            if y.is_observed(j, k) {
                format!("{}", y.get(j, k))
            } else {
                MISSING.to_string()
            }
        });
        if labeled {
            let id = t.row_ids.as_ref().map(|r| r[j].clone()).unwrap_or_else(|| format!("r{j}"));
            push_record(&mut out, std::iter::once(id).chain(cells));
        } else {
            push_record(&mut out, cells);
        }
    }
    out
}

/// Renders a dense matrix, one row per line.
pub fn format_matrix(m: &Matrix) -> String {
    let mut out = String::new();
    for row in m.iter_rows() {
        push_record(&mut out, row.iter().map(|v| format!("{v}")));
    }
    out
}

/// Renders a dense matrix with a header of column ids and a leading row id.
pub fn format_labeled_matrix(m: &Matrix, row_ids: &[String], col_ids: &[String]) -> Result<String> {
    if row_ids.len() != m.rows() || col_ids.len() != m.cols() {
        return Err(Error::Dimension(format!(
            "{}x{} matrix with {} row ids and {} column ids",
            m.rows(),
            m.cols(),
            row_ids.len(),
            col_ids.len()
        )));
    }
    let mut out = String::new();
    push_record(&mut out, std::iter::once("id".to_string()).chain(col_ids.iter().cloned()));
    for (id, row) in row_ids.iter().zip(m.iter_rows()) {
        push_record(&mut out, std::iter::once(id.clone()).chain(row.iter().map(|v| format!("{v}"))));
    }
    Ok(out)
}

pub fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn read_table(path: &Path, kind: Option<LikelihoodKind>) -> Result<LabeledTable> {
    parse_table(&read_text(path)?, kind)
}

pub fn write_table(path: &Path, t: &LabeledTable) -> Result<()> {
    write_text(path, &format_table(t))
}

pub fn read_matrix(path: &Path) -> Result<Matrix> {
    parse_matrix(&read_text(path)?)
}

pub fn write_matrix(path: &Path, m: &Matrix) -> Result<()> {
    write_text(path, &format_matrix(m))
}

impl From<InteractionTable> for LabeledTable {
    fn from(table: InteractionTable) -> Self {
        LabeledTable { table, row_ids: None, col_ids: None }
    }
}

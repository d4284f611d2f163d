use std::collections::BTreeMap;
use std::path::Path;

use super::output::{format_g, FLAG_COLUMNS, META_COLUMNS};
use super::PipelineError;
use crate::stats::{agreement, AgreementReport, PairedSeries, StatsError};

/// Agreement for one column of two results tables.
#[derive(Debug, Clone, PartialEq)]
pub struct ColumnAgreement {
    pub column: String,
    /// Rows where both tables have a value.
    pub n: usize,
    pub report: Result<AgreementReport<f64>, StatsError>,
}

struct Table {
    header: Vec<String>,
    rows: BTreeMap<String, Vec<String>>,
}

fn read_table(path: &Path, pair_on: &str) -> Result<Table, PipelineError> {
    let mut r = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| PipelineError::io(path, e))?;
    let header: Vec<String> = r.headers().map_err(|e| PipelineError::io(path, e))?.iter().map(String::from).collect();
    let key = header
        .iter()
        .position(|h| h == pair_on)
        .ok_or_else(|| PipelineError::MissingColumn { path: path.to_path_buf(), column: pair_on.to_string() })?;
    let mut rows = BTreeMap::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| PipelineError::io(path, e))?;
        let cells: Vec<String> = rec.iter().map(String::from).collect();
        if let Some(k) = cells.get(key).filter(|k| !k.is_empty()) {
            rows.insert(k.clone(), cells);
        }
    }
    Ok(Table { header, rows })
}

/// Pairs the rows of two results files on `pair_on` and reports agreement
/// for every metric column they share, in the first file's column order.
/// Each pair counts as one eye for λ.
pub fn compare_results(a: &Path, b: &Path, pair_on: &str) -> Result<Vec<ColumnAgreement>, PipelineError> {
    let (ta, tb) = (read_table(a, pair_on)?, read_table(b, pair_on)?);
    let skip = |c: &str| c == pair_on || META_COLUMNS.contains(&c) || FLAG_COLUMNS.contains(&c);
    let mut out = Vec::new();
    for (ia, column) in ta.header.iter().enumerate() {
        if skip(column) {
            continue;
        }
        let Some(ib) = tb.header.iter().position(|c| c == column) else { continue };
        let (mut xs, mut ys) = (Vec::new(), Vec::new());
        for (key, ra) in &ta.rows {
            let Some(rb) = tb.rows.get(key) else { continue };
            let parse = |r: &Vec<String>, i: usize| r.get(i).and_then(|s| s.parse::<f64>().ok());
            if let (Some(x), Some(y)) = (parse(ra, ia), parse(rb, ib)) {
                xs.push(x);
                ys.push(y);
            }
        }
        let n = xs.len();
        let report = PairedSeries::new(xs, ys).and_then(|p| agreement(&p));
        out.push(ColumnAgreement { column: column.clone(), n, report });
    }
    Ok(out)
}

/// One line per column: MAE, correlations, ICC, Bland–Altman and mean λ.
pub fn comparison_csv(rows: &[ColumnAgreement]) -> String {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    let header = [
        "column", "n", "mae", "pearson", "spearman", "icc_3_1", "mean_diff", "loa_low", "loa_high", "lambda_mean_pct",
        "note",
    ];
    w.write_record(header).expect("in-memory write");
    let g = |v: f64| format_g(v, 6);
    let opt = |v: Option<f64>| v.map(g).unwrap_or_default();
    for r in rows {
        let mut cells = vec![r.column.clone(), r.n.to_string()];
        match &r.report {
            Ok(a) => {
                let lambda = (!a.lambda_per_eye.is_empty())
                    .then(|| a.lambda_per_eye.iter().sum::<f64>() / a.lambda_per_eye.len() as f64);
                cells.extend([
                    g(a.mae),
                    opt(a.pearson),
                    opt(a.spearman),
                    opt(a.icc_3_1),
                    g(a.bland_altman.mean_diff),
                    g(a.bland_altman.loa_low),
                    g(a.bland_altman.loa_high),
                    opt(lambda),
                    String::new(),
                ]);
            }
            Err(e) => {
                cells.extend(std::iter::repeat_n(String::new(), 8));
                cells.push(e.to_string());
            }
        }
        w.write_record(&cells).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 cells")
}

use std::collections::BTreeMap;

use crate::geometry::Roi;
use crate::meta::{Laterality, Location, PixelScale};
use crate::metrics::{column_name, expected_cells, MetricMatrix, Units, VesselMap};

/// Formats like C's `%.{digits}g`: shortest of fixed or exponent notation,
/// trailing zeros removed.
pub fn format_g(v: f64, digits: usize) -> String {
    if v == 0.0 {
        return "0".into();
    }
    if !v.is_finite() {
        return v.to_string();
    }
    let p = digits.max(1);
    let sci = format!("{:.*e}", p - 1, v);
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -4 || exp >= p as i32 {
        let m = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{m}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (p as i32 - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{v:.decimals$}")).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn g6(v: f64) -> String {
    format_g(v, 6)
}

/// Leading metadata columns of a result row.
pub const META_COLUMNS: [&str; 12] = [
    "filename",
    "status",
    "laterality",
    "location",
    "scale_x",
    "scale_y",
    "length_units",
    "fovea_x",
    "fovea_y",
    "disc_x",
    "disc_y",
    "disc_diameter",
];

/// Trailing provenance columns.
pub const FLAG_COLUMNS: [&str; 2] = ["corrected", "fallback"];

/// Every metric column, in matrix order.
pub fn metric_columns() -> Vec<String> {
    expected_cells(&VesselMap::ALL, &Roi::ALL, Location::DiscCentred)
        .into_iter()
        .map(|(m, r, k)| column_name(m, r, k))
        .collect()
}

pub fn result_columns() -> Vec<String> {
    META_COLUMNS
        .iter()
        .map(|s| s.to_string())
        .chain(metric_columns())
        .chain(FLAG_COLUMNS.iter().map(|s| s.to_string()))
        .collect()
}

/// One row of the collated results.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ResultRow {
    pub filename: String,
    /// `None` for a file that failed.
    pub error: Option<String>,
    pub laterality: Laterality,
    pub location: Location,
    pub scale: PixelScale,
    pub fovea: Option<(f64, f64)>,
    pub disc_centre: Option<(f64, f64)>,
    pub disc_diameter: Option<f64>,
    /// Metric values keyed by column name.
    pub values: BTreeMap<String, f64>,
    pub corrected: bool,
    pub fallback: bool,
}

impl ResultRow {
    pub fn failed(filename: impl Into<String>, error: impl Into<String>) -> Self {
        ResultRow { filename: filename.into(), error: Some(error.into()), ..Default::default() }
    }

    pub fn set_metrics(&mut self, m: &MetricMatrix<f64>) {
        for r in &m.records {
            self.values.insert(r.column(), r.value);
        }
    }

    pub fn length_units(&self) -> Units {
        if self.scale.known {
            Units::Micron
        } else {
            Units::Px
        }
    }

    /// Cells in [`result_columns`] order; absent values are empty.
    pub fn cells(&self) -> Vec<String> {
        let opt = |v: Option<f64>| v.map(g6).unwrap_or_default();
        let flag = |b: bool| if b { "true" } else { "false" }.to_string();
        let scale = |v: f64| if self.scale.known { g6(v) } else { String::new() };
        let mut out = vec![
            self.filename.clone(),
            if self.error.is_some() { "error" } else { "ok" }.to_string(),
            self.laterality.as_str().to_string(),
            self.location.as_str().to_string(),
            scale(self.scale.microns_per_px_x),
            scale(self.scale.microns_per_px_y),
            if self.error.is_some() { String::new() } else { self.length_units().as_str().to_string() },
            opt(self.fovea.map(|p| p.0)),
            opt(self.fovea.map(|p| p.1)),
            opt(self.disc_centre.map(|p| p.0)),
            opt(self.disc_centre.map(|p| p.1)),
            opt(self.disc_diameter),
        ];
        out.extend(metric_columns().iter().map(|c| opt(self.values.get(c).copied())));
        out.push(flag(self.corrected));
        out.push(flag(self.fallback));
        out
    }
}

fn csv_text(header: &[String], rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for r in rows {
        w.write_record(&r).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 cells")
}

/// Collated table, one row per file in the given order.
pub fn collated_csv(rows: &[ResultRow]) -> String {
    csv_text(&result_columns(), rows.iter().map(|r| r.cells()))
}

/// Long-form per-file results: one line per matrix cell, with the reason
/// when a cell is missing.
pub fn file_results_csv(m: &MetricMatrix<f64>) -> String {
    let header: Vec<String> = ["map", "roi", "metric", "value", "units", "issue"].map(String::from).to_vec();
    let rows = m
        .records
        .iter()
        .map(|r| {
            vec![
                r.map.key().into(),
                r.roi.key().into(),
                r.metric.key().into(),
                g6(r.value),
                r.units.as_str().into(),
                String::new(),
            ]
        })
        .chain(m.issues.iter().map(|i| {
            vec![i.map.key().into(), i.roi.key().into(), i.metric.key().into(), String::new(), String::new(), i.error.to_string()]
        }));
    csv_text(&header, rows)
}

/// `key,value` pairs.
pub fn key_value_csv(pairs: &[(String, String)]) -> String {
    csv_text(&["key".to_string(), "value".to_string()], pairs.iter().map(|(k, v)| vec![k.clone(), v.clone()]))
}

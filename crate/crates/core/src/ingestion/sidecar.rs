use std::collections::BTreeMap;
use std::path::Path;

use super::IngestError;
use crate::meta::{Laterality, Location, MetadataSource, PixelScale, SloMetadata};

/// Sidecar rows keyed by file name.
pub type SidecarTable = BTreeMap<String, SloMetadata>;

const COLUMNS: [&str; 4] = ["filename", "microns_per_px", "laterality", "location"];

/// Reads `metadata.csv`-style text: a header row naming `filename`,
/// `microns_per_px`, `laterality` and `location`, then one row per image.
/// Empty cells leave the field unknown.
///
/// A row with the wrong number of cells or an unparsable cell is skipped
/// with a warning when `robust`, and is an error otherwise.
pub fn parse_sidecar(text: &str, robust: bool) -> Result<(SidecarTable, Vec<String>), IngestError> {
    let mut reader = csv::ReaderBuilder::new().flexible(true).trim(csv::Trim::All).from_reader(text.as_bytes());
    let header = reader
        .headers()
        .map_err(|e| IngestError::MalformedRow { line: 1, reason: e.to_string() })?
        .clone();
    let mut index = [0usize; 4];
    for (slot, name) in index.iter_mut().zip(COLUMNS) {
        *slot = header.iter().position(|h| h.eq_ignore_ascii_case(name)).ok_or_else(|| IngestError::MalformedRow {
            line: 1,
            reason: format!("missing column {name}"),
        })?;
    }

    let mut table = SidecarTable::new();
    let mut warnings = Vec::new();
    for rec in reader.records() {
        let row = rec.map_err(|e| IngestError::MalformedRow { line: 0, reason: e.to_string() }).and_then(|r| {
            let line = r.position().map_or(0, |p| p.line());
            parse_row(&r, &index, header.len()).map_err(|reason| IngestError::MalformedRow { line, reason })
        });
        match row {
            Ok((name, meta)) => {
                if table.insert(name.clone(), meta).is_some() {
                    warnings.push(format!("duplicate sidecar row for {name}; the last one is used"));
                }
            }
            Err(e) if robust => warnings.push(format!("{e}; row skipped")),
            Err(e) => return Err(e),
        }
    }
    Ok((table, warnings))
}

fn parse_row(r: &csv::StringRecord, index: &[usize; 4], width: usize) -> Result<(String, SloMetadata), String> {
    if r.len() != width {
        return Err(format!("{} cells, expected {width}", r.len()));
    }
    let cell = |i: usize| r.get(index[i]).unwrap_or("");
    let name = cell(0);
    if name.is_empty() {
        return Err("empty filename".into());
    }
    let scale = match cell(1) {
        "" => PixelScale::unknown(),
        s => s
            .parse::<f64>()
            .ok()
            .and_then(PixelScale::isotropic)
            .ok_or_else(|| format!("invalid microns_per_px {s:?}"))?,
    };
    let laterality = Laterality::parse_token(cell(2)).ok_or_else(|| format!("invalid laterality {:?}", cell(2)))?;
    let location = Location::parse_token(cell(3)).ok_or_else(|| format!("invalid location {:?}", cell(3)))?;
    Ok((name.to_string(), SloMetadata { laterality, location, scale, source: MetadataSource::SidecarFile }))
}

pub fn load_sidecar(path: &Path, robust: bool) -> Result<(SidecarTable, Vec<String>), IngestError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| IngestError::UnreadableFile { path: path.to_path_buf(), reason: e.to_string() })?;
    parse_sidecar(&text, robust)
}

//! Batch orchestration: per-file processing, output writing, collation and
//! run logs.

mod compare;
mod config;
mod log;
mod output;
mod overlay;

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use thiserror::Error;

pub use compare::{compare_results, comparison_csv, ColumnAgreement};
pub use config::{parse_config, parse_config_str, RunConfig};
pub use log::{LogEntry, LogLevel, ProcessLog};
pub use output::{collated_csv, format_g, metric_columns, result_columns, ResultRow, FLAG_COLUMNS, META_COLUMNS};
pub use overlay::{render_overlay, save_rgb, RgbImage};

use crate::geometry::{
    build_zones, fit_disc_ellipse, fovea_centroid, infer_laterality, infer_location, DiscGeometry, Point, Roi,
    RoiMask,
};
use crate::grid::BinaryMask;
use crate::ingestion::{
    load_image, load_masks, load_sidecar, write_masks, IngestError, LoadedImage, SegmentationBundle, SidecarTable,
    IMAGE_EXTENSIONS,
};
use crate::meta::{Laterality, Location, SloMetadata};
use crate::metrics::{expected_cells, measure_all, MetricMatrix, VesselMap};
use crate::raster::{postprocess, resize_nearest, PostProcessParams, REFERENCE_DIM};
use crate::vesselness::{segment_fallback, VesselnessWarning};

/// Collated results file written to the output directory.
pub const COLLATED_FILE: &str = "collated_results.csv";
/// Run-level log written to the output directory.
pub const RUN_LOG_FILE: &str = "run_log.txt";
/// Folder of per-file overlay composites.
pub const OVERLAY_DIR: &str = "segmentation_overlays";

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("config is missing required key {0}")]
    MissingRequiredKey(&'static str),
    #[error("config key {key}: invalid value {value:?}")]
    InvalidValue { key: String, value: String },
    #[error("config line {line} is not key=value: {text:?}")]
    MalformedConfigLine { line: usize, text: String },
    #[error("{path}: {reason}")]
    Io { path: PathBuf, reason: String },
    #[error("input directory {0} does not exist")]
    InputDirMissing(PathBuf),
    #[error("no input images in {0}")]
    EmptyInputDir(PathBuf),
    #[error(transparent)]
    Ingest(#[from] IngestError),
    #[error("no vessel masks for {0} and fallback segmentation is disabled")]
    NoMasks(String),
    #[error("{path} has no column {column:?}")]
    MissingColumn { path: PathBuf, column: String },
    #[error("batch aborted at {file}: {reason}")]
    Aborted { file: String, reason: String },
}

impl PipelineError {
    pub(crate) fn io(path: &Path, e: impl std::fmt::Display) -> Self {
        PipelineError::Io { path: path.to_path_buf(), reason: e.to_string() }
    }
}

/// Landmarks, regions and the resolved laterality and location of an image.
#[derive(Debug, Clone, Default)]
pub struct ImageGeometry {
    pub fovea: Option<Point<f64>>,
    pub disc: Option<DiscGeometry<f64>>,
    pub laterality: Laterality,
    pub location: Location,
    pub zones: Vec<RoiMask>,
}

/// An image ready for measurement.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub filename: String,
    pub stem: String,
    pub loaded: LoadedImage,
    pub bundle: SegmentationBundle,
    pub geometry: ImageGeometry,
    pub fallback: bool,
}

fn stem_of(path: &Path) -> String {
    path.file_stem().and_then(|s| s.to_str()).unwrap_or_default().to_string()
}

fn name_of(path: &Path) -> String {
    path.file_name().and_then(|s| s.to_str()).unwrap_or_default().to_string()
}

/// Small-region removal and gap bridging at the 768-px working resolution;
/// masks of another size are resized there and back.
fn postprocess_at_working_resolution(m: &BinaryMask, p: &PostProcessParams) -> BinaryMask {
    let work = (REFERENCE_DIM, REFERENCE_DIM);
    if m.dims() == work {
        return postprocess(m, p);
    }
    let down = resize_nearest(m, work).0;
    resize_nearest(&postprocess(&down, p), m.dims()).0
}

fn resolve_geometry(bundle: &SegmentationBundle, meta: &SloMetadata, dims: (usize, usize), log: &mut ProcessLog) -> ImageGeometry {
    let fovea = match bundle.fovea.as_ref().map(fovea_centroid::<f64>) {
        Some(Ok(f)) => {
            if f.is_multi_component() {
                log.warn(format!("fovea mask has {} components; using the centroid of their union", f.components));
            }
            Some(f.point)
        }
        Some(Err(e)) => {
            log.warn(format!("fovea: {e}"));
            None
        }
        None => {
            log.info("no fovea mask");
            None
        }
    };
    let disc = match bundle.optic_disc.as_ref().map(fit_disc_ellipse::<f64>) {
        Some(Ok(d)) => Some(d),
        Some(Err(e)) => {
            log.warn(format!("optic disc: {e}"));
            None
        }
        None => {
            log.info("no optic disc mask");
            None
        }
    };
    let mut laterality = meta.laterality;
    if !laterality.is_known() {
        laterality = infer_laterality(fovea.as_ref(), disc.as_ref());
        if laterality.is_known() {
            log.info(format!("laterality inferred as {laterality} from the disc and fovea positions"));
        } else {
            log.warn("laterality unknown");
        }
    }
    let mut location = meta.location;
    if !location.is_known() {
        location = infer_location(fovea.as_ref(), disc.as_ref(), dims);
        if location.is_known() {
            log.info(format!("location inferred as {location}"));
        } else {
            log.warn("location unknown; zone metrics are attempted when a disc is present");
        }
    }
    let zones = build_zones(disc.as_ref(), dims);
    ImageGeometry { fovea, disc, laterality, location, zones }
}

/// Loads an image and its masks, post-processes and harmonizes the vessel
/// maps, and resolves the geometry. Without vessel masks the fallback
/// segmentation is used when enabled; otherwise this is an error when
/// `require_vessels` is set.
pub fn prepare(
    path: &Path,
    cfg: &RunConfig,
    sidecar: Option<&SidecarTable>,
    require_vessels: bool,
    log: &mut ProcessLog,
) -> Result<Prepared, PipelineError> {
    let stem = stem_of(path);
    let loaded = load_image(path, sidecar)?;
    let dims = loaded.image.dims();
    for w in &loaded.warnings {
        log.warn(w.clone());
    }
    log.info(format!("loaded {}x{} image; metadata from {}", dims.0, dims.1, loaded.metadata.source.as_str()));

    let (mut bundle, warnings) = load_masks(cfg.mask_dir(), &stem, dims)?;
    for w in warnings {
        log.warn(w);
    }
    if bundle.corrected {
        log.info("using corrected mask(s)");
    }
    let has_vessels = bundle.binary_vessel.is_some() || bundle.artery.is_some() || bundle.vein.is_some();
    let mut fallback = false;
    if !has_vessels {
        if cfg.use_fallback_segmentation {
            let (m, warn) = segment_fallback(&loaded.image, &cfg.vesselness);
            if warn == Some(VesselnessWarning::FlatImage) {
                log.warn("image has no dynamic range; fallback segmentation is empty");
            }
            log.info(format!("no vessel masks; fallback vesselness segmentation used (provenance=fallback, {} px)", m.count()));
            bundle.binary_vessel = Some(m);
            fallback = true;
        } else if require_vessels {
            return Err(PipelineError::NoMasks(stem));
        }
    } else {
        let p = &cfg.postprocess;
        for m in [&mut bundle.binary_vessel, &mut bundle.artery, &mut bundle.vein].into_iter().flatten() {
            *m = postprocess_at_working_resolution(m, p);
        }
        log.info(format!(
            "vessel masks post-processed at {REFERENCE_DIM}x{REFERENCE_DIM} (min area {} px, max gap {} px, max angle {} deg)",
            p.min_area_px, p.max_gap_px, p.max_angle_deg
        ));
    }
    bundle.harmonize();
    let geometry = resolve_geometry(&bundle, &loaded.metadata, dims, log);
    Ok(Prepared { filename: name_of(path), stem, loaded, bundle, geometry, fallback })
}

/// Measures a prepared image with pixel thresholds scaled to its size.
pub fn measure(p: &Prepared, cfg: &RunConfig) -> MetricMatrix<f64> {
    let (w, h) = p.loaded.image.dims();
    measure_all(
        &p.bundle,
        &p.geometry.zones,
        p.geometry.disc.as_ref(),
        &p.loaded.metadata.scale,
        p.geometry.location,
        &cfg.metrics.scaled_for(w.min(h)),
    )
}

fn build_row(p: &Prepared, m: &MetricMatrix<f64>) -> ResultRow {
    let mut row = ResultRow {
        filename: p.filename.clone(),
        error: None,
        laterality: p.geometry.laterality,
        location: p.geometry.location,
        scale: p.loaded.metadata.scale,
        fovea: p.geometry.fovea.map(|f| (f.x, f.y)),
        disc_centre: p.geometry.disc.map(|d| (d.ellipse.centre_x, d.ellipse.centre_y)),
        disc_diameter: p.geometry.disc.map(|d| d.diameter),
        corrected: p.bundle.corrected,
        fallback: p.fallback,
        ..Default::default()
    };
    row.set_metrics(m);
    row
}

/// Logs a WARN for every metric column left empty, with the reason.
fn log_absent(p: &Prepared, m: &MetricMatrix<f64>, log: &mut ProcessLog) {
    for i in &m.issues {
        log.warn(format!("{}: {}", crate::metrics::column_name(i.map, i.roi, i.metric), i.error));
    }
    let present: Vec<VesselMap> = [
        (VesselMap::AllVessel, p.bundle.binary_vessel.is_some()),
        (VesselMap::Artery, p.bundle.artery.is_some()),
        (VesselMap::Vein, p.bundle.vein.is_some()),
    ]
    .into_iter()
    .filter_map(|(k, on)| on.then_some(k))
    .collect();
    let rois: BTreeSet<Roi> = p.geometry.zones.iter().map(|z| z.roi).collect();
    let attempted: BTreeSet<String> = expected_cells(&present, &rois.iter().copied().collect::<Vec<_>>(), p.geometry.location)
        .into_iter()
        .map(|(a, b, c)| crate::metrics::column_name(a, b, c))
        .collect();
    for (map, roi, metric) in expected_cells(&VesselMap::ALL, &Roi::ALL, Location::DiscCentred) {
        let col = crate::metrics::column_name(map, roi, metric);
        if attempted.contains(&col) {
            continue;
        }
        let reason = if roi != Roi::WholeImage && p.geometry.location == Location::MaculaCentred {
            "zone metrics are not taken on macula-centred images".to_string()
        } else if roi != Roi::WholeImage && !rois.contains(&roi) {
            "no optic disc geometry".to_string()
        } else {
            let missing: Vec<&str> = [VesselMap::AllVessel, VesselMap::Artery, VesselMap::Vein]
                .into_iter()
                .filter(|k| !present.contains(k))
                .map(|k| k.key())
                .collect();
            format!("map(s) not supplied: {}", missing.join(", "))
        };
        log.warn(format!("{col}: not measured ({reason})"));
    }
}

fn write_file(path: &Path, text: &str) -> Result<(), PipelineError> {
    std::fs::write(path, text).map_err(|e| PipelineError::io(path, e))
}

fn metadata_pairs(p: &Prepared, row: &ResultRow) -> Vec<(String, String)> {
    let g = |v: f64| format_g(v, 6);
    let m = &p.loaded.metadata;
    let (w, h) = p.loaded.image.dims();
    let mut out = vec![
        ("filename".to_string(), row.filename.clone()),
        ("width".into(), w.to_string()),
        ("height".into(), h.to_string()),
        ("metadata_source".into(), m.source.as_str().into()),
        ("laterality".into(), row.laterality.as_str().into()),
        ("laterality_inferred".into(), (!m.laterality.is_known() && row.laterality.is_known()).to_string()),
        ("location".into(), row.location.as_str().into()),
        ("location_inferred".into(), (!m.location.is_known() && row.location.is_known()).to_string()),
        ("scale_known".into(), m.scale.known.to_string()),
        ("scale_x_um_per_px".into(), g(m.scale.microns_per_px_x)),
        ("scale_y_um_per_px".into(), g(m.scale.microns_per_px_y)),
        ("length_units".into(), row.length_units().as_str().into()),
    ];
    if let Some(f) = row.fovea {
        out.push(("fovea_x".into(), g(f.0)));
        out.push(("fovea_y".into(), g(f.1)));
    }
    if let Some(d) = &p.geometry.disc {
        let e = &d.ellipse;
        out.push(("disc_x".into(), g(e.centre_x)));
        out.push(("disc_y".into(), g(e.centre_y)));
        out.push(("disc_major_axis".into(), g(e.major_axis)));
        out.push(("disc_minor_axis".into(), g(e.minor_axis)));
        out.push(("disc_angle_deg".into(), g(e.angle.to_degrees())));
        out.push(("disc_diameter".into(), g(d.diameter)));
    }
    if let Some(v) = &p.loaded.vol_header {
        out.push(("vol_version".into(), v.version.clone()));
        out.push(("vol_scan_position".into(), v.scan_position.clone()));
        out.push(("vol_field_size_deg".into(), v.field_size_slo.to_string()));
    }
    out.push(("corrected".into(), row.corrected.to_string()));
    out.push(("fallback".into(), row.fallback.to_string()));
    out
}

/// Result of one input file.
#[derive(Debug, Clone)]
pub struct FileOutcome {
    pub row: ResultRow,
    pub log: ProcessLog,
}

impl FileOutcome {
    pub fn failed(&self) -> bool {
        self.row.error.is_some()
    }
}

fn analyze(path: &Path, cfg: &RunConfig, sidecar: Option<&SidecarTable>, log: &mut ProcessLog) -> Result<ResultRow, PipelineError> {
    let p = prepare(path, cfg, sidecar, true, log)?;
    let m = measure(&p, cfg);
    log.info(format!("{} metric values, {} issues", m.records.len(), m.issues.len()));
    log_absent(&p, &m, log);
    let row = build_row(&p, &m);

    let dir = cfg.output_dir.join(&p.stem);
    std::fs::create_dir_all(&dir).map_err(|e| PipelineError::io(&dir, e))?;
    write_file(&dir.join("results.csv"), &output::file_results_csv(&m))?;
    write_file(&dir.join("metadata.csv"), &output::key_value_csv(&metadata_pairs(&p, &row)))?;
    if cfg.save_segmentations {
        let written = write_masks(&dir, &p.stem, &p.bundle)?;
        log.info(format!("saved {} mask file(s)", written.len()));
    }
    let overlay = render_overlay(&p.loaded.image, &p.bundle, &p.geometry);
    let overlay_dir = cfg.output_dir.join(OVERLAY_DIR);
    std::fs::create_dir_all(&overlay_dir).map_err(|e| PipelineError::io(&overlay_dir, e))?;
    for target in [dir.join("overlay.png"), overlay_dir.join(format!("{}.png", p.stem))] {
        save_rgb(&target, &overlay).map_err(|e| PipelineError::io(&target, e))?;
    }
    Ok(row)
}

/// Processes one image and writes its outputs under `<output_dir>/<stem>/`.
/// Failures come back as an empty-metric row with an ERROR log entry.
pub fn process_one(path: &Path, cfg: &RunConfig, sidecar: Option<&SidecarTable>) -> FileOutcome {
    let mut log = ProcessLog::default();
    log.info(format!("processing {}", path.display()));
    let row = match analyze(path, cfg, sidecar, &mut log) {
        Ok(row) => row,
        Err(e) => {
            log.error(e.to_string());
            ResultRow::failed(name_of(path), e.to_string())
        }
    };
    let dir = cfg.output_dir.join(stem_of(path));
    // best effort: the log of a file that failed before its folder existed
    if std::fs::create_dir_all(&dir).is_ok() {
        let _ = std::fs::write(dir.join("log.txt"), log.to_string());
    }
    FileOutcome { row, log }
}

/// True for file stems of the mask layout (`<stem>_binary`, `_avod`,
/// `_fovea`, optionally `_corrected`).
pub fn is_mask_stem(stem: &str) -> bool {
    let s = stem.strip_suffix("_corrected").unwrap_or(stem);
    ["_binary", "_avod", "_fovea"].iter().any(|k| s.ends_with(k))
}

/// Input images in `dir`, sorted by file name, excluding mask files.
pub fn list_inputs(dir: &Path) -> Result<Vec<PathBuf>, PipelineError> {
    if !dir.is_dir() {
        return Err(PipelineError::InputDirMissing(dir.to_path_buf()));
    }
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| PipelineError::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file())
        .filter(|p| {
            p.extension()
                .and_then(|e| e.to_str())
                .is_some_and(|e| IMAGE_EXTENSIONS.iter().any(|x| e.eq_ignore_ascii_case(x)))
        })
        .filter(|p| !is_mask_stem(&stem_of(p)))
        .collect();
    files.sort_by_key(|p| name_of(p));
    Ok(files)
}

/// Outcome of a batch.
#[derive(Debug, Clone)]
pub struct BatchReport {
    /// One row per input file, in file-name order.
    pub rows: Vec<ResultRow>,
    /// File names that failed.
    pub failed: Vec<String>,
    pub collated: PathBuf,
    pub run_log: PathBuf,
}

/// Processes every image in `cfg.input_dir`.
pub fn run_batch(cfg: &RunConfig) -> Result<BatchReport, PipelineError> {
    let files = list_inputs(&cfg.input_dir)?;
    if files.is_empty() {
        return Err(PipelineError::EmptyInputDir(cfg.input_dir.clone()));
    }
    run_files(&files, cfg)
}

/// Processes the given images (in the given order) and writes the collated
/// table and run log to `cfg.output_dir`. Files run in parallel in robust
/// mode; otherwise sequentially, stopping at the first failure.
pub fn run_files(files: &[PathBuf], cfg: &RunConfig) -> Result<BatchReport, PipelineError> {
    let out = &cfg.output_dir;
    std::fs::create_dir_all(out).map_err(|e| PipelineError::io(out, e))?;
    let mut run_log = ProcessLog::default();
    run_log.info(format!("slomorph {}: {} input file(s)", env!("CARGO_PKG_VERSION"), files.len()));
    for line in cfg.describe() {
        run_log.info(line);
    }

    let sidecar = match cfg.metadata_path() {
        Some(p) => match load_sidecar(&p, cfg.robust_run) {
            Ok((table, warnings)) => {
                run_log.info(format!("sidecar {}: {} row(s)", p.display(), table.len()));
                for w in warnings {
                    run_log.warn(w);
                }
                let names: BTreeSet<String> = files.iter().map(|f| name_of(f)).collect();
                for k in table.keys().filter(|k| !names.contains(*k)) {
                    run_log.warn(format!("sidecar row {k} matches no input file"));
                }
                Some(table)
            }
            Err(e) if cfg.robust_run => {
                run_log.error(format!("sidecar ignored: {e}"));
                None
            }
            Err(e) => return Err(e.into()),
        },
        None => {
            run_log.info("no sidecar metadata file");
            None
        }
    };

    let outcomes: Vec<FileOutcome> = if cfg.robust_run {
        files.par_iter().map(|f| process_one(f, cfg, sidecar.as_ref())).collect()
    } else {
        let mut v = Vec::new();
        for f in files {
            let o = process_one(f, cfg, sidecar.as_ref());
            if let Some(e) = &o.row.error {
                run_log.error(format!("{}: {e}; batch aborted", o.row.filename));
                let _ = std::fs::write(out.join(RUN_LOG_FILE), run_log.to_string());
                return Err(PipelineError::Aborted { file: o.row.filename.clone(), reason: e.clone() });
            }
            v.push(o);
        }
        v
    };

    let mut failed = Vec::new();
    for o in &outcomes {
        let warns = o.log.count(LogLevel::Warn);
        match &o.row.error {
            Some(e) => {
                run_log.error(format!("{}: {e}", o.row.filename));
                failed.push(o.row.filename.clone());
            }
            None => run_log.info(format!("{}: ok ({warns} warning(s))", o.row.filename)),
        }
    }
    let rows: Vec<ResultRow> = outcomes.into_iter().map(|o| o.row).collect();
    let collated = out.join(COLLATED_FILE);
    write_file(&collated, &collated_csv(&rows))?;
    run_log.info(format!("{} processed, {} failed; results in {}", rows.len(), failed.len(), collated.display()));
    let run_log_path = out.join(RUN_LOG_FILE);
    write_file(&run_log_path, &run_log.to_string())?;
    Ok(BatchReport { rows, failed, collated, run_log: run_log_path })
}

/// Renders the overlay of one image to `output`, using whatever masks exist.
pub fn render_file(path: &Path, cfg: &RunConfig, output: &Path) -> Result<ProcessLog, PipelineError> {
    let mut log = ProcessLog::default();
    let sidecar = match cfg.metadata_path() {
        Some(p) => Some(load_sidecar(&p, true)?.0),
        None => None,
    };
    let p = prepare(path, cfg, sidecar.as_ref(), false, &mut log)?;
    let overlay = render_overlay(&p.loaded.image, &p.bundle, &p.geometry);
    save_rgb(output, &overlay).map_err(|e| PipelineError::io(output, e))?;
    Ok(log)
}

use std::path::{Path, PathBuf};

use super::PipelineError;
use crate::metrics::MetricParams;
use crate::raster::PostProcessParams;
use crate::vesselness::VesselnessParams;

/// Batch settings. Pixel-valued tunables are given at 768 px and rescaled
/// per image.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub input_dir: PathBuf,
    pub output_dir: PathBuf,
    /// Record failures as empty rows and carry on instead of aborting.
    pub robust_run: bool,
    pub save_segmentations: bool,
    /// Segment with the vesselness filter when an image has no masks.
    pub use_fallback_segmentation: bool,
    /// Where masks live; defaults to `input_dir`.
    pub mask_dir: Option<PathBuf>,
    /// Sidecar metadata; defaults to `input_dir/metadata.csv` when present.
    pub metadata_file: Option<PathBuf>,
    pub vesselness: VesselnessParams,
    pub metrics: MetricParams,
    pub postprocess: PostProcessParams,
}

impl RunConfig {
    pub fn new(input_dir: impl Into<PathBuf>, output_dir: impl Into<PathBuf>) -> Self {
        RunConfig {
            input_dir: input_dir.into(),
            output_dir: output_dir.into(),
            robust_run: true,
            save_segmentations: true,
            use_fallback_segmentation: false,
            mask_dir: None,
            metadata_file: None,
            vesselness: VesselnessParams::default(),
            metrics: MetricParams::default(),
            postprocess: PostProcessParams::default(),
        }
    }

    pub fn mask_dir(&self) -> &Path {
        self.mask_dir.as_deref().unwrap_or(&self.input_dir)
    }

    pub fn metadata_path(&self) -> Option<PathBuf> {
        match &self.metadata_file {
            Some(p) => Some(p.clone()),
            None => Some(self.input_dir.join("metadata.csv")).filter(|p| p.is_file()),
        }
    }

    /// `key = value` lines describing the effective settings, for logs.
    pub fn describe(&self) -> Vec<String> {
        let v = &self.vesselness;
        let t = &self.metrics.tortuosity;
        let pp = &self.postprocess;
        vec![
            format!("input_dir = {}", self.input_dir.display()),
            format!("output_dir = {}", self.output_dir.display()),
            format!("mask_dir = {}", self.mask_dir().display()),
            format!("robust_run = {}", self.robust_run),
            format!("save_segmentations = {}", self.save_segmentations),
            format!("use_fallback_segmentation = {}", self.use_fallback_segmentation),
            format!("vesselness.scales_px = {:?}", v.scales_px),
            format!("vesselness.beta = {}", v.beta),
            format!("vesselness.c = {}", v.c.map_or("adaptive".to_string(), |c| c.to_string())),
            format!("vesselness.prob_threshold = {}", v.prob_threshold),
            format!("postprocess.min_area_px = {}", pp.min_area_px),
            format!("postprocess.max_gap_px = {}", pp.max_gap_px),
            format!("postprocess.max_angle_deg = {}", pp.max_angle_deg),
            format!("min_segment_px = {}", self.metrics.min_segment_px),
            format!("tortuosity.window = {}", t.window),
            format!("tortuosity.step_px = {}", t.step_px),
            format!("tortuosity.zero_curvature = {}", t.zero_curvature),
            "pixel thresholds scale with min(width, height) / 768".to_string(),
        ]
    }
}

fn parse_bool(key: &str, v: &str) -> Result<bool, PipelineError> {
    match v.to_ascii_lowercase().as_str() {
        "true" | "yes" | "1" | "on" => Ok(true),
        "false" | "no" | "0" | "off" => Ok(false),
        _ => Err(invalid(key, v)),
    }
}

fn parse_num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T, PipelineError> {
    v.parse().map_err(|_| invalid(key, v))
}

fn invalid(key: &str, v: &str) -> PipelineError {
    PipelineError::InvalidValue { key: key.to_string(), value: v.to_string() }
}

/// Parses `key = value` lines; `#` starts a comment. Relative paths are
/// resolved against `base`. Unknown keys produce warnings.
pub fn parse_config_str(text: &str, base: &Path) -> Result<(RunConfig, Vec<String>), PipelineError> {
    let mut cfg = RunConfig::new(PathBuf::new(), PathBuf::new());
    let (mut input, mut output) = (None, None);
    let mut warnings = Vec::new();
    let path = |v: &str| {
        let p = PathBuf::from(v);
        if p.is_absolute() {
            p
        } else {
            base.join(p)
        }
    };
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(PipelineError::MalformedConfigLine { line: n + 1, text: raw.to_string() });
        };
        let (key, v) = (key.trim(), value.trim());
        match key {
            "input_dir" => input = Some(path(v)),
            "output_dir" => output = Some(path(v)),
            "mask_dir" => cfg.mask_dir = Some(path(v)),
            "metadata_file" => cfg.metadata_file = Some(path(v)),
            "robust_run" => cfg.robust_run = parse_bool(key, v)?,
            "save_segmentations" => cfg.save_segmentations = parse_bool(key, v)?,
            "use_fallback_segmentation" => cfg.use_fallback_segmentation = parse_bool(key, v)?,
            "vesselness.scales_px" => {
                let scales: Vec<f64> =
                    v.split(',').map(|s| parse_num(key, s.trim())).collect::<Result<_, _>>()?;
                if scales.is_empty() || scales.iter().any(|s| !(*s > 0.0)) {
                    return Err(invalid(key, v));
                }
                cfg.vesselness.scales_px = scales;
            }
            "vesselness.beta" => cfg.vesselness.beta = parse_num(key, v)?,
            "vesselness.c" => cfg.vesselness.c = Some(parse_num(key, v)?),
            "vesselness.prob_threshold" => cfg.vesselness.prob_threshold = parse_num(key, v)?,
            "postprocess.min_area_px" => cfg.postprocess.min_area_px = parse_num(key, v)?,
            "postprocess.max_gap_px" => cfg.postprocess.max_gap_px = parse_num(key, v)?,
            "postprocess.max_angle_deg" => cfg.postprocess.max_angle_deg = parse_num(key, v)?,
            "min_segment_px" => cfg.metrics.min_segment_px = parse_num(key, v)?,
            "tortuosity.window" => cfg.metrics.tortuosity.window = parse_num(key, v)?,
            "tortuosity.step_px" => cfg.metrics.tortuosity.step_px = parse_num(key, v)?,
            "tortuosity.zero_curvature" => cfg.metrics.tortuosity.zero_curvature = parse_num(key, v)?,
            _ => warnings.push(format!("unknown config key {key:?} on line {}", n + 1)),
        }
    }
    cfg.input_dir = input.ok_or(PipelineError::MissingRequiredKey("input_dir"))?;
    cfg.output_dir = output.ok_or(PipelineError::MissingRequiredKey("output_dir"))?;
    Ok((cfg, warnings))
}

pub fn parse_config(path: &Path) -> Result<(RunConfig, Vec<String>), PipelineError> {
    let text = std::fs::read_to_string(path).map_err(|e| PipelineError::io(path, e))?;
    parse_config_str(&text, path.parent().unwrap_or(Path::new(".")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults() {
        let (c, w) = parse_config_str("input_dir = in\noutput_dir=/tmp/out # results\n", Path::new("/cfg")).unwrap();
        assert!(w.is_empty());
        assert_eq!(c.input_dir, PathBuf::from("/cfg/in"));
        assert_eq!(c.output_dir, PathBuf::from("/tmp/out"));
        assert!(c.robust_run && c.save_segmentations && !c.use_fallback_segmentation);
        assert_eq!(c.vesselness, VesselnessParams::default());
        assert_eq!(c.mask_dir(), Path::new("/cfg/in"));
    }

    #[test]
    fn flags_and_overrides() {
        let text = "# batch\ninput_dir=a\noutput_dir=b\nrobust_run=false\nvesselness.scales_px = 1, 2\n\
                    tortuosity.window=7\ncolour=red\n";
        let (c, w) = parse_config_str(text, Path::new(".")).unwrap();
        assert!(!c.robust_run);
        assert_eq!(c.vesselness.scales_px, vec![1.0, 2.0]);
        assert_eq!(c.metrics.tortuosity.window, 7);
        assert_eq!(w.len(), 1);
    }

    #[test]
    fn errors() {
        assert!(matches!(
            parse_config_str("output_dir=b\n", Path::new(".")),
            Err(PipelineError::MissingRequiredKey("input_dir"))
        ));
        assert!(matches!(
            parse_config_str("input_dir=a\noutput_dir=b\nrobust_run=maybe\n", Path::new(".")),
            Err(PipelineError::InvalidValue { .. })
        ));
        assert!(matches!(
            parse_config_str("input_dir a\n", Path::new(".")),
            Err(PipelineError::MalformedConfigLine { line: 1, .. })
        ));
    }
}

//! SLO images, `.vol` containers, sidecar metadata and segmentation masks.

mod masks;
mod sidecar;
pub mod vol;

use std::path::{Path, PathBuf};

use thiserror::Error;

pub use masks::{load_masks, write_masks, MaskKind};
pub use sidecar::{load_sidecar, parse_sidecar, SidecarTable};
pub use vol::{parse_vol, write_vol, VolHeader};

use crate::grid::{BinaryMask, GrayImage, Grid};
use crate::meta::{MetadataSource, SloMetadata};

#[derive(Debug, Error)]
pub enum IngestError {
    #[error("malformed .vol header: {0}")]
    MalformedHeader(String),
    #[error("file truncated: {found} bytes, at least {expected} needed")]
    TruncatedFile { expected: usize, found: usize },
    #[error("non-positive SLO scale ({x}, {y}) mm/px")]
    NonPositiveScale { x: f64, y: f64 },
    #[error("unsupported image format: {0}")]
    UnsupportedFormat(PathBuf),
    #[error("cannot read {path}: {reason}")]
    UnreadableFile { path: PathBuf, reason: String },
    #[error("sidecar line {line}: {reason}")]
    MalformedRow { line: u64, reason: String },
    #[error("mask {path} is {mask_w}x{mask_h} but the image is {image_w}x{image_h} (aspect ratios differ)")]
    DimensionMismatch { path: PathBuf, mask_w: usize, mask_h: usize, image_w: usize, image_h: usize },
    #[error("mask {path} contains label {value}, expected 0..=3")]
    InvalidLabelValue { path: PathBuf, value: u8 },
}

/// Segmentation masks for one image. Absent masks are `None`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SegmentationBundle {
    pub binary_vessel: Option<BinaryMask>,
    pub artery: Option<BinaryMask>,
    pub vein: Option<BinaryMask>,
    pub optic_disc: Option<BinaryMask>,
    pub fovea: Option<BinaryMask>,
    /// At least one mask came from a `_corrected` file.
    pub corrected: bool,
}

impl SegmentationBundle {
    /// Sets the all-vessel map to its union with the artery and vein maps.
    pub fn harmonize(&mut self) {
        let mut binary = self.binary_vessel.take();
        for m in [&self.artery, &self.vein].into_iter().flatten() {
            binary = Some(match binary {
                Some(b) => b.union(m),
                None => m.clone(),
            });
        }
        self.binary_vessel = binary;
    }

    pub fn is_empty(&self) -> bool {
        self.binary_vessel.is_none()
            && self.artery.is_none()
            && self.vein.is_none()
            && self.optic_disc.is_none()
            && self.fovea.is_none()
    }
}

/// An image with its metadata and any warnings raised while loading it.
#[derive(Debug, Clone)]
pub struct LoadedImage {
    pub image: GrayImage,
    pub metadata: SloMetadata,
    pub vol_header: Option<VolHeader>,
    pub warnings: Vec<String>,
}

/// File extensions accepted as input images.
pub const IMAGE_EXTENSIONS: [&str; 7] = ["png", "jpg", "jpeg", "bmp", "tif", "tiff", "vol"];

pub fn is_vol(path: &Path) -> bool {
    path.extension().and_then(|e| e.to_str()).is_some_and(|e| e.eq_ignore_ascii_case("vol"))
}

/// Loads a raster image (converted to 8-bit luminance) or a `.vol` SLO.
///
/// Metadata comes from the `.vol` header when there is one, otherwise from
/// the sidecar row keyed by file name. When both give a laterality and they
/// disagree, the header wins and a warning is recorded.
pub fn load_image(path: &Path, sidecar: Option<&SidecarTable>) -> Result<LoadedImage, IngestError> {
    let name = path.file_name().and_then(|n| n.to_str()).unwrap_or_default();
    let row = sidecar.and_then(|t| t.get(name)).copied();
    let mut warnings = Vec::new();
    if is_vol(path) {
        let bytes = std::fs::read(path).map_err(|e| unreadable(path, e))?;
        let (header, image) = parse_vol(&bytes)?;
        let mut metadata = header.metadata();
        if header.laterality().is_none() {
            warnings.push(format!("unrecognised scan position {:?} in .vol header", header.scan_position));
        }
        if let Some(row) = row {
            if row.laterality.is_known() && metadata.laterality.is_known() && row.laterality != metadata.laterality {
                warnings.push(format!(
                    "sidecar laterality {} conflicts with .vol header {}; using the header",
                    row.laterality, metadata.laterality
                ));
            }
            if !metadata.laterality.is_known() {
                metadata.laterality = row.laterality;
            }
            metadata.location = row.location;
        }
        return Ok(LoadedImage { image, metadata, vol_header: Some(header), warnings });
    }
    let decoded = image::ImageReader::open(path)
        .map_err(|e| unreadable(path, e))?
        .with_guessed_format()
        .map_err(|e| unreadable(path, e))?;
    if decoded.format().is_none() {
        return Err(IngestError::UnsupportedFormat(path.to_path_buf()));
    }
    let img = decoded.decode().map_err(|e| match e {
        image::ImageError::Unsupported(_) => IngestError::UnsupportedFormat(path.to_path_buf()),
        e => unreadable(path, e),
    })?;
    let luma = img.to_luma8();
    let (w, h) = luma.dimensions();
    let image = Grid::from_vec(w as usize, h as usize, luma.into_raw()).expect("decoder dims");
    let metadata = match row {
        Some(m) => m,
        None => {
            if sidecar.is_some() {
                warnings.push(format!("no sidecar row for {name}"));
            }
            SloMetadata { source: MetadataSource::Absent, ..SloMetadata::default() }
        }
    };
    Ok(LoadedImage { image, metadata, vol_header: None, warnings })
}

fn unreadable(path: &Path, e: impl std::fmt::Display) -> IngestError {
    IngestError::UnreadableFile { path: path.to_path_buf(), reason: e.to_string() }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::meta::{Laterality, Location};

    #[test]
    fn harmonize_unions() {
        let mut b = SegmentationBundle {
            binary_vessel: Some(Grid::from_fn(4, 1, |x, _| x == 0)),
            artery: Some(Grid::from_fn(4, 1, |x, _| x == 1)),
            vein: Some(Grid::from_fn(4, 1, |x, _| x == 2)),
            ..Default::default()
        };
        b.harmonize();
        assert_eq!(b.binary_vessel.unwrap().count(), 3);
        let mut only_av = SegmentationBundle { artery: Some(Grid::filled(2, 2, true)), ..Default::default() };
        only_av.harmonize();
        assert_eq!(only_av.binary_vessel.unwrap().count(), 4);
    }

    #[test]
    fn grayscale_and_rgb() {
        let dir = tempfile::tempdir().unwrap();
        let g = dir.path().join("eye1.png");
        image::GrayImage::from_fn(40, 30, |x, _| image::Luma([x as u8])).save(&g).unwrap();
        let rgb = dir.path().join("eye2.png");
        image::RgbImage::from_fn(40, 30, |_, _| image::Rgb([200, 100, 50])).save(&rgb).unwrap();

        let table = parse_sidecar("filename,microns_per_px,laterality,location\neye1.png,11.71,R,macula\n", true).unwrap().0;
        let a = load_image(&g, Some(&table)).unwrap();
        assert_eq!(a.image.dims(), (40, 30));
        assert_eq!(a.image.at(7, 3), 7);
        assert_eq!(a.metadata.laterality, Laterality::Right);
        assert_eq!(a.metadata.location, Location::MaculaCentred);
        assert_eq!(a.metadata.source, MetadataSource::SidecarFile);
        assert!(a.metadata.scale.known);

        let b = load_image(&rgb, Some(&table)).unwrap();
        assert_eq!(b.image.dims(), (40, 30));
        assert!(!b.metadata.scale.known);
        assert_eq!(b.metadata.laterality, Laterality::Unknown);
        assert_eq!(b.warnings.len(), 1);
    }

    #[test]
    fn vol_header_wins() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("scan.vol");
        let h = VolHeader {
            size_x_slo: 8,
            size_y_slo: 8,
            scale_x_slo: 0.01171,
            scale_y_slo: 0.01171,
            scan_position: "OS".into(),
            ..VolHeader::default()
        };
        std::fs::write(&p, write_vol(&h, &Grid::filled(8, 8, 9u8))).unwrap();
        let table = parse_sidecar("filename,microns_per_px,laterality,location\nscan.vol,,R,disc\n", true).unwrap().0;
        let l = load_image(&p, Some(&table)).unwrap();
        assert_eq!(l.metadata.laterality, Laterality::Left);
        assert_eq!(l.metadata.location, Location::DiscCentred);
        assert_eq!(l.warnings.len(), 1);
    }

    #[test]
    fn bad_files() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("notes.png");
        std::fs::write(&p, b"not an image").unwrap();
        assert!(load_image(&p, None).is_err());
        assert!(matches!(
            load_image(&dir.path().join("missing.png"), None),
            Err(IngestError::UnreadableFile { .. })
        ));
    }
}

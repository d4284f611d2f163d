use std::path::{Path, PathBuf};

use super::{IngestError, SegmentationBundle, IMAGE_EXTENSIONS};
use crate::grid::{BinaryMask, GrayImage, Grid};
use crate::raster::resize_nearest;

/// Mask file kinds, named `<stem>_<suffix>[_corrected].<ext>`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MaskKind {
    /// All-vessel mask, {0, 255}.
    Binary,
    /// Label raster: 0 background, 1 artery, 2 vein, 3 optic disc.
    Avod,
    /// Fovea mask, {0, 255}.
    Fovea,
}

impl MaskKind {
    pub const ALL: [MaskKind; 3] = [MaskKind::Binary, MaskKind::Avod, MaskKind::Fovea];

    pub fn suffix(self) -> &'static str {
        match self {
            MaskKind::Binary => "binary",
            MaskKind::Avod => "avod",
            MaskKind::Fovea => "fovea",
        }
    }
}

const AV_LABEL_MAX: u8 = 3;

fn find_mask(dir: &Path, stem: &str, kind: MaskKind) -> Option<(PathBuf, bool)> {
    let base = format!("{stem}_{}", kind.suffix());
    let corrected = format!("{base}_corrected");
    let mut plain = None;
    let mut entries: Vec<PathBuf> = std::fs::read_dir(dir).ok()?.filter_map(|e| e.ok().map(|e| e.path())).collect();
    entries.sort();
    for p in entries {
        let ext_ok = p
            .extension()
            .and_then(|e| e.to_str())
            .is_some_and(|e| IMAGE_EXTENSIONS.iter().any(|x| *x != "vol" && e.eq_ignore_ascii_case(x)));
        if !ext_ok {
            continue;
        }
        match p.file_stem().and_then(|s| s.to_str()) {
            Some(s) if s == corrected => return Some((p, true)),
            Some(s) if s == base && plain.is_none() => plain = Some(p),
            _ => {}
        }
    }
    plain.map(|p| (p, false))
}

fn read_gray(path: &Path) -> Result<GrayImage, IngestError> {
    let img = image::open(path)
        .map_err(|e| IngestError::UnreadableFile { path: path.to_path_buf(), reason: e.to_string() })?
        .to_luma8();
    let (w, h) = img.dimensions();
    Ok(Grid::from_vec(w as usize, h as usize, img.into_raw()).expect("decoder dims"))
}

/// Loads the masks for `stem` from `dir`, resized to `image_dims`.
///
/// A `_corrected` file takes precedence over the plain one. Masks of a
/// different size but the same aspect ratio are resized nearest-neighbour
/// with a warning.
pub fn load_masks(
    dir: &Path,
    stem: &str,
    image_dims: (usize, usize),
) -> Result<(SegmentationBundle, Vec<String>), IngestError> {
    let mut bundle = SegmentationBundle::default();
    let mut warnings = Vec::new();
    for kind in MaskKind::ALL {
        let Some((path, corrected)) = find_mask(dir, stem, kind) else { continue };
        bundle.corrected |= corrected;
        let mut raw = read_gray(&path)?;
        let (mw, mh) = raw.dims();
        if (mw, mh) != image_dims {
            let (iw, ih) = image_dims;
            let aspect = |w: usize, h: usize| w as f64 / h as f64;
            if (aspect(mw, mh) / aspect(iw, ih) - 1.0).abs() > 0.01 {
                return Err(IngestError::DimensionMismatch { path, mask_w: mw, mask_h: mh, image_w: iw, image_h: ih });
            }
            warnings.push(format!("{} is {mw}x{mh}; resized to {iw}x{ih}", path.display()));
            raw = resize_nearest(&raw, (iw, ih)).0;
        }
        match kind {
            MaskKind::Binary => bundle.binary_vessel = Some(raw.map(|&v| v > 0)),
            MaskKind::Fovea => bundle.fovea = Some(raw.map(|&v| v > 0)),
            MaskKind::Avod => {
                if let Some(&value) = raw.as_slice().iter().find(|&&v| v > AV_LABEL_MAX) {
                    return Err(IngestError::InvalidLabelValue { path, value });
                }
                bundle.artery = Some(raw.map(|&v| v == 1));
                bundle.vein = Some(raw.map(|&v| v == 2));
                bundle.optic_disc = Some(raw.map(|&v| v == 3));
            }
        }
    }
    Ok((bundle, warnings))
}

fn save(path: &Path, g: &GrayImage) -> Result<(), IngestError> {
    image::GrayImage::from_raw(g.width() as u32, g.height() as u32, g.as_slice().to_vec())
        .expect("buffer matches dims")
        .save(path)
        .map_err(|e| IngestError::UnreadableFile { path: path.to_path_buf(), reason: e.to_string() })
}

/// Writes the bundle as PNG masks in the layout [`load_masks`] reads.
/// Where artery, vein and disc overlap, the later label wins.
pub fn write_masks(dir: &Path, stem: &str, b: &SegmentationBundle) -> Result<Vec<PathBuf>, IngestError> {
    let mut written = Vec::new();
    let bin = |m: &BinaryMask| m.map(|&v| if v { 255u8 } else { 0 });
    let mut out = |kind: MaskKind, g: GrayImage| -> Result<(), IngestError> {
        let p = dir.join(format!("{stem}_{}.png", kind.suffix()));
        save(&p, &g)?;
        written.push(p);
        Ok(())
    };
    if let Some(m) = &b.binary_vessel {
        out(MaskKind::Binary, bin(m))?;
    }
    let any_av = [&b.artery, &b.vein, &b.optic_disc].iter().find_map(|m| m.as_ref().map(|m| m.dims()));
    if let Some((w, h)) = any_av {
        let mut labels = GrayImage::new(w, h);
        for (m, label) in [(&b.artery, 1u8), (&b.vein, 2), (&b.optic_disc, 3)] {
            if let Some(m) = m {
                for (x, y) in m.foreground() {
                    labels.set(x, y, label);
                }
            }
        }
        out(MaskKind::Avod, labels)?;
    }
    if let Some(m) = &b.fovea {
        out(MaskKind::Fovea, bin(m))?;
    }
    Ok(written)
}

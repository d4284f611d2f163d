//! Heidelberg HSF-OCT `.vol` container: the 2048-byte file header and the
//! SLO raster that follows it. B-scan data after the raster is not read.

use super::IngestError;
use crate::grid::GrayImage;
use crate::meta::{Laterality, Location, MetadataSource, PixelScale, SloMetadata};

/// Byte offsets of the header fields. Little-endian throughout.
pub mod offset {
    pub const VERSION: usize = 0; // char[12]
    pub const SIZE_X: usize = 12; // i32
    pub const NUM_BSCANS: usize = 16; // i32
    pub const SIZE_Z: usize = 20; // i32
    pub const SCALE_X: usize = 24; // f64, mm
    pub const DISTANCE: usize = 32; // f64, mm
    pub const SCALE_Z: usize = 40; // f64, mm
    pub const SIZE_X_SLO: usize = 48; // i32
    pub const SIZE_Y_SLO: usize = 52; // i32
    pub const SCALE_X_SLO: usize = 56; // f64, mm
    pub const SCALE_Y_SLO: usize = 64; // f64, mm
    pub const FIELD_SIZE_SLO: usize = 72; // i32, degrees
    pub const SCAN_FOCUS: usize = 76; // f64, dioptres
    pub const SCAN_POSITION: usize = 84; // char[4]
    pub const EXAM_TIME: usize = 88; // i64, Windows FILETIME
    pub const SCAN_PATTERN: usize = 96; // i32
    pub const BSCAN_HDR_SIZE: usize = 100; // i32
    pub const ID: usize = 104; // char[16]
    pub const REFERENCE_ID: usize = 120; // char[16]
    pub const PID: usize = 136; // i32
    pub const PATIENT_ID: usize = 140; // char[21], 3 bytes padding follow
    pub const DOB: usize = 164; // f64, OLE date
    pub const VID: usize = 172; // i32
    pub const VISIT_ID: usize = 176; // char[24]
    pub const VISIT_DATE: usize = 200; // f64, OLE date
    pub const GRID_TYPE: usize = 208; // i32
    pub const GRID_OFFSET: usize = 212; // i32
    pub const SPARE: usize = 216; // [u8; 1832]
}

pub const HEADER_SIZE: usize = 2048;
pub const MAGIC: &[u8] = b"HSF-OCT-";

const VERSION_LEN: usize = 12;
const SCAN_POSITION_LEN: usize = 4;
const ID_LEN: usize = 16;
const PATIENT_ID_LEN: usize = 21;
const VISIT_ID_LEN: usize = 24;

/// Every header field, so a header can be written back unchanged.
#[derive(Debug, Clone, PartialEq)]
pub struct VolHeader {
    pub version: String,
    pub size_x: i32,
    pub num_bscans: i32,
    pub size_z: i32,
    pub scale_x: f64,
    pub distance: f64,
    pub scale_z: f64,
    pub size_x_slo: i32,
    pub size_y_slo: i32,
    /// mm per pixel.
    pub scale_x_slo: f64,
    /// mm per pixel.
    pub scale_y_slo: f64,
    pub field_size_slo: i32,
    pub scan_focus: f64,
    pub scan_position: String,
    pub exam_time: i64,
    pub scan_pattern: i32,
    pub bscan_hdr_size: i32,
    pub id: String,
    pub reference_id: String,
    pub pid: i32,
    pub patient_id: String,
    pub dob: f64,
    pub vid: i32,
    pub visit_id: String,
    pub visit_date: f64,
    pub grid_type: i32,
    pub grid_offset: i32,
}

impl Default for VolHeader {
    fn default() -> Self {
        VolHeader {
            version: "HSF-OCT-103".into(),
            size_x: 0,
            num_bscans: 0,
            size_z: 0,
            scale_x: 0.0,
            distance: 0.0,
            scale_z: 0.0,
            size_x_slo: 0,
            size_y_slo: 0,
            scale_x_slo: 0.0,
            scale_y_slo: 0.0,
            field_size_slo: 0,
            scan_focus: 0.0,
            scan_position: String::new(),
            exam_time: 0,
            scan_pattern: 0,
            bscan_hdr_size: 0,
            id: String::new(),
            reference_id: String::new(),
            pid: 0,
            patient_id: String::new(),
            dob: 0.0,
            vid: 0,
            visit_id: String::new(),
            visit_date: 0.0,
            grid_type: 0,
            grid_offset: 0,
        }
    }
}

impl VolHeader {
    /// `OD` is the right eye and `OS` the left; anything else is `None`.
    pub fn laterality(&self) -> Option<Laterality> {
        match self.scan_position.trim() {
            "OD" => Some(Laterality::Right),
            "OS" => Some(Laterality::Left),
            _ => None,
        }
    }

    /// SLO scale in µm per pixel.
    pub fn pixel_scale(&self) -> Option<PixelScale> {
        PixelScale::anisotropic(self.scale_x_slo * 1000.0, self.scale_y_slo * 1000.0)
    }

    pub fn metadata(&self) -> SloMetadata {
        SloMetadata {
            laterality: self.laterality().unwrap_or(Laterality::Unknown),
            location: Location::Unknown,
            scale: self.pixel_scale().unwrap_or_default(),
            source: MetadataSource::VolHeader,
        }
    }
}

fn i32_at(b: &[u8], at: usize) -> i32 {
    i32::from_le_bytes(b[at..at + 4].try_into().expect("4 bytes"))
}

fn i64_at(b: &[u8], at: usize) -> i64 {
    i64::from_le_bytes(b[at..at + 8].try_into().expect("8 bytes"))
}

fn f64_at(b: &[u8], at: usize) -> f64 {
    f64::from_le_bytes(b[at..at + 8].try_into().expect("8 bytes"))
}

fn text_at(b: &[u8], at: usize, len: usize) -> String {
    let raw = &b[at..at + len];
    let end = raw.iter().position(|&c| c == 0).unwrap_or(len);
    String::from_utf8_lossy(&raw[..end]).into_owned()
}

/// Parses the header and SLO raster.
pub fn parse_vol(bytes: &[u8]) -> Result<(VolHeader, GrayImage), IngestError> {
    if bytes.len() < HEADER_SIZE {
        return Err(IngestError::TruncatedFile { expected: HEADER_SIZE, found: bytes.len() });
    }
    if !bytes.starts_with(MAGIC) {
        return Err(IngestError::MalformedHeader(format!(
            "version magic {:?}",
            text_at(bytes, offset::VERSION, VERSION_LEN)
        )));
    }
    use offset::*;
    let b = bytes;
    let h = VolHeader {
        version: text_at(b, VERSION, VERSION_LEN),
        size_x: i32_at(b, SIZE_X),
        num_bscans: i32_at(b, NUM_BSCANS),
        size_z: i32_at(b, SIZE_Z),
        scale_x: f64_at(b, SCALE_X),
        distance: f64_at(b, DISTANCE),
        scale_z: f64_at(b, SCALE_Z),
        size_x_slo: i32_at(b, SIZE_X_SLO),
        size_y_slo: i32_at(b, SIZE_Y_SLO),
        scale_x_slo: f64_at(b, SCALE_X_SLO),
        scale_y_slo: f64_at(b, SCALE_Y_SLO),
        field_size_slo: i32_at(b, FIELD_SIZE_SLO),
        scan_focus: f64_at(b, SCAN_FOCUS),
        scan_position: text_at(b, SCAN_POSITION, SCAN_POSITION_LEN),
        exam_time: i64_at(b, EXAM_TIME),
        scan_pattern: i32_at(b, SCAN_PATTERN),
        bscan_hdr_size: i32_at(b, BSCAN_HDR_SIZE),
        id: text_at(b, ID, ID_LEN),
        reference_id: text_at(b, REFERENCE_ID, ID_LEN),
        pid: i32_at(b, PID),
        patient_id: text_at(b, PATIENT_ID, PATIENT_ID_LEN),
        dob: f64_at(b, DOB),
        vid: i32_at(b, VID),
        visit_id: text_at(b, VISIT_ID, VISIT_ID_LEN),
        visit_date: f64_at(b, VISIT_DATE),
        grid_type: i32_at(b, GRID_TYPE),
        grid_offset: i32_at(b, GRID_OFFSET),
    };
    if h.size_x_slo <= 0 || h.size_y_slo <= 0 {
        return Err(IngestError::MalformedHeader(format!(
            "SLO size {}x{}",
            h.size_x_slo, h.size_y_slo
        )));
    }
    if !(h.scale_x_slo > 0.0 && h.scale_y_slo > 0.0) || !h.scale_x_slo.is_finite() || !h.scale_y_slo.is_finite() {
        return Err(IngestError::NonPositiveScale { x: h.scale_x_slo, y: h.scale_y_slo });
    }
    let (w, hgt) = (h.size_x_slo as usize, h.size_y_slo as usize);
    let need = w * hgt;
    let raster = &bytes[HEADER_SIZE..];
    if raster.len() < need {
        return Err(IngestError::TruncatedFile { expected: HEADER_SIZE + need, found: bytes.len() });
    }
    let img = GrayImage::from_vec(w, hgt, raster[..need].to_vec()).expect("length checked");
    Ok((h, img))
}

/// Serialises a header and SLO raster. The raster size is taken from the
/// image; the header's SLO size fields are written as given.
pub fn write_vol(h: &VolHeader, slo: &GrayImage) -> Vec<u8> {
    use offset::*;
    let mut b = vec![0u8; HEADER_SIZE];
    let mut text = |at: usize, len: usize, s: &str| {
        let s = s.as_bytes();
        let n = s.len().min(len);
        b[at..at + n].copy_from_slice(&s[..n]);
    };
    text(VERSION, VERSION_LEN, &h.version);
    text(SCAN_POSITION, SCAN_POSITION_LEN, &h.scan_position);
    text(ID, ID_LEN, &h.id);
    text(REFERENCE_ID, ID_LEN, &h.reference_id);
    text(PATIENT_ID, PATIENT_ID_LEN, &h.patient_id);
    text(VISIT_ID, VISIT_ID_LEN, &h.visit_id);
    for (at, v) in [
        (SIZE_X, h.size_x),
        (NUM_BSCANS, h.num_bscans),
        (SIZE_Z, h.size_z),
        (SIZE_X_SLO, h.size_x_slo),
        (SIZE_Y_SLO, h.size_y_slo),
        (FIELD_SIZE_SLO, h.field_size_slo),
        (SCAN_PATTERN, h.scan_pattern),
        (BSCAN_HDR_SIZE, h.bscan_hdr_size),
        (PID, h.pid),
        (VID, h.vid),
        (GRID_TYPE, h.grid_type),
        (GRID_OFFSET, h.grid_offset),
    ] {
        b[at..at + 4].copy_from_slice(&v.to_le_bytes());
    }
    for (at, v) in [
        (SCALE_X, h.scale_x),
        (DISTANCE, h.distance),
        (SCALE_Z, h.scale_z),
        (SCALE_X_SLO, h.scale_x_slo),
        (SCALE_Y_SLO, h.scale_y_slo),
        (SCAN_FOCUS, h.scan_focus),
        (DOB, h.dob),
        (VISIT_DATE, h.visit_date),
    ] {
        b[at..at + 8].copy_from_slice(&v.to_le_bytes());
    }
    b[EXAM_TIME..EXAM_TIME + 8].copy_from_slice(&h.exam_time.to_le_bytes());
    const _: () = assert!(SPARE + 1832 == HEADER_SIZE);
    b.extend_from_slice(slo.as_slice());
    b
}

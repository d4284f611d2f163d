//! Per-image acquisition metadata.

use std::fmt;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Laterality {
    Right,
    Left,
    #[default]
    Unknown,
}

impl Laterality {
    /// Accepts `R`/`Right`/`OD` and `L`/`Left`/`OS`, case-insensitively.
    /// Empty input is `Unknown`; anything else is `None`.
    pub fn parse_token(s: &str) -> Option<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "" => Some(Laterality::Unknown),
            "r" | "right" | "od" => Some(Laterality::Right),
            "l" | "left" | "os" => Some(Laterality::Left),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Laterality::Right => "Right",
            Laterality::Left => "Left",
            Laterality::Unknown => "Unknown",
        }
    }

    pub fn is_known(self) -> bool {
        self != Laterality::Unknown
    }
}

impl fmt::Display for Laterality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Laterality {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::parse_token(s).ok_or_else(|| format!("unrecognised laterality {s:?}"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Location {
    MaculaCentred,
    DiscCentred,
    #[default]
    Unknown,
}

impl Location {
    /// Accepts `macula` and `disc` (case-insensitive), plus the long forms
    /// printed by [`Location::as_str`].
    pub fn parse_token(s: &str) -> Option<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "" => Some(Location::Unknown),
            "macula" | "macula-centred" | "maculacentred" => Some(Location::MaculaCentred),
            "disc" | "disc-centred" | "disccentred" => Some(Location::DiscCentred),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Location::MaculaCentred => "Macula-centred",
            Location::DiscCentred => "Disc-centred",
            Location::Unknown => "Unknown",
        }
    }

    pub fn is_known(self) -> bool {
        self != Location::Unknown
    }
}

impl fmt::Display for Location {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Location {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::parse_token(s).ok_or_else(|| format!("unrecognised location {s:?}"))
    }
}

/// Transversal sampling in microns per pixel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PixelScale {
    pub microns_per_px_x: f64,
    pub microns_per_px_y: f64,
    pub known: bool,
}

impl Default for PixelScale {
    fn default() -> Self {
        PixelScale::unknown()
    }
}

impl PixelScale {
    pub fn unknown() -> Self {
        PixelScale { microns_per_px_x: 1.0, microns_per_px_y: 1.0, known: false }
    }

    /// `None` unless `microns` is finite and positive.
    pub fn isotropic(microns: f64) -> Option<Self> {
        Self::anisotropic(microns, microns)
    }

    pub fn anisotropic(x: f64, y: f64) -> Option<Self> {
        (x.is_finite() && y.is_finite() && x > 0.0 && y > 0.0)
            .then_some(PixelScale { microns_per_px_x: x, microns_per_px_y: y, known: true })
    }

    /// Single length factor: the geometric mean of the two axes, or `None`
    /// when the scale is unknown and lengths stay in pixels.
    pub fn length_factor(&self) -> Option<f64> {
        if !self.known {
            return None;
        }
        if self.microns_per_px_x == self.microns_per_px_y {
            Some(self.microns_per_px_x)
        } else {
            Some((self.microns_per_px_x * self.microns_per_px_y).sqrt())
        }
    }

    /// Multiplies both axes by `k` (used by the scale-invariance checks).
    pub fn scaled(&self, k: f64) -> Self {
        PixelScale {
            microns_per_px_x: self.microns_per_px_x * k,
            microns_per_px_y: self.microns_per_px_y * k,
            known: self.known,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MetadataSource {
    VolHeader,
    SidecarFile,
    Inferred,
    #[default]
    Absent,
}

impl MetadataSource {
    pub fn as_str(self) -> &'static str {
        match self {
            MetadataSource::VolHeader => "vol_header",
            MetadataSource::SidecarFile => "sidecar",
            MetadataSource::Inferred => "inferred",
            MetadataSource::Absent => "absent",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SloMetadata {
    pub laterality: Laterality,
    pub location: Location,
    pub scale: PixelScale,
    pub source: MetadataSource,
}

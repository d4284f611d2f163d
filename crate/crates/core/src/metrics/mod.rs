//! Retinal vascular parameters computed over (vessel map, region) pairs.

mod calibre;
mod fractal;
mod knudtson;
mod matrix;
mod segments;
mod tortuosity;

pub use calibre::{global_calibre, local_calibre, ridge_calibre};
pub use fractal::{box_counts, fractal_dimension, fractal_dimension_anchored, vessel_density, BOX_SIZES};
pub use knudtson::{knudtson_equivalent, VesselKind, ARTERY_CONSTANT, VEIN_CONSTANT};
pub use matrix::{
    big_vessel_equivalents, expected_cells, measure_all, BigVesselEquivalents, MetricIssue,
    MetricMatrix,
};
pub use segments::{decompose_segments, NodeKind, SegmentGraph, SegmentNode, VesselSegment};
pub use tortuosity::{
    curve_tortuosity, region_tortuosity, tortuosity_density, TortuosityParams, TortuosityResult,
};

use std::fmt;

use thiserror::Error;

use crate::meta::PixelScale;
use crate::num::Real;
use crate::raster::REFERENCE_DIM;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum VesselMap {
    AllVessel,
    Artery,
    Vein,
}

impl VesselMap {
    pub const ALL: [VesselMap; 3] = [VesselMap::AllVessel, VesselMap::Artery, VesselMap::Vein];

    pub fn key(self) -> &'static str {
        match self {
            VesselMap::AllVessel => "all",
            VesselMap::Artery => "artery",
            VesselMap::Vein => "vein",
        }
    }
}

impl fmt::Display for VesselMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Metric {
    FractalDimension,
    VesselDensity,
    GlobalCalibre,
    LocalCalibre,
    TortuosityDensity,
    Crae,
    Crve,
    Avr,
}

impl Metric {
    pub fn key(self) -> &'static str {
        match self {
            Metric::FractalDimension => "fractal_dimension",
            Metric::VesselDensity => "vessel_density",
            Metric::GlobalCalibre => "global_calibre",
            Metric::LocalCalibre => "local_calibre",
            Metric::TortuosityDensity => "tortuosity_density",
            Metric::Crae => "CRAE",
            Metric::Crve => "CRVE",
            Metric::Avr => "AVR",
        }
    }

    /// Metrics that carry a length and convert to microns when the scale is known.
    pub fn is_length(self) -> bool {
        matches!(self, Metric::GlobalCalibre | Metric::LocalCalibre | Metric::Crae | Metric::Crve)
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Units {
    Dimensionless,
    Px,
    Micron,
}

impl Units {
    pub fn as_str(self) -> &'static str {
        match self {
            Units::Dimensionless => "dimensionless",
            Units::Px => "px",
            Units::Micron => "um",
        }
    }
}

/// A value with its unit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quantity<F> {
    pub value: F,
    pub units: Units,
}

impl<F: Real> Quantity<F> {
    pub fn dimensionless(value: F) -> Self {
        Quantity { value, units: Units::Dimensionless }
    }

    /// Converts a pixel length to microns when the scale is known.
    pub fn length(px: F, scale: &PixelScale) -> Self {
        match scale.length_factor() {
            Some(k) => Quantity { value: px * F::lit(k), units: Units::Micron },
            None => Quantity { value: px, units: Units::Px },
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricRecord<F> {
    pub map: VesselMap,
    pub roi: crate::geometry::Roi,
    pub metric: Metric,
    pub value: F,
    pub units: Units,
}

impl<F> MetricRecord<F> {
    /// `<map>_<roi>_<metric>`.
    pub fn column(&self) -> String {
        column_name(self.map, self.roi, self.metric)
    }
}

pub fn column_name(map: VesselMap, roi: crate::geometry::Roi, metric: Metric) -> String {
    format!("{}_{}_{}", map.key(), roi.key(), metric.key())
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricError {
    #[error("no vessel pixels inside the region")]
    EmptyMask,
    #[error("region of interest is empty")]
    EmptyRoi,
    #[error("fewer than two unsaturated box sizes")]
    TooFewScales,
    #[error("skeleton has no pixels inside the region")]
    EmptySkeleton,
    #[error("no vessel segments inside the region")]
    NoSegmentsInRoi,
    #[error("{found} vessel(s) available, at least 2 needed")]
    TooFewVessels { found: usize },
    #[error("{0} map not supplied")]
    MissingMap(VesselMap),
}

/// Measurement tunables. Pixel thresholds are given at 768 px.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricParams {
    pub min_segment_px: usize,
    pub tortuosity: TortuosityParams,
}

impl Default for MetricParams {
    fn default() -> Self {
        MetricParams { min_segment_px: 10, tortuosity: TortuosityParams::default() }
    }
}

impl MetricParams {
    /// Scales `min_segment_px` linearly from the 768-px reference.
    pub fn scaled_for(&self, min_dim: usize) -> Self {
        let s = min_dim as f64 / REFERENCE_DIM as f64;
        MetricParams {
            min_segment_px: ((self.min_segment_px as f64 * s).round() as usize).max(2),
            tortuosity: self.tortuosity.clone(),
        }
    }
}

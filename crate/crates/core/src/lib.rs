//! Retinal vessel morphometry for en face SLO images.
//!
//! Segmentation masks (or a classical vesselness fallback) go in; fractal
//! dimension, vessel density, calibre, tortuosity density and CRAE/CRVE/AVR
//! over the whole image and the peripapillary zones come out. Numeric code
//! is generic over [`num::Real`]; the aliases below fix the scalar to `f64`.

pub mod geometry;
pub mod grid;
pub mod ingestion;
pub mod meta;
pub mod metrics;
pub mod num;
pub mod phantom;
pub mod pipeline;
pub mod raster;
pub mod stats;
pub mod vesselness;

pub use grid::{BinaryMask, GrayImage, Grid};
pub use num::Real;

pub type Point = geometry::Point<f64>;
pub type Ellipse = geometry::Ellipse<f64>;
pub type DiscGeometry = geometry::DiscGeometry<f64>;
pub type FoveaCentroid = geometry::FoveaCentroid<f64>;
pub type Quantity = metrics::Quantity<f64>;
pub type MetricRecord = metrics::MetricRecord<f64>;
pub type MetricMatrix = metrics::MetricMatrix<f64>;
pub type SegmentGraph = metrics::SegmentGraph<f64>;
pub type VesselSegment = metrics::VesselSegment<f64>;
pub type BigVesselEquivalents = metrics::BigVesselEquivalents<f64>;
pub type PairedSeries = stats::PairedSeries<f64>;
pub type AgreementReport = stats::AgreementReport<f64>;
pub type BlandAltman = stats::BlandAltman<f64>;

//! Anatomical landmarks and regions of interest: fovea, optic disc ellipse,
//! zones B and C, and laterality/location inference.

mod ellipse;
mod zones;

pub use ellipse::{conic_to_ellipse, fit_ellipse, Ellipse};
pub use zones::{build_zones, Roi, RoiMask};

use thiserror::Error;

use crate::grid::{BinaryMask, NEIGHBOURS_8};
use crate::meta::{Laterality, Location};
use crate::num::Real;
use crate::raster::{label_components, REFERENCE_DIM};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Point<F> {
    pub x: F,
    pub y: F,
}

impl<F: Real> Point<F> {
    pub fn new(x: F, y: F) -> Self {
        Point { x, y }
    }

    pub fn distance(&self, other: &Point<F>) -> F {
        ((self.x - other.x).powi(2) + (self.y - other.y).powi(2)).sqrt()
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("mask is empty")]
    EmptyMask,
    #[error("largest disc component has {area} px, below the {min} px minimum")]
    DiscTooSmall { area: usize, min: usize },
    #[error("disc boundary does not determine an ellipse")]
    DegenerateFit,
}

/// Fovea estimate with the number of 8-connected components it was pooled from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FoveaCentroid<F> {
    pub point: Point<F>,
    pub components: usize,
}

impl<F> FoveaCentroid<F> {
    /// More than one blob was averaged; callers should log a warning.
    pub fn is_multi_component(&self) -> bool {
        self.components > 1
    }
}

/// Mean coordinate of all foreground pixels (the union, even when the mask
/// has several components).
pub fn fovea_centroid<F: Real>(fovea_mask: &BinaryMask) -> Result<FoveaCentroid<F>, GeometryError> {
    let (mut sx, mut sy, mut n) = (0u64, 0u64, 0u64);
    for (x, y) in fovea_mask.foreground() {
        sx += x as u64;
        sy += y as u64;
        n += 1;
    }
    if n == 0 {
        return Err(GeometryError::EmptyMask);
    }
    let nf = F::lit(n as f64);
    Ok(FoveaCentroid {
        point: Point::new(F::lit(sx as f64) / nf, F::lit(sy as f64) / nf),
        components: label_components(fovea_mask).count(),
    })
}

/// Fitted optic disc. `diameter` is the mean of the two axis lengths.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiscGeometry<F> {
    pub ellipse: Ellipse<F>,
    pub diameter: F,
}

impl<F: Real> DiscGeometry<F> {
    pub fn from_ellipse(ellipse: Ellipse<F>) -> Self {
        DiscGeometry { diameter: (ellipse.major_axis + ellipse.minor_axis) / F::lit(2.0), ellipse }
    }

    pub fn centre(&self) -> Point<F> {
        Point::new(self.ellipse.centre_x, self.ellipse.centre_y)
    }

    pub fn radius(&self) -> F {
        self.diameter / F::lit(2.0)
    }

    /// Pixel centre `(x, y)` lies strictly inside the fitted ellipse.
    pub fn contains(&self, x: usize, y: usize) -> bool {
        self.ellipse.contains(F::lit(x as f64), F::lit(y as f64))
    }
}

/// Minimum disc area at 768 px, scaled quadratically with resolution.
pub fn min_disc_area(dims: (usize, usize)) -> usize {
    let s = dims.0.min(dims.1) as f64 / REFERENCE_DIM as f64;
    (500.0 * s * s).round() as usize
}

/// Fits an ellipse to the boundary of the largest component of a disc mask.
///
/// Boundary pixels are the component pixels with at least one in-image
/// background 8-neighbour, so a disc cut by the image edge is fitted from its
/// visible margin only.
pub fn fit_disc_ellipse<F: Real>(disc_mask: &BinaryMask) -> Result<DiscGeometry<F>, GeometryError> {
    let comps = label_components(disc_mask);
    let label = comps.largest().ok_or(GeometryError::EmptyMask)?;
    let area = comps.areas[label as usize - 1];
    let min = min_disc_area(disc_mask.dims());
    if area < min {
        return Err(GeometryError::DiscTooSmall { area, min });
    }
    let mut boundary = Vec::new();
    for (x, y) in disc_mask.foreground() {
        if comps.labels.at(x, y) != label {
            continue;
        }
        let on_edge = NEIGHBOURS_8.iter().any(|(dx, dy)| {
            let (nx, ny) = (x as isize + dx, y as isize + dy);
            disc_mask.in_bounds(nx, ny) && comps.labels.at(nx as usize, ny as usize) != label
        });
        if on_edge {
            boundary.push((F::lit(x as f64), F::lit(y as f64)));
        }
    }
    let ellipse = fit_ellipse(&boundary).ok_or(GeometryError::DegenerateFit)?;
    if !(ellipse.minor_axis > F::zero()) || !ellipse.major_axis.is_finite() {
        return Err(GeometryError::DegenerateFit);
    }
    Ok(DiscGeometry::from_ellipse(ellipse))
}

/// Right when the disc lies to the image-right of the fovea (non-mirrored en
/// face display: the nasal retina of a right eye is on the image right).
pub fn infer_laterality<F: Real>(fovea: Option<&Point<F>>, disc: Option<&DiscGeometry<F>>) -> Laterality {
    match (fovea, disc) {
        (Some(f), Some(d)) => {
            let dx = d.ellipse.centre_x;
            if dx > f.x {
                Laterality::Right
            } else if dx < f.x {
                Laterality::Left
            } else {
                Laterality::Unknown
            }
        }
        _ => Laterality::Unknown,
    }
}

/// The landmark nearer the image centre decides the location. With a single
/// landmark, it decides when it lies within a quarter of the short image side
/// from the centre; otherwise the other landmark is presumed central.
pub fn infer_location<F: Real>(
    fovea: Option<&Point<F>>,
    disc: Option<&DiscGeometry<F>>,
    dims: (usize, usize),
) -> Location {
    let centre = Point::new(
        F::lit((dims.0 as f64 - 1.0) / 2.0),
        F::lit((dims.1 as f64 - 1.0) / 2.0),
    );
    let near = F::lit(dims.0.min(dims.1) as f64 / 4.0);
    match (fovea, disc.map(|d| d.centre())) {
        (Some(f), Some(d)) => {
            let (df, dd) = (f.distance(&centre), d.distance(&centre));
            if df < dd {
                Location::MaculaCentred
            } else if dd < df {
                Location::DiscCentred
            } else {
                Location::Unknown
            }
        }
        (Some(f), None) => {
            if f.distance(&centre) <= near {
                Location::MaculaCentred
            } else {
                Location::DiscCentred
            }
        }
        (None, Some(d)) => {
            if d.distance(&centre) <= near {
                Location::DiscCentred
            } else {
                Location::MaculaCentred
            }
        }
        (None, None) => Location::Unknown,
    }
}

use std::fmt;

use super::DiscGeometry;
use crate::grid::{BinaryMask, Grid};
use crate::num::Real;

/// Regions of interest. Zones B and C are annuli around the optic disc.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Roi {
    WholeImage,
    ZoneB,
    ZoneC,
}

impl Roi {
    pub const ALL: [Roi; 3] = [Roi::WholeImage, Roi::ZoneB, Roi::ZoneC];

    /// Column-name fragment.
    pub fn key(self) -> &'static str {
        match self {
            Roi::WholeImage => "whole",
            Roi::ZoneB => "zoneB",
            Roi::ZoneC => "zoneC",
        }
    }

    /// Inner and outer offsets from the disc margin, in disc diameters.
    pub fn margin_offsets(self) -> Option<(f64, f64)> {
        match self {
            Roi::WholeImage => None,
            Roi::ZoneB => Some((0.5, 1.0)),
            Roi::ZoneC => Some((0.0, 2.0)),
        }
    }
}

impl fmt::Display for Roi {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoiMask {
    pub roi: Roi,
    pub mask: BinaryMask,
}

/// Whole image, plus zones B and C when a disc is available.
///
/// Zone radii are measured from the disc centre: with `r = D / 2`, zone B
/// spans `[r + 0.5D, r + D]` and zone C `[r, r + 2D]`, treating the margin as
/// the mean-radius circle. Pixels inside the fitted ellipse are excluded from
/// both zones, and everything is clipped to the image.
pub fn build_zones<F: Real>(disc: Option<&DiscGeometry<F>>, dims: (usize, usize)) -> Vec<RoiMask> {
    let (w, h) = dims;
    let mut out = vec![RoiMask { roi: Roi::WholeImage, mask: Grid::filled(w, h, true) }];
    let Some(d) = disc else { return out };
    let r = d.radius();
    let dd = d.diameter;
    let c = d.centre();
    for roi in [Roi::ZoneB, Roi::ZoneC] {
        let (lo, hi) = roi.margin_offsets().expect("zones have offsets");
        let inner = r + F::lit(lo) * dd;
        let outer = r + F::lit(hi) * dd;
        let (inner2, outer2) = (inner * inner, outer * outer);
        let mask = Grid::from_fn(w, h, |x, y| {
            let (dx, dy) = (F::lit(x as f64) - c.x, F::lit(y as f64) - c.y);
            let rho2 = dx * dx + dy * dy;
            rho2 >= inner2 && rho2 <= outer2 && !d.contains(x, y)
        });
        out.push(RoiMask { roi, mask });
    }
    out
}

//! Raster primitives: thresholding, connected components, thinning, distance
//! transform, resizing and mask post-processing.

mod bridge;
pub(crate) mod draw;
mod edt;
mod resize;
mod thin;

pub use bridge::bridge_gaps;
pub use edt::{distance_transform, squared_distance_transform};
pub use resize::{resize_bilinear, resize_nearest, ResizeWarning};
pub use thin::{prune_spurs, skeletonize, Skeleton};

use crate::grid::{BinaryMask, Grid, NEIGHBOURS_8};
use crate::num::Real;

/// Resolution at which the default post-processing parameters are specified.
pub const REFERENCE_DIM: usize = 768;

/// `bit = prob >= t`.
pub fn threshold<F: Real>(prob: &Grid<F>, t: F) -> BinaryMask {
    prob.map(|&p| p >= t)
}

/// Connected-component labelling (8-connectivity).
#[derive(Debug, Clone)]
pub struct Components {
    /// Per-pixel label; 0 is background, components are numbered from 1.
    pub labels: Grid<u32>,
    /// `areas[i]` is the pixel count of component `i + 1`.
    pub areas: Vec<usize>,
}

impl Components {
    pub fn count(&self) -> usize {
        self.areas.len()
    }

    /// Label of the largest component (lowest label wins ties).
    pub fn largest(&self) -> Option<u32> {
        let mut best: Option<(usize, usize)> = None;
        for (i, &a) in self.areas.iter().enumerate() {
            if best.is_none_or(|(_, ba)| a > ba) {
                best = Some((i, a));
            }
        }
        best.map(|(i, _)| i as u32 + 1)
    }

    pub fn mask_of(&self, label: u32) -> BinaryMask {
        self.labels.map(|&l| l == label)
    }
}

pub fn label_components(m: &BinaryMask) -> Components {
    let (w, h) = m.dims();
    let mut labels = Grid::<u32>::new(w, h);
    let mut areas = Vec::new();
    let mut stack = Vec::new();
    for start in 0..m.len() {
        if !m.as_slice()[start] || labels.as_slice()[start] != 0 {
            continue;
        }
        let label = areas.len() as u32 + 1;
        let mut area = 0;
        labels.as_mut_slice()[start] = label;
        stack.push(start);
        while let Some(i) = stack.pop() {
            area += 1;
            let (x, y) = ((i % w) as isize, (i / w) as isize);
            for (dx, dy) in NEIGHBOURS_8 {
                let (nx, ny) = (x + dx, y + dy);
                if m.in_bounds(nx, ny) {
                    let j = ny as usize * w + nx as usize;
                    if m.as_slice()[j] && labels.as_slice()[j] == 0 {
                        labels.as_mut_slice()[j] = label;
                        stack.push(j);
                    }
                }
            }
        }
        areas.push(area);
    }
    Components { labels, areas }
}

pub fn count_components(m: &BinaryMask) -> usize {
    label_components(m).count()
}

/// Drops every 8-connected component smaller than `min_area_px`.
pub fn remove_small_components(m: &BinaryMask, min_area_px: usize) -> BinaryMask {
    if min_area_px == 0 {
        return m.clone();
    }
    let comps = label_components(m);
    comps.labels.map(|&l| l != 0 && comps.areas[l as usize - 1] >= min_area_px)
}

/// Tunables for cleaning a segmentation mask.
#[derive(Debug, Clone, PartialEq)]
pub struct PostProcessParams {
    pub min_area_px: usize,
    pub max_gap_px: usize,
    pub max_angle_deg: f64,
}

impl Default for PostProcessParams {
    fn default() -> Self {
        PostProcessParams { min_area_px: 150, max_gap_px: 10, max_angle_deg: 30.0 }
    }
}

impl PostProcessParams {
    /// Rescales the pixel thresholds from the 768-px reference to `min_dim`:
    /// areas quadratically, gaps linearly.
    pub fn scaled_for(&self, min_dim: usize) -> Self {
        let s = min_dim as f64 / REFERENCE_DIM as f64;
        PostProcessParams {
            min_area_px: (self.min_area_px as f64 * s * s).round() as usize,
            max_gap_px: (self.max_gap_px as f64 * s).round() as usize,
            max_angle_deg: self.max_angle_deg,
        }
    }
}

/// Small-region removal followed by gap bridging.
pub fn postprocess(m: &BinaryMask, p: &PostProcessParams) -> BinaryMask {
    let cleaned = remove_small_components(m, p.min_area_px);
    bridge_gaps(&cleaned, p.max_gap_px, p.max_angle_deg)
}

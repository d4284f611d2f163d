use super::MetricError;
use crate::geometry::RoiMask;
use crate::grid::BinaryMask;
use crate::num::Real;

/// Box edge lengths used for box counting.
pub const BOX_SIZES: [usize; 8] = [2, 4, 8, 16, 32, 64, 128, 256];

/// Fraction of region pixels that are vessel; 0 for an empty region.
pub fn vessel_density<F: Real>(m: &BinaryMask, roi: &RoiMask) -> F {
    let area = roi.mask.count();
    if area == 0 {
        return F::zero();
    }
    F::from_usize_lossy(m.count_and(&roi.mask)) / F::from_usize_lossy(area)
}

/// Occupied-box counts `N(ε)` for each of [`BOX_SIZES`], with the grid
/// anchored at `anchor` (boxes start at `anchor + k ε`).
pub fn box_counts(m: &BinaryMask, roi: &RoiMask, anchor: (usize, usize)) -> Vec<(usize, usize)> {
    let (w, h) = m.dims();
    let pixels: Vec<(usize, usize)> = m
        .foreground()
        .filter(|&(x, y)| roi.mask.at(x, y) && x >= anchor.0 && y >= anchor.1)
        .collect();
    BOX_SIZES
        .iter()
        .map(|&eps| {
            let bw = (w - anchor.0).div_ceil(eps);
            let bh = (h - anchor.1).div_ceil(eps);
            let mut occupied = vec![false; bw * bh];
            let mut n = 0;
            for &(x, y) in &pixels {
                let i = ((y - anchor.1) / eps) * bw + (x - anchor.0) / eps;
                if !occupied[i] {
                    occupied[i] = true;
                    n += 1;
                }
            }
            (eps, n)
        })
        .collect()
}

/// Box-counting (Minkowski–Bouligand) dimension of `m ∩ roi`.
///
/// Slope of the least-squares line through `(ln 1/ε, ln N(ε))`. The box grid
/// is anchored at the region's bounding-box origin; box sizes at which the
/// whole set falls in a single box are left out of the fit.
pub fn fractal_dimension<F: Real>(m: &BinaryMask, roi: &RoiMask) -> Result<F, MetricError> {
    let bb = roi.mask.bounding_box().ok_or(MetricError::EmptyRoi)?;
    fractal_dimension_anchored(m, roi, (bb.0, bb.1))
}

pub fn fractal_dimension_anchored<F: Real>(
    m: &BinaryMask,
    roi: &RoiMask,
    anchor: (usize, usize),
) -> Result<F, MetricError> {
    let counts = box_counts(m, roi, anchor);
    if counts.iter().all(|&(_, n)| n == 0) {
        return Err(MetricError::EmptyMask);
    }
    let pts: Vec<(F, F)> = counts
        .iter()
        .filter(|&&(_, n)| n > 1)
        .map(|&(eps, n)| (-F::lit((eps as f64).ln()), F::lit((n as f64).ln())))
        .collect();
    if pts.len() < 2 {
        return Err(MetricError::TooFewScales);
    }
    Ok(least_squares_slope(&pts))
}

fn least_squares_slope<F: Real>(pts: &[(F, F)]) -> F {
    let n = F::from_usize_lossy(pts.len());
    let mx = pts.iter().map(|p| p.0).sum::<F>() / n;
    let my = pts.iter().map(|p| p.1).sum::<F>() / n;
    let sxy: F = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: F = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    sxy / sxx
}

use super::{MetricError, Quantity, SegmentGraph};
use crate::geometry::RoiMask;
use crate::grid::{BinaryMask, Grid};
use crate::meta::PixelScale;
use crate::num::Real;
use crate::raster::Skeleton;

/// Vessel pixels over skeleton pixels inside the region.
pub fn global_calibre<F: Real>(
    m: &BinaryMask,
    skel: &Skeleton,
    roi: &RoiMask,
    scale: &PixelScale,
) -> Result<Quantity<F>, MetricError> {
    let n_skel = skel.mask.count_and(&roi.mask);
    if n_skel == 0 {
        return Err(MetricError::EmptySkeleton);
    }
    let px = F::from_usize_lossy(m.count_and(&roi.mask)) / F::from_usize_lossy(n_skel);
    Ok(Quantity::length(px, scale))
}

/// Inscribed-circle diameter at `path[i]`, in pixels.
///
/// The distance map is sampled on the path pixel and one pixel either side
/// along the local normal. Across a vessel the distance map is a tent whose
/// apex can fall between pixel centres; the apex height `h` is recovered
/// from the three samples and the diameter reported as `2h - 1`, the width
/// in pixels of the run the tent was measured on.
pub fn ridge_calibre<F: Real>(edt: &Grid<F>, path: &[(usize, usize)], i: usize) -> F {
    ridge_sample(edt, path, i).0
}

/// Calibre and sub-pixel ridge position at `path[i]`.
pub(crate) fn ridge_sample<F: Real>(edt: &Grid<F>, path: &[(usize, usize)], i: usize) -> (F, (F, F)) {
    let (x, y) = path[i];
    let f0 = *edt.get(x, y);
    let one = F::one();
    let two = F::lit(2.0);
    let (px, py) = (F::lit(x as f64), F::lit(y as f64));
    let plain = ((two * f0 - one).max(one), (px, py));
    if path.len() < 2 {
        return plain;
    }
    let a = path[i.saturating_sub(2)];
    let b = path[(i + 2).min(path.len() - 1)];
    let (tx, ty) = (F::lit(b.0 as f64 - a.0 as f64), F::lit(b.1 as f64 - a.1 as f64));
    let norm = (tx * tx + ty * ty).sqrt();
    if norm == F::zero() {
        return plain;
    }
    let (nx, ny) = (-ty / norm, tx / norm);
    let fp = bilinear(edt, px + nx, py + ny);
    let fm = bilinear(edt, px - nx, py - ny);
    let half = F::lit(0.5);
    let c = ((fp - fm) / two).max(-half).min(half);
    ((two * (f0 + c.abs()) - one).max(one), (px + c * nx, py + c * ny))
}

/// Bilinear sample; outside the grid the distance is taken as zero.
fn bilinear<F: Real>(g: &Grid<F>, x: F, y: F) -> F {
    let x0 = x.floor();
    let y0 = y.floor();
    let (fx, fy) = (x - x0, y - y0);
    let sample = |xi: F, yi: F| -> F {
        let (xi, yi) = (xi.to_f64_lossy() as isize, yi.to_f64_lossy() as isize);
        g.get_signed(xi, yi).copied().unwrap_or(F::zero())
    };
    let one = F::one();
    let top = sample(x0, y0) * (one - fx) + sample(x0 + one, y0) * fx;
    let bottom = sample(x0, y0 + one) * (one - fx) + sample(x0 + one, y0 + one) * fx;
    top * (one - fy) + bottom * fy
}

/// Unweighted mean over segments of each segment's mean calibre inside the
/// region.
pub fn local_calibre<F: Real>(
    g: &SegmentGraph<F>,
    roi: &RoiMask,
    scale: &PixelScale,
) -> Result<Quantity<F>, MetricError> {
    let per_segment: Vec<F> = g
        .segments
        .iter()
        .filter_map(|s| {
            let inside: Vec<F> = s
                .path
                .iter()
                .zip(&s.calibre_samples)
                .filter(|((x, y), _)| roi.mask.at(*x, *y))
                .map(|(_, &c)| c)
                .collect();
            crate::num::mean(&inside)
        })
        .collect();
    let px = crate::num::mean(&per_segment).ok_or(MetricError::NoSegmentsInRoi)?;
    Ok(Quantity::length(px, scale))
}

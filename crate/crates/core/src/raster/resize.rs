//! Resampling between the working and native resolutions.

use crate::grid::Grid;
use crate::num::Real;

/// Non-fatal resize conditions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ResizeWarning {
    /// The source is not square; sampling is still performed per axis.
    NonSquareInput { width: usize, height: usize },
}

fn check_square<T>(g: &Grid<T>) -> Option<ResizeWarning> {
    (g.width() != g.height())
        .then_some(ResizeWarning::NonSquareInput { width: g.width(), height: g.height() })
}

/// Nearest-neighbour resampling with pixel-centre alignment. Used for masks and
/// label rasters; an integer upscale maps every source pixel to a full block.
pub fn resize_nearest<T: Copy>(
    g: &Grid<T>,
    target: (usize, usize),
) -> (Grid<T>, Option<ResizeWarning>) {
    let warn = check_square(g);
    if g.dims() == target {
        return (g.clone(), warn);
    }
    let (sw, sh) = g.dims();
    let (tw, th) = target;
    let xs: Vec<usize> = (0..tw).map(|x| ((2 * x + 1) * sw / (2 * tw)).min(sw - 1)).collect();
    let ys: Vec<usize> = (0..th).map(|y| ((2 * y + 1) * sh / (2 * th)).min(sh - 1)).collect();
    (Grid::from_fn(tw, th, |x, y| g.at(xs[x], ys[y])), warn)
}

/// Bilinear resampling with pixel-centre alignment and edge clamping.
pub fn resize_bilinear<F: Real>(
    g: &Grid<F>,
    target: (usize, usize),
) -> (Grid<F>, Option<ResizeWarning>) {
    let warn = check_square(g);
    if g.dims() == target {
        return (g.clone(), warn);
    }
    let (sw, sh) = g.dims();
    let (tw, th) = target;
    let axis = |n_src: usize, n_dst: usize| -> Vec<(usize, usize, F)> {
        (0..n_dst)
            .map(|i| {
                let s = ((i as f64 + 0.5) * n_src as f64 / n_dst as f64 - 0.5)
                    .clamp(0.0, (n_src - 1) as f64);
                let i0 = s.floor() as usize;
                let i1 = (i0 + 1).min(n_src - 1);
                (i0, i1, F::lit(s - i0 as f64))
            })
            .collect()
    };
    let xs = axis(sw, tw);
    let ys = axis(sh, th);
    let out = Grid::from_fn(tw, th, |x, y| {
        let (x0, x1, fx) = xs[x];
        let (y0, y1, fy) = ys[y];
        let top = g.at(x0, y0) * (F::one() - fx) + g.at(x1, y0) * fx;
        let bottom = g.at(x0, y1) * (F::one() - fx) + g.at(x1, y1) * fx;
        top * (F::one() - fy) + bottom * fy
    });
    (out, warn)
}

//! Rasterisation helpers shared by gap bridging, the phantom generator and the
//! overlay renderer. All writes are clipped to the grid.

use crate::grid::Grid;

/// Sets every pixel whose centre lies within `width / 2` of the segment
/// `a`-`b` (a capsule). `width` is in pixels; width 1 draws a thin line.
pub(crate) fn stamp_capsule<T: Copy>(
    g: &mut Grid<T>,
    a: (f64, f64),
    b: (f64, f64),
    width: f64,
    value: T,
) {
    let radius = ((width - 1.0) / 2.0).max(0.0) + 0.25;
    let (w, h) = g.dims();
    let x0 = (a.0.min(b.0) - radius).floor().max(0.0) as isize;
    let y0 = (a.1.min(b.1) - radius).floor().max(0.0) as isize;
    let x1 = ((a.0.max(b.0) + radius).ceil() as isize).min(w as isize - 1);
    let y1 = ((a.1.max(b.1) + radius).ceil() as isize).min(h as isize - 1);
    let (dx, dy) = (b.0 - a.0, b.1 - a.1);
    let len2 = dx * dx + dy * dy;
    for y in y0..=y1 {
        for x in x0..=x1 {
            let (px, py) = (x as f64, y as f64);
            let t = if len2 > 0.0 {
                (((px - a.0) * dx + (py - a.1) * dy) / len2).clamp(0.0, 1.0)
            } else {
                0.0
            };
            let (cx, cy) = (a.0 + t * dx - px, a.1 + t * dy - py);
            if cx * cx + cy * cy <= radius * radius {
                g.set(x as usize, y as usize, value);
            }
        }
    }
}

/// Pixels of the 8-connected digital line from `a` to `b` (Bresenham),
/// including both ends. Points may lie outside the grid.
pub(crate) fn line_pixels(a: (isize, isize), b: (isize, isize)) -> Vec<(isize, isize)> {
    let (mut x, mut y) = a;
    let dx = (b.0 - a.0).abs();
    let dy = -(b.1 - a.1).abs();
    let sx = if a.0 < b.0 { 1 } else { -1 };
    let sy = if a.1 < b.1 { 1 } else { -1 };
    let mut err = dx + dy;
    let mut out = Vec::with_capacity((dx - dy) as usize + 1);
    loop {
        out.push((x, y));
        if (x, y) == b {
            break;
        }
        let e2 = 2 * err;
        if e2 >= dy {
            err += dy;
            x += sx;
        }
        if e2 <= dx {
            err += dx;
            y += sy;
        }
    }
    out
}

/// Writes the pixels of a thin line, skipping those outside the grid.
pub(crate) fn draw_line<T: Copy>(g: &mut Grid<T>, a: (isize, isize), b: (isize, isize), value: T) {
    for (x, y) in line_pixels(a, b) {
        if g.in_bounds(x, y) {
            g.set(x as usize, y as usize, value);
        }
    }
}

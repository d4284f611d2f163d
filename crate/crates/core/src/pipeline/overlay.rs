use std::f64::consts::TAU;

use super::ImageGeometry;
use crate::grid::{GrayImage, Grid};
use crate::ingestion::SegmentationBundle;
use crate::raster::draw::draw_line;

pub type RgbImage = Grid<[u8; 3]>;

pub const ARTERY_RGB: [u8; 3] = [230, 25, 25];
pub const VEIN_RGB: [u8; 3] = [25, 70, 235];
pub const VESSEL_RGB: [u8; 3] = [255, 150, 0];
pub const DISC_RGB: [u8; 3] = [0, 210, 0];
pub const FOVEA_RGB: [u8; 3] = [255, 235, 0];
pub const ZONE_RGB: [u8; 3] = [220, 0, 220];

const ALPHA: f64 = 0.5;
const DASH_PX: f64 = 6.0;

/// Overlay classes, later ones drawn on top.
#[derive(Clone, Copy, PartialEq, Eq)]
enum Layer {
    None,
    Vessel,
    Artery,
    Vein,
    Zone,
    Disc,
    Fovea,
}

impl Layer {
    fn colour(self) -> Option<[u8; 3]> {
        match self {
            Layer::None => None,
            Layer::Vessel => Some(VESSEL_RGB),
            Layer::Artery => Some(ARTERY_RGB),
            Layer::Vein => Some(VEIN_RGB),
            Layer::Zone => Some(ZONE_RGB),
            Layer::Disc => Some(DISC_RGB),
            Layer::Fovea => Some(FOVEA_RGB),
        }
    }
}

fn draw_closed(layer: &mut Grid<Layer>, pts: &[(f64, f64)], value: Layer, dashed: bool) {
    let mut arc = 0.0;
    for i in 0..pts.len() {
        let (a, b) = (pts[i], pts[(i + 1) % pts.len()]);
        let on = !dashed || ((arc / DASH_PX) as usize).is_multiple_of(2);
        arc += (b.0 - a.0).hypot(b.1 - a.1);
        if on {
            let p = |q: (f64, f64)| (q.0.round() as isize, q.1.round() as isize);
            draw_line(layer, p(a), p(b), value);
        }
    }
}

fn circle(c: (f64, f64), r: f64) -> Vec<(f64, f64)> {
    let n = ((TAU * r).ceil() as usize).max(16);
    (0..n).map(|i| (i as f64 / n as f64 * TAU).sin_cos()).map(|(s, co)| (c.0 + r * co, c.1 + r * s)).collect()
}

/// Composite for visual quality control: arteries red, veins blue, vessels
/// only in the binary map orange, disc ellipse green, fovea crosshair yellow
/// and dashed zone boundaries magenta, blended at 50% over the grayscale.
pub fn render_overlay(img: &GrayImage, bundle: &SegmentationBundle, geometry: &ImageGeometry) -> RgbImage {
    let (w, h) = img.dims();
    let mut layer = Grid::filled(w, h, Layer::None);
    for (mask, value) in [(&bundle.binary_vessel, Layer::Vessel), (&bundle.artery, Layer::Artery), (&bundle.vein, Layer::Vein)] {
        if let Some(m) = mask.as_ref().filter(|m| m.dims() == (w, h)) {
            for (x, y) in m.foreground() {
                layer.set(x, y, value);
            }
        }
    }
    if let Some(d) = &geometry.disc {
        let c = (d.ellipse.centre_x, d.ellipse.centre_y);
        let (r, dd) = (d.radius(), d.diameter);
        for offset in [0.5, 1.0, 2.0] {
            draw_closed(&mut layer, &circle(c, r + offset * dd), Layer::Zone, true);
        }
        let n = ((TAU * d.ellipse.major_axis / 2.0).ceil() as usize).max(16);
        let outline: Vec<(f64, f64)> = (0..n).map(|i| d.ellipse.point_at(i as f64 / n as f64 * TAU)).collect();
        draw_closed(&mut layer, &outline, Layer::Disc, false);
    }
    if let Some(f) = &geometry.fovea {
        let arm = (w.min(h) as f64 / 768.0 * 12.0).max(3.0).round() as isize;
        let (x, y) = (f.x.round() as isize, f.y.round() as isize);
        draw_line(&mut layer, (x - arm, y), (x + arm, y), Layer::Fovea);
        draw_line(&mut layer, (x, y - arm), (x, y + arm), Layer::Fovea);
    }
    let mut out = Grid::filled(w, h, [0u8; 3]);
    for (i, (o, &g)) in out.as_mut_slice().iter_mut().zip(img.as_slice()).enumerate() {
        *o = match layer.as_slice()[i].colour() {
            None => [g; 3],
            Some(c) => c.map(|v| ((1.0 - ALPHA) * g as f64 + ALPHA * v as f64).round() as u8),
        };
    }
    out
}

pub fn save_rgb(path: &std::path::Path, img: &RgbImage) -> Result<(), image::ImageError> {
    let raw: Vec<u8> = img.as_slice().iter().flatten().copied().collect();
    image::RgbImage::from_raw(img.width() as u32, img.height() as u32, raw).expect("buffer matches dims").save(path)
}

//! Synthetic SLO phantoms with exact ground truth: a radial artery/vein tree
//! leaving an elliptical optic disc, a foveal pit, illumination shading and
//! sensor noise. Deterministic for a given seed.

use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::grid::{BinaryMask, GrayImage, Grid};
use crate::ingestion::{write_masks, IngestError, SegmentationBundle};
use crate::meta::Location;
use crate::raster::REFERENCE_DIM;

#[derive(Debug, Clone, PartialEq)]
pub struct PhantomParams {
    pub size: usize,
    pub location: Location,
    pub seed: u64,
    /// Standard deviation of the additive Gaussian noise, grey levels.
    pub noise_sd: f64,
}

impl Default for PhantomParams {
    fn default() -> Self {
        PhantomParams { size: REFERENCE_DIM, location: Location::DiscCentred, seed: 1, noise_sd: 6.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PhantomVesselKind {
    Artery,
    Vein,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhantomVessel {
    pub kind: PhantomVesselKind,
    /// Centreline in image coordinates.
    pub centreline: Vec<(f64, f64)>,
    /// Width in pixels; constant along the vessel.
    pub width: f64,
    /// Index of the vessel this one branches from.
    pub parent: Option<usize>,
    /// Index into `centreline` where a child branches off, if any.
    pub branch_at: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct Phantom {
    pub image: GrayImage,
    /// Ground truth; artery and vein exclude the disc, as a label raster would.
    pub truth: SegmentationBundle,
    pub vessels: Vec<PhantomVessel>,
    pub disc_centre: (f64, f64),
    /// Semi-axes (horizontal, vertical).
    pub disc_axes: (f64, f64),
    pub fovea: (f64, f64),
}

impl Phantom {
    /// Radial distance from the disc centre where trunks branch (smallest).
    pub fn min_branch_radius(&self) -> f64 {
        self.vessels
            .iter()
            .filter_map(|v| {
                v.branch_at.map(|i| {
                    let (x, y) = v.centreline[i];
                    ((x - self.disc_centre.0).powi(2) + (y - self.disc_centre.1).powi(2)).sqrt()
                })
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// Trunk widths per kind (vessels without a parent).
    pub fn trunk_widths(&self, kind: PhantomVesselKind) -> Vec<f64> {
        self.vessels.iter().filter(|v| v.kind == kind && v.parent.is_none()).map(|v| v.width).collect()
    }

    /// Writes `<stem>.png` and its ground-truth masks into `dir`; returns
    /// the image path.
    pub fn write_to(&self, dir: &Path, stem: &str) -> Result<PathBuf, IngestError> {
        let path = dir.join(format!("{stem}.png"));
        let img = &self.image;
        image::GrayImage::from_raw(img.width() as u32, img.height() as u32, img.as_slice().to_vec())
            .expect("buffer matches dims")
            .save(&path)
            .map_err(|e| IngestError::UnreadableFile { path: path.clone(), reason: e.to_string() })?;
        write_masks(dir, stem, &self.truth)?;
        Ok(path)
    }
}

const TRUNKS_PER_KIND: usize = 6;

/// Builds a phantom. Disc-centred images put the disc at the centre with the
/// fovea 2.4 disc diameters to its left; macula-centred ones put the fovea
/// at the centre. The disc always lies right of the fovea (a right eye).
pub fn generate(p: &PhantomParams) -> Phantom {
    let mut rng = ChaCha8Rng::seed_from_u64(p.seed);
    let n = p.size;
    let s = n as f64 / REFERENCE_DIM as f64;
    let mid = (n as f64 - 1.0) / 2.0;
    let disc_axes = (52.0 * s, 58.0 * s);
    let offset = 2.4 * (disc_axes.0 + disc_axes.1);
    let (disc_centre, fovea) = match p.location {
        Location::MaculaCentred => ((mid + offset, mid), (mid, mid)),
        _ => ((mid, mid), (mid - offset, mid)),
    };

    let mut vessels = Vec::new();
    for k in 0..2 * TRUNKS_PER_KIND {
        let kind = if k % 2 == 0 { PhantomVesselKind::Artery } else { PhantomVesselKind::Vein };
        let base_deg = 15.0 + 30.0 * k as f64 + rng.gen_range(-4.0..4.0);
        let theta = base_deg.to_radians();
        let width: f64 = match kind {
            PhantomVesselKind::Artery => rng.gen_range(6.0f64..8.5),
            PhantomVesselKind::Vein => rng.gen_range(8.0f64..10.5),
        };
        let width = (width * s.max(0.5)).round();
        // bend away from the horizontal axis on the foveal side
        let bend = if theta.cos() < 0.0 { -theta.sin().signum() * 0.0012 / s } else { 0.0 };
        let wiggle = (rng.gen_range(1.5..3.5) * s, rng.gen_range(70.0..120.0) * s, rng.gen_range(0.0..std::f64::consts::TAU));
        let trunk = walk(disc_centre, theta, bend, wiggle, 330.0 * s, n);
        let branch_r = rng.gen_range(185.0..225.0) * s;
        let branch_at = trunk
            .iter()
            .position(|&(x, y)| ((x - disc_centre.0).powi(2) + (y - disc_centre.1).powi(2)).sqrt() >= branch_r);
        let parent = vessels.len();
        vessels.push(PhantomVessel { kind, centreline: trunk.clone(), width, parent: None, branch_at });
        if let Some(i) = branch_at {
            let start = trunk[i];
            let (dx, dy) = (trunk[(i + 1).min(trunk.len() - 1)].0 - trunk[i.saturating_sub(1)].0,
                            trunk[(i + 1).min(trunk.len() - 1)].1 - trunk[i.saturating_sub(1)].1);
            let dir = dy.atan2(dx) + 12f64.to_radians();
            let len = rng.gen_range(110.0..160.0) * s;
            let child_w = (width * 0.6).round().max(3.0);
            let wig = (wiggle.0 * 0.7, wiggle.1 * 0.8, wiggle.2 + 1.0);
            let branch = walk(start, dir, 0.0, wig, len, n);
            if branch.len() > 3 {
                vessels.push(PhantomVessel { kind, centreline: branch, width: child_w, parent: Some(parent), branch_at: None });
            }
        }
    }

    render(p, &mut rng, vessels, disc_centre, disc_axes, fovea)
}

/// Centreline from `start` heading `theta`, slowly turning by `bend` rad/px
/// with a sinusoidal lateral wiggle, stopping at `length` px or 4 px from
/// the image edge.
fn walk(
    start: (f64, f64),
    theta: f64,
    bend: f64,
    wiggle: (f64, f64, f64),
    length: f64,
    n: usize,
) -> Vec<(f64, f64)> {
    let (amp, period, phase) = wiggle;
    let mut pts = Vec::new();
    let (mut x, mut y) = start;
    let mut heading = theta;
    let step = 1.0;
    let mut t = 0.0;
    let limit = n as f64 - 5.0;
    while t <= length {
        let lateral = amp * (2.0 * std::f64::consts::PI * t / period + phase).sin() - amp * phase.sin();
        let (nx, ny) = (-heading.sin(), heading.cos());
        let p = (x + nx * lateral, y + ny * lateral);
        if p.0 < 4.0 || p.1 < 4.0 || p.0 > limit || p.1 > limit {
            break;
        }
        pts.push(p);
        x += heading.cos() * step;
        y += heading.sin() * step;
        heading += bend * step;
        t += step;
    }
    pts
}

fn render(
    p: &PhantomParams,
    rng: &mut ChaCha8Rng,
    vessels: Vec<PhantomVessel>,
    disc_centre: (f64, f64),
    disc_axes: (f64, f64),
    fovea: (f64, f64),
) -> Phantom {
    let n = p.size;
    let s = n as f64 / REFERENCE_DIM as f64;
    // per-pixel vessel coverage and label
    let mut cover = Grid::filled(n, n, 0.0f64);
    let mut artery = BinaryMask::new(n, n);
    let mut vein = BinaryMask::new(n, n);
    for v in &vessels {
        let r = (v.width - 1.0) / 2.0 + 0.25;
        let target = if v.kind == PhantomVesselKind::Artery { &mut artery } else { &mut vein };
        for pair in v.centreline.windows(2) {
            let (a, b) = (pair[0], pair[1]);
            let pad = r + 2.0;
            let x0 = (a.0.min(b.0) - pad).floor().max(0.0) as usize;
            let y0 = (a.1.min(b.1) - pad).floor().max(0.0) as usize;
            let x1 = ((a.0.max(b.0) + pad).ceil() as usize).min(n - 1);
            let y1 = ((a.1.max(b.1) + pad).ceil() as usize).min(n - 1);
            let (dx, dy) = (b.0 - a.0, b.1 - a.1);
            let len2 = dx * dx + dy * dy;
            for y in y0..=y1 {
                for x in x0..=x1 {
                    let (px, py) = (x as f64, y as f64);
                    let t = if len2 > 0.0 { (((px - a.0) * dx + (py - a.1) * dy) / len2).clamp(0.0, 1.0) } else { 0.0 };
                    let d = ((a.0 + t * dx - px).powi(2) + (a.1 + t * dy - py).powi(2)).sqrt();
                    let c = (r + 0.5 - d).clamp(0.0, 1.0);
                    if c > *cover.get(x, y) {
                        cover.set(x, y, c);
                    }
                    if d <= r {
                        target.set(x, y, true);
                    }
                }
            }
        }
    }
    // where labels overlap, keep the vein label on top
    let artery = artery.difference(&vein);
    let disc = Grid::from_fn(n, n, |x, y| {
        let (dx, dy) = ((x as f64 - disc_centre.0) / disc_axes.0, (y as f64 - disc_centre.1) / disc_axes.1);
        dx * dx + dy * dy <= 1.0
    });
    let fovea_r = 20.0 * s;
    let fovea_mask = Grid::from_fn(n, n, |x, y| {
        (x as f64 - fovea.0).powi(2) + (y as f64 - fovea.1).powi(2) <= fovea_r * fovea_r
    });
    let binary = artery.union(&vein);

    let noise = Normal::new(0.0, p.noise_sd.max(0.0)).expect("finite sd");
    let mid = n as f64 / 2.0;
    let image = Grid::from_fn(n, n, |x, y| {
        let (xf, yf) = (x as f64, y as f64);
        // vignetting
        let r2 = ((xf - mid).powi(2) + (yf - mid).powi(2)) / (mid * mid);
        let mut v = 165.0 - 35.0 * r2;
        let (ddx, ddy) = ((xf - disc_centre.0) / disc_axes.0, (yf - disc_centre.1) / disc_axes.1);
        let dr = (ddx * ddx + ddy * ddy).sqrt();
        v += 55.0 * (1.0 - ((dr - 1.0) * 6.0).clamp(0.0, 1.0));
        let fd2 = (xf - fovea.0).powi(2) + (yf - fovea.1).powi(2);
        v -= 30.0 * (-fd2 / (2.0 * (35.0 * s).powi(2))).exp();
        v -= 70.0 * cover.at(x, y);
        v
    });
    let noisy: Vec<u8> =
        image.as_slice().iter().map(|&v| (v + noise.sample(rng)).round().clamp(0.0, 255.0) as u8).collect();
    let image = Grid::from_vec(n, n, noisy).expect("dims");

    let truth = SegmentationBundle {
        binary_vessel: Some(binary),
        artery: Some(artery.difference(&disc)),
        vein: Some(vein.difference(&disc)),
        optic_disc: Some(disc),
        fovea: Some(fovea_mask),
        corrected: false,
    };
    Phantom { image, truth, vessels, disc_centre, disc_axes, fovea }
}

//! Multi-scale Hessian (Frangi) vesselness, used as a classical stand-in when
//! no vessel mask is supplied. Binary vessel maps only.

use rayon::prelude::*;

use crate::grid::{BinaryMask, GrayImage, Grid};
use crate::num::Real;
use crate::raster::{postprocess, threshold, PostProcessParams, REFERENCE_DIM};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Polarity {
    /// Vessels darker than the background.
    DarkOnBright,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VesselnessParams {
    /// Gaussian scales in px at 768 px, ascending.
    pub scales_px: Vec<f64>,
    pub beta: f64,
    /// Structureness constant; `None` uses half the largest Hessian
    /// Frobenius norm at each scale.
    pub c: Option<f64>,
    pub polarity: Polarity,
    pub prob_threshold: f64,
}

impl Default for VesselnessParams {
    fn default() -> Self {
        VesselnessParams {
            scales_px: vec![1.5, 2.5, 3.5, 5.0],
            beta: 0.5,
            c: None,
            polarity: Polarity::DarkOnBright,
            prob_threshold: 0.10,
        }
    }
}

impl VesselnessParams {
    /// Scales the Gaussian scales linearly from the 768-px reference.
    pub fn scaled_for(&self, min_dim: usize) -> Self {
        let s = min_dim as f64 / REFERENCE_DIM as f64;
        VesselnessParams { scales_px: self.scales_px.iter().map(|v| v * s).collect(), ..self.clone() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VesselnessWarning {
    /// The image has no dynamic range; the response is all zero.
    FlatImage,
}

struct Kernels {
    radius: usize,
    g: Vec<f64>,
    d1: Vec<f64>,
    d2: Vec<f64>,
}

fn kernels(sigma: f64) -> Kernels {
    let radius = (4.0 * sigma).ceil() as usize;
    let xs: Vec<f64> = (0..=2 * radius).map(|i| i as f64 - radius as f64).collect();
    let raw: Vec<f64> = xs.iter().map(|x| (-x * x / (2.0 * sigma * sigma)).exp()).collect();
    let norm: f64 = raw.iter().sum();
    let g: Vec<f64> = raw.iter().map(|v| v / norm).collect();
    let s2 = sigma * sigma;
    let d1 = xs.iter().zip(&g).map(|(x, g)| -x / s2 * g).collect();
    let mut d2: Vec<f64> = xs.iter().zip(&g).map(|(x, g)| (x * x / (s2 * s2) - 1.0 / s2) * g).collect();
    // second-derivative kernel must annihilate constants
    let mean = d2.iter().sum::<f64>() / d2.len() as f64;
    d2.iter_mut().for_each(|v| *v -= mean);
    Kernels { radius, g, d1, d2 }
}

#[inline]
fn reflect(i: isize, n: usize) -> usize {
    let n = n as isize;
    let mut i = i;
    loop {
        if i < 0 {
            i = -i - 1;
        } else if i >= n {
            i = 2 * n - i - 1;
        } else {
            return i as usize;
        }
    }
}

fn convolve_rows(src: &Grid<f64>, k: &[f64], r: usize) -> Grid<f64> {
    let (w, h) = src.dims();
    let mut out = vec![0.0; w * h];
    out.par_chunks_mut(w).zip(src.as_slice().par_chunks(w)).for_each(|(o, row)| {
        for (x, ov) in o.iter_mut().enumerate() {
            let mut acc = 0.0;
            for (j, kv) in k.iter().enumerate() {
                acc += kv * row[reflect(x as isize + j as isize - r as isize, w)];
            }
            *ov = acc;
        }
    });
    Grid::from_vec(w, h, out).expect("dims")
}

fn convolve_cols(src: &Grid<f64>, k: &[f64], r: usize) -> Grid<f64> {
    let (w, h) = src.dims();
    let s = src.as_slice();
    let mut out = vec![0.0; w * h];
    out.par_chunks_mut(w).enumerate().for_each(|(y, o)| {
        for (j, kv) in k.iter().enumerate() {
            let sy = reflect(y as isize + j as isize - r as isize, h);
            let row = &s[sy * w..(sy + 1) * w];
            for (ov, v) in o.iter_mut().zip(row) {
                *ov += kv * v;
            }
        }
    });
    Grid::from_vec(w, h, out).expect("dims")
}

/// Scale-normalised Hessian `(Ixx, Ixy, Iyy)` at `sigma`.
fn hessian(img: &Grid<f64>, sigma: f64) -> (Grid<f64>, Grid<f64>, Grid<f64>) {
    let k = kernels(sigma);
    let r = k.radius;
    let s2 = sigma * sigma;
    let gx = convolve_rows(img, &k.g, r);
    let d1x = convolve_rows(img, &k.d1, r);
    let d2x = convolve_rows(img, &k.d2, r);
    let ixx = convolve_cols(&d2x, &k.g, r).map(|v| v * s2);
    let ixy = convolve_cols(&d1x, &k.d1, r).map(|v| v * s2);
    let iyy = convolve_cols(&gx, &k.d2, r).map(|v| v * s2);
    (ixx, ixy, iyy)
}

/// Frangi vesselness in `[0, 1]`: the per-pixel maximum over scales of
/// `exp(-Rb²/2β²)·(1 - exp(-S²/2c²))`, with `Rb = λ1/λ2`, `S² = λ1² + λ2²`
/// and `|λ1| ≤ |λ2|`, gated to `λ2 > 0` for dark vessels, then divided by
/// its maximum.
pub fn frangi_vesselness<F: Real>(img: &GrayImage, p: &VesselnessParams) -> (Grid<F>, Option<VesselnessWarning>) {
    let (w, h) = img.dims();
    let lo = img.as_slice().iter().copied().min().unwrap_or(0);
    let hi = img.as_slice().iter().copied().max().unwrap_or(0);
    if lo == hi {
        return (Grid::filled(w, h, F::zero()), Some(VesselnessWarning::FlatImage));
    }
    let src = img.map(|&v| v as f64);
    let beta2 = 2.0 * p.beta * p.beta;
    let mut best = vec![0.0f64; w * h];
    for &sigma in &p.scales_px {
        let (ixx, ixy, iyy) = hessian(&src, sigma);
        let (a, b, d) = (ixx.as_slice(), ixy.as_slice(), iyy.as_slice());
        let c = p.c.unwrap_or_else(|| {
            0.5 * (0..w * h)
                .map(|i| (a[i] * a[i] + 2.0 * b[i] * b[i] + d[i] * d[i]).sqrt())
                .fold(0.0, f64::max)
        });
        if c <= 0.0 {
            continue;
        }
        let c2 = 2.0 * c * c;
        best.par_iter_mut().enumerate().for_each(|(i, out)| {
            let (a, b, d) = (a[i], b[i], d[i]);
            let root = ((a - d) * (a - d) + 4.0 * b * b).sqrt();
            let (m1, m2) = ((a + d + root) / 2.0, (a + d - root) / 2.0);
            let (l1, l2) = if m1.abs() <= m2.abs() { (m1, m2) } else { (m2, m1) };
            let gated = match p.polarity {
                Polarity::DarkOnBright => l2 <= 0.0,
            };
            if gated {
                return;
            }
            let rb = l1 / l2;
            let s2 = l1 * l1 + l2 * l2;
            let v = (-rb * rb / beta2).exp() * (1.0 - (-s2 / c2).exp());
            if v > *out {
                *out = v;
            }
        });
    }
    let max = best.iter().copied().fold(0.0, f64::max);
    let scale = if max > 0.0 { 1.0 / max } else { 0.0 };
    let out = Grid::from_vec(w, h, best.into_iter().map(|v| F::lit(v * scale)).collect()).expect("dims");
    (out, None)
}

/// Thresholded vesselness followed by the standard mask post-processing.
pub fn segment_fallback(img: &GrayImage, p: &VesselnessParams) -> (BinaryMask, Option<VesselnessWarning>) {
    let min_dim = img.width().min(img.height());
    let (v, warn) = frangi_vesselness::<f64>(img, &p.scaled_for(min_dim));
    let m = threshold(&v, p.prob_threshold);
    (postprocess(&m, &PostProcessParams::default().scaled_for(min_dim)), warn)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bar_image(dark: bool) -> GrayImage {
        Grid::from_fn(96, 64, |x, y| {
            let on = (10..86).contains(&x) && (30..35).contains(&y);
            match (on, dark) {
                (true, true) | (false, false) => 60,
                _ => 200,
            }
        })
    }

    fn median(mut v: Vec<f64>) -> f64 {
        v.sort_by(|a, b| a.partial_cmp(b).unwrap());
        v[v.len() / 2]
    }

    #[test]
    fn dark_bar_stands_out() {
        let (r, warn) = frangi_vesselness::<f64>(&bar_image(true), &VesselnessParams::default());
        assert!(warn.is_none());
        let mid = r.at(48, 32);
        let bg = median(r.as_slice().to_vec());
        assert!(mid > 10.0 * bg && mid > 0.5, "mid {mid} bg {bg}");
    }

    #[test]
    fn polarity_gate() {
        let (r, _) = frangi_vesselness::<f64>(&bar_image(false), &VesselnessParams::default());
        assert!(r.at(48, 32) < 1e-3, "{}", r.at(48, 32));
    }

    #[test]
    fn constant_image() {
        let img = Grid::filled(48, 48, 128u8);
        let (r, warn) = frangi_vesselness::<f32>(&img, &VesselnessParams::default());
        assert_eq!(warn, Some(VesselnessWarning::FlatImage));
        assert!(r.as_slice().iter().all(|&v| v == 0.0));
        assert!(!segment_fallback(&img, &VesselnessParams::default()).0.any());
    }

    #[test]
    fn affine_intensity_invariance() {
        let a = bar_image(true);
        let b = a.map(|&v| v / 2 + 10);
        let (ra, _) = frangi_vesselness::<f64>(&a, &VesselnessParams::default());
        let (rb, _) = frangi_vesselness::<f64>(&b, &VesselnessParams::default());
        for (x, y) in ra.as_slice().iter().zip(rb.as_slice()) {
            assert!((x - y).abs() < 1e-9);
        }
    }

    #[test]
    fn response_peaks_near_half_width() {
        // bar 7 px wide; the scale-normalised ridge strength rises then falls
        let img = Grid::from_fn(96, 64, |_, y| if (29..36).contains(&y) { 50u8 } else { 200 });
        let scales = [1.0, 2.0, 3.5, 6.0, 9.0];
        let resp: Vec<f64> = scales
            .iter()
            .map(|&s| {
                let (a, b, d) = hessian(&img.map(|&v| v as f64), s);
                let (a, b, d) = (a.at(48, 32), b.at(48, 32), d.at(48, 32));
                let root = ((a - d) * (a - d) + 4.0 * b * b).sqrt();
                ((a + d + root) / 2.0).abs().max(((a + d - root) / 2.0).abs())
            })
            .collect();
        let peak = resp.iter().enumerate().max_by(|a, b| a.1.partial_cmp(b.1).unwrap()).unwrap().0;
        assert_eq!(scales[peak], 3.5, "{resp:?}");
    }
}

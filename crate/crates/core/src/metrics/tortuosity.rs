use super::{MetricError, SegmentGraph, VesselSegment};
use crate::geometry::RoiMask;
use crate::num::Real;

#[derive(Debug, Clone, PartialEq)]
pub struct TortuosityParams {
    /// Moving-average window in resampled points (odd).
    pub window: usize,
    /// Arc-length spacing of the resampled path, px.
    pub step_px: f64,
    /// Curvature magnitudes below this (1/px) count as zero.
    pub zero_curvature: f64,
}

impl Default for TortuosityParams {
    fn default() -> Self {
        TortuosityParams { window: 5, step_px: 2.0, zero_curvature: 1e-6 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TortuosityResult<F> {
    pub n_turns: usize,
    pub tau: F,
}

impl<F: Real> TortuosityResult<F> {
    fn straight() -> Self {
        TortuosityResult { n_turns: 1, tau: F::zero() }
    }
}

/// Tortuosity density of a vessel segment's sub-pixel centreline.
pub fn tortuosity_density<F: Real>(seg: &VesselSegment<F>, p: &TortuosityParams) -> TortuosityResult<F> {
    curve_tortuosity(&seg.centreline, p)
}

/// Tortuosity density of a polyline.
///
/// The curve is resampled uniformly by arc length, smoothed with a centred
/// moving average (narrowing at the ends so the end points stay fixed), and
/// its signed curvature estimated by central differences. Runs of constant
/// sign are turn curves; near-zero curvature joins the neighbouring turn. A
/// turn boundary sits at whichever of the two points either side of the sign
/// change has the smaller curvature magnitude. With `n` turns of arc length
/// `Lcs` and chord `Lx`, and total arc length `Lc`,
/// `τ = (n-1)/n · 1/Lc · Σ (Lcs/Lx - 1)`.
pub fn curve_tortuosity<F: Real>(points: &[(F, F)], p: &TortuosityParams) -> TortuosityResult<F> {
    let resampled = resample(points, F::lit(p.step_px));
    if resampled.len() < 3 {
        return TortuosityResult::straight();
    }
    let pts = smooth(&resampled, p.window);
    let n = pts.len();
    let zero = F::lit(p.zero_curvature);

    let kappa: Vec<F> = (1..n - 1).map(|i| curvature(pts[i - 1], pts[i], pts[i + 1])).collect();
    let mut signs: Vec<i8> = kappa
        .iter()
        .map(|&k| if k.abs() < zero { 0 } else if k > F::zero() { 1 } else { -1 })
        .collect();
    let Some(first) = signs.iter().copied().find(|&s| s != 0) else {
        return TortuosityResult::straight();
    };
    let mut last = first;
    for s in signs.iter_mut() {
        if *s == 0 {
            *s = last;
        } else {
            last = *s;
        }
    }

    // boundaries as indices into `pts`; kappa[j] belongs to pts[j + 1]
    let mut cuts = vec![0usize];
    for j in 1..signs.len() {
        if signs[j] != signs[j - 1] {
            let at = if kappa[j - 1].abs() <= kappa[j].abs() { j } else { j + 1 };
            if at > *cuts.last().expect("non-empty") {
                cuts.push(at);
            }
        }
    }
    cuts.push(n - 1);
    cuts.dedup();
    let turns = cuts.len() - 1;
    if turns <= 1 {
        return TortuosityResult::straight();
    }

    let total = arc_length(&pts);
    if total == F::zero() {
        return TortuosityResult::straight();
    }
    let mut excess = F::zero();
    for w in cuts.windows(2) {
        let sub = &pts[w[0]..=w[1]];
        let lcs = arc_length(sub);
        let lx = dist(sub[0], sub[sub.len() - 1]);
        if lx > F::zero() {
            excess = excess + (lcs / lx - F::one());
        }
    }
    let nt = F::from_usize_lossy(turns);
    TortuosityResult { n_turns: turns, tau: (nt - F::one()) / nt / total * excess }
}

/// Mean tortuosity over segments touching the region.
pub fn region_tortuosity<F: Real>(
    g: &SegmentGraph<F>,
    roi: &RoiMask,
    p: &TortuosityParams,
) -> Result<F, MetricError> {
    let taus: Vec<F> = g
        .segments
        .iter()
        .filter(|s| s.intersects(&roi.mask))
        .map(|s| tortuosity_density(s, p).tau)
        .collect();
    crate::num::mean(&taus).ok_or(MetricError::NoSegmentsInRoi)
}

fn dist<F: Real>(a: (F, F), b: (F, F)) -> F {
    ((a.0 - b.0) * (a.0 - b.0) + (a.1 - b.1) * (a.1 - b.1)).sqrt()
}

fn arc_length<F: Real>(pts: &[(F, F)]) -> F {
    pts.windows(2).map(|w| dist(w[0], w[1])).sum()
}

fn resample<F: Real>(points: &[(F, F)], step: F) -> Vec<(F, F)> {
    let total = arc_length(points);
    if points.len() < 2 || total == F::zero() {
        return points.to_vec();
    }
    let n = (total / step).round().to_usize().unwrap_or(1).max(2);
    let spacing = total / F::from_usize_lossy(n);
    let mut out = Vec::with_capacity(n + 1);
    out.push(points[0]);
    let mut seg = 0;
    let mut seg_start = F::zero();
    for k in 1..n {
        let s = spacing * F::from_usize_lossy(k);
        loop {
            let len = dist(points[seg], points[seg + 1]);
            if seg_start + len >= s || seg + 2 == points.len() {
                let t = if len > F::zero() { ((s - seg_start) / len).min(F::one()) } else { F::zero() };
                let (a, b) = (points[seg], points[seg + 1]);
                out.push((a.0 + (b.0 - a.0) * t, a.1 + (b.1 - a.1) * t));
                break;
            }
            seg_start = seg_start + len;
            seg += 1;
        }
    }
    out.push(points[points.len() - 1]);
    out
}

fn smooth<F: Real>(pts: &[(F, F)], window: usize) -> Vec<(F, F)> {
    let half = window / 2;
    let n = pts.len();
    (0..n)
        .map(|i| {
            let h = half.min(i).min(n - 1 - i);
            let run = &pts[i - h..=i + h];
            let k = F::from_usize_lossy(run.len());
            (run.iter().map(|p| p.0).sum::<F>() / k, run.iter().map(|p| p.1).sum::<F>() / k)
        })
        .collect()
}

/// Signed curvature from three consecutive points, central differences.
fn curvature<F: Real>(a: (F, F), b: (F, F), c: (F, F)) -> F {
    let two = F::lit(2.0);
    let (dx, dy) = ((c.0 - a.0) / two, (c.1 - a.1) / two);
    let (ddx, ddy) = (c.0 - two * b.0 + a.0, c.1 - two * b.1 + a.1);
    let speed2 = dx * dx + dy * dy;
    if speed2 == F::zero() {
        return F::zero();
    }
    (dx * ddy - dy * ddx) / (speed2 * speed2.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sine(amplitude: f64, length: f64, periods: f64) -> Vec<(f64, f64)> {
        (0..=length as usize)
            .map(|x| {
                let x = x as f64;
                (x, 200.0 + amplitude * (2.0 * std::f64::consts::PI * periods * x / length).sin())
            })
            .collect()
    }

    #[test]
    fn straight_is_zero() {
        let p = TortuosityParams::default();
        let line: Vec<(f64, f64)> = (0..100).map(|i| (i as f64, 0.5 * i as f64)).collect();
        let r = curve_tortuosity(&line, &p);
        assert_eq!(r.tau, 0.0);
        assert_eq!(r.n_turns, 1);
    }

    #[test]
    fn single_arc_is_zero() {
        let p = TortuosityParams::default();
        let arc: Vec<(f64, f64)> = (0..=90)
            .map(|d| {
                let t = (d as f64).to_radians();
                (100.0 * t.cos(), 100.0 * t.sin())
            })
            .collect();
        let r = curve_tortuosity(&arc, &p);
        assert_eq!((r.n_turns, r.tau), (1, 0.0));
    }

    #[test]
    fn sine_turns_and_monotonicity() {
        let p = TortuosityParams::default();
        let r = curve_tortuosity(&sine(20.0, 400.0, 2.0), &p);
        assert_eq!(r.n_turns, 4);
        let taus: Vec<f64> =
            [5.0, 10.0, 20.0, 40.0].iter().map(|&a| curve_tortuosity(&sine(a, 400.0, 2.0), &p).tau).collect();
        assert!(taus.windows(2).all(|w| w[1] > w[0]), "{taus:?}");
    }

    #[test]
    fn f32_agrees() {
        let p = TortuosityParams::default();
        let pts = sine(20.0, 400.0, 2.0);
        let pts32: Vec<(f32, f32)> = pts.iter().map(|&(x, y)| (x as f32, y as f32)).collect();
        let a = curve_tortuosity(&pts, &p).tau;
        let b = curve_tortuosity(&pts32, &p).tau as f64;
        assert!((a - b).abs() / a < 1e-3);
    }

    #[test]
    fn resample_spacing() {
        let line: Vec<(f64, f64)> = vec![(0.0, 0.0), (10.0, 0.0), (10.0, 10.0)];
        let r = resample(&line, 2.0);
        assert_eq!(r.len(), 11);
        for w in r.windows(2) {
            assert!((dist(w[0], w[1]) - 2.0).abs() < 1e-9 || w[0].0 == 10.0 || w[1].0 == 10.0);
        }
    }
}

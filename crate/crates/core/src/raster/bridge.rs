//! Directional gap bridging between facing vessel ends.

use super::draw::stamp_capsule;
use super::{label_components, prune_spurs, skeletonize, squared_distance_transform};
use crate::grid::{BinaryMask, NEIGHBOURS_8};

/// Steps walked back along the skeleton to estimate an end's direction.
const TANGENT_STEPS: usize = 10;

#[derive(Debug, Clone)]
struct VesselEnd {
    pixel: (usize, usize),
    /// Outward unit direction.
    dir: (f64, f64),
    /// Where the ray along `dir` leaves the mask.
    tip: (f64, f64),
    calibre: f64,
    component: u32,
}

/// Joins facing ends of distinct components.
///
/// Ends are skeleton endpoints. Two ends from different 8-connected components
/// are joined when the gap between their tips (where each end's outward ray
/// leaves the mask) is at most `max_gap_px`, they face each other, and their
/// outward directions are anti-parallel within `max_angle_deg`. Candidate pairs
/// are taken shortest first; each end is used once and components already
/// joined are not joined again. The connection is drawn between the two tips
/// with the rounded mean calibre of the ends.
///
/// The output is always a superset of the input.
pub fn bridge_gaps(m: &BinaryMask, max_gap_px: usize, max_angle_deg: f64) -> BinaryMask {
    let mut out = m.clone();
    if !m.any() {
        return out;
    }
    let d2 = squared_distance_transform(m);
    let skel = prune_spurs(&skeletonize(m), |x, y| d2.at(x, y).sqrt() as usize + 1).mask;
    let comps = label_components(m);

    let mut ends = Vec::new();
    for (x, y) in skel.foreground() {
        if skel.neighbour_count(x, y) != 1 {
            continue;
        }
        let walk = walk_back(&skel, (x, y));
        let Some(&(bx, by)) = walk.last() else { continue };
        let (dx, dy) = (x as f64 - bx as f64, y as f64 - by as f64);
        let norm = (dx * dx + dy * dy).sqrt();
        if norm == 0.0 {
            continue;
        }
        let dir = (dx / norm, dy / norm);
        let component = comps.labels.at(x, y);
        let calibre = std::iter::once((x, y))
            .chain(walk.iter().copied())
            .map(|(px, py)| 2.0 * d2.at(px, py).sqrt() - 1.0)
            .fold(1.0f64, f64::max);
        let tip = march_to_edge(m, &comps.labels, (x, y), dir, component);
        ends.push(VesselEnd { pixel: (x, y), dir, tip, calibre, component });
    }

    let cos_limit = max_angle_deg.to_radians().cos();
    let mut candidates = Vec::new();
    for i in 0..ends.len() {
        for j in i + 1..ends.len() {
            let (a, b) = (&ends[i], &ends[j]);
            if a.component == b.component {
                continue;
            }
            let gap = dist(a.tip, b.tip);
            if gap > max_gap_px as f64 {
                continue;
            }
            let ab = (b.pixel.0 as f64 - a.pixel.0 as f64, b.pixel.1 as f64 - a.pixel.1 as f64);
            let facing = dot(a.dir, ab) > 0.0 && dot(b.dir, (-ab.0, -ab.1)) > 0.0;
            // angle between a.dir and the reversed b.dir
            let aligned = -dot(a.dir, b.dir) >= cos_limit - 1e-12;
            if facing && aligned {
                candidates.push((gap, i, j));
            }
        }
    }
    candidates.sort_by(|p, q| p.0.total_cmp(&q.0).then(p.1.cmp(&q.1)).then(p.2.cmp(&q.2)));

    let mut parent: Vec<u32> = (0..=comps.count() as u32).collect();
    let mut used = vec![false; ends.len()];
    for (_, i, j) in candidates {
        if used[i] || used[j] {
            continue;
        }
        let (ra, rb) = (find(&mut parent, ends[i].component), find(&mut parent, ends[j].component));
        if ra == rb {
            continue;
        }
        parent[ra as usize] = rb;
        used[i] = true;
        used[j] = true;
        let width = ((ends[i].calibre + ends[j].calibre) / 2.0).round().max(1.0);
        stamp_capsule(&mut out, ends[i].tip, ends[j].tip, width, true);
    }
    out
}

fn walk_back(skel: &BinaryMask, start: (usize, usize)) -> Vec<(usize, usize)> {
    let mut path = Vec::with_capacity(TANGENT_STEPS);
    let mut prev = start;
    let mut cur = start;
    for _ in 0..TANGENT_STEPS {
        let next = NEIGHBOURS_8.iter().find_map(|(dx, dy)| {
            let (nx, ny) = (cur.0 as isize + dx, cur.1 as isize + dy);
            let p = (nx as usize, ny as usize);
            (matches!(skel.get_signed(nx, ny), Some(true)) && p != prev && p != cur
                && !path.contains(&p)
                && p != start)
                .then_some(p)
        });
        let Some(n) = next else { break };
        path.push(n);
        prev = cur;
        cur = n;
        if skel.neighbour_count(n.0, n.1) > 2 {
            break;
        }
    }
    path
}

fn march_to_edge(
    m: &BinaryMask,
    labels: &crate::grid::Grid<u32>,
    from: (usize, usize),
    dir: (f64, f64),
    component: u32,
) -> (f64, f64) {
    let mut tip = (from.0 as f64, from.1 as f64);
    for k in 1..=4 * (m.width() + m.height()) {
        let t = k as f64 * 0.5;
        let p = (from.0 as f64 + dir.0 * t, from.1 as f64 + dir.1 * t);
        let (px, py) = (p.0.round() as isize, p.1.round() as isize);
        match m.get_signed(px, py) {
            Some(true) if labels.at(px as usize, py as usize) == component => tip = p,
            _ => break,
        }
    }
    tip
}

fn find(parent: &mut [u32], mut x: u32) -> u32 {
    while parent[x as usize] != x {
        parent[x as usize] = parent[parent[x as usize] as usize];
        x = parent[x as usize];
    }
    x
}

#[inline]
fn dot(a: (f64, f64), b: (f64, f64)) -> f64 {
    a.0 * b.0 + a.1 * b.1
}

#[inline]
fn dist(a: (f64, f64), b: (f64, f64)) -> f64 {
    ((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt()
}

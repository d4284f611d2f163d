use super::calibre::ridge_sample;
use super::VesselMap;
use crate::geometry::DiscGeometry;
use crate::grid::{BinaryMask, Grid, NEIGHBOURS_8};
use crate::num::Real;
use crate::raster::{label_components, prune_spurs, Skeleton};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeKind {
    /// Three or more skeleton neighbours: bifurcation or crossing.
    Branch,
    /// One skeleton neighbour.
    End,
}

/// A junction cluster or end point. Adjacent branch pixels form one node.
#[derive(Debug, Clone, PartialEq)]
pub struct SegmentNode {
    pub kind: NodeKind,
    pub pixels: Vec<(usize, usize)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VesselSegment<F> {
    /// Skeleton pixels in order, including the node pixels at both ends.
    pub path: Vec<(usize, usize)>,
    pub arc_length: F,
    pub chord_length: F,
    pub calibre_samples: Vec<F>,
    pub mean_calibre: F,
    /// Sub-pixel centreline: each path pixel moved to the distance-map ridge.
    pub centreline: Vec<(F, F)>,
    /// Node indices at the two ends; `None` for a closed loop.
    pub end_nodes: Option<(usize, usize)>,
}

impl<F: Real> VesselSegment<F> {
    fn new(path: Vec<(usize, usize)>, edt: &Grid<F>, end_nodes: Option<(usize, usize)>) -> Self {
        let arc_length = path
            .windows(2)
            .map(|w| F::lit(step_length(w[0], w[1])))
            .sum::<F>();
        let (a, b) = (path[0], path[path.len() - 1]);
        let chord_length = F::lit(step_length(a, b));
        let (calibre_samples, centreline): (Vec<F>, Vec<(F, F)>) =
            (0..path.len()).map(|i| ridge_sample(edt, &path, i)).unzip();
        let mean_calibre = crate::num::mean(&calibre_samples).unwrap_or(F::zero());
        VesselSegment { path, arc_length, chord_length, calibre_samples, mean_calibre, centreline, end_nodes }
    }

    /// Whether any path pixel lies in `mask`.
    pub fn intersects(&self, mask: &BinaryMask) -> bool {
        self.path.iter().any(|&(x, y)| mask.at(x, y))
    }
}

fn step_length(a: (usize, usize), b: (usize, usize)) -> f64 {
    let dx = a.0 as f64 - b.0 as f64;
    let dy = a.1 as f64 - b.1 as f64;
    (dx * dx + dy * dy).sqrt()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SegmentGraph<F> {
    pub nodes: Vec<SegmentNode>,
    pub segments: Vec<VesselSegment<F>>,
    pub source_map: VesselMap,
}

impl<F> SegmentGraph<F> {
    pub fn branch_nodes(&self) -> usize {
        self.nodes.iter().filter(|n| n.kind == NodeKind::Branch).count()
    }
}

/// Splits a skeleton into node-to-node vessel segments.
///
/// Skeleton pixels inside the disc are removed first, then short spurs
/// (no longer than the local half-width plus one) are pruned. Segments with
/// fewer than `min_segment_px` pixels are dropped; their nodes are kept.
pub fn decompose_segments<F: Real>(
    skel: &Skeleton,
    disc: Option<&DiscGeometry<F>>,
    edt: &Grid<F>,
    source_map: VesselMap,
    min_segment_px: usize,
) -> SegmentGraph<F> {
    let mut mask = skel.mask.clone();
    if let Some(d) = disc {
        for (x, y) in skel.mask.foreground() {
            if d.contains(x, y) {
                mask.set(x, y, false);
            }
        }
    }
    let pruned = prune_spurs(&Skeleton { mask }, |x, y| {
        edt.get(x, y).to_f64_lossy().ceil() as usize + 1
    });
    let sk = pruned.mask;
    let (w, h) = sk.dims();

    // node pixels and their cluster ids
    let degree = |x: usize, y: usize| sk.neighbour_count(x, y);
    let branch_px = Grid::from_fn(w, h, |x, y| sk.at(x, y) && degree(x, y) >= 3);
    let clusters = label_components(&branch_px);
    let mut node_of: Grid<Option<usize>> = Grid::filled(w, h, None);
    let mut nodes: Vec<SegmentNode> =
        (0..clusters.count()).map(|_| SegmentNode { kind: NodeKind::Branch, pixels: Vec::new() }).collect();
    for (x, y) in branch_px.foreground() {
        let id = *clusters.labels.get(x, y) as usize - 1;
        nodes[id].pixels.push((x, y));
        node_of.set(x, y, Some(id));
    }
    for (x, y) in sk.foreground() {
        if degree(x, y) <= 1 {
            node_of.set(x, y, Some(nodes.len()));
            nodes.push(SegmentNode { kind: NodeKind::End, pixels: vec![(x, y)] });
        }
    }

    let sk = &sk;
    let neighbours = |x: usize, y: usize| {
        NEIGHBOURS_8.iter().filter_map(move |(dx, dy)| {
            let (nx, ny) = (x as isize + dx, y as isize + dy);
            matches!(sk.get_signed(nx, ny), Some(true)).then_some((nx as usize, ny as usize))
        })
    };

    let mut visited = BinaryMask::new(w, h);
    let mut segments = Vec::new();
    let mut keep = |path: Vec<(usize, usize)>, ends: Option<(usize, usize)>| {
        if path.len() >= min_segment_px.max(2) {
            segments.push(VesselSegment::new(path, edt, ends));
        }
    };

    let node_pixels: Vec<(usize, usize)> =
        nodes.iter().flat_map(|n| n.pixels.iter().copied()).collect();
    for start in node_pixels {
        let start_node = node_of.at(start.0, start.1).expect("node pixel");
        let firsts: Vec<(usize, usize)> = neighbours(start.0, start.1).collect();
        for first in firsts {
            if let Some(other) = node_of.at(first.0, first.1) {
                // direct node-to-node contact only forms a segment between distinct nodes
                if other != start_node && start < first {
                    keep(vec![start, first], Some((start_node, other)));
                }
                continue;
            }
            if visited.at(first.0, first.1) {
                continue;
            }
            let mut path = vec![start, first];
            visited.set(first.0, first.1, true);
            let (mut prev, mut cur) = (start, first);
            let end = loop {
                let next: Vec<(usize, usize)> = neighbours(cur.0, cur.1).filter(|&p| p != prev).collect();
                if let Some(&n) = next.iter().find(|&&p| node_of.at(p.0, p.1).is_some()) {
                    path.push(n);
                    break node_of.at(n.0, n.1);
                }
                match next.iter().find(|&&p| !visited.at(p.0, p.1)) {
                    Some(&n) => {
                        visited.set(n.0, n.1, true);
                        path.push(n);
                        prev = cur;
                        cur = n;
                    }
                    None => break None,
                }
            };
            let ends = end.map(|e| (start_node, e));
            keep(path, ends);
        }
    }

    // closed loops without any node
    for (x, y) in sk.foreground() {
        if visited.at(x, y) || node_of.at(x, y).is_some() {
            continue;
        }
        let mut path = vec![(x, y)];
        visited.set(x, y, true);
        let mut cur = (x, y);
        while let Some(n) = neighbours(cur.0, cur.1).find(|&p| !visited.at(p.0, p.1)) {
            visited.set(n.0, n.1, true);
            path.push(n);
            cur = n;
        }
        path.push((x, y));
        keep(path, None);
    }

    SegmentGraph { nodes, segments, source_map }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::raster::{distance_transform, skeletonize};

    fn graph(m: &BinaryMask, min_len: usize) -> SegmentGraph<f64> {
        let edt = distance_transform(m);
        decompose_segments(&skeletonize(m), None, &edt, VesselMap::AllVessel, min_len)
    }

    #[test]
    fn plus_sign() {
        let m = Grid::from_fn(101, 101, |x, y| (x == 50 && (10..91).contains(&y)) || (y == 50 && (10..91).contains(&x)));
        let g = graph(&m, 10);
        assert_eq!(g.segments.len(), 4);
        assert_eq!(g.branch_nodes(), 1);
        let hub = g.nodes.iter().position(|n| n.kind == NodeKind::Branch).unwrap();
        for s in &g.segments {
            let (a, b) = s.end_nodes.unwrap();
            assert!(a == hub || b == hub);
        }
    }

    #[test]
    fn open_curve() {
        let m = Grid::from_fn(200, 100, |x, y| {
            let yc = 50.0 + 20.0 * (x as f64 / 25.0).sin();
            (10..190).contains(&x) && (y as f64 - yc).abs() < 2.5
        });
        let g = graph(&m, 10);
        assert_eq!(g.segments.len(), 1);
        assert_eq!(g.nodes.iter().filter(|n| n.kind == NodeKind::End).count(), 2);
        let s = &g.segments[0];
        assert!(s.arc_length >= s.chord_length);
        assert_eq!(s.calibre_samples.len(), s.path.len());
    }

    #[test]
    fn y_bifurcation() {
        // trunk up the middle, two arms leaving at 45 degrees
        let m = Grid::from_fn(120, 120, |x, y| {
            let (xi, yi) = (x as i64, y as i64);
            (xi == 60 && (60..110).contains(&yi))
                || ((10..=60).contains(&yi) && (xi - 60 == yi - 60 || 60 - xi == yi - 60))
        });
        let g = graph(&m, 10);
        // oracle: pixels with 3+ skeleton neighbours form one cluster
        let sk = skeletonize(&m).mask;
        let branch = Grid::from_fn(120, 120, |x, y| sk.at(x, y) && sk.neighbour_count(x, y) >= 3);
        assert_eq!(label_components(&branch).count(), 1);
        assert_eq!(g.branch_nodes(), 1);
        assert_eq!(g.segments.len(), 3);
    }

    #[test]
    fn short_segments_dropped_and_disc_removed() {
        let m = Grid::from_fn(100, 40, |x, y| y == 20 && (10..90).contains(&x));
        assert_eq!(graph(&m, 100).segments.len(), 0);
        let edt = distance_transform(&m);
        let disc = DiscGeometry::from_ellipse(crate::geometry::Ellipse {
            centre_x: 50.0,
            centre_y: 20.0,
            major_axis: 20.0,
            minor_axis: 20.0,
            angle: 0.0,
        });
        let g = decompose_segments(&skeletonize(&m), Some(&disc), &edt, VesselMap::Vein, 10);
        assert_eq!(g.segments.len(), 2);
        for s in &g.segments {
            assert!(s.path.iter().all(|&(x, y)| !disc.contains(x, y)));
        }
    }

    #[test]
    fn closed_loop() {
        let m = Grid::from_fn(80, 80, |x, y| {
            let r = ((x as f64 - 40.0).powi(2) + (y as f64 - 40.0).powi(2)).sqrt();
            (r - 25.0).abs() < 1.5
        });
        let g = graph(&m, 10);
        assert_eq!(g.segments.len(), 1);
        assert!(g.segments[0].end_nodes.is_none());
    }
}

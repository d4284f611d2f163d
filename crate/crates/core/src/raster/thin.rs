//! Two-subiteration parallel thinning with topology-checked deletion and a
//! final staircase-removal pass.

use crate::grid::{BinaryMask, NEIGHBOURS_8};

/// One-pixel-wide, 8-connected centreline of a mask.
#[derive(Debug, Clone, PartialEq)]
pub struct Skeleton {
    pub mask: BinaryMask,
}

impl Skeleton {
    pub fn len(&self) -> usize {
        self.mask.count()
    }

    pub fn is_empty(&self) -> bool {
        !self.mask.any()
    }
}

/// Neighbourhood bits `p2..p9` (N, NE, E, SE, S, SW, W, NW), out of bounds as 0.
#[inline]
fn ring(m: &BinaryMask, x: usize, y: usize) -> [bool; 8] {
    let mut r = [false; 8];
    for (k, (dx, dy)) in NEIGHBOURS_8.iter().enumerate() {
        r[k] = matches!(m.get_signed(x as isize + dx, y as isize + dy), Some(true));
    }
    r
}

/// 0 -> 1 transitions around the closed ring.
#[inline]
fn transitions(r: &[bool; 8]) -> usize {
    (0..8).filter(|&k| !r[k] && r[(k + 1) % 8]).count()
}

/// Yokoi 8-connectivity number equals 1: removing the pixel leaves the
/// 8-connected foreground topology unchanged.
#[inline]
fn is_simple(r: &[bool; 8]) -> bool {
    // N8 = sum over 4-neighbours k of (c_k - c_k c_{k+1} c_{k+2})
    let c = |k: usize| !r[k % 8] as i32;
    let n8: i32 = [0usize, 2, 4, 6].iter().map(|&k| c(k) - c(k) * c(k + 1) * c(k + 2)).sum();
    n8 == 1
}

/// Thins a mask to a one-pixel-wide skeleton.
///
/// Candidates are selected per subiteration with the classical parallel rules
/// on a frozen copy of the mask; each candidate is then re-checked against the
/// current mask and deleted only while it is still a simple, non-end pixel.
/// The re-check keeps every 8-connected component intact (a 2x2 block, for
/// example, would otherwise vanish).
pub fn skeletonize(m: &BinaryMask) -> Skeleton {
    let mut img = m.clone();
    let (w, h) = img.dims();
    let mut candidates = Vec::new();
    loop {
        let mut changed = false;
        for pass in 0..2 {
            candidates.clear();
            for y in 0..h {
                for x in 0..w {
                    if !img.at(x, y) {
                        continue;
                    }
                    let r = ring(&img, x, y);
                    let b = r.iter().filter(|&&v| v).count();
                    if !(2..=6).contains(&b) || transitions(&r) != 1 {
                        continue;
                    }
                    let (n, e, s, wv) = (r[0], r[2], r[4], r[6]);
                    let ok = if pass == 0 {
                        !(n && e && s) && !(e && s && wv)
                    } else {
                        !(n && e && wv) && !(n && s && wv)
                    };
                    if ok {
                        candidates.push((x, y));
                    }
                }
            }
            for &(x, y) in &candidates {
                let r = ring(&img, x, y);
                let b = r.iter().filter(|&&v| v).count();
                if b >= 2 && is_simple(&r) {
                    img.set(x, y, false);
                    changed = true;
                }
            }
        }
        if !changed && !remove_staircases(&mut img) {
            break;
        }
    }
    Skeleton { mask: img }
}

/// Deletes corner pixels of diagonal staircases: a pixel with two orthogonal
/// 4-neighbours set whose removal keeps them 8-connected. Returns whether
/// anything was deleted.
fn remove_staircases(img: &mut BinaryMask) -> bool {
    let (w, h) = img.dims();
    let mut removed = false;
    for y in 0..h {
        for x in 0..w {
            if !img.at(x, y) {
                continue;
            }
            let r = ring(img, x, y);
            let b = r.iter().filter(|&&v| v).count();
            let (n, e, s, wv) = (r[0], r[2], r[4], r[6]);
            let corner = (n && e && !s && !wv) || (e && s && !n && !wv) || (s && wv && !n && !e)
                || (wv && n && !e && !s);
            if corner && b >= 2 && is_simple(&r) {
                img.set(x, y, false);
                removed = true;
            }
        }
    }
    removed
}

/// Removes short terminal branches ("spurs") left at convex corners.
///
/// A branch is walked from each end point to the first junction pixel (three
/// or more neighbours). It is deleted when its pixel count is at most
/// `max_len(junction)`, where the caller typically supplies the local
/// half-width plus one. Branches that never reach a junction are kept. The
/// result is thinned again so no stub is left where a spur met its trunk.
pub fn prune_spurs(skel: &Skeleton, max_len: impl Fn(usize, usize) -> usize) -> Skeleton {
    let mut img = skel.mask.clone();
    let ends: Vec<(usize, usize)> =
        skel.mask.foreground().filter(|&(x, y)| skel.mask.neighbour_count(x, y) == 1).collect();
    for start in ends {
        let mut branch = vec![start];
        let mut prev = start;
        let mut cur = start;
        let junction = loop {
            let next: Vec<(usize, usize)> = NEIGHBOURS_8
                .iter()
                .filter_map(|(dx, dy)| {
                    let (nx, ny) = (cur.0 as isize + dx, cur.1 as isize + dy);
                    (matches!(skel.mask.get_signed(nx, ny), Some(true))
                        && (nx as usize, ny as usize) != prev)
                        .then_some((nx as usize, ny as usize))
                })
                .collect();
            if next.is_empty() {
                break None;
            }
            // a junction may be reached through any of several adjacent pixels
            if let Some(&j) = next.iter().find(|&&(x, y)| skel.mask.neighbour_count(x, y) >= 3) {
                break Some(j);
            }
            if next.len() > 1 || branch.len() > skel.mask.len() {
                break None;
            }
            prev = cur;
            cur = next[0];
            branch.push(cur);
        };
        if let Some((jx, jy)) = junction {
            if branch.len() <= max_len(jx, jy) {
                for (x, y) in branch {
                    img.set(x, y, false);
                }
            }
        }
    }
    // re-thin so stubs left at the junctions collapse onto the trunk
    skeletonize(&img)
}

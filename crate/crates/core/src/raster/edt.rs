//! Exact Euclidean distance transform (separable lower-envelope method of
//! Felzenszwalb and Huttenlocher).

use rayon::prelude::*;

use crate::grid::{BinaryMask, Grid};
use crate::num::Real;

/// Squared distance from every foreground pixel centre to the nearest
/// background pixel centre; background pixels are 0. Pixels outside the
/// raster are not background, so a mask without any background yields
/// `f64::INFINITY` everywhere.
pub fn squared_distance_transform(m: &BinaryMask) -> Grid<f64> {
    let (w, h) = m.dims();
    let mut out = m.map(|&fg| if fg { f64::INFINITY } else { 0.0 });
    if w == 0 || h == 0 {
        return out;
    }

    // columns
    let mut cols: Vec<Vec<f64>> = (0..w)
        .into_par_iter()
        .map(|x| {
            let f: Vec<f64> = (0..h).map(|y| out.at(x, y)).collect();
            lower_envelope(&f)
        })
        .collect();
    for (x, col) in cols.iter_mut().enumerate() {
        for (y, v) in col.iter().enumerate() {
            out.set(x, y, *v);
        }
    }

    // rows
    out.as_mut_slice().par_chunks_mut(w).for_each(|row| {
        let d = lower_envelope(row);
        row.copy_from_slice(&d);
    });
    out
}

/// Euclidean distance to the nearest background pixel, in pixels.
pub fn distance_transform<F: Real>(m: &BinaryMask) -> Grid<F> {
    squared_distance_transform(m).map(|&d2| {
        if d2.is_infinite() {
            F::infinity()
        } else {
            F::lit(d2.sqrt())
        }
    })
}

/// 1-D squared distance transform of a sampled function `f`.
fn lower_envelope(f: &[f64]) -> Vec<f64> {
    let n = f.len();
    let mut d = vec![f64::INFINITY; n];
    // parabola vertices and the boundaries between them
    let mut v = vec![0usize; n];
    let mut z = vec![0f64; n + 1];
    let mut k: usize = 0;
    let mut started = false;

    for q in 0..n {
        if f[q].is_infinite() {
            continue;
        }
        if !started {
            v[0] = q;
            z[0] = f64::NEG_INFINITY;
            z[1] = f64::INFINITY;
            k = 0;
            started = true;
            continue;
        }
        let qf = q as f64;
        loop {
            let p = v[k];
            let pf = p as f64;
            let s = ((f[q] + qf * qf) - (f[p] + pf * pf)) / (2.0 * qf - 2.0 * pf);
            if s <= z[k] && k > 0 {
                k -= 1;
                continue;
            }
            if s <= z[k] {
                // k == 0 and the new parabola dominates everywhere
                v[0] = q;
                z[0] = f64::NEG_INFINITY;
                z[1] = f64::INFINITY;
            } else {
                k += 1;
                v[k] = q;
                z[k] = s;
                z[k + 1] = f64::INFINITY;
            }
            break;
        }
    }
    if !started {
        return d;
    }

    let mut k = 0;
    for (q, out) in d.iter_mut().enumerate() {
        let qf = q as f64;
        while z[k + 1] < qf {
            k += 1;
        }
        let p = v[k] as f64;
        *out = (qf - p) * (qf - p) + f[v[k]];
    }
    d
}

#[cfg(test)]
mod tests {
    use super::*;

    /// O(n^2) reference: nearest background pixel by exhaustive search.
    fn brute_force(m: &BinaryMask) -> Grid<f64> {
        let bg: Vec<(usize, usize)> = m.foreground_complement();
        Grid::from_fn(m.width(), m.height(), |x, y| {
            if !m.at(x, y) {
                return 0.0;
            }
            bg.iter()
                .map(|&(bx, by)| {
                    let dx = bx as f64 - x as f64;
                    let dy = by as f64 - y as f64;
                    dx * dx + dy * dy
                })
                .fold(f64::INFINITY, f64::min)
        })
    }

    trait Complement {
        fn foreground_complement(&self) -> Vec<(usize, usize)>;
    }
    impl Complement for BinaryMask {
        fn foreground_complement(&self) -> Vec<(usize, usize)> {
            let mut v = Vec::new();
            for y in 0..self.height() {
                for x in 0..self.width() {
                    if !self.at(x, y) {
                        v.push((x, y));
                    }
                }
            }
            v
        }
    }

    #[test]
    fn bar_midline() {
        let m = Grid::from_fn(40, 15, |x, y| (5..35).contains(&x) && (5..10).contains(&y));
        let d = distance_transform::<f64>(&m);
        assert!((d.at(20, 7) - 2.5).abs() <= 0.5);
        assert_eq!(d.at(0, 0), 0.0);
    }

    #[test]
    fn disc_centre() {
        let r = 12.0;
        let m = Grid::from_fn(40, 40, |x, y| {
            let (dx, dy) = (x as f64 - 20.0, y as f64 - 20.0);
            dx * dx + dy * dy <= r * r
        });
        let d = distance_transform::<f32>(&m);
        assert!((d.at(20, 20) as f64 - r).abs() <= 1.0);
    }

    #[test]
    fn empty_and_full() {
        let empty = BinaryMask::new(9, 7);
        assert!(distance_transform::<f64>(&empty).as_slice().iter().all(|&v| v == 0.0));
        let full = Grid::filled(5, 5, true);
        assert!(distance_transform::<f64>(&full).as_slice().iter().all(|v| v.is_infinite()));
    }

    #[test]
    fn matches_brute_force_on_random_masks() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for trial in 0..40 {
            let w = rng.gen_range(1..=64);
            let h = rng.gen_range(1..=64);
            let density = [0.3, 0.7, 0.95, 0.995][trial % 4];
            let m = Grid::from_fn(w, h, |_, _| rng.gen_bool(density));
            assert_eq!(squared_distance_transform(&m), brute_force(&m), "trial {trial}");
        }
    }
}

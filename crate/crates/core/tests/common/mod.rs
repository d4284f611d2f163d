//! Fixtures and independent oracles shared by the integration tests.
#![allow(dead_code)]

use std::collections::VecDeque;
use std::path::{Path, PathBuf};

use slomorph::geometry::{Roi, RoiMask};
use slomorph::grid::{BinaryMask, Grid};
use slomorph::meta::Location;
use slomorph::phantom::{generate, PhantomParams};

pub fn whole(w: usize, h: usize) -> RoiMask {
    RoiMask { roi: Roi::WholeImage, mask: Grid::filled(w, h, true) }
}

/// Horizontal bar `width` px thick and `len` px long in a padded canvas.
pub fn bar(width: usize, len: usize) -> BinaryMask {
    Grid::from_fn(len + 40, width + 40, |x, y| (20..20 + len).contains(&x) && (20..20 + width).contains(&y))
}

/// `y = A sin(2π·periods·x / L)` on `[0, L]`, sampled every 0.05 px in x.
pub fn sine_curve(amplitude: f64, length: f64, periods: f64) -> Vec<(f64, f64)> {
    let n = (length / 0.05).round() as usize;
    (0..=n)
        .map(|i| {
            let x = length * i as f64 / n as f64;
            (x, amplitude * (std::f64::consts::TAU * periods * x / length).sin())
        })
        .collect()
}

/// τ of the sine above (L = 400, two periods) from `tests/oracles/tortuosity_sine.py`.
pub const SINE_ORACLE: [(f64, f64); 4] = [
    (5.0, 4.577086344317e-05),
    (10.0, 1.774633493970e-04),
    (20.0, 6.342796050678e-04),
    (40.0, 1.821013682109e-03),
];

/// Knudtson pairing written independently of the library: keep the six
/// largest (or the largest even count), then repeatedly pop the smallest and
/// largest from an ascending deque, carrying the middle element.
pub fn knudtson_oracle(widths: &[f64], c: f64) -> f64 {
    let mut v = widths.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let keep = if v.len() >= 6 { 6 } else { v.len() - v.len() % 2 };
    let mut round: Vec<f64> = v[v.len() - keep..].to_vec();
    while round.len() > 1 {
        let mut dq: VecDeque<f64> = round.iter().copied().collect();
        let mut next = Vec::new();
        while dq.len() >= 2 {
            let small = dq.pop_front().unwrap();
            let large = dq.pop_back().unwrap();
            next.push(c * (large * large + small * small).sqrt());
        }
        next.extend(dq);
        next.sort_by(|a, b| a.partial_cmp(b).unwrap());
        round = next;
    }
    round[0]
}

/// Seeded 20-pair fixture of `tests/oracles/agreement_fixture.py`; pairs
/// `2i` and `2i + 1` belong to eye `i`.
pub const FIXTURE_A: [f64; 20] = [
    97.0, 88.8, 103.0, 69.9, 105.2, 94.4, 92.5, 102.3, 76.2, 96.0, 92.1, 107.0, 113.4, 78.2, 89.5, 73.9, 84.7, 104.7,
    106.8, 98.7,
];
pub const FIXTURE_B: [f64; 20] = [
    96.3, 92.4, 96.1, 71.2, 105.2, 96.1, 88.0, 103.0, 70.2, 103.8, 87.3, 107.9, 106.2, 91.0, 83.6, 83.0, 84.9, 100.8,
    112.2, 105.3,
];

pub struct FixtureExpected {
    pub mae: f64,
    pub pearson: f64,
    pub spearman: f64,
    pub icc: f64,
    pub mean_diff: f64,
    pub loa_low: f64,
    pub loa_high: f64,
    pub lambda: [f64; 10],
}

pub const FIXTURE_EXPECTED: FixtureExpected = FixtureExpected {
    mae: 4.500000000000001e+00,
    pearson: 8.866557656174597e-01,
    spearman: 9.108688120648135e-01,
    icc: 8.862281254456069e-01,
    mean_diff: -5.099999999999987e-01,
    loa_low: -1.173461332307851e+01,
    loa_high: 1.071461332307851e+01,
    lambda: [
        5.192880599306353e+01,
        2.321120504643409e+02,
        7.906715050205730e+01,
        1.010695905241218e+02,
        2.176743662203789e+02,
        1.426566748312088e+02,
        2.150234642960729e+02,
        8.799776054843635e+01,
        1.432748468561660e+02,
        7.591987136028536e+01,
    ],
};

pub fn fixture_eye_ids() -> Vec<String> {
    (0..20).map(|i| format!("eye{:02}", i / 2)).collect()
}

/// Phantom corpus used by the pipeline checks: two disc-centred eyes and
/// one macula-centred eye, written as images plus ground-truth masks.
pub fn write_corpus(dir: &Path) -> Vec<PathBuf> {
    std::fs::create_dir_all(dir).unwrap();
    [(1, Location::DiscCentred), (2, Location::DiscCentred), (3, Location::MaculaCentred)]
        .into_iter()
        .map(|(seed, location)| {
            generate(&PhantomParams { seed, location, ..Default::default() })
                .write_to(dir, &format!("eye{seed}"))
                .unwrap()
        })
        .collect()
}

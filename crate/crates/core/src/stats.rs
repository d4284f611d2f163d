//! Agreement and reproducibility statistics: MAE, Pearson, Spearman,
//! ICC(3,1), Bland–Altman limits, per-eye noise λ, Dice and AUC.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::grid::{BinaryMask, Grid};
use crate::num::{mean, sample_sd, Real};

/// Limits-of-agreement multiplier.
pub const LOA_Z: f64 = 1.96;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StatsError {
    #[error("series lengths differ: {a} vs {b}")]
    LengthMismatch { a: usize, b: usize },
    #[error("{n} pair(s), at least 2 needed")]
    TooFewPairs { n: usize },
    #[error("non-finite value at index {0}")]
    NonFinite(usize),
    #[error("between-eye standard deviation is zero or undefined")]
    DegeneratePopulation,
    #[error("every eye needs at least two measurements")]
    TooFewRepeats,
    #[error("grid dimensions differ: {a:?} vs {b:?}")]
    DimMismatch { a: (usize, usize), b: (usize, usize) },
    #[error("truth mask has a single class")]
    SingleClass,
}

/// Two measurements of the same quantities, paired by index.
#[derive(Debug, Clone, PartialEq)]
pub struct PairedSeries<F> {
    pub a: Vec<F>,
    pub b: Vec<F>,
    /// Eye of each pair; pairs sharing an id are repeats of one eye. When
    /// absent, every pair is its own eye.
    pub eye_ids: Option<Vec<String>>,
}

impl<F: Real> PairedSeries<F> {
    pub fn new(a: Vec<F>, b: Vec<F>) -> Result<Self, StatsError> {
        let p = PairedSeries { a, b, eye_ids: None };
        p.validate()?;
        Ok(p)
    }

    pub fn with_eye_ids(mut self, ids: Vec<String>) -> Result<Self, StatsError> {
        if ids.len() != self.a.len() {
            return Err(StatsError::LengthMismatch { a: self.a.len(), b: ids.len() });
        }
        self.eye_ids = Some(ids);
        Ok(self)
    }

    fn validate(&self) -> Result<(), StatsError> {
        let (na, nb) = (self.a.len(), self.b.len());
        if na != nb {
            return Err(StatsError::LengthMismatch { a: na, b: nb });
        }
        if na < 2 {
            return Err(StatsError::TooFewPairs { n: na });
        }
        if let Some(i) = (0..na).find(|&i| !self.a[i].is_finite() || !self.b[i].is_finite()) {
            return Err(StatsError::NonFinite(i));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.a.len()
    }

    pub fn is_empty(&self) -> bool {
        self.a.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlandAltman<F> {
    /// Mean of `a - b`.
    pub mean_diff: F,
    pub loa_low: F,
    pub loa_high: F,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AgreementReport<F> {
    pub n: usize,
    pub mae: F,
    /// Correlations are `None` when either series has zero variance.
    pub pearson: Option<F>,
    pub spearman: Option<F>,
    pub icc_3_1: Option<F>,
    pub bland_altman: BlandAltman<F>,
    /// λ per eye in percent, in eye-id order; empty when the population is
    /// degenerate.
    pub lambda_per_eye: Vec<F>,
}

/// Agreement between the two series of `p`.
///
/// ICC(3,1) is the two-way mixed, consistency, single-measurement form
/// `(MS_R - MS_E) / (MS_R + (k - 1) MS_E)` with `k = 2` raters, where
/// `MS_R` is the between-subject and `MS_E` the residual mean square.
pub fn agreement<F: Real>(p: &PairedSeries<F>) -> Result<AgreementReport<F>, StatsError> {
    p.validate()?;
    let n = p.len();
    let nf = F::from_usize_lossy(n);
    let diffs: Vec<F> = p.a.iter().zip(&p.b).map(|(&a, &b)| a - b).collect();
    let mae = diffs.iter().map(|d| d.abs()).sum::<F>() / nf;
    let mean_diff = mean(&diffs).expect("n >= 2");
    let sd_diff = sample_sd(&diffs).expect("n >= 2");
    let z = F::lit(LOA_Z);
    let bland_altman = BlandAltman { mean_diff, loa_low: mean_diff - z * sd_diff, loa_high: mean_diff + z * sd_diff };

    let mut groups: BTreeMap<String, Vec<F>> = BTreeMap::new();
    for i in 0..n {
        let key = match &p.eye_ids {
            Some(ids) => ids[i].clone(),
            None => format!("{i:08}"),
        };
        groups.entry(key).or_default().extend([p.a[i], p.b[i]]);
    }
    let groups: Vec<Vec<F>> = groups.into_values().collect();
    let lambda_per_eye = lambda_noise(&groups).unwrap_or_default();

    Ok(AgreementReport {
        n,
        mae,
        pearson: pearson(&p.a, &p.b),
        spearman: spearman(&p.a, &p.b),
        icc_3_1: icc_3_1(&p.a, &p.b),
        bland_altman,
        lambda_per_eye,
    })
}

/// Pearson correlation; `None` for fewer than two values or zero variance.
pub fn pearson<F: Real>(a: &[F], b: &[F]) -> Option<F> {
    if a.len() != b.len() || a.len() < 2 {
        return None;
    }
    let (ma, mb) = (mean(a)?, mean(b)?);
    let (mut sab, mut saa, mut sbb) = (F::zero(), F::zero(), F::zero());
    for (&x, &y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab = sab + dx * dy;
        saa = saa + dx * dx;
        sbb = sbb + dy * dy;
    }
    if saa <= F::zero() || sbb <= F::zero() {
        return None;
    }
    Some((sab / (saa * sbb).sqrt()).max(-F::one()).min(F::one()))
}

/// 1-based ranks with ties given their average rank.
pub fn average_ranks<F: Real>(v: &[F]) -> Vec<F> {
    let mut order: Vec<usize> = (0..v.len()).collect();
    order.sort_by(|&i, &j| v[i].partial_cmp(&v[j]).expect("finite values"));
    let mut ranks = vec![F::zero(); v.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && v[order[j + 1]] == v[order[i]] {
            j += 1;
        }
        // positions i..=j share rank (i + j) / 2 + 1
        let r = F::lit((i + j) as f64 / 2.0 + 1.0);
        for &k in &order[i..=j] {
            ranks[k] = r;
        }
        i = j + 1;
    }
    ranks
}

/// Spearman correlation: Pearson on average ranks.
pub fn spearman<F: Real>(a: &[F], b: &[F]) -> Option<F> {
    pearson(&average_ranks(a), &average_ranks(b))
}

/// ICC(3,1) for two raters; `None` when the denominator vanishes.
pub fn icc_3_1<F: Real>(a: &[F], b: &[F]) -> Option<F> {
    let n = a.len();
    if n != b.len() || n < 2 {
        return None;
    }
    let k = F::lit(2.0);
    let nf = F::from_usize_lossy(n);
    let grand = (a.iter().copied().sum::<F>() + b.iter().copied().sum::<F>()) / (k * nf);
    let (ma, mb) = (mean(a)?, mean(b)?);
    let mut ss_rows = F::zero();
    let mut ss_err = F::zero();
    for (&x, &y) in a.iter().zip(b) {
        let row = (x + y) / k;
        ss_rows = ss_rows + k * (row - grand) * (row - grand);
        let (ex, ey) = (x - row - ma + grand, y - row - mb + grand);
        ss_err = ss_err + ex * ex + ey * ey;
    }
    let ms_rows = ss_rows / (nf - F::one());
    let ms_err = ss_err / ((nf - F::one()) * (k - F::one()));
    let den = ms_rows + (k - F::one()) * ms_err;
    if den <= F::zero() {
        return None;
    }
    Some((ms_rows - ms_err) / den)
}

/// λ per eye, in percent: the sample sd of that eye's repeats over the
/// sample sd of the per-eye means.
pub fn lambda_noise<F: Real>(eyes: &[Vec<F>]) -> Result<Vec<F>, StatsError> {
    if eyes.iter().any(|e| e.len() < 2) {
        return Err(StatsError::TooFewRepeats);
    }
    let means: Vec<F> = eyes.iter().filter_map(|e| mean(e)).collect();
    let between = sample_sd(&means).ok_or(StatsError::DegeneratePopulation)?;
    if !(between > F::zero()) {
        return Err(StatsError::DegeneratePopulation);
    }
    Ok(eyes.iter().map(|e| F::lit(100.0) * sample_sd(e).expect("two repeats") / between).collect())
}

/// Dice similarity `2|a∩b| / (|a| + |b|)`; 1 when both masks are empty.
pub fn dice(a: &BinaryMask, b: &BinaryMask) -> Result<f64, StatsError> {
    if !a.same_dims(b) {
        return Err(StatsError::DimMismatch { a: a.dims(), b: b.dims() });
    }
    let total = a.count() + b.count();
    if total == 0 {
        return Ok(1.0);
    }
    Ok(2.0 * a.count_and(b) as f64 / total as f64)
}

/// ROC AUC over pixels as the Mann–Whitney statistic with midranks.
pub fn auc<F: Real>(prob: &Grid<F>, truth: &BinaryMask) -> Result<F, StatsError> {
    if !prob.same_dims(truth) {
        return Err(StatsError::DimMismatch { a: prob.dims(), b: truth.dims() });
    }
    let n_pos = truth.count();
    let n_neg = truth.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(StatsError::SingleClass);
    }
    if let Some(i) = prob.as_slice().iter().position(|v| !v.is_finite()) {
        return Err(StatsError::NonFinite(i));
    }
    let ranks: Vec<F> = average_ranks(prob.as_slice());
    // accumulate in f64 so f32 grids keep precision
    let rank_sum: f64 = ranks.iter().zip(truth.as_slice()).filter(|(_, &t)| t).map(|(r, _)| r.to_f64_lossy()).sum();
    let (p, q) = (n_pos as f64, n_neg as f64);
    Ok(F::lit((rank_sum - p * (p + 1.0) / 2.0) / (p * q)))
}

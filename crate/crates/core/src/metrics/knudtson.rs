use super::MetricError;
use crate::num::Real;

pub const ARTERY_CONSTANT: f64 = 0.88;
pub const VEIN_CONSTANT: f64 = 0.95;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VesselKind {
    Artery,
    Vein,
}

impl VesselKind {
    pub fn constant(self) -> f64 {
        match self {
            VesselKind::Artery => ARTERY_CONSTANT,
            VesselKind::Vein => VEIN_CONSTANT,
        }
    }
}

/// Revised Knudtson central vessel equivalent.
///
/// Uses the six largest widths, or the largest even number of them when
/// fewer than six are given. Each round sorts descending and combines the
/// largest with the smallest, next largest with next smallest, and so on, as
/// `c·√(a² + b²)`; with an odd count the median is carried to the next round.
pub fn knudtson_equivalent<F: Real>(widths: &[F], kind: VesselKind) -> Result<F, MetricError> {
    if widths.len() < 2 {
        return Err(MetricError::TooFewVessels { found: widths.len() });
    }
    let mut w = widths.to_vec();
    sort_desc(&mut w);
    let take = if w.len() >= 6 { 6 } else { w.len() & !1 };
    w.truncate(take);
    let c = F::lit(kind.constant());
    while w.len() > 1 {
        let n = w.len();
        let mut next = Vec::with_capacity(n.div_ceil(2));
        for i in 0..n / 2 {
            let (a, b) = (w[i], w[n - 1 - i]);
            next.push(c * (a * a + b * b).sqrt());
        }
        if n % 2 == 1 {
            next.push(w[n / 2]);
        }
        sort_desc(&mut next);
        w = next;
    }
    Ok(w[0])
}

fn sort_desc<F: Real>(v: &mut [F]) {
    v.sort_by(|a, b| b.partial_cmp(a).unwrap_or(std::cmp::Ordering::Equal));
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn six_equal_arteries() {
        // 0.88√2 per round, then 0.88·√(a² + b²) with the carried value
        let r1 = 0.88 * 2f64.sqrt();
        let r2 = 0.88 * (2.0 * r1 * r1).sqrt();
        let expected = 0.88 * (r2 * r2 + r1 * r1).sqrt();
        let got = knudtson_equivalent(&[3.0; 6], VesselKind::Artery).unwrap();
        assert!((got - 3.0 * expected).abs() < 1e-12);
        assert!((expected - 1.7484).abs() < 1e-4);
    }

    #[test]
    fn two_veins() {
        let got = knudtson_equivalent(&[10.0, 10.0], VesselKind::Vein).unwrap();
        assert!((got - 0.95 * 200f64.sqrt()).abs() < 1e-12);
        assert!((got - 13.435).abs() < 1e-3);
    }

    #[test]
    fn too_few() {
        assert_eq!(
            knudtson_equivalent(&[4.0f64], VesselKind::Artery),
            Err(MetricError::TooFewVessels { found: 1 })
        );
    }

    #[test]
    fn odd_count_drops_smallest() {
        let a = knudtson_equivalent(&[9.0, 8.0, 7.0, 1.0, 2.0], VesselKind::Vein).unwrap();
        let b = knudtson_equivalent(&[9.0, 8.0, 7.0, 2.0], VesselKind::Vein).unwrap();
        assert_eq!(a, b);
    }
}

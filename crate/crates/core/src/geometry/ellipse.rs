//! Direct least-squares ellipse fitting (Fitzgibbon, Pilu and Fisher, in the
//! numerically stable partitioned form of Halir and Flusser).

use crate::num::Real;

type Mat3<F> = [[F; 3]; 3];
type Vec3<F> = [F; 3];

/// Geometric ellipse. Axes are full lengths; `angle` is the direction of the
/// major axis in radians, measured from +x towards +y (image rows grow down).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ellipse<F> {
    pub centre_x: F,
    pub centre_y: F,
    pub major_axis: F,
    pub minor_axis: F,
    pub angle: F,
}

impl<F: Real> Ellipse<F> {
    /// `< 1` inside, `1` on the boundary, `> 1` outside.
    pub fn normalized_radius_sq(&self, x: F, y: F) -> F {
        let (dx, dy) = (x - self.centre_x, y - self.centre_y);
        let (s, c) = self.angle.sin_cos();
        let u = dx * c + dy * s;
        let v = -dx * s + dy * c;
        let two = F::lit(2.0);
        let a = self.major_axis / two;
        let b = self.minor_axis / two;
        (u * u) / (a * a) + (v * v) / (b * b)
    }

    pub fn contains(&self, x: F, y: F) -> bool {
        self.normalized_radius_sq(x, y) < F::one()
    }

    /// Point on the boundary at parameter `t` (radians).
    pub fn point_at(&self, t: F) -> (F, F) {
        let two = F::lit(2.0);
        let (a, b) = (self.major_axis / two, self.minor_axis / two);
        let (s, c) = self.angle.sin_cos();
        let (u, v) = (a * t.cos(), b * t.sin());
        (self.centre_x + u * c - v * s, self.centre_y + u * s + v * c)
    }
}

/// Fits an ellipse to at least six points. Returns `None` when the points are
/// degenerate (collinear, too few) or the best conic is not an ellipse.
pub fn fit_ellipse<F: Real>(points: &[(F, F)]) -> Option<Ellipse<F>> {
    if points.len() < 6 {
        return None;
    }
    let n = F::from_usize_lossy(points.len());
    let mx = points.iter().map(|p| p.0).sum::<F>() / n;
    let my = points.iter().map(|p| p.1).sum::<F>() / n;
    let spread = points
        .iter()
        .map(|p| ((p.0 - mx) * (p.0 - mx) + (p.1 - my) * (p.1 - my)).sqrt())
        .sum::<F>()
        / n;
    if spread <= F::epsilon() {
        return None;
    }
    let s = F::one() / spread;

    // scatter blocks of the design matrix [x², xy, y² | x, y, 1]
    let mut s1 = [[F::zero(); 3]; 3];
    let mut s2 = [[F::zero(); 3]; 3];
    let mut s3 = [[F::zero(); 3]; 3];
    for &(px, py) in points {
        let (x, y) = ((px - mx) * s, (py - my) * s);
        let q = [x * x, x * y, y * y];
        let l = [x, y, F::one()];
        for i in 0..3 {
            for j in 0..3 {
                s1[i][j] = s1[i][j] + q[i] * q[j];
                s2[i][j] = s2[i][j] + q[i] * l[j];
                s3[i][j] = s3[i][j] + l[i] * l[j];
            }
        }
    }

    let s3_inv = invert3(&s3)?;
    // T = -S3⁻¹ S2ᵀ
    let t = scale3(&mul3(&s3_inv, &transpose3(&s2)), -F::one());
    let m = add3(&s1, &mul3(&s2, &t));
    // premultiply by C1⁻¹ where C1 = [[0,0,2],[0,-1,0],[2,0,0]]
    let half = F::lit(0.5);
    let reduced = [
        [m[2][0] * half, m[2][1] * half, m[2][2] * half],
        [-m[1][0], -m[1][1], -m[1][2]],
        [m[0][0] * half, m[0][1] * half, m[0][2] * half],
    ];

    let mut best: Option<(F, Vec3<F>)> = None;
    for lambda in real_eigenvalues(&reduced) {
        let Some(v) = null_vector(&reduced, lambda) else { continue };
        let cond = F::lit(4.0) * v[0] * v[2] - v[1] * v[1];
        if cond > F::zero() && best.is_none_or(|(c, _)| cond > c) {
            best = Some((cond, v));
        }
    }
    let (_, a1) = best?;
    let a2 = mul3v(&t, &a1);
    let conic = denormalize([a1[0], a1[1], a1[2], a2[0], a2[1], a2[2]], mx, my, s);
    conic_to_ellipse(conic)
}

/// Undo `x' = s (x - mx)`, `y' = s (y - my)`.
fn denormalize<F: Real>(c: [F; 6], mx: F, my: F, s: F) -> [F; 6] {
    let [a, b, cc, d, e, f] = c;
    let s2 = s * s;
    let two = F::lit(2.0);
    [
        a * s2,
        b * s2,
        cc * s2,
        -two * a * s2 * mx - b * s2 * my + d * s,
        -b * s2 * mx - two * cc * s2 * my + e * s,
        a * s2 * mx * mx + b * s2 * mx * my + cc * s2 * my * my - d * s * mx - e * s * my + f,
    ]
}

/// `A x² + B xy + C y² + D x + E y + F = 0` to centre, axes and orientation.
pub fn conic_to_ellipse<F: Real>(c: [F; 6]) -> Option<Ellipse<F>> {
    let [a, b, cc, d, e, f] = c;
    let two = F::lit(2.0);
    let four = F::lit(4.0);
    let disc = b * b - four * a * cc;
    if disc >= F::zero() {
        return None;
    }
    let cx = (two * cc * d - b * e) / disc;
    let cy = (two * a * e - b * d) / disc;
    let f0 = f + (d * cx + e * cy) / two;
    // eigen-decomposition of [[a, b/2], [b/2, c]]
    let tr = a + cc;
    let diff = a - cc;
    let root = (diff * diff + b * b).sqrt();
    let mu1 = (tr + root) / two;
    let mu2 = (tr - root) / two;
    let r1 = -f0 / mu1;
    let r2 = -f0 / mu2;
    if !(r1 > F::zero() && r2 > F::zero()) {
        return None;
    }
    let (ax1, ax2) = (r1.sqrt(), r2.sqrt());
    // eigenvector of mu1: angle θ with tan 2θ = b / (a - c)
    let theta1 = F::lit(0.5) * b.atan2(diff);
    let (major, minor, angle) = if ax1 >= ax2 {
        (ax1, ax2, theta1)
    } else {
        (ax2, ax1, theta1 + F::lit(std::f64::consts::FRAC_PI_2))
    };
    let pi = F::lit(std::f64::consts::PI);
    let mut angle = angle % pi;
    if angle < F::zero() {
        angle = angle + pi;
    }
    Some(Ellipse { centre_x: cx, centre_y: cy, major_axis: two * major, minor_axis: two * minor, angle })
}

fn real_eigenvalues<F: Real>(m: &Mat3<F>) -> Vec<F> {
    // λ³ + p λ² + q λ + r = 0
    let tr = m[0][0] + m[1][1] + m[2][2];
    let minors = m[0][0] * m[1][1] - m[0][1] * m[1][0] + m[0][0] * m[2][2] - m[0][2] * m[2][0]
        + m[1][1] * m[2][2]
        - m[1][2] * m[2][1];
    let det = det3(m);
    solve_cubic(-tr, minors, -det)
}

/// Real roots of `x³ + p x² + q x + r`.
fn solve_cubic<F: Real>(p: F, q: F, r: F) -> Vec<F> {
    let three = F::lit(3.0);
    let two = F::lit(2.0);
    let shift = p / three;
    // depressed cubic t³ + a t + b with x = t - p/3
    let a = q - p * p / three;
    let b = two * p * p * p / F::lit(27.0) - p * q / three + r;
    let disc = (b / two) * (b / two) + (a / three) * (a / three) * (a / three);
    let mut roots = Vec::with_capacity(3);
    if disc > F::zero() {
        let sq = disc.sqrt();
        let u = (-b / two + sq).cbrt();
        let v = (-b / two - sq).cbrt();
        roots.push(u + v - shift);
    } else if a == F::zero() {
        roots.push(-shift);
    } else {
        let rho = (-a / three).sqrt();
        let arg = ((-b / two) / (rho * rho * rho)).max(-F::one()).min(F::one());
        let phi = arg.acos() / three;
        let tau = F::lit(2.0 * std::f64::consts::PI / 3.0);
        for k in 0..3 {
            roots.push(two * rho * (phi - tau * F::from_usize_lossy(k)).cos() - shift);
        }
    }
    roots
}

/// A unit vector spanning the null space of `m - λI` (largest row cross product).
fn null_vector<F: Real>(m: &Mat3<F>, lambda: F) -> Option<Vec3<F>> {
    let mut a = *m;
    for (i, row) in a.iter_mut().enumerate() {
        row[i] = row[i] - lambda;
    }
    let pairs = [(0, 1), (0, 2), (1, 2)];
    let mut best: Option<(F, Vec3<F>)> = None;
    for (i, j) in pairs {
        let c = cross(&a[i], &a[j]);
        let n = (c[0] * c[0] + c[1] * c[1] + c[2] * c[2]).sqrt();
        if best.is_none_or(|(bn, _)| n > bn) {
            best = Some((n, c));
        }
    }
    let (n, c) = best?;
    if !(n > F::zero()) || !n.is_finite() {
        return None;
    }
    Some([c[0] / n, c[1] / n, c[2] / n])
}

fn cross<F: Real>(a: &Vec3<F>, b: &Vec3<F>) -> Vec3<F> {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

fn det3<F: Real>(m: &Mat3<F>) -> F {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

fn invert3<F: Real>(m: &Mat3<F>) -> Option<Mat3<F>> {
    let det = det3(m);
    if det.abs() <= F::min_positive_value() || !det.is_finite() {
        return None;
    }
    let mut inv = [[F::zero(); 3]; 3];
    for (i, row) in inv.iter_mut().enumerate() {
        for (j, v) in row.iter_mut().enumerate() {
            // cofactor of m[j][i]
            let (r0, r1) = match j {
                0 => (1, 2),
                1 => (0, 2),
                _ => (0, 1),
            };
            let (c0, c1) = match i {
                0 => (1, 2),
                1 => (0, 2),
                _ => (0, 1),
            };
            let minor = m[r0][c0] * m[r1][c1] - m[r0][c1] * m[r1][c0];
            let sign = if (i + j) % 2 == 0 { F::one() } else { -F::one() };
            *v = sign * minor / det;
        }
    }
    Some(inv)
}

fn mul3<F: Real>(a: &Mat3<F>, b: &Mat3<F>) -> Mat3<F> {
    let mut out = [[F::zero(); 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            out[i][j] = (0..3).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    out
}

fn mul3v<F: Real>(a: &Mat3<F>, v: &Vec3<F>) -> Vec3<F> {
    [0, 1, 2].map(|i| (0..3).map(|k| a[i][k] * v[k]).sum())
}

fn transpose3<F: Real>(a: &Mat3<F>) -> Mat3<F> {
    [0, 1, 2].map(|i| [0, 1, 2].map(|j| a[j][i]))
}

fn add3<F: Real>(a: &Mat3<F>, b: &Mat3<F>) -> Mat3<F> {
    [0, 1, 2].map(|i| [0, 1, 2].map(|j| a[i][j] + b[i][j]))
}

fn scale3<F: Real>(a: &Mat3<F>, k: F) -> Mat3<F> {
    [0, 1, 2].map(|i| [0, 1, 2].map(|j| a[i][j] * k))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample(e: &Ellipse<f64>, n: usize) -> Vec<(f64, f64)> {
        (0..n).map(|i| e.point_at(i as f64 * std::f64::consts::TAU / n as f64)).collect()
    }

    #[test]
    fn recovers_exact_ellipse() {
        let truth = Ellipse { centre_x: 100.0, centre_y: 80.0, major_axis: 60.0, minor_axis: 30.0, angle: 0.3 };
        let fit = fit_ellipse(&sample(&truth, 50)).unwrap();
        assert!((fit.centre_x - 100.0).abs() < 1e-8);
        assert!((fit.centre_y - 80.0).abs() < 1e-8);
        assert!((fit.major_axis - 60.0).abs() < 1e-8);
        assert!((fit.minor_axis - 30.0).abs() < 1e-8);
        assert!((fit.angle - 0.3).abs() < 1e-8);
    }

    #[test]
    fn works_in_single_precision() {
        let truth = Ellipse { centre_x: 600.0f32, centre_y: 384.0, major_axis: 120.0, minor_axis: 80.0, angle: 1.2 };
        let pts: Vec<(f32, f32)> =
            (0..200).map(|i| truth.point_at(i as f32 * std::f32::consts::TAU / 200.0)).collect();
        let fit = fit_ellipse(&pts).unwrap();
        assert!((fit.centre_x - 600.0).abs() < 0.05);
        assert!((fit.major_axis - 120.0).abs() < 0.05);
        assert!((fit.minor_axis - 80.0).abs() < 0.05);
    }

    #[test]
    fn degenerate_inputs() {
        let line: Vec<(f64, f64)> = (0..20).map(|i| (i as f64, 2.0 * i as f64)).collect();
        assert!(fit_ellipse(&line).is_none());
        assert!(fit_ellipse(&[(0.0f64, 0.0); 3]).is_none());
        assert!(fit_ellipse(&[(5.0f64, 5.0); 10]).is_none());
    }

    #[test]
    fn cubic_roots() {
        // (x-1)(x-2)(x-3)
        let mut r = solve_cubic(-6.0f64, 11.0, -6.0);
        r.sort_by(f64::total_cmp);
        assert!(r.iter().zip([1.0, 2.0, 3.0]).all(|(a, b)| (a - b).abs() < 1e-9));
        // x³ + x + 1 has one real root
        let r = solve_cubic(0.0f64, 1.0, 1.0);
        assert_eq!(r.len(), 1);
        assert!((r[0].powi(3) + r[0] + 1.0).abs() < 1e-12);
    }

    #[test]
    fn inverse() {
        let m = [[4.0f64, 7.0, 2.0], [3.0, 6.0, 1.0], [2.0, 5.0, 3.0]];
        let inv = invert3(&m).unwrap();
        let id = mul3(&m, &inv);
        for (i, row) in id.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                assert!((v - if i == j { 1.0 } else { 0.0 }).abs() < 1e-12);
            }
        }
    }
}

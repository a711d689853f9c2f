use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{ensure_positive, Error, Result};

pub type Point = [f64; 2];

/// Number of parameter samples used for cached lengths and distance scans.
pub const DEFAULT_SAMPLES: usize = 1024;

/// Samples used for length, area and arc-length tables. The integrands are
/// smooth and periodic, so the trapezoidal rule converges spectrally.
const FINE_SAMPLES: usize = 8192;

/// One harmonic `cos_coeff cos(2 pi k s) + sin_coeff sin(2 pi k s)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Harmonic {
    pub k: u32,
    pub cos_coeff: Point,
    pub sin_coeff: Point,
}

/// A closed planar curve given by a truncated Fourier series in `s in [0, 1)`.
///
/// The parametrization is oriented counterclockwise, so the outward normal is
/// the tangent rotated clockwise and the curvature of a convex curve is
/// positive.
#[derive(Debug, Clone)]
pub struct Contour {
    center: Point,
    harmonics: Vec<Harmonic>,
    samples: Vec<Point>,
    length: f64,
    area: f64,
    // cumulative arc length at s = j / FINE_SAMPLES, j = 0..=FINE_SAMPLES
    arc_table: Vec<f64>,
}

/// Declarative description of a test contour, as used in config files.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum ContourSpec {
    Circle { length: f64 },
    Ellipse { length: f64, aspect: f64 },
    Perturbed { length: f64, mode: u32, eps: f64 },
}

impl ContourSpec {
    pub fn build(&self) -> Result<Contour> {
        match *self {
            ContourSpec::Circle { length } => {
                ensure_positive("length", length)?;
                make_circle(length / (2.0 * PI))
            }
            ContourSpec::Ellipse { length, aspect } => make_ellipse_by_perimeter(length, aspect),
            ContourSpec::Perturbed { length, mode, eps } => make_perturbed_circle(length, mode, eps),
        }
    }

    pub fn length(&self) -> f64 {
        match *self {
            ContourSpec::Circle { length }
            | ContourSpec::Ellipse { length, .. }
            | ContourSpec::Perturbed { length, .. } => length,
        }
    }

    pub fn label(&self) -> String {
        match *self {
            ContourSpec::Circle { length } => format!("circle(L={length})"),
            ContourSpec::Ellipse { length, aspect } => format!("ellipse(L={length},aspect={aspect})"),
            ContourSpec::Perturbed { length, mode, eps } => {
                format!("perturbed(L={length},m={mode},eps={eps})")
            }
        }
    }
}

/// Circle of radius `radius` centred at the origin.
pub fn make_circle(radius: f64) -> Result<Contour> {
    ensure_positive("radius", radius)?;
    Contour::new(
        [0.0, 0.0],
        vec![Harmonic {
            k: 1,
            cos_coeff: [radius, 0.0],
            sin_coeff: [0.0, radius],
        }],
    )
}

/// Ellipse with semi-axes `(a, a / aspect)` whose perimeter equals `length`.
///
/// The perimeter is homogeneous of degree one in the semi-axes, so the major
/// semi-axis follows from the perimeter of the ellipse with `a = 1`.
pub fn make_ellipse_by_perimeter(length: f64, aspect: f64) -> Result<Contour> {
    ensure_positive("length", length)?;
    if !(aspect > 1.0 && aspect <= 20.0) {
        return Err(Error::Parameter {
            name: "aspect",
            value: aspect,
            reason: "aspect ratio must lie in (1, 20]",
        });
    }
    let unit = ellipse(1.0, 1.0 / aspect)?;
    let a = length / unit.length();
    ellipse(a, a / aspect)
}

fn ellipse(a: f64, b: f64) -> Result<Contour> {
    Contour::new(
        [0.0, 0.0],
        vec![Harmonic {
            k: 1,
            cos_coeff: [a, 0.0],
            sin_coeff: [0.0, b],
        }],
    )
}

/// Star-shaped curve `r(theta) = rho (1 + eps cos(m theta))` rescaled to
/// perimeter `length`.
pub fn make_perturbed_circle(length: f64, mode: u32, eps: f64) -> Result<Contour> {
    ensure_positive("length", length)?;
    if mode < 2 {
        return Err(Error::Parameter {
            name: "mode",
            value: f64::from(mode),
            reason: "perturbation mode must be at least 2",
        });
    }
    if !(eps.abs() < 1.0) {
        return Err(Error::Contour(format!(
            "|eps| = {} must be below 1 for a positive radius function",
            eps.abs()
        )));
    }
    let unit = perturbed(1.0, mode, eps)?;
    perturbed(length / unit.length(), mode, eps)
}

// cos(m t) (cos t, sin t) = 1/2 (cos(m+1)t + cos(m-1)t, sin(m+1)t - sin(m-1)t)
fn perturbed(rho: f64, mode: u32, eps: f64) -> Result<Contour> {
    let half = 0.5 * rho * eps;
    let mut harmonics = vec![Harmonic {
        k: 1,
        cos_coeff: [rho, 0.0],
        sin_coeff: [0.0, rho],
    }];
    harmonics.push(Harmonic {
        k: mode + 1,
        cos_coeff: [half, 0.0],
        sin_coeff: [0.0, half],
    });
    harmonics.push(Harmonic {
        k: mode - 1,
        cos_coeff: [half, 0.0],
        sin_coeff: [0.0, -half],
    });
    Contour::new([0.0, 0.0], harmonics)
}

impl Contour {
    /// Builds and validates a contour, flipping it to counterclockwise
    /// orientation when needed.
    pub fn new(center: Point, harmonics: Vec<Harmonic>) -> Result<Self> {
        Self::with_samples(center, harmonics, DEFAULT_SAMPLES)
    }

    pub fn with_samples(center: Point, mut harmonics: Vec<Harmonic>, sample_count: usize) -> Result<Self> {
        if sample_count < 16 {
            return Err(Error::Contour(format!("sample count {sample_count} is too small")));
        }
        if harmonics.is_empty() || harmonics.iter().all(|h| h.k == 0) {
            return Err(Error::Contour("no non-constant harmonics".into()));
        }
        let mut contour = Contour {
            center,
            harmonics: harmonics.clone(),
            samples: Vec::new(),
            length: 0.0,
            area: 0.0,
            arc_table: Vec::new(),
        };
        if contour.signed_area() < 0.0 {
            // s -> -s flips the sine coefficients.
            for h in &mut harmonics {
                h.sin_coeff = [-h.sin_coeff[0], -h.sin_coeff[1]];
            }
            contour.harmonics = harmonics;
        }
        contour.finish(sample_count)?;
        Ok(contour)
    }

    fn finish(&mut self, sample_count: usize) -> Result<()> {
        let n = FINE_SAMPLES;
        let ds = 1.0 / n as f64;
        let mut table = Vec::with_capacity(n + 1);
        table.push(0.0);
        let mut total = 0.0;
        let speeds: Vec<f64> = (0..=n).map(|j| self.speed(j as f64 * ds)).collect();
        if let Some(j) = speeds.iter().position(|&v| !(v > 0.0) || !v.is_finite()) {
            return Err(Error::Contour(format!("curve is not regular at s = {}", j as f64 * ds)));
        }
        // Trapezoid on each interval plus a midpoint Simpson correction.
        for j in 0..n {
            let mid = self.speed((j as f64 + 0.5) * ds);
            total += ds * (speeds[j] + 4.0 * mid + speeds[j + 1]) / 6.0;
            table.push(total);
        }
        self.length = speeds[..n].iter().sum::<f64>() * ds;
        // Simpson table and spectral trapezoid differ only by round-off; rescale.
        let scale = self.length / total;
        for v in &mut table {
            *v *= scale;
        }
        self.arc_table = table;
        self.area = self.signed_area();
        self.samples = (0..sample_count)
            .map(|j| self.position(j as f64 / sample_count as f64))
            .collect();
        for (j, s) in (0..sample_count).map(|j| (j, j as f64 / sample_count as f64)) {
            if !self.curvature(s).is_finite() {
                return Err(Error::Contour(format!("infinite curvature at sample {j}")));
            }
        }
        self.check_simple()
    }

    fn check_simple(&self) -> Result<()> {
        let pts = &self.samples;
        let n = pts.len();
        for i in 0..n {
            let (a, b) = (pts[i], pts[(i + 1) % n]);
            for j in (i + 2)..n {
                if i == 0 && j == n - 1 {
                    continue;
                }
                let (c, d) = (pts[j], pts[(j + 1) % n]);
                if segments_intersect(a, b, c, d) {
                    return Err(Error::Contour(format!(
                        "self-intersection between sample segments {i} and {j}"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn sample_count(&self) -> usize {
        self.samples.len()
    }

    /// Cached positions at `s = j / sample_count`.
    pub fn samples(&self) -> &[Point] {
        &self.samples
    }

    pub fn harmonics(&self) -> &[Harmonic] {
        &self.harmonics
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    /// Enclosed area `|Omega_+|`.
    pub fn area(&self) -> f64 {
        self.area
    }

    /// `L^2 - 4 pi |Omega_+|`, nonnegative with equality only for circles.
    pub fn isoperimetric_defect(&self) -> f64 {
        self.length * self.length - 4.0 * PI * self.area
    }

    /// Radius of the circle with the same perimeter, `L / (2 pi)`.
    pub fn equivalent_radius(&self) -> f64 {
        self.length / (2.0 * PI)
    }

    pub fn position(&self, s: f64) -> Point {
        let mut p = self.center;
        for h in &self.harmonics {
            let (sin, cos) = (2.0 * PI * f64::from(h.k) * s).sin_cos();
            p[0] += h.cos_coeff[0] * cos + h.sin_coeff[0] * sin;
            p[1] += h.cos_coeff[1] * cos + h.sin_coeff[1] * sin;
        }
        p
    }

    pub fn derivative(&self, s: f64) -> Point {
        let mut d = [0.0, 0.0];
        for h in &self.harmonics {
            let w = 2.0 * PI * f64::from(h.k);
            let (sin, cos) = (w * s).sin_cos();
            d[0] += w * (-h.cos_coeff[0] * sin + h.sin_coeff[0] * cos);
            d[1] += w * (-h.cos_coeff[1] * sin + h.sin_coeff[1] * cos);
        }
        d
    }

    pub fn second_derivative(&self, s: f64) -> Point {
        let mut d = [0.0, 0.0];
        for h in &self.harmonics {
            let w = 2.0 * PI * f64::from(h.k);
            let (sin, cos) = (w * s).sin_cos();
            d[0] -= w * w * (h.cos_coeff[0] * cos + h.sin_coeff[0] * sin);
            d[1] -= w * w * (h.cos_coeff[1] * cos + h.sin_coeff[1] * sin);
        }
        d
    }

    pub fn speed(&self, s: f64) -> f64 {
        let d = self.derivative(s);
        d[0].hypot(d[1])
    }

    /// Signed curvature; positive where the curve bends towards its interior.
    pub fn curvature(&self, s: f64) -> f64 {
        let d = self.derivative(s);
        let dd = self.second_derivative(s);
        let speed = d[0].hypot(d[1]);
        (d[0] * dd[1] - d[1] * dd[0]) / (speed * speed * speed)
    }

    /// Unit normal pointing out of `Omega_+`.
    pub fn outward_normal(&self, s: f64) -> Point {
        let d = self.derivative(s);
        let speed = d[0].hypot(d[1]);
        [d[1] / speed, -d[0] / speed]
    }

    /// Area centroid of `Omega_+`.
    pub fn centroid(&self) -> Point {
        let n = FINE_SAMPLES;
        let (mut mx, mut my) = (0.0, 0.0);
        for j in 0..n {
            let s = j as f64 / n as f64;
            let p = self.position(s);
            let d = self.derivative(s);
            mx += p[0] * p[0] * d[1];
            my -= p[1] * p[1] * d[0];
        }
        let scale = 1.0 / (2.0 * self.area * n as f64);
        [mx * scale, my * scale]
    }

    fn signed_area(&self) -> f64 {
        let n = FINE_SAMPLES;
        let sum: f64 = (0..n)
            .map(|j| {
                let s = j as f64 / n as f64;
                let p = self.position(s);
                let d = self.derivative(s);
                p[0] * d[1] - p[1] * d[0]
            })
            .sum();
        0.5 * sum / n as f64
    }

    /// Arc length from `s = 0` to `s`, for `s in [0, 1]`.
    pub fn arc_length_at(&self, s: f64) -> f64 {
        let n = FINE_SAMPLES as f64;
        let s = s.rem_euclid(1.0);
        let j = ((s * n) as usize).min(FINE_SAMPLES - 1);
        let lo = j as f64 / n;
        let frac = (s - lo) * n;
        // Correct the linear interpolation with a Gauss rule on the partial interval.
        if frac == 0.0 {
            return self.arc_table[j];
        }
        let h = s - lo;
        let g = 0.5 / 3f64.sqrt();
        let partial = 0.5 * h * (self.speed(lo + (0.5 - g) * h) + self.speed(lo + (0.5 + g) * h));
        self.arc_table[j] + partial
    }

    /// Parameter at which the arc length from `s = 0` equals `target`.
    pub fn parameter_at_arc_length(&self, target: f64) -> f64 {
        let target = target.rem_euclid(self.length);
        let j = self.arc_table.partition_point(|&v| v <= target).clamp(1, FINE_SAMPLES) - 1;
        let (a, b) = (self.arc_table[j], self.arc_table[j + 1]);
        let n = FINE_SAMPLES as f64;
        let mut s = (j as f64 + (target - a) / (b - a)) / n;
        for _ in 0..4 {
            let err = self.arc_length_at(s) - target;
            s -= err / self.speed(s);
        }
        s
    }

    /// `count` parameters equally spaced in arc length, starting at `s = 0`.
    pub fn equal_arc_parameters(&self, count: usize) -> Vec<f64> {
        (0..count)
            .map(|j| self.parameter_at_arc_length(self.length * j as f64 / count as f64))
            .collect()
    }
}

fn orient(a: Point, b: Point, c: Point) -> f64 {
    (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
}

pub(crate) fn segments_intersect(a: Point, b: Point, c: Point, d: Point) -> bool {
    let d1 = orient(c, d, a);
    let d2 = orient(c, d, b);
    let d3 = orient(a, b, c);
    let d4 = orient(a, b, d);
    (d1 > 0.0) != (d2 > 0.0) && (d3 > 0.0) != (d4 > 0.0) && d1 != 0.0 && d2 != 0.0 && d3 != 0.0 && d4 != 0.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature;

    #[test]
    fn circle_perimeter_and_area() {
        for r in [0.1, 1.0, 7.5] {
            let c = make_circle(r).unwrap();
            assert!((c.length() - 2.0 * PI * r).abs() <= 1e-12 * 2.0 * PI * r);
            assert!((c.area() - PI * r * r).abs() <= 1e-12 * PI * r * r);
            assert!(c.isoperimetric_defect().abs() <= 1e-8 * c.length().powi(2));
            assert!((c.curvature(0.3) - 1.0 / r).abs() < 1e-12 / r);
        }
        assert!(make_circle(0.0).is_err());
    }

    #[test]
    fn ellipse_perimeter_matches_adaptive_quadrature() {
        let c = make_ellipse_by_perimeter(2.0 * PI, 2.0).unwrap();
        let oracle = quadrature::adaptive(0.0, 1.0, 1e-14, |s| c.speed(s));
        assert!((oracle - 2.0 * PI).abs() < 1e-10);
        assert!((c.length() - 2.0 * PI).abs() < 1e-10);
        // Complete elliptic integral: perimeter of (1, 1/2) is 4.844224110273838.
        let a = c.harmonics()[0].cos_coeff[0];
        assert!((a - 2.0 * PI / 4.844_224_110_273_838).abs() < 1e-12);
        assert!((c.harmonics()[0].sin_coeff[1] - a / 2.0).abs() < 1e-12);
        assert!(c.area() < c.length().powi(2) / (4.0 * PI));
    }

    #[test]
    fn nearly_round_ellipse_is_the_circle() {
        let c = make_ellipse_by_perimeter(2.0 * PI, 1.0 + 1e-12).unwrap();
        let hausdorff = (0..1000)
            .map(|j| {
                let p = c.position(j as f64 / 1000.0);
                (p[0].hypot(p[1]) - 1.0).abs()
            })
            .fold(0.0, f64::max);
        assert!(hausdorff < 1e-9);
        assert!(make_ellipse_by_perimeter(2.0 * PI, 1.0).is_err());
        assert!(make_ellipse_by_perimeter(2.0 * PI, 21.0).is_err());
    }

    #[test]
    fn perturbed_circle_properties() {
        let round = make_perturbed_circle(2.0 * PI, 3, 0.0).unwrap();
        assert!((round.area() - PI).abs() < 1e-10);
        let c = make_perturbed_circle(2.0 * PI, 3, 0.1).unwrap();
        assert!((c.length() - 2.0 * PI).abs() < 1e-10);
        assert!(c.area() < c.length().powi(2) / (4.0 * PI));
        let max_curv = (0..4096)
            .map(|j| c.curvature(j as f64 / 4096.0).abs())
            .fold(0.0, f64::max);
        assert!(max_curv.is_finite() && max_curv < 10.0);
        assert!(make_perturbed_circle(2.0 * PI, 1, 0.1).is_err());
        assert!(make_perturbed_circle(2.0 * PI, 3, 1.0).is_err());
    }

    #[test]
    fn self_intersecting_curve_is_rejected() {
        // Limacon-like curve with an inner loop.
        let h = vec![
            Harmonic { k: 1, cos_coeff: [1.0, 0.0], sin_coeff: [0.0, 1.0] },
            Harmonic { k: 2, cos_coeff: [1.5, 0.0], sin_coeff: [0.0, 1.5] },
        ];
        assert!(matches!(Contour::new([0.0, 0.0], h), Err(Error::Contour(_))));
    }

    #[test]
    fn clockwise_input_is_reoriented() {
        let h = vec![Harmonic { k: 1, cos_coeff: [1.0, 0.0], sin_coeff: [0.0, -1.0] }];
        let c = Contour::new([0.0, 0.0], h).unwrap();
        assert!(c.area() > 0.0);
        let n = c.outward_normal(0.0);
        assert!((n[0] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn arc_length_inversion() {
        let c = make_ellipse_by_perimeter(3.0, 3.0).unwrap();
        for j in 0..50 {
            let target = c.length() * j as f64 / 50.0;
            let s = c.parameter_at_arc_length(target);
            let got = quadrature::adaptive(0.0, s, 1e-14, |u| c.speed(u));
            assert!((got - target).abs() < 1e-11, "{target}");
        }
    }

    #[test]
    fn centroid_of_shifted_circle() {
        let h = vec![Harmonic { k: 1, cos_coeff: [2.0, 0.0], sin_coeff: [0.0, 2.0] }];
        let c = Contour::new([0.5, -1.0], h).unwrap();
        let g = c.centroid();
        assert!((g[0] - 0.5).abs() < 1e-12 && (g[1] + 1.0).abs() < 1e-12);
    }

    #[test]
    fn spec_round_trips_through_json() {
        let spec: ContourSpec =
            serde_json::from_str(r#"{"type":"perturbed","length":6.283185307179586,"mode":3,"eps":0.1}"#)
                .unwrap();
        assert_eq!(spec, ContourSpec::Perturbed { length: 2.0 * PI, mode: 3, eps: 0.1 });
        let c = spec.build().unwrap();
        assert!((c.length() - 2.0 * PI).abs() < 1e-10);
    }
}

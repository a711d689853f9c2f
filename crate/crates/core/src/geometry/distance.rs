use super::contour::{Contour, Point};
use super::profiles::{ParallelCoordinates, ProfileSide};

/// Closest point on the contour found by a sampled scan refined with a
/// bracketed Newton iteration on `|gamma(s) - p|^2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Projection {
    pub parameter: f64,
    pub foot: Point,
    pub distance: f64,
}

/// Distance to the curve, positive inside `Omega_+` and negative outside.
pub fn signed_distance(contour: &Contour, p: Point) -> f64 {
    let proj = project(contour, p);
    if proj.distance == 0.0 {
        return 0.0;
    }
    let n = contour.outward_normal(proj.parameter);
    let outward = (p[0] - proj.foot[0]) * n[0] + (p[1] - proj.foot[1]) * n[1];
    if outward > 0.0 {
        -proj.distance
    } else {
        proj.distance
    }
}

pub fn project(contour: &Contour, p: Point) -> Projection {
    let samples = contour.samples();
    let n = samples.len();
    let d2: Vec<f64> = samples
        .iter()
        .map(|q| (q[0] - p[0]).powi(2) + (q[1] - p[1]).powi(2))
        .collect();
    let best = d2.iter().cloned().fold(f64::INFINITY, f64::min);

    // Any sampled local minimum within one sample spacing of the best one may
    // hide the true global minimum between samples.
    let spacing = 2.0 * contour.length() / n as f64;
    let slack = (best.sqrt() + spacing).powi(2);
    let mut result = Projection {
        parameter: 0.0,
        foot: samples[0],
        distance: f64::INFINITY,
    };
    for i in 0..n {
        let prev = d2[(i + n - 1) % n];
        let next = d2[(i + 1) % n];
        if d2[i] > prev || d2[i] > next || d2[i] > slack {
            continue;
        }
        let cand = refine(contour, p, i, n);
        if cand.distance < result.distance {
            result = cand;
        }
    }
    result
}

fn refine(contour: &Contour, p: Point, i: usize, n: usize) -> Projection {
    let ds = 1.0 / n as f64;
    let s0 = i as f64 * ds;
    // g'(s) = (gamma(s) - p) . gamma'(s)
    let slope = |s: f64| {
        let q = contour.position(s);
        let d = contour.derivative(s);
        (q[0] - p[0]) * d[0] + (q[1] - p[1]) * d[1]
    };
    let (mut lo, mut hi) = (s0 - ds, s0 + ds);
    let (glo, ghi) = (slope(lo), slope(hi));
    let mut s = s0;
    if glo <= 0.0 && ghi >= 0.0 {
        for _ in 0..60 {
            let q = contour.position(s);
            let d = contour.derivative(s);
            let dd = contour.second_derivative(s);
            let g1 = (q[0] - p[0]) * d[0] + (q[1] - p[1]) * d[1];
            if g1 < 0.0 {
                lo = s;
            } else {
                hi = s;
            }
            let g2 = d[0] * d[0] + d[1] * d[1] + (q[0] - p[0]) * dd[0] + (q[1] - p[1]) * dd[1];
            let mut next = if g2 > 0.0 { s - g1 / g2 } else { f64::NAN };
            if !(next > lo && next < hi) {
                next = 0.5 * (lo + hi);
            }
            if (next - s).abs() <= 1e-16 * (1.0 + s.abs()) || hi - lo <= 1e-16 {
                s = next;
                break;
            }
            s = next;
        }
    }
    let foot = contour.position(s);
    Projection {
        parameter: s.rem_euclid(1.0),
        foot,
        distance: (foot[0] - p[0]).hypot(foot[1] - p[1]),
    }
}

/// Radius of the largest disk inscribed in `Omega_+`.
///
/// The distance function peaks on the cut locus, so the maximal inner cut
/// distance is the starting point; a compass search then polishes the
/// maximizer of the signed distance.
pub fn in_radius(contour: &Contour) -> f64 {
    let coords = ParallelCoordinates::new(contour, ProfileSide::Inner, None);
    in_radius_from(contour, &coords)
}

pub(crate) fn in_radius_from(contour: &Contour, coords: &ParallelCoordinates) -> f64 {
    let (idx, &cut) = coords
        .cut
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .expect("parallel coordinates are never empty");
    let s = coords.parameters[idx];
    let foot = contour.position(s);
    let n = contour.outward_normal(s);
    let mut best_p = [foot[0] - cut * n[0], foot[1] - cut * n[1]];
    let mut best = signed_distance(contour, best_p).max(0.0);
    let mut step = 0.05 * cut.max(1e-12);
    while step > 1e-13 * contour.length() {
        let mut improved = false;
        for dir in [[1.0, 0.0], [-1.0, 0.0], [0.0, 1.0], [0.0, -1.0]] {
            let q = [best_p[0] + step * dir[0], best_p[1] + step * dir[1]];
            let v = signed_distance(contour, q);
            if v > best {
                best = v;
                best_p = q;
                improved = true;
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    best.max(cut)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::contour::{make_circle, make_ellipse_by_perimeter, make_perturbed_circle};
    use proptest::prelude::*;
    use std::f64::consts::PI;

    #[test]
    fn circle_distances() {
        let c = make_circle(1.5).unwrap();
        assert!((signed_distance(&c, [0.0, 0.0]) - 1.5).abs() < 1e-14);
        assert!((signed_distance(&c, [3.0, 0.0]) + 1.5).abs() < 1e-14);
        assert!((signed_distance(&c, [0.0, -2.0]) + 0.5).abs() < 1e-14);
        assert!(signed_distance(&c, [1.5, 0.0]).abs() < 1e-14);
    }

    #[test]
    fn ellipse_distance_against_brute_force() {
        let c = make_ellipse_by_perimeter(2.0 * PI, 3.0).unwrap();
        let brute = |p: Point| {
            (0..200_000)
                .map(|j| {
                    let q = c.position(j as f64 / 200_000.0);
                    (q[0] - p[0]).hypot(q[1] - p[1])
                })
                .fold(f64::INFINITY, f64::min)
        };
        for p in [[0.0, 0.0], [0.3, 0.1], [2.0, 1.0], [-1.9, 0.0], [0.0, 0.9]] {
            let d = signed_distance(&c, p).abs();
            let b = brute(p);
            assert!(d <= b + 1e-12 && b - d < 1e-6, "{p:?}: {d} vs {b}");
        }
    }

    #[test]
    fn in_radius_examples() {
        let c = make_circle(1.25).unwrap();
        assert!((in_radius(&c) - 1.25).abs() < 1e-12);
        let e = make_ellipse_by_perimeter(2.0 * PI, 2.0).unwrap();
        let b = e.harmonics()[0].sin_coeff[1];
        assert!((in_radius(&e) - b).abs() < 1e-9);
        for spec_c in [e, make_perturbed_circle(2.0 * PI, 4, 0.1).unwrap()] {
            assert!(in_radius(&spec_c) <= spec_c.equivalent_radius() + 1e-12);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn distance_is_one_lipschitz(
            ax in -2.0f64..2.0, ay in -2.0f64..2.0,
            bx in -2.0f64..2.0, by in -2.0f64..2.0,
        ) {
            let c = make_perturbed_circle(2.0 * PI, 3, 0.1).unwrap();
            let da = signed_distance(&c, [ax, ay]).abs();
            let db = signed_distance(&c, [bx, by]).abs();
            prop_assert!((da - db).abs() <= (ax - bx).hypot(ay - by) + 1e-12);
        }
    }
}

//! Level-set area and length profiles of the distance to the curve.
//!
//! Every point of `Omega_+` (or `Omega_-`) off the cut locus has a unique
//! foot point `gamma(s)` and lies at `gamma(s) -/+ tau n(s)` with
//! `0 <= tau < c(s)`, where `c(s)` is the cut distance along the normal.
//! In these parallel coordinates the area element is
//! `(1 -/+ tau kappa(s)) d tau ds`, hence
//!
//! ```text
//! A(t) = sum_s w_s (m -/+ kappa_s m^2 / 2),  m = min(t, c_s)
//! L(t) = sum_s w_s (1 -/+ t kappa_s) [t < c_s]
//! ```
//!
//! Cut loci are accounted for through `c(s)`; offset curves are never traced.

use std::f64::consts::PI;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::contour::{Contour, Point};
use super::distance::{in_radius_from, signed_distance};
use crate::error::{Error, Result};
use crate::quadrature::PanelGrid;

/// Which complementary component of the plane a profile describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProfileSide {
    /// The bounded component `Omega_+`.
    Inner,
    /// The unbounded component `Omega_-`.
    Outer,
}

impl ProfileSide {
    /// `-1` for the inner side, `+1` for the outer side.
    fn sign(self) -> f64 {
        match self {
            ProfileSide::Inner => -1.0,
            ProfileSide::Outer => 1.0,
        }
    }
}

/// Sampled normal coordinates of one side of a contour.
#[derive(Debug, Clone)]
pub struct ParallelCoordinates {
    pub side: ProfileSide,
    pub parameters: Vec<f64>,
    /// Arc-length quadrature weights (periodic trapezoid).
    pub weights: Vec<f64>,
    pub curvature: Vec<f64>,
    /// Cut distance along the normal, capped at the horizon.
    pub cut: Vec<f64>,
    /// `true` where the cut distance reached the cap without leaving the
    /// distance-minimizing regime.
    pub capped: Vec<bool>,
    pub horizon: f64,
}

/// Relative slack in the test `dist(gamma(s) + tau n, Sigma) >= tau`.
const CUT_TOLERANCE: f64 = 1e-11;

impl ParallelCoordinates {
    /// Normal coordinates on `2 * sample_count` foot points.
    ///
    /// The inner side is capped at `L / (2 pi)`, which bounds the in-radius;
    /// the outer side at `horizon` (default `6 L / (2 pi)`).
    pub fn new(contour: &Contour, side: ProfileSide, horizon: Option<f64>) -> Self {
        Self::with_count(contour, side, horizon, 2 * contour.sample_count())
    }

    pub fn with_count(contour: &Contour, side: ProfileSide, horizon: Option<f64>, count: usize) -> Self {
        let big_r = contour.equivalent_radius();
        let horizon = match side {
            ProfileSide::Inner => big_r,
            ProfileSide::Outer => horizon.unwrap_or(6.0 * big_r),
        };
        let parameters: Vec<f64> = (0..count).map(|j| j as f64 / count as f64).collect();
        let sign = side.sign();
        let eps = CUT_TOLERANCE * contour.length();

        let rows: Vec<(f64, f64, f64, bool)> = parameters
            .par_iter()
            .map(|&s| {
                let foot = contour.position(s);
                let n = contour.outward_normal(s);
                let kappa = contour.curvature(s);
                let weight = contour.speed(s) / count as f64;
                // Jacobian 1 + sign tau kappa vanishes at the focal distance.
                let mut cap = horizon;
                if sign * kappa < 0.0 {
                    cap = cap.min(1.0 / kappa.abs());
                }
                let point = |tau: f64| -> Point { [foot[0] + sign * tau * n[0], foot[1] + sign * tau * n[1]] };
                let inside = |tau: f64| -sign * signed_distance(contour, point(tau)) >= tau - eps;
                if inside(cap) {
                    return (weight, kappa, cap, cap == horizon);
                }
                let (mut lo, mut hi) = (0.0, cap);
                for _ in 0..55 {
                    let mid = 0.5 * (lo + hi);
                    if inside(mid) {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                (weight, kappa, 0.5 * (lo + hi), false)
            })
            .collect();

        ParallelCoordinates {
            side,
            parameters,
            weights: rows.iter().map(|r| r.0).collect(),
            curvature: rows.iter().map(|r| r.1).collect(),
            cut: rows.iter().map(|r| r.2).collect(),
            capped: rows.iter().map(|r| r.3).collect(),
            horizon,
        }
    }

    pub fn len(&self) -> usize {
        self.parameters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parameters.is_empty()
    }

    pub fn max_cut(&self) -> f64 {
        self.cut.iter().cloned().fold(0.0, f64::max)
    }

    /// Area of the set of points at distance `< t` on this side.
    pub fn area_below(&self, t: f64) -> f64 {
        let sign = self.side.sign();
        self.iter()
            .map(|(w, kappa, cut, _)| {
                let m = t.min(cut).max(0.0);
                w * (m + sign * 0.5 * kappa * m * m)
            })
            .sum()
    }

    /// Length of the level set at distance `t` on this side.
    ///
    /// The cut distance is interpolated linearly across each sample's cell,
    /// so the set `{s : c(s) > t}` is resolved below the sample spacing.
    pub fn level_length(&self, t: f64) -> f64 {
        let sign = self.side.sign();
        let n = self.len();
        (0..n)
            .map(|j| {
                let c = self.cut[j];
                let reach = |k: usize| {
                    let mid = 0.5 * (c + self.cut[k]);
                    if self.capped[j] && self.capped[k] && t <= c.min(mid) {
                        1.0
                    } else {
                        covered_fraction(c, mid, t)
                    }
                };
                let fraction = 0.5 * (reach((j + n - 1) % n) + reach((j + 1) % n));
                self.weights[j] * (1.0 + sign * t * self.curvature[j]) * fraction
            })
            .sum()
    }

    /// `int f(t) L(t) dt` over the side, computed as the exact parallel
    /// coordinate integral `sum_s w_s int_0^{c_s} f(t) (1 -/+ t kappa_s) dt`.
    ///
    /// The panel grid must start at zero and cover every cut distance.
    pub fn integrate_against_length<F: Fn(f64) -> f64>(&self, grid: &PanelGrid, f: F) -> f64 {
        let moments = grid.moments(f);
        let sign = self.side.sign();
        self.iter()
            .map(|(w, kappa, cut, _)| {
                let (m0, m1) = moments.up_to(cut);
                w * (m0 + sign * kappa * m1)
            })
            .sum()
    }

    fn iter(&self) -> impl Iterator<Item = (f64, f64, f64, bool)> + '_ {
        self.weights
            .iter()
            .zip(&self.curvature)
            .zip(&self.cut)
            .zip(&self.capped)
            .map(|(((&w, &k), &c), &cap)| (w, k, c, cap))
    }
}

/// Fraction of a segment, along which `c` is linear from `c0` to `c1`, where
/// `c > t`.
fn covered_fraction(c0: f64, c1: f64, t: f64) -> f64 {
    let (lo, hi) = if c0 < c1 { (c0, c1) } else { (c1, c0) };
    if lo > t {
        1.0
    } else if hi <= t {
        0.0
    } else {
        (hi - t) / (hi - lo)
    }
}

/// Tabulated `A(t)` and `L(t)` on a uniform grid.
#[derive(Debug, Clone)]
pub struct DistanceProfileTable {
    pub side: ProfileSide,
    pub t: Vec<f64>,
    pub area: Vec<f64>,
    pub length: Vec<f64>,
    /// Perimeter `L` of the contour.
    pub contour_length: f64,
    coordinates: ParallelCoordinates,
}

impl DistanceProfileTable {
    pub fn coordinates(&self) -> &ParallelCoordinates {
        &self.coordinates
    }

    /// Last grid point: the in-radius (inner) or the horizon (outer).
    pub fn extent(&self) -> f64 {
        *self.t.last().unwrap()
    }

    /// Comparison profile `L - 2 pi t` (inner) or `L + 2 pi t` (outer).
    pub fn circle_bound(&self, t: f64) -> f64 {
        self.contour_length + self.side.sign() * 2.0 * PI * t
    }

    /// Largest `L(t_j) - (L -/+ 2 pi t_j)` over the grid; nonpositive when
    /// the level lengths never exceed the circle's.
    pub fn bound_violation(&self) -> f64 {
        self.t
            .iter()
            .zip(&self.length)
            .map(|(&t, &l)| l - self.circle_bound(t))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Largest relative mismatch between the difference quotient of `A` and
    /// the level length at the interval midpoint.
    pub fn derivative_mismatch(&self) -> f64 {
        let scale = self.contour_length;
        self.t
            .windows(2)
            .zip(self.area.windows(2))
            .map(|(t, a)| {
                let quotient = (a[1] - a[0]) / (t[1] - t[0]);
                let mid = self.coordinates.level_length(0.5 * (t[0] + t[1]));
                (quotient - mid).abs() / scale
            })
            .fold(0.0, f64::max)
    }

    /// CSV with header `t,A,L`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,A,L\n");
        for ((t, a), l) in self.t.iter().zip(&self.area).zip(&self.length) {
            writeln!(out, "{t:.12e},{a:.12e},{l:.12e}").unwrap();
        }
        out
    }
}

/// Area and length profiles of one side on `n` grid points.
///
/// The inner table runs from 0 to the in-radius; the outer table from 0 to
/// `horizon` (default `6 L / (2 pi)`).
pub fn distance_profiles(
    contour: &Contour,
    side: ProfileSide,
    horizon: Option<f64>,
    n: usize,
) -> Result<DistanceProfileTable> {
    if n < 2 {
        return Err(Error::Profile(format!("grid size {n} is below 2")));
    }
    if let Some(h) = horizon {
        if !(h > 0.0) {
            return Err(Error::Profile(format!("horizon {h} must be positive")));
        }
    }
    let coordinates = ParallelCoordinates::new(contour, side, horizon);
    let extent = match side {
        ProfileSide::Inner => in_radius_from(contour, &coordinates).min(coordinates.max_cut()),
        ProfileSide::Outer => coordinates.horizon,
    };
    let t: Vec<f64> = (0..n).map(|j| extent * j as f64 / (n - 1) as f64).collect();
    let area: Vec<f64> = t.iter().map(|&t| coordinates.area_below(t)).collect();
    let length: Vec<f64> = t.iter().map(|&t| coordinates.level_length(t)).collect();

    let tol = 1e-12 * area.last().copied().unwrap_or(0.0).abs().max(1.0);
    if let Some(j) = area.windows(2).position(|w| w[1] < w[0] - tol) {
        return Err(Error::Profile(format!(
            "area profile decreases between t = {} and t = {}",
            t[j],
            t[j + 1]
        )));
    }
    Ok(DistanceProfileTable {
        side,
        t,
        area,
        length,
        contour_length: contour.length(),
        coordinates,
    })
}

/// Independent estimate of `A(t)` by rasterizing the signed distance on a
/// Cartesian grid with cell size `cell`.
///
/// Each cell contributes the fraction of its area below the level set,
/// approximated by a linear ramp across the cell (the distance function has
/// unit gradient).
pub fn raster_sublevel_areas(contour: &Contour, side: ProfileSide, t_values: &[f64], cell: f64) -> Vec<f64> {
    let t_max = t_values.iter().cloned().fold(0.0, f64::max);
    let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
    for p in contour.samples() {
        for k in 0..2 {
            lo[k] = lo[k].min(p[k]);
            hi[k] = hi[k].max(p[k]);
        }
    }
    let margin = match side {
        ProfileSide::Inner => 2.0 * cell,
        ProfileSide::Outer => t_max + 2.0 * cell,
    };
    let nx = ((hi[0] - lo[0] + 2.0 * margin) / cell).ceil() as usize;
    let ny = ((hi[1] - lo[1] + 2.0 * margin) / cell).ceil() as usize;
    let sign = side.sign();
    let distances: Vec<f64> = (0..nx * ny)
        .into_par_iter()
        .map(|idx| {
            let (i, j) = (idx % nx, idx / nx);
            let p = [
                lo[0] - margin + (i as f64 + 0.5) * cell,
                lo[1] - margin + (j as f64 + 0.5) * cell,
            ];
            // distance measured into the requested side
            -sign * signed_distance(contour, p)
        })
        .collect();
    let ramp = |x: f64| (0.5 + x / cell).clamp(0.0, 1.0);
    t_values
        .iter()
        .map(|&t| {
            distances
                .iter()
                .map(|&d| ramp(t - d) + ramp(d) - 1.0)
                .map(|f| f.max(0.0))
                .sum::<f64>()
                * cell
                * cell
        })
        .collect()
}

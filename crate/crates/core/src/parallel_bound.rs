//! Rayleigh-quotient upper bounds from radial profiles.
//!
//! A pair of one-dimensional profiles `(psi_+, psi_-)` defines a test
//! function on any contour by composing with the distance to the curve:
//! `u = psi_+(rho_+)` inside and `u = psi_-(rho_-)` outside. Because the
//! distance has unit gradient, the co-area formula reduces the quadratic
//! form and the norm to one-dimensional integrals weighted by the level
//! lengths `L_+(t)` and `L_-(t)`. On the circle of the same perimeter these
//! weights are `L - 2 pi t` and `L + 2 pi t`, and they can only shrink on
//! any other contour, which is what makes the circle maximal.

use std::f64::consts::PI;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::circle::{solve_k_star, CircleProblem, CircleSolution, Side};
use crate::error::{ensure_positive, Error, Result};
use crate::geometry::{Contour, ParallelCoordinates, ProfileSide};
use crate::quadrature::PanelGrid;
use crate::special_functions::k0e;

/// Panels per side for the profile integrals.
pub const PANELS: usize = 256;

/// Fraction of the outer interval over which `psi_-` is ramped to zero.
pub const TAPER_FRACTION: f64 = 0.01;

/// Relative size of `K_0(k (R + T)) / K_0(k R)` targeted by the default
/// horizon.
pub const TAIL_RATIO: f64 = 1e-14;

type ProfileFn = Arc<dyn Fn(f64) -> (f64, f64) + Send + Sync>;

/// Inner profile on `[0, R]` and outer profile on `[0, T]`, both as
/// functions of the distance to the curve, returning `(value, derivative)`.
#[derive(Clone)]
pub struct RadialProfile {
    radius: f64,
    horizon: f64,
    inner: ProfileFn,
    outer: ProfileFn,
}

impl std::fmt::Debug for RadialProfile {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RadialProfile")
            .field("radius", &self.radius)
            .field("horizon", &self.horizon)
            .finish_non_exhaustive()
    }
}

impl RadialProfile {
    /// Profiles with analytic derivatives. The outer profile is multiplied
    /// by a linear ramp on the last [`TAPER_FRACTION`] of `[0, T]`.
    pub fn with_derivatives<I, O>(radius: f64, horizon: f64, inner: I, outer: O) -> Result<Self>
    where
        I: Fn(f64) -> (f64, f64) + Send + Sync + 'static,
        O: Fn(f64) -> (f64, f64) + Send + Sync + 'static,
    {
        ensure_positive("radius", radius)?;
        ensure_positive("horizon", horizon)?;
        let start = (1.0 - TAPER_FRACTION) * horizon;
        let width = TAPER_FRACTION * horizon;
        let tapered = move |t: f64| {
            let (v, d) = outer(t);
            if t <= start {
                (v, d)
            } else {
                let ramp = ((horizon - t) / width).max(0.0);
                (v * ramp, d * ramp - v / width)
            }
        };
        Ok(RadialProfile {
            radius,
            horizon,
            inner: Arc::new(inner),
            outer: Arc::new(tapered),
        })
    }

    /// Profiles given by values only; derivatives use central differences,
    /// switching to second-order one-sided stencils at the interval ends so
    /// the functions are only evaluated on `[0, R]` and `[0, T]`.
    pub fn from_values<I, O>(radius: f64, horizon: f64, inner: I, outer: O) -> Result<Self>
    where
        I: Fn(f64) -> f64 + Send + Sync + 'static,
        O: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        Self::with_derivatives(
            radius,
            horizon,
            move |t| (inner(t), difference(&inner, t, radius)),
            move |t| (outer(t), difference(&outer, t, horizon)),
        )
    }

    /// `psi_+ = plus` and `psi_- = minus` (tapered at the horizon).
    pub fn constant(radius: f64, horizon: f64, plus: f64, minus: f64) -> Result<Self> {
        Self::with_derivatives(radius, horizon, move |_| (plus, 0.0), move |_| (minus, 0.0))
    }

    /// `R = L / (2 pi)` of the comparison circle.
    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn psi_plus(&self, t: f64) -> f64 {
        (self.inner)(t).0
    }

    pub fn psi_minus(&self, t: f64) -> f64 {
        (self.outer)(t).0
    }

    pub fn dpsi_plus(&self, t: f64) -> f64 {
        (self.inner)(t).1
    }

    pub fn dpsi_minus(&self, t: f64) -> f64 {
        (self.outer)(t).1
    }

    /// `psi_+(0) - psi_-(0)`.
    pub fn jump(&self) -> f64 {
        self.psi_plus(0.0) - self.psi_minus(0.0)
    }

    fn inner_grid(&self) -> PanelGrid {
        PanelGrid::new(0.0, self.radius, PANELS, &[])
    }

    fn outer_grid(&self) -> PanelGrid {
        PanelGrid::new(0.0, self.horizon, PANELS, &[(1.0 - TAPER_FRACTION) * self.horizon])
    }
}

fn difference<F: Fn(f64) -> f64>(f: &F, t: f64, end: f64) -> f64 {
    let h = 1e-5 * end;
    if t - h < 0.0 {
        (-3.0 * f(t) + 4.0 * f(t + h) - f(t + 2.0 * h)) / (2.0 * h)
    } else if t + h > end {
        (3.0 * f(t) - 4.0 * f(t - h) + f(t - 2.0 * h)) / (2.0 * h)
    } else {
        (f(t + h) - f(t - h)) / (2.0 * h)
    }
}

/// Smallest horizon `T` with `K_0(k (R + T)) <= TAIL_RATIO * K_0(k R)`.
pub fn default_horizon(radius: f64, k: f64) -> f64 {
    let ratio = |t: f64| k0e(k * (radius + t)) / k0e(k * radius) * (-k * t).exp();
    let mut hi = 1.0 / k;
    while ratio(hi) > TAIL_RATIO {
        hi *= 2.0;
    }
    let mut lo = 0.0;
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if ratio(mid) > TAIL_RATIO {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    hi
}

/// The circle ground state written in distance coordinates:
/// `psi_+(t) = K_1(k R) I_0(k (R - t))`, `psi_-(t) = -I_1(k R) K_0(k (R + t))`.
///
/// `horizon = None` selects [`default_horizon`].
pub fn optimal_profile(radius: f64, omega: f64, horizon: Option<f64>) -> Result<RadialProfile> {
    let solution = solve_k_star(&CircleProblem::new(radius, omega)?, 1e-13 * omega)?;
    optimal_profile_for(&solution, horizon)
}

/// [`optimal_profile`] built from an already solved circle.
pub fn optimal_profile_for(solution: &CircleSolution, horizon: Option<f64>) -> Result<RadialProfile> {
    let radius = solution.problem.radius;
    let horizon = horizon.unwrap_or_else(|| default_horizon(radius, solution.k_star));
    let (a, b) = (*solution, *solution);
    RadialProfile::with_derivatives(
        radius,
        horizon,
        move |t| {
            let r = (radius - t).clamp(0.0, radius);
            (
                a.eigenfunction(r, Side::Inside).unwrap(),
                -a.eigenfunction_derivative(r, Side::Inside).unwrap(),
            )
        },
        move |t| {
            let r = radius + t.max(0.0);
            (
                b.eigenfunction(r, Side::Outside).unwrap(),
                b.eigenfunction_derivative(r, Side::Outside).unwrap(),
            )
        },
    )
}

/// Terms of the Rayleigh quotient of a transplanted profile.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuotientReport {
    pub numerator_gradient: f64,
    /// `omega L (psi_+(0) - psi_-(0))^2`, evaluated without quadrature.
    pub numerator_jump: f64,
    pub denominator: f64,
    pub quotient: f64,
}

impl QuotientReport {
    fn new(numerator_gradient: f64, numerator_jump: f64, denominator: f64) -> Result<Self> {
        if !(denominator > 0.0) {
            return Err(Error::Parameter {
                name: "denominator",
                value: denominator,
                reason: "profile has zero norm",
            });
        }
        Ok(QuotientReport {
            numerator_gradient,
            numerator_jump,
            denominator,
            quotient: (numerator_gradient - numerator_jump) / denominator,
        })
    }
}

fn check_length(profile: &RadialProfile, length: f64) -> Result<()> {
    ensure_positive("length", length)?;
    let expected = 2.0 * PI * profile.radius;
    if (length - expected).abs() > 1e-8 * expected {
        return Err(Error::Parameter {
            name: "length",
            value: length,
            reason: "differs from the perimeter the profile was built for",
        });
    }
    Ok(())
}

/// Quotient of the profile on the circle of perimeter `length`, i.e. with
/// level-length weights `L - 2 pi t` inside and `L + 2 pi t` outside.
pub fn circle_quotient(profile: &RadialProfile, length: f64, omega: f64) -> Result<QuotientReport> {
    check_length(profile, length)?;
    ensure_positive("omega", omega)?;
    let inner = profile.inner_grid();
    let outer = profile.outer_grid();
    let w_in = |t: f64| length - 2.0 * PI * t;
    let w_out = |t: f64| length + 2.0 * PI * t;
    let gradient = inner.integrate(|t| profile.dpsi_plus(t).powi(2) * w_in(t))
        + outer.integrate(|t| profile.dpsi_minus(t).powi(2) * w_out(t));
    let mass = inner.integrate(|t| profile.psi_plus(t).powi(2) * w_in(t))
        + outer.integrate(|t| profile.psi_minus(t).powi(2) * w_out(t));
    QuotientReport::new(gradient, omega * length * profile.jump().powi(2), mass)
}

/// Quotient of the profile transplanted onto `contour`: the exact Rayleigh
/// quotient of `psi_+(rho_+)` inside and `psi_-(rho_-)` outside.
pub fn domain_quotient(profile: &RadialProfile, contour: &Contour, omega: f64) -> Result<QuotientReport> {
    let inner = ParallelCoordinates::new(contour, ProfileSide::Inner, None);
    let outer = ParallelCoordinates::new(contour, ProfileSide::Outer, Some(profile.horizon));
    domain_quotient_with(profile, contour.length(), &inner, &outer, omega)
}

/// [`domain_quotient`] on precomputed normal coordinates.
pub fn domain_quotient_with(
    profile: &RadialProfile,
    length: f64,
    inner: &ParallelCoordinates,
    outer: &ParallelCoordinates,
    omega: f64,
) -> Result<QuotientReport> {
    check_length(profile, length)?;
    ensure_positive("omega", omega)?;
    if inner.side != ProfileSide::Inner || outer.side != ProfileSide::Outer {
        return Err(Error::Profile("normal coordinates passed for the wrong sides".into()));
    }
    if outer.horizon > profile.horizon * (1.0 + 1e-12) {
        return Err(Error::Profile(format!(
            "outer coordinates reach {} beyond the profile horizon {}",
            outer.horizon, profile.horizon
        )));
    }
    let (gi, go) = (profile.inner_grid(), profile.outer_grid());
    let gradient = inner.integrate_against_length(&gi, |t| profile.dpsi_plus(t).powi(2))
        + outer.integrate_against_length(&go, |t| profile.dpsi_minus(t).powi(2));
    let mass = inner.integrate_against_length(&gi, |t| profile.psi_plus(t).powi(2))
        + outer.integrate_against_length(&go, |t| profile.psi_minus(t).powi(2));
    QuotientReport::new(gradient, omega * length * profile.jump().powi(2), mass)
}

/// How a domain quotient compares with the circle quotient of the same profile.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum QuotientOrdering {
    /// `domain <= circle` up to the relative tolerance.
    Holds { excess: f64 },
    Violated { excess: f64 },
    /// The circle quotient is nonnegative, so no ordering is implied.
    Vacuous { circle_quotient: f64 },
}

pub fn compare_quotients(circle: &QuotientReport, domain: &QuotientReport, rel_tol: f64) -> QuotientOrdering {
    if circle.quotient >= 0.0 {
        return QuotientOrdering::Vacuous {
            circle_quotient: circle.quotient,
        };
    }
    let excess = domain.quotient - circle.quotient;
    if excess <= rel_tol * circle.quotient.abs() {
        QuotientOrdering::Holds { excess }
    } else {
        QuotientOrdering::Violated { excess }
    }
}

/// Numerical instance of the comparison with the circle of equal perimeter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TheoremCertificate {
    pub length: f64,
    pub omega: f64,
    pub k_star: f64,
    pub horizon: f64,
    pub lambda1_circle: f64,
    /// Upper bound on the lowest eigenvalue of the contour.
    pub domain_bound: f64,
    /// `lambda1_circle - domain_bound`.
    pub margin: f64,
    pub circle: QuotientReport,
    pub domain: QuotientReport,
}

impl TheoremCertificate {
    /// `domain_bound <= lambda1_circle + tol`.
    pub fn holds(&self, tol: f64) -> bool {
        self.margin >= -tol
    }
}

pub fn theorem_certificate(contour: &Contour, omega: f64) -> Result<TheoremCertificate> {
    theorem_certificate_with(contour, omega, None)
}

/// [`theorem_certificate`] with the profile truncated at `horizon` instead of
/// [`default_horizon`].
pub fn theorem_certificate_with(contour: &Contour, omega: f64, horizon: Option<f64>) -> Result<TheoremCertificate> {
    let length = contour.length();
    let problem = CircleProblem::with_length(length, omega)?;
    let solution = solve_k_star(&problem, 1e-13 * omega)?;
    let profile = optimal_profile_for(&solution, horizon)?;
    let circle = circle_quotient(&profile, length, omega)?;
    let domain = domain_quotient(&profile, contour, omega)?;
    Ok(TheoremCertificate {
        length,
        omega,
        k_star: solution.k_star,
        horizon: profile.horizon,
        lambda1_circle: solution.lambda1,
        domain_bound: domain.quotient,
        margin: solution.lambda1 - domain.quotient,
        circle,
        domain,
    })
}

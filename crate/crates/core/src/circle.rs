//! Exact ground state for the interaction supported on a circle of radius `R`.
//!
//! With `lambda_1 = -k^2`, the radial ground state is
//! `K_1(kR) I_0(kr)` inside and `-I_1(kR) K_0(kr)` outside, and `k` is the
//! unique positive root of the secular equation `k^2 R I_1(kR) K_1(kR) = omega`.
//! The root is bracketed by `2 omega < k < omega / F(2 omega R)` with
//! `F(x) = x K_1(x) I_1(x)`.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{ensure_positive, Error, Result};
use crate::quadrature;
use crate::special_functions::{i0e, i1e, k0e, k1e};

/// Bisection stops once the bracket is narrower than this (relative to `k`).
const BISECTION_WIDTH: f64 = 1e-8;
const MAX_NEWTON_STEPS: usize = 60;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CircleProblem {
    pub radius: f64,
    pub omega: f64,
}

impl CircleProblem {
    pub fn new(radius: f64, omega: f64) -> Result<Self> {
        ensure_positive("radius", radius)?;
        ensure_positive("omega", omega)?;
        Ok(CircleProblem { radius, omega })
    }

    /// The circle with perimeter `length`.
    pub fn with_length(length: f64, omega: f64) -> Result<Self> {
        ensure_positive("length", length)?;
        Self::new(length / (2.0 * PI), omega)
    }

    /// Analytic bracket `(2 omega, omega / F(2 omega R))` for the root.
    pub fn k_bounds(&self) -> (f64, f64) {
        let lower = 2.0 * self.omega;
        let upper = self.omega / f_unchecked(2.0 * self.omega * self.radius);
        (lower, upper)
    }
}

/// Which side of the circle a one-sided value refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Side {
    Inside,
    Outside,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CircleSolution {
    pub problem: CircleProblem,
    pub k_star: f64,
    pub lambda1: f64,
    /// `K_1(k R)`; underflows to zero once `k R` exceeds about 700.
    pub coeff_inside: f64,
    /// `-I_1(k R)`; overflows once `k R` exceeds about 700.
    pub coeff_outside: f64,
    pub residual: f64,
}

/// Serializable summary of a [`CircleSolution`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CircleRecord {
    #[serde(rename = "R")]
    pub radius: f64,
    pub omega: f64,
    pub k_star: f64,
    pub lambda1: f64,
    pub residual: f64,
}

impl From<&CircleSolution> for CircleRecord {
    fn from(sol: &CircleSolution) -> Self {
        CircleRecord {
            radius: sol.problem.radius,
            omega: sol.problem.omega,
            k_star: sol.k_star,
            lambda1: sol.lambda1,
            residual: sol.residual,
        }
    }
}

#[inline]
fn f_unchecked(x: f64) -> f64 {
    x * k1e(x) * i1e(x)
}

/// `F(x) = x K_1(x) I_1(x)`, increasing from 0 to 1/2 on `(0, inf)`.
pub fn profile_f(x: f64) -> Result<f64> {
    if x > 0.0 {
        Ok(f_unchecked(x))
    } else {
        Err(Error::Domain {
            what: "profile_f",
            value: x,
            expected: "x > 0",
        })
    }
}

/// `k^2 R I_1(kR) K_1(kR) - omega`.
pub fn secular_residual(k: f64, problem: &CircleProblem) -> Result<f64> {
    if k > 0.0 {
        Ok(residual_unchecked(k, problem))
    } else {
        Err(Error::Domain {
            what: "secular_residual",
            value: k,
            expected: "k > 0",
        })
    }
}

#[inline]
fn residual_unchecked(k: f64, problem: &CircleProblem) -> f64 {
    k * f_unchecked(k * problem.radius) - problem.omega
}

/// Finds the unique root of the secular equation with `|residual| <= tol`.
///
/// Bisection on the analytic bracket, then Newton polishing with a
/// central-difference slope.
pub fn solve_k_star(problem: &CircleProblem, tol: f64) -> Result<CircleSolution> {
    ensure_positive("tol", tol)?;
    let problem = CircleProblem::new(problem.radius, problem.omega)?;
    let g = |k: f64| residual_unchecked(k, &problem);

    let (mut lo, mut hi) = problem.k_bounds();
    if !(g(lo) < 0.0) {
        return Err(Error::Convergence {
            what: "secular bracket (lower end)",
            iterations: 0,
            residual: g(lo),
        });
    }
    // The analytic upper end can round onto the root when omega R is huge.
    let mut doublings = 0;
    while !hi.is_finite() || !(g(hi) > 0.0) {
        hi = if hi.is_finite() { 2.0 * hi } else { 4.0 * lo };
        doublings += 1;
        if doublings > 200 {
            return Err(Error::Convergence {
                what: "secular bracket (upper end)",
                iterations: doublings,
                residual: g(hi),
            });
        }
    }

    while hi - lo > BISECTION_WIDTH * hi {
        let mid = 0.5 * (lo + hi);
        if g(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }

    let mut k = 0.5 * (lo + hi);
    let mut res = g(k);
    let mut steps = 0;
    while res.abs() > tol && steps < MAX_NEWTON_STEPS {
        let h = 1e-6 * k;
        let slope = (g(k + h) - g(k - h)) / (2.0 * h);
        let mut next = k - res / slope;
        if !(next > lo && next < hi) || !next.is_finite() {
            next = 0.5 * (lo + hi);
        }
        let next_res = g(next);
        if next_res < 0.0 {
            lo = lo.max(next);
        } else {
            hi = hi.min(next);
        }
        if next == k {
            break;
        }
        k = next;
        res = next_res;
        steps += 1;
    }
    if res.abs() > tol {
        return Err(Error::Convergence {
            what: "secular equation",
            iterations: steps,
            residual: res,
        });
    }

    let x = k * problem.radius;
    Ok(CircleSolution {
        problem,
        k_star: k,
        lambda1: -k * k,
        coeff_inside: k1e(x) * (-x).exp(),
        coeff_outside: -i1e(x) * x.exp(),
        residual: res,
    })
}

/// Solves every radius of an ascending sweep (in parallel, output in input order).
pub fn sweep_radius(omega: f64, radii: &[f64], tol: f64) -> Result<Vec<CircleSolution>> {
    ensure_positive("omega", omega)?;
    for w in radii.windows(2) {
        if !(w[0] < w[1]) {
            return Err(Error::Parameter {
                name: "radii",
                value: w[1],
                reason: "radii must be strictly ascending",
            });
        }
    }
    radii
        .par_iter()
        .map(|&r| solve_k_star(&CircleProblem::new(r, omega)?, tol))
        .collect()
}

impl CircleSolution {
    fn kr(&self) -> f64 {
        self.k_star * self.problem.radius
    }

    /// One-sided value of the (unnormalized) ground state at radius `r`.
    ///
    /// `Side::Inside` requires `r <= R`, `Side::Outside` requires `r >= R`.
    pub fn eigenfunction(&self, r: f64, side: Side) -> Result<f64> {
        let big_r = self.problem.radius;
        let k = self.k_star;
        let kr = self.kr();
        match side {
            Side::Inside if (0.0..=big_r).contains(&r) => {
                Ok(k1e(kr) * i0e(k * r) * (-k * (big_r - r)).exp())
            }
            Side::Outside if r >= big_r => Ok(-i1e(kr) * k0e(k * r) * (-k * (r - big_r)).exp()),
            _ => Err(Error::Domain {
                what: "eigenfunction side",
                value: r,
                expected: "Inside needs 0 <= r <= R, Outside needs r >= R",
            }),
        }
    }

    /// Radial derivative of the ground state on the given side.
    pub fn eigenfunction_derivative(&self, r: f64, side: Side) -> Result<f64> {
        let big_r = self.problem.radius;
        let k = self.k_star;
        let kr = self.kr();
        match side {
            Side::Inside if (0.0..=big_r).contains(&r) => {
                Ok(k * k1e(kr) * i1e(k * r) * (-k * (big_r - r)).exp())
            }
            Side::Outside if r >= big_r => {
                Ok(k * i1e(kr) * k1e(k * r) * (-k * (r - big_r)).exp())
            }
            _ => Err(Error::Domain {
                what: "eigenfunction side",
                value: r,
                expected: "Inside needs 0 <= r <= R, Outside needs r >= R",
            }),
        }
    }

    /// `|| u_1 ||^2` over the plane by adaptive quadrature.
    pub fn l2_norm_squared(&self) -> f64 {
        let big_r = self.problem.radius;
        let k = self.k_star;
        let scale = self.eigenfunction(big_r, Side::Inside).unwrap().abs()
            + self.eigenfunction(big_r, Side::Outside).unwrap().abs();
        let tol = 1e-14 * scale * scale * big_r * big_r;
        let inner = quadrature::adaptive(0.0, big_r, tol, |r| {
            let u = self.eigenfunction(r, Side::Inside).unwrap();
            2.0 * PI * r * u * u
        });
        // K_0 tail is below double precision after ~40 decay lengths.
        let outer_end = big_r + 40.0 / k;
        let outer = quadrature::adaptive(big_r, outer_end, tol, |r| {
            let u = self.eigenfunction(r, Side::Outside).unwrap();
            2.0 * PI * r * u * u
        });
        inner + outer
    }

    /// The ground state scaled to unit L² norm.
    pub fn normalized(&self) -> NormalizedEigenfunction {
        NormalizedEigenfunction {
            solution: *self,
            scale: self.l2_norm_squared().sqrt().recip(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalizedEigenfunction {
    pub solution: CircleSolution,
    pub scale: f64,
}

impl NormalizedEigenfunction {
    pub fn value(&self, r: f64, side: Side) -> Result<f64> {
        Ok(self.scale * self.solution.eigenfunction(r, side)?)
    }
}

/// Value of the ground state away from the circle; `r == R` is ambiguous.
pub fn eigenfunction_circle(sol: &CircleSolution, r: f64) -> Result<f64> {
    let big_r = sol.problem.radius;
    if r < big_r {
        sol.eigenfunction(r, Side::Inside)
    } else if r > big_r {
        sol.eigenfunction(r, Side::Outside)
    } else {
        Err(Error::Domain {
            what: "eigenfunction_circle",
            value: r,
            expected: "r != R (use CircleSolution::eigenfunction with a side)",
        })
    }
}

/// `(|psi'(R-) - psi'(R+)|, |psi'(R-) - omega (psi(R-) - psi(R+))|)`.
pub fn transmission_defect(sol: &CircleSolution) -> (f64, f64) {
    transmission_defect_at(sol.k_star, &sol.problem)
}

/// Transmission defects of the radial ansatz for an arbitrary decay rate `k`.
pub fn transmission_defect_at(k: f64, problem: &CircleProblem) -> (f64, f64) {
    let x = k * problem.radius;
    // All products below are scale-free: the exponential factors cancel.
    let d_inside = k * k1e(x) * i1e(x);
    let d_outside = k * i1e(x) * k1e(x);
    let jump = k1e(x) * i0e(x) + i1e(x) * k0e(x);
    (
        (d_inside - d_outside).abs(),
        (d_inside - problem.omega * jump).abs(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special_functions::{bessel_i, bessel_k, BesselOrder};

    const GRID_R: [f64; 5] = [0.1, 0.5, 1.0, 2.0, 10.0];
    const GRID_OMEGA: [f64; 3] = [0.25, 1.0, 4.0];

    fn grid() -> impl Iterator<Item = CircleProblem> {
        GRID_R
            .iter()
            .flat_map(|&r| GRID_OMEGA.iter().map(move |&w| CircleProblem::new(r, w).unwrap()))
    }

    /// Independent oracle: plain bisection on the unscaled Bessel products.
    fn bisection_oracle(problem: &CircleProblem) -> f64 {
        let g = |k: f64| {
            let x = k * problem.radius;
            k * k * problem.radius
                * bessel_i(BesselOrder::One, x).unwrap()
                * bessel_k(BesselOrder::One, x).unwrap()
                - problem.omega
        };
        let (mut lo, mut hi) = (1e-6, 100.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if g(mid) < 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn profile_f_values_and_limits() {
        // 40-digit reference: F(2) = 0.44495165264741926
        assert!((profile_f(2.0).unwrap() - 0.444_951_652_647_419_26).abs() < 1e-15);
        let direct = 2.0
            * bessel_i(BesselOrder::One, 2.0).unwrap()
            * bessel_k(BesselOrder::One, 2.0).unwrap();
        assert!((profile_f(2.0).unwrap() - direct).abs() < 1e-15);
        assert!(profile_f(1e-8).unwrap() < 1e-7);
        assert!((profile_f(1e6).unwrap() - 0.5).abs() < 1e-6);
        assert!(profile_f(0.0).is_err());
        let xs: Vec<f64> = (1..2000).map(|j| 0.01 * j as f64).collect();
        for w in xs.windows(2) {
            let (a, b) = (profile_f(w[0]).unwrap(), profile_f(w[1]).unwrap());
            assert!(a < b && b < 0.5 && a > 0.0);
        }
    }

    #[test]
    fn secular_residual_examples() {
        let p = CircleProblem::new(1.0, 1.0).unwrap();
        assert!((secular_residual(1e-9, &p).unwrap() + 1.0).abs() < 1e-8);
        assert!(secular_residual(2.0, &p).unwrap() < 0.0);
        assert!(secular_residual(2.2, &p).unwrap().abs() < 1e-2);
        assert!(secular_residual(0.0, &p).is_err());
        assert!(secular_residual(-1.0, &p).is_err());
    }

    #[test]
    fn unit_circle_matches_reference() {
        // 40-digit reference: k* = 2.2007700305941215, lambda1 = -4.84338872756125
        let sol = solve_k_star(&CircleProblem::new(1.0, 1.0).unwrap(), 1e-13).unwrap();
        assert!((sol.k_star - 2.200_770_030_594_121_5).abs() < 1e-12);
        assert!((sol.lambda1 + 4.843_388_727_561_25).abs() < 1e-11);
        assert!((sol.k_star - bisection_oracle(&sol.problem)).abs() < 1e-12);
        assert_eq!(sol.lambda1, -sol.k_star * sol.k_star);
        assert!(sol.residual.abs() <= 1e-13);
    }

    #[test]
    fn grid_matches_bisection_oracle_and_bounds() {
        for p in grid() {
            let sol = solve_k_star(&p, 1e-12 * p.omega).unwrap();
            let oracle = bisection_oracle(&p);
            assert!((sol.k_star - oracle).abs() <= 1e-10 * oracle, "{p:?}");
            let (lo, hi) = p.k_bounds();
            assert!(lo < sol.k_star && sol.k_star < hi, "{p:?}");
            assert!(sol.lambda1 < -4.0 * p.omega * p.omega);
            assert!(sol.lambda1 <= -2.0 * p.omega / p.radius);
        }
    }

    #[test]
    fn residual_monotone_with_single_sign_change() {
        for p in grid() {
            let (lo, hi) = p.k_bounds();
            let values: Vec<f64> = (0..100)
                .map(|j| lo + (hi - lo) * j as f64 / 99.0)
                .map(|k| secular_residual(k, &p).unwrap())
                .collect();
            assert!(values.windows(2).all(|w| w[1] > w[0]), "{p:?}");
            let changes = values.windows(2).filter(|w| w[0].signum() != w[1].signum()).count();
            assert_eq!(changes, 1, "{p:?}");
        }
    }

    #[test]
    fn scaling_identity() {
        for p in grid() {
            let a = solve_k_star(&p, 1e-13 * p.omega).unwrap().k_star;
            let scaled = CircleProblem::new(p.omega * p.radius, 1.0).unwrap();
            let b = solve_k_star(&scaled, 1e-13).unwrap().k_star;
            assert!((a - p.omega * b).abs() <= 1e-10 * a, "{p:?}");
        }
    }

    #[test]
    fn large_radius_limit() {
        let sol = solve_k_star(&CircleProblem::new(1e6, 1.0).unwrap(), 1e-12).unwrap();
        assert!((sol.lambda1 + 4.0).abs() < 1e-3);
        let sol = solve_k_star(&CircleProblem::new(1e4, 1.0).unwrap(), 1e-12).unwrap();
        // 40-digit reference: k* = 2.000000001875
        assert!((sol.k_star - 2.000_000_001_875).abs() < 1e-11);
    }

    #[test]
    fn eigenfunction_examples() {
        let sol = solve_k_star(&CircleProblem::new(1.0, 1.0).unwrap(), 1e-13).unwrap();
        let at_origin = sol.eigenfunction(0.0, Side::Inside).unwrap();
        assert!((at_origin - sol.coeff_inside).abs() < 1e-15);
        assert!(at_origin > 0.0);
        assert!(eigenfunction_circle(&sol, 30.0).unwrap().abs() < 1e-25);
        let jump = sol.eigenfunction(1.0, Side::Inside).unwrap()
            - sol.eigenfunction(1.0, Side::Outside).unwrap();
        assert!((jump - 1.0 / sol.k_star).abs() < 1e-14);
        assert!(eigenfunction_circle(&sol, 1.0).is_err());
        assert!(sol.eigenfunction(1.5, Side::Inside).is_err());
        assert!(sol.eigenfunction(0.5, Side::Outside).is_err());
    }

    #[test]
    fn transmission_defects_vanish_only_at_root() {
        let sol = solve_k_star(&CircleProblem::new(1.0, 1.0).unwrap(), 1e-13).unwrap();
        let (d1, d2) = transmission_defect(&sol);
        let scale = sol.eigenfunction_derivative(1.0, Side::Inside).unwrap().abs();
        assert_eq!(d1, 0.0);
        assert!(d2 <= 1e-10 * scale);
        let (_, perturbed) = transmission_defect_at(1.1 * sol.k_star, &sol.problem);
        assert!(perturbed > 1e-3);
    }

    #[test]
    fn radial_equation_residual_by_finite_differences() {
        let sol = solve_k_star(&CircleProblem::new(1.0, 1.0).unwrap(), 1e-13).unwrap();
        let k2 = sol.k_star * sol.k_star;
        let h = 1e-4;
        let check = |r: f64, side: Side| {
            let u = |s: f64| sol.eigenfunction(s, side).unwrap();
            // -(r u')'/r = -u'' - u'/r
            let d2 = (u(r + h) - 2.0 * u(r) + u(r - h)) / (h * h);
            let d1 = (u(r + h) - u(r - h)) / (2.0 * h);
            let lhs = -d2 - d1 / r;
            (lhs + k2 * u(r)).abs()
        };
        for j in 0..100 {
            let inside = 0.05 + 0.9 * j as f64 / 99.0;
            let outside = 1.05 + 4.0 * j as f64 / 99.0;
            assert!(check(inside, Side::Inside) <= 1e-5, "r = {inside}");
            assert!(check(outside, Side::Outside) <= 1e-5, "r = {outside}");
        }
    }

    #[test]
    fn norm_matches_closed_form() {
        // int_0^R r I0(kr)^2 = R^2/2 (I0^2 - I1^2), int_R^inf r K0(kr)^2 = R^2/2 (K1^2 - K0^2)
        let sol = solve_k_star(&CircleProblem::new(1.0, 1.0).unwrap(), 1e-13).unwrap();
        let x = sol.k_star;
        let (i0, i1) = (
            bessel_i(BesselOrder::Zero, x).unwrap(),
            bessel_i(BesselOrder::One, x).unwrap(),
        );
        let (k0, k1) = (
            bessel_k(BesselOrder::Zero, x).unwrap(),
            bessel_k(BesselOrder::One, x).unwrap(),
        );
        let exact = 2.0 * PI * 0.5 * (k1 * k1 * (i0 * i0 - i1 * i1) + i1 * i1 * (k1 * k1 - k0 * k0));
        let got = sol.l2_norm_squared();
        assert!(((got - exact) / exact).abs() < 1e-10);
        let n = sol.normalized();
        assert!((n.scale * n.scale * got - 1.0).abs() < 1e-14);
    }

    #[test]
    fn sweep_is_monotone() {
        let radii: Vec<f64> = (1..=1000).map(|j| 0.1 * j as f64).collect();
        let sols = sweep_radius(1.0, &radii, 1e-12).unwrap();
        for w in sols.windows(2) {
            assert!(w[1].lambda1 > w[0].lambda1);
            assert!(w[1].k_star < w[0].k_star);
        }
        let two = sweep_radius(1.0, &[1.0, 2.0], 1e-12).unwrap();
        // 40-digit reference: lambda1(R = 2) = -4.199492727974589
        assert!((two[1].lambda1 + 4.199_492_727_974_589).abs() < 1e-10);
        assert!(sweep_radius(1.0, &[2.0, 1.0], 1e-12).is_err());
        assert!(sweep_radius(1.0, &[-1.0, 1.0], 1e-12).is_err());
    }

    #[test]
    fn record_serializes_with_expected_keys() {
        let sol = solve_k_star(&CircleProblem::new(1.0, 1.0).unwrap(), 1e-12).unwrap();
        let json = serde_json::to_value(CircleRecord::from(&sol)).unwrap();
        for key in ["R", "omega", "k_star", "lambda1", "residual"] {
            assert!(json.get(key).is_some(), "{key}");
        }
    }
}

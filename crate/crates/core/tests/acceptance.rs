//! End-to-end acceptance checks, one line of output per criterion.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use deltaprime::circle::{profile_f, secular_residual, solve_k_star, CircleProblem, CircleSolution};
use deltaprime::fem::{richardson_error, solve_lambda1};
use deltaprime::geometry::{
    distance_profiles, make_circle, make_ellipse_by_perimeter, make_perturbed_circle, Contour, ProfileSide,
};
use deltaprime::parallel_bound::{circle_quotient, domain_quotient, optimal_profile_for, theorem_certificate};
use deltaprime::special_functions::wronskian_defect;

const RADII: [f64; 5] = [0.1, 0.5, 1.0, 2.0, 10.0];
const OMEGAS: [f64; 3] = [0.25, 1.0, 4.0];

struct Outcome {
    passed: bool,
    detail: String,
}

type Criterion = (&'static str, fn() -> Outcome);

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        passed,
        detail: detail.into(),
    }
}

fn solve(radius: f64, omega: f64) -> CircleSolution {
    solve_k_star(&CircleProblem::new(radius, omega).unwrap(), 1e-13 * omega).unwrap()
}

fn grid() -> impl Iterator<Item = (f64, f64)> {
    RADII.into_iter().flat_map(|r| OMEGAS.into_iter().map(move |w| (r, w)))
}

fn secular_exactness() -> Outcome {
    let start = Instant::now();
    let mut worst: f64 = 0.0;
    for (r, w) in grid() {
        let sol = solve(r, w);
        let p = CircleProblem::new(r, w).unwrap();
        worst = worst.max(secular_residual(sol.k_star, &p).unwrap().abs() / w);
    }
    let elapsed = start.elapsed();
    outcome(
        worst <= 1e-10 && elapsed < Duration::from_secs(1),
        format!("max |residual|/omega = {worst:.2e} (<= 1e-10), runtime {elapsed:.2?} (< 1 s)"),
    )
}

fn bracket_bounds() -> Outcome {
    let mut ok = true;
    let mut tightest = f64::INFINITY;
    for (r, w) in grid() {
        let k = solve(r, w).k_star;
        let upper = w / profile_f(2.0 * w * r).unwrap();
        ok &= 2.0 * w < k && k < upper;
        tightest = tightest.min((k - 2.0 * w).min(upper - k) / k);
    }
    outcome(ok, format!("2 omega < k < omega / F(2 omega R) on all 15 points, min relative gap {tightest:.2e}"))
}

fn large_radius_limit() -> Outcome {
    let lambda = solve(1e4, 1.0).lambda1;
    let radii: Vec<f64> = (1..=1000).map(|j| 0.1 * j as f64).collect();
    let lambdas: Vec<f64> = radii.iter().map(|&r| solve(r, 1.0).lambda1).collect();
    let monotone = lambdas.windows(2).all(|w| w[1] > w[0]);
    let gap = (lambda + 4.0).abs();
    outcome(
        gap <= 1e-3 && monotone,
        format!("|lambda1(R = 1e4) + 4| = {gap:.2e} (<= 1e-3), strictly increasing on R = 0.1..100: {monotone}"),
    )
}

fn small_radius_bound() -> Outcome {
    let mut ok = true;
    let mut closest = f64::NEG_INFINITY;
    for (r, w) in grid() {
        let lambda = solve(r, w).lambda1;
        let bound = -2.0 * w / r;
        ok &= lambda <= bound;
        closest = closest.max(lambda - bound);
    }
    outcome(ok, format!("lambda1 <= -2 omega / R on the grid, max(lambda1 + 2 omega / R) = {closest:.3e}"))
}

fn scaling_identity() -> Outcome {
    let mut worst: f64 = 0.0;
    for (r, w) in grid() {
        let k = solve(r, w).k_star;
        let scaled = w * solve(w * r, 1.0).k_star;
        worst = worst.max((k - scaled).abs() / k);
    }
    outcome(worst <= 1e-10, format!("max |k(R, w) - w k(wR, 1)| / k = {worst:.2e} (<= 1e-10)"))
}

fn wronskian_identity() -> Outcome {
    let (lo, hi): (f64, f64) = (1e-3, 600.0);
    let worst = (0..1000)
        .map(|j| {
            let x = lo * (hi / lo).powf(j as f64 / 999.0);
            (wronskian_defect(x).unwrap() * x).abs()
        })
        .fold(0.0, f64::max);
    outcome(worst <= 1e-11, format!("max x |I0 K1 + I1 K0 - 1/x| over 1000 points = {worst:.2e} (<= 1e-11)"))
}

fn parallel_bound_consistency() -> Outcome {
    let start = Instant::now();
    let mut circle_worst: f64 = 0.0;
    for (r, w) in grid() {
        let sol = solve(r, w);
        let profile = optimal_profile_for(&sol, None).unwrap();
        let q = circle_quotient(&profile, 2.0 * PI * r, w).unwrap().quotient;
        circle_worst = circle_worst.max((q - sol.lambda1).abs() / sol.lambda1.abs());
    }
    let mut domain_worst: f64 = 0.0;
    for (r, w) in [(1.0, 1.0), (2.0, 0.25), (0.5, 4.0)] {
        let sol = solve(r, w);
        let profile = optimal_profile_for(&sol, None).unwrap();
        let circle = circle_quotient(&profile, 2.0 * PI * r, w).unwrap().quotient;
        let domain = domain_quotient(&profile, &make_circle(r).unwrap(), w).unwrap().quotient;
        domain_worst = domain_worst.max((domain - circle).abs() / circle.abs());
    }
    let elapsed = start.elapsed();
    outcome(
        circle_worst <= 1e-6 && domain_worst <= 1e-4 && elapsed < Duration::from_secs(10),
        format!(
            "circle quotient vs lambda1 {circle_worst:.2e} (<= 1e-6), domain vs circle quotient {domain_worst:.2e} \
             (<= 1e-4), runtime {elapsed:.2?} (< 10 s)"
        ),
    )
}

fn inequality_chain() -> Outcome {
    let length = 2.0 * PI;
    let mut family: Vec<(String, Contour, bool)> = [1.2, 1.5, 2.0, 3.0]
        .into_iter()
        .map(|a| (format!("ellipse {a}"), make_ellipse_by_perimeter(length, a).unwrap(), a >= 1.5))
        .collect();
    for m in [2, 3, 4] {
        family.push((format!("perturbed m={m}"), make_perturbed_circle(length, m, 0.1).unwrap(), false));
    }
    let mut ok = true;
    let mut notes = Vec::new();
    for (label, contour, needs_margin) in &family {
        let cert = theorem_certificate(contour, 1.0).unwrap();
        let coarse = solve_lambda1(contour, 1.0, 0.04, 6.0, 1e-10).unwrap().lambda1;
        let fine = solve_lambda1(contour, 1.0, 0.02, 6.0, 1e-10).unwrap().lambda1;
        let estimate = richardson_error(coarse, fine, 2.0, 2.0);
        let fem_below_bound = fine <= cert.domain_bound + 5e-3;
        let bound_below_circle = cert.domain_bound <= cert.lambda1_circle + 1e-4;
        let margin = cert.lambda1_circle - fine;
        let margin_ok = !needs_margin || margin > 3.0 * estimate;
        ok &= fem_below_bound && bound_below_circle && margin_ok;
        notes.push(format!(
            "{label}: fem {fine:.5} <= bound {:.5} <= circle {:.5}, margin {margin:.2e} vs 3 x est {:.2e}{}",
            cert.domain_bound,
            cert.lambda1_circle,
            3.0 * estimate,
            if fem_below_bound && bound_below_circle && margin_ok { "" } else { " FAILED" }
        ));
    }
    outcome(ok, format!("7 contours, L = 2 pi, omega = 1\n      {}", notes.join("\n      ")))
}

fn fem_validation() -> Outcome {
    let start = Instant::now();
    let circle = make_circle(1.0).unwrap();
    let exact = solve(1.0, 1.0).lambda1;
    let coarse = solve_lambda1(&circle, 1.0, 0.04, 6.0, 1e-10).unwrap().lambda1;
    let fine = solve_lambda1(&circle, 1.0, 0.02, 6.0, 1e-10).unwrap().lambda1;
    let wide = solve_lambda1(&circle, 1.0, 0.04, 9.0, 1e-10).unwrap().lambda1;
    let rel = (coarse - exact).abs() / exact.abs();
    let ratio = (coarse - exact).abs() / (fine - exact).abs();
    let change = (wide - coarse).abs();
    let elapsed = start.elapsed();
    outcome(
        rel <= 0.02 && (2.5..=5.0).contains(&ratio) && change <= 1e-5 && elapsed <= Duration::from_secs(300),
        format!(
            "relative error {rel:.2e} (<= 2%), halving ratio {ratio:.2} (in [2.5, 5]), R_out 6 -> 9 change {change:.2e} \
             (<= 1e-5), runtime {elapsed:.2?}"
        ),
    )
}

fn geometry_properties() -> Outcome {
    let length = 2.0 * PI;
    let mut contours: Vec<(Contour, bool)> = [0.3, 1.0, 2.5].into_iter().map(|r| (make_circle(r).unwrap(), true)).collect();
    for a in [1.2, 1.5, 2.0, 3.0] {
        contours.push((make_ellipse_by_perimeter(length, a).unwrap(), false));
    }
    for m in [2, 3, 4] {
        contours.push((make_perturbed_circle(length, m, 0.1).unwrap(), false));
    }
    let mut ok = true;
    let mut worst_defect = f64::NEG_INFINITY;
    let mut circle_defect: f64 = 0.0;
    let mut circle_profile: f64 = 0.0;
    let mut other_violation = f64::NEG_INFINITY;
    for (c, is_circle) in &contours {
        let l2 = c.length() * c.length();
        let defect = c.isoperimetric_defect() / l2;
        worst_defect = worst_defect.max(-defect);
        ok &= defect >= -1e-8;
        for side in [ProfileSide::Inner, ProfileSide::Outer] {
            let table = distance_profiles(c, side, Some(c.length() / PI), 512).unwrap();
            let violation = table.bound_violation();
            if *is_circle {
                let equality = table
                    .t
                    .iter()
                    .zip(&table.length)
                    .map(|(&t, &l)| (l - table.circle_bound(t)).abs())
                    .fold(0.0, f64::max);
                circle_profile = circle_profile.max(equality);
            } else {
                other_violation = other_violation.max(violation / c.length());
            }
        }
        if *is_circle {
            circle_defect = circle_defect.max(defect.abs());
        }
    }
    ok &= circle_defect <= 1e-8 && circle_profile <= 1e-6 && other_violation <= 1e-5;
    outcome(
        ok,
        format!(
            "min (L^2 - 4 pi A)/L^2 = {:.2e} (>= -1e-8), circles {circle_defect:.2e} (<= 1e-8); level-length \
             equality on circles {circle_profile:.2e} (<= 1e-6), max violation / L elsewhere {other_violation:.2e} \
             (<= 1e-5 quadrature tolerance)",
            -worst_defect
        ),
    )
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("secular-equation exactness", secular_exactness),
        ("bracket bounds", bracket_bounds),
        ("large-R limit and monotonicity", large_radius_limit),
        ("small-R bound", small_radius_bound),
        ("scaling identity", scaling_identity),
        ("Wronskian identity", wronskian_identity),
        ("parallel-bound consistency", parallel_bound_consistency),
        ("inequality chain", inequality_chain),
        ("FEM validation", fem_validation),
        ("geometry properties", geometry_properties),
    ];
    let mut failures = 0;
    for (index, (name, check)) in criteria.iter().enumerate() {
        let result = check();
        let status = if result.passed { "PASS" } else { "FAIL" };
        println!("criterion {:>2} [{status}] {name}: {}", index + 1, result.detail);
        if !result.passed {
            failures += 1;
        }
    }
    println!("acceptance: {} passed, {failures} failed", criteria.len() - failures);
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

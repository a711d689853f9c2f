use std::fmt::Write as _;
use std::path::Path;

use deltaprime::circle::{profile_f, solve_k_star, sweep_radius, transmission_defect, CircleProblem, CircleRecord};
use deltaprime::fem::{convergence_study, run, OuterBoundary};
use deltaprime::geometry::{distance_profiles, Contour, ContourSpec, ProfileSide};
use deltaprime::parallel_bound::{compare_quotients, theorem_certificate_with, QuotientOrdering};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::config::{positive, CommandName, ConfigError, Settings};

/// Report of one command: both renderings plus any failed assertions.
pub struct Report {
    pub json: Value,
    pub csv: String,
    pub failures: Vec<String>,
}

pub enum RunError {
    Config(ConfigError),
    Numeric(deltaprime::Error),
}

impl From<ConfigError> for RunError {
    fn from(e: ConfigError) -> Self {
        RunError::Config(e)
    }
}

impl From<deltaprime::Error> for RunError {
    fn from(e: deltaprime::Error) -> Self {
        match e {
            deltaprime::Error::Parameter { .. } => RunError::Config(ConfigError(e.to_string())),
            other => RunError::Numeric(other),
        }
    }
}

type Outcome = Result<Report, RunError>;

pub fn execute(settings: &Settings) -> Outcome {
    match settings.command.unwrap_or(CommandName::Circle) {
        CommandName::Circle => circle(settings),
        CommandName::Sweep => sweep(settings),
        CommandName::Bound => bound(settings),
        CommandName::Fem => fem(settings),
        CommandName::VerifyTheorem => verify_theorem(settings),
    }
}

fn header(command: CommandName) -> serde_json::Map<String, Value> {
    let mut map = serde_json::Map::new();
    map.insert("schema".into(), json!(1));
    map.insert("command".into(), json!(command.to_string()));
    map
}

/// Shortest round-trip form, switching to exponent notation for very small
/// or very large magnitudes.
fn num(x: f64) -> String {
    let a = x.abs();
    if a == 0.0 || (1e-4..1e15).contains(&a) {
        x.to_string()
    } else {
        format!("{x:e}")
    }
}

fn join(values: &[f64]) -> String {
    values.iter().map(|&v| num(v)).collect::<Vec<_>>().join(",")
}

fn opt(value: Option<f64>) -> String {
    value.map(num).unwrap_or_default()
}

fn write_file(path: &Path, contents: &str) -> Result<(), ConfigError> {
    std::fs::write(path, contents).map_err(|e| ConfigError(format!("cannot write {}: {e}", path.display())))
}

fn build(spec: &ContourSpec) -> Result<Contour, RunError> {
    spec.build().map_err(|e| match e {
        deltaprime::Error::Parameter { .. } | deltaprime::Error::Domain { .. } => {
            RunError::Config(ConfigError(format!("invalid contour {}: {e}", spec.label())))
        }
        other => RunError::Numeric(other),
    })
}

fn circle(s: &Settings) -> Outcome {
    let radius = positive("R", s.radius.unwrap_or(1.0))?;
    let omega = s.omega()?;
    let tol = positive("tol", s.tol.unwrap_or(1e-12 * omega))?;
    let problem = CircleProblem::new(radius, omega)?;
    let solution = solve_k_star(&problem, tol)?;
    let k = solution.k_star;
    let (lower, _) = problem.k_bounds();
    let upper = omega / profile_f(2.0 * omega * radius)?;
    let small = -2.0 * omega / radius;
    let (d_derivative, d_jump) = transmission_defect(&solution);

    let mut failures = Vec::new();
    // For large omega R the bracket is narrower than the root tolerance.
    let bracket = lower - tol < k && k < upper + tol;
    if !bracket {
        failures.push(format!("k* = {k} outside the bracket ({lower}, {upper}) by more than {tol}"));
    }
    let below = solution.lambda1 <= small;
    if !below {
        failures.push(format!("lambda1 = {} above -2 omega / R = {small}", solution.lambda1));
    }

    let mut json = header(CommandName::Circle);
    json.insert("solution".into(), json!(CircleRecord::from(&solution)));
    json.insert(
        "bracket".into(),
        json!({ "k_lower": lower, "k_upper": upper, "tolerance": tol, "holds": bracket }),
    );
    json.insert("small_radius_bound".into(), json!({ "value": small, "holds": below }));
    json.insert(
        "transmission_defect".into(),
        json!({ "derivative": d_derivative, "jump": d_jump }),
    );
    let row = [radius, omega, k, solution.lambda1, solution.residual, lower, upper, small, d_derivative, d_jump];
    let csv = format!(
        "R,omega,k_star,lambda1,residual,k_lower,k_upper,small_radius_bound,defect_derivative,defect_jump\n{}\n",
        join(&row)
    );
    Ok(Report {
        json: Value::Object(json),
        csv,
        failures,
    })
}

fn sweep(s: &Settings) -> Outcome {
    let omega = s.omega()?;
    let r_min = positive("r-min", s.r_min.unwrap_or(0.1))?;
    let r_max = positive("r-max", s.r_max.unwrap_or(100.0))?;
    let r_step = positive("r-step", s.r_step.unwrap_or(0.1))?;
    let tol = positive("tol", s.tol.unwrap_or(1e-12 * omega))?;
    if r_max < r_min {
        return Err(ConfigError(format!("r-max {r_max} is below r-min {r_min}")).into());
    }
    let steps = ((r_max - r_min) / r_step + 1e-9).floor() as usize;
    if steps > 10_000_000 {
        return Err(ConfigError(format!("{steps} sweep points requested")).into());
    }
    let radii: Vec<f64> = (0..=steps).map(|j| r_min + j as f64 * r_step).collect();
    let records: Vec<CircleRecord> = sweep_radius(omega, &radii, tol)?.iter().map(CircleRecord::from).collect();

    let increasing = records.windows(2).all(|w| w[1].lambda1 > w[0].lambda1);
    let mut failures = Vec::new();
    if !increasing {
        let j = records.windows(2).position(|w| w[1].lambda1 <= w[0].lambda1).unwrap_or(0);
        failures.push(format!(
            "lambda1 not strictly increasing between R = {} and R = {}",
            records[j].radius,
            records[j + 1].radius
        ));
    }
    let mut csv = String::from("R,omega,k_star,lambda1,residual\n");
    for r in &records {
        writeln!(csv, "{}", join(&[r.radius, r.omega, r.k_star, r.lambda1, r.residual])).unwrap();
    }
    let mut json = header(CommandName::Sweep);
    json.insert("omega".into(), json!(omega));
    json.insert("strictly_increasing".into(), json!(increasing));
    json.insert("rows".into(), json!(records));
    Ok(Report {
        json: Value::Object(json),
        csv,
        failures,
    })
}

fn ordering_label(ordering: &QuotientOrdering) -> &'static str {
    match ordering {
        QuotientOrdering::Holds { .. } => "holds",
        QuotientOrdering::Violated { .. } => "violated",
        QuotientOrdering::Vacuous { .. } => "vacuous",
    }
}

fn bound(s: &Settings) -> Outcome {
    let omega = s.omega()?;
    let spec = s.contour_spec()?;
    let horizon = s.horizon.map(|t| positive("horizon", t)).transpose()?;
    let grid = s.grid.unwrap_or(512);
    if grid < 2 {
        return Err(ConfigError(format!("`grid` must be at least 2, got {grid}")).into());
    }
    let contour = build(&spec)?;
    let cert = theorem_certificate_with(&contour, omega, horizon)?;
    let ordering = compare_quotients(&cert.circle, &cert.domain, 1e-6);

    let inner = distance_profiles(&contour, ProfileSide::Inner, None, grid)?;
    let outer = distance_profiles(&contour, ProfileSide::Outer, Some(cert.horizon), grid)?;
    if let Some(path) = &s.profiles_out {
        let mut csv = String::from("side,t,A,L\n");
        for (name, table) in [("inner", &inner), ("outer", &outer)] {
            for ((t, a), l) in table.t.iter().zip(&table.area).zip(&table.length) {
                writeln!(csv, "{name},{}", join(&[*t, *a, *l])).unwrap();
            }
        }
        write_file(path, &csv)?;
    }

    let mut failures = Vec::new();
    if let QuotientOrdering::Violated { excess } = ordering {
        failures.push(format!("domain quotient exceeds the circle quotient by {excess}"));
    }
    let mut json = header(CommandName::Bound);
    json.insert("contour".into(), json!(spec));
    json.insert("label".into(), json!(spec.label()));
    json.insert("certificate".into(), json!(cert));
    json.insert("ordering".into(), json!(ordering));
    json.insert(
        "level_length_excess".into(),
        json!({
            "inner": inner.bound_violation() / cert.length,
            "outer": outer.bound_violation() / cert.length,
        }),
    );
    let values = [
        cert.length,
        cert.omega,
        cert.k_star,
        cert.horizon,
        cert.lambda1_circle,
        cert.domain_bound,
        cert.margin,
        cert.circle.quotient,
        cert.domain.numerator_gradient,
        cert.domain.numerator_jump,
        cert.domain.denominator,
    ];
    let csv = format!(
        "contour,length,omega,k_star,horizon,lambda1_circle,domain_bound,margin,circle_quotient,\
         domain_gradient,domain_jump,domain_denominator,ordering\n{},{},{}\n",
        csv_label(&spec),
        join(&values),
        ordering_label(&ordering)
    );
    Ok(Report {
        json: Value::Object(json),
        csv,
        failures,
    })
}

fn csv_label(spec: &ContourSpec) -> String {
    format!("\"{}\"", spec.label())
}

fn fem(s: &Settings) -> Outcome {
    let omega = s.omega()?;
    let spec = s.contour_spec()?;
    let tol = positive("tol", s.tol.unwrap_or(1e-10))?;
    let default_r_out = 6.0 * spec.length() / (2.0 * std::f64::consts::PI);
    let contour = build(&spec)?;
    let mut json = header(CommandName::Fem);
    json.insert("contour".into(), json!(spec));
    json.insert("label".into(), json!(spec.label()));

    let rows = if s.h_list.is_some() || s.r_out_list.is_some() {
        let h_list = s.h_list.clone().unwrap_or_else(|| vec![s.h.unwrap_or(0.04)]);
        let r_out_list = s.r_out_list.clone().unwrap_or_else(|| vec![s.r_out.unwrap_or(default_r_out)]);
        for &v in &h_list {
            positive("h-list", v)?;
        }
        for &v in &r_out_list {
            positive("r-out-list", v)?;
        }
        let rows = convergence_study(&contour, omega, &h_list, &r_out_list, tol)?;
        json.insert("convergence".into(), json!(rows));
        rows.iter()
            .map(|r| (r.h, r.r_out, r.lambda1, r.nodes, r.error, r.order))
            .collect::<Vec<_>>()
    } else {
        let h = positive("h", s.h.unwrap_or(0.04))?;
        let r_out = positive("r-out", s.r_out.unwrap_or(default_r_out))?;
        let fem_run = run(&contour, omega, h, r_out, tol, OuterBoundary::Dirichlet)?;
        if let Some(path) = &s.mesh_out {
            write_file(path, &fem_run.mesh.to_text())?;
        }
        if let Some(path) = &s.eigen_out {
            write_file(path, &fem_run.eigenpair_csv())?;
        }
        let solution = fem_run.solution();
        let error = if matches!(spec, ContourSpec::Circle { .. }) {
            let exact = solve_k_star(&CircleProblem::with_length(spec.length(), omega)?, 1e-13 * omega)?.lambda1;
            json.insert("exact_lambda1".into(), json!(exact));
            Some((solution.lambda1 - exact).abs())
        } else {
            None
        };
        json.insert("solution".into(), json!(solution));
        vec![(h, r_out, solution.lambda1, solution.mesh.nodes, error, None)]
    };

    let mut csv = String::from("contour,h,r_out,lambda1,nodes,error,order\n");
    for (h, r_out, lambda1, nodes, error, order) in rows {
        writeln!(
            csv,
            "{},{},{nodes},{},{}",
            csv_label(&spec),
            join(&[h, r_out, lambda1]),
            opt(error),
            opt(order)
        )
        .unwrap();
    }
    Ok(Report {
        json: Value::Object(json),
        csv,
        failures: Vec::new(),
    })
}

fn verify_theorem(s: &Settings) -> Outcome {
    let omega = s.omega()?;
    let family = s.family()?;
    let h = positive("h", s.h.unwrap_or(0.04))?;
    let assert_tol = positive("assert-tol", s.assert_tol.unwrap_or(1e-4))?;
    let fem_slack = positive("fem-slack", s.fem_slack.unwrap_or(5e-3))?;
    let r_out = s.r_out.map(|r| positive("r-out", r)).transpose()?;

    let mut rows = Vec::new();
    let mut failures = Vec::new();
    let mut csv = String::from("contour,lambda1_fem,domain_bound,lambda1_circle,margin,passed\n");
    let solved: Vec<_> = family
        .par_iter()
        .map(|spec| -> Result<_, RunError> {
            let contour = build(spec)?;
            let r_out = r_out.unwrap_or(6.0 * spec.length() / (2.0 * std::f64::consts::PI));
            let cert = theorem_certificate_with(&contour, omega, None)?;
            let fem = run(&contour, omega, h, r_out, 1e-10, OuterBoundary::Dirichlet)?.solution();
            Ok((cert, fem))
        })
        .collect::<Result<_, _>>()?;
    for (spec, (cert, fem)) in family.iter().zip(solved) {
        let fem_below_bound = fem.lambda1 <= cert.domain_bound + fem_slack;
        let bound_below_circle = cert.domain_bound <= cert.lambda1_circle + assert_tol;
        let passed = fem_below_bound && bound_below_circle;
        if !fem_below_bound {
            failures.push(format!(
                "{}: FEM lambda1 {} exceeds the bound {} by more than {fem_slack}",
                spec.label(),
                fem.lambda1,
                cert.domain_bound
            ));
        }
        if !bound_below_circle {
            failures.push(format!(
                "{}: bound {} exceeds the circle value {} by more than {assert_tol}",
                spec.label(),
                cert.domain_bound,
                cert.lambda1_circle
            ));
        }
        writeln!(
            csv,
            "{},{},{passed}",
            csv_label(spec),
            join(&[fem.lambda1, cert.domain_bound, cert.lambda1_circle, cert.margin])
        )
        .unwrap();
        rows.push(json!({
            "contour": spec,
            "label": spec.label(),
            "lambda1_fem": fem.lambda1,
            "domain_bound": cert.domain_bound,
            "lambda1_circle": cert.lambda1_circle,
            "margin": cert.margin,
            "fem_below_bound": fem_below_bound,
            "bound_below_circle": bound_below_circle,
            "passed": passed,
            "fem": fem,
        }));
    }
    let mut json = header(CommandName::VerifyTheorem);
    json.insert("omega".into(), json!(omega));
    json.insert("h".into(), json!(h));
    json.insert("assert_tol".into(), json!(assert_tol));
    json.insert("fem_slack".into(), json!(fem_slack));
    json.insert("all_passed".into(), json!(failures.is_empty()));
    json.insert("rows".into(), json!(rows));
    Ok(Report {
        json: Value::Object(json),
        csv,
        failures,
    })
}

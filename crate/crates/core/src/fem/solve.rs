use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::assemble::{assemble_with, DiscreteForm, OuterBoundary};
use super::eigen::{lowest_eigenpair, Eigenpair};
use super::mesh::{build_mesh, InterfaceMesh, MeshStats, Region};
use crate::circle::{solve_k_star, CircleProblem};
use crate::error::{Error, Result};
use crate::geometry::Contour;

/// Mesh, matrices and ground state of one finite-element solve.
#[derive(Debug, Clone)]
pub struct FemRun {
    pub mesh: InterfaceMesh,
    pub form: DiscreteForm,
    pub eigenpair: Eigenpair,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FemSolution {
    pub lambda1: f64,
    pub residual: f64,
    pub iterations: usize,
    pub shift: f64,
    pub omega: f64,
    pub h: f64,
    pub r_out: f64,
    pub mesh: MeshStats,
}

impl FemRun {
    pub fn solution(&self) -> FemSolution {
        FemSolution {
            lambda1: self.eigenpair.lambda,
            residual: self.eigenpair.residual,
            iterations: self.eigenpair.iterations,
            shift: self.eigenpair.shift,
            omega: self.form.omega,
            h: self.mesh.h,
            r_out: self.mesh.r_out,
            mesh: self.mesh.stats(),
        }
    }

    /// Nodal values of the ground state (zero on Dirichlet nodes).
    pub fn nodal_values(&self) -> Vec<f64> {
        self.form.extend(&self.eigenpair.vector)
    }

    /// CSV with header `x,y,side,value`, one row per mesh node; `side` is
    /// `inner`, `outer` or `boundary` (Dirichlet nodes).
    pub fn eigenpair_csv(&self) -> String {
        let mut side = vec!["outer"; self.mesh.nodes.len()];
        for (tri, region) in self.mesh.triangles.iter().zip(&self.mesh.regions) {
            if *region == Region::Inner {
                for &v in tri {
                    side[v] = "inner";
                }
            }
        }
        for (node, dof) in self.form.dof_of_node.iter().enumerate() {
            if dof.is_none() {
                side[node] = "boundary";
            }
        }
        let values = self.nodal_values();
        let mut out = String::from("x,y,side,value\n");
        for ((p, s), v) in self.mesh.nodes.iter().zip(&side).zip(&values) {
            writeln!(out, "{:.12e},{:.12e},{s},{v:.12e}", p[0], p[1]).unwrap();
        }
        out
    }
}

pub fn solve_lambda1(contour: &Contour, omega: f64, h: f64, r_out: f64, tol: f64) -> Result<FemSolution> {
    Ok(run(contour, omega, h, r_out, tol, OuterBoundary::Dirichlet)?.solution())
}

/// Mesh, assemble and solve.
pub fn run(
    contour: &Contour,
    omega: f64,
    h: f64,
    r_out: f64,
    tol: f64,
    boundary: OuterBoundary,
) -> Result<FemRun> {
    let mesh = build_mesh(contour, h, r_out)?;
    let form = assemble_with(&mesh, omega, boundary)?;
    let eigenpair = lowest_eigenpair(&form, tol)?;
    Ok(FemRun { mesh, form, eigenpair })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub h: f64,
    pub r_out: f64,
    pub lambda1: f64,
    pub nodes: usize,
    /// `|lambda1 - exact|` when the contour is a circle.
    pub error: Option<f64>,
    /// `log(e_prev / e) / log(h_prev / h)` against the previous, coarser row
    /// with the same `r_out`.
    pub order: Option<f64>,
}

/// Relative isoperimetric defect below which a contour counts as a circle.
const CIRCLE_DEFECT: f64 = 1e-10;

/// `lambda1` for every pair in `h_list x r_out_list`, ordered by `r_out`
/// then `h`. Errors and observed orders are reported for circles.
pub fn convergence_study(
    contour: &Contour,
    omega: f64,
    h_list: &[f64],
    r_out_list: &[f64],
    tol: f64,
) -> Result<Vec<ConvergenceRow>> {
    if h_list.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::Parameter {
            name: "h_list",
            value: h_list.first().copied().unwrap_or(f64::NAN),
            reason: "mesh sizes must be strictly decreasing",
        });
    }
    let length = contour.length();
    let exact = if contour.isoperimetric_defect() <= CIRCLE_DEFECT * length * length {
        Some(solve_k_star(&CircleProblem::with_length(length, omega)?, 1e-13 * omega)?.lambda1)
    } else {
        None
    };
    let mut rows = Vec::new();
    for &r_out in r_out_list {
        let mut previous: Option<(f64, f64)> = None;
        for &h in h_list {
            let solution = solve_lambda1(contour, omega, h, r_out, tol)?;
            let error = exact.map(|e| (solution.lambda1 - e).abs());
            let order = match (previous, error) {
                (Some((hp, ep)), Some(e)) if e > 0.0 => Some((ep / e).ln() / (hp / h).ln()),
                _ => None,
            };
            if let Some(e) = error {
                previous = Some((h, e));
            }
            rows.push(ConvergenceRow {
                h,
                r_out,
                lambda1: solution.lambda1,
                nodes: solution.mesh.nodes,
                error,
                order,
            });
        }
    }
    Ok(rows)
}

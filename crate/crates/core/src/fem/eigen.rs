use faer::linalg::solvers::Solve;
use faer::sparse::{SparseColMat, Triplet};
use faer::{Mat, Side};
use serde::{Deserialize, Serialize};

use super::assemble::{CsrMatrix, DiscreteForm};
use crate::circle::CircleProblem;
use crate::error::{ensure_positive, Error, Result};

/// Settings for [`lowest_eigenpair_with`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigenOptions {
    /// Bound on `||K x - lambda M x|| / ||M x||`.
    pub tol: f64,
    pub max_iterations: usize,
    /// First shift tried; defaults to [`default_shift`].
    pub initial_shift: Option<f64>,
}

impl Default for EigenOptions {
    fn default() -> Self {
        EigenOptions {
            tol: 1e-9,
            max_iterations: 500,
            initial_shift: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Eigenpair {
    pub lambda: f64,
    /// Coefficients with `x^T M x = 1`, signed so the largest entry is
    /// positive.
    pub vector: Vec<f64>,
    pub residual: f64,
    pub iterations: usize,
    /// Final shift. `K - shift M` was factored as positive definite, so every
    /// discrete eigenvalue lies above it.
    pub shift: f64,
    pub factorizations: usize,
}

/// `1.5 (-k_u^2)` with `k_u = omega / F(2 omega R)` the upper root bound of
/// the circle whose perimeter equals the interface polyline.
pub fn default_shift(form: &DiscreteForm) -> Result<f64> {
    let (_, k_upper) = CircleProblem::new(form.equivalent_radius, form.omega)?.k_bounds();
    Ok(-1.5 * k_upper * k_upper)
}

struct ShiftedSolver {
    shift: f64,
    llt: faer::sparse::linalg::solvers::Llt<usize, f64>,
}

fn factor(stiffness: &CsrMatrix, mass: &CsrMatrix, shift: f64) -> Result<Option<ShiftedSolver>> {
    let shifted = stiffness.add_scaled(mass, -shift);
    let n = shifted.dim();
    let lower: Vec<Triplet<usize, usize, f64>> = shifted
        .triplets()
        .filter(|&(i, j, _)| i >= j)
        .map(|(i, j, v)| Triplet::new(i, j, v))
        .collect();
    let matrix = SparseColMat::<usize, f64>::try_new_from_triplets(n, n, &lower)
        .map_err(|e| Error::Mesh(format!("sparse matrix construction failed: {e:?}")))?;
    // Sequential factorization keeps results bitwise reproducible.
    faer::set_global_parallelism(faer::Par::Seq);
    match matrix.sp_cholesky(Side::Lower) {
        Ok(llt) => Ok(Some(ShiftedSolver { shift, llt })),
        Err(faer::sparse::linalg::LltError::Numeric(_)) => Ok(None),
        Err(e) => Err(Error::Mesh(format!("sparse Cholesky failed: {e:?}"))),
    }
}

impl ShiftedSolver {
    fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let mut b = Mat::from_fn(rhs.len(), 1, |i, _| rhs[i]);
        self.llt.solve_in_place(b.as_mut());
        (0..rhs.len()).map(|i| b[(i, 0)]).collect()
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn lowest_eigenpair(form: &DiscreteForm, tol: f64) -> Result<Eigenpair> {
    lowest_eigenpair_with(form, EigenOptions { tol, ..EigenOptions::default() })
}

/// Smallest eigenpair of `K x = lambda M x` by shifted inverse iteration.
///
/// The shift is lowered until `K - shift M` admits a Cholesky factorization,
/// which certifies that it lies below the whole discrete spectrum; the
/// iteration then converges to the lowest eigenvalue. Once the estimate
/// settles, a shift closer to it is tried and kept only if it also factors.
pub fn lowest_eigenpair_with(form: &DiscreteForm, options: EigenOptions) -> Result<Eigenpair> {
    ensure_positive("tol", options.tol)?;
    let (k, m) = (&form.stiffness, &form.mass);
    let n = form.dim();
    if n == 0 {
        return Err(Error::Mesh("the discrete space is empty".into()));
    }
    let mut shift = match options.initial_shift {
        Some(s) => s,
        None => default_shift(form)?,
    };
    let mut factorizations = 0;
    let mut solver = None;
    for _ in 0..60 {
        factorizations += 1;
        if let Some(s) = factor(k, m, shift)? {
            solver = Some(s);
            break;
        }
        shift = if shift < 0.0 { 2.0 * shift } else { -1.0 - shift };
    }
    let mut solver = solver.ok_or(Error::IndefiniteShift { shift })?;

    // Deterministic start with a component along every eigenvector.
    let mut x: Vec<f64> = (0..n).map(|i| 1.0 + 0.5 * ((i as f64 + 0.5) * 0.618_033_988_749_895).fract()).collect();
    let mut lambda = f64::NAN;
    let mut residual = f64::INFINITY;
    let mut reshifted = false;
    for iteration in 1..=options.max_iterations {
        let mx = m.mul_vec(&x);
        let mut y = solver.solve(&mx);
        let norm = dot(&y, &m.mul_vec(&y)).sqrt();
        y.iter_mut().for_each(|v| *v /= norm);
        x = y;

        let kx = k.mul_vec(&x);
        let mx = m.mul_vec(&x);
        let previous = lambda;
        lambda = dot(&x, &kx) / dot(&x, &mx);
        let r: f64 = kx.iter().zip(&mx).map(|(a, b)| (a - lambda * b).powi(2)).sum::<f64>().sqrt();
        residual = r / dot(&mx, &mx).sqrt();
        if residual <= options.tol {
            let big = x.iter().cloned().fold(0.0_f64, |acc, v| if v.abs() > acc.abs() { v } else { acc });
            if big < 0.0 {
                x.iter_mut().for_each(|v| *v = -*v);
            }
            return Ok(Eigenpair {
                lambda,
                vector: x,
                residual,
                iterations: iteration,
                shift: solver.shift,
                factorizations,
            });
        }
        let settled = (lambda - previous).abs() < 1e-3 * lambda.abs();
        if !reshifted && settled {
            reshifted = true;
            let closer = lambda - 0.05 * lambda.abs().max(1e-3);
            if closer > solver.shift {
                factorizations += 1;
                if let Some(s) = factor(k, m, closer)? {
                    solver = s;
                }
            }
        }
    }
    Err(Error::Convergence {
        what: "shifted inverse iteration",
        iterations: options.max_iterations,
        residual,
    })
}

/// Error estimate for the finer of two solutions computed with mesh sizes
/// in ratio `ratio`, assuming convergence of order `order`.
pub fn richardson_error(coarse: f64, fine: f64, ratio: f64, order: f64) -> f64 {
    (coarse - fine).abs() / (ratio.powf(order) - 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EigenRecord {
    pub lambda1: f64,
    pub residual: f64,
    pub iterations: usize,
    pub shift: f64,
}

impl From<&Eigenpair> for EigenRecord {
    fn from(e: &Eigenpair) -> Self {
        EigenRecord {
            lambda1: e.lambda,
            residual: e.residual,
            iterations: e.iterations,
            shift: e.shift,
        }
    }
}

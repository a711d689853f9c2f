use rayon::prelude::*;

use super::mesh::{InterfaceMesh, Region};
use crate::error::{ensure_positive, Result};
use crate::geometry::Point;

/// Compressed sparse row matrix with sorted, duplicate-free columns.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    /// Square matrix from `(row, col, value)` entries; duplicates are summed
    /// in input order.
    pub fn from_triplets(n: usize, mut entries: Vec<(usize, usize, f64)>) -> Self {
        entries.sort_by_key(|&(r, c, _)| (r, c));
        let mut row_ptr = vec![0; n + 1];
        let mut cols: Vec<usize> = Vec::with_capacity(entries.len());
        let mut values: Vec<f64> = Vec::with_capacity(entries.len());
        let mut last = None;
        for (r, c, v) in entries {
            assert!(r < n && c < n, "entry ({r}, {c}) outside a {n} x {n} matrix");
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
            } else {
                cols.push(c);
                values.push(v);
                row_ptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        CsrMatrix { n, row_ptr, cols, values }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[range.clone()].iter().copied().zip(self.values[range].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.cols[range.clone()].binary_search(&j) {
            Ok(k) => self.values[range.start + k],
            Err(_) => 0.0,
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n)
            .into_par_iter()
            .map(|i| self.row(i).map(|(j, v)| v * x[j]).sum())
            .collect()
    }

    /// `x^T A x`.
    pub fn quadratic_form(&self, x: &[f64]) -> f64 {
        self.mul_vec(x).iter().zip(x).map(|(a, b)| a * b).sum()
    }

    /// `self + scale * other`.
    pub fn add_scaled(&self, other: &CsrMatrix, scale: f64) -> CsrMatrix {
        assert_eq!(self.n, other.n);
        let entries = self
            .triplets()
            .chain(other.triplets().map(|(i, j, v)| (i, j, scale * v)))
            .collect();
        CsrMatrix::from_triplets(self.n, entries)
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n).flat_map(move |i| self.row(i).map(move |(j, v)| (i, j, v)))
    }

    /// Largest `|A_ij - A_ji|`.
    pub fn asymmetry(&self) -> f64 {
        self.triplets()
            .map(|(i, j, v)| (v - self.get(j, i)).abs())
            .fold(0.0, f64::max)
    }
}

/// Treatment of the truncation circle `|x - center| = R_out`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OuterBoundary {
    /// Homogeneous Dirichlet: boundary nodes carry no degree of freedom.
    #[default]
    Dirichlet,
    /// Natural (free) boundary.
    Natural,
}

/// Matrices of the discretized form `||grad u||^2 - omega ||[u]||^2` and of
/// the L2 inner product on the P1 space of an [`InterfaceMesh`].
#[derive(Debug, Clone)]
pub struct DiscreteForm {
    pub omega: f64,
    pub grad: CsrMatrix,
    /// `-omega` times the interface mass of the jump `u_+ - u_-`.
    pub jump: CsrMatrix,
    pub stiffness: CsrMatrix,
    pub mass: CsrMatrix,
    /// Degree of freedom of each mesh node (`None` on Dirichlet nodes).
    pub dof_of_node: Vec<Option<usize>>,
    /// Mesh node of each degree of freedom.
    pub node_of_dof: Vec<usize>,
    pub interface_length: f64,
    /// Radius of the circle with the same perimeter as the polyline.
    pub equivalent_radius: f64,
}

/// P1 gradient and mass matrices of one triangle.
pub(crate) fn element_matrices(p: [Point; 3]) -> ([[f64; 3]; 3], [[f64; 3]; 3]) {
    let area = super::mesh::signed_area(p[0], p[1], p[2]);
    // gradient of barycentric coordinate i is perp(p_{i+2} - p_{i+1}) / (2 area)
    let grads: [[f64; 2]; 3] = std::array::from_fn(|i| {
        let a = p[(i + 1) % 3];
        let b = p[(i + 2) % 3];
        [(a[1] - b[1]) / (2.0 * area), (b[0] - a[0]) / (2.0 * area)]
    });
    let mut k = [[0.0; 3]; 3];
    let mut m = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            k[i][j] = area * (grads[i][0] * grads[j][0] + grads[i][1] * grads[j][1]);
            m[i][j] = area / 12.0 * if i == j { 2.0 } else { 1.0 };
        }
    }
    (k, m)
}

pub fn assemble(mesh: &InterfaceMesh, omega: f64) -> Result<DiscreteForm> {
    assemble_with(mesh, omega, OuterBoundary::Dirichlet)
}

pub fn assemble_with(mesh: &InterfaceMesh, omega: f64, boundary: OuterBoundary) -> Result<DiscreteForm> {
    ensure_positive("omega", omega)?;
    let mut dof_of_node: Vec<Option<usize>> = vec![Some(0); mesh.nodes.len()];
    if boundary == OuterBoundary::Dirichlet {
        for &b in &mesh.outer_boundary_nodes {
            dof_of_node[b] = None;
        }
    }
    let mut node_of_dof = Vec::new();
    for (node, slot) in dof_of_node.iter_mut().enumerate() {
        if slot.is_some() {
            *slot = Some(node_of_dof.len());
            node_of_dof.push(node);
        }
    }
    let n = node_of_dof.len();

    let (grad_entries, mass_entries): (Vec<_>, Vec<_>) = mesh
        .triangles
        .par_iter()
        .map(|tri| {
            let (k, m) = element_matrices(tri.map(|v| mesh.nodes[v]));
            let mut ke = Vec::with_capacity(9);
            let mut me = Vec::with_capacity(9);
            for a in 0..3 {
                for b in 0..3 {
                    if let (Some(i), Some(j)) = (dof_of_node[tri[a]], dof_of_node[tri[b]]) {
                        ke.push((i, j, k[a][b]));
                        me.push((i, j, m[a][b]));
                    }
                }
            }
            (ke, me)
        })
        .unzip();
    let grad = CsrMatrix::from_triplets(n, grad_entries.into_iter().flatten().collect());
    let mass = CsrMatrix::from_triplets(n, mass_entries.into_iter().flatten().collect());

    // Jump (u_in - u_out) along each polyline segment with the exact edge
    // mass (l / 6) [[2, 1], [1, 2]] of linear traces.
    let mut jump_entries = Vec::new();
    for (a, b) in mesh.interface_edges() {
        let (ia, oa) = mesh.interface_pairs[a];
        let (ib, ob) = mesh.interface_pairs[b];
        let (pa, pb) = (mesh.nodes[ia], mesh.nodes[ib]);
        let len = (pa[0] - pb[0]).hypot(pa[1] - pb[1]);
        let edge_mass = [[len / 3.0, len / 6.0], [len / 6.0, len / 3.0]];
        let ends = [[(ia, 1.0), (oa, -1.0)], [(ib, 1.0), (ob, -1.0)]];
        for (r, row) in ends.iter().enumerate() {
            for (c, col) in ends.iter().enumerate() {
                for &(ni, si) in row {
                    for &(nj, sj) in col {
                        if let (Some(i), Some(j)) = (dof_of_node[ni], dof_of_node[nj]) {
                            jump_entries.push((i, j, -omega * edge_mass[r][c] * si * sj));
                        }
                    }
                }
            }
        }
    }
    let jump = CsrMatrix::from_triplets(n, jump_entries);
    let stiffness = grad.add_scaled(&jump, 1.0);
    let interface_length = mesh.interface_length();
    Ok(DiscreteForm {
        omega,
        grad,
        jump,
        stiffness,
        mass,
        dof_of_node,
        node_of_dof,
        interface_length,
        equivalent_radius: interface_length / (2.0 * std::f64::consts::PI),
    })
}

impl DiscreteForm {
    pub fn dim(&self) -> usize {
        self.node_of_dof.len()
    }

    /// Coefficient vector of a nodal field (values on Dirichlet nodes are
    /// dropped).
    pub fn restrict(&self, nodal: &[f64]) -> Vec<f64> {
        self.node_of_dof.iter().map(|&n| nodal[n]).collect()
    }

    /// Nodal field of a coefficient vector (zero on Dirichlet nodes).
    pub fn extend(&self, coeffs: &[f64]) -> Vec<f64> {
        self.dof_of_node.iter().map(|d| d.map_or(0.0, |i| coeffs[i])).collect()
    }

    pub fn rayleigh_quotient(&self, x: &[f64]) -> f64 {
        self.stiffness.quadratic_form(x) / self.mass.quadratic_form(x)
    }
}

/// Direct evaluation of the form for a nodal field, element by element,
/// independent of the assembled matrices.
pub fn evaluate_form(mesh: &InterfaceMesh, omega: f64, nodal: &[f64]) -> (f64, f64) {
    let gradient: f64 = mesh
        .triangles
        .iter()
        .map(|tri| {
            let [a, b, c] = tri.map(|v| mesh.nodes[v]);
            let [ua, ub, uc] = tri.map(|v| nodal[v]);
            let area = super::mesh::signed_area(a, b, c);
            // solve for the constant gradient of the linear interpolant
            let (e1, e2) = ([b[0] - a[0], b[1] - a[1]], [c[0] - a[0], c[1] - a[1]]);
            let (d1, d2) = (ub - ua, uc - ua);
            let det = 2.0 * area;
            let gx = (d1 * e2[1] - d2 * e1[1]) / det;
            let gy = (e1[0] * d2 - e2[0] * d1) / det;
            area * (gx * gx + gy * gy)
        })
        .sum();
    let jump: f64 = mesh
        .interface_edges()
        .map(|(a, b)| {
            let (ia, oa) = mesh.interface_pairs[a];
            let (ib, ob) = mesh.interface_pairs[b];
            let (pa, pb) = (mesh.nodes[ia], mesh.nodes[ib]);
            let len = (pa[0] - pb[0]).hypot(pa[1] - pb[1]);
            let (ja, jb) = (nodal[ia] - nodal[oa], nodal[ib] - nodal[ob]);
            len / 3.0 * (ja * ja + ja * jb + jb * jb)
        })
        .sum();
    (gradient, -omega * jump)
}

/// Nodal indicator of the inner region, including the inner copies of the
/// interface vertices.
pub fn inner_indicator(mesh: &InterfaceMesh) -> Vec<f64> {
    let mut field = vec![0.0; mesh.nodes.len()];
    for (tri, region) in mesh.triangles.iter().zip(&mesh.regions) {
        if *region == Region::Inner {
            for &v in tri {
                field[v] = 1.0;
            }
        }
    }
    field
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::mesh::build_mesh;
    use crate::geometry::{make_circle, make_perturbed_circle};
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn small_mesh() -> InterfaceMesh {
        build_mesh(&make_perturbed_circle(2.0 * PI, 3, 0.1).unwrap(), 0.09, 3.2).unwrap()
    }

    #[test]
    fn element_matrices_reproduce_linear_fields() {
        let p = [[0.0, 0.0], [1.0, 0.2], [0.3, 0.9]];
        let (k, m) = element_matrices(p);
        let area = crate::fem::mesh::signed_area(p[0], p[1], p[2]);
        let total_mass: f64 = m.iter().flatten().sum();
        assert!((total_mass - area).abs() < 1e-15);
        // u = 2x - 3y has |grad u|^2 = 13
        let u: Vec<f64> = p.iter().map(|q| 2.0 * q[0] - 3.0 * q[1]).collect();
        let e: f64 = (0..3).flat_map(|i| (0..3).map(move |j| (i, j))).map(|(i, j)| u[i] * k[i][j] * u[j]).sum();
        assert!((e - 13.0 * area).abs() < 1e-13);
        // constants are in the kernel
        for row in k {
            assert!(row.iter().sum::<f64>().abs() < 1e-14);
        }
    }

    #[test]
    fn indicator_field_gives_minus_omega_perimeter() {
        let mesh = small_mesh();
        let form = assemble(&mesh, 1.7).unwrap();
        let x = form.restrict(&inner_indicator(&mesh));
        let value = form.stiffness.quadratic_form(&x);
        let expected = -1.7 * mesh.interface_length();
        assert!((value - expected).abs() < 1e-12 * expected.abs(), "{value} vs {expected}");
        assert!(form.grad.quadratic_form(&x).abs() < 1e-12);
    }

    #[test]
    fn continuous_fields_have_no_jump_contribution() {
        let mesh = small_mesh();
        let form = assemble(&mesh, 1.0).unwrap();
        let nodal: Vec<f64> = mesh.nodes.iter().map(|p| (p[0] * 0.7).sin() + p[1]).collect();
        let x = form.restrict(&nodal);
        assert!(form.jump.quadratic_form(&x).abs() < 1e-14);
    }

    #[test]
    fn matrices_are_exactly_symmetric() {
        let form = assemble(&small_mesh(), 1.0).unwrap();
        assert_eq!(form.stiffness.asymmetry(), 0.0);
        assert_eq!(form.mass.asymmetry(), 0.0);
        assert_eq!(form.jump.asymmetry(), 0.0);
    }

    #[test]
    fn dirichlet_drops_boundary_nodes() {
        let mesh = build_mesh(&make_circle(1.0).unwrap(), 0.09, 3.0).unwrap();
        let d = assemble_with(&mesh, 1.0, OuterBoundary::Dirichlet).unwrap();
        let n = assemble_with(&mesh, 1.0, OuterBoundary::Natural).unwrap();
        assert_eq!(n.dim() - d.dim(), mesh.outer_boundary_nodes.len());
        for &b in &mesh.outer_boundary_nodes {
            assert!(d.dof_of_node[b].is_none());
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn assembled_form_matches_elementwise_evaluation(seed in 0u64..1_000_000, omega in 0.1f64..5.0) {
            let mesh = small_mesh();
            let form = assemble_with(&mesh, omega, OuterBoundary::Natural).unwrap();
            // deterministic pseudo-random field from the seed
            let nodal: Vec<f64> = (0..mesh.nodes.len())
                .map(|i| ((i as f64 + 1.0) * 12.9898 + seed as f64 * 78.233).sin() * 43758.5453 % 1.0)
                .collect();
            let x = form.restrict(&nodal);
            let (g, j) = evaluate_form(&mesh, omega, &nodal);
            let assembled = form.stiffness.quadratic_form(&x);
            let scale = g.abs() + j.abs();
            prop_assert!((assembled - (g + j)).abs() <= 1e-12 * scale, "{} vs {}", assembled, g + j);
        }
    }
}

use std::f64::consts::PI;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use spade::{AngleLimit, ConstrainedDelaunayTriangulation, HasPosition, Point2, RefinementParameters, Triangulation};

use crate::error::{ensure_positive, Error, Result};
use crate::geometry::{signed_distance, Contour, Point};

/// Element size grows by this factor from one band to the next.
pub const GRADING: f64 = 1.5;

/// Minimum angle requested from the Delaunay refinement.
pub const MIN_ANGLE_DEG: f64 = 22.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Region {
    Inner,
    Outer,
}

/// Triangulation of the disk `|x - center| < R_out`, conforming to the
/// contour polyline, with every contour vertex stored twice: once for the
/// inner triangles and once for the outer ones.
#[derive(Debug, Clone)]
pub struct InterfaceMesh {
    pub nodes: Vec<Point>,
    /// Counter-clockwise vertex triples.
    pub triangles: Vec<[usize; 3]>,
    pub regions: Vec<Region>,
    /// `(inner_node, outer_node)` in order along the contour.
    pub interface_pairs: Vec<(usize, usize)>,
    pub outer_boundary_nodes: Vec<usize>,
    pub center: Point,
    pub h: f64,
    pub r_out: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeshStats {
    pub nodes: usize,
    pub triangles: usize,
    pub interface_pairs: usize,
    pub outer_boundary_nodes: usize,
    pub min_angle_deg: f64,
    /// Length of the contour polyline.
    pub interface_length: f64,
}

#[derive(Debug, Clone, Copy)]
struct MeshVertex {
    position: Point2<f64>,
    source: Source,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Source {
    Interface(usize),
    Boundary,
    Interior,
}

impl HasPosition for MeshVertex {
    type Scalar = f64;

    fn position(&self) -> Point2<f64> {
        self.position
    }
}

impl From<Point2<f64>> for MeshVertex {
    fn from(position: Point2<f64>) -> Self {
        MeshVertex {
            position,
            source: Source::Interior,
        }
    }
}

/// Target element size as a function of the distance `d` to the contour:
/// `h` near the curve, multiplied by [`GRADING`] every `band` units of
/// distance, and capped at `h_max`.
#[derive(Debug, Clone, Copy)]
struct SizeField {
    h: f64,
    band: f64,
    h_max: f64,
}

impl SizeField {
    fn band_index(&self, d: f64) -> usize {
        (d / self.band).floor().max(0.0) as usize
    }

    fn size_in_band(&self, k: usize) -> f64 {
        (self.h * GRADING.powi(k as i32)).min(self.h_max)
    }

    fn size(&self, d: f64) -> f64 {
        self.size_in_band(self.band_index(d))
    }
}

/// Boundary-fitted mesh of the disk of radius `r_out` around the contour
/// centroid with element size `h` along the contour.
///
/// Interior vertices are hexagonal lattices whose spacing grows by
/// [`GRADING`] per band of width `L / (4 pi)`; Delaunay refinement then
/// enforces a minimum angle.
pub fn build_mesh(contour: &Contour, h: f64, r_out: f64) -> Result<InterfaceMesh> {
    ensure_positive("h", h)?;
    ensure_positive("r_out", r_out)?;
    let length = contour.length();
    let big_r = contour.equivalent_radius();
    if r_out < 3.0 * big_r * (1.0 - 1e-12) {
        return Err(Error::Parameter {
            name: "r_out",
            value: r_out,
            reason: "must be at least 3 L / (2 pi)",
        });
    }
    if h > length / 64.0 * (1.0 + 1e-12) {
        return Err(Error::Parameter {
            name: "h",
            value: h,
            reason: "must not exceed L / 64",
        });
    }
    let center = contour.centroid();
    let max_extent = contour
        .samples()
        .iter()
        .map(|p| (p[0] - center[0]).hypot(p[1] - center[1]))
        .fold(0.0, f64::max);
    if max_extent + 2.0 * h >= r_out {
        return Err(Error::Mesh(format!(
            "contour reaches {max_extent} from its centroid, too close to r_out = {r_out}"
        )));
    }

    let size = SizeField {
        h,
        band: (0.5 * big_r).max(4.0 * h),
        h_max: (r_out / 8.0).max(h),
    };

    let mut vertices = Vec::new();
    let mut edges = Vec::new();

    let n_sigma = (length / h).round().max(8.0) as usize;
    for (j, s) in contour.equal_arc_parameters(n_sigma).into_iter().enumerate() {
        let p = contour.position(s);
        vertices.push(MeshVertex {
            position: Point2::new(p[0], p[1]),
            source: Source::Interface(j),
        });
        edges.push([j, (j + 1) % n_sigma]);
    }

    let boundary_size = size.size((r_out - max_extent).max(0.0));
    let n_out = ((2.0 * PI * r_out / boundary_size).ceil() as usize).max(16);
    for j in 0..n_out {
        let theta = 2.0 * PI * j as f64 / n_out as f64;
        vertices.push(MeshVertex {
            position: Point2::new(center[0] + r_out * theta.cos(), center[1] + r_out * theta.sin()),
            source: Source::Boundary,
        });
        edges.push([n_sigma + j, n_sigma + (j + 1) % n_out]);
    }

    for p in interior_points(contour, center, max_extent, r_out, &size) {
        vertices.push(MeshVertex {
            position: Point2::new(p[0], p[1]),
            source: Source::Interior,
        });
    }

    let mut cdt: ConstrainedDelaunayTriangulation<MeshVertex> =
        ConstrainedDelaunayTriangulation::bulk_load_cdt(vertices, edges)
            .map_err(|e| Error::Mesh(format!("triangulation failed: {e:?}")))?;
    let budget = 4 * cdt.num_vertices() + 1000;
    let result = cdt.refine(
        RefinementParameters::<f64>::new()
            .with_angle_limit(AngleLimit::from_deg(MIN_ANGLE_DEG))
            .keep_constraint_edges()
            .with_max_additional_vertices(budget),
    );
    if !result.refinement_complete {
        return Err(Error::Mesh("Delaunay refinement exceeded its vertex budget".into()));
    }

    assemble_mesh(contour, &cdt, n_sigma, center, h, r_out)
}

fn interior_points(contour: &Contour, center: Point, max_extent: f64, r_out: f64, size: &SizeField) -> Vec<Point> {
    let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
    for p in contour.samples() {
        for k in 0..2 {
            lo[k] = lo[k].min(p[k]);
            hi[k] = hi[k].max(p[k]);
        }
    }
    let mut points = Vec::new();
    let mut k = 0;
    loop {
        let d_lo = k as f64 * size.band;
        if d_lo > r_out + max_extent {
            break;
        }
        let d_hi = d_lo + size.band;
        let s = size.size_in_band(k);
        let prev = if k == 0 { 0.0 } else { size.size_in_band(k - 1) };
        // keep a gap of half a spacing to the contour and to the previous band
        let keep_from = d_lo + 0.5 * s.max(prev);
        let x0 = (lo[0] - d_hi).max(center[0] - r_out);
        let x1 = (hi[0] + d_hi).min(center[0] + r_out);
        let y0 = (lo[1] - d_hi).max(center[1] - r_out);
        let y1 = (hi[1] + d_hi).min(center[1] + r_out);
        let dy = s * 3f64.sqrt() / 2.0;
        let rows = ((y1 - y0) / dy).ceil() as usize + 1;
        let cols = ((x1 - x0) / s).ceil() as usize + 2;
        let candidates: Vec<Point> = (0..rows)
            .flat_map(|j| {
                let shift = if j % 2 == 0 { 0.0 } else { 0.5 * s };
                (0..cols).map(move |i| [x0 + shift + i as f64 * s, y0 + j as f64 * dy])
            })
            .filter(|p| (p[0] - center[0]).hypot(p[1] - center[1]) <= r_out - 0.6 * s)
            .collect();
        let kept: Vec<Point> = candidates
            .into_par_iter()
            .filter(|&p| {
                let d = signed_distance(contour, p).abs();
                d >= keep_from && d < d_hi
            })
            .collect();
        points.extend(kept);
        k += 1;
    }
    points
}

fn assemble_mesh(
    contour: &Contour,
    cdt: &ConstrainedDelaunayTriangulation<MeshVertex>,
    n_sigma: usize,
    center: Point,
    h: f64,
    r_out: f64,
) -> Result<InterfaceMesh> {
    let n_vertices = cdt.num_vertices();
    let mut nodes = vec![[0.0; 2]; n_vertices];
    let mut interface_node = vec![usize::MAX; n_sigma];
    let mut outer_boundary_nodes = Vec::new();
    for v in cdt.vertices() {
        let idx = v.fix().index();
        let p = v.position();
        nodes[idx] = [p.x, p.y];
        match v.data().source {
            Source::Interface(j) => interface_node[j] = idx,
            Source::Boundary => outer_boundary_nodes.push(idx),
            Source::Interior => {}
        }
    }
    if interface_node.contains(&usize::MAX) {
        return Err(Error::Mesh("an interface vertex was lost during triangulation".into()));
    }
    let polyline: Vec<Point> = interface_node.iter().map(|&i| nodes[i]).collect();
    let is_interface: Vec<Option<usize>> = {
        let mut map = vec![None; n_vertices];
        for (j, &i) in interface_node.iter().enumerate() {
            map[i] = Some(j);
        }
        map
    };

    // Outer copies of the interface vertices are appended after the
    // triangulation's own vertices.
    let mut interface_pairs = Vec::with_capacity(n_sigma);
    for &i in &interface_node {
        interface_pairs.push((i, nodes.len()));
        nodes.push(nodes[i]);
    }

    let mut triangles = Vec::new();
    let mut regions = Vec::new();
    for face in cdt.inner_faces() {
        let mut tri = face.vertices().map(|v| v.fix().index());
        let c = [
            (nodes[tri[0]][0] + nodes[tri[1]][0] + nodes[tri[2]][0]) / 3.0,
            (nodes[tri[0]][1] + nodes[tri[1]][1] + nodes[tri[2]][1]) / 3.0,
        ];
        let region = if point_in_polygon(&polyline, c) {
            Region::Inner
        } else {
            Region::Outer
        };
        if region == Region::Outer {
            for v in &mut tri {
                if let Some(j) = is_interface[*v] {
                    *v = interface_pairs[j].1;
                }
            }
        }
        if signed_area(nodes[tri[0]], nodes[tri[1]], nodes[tri[2]]) <= 0.0 {
            return Err(Error::Mesh("degenerate or inverted triangle".into()));
        }
        triangles.push(tri);
        regions.push(region);
    }
    debug_assert!(contour.length() > 0.0);
    outer_boundary_nodes.sort_unstable();
    Ok(InterfaceMesh {
        nodes,
        triangles,
        regions,
        interface_pairs,
        outer_boundary_nodes,
        center,
        h,
        r_out,
    })
}

pub(crate) fn signed_area(a: Point, b: Point, c: Point) -> f64 {
    0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
}

/// Even-odd rule.
fn point_in_polygon(polygon: &[Point], p: Point) -> bool {
    let mut inside = false;
    let n = polygon.len();
    for i in 0..n {
        let a = polygon[i];
        let b = polygon[(i + 1) % n];
        if (a[1] > p[1]) != (b[1] > p[1]) {
            let x = a[0] + (p[1] - a[1]) / (b[1] - a[1]) * (b[0] - a[0]);
            if p[0] < x {
                inside = !inside;
            }
        }
    }
    inside
}

impl InterfaceMesh {
    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn triangle_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangles[t];
        signed_area(self.nodes[a], self.nodes[b], self.nodes[c])
    }

    /// Segments of the contour polyline as pairs of indices into
    /// `interface_pairs`.
    pub fn interface_edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let n = self.interface_pairs.len();
        (0..n).map(move |j| (j, (j + 1) % n))
    }

    pub fn interface_length(&self) -> f64 {
        self.interface_edges()
            .map(|(a, b)| {
                let p = self.nodes[self.interface_pairs[a].0];
                let q = self.nodes[self.interface_pairs[b].0];
                (p[0] - q[0]).hypot(p[1] - q[1])
            })
            .sum()
    }

    pub fn min_angle_deg(&self) -> f64 {
        self.triangles
            .iter()
            .map(|&[a, b, c]| {
                let (pa, pb, pc) = (self.nodes[a], self.nodes[b], self.nodes[c]);
                let angle = |p: Point, q: Point, r: Point| {
                    let u = [q[0] - p[0], q[1] - p[1]];
                    let v = [r[0] - p[0], r[1] - p[1]];
                    (u[0] * v[1] - u[1] * v[0]).abs().atan2(u[0] * v[0] + u[1] * v[1])
                };
                angle(pa, pb, pc).min(angle(pb, pc, pa)).min(angle(pc, pa, pb))
            })
            .fold(PI, f64::min)
            .to_degrees()
    }

    /// Triangles with a vertex within `band` of the interface polyline.
    pub fn triangles_near_interface(&self, band: f64) -> usize {
        let sigma: Vec<Point> = self.interface_pairs.iter().map(|&(i, _)| self.nodes[i]).collect();
        let n = sigma.len();
        self.triangles
            .par_iter()
            .filter(|tri| {
                tri.iter().any(|&v| {
                    let p = self.nodes[v];
                    (0..n).any(|j| segment_distance(p, sigma[j], sigma[(j + 1) % n]) < band)
                })
            })
            .count()
    }

    pub fn stats(&self) -> MeshStats {
        MeshStats {
            nodes: self.nodes.len(),
            triangles: self.triangles.len(),
            interface_pairs: self.interface_pairs.len(),
            outer_boundary_nodes: self.outer_boundary_nodes.len(),
            min_angle_deg: self.min_angle_deg(),
            interface_length: self.interface_length(),
        }
    }

    /// Plain-text export:
    ///
    /// ```text
    /// nodes <N>
    /// <x> <y>                      (N lines, node i on line i)
    /// triangles <T>
    /// <a> <b> <c> <inner|outer>    (T lines)
    /// interface_pairs <P>
    /// <inner_node> <outer_node>    (P lines, in order along the contour)
    /// outer_boundary <B>
    /// <node>                       (B lines)
    /// ```
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        writeln!(out, "nodes {}", self.nodes.len()).unwrap();
        for p in &self.nodes {
            writeln!(out, "{:.17e} {:.17e}", p[0], p[1]).unwrap();
        }
        writeln!(out, "triangles {}", self.triangles.len()).unwrap();
        for (t, r) in self.triangles.iter().zip(&self.regions) {
            let tag = match r {
                Region::Inner => "inner",
                Region::Outer => "outer",
            };
            writeln!(out, "{} {} {} {tag}", t[0], t[1], t[2]).unwrap();
        }
        writeln!(out, "interface_pairs {}", self.interface_pairs.len()).unwrap();
        for (i, o) in &self.interface_pairs {
            writeln!(out, "{i} {o}").unwrap();
        }
        writeln!(out, "outer_boundary {}", self.outer_boundary_nodes.len()).unwrap();
        for b in &self.outer_boundary_nodes {
            writeln!(out, "{b}").unwrap();
        }
        out
    }
}

fn segment_distance(p: Point, a: Point, b: Point) -> f64 {
    let ab = [b[0] - a[0], b[1] - a[1]];
    let ap = [p[0] - a[0], p[1] - a[1]];
    let t = ((ap[0] * ab[0] + ap[1] * ab[1]) / (ab[0] * ab[0] + ab[1] * ab[1])).clamp(0.0, 1.0);
    (ap[0] - t * ab[0]).hypot(ap[1] - t * ab[1])
}

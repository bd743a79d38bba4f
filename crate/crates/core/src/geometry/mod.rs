//! Curved triangular meshes with tagged boundaries.
//!
//! Cells are 6-node triangles `[v0, v1, v2, m01, m12, m20]`. Local edge `e`
//! runs from `v_e` to `v_{e+1}`; its midpoint node is `3 + e`. Cells are
//! counter-clockwise, so every boundary edge is traversed with the domain
//! on its left and the outward normal is the clockwise-rotated tangent.
//!
//! Geometry is exact on the boundary: a cell with a boundary edge on a
//! curve uses a smooth blended map (linear map plus an edge correction that
//! vanishes on the other two edges), so refinement converges to the true
//! domain rather than to a fixed polygonal or quadratic approximation.

mod curve;
mod generate;
mod msh;

use std::collections::HashMap;

pub use curve::Curve;
pub use generate::{generate_square_with_hole, generate_tuning_fork, TuningForkOptions};
pub use msh::{parse_msh, read_msh, write_msh};

use crate::error::{Error, Result};
use crate::point::Vec2;
use crate::quadrature::{GaussLegendre, TriangleRule};

/// Boundary role: `Gamma` is the scatterer surface, `Sigma` the truncation curve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BoundaryTag {
    Gamma,
    Sigma,
}

impl BoundaryTag {
    /// Physical tag number in mesh files.
    pub fn physical(self) -> i64 {
        match self {
            BoundaryTag::Gamma => 1,
            BoundaryTag::Sigma => 2,
        }
    }

    pub fn from_physical(tag: i64) -> Option<Self> {
        match tag {
            1 => Some(BoundaryTag::Gamma),
            2 => Some(BoundaryTag::Sigma),
            _ => None,
        }
    }
}

/// A boundary edge, oriented like its parent cell's local edge.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Facet {
    /// Start vertex, end vertex, midpoint node.
    pub nodes: [usize; 3],
    pub tag: BoundaryTag,
    pub cell: usize,
    pub local_edge: usize,
    pub shape: Curve,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    /// Vertices first (`..vertex_count`), then one midpoint node per edge.
    pub nodes: Vec<Vec2>,
    pub vertex_count: usize,
    pub cells: Vec<[usize; 6]>,
    pub facets: Vec<Facet>,
    cell_facets: Vec<[Option<usize>; 3]>,
}

/// Reference coordinates on local edge `e` at edge parameter `s`.
pub fn edge_reference_point(e: usize, s: f64) -> [f64; 2] {
    match e {
        0 => [s, 0.0],
        1 => [1.0 - s, s],
        _ => [0.0, 1.0 - s],
    }
}

/// `psi(s) = (curve(s) - chord(s)) / (s (1 - s))` and its derivative.
///
/// Near the endpoints the quotient cancels badly, so it is frozen at the
/// cutoff; the factor `l_a l_b` in front keeps the induced error tiny.
fn bubble_shift(curve: &Curve, a: Vec2, b: Vec2, s: f64) -> (Vec2, Vec2) {
    const CUT: f64 = 1e-4;
    let frozen = !(CUT..=1.0 - CUT).contains(&s);
    let s = s.clamp(CUT, 1.0 - CUT);
    let w = s * (1.0 - s);
    let phi = curve.point(s) - a.lerp(b, s);
    let psi = phi * (1.0 / w);
    if frozen {
        return (psi, Vec2::new(0.0, 0.0));
    }
    let dphi = curve.derivative(s) - (b - a);
    (psi, (dphi - psi * (1.0 - 2.0 * s)) * (1.0 / w))
}

/// Blended map of one cell: the chord map plus `l_a l_b psi(s)` on each
/// curved edge, with `s = (1 + l_b - l_a) / 2`. The shift is smooth inside
/// the cell and vanishes on the two straight edges.
#[derive(Debug, Clone, Copy)]
pub struct CellGeometry {
    pub vertices: [Vec2; 3],
    pub curves: [Option<Curve>; 3],
}

impl CellGeometry {
    pub fn is_curved(&self) -> bool {
        self.curves.iter().any(Option::is_some)
    }

    fn barycentric(xi: [f64; 2]) -> [f64; 3] {
        [1.0 - xi[0] - xi[1], xi[0], xi[1]]
    }

    pub fn map(&self, xi: [f64; 2]) -> Vec2 {
        let l = Self::barycentric(xi);
        let v = &self.vertices;
        let mut x = v[0] * l[0] + v[1] * l[1] + v[2] * l[2];
        for (e, curve) in self.curves.iter().enumerate() {
            if let Some(curve) = curve {
                let (a, b) = (e, (e + 1) % 3);
                let s = 0.5 * (1.0 + l[b] - l[a]);
                x += bubble_shift(curve, v[a], v[b], s).0 * (l[a] * l[b]);
            }
        }
        x
    }

    /// Columns `dx/dxi`, `dx/deta`.
    pub fn jacobian(&self, xi: [f64; 2]) -> [Vec2; 2] {
        let v = &self.vertices;
        let mut d_dl = [v[0], v[1], v[2]];
        let l = Self::barycentric(xi);
        for (e, curve) in self.curves.iter().enumerate() {
            if let Some(curve) = curve {
                let (a, b) = (e, (e + 1) % 3);
                let s = 0.5 * (1.0 + l[b] - l[a]);
                let (psi, dpsi) = bubble_shift(curve, v[a], v[b], s);
                let half = dpsi * (0.5 * l[a] * l[b]);
                d_dl[a] += psi * l[b] - half;
                d_dl[b] += psi * l[a] + half;
            }
        }
        [d_dl[1] - d_dl[0], d_dl[2] - d_dl[0]]
    }

    pub fn det_jacobian(&self, xi: [f64; 2]) -> f64 {
        let [a, b] = self.jacobian(xi);
        a.cross(b)
    }

    /// Newton inversion of the map; `None` when the point is outside the
    /// cell (with a small tolerance) or Newton fails.
    pub fn inverse(&self, p: Vec2) -> Option<[f64; 2]> {
        let v = &self.vertices;
        // Straight-cell guess.
        let (e1, e2) = (v[1] - v[0], v[2] - v[0]);
        let det = e1.cross(e2);
        let d = p - v[0];
        let mut xi = [d.cross(e2) / det, e1.cross(d) / det];
        if self.is_curved() {
            for _ in 0..30 {
                let r = self.map(xi) - p;
                let [ja, jb] = self.jacobian(xi);
                let det = ja.cross(jb);
                if det.abs() < 1e-300 {
                    return None;
                }
                let dx = [r.cross(jb) / det, ja.cross(r) / det];
                xi[0] -= dx[0];
                xi[1] -= dx[1];
                if dx[0].abs() + dx[1].abs() < 1e-15 {
                    break;
                }
            }
            if (self.map(xi) - p).norm() > 1e-10 * e1.norm().max(e2.norm()) {
                return None;
            }
        }
        let tol = 1e-12;
        (xi[0] >= -tol && xi[1] >= -tol && xi[0] + xi[1] <= 1.0 + tol).then_some(xi)
    }
}

/// Points, weights and outward normals on all facets of one tag.
///
/// Points are stored facet by facet, `points_per_facet` each.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryQuadrature {
    pub tag: BoundaryTag,
    pub points_per_facet: usize,
    /// Facet indices into [`Mesh::facets`], in quadrature order.
    pub facets: Vec<usize>,
    pub points: Vec<Vec2>,
    /// Gauss weight times arc-length Jacobian.
    pub weights: Vec<f64>,
    /// Unit normals pointing out of the computational domain.
    pub normals: Vec<Vec2>,
    /// Reference coordinates in the parent cell.
    pub reference: Vec<[f64; 2]>,
}

impl BoundaryQuadrature {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn expect_tag(&self, tag: BoundaryTag) -> Result<()> {
        if self.tag != tag {
            return Err(Error::TagMismatch { expected: tag, got: self.tag });
        }
        Ok(())
    }
}

fn edge_key(a: usize, b: usize) -> (usize, usize) {
    (a.min(b), a.max(b))
}

impl Mesh {
    /// Assembles a mesh from corner data. `triangles` may be in either
    /// orientation. `boundary(a, b)` describes edge `a -> b` when it lies on
    /// the boundary; every edge owned by a single triangle must be described.
    pub fn from_parts(
        vertices: Vec<Vec2>,
        triangles: &[[usize; 3]],
        boundary: impl Fn(usize, usize) -> Option<(BoundaryTag, Curve)>,
    ) -> Result<Self> {
        let nv = vertices.len();
        let mut tris: Vec<[usize; 3]> = Vec::with_capacity(triangles.len());
        for (c, t) in triangles.iter().enumerate() {
            if t.iter().any(|&i| i >= nv) {
                return Err(Error::MeshValidation(format!("cell {c} references a missing vertex")));
            }
            let (a, b, d) = (vertices[t[0]], vertices[t[1]], vertices[t[2]]);
            let area = (b - a).cross(d - a);
            if area == 0.0 {
                return Err(Error::MeshValidation(format!("cell {c} is degenerate")));
            }
            tris.push(if area > 0.0 { *t } else { [t[0], t[2], t[1]] });
        }

        // Edge numbering in first-seen order.
        let mut edge_of: HashMap<(usize, usize), usize> = HashMap::new();
        let mut edge_cells: Vec<Vec<(usize, usize)>> = Vec::new();
        let mut cells = Vec::with_capacity(tris.len());
        for (c, t) in tris.iter().enumerate() {
            let mut cell = [t[0], t[1], t[2], 0, 0, 0];
            for e in 0..3 {
                let key = edge_key(t[e], t[(e + 1) % 3]);
                let id = *edge_of.entry(key).or_insert_with(|| {
                    edge_cells.push(Vec::new());
                    edge_cells.len() - 1
                });
                edge_cells[id].push((c, e));
                cell[3 + e] = nv + id;
            }
            cells.push(cell);
        }

        let mut nodes = vertices;
        nodes.resize(nv + edge_cells.len(), Vec2::default());
        let mut facets = Vec::new();
        let mut cell_facets = vec![[None; 3]; cells.len()];
        for (id, owners) in edge_cells.iter().enumerate() {
            let (c, e) = owners[0];
            let (a, b) = (cells[c][e], cells[c][(e + 1) % 3]);
            match owners.len() {
                1 => {
                    let (tag, shape) = boundary(a, b).ok_or_else(|| {
                        Error::MeshValidation(format!(
                            "boundary edge ({a}, {b}) of cell {c} carries no tag"
                        ))
                    })?;
                    let shape = orient_curve(shape, nodes[a], nodes[b])?;
                    nodes[nv + id] = shape.point(0.5);
                    cell_facets[c][e] = Some(facets.len());
                    facets.push(Facet { nodes: [a, b, nv + id], tag, cell: c, local_edge: e, shape });
                }
                2 => {
                    let (c2, e2) = owners[1];
                    if cells[c2][e2] != b {
                        return Err(Error::MeshValidation(format!(
                            "cells {c} and {c2} have inconsistent orientation"
                        )));
                    }
                    nodes[nv + id] = nodes[a].lerp(nodes[b], 0.5);
                }
                n => {
                    return Err(Error::MeshValidation(format!(
                        "edge ({a}, {b}) is shared by {n} cells"
                    )))
                }
            }
        }
        let mesh = Mesh { nodes, vertex_count: nv, cells, facets, cell_facets };
        mesh.validate()?;
        Ok(mesh)
    }

    /// Checks closed facet loops per tag and positive Jacobians.
    pub fn validate(&self) -> Result<()> {
        for tag in [BoundaryTag::Gamma, BoundaryTag::Sigma] {
            let mut out_degree: HashMap<usize, i32> = HashMap::new();
            for f in self.facets.iter().filter(|f| f.tag == tag) {
                *out_degree.entry(f.nodes[0]).or_default() += 1;
                *out_degree.entry(f.nodes[1]).or_default() -= 1;
            }
            if let Some((v, _)) = out_degree.iter().find(|(_, &d)| d != 0) {
                return Err(Error::MeshValidation(format!(
                    "{tag:?} facets do not form closed loops at vertex {v}"
                )));
            }
        }
        let rule = TriangleRule::for_degree(6);
        for c in 0..self.cells.len() {
            let g = self.cell_geometry(c);
            let probe = rule.points.iter().copied().chain([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]]);
            for xi in probe {
                let det = g.det_jacobian(xi);
                if !(det > 0.0) {
                    return Err(Error::MeshValidation(format!(
                        "cell {c} has non-positive Jacobian {det:e} at {xi:?}"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn num_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn num_edges(&self) -> usize {
        self.nodes.len() - self.vertex_count
    }

    /// Global edge index of local edge `e` of cell `c`.
    pub fn edge_index(&self, c: usize, e: usize) -> usize {
        self.cells[c][3 + e] - self.vertex_count
    }

    pub fn vertex(&self, i: usize) -> Vec2 {
        self.nodes[i]
    }

    pub fn cell_geometry(&self, c: usize) -> CellGeometry {
        let cell = &self.cells[c];
        let mut curves = [None; 3];
        for (e, slot) in curves.iter_mut().enumerate() {
            if let Some(f) = self.cell_facets[c][e] {
                let shape = self.facets[f].shape;
                if !shape.is_straight() {
                    *slot = Some(shape);
                }
            }
        }
        CellGeometry { vertices: [self.nodes[cell[0]], self.nodes[cell[1]], self.nodes[cell[2]]], curves }
    }

    pub fn is_curved(&self, c: usize) -> bool {
        self.cell_facets[c]
            .iter()
            .flatten()
            .any(|&f| !self.facets[f].shape.is_straight())
    }

    pub fn facet_of(&self, c: usize, e: usize) -> Option<usize> {
        self.cell_facets[c][e]
    }

    pub fn facet_count(&self, tag: BoundaryTag) -> usize {
        self.facets.iter().filter(|f| f.tag == tag).count()
    }

    /// Longest straight edge.
    pub fn max_edge_length(&self) -> f64 {
        let mut h = 0.0f64;
        for cell in &self.cells {
            for e in 0..3 {
                h = h.max((self.nodes[cell[e]] - self.nodes[cell[(e + 1) % 3]]).norm());
            }
        }
        h
    }

    /// Area by quadrature of the blended maps.
    pub fn area(&self) -> f64 {
        let base = TriangleRule::for_degree(10);
        (0..self.cells.len())
            .map(|c| {
                let g = self.cell_geometry(c);
                base.points.iter().zip(&base.weights).map(|(&xi, &w)| w * g.det_jacobian(xi)).sum::<f64>()
            })
            .sum()
    }

    /// Gauss-Legendre rule with `order` points per facet of `tag`.
    pub fn boundary_quadrature(&self, tag: BoundaryTag, order: usize) -> BoundaryQuadrature {
        let g = GaussLegendre::new(order.max(1));
        let mut q = BoundaryQuadrature {
            tag,
            points_per_facet: g.len(),
            facets: Vec::new(),
            points: Vec::new(),
            weights: Vec::new(),
            normals: Vec::new(),
            reference: Vec::new(),
        };
        for (fi, f) in self.facets.iter().enumerate().filter(|(_, f)| f.tag == tag) {
            q.facets.push(fi);
            for (&s, &w) in g.points.iter().zip(&g.weights) {
                let d = f.shape.derivative(s);
                q.points.push(f.shape.point(s));
                q.weights.push(w * d.norm());
                q.normals.push(d.rot_cw().normalized());
                q.reference.push(edge_reference_point(f.local_edge, s));
            }
        }
        q
    }

    /// Cell containing `p` and its reference coordinates (linear scan).
    pub fn locate(&self, p: Vec2) -> Option<(usize, [f64; 2])> {
        (0..self.cells.len()).find_map(|c| self.locate_in(c, p).map(|xi| (c, xi)))
    }

    fn locate_in(&self, c: usize, p: Vec2) -> Option<[f64; 2]> {
        let (lo, hi) = self.cell_bbox(c);
        if p.x < lo.x || p.y < lo.y || p.x > hi.x || p.y > hi.y {
            return None;
        }
        self.cell_geometry(c).inverse(p)
    }

    /// Bounding box of the cell nodes, padded for edge bulge.
    fn cell_bbox(&self, c: usize) -> (Vec2, Vec2) {
        let mut lo = Vec2::new(f64::INFINITY, f64::INFINITY);
        let mut hi = Vec2::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        for &n in &self.cells[c] {
            let p = self.nodes[n];
            lo = Vec2::new(lo.x.min(p.x), lo.y.min(p.y));
            hi = Vec2::new(hi.x.max(p.x), hi.y.max(p.y));
        }
        let pad = 0.1 * (hi - lo).norm() + 1e-12;
        (lo - Vec2::new(pad, pad), hi + Vec2::new(pad, pad))
    }

    /// Splits every cell into four; new boundary vertices follow the exact
    /// boundary curves, interior edges stay straight.
    pub fn refine(&self) -> Result<Mesh> {
        let vertices = self.nodes.clone();
        let mut triangles = Vec::with_capacity(4 * self.cells.len());
        for cell in &self.cells {
            let [v0, v1, v2, m01, m12, m20] = *cell;
            triangles.push([v0, m01, m20]);
            triangles.push([m01, v1, m12]);
            triangles.push([m20, m12, v2]);
            triangles.push([m01, m12, m20]);
        }
        let mut boundary: HashMap<(usize, usize), (usize, BoundaryTag, Curve)> = HashMap::new();
        for f in &self.facets {
            let [a, b, m] = f.nodes;
            let (first, second) = f.shape.split();
            boundary.insert(edge_key(a, m), (a, f.tag, first));
            boundary.insert(edge_key(m, b), (m, f.tag, second));
        }
        Mesh::from_parts(vertices, &triangles, |a, b| {
            boundary.get(&edge_key(a, b)).map(|&(start, tag, curve)| {
                (tag, if start == a { curve } else { curve.reversed() })
            })
        })
    }
}

/// Makes `curve` run from `a` to `b`, reversing it if necessary.
fn orient_curve(curve: Curve, a: Vec2, b: Vec2) -> Result<Curve> {
    let scale = (b - a).norm();
    let tol = 1e-9 * scale.max(1e-300);
    if (curve.start() - a).norm() <= tol && (curve.end() - b).norm() <= tol {
        Ok(curve)
    } else if (curve.start() - b).norm() <= tol && (curve.end() - a).norm() <= tol {
        Ok(curve.reversed())
    } else {
        Err(Error::MeshValidation(format!(
            "boundary curve does not join ({}, {}) and ({}, {})",
            a.x, a.y, b.x, b.y
        )))
    }
}

/// Bucketed point location for repeated queries.
pub struct PointLocator<'a> {
    mesh: &'a Mesh,
    origin: Vec2,
    cell_size: Vec2,
    dims: (usize, usize),
    buckets: Vec<Vec<usize>>,
}

impl<'a> PointLocator<'a> {
    pub fn new(mesh: &'a Mesh) -> Self {
        let mut lo = Vec2::new(f64::INFINITY, f64::INFINITY);
        let mut hi = Vec2::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        for p in &mesh.nodes {
            lo = Vec2::new(lo.x.min(p.x), lo.y.min(p.y));
            hi = Vec2::new(hi.x.max(p.x), hi.y.max(p.y));
        }
        let n = ((mesh.cells.len() as f64).sqrt().ceil() as usize).max(1);
        let span = hi - lo;
        let cell_size = Vec2::new(span.x.max(1e-300) / n as f64, span.y.max(1e-300) / n as f64);
        let mut locator = Self { mesh, origin: lo, cell_size, dims: (n, n), buckets: vec![Vec::new(); n * n] };
        for c in 0..mesh.cells.len() {
            let (a, b) = mesh.cell_bbox(c);
            let (i0, j0) = locator.bucket(a);
            let (i1, j1) = locator.bucket(b);
            for j in j0..=j1 {
                for i in i0..=i1 {
                    locator.buckets[j * n + i].push(c);
                }
            }
        }
        locator
    }

    fn bucket(&self, p: Vec2) -> (usize, usize) {
        let clamp = |t: f64, n: usize| (t.floor().max(0.0) as usize).min(n - 1);
        (
            clamp((p.x - self.origin.x) / self.cell_size.x, self.dims.0),
            clamp((p.y - self.origin.y) / self.cell_size.y, self.dims.1),
        )
    }

    pub fn locate(&self, p: Vec2) -> Option<(usize, [f64; 2])> {
        let (i, j) = self.bucket(p);
        self.buckets[j * self.dims.0 + i]
            .iter()
            .find_map(|&c| self.mesh.locate_in(c, p).map(|xi| (c, xi)))
    }
}

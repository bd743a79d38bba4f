//! Structured generators for the two model geometries.

use std::collections::HashMap;
use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

use super::curve::{angle_near, Curve};
use super::{BoundaryTag, CellGeometry, Mesh};
use crate::error::{Error, Result};
use crate::point::Vec2;

/// Vertex list with coordinate deduplication.
#[derive(Default)]
struct VertexPool {
    vertices: Vec<Vec2>,
    index: HashMap<(i64, i64), usize>,
}

impl VertexPool {
    const QUANTUM: f64 = 1e-10;

    fn key(p: Vec2) -> (i64, i64) {
        ((p.x / Self::QUANTUM).round() as i64, (p.y / Self::QUANTUM).round() as i64)
    }

    fn insert(&mut self, p: Vec2) -> usize {
        let (kx, ky) = Self::key(p);
        for dx in -1..=1 {
            for dy in -1..=1 {
                if let Some(&i) = self.index.get(&(kx + dx, ky + dy)) {
                    if (self.vertices[i] - p).norm() < 2.0 * Self::QUANTUM {
                        return i;
                    }
                }
            }
        }
        self.vertices.push(p);
        self.index.insert((kx, ky), self.vertices.len() - 1);
        self.vertices.len() - 1
    }
}

/// Annulus between a centred circle (`Gamma`) and the square
/// `[-half_width, half_width]^2` (`Sigma`), meshed as four structured
/// patches joining each square side to a quarter of the circle.
pub fn generate_square_with_hole(half_width: f64, radius: f64, h: f64) -> Result<Mesh> {
    if !(radius > 0.0 && radius < half_width && h > 0.0) {
        return Err(Error::MeshValidation(format!(
            "need 0 < radius < half_width and h > 0, got radius {radius}, half_width {half_width}, h {h}"
        )));
    }
    let n = (2.0 * half_width / h).ceil() as usize;
    if 4 * n < 8 {
        return Err(Error::MeshValidation(format!(
            "h = {h} leaves only {} facets on the circle (need 8)",
            4 * n
        )));
    }
    let m = ((half_width - radius) / h).ceil().max(1.0) as usize;
    let ring = 4 * n;
    let corner = |p: usize| {
        let phi = -FRAC_PI_4 + p as f64 * FRAC_PI_2;
        Vec2::new(phi.cos(), phi.sin()) * (half_width * 2f64.sqrt())
    };
    let mut vertices = Vec::with_capacity(ring * (m + 1));
    for j in 0..=m {
        for k in 0..ring {
            let (p, t) = (k / n, (k % n) as f64 / n as f64);
            let theta = -FRAC_PI_4 + (k as f64 / n as f64) * FRAC_PI_2;
            let inner = Vec2::new(theta.cos(), theta.sin()) * radius;
            let outer = corner(p).lerp(corner((p + 1) % 4), t);
            vertices.push(inner.lerp(outer, j as f64 / m as f64));
        }
    }
    let id = |k: usize, j: usize| j * ring + k % ring;
    let mut triangles = Vec::with_capacity(2 * ring * m);
    for j in 0..m {
        for k in 0..ring {
            triangles.push([id(k, j), id(k + 1, j), id(k + 1, j + 1)]);
            triangles.push([id(k, j), id(k + 1, j + 1), id(k, j + 1)]);
        }
    }
    let verts = vertices.clone();
    Mesh::from_parts(vertices, &triangles, move |a, b| {
        let (pa, pb) = (verts[a], verts[b]);
        let on_circle = |p: Vec2| (p.norm() - radius).abs() < 1e-9 * radius;
        if on_circle(pa) && on_circle(pb) {
            let origin = Vec2::default();
            let ta = pa.y.atan2(pa.x);
            let tb = angle_near(origin, pb, ta);
            Some((BoundaryTag::Gamma, Curve::arc(origin, radius, ta, tb)))
        } else {
            Some((BoundaryTag::Sigma, Curve::Straight { a: pa, b: pb }))
        }
    })
}

/// Outline and meshing controls for the tuning-fork geometry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TuningForkOptions {
    /// Target spacing away from the fork.
    pub h: f64,
    /// Spacing next to fork walls; equal to `h` for a uniform mesh.
    pub h_wall: f64,
    /// Half-width of the outer rectangle.
    pub half_width: f64,
}

impl TuningForkOptions {
    pub fn uniform(h: f64) -> Self {
        Self { h, h_wall: h, half_width: FORK_BOX_HALF_WIDTH }
    }
}

pub const FORK_BOX_HALF_WIDTH: f64 = 0.1125;
pub const FORK_BOX_HEIGHT: f64 = 0.723;
const TINE_OUTER: f64 = 0.075;
const SLOT_HALF_WIDTH: f64 = 0.015;
const FORK_BOTTOM: f64 = 0.05;
const SLOT_BOTTOM: f64 = 0.298;
const FORK_TOP: f64 = 0.673;
/// Rate at which cells grow away from a wall when `h_wall < h`.
const GRADING_RATE: f64 = 0.25;

/// Node positions on `[a, b]`: uniform, or graded toward the flagged ends
/// with local size `min(h, h_wall + rate * distance)`.
fn spacing(a: f64, b: f64, h: f64, h_wall: f64, grade_a: bool, grade_b: bool) -> Vec<f64> {
    let len = b - a;
    if h_wall >= h || !(grade_a || grade_b) {
        let n = (len / h).ceil().max(1.0) as usize;
        return (0..=n).map(|i| a + len * i as f64 / n as f64).collect();
    }
    let size = |x: f64| {
        let mut d = f64::INFINITY;
        if grade_a {
            d = d.min(x);
        }
        if grade_b {
            d = d.min(len - x);
        }
        h.min(h_wall + GRADING_RATE * d)
    };
    // Cumulative cell count on a fine sampling, then invert.
    let samples = 4000;
    let dx = len / samples as f64;
    let mut cum = vec![0.0; samples + 1];
    for i in 0..samples {
        cum[i + 1] = cum[i] + dx / size((i as f64 + 0.5) * dx);
    }
    let n = cum[samples].ceil().max(1.0) as usize;
    let mut nodes = Vec::with_capacity(n + 1);
    nodes.push(a);
    let mut j = 0;
    for i in 1..n {
        let target = cum[samples] * i as f64 / n as f64;
        while cum[j + 1] < target {
            j += 1;
        }
        let t = (target - cum[j]) / (cum[j + 1] - cum[j]);
        nodes.push(a + (j as f64 + t) * dx);
    }
    nodes.push(b);
    if grade_a && grade_b {
        // Exact mirror symmetry.
        let mid = 0.5 * (a + b);
        for i in 0..nodes.len() / 2 {
            let k = nodes.len() - 1 - i;
            let d = 0.5 * ((nodes[i] - a) + (b - nodes[k]));
            nodes[i] = a + d;
            nodes[k] = b - d;
        }
        if nodes.len() % 2 == 1 {
            let c = nodes.len() / 2;
            nodes[c] = mid;
        }
    }
    nodes
}

/// Rectangle `[-half_width, half_width] x [0, 0.723]` (`Sigma`) minus a
/// two-tine fork (`Gamma`): the block `[-0.075, 0.075] x [0.05, 0.673]`
/// with a slot of width 0.03 down to `y = 0.298`, closed below by a
/// semicircle of radius 0.015.
///
/// The mesh is a tensor grid over the block structure; the half-disc under
/// the slot is two curved quarter-disc patches.
pub fn generate_tuning_fork(opts: TuningForkOptions) -> Result<Mesh> {
    let TuningForkOptions { h, h_wall, half_width } = opts;
    if !(h > 0.0 && h_wall > 0.0) {
        return Err(Error::MeshValidation(format!("mesh sizes must be positive, got {h}, {h_wall}")));
    }
    if half_width <= TINE_OUTER {
        return Err(Error::MeshValidation(format!(
            "box half-width {half_width} does not enclose the fork"
        )));
    }
    if h > 0.1 {
        return Err(Error::MeshValidation(format!("h = {h} cannot resolve the fork")));
    }
    let r = SLOT_HALF_WIDTH;
    let h_wall = h_wall.min(h);
    let xb = [-half_width, -TINE_OUTER, -r, r, TINE_OUTER, half_width];
    let yb = [0.0, FORK_BOTTOM, SLOT_BOTTOM, FORK_TOP, FORK_BOX_HEIGHT];
    let is_wall_x = |x: f64| [-TINE_OUTER, -r, r, TINE_OUTER].contains(&x);
    let is_wall_y = |y: f64| [FORK_BOTTOM, SLOT_BOTTOM, FORK_TOP].contains(&y);

    // Slot cells: uniform, even count so the half-disc centre is a node.
    let slot_half_cells = (r / h_wall).round().max(1.0) as usize;
    let mut xs: Vec<Vec<f64>> = Vec::new();
    for i in 0..5 {
        if i == 2 {
            let n = 2 * slot_half_cells;
            xs.push((0..=n).map(|k| -r + 2.0 * r * k as f64 / n as f64).collect());
        } else {
            xs.push(spacing(xb[i], xb[i + 1], h, h_wall, is_wall_x(xb[i]), is_wall_x(xb[i + 1])));
        }
    }
    let ys: Vec<Vec<f64>> = (0..4)
        .map(|j| spacing(yb[j], yb[j + 1], h, h_wall, is_wall_y(yb[j]), is_wall_y(yb[j + 1])))
        .collect();
    let in_fork = |ix: usize, iy: usize| (1..=3).contains(&ix) && (1..=2).contains(&iy) && !(ix == 2 && iy == 2);

    let mut pool = VertexPool::default();
    let mut triangles = Vec::new();
    for iy in 0..4 {
        for ix in 0..5 {
            if in_fork(ix, iy) {
                continue;
            }
            let (gx, gy) = (&xs[ix], &ys[iy]);
            for j in 0..gy.len() - 1 {
                for i in 0..gx.len() - 1 {
                    let p00 = pool.insert(Vec2::new(gx[i], gy[j]));
                    let p10 = pool.insert(Vec2::new(gx[i + 1], gy[j]));
                    let p11 = pool.insert(Vec2::new(gx[i + 1], gy[j + 1]));
                    let p01 = pool.insert(Vec2::new(gx[i], gy[j + 1]));
                    // Mirror-symmetric diagonals about x = 0.
                    if gx[i] + gx[i + 1] < 0.0 {
                        triangles.push([p00, p10, p11]);
                        triangles.push([p00, p11, p01]);
                    } else {
                        triangles.push([p00, p10, p01]);
                        triangles.push([p10, p11, p01]);
                    }
                }
            }
        }
    }

    // Quarter discs under the slot: lattice images of the blended map.
    let center = Vec2::new(0.0, SLOT_BOTTOM);
    let bottom = Vec2::new(0.0, SLOT_BOTTOM - r);
    let mut arcs: Vec<Curve> = Vec::new();
    let quarters = [
        (Vec2::new(r, SLOT_BOTTOM), bottom, 0.0, -FRAC_PI_2),
        (bottom, Vec2::new(-r, SLOT_BOTTOM), -FRAC_PI_2, -PI),
    ];
    let n = slot_half_cells;
    for (b, c, t0, t1) in quarters {
        let arc = Curve::arc(center, r, t0, t1);
        let geo = CellGeometry { vertices: [center, b, c], curves: [None, Some(arc), None] };
        let mut lattice = vec![vec![0usize; n + 1]; n + 1];
        for i in 0..=n {
            for j in 0..=n - i {
                let xi = [i as f64 / n as f64, j as f64 / n as f64];
                let p = if i + j == n { arc.point(j as f64 / n as f64) } else { geo.map(xi) };
                lattice[i][j] = pool.insert(p);
            }
        }
        for i in 0..n {
            for j in 0..n - i {
                triangles.push([lattice[i][j], lattice[i + 1][j], lattice[i][j + 1]]);
                if i + j + 1 < n {
                    triangles.push([lattice[i + 1][j], lattice[i + 1][j + 1], lattice[i][j + 1]]);
                }
            }
        }
        for k in 0..n {
            let s0 = k as f64 / n as f64;
            let s1 = (k + 1) as f64 / n as f64;
            arcs.push(Curve::arc(center, r, t0 + s0 * (t1 - t0), t0 + s1 * (t1 - t0)));
        }
    }

    let vertices = pool.vertices.clone();
    let close = |p: Vec2, q: Vec2| (p - q).norm() < 1e-9;
    Mesh::from_parts(pool.vertices, &triangles, move |a, b| {
        let (pa, pb) = (vertices[a], vertices[b]);
        for arc in &arcs {
            if close(arc.start(), pa) && close(arc.end(), pb) {
                return Some((BoundaryTag::Gamma, *arc));
            }
            if close(arc.start(), pb) && close(arc.end(), pa) {
                return Some((BoundaryTag::Gamma, arc.reversed()));
            }
        }
        let eps = 1e-12;
        let on_box = |f: fn(Vec2) -> f64, v: f64| (f(pa) - v).abs() < eps && (f(pb) - v).abs() < eps;
        let outer = on_box(|p| p.x, -half_width)
            || on_box(|p| p.x, half_width)
            || on_box(|p| p.y, 0.0)
            || on_box(|p| p.y, FORK_BOX_HEIGHT);
        let tag = if outer { BoundaryTag::Sigma } else { BoundaryTag::Gamma };
        Some((tag, Curve::Straight { a: pa, b: pb }))
    })
}

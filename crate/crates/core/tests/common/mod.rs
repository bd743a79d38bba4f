#![allow(dead_code)]

use num_complex::Complex64;

pub struct HankelRow {
    pub z: Complex64,
    pub h0: Complex64,
    pub h1: Complex64,
}

pub fn hankel_reference() -> Vec<HankelRow> {
    let text = include_str!("../data/hankel_reference.csv");
    text.lines()
        .skip(1)
        .filter(|l| !l.trim().is_empty())
        .map(|line| {
            let v: Vec<f64> = line.split(',').map(|f| f.trim().parse().unwrap()).collect();
            HankelRow {
                z: Complex64::new(v[0], v[1]),
                h0: Complex64::new(v[2], v[3]),
                h1: Complex64::new(v[4], v[5]),
            }
        })
        .collect()
}

/// Relative error, except that reference values below the double range
/// only require the computed value to have underflowed as well.
pub fn hankel_error(got: Complex64, want: Complex64) -> f64 {
    if want.norm() > 1e-290 {
        (got - want).norm() / want.norm()
    } else if got.norm() <= 1e-290 {
        0.0
    } else {
        f64::INFINITY
    }
}

/// `n x n` squares on `[0, 1]^2`, each split along its diagonal, with the
/// whole boundary tagged `Sigma`.
pub fn unit_square(n: usize) -> mi_core::geometry::Mesh {
    use mi_core::geometry::{BoundaryTag, Curve, Mesh};
    use mi_core::Vec2;
    let idx = |i: usize, j: usize| j * (n + 1) + i;
    let mut verts = Vec::new();
    for j in 0..=n {
        for i in 0..=n {
            verts.push(Vec2::new(i as f64 / n as f64, j as f64 / n as f64));
        }
    }
    let mut tris = Vec::new();
    for j in 0..n {
        for i in 0..n {
            tris.push([idx(i, j), idx(i + 1, j), idx(i + 1, j + 1)]);
            tris.push([idx(i, j), idx(i + 1, j + 1), idx(i, j + 1)]);
        }
    }
    let v = verts.clone();
    Mesh::from_parts(verts, &tris, move |a, b| {
        let (p, q) = (v[a], v[b]);
        let on = |s: f64, t: f64| (s == t) && (s == 0.0 || s == 1.0);
        (on(p.x, q.x) || on(p.y, q.y)).then_some((BoundaryTag::Sigma, Curve::Straight { a: p, b: q }))
    })
    .unwrap()
}

/// Rebuilds `mesh` from its corners with the cells in a different order.
pub fn permuted_cells(mesh: &mi_core::geometry::Mesh, order: &[usize]) -> mi_core::geometry::Mesh {
    use mi_core::geometry::Mesh;
    let tris: Vec<[usize; 3]> = order.iter().map(|&c| [mesh.cells[c][0], mesh.cells[c][1], mesh.cells[c][2]]).collect();
    let facets = mesh.facets.clone();
    Mesh::from_parts(mesh.nodes[..mesh.vertex_count].to_vec(), &tris, move |a, b| {
        facets.iter().find_map(|f| {
            if f.nodes[0] == a && f.nodes[1] == b {
                Some((f.tag, f.shape))
            } else if f.nodes[0] == b && f.nodes[1] == a {
                Some((f.tag, f.shape.reversed()))
            } else {
                None
            }
        })
    })
    .unwrap()
}

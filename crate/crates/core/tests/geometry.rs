//! Mesh generators, refinement, file round trips and boundary quadrature.

use std::f64::consts::PI;

use mi_core::geometry::{
    generate_square_with_hole, generate_tuning_fork, read_msh, write_msh, BoundaryTag, Mesh,
    TuningForkOptions,
};
use mi_core::Vec2;

fn square(h: f64) -> Mesh {
    generate_square_with_hole(1.5, 2.0 / 3.0, h).unwrap()
}

fn fork_area() -> f64 {
    // Outline polygon by the shoelace formula, minus the half disc under the slot.
    let outline = [
        (-0.015, 0.673),
        (-0.075, 0.673),
        (-0.075, 0.05),
        (0.075, 0.05),
        (0.075, 0.673),
        (0.015, 0.673),
        (0.015, 0.298),
        (-0.015, 0.298),
    ];
    let mut twice = 0.0f64;
    for i in 0..outline.len() {
        let (x0, y0) = outline[i];
        let (x1, y1) = outline[(i + 1) % outline.len()];
        twice += x0 * y1 - x1 * y0;
    }
    twice.abs() / 2.0 - PI * 0.015f64.powi(2) / 2.0
}

#[test]
fn square_area_and_curved_midpoints() {
    let m = square(0.1);
    let exact = 9.0 - PI * (2.0f64 / 3.0).powi(2);
    assert!((m.area() - exact).abs() < 1e-6, "area {}", m.area());
    for f in m.facets.iter().filter(|f| f.tag == BoundaryTag::Gamma) {
        assert!((m.nodes[f.nodes[2]].norm() - 2.0 / 3.0).abs() < 1e-12);
    }
}

#[test]
fn square_boundary_measures() {
    let m = square(0.1);
    let gamma = m.boundary_quadrature(BoundaryTag::Gamma, 6);
    assert!((gamma.total_weight() - 4.0 * PI / 3.0).abs() < 1e-10);
    for (p, n) in gamma.points.iter().zip(&gamma.normals) {
        assert!(p.dot(*n) < 0.0, "circle normals point into the hole");
        assert!((n.norm() - 1.0).abs() < 1e-13);
    }
    let sigma = m.boundary_quadrature(BoundaryTag::Sigma, 3);
    assert!((sigma.total_weight() - 12.0).abs() < 1e-13);
    let first_moment: f64 = sigma.points.iter().zip(&sigma.weights).map(|(p, w)| p.x * w).sum();
    assert!(first_moment.abs() < 1e-13);
}

#[test]
fn straight_facet_quadrature_exactness() {
    let m = square(0.5);
    for order in 1..=6 {
        let q = m.boundary_quadrature(BoundaryTag::Sigma, order);
        for p in 0..2 * order as i32 {
            let f = |v: Vec2| (v.y + 2.0).powi(p);
            let got: f64 = q.points.iter().zip(&q.weights).map(|(x, w)| w * f(*x)).sum();
            // Vertical sides integrate (y + 2)^p over [-1.5, 1.5]; the
            // horizontal sides see the constants 3.5^p and 0.5^p.
            let side = (3.5f64.powi(p + 1) - 0.5f64.powi(p + 1)) / (p + 1) as f64;
            let exact = 2.0 * side + 3.0 * (3.5f64.powi(p) + 0.5f64.powi(p));
            assert!((got - exact).abs() < 1e-12 * exact, "order {order} power {p}");
        }
    }
}

#[test]
fn coarse_hole_is_rejected() {
    assert!(generate_square_with_hole(1.5, 2.0 / 3.0, 4.0).is_err());
    assert!(generate_square_with_hole(1.5, 2.0, 0.1).is_err());
}

#[test]
fn refinement_bookkeeping() {
    let m = square(0.4);
    let r = m.refine().unwrap();
    assert_eq!(r.num_cells(), 4 * m.num_cells());
    for tag in [BoundaryTag::Gamma, BoundaryTag::Sigma] {
        assert_eq!(r.facet_count(tag), 2 * m.facet_count(tag));
    }
    let exact = 9.0 - PI * (2.0f64 / 3.0).powi(2);
    assert!((r.area() - exact).abs() < 1e-9);
    let twice = r.refine().unwrap();
    assert_eq!(twice, m.refine().unwrap().refine().unwrap());
    for f in twice.facets.iter().filter(|f| f.tag == BoundaryTag::Gamma) {
        for &n in &f.nodes {
            assert!((twice.nodes[n].norm() - 2.0 / 3.0).abs() < 1e-12);
        }
    }
}

#[test]
fn normals_point_out_of_the_domain() {
    for mesh in [square(0.3), generate_tuning_fork(TuningForkOptions::uniform(0.015)).unwrap()] {
        let h = mesh.max_edge_length();
        for tag in [BoundaryTag::Gamma, BoundaryTag::Sigma] {
            let q = mesh.boundary_quadrature(tag, 2);
            for (p, n) in q.points.iter().zip(&q.normals) {
                let eps = 1e-6 * h;
                assert!(mesh.locate(*p + *n * eps).is_none(), "{tag:?} normal at {p:?}");
                assert!(mesh.locate(*p - *n * eps).is_some(), "{tag:?} inside at {p:?}");
            }
        }
    }
}

#[test]
fn tuning_fork_area_and_topology() {
    let m = generate_tuning_fork(TuningForkOptions::uniform(0.015)).unwrap();
    let exact = 0.225 * 0.723 - fork_area();
    assert!((m.area() - exact).abs() < 1e-6, "area {} vs {}", m.area(), exact);
    assert!(m.locate(Vec2::new(-0.0375, 0.1665)).is_none());
    assert!(m.locate(Vec2::new(0.0, 0.29)).is_some(), "half disc under the slot is meshed");
    assert!(m.locate(Vec2::new(0.0, 0.28)).is_none());
    let gamma = m.boundary_quadrature(BoundaryTag::Gamma, 4);
    let perimeter = 2.0 * 0.623 + 0.15 + 2.0 * 0.06 + 2.0 * 0.375 + PI * 0.015;
    assert!((gamma.total_weight() - perimeter).abs() < 1e-10);
    let sigma = m.boundary_quadrature(BoundaryTag::Sigma, 4);
    assert!((sigma.total_weight() - 2.0 * (0.225 + 0.723)).abs() < 1e-12);
    // refined mesh keeps the area
    let r = m.refine().unwrap();
    assert!((r.area() - exact).abs() < 1e-9);
}

#[test]
fn graded_and_wide_fork_variants() {
    let graded = TuningForkOptions { h: 0.015, h_wall: 0.003, half_width: 0.1125 };
    let m = generate_tuning_fork(graded).unwrap();
    let exact = 0.225 * 0.723 - fork_area();
    assert!((m.area() - exact).abs() < 1e-6);
    let wide = TuningForkOptions { half_width: 0.2125, ..TuningForkOptions::uniform(0.015) };
    let w = generate_tuning_fork(wide).unwrap();
    assert!((w.area() - (0.425 * 0.723 - fork_area())).abs() < 1e-6);
}

#[test]
fn msh_file_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("square.msh");
    let m = square(0.5);
    write_msh(&m, &path).unwrap();
    let back = read_msh(&path).unwrap();
    assert_eq!(&back.nodes[..back.vertex_count], &m.nodes[..m.vertex_count]);
    assert_eq!(back.facet_count(BoundaryTag::Gamma), m.facet_count(BoundaryTag::Gamma));
    // quadratic facets reproduce the circle to interpolation accuracy
    let len = back.boundary_quadrature(BoundaryTag::Gamma, 6).total_weight();
    assert!((len - 4.0 * PI / 3.0).abs() < 1e-4);
    let refined = back.refine().unwrap();
    assert!(refined.area() > 0.0);
}

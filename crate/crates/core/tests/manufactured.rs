use mi_core::manufactured::{sample_grid, BoundingBox, PointSourceSolution, FORK_SOURCE, SQUARE_SOURCE};
use mi_core::params::{Model, PhysicalParams};
use mi_core::{Error, Vec2};
use num_complex::Complex64;

fn model() -> Model {
    Model::new(PhysicalParams::default()).unwrap()
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn rel(a: Complex64, b: Complex64) -> f64 {
    (a - b).norm() / b.norm()
}

#[test]
fn zero_amplitudes_give_zero_fields() {
    let mut s = PointSourceSolution::new(model(), SQUARE_SOURCE);
    s.amplitudes = [c(0.0, 0.0), c(0.0, 0.0)];
    for p in [Vec2::new(1.0, 0.3), Vec2::new(-0.2, 0.9)] {
        assert_eq!(s.exact_fields(p).unwrap(), [c(0.0, 0.0); 2]);
        assert_eq!(s.field_normal_derivative(p, Vec2::new(1.0, 0.0)).unwrap(), [c(0.0, 0.0); 2]);
    }
}

#[test]
fn source_point_is_singular() {
    let s = PointSourceSolution::new(model(), FORK_SOURCE);
    assert!(matches!(s.exact_fields(FORK_SOURCE), Err(Error::Domain(_))));
    assert!(s.exact_neumann(&[FORK_SOURCE], &[Vec2::new(0.0, 1.0)]).is_err());
    assert!(s.exact_neumann(&[Vec2::new(1.0, 1.0)], &[]).is_err());
}

/// Residual of the five-point discretization of the field equations,
/// divided by the largest term so that it reads as a relative size.
fn fd_pde_residual(s: &PointSourceSolution, x: Vec2, h: f64) -> f64 {
    let p = s.model.phys;
    let (g, m, l) = (p.gamma, p.m, p.lambda);
    let u = |dx: f64, dy: f64| s.exact_fields(Vec2::new(x.x + dx, x.y + dy)).unwrap();
    let centre = u(0.0, 0.0);
    let around = [u(h, 0.0), u(-h, 0.0), u(0.0, h), u(0.0, -h)];
    let lap = [0, 1].map(|f| (around.iter().map(|v| v[f]).sum::<Complex64>() - centre[f] * 4.0) / (h * h));
    let i = c(0.0, 1.0);
    let (t, pr) = (centre[0], centre[1]);
    let a = g * (1.0 - l / m);
    let terms_t = [-lap[0] * m, -i * t, i * (g - 1.0) / g * pr];
    let terms_p = [t * a, -lap[1] * c(1.0, -g * l), -pr * (a + l / m)];
    let scale = terms_t.iter().chain(&terms_p).map(|z| z.norm()).fold(0.0, f64::max);
    let r_t: Complex64 = terms_t.iter().sum();
    let r_p: Complex64 = terms_p.iter().sum();
    r_t.norm().max(r_p.norm()) / scale
}

#[test]
fn fields_satisfy_the_pde_to_second_order() {
    let s = PointSourceSolution::new(model(), SQUARE_SOURCE);
    for theta in [0.3f64, 1.9, 4.0] {
        let x = Vec2::new(theta.cos(), theta.sin());
        let coarse = fd_pde_residual(&s, x, 0.02);
        let fine = fd_pde_residual(&s, x, 0.01);
        assert!(fine < 1e-4, "{fine:e}");
        let ratio = coarse / fine;
        assert!((3.0..5.0).contains(&ratio), "ratio {ratio}");
    }
}

#[test]
fn thermal_mode_is_small_away_from_the_fork() {
    let s = PointSourceSolution::new(model(), FORK_SOURCE);
    // 0.1 outside the base, the outer tine wall and the slot end
    for p in [Vec2::new(-0.0375, -0.05), Vec2::new(-0.175, 0.1665), Vec2::new(0.0, 0.198)] {
        let v = s.exact_modes(p).unwrap();
        assert!(v[0].norm() / v[1].norm() < 1e-3, "{p:?}");
    }
}

#[test]
fn flipping_normals_negates_data() {
    let s = PointSourceSolution::new(model(), FORK_SOURCE);
    let pts = [Vec2::new(0.0, 0.3), Vec2::new(-0.02, 0.17), Vec2::new(0.1, 0.7)];
    let n = [Vec2::new(0.6, 0.8), Vec2::new(-1.0, 0.0), Vec2::new(0.0, 1.0)];
    let flipped: Vec<Vec2> = n.iter().map(|&v| v * -1.0).collect();
    let a = s.exact_neumann(&pts, &n).unwrap();
    let b = s.exact_neumann(&pts, &flipped).unwrap();
    for (x, y) in a.iter().zip(&b) {
        assert_eq!(x[0], -y[0]);
        assert_eq!(x[1], -y[1]);
    }
}

fn fd_normal_derivative(s: &PointSourceSolution, x: Vec2, n: Vec2, h: f64) -> [Complex64; 2] {
    let f = |t: f64| s.exact_fields(x + n * t).unwrap();
    let (p, m) = (f(h), f(-h));
    [0, 1].map(|k| (p[k] - m[k]) / (2.0 * h))
}

#[test]
fn analytic_derivatives_match_differences() {
    let s = PointSourceSolution::new(model(), SQUARE_SOURCE);
    let n = Vec2::new(0.6, -0.8);
    for x in [Vec2::new(0.7, 0.1), Vec2::new(-0.4, 1.2), Vec2::new(1.4, -1.4)] {
        let want = fd_normal_derivative(&s, x, n, 1e-5);
        let got = s.field_normal_derivative(x, n).unwrap();
        for k in 0..2 {
            assert!(rel(got[k], want[k]) < 1e-8, "{x:?} field {k}");
        }
    }
    // thermal mode alone, close to the source where it is resolved
    let mut thermal = PointSourceSolution::new(model(), SQUARE_SOURCE);
    thermal.amplitudes[1] = c(0.0, 0.0);
    let x = Vec2::new(0.03, 0.04);
    let want = fd_normal_derivative(&thermal, x, n, 1e-6);
    let got = thermal.field_normal_derivative(x, n).unwrap();
    for k in 0..2 {
        assert!(rel(got[k], want[k]) < 1e-7, "thermal field {k}");
    }
}

#[test]
fn field_data_maps_back_to_mode_data() {
    let s = PointSourceSolution::new(model(), FORK_SOURCE);
    let n = Vec2::new(0.0, -1.0);
    for x in [Vec2::new(-0.0375, 0.05), Vec2::new(-0.015, 0.2), Vec2::new(0.05, 0.6)] {
        let fields = s.field_normal_derivative(x, n).unwrap();
        let modes = s.mode_normal_derivative(x, n).unwrap();
        let back = s.model.decouple.to_modes(fields);
        for k in 0..2 {
            assert!((back[k] - modes[k]).norm() <= 1e-12 * modes[k].norm().max(modes[1].norm()), "{x:?} mode {k}");
        }
    }
}

#[test]
fn grid_layout_and_missing_values() {
    let bbox = BoundingBox::new(Vec2::new(-1.0, -2.0), Vec2::new(1.0, 2.0)).unwrap();
    let g = sample_grid(bbox, 4, |p| (p.x >= 0.0).then(|| [c(p.x, 0.0), c(p.y, 0.0)])).unwrap();
    assert_eq!(g.points.len(), 25);
    assert_eq!(g.points[0], Vec2::new(-1.0, -2.0));
    assert_eq!(g.points[4], Vec2::new(1.0, -2.0));
    assert_eq!(g.points[24], Vec2::new(1.0, 2.0));
    // mirror symmetry of the lattice about x = 0
    for j in 0..5 {
        for i in 0..5 {
            assert_eq!(g.points[j * 5 + i].x, -g.points[j * 5 + 4 - i].x);
        }
    }
    assert!(g.values[1].is_none() && g.values[2].is_some());
    let mut out = Vec::new();
    g.write_csv(["T", "P"], &mut out).unwrap();
    let text = String::from_utf8(out).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "x,y,T_re,T_im,P_re,P_im");
    assert_eq!(lines.len(), 26);
    assert!(lines[1].ends_with(",,,,"));
    assert!(!lines[3].ends_with(",,,,"));
}

#[test]
fn exact_mode_grid_shows_thermal_decay() {
    let s = PointSourceSolution::new(model(), SQUARE_SOURCE);
    let bbox = BoundingBox::new(Vec2::new(-1.5, -1.5), Vec2::new(1.5, 1.5)).unwrap();
    let g = sample_grid(bbox, 12, |p| (p.norm() > 2.0 / 3.0).then(|| s.exact_modes(p).unwrap())).unwrap();
    let max = |k: usize| g.values.iter().flatten().map(|v| v[k].norm()).fold(0.0, f64::max);
    assert!(max(0) < 1e-4 * max(1));
}

#[test]
fn invalid_grids_are_rejected() {
    assert!(matches!(BoundingBox::new(Vec2::new(0.0, 0.0), Vec2::new(0.0, 1.0)), Err(Error::Config(_))));
    let bbox = BoundingBox::new(Vec2::new(0.0, 0.0), Vec2::new(1.0, 1.0)).unwrap();
    assert!(sample_grid(bbox, 0, |_| None).is_err());
}

#[test]
fn unit_resolution_gives_corners() {
    let bbox = BoundingBox::new(Vec2::new(-1.0, 0.0), Vec2::new(2.0, 3.0)).unwrap();
    let g = sample_grid(bbox, 1, |_| None).unwrap();
    let want = [Vec2::new(-1.0, 0.0), Vec2::new(2.0, 0.0), Vec2::new(-1.0, 3.0), Vec2::new(2.0, 3.0)];
    assert_eq!(g.points, want);
}

#[test]
fn centred_source_gives_mirror_symmetric_grid() {
    let s = PointSourceSolution::new(model(), SQUARE_SOURCE);
    let bbox = BoundingBox::new(Vec2::new(-1.5, -1.5), Vec2::new(1.5, 1.5)).unwrap();
    let n = 10;
    let g = sample_grid(bbox, n, |p| (p.norm() > 2.0 / 3.0).then(|| s.exact_fields(p).unwrap())).unwrap();
    for j in 0..=n {
        for i in 0..=n {
            let (a, b) = (g.values[j * (n + 1) + i], g.values[j * (n + 1) + n - i]);
            assert_eq!(a.is_some(), b.is_some());
            if let (Some(a), Some(b)) = (a, b) {
                for k in 0..2 {
                    assert!((a[k] - b[k]).norm() <= 1e-12 * a[k].norm().max(1e-300));
                }
            }
        }
    }
}

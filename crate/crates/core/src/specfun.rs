//! Hankel functions of the first kind at complex argument and the
//! free-space Helmholtz kernels with their first and mixed second
//! directional derivatives.
//!
//! `H_0^(1)` and `H_1^(1)` are always produced together. Two regimes cover
//! the closed upper half-plane:
//!
//! * `|z| <= SERIES_RADIUS`: ascending series for `J_n` and `Y_n`;
//! * otherwise: the Laplace-type integral
//!   `H_n(z) = sqrt(2/(pi z)) e^{i(z - n pi/2 - pi/4)} / Gamma(n + 1/2)
//!    * int_0^inf e^{-u} u^{n-1/2} (1 + i u / (2z))^{n-1/2} du`,
//!   evaluated with the substitution `u = s^2` and the trapezoidal rule on
//!   the real line. The integrand is analytic in a strip of half-width
//!   `sqrt|z|`, so the rule converges geometrically and the result carries
//!   the factor `e^{iz}` exactly; this is what keeps relative accuracy when
//!   `Im z` is large and `J`, `Y` individually are huge.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};
use std::sync::OnceLock;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::point::Vec2;

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
const SERIES_RADIUS: f64 = 2.0;
/// `e^{-s^2}` is below 1e-18 past this abscissa.
const TRAPEZOID_CUTOFF: f64 = 6.5;
/// Beyond this `Im(kappa) |r|` every kernel quantity is below 1e-300.
const UNDERFLOW_EXPONENT: f64 = 690.0;
const STEP_LADDER: [f64; 8] = [0.1, 0.125, 0.15, 0.2, 0.25, 0.3, 0.4, 0.5];

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Kernel value and its gradient with respect to the target point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelValue {
    pub value: Complex64,
    pub gradient: [Complex64; 2],
}

/// `H_order^(1)(z)` for `order` in {0, 1} and `Im z >= 0`.
pub fn hankel1(order: u32, z: Complex64) -> Result<Complex64> {
    if order > 1 {
        return Err(Error::Domain(format!("Hankel order {order} is not supported")));
    }
    let (h0, h1) = hankel01(z)?;
    Ok(if order == 0 { h0 } else { h1 })
}

/// `(H_0^(1)(z), H_1^(1)(z))`.
pub fn hankel01(z: Complex64) -> Result<(Complex64, Complex64)> {
    if !(z.re.is_finite() && z.im.is_finite()) {
        return Err(Error::Domain(format!("non-finite argument {z}")));
    }
    if z.re == 0.0 && z.im == 0.0 {
        return Err(Error::Domain("Hankel function is singular at z = 0".into()));
    }
    if z.im < 0.0 {
        return Err(Error::Domain(format!("argument {z} lies in the lower half-plane")));
    }
    if z.norm() <= SERIES_RADIUS {
        Ok(ascending_series(z))
    } else if z.im > UNDERFLOW_EXPONENT + 50.0 {
        Ok((Complex64::default(), Complex64::default()))
    } else {
        Ok(laplace_integral(z))
    }
}

fn ascending_series(z: Complex64) -> (Complex64, Complex64) {
    let w = z * z * 0.25;
    let half_z = z * 0.5;
    let log_half = half_z.ln();

    // J0 = sum t_k, t_k = (-w)^k / (k!)^2; the Y0 tail is -sum H_k t_k.
    let mut t = Complex64::new(1.0, 0.0);
    let mut j0 = t;
    let mut y0_tail = Complex64::default();
    // J1 = (z/2) sum u_k, u_k = (-w)^k / (k! (k+1)!); the Y1 tail weights
    // u_k by psi(k+1) + psi(k+2) = 2 H_k + 1/(k+1) - 2 gamma.
    let mut u = Complex64::new(1.0, 0.0);
    let mut j1_sum = u;
    let mut y1_tail = u * (1.0 - 2.0 * EULER_GAMMA);
    let mut harmonic = 0.0;
    for k in 1..60 {
        let kf = k as f64;
        harmonic += 1.0 / kf;
        t *= -w / (kf * kf);
        u *= -w / (kf * (kf + 1.0));
        j0 += t;
        y0_tail -= t * harmonic;
        j1_sum += u;
        y1_tail += u * (2.0 * harmonic + 1.0 / (kf + 1.0) - 2.0 * EULER_GAMMA);
        if t.norm() < 1e-18 * j0.norm().max(1e-300) && u.norm() < 1e-18 * j1_sum.norm().max(1e-300)
        {
            break;
        }
    }
    let j1 = half_z * j1_sum;
    let y0 = ((log_half + EULER_GAMMA) * j0 + y0_tail) * (2.0 / PI);
    let y1 = -2.0 / (PI * z) + log_half * j1 * (2.0 / PI) - half_z * y1_tail / PI;
    (j0 + I * y0, j1 + I * y1)
}

struct TrapezoidRule {
    /// `(s^2, weight * e^{-s^2})` for the nonnegative nodes; the weight of
    /// the origin is `h`, every other node counts twice by symmetry.
    nodes: Vec<(f64, f64)>,
}

fn trapezoid_rules() -> &'static [TrapezoidRule] {
    static RULES: OnceLock<Vec<TrapezoidRule>> = OnceLock::new();
    RULES.get_or_init(|| {
        STEP_LADDER
            .iter()
            .map(|&h| {
                let n = (TRAPEZOID_CUTOFF / h).ceil() as usize;
                let nodes = (0..=n)
                    .map(|j| {
                        let s2 = (j as f64 * h).powi(2);
                        let w = if j == 0 { h } else { 2.0 * h };
                        (s2, w * (-s2).exp())
                    })
                    .collect();
                TrapezoidRule { nodes }
            })
            .collect()
    })
}

fn laplace_integral(z: Complex64) -> (Complex64, Complex64) {
    // Strip half-width a: stay inside the branch points at s^2 = 2iz
    // (distance >= sqrt|z| from the real line) and balance the e^{a^2}
    // growth of e^{-s^2} against the e^{-2 pi a / h} trapezoid decay.
    let a = (0.9 * z.norm().sqrt()).min(40f64.sqrt());
    let h_max = 2.0 * PI * a / (a * a + 40.0);
    let rules = trapezoid_rules();
    let idx = STEP_LADDER.iter().rposition(|&h| h <= h_max).unwrap_or(0);
    let rule = &rules[idx];

    let shift = I / (2.0 * z);
    let mut int0 = Complex64::default();
    let mut int1 = Complex64::default();
    for &(s2, w) in &rule.nodes {
        let q = (1.0 + shift * s2).sqrt();
        int0 += w / q;
        int1 += (w * s2) * q;
    }
    let prefactor = (2.0 / (PI * z)).sqrt() / PI.sqrt();
    let phase0 = (I * (z - FRAC_PI_4)).exp();
    let phase1 = (I * (z - FRAC_PI_2 - FRAC_PI_4)).exp();
    (prefactor * phase0 * int0, prefactor * phase1 * int1 * 2.0)
}

/// Radial profile `f(rho) = (i/4) H_0(kappa rho)` and its first two
/// derivatives in `rho`.
#[derive(Debug, Clone, Copy)]
struct RadialProfile {
    f: Complex64,
    df: Complex64,
    d2f: Complex64,
}

fn radial_profile(kappa: Complex64, rho: f64) -> Result<RadialProfile> {
    if !(rho > 0.0) {
        return Err(Error::Domain("kernel evaluated at coincident points".into()));
    }
    if kappa.im * rho > UNDERFLOW_EXPONENT {
        let zero = Complex64::default();
        return Ok(RadialProfile { f: zero, df: zero, d2f: zero });
    }
    let z = kappa * rho;
    let (h0, h1) = hankel01(z)?;
    // H_1' = H_0 - H_1 / z, equivalently (H_0 - H_2) / 2 with
    // H_2 = (2/z) H_1 - H_0.
    Ok(RadialProfile {
        f: 0.25 * I * h0,
        df: -0.25 * I * kappa * h1,
        d2f: -0.25 * I * kappa * kappa * (h0 - h1 / z),
    })
}

/// 2D free-space kernel `(i/4) H_0^(1)(kappa |r|)`.
pub fn kernel_2d(kappa: Complex64, r: Vec2) -> Result<Complex64> {
    Ok(radial_profile(kappa, r.norm())?.f)
}

/// 3D free-space kernel `e^{i kappa |r|} / (4 pi |r|)`.
pub fn kernel_3d(kappa: Complex64, r: [f64; 3]) -> Result<Complex64> {
    let rho = (r[0] * r[0] + r[1] * r[1] + r[2] * r[2]).sqrt();
    if !(rho > 0.0) {
        return Err(Error::Domain("kernel evaluated at coincident points".into()));
    }
    Ok((I * kappa * rho).exp() / (4.0 * PI * rho))
}

/// Dimension-dispatching kernel; `r` must have two or three components.
pub fn kernel(kappa: Complex64, r: &[f64]) -> Result<Complex64> {
    match *r {
        [x, y] => kernel_2d(kappa, Vec2::new(x, y)),
        [x, y, z] => kernel_3d(kappa, [x, y, z]),
        _ => Err(Error::Domain(format!("kernel dimension {} is not 2 or 3", r.len()))),
    }
}

/// Value and target gradient of the 2D kernel at displacement `r = x - y`.
pub fn kernel_with_gradient(kappa: Complex64, r: Vec2) -> Result<KernelValue> {
    let rho = r.norm();
    let p = radial_profile(kappa, rho)?;
    let g = p.df / rho;
    Ok(KernelValue { value: p.f, gradient: [g * r.x, g * r.y] })
}

/// Double-layer kernel `dK(x - y)/dn_y` at `r = x - y`.
pub fn kernel_dny(kappa: Complex64, r: Vec2, n_y: Vec2) -> Result<Complex64> {
    let rho = r.norm();
    let p = radial_profile(kappa, rho)?;
    Ok(-p.df * (r.dot(n_y) / rho))
}

/// Mixed derivative `d^2 K(x - y) / dn_x dn_y` at `r = x - y`.
pub fn kernel_dnx_dny(kappa: Complex64, r: Vec2, n_x: Vec2, n_y: Vec2) -> Result<Complex64> {
    let rho = r.norm();
    let p = radial_profile(kappa, rho)?;
    Ok(mixed_second(&p, r, rho, n_x, n_y))
}

fn mixed_second(p: &RadialProfile, r: Vec2, rho: f64, n_x: Vec2, n_y: Vec2) -> Complex64 {
    let cx = r.dot(n_x) / rho;
    let cy = r.dot(n_y) / rho;
    -(p.d2f * (cx * cy) + p.df / rho * (n_x.dot(n_y) - cx * cy))
}

/// Everything the layer-potential quadratures need from one Hankel pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelDerivatives {
    /// `K`
    pub value: Complex64,
    /// `dK/dn_x`
    pub dnx: Complex64,
    /// `dK/dn_y`
    pub dny: Complex64,
    /// `d^2 K / dn_x dn_y`
    pub dnx_dny: Complex64,
}

pub fn kernel_derivatives(
    kappa: Complex64,
    r: Vec2,
    n_x: Vec2,
    n_y: Vec2,
) -> Result<KernelDerivatives> {
    let rho = r.norm();
    let p = radial_profile(kappa, rho)?;
    Ok(KernelDerivatives {
        value: p.f,
        dnx: p.df * (r.dot(n_x) / rho),
        dny: -p.df * (r.dot(n_y) / rho),
        dnx_dny: mixed_second(&p, r, rho, n_x, n_y),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn rel(a: Complex64, b: Complex64) -> f64 {
        (a - b).norm() / b.norm()
    }

    #[test]
    fn unit_argument_values() {
        // J_0(1), Y_0(1), J_1(1), Y_1(1) from the power series at 30 digits.
        let h0 = hankel1(0, c(1.0, 0.0)).unwrap();
        let h1 = hankel1(1, c(1.0, 0.0)).unwrap();
        assert!(rel(h0, c(0.765_197_686_557_966_6, 0.088_256_964_215_676_96)) < 1e-14);
        assert!(rel(h1, c(0.440_050_585_744_933_5, -0.781_212_821_300_288_7)) < 1e-14);
    }

    #[test]
    fn decays_on_the_imaginary_axis() {
        let h = hankel1(0, c(0.0, 100.0)).unwrap();
        assert!(h.norm() < 1e-40);
        let h = hankel1(1, c(0.0, 1.0e4)).unwrap();
        assert_eq!(h, Complex64::default());
    }

    #[test]
    fn regimes_agree_at_the_switch() {
        for k in 0..16 {
            let theta = PI * k as f64 / 15.0;
            let z = Complex64::from_polar(SERIES_RADIUS, theta);
            let (s0, s1) = ascending_series(z);
            let (l0, l1) = laplace_integral(z);
            assert!(rel(s0, l0) < 1e-13, "H0 at {z}: {}", rel(s0, l0));
            assert!(rel(s1, l1) < 1e-13, "H1 at {z}: {}", rel(s1, l1));
        }
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(hankel1(0, c(0.0, 0.0)).is_err());
        assert!(hankel1(2, c(1.0, 0.0)).is_err());
        assert!(hankel1(0, c(1.0, -0.5)).is_err());
        assert!(hankel1(0, c(f64::NAN, 0.0)).is_err());
        assert!(kernel_2d(c(1.0, 0.0), Vec2::new(0.0, 0.0)).is_err());
        assert!(kernel(c(1.0, 0.0), &[1.0]).is_err());
    }

    #[test]
    fn wronskian_on_the_real_axis() {
        for k in 0..=200 {
            let x = 0.1 * (1000f64).powf(k as f64 / 200.0);
            let (h0, h1) = hankel01(c(x, 0.0)).unwrap();
            let w = h0.re * h1.im - h1.re * h0.im;
            let expected = -2.0 / (PI * x);
            assert!(((w - expected) / expected).abs() < 1e-12, "x = {x}: {w} vs {expected}");
        }
    }

    #[test]
    fn logarithmic_small_argument_behaviour() {
        let mut prev = f64::INFINITY;
        for k in 1..12 {
            let x = 10f64.powi(-k);
            let h0 = hankel1(0, c(x, 0.0)).unwrap();
            let remainder = h0 - 1.0 - c(0.0, 2.0 / PI) * c(x / 2.0, 0.0).ln();
            assert!(remainder.norm() < 1.0);
            assert!(remainder.norm() <= prev + 1e-12);
            prev = remainder.norm();
        }
    }

    #[test]
    fn kernel_depends_on_kappa_times_distance() {
        let r = Vec2::new(0.3, -0.4);
        let a = kernel_2d(c(2.0, 0.0), r).unwrap();
        let b = kernel_2d(c(1.0, 0.0), r * 2.0).unwrap();
        assert_relative_eq!(a.re, b.re, epsilon = 1e-15);
        assert_relative_eq!(a.im, b.im, epsilon = 1e-15);
    }

    #[test]
    fn kernel_2d_at_unit_distance() {
        let k = kernel(c(1.0, 0.0), &[0.6, 0.8]).unwrap();
        let expected = 0.25 * I * c(0.765_197_686_557_966_6, 0.088_256_964_215_676_96);
        assert!(rel(k, expected) < 1e-14);
    }

    #[test]
    fn kernel_3d_unit_distance() {
        // e^{i}/(4 pi) = (cos 1 + i sin 1) / (4 pi)
        let k = kernel(c(1.0, 0.0), &[1.0, 0.0, 0.0]).unwrap();
        assert_relative_eq!(k.re, 0.042_995_891_371_431_81, epsilon = 1e-15);
        assert_relative_eq!(k.im, 0.066_962_133_350_290_94, epsilon = 1e-15);
    }

    #[test]
    fn double_layer_kernel_sign_and_orthogonality() {
        let kappa = c(1.0, 0.0);
        let r = Vec2::new(0.6, 0.8);
        let perp = Vec2::new(-0.8, 0.6);
        assert_eq!(kernel_dny(kappa, r, perp).unwrap().norm(), 0.0);
        // n_y along r: dK/dn_y = (i kappa / 4) H_1(kappa |r|)
        let along = kernel_dny(kappa, r, r.normalized()).unwrap();
        let expected = 0.25 * I * c(0.440_050_585_744_933_5, -0.781_212_821_300_288_7);
        assert!(rel(along, expected) < 1e-14);
    }

    #[test]
    fn derivatives_match_finite_differences() {
        let kappas = [c(1.0, 0.0), c(1.0, 3.4e-5), c(3.0, 1.5)];
        let x = Vec2::new(0.31, -0.42);
        let y = Vec2::new(-0.5, 0.2);
        let n_x = Vec2::new(0.6, 0.8);
        let n_y = Vec2::new(-0.28, 0.96);
        for &kappa in &kappas {
            let k = |x: Vec2, y: Vec2| kernel_2d(kappa, x - y).unwrap();
            let step = 1e-6;
            let fd_y = (k(x, y + n_y * step) - k(x, y - n_y * step)) / (2.0 * step);
            let dny = kernel_dny(kappa, x - y, n_y).unwrap();
            assert!((fd_y - dny).norm() < 1e-8, "{kappa}: {fd_y} vs {dny}");

            let grad = kernel_with_gradient(kappa, x - y).unwrap().gradient;
            let fd_x = (k(x + n_x * step, y) - k(x - n_x * step, y)) / (2.0 * step);
            assert!((fd_x - (grad[0] * n_x.x + grad[1] * n_x.y)).norm() < 1e-8);

            // fourth-order nested stencil keeps roundoff below 1e-9
            let s = 1e-3;
            let d4 = |f: &dyn Fn(f64) -> Complex64| {
                (8.0 * (f(s) - f(-s)) - (f(2.0 * s) - f(-2.0 * s))) / (12.0 * s)
            };
            let fd2 = d4(&|a| d4(&|b| k(x + n_x * a, y + n_y * b)));
            let d2 = kernel_dnx_dny(kappa, x - y, n_x, n_y).unwrap();
            assert!(rel(fd2, d2) < 1e-6, "{kappa}: {fd2} vs {d2}");
        }
    }

    #[test]
    fn mixed_derivative_is_symmetric_under_role_swap() {
        let kappa = c(1.0, 3.4e-5);
        let r = Vec2::new(0.7, 0.2);
        let n_x = Vec2::new(0.0, 1.0);
        let n_y = Vec2::new(0.6, -0.8);
        let a = kernel_dnx_dny(kappa, r, n_x, n_y).unwrap();
        let b = kernel_dnx_dny(kappa, -r, n_y, n_x).unwrap();
        assert!((a - b).norm() < 1e-15 * a.norm());
    }

    #[test]
    fn second_order_recurrence_matches_series() {
        // H_2(1) from J_2(1) = 0.11490348493190048, Y_2(1) = -1.6506826068162546
        let (h0, h1) = hankel01(c(1.0, 0.0)).unwrap();
        let h2 = 2.0 * h1 - h0;
        assert!(rel(h2, c(0.114_903_484_931_900_48, -1.650_682_606_816_254_6)) < 1e-12);
    }

    #[test]
    fn kernel_solves_helmholtz_away_from_origin() {
        let kt = c(116.814_491_189_089_5, 116.815_288_530_047_2);
        for &(kappa, h) in &[(c(1.0, 0.0), 1e-2), (kt, 1e-3)] {
            let x = Vec2::new(0.6, 0.8);
            let k = |p: Vec2| kernel_2d(kappa, p).unwrap();
            let residual = |h: f64| {
                let lap = (k(x + Vec2::new(h, 0.0))
                    + k(x - Vec2::new(h, 0.0))
                    + k(x + Vec2::new(0.0, h))
                    + k(x - Vec2::new(0.0, h))
                    - 4.0 * k(x))
                    / (h * h);
                (lap + kappa * kappa * k(x)).norm()
            };
            let scale = (kappa * kappa * k(x)).norm();
            let (r1, r2) = (residual(h), residual(h / 2.0));
            assert!(r1 < 0.05 * scale, "{kappa}: {r1} vs {scale}");
            let ratio = r1 / r2;
            assert!((3.5..4.5).contains(&ratio), "{kappa}: h^2 ratio {ratio}");
        }
    }

    #[test]
    fn derivative_bundle_matches_individual_calls() {
        let kappa = c(1.0, 0.2);
        let r = Vec2::new(-0.3, 0.45);
        let n_x = Vec2::new(1.0, 0.0);
        let n_y = Vec2::new(0.0, -1.0);
        let d = kernel_derivatives(kappa, r, n_x, n_y).unwrap();
        assert_eq!(d.value, kernel_2d(kappa, r).unwrap());
        assert_eq!(d.dny, kernel_dny(kappa, r, n_y).unwrap());
        assert_eq!(d.dnx_dny, kernel_dnx_dny(kappa, r, n_x, n_y).unwrap());
        let g = kernel_with_gradient(kappa, r).unwrap().gradient;
        assert!((d.dnx - g[0]).norm() < 1e-16);
    }
}

//! Gas constants, the mode decoupling of the Morse-Ingard system and the
//! 2x2 matrices that appear in its boundary conditions.
//!
//! With `U = (T, P)` the scattered-field system reads `-E ΔU + C U = 0`.
//! The matrix `B` maps `U` to the mode fields `V = B U`, each of which
//! solves a scalar Helmholtz equation: `B E^{-1} C B^{-1} = diag(-k_t^2, -k_p^2)`.

use std::ops::{Add, Mul, Neg, Sub};
use std::path::Path;

use num_complex::Complex64;
use serde::Deserialize;

use crate::error::{Error, Result};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Ratio of specific heats, thermal scale ratio and viscous scale ratio.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalParams {
    pub gamma: f64,
    pub m: f64,
    pub lambda: f64,
}

impl Default for PhysicalParams {
    /// Air at room temperature and 1 kHz.
    fn default() -> Self {
        Self { gamma: 1.4, m: 3.664152973215096e-5, lambda: 5.370572762330994e-5 }
    }
}

impl PhysicalParams {
    pub fn new(gamma: f64, m: f64, lambda: f64) -> Result<Self> {
        let p = Self { gamma, m, lambda };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let Self { gamma, m, lambda } = *self;
        if !(gamma.is_finite() && m.is_finite() && lambda.is_finite()) {
            return Err(Error::InvalidParams("parameters must be finite".into()));
        }
        if gamma <= 1.0 {
            return Err(Error::InvalidParams(format!("gamma = {gamma} must exceed 1")));
        }
        if m <= 0.0 || lambda <= 0.0 {
            return Err(Error::InvalidParams(format!(
                "M = {m} and Lambda = {lambda} must be positive"
            )));
        }
        if (m - lambda).abs() <= 1e-12 * m.max(lambda) {
            return Err(Error::InvalidParams(format!("M = {m} must differ from Lambda = {lambda}")));
        }
        Ok(())
    }

    /// Parses `gamma = ...`, `M = ...`, `Lambda = ...`; missing keys keep
    /// their default values.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        #[derive(Deserialize)]
        #[serde(deny_unknown_fields)]
        struct Partial {
            gamma: Option<f64>,
            #[serde(rename = "M")]
            m: Option<f64>,
            #[serde(rename = "Lambda")]
            lambda: Option<f64>,
        }
        let partial: Partial =
            toml::from_str(text).map_err(|e| Error::Config(e.message().to_string()))?;
        let d = Self::default();
        Self::new(
            partial.gamma.unwrap_or(d.gamma),
            partial.m.unwrap_or(d.m),
            partial.lambda.unwrap_or(d.lambda),
        )
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_toml_str(&std::fs::read_to_string(path)?)
    }

    /// `1 - i gamma Lambda`, the pressure diffusion coefficient.
    pub fn pressure_coefficient(&self) -> Complex64 {
        Complex64::new(1.0, -self.gamma * self.lambda)
    }
}

/// Derived mode data: `Q`, the row parameters `t_+`, `t_-` of `B` and the
/// thermal and acoustic wavenumbers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecoupledParams {
    pub q: Complex64,
    pub t_plus: Complex64,
    pub t_minus: Complex64,
    pub k_t: Complex64,
    pub k_p: Complex64,
}

fn first_quadrant(k: Complex64) -> bool {
    k.re > 0.0 && k.im > 0.0
}

pub fn derive_decoupled(p: &PhysicalParams) -> Result<DecoupledParams> {
    p.validate()?;
    let PhysicalParams { gamma: g, m, lambda: l } = *p;
    let c = p.pressure_coefficient();
    let base = Complex64::new(1.0, -g * m - l);
    let q2 = 4.0 * Complex64::new(g * m * l, m) + base * base;
    let root = q2.sqrt();
    let t_den = 2.0 * g * (l - m) * Complex64::new(-1.0, l * g);
    let t_num = Complex64::new(2.0 * l * g - l - m * g, 1.0) * m;

    for q in [root, -root] {
        let kt2 = I / (2.0 * m) * (base + q) / c;
        let kp2 = I / (2.0 * m) * (base - q) / c;
        let kt_root = kt2.sqrt();
        let kp_root = kp2.sqrt();
        for k_t in [kt_root, -kt_root] {
            for k_p in [kp_root, -kp_root] {
                if first_quadrant(k_t) && first_quadrant(k_p) && k_t.norm() > k_p.norm() {
                    let t_plus = (t_num - I * m * q) / t_den;
                    let t_minus = (t_num + I * m * q) / t_den;
                    if t_plus == t_minus {
                        return Err(Error::InvalidParams("degenerate modes: t+ = t-".into()));
                    }
                    return Ok(DecoupledParams { q, t_plus, t_minus, k_t, k_p });
                }
            }
        }
    }
    Err(Error::InvalidParams(format!(
        "no branch gives first-quadrant wavenumbers for {p:?}"
    )))
}

/// Dense 2x2 complex matrix, row-major.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Mat2(pub [[Complex64; 2]; 2]);

impl Mat2 {
    pub fn new(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> Self {
        Mat2([[a, b], [c, d]])
    }

    pub fn diag(a: Complex64, d: Complex64) -> Self {
        let z = Complex64::default();
        Mat2([[a, z], [z, d]])
    }

    pub fn identity() -> Self {
        Self::diag(Complex64::new(1.0, 0.0), Complex64::new(1.0, 0.0))
    }

    pub fn det(&self) -> Complex64 {
        let [[a, b], [c, d]] = self.0;
        a * d - b * c
    }

    pub fn inverse(&self) -> Result<Self> {
        let det = self.det();
        let scale = self.norm().powi(2);
        if det.norm() < 1e-300 || det.norm() <= 1e-15 * scale {
            return Err(Error::Singular(format!("2x2 determinant {det}")));
        }
        let [[a, b], [c, d]] = self.0;
        Ok(Mat2([[d / det, -b / det], [-c / det, a / det]]))
    }

    /// Frobenius norm.
    pub fn norm(&self) -> f64 {
        self.0.iter().flatten().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn apply(&self, v: [Complex64; 2]) -> [Complex64; 2] {
        let m = &self.0;
        [m[0][0] * v[0] + m[0][1] * v[1], m[1][0] * v[0] + m[1][1] * v[1]]
    }

    pub fn row(&self, i: usize) -> [Complex64; 2] {
        self.0[i]
    }

    pub fn col(&self, j: usize) -> [Complex64; 2] {
        [self.0[0][j], self.0[1][j]]
    }

    pub fn scale(&self, s: Complex64) -> Self {
        let m = &self.0;
        Mat2([[m[0][0] * s, m[0][1] * s], [m[1][0] * s, m[1][1] * s]])
    }

    pub fn entry(&self, i: usize, j: usize) -> Complex64 {
        self.0[i][j]
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().flatten().all(|x| x.re.is_finite() && x.im.is_finite())
    }
}

impl Mul for Mat2 {
    type Output = Mat2;
    fn mul(self, o: Mat2) -> Mat2 {
        let mut r = Mat2::default();
        for i in 0..2 {
            for j in 0..2 {
                r.0[i][j] = self.0[i][0] * o.0[0][j] + self.0[i][1] * o.0[1][j];
            }
        }
        r
    }
}

impl Add for Mat2 {
    type Output = Mat2;
    fn add(self, o: Mat2) -> Mat2 {
        let mut r = self;
        for i in 0..2 {
            for j in 0..2 {
                r.0[i][j] += o.0[i][j];
            }
        }
        r
    }
}

impl Sub for Mat2 {
    type Output = Mat2;
    fn sub(self, o: Mat2) -> Mat2 {
        self + (-o)
    }
}

impl Neg for Mat2 {
    type Output = Mat2;
    fn neg(self) -> Mat2 {
        self.scale(Complex64::new(-1.0, 0.0))
    }
}

/// `B` and its inverse: `V = B U`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecoupleMatrix {
    pub b: Mat2,
    pub b_inv: Mat2,
}

impl DecoupleMatrix {
    /// `(T, P) -> (V_t, V_p)`
    pub fn to_modes(&self, u: [Complex64; 2]) -> [Complex64; 2] {
        self.b.apply(u)
    }

    /// `(V_t, V_p) -> (T, P)`
    pub fn to_fields(&self, v: [Complex64; 2]) -> [Complex64; 2] {
        self.b_inv.apply(v)
    }
}

pub fn decouple_matrix(p: &PhysicalParams, d: &DecoupledParams) -> Result<DecoupleMatrix> {
    let c = p.pressure_coefficient();
    let m = Complex64::new(p.m, 0.0);
    let b = Mat2::new(m, d.t_plus * c, m, d.t_minus * c);
    if b.det().norm() < 1e-300 {
        return Err(Error::Singular("decoupling matrix is degenerate".into()));
    }
    let b_inv = b.inverse()?;
    Ok(DecoupleMatrix { b, b_inv })
}

/// `E = diag(M, 1 - i gamma Lambda)` and the reaction matrix `C`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoefficientMatrices {
    pub e: Mat2,
    pub c: Mat2,
}

pub fn coefficient_matrices(p: &PhysicalParams) -> CoefficientMatrices {
    let g = p.gamma;
    let ratio = p.lambda / p.m;
    let e = Mat2::diag(Complex64::new(p.m, 0.0), p.pressure_coefficient());
    let c = Mat2::new(
        -I,
        I * ((g - 1.0) / g),
        Complex64::new(g * (1.0 - ratio), 0.0),
        Complex64::new(-(g * (1.0 - ratio) + ratio), 0.0),
    );
    CoefficientMatrices { e, c }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BcKind {
    AdHoc,
    Transmission,
}

/// Local boundary condition `E dU/dn = i A U` on the truncation curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BcMatrix {
    pub a: Mat2,
    pub kind: BcKind,
}

/// Robin shifts used by the nonlocal condition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SigmaPair {
    pub sigma_t: Complex64,
    pub sigma_p: Complex64,
}

impl SigmaPair {
    pub fn zero() -> Self {
        Self { sigma_t: Complex64::default(), sigma_p: Complex64::default() }
    }

    pub fn wavenumbers(d: &DecoupledParams) -> Self {
        Self { sigma_t: d.k_t, sigma_p: d.k_p }
    }

    pub fn get(&self, mode: usize) -> Complex64 {
        if mode == 0 {
            self.sigma_t
        } else {
            self.sigma_p
        }
    }
}

/// Everything derived from one parameter set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Model {
    pub phys: PhysicalParams,
    pub modes: DecoupledParams,
    pub decouple: DecoupleMatrix,
    pub coef: CoefficientMatrices,
}

impl Model {
    pub fn new(phys: PhysicalParams) -> Result<Self> {
        let modes = derive_decoupled(&phys)?;
        let decouple = decouple_matrix(&phys, &modes)?;
        Ok(Self { phys, modes, decouple, coef: coefficient_matrices(&phys) })
    }

    pub fn wavenumber(&self, mode: usize) -> Complex64 {
        if mode == 0 {
            self.modes.k_t
        } else {
            self.modes.k_p
        }
    }

    /// `E B^{-1}`: maps mode-space boundary terms back to the conormal
    /// fluxes of `(T, P)`.
    pub fn e_b_inv(&self) -> Mat2 {
        self.coef.e * self.decouple.b_inv
    }

    /// `E B^{-1} diag(s_t, s_p) B`: the condition `dV_j/dn = i s_j V_j`
    /// written for `(T, P)` as `E dU/dn = i A U`.
    pub fn mode_robin_matrix(&self, sigma: SigmaPair) -> Mat2 {
        self.e_b_inv() * Mat2::diag(sigma.sigma_t, sigma.sigma_p) * self.decouple.b
    }

    /// `B E^{-1} C B^{-1}`; diagonal with entries `-k_t^2`, `-k_p^2`.
    pub fn similarity(&self) -> Result<Mat2> {
        Ok(self.decouple.b * self.coef.e.inverse()? * self.coef.c * self.decouple.b_inv)
    }

    /// Relative deviation of [`Model::similarity`] from `diag(-k_t^2, -k_p^2)`.
    pub fn similarity_residual(&self) -> Result<f64> {
        let target = Mat2::diag(-self.modes.k_t.powi(2), -self.modes.k_p.powi(2));
        Ok((self.similarity()? - target).norm() / target.norm())
    }

    pub fn bc_matrix(&self, kind: BcKind) -> BcMatrix {
        bc_matrix(kind, &self.phys, &self.modes)
    }
}

/// The ad hoc condition keeps only `dP/dn = i sqrt(gamma) P`; the
/// transmission condition imposes `dV_j/dn = i k_j V_j` on each mode.
pub fn bc_matrix(kind: BcKind, p: &PhysicalParams, d: &DecoupledParams) -> BcMatrix {
    let c = p.pressure_coefficient();
    let m = p.m;
    let z = Complex64::default();
    let a = match kind {
        BcKind::AdHoc => Mat2::new(z, z, z, p.gamma.sqrt() * c),
        BcKind::Transmission => {
            let (tp, tm, kt, kp) = (d.t_plus, d.t_minus, d.k_t, d.k_p);
            let den = tm - tp;
            Mat2::new(
                m * (tm * kt - tp * kp) / den,
                c * tp * tm * (kt - kp) / den,
                m * (kp - kt) / den,
                c * (tm * kp - tp * kt) / den,
            )
        }
    };
    BcMatrix { a, kind }
}

/// Mode Neumann data `B (g_T, g_P)`.
pub fn mode_neumann_data(g_t: Complex64, g_p: Complex64, b: &DecoupleMatrix) -> [Complex64; 2] {
    b.to_modes([g_t, g_p])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn rel(a: Complex64, b: Complex64) -> f64 {
        (a - b).norm() / b.norm()
    }

    #[test]
    fn default_wavenumbers() {
        let d = derive_decoupled(&PhysicalParams::default()).unwrap();
        assert!(rel(d.k_t, c(116.81449127197266, 116.81529235839844)) < 1e-6);
        assert!(rel(d.k_p, c(1.0, 3.418116830289364e-5)) < 1e-6);
        assert!((d.k_t.im / d.k_t.re - 1.0).abs() < 1e-4);
        assert!(d.k_p.im < 1e-4);
        assert!((d.t_minus - d.t_plus).norm() > 0.0);
    }

    #[test]
    fn eigen_oracle_for_e_inverse_c() {
        // Eigenvalues of a 2x2 matrix from its trace and determinant.
        let p = PhysicalParams::default();
        let d = derive_decoupled(&p).unwrap();
        let cm = coefficient_matrices(&p);
        let m = cm.e.inverse().unwrap() * cm.c;
        let tr = m.entry(0, 0) + m.entry(1, 1);
        let disc = (tr * tr - 4.0 * m.det()).sqrt();
        let mut eig = [(tr + disc) / 2.0, (tr - disc) / 2.0];
        eig.sort_by(|a, b| b.norm().partial_cmp(&a.norm()).unwrap());
        assert!(rel(eig[0], -d.k_t * d.k_t) < 1e-10);
        assert!(rel(eig[1], -d.k_p * d.k_p) < 1e-10);
        assert_eq!(cm.c.entry(0, 0), -I);
        assert_eq!(cm.e.entry(0, 0), c(3.664152973215096e-5, 0.0));
        assert_eq!(cm.e.entry(0, 1), c(0.0, 0.0));
        assert_eq!(cm.e.entry(1, 0), c(0.0, 0.0));
    }

    #[test]
    fn decouple_matrix_columns() {
        let p = PhysicalParams::default();
        let model = Model::new(p).unwrap();
        let d = model.modes;
        let v = model.decouple.to_modes([c(1.0, 0.0), c(0.0, 0.0)]);
        assert_eq!(v, [c(p.m, 0.0), c(p.m, 0.0)]);
        let v = model.decouple.to_modes([c(0.0, 0.0), c(1.0, 0.0)]);
        let cp = p.pressure_coefficient();
        assert_eq!(v, [d.t_plus * cp, d.t_minus * cp]);
        let prod = model.decouple.b * model.decouple.b_inv;
        assert!((prod - Mat2::identity()).norm() < 1e-13);
        assert_eq!(mode_neumann_data(c(0.0, 0.0), c(0.0, 0.0), &model.decouple), [c(0.0, 0.0); 2]);
    }

    #[test]
    fn adhoc_matrix_shape() {
        let model = Model::new(PhysicalParams::default()).unwrap();
        let a = model.bc_matrix(BcKind::AdHoc).a;
        let p = model.phys;
        assert_eq!(a.entry(0, 0), c(0.0, 0.0));
        assert_eq!(a.entry(0, 1), c(0.0, 0.0));
        assert_eq!(a.entry(1, 0), c(0.0, 0.0));
        assert!(rel(a.entry(1, 1), p.gamma.sqrt() * p.pressure_coefficient()) < 1e-15);
        let t = model.bc_matrix(BcKind::Transmission).a;
        assert!((a - t).norm() > 1e-3);
    }

    #[test]
    fn transmission_matrix_is_the_mode_robin_matrix() {
        let model = Model::new(PhysicalParams::default()).unwrap();
        let t = model.bc_matrix(BcKind::Transmission).a;
        let r = model.mode_robin_matrix(SigmaPair::wavenumbers(&model.modes));
        assert!((t - r).norm() < 1e-10 * t.norm());
    }

    #[test]
    fn equal_wavenumbers_collapse_to_scalar_condition() {
        let p = PhysicalParams::default();
        let mut d = derive_decoupled(&p).unwrap();
        let kappa = c(2.0, 0.5);
        d.k_t = kappa;
        d.k_p = kappa;
        let a = bc_matrix(BcKind::Transmission, &p, &d).a;
        let expected = coefficient_matrices(&p).e.scale(kappa);
        assert!((a - expected).norm() < 1e-12 * expected.norm());
    }

    #[test]
    fn rejects_invalid_parameters() {
        assert!(PhysicalParams::new(1.4, 1e-4, 1e-4).is_err());
        assert!(PhysicalParams::new(1.0, 1e-4, 2e-4).is_err());
        assert!(PhysicalParams::new(1.4, -1e-4, 2e-4).is_err());
        assert!(PhysicalParams::new(1.4, f64::NAN, 2e-4).is_err());
    }

    #[test]
    fn toml_configuration() {
        let p = PhysicalParams::from_toml_str("gamma = 1.3\nM = 2.0e-5\nLambda = 4.5e-5\n").unwrap();
        assert_eq!(p, PhysicalParams { gamma: 1.3, m: 2.0e-5, lambda: 4.5e-5 });
        let d = PhysicalParams::from_toml_str("gamma = 1.4\n").unwrap();
        assert_eq!(d, PhysicalParams::default());
        assert!(PhysicalParams::from_toml_str("M = 1e-4\nLambda = 1e-4\n").is_err());
        assert!(PhysicalParams::from_toml_str("omega = 3").is_err());
        assert!(matches!(PhysicalParams::from_toml_str("gamma = "), Err(Error::Config(_))));
    }
}

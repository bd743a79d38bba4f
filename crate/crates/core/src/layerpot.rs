//! Helmholtz single and double layer potentials with densities sampled at
//! the Gauss points of `Gamma`, evaluated off-surface at `Sigma` targets,
//! and the dense nonlocal blocks and load vectors built from them.
//!
//! Source normals point out of the scatterer, i.e. opposite to the
//! quadrature normals of `Gamma` (which point out of the computational
//! domain). With that orientation an outgoing field satisfies
//! `u = D[u] - S[du/dnu]` away from `Gamma`.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fem::{assemble_local_bc, FeSpace};
use crate::geometry::{BoundaryQuadrature, BoundaryTag};
use crate::linalg::{CsrMatrix, DenseMatrix, TripletBuilder};
use crate::params::{BcKind, BcMatrix, Model, SigmaPair};
use crate::point::Vec2;
use crate::specfun::kernel_derivatives;
use crate::{ComplexVector, SparseComplexMatrix};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Potential values at the targets, plus target-normal derivatives when
/// normals were supplied.
#[derive(Debug, Clone, PartialEq)]
pub struct Potential {
    pub values: Vec<Complex64>,
    pub normal_derivatives: Option<Vec<Complex64>>,
}

#[derive(Clone, Copy)]
enum Layer {
    Single,
    Double,
}

fn check_separation(r: Vec2, target: usize, source: usize) -> Result<()> {
    if r.norm() == 0.0 {
        return Err(Error::Domain(format!("target {target} coincides with source point {source}")));
    }
    Ok(())
}

fn eval_layer(
    layer: Layer,
    kappa: Complex64,
    gamma: &BoundaryQuadrature,
    density: &[Complex64],
    targets: &[Vec2],
    normals: Option<&[Vec2]>,
) -> Result<Potential> {
    gamma.expect_tag(BoundaryTag::Gamma)?;
    if density.len() != gamma.len() {
        return Err(Error::Domain(format!("{} density values for {} sources", density.len(), gamma.len())));
    }
    if let Some(n) = normals {
        if n.len() != targets.len() {
            return Err(Error::Domain("one normal per target is required".into()));
        }
    }
    let rows: Vec<(Complex64, Complex64)> = targets
        .par_iter()
        .enumerate()
        .map(|(t, &x)| {
            let nx = normals.map_or(Vec2::default(), |n| n[t]);
            let mut v = Complex64::default();
            let mut dv = Complex64::default();
            for (q, &y) in gamma.points.iter().enumerate() {
                let rho = density[q];
                if rho == Complex64::default() {
                    continue;
                }
                let r = x - y;
                check_separation(r, t, q)?;
                let k = kernel_derivatives(kappa, r, nx, -gamma.normals[q])?;
                let w = gamma.weights[q] * rho;
                match layer {
                    Layer::Single => {
                        v += w * k.value;
                        dv += w * k.dnx;
                    }
                    Layer::Double => {
                        v += w * k.dny;
                        dv += w * k.dnx_dny;
                    }
                }
            }
            Ok((v, dv))
        })
        .collect::<Result<_>>()?;
    let (values, derivs): (Vec<_>, Vec<_>) = rows.into_iter().unzip();
    Ok(Potential { values, normal_derivatives: normals.map(|_| derivs) })
}

/// `S[f](x) = sum_q w_q K(x - y_q) f_q`.
pub fn eval_single_layer(
    kappa: Complex64,
    gamma: &BoundaryQuadrature,
    density: &[Complex64],
    targets: &[Vec2],
    target_normals: Option<&[Vec2]>,
) -> Result<Potential> {
    eval_layer(Layer::Single, kappa, gamma, density, targets, target_normals)
}

/// `D[u](x) = sum_q w_q dK(x - y_q)/dnu_y u_q`.
pub fn eval_double_layer(
    kappa: Complex64,
    gamma: &BoundaryQuadrature,
    density: &[Complex64],
    targets: &[Vec2],
    target_normals: Option<&[Vec2]>,
) -> Result<Potential> {
    eval_layer(Layer::Double, kappa, gamma, density, targets, target_normals)
}

/// `(i sigma - d/dn_x)` applied to a potential.
fn robin_combination(sigma: Complex64, p: &Potential) -> Vec<Complex64> {
    let dn = p.normal_derivatives.as_ref().expect("normal derivatives requested");
    p.values.iter().zip(dn).map(|(&v, &d)| I * sigma * v - d).collect()
}

/// FE traces on `Gamma` and the adjoint testing map on `Sigma`.
#[derive(Debug, Clone)]
pub struct TraceOperator {
    gamma: CsrMatrix<f64>,
    sigma: CsrMatrix<f64>,
    sigma_weights: Vec<f64>,
    scalar_dofs: usize,
}

impl TraceOperator {
    pub fn new(space: &FeSpace, gamma: &BoundaryQuadrature, sigma: &BoundaryQuadrature) -> Result<Self> {
        gamma.expect_tag(BoundaryTag::Gamma)?;
        sigma.expect_tag(BoundaryTag::Sigma)?;
        Ok(Self {
            gamma: space.trace_matrix(gamma),
            sigma: space.trace_matrix(sigma),
            sigma_weights: sigma.weights.clone(),
            scalar_dofs: space.scalar_dofs(),
        })
    }

    /// Values of field `field` of `u` at the `Gamma` quadrature points.
    pub fn gamma_values(&self, u: &[Complex64], field: usize) -> Vec<Complex64> {
        let n = self.scalar_dofs;
        (0..self.gamma.nrows()).map(|q| self.gamma.row(q).map(|(d, v)| u[field * n + d] * v).sum()).collect()
    }

    /// `int_Sigma values * conj(phi_i)` for every scalar dof `i`.
    pub fn sigma_load(&self, values: &[Complex64]) -> Vec<Complex64> {
        let mut out = vec![Complex64::default(); self.scalar_dofs];
        for (p, &v) in values.iter().enumerate() {
            let wv = v * self.sigma_weights[p];
            for (d, t) in self.sigma.row(p) {
                out[d] += wv * t;
            }
        }
        out
    }

    /// Scalar dofs with a nonzero trace on `Gamma`, ascending.
    pub fn gamma_dofs(&self) -> Vec<usize> {
        support(&self.gamma)
    }

    /// Scalar dofs with a nonzero trace on `Sigma`, ascending.
    pub fn sigma_dofs(&self) -> Vec<usize> {
        support(&self.sigma)
    }
}

fn support(m: &CsrMatrix<f64>) -> Vec<usize> {
    let mut d: Vec<usize> = m.triplets().map(|(_, j, _)| j).collect();
    d.sort_unstable();
    d.dedup();
    d
}

/// Nonlocal part of the form: a dense coupling from `Gamma` trial dofs to
/// `Sigma` test dofs plus the sparse Robin part on `Sigma`.
#[derive(Debug, Clone)]
pub struct DenseBlock {
    n: usize,
    rows: Vec<usize>,
    cols: Vec<usize>,
    coupling: DenseMatrix<Complex64>,
    robin: SparseComplexMatrix,
}

impl DenseBlock {
    pub fn dim(&self) -> usize {
        self.n
    }

    /// Global row indices of the coupling block.
    pub fn rows(&self) -> &[usize] {
        &self.rows
    }

    /// Global column indices of the coupling block.
    pub fn cols(&self) -> &[usize] {
        &self.cols
    }

    pub fn coupling(&self) -> &DenseMatrix<Complex64> {
        &self.coupling
    }

    /// `-i <A_sigma U, Psi>_Sigma`, supported on `Sigma` rows and columns.
    pub fn robin(&self) -> &SparseComplexMatrix {
        &self.robin
    }

    /// `y = coupling x`, zero outside the coupling rows.
    pub fn apply_coupling(&self, x: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(x.len(), self.n);
        let xs: Vec<Complex64> = self.cols.iter().map(|&j| x[j]).collect();
        let mut y = vec![Complex64::default(); self.n];
        for (&i, v) in self.rows.iter().zip(self.coupling.mul_vec(&xs)) {
            y[i] = v;
        }
        y
    }

    /// Coupling plus Robin part.
    pub fn apply(&self, x: &[Complex64]) -> Vec<Complex64> {
        let mut y = self.apply_coupling(x);
        for (yi, r) in y.iter_mut().zip(self.robin.mul_vec(x)) {
            *yi += r;
        }
        y
    }

    /// Entry `(i, j)` of the whole block.
    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        let c = match (self.rows.binary_search(&i), self.cols.binary_search(&j)) {
            (Ok(a), Ok(b)) => self.coupling[(a, b)],
            _ => Complex64::default(),
        };
        c + self.robin.get(i, j)
    }
}

/// `Q[i, k] = <(i sigma - d/dn) D_kappa[phi_k], phi_i>_Sigma` restricted
/// to `Sigma` test dofs `i` and `Gamma` trial dofs `k`.
fn double_layer_block(
    trace: &TraceOperator,
    kappa: Complex64,
    sigma: Complex64,
    gamma: &BoundaryQuadrature,
    sigma_quad: &BoundaryQuadrature,
    gamma_dofs: &[usize],
    sigma_dofs: &[usize],
) -> Result<DenseMatrix<Complex64>> {
    let col_of = position_map(gamma_dofs, trace.scalar_dofs);
    let row_of = position_map(sigma_dofs, trace.scalar_dofs);
    // Row p: (i sigma - d/dn_x) D[phi_k](x_p) for every Gamma dof k.
    let lt: Vec<Vec<Complex64>> = sigma_quad
        .points
        .par_iter()
        .zip(&sigma_quad.normals)
        .enumerate()
        .map(|(p, (&x, &nx))| {
            let mut row = vec![Complex64::default(); gamma_dofs.len()];
            for (q, &y) in gamma.points.iter().enumerate() {
                let r = x - y;
                check_separation(r, p, q)?;
                let k = kernel_derivatives(kappa, r, nx, -gamma.normals[q])?;
                let l = gamma.weights[q] * (I * sigma * k.dny - k.dnx_dny);
                if l == Complex64::default() {
                    continue;
                }
                for (d, t) in trace.gamma.row(q) {
                    row[col_of[d]] += l * t;
                }
            }
            Ok(row)
        })
        .collect::<Result<_>>()?;
    let mut out = DenseMatrix::zeros(sigma_dofs.len(), gamma_dofs.len());
    for (p, row) in lt.iter().enumerate() {
        let w = sigma_quad.weights[p];
        for (d, t) in trace.sigma.row(p) {
            let s = w * t;
            for (o, &v) in out.row_mut(row_of[d]).iter_mut().zip(row) {
                *o += v * s;
            }
        }
    }
    Ok(out)
}

fn position_map(dofs: &[usize], n: usize) -> Vec<usize> {
    let mut pos = vec![usize::MAX; n];
    for (i, &d) in dofs.iter().enumerate() {
        pos[d] = i;
    }
    pos
}

/// Nonlocal form of the coupled system:
/// `-i <A_sigma U, Psi>_Sigma + <E B^{-1} W(U), Psi>_Sigma` with
/// `W_j = (i sigma_j - d/dn) D_{k_j}[(B U)_j]`.
pub fn assemble_nonlocal_block(
    space: &FeSpace,
    model: &Model,
    sigma: SigmaPair,
    gamma: &BoundaryQuadrature,
    sigma_quad: &BoundaryQuadrature,
) -> Result<DenseBlock> {
    if space.field_count() != 2 {
        return Err(Error::Domain("the coupled nonlocal block needs a two-field space".into()));
    }
    let trace = TraceOperator::new(space, gamma, sigma_quad)?;
    let (gd, sd) = (trace.gamma_dofs(), trace.sigma_dofs());
    let ns = space.scalar_dofs();
    let ebi = model.e_b_inv();
    let b = model.decouple.b;
    let mut coupling = DenseMatrix::zeros(2 * sd.len(), 2 * gd.len());
    for j in 0..2 {
        let q = double_layer_block(&trace, model.wavenumber(j), sigma.get(j), gamma, sigma_quad, &gd, &sd)?;
        if q.max_abs() == 0.0 {
            continue;
        }
        for f in 0..2 {
            for g in 0..2 {
                let s = ebi.entry(f, j) * b.entry(j, g);
                for i in 0..sd.len() {
                    let src = q.row(i);
                    let dst = &mut coupling.row_mut(f * sd.len() + i)[g * gd.len()..(g + 1) * gd.len()];
                    for (o, &v) in dst.iter_mut().zip(src) {
                        *o += s * v;
                    }
                }
            }
        }
    }
    let robin_bc = BcMatrix { a: model.mode_robin_matrix(sigma), kind: BcKind::Transmission };
    let robin = assemble_local_bc(space, &robin_bc, sigma_quad)?;
    let rows = [0, 1].iter().flat_map(|&f| sd.iter().map(move |&d| f * ns + d)).collect();
    let cols = [0, 1].iter().flat_map(|&f| gd.iter().map(move |&d| f * ns + d)).collect();
    Ok(DenseBlock { n: 2 * ns, rows, cols, coupling, robin })
}

/// `<E B^{-1} G, Psi>_Sigma` with `G_j = (i sigma_j - d/dn) S_{k_j}[f_j]`.
///
/// `g_modes[j]` holds `dV_j/dn` at the `Gamma` quadrature points, with `n`
/// the quadrature normal; the single-layer density is its negative.
pub fn assemble_nonlocal_rhs(
    space: &FeSpace,
    model: &Model,
    sigma: SigmaPair,
    g_modes: [&[Complex64]; 2],
    gamma: &BoundaryQuadrature,
    sigma_quad: &BoundaryQuadrature,
) -> Result<ComplexVector> {
    if space.field_count() != 2 {
        return Err(Error::Domain("the coupled nonlocal load needs a two-field space".into()));
    }
    let trace = TraceOperator::new(space, gamma, sigma_quad)?;
    let ebi = model.e_b_inv();
    let mut g = [vec![], vec![]];
    for j in 0..2 {
        g[j] = single_layer_robin(model.wavenumber(j), sigma.get(j), g_modes[j], gamma, sigma_quad)?;
    }
    let ns = space.scalar_dofs();
    let mut out = vec![Complex64::default(); 2 * ns];
    for f in 0..2 {
        let vals: Vec<Complex64> = (0..sigma_quad.len()).map(|p| ebi.entry(f, 0) * g[0][p] + ebi.entry(f, 1) * g[1][p]).collect();
        out[f * ns..(f + 1) * ns].copy_from_slice(&trace.sigma_load(&vals));
    }
    Ok(out)
}

/// `(i sigma - d/dn) S_kappa[-g]` at the `Sigma` points.
fn single_layer_robin(
    kappa: Complex64,
    sigma: Complex64,
    g: &[Complex64],
    gamma: &BoundaryQuadrature,
    sigma_quad: &BoundaryQuadrature,
) -> Result<Vec<Complex64>> {
    let density: Vec<Complex64> = g.iter().map(|v| -v).collect();
    let pot = eval_single_layer(kappa, gamma, &density, &sigma_quad.points, Some(&sigma_quad.normals))?;
    Ok(robin_combination(sigma, &pot))
}

/// Scalar analogue: `-i sigma <u, v>_Sigma + <(i sigma - d/dn) D[u], v>_Sigma`.
pub fn scalar_nonlocal_block(
    space: &FeSpace,
    kappa: Complex64,
    sigma: Complex64,
    gamma: &BoundaryQuadrature,
    sigma_quad: &BoundaryQuadrature,
) -> Result<DenseBlock> {
    if space.field_count() != 1 {
        return Err(Error::Domain("the scalar nonlocal block needs a one-field space".into()));
    }
    let trace = TraceOperator::new(space, gamma, sigma_quad)?;
    let (gd, sd) = (trace.gamma_dofs(), trace.sigma_dofs());
    let coupling = double_layer_block(&trace, kappa, sigma, gamma, sigma_quad, &gd, &sd)?;
    let bm = space.boundary_mass(sigma_quad);
    let mut b = TripletBuilder::with_capacity(bm.nrows(), bm.ncols(), bm.nnz());
    for (i, j, v) in bm.triplets() {
        b.push(i, j, -I * sigma * v);
    }
    Ok(DenseBlock { n: space.scalar_dofs(), rows: sd, cols: gd, coupling, robin: b.build() })
}

/// Scalar load `<(i sigma - d/dn) S[f], v>_Sigma` from `g = du/dn` at the
/// `Gamma` quadrature points (`f = -g`).
pub fn scalar_nonlocal_rhs(
    space: &FeSpace,
    kappa: Complex64,
    sigma: Complex64,
    g: &[Complex64],
    gamma: &BoundaryQuadrature,
    sigma_quad: &BoundaryQuadrature,
) -> Result<ComplexVector> {
    let trace = TraceOperator::new(space, gamma, sigma_quad)?;
    let vals = single_layer_robin(kappa, sigma, g, gamma, sigma_quad)?;
    Ok(trace.sigma_load(&vals))
}

//! Sparse factorization of the local part, full GMRES, and the driver
//! that assembles and solves one manufactured problem.

use std::path::PathBuf;
use std::sync::Arc;
use std::time::Instant;

use faer::linalg::solvers::SolveCore;
use faer::sparse::{SparseColMat, Triplet};
use num_complex::Complex64;
use num_traits::{Float, One, Zero};

use crate::error::{Error, Result};
use crate::fem::{self, FeSpace};
use crate::geometry::{
    generate_square_with_hole, generate_tuning_fork, read_msh, BoundaryQuadrature, BoundaryTag, Mesh,
    TuningForkOptions,
};
use crate::layerpot::{self, DenseBlock};
use crate::linalg::{DenseLu, DenseMatrix};
use crate::manufactured::{PointSourceSolution, FORK_SOURCE, SQUARE_SOURCE};
use crate::params::{BcKind, Model, PhysicalParams, SigmaPair};
use crate::point::Vec2;
use crate::scalar::{axpy, dot_conj, norm2, Scalar};
use crate::{ComplexVector, SparseComplexMatrix};

/// Square operator `x -> A x`.
pub trait LinearOperator<T> {
    fn dim(&self) -> usize;
    fn apply(&self, x: &[T]) -> Vec<T>;
}

/// Approximate inverse `y -> P^{-1} y`.
pub trait Preconditioner<T> {
    fn apply_inverse(&self, y: &[T]) -> Vec<T>;
}

/// `P = I`.
#[derive(Debug, Clone, Copy, Default)]
pub struct Identity;

impl<T: Copy> Preconditioner<T> for Identity {
    fn apply_inverse(&self, y: &[T]) -> Vec<T> {
        y.to_vec()
    }
}

impl<T: Scalar> LinearOperator<T> for crate::linalg::CsrMatrix<T> {
    fn dim(&self) -> usize {
        self.nrows()
    }

    fn apply(&self, x: &[T]) -> Vec<T> {
        self.mul_vec(x)
    }
}

impl<T: Scalar> LinearOperator<T> for DenseMatrix<T> {
    fn dim(&self) -> usize {
        self.nrows()
    }

    fn apply(&self, x: &[T]) -> Vec<T> {
        self.mul_vec(x)
    }
}

impl<T: Scalar> Preconditioner<T> for DenseLu<T> {
    fn apply_inverse(&self, y: &[T]) -> Vec<T> {
        self.solve(y)
    }
}

/// Systems below this size may use the dense fallback.
pub const DENSE_FALLBACK_LIMIT: usize = 5000;

enum Factors {
    Sparse(faer::sparse::linalg::solvers::Lu<usize, Complex64>),
    Dense(DenseLu<Complex64>),
}

/// Factorized local operator, reused for every preconditioner application.
pub struct LocalFactorization {
    n: usize,
    factors: Factors,
}

impl std::fmt::Debug for LocalFactorization {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("LocalFactorization").field("n", &self.n).field("ordering", &self.ordering()).finish()
    }
}

impl LocalFactorization {
    pub fn dim(&self) -> usize {
        self.n
    }

    /// Fill-reducing ordering used by the factorization.
    pub fn ordering(&self) -> &'static str {
        match self.factors {
            Factors::Sparse(_) => "COLAMD column ordering, partial row pivoting (faer)",
            Factors::Dense(_) => "dense, partial row pivoting",
        }
    }

    pub fn solve(&self, y: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(y.len(), self.n);
        match &self.factors {
            Factors::Sparse(lu) => {
                let mut rhs = faer::Mat::<Complex64>::from_fn(self.n, 1, |i, _| y[i]);
                lu.solve_in_place_with_conj(faer::Conj::No, rhs.as_mut());
                (0..self.n).map(|i| rhs[(i, 0)]).collect()
            }
            Factors::Dense(lu) => lu.solve(y),
        }
    }
}

impl Preconditioner<Complex64> for LocalFactorization {
    fn apply_inverse(&self, y: &[Complex64]) -> Vec<Complex64> {
        self.solve(y)
    }
}

/// Sparse LU with a fill-reducing ordering.
pub fn factorize(a: &SparseComplexMatrix) -> Result<LocalFactorization> {
    let n = a.nrows();
    if n != a.ncols() {
        return Err(Error::Singular(format!("{}x{} matrix is not square", n, a.ncols())));
    }
    let triplets: Vec<Triplet<usize, usize, Complex64>> = a.triplets().map(|(i, j, v)| Triplet::new(i, j, v)).collect();
    let m = SparseColMat::<usize, Complex64>::try_new_from_triplets(n, n, &triplets)
        .map_err(|e| Error::Singular(format!("cannot build sparse matrix: {e:?}")))?;
    let lu = m.sp_lu().map_err(|e| Error::Singular(format!("sparse LU failed: {e}")))?;
    let f = LocalFactorization { n, factors: Factors::Sparse(lu) };
    check_numeric(a, &f)?;
    Ok(f)
}

/// Dense LU; refuses systems above [`DENSE_FALLBACK_LIMIT`].
pub fn factorize_dense(a: &SparseComplexMatrix) -> Result<LocalFactorization> {
    if a.nrows() > DENSE_FALLBACK_LIMIT {
        return Err(Error::Config(format!(
            "dense factorization limited to {DENSE_FALLBACK_LIMIT} unknowns, got {}",
            a.nrows()
        )));
    }
    let lu = a.to_dense().lu()?;
    Ok(LocalFactorization { n: a.nrows(), factors: Factors::Dense(lu) })
}

/// The sparse factorization reports only structural failures; a numerically
/// singular matrix shows up as a non-finite or inaccurate solve.
fn check_numeric(a: &SparseComplexMatrix, f: &LocalFactorization) -> Result<()> {
    let n = a.nrows();
    let y: Vec<Complex64> = (0..n).map(|i| Complex64::new(1.0 + (i % 7) as f64, (i % 3) as f64 - 1.0)).collect();
    let x = f.solve(&y);
    if !x.iter().all(|v| v.is_finite()) {
        return Err(Error::Singular("factorization produced non-finite values".into()));
    }
    let r: Vec<Complex64> = a.mul_vec(&x).iter().zip(&y).map(|(u, v)| u - v).collect();
    let rel = norm2(&r) / norm2(&y);
    if !(rel <= 1e-6) {
        return Err(Error::Singular(format!("factorization residual {rel:e} (numerically singular)")));
    }
    Ok(())
}

/// `A = A^L + A^NL`.
pub struct CompositeOperator<'a> {
    pub local: &'a SparseComplexMatrix,
    pub nonlocal: Option<&'a DenseBlock>,
}

impl LinearOperator<Complex64> for CompositeOperator<'_> {
    fn dim(&self) -> usize {
        self.local.nrows()
    }

    fn apply(&self, x: &[Complex64]) -> Vec<Complex64> {
        let mut y = self.local.mul_vec(x);
        if let Some(b) = self.nonlocal {
            for (yi, v) in y.iter_mut().zip(b.apply_coupling(x)) {
                *yi += v;
            }
        }
        y
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GmresReport {
    pub iterations: usize,
    /// `|P^{-1}(b - A x_j)| / |P^{-1} b|`, starting with `1` at `j = 0`.
    pub residual_history: Vec<f64>,
    pub converged: bool,
    /// `|b - A x| / |b|` for the returned iterate.
    pub true_residual: f64,
    pub seconds: f64,
}

/// Complex Givens rotation `(c, s)` zeroing `b` in `(a, b)`.
fn givens<T: Scalar>(a: T, b: T) -> (T::Real, T) {
    let (ma, mb) = (a.modulus(), b.modulus());
    if ma == T::Real::zero() {
        return (T::Real::zero(), T::one());
    }
    let r = (ma * ma + mb * mb).sqrt();
    (ma / r, a * T::from_real(T::Real::one() / ma) * b.conj() * T::from_real(T::Real::one() / r))
}

/// Left-preconditioned full GMRES from `x0 = 0` with modified Gram-Schmidt
/// and one reorthogonalization pass. Stops when the preconditioned
/// relative residual drops to `tol` or after `maxit` iterations; the best
/// iterate is returned either way.
pub fn gmres<T: Scalar>(
    op: &dyn LinearOperator<T>,
    pre: &dyn Preconditioner<T>,
    b: &[T],
    tol: f64,
    maxit: usize,
) -> (Vec<T>, GmresReport) {
    let start = Instant::now();
    let n = op.dim();
    assert_eq!(b.len(), n);
    let tol_r: T::Real = num_traits::cast(tol).unwrap();
    let to_f64 = |v: T::Real| num_traits::cast::<T::Real, f64>(v).unwrap();
    let r0 = pre.apply_inverse(b);
    let beta = norm2(&r0);
    let mut report = GmresReport {
        iterations: 0,
        residual_history: vec![1.0],
        converged: false,
        true_residual: 0.0,
        seconds: 0.0,
    };
    if beta == T::Real::zero() {
        report.converged = true;
        report.seconds = start.elapsed().as_secs_f64();
        return (vec![T::zero(); n], report);
    }
    let inv_beta = T::from_real(T::Real::one() / beta);
    let mut basis: Vec<Vec<T>> = vec![r0.iter().map(|&v| v * inv_beta).collect()];
    // Columns of the rotated Hessenberg matrix.
    let mut h: Vec<Vec<T>> = Vec::new();
    let mut rot: Vec<(T::Real, T)> = Vec::new();
    let mut g = vec![T::from_real(beta)];
    for j in 0..maxit {
        let mut w = pre.apply_inverse(&op.apply(&basis[j]));
        let mut col = vec![T::zero(); j + 2];
        for _pass in 0..2 {
            for (i, v) in basis.iter().enumerate() {
                let hij = dot_conj(v, &w);
                axpy(-hij, v, &mut w);
                col[i] += hij;
            }
        }
        let hn = norm2(&w);
        col[j + 1] = T::from_real(hn);
        for (i, &(c, s)) in rot.iter().enumerate() {
            let (a, bb) = (col[i], col[i + 1]);
            col[i] = T::from_real(c) * a + s * bb;
            col[i + 1] = -s.conj() * a + T::from_real(c) * bb;
        }
        let (c, s) = givens(col[j], col[j + 1]);
        let (a, bb) = (col[j], col[j + 1]);
        col[j] = T::from_real(c) * a + s * bb;
        col[j + 1] = T::zero();
        rot.push((c, s));
        let gj = g[j];
        g[j] = T::from_real(c) * gj;
        g.push(-s.conj() * gj);
        h.push(col);
        report.iterations = j + 1;
        let rel = g[j + 1].modulus() / beta;
        report.residual_history.push(to_f64(rel));
        if rel <= tol_r || hn == T::Real::zero() {
            report.converged = rel <= tol_r;
            break;
        }
        let inv = T::from_real(T::Real::one() / hn);
        basis.push(w.iter().map(|&v| v * inv).collect());
    }
    // Back substitution for y, then x = V y.
    let k = h.len();
    let mut y = vec![T::zero(); k];
    for i in (0..k).rev() {
        let mut s = g[i];
        for (jj, yj) in y.iter().enumerate().skip(i + 1) {
            s -= h[jj][i] * *yj;
        }
        y[i] = s / h[i][i];
    }
    let mut x = vec![T::zero(); n];
    for (v, &yi) in basis.iter().zip(&y) {
        axpy(yi, v, &mut x);
    }
    let ax = op.apply(&x);
    let r: Vec<T> = ax.iter().zip(b).map(|(&u, &v)| v - u).collect();
    report.true_residual = to_f64(norm2(&r) / norm2(b));
    report.seconds = start.elapsed().as_secs_f64();
    (x, report)
}

/// Computational domain.
#[derive(Debug, Clone, PartialEq)]
pub enum Geometry {
    SquareHole { half_width: f64, radius: f64, h: f64 },
    TuningFork(TuningForkOptions),
    Msh(PathBuf),
}

impl Geometry {
    /// Coarse mesh refined `level` times by edge bisection.
    pub fn mesh(&self, level: usize) -> Result<Mesh> {
        let mut m = match self {
            Geometry::SquareHole { half_width, radius, h } => generate_square_with_hole(*half_width, *radius, *h)?,
            Geometry::TuningFork(o) => generate_tuning_fork(*o)?,
            Geometry::Msh(p) => read_msh(p)?,
        };
        for _ in 0..level {
            m = m.refine()?;
        }
        Ok(m)
    }

    /// Manufactured source location for this geometry.
    pub fn default_source(&self) -> Vec2 {
        match self {
            Geometry::TuningFork(_) => FORK_SOURCE,
            _ => SQUARE_SOURCE,
        }
    }

    pub fn is_square_hole(&self) -> bool {
        matches!(self, Geometry::SquareHole { .. })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Form {
    /// The coupled `(T, P)` system.
    Coupled,
    /// Two scalar Helmholtz problems for `V_t`, `V_p`.
    Decoupled,
    /// Only the acoustic mode, `V_t = 0`.
    Single,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryCondition {
    /// Exact Neumann data on both `Gamma` and `Sigma`.
    NeumannBoth,
    AdHoc,
    Transmission,
    Nonlocal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SigmaChoice {
    Zero,
    Wavenumber,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveConfig {
    pub params: PhysicalParams,
    pub degree: usize,
    pub form: Form,
    pub bc: BoundaryCondition,
    pub sigma: SigmaChoice,
    pub tol: f64,
    pub maxit: usize,
    pub source: Vec2,
    /// Gauss points per `Gamma` facet for the layer potentials; `None`
    /// uses the trace-exact default.
    pub gamma_order: Option<usize>,
    /// Precondition GMRES with the factorized local part.
    pub precondition: bool,
}

impl SolveConfig {
    pub fn new(degree: usize, form: Form, bc: BoundaryCondition) -> Self {
        Self {
            params: PhysicalParams::default(),
            degree,
            form,
            bc,
            sigma: SigmaChoice::Wavenumber,
            tol: 1e-12,
            maxit: 200,
            source: SQUARE_SOURCE,
            gamma_order: None,
            precondition: true,
        }
    }

    pub fn validate(&self, geometry: &Geometry) -> Result<()> {
        if self.bc == BoundaryCondition::NeumannBoth && !geometry.is_square_hole() {
            return Err(Error::Config("neumann-both requires the square-with-hole geometry".into()));
        }
        self.check()
    }

    /// The geometry-independent part of [`SolveConfig::validate`].
    pub fn check(&self) -> Result<()> {
        if !(1..=3).contains(&self.degree) {
            return Err(Error::UnsupportedDegree(self.degree));
        }
        if self.bc == BoundaryCondition::AdHoc && self.form != Form::Coupled {
            return Err(Error::Config("the ad hoc condition acts on (T, P) and needs the coupled form".into()));
        }
        if !(self.tol > 0.0) || self.maxit == 0 {
            return Err(Error::Config("tolerance must be positive and maxit nonzero".into()));
        }
        self.params.validate()
    }
}

#[derive(Debug, Clone)]
pub struct SolveOutcome {
    pub space: FeSpace,
    /// `(T, P)` coefficients, blocked.
    pub fields: ComplexVector,
    /// One report per GMRES solve; empty for direct solves.
    pub reports: Vec<GmresReport>,
    pub norms: fem::FieldNorms,
    pub rel_l2: f64,
}

impl SolveOutcome {
    /// Largest iteration count over the GMRES solves; 0 for direct solves.
    pub fn gmres_iterations(&self) -> usize {
        self.reports.iter().map(|r| r.iterations).max().unwrap_or(0)
    }

    pub fn converged(&self) -> bool {
        self.reports.iter().all(|r| r.converged)
    }
}

struct Problem<'a> {
    space: &'a FeSpace,
    model: &'a Model,
    exact: &'a PointSourceSolution,
    sigma_pair: SigmaPair,
    gamma: BoundaryQuadrature,
    sigma: BoundaryQuadrature,
    config: &'a SolveConfig,
}

impl Problem<'_> {
    /// `(E g)` at the points of `quad`, with `g = dU/dn`.
    fn conormal_data(&self, quad: &BoundaryQuadrature) -> Result<Vec<[Complex64; 2]>> {
        let e = self.model.coef.e;
        let g = self.exact.exact_neumann(&quad.points, &quad.normals)?;
        Ok(g.into_iter().map(|v| e.apply(v)).collect())
    }

    fn layer_quadrature(&self) -> BoundaryQuadrature {
        match self.config.gamma_order {
            Some(o) => self.space.mesh().boundary_quadrature(BoundaryTag::Gamma, o),
            None => self.gamma.clone(),
        }
    }

    fn solve_linear(
        &self,
        local: &SparseComplexMatrix,
        block: Option<&DenseBlock>,
        b: &[Complex64],
    ) -> Result<(ComplexVector, Option<GmresReport>)> {
        let lu = factorize(local)?;
        match block {
            None => Ok((lu.solve(b), None)),
            Some(nl) => {
                let op = CompositeOperator { local, nonlocal: Some(nl) };
                let (x, rep) = if self.config.precondition {
                    gmres(&op, &lu, b, self.config.tol, self.config.maxit)
                } else {
                    gmres(&op, &Identity, b, self.config.tol, self.config.maxit)
                };
                Ok((x, Some(rep)))
            }
        }
    }

    fn coupled(&self) -> Result<(ComplexVector, Vec<GmresReport>)> {
        let space = self.space;
        let a0 = fem::assemble_a0(space, &self.model.phys)?;
        let gdata = self.conormal_data(&self.gamma)?;
        let mut b = fem::assemble_neumann_rhs(space, &self.gamma, |_, _| [Complex64::default(); 2])?;
        for f in 0..2 {
            let v: Vec<Complex64> = gdata.iter().map(|d| d[f]).collect();
            space.add_trace_load(&self.gamma, f, &v, &mut b);
        }
        let (local, block) = match self.config.bc {
            BoundaryCondition::NeumannBoth => {
                let sdata = self.conormal_data(&self.sigma)?;
                for f in 0..2 {
                    let v: Vec<Complex64> = sdata.iter().map(|d| d[f]).collect();
                    space.add_trace_load(&self.sigma, f, &v, &mut b);
                }
                (a0, None)
            }
            BoundaryCondition::AdHoc | BoundaryCondition::Transmission => {
                let kind = if self.config.bc == BoundaryCondition::AdHoc { BcKind::AdHoc } else { BcKind::Transmission };
                let bc = fem::assemble_local_bc(space, &self.model.bc_matrix(kind), &self.sigma)?;
                (a0.add(&bc), None)
            }
            BoundaryCondition::Nonlocal => {
                let lq = self.layer_quadrature();
                let block = layerpot::assemble_nonlocal_block(space, self.model, self.sigma_pair, &lq, &self.sigma)?;
                let gm: Vec<[Complex64; 2]> = lq
                    .points
                    .iter()
                    .zip(&lq.normals)
                    .map(|(&x, &n)| self.exact.mode_normal_derivative(x, n))
                    .collect::<Result<_>>()?;
                let (gt, gp): (Vec<Complex64>, Vec<Complex64>) = gm.iter().map(|v| (v[0], v[1])).unzip();
                let nl = layerpot::assemble_nonlocal_rhs(space, self.model, self.sigma_pair, [&gt, &gp], &lq, &self.sigma)?;
                for (bi, v) in b.iter_mut().zip(nl) {
                    *bi += v;
                }
                (a0.add(block.robin()), Some(block))
            }
        };
        let (x, rep) = self.solve_linear(&local, block.as_ref(), &b)?;
        Ok((x, rep.into_iter().collect()))
    }

    /// Scalar solve for mode `j`; returns its coefficient vector.
    fn mode(&self, scalar: &FeSpace, j: usize) -> Result<(ComplexVector, Option<GmresReport>)> {
        let kappa = self.model.wavenumber(j);
        let g_at = |quad: &BoundaryQuadrature| -> Result<Vec<Complex64>> {
            quad.points
                .iter()
                .zip(&quad.normals)
                .map(|(&x, &n)| Ok(self.exact.mode_normal_derivative(x, n)?[j]))
                .collect()
        };
        let mut b = vec![Complex64::default(); scalar.ndofs()];
        scalar.add_trace_load(&self.gamma, 0, &g_at(&self.gamma)?, &mut b);
        let (local, block) = match self.config.bc {
            BoundaryCondition::NeumannBoth => {
                scalar.add_trace_load(&self.sigma, 0, &g_at(&self.sigma)?, &mut b);
                (fem::assemble_helmholtz(scalar, kappa, None)?, None)
            }
            BoundaryCondition::Transmission => (fem::assemble_helmholtz(scalar, kappa, Some((kappa, &self.sigma)))?, None),
            BoundaryCondition::Nonlocal => {
                let lq = self.layer_quadrature();
                let s = self.sigma_pair.get(j);
                let block = layerpot::scalar_nonlocal_block(scalar, kappa, s, &lq, &self.sigma)?;
                let nl = layerpot::scalar_nonlocal_rhs(scalar, kappa, s, &g_at(&lq)?, &lq, &self.sigma)?;
                for (bi, v) in b.iter_mut().zip(nl) {
                    *bi += v;
                }
                (fem::assemble_helmholtz(scalar, kappa, None)?.add(block.robin()), Some(block))
            }
            BoundaryCondition::AdHoc => unreachable!("rejected by validation"),
        };
        self.solve_linear(&local, block.as_ref(), &b)
    }

    fn modal(&self, form: Form) -> Result<(ComplexVector, Vec<GmresReport>)> {
        let scalar = self.space.with_fields(1)?;
        let ns = scalar.scalar_dofs();
        let mut modes = [vec![Complex64::default(); ns], vec![Complex64::default(); ns]];
        let mut reports = Vec::new();
        let first = if form == Form::Single { 1 } else { 0 };
        for (j, slot) in modes.iter_mut().enumerate().skip(first) {
            let (v, rep) = self.mode(&scalar, j)?;
            *slot = v;
            reports.extend(rep);
        }
        let mut x = vec![Complex64::default(); 2 * ns];
        for d in 0..ns {
            let [t, p] = self.model.decouple.to_fields([modes[0][d], modes[1][d]]);
            x[d] = t;
            x[ns + d] = p;
        }
        Ok((x, reports))
    }
}

/// Assembles and solves the manufactured problem on `mesh`, then measures
/// the relative L2 error of `(T, P)`.
pub fn solve_morse_ingard(mesh: Arc<Mesh>, config: &SolveConfig) -> Result<SolveOutcome> {
    config.check()?;
    let model = Model::new(config.params)?;
    let exact = PointSourceSolution::new(model, config.source);
    let space = FeSpace::new(mesh, config.degree, 2)?;
    let sigma_pair = match config.sigma {
        SigmaChoice::Zero => SigmaPair::zero(),
        SigmaChoice::Wavenumber => SigmaPair::wavenumbers(&model.modes),
    };
    let problem = Problem {
        space: &space,
        model: &model,
        exact: &exact,
        sigma_pair,
        gamma: space.boundary_quadrature(BoundaryTag::Gamma),
        sigma: space.boundary_quadrature(BoundaryTag::Sigma),
        config,
    };
    let (fields, reports) = match config.form {
        Form::Coupled => problem.coupled()?,
        f => problem.modal(f)?,
    };
    let norms = fem::l2_norms(&space, &fields, |x| exact.exact_fields(x).unwrap_or_default());
    let rel_l2 = norms.relative()?;
    Ok(SolveOutcome { space, fields, reports, norms, rel_l2 })
}

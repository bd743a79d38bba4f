//! Continuous Lagrange spaces of degree 1 to 3 on blended triangles and
//! assembly of the local forms.
//!
//! Coupled spaces carry two fields per scalar dof and are blocked: all
//! temperature dofs first, then all pressure dofs. Assembled entries are
//! `a(psi_j, psi_i)` with the conjugate on the test slot.

use std::io::Write;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{BoundaryQuadrature, BoundaryTag, CellGeometry, Mesh};
use crate::linalg::{CsrMatrix, DenseMatrix, TripletBuilder};
use crate::params::{BcMatrix, PhysicalParams};
use crate::point::Vec2;
use crate::quadrature::TriangleRule;
use crate::{ComplexVector, SparseComplexMatrix};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Lagrange element on the reference triangle with equispaced nodes.
///
/// Local order: the three vertices, then `k - 1` nodes per local edge `e`
/// (from vertex `e` towards vertex `e + 1`), then interior nodes.
#[derive(Debug, Clone)]
pub struct ReferenceElement {
    degree: usize,
    nodes: Vec<[f64; 2]>,
    exponents: Vec<(i32, i32)>,
    /// `coeffs[(m, i)]`: coefficient of monomial `m` in basis function `i`.
    coeffs: DenseMatrix<f64>,
    edge_nodes: [Vec<usize>; 3],
}

impl ReferenceElement {
    pub fn new(degree: usize) -> Result<Self> {
        if !(1..=3).contains(&degree) {
            return Err(Error::UnsupportedDegree(degree));
        }
        let k = degree;
        let kf = k as f64;
        let mut nodes = vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];
        let corners = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];
        let mut edge_nodes = [vec![0, 1], vec![1, 2], vec![2, 0]];
        for (e, list) in edge_nodes.iter_mut().enumerate() {
            let (a, b): ([f64; 2], [f64; 2]) = (corners[e], corners[(e + 1) % 3]);
            for j in 1..k {
                let s = j as f64 / kf;
                list.push(nodes.len());
                nodes.push([a[0] + s * (b[0] - a[0]), a[1] + s * (b[1] - a[1])]);
            }
        }
        for j in 1..k {
            for i in 1..k - j {
                nodes.push([i as f64 / kf, j as f64 / kf]);
            }
        }
        let exponents: Vec<(i32, i32)> =
            (0..=k as i32).flat_map(|a| (0..=k as i32 - a).map(move |b| (a, b))).collect();
        debug_assert_eq!(nodes.len(), exponents.len());

        let n = nodes.len();
        let mut v = DenseMatrix::zeros(n, n);
        for (i, p) in nodes.iter().enumerate() {
            for (m, &(a, b)) in exponents.iter().enumerate() {
                v[(i, m)] = p[0].powi(a) * p[1].powi(b);
            }
        }
        let lu = v.lu()?;
        let mut coeffs = DenseMatrix::zeros(n, n);
        for i in 0..n {
            let mut e = vec![0.0; n];
            e[i] = 1.0;
            for (m, c) in lu.solve(&e).into_iter().enumerate() {
                coeffs[(m, i)] = c;
            }
        }
        Ok(Self { degree, nodes, exponents, coeffs, edge_nodes })
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[[f64; 2]] {
        &self.nodes
    }

    /// Local basis functions that do not vanish on local edge `e`, in edge
    /// order.
    pub fn edge_nodes(&self, e: usize) -> &[usize] {
        &self.edge_nodes[e]
    }

    pub fn eval(&self, xi: [f64; 2]) -> Vec<f64> {
        let mono: Vec<f64> = self.exponents.iter().map(|&(a, b)| xi[0].powi(a) * xi[1].powi(b)).collect();
        self.coeffs.transpose_mul_vec(&mono)
    }

    /// Reference gradients `(d/dxi, d/deta)`.
    pub fn eval_grad(&self, xi: [f64; 2]) -> Vec<[f64; 2]> {
        let n = self.len();
        let mut out = vec![[0.0; 2]; n];
        for (m, &(a, b)) in self.exponents.iter().enumerate() {
            let dx = if a > 0 { a as f64 * xi[0].powi(a - 1) * xi[1].powi(b) } else { 0.0 };
            let dy = if b > 0 { b as f64 * xi[0].powi(a) * xi[1].powi(b - 1) } else { 0.0 };
            for (i, g) in out.iter_mut().enumerate() {
                let c = self.coeffs[(m, i)];
                g[0] += c * dx;
                g[1] += c * dy;
            }
        }
        out
    }

    fn tabulate(&self, rule: TriangleRule) -> Tabulation {
        let values = rule.points.iter().map(|&p| self.eval(p)).collect();
        let grads = rule.points.iter().map(|&p| self.eval_grad(p)).collect();
        Tabulation { rule, values, grads }
    }
}

/// Basis values and reference gradients at the points of one rule.
#[derive(Debug, Clone)]
struct Tabulation {
    rule: TriangleRule,
    values: Vec<Vec<f64>>,
    grads: Vec<Vec<[f64; 2]>>,
}

/// Tabulated rules for straight cells and, one degree richer, for curved
/// cells whose Jacobian is not constant.
#[derive(Debug, Clone)]
struct CellRules {
    straight: Tabulation,
    curved: Tabulation,
}

impl CellRules {
    fn new(el: &ReferenceElement, straight_degree: usize, curved_degree: usize) -> Self {
        Self {
            straight: el.tabulate(TriangleRule::for_degree(straight_degree)),
            curved: el.tabulate(TriangleRule::for_degree(curved_degree)),
        }
    }

    fn for_cell(&self, mesh: &Mesh, c: usize) -> &Tabulation {
        if mesh.is_curved(c) {
            &self.curved
        } else {
            &self.straight
        }
    }
}

/// Physical gradients from reference gradients, `J^{-T} g`.
#[inline]
fn physical_grad(j: [Vec2; 2], g: [f64; 2]) -> [f64; 2] {
    let [a, b] = j;
    let det = a.cross(b);
    [(b.y * g[0] - a.y * g[1]) / det, (-b.x * g[0] + a.x * g[1]) / det]
}

#[derive(Debug, Clone)]
pub struct FeSpace {
    mesh: Arc<Mesh>,
    field_count: usize,
    element: ReferenceElement,
    /// `element.len()` global scalar dofs per cell.
    cell_dofs: Vec<usize>,
    coords: Vec<Vec2>,
    assembly: CellRules,
    accuracy: CellRules,
}

/// `degree` in 1..=3, `field_count` 1 (scalar Helmholtz) or 2 (`(T, P)`).
pub fn build_space(mesh: impl Into<Arc<Mesh>>, degree: usize, field_count: usize) -> Result<FeSpace> {
    FeSpace::new(mesh.into(), degree, field_count)
}

impl FeSpace {
    pub fn new(mesh: Arc<Mesh>, degree: usize, field_count: usize) -> Result<Self> {
        let element = ReferenceElement::new(degree)?;
        if !(1..=2).contains(&field_count) {
            return Err(Error::Domain(format!("field count {field_count} (expected 1 or 2)")));
        }
        let k = degree;
        let nv = mesh.vertex_count;
        let ne = mesh.num_edges();
        let n_int = element.len() - 3 - 3 * (k - 1);
        let n_scalar = nv + (k - 1) * ne + n_int * mesh.num_cells();
        let nloc = element.len();
        let mut cell_dofs = Vec::with_capacity(nloc * mesh.num_cells());
        let mut coords = vec![Vec2::default(); n_scalar];
        for (c, cell) in mesh.cells.iter().enumerate() {
            let start = cell_dofs.len();
            cell_dofs.extend_from_slice(&cell[..3]);
            for e in 0..3 {
                let base = nv + (k - 1) * mesh.edge_index(c, e);
                let forward = cell[e] < cell[(e + 1) % 3];
                for j in 0..k - 1 {
                    cell_dofs.push(if forward { base + j } else { base + k - 2 - j });
                }
            }
            for j in 0..n_int {
                cell_dofs.push(nv + (k - 1) * ne + n_int * c + j);
            }
            let g = mesh.cell_geometry(c);
            for (&dof, &xi) in cell_dofs[start..].iter().zip(element.nodes()) {
                coords[dof] = g.map(xi);
            }
        }
        let assembly = CellRules::new(&element, 2 * k, 2 * k + 2);
        let accuracy = CellRules::new(&element, 2 * k + 2, 2 * k + 4);
        Ok(Self { mesh, field_count, element, cell_dofs, coords, assembly, accuracy })
    }

    pub fn mesh(&self) -> &Mesh {
        &self.mesh
    }

    pub fn mesh_arc(&self) -> &Arc<Mesh> {
        &self.mesh
    }

    pub fn degree(&self) -> usize {
        self.element.degree
    }

    pub fn field_count(&self) -> usize {
        self.field_count
    }

    pub fn element(&self) -> &ReferenceElement {
        &self.element
    }

    /// Dofs of one field.
    pub fn scalar_dofs(&self) -> usize {
        self.coords.len()
    }

    /// Length of coefficient vectors, `field_count * scalar_dofs`.
    pub fn ndofs(&self) -> usize {
        self.field_count * self.coords.len()
    }

    pub fn cell_dofs(&self, c: usize) -> &[usize] {
        let n = self.element.len();
        &self.cell_dofs[c * n..(c + 1) * n]
    }

    pub fn coordinates(&self) -> &[Vec2] {
        &self.coords
    }

    /// Same mesh and degree with a different number of fields.
    pub fn with_fields(&self, field_count: usize) -> Result<Self> {
        if !(1..=2).contains(&field_count) {
            return Err(Error::Domain(format!("field count {field_count} (expected 1 or 2)")));
        }
        Ok(Self { field_count, ..self.clone() })
    }

    /// Gauss rule on `tag` with enough points for products of traces.
    pub fn boundary_quadrature(&self, tag: BoundaryTag) -> BoundaryQuadrature {
        self.mesh.boundary_quadrature(tag, self.degree() + 3)
    }

    /// Global scalar dofs with a nonzero trace on facet `f`, and their
    /// local indices in the parent cell.
    pub fn facet_dofs(&self, f: usize) -> (Vec<usize>, &[usize]) {
        let facet = &self.mesh.facets[f];
        let local = self.element.edge_nodes(facet.local_edge);
        let dofs = self.cell_dofs(facet.cell);
        (local.iter().map(|&i| dofs[i]).collect(), local)
    }

    /// `quad.len() x scalar_dofs` matrix of trace values at the quadrature
    /// points.
    pub fn trace_matrix(&self, quad: &BoundaryQuadrature) -> CsrMatrix<f64> {
        let ppf = quad.points_per_facet;
        let mut b = TripletBuilder::with_capacity(quad.len(), self.scalar_dofs(), quad.len() * (self.degree() + 1));
        for (fi, &f) in quad.facets.iter().enumerate() {
            let (dofs, local) = self.facet_dofs(f);
            for q in fi * ppf..(fi + 1) * ppf {
                let phi = self.element.eval(quad.reference[q]);
                for (&d, &l) in dofs.iter().zip(local) {
                    b.push(q, d, phi[l]);
                }
            }
        }
        b.build()
    }

    /// Field values of `u` at reference point `xi` of cell `c`; the second
    /// entry is zero for scalar spaces.
    pub fn evaluate_in(&self, u: &[Complex64], c: usize, xi: [f64; 2]) -> [Complex64; 2] {
        let phi = self.element.eval(xi);
        let n = self.scalar_dofs();
        let mut out = [Complex64::default(); 2];
        for (field, o) in out.iter_mut().enumerate().take(self.field_count) {
            *o = self.cell_dofs(c).iter().zip(&phi).map(|(&d, &p)| u[field * n + d] * p).sum();
        }
        out
    }

    /// Point evaluation; `None` outside the mesh.
    pub fn evaluate(&self, u: &[Complex64], p: Vec2) -> Option<[Complex64; 2]> {
        self.mesh.locate(p).map(|(c, xi)| self.evaluate_in(u, c, xi))
    }

    fn cell_matrices(&self, c: usize) -> (Vec<f64>, Vec<f64>) {
        let n = self.element.len();
        let g: CellGeometry = self.mesh.cell_geometry(c);
        let tab = self.assembly.for_cell(&self.mesh, c);
        let mut k = vec![0.0; n * n];
        let mut m = vec![0.0; n * n];
        let mut grads = vec![[0.0; 2]; n];
        for (q, (&xi, &w)) in tab.rule.points.iter().zip(&tab.rule.weights).enumerate() {
            let j = g.jacobian(xi);
            let wd = w * j[0].cross(j[1]);
            for (gp, &gr) in grads.iter_mut().zip(&tab.grads[q]) {
                *gp = physical_grad(j, gr);
            }
            let phi = &tab.values[q];
            for a in 0..n {
                for b in a..n {
                    k[a * n + b] += wd * (grads[a][0] * grads[b][0] + grads[a][1] * grads[b][1]);
                    m[a * n + b] += wd * phi[a] * phi[b];
                }
            }
        }
        for a in 0..n {
            for b in 0..a {
                k[a * n + b] = k[b * n + a];
                m[a * n + b] = m[b * n + a];
            }
        }
        (k, m)
    }

    /// Scalar stiffness and mass matrices.
    pub fn stiffness_and_mass(&self) -> (CsrMatrix<f64>, CsrMatrix<f64>) {
        let n = self.element.len();
        let ns = self.scalar_dofs();
        let (kt, mt) = (0..self.mesh.num_cells())
            .into_par_iter()
            .fold(
                || (Vec::new(), Vec::new()),
                |(mut kt, mut mt), c| {
                    let (k, m) = self.cell_matrices(c);
                    let dofs = self.cell_dofs(c);
                    for a in 0..n {
                        for b in 0..n {
                            kt.push((dofs[a], dofs[b], k[a * n + b]));
                            mt.push((dofs[a], dofs[b], m[a * n + b]));
                        }
                    }
                    (kt, mt)
                },
            )
            .reduce(
                || (Vec::new(), Vec::new()),
                |(mut k1, mut m1), (k2, m2)| {
                    k1.extend(k2);
                    m1.extend(m2);
                    (k1, m1)
                },
            );
        let build = |t: Vec<(usize, usize, f64)>| {
            let mut b = TripletBuilder::with_capacity(ns, ns, t.len());
            for (i, j, v) in t {
                b.push(i, j, v);
            }
            b.build()
        };
        (build(kt), build(mt))
    }

    /// Scalar boundary mass `<u, v>` over the facets of `quad`.
    pub fn boundary_mass(&self, quad: &BoundaryQuadrature) -> CsrMatrix<f64> {
        let ns = self.scalar_dofs();
        let ppf = quad.points_per_facet;
        let mut b = TripletBuilder::new(ns, ns);
        for (fi, &f) in quad.facets.iter().enumerate() {
            let (dofs, local) = self.facet_dofs(f);
            let mut m = vec![0.0; dofs.len() * dofs.len()];
            for q in fi * ppf..(fi + 1) * ppf {
                let phi = self.element.eval(quad.reference[q]);
                for (a, &la) in local.iter().enumerate() {
                    for (bb, &lb) in local.iter().enumerate() {
                        m[a * dofs.len() + bb] += quad.weights[q] * phi[la] * phi[lb];
                    }
                }
            }
            for (a, &da) in dofs.iter().enumerate() {
                for (bb, &db) in dofs.iter().enumerate() {
                    b.push(da, db, m[a * dofs.len() + bb]);
                }
            }
        }
        b.build()
    }

    /// Adds `int_quad values * conj(trace basis)` into the block of `field`.
    pub fn add_trace_load(&self, quad: &BoundaryQuadrature, field: usize, values: &[Complex64], out: &mut [Complex64]) {
        assert!(field < self.field_count);
        assert_eq!(values.len(), quad.len());
        let off = field * self.scalar_dofs();
        let ppf = quad.points_per_facet;
        for (fi, &f) in quad.facets.iter().enumerate() {
            let (dofs, local) = self.facet_dofs(f);
            for q in fi * ppf..(fi + 1) * ppf {
                let phi = self.element.eval(quad.reference[q]);
                let wv = values[q] * quad.weights[q];
                for (&d, &l) in dofs.iter().zip(local) {
                    out[off + d] += wv * phi[l];
                }
            }
        }
    }

    fn require_fields(&self, n: usize) -> Result<()> {
        if self.field_count != n {
            return Err(Error::Domain(format!("expected a space with {n} field(s), got {}", self.field_count)));
        }
        Ok(())
    }
}

/// Complex matrix `sum_k coef[f][g] * blocks[k]` placed into field blocks.
fn combine(space: &FeSpace, terms: &[(&CsrMatrix<f64>, [[Complex64; 2]; 2])]) -> SparseComplexMatrix {
    let ns = space.scalar_dofs();
    let nf = space.field_count();
    let cap: usize = terms.iter().map(|(m, _)| m.nnz() * nf * nf).sum();
    let mut b = TripletBuilder::with_capacity(nf * ns, nf * ns, cap);
    for (m, coef) in terms {
        for f in 0..nf {
            for g in 0..nf {
                let s = coef[f][g];
                if s != Complex64::default() {
                    for (i, j, v) in m.triplets() {
                        b.push(f * ns + i, g * ns + j, s * v);
                    }
                }
            }
        }
    }
    b.build()
}

/// Volume part of the coupled form.
pub fn assemble_a0(space: &FeSpace, p: &PhysicalParams) -> Result<SparseComplexMatrix> {
    space.require_fields(2)?;
    let (k, m) = space.stiffness_and_mass();
    let c = p.pressure_coefficient();
    let z = Complex64::default();
    let mm = Complex64::from(p.m);
    let ratio = p.lambda / p.m;
    let stiff = [[mm, z], [z, c]];
    let mass = [
        [-I, I * (p.gamma - 1.0) / p.gamma],
        [Complex64::from(p.gamma * (1.0 - ratio)), Complex64::from(-(p.gamma * (1.0 - ratio) + ratio))],
    ];
    Ok(combine(space, &[(&k, stiff), (&m, mass)]))
}

/// Block-diagonal mass matrix of the space.
pub fn assemble_mass(space: &FeSpace) -> SparseComplexMatrix {
    let (_, m) = space.stiffness_and_mass();
    let one = Complex64::from(1.0);
    let z = Complex64::default();
    combine(space, &[(&m, [[one, z], [z, one]])])
}

/// `-i <A U, Psi>_Sigma`; added to [`assemble_a0`] it gives the form with
/// the local condition `E dU/dn = i A U`.
pub fn assemble_local_bc(space: &FeSpace, a: &BcMatrix, quad: &BoundaryQuadrature) -> Result<SparseComplexMatrix> {
    space.require_fields(2)?;
    quad.expect_tag(BoundaryTag::Sigma)?;
    let mb = space.boundary_mass(quad);
    let coef = [0, 1].map(|f| [0, 1].map(|g| -I * a.a.entry(f, g)));
    Ok(combine(space, &[(&mb, coef)]))
}

/// `<g_T, v>_Gamma + <g_P, w>_Gamma` with `g(x, n) = [g_T, g_P]`, `n` the
/// normal pointing out of the computational domain.
pub fn assemble_neumann_rhs(
    space: &FeSpace,
    quad: &BoundaryQuadrature,
    g: impl Fn(Vec2, Vec2) -> [Complex64; 2],
) -> Result<ComplexVector> {
    space.require_fields(2)?;
    quad.expect_tag(BoundaryTag::Gamma)?;
    let vals: Vec<[Complex64; 2]> = quad.points.iter().zip(&quad.normals).map(|(&x, &n)| g(x, n)).collect();
    let mut out = vec![Complex64::default(); space.ndofs()];
    for field in 0..2 {
        let v: Vec<Complex64> = vals.iter().map(|p| p[field]).collect();
        space.add_trace_load(quad, field, &v, &mut out);
    }
    Ok(out)
}

/// `(grad u, grad v) - kappa^2 (u, v) - i sigma <u, v>_Sigma` on a scalar
/// space; the Robin term is present when `robin` is given.
pub fn assemble_helmholtz(
    space: &FeSpace,
    kappa: Complex64,
    robin: Option<(Complex64, &BoundaryQuadrature)>,
) -> Result<SparseComplexMatrix> {
    space.require_fields(1)?;
    let (k, m) = space.stiffness_and_mass();
    let z = Complex64::default();
    let one = Complex64::from(1.0);
    let mut terms = vec![(k, [[one, z], [z, z]]), (m, [[-kappa * kappa, z], [z, z]])];
    if let Some((sigma, quad)) = robin {
        quad.expect_tag(BoundaryTag::Sigma)?;
        terms.push((space.boundary_mass(quad), [[-I * sigma, z], [z, z]]));
    }
    let refs: Vec<_> = terms.iter().map(|(m, c)| (m, *c)).collect();
    Ok(combine(space, &refs))
}

/// `<g, v>_Gamma` on a scalar space.
pub fn assemble_helmholtz_rhs(
    space: &FeSpace,
    quad: &BoundaryQuadrature,
    g: impl Fn(Vec2, Vec2) -> Complex64,
) -> Result<ComplexVector> {
    space.require_fields(1)?;
    quad.expect_tag(BoundaryTag::Gamma)?;
    let vals: Vec<Complex64> = quad.points.iter().zip(&quad.normals).map(|(&x, &n)| g(x, n)).collect();
    let mut out = vec![Complex64::default(); space.ndofs()];
    space.add_trace_load(quad, 0, &vals, &mut out);
    Ok(out)
}

/// Lagrange interpolant of a scalar function (every field gets `f`).
pub fn interpolate(space: &FeSpace, f: impl Fn(Vec2) -> Complex64) -> ComplexVector {
    let vals: Vec<Complex64> = space.coordinates().iter().map(|&x| f(x)).collect();
    vals.iter().cycle().take(space.ndofs()).copied().collect()
}

/// Lagrange interpolant of `(T, P)`; only `T` is used on scalar spaces.
pub fn interpolate_fields(space: &FeSpace, f: impl Fn(Vec2) -> [Complex64; 2]) -> ComplexVector {
    let ns = space.scalar_dofs();
    let mut out = vec![Complex64::default(); space.ndofs()];
    for (d, &x) in space.coordinates().iter().enumerate() {
        let v = f(x);
        for (field, &val) in v.iter().enumerate().take(space.field_count()) {
            out[field * ns + d] = val;
        }
    }
    out
}

/// Squared absolute error and squared exact norm per field.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FieldNorms {
    pub error_sq: [f64; 2],
    pub exact_sq: [f64; 2],
}

impl FieldNorms {
    /// Root of the summed squared errors over the root of the summed
    /// squared exact norms.
    pub fn relative(&self) -> Result<f64> {
        let den: f64 = self.exact_sq.iter().sum();
        if den == 0.0 {
            return Err(Error::Domain("exact solution has zero norm".into()));
        }
        Ok((self.error_sq.iter().sum::<f64>() / den).sqrt())
    }

    /// Relative error of one field.
    pub fn relative_field(&self, field: usize) -> Result<f64> {
        if self.exact_sq[field] == 0.0 {
            return Err(Error::Domain(format!("exact field {field} has zero norm")));
        }
        Ok((self.error_sq[field] / self.exact_sq[field]).sqrt())
    }
}

/// Per-field L2 norms of `u_h - exact` and of `exact`.
pub fn l2_norms(space: &FeSpace, u: &[Complex64], exact: impl Fn(Vec2) -> [Complex64; 2] + Sync) -> FieldNorms {
    let nf = space.field_count();
    let ns = space.scalar_dofs();
    (0..space.mesh().num_cells())
        .into_par_iter()
        .map(|c| {
            let g = space.mesh().cell_geometry(c);
            let tab = space.accuracy.for_cell(space.mesh(), c);
            let dofs = space.cell_dofs(c);
            let mut acc = FieldNorms::default();
            for (q, (&xi, &w)) in tab.rule.points.iter().zip(&tab.rule.weights).enumerate() {
                let wd = w * g.det_jacobian(xi);
                let ex = exact(g.map(xi));
                for f in 0..nf {
                    let uh: Complex64 = dofs.iter().zip(&tab.values[q]).map(|(&d, &p)| u[f * ns + d] * p).sum();
                    acc.error_sq[f] += wd * (uh - ex[f]).norm_sqr();
                    acc.exact_sq[f] += wd * ex[f].norm_sqr();
                }
            }
            acc
        })
        .reduce(FieldNorms::default, |mut a, b| {
            for f in 0..2 {
                a.error_sq[f] += b.error_sq[f];
                a.exact_sq[f] += b.exact_sq[f];
            }
            a
        })
}

/// Relative L2 error of a scalar solution.
pub fn l2_error(space: &FeSpace, u: &[Complex64], exact: impl Fn(Vec2) -> Complex64 + Sync) -> Result<f64> {
    l2_norms(space, u, |x| [exact(x), Complex64::default()]).relative()
}

/// Relative error in the product norm `sqrt(|T|^2 + |P|^2)`.
pub fn l2_error_fields(
    space: &FeSpace,
    u: &[Complex64],
    exact: impl Fn(Vec2) -> [Complex64; 2] + Sync,
) -> Result<f64> {
    l2_norms(space, u, exact).relative()
}

/// One row per scalar dof: `x,y` then real and imaginary parts per field.
pub fn write_solution_csv(space: &FeSpace, u: &[Complex64], mut w: impl Write) -> Result<()> {
    let ns = space.scalar_dofs();
    if space.field_count() == 2 {
        writeln!(w, "x,y,T_re,T_im,P_re,P_im")?;
    } else {
        writeln!(w, "x,y,u_re,u_im")?;
    }
    for (d, x) in space.coordinates().iter().enumerate() {
        write!(w, "{:e},{:e}", x.x, x.y)?;
        for f in 0..space.field_count() {
            let v = u[f * ns + d];
            write!(w, ",{:e},{:e}", v.re, v.im)?;
        }
        writeln!(w)?;
    }
    Ok(())
}

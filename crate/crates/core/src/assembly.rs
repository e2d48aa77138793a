//! Element-level residuals and stiffness, global sparse assembly, Dirichlet
//! elimination and total-energy evaluation.
//!
//! The discrete equations are the stationarity conditions of the total
//! potential energy: for every element, quadrature of
//!
//! ```text
//! f_u = ∫ B_uᵀ P dx − f_ext            (displacement block, 60 entries)
//! g_χ = ∫ N_χᵀ S_m + B_χᵀ μ dx         (micromorphic block, 72 entries)
//! ```
//!
//! and the consistent stiffness with blocks
//!
//! ```text
//! K_uu = ∫ B_uᵀ D_uu B_u       K_uχ = ∫ B_uᵀ D_uχ N_χ
//! K_χu = K_uχᵀ                 K_χχ = ∫ Hχ N_χᵀ N_χ + K B_χᵀ B_χ
//! ```
//!
//! Residual and stiffness are exactly the first and second derivatives of
//! the discrete energy; the tests verify this against finite differences,
//! which is the master correctness property of the discretization.
//!
//! Element contributions are computed in parallel and scattered serially in
//! element order, so assembly is deterministic for a fixed mesh.

use std::sync::Arc;

use faer::sparse::{SparseColMatRef, SymbolicSparseColMat};
use nalgebra::DMatrix;
use rayon::prelude::*;
use thiserror::Error;

use crate::element::{gauss_rule, isoparametric_map, shape_quad8, ElementError, FACE_NODES};
use crate::material::{
    self, energy_total, MaterialError, MaterialParams, PointState, TangentBlocks,
};
use crate::mesh::{DofMap, Face, Formulation, Mesh, MeshError};
use crate::tensor::{Tensor2, Tensor3};

#[derive(Debug, Error)]
pub enum AssemblyError {
    #[error("non-positive jacobian in element {element} at quadrature point {gp}: det F = {det_f}")]
    NonPositiveJacobian {
        element: usize,
        gp: usize,
        det_f: f64,
    },
    #[error("dof {dof} prescribed twice with conflicting values {a} and {b}")]
    InconsistentBc { dof: usize, a: f64, b: f64 },
    #[error("element {element}: {source}")]
    BadElement {
        element: usize,
        source: ElementError,
    },
    #[error(transparent)]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Material(#[from] MaterialError),
}

/// Internal force vectors of one element.
#[derive(Debug, Clone)]
pub struct ElementVectors {
    /// Displacement block (force units), 60 entries.
    pub f_u: Vec<f64>,
    /// Micromorphic block (generalized force units), 72 entries; empty for
    /// the displacement-only formulation.
    pub g_chi: Vec<f64>,
}

/// Geometry data cached at one quadrature point.
#[derive(Debug, Clone)]
struct GpCache {
    /// Quadrature weight times jacobian determinant.
    w_detj: f64,
    grad_u: [[f64; 3]; 20],
    n_chi: [f64; 8],
    grad_chi: [[f64; 3]; 8],
}

/// A mesh equipped with DOF numbering, material and quadrature; owns the
/// cached reference-configuration shape data and the sparsity pattern.
pub struct Discretization {
    pub mesh: Mesh,
    pub dofmap: DofMap,
    pub params: MaterialParams,
    pub formulation: Formulation,
    gp_cache: Vec<Vec<GpCache>>,
    pattern: Arc<SystemPattern>,
}

impl Discretization {
    /// Builds the discretization with the 27-point Gauss rule.
    pub fn new(
        mesh: Mesh,
        params: MaterialParams,
        formulation: Formulation,
    ) -> Result<Self, AssemblyError> {
        Self::with_quadrature(mesh, params, formulation, 3)
    }

    pub fn with_quadrature(
        mesh: Mesh,
        params: MaterialParams,
        formulation: Formulation,
        quad_order: usize,
    ) -> Result<Self, AssemblyError> {
        params.validate(formulation == Formulation::Mixed)?;
        let rule = gauss_rule(quad_order).map_err(|source| AssemblyError::BadElement {
            element: usize::MAX,
            source,
        })?;
        let dofmap = DofMap::new(&mesh, formulation);
        let mut gp_cache = Vec::with_capacity(mesh.n_elements());
        for e in 0..mesh.n_elements() {
            let coords = mesh.element_coords(e);
            let mut gps = Vec::with_capacity(rule.points.len());
            for &(xi, w) in &rule.points {
                let m = isoparametric_map(&coords, xi)
                    .map_err(|source| AssemblyError::BadElement { element: e, source })?;
                gps.push(GpCache {
                    w_detj: w * m.det_jac,
                    grad_u: m.grad_u,
                    n_chi: m.n_chi,
                    grad_chi: m.grad_chi,
                });
            }
            gp_cache.push(gps);
        }
        let pattern = Arc::new(SystemPattern::new(&mesh, &dofmap));
        Ok(Self {
            mesh,
            dofmap,
            params,
            formulation,
            gp_cache,
            pattern,
        })
    }

    pub fn n_dofs(&self) -> usize {
        self.dofmap.n_dofs()
    }

    pub fn n_local_dofs(&self) -> usize {
        match self.formulation {
            Formulation::Mixed => 132,
            Formulation::Local => 60,
        }
    }

    pub fn pattern(&self) -> &Arc<SystemPattern> {
        &self.pattern
    }

    /// Fresh global DOF vector: displacements zero, micromorphic field set to
    /// the identity (the cofactor of the undeformed state).
    pub fn initial_fields(&self) -> Vec<f64> {
        let mut d = vec![0.0; self.n_dofs()];
        let id = crate::tensor::pack2(&Tensor2::identity());
        for slot in 0..self.dofmap.corner_nodes.len() {
            for c in 0..9 {
                d[self.dofmap.n_u_dofs + 9 * slot + c] = id[c];
            }
        }
        d
    }

    fn element_local_dofs(&self, e: usize, d: &[f64]) -> Vec<f64> {
        self.dofmap
            .element_dofs(&self.mesh, e)
            .iter()
            .map(|&g| d[g])
            .collect()
    }

    /// Kinematic state at one quadrature point from element-local DOFs.
    fn gp_state(&self, gp: &GpCache, ed: &[f64]) -> PointState {
        let mut f = Tensor2::identity();
        for a in 0..20 {
            let g = &gp.grad_u[a];
            for i in 0..3 {
                let u = ed[3 * a + i];
                f[(i, 0)] += u * g[0];
                f[(i, 1)] += u * g[1];
                f[(i, 2)] += u * g[2];
            }
        }
        let mut chi = Tensor2::zero();
        let mut grad_chi = Tensor3::zero();
        if self.formulation == Formulation::Mixed {
            for c in 0..8 {
                let n = gp.n_chi[c];
                let g = &gp.grad_chi[c];
                for p in 0..9 {
                    let v = ed[60 + 9 * c + p];
                    let (i, j) = (p / 3, p % 3);
                    chi[(i, j)] += v * n;
                    grad_chi[(i, j, 0)] += v * g[0];
                    grad_chi[(i, j, 1)] += v * g[1];
                    grad_chi[(i, j, 2)] += v * g[2];
                }
            }
        }
        PointState { f, chi, grad_chi }
    }

    /// Deformation gradient at a reference point of one element.
    pub fn deformation_gradient(&self, e: usize, d: &[f64], xi: [f64; 3]) -> Tensor2 {
        let coords = self.mesh.element_coords(e);
        let m = isoparametric_map(&coords, xi).expect("cached mesh has positive jacobians");
        let ed = self.element_local_dofs(e, d);
        let mut f = Tensor2::identity();
        for a in 0..20 {
            for i in 0..3 {
                for j in 0..3 {
                    f[(i, j)] += ed[3 * a + i] * m.grad_u[a][j];
                }
            }
        }
        f
    }

    /// Stored energy of one element.
    pub fn element_energy(&self, e: usize, d: &[f64]) -> Result<f64, AssemblyError> {
        let ed = self.element_local_dofs(e, d);
        self.element_energy_local(e, &ed)
    }

    fn element_energy_local(&self, e: usize, ed: &[f64]) -> Result<f64, AssemblyError> {
        let mut energy = 0.0;
        for (gp_idx, gp) in self.gp_cache[e].iter().enumerate() {
            let s = self.gp_state(gp, ed);
            let w = match self.formulation {
                Formulation::Mixed => energy_total(&self.params, &s),
                Formulation::Local => {
                    let j = s.f.det();
                    material::u_vol(&self.params, j).map(|u| material::w0(&self.params, &s.f) + u)
                }
            };
            match w {
                Ok(v) => energy += gp.w_detj * v,
                Err(MaterialError::NonPositiveJacobian(det_f)) => {
                    return Err(AssemblyError::NonPositiveJacobian {
                        element: e,
                        gp: gp_idx,
                        det_f,
                    })
                }
                Err(err) => return Err(err.into()),
            }
        }
        Ok(energy)
    }

    /// Internal force vectors of one element.
    pub fn element_residual(&self, e: usize, d: &[f64]) -> Result<ElementVectors, AssemblyError> {
        let ed = self.element_local_dofs(e, d);
        self.element_residual_local(e, &ed)
    }

    fn element_residual_local(&self, e: usize, ed: &[f64]) -> Result<ElementVectors, AssemblyError> {
        let mixed = self.formulation == Formulation::Mixed;
        let mut f_u = vec![0.0; 60];
        let mut g_chi = vec![0.0; if mixed { 72 } else { 0 }];
        for (gp_idx, gp) in self.gp_cache[e].iter().enumerate() {
            let s = self.gp_state(gp, ed);
            let pk = if mixed {
                material::first_pk_stress(&self.params, &s.f, &s.chi)
            } else {
                material::stress_local(&self.params, &s.f)
            };
            let pk = match pk {
                Ok(p) => p,
                Err(MaterialError::NonPositiveJacobian(det_f)) => {
                    return Err(AssemblyError::NonPositiveJacobian {
                        element: e,
                        gp: gp_idx,
                        det_f,
                    })
                }
                Err(err) => return Err(err.into()),
            };
            let w = gp.w_detj;
            for a in 0..20 {
                let g = &gp.grad_u[a];
                for i in 0..3 {
                    f_u[3 * a + i] += w * (pk[(i, 0)] * g[0] + pk[(i, 1)] * g[1] + pk[(i, 2)] * g[2]);
                }
            }
            if mixed {
                let s_m = material::relative_stress(&self.params, &s.f, &s.chi);
                let mu = material::higher_order_stress(&self.params, &s.grad_chi);
                for c in 0..8 {
                    let n = gp.n_chi[c];
                    let g = &gp.grad_chi[c];
                    for p in 0..9 {
                        let (i, j) = (p / 3, p % 3);
                        g_chi[9 * c + p] += w
                            * (n * s_m[(i, j)]
                                + mu[(i, j, 0)] * g[0]
                                + mu[(i, j, 1)] * g[1]
                                + mu[(i, j, 2)] * g[2]);
                    }
                }
            }
        }
        Ok(ElementVectors { f_u, g_chi })
    }

    /// Consistent stiffness of one element (132×132 mixed, 60×60 local).
    pub fn element_stiffness(&self, e: usize, d: &[f64]) -> Result<DMatrix<f64>, AssemblyError> {
        let ed = self.element_local_dofs(e, d);
        self.element_stiffness_local(e, &ed)
    }

    fn element_stiffness_local(&self, e: usize, ed: &[f64]) -> Result<DMatrix<f64>, AssemblyError> {
        let mixed = self.formulation == Formulation::Mixed;
        let nl = self.n_local_dofs();
        let mut k = DMatrix::zeros(nl, nl);
        for (gp_idx, gp) in self.gp_cache[e].iter().enumerate() {
            let s = self.gp_state(gp, ed);
            let blocks: Result<TangentBlocks, MaterialError> = if mixed {
                material::tangent_blocks(&self.params, &s.f, &s.chi)
            } else {
                material::tangent_local(&self.params, &s.f).map(|d_uu| TangentBlocks {
                    d_uu,
                    d_uchi: crate::tensor::Tensor4::zero(),
                    d_chichi_mass: 0.0,
                    d_chichi_grad: 0.0,
                })
            };
            let blocks = match blocks {
                Ok(b) => b,
                Err(MaterialError::NonPositiveJacobian(det_f)) => {
                    return Err(AssemblyError::NonPositiveJacobian {
                        element: e,
                        gp: gp_idx,
                        det_f,
                    })
                }
                Err(err) => return Err(err.into()),
            };
            let w = gp.w_detj;
            let duu = blocks.d_uu.packed();

            // K_uu = B_uᵀ D_uu B_u with the sparsity of B_u unrolled:
            // tmp[r][3b+k] = Σ_l duu[r][3k+l] grad_u[b][l]
            let mut tmp = [[0.0f64; 60]; 9];
            for (r, tr) in tmp.iter_mut().enumerate() {
                let row = &duu[r];
                for b in 0..20 {
                    let g = &gp.grad_u[b];
                    for kk in 0..3 {
                        tr[3 * b + kk] =
                            row[3 * kk] * g[0] + row[3 * kk + 1] * g[1] + row[3 * kk + 2] * g[2];
                    }
                }
            }
            for a in 0..20 {
                let g = &gp.grad_u[a];
                for i in 0..3 {
                    let row = 3 * a + i;
                    let (t0, t1, t2) = (&tmp[3 * i], &tmp[3 * i + 1], &tmp[3 * i + 2]);
                    for col in 0..60 {
                        k[(row, col)] += w * (g[0] * t0[col] + g[1] * t1[col] + g[2] * t2[col]);
                    }
                }
            }

            if mixed {
                // K_uχ = B_uᵀ D_uχ N_χ and its transpose
                let duc = blocks.d_uchi.packed();
                let mut bd = [[0.0f64; 9]; 60];
                for a in 0..20 {
                    let g = &gp.grad_u[a];
                    for i in 0..3 {
                        let r = 3 * a + i;
                        for q in 0..9 {
                            bd[r][q] = g[0] * duc[3 * i][q]
                                + g[1] * duc[3 * i + 1][q]
                                + g[2] * duc[3 * i + 2][q];
                        }
                    }
                }
                for r in 0..60 {
                    for c in 0..8 {
                        let n = gp.n_chi[c] * w;
                        for q in 0..9 {
                            let v = bd[r][q] * n;
                            k[(r, 60 + 9 * c + q)] += v;
                            k[(60 + 9 * c + q, r)] += v;
                        }
                    }
                }

                // K_χχ: mass part Hχ NᵀN and gradient part K BᵀB, diagonal
                // over the 9 packed components
                for c in 0..8 {
                    for dd in 0..8 {
                        let gc = &gp.grad_chi[c];
                        let gd = &gp.grad_chi[dd];
                        let m = w
                            * (blocks.d_chichi_mass * gp.n_chi[c] * gp.n_chi[dd]
                                + blocks.d_chichi_grad
                                    * (gc[0] * gd[0] + gc[1] * gd[1] + gc[2] * gd[2]));
                        for p in 0..9 {
                            k[(60 + 9 * c + p, 60 + 9 * dd + p)] += m;
                        }
                    }
                }
            }
        }
        Ok(k)
    }

    /// Total potential energy `Π = Σ_e ∫ Ŵ − f_ext · d`; returns `+∞` when
    /// any quadrature point has `det F ≤ 0`.
    pub fn total_energy(&self, d: &[f64], f_ext: &[f64]) -> f64 {
        let internal: Result<f64, AssemblyError> = (0..self.mesh.n_elements())
            .into_par_iter()
            .map(|e| self.element_energy(e, d))
            .try_reduce(|| 0.0, |a, b| Ok(a + b));
        match internal {
            Ok(v) => v - f_ext.iter().zip(d).map(|(f, d)| f * d).sum::<f64>(),
            Err(_) => f64::INFINITY,
        }
    }

    /// Assembles the global residual and tangent at state `d`.
    pub fn assemble(&self, d: &[f64], f_ext: &[f64]) -> Result<SparseSystem, AssemblyError> {
        let contributions: Result<Vec<_>, AssemblyError> = (0..self.mesh.n_elements())
            .into_par_iter()
            .map(|e| {
                let ed = self.element_local_dofs(e, d);
                let r = self.element_residual_local(e, &ed)?;
                let k = self.element_stiffness_local(e, &ed)?;
                Ok((r, k))
            })
            .collect();
        let contributions = contributions?;

        let mut residual = vec![0.0; self.n_dofs()];
        let mut values = vec![0.0; self.pattern.nnz()];
        let nl = self.n_local_dofs();
        for (e, (r, k)) in contributions.into_iter().enumerate() {
            let dofs = self.dofmap.element_dofs(&self.mesh, e);
            for (i, &gi) in dofs.iter().enumerate() {
                residual[gi] += if i < 60 { r.f_u[i] } else { r.g_chi[i - 60] };
            }
            let slots = &self.pattern.elem_slots[e];
            for i in 0..nl {
                for j in 0..nl {
                    values[slots[i * nl + j] as usize] += k[(i, j)];
                }
            }
        }
        for (r, f) in residual.iter_mut().zip(f_ext) {
            *r -= f;
        }
        Ok(SparseSystem {
            pattern: Arc::clone(&self.pattern),
            values,
            residual,
        })
    }

    /// Assembles only the global residual (internal minus external forces).
    pub fn residual(&self, d: &[f64], f_ext: &[f64]) -> Result<Vec<f64>, AssemblyError> {
        let contributions: Result<Vec<_>, AssemblyError> = (0..self.mesh.n_elements())
            .into_par_iter()
            .map(|e| self.element_residual(e, d))
            .collect();
        let mut residual = vec![0.0; self.n_dofs()];
        for (e, r) in contributions?.into_iter().enumerate() {
            let dofs = self.dofmap.element_dofs(&self.mesh, e);
            for (i, &gi) in dofs.iter().enumerate() {
                residual[gi] += if i < 60 { r.f_u[i] } else { r.g_chi[i - 60] };
            }
        }
        for (r, f) in residual.iter_mut().zip(f_ext) {
            *r -= f;
        }
        Ok(residual)
    }

    /// Consistent external force vector for body loads and tractions on the
    /// reference configuration.
    pub fn external_force_vector(&self, load: &ExternalLoad) -> Vec<f64> {
        let mut f = vec![0.0; self.n_dofs()];
        let rule = gauss_rule(3).expect("order 3 is supported");
        if load.body_force != [0.0; 3] {
            for e in 0..self.mesh.n_elements() {
                let coords = self.mesh.element_coords(e);
                let conn = &self.mesh.elements[e];
                for &(xi, w) in &rule.points {
                    let m = isoparametric_map(&coords, xi).expect("valid reference mesh");
                    for a in 0..20 {
                        for i in 0..3 {
                            f[3 * conn[a] + i] += w * m.det_jac * m.n_u[a] * load.body_force[i];
                        }
                    }
                }
            }
        }
        let face_gauss = {
            let g = (3.0 / 5.0_f64).sqrt();
            let line = [(-g, 5.0 / 9.0), (0.0, 8.0 / 9.0), (g, 5.0 / 9.0)];
            let mut pts = Vec::new();
            for &(s, ws) in &line {
                for &(t, wt) in &line {
                    pts.push((s, t, ws * wt));
                }
            }
            pts
        };
        for &(face, traction) in &load.tractions {
            for (e, lf) in self.mesh.boundary_faces(face) {
                let conn = &self.mesh.elements[e];
                let face_nodes: Vec<usize> =
                    FACE_NODES[lf].iter().map(|&a| conn[a]).collect();
                for &(s, t, w) in &face_gauss {
                    let (n, dn) = shape_quad8(s, t);
                    let mut t_s = [0.0; 3];
                    let mut t_t = [0.0; 3];
                    for (slot, &node) in face_nodes.iter().enumerate() {
                        for i in 0..3 {
                            t_s[i] += dn[slot][0] * self.mesh.nodes[node][i];
                            t_t[i] += dn[slot][1] * self.mesh.nodes[node][i];
                        }
                    }
                    let cross = [
                        t_s[1] * t_t[2] - t_s[2] * t_t[1],
                        t_s[2] * t_t[0] - t_s[0] * t_t[2],
                        t_s[0] * t_t[1] - t_s[1] * t_t[0],
                    ];
                    let da = (cross[0] * cross[0] + cross[1] * cross[1] + cross[2] * cross[2])
                        .sqrt();
                    for (slot, &node) in face_nodes.iter().enumerate() {
                        for i in 0..3 {
                            f[3 * node + i] += w * da * n[slot] * traction[i];
                        }
                    }
                }
            }
        }
        f
    }
}

/// External loading: constant body force and face tractions on the reference
/// configuration. Experiments are Dirichlet-driven, so the default is zero.
#[derive(Debug, Clone, Default)]
pub struct ExternalLoad {
    pub body_force: [f64; 3],
    pub tractions: Vec<(Face, [f64; 3])>,
}

impl ExternalLoad {
    pub fn none() -> Self {
        Self::default()
    }
}

// ---------------------------------------------------------------------------
// global sparse structure
// ---------------------------------------------------------------------------

/// Symbolic CSR pattern of the assembled tangent plus per-element scatter
/// tables. Built once per discretization.
pub struct SystemPattern {
    pub n_dofs: usize,
    pub row_ptr: Vec<usize>,
    pub col_idx: Vec<usize>,
    /// For element `e`, local entry `(i,j)` (row-major) maps to CSR value
    /// slot `elem_slots[e][i*nl + j]`.
    elem_slots: Vec<Vec<u32>>,
}

impl SystemPattern {
    fn new(mesh: &Mesh, dofmap: &DofMap) -> Self {
        let n = dofmap.n_dofs();
        let mut rows: Vec<Vec<u32>> = vec![Vec::new(); n];
        for e in 0..mesh.n_elements() {
            let dofs = dofmap.element_dofs(mesh, e);
            for &i in &dofs {
                for &j in &dofs {
                    rows[i].push(j as u32);
                }
            }
        }
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut col_idx = Vec::new();
        row_ptr.push(0);
        for r in rows.iter_mut() {
            r.sort_unstable();
            r.dedup();
            col_idx.extend(r.iter().map(|&c| c as usize));
            row_ptr.push(col_idx.len());
        }

        let mut elem_slots = Vec::with_capacity(mesh.n_elements());
        for e in 0..mesh.n_elements() {
            let dofs = dofmap.element_dofs(mesh, e);
            let nl = dofs.len();
            let mut slots = Vec::with_capacity(nl * nl);
            for &i in &dofs {
                let row = &col_idx[row_ptr[i]..row_ptr[i + 1]];
                for &j in &dofs {
                    let pos = row.binary_search(&j).expect("pattern covers element");
                    slots.push((row_ptr[i] + pos) as u32);
                }
            }
            elem_slots.push(slots);
        }
        Self {
            n_dofs: n,
            row_ptr,
            col_idx,
            elem_slots,
        }
    }

    pub fn nnz(&self) -> usize {
        self.col_idx.len()
    }
}

/// Assembled tangent (CSR) and residual over all DOFs, together with the
/// shared pattern.
pub struct SparseSystem {
    pub pattern: Arc<SystemPattern>,
    pub values: Vec<f64>,
    pub residual: Vec<f64>,
}

impl SparseSystem {
    pub fn n_dofs(&self) -> usize {
        self.pattern.n_dofs
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let p = &self.pattern;
        let mut y = vec![0.0; p.n_dofs];
        for i in 0..p.n_dofs {
            let mut s = 0.0;
            for k in p.row_ptr[i]..p.row_ptr[i + 1] {
                s += self.values[k] * x[p.col_idx[k]];
            }
            y[i] = s;
        }
        y
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        let p = &self.pattern;
        let row = &p.col_idx[p.row_ptr[i]..p.row_ptr[i + 1]];
        match row.binary_search(&j) {
            Ok(pos) => self.values[p.row_ptr[i] + pos],
            Err(_) => 0.0,
        }
    }

    /// Largest relative deviation from symmetry.
    pub fn symmetry_error(&self) -> f64 {
        let p = &self.pattern;
        let mut diff: f64 = 0.0;
        let mut scale: f64 = 0.0;
        for i in 0..p.n_dofs {
            for k in p.row_ptr[i]..p.row_ptr[i + 1] {
                let j = p.col_idx[k];
                diff = diff.max((self.values[k] - self.entry(j, i)).abs());
                scale = scale.max(self.values[k].abs());
            }
        }
        if scale > 0.0 {
            diff / scale
        } else {
            0.0
        }
    }
}

// ---------------------------------------------------------------------------
// dirichlet elimination
// ---------------------------------------------------------------------------

/// One prescribed solution component.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DirichletBc {
    pub dof: usize,
    pub value: f64,
}

/// Deduplicated Dirichlet constraint set.
#[derive(Debug, Clone, Default)]
pub struct DirichletSet {
    /// Sorted by DOF.
    pub constraints: Vec<DirichletBc>,
}

impl DirichletSet {
    /// Collects constraints, rejecting conflicting duplicates.
    pub fn new(mut constraints: Vec<DirichletBc>) -> Result<Self, AssemblyError> {
        constraints.sort_by_key(|c| c.dof);
        let mut out: Vec<DirichletBc> = Vec::with_capacity(constraints.len());
        for c in constraints {
            match out.last() {
                Some(last) if last.dof == c.dof => {
                    if (last.value - c.value).abs() > 1e-12 * last.value.abs().max(1.0) {
                        return Err(AssemblyError::InconsistentBc {
                            dof: c.dof,
                            a: last.value,
                            b: c.value,
                        });
                    }
                }
                _ => out.push(c),
            }
        }
        Ok(Self { constraints: out })
    }

    pub fn dofs(&self) -> impl Iterator<Item = usize> + '_ {
        self.constraints.iter().map(|c| c.dof)
    }

    pub fn len(&self) -> usize {
        self.constraints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.constraints.is_empty()
    }

    /// Writes the prescribed values into a full DOF vector.
    pub fn apply_values(&self, d: &mut [f64]) {
        for c in &self.constraints {
            d[c.dof] = c.value;
        }
    }
}

/// Precomputed elimination of a fixed constraint set from a pattern: the
/// free×free CSC symbolic block, gather tables from the full CSR values, and
/// the fixed-column entries needed to move prescribed values to the
/// right-hand side.
pub struct Reduction {
    pub free_dofs: Vec<usize>,
    full_to_free: Vec<usize>,
    symbolic: SymbolicSparseColMat<usize>,
    /// CSC value slot -> full CSR value slot.
    gather: Vec<usize>,
    /// (free row index, CSR value slot, constraint index) of K_fc entries.
    fixed_entries: Vec<(usize, usize, u32)>,
}

const UNCONSTRAINED: usize = usize::MAX;

impl Reduction {
    pub fn new(pattern: &SystemPattern, bcs: &DirichletSet) -> Self {
        let n = pattern.n_dofs;
        let mut constraint_of = vec![UNCONSTRAINED; n];
        for (ci, c) in bcs.constraints.iter().enumerate() {
            constraint_of[c.dof] = ci;
        }
        let free_dofs: Vec<usize> = (0..n)
            .filter(|&i| constraint_of[i] == UNCONSTRAINED)
            .collect();
        let mut full_to_free = vec![UNCONSTRAINED; n];
        for (fi, &dof) in free_dofs.iter().enumerate() {
            full_to_free[dof] = fi;
        }

        // the pattern is structurally symmetric, so the CSC columns of the
        // free block equal its CSR rows
        let nf = free_dofs.len();
        let mut col_ptr = Vec::with_capacity(nf + 1);
        let mut row_idx = Vec::new();
        let mut gather = Vec::new();
        let mut fixed_entries = Vec::new();
        col_ptr.push(0usize);
        for (fi, &dof) in free_dofs.iter().enumerate() {
            for k in pattern.row_ptr[dof]..pattern.row_ptr[dof + 1] {
                let col = pattern.col_idx[k];
                let cf = full_to_free[col];
                if cf != UNCONSTRAINED {
                    row_idx.push(cf);
                    gather.push(k);
                } else {
                    fixed_entries.push((fi, k, constraint_of[col] as u32));
                }
            }
            col_ptr.push(row_idx.len());
        }
        let symbolic = SymbolicSparseColMat::new_checked(nf, nf, col_ptr, None, row_idx);
        Self {
            free_dofs,
            full_to_free,
            symbolic,
            gather,
            fixed_entries,
        }
    }

    pub fn n_free(&self) -> usize {
        self.free_dofs.len()
    }

    /// Extracts the reduced matrix values and right-hand side
    /// `-r_f - K_fc v_c`, where `v_c` are the prescribed solution values of
    /// the constraint set.
    pub fn reduce(&self, system: &SparseSystem, bcs: &DirichletSet) -> ReducedSystem {
        let mut values = Vec::with_capacity(self.gather.len());
        values.extend(self.gather.iter().map(|&k| system.values[k]));
        let mut rhs: Vec<f64> = self
            .free_dofs
            .iter()
            .map(|&dof| -system.residual[dof])
            .collect();
        for &(fi, k, ci) in &self.fixed_entries {
            rhs[fi] -= system.values[k] * bcs.constraints[ci as usize].value;
        }
        ReducedSystem { values, rhs }
    }

    /// Borrowed faer view of the reduced matrix for a value vector produced
    /// by [`Reduction::reduce`].
    pub fn mat_ref<'a>(&'a self, values: &'a [f64]) -> SparseColMatRef<'a, usize, f64> {
        SparseColMatRef::new(self.symbolic.as_ref(), values)
    }

    /// Scatters a free-DOF solution and the prescribed values into a
    /// full-length update vector.
    pub fn expand(&self, x_free: &[f64], bcs: &DirichletSet) -> Vec<f64> {
        let mut full = vec![0.0; self.full_to_free.len()];
        for (fi, &dof) in self.free_dofs.iter().enumerate() {
            full[dof] = x_free[fi];
        }
        for c in &bcs.constraints {
            full[c.dof] = c.value;
        }
        full
    }

    /// Sum of the residual over the constrained DOFs of one component:
    /// the reaction resultant.
    pub fn reaction_sum(&self, system: &SparseSystem, bcs: &DirichletSet, comp: usize) -> f64 {
        bcs.dofs()
            .filter(|dof| dof % 3 == comp)
            .map(|dof| system.residual[dof])
            .sum()
    }
}

/// Reduced linear system `K_ff x = rhs` in CSC value order of the
/// [`Reduction`] that produced it.
pub struct ReducedSystem {
    pub values: Vec<f64>,
    pub rhs: Vec<f64>,
}

//! Structured block meshes of 20-node hexahedra and DOF numbering.
//!
//! [`generate_block`] builds a tensor-product grid of serendipity bricks on
//! `[0,l1] × [0,l2] × [0,l3]`. Nodes live on the refined lattice with odd
//! indices marking edge midpoints; lattice sites with more than one odd index
//! (face and body centers) carry no node. Element connectivity uses the VTK
//! quadratic-hexahedron ordering throughout, so meshes export directly as
//! cell type 25.
//!
//! [`DofMap`] numbers 3 displacement DOFs on every node and, for the mixed
//! formulation, 9 micromorphic DOFs on every corner node (132 DOFs per
//! element). Micromorphic DOFs come after all displacement DOFs.

use thiserror::Error;

use crate::element::FACE_NODES;

#[derive(Debug, Error, PartialEq)]
pub enum MeshError {
    #[error("invalid mesh specification: {0}")]
    InvalidMeshSpec(String),
}

/// Boundary faces of the block, encoded as bit flags on nodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Face {
    Xmin,
    Xmax,
    Ymin,
    Ymax,
    Zmin,
    Zmax,
}

impl Face {
    pub const ALL: [Face; 6] = [
        Face::Xmin,
        Face::Xmax,
        Face::Ymin,
        Face::Ymax,
        Face::Zmin,
        Face::Zmax,
    ];

    fn bit(self) -> u8 {
        match self {
            Face::Xmin => 1,
            Face::Xmax => 2,
            Face::Ymin => 4,
            Face::Ymax => 8,
            Face::Zmin => 16,
            Face::Zmax => 32,
        }
    }
}

/// A block mesh of 20-node hexahedra.
#[derive(Debug, Clone)]
pub struct Mesh {
    /// Node coordinates (length units).
    pub nodes: Vec<[f64; 3]>,
    /// Element connectivity, 20 node ids each in VTK order (corners first).
    pub elements: Vec<[usize; 20]>,
    /// Per-node boundary-face flags.
    face_flags: Vec<u8>,
    /// Block dimensions and subdivision used to generate the mesh.
    pub extent: [f64; 3],
    pub divisions: [usize; 3],
}

impl Mesh {
    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn n_elements(&self) -> usize {
        self.elements.len()
    }

    /// Gathers the coordinates of one element's nodes.
    pub fn element_coords(&self, e: usize) -> [[f64; 3]; 20] {
        let conn = &self.elements[e];
        let mut c = [[0.0; 3]; 20];
        for (slot, &n) in conn.iter().enumerate() {
            c[slot] = self.nodes[n];
        }
        c
    }

    pub fn node_on_face(&self, node: usize, face: Face) -> bool {
        self.face_flags[node] & face.bit() != 0
    }

    pub fn node_on_boundary(&self, node: usize) -> bool {
        self.face_flags[node] != 0
    }

    /// All nodes on a boundary face.
    pub fn face_nodes(&self, face: Face) -> Vec<usize> {
        (0..self.n_nodes())
            .filter(|&n| self.node_on_face(n, face))
            .collect()
    }

    /// Element faces lying on a boundary face, as (element, local face index).
    pub fn boundary_faces(&self, face: Face) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for (e, conn) in self.elements.iter().enumerate() {
            for (lf, nodes) in FACE_NODES.iter().enumerate() {
                if nodes.iter().all(|&a| self.node_on_face(conn[a], face)) {
                    out.push((e, lf));
                }
            }
        }
        out
    }

    /// Centroid of one element.
    pub fn element_centroid(&self, e: usize) -> [f64; 3] {
        let mut c = [0.0; 3];
        // corners suffice for block elements
        for &n in self.elements[e][..8].iter() {
            for i in 0..3 {
                c[i] += self.nodes[n][i] / 8.0;
            }
        }
        c
    }
}

/// Generates a structured block mesh with `nx × ny × nz` elements on
/// `[0,l1] × [0,l2] × [0,l3]`.
pub fn generate_block(
    l1: f64,
    l2: f64,
    l3: f64,
    nx: usize,
    ny: usize,
    nz: usize,
) -> Result<Mesh, MeshError> {
    if !(l1 > 0.0 && l2 > 0.0 && l3 > 0.0) {
        return Err(MeshError::InvalidMeshSpec(format!(
            "block dimensions must be positive, got {l1} × {l2} × {l3}"
        )));
    }
    if nx == 0 || ny == 0 || nz == 0 {
        return Err(MeshError::InvalidMeshSpec(format!(
            "element counts must be positive, got {nx} × {ny} × {nz}"
        )));
    }

    // refined lattice: index (i,j,k) of extent (2nx+1)(2ny+1)(2nz+1);
    // a lattice site carries a node iff at most one index is odd
    let (mx, my, mz) = (2 * nx + 1, 2 * ny + 1, 2 * nz + 1);
    let lattice_id = |i: usize, j: usize, k: usize| (k * my + j) * mx + i;
    let mut node_of_site = vec![usize::MAX; mx * my * mz];
    let mut nodes = Vec::new();
    let mut face_flags = Vec::new();
    for k in 0..mz {
        for j in 0..my {
            for i in 0..mx {
                let odd = (i % 2) + (j % 2) + (k % 2);
                if odd > 1 {
                    continue;
                }
                node_of_site[lattice_id(i, j, k)] = nodes.len();
                nodes.push([
                    l1 * i as f64 / (mx - 1) as f64,
                    l2 * j as f64 / (my - 1) as f64,
                    l3 * k as f64 / (mz - 1) as f64,
                ]);
                let mut flags = 0u8;
                if i == 0 {
                    flags |= Face::Xmin.bit();
                }
                if i == mx - 1 {
                    flags |= Face::Xmax.bit();
                }
                if j == 0 {
                    flags |= Face::Ymin.bit();
                }
                if j == my - 1 {
                    flags |= Face::Ymax.bit();
                }
                if k == 0 {
                    flags |= Face::Zmin.bit();
                }
                if k == mz - 1 {
                    flags |= Face::Zmax.bit();
                }
                face_flags.push(flags);
            }
        }
    }

    // lattice offsets of the 20 nodes relative to the element origin,
    // matching element::NODE_XI
    const OFFSETS: [[usize; 3]; 20] = [
        [0, 0, 0],
        [2, 0, 0],
        [2, 2, 0],
        [0, 2, 0],
        [0, 0, 2],
        [2, 0, 2],
        [2, 2, 2],
        [0, 2, 2],
        [1, 0, 0],
        [2, 1, 0],
        [1, 2, 0],
        [0, 1, 0],
        [1, 0, 2],
        [2, 1, 2],
        [1, 2, 2],
        [0, 1, 2],
        [0, 0, 1],
        [2, 0, 1],
        [2, 2, 1],
        [0, 2, 1],
    ];

    let mut elements = Vec::with_capacity(nx * ny * nz);
    for ez in 0..nz {
        for ey in 0..ny {
            for ex in 0..nx {
                let mut conn = [0usize; 20];
                for (slot, off) in OFFSETS.iter().enumerate() {
                    let site = lattice_id(2 * ex + off[0], 2 * ey + off[1], 2 * ez + off[2]);
                    conn[slot] = node_of_site[site];
                    debug_assert_ne!(conn[slot], usize::MAX);
                }
                elements.push(conn);
            }
        }
    }

    Ok(Mesh {
        nodes,
        elements,
        face_flags,
        extent: [l1, l2, l3],
        divisions: [nx, ny, nz],
    })
}

/// Which fields are discretized.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Formulation {
    /// Displacement and micromorphic field (132 DOFs per element).
    Mixed,
    /// Displacement only (60 DOFs per element); no regularization.
    Local,
}

/// Global DOF numbering: displacement DOFs `3·node + comp` for all nodes,
/// then micromorphic DOFs `n_u + 9·slot + comp` for corner nodes.
#[derive(Debug, Clone)]
pub struct DofMap {
    pub formulation: Formulation,
    pub n_nodes: usize,
    pub n_u_dofs: usize,
    pub n_chi_dofs: usize,
    /// Corner slot of each node, if the node carries micromorphic DOFs.
    chi_slot: Vec<Option<u32>>,
    /// Node of each corner slot.
    pub corner_nodes: Vec<usize>,
}

impl DofMap {
    pub fn new(mesh: &Mesh, formulation: Formulation) -> Self {
        let n_nodes = mesh.n_nodes();
        let mut chi_slot = vec![None; n_nodes];
        let mut corner_nodes = Vec::new();
        if formulation == Formulation::Mixed {
            for conn in &mesh.elements {
                for &n in &conn[..8] {
                    if chi_slot[n].is_none() {
                        chi_slot[n] = Some(corner_nodes.len() as u32);
                        corner_nodes.push(n);
                    }
                }
            }
        }
        let n_chi_dofs = 9 * corner_nodes.len();
        Self {
            formulation,
            n_nodes,
            n_u_dofs: 3 * n_nodes,
            n_chi_dofs,
            chi_slot,
            corner_nodes,
        }
    }

    pub fn n_dofs(&self) -> usize {
        self.n_u_dofs + self.n_chi_dofs
    }

    pub fn u_dof(&self, node: usize, comp: usize) -> usize {
        3 * node + comp
    }

    /// Micromorphic DOF of corner node `node`, packed component `0..9`.
    pub fn chi_dof(&self, node: usize, comp: usize) -> Option<usize> {
        self.chi_slot[node].map(|slot| self.n_u_dofs + 9 * slot as usize + comp)
    }

    pub fn chi_slot_of(&self, node: usize) -> Option<usize> {
        self.chi_slot[node].map(|s| s as usize)
    }

    /// DOFs of one element in local order: 60 displacement DOFs
    /// (node-major), then 72 micromorphic DOFs for the mixed formulation.
    pub fn element_dofs(&self, mesh: &Mesh, e: usize) -> Vec<usize> {
        let conn = &mesh.elements[e];
        let n_local = match self.formulation {
            Formulation::Mixed => 132,
            Formulation::Local => 60,
        };
        let mut dofs = Vec::with_capacity(n_local);
        for &n in conn.iter() {
            for c in 0..3 {
                dofs.push(self.u_dof(n, c));
            }
        }
        if self.formulation == Formulation::Mixed {
            for &n in &conn[..8] {
                for c in 0..9 {
                    dofs.push(self.chi_dof(n, c).expect("corner node has chi dofs"));
                }
            }
        }
        dofs
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::element::{gauss_rule, isoparametric_map};
    use approx::assert_relative_eq;

    #[test]
    fn single_element_block() {
        let m = generate_block(1.0, 1.0, 1.0, 1, 1, 1).unwrap();
        assert_eq!(m.n_elements(), 1);
        assert_eq!(m.n_nodes(), 20);
    }

    #[test]
    fn block_10x10x2() {
        let m = generate_block(5.0, 5.0, 0.5, 10, 10, 2).unwrap();
        assert_eq!(m.n_elements(), 200);
        // serendipity node count: corners + one midside per edge
        let expect = 11 * 11 * 3 + 10 * 11 * 3 + 11 * 10 * 3 + 11 * 11 * 2;
        assert_eq!(m.n_nodes(), expect);
    }

    #[test]
    fn invalid_specs_rejected() {
        assert!(matches!(
            generate_block(0.0, 1.0, 1.0, 1, 1, 1),
            Err(MeshError::InvalidMeshSpec(_))
        ));
        assert!(matches!(
            generate_block(1.0, 1.0, 1.0, 0, 1, 1),
            Err(MeshError::InvalidMeshSpec(_))
        ));
        assert!(generate_block(1.0, -1.0, 1.0, 1, 1, 1).is_err());
    }

    #[test]
    fn volume_by_quadrature() {
        for (nx, ny, nz) in [(1, 1, 1), (3, 2, 1), (20, 20, 2)] {
            let m = generate_block(5.0, 5.0, 0.5, nx, ny, nz).unwrap();
            let rule = gauss_rule(3).unwrap();
            let mut vol = 0.0;
            for e in 0..m.n_elements() {
                let coords = m.element_coords(e);
                for &(xi, w) in &rule.points {
                    vol += w * isoparametric_map(&coords, xi).unwrap().det_jac;
                }
            }
            assert_relative_eq!(vol, 12.5, max_relative = 1e-12);
        }
    }

    #[test]
    fn boundary_flags() {
        let m = generate_block(2.0, 1.0, 1.0, 2, 1, 1).unwrap();
        for &n in &m.face_nodes(Face::Xmin) {
            assert_eq!(m.nodes[n][0], 0.0);
        }
        for &n in &m.face_nodes(Face::Xmax) {
            assert_eq!(m.nodes[n][0], 2.0);
        }
        // every node of a 1-element-thick block touches the boundary
        assert!((0..m.n_nodes()).all(|n| m.node_on_boundary(n)));
        // a boundary face is shared by exactly the elements adjacent to it
        assert_eq!(m.boundary_faces(Face::Xmin).len(), 1);
        assert_eq!(m.boundary_faces(Face::Ymin).len(), 2);
    }

    #[test]
    fn interior_nodes_exist_on_finer_blocks() {
        let m = generate_block(1.0, 1.0, 1.0, 2, 2, 2).unwrap();
        let interior: Vec<_> = (0..m.n_nodes()).filter(|&n| !m.node_on_boundary(n)).collect();
        assert!(!interior.is_empty());
    }

    #[test]
    fn dof_counts() {
        let m = generate_block(1.0, 1.0, 1.0, 2, 3, 1).unwrap();
        let dm = DofMap::new(&m, Formulation::Mixed);
        assert_eq!(dm.n_u_dofs, 3 * m.n_nodes());
        assert_eq!(dm.corner_nodes.len(), 3 * 4 * 2);
        assert_eq!(dm.n_chi_dofs, 9 * dm.corner_nodes.len());
        for e in 0..m.n_elements() {
            let dofs = dm.element_dofs(&m, e);
            assert_eq!(dofs.len(), 132);
            // dense and non-overlapping
            let mut sorted = dofs.clone();
            sorted.sort_unstable();
            sorted.dedup();
            assert_eq!(sorted.len(), 132);
        }

        let dm = DofMap::new(&m, Formulation::Local);
        assert_eq!(dm.n_dofs(), 3 * m.n_nodes());
        assert_eq!(dm.element_dofs(&m, 0).len(), 60);
    }

    #[test]
    fn positive_jacobian_everywhere() {
        let m = generate_block(5.0, 5.0, 0.5, 4, 4, 2).unwrap();
        let rule = gauss_rule(3).unwrap();
        for e in 0..m.n_elements() {
            let coords = m.element_coords(e);
            for &(xi, _) in &rule.points {
                assert!(isoparametric_map(&coords, xi).unwrap().det_jac > 0.0);
            }
        }
    }
}

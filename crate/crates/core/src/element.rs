//! Twenty-node serendipity hexahedron: shape functions, Gauss quadrature and
//! the isoparametric mapping.
//!
//! Displacements use the quadratic serendipity basis on all 20 nodes; the
//! micromorphic field uses the trilinear basis on the 8 corner nodes. With 3
//! displacement components per node and 9 micromorphic components per corner
//! this gives the 20·3 + 8·9 = 132 degrees of freedom of the mixed element.
//!
//! Node numbering follows the VTK quadratic-hexahedron convention (cell type
//! 25): corners 0-7, then mid-edge nodes 8-11 on the bottom face, 12-15 on
//! the top face, 16-19 on the vertical edges.

use thiserror::Error;

use crate::tensor::Tensor2;

#[derive(Debug, Error, PartialEq)]
pub enum ElementError {
    #[error("unsupported quadrature order {0} (supported: 2, 3)")]
    InvalidQuadrature(usize),
    #[error("inverted element: jacobian determinant {0} at a quadrature point")]
    InvertedElement(f64),
}

/// Reference coordinates of the 20 nodes in VTK order.
pub const NODE_XI: [[f64; 3]; 20] = [
    // corners
    [-1.0, -1.0, -1.0],
    [1.0, -1.0, -1.0],
    [1.0, 1.0, -1.0],
    [-1.0, 1.0, -1.0],
    [-1.0, -1.0, 1.0],
    [1.0, -1.0, 1.0],
    [1.0, 1.0, 1.0],
    [-1.0, 1.0, 1.0],
    // bottom-face edge midpoints
    [0.0, -1.0, -1.0],
    [1.0, 0.0, -1.0],
    [0.0, 1.0, -1.0],
    [-1.0, 0.0, -1.0],
    // top-face edge midpoints
    [0.0, -1.0, 1.0],
    [1.0, 0.0, 1.0],
    [0.0, 1.0, 1.0],
    [-1.0, 0.0, 1.0],
    // vertical edge midpoints
    [-1.0, -1.0, 0.0],
    [1.0, -1.0, 0.0],
    [1.0, 1.0, 0.0],
    [-1.0, 1.0, 0.0],
];

/// Serendipity shape functions of the displacement field and their reference
/// gradients at `ξ ∈ [-1,1]³`.
pub fn shape_u(xi: [f64; 3]) -> ([f64; 20], [[f64; 3]; 20]) {
    let (x, y, z) = (xi[0], xi[1], xi[2]);
    let mut n = [0.0; 20];
    let mut dn = [[0.0; 3]; 20];
    for a in 0..20 {
        let [x0, y0, z0] = NODE_XI[a];
        if a < 8 {
            let p = 1.0 + x0 * x;
            let q = 1.0 + y0 * y;
            let r = 1.0 + z0 * z;
            let s = x0 * x + y0 * y + z0 * z - 2.0;
            n[a] = 0.125 * p * q * r * s;
            dn[a][0] = 0.125 * x0 * q * r * (s + p);
            dn[a][1] = 0.125 * y0 * p * r * (s + q);
            dn[a][2] = 0.125 * z0 * p * q * (s + r);
        } else if x0 == 0.0 {
            let q = 1.0 + y0 * y;
            let r = 1.0 + z0 * z;
            n[a] = 0.25 * (1.0 - x * x) * q * r;
            dn[a][0] = -0.5 * x * q * r;
            dn[a][1] = 0.25 * (1.0 - x * x) * y0 * r;
            dn[a][2] = 0.25 * (1.0 - x * x) * q * z0;
        } else if y0 == 0.0 {
            let p = 1.0 + x0 * x;
            let r = 1.0 + z0 * z;
            n[a] = 0.25 * p * (1.0 - y * y) * r;
            dn[a][0] = 0.25 * x0 * (1.0 - y * y) * r;
            dn[a][1] = -0.5 * y * p * r;
            dn[a][2] = 0.25 * p * (1.0 - y * y) * z0;
        } else {
            let p = 1.0 + x0 * x;
            let q = 1.0 + y0 * y;
            n[a] = 0.25 * p * q * (1.0 - z * z);
            dn[a][0] = 0.25 * x0 * q * (1.0 - z * z);
            dn[a][1] = 0.25 * p * y0 * (1.0 - z * z);
            dn[a][2] = -0.5 * z * p * q;
        }
    }
    (n, dn)
}

/// Trilinear shape functions of the micromorphic field on the 8 corner nodes.
pub fn shape_chi(xi: [f64; 3]) -> ([f64; 8], [[f64; 3]; 8]) {
    let (x, y, z) = (xi[0], xi[1], xi[2]);
    let mut n = [0.0; 8];
    let mut dn = [[0.0; 3]; 8];
    for a in 0..8 {
        let [x0, y0, z0] = NODE_XI[a];
        let p = 1.0 + x0 * x;
        let q = 1.0 + y0 * y;
        let r = 1.0 + z0 * z;
        n[a] = 0.125 * p * q * r;
        dn[a][0] = 0.125 * x0 * q * r;
        dn[a][1] = 0.125 * p * y0 * r;
        dn[a][2] = 0.125 * p * q * z0;
    }
    (n, dn)
}

/// Tensor-product Gauss quadrature on the reference cube `[-1,1]³`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    /// (reference coordinate, weight) pairs; weights sum to 8.
    pub points: Vec<([f64; 3], f64)>,
}

/// Gauss rule of the given 1D order per axis (2 or 3 points).
///
/// The 27-point rule integrates polynomials up to degree 5 per axis and is
/// the default for the serendipity element.
pub fn gauss_rule(order: usize) -> Result<QuadratureRule, ElementError> {
    let line: Vec<(f64, f64)> = match order {
        2 => {
            let g = 1.0 / 3.0_f64.sqrt();
            vec![(-g, 1.0), (g, 1.0)]
        }
        3 => {
            let g = (3.0 / 5.0_f64).sqrt();
            vec![(-g, 5.0 / 9.0), (0.0, 8.0 / 9.0), (g, 5.0 / 9.0)]
        }
        other => return Err(ElementError::InvalidQuadrature(other)),
    };
    let mut points = Vec::with_capacity(order * order * order);
    for &(z, wz) in &line {
        for &(y, wy) in &line {
            for &(x, wx) in &line {
                points.push(([x, y, z], wx * wy * wz));
            }
        }
    }
    Ok(QuadratureRule { points })
}

/// Result of the isoparametric mapping at one reference point.
#[derive(Debug, Clone)]
pub struct MappedPoint {
    /// Physical coordinate.
    pub x: [f64; 3],
    /// Geometric jacobian `∂x/∂ξ`.
    pub jac: Tensor2,
    pub det_jac: f64,
    /// Displacement shape values.
    pub n_u: [f64; 20],
    /// Physical gradients of the displacement shape functions.
    pub grad_u: [[f64; 3]; 20],
    /// Micromorphic shape values.
    pub n_chi: [f64; 8],
    /// Physical gradients of the micromorphic shape functions.
    pub grad_chi: [[f64; 3]; 8],
}

/// Evaluates the isoparametric map of an element with node coordinates
/// `coords` (VTK order) at reference point `ξ`.
pub fn isoparametric_map(coords: &[[f64; 3]; 20], xi: [f64; 3]) -> Result<MappedPoint, ElementError> {
    let (n_u, dn_u) = shape_u(xi);
    let (n_chi, dn_chi) = shape_chi(xi);

    let mut jac = Tensor2::zero();
    for a in 0..20 {
        for i in 0..3 {
            for j in 0..3 {
                jac[(i, j)] += coords[a][i] * dn_u[a][j];
            }
        }
    }
    let det_jac = jac.det();
    if det_jac <= 0.0 {
        return Err(ElementError::InvertedElement(det_jac));
    }
    let jac_inv = jac.inverse().expect("positive determinant");

    let mut x = [0.0; 3];
    for a in 0..20 {
        for i in 0..3 {
            x[i] += n_u[a] * coords[a][i];
        }
    }

    // ∂N/∂x_i = ∂N/∂ξ_j (J⁻¹)_ji
    let mut grad_u = [[0.0; 3]; 20];
    for a in 0..20 {
        for i in 0..3 {
            let mut s = 0.0;
            for j in 0..3 {
                s += dn_u[a][j] * jac_inv[(j, i)];
            }
            grad_u[a][i] = s;
        }
    }
    let mut grad_chi = [[0.0; 3]; 8];
    for a in 0..8 {
        for i in 0..3 {
            let mut s = 0.0;
            for j in 0..3 {
                s += dn_chi[a][j] * jac_inv[(j, i)];
            }
            grad_chi[a][i] = s;
        }
    }

    Ok(MappedPoint {
        x,
        jac,
        det_jac,
        n_u,
        grad_u,
        n_chi,
        grad_chi,
    })
}

/// The 8 shape-function slots (4 corners, then 4 edge midpoints) of each of
/// the 6 element faces, as local node indices. Faces are listed in the order
/// `xmin, xmax, ymin, ymax, zmin, zmax` of the reference cube; corner cycles
/// are consistent between corners and midpoints.
pub const FACE_NODES: [[usize; 8]; 6] = [
    [0, 3, 7, 4, 11, 19, 15, 16], // ξ = -1
    [1, 2, 6, 5, 9, 18, 13, 17],  // ξ = +1
    [0, 1, 5, 4, 8, 17, 12, 16],  // η = -1
    [3, 2, 6, 7, 10, 18, 14, 19], // η = +1
    [0, 1, 2, 3, 8, 9, 10, 11],   // ζ = -1
    [4, 5, 6, 7, 12, 13, 14, 15], // ζ = +1
];

/// Serendipity shape functions of an 8-node quadratic quadrilateral (the
/// trace of the hex on one face) at face coordinates `(s, t) ∈ [-1,1]²`,
/// together with the reference-face gradients. Node order matches
/// [`FACE_NODES`]: corners at `(-1,-1),(1,-1),(1,1),(-1,1)`, then edge
/// midpoints between consecutive corners.
pub fn shape_quad8(s: f64, t: f64) -> ([f64; 8], [[f64; 2]; 8]) {
    const CORNERS: [[f64; 2]; 4] = [[-1.0, -1.0], [1.0, -1.0], [1.0, 1.0], [-1.0, 1.0]];
    const MIDS: [[f64; 2]; 4] = [[0.0, -1.0], [1.0, 0.0], [0.0, 1.0], [-1.0, 0.0]];
    let mut n = [0.0; 8];
    let mut dn = [[0.0; 2]; 8];
    for a in 0..4 {
        let [s0, t0] = CORNERS[a];
        let p = 1.0 + s0 * s;
        let q = 1.0 + t0 * t;
        let r = s0 * s + t0 * t - 1.0;
        n[a] = 0.25 * p * q * r;
        dn[a][0] = 0.25 * s0 * q * (r + p);
        dn[a][1] = 0.25 * t0 * p * (r + q);
    }
    for a in 0..4 {
        let [s0, t0] = MIDS[a];
        if s0 == 0.0 {
            let q = 1.0 + t0 * t;
            n[4 + a] = 0.5 * (1.0 - s * s) * q;
            dn[4 + a][0] = -s * q;
            dn[4 + a][1] = 0.5 * (1.0 - s * s) * t0;
        } else {
            let p = 1.0 + s0 * s;
            n[4 + a] = 0.5 * p * (1.0 - t * t);
            dn[4 + a][0] = 0.5 * s0 * (1.0 - t * t);
            dn[4 + a][1] = -t * p;
        }
    }
    (n, dn)
}

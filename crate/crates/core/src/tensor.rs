//! Dense small-tensor algebra for 3D continuum kinematics.
//!
//! Provides second-, third- and fourth-order tensors over `f64` together with
//! the tensor cross product
//!
//! ```text
//! (A × B)ij = ε_ikm ε_jln A_kl B_mn
//! ```
//!
//! which gives compact expressions for the cofactor and its derivative:
//!
//! ```text
//! Cof F = ½ F × F,       ∂(Cof F)/∂F = F×,      (A×)ijkl = ε_imk ε_jnl A_mn
//! ```
//!
//! Fourth-order tensors are stored in a packed 9×9 layout using the row-major
//! index map `(i,j) -> 3i + j`, so double contractions become ordinary
//! matrix-vector products on packed quantities (see [`pack2`] / [`pack3`]).
//!
//! All operations are pure functions on value types and can be called from
//! any number of threads.

use std::ops::{Add, AddAssign, Index, IndexMut, Mul, Neg, Sub};

use thiserror::Error;

/// Errors from dense tensor operations.
#[derive(Debug, Error, PartialEq, Eq)]
pub enum TensorError {
    /// Inversion was requested for a matrix with zero determinant.
    #[error("matrix is singular (zero determinant)")]
    SingularMatrix,
}

/// Cyclic successor pairs: `CYC[i] = (i+1 mod 3, i+2 mod 3)`.
///
/// For fixed `i`, the Levi-Civita symbol `ε_ikm` is `+1` at `(k,m) = CYC[i]`
/// and `-1` at the swapped pair; all other entries vanish. The kernels below
/// unroll the permutation sums through this table instead of looping over the
/// full symbol.
const CYC: [(usize, usize); 3] = [(1, 2), (2, 0), (0, 1)];

/// Levi-Civita permutation symbol `ε_ijk`.
///
/// Intended for reference oracles and tests; the production kernels use the
/// unrolled forms.
pub fn levi_civita(i: usize, j: usize, k: usize) -> f64 {
    match (i, j, k) {
        (0, 1, 2) | (1, 2, 0) | (2, 0, 1) => 1.0,
        (0, 2, 1) | (2, 1, 0) | (1, 0, 2) => -1.0,
        _ => 0.0,
    }
}

// ---------------------------------------------------------------------------
// second order
// ---------------------------------------------------------------------------

/// Second-order tensor: a dense 3×3 real matrix.
///
/// Houses the deformation gradient `F`, right Cauchy-Green tensor `C`,
/// stresses, the micromorphic field `χ` and friends. No symmetry is assumed.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Tensor2 {
    e: [[f64; 3]; 3],
}

impl Tensor2 {
    pub fn new(e: [[f64; 3]; 3]) -> Self {
        Self { e }
    }

    pub fn zero() -> Self {
        Self::default()
    }

    pub fn identity() -> Self {
        Self::diag(1.0, 1.0, 1.0)
    }

    pub fn diag(a: f64, b: f64, c: f64) -> Self {
        let mut t = Self::zero();
        t.e[0][0] = a;
        t.e[1][1] = b;
        t.e[2][2] = c;
        t
    }

    /// Dyadic product `a ⊗ b` of two vectors.
    pub fn outer(a: [f64; 3], b: [f64; 3]) -> Self {
        let mut t = Self::zero();
        for i in 0..3 {
            for j in 0..3 {
                t.e[i][j] = a[i] * b[j];
            }
        }
        t
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zero();
        for i in 0..3 {
            for j in 0..3 {
                t.e[i][j] = self.e[j][i];
            }
        }
        t
    }

    pub fn trace(&self) -> f64 {
        self.e[0][0] + self.e[1][1] + self.e[2][2]
    }

    /// Double contraction `A : B = A_ij B_ij`.
    pub fn ddot(&self, other: &Self) -> f64 {
        let mut s = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                s += self.e[i][j] * other.e[i][j];
            }
        }
        s
    }

    /// Frobenius norm `sqrt(A : A)`.
    pub fn norm(&self) -> f64 {
        self.ddot(self).sqrt()
    }

    pub fn det(&self) -> f64 {
        let e = &self.e;
        e[0][0] * (e[1][1] * e[2][2] - e[1][2] * e[2][1])
            - e[0][1] * (e[1][0] * e[2][2] - e[1][2] * e[2][0])
            + e[0][2] * (e[1][0] * e[2][1] - e[1][1] * e[2][0])
    }

    /// Cofactor matrix: signed 2×2 minors, `Cof F = det(F) F^{-T}` for
    /// invertible `F`. Defined for all `F`, singular ones included.
    pub fn cofactor(&self) -> Self {
        let mut c = Self::zero();
        for i in 0..3 {
            let (i1, i2) = CYC[i];
            for j in 0..3 {
                let (j1, j2) = CYC[j];
                c.e[i][j] = self.e[i1][j1] * self.e[i2][j2] - self.e[i1][j2] * self.e[i2][j1];
            }
        }
        c
    }

    /// Matrix inverse via the cofactor; fails on zero determinant.
    pub fn inverse(&self) -> Result<Self, TensorError> {
        let d = self.det();
        if d == 0.0 || !d.is_finite() {
            return Err(TensorError::SingularMatrix);
        }
        Ok(self.cofactor().transpose() * (1.0 / d))
    }

    /// Matrix-vector product `A b`.
    pub fn mul_vec(&self, b: [f64; 3]) -> [f64; 3] {
        let mut r = [0.0; 3];
        for i in 0..3 {
            for j in 0..3 {
                r[i] += self.e[i][j] * b[j];
            }
        }
        r
    }

    /// Transposed matrix-vector product `Aᵀ b`.
    pub fn tr_mul_vec(&self, b: [f64; 3]) -> [f64; 3] {
        let mut r = [0.0; 3];
        for i in 0..3 {
            for j in 0..3 {
                r[i] += self.e[j][i] * b[j];
            }
        }
        r
    }

    pub fn is_finite(&self) -> bool {
        self.e.iter().flatten().all(|v| v.is_finite())
    }
}

impl Index<(usize, usize)> for Tensor2 {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.e[i][j]
    }
}

impl IndexMut<(usize, usize)> for Tensor2 {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.e[i][j]
    }
}

impl Add for Tensor2 {
    type Output = Tensor2;
    fn add(self, rhs: Tensor2) -> Tensor2 {
        let mut t = self;
        for i in 0..3 {
            for j in 0..3 {
                t.e[i][j] += rhs.e[i][j];
            }
        }
        t
    }
}

impl AddAssign for Tensor2 {
    fn add_assign(&mut self, rhs: Tensor2) {
        for i in 0..3 {
            for j in 0..3 {
                self.e[i][j] += rhs.e[i][j];
            }
        }
    }
}

impl Sub for Tensor2 {
    type Output = Tensor2;
    fn sub(self, rhs: Tensor2) -> Tensor2 {
        let mut t = self;
        for i in 0..3 {
            for j in 0..3 {
                t.e[i][j] -= rhs.e[i][j];
            }
        }
        t
    }
}

impl Mul<f64> for Tensor2 {
    type Output = Tensor2;
    fn mul(self, s: f64) -> Tensor2 {
        let mut t = self;
        for i in 0..3 {
            for j in 0..3 {
                t.e[i][j] *= s;
            }
        }
        t
    }
}

impl Neg for Tensor2 {
    type Output = Tensor2;
    fn neg(self) -> Tensor2 {
        self * -1.0
    }
}

/// Matrix product `A B`.
impl Mul<Tensor2> for Tensor2 {
    type Output = Tensor2;
    fn mul(self, rhs: Tensor2) -> Tensor2 {
        let mut t = Tensor2::zero();
        for i in 0..3 {
            for j in 0..3 {
                let mut s = 0.0;
                for k in 0..3 {
                    s += self.e[i][k] * rhs.e[k][j];
                }
                t.e[i][j] = s;
            }
        }
        t
    }
}

/// Proper rotation about `axis` by `angle` (Rodrigues formula).
///
/// Convenience for objectivity and frame-indifference tests.
pub fn rotation(axis: [f64; 3], angle: f64) -> Tensor2 {
    let n = (axis[0] * axis[0] + axis[1] * axis[1] + axis[2] * axis[2]).sqrt();
    let u = [axis[0] / n, axis[1] / n, axis[2] / n];
    let (s, c) = angle.sin_cos();
    let mut k = Tensor2::zero();
    k[(0, 1)] = -u[2];
    k[(0, 2)] = u[1];
    k[(1, 0)] = u[2];
    k[(1, 2)] = -u[0];
    k[(2, 0)] = -u[1];
    k[(2, 1)] = u[0];
    Tensor2::identity() + k * s + (k * k) * (1.0 - c)
}

/// Tensor cross product of two second-order tensors:
///
/// ```text
/// (A × B)ij = ε_ikm ε_jln A_kl B_mn
/// ```
///
/// Bilinear and symmetric, `A × B = B × A`; satisfies `½ F × F = Cof F`.
pub fn tensor_cross(a: &Tensor2, b: &Tensor2) -> Tensor2 {
    let mut t = Tensor2::zero();
    for i in 0..3 {
        let (i1, i2) = CYC[i];
        for j in 0..3 {
            let (j1, j2) = CYC[j];
            // the two sign choices of each ε collapse to four products
            t.e[i][j] = a.e[i1][j1] * b.e[i2][j2] - a.e[i1][j2] * b.e[i2][j1]
                - a.e[i2][j1] * b.e[i1][j2]
                + a.e[i2][j2] * b.e[i1][j1];
        }
    }
    t
}

// ---------------------------------------------------------------------------
// third order
// ---------------------------------------------------------------------------

/// Third-order tensor, 3×3×3. Houses `∇χ` and the higher-order stress `μ`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Tensor3 {
    e: [[[f64; 3]; 3]; 3],
}

impl Tensor3 {
    pub fn zero() -> Self {
        Self::default()
    }

    /// Triple contraction `A ⋮ B = A_ijk B_ijk`.
    pub fn tddot(&self, other: &Self) -> f64 {
        let mut s = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    s += self.e[i][j][k] * other.e[i][j][k];
                }
            }
        }
        s
    }

    pub fn norm(&self) -> f64 {
        self.tddot(self).sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.e
            .iter()
            .flatten()
            .flatten()
            .all(|v| v.is_finite())
    }
}

impl Index<(usize, usize, usize)> for Tensor3 {
    type Output = f64;
    fn index(&self, (i, j, k): (usize, usize, usize)) -> &f64 {
        &self.e[i][j][k]
    }
}

impl IndexMut<(usize, usize, usize)> for Tensor3 {
    fn index_mut(&mut self, (i, j, k): (usize, usize, usize)) -> &mut f64 {
        &mut self.e[i][j][k]
    }
}

impl Add for Tensor3 {
    type Output = Tensor3;
    fn add(self, rhs: Tensor3) -> Tensor3 {
        let mut t = self;
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    t.e[i][j][k] += rhs.e[i][j][k];
                }
            }
        }
        t
    }
}

impl Sub for Tensor3 {
    type Output = Tensor3;
    fn sub(self, rhs: Tensor3) -> Tensor3 {
        let mut t = self;
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    t.e[i][j][k] -= rhs.e[i][j][k];
                }
            }
        }
        t
    }
}

impl Mul<f64> for Tensor3 {
    type Output = Tensor3;
    fn mul(self, s: f64) -> Tensor3 {
        let mut t = self;
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    t.e[i][j][k] *= s;
                }
            }
        }
        t
    }
}

// ---------------------------------------------------------------------------
// fourth order
// ---------------------------------------------------------------------------

/// Fourth-order tensor, 3×3×3×3, stored packed as a 9×9 matrix with the
/// row-major pair map `(i,j) -> 3i + j`.
///
/// Houses tangent blocks (`D_uu`, `D_uχ`) and the cofactor derivative `F×`.
/// Major symmetry `A_ijkl = A_klij` corresponds to symmetry of the packed
/// matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tensor4 {
    m: [[f64; 9]; 9],
}

impl Default for Tensor4 {
    fn default() -> Self {
        Self { m: [[0.0; 9]; 9] }
    }
}

impl Tensor4 {
    pub fn zero() -> Self {
        Self::default()
    }

    /// Fourth-order identity `𝕀_ijkl = δ_ik δ_jl` (identity matrix in the
    /// packed representation).
    pub fn identity() -> Self {
        let mut t = Self::zero();
        for r in 0..9 {
            t.m[r][r] = 1.0;
        }
        t
    }

    pub fn from_fn(mut f: impl FnMut(usize, usize, usize, usize) -> f64) -> Self {
        let mut t = Self::zero();
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    for l in 0..3 {
                        t.m[3 * i + j][3 * k + l] = f(i, j, k, l);
                    }
                }
            }
        }
        t
    }

    pub fn get(&self, i: usize, j: usize, k: usize, l: usize) -> f64 {
        self.m[3 * i + j][3 * k + l]
    }

    pub fn set(&mut self, i: usize, j: usize, k: usize, l: usize, v: f64) {
        self.m[3 * i + j][3 * k + l] = v;
    }

    /// Dyadic product of two second-order tensors, `(A ⊗ B)ijkl = A_ij B_kl`.
    pub fn dyad(a: &Tensor2, b: &Tensor2) -> Self {
        let pa = pack2(a);
        let pb = pack2(b);
        let mut t = Self::zero();
        for r in 0..9 {
            for c in 0..9 {
                t.m[r][c] = pa[r] * pb[c];
            }
        }
        t
    }

    /// Double contraction with a second-order tensor, `(𝔸 : B)ij = A_ijkl B_kl`.
    pub fn ddot2(&self, b: &Tensor2) -> Tensor2 {
        let pb = pack2(b);
        let mut out = [0.0; 9];
        for (r, row) in self.m.iter().enumerate() {
            let mut s = 0.0;
            for c in 0..9 {
                s += row[c] * pb[c];
            }
            out[r] = s;
        }
        unpack2(&out)
    }

    /// Composition `(𝔸 𝔹)ijkl = A_ijmn B_mnkl`: matrix product of the packed
    /// representations.
    pub fn compose(&self, other: &Self) -> Self {
        let mut t = Self::zero();
        for r in 0..9 {
            for k in 0..9 {
                let a = self.m[r][k];
                if a == 0.0 {
                    continue;
                }
                for c in 0..9 {
                    t.m[r][c] += a * other.m[k][c];
                }
            }
        }
        t
    }

    /// Major transpose `A_klij`.
    pub fn major_transpose(&self) -> Self {
        let mut t = Self::zero();
        for r in 0..9 {
            for c in 0..9 {
                t.m[r][c] = self.m[c][r];
            }
        }
        t
    }

    /// Largest relative deviation from major symmetry.
    pub fn major_asymmetry(&self) -> f64 {
        let mut diff: f64 = 0.0;
        let mut scale: f64 = 0.0;
        for r in 0..9 {
            for c in 0..9 {
                diff = diff.max((self.m[r][c] - self.m[c][r]).abs());
                scale = scale.max(self.m[r][c].abs());
            }
        }
        if scale > 0.0 {
            diff / scale
        } else {
            0.0
        }
    }

    pub fn norm(&self) -> f64 {
        self.m
            .iter()
            .flatten()
            .map(|v| v * v)
            .sum::<f64>()
            .sqrt()
    }

    /// Packed 9×9 view.
    pub fn packed(&self) -> &[[f64; 9]; 9] {
        &self.m
    }
}

impl Add for Tensor4 {
    type Output = Tensor4;
    fn add(self, rhs: Tensor4) -> Tensor4 {
        let mut t = self;
        for r in 0..9 {
            for c in 0..9 {
                t.m[r][c] += rhs.m[r][c];
            }
        }
        t
    }
}

impl Sub for Tensor4 {
    type Output = Tensor4;
    fn sub(self, rhs: Tensor4) -> Tensor4 {
        let mut t = self;
        for r in 0..9 {
            for c in 0..9 {
                t.m[r][c] -= rhs.m[r][c];
            }
        }
        t
    }
}

impl Mul<f64> for Tensor4 {
    type Output = Tensor4;
    fn mul(self, s: f64) -> Tensor4 {
        let mut t = self;
        for r in 0..9 {
            for c in 0..9 {
                t.m[r][c] *= s;
            }
        }
        t
    }
}

/// Fourth-order tensor from the cross product with a fixed second-order
/// tensor:
///
/// ```text
/// (A×)ijkl = ε_imk ε_jnl A_mn
/// ```
///
/// Satisfies `(A×) : H = A × H` for every `H`, carries major symmetry, and
/// gives the cofactor derivative as `∂(Cof F)/∂F = F×`.
pub fn cross_fourth(a: &Tensor2) -> Tensor4 {
    let mut t = Tensor4::zero();
    for i in 0..3 {
        for k in 0..3 {
            if i == k {
                continue;
            }
            let m = 3 - i - k;
            let s1 = levi_civita(i, m, k);
            for j in 0..3 {
                for l in 0..3 {
                    if j == l {
                        continue;
                    }
                    let n = 3 - j - l;
                    let s2 = levi_civita(j, n, l);
                    t.set(i, j, k, l, s1 * s2 * a[(m, n)]);
                }
            }
        }
    }
    t
}

// ---------------------------------------------------------------------------
// packed representations
// ---------------------------------------------------------------------------

/// Pack a second-order tensor into a 9-vector, row-major:
/// `[F11, F12, F13, F21, ..., F33]`.
pub fn pack2(t: &Tensor2) -> [f64; 9] {
    let mut v = [0.0; 9];
    for i in 0..3 {
        for j in 0..3 {
            v[3 * i + j] = t[(i, j)];
        }
    }
    v
}

/// Inverse of [`pack2`].
pub fn unpack2(v: &[f64; 9]) -> Tensor2 {
    let mut t = Tensor2::zero();
    for i in 0..3 {
        for j in 0..3 {
            t[(i, j)] = v[3 * i + j];
        }
    }
    t
}

/// Pack a third-order tensor into a 27-vector: 9 component slots of the
/// leading index pair, spatial (last) index fastest:
/// `g[3(3i + j) + k] = T_ijk`.
pub fn pack3(t: &Tensor3) -> [f64; 27] {
    let mut v = [0.0; 27];
    for i in 0..3 {
        for j in 0..3 {
            for k in 0..3 {
                v[3 * (3 * i + j) + k] = t[(i, j, k)];
            }
        }
    }
    v
}

/// Inverse of [`pack3`].
pub fn unpack3(v: &[f64; 27]) -> Tensor3 {
    let mut t = Tensor3::zero();
    for i in 0..3 {
        for j in 0..3 {
            for k in 0..3 {
                t[(i, j, k)] = v[3 * (3 * i + j) + k];
            }
        }
    }
    t
}

//! Central finite-difference verification of derivatives.
//!
//! These helpers only evaluate the function they are given, never the
//! analytic derivative under test, so they stay independent of the
//! implementation path they check. Used by the test suites and by the
//! `check-tangent` command.

use crate::tensor::{Tensor2, Tensor3, Tensor4};

/// Per-component step size: `h` scaled by the magnitude of the perturbed
/// entry, floored at `h` itself.
fn step(h: f64, v: f64) -> f64 {
    h * v.abs().max(1.0)
}

/// Gradient of a scalar function of a second-order tensor.
pub fn grad_scalar_t2(f: impl Fn(&Tensor2) -> f64, at: &Tensor2, h: f64) -> Tensor2 {
    let mut g = Tensor2::zero();
    for i in 0..3 {
        for j in 0..3 {
            let dh = step(h, at[(i, j)]);
            let mut p = *at;
            let mut m = *at;
            p[(i, j)] += dh;
            m[(i, j)] -= dh;
            g[(i, j)] = (f(&p) - f(&m)) / (2.0 * dh);
        }
    }
    g
}

/// Gradient of a scalar function of a third-order tensor.
pub fn grad_scalar_t3(f: impl Fn(&Tensor3) -> f64, at: &Tensor3, h: f64) -> Tensor3 {
    let mut g = Tensor3::zero();
    for i in 0..3 {
        for j in 0..3 {
            for k in 0..3 {
                let dh = step(h, at[(i, j, k)]);
                let mut p = *at;
                let mut m = *at;
                p[(i, j, k)] += dh;
                m[(i, j, k)] -= dh;
                g[(i, j, k)] = (f(&p) - f(&m)) / (2.0 * dh);
            }
        }
    }
    g
}

/// Jacobian of a tensor-valued function of a second-order tensor,
/// `(∂f_ij/∂x_kl)` as a fourth-order tensor.
pub fn jac_t2_t2(f: impl Fn(&Tensor2) -> Tensor2, at: &Tensor2, h: f64) -> Tensor4 {
    let mut jac = Tensor4::zero();
    for k in 0..3 {
        for l in 0..3 {
            let dh = step(h, at[(k, l)]);
            let mut p = *at;
            let mut m = *at;
            p[(k, l)] += dh;
            m[(k, l)] -= dh;
            let d = (f(&p) - f(&m)) * (0.5 / dh);
            for i in 0..3 {
                for j in 0..3 {
                    jac.set(i, j, k, l, d[(i, j)]);
                }
            }
        }
    }
    jac
}

/// Gradient of a scalar function of a DOF vector.
pub fn grad_scalar_vec(f: impl Fn(&[f64]) -> f64, at: &[f64], h: f64) -> Vec<f64> {
    let mut g = vec![0.0; at.len()];
    let mut x = at.to_vec();
    for i in 0..at.len() {
        let dh = step(h, at[i]);
        x[i] = at[i] + dh;
        let fp = f(&x);
        x[i] = at[i] - dh;
        let fm = f(&x);
        x[i] = at[i];
        g[i] = (fp - fm) / (2.0 * dh);
    }
    g
}

/// Jacobian of a vector function of a DOF vector, row index = output.
pub fn jac_vec_vec(f: impl Fn(&[f64]) -> Vec<f64>, at: &[f64], h: f64) -> Vec<Vec<f64>> {
    let n = at.len();
    let m = f(at).len();
    let mut jac = vec![vec![0.0; n]; m];
    let mut x = at.to_vec();
    for c in 0..n {
        let dh = step(h, at[c]);
        x[c] = at[c] + dh;
        let fp = f(&x);
        x[c] = at[c] - dh;
        let fm = f(&x);
        x[c] = at[c];
        for r in 0..m {
            jac[r][c] = (fp[r] - fm[r]) / (2.0 * dh);
        }
    }
    jac
}

/// Second derivative of `t -> f(t)` at `t = 0` by a symmetric stencil.
pub fn second_derivative_at_zero(f: impl Fn(f64) -> f64, h: f64) -> f64 {
    (f(h) - 2.0 * f(0.0) + f(-h)) / (h * h)
}

/// Relative Frobenius error `‖a − b‖ / ‖b‖`, falling back to the absolute
/// error when the reference vanishes.
pub fn rel_err_t2(a: &Tensor2, b: &Tensor2) -> f64 {
    let n = b.norm();
    if n > 0.0 {
        (*a - *b).norm() / n
    } else {
        a.norm()
    }
}

/// Same as [`rel_err_t2`] for fourth-order tensors.
pub fn rel_err_t4(a: &Tensor4, b: &Tensor4) -> f64 {
    let n = b.norm();
    if n > 0.0 {
        (*a - *b).norm() / n
    } else {
        a.norm()
    }
}

/// Same as [`rel_err_t2`] for third-order tensors.
pub fn rel_err_t3(a: &Tensor3, b: &Tensor3) -> f64 {
    let n = b.norm();
    if n > 0.0 {
        (*a - *b).norm() / n
    } else {
        a.norm()
    }
}

//! Strain-energy densities, stresses and analytic tangents for the
//! regularized models.
//!
//! The regularized energy density evaluated at a material point is
//!
//! ```text
//! Ŵ(F, χ, ∇χ) = W0(F) + U(J) + ½ Hχ (Cof F − χ) : (Cof F − χ) + ½ K ∇χ ⋮ ∇χ
//! ```
//!
//! with `J = det F`, an elastic part `W0`, a volumetric part
//! `U(J) = ½ Kv (ln J)²`, a penalty coupling the micromorphic field `χ` to
//! `Cof F`, and a gradient part. The conjugate quantities are
//!
//! ```text
//! S_m = ∂Ŵ/∂χ  = Hχ (χ − Cof F)                        relative stress
//! μ   = ∂Ŵ/∂∇χ = K ∇χ                                  higher-order stress
//! P   = ∂Ŵ/∂F  = P0 + U'(J) Cof F − S_m × F            first Piola-Kirchhoff
//! ```
//!
//! All elastic parts depend on `F` only through `C = FᵀF`, so stress and
//! tangent come from one chain rule. Writing `S₂ = ∂W0/∂C` and
//! `ℍ = ∂S₂/∂C`:
//!
//! ```text
//! P0_ij      = 2 F_ia S₂_aj
//! (𝔸₀)ijkl   = 2 δ_ik S₂_lj + 2 Σ_a F_ia (ℍ_aj,ln F_kn + ℍ_aj,ml F_km)
//! ```
//!
//! The tangent blocks of the coupled problem are the exact second
//! derivatives of `Ŵ`; every closed form here is verified against central
//! finite differences in the tests, which are the authoritative definition.

use thiserror::Error;

use crate::tensor::{cross_fourth, tensor_cross, Tensor2, Tensor3, Tensor4};

/// Errors from material-point evaluations.
#[derive(Debug, Error, PartialEq)]
pub enum MaterialError {
    /// A quantity requiring `det F > 0` was evaluated at `det F ≤ 0`.
    #[error("non-positive jacobian: det F = {0}")]
    NonPositiveJacobian(f64),
    /// Parameter set violates an invariant.
    #[error("invalid material parameters: {0}")]
    InvalidParams(String),
}

/// Elastic model selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Model {
    /// `W0 = λ/2 Tr(E)² + μ E:E` with `E = ½(C − I)`.
    StVenantKirchhoff,
    /// Normalized variant `W0 = (C − I) : (C − I)`.
    StVenantKirchhoffNormalized,
    /// Double-well `W0 = α ‖C − C̃¹‖² ‖C − C̃²‖²` with shear wells at `±ε`.
    DoubleWell,
}

/// Material parameters for all models plus the regularization terms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaterialParams {
    pub model: Model,
    /// Lamé λ (stress units), St. Venant-Kirchhoff only.
    pub lambda_lame: f64,
    /// Lamé μ (stress units), St. Venant-Kirchhoff only.
    pub mu_lame: f64,
    /// Double-well scale α (stress units).
    pub alpha: f64,
    /// Well shear magnitude ε (dimensionless).
    pub eps_well: f64,
    /// Penalty modulus Hχ (stress units).
    pub h_chi: f64,
    /// Gradient modulus K (stress · length² units).
    pub k_grad: f64,
    /// Volumetric modulus Kv (stress units).
    pub k_vol: f64,
}

impl MaterialParams {
    pub fn st_venant_kirchhoff(lambda: f64, mu: f64) -> Self {
        Self {
            model: Model::StVenantKirchhoff,
            lambda_lame: lambda,
            mu_lame: mu,
            alpha: 0.0,
            eps_well: 0.0,
            h_chi: 0.0,
            k_grad: 0.0,
            k_vol: 0.0,
        }
    }

    pub fn st_venant_kirchhoff_normalized() -> Self {
        Self {
            model: Model::StVenantKirchhoffNormalized,
            ..Self::st_venant_kirchhoff(0.0, 0.0)
        }
    }

    pub fn double_well(alpha: f64, eps_well: f64) -> Self {
        Self {
            model: Model::DoubleWell,
            alpha,
            eps_well,
            ..Self::st_venant_kirchhoff(0.0, 0.0)
        }
    }

    pub fn with_regularization(mut self, h_chi: f64, k_grad: f64) -> Self {
        self.h_chi = h_chi;
        self.k_grad = k_grad;
        self
    }

    pub fn with_volumetric(mut self, k_vol: f64) -> Self {
        self.k_vol = k_vol;
        self
    }

    /// Internal length `l = sqrt(K / Hχ)` of the screened-Poisson relation
    /// between `χ` and `Cof F`.
    pub fn internal_length(&self) -> f64 {
        (self.k_grad / self.h_chi).sqrt()
    }

    /// Checks the parameter invariants for the mixed formulation.
    pub fn validate(&self, mixed: bool) -> Result<(), MaterialError> {
        let bad = |msg: &str| Err(MaterialError::InvalidParams(msg.to_string()));
        if mixed && !(self.h_chi > 0.0) {
            return bad("h_chi must be > 0 for the mixed formulation");
        }
        if self.h_chi < 0.0 || self.k_grad < 0.0 || self.k_vol < 0.0 {
            return bad("h_chi, k_grad, k_vol must be non-negative");
        }
        if self.model == Model::DoubleWell && !(self.alpha > 0.0) {
            return bad("alpha must be > 0 for the double-well model");
        }
        if mixed && !self.internal_length().is_finite() {
            return bad("internal length sqrt(k_grad/h_chi) must be finite");
        }
        Ok(())
    }

    /// The two wells `C̃¹`, `C̃²` of the double-well model.
    pub fn wells(&self) -> (Tensor2, Tensor2) {
        let e = self.eps_well;
        let mut c1 = Tensor2::identity();
        c1[(0, 1)] = e;
        c1[(1, 0)] = e;
        c1[(1, 1)] = 1.0 + e * e;
        let mut c2 = Tensor2::identity();
        c2[(0, 1)] = -e;
        c2[(1, 0)] = -e;
        c2[(1, 1)] = 1.0 + e * e;
        (c1, c2)
    }

    /// Deformation gradients `F¹`, `F²` sitting in the wells: pure shears by
    /// `±ε`.
    pub fn well_gradients(&self) -> (Tensor2, Tensor2) {
        let mut f1 = Tensor2::identity();
        f1[(0, 1)] = self.eps_well;
        let mut f2 = Tensor2::identity();
        f2[(0, 1)] = -self.eps_well;
        (f1, f2)
    }
}

/// State of one material point of the mixed formulation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointState {
    /// Deformation gradient (dimensionless).
    pub f: Tensor2,
    /// Micromorphic field approximating `Cof F` (dimensionless).
    pub chi: Tensor2,
    /// Gradient of the micromorphic field (1/length units).
    pub grad_chi: Tensor3,
}

// ---------------------------------------------------------------------------
// elastic part W0 through C = FᵀF
// ---------------------------------------------------------------------------

fn right_cauchy_green(f: &Tensor2) -> Tensor2 {
    f.transpose() * *f
}

/// `φ(C)`, the elastic energy as a function of `C`.
fn elastic_phi(p: &MaterialParams, c: &Tensor2) -> f64 {
    match p.model {
        Model::StVenantKirchhoff => {
            let e = (*c - Tensor2::identity()) * 0.5;
            0.5 * p.lambda_lame * e.trace() * e.trace() + p.mu_lame * e.ddot(&e)
        }
        Model::StVenantKirchhoffNormalized => {
            let d = *c - Tensor2::identity();
            d.ddot(&d)
        }
        Model::DoubleWell => {
            let (c1, c2) = p.wells();
            let g1 = *c - c1;
            let g2 = *c - c2;
            p.alpha * g1.ddot(&g1) * g2.ddot(&g2)
        }
    }
}

/// `S₂ = ∂φ/∂C`, symmetric at symmetric `C`.
fn elastic_s2(p: &MaterialParams, c: &Tensor2) -> Tensor2 {
    match p.model {
        Model::StVenantKirchhoff => {
            let e = (*c - Tensor2::identity()) * 0.5;
            (Tensor2::identity() * (p.lambda_lame * e.trace()) + e * (2.0 * p.mu_lame)) * 0.5
        }
        Model::StVenantKirchhoffNormalized => (*c - Tensor2::identity()) * 2.0,
        Model::DoubleWell => {
            let (c1, c2) = p.wells();
            let g1 = *c - c1;
            let g2 = *c - c2;
            let d1 = g1.ddot(&g1);
            let d2 = g2.ddot(&g2);
            (g1 * d2 + g2 * d1) * (2.0 * p.alpha)
        }
    }
}

/// `ℍ_aj,mn = ∂S₂_aj/∂C_mn`, the entries of C treated as independent.
fn elastic_s2_tangent(p: &MaterialParams, c: &Tensor2) -> Tensor4 {
    match p.model {
        Model::StVenantKirchhoff => {
            let l4 = 0.25 * p.lambda_lame;
            let m2 = 0.5 * p.mu_lame;
            Tensor4::from_fn(|a, j, m, n| {
                let mut v = 0.0;
                if a == j && m == n {
                    v += l4;
                }
                if a == m && j == n {
                    v += m2;
                }
                v
            })
        }
        Model::StVenantKirchhoffNormalized => Tensor4::identity() * 2.0,
        Model::DoubleWell => {
            let (c1, c2) = p.wells();
            let g1 = *c - c1;
            let g2 = *c - c2;
            let d1 = g1.ddot(&g1);
            let d2 = g2.ddot(&g2);
            let mut h = Tensor4::dyad(&g1, &g2) + Tensor4::dyad(&g2, &g1);
            h = h * 2.0 + Tensor4::identity() * (d1 + d2);
            h * (2.0 * p.alpha)
        }
    }
}

/// Elastic energy density `W0(F)`. Defined for every `F`.
pub fn w0(p: &MaterialParams, f: &Tensor2) -> f64 {
    elastic_phi(p, &right_cauchy_green(f))
}

/// Elastic first Piola-Kirchhoff stress `P0 = ∂W0/∂F = 2 F S₂`.
pub fn p0(p: &MaterialParams, f: &Tensor2) -> Tensor2 {
    *f * elastic_s2(p, &right_cauchy_green(f)) * 2.0
}

/// Elasticity tensor `𝔸₀ = ∂P0/∂F` of the non-regularized model.
pub fn a0(p: &MaterialParams, f: &Tensor2) -> Tensor4 {
    let c = right_cauchy_green(f);
    let s2 = elastic_s2(p, &c);
    let h = elastic_s2_tangent(p, &c);
    Tensor4::from_fn(|i, j, k, l| {
        let mut v = if i == k { 2.0 * s2[(l, j)] } else { 0.0 };
        for a in 0..3 {
            let mut inner = 0.0;
            for n in 0..3 {
                inner += h.get(a, j, l, n) * f[(k, n)];
            }
            for m in 0..3 {
                inner += h.get(a, j, m, l) * f[(k, m)];
            }
            v += 2.0 * f[(i, a)] * inner;
        }
        v
    })
}

// ---------------------------------------------------------------------------
// volumetric part U(J) = ½ Kv (ln J)²
// ---------------------------------------------------------------------------

fn check_positive_j(j: f64) -> Result<(), MaterialError> {
    if j > 0.0 {
        Ok(())
    } else {
        Err(MaterialError::NonPositiveJacobian(j))
    }
}

/// Volumetric energy `U(J) = ½ Kv (ln J)²`.
pub fn u_vol(p: &MaterialParams, j: f64) -> Result<f64, MaterialError> {
    check_positive_j(j)?;
    let l = j.ln();
    Ok(0.5 * p.k_vol * l * l)
}

/// `U'(J) = Kv ln(J) / J`.
pub fn u_vol_d1(p: &MaterialParams, j: f64) -> Result<f64, MaterialError> {
    check_positive_j(j)?;
    Ok(p.k_vol * j.ln() / j)
}

/// `U''(J) = Kv (1 − ln J) / J²`.
pub fn u_vol_d2(p: &MaterialParams, j: f64) -> Result<f64, MaterialError> {
    check_positive_j(j)?;
    Ok(p.k_vol * (1.0 - j.ln()) / (j * j))
}

// ---------------------------------------------------------------------------
// regularized energy and its derivatives
// ---------------------------------------------------------------------------

/// Total energy density `Ŵ(F, χ, ∇χ)` of the mixed formulation.
pub fn energy_total(p: &MaterialParams, s: &PointState) -> Result<f64, MaterialError> {
    let j = s.f.det();
    check_positive_j(j)?;
    let pen = s.f.cofactor() - s.chi;
    Ok(w0(p, &s.f)
        + u_vol(p, j)?
        + 0.5 * p.h_chi * pen.ddot(&pen)
        + 0.5 * p.k_grad * s.grad_chi.tddot(&s.grad_chi))
}

/// Relative stress `S_m = ∂Ŵ/∂χ = Hχ (χ − Cof F)`.
pub fn relative_stress(p: &MaterialParams, f: &Tensor2, chi: &Tensor2) -> Tensor2 {
    (*chi - f.cofactor()) * p.h_chi
}

/// Higher-order stress `μ = ∂Ŵ/∂∇χ = K ∇χ`.
pub fn higher_order_stress(p: &MaterialParams, grad_chi: &Tensor3) -> Tensor3 {
    *grad_chi * p.k_grad
}

/// First Piola-Kirchhoff stress of the mixed formulation:
///
/// ```text
/// P = P0 + U'(J) Cof F − S_m × F
/// ```
pub fn first_pk_stress(
    p: &MaterialParams,
    f: &Tensor2,
    chi: &Tensor2,
) -> Result<Tensor2, MaterialError> {
    let j = f.det();
    check_positive_j(j)?;
    let cof = f.cofactor();
    let s_m = (*chi - cof) * p.h_chi;
    Ok(p0(p, f) + cof * u_vol_d1(p, j)? - tensor_cross(&s_m, f))
}

/// Stress of the displacement-only (local) model, `P0 + U'(J) Cof F`.
pub fn stress_local(p: &MaterialParams, f: &Tensor2) -> Result<Tensor2, MaterialError> {
    let j = f.det();
    check_positive_j(j)?;
    Ok(p0(p, f) + f.cofactor() * u_vol_d1(p, j)?)
}

/// Volumetric tangent `𝔸_V = U'' Cof F ⊗ Cof F + U' (F×)`.
fn volumetric_tangent(p: &MaterialParams, f: &Tensor2, j: f64) -> Result<Tensor4, MaterialError> {
    let cof = f.cofactor();
    Ok(Tensor4::dyad(&cof, &cof) * u_vol_d2(p, j)? + cross_fourth(f) * u_vol_d1(p, j)?)
}

/// Tangent of the displacement-only model, `𝔸₀ + 𝔸_V`.
pub fn tangent_local(p: &MaterialParams, f: &Tensor2) -> Result<Tensor4, MaterialError> {
    let j = f.det();
    check_positive_j(j)?;
    Ok(a0(p, f) + volumetric_tangent(p, f, j)?)
}

/// Second derivatives of `Ŵ` at a material point.
///
/// `d_chichi` splits into the mass part `Hχ` acting through the χ values and
/// the gradient part `K` acting through ∇χ; both are scalar multiples of the
/// identity on the respective packed spaces.
#[derive(Debug, Clone, Copy)]
pub struct TangentBlocks {
    /// `∂²Ŵ/∂F∂F`.
    pub d_uu: Tensor4,
    /// `∂²Ŵ/∂F∂χ = −Hχ (F×)`; major-symmetric, so it equals `∂S_m/∂F`.
    pub d_uchi: Tensor4,
    /// `∂²Ŵ/∂χ∂χ = Hχ 𝕀` (scalar on the 9-packed χ space).
    pub d_chichi_mass: f64,
    /// `∂²Ŵ/∂∇χ∂∇χ = K 𝓘` (scalar on the 27-packed ∇χ space).
    pub d_chichi_grad: f64,
}

/// Analytic tangent blocks of the mixed formulation.
///
/// The displacement block collects the elastic, volumetric and penalty
/// Hessians:
///
/// ```text
/// D_uu = 𝔸₀ + 𝔸_V + Hχ (F×)(F×) + ((Hχ (Cof F − χ))×)
/// ```
pub fn tangent_blocks(
    p: &MaterialParams,
    f: &Tensor2,
    chi: &Tensor2,
) -> Result<TangentBlocks, MaterialError> {
    let j = f.det();
    check_positive_j(j)?;
    let fx = cross_fourth(f);
    let pen_gap = (f.cofactor() - *chi) * p.h_chi;
    let d_uu = a0(p, f)
        + volumetric_tangent(p, f, j)?
        + fx.compose(&fx) * p.h_chi
        + cross_fourth(&pen_gap);
    Ok(TangentBlocks {
        d_uu,
        d_uchi: fx * (-p.h_chi),
        d_chichi_mass: p.h_chi,
        d_chichi_grad: p.k_grad,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fd;
    use crate::tensor::rotation;
    use approx::assert_relative_eq;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    /// Parameter sets of order one for derivative verification; the scale
    /// enters every term linearly, so this exercises the same code paths as
    /// production magnitudes without finite-difference cancellation noise.
    fn models() -> Vec<MaterialParams> {
        vec![
            MaterialParams::st_venant_kirchhoff(2.0, 1.5)
                .with_regularization(3.0, 0.7)
                .with_volumetric(1.2),
            MaterialParams::st_venant_kirchhoff_normalized()
                .with_regularization(5.0, 2.0)
                .with_volumetric(0.5),
            MaterialParams::double_well(2.5, 0.3)
                .with_regularization(4.0, 1.7)
                .with_volumetric(0.8),
        ]
    }

    pub(crate) fn random_admissible_state(rng: &mut impl Rng) -> PointState {
        loop {
            let mut f = Tensor2::identity();
            for i in 0..3 {
                for j in 0..3 {
                    f[(i, j)] += rng.random_range(-0.3..0.3);
                }
            }
            let det = f.det();
            if !(0.2..=3.0).contains(&det) {
                continue;
            }
            let mut chi = f.cofactor();
            for i in 0..3 {
                for j in 0..3 {
                    chi[(i, j)] += rng.random_range(-0.2..0.2);
                }
            }
            let mut grad_chi = Tensor3::zero();
            for i in 0..3 {
                for j in 0..3 {
                    for k in 0..3 {
                        grad_chi[(i, j, k)] = rng.random_range(-1.0..1.0);
                    }
                }
            }
            return PointState { f, chi, grad_chi };
        }
    }

    #[test]
    fn w0_fixtures_normalized() {
        let p = MaterialParams::st_venant_kirchhoff_normalized();
        assert_eq!(w0(&p, &Tensor2::identity()), 0.0);

        // biaxial compression diag(ε, ε, 1): W0 = 2 (ε² − 1)²
        let eps = 0.75f64;
        let f = Tensor2::diag(eps, eps, 1.0);
        let expect = 2.0 * (eps * eps - 1.0) * (eps * eps - 1.0);
        assert_relative_eq!(w0(&p, &f), expect, max_relative = 1e-14);
        assert_relative_eq!(w0(&p, &f), 0.3828125, max_relative = 1e-14);

        // laminate branch F±: W0 = 1 − 2 ε⁴
        let eps = 0.6f64;
        let delta = (1.0 - 2.0 * eps * eps).sqrt();
        let mut fp = Tensor2::diag(eps, eps, 1.0);
        fp[(0, 1)] = delta;
        let mut fm = fp;
        fm[(0, 1)] = -delta;
        let expect = 1.0 - 2.0 * eps.powi(4);
        assert_relative_eq!(w0(&p, &fp), expect, max_relative = 1e-14);
        assert_relative_eq!(w0(&p, &fm), expect, max_relative = 1e-14);
        assert_relative_eq!(w0(&p, &fp), 0.7408, max_relative = 1e-12);
    }

    #[test]
    fn double_well_vanishes_on_wells() {
        let p = MaterialParams::double_well(1e9, 0.05);
        let (f1, f2) = p.well_gradients();
        assert_eq!(w0(&p, &f1), 0.0);
        assert_eq!(w0(&p, &f2), 0.0);
        // rotated copies stay on the zero set (depends on C only)
        let r = rotation([0.2, 1.0, -0.7], 0.9);
        assert!(w0(&p, &(r * f1)).abs() <= 1e-12 * p.alpha);
        // stationary point: P0(F¹) = 0
        assert!(p0(&p, &f1).norm() <= 1e-12 * p.alpha);
    }

    #[test]
    fn p0_zero_at_identity_for_stvk() {
        // E = 0 at F = I for both St. Venant-Kirchhoff variants; the
        // double-well is not stress-free there (identity sits between wells)
        for p in models() {
            if p.model == Model::DoubleWell {
                assert!(p0(&p, &Tensor2::identity()).norm() > 0.0);
            } else {
                assert_eq!(p0(&p, &Tensor2::identity()).norm(), 0.0);
            }
        }
    }

    #[test]
    fn p0_matches_fd_of_w0() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for p in models() {
            for _ in 0..30 {
                let s = random_admissible_state(&mut rng);
                let analytic = p0(&p, &s.f);
                let numeric = fd::grad_scalar_t2(|f| w0(&p, f), &s.f, 1e-5);
                assert!(
                    (analytic - numeric).norm() <= 1e-6 * analytic.norm().max(1e-9 * p.alpha.max(1.0)),
                    "model {:?}", p.model
                );
            }
        }
    }

    #[test]
    fn u_vol_fixtures() {
        let p = MaterialParams::st_venant_kirchhoff(1.0, 1.0).with_volumetric(4.0);
        assert_eq!(u_vol(&p, 1.0).unwrap(), 0.0);
        assert_eq!(u_vol_d1(&p, 1.0).unwrap(), 0.0);
        assert_eq!(u_vol_d2(&p, 1.0).unwrap(), p.k_vol);
        assert_relative_eq!(
            u_vol(&p, std::f64::consts::E).unwrap(),
            0.5 * p.k_vol,
            max_relative = 1e-14
        );
        assert_eq!(
            u_vol(&p, 0.0),
            Err(MaterialError::NonPositiveJacobian(0.0))
        );
        assert!(u_vol(&p, -1.0).is_err());
        // blows up towards zero volume
        assert!(u_vol(&p, 1e-200).unwrap() > 1e5);
    }

    #[test]
    fn volumetric_stress_forms_agree() {
        // U'(J) J F^{-T} = U'(J) Cof F / ... both routes to the volumetric stress
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let p = MaterialParams::st_venant_kirchhoff(1.0, 1.0).with_volumetric(2.5);
        for _ in 0..20 {
            let s = random_admissible_state(&mut rng);
            let j = s.f.det();
            let d1 = u_vol_d1(&p, j).unwrap();
            let via_cof = s.f.cofactor() * d1;
            let via_inv = s.f.inverse().unwrap().transpose() * (d1 * j);
            assert!((via_cof - via_inv).norm() <= 1e-12 * via_cof.norm().max(1e-12));
        }
    }

    #[test]
    fn energy_total_terms_and_guards() {
        let p = MaterialParams::st_venant_kirchhoff_normalized().with_regularization(7.0, 3.0);
        let id = PointState {
            f: Tensor2::identity(),
            chi: Tensor2::identity(),
            grad_chi: Tensor3::zero(),
        };
        assert_eq!(energy_total(&p, &id).unwrap(), 0.0);

        // only the penalty active
        let mut delta = Tensor2::zero();
        delta[(0, 1)] = 0.3;
        delta[(2, 2)] = -0.1;
        let st = PointState {
            chi: Tensor2::identity() + delta,
            ..id
        };
        assert_relative_eq!(
            energy_total(&p, &st).unwrap(),
            0.5 * p.h_chi * delta.ddot(&delta),
            max_relative = 1e-14
        );

        // inverted state is rejected
        let bad = PointState {
            f: Tensor2::diag(-1.0, 1.0, 1.0),
            ..id
        };
        assert!(matches!(
            energy_total(&p, &bad),
            Err(MaterialError::NonPositiveJacobian(_))
        ));
    }

    #[test]
    fn energy_total_matches_term_by_term_sum() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for p in models() {
            for _ in 0..20 {
                let s = random_admissible_state(&mut rng);
                let gap = s.f.cofactor() - s.chi;
                let by_terms = w0(&p, &s.f)
                    + u_vol(&p, s.f.det()).unwrap()
                    + 0.5 * p.h_chi * gap.ddot(&gap)
                    + 0.5 * p.k_grad * s.grad_chi.tddot(&s.grad_chi);
                let total = energy_total(&p, &s).unwrap();
                assert!((total - by_terms).abs() <= 1e-14 * by_terms.abs().max(1.0));
            }
        }
    }

    #[test]
    fn penalty_consistency() {
        // χ = Cof F and ∇χ = 0 reduce Ŵ to W0 + U exactly
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        for p in models() {
            let s0 = random_admissible_state(&mut rng);
            let s = PointState {
                chi: s0.f.cofactor(),
                grad_chi: Tensor3::zero(),
                ..s0
            };
            let expect = w0(&p, &s.f) + u_vol(&p, s.f.det()).unwrap();
            assert_eq!(energy_total(&p, &s).unwrap(), expect);
            assert_eq!(relative_stress(&p, &s.f, &s.chi).norm(), 0.0);
        }
    }

    #[test]
    fn relative_stress_fixtures() {
        let p = MaterialParams::st_venant_kirchhoff_normalized().with_regularization(4.0, 1.0);
        let f = Tensor2::identity();
        assert_eq!(
            relative_stress(&p, &f, &Tensor2::zero()),
            Tensor2::identity() * -4.0
        );
    }

    #[test]
    fn stresses_match_fd_of_energy_total() {
        let mut rng = ChaCha8Rng::seed_from_u64(15);
        for p in models() {
            for _ in 0..20 {
                let s = random_admissible_state(&mut rng);

                let sm = relative_stress(&p, &s.f, &s.chi);
                let sm_fd = fd::grad_scalar_t2(
                    |chi| energy_total(&p, &PointState { chi: *chi, ..s }).unwrap(),
                    &s.chi,
                    1e-5,
                );
                assert!((sm - sm_fd).norm() <= 1e-6 * sm.norm().max(1e-9 * p.h_chi.max(1.0)));

                let mu = higher_order_stress(&p, &s.grad_chi);
                let mu_fd = fd::grad_scalar_t3(
                    |g| energy_total(&p, &PointState { grad_chi: *g, ..s }).unwrap(),
                    &s.grad_chi,
                    1e-5,
                );
                assert!((mu - mu_fd).norm() <= 1e-6 * mu.norm().max(1e-12));

                let pk = first_pk_stress(&p, &s.f, &s.chi).unwrap();
                let pk_fd = fd::grad_scalar_t2(
                    |f| energy_total(&p, &PointState { f: *f, ..s }).unwrap(),
                    &s.f,
                    1e-5,
                );
                assert!(
                    (pk - pk_fd).norm() <= 1e-6 * pk.norm().max(1e-9 * p.alpha.max(1.0)),
                    "model {:?}", p.model
                );
            }
        }
    }

    #[test]
    fn higher_order_stress_is_linear() {
        let p = MaterialParams::double_well(1e9, 0.05).with_regularization(1e5, 10.0);
        assert_eq!(higher_order_stress(&p, &Tensor3::zero()).norm(), 0.0);
        let mut g = Tensor3::zero();
        g[(1, 2, 0)] = 1.0;
        assert_eq!(higher_order_stress(&p, &g)[(1, 2, 0)], 10.0);
    }

    #[test]
    fn first_pk_stress_fixtures() {
        let p = MaterialParams::st_venant_kirchhoff(2.0, 1.0).with_regularization(3.0, 1.0);
        let pk = first_pk_stress(&p, &Tensor2::identity(), &Tensor2::identity()).unwrap();
        assert!(pk.norm() <= 1e-15);

        // χ = Cof F kills the penalty term
        let mut rng = ChaCha8Rng::seed_from_u64(16);
        let s = random_admissible_state(&mut rng);
        let chi = s.f.cofactor();
        let pk = first_pk_stress(&p, &s.f, &chi).unwrap();
        let expect = stress_local(&p, &s.f).unwrap();
        assert!((pk - expect).norm() <= 1e-13 * expect.norm().max(1.0));
    }

    #[test]
    fn tangent_duchi_at_identity() {
        let p = MaterialParams::st_venant_kirchhoff_normalized().with_regularization(6.0, 1.0);
        let t = tangent_blocks(&p, &Tensor2::identity(), &Tensor2::identity()).unwrap();
        let expect = cross_fourth(&Tensor2::identity()) * -p.h_chi;
        assert!((t.d_uchi - expect).norm() <= 1e-14 * expect.norm());
        assert_eq!(t.d_chichi_mass, 6.0);
        assert_eq!(t.d_chichi_grad, 1.0);
    }

    #[test]
    fn tangent_blocks_match_fd_of_stresses() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for p in models() {
            for _ in 0..20 {
                let s = random_admissible_state(&mut rng);
                let t = tangent_blocks(&p, &s.f, &s.chi).unwrap();

                let duu_fd = fd::jac_t2_t2(
                    |f| first_pk_stress(&p, f, &s.chi).unwrap(),
                    &s.f,
                    1e-5,
                );
                assert!(
                    (t.d_uu - duu_fd).norm() <= 1e-5 * t.d_uu.norm(),
                    "D_uu mismatch for {:?}", p.model
                );

                // ∂P/∂χ
                let duchi_fd = fd::jac_t2_t2(
                    |chi| first_pk_stress(&p, &s.f, chi).unwrap(),
                    &s.chi,
                    1e-5,
                );
                assert!((t.d_uchi - duchi_fd).norm() <= 1e-6 * t.d_uchi.norm().max(1e-12));

                // ∂S_m/∂F is the transpose block; (F×) is major symmetric
                let smf_fd = fd::jac_t2_t2(
                    |f| relative_stress(&p, f, &s.chi),
                    &s.f,
                    1e-5,
                );
                assert!(
                    (t.d_uchi.major_transpose() - smf_fd).norm()
                        <= 1e-6 * t.d_uchi.norm().max(1e-12)
                );

                // ∂S_m/∂χ = Hχ 𝕀
                let smchi_fd = fd::jac_t2_t2(
                    |chi| relative_stress(&p, &s.f, chi),
                    &s.chi,
                    1e-5,
                );
                let expect = Tensor4::identity() * t.d_chichi_mass;
                assert!((expect - smchi_fd).norm() <= 1e-6 * t.d_chichi_mass.max(1e-12));
            }
        }
    }

    #[test]
    fn d_uu_major_symmetry() {
        let mut rng = ChaCha8Rng::seed_from_u64(18);
        for p in models() {
            for _ in 0..10 {
                let s = random_admissible_state(&mut rng);
                let t = tangent_blocks(&p, &s.f, &s.chi).unwrap();
                assert!(t.d_uu.major_asymmetry() <= 1e-12);
                assert!(t.d_uchi.major_asymmetry() <= 1e-13);
            }
        }
    }

    #[test]
    fn frame_indifference_of_w0() {
        let mut rng = ChaCha8Rng::seed_from_u64(19);
        for p in models() {
            for _ in 0..20 {
                let s = random_admissible_state(&mut rng);
                let r = rotation(
                    [
                        rng.random_range(-1.0..1.0),
                        rng.random_range(-1.0..1.0),
                        rng.random_range(0.1..1.0),
                    ],
                    rng.random_range(-3.0..3.0),
                );
                let a = w0(&p, &s.f);
                let b = w0(&p, &(r * s.f));
                assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
            }
        }
    }

    #[test]
    fn params_validation() {
        let p = MaterialParams::double_well(0.0, 0.05).with_regularization(1.0, 1.0);
        assert!(p.validate(true).is_err());
        let p = MaterialParams::double_well(1e9, 0.05).with_regularization(0.0, 1.0);
        assert!(p.validate(true).is_err());
        assert!(p.validate(false).is_ok());
        let p = MaterialParams::double_well(1e9, 0.05).with_regularization(1e5, 10.0);
        assert!(p.validate(true).is_ok());
        assert_relative_eq!(p.internal_length(), 0.01, max_relative = 1e-14);
    }
}

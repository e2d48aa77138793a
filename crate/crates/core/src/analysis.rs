//! Analytical diagnostics and post-processing: rank-one convexity probe,
//! laminate energy formulas, equivalent-strain field and band statistics.

use thiserror::Error;

use crate::assembly::Discretization;
use crate::material::{MaterialParams, Model};
use crate::tensor::Tensor2;

#[derive(Debug, Error, PartialEq)]
pub enum AnalysisError {
    /// The explicit laminate pair is real only for `ε ≤ √2/2`.
    #[error("laminate construction undefined for eps = {0} (needs 0 < eps ≤ √2/2)")]
    LaminateUndefined(f64),
    #[error("runs are not comparable: {0}")]
    IncomparableRuns(String),
}

/// Outcome of the rank-one convexity probe.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbeResult {
    /// Directional convexity value; equals `h''(0)/4` for
    /// `h(t) = W0(F + t a⊗b)` of the normalized model.
    pub h_second_derivative: f64,
    /// True iff the value is negative, i.e. rank-one convexity fails along
    /// `a ⊗ b`.
    pub violating: bool,
}

/// Rank-one convexity probe of the normalized St. Venant-Kirchhoff energy
/// along the rank-one direction `a ⊗ b`:
///
/// ```text
/// |a|² C : b⊗b + |Fᵀa|² |b|² + (Fᵀa·b)² − |a|² |b|²
/// ```
///
/// Negative values certify failure of rank-one convexity at `F`. The scalar
/// is a quarter of the second directional derivative `h''(0)`.
pub fn rank_one_probe_stvk(f: &Tensor2, a: [f64; 3], b: [f64; 3]) -> ProbeResult {
    let c = f.transpose() * *f;
    let norm2 = |v: [f64; 3]| v[0] * v[0] + v[1] * v[1] + v[2] * v[2];
    let fta = f.tr_mul_vec(a);
    let c_bb = c.ddot(&Tensor2::outer(b, b));
    let fta_dot_b = fta[0] * b[0] + fta[1] * b[1] + fta[2] * b[2];
    let value = norm2(a) * c_bb + norm2(fta) * norm2(b) + fta_dot_b * fta_dot_b
        - norm2(a) * norm2(b);
    ProbeResult {
        h_second_derivative: value,
        violating: value < 0.0,
    }
}

/// Energies of the biaxial compression construction at `diag(ε, ε, 1)` for
/// the normalized model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LaminateGap {
    /// Energy of the homogeneous state, `2 − 4ε² + 2ε⁴`.
    pub w_hom: f64,
    /// Energy of the two-gradient laminate, `1 − 2ε⁴`.
    pub w_lam: f64,
    /// `w_hom − w_lam = (2ε² − 1)²`.
    pub gap: f64,
}

/// Laminate energy gap of the normalized St. Venant-Kirchhoff model under
/// biaxial compression `diag(ε, ε, 1)`; defined for `0 < ε ≤ √2/2` where the
/// laminate gradients
///
/// ```text
/// F± = [[ε, ±sqrt(1 − 2ε²), 0], [0, ε, 0], [0, 0, 1]]
/// ```
///
/// are real.
pub fn stvk_laminate_gap(eps: f64) -> Result<LaminateGap, AnalysisError> {
    // roundoff slack keeps the boundary point ε = √2/2 inside the domain
    let disc = 1.0 - 2.0 * eps * eps;
    if !(eps > 0.0) || disc < -1e-12 {
        return Err(AnalysisError::LaminateUndefined(eps));
    }
    let e2 = eps * eps;
    let e4 = e2 * e2;
    let w_hom = 2.0 - 4.0 * e2 + 2.0 * e4;
    let w_lam = 1.0 - 2.0 * e4;
    Ok(LaminateGap {
        w_hom,
        w_lam,
        gap: w_hom - w_lam,
    })
}

/// The laminate pair `F±` of [`stvk_laminate_gap`].
pub fn stvk_laminate_pair(eps: f64) -> Result<(Tensor2, Tensor2), AnalysisError> {
    let disc = 1.0 - 2.0 * eps * eps;
    if !(eps > 0.0) || disc < -1e-12 {
        return Err(AnalysisError::LaminateUndefined(eps));
    }
    let delta = disc.max(0.0).sqrt();
    let mut fp = Tensor2::diag(eps, eps, 1.0);
    fp[(0, 1)] = delta;
    let mut fm = fp;
    fm[(0, 1)] = -delta;
    Ok((fp, fm))
}

/// Equivalent strain locating `C = FᵀF` between the two wells:
///
/// ```text
/// C_eq = ‖C − C̃¹‖² / (‖C − C̃¹‖² + ‖C − C̃²‖²)
/// ```
///
/// 0 at the first well, 1 at the second, ½ at symmetric states. The
/// degenerate denominator cannot occur for `ε > 0` but is guarded anyway.
pub fn c_eq(params: &MaterialParams, f: &Tensor2) -> f64 {
    let c = f.transpose() * *f;
    let (c1, c2) = params.wells();
    let d1 = (c - c1).ddot(&(c - c1));
    let d2 = (c - c2).ddot(&(c - c2));
    if d1 + d2 == 0.0 {
        return 0.5;
    }
    d1 / (d1 + d2)
}

/// Per-quadrature-point `C_eq` over the whole mesh (one inner vector per
/// element, 27-point rule order).
pub fn c_eq_field(disc: &Discretization, d: &[f64]) -> Vec<Vec<f64>> {
    let rule = crate::element::gauss_rule(3).expect("order 3 supported");
    (0..disc.mesh.n_elements())
        .map(|e| {
            rule.points
                .iter()
                .map(|&(xi, _)| c_eq(&disc.params, &disc.deformation_gradient(e, d, xi)))
                .collect()
        })
        .collect()
}

/// Scalar samples along a probe line, ordered by position.
#[derive(Debug, Clone, Default)]
pub struct ProbeSamples {
    pub positions: Vec<f64>,
    pub values: Vec<f64>,
}

/// Samples a per-element field at the centroids of the element row closest
/// to the midline of the block, running along `axis`.
pub fn centroid_row_probe(disc: &Discretization, cell_values: &[f64], axis: usize) -> ProbeSamples {
    let mesh = &disc.mesh;
    let mut mid = [0.0; 3];
    for i in 0..3 {
        mid[i] = 0.5 * mesh.extent[i];
    }
    // pick the row whose off-axis centroid distance to the midline is minimal
    let mut best: Option<(f64, [i64; 3])> = None;
    let key = |c: [f64; 3]| {
        let mut k = [0i64; 3];
        for i in 0..3 {
            k[i] = (c[i] * 1e9).round() as i64;
        }
        k
    };
    for e in 0..mesh.n_elements() {
        let c = mesh.element_centroid(e);
        let mut dist = 0.0;
        for i in 0..3 {
            if i != axis {
                dist += (c[i] - mid[i]) * (c[i] - mid[i]);
            }
        }
        let mut k = key(c);
        k[axis] = 0;
        match &best {
            Some((d, _)) if *d <= dist => {}
            _ => best = Some((dist, k)),
        }
    }
    let Some((_, row_key)) = best else {
        return ProbeSamples::default();
    };
    let mut samples: Vec<(f64, f64)> = (0..mesh.n_elements())
        .filter_map(|e| {
            let c = mesh.element_centroid(e);
            let mut k = key(c);
            k[axis] = 0;
            (k == row_key).then_some((c[axis], cell_values[e]))
        })
        .collect();
    samples.sort_by(|a, b| a.0.total_cmp(&b.0));
    ProbeSamples {
        positions: samples.iter().map(|s| s.0).collect(),
        values: samples.iter().map(|s| s.1).collect(),
    }
}

/// Band statistics of a sampled field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LaminateStats {
    /// Completed up-down excursion pairs through the threshold.
    pub band_count: usize,
    /// Crossing span divided by the band count (one laminate period).
    pub mean_band_width: f64,
}

/// Counts threshold crossings of the sampled field with a hysteresis band
/// `±noise_band` around the threshold, so a field sitting at the threshold
/// up to noise yields zero bands. A band is one completed pair of crossings.
pub fn laminate_stats(samples: &ProbeSamples, threshold: f64, noise_band: f64) -> LaminateStats {
    let mut crossings: Vec<f64> = Vec::new();
    let mut side: Option<bool> = None; // true = above
    let mut last_pos = 0.0;
    for (&x, &v) in samples.positions.iter().zip(&samples.values) {
        let above = v > threshold + noise_band;
        let below = v < threshold - noise_band;
        if !(above || below) {
            continue;
        }
        let now = above;
        if let Some(prev) = side {
            if prev != now {
                crossings.push(0.5 * (last_pos + x));
            }
        }
        side = Some(now);
        last_pos = x;
    }
    let band_count = crossings.len() / 2;
    let mean_band_width = if band_count > 0 {
        (crossings[crossings.len() - 1] - crossings[0]).abs() / band_count as f64
    } else {
        0.0
    };
    LaminateStats {
        band_count,
        mean_band_width,
    }
}

/// Snapshot of one run used by [`energy_compare`].
#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    /// Block extent and division of the mesh.
    pub mesh_signature: ([f64; 3], [usize; 3]),
    pub model: Model,
    pub total_energy: f64,
}

impl RunSummary {
    pub fn new(disc: &Discretization, total_energy: f64) -> Self {
        Self {
            mesh_signature: (disc.mesh.extent, disc.mesh.divisions),
            model: disc.params.model,
            total_energy,
        }
    }
}

/// Signed total-energy difference `a − b` of two runs on the same
/// discretization.
pub fn energy_compare(a: &RunSummary, b: &RunSummary) -> Result<f64, AnalysisError> {
    if a.mesh_signature != b.mesh_signature {
        return Err(AnalysisError::IncomparableRuns(format!(
            "mesh {:?} vs {:?}",
            a.mesh_signature, b.mesh_signature
        )));
    }
    if a.model != b.model {
        return Err(AnalysisError::IncomparableRuns(format!(
            "model {:?} vs {:?}",
            a.model, b.model
        )));
    }
    Ok(a.total_energy - b.total_energy)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fd;
    use crate::material::w0;
    use crate::tensor::rotation;
    use approx::assert_relative_eq;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn probe_fixtures() {
        let a = [1.0, 0.0, 0.0];
        let b = [0.0, 1.0, 0.0];
        // diag(ε, ε, 1): value 2ε² − 1
        for eps in [0.5f64, 0.6, 0.75] {
            let f = Tensor2::diag(eps, eps, 1.0);
            let r = rank_one_probe_stvk(&f, a, b);
            assert_relative_eq!(
                r.h_second_derivative,
                2.0 * eps * eps - 1.0,
                max_relative = 1e-14
            );
            assert_eq!(r.violating, eps < (0.5f64).sqrt());
        }
        let r = rank_one_probe_stvk(&Tensor2::diag(0.6, 0.6, 1.0), a, b);
        assert_relative_eq!(r.h_second_derivative, -0.28, max_relative = 1e-13);
        assert!(r.violating);

        // identity belongs to the same diag(ε,ε,1) family at ε = 1: value
        // 2ε² − 1 = 1, not violating
        let r = rank_one_probe_stvk(&Tensor2::identity(), a, b);
        assert_eq!(r.h_second_derivative, 1.0);
        assert!(!r.violating);
    }

    #[test]
    fn probe_matches_fd_second_derivative() {
        // the probe value is h''(0)/4 along a⊗b of the normalized model
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        let p = MaterialParams::st_venant_kirchhoff_normalized();
        for _ in 0..30 {
            let mut f = Tensor2::identity();
            for i in 0..3 {
                for j in 0..3 {
                    f[(i, j)] += rng.random_range(-0.4..0.4);
                }
            }
            let a = [
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
            ];
            let b = [
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
            ];
            let probe = rank_one_probe_stvk(&f, a, b);
            let h2 = fd::second_derivative_at_zero(
                |t| w0(&p, &(f + Tensor2::outer(a, b) * t)),
                1e-4,
            );
            let expect = h2 / 4.0;
            assert!(
                (probe.h_second_derivative - expect).abs() <= 1e-5 * expect.abs().max(1.0),
                "probe {} vs fd {}",
                probe.h_second_derivative,
                expect
            );
        }
    }

    #[test]
    fn gap_fixtures() {
        let g = stvk_laminate_gap(0.6).unwrap();
        assert_relative_eq!(g.w_hom, 0.8192, max_relative = 1e-14);
        assert_relative_eq!(g.w_lam, 0.7408, max_relative = 1e-14);
        assert_relative_eq!(g.gap, 0.0784, max_relative = 1e-12);

        let half_sqrt2 = (0.5f64).sqrt();
        let g = stvk_laminate_gap(half_sqrt2).unwrap();
        assert!(g.gap.abs() <= 1e-14);

        assert_eq!(
            stvk_laminate_gap(0.75),
            Err(AnalysisError::LaminateUndefined(0.75))
        );
        assert!(stvk_laminate_gap(0.0).is_err());
    }

    #[test]
    fn gap_polynomials_consistent() {
        // gap = (2ε²−1)² and equals w_hom − w_lam, and the laminate branch
        // energy matches the material evaluation at F±
        let p = MaterialParams::st_venant_kirchhoff_normalized();
        for k in 1..=100 {
            let eps = (0.5f64).sqrt() * k as f64 / 100.0;
            let g = stvk_laminate_gap(eps).unwrap();
            let direct = (2.0 * eps * eps - 1.0) * (2.0 * eps * eps - 1.0);
            assert!((g.gap - direct).abs() <= 1e-14);
            assert!((g.gap - (g.w_hom - g.w_lam)).abs() <= 1e-14);

            let (fp, fm) = stvk_laminate_pair(eps).unwrap();
            assert!((w0(&p, &fp) - g.w_lam).abs() <= 1e-14);
            assert!((w0(&p, &fm) - g.w_lam).abs() <= 1e-14);
            assert!((w0(&p, &Tensor2::diag(eps, eps, 1.0)) - g.w_hom).abs() <= 1e-14);
        }
    }

    #[test]
    fn c_eq_fixtures() {
        let p = MaterialParams::double_well(1e9, 0.05);
        let (f1, f2) = p.well_gradients();
        assert_eq!(c_eq(&p, &f1), 0.0);
        assert_eq!(c_eq(&p, &f2), 1.0);
        assert_eq!(c_eq(&p, &Tensor2::identity()), 0.5);
    }

    #[test]
    fn c_eq_rotation_invariant() {
        let p = MaterialParams::double_well(1e9, 0.05);
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for _ in 0..20 {
            let mut f = Tensor2::identity();
            for i in 0..3 {
                for j in 0..3 {
                    f[(i, j)] += rng.random_range(-0.2..0.2);
                }
            }
            let r = rotation([1.0, 0.3, -0.5], rng.random_range(-3.0..3.0));
            let a = c_eq(&p, &f);
            let b = c_eq(&p, &(r * f));
            assert!((a - b).abs() <= 1e-12);
        }
    }

    fn samples_from(values: &[f64]) -> ProbeSamples {
        ProbeSamples {
            positions: (0..values.len()).map(|i| i as f64).collect(),
            values: values.to_vec(),
        }
    }

    #[test]
    fn stats_constant_field() {
        let s = samples_from(&[0.5; 40]);
        assert_eq!(laminate_stats(&s, 0.5, 1e-6).band_count, 0);
        let s = samples_from(&[2.0; 40]);
        assert_eq!(laminate_stats(&s, 0.5, 1e-6).band_count, 0);
    }

    #[test]
    fn stats_square_wave() {
        // six full periods: 12 crossings, 6 bands
        let mut v = vec![0.0];
        for _ in 0..6 {
            v.extend_from_slice(&[1.0, 1.0, 0.0, 0.0]);
        }
        let s = samples_from(&v);
        let stats = laminate_stats(&s, 0.5, 1e-3);
        assert_eq!(stats.band_count, 6);
        // bands fill the line: count × width covers the crossing span
        assert_relative_eq!(
            stats.band_count as f64 * stats.mean_band_width,
            22.0,
            max_relative = 1e-12
        );
    }

    #[test]
    fn stats_negation_invariant_at_symmetric_threshold() {
        let mut rng = ChaCha8Rng::seed_from_u64(43);
        let v: Vec<f64> = (0..60).map(|_| rng.random_range(-1.0..1.0)).collect();
        let neg: Vec<f64> = v.iter().map(|x| -x).collect();
        let a = laminate_stats(&samples_from(&v), 0.0, 0.05);
        let b = laminate_stats(&samples_from(&neg), 0.0, 0.05);
        assert_eq!(a.band_count, b.band_count);
        assert_eq!(a, laminate_stats(&samples_from(&v), 0.0, 0.05));
    }

    #[test]
    fn stats_noise_band_suppresses_jitter() {
        // field hovering at the threshold within noise: no bands
        let mut rng = ChaCha8Rng::seed_from_u64(44);
        let v: Vec<f64> = (0..100).map(|_| 0.5 + rng.random_range(-1e-9..1e-9)).collect();
        let s = laminate_stats(&samples_from(&v), 0.5, 1e-6);
        assert_eq!(s.band_count, 0);
    }

    #[test]
    fn energy_compare_contract() {
        let sig = ([1.0, 1.0, 1.0], [2, 2, 2]);
        let a = RunSummary {
            mesh_signature: sig,
            model: Model::DoubleWell,
            total_energy: 3.0,
        };
        let b = RunSummary {
            total_energy: 5.0,
            ..a.clone()
        };
        assert_eq!(energy_compare(&a, &a).unwrap(), 0.0);
        assert_eq!(energy_compare(&a, &b).unwrap(), -2.0);
        let c = RunSummary {
            mesh_signature: ([1.0, 1.0, 1.0], [4, 4, 4]),
            ..a.clone()
        };
        assert!(matches!(
            energy_compare(&a, &c),
            Err(AnalysisError::IncomparableRuns(_))
        ));
    }
}

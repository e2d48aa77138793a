//! Incremental-loading Newton driver with step control.
//!
//! Each load step prescribes Dirichlet data, then iterates full Newton steps
//! on the coupled residual until the displacement and micromorphic residual
//! norms drop below their tolerances. The two fields carry different
//! physical units, so convergence is checked per field against reference
//! norms taken from the first iterate of the step.
//!
//! Step control: a trial update that inverts an element (`det F ≤ 0`, energy
//! `+∞`) or raises the energy beyond a small slack is halved, up to
//! `step_halving_max` times. If the halvings run out on a finite-energy
//! trial the step is accepted anyway — near saddle points Newton may need
//! non-descending steps, and the residual criterion remains the judge of
//! convergence. An inverted state after all halvings aborts the step.
//!
//! The homogeneous state is an equilibrium for every experiment here, so a
//! seeded random perturbation of the free displacement DOFs breaks the
//! symmetry at the first load step. Identical seeds give bitwise-identical
//! runs.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::assembly::{
    AssemblyError, DirichletBc, DirichletSet, Discretization, ExternalLoad, Reduction,
};
use crate::linsolve::{DirectSolver, LinSolveError};
use crate::mesh::{Face, Mesh};

#[derive(Debug, Error)]
pub enum SolveError {
    #[error("no convergence in load step {step} after {iterations} iterations (residual {residual:.3e})")]
    NoConvergence {
        step: usize,
        iterations: usize,
        residual: f64,
    },
    #[error("load step {step}: state inversion persists after {halvings} step halvings")]
    PersistentInversion { step: usize, halvings: u32 },
    #[error("load step {step}: {source}")]
    Linear {
        step: usize,
        #[source]
        source: LinSolveError,
    },
    #[error(transparent)]
    Assembly(#[from] AssemblyError),
}

/// Newton driver configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    /// Relative residual tolerance against the first iterate of each step.
    pub newton_tol: f64,
    /// Absolute residual fallback.
    pub newton_abs_tol: f64,
    /// Maximum Newton iterations per load step.
    pub max_iters: usize,
    /// Amplitude of the symmetry-breaking perturbation (length units).
    pub perturbation_amplitude: f64,
    /// Maximum number of step halvings per Newton update.
    pub step_halving_max: u32,
    /// Seed of the perturbation generator.
    pub seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            newton_tol: 1e-10,
            newton_abs_tol: 1e-9,
            max_iters: 60,
            perturbation_amplitude: 0.0,
            step_halving_max: 8,
            seed: 0,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.newton_tol > 0.0 && self.newton_abs_tol > 0.0) {
            return Err("newton tolerances must be positive".to_string());
        }
        if self.max_iters == 0 {
            return Err("max_iters must be at least 1".to_string());
        }
        if self.perturbation_amplitude < 0.0 {
            return Err("perturbation amplitude must be non-negative".to_string());
        }
        Ok(())
    }
}

/// Kind of Dirichlet experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BcKind {
    /// Affine data `y = F(t) x` with `F(t) = diag(1 − t c, 1 − t c, 1)` on
    /// the whole boundary, ramped over the load steps.
    BiaxialAffine,
    /// Clamped `ymin`/`ymax` faces, everything else free.
    FixedTopBottom,
    /// Clamped lateral boundary (`xmin`, `xmax`, `ymin`, `ymax`); the two
    /// large `z` faces stay traction-free.
    FixedAll,
}

/// Boundary conditions of one load step (absolute prescribed values).
pub type LoadStep = DirichletSet;

/// Sequence of Dirichlet data, one entry per load step.
#[derive(Debug, Clone)]
pub struct LoadProgram {
    pub steps: Vec<LoadStep>,
}

/// Builds the load program for an experiment kind.
///
/// `total` is the compression fraction reached at the last step for the
/// biaxial ramp (`ε = 1 − total`); relaxation programs ignore it and apply
/// identical clamps at every step.
pub fn load_program(
    mesh: &Mesh,
    kind: BcKind,
    total: f64,
    steps: usize,
) -> Result<LoadProgram, AssemblyError> {
    let steps = steps.max(1);
    let mut program = Vec::with_capacity(steps);
    match kind {
        BcKind::BiaxialAffine => {
            let nodes: Vec<usize> = (0..mesh.n_nodes())
                .filter(|&n| mesh.node_on_boundary(n))
                .collect();
            for s in 1..=steps {
                let c = total * s as f64 / steps as f64;
                let mut bcs = Vec::with_capacity(3 * nodes.len());
                for &n in &nodes {
                    let x = mesh.nodes[n];
                    bcs.push(DirichletBc { dof: 3 * n, value: -c * x[0] });
                    bcs.push(DirichletBc { dof: 3 * n + 1, value: -c * x[1] });
                    bcs.push(DirichletBc { dof: 3 * n + 2, value: 0.0 });
                }
                program.push(DirichletSet::new(bcs)?);
            }
        }
        BcKind::FixedTopBottom | BcKind::FixedAll => {
            let faces: &[Face] = match kind {
                BcKind::FixedTopBottom => &[Face::Ymin, Face::Ymax],
                _ => &[Face::Xmin, Face::Xmax, Face::Ymin, Face::Ymax],
            };
            let mut bcs = Vec::new();
            for &n in (0..mesh.n_nodes())
                .filter(|&n| faces.iter().any(|&f| mesh.node_on_face(n, f)))
                .collect::<Vec<_>>()
                .iter()
            {
                for c in 0..3 {
                    bcs.push(DirichletBc { dof: 3 * n + c, value: 0.0 });
                }
            }
            let step = DirichletSet::new(bcs)?;
            program = vec![step; steps];
        }
    }
    Ok(LoadProgram { steps: program })
}

/// Applies the seeded uniform perturbation to the free displacement DOFs.
///
/// Constrained DOFs and the micromorphic field are untouched; each free
/// component moves by at most `amplitude`.
pub fn perturb_initial(
    fields: &mut [f64],
    n_u_dofs: usize,
    constrained: &DirichletSet,
    amplitude: f64,
    seed: u64,
) {
    if amplitude == 0.0 {
        return;
    }
    let mut fixed = vec![false; fields.len()];
    for dof in constrained.dofs() {
        fixed[dof] = true;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for (dof, value) in fields.iter_mut().enumerate().take(n_u_dofs) {
        // draw for every dof to keep the stream independent of the bc set
        let delta = rng.random_range(-amplitude..=amplitude);
        if !fixed[dof] {
            *value += delta;
        }
    }
}

/// One Newton iterate of the history.
#[derive(Debug, Clone, Copy)]
pub struct IterRecord {
    pub residual_u: f64,
    pub residual_chi: f64,
    /// Combined scaled norm used by the convergence test.
    pub residual: f64,
    pub energy: f64,
    pub halvings: u32,
}

/// History of one load step.
#[derive(Debug, Clone)]
pub struct StepRecord {
    pub step: usize,
    pub iterations: Vec<IterRecord>,
    pub converged: bool,
    /// Total potential energy at the accepted end state of the step.
    pub energy: f64,
}

/// Full solve history plus the final fields.
#[derive(Debug, Clone)]
pub struct SolveReport {
    pub steps: Vec<StepRecord>,
    pub fields: Vec<f64>,
}

impl SolveReport {
    pub fn all_converged(&self) -> bool {
        self.steps.iter().all(|s| s.converged)
    }

    pub fn final_energy(&self) -> f64 {
        self.steps.last().map(|s| s.energy).unwrap_or(0.0)
    }

    pub fn total_iterations(&self) -> usize {
        self.steps.iter().map(|s| s.iterations.len()).sum()
    }
}

struct FieldNorms {
    u: f64,
    chi: f64,
}

fn residual_norms(residual: &[f64], reduction: &Reduction, n_u_dofs: usize) -> FieldNorms {
    let mut u = 0.0;
    let mut chi = 0.0;
    for &dof in &reduction.free_dofs {
        let v = residual[dof] * residual[dof];
        if dof < n_u_dofs {
            u += v;
        } else {
            chi += v;
        }
    }
    FieldNorms {
        u: u.sqrt(),
        chi: chi.sqrt(),
    }
}

/// Runs the incremental Newton solve.
pub fn solve(
    disc: &Discretization,
    program: &LoadProgram,
    load: &ExternalLoad,
    config: &SolverConfig,
) -> Result<SolveReport, SolveError> {
    let f_ext = disc.external_force_vector(load);
    let mut d = disc.initial_fields();
    let mut solver = DirectSolver::new();
    let mut steps = Vec::with_capacity(program.steps.len());

    for (step_idx, bcs) in program.steps.iter().enumerate() {
        bcs.apply_values(&mut d);
        if step_idx == 0 {
            perturb_initial(
                &mut d,
                disc.dofmap.n_u_dofs,
                bcs,
                config.perturbation_amplitude,
                config.seed,
            );
        }
        let reduction = Reduction::new(disc.pattern(), bcs);
        // newton updates keep the prescribed values fixed
        let zero_increments = DirichletSet::new(
            bcs.constraints
                .iter()
                .map(|c| DirichletBc { dof: c.dof, value: 0.0 })
                .collect(),
        )?;

        let mut energy = disc.total_energy(&d, &f_ext);
        if !energy.is_finite() {
            return Err(SolveError::PersistentInversion {
                step: step_idx,
                halvings: 0,
            });
        }
        let mut record = StepRecord {
            step: step_idx,
            iterations: Vec::new(),
            converged: false,
            energy,
        };
        let mut ref_norms: Option<FieldNorms> = None;

        for _iter in 0..config.max_iters {
            let system = disc.assemble(&d, &f_ext)?;
            let norms = residual_norms(&system.residual, &reduction, disc.dofmap.n_u_dofs);
            let refs = ref_norms.get_or_insert_with(|| FieldNorms {
                u: norms.u.max(config.newton_abs_tol),
                chi: norms.chi.max(config.newton_abs_tol),
            });
            let scaled = (norms.u / refs.u).max(norms.chi / refs.chi);
            let converged_u = norms.u <= (config.newton_tol * refs.u).max(config.newton_abs_tol);
            let converged_chi =
                norms.chi <= (config.newton_tol * refs.chi).max(config.newton_abs_tol);

            let mut iter_record = IterRecord {
                residual_u: norms.u,
                residual_chi: norms.chi,
                residual: scaled,
                energy,
                halvings: 0,
            };
            if converged_u && converged_chi {
                record.iterations.push(iter_record);
                record.converged = true;
                break;
            }

            let reduced = reduction.reduce(&system, &zero_increments);
            let x_free = solver
                .solve(reduction.mat_ref(&reduced.values), &reduced.rhs)
                .map_err(|source| SolveError::Linear {
                    step: step_idx,
                    source,
                })?;
            let update = reduction.expand(&x_free, &zero_increments);

            // step control: halve on inversion or on energy ascent beyond slack
            let slack = 1e-12 * (1.0 + energy.abs());
            let mut scale = 1.0;
            let mut halvings = 0u32;
            let trial_energy = loop {
                let trial: Vec<f64> = d
                    .iter()
                    .zip(&update)
                    .map(|(v, du)| v + scale * du)
                    .collect();
                let e = disc.total_energy(&trial, &f_ext);
                let acceptable = e.is_finite() && e <= energy + slack;
                if acceptable || halvings >= config.step_halving_max {
                    if !e.is_finite() {
                        return Err(SolveError::PersistentInversion {
                            step: step_idx,
                            halvings,
                        });
                    }
                    d = trial;
                    break e;
                }
                scale *= 0.5;
                halvings += 1;
            };
            energy = trial_energy;
            iter_record.halvings = halvings;
            iter_record.energy = energy;
            record.iterations.push(iter_record);
        }

        if !record.converged {
            let last = record.iterations.last().map(|r| r.residual).unwrap_or(0.0);
            return Err(SolveError::NoConvergence {
                step: step_idx,
                iterations: record.iterations.len(),
                residual: last,
            });
        }
        record.energy = energy;
        steps.push(record);
    }

    Ok(SolveReport { steps, fields: d })
}

/// Like [`solve`] but returns the partial report instead of failing when a
/// step does not converge; remaining steps are skipped.
pub fn solve_lenient(
    disc: &Discretization,
    program: &LoadProgram,
    load: &ExternalLoad,
    config: &SolverConfig,
) -> Result<SolveReport, SolveError> {
    match solve(disc, program, load, config) {
        Ok(report) => Ok(report),
        Err(SolveError::NoConvergence { .. }) => {
            // rerun collecting as much as converges; programs are cheap to
            // truncate because steps are independent dirichlet sets
            let mut truncated = program.clone();
            while !truncated.steps.is_empty() {
                truncated.steps.pop();
                match solve(disc, &truncated, load, config) {
                    Ok(report) => return Ok(report),
                    Err(SolveError::NoConvergence { .. }) => continue,
                    Err(other) => return Err(other),
                }
            }
            Err(SolveError::NoConvergence {
                step: 0,
                iterations: config.max_iters,
                residual: f64::NAN,
            })
        }
        Err(other) => Err(other),
    }
}

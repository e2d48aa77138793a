//! 3D nonlinear finite elements for gradient-polyconvex hyperelasticity.
//!
//! Energies here depend on the deformation gradient and on the gradient of
//! its cofactor. The cofactor gradient is handled through a mixed
//! formulation: an auxiliary second-order field `χ` with its own degrees of
//! freedom is penalized toward `Cof F`, so standard C⁰ elements apply. The
//! discretization uses 20-node serendipity bricks with quadratic
//! displacements and trilinear `χ` (132 DOFs per element), assembled into a
//! symmetric sparse system and solved by Newton-Raphson with incremental
//! loading.
//!
//! Crate layout:
//!
//! - [`tensor`]: dense 3×3/3×3×3/3×3×3×3 algebra, tensor cross product,
//!   cofactor calculus, packed representations
//! - [`material`]: St. Venant-Kirchhoff (plain and normalized) and
//!   double-well energies with analytic stresses and tangent blocks
//! - [`element`], [`mesh`]: serendipity shape functions, Gauss rules,
//!   structured block meshes, DOF maps
//! - [`assembly`]: element and global residual/stiffness, Dirichlet
//!   elimination
//! - [`linsolve`], [`solver`]: sparse direct solve and the Newton driver
//! - [`analysis`]: rank-one convexity probe, laminate diagnostics,
//!   equivalent strain
//! - [`fd`]: finite-difference verification utilities
//! - [`io`]: run configuration, experiment presets, VTK/CSV export

pub mod analysis;
pub mod assembly;
pub mod element;
pub mod fd;
pub mod io;
pub mod linsolve;
pub mod material;
pub mod mesh;
pub mod solver;
pub mod tensor;

pub use assembly::{DirichletBc, DirichletSet, Discretization, ExternalLoad};
pub use material::{MaterialParams, Model, PointState};
pub use mesh::{generate_block, DofMap, Face, Formulation, Mesh};
pub use solver::{solve, BcKind, LoadProgram, SolveReport, SolverConfig};
pub use tensor::{Tensor2, Tensor3, Tensor4};

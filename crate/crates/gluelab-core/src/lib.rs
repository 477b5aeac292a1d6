//! Core library of the gluelab workspace: a numerical laboratory for gluing
//! constructions of minimal surfaces.
//!
//! The crate builds discrete "initial surfaces" for two families of
//! constructions — doubling a minimal surface by catenoidal bridges, and
//! desingularizing a pair of intersecting minimal surfaces by handles modeled
//! on the singly periodic Scherk surface — then measures how close those
//! surfaces are to minimality, assembles the linearized (Jacobi) operator
//! `L = Δ + |A|² + Ric(ν,ν)`, and relaxes them toward minimality with damped
//! Newton steps.
//!
//! Module map:
//! - [`ambient`]: the three background geometries (Euclidean 3-space, the
//!   unit round 3-sphere, a chart adapted to the Clifford torus).
//! - [`surfacecalc`]: discrete differential geometry — fundamental forms,
//!   mean curvature, Jacobi operator assembly, small-eigenvalue solves,
//!   smooth cutoffs, and discrete sequence norms.
//! - [`scherk`]: the singly periodic Scherk family — implicit surfaces,
//!   wing asymptotics, structured meshes, dislocations, and tetrads.
//! - [`doubling`]: doubled surfaces over the Clifford torus and over the
//!   equatorial two-sphere, bridge sizing, and the balanced-profile ODE.
//! - [`desing`]: desingularization along an intersection curve — scale
//!   profiles, handle cores, wings, and the parameter family.
//! - [`balance`]: force and balancing diagnostics shared by both
//!   constructions.
//! - [`perturb`]: nondegeneracy checks, linear solves modulo near-kernel
//!   modes, and Newton relaxation toward minimality.
//! - [`sparse`]: small self-contained symmetric sparse linear algebra (CSR,
//!   reordered LDLT, MINRES, block inverse iteration) backing the solvers.
//!
//! Conventions used throughout:
//! - Scalars are `f64`; small vectors/matrices come from `nalgebra`.
//! - Points and tangent vectors are carried as `Vector4<f64>`: chart and
//!   Euclidean coordinates occupy `(x, y, z, 0)`, round-sphere points are
//!   extrinsic unit 4-vectors.
//! - Mean curvature uses the graph convention `H = ⟨Δ_M X, ν⟩`, under which
//!   the unit round 2-sphere in Euclidean 3-space reports `H = 2` with the
//!   normal our sphere builders carry, and a normal graph `f·ν` satisfies
//!   `H_f = H + Lf + Q_f` with `Q_f` quadratic.

pub mod ambient;
pub mod balance;
pub mod desing;
pub mod doubling;
pub mod error;
pub mod perturb;
pub mod scherk;
pub mod sparse;
pub mod surfacecalc;

pub use error::{Error, ErrorCategory, Result};

/// Extrinsic/chart coordinate vector; see the crate docs for the layout.
pub type Vec4 = nalgebra::Vector4<f64>;
/// Chart-coordinate 3-vector.
pub type Vec3 = nalgebra::Vector3<f64>;
/// Planar 2-vector (wing directions, horizontal projections).
pub type Vec2 = nalgebra::Vector2<f64>;

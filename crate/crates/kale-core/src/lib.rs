//! Numerical differential geometry for a family of U(n)-invariant Kahler
//! metrics given by radial potentials, their conformal compactifications,
//! and the associated curvature certificates.
//!
//! The crate is organized bottom-up:
//! * [`series`], [`jet`]: truncated Taylor arithmetic (one variable to
//!   order 4, many variables to order 2) used for exact derivatives;
//! * [`quad`], [`ode`]: adaptive quadrature and an embedded Runge-Kutta
//!   integrator with dense output;
//! * [`chart`]: metric fields on coordinate charts, curvature, self-dual /
//!   anti-self-dual splitting, Kahler defects;
//! * [`expr`]: a small expression language for radial profiles;
//! * [`potential`]: radial Kahler potentials and the metrics they induce;
//! * [`compactify`]: conformal factors, inversion, and the compactified
//!   potential;
//! * [`lebrun`]: the one-parameter cohomogeneity-one family in its frame
//!   and complex presentations, with potential recovery and scalar-flatness
//!   and cone-angle certificates;
//! * [`einstein`]: the conformally related Einstein representatives and the
//!   classification of the parameter range into regimes;
//! * [`sample`]: seeded random chart points and symmetry generators for
//!   invariance checks.

pub mod chart;
pub mod compactify;
pub mod einstein;
pub mod expr;
pub mod jet;
pub mod lebrun;
pub mod ode;
pub mod potential;
pub mod quad;
pub mod sample;
pub mod series;

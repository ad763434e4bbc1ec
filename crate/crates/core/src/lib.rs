//! Construction and certification of topological conjugacies between
//! hyperbolic linear automorphisms of `K^d` and their Lipschitz
//! perturbations, over real fields with `|.|^q` and over p-adic fields.
//!
//! The pipeline runs bottom-up: [`scalars`] and [`linspace`] provide the
//! field and the hyperbolic system, [`maps`] the certified perturbations,
//! [`conjugacy`] the contraction iteration for `v` and `w` with Hölder
//! certificates, [`localize`] the cut-off construction for local
//! linearization, and [`paramdep`] the parameter-dependence sweeps.

pub mod conjugacy;
pub mod error;
pub mod expr;
pub mod linspace;
pub mod localize;
pub mod maps;
pub mod paramdep;
pub mod sampling;
pub mod scalars;

pub use error::{Error, Result};
pub use linspace::{check_hyperbolic, HyperbolicSystem, Matrix, NormSpec, Splitting, Vector};
pub use maps::Perturbation;
pub use scalars::{FieldSpec, PAdic, Scalar};

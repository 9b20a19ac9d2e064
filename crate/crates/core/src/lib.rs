//! Exact symbolic tools for the inverse problem of the calculus of
//! variations on jet bundles.
//!
//! * [`jet`]: canonical expressions over `J^k E`, total derivatives,
//!   weighted partials, pullback along polynomial sections.
//! * [`varcalc`]: Euler–Lagrange, total divergence, Helmholtz expressions
//!   and their dependencies, Vainberg–Tonti Lagrangians.
//! * [`symmetry`]: projectable vector fields, prolongation, the Noether
//!   decomposition, continuity equations and the Takens report.
//! * [`numeric`]: quadrature and finite-difference checks of the weak form.
//! * [`dsl`]: the `.vk` model format.

pub mod dsl;
pub mod jet;
pub mod numeric;
pub mod symmetry;
pub mod varcalc;

pub type Rational = num_rational::BigRational;

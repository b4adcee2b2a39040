//! Risk-driven assurance workbench for collaborative robot cells.
//!
//! The crate is organised along the three stages of a risk assessment:
//!
//! * [`risk_model`] parses and validates `.riskml` risk models, derives assurance
//!   cases from them and writes likelihood annotations back.
//! * [`sim`] is a seeded, fixed-timestep planar simulation of a conveyor / arm /
//!   operator cell with a surrogate vision component and a speed-and-separation
//!   safety controller.
//! * [`falsify`] searches the domain-feature space of a situation for assignments
//!   that violate an event condition.
//! * [`explain`] induces a CART tree over the evaluated assignments, extracts
//!   non-compliance rules and samples counterexamples inside them.
//!
//! Geometry and the closed-form safety / perception models are generic over
//! [`Scalar`]; the simulator itself runs on [`Real`].

pub mod digest;
pub mod explain;
pub mod falsify;
pub mod risk_model;
pub mod scalar;
pub mod sim;

pub use scalar::Scalar;

/// Scalar type used by the simulator, the search and the tree induction.
pub type Real = f64;

/// Planar point / vector in [`Real`] coordinates.
pub type Point = sim::geometry::Vec2<Real>;

/// Single-precision point, handy for rendering or storage.
pub type Point32 = sim::geometry::Vec2<f32>;

/// Shipped default risk model source.
pub const DEFAULT_MODEL: &str = include_str!("../../../assets/default.riskml");

/// Shipped default cell scenario.
pub const DEFAULT_SCENARIO: &str = include_str!("../../../assets/default_cell.scenario");

//! Stationary continuous-variable entanglement in a two-cavity
//! optomechanical system with an atomic ensemble in the driven cavity.
//!
//! The pipeline for one parameter point is
//! [`params::derive_constants`] → [`steady_state::solve_steady_state`] →
//! [`linear_dynamics::build_linear_model`] → [`lyapunov::solve_lyapunov`] →
//! [`entanglement::all_pairs_report`]; [`sweep::evaluate_point`] runs it end
//! to end.

pub mod config;
pub mod constants;
pub mod entanglement;
pub mod linear_dynamics;
pub mod lyapunov;
pub mod params;
pub mod steady_state;
pub mod sweep;

/// 8×8 real matrix in the quadrature basis `(δq, δp, δX₁, δY₁, δX₂, δY₂, δx, δy)`.
pub type Matrix8 = nalgebra::SMatrix<f64, 8, 8>;

pub use config::{ConfigError, ConfigFile};
pub use entanglement::{BipartitePair, EntanglementReport, Mode};
pub use linear_dynamics::{LinearModel, Stability};
pub use lyapunov::CovarianceMatrix;
pub use params::{DerivedConstants, DetuningSpec, PhysicalParams};
pub use steady_state::{SteadyState, SteadyStateSolution, ValidityReport};
pub use sweep::{evaluate_point, find_critical_temperature, run_sweep, PointResult, SweepAxis, SweepRow, SweepSpec};

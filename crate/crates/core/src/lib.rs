//! Energy-conserving finite-difference solver for the two-dimensional
//! hyperbolic Serre-Green-Naghdi equations.
//!
//! Spatial derivatives use second-order summation-by-parts operators, the
//! equations are discretized in a split form that conserves total energy, and
//! reflecting walls are imposed weakly. Time integration uses an adaptive
//! explicit embedded Runge-Kutta pair.
//!
//! Every numerical type is generic over [`Real`] (`f32` or `f64`); the
//! aliases at the crate root fix the scalar to `f64`.
//!
//! ```
//! use hypsgn::{scenarios, rhs::BoundaryKind, SgnRhs};
//!
//! let spec = scenarios::lake_at_rest(1.0, 16, BoundaryKind::Reflecting);
//! let sim = spec.build::<f64>().unwrap();
//! let mut rhs = SgnRhs::new(sim.ctx);
//! let mut dq = vec![0.0; sim.initial.as_slice().len()];
//! rhs.eval(0.0, sim.initial.as_slice(), &mut dq).unwrap();
//! assert!(dq.iter().all(|v| v.abs() < 1e-12));
//! ```

pub mod analysis;
pub mod error;
pub mod grid;
pub mod model;
pub mod num;
pub mod rhs;
pub mod sbp;
pub mod scenarios;
pub mod time_integration;

pub use error::{Error, Result};
pub use grid::{Field, Grid2D};
pub use model::{PhysSetup, StateField, Var};
pub use num::Real;
pub use rhs::{BoundaryKind, RhsContext, SgnRhs};
pub use sbp::{OperatorKind, Operators2D, SbpOperator1D};
pub use time_integration::{adaptive_solve, IntegratorConfig, RecordingPlan, SolutionRecord};

pub type Grid = Grid2D<f64>;
pub type Field64 = Field<f64>;
pub type State = StateField<f64>;
pub type Phys = PhysSetup<f64>;
pub type Context = RhsContext<f64>;
pub type Rhs = SgnRhs<f64>;
pub type Operators = Operators2D<f64>;
pub type Operator1D = SbpOperator1D<f64>;
pub type Record = SolutionRecord<f64>;

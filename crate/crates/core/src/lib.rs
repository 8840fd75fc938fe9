//! Electromechanically coupled geometrically exact beams for dielectric
//! elastomer actuators, integrated in time by a constrained variational
//! integrator.

// index loops mirror the component formulas; negated comparisons reject NaN
#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod ad;
pub mod derivcheck;
pub mod discretization;
pub mod error;
pub mod integrator;
pub mod kinematics;
pub mod linalg;
pub mod materials;
pub mod scenario;
pub mod so3;
pub mod tensor;
pub mod validation;

pub use discretization::{BeamMesh, DirichletMask, DofSchedule, GlobalConfiguration, NodeMask};
pub use error::{Error, Result};
pub use integrator::{EnergySample, Integrator, NewtonOptions, StepDiagnostics, StepState};
pub use kinematics::{BeamStrains, NodeState, ReducedStrains, ReferenceFrame, Triad};
pub use materials::{EnergyModel, EnergyPath, MaterialParams, SectionProperties};
pub use scenario::{build_scenario, write_outputs, RunSummary, Scenario, ScenarioConfig, ScenarioKind};
pub use tensor::{Mat3, Vec3};

//! Attitude control laboratory for multicopters.
//!
//! - [`so3`]: rotation algebra, axis-angle conversions and the reduced
//!   (tilt/yaw) attitude decomposition.
//! - [`controllers`]: skew-symmetric, rotation-vector, quaternion
//!   tilt-priority and proportional tilt-priority attitude laws.
//! - [`dynamics`]: closed-loop rigid-body simulation on SO(3), with an
//!   optional cascaded position loop.
//! - [`lyapunov`]: Lyapunov functions and descent checks along traces.
//! - [`scenario`]: named scenarios, config documents, metrics, CSV output and
//!   controller comparison reports.
//! - [`reference`]: an independent quaternion-state integrator used as a
//!   fine-step oracle.
//! - [`acceptance`]: the acceptance battery.

pub mod acceptance;
pub mod controllers;
pub mod dynamics;
pub mod lyapunov;
pub mod reference;
pub mod scenario;
pub mod so3;

pub use controllers::{
    AttitudeErrorState, BodyParams, ControllerGains, ControllerKind, DesiredAttitudeTrajectory,
};
pub use dynamics::{AttitudeState, SimConfig, SimTrace, TranslationalState};
pub use so3::{AxisAngle, RotationMatrix, UnitVec3, Vec3};

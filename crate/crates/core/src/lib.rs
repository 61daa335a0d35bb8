//! Motion cueing algorithms for a 4-DoF driving-simulator platform.
//!
//! The platform moves in surge and sway and tilts in pitch and roll. Two
//! receding-horizon controllers are implemented on top of the same
//! triple-integrator platform model and constraint set:
//!
//! * a frequency-splitting controller that scales the vehicle acceleration
//!   reference, splits it into complementary low- and high-frequency parts
//!   and tracks the total specific force, the tilt component and the
//!   translational acceleration separately, and
//! * a benchmark controller that tracks the total specific force only.
//!
//! Supporting modules provide reference scenarios, a scaling-factor
//! advisor, closed-loop simulation against an ideal or lag-afflicted
//! plant, and RMSE/horizon-sweep evaluation used by the `mca` CLI.

pub mod config;
pub mod cueing;
pub mod error;
pub mod eval;
pub mod freq_split;
pub mod model;
pub mod mpc;
pub mod plant;
pub mod qp;
pub mod scaling;
pub mod scenario;

pub use cueing::{McaConfig, McaMode, MotionCueing};
pub use error::McaError;
pub use model::{AxisState, ControlInput, PlatformState, SpecificForce, GRAVITY};

//! Platform model: triple-integrator dynamics and the specific-force output map.
//!
//! The platform is described per controlled axis by a translational chain
//! (displacement, velocity, acceleration) and a tilt chain (angle, rate,
//! angular acceleration), both driven by jerk inputs. The longitudinal axis
//! pairs surge with pitch, the lateral axis pairs sway with roll. Tilt is
//! planar and decoupled per axis: a tilt angle `theta` contributes
//! `g*sin(theta)` to the specific force on its paired translational axis,
//! with positive tilt giving a positive contribution.

use crate::error::McaError;

/// Standard gravity used throughout (m/s²).
pub const GRAVITY: f64 = 9.81;

/// Kinematic state of one controlled axis.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct AxisState {
    /// Displacement (m).
    pub s: f64,
    /// Velocity (m/s).
    pub v: f64,
    /// Acceleration (m/s²).
    pub a: f64,
    /// Tilt angle (rad).
    pub theta: f64,
    /// Tilt rate (rad/s).
    pub omega: f64,
    /// Tilt acceleration (rad/s²).
    pub alpha: f64,
}

impl AxisState {
    pub fn is_finite(&self) -> bool {
        self.s.is_finite()
            && self.v.is_finite()
            && self.a.is_finite()
            && self.theta.is_finite()
            && self.omega.is_finite()
            && self.alpha.is_finite()
    }
}

/// Full platform state: longitudinal (surge + pitch) and lateral (sway + roll).
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct PlatformState {
    pub long: AxisState,
    pub lat: AxisState,
}

impl PlatformState {
    pub fn is_finite(&self) -> bool {
        self.long.is_finite() && self.lat.is_finite()
    }

    /// Axis accessor in the fixed order used everywhere: 0 = long, 1 = lat.
    pub fn axis(&self, i: usize) -> &AxisState {
        match i {
            0 => &self.long,
            1 => &self.lat,
            _ => panic!("axis index out of range"),
        }
    }

    pub fn axis_mut(&mut self, i: usize) -> &mut AxisState {
        match i {
            0 => &mut self.long,
            1 => &mut self.lat,
            _ => panic!("axis index out of range"),
        }
    }
}

/// Jerk commands: the inputs to the platform model.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ControlInput {
    /// Longitudinal translational jerk (m/s³).
    pub j_long: f64,
    /// Lateral translational jerk (m/s³).
    pub j_lat: f64,
    /// Pitch angular jerk (rad/s³).
    pub jang_long: f64,
    /// Roll angular jerk (rad/s³).
    pub jang_lat: f64,
}

impl ControlInput {
    pub fn is_finite(&self) -> bool {
        self.j_long.is_finite()
            && self.j_lat.is_finite()
            && self.jang_long.is_finite()
            && self.jang_lat.is_finite()
    }

    /// (translational jerk, angular jerk) of one axis, 0 = long, 1 = lat.
    pub fn axis(&self, i: usize) -> (f64, f64) {
        match i {
            0 => (self.j_long, self.jang_long),
            1 => (self.j_lat, self.jang_lat),
            _ => panic!("axis index out of range"),
        }
    }
}

/// Specific force felt by the occupant, per axis and split by origin.
///
/// `f = a + g` componentwise: translational acceleration plus the gravity
/// component induced by tilt.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct SpecificForce {
    pub f_long: f64,
    pub f_lat: f64,
    pub g_long: f64,
    pub g_lat: f64,
    pub a_long: f64,
    pub a_lat: f64,
}

/// Exact constant-jerk update of a single axis over one step of `dt`.
///
/// This is the zero-order-hold discretization of the triple integrator, so
/// composing steps reproduces the closed-form cubic exactly (up to f64
/// rounding).
#[inline]
pub fn step_axis(x: &AxisState, j: f64, jang: f64, dt: f64) -> AxisState {
    let dt2 = dt * dt;
    let dt3 = dt2 * dt;
    AxisState {
        s: x.s + x.v * dt + x.a * dt2 / 2.0 + j * dt3 / 6.0,
        v: x.v + x.a * dt + j * dt2 / 2.0,
        a: x.a + j * dt,
        theta: x.theta + x.omega * dt + x.alpha * dt2 / 2.0 + jang * dt3 / 6.0,
        omega: x.omega + x.alpha * dt + jang * dt2 / 2.0,
        alpha: x.alpha + jang * dt,
    }
}

/// Advance the platform one step under constant jerk.
pub fn step_dynamics(
    x: &PlatformState,
    u: &ControlInput,
    dt: f64,
) -> Result<PlatformState, McaError> {
    if !(dt > 0.0) {
        return Err(McaError::Model(format!("non-positive step size {dt}")));
    }
    if !x.is_finite() || !u.is_finite() {
        return Err(McaError::Model("non-finite state or input".into()));
    }
    Ok(PlatformState {
        long: step_axis(&x.long, u.j_long, u.jang_long, dt),
        lat: step_axis(&x.lat, u.j_lat, u.jang_lat, dt),
    })
}

/// Gravity component of the specific force for a planar tilt angle (m/s²).
#[inline]
pub fn tilt_component(theta: f64) -> f64 {
    debug_assert!(theta.abs() <= std::f64::consts::FRAC_PI_2 + 1e-9);
    GRAVITY * theta.sin()
}

/// Specific force produced by a platform state: `f_i = a_i + g*sin(theta_i)`.
pub fn output_map(x: &PlatformState) -> SpecificForce {
    let g_long = tilt_component(x.long.theta);
    let g_lat = tilt_component(x.lat.theta);
    SpecificForce {
        f_long: x.long.a + g_long,
        f_lat: x.lat.a + g_lat,
        g_long,
        g_lat,
        a_long: x.long.a,
        a_lat: x.lat.a,
    }
}

/// Non-trivial partials of the output map, evaluated at a state.
///
/// The output is affine in everything except the tilt angles, so the only
/// entries worth carrying are `d g_i / d theta_i = g*cos(theta_i)`; the
/// specific force inherits them (`d f_i / d theta_i` is the same value) and
/// `d f_i / d a_i = 1`.
#[derive(Clone, Copy, Debug)]
pub struct OutputJacobian {
    /// `[long, lat]` values of `g*cos(theta_i)`.
    pub dg_dtheta: [f64; 2],
}

pub fn linearize_output(x: &PlatformState) -> OutputJacobian {
    OutputJacobian {
        dg_dtheta: [
            GRAVITY * x.long.theta.cos(),
            GRAVITY * x.lat.theta.cos(),
        ],
    }
}

//! Closed-loop plants and the simulation harness.
//!
//! The ideal plant is the controller's internal model (the exact triple
//! integrator), so commanded and achieved motion coincide. The surrogate
//! plant stands in for the real actuation chain: each jerk command passes
//! through a second-order lag with unit DC gain, and the achieved tilt rate
//! saturates slightly above the perception threshold. That reproduces the
//! conditions under which the soft tilt-rate constraint earns its keep:
//! commanded and achieved motion diverge a little, and the controller has to
//! absorb the mismatch.

use std::io::Write;
use std::time::Instant;

use nalgebra::{Matrix2, Matrix3, Vector2};

use crate::cueing::{McaConfig, MotionCueing};
use crate::error::McaError;
use crate::freq_split;
use crate::model::{output_map, step_dynamics, ControlInput, PlatformState};
use crate::scenario::Scenario;

/// Plant selection for closed-loop runs.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PlantKind {
    /// Exact triple integrator (matches the controller's internal model).
    Ideal,
    /// Second-order jerk lag plus tilt-rate saturation.
    Surrogate {
        /// Lag natural frequency (rad/s).
        omega_n: f64,
        /// Lag damping ratio.
        zeta: f64,
        /// Hard tilt-rate saturation (rad/s).
        rate_limit_omega: f64,
    },
}

impl PlantKind {
    /// Default surrogate: 20 rad/s lag at 0.9 damping, tilt-rate saturation
    /// 5% above the perception threshold.
    pub fn surrogate_default(omega_max: f64) -> Self {
        PlantKind::Surrogate {
            omega_n: 20.0,
            zeta: 0.9,
            rate_limit_omega: 1.05 * omega_max,
        }
    }

    pub fn validate(&self) -> Result<(), McaError> {
        if let PlantKind::Surrogate {
            omega_n,
            zeta,
            rate_limit_omega,
        } = self
        {
            if !(*omega_n > 0.0) {
                return Err(McaError::Config("surrogate omega_n must be positive".into()));
            }
            if !(*zeta > 0.0 && *zeta <= 2.0) {
                return Err(McaError::Config("surrogate zeta must lie in (0, 2]".into()));
            }
            if !(*rate_limit_omega > 0.0) {
                return Err(McaError::Config("surrogate rate limit must be positive".into()));
            }
        }
        Ok(())
    }
}

/// Second-order lag state for one jerk channel.
#[derive(Clone, Copy, Debug, Default)]
struct LagState {
    y: f64,
    ydot: f64,
}

/// Exact zero-order-hold discretization of
/// `y'' = omega_n^2 (u - y) - 2 zeta omega_n y'`
/// via the matrix exponential of the augmented system.
fn lag_discretization(omega_n: f64, zeta: f64, dt: f64) -> (Matrix2<f64>, Vector2<f64>) {
    let mut m = Matrix3::zeros();
    m[(0, 1)] = 1.0;
    m[(1, 0)] = -omega_n * omega_n;
    m[(1, 1)] = -2.0 * zeta * omega_n;
    m[(1, 2)] = omega_n * omega_n;
    m *= dt;

    // Scale, Taylor-expand, square back.
    let norm = m.abs().column_sum().max();
    let scalings = if norm > 0.5 {
        (norm / 0.5).log2().ceil() as u32
    } else {
        0
    };
    m /= 2f64.powi(scalings as i32);
    let mut term = Matrix3::identity();
    let mut exp = Matrix3::identity();
    for k in 1..=14 {
        term = term * m / k as f64;
        exp += term;
    }
    for _ in 0..scalings {
        exp = exp * exp;
    }
    (
        exp.fixed_view::<2, 2>(0, 0).into_owned(),
        Vector2::new(exp[(0, 2)], exp[(1, 2)]),
    )
}

/// A plant instance; owns the lag filter state of the surrogate.
#[derive(Clone, Debug)]
pub struct Plant {
    kind: PlantKind,
    lags: [LagState; 4],
    disc: Option<(f64, Matrix2<f64>, Vector2<f64>)>,
}

impl Plant {
    pub fn new(kind: PlantKind) -> Result<Self, McaError> {
        kind.validate()?;
        Ok(Self {
            kind,
            lags: [LagState::default(); 4],
            disc: None,
        })
    }

    pub fn kind(&self) -> &PlantKind {
        &self.kind
    }

    /// Advance the plant one step under the commanded jerks.
    pub fn step(
        &mut self,
        x: &PlatformState,
        u: &ControlInput,
        dt: f64,
    ) -> Result<PlatformState, McaError> {
        match self.kind {
            PlantKind::Ideal => step_dynamics(x, u, dt),
            PlantKind::Surrogate {
                omega_n,
                zeta,
                rate_limit_omega,
            } => {
                let (ad, bd) = match self.disc {
                    Some((cached_dt, ad, bd)) if cached_dt == dt => (ad, bd),
                    _ => {
                        let (ad, bd) = lag_discretization(omega_n, zeta, dt);
                        self.disc = Some((dt, ad, bd));
                        (ad, bd)
                    }
                };
                let cmd = [u.j_long, u.j_lat, u.jang_long, u.jang_lat];
                let mut achieved = [0.0; 4];
                for (ch, lag) in self.lags.iter_mut().enumerate() {
                    // Achieved jerk over the step: the filter output at the
                    // start of the interval (one-step hold of the lag).
                    achieved[ch] = lag.y;
                    let next = ad * Vector2::new(lag.y, lag.ydot) + bd * cmd[ch];
                    lag.y = next[0];
                    lag.ydot = next[1];
                }
                let filtered = ControlInput {
                    j_long: achieved[0],
                    j_lat: achieved[1],
                    jang_long: achieved[2],
                    jang_lat: achieved[3],
                };
                let mut next = step_dynamics(x, &filtered, dt)?;
                for ax in 0..2 {
                    let om = &mut next.axis_mut(ax).omega;
                    if om.abs() > rate_limit_omega {
                        *om = rate_limit_omega.copysign(*om);
                    }
                }
                Ok(next)
            }
        }
    }
}

/// Per-axis record of one closed-loop tick.
#[derive(Clone, Copy, Debug, Default)]
pub struct AxisSample {
    pub f_ref: f64,
    pub lf_ref: f64,
    pub hf_ref: f64,
    pub f: f64,
    pub g: f64,
    pub a: f64,
    pub s: f64,
    pub v: f64,
    pub theta: f64,
    pub omega: f64,
    /// Tilt-rate slack at the applied step.
    pub delta: f64,
}

#[derive(Clone, Copy, Debug)]
pub struct TickSample {
    pub t: f64,
    pub long: AxisSample,
    pub lat: AxisSample,
    /// SQP iterations used this tick.
    pub iters: usize,
    /// Wall-clock solve time for this tick (ms).
    pub solve_ms: f64,
}

/// Closed-loop time series plus run metadata.
#[derive(Clone, Debug, Default)]
pub struct TrajectoryLog {
    pub dt: f64,
    pub rows: Vec<TickSample>,
    /// Set when the run stopped early on a solver failure; the rows up to
    /// the failure are kept.
    pub aborted: Option<String>,
}

impl TrajectoryLog {
    pub fn total_slack(&self) -> f64 {
        self.rows.iter().map(|r| r.long.delta + r.lat.delta).sum()
    }

    /// Ticks violating the workspace bounds beyond `tol` (absolute on each
    /// quantity; tilt rate is checked against threshold + logged slack).
    pub fn workspace_violations(&self, lim: &crate::mpc::Limits, tol: f64) -> usize {
        self.rows
            .iter()
            .filter(|r| {
                [&r.long, &r.lat].iter().any(|ax| {
                    ax.s.abs() > lim.s_max + tol
                        || ax.theta.abs() > lim.theta_max + tol
                        || ax.v.abs() > lim.v_max + tol
                        || ax.a.abs() > lim.a_max + tol
                        || ax.omega.abs() > lim.omega_max + ax.delta + tol
                })
            })
            .count()
    }

    /// Write the log in the plotting CSV layout, one row per tick per axis.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(
            w,
            "t,axis,f_ref,lf_ref,hf_ref,f,G,a,s,v,theta,omega,delta,iters,solve_ms"
        )?;
        for row in &self.rows {
            for (name, ax) in [("long", &row.long), ("lat", &row.lat)] {
                writeln!(
                    w,
                    "{:.6},{name},{},{},{},{},{},{},{},{},{},{},{},{},{:.4}",
                    row.t,
                    ax.f_ref,
                    ax.lf_ref,
                    ax.hf_ref,
                    ax.f,
                    ax.g,
                    ax.a,
                    ax.s,
                    ax.v,
                    ax.theta,
                    ax.omega,
                    ax.delta,
                    row.iters,
                    row.solve_ms
                )?;
            }
        }
        Ok(())
    }
}

/// Run one scenario closed loop: build references, tick the controller,
/// apply the first command to the plant, log everything.
pub fn run_closed_loop(
    cfg: &McaConfig,
    kind: PlantKind,
    scenario: &Scenario,
    k_scale: f64,
) -> Result<TrajectoryLog, McaError> {
    cfg.validate()?;
    if (scenario.dt - cfg.dt).abs() > 1e-9 * cfg.dt.max(scenario.dt) {
        return Err(McaError::Config(format!(
            "scenario sampled at {} s but controller runs at {} s",
            scenario.dt, cfg.dt
        )));
    }
    if scenario.len() < 2 {
        return Err(McaError::Scenario("scenario too short to run".into()));
    }

    let refs = freq_split::build_references(&scenario.ax, &scenario.ay, &cfg.split_config(k_scale))?;
    let mut mca = MotionCueing::new(*cfg)?;
    let mut plant = Plant::new(kind)?;
    let mut x = PlatformState::default();
    let mut log = TrajectoryLog {
        dt: cfg.dt,
        ..Default::default()
    };

    for i in 0..scenario.len() - 1 {
        let la = freq_split::lookahead(&refs, i, cfg.horizon);
        let started = Instant::now();
        let (cmd, sol) = match mca.tick(&x, &la) {
            Ok(v) => v,
            Err(e) => {
                log.aborted = Some(format!("tick {i}: {e}"));
                return Ok(log);
            }
        };
        let solve_ms = started.elapsed().as_secs_f64() * 1e3;
        x = plant.step(&x, &cmd, cfg.dt)?;

        let y = output_map(&x);
        let r = refs[i + 1];
        let axis_row = |ax: usize| {
            let st = x.axis(ax);
            let (f_ref, lf_ref, hf_ref, f, g, a) = if ax == 0 {
                (r.f_ref_long, r.lf_long, r.hf_long, y.f_long, y.g_long, y.a_long)
            } else {
                (r.f_ref_lat, r.lf_lat, r.hf_lat, y.f_lat, y.g_lat, y.a_lat)
            };
            AxisSample {
                f_ref,
                lf_ref,
                hf_ref,
                f,
                g,
                a,
                s: st.s,
                v: st.v,
                theta: st.theta,
                omega: st.omega,
                delta: sol.slack[0][ax],
            }
        };
        log.rows.push(TickSample {
            t: (i + 1) as f64 * cfg.dt,
            long: axis_row(0),
            lat: axis_row(1),
            iters: sol.iterations,
            solve_ms,
        });
    }
    Ok(log)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::AxisState;
    use approx::assert_relative_eq;

    #[test]
    fn ideal_plant_is_the_integrator() {
        let mut plant = Plant::new(PlantKind::Ideal).unwrap();
        let x = PlatformState {
            long: AxisState {
                s: 0.1,
                v: 0.2,
                a: -0.1,
                theta: 0.02,
                omega: 0.01,
                alpha: 0.0,
            },
            lat: AxisState::default(),
        };
        let u = ControlInput {
            j_long: 0.5,
            jang_lat: -0.2,
            ..Default::default()
        };
        let via_plant = plant.step(&x, &u, 0.01).unwrap();
        let via_model = step_dynamics(&x, &u, 0.01).unwrap();
        assert_eq!(via_plant, via_model);
    }

    #[test]
    fn surrogate_lag_has_unit_dc_gain() {
        // Constant jerk command: after several lag time constants the
        // achieved acceleration rate matches the command within 1%.
        let kind = PlantKind::surrogate_default(3f64.to_radians());
        let mut plant = Plant::new(kind).unwrap();
        let mut x = PlatformState::default();
        let dt = 0.01;
        let u = ControlInput {
            j_long: 1.0,
            ..Default::default()
        };
        let mut prev_a = 0.0;
        let mut achieved_rate = 0.0;
        for i in 0..200 {
            x = plant.step(&x, &u, dt).unwrap();
            if i == 199 {
                achieved_rate = (x.long.a - prev_a) / dt;
            }
            prev_a = x.long.a;
        }
        assert_relative_eq!(achieved_rate, 1.0, epsilon = 0.01);
    }

    #[test]
    fn lag_discretization_matches_substep_integration() {
        // Against a fine RK4 oracle over one controller step.
        let (omega_n, zeta, dt) = (20.0, 0.9, 0.01);
        let (ad, bd) = lag_discretization(omega_n, zeta, dt);
        let u = 0.7;
        let exact = ad * Vector2::new(0.3, -1.0) + bd * u;

        let f = |y: Vector2<f64>| {
            Vector2::new(
                y[1],
                omega_n * omega_n * (u - y[0]) - 2.0 * zeta * omega_n * y[1],
            )
        };
        let mut y = Vector2::new(0.3, -1.0);
        let h = dt / 1000.0;
        for _ in 0..1000 {
            let k1 = f(y);
            let k2 = f(y + k1 * (h / 2.0));
            let k3 = f(y + k2 * (h / 2.0));
            let k4 = f(y + k3 * h);
            y += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
        }
        assert_relative_eq!(exact[0], y[0], epsilon = 1e-9);
        assert_relative_eq!(exact[1], y[1], epsilon = 1e-8);
    }

    #[test]
    fn surrogate_saturates_tilt_rate() {
        let omega_max = 3f64.to_radians();
        let kind = PlantKind::surrogate_default(omega_max);
        let mut plant = Plant::new(kind).unwrap();
        let mut x = PlatformState::default();
        // Drive omega well past 4 deg/s.
        let u = ControlInput {
            jang_long: 2.0,
            ..Default::default()
        };
        for _ in 0..200 {
            x = plant.step(&x, &u, 0.01).unwrap();
        }
        assert_relative_eq!(x.long.omega, 1.05 * omega_max, epsilon = 1e-12);
    }

    #[test]
    fn zero_scenario_logs_zeros() {
        let cfg = McaConfig::default();
        let scenario = Scenario {
            name: "zero".into(),
            dt: cfg.dt,
            ax: vec![0.0; 50],
            ay: vec![0.0; 50],
        };
        let log = run_closed_loop(&cfg, PlantKind::Ideal, &scenario, 1.0).unwrap();
        assert!(log.aborted.is_none());
        assert_eq!(log.rows.len(), 49);
        for row in &log.rows {
            assert_eq!(row.long.f, 0.0);
            assert_eq!(row.long.s, 0.0);
            assert_eq!(row.lat.omega, 0.0);
            assert_eq!(row.long.delta, 0.0);
        }
    }

    #[test]
    fn csv_layout_is_stable() {
        let log = TrajectoryLog {
            dt: 0.01,
            rows: vec![TickSample {
                t: 0.01,
                long: AxisSample::default(),
                lat: AxisSample::default(),
                iters: 1,
                solve_ms: 0.5,
            }],
            aborted: None,
        };
        let mut buf = Vec::new();
        log.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "t,axis,f_ref,lf_ref,hf_ref,f,G,a,s,v,theta,omega,delta,iters,solve_ms"
        );
        assert!(lines.next().unwrap().starts_with("0.010000,long,"));
        assert!(lines.next().unwrap().starts_with("0.010000,lat,"));
    }

    #[test]
    fn mismatched_sample_rate_is_rejected() {
        let cfg = McaConfig::default();
        let scenario = Scenario {
            name: "bad".into(),
            dt: 0.02,
            ax: vec![0.0; 10],
            ay: vec![0.0; 10],
        };
        assert!(run_closed_loop(&cfg, PlantKind::Ideal, &scenario, 1.0).is_err());
    }
}

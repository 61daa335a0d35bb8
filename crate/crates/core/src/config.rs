//! File-based configuration overrides.
//!
//! A run configuration file (TOML when loaded by the CLI) carries the same
//! parameter names as the documented defaults; every field is optional and
//! overrides the built-in value. Angles are given in degrees in the file and
//! converted here.

use serde::Deserialize;

use crate::cueing::McaConfig;
use crate::plant::PlantKind;

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub dt: Option<f64>,
    pub horizon: Option<usize>,
    pub cutoff_hz: Option<f64>,
    pub max_solver_iterations: Option<usize>,
    #[serde(default)]
    pub weights: WeightsOverride,
    #[serde(default)]
    pub limits: LimitsOverride,
    #[serde(default)]
    pub braking: BrakingOverride,
    #[serde(default)]
    pub washout: WashoutOverride,
    #[serde(default)]
    pub surrogate: SurrogateOverride,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightsOverride {
    pub w_fspec: Option<f64>,
    #[serde(rename = "w_G", alias = "w_g")]
    pub w_g: Option<f64>,
    pub w_ahex: Option<f64>,
    pub w_j: Option<f64>,
    pub w_angj: Option<f64>,
    pub w_delta: Option<f64>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LimitsOverride {
    pub omega_max_deg: Option<f64>,
    pub theta_max_deg: Option<f64>,
    pub v_max: Option<f64>,
    pub a_max: Option<f64>,
    pub s_max: Option<f64>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BrakingOverride {
    pub c_v: Option<f64>,
    pub c_omega: Option<f64>,
    pub c_u: Option<f64>,
    pub t_brk_s: Option<f64>,
    pub t_brk_theta: Option<f64>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WashoutOverride {
    pub k1: Option<f64>,
    pub k2: Option<f64>,
    pub k3: Option<f64>,
    pub delta: Option<f64>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SurrogateOverride {
    pub omega_n: Option<f64>,
    pub zeta: Option<f64>,
    /// Saturation expressed as a multiple of the tilt-rate threshold.
    pub rate_limit_factor: Option<f64>,
}

fn set<T: Copy>(target: &mut T, src: &Option<T>) {
    if let Some(v) = src {
        *target = *v;
    }
}

impl FileConfig {
    /// Apply every present field onto a configuration.
    pub fn apply(&self, cfg: &mut McaConfig) {
        set(&mut cfg.dt, &self.dt);
        set(&mut cfg.horizon, &self.horizon);
        set(&mut cfg.cutoff_hz, &self.cutoff_hz);
        set(&mut cfg.max_solver_iterations, &self.max_solver_iterations);

        set(&mut cfg.weights.w_fspec, &self.weights.w_fspec);
        set(&mut cfg.weights.w_g, &self.weights.w_g);
        set(&mut cfg.weights.w_ahex, &self.weights.w_ahex);
        set(&mut cfg.weights.w_j, &self.weights.w_j);
        set(&mut cfg.weights.w_angj, &self.weights.w_angj);
        set(&mut cfg.weights.w_delta, &self.weights.w_delta);

        set(
            &mut cfg.limits.omega_max,
            &self.limits.omega_max_deg.map(f64::to_radians),
        );
        set(
            &mut cfg.limits.theta_max,
            &self.limits.theta_max_deg.map(f64::to_radians),
        );
        set(&mut cfg.limits.v_max, &self.limits.v_max);
        set(&mut cfg.limits.a_max, &self.limits.a_max);
        set(&mut cfg.limits.s_max, &self.limits.s_max);

        set(&mut cfg.braking.c_v, &self.braking.c_v);
        set(&mut cfg.braking.c_omega, &self.braking.c_omega);
        set(&mut cfg.braking.c_u, &self.braking.c_u);
        set(&mut cfg.braking.t_brk_s, &self.braking.t_brk_s);
        set(&mut cfg.braking.t_brk_theta, &self.braking.t_brk_theta);

        set(&mut cfg.washout.k1, &self.washout.k1);
        set(&mut cfg.washout.k2, &self.washout.k2);
        set(&mut cfg.washout.k3, &self.washout.k3);
        set(&mut cfg.washout.delta, &self.washout.delta);
    }

    /// Surrogate plant for a configuration, with file overrides applied.
    pub fn surrogate_plant(&self, cfg: &McaConfig) -> PlantKind {
        let mut omega_n = 20.0;
        let mut zeta = 0.9;
        let mut factor = 1.05;
        set(&mut omega_n, &self.surrogate.omega_n);
        set(&mut zeta, &self.surrogate.zeta);
        set(&mut factor, &self.surrogate.rate_limit_factor);
        PlantKind::Surrogate {
            omega_n,
            zeta,
            rate_limit_omega: factor * cfg.limits.omega_max,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn overrides_apply_over_defaults() {
        let file = FileConfig {
            horizon: Some(25),
            weights: WeightsOverride {
                w_fspec: Some(7.5),
                ..Default::default()
            },
            limits: LimitsOverride {
                omega_max_deg: Some(4.0),
                ..Default::default()
            },
            ..Default::default()
        };
        let mut cfg = McaConfig::default();
        file.apply(&mut cfg);
        assert_eq!(cfg.horizon, 25);
        assert_relative_eq!(cfg.weights.w_fspec, 7.5);
        assert_relative_eq!(cfg.weights.w_g, 1.0);
        assert_relative_eq!(cfg.limits.omega_max, 4f64.to_radians());
        assert_relative_eq!(cfg.dt, 0.01);
    }

    #[test]
    fn surrogate_tracks_the_configured_threshold() {
        let file = FileConfig::default();
        let cfg = McaConfig::default();
        match file.surrogate_plant(&cfg) {
            PlantKind::Surrogate {
                rate_limit_omega, ..
            } => assert_relative_eq!(rate_limit_omega, 1.05 * cfg.limits.omega_max),
            _ => panic!("expected surrogate"),
        }
    }
}

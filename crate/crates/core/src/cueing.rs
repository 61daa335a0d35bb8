//! Per-tick orchestration of the two motion cueing algorithms.
//!
//! A [`MotionCueing`] instance owns the receding-horizon solver (and with it
//! the warm start), so it maps one measured platform state plus a reference
//! lookahead to the jerk command applied this tick. Vehicle pitch/roll
//! references are not consumed; the reference structure carries only the
//! specific-force channels.

use crate::error::McaError;
use crate::freq_split::{ReferenceSet, SplitConfig};
use crate::model::{ControlInput, PlatformState};
use crate::mpc::{
    adaptive_washout_weights, build_problem, BrakingParams, Limits, MpcSolution, MpcSolver,
    Weights, WashoutParams,
};

pub use crate::mpc::McaMode;

/// Full controller configuration; the defaults are the tuned simulation
/// parameters (weights, limits, braking, washout shape, 0.5 Hz cut-off,
/// 40-step horizon at 10 ms).
#[derive(Clone, Copy, Debug)]
pub struct McaConfig {
    pub mode: McaMode,
    /// Prediction horizon in steps.
    pub horizon: usize,
    /// Controller and model step size (s).
    pub dt: f64,
    /// Frequency-split cut-off (Hz).
    pub cutoff_hz: f64,
    pub weights: Weights,
    pub limits: Limits,
    pub braking: BrakingParams,
    pub washout: WashoutParams,
    /// SQP iteration cap per tick.
    pub max_solver_iterations: usize,
}

impl Default for McaConfig {
    fn default() -> Self {
        Self {
            mode: McaMode::FrequencySplitting,
            horizon: 40,
            dt: 0.01,
            cutoff_hz: 0.5,
            weights: Weights::default(),
            limits: Limits::default(),
            braking: BrakingParams::default(),
            washout: WashoutParams::default(),
            max_solver_iterations: 200,
        }
    }
}

impl McaConfig {
    pub fn validate(&self) -> Result<(), McaError> {
        if self.horizon == 0 {
            return Err(McaError::Config("horizon must be at least 1".into()));
        }
        if !(self.dt > 0.0) {
            return Err(McaError::Config(format!("non-positive dt {}", self.dt)));
        }
        if !(self.cutoff_hz > 0.0) {
            return Err(McaError::Config(format!(
                "non-positive cut-off {}",
                self.cutoff_hz
            )));
        }
        if self.max_solver_iterations == 0 {
            return Err(McaError::Config("iteration cap must be at least 1".into()));
        }
        self.weights.validate()?;
        self.limits.validate()?;
        self.braking.validate()
    }

    /// Split configuration for a run at scaling factor `scale`.
    pub fn split_config(&self, scale: f64) -> SplitConfig {
        SplitConfig {
            cutoff_hz: self.cutoff_hz,
            scale,
            dt: self.dt,
        }
    }
}

/// One motion cueing controller instance.
#[derive(Debug)]
pub struct MotionCueing {
    cfg: McaConfig,
    solver: MpcSolver,
}

impl MotionCueing {
    pub fn new(cfg: McaConfig) -> Result<Self, McaError> {
        cfg.validate()?;
        Ok(Self {
            solver: MpcSolver::new(cfg.max_solver_iterations),
            cfg,
        })
    }

    pub fn config(&self) -> &McaConfig {
        &self.cfg
    }

    /// Drop the warm start (e.g. when restarting a scenario).
    pub fn reset(&mut self) {
        self.solver.reset_warm_start();
    }

    /// Compute this tick's command from the measured state and the reference
    /// lookahead (`horizon` entries). Solver failures propagate; the caller
    /// decides whether to reuse a previous command.
    pub fn tick(
        &mut self,
        x: &PlatformState,
        lookahead: &[ReferenceSet],
    ) -> Result<(ControlInput, MpcSolution), McaError> {
        let washout = adaptive_washout_weights(x, &self.cfg.washout, &self.cfg.limits);
        let problem = build_problem(
            self.cfg.mode,
            x,
            lookahead,
            &self.cfg.weights,
            &washout,
            &self.cfg.limits,
            &self.cfg.braking,
            self.cfg.horizon,
            self.cfg.dt,
        )?;
        let solution = self.solver.solve(&problem)?;
        Ok((solution.inputs[0], solution))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::freq_split;

    fn zero_lookahead(n: usize) -> Vec<ReferenceSet> {
        vec![ReferenceSet::default(); n]
    }

    #[test]
    fn zero_references_give_zero_command() {
        let cfg = McaConfig::default();
        let mut mca = MotionCueing::new(cfg).unwrap();
        let (cmd, sol) = mca
            .tick(&PlatformState::default(), &zero_lookahead(cfg.horizon))
            .unwrap();
        assert_eq!(cmd, ControlInput::default());
        assert_eq!(sol.total_slack, 0.0);
    }

    #[test]
    fn modes_agree_at_the_origin() {
        for mode in [McaMode::FrequencySplitting, McaMode::Benchmark] {
            let cfg = McaConfig {
                mode,
                ..Default::default()
            };
            let mut mca = MotionCueing::new(cfg).unwrap();
            let (cmd, _) = mca
                .tick(&PlatformState::default(), &zero_lookahead(cfg.horizon))
                .unwrap();
            assert_eq!(cmd, ControlInput::default());
        }
    }

    #[test]
    fn wrong_lookahead_length_is_rejected() {
        let cfg = McaConfig::default();
        let mut mca = MotionCueing::new(cfg).unwrap();
        let err = mca.tick(&PlatformState::default(), &zero_lookahead(10));
        assert!(err.is_err());
    }

    #[test]
    fn identical_runs_are_deterministic() {
        // Two fresh controllers fed the same inputs produce bit-identical
        // command sequences.
        let cfg = McaConfig::default();
        let series: Vec<f64> = (0..200)
            .map(|i| 0.4 * (0.05 * i as f64).sin())
            .collect();
        let refs =
            freq_split::build_references(&series, &series, &cfg.split_config(0.5)).unwrap();

        let run = || {
            let mut mca = MotionCueing::new(cfg).unwrap();
            let mut x = PlatformState::default();
            let mut cmds = Vec::new();
            for i in 0..100 {
                let la = freq_split::lookahead(&refs, i, cfg.horizon);
                let (cmd, _) = mca.tick(&x, &la).unwrap();
                x = crate::model::step_dynamics(&x, &cmd, cfg.dt).unwrap();
                cmds.push(cmd);
            }
            cmds
        };
        assert_eq!(run(), run());
    }
}

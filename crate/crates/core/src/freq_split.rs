//! Reference scaling and complementary low-/high-frequency splitting.
//!
//! Vehicle accelerations are scaled down and separated into a low-frequency
//! part, which feeds tilt coordination, and a high-frequency part, which
//! feeds the translational motion. The low-pass is a first-order filter
//! discretized with the bilinear transform; the high-frequency part is the
//! residual `scaled - lf`, so the split is complementary by construction.

use crate::error::McaError;

/// Parameters of the reference pipeline.
#[derive(Clone, Copy, Debug)]
pub struct SplitConfig {
    /// Low-pass cut-off frequency (Hz).
    pub cutoff_hz: f64,
    /// Scaling factor applied to the raw vehicle acceleration.
    pub scale: f64,
    /// Sample period of the reference series (s).
    pub dt: f64,
}

impl SplitConfig {
    pub fn validate(&self) -> Result<(), McaError> {
        if !(self.cutoff_hz > 0.0) {
            return Err(McaError::Config(format!(
                "cut-off frequency must be positive, got {}",
                self.cutoff_hz
            )));
        }
        if !(self.scale > 0.0) {
            return Err(McaError::Config(format!(
                "scaling factor must be positive, got {}",
                self.scale
            )));
        }
        if !(self.dt > 0.0) {
            return Err(McaError::Config(format!(
                "sample period must be positive, got {}",
                self.dt
            )));
        }
        Ok(())
    }
}

/// Per-tick reference bundle consumed by the MPC.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ReferenceSet {
    /// Time of this sample (s).
    pub t: f64,
    /// Scaled total specific-force reference (m/s²).
    pub f_ref_long: f64,
    pub f_ref_lat: f64,
    /// Low-frequency (tilt-coordination) component (m/s²).
    pub lf_long: f64,
    pub lf_lat: f64,
    /// High-frequency (translational) component (m/s²).
    pub hf_long: f64,
    pub hf_lat: f64,
}

/// First-order bilinear-transform low-pass with unit DC gain.
///
/// Streaming form; one instance per signal. The batch [`split`] below is the
/// stateless entry point for full series.
#[derive(Clone, Debug)]
pub struct LowPass {
    /// 2 / (omega_c * dt); the filter is y[k] = (x[k] + x[k-1] + (c-1) y[k-1]) / (c+1).
    c: f64,
    x_prev: f64,
    y_prev: f64,
}

impl LowPass {
    pub fn new(cutoff_hz: f64, dt: f64) -> Self {
        let omega_c = 2.0 * std::f64::consts::PI * cutoff_hz;
        Self {
            c: 2.0 / (omega_c * dt),
            x_prev: 0.0,
            y_prev: 0.0,
        }
    }

    pub fn step(&mut self, x: f64) -> f64 {
        let y = (x + self.x_prev + (self.c - 1.0) * self.y_prev) / (self.c + 1.0);
        self.x_prev = x;
        self.y_prev = y;
        y
    }
}

/// Multiply every sample by the scaling factor `k`.
pub fn scale_reference(raw: &[f64], k: f64) -> Vec<f64> {
    raw.iter().map(|x| x * k).collect()
}

/// Split an already-scaled series into (low-frequency, high-frequency) parts.
///
/// `lf[k] + hf[k] == scaled[k]` holds exactly because `hf` is computed as the
/// residual. Filter state starts at zero.
pub fn split(scaled: &[f64], cfg: &SplitConfig) -> (Vec<f64>, Vec<f64>) {
    let mut lp = LowPass::new(cfg.cutoff_hz, cfg.dt);
    let mut lf = Vec::with_capacity(scaled.len());
    let mut hf = Vec::with_capacity(scaled.len());
    for &x in scaled {
        let low = lp.step(x);
        lf.push(low);
        hf.push(x - low);
    }
    (lf, hf)
}

/// Scale and split both axes of a reference signal into per-tick bundles.
pub fn build_references(
    ax: &[f64],
    ay: &[f64],
    cfg: &SplitConfig,
) -> Result<Vec<ReferenceSet>, McaError> {
    cfg.validate()?;
    if ax.len() != ay.len() {
        return Err(McaError::Config(format!(
            "axis series lengths differ: {} vs {}",
            ax.len(),
            ay.len()
        )));
    }
    let sx = scale_reference(ax, cfg.scale);
    let sy = scale_reference(ay, cfg.scale);
    let (lfx, hfx) = split(&sx, cfg);
    let (lfy, hfy) = split(&sy, cfg);
    Ok((0..sx.len())
        .map(|i| ReferenceSet {
            t: i as f64 * cfg.dt,
            f_ref_long: sx[i],
            f_ref_lat: sy[i],
            lf_long: lfx[i],
            lf_lat: lfy[i],
            hf_long: hfx[i],
            hf_lat: hfy[i],
        })
        .collect())
}

/// Reference lookahead for the MPC at `tick`: samples `tick+1 ..= tick+horizon`,
/// holding the final sample once the series ends.
pub fn lookahead(refs: &[ReferenceSet], tick: usize, horizon: usize) -> Vec<ReferenceSet> {
    assert!(!refs.is_empty(), "empty reference series");
    (1..=horizon)
        .map(|k| refs[(tick + k).min(refs.len() - 1)])
        .collect()
}

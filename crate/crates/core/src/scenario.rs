//! Reference scenarios: step, multi-sine, synthetic slalom, and CSV ingest.
//!
//! All scenarios are uniformly sampled unscaled vehicle accelerations for
//! the longitudinal and lateral axes. The recorded-drive loader accepts
//! `t,ax,ay` CSV (SI units, decimal point) and resamples it onto a uniform
//! grid; when no recording is available, `make_synthetic_slalom` stands in
//! with the same envelope as the recorded maneuver (4 m/s² at 0.2 Hz).

use std::fs;
use std::path::Path;

use crate::error::McaError;

/// Maximum duration ingested from a recorded drive (s).
pub const DRIVE_TRUNCATE_S: f64 = 50.0;

#[derive(Clone, Debug)]
pub struct Scenario {
    pub name: String,
    /// Sample period (s).
    pub dt: f64,
    /// Longitudinal acceleration series (m/s²).
    pub ax: Vec<f64>,
    /// Lateral acceleration series (m/s²).
    pub ay: Vec<f64>,
}

impl Scenario {
    pub fn len(&self) -> usize {
        self.ax.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ax.is_empty()
    }

    pub fn duration(&self) -> f64 {
        self.len().saturating_sub(1) as f64 * self.dt
    }
}

fn sample_both(
    name: &str,
    dt: f64,
    duration: f64,
    fx: impl Fn(f64) -> f64,
    fy: impl Fn(f64) -> f64,
) -> Scenario {
    let n = (duration / dt).round() as usize + 1;
    let t = |i: usize| i as f64 * dt;
    Scenario {
        name: name.to_string(),
        dt,
        ax: (0..n).map(|i| fx(t(i))).collect(),
        ay: (0..n).map(|i| fy(t(i))).collect(),
    }
}

/// Step scenario: 2 s rest, +0.8 m/s² for 8 s, 10 s rest, on both axes.
pub fn make_step(dt: f64) -> Scenario {
    let step = |t: f64| {
        if (2.0..10.0).contains(&t) {
            0.8
        } else {
            0.0
        }
    };
    sample_both("step", dt, 20.0, step, step)
}

/// Multi-sine scenario: four sines at 0.1/0.15/0.2/0.5 Hz with amplitudes
/// 1/0.8/0.1/0.6 m/s², 50 s, on both axes.
pub fn make_multisine(dt: f64) -> Scenario {
    let f = |t: f64| {
        let w = 2.0 * std::f64::consts::PI;
        (w * 0.1 * t).sin()
            + 0.8 * (w * 0.15 * t).sin()
            + 0.1 * (w * 0.2 * t).sin()
            + 0.6 * (w * 0.5 * t).sin()
    };
    sample_both("multisine", dt, 50.0, f, f)
}

/// Synthetic stand-in for the recorded slalom: a 4 m/s² lateral sine at
/// 0.2 Hz with a 5 s ramp-in, plus a low-amplitude longitudinal
/// speed-hold component, 50 s.
pub fn make_synthetic_slalom(dt: f64) -> Scenario {
    let w = 2.0 * std::f64::consts::PI;
    sample_both(
        "slalom",
        dt,
        50.0,
        move |t| 0.5 * (w * 0.05 * t).sin(),
        move |t| 4.0 * (t / 5.0).min(1.0) * (w * 0.2 * t).sin(),
    )
}

/// Load a recorded drive from `t,ax,ay` CSV, resample it to `dt` by linear
/// interpolation, and truncate it to [`DRIVE_TRUNCATE_S`].
pub fn load_drive_csv(path: &Path, dt: f64) -> Result<Scenario, McaError> {
    if !(dt > 0.0) {
        return Err(McaError::Scenario(format!("non-positive sample period {dt}")));
    }
    let text = fs::read_to_string(path)
        .map_err(|e| McaError::Scenario(format!("cannot read {}: {e}", path.display())))?;
    let mut lines = text.lines().enumerate();

    let (_, header) = lines
        .next()
        .ok_or_else(|| McaError::Scenario("empty file".into()))?;
    let cols: Vec<&str> = header.split(',').map(str::trim).collect();
    if cols != ["t", "ax", "ay"] {
        return Err(McaError::Scenario(format!(
            "expected header 't,ax,ay', got '{header}'"
        )));
    }

    let mut t = Vec::new();
    let mut ax = Vec::new();
    let mut ay = Vec::new();
    for (lineno, line) in lines {
        let row = lineno + 1; // 1-based line number in the file
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 3 {
            return Err(McaError::Scenario(format!(
                "row {row}: expected 3 fields, got {}",
                fields.len()
            )));
        }
        let parse = |s: &str, what: &str| {
            s.parse::<f64>().map_err(|_| {
                McaError::Scenario(format!("row {row}: cannot parse {what} value '{s}'"))
            })
        };
        let ti = parse(fields[0], "t")?;
        let xi = parse(fields[1], "ax")?;
        let yi = parse(fields[2], "ay")?;
        if !(ti.is_finite() && xi.is_finite() && yi.is_finite()) {
            return Err(McaError::Scenario(format!("row {row}: non-finite value")));
        }
        if let Some(&prev) = t.last() {
            if ti <= prev {
                return Err(McaError::Scenario(format!(
                    "row {row}: time {ti} does not increase past {prev}"
                )));
            }
        }
        t.push(ti);
        ax.push(xi);
        ay.push(yi);
    }
    if t.len() < 2 {
        return Err(McaError::Scenario(format!(
            "need at least 2 data rows, got {}",
            t.len()
        )));
    }

    let span = (t[t.len() - 1] - t[0]).min(DRIVE_TRUNCATE_S);
    let n = (span / dt + 1e-9).floor() as usize + 1;
    let mut rx = Vec::with_capacity(n);
    let mut ry = Vec::with_capacity(n);
    let mut seg = 0usize;
    for i in 0..n {
        let ti = t[0] + i as f64 * dt;
        while seg + 2 < t.len() && t[seg + 1] < ti {
            seg += 1;
        }
        let (t0, t1) = (t[seg], t[seg + 1]);
        let w = ((ti - t0) / (t1 - t0)).clamp(0.0, 1.0);
        rx.push(ax[seg] + w * (ax[seg + 1] - ax[seg]));
        ry.push(ay[seg] + w * (ay[seg + 1] - ay[seg]));
    }

    Ok(Scenario {
        name: format!("csv:{}", path.display()),
        dt,
        ax: rx,
        ay: ry,
    })
}

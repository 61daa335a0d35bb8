//! Scaling-factor recommendation from tilt-angle and tilt-rate capability.
//!
//! Tilt coordination recreates the sustained part of the specific force, so
//! the scaled reference has to fit what tilting can produce: at most
//! `g*sin(30°)` in magnitude, and at most `omega_perc * g * cos(30°)` in rate
//! of change, with the perception threshold `omega_perc = 3 deg/s`. Both
//! bounds turn into scaling factors; the advisor takes their minimum,
//! clamped to `[K_MIN, K_MAX]`. Runs may still use any user-supplied factor,
//! since the workspace management constraints keep the platform safe either
//! way.

use crate::error::McaError;
use crate::model::GRAVITY;

/// Floor applied to the recommended factor; a step-like reference has an
/// unbounded finite-difference derivative at the sampling rate, which would
/// otherwise drive the recommendation to zero.
pub const K_MIN: f64 = 0.1;
/// Cap applied to the recommended factor.
pub const K_MAX: f64 = 1.0;

/// Tilt-rate perception threshold (rad/s): 3 deg/s.
pub const OMEGA_PERC: f64 = std::f64::consts::PI / 60.0;

#[derive(Clone, Copy, Debug)]
pub struct ScaleRecommendation {
    /// Bound from the 30° tilt-angle capability; infinite for a zero signal.
    pub k_theta: f64,
    /// Bound from the 3 deg/s tilt-rate capability; infinite for a constant signal.
    pub k_omega: f64,
    /// `min(k_theta, k_omega)` clamped to `[K_MIN, K_MAX]`.
    pub k_final: f64,
    /// Peak absolute reference (m/s²).
    pub max_f: f64,
    /// Peak absolute reference rate (m/s³), by finite differences.
    pub max_fdot: f64,
}

fn check_series(series: &[f64], dt: f64) -> Result<(), McaError> {
    if series.len() < 2 {
        return Err(McaError::Eval(format!(
            "need at least 2 samples, got {}",
            series.len()
        )));
    }
    if !(dt > 0.0) {
        return Err(McaError::Eval(format!("non-positive sample period {dt}")));
    }
    Ok(())
}

/// Peak absolute value of a series.
pub fn max_abs(series: &[f64], dt: f64) -> Result<f64, McaError> {
    check_series(series, dt)?;
    Ok(series.iter().fold(0.0, |m, x| m.max(x.abs())))
}

/// Peak absolute derivative: central differences inside, one-sided at the ends.
pub fn max_abs_derivative(series: &[f64], dt: f64) -> Result<f64, McaError> {
    check_series(series, dt)?;
    let n = series.len();
    let mut m = ((series[1] - series[0]) / dt).abs();
    m = m.max(((series[n - 1] - series[n - 2]) / dt).abs());
    for k in 1..n - 1 {
        m = m.max(((series[k + 1] - series[k - 1]) / (2.0 * dt)).abs());
    }
    Ok(m)
}

/// Recommend a scaling factor for one reference series.
pub fn recommend_scale(series: &[f64], dt: f64) -> Result<ScaleRecommendation, McaError> {
    let max_f = max_abs(series, dt)?;
    let max_fdot = max_abs_derivative(series, dt)?;
    Ok(recommendation_from_peaks(max_f, max_fdot))
}

/// Recommend a scaling factor covering both axes of a scenario (the peaks are
/// taken over both series, since the platform capability is shared).
pub fn recommend_scale_scenario(
    ax: &[f64],
    ay: &[f64],
    dt: f64,
) -> Result<ScaleRecommendation, McaError> {
    let max_f = max_abs(ax, dt)?.max(max_abs(ay, dt)?);
    let max_fdot = max_abs_derivative(ax, dt)?.max(max_abs_derivative(ay, dt)?);
    Ok(recommendation_from_peaks(max_f, max_fdot))
}

fn recommendation_from_peaks(max_f: f64, max_fdot: f64) -> ScaleRecommendation {
    let k_theta = if max_f > 0.0 {
        GRAVITY * (std::f64::consts::FRAC_PI_6).sin() / max_f
    } else {
        f64::INFINITY
    };
    let k_omega = if max_fdot > 0.0 {
        OMEGA_PERC * (GRAVITY / max_fdot) * (std::f64::consts::FRAC_PI_6).cos()
    } else {
        f64::INFINITY
    };
    let k_final = k_theta.min(k_omega).clamp(K_MIN, K_MAX);
    ScaleRecommendation {
        k_theta,
        k_omega,
        k_final,
        max_f,
        max_fdot,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn sample(f: impl Fn(f64) -> f64, dt: f64, duration: f64) -> Vec<f64> {
        let n = (duration / dt).round() as usize + 1;
        (0..n).map(|i| f(i as f64 * dt)).collect()
    }

    #[test]
    fn peaks_of_a_dense_sine() {
        // 4 sin(2*pi*0.2 t): max 4, max derivative 4*2*pi*0.2 = 5.027.
        let dt = 1e-3;
        let s = sample(|t| 4.0 * (2.0 * std::f64::consts::PI * 0.2 * t).sin(), dt, 10.0);
        assert_relative_eq!(max_abs(&s, dt).unwrap(), 4.0, epsilon = 1e-3);
        assert_relative_eq!(max_abs_derivative(&s, dt).unwrap(), 5.027, epsilon = 0.01);
    }

    #[test]
    fn peaks_of_a_constant() {
        let s = vec![0.8; 100];
        assert_relative_eq!(max_abs(&s, 0.01).unwrap(), 0.8);
        assert_relative_eq!(max_abs_derivative(&s, 0.01).unwrap(), 0.0);
    }

    #[test]
    fn multisine_derivative_peaks_at_start() {
        // All cosine terms align at t = 0: 2*pi*(1*0.1 + 0.8*0.15 + 0.1*0.2
        // + 0.6*0.5) = 3.393.
        let dt = 1e-3;
        let s = sample(
            |t| {
                let w = 2.0 * std::f64::consts::PI;
                (w * 0.1 * t).sin() + 0.8 * (w * 0.15 * t).sin() + 0.1 * (w * 0.2 * t).sin()
                    + 0.6 * (w * 0.5 * t).sin()
            },
            dt,
            50.0,
        );
        assert_relative_eq!(max_abs_derivative(&s, dt).unwrap(), 3.393, epsilon = 0.01);
    }

    #[test]
    fn k_theta_is_one_at_capability() {
        // max_f equal to g*sin(30°) = 4.905 gives exactly 1.
        let r = recommendation_from_peaks(4.905, 1.0);
        assert_relative_eq!(r.k_theta, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn k_theta_for_the_step() {
        let r = recommendation_from_peaks(0.8, 1.0);
        assert_relative_eq!(r.k_theta, 6.13125, epsilon = 1e-10);
        // Cap keeps the final factor at 1.
        assert!(r.k_final <= K_MAX);
    }

    #[test]
    fn k_omega_for_the_slalom_sine() {
        // Dense-sampling oracle for the derivative of 4 sin(2*pi*0.2 t).
        let dt = 1e-3;
        let s = sample(|t| 4.0 * (2.0 * std::f64::consts::PI * 0.2 * t).sin(), dt, 10.0);
        let r = recommend_scale(&s, dt).unwrap();
        assert_relative_eq!(r.k_omega, 0.0885, epsilon = 1e-3);
        // k_omega < K_MIN here, so the floor engages.
        assert_relative_eq!(r.k_final, K_MIN);
    }

    #[test]
    fn degenerate_signals_report_unbounded_factors() {
        let r = recommend_scale(&[0.0, 0.0, 0.0], 0.01).unwrap();
        assert!(r.k_theta.is_infinite());
        assert!(r.k_omega.is_infinite());
        assert_relative_eq!(r.k_final, K_MAX);
    }

    #[test]
    fn doubling_amplitude_halves_both_factors() {
        let dt = 1e-3;
        let s = sample(|t| 1.3 * (2.0 * std::f64::consts::PI * 0.11 * t).sin(), dt, 20.0);
        let s2: Vec<f64> = s.iter().map(|x| 2.0 * x).collect();
        let r1 = recommend_scale(&s, dt).unwrap();
        let r2 = recommend_scale(&s2, dt).unwrap();
        assert_relative_eq!(r2.k_theta, r1.k_theta / 2.0, max_relative = 1e-12);
        assert_relative_eq!(r2.k_omega, r1.k_omega / 2.0, max_relative = 1e-12);
        // The product k_theta * max_f is scale invariant.
        assert_relative_eq!(
            r1.k_theta * r1.max_f,
            GRAVITY * 0.5,
            max_relative = 1e-12
        );
        assert_relative_eq!(
            r2.k_theta * r2.max_f,
            GRAVITY * 0.5,
            max_relative = 1e-12
        );
    }

    #[test]
    fn rejects_short_series() {
        assert!(max_abs(&[1.0], 0.01).is_err());
        assert!(recommend_scale(&[], 0.01).is_err());
        assert!(max_abs_derivative(&[1.0, 2.0], 0.0).is_err());
    }
}

//! Receding-horizon problem construction and the Gauss-Newton SQP solver.
//!
//! Each tick the controller minimizes, over jerk inputs for the next `N`
//! steps, the horizon-averaged sum of output tracking terms (total specific
//! force always; tilt component and translational acceleration additionally
//! in frequency-splitting mode), washout terms on displacement and tilt with
//! state-adaptive weights, input terms on both jerks, and a quadratic
//! penalty on tilt-rate threshold violations. Constraints: hard boxes on
//! tilt angle, velocity and acceleration at every predicted step, a braking
//! box on the projected stopping tilt, and a braking bound on the resultant
//! projected stopping displacement of both axes. Displacement is kept in
//! the workspace by the braking bound rather than a direct box, so the
//! platform decelerates before the boundary instead of hitting it.
//!
//! The states are condensed out exactly (the triple integrator has
//! polynomial jerk-response kernels, so every Hessian block assembles in
//! O(N^2) via suffix sums). The tilt output `g*sin(theta)` and the squared
//! resultant braking constraint are linearized at the current iterate and
//! the resulting QP is solved by the dual active-set method in [`crate::qp`];
//! iteration continues until the step norm drops below 1e-8. The tilt-rate
//! soft constraint is handled by minimizing its slack out analytically:
//! for fixed inputs the optimal slack is `max(0, |omega| - omega_th)`, so the
//! penalty `w_delta * max(0, |omega| - omega_th)^2` yields exactly the same
//! input sequence as carrying per-step slack variables, at a third of the
//! problem size. Slack values are recovered for reporting.

use nalgebra::{DMatrix, DVector};

use crate::error::McaError;
use crate::freq_split::ReferenceSet;
use crate::model::{
    output_map, step_axis, AxisState, ControlInput, PlatformState, SpecificForce, GRAVITY,
};
use crate::qp::{DualActiveSet, LinearConstraint, QpError};

/// SQP termination: infinity norm of the input-sequence step.
const STEP_TOL: f64 = 1e-8;
/// Resultant braking rows are skipped below this projected displacement (m),
/// where the linearization degenerates and the constraint is inactive anyway.
const BRAKING_SKIP_NORM: f64 = 1e-3;

/// Cost weights (washout weights are adaptive, see [`WashoutParams`]).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Weights {
    /// Total specific-force tracking weight.
    pub w_fspec: f64,
    /// Tilt-component tracking weight (frequency-splitting mode only).
    pub w_g: f64,
    /// Translational-acceleration tracking weight (frequency-splitting mode only).
    pub w_ahex: f64,
    /// Translational jerk weight.
    pub w_j: f64,
    /// Angular jerk weight.
    pub w_angj: f64,
    /// Tilt-rate slack penalty.
    pub w_delta: f64,
}

impl Default for Weights {
    fn default() -> Self {
        Self {
            w_fspec: 5.0,
            w_g: 1.0,
            w_ahex: 1.0,
            w_j: 1e-2,
            w_angj: 1e-3,
            w_delta: 1e5,
        }
    }
}

impl Weights {
    pub fn validate(&self) -> Result<(), McaError> {
        let all = [
            self.w_fspec,
            self.w_g,
            self.w_ahex,
            self.w_j,
            self.w_angj,
            self.w_delta,
        ];
        if all.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(McaError::Config("weights must be finite and >= 0".into()));
        }
        if !(self.w_delta > 0.0) {
            return Err(McaError::Config("w_delta must be positive".into()));
        }
        if !(self.w_j > 0.0 && self.w_angj > 0.0) {
            return Err(McaError::Config(
                "input weights must be positive (they keep the problem strictly convex)".into(),
            ));
        }
        Ok(())
    }
}

/// Platform motion limits (SI units, angles in radians).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Limits {
    /// Tilt-rate perception threshold (rad/s).
    pub omega_max: f64,
    /// Tilt angle limit (rad).
    pub theta_max: f64,
    /// Velocity limit (m/s).
    pub v_max: f64,
    /// Acceleration limit (m/s²).
    pub a_max: f64,
    /// Displacement limit (m).
    pub s_max: f64,
}

impl Default for Limits {
    fn default() -> Self {
        Self {
            omega_max: 3f64.to_radians(),
            theta_max: 30f64.to_radians(),
            v_max: 7.2,
            a_max: 9.81,
            s_max: 0.5,
        }
    }
}

impl Limits {
    pub fn validate(&self) -> Result<(), McaError> {
        let all = [
            self.omega_max,
            self.theta_max,
            self.v_max,
            self.a_max,
            self.s_max,
        ];
        if all.iter().any(|l| !(*l > 0.0)) {
            return Err(McaError::Config("limits must be strictly positive".into()));
        }
        Ok(())
    }
}

/// Braking-constraint coefficients and projection horizons.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BrakingParams {
    pub c_v: f64,
    pub c_omega: f64,
    pub c_u: f64,
    /// Displacement projection horizon (s).
    pub t_brk_s: f64,
    /// Tilt projection horizon (s).
    pub t_brk_theta: f64,
}

impl Default for BrakingParams {
    fn default() -> Self {
        Self {
            c_v: 1.0,
            c_omega: 1.0,
            c_u: 0.45,
            t_brk_s: 2.5,
            t_brk_theta: 0.5,
        }
    }
}

impl BrakingParams {
    pub fn validate(&self) -> Result<(), McaError> {
        if !(self.t_brk_s > 0.0 && self.t_brk_theta > 0.0) {
            return Err(McaError::Config("braking horizons must be positive".into()));
        }
        for c in [self.c_v, self.c_omega, self.c_u] {
            if !(c > 0.0 && c <= 1.0) {
                return Err(McaError::Config(
                    "braking coefficients must lie in (0, 1]".into(),
                ));
            }
        }
        Ok(())
    }
}

/// Projected stopping displacement under the braking model.
pub fn braking_displacement(s: f64, v: f64, a: f64, p: &BrakingParams) -> f64 {
    s + p.c_v * v * p.t_brk_s + 0.5 * p.c_u * a * p.t_brk_s * p.t_brk_s
}

/// Projected stopping tilt under the braking model.
pub fn braking_tilt(theta: f64, omega: f64, alpha: f64, p: &BrakingParams) -> f64 {
    theta + p.c_omega * omega * p.t_brk_theta + 0.5 * p.c_u * alpha * p.t_brk_theta * p.t_brk_theta
}

/// Shape constants of the adaptive washout weights.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WashoutParams {
    pub k1: f64,
    pub k2: f64,
    pub k3: f64,
    /// Singularity guard added to the denominator.
    pub delta: f64,
}

impl Default for WashoutParams {
    fn default() -> Self {
        Self {
            k1: 1.0,
            k2: 50.0,
            k3: 0.1,
            delta: 0.01,
        }
    }
}

/// Per-axis washout weights for one tick, `[long, lat]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WashoutWeights {
    pub w_s: [f64; 2],
    pub w_theta: [f64; 2],
}

/// State-adaptive washout weights: small near the neutral pose, large toward
/// the workspace boundary. Evaluated at the measured state and held constant
/// across the horizon (re-evaluating inside the horizon would make the
/// subproblem non-quadratic).
pub fn adaptive_washout_weights(
    x: &PlatformState,
    p: &WashoutParams,
    lim: &Limits,
) -> WashoutWeights {
    let w_s = |s: f64| {
        let d = s.abs() - lim.s_max;
        p.k1 / (p.k2 * d * d + p.delta)
    };
    let w_theta = |th: f64| {
        let d = th.abs() - lim.theta_max;
        p.k3 / (p.k2 * d * d + p.delta)
    };
    WashoutWeights {
        w_s: [w_s(x.long.s), w_s(x.lat.s)],
        w_theta: [w_theta(x.long.theta), w_theta(x.lat.theta)],
    }
}

/// Which outputs the controller tracks.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum McaMode {
    /// Track total specific force plus the pre-split tilt and translation
    /// references.
    FrequencySplitting,
    /// Track total specific force only.
    Benchmark,
}

impl std::fmt::Display for McaMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            McaMode::FrequencySplitting => write!(f, "fs"),
            McaMode::Benchmark => write!(f, "benchmark"),
        }
    }
}

impl std::str::FromStr for McaMode {
    type Err = McaError;

    fn from_str(s: &str) -> Result<Self, McaError> {
        match s {
            "fs" | "frequency-splitting" => Ok(McaMode::FrequencySplitting),
            "benchmark" | "bench" => Ok(McaMode::Benchmark),
            other => Err(McaError::Config(format!(
                "unknown algorithm '{other}' (expected 'fs' or 'benchmark')"
            ))),
        }
    }
}

/// One tick's optimization problem.
#[derive(Clone, Debug)]
pub struct MpcProblem {
    pub mode: McaMode,
    pub horizon: usize,
    pub dt: f64,
    pub x0: PlatformState,
    /// Reference lookahead for steps 1..=horizon.
    pub refs: Vec<ReferenceSet>,
    pub weights: Weights,
    pub washout: WashoutWeights,
    pub limits: Limits,
    pub braking: BrakingParams,
}

/// Validate and pack a per-tick problem.
#[allow(clippy::too_many_arguments)]
pub fn build_problem(
    mode: McaMode,
    x0: &PlatformState,
    refs: &[ReferenceSet],
    weights: &Weights,
    washout: &WashoutWeights,
    limits: &Limits,
    braking: &BrakingParams,
    horizon: usize,
    dt: f64,
) -> Result<MpcProblem, McaError> {
    if horizon == 0 {
        return Err(McaError::Problem("horizon must be at least 1".into()));
    }
    if refs.len() != horizon {
        return Err(McaError::Problem(format!(
            "reference lookahead has {} entries, horizon is {horizon}",
            refs.len()
        )));
    }
    if !(dt > 0.0) {
        return Err(McaError::Problem(format!("non-positive step size {dt}")));
    }
    if !x0.is_finite() {
        return Err(McaError::Model("non-finite initial state".into()));
    }
    for r in refs {
        let vals = [r.f_ref_long, r.f_ref_lat, r.lf_long, r.lf_lat, r.hf_long, r.hf_lat];
        if vals.iter().any(|v| !v.is_finite()) {
            return Err(McaError::Model("non-finite reference".into()));
        }
    }
    weights.validate()?;
    limits.validate()?;
    braking.validate()?;
    Ok(MpcProblem {
        mode,
        horizon,
        dt,
        x0: *x0,
        refs: refs.to_vec(),
        weights: *weights,
        washout: *washout,
        limits: *limits,
        braking: *braking,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolveStatus {
    Optimal,
    /// Hit the SQP iteration cap; the best (feasible) iterate is returned.
    MaxIterations,
    /// The QP was infeasible and the braking constraints were relaxed by an
    /// emergency slack, penalized with `w_delta`.
    InfeasibleRelaxed,
}

#[derive(Clone, Debug)]
pub struct MpcSolution {
    /// Optimal jerk sequence, one input per step.
    pub inputs: Vec<ControlInput>,
    /// Predicted states; `states[0]` is the initial state.
    pub states: Vec<PlatformState>,
    /// Predicted outputs at steps 1..=horizon.
    pub outputs: Vec<SpecificForce>,
    /// Recovered tilt-rate slack per step, `[long, lat]`.
    pub slack: Vec<[f64; 2]>,
    pub total_slack: f64,
    /// Emergency braking-relaxation slack (zero unless status is
    /// `InfeasibleRelaxed`).
    pub emergency_slack: f64,
    /// SQP iterations used.
    pub iterations: usize,
    /// Total active-set changes across all QP subproblems.
    pub qp_iterations: usize,
    /// Objective value at the returned iterate.
    pub objective: f64,
    /// Merit (objective plus penalized constraint violation) after each
    /// accepted SQP iterate, starting at the warm start.
    pub objective_history: Vec<f64>,
    pub status: SolveStatus,
}

/// Jerk-response kernels of the exact zero-order-hold triple integrator.
///
/// The state at step k responds to the input at step i (i < k) through a
/// degree-2 polynomial in m = k-1-i:
///   acceleration: dt
///   velocity:     dt^2 (m + 1/2)
///   displacement: dt^3 (m^2/2 + m/2 + 1/6)
/// Braking projections combine these three with the braking coefficients.
#[derive(Clone, Debug)]
struct Kernels {
    n: usize,
    dt: f64,
    braking: BrakingParams,
    pa: [f64; 3],
    pv: [f64; 3],
    ps: [f64; 3],
    ka: Vec<f64>,
    kv: Vec<f64>,
    ks: Vec<f64>,
    kbs: Vec<f64>,
    kbt: Vec<f64>,
}

fn poly_eval(p: &[f64; 3], m: f64) -> f64 {
    p[0] + m * (p[1] + m * p[2])
}

fn poly_axpy(out: &mut [f64; 3], a: f64, p: &[f64; 3]) {
    for r in 0..3 {
        out[r] += a * p[r];
    }
}

impl Kernels {
    fn new(n: usize, dt: f64, braking: &BrakingParams) -> Self {
        let dt2 = dt * dt;
        let dt3 = dt2 * dt;
        let pa = [dt, 0.0, 0.0];
        let pv = [dt2 / 2.0, dt2, 0.0];
        let ps = [dt3 / 6.0, dt3 / 2.0, dt3 / 2.0];
        let mut pbs = ps;
        poly_axpy(&mut pbs, braking.c_v * braking.t_brk_s, &pv);
        poly_axpy(&mut pbs, 0.5 * braking.c_u * braking.t_brk_s * braking.t_brk_s, &pa);
        let mut pbt = ps;
        poly_axpy(&mut pbt, braking.c_omega * braking.t_brk_theta, &pv);
        poly_axpy(
            &mut pbt,
            0.5 * braking.c_u * braking.t_brk_theta * braking.t_brk_theta,
            &pa,
        );
        let values = |p: &[f64; 3]| (0..n).map(|m| poly_eval(p, m as f64)).collect();
        Self {
            n,
            dt,
            braking: *braking,
            pa,
            pv,
            ps,
            ka: values(&pa),
            kv: values(&pv),
            ks: values(&ps),
            kbs: values(&pbs),
            kbt: values(&pbt),
        }
    }
}

/// Expansion of K(k-1-i) in powers of k for input index i: with c = i+1,
/// K(k-c) = alpha0 + alpha1 k + alpha2 k^2.
fn poly_alpha(p: &[f64; 3], i: usize) -> [f64; 3] {
    let c = (i + 1) as f64;
    [p[0] - p[1] * c + p[2] * c * c, p[1] - 2.0 * p[2] * c, p[2]]
}

/// Fill `out[i][l] = sum_{k > max(i,l)} w[k-1] * KA(k-1-i) * KB(k-1-l)`.
///
/// Both kernels are degree-2 polynomials, so the sum factors through suffix
/// power sums of the weights and the whole n x n Gram matrix costs O(n^2).
fn weighted_gram(pa: &[f64; 3], pb: &[f64; 3], w: &[f64], out: &mut DMatrix<f64>) {
    let n = w.len();
    debug_assert_eq!(out.nrows(), n);
    // suffix[m][p] = sum_{k=m..n} w[k-1] k^p
    let mut suffix = vec![[0.0; 5]; n + 2];
    for m in (1..=n).rev() {
        let kf = m as f64;
        let mut pow = [1.0; 5];
        for p in 1..5 {
            pow[p] = pow[p - 1] * kf;
        }
        for p in 0..5 {
            suffix[m][p] = suffix[m + 1][p] + w[m - 1] * pow[p];
        }
    }
    let alphas: Vec<[f64; 3]> = (0..n).map(|i| poly_alpha(pa, i)).collect();
    let betas: Vec<[f64; 3]> = (0..n).map(|l| poly_alpha(pb, l)).collect();
    for l in 0..n {
        let b = betas[l];
        for i in 0..n {
            let a = alphas[i];
            let s = &suffix[i.max(l) + 1];
            out[(i, l)] = a[0] * (b[0] * s[0] + b[1] * s[1] + b[2] * s[2])
                + a[1] * (b[0] * s[1] + b[1] * s[2] + b[2] * s[3])
                + a[2] * (b[0] * s[2] + b[1] * s[3] + b[2] * s[4]);
        }
    }
}

/// Accumulate `out[i] += sum_{k > i} wr[k-1] * K(k-1-i)` for a degree-2 kernel.
fn weighted_rows(p: &[f64; 3], wr: &[f64], out: &mut [f64]) {
    let n = wr.len();
    let mut suffix = vec![[0.0; 3]; n + 2];
    for m in (1..=n).rev() {
        let kf = m as f64;
        suffix[m][0] = suffix[m + 1][0] + wr[m - 1];
        suffix[m][1] = suffix[m + 1][1] + wr[m - 1] * kf;
        suffix[m][2] = suffix[m + 1][2] + wr[m - 1] * kf * kf;
    }
    for i in 0..n {
        let a = poly_alpha(p, i);
        let s = &suffix[i + 1];
        out[i] += a[0] * s[0] + a[1] * s[1] + a[2] * s[2];
    }
}

/// Predicted trajectory of one axis, index 0 = initial state.
#[derive(Clone, Debug, Default)]
struct AxisTraj {
    s: Vec<f64>,
    v: Vec<f64>,
    a: Vec<f64>,
    th: Vec<f64>,
    om: Vec<f64>,
    al: Vec<f64>,
}

impl AxisTraj {
    fn push(&mut self, x: &AxisState) {
        self.s.push(x.s);
        self.v.push(x.v);
        self.a.push(x.a);
        self.th.push(x.theta);
        self.om.push(x.omega);
        self.al.push(x.alpha);
    }
}

fn j_idx(n: usize, ax: usize, i: usize) -> usize {
    ax * 2 * n + i
}

fn ang_idx(n: usize, ax: usize, i: usize) -> usize {
    ax * 2 * n + n + i
}

fn simulate(x0: &PlatformState, u: &DVector<f64>, n: usize, dt: f64) -> [AxisTraj; 2] {
    let mut out = [AxisTraj::default(), AxisTraj::default()];
    for (ax, traj) in out.iter_mut().enumerate() {
        let mut x = *x0.axis(ax);
        traj.push(&x);
        for i in 0..n {
            x = step_axis(&x, u[j_idx(n, ax, i)], u[ang_idx(n, ax, i)], dt);
            traj.push(&x);
        }
    }
    out
}

fn axis_refs(r: &ReferenceSet, ax: usize) -> (f64, f64, f64) {
    if ax == 0 {
        (r.f_ref_long, r.lf_long, r.hf_long)
    } else {
        (r.f_ref_lat, r.lf_lat, r.hf_lat)
    }
}

/// Exact objective (sin tilt output, exact slack penalty) at an input sequence.
fn true_objective(p: &MpcProblem, u: &DVector<f64>, traj: &[AxisTraj; 2]) -> f64 {
    let n = p.horizon;
    let w = &p.weights;
    let (w_g, w_ahex) = component_weights(p);
    let inv_n = 1.0 / n as f64;
    let mut acc = 0.0;
    for ax in 0..2 {
        let t = &traj[ax];
        for k in 1..=n {
            let (fref, lf, hf) = axis_refs(&p.refs[k - 1], ax);
            let g = GRAVITY * t.th[k].sin();
            let f = t.a[k] + g;
            let viol = (t.om[k].abs() - p.limits.omega_max).max(0.0);
            let (jt, ja) = (u[j_idx(n, ax, k - 1)], u[ang_idx(n, ax, k - 1)]);
            acc += w.w_fspec * (f - fref) * (f - fref)
                + w_g * (g - lf) * (g - lf)
                + w_ahex * (t.a[k] - hf) * (t.a[k] - hf)
                + p.washout.w_s[ax] * t.s[k] * t.s[k]
                + p.washout.w_theta[ax] * t.th[k] * t.th[k]
                + w.w_j * jt * jt
                + w.w_angj * ja * ja
                + w.w_delta * viol * viol;
        }
    }
    acc * inv_n
}

fn component_weights(p: &MpcProblem) -> (f64, f64) {
    match p.mode {
        McaMode::FrequencySplitting => (p.weights.w_g, p.weights.w_ahex),
        McaMode::Benchmark => (0.0, 0.0),
    }
}

/// Total hard-constraint violation of a trajectory: the squared-resultant
/// braking excess plus any box/braking-box excess. Zero at feasible points.
fn constraint_violation(p: &MpcProblem, traj: &[AxisTraj; 2]) -> f64 {
    let n = p.horizon;
    let lim = &p.limits;
    let r2 = lim.s_max * lim.s_max;
    let mut v = 0.0;
    for k in 1..=n {
        let sb0 = braking_displacement(traj[0].s[k], traj[0].v[k], traj[0].a[k], &p.braking);
        let sb1 = braking_displacement(traj[1].s[k], traj[1].v[k], traj[1].a[k], &p.braking);
        v += (sb0 * sb0 + sb1 * sb1 - r2).max(0.0);
        for t in traj.iter() {
            let tb = braking_tilt(t.th[k], t.om[k], t.al[k], &p.braking);
            v += (t.v[k].abs() - lim.v_max).max(0.0)
                + (t.a[k].abs() - lim.a_max).max(0.0)
                + (t.th[k].abs() - lim.theta_max).max(0.0)
                + (tb.abs() - lim.theta_max).max(0.0);
        }
    }
    v
}

/// Hessian blocks and gradient of the QP around the linearization trajectory.
fn assemble(
    p: &MpcProblem,
    kern: &Kernels,
    traj: &[AxisTraj; 2],
    drift: &[AxisTraj; 2],
    elastic: bool,
) -> (Vec<DMatrix<f64>>, DVector<f64>) {
    let n = p.horizon;
    let w = &p.weights;
    let (w_g, w_ahex) = component_weights(p);
    let inv_n = 2.0 / n as f64; // the factor 2 turns sum w r^2 into 1/2 x'Hx + c'x
    let nvars = 4 * n + usize::from(elastic);
    let mut c = DVector::zeros(nvars);
    let mut blocks = Vec::with_capacity(3);
    let mut scratch = DMatrix::zeros(n, n);
    let mut wk = vec![0.0; n];

    for ax in 0..2 {
        let t = &traj[ax];
        let d = &drift[ax];
        let mut block = DMatrix::zeros(2 * n, 2 * n);

        // Gauss-Newton scaling of the tilt output at the iterate.
        let dk: Vec<f64> = (1..=n).map(|k| GRAVITY * t.th[k].cos()).collect();
        let gk: Vec<f64> = (1..=n).map(|k| GRAVITY * t.th[k].sin()).collect();

        // (j, j): specific-force + acceleration tracking through K_a,
        // washout on displacement through K_s, input weight on the diagonal.
        wk.iter_mut()
            .for_each(|x| *x = (w.w_fspec + w_ahex) * inv_n);
        weighted_gram(&kern.pa, &kern.pa, &wk, &mut scratch);
        block.view_mut((0, 0), (n, n)).copy_from(&scratch);
        wk.iter_mut()
            .for_each(|x| *x = p.washout.w_s[ax] * inv_n);
        weighted_gram(&kern.ps, &kern.ps, &wk, &mut scratch);
        for l in 0..n {
            for i in 0..n {
                block[(i, l)] += scratch[(i, l)];
            }
        }
        for i in 0..n {
            block[(i, i)] += w.w_j * inv_n;
        }

        // (j, jang) cross terms from specific-force tracking.
        for k in 1..=n {
            wk[k - 1] = w.w_fspec * dk[k - 1] * inv_n;
        }
        weighted_gram(&kern.pa, &kern.ps, &wk, &mut scratch);
        for l in 0..n {
            for i in 0..n {
                let v = scratch[(i, l)];
                block[(i, n + l)] += v;
                block[(n + l, i)] += v;
            }
        }

        // (jang, jang): tilt-output tracking, washout on tilt, tilt-rate
        // penalty pieces, input weight.
        for k in 1..=n {
            wk[k - 1] = (w.w_fspec + w_g) * dk[k - 1] * dk[k - 1] * inv_n;
        }
        weighted_gram(&kern.ps, &kern.ps, &wk, &mut scratch);
        for l in 0..n {
            for i in 0..n {
                block[(n + i, n + l)] += scratch[(i, l)];
            }
        }
        wk.iter_mut()
            .for_each(|x| *x = p.washout.w_theta[ax] * inv_n);
        weighted_gram(&kern.ps, &kern.ps, &wk, &mut scratch);
        for l in 0..n {
            for i in 0..n {
                block[(n + i, n + l)] += scratch[(i, l)];
            }
        }
        let mut any_piece = false;
        for k in 1..=n {
            let on = t.om[k].abs() > p.limits.omega_max;
            any_piece |= on;
            wk[k - 1] = if on { w.w_delta * inv_n } else { 0.0 };
        }
        if any_piece {
            weighted_gram(&kern.pv, &kern.pv, &wk, &mut scratch);
            for l in 0..n {
                for i in 0..n {
                    block[(n + i, n + l)] += scratch[(i, l)];
                }
            }
        }
        for i in 0..n {
            block[(n + i, n + i)] += w.w_angj * inv_n;
        }

        // Gradient. Residual offsets use the zero-input drift so that
        // row * u + offset reproduces the linearized outputs.
        let mut wr_f = vec![0.0; n];
        let mut wr_a = vec![0.0; n];
        let mut wr_s = vec![0.0; n];
        let mut wr_fang = vec![0.0; n];
        let mut wr_g = vec![0.0; n];
        let mut wr_th = vec![0.0; n];
        let mut wr_pen = vec![0.0; n];
        for k in 1..=n {
            let (fref, lf, hf) = axis_refs(&p.refs[k - 1], ax);
            // Linearized tilt output offset at zero input.
            let g_off = gk[k - 1] + dk[k - 1] * (d.th[k] - t.th[k]);
            let rho_f = d.a[k] + g_off - fref;
            wr_f[k - 1] = w.w_fspec * rho_f * inv_n;
            wr_fang[k - 1] = w.w_fspec * rho_f * dk[k - 1] * inv_n;
            wr_a[k - 1] = w_ahex * (d.a[k] - hf) * inv_n;
            wr_s[k - 1] = p.washout.w_s[ax] * d.s[k] * inv_n;
            wr_g[k - 1] = w_g * (g_off - lf) * dk[k - 1] * inv_n;
            wr_th[k - 1] = p.washout.w_theta[ax] * d.th[k] * inv_n;
            wr_pen[k - 1] = if t.om[k] > p.limits.omega_max {
                w.w_delta * (d.om[k] - p.limits.omega_max) * inv_n
            } else if t.om[k] < -p.limits.omega_max {
                w.w_delta * (d.om[k] + p.limits.omega_max) * inv_n
            } else {
                0.0
            };
        }
        {
            let cj = &mut c.as_mut_slice()[ax * 2 * n..ax * 2 * n + n];
            weighted_rows(&kern.pa, &wr_f, cj);
            weighted_rows(&kern.pa, &wr_a, cj);
            weighted_rows(&kern.ps, &wr_s, cj);
        }
        {
            let ca = &mut c.as_mut_slice()[ax * 2 * n + n..ax * 2 * n + 2 * n];
            weighted_rows(&kern.ps, &wr_fang, ca);
            weighted_rows(&kern.ps, &wr_g, ca);
            weighted_rows(&kern.ps, &wr_th, ca);
            weighted_rows(&kern.pv, &wr_pen, ca);
        }
        blocks.push(block);
    }

    if elastic {
        blocks.push(DMatrix::from_element(1, 1, 2.0 * p.weights.w_delta));
    }
    (blocks, c)
}

/// Hard box and braking-box rows, constant within a tick.
fn build_base_rows(
    p: &MpcProblem,
    kern: &Kernels,
    drift: &[AxisTraj; 2],
    elastic: bool,
) -> Vec<LinearConstraint> {
    let n = p.horizon;
    let e_idx = 4 * n;
    let mut rows = Vec::with_capacity(2 * n * 10);
    for ax in 0..2 {
        let d = &drift[ax];
        let mut push_box = |kernel: &[f64],
                            drift_k: &dyn Fn(usize) -> f64,
                            bound: f64,
                            translational: bool,
                            braking: bool| {
            for k in 1..=n {
                let off = drift_k(k);
                let mut upper = Vec::with_capacity(k + 1);
                let mut lower = Vec::with_capacity(k + 1);
                for i in 0..k {
                    let idx = if translational {
                        j_idx(n, ax, i)
                    } else {
                        ang_idx(n, ax, i)
                    };
                    let kv = kernel[k - 1 - i];
                    upper.push((idx, -kv));
                    lower.push((idx, kv));
                }
                if braking && elastic {
                    upper.push((e_idx, 1.0));
                    lower.push((e_idx, 1.0));
                }
                rows.push(LinearConstraint {
                    terms: upper,
                    rhs: off - bound,
                });
                rows.push(LinearConstraint {
                    terms: lower,
                    rhs: -bound - off,
                });
            }
        };
        push_box(&kern.ks, &|k| d.th[k], p.limits.theta_max, false, false);
        push_box(&kern.kv, &|k| d.v[k], p.limits.v_max, true, false);
        push_box(&kern.ka, &|k| d.a[k], p.limits.a_max, true, false);
        push_box(
            &kern.kbt,
            &|k| braking_tilt(d.th[k], d.om[k], d.al[k], &p.braking),
            p.limits.theta_max,
            false,
            true,
        );
    }
    if elastic {
        rows.push(LinearConstraint {
            terms: vec![(e_idx, 1.0)],
            rhs: 0.0,
        });
    }
    rows
}

/// Resultant-braking rows, linearized at the current iterate.
fn push_norm_rows(
    rows: &mut Vec<LinearConstraint>,
    p: &MpcProblem,
    kern: &Kernels,
    traj: &[AxisTraj; 2],
    drift: &[AxisTraj; 2],
    elastic: bool,
) {
    let n = p.horizon;
    let r2 = p.limits.s_max * p.limits.s_max;
    for k in 1..=n {
        let sb = |t: &AxisTraj| braking_displacement(t.s[k], t.v[k], t.a[k], &p.braking);
        let bar = [sb(&traj[0]), sb(&traj[1])];
        let norm = bar[0].hypot(bar[1]);
        if norm < BRAKING_SKIP_NORM {
            continue;
        }
        let mut terms = Vec::with_capacity(2 * k + 1);
        let mut rhs = -r2 - (bar[0] * bar[0] + bar[1] * bar[1]);
        for ax in 0..2 {
            for i in 0..k {
                terms.push((j_idx(n, ax, i), -2.0 * bar[ax] * kern.kbs[k - 1 - i]));
            }
            rhs += 2.0 * bar[ax] * sb(&drift[ax]);
        }
        if elastic {
            terms.push((4 * n, 1.0));
        }
        rows.push(LinearConstraint { terms, rhs });
    }
}

/// Receding-horizon solver. Owns the warm start, so one instance serves one
/// control loop; independent loops use independent instances.
#[derive(Debug)]
pub struct MpcSolver {
    max_iter: usize,
    qp: DualActiveSet,
    kern: Option<Kernels>,
    warm: Option<DVector<f64>>,
}

impl MpcSolver {
    pub fn new(max_iter: usize) -> Self {
        Self {
            max_iter,
            qp: DualActiveSet::new(),
            kern: None,
            warm: None,
        }
    }

    pub fn reset_warm_start(&mut self) {
        self.warm = None;
    }

    fn kernels(&mut self, p: &MpcProblem) -> Kernels {
        let stale = match &self.kern {
            Some(k) => k.n != p.horizon || k.dt != p.dt || k.braking != p.braking,
            None => true,
        };
        if stale {
            self.kern = Some(Kernels::new(p.horizon, p.dt, &p.braking));
            self.warm = None;
        }
        self.kern.clone().unwrap()
    }

    /// Warm start: the previous optimal sequence shifted by one step, with
    /// the final input repeated.
    fn warm_start(&self, n: usize) -> DVector<f64> {
        match &self.warm {
            Some(w) if w.len() == 4 * n => {
                let mut out = DVector::zeros(4 * n);
                for seg in 0..4 {
                    let off = seg * n;
                    for i in 0..n - 1 {
                        out[off + i] = w[off + i + 1];
                    }
                    out[off + n - 1] = w[off + n - 1];
                }
                out
            }
            _ => DVector::zeros(4 * n),
        }
    }

    pub fn solve(&mut self, p: &MpcProblem) -> Result<MpcSolution, McaError> {
        if p.refs.len() != p.horizon {
            return Err(McaError::Problem(
                "reference lookahead does not match horizon".into(),
            ));
        }
        let n = p.horizon;
        let kern = self.kernels(p);
        let drift = simulate(&p.x0, &DVector::zeros(4 * n), n, p.dt);

        let mut u = self.warm_start(n);
        let mut traj = simulate(&p.x0, &u, n, p.dt);
        let mut f_cur = true_objective(p, &u, &traj);
        let mut viol_cur = constraint_violation(p, &traj);
        // (objective, violation) after each accepted iterate; folded into a
        // merit history once the final penalty weight is known.
        let mut history = vec![(f_cur, viol_cur)];
        let mut mu: f64 = 1.0;

        let mut elastic = false;
        let mut emergency_slack = 0.0;
        let mut base_rows = build_base_rows(p, &kern, &drift, elastic);
        let mut rows = Vec::new();
        let mut qp_iterations = 0usize;
        let mut converged = false;
        let mut iterations = 0usize;
        let mut stall = 0usize;

        while iterations < self.max_iter {
            iterations += 1;

            let (blocks, c) = assemble(p, &kern, &traj, &drift, elastic);
            rows.clear();
            rows.extend_from_slice(&base_rows);
            push_norm_rows(&mut rows, p, &kern, &traj, &drift, elastic);

            let qp_sol = match self.qp.solve(blocks, &c, &rows) {
                Ok(s) => s,
                Err(QpError::Infeasible) if !elastic => {
                    // Relax the braking constraints with one shared,
                    // penalized emergency slack and retry this iterate.
                    elastic = true;
                    base_rows = build_base_rows(p, &kern, &drift, elastic);
                    iterations -= 1;
                    continue;
                }
                Err(e) => return Err(McaError::Solver(e.to_string())),
            };
            qp_iterations += qp_sol.iterations;
            if elastic {
                emergency_slack = qp_sol.x[4 * n];
            }

            let mut step = DVector::zeros(4 * n);
            for i in 0..4 * n {
                step[i] = qp_sol.x[i] - u[i];
            }
            let step_norm = step.amax();
            if step_norm < STEP_TOL {
                converged = true;
                break;
            }

            // Backtracking on an l1 merit (exact objective plus penalized
            // constraint violation) keeps the iteration a descent method
            // despite the sin/piece/braking relinearization. The penalty
            // weight tracks the QP multipliers, which makes the SQP step a
            // merit descent direction.
            let lam_max = qp_sol.multipliers.iter().cloned().fold(0.0, f64::max);
            mu = mu.max(2.0 * lam_max + 1.0);
            let merit_cur = f_cur + mu * viol_cur;
            let mut alpha = 1.0;
            let mut accepted = false;
            while alpha >= 1e-9 {
                let u_try = &u + &step * alpha;
                let traj_try = simulate(&p.x0, &u_try, n, p.dt);
                let f_try = true_objective(p, &u_try, &traj_try);
                let viol_try = constraint_violation(p, &traj_try);
                if f_try + mu * viol_try <= merit_cur + 1e-12 * (1.0 + merit_cur.abs()) {
                    u = u_try;
                    traj = traj_try;
                    f_cur = f_try;
                    viol_cur = viol_try;
                    history.push((f_cur, viol_cur));
                    accepted = true;
                    break;
                }
                alpha *= 0.5;
            }
            if !accepted {
                // Numerically stationary: no direction of descent left.
                converged = step_norm < 1e-6;
                break;
            }
            // Merit stagnation over several accepted iterates means the
            // remaining step is numerical jitter, not progress.
            let decrease = merit_cur - (f_cur + mu * viol_cur);
            if decrease <= 1e-11 * (1.0 + merit_cur.abs()) {
                stall += 1;
                if stall >= 3 {
                    converged = true;
                    break;
                }
            } else {
                stall = 0;
            }
        }

        let status = if !converged {
            SolveStatus::MaxIterations
        } else if elastic {
            SolveStatus::InfeasibleRelaxed
        } else {
            SolveStatus::Optimal
        };

        // Final trajectory via the shared integrator so closed-loop plants
        // see bit-identical predictions.
        let mut states = Vec::with_capacity(n + 1);
        let mut inputs = Vec::with_capacity(n);
        let mut x = p.x0;
        states.push(x);
        for i in 0..n {
            let ui = ControlInput {
                j_long: u[j_idx(n, 0, i)],
                j_lat: u[j_idx(n, 1, i)],
                jang_long: u[ang_idx(n, 0, i)],
                jang_lat: u[ang_idx(n, 1, i)],
            };
            x = crate::model::step_dynamics(&x, &ui, p.dt)
                .map_err(|e| McaError::Solver(format!("diverged plan: {e}")))?;
            inputs.push(ui);
            states.push(x);
        }
        let outputs: Vec<SpecificForce> = states[1..].iter().map(output_map).collect();
        let slack: Vec<[f64; 2]> = states[1..]
            .iter()
            .map(|s| {
                [
                    (s.long.omega.abs() - p.limits.omega_max).max(0.0),
                    (s.lat.omega.abs() - p.limits.omega_max).max(0.0),
                ]
            })
            .collect();
        let total_slack = slack.iter().map(|d| d[0] + d[1]).sum();

        self.warm = Some(u.clone());
        Ok(MpcSolution {
            inputs,
            states,
            outputs,
            slack,
            total_slack,
            emergency_slack,
            iterations,
            qp_iterations,
            objective: f_cur,
            objective_history: history.into_iter().map(|(f, v)| f + mu * v).collect(),
            status,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::freq_split::ReferenceSet;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn refs_const(n: usize, f: f64, lf: f64, hf: f64) -> Vec<ReferenceSet> {
        (0..n)
            .map(|k| ReferenceSet {
                t: k as f64 * 0.01,
                f_ref_long: f,
                f_ref_lat: f,
                lf_long: lf,
                lf_lat: lf,
                hf_long: hf,
                hf_lat: hf,
            })
            .collect()
    }

    fn unconstrained_limits() -> Limits {
        Limits {
            omega_max: 1e6,
            theta_max: 1.5,
            v_max: 1e6,
            a_max: 1e6,
            s_max: 1e6,
        }
    }

    fn problem(
        mode: McaMode,
        x0: PlatformState,
        refs: Vec<ReferenceSet>,
        weights: Weights,
        limits: Limits,
        dt: f64,
    ) -> MpcProblem {
        let washout = adaptive_washout_weights(&x0, &WashoutParams::default(), &limits);
        let n = refs.len();
        build_problem(
            mode,
            &x0,
            &refs,
            &weights,
            &washout,
            &limits,
            &BrakingParams::default(),
            n,
            dt,
        )
        .unwrap()
    }

    #[test]
    fn gram_matches_direct_summation() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 7;
        let kern = Kernels::new(n, 0.05, &BrakingParams::default());
        let w: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..2.0)).collect();
        for (pa, pb) in [
            (&kern.pa, &kern.pa),
            (&kern.pa, &kern.ps),
            (&kern.ps, &kern.ps),
            (&kern.pv, &kern.ps),
        ] {
            let mut fast = DMatrix::zeros(n, n);
            weighted_gram(pa, pb, &w, &mut fast);
            for i in 0..n {
                for l in 0..n {
                    let mut direct = 0.0;
                    for k in (i.max(l) + 1)..=n {
                        direct += w[k - 1]
                            * poly_eval(pa, (k - 1 - i) as f64)
                            * poly_eval(pb, (k - 1 - l) as f64);
                    }
                    assert_relative_eq!(fast[(i, l)], direct, epsilon = 1e-12, max_relative = 1e-10);
                }
            }
        }
    }

    #[test]
    fn rows_match_direct_summation() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let n = 9;
        let kern = Kernels::new(n, 0.02, &BrakingParams::default());
        let wr: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let mut fast = vec![0.0; n];
        weighted_rows(&kern.ps, &wr, &mut fast);
        for i in 0..n {
            let mut direct = 0.0;
            for k in (i + 1)..=n {
                direct += wr[k - 1] * poly_eval(&kern.ps, (k - 1 - i) as f64);
            }
            assert_relative_eq!(fast[i], direct, epsilon = 1e-12, max_relative = 1e-10);
        }
    }

    #[test]
    fn kernels_match_the_integrator() {
        // Convolving the kernels with an input sequence must reproduce the
        // step-by-step integrator.
        let n = 12;
        let dt = 0.01;
        let kern = Kernels::new(n, dt, &BrakingParams::default());
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let u = DVector::from_fn(4 * n, |_, _| rng.random_range(-2.0..2.0));
        let x0 = PlatformState::default();
        let traj = simulate(&x0, &u, n, dt);
        for k in 1..=n {
            let mut a = 0.0;
            let mut v = 0.0;
            let mut s = 0.0;
            for i in 0..k {
                a += kern.ka[k - 1 - i] * u[j_idx(n, 0, i)];
                v += kern.kv[k - 1 - i] * u[j_idx(n, 0, i)];
                s += kern.ks[k - 1 - i] * u[j_idx(n, 0, i)];
            }
            assert_relative_eq!(traj[0].a[k], a, epsilon = 1e-12);
            assert_relative_eq!(traj[0].v[k], v, epsilon = 1e-12);
            assert_relative_eq!(traj[0].s[k], s, epsilon = 1e-13);
        }
    }

    #[test]
    fn adaptive_weight_values() {
        let lim = Limits::default();
        let par = WashoutParams::default();
        let x = PlatformState::default();
        let w = adaptive_washout_weights(&x, &par, &lim);
        assert_relative_eq!(w.w_s[0], 0.0799, epsilon = 1e-4);

        let mut x = PlatformState::default();
        x.long.s = 0.5;
        let w = adaptive_washout_weights(&x, &par, &lim);
        assert_relative_eq!(w.w_s[0], 100.0, max_relative = 1e-12);

        let mut x = PlatformState::default();
        x.lat.theta = 30f64.to_radians();
        let w = adaptive_washout_weights(&x, &par, &lim);
        assert_relative_eq!(w.w_theta[1], 10.0, max_relative = 1e-12);
    }

    #[test]
    fn braking_projection_values() {
        let p = BrakingParams::default();
        assert_relative_eq!(braking_displacement(0.4, 0.2, 0.0, &p), 0.9, epsilon = 1e-12);
        assert_eq!(braking_displacement(0.0, 0.0, 0.0, &p), 0.0);
        assert_eq!(braking_tilt(0.0, 0.0, 0.0, &p), 0.0);
        let th = 10f64.to_radians();
        let om = 3f64.to_radians();
        assert_relative_eq!(
            braking_tilt(th, om, 0.0, &p),
            11.5f64.to_radians(),
            epsilon = 1e-12
        );
    }

    #[test]
    fn zero_problem_returns_zero_command() {
        let p = problem(
            McaMode::FrequencySplitting,
            PlatformState::default(),
            refs_const(1, 0.0, 0.0, 0.0),
            Weights::default(),
            Limits::default(),
            0.01,
        );
        let sol = MpcSolver::new(200).solve(&p).unwrap();
        assert_eq!(sol.status, SolveStatus::Optimal);
        assert_eq!(sol.inputs[0], ControlInput::default());
        assert_relative_eq!(sol.objective, 0.0, epsilon = 1e-15);
        assert!(sol.iterations <= 2);
    }

    #[test]
    fn single_step_tracking_matches_stationarity() {
        // One step of dt = 1 with only f tracked, a huge angular-jerk weight
        // and no active limits reduces to min 5(j-1)^2 + 0.01 j^2, whose
        // stationary point is j = 5/5.01.
        let weights = Weights {
            w_fspec: 5.0,
            w_g: 0.0,
            w_ahex: 0.0,
            w_j: 0.01,
            w_angj: 1e9,
            w_delta: 1e5,
        };
        let mut p = problem(
            McaMode::Benchmark,
            PlatformState::default(),
            refs_const(1, 1.0, 0.0, 0.0),
            weights,
            unconstrained_limits(),
            1.0,
        );
        p.washout = WashoutWeights {
            w_s: [0.0; 2],
            w_theta: [0.0; 2],
        };
        let sol = MpcSolver::new(200).solve(&p).unwrap();
        assert_relative_eq!(sol.inputs[0].j_long, 5.0 / 5.01, epsilon = 1e-6);
        assert_relative_eq!(sol.inputs[0].j_lat, 5.0 / 5.01, epsilon = 1e-6);
    }

    #[test]
    fn benchmark_equals_fs_with_zero_component_weights() {
        let x0 = {
            let mut x = PlatformState::default();
            x.long.theta = 0.05;
            x.long.a = 0.2;
            x.lat.s = 0.1;
            x
        };
        let refs = refs_const(6, 0.3, 0.2, 0.1);
        let mut w_zeroed = Weights::default();
        w_zeroed.w_g = 0.0;
        w_zeroed.w_ahex = 0.0;
        let p_fs = problem(
            McaMode::FrequencySplitting,
            x0,
            refs.clone(),
            w_zeroed,
            Limits::default(),
            0.01,
        );
        let p_bench = problem(
            McaMode::Benchmark,
            x0,
            refs,
            Weights::default(),
            Limits::default(),
            0.01,
        );
        let kern = Kernels::new(6, 0.01, &BrakingParams::default());
        let drift = simulate(&x0, &DVector::zeros(24), 6, 0.01);
        let (h1, c1) = assemble(&p_fs, &kern, &drift, &drift, false);
        let (h2, c2) = assemble(&p_bench, &kern, &drift, &drift, false);
        assert_eq!(c1, c2);
        for (b1, b2) in h1.iter().zip(&h2) {
            assert_eq!(b1, b2);
        }
    }

    #[test]
    fn braking_constraint_bounds_the_plan() {
        // Displaced and drifting outward: the plan must brake so that the
        // projected stopping displacement stays inside the workspace.
        let mut x0 = PlatformState::default();
        x0.long.s = 0.49;
        x0.long.v = 0.3;
        let n = 40;
        let p = problem(
            McaMode::FrequencySplitting,
            x0,
            refs_const(n, 0.0, 0.0, 0.0),
            Weights::default(),
            Limits::default(),
            0.01,
        );
        let sol = MpcSolver::new(200).solve(&p).unwrap();
        let br = BrakingParams::default();
        for k in 1..=n {
            let st = &sol.states[k];
            let sb_long = braking_displacement(st.long.s, st.long.v, st.long.a, &br);
            let sb_lat = braking_displacement(st.lat.s, st.lat.v, st.lat.a, &br);
            assert!(
                sb_long.hypot(sb_lat) <= 0.5 + 1e-6,
                "step {k}: projected stop at {}",
                sb_long.hypot(sb_lat)
            );
            assert!(st.long.v.abs() <= 7.2 + 1e-6);
            assert!(st.long.a.abs() <= 9.81 + 1e-6);
            assert!(st.long.theta.abs() <= 30f64.to_radians() + 1e-6);
        }
    }

    #[test]
    fn objective_history_is_non_increasing() {
        let mut x0 = PlatformState::default();
        x0.long.s = 0.2;
        x0.long.theta = 0.1;
        let p = problem(
            McaMode::FrequencySplitting,
            x0,
            refs_const(20, 0.4, 0.3, 0.1),
            Weights::default(),
            Limits::default(),
            0.01,
        );
        let sol = MpcSolver::new(200).solve(&p).unwrap();
        for w in sol.objective_history.windows(2) {
            assert!(w[1] <= w[0] + 1e-10 * (1.0 + w[0].abs()));
        }
        assert_eq!(sol.status, SolveStatus::Optimal);
    }

    #[test]
    fn resolving_at_optimum_converges_immediately() {
        // Zero problem twice: the shifted warm start of an all-zero plan is
        // all-zero, so the second solve must detect optimality at once.
        let p = problem(
            McaMode::Benchmark,
            PlatformState::default(),
            refs_const(10, 0.0, 0.0, 0.0),
            Weights::default(),
            Limits::default(),
            0.01,
        );
        let mut solver = MpcSolver::new(200);
        solver.solve(&p).unwrap();
        let sol = solver.solve(&p).unwrap();
        assert!(sol.iterations <= 2);
        assert_eq!(sol.status, SolveStatus::Optimal);
    }

    #[test]
    fn rejects_inconsistent_lookahead() {
        let x0 = PlatformState::default();
        let washout =
            adaptive_washout_weights(&x0, &WashoutParams::default(), &Limits::default());
        let err = build_problem(
            McaMode::Benchmark,
            &x0,
            &refs_const(5, 0.0, 0.0, 0.0),
            &Weights::default(),
            &washout,
            &Limits::default(),
            &BrakingParams::default(),
            8,
            0.01,
        );
        assert!(err.is_err());
    }

    #[test]
    fn tilt_rate_pieces_respect_slack_accounting() {
        // An aggressive sustained reference forces tilt-rate saturation; the
        // commanded trajectory must satisfy |omega| <= omega_max + slack with
        // nonnegative slack at every step.
        let p = problem(
            McaMode::Benchmark,
            PlatformState::default(),
            refs_const(40, 2.0, 0.0, 0.0),
            Weights::default(),
            Limits::default(),
            0.01,
        );
        let sol = MpcSolver::new(200).solve(&p).unwrap();
        for (k, st) in sol.states[1..].iter().enumerate() {
            let d = sol.slack[k];
            assert!(d[0] >= 0.0 && d[1] >= 0.0);
            assert!(st.long.omega.abs() <= 3f64.to_radians() + d[0] + 1e-9);
            assert!(st.lat.omega.abs() <= 3f64.to_radians() + d[1] + 1e-9);
        }
    }
}

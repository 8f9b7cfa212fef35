//! The fractional Newton flow `s|ẋ|^{2s−2}ẍ = −∇V(x)`.
//!
//! First-order form: `ẋ = ξ`, `ξ̇ = −(1/s)(|ξ|²)^{1−s}∇V(x)`. At `s = 1`
//! this is the classical system `ẍ = −∇V`; for `s < 1` the velocity
//! factor degenerates at `ξ = 0`, so every `(x, 0)` is an exact fixed
//! point and the flow conserves `ℋ̃ = ½|ξ|^{2s} + V(x)` instead of the
//! classical energy.
//!
//! For `s > ½` the right-hand side is not locally Lipschitz near
//! `ξ = 0` (`|ξ|^{2−2s}` has an unbounded derivative there) and the
//! initial value problem can lose uniqueness. The integrators here are
//! honest about that: a state entering the degenerate set with a
//! nontrivial force aborts with a diagnostic instead of silently
//! picking one continuation. An optional floor `δ` on `|ξ|²`
//! regularizes the factor for exploratory runs and is carried in the
//! returned trajectory so downstream records can declare it.
//!
//! Integration is fixed-step RK4 or adaptive Dormand–Prince RK45 with
//! cubic Hermite dense output; the output cadence is decoupled from the
//! internal step.

use crate::error::{CoreError, Result};

/// A potential `V : ℝ^N → ℝ` with an analytic gradient.
///
/// `Poly` is separable: `V(x) = Σ_j P(x_j)` with
/// `P(y) = c₀ + c₁y + c₂y² + …`, so one coefficient list serves any
/// dimension.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub enum Potential {
    /// `V(x₁,x₂) = ½x₁² + 2x₂²` — the anisotropic harmonic well of the
    /// phase portraits. Two dimensions only.
    Harmonic2d,
    /// Isotropic `V(x) = ½|x|²` in any dimension.
    Quadratic,
    /// Separable polynomial `V(x) = Σ_j P(x_j)` with the listed
    /// coefficients of `P`, lowest order first.
    Poly(Vec<f64>),
}

impl Potential {
    /// Dimension the preset insists on, if any.
    pub fn expected_dim(&self) -> Option<usize> {
        match self {
            Potential::Harmonic2d => Some(2),
            _ => None,
        }
    }

    fn check_dim(&self, dim: usize) -> Result<()> {
        if let Some(d) = self.expected_dim() {
            if d != dim {
                return Err(CoreError::Domain(format!(
                    "potential expects dimension {d}, state has {dim}"
                )));
            }
        }
        Ok(())
    }

    /// `V(x)`. Panics if a preset's dimension contract is violated;
    /// [`integrate`] and [`motion_energy`] validate up front.
    pub fn value(&self, x: &[f64]) -> f64 {
        match self {
            Potential::Harmonic2d => {
                assert_eq!(x.len(), 2, "harmonic2d potential is two-dimensional");
                0.5 * x[0] * x[0] + 2.0 * x[1] * x[1]
            }
            Potential::Quadratic => 0.5 * x.iter().map(|v| v * v).sum::<f64>(),
            Potential::Poly(c) => x.iter().map(|&y| horner(c, y)).sum(),
        }
    }

    /// `∇V(x)`, same dimension contract as [`Potential::value`].
    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        match self {
            Potential::Harmonic2d => {
                assert_eq!(x.len(), 2, "harmonic2d potential is two-dimensional");
                vec![x[0], 4.0 * x[1]]
            }
            Potential::Quadratic => x.to_vec(),
            Potential::Poly(c) => x.iter().map(|&y| horner_derivative(c, y)).collect(),
        }
    }

    /// Worst absolute gap between the analytic gradient and a central
    /// finite difference over the probe points — the consistency check
    /// every preset must pass to 1e−6.
    pub fn gradient_consistency(&self, probes: &[Vec<f64>]) -> Result<f64> {
        let h = 1e-5;
        let mut worst = 0.0_f64;
        for x in probes {
            self.check_dim(x.len())?;
            let grad = self.gradient(x);
            for j in 0..x.len() {
                let mut xp = x.clone();
                let mut xm = x.clone();
                xp[j] += h;
                xm[j] -= h;
                let fd = (self.value(&xp) - self.value(&xm)) / (2.0 * h);
                worst = worst.max((grad[j] - fd).abs());
            }
        }
        Ok(worst)
    }
}

fn horner(coeffs: &[f64], y: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, c| acc * y + c)
}

fn horner_derivative(coeffs: &[f64], y: f64) -> f64 {
    coeffs
        .iter()
        .enumerate()
        .skip(1)
        .rev()
        .fold(0.0, |acc, (k, c)| acc * y + k as f64 * c)
}

/// Position and velocity at one instant.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct NewtonState {
    pub t: f64,
    pub x: Vec<f64>,
    pub xi: Vec<f64>,
}

impl NewtonState {
    pub fn new(t: f64, x: Vec<f64>, xi: Vec<f64>) -> Result<Self> {
        if x.is_empty() || x.len() != xi.len() {
            return Err(CoreError::Domain(format!(
                "state needs matching nonempty x ({}) and xi ({})",
                x.len(),
                xi.len()
            )));
        }
        if !t.is_finite() || x.iter().chain(&xi).any(|v| !v.is_finite()) {
            return Err(CoreError::Domain("non-finite state entries".into()));
        }
        Ok(Self { t, x, xi })
    }

    pub fn dim(&self) -> usize {
        self.x.len()
    }

    pub fn speed_sq(&self) -> f64 {
        self.xi.iter().map(|v| v * v).sum()
    }
}

/// Right-hand side `(ẋ, ξ̇) = (ξ, −(1/s)(|ξ|²)^{1−s}∇V(x))`.
///
/// Squared-norm form on purpose: `|ξ|` itself is not differentiable at
/// the origin, while `(|ξ|²)^{1−s}` evaluates cleanly and vanishes
/// exactly at `ξ = 0` for `s < 1` — the stationary family `(x, 0)` is
/// a bitwise fixed point. At `s = 1` the factor is exactly one and the
/// classical force law comes back. Requires `s ∈ (0,1]`.
pub fn rhs(state: &NewtonState, s: f64, potential: &Potential) -> (Vec<f64>, Vec<f64>) {
    rhs_with_floor(state, s, potential, 0.0)
}

/// [`rhs`] with `|ξ|²` replaced by `max(|ξ|², reg_floor)`.
pub fn rhs_with_floor(
    state: &NewtonState,
    s: f64,
    potential: &Potential,
    reg_floor: f64,
) -> (Vec<f64>, Vec<f64>) {
    assert!(s > 0.0 && s <= 1.0, "rhs needs s in (0,1], got {s}");
    let q = state.speed_sq().max(reg_floor);
    let factor = q.powf(1.0 - s) / s;
    let dxi = if factor == 0.0 {
        vec![0.0; state.dim()]
    } else {
        potential
            .gradient(&state.x)
            .into_iter()
            .map(|g| -factor * g)
            .collect()
    };
    (state.xi.clone(), dxi)
}

/// `mass_scale·(½|ξ|^{2s} + V(x))` — the conserved quantity of the
/// flow (`mass_scale = 1`), or the transported soliton's mechanical
/// energy when scaled by its mass.
pub fn motion_energy(state: &NewtonState, s: f64, potential: &Potential, mass_scale: f64) -> f64 {
    assert!(s > 0.0 && s <= 1.0, "motion energy needs s in (0,1], got {s}");
    mass_scale * (0.5 * state.speed_sq().powf(s) + potential.value(&state.x))
}

/// Time stepper selection; the payload is the fixed step (RK4) or the
/// local-error tolerance (RK45).
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub enum Method {
    Rk4 { dt: f64 },
    Rk45 { tol: f64 },
}

/// An integrated orbit: states on a uniform output grid plus the
/// conserved quantity at each sample.
#[derive(Debug, Clone)]
pub struct NewtonTrajectory {
    s: f64,
    reg_floor: f64,
    samples: Vec<NewtonState>,
    energies: Vec<f64>,
}

impl NewtonTrajectory {
    pub fn samples(&self) -> &[NewtonState] {
        &self.samples
    }

    /// `ℋ̃ = ½|ξ|^{2s} + V(x)` per sample, aligned with [`samples`].
    ///
    /// [`samples`]: NewtonTrajectory::samples
    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    /// The `|ξ|²` floor the run was produced with (0 = none); recorded
    /// so run manifests can declare regularized trajectories.
    pub fn reg_floor(&self) -> f64 {
        self.reg_floor
    }

    pub fn final_state(&self) -> &NewtonState {
        self.samples.last().expect("trajectories are never empty")
    }

    /// Largest relative excursion of the conserved quantity from its
    /// initial value.
    pub fn energy_drift(&self) -> f64 {
        let h0 = self.energies[0];
        let scale = h0.abs().max(f64::MIN_POSITIVE);
        self.energies
            .iter()
            .map(|h| (h - h0).abs() / scale)
            .fold(0.0, f64::max)
    }

    /// Position at an arbitrary time inside the trajectory span, by
    /// cubic Hermite interpolation using the stored velocities.
    pub fn position_at(&self, t: f64) -> Result<Vec<f64>> {
        let first = self.samples.first().expect("non-empty");
        let last = self.final_state();
        if t < first.t - 1e-12 || t > last.t + 1e-12 {
            return Err(CoreError::Domain(format!(
                "t = {t} outside the trajectory span [{}, {}]",
                first.t, last.t
            )));
        }
        let idx = match self
            .samples
            .binary_search_by(|st| st.t.total_cmp(&t))
        {
            Ok(i) => return Ok(self.samples[i].x.clone()),
            Err(i) => i.clamp(1, self.samples.len() - 1),
        };
        let a = &self.samples[idx - 1];
        let b = &self.samples[idx];
        let h = b.t - a.t;
        let theta = ((t - a.t) / h).clamp(0.0, 1.0);
        let (h00, h10, h01, h11) = hermite_basis(theta);
        Ok((0..a.dim())
            .map(|j| h00 * a.x[j] + h10 * h * a.xi[j] + h01 * b.x[j] + h11 * h * b.xi[j])
            .collect())
    }

    /// CSV layout used by the command-line tool: `t, x…, xi…, H`.
    pub fn csv_header(&self) -> Vec<String> {
        let dim = self.samples[0].dim();
        let mut header = vec!["t".to_string()];
        header.extend((1..=dim).map(|j| format!("x{j}")));
        header.extend((1..=dim).map(|j| format!("xi{j}")));
        header.push("H".to_string());
        header
    }

    pub fn csv_rows(&self) -> Vec<Vec<f64>> {
        self.samples
            .iter()
            .zip(&self.energies)
            .map(|(st, h)| {
                let mut row = vec![st.t];
                row.extend_from_slice(&st.x);
                row.extend_from_slice(&st.xi);
                row.push(*h);
                row
            })
            .collect()
    }
}

fn hermite_basis(theta: f64) -> (f64, f64, f64, f64) {
    let t2 = theta * theta;
    let t3 = t2 * theta;
    (
        2.0 * t3 - 3.0 * t2 + 1.0,
        t3 - 2.0 * t2 + theta,
        -2.0 * t3 + 3.0 * t2,
        t3 - t2,
    )
}

/// Integrate the flow from `state0` over `[t₀, t₀ + horizon]`, sampling
/// every `output_dt`.
///
/// RK4 subdivides each output interval into equal internal steps no
/// larger than the requested `dt`; RK45 adapts its step against the
/// local-error tolerance and fills the output grid by cubic Hermite
/// interpolation between accepted steps. The final time is always
/// sampled, as a partial interval if `horizon` is not a multiple of
/// `output_dt`.
///
/// With `reg_floor = 0` and `s > ½`, entering the degenerate set
/// (`|ξ| < 1e−12` against a nontrivial force) aborts with the
/// non-Lipschitz diagnostic rather than silently choosing a
/// continuation; a
/// positive floor lifts the degeneracy and is recorded on the result.
pub fn integrate(
    state0: &NewtonState,
    s: f64,
    potential: &Potential,
    method: Method,
    horizon: f64,
    output_dt: f64,
    reg_floor: f64,
) -> Result<NewtonTrajectory> {
    if !(s > 0.0 && s <= 1.0) {
        return Err(CoreError::Domain(format!("integrator needs s in (0,1], got {s}")));
    }
    if !(horizon > 0.0) || !(output_dt > 0.0) {
        return Err(CoreError::Domain(
            "horizon and output cadence must be positive".into(),
        ));
    }
    if !(reg_floor >= 0.0) {
        return Err(CoreError::Domain("reg_floor must be ≥ 0".into()));
    }
    potential.check_dim(state0.dim())?;
    match method {
        Method::Rk4 { dt } if !(dt > 0.0) => {
            return Err(CoreError::Domain("rk4 step must be positive".into()))
        }
        Method::Rk45 { tol } if !(tol > 0.0 && tol < 1.0) => {
            return Err(CoreError::Domain("rk45 tolerance must be in (0,1)".into()))
        }
        _ => {}
    }
    check_degeneracy(state0.t, state0, s, potential, reg_floor)?;

    let mut samples = vec![state0.clone()];
    match method {
        Method::Rk4 { dt } => {
            integrate_rk4(&mut samples, s, potential, dt, horizon, output_dt, reg_floor)?
        }
        Method::Rk45 { tol } => {
            integrate_rk45(&mut samples, s, potential, tol, horizon, output_dt, reg_floor)?
        }
    }
    let energies = samples
        .iter()
        .map(|st| motion_energy(st, s, potential, 1.0))
        .collect();
    Ok(NewtonTrajectory {
        s,
        reg_floor,
        samples,
        energies,
    })
}

/// Abort when the state sits in the set where the flow is ill-posed:
/// `s > ½`, no regularization, a vanishing velocity, and a force that
/// still wants to move it.
fn check_degeneracy(
    t: f64,
    state: &NewtonState,
    s: f64,
    potential: &Potential,
    reg_floor: f64,
) -> Result<()> {
    if s <= 0.5 || reg_floor > 0.0 {
        return Ok(());
    }
    let speed = state.speed_sq().sqrt();
    if speed >= 1e-12 || speed == 0.0 {
        // exact zero is the legitimate stationary family
        return Ok(());
    }
    let grad: f64 = potential
        .gradient(&state.x)
        .iter()
        .map(|g| g * g)
        .sum::<f64>()
        .sqrt();
    if grad > 1e-12 {
        return Err(CoreError::NonLipschitzStall { t, speed });
    }
    Ok(())
}

/// Output-interval boundaries for a horizon: full multiples of
/// `output_dt` plus a possible partial tail.
fn output_segments(horizon: f64, output_dt: f64) -> Vec<f64> {
    let full = ((horizon / output_dt) + 1e-9).floor() as usize;
    let mut ends: Vec<f64> = (1..=full).map(|k| k as f64 * output_dt).collect();
    let covered = full as f64 * output_dt;
    if horizon - covered > 1e-9 * horizon {
        ends.push(horizon);
    } else if let Some(last) = ends.last_mut() {
        *last = horizon;
    } else {
        ends.push(horizon);
    }
    ends
}

fn deriv_flat(
    y: &[f64],
    dim: usize,
    s: f64,
    potential: &Potential,
    reg_floor: f64,
    out: &mut [f64],
) {
    let (x, xi) = y.split_at(dim);
    let q = xi.iter().map(|v| v * v).sum::<f64>().max(reg_floor);
    let factor = q.powf(1.0 - s) / s;
    out[..dim].copy_from_slice(xi);
    if factor == 0.0 {
        out[dim..].fill(0.0);
    } else {
        for (o, g) in out[dim..].iter_mut().zip(potential.gradient(x)) {
            *o = -factor * g;
        }
    }
}

fn state_from_flat(t: f64, y: &[f64], dim: usize) -> Result<NewtonState> {
    NewtonState::new(t, y[..dim].to_vec(), y[dim..].to_vec())
        .map_err(|_| CoreError::Domain(format!("trajectory left the finite domain at t = {t}")))
}

fn integrate_rk4(
    samples: &mut Vec<NewtonState>,
    s: f64,
    potential: &Potential,
    dt: f64,
    horizon: f64,
    output_dt: f64,
    reg_floor: f64,
) -> Result<()> {
    let state0 = samples[0].clone();
    let dim = state0.dim();
    let t0 = state0.t;
    let mut y: Vec<f64> = state0.x.iter().chain(&state0.xi).cloned().collect();
    let mut t_rel = 0.0;
    let n = 2 * dim;
    let (mut k1, mut k2, mut k3, mut k4) = (vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    let mut stage = vec![0.0; n];
    for end in output_segments(horizon, output_dt) {
        let span = end - t_rel;
        let m = (span / dt).ceil().max(1.0) as usize;
        let h = span / m as f64;
        for _ in 0..m {
            deriv_flat(&y, dim, s, potential, reg_floor, &mut k1);
            for i in 0..n {
                stage[i] = y[i] + 0.5 * h * k1[i];
            }
            deriv_flat(&stage, dim, s, potential, reg_floor, &mut k2);
            for i in 0..n {
                stage[i] = y[i] + 0.5 * h * k2[i];
            }
            deriv_flat(&stage, dim, s, potential, reg_floor, &mut k3);
            for i in 0..n {
                stage[i] = y[i] + h * k3[i];
            }
            deriv_flat(&stage, dim, s, potential, reg_floor, &mut k4);
            for i in 0..n {
                y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            }
            t_rel += h;
            let st = state_from_flat(t0 + t_rel, &y, dim)?;
            check_degeneracy(st.t, &st, s, potential, reg_floor)?;
        }
        t_rel = end;
        samples.push(state_from_flat(t0 + end, &y, dim)?);
    }
    Ok(())
}

// Dormand–Prince 5(4) tableau.
const DP_C: [f64; 6] = [0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const DP_A: [&[f64]; 6] = [
    &[0.2],
    &[3.0 / 40.0, 9.0 / 40.0],
    &[44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0],
    &[19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0],
    &[9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0],
    &[35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const DP_B5: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
const DP_B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    0.025,
];

fn integrate_rk45(
    samples: &mut Vec<NewtonState>,
    s: f64,
    potential: &Potential,
    tol: f64,
    horizon: f64,
    output_dt: f64,
    reg_floor: f64,
) -> Result<()> {
    let state0 = samples[0].clone();
    let dim = state0.dim();
    let t0 = state0.t;
    let n = 2 * dim;
    let mut y: Vec<f64> = state0.x.iter().chain(&state0.xi).cloned().collect();
    let mut f = vec![0.0; n];
    deriv_flat(&y, dim, s, potential, reg_floor, &mut f);

    let outputs = output_segments(horizon, output_dt);
    let mut next_out = 0usize;
    let dt_min = 1e-13 * horizon.max(1.0);
    let mut dt = (output_dt.min(horizon / 100.0)).max(10.0 * dt_min);
    let mut t_rel = 0.0;
    let mut k = vec![vec![0.0; n]; 7];
    let mut stage = vec![0.0; n];
    let mut y5 = vec![0.0; n];
    let mut steps = 0usize;

    while t_rel < horizon - 1e-12 * horizon.max(1.0) {
        steps += 1;
        if steps > 20_000_000 {
            return Err(CoreError::NonConvergence {
                iterations: steps,
                last_delta: dt,
                history: vec![],
            });
        }
        dt = dt.min(horizon - t_rel);
        k[0].copy_from_slice(&f);
        for stage_idx in 0..6 {
            for i in 0..n {
                let mut acc = 0.0;
                for (j, a) in DP_A[stage_idx].iter().enumerate() {
                    acc += a * k[j][i];
                }
                stage[i] = y[i] + dt * acc;
            }
            deriv_flat(&stage, dim, s, potential, reg_floor, &mut k[stage_idx + 1]);
            let _ = DP_C; // stage times unused: the flow is autonomous
        }
        // fifth-order candidate and embedded error
        let mut err_norm = 0.0_f64;
        for i in 0..n {
            let mut acc5 = 0.0;
            let mut acc_err = 0.0;
            for j in 0..7 {
                acc5 += DP_B5[j] * k[j][i];
                acc_err += (DP_B5[j] - DP_B4[j]) * k[j][i];
            }
            y5[i] = y[i] + dt * acc5;
            let scale = tol * (1.0 + y[i].abs().max(y5[i].abs()));
            err_norm = err_norm.max((dt * acc_err).abs() / scale);
        }

        if err_norm <= 1.0 {
            // accepted; k[6] is the derivative at (t+dt, y5) — FSAL
            let t_new = t_rel + dt;
            while next_out < outputs.len() && outputs[next_out] <= t_new + 1e-12 * horizon.max(1.0)
            {
                let target = outputs[next_out];
                let theta = ((target - t_rel) / dt).clamp(0.0, 1.0);
                let (h00, h10, h01, h11) = hermite_basis(theta);
                let interp: Vec<f64> = (0..n)
                    .map(|i| h00 * y[i] + h10 * dt * f[i] + h01 * y5[i] + h11 * dt * k[6][i])
                    .collect();
                samples.push(state_from_flat(t0 + target, &interp, dim)?);
                next_out += 1;
            }
            y.copy_from_slice(&y5);
            f.copy_from_slice(&k[6]);
            t_rel = t_new;
            let st = state_from_flat(t0 + t_rel, &y, dim)?;
            check_degeneracy(st.t, &st, s, potential, reg_floor)?;
        }

        let factor = if err_norm == 0.0 {
            5.0
        } else {
            (0.9 * err_norm.powf(-0.2)).clamp(0.2, 5.0)
        };
        dt *= factor;
        if dt < dt_min {
            let speed = y[dim..].iter().map(|v| v * v).sum::<f64>().sqrt();
            return Err(CoreError::NonLipschitzStall { t: t0 + t_rel, speed });
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn harmonic_data() -> NewtonState {
        NewtonState::new(0.0, vec![1.0, 1.0], vec![1.0, 0.5]).unwrap()
    }

    /// `ẍ₁ = −x₁`, `ẍ₂ = −4x₂` with the data above.
    fn closed_form(t: f64) -> [f64; 2] {
        [
            t.cos() + t.sin(),
            (2.0 * t).cos() + 0.25 * (2.0 * t).sin(),
        ]
    }

    #[test]
    fn potential_gradients_match_central_differences() {
        let probes2: Vec<Vec<f64>> = vec![
            vec![0.3, -1.2],
            vec![-0.7, 0.4],
            vec![1.5, 2.0],
            vec![0.0, 0.0],
        ];
        let probes1: Vec<Vec<f64>> = vec![vec![0.9], vec![-1.4], vec![0.0], vec![2.3]];
        assert!(Potential::Harmonic2d.gradient_consistency(&probes2).unwrap() <= 1e-6);
        assert!(Potential::Quadratic.gradient_consistency(&probes2).unwrap() <= 1e-6);
        assert!(Potential::Quadratic.gradient_consistency(&probes1).unwrap() <= 1e-6);
        let poly = Potential::Poly(vec![0.0, 0.0, 0.5, 0.25]);
        assert!(poly.gradient_consistency(&probes1).unwrap() <= 1e-6);
        assert!(poly.gradient_consistency(&probes2).unwrap() <= 1e-6);
        // dimension contract is enforced
        assert!(Potential::Harmonic2d.gradient_consistency(&probes1).is_err());
    }

    #[test]
    fn rhs_endpoints_match_the_closed_forms() {
        // s = 1: exactly the classical anisotropic oscillator force
        let st = harmonic_data();
        let (dx, dxi) = rhs(&st, 1.0, &Potential::Harmonic2d);
        assert_eq!(dx, vec![1.0, 0.5]);
        assert_eq!(dxi, vec![-1.0, -4.0]);

        // s < 1, ξ = 0: bitwise stationary
        let frozen = NewtonState::new(0.0, vec![0.8, -0.6], vec![0.0, 0.0]).unwrap();
        let (_, dxi) = rhs(&frozen, 0.5, &Potential::Harmonic2d);
        assert!(dxi.iter().all(|v| v.to_bits() == 0));

        // s = 1, ξ = 0: only the trivial equilibrium survives
        let (_, dxi) = rhs(&frozen, 1.0, &Potential::Harmonic2d);
        assert_eq!(dxi, vec![-0.8, 2.4]);
    }

    proptest! {
        #[test]
        fn stationary_family_is_bitwise_fixed(
            x in proptest::collection::vec(-10.0..10.0f64, 1..3),
            s in 0.05..0.999f64,
        ) {
            let dim = x.len();
            let st = NewtonState::new(0.0, x, vec![0.0; dim]).unwrap();
            let (dx, dxi) = rhs(&st, s, &Potential::Quadratic);
            prop_assert!(dx.iter().all(|v| v.to_bits() == 0));
            prop_assert!(dxi.iter().all(|v| v.to_bits() == 0));
        }
    }

    #[test]
    fn rk4_reproduces_the_classical_oscillator() {
        let traj = integrate(
            &harmonic_data(),
            1.0,
            &Potential::Harmonic2d,
            Method::Rk4 { dt: 1e-3 },
            10.0,
            0.05,
            0.0,
        )
        .unwrap();
        let worst = traj
            .samples()
            .iter()
            .map(|st| {
                let exact = closed_form(st.t);
                (st.x[0] - exact[0]).abs().max((st.x[1] - exact[1]).abs())
            })
            .fold(0.0, f64::max);
        assert!(worst <= 1e-8, "deviation {worst}");
        assert!(traj.energy_drift() <= 1e-10, "drift {}", traj.energy_drift());
    }

    #[test]
    fn rk45_dense_output_matches_the_oscillator() {
        let traj = integrate(
            &harmonic_data(),
            1.0,
            &Potential::Harmonic2d,
            Method::Rk45 { tol: 1e-10 },
            10.0,
            0.037, // deliberately incommensurate with the step sequence
            0.0,
        )
        .unwrap();
        let worst = traj
            .samples()
            .iter()
            .map(|st| {
                let exact = closed_form(st.t);
                (st.x[0] - exact[0]).abs().max((st.x[1] - exact[1]).abs())
            })
            .fold(0.0, f64::max);
        assert!(worst <= 1e-8, "deviation {worst}");
        // uniform cadence with the partial tail, ending exactly at T
        let ts: Vec<f64> = traj.samples().iter().map(|s| s.t).collect();
        assert!((ts.last().unwrap() - 10.0).abs() <= 1e-12);
        for w in ts.windows(2) {
            assert!(w[1] > w[0], "samples out of order");
        }
        for (k, t) in ts.iter().enumerate().take(ts.len() - 1) {
            assert!((t - 0.037 * k as f64).abs() <= 1e-9, "cadence broken at {k}");
        }
    }

    #[test]
    fn energy_is_conserved_along_the_fractional_flow() {
        let traj = integrate(
            &harmonic_data(),
            0.75,
            &Potential::Harmonic2d,
            Method::Rk4 { dt: 1e-3 },
            20.0,
            0.1,
            0.0,
        )
        .unwrap();
        assert!(traj.energy_drift() <= 1e-7, "rk4 drift {}", traj.energy_drift());

        let traj = integrate(
            &harmonic_data(),
            0.75,
            &Potential::Harmonic2d,
            Method::Rk45 { tol: 1e-10 },
            20.0,
            0.1,
            0.0,
        )
        .unwrap();
        assert!(traj.energy_drift() <= 1e-7, "rk45 drift {}", traj.energy_drift());
    }

    #[test]
    fn time_reversal_returns_to_the_start() {
        let forward = integrate(
            &harmonic_data(),
            0.5,
            &Potential::Harmonic2d,
            Method::Rk4 { dt: 1e-3 },
            5.0,
            0.5,
            0.0,
        )
        .unwrap();
        let end = forward.final_state();
        let flipped = NewtonState::new(
            0.0,
            end.x.clone(),
            end.xi.iter().map(|v| -v).collect(),
        )
        .unwrap();
        let back = integrate(
            &flipped,
            0.5,
            &Potential::Harmonic2d,
            Method::Rk4 { dt: 1e-3 },
            5.0,
            0.5,
            0.0,
        )
        .unwrap();
        let ret = back.final_state();
        let start = harmonic_data();
        let gap = (0..2)
            .map(|j| {
                (ret.x[j] - start.x[j])
                    .abs()
                    .max((ret.xi[j] + start.xi[j]).abs())
            })
            .fold(0.0, f64::max);
        // one-way rk4 error is ~1e−11 here; 100× headroom
        assert!(gap <= 1e-8, "return gap {gap}");
    }

    #[test]
    fn stationary_states_stay_put_bitwise() {
        let frozen = NewtonState::new(0.0, vec![0.7, -0.3], vec![0.0, 0.0]).unwrap();
        for method in [Method::Rk4 { dt: 1e-2 }, Method::Rk45 { tol: 1e-8 }] {
            let traj = integrate(&frozen, 0.5, &Potential::Quadratic, method, 3.0, 0.5, 0.0)
                .unwrap();
            for st in traj.samples() {
                assert_eq!(st.x, frozen.x, "position moved under {method:?}");
                assert!(st.xi.iter().all(|v| *v == 0.0));
            }
        }
    }

    #[test]
    fn figure_trajectories_complete_and_stay_bounded() {
        // the two published data sets, at the two fractional exponents
        // shown in the phase portraits; T = 50 like the figure runs
        for s in [0.5, 0.25] {
            for (a, b) in [(1.0, 0.5), (0.5, 1.0)] {
                let data = NewtonState::new(0.0, vec![1.0, a], vec![1.0, b]).unwrap();
                let traj = integrate(
                    &data,
                    s,
                    &Potential::Harmonic2d,
                    Method::Rk45 { tol: 1e-10 },
                    50.0,
                    0.05,
                    0.0,
                )
                .unwrap();
                assert!(
                    traj.energy_drift() <= 1e-6,
                    "s={s} (a,b)=({a},{b}): drift {}",
                    traj.energy_drift()
                );
                // conservation bounds the orbit: V(x) ≤ ℋ̃(0)
                let h0 = traj.energies()[0];
                for st in traj.samples() {
                    assert!(st.x[0].abs() <= (2.0 * h0).sqrt() + 1e-6);
                    assert!(st.x[1].abs() <= (h0 / 2.0).sqrt() + 1e-6);
                }
            }
        }
    }

    #[test]
    fn degenerate_velocity_aborts_unless_floored() {
        // almost-zero velocity against a live force, in the s > ½
        // regime where uniqueness can fail
        let trapped = NewtonState::new(0.0, vec![1.0], vec![1e-14]).unwrap();
        let err = integrate(
            &trapped,
            0.9,
            &Potential::Quadratic,
            Method::Rk45 { tol: 1e-8 },
            1.0,
            0.1,
            0.0,
        )
        .unwrap_err();
        assert!(
            matches!(err, CoreError::NonLipschitzStall { .. }),
            "got {err:?}"
        );

        // the same run with a regularizing floor proceeds, and the
        // floor is recorded on the trajectory
        let traj = integrate(
            &trapped,
            0.9,
            &Potential::Quadratic,
            Method::Rk45 { tol: 1e-8 },
            1.0,
            0.1,
            1e-6,
        )
        .unwrap();
        assert_eq!(traj.reg_floor(), 1e-6);
        assert_eq!(traj.final_state().t, 1.0);

        // s ≤ ½ is globally Lipschitz: same data, no abort
        let traj = integrate(
            &trapped,
            0.5,
            &Potential::Quadratic,
            Method::Rk45 { tol: 1e-8 },
            1.0,
            0.1,
            0.0,
        )
        .unwrap();
        assert_eq!(traj.final_state().t, 1.0);
    }

    #[test]
    fn cadence_survives_a_non_dividing_step() {
        let traj = integrate(
            &harmonic_data(),
            1.0,
            &Potential::Harmonic2d,
            Method::Rk4 { dt: 3e-3 },
            1.0,
            1e-2,
            0.0,
        )
        .unwrap();
        let ts: Vec<f64> = traj.samples().iter().map(|s| s.t).collect();
        assert_eq!(ts.len(), 101);
        for (k, t) in ts.iter().enumerate() {
            assert!((t - 0.01 * k as f64).abs() <= 1e-12, "sample {k} at {t}");
        }
    }

    #[test]
    fn position_interpolation_matches_the_closed_form() {
        let traj = integrate(
            &harmonic_data(),
            1.0,
            &Potential::Harmonic2d,
            Method::Rk4 { dt: 1e-3 },
            10.0,
            0.1,
            0.0,
        )
        .unwrap();
        let mut worst = 0.0_f64;
        for k in 0..200 {
            let t = 10.0 * (k as f64 + 0.37) / 200.0;
            let x = traj.position_at(t).unwrap();
            let exact = closed_form(t);
            worst = worst.max((x[0] - exact[0]).abs().max((x[1] - exact[1]).abs()));
        }
        // cubic Hermite on a 0.1 grid: error ~ |x⁗|·h⁴/384 ≈ 4e−6
        assert!(worst <= 1e-5, "interpolation error {worst}");
        assert!(traj.position_at(-0.5).is_err());
        assert!(traj.position_at(10.5).is_err());
    }

    #[test]
    fn integrate_validates_its_inputs() {
        let st = harmonic_data();
        let p = Potential::Harmonic2d;
        let m = Method::Rk4 { dt: 1e-2 };
        assert!(integrate(&st, 0.0, &p, m, 1.0, 0.1, 0.0).is_err());
        assert!(integrate(&st, 1.5, &p, m, 1.0, 0.1, 0.0).is_err());
        assert!(integrate(&st, 1.0, &p, m, -1.0, 0.1, 0.0).is_err());
        assert!(integrate(&st, 1.0, &p, m, 1.0, 0.0, 0.0).is_err());
        assert!(integrate(&st, 1.0, &p, m, 1.0, 0.1, -1.0).is_err());
        assert!(integrate(&st, 1.0, &p, Method::Rk4 { dt: 0.0 }, 1.0, 0.1, 0.0).is_err());
        assert!(integrate(&st, 1.0, &p, Method::Rk45 { tol: 0.0 }, 1.0, 0.1, 0.0).is_err());
        let one_d = NewtonState::new(0.0, vec![1.0], vec![0.5]).unwrap();
        assert!(integrate(&one_d, 1.0, &p, m, 1.0, 0.1, 0.0).is_err());
        assert!(NewtonState::new(0.0, vec![1.0], vec![1.0, 2.0]).is_err());
        assert!(NewtonState::new(0.0, vec![f64::NAN], vec![1.0]).is_err());
    }
}

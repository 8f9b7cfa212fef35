//! Ground states of `½(−Δ)^s Q + Q = Q^{2p+1}` and the identities they
//! satisfy.
//!
//! Two independent solvers are provided: a Petviashvili fixed-point
//! iteration and a mass-constrained preconditioned gradient flow. Their
//! agreement is part of the test suite (the equation's ground state is
//! unique up to symmetries, so both must land on the same profile).
//!
//! Alongside the solvers live the variational functionals (energy,
//! action, Weinstein quotient), the Pohozaev/Nehari/action-level
//! identity checks, spectral rescaling `u ↦ μu(λ·)` with its scaling
//! relations, and a tail-decay fit that distinguishes the algebraic
//! decay of genuinely fractional ground states from the exponential
//! decay at `s = 1`.

use crate::error::{CoreError, Result};
use crate::field::{ComplexField, RealField};
use crate::grid::SpectralGrid;
use crate::spectral;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Margin for the strict subcriticality requirement `p < 2s/N`.
const ADMISSIBILITY_MARGIN: f64 = 1e-9;

#[derive(Debug, Clone, Copy)]
pub struct GroundStateProblem {
    grid: SpectralGrid,
    s: f64,
    p: f64,
}

impl GroundStateProblem {
    /// A ground-state problem on `grid` with operator order `s ∈ (0,1]`
    /// and nonlinearity exponent `0 < p < 2s/N` (strictly, with a small
    /// margin; supercritical requests are rejected, not attempted).
    pub fn new(grid: SpectralGrid, s: f64, p: f64) -> Result<Self> {
        spectral::check_s_closed(s)?;
        if !p.is_finite() || p <= 0.0 {
            return Err(CoreError::Domain(format!(
                "nonlinearity exponent p must be positive, got {p}"
            )));
        }
        let critical = 2.0 * s / grid.dim() as f64;
        if p >= critical - ADMISSIBILITY_MARGIN {
            return Err(CoreError::Domain(format!(
                "supercritical nonlinearity: need p < 2s/N = {critical}, got p = {p}"
            )));
        }
        Ok(Self { grid, s, p })
    }

    pub fn grid(&self) -> &SpectralGrid {
        &self.grid
    }

    pub fn s(&self) -> f64 {
        self.s
    }

    pub fn p(&self) -> f64 {
        self.p
    }
}

/// Relative residuals of the action-level identities satisfied by a
/// ground state with action `m = I(Q)`:
/// `‖(−Δ)^{s/2}Q‖₂² = 2Nm/s`, `‖Q‖₂² = m(2s(p+1) − Np)/(sp)`,
/// `‖Q‖_{2p+2}^{2p+2} = 2m(p+1)/p`, the same mass relation recomputed
/// from `m = ½(1 − 1/(p+1))‖Q‖_{H^s}²`, and the action ↔ energy
/// correspondence `c(m)` against `½𝓔(Q)`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ActionIdentities {
    pub seminorm_sq_rel: f64,
    pub mass_rel: f64,
    pub lp_norm_rel: f64,
    pub constraint_mass_rel: f64,
    pub correspondence_rel: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct IdentityReport {
    pub pohozaev_rel: f64,
    pub nehari_rel: f64,
    pub action: ActionIdentities,
}

#[derive(Debug, Clone)]
pub struct GroundStateResult {
    /// The recentered, positive profile.
    pub q: RealField,
    /// L² norm of `½(−Δ)^s Q + Q − Q^{2p+1}`.
    pub residual: f64,
    /// `‖Q‖₂²`.
    pub mass: f64,
    /// `I(Q) = ½𝓔(Q) + ½‖Q‖₂²`.
    pub action: f64,
    /// `𝓔(Q)`.
    pub energy: f64,
    pub identity_report: IdentityReport,
    pub iterations: usize,
}

fn relative_gap(a: f64, b: f64) -> f64 {
    let scale = a.abs().max(b.abs());
    if scale == 0.0 {
        0.0
    } else {
        (a - b).abs() / scale
    }
}

/// `𝓔(u) = ½‖(−Δ)^{s/2}u‖₂² − (1/(p+1))‖u‖_{2p+2}^{2p+2}`.
pub fn energy(u: &ComplexField, s: f64, p: f64) -> Result<f64> {
    let semi_sq = spectral::half_seminorm_sq(u, s)?;
    let lp = spectral::lp_norm(u, 2.0 * p + 2.0)?;
    Ok(0.5 * semi_sq - lp.powf(2.0 * p + 2.0) / (p + 1.0))
}

/// `I(u) = ½𝓔(u) + ½‖u‖₂²`.
pub fn action(u: &ComplexField, s: f64, p: f64) -> Result<f64> {
    Ok(0.5 * energy(u, s, p)? + 0.5 * spectral::mass(u))
}

/// `⟨I′(u), u⟩ = ‖u‖_{H^s}² − ‖u‖_{2p+2}^{2p+2}` — zero exactly on the
/// Nehari manifold.
pub fn nehari_defect(u: &ComplexField, s: f64, p: f64) -> Result<f64> {
    let hs = spectral::hs_norm_sq(u, s)?;
    let lp = spectral::lp_norm(u, 2.0 * p + 2.0)?.powf(2.0 * p + 2.0);
    Ok(hs - lp)
}

/// Relative residual of `‖u‖₂² + ½‖(−Δ)^{s/2}u‖₂² = ‖u‖_{2p+2}^{2p+2}`.
///
/// Uses the plain grid norms: pairing the discrete equation with `Q`
/// makes this identity exact on the grid, independent of box size.
pub fn nehari_residual(u: &ComplexField, s: f64, p: f64) -> Result<f64> {
    let hs = spectral::hs_norm_sq(u, s)?;
    let lp = spectral::lp_norm(u, 2.0 * p + 2.0)?.powf(2.0 * p + 2.0);
    Ok(relative_gap(hs, lp))
}

/// Residual of `((N−2s)/4)‖(−Δ)^{s/2}u‖₂² + (N/2)‖u‖₂²
/// = (N/(2p+2))‖u‖_{2p+2}^{2p+2}`, normalized by the largest term.
///
/// This identity comes from dilations of the whole-line problem, so the
/// seminorm is taken in its line-corrected form.
pub fn pohozaev_residual(u: &ComplexField, s: f64, p: f64) -> Result<f64> {
    let n = u.grid().dim() as f64;
    let t1 = (n - 2.0 * s) / 4.0 * spectral::half_seminorm_sq_line(u, s)?;
    let t2 = n / 2.0 * spectral::mass(u);
    let t3 = n / (2.0 * p + 2.0) * spectral::lp_norm(u, 2.0 * p + 2.0)?.powf(2.0 * p + 2.0);
    let scale = t1.abs().max(t2.abs()).max(t3.abs());
    if scale == 0.0 {
        return Ok(0.0);
    }
    Ok((t1 + t2 - t3).abs() / scale)
}

/// The action-level identity residuals for a converged profile. Like
/// the Pohozaev check these are whole-line statements, so all norms here
/// use the line-corrected seminorm.
pub fn action_identities(u: &ComplexField, s: f64, p: f64) -> Result<ActionIdentities> {
    let n = u.grid().dim() as f64;
    let semi_sq = spectral::half_seminorm_sq_line(u, s)?;
    let mass = spectral::mass(u);
    let lp = spectral::lp_norm(u, 2.0 * p + 2.0)?.powf(2.0 * p + 2.0);
    let energy_line = 0.5 * semi_sq - lp / (p + 1.0);
    let m = 0.5 * energy_line + 0.5 * mass;

    let seminorm_sq_rel = relative_gap(semi_sq, 2.0 * n * m / s);
    let mass_rel = relative_gap(mass, m * (2.0 * s * (p + 1.0) - n * p) / (s * p));
    let lp_norm_rel = relative_gap(lp, 2.0 * m * (p + 1.0) / p);

    // Same mass relation, with the action recomputed from the H^s norm:
    // m = I(u) − (1/(2p+2))⟨I′(u),u⟩ = ½(1 − 1/(p+1))‖u‖_{H^s}².
    let m_hs = 0.5 * (1.0 - 1.0 / (p + 1.0)) * (mass + 0.5 * semi_sq);
    let constraint_mass_rel =
        relative_gap(mass, m_hs * (2.0 * s * (p + 1.0) - n * p) / (s * p));

    // Action ↔ energy correspondence: the constrained critical value of
    // ½𝓔 on the sphere ‖u‖₂² = γ, expressed through m and γ, must equal
    // ½𝓔(u) when γ is the measured mass.
    let beta = 2.0 * s * p / (2.0 * s - n * p);
    let c = (n / (2.0 * s) - 1.0 / p)
        * (mass * s * p / (2.0 * (p + 1.0) * s - n * p)).powf(1.0 + beta)
        * m.powf(-beta);
    let correspondence_rel = relative_gap(c, 0.5 * energy_line);

    Ok(ActionIdentities {
        seminorm_sq_rel,
        mass_rel,
        lp_norm_rel,
        constraint_mass_rel,
        correspondence_rel,
    })
}

pub fn identity_report(q: &RealField, s: f64, p: f64) -> Result<IdentityReport> {
    let u = q.to_complex();
    Ok(IdentityReport {
        pohozaev_rel: pohozaev_residual(&u, s, p)?,
        nehari_rel: nehari_residual(&u, s, p)?,
        action: action_identities(&u, s, p)?,
    })
}

/// The interpolation quotient minimized by the ground state. In one
/// dimension this is
/// `J^{s,p}(u) = (‖(−Δ)^{s/2}u‖₂²)^{p/(2s)} (‖u‖₂²)^{(p/(2s))(2s−1)+1} / ‖u‖_{2p+2}^{2p+2}`;
/// the exponents generalize to `Np/(2s)` and `p+1−Np/(2s)` so that the
/// quotient stays invariant under `u ↦ μu(λ·)` in every dimension.
pub fn weinstein_functional(u: &ComplexField, s: f64, p: f64) -> Result<f64> {
    let n = u.grid().dim() as f64;
    let lp = spectral::lp_norm(u, 2.0 * p + 2.0)?.powf(2.0 * p + 2.0);
    if lp == 0.0 {
        return Err(CoreError::Domain(
            "Weinstein quotient undefined for the zero field".into(),
        ));
    }
    let a = n * p / (2.0 * s);
    let b = p + 1.0 - a;
    // line-corrected seminorm: dilation invariance of the quotient is a
    // whole-line property
    let semi_sq = spectral::half_seminorm_sq_line(u, s)?;
    let mass = spectral::mass(u);
    Ok(semi_sq.powf(a) * mass.powf(b) / lp)
}

/// L² norm of the equation residual `½(−Δ)^s Q + Q − |Q|^{2p} Q`.
pub fn equation_residual(q: &RealField, s: f64, p: f64) -> Result<f64> {
    let u = q.to_complex();
    let frac = spectral::fractional_laplacian(&u, s)?;
    let mut r = ComplexField::zeros(*q.grid());
    for (((ri, &ui), &fi), &qi) in r
        .values_mut()
        .iter_mut()
        .zip(u.values())
        .zip(frac.values())
        .zip(q.values())
    {
        let nonlin = qi.abs().powf(2.0 * p) * qi;
        *ri = 0.5 * fi + ui - Complex64::new(nonlin, 0.0);
    }
    Ok(spectral::l2_norm(&r))
}

fn signed_power(q: f64, two_p: f64) -> f64 {
    q.abs().powf(two_p) * q
}

/// Shift a profile so that the center of mass of `q²` sits at the grid
/// origin: the integer part of the shift is a exact index roll, the
/// sub-grid remainder a Fourier phase shift.
pub fn recenter_peak(q: &RealField) -> Result<RealField> {
    let grid = *q.grid();
    let dim = grid.dim();
    let n = grid.n();
    let h = grid.spacing();
    let weights: Vec<f64> = q.values().iter().map(|v| v * v).collect();
    let total: f64 = weights.iter().sum();
    if total == 0.0 {
        return Ok(q.clone());
    }
    let mut center = vec![0.0; dim];
    for (i, w) in weights.iter().enumerate() {
        let x = grid.coord(i);
        for (c, xi) in center.iter_mut().zip(&x) {
            *c += w * xi;
        }
    }
    for c in center.iter_mut() {
        *c /= total;
    }

    let cells: Vec<i64> = center.iter().map(|c| (c / h).round() as i64).collect();
    let mut rolled = vec![0.0; grid.len()];
    match dim {
        1 => {
            for (j, r) in rolled.iter_mut().enumerate() {
                let src = (j as i64 + cells[0]).rem_euclid(n as i64) as usize;
                *r = q.values()[src];
            }
        }
        2 => {
            for j1 in 0..n {
                let s1 = (j1 as i64 + cells[0]).rem_euclid(n as i64) as usize;
                for j2 in 0..n {
                    let s2 = (j2 as i64 + cells[1]).rem_euclid(n as i64) as usize;
                    rolled[j1 * n + j2] = q.values()[s1 * n + s2];
                }
            }
        }
        _ => unreachable!(),
    }
    let snapped = RealField::new(grid, rolled)?;
    let residual: Vec<f64> = center
        .iter()
        .zip(&cells)
        .map(|(c, k)| -(c - *k as f64 * h))
        .collect();
    snapped.translated(&residual)
}

fn gaussian_init(grid: SpectralGrid) -> RealField {
    RealField::from_fn(grid, |x| {
        let r2: f64 = x.iter().map(|xi| xi * xi).sum();
        (-0.5 * r2).exp()
    })
}

/// One Petviashvili update `Q ↦ S^γ (½(−Δ)^s + 1)^{−1}(|Q|^{2p}Q)` with
/// `S = ⟨(½(−Δ)^s+1)Q, Q⟩ / ‖Q‖_{2p+2}^{2p+2}` and `γ = (2p+1)/(2p)`.
/// Returns the next iterate and the sup-norm change.
pub fn petviashvili_step(
    problem: &GroundStateProblem,
    q: &RealField,
) -> Result<(RealField, f64)> {
    let (s, p) = (problem.s, problem.p);
    let u = q.to_complex();
    let quad = 0.5 * spectral::half_seminorm_sq(&u, s)? + spectral::mass(&u);
    let denom = spectral::lp_norm(&u, 2.0 * p + 2.0)?.powf(2.0 * p + 2.0);
    if denom == 0.0 {
        return Err(CoreError::Domain(
            "Petviashvili step on an identically zero iterate".into(),
        ));
    }
    let stab = (quad / denom).powf((2.0 * p + 1.0) / (2.0 * p));

    let mut w = ComplexField::zeros(problem.grid);
    for (wi, &qi) in w.values_mut().iter_mut().zip(q.values()) {
        *wi = Complex64::new(signed_power(qi, 2.0 * p), 0.0);
    }
    let z = spectral::apply_symbol(&w, |k_sq| 1.0 / (1.0 + 0.5 * k_sq.powf(s)));
    let next: Vec<f64> = z.values().iter().map(|v| stab * v.re).collect();
    let delta = next
        .iter()
        .zip(q.values())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    Ok((RealField::new(problem.grid, next)?, delta))
}

/// Solve the ground-state equation by Petviashvili iteration from a
/// unit-height Gaussian. Stops once the sup-norm change per step and
/// the equation residual both fall below `tol` (or the iteration hits
/// the roundoff floor).
pub fn solve_petviashvili(
    problem: &GroundStateProblem,
    tol: f64,
    max_iter: usize,
) -> Result<GroundStateResult> {
    if !(tol > 0.0) {
        return Err(CoreError::Domain(format!("tolerance must be positive, got {tol}")));
    }
    let (s, p) = (problem.s, problem.p);
    let mut q = gaussian_init(problem.grid);
    let mut history = Vec::new();
    let mut iterations = 0;
    loop {
        if iterations >= max_iter {
            let last = history.last().copied().unwrap_or(f64::NAN);
            return Err(CoreError::NonConvergence {
                iterations,
                last_delta: last,
                history,
            });
        }
        let (next, delta) = petviashvili_step(problem, &q)?;
        q = next;
        iterations += 1;
        history.push(delta);
        let floor = 100.0 * f64::EPSILON * q.max_abs();
        if delta <= tol {
            if equation_residual(&q, s, p)? <= tol || delta <= floor {
                break;
            }
        } else if delta <= floor {
            break;
        }
    }

    let q = recenter_peak(&q)?;
    let min_value = q.values().iter().cloned().fold(f64::INFINITY, f64::min);
    // Sub-grid recentering may ring at the −1e−15 level; anything beyond
    // that means the iteration left the positive cone.
    if min_value < -1e-10 * q.max_abs() {
        return Err(CoreError::PositivityViolation { min_value });
    }

    let u = q.to_complex();
    Ok(GroundStateResult {
        residual: equation_residual(&q, s, p)?,
        mass: spectral::mass(&u),
        action: action(&u, s, p)?,
        energy: energy(&u, s, p)?,
        identity_report: identity_report(&q, s, p)?,
        iterations,
        q,
    })
}

/// Mass-constrained minimization of `𝓔`: preconditioned gradient steps
/// `u ← u − τ (1 + ½(−Δ)^s)^{−1} ∇𝓔(u)` followed by L² renormalization
/// to `target_mass`, with step halving whenever the energy increases.
/// Terminates when the sphere-projected gradient norm falls below `tol`.
pub fn solve_constrained_flow(
    problem: &GroundStateProblem,
    target_mass: f64,
    tol: f64,
) -> Result<RealField> {
    if !(target_mass > 0.0 && target_mass.is_finite()) {
        return Err(CoreError::Domain(format!(
            "target mass must be positive, got {target_mass}"
        )));
    }
    if !(tol > 0.0) {
        return Err(CoreError::Domain(format!("tolerance must be positive, got {tol}")));
    }
    let (s, p) = (problem.s, problem.p);
    const MAX_OUTER: usize = 100_000;
    const MIN_STEP: f64 = 1e-12;

    let renormalize = |q: &RealField| -> Result<RealField> {
        let m = spectral::mass(&q.to_complex());
        if m == 0.0 {
            return Err(CoreError::Domain("flow iterate collapsed to zero".into()));
        }
        Ok(q.scaled((target_mass / m).sqrt()))
    };

    let gradient = |q: &RealField| -> Result<RealField> {
        let u = q.to_complex();
        let frac = spectral::fractional_laplacian(&u, s)?;
        let vals: Vec<f64> = frac
            .values()
            .iter()
            .zip(q.values())
            .map(|(f, &qi)| f.re - 2.0 * signed_power(qi, 2.0 * p))
            .collect();
        RealField::new(*q.grid(), vals)
    };

    let mut u = renormalize(&gaussian_init(problem.grid))?;
    let mut e = energy(&u.to_complex(), s, p)?;
    let mut tau = 0.5;
    for _ in 0..MAX_OUTER {
        let g = gradient(&u)?;
        let along = spectral::inner_l2(&g.to_complex(), &u.to_complex())? / target_mass;
        let proj: Vec<f64> = g
            .values()
            .iter()
            .zip(u.values())
            .map(|(gi, ui)| gi - along * ui)
            .collect();
        let proj = RealField::new(problem.grid, proj)?;
        let grad_norm = spectral::l2_norm(&proj.to_complex());
        if grad_norm <= tol {
            return Ok(u);
        }
        let descent = spectral::apply_symbol(&proj.to_complex(), |k_sq| {
            1.0 / (1.0 + 0.5 * k_sq.powf(s))
        });
        loop {
            let vals: Vec<f64> = u
                .values()
                .iter()
                .zip(descent.values())
                .map(|(ui, di)| ui - tau * di.re)
                .collect();
            let cand = renormalize(&RealField::new(problem.grid, vals)?)?;
            let ec = energy(&cand.to_complex(), s, p)?;
            if ec <= e + 1e-13 * e.abs().max(1.0) {
                u = cand;
                e = ec;
                tau = (tau * 1.25).min(1.0);
                break;
            }
            tau *= 0.5;
            if tau < MIN_STEP {
                return Err(CoreError::Stagnation {
                    step: tau,
                    grad_norm,
                });
            }
        }
    }
    Err(CoreError::NonConvergence {
        iterations: MAX_OUTER,
        last_delta: f64::NAN,
        history: Vec::new(),
    })
}

#[derive(Debug, Clone)]
pub struct Rescaled {
    pub field: ComplexField,
    /// Set when the dilated profile leaves the resolved band (λ > 1
    /// pushing spectral content past the Nyquist wavenumber) or fails
    /// to decay by the box boundary.
    pub aliasing_warning: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScalingCheck {
    pub l2_rel: f64,
    pub lp_norm_rel: f64,
    pub seminorm_sq_rel: f64,
    pub aliasing_warning: bool,
}

fn axis_basis(grid: &SpectralGrid, lambda: f64) -> Vec<Complex64> {
    let n = grid.n();
    let l = grid.half_length();
    let mut basis = vec![Complex64::new(0.0, 0.0); n * n];
    for m in 0..n {
        let k = grid.axis_wavenumber(m);
        for j in 0..n {
            let y = lambda * grid.axis_coord(j) + l;
            basis[m * n + j] = if m == n / 2 {
                Complex64::new((k * y).cos(), 0.0)
            } else {
                Complex64::new(0.0, k * y).exp()
            };
        }
    }
    basis
}

/// `u^{μ,λ}(x) = μ u(λx)` by evaluating the band-limited interpolant on
/// the dilated grid (tensorized mode sums; exact for resolved content).
pub fn rescale(u: &ComplexField, mu: f64, lambda: f64) -> Result<Rescaled> {
    if !(lambda > 0.0 && lambda.is_finite()) || !mu.is_finite() {
        return Err(CoreError::Domain(format!(
            "rescale needs finite μ and λ > 0, got μ = {mu}, λ = {lambda}"
        )));
    }
    let grid = *u.grid();
    let n = grid.n();
    let field = if lambda == 1.0 {
        u.scaled(Complex64::new(mu, 0.0))
    } else {
        let coeffs = u.spectrum();
        let nf = grid.len() as f64;
        let values = match grid.dim() {
            1 => (0..n)
                .map(|j| {
                    let y = lambda * grid.axis_coord(j) + grid.half_length();
                    let mut acc = Complex64::new(0.0, 0.0);
                    for (m, c) in coeffs.iter().enumerate() {
                        let k = grid.axis_wavenumber(m);
                        let basis = if m == n / 2 {
                            Complex64::new((k * y).cos(), 0.0)
                        } else {
                            Complex64::new(0.0, k * y).exp()
                        };
                        acc += c * basis;
                    }
                    mu * acc / nf
                })
                .collect::<Vec<_>>(),
            2 => {
                let basis = axis_basis(&grid, lambda);
                // partial sums over the second axis, then the first
                let mut partial = vec![Complex64::new(0.0, 0.0); n * n];
                for m1 in 0..n {
                    for j2 in 0..n {
                        let mut acc = Complex64::new(0.0, 0.0);
                        for m2 in 0..n {
                            acc += coeffs[m1 * n + m2] * basis[m2 * n + j2];
                        }
                        partial[m1 * n + j2] = acc;
                    }
                }
                let mut out = vec![Complex64::new(0.0, 0.0); n * n];
                for j1 in 0..n {
                    for j2 in 0..n {
                        let mut acc = Complex64::new(0.0, 0.0);
                        for m1 in 0..n {
                            acc += partial[m1 * n + j2] * basis[m1 * n + j1];
                        }
                        out[j1 * n + j2] = mu * acc / nf;
                    }
                }
                out
            }
            _ => unreachable!(),
        };
        ComplexField::new(grid, values)?
    };

    let mut warning = false;
    if lambda > 1.0 {
        let radius = spectral::spectral_radius(u, 1e-10);
        if radius * lambda > grid.max_wavenumber() {
            warning = true;
        }
    }
    let peak = field.max_abs();
    if peak > 0.0 {
        let mut boundary = 0.0_f64;
        match grid.dim() {
            1 => boundary = field.values()[0].norm(),
            2 => {
                for j in 0..n {
                    boundary = boundary
                        .max(field.values()[j].norm())
                        .max(field.values()[j * n].norm());
                }
            }
            _ => unreachable!(),
        }
        if boundary > 1e-8 * peak {
            warning = true;
        }
    }
    Ok(Rescaled {
        field,
        aliasing_warning: warning,
    })
}

/// Verify the scaling relations `‖u^{μ,λ}‖₂² = μ²λ^{−N}‖u‖₂²`,
/// `‖u^{μ,λ}‖_{2p+2}^{2p+2} = μ^{2p+2}λ^{−N}‖u‖_{2p+2}^{2p+2}`, and
/// `‖(−Δ)^{s/2}u^{μ,λ}‖₂² = μ²λ^{2s−N}‖(−Δ)^{s/2}u‖₂²` by direct
/// recomputation on the rescaled field.
pub fn scaling_check(u: &ComplexField, mu: f64, lambda: f64, s: f64, p: f64) -> Result<ScalingCheck> {
    let n = u.grid().dim() as f64;
    let rescaled = rescale(u, mu, lambda)?;
    let v = &rescaled.field;
    let q = 2.0 * p + 2.0;
    let l2_rel = relative_gap(
        spectral::mass(v),
        mu * mu * lambda.powf(-n) * spectral::mass(u),
    );
    let lp_norm_rel = relative_gap(
        spectral::lp_norm(v, q)?.powf(q),
        mu.abs().powf(q) * lambda.powf(-n) * spectral::lp_norm(u, q)?.powf(q),
    );
    let seminorm_sq_rel = relative_gap(
        spectral::half_seminorm_sq_line(v, s)?,
        mu * mu * lambda.powf(2.0 * s - n) * spectral::half_seminorm_sq_line(u, s)?,
    );
    Ok(ScalingCheck {
        l2_rel,
        lp_norm_rel,
        seminorm_sq_rel,
        aliasing_warning: rescaled.aliasing_warning,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DecayFit {
    /// Fitted `b` in `Q ≈ C (1+x)^{−b}` over the tail window.
    pub power_exponent: f64,
    pub power_prefactor: f64,
    /// RMS residual of the power-law fit in log space.
    pub power_rms: f64,
    /// Fitted `r` in `Q ≈ C e^{−rx}` over the same window.
    pub exp_rate: f64,
    pub exp_prefactor: f64,
    pub exp_rms: f64,
    /// The algebraic tail exponent `N + 2s` of fractional ground states.
    pub expected_power: f64,
}

fn linear_fit(xs: &[f64], ys: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        sxx += (x - mx) * (x - mx);
        sxy += (x - mx) * (y - my);
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rms = (xs
        .iter()
        .zip(ys)
        .map(|(x, y)| {
            let r = y - (intercept + slope * x);
            r * r
        })
        .sum::<f64>()
        / n)
        .sqrt();
    (slope, intercept, rms)
}

/// Fit the tail of a centered profile over the window `[L/4, 3L/4]`
/// along the positive first axis, against both `C(1+x)^{−b}` and
/// `Ce^{−rx}`. Points below the floating-point noise floor shrink the
/// window; an empty window is an error.
pub fn decay_fit(q: &RealField, s: f64) -> Result<DecayFit> {
    let grid = *q.grid();
    let n = grid.n();
    let l = grid.half_length();
    let peak = q.max_abs();
    let floor = peak * 1e-14;
    let mut xs = Vec::new();
    let mut logs = Vec::new();
    for j in 0..n {
        let x = grid.axis_coord(j);
        if x < 0.25 * l || x > 0.75 * l {
            continue;
        }
        let v = match grid.dim() {
            1 => q.values()[j],
            2 => q.values()[j * n + n / 2],
            _ => unreachable!(),
        };
        if v > floor {
            xs.push(x);
            logs.push(v.ln());
        }
    }
    if xs.len() < 4 {
        return Err(CoreError::Domain(
            "decay window empty after noise-floor shrink".into(),
        ));
    }
    let log1px: Vec<f64> = xs.iter().map(|x| (1.0 + x).ln()).collect();
    let (pslope, pintercept, power_rms) = linear_fit(&log1px, &logs);
    let (eslope, eintercept, exp_rms) = linear_fit(&xs, &logs);
    Ok(DecayFit {
        power_exponent: -pslope,
        power_prefactor: pintercept.exp(),
        power_rms,
        exp_rate: -eslope,
        exp_prefactor: eintercept.exp(),
        exp_rms,
        expected_power: grid.dim() as f64 + 2.0 * s,
    })
}

/// Box-size heuristic for the slowly decaying tails at small `s`: large
/// enough that the truncated algebraic tail sits below the requested
/// tolerance. Exponentially decaying profiles (`s = 1`) need no such
/// inflation.
pub fn suggested_half_length(dim: usize, s: f64, tol: f64) -> f64 {
    if s >= 1.0 - 1e-12 {
        20.0
    } else {
        // relative L² truncation of a (N+2s)-power tail is ~ L^{−(N+4s)}
        tol.powf(-1.0 / (dim as f64 + 4.0 * s)).clamp(20.0, 400.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const SQRT2: f64 = std::f64::consts::SQRT_2;

    fn grid1(n: usize, l: f64) -> SpectralGrid {
        SpectralGrid::new(1, n, l).unwrap()
    }

    fn sech_soliton(grid: SpectralGrid) -> RealField {
        RealField::from_fn(grid, |x| SQRT2 / (SQRT2 * x[0]).cosh())
    }

    /// Smooth random real field: white noise mollified by a Gaussian
    /// spectral filter.
    fn smooth_random(grid: SpectralGrid, rng: &mut ChaCha8Rng) -> RealField {
        let noise = RealField::new(
            grid,
            (0..grid.len()).map(|_| rng.gen_range(-1.0..1.0)).collect(),
        )
        .unwrap();
        let kappa = 0.25 * grid.max_wavenumber();
        let smooth = spectral::apply_symbol(&noise.to_complex(), |k_sq| {
            (-k_sq / (2.0 * kappa * kappa)).exp()
        });
        smooth.real_part()
    }

    #[test]
    fn petviashvili_recovers_sech_soliton() {
        let problem = GroundStateProblem::new(grid1(2048, 20.0), 1.0, 1.0).unwrap();
        let result = solve_petviashvili(&problem, 1e-9, 400).unwrap();
        let exact = sech_soliton(*problem.grid());
        let sup_err = result
            .q
            .values()
            .iter()
            .zip(exact.values())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(sup_err / SQRT2 < 1e-6, "sup relative error {sup_err}");
        assert!((result.energy + 2.0 * SQRT2 / 3.0).abs() < 1e-6);
        assert!((result.mass - 2.0 * SQRT2).abs() < 1e-6);
        assert!(result.residual <= 1e-9);

        // symmetry and monotonicity of the converged profile
        let n = problem.grid().n();
        let v = result.q.values();
        let mut even_gap = 0.0_f64;
        for j in 1..n {
            even_gap = even_gap.max((v[j] - v[n - j]).abs());
        }
        assert!(even_gap < 1e-8, "even gap {even_gap}");
        for j in n / 2..n - 1 {
            assert!(v[j + 1] <= v[j] + 1e-13, "not decreasing at {j}");
        }

        // converged profile is a fixed point of the update map
        let (_, delta) = petviashvili_step(&problem, &result.q).unwrap();
        assert!(delta < 1e-9, "fixed-point drift {delta}");
    }

    #[test]
    fn petviashvili_recovers_algebraic_soliton() {
        let problem = GroundStateProblem::new(grid1(8192, 100.0), 0.5, 0.5).unwrap();
        let result = solve_petviashvili(&problem, 1e-8, 800).unwrap();
        let exact = RealField::from_fn(*problem.grid(), |x| 2.0 / (1.0 + 4.0 * x[0] * x[0]));
        let diff: Vec<f64> = result
            .q
            .values()
            .iter()
            .zip(exact.values())
            .map(|(a, b)| a - b)
            .collect();
        let err = RealField::new(*problem.grid(), diff).unwrap();
        let rel = spectral::l2_norm(&err.to_complex())
            / spectral::l2_norm(&exact.to_complex());
        assert!(rel < 1e-2, "relative L2 error {rel}");
        // mass of 2/(1+4x²) is π
        assert!((result.mass - std::f64::consts::PI).abs() < 1e-2);

        // the closed-form profile decays like x^{−(N+2s)} = x^{−2}
        let fit = decay_fit(&exact, 0.5).unwrap();
        assert!(
            (fit.power_exponent - 2.0).abs() < 0.1,
            "tail exponent {}",
            fit.power_exponent
        );
        assert_eq!(fit.expected_power, 2.0);
        // the computed profile is the periodic ground state: boundary
        // images flatten the far tail, so its fitted exponent is shallower
        let fit_num = decay_fit(&result.q, 0.5).unwrap();
        assert!(
            (fit_num.power_exponent - 2.0).abs() < 0.5,
            "computed tail exponent {}",
            fit_num.power_exponent
        );
    }

    #[test]
    fn decay_fit_distinguishes_exponential_tails() {
        let problem = GroundStateProblem::new(grid1(2048, 20.0), 1.0, 1.0).unwrap();
        let result = solve_petviashvili(&problem, 1e-9, 400).unwrap();
        let fit = decay_fit(&result.q, 1.0).unwrap();
        assert!(fit.exp_rms < 0.02, "exponential fit rms {}", fit.exp_rms);
        assert!(
            fit.power_rms > 10.0 * fit.exp_rms,
            "power fit should be rejected: {} vs {}",
            fit.power_rms,
            fit.exp_rms
        );
        assert!((fit.exp_rate - SQRT2).abs() < 0.05);
    }

    #[test]
    fn identity_report_flags_non_solutions() {
        let problem = GroundStateProblem::new(grid1(2048, 20.0), 1.0, 1.0).unwrap();
        let result = solve_petviashvili(&problem, 1e-9, 400).unwrap();
        let rep = &result.identity_report;
        assert!(rep.pohozaev_rel < 1e-6, "pohozaev {}", rep.pohozaev_rel);
        assert!(rep.nehari_rel < 1e-6, "nehari {}", rep.nehari_rel);
        assert!(rep.action.seminorm_sq_rel < 1e-6);
        assert!(rep.action.mass_rel < 1e-6);
        assert!(rep.action.lp_norm_rel < 1e-6);
        assert!(rep.action.constraint_mass_rel < 1e-6);
        assert!(rep.action.correspondence_rel < 1e-6);

        // a generic field violates the identities at order one
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let noise = smooth_random(*problem.grid(), &mut rng).to_complex();
        assert!(pohozaev_residual(&noise, 1.0, 1.0).unwrap() > 0.05);
        assert!(nehari_residual(&noise, 1.0, 1.0).unwrap() > 0.05);
    }

    #[test]
    fn residual_tolerance_implies_identity_accuracy() {
        // Box size matters as much as solver tolerance here: with the
        // |x|^{-(1+2s)} tails of the fractional ground state, the
        // periodic solution deviates from the whole-line one at order
        // (2L)^{-(1+2s)}, and every identity residual inherits that
        // floor (measured: ×~5.66 per halving of L at s = 0.75, the
        // predicted 2^{1+2s}).  L = 400 puts the floor near 2e-7.
        let problem = GroundStateProblem::new(grid1(32768, 400.0), 0.75, 1.0).unwrap();
        let tol = 1e-8;
        let result = solve_petviashvili(&problem, tol, 800).unwrap();
        assert!(result.residual <= tol);
        let rep = &result.identity_report;
        for (name, r) in [
            ("pohozaev", rep.pohozaev_rel),
            ("nehari", rep.nehari_rel),
            ("seminorm", rep.action.seminorm_sq_rel),
            ("mass", rep.action.mass_rel),
            ("lp", rep.action.lp_norm_rel),
            ("constraint-mass", rep.action.constraint_mass_rel),
            ("correspondence", rep.action.correspondence_rel),
        ] {
            assert!(r <= 100.0 * tol, "{name} residual {r} exceeds 100·tol");
        }
    }

    #[test]
    fn action_value_matches_hs_norm_formula() {
        // I(u) − (1/(2p+2))⟨I′(u),u⟩ = ½(1 − 1/(p+1))‖u‖_{H^s}² for any
        // field, solution or not.
        let grid = grid1(256, 10.0);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let u = smooth_random(grid, &mut rng).to_complex();
        for (s, p) in [(0.6, 0.4), (1.0, 1.0)] {
            let lhs = action(&u, s, p).unwrap()
                - nehari_defect(&u, s, p).unwrap() / (2.0 * p + 2.0);
            let rhs = 0.5 * (1.0 - 1.0 / (p + 1.0)) * spectral::hs_norm_sq(&u, s).unwrap();
            assert!((lhs - rhs).abs() < 1e-12 * rhs.abs().max(1.0));
        }
    }

    #[test]
    fn energy_and_action_basics() {
        let grid = grid1(128, 10.0);
        let zero = ComplexField::zeros(grid);
        assert_eq!(energy(&zero, 0.7, 0.5).unwrap(), 0.0);
        assert_eq!(action(&zero, 0.7, 0.5).unwrap(), 0.0);

        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let u = smooth_random(grid, &mut rng).to_complex();
        let e0 = energy(&u, 0.7, 0.5).unwrap();
        let rotated = u.scaled(Complex64::from_polar(1.0, 1.234));
        let e1 = energy(&rotated, 0.7, 0.5).unwrap();
        assert!((e0 - e1).abs() < 1e-12 * e0.abs().max(1.0));
        // the action adds half the (positive) mass to half the energy
        assert!(action(&u, 0.7, 0.5).unwrap() >= 0.5 * e0);
    }

    #[test]
    fn constrained_flow_matches_fixed_point_solver() {
        let problem = GroundStateProblem::new(grid1(1024, 20.0), 0.75, 1.0).unwrap();
        let fixed = solve_petviashvili(&problem, 1e-9, 600).unwrap();
        let flow = solve_constrained_flow(&problem, fixed.mass, 1e-6).unwrap();
        let flow = recenter_peak(&flow).unwrap();
        let sup = flow
            .values()
            .iter()
            .zip(fixed.q.values())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(sup < 1e-4, "cross-solver sup gap {sup}");

        // descent property against the (renormalized) initial guess
        let init = {
            let g = gaussian_init(*problem.grid());
            let m = spectral::mass(&g.to_complex());
            g.scaled((fixed.mass / m).sqrt())
        };
        let e_init = energy(&init.to_complex(), 0.75, 1.0).unwrap();
        let e_flow = energy(&flow.to_complex(), 0.75, 1.0).unwrap();
        assert!(e_flow <= e_init);
    }

    #[test]
    fn constrained_flow_rescales_with_target_mass() {
        // minimizers at different masses are dilates of one another
        let problem = GroundStateProblem::new(grid1(2048, 20.0), 1.0, 1.0).unwrap();
        let fixed = solve_petviashvili(&problem, 1e-9, 400).unwrap();
        let theta = 1.2_f64;
        // mass scales as ω^{1/p − N/(2s)} under the frequency-ω dilation
        let omega = theta.powf(1.0 / (1.0 / 1.0 - 1.0 / 2.0));
        let flow = solve_constrained_flow(&problem, theta * fixed.mass, 1e-6).unwrap();
        let flow = recenter_peak(&flow).unwrap();
        let predicted = rescale(
            &fixed.q.to_complex(),
            omega.powf(0.5),
            omega.powf(0.5),
        )
        .unwrap();
        assert!(!predicted.aliasing_warning);
        let sup = flow
            .values()
            .iter()
            .zip(predicted.field.values())
            .map(|(a, b)| (a - b.re).abs())
            .fold(0.0, f64::max);
        assert!(sup < 1e-4, "rescaling gap {sup}");
    }

    #[test]
    fn rescale_scaling_relations_hold() {
        let grid = grid1(4096, 400.0);
        let u = ComplexField::from_fn(grid, |x| {
            Complex64::new((-0.5 * x[0] * x[0]).exp(), 0.0)
        });
        let check = scaling_check(&u, 2.0, 0.5, 0.5, 0.5).unwrap();
        assert!(!check.aliasing_warning);
        assert!(check.l2_rel < 1e-8, "L2 {}", check.l2_rel);
        assert!(check.lp_norm_rel < 1e-8, "Lp {}", check.lp_norm_rel);
        assert!(check.seminorm_sq_rel < 1e-8, "seminorm {}", check.seminorm_sq_rel);

        // identity rescale reproduces the field
        let same = rescale(&u, 1.0, 1.0).unwrap();
        for (a, b) in same.field.values().iter().zip(u.values()) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn rescale_warns_when_band_is_exceeded() {
        // marginally resolved narrow Gaussian: λ = 2 doubles its spectral
        // width past the Nyquist wavenumber
        let grid = grid1(128, 10.0);
        let u = ComplexField::from_fn(grid, |x| {
            Complex64::new((-2.0 * x[0] * x[0]).exp(), 0.0)
        });
        assert!(!rescale(&u, 1.0, 1.0).unwrap().aliasing_warning);
        assert!(rescale(&u, 1.0, 2.0).unwrap().aliasing_warning);
    }

    #[test]
    fn weinstein_quotient_properties() {
        let grid = grid1(2048, 100.0);
        let u = ComplexField::from_fn(grid, |x| {
            Complex64::new((-0.4 * x[0] * x[0]).exp(), 0.0)
        });
        let (s, p) = (0.8, 0.6);
        let j0 = weinstein_functional(&u, s, p).unwrap();
        // invariance under μ-scaling and under dilation
        let doubled = u.scaled(Complex64::new(2.0, 0.0));
        assert!((weinstein_functional(&doubled, s, p).unwrap() - j0).abs() < 1e-10 * j0);
        let dilated = rescale(&u, 3.0, 0.7).unwrap().field;
        let j1 = weinstein_functional(&dilated, s, p).unwrap();
        assert!((j1 - j0).abs() < 1e-8 * j0, "dilation changes J: {j0} vs {j1}");

        assert!(weinstein_functional(&ComplexField::zeros(grid), s, p).is_err());
    }

    #[test]
    fn ground_state_minimizes_weinstein_quotient() {
        let problem = GroundStateProblem::new(grid1(512, 20.0), 1.0, 1.0).unwrap();
        let result = solve_petviashvili(&problem, 1e-9, 400).unwrap();
        let q = result.q.to_complex();
        let j_min = weinstein_functional(&q, 1.0, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        for _ in 0..20 {
            let noise = smooth_random(*problem.grid(), &mut rng);
            let amp = 0.05 * result.q.max_abs() / noise.max_abs();
            let perturbed: Vec<Complex64> = q
                .values()
                .iter()
                .zip(noise.values())
                .map(|(a, b)| a + amp * b)
                .collect();
            let perturbed = ComplexField::new(*problem.grid(), perturbed).unwrap();
            let j = weinstein_functional(&perturbed, 1.0, 1.0).unwrap();
            assert!(j >= j_min * (1.0 - 1e-9), "J dropped below minimum: {j} < {j_min}");
        }
    }

    #[test]
    fn interpolation_inequality_ratio_is_bounded() {
        // ‖u‖_{2p+2} ≤ C ‖u‖₂^α ‖(−Δ)^{s/2}u‖₂^{1−α},
        // α = (2s(p+1) − Np)/(2s(p+1)); the sample maximum of the ratio
        // stays bounded uniformly in s.
        let grid = grid1(256, 15.0);
        let p = 0.5;
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        for s in [0.6, 0.8, 1.0] {
            let alpha = (2.0 * s * (p + 1.0) - p) / (2.0 * s * (p + 1.0));
            let mut worst = 0.0_f64;
            for _ in 0..200 {
                let u = smooth_random(grid, &mut rng).to_complex();
                let lp = spectral::lp_norm(&u, 2.0 * p + 2.0).unwrap();
                let l2 = spectral::l2_norm(&u);
                let semi = spectral::half_seminorm_sq(&u, s).unwrap().sqrt();
                let ratio = lp / (l2.powf(alpha) * semi.powf(1.0 - alpha));
                assert!(ratio.is_finite());
                worst = worst.max(ratio);
            }
            assert!(worst < 10.0, "ratio blew up at s = {s}: {worst}");
        }
    }

    #[test]
    fn two_dimensional_ground_state_identities() {
        let grid = SpectralGrid::new(2, 128, 12.0).unwrap();
        let problem = GroundStateProblem::new(grid, 1.0, 0.5).unwrap();
        let result = solve_petviashvili(&problem, 1e-8, 400).unwrap();
        let rep = &result.identity_report;
        assert!(rep.pohozaev_rel < 1e-4, "pohozaev {}", rep.pohozaev_rel);
        assert!(rep.nehari_rel < 1e-4, "nehari {}", rep.nehari_rel);
        assert!(rep.action.correspondence_rel < 1e-4);
        // radial symmetry: the four axis neighbours of the peak agree
        let n = grid.n();
        let c = n / 2;
        let v = result.q.values();
        let neighbours = [
            v[(c - 1) * n + c],
            v[(c + 1) * n + c],
            v[c * n + c - 1],
            v[c * n + c + 1],
        ];
        for w in &neighbours {
            assert!((w - neighbours[0]).abs() < 1e-6);
        }
    }

    #[test]
    fn supercritical_requests_are_rejected() {
        let g = grid1(64, 10.0);
        assert!(GroundStateProblem::new(g, 0.5, 1.0).is_err());
        assert!(GroundStateProblem::new(g, 0.5, 1.0 - 1e-12).is_err());
        assert!(GroundStateProblem::new(g, 0.5, 0.9).is_ok());
        assert!(GroundStateProblem::new(g, 1.0, -0.1).is_err());
    }

    #[test]
    fn suggested_box_grows_as_s_shrinks() {
        let l_small_s = suggested_half_length(1, 0.45, 1e-6);
        let l_mid_s = suggested_half_length(1, 0.7, 1e-6);
        assert!(l_small_s > l_mid_s, "{l_small_s} vs {l_mid_s}");
        assert_eq!(suggested_half_length(1, 1.0, 1e-6), 20.0);
    }
}

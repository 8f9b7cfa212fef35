use thiserror::Error;

/// Error type shared by every solver and operator in the crate.
///
/// Numerical failure modes carry enough state to diagnose the run that
/// produced them (iteration counts, residual histories, guard readings);
/// they are not sanitized into strings until they reach a CLI boundary.
#[derive(Debug, Error)]
pub enum CoreError {
    /// A parameter fell outside its mathematical domain (e.g. `s` outside
    /// (0,1], `p` outside the subcritical range, a non-power-of-two grid).
    #[error("parameter out of domain: {0}")]
    Domain(String),

    /// Two fields that must share a grid were built on different grids.
    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    /// The operation is defined but not supported at this configuration
    /// (e.g. the O(n^2) double-sum quadrature beyond its cost guard).
    #[error("unsupported configuration: {0}")]
    Unsupported(String),

    /// An iterative solver ran out of iterations. `history` holds the
    /// per-iteration update norms so stagnation vs. divergence is visible.
    #[error("no convergence after {iterations} iterations (last update {last_delta:.3e})")]
    NonConvergence {
        iterations: usize,
        last_delta: f64,
        history: Vec<f64>,
    },

    /// A profile that must be positive came out with a genuine sign change.
    #[error("positivity violation in converged profile (min value {min_value:.3e})")]
    PositivityViolation { min_value: f64 },

    /// Gradient-flow step size collapsed below its floor without meeting
    /// the gradient tolerance.
    #[error("gradient flow stagnated at step {step:.3e} with gradient norm {grad_norm:.3e}")]
    Stagnation { step: f64, grad_norm: f64 },

    /// Adaptive quadrature could not reach the requested tolerance.
    #[error("quadrature failed: {0}")]
    Quadrature(String),

    /// The evolved field reached the box boundary; periodic images would
    /// contaminate everything after this point.
    #[error(
        "field reached the box boundary (boundary/max ratio {ratio:.3e} at t={t:.4}); \
         enlarge half_length or shorten the horizon"
    )]
    BoundaryApproach { t: f64, ratio: f64 },

    /// The ε-rescaled profile is unresolved on the proposed grid.
    #[error("resolution guard: eps/h = {points_per_width:.2} < {required:.1} grid points per unit profile width")]
    ResolutionGuard { points_per_width: f64, required: f64 },

    /// A requested wavenumber (boost velocity, rescaling) leaves the
    /// resolved spectral band.
    #[error("aliasing guard: {0}")]
    Aliasing(String),

    /// Orbit fitting found no coherent peak in the correlation landscape.
    #[error("no soliton detected: correlation peak {peak:.3e} < {factor}x mean {mean:.3e}")]
    NoSolitonDetected { peak: f64, mean: f64, factor: f64 },

    /// Adaptive ODE stepping collapsed near a degenerate point of the
    /// velocity field (the |ξ|→0 set is non-Lipschitz for s > 1/2).
    #[error("step size underflow at t={t:.6} with |xi|={speed:.3e}: right-hand side is non-Lipschitz here")]
    NonLipschitzStall { t: f64, speed: f64 },

    /// Krylov iteration lost linear independence and restarts were exhausted.
    #[error("Krylov breakdown after {restarts} restarts (subspace dimension {dim})")]
    KrylovBreakdown { restarts: usize, dim: usize },

    /// Non-finite values appeared where finite ones are required.
    #[error("non-finite value encountered: {0}")]
    NonFinite(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("malformed data: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, CoreError>;

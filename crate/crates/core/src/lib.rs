//! Pseudospectral laboratory for fractional nonlinear Schrödinger
//! solitons.
//!
//! The crate provides, on periodic grids in one and two dimensions:
//!
//! * the fractional calculus layer — `(-Δ)^s` as a Fourier multiplier,
//!   the `H^s` / `ℋ_ε^s` norm conventions, the singular-integral
//!   normalization constant `C(N,s)`, and independent quadrature oracles
//!   for the spectral routes ([`spectral`]);
//! * ground-state solvers for `½(-Δ)^s Q + Q = Q^{2p+1}` (Petviashvili
//!   iteration and a normalized gradient flow) together with the
//!   variational functionals and their identity checks ([`ground`]);
//! * the linearized operators `L₊`, `L₋` around a ground state with
//!   constrained matrix-free eigenprobes ([`linop`]);
//! * the fractional Newton flow `s|ẋ|^{2s-2}ẍ = -∇V` ([`newton`]);
//! * a semiclassical splitting propagator for
//!   `iε∂_t u = (ε^{2s}/2)(-Δ)^s u + Vu - |u|^{2p}u` ([`nls`]);
//! * soliton-orbit fitting, Galilean-frame diagnostics, and the energy
//!   bookkeeping that ties transport to the Newton flow ([`modulation`]);
//! * dump/CSV formats shared with the CLI ([`io`]);
//! * the acceptance checks behind `fracsol verify` ([`checks`]).

pub mod checks;
pub mod error;
pub mod fft;
pub mod field;
pub mod grid;
pub mod ground;
pub mod io;
pub mod linop;
pub mod modulation;
pub mod newton;
pub mod nls;
pub mod quad;
pub mod spectral;

pub use error::{CoreError, Result};
pub use field::{ComplexField, RealField};
pub use grid::SpectralGrid;

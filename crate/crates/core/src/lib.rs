//! Numerical toolkit for singular radial solutions of the semilinear equation
//! (-Δ+λ)u = σ|u|^{p-1}u on ℝ^d \ {0} (d = 2, 3), through its point-interaction
//! formulation (-Δ_α+λ)u = σ|u|^{p-1}u.
//!
//! A solution decomposes as u = f + q 𝒢_λ, where 𝒢_λ = (-Δ+λ)^{-1}δ is the
//! Green function, q the charge carried by the singularity, and f the regular
//! component. The crate computes ground states and nodal excited states by
//! radial shooting and by Nehari-constrained minimization of the action, and
//! cross-validates the structural relations (charge limit, β_α(λ)q = f(0),
//! regime-dependent singularity of f) on every computed solution.

pub mod bessel;
pub mod cli;
pub mod error;
pub mod greens;
pub mod grid;
pub mod model;
pub mod radial_ode;
pub mod shooting;
pub mod variational;
pub mod verify;

pub use error::Error;
pub type Result<T> = std::result::Result<T, Error>;

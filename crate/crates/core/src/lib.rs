//! Performance measures and placement tools for power-grid frequency response.
//!
//! After an abrupt power loss at one bus, the grid's frequencies deviate and
//! are pulled back by primary control. The library quantifies that transient
//! with the inertia-weighted quadratic measure
//!
//! ```text
//! M = ∫₀^∞ (ω − ω̄)ᵀ M (ω − ω̄) dt ,   ω̄ = system-average frequency,
//! ```
//!
//! evaluates it in closed form from the spectrum of the inertia-weighted
//! network Laplacian, differentiates it to first order in local inertia and
//! damping changes, and turns those sensitivities into placement
//! recommendations. A direct ODE integrator ([`oracle`]) cross-validates
//! every closed form numerically.
//!
//! Module map:
//! - [`grid`] — grid model, lossless power flow, Laplacians, Kron reduction;
//! - [`spectral`] — eigendecomposition, resistance distances, centralities;
//! - [`response`] — modal frequency transients and performance measures;
//! - [`sensitivity`] — first-order susceptibilities and grid vulnerability;
//! - [`placement`] — optimal ±1 allocation of inertia/damping budgets;
//! - [`oracle`] — swing-equation integrator and finite-difference harness;
//! - [`fixtures`] — deterministic synthetic test grids;
//! - [`io`] — CSV/JSON exports shared by the CLI and tests.

// Guards are written `!(x > 0.0)` on purpose: they must treat NaN as a
// failure, which the `<=` spelling clippy suggests would let through.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod fixtures;
pub mod grid;
pub mod io;
pub mod oracle;
pub mod placement;
pub mod response;
pub mod sensitivity;
pub mod spectral;

pub use error::{Error, Result};

/// Installs a global rayon thread pool honoring the `GRIDPLACE_THREADS`
/// environment variable. A no-op when the variable is unset, unparsable, or
/// when a pool already exists (e.g. in tests that race to initialize).
pub fn init_thread_pool_from_env() {
    if let Ok(raw) = std::env::var("GRIDPLACE_THREADS") {
        if let Ok(n) = raw.trim().parse::<usize>() {
            if n > 0 {
                let _ = rayon::ThreadPoolBuilder::new()
                    .num_threads(n)
                    .build_global();
            }
        }
    }
}

//! Seeded synthetic grids for tests and the `gen` subcommand.
//!
//! Three topology families (ring, star, random recursive tree) with
//! reproducible susceptance jitter, optional heterogeneous inertia, and
//! small balanced injections. [`scale_to_lambda2`] pins the algebraic
//! connectivity afterwards, which keeps every mode underdamped for a chosen
//! damping ratio (oscillatory closed forms need 4λ_α > γ²).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::grid::{build_laplacian, solve_power_flow, Bus, GridModel, Line};
use crate::spectral::{eigendecompose, Weighting};

/// Line layout of a generated fixture.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Topology {
    /// Cycle 0-1-…-(N−1)-0.
    Ring,
    /// Bus 0 as hub, leaves 1..N.
    Star,
    /// Random recursive tree: bus i attaches to a uniform parent < i.
    Tree,
}

impl Topology {
    fn edges(self, n: usize, rng: &mut ChaCha8Rng) -> Vec<(usize, usize)> {
        match self {
            Topology::Ring => (0..n).map(|i| (i, (i + 1) % n)).collect(),
            Topology::Star => (1..n).map(|i| (0, i)).collect(),
            Topology::Tree => (1..n).map(|i| (rng.gen_range(0..i), i)).collect(),
        }
    }
}

/// Generation parameters; see [`FixtureSpec::new`] for defaults.
#[derive(Debug, Clone)]
pub struct FixtureSpec {
    pub topology: Topology,
    pub n: usize,
    pub seed: u64,
    /// Base line susceptance (per-unit).
    pub susceptance: f64,
    /// Relative susceptance jitter amplitude in [0, 1): b = b₀(1 + jitter·u),
    /// u uniform in (−1, 1). Breaks spectral degeneracies of the symmetric
    /// topologies.
    pub jitter: f64,
    /// Baseline inertia m.
    pub inertia: f64,
    /// Uniform damping ratio γ; per-bus damping is d_i = m_i γ.
    pub gamma: f64,
    /// Draw inertias uniformly from [m/2, 2m] instead of m everywhere.
    pub heterogeneous_inertia: bool,
    /// Injection amplitude relative to the base susceptance; keeps the
    /// operating point well inside |Δθ| < π/2.
    pub injection_scale: f64,
}

impl FixtureSpec {
    pub fn new(topology: Topology, n: usize, seed: u64) -> Self {
        FixtureSpec {
            topology,
            n,
            seed,
            susceptance: 1.0,
            jitter: 0.05,
            inertia: 1.0,
            gamma: 1.0,
            heterogeneous_inertia: false,
            injection_scale: 0.05,
        }
    }
}

/// Builds a validated grid from the generation parameters. Every bus is a
/// generator so that fault sweeps cover the whole network.
pub fn generate(spec: &FixtureSpec) -> Result<GridModel> {
    if spec.n < 2 {
        return Err(Error::InvalidArgument(format!(
            "fixture needs at least 2 buses, got {}",
            spec.n
        )));
    }
    if !(0.0..1.0).contains(&spec.jitter) {
        return Err(Error::InvalidArgument(format!(
            "jitter must lie in [0, 1), got {}",
            spec.jitter
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let edges = spec.topology.edges(spec.n, &mut rng);

    let lines = edges
        .into_iter()
        .map(|(i, j)| Line {
            from: format!("b{i}"),
            to: format!("b{j}"),
            susceptance: spec.susceptance * (1.0 + spec.jitter * rng.gen_range(-1.0..1.0)),
        })
        .collect();

    // Balanced injections: zero-mean sample, exact rebalance of the
    // floating-point residue on the last bus.
    let mut power: Vec<f64> = (0..spec.n)
        .map(|_| spec.injection_scale * spec.susceptance * rng.gen_range(-1.0..1.0))
        .collect();
    let mean = power.iter().sum::<f64>() / spec.n as f64;
    for p in &mut power {
        *p -= mean;
    }
    let residue: f64 = power.iter().sum();
    power[spec.n - 1] -= residue;

    let buses = (0..spec.n)
        .map(|i| {
            let m = if spec.heterogeneous_inertia {
                spec.inertia * rng.gen_range(0.5..2.0)
            } else {
                spec.inertia
            };
            Bus {
                id: format!("b{i}"),
                power: power[i],
                inertia: m,
                damping: m * spec.gamma,
                is_generator: true,
            }
        })
        .collect();

    GridModel::new(100.0, buses, lines)
}

/// Rescales all susceptances (and injections, so the operating angles are
/// unchanged and the Laplacian scales exactly linearly) until the
/// unweighted Laplacian has algebraic connectivity `target`.
pub fn scale_to_lambda2(grid: &GridModel, target: f64) -> Result<GridModel> {
    if !(target > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "target algebraic connectivity must be positive, got {target}"
        )));
    }
    let angles = solve_power_flow(grid, 1e-10, 50)?;
    let lap = build_laplacian(grid, &angles);
    let spec = eigendecompose(&lap, Weighting::Unweighted)?;
    let c = target / spec.lambda2();

    let buses = grid
        .buses()
        .iter()
        .map(|b| Bus {
            power: b.power * c,
            ..b.clone()
        })
        .collect();
    let lines = grid
        .lines()
        .iter()
        .map(|&(i, j, b)| Line {
            from: grid.buses()[i].id.clone(),
            to: grid.buses()[j].id.clone(),
            susceptance: b * c,
        })
        .collect();
    GridModel::new(grid.base_mva, buses, lines)
}

//! Grid model: buses, lines, lossless power flow, and network reductions.
//!
//! The model is the usual high-voltage approximation: purely susceptive
//! lines, unit voltage magnitudes, active power only. The steady state
//! solves
//!
//! ```text
//! P_i = Σ_j B_ij sin(θ_i − θ_j)
//! ```
//!
//! and small deviations about it are governed by the network Laplacian
//! `L_ij = −B_ij cos(θ_i⁰ − θ_j⁰)` (off-diagonal), `L_ii = Σ_k B_ik cos(θ_i⁰ − θ_k⁰)`.

use std::collections::HashMap;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Injections may sum to at most this before loading fails outright.
pub const REBALANCE_LIMIT: f64 = 1e-6;
/// Default convergence tolerance on the power-flow mismatch (∞-norm).
pub const DEFAULT_PF_TOL: f64 = 1e-10;
/// Default Newton iteration cap.
pub const DEFAULT_PF_MAX_ITER: usize = 50;

/// One bus: identity, net power injection (positive = generation surplus),
/// rotational inertia, damping/primary-control coefficient, and whether the
/// bus hosts a generator (fault sweeps and vulnerability sums run over
/// generator buses only).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Bus {
    pub id: String,
    pub power: f64,
    pub inertia: f64,
    pub damping: f64,
    pub is_generator: bool,
}

/// One transmission line with positive susceptance, in per-unit.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Line {
    pub from: String,
    pub to: String,
    pub susceptance: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGrid {
    base_mva: f64,
    buses: Vec<Bus>,
    lines: Vec<Line>,
}

/// Validated grid model.
///
/// Invariants established at construction: unique bus ids, strictly positive
/// susceptances/inertias/dampings, no self-loops, parallel lines merged,
/// connected graph, and injections summing to zero exactly (inputs off by at
/// most [`REBALANCE_LIMIT`] are shifted uniformly; larger imbalances are
/// rejected).
#[derive(Debug, Clone)]
pub struct GridModel {
    pub base_mva: f64,
    buses: Vec<Bus>,
    lines: Vec<(usize, usize, f64)>,
    index: HashMap<String, usize>,
}

impl GridModel {
    /// Builds and validates a model from parts.
    pub fn new(base_mva: f64, buses: Vec<Bus>, lines: Vec<Line>) -> Result<Self> {
        let mut index = HashMap::with_capacity(buses.len());
        for (i, bus) in buses.iter().enumerate() {
            if index.insert(bus.id.clone(), i).is_some() {
                return Err(Error::DuplicateBus(bus.id.clone()));
            }
            for (field, value) in [("inertia", bus.inertia), ("damping", bus.damping)] {
                if !(value > 0.0) || !value.is_finite() {
                    return Err(Error::NonPositiveParameter {
                        bus: bus.id.clone(),
                        field,
                        value,
                    });
                }
            }
            if !bus.power.is_finite() {
                return Err(Error::NonPositiveParameter {
                    bus: bus.id.clone(),
                    field: "power",
                    value: bus.power,
                });
            }
        }
        if buses.is_empty() {
            return Err(Error::Parse("grid has no buses".into()));
        }

        // Merge parallel lines by summing susceptances.
        let mut merged: HashMap<(usize, usize), f64> = HashMap::new();
        for line in &lines {
            let a = *index
                .get(&line.from)
                .ok_or_else(|| Error::UnknownBus(line.from.clone()))?;
            let b = *index
                .get(&line.to)
                .ok_or_else(|| Error::UnknownBus(line.to.clone()))?;
            if a == b {
                return Err(Error::SelfLoop(line.from.clone()));
            }
            if !(line.susceptance > 0.0) || !line.susceptance.is_finite() {
                return Err(Error::NonPositiveSusceptance {
                    from: line.from.clone(),
                    to: line.to.clone(),
                    value: line.susceptance,
                });
            }
            *merged.entry((a.min(b), a.max(b))).or_insert(0.0) += line.susceptance;
        }
        let mut lines: Vec<(usize, usize, f64)> =
            merged.into_iter().map(|((a, b), s)| (a, b, s)).collect();
        lines.sort_by_key(|&(a, b, _)| (a, b));

        let mut grid = GridModel {
            base_mva,
            buses,
            lines,
            index,
        };

        if !grid.is_connected() {
            return Err(Error::Disconnected);
        }

        // Rebalance small injection residues so Σ P_i = 0 holds exactly enough
        // for the zero-sum mismatch structure of the power flow.
        let total: f64 = compensated_sum(grid.buses.iter().map(|b| b.power));
        if total.abs() > REBALANCE_LIMIT {
            return Err(Error::UnbalancedInjections(total));
        }
        if total != 0.0 {
            let shift = total / grid.buses.len() as f64;
            for bus in &mut grid.buses {
                bus.power -= shift;
            }
        }
        Ok(grid)
    }

    /// Parses a grid from its JSON description. Unknown fields are rejected.
    pub fn from_json_str(text: &str) -> Result<Self> {
        let raw: RawGrid = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        GridModel::new(raw.base_mva, raw.buses, raw.lines)
    }

    /// Reads and parses a grid JSON file.
    pub fn from_path<P: AsRef<Path>>(path: P) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json_str(&text)
    }

    /// Serializes the model back to its JSON description.
    pub fn to_json_string(&self) -> String {
        let raw = RawGrid {
            base_mva: self.base_mva,
            buses: self.buses.clone(),
            lines: self
                .lines
                .iter()
                .map(|&(a, b, s)| Line {
                    from: self.buses[a].id.clone(),
                    to: self.buses[b].id.clone(),
                    susceptance: s,
                })
                .collect(),
        };
        serde_json::to_string_pretty(&raw).expect("grid serialization cannot fail")
    }

    pub fn n(&self) -> usize {
        self.buses.len()
    }

    pub fn buses(&self) -> &[Bus] {
        &self.buses
    }

    /// Merged lines as (bus index, bus index, susceptance) with `a < b`.
    pub fn lines(&self) -> &[(usize, usize, f64)] {
        &self.lines
    }

    pub fn bus_index(&self, id: &str) -> Result<usize> {
        self.index
            .get(id)
            .copied()
            .ok_or_else(|| Error::UnknownBus(id.to_string()))
    }

    pub fn inertia_vector(&self) -> DVector<f64> {
        DVector::from_iterator(self.n(), self.buses.iter().map(|b| b.inertia))
    }

    pub fn damping_vector(&self) -> DVector<f64> {
        DVector::from_iterator(self.n(), self.buses.iter().map(|b| b.damping))
    }

    pub fn power_vector(&self) -> DVector<f64> {
        DVector::from_iterator(self.n(), self.buses.iter().map(|b| b.power))
    }

    /// Per-bus damping ratios γ_i = d_i / m_i.
    pub fn gamma_vector(&self) -> DVector<f64> {
        DVector::from_iterator(self.n(), self.buses.iter().map(|b| b.damping / b.inertia))
    }

    /// Indices of generator buses, in model order.
    pub fn generator_indices(&self) -> Vec<usize> {
        (0..self.n())
            .filter(|&i| self.buses[i].is_generator)
            .collect()
    }

    /// Uniform damping ratio of the grid, if the per-bus ratios agree to
    /// within `rel_tol` of their mean. Closed-form measures require this.
    pub fn homogeneous_gamma(&self, rel_tol: f64) -> Option<f64> {
        let gammas = self.gamma_vector();
        let mean = compensated_sum(gammas.iter().copied()) / self.n() as f64;
        let spread = gammas
            .iter()
            .fold(0.0f64, |acc, &g| acc.max((g - mean).abs()));
        (spread <= rel_tol * mean.abs().max(f64::MIN_POSITIVE)).then_some(mean)
    }

    /// Total inertia, compensated summation.
    pub fn total_inertia(&self) -> f64 {
        compensated_sum(self.buses.iter().map(|b| b.inertia))
    }

    /// Total damping, compensated summation.
    pub fn total_damping(&self) -> f64 {
        compensated_sum(self.buses.iter().map(|b| b.damping))
    }

    fn is_connected(&self) -> bool {
        let n = self.n();
        if n == 0 {
            return false;
        }
        let mut adj = vec![Vec::new(); n];
        for &(a, b, _) in &self.lines {
            adj[a].push(b);
            adj[b].push(a);
        }
        let mut seen = vec![false; n];
        let mut stack = vec![0usize];
        seen[0] = true;
        let mut count = 1;
        while let Some(i) = stack.pop() {
            for &j in &adj[i] {
                if !seen[j] {
                    seen[j] = true;
                    count += 1;
                    stack.push(j);
                }
            }
        }
        count == n
    }
}

/// Neumaier-compensated sum; the correction term is folded back in at the end.
pub(crate) fn compensated_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Replaces every inertia and damping with the grid means, leaving totals
/// unchanged. Means are computed with compensated summation, and the same
/// value is assigned to every bus, so `N × mean` — the total under the
/// homogenized model — reproduces the compensated total of the input.
pub fn homogenize(grid: &GridModel) -> GridModel {
    let n = grid.n() as f64;
    let mean_m = grid.total_inertia() / n;
    let mean_d = grid.total_damping() / n;
    let mut out = grid.clone();
    for bus in &mut out.buses {
        bus.inertia = mean_m;
        bus.damping = mean_d;
    }
    out
}

/// Converged voltage-angle solution in the zero-mean gauge.
#[derive(Debug, Clone)]
pub struct AnglesSolution {
    /// Bus voltage angles, Σ θ_i = 0.
    pub theta: DVector<f64>,
    /// ∞-norm of the final power mismatch.
    pub residual_norm: f64,
    /// Newton iterations used.
    pub iterations: usize,
}

fn mismatch(grid: &GridModel, theta: &DVector<f64>) -> DVector<f64> {
    let mut f = grid.power_vector();
    for &(a, b, s) in grid.lines() {
        let flow = s * (theta[a] - theta[b]).sin();
        f[a] -= flow;
        f[b] += flow;
    }
    f
}

/// Solves the lossless power flow with a damped Newton iteration.
///
/// The angle null direction (uniform shifts) is removed by projecting every
/// update onto the zero-mean subspace; the returned angles satisfy
/// Σ θ_i = 0. Fails with [`Error::NoConvergence`] when the tolerance is not
/// met and with [`Error::UnstableBranch`] when the converged point has a
/// line angle difference of π/2 or more.
pub fn solve_power_flow(grid: &GridModel, tol: f64, max_iter: usize) -> Result<AnglesSolution> {
    let n = grid.n();
    let mut theta = DVector::zeros(n);
    let mut f = mismatch(grid, &theta);
    let mut residual = f.amax();
    let mut iterations = 0;

    while residual > tol {
        if iterations >= max_iter {
            return Err(Error::NoConvergence {
                iterations,
                residual,
            });
        }
        // Newton step: L(θ) Δ = F, with a rank-one shift to make the
        // Laplacian invertible; the shift only moves the uniform component,
        // which is projected away below.
        let lap = laplacian_at(grid, &theta);
        let scale = lap.diagonal().amax().max(1.0);
        let shifted = &lap + DMatrix::from_element(n, n, scale / n as f64);
        let delta = shifted
            .lu()
            .solve(&f)
            .ok_or(Error::SingularEliminationBlock)
            .map_err(|_| Error::NoConvergence {
                iterations,
                residual,
            })?;
        let mut delta = delta;
        let mean = delta.mean();
        delta.add_scalar_mut(-mean);

        // Damping: halve the step until the residual decreases.
        let mut step = 1.0f64;
        let mut accepted = false;
        for _ in 0..30 {
            let trial = &theta + step * &delta;
            let trial_f = mismatch(grid, &trial);
            let trial_res = trial_f.amax();
            if trial_res < residual {
                theta = trial;
                f = trial_f;
                residual = trial_res;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            return Err(Error::NoConvergence {
                iterations,
                residual,
            });
        }
        iterations += 1;
    }

    let mean = theta.mean();
    theta.add_scalar_mut(-mean);

    for &(a, b, _) in grid.lines() {
        if (theta[a] - theta[b]).abs() >= std::f64::consts::FRAC_PI_2 {
            return Err(Error::UnstableBranch {
                from: grid.buses()[a].id.clone(),
                to: grid.buses()[b].id.clone(),
            });
        }
    }

    Ok(AnglesSolution {
        theta,
        residual_norm: residual,
        iterations,
    })
}

fn laplacian_at(grid: &GridModel, theta: &DVector<f64>) -> DMatrix<f64> {
    let n = grid.n();
    let mut l = DMatrix::zeros(n, n);
    for &(a, b, s) in grid.lines() {
        let w = s * (theta[a] - theta[b]).cos();
        l[(a, a)] += w;
        l[(b, b)] += w;
        l[(a, b)] -= w;
        l[(b, a)] -= w;
    }
    l
}

/// Network Laplacian at the operating point: `L_ij = −B_ij cos(θ_i⁰ − θ_j⁰)`
/// off-diagonal with row sums zero.
pub fn build_laplacian(grid: &GridModel, angles: &AnglesSolution) -> DMatrix<f64> {
    laplacian_at(grid, &angles.theta)
}

/// Result of a Kron reduction: effective network among the retained buses.
#[derive(Debug, Clone)]
pub struct KronReduced {
    /// Reduced Laplacian over the retained buses (Schur complement).
    pub laplacian: DMatrix<f64>,
    /// Reduced injections `P_r − L_re L_ee⁻¹ P_e`.
    pub injections: DVector<f64>,
    /// Model indices of the retained buses, in model order.
    pub retained: Vec<usize>,
}

/// Eliminates all buses not named in `retained_ids` by taking the Schur
/// complement of the operating-point Laplacian:
///
/// ```text
/// L_red = L_rr − L_re L_ee⁻¹ L_er ,   P_red = P_r − L_re L_ee⁻¹ P_e .
/// ```
///
/// Row/column order of the output follows model order restricted to the
/// retained set. Effective couplings between retained buses are exact for
/// the linearized dynamics: resistance distances among retained buses are
/// invariant under the reduction.
pub fn kron_reduce(
    grid: &GridModel,
    angles: &AnglesSolution,
    retained_ids: &[&str],
) -> Result<KronReduced> {
    let n = grid.n();
    let mut keep = vec![false; n];
    for id in retained_ids {
        keep[grid.bus_index(id)?] = true;
    }
    let retained: Vec<usize> = (0..n).filter(|&i| keep[i]).collect();
    let eliminated: Vec<usize> = (0..n).filter(|&i| !keep[i]).collect();
    if retained.is_empty() {
        return Err(Error::InvalidArgument("no retained buses".into()));
    }

    let l = build_laplacian(grid, angles);
    let p = grid.power_vector();
    if eliminated.is_empty() {
        return Ok(KronReduced {
            laplacian: l,
            injections: p,
            retained,
        });
    }

    let l_rr = l
        .select_rows(retained.iter())
        .select_columns(retained.iter());
    let l_re = l
        .select_rows(retained.iter())
        .select_columns(eliminated.iter());
    let l_ee = l
        .select_rows(eliminated.iter())
        .select_columns(eliminated.iter());
    let p_r = p.select_rows(retained.iter());
    let p_e = p.select_rows(eliminated.iter());

    let lu = l_ee.lu();
    let x = lu
        .solve(&l_re.transpose())
        .ok_or(Error::SingularEliminationBlock)?; // L_ee⁻¹ L_er
    let y = lu.solve(&p_e).ok_or(Error::SingularEliminationBlock)?; // L_ee⁻¹ P_e

    Ok(KronReduced {
        laplacian: &l_rr - &l_re * &x,
        injections: &p_r - &l_re * &y,
        retained,
    })
}

//! Command-line front end: validation, power flow, spectra, performance
//! measures, susceptibilities, placement optimization, vulnerability
//! reports, trajectory simulation, and fixture generation.
//!
//! Exit codes: 0 success, 2 validation/usage error, 3 numerical failure.

// `!(x > 0.0)` guards deliberately treat NaN as a failure.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::path::{Path, PathBuf};

use clap::{ArgAction, ArgGroup, Parser, Subcommand, ValueEnum};
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use gridplace::error::{Error, Result};
use gridplace::grid::{build_laplacian, homogenize, solve_power_flow, AnglesSolution, GridModel};
use gridplace::io;
use gridplace::oracle::{self, OracleOptions};
use gridplace::placement::{
    optimize_combined, optimize_damping, optimize_inertia, Algorithm, PlacementResult, WeightKind,
};
use gridplace::response::{self, FaultSpec};
use gridplace::sensitivity::{
    aggregate_susceptibilities, susceptibility_report, uniform_mass_spectrum, PerturbationParams,
};
use gridplace::spectral::{eigendecompose, weighted_laplacian, Spectrum, Weighting};

#[derive(Parser)]
#[command(
    name = "gridplace",
    version,
    about = "Frequency-disturbance performance measures, susceptibilities, and \
             inertia/primary-control placement for power grids"
)]
struct Cli {
    /// Print the documentation of all output formats and exit.
    #[arg(long)]
    schema: bool,

    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Method {
    Closed,
    Oracle,
    Both,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Target {
    Inertia,
    Damping,
    Combined,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum WeightingArg {
    Uniform,
    Squared,
    Threshold,
}

impl From<WeightingArg> for WeightKind {
    fn from(w: WeightingArg) -> WeightKind {
        match w {
            WeightingArg::Uniform => WeightKind::Uniform,
            WeightingArg::Squared => WeightKind::Squared,
            WeightingArg::Threshold => WeightKind::Threshold,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum TopologyArg {
    Ring,
    Star,
    Tree,
}

#[derive(Subcommand)]
enum Command {
    /// Load a grid, solve its power flow, and print diagnostics.
    Validate { grid: PathBuf },

    /// Solve the lossless power flow and emit per-bus voltage angles.
    Powerflow {
        grid: PathBuf,
        /// Output CSV path (stdout when omitted).
        #[arg(short, long)]
        output: Option<PathBuf>,
    },

    /// Eigendecompose the network Laplacian and emit the spectrum.
    Spectrum {
        grid: PathBuf,
        /// Use the inertia-weighted Laplacian M^(-1/2) L M^(-1/2).
        #[arg(long)]
        weighted: bool,
        /// Output CSV path (stdout when omitted).
        #[arg(short, long)]
        output: Option<PathBuf>,
    },

    /// Performance measure after an abrupt power loss, per fault bus.
    #[command(group(ArgGroup::new("faults").required(true).args(["bus", "all"])))]
    Measure {
        grid: PathBuf,
        /// Fault bus id.
        #[arg(long)]
        bus: Option<String>,
        /// Sweep all generator buses.
        #[arg(long)]
        all: bool,
        /// Damping ratio override (required when the grid is not
        /// homogeneous in d_i/m_i).
        #[arg(long)]
        gamma: Option<f64>,
        /// Lost power (per-unit).
        #[arg(long, default_value_t = 1.0)]
        delta_p: f64,
        #[arg(long, value_enum, default_value_t = Method::Closed)]
        method: Method,
        /// Report JSON path (stdout when omitted).
        #[arg(short, long)]
        output: Option<PathBuf>,
    },

    /// First-order susceptibilities of the measure to local inertia (rho)
    /// and damping (alpha) deviations, per fault bus.
    Sensitivities {
        grid: PathBuf,
        /// Restrict to one fault bus id (default: all generator buses).
        #[arg(long)]
        fault: Option<String>,
        /// Replace inertia/damping by their uniform means first.
        #[arg(long)]
        homogenize: bool,
        #[arg(long, default_value_t = 0.1)]
        mu: f64,
        #[arg(long, default_value_t = 0.1)]
        g: f64,
        #[arg(long, default_value_t = 1.0)]
        delta_p: f64,
        #[arg(long)]
        gamma: Option<f64>,
        /// Keep the zero-mode column in the damping coupling sum (dropping
        /// it degrades oracle agreement to first order).
        #[arg(long, default_value_t = true, action = ArgAction::Set)]
        include_zero_mode: bool,
        /// Per-fault CSV path (stdout when omitted).
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Also write fault-aggregated vulnerability gradients here.
        #[arg(long)]
        aggregate: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = WeightingArg::Uniform)]
        weighting: WeightingArg,
        /// Measure threshold for --weighting threshold.
        #[arg(long)]
        m_thres: Option<f64>,
    },

    /// Distribute inertia/damping deviation budgets over the buses.
    Optimize {
        grid: PathBuf,
        #[arg(long, value_enum)]
        target: Target,
        #[arg(long, value_enum, default_value_t = WeightingArg::Uniform)]
        weighting: WeightingArg,
        /// Measure threshold for --weighting threshold.
        #[arg(long)]
        m_thres: Option<f64>,
        /// Replace inertia/damping by their uniform means first.
        #[arg(long)]
        homogenize: bool,
        #[arg(long, default_value_t = 0.1)]
        mu: f64,
        #[arg(long, default_value_t = 0.1)]
        g: f64,
        #[arg(long, default_value_t = 1.0)]
        delta_p: f64,
        #[arg(long)]
        gamma: Option<f64>,
        #[arg(long, default_value_t = true, action = ArgAction::Set)]
        include_zero_mode: bool,
        /// Placement JSON path (stdout when omitted).
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Optional per-bus CSV (bus, rho_agg, alpha_agg, r, a).
        #[arg(long)]
        csv: Option<PathBuf>,
    },

    /// Vulnerability before/after applying a placement, oracle-evaluated.
    Report {
        grid: PathBuf,
        /// Placement JSON produced by `optimize`.
        #[arg(long)]
        placement: PathBuf,
        #[arg(long, value_enum, default_value_t = WeightingArg::Uniform)]
        weighting: WeightingArg,
        #[arg(long)]
        m_thres: Option<f64>,
        /// Replace inertia/damping by their uniform means first.
        #[arg(long)]
        homogenize: bool,
        #[arg(long, default_value_t = 0.1)]
        mu: f64,
        #[arg(long, default_value_t = 0.1)]
        g: f64,
        #[arg(long, default_value_t = 1.0)]
        delta_p: f64,
        #[arg(long)]
        gamma: Option<f64>,
        /// Report JSON path (stdout when omitted).
        #[arg(short, long)]
        output: Option<PathBuf>,
    },

    /// Integrate the swing equations for one fault and emit the trajectory.
    Simulate {
        grid: PathBuf,
        /// Fault bus id.
        #[arg(long)]
        bus: String,
        #[arg(long, default_value_t = 1.0)]
        delta_p: f64,
        /// Integration step (default: resolves the fastest mode).
        #[arg(long)]
        dt: Option<f64>,
        /// Horizon in seconds (default: 20 / min damping ratio).
        #[arg(long)]
        horizon: Option<f64>,
        /// Emit modal velocities instead of per-bus frequencies.
        #[arg(long)]
        modal: bool,
        /// Trajectory CSV path (stdout when omitted).
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Settings sidecar path (defaults to <output>.json).
        #[arg(long)]
        sidecar: Option<PathBuf>,
    },

    /// Generate a deterministic synthetic grid.
    Gen {
        #[arg(long, value_enum)]
        topology: TopologyArg,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1.0)]
        susceptance: f64,
        #[arg(long, default_value_t = 0.05)]
        jitter: f64,
        #[arg(long, default_value_t = 1.0)]
        inertia: f64,
        #[arg(long, default_value_t = 1.0)]
        gamma: f64,
        /// Draw inertias from [m/2, 2m] instead of uniform m.
        #[arg(long)]
        hetero_inertia: bool,
        #[arg(long, default_value_t = 0.05)]
        injection_scale: f64,
        /// Rescale susceptances until λ₂ of the Laplacian hits this value.
        #[arg(long)]
        lambda2: Option<f64>,
        /// Grid JSON path (stdout when omitted).
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
}

fn main() {
    gridplace::init_thread_pool_from_env();
    let cli = Cli::parse();
    if cli.schema {
        print!("{}", io::schema_text());
        std::process::exit(0);
    }
    let Some(command) = cli.command else {
        eprintln!("error: a subcommand is required (see --help)");
        std::process::exit(2);
    };
    // `validate` reports any failure as a validation error; elsewhere the
    // error kind decides between usage (2) and numerical (3) failures.
    let is_validate = matches!(command, Command::Validate { .. });
    if let Err(err) = run(command) {
        eprintln!("error: {err}");
        std::process::exit(if is_validate { 2 } else { exit_code(&err) });
    }
}

fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Parse(_)
        | Error::DuplicateBus(_)
        | Error::UnknownBus(_)
        | Error::SelfLoop(_)
        | Error::NonPositiveSusceptance { .. }
        | Error::NonPositiveParameter { .. }
        | Error::Disconnected
        | Error::UnbalancedInjections(_)
        | Error::MissingThreshold
        | Error::InvalidArgument(_)
        | Error::Io(_)
        | Error::Encode(_) => 2,
        Error::NoConvergence { .. }
        | Error::UnstableBranch { .. }
        | Error::SingularEliminationBlock
        | Error::NotSymmetric(_)
        | Error::MultipleZeroModes
        | Error::NoZeroMode(_)
        | Error::OverdampedMode { .. }
        | Error::DegenerateSpectrum { .. }
        | Error::NoFeasiblePair
        | Error::StepTooLarge { .. }
        | Error::HorizonTooShort { .. } => 3,
    }
}

/// Grid with its solved operating point and unweighted Laplacian.
struct Prepared {
    grid: GridModel,
    angles: AnglesSolution,
    lap: DMatrix<f64>,
}

fn prepare(path: &Path, make_homogeneous: bool) -> Result<Prepared> {
    let mut grid = GridModel::from_path(path)?;
    if make_homogeneous {
        grid = homogenize(&grid);
    }
    let angles = solve_power_flow(&grid, 1e-10, 50)?;
    let lap = build_laplacian(&grid, &angles);
    Ok(Prepared { grid, angles, lap })
}

/// Damping ratio shared by all buses: the explicit flag, or the grid's own
/// homogeneous value.
fn resolve_gamma(grid: &GridModel, flag: Option<f64>) -> Result<f64> {
    if let Some(g) = flag {
        if !(g > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "damping ratio must be positive, got {g}"
            )));
        }
        return Ok(g);
    }
    grid.homogeneous_gamma(1e-9).ok_or_else(|| {
        Error::InvalidArgument(
            "grid damping ratios d_i/m_i are not homogeneous; pass --gamma or --homogenize".into(),
        )
    })
}

/// Uniform inertia baseline required by the susceptibility formulas.
fn uniform_inertia(grid: &GridModel) -> Result<f64> {
    let m = grid.inertia_vector();
    let m0 = m[0];
    if m.iter().any(|&mi| (mi - m0).abs() > 1e-9 * m0) {
        return Err(Error::InvalidArgument(
            "susceptibilities need a uniform-inertia baseline; pass --homogenize".into(),
        ));
    }
    Ok(m0)
}

fn bus_ids(grid: &GridModel) -> Vec<String> {
    grid.buses().iter().map(|b| b.id.clone()).collect()
}

/// Writes to the path atomically, or prints to stdout when no path given.
fn emit(output: Option<&PathBuf>, contents: &str, label: &str) -> Result<()> {
    match output {
        Some(path) => {
            io::write_atomic(path, contents)?;
            println!("{label} written to {}", path.display());
            Ok(())
        }
        None => {
            print!("{contents}");
            Ok(())
        }
    }
}

/// Fault-probability weights over all buses (zero on non-generators),
/// derived from closed-form baseline measures where the scheme needs them.
fn fault_weights(
    kind: WeightKind,
    m_thres: Option<f64>,
    spec_m: &Spectrum,
    grid: &GridModel,
    gamma: f64,
    delta_p: f64,
) -> Result<DVector<f64>> {
    let gens = grid.generator_indices();
    let m = grid.inertia_vector();
    let mut m0 = Vec::with_capacity(gens.len());
    for &b in &gens {
        let fault = FaultSpec { bus: b, delta_p };
        m0.push(response::measure_closed_form(spec_m, m[b], gamma, &fault)?);
    }
    let eta = gridplace::placement::weight_scheme(kind, &m0, m_thres)?;
    let mut out = DVector::zeros(grid.n());
    for (k, &b) in gens.iter().enumerate() {
        out[b] = eta[k];
    }
    Ok(out)
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Validate { grid } => cmd_validate(&grid),
        Command::Powerflow { grid, output } => cmd_powerflow(&grid, output.as_ref()),
        Command::Spectrum {
            grid,
            weighted,
            output,
        } => cmd_spectrum(&grid, weighted, output.as_ref()),
        Command::Measure {
            grid,
            bus,
            all: _,
            gamma,
            delta_p,
            method,
            output,
        } => cmd_measure(
            &grid,
            bus.as_deref(),
            gamma,
            delta_p,
            method,
            output.as_ref(),
        ),
        Command::Sensitivities {
            grid,
            fault,
            homogenize,
            mu,
            g,
            delta_p,
            gamma,
            include_zero_mode,
            output,
            aggregate,
            weighting,
            m_thres,
        } => cmd_sensitivities(
            &grid,
            fault.as_deref(),
            homogenize,
            mu,
            g,
            delta_p,
            gamma,
            include_zero_mode,
            output.as_ref(),
            aggregate.as_ref(),
            weighting.into(),
            m_thres,
        ),
        Command::Optimize {
            grid,
            target,
            weighting,
            m_thres,
            homogenize,
            mu,
            g,
            delta_p,
            gamma,
            include_zero_mode,
            output,
            csv,
        } => cmd_optimize(
            &grid,
            target,
            weighting.into(),
            m_thres,
            homogenize,
            mu,
            g,
            delta_p,
            gamma,
            include_zero_mode,
            output.as_ref(),
            csv.as_ref(),
        ),
        Command::Report {
            grid,
            placement,
            weighting,
            m_thres,
            homogenize,
            mu,
            g,
            delta_p,
            gamma,
            output,
        } => cmd_report(
            &grid,
            &placement,
            weighting.into(),
            m_thres,
            homogenize,
            mu,
            g,
            delta_p,
            gamma,
            output.as_ref(),
        ),
        Command::Simulate {
            grid,
            bus,
            delta_p,
            dt,
            horizon,
            modal,
            output,
            sidecar,
        } => cmd_simulate(
            &grid,
            &bus,
            delta_p,
            dt,
            horizon,
            modal,
            output.as_ref(),
            sidecar.as_ref(),
        ),
        Command::Gen {
            topology,
            n,
            seed,
            susceptance,
            jitter,
            inertia,
            gamma,
            hetero_inertia,
            injection_scale,
            lambda2,
            output,
        } => cmd_gen(
            topology,
            n,
            seed,
            susceptance,
            jitter,
            inertia,
            gamma,
            hetero_inertia,
            injection_scale,
            lambda2,
            output.as_ref(),
        ),
    }
}

fn cmd_validate(path: &Path) -> Result<()> {
    let p = prepare(path, false)?;
    let spec = eigendecompose(&p.lap, Weighting::Unweighted)?;
    let gens = p.grid.generator_indices().len();
    println!("buses: {} ({gens} generators)", p.grid.n());
    println!("lines: {}", p.grid.lines().len());
    println!(
        "power flow: converged in {} iterations (residual {:.3e})",
        p.angles.iterations, p.angles.residual_norm
    );
    let max_spread = p
        .grid
        .lines()
        .iter()
        .map(|&(i, j, _)| (p.angles.theta[i] - p.angles.theta[j]).abs())
        .fold(0.0f64, f64::max);
    println!("max line angle difference: {max_spread:.6} rad");
    println!(
        "connected: yes (algebraic connectivity {:.6e})",
        spec.lambda2()
    );
    println!(
        "spectrum: {}",
        if spec.degenerate {
            "near-degenerate (perturbative operations will be refused)"
        } else {
            "non-degenerate"
        }
    );
    match p.grid.homogeneous_gamma(1e-9) {
        Some(g) => println!("damping ratio: homogeneous, gamma = {g:.6}"),
        None => {
            println!("damping ratio: heterogeneous (closed forms need --gamma or --homogenize)")
        }
    }
    Ok(())
}

fn cmd_powerflow(path: &Path, output: Option<&PathBuf>) -> Result<()> {
    let p = prepare(path, false)?;
    let mut csv = String::from("bus,angle_rad\n");
    for (i, bus) in p.grid.buses().iter().enumerate() {
        csv.push_str(&format!("{},{:.17e}\n", bus.id, p.angles.theta[i]));
    }
    emit(output, &csv, "power flow")
}

fn cmd_spectrum(path: &Path, weighted: bool, output: Option<&PathBuf>) -> Result<()> {
    let p = prepare(path, false)?;
    let spec = if weighted {
        let m = p.grid.inertia_vector();
        let lm = weighted_laplacian(&p.lap, &m)?;
        eigendecompose(&lm, Weighting::Inertia(m))?
    } else {
        eigendecompose(&p.lap, Weighting::Unweighted)?
    };
    emit(
        output,
        &io::spectrum_csv(&spec, &bus_ids(&p.grid)),
        "spectrum",
    )
}

fn cmd_measure(
    path: &Path,
    bus: Option<&str>,
    gamma: Option<f64>,
    delta_p: f64,
    method: Method,
    output: Option<&PathBuf>,
) -> Result<()> {
    let p = prepare(path, false)?;
    let gamma = resolve_gamma(&p.grid, gamma)?;
    let m = p.grid.inertia_vector();
    let lm = weighted_laplacian(&p.lap, &m)?;
    let spec_m = eigendecompose(&lm, Weighting::Inertia(m.clone()))?;

    let faults: Vec<usize> = match bus {
        Some(id) => vec![p.grid.bus_index(id)?],
        None => p.grid.generator_indices(),
    };
    // d_i = gamma * m_i: the oracle runs the same homogeneous-ratio system
    // the closed form describes.
    let d = &m * gamma;
    let opts = OracleOptions::default();

    let rows = faults
        .par_iter()
        .map(|&b| -> Result<io::MeasureRow> {
            let fault = FaultSpec { bus: b, delta_p };
            let id = p.grid.buses()[b].id.clone();
            let closed = if method != Method::Oracle {
                Some(response::measure_closed_form(&spec_m, m[b], gamma, &fault)?)
            } else {
                None
            };
            let numeric = if method != Method::Closed {
                Some(oracle::measure_oracle(&p.lap, &m, &d, &fault, &opts)?.value)
            } else {
                None
            };
            Ok(match method {
                Method::Closed => io::MeasureRow {
                    bus: id,
                    delta_p,
                    measure: closed.unwrap(),
                    method: "closed".into(),
                    oracle: None,
                    discrepancy: None,
                },
                Method::Oracle => io::MeasureRow {
                    bus: id,
                    delta_p,
                    measure: numeric.unwrap(),
                    method: "oracle".into(),
                    oracle: None,
                    discrepancy: None,
                },
                Method::Both => {
                    let (c, o) = (closed.unwrap(), numeric.unwrap());
                    io::MeasureRow {
                        bus: id,
                        delta_p,
                        measure: c,
                        method: "both".into(),
                        oracle: Some(o),
                        discrepancy: Some((c - o).abs() / o.abs().max(f64::MIN_POSITIVE)),
                    }
                }
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let report = io::MeasureReport::new(gamma, rows);
    emit(output, &io::to_json(&report)?, "measure report")
}

#[allow(clippy::too_many_arguments)]
fn cmd_sensitivities(
    path: &Path,
    fault: Option<&str>,
    make_homogeneous: bool,
    mu: f64,
    g: f64,
    delta_p: f64,
    gamma: Option<f64>,
    include_zero_mode: bool,
    output: Option<&PathBuf>,
    aggregate: Option<&PathBuf>,
    weighting: WeightKind,
    m_thres: Option<f64>,
) -> Result<()> {
    let p = prepare(path, make_homogeneous)?;
    let gamma = resolve_gamma(&p.grid, gamma)?;
    let m0 = uniform_inertia(&p.grid)?;
    let spec = eigendecompose(&p.lap, Weighting::Unweighted)?;
    let params = PerturbationParams::homogeneous(m0, gamma, mu, g, p.grid.n());
    let ids = bus_ids(&p.grid);

    let faults: Vec<usize> = match fault {
        Some(id) => vec![p.grid.bus_index(id)?],
        None => p.grid.generator_indices(),
    };
    let reports = faults
        .par_iter()
        .map(|&b| {
            let fault = FaultSpec { bus: b, delta_p };
            susceptibility_report(&spec, &params, &fault, include_zero_mode)
        })
        .collect::<Result<Vec<_>>>()?;

    // Coupling-vs-diagonal size, reported because the orderings vary by
    // network stiffness.
    let (mut t1, mut t2) = (0.0f64, 0.0f64);
    for rep in &reports {
        t1 = t1.max(rep.alpha.term1.amax());
        t2 = t2.max(rep.alpha.term2.amax());
    }
    eprintln!(
        "damping susceptibility: max |coupling| / max |diagonal| = {:.3}",
        t2 / t1.max(f64::MIN_POSITIVE)
    );

    emit(
        output,
        &io::sensitivity_csv(&ids, &reports),
        "susceptibilities",
    )?;

    if let Some(agg_path) = aggregate {
        let spec_m = uniform_mass_spectrum(&spec, m0)?;
        let eta = fault_weights(weighting, m_thres, &spec_m, &p.grid, gamma, delta_p)?;
        let dp = DVector::from_element(p.grid.n(), delta_p);
        let (grad_r, grad_a) = gridplace::sensitivity::vulnerability_gradients(
            &spec,
            &params,
            &eta,
            &dp,
            include_zero_mode,
        )?;
        io::write_atomic(agg_path, &io::gradient_csv(&ids, &grad_r, &grad_a))?;
        println!("aggregated gradients written to {}", agg_path.display());
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_optimize(
    path: &Path,
    target: Target,
    weighting: WeightKind,
    m_thres: Option<f64>,
    make_homogeneous: bool,
    mu: f64,
    g: f64,
    delta_p: f64,
    gamma: Option<f64>,
    include_zero_mode: bool,
    output: Option<&PathBuf>,
    csv: Option<&PathBuf>,
) -> Result<()> {
    let p = prepare(path, make_homogeneous)?;
    let gamma = resolve_gamma(&p.grid, gamma)?;
    let m0 = uniform_inertia(&p.grid)?;
    let spec = eigendecompose(&p.lap, Weighting::Unweighted)?;
    let spec_m = uniform_mass_spectrum(&spec, m0)?;
    let params = PerturbationParams::homogeneous(m0, gamma, mu, g, p.grid.n());

    let eta = fault_weights(weighting, m_thres, &spec_m, &p.grid, gamma, delta_p)?;
    let dp = DVector::from_element(p.grid.n(), delta_p);
    let (rho_agg, alpha_agg) =
        aggregate_susceptibilities(&spec, &params, &eta, &dp, include_zero_mode)?;

    // Uniform weights make the aggregated inertia gradient vanish
    // identically: the placement is then first-order neutral.
    let rho_scale = delta_p * delta_p * mu / gamma;
    if matches!(target, Target::Inertia | Target::Combined) && rho_agg.amax() <= 1e-10 * rho_scale {
        eprintln!(
            "warning: aggregated inertia susceptibilities vanish (sum rule for uniform fault \
             weights); inertia placement is first-order neutral"
        );
    }

    let n = p.grid.n();
    let result = match target {
        Target::Inertia => PlacementResult::assemble(
            Algorithm::Inertia,
            weighting,
            optimize_inertia(&rho_agg),
            vec![0; n],
            &rho_agg,
            &alpha_agg,
            0,
        ),
        Target::Damping => PlacementResult::assemble(
            Algorithm::Damping,
            weighting,
            vec![0; n],
            optimize_damping(&alpha_agg),
            &rho_agg,
            &alpha_agg,
            0,
        ),
        Target::Combined => optimize_combined(&rho_agg, &alpha_agg, weighting)?,
    };

    if let Some(csv_path) = csv {
        let table = io::placement_csv(
            &bus_ids(&p.grid),
            &rho_agg,
            &alpha_agg,
            &result.r,
            &result.a,
        );
        io::write_atomic(csv_path, &table)?;
        println!("per-bus table written to {}", csv_path.display());
    }
    emit(
        output,
        &io::to_json(&io::PlacementFile::new(result))?,
        "placement",
    )
}

#[allow(clippy::too_many_arguments)]
fn cmd_report(
    path: &Path,
    placement_path: &Path,
    weighting: WeightKind,
    m_thres: Option<f64>,
    make_homogeneous: bool,
    mu: f64,
    g: f64,
    delta_p: f64,
    gamma: Option<f64>,
    output: Option<&PathBuf>,
) -> Result<()> {
    let p = prepare(path, make_homogeneous)?;
    let gamma = resolve_gamma(&p.grid, gamma)?;
    let m0 = uniform_inertia(&p.grid)?;
    let n = p.grid.n();

    let text = std::fs::read_to_string(placement_path)?;
    let placement: io::PlacementFile =
        serde_json::from_str(&text).map_err(|e| Error::Parse(e.to_string()))?;
    let result = placement.result;
    if result.r.len() != n || result.a.len() != n {
        return Err(Error::InvalidArgument(format!(
            "placement is for {} buses, grid has {n}",
            result.r.len()
        )));
    }

    // Mutated grid parameters m_i = m(1 + mu r_i), d_i = m_i gamma (1 + g a_i).
    let r = DVector::from_iterator(n, result.r.iter().map(|&v| f64::from(v)));
    let a = DVector::from_iterator(n, result.a.iter().map(|&v| f64::from(v)));
    let params = PerturbationParams::homogeneous(m0, gamma, mu, g, n).with_shapes(r, a);
    params.validate(n)?;
    let m_before = DVector::from_element(n, m0);
    let d_before = &m_before * gamma;
    let m_after = params.inertia_vector();
    let d_after = params.damping_vector();

    let spec = eigendecompose(&p.lap, Weighting::Unweighted)?;
    let spec_m = uniform_mass_spectrum(&spec, m0)?;
    let eta = fault_weights(weighting, m_thres, &spec_m, &p.grid, gamma, delta_p)?;

    let opts = OracleOptions::default();
    let gens = p.grid.generator_indices();
    let pairs = gens
        .par_iter()
        .map(|&b| -> Result<(usize, f64, f64)> {
            let fault = FaultSpec { bus: b, delta_p };
            let before = oracle::measure_oracle(&p.lap, &m_before, &d_before, &fault, &opts)?.value;
            let after = oracle::measure_oracle(&p.lap, &m_after, &d_after, &fault, &opts)?.value;
            Ok((b, before, after))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut v_before = 0.0;
    let mut v_after = 0.0;
    let mut curve = Vec::with_capacity(pairs.len());
    for &(b, before, after) in &pairs {
        v_before += eta[b] * before;
        v_after += eta[b] * after;
        curve.push(io::CurvePoint {
            bus: p.grid.buses()[b].id.clone(),
            measure_before: before,
            measure_after: after,
        });
    }

    let weighting_name = match weighting {
        WeightKind::Uniform => "uniform",
        WeightKind::Squared => "squared",
        WeightKind::Threshold => "threshold",
    };
    let report =
        io::VulnerabilityReport::new(weighting_name.into(), mu, g, v_before, v_after, curve);
    println!(
        "vulnerability: {:.6e} -> {:.6e} ({:+.2}% change)",
        report.vulnerability_before, report.vulnerability_after, -report.reduction_percent
    );
    emit(output, &io::to_json(&report)?, "vulnerability report")
}

#[allow(clippy::too_many_arguments)]
fn cmd_simulate(
    path: &Path,
    bus: &str,
    delta_p: f64,
    dt: Option<f64>,
    horizon: Option<f64>,
    modal: bool,
    output: Option<&PathBuf>,
    sidecar: Option<&PathBuf>,
) -> Result<()> {
    let p = prepare(path, false)?;
    let b = p.grid.bus_index(bus)?;
    let m = p.grid.inertia_vector();
    let d = p.grid.damping_vector();
    let fault = FaultSpec { bus: b, delta_p };

    let dt = dt.unwrap_or_else(|| oracle::default_dt(&p.lap, &m, &d));
    let horizon = horizon.unwrap_or_else(|| {
        let gamma_min = p
            .grid
            .gamma_vector()
            .iter()
            .fold(f64::INFINITY, |acc, &v| acc.min(v));
        20.0 / gamma_min
    });
    let traj = oracle::integrate_fault(&p.lap, &m, &d, &fault, dt, horizon)?;

    let csv = if modal {
        let lm = weighted_laplacian(&p.lap, &m)?;
        let spec_m = eigendecompose(&lm, Weighting::Inertia(m.clone()))?;
        let rows: Vec<DVector<f64>> = traj
            .omega
            .iter()
            .map(|w| response::project_velocities(&spec_m, &m, w))
            .collect();
        io::modal_trajectory_csv(&traj.times, &rows)
    } else {
        io::trajectory_csv(&traj, &bus_ids(&p.grid))
    };

    let sidecar_path = match (sidecar, output) {
        (Some(s), _) => Some(s.clone()),
        (None, Some(out)) => Some(out.with_extension("json")),
        (None, None) => None,
    };
    if let Some(sp) = sidecar_path {
        let sc = io::SimulationSidecar {
            format_version: io::FORMAT_VERSION.to_string(),
            fault_bus: bus.to_string(),
            delta_p,
            dt,
            horizon,
            modal,
        };
        io::write_atomic(&sp, &io::to_json(&sc)?)?;
        println!("settings written to {}", sp.display());
    }
    emit(output, &csv, "trajectory")
}

#[allow(clippy::too_many_arguments)]
fn cmd_gen(
    topology: TopologyArg,
    n: usize,
    seed: u64,
    susceptance: f64,
    jitter: f64,
    inertia: f64,
    gamma: f64,
    hetero_inertia: bool,
    injection_scale: f64,
    lambda2: Option<f64>,
    output: Option<&PathBuf>,
) -> Result<()> {
    use gridplace::fixtures::{generate, scale_to_lambda2, FixtureSpec, Topology};
    let topology = match topology {
        TopologyArg::Ring => Topology::Ring,
        TopologyArg::Star => Topology::Star,
        TopologyArg::Tree => Topology::Tree,
    };
    let spec = FixtureSpec {
        susceptance,
        jitter,
        inertia,
        gamma,
        heterogeneous_inertia: hetero_inertia,
        injection_scale,
        ..FixtureSpec::new(topology, n, seed)
    };
    let mut grid = generate(&spec)?;
    if let Some(target) = lambda2 {
        grid = scale_to_lambda2(&grid, target)?;
    }
    emit(output, &grid.to_json_string(), "grid")
}

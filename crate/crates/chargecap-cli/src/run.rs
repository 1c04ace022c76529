//! Subcommand drivers. Each returns the text to print or a [`CliError`]
//! whose exit code distinguishes spec/usage errors (1), solver failures (2),
//! and exceeded caps (3).

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use chargecap::channel::{ternary_spec, ChannelSpec};
use chargecap::closed_form::{precision_capacity, ClosedFormError};
use chargecap::engines::{EngineError, SolveOptions};
use chargecap::graphs::build_graphs;
use chargecap::oracle::{
    bruteforce_j_adjacent, bruteforce_j_cognitive, bruteforce_j_generic, enumerate_feasible,
    minimal_energy_for, Optimizer, OracleCaps, OracleError,
};
use chargecap::report::{
    curve_csv, reproduce_fig8, verify_spec_curves, verify_spec_oracles, verify_ternary_example,
    Tolerances,
};
use chargecap::sweep::{
    default_rho_grid, frac_to_f64, max_entropy_under_cost, sweep, upper_bound_curve,
    CapacityCurve, EngineKind, PointSource, SweepError,
};
use chargecap::Frac;
use thiserror::Error;

use crate::parse::{parse_fraction, parse_grid, ParseError};
use crate::specfile::{parse_spec_str, SpecFileError};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("cannot read {path}: {reason}")]
    Io { path: String, reason: String },
    #[error(transparent)]
    SpecFile(#[from] SpecFileError),
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("solver error: {0}")]
    Solver(String),
    #[error("cap exceeded: {0}")]
    Cap(String),
    #[error("verification failed: {failed} of {total} checks")]
    VerificationFailed { failed: usize, total: usize },
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_)
            | CliError::Io { .. }
            | CliError::SpecFile(_)
            | CliError::Parse(_)
            | CliError::VerificationFailed { .. } => 1,
            CliError::Solver(_) => 2,
            CliError::Cap(_) => 3,
        }
    }
}

impl From<EngineError> for CliError {
    fn from(err: EngineError) -> Self {
        match err {
            EngineError::StateCapExceeded { .. } | EngineError::HorizonCapExceeded { .. } => {
                CliError::Cap(err.to_string())
            }
            other => CliError::Solver(other.to_string()),
        }
    }
}

impl From<SweepError> for CliError {
    fn from(err: SweepError) -> Self {
        match err {
            SweepError::Engine(e) => e.into(),
            SweepError::EmptyGrid => CliError::Usage(err.to_string()),
            other => CliError::Solver(other.to_string()),
        }
    }
}

impl From<OracleError> for CliError {
    fn from(err: OracleError) -> Self {
        match err {
            OracleError::HorizonCapExceeded { .. } => CliError::Cap(err.to_string()),
            OracleError::EmptyHorizon => CliError::Usage(err.to_string()),
        }
    }
}

impl From<ClosedFormError> for CliError {
    fn from(err: ClosedFormError) -> Self {
        match err {
            ClosedFormError::NotPrecisionCharger => CliError::Usage(err.to_string()),
            other => CliError::Solver(other.to_string()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Mode {
    Generic,
    Adjacent,
    Cognitive,
    Ub,
    Precision,
    All,
}

impl Mode {
    fn label(&self) -> &'static str {
        match self {
            Mode::Generic => "generic",
            Mode::Adjacent => "adjacent",
            Mode::Cognitive => "cognitive",
            Mode::Ub => "ub",
            Mode::Precision => "precision",
            Mode::All => "all",
        }
    }
}

/// Knobs shared by the compute subcommands.
#[derive(Debug, Clone, clap::Args)]
pub struct SolverArgs {
    /// Multiplier grid, "start:end:step" or a comma list (default:
    /// 200 log-spaced points in [1e-3, 8] plus 0)
    #[arg(long)]
    pub rho_grid: Option<String>,
    /// Bellman residual target for the iterative engines
    #[arg(long, default_value_t = 1e-10)]
    pub tolerance: f64,
    /// Cap on lazily discovered states in the generic engine
    #[arg(long, default_value_t = 100_000)]
    pub state_cap: usize,
    /// Horizon cap for finite-horizon value iteration
    #[arg(long, default_value_t = 1 << 14)]
    pub horizon_cap: usize,
}

impl SolverArgs {
    pub fn options(&self) -> SolveOptions {
        SolveOptions {
            tolerance: self.tolerance,
            state_cap: self.state_cap,
            horizon_cap: self.horizon_cap,
            ..SolveOptions::default()
        }
    }

    pub fn grid(&self) -> Result<Vec<f64>, CliError> {
        match &self.rho_grid {
            Some(text) => Ok(parse_grid(text)?),
            None => Ok(default_rho_grid()),
        }
    }
}

pub fn load_spec(path: &str) -> Result<ChannelSpec, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Io {
        path: path.to_string(),
        reason: e.to_string(),
    })?;
    Ok(parse_spec_str(&text)?)
}

fn engine_kind(mode: Mode) -> Option<EngineKind> {
    match mode {
        Mode::Generic => Some(EngineKind::Generic),
        Mode::Adjacent => Some(EngineKind::Adjacent),
        Mode::Cognitive => Some(EngineKind::Cognitive),
        _ => None,
    }
}

fn curve_residual(curve: &CapacityCurve) -> f64 {
    curve
        .points
        .iter()
        .map(|p| match p.source {
            PointSource::Engine { residual, .. } | PointSource::TimeShare { residual, .. } => {
                residual
            }
            _ => 0.0,
        })
        .fold(0.0, f64::max)
}

/// `capacity`: one `(mode, gamma)` query per requested mode, printed as
/// `mode=<m> gamma=<g> capacity=<c> residual=<r>`.
pub fn cmd_capacity(
    spec: &ChannelSpec,
    mode: Mode,
    gamma_text: &str,
    solver: &SolverArgs,
) -> Result<String, CliError> {
    let gamma = parse_fraction(gamma_text)?;
    let gf = frac_to_f64(gamma);
    let modes: Vec<Mode> = match mode {
        Mode::All => vec![Mode::Generic, Mode::Adjacent, Mode::Cognitive, Mode::Ub],
        m => vec![m],
    };
    let graphs = build_graphs(spec);
    let opts = solver.options();
    let grid = solver.grid()?;
    let mut out = String::new();
    for m in modes {
        let (capacity, residual) = match m {
            Mode::Ub => (max_entropy_under_cost(spec, gf).0, 0.0),
            Mode::Precision => (precision_capacity(spec, gamma)?, 0.0),
            _ => {
                let kind = engine_kind(m).expect("engine mode");
                let curve = sweep(&graphs, kind, &grid, &opts)?;
                (curve.eval(gf), curve_residual(&curve))
            }
        };
        writeln!(
            out,
            "mode={} gamma={:.12} capacity={:.12} residual={:e}",
            m.label(),
            gf,
            capacity,
            residual
        )
        .unwrap();
    }
    Ok(out)
}

/// Gamma grid for tabulated output: multiples of `1/resolution` reaching
/// 12.5% past the largest curve vertex.
fn gamma_table_grid(curves: &[&CapacityCurve], resolution: i64) -> Vec<Frac> {
    let top = curves
        .iter()
        .flat_map(|c| c.points.last())
        .map(|p| p.gamma)
        .fold(0.0f64, f64::max);
    let k_max = ((top * 1.125) * resolution as f64).ceil() as i64;
    (0..=k_max.max(resolution))
        .map(|k| Frac::new(k, resolution))
        .collect()
}

/// `sweep`: emits curve CSV. Single modes produce the vertex table
/// (`gamma,capacity,mode,rho,residual,timeshare_alpha`); `all` produces the
/// four-column comparison table.
pub fn cmd_sweep(spec: &ChannelSpec, mode: Mode, solver: &SolverArgs) -> Result<String, CliError> {
    let graphs = build_graphs(spec);
    let opts = solver.options();
    let grid = solver.grid()?;
    match mode {
        Mode::All => {
            if *spec == ternary_spec() && solver.rho_grid.is_none() {
                return Ok(reproduce_fig8(12).csv);
            }
            let generic = sweep(&graphs, EngineKind::Generic, &grid, &opts)?;
            let adjacent = sweep(&graphs, EngineKind::Adjacent, &grid, &opts)?;
            let cognitive = sweep(&graphs, EngineKind::Cognitive, &grid, &opts)?;
            let gamma_grid = gamma_table_grid(&[&generic, &adjacent, &cognitive], 12);
            let ub = upper_bound_curve(spec, &gamma_grid);
            let mut csv = String::from("gamma,c_generic,c_adjacent,c_cognitive,c_ub\n");
            for &g in &gamma_grid {
                let gf = frac_to_f64(g);
                writeln!(
                    csv,
                    "{:.12},{:.12},{:.12},{:.12},{:.12}",
                    gf,
                    generic.eval(gf),
                    adjacent.eval(gf),
                    cognitive.eval(gf),
                    ub.eval(gf)
                )
                .unwrap();
            }
            Ok(csv)
        }
        Mode::Ub | Mode::Precision => {
            if mode == Mode::Precision && !spec.is_precision() {
                return Err(ClosedFormError::NotPrecisionCharger.into());
            }
            let probe = upper_bound_curve(spec, &[Frac::from_integer(1)]);
            let gamma_grid = gamma_table_grid(&[&probe], 12);
            let mut curve = upper_bound_curve(spec, &gamma_grid);
            if mode == Mode::Precision {
                curve.mode = chargecap::sweep::CurveMode::Precision;
            }
            Ok(curve_csv(&curve))
        }
        m => {
            let kind = engine_kind(m).expect("engine mode");
            let curve = sweep(&graphs, kind, &grid, &opts)?;
            Ok(curve_csv(&curve))
        }
    }
}

/// `verify`: the full ternary reference suite when the spec is the ternary
/// example, otherwise the spec-generic oracle and curve invariants. Nonzero
/// exit on any failing check.
pub fn cmd_verify(
    spec: &ChannelSpec,
    oracle_depth: Option<usize>,
    seed: u64,
) -> Result<String, CliError> {
    let mut report = if *spec == ternary_spec() && oracle_depth.is_none() {
        verify_ternary_example(Tolerances::default(), seed)
    } else {
        let depth = oracle_depth.unwrap_or(4);
        let mut r = verify_spec_oracles(spec, depth);
        r.entries.extend(verify_spec_curves(spec).entries);
        r
    };
    report.entries.sort_by(|a, b| a.id.cmp(&b.id));
    let text = report.render();
    if report.all_passed() {
        Ok(text)
    } else {
        // The report text still goes to stdout before the nonzero exit.
        print!("{text}");
        Err(CliError::VerificationFailed {
            failed: report.failed(),
            total: report.entries.len(),
        })
    }
}

/// `graphs`: one edge per line, `from symbol cost to`.
pub fn cmd_graphs(spec: &ChannelSpec) -> Result<String, CliError> {
    Ok(build_graphs(spec).export_edges())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum OracleKind {
    Counts,
    Generic,
    Adjacent,
    Cognitive,
    Minimal,
}

/// `oracle`: run one brute-force computation.
pub fn cmd_oracle(
    spec: &ChannelSpec,
    which: OracleKind,
    horizon: usize,
    gamma_text: Option<&str>,
    rho: f64,
    inputs: Option<&str>,
    caps: OracleCaps,
) -> Result<String, CliError> {
    let graphs = build_graphs(spec);
    match which {
        OracleKind::Counts => {
            let gamma = match gamma_text {
                Some(t) => parse_fraction(t)?,
                None => Frac::from_integer(spec.capacity() as i64 * horizon as i64),
            };
            let counts = enumerate_feasible(spec, horizon, gamma, caps)?;
            Ok(format!(
                "n={} gamma={} pairs={} inputs={}\n",
                horizon, gamma, counts.pairs, counts.inputs
            ))
        }
        OracleKind::Generic => {
            let res = bruteforce_j_generic(&graphs, rho, horizon, caps)?;
            let seq = match &res.argmax {
                Optimizer::EnergySequence(seq) => seq
                    .iter()
                    .map(|e| e.to_string())
                    .collect::<Vec<_>>()
                    .join(","),
                _ => unreachable!("generic oracle yields an energy sequence"),
            };
            Ok(format!(
                "n={} rho={:.12} value={:.12} argmax={}\n",
                horizon, rho, res.value, seq
            ))
        }
        OracleKind::Adjacent => {
            let res = bruteforce_j_adjacent(spec, rho, horizon, caps)?;
            let root = match res.argmax {
                Optimizer::ChargingFunction { root_energy } => root_energy,
                _ => unreachable!("adjacent oracle yields a charging function"),
            };
            Ok(format!(
                "n={} rho={:.12} value={:.12} root_energy={}\n",
                horizon, rho, res.value, root
            ))
        }
        OracleKind::Cognitive => {
            let res = bruteforce_j_cognitive(spec, rho, horizon, caps)?;
            let feasible = match res.argmax {
                Optimizer::JointSupport {
                    feasible_sequences, ..
                } => feasible_sequences,
                _ => unreachable!("cognitive oracle yields a joint support"),
            };
            Ok(format!(
                "n={} rho={:.12} value={:.12} feasible={}\n",
                horizon, rho, res.value, feasible
            ))
        }
        OracleKind::Minimal => {
            let text = inputs.ok_or_else(|| {
                CliError::Usage("--inputs is required for the minimal oracle".into())
            })?;
            let mut xs = Vec::new();
            for label in text.split(',') {
                let x = spec.symbol_of(label.trim()).ok_or_else(|| {
                    CliError::Usage(format!("unknown input symbol {:?}", label.trim()))
                })?;
                xs.push(x);
            }
            match minimal_energy_for(spec, &xs) {
                Some(min) => {
                    let es = min
                        .energies
                        .iter()
                        .map(|e| e.to_string())
                        .collect::<Vec<_>>()
                        .join(",");
                    Ok(format!("inputs={} energies={} total={}\n", text, es, min.total))
                }
                None => Ok(format!("inputs={} infeasible\n", text)),
            }
        }
    }
}

/// Writes `text` to `path`, or returns it for stdout when `path` is `None`.
pub fn emit(text: String, path: Option<&Path>) -> Result<Option<String>, CliError> {
    match path {
        Some(p) => {
            fs::write(p, text).map_err(|e| CliError::Io {
                path: p.display().to_string(),
                reason: e.to_string(),
            })?;
            Ok(None)
        }
        None => Ok(Some(text)),
    }
}

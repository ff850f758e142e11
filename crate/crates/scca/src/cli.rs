//! Subcommands of the `scca` binary.

use crate::config::{ExperimentConfig, Method, SolverSection, TauPairing};
use crate::error::{AppError, Result};
use crate::harness::{pareto_sweep, render_table, run_benchmark};
use crate::io;
use clap::{Args, Parser, Subcommand, ValueEnum};
use scca_core::linalg::leading_singular_pair;
use scca_core::metrics::gram_inner;
use scca_core::simulation::{make_truth, JointSampler, ScenarioSpec, TruthSpec};
use scca_core::solver::{solve_first_pair, solve_rth_pair};
use scca_core::{CcaSolution, Dataset, DeflationContext, Vector};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Parser)]
#[command(name = "scca", version, about = "Sparse canonical correlation analysis")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Draw replicate data sets from a scenario config.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Solve for sparse canonical pairs of two CSV matrices.
    Solve(SolveArgs),
    /// Oracle-tau tables over replicates for the configured methods.
    Benchmark {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Correlation / sparsity points along a tau grid.
    Pareto(ParetoArgs),
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SolverArgs {
    /// Bridge weight between the sample covariance (1) and the identity (0).
    #[arg(long, default_value_t = 1.0)]
    pub alpha: f64,
    /// Inner ADMM tolerance.
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
    /// Inner ADMM iteration cap.
    #[arg(long, default_value_t = 5000)]
    pub max_iter: usize,
    #[arg(long, default_value_t = 1e-5)]
    pub outer_tol: f64,
    #[arg(long, default_value_t = 100)]
    pub outer_max_iter: usize,
    #[arg(long, default_value_t = 1.0)]
    pub lambda: f64,
    /// Scale lambda by the operator norm of each subproblem.
    #[arg(long)]
    pub scale_lambda: bool,
    /// Seed of the power iteration.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

impl SolverArgs {
    fn section(&self) -> SolverSection {
        SolverSection {
            alpha: self.alpha,
            tol: self.tol,
            max_iter: self.max_iter,
            outer_tol: self.outer_tol,
            outer_max_iter: self.outer_max_iter,
            lambda: self.lambda,
            scale_lambda: self.scale_lambda,
            seed: self.seed,
            ..SolverSection::default()
        }
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SolveArgs {
    pub x: PathBuf,
    pub y: PathBuf,
    #[arg(long)]
    pub tau_u: f64,
    #[arg(long)]
    pub tau_v: f64,
    /// Number of canonical pairs; pairs after the first come from deflation.
    #[arg(long, default_value_t = 1)]
    pub rank: usize,
    /// `auto`, `zeros`, or a JSON file with fields `u` and `v`.
    #[arg(long, default_value = "auto")]
    pub init: String,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Output file; standard output when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PathMethod {
    Ours,
    Pma,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ParetoArgs {
    pub x: PathBuf,
    pub y: PathBuf,
    /// `truth.json` written by `simulate`; adds population correlations and
    /// the true point.
    #[arg(long)]
    pub truth: Option<PathBuf>,
    #[arg(long, value_delimiter = ',', required = true)]
    pub tau_grid_u: Vec<f64>,
    #[arg(long, value_delimiter = ',', required = true)]
    pub tau_grid_v: Vec<f64>,
    #[arg(long, value_enum, default_value = "product")]
    pub pairing: Pairing,
    #[arg(long, value_enum, default_value = "ours")]
    pub method: PathMethod,
    #[command(flatten)]
    pub solver: SolverArgs,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Pairing {
    Diagonal,
    Product,
}

/// Contents of `truth.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthFile {
    pub version: String,
    pub scenario: ScenarioSpec,
    pub replicate: usize,
    pub sample_seed: u64,
    pub rho: f64,
    pub u_true: Vec<f64>,
    pub v_true: Vec<f64>,
}

impl TruthFile {
    /// Rebuilds the population model and checks it against the stored
    /// canonical vectors.
    pub fn model(&self, path: &Path) -> Result<TruthSpec> {
        let truth = make_truth(&self.scenario)?;
        let close = |a: &Vector, b: &[f64]| {
            a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= 1e-12 * (1.0 + y.abs()))
        };
        if !close(&truth.u_true, &self.u_true) || !close(&truth.v_true, &self.v_true) {
            return Err(AppError::Format {
                path: path.to_path_buf(),
                reason: "stored canonical vectors do not match the scenario".into(),
            });
        }
        Ok(truth)
    }
}

#[derive(Serialize)]
struct Meta<'a, C: Serialize> {
    version: &'static str,
    command: &'static str,
    config: &'a C,
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate { config, out } => simulate(&config, &out),
        Command::Solve(args) => solve(&args),
        Command::Benchmark { config, out } => benchmark(&config, &out),
        Command::Pareto(args) => pareto(&args),
    }
}

fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let cfg: ExperimentConfig = io::read_toml(path).map_err(|e| AppError::usage(e.to_string()))?;
    cfg.validate()?;
    Ok(cfg)
}

pub fn simulate(config: &Path, out: &Path) -> Result<()> {
    let cfg = load_config(config)?;
    let sc = &cfg.scenario;
    let sizes = sc.sample_sizes();
    io::create_dir(out)?;
    io::write_json(
        &out.join("config.json"),
        &Meta {
            version: VERSION,
            command: "simulate",
            config: &cfg,
        },
    )?;
    for &n in &sizes {
        let spec = sc.spec(n)?;
        let truth = make_truth(&spec)?;
        let sampler = JointSampler::new(&truth)?;
        let base = if sizes.len() > 1 { out.join(format!("n-{n}")) } else { out.to_path_buf() };
        for r in 0..sc.replicates {
            let seed = sc.sample_seed(r);
            let data = sampler.sample(n, seed)?;
            let dir = base.join(format!("rep-{r:03}"));
            io::create_dir(&dir)?;
            io::write_matrix(&dir.join("X.csv"), data.x())?;
            io::write_matrix(&dir.join("Y.csv"), data.y())?;
            io::write_json(
                &dir.join("truth.json"),
                &TruthFile {
                    version: VERSION.into(),
                    scenario: spec.clone(),
                    replicate: r,
                    sample_seed: seed,
                    rho: truth.rho,
                    u_true: io::to_vec(&truth.u_true),
                    v_true: io::to_vec(&truth.v_true),
                },
            )?;
        }
    }
    Ok(())
}

fn load_data(x: &Path, y: &Path) -> Result<Dataset> {
    let (x, y) = (io::read_matrix(x)?, io::read_matrix(y)?);
    Ok(Dataset::standardize(&x, &y)?)
}

#[derive(Deserialize)]
struct InitFile {
    u: Vec<f64>,
    v: Vec<f64>,
}

fn resolve_init(spec: &str, data: &Dataset, seed: u64) -> Result<Option<(Vector, Vector)>> {
    match spec {
        "auto" => Ok(None),
        "zeros" => {
            // u is solved first, so only v0 matters; it is the leading right
            // singular vector of X'Y, scaled into the ball.
            let (_, v, _) = leading_singular_pair(&data.x().tr_mul(data.y()), 1000, seed);
            let norm = (data.y() * &v).norm();
            let v = if norm > 1.0 { v / norm } else { v };
            Ok(Some((Vector::zeros(data.p()), v)))
        }
        path => {
            let f: InitFile = io::read_json(Path::new(path))?;
            Ok(Some((Vector::from_vec(f.u), Vector::from_vec(f.v))))
        }
    }
}

#[derive(Serialize)]
struct PairOut {
    u_hat: Vec<f64>,
    v_hat: Vec<f64>,
    sample_corr: f64,
    l1_u: f64,
    l1_v: f64,
    converged: bool,
    zero_solution: bool,
    outer_iters: usize,
    inner_iters: usize,
    primal_residual: f64,
    dual_residual: f64,
    objective_history: Vec<f64>,
}

impl From<&CcaSolution> for PairOut {
    fn from(s: &CcaSolution) -> Self {
        Self {
            u_hat: io::to_vec(&s.u_hat),
            v_hat: io::to_vec(&s.v_hat),
            sample_corr: s.sample_corr,
            l1_u: s.l1_u,
            l1_v: s.l1_v,
            converged: s.converged,
            zero_solution: s.zero_solution,
            outer_iters: s.outer_iters,
            inner_iters: s.inner_iters,
            primal_residual: s.primal_residual,
            dual_residual: s.dual_residual,
            objective_history: s.objective_history.clone(),
        }
    }
}

/// Largest `|u_k' X'X u_r|` (and the same for `v`) against earlier pairs.
#[derive(Serialize)]
struct Orthogonality {
    pair: usize,
    u_residual: f64,
    v_residual: f64,
}

#[derive(Serialize)]
struct SolveOutput<'a> {
    version: &'static str,
    command: &'static str,
    config: &'a SolveArgs,
    requested_rank: usize,
    /// Deflation stops after a zero solution.
    pairs: Vec<PairOut>,
    orthogonality: Vec<Orthogonality>,
}

pub fn solve(args: &SolveArgs) -> Result<()> {
    if args.rank == 0 {
        return Err(AppError::usage("--rank must be at least 1"));
    }
    let data = load_data(&args.x, &args.y)?;
    let mut section = args.solver.section();
    section.tau_grid_u = vec![args.tau_u];
    section.tau_grid_v = vec![args.tau_v];
    let cfg = section.solver_config()?.with_taus(args.tau_u, args.tau_v);
    let init = resolve_init(&args.init, &data, args.solver.seed)?;

    let mut sols = vec![solve_first_pair(&data, &cfg, init)?];
    let mut ortho = Vec::new();
    while sols.len() < args.rank && !sols.last().is_some_and(|s| s.zero_solution) {
        let ctx = DeflationContext::from_solutions(&sols)?;
        let s = solve_rth_pair(&data, &ctx, &cfg, None)?;
        let worst = |prev: fn(&CcaSolution) -> &Vector, m: &scca_core::Matrix| {
            sols.iter()
                .map(|p| gram_inner(m, prev(p).as_slice(), prev(&s).as_slice()).abs())
                .fold(0.0, f64::max)
        };
        ortho.push(Orthogonality {
            pair: sols.len() + 1,
            u_residual: worst(|s| &s.u_hat, data.x()),
            v_residual: worst(|s| &s.v_hat, data.y()),
        });
        sols.push(s);
    }
    let out = SolveOutput {
        version: VERSION,
        command: "solve",
        config: args,
        requested_rank: args.rank,
        pairs: sols.iter().map(PairOut::from).collect(),
        orthogonality: ortho,
    };
    match &args.out {
        Some(path) => io::write_json(path, &out),
        None => {
            println!("{}", serde_json::to_string_pretty(&out).expect("serializable"));
            Ok(())
        }
    }
}

pub fn benchmark(config: &Path, out: &Path) -> Result<()> {
    let cfg = load_config(config)?;
    let result = run_benchmark(&cfg)?;
    io::create_dir(out)?;
    io::write_csv(&out.join("per_tau.csv"), &result.records)?;
    io::write_csv(&out.join("table.csv"), &result.table)?;
    io::write_text(&out.join("table.txt"), &render_table(&result.table))?;
    io::write_json(
        &out.join("benchmark.json"),
        &Meta {
            version: VERSION,
            command: "benchmark",
            config: &cfg,
        },
    )
}

pub fn pareto(args: &ParetoArgs) -> Result<()> {
    let data = load_data(&args.x, &args.y)?;
    let truth = match &args.truth {
        Some(path) => {
            let f: TruthFile = io::read_json(path)?;
            Some(f.model(path)?)
        }
        None => None,
    };
    if truth.as_ref().is_some_and(|t| (t.p(), t.q()) != (data.p(), data.q())) {
        return Err(AppError::usage("truth dimensions do not match the data"));
    }
    let section = SolverSection {
        tau_grid_u: args.tau_grid_u.clone(),
        tau_grid_v: args.tau_grid_v.clone(),
        tau_pairing: match args.pairing {
            Pairing::Diagonal => TauPairing::Diagonal,
            Pairing::Product => TauPairing::Product,
        },
        ..args.solver.section()
    };
    let pairs = section.tau_pairs()?;
    let method = match args.method {
        PathMethod::Ours => Method::Ours,
        PathMethod::Pma => Method::Pma,
    };
    let rows = pareto_sweep(&data, truth.as_ref(), &pairs, method, &section)?;
    io::create_dir(&args.out)?;
    io::write_csv(&args.out.join("pareto.csv"), &rows)?;
    io::write_json(
        &args.out.join("pareto.json"),
        &Meta {
            version: VERSION,
            command: "pareto",
            config: args,
        },
    )
}

//! Front end for the symmetry-reduced Choquard solver: configuration,
//! command dispatch, JSON result envelopes and CSV plot series.

mod plot;
mod verify;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use choquard_core::kernel::{funk_hecke_closed_form, CacheOutcome};
use choquard_core::params::{bubble_constant, bubble_eval};
use choquard_core::stereo::{pull_back, stereo_inverse};
use choquard_core::{
    assemble_kernel, build_grid, ledger, make_params, symmetry, Bubble, ChoquardProblem, Error, ErrorKind,
    KernelCache, KernelMatrix, ProblemParams, ReducedGrid, Result, Scalar, SolveOptions, SolveResult, SymmetryClass,
};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

pub use plot::{emit_plot_data, PlotKind};
pub use verify::{gradient_fd_error, run_verification, Check};

pub const SCHEMA_VERSION: u32 = 1;
/// Environment variable overriding the kernel cache directory.
pub const CACHE_ENV: &str = "CHOQUARD_CACHE_DIR";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum CommandKind {
    Verify,
    Atlas,
    Kernel,
    Grid,
    Solve,
    Ledger,
    Bubble,
}

impl CommandKind {
    pub fn name(&self) -> &'static str {
        match self {
            CommandKind::Verify => "verify",
            CommandKind::Atlas => "atlas",
            CommandKind::Kernel => "kernel",
            CommandKind::Grid => "grid",
            CommandKind::Solve => "solve",
            CommandKind::Ledger => "ledger",
            CommandKind::Bubble => "bubble",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub command: CommandKind,
    pub n: u32,
    pub mu: Option<String>,
    pub parts: Option<(u32, u32)>,
    pub class: SymmetryClass,
    pub grid_size: usize,
    pub count: usize,
    pub tol: f64,
    pub max_iter: usize,
    pub max_degree: usize,
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub csv: Option<PathBuf>,
    pub cache_dir: Option<PathBuf>,
    pub no_cache: bool,
    pub deterministic: bool,
}

impl RunConfig {
    pub fn new(command: CommandKind, n: u32) -> Self {
        RunConfig {
            command,
            n,
            mu: None,
            parts: None,
            class: SymmetryClass::G,
            grid_size: choquard_core::grid::DEFAULT_GRID_SIZE,
            count: 1,
            tol: 1e-8,
            max_iter: 500,
            max_degree: 12,
            seed: 0,
            out: None,
            csv: None,
            cache_dir: None,
            no_cache: false,
            deterministic: false,
        }
    }

    pub fn with_mu(mut self, mu: &str) -> Self {
        self.mu = Some(mu.to_string());
        self
    }

    pub fn with_parts(mut self, n1: u32, n2: u32) -> Self {
        self.parts = Some((n1, n2));
        self
    }

    pub fn params(&self) -> Result<ProblemParams> {
        let mu = self
            .mu
            .as_deref()
            .ok_or_else(|| Error::InvalidParams(format!("`{}` needs --mu", self.command.name())))?;
        make_params(self.n, mu.parse::<Scalar>()?)
    }

    /// Requested blocks, or the most balanced split of `n + 1`.
    pub fn parts_or_default(&self) -> (u32, u32) {
        self.parts.unwrap_or(((self.n + 2) / 2, self.n.div_ceil(2)))
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 3 {
            return Err(Error::InvalidParams(format!("dimension n = {} must be at least 3", self.n)));
        }
        match self.command {
            CommandKind::Atlas => return Ok(()),
            CommandKind::Ledger | CommandKind::Bubble => {
                self.params()?;
                return Ok(());
            }
            _ => {}
        }
        let params = self.params()?;
        build_grid(&params, self.parts_or_default(), self.grid_size)?;
        if self.count == 0 {
            return Err(Error::InvalidParams("--count must be at least 1".into()));
        }
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(Error::InvalidParams(format!("--tol {} must be positive", self.tol)));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidParams("--max-iter must be positive".into()));
        }
        let (n1, n2) = self.parts_or_default();
        if self.command == CommandKind::Solve && self.class == SymmetryClass::Gamma && n1 != n2 {
            return Err(Error::NotApplicable(format!("class Gamma needs equal blocks, got ({n1}, {n2})")));
        }
        Ok(())
    }

    fn cache(&self) -> Option<KernelCache> {
        if self.no_cache {
            return None;
        }
        let dir = self
            .cache_dir
            .clone()
            .or_else(|| std::env::var_os(CACHE_ENV).map(PathBuf::from))
            .unwrap_or_else(|| std::env::temp_dir().join("choquard-kernels"));
        Some(KernelCache::new(dir))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultEnvelope {
    pub schema_version: u32,
    pub command: String,
    pub config: RunConfig,
    /// Wall-clock seconds per phase.
    pub timings: BTreeMap<String, f64>,
    pub payload: Value,
    pub warnings: Vec<String>,
}

impl ResultEnvelope {
    /// False when the payload reports a failed check.
    pub fn succeeded(&self) -> bool {
        self.payload.get("all_passed").and_then(Value::as_bool).unwrap_or(true)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn read(path: &Path) -> Result<Self> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }
}

/// Exit status for an error: 2 validation, 3 numerical failure, 4 I/O.
pub fn exit_code(err: &Error) -> i32 {
    match err.kind() {
        ErrorKind::Validation => 2,
        ErrorKind::Numerical => 3,
        ErrorKind::Io => 4,
    }
}

/// Machine-readable error body.
pub fn error_payload(err: &Error) -> Value {
    let kind = match err.kind() {
        ErrorKind::Validation => "validation",
        ErrorKind::Numerical => "numerical",
        ErrorKind::Io => "io",
    };
    json!({ "error": { "kind": kind, "message": err.to_string() } })
}

struct Timer {
    timings: BTreeMap<String, f64>,
}

impl Timer {
    fn time<T>(&mut self, name: &str, f: impl FnOnce() -> T) -> T {
        let start = Instant::now();
        let out = f();
        self.timings.insert(name.to_string(), start.elapsed().as_secs_f64());
        out
    }
}

/// Runs the configured command and writes the envelope to `config.out` when set.
pub fn dispatch(config: &RunConfig) -> Result<ResultEnvelope> {
    config.validate()?;
    let envelope = if config.deterministic {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .map_err(|e| Error::Numerical(format!("thread pool: {e}")))?;
        pool.install(|| run(config))?
    } else {
        run(config)?
    };
    if let Some(out) = &config.out {
        if let Some(parent) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
            std::fs::create_dir_all(parent)?;
        }
        std::fs::write(out, envelope.to_json()?)?;
    }
    Ok(envelope)
}

fn run(config: &RunConfig) -> Result<ResultEnvelope> {
    let start = Instant::now();
    let mut timer = Timer { timings: BTreeMap::new() };
    let mut warnings = Vec::new();
    let payload = match config.command {
        CommandKind::Atlas => serde_json::to_value(symmetry::atlas(config.n, config.max_degree)?)?,
        CommandKind::Ledger => serde_json::to_value(ledger::ledger_report(&config.params()?)?)?,
        CommandKind::Bubble => bubble_payload(&config.params()?)?,
        CommandKind::Grid => {
            let grid = build_grid(&config.params()?, config.parts_or_default(), config.grid_size)?;
            if let Some(csv) = &config.csv {
                std::fs::write(csv, grid.to_csv())?;
            }
            json!({
                "params": grid.params(),
                "grid": grid_json(&grid),
                "volume": grid.volume(),
                "sphere_area": choquard_core::sphere_area(config.n),
            })
        }
        CommandKind::Kernel => {
            let grid = build_grid(&config.params()?, config.parts_or_default(), config.grid_size)?;
            let kernel = timer.time("kernel", || load_kernel(config, &grid, &mut warnings))?;
            if let Some(csv) = &config.csv {
                std::fs::write(csv, kernel.to_csv(&grid))?;
            }
            kernel_payload(&grid, &kernel)?
        }
        CommandKind::Verify => {
            let grid = build_grid(&config.params()?, config.parts_or_default(), config.grid_size)?;
            let kernel = timer.time("kernel", || load_kernel(config, &grid, &mut warnings))?;
            let checks = timer.time("checks", || run_verification(&grid, &kernel, config.seed))?;
            let all = checks.iter().all(|c| c.passed);
            for c in checks.iter().filter(|c| !c.passed) {
                warnings.push(format!("check `{}` failed: {:.3e} vs tolerance {:.1e}", c.name, c.value, c.tolerance));
            }
            json!({
                "params": grid.params(),
                "parts": grid.parts(),
                "grid_size": grid.len(),
                "checks": checks,
                "all_passed": all,
            })
        }
        CommandKind::Solve => {
            let grid = build_grid(&config.params()?, config.parts_or_default(), config.grid_size)?;
            let kernel = timer.time("kernel", || load_kernel(config, &grid, &mut warnings))?;
            let hash = kernel.hash();
            let meta = kernel.meta.clone();
            let problem = ChoquardProblem::new(grid, kernel)?;
            let opts = SolveOptions { tol: config.tol, max_iter: config.max_iter, ..SolveOptions::default() };
            let outcome = timer.time("solve", || problem.solve_sequence(config.class, config.count, &opts))?;
            if outcome.solutions.is_empty() {
                return Err(Error::Numerical(format!("no critical point found: {}", outcome.warnings.join("; "))));
            }
            warnings.extend(outcome.warnings.iter().cloned());
            let seeds: Vec<Option<usize>> = outcome.solutions.iter().map(|s| s.seed_degree).collect();
            let comparison = if config.class == SymmetryClass::Gamma {
                timer.time("g_comparison", || g_class_comparison(&problem, &outcome.solutions, &opts))?
            } else {
                Value::Null
            };
            json!({
                "params": problem.params(),
                "grid": grid_json(problem.grid()),
                "class": config.class,
                "solutions": outcome.solutions,
                "provenance": {
                    "kernel_hash": hash,
                    "kernel_orders": meta.orders,
                    "kernel_estimated_error": meta.estimated_error,
                    "seed_degrees": seeds,
                },
                "g_class_comparison": comparison,
            })
        }
    };
    timer.timings.insert("total".into(), start.elapsed().as_secs_f64());
    Ok(ResultEnvelope {
        schema_version: SCHEMA_VERSION,
        command: config.command.name().to_string(),
        config: config.clone(),
        timings: timer.timings,
        payload,
        warnings,
    })
}

/// Nearest member of the `G`-class sequence to each `Gamma` solution, up to sign.
/// Reported only; nothing is asserted about coincidence.
fn g_class_comparison(problem: &ChoquardProblem, gamma: &[SolveResult], opts: &SolveOptions) -> Result<Value> {
    let g = problem.solve_sequence(SymmetryClass::G, gamma.len() + 2, opts)?;
    let grid = problem.grid();
    let mut rows = Vec::new();
    for (i, s) in gamma.iter().enumerate() {
        let mut best: Option<(usize, f64)> = None;
        for (j, t) in g.solutions.iter().enumerate() {
            let d = grid.h1_norm(&s.field.axpy(-1.0, &t.field))?.min(grid.h1_norm(&s.field.axpy(1.0, &t.field))?);
            if best.is_none_or(|(_, b)| d < b) {
                best = Some((j, d));
            }
        }
        rows.push(match best {
            Some((j, d)) => json!({
                "gamma_index": i,
                "nearest_g_index": j,
                "h1_distance": d,
                "relative_distance": d / s.h1_norm,
                "energy_gap": s.energy.total - g.solutions[j].energy.total,
            }),
            None => json!({ "gamma_index": i, "nearest_g_index": null }),
        });
    }
    Ok(json!({ "g_energies": g.solutions.iter().map(|t| t.energy.total).collect::<Vec<_>>(), "nearest": rows }))
}

fn load_kernel(config: &RunConfig, grid: &ReducedGrid, warnings: &mut Vec<String>) -> Result<KernelMatrix> {
    match config.cache() {
        None => assemble_kernel(grid),
        Some(cache) => {
            let (k, outcome) = cache.load_or_assemble(grid)?;
            if let CacheOutcome::Rebuilt(reason) = outcome {
                warnings.push(format!("kernel cache rebuilt: {reason}"));
            }
            Ok(k)
        }
    }
}

fn grid_json(grid: &ReducedGrid) -> Value {
    json!({
        "size": grid.len(),
        "parts": grid.parts(),
        "design_degree": grid.design_degree(),
        "nodes": grid.nodes(),
        "weights": grid.weights(),
    })
}

fn kernel_payload(grid: &ReducedGrid, kernel: &KernelMatrix) -> Result<Value> {
    let ones = grid.constant(1.0);
    let j1 = choquard_core::kernel::apply_jmu(kernel, grid, &ones)?;
    let lo = j1.values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = j1.values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    Ok(json!({
        "params": grid.params(),
        "grid": grid_json(grid),
        "meta": kernel.meta,
        "hash": kernel.hash(),
        "row_sums": { "min": lo, "max": hi, "expected": funk_hecke_closed_form(grid.params(), 0) },
        "min_entry": kernel.min_entry(),
        "max_entry": kernel.max_entry(),
        "entries": kernel.entries(),
    }))
}

/// The standard bubble, its lift to the sphere and the constant solution it corresponds to.
fn bubble_payload(params: &ProblemParams) -> Result<Value> {
    let n = params.n();
    let bubble = Bubble::standard(n);
    let mut values = Vec::new();
    for k in 0..16 {
        let x: Vec<f64> = (0..n as usize).map(|i| ((k * 7 + i * 3) % 11) as f64 / 2.0 - 2.5).collect();
        let xi = stereo_inverse(&x);
        values.push(pull_back(|y| bubble_eval(&bubble, params, y), &xi)?);
    }
    let lifted = values[0];
    let spread = values.iter().map(|v| (v - lifted).abs()).fold(0.0, f64::max);
    let p = params.p();
    let mass = params.mass();
    let c_mu = funk_hecke_closed_form(params, 0);
    let c_star = (mass / c_mu).powf(1.0 / (2.0 * p - 2.0));
    let area = choquard_core::sphere_area(n);
    let energy = 0.5 * mass * c_star * c_star * area - c_mu * c_star.powf(2.0 * p) * area / (2.0 * p);
    let mu = params.mu_f64();
    Ok(json!({
        "params": params,
        "bubble_constant": bubble_constant(n),
        "lifted_value": lifted,
        "lifted_spread": spread,
        "riesz_constant": c_mu,
        "constant_solution": c_star,
        "amplitude": c_star / lifted,
        "energy": energy,
        "positive_solutions_classified": !(n >= 5 && mu > 4.0),
    }))
}

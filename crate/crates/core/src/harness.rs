//! Solve and benchmark plumbing shared by the command-line tool.

use std::io::Write;
use std::path::Path;

use nalgebra::DVector;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::baselines::{self, BaselineOptions, LineSearchSpec, LINE_SEARCH_NOTE};
use crate::drsom::{self, SolverConfig};
use crate::error::{Error, Result};
use crate::problem::Objective;
use crate::problems::{lp_generate, snl_generate, Instance, LpParams, SnlParams};
use crate::report::{RunReport, Status, TraceRecord};

pub const TRACE_COLUMNS: [&str; 8] = ["k", "f", "gnorm", "lambda_or_mu", "delta", "rho", "step_norm", "accepted"];

/// Geometric-mean shifts for iterations and seconds.
pub const SHIFT_ITERATIONS: f64 = 50.0;
pub const SHIFT_SECONDS: f64 = 1.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "solver", rename_all = "snake_case")]
pub enum SolverSpec {
    Drsom(SolverConfig),
    Gd(BaselineOptions),
    Cg(BaselineOptions),
    Lbfgs { memory: usize, options: BaselineOptions },
}

impl SolverSpec {
    pub fn name(&self) -> &'static str {
        match self {
            SolverSpec::Drsom(_) => "drsom",
            SolverSpec::Gd(_) => "gd",
            SolverSpec::Cg(_) => "cg",
            SolverSpec::Lbfgs { .. } => "lbfgs",
        }
    }

    /// Default configuration of a solver by name.
    pub fn by_name(name: &str) -> Option<Self> {
        let wolfe = |ls| BaselineOptions::new(1e-6, 10_000, ls);
        Some(match name {
            "drsom" => SolverSpec::Drsom(SolverConfig::default()),
            "gd" => SolverSpec::Gd(wolfe(LineSearchSpec::wolfe(0.9))),
            "cg" => SolverSpec::Cg(wolfe(LineSearchSpec::cg_default())),
            "lbfgs" => SolverSpec::Lbfgs { memory: 10, options: wolfe(LineSearchSpec::wolfe(0.9)) },
            _ => return None,
        })
    }

    pub fn set_limits(&mut self, tol_g: Option<f64>, max_iter: Option<usize>, time_limit: Option<f64>) {
        match self {
            SolverSpec::Drsom(c) => {
                c.tol_g = tol_g.unwrap_or(c.tol_g);
                c.max_iter = max_iter.unwrap_or(c.max_iter);
                c.time_limit = time_limit.or(c.time_limit);
            }
            SolverSpec::Gd(o) | SolverSpec::Cg(o) | SolverSpec::Lbfgs { options: o, .. } => {
                o.tol_g = tol_g.unwrap_or(o.tol_g);
                o.max_iter = max_iter.unwrap_or(o.max_iter);
                o.time_limit = time_limit.or(o.time_limit);
            }
        }
    }

    pub fn run(&self, obj: &Objective, x0: &DVector<f64>) -> Result<RunReport> {
        match self {
            SolverSpec::Drsom(c) => drsom::minimize(obj, x0, c),
            SolverSpec::Gd(o) => baselines::gd_minimize(obj, x0, o),
            SolverSpec::Cg(o) => baselines::cg_minimize(obj, x0, o),
            SolverSpec::Lbfgs { memory, options } => baselines::lbfgs_minimize(obj, x0, *memory, options),
        }
    }

    /// SHA-256 of the canonical JSON encoding.
    pub fn digest(&self) -> String {
        sha256_hex(&serde_json::to_vec(self).expect("solver spec serializes"))
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub status: Status,
    pub iterations: usize,
    pub f_final: f64,
    pub gnorm_final: f64,
    pub n_f: u64,
    pub n_g: u64,
    pub n_hvp: u64,
    pub wall_seconds: f64,
    pub solver: String,
    pub config_digest: String,
    pub instance_digest: String,
}

impl Summary {
    pub fn new(report: &RunReport, spec: &SolverSpec, instance_digest: &str) -> Self {
        Self {
            status: report.status,
            iterations: report.iterations,
            f_final: report.f_final,
            gnorm_final: report.gnorm_final,
            n_f: report.counts.n_f,
            n_g: report.counts.n_g,
            n_hvp: report.counts.n_hvp,
            wall_seconds: report.wall_seconds,
            solver: spec.name().to_string(),
            config_digest: spec.digest(),
            instance_digest: instance_digest.to_string(),
        }
    }
}

pub fn write_trace<W: Write>(out: W, trace: &[TraceRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TRACE_COLUMNS).map_err(csv_err)?;
    for r in trace {
        w.write_record([
            r.k.to_string(),
            r.f.to_string(),
            r.gnorm.to_string(),
            r.lambda_or_mu.to_string(),
            r.delta.to_string(),
            r.rho.to_string(),
            r.step_norm.to_string(),
            r.accepted.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

/// One parameter cell of a benchmark grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Cell {
    Lp { n: usize, m: usize, r: f64, p: f64, eps: f64 },
    Snl { n: usize, m: usize, radio_range: f64, noise: f64 },
}

impl Cell {
    pub fn label(&self) -> String {
        match self {
            Cell::Lp { n, m, r, .. } => format!("lp n={n} m={m} r={r}"),
            Cell::Snl { n, m, radio_range, noise } => format!("snl n={n} m={m} rd={radio_range} nf={noise}"),
        }
    }

    pub fn instance(&self, seed: u64) -> Result<Instance> {
        Ok(match *self {
            Cell::Lp { n, m, r, p, eps } => {
                let params = LpParams { n, m, r, p, eps, seed };
                Instance::Lp { inst: lp_generate(&params)?, params: Some(params) }
            }
            Cell::Snl { n, m, radio_range, noise } => {
                let params = SnlParams { n, m, radio_range, noise, seed };
                Instance::Snl { inst: snl_generate(&params)?, params: Some(params) }
            }
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedSolver {
    pub name: String,
    pub spec: SolverSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchSpec {
    pub cells: Vec<Cell>,
    pub solvers: Vec<NamedSolver>,
    pub seeds: Vec<u64>,
    pub tol_g: f64,
    #[serde(default)]
    pub max_iter: Option<usize>,
    /// Per-run limit in seconds.
    #[serde(default)]
    pub time_limit: Option<f64>,
}

impl BenchSpec {
    pub fn validate(&self) -> Result<()> {
        if self.cells.is_empty() {
            return Err(Error::InvalidConfig("benchmark grid is empty".into()));
        }
        if self.solvers.is_empty() {
            return Err(Error::InvalidConfig("benchmark solver list is empty".into()));
        }
        if self.seeds.is_empty() {
            return Err(Error::InvalidConfig("benchmark seed list is empty".into()));
        }
        if !(self.tol_g > 0.0) {
            return Err(Error::InvalidConfig("tol_g must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub cell: String,
    pub seed: u64,
    pub solver_name: String,
    #[serde(flatten)]
    pub summary: Summary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub cell: String,
    pub solver_name: String,
    pub runs: usize,
    pub converged: usize,
    pub mean_iterations: f64,
    pub mean_seconds: f64,
    pub sgm_iterations: f64,
    pub sgm_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchMeta {
    pub line_search: String,
    pub shift_iterations: f64,
    pub shift_seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchResult {
    pub meta: BenchMeta,
    pub rows: Vec<BenchRow>,
    pub aggregates: Vec<Aggregate>,
}

/// `exp(mean(ln(v + shift))) - shift`
pub fn shifted_geometric_mean(values: &[f64], shift: f64) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let s: f64 = values.iter().map(|v| (v + shift).ln()).sum();
    (s / values.len() as f64).exp() - shift
}

pub fn run_bench(spec: &BenchSpec) -> Result<BenchResult> {
    spec.validate()?;
    let jobs: Vec<(usize, usize, u64)> = (0..spec.cells.len())
        .flat_map(|c| (0..spec.solvers.len()).flat_map(move |s| spec.seeds.iter().map(move |&seed| (c, s, seed))))
        .collect();
    let mut results: Vec<((usize, usize, u64), BenchRow)> = jobs
        .par_iter()
        .map(|&(c, s, seed)| {
            let cell = &spec.cells[c];
            let inst = cell.instance(seed)?;
            let mut solver = spec.solvers[s].spec.clone();
            solver.set_limits(Some(spec.tol_g), spec.max_iter, spec.time_limit);
            let obj = inst.objective();
            let report = solver.run(&obj, &inst.start())?;
            let row = BenchRow {
                cell: cell.label(),
                seed,
                solver_name: spec.solvers[s].name.clone(),
                summary: Summary::new(&report, &solver, &inst.digest()?),
            };
            Ok(((c, s, seed), row))
        })
        .collect::<Result<_>>()?;
    results.sort_by_key(|(key, _)| *key);

    let mut aggregates = Vec::new();
    for (c, cell) in spec.cells.iter().enumerate() {
        for (s, solver) in spec.solvers.iter().enumerate() {
            let rows: Vec<&BenchRow> = results.iter().filter(|(k, _)| k.0 == c && k.1 == s).map(|(_, r)| r).collect();
            let iters: Vec<f64> = rows.iter().map(|r| r.summary.iterations as f64).collect();
            let secs: Vec<f64> = rows.iter().map(|r| r.summary.wall_seconds).collect();
            let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
            aggregates.push(Aggregate {
                cell: cell.label(),
                solver_name: solver.name.clone(),
                runs: rows.len(),
                converged: rows.iter().filter(|r| r.summary.status == Status::Converged).count(),
                mean_iterations: mean(&iters),
                mean_seconds: mean(&secs),
                sgm_iterations: shifted_geometric_mean(&iters, SHIFT_ITERATIONS),
                sgm_seconds: shifted_geometric_mean(&secs, SHIFT_SECONDS),
            });
        }
    }
    Ok(BenchResult {
        meta: BenchMeta {
            line_search: LINE_SEARCH_NOTE.to_string(),
            shift_iterations: SHIFT_ITERATIONS,
            shift_seconds: SHIFT_SECONDS,
        },
        rows: results.into_iter().map(|(_, r)| r).collect(),
        aggregates,
    })
}

pub fn write_bench_csv<W: Write>(out: W, result: &BenchResult) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "cell", "seed", "solver_name", "solver", "status", "iterations", "f_final", "gnorm_final", "n_f", "n_g",
        "n_hvp", "wall_seconds",
    ])
    .map_err(csv_err)?;
    for r in &result.rows {
        let s = &r.summary;
        w.write_record([
            r.cell.clone(),
            r.seed.to_string(),
            r.solver_name.clone(),
            s.solver.clone(),
            s.status.to_string(),
            s.iterations.to_string(),
            s.f_final.to_string(),
            s.gnorm_final.to_string(),
            s.n_f.to_string(),
            s.n_g.to_string(),
            s.n_hvp.to_string(),
            s.wall_seconds.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    std::fs::write(path, serde_json::to_string_pretty(value)?)?;
    Ok(())
}

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};

use ::drsom::harness::{self, BenchSpec, SolverSpec, Summary};
use ::drsom::problems::{classic, lp_generate, snl_generate, Instance, LpParams, SnlParams};
use ::drsom::{CorrectorPolicy, InterpScale, Mode, ModelMethod, Objective};
use nalgebra::DVector;

#[derive(Parser)]
#[command(name = "drsom", version, about = "Dimension-reduced second-order optimization")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a seeded problem instance and print its digest.
    Gen {
        #[command(subcommand)]
        family: GenFamily,
    },
    /// Run one solver on one problem.
    Solve(SolveArgs),
    /// Run a benchmark matrix described by a JSON file.
    Bench {
        #[arg(long)]
        spec: PathBuf,
        /// Output prefix; writes PREFIX.csv and PREFIX.json.
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Subcommand)]
enum GenFamily {
    /// Smoothed L2-Lp regression.
    Lp {
        #[arg(long, default_value_t = 300)]
        n: usize,
        #[arg(long, default_value_t = 100)]
        m: usize,
        /// Fraction of nonzero entries in A.
        #[arg(long, default_value_t = 0.15)]
        r: f64,
        #[arg(long, default_value_t = 0.5)]
        p: f64,
        #[arg(long, default_value_t = 0.1)]
        eps: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Sensor network localization.
    Snl {
        #[arg(long, default_value_t = 80)]
        n: usize,
        #[arg(long, default_value_t = 5)]
        m: usize,
        #[arg(long, default_value_t = 0.5)]
        rd: f64,
        #[arg(long, default_value_t = 0.05)]
        nf: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum SolverName {
    Drsom,
    Gd,
    Cg,
    Lbfgs,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Tr,
    Rf,
    Fixed,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModelArg {
    Hvp,
    Fd,
    Interp,
}

#[derive(Clone, Copy, ValueEnum)]
enum CorrectorArg {
    Off,
    Periodic,
}

#[derive(Args)]
struct SolveArgs {
    /// Instance file written by `gen`.
    #[arg(long, conflicts_with = "problem")]
    instance: Option<PathBuf>,
    /// Built-in problem: rosenbrock, quadratic, beale, himmelblau or quartic.
    #[arg(long, required_unless_present = "instance")]
    problem: Option<String>,
    /// Dimension of a built-in problem.
    #[arg(long, default_value_t = 10)]
    n: usize,
    /// Condition number of the built-in quadratic.
    #[arg(long, default_value_t = 1e3)]
    cond: f64,
    /// Solver configuration as JSON; flags given on the command line win.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_enum)]
    solver: Option<SolverName>,
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
    #[arg(long, value_enum)]
    model: Option<ModelArg>,
    /// Keep interpolation samples inside the trust radius.
    #[arg(long)]
    interp_trust: bool,
    #[arg(long, value_enum)]
    corrector: Option<CorrectorArg>,
    /// Curvature estimate for the fixed-radius mode.
    #[arg(long)]
    m_est: Option<f64>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    max_iter: Option<usize>,
    /// Seconds.
    #[arg(long)]
    time_limit: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Per-iteration trace as CSV.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Summary as JSON.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    match cli.command {
        Command::Gen { family } => gen(family).map(|()| ExitCode::SUCCESS),
        Command::Solve(args) => solve(args),
        Command::Bench { spec, out } => bench(&spec, &out).map(|()| ExitCode::SUCCESS),
    }
}

fn gen(family: GenFamily) -> anyhow::Result<()> {
    let (inst, out) = match family {
        GenFamily::Lp { n, m, r, p, eps, seed, out } => {
            let params = LpParams { n, m, r, p, eps, seed };
            (Instance::Lp { inst: lp_generate(&params)?, params: Some(params) }, out)
        }
        GenFamily::Snl { n, m, rd, nf, seed, out } => {
            let params = SnlParams { n, m, radio_range: rd, noise: nf, seed };
            (Instance::Snl { inst: snl_generate(&params)?, params: Some(params) }, out)
        }
    };
    inst.save(&out).with_context(|| format!("writing {}", out.display()))?;
    println!("{}", inst.digest()?);
    Ok(())
}

fn load_problem(args: &SolveArgs) -> anyhow::Result<(Objective, DVector<f64>, String)> {
    if let Some(path) = &args.instance {
        let inst = Instance::load(path).with_context(|| format!("reading {}", path.display()))?;
        return Ok((inst.objective(), inst.start(), inst.digest()?));
    }
    let name = args.problem.as_deref().unwrap_or_default();
    let seed = args.seed.unwrap_or(0);
    let Some(p) = classic::by_name(name, args.n, args.cond, seed) else {
        bail!("unknown problem {name:?}");
    };
    let digest = harness::sha256_hex(format!("{}:{}:{}:{}", p.name, args.n, args.cond, seed).as_bytes());
    Ok((p.objective, p.start, digest))
}

fn solver_spec(args: &SolveArgs) -> anyhow::Result<SolverSpec> {
    let mut spec = match &args.config {
        Some(path) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?
        }
        None => SolverSpec::by_name("drsom").expect("drsom is a known solver"),
    };
    if let Some(name) = args.solver {
        let name = match name {
            SolverName::Drsom => "drsom",
            SolverName::Gd => "gd",
            SolverName::Cg => "cg",
            SolverName::Lbfgs => "lbfgs",
        };
        if spec.name() != name {
            spec = SolverSpec::by_name(name).expect("known solver");
        }
    }
    let drsom_flags = args.mode.is_some()
        || args.model.is_some()
        || args.corrector.is_some()
        || args.m_est.is_some()
        || args.interp_trust;
    match &mut spec {
        SolverSpec::Drsom(cfg) => {
            if let Some(mode) = args.mode {
                cfg.mode = match mode {
                    ModeArg::Tr => Mode::TrustRadius,
                    ModeArg::Rf => Mode::RadiusFree,
                    ModeArg::Fixed => Mode::FixedRadius,
                };
            }
            if let Some(model) = args.model {
                cfg.model_method = match model {
                    ModelArg::Hvp => ModelMethod::HvpExact,
                    ModelArg::Fd => ModelMethod::HvpFd,
                    ModelArg::Interp => ModelMethod::default(),
                };
            }
            if args.interp_trust {
                match &mut cfg.model_method {
                    ModelMethod::Interpolation { scale, .. } => *scale = InterpScale::TrustRadius,
                    _ => bail!("--interp-trust needs the interpolation model"),
                }
            }
            if let Some(c) = args.corrector {
                cfg.corrector = match c {
                    CorrectorArg::Off => CorrectorPolicy::Off,
                    CorrectorArg::Periodic => CorrectorPolicy::periodic(),
                };
            }
            if args.m_est.is_some() {
                cfg.m_est = args.m_est;
            }
            if let Some(seed) = args.seed {
                cfg.seed = seed;
            }
            cfg.validate()?;
        }
        _ if drsom_flags => bail!("--mode, --model, --corrector and --m-est apply to drsom only"),
        _ => {}
    }
    spec.set_limits(args.tol, args.max_iter, args.time_limit);
    Ok(spec)
}

fn solve(args: SolveArgs) -> anyhow::Result<ExitCode> {
    let spec = solver_spec(&args)?;
    let (obj, x0, digest) = load_problem(&args)?;
    let report = spec.run(&obj, &x0)?;
    let summary = Summary::new(&report, &spec, &digest);
    if let Some(path) = &args.trace {
        let file = File::create(path).with_context(|| format!("writing {}", path.display()))?;
        harness::write_trace(BufWriter::new(file), &report.trace)?;
    }
    if let Some(path) = &args.out {
        harness::write_json(path, &summary)?;
    }
    println!(
        "{} after {} iterations: f = {:e}, |g| = {:e}",
        summary.status, summary.iterations, summary.f_final, summary.gnorm_final
    );
    if let Some(msg) = &report.message {
        eprintln!("{msg}");
    }
    Ok(if report.converged() { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

fn bench(spec_path: &Path, prefix: &Path) -> anyhow::Result<()> {
    let text = std::fs::read_to_string(spec_path).with_context(|| format!("reading {}", spec_path.display()))?;
    let spec: BenchSpec = serde_json::from_str(&text).with_context(|| format!("parsing {}", spec_path.display()))?;
    let result = harness::run_bench(&spec)?;
    let csv_path = prefix.with_extension("csv");
    let file = File::create(&csv_path).with_context(|| format!("writing {}", csv_path.display()))?;
    harness::write_bench_csv(BufWriter::new(file), &result)?;
    harness::write_json(&prefix.with_extension("json"), &result)?;
    for a in &result.aggregates {
        println!(
            "{:<28} {:<10} {}/{} converged, sgm iterations {:.1}, sgm seconds {:.3}",
            a.cell, a.solver_name, a.converged, a.runs, a.sgm_iterations, a.sgm_seconds
        );
    }
    Ok(())
}

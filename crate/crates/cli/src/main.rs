use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use fmmlab::analysis::{
    compare_refinement, run_multirun, run_plain, run_shadow, run_stochastic, to_json, MultiRunOptions,
};
use fmmlab::backtrace::path_to_csv;
use fmmlab::fmm::SolveOptions;
use fmmlab::grid::{field_to_pgm, generate_scenario, load_scenario, write_scenario, GeneratorParams, Preset, Scenario};
use fmmlab::shadow::{ShadowConfig, DEFAULT_MANTISSA_BITS, DEFAULT_MAX_PATHS, DEFAULT_MAX_SYMBOLS};

#[derive(Parser)]
#[command(name = "fmmlab", version, about = "Fast-marching minimum-cost paths and precision audits")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a seeded scenario file.
    Gen(GenArgs),
    /// Solve a scenario and extract the optimal path.
    Solve(SolveArgs),
    /// Run a precision audit and write a JSON report.
    Analyze(AnalyzeArgs),
    /// Compare costs against a refined grid.
    Refine(RefineArgs),
}

#[derive(Args)]
struct GenArgs {
    #[arg(long, value_parser = parse_preset)]
    preset: Preset,
    #[arg(long)]
    nx: Option<usize>,
    #[arg(long)]
    ny: Option<usize>,
    #[arg(long)]
    dx: Option<f64>,
    #[arg(long)]
    dy: Option<f64>,
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long)]
    scenario: PathBuf,
    #[arg(long)]
    out_path: Option<PathBuf>,
    #[arg(long)]
    out_field: Option<PathBuf>,
    #[arg(long)]
    early_exit: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Stochastic,
    Multirun,
    Shadow,
}

#[derive(Args)]
struct AnalyzeArgs {
    #[arg(long, value_enum)]
    mode: Mode,
    #[arg(long)]
    scenario: PathBuf,
    #[arg(long)]
    seed: u64,
    #[arg(long, default_value_t = 10)]
    runs: usize,
    /// Round to nearest in every multirun member.
    #[arg(long)]
    no_perturbation: bool,
    #[arg(long, default_value_t = DEFAULT_MAX_PATHS)]
    max_paths: usize,
    #[arg(long, default_value_t = DEFAULT_MANTISSA_BITS)]
    mantissa_bits: u32,
    #[arg(long, default_value_t = DEFAULT_MAX_SYMBOLS)]
    max_symbols: usize,
    /// Site id whose unstable events follow the float branch.
    #[arg(long = "sync-site", value_name = "ID")]
    sync_sites: Vec<String>,
    /// Worker threads for multirun members.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    #[arg(long)]
    report: PathBuf,
}

#[derive(Args)]
struct RefineArgs {
    #[arg(long)]
    scenario: PathBuf,
    #[arg(long)]
    factor: usize,
    #[arg(long)]
    report: PathBuf,
}

fn parse_preset(s: &str) -> Result<Preset, String> {
    s.parse().map_err(|_| format!("expected one of uniform, obstacles, turbulence, paper-like; got '{s}'"))
}

fn read_scenario(path: &Path) -> Result<Scenario, String> {
    let text = fs::read_to_string(path).map_err(|e| format!("io-error: {}: {e}", path.display()))?;
    load_scenario(&text).map_err(|e| e.to_string())
}

fn write(path: &Path, bytes: impl AsRef<[u8]>) -> Result<(), String> {
    fs::write(path, bytes).map_err(|e| format!("io-error: {}: {e}", path.display()))
}

fn gen(a: GenArgs) -> Result<String, String> {
    let params = GeneratorParams { nx: a.nx, ny: a.ny, dx: a.dx, dy: a.dy, tau: a.tau, ..Default::default() };
    let s = generate_scenario(a.preset, &params, a.seed).map_err(|e| e.to_string())?;
    write(&a.out, write_scenario(&s))?;
    let g = s.geometry();
    Ok(format!("scenario={} nx={} ny={}", s.name, g.nx, g.ny))
}

fn solve(a: SolveArgs) -> Result<String, String> {
    let s = read_scenario(&a.scenario)?;
    let r = run_plain(&s, SolveOptions { early_exit: a.early_exit }).map_err(|e| e.to_string())?;
    if let Some(p) = &a.out_path {
        write(p, path_to_csv(&r.points))?;
    }
    if let Some(p) = &a.out_field {
        let g = s.geometry();
        write(p, field_to_pgm(g.nx, g.ny, &r.field))?;
    }
    Ok(format!("cost={} t_goal={} points={}", r.cost, r.t_goal, r.point_count))
}

fn analyze(a: AnalyzeArgs) -> Result<String, String> {
    let s = read_scenario(&a.scenario)?;
    let (json, summary) = match a.mode {
        Mode::Stochastic => {
            let r = run_stochastic(&s, a.seed).map_err(|e| e.to_string())?;
            let summary = format!(
                "cost={} sigma={} digits={} points={} instabilities={}",
                r.cost.mean,
                r.cost.sigma,
                r.cost.significant_digits,
                r.path.point_count,
                r.counters.total()
            );
            (to_json(&r), summary)
        }
        Mode::Multirun => {
            let opts = MultiRunOptions { runs: a.runs, seed: a.seed, perturb: !a.no_perturbation, jobs: a.jobs };
            let r = run_multirun(&s, opts).map_err(|e| e.to_string())?;
            let opt = |v: Option<f64>| v.map_or("none".to_string(), |v| v.to_string());
            let summary = format!(
                "runs={} failed={} mean={} sigma={} reference={} points={}",
                r.runs.len(),
                r.failed_runs,
                opt(r.cost.mean),
                opt(r.cost.sigma),
                r.cost.reference,
                r.path.point_count
            );
            (to_json(&r), summary)
        }
        Mode::Shadow => {
            let cfg = ShadowConfig {
                mantissa_bits: a.mantissa_bits,
                max_symbols: a.max_symbols,
                max_paths: a.max_paths,
                sync_sites: a.sync_sites.into_iter().collect(),
                ..Default::default()
            };
            let r = run_shadow(&s, &cfg, a.seed).map_err(|e| e.to_string())?;
            let cost = r.cost.map_or("none".to_string(), |c| c.to_string());
            let summary = format!(
                "cost={} error_bound={} flows={} unstable_sites={}",
                cost,
                r.error_bound,
                r.flows.len(),
                r.unstable_sites.len()
            );
            (to_json(&r), summary)
        }
    };
    write(&a.report, json)?;
    Ok(summary)
}

fn refine(a: RefineArgs) -> Result<String, String> {
    let s = read_scenario(&a.scenario)?;
    let r = compare_refinement(&s, a.factor).map_err(|e| e.to_string())?;
    write(&a.report, to_json(&r))?;
    let [c, f] = &r.resolutions;
    Ok(format!("coarse={} fine={} relative_difference={}", c.cost, f.cost, r.relative_difference))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    let result = match cli.command {
        Command::Gen(a) => gen(a),
        Command::Solve(a) => solve(a),
        Command::Analyze(a) => analyze(a),
        Command::Refine(a) => refine(a),
    };
    match result {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

//! Command-line front end.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::codefile::{code_from_json, code_to_json};
use crate::codes::{build_code, CodeFamily, CodeParams, CodeSeeds, Word};
use crate::error::{Error, Result};
use crate::noise::{loss_dephasing_channel, NoisePoint};
use crate::sdp::SdpSettings;
use crate::sweep::{self, log_space, GridMode, GridSpec, RunOptions, SweepConfig, DEFAULT_MASTER_SEED};
use crate::wigner::{pure_state, wigner, PhaseGrid};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_SOLVER: i32 = 3;
pub const EXIT_IO: i32 = 4;

pub const SEED_ENV: &str = "ROTCODE_SEED";

#[derive(Parser, Debug)]
#[command(name = "rotcode", version, about = "Bosonic rotation codes under loss and dephasing")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Build a code and write it as JSON.
    Codegen(CodegenArgs),
    /// Optimal-recovery fidelity of one code at one noise point.
    Evaluate(EvaluateArgs),
    /// Sweep families and parameters over a noise grid.
    Sweep(SweepArgs),
    /// Wigner function of a codeword on a grid, as CSV.
    Wigner(WignerArgs),
}

#[derive(Args, Debug)]
pub struct CodegenArgs {
    #[arg(long, value_parser = parse_family)]
    pub family: CodeFamily,
    /// Rotation order (ignored for the trivial code).
    #[arg(long = "N", alias = "n", default_value_t = 2)]
    pub n: usize,
    /// Binomial or random-code parameter.
    #[arg(long = "K", alias = "k")]
    pub k: Option<usize>,
    /// Cat amplitude.
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Master seed for random families.
    #[arg(long, env = SEED_ENV, default_value_t = DEFAULT_MASTER_SEED)]
    pub seed: u64,
    /// Trial index used to derive the random streams.
    #[arg(long, default_value_t = 0)]
    pub trial: usize,
    /// Explicit stream ids `ZERO,ONE` (overrides --trial).
    #[arg(long, value_delimiter = ',', num_args = 2)]
    pub streams: Option<Vec<u64>>,
    /// Output file (stdout when absent).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub code_file: PathBuf,
    #[arg(long)]
    pub kl: f64,
    #[arg(long)]
    pub kphi: f64,
    #[command(flatten)]
    pub solver: SolverArgs,
}

#[derive(Args, Debug, Clone)]
pub struct SolverArgs {
    #[arg(long, default_value_t = SdpSettings::default().max_iterations)]
    pub max_iter: usize,
    #[arg(long, default_value_t = SdpSettings::default().feasibility_tol)]
    pub feas_tol: f64,
    #[arg(long, default_value_t = SdpSettings::default().gap_tol)]
    pub gap_tol: f64,
}

impl SolverArgs {
    fn settings(&self) -> Result<SdpSettings> {
        let ok = |v: f64| v.is_finite() && v > 0.0 && v < 1.0;
        if !ok(self.feas_tol) || !ok(self.gap_tol) || self.max_iter == 0 {
            return Err(Error::InvalidConfig("solver tolerances must lie in (0, 1), max-iter >= 1".into()));
        }
        Ok(SdpSettings {
            max_iterations: self.max_iter,
            feasibility_tol: self.feas_tol,
            gap_tol: self.gap_tol,
            ..SdpSettings::default()
        })
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum GridKind {
    Full,
    Diagonal,
    LossColumn,
    DephasingRow,
    Points,
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    #[arg(long, value_delimiter = ',', value_parser = parse_family, default_value = "triv,bin,cat,rand1,rand2")]
    pub families: Vec<CodeFamily>,
    #[arg(long = "N", alias = "n", value_delimiter = ',', default_value = "2,3,4")]
    pub n: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "1,2,3,4,5,6,7,8")]
    pub bin_k: Vec<usize>,
    #[arg(long, default_value_t = 0.5)]
    pub alpha_min: f64,
    #[arg(long, default_value_t = 4.0)]
    pub alpha_max: f64,
    #[arg(long, default_value_t = 20)]
    pub alpha_count: usize,
    #[arg(long, value_delimiter = ',', default_value = "1,2,3,4,5,6")]
    pub rand_k: Vec<usize>,
    #[arg(long, default_value_t = 50)]
    pub trials: usize,
    #[arg(long, value_enum, default_value_t = GridKind::Full)]
    pub grid: GridKind,
    #[arg(long, default_value_t = 1e-3)]
    pub grid_min: f64,
    #[arg(long, default_value_t = 0.25)]
    pub grid_max: f64,
    #[arg(long, alias = "ppd", default_value_t = 5.0)]
    pub points_per_decade: f64,
    /// Fixed loss for `--grid loss-column`.
    #[arg(long)]
    pub kl: Option<f64>,
    /// Fixed dephasing for `--grid dephasing-row`.
    #[arg(long)]
    pub kphi: Option<f64>,
    /// Explicit points `KL:KPHI` for `--grid points`.
    #[arg(long, value_delimiter = ',')]
    pub points: Vec<String>,
    #[arg(long, env = SEED_ENV, default_value_t = DEFAULT_MASTER_SEED)]
    pub seed: u64,
    #[arg(long, default_value_t = 0)]
    pub extra_levels: usize,
    /// Worker threads (defaults to the available parallelism).
    #[arg(long)]
    pub jobs: Option<usize>,
    #[arg(long, default_value = "sweep-out")]
    pub out: PathBuf,
    /// Do not read or write the result cache.
    #[arg(long)]
    pub no_cache: bool,
    /// Print the task plan and exit.
    #[arg(long)]
    pub plan_only: bool,
    #[arg(long)]
    pub quiet: bool,
    #[command(flatten)]
    pub solver: SolverArgs,
}

#[derive(Args, Debug)]
pub struct WignerArgs {
    #[arg(long)]
    pub code_file: PathBuf,
    #[arg(long, value_parser = parse_word, default_value = "plus")]
    pub word: Word,
    /// `xmin:xmax:nx,pmin:pmax:np`
    #[arg(long, default_value = "-6:6:121,-6:6:121", allow_hyphen_values = true)]
    pub grid: String,
    /// Apply loss-dephasing noise to the codeword first.
    #[arg(long, default_value_t = 0.0)]
    pub kl: f64,
    #[arg(long, default_value_t = 0.0)]
    pub kphi: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn parse_family(s: &str) -> std::result::Result<CodeFamily, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_word(s: &str) -> std::result::Result<Word, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Io(_) => EXIT_IO,
        _ => EXIT_USAGE,
    }
}

fn write_output(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => std::fs::write(p, text)?,
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())?;
            out.flush()?;
        }
    }
    Ok(())
}

fn read_code(path: &Path) -> Result<crate::codes::Code> {
    let text = std::fs::read_to_string(path)?;
    code_from_json(&text)
}

fn codegen(args: &CodegenArgs) -> Result<i32> {
    let need_k = || args.k.ok_or_else(|| Error::InvalidParameter(format!("family {} needs --K", args.family)));
    let (params, n) = match args.family {
        CodeFamily::Triv => (CodeParams::None, 1),
        CodeFamily::Bin | CodeFamily::Rand1 | CodeFamily::Rand2 => (CodeParams::K(need_k()?), args.n),
        CodeFamily::Cat => (
            CodeParams::Alpha(args.alpha.ok_or_else(|| Error::InvalidParameter("family cat needs --alpha".into()))?),
            args.n,
        ),
    };
    let seeds = match (args.family.is_random(), &args.streams, params) {
        (false, _, _) => None,
        (true, Some(s), _) => Some(CodeSeeds { master: args.seed, zero_stream: s[0], one_stream: s[1] }),
        (true, None, CodeParams::K(k)) => Some(sweep::trial_seeds(args.seed, args.family, n, k, args.trial)),
        (true, None, _) => unreachable!("random families take K"),
    };
    if args.family == CodeFamily::Rand1 {
        if let Some(s) = seeds {
            if s.zero_stream != s.one_stream {
                return Err(Error::InvalidConfig("rand1 uses a single stream".into()));
            }
        }
    }
    let code = build_code(args.family, n, params, seeds)?;
    write_output(args.out.as_deref(), &code_to_json(&code)?)?;
    Ok(EXIT_OK)
}

#[derive(Serialize)]
struct EvaluateOutput<'a> {
    schema_version: u32,
    #[serde(flatten)]
    record: &'a sweep::SweepRecord,
}

fn evaluate(args: &EvaluateArgs) -> Result<i32> {
    let code = read_code(&args.code_file)?;
    let noise = NoisePoint::new(args.kl, args.kphi)?;
    let settings = args.solver.settings()?;
    let rec = sweep::evaluate_point_with(&code, noise, &settings, None)?;
    let text = serde_json::to_string_pretty(&EvaluateOutput { schema_version: 1, record: &rec })?;
    write_output(None, &(text + "\n"))?;
    Ok(if rec.is_failed() { EXIT_SOLVER } else { EXIT_OK })
}

fn parse_point(s: &str) -> Result<NoisePoint> {
    let (a, b) = s.split_once(':').ok_or_else(|| Error::InvalidConfig(format!("noise point `{s}` must be KL:KPHI")))?;
    let num =
        |t: &str| t.trim().parse::<f64>().map_err(|_| Error::InvalidConfig(format!("bad number `{t}` in noise point")));
    NoisePoint::new(num(a)?, num(b)?)
}

pub fn sweep_config(args: &SweepArgs) -> Result<SweepConfig> {
    let mode = match args.grid {
        GridKind::Full => GridMode::Full,
        GridKind::Diagonal => GridMode::Diagonal,
        GridKind::LossColumn => GridMode::LossColumn {
            kappa_l_t: args.kl.ok_or_else(|| Error::InvalidConfig("--grid loss-column needs --kl".into()))?,
        },
        GridKind::DephasingRow => GridMode::DephasingRow {
            kappa_phi_t: args.kphi.ok_or_else(|| Error::InvalidConfig("--grid dephasing-row needs --kphi".into()))?,
        },
        GridKind::Points => {
            GridMode::Points { points: args.points.iter().map(|s| parse_point(s)).collect::<Result<_>>()? }
        }
    };
    if !(args.alpha_min > 0.0 && args.alpha_min <= args.alpha_max) {
        return Err(Error::InvalidConfig("need 0 < alpha-min <= alpha-max".into()));
    }
    let config = SweepConfig {
        families: args.families.clone(),
        n_set: args.n.clone(),
        bin_k: args.bin_k.clone(),
        cat_alpha: log_space(args.alpha_min, args.alpha_max, args.alpha_count),
        rand_k: args.rand_k.clone(),
        trials: args.trials,
        grid: GridSpec { min: args.grid_min, max: args.grid_max, points_per_decade: args.points_per_decade, mode },
        master_seed: args.seed,
        extra_levels: args.extra_levels,
        solver: args.solver.settings()?,
    };
    config.validate()?;
    Ok(config)
}

fn run_sweep_command(args: &SweepArgs) -> Result<i32> {
    let config = sweep_config(args)?;
    if args.plan_only {
        let plan = sweep::plan(&config)?;
        write_output(None, &(serde_json::to_string_pretty(&plan)? + "\n"))?;
        return Ok(EXIT_OK);
    }
    let jobs = args.jobs.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    if jobs == 0 {
        return Err(Error::InvalidConfig("--jobs must be at least 1".into()));
    }
    std::fs::create_dir_all(&args.out)?;
    let options = RunOptions {
        jobs,
        cache_path: (!args.no_cache).then(|| args.out.join(sweep::run::CACHE_FILE)),
        verbose: !args.quiet,
    };
    let result = sweep::run_sweep(&config, &options)?;
    let phase = sweep::summarize(&result)?;
    sweep::write_outputs(&args.out, &config, &result, &phase)?;
    let failed = result.records.iter().filter(|r| r.is_failed()).count();
    if !args.quiet {
        eprintln!("wrote {} records to {}", result.records.len(), args.out.display());
    }
    if failed > 0 {
        eprintln!("{failed} evaluations failed; see solver_status");
        return Ok(EXIT_SOLVER);
    }
    Ok(EXIT_OK)
}

fn run_wigner(args: &WignerArgs) -> Result<i32> {
    let code = read_code(&args.code_file)?;
    let grid = PhaseGrid::parse(&args.grid)?;
    let noise = NoisePoint::new(args.kl, args.kphi)?;
    let mut rho = pure_state(&code.word(args.word))?;
    if noise != NoisePoint::noiseless() {
        rho = loss_dephasing_channel(noise, code.dim())?.apply(&rho)?;
    }
    let field = wigner(&rho, &grid)?;
    let header = vec![
        format!("family={} N={} param={}", code.family(), code.rotation_order(), code.params().descriptor()),
        format!("word={:?} kappa_l_t={:e} kappa_phi_t={:e}", args.word, args.kl, args.kphi),
    ];
    match &args.out {
        Some(p) => field.write_csv(std::fs::File::create(p)?, &header)?,
        None => field.write_csv(std::io::stdout().lock(), &header)?,
    }
    Ok(EXIT_OK)
}

/// Parse arguments and run; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let outcome = match &cli.command {
        Command::Codegen(a) => codegen(a),
        Command::Evaluate(a) => evaluate(a),
        Command::Sweep(a) => run_sweep_command(a),
        Command::Wigner(a) => run_wigner(a),
    };
    match outcome {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

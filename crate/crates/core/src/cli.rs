//! Command-line front end. Every subcommand is a task; `verify` reads the
//! task and its settings from a config file.
//!
//! Exit codes: 0 when every verdict passes, 1 when one fails, 2 for usage
//! and configuration errors.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::config::{load_settings, Settings, Task};
use crate::error::Error;
use crate::experiments::{
    bounded_difference_witness, check_bounded_difference, estimate_expected_deviation,
    evaluate_cardinality_formulas, inequality_oracles, mcdiarmid_tails, minimal_m_sweep, EnsembleSource,
    ExperimentConfig, MRange, Mode, Verdict,
};
use crate::haar::{check_isotropy, PureState, Seed, UnitaryEnsemble, UNITARITY_TOL};
use crate::net::{build_net, verify_covering};
use crate::norms::PExponent;
use crate::randomizer::{
    certify_epsilon_randomizing, hayden_winter_bound, required_net_radius, EvaluationPlan, RandomizingChannel,
};
use crate::report::{sweep_rows, to_csv, to_json, Manifest, Report, SWEEP_COLUMNS};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

const TAG_ISOTROPY: u64 = 0x49;

#[derive(Debug, Parser)]
#[command(name = "randomizer", version, about = "Random mixed-unitary channels and Schatten-norm randomization checks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Worker threads (default: all cores)
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    /// Write the report here instead of stdout
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Text,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample a Haar ensemble and report unitarity and isotropy
    Sample(Settings),
    /// Run the norm inequality oracles on random matrices
    Norms(Settings),
    /// Check whether a random channel is epsilon-randomizing
    Randomize(Settings),
    /// Build an eta-net of pure states and verify its covering
    Net(Settings),
    /// Sweep m for the smallest cardinality that randomizes
    Sweep(Settings),
    /// Run the task described by a TOML config (or a report's manifest)
    Verify {
        config: PathBuf,
        #[command(flatten)]
        settings: Settings,
    },
    /// Print the cardinality formulas
    Formulas(Settings),
}

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Config(String),
    Run(Error),
    Io(String),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Config(m) => write!(f, "config error: {m}"),
            CliError::Run(e) => write!(f, "{e}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Run(e)
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

/// What a task produced: a JSON-serializable result, verdicts, and an
/// optional table for CSV output.
pub struct Outcome {
    pub result: serde_json::Value,
    pub verdicts: Vec<Verdict>,
    pub table: Option<(Vec<&'static str>, Vec<Vec<String>>)>,
    pub text: Option<String>,
}

fn outcome<T: Serialize>(result: &T, verdicts: Vec<Verdict>) -> CliResult<Outcome> {
    let result = serde_json::to_value(result).map_err(|e| CliError::Io(e.to_string()))?;
    Ok(Outcome { result, verdicts, table: None, text: None })
}

fn verdict(name: &str, pass: bool) -> Verdict {
    Verdict { name: name.to_string(), pass }
}

fn require<T: Clone>(v: &Option<T>, key: &str) -> CliResult<T> {
    v.clone().ok_or_else(|| CliError::Usage(format!("missing --{} (config key `{}`)", key.replace('_', "-"), key)))
}

fn positive(v: usize, key: &str) -> CliResult<usize> {
    if v == 0 {
        return Err(CliError::Usage(format!("{key} must be positive")));
    }
    Ok(v)
}

fn experiment_config(s: &Settings, m: MRange, default_trials: usize) -> CliResult<ExperimentConfig> {
    let d = positive(require(&s.d, "d")?, "d")?;
    let mut cfg = ExperimentConfig::new(d, s.p.unwrap_or(PExponent::ONE), s.epsilon.unwrap_or(1.0), m, s.seed());
    cfg.r = s.r;
    cfg.trials = s.trials.unwrap_or(default_trials);
    cfg.states_per_trial = s.states.unwrap_or(cfg.states_per_trial);
    cfg.mode = s.mode.unwrap_or(Mode::Sample);
    cfg.source = s.ensemble.unwrap_or(EnsembleSource::Haar);
    cfg.net_budget = s.budget.unwrap_or(cfg.net_budget);
    cfg.validate().map_err(CliError::Run)?;
    Ok(cfg)
}

fn fixed_m(s: &Settings) -> CliResult<MRange> {
    Ok(MRange::fixed(positive(require(&s.m, "m")?, "m")?))
}

#[derive(Serialize)]
struct SampleResult {
    d: usize,
    m: usize,
    unitarity_residuals: Vec<f64>,
    max_residual: f64,
    tolerance: f64,
    isotropy: crate::haar::IsotropyCheck,
}

fn run_sample(s: &Settings) -> CliResult<Outcome> {
    let d = positive(require(&s.d, "d")?, "d")?;
    let m = positive(require(&s.m, "m")?, "m")?;
    let seed = s.seed();
    let ensemble = UnitaryEnsemble::haar(d, m, seed)?;
    let residuals = ensemble
        .members()
        .iter()
        .map(|u| u.unitarity_residual())
        .collect::<crate::error::Result<Vec<f64>>>()?;
    let max_residual = residuals.iter().copied().fold(0.0, f64::max);
    let isotropy = check_isotropy(d, s.samples.unwrap_or(1000), &PureState::basis(d, 0)?, seed.split(TAG_ISOTROPY))?;
    let verdicts = vec![verdict("unitarity", max_residual <= UNITARITY_TOL), verdict("isotropy", isotropy.pass)];
    let result = SampleResult { d, m, unitarity_residuals: residuals, max_residual, tolerance: UNITARITY_TOL, isotropy };
    outcome(&result, verdicts)
}

fn run_oracles(s: &Settings) -> CliResult<Outcome> {
    let dims = s.dims.clone().or_else(|| s.d.map(|d| vec![d])).unwrap_or_else(|| vec![2, 4, 8, 16]);
    let batch = inequality_oracles(s.count.unwrap_or(1000), &dims, s.seed())?;
    let verdicts = vec![
        verdict("interpolation", batch.interpolation.failures == 0),
        verdict("hoelder", batch.hoelder.failures == 0),
        verdict("reverse_triangle", batch.reverse_triangle.failures == 0),
    ];
    outcome(&batch, verdicts)
}

fn channel_for(s: &Settings, d: usize, m: usize, seed: Seed) -> CliResult<RandomizingChannel> {
    match s.ensemble.unwrap_or(EnsembleSource::Haar) {
        EnsembleSource::Haar => Ok(RandomizingChannel::haar(d, m, seed)?),
        EnsembleSource::PauliCycle => {
            if d != 2 {
                return Err(CliError::Usage("the pauli ensemble requires d = 2".into()));
            }
            Ok(RandomizingChannel::pauli_cycle(m))
        }
    }
}

#[derive(Serialize)]
struct CertifyResult {
    d: usize,
    m: usize,
    p: PExponent,
    epsilon: f64,
    ensemble: EnsembleSource,
    mode: Mode,
    net_size: Option<usize>,
    net_eta: Option<f64>,
    certification: crate::randomizer::Certification,
    output_norm: Option<crate::randomizer::OutputNormCheck>,
}

fn run_certify(s: &Settings) -> CliResult<Outcome> {
    let d = positive(require(&s.d, "d")?, "d")?;
    let m = positive(require(&s.m, "m")?, "m")?;
    let epsilon = require(&s.epsilon, "epsilon")?;
    let p = s.p.unwrap_or(PExponent::ONE);
    let mode = s.mode.unwrap_or(Mode::Sample);
    let seed = s.seed();
    if mode == Mode::Net && d > crate::net::MAX_NET_DIM {
        return Err(Error::NetDimensionGuard { d }.into());
    }
    let ch = channel_for(s, d, m, seed.split(0))?;
    let states = s.states.unwrap_or(1000);
    let (certification, net_size, net_eta) = match mode {
        Mode::Net => {
            let eta = s.eta.unwrap_or_else(|| required_net_radius(epsilon, d, p));
            let net = build_net(d, eta, s.budget.unwrap_or(2000), seed.split(1))?;
            let c = certify_epsilon_randomizing(&ch, p, epsilon, EvaluationPlan::Net(&net))?;
            (c, Some(net.len()), Some(eta))
        }
        Mode::Sample => {
            let plan = EvaluationPlan::Samples { count: states, seed: seed.split(1) };
            (certify_epsilon_randomizing(&ch, p, epsilon, plan)?, None, None)
        }
    };
    let output_norm = if p.value() > 1.0 {
        Some(hayden_winter_bound(&ch, p, epsilon, states, seed.split(2))?)
    } else {
        None
    };
    let verdicts = vec![verdict("certified", certification.certified)];
    let result = CertifyResult {
        d,
        m,
        p,
        epsilon,
        ensemble: s.ensemble.unwrap_or(EnsembleSource::Haar),
        mode,
        net_size,
        net_eta,
        certification,
        output_norm,
    };
    outcome(&result, verdicts)
}

#[derive(Serialize)]
struct NetResult {
    size: usize,
    size_bound: f64,
    covering: crate::net::CoveringCheck,
    net: crate::net::Net,
}

fn run_net(s: &Settings) -> CliResult<Outcome> {
    let d = positive(require(&s.d, "d")?, "d")?;
    let eta = s.eta.unwrap_or(0.5);
    let seed = s.seed();
    let net = build_net(d, eta, s.budget.unwrap_or(2000), seed)?;
    let covering = verify_covering(&net, s.probes.unwrap_or(1000), seed.split(1))?;
    let verdicts = vec![
        verdict("covering", covering.pass),
        verdict("size_bound", net.len() as f64 <= net.size_bound()),
    ];
    outcome(&NetResult { size: net.len(), size_bound: net.size_bound(), covering, net }, verdicts)
}

fn run_sweep(s: &Settings) -> CliResult<Outcome> {
    let d = positive(require(&s.d, "d")?, "d")?;
    require(&s.epsilon, "epsilon")?;
    let range = match (s.m, s.m_min, s.m_max) {
        (Some(m), None, None) => MRange::fixed(m),
        (_, lo, hi) => MRange {
            min: lo.unwrap_or(d + 1),
            max: hi.unwrap_or((d * d).max(d + 1)),
            ratio: s.m_ratio.unwrap_or(MRange::DEFAULT_RATIO),
        },
    };
    let cfg = experiment_config(s, range, 100)?;
    let report = minimal_m_sweep(&cfg, s.success_fraction.unwrap_or(0.9))?;
    let mut out = outcome(&report, report.verdicts.clone())?;
    out.table = Some((SWEEP_COLUMNS.to_vec(), sweep_rows(&report.points)));
    Ok(out)
}

fn run_expected_deviation(s: &Settings) -> CliResult<Outcome> {
    let cfg = experiment_config(s, fixed_m(s)?, 200)?;
    let res = estimate_expected_deviation(&cfg)?;
    let verdicts = vec![verdict("expectation_bound", res.within), verdict("second_moment", res.second_moment.within)];
    outcome(&res, verdicts)
}

fn run_mcdiarmid(s: &Settings) -> CliResult<Outcome> {
    let cfg = experiment_config(s, fixed_m(s)?, 2000)?;
    let ts = s.t.clone().unwrap_or_else(|| vec![0.1, 0.2]);
    let tails = mcdiarmid_tails(&cfg, &ts)?;
    let verdicts = tails.iter().map(|t| verdict(&format!("tail_t={}", t.t), t.within)).collect();
    outcome(&tails, verdicts)
}

#[derive(Serialize)]
struct BoundedDifferenceResult {
    check: crate::experiments::BoundedDifference,
    witness: crate::experiments::BoundedDifference,
}

fn run_bounded_difference(s: &Settings) -> CliResult<Outcome> {
    let cfg = experiment_config(s, fixed_m(s)?, 1)?;
    let check = check_bounded_difference(&cfg, s.replacements.unwrap_or(500))?;
    let witness = bounded_difference_witness(cfg.p)?;
    let verdicts = vec![verdict("bounded_difference", check.holds), verdict("witness", witness.holds)];
    outcome(&BoundedDifferenceResult { check, witness }, verdicts)
}

fn run_formulas(s: &Settings) -> CliResult<Outcome> {
    let d = require(&s.d, "d")?;
    let epsilon = require(&s.epsilon, "epsilon")?;
    if !(epsilon > 0.0) {
        return Err(CliError::Usage(format!("epsilon must be positive, got {epsilon}")));
    }
    let p = s.p.unwrap_or(PExponent::ONE);
    let f = evaluate_cardinality_formulas(d, epsilon, p, s.c_p.unwrap_or(1.0))?;
    let text = format!(
        "d = {}, epsilon = {}, p = {}, c_p = {}\n\
         {:<10} {:>14}  {}\n\
         {:<10} {:>14.1}  c_p d/ε² log2({})\n\
         {:<10} {:>14.1}  134 d log2(d)/ε²\n\
         {:<10} {:>14.1}  37 d/ε² log2(15/ε)\n\
         {:<10} {:>14.1}  C d/ε² with C = 1\n",
        f.d,
        f.epsilon,
        f.p,
        f.c_p,
        "formula",
        "m",
        "expression",
        "theorem1",
        f.theorem1_m,
        f.log_argument,
        "hlsw",
        f.hlsw_m,
        "dn",
        f.dn_m,
        "aubrun",
        f.aubrun_m,
    );
    let header = vec!["d", "epsilon", "p", "c_p", "theorem1_m", "hlsw_m", "dn_m", "aubrun_m", "log_argument"];
    use crate::report::format_float as ff;
    let row = vec![
        f.d.to_string(),
        ff(f.epsilon),
        f.p.to_string(),
        ff(f.c_p),
        ff(f.theorem1_m),
        ff(f.hlsw_m),
        ff(f.dn_m),
        ff(f.aubrun_m),
        f.log_argument.clone(),
    ];
    let mut out = outcome(&f, Vec::new())?;
    out.table = Some((header, vec![row]));
    out.text = Some(text);
    Ok(out)
}

pub fn run_task(task: Task, s: &Settings) -> CliResult<Outcome> {
    match task {
        Task::Sample => run_sample(s),
        Task::Oracles => run_oracles(s),
        Task::Certify => run_certify(s),
        Task::Net => run_net(s),
        Task::Sweep => run_sweep(s),
        Task::ExpectedDeviation => run_expected_deviation(s),
        Task::Mcdiarmid => run_mcdiarmid(s),
        Task::BoundedDifference => run_bounded_difference(s),
        Task::Formulas => run_formulas(s),
    }
}

fn resolve(command: Command) -> CliResult<(String, Task, Settings)> {
    let (name, task, settings) = match command {
        Command::Sample(s) => ("sample", Task::Sample, s),
        Command::Norms(s) => ("norms", Task::Oracles, s),
        Command::Randomize(s) => ("randomize", Task::Certify, s),
        Command::Net(s) => ("net", Task::Net, s),
        Command::Sweep(s) => ("sweep", Task::Sweep, s),
        Command::Formulas(s) => ("formulas", Task::Formulas, s),
        Command::Verify { config, settings } => {
            let file = load_settings(&config).map_err(CliError::Config)?;
            let merged = file.overridden_by(&settings);
            let task = merged
                .task
                .ok_or_else(|| CliError::Config(format!("{}: missing key `task`", config.display())))?;
            ("verify", task, merged)
        }
    };
    let mut settings = settings.with_resolved_seed().map_err(CliError::Usage)?;
    settings.task = Some(task);
    Ok((name.to_string(), task, settings))
}

fn render(cli_format: Option<Format>, task: Task, manifest: &Manifest, out: &Outcome) -> CliResult<String> {
    let default = if task == Task::Formulas { Format::Text } else { Format::Json };
    match cli_format.unwrap_or(default) {
        Format::Json => {
            let report = Report { manifest: manifest.clone(), verdicts: out.verdicts.clone(), result: &out.result };
            to_json(&report).map_err(|e| CliError::Io(e.to_string()))
        }
        Format::Csv => {
            let (header, rows) = out
                .table
                .as_ref()
                .ok_or_else(|| CliError::Usage(format!("csv output is not available for {}", task.name())))?;
            to_csv(manifest, header, rows).map_err(|e| CliError::Io(e.to_string()))
        }
        Format::Text => out
            .text
            .clone()
            .ok_or_else(|| CliError::Usage(format!("text output is not available for {}", task.name()))),
    }
}

fn emit(path: Option<&Path>, body: &str) -> CliResult<()> {
    match path {
        Some(p) => std::fs::write(p, body).map_err(|e| CliError::Io(format!("{}: {e}", p.display()))),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(body.as_bytes()).map_err(|e| CliError::Io(e.to_string()))
        }
    }
}

/// Runs a parsed command line and returns whether every verdict passed.
pub fn execute(cli: Cli) -> CliResult<bool> {
    let (name, task, settings) = resolve(cli.command)?;
    let config = serde_json::to_value(&settings).map_err(|e| CliError::Io(e.to_string()))?;
    let mut manifest = Manifest::start(&name, config, settings.seed());
    let run = || run_task(task, &settings);
    let out = match cli.threads {
        Some(0) => return Err(CliError::Usage("--threads must be positive".into())),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::Io(e.to_string()))?
            .install(run)?,
        None => run()?,
    };
    manifest.finish();
    let body = render(cli.format, task, &manifest, &out)?;
    emit(cli.out.as_deref(), &body)?;
    Ok(out.verdicts.iter().all(|v| v.pass))
}

/// Parses `args`, runs, reports errors on stderr and returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_PASS };
        }
    };
    match execute(cli) {
        Ok(true) => EXIT_PASS,
        Ok(false) => EXIT_FAIL,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_USAGE
        }
    }
}

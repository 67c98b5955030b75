//! `hazard-odds` command-line tool.
//!
//! Exit codes: 0 success, 1 verification failure, 2 usage or parse error,
//! 3 numerical or model error.

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use hazard_odds::estimate::Ties;
use hazard_odds::verify::{default_baselines, default_lambdas, format_table, run_verification, VerifyOptions};
use hazard_odds::{
    between_group_concordance, cloglog_curves, cox_fit, explain, harrell_c, hr_to_prob, kaplan_meier,
    prob_later, prob_to_hr, simulate_trial, wald_ci, Arm, BaselineDistribution, CensoringSpec, CoxOptions,
    HazardRatio, OddsRendering, PairRule, PrecedenceProbability, SurvivalDataset, TrialConfig,
};

#[derive(Parser, Debug)]
#[command(name = "hazard-odds", version, about = "Hazard ratios as odds of who has the event first")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Convert between a hazard ratio and the probability the treatment event comes first
    Convert(ConvertArgs),
    /// Plain-language reading of a hazard ratio
    Explain(ExplainArgs),
    /// Simulate a two-arm proportional-hazards trial and write `time,event,arm` CSV
    Simulate(SimulateArgs),
    /// Fit a Cox model for the treatment indicator
    Fit(FitArgs),
    /// Kaplan-Meier curve (optionally cloglog-transformed per arm)
    Km(KmArgs),
    /// Concordance statistics
    Concordance(ConcordanceArgs),
    /// Check P(Y > X) = 1/(1 + HR) by quadrature and Monte Carlo over a grid
    Verify(VerifyArgs),
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Text,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum TableFormat {
    Json,
    Table,
}

#[derive(Args, Debug)]
#[group(required = true, multiple = false, id = "input")]
struct ConvertInput {
    /// Hazard ratio (treatment / control)
    #[arg(long = "hr", group = "input")]
    hr: Option<f64>,
    /// Probability that the treatment subject's event comes first
    #[arg(long = "prob", group = "input")]
    prob: Option<f64>,
}

#[derive(Args, Debug)]
struct ConvertArgs {
    #[command(flatten)]
    input: ConvertInput,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Args, Debug)]
struct ExplainArgs {
    #[arg(long = "hr")]
    hr: f64,
    /// Verb phrase for the event, e.g. "heal"
    #[arg(long, default_value = "heal")]
    event: String,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    #[arg(long)]
    n_control: usize,
    #[arg(long)]
    n_treatment: usize,
    #[arg(long)]
    lambda: f64,
    /// Control distribution, e.g. `exp(rate=1)` or `weibull(shape=0.5,scale=2)`
    #[arg(long)]
    baseline: BaselineDistribution,
    /// Censoring: `none`, `admin(cutoff=..)` or `exp(rate=..)`
    #[arg(long, default_value = "none")]
    censor: CensoringSpec,
    #[arg(long)]
    seed: u64,
    /// Output CSV path; standard output when omitted or `-`
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum TiesArg {
    Breslow,
    Efron,
}

impl From<TiesArg> for Ties {
    fn from(t: TiesArg) -> Ties {
        match t {
            TiesArg::Breslow => Ties::Breslow,
            TiesArg::Efron => Ties::Efron,
        }
    }
}

#[derive(Args, Debug)]
struct FitArgs {
    /// Input CSV (`time,event,arm`); `-` for standard input
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long, value_enum, default_value_t = TiesArg::Breslow)]
    ties: TiesArg,
    /// Wald interval level
    #[arg(long, default_value_t = 0.95)]
    level: f64,
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    #[arg(long, default_value_t = 50)]
    max_iter: usize,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum ArmArg {
    All,
    Control,
    Treatment,
}

#[derive(Args, Debug)]
struct KmArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long, value_enum, default_value_t = ArmArg::All)]
    arm: ArmArg,
    /// Emit per-arm (log t, log(-log S)) points instead
    #[arg(long)]
    cloglog: bool,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum RuleArg {
    /// Both members of the pair had the event
    BothEvents,
    /// The earlier member had the event
    Harrell,
}

impl From<RuleArg> for PairRule {
    fn from(r: RuleArg) -> PairRule {
        match r {
            RuleArg::BothEvents => PairRule::BothEvents,
            RuleArg::Harrell => PairRule::HarrellStandard,
        }
    }
}

#[derive(Args, Debug)]
struct ConcordanceArgs {
    #[arg(long = "in")]
    input: PathBuf,
    /// One risk score per line, aligned with the CSV rows; switches to Harrell's c over all pairs
    #[arg(long)]
    scores: Option<PathBuf>,
    /// Pair rule; defaults to both-events between groups and harrell with --scores
    #[arg(long, value_enum)]
    rule: Option<RuleArg>,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    /// Baseline distributions (repeat the flag or separate with `;`); defaults to five families
    #[arg(long = "baselines", value_delimiter = ';')]
    baselines: Vec<BaselineDistribution>,
    /// Hazard ratios, comma separated; defaults to 0.5,1,2,3,10
    #[arg(long, value_delimiter = ',')]
    lambdas: Vec<f64>,
    /// Monte Carlo pairs per cell
    #[arg(long, default_value_t = 100_000)]
    pairs: u64,
    #[arg(long)]
    seed: u64,
    /// Quadrature tolerance
    #[arg(long, default_value_t = hazard_odds::verify::DEFAULT_QUADRATURE_TOL)]
    tol: f64,
    #[arg(long, value_enum, default_value_t = TableFormat::Table)]
    format: TableFormat,
    /// Demonstration: apply the hazard ratio only after the control median, breaking proportionality
    #[arg(long)]
    break_ph: bool,
}

enum Failure {
    Usage(String),
    Numerical(String),
    Verification,
}

impl From<hazard_odds::Error> for Failure {
    fn from(e: hazard_odds::Error) -> Self {
        if e.is_usage() {
            Failure::Usage(e.to_string())
        } else {
            Failure::Numerical(e.to_string())
        }
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

type CliResult = Result<(), Failure>;

fn print_json<T: Serialize>(value: &T) -> CliResult {
    let text = serde_json::to_string_pretty(value).map_err(|e| Failure::Numerical(e.to_string()))?;
    println!("{text}");
    Ok(())
}

fn open_input(path: &Path) -> Result<Box<dyn Read>, Failure> {
    if path.as_os_str() == "-" {
        Ok(Box::new(io::stdin().lock()))
    } else {
        let file = File::open(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
        Ok(Box::new(BufReader::new(file)))
    }
}

fn read_dataset(path: &Path) -> Result<SurvivalDataset, Failure> {
    SurvivalDataset::read_csv(open_input(path)?).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn convert(args: &ConvertArgs) -> CliResult {
    let hr = match (args.input.hr, args.input.prob) {
        (Some(hr), None) => HazardRatio::new(hr)?,
        (None, Some(p)) => prob_to_hr(PrecedenceProbability::new(p)?),
        _ => return Err(Failure::Usage("give exactly one of --hr or --prob".into())),
    };
    let before = hr_to_prob(hr);
    let after = prob_later(hr);
    let odds = OddsRendering::from_hr(hr);
    match args.format {
        Format::Json => print_json(&json!({
            "hr": hr.value(),
            "odds": odds.to_string(),
            "p_before": before.value(),
            "p_after": after.value(),
            "percent_before": before.percent(),
        })),
        Format::Text => {
            println!("hazard ratio:      {}", hr.value());
            println!("odds (first):      {odds}");
            println!("P(treatment first) {} ({before})", before.value());
            println!("P(treatment later) {} ({after})", after.value());
            Ok(())
        }
    }
}

fn simulate(args: &SimulateArgs) -> CliResult {
    let config = TrialConfig {
        n_control: args.n_control,
        n_treatment: args.n_treatment,
        lambda: HazardRatio::new(args.lambda)?,
        baseline: args.baseline.clone(),
        censoring: args.censor,
        seed: args.seed,
    };
    let data = simulate_trial(&config)?;
    match args.out.as_deref() {
        None => data.write_csv(io::stdout().lock())?,
        Some(p) if p.as_os_str() == "-" => data.write_csv(io::stdout().lock())?,
        Some(path) => {
            let file = File::create(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
            data.write_csv(BufWriter::new(file))?;
            print_json(&json!({
                "out": path.display().to_string(),
                "rows": data.len(),
                "events": data.event_count(),
                "seed": args.seed,
                "baseline": args.baseline.to_string(),
                "censor": args.censor.to_string(),
                "lambda": args.lambda,
            }))?;
        }
    }
    Ok(())
}

fn fit(args: &FitArgs) -> CliResult {
    let data = read_dataset(&args.input)?;
    let options = CoxOptions { ties: args.ties.into(), tol: args.tol, max_iter: args.max_iter };
    let fit = cox_fit(&data, &options)?;
    let (ci_low, ci_high) = wald_ci(&fit, args.level)?;
    print_json(&json!({
        "beta_hat": fit.beta_hat,
        "hr": fit.hazard_ratio(),
        "se": fit.se,
        "ci_low": ci_low,
        "ci_high": ci_high,
        "loglik0": fit.loglik_at_zero,
        "loglik1": fit.loglik_at_hat,
        "iterations": fit.iterations,
        "converged": fit.converged,
        "ties": fit.ties,
    }))
}

fn km(args: &KmArgs) -> CliResult {
    let data = read_dataset(&args.input)?;
    if args.cloglog {
        return print_json(&cloglog_curves(&data)?);
    }
    let arm = match args.arm {
        ArmArg::All => None,
        ArmArg::Control => Some(Arm::Control),
        ArmArg::Treatment => Some(Arm::Treatment),
    };
    print_json(&kaplan_meier(&data, arm)?)
}

fn read_scores(path: &Path) -> Result<Vec<f64>, Failure> {
    let mut text = String::new();
    open_input(path)?.read_to_string(&mut text)?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            l.trim()
                .parse::<f64>()
                .map_err(|e| Failure::Usage(format!("{} line {}: {e}", path.display(), i + 1)))
        })
        .collect()
}

fn concordance(args: &ConcordanceArgs) -> CliResult {
    let data = read_dataset(&args.input)?;
    let result = match &args.scores {
        Some(path) => {
            let scores = read_scores(path)?;
            harrell_c(&data, &scores, args.rule.map_or(PairRule::HarrellStandard, Into::into))?
        }
        None => between_group_concordance(&data, args.rule.map_or(PairRule::BothEvents, Into::into))?,
    };
    print_json(&result)
}

fn verify(args: &VerifyArgs) -> CliResult {
    let baselines = if args.baselines.is_empty() { default_baselines() } else { args.baselines.clone() };
    let lambdas = if args.lambdas.is_empty() {
        default_lambdas()
    } else {
        args.lambdas.iter().map(|&l| HazardRatio::new(l)).collect::<Result<Vec<_>, _>>()?
    };
    if args.pairs < 100 {
        return Err(Failure::Usage(format!("--pairs must be at least 100, got {}", args.pairs)));
    }
    if !(args.tol > 0.0) {
        return Err(Failure::Usage(format!("--tol must be positive, got {}", args.tol)));
    }
    let options =
        VerifyOptions { n_pairs: args.pairs, seed: args.seed, quadrature_tol: args.tol, late_onset: args.break_ph };
    let reports = run_verification(&baselines, &lambdas, &options)?;
    match args.format {
        TableFormat::Json => print_json(&reports)?,
        TableFormat::Table => {
            print!("{}", format_table(&reports));
            let passed = reports.iter().filter(|r| r.pass).count();
            println!("{passed}/{} cells pass (seed {}, {} pairs per cell)", reports.len(), args.seed, args.pairs);
            for r in reports.iter().filter_map(|r| r.error.as_ref()) {
                println!("error: {r}");
            }
        }
    }
    io::stdout().flush()?;
    if reports.iter().all(|r| r.pass) {
        Ok(())
    } else {
        Err(Failure::Verification)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Convert(args) => convert(args),
        Command::Explain(args) => HazardRatio::new(args.hr)
            .map(|hr| println!("{}", explain(hr, &args.event)))
            .map_err(Failure::from),
        Command::Simulate(args) => simulate(args),
        Command::Fit(args) => fit(args),
        Command::Km(args) => km(args),
        Command::Concordance(args) => concordance(args),
        Command::Verify(args) => verify(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Verification) => ExitCode::from(1),
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Numerical(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
    }
}

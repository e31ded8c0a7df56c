use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use verbum_core::argument::{
    evaluate, resolve_ambiguity, Aggregation, ArgumentGraph, Choice, EngineConfig, Outcome, QuantifierLexicon,
    RebuttalRule, Resolutions,
};
use verbum_core::bayes::{run_benchmark, BenchConfig, ResponderKind};
use verbum_core::elicitation::{elicit_lexicon, ElicitationConfig, ResponseMode, SimulatedResponder};
use verbum_core::fuzzy::UnitFuzzyNumber;
use verbum_core::lexicon::Lexicon;
use verbum_core::rasch::{
    calibration_gap, difficulty_by_label, fit, read_records, simulate_responses, simulated_parameters,
    CalibrationCurve, LexiconSet, RaschFit, ResponseMatrix,
};

use crate::error::{Diagnostic, ServiceError};
use crate::plot;
use crate::session::default_quantifiers;
use crate::store::{to_json, Store};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 1;
pub const EXIT_PENDING: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "verbum", version, about = "Verbal uncertainty calibration and argument evaluation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Lexicon utilities.
    #[command(subcommand)]
    Lexicon(LexiconCmd),
    /// Elicit a lexicon from a simulated respondent.
    Elicit(ElicitArgs),
    /// Rasch model fitting and calibration curves.
    #[command(subcommand)]
    Rasch(RaschCmd),
    /// Probability-revision benchmark.
    #[command(subcommand)]
    Bayes(BayesCmd),
    /// Argument evaluation.
    #[command(subcommand)]
    Argue(ArgueCmd),
    /// Plot data (CSV) or an SVG chart for a lexicon, curve or benchmark file.
    Plot(PlotArgs),
    /// Run the HTTP service.
    Serve(ServeArgs),
}

#[derive(Debug, Args)]
pub struct Output {
    /// Write to this file instead of stdout.
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum LexiconCmd {
    /// Evenly spaced lexicon with K labels.
    Default {
        #[arg(short, long, default_value_t = 5)]
        k: usize,
        #[arg(long, default_value = "default")]
        owner: String,
        #[command(flatten)]
        output: Output,
    },
    /// Check a lexicon file; warnings go to stderr.
    Validate { file: PathBuf },
}

#[derive(Debug, Args)]
pub struct ElicitArgs {
    /// Lexicon file holding the respondent's true meanings.
    #[arg(long)]
    pub truth: PathBuf,
    /// Comma-separated labels to elicit; defaults to every label in the truth file.
    #[arg(long, value_delimiter = ',')]
    pub labels: Vec<String>,
    #[arg(long, default_value_t = 400)]
    pub trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = "subject")]
    pub owner: String,
    #[arg(long, value_enum, default_value_t = Mode::Probabilistic)]
    pub mode: Mode,
    /// Also write the full transcript here.
    #[arg(long)]
    pub transcript: Option<PathBuf>,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Mode {
    Probabilistic,
    Threshold,
}

#[derive(Debug, Subcommand)]
pub enum RaschCmd {
    /// Fit a response matrix CSV; prints the fit as JSON.
    Fit {
        matrix: PathBuf,
        #[command(flatten)]
        output: Output,
    },
    /// Difficulty-by-label curve as CSV; the gap summary goes to stderr.
    Curve {
        #[arg(long)]
        fit: PathBuf,
        #[arg(long)]
        records: PathBuf,
        /// Lexicon files; one owned by "default" applies to subjects without their own.
        #[arg(long = "lexicon", required = true)]
        lexicons: Vec<PathBuf>,
        #[command(flatten)]
        output: Output,
    },
    /// Simulated response matrix CSV.
    Simulate {
        #[arg(long, default_value_t = 150)]
        subjects: usize,
        #[arg(long, default_value_t = 30)]
        items: usize,
        #[arg(long, default_value_t = -2.0, allow_hyphen_values = true)]
        lo: f64,
        #[arg(long, default_value_t = 2.0, allow_hyphen_values = true)]
        hi: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        output: Output,
    },
}

#[derive(Debug, Subcommand)]
pub enum BayesCmd {
    /// Mean deviation from Bayes per draw, as CSV.
    Run(BayesArgs),
}

#[derive(Debug, Args)]
pub struct BayesArgs {
    /// JSON config; flags below override its fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub trials: Option<usize>,
    #[arg(long)]
    pub draws: Option<usize>,
    #[arg(long)]
    pub ratio: Option<f64>,
    /// bayesian | conservative:KAPPA | verbal:K | verbal:FILE | calibrated:K.
    /// Repeatable; defaults to bayesian, conservative:0.5, verbal:5, calibrated:5.
    #[arg(long = "kind")]
    pub kinds: Vec<String>,
    /// Emit the full table as JSON instead of CSV.
    #[arg(long)]
    pub json: bool,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Subcommand)]
pub enum ArgueCmd {
    /// Evaluate an argument file. Exits 2 and lists the open questions when a
    /// quantifier is ambiguous.
    Eval(ArgueArgs),
}

#[derive(Debug, Args)]
pub struct ArgueArgs {
    pub file: PathBuf,
    #[arg(long)]
    pub quantifiers: Option<PathBuf>,
    /// Output lexicon; defaults to five evenly spaced labels.
    #[arg(long)]
    pub lexicon: Option<PathBuf>,
    /// WARRANT=INDEX picks a sense; WARRANT=a,b,c,d gives a custom meaning.
    #[arg(long = "resolve")]
    pub resolve: Vec<String>,
    #[arg(long, value_enum, default_value_t = AggregationArg::Max)]
    pub aggregation: AggregationArg,
    #[arg(long, value_enum, default_value_t = RebuttalArg::Complement)]
    pub rebuttal: RebuttalArg,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum AggregationArg {
    Max,
    Min,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum RebuttalArg {
    Complement,
    BoundedDifference,
}

#[derive(Debug, Args)]
pub struct PlotArgs {
    pub file: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Format {
    Csv,
    Svg,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long, default_value = "127.0.0.1:8080")]
    pub bind: SocketAddr,
    #[arg(long, env = "VERBUM_DATA_DIR", default_value = "verbum-data")]
    pub data_dir: PathBuf,
}

/// Result of a command: bytes for stdout (or `--out`) and an exit code.
struct Done {
    bytes: Vec<u8>,
    out: Option<PathBuf>,
    code: i32,
}

fn done(bytes: Vec<u8>, output: &Output) -> Done {
    Done {
        bytes,
        out: output.out.clone(),
        code: EXIT_OK,
    }
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> anyhow::Result<T> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_slice(&bytes).with_context(|| format!("parsing {}", path.display()))
}

fn json_bytes<T: Serialize>(v: &T) -> anyhow::Result<Vec<u8>> {
    Ok(to_json(v)?)
}

fn warn<T: Serialize>(v: &T) {
    if let Ok(s) = serde_json::to_string(v) {
        eprintln!("{s}");
    }
}

fn lexicon_cmd(cmd: LexiconCmd) -> anyhow::Result<Done> {
    match cmd {
        LexiconCmd::Default { k, owner, output } => {
            let lex = Lexicon::default_lexicon(k)?.with_owner(owner);
            Ok(done(json_bytes(&lex)?, &output))
        }
        LexiconCmd::Validate { file } => {
            let lex: Lexicon = read_json(&file)?;
            for v in lex.validate() {
                warn(&serde_json::json!({ "warning": v }));
            }
            Ok(done(json_bytes(&serde_json::json!({ "valid": true, "labels": lex.len() }))?, &Output { out: None }))
        }
    }
}

fn elicit_cmd(a: ElicitArgs) -> anyhow::Result<Done> {
    let truth: Lexicon = read_json(&a.truth)?;
    let names: Vec<String> = if a.labels.is_empty() {
        truth.labels().iter().map(|l| l.name.clone()).collect()
    } else {
        a.labels.clone()
    };
    for n in &names {
        if truth.get(n).is_none() {
            bail!(ServiceError::Validation(vec![format!("label {n:?} is not in the truth file")]));
        }
    }
    let mode = match a.mode {
        Mode::Probabilistic => ResponseMode::Probabilistic,
        Mode::Threshold => ResponseMode::Threshold,
    };
    let mut responder = SimulatedResponder::from_lexicon(&truth).with_mode(mode);
    let config = ElicitationConfig::default().with_trials(a.trials);
    let (lex, transcript) = elicit_lexicon(&mut responder, &a.owner, &names, &config, a.seed)?;
    for v in lex.validate() {
        warn(&serde_json::json!({ "warning": v }));
    }
    if let Some(path) = &a.transcript {
        fs::write(path, json_bytes(&transcript)?).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(done(json_bytes(&lex)?, &a.output))
}

fn rasch_cmd(cmd: RaschCmd) -> anyhow::Result<Done> {
    match cmd {
        RaschCmd::Fit { matrix, output } => {
            let file = fs::File::open(&matrix).with_context(|| format!("reading {}", matrix.display()))?;
            let m = ResponseMatrix::read_csv(file)?;
            let f = fit(&m)?;
            if !f.converged {
                warn(&serde_json::json!({ "warning": "not converged", "iterations": f.iterations }));
            }
            Ok(done(json_bytes(&f)?, &output))
        }
        RaschCmd::Curve {
            fit,
            records,
            lexicons,
            output,
        } => {
            let f: RaschFit = read_json(&fit)?;
            let recs = read_records(fs::File::open(&records).with_context(|| format!("reading {}", records.display()))?)?;
            let set: LexiconSet = lexicons.iter().map(|p| read_json::<Lexicon>(p)).collect::<anyhow::Result<_>>()?;
            let curve = difficulty_by_label(&f, &recs, &set)?;
            for w in &curve.warnings {
                warn(&serde_json::json!({ "warning": w }));
            }
            if let Ok(gap) = calibration_gap(&curve) {
                warn(&gap);
            }
            let mut buf = Vec::new();
            curve.write_csv(&mut buf)?;
            Ok(done(buf, &output))
        }
        RaschCmd::Simulate {
            subjects,
            items,
            lo,
            hi,
            seed,
            output,
        } => {
            let (xi, delta) = simulated_parameters(subjects, items, lo, hi, seed);
            let m = simulate_responses(&xi, &delta, seed.wrapping_add(1));
            let mut buf = Vec::new();
            m.write_csv(&mut buf)?;
            Ok(done(buf, &output))
        }
    }
}

pub fn parse_kind(spec: &str) -> anyhow::Result<ResponderKind> {
    let (name, arg) = spec.split_once(':').unwrap_or((spec, ""));
    let k = |arg: &str| -> anyhow::Result<usize> {
        if arg.is_empty() {
            Ok(5)
        } else {
            arg.parse().map_err(|_| anyhow!(ServiceError::Validation(vec![format!("bad label count {arg:?}")])))
        }
    };
    Ok(match name {
        "bayesian" => ResponderKind::Bayesian,
        "conservative" => {
            let kappa = if arg.is_empty() { 0.5 } else { arg.parse()? };
            ResponderKind::Conservative { kappa }
        }
        "verbal" if arg.ends_with(".json") => ResponderKind::Verbal {
            lexicon: read_json(Path::new(arg))?,
        },
        "verbal" => ResponderKind::Verbal {
            lexicon: Lexicon::default_lexicon(k(arg)?)?,
        },
        "calibrated" => ResponderKind::CalibratedVerbal { k: k(arg)? },
        other => bail!(ServiceError::Validation(vec![format!("unknown responder kind {other:?}")])),
    })
}

fn bayes_cmd(BayesCmd::Run(a): BayesCmd) -> anyhow::Result<Done> {
    let mut config: BenchConfig = match &a.config {
        Some(p) => read_json(p)?,
        None => BenchConfig::default(),
    };
    if let Some(s) = a.seed {
        config.seed = s;
    }
    if let Some(t) = a.trials {
        config.trials = t;
    }
    if let Some(d) = a.draws {
        config.draws = d;
    }
    if let Some(r) = a.ratio {
        config.success_ratio = r;
    }
    let specs: Vec<String> = if a.kinds.is_empty() {
        ["bayesian", "conservative:0.5", "verbal:5", "calibrated:5"]
            .map(String::from)
            .to_vec()
    } else {
        a.kinds.clone()
    };
    let kinds = specs.iter().map(|s| parse_kind(s)).collect::<anyhow::Result<Vec<_>>>()?;
    let table = run_benchmark(&config, &kinds)?;
    let bytes = if a.json {
        json_bytes(&table)?
    } else {
        let mut buf = Vec::new();
        table.write_csv(&mut buf)?;
        buf
    };
    Ok(done(bytes, &a.output))
}

fn parse_resolution(spec: &str, graph: &ArgumentGraph, qlex: &QuantifierLexicon) -> anyhow::Result<(String, UnitFuzzyNumber)> {
    let bad = || ServiceError::Validation(vec![format!("bad --resolve {spec:?}; expected WARRANT=INDEX or WARRANT=a,b,c,d")]);
    let (warrant, value) = spec.split_once('=').ok_or_else(bad)?;
    let choice = if value.contains(',') {
        let c: Vec<f64> = value
            .split(',')
            .map(|x| x.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|_| bad())?;
        let [a, b, c, d] = c[..] else { bail!(bad()) };
        Choice::Custom(UnitFuzzyNumber::new(a, b, c, d)?)
    } else {
        Choice::Sense(value.parse().map_err(|_| bad())?)
    };
    let w = graph
        .warrant(warrant)
        .ok_or_else(|| ServiceError::Validation(vec![format!("unknown warrant {warrant:?}")]))?;
    let term = match &w.quantifier {
        verbum_core::argument::QuantifierSpec::Term(t) => t.clone(),
        verbum_core::argument::QuantifierSpec::Explicit(_) => String::new(),
    };
    let senses = qlex.senses(&term).unwrap_or_default();
    Ok((warrant.to_string(), resolve_ambiguity(&term, senses, &choice)?))
}

fn argue_cmd(ArgueCmd::Eval(a): ArgueCmd) -> anyhow::Result<Done> {
    let graph: ArgumentGraph = read_json(&a.file)?;
    let qlex = match &a.quantifiers {
        Some(p) => read_json(p)?,
        None => default_quantifiers(),
    };
    let lexicon = match &a.lexicon {
        Some(p) => read_json(p)?,
        None => Lexicon::default_lexicon(5)?,
    };
    let resolutions: Resolutions = a
        .resolve
        .iter()
        .map(|s| parse_resolution(s, &graph, &qlex))
        .collect::<anyhow::Result<_>>()?;
    let config = EngineConfig {
        aggregation: match a.aggregation {
            AggregationArg::Max => Aggregation::Max,
            AggregationArg::Min => Aggregation::Min,
        },
        rebuttal: match a.rebuttal {
            RebuttalArg::Complement => RebuttalRule::Complement,
            RebuttalArg::BoundedDifference => RebuttalRule::BoundedDifference,
        },
    };
    let outcome = evaluate(&graph, &qlex, &resolutions, &lexicon, config)?;
    let code = match outcome {
        Outcome::Pending { .. } => EXIT_PENDING,
        Outcome::Evaluated(_) => EXIT_OK,
    };
    Ok(Done {
        bytes: json_bytes(&outcome)?,
        out: a.output.out,
        code,
    })
}

fn plot_cmd(a: PlotArgs) -> anyhow::Result<Done> {
    let bytes = fs::read(&a.file).with_context(|| format!("reading {}", a.file.display()))?;
    let text = String::from_utf8(bytes).context("plot input is not UTF-8")?;
    let first = text.lines().next().unwrap_or_default().trim();
    let chart = if text.trim_start().starts_with('{') {
        let lex: Lexicon = serde_json::from_str(&text).context("parsing lexicon")?;
        plot::lexicon_chart(&lex)
    } else if first.starts_with("label,median") {
        plot::curve_chart(&CalibrationCurve::read_csv(text.as_bytes())?)
    } else if first == "step,kind,mean_abs_deviation" {
        let mut rdr = csv::Reader::from_reader(text.as_bytes());
        let rows = rdr
            .deserialize::<(usize, String, f64)>()
            .collect::<Result<Vec<_>, _>>()
            .context("parsing benchmark CSV")?;
        plot::bench_chart(&rows)
    } else {
        bail!(ServiceError::Validation(vec![format!(
            "{} is neither a lexicon JSON, a curve CSV nor a benchmark CSV",
            a.file.display()
        )]));
    };
    let out = match a.format {
        Format::Csv => chart.to_csv(),
        Format::Svg => chart.to_svg(),
    };
    Ok(done(out.into_bytes(), &a.output))
}

fn serve_cmd(a: ServeArgs) -> anyhow::Result<Done> {
    let store = Arc::new(Store::open(&a.data_dir)?);
    let rt = tokio::runtime::Runtime::new()?;
    rt.block_on(async move {
        let listener = tokio::net::TcpListener::bind(a.bind).await?;
        warn(&serde_json::json!({
            "listening": listener.local_addr()?.to_string(),
            "data_dir": a.data_dir.display().to_string(),
        }));
        axum::serve(listener, crate::api::router(store)).await?;
        anyhow::Ok(())
    })?;
    Ok(Done {
        bytes: Vec::new(),
        out: None,
        code: EXIT_OK,
    })
}

fn diagnostic(e: &anyhow::Error) -> Diagnostic {
    if let Some(s) = e.downcast_ref::<ServiceError>() {
        let mut d = s.diagnostic();
        d.message = format!("{e:#}");
        return d;
    }
    let kind = if e.downcast_ref::<std::io::Error>().is_some() {
        "io"
    } else {
        "validation"
    };
    Diagnostic {
        error: kind,
        message: format!("{e:#}"),
        details: Vec::new(),
    }
}

pub fn run(cli: Cli) -> i32 {
    let result = match cli.command {
        Command::Lexicon(c) => lexicon_cmd(c),
        Command::Elicit(a) => elicit_cmd(a),
        Command::Rasch(c) => rasch_cmd(c),
        Command::Bayes(c) => bayes_cmd(c),
        Command::Argue(c) => argue_cmd(c),
        Command::Plot(a) => plot_cmd(a),
        Command::Serve(a) => serve_cmd(a),
    };
    let result = result.and_then(|d| {
        match &d.out {
            Some(p) => fs::write(p, &d.bytes).with_context(|| format!("writing {}", p.display()))?,
            None => std::io::stdout().write_all(&d.bytes)?,
        }
        Ok(d.code)
    });
    match result {
        Ok(code) => code,
        Err(e) => {
            warn(&diagnostic(&e));
            EXIT_INVALID
        }
    }
}

pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => run(cli),
        Err(e) => {
            if e.use_stderr() {
                warn(&Diagnostic {
                    error: "usage",
                    message: e.to_string(),
                    details: Vec::new(),
                });
                EXIT_INVALID
            } else {
                let _ = e.print();
                EXIT_OK
            }
        }
    }
}

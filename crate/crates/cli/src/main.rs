//! `pwrap`: run privacy wrappers around builtin or external black-box functions.

mod plugin;

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;
use std::thread;
use std::time::{Duration, Instant};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use pwrap::verification::{brute_down_sensitivity, brute_lipschitz_on_dn, dp_audit, DpAuditReport};
use pwrap::{
    autosense_wrap, double_mono_wrap, lipschitz_filter, modified_tahoe, multiset_adapter, shifted_inverse, small_diameter,
    subset_extension, BlackBox, Builtin, Dataset, Element, Error, Profile, RandomStream, RangeSpec, Release,
    ShiftedInverseParams, WrapperOutput, DEFAULT_BUDGET,
};

use crate::plugin::PluginEvaluator;

#[derive(Parser)]
#[command(name = "pwrap", version, about = "Privacy wrappers for untrusted black-box functions")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run one wrapper evaluation and print a JSON report.
    Wrap(WrapArgs),
    /// Estimate privacy loss empirically between a dataset and a neighbor.
    Audit(AuditArgs),
    /// Brute-force checks of f over a down neighborhood.
    Oracle(OracleArgs),
    /// Time repeated evaluations across worker threads.
    Bench(BenchArgs),
}

#[derive(Args, Clone)]
struct Input {
    /// One element identifier per line, or a JSON array.
    #[arg(long)]
    dataset: Option<PathBuf>,
    /// `builtin:NAME` or `plugin:COMMAND`.
    #[arg(long)]
    blackbox: String,
    /// `unbounded`, `interval:LO:HI`, `list:LO..HI` or `list:A,B,...`.
    #[arg(long, default_value = "unbounded")]
    range: String,
    /// Treat repeated identifiers as distinct copies.
    #[arg(long)]
    multiset: bool,
    /// Seconds a plugin may take to answer one query.
    #[arg(long, default_value_t = 10.0)]
    plugin_timeout: f64,
    /// Largest number of subsets a run may enumerate.
    #[arg(long, default_value_t = DEFAULT_BUDGET)]
    budget: u64,
}

#[derive(Args, Clone, Serialize)]
struct MechArgs {
    #[arg(long, value_enum)]
    #[serde(skip)]
    mechanism: Mechanism,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long, default_value_t = 0.0)]
    delta: f64,
    #[arg(long, default_value_t = 0.1)]
    beta: f64,
    /// Claimed Lipschitz constant.
    #[arg(long, default_value_t = 1.0)]
    c: f64,
    /// Upper end of the output range `[0, r]`.
    #[arg(long)]
    r: Option<f64>,
    /// Use reduced constants; the output carries no privacy guarantee.
    #[arg(long)]
    #[serde(skip)]
    unsafe_test_constants: bool,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Mechanism {
    Autosense,
    SubsetExtension,
    Tahoe,
    SmallDiameter,
    DoubleMono,
    LipschitzFilter,
    ShiftedInverse,
}

#[derive(Args)]
struct WrapArgs {
    #[command(flatten)]
    mech: MechArgs,
    #[command(flatten)]
    input: Input,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct AuditArgs {
    #[command(flatten)]
    mech: MechArgs,
    #[command(flatten)]
    input: Input,
    /// Neighboring dataset; defaults to the dataset without its last element.
    #[arg(long)]
    neighbor: Option<PathBuf>,
    #[arg(long, default_value_t = 10_000)]
    trials: usize,
    #[arg(long, default_value_t = 20)]
    bins: usize,
    #[arg(long, default_value_t = 0.95)]
    confidence: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum OracleKind {
    DownSensitivity,
    Lipschitz,
}

#[derive(Args)]
struct OracleArgs {
    #[arg(value_enum)]
    kind: OracleKind,
    /// Depth of the down neighborhood.
    #[arg(long)]
    lambda: usize,
    #[arg(long, default_value_t = 1.0)]
    c: f64,
    #[command(flatten)]
    input: Input,
}

#[derive(Args)]
struct BenchArgs {
    #[command(flatten)]
    mech: MechArgs,
    #[command(flatten)]
    input: Input,
    #[arg(long, default_value_t = 100)]
    runs: u64,
    #[arg(long, default_value_t = 1)]
    threads: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

/// A failed invocation: exit code, message and an optional partial report.
struct Failure {
    code: u8,
    message: String,
    report: Option<String>,
}

impl Failure {
    fn validation(message: impl Into<String>) -> Self {
        Failure { code: 2, message: message.into(), report: None }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::InvalidParameter(_) | Error::Precondition(_) => 2,
        Error::Plugin(_) => 3,
        Error::BudgetExceeded { .. } => 4,
        Error::LocalityViolation(_) => 1,
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure { code: exit_code(&e), message: e.to_string(), report: None }
    }
}

#[derive(Clone)]
enum Source {
    Builtin(Builtin),
    Plugin { command: String, timeout: Duration },
}

impl Source {
    fn parse(spec: &str, timeout: f64) -> Result<Self, Failure> {
        if let Some(name) = spec.strip_prefix("builtin:") {
            return Ok(Source::Builtin(name.parse()?));
        }
        if let Some(command) = spec.strip_prefix("plugin:") {
            if command.trim().is_empty() {
                return Err(Failure::validation("plugin command is empty"));
            }
            if !(timeout > 0.0 && timeout.is_finite()) {
                return Err(Failure::validation("--plugin-timeout must be positive"));
            }
            return Ok(Source::Plugin { command: command.to_string(), timeout: Duration::from_secs_f64(timeout) });
        }
        Err(Failure::validation(format!("black box `{spec}` must start with builtin: or plugin:")))
    }

    fn open(&self, root: Dataset, range: RangeSpec, budget: u64) -> Result<BlackBox, Failure> {
        let bb = match self {
            Source::Builtin(b) => BlackBox::new(root, range, b.clone()),
            Source::Plugin { command, timeout } => {
                let p = PluginEvaluator::spawn(command, *timeout)
                    .map_err(|e| Failure { code: 3, message: format!("cannot start plugin: {e}"), report: None })?;
                BlackBox::new(root, range, p)
            }
        };
        Ok(bb.with_budget(budget))
    }
}

fn parse_range(spec: &str) -> Result<RangeSpec, Failure> {
    let bad = || Failure::validation(format!("cannot parse range `{spec}`"));
    if spec == "unbounded" {
        return Ok(RangeSpec::Unbounded);
    }
    if let Some(rest) = spec.strip_prefix("interval:") {
        let (lo, hi) = rest.split_once(':').ok_or_else(bad)?;
        return Ok(RangeSpec::interval(lo.parse().map_err(|_| bad())?, hi.parse().map_err(|_| bad())?)?);
    }
    if let Some(rest) = spec.strip_prefix("list:") {
        if let Some((lo, hi)) = rest.split_once("..") {
            return Ok(RangeSpec::integers(lo.parse().map_err(|_| bad())?, hi.parse().map_err(|_| bad())?)?);
        }
        let values = rest.split(',').map(|v| v.trim().parse::<f64>().map_err(|_| bad())).collect::<Result<Vec<_>, _>>()?;
        return Ok(RangeSpec::finite_list(values)?);
    }
    Err(bad())
}

fn read_dataset(path: &PathBuf, multiset: bool) -> Result<Dataset, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::validation(format!("cannot read dataset {}: {e}", path.display())))?;
    let ids = Dataset::parse_text(&text)?;
    if multiset {
        return Ok(multiset_adapter(&ids));
    }
    let elements = ids.iter().map(|s| s.parse::<Element>()).collect::<Result<Vec<_>, _>>()?;
    let d = Dataset::new(elements);
    if d.len() != ids.len() {
        return Err(Failure::validation("dataset repeats an identifier; pass --multiset to keep copies"));
    }
    Ok(d)
}

/// Root dataset and black-box source of an invocation.
struct Setup {
    root: Dataset,
    source: Source,
    range: RangeSpec,
    budget: u64,
}

impl Setup {
    fn new(input: &Input) -> Result<Self, Failure> {
        let source = Source::parse(&input.blackbox, input.plugin_timeout)?;
        let range = parse_range(&input.range)?;
        let root = match (&input.dataset, &source) {
            (Some(path), _) => read_dataset(path, input.multiset)?,
            (None, Source::Builtin(Builtin::Hard(inst))) => inst.dataset(),
            (None, _) => return Err(Failure::validation("--dataset is required")),
        };
        Ok(Setup { root, source, range, budget: input.budget })
    }

    fn open(&self, root: &Dataset) -> Result<BlackBox, Failure> {
        self.source.open(root.clone(), self.range.clone(), self.budget)
    }
}

impl MechArgs {
    fn profile(&self) -> Profile {
        if self.unsafe_test_constants {
            Profile::TestConstants
        } else {
            Profile::PaperFaithful
        }
    }

    fn validate(&self) -> Result<(), Failure> {
        let eps_needed = !matches!(self.mechanism, Mechanism::LipschitzFilter);
        if eps_needed && self.epsilon.is_none() {
            return Err(Failure::validation("--epsilon is required"));
        }
        let r_needed = matches!(self.mechanism, Mechanism::SmallDiameter | Mechanism::DoubleMono | Mechanism::LipschitzFilter);
        if r_needed && self.r.is_none() {
            return Err(Failure::validation("--r is required for this mechanism"));
        }
        Ok(())
    }

    fn run(&self, bb: &mut BlackBox, rng: &mut RandomStream) -> pwrap::Result<WrapperOutput> {
        let eps = self.epsilon.unwrap_or(f64::NAN);
        let r = self.r.unwrap_or(f64::NAN);
        let params = ShiftedInverseParams { epsilon: eps, delta: self.delta, beta: self.beta };
        match self.mechanism {
            Mechanism::Autosense => autosense_wrap(bb, params, self.profile(), rng),
            Mechanism::SubsetExtension => subset_extension(bb, self.c, eps, self.delta, self.profile(), rng),
            Mechanism::Tahoe => modified_tahoe(bb, self.c, eps, self.delta, self.profile(), rng),
            Mechanism::SmallDiameter => small_diameter(bb, self.c, r, eps, rng),
            Mechanism::DoubleMono => double_mono_wrap(bb, r, eps, self.beta, rng),
            Mechanism::LipschitzFilter => lipschitz_filter(bb, self.c, r),
            Mechanism::ShiftedInverse => shifted_inverse(bb, params, rng),
        }
    }
}

#[derive(Serialize)]
struct Params<'a> {
    #[serde(flatten)]
    mech: &'a MechArgs,
    range: &'a RangeSpec,
    blackbox: &'a str,
    dataset_size: usize,
}

#[derive(Serialize)]
struct RunReport<'a> {
    mechanism: Mechanism,
    params: Params<'a>,
    result: Option<Release>,
    released: BTreeMap<String, f64>,
    queries: u64,
    realized_depth: usize,
    seed: u64,
    profile: &'static str,
    diagnostics: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

fn to_json<T: Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("reports serialize")
}

fn wrap(args: &WrapArgs) -> Result<String, Failure> {
    args.mech.validate()?;
    let setup = Setup::new(&args.input)?;
    let mut bb = setup.open(&setup.root)?;
    let mut rng = RandomStream::new(args.seed);
    let params =
        Params { mech: &args.mech, range: &setup.range, blackbox: &args.input.blackbox, dataset_size: setup.root.len() };
    let profile = args.mech.profile();
    match args.mech.run(&mut bb, &mut rng) {
        Ok(out) => Ok(to_json(&RunReport {
            mechanism: args.mech.mechanism,
            params,
            result: Some(out.result),
            released: out.released,
            queries: out.queries,
            realized_depth: out.realized_depth,
            seed: args.seed,
            profile: out.profile.label(),
            diagnostics: out.diagnostics,
            error: None,
        })),
        Err(e) => {
            // Report the queries made before the failure.
            let report = to_json(&RunReport {
                mechanism: args.mech.mechanism,
                params,
                result: None,
                released: BTreeMap::new(),
                queries: bb.ledger(),
                realized_depth: bb.realized_depth().unwrap_or(0),
                seed: args.seed,
                profile: profile.label(),
                diagnostics: Vec::new(),
                error: Some(e.to_string()),
            });
            Err(Failure { code: exit_code(&e), message: e.to_string(), report: Some(report) })
        }
    }
}

#[derive(Serialize)]
struct AuditSummary<'a> {
    mechanism: Mechanism,
    params: Params<'a>,
    neighbor_size: usize,
    seed: u64,
    profile: &'static str,
    audit: DpAuditReport,
}

fn audit(args: &AuditArgs) -> Result<String, Failure> {
    args.mech.validate()?;
    let setup = Setup::new(&args.input)?;
    let x = setup.root.clone();
    let x_prime = match (&args.neighbor, &setup.source) {
        (Some(path), _) => read_dataset(path, args.input.multiset)?,
        (None, Source::Builtin(Builtin::Hard(inst))) if args.input.dataset.is_none() => inst.neighbor(0),
        (None, _) => match x.elements().last() {
            Some(e) => x.without(e),
            None => return Err(Failure::validation("cannot derive a neighbor of an empty dataset")),
        },
    };
    let mut boxes = [(x.clone(), setup.open(&x)?), (x_prime.clone(), setup.open(&x_prime)?)];
    let mech = |d: &Dataset, r: &mut RandomStream| {
        let (_, bb) = boxes.iter_mut().find(|(k, _)| k == d).expect("audited inputs have boxes");
        Ok(args.mech.run(bb, r)?.result)
    };
    let delta = if matches!(args.mech.mechanism, Mechanism::SubsetExtension | Mechanism::Tahoe) { args.mech.delta } else { 0.0 };
    let report = dp_audit(mech, &x, &x_prime, args.trials, args.bins, delta, args.confidence, args.seed)?;
    Ok(to_json(&AuditSummary {
        mechanism: args.mech.mechanism,
        params: Params { mech: &args.mech, range: &setup.range, blackbox: &args.input.blackbox, dataset_size: x.len() },
        neighbor_size: x_prime.len(),
        seed: args.seed,
        profile: args.mech.profile().label(),
        audit: report,
    }))
}

#[derive(Serialize)]
struct OracleReport {
    oracle: OracleKind,
    lambda: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    c: Option<f64>,
    value: serde_json::Value,
    queries: u64,
    realized_depth: usize,
}

fn oracle(args: &OracleArgs) -> Result<String, Failure> {
    let setup = Setup::new(&args.input)?;
    let mut bb = setup.open(&setup.root)?;
    let (value, c) = match args.kind {
        OracleKind::DownSensitivity => (serde_json::json!(brute_down_sensitivity(&mut bb, args.lambda)?), None),
        OracleKind::Lipschitz => (serde_json::json!(brute_lipschitz_on_dn(&mut bb, args.lambda, args.c)?), Some(args.c)),
    };
    Ok(to_json(&OracleReport {
        oracle: args.kind,
        lambda: args.lambda,
        c,
        value,
        queries: bb.ledger(),
        realized_depth: bb.realized_depth().unwrap_or(0),
    }))
}

#[derive(Serialize)]
struct BenchReport<'a> {
    mechanism: Mechanism,
    params: Params<'a>,
    seed: u64,
    runs: u64,
    threads: usize,
    bottoms: u64,
    mean: Option<f64>,
    std_dev: Option<f64>,
    mean_queries: f64,
    max_realized_depth: usize,
    wall_time_ms: f64,
    profile: &'static str,
}

fn bench(args: &BenchArgs) -> Result<String, Failure> {
    args.mech.validate()?;
    if args.threads == 0 || args.runs == 0 {
        return Err(Failure::validation("--runs and --threads must be positive"));
    }
    let setup = Setup::new(&args.input)?;
    let start = Instant::now();
    // Worker w handles runs w, w + threads, ...; run t draws from stream t of the seed.
    let results: Vec<Result<Vec<WrapperOutput>, Failure>> = thread::scope(|s| {
        let handles: Vec<_> = (0..args.threads)
            .map(|w| {
                let setup = &setup;
                s.spawn(move || {
                    let mut outs = Vec::new();
                    for t in (w as u64..args.runs).step_by(args.threads) {
                        let mut bb = setup.open(&setup.root)?;
                        outs.push(args.mech.run(&mut bb, &mut RandomStream::with_stream(args.seed, t))?);
                    }
                    Ok(outs)
                })
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("bench worker panicked")).collect()
    });
    let wall = start.elapsed();
    let mut outs = Vec::new();
    for r in results {
        outs.extend(r?);
    }
    let vals: Vec<f64> = outs.iter().filter_map(|o| o.result.value()).collect();
    let mean = (!vals.is_empty()).then(|| vals.iter().sum::<f64>() / vals.len() as f64);
    let std_dev = mean.filter(|_| vals.len() > 1).map(|m| {
        (vals.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (vals.len() - 1) as f64).sqrt()
    });
    Ok(to_json(&BenchReport {
        mechanism: args.mech.mechanism,
        params: Params { mech: &args.mech, range: &setup.range, blackbox: &args.input.blackbox, dataset_size: setup.root.len() },
        seed: args.seed,
        runs: args.runs,
        threads: args.threads,
        bottoms: outs.iter().filter(|o| o.result.is_bottom()).count() as u64,
        mean,
        std_dev,
        mean_queries: outs.iter().map(|o| o.queries as f64).sum::<f64>() / outs.len() as f64,
        max_realized_depth: outs.iter().map(|o| o.realized_depth).max().unwrap_or(0),
        wall_time_ms: wall.as_secs_f64() * 1e3,
        profile: args.mech.profile().label(),
    }))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let unsafe_constants = match &cli.command {
        Cmd::Wrap(a) => a.mech.unsafe_test_constants,
        Cmd::Audit(a) => a.mech.unsafe_test_constants,
        Cmd::Bench(a) => a.mech.unsafe_test_constants,
        Cmd::Oracle(_) => false,
    };
    if unsafe_constants {
        eprintln!("warning: --unsafe-test-constants reduces privacy constants; results carry no privacy guarantee");
    }
    let outcome = match &cli.command {
        Cmd::Wrap(a) => wrap(a),
        Cmd::Audit(a) => audit(a),
        Cmd::Oracle(a) => oracle(a),
        Cmd::Bench(a) => bench(a),
    };
    match outcome {
        Ok(report) => {
            println!("{report}");
            ExitCode::SUCCESS
        }
        Err(f) => {
            if let Some(report) = f.report {
                println!("{report}");
            }
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

//! Command dispatch for the `finnet` binary.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use finnet::analytics::{increased_liquidity, threat_index};
use finnet::bailout::{greedy_injections, optimal_injections_enumerative, optimal_injections_lp};
use finnet::clearing::{greatest_clearing, least_clearing};
use finnet::debt_relief::{greedy_removal, optimal_removal, RemovalObjective};
use finnet::document::{
    clearing_report, edges_report, parse_network, parse_profile, plan_report, profile_report, vector_report,
};
use finnet::games::{br_dynamics, enumerate_equilibria, play, quality_report, utilities, Dynamics, Ratio};
use finnet::scenarios::{describe, Params};
use finnet::{Error, FinancialNetwork, NamedNetwork, PolicySpec, Scalar, StrategyProfile};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_GUARD: i32 = 3;
pub const EXIT_NUMERIC: i32 = 4;

/// Seed used by `random` when `--seed` is absent.
pub const DEFAULT_SEED: u64 = 20_240_601;

#[derive(Debug, Parser)]
#[command(name = "finnet", version, about = "Clearing, bailouts and debt-forgiveness games on financial networks")]
pub struct Cli {
    /// Use floating point instead of exact rationals.
    #[arg(long, global = true)]
    pub float: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Clearing payments of a network.
    Clear {
        file: PathBuf,
        /// Report the least clearing instead of the greatest.
        #[arg(long)]
        least: bool,
    },
    /// Plan a cash injection under a budget.
    Inject {
        file: PathBuf,
        #[arg(long)]
        budget: String,
        #[arg(long, value_enum, default_value = "greedy")]
        policy: InjectPolicy,
    },
    /// Choose liabilities to forgive.
    RemoveDebt {
        file: PathBuf,
        #[arg(long, value_enum, default_value = "max-liquidity")]
        objective: Objective,
        /// Bank id that must end up solvent (min-forgiven-target).
        #[arg(long)]
        target: Option<String>,
    },
    /// Analyze the edge-removal game.
    Game(GameArgs),
    /// Build a named scenario and check its expected facts.
    Scenario {
        name: String,
        /// Scenario parameter as key=value; repeatable.
        #[arg(long = "param", value_name = "KEY=VALUE")]
        params: Vec<String>,
        /// Write the network document to this file.
        #[arg(long)]
        emit: Option<PathBuf>,
    },
    /// Generate a seeded random network document.
    Random {
        #[arg(long, default_value_t = 5)]
        banks: usize,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        /// Largest external asset or liability.
        #[arg(long, default_value_t = 10)]
        max_value: i64,
        /// Probability of each liability.
        #[arg(long, default_value_t = 0.4)]
        density: f64,
        #[arg(long, default_value = "1")]
        alpha: String,
        #[arg(long, default_value = "1")]
        beta: String,
        #[arg(long)]
        emit: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
#[command(group = clap::ArgGroup::new("mode").required(true).args(["dynamics", "enumerate", "report"]))]
pub struct GameArgs {
    pub file: PathBuf,
    /// none, greedy:M or optimal:M.
    #[arg(long, default_value = "none")]
    pub policy: String,
    /// Run round-robin best-response dynamics.
    #[arg(long)]
    pub dynamics: bool,
    /// Starting profile for --dynamics, e.g. "v4>v1,v4>v2".
    #[arg(long, requires = "dynamics")]
    pub start: Option<String>,
    #[arg(long, default_value_t = 10_000, requires = "dynamics")]
    pub max_steps: usize,
    /// List every pure equilibrium.
    #[arg(long)]
    pub enumerate: bool,
    /// Equilibria, liquidity extremes and quality ratios.
    #[arg(long)]
    pub report: bool,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum InjectPolicy {
    Greedy,
    Optimal,
    Enumerative,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Objective {
    MaxLiquidity,
    MaxLiquidityAllSolvent,
    MinForgivenAllSolvent,
    MinForgivenTarget,
    Greedy,
}

/// Exit code plus what the binary writes to stdout and stderr.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Output {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

#[derive(Debug)]
enum Failure {
    Input(String),
    Core(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

impl Failure {
    fn code(&self) -> i32 {
        match self {
            Failure::Input(_) => EXIT_INPUT,
            Failure::Core(Error::GuardExceeded { .. }) => EXIT_GUARD,
            Failure::Core(Error::NonConvergence { .. } | Error::Singular { .. }) => EXIT_NUMERIC,
            Failure::Core(_) => EXIT_INPUT,
        }
    }

    fn message(&self) -> String {
        match self {
            Failure::Input(m) => m.clone(),
            Failure::Core(e) => e.to_string(),
        }
    }
}

type Outcome<T> = std::result::Result<T, Failure>;

/// Parses `args` (program name first) and runs the command.
pub fn run<I, T>(args: I) -> Output
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let text = e.render().to_string();
            return if code == EXIT_OK {
                Output { code, stdout: text, stderr: String::new() }
            } else {
                Output { code, stdout: String::new(), stderr: text }
            };
        }
    };
    let result = if cli.float { execute::<f64>(&cli.command) } else { execute::<finnet::Rational>(&cli.command) };
    match result {
        Ok(report) => Output {
            code: EXIT_OK,
            stdout: serde_json::to_string_pretty(&report).expect("reports always serialize") + "\n",
            stderr: String::new(),
        },
        Err(f) => Output { code: f.code(), stdout: String::new(), stderr: format!("error: {}\n", f.message()) },
    }
}

fn execute<S: Scalar>(command: &Command) -> Outcome<Value> {
    match command {
        Command::Clear { file, least } => {
            let named = load::<S>(file)?;
            let clearing = if *least { least_clearing(&named.network)? } else { greatest_clearing(&named.network)? };
            let mut report = clearing_report(&named, &clearing);
            report["threat"] =
                threat_index(&named.network, &clearing).map_or(Value::Null, |mu| vector_report(&named, &mu));
            report["fixed_point"] = json!(if *least { "least" } else { "greatest" });
            Ok(report)
        }
        Command::Inject { file, budget, policy } => {
            let named = load::<S>(file)?;
            let budget = amount::<S>(budget, "--budget")?;
            inject(&named, &budget, *policy)
        }
        Command::RemoveDebt { file, objective, target } => {
            let named = load::<S>(file)?;
            remove_debt(&named, *objective, target.as_deref())
        }
        Command::Game(args) => {
            let named = load::<S>(&args.file)?;
            game(&named, args)
        }
        Command::Scenario { name, params, emit } => scenario::<S>(name, params, emit.as_deref()),
        Command::Random { banks, seed, max_value, density, alpha, beta, emit } => {
            if *banks == 0 || *max_value < 1 || !(0.0..=1.0).contains(density) {
                return Err(Failure::Input("need --banks >= 1, --max-value >= 1 and --density in [0, 1]".into()));
            }
            let alpha = amount::<S>(alpha, "--alpha")?;
            let beta = amount::<S>(beta, "--beta")?;
            let net = random_network(*banks, *seed, *max_value, *density, alpha, beta)?;
            emit_or_inline(&NamedNetwork::with_default_ids(net), emit.as_deref(), json!({"seed": seed}))
        }
    }
}

fn load<S: Scalar>(path: &Path) -> Outcome<NamedNetwork<S>> {
    let text = fs::read_to_string(path).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
    parse_network(&text).map_err(|e| Failure::Input(format!("{}: {e}", path.display())))
}

fn amount<S: Scalar>(text: &str, flag: &str) -> Outcome<S> {
    S::parse_amount(text).map_err(|_| Failure::Input(format!("{flag}: cannot parse {text:?}")))
}

fn inject<S: Scalar>(named: &NamedNetwork<S>, budget: &S, policy: InjectPolicy) -> Outcome<Value> {
    let net = &named.network;
    let before = greatest_clearing(net)?;
    let (plan, after, trace) = match policy {
        InjectPolicy::Greedy => {
            let out = greedy_injections(net, budget)?;
            let trace: Vec<Value> = out
                .trace
                .iter()
                .map(|r| {
                    json!({
                        "bank": named.id(r.bank),
                        "amount": r.amount.to_canonical(),
                        "threat": vector_report(named, &r.threat),
                    })
                })
                .collect();
            (out.plan, out.clearing, Some(trace))
        }
        InjectPolicy::Optimal => {
            let (plan, clearing) = optimal_injections_lp(net, budget)?;
            (plan, clearing, None)
        }
        InjectPolicy::Enumerative => {
            let (plan, clearing) = optimal_injections_enumerative(net, budget)?;
            (plan, clearing, None)
        }
    };
    let gain = increased_liquidity(&before, &after)?;
    let mut report = json!({
        "policy": format!("{policy:?}").to_lowercase(),
        "plan": plan_report(named, &plan),
        "liquidity_before": before.liquidity.to_canonical(),
        "increased_liquidity": gain.to_canonical(),
        "clearing": clearing_report(named, &after),
    });
    if let Some(trace) = trace {
        report["trace"] = Value::Array(trace);
    }
    Ok(report)
}

fn remove_debt<S: Scalar>(named: &NamedNetwork<S>, objective: Objective, target: Option<&str>) -> Outcome<Value> {
    let net = &named.network;
    let kind = match objective {
        Objective::MaxLiquidity => RemovalObjective::MaxLiquidity,
        Objective::MaxLiquidityAllSolvent => RemovalObjective::MaxLiquidityAllSolvent,
        Objective::MinForgivenAllSolvent => RemovalObjective::MinForgivenAllSolvent,
        Objective::MinForgivenTarget => {
            let id = target.ok_or_else(|| Failure::Input("min-forgiven-target needs --target".into()))?;
            RemovalObjective::MinForgivenTargetSolvent(named.index_of(id).map_err(|e| Failure::Input(e.to_string()))?)
        }
        Objective::Greedy => {
            let out = greedy_removal(net)?;
            return Ok(removal_report(named, "greedy", &out));
        }
    };
    if target.is_some() && !matches!(objective, Objective::MinForgivenTarget) {
        return Err(Failure::Input("--target only applies to min-forgiven-target".into()));
    }
    let out = optimal_removal(net, kind)?;
    let name = format!("{objective:?}");
    Ok(removal_report(named, &kebab(&name), &out))
}

fn removal_report<S: Scalar>(named: &NamedNetwork<S>, objective: &str, out: &finnet::RemovalOutcome<S>) -> Value {
    json!({
        "objective": objective,
        "removed": edges_report(named, &out.removed),
        "value": out.value.to_canonical(),
        "clearing": clearing_report(named, &out.clearing),
    })
}

fn kebab(camel: &str) -> String {
    let mut out = String::new();
    for (i, c) in camel.chars().enumerate() {
        if c.is_uppercase() && i > 0 {
            out.push('-');
        }
        out.push(c.to_ascii_lowercase());
    }
    out
}

fn ratio_text<S: Scalar>(r: &Ratio<S>) -> String {
    match r {
        Ratio::Value(v) => v.to_canonical(),
        other => other.to_string(),
    }
}

fn optional<S: Scalar>(v: &Option<S>) -> Value {
    v.as_ref().map_or(Value::Null, |x| json!(x.to_canonical()))
}

fn game<S: Scalar>(named: &NamedNetwork<S>, args: &GameArgs) -> Outcome<Value> {
    let net = &named.network;
    let policy = PolicySpec::<S>::parse(&args.policy).map_err(|e| Failure::Input(e.to_string()))?;
    let profile_entry = |p: &StrategyProfile| -> Outcome<Value> {
        let clearing = play(net, p, &policy)?;
        Ok(json!({
            "removed": profile_report(named, p),
            "utilities": vector_report(named, &utilities(net, p, &policy)?),
            "liquidity": clearing.liquidity.to_canonical(),
        }))
    };
    let mut report = json!({"policy": policy.to_string()});
    if args.dynamics {
        let start = match &args.start {
            Some(text) => parse_profile(named, text).map_err(|e| Failure::Input(e.to_string()))?,
            None => StrategyProfile::keep_all(net.len()),
        };
        report["start"] = profile_report(named, &start);
        match br_dynamics(net, &start, &policy, args.max_steps)? {
            Dynamics::Equilibrium(p) => {
                report["outcome"] = json!("equilibrium");
                report["profile"] = profile_entry(&p)?;
            }
            Dynamics::Cycle(states) => {
                report["outcome"] = json!("cycle");
                report["cycle"] = Value::Array(states.iter().map(&profile_entry).collect::<Outcome<_>>()?);
            }
            Dynamics::Truncated(p) => {
                report["outcome"] = json!("truncated");
                report["profile"] = profile_entry(&p)?;
            }
        }
    } else if args.enumerate {
        let eq = enumerate_equilibria(net, &policy)?;
        report["equilibria"] = Value::Array(eq.iter().map(&profile_entry).collect::<Outcome<_>>()?);
    } else {
        let rep = quality_report(net, &policy)?;
        report["equilibria"] = Value::Array(rep.equilibria.iter().map(&profile_entry).collect::<Outcome<_>>()?);
        if let Some(cycle) = &rep.cycle {
            report["cycle"] = Value::Array(cycle.iter().map(&profile_entry).collect::<Outcome<_>>()?);
        }
        report["f_original"] = json!(rep.f_original.to_canonical());
        report["f_optimal"] = json!(rep.f_optimal.to_canonical());
        report["f_worst_equilibrium"] = optional(&rep.f_worst_eq);
        report["f_best_equilibrium"] = optional(&rep.f_best_eq);
        report["poa"] = json!(ratio_text(&rep.poa));
        report["pos"] = json!(ratio_text(&rep.pos));
        report["eoa"] = json!(ratio_text(&rep.eoa));
        report["eos"] = json!(ratio_text(&rep.eos));
    }
    Ok(report)
}

fn scenario<S: Scalar>(name: &str, raw: &[String], emit: Option<&Path>) -> Outcome<Value> {
    let mut params = Params::new();
    for p in raw {
        let (k, v) =
            p.split_once('=').ok_or_else(|| Failure::Input(format!("--param expects key=value, got {p:?}")))?;
        params.insert(k.trim().to_string(), v.trim().to_string());
    }
    let d = describe::<S>(name, &params).map_err(|e| match e {
        Error::GuardExceeded { .. } => Failure::Core(e),
        other => Failure::Input(other.to_string()),
    })?;
    let facts: Vec<Value> = d
        .verify()?
        .into_iter()
        .map(|c| {
            json!({
                "statement": c.statement,
                "origin": format!("{:?}", c.origin).to_lowercase(),
                "holds": c.holds,
                "observed": c.observed,
            })
        })
        .collect();
    let parameters: serde_json::Map<String, Value> = d.parameters.iter().map(|(k, v)| (k.clone(), json!(v))).collect();
    let extra = json!({"scenario": d.name, "parameters": parameters, "facts": facts});
    emit_or_inline(&NamedNetwork::with_default_ids(d.network), emit, extra)
}

fn emit_or_inline<S: Scalar>(named: &NamedNetwork<S>, emit: Option<&Path>, mut report: Value) -> Outcome<Value> {
    match emit {
        Some(path) => {
            fs::write(path, named.to_json() + "\n").map_err(|e| Failure::Input(format!("{}: {e}", path.display())))?;
            report["emitted"] = json!(path.display().to_string());
        }
        None => {
            report["network"] = serde_json::to_value(named.to_document()).expect("documents always serialize");
        }
    }
    Ok(report)
}

fn random_network<S: Scalar>(
    banks: usize,
    seed: u64,
    max_value: i64,
    density: f64,
    alpha: S,
    beta: S,
) -> Outcome<FinancialNetwork<S>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let externals = (0..banks).map(|_| S::from_int(rng.gen_range(0..=max_value))).collect();
    let mut edges = Vec::new();
    for i in 0..banks {
        for j in 0..banks {
            if i != j && rng.gen_bool(density) {
                edges.push((i, j, S::from_int(rng.gen_range(1..=max_value))));
            }
        }
    }
    Ok(FinancialNetwork::from_edges(externals, edges, alpha, beta)?)
}

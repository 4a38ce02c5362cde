//! `mkpolar` command-line front end. Each subcommand parses its inputs,
//! calls one library entry point and writes the result as JSON or CSV.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;
use serde_json::json;

use mkpolar::construct::{potential_trace, threshold_for_dimension};
use mkpolar::converse::sharp_transition_scan;
use mkpolar::kernel::SearchMode;
use mkpolar::rng::mix;
use mkpolar::sim::MessageMode;
use mkpolar::{
    build_plan, encode, kernel_search, sc_decode, simulate, BitWord, BmsChannel, ConstructionPlan, LlrWord, PlanConfig,
    SearchPolicy, SelectorParams, SimConfig,
};

#[derive(Parser, Debug)]
#[command(name = "mkpolar", version, about = "Multi-kernel polar code construction and simulation")]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// JSON file of flag defaults; flags given on the command line win.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Entropy, Bhattacharyya parameter and mixture form of a channel file.
    ChannelInfo(Common),
    /// Builds a plan and writes the plan file.
    Construct(ConstructArgs),
    /// Encodes one message per input line.
    Encode(CodecArgs),
    /// SC-decodes one LLR vector per input line.
    Decode(CodecArgs),
    /// Monte Carlo frame and bit error rates for a plan over a channel.
    Simulate(SimulateArgs),
    /// Runs the kernel search once on a channel.
    KernelSearch(SearchArgs),
    /// Mean H(V_1 | Y) of random generator matrices for a range of k, as CSV.
    ConverseScan(ScanArgs),
    /// Per-level mean of (H(1-H))^alpha over a plan, as CSV.
    Trace(TraceArgs),
}

#[derive(Args, Debug, Default)]
struct Common {
    #[arg(long)]
    channel: Option<PathBuf>,
    #[arg(long)]
    ell: Option<usize>,
    #[arg(long)]
    t: Option<usize>,
    /// Degraded bins per node; 0 keeps channels exact.
    #[arg(long = "Q")]
    q: Option<usize>,
    #[arg(long)]
    theta: Option<f64>,
    #[arg(long, value_enum)]
    selector: Option<Selector>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ConstructArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, value_enum)]
    search: Option<Search>,
    /// Search policy JSON; replaces `--search`.
    #[arg(long)]
    policy: Option<PathBuf>,
    /// Keep the k most reliable leaves instead of thresholding.
    #[arg(long)]
    dimension: Option<usize>,
    /// Same as `--dimension floor(rate N)`.
    #[arg(long)]
    rate: Option<f64>,
}

#[derive(Args, Debug)]
struct CodecArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    plan: PathBuf,
    #[arg(long)]
    input: PathBuf,
}

#[derive(Args, Debug)]
struct SimulateArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    plan: PathBuf,
    #[arg(long, value_enum, default_value = "random")]
    message: Message,
    /// Stop after this many frame errors (at least 100).
    #[arg(long)]
    early_stop: Option<u64>,
    /// Also append a CSV row to this file.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SearchArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, value_enum)]
    search: Option<Search>,
    /// Search policy JSON; replaces `--search`.
    #[arg(long)]
    policy: Option<PathBuf>,
    /// Suction slack; defaults to the accumulated binning bound at depth 1.
    #[arg(long)]
    delta: Option<f64>,
}

#[derive(Args, Debug)]
struct ScanArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, default_value_t = 1)]
    k_min: usize,
    /// Defaults to `--ell`.
    #[arg(long)]
    k_max: Option<usize>,
    #[arg(long)]
    json: bool,
}

#[derive(Args, Debug)]
struct TraceArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    plan: PathBuf,
    #[arg(long, default_value_t = 0.1)]
    alpha: f64,
}

#[derive(ValueEnum, Clone, Copy, Debug, Deserialize)]
#[serde(rename_all = "kebab-case")]
enum Selector {
    Threshold,
    Staged,
}

#[derive(ValueEnum, Clone, Copy, Debug, Deserialize)]
#[serde(rename_all = "kebab-case")]
enum Search {
    BestEffort,
    Exhaustive,
    Randomized,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum Message {
    Zero,
    Random,
}

/// Contents of `--config`.
#[derive(Deserialize, Debug, Default)]
#[serde(deny_unknown_fields)]
struct Overlay {
    channel: Option<PathBuf>,
    ell: Option<usize>,
    t: Option<usize>,
    #[serde(rename = "Q")]
    q: Option<usize>,
    theta: Option<f64>,
    selector: Option<Selector>,
    seed: Option<u64>,
    trials: Option<u64>,
    out: Option<PathBuf>,
    threads: Option<usize>,
    search: Option<Search>,
}

#[derive(Debug)]
enum Failure {
    Io(String),
    Parse(String),
    Budget(String),
    Validation(String),
    Exhausted(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Io(_) => 3,
            Failure::Parse(_) => 4,
            Failure::Budget(_) => 5,
            Failure::Validation(_) => 6,
            Failure::Exhausted(_) => 7,
        }
    }

    fn kind(&self) -> &'static str {
        match self {
            Failure::Io(_) => "io",
            Failure::Parse(_) => "parse",
            Failure::Budget(_) => "budget",
            Failure::Validation(_) => "validation",
            Failure::Exhausted(_) => "search_exhausted",
        }
    }

    fn message(&self) -> &str {
        match self {
            Failure::Io(m) | Failure::Parse(m) | Failure::Budget(m) | Failure::Validation(m) | Failure::Exhausted(m) => m,
        }
    }
}

impl From<mkpolar::Error> for Failure {
    fn from(e: mkpolar::Error) -> Self {
        use mkpolar::Error as E;
        let msg = e.to_string();
        match e.root_cause() {
            E::Parse(_) => Failure::Parse(msg),
            E::BudgetExceeded { .. } => Failure::Budget(msg),
            E::SearchExhausted { .. } => Failure::Exhausted(msg),
            _ => Failure::Validation(msg),
        }
    }
}

type Res<T> = std::result::Result<T, Failure>;

fn read(path: &Path) -> Res<String> {
    fs::read_to_string(path).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))
}

fn emit(out: Option<&Path>, text: &str) -> Res<()> {
    let text = if text.ends_with('\n') { text.to_string() } else { format!("{text}\n") };
    match out {
        Some(p) => fs::write(p, text).map_err(|e| Failure::Io(format!("{}: {e}", p.display()))),
        None => std::io::stdout().write_all(text.as_bytes()).map_err(|e| Failure::Io(e.to_string())),
    }
}

fn need<T>(v: Option<T>, flag: &str) -> Res<T> {
    v.ok_or_else(|| Failure::Validation(format!("--{flag} is required")))
}

fn load_channel(path: Option<&PathBuf>) -> Res<BmsChannel<f64>> {
    let p = need(path, "channel")?;
    Ok(BmsChannel::from_json(&read(p)?)?)
}

fn load_plan(path: &Path) -> Res<ConstructionPlan> {
    Ok(ConstructionPlan::from_json(&read(path)?)?)
}

/// Uses `--seed`, or draws one from the clock and reports it on stderr.
fn seed_or_derive(seed: Option<u64>) -> u64 {
    seed.unwrap_or_else(|| {
        let nanos = std::time::SystemTime::now().duration_since(std::time::UNIX_EPOCH).map(|d| d.as_nanos() as u64).unwrap_or(0);
        let s = mix(nanos ^ std::process::id() as u64);
        eprintln!("{}", json!({ "derived_seed": s }));
        s
    })
}

fn policy_for(file: Option<&PathBuf>, search: Option<Search>, ell: usize) -> Res<SearchPolicy> {
    if let Some(p) = file {
        return serde_json::from_str(&read(p)?).map_err(|e| Failure::Parse(format!("{}: {e}", p.display())));
    }
    Ok(match search {
        None | Some(Search::BestEffort) => SearchPolicy::best_effort(),
        Some(Search::Exhaustive) => SearchPolicy { mode: SearchMode::Exhaustive, ..SearchPolicy::for_ell(ell) },
        Some(Search::Randomized) => SearchPolicy { mode: SearchMode::Randomized, ..SearchPolicy::for_ell(ell) },
    })
}

fn selector_for(c: &Common) -> Res<SelectorParams> {
    let mut sel = match c.selector {
        None | Some(Selector::Threshold) => SelectorParams::default(),
        Some(Selector::Staged) => SelectorParams::staged(),
    };
    if let Some(th) = c.theta {
        sel.theta = th;
    }
    sel.validate()?;
    Ok(sel)
}

fn q_flag(q: Option<usize>, ell: usize, t: usize) -> Option<usize> {
    match q {
        Some(0) => None,
        Some(q) => Some(q),
        None => Some(PlanConfig::default_q(ell, t)),
    }
}

fn channel_info(c: &Common) -> Res<()> {
    let w = load_channel(c.channel.as_ref())?;
    let doc = json!({
        "entropy": w.entropy(),
        "bhattacharyya": w.bhattacharyya(),
        "capacity": w.capacity(),
        "output_size": w.output_size(),
        "digest": w.digest(),
        "mixture": w.to_mixture_file().mixture,
    });
    emit(c.out.as_deref(), &serde_json::to_string_pretty(&doc).unwrap())
}

fn construct(a: &ConstructArgs) -> Res<()> {
    let c = &a.common;
    let w = load_channel(c.channel.as_ref())?;
    let (ell, t) = (need(c.ell, "ell")?, need(c.t, "t")?);
    let cfg = PlanConfig {
        q: q_flag(c.q, ell, t),
        delta: None,
        policy: policy_for(a.policy.as_ref(), a.search, ell)?,
        selector: selector_for(c)?,
        seed: seed_or_derive(c.seed),
    };
    let mut plan = build_plan(&w, ell, t, &cfg)?;
    let k = match (a.dimension, a.rate) {
        (Some(_), Some(_)) => return Err(Failure::Validation("give --dimension or --rate, not both".into())),
        (Some(k), None) => Some(k),
        (None, Some(r)) if (0.0..=1.0).contains(&r) => Some((r * plan.n() as f64).floor() as usize),
        (None, Some(r)) => return Err(Failure::Validation(format!("rate {r} outside [0, 1]"))),
        (None, None) => None,
    };
    if let Some(k) = k {
        let theta = threshold_for_dimension(&plan, k)?;
        plan.reselect(SelectorParams { theta, ..cfg.selector })?;
    }
    emit(c.out.as_deref(), &plan.to_json())
}

fn lines(text: &str) -> impl Iterator<Item = &str> {
    text.lines().filter(|l| !l.trim().is_empty())
}

fn encode_cmd(a: &CodecArgs) -> Res<()> {
    let plan = load_plan(&a.plan)?;
    let mut out = String::new();
    for line in lines(&read(&a.input)?) {
        let msg = BitWord::parse_line(line)?;
        out.push_str(&encode(&plan, msg.bits())?.to_line());
        out.push('\n');
    }
    emit(a.common.out.as_deref(), &out)
}

fn decode_cmd(a: &CodecArgs) -> Res<()> {
    let plan = load_plan(&a.plan)?;
    let mut out = String::new();
    for line in lines(&read(&a.input)?) {
        let llr: LlrWord<f64> = LlrWord::parse_line(line)?;
        let (msg, _) = sc_decode(&plan, &llr)?;
        out.push_str(&BitWord::new(msg)?.to_line());
        out.push('\n');
    }
    emit(a.common.out.as_deref(), &out)
}

fn simulate_cmd(a: &SimulateArgs) -> Res<()> {
    let c = &a.common;
    let plan = load_plan(&a.plan)?;
    let w = load_channel(c.channel.as_ref())?;
    let cfg = SimConfig {
        plan: &plan,
        channel: &w,
        trials: need(c.trials, "trials")?,
        seed: seed_or_derive(c.seed),
        message_mode: match a.message {
            Message::Zero => MessageMode::AllZero,
            Message::Random => MessageMode::Random,
        },
        early_stop: a.early_stop,
    };
    let report = simulate(&cfg)?;
    if let Some(p) = &a.csv {
        report.append_csv(p).map_err(|e| Failure::Io(format!("{}: {e}", p.display())))?;
    }
    emit(c.out.as_deref(), &serde_json::to_string_pretty(&report).unwrap())
}

fn kernel_search_cmd(a: &SearchArgs) -> Res<()> {
    let c = &a.common;
    let w = load_channel(c.channel.as_ref())?;
    let ell = need(c.ell, "ell")?;
    let q = q_flag(c.q, ell, 1);
    let policy = SearchPolicy { seed: seed_or_derive(c.seed), bin_q: q, ..policy_for(a.policy.as_ref(), a.search, ell)? };
    let delta = a.delta.unwrap_or_else(|| PlanConfig::default_delta(q, ell, 1));
    let (k, report) = kernel_search(&w, delta, ell, &policy)?;
    let doc = json!({ "kernel": k.to_strings(), "report": report });
    emit(c.out.as_deref(), &serde_json::to_string_pretty(&doc).unwrap())
}

fn scan_cmd(a: &ScanArgs) -> Res<()> {
    let c = &a.common;
    let w = load_channel(c.channel.as_ref())?;
    let ell = need(c.ell, "ell")?;
    let k_max = a.k_max.unwrap_or(ell);
    let samples = need(c.trials, "trials")?;
    let scan = sharp_transition_scan(&w, ell, a.k_min..=k_max, samples, seed_or_derive(c.seed))?;
    emit(c.out.as_deref(), &if a.json { scan.to_json() } else { scan.to_csv() })
}

fn trace_cmd(a: &TraceArgs) -> Res<()> {
    let plan = load_plan(&a.plan)?;
    let trace = potential_trace(&plan, a.alpha)?;
    let mut out = String::from("level,potential\n");
    for (j, v) in trace.iter().enumerate() {
        out.push_str(&format!("{j},{v}\n"));
    }
    emit(a.common.out.as_deref(), &out)
}

fn common_mut(cmd: &mut Cmd) -> &mut Common {
    match cmd {
        Cmd::ChannelInfo(c) => c,
        Cmd::Construct(a) => &mut a.common,
        Cmd::Encode(a) | Cmd::Decode(a) => &mut a.common,
        Cmd::Simulate(a) => &mut a.common,
        Cmd::KernelSearch(a) => &mut a.common,
        Cmd::ConverseScan(a) => &mut a.common,
        Cmd::Trace(a) => &mut a.common,
    }
}

/// Fills flags left unset on the command line from the overlay.
fn apply_overlay(cli: &mut Cli, o: Overlay) {
    cli.threads = cli.threads.or(o.threads);
    match &mut cli.cmd {
        Cmd::Construct(a) => a.search = a.search.or(o.search),
        Cmd::KernelSearch(a) => a.search = a.search.or(o.search),
        _ => {}
    }
    let c = common_mut(&mut cli.cmd);
    c.channel = c.channel.take().or(o.channel);
    c.ell = c.ell.or(o.ell);
    c.t = c.t.or(o.t);
    c.q = c.q.or(o.q);
    c.theta = c.theta.or(o.theta);
    c.selector = c.selector.or(o.selector);
    c.seed = c.seed.or(o.seed);
    c.trials = c.trials.or(o.trials);
    c.out = c.out.take().or(o.out);
}

fn run(mut cli: Cli) -> Res<()> {
    if let Some(p) = cli.config.clone() {
        let o: Overlay = serde_json::from_str(&read(&p)?).map_err(|e| Failure::Parse(format!("{}: {e}", p.display())))?;
        apply_overlay(&mut cli, o);
    }
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(Failure::Validation("--threads must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| Failure::Validation(e.to_string()))?;
    }
    match &cli.cmd {
        Cmd::ChannelInfo(c) => channel_info(c),
        Cmd::Construct(a) => construct(a),
        Cmd::Encode(a) => encode_cmd(a),
        Cmd::Decode(a) => decode_cmd(a),
        Cmd::Simulate(a) => simulate_cmd(a),
        Cmd::KernelSearch(a) => kernel_search_cmd(a),
        Cmd::ConverseScan(a) => scan_cmd(a),
        Cmd::Trace(a) => trace_cmd(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            eprintln!("{}", json!({ "error": "usage", "message": e.kind().to_string(), "exit_code": 2 }));
            let _ = e.print();
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("{}", json!({ "error": f.kind(), "message": f.message(), "exit_code": f.code() }));
            ExitCode::from(f.code())
        }
    }
}

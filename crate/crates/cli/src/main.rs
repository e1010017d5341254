//! `byzmac` command-line front end.
//!
//! Exit codes: 0 on success, 1 when a check fails or a computation does not
//! reach its tolerance, 2 on usage or input errors.

mod parse;

use std::path::PathBuf;
use std::process::ExitCode;

use byzmac::adversarial::{check_orthogonally_symmetrizable, check_symmetrizable, OrthoVerdict, SymVerdict};
use byzmac::capacity::{region_2user, region_3user, region_kuser, OptimizerConfig, PostForm, RateRegion, RegionOptions};
use byzmac::cq_channel::{example_povms, factorized_local_povm, load_povm, save_channel, save_povm};
use byzmac::entropic::{average_output, conditional_entropy, holevo, mutual_info, von_neumann_entropy};
use byzmac::simulator::{
    error_probability, example_setup, example_demo, pgm_stage_povm, summary_csv, transcripts, transcripts_jsonl,
    ErrorReport, RandomCode, SimSetup,
};
use byzmac::{CqMacChannel, Povm};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use parse::ChannelSource;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Failure(String),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Failure(m) => f.write_str(m),
        }
    }
}

impl From<byzmac::Error> for CliError {
    fn from(e: byzmac::Error) -> Self {
        use byzmac::Error as E;
        match e {
            E::BudgetExhausted(_) | E::ZeroProbabilityBranch { .. } | E::DegenerateEnsemble | E::NegativeEigenvalue { .. } => {
                CliError::Failure(e.to_string())
            }
            _ => CliError::Usage(e.to_string()),
        }
    }
}

type CliResult<T = ()> = Result<T, CliError>;

#[derive(Parser)]
#[command(name = "byzmac", version, about = "Byzantine multiple-access cq channels: rates, symmetrizability and decoding simulation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Exact error table of the built-in two-sender example.
    DemoExample {
        #[arg(long, value_enum, default_value_t = Format::Table)]
        format: Format,
        /// Accepted for uniformity; the table is exact.
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Entropies, Holevo quantity and mutual information of one sender.
    Entropy(EntropyArgs),
    /// Holevo quantity of one sender.
    Holevo(EntropyArgs),
    /// Max-min rate bounds for a decode order.
    Region(RegionArgs),
    /// Symmetrizability and orthogonal symmetrizability of a two-slot view.
    Symcheck(SymArgs),
    /// Monte Carlo decoding error under an optional adversary.
    Simulate(SimArgs),
    /// Writes built-in channels and POVMs as JSON files.
    Fixture(FixtureArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Table,
    Json,
    Csv,
}

#[derive(Args)]
struct EntropyArgs {
    /// Channel file, `builtin:example` or `builtin:factorized:N,N,...`.
    #[arg(long, value_parser = parse::channel_source)]
    channel: ChannelSource,
    /// Evaluated sender (1-based).
    #[arg(long, default_value_t = 1)]
    slot: usize,
    /// Input distribution of the evaluated sender, comma-separated.
    #[arg(long)]
    dist: String,
    /// Removes another sender: `SLOT=point:SYMBOL` or `SLOT=dist:P,...`.
    #[arg(long)]
    freeze: Vec<String>,
    #[arg(long, value_enum, default_value_t = Format::Table)]
    format: Format,
}

#[derive(Clone, Copy, ValueEnum)]
enum PostFormArg {
    Derivation,
    Statement,
}

#[derive(Args)]
struct RegionArgs {
    #[arg(long, value_parser = parse::channel_source)]
    channel: ChannelSource,
    /// Decode order of 1-based slots; defaults to 1,2,...,k.
    #[arg(long)]
    order: Option<String>,
    /// Stage-1 POVM: `povm:FILE`, `pgm` or `builtin`.
    #[arg(long)]
    stage1: Option<String>,
    #[arg(long)]
    stage2: Option<String>,
    #[arg(long)]
    stage3: Option<String>,
    /// Expected number of senders; must match the channel.
    #[arg(long)]
    k: Option<usize>,
    #[arg(long, default_value_t = 1e-4)]
    tolerance: f64,
    #[arg(long, default_value_t = 8)]
    grid: usize,
    #[arg(long, default_value_t = 24)]
    rounds: usize,
    #[arg(long, default_value_t = 5_000_000)]
    max_evals: usize,
    #[arg(long, value_enum, default_value_t = PostFormArg::Derivation)]
    post_form: PostFormArg,
    #[arg(long, value_enum, default_value_t = Format::Table)]
    format: Format,
}

#[derive(Args)]
struct SymArgs {
    #[arg(long, value_parser = parse::channel_source)]
    channel: ChannelSource,
    /// Legitimate sender (1-based).
    #[arg(long, default_value_t = 1)]
    honest: usize,
    /// Jamming sender (1-based).
    #[arg(long, default_value_t = 2)]
    jammer: usize,
    #[arg(long)]
    freeze: Vec<String>,
    /// Random candidates tried by the orthogonal witness search.
    #[arg(long, default_value_t = 2000)]
    budget: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = Format::Table)]
    format: Format,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum CodeKind {
    /// The example's own code when the channel is `builtin:example` and n = 1, random otherwise.
    Auto,
    Example,
    /// Random codewords with random permutations, decoded by the PGM.
    Random,
}

#[derive(Args)]
struct SimArgs {
    #[arg(long, value_parser = parse::channel_source, default_value = "builtin:example")]
    channel: ChannelSource,
    #[arg(long)]
    order: Option<String>,
    /// `SLOT:honest[:P,...]`, `SLOT:fixed:S-S-...` or `SLOT:worst[:BUDGET]`.
    #[arg(long)]
    adversary: Option<String>,
    #[arg(long, default_value_t = 10_000)]
    trials: usize,
    /// Block length.
    #[arg(long, default_value_t = 1)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = CodeKind::Auto)]
    code: CodeKind,
    /// Also write one JSON transcript per trial to this file.
    #[arg(long)]
    transcripts: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Table)]
    format: Format,
}

#[derive(Clone, Copy, ValueEnum)]
enum FixtureKind {
    Example,
    Factorized,
}

#[derive(Args)]
struct FixtureArgs {
    #[arg(value_enum)]
    kind: FixtureKind,
    /// Alphabet sizes for the factorized fixture.
    #[arg(long, default_value = "2,3,2")]
    alphabets: String,
    #[arg(long)]
    out: PathBuf,
}

fn main() -> ExitCode {
    if let Some(n) = std::env::var("BYZMAC_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        // ignore failure: the pool can only be configured once per process
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
    let cli = Cli::parse();
    let result = match cli.command {
        Command::DemoExample { format, seed: _ } => demo(format),
        Command::Entropy(a) => entropy(&a, false),
        Command::Holevo(a) => entropy(&a, true),
        Command::Region(a) => region(&a),
        Command::Symcheck(a) => symcheck(&a),
        Command::Simulate(a) => simulate(&a),
        Command::Fixture(a) => fixture(&a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Failure(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
        Err(CliError::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
    }
}

fn no_csv(format: Format) -> CliResult {
    if format == Format::Csv {
        return Err(CliError::Usage("csv output is only available for simulate".into()));
    }
    Ok(())
}

fn print_json(v: &Value) {
    println!("{}", serde_json::to_string_pretty(v).expect("json values serialize"));
}

fn one_based(slot: Option<usize>) -> Value {
    slot.map_or(Value::Null, |s| json!(s + 1))
}

fn order_label(order: &[usize]) -> String {
    order.iter().map(|s| (s + 1).to_string()).collect::<Vec<_>>().join("->")
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or("-".into(), |x| format!("{x:.12}"))
}

// ---------------------------------------------------------------------------

fn demo(format: Format) -> CliResult {
    no_csv(format)?;
    let report = example_demo()?;
    if format == Format::Json {
        let rows: Vec<Value> = report
            .rows
            .iter()
            .map(|r| {
                json!({
                    "case": r.case,
                    "order": r.decode_order.iter().map(|s| s + 1).collect::<Vec<_>>(),
                    "adversary": one_based(r.adversary),
                    "adversary_symbol": r.adversary_symbol,
                    "errors": r.errors,
                    "expected": r.expected,
                    "pass": r.pass,
                })
            })
            .collect();
        print_json(&json!({
            "rows": rows,
            "case_2c_stage_distributions": report.case_2c_stage_distributions,
            "all_pass": report.all_pass,
        }));
    } else {
        println!("{:<5} {:<6} {:<9} {:<7} {:<15} {:<15} {}", "case", "order", "adversary", "symbol", "err sender 1", "err sender 2", "pass");
        for r in &report.rows {
            println!(
                "{:<5} {:<6} {:<9} {:<7} {:<15} {:<15} {}",
                r.case,
                order_label(&r.decode_order),
                r.adversary.map_or("-".into(), |s| (s + 1).to_string()),
                r.adversary_symbol.map_or("-".into(), |s| s.to_string()),
                fmt_opt(r.errors[0]),
                fmt_opt(r.errors[1]),
                if r.pass { "ok" } else { "FAIL" }
            );
        }
        let dists: Vec<String> = report
            .case_2c_stage_distributions
            .iter()
            .enumerate()
            .map(|(i, d)| format!("stage {}: ({})", i + 1, d.iter().map(|p| format!("{p:.12}")).collect::<Vec<_>>().join(", ")))
            .collect();
        println!("case 2c outcome distributions, sender 1 sends message 0: {}", dists.join("; "));
    }
    if report.all_pass {
        Ok(())
    } else {
        Err(CliError::Failure("example values do not match".into()))
    }
}

/// Single-sender channel of `slot` with every other slot frozen.
fn single_sender(ch: &CqMacChannel, slot: usize, freezes: &[String]) -> CliResult<byzmac::CqChannel> {
    let frozen = freezes.iter().map(|f| parse::freeze(f)).collect::<CliResult<Vec<_>>>()?;
    for s in 0..ch.k() {
        if s != slot && !frozen.iter().any(|(f, _)| *f == s) {
            return Err(CliError::Usage(format!("slot {} must be frozen with --freeze", s + 1)));
        }
    }
    Ok(ch.reduce(&[slot], &frozen)?.as_single_sender()?)
}

fn entropy(a: &EntropyArgs, holevo_only: bool) -> CliResult {
    no_csv(a.format)?;
    let ch = a.channel.load()?;
    let slot = parse::slot(a.slot)?;
    if slot >= ch.k() {
        return Err(CliError::Usage(format!("slot {} out of range for a {}-sender channel", a.slot, ch.k())));
    }
    let single = single_sender(&ch, slot, &a.freeze)?;
    let p = parse::distribution(&a.dist)?;
    let chi = holevo(&p, &single)?;
    if holevo_only {
        match a.format {
            Format::Json => print_json(&json!({ "slot": a.slot, "holevo": chi })),
            _ => println!("holevo {chi:.12}"),
        }
        return Ok(());
    }
    let s_avg = von_neumann_entropy(&average_output(&p, &single)?)?;
    let s_cond = conditional_entropy(&single, &p)?;
    let info = mutual_info(&p, &single)?;
    match a.format {
        Format::Json => print_json(&json!({
            "slot": a.slot,
            "average_output_entropy": s_avg,
            "conditional_entropy": s_cond,
            "holevo": chi,
            "mutual_info": info,
        })),
        _ => {
            println!("average output entropy {s_avg:.12}");
            println!("conditional entropy    {s_cond:.12}");
            println!("holevo                 {chi:.12}");
            println!("mutual information     {info:.12}");
        }
    }
    Ok(())
}

/// POVM for decode stage `stage` (0-based) measuring `slot`.
fn stage_povm(ch: &CqMacChannel, source: &ChannelSource, choice: Option<&str>, slot: usize) -> CliResult<Povm> {
    let builtin = || -> CliResult<Povm> {
        match source {
            ChannelSource::Example => {
                let (d1, d2) = example_povms();
                Ok(if slot == 0 { d1 } else { d2 })
            }
            ChannelSource::Factorized(sizes) => Ok(factorized_local_povm(sizes, slot)),
            ChannelSource::File(_) => Err(CliError::Usage("builtin stage POVMs need a builtin channel".into())),
        }
    };
    match choice {
        None => match source {
            ChannelSource::File(_) => Ok(pgm_stage_povm(ch, slot)?),
            _ => builtin(),
        },
        Some("pgm") => Ok(pgm_stage_povm(ch, slot)?),
        Some("builtin") => builtin(),
        Some(s) => match s.strip_prefix("povm:") {
            Some(path) => load_povm(path).map_err(|e| CliError::Usage(format!("{path}: {e}"))),
            None => Err(CliError::Usage(format!("bad stage POVM `{s}` (expected povm:FILE, pgm or builtin)"))),
        },
    }
}

fn default_order(k: usize) -> Vec<usize> {
    (0..k).collect()
}

fn region(a: &RegionArgs) -> CliResult {
    no_csv(a.format)?;
    let ch = a.channel.load()?;
    let k = ch.k();
    if let Some(want) = a.k {
        if want != k {
            return Err(CliError::Usage(format!("--k {want} but the channel has {k} senders")));
        }
    }
    let order = match &a.order {
        Some(o) => parse::order(o)?,
        None => default_order(k),
    };
    if order.len() != k || order.iter().any(|&s| s >= k) {
        return Err(CliError::Usage(format!("decode order must list each of the {k} slots once")));
    }
    let specs = [a.stage1.as_deref(), a.stage2.as_deref(), a.stage3.as_deref()];
    let stages: Vec<Povm> = (0..k - 1)
        .map(|i| stage_povm(&ch, &a.channel, specs.get(i).copied().flatten(), order[i]))
        .collect::<CliResult<_>>()?;
    let cfg = OptimizerConfig { grid_resolution: a.grid, refinement_rounds: a.rounds, tolerance: a.tolerance, max_evals: a.max_evals };
    let opts = RegionOptions {
        post_form: match a.post_form {
            PostFormArg::Derivation => PostForm::Derivation,
            PostFormArg::Statement => PostForm::Statement,
        },
        honest: None,
    };
    let result = match k {
        2 => region_2user(&ch, &order, &stages[0], &cfg),
        3 => region_3user(&ch, &order, &stages, &opts, &cfg),
        _ => region_kuser(&ch, &order, &stages, &opts, &cfg),
    };
    let region = result?;
    print_region(&region, a.format);
    Ok(())
}

fn print_region(r: &RateRegion, format: Format) {
    if format == Format::Json {
        let senders: Vec<Value> = r
            .senders
            .iter()
            .map(|s| {
                json!({
                    "slot": s.slot + 1,
                    "rate": s.rate,
                    "adversary": s.adversary + 1,
                    "p": s.p,
                    "q": s.q,
                    "gap": s.gap,
                    "evals": s.evals,
                    "candidates": s.candidates.iter().map(|(j, v)| json!({"adversary": j + 1, "rate": v})).collect::<Vec<_>>(),
                })
            })
            .collect();
        print_json(&json!({
            "order": r.decode_order.iter().map(|s| s + 1).collect::<Vec<_>>(),
            "senders": senders,
            "grid_resolution": r.grid_resolution,
            "refinement_rounds": r.refinement_rounds,
            "tolerance": r.tolerance,
        }));
        return;
    }
    println!("decode order {}", order_label(&r.decode_order));
    println!("{:<7} {:<10} {:<10} {:<9} {}", "sender", "rate", "adversary", "gap", "p*");
    for s in &r.senders {
        let p: Vec<String> = s.p.probs().iter().map(|v| format!("{v:.4}")).collect();
        println!("R{:<6} {:<10.6} {:<10} {:<9.1e} ({})", s.slot + 1, s.rate, s.adversary + 1, s.gap, p.join(", "));
    }
}

fn symcheck(a: &SymArgs) -> CliResult {
    no_csv(a.format)?;
    let ch = a.channel.load()?;
    let honest = parse::slot(a.honest)?;
    let jammer = parse::slot(a.jammer)?;
    let frozen = a.freeze.iter().map(|f| parse::freeze(f)).collect::<CliResult<Vec<_>>>()?;
    for s in 0..ch.k() {
        if s != honest && s != jammer && !frozen.iter().any(|(f, _)| *f == s) {
            return Err(CliError::Usage(format!("slot {} must be frozen with --freeze", s + 1)));
        }
    }
    let view = ch.avc_view(honest, jammer, &frozen)?;
    let sym = check_symmetrizable(&view);
    let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
    let ortho = check_orthogonally_symmetrizable(&view, a.budget, &mut rng);
    if a.format == Format::Json {
        let sym_json = match &sym {
            SymVerdict::Symmetrizable(w) => json!({"verdict": "Symmetrizable", "slack": w.slack, "tau": w.tau}),
            SymVerdict::NotSymmetrizable { slack } => json!({"verdict": "NotSymmetrizable", "slack": slack}),
        };
        let ortho_json = match &ortho {
            OrthoVerdict::Witness { tau, min_overlap } => json!({"verdict": "Witness", "min_overlap": min_overlap, "tau": tau}),
            OrthoVerdict::CertifiedNot { pair } => json!({"verdict": "CertifiedNot", "pair": [pair.0, pair.1]}),
            OrthoVerdict::Unknown { best_min_overlap } => json!({"verdict": "Unknown", "best_min_overlap": best_min_overlap}),
        };
        print_json(&json!({
            "honest": a.honest,
            "jammer": a.jammer,
            "symmetrizable": sym_json,
            "orthogonal": ortho_json,
        }));
        return Ok(());
    }
    let tau_rows = |tau: &[Vec<f64>]| {
        for (x, row) in tau.iter().enumerate() {
            let r: Vec<String> = row.iter().map(|v| format!("{v:.6}")).collect();
            println!("  tau(.|{x}) = ({})", r.join(", "));
        }
    };
    match &sym {
        SymVerdict::Symmetrizable(w) => {
            println!("symmetrizability: Symmetrizable (slack {:.3e})", w.slack);
            tau_rows(&w.tau);
        }
        SymVerdict::NotSymmetrizable { slack } => println!("symmetrizability: NotSymmetrizable (slack {slack:.6})"),
    }
    match &ortho {
        OrthoVerdict::Witness { tau, min_overlap } => {
            println!("orthogonal symmetrizability: Witness (min overlap {min_overlap:.6})");
            tau_rows(tau);
        }
        OrthoVerdict::CertifiedNot { pair } => {
            println!("orthogonal symmetrizability: CertifiedNot (inputs {} and {} never overlap)", pair.0, pair.1)
        }
        OrthoVerdict::Unknown { best_min_overlap } => {
            println!("orthogonal symmetrizability: Unknown (best min overlap {best_min_overlap:.3e})")
        }
    }
    Ok(())
}

/// Random codewords and permutations per sender, decoded by the PGM. Each
/// sender gets as many messages as input symbols.
fn random_codes(ch: &CqMacChannel, n: usize, seed: u64) -> CliResult<Vec<RandomCode>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..ch.k())
        .map(|slot| {
            let a = ch.alphabet_sizes()[slot];
            let messages = a.max(2);
            let words: Vec<Vec<usize>> = (0..messages).map(|_| (0..n).map(|_| rng.random_range(0..a)).collect()).collect();
            let perms: Vec<Vec<usize>> = (0..messages)
                .map(|_| {
                    let mut p: Vec<usize> = (0..n).collect();
                    p.shuffle(&mut rng);
                    p
                })
                .collect();
            Ok(RandomCode::with_pgm(ch, slot, words, perms)?)
        })
        .collect()
}

fn simulate(a: &SimArgs) -> CliResult {
    if a.trials == 0 || a.n == 0 {
        return Err(CliError::Usage("--trials and --n must be positive".into()));
    }
    let ch = a.channel.load()?;
    let k = ch.k();
    let order = match &a.order {
        Some(o) => parse::order(o)?,
        None => default_order(k),
    };
    let use_example = match a.code {
        CodeKind::Example => {
            if a.channel != ChannelSource::Example || a.n != 1 {
                return Err(CliError::Usage("--code example needs builtin:example and --n 1".into()));
            }
            true
        }
        CodeKind::Auto => a.channel == ChannelSource::Example && a.n == 1,
        CodeKind::Random => false,
    };
    let codes = if use_example {
        example_setup(default_order(2), None)?.codes().to_vec()
    } else {
        random_codes(&ch, a.n, a.seed)?
    };
    let adversary = a
        .adversary
        .as_deref()
        .map(|s| parse::adversary(s, |slot| codes.get(slot).map(RandomCode::messages)))
        .transpose()?;
    let setup = SimSetup::new(&ch, codes, order, adversary)?;
    let report = error_probability(&setup, a.trials, a.seed)?;
    if let Some(path) = &a.transcripts {
        let fixed;
        let resolved = match report.strategy.strip_prefix("fixed:") {
            // a worst-case adversary was resolved to this sequence
            Some(seq) if !matches!(setup.adversary(), Some((_, byzmac::simulator::AdversaryStrategy::FixedSequence(_)))) => {
                let seq = seq.split('-').map(|t| t.parse().expect("label symbols are integers")).collect();
                let slot = report.adversary.expect("fixed strategy has a slot");
                fixed = setup.with_adversary(Some((slot, byzmac::simulator::AdversaryStrategy::FixedSequence(seq))))?;
                &fixed
            }
            _ => &setup,
        };
        let text = transcripts_jsonl(&transcripts(resolved, a.trials, a.seed)?);
        std::fs::write(path, text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    }
    print_report(&report, a.format);
    Ok(())
}

fn print_report(r: &ErrorReport, format: Format) {
    match format {
        Format::Csv => print!("{}", summary_csv(std::slice::from_ref(r))),
        Format::Json => {
            let senders: Vec<Value> = r
                .senders
                .iter()
                .map(|s| {
                    json!({
                        "sender": s.slot + 1,
                        "err_exact": s.exact,
                        "err_mc": s.mc,
                        "ci_low": s.ci_low,
                        "ci_high": s.ci_high,
                        "failures": s.failures,
                    })
                })
                .collect();
            print_json(&json!({
                "order": r.decode_order.iter().map(|s| s + 1).collect::<Vec<_>>(),
                "adversary_slot": one_based(r.adversary),
                "strategy": r.strategy,
                "trials": r.trials,
                "seed": r.seed,
                "senders": senders,
            }));
        }
        Format::Table => {
            println!(
                "order {}, adversary {}, strategy {}, {} trials, seed {}",
                order_label(&r.decode_order),
                r.adversary.map_or("none".into(), |s| (s + 1).to_string()),
                r.strategy,
                r.trials,
                r.seed
            );
            println!("{:<7} {:<15} {:<10} {}", "sender", "exact", "mc", "95% interval");
            for s in &r.senders {
                println!("{:<7} {:<15} {:<10.6} [{:.6}, {:.6}]", s.slot + 1, fmt_opt(s.exact), s.mc, s.ci_low, s.ci_high);
            }
        }
    }
}

fn fixture(a: &FixtureArgs) -> CliResult {
    std::fs::create_dir_all(&a.out).map_err(|e| CliError::Usage(format!("{}: {e}", a.out.display())))?;
    let write_err = |e: byzmac::Error| CliError::Usage(e.to_string());
    match a.kind {
        FixtureKind::Example => {
            let (d1, d2) = example_povms();
            save_channel(&byzmac::cq_channel::example_channel(), a.out.join("example.json")).map_err(write_err)?;
            save_povm(&d1, a.out.join("d1.json")).map_err(write_err)?;
            save_povm(&d2, a.out.join("d2.json")).map_err(write_err)?;
        }
        FixtureKind::Factorized => {
            let sizes = parse::usize_list(&a.alphabets).map_err(CliError::Usage)?;
            if sizes.is_empty() || sizes.contains(&0) {
                return Err(CliError::Usage("factorized alphabets must be positive".into()));
            }
            save_channel(&byzmac::cq_channel::factorized_channel(&sizes), a.out.join("factorized.json")).map_err(write_err)?;
            for slot in 0..sizes.len() {
                save_povm(&factorized_local_povm(&sizes, slot), a.out.join(format!("local{}.json", slot + 1))).map_err(write_err)?;
            }
        }
    }
    println!("wrote fixture to {}", a.out.display());
    Ok(())
}

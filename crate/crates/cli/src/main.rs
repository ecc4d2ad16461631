//! Command-line front end for the gadget pipeline: evaluate counting
//! instances, solve their difference equations, sample the smooth gadgets,
//! run the verification suite, and inspect the supporting pieces.
//!
//! Exit codes: 0 on success, 1 when a requested check fails, 2 on usage
//! errors (bad flags, unreadable or malformed input). Data goes to stdout;
//! progress and configuration notes go to stderr.

use std::fs;
use std::io::{Read as _, Write as _};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{anyhow, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};

use odegadget_core::bump::BumpFunction;
use odegadget_core::diffeq::{build_gadget, normalize, solve, BitLayout};
use odegadget_core::dyadic::Dyadic;
use odegadget_core::finalvalue::{
    build_final_value, canonical_reduction, decode_tally, DEFAULT_HORIZON, MAX_HORIZON,
};
use odegadget_core::formula::{instance_truth, parse_instance, CountingInstance};
use odegadget_core::gadget::{GadgetInstance, Mode};
use odegadget_core::glue::{self, GlueCorpus};
use odegadget_core::name::RealName;
use odegadget_core::verify::{run_suite, standard_corpus, Check, Status, SuiteOptions};

/// Marker for failures that should exit with the usage code.
#[derive(Debug)]
struct UsageError;

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("usage error")
    }
}

impl std::error::Error for UsageError {}

fn usage<T>(msg: impl Into<String>) -> Result<T> {
    Err(anyhow!(UsageError).context(msg.into()))
}

#[derive(Parser)]
#[command(
    name = "odegadget",
    version,
    about = "Build, sample, and verify smooth ODE gadgets compiled from counting formulas"
)]
struct Cli {
    /// Print the effective configuration to stderr before running.
    #[arg(long, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate an instance by brute-force model counting.
    Eval(EvalArgs),
    /// Compile an instance to a difference equation and solve the grid.
    Solve(SolveArgs),
    /// Sample the smooth right-hand side and solution of one instance.
    Gadget(GadgetArgs),
    /// Run the verification suite and emit a JSON-lines report.
    Verify(VerifyArgs),
    /// Recover an instance's truth value through the glued solution.
    Reduce(ReduceArgs),
    /// Encode a tally prefix as a final value; optionally decode one bit.
    FinalValue(FinalValueArgs),
    /// Inspect the certified bump function.
    Bump(BumpArgs),
    /// Print, write, or cross-check the standard corpus.
    Corpus(CorpusArgs),
}

#[derive(clap::Args)]
struct EvalArgs {
    /// Instance file, or `-` for stdin.
    file: String,
    /// Print the canonical serialization instead of the truth value.
    #[arg(long)]
    canon: bool,
}

#[derive(clap::Args)]
struct SolveArgs {
    /// Instance file, or `-` for stdin.
    file: String,
    /// Dump the whole grid as CSV (`row,v0,v1,...`) instead of the output.
    #[arg(long)]
    dump: bool,
    /// Solve the raw equation instead of the normalized one.
    #[arg(long)]
    raw: bool,
    /// Write data here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    /// Full certified parameters.
    Faithful,
    /// Shrunk scales for readable output; voids every certified bound.
    Toy,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Mode {
        match m {
            ModeArg::Faithful => Mode::Faithful,
            ModeArg::Toy => Mode::Toy,
        }
    }
}

#[derive(clap::Args)]
struct GadgetArgs {
    /// Instance file, or `-` for stdin.
    file: String,
    /// Sample count per unit interval; must be a power of two.
    #[arg(long, env = "ODEGADGET_POINTS", default_value_t = 16)]
    points: u64,
    /// Evaluation precision in bits (default: output scale plus slack).
    #[arg(long, env = "ODEGADGET_PRECISION")]
    precision: Option<i64>,
    /// Smoothness degree.
    #[arg(long, env = "ODEGADGET_K", default_value_t = 1)]
    k: u32,
    #[arg(long, env = "ODEGADGET_MODE", value_enum, default_value_t = ModeArg::Faithful)]
    mode: ModeArg,
    /// Extra derivative column `i,j` (time order, state order); repeatable.
    #[arg(long = "deriv", value_parser = parse_deriv)]
    derivs: Vec<(usize, usize)>,
    /// Print the derived parameters as JSON instead of samples.
    #[arg(long)]
    params: bool,
    /// Write data here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(clap::Args)]
struct VerifyArgs {
    /// Directory of `.cqbf` instance files; defaults to the built-in corpus.
    #[arg(long, env = "ODEGADGET_CORPUS")]
    corpus: Option<PathBuf>,
    /// Comma-separated check names, or `all`.
    #[arg(long, env = "ODEGADGET_CHECKS", default_value = "all")]
    checks: String,
    /// Sample-stream offset.
    #[arg(long, env = "ODEGADGET_SEED", default_value_t = 0)]
    seed: u64,
    /// Residual sample count per base-scale instance.
    #[arg(long, env = "ODEGADGET_RESIDUAL_POINTS", default_value_t = 256)]
    residual_points: u32,
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(clap::Args)]
struct ReduceArgs {
    /// Instance file, or `-` for stdin.
    file: String,
    /// Smoothness degree.
    #[arg(long, env = "ODEGADGET_K", default_value_t = 1)]
    k: u32,
    /// Also brute-force the instance and fail on disagreement.
    #[arg(long)]
    check: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum TallyArg {
    /// Nothing is in the language.
    Zeros,
    /// Everything is in the language.
    Ones,
    /// The even levels.
    Even,
    /// Levels 2, 3, 5, 7.
    Prime,
}

impl TallyArg {
    fn function(self) -> Arc<dyn Fn(usize) -> bool + Send + Sync> {
        match self {
            TallyArg::Zeros => Arc::new(|_| false),
            TallyArg::Ones => Arc::new(|_| true),
            TallyArg::Even => Arc::new(|n| n % 2 == 0),
            TallyArg::Prime => Arc::new(|n| [2usize, 3, 5, 7].contains(&n)),
        }
    }
}

#[derive(clap::Args)]
struct FinalValueArgs {
    #[arg(long, value_enum, default_value_t = TallyArg::Prime)]
    tally: TallyArg,
    /// Series length; each level compiles and solves one instance.
    #[arg(long, default_value_t = DEFAULT_HORIZON)]
    horizon: usize,
    /// Smoothness degree.
    #[arg(long, env = "ODEGADGET_K", default_value_t = 1)]
    k: u32,
    /// Decode this bit from the encoded value and print it.
    #[arg(long)]
    decode: Option<usize>,
}

#[derive(clap::Args)]
struct BumpArgs {
    /// Derivative order to sample.
    #[arg(long, default_value_t = 0)]
    order: usize,
    /// Sample count; must be a power of two.
    #[arg(long, env = "ODEGADGET_POINTS", default_value_t = 16)]
    points: u64,
    /// Evaluation precision in bits.
    #[arg(long, env = "ODEGADGET_BITS", default_value_t = 64)]
    bits: i64,
    /// Print the certified sup-exponent table as JSON instead of samples.
    #[arg(long)]
    table: bool,
}

#[derive(clap::Args)]
struct CorpusArgs {
    /// Write the standard corpus as `.cqbf` files into this directory.
    #[arg(long)]
    write_to: Option<PathBuf>,
    /// Check that this directory matches the standard corpus exactly.
    #[arg(long)]
    check: Option<PathBuf>,
}

fn parse_deriv(s: &str) -> std::result::Result<(usize, usize), String> {
    let (a, b) = s
        .split_once(',')
        .ok_or_else(|| "expected `i,j` with two derivative orders".to_string())?;
    let i = a.trim().parse().map_err(|_| format!("bad time order `{a}`"))?;
    let j = b.trim().parse().map_err(|_| format!("bad state order `{b}`"))?;
    Ok((i, j))
}

fn main() {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => std::process::exit(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            let code = if e.chain().any(|c| c.is::<UsageError>()) { 2 } else { 1 };
            std::process::exit(code);
        }
    }
}

fn run(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Eval(a) => cmd_eval(a, cli.verbose),
        Command::Solve(a) => cmd_solve(a, cli.verbose),
        Command::Gadget(a) => cmd_gadget(a, cli.verbose),
        Command::Verify(a) => cmd_verify(a, cli.verbose),
        Command::Reduce(a) => cmd_reduce(a, cli.verbose),
        Command::FinalValue(a) => cmd_final_value(a, cli.verbose),
        Command::Bump(a) => cmd_bump(a, cli.verbose),
        Command::Corpus(a) => cmd_corpus(a, cli.verbose),
    }
}

// ---------------------------------------------------------------------------
// Shared plumbing
// ---------------------------------------------------------------------------

fn read_instance(file: &str) -> Result<CountingInstance> {
    let text = if file == "-" {
        let mut buf = String::new();
        std::io::stdin()
            .read_to_string(&mut buf)
            .context("reading stdin")
            .or_else(|e| usage(format!("{e:#}")))?;
        buf
    } else {
        match fs::read_to_string(file) {
            Ok(t) => t,
            Err(e) => return usage(format!("cannot read {file}: {e}")),
        }
    };
    match parse_instance(&text) {
        Ok(inst) => Ok(inst),
        Err(e) => usage(format!("{file}: {e}")),
    }
}

fn emit(out: &Option<PathBuf>, data: &str) -> Result<()> {
    match out {
        Some(path) => fs::write(path, data).with_context(|| format!("writing {}", path.display())),
        None => {
            std::io::stdout().write_all(data.as_bytes())?;
            Ok(())
        }
    }
}

fn canonical_bump() -> Result<Arc<BumpFunction>> {
    Ok(Arc::new(BumpFunction::with_table(8)?))
}

fn build_instance(inst: &CountingInstance, k: u32, mode: Mode) -> Result<GadgetInstance> {
    let bump = canonical_bump()?;
    Ok(GadgetInstance::build(inst, bump, k, mode)?)
}

fn power_of_two(points: u64, what: &str) -> Result<u32> {
    if points == 0 || !points.is_power_of_two() {
        return usage(format!("--{what} must be a positive power of two, got {points}"));
    }
    Ok(points.trailing_zeros())
}

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

fn cmd_eval(a: EvalArgs, verbose: bool) -> Result<i32> {
    if verbose {
        eprintln!("config file={}", a.file);
    }
    let inst = read_instance(&a.file)?;
    if a.canon {
        print!("{}", inst.serialize());
    } else {
        println!("{}", instance_truth(&inst)?);
    }
    Ok(0)
}

fn cmd_solve(a: SolveArgs, verbose: bool) -> Result<i32> {
    let inst = read_instance(&a.file)?;
    let raw = build_gadget(&inst, BitLayout::PinnedSpareBit)?;
    let (eq, label) = if a.raw {
        (raw.eq.clone(), "raw")
    } else {
        (normalize(&raw)?.eq, "normalized")
    };
    if verbose {
        eprintln!(
            "config file={} form={label} rows={} cols={} dump={}",
            a.file,
            eq.height + 1,
            eq.width + 1,
            a.dump
        );
    }
    let grid = solve(&eq)?;
    if a.dump {
        let mut csv = String::new();
        for (i, row) in grid.rows.iter().enumerate() {
            csv.push_str(&i.to_string());
            for v in row {
                csv.push(',');
                csv.push_str(&v.to_string());
            }
            csv.push('\n');
        }
        emit(&a.out, &csv)?;
    } else {
        emit(&a.out, &format!("{}\n", grid.output()))?;
    }
    Ok(0)
}

fn cmd_gadget(a: GadgetArgs, verbose: bool) -> Result<i32> {
    let inst = read_instance(&a.file)?;
    let exp = power_of_two(a.points, "points")? as i64;
    let gi = build_instance(&inst, a.k, a.mode.into())?;
    let pr = gi.params();
    let precision = a.precision.unwrap_or(pr.rho + pr.q as i64 + 64);
    if verbose {
        eprintln!(
            "config file={} points={} precision={precision} k={} mode={:?} be={} rho={}",
            a.file, a.points, pr.k, pr.mode, pr.be, pr.rho
        );
    }
    if a.params {
        let json = serde_json::to_string_pretty(pr)?;
        emit(&a.out, &format!("{json}\n"))?;
        return Ok(0);
    }
    for &(i, jy) in &a.derivs {
        if i > 4 || jy > pr.k as usize {
            return usage(format!(
                "derivative ({i},{jy}) outside the certified range (time <= 4, state <= k = {})",
                pr.k
            ));
        }
    }
    let mut csv = String::from("t,h,g");
    for (i, jy) in &a.derivs {
        csv.push_str(&format!(",d{i}_{jy}"));
    }
    csv.push('\n');
    for j in 0..=a.points {
        let t = Dyadic::new(j.into(), -exp);
        let h = gi.h_eval(&t, precision)?;
        let g = gi.g_eval(&t, &h, precision)?;
        csv.push_str(&format!("{t},{h},{g}"));
        for &(i, jy) in &a.derivs {
            let d = gi.deriv_g_enclosure(i, jy, &t, &h, precision)?.mid_round(precision);
            csv.push_str(&format!(",{d}"));
        }
        csv.push('\n');
    }
    emit(&a.out, &csv)?;
    Ok(0)
}

fn parse_checks(spec: &str) -> Result<Vec<Check>> {
    if spec.trim() == "all" {
        return Ok(Check::ALL.to_vec());
    }
    let mut out = Vec::new();
    for part in spec.split(',') {
        let name = part.trim();
        if name.is_empty() {
            continue;
        }
        match Check::parse(name) {
            Some(c) => out.push(c),
            None => {
                let known: Vec<&str> = Check::ALL.iter().map(|c| c.name()).collect();
                return usage(format!(
                    "unknown check `{name}`; known checks: {}",
                    known.join(", ")
                ));
            }
        }
    }
    if out.is_empty() {
        return usage("no checks requested");
    }
    Ok(out)
}

fn load_corpus(dir: &Path) -> Result<Vec<CountingInstance>> {
    let mut paths: Vec<PathBuf> = match fs::read_dir(dir) {
        Ok(rd) => rd
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "cqbf"))
            .collect(),
        Err(e) => return usage(format!("cannot read corpus {}: {e}", dir.display())),
    };
    paths.sort();
    if paths.is_empty() {
        return usage(format!("no .cqbf files in {}", dir.display()));
    }
    let mut corpus = Vec::with_capacity(paths.len());
    for p in paths {
        let text = fs::read_to_string(&p).with_context(|| format!("reading {}", p.display()))?;
        match parse_instance(&text) {
            Ok(inst) => corpus.push(inst),
            Err(e) => return usage(format!("{}: {e}", p.display())),
        }
    }
    Ok(corpus)
}

fn cmd_verify(a: VerifyArgs, verbose: bool) -> Result<i32> {
    let checks = parse_checks(&a.checks)?;
    let corpus = match &a.corpus {
        Some(dir) => load_corpus(dir)?,
        None => standard_corpus(),
    };
    if verbose {
        let names: Vec<&str> = checks.iter().map(|c| c.name()).collect();
        eprintln!(
            "config corpus={} instances={} checks={} seed={} residual_points={}",
            a.corpus
                .as_ref()
                .map(|p| p.display().to_string())
                .unwrap_or_else(|| "builtin".to_string()),
            corpus.len(),
            names.join(","),
            a.seed,
            a.residual_points
        );
    }
    let opts = SuiteOptions {
        seed: a.seed,
        residual_points: a.residual_points,
        fault: None,
    };
    let report = run_suite(&corpus, &checks, &opts)?;
    emit(&a.out, &report.to_json_lines())?;
    let (pass, fail, err) = (
        report.count(Status::Pass),
        report.count(Status::Fail),
        report.count(Status::Error),
    );
    eprintln!("verdicts {} pass {pass} fail {fail} error {err}", report.verdicts.len());
    Ok(if report.all_pass() { 0 } else { 1 })
}

fn cmd_reduce(a: ReduceArgs, verbose: bool) -> Result<i32> {
    let inst = read_instance(&a.file)?;
    let gi = build_instance(&inst, a.k, Mode::Faithful)?;
    if verbose {
        eprintln!("config file={} k={} rho={}", a.file, a.k, gi.params().rho);
    }
    let bump = canonical_bump()?;
    let corpus = GlueCorpus::new(vec![gi])?;
    let name_of = |t: &Dyadic| -> odegadget_core::Result<RealName> { Ok(corpus.h_name(t)) };
    let got = glue::reduce(&inst, &bump, a.k, &name_of)?;
    println!("{got}");
    if a.check {
        let truth = instance_truth(&inst)?;
        if got != truth {
            eprintln!("reduction disagrees with brute force: reduced {got}, counted {truth}");
            return Ok(1);
        }
    }
    Ok(0)
}

#[derive(serde::Serialize)]
struct FinalValueOut {
    tally: String,
    horizon: usize,
    bits: Vec<bool>,
    exponents: Vec<i64>,
    value: String,
}

fn cmd_final_value(a: FinalValueArgs, verbose: bool) -> Result<i32> {
    if a.horizon == 0 || a.horizon > MAX_HORIZON {
        return usage(format!("--horizon must be between 1 and {MAX_HORIZON}"));
    }
    if verbose {
        eprintln!("config tally={:?} horizon={} k={}", a.tally, a.horizon, a.k);
    }
    let bump = canonical_bump()?;
    let reduction = canonical_reduction(a.tally.function());
    let fv = build_final_value(&reduction, &bump, a.k, a.horizon)?;
    if let Some(n) = a.decode {
        if n >= a.horizon {
            return usage(format!("--decode {n} is beyond the horizon {}", a.horizon));
        }
        let bit = decode_tally(&fv.params, &fv.name(), n)?;
        println!("{bit}");
        return Ok(0);
    }
    let out = FinalValueOut {
        tally: format!("{:?}", a.tally).to_lowercase(),
        horizon: a.horizon,
        bits: fv.bits.clone(),
        exponents: fv.params.exponents.clone(),
        value: fv.value.to_string(),
    };
    println!("{}", serde_json::to_string(&out)?);
    Ok(0)
}

fn cmd_bump(a: BumpArgs, verbose: bool) -> Result<i32> {
    let bump = canonical_bump()?;
    if verbose {
        eprintln!(
            "config order={} points={} bits={} table={}",
            a.order, a.points, a.bits, a.table
        );
    }
    if a.table {
        println!("{}", serde_json::to_string(bump.s_table())?);
        return Ok(0);
    }
    if a.order > bump.max_order() {
        return usage(format!(
            "--order {} beyond the certified table (max {})",
            a.order,
            bump.max_order()
        ));
    }
    let exp = power_of_two(a.points, "points")? as i64;
    let mut csv = String::from("t,value\n");
    for j in 0..=a.points {
        let t = Dyadic::new(j.into(), -exp);
        let v = bump.df_enclosure(a.order, &t, a.bits)?.mid_round(a.bits);
        csv.push_str(&format!("{t},{v}\n"));
    }
    print!("{csv}");
    Ok(0)
}

fn corpus_file_name(idx: usize) -> String {
    format!("i{idx:03}.cqbf")
}

fn cmd_corpus(a: CorpusArgs, verbose: bool) -> Result<i32> {
    let corpus = standard_corpus();
    if verbose {
        eprintln!("config instances={}", corpus.len());
    }
    if let Some(dir) = &a.write_to {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        for (i, inst) in corpus.iter().enumerate() {
            let path = dir.join(corpus_file_name(i));
            fs::write(&path, inst.serialize())
                .with_context(|| format!("writing {}", path.display()))?;
        }
        eprintln!("wrote {} instances to {}", corpus.len(), dir.display());
        return Ok(0);
    }
    if let Some(dir) = &a.check {
        let mut ok = true;
        for (i, inst) in corpus.iter().enumerate() {
            let path = dir.join(corpus_file_name(i));
            match fs::read_to_string(&path) {
                Ok(text) if text == inst.serialize() => {}
                Ok(_) => {
                    eprintln!("{} differs from the standard corpus", path.display());
                    ok = false;
                }
                Err(e) => {
                    eprintln!("{}: {e}", path.display());
                    ok = false;
                }
            }
        }
        let extra = fs::read_dir(dir)
            .map(|rd| {
                rd.filter_map(|e| e.ok())
                    .filter(|e| {
                        let p = e.path();
                        p.extension().is_some_and(|x| x == "cqbf")
                            && !corpus
                                .iter()
                                .enumerate()
                                .any(|(i, _)| p.file_name().is_some_and(|f| f == corpus_file_name(i).as_str()))
                    })
                    .count()
            })
            .unwrap_or(0);
        if extra > 0 {
            eprintln!("{extra} unexpected .cqbf files in {}", dir.display());
            ok = false;
        }
        return Ok(if ok { 0 } else { 1 });
    }
    for (i, inst) in corpus.iter().enumerate() {
        let lens: Vec<String> = inst.block_lens().iter().map(|l| l.to_string()).collect();
        let thresholds: Vec<String> =
            inst.blocks.iter().map(|b| b.threshold.to_string()).collect();
        println!(
            "i{i:03} blocks={} lens={} thresholds={} truth={}",
            inst.n(),
            lens.join("/"),
            thresholds.join("/"),
            instance_truth(inst)?
        );
    }
    Ok(0)
}

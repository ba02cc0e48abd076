//! `brc`: encode, break, decode and verify break-resilient codewords.
//!
//! Exit codes: 0 on success, 1 when decoding fails, 2 on invalid input.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use brc_core::bits::BitString;
use brc_core::channel::{break_at, drop_short, AttackContext, BreakPattern, StrategyRegistry};
use brc_core::encoder::Codec;
use brc_core::format::{
    parse_codeword, parse_fragments, render_codeword, render_fragments, render_pattern, BitsFile,
};
use brc_core::harness::{run_trials, TrialConfig};
use brc_core::legit::sample_legit;
use brc_core::oracle::{confusable, redundancy_lower_bound};
use brc_core::params::Params;
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "brc", version, about = "Break-resilient coding toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Copy)]
struct ParamArgs {
    /// Message length in bits (a power of two).
    #[arg(long)]
    m: u64,
    /// Maximum number of breaks.
    #[arg(long)]
    t: u64,
    /// MU code length multiplier.
    #[arg(long, default_value_t = 3)]
    c: u64,
}

#[derive(Subcommand)]
enum Command {
    /// Encode a random legit message (or --z-file) into a codeword file.
    Encode {
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// File holding the message as one line of m bits.
        #[arg(long)]
        z_file: Option<PathBuf>,
    },
    /// Break a codeword file into a fragment file.
    Break {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, default_value = "uniform")]
        strategy: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Explicit comma-separated cut positions; overrides --strategy.
        #[arg(long, value_delimiter = ',')]
        cuts: Option<Vec<usize>>,
        /// Drop fragments shorter than this many bits.
        #[arg(long)]
        drop_short: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Decode a fragment file into the message.
    Decode {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run seeded encode, break, decode trials and report the success count.
    Verify {
        #[command(flatten)]
        params: ParamArgs,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Strategies used round-robin (comma-separated).
        #[arg(
            long,
            value_delimiter = ',',
            default_value = "uniform,signature-target,marker-target,boundary-target"
        )]
        strategy: Vec<String>,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[arg(long)]
        drop_short: Option<usize>,
    },
    /// Redundancy lower bound in bits for length n and t breaks.
    Bound {
        #[arg(long)]
        n: u64,
        #[arg(long)]
        t: u64,
    },
    /// Whether two short words are t-confusable.
    Confusable {
        #[arg(long)]
        x: String,
        #[arg(long)]
        y: String,
        #[arg(long)]
        t: usize,
    },
    /// List the attack strategies.
    Strategies,
}

enum Failure {
    Decode(String),
    Invalid(String),
}

impl Failure {
    fn invalid(e: impl std::fmt::Display) -> Self {
        Failure::Invalid(e.to_string())
    }
}

type CmdResult = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Encode {
            params,
            seed,
            out,
            z_file,
        } => encode(params, seed, &out, z_file.as_deref()),
        Command::Break {
            input,
            strategy,
            seed,
            cuts,
            drop_short,
            out,
        } => break_cmd(&input, &strategy, seed, cuts, drop_short, &out),
        Command::Decode { input, out } => decode(&input, &out),
        Command::Verify {
            params,
            seed,
            strategy,
            trials,
            drop_short,
        } => verify(params, seed, strategy, trials, drop_short),
        Command::Bound { n, t } => bound(n, t),
        Command::Confusable { x, y, t } => confusable_cmd(&x, &y, t),
        Command::Strategies => {
            let registry = StrategyRegistry::builtins();
            for name in registry.names() {
                let description = registry.get(name).map(|s| s.description()).unwrap_or_default();
                println!("{name}\t{description}");
            }
            Ok(())
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Decode(msg)) => {
            eprintln!("brc: decode failed: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Invalid(msg)) => {
            eprintln!("brc: {msg}");
            ExitCode::from(2)
        }
    }
}

fn derive(p: ParamArgs) -> Result<Params, Failure> {
    Params::derive(p.m, p.t, p.c).map_err(Failure::invalid)
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Invalid(format!("{}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> CmdResult {
    fs::write(path, text).map_err(|e| Failure::Invalid(format!("{}: {e}", path.display())))
}

fn sidecar(path: &Path, ext: &str) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(ext);
    PathBuf::from(s)
}

fn truth_text(params: &Params, z: &BitString) -> String {
    BitsFile {
        params: *params,
        lines: vec![z.clone()],
    }
    .render()
}

fn encode(args: ParamArgs, seed: u64, out: &Path, z_file: Option<&Path>) -> CmdResult {
    let params = derive(args)?;
    let codec = Codec::new(params);
    let z = match z_file {
        Some(path) => {
            let z: BitString = read(path)?.trim().parse().map_err(Failure::invalid)?;
            if z.len() as u64 != params.m {
                return Err(Failure::Invalid(format!("message has {} bits, expected m = {}", z.len(), params.m)));
            }
            z
        }
        None => sample_legit(&params, codec.mu(), seed).map_err(Failure::invalid)?.0,
    };
    let codeword = codec.encode(&z).map_err(Failure::invalid)?;
    write(out, &render_codeword(&params, &codeword))?;
    write(&sidecar(out, ".truth"), &truth_text(&params, &z))
}

fn break_cmd(
    input: &Path,
    strategy: &str,
    seed: u64,
    cuts: Option<Vec<usize>>,
    threshold: Option<usize>,
    out: &Path,
) -> CmdResult {
    let (params, codeword) = parse_codeword(&read(input)?).map_err(Failure::invalid)?;
    let codec = Codec::new(params);
    let pattern = match cuts {
        Some(cuts) => {
            let p = BreakPattern::new(cuts, codeword.len()).map_err(Failure::invalid)?;
            p.check_budget(params.t as usize).map_err(Failure::invalid)?;
            p
        }
        None => {
            let ctx = AttackContext::new(&codeword, &codec);
            StrategyRegistry::builtins()
                .attack(strategy, &ctx, seed)
                .map_err(Failure::invalid)?
        }
    };
    let mut frags = break_at(&codeword, &pattern).map_err(Failure::invalid)?;
    if let Some(threshold) = threshold {
        frags = drop_short(&frags, threshold, params.l()).map_err(Failure::invalid)?;
    }
    write(out, &render_fragments(&params, &frags))?;
    write(&sidecar(out, ".pattern"), &render_pattern(&params, pattern.cuts()))
}

fn decode(input: &Path, out: &Path) -> CmdResult {
    let (params, frags) = parse_fragments(&read(input)?).map_err(Failure::invalid)?;
    let z = Codec::new(params)
        .decode(&frags)
        .map_err(|e| Failure::Decode(e.to_string()))?;
    write(out, &truth_text(&params, &z))
}

fn verify(args: ParamArgs, seed: u64, strategies: Vec<String>, trials: usize, threshold: Option<usize>) -> CmdResult {
    let params = derive(args)?;
    let config = TrialConfig {
        params,
        strategies,
        trials,
        seed,
        drop_short: threshold,
    };
    let summary = run_trials(&config).map_err(Failure::invalid)?;
    println!("{}", params.header());
    println!("{}/{}", summary.successes(), summary.trials());
    let t = summary.times;
    let per = |d: std::time::Duration| d.as_secs_f64() * 1e3 / trials.max(1) as f64;
    println!(
        "mean ms per trial: sample {:.3}, encode {:.3}, break {:.3}, decode {:.3}",
        per(t.sample),
        per(t.encode),
        per(t.channel),
        per(t.decode)
    );
    println!(
        "legit sampling: {} draws, mean {:.3} per message, rejection rate {:.2}%",
        summary.total_attempts(),
        summary.mean_attempts(),
        summary.rejection_rate() * 100.0
    );
    for f in summary.failures() {
        println!(
            "trial {} ({}, cuts [{}]): {}",
            f.trial,
            f.strategy,
            f.pattern,
            f.failure.as_deref().unwrap_or("")
        );
    }
    if summary.successes() == summary.trials() {
        Ok(())
    } else {
        Err(Failure::Decode(format!(
            "{} of {} trials failed",
            summary.trials() - summary.successes(),
            summary.trials()
        )))
    }
}

fn bound(n: u64, t: u64) -> CmdResult {
    if t == 0 || t >= n {
        return Err(Failure::Invalid(format!("need 1 <= t < n, got n = {n}, t = {t}")));
    }
    println!("{:.4}", redundancy_lower_bound(n, t));
    Ok(())
}

fn confusable_cmd(x: &str, y: &str, t: usize) -> CmdResult {
    let x: BitString = x.parse().map_err(Failure::invalid)?;
    let y: BitString = y.parse().map_err(Failure::invalid)?;
    println!("{}", confusable(&x, &y, t).map_err(Failure::invalid)?);
    Ok(())
}

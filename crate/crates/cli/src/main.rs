//! `protorelay` command-line front end.
//!
//! Every flag of a subcommand may also come from a flat `key = value` file
//! given with `--config`; keys are the long flag names without dashes.
//! Flags on the command line take precedence over the file.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{CommandFactory, Parser, Subcommand};
use protorelay::ber_theory::{BerModel, TheoryOptions, BER_THEORY_CSV_HEADER};
use protorelay::channel::Protocol;
use protorelay::harness::config::{load_flat_config, parse_sweep};
use protorelay::harness::validate::{run_suite, ValidateOptions};
use protorelay::harness::{run_experiment, SimConfig};
use protorelay::pexit::{threshold_search, ThresholdOptions, THRESHOLD_CSV_HEADER};
use protorelay::protograph::Family;
use protorelay::Error;

const EXIT_VALIDATION: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_IO: u8 = 3;

#[derive(Debug, Parser)]
#[command(name = "protorelay", version, about = "Protograph LDPC codes over Nakagami-m fading relay channels")]
#[command(args_override_self = true)]
struct Cli {
    /// Flat `key = value` file supplying default flag values.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Decoding thresholds (EF) by fading-averaged PEXIT and bisection.
    Thresholds(ThresholdArgs),
    /// Theoretical BER curves for EF or DF relaying.
    BerTheory(TheoryArgs),
    /// Monte-Carlo BER simulation with a lifted code.
    Simulate(SimulateArgs),
    /// Run the self-check suite; exits with 1 if any check fails.
    Validate(ValidateArgs),
}

#[derive(Debug, clap::Args)]
struct ThresholdArgs {
    /// Code families, comma separated (ar3a, ar4ja).
    #[arg(long, default_value = "ar3a")]
    family: String,
    /// Extension indices, comma separated.
    #[arg(long, default_value = "0")]
    n: String,
    /// Nakagami fading depths, comma separated.
    #[arg(long, default_value = "1")]
    m: String,
    /// Normalized S-R distance.
    #[arg(long, default_value_t = 0.4)]
    d: f64,
    /// Fading realizations per node.
    #[arg(long, default_value_t = 100_000)]
    q: usize,
    /// PEXIT iteration cap per probe.
    #[arg(long, default_value_t = 500)]
    tmaxp: usize,
    /// Final bisection bracket width.
    #[arg(long, default_value_t = 0.01)]
    tol_db: f64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Output CSV path; stdout if omitted.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, clap::Args)]
struct TheoryArgs {
    #[arg(long, default_value = "ef")]
    protocol: String,
    #[arg(long, default_value = "ar3a")]
    family: String,
    #[arg(long, default_value = "3")]
    n: String,
    #[arg(long, default_value = "2")]
    m: String,
    #[arg(long, default_value_t = 0.4)]
    d: f64,
    /// Eb/N0 sweep in dB: start:stop:step, a comma list, or one value.
    #[arg(long, default_value = "0:2:0.1")]
    ebn0: String,
    /// Fixed number of PEXIT iterations.
    #[arg(long, default_value_t = 100)]
    tmax: usize,
    #[arg(long, default_value_t = 100_000)]
    q: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Multiplier on the S-R gains (DF); large values emulate a perfect relay link.
    #[arg(long, default_value_t = 1.0)]
    sr_gain_scale: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, clap::Args)]
struct SimulateArgs {
    #[arg(long, default_value = "ef")]
    protocol: String,
    #[arg(long, default_value = "ar3a")]
    family: String,
    #[arg(long, default_value_t = 3)]
    n: usize,
    /// Lifting factor.
    #[arg(long, default_value_t = 512)]
    z: usize,
    /// Seed of the circulant lifting.
    #[arg(long, default_value_t = 1)]
    lift_seed: u64,
    #[arg(long, default_value_t = 2.0)]
    m: f64,
    #[arg(long, default_value_t = 0.4)]
    d: f64,
    #[arg(long, default_value = "0.5:1.5:0.25")]
    ebn0: String,
    #[arg(long, default_value_t = 100)]
    max_iter: usize,
    #[arg(long, default_value_t = 100)]
    min_error_blocks: u64,
    #[arg(long, default_value_t = 100_000)]
    max_blocks: u64,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Worker threads; 0 uses all cores.
    #[arg(long, default_value_t = 0)]
    workers: usize,
    /// Noiseless S-R link (DF then reproduces EF exactly).
    #[arg(long)]
    genie_sr: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, clap::Args)]
struct ValidateArgs {
    /// Fading realizations for the threshold spot checks.
    #[arg(long, default_value_t = 10_000)]
    q: usize,
    /// Allowed threshold deviation from the reference values.
    #[arg(long, default_value_t = 0.10)]
    tol_db: f64,
    /// Skip the threshold spot checks.
    #[arg(long)]
    skip_thresholds: bool,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

#[derive(Debug)]
enum Failure {
    Usage(String),
    Io(String),
    Validation(usize),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Io { .. } => Failure::Io(e.to_string()),
            other => Failure::Usage(other.to_string()),
        }
    }
}

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().collect();
    let argv = match merge_config(argv) {
        Ok(a) => a,
        Err(f) => return report(f),
    };
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_USAGE) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => report(f),
    }
}

fn report(f: Failure) -> ExitCode {
    match f {
        Failure::Usage(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_USAGE)
        }
        Failure::Io(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(EXIT_IO)
        }
        Failure::Validation(n) => {
            eprintln!("{n} check(s) failed");
            ExitCode::from(EXIT_VALIDATION)
        }
    }
}

/// Splice `--key value` pairs from the `--config` file in right after the
/// subcommand name, so explicit flags that follow override them.
fn merge_config(argv: Vec<String>) -> Result<Vec<String>, Failure> {
    let mut path = None;
    let mut rest = Vec::with_capacity(argv.len());
    let mut it = argv.into_iter();
    while let Some(a) = it.next() {
        if a == "--config" {
            match it.next() {
                Some(p) => path = Some(PathBuf::from(p)),
                None => return Err(Failure::Usage("--config needs a path".into())),
            }
        } else if let Some(p) = a.strip_prefix("--config=") {
            path = Some(PathBuf::from(p));
        } else {
            rest.push(a);
        }
    }
    let Some(path) = path else {
        return Ok(rest);
    };
    let entries = load_flat_config(&path)?;

    let cmd = Cli::command();
    let Some((pos, sub)) = rest
        .iter()
        .enumerate()
        .skip(1)
        .find_map(|(i, a)| cmd.find_subcommand(a).map(|s| (i, s)))
    else {
        return Err(Failure::Usage("--config requires a subcommand".into()));
    };
    let mut injected = Vec::new();
    for (key, value) in entries {
        let arg = sub
            .get_arguments()
            .find(|a| a.get_long() == Some(key.as_str()) && key != "config")
            .ok_or_else(|| {
                Failure::Usage(format!(
                    "{}: unknown key '{key}' for '{}'",
                    path.display(),
                    sub.get_name()
                ))
            })?;
        if arg.get_action().takes_values() {
            injected.push(format!("--{key}={value}"));
        } else {
            match value.to_ascii_lowercase().as_str() {
                "true" | "1" | "yes" => injected.push(format!("--{key}")),
                "false" | "0" | "no" => {}
                _ => return Err(Failure::Usage(format!("{}: '{key}' expects true or false", path.display()))),
            }
        }
    }
    rest.splice(pos + 1..pos + 1, injected);
    Ok(rest)
}

fn parse_list<T: std::str::FromStr>(s: &str, what: &str) -> Result<Vec<T>, Failure> {
    let out: Result<Vec<T>, _> = s.split(',').map(|t| t.trim().parse::<T>()).collect();
    match out {
        Ok(v) if !v.is_empty() => Ok(v),
        _ => Err(Failure::Usage(format!("invalid {what} list '{s}'"))),
    }
}

fn parse_families(s: &str) -> Result<Vec<Family>, Failure> {
    let fams = parse_list::<Family>(s, "family")?;
    if fams.contains(&Family::Custom) {
        return Err(Failure::Usage("only ar3a and ar4ja can be generated".into()));
    }
    Ok(fams)
}

fn open_out(out: &Option<PathBuf>) -> Result<Box<dyn Write>, Failure> {
    Ok(match out {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).map_err(|e| Failure::from(Error::io(p, e)))?,
        )),
        None => Box::new(io::stdout().lock()),
    })
}

fn write_text(w: &mut dyn Write, out: &Option<PathBuf>, text: &str) -> Result<(), Failure> {
    let path: &Path = out.as_deref().unwrap_or(Path::new("<stdout>"));
    w.write_all(text.as_bytes())
        .and_then(|_| w.flush())
        .map_err(|e| Failure::from(Error::io(path, e)))
}

fn run(command: Command) -> Result<(), Failure> {
    match command {
        Command::Thresholds(a) => thresholds(a),
        Command::BerTheory(a) => ber_theory(a),
        Command::Simulate(a) => simulate(a),
        Command::Validate(a) => validate(a),
    }
}

fn thresholds(a: ThresholdArgs) -> Result<(), Failure> {
    let families = parse_families(&a.family)?;
    let ns = parse_list::<usize>(&a.n, "n")?;
    let ms = parse_list::<f64>(&a.m, "m")?;
    let opts = ThresholdOptions {
        q: a.q,
        t_max_p: a.tmaxp,
        tol_db: a.tol_db,
        seed: a.seed,
        ..ThresholdOptions::default()
    };
    let mut w = open_out(&a.out)?;
    write_text(&mut *w, &a.out, &format!("{THRESHOLD_CSV_HEADER}\n"))?;
    for &family in &families {
        for &n in &ns {
            let base = family.build(n).expect("named family");
            for &m in &ms {
                let r = threshold_search(&base, m, a.d, &opts)?;
                write_text(&mut *w, &a.out, &format!("{}\n", r.csv_row()))?;
            }
        }
    }
    Ok(())
}

fn ber_theory(a: TheoryArgs) -> Result<(), Failure> {
    let protocol: Protocol = a.protocol.parse()?;
    let families = parse_families(&a.family)?;
    let ns = parse_list::<usize>(&a.n, "n")?;
    let ms = parse_list::<f64>(&a.m, "m")?;
    let sweep = parse_sweep(&a.ebn0)?;
    let opts = TheoryOptions {
        t_max: a.tmax,
        q: a.q,
        seed: a.seed,
        sr_gain_scale: a.sr_gain_scale,
    };
    let mut w = open_out(&a.out)?;
    write_text(&mut *w, &a.out, &format!("{BER_THEORY_CSV_HEADER}\n"))?;
    for &family in &families {
        for &n in &ns {
            let base = family.build(n).expect("named family");
            for &m in &ms {
                let model = BerModel::new(protocol, &base, m, a.d, &opts)?;
                for &db in &sweep {
                    let p = model.point(db)?;
                    write_text(&mut *w, &a.out, &format!("{}\n", p.csv_row(&base)))?;
                }
            }
        }
    }
    Ok(())
}

fn simulate(a: SimulateArgs) -> Result<(), Failure> {
    let family: Family = a.family.parse()?;
    let config = SimConfig {
        family,
        n: a.n,
        z: a.z,
        lift_seed: a.lift_seed,
        m: a.m,
        d: a.d,
        protocol: a.protocol.parse()?,
        ebn0_db: parse_sweep(&a.ebn0)?,
        max_iter: a.max_iter,
        min_error_blocks: a.min_error_blocks,
        max_blocks: a.max_blocks,
        seed: a.seed,
        workers: a.workers,
        genie_sr: a.genie_sr,
    };
    let exp = run_experiment(&config)?;
    for p in &exp.points {
        eprintln!(
            "Eb/N0 {:>6.2} dB: {} blocks, BER {:.3e}, {:.1} s",
            p.ebn0_db,
            p.blocks,
            p.ber(),
            p.wall_seconds
        );
    }
    let mut w = open_out(&a.out)?;
    write_text(&mut *w, &a.out, &exp.to_csv())
}

fn validate(a: ValidateArgs) -> Result<(), Failure> {
    let opts = ValidateOptions {
        q: a.q,
        threshold_tol_db: a.tol_db,
        skip_thresholds: a.skip_thresholds,
        seed: a.seed,
    };
    let results = run_suite(&opts);
    let mut failed = 0;
    for r in &results {
        println!("[{}] {}: {}", if r.passed { "PASS" } else { "FAIL" }, r.name, r.detail);
        failed += usize::from(!r.passed);
    }
    if failed > 0 {
        return Err(Failure::Validation(failed));
    }
    Ok(())
}

//! `flc`: capacity approximation from finite-letter characterizations.

mod report;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use flc_core::engine::{approximate_capacity, gap_decide, CapacityOptions};
use flc_core::feasibility::{build_feasible_set_structured, Mode};
use flc_core::flc::{
    builtin_dmc, builtin_han_kobayashi, builtin_marton, parse_flc, validate_against_channel, FlcSpec, HkSizes,
};
use flc_core::grid::DEFAULT_GRID_CAP;
use flc_core::pfa::{
    acceptance_prob, bounded_emptiness_search, build_channel_from_pfa, capacity_bounds, gap_constants,
    simulate_two_phase_scheme, Pfa, DEFAULT_SEARCH_CAP, DEFAULT_SEED,
};
use flc_core::rational::{format_rational, parse_rational, to_f64};
use flc_core::region::{region_2user, DEFAULT_FAN};
use flc_core::{ChannelSpec, Error, Nats, Rational};

use report::{digest, InputDigest, RunReport};

const EXIT_PARSE: u8 = 1;
const EXIT_DIMENSION: u8 = 2;
const EXIT_RESOURCE: u8 = 3;
const EXIT_NOT_TWO_RATE: u8 = 4;
const EXIT_RUNTIME: u8 = 5;
const EXIT_USAGE: u8 = 64;

const EXIT_CODES: &str = "\
Exit codes:
  0   success
  1   unreadable file, parse or validation error
  2   FLC and channel dimensions disagree
  3   grid or search exceeds its resource cap
  4   region requested for an FLC without exactly two rate variables
  5   other runtime error
  64  invalid command-line usage";

#[derive(Parser, Debug)]
#[command(name = "flc", version, about = "Capacity approximation from finite-letter characterizations", after_help = EXIT_CODES)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Parse an FLC and a channel and check that they fit together.
    Validate { flc: PathBuf, channel: PathBuf },
    /// Approximate point-to-point capacity to within ±epsilon nats.
    Capacity(CapacityArgs),
    /// Decide capacity ≤ λ/2 versus ≥ λ (the caller promises one holds).
    Gap {
        flc: PathBuf,
        channel: PathBuf,
        #[arg(long, value_parser = positive_f64)]
        lambda: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Two-user rate region on a structured grid.
    #[command(after_help = "CSV columns: R1_nats,R2_nats,grid_index (one row per polygon vertex).")]
    Region(RegionArgs),
    /// Probabilistic finite automata and the channels built from them.
    #[command(subcommand)]
    Pfa(PfaCommand),
    /// Print a built-in FLC as JSON.
    #[command(subcommand)]
    Builtin(BuiltinCommand),
    /// Print a standard channel as JSON.
    #[command(subcommand)]
    Channel(ChannelCommand),
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum ModeArg {
    Structured,
    Generic,
}

#[derive(Args, Debug)]
struct CapacityArgs {
    flc: PathBuf,
    channel: PathBuf,
    /// Target accuracy in nats.
    #[arg(long, value_parser = positive_f64)]
    epsilon: f64,
    /// Defaults to structured when the FLC has a factorization plan.
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
    /// Drop grid points whose feasibility could not be decided.
    #[arg(long)]
    strict_unknowns: bool,
    /// Largest grid the run may visit.
    #[arg(long, default_value_t = DEFAULT_GRID_CAP)]
    cap: u128,
    /// Write the JSON report here.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct RegionArgs {
    flc: PathBuf,
    channel: PathBuf,
    /// Lattice denominator of the free blocks.
    #[arg(long, default_value_t = 20, value_parser = clap::value_parser!(u64).range(1..))]
    grid_m: u64,
    /// Write the vertex point cloud as CSV here.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write the polygon report as JSON here.
    #[arg(long)]
    json: Option<PathBuf>,
    /// Number of support-function directions.
    #[arg(long, default_value_t = DEFAULT_FAN)]
    fan: usize,
    #[arg(long, default_value_t = DEFAULT_GRID_CAP)]
    cap: u128,
}

#[derive(Subcommand, Debug)]
enum PfaCommand {
    /// Exact acceptance probability of a word.
    Accept {
        pfa: PathBuf,
        #[arg(long)]
        string: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Exhaustive search for a word accepted with probability above tau.
    Search {
        pfa: PathBuf,
        #[arg(long)]
        tau: String,
        #[arg(long)]
        max_len: usize,
        #[arg(long, default_value_t = DEFAULT_SEARCH_CAP)]
        cap: u128,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Build the finite-state channel driven by the automaton.
    Channel {
        pfa: PathBuf,
        /// Nats per use in the accept state; the payload has ceil(e^K) symbols.
        #[arg(long, value_parser = positive_f64)]
        k: f64,
        /// Write the channel JSON here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Rate bounds and gap constants.
    Bounds {
        /// Take |Σ| from this automaton.
        #[arg(long)]
        pfa: Option<PathBuf>,
        #[arg(long)]
        k: String,
        #[arg(long)]
        sigma: Option<usize>,
        #[arg(long)]
        delta1: Option<String>,
        #[arg(long)]
        delta2: Option<String>,
        #[arg(long)]
        tau1: Option<f64>,
        #[arg(long)]
        tau2: Option<f64>,
        #[arg(long, default_value_t = 0.1)]
        kappa: f64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Monte Carlo rate of the two-phase scheme.
    Simulate {
        pfa: PathBuf,
        #[arg(long)]
        prefix: String,
        #[arg(long, value_parser = positive_f64)]
        k: f64,
        #[arg(long, default_value_t = 1000)]
        horizon: usize,
        #[arg(long, default_value_t = 10_000)]
        trials: usize,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Subcommand, Debug)]
enum BuiltinCommand {
    Dmc {
        #[arg(long = "in")]
        in_size: usize,
        #[arg(long = "out")]
        out_size: usize,
    },
    Marton {
        #[arg(long)]
        x: usize,
        #[arg(long)]
        y1: usize,
        #[arg(long)]
        y2: usize,
        #[arg(long)]
        u: usize,
    },
    Hk {
        #[arg(long)]
        q: usize,
        #[arg(long)]
        u1: usize,
        #[arg(long)]
        u2: usize,
        #[arg(long)]
        x1: usize,
        #[arg(long)]
        x2: usize,
        #[arg(long)]
        y1: usize,
        #[arg(long)]
        y2: usize,
    },
}

#[derive(Subcommand, Debug)]
enum ChannelCommand {
    Bsc {
        #[arg(long)]
        p: String,
    },
    Bec {
        #[arg(long)]
        e: String,
    },
    Identity {
        #[arg(long)]
        size: usize,
    },
    Useless {
        #[arg(long, value_delimiter = ',')]
        inputs: Vec<usize>,
        #[arg(long, value_delimiter = ',')]
        outputs: Vec<usize>,
    },
}

fn positive_f64(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(format!("must be a positive number, got {s}"))
    }
}

#[derive(Debug)]
enum Failure {
    Read(PathBuf, std::io::Error),
    Core(Error),
    Usage(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Read(..) => EXIT_PARSE,
            Failure::Usage(_) => EXIT_USAGE,
            Failure::Core(e) => match e {
                Error::Parse { .. }
                | Error::Validation(_)
                | Error::InvalidChannel(_)
                | Error::InvalidPfa(_)
                | Error::UnknownSymbol(_)
                | Error::InvalidRational(_)
                | Error::InvalidDistribution(_)
                | Error::InvalidIndexSet(_)
                | Error::OverlappingIndexSets(_) => EXIT_PARSE,
                Error::DimensionMismatch(_) | Error::MissingQ { .. } => EXIT_DIMENSION,
                Error::ResourceCap { .. } => EXIT_RESOURCE,
                Error::NotTwoRate(_) => EXIT_NOT_TWO_RATE,
                _ => EXIT_RUNTIME,
            },
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Read(p, e) => write!(f, "cannot read {}: {e}", p.display()),
            Failure::Core(e) => write!(f, "{e}"),
            Failure::Usage(m) => write!(f, "{m}"),
        }
    }
}

type CliResult<T = ()> = Result<T, Failure>;

struct Inputs {
    digests: Vec<InputDigest>,
}

impl Inputs {
    fn new() -> Self {
        Self { digests: Vec::new() }
    }

    fn read(&mut self, path: &Path) -> CliResult<String> {
        let bytes = fs::read(path).map_err(|e| Failure::Read(path.to_path_buf(), e))?;
        self.digests.push(digest(path, &bytes));
        String::from_utf8(bytes).map_err(|e| {
            Failure::Read(
                path.to_path_buf(),
                std::io::Error::new(std::io::ErrorKind::InvalidData, e),
            )
        })
    }

    fn flc(&mut self, path: &Path) -> CliResult<FlcSpec> {
        let text = self.read(path)?;
        parse_flc(&text).map_err(|e| Failure::Core(in_file(path, e)))
    }

    fn channel(&mut self, path: &Path) -> CliResult<ChannelSpec> {
        let text = self.read(path)?;
        ChannelSpec::from_json(&text).map_err(|e| Failure::Core(in_file(path, e)))
    }

    fn pfa(&mut self, path: &Path) -> CliResult<Pfa> {
        let text = self.read(path)?;
        Pfa::from_json(&text).map_err(|e| Failure::Core(in_file(path, e)))
    }
}

/// Prefixes parse messages with the file they came from.
fn in_file(path: &Path, e: Error) -> Error {
    match e {
        Error::Parse { line, column, msg } => Error::Parse {
            line,
            column,
            msg: format!("{}: {msg}", path.display()),
        },
        other => other,
    }
}

fn rational_arg(name: &str, text: &str) -> CliResult<Rational> {
    parse_rational(text).map_err(|_| Failure::Usage(format!("--{name}: {text:?} is not a rational number")))
}

fn write_out(path: &Path, text: &str) -> CliResult {
    fs::write(path, text).map_err(|e| Failure::Read(path.to_path_buf(), e))
}

fn emit<T: Serialize>(out: Option<&Path>, report: RunReport<T>) -> CliResult {
    if let Some(p) = out {
        write_out(p, &report.to_json())?;
    }
    Ok(())
}

/// `num/den (decimal)`, or just the integer.
fn show(r: &Rational) -> String {
    if r.is_integer() {
        format!("{}", r.numer())
    } else {
        format!("{} ({})", format_rational(r), to_f64(r))
    }
}

fn bits(n: Nats) -> f64 {
    n.to_bits_of_information()
}

fn run(cli: Cli) -> CliResult {
    let started = Instant::now();
    let mut inputs = Inputs::new();
    match cli.command {
        Command::Validate { flc, channel } => {
            let spec = inputs.flc(&flc)?;
            let c = inputs.channel(&channel)?;
            validate_against_channel(&spec, &c)?;
            println!(
                "ok: {} inequalities, {} constraints, {} alphabets; channel q has {} entries",
                spec.representation.len(),
                spec.constraints.len(),
                spec.alphabets.len(),
                c.q_len()
            );
        }
        Command::Capacity(a) => {
            let spec = inputs.flc(&a.flc)?;
            let c = inputs.channel(&a.channel)?;
            let opts = CapacityOptions {
                mode: a.mode.map(|m| match m {
                    ModeArg::Structured => Mode::Structured,
                    ModeArg::Generic => Mode::Generic,
                }),
                strict_unknowns: a.strict_unknowns,
                cap: a.cap,
                ..CapacityOptions::default()
            };
            let est = approximate_capacity(&spec, &c, Nats(a.epsilon), &opts)?;
            println!(
                "beta = {:.6} ± {:.6} nats ({:.6} ± {:.6} bits)",
                est.beta.0,
                est.epsilon.0,
                bits(est.beta),
                bits(est.epsilon)
            );
            let b = &est.error_breakdown;
            println!(
                "error budget: grid {:.3e}, numeric {:.3e}, eta slack {:.3e} nats",
                b.grid.0, b.numeric.0, b.eta_slack.0
            );
            println!(
                "mode {:?}, m = {}, delta = {}, grid size {}, feasible {}, unknown fraction {}",
                est.mode,
                est.denominator,
                show(&est.delta_used),
                est.grid_size,
                est.feasible_size,
                est.unknown_fraction
            );
            for w in &est.warnings {
                eprintln!("warning: {w}");
            }
            emit(a.out.as_deref(), RunReport::new(inputs.digests, est, started, None))?;
        }
        Command::Gap {
            flc,
            channel,
            lambda,
            out,
        } => {
            let spec = inputs.flc(&flc)?;
            let c = inputs.channel(&channel)?;
            let d = gap_decide(&spec, &c, Nats(lambda), &CapacityOptions::default())?;
            println!(
                "{:?}: beta = {:.6} nats against threshold {:.6} (epsilon = lambda/20 = {:.6})",
                d.verdict, d.estimate.beta.0, d.threshold.0, d.estimate.epsilon.0
            );
            emit(out.as_deref(), RunReport::new(inputs.digests, d, started, None))?;
        }
        Command::Region(a) => {
            let spec = inputs.flc(&a.flc)?;
            let c = inputs.channel(&a.channel)?;
            let vars = spec.rate_variables();
            if vars.len() != 2 {
                return Err(Error::NotTwoRate(vars.len()).into());
            }
            if a.fan == 0 {
                return Err(Failure::Usage("--fan must be positive".into()));
            }
            let set = build_feasible_set_structured(&spec, &c, a.grid_m as usize, a.cap)?;
            let region = region_2user(&spec, &c, &set, a.fan)?;
            println!(
                "rates R{}{} and R{}{}: {} polygons ({} unbounded, {} empty)",
                region.rates[0].0,
                region.rates[0].1,
                region.rates[1].0,
                region.rates[1].1,
                region.members.len(),
                region.members.iter().filter(|m| m.unbounded).count(),
                region.empty_members
            );
            println!(
                "sum-rate = {:.6} nats ({:.6} bits)",
                region.sum_rate,
                region.sum_rate / std::f64::consts::LN_2
            );
            println!("theta_rad\tsupport_nats");
            for s in &region.support {
                println!("{:.6}\t{:.6}", s.theta, s.value);
            }
            if let Some(p) = &a.out {
                let mut csv = String::from("R1_nats,R2_nats,grid_index\n");
                for m in &region.members {
                    for v in &m.polygon {
                        csv.push_str(&format!("{},{},{}\n", v[0], v[1], m.grid_index));
                    }
                }
                write_out(p, &csv)?;
            }
            emit(a.json.as_deref(), RunReport::new(inputs.digests, region, started, None))?;
        }
        Command::Pfa(cmd) => run_pfa(cmd, inputs, started)?,
        Command::Builtin(b) => {
            let spec = match b {
                BuiltinCommand::Dmc { in_size, out_size } => {
                    check_sizes(&[in_size, out_size], 2)?;
                    builtin_dmc(in_size, out_size)
                }
                BuiltinCommand::Marton { x, y1, y2, u } => {
                    check_sizes(&[x, y1, y2, u], 1)?;
                    builtin_marton(x, y1, y2, u)
                }
                BuiltinCommand::Hk {
                    q,
                    u1,
                    u2,
                    x1,
                    x2,
                    y1,
                    y2,
                } => {
                    check_sizes(&[q, u1, u2, x1, x2, y1, y2], 1)?;
                    builtin_han_kobayashi(HkSizes {
                        q,
                        u1,
                        u2,
                        x1,
                        x2,
                        y1,
                        y2,
                    })
                }
            };
            println!("{}", spec.to_json());
        }
        Command::Channel(c) => {
            let ch = match c {
                ChannelCommand::Bsc { p } => ChannelSpec::bsc(rational_arg("p", &p)?)?,
                ChannelCommand::Bec { e } => ChannelSpec::bec(rational_arg("e", &e)?)?,
                ChannelCommand::Identity { size } => ChannelSpec::identity(size)?,
                ChannelCommand::Useless { inputs, outputs } => ChannelSpec::useless(&inputs, &outputs)?,
            };
            println!("{}", ch.to_json());
        }
    }
    Ok(())
}

fn check_sizes(sizes: &[usize], min: usize) -> CliResult {
    if sizes.iter().any(|&s| s < min) {
        return Err(Failure::Usage(format!("alphabet sizes must be at least {min}")));
    }
    Ok(())
}

#[derive(Serialize)]
struct BoundsReport {
    #[serde(skip_serializing_if = "Option::is_none")]
    rates: Option<flc_core::pfa::CapacityBounds>,
    #[serde(skip_serializing_if = "Option::is_none")]
    gap: Option<flc_core::pfa::GapConstants>,
}

fn run_pfa(cmd: PfaCommand, mut inputs: Inputs, started: Instant) -> CliResult {
    match cmd {
        PfaCommand::Accept { pfa, string, out } => {
            let m = inputs.pfa(&pfa)?;
            let word = m.parse_word(&string)?;
            let prof = acceptance_prob(&m, &word)?;
            println!("P(accept | {:?}) = {}", prof.word, show(&prof.prob));
            emit(out.as_deref(), RunReport::new(inputs.digests, prof, started, None))?;
        }
        PfaCommand::Search {
            pfa,
            tau,
            max_len,
            cap,
            out,
        } => {
            let m = inputs.pfa(&pfa)?;
            let tau = rational_arg("tau", &tau)?;
            let res = bounded_emptiness_search(&m, &tau, max_len, cap)?;
            match &res {
                flc_core::pfa::SearchOutcome::Witness { word, prob } => {
                    println!("witness {word:?} accepted with probability {}", show(prob));
                }
                flc_core::pfa::SearchOutcome::NoWitnessUpTo {
                    max_len,
                    best_word,
                    best_prob,
                } => {
                    println!(
                        "no witness up to length {max_len}; best {best_word:?} with {}",
                        show(best_prob)
                    );
                }
            }
            emit(out.as_deref(), RunReport::new(inputs.digests, res, started, None))?;
        }
        PfaCommand::Channel { pfa, k, out } => {
            let m = inputs.pfa(&pfa)?;
            let pc = build_channel_from_pfa(&m, k)?;
            eprintln!(
                "payload {} symbols (K = {:.6} nats), erasure output {}, accept state {} observed by both ends",
                pc.payload,
                pc.k_effective,
                pc.erasure,
                m.accept()
            );
            match out {
                Some(p) => write_out(&p, &pc.channel.to_json())?,
                None => println!("{}", pc.channel.to_json()),
            }
        }
        PfaCommand::Bounds {
            pfa,
            k,
            sigma,
            delta1,
            delta2,
            tau1,
            tau2,
            kappa,
            out,
        } => {
            let sigma = match (&pfa, sigma) {
                (_, Some(s)) => s,
                (Some(p), None) => inputs.pfa(p)?.sigma().len(),
                (None, None) => return Err(Failure::Usage("give --sigma or --pfa".into())),
            };
            let k_exact = rational_arg("k", &k)?;
            let k_nats = to_f64(&k_exact);
            let mut rep = BoundsReport { rates: None, gap: None };
            if tau1.is_some() || tau2.is_some() {
                let b = capacity_bounds(tau1, tau2, k_nats, kappa, sigma)?;
                if let Some(l) = b.lower {
                    println!(
                        "lower bound {l:.6} nats{}",
                        if b.lower_clamped { " (clamped at 0)" } else { "" }
                    );
                }
                if let Some(u) = b.upper {
                    println!("upper bound {u:.6} nats (if L(M, tau2) is empty)");
                }
                rep.rates = Some(b);
            }
            match (delta1, delta2) {
                (Some(d1), Some(d2)) => {
                    let g = gap_constants(
                        &k_exact,
                        sigma,
                        &rational_arg("delta1", &d1)?,
                        &rational_arg("delta2", &d2)?,
                    )?;
                    println!("C_l = {:.6} nats", g.c_l);
                    println!("C_u = {} nats", show(&g.c_u_exact));
                    println!("Delta = {:.6} nats", g.delta);
                    println!(
                        "decide capacity < {:.6} versus > {:.6}",
                        g.lower_threshold, g.upper_threshold
                    );
                    rep.gap = Some(g);
                }
                (None, None) => {}
                _ => return Err(Failure::Usage("--delta1 and --delta2 go together".into())),
            }
            if rep.rates.is_none() && rep.gap.is_none() {
                return Err(Failure::Usage(
                    "nothing to compute: give --tau1/--tau2 or --delta1/--delta2".into(),
                ));
            }
            emit(out.as_deref(), RunReport::new(inputs.digests, rep, started, None))?;
        }
        PfaCommand::Simulate {
            pfa,
            prefix,
            k,
            horizon,
            trials,
            seed,
            out,
        } => {
            let m = inputs.pfa(&pfa)?;
            let word = m.parse_word(&prefix)?;
            let r = simulate_two_phase_scheme(&m, &word, k, horizon, trials, seed)?;
            println!(
                "mean rate {:.6} ± {:.6} (1 s.e.) nats/use over {} trials, entered accept in {:.4}",
                r.mean_rate, r.std_error, r.trials, r.entered_fraction
            );
            emit(out.as_deref(), RunReport::new(inputs.digests, r, started, Some(seed)))?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            let _ = writeln!(std::io::stderr(), "error: {f}");
            ExitCode::from(f.code())
        }
    }
}

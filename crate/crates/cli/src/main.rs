//! `splitval`: JSON-lines front end for the splitval-core engines.
//!
//! Exit status: 0 completed, 1 completed with failures, 2 usage or input
//! error, 3 inconclusive (bounds exhausted or undecided).

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::json;
use splitval_core::Error;

use output::{RunManifest, Stream};

#[derive(Parser)]
#[command(name = "splitval", version, about = "Locally split values of polynomials over ℚ")]
struct Cli {
    /// Seed for every randomized step.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// JSON-lines factorization cache, validated on load and appended on exit.
    #[arg(long, global = true)]
    cache: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Serialize, Clone)]
pub struct InstanceArgs {
    /// Instance file in the line format (entry:/S:/target:).
    #[arg(long)]
    pub instance: PathBuf,
    /// Overrides target precisions, e.g. `2=5,real=1/100`.
    #[arg(long)]
    pub precision: Option<String>,
    /// Treat an Undetermined hypothesis as satisfied: `entry,place`, e.g. `0,2`.
    #[arg(long = "assert-hypothesis")]
    pub assert_hypothesis: Vec<String>,
}

#[derive(Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Local norm test of every hypothesis b_i(t_v − a_i).
    VerifyHypotheses(InstanceArgs),
    /// Conditions (1), (1′) and (2) for one t0.
    CheckT0 {
        #[command(flatten)]
        inst: InstanceArgs,
        #[arg(long, allow_hyphen_values = true)]
        t0: String,
    },
    /// Enumerates t0 by height and reports witnesses.
    SearchT0 {
        #[command(flatten)]
        inst: InstanceArgs,
        /// Height bound on numerator and denominator.
        #[arg(long, default_value_t = 1000)]
        bound: u64,
        #[arg(long)]
        max_hits: Option<usize>,
        /// Only integral candidates.
        #[arg(long)]
        integers_only: bool,
    },
    /// Applies t = (αt′+β)/(γt′+δ) and checks the conclusions at given or sampled t0′.
    ChangeVars {
        #[command(flatten)]
        inst: InstanceArgs,
        /// `α,β,γ,δ`.
        #[arg(long, allow_hyphen_values = true)]
        map: String,
        /// Extra primes of S′, comma separated.
        #[arg(long)]
        s_prime: Option<String>,
        #[arg(long = "t0-prime", allow_hyphen_values = true)]
        t0_prime: Vec<String>,
        /// Number of sampled t0′ meeting the closeness premises.
        #[arg(long, default_value_t = 0)]
        points: usize,
    },
    /// Adds primes to S with targets of valuation divisible by ∏[L_i:k_i].
    ExtendS {
        #[command(flatten)]
        inst: InstanceArgs,
        #[arg(long)]
        primes: String,
    },
    /// A norm from a field close to given targets with every other prime split.
    NormMultiplier {
        /// Monic integral defining polynomial in t.
        #[arg(long)]
        field: String,
        /// `v=p t=x N=n` or `real t=x eps=e`; repeatable.
        #[arg(long, allow_hyphen_values = true)]
        target: Vec<String>,
        #[arg(long)]
        s: Option<String>,
        #[arg(long)]
        v0: Option<u64>,
        #[arg(long, default_value_t = 12)]
        local_box: i64,
        #[arg(long, default_value_t = 6)]
        global_box: i64,
    },
    /// Strong approximation off v0 on affine space minus codimension-2 linear loci.
    LineTrick {
        #[arg(long)]
        dim: usize,
        /// `f ; g` with affine forms in x1..xn; repeatable.
        #[arg(long, allow_hyphen_values = true)]
        exclude: Vec<String>,
        /// `v=p point=a,b,... N=n` or `real point=... eps=e`; repeatable.
        #[arg(long, allow_hyphen_values = true)]
        target: Vec<String>,
        #[arg(long)]
        s: Option<String>,
        #[arg(long)]
        v0: u64,
    },
    /// Whether the fiber over t0 has a local point at each place.
    WVerify {
        #[command(flatten)]
        inst: InstanceArgs,
        #[arg(long, allow_hyphen_values = true)]
        t0: String,
        /// `real` or a prime; repeatable.
        #[arg(long)]
        place: Vec<String>,
    },
    /// Hilbert symbol (a, b)_v.
    Hilbert {
        #[arg(allow_hyphen_values = true)]
        a: String,
        #[arg(allow_hyphen_values = true)]
        b: String,
        #[arg(long)]
        place: String,
    },
    /// Symbols at every relevant place and their sum in ℚ/ℤ.
    Reciprocity {
        #[arg(allow_hyphen_values = true)]
        a: String,
        #[arg(allow_hyphen_values = true)]
        b: String,
    },
    /// Local invariant of the cyclic algebra (χ, a) at an unramified prime.
    CyclicInv {
        #[arg(allow_hyphen_values = true)]
        a: String,
        #[arg(long)]
        prime: u64,
        /// Quadratic character of ℚ(√d).
        #[arg(long, allow_hyphen_values = true)]
        quadratic: Option<i64>,
        #[arg(long)]
        modulus: Option<u64>,
        #[arg(long)]
        order: Option<u64>,
        #[arg(long)]
        generator: Option<u64>,
        /// χ(generator) = k/order.
        #[arg(long, default_value_t = 1)]
        k: u64,
    },
    /// Frobenius cycle types and the almost-abelian verdict.
    AlmostAbelian {
        /// Monic integral polynomial in x.
        #[arg(long)]
        poly: String,
        #[arg(long, default_value_t = 1000)]
        bound: u64,
    },
    /// Smallest prime splitting completely in every field.
    SplitPrime {
        /// Defining polynomial in t; repeatable.
        #[arg(long)]
        field: Vec<String>,
        #[arg(long)]
        exclude: Option<String>,
        #[arg(long, default_value_t = 100_000)]
        bound: u64,
    },
    /// Pairs where every form is an S-unit times one prime outside S.
    Hh1Search {
        /// Form as a polynomial in x (x = λ/μ), homogenized to its degree; repeatable.
        #[arg(long, allow_hyphen_values = true)]
        form: Vec<String>,
        #[arg(long)]
        s: Option<String>,
        /// `v=p lambda=a mu=b N=n` or `real lambda=a mu=b eps=e`; repeatable.
        #[arg(long, allow_hyphen_values = true)]
        target: Vec<String>,
        /// Bound on |μ|.
        #[arg(long, default_value_t = 100)]
        bound: u64,
        /// Bound on |λ| (default: same as --bound).
        #[arg(long)]
        lambda_bound: Option<u64>,
        #[arg(long)]
        max_hits: Option<usize>,
        #[arg(long, default_value_t = 64)]
        segment: usize,
    },
    /// The integral cubic form c^q N(b1((a2 − a1)x + y/b2)) over a cubic field.
    IrvingBuild {
        #[command(flatten)]
        form: CubicArgs,
        /// Random (τ, λ) pairs on which the defining identity is checked.
        #[arg(long, default_value_t = 100)]
        samples: usize,
    },
    /// Pairs (x, y) with no prime ≡ 1 mod q outside S dividing y·f(x, y).
    IrvingScan {
        #[command(flatten)]
        form: CubicArgs,
        /// Use these coefficients (of x^0y^3, x y^2, x^2 y, x^3) instead of building f.
        #[arg(long, allow_hyphen_values = true)]
        coeffs: Option<String>,
        #[arg(long)]
        s: Option<String>,
        /// Bound on x (and on y unless --y-bound is given).
        #[arg(long, default_value_t = 100)]
        bound: u64,
        #[arg(long)]
        y_bound: Option<u64>,
        /// `r,m`.
        #[arg(long)]
        x_class: Option<String>,
        #[arg(long)]
        y_class: Option<String>,
        #[arg(long)]
        max_hits: Option<usize>,
    },
}

#[derive(Args, Serialize, Clone)]
pub struct CubicArgs {
    #[arg(long, default_value = "t^3 - t - 1")]
    pub field: String,
    #[arg(long, default_value_t = 7)]
    pub q: u64,
    #[arg(long, default_value = "t", allow_hyphen_values = true)]
    pub a1: String,
    #[arg(long, default_value = "0", allow_hyphen_values = true)]
    pub a2: String,
    #[arg(long, default_value = "1", allow_hyphen_values = true)]
    pub b1: String,
    #[arg(long, default_value = "1", allow_hyphen_values = true)]
    pub b2: String,
}

impl Command {
    fn name(&self) -> String {
        let v = serde_json::to_value(self).expect("arguments serialize");
        v.as_object().and_then(|o| o.keys().next().cloned()).unwrap_or_default()
    }

    fn instance(&self) -> Option<&InstanceArgs> {
        match self {
            Command::VerifyHypotheses(i) => Some(i),
            Command::CheckT0 { inst, .. }
            | Command::SearchT0 { inst, .. }
            | Command::ChangeVars { inst, .. }
            | Command::ExtendS { inst, .. }
            | Command::WVerify { inst, .. } => Some(inst),
            _ => None,
        }
    }
}

/// How a run ended, short of an error.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Outcome {
    Completed,
    Failures,
    Inconclusive,
}

impl Outcome {
    fn code(self) -> u8 {
        match self {
            Outcome::Completed => 0,
            Outcome::Failures => 1,
            Outcome::Inconclusive => 3,
        }
    }
}

/// An error with its exit status.
#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub kind: &'static str,
    pub message: String,
    pub position: Option<(usize, usize)>,
}

impl CliError {
    pub fn usage(message: impl Into<String>) -> Self {
        CliError { code: 2, kind: "usage", message: message.into(), position: None }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let message = e.to_string();
        let (code, kind) = match &e {
            Error::Parse { .. } => (2, "parse"),
            Error::Domain(_) => (2, "domain"),
            Error::NonCoprimeModuli { .. } | Error::InfeasibleAtPrecision(_) => (2, "infeasible_at_precision"),
            Error::Reducible(_) => (2, "reducible"),
            Error::RamifiedPrime(_) => (2, "ramified_prime"),
            Error::NeedsSInclusion { .. } => (2, "needs_s_inclusion"),
            Error::Precondition(_) => (2, "precondition"),
            Error::HypothesisFailed { .. } => (1, "hypothesis_failed"),
            Error::NoWitness(_) => (3, "no_witness"),
            Error::RetryExhausted(_) => (3, "retry_exhausted"),
            Error::NotFound(_) => (3, "not_found"),
            Error::Unfactored(_) => (3, "unfactored"),
            Error::Uncertified(_) => (3, "uncertified"),
            Error::IrreducibilityInconclusive(_) => (3, "irreducibility_inconclusive"),
            Error::Internal(_) => (1, "internal"),
        };
        let position = match e {
            Error::Parse { line, column, .. } => Some((line, column)),
            _ => None,
        };
        CliError { code, kind, message, position }
    }
}

pub struct Ctx {
    pub seed: u64,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let start = Instant::now();
    if let Some(j) = cli.jobs {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(j.max(1)).build_global() {
            eprintln!("splitval: cannot size the worker pool: {e}");
        }
    }
    if let Some(path) = &cli.cache {
        match output::load_cache(path) {
            Ok(st) => eprintln!("cache: {} entries loaded, {} dropped", st.loaded, st.dropped),
            Err(e) => {
                eprintln!("splitval: cannot read cache {}: {e}", path.display());
                return ExitCode::from(2);
            }
        }
    }
    let mut stream = Stream::new();
    let input_digest = cli
        .command
        .instance()
        .and_then(|i| std::fs::read(&i.instance).ok())
        .map(|b| output::digest(&b));
    let name = cli.command.name();
    let parameters = serde_json::to_value(&cli.command)
        .ok()
        .and_then(|v| v.as_object().and_then(|o| o.values().next().cloned()))
        .unwrap_or(json!({}));
    stream.manifest(&RunManifest {
        tool: "splitval",
        version: env!("CARGO_PKG_VERSION"),
        subcommand: name.clone(),
        input_digest,
        seed: cli.seed,
        parameters,
    });
    let ctx = Ctx { seed: cli.seed };
    let result = commands::run(&ctx, &cli.command, &mut stream);
    let code = match result {
        Ok(o) => o.code(),
        Err(e) => {
            let mut obj = json!({ "error": { "kind": e.kind, "message": e.message } });
            if let Some((line, column)) = e.position {
                obj["error"]["line"] = json!(line);
                obj["error"]["column"] = json!(column);
            }
            stream.emit(&obj);
            eprintln!("splitval {name}: {}", e.message);
            e.code
        }
    };
    if let Some(path) = &cli.cache {
        match output::save_cache(path) {
            Ok(n) if n > 0 => eprintln!("cache: {n} new entries written"),
            Ok(_) => {}
            Err(e) => eprintln!("splitval: cannot write cache {}: {e}", path.display()),
        }
    }
    eprintln!(
        "{name}: {} result lines, exit {code}, {:.3}s",
        stream.lines.saturating_sub(1),
        start.elapsed().as_secs_f64()
    );
    ExitCode::from(code)
}

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use continuant_lab::enumerate::Counting;
use continuant_lab::{io, Alphabet, CfWord, Fraction};
use serde::Serialize;

pub const DEFAULT_SEED: u64 = 20_240_101;

#[derive(Parser, Debug)]
#[command(
    name = "continuant-lab",
    version,
    about = "Continued fractions with bounded partial quotients: enumeration, dimensions, \
             congruence closures, product ensembles, exponential sums and discrepancy"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Output format; each command has a natural default.
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Output file (a directory for `repro`); stdout when absent.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Seed for every sampled check.
    #[arg(long, global = true, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Worker threads; defaults to the hardware parallelism.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, Debug, Default, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum CountingArg {
    #[default]
    Canonical,
    Either,
    Orbit,
}

impl From<CountingArg> for Counting {
    fn from(c: CountingArg) -> Counting {
        match c {
            CountingArg::Canonical => Counting::Canonical,
            CountingArg::Either => Counting::Either,
            CountingArg::Orbit => Counting::Orbit,
        }
    }
}

fn alphabet(s: &str) -> Result<Alphabet, String> {
    io::parse_alphabet(s).map_err(|e| e.to_string())
}

fn word(s: &str) -> Result<CfWord, String> {
    io::parse_word(s).map_err(|e| e.to_string())
}

fn fraction(s: &str) -> Result<Fraction, String> {
    io::parse_fraction(s).map_err(|e| e.to_string())
}

/// Integers, also written as `1e6`.
fn count(s: &str) -> Result<u64, String> {
    if let Ok(v) = s.parse::<u64>() {
        return Ok(v);
    }
    let f: f64 = s.parse().map_err(|_| format!("not an integer: {s:?}"))?;
    if f.fract() != 0.0 || !(0.0..=9.0e15).contains(&f) {
        return Err(format!("not a nonnegative integer: {s:?}"));
    }
    Ok(f as u64)
}

fn list(s: &str) -> Result<Vec<u32>, String> {
    s.split(',')
        .map(|t| t.trim().parse::<u32>().map_err(|e| format!("{t:?}: {e}")))
        .collect()
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Continued fraction expansions and generator products.
    #[command(subcommand)]
    Cf(CfCmd),
    /// Fractions with bounded partial quotients and their denominators.
    #[command(subcommand)]
    Enumerate(EnumerateCmd),
    /// Denominators below N that no fraction over the alphabet attains.
    Exceptions(ExceptionsArgs),
    /// Hausdorff dimension of the Cantor set over the alphabet.
    Dimension(DimensionArgs),
    /// Build the product ensemble at scale N and check its estimates.
    Ensemble(EnsembleArgs),
    /// Congruence closures, local factors and singular series.
    #[command(subcommand)]
    Modular(ModularCmd),
    /// Lattice point sets and their star discrepancy.
    #[command(subcommand)]
    Qmc(QmcCmd),
    /// Exponential sums over the continuants.
    #[command(subcommand)]
    Expsum(ExpsumCmd),
    /// Regenerate the data behind a figure as CSV.
    Repro(ReproArgs),
}

#[derive(Args, Debug, Serialize)]
pub struct AlphabetArg {
    /// Comma list `1,2,3` or range `1..5`.
    #[arg(long, value_parser = alphabet)]
    pub alphabet: Alphabet,
}

#[derive(Args, Debug, Serialize)]
pub struct OrbitArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub alphabet: AlphabetArg,
    /// Exclusive bound on denominators.
    #[arg(long = "N", value_parser = count)]
    pub n: u64,
    #[arg(long, value_enum, default_value_t)]
    pub counting: CountingArg,
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CfCmd {
    /// Expansion of b/d, its even form and matrix.
    Expand {
        #[arg(long, value_parser = fraction)]
        fraction: Fraction,
    },
    /// Product of generators for a word, with its eigen-data.
    Matrix {
        #[arg(long, value_parser = word)]
        word: CfWord,
    },
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum EnumerateCmd {
    /// Multiplicity of each denominator (`d,count`).
    Mult(OrbitArgs),
    /// Every fraction with its word (`b,d,word`).
    List(OrbitArgs),
    /// Log-log slope of the fraction count over N = 2^lo .. 2^hi.
    Hensley {
        #[command(flatten)]
        #[serde(flatten)]
        alphabet: AlphabetArg,
        #[arg(long, default_value_t = 10)]
        lo: u32,
        #[arg(long, default_value_t = 20)]
        hi: u32,
        #[arg(long, value_enum, default_value_t)]
        counting: CountingArg,
    },
    /// Checks d and b + a d against the enumeration at (max letter + 1) N.
    Sumset(OrbitArgs),
    /// Normalized denominator count #D(N)/N^(2 delta) on a log grid.
    Density {
        #[command(flatten)]
        #[serde(flatten)]
        orbit: OrbitArgs,
        /// Exponent; computed from the alphabet when absent.
        #[arg(long)]
        delta: Option<f64>,
        #[arg(long, default_value_t = 40)]
        points: usize,
    },
}

#[derive(Args, Debug, Serialize)]
pub struct ExceptionsArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub orbit: OrbitArgs,
}

#[derive(Args, Debug, Serialize)]
pub struct DimensionArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub alphabet: AlphabetArg,
    #[arg(long, default_value_t = continuant_lab::dimension::DEFAULT_TOL)]
    pub tol: f64,
    #[arg(long, default_value_t = continuant_lab::dimension::DEFAULT_NODES)]
    pub nodes: usize,
    /// Report wall-clock seconds (makes the output run-dependent).
    #[arg(long)]
    pub timing: bool,
}

#[derive(Args, Debug, Serialize)]
pub struct EnsembleArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub alphabet: AlphabetArg,
    #[arg(long = "N", value_parser = count)]
    pub n: u64,
    /// Number of sampled products.
    #[arg(long, default_value_t = 500)]
    pub sample: usize,
    /// Target point in the Cantor set; a fixed point of the alphabet by default.
    #[arg(long)]
    pub x: Option<f64>,
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModularCmd {
    /// Image of the semigroup mod q.
    Closure {
        #[command(flatten)]
        #[serde(flatten)]
        alphabet: AlphabetArg,
        #[arg(long)]
        q: u32,
    },
    /// Whether d passes every congruence test up to q-max.
    Admissible {
        #[command(flatten)]
        #[serde(flatten)]
        alphabet: AlphabetArg,
        #[arg(long, value_parser = count)]
        d: u64,
        #[arg(long, default_value_t = continuant_lab::modular::DEFAULT_Q_MAX)]
        q_max: u32,
    },
    /// Local factor nu_q(a).
    Nu {
        #[arg(long)]
        q: u32,
        #[arg(long)]
        a: u32,
    },
    /// Singular series at n truncated to primes below P.
    Sseries {
        #[arg(long, value_parser = count)]
        n: u64,
        #[arg(long = "P", value_parser = count, default_value_t = 10_000)]
        p: u64,
    },
    /// Distribution of denominators over residues mod each q.
    Residues {
        #[command(flatten)]
        #[serde(flatten)]
        orbit: OrbitArgs,
        /// Comma list of moduli.
        #[arg(long, value_parser = list, default_value = "2,3,4,5,6,7")]
        q: Vec<u32>,
    },
    /// First fraction b/d with d prime and b a primitive root mod d.
    Witness(OrbitArgs),
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum QmcCmd {
    /// Points (n/d, bn/d mod 1).
    Zn {
        #[arg(long, value_parser = count)]
        b: u64,
        #[arg(long, value_parser = count)]
        d: u64,
        #[arg(long)]
        drop_origin: bool,
    },
    /// Star discrepancy of a CSV point file or of z(b, d).
    Disc {
        #[arg(long = "in", conflicts_with_all = ["b", "d"], required_unless_present_all = ["b", "d"])]
        input: Option<PathBuf>,
        #[arg(long, value_parser = count, requires = "d")]
        b: Option<u64>,
        #[arg(long, value_parser = count, requires = "b")]
        d: Option<u64>,
        #[arg(long)]
        drop_origin: bool,
        /// Lower bound from sampled box edges instead of the exact sweep.
        #[arg(long)]
        sampled: bool,
        #[arg(long, default_value_t = 512)]
        columns: usize,
    },
    /// Discrepancy bound for quotients at most A, and the log d / d floor.
    Bound {
        #[arg(long = "A")]
        a: u32,
        #[arg(long, value_parser = count)]
        d: u64,
    },
    /// Discrepancy and largest quotient of every multiplier b mod d.
    Scan {
        #[arg(long, value_parser = count)]
        d: u64,
    },
}

#[derive(Clone, Copy, Debug, Default, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SourceArg {
    /// Every denominator below N with multiplicity.
    #[default]
    Orbit,
    /// Bottom rows of the product ensemble at scale N.
    Ensemble,
}

#[derive(Args, Debug, Serialize)]
pub struct SourceArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub orbit: OrbitArgs,
    #[arg(long, value_enum, default_value_t)]
    pub source: SourceArg,
}

#[derive(Subcommand, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExpsumCmd {
    /// |S|^2 mass on every dyadic arc class up to (Q, K).
    Profile {
        #[command(flatten)]
        #[serde(flatten)]
        source: SourceArgs,
        #[arg(long = "Q")]
        q: u64,
        #[arg(long = "K")]
        k: u64,
    },
    /// Representation numbers by counting and by Fourier inversion.
    Repr {
        #[command(flatten)]
        #[serde(flatten)]
        source: SourceArgs,
        #[arg(long)]
        dft_len: Option<usize>,
    },
    /// Splits the circle into Dirichlet arc classes.
    Partition {
        #[command(flatten)]
        #[serde(flatten)]
        source: SourceArgs,
    },
    /// S(theta), or S(a/q) when --a and --q are given.
    Eval {
        #[command(flatten)]
        #[serde(flatten)]
        source: SourceArgs,
        #[arg(long, conflicts_with_all = ["a", "q"], required_unless_present_all = ["a", "q"])]
        theta: Option<f64>,
        #[arg(long, requires = "q")]
        a: Option<u64>,
        #[arg(long, requires = "a")]
        q: Option<u64>,
    },
}

#[derive(Args, Debug, Serialize)]
pub struct ReproArgs {
    #[arg(value_enum)]
    pub figure: Figure,
    /// Bound on denominators, overriding the figure's own.
    #[arg(long = "N", value_parser = count)]
    pub n: Option<u64>,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Figure {
    Fig2,
    Fig3,
    Fig5,
    Fig6,
    Fig7,
    Fig8,
}

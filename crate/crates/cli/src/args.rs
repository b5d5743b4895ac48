use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(name = "tentlimit", version, about = "Tent-map inverse limits: densities, boxes, holonomy and typicality")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone, serde::Serialize)]
pub struct GlobalArgs {
    /// Arithmetic mode for slope-sensitive decisions.
    #[arg(long, global = true, env = "TENTLIMIT_PRECISION", value_enum, default_value = "scalar")]
    pub precision: PrecisionArg,
    #[arg(long, global = true, value_enum, default_value = "json")]
    pub format: Format,
    /// Write the main output here instead of stdout.
    #[arg(long, short, global = true)]
    pub output: Option<std::path::PathBuf>,
    /// Record wall-clock time in the envelope (makes output non-reproducible).
    #[arg(long, global = true)]
    pub timing: bool,
    /// Accept s = sqrt(2).
    #[arg(long, global = true)]
    pub allow_endpoint: bool,
    /// Worker threads for parallel stages; 0 uses all cores.
    #[arg(long, global = true, default_value_t = 0)]
    pub jobs: usize,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum PrecisionArg {
    Scalar,
    Enclosure,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Compute the invariant density.
    Density(DensityArgs),
    /// Build the maximal 0-box over a base interval.
    Box(BoxArgs),
    /// Compare fiber measures of a box across probe points.
    Holonomy(HolonomyArgs),
    /// Gap statistics, positive-measure box and backward-visit fractions.
    Typicality(TypicalityArgs),
    /// Split an m-flat interval thread into 0-flat pieces.
    Decompose(DecomposeArgs),
    /// Run a statistic over a grid of slopes.
    Sweep(SweepArgs),
}

#[derive(Args, Debug, Clone, serde::Serialize)]
pub struct SlopeArg {
    /// A number in [sqrt(2), 2], or `golden`, `sqrt2`.
    #[arg(long)]
    pub slope: String,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    /// Exact Markov density if the critical orbit is finite, else the orbit series.
    Auto,
    Ulam,
    Markov,
    Series,
    Histogram,
}

#[derive(Args, Debug, Clone, serde::Serialize)]
pub struct DensityArgs {
    #[command(flatten)]
    pub slope: SlopeArg,
    #[arg(long, value_enum, default_value = "auto")]
    pub method: Method,
    #[arg(long, default_value_t = 1024)]
    pub bins: usize,
    /// Orbit length for the histogram; accepts forms like `1e7`.
    #[arg(long, default_value = "1e7", value_parser = parse_count)]
    pub orbit_length: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1)]
    pub shards: usize,
    /// Orbit-matching tolerance for Markov detection.
    #[arg(long, default_value_t = 1e-9)]
    pub markov_tol: f64,
    #[arg(long, default_value_t = 100_000)]
    pub max_iterations: usize,
}

#[derive(Args, Debug, Clone, serde::Serialize)]
pub struct BoxSelect {
    /// Index of the base interval among the components of [0,1] minus
    /// {c, ..., f^prefix(c)}; defaults to the component where the density
    /// is largest.
    #[arg(long, conflicts_with_all = ["lo", "hi"])]
    pub component_index: Option<usize>,
    /// Explicit base interval (with --hi).
    #[arg(long, requires = "hi")]
    pub lo: Option<f64>,
    #[arg(long, requires = "lo")]
    pub hi: Option<f64>,
    /// Flat prefix N'.
    #[arg(long, default_value_t = 4)]
    pub prefix: usize,
    /// Truncation depth D beyond the prefix.
    #[arg(long, default_value_t = 30)]
    pub depth: usize,
    #[arg(long, default_value_t = tentlimit::fiber::DEFAULT_BOX_BUDGET)]
    pub budget: usize,
}

#[derive(Args, Debug, Clone, serde::Serialize)]
pub struct BoxArgs {
    #[command(flatten)]
    pub slope: SlopeArg,
    #[command(flatten)]
    pub select: BoxSelect,
    /// Point of the base interval at which to report alpha; a quasi-random
    /// admissible probe by default.
    #[arg(long)]
    pub probe: Option<f64>,
}

#[derive(Args, Debug, Clone, serde::Serialize)]
pub struct HolonomyArgs {
    #[command(flatten)]
    pub slope: SlopeArg,
    #[command(flatten)]
    pub select: BoxSelect,
    #[arg(long, default_value_t = 5)]
    pub probes: usize,
}

#[derive(Args, Debug, Clone, serde::Serialize)]
pub struct TypicalityArgs {
    #[command(flatten)]
    pub slope: SlopeArg,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, default_value_t = 4)]
    pub prefix: usize,
    #[arg(long, default_value_t = 30)]
    pub depth: usize,
    #[arg(long, default_value_t = 200)]
    pub visit_depth: usize,
    #[arg(long, default_value_t = 10_000)]
    pub samples: usize,
    #[arg(long, default_value_t = 12)]
    pub period_bound: usize,
    /// Critical-orbit lengths for the gap statistic.
    #[arg(long = "gap-n", value_delimiter = ',', default_values_t = [10, 100, 1000])]
    pub gap_n: Vec<usize>,
    /// Largest tolerated fraction of unknown membership verdicts.
    #[arg(long, default_value_t = 0.01)]
    pub max_unknown: f64,
}

#[derive(Args, Debug, Clone, serde::Serialize)]
pub struct DecomposeArgs {
    #[command(flatten)]
    pub slope: SlopeArg,
    /// Level m at which the interval is given.
    #[arg(short, long, default_value_t = 0)]
    pub m: usize,
    #[arg(long)]
    pub lo: f64,
    #[arg(long)]
    pub hi: f64,
    /// Branch word (L/R) pulling J_m back to deeper levels.
    #[arg(long, default_value = "")]
    pub tail: String,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepCmd {
    /// Largest gap of the critical orbit prefix.
    Gap,
    /// Largest pairwise alpha discrepancy of the pccomp box.
    Holonomy,
    /// Sup of the reference density.
    Sup,
    /// alpha lower bound of the pccomp box against M(1 - s^-N).
    Pccomp,
}

#[derive(Args, Debug, Clone, serde::Serialize)]
pub struct SweepArgs {
    #[arg(long)]
    pub from: f64,
    #[arg(long)]
    pub to: f64,
    #[arg(long)]
    pub step: f64,
    #[arg(long, value_enum)]
    pub cmd: SweepCmd,
    /// Critical-orbit length for `gap`.
    #[arg(long = "N", default_value_t = 1000)]
    pub n: usize,
    #[arg(long, default_value_t = 4)]
    pub prefix: usize,
    #[arg(long, default_value_t = 30)]
    pub depth: usize,
    #[arg(long, default_value_t = 5)]
    pub probes: usize,
}

/// Counts written as integers or in scientific notation (`1e7`).
fn parse_count(s: &str) -> Result<usize, String> {
    if let Ok(n) = s.parse::<usize>() {
        return Ok(n);
    }
    let x: f64 = s.parse().map_err(|_| format!("not a count: {s}"))?;
    if x.is_finite() && x >= 0.0 && x.fract() == 0.0 && x < 1e15 {
        Ok(x as usize)
    } else {
        Err(format!("not a non-negative integer: {s}"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_accept_scientific_notation() {
        assert_eq!(parse_count("1e7"), Ok(10_000_000));
        assert_eq!(parse_count("250000"), Ok(250_000));
        assert!(parse_count("1.5").is_err());
        assert!(parse_count("-3").is_err());
    }

    #[test]
    fn parser_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}

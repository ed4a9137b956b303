use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use serde::Serialize;

#[derive(Debug, Parser)]
#[command(name = "tdstab", version, about = "Stability analysis and delayed-feedback design for linear time-delay systems")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Split the system along a common invariant subspace of A1 and A2.
    Decompose(DecomposeArgs),
    /// Imaginary-axis crossings with their delays and root tendencies.
    Crossings(CrossingsArgs),
    /// Unstable-root count over [0, tau-max], decomposing on degenerate crossings.
    Stability(StabilityArgs),
    /// Delay intervals on which the feedback gain stabilizes the plant.
    DesignStabilize(DesignStabilizeArgs),
    /// Gain placing a complex pole pair at a given delay.
    DesignPlace(DesignPlaceArgs),
    /// Fixed-step simulation from a history function.
    Simulate(SimulateArgs),
    /// Rightmost characteristic roots at a fixed delay.
    Roots(RootsArgs),
    /// Rank test of the plant's controllability matrix.
    CheckControllable(ControllableArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Args)]
pub struct IoArgs {
    /// System description file (JSON).
    pub system: PathBuf,
    #[arg(long, value_enum, default_value = "json")]
    pub format: Format,
    /// Output file; standard output when omitted.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TolArgs {
    /// Relative rank and block-residual tolerance.
    #[arg(long)]
    pub tol: Option<f64>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Upper end of the frequency sweep (default from the coefficients).
    #[arg(long)]
    pub omega_max: Option<f64>,
    /// Frequency grid points.
    #[arg(long)]
    pub grid: Option<usize>,
    /// Chebyshev collocation nodes for root counts.
    #[arg(long)]
    pub nodes: Option<usize>,
    #[command(flatten)]
    pub tol: TolArgs,
}

#[derive(Debug, Args)]
pub struct GainArg {
    /// Feedback gain row for the plant block, e.g. `1,-5`.
    #[arg(long, value_parser = parse_gain, allow_hyphen_values = true)]
    pub gain: Option<FloatList>,
}

#[derive(Debug, Args)]
pub struct DecomposeArgs {
    #[command(flatten)]
    pub io: IoArgs,
    #[command(flatten)]
    pub tol: TolArgs,
}

#[derive(Debug, Args)]
pub struct CrossingsArgs {
    #[command(flatten)]
    pub io: IoArgs,
    #[command(flatten)]
    pub sweep: SweepArgs,
    #[command(flatten)]
    pub gain: GainArg,
}

#[derive(Debug, Args)]
pub struct StabilityArgs {
    #[command(flatten)]
    pub io: IoArgs,
    #[command(flatten)]
    pub sweep: SweepArgs,
    #[command(flatten)]
    pub gain: GainArg,
    #[arg(long, default_value_t = 10.0)]
    pub tau_max: f64,
    /// Report degenerate crossings as an error instead of decomposing.
    #[arg(long)]
    pub no_decompose: bool,
}

#[derive(Debug, Args)]
pub struct DesignStabilizeArgs {
    #[command(flatten)]
    pub io: IoArgs,
    #[command(flatten)]
    pub sweep: SweepArgs,
    #[arg(long, value_parser = parse_gain, allow_hyphen_values = true)]
    pub gain: FloatList,
    #[arg(long, default_value_t = 10.0)]
    pub tau_max: f64,
}

#[derive(Debug, Args)]
pub struct DesignPlaceArgs {
    #[command(flatten)]
    pub io: IoArgs,
    #[arg(long)]
    pub tau: f64,
    /// Target pole `a+bj` with b != 0.
    #[arg(long, value_parser = parse_pole, allow_hyphen_values = true)]
    pub pole: Complex64,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub io: IoArgs,
    #[command(flatten)]
    pub gain: GainArg,
    /// Feedback/system delay; may be omitted when no term scales with it.
    #[arg(long)]
    pub tau: Option<f64>,
    #[arg(long, default_value_t = 100.0)]
    pub t_end: f64,
    /// Step size (default: minimum delay / 50).
    #[arg(long)]
    pub dt: Option<f64>,
    /// Constant history `const:<v>` or `const:<v1>,<v2>,...`.
    #[arg(long, value_parser = parse_history, default_value = "const:1", allow_hyphen_values = true)]
    pub history: FloatList,
    /// Settling band relative to the initial deviation.
    #[arg(long, default_value_t = 0.02)]
    pub band: f64,
}

#[derive(Debug, Args)]
pub struct RootsArgs {
    #[command(flatten)]
    pub io: IoArgs,
    #[command(flatten)]
    pub gain: GainArg,
    #[arg(long)]
    pub tau: Option<f64>,
    #[arg(long)]
    pub nodes: Option<usize>,
}

#[derive(Debug, Args)]
pub struct ControllableArgs {
    #[command(flatten)]
    pub io: IoArgs,
    #[command(flatten)]
    pub tol: TolArgs,
}

/// Comma-separated finite numbers.
#[derive(Debug, Clone, PartialEq)]
pub struct FloatList(pub Vec<f64>);

fn parse_list(s: &str) -> Result<FloatList, String> {
    s.split(',')
        .map(|p| {
            let v: f64 = p.trim().parse().map_err(|_| format!("`{p}` is not a number"))?;
            if v.is_finite() {
                Ok(v)
            } else {
                Err(format!("`{p}` is not finite"))
            }
        })
        .collect::<Result<_, _>>()
        .map(FloatList)
}

pub fn parse_gain(s: &str) -> Result<FloatList, String> {
    parse_list(s)
}

pub fn parse_history(s: &str) -> Result<FloatList, String> {
    let values = s.strip_prefix("const:").ok_or_else(|| format!("expected const:<v>, got `{s}`"))?;
    parse_list(values)
}

/// Parses `a+bj`, `a-bj` (also with `i`); the imaginary part must be nonzero.
pub fn parse_pole(s: &str) -> Result<Complex64, String> {
    let t = s.trim();
    let body = t.strip_suffix(['j', 'i']).ok_or_else(|| format!("expected a+bj, got `{s}`"))?;
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&i| (bytes[i] == b'+' || bytes[i] == b'-') && !matches!(bytes[i - 1], b'e' | b'E'))
        .ok_or_else(|| format!("expected a+bj, got `{s}`"))?;
    let re: f64 = body[..split].parse().map_err(|_| format!("bad real part in `{s}`"))?;
    let im: f64 = body[split..].parse().map_err(|_| format!("bad imaginary part in `{s}`"))?;
    if !(re.is_finite() && im.is_finite()) {
        return Err(format!("`{s}` is not finite"));
    }
    if im == 0.0 {
        return Err("the imaginary part must be nonzero".into());
    }
    Ok(Complex64::new(re, im))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn poles() {
        assert_eq!(parse_pole("-0.3254+0.3254j").unwrap(), Complex64::new(-0.3254, 0.3254));
        assert_eq!(parse_pole("1e-3-2i").unwrap(), Complex64::new(1e-3, -2.0));
        assert!(parse_pole("1+0j").is_err());
        assert!(parse_pole("2").is_err());
        assert!(parse_pole("-1j").is_err());
    }

    #[test]
    fn lists() {
        assert_eq!(parse_gain("1,-5").unwrap().0, vec![1.0, -5.0]);
        assert_eq!(parse_history("const:0.5").unwrap().0, vec![0.5]);
        assert!(parse_history("1").is_err());
        assert!(parse_gain("1,nan").is_err());
    }
}

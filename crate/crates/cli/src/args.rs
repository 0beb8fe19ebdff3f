use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "twospin", version, about = "Two-spin partition functions, uniqueness and gadget reductions")]
pub struct Cli {
    /// Worker threads (default: available parallelism).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Largest number of free vertices enumerated by brute force.
    #[arg(long, global = true, default_value_t = 28)]
    pub max_vertices: usize,
    /// Lift the enumeration cap up to the hard limit.
    #[arg(long, global = true)]
    pub force: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Partition function of a graph file.
    Z {
        #[arg(long)]
        graph: PathBuf,
        #[command(flatten)]
        spin: SpinArgs,
        /// Also evaluate with exact rational arithmetic.
        #[arg(long)]
        exact: bool,
    },
    /// Tree-recursion fixed point and the uniqueness criterion.
    Uniqueness {
        #[command(flatten)]
        spin: SpinArgs,
        #[arg(long)]
        degree: u64,
    },
    /// Least degree without uniqueness.
    Threshold {
        #[command(flatten)]
        spin: SpinArgs,
        #[arg(long, default_value_t = 1000)]
        d_max: u64,
    },
    /// Classify a (beta, gamma) grid into phase regions; CSV to a file.
    PhaseMap {
        /// `lo:hi:n`
        #[arg(long)]
        beta: Range,
        /// `lo:hi:n`
        #[arg(long)]
        gamma: Range,
        #[arg(long, default_value_t = 1.0)]
        mu: f64,
        #[arg(long)]
        degree: u64,
        #[arg(long, default_value_t = twospin::uniqueness::DEFAULT_H)]
        h: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Build the reduction graph of an E2LIN2 instance.
    Reduce {
        #[arg(long)]
        instance: PathBuf,
        #[command(flatten)]
        gadget: GadgetArgs,
        #[arg(long)]
        out_graph: PathBuf,
        #[arg(long)]
        out_blocks: PathBuf,
    },
    /// Sample a bipartite gadget H(N, delta).
    Gadget {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        delta: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Exhaustive optimum of an E2LIN2 instance.
    ThetaStar {
        #[arg(long)]
        instance: PathBuf,
    },
    /// Recover theta* from an estimate of ln Z.
    Decode {
        #[arg(long, allow_hyphen_values = true)]
        log_y: f64,
        #[arg(long)]
        vars: usize,
        #[arg(long)]
        equations: usize,
        /// Defaults to the number of equations.
        #[arg(long)]
        block_size: Option<usize>,
        #[arg(long)]
        beta: f64,
        #[arg(long)]
        gamma: f64,
        #[arg(long)]
        delta: u64,
        #[arg(long)]
        delta_prime: u64,
        #[arg(long, value_parser = clap::value_parser!(u8).range(1..=3))]
        case: u8,
        #[arg(long, default_value_t = twospin::reduction::DEFAULT_EPS)]
        eps: f64,
        #[arg(long, default_value_t = twospin::reduction::DEFAULT_SLACK)]
        slack: f64,
    },
    /// Remove an external field on d-regular graphs.
    TranslateField {
        #[command(flatten)]
        spin: SpinArgs,
        #[arg(long)]
        degree: u64,
    },
    /// Numerical checks.
    Verify {
        #[command(subcommand)]
        check: Verify,
    },
}

#[derive(Debug, Subcommand)]
pub enum Verify {
    /// Closed-form restricted sum against enumeration, for every assignment.
    Eq15 {
        #[command(flatten)]
        instance: InstanceArgs,
        #[command(flatten)]
        gadget: GadgetArgs,
        #[arg(long)]
        beta: f64,
        #[arg(long)]
        gamma: f64,
    },
    /// Exact expectation of Z_{a,b} against Monte Carlo.
    Lemma7 {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        delta: u64,
        #[arg(long)]
        delta_prime: u64,
        #[arg(long)]
        beta: f64,
        #[arg(long)]
        gamma: f64,
        #[arg(long)]
        a: f64,
        #[arg(long)]
        b: f64,
        #[arg(long, default_value_t = 10_000)]
        trials: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Maximum of the relaxed exponent over a grid.
    Psi {
        #[arg(long, default_value_t = twospin::analysis::PSI_C)]
        c: f64,
        #[arg(long, default_value_t = twospin::analysis::PSI_LAMBDA)]
        lambda: f64,
        #[arg(long, default_value_t = 1e-3)]
        step: f64,
        #[arg(long, default_value_t = twospin::analysis::PSI_BOUND)]
        bound: f64,
        /// Write every grid value as `a,b,psi`.
        #[arg(long)]
        grid_out: Option<PathBuf>,
    },
    /// Edge counts between vertex sets of sampled gadgets.
    Expander {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        delta: u64,
        /// Number of sampled gadgets.
        #[arg(long, default_value_t = 200)]
        samples: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1e-4)]
        eps: f64,
        #[arg(long, default_value_t = 0.25)]
        factor: f64,
        /// Random pairs per gadget instead of every pair.
        #[arg(long)]
        sampled: Option<u64>,
    },
    /// Field-removal identity on a regular graph.
    Field {
        #[arg(long)]
        graph: PathBuf,
        #[command(flatten)]
        spin: SpinArgs,
    },
    /// max_S Z(G, S) <= Z(G) <= sum_S Z(G, S).
    Sandwich {
        #[command(flatten)]
        instance: InstanceArgs,
        #[command(flatten)]
        gadget: GadgetArgs,
        #[arg(long)]
        beta: f64,
        #[arg(long)]
        gamma: f64,
    },
    /// Coupled Bernoulli sequences against the without-replacement law.
    Coupling {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        a: f64,
        #[arg(long)]
        b: f64,
        #[arg(long)]
        d: u64,
        #[arg(long, default_value_t = 100_000)]
        trials: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Debug, Args)]
pub struct SpinArgs {
    #[arg(long)]
    pub beta: Num,
    #[arg(long)]
    pub gamma: Num,
    #[arg(long, default_value = "1")]
    pub mu: Num,
}

#[derive(Debug, Args)]
pub struct GadgetArgs {
    #[arg(long)]
    pub delta: u64,
    #[arg(long)]
    pub delta_prime: u64,
    #[arg(long, default_value_t = 1)]
    pub block_size: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

/// Either an instance file or a random instance drawn with the gadget seed.
#[derive(Debug, Args)]
pub struct InstanceArgs {
    #[arg(long, conflicts_with_all = ["vars", "equations"])]
    pub instance: Option<PathBuf>,
    #[arg(long, requires = "equations")]
    pub vars: Option<usize>,
    #[arg(long, requires = "vars")]
    pub equations: Option<usize>,
}

/// A number given as a decimal or as `p/q`; the exact ratio is kept when
/// the text has one.
#[derive(Clone, Copy, Debug)]
pub struct Num {
    pub value: f64,
    pub ratio: Option<(i64, i64)>,
}

impl FromStr for Num {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if let Some((p, q)) = s.split_once('/') {
            let p: i64 = p.trim().parse().map_err(|e| format!("{s}: {e}"))?;
            let q: i64 = q.trim().parse().map_err(|e| format!("{s}: {e}"))?;
            if q == 0 {
                return Err(format!("{s}: zero denominator"));
            }
            return Ok(Num { value: p as f64 / q as f64, ratio: Some((p, q)) });
        }
        let value: f64 = s.parse().map_err(|e| format!("{s}: {e}"))?;
        Ok(Num { value, ratio: decimal_ratio(s) })
    }
}

fn decimal_ratio(s: &str) -> Option<(i64, i64)> {
    let (int, frac) = s.split_once('.').unwrap_or((s, ""));
    if frac.len() > 15 || !frac.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    let den = 10i64.pow(frac.len() as u32);
    let digits: i64 = format!("{int}{frac}").parse().ok()?;
    Some((digits, den))
}

/// `lo:hi:n`
#[derive(Clone, Copy, Debug)]
pub struct Range {
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
}

impl FromStr for Range {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let parts: Vec<&str> = s.split(':').collect();
        let [lo, hi, n] = parts[..] else {
            return Err(format!("{s}: expected lo:hi:n"));
        };
        let f = |x: &str| x.parse::<f64>().map_err(|e| format!("{x}: {e}"));
        Ok(Range { lo: f(lo)?, hi: f(hi)?, n: n.parse().map_err(|e| format!("{n}: {e}"))? })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers() {
        let n: Num = "3/7".parse().unwrap();
        assert_eq!(n.ratio, Some((3, 7)));
        let n: Num = "0.25".parse().unwrap();
        assert_eq!(n.ratio, Some((25, 100)));
        assert_eq!(n.value, 0.25);
        let n: Num = "1e-3".parse().unwrap();
        assert_eq!(n.ratio, None);
        assert!("1/0".parse::<Num>().is_err());
        let r: Range = "0.1:0.9:5".parse().unwrap();
        assert_eq!((r.lo, r.hi, r.n), (0.1, 0.9, 5));
        assert!("0.1:0.9".parse::<Range>().is_err());
    }
}

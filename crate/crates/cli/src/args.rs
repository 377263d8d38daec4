use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use crt_netcode::{RecodePath, RecodePolicy};
use serde::{Deserialize, Serialize};

#[derive(Debug, Parser)]
#[command(name = "crt-netcode", version, about = "CRT-based network coding simulator")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Also write every output and a run manifest into this directory.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Subcommand, Serialize, Deserialize)]
#[serde(tag = "subcommand", rename_all = "kebab-case")]
pub enum Command {
    /// Multicast one message over the butterfly network and trace every packet.
    Demo(DemoArgs),
    /// Approximate recover rate R* = (1 - 0.367^r)^2 at the tabulated ratios.
    Table1(Table1Args),
    /// Prime coverage R' on random layered networks.
    Table2(Table2Args),
    /// Header overhead of coding vectors versus a prime-pair header.
    Overhead(OverheadArgs),
    /// Run one session on a generated or loaded topology.
    Simulate(SimulateArgs),
    /// Print a random layered topology in text form.
    Topology(TopologyArgs),
    /// Re-run the command recorded in a manifest.
    #[serde(skip)]
    Replay(ReplayArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Text,
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PolicyArg {
    PerNode,
    PerEdge,
}

impl From<PolicyArg> for RecodePolicy {
    fn from(p: PolicyArg) -> Self {
        match p {
            PolicyArg::PerNode => RecodePolicy::PerNode,
            PolicyArg::PerEdge => RecodePolicy::PerEdge,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PathArg {
    Full,
    Fast,
}

impl From<PathArg> for RecodePath {
    fn from(p: PathArg) -> Self {
        match p {
            PathArg::Full => RecodePath::Full,
            PathArg::Fast => RecodePath::Fast,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModeArg {
    Single,
    Multi,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct DemoArgs {
    /// Message to multicast.
    #[arg(long, default_value = "200")]
    pub message: String,
    /// Message bit length known to every node.
    #[arg(long, default_value_t = 8)]
    pub n: u32,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    pub format: Format,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct Table1Args {
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct Table2Args {
    /// Internal level widths M.
    #[arg(long = "M", value_delimiter = ',', num_args = 1.., default_values_t = [200, 250, 400])]
    pub widths: Vec<usize>,
    /// Internal level counts L.
    #[arg(long = "L", value_delimiter = ',', num_args = 1.., default_values_t = [5, 3])]
    pub depths: Vec<usize>,
    /// Number of seeds per (M, L).
    #[arg(long, default_value_t = 10)]
    pub seeds: u64,
    /// First seed; seeds run from here upward.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 16)]
    pub m: u32,
    #[arg(long, value_enum, default_value_t = PolicyArg::PerNode)]
    pub policy: PolicyArg,
    #[arg(long, value_enum, default_value_t = PathArg::Full)]
    pub path: PathArg,
    /// Accepted distance from the reference R'.
    #[arg(long, default_value_t = 0.06)]
    pub tolerance: f64,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct OverheadArgs {
    /// Number of sources (coding-vector length).
    #[arg(long, default_value_t = 100)]
    pub k: u64,
    /// Number of receivers |T|.
    #[arg(long, default_value_t = 1)]
    pub receivers: u64,
    /// Field size of the coding-vector scheme; must exceed |T|.
    #[arg(long, default_value_t = 16)]
    pub q: u64,
    /// Prime bit length of the CRT header.
    #[arg(long, default_value_t = 16)]
    pub m: u32,
    /// Frame size in bytes.
    #[arg(long, default_value_t = 30)]
    pub frame: u64,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct LayeredArgs {
    #[arg(long, default_value_t = 100)]
    pub sources: usize,
    #[arg(long, default_value_t = 200)]
    pub width: usize,
    #[arg(long, default_value_t = 5)]
    pub depth: usize,
    #[arg(long, default_value_t = 10)]
    pub receivers: usize,
    #[arg(long, default_value_t = 0.8)]
    pub sigma: f64,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct SimulateArgs {
    /// Topology file (`levels:` header plus `u -> v` lines). Generated when absent.
    #[arg(long)]
    pub topology: Option<PathBuf>,
    #[command(flatten)]
    pub layered: LayeredArgs,
    #[arg(long, value_enum, default_value_t = ModeArg::Multi)]
    pub mode: ModeArg,
    /// Single-source message; random when absent. Repeat for several slots.
    #[arg(long)]
    pub message: Vec<String>,
    /// Single-source message bit length.
    #[arg(long, default_value_t = 32)]
    pub n: u32,
    #[arg(long, default_value_t = 16)]
    pub m: u32,
    #[arg(long, default_value_t = 1)]
    pub u: usize,
    #[arg(long, value_enum, default_value_t = PolicyArg::PerNode)]
    pub policy: PolicyArg,
    #[arg(long, value_enum, default_value_t = PathArg::Full)]
    pub path: PathArg,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct TopologyArgs {
    #[command(flatten)]
    pub layered: LayeredArgs,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Args)]
pub struct ReplayArgs {
    /// Manifest written by an earlier run with `--out`.
    pub manifest: PathBuf,
}

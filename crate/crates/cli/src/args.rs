use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use mapmesh_core::graph::PathMetric;
use mapmesh_core::protocol::RankRule;
use mapmesh_core::simnet::Scheme;

/// Map ingestion, route-table building and mesh routing simulation.
#[derive(Debug, Parser)]
#[command(name = "mapmesh", version)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Convert a GeoJSON building extract into the native map cache.
    Ingest {
        #[command(flatten)]
        map: MapArgs,
        /// Cache file to write.
        #[arg(long)]
        out: PathBuf,
    },
    /// Write the building graph as an edge-list CSV `u,v,d_m`.
    Graph {
        #[command(flatten)]
        map: MapArgs,
        /// Building-to-building radio range in meters.
        #[arg(long, default_value_t = 100.0)]
        range: f64,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Connectivity as a function of radio range.
    Feasibility {
        #[command(flatten)]
        map: MapArgs,
        /// Ranges as `start:end:step` in meters, end inclusive.
        #[arg(long, default_value = "20:200:10")]
        ranges: String,
        /// Square meters of footprint per device.
        #[arg(long, default_value_t = 200.0)]
        density: f64,
        #[command(flatten)]
        out: OutArgs,
    },
    /// Build compressed routing tables for every building.
    Tables {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// Directory for the per-building `.mmrt` files and `histogram.csv`.
        #[arg(long)]
        out_dir: PathBuf,
        /// Also write every entry to `tables.csv`.
        #[arg(long)]
        csv: bool,
    },
    /// Run one scenario.
    Simulate {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// Per-event trace CSV.
        #[arg(long)]
        trace: Option<PathBuf>,
        #[command(flatten)]
        out: OutArgs,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
    },
    /// Run a grid of scenarios over schemes, loss, conduit width, metric and seeds.
    Sweep {
        #[command(flatten)]
        scenario: ScenarioArgs,
        /// Comma-separated schemes.
        #[arg(long, value_delimiter = ',')]
        schemes: Vec<Scheme>,
        /// Comma-separated values of the stochastic loss bound.
        #[arg(long, value_delimiter = ',')]
        ells: Vec<f64>,
        /// Comma-separated conduit widths in meters.
        #[arg(long, value_delimiter = ',')]
        widths: Vec<f64>,
        /// Comma-separated path metrics: exponents or `mst`.
        #[arg(long, value_delimiter = ',')]
        ks: Vec<PathMetric>,
        #[command(flatten)]
        par: ParallelArgs,
        #[command(flatten)]
        out: OutArgs,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
    },
    /// Run mapmesh, gpsr and gpsr-15 on one map and join the results per seed.
    Compare {
        #[command(flatten)]
        scenario: ScenarioArgs,
        #[command(flatten)]
        par: ParallelArgs,
        #[command(flatten)]
        out: OutArgs,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
    },
    /// Write a synthetic city as GeoJSON.
    Synth {
        #[command(subcommand)]
        city: SynthCity,
        /// GeoJSON file to write; standard output when omitted.
        #[arg(long, global = true)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Subcommand)]
pub enum SynthCity {
    /// Square buildings on a regular lattice.
    Grid {
        #[arg(long, default_value_t = 8)]
        nx: usize,
        #[arg(long, default_value_t = 8)]
        ny: usize,
        /// Building side in meters.
        #[arg(long, default_value_t = 25.0)]
        size: f64,
        /// Lattice pitch in meters.
        #[arg(long, default_value_t = 50.0)]
        pitch: f64,
    },
    /// Jittered lots in street blocks.
    Block {
        /// Approximate building count.
        #[arg(long, default_value_t = 2000)]
        buildings: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

#[derive(Debug, Clone, Args)]
pub struct MapArgs {
    /// GeoJSON extract or native map cache.
    #[arg(long)]
    pub map: PathBuf,
    /// Read GeoJSON coordinates as longitude/latitude degrees.
    #[arg(long)]
    pub lonlat: bool,
}

#[derive(Debug, Clone, Args)]
pub struct OutArgs {
    /// File to write; standard output when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct ParallelArgs {
    /// Number of seeds, counted up from the scenario seed.
    #[arg(long, default_value_t = 1)]
    pub seeds: u64,
    /// Worker threads; 0 uses every core.
    #[arg(long, default_value_t = 0)]
    pub workers: usize,
}

/// Scenario settings. Flags override the config file, which overrides the
/// built-in defaults.
#[derive(Debug, Clone, Args)]
pub struct ScenarioArgs {
    /// Scenario TOML file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// GeoJSON extract or native map cache; overrides `map` in the config.
    #[arg(long)]
    pub map: Option<PathBuf>,
    /// Read GeoJSON coordinates as longitude/latitude degrees.
    #[arg(long)]
    pub lonlat: bool,
    #[arg(long)]
    pub name: Option<String>,
    /// `mapmesh`, `gpsr` or `gpsr-<location error in meters>`.
    #[arg(long)]
    pub scheme: Option<Scheme>,
    /// Upper bound of the per-link stochastic loss rate.
    #[arg(long)]
    pub ell: Option<f64>,
    /// Conduit width in meters.
    #[arg(short = 'W', long)]
    pub width: Option<f64>,
    /// Path metric exponent, or `mst`.
    #[arg(short = 'k', long)]
    pub k: Option<PathMetric>,
    #[arg(long)]
    pub pairs: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub table_seed: Option<u64>,
    /// Square meters of footprint per device.
    #[arg(long)]
    pub density: Option<f64>,
    /// Building-to-building radio range in meters.
    #[arg(long)]
    pub range: Option<f64>,
    /// Target grid cell side in meters.
    #[arg(long)]
    pub cell_target: Option<f64>,
    #[arg(long)]
    pub cliff_start: Option<f64>,
    #[arg(long)]
    pub cliff_end: Option<f64>,
    /// Draw a fresh link loss rate for every transmission.
    #[arg(long)]
    pub per_packet_rates: bool,
    /// Disable timer suppression (conduit flooding).
    #[arg(long)]
    pub no_suppression: bool,
    #[arg(long, value_enum)]
    pub rank_rule: Option<RankRuleArg>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RankRuleArg {
    Literal,
    CloserOnly,
}

impl From<RankRuleArg> for RankRule {
    fn from(r: RankRuleArg) -> Self {
        match r {
            RankRuleArg::Literal => RankRule::Literal,
            RankRuleArg::CloserOnly => RankRule::CloserOnly,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

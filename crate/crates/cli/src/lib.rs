//! Command-line front end for `cubenet`.
//!
//! Every subcommand loads a JSON scenario, prints a line-oriented report on
//! stdout and can also write a JSON report (`--json PATH`).

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use cubenet::scenario::{Mode, Scenario};

mod commands;
mod format;
pub mod svg;

#[derive(Debug, Parser)]
#[command(name = "cubenet", version, about = "Plan and simulate multiresolution sensor-grid summaries")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Scenario file.
    #[arg(long, value_name = "PATH")]
    pub scenario: PathBuf,
    /// Also write a JSON report here.
    #[arg(long, value_name = "PATH")]
    pub json: Option<PathBuf>,
    /// Override the seed of a random grid.
    #[arg(long, value_name = "N")]
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Simple,
    Ps,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Simple => Mode::Simple,
            ModeArg::Ps => Mode::Ps,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Greedy minimum cover of a region by hierarchy cells.
    Divide {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_name = "NAME")]
        region: String,
        #[arg(long, value_name = "PATH")]
        svg: Option<PathBuf>,
    },
    /// Min-cut retrieval plans; several regions are planned jointly.
    Plan {
        #[command(flatten)]
        common: Common,
        /// Region or query name. Repeatable.
        #[arg(long, value_name = "NAME", required = true)]
        region: Vec<String>,
        /// Failure name or `node:x,y` / `cell:LEVEL:x0,y0`. Repeatable.
        #[arg(long, value_name = "SPEC")]
        fail: Vec<String>,
        #[arg(long, value_name = "PATH")]
        svg: Option<PathBuf>,
    },
    /// Prefix-sum cube plan for one region.
    PsPlan {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_name = "NAME")]
        region: String,
    },
    /// Simulate the distributed construction protocol.
    Construct {
        #[command(flatten)]
        common: Common,
        /// Keep the extra slot used for failure recovery.
        #[arg(long)]
        redundant: bool,
        #[arg(long, value_enum)]
        mode: Option<ModeArg>,
        /// Print every node's stored slots.
        #[arg(long)]
        dump: bool,
    },
    /// Answer a region query under failures.
    Recover {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_name = "NAME")]
        region: String,
        #[arg(long, value_name = "SPEC", required = true)]
        fail: Vec<String>,
    },
    /// Draw the grid, hierarchy, a region and its plan as SVG.
    Render {
        #[command(flatten)]
        common: Common,
        /// Omit for a grid-only drawing.
        #[arg(long, value_name = "NAME")]
        region: Option<String>,
        #[arg(long, value_name = "SPEC")]
        fail: Vec<String>,
        #[arg(long, value_name = "PATH")]
        svg: PathBuf,
    },
}

impl Command {
    fn common(&self) -> &Common {
        match self {
            Command::Divide { common, .. }
            | Command::Plan { common, .. }
            | Command::PsPlan { common, .. }
            | Command::Construct { common, .. }
            | Command::Recover { common, .. }
            | Command::Render { common, .. } => common,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] cubenet::Error),
    #[error("{0}")]
    Usage(String),
}

impl CliError {
    /// Process exit status for this error.
    pub fn exit_code(&self) -> i32 {
        use cubenet::Error as E;
        match self {
            CliError::Usage(_) | CliError::Core(E::Scenario(_)) => 2,
            CliError::Core(E::Unresolved(_)) => 3,
            CliError::Core(E::OutOfBounds { .. } | E::InvalidRect(_) | E::EmptyRegion) => 4,
            CliError::Core(E::Config(_) | E::DimensionMismatch(_)) => 5,
            CliError::Core(E::Io(_)) => 6,
            CliError::Core(E::Simulation(_)) => 7,
            CliError::Core(E::Unrecoverable(_)) => 1,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

/// Text and JSON produced by one subcommand.
#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub text: String,
    pub json: serde_json::Value,
}

/// Load the scenario, run the subcommand and write any requested files.
pub fn run(cli: &Cli) -> CliResult<Report> {
    let common = cli.command.common();
    let mut scenario = Scenario::load(&common.scenario)?;
    if let Some(seed) = common.seed {
        match scenario.grid.random.as_mut() {
            Some(r) => r.seed = seed,
            None => return Err(CliError::Usage("--seed needs a scenario with a random grid".into())),
        }
    }
    let mut report = match &cli.command {
        Command::Divide { region, svg, .. } => commands::divide(&scenario, region, svg.as_deref())?,
        Command::Plan { region, fail, svg, .. } => commands::plan(&scenario, region, fail, svg.as_deref())?,
        Command::PsPlan { region, .. } => commands::ps_plan(&scenario, region)?,
        Command::Construct { redundant, mode, dump, .. } => {
            let mode = mode.map(Mode::from).unwrap_or(scenario.hierarchy.mode);
            commands::construct(&scenario, *redundant || scenario.hierarchy.redundant, mode, *dump)?
        }
        Command::Recover { region, fail, .. } => commands::recover(&scenario, region, fail)?,
        Command::Render { region, fail, svg, .. } => commands::render(&scenario, region.as_deref(), fail, svg)?,
    };
    if let Some(obj) = report.json.as_object_mut() {
        obj.insert("scenario".into(), common.scenario.display().to_string().into());
    }
    if let Some(path) = &common.json {
        let text = serde_json::to_string_pretty(&report.json).expect("report serializes");
        write_file(path, &(text + "\n"))?;
    }
    Ok(report)
}

pub(crate) fn write_file(path: &Path, contents: &str) -> CliResult<()> {
    std::fs::write(path, contents)
        .map_err(|e| cubenet::Error::Io(format!("{}: {e}", path.display())).into())
}

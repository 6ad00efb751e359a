//! Flags, config files and the resolved per-run configuration.

use std::fmt;
use std::path::{Path, PathBuf};

use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// Problems with the invocation itself; reported with exit code 64.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Emit {
    Csv,
    Json,
    Plotdata,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Energy,
    GroundState,
    Minimize,
    Transition,
    Sweep,
    Fhom,
    MmCheck,
    Oracle,
    Identities,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Energy => "energy",
            Command::GroundState => "ground-state",
            Command::Minimize => "minimize",
            Command::Transition => "transition",
            Command::Sweep => "sweep",
            Command::Fhom => "fhom",
            Command::MmCheck => "mm-check",
            Command::Oracle => "oracle",
            Command::Identities => "identities",
        }
    }

    /// Parameter keys the command reads, besides `out`, `emit` and `config`.
    fn keys(self) -> &'static [&'static str] {
        match self {
            Command::Energy => &["lambda", "delta", "j1", "seed"],
            Command::GroundState => &["lambda", "j1"],
            Command::Minimize => &["lambda", "delta", "l", "seed", "threshold"],
            Command::Transition => &["lambda", "delta", "l", "threshold"],
            Command::Sweep => &["lambda", "delta", "l", "threshold", "workers"],
            Command::Fhom => &["j1", "seed", "grid", "cell_size", "rho"],
            Command::MmCheck => &["lambda", "delta", "l"],
            Command::Oracle => &["lambda", "j1", "grid"],
            Command::Identities => &["seed", "grid"],
        }
    }
}

/// Flags shared by every subcommand. List-valued flags take comma-separated
/// values; only `sweep` accepts more than one.
#[derive(Debug, Clone, Default, Args)]
pub struct Flags {
    /// Lattice spacing
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub lambda: Vec<f64>,
    /// Distance from the helimagnet/ferromagnet transition, J1 = 4(1 - delta)
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub delta: Vec<f64>,
    /// Nearest-neighbour coupling (J2 = 1)
    #[arg(long, allow_negative_numbers = true)]
    pub j1: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory [default: $HELICHAIN_OUT or .]
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, value_delimiter = ',')]
    pub emit: Vec<Emit>,
    /// Grid size: angle grid of `oracle`, radii of `fhom`, samples of `identities`
    #[arg(long)]
    pub grid: Option<usize>,
    /// Spins per cell of the f_hom estimator
    #[arg(long)]
    pub cell_size: Option<usize>,
    /// Mean-constraint tolerance of the f_hom estimator
    #[arg(long, allow_negative_numbers = true)]
    pub rho: Option<f64>,
    /// Ratio lambda / sqrt(2 delta); sets delta when given instead of it
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub l: Vec<f64>,
    /// Plateau threshold of the jump count
    #[arg(long, allow_negative_numbers = true)]
    pub threshold: Option<f64>,
    /// Sweep worker threads, 0 for one per logical core
    #[arg(long)]
    pub workers: Option<usize>,
    /// TOML file with the same keys; flags take precedence
    #[arg(long)]
    pub config: Option<PathBuf>,
}

/// A scalar or a list, so config files may write `lambda = 1e-3` or
/// `lambda = [1e-3, 1e-4]`.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum OneOrMany {
    One(f64),
    Many(Vec<f64>),
}

impl OneOrMany {
    fn into_vec(self) -> Vec<f64> {
        match self {
            OneOrMany::One(v) => vec![v],
            OneOrMany::Many(v) => v,
        }
    }
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    lambda: Option<OneOrMany>,
    delta: Option<OneOrMany>,
    j1: Option<f64>,
    seed: Option<u64>,
    out: Option<PathBuf>,
    emit: Option<Vec<Emit>>,
    grid: Option<usize>,
    cell_size: Option<usize>,
    rho: Option<f64>,
    l: Option<OneOrMany>,
    threshold: Option<f64>,
    workers: Option<usize>,
}

fn read_file(path: &Path) -> Result<FileConfig, UsageError> {
    let text =
        std::fs::read_to_string(path).map_err(|e| UsageError(format!("cannot read config {}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| UsageError(format!("bad config {}: {e}", path.display())))
}

impl Flags {
    /// Fills unset flags from the config file, if any.
    fn merged(mut self) -> Result<Flags, UsageError> {
        let Some(path) = self.config.clone() else {
            return Ok(self);
        };
        let file = read_file(&path)?;
        let list = |flag: &mut Vec<f64>, file: Option<OneOrMany>| {
            if flag.is_empty() {
                if let Some(v) = file {
                    *flag = v.into_vec();
                }
            }
        };
        list(&mut self.lambda, file.lambda);
        list(&mut self.delta, file.delta);
        list(&mut self.l, file.l);
        if self.emit.is_empty() {
            self.emit = file.emit.unwrap_or_default();
        }
        self.j1 = self.j1.or(file.j1);
        self.seed = self.seed.or(file.seed);
        self.out = self.out.take().or(file.out);
        self.grid = self.grid.or(file.grid);
        self.cell_size = self.cell_size.or(file.cell_size);
        self.rho = self.rho.or(file.rho);
        self.threshold = self.threshold.or(file.threshold);
        self.workers = self.workers.or(file.workers);
        Ok(self)
    }

    fn set_keys(&self) -> Vec<&'static str> {
        let mut keys = Vec::new();
        let mut push = |set: bool, key| {
            if set {
                keys.push(key);
            }
        };
        push(!self.lambda.is_empty(), "lambda");
        push(!self.delta.is_empty(), "delta");
        push(self.j1.is_some(), "j1");
        push(self.seed.is_some(), "seed");
        push(self.grid.is_some(), "grid");
        push(self.cell_size.is_some(), "cell_size");
        push(self.rho.is_some(), "rho");
        push(!self.l.is_empty(), "l");
        push(self.threshold.is_some(), "threshold");
        push(self.workers.is_some(), "workers");
        keys
    }
}

/// Fully resolved parameters of one run, echoed into every JSON document
/// and hashed into every file. Keys a command does not read stay absent.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub command: &'static str,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub lambda: Vec<f64>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub delta: Vec<f64>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub l: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub j1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cell_size: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rho: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threshold: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
    pub emit: Vec<Emit>,
}

/// Where and what to write; not part of the hashed configuration.
#[derive(Debug, Clone)]
pub struct Run {
    pub config: RunConfig,
    pub out: PathBuf,
}

fn single(key: &str, values: &[f64], default: Option<f64>) -> Result<Vec<f64>, UsageError> {
    match values.len() {
        0 => Ok(default.into_iter().collect()),
        1 => Ok(values.to_vec()),
        n => Err(UsageError(format!("--{key} takes one value here, got {n}"))),
    }
}

/// Merges flags with the config file, rejects keys the command does not
/// read and fills the defaults.
pub fn resolve(command: Command, flags: Flags, env_out: Option<PathBuf>) -> Result<Run, UsageError> {
    let flags = flags.merged()?;
    if let Some(key) = flags.set_keys().into_iter().find(|k| !command.keys().contains(k)) {
        return Err(UsageError(format!(
            "{} does not use --{}",
            command.name(),
            key.replace('_', "-")
        )));
    }
    let out = flags.out.clone().or(env_out).unwrap_or_else(|| PathBuf::from("."));
    let mut emit = if flags.emit.is_empty() {
        vec![Emit::Json]
    } else {
        flags.emit.clone()
    };
    emit.sort();
    emit.dedup();

    let mut c = RunConfig {
        command: command.name(),
        lambda: Vec::new(),
        delta: Vec::new(),
        l: Vec::new(),
        j1: None,
        seed: None,
        grid: None,
        cell_size: None,
        rho: None,
        threshold: None,
        workers: None,
        emit,
    };
    let near_transition = |c: &mut RunConfig, lambda: f64, delta: f64| -> Result<(), UsageError> {
        c.lambda = single("lambda", &flags.lambda, Some(lambda))?;
        c.l = single("l", &flags.l, None)?;
        c.delta = single("delta", &flags.delta, if c.l.is_empty() { Some(delta) } else { None })?;
        if !c.delta.is_empty() && !c.l.is_empty() {
            return Err(UsageError("give either --delta or --l, not both".into()));
        }
        Ok(())
    };
    match command {
        Command::Energy => {
            c.lambda = single("lambda", &flags.lambda, Some(1e-2))?;
            c.delta = single("delta", &flags.delta, None)?;
            c.j1 = Some(flags.j1.unwrap_or(2.0));
            c.seed = Some(flags.seed.unwrap_or(0));
        }
        Command::GroundState => {
            c.lambda = single("lambda", &flags.lambda, Some(1e-3))?;
            c.j1 = Some(flags.j1.unwrap_or(2.0));
        }
        Command::Minimize => {
            near_transition(&mut c, 5e-3, 5e-2)?;
            c.seed = Some(flags.seed.unwrap_or(0));
            c.threshold = Some(flags.threshold.unwrap_or(0.5));
        }
        Command::Transition => {
            near_transition(&mut c, 1e-4, 1e-2)?;
            c.threshold = Some(flags.threshold.unwrap_or(0.5));
        }
        Command::Sweep => {
            c.lambda = if flags.lambda.is_empty() {
                vec![1e-3]
            } else {
                flags.lambda.clone()
            };
            c.delta = flags.delta.clone();
            c.l = flags.l.clone();
            if c.delta.is_empty() && c.l.is_empty() {
                c.l = vec![0.02, 0.2, 1.0, 5.0, 50.0];
            }
            c.threshold = Some(flags.threshold.unwrap_or(0.5));
            c.workers = Some(flags.workers.unwrap_or(0));
        }
        Command::Fhom => {
            c.j1 = Some(flags.j1.unwrap_or(2.0));
            c.seed = Some(flags.seed.unwrap_or(0));
            c.grid = Some(flags.grid.unwrap_or(5));
            c.cell_size = Some(flags.cell_size.unwrap_or(128));
            c.rho = Some(flags.rho.unwrap_or(0.002));
        }
        Command::MmCheck => near_transition(&mut c, 1e-4, 1e-2)?,
        Command::Oracle => {
            c.lambda = single("lambda", &flags.lambda, Some(0.5))?;
            c.j1 = Some(flags.j1.unwrap_or(2.0));
            c.grid = Some(flags.grid.unwrap_or(721));
        }
        Command::Identities => {
            c.seed = Some(flags.seed.unwrap_or(0));
            c.grid = Some(flags.grid.unwrap_or(100));
        }
    }
    Ok(Run { config: c, out })
}

impl RunConfig {
    /// Hex SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(bytes))
    }

    pub fn wants(&self, e: Emit) -> bool {
        self.emit.contains(&e)
    }
}

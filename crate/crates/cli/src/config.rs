//! Resolved run configuration: defaults, config files and flag overrides.

use anyhow::{bail, Context, Result};
use clap::{Args, ValueEnum};
use pnls::operators::{Subspace, Which};
use pnls::{InteractionModel, ModelKind, Variant};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

/// Marks errors caused by user input (exit status 2).
#[derive(Debug)]
pub struct Invalid(pub String);

impl std::fmt::Display for Invalid {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Invalid {}

pub fn invalid(msg: impl Into<String>) -> anyhow::Error {
    anyhow::Error::new(Invalid(msg.into()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum, Default)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Profile,
    Spectrum,
    Slope,
    #[default]
    Classify,
    Evolve,
    Sweep,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum, Default)]
#[serde(rename_all = "kebab-case")]
pub enum PerturbationKind {
    #[default]
    Relative,
    EdgeAsymmetric,
}

/// Frequency grid of `slope` and `sweep`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub omega_min: f64,
    pub omega_max: f64,
    pub omega_steps: usize,
    /// Geometric instead of uniform spacing.
    #[serde(default)]
    pub log: bool,
    #[serde(default)]
    pub p_values: Vec<f64>,
}

impl Grid {
    pub fn omegas(&self) -> Vec<f64> {
        let n = self.omega_steps;
        if n <= 1 {
            return vec![self.omega_min];
        }
        (0..n)
            .map(|i| {
                let s = i as f64 / (n - 1) as f64;
                if self.log {
                    self.omega_min * (self.omega_max / self.omega_min).powf(s)
                } else {
                    self.omega_min + s * (self.omega_max - self.omega_min)
                }
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub command: Command,
    pub model: ModelKind,
    /// γ, β, α or λ depending on `model`.
    pub strength: f64,
    /// Star edge count; line models always use two half-lines.
    pub n_edges: usize,
    pub omega: Option<f64>,
    pub p: f64,
    /// Profile variant; `None` picks the model's ground state.
    pub variant: Option<String>,
    pub h: f64,
    /// Truncation length; `None` derives it from ω and p.
    pub x_max: Option<f64>,
    pub operator: Which,
    pub subspace: Subspace,
    pub eigs: usize,
    pub find_omega_star: bool,
    pub grid: Option<Grid>,
    /// Defaults to `0.1·h`.
    pub dt: Option<f64>,
    pub t_final: f64,
    pub eps: f64,
    pub perturbation: PerturbationKind,
    pub record_every: usize,
    pub snapshot_every: Option<usize>,
    pub snapshots: Option<PathBuf>,
    pub output: Option<PathBuf>,
    pub format: Option<Format>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            command: Command::Classify,
            model: ModelKind::LineDeltaAttractive,
            strength: 1.0,
            n_edges: 3,
            omega: None,
            p: 3.0,
            variant: None,
            h: 0.01,
            x_max: None,
            operator: Which::L1,
            subspace: Subspace::Full,
            eigs: 4,
            find_omega_star: false,
            grid: None,
            dt: None,
            t_final: 10.0,
            eps: 1e-3,
            perturbation: PerturbationKind::Relative,
            record_every: 100,
            snapshot_every: None,
            snapshots: None,
            output: None,
            format: None,
        }
    }
}

impl RunConfig {
    pub fn interaction(&self) -> Result<InteractionModel> {
        let s = self.strength;
        let m = match self.model {
            ModelKind::LineDeltaAttractive => InteractionModel::line_delta(s),
            ModelKind::LineDeltaRepulsive => InteractionModel::line_delta_repulsive(s),
            ModelKind::LineDeltaPrime => InteractionModel::line_delta_prime(s),
            ModelKind::GraphDelta => InteractionModel::graph_delta(self.n_edges, s),
            ModelKind::GraphDeltaPrime => InteractionModel::graph_delta_prime(self.n_edges, s),
        };
        m.validate()?;
        Ok(m)
    }

    pub fn variant(&self) -> Result<Variant> {
        match &self.variant {
            Some(v) => Ok(v.parse()?),
            None => Ok(match self.model {
                ModelKind::LineDeltaAttractive | ModelKind::LineDeltaRepulsive => Variant::Even,
                ModelKind::LineDeltaPrime => Variant::Odd,
                ModelKind::GraphDelta | ModelKind::GraphDeltaPrime => Variant::Tail,
            }),
        }
    }

    pub fn omega(&self) -> Result<f64> {
        self.omega.ok_or_else(|| invalid(format!("{:?} needs --omega", self.command)))
    }

    pub fn grid(&self) -> Result<&Grid> {
        self.grid
            .as_ref()
            .ok_or_else(|| invalid("a grid needs --omega-min, --omega-max and --omega-steps"))
    }

    pub fn dt(&self) -> f64 {
        self.dt.unwrap_or(0.1 * self.h)
    }

    pub fn format_or(&self, default: Format) -> Format {
        self.format.unwrap_or(default)
    }

    /// Loads a JSON config, an output JSON carrying a `config` object, or a
    /// CSV output whose first line is `# config: {...}`.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::parse(&text).map_err(|e| invalid(format!("{}: {e:#}", path.display())))
    }

    pub fn parse(text: &str) -> Result<Self> {
        let t = text.trim_start();
        let value: serde_json::Value = if let Some(rest) = t.strip_prefix("# config:") {
            serde_json::from_str(rest.lines().next().unwrap_or_default())?
        } else {
            let v: serde_json::Value = serde_json::from_str(t)?;
            match v.get("config") {
                Some(c) if c.is_object() => c.clone(),
                _ => v,
            }
        };
        Ok(serde_json::from_value(value)?)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum XArg {
    Auto,
    Value(f64),
}

fn parse_x(s: &str) -> std::result::Result<XArg, String> {
    if s == "auto" {
        return Ok(XArg::Auto);
    }
    s.parse().map(XArg::Value).map_err(|_| format!("expected 'auto' or a length, got '{s}'"))
}

fn parse_subspace(s: &str) -> std::result::Result<Subspace, String> {
    Ok(match s {
        "full" => Subspace::Full,
        "even" | "even_sector" | "even-sector" => Subspace::EvenSector,
        "odd" | "odd_sector" | "odd-sector" => Subspace::OddSector,
        "edgewise-even" | "edgewise_even" => Subspace::EdgewiseEven,
        _ => return Err(format!("unknown subspace '{s}' (full, even, odd, edgewise-even)")),
    })
}

/// Comma-separated list of powers.
#[derive(Debug, Clone, PartialEq)]
pub struct PList(pub Vec<f64>);

fn parse_p_list(s: &str) -> std::result::Result<PList, String> {
    s.split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|_| format!("bad p value '{t}'")))
        .collect::<std::result::Result<_, _>>()
        .map(PList)
}

/// Flags shared by every subcommand; each overrides the config file.
#[derive(Debug, Clone, Default, Args)]
pub struct Params {
    /// JSON config, or a previous output whose embedded config is reused.
    #[arg(long)]
    pub config: Option<PathBuf>,

    /// line-delta, line-delta-repulsive, line-delta-prime, graph-delta, graph-delta-prime
    #[arg(long)]
    pub model: Option<ModelKind>,
    /// Interaction strength: γ (line δ), β (line δ′), α (graph δ) or λ (graph δ′).
    #[arg(long, allow_hyphen_values = true)]
    pub strength: Option<f64>,
    /// Number of edges of the star graph.
    #[arg(long)]
    pub edges: Option<usize>,
    #[arg(long)]
    pub omega: Option<f64>,
    #[arg(long)]
    pub p: Option<f64>,
    /// even, odd, asymmetric, tail or bumpM.
    #[arg(long)]
    pub variant: Option<String>,

    /// Mesh width.
    #[arg(long)]
    pub h: Option<f64>,
    /// Truncation length per edge, or `auto`.
    #[arg(long = "x-max", value_parser = parse_x)]
    pub x_max: Option<XArg>,

    #[arg(long)]
    pub operator: Option<Which>,
    /// full, even, odd or edgewise-even.
    #[arg(long, value_parser = parse_subspace)]
    pub subspace: Option<Subspace>,
    /// Number of lowest eigenpairs to report (at most 8).
    #[arg(long)]
    pub eigs: Option<usize>,

    #[arg(long)]
    pub find_omega_star: bool,
    #[arg(long)]
    pub omega_min: Option<f64>,
    #[arg(long)]
    pub omega_max: Option<f64>,
    #[arg(long)]
    pub omega_steps: Option<usize>,
    /// Geometric ω spacing.
    #[arg(long)]
    pub log: bool,
    /// Comma-separated powers for `sweep`.
    #[arg(long, value_parser = parse_p_list)]
    pub p_values: Option<PList>,

    #[arg(long)]
    pub dt: Option<f64>,
    #[arg(long)]
    pub t_final: Option<f64>,
    /// Perturbation size ε.
    #[arg(long)]
    pub eps: Option<f64>,
    #[arg(long, value_enum)]
    pub perturbation: Option<PerturbationKind>,
    #[arg(long)]
    pub record_every: Option<usize>,
    #[arg(long)]
    pub snapshot_every: Option<usize>,
    /// Binary snapshot container written by `evolve`.
    #[arg(long)]
    pub snapshots: Option<PathBuf>,

    /// Output file; stdout when absent.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Worker threads for `sweep`.
    #[arg(long, env = "PNLS_DEFAULT_JOBS")]
    pub jobs: Option<usize>,
}

impl Params {
    pub fn resolve(&self, command: Option<Command>) -> Result<RunConfig> {
        let mut c = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        if let Some(cmd) = command {
            c.command = cmd;
        }
        macro_rules! set {
            ($($flag:ident => $field:ident),* $(,)?) => {
                $(if let Some(v) = &self.$flag { c.$field = v.clone(); })*
            };
        }
        set!(model => model, strength => strength, edges => n_edges, p => p, h => h,
             operator => operator, subspace => subspace, eigs => eigs, t_final => t_final,
             eps => eps, perturbation => perturbation, record_every => record_every);
        macro_rules! set_opt {
            ($($flag:ident => $field:ident),* $(,)?) => {
                $(if let Some(v) = &self.$flag { c.$field = Some(v.clone()); })*
            };
        }
        set_opt!(omega => omega, variant => variant, dt => dt, snapshot_every => snapshot_every,
                 snapshots => snapshots, output => output, format => format);
        match &self.x_max {
            Some(XArg::Auto) => c.x_max = None,
            Some(XArg::Value(x)) => c.x_max = Some(*x),
            None => {}
        }
        if self.find_omega_star {
            c.find_omega_star = true;
        }
        let touches_grid = self.omega_min.is_some()
            || self.omega_max.is_some()
            || self.omega_steps.is_some()
            || self.p_values.is_some()
            || self.log;
        if touches_grid {
            let mut g = c.grid.take().unwrap_or(Grid {
                omega_min: f64::NAN,
                omega_max: f64::NAN,
                omega_steps: 0,
                log: false,
                p_values: Vec::new(),
            });
            if let Some(v) = self.omega_min {
                g.omega_min = v;
            }
            if let Some(v) = self.omega_max {
                g.omega_max = v;
            }
            if let Some(v) = self.omega_steps {
                g.omega_steps = v;
            }
            if let Some(v) = &self.p_values {
                g.p_values = v.0.clone();
            }
            g.log |= self.log;
            c.grid = Some(g);
        }
        c.check()?;
        Ok(c)
    }
}

impl RunConfig {
    /// Checks that do not need the numerics.
    pub fn check(&self) -> Result<()> {
        if !(self.h > 0.0 && self.h.is_finite()) {
            bail!(invalid(format!("h = {} must be positive", self.h)));
        }
        if let Some(g) = &self.grid {
            if !(g.omega_min > 0.0 && g.omega_max >= g.omega_min && g.omega_steps >= 1) {
                return Err(invalid(format!(
                    "grid needs 0 < omega_min ≤ omega_max and omega_steps ≥ 1 (got {}, {}, {})",
                    g.omega_min, g.omega_max, g.omega_steps
                )));
            }
        }
        if self.eigs > 8 {
            return Err(invalid(format!("--eigs {} exceeds 8", self.eigs)));
        }
        Ok(())
    }

    pub fn p_values(&self) -> Vec<f64> {
        match &self.grid {
            Some(g) if !g.p_values.is_empty() => g.p_values.clone(),
            _ => vec![self.p],
        }
    }
}

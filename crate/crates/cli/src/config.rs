//! Job configuration: parsing, validation and resolution into concrete
//! problem data.

use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use serde::{Deserialize, Serialize};
use specext::moments::toeplitz_feasibility_1d;
use specext::realization::{model_moments, polar_filter};
use specext::solver::initial_point;
use specext::{ArmaModel64, DualPoint64, Grid64, GridSpec, IndexSet, MomentData64, SolveOptions64};

use crate::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Moments,
    Solve,
    Verify,
    SweepLambda,
    ConvergeGrid,
    EntropyCurve,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Moments => "moments",
            Command::Solve => "solve",
            Command::Verify => "verify",
            Command::SweepLambda => "sweep-lambda",
            Command::ConvergeGrid => "converge-grid",
            Command::EntropyCurve => "entropy-curve",
        }
    }
}

/// Moduli and angles of filter taps. Angles are in units of π.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolarConfig {
    pub abs: Vec<f64>,
    pub angle: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub a: PolarConfig,
    pub b: PolarConfig,
    /// Rescale `b` to unit norm instead of requiring it.
    #[serde(default = "yes")]
    pub normalize_b: bool,
}

fn yes() -> bool {
    true
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MomentsConfig {
    /// Covariances over the half-set, `c_0` first.
    pub c: Vec<f64>,
    /// ν-cepstral coefficients over the nonzero half-set; zero when omitted.
    #[serde(default)]
    pub m: Option<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PointConfig {
    pub p: Vec<f64>,
    pub q: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum IndexSetConfig {
    /// `{k : |k_j| ≤ n_j}`.
    Box(Vec<usize>),
    /// Difference set of the given nonnegative-side indices.
    Plus(Vec<Vec<i64>>),
    /// Explicit half-set, zero index first, in the order of `c`.
    Half(Vec<Vec<i64>>),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Start {
    /// Flat spectrum matching `c_0`.
    #[default]
    Flat,
    /// Random strictly feasible point drawn from the seed.
    Random,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JobConfig {
    #[serde(default)]
    pub command: Option<Command>,
    pub dimension: usize,
    /// Grid size per axis.
    #[serde(default)]
    pub grid: Option<Vec<usize>>,
    /// Uniform grid size on every axis.
    #[serde(default)]
    pub grid_size: Option<usize>,
    /// Uniform sizes visited by `converge-grid`.
    #[serde(default)]
    pub grid_sizes: Option<Vec<usize>>,
    #[serde(default)]
    pub nu: Option<u32>,
    #[serde(default)]
    pub lambda: Option<f64>,
    #[serde(default)]
    pub lambdas: Option<Vec<f64>>,
    #[serde(default)]
    pub index_set: Option<IndexSetConfig>,
    #[serde(default)]
    pub model: Option<ModelConfig>,
    #[serde(default)]
    pub moments: Option<MomentsConfig>,
    /// A `moments.json` written by an earlier run.
    #[serde(default)]
    pub moments_file: Option<PathBuf>,
    /// Point checked by `verify`; a random one is drawn when absent.
    #[serde(default)]
    pub point: Option<PointConfig>,
    #[serde(default)]
    pub start: Start,
    #[serde(default)]
    pub solver: SolveOptions64,
    /// Zero-based grid point the `sweep-lambda` cross-sections pass through.
    #[serde(default)]
    pub section_through: Option<Vec<usize>>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub out_dir: Option<PathBuf>,
}

/// Contents of `moments.json`.
#[derive(Debug, Serialize, Deserialize)]
pub struct MomentsFile {
    pub config: serde_json::Value,
    pub grid: Vec<usize>,
    #[serde(flatten)]
    pub data: MomentData64,
}

pub enum Source {
    Model(ArmaModel64),
    Data(MomentData64),
}

/// A validated job with everything it needs computed up front.
pub struct Job {
    pub command: Command,
    /// The configuration with defaults and derived values filled in.
    pub config: JobConfig,
    pub out_dir: PathBuf,
    pub spec: Option<GridSpec>,
    pub source: Source,
    /// Moments on `spec`, present whenever `spec` is.
    pub data: Option<MomentData64>,
    pub start: Option<DualPoint64>,
}

fn config_err(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

fn require<T: Clone>(v: &Option<T>, field: &str, cmd: Command) -> Result<T, CliError> {
    v.clone()
        .ok_or_else(|| config_err(format!("`{field}` is required by `{}`", cmd.name())))
}

pub fn load(path: &Path) -> Result<JobConfig, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| config_err(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| config_err(format!("{}: {e}", path.display())))
}

fn build_model(m: &ModelConfig, nu: u32, dim: usize) -> Result<ArmaModel64, CliError> {
    if m.a.abs.len() != dim + 1 || m.b.abs.len() != dim + 1 {
        return Err(config_err(format!(
            "model filters need {} taps for dimension {dim}",
            dim + 1
        )));
    }
    let a = polar_filter(&m.a.abs, &m.a.angle).map_err(CliError::from_core)?;
    let b = polar_filter(&m.b.abs, &m.b.angle).map_err(CliError::from_core)?;
    let model = if m.normalize_b {
        ArmaModel64::with_normalized_numerator(a, b, nu)
    } else {
        ArmaModel64::new(a, b, nu)
    };
    model.map_err(CliError::from_core)
}

fn build_index_set(c: &IndexSetConfig, dim: usize) -> Result<IndexSet, CliError> {
    let set = match c {
        IndexSetConfig::Box(n) => IndexSet::box_set(n),
        IndexSetConfig::Plus(plus) => IndexSet::difference_set(plus),
        IndexSetConfig::Half(half) => IndexSet::from_half(dim, half.clone()),
    }
    .map_err(CliError::from_core)?;
    if set.dim() != dim {
        return Err(config_err(format!(
            "index set has dimension {}, expected {dim}",
            set.dim()
        )));
    }
    Ok(set)
}

/// Random point with `P ≥ 0.2` and `Q ≥ 0.2 q_0` everywhere.
fn random_point(set: &IndexSet, q0: f64, seed: u64) -> Result<DualPoint64, CliError> {
    let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
    let h = set.half_len();
    let budget = 0.4 / (h - 1).max(1) as f64;
    let p = (1..h).map(|_| rng.gen_range(-budget..budget)).collect();
    let q0 = q0 * rng.gen_range(0.6..1.6);
    let mut q = vec![q0];
    q.extend((1..h).map(|_| q0 * rng.gen_range(-budget..budget)));
    DualPoint64::new(set.clone(), p, q).map_err(CliError::from_core)
}

fn check_lambda(l: f64, positive: bool) -> Result<(), CliError> {
    if !l.is_finite() || l < 0.0 || (positive && l == 0.0) {
        return Err(config_err(format!("invalid λ {l}")));
    }
    Ok(())
}

/// Validates `cfg` for `command` and computes the problem data. Nothing is
/// written to disk here.
pub fn resolve(
    mut cfg: JobConfig,
    command: Command,
    out_dir: Option<PathBuf>,
    seed: Option<u64>,
) -> Result<Job, CliError> {
    if let Some(c) = cfg.command {
        if c != command {
            return Err(config_err(format!(
                "config is for `{}`, invoked as `{}`",
                c.name(),
                command.name()
            )));
        }
    }
    cfg.command = Some(command);
    cfg.seed = Some(seed.or(cfg.seed).unwrap_or(0));
    let out_dir = out_dir
        .or_else(|| cfg.out_dir.clone())
        .unwrap_or_else(|| PathBuf::from("."));
    cfg.out_dir = Some(out_dir.clone());
    cfg.solver
        .validate()
        .map_err(|e| config_err(e.to_string()))?;
    let dim = cfg.dimension;
    if dim == 0 {
        return Err(config_err("dimension must be at least 1"));
    }

    let sources = [cfg.model.is_some(), cfg.moments.is_some(), cfg.moments_file.is_some()];
    match sources.iter().filter(|&&s| s).count() {
        1 => {}
        0 => return Err(config_err("one of `model`, `moments`, `moments_file` is required")),
        _ => return Err(config_err("give only one of `model`, `moments`, `moments_file`")),
    }
    let file: Option<MomentsFile> = match &cfg.moments_file {
        Some(p) => {
            let text = fs::read_to_string(p)
                .map_err(|e| config_err(format!("cannot read {}: {e}", p.display())))?;
            Some(
                serde_json::from_str(&text)
                    .map_err(|e| config_err(format!("{}: {e}", p.display())))?,
            )
        }
        None => None,
    };

    if let Some(f) = &file {
        match cfg.nu {
            Some(nu) if nu != f.data.nu => {
                return Err(config_err(format!(
                    "`nu` = {nu} disagrees with the moments file ({})",
                    f.data.nu
                )))
            }
            _ => cfg.nu = Some(f.data.nu),
        }
        if cfg.grid.is_none() && cfg.grid_size.is_none() {
            cfg.grid = Some(f.grid.clone());
        }
        if cfg.lambda.is_none() {
            cfg.lambda = Some(f.data.lambda);
        }
    }
    let nu = require(&cfg.nu, "nu", command)?;
    if nu < 2 {
        return Err(config_err(format!("`nu` must be at least 2, got {nu}")));
    }

    let grid_dims = match (&cfg.grid, cfg.grid_size) {
        (Some(_), Some(_)) => return Err(config_err("give only one of `grid`, `grid_size`")),
        (Some(g), None) => Some(g.clone()),
        (None, Some(n)) => Some(vec![n; dim]),
        (None, None) => None,
    };
    cfg.grid = grid_dims.clone();
    cfg.grid_size = None;
    let spec = match (&grid_dims, command) {
        (_, Command::ConvergeGrid) => None,
        (Some(dims), _) => {
            if dims.len() != dim {
                return Err(config_err(format!(
                    "`grid` has {} sizes for dimension {dim}",
                    dims.len()
                )));
            }
            Some(GridSpec::new(dims.clone()).map_err(CliError::from_core)?)
        }
        (None, _) => return Err(config_err(format!("`grid` is required by `{}`", command.name()))),
    };

    match command {
        Command::Solve | Command::Verify | Command::ConvergeGrid => {
            check_lambda(require(&cfg.lambda, "lambda", command)?, false)?;
        }
        Command::Moments => {
            let l = *cfg.lambda.get_or_insert(0.0);
            check_lambda(l, false)?;
        }
        Command::SweepLambda | Command::EntropyCurve => {
            let ls = require(&cfg.lambdas, "lambdas", command)?;
            if ls.is_empty() {
                return Err(config_err("`lambdas` is empty"));
            }
            for &l in &ls {
                check_lambda(l, command == Command::SweepLambda)?;
            }
        }
    }
    let lambda = cfg.lambda.unwrap_or(0.0);

    let source = if let Some(m) = &cfg.model {
        let model = build_model(m, nu, dim)?;
        if let Some(s) = &cfg.index_set {
            if build_index_set(s, dim)? != model.index_set() {
                return Err(config_err("`index_set` must be omitted or match the model"));
            }
        }
        cfg.index_set = Some(IndexSetConfig::Half(model.index_set().half().to_vec()));
        Source::Model(model)
    } else {
        let data = if let Some(f) = file {
            if let Some(s) = &cfg.index_set {
                if build_index_set(s, dim)? != f.data.index_set {
                    return Err(config_err("`index_set` disagrees with the moments file"));
                }
            }
            f.data.with_lambda(lambda)
        } else {
            let m = cfg.moments.as_ref().expect("checked above");
            let set = build_index_set(
                cfg.index_set
                    .as_ref()
                    .ok_or_else(|| config_err("`index_set` is required with explicit `moments`"))?,
                dim,
            )?;
            let h = set.half_len();
            let mv = m.m.clone().unwrap_or_else(|| vec![0.0; h.saturating_sub(1)]);
            if m.c.len() != h || mv.len() + 1 != h {
                return Err(config_err(format!(
                    "the index set needs {h} covariances and {} cepstral coefficients",
                    h - 1
                )));
            }
            if m.c[0] <= 0.0 {
                return Err(CliError::Infeasible(format!("c_0 must be positive, got {}", m.c[0])));
            }
            MomentData64::new(set, m.c.clone(), mv, nu, lambda).map_err(CliError::from_core)?
        };
        if data.index_set.dim() != dim {
            return Err(config_err(format!(
                "moments have dimension {}, expected {dim}",
                data.index_set.dim()
            )));
        }
        cfg.index_set = Some(IndexSetConfig::Half(data.index_set.half().to_vec()));
        if dim == 1 && data.index_set == IndexSet::box_set(&[data.index_set.half_len() - 1]).unwrap() {
            let t = toeplitz_feasibility_1d(&data.index_set, &data.c).map_err(CliError::from_core)?;
            if !t.feasible {
                return Err(CliError::Infeasible(format!(
                    "covariance Toeplitz matrix is not positive definite (min eigenvalue {:e})",
                    t.min_eigenvalue
                )));
            }
        }
        Source::Data(data)
    };

    let mut data = None;
    if let Some(spec) = &spec {
        let grid = Grid64::new(spec.clone());
        data = Some(match &source {
            Source::Model(model) => model_moments(model, &grid, lambda).map_err(CliError::from_core)?,
            Source::Data(d) => {
                grid.check_aliasing(&d.index_set).map_err(CliError::from_core)?;
                d.clone()
            }
        });
    }

    match command {
        Command::SweepLambda => {
            if !matches!(source, Source::Model(_)) {
                return Err(config_err("`sweep-lambda` needs a `model` to measure errors against"));
            }
            let spec = spec.as_ref().expect("grid required");
            let through = cfg
                .section_through
                .clone()
                .unwrap_or_else(|| spec.dims().iter().map(|n| n / 2).collect());
            if through.len() != dim || through.iter().zip(spec.dims()).any(|(&i, &n)| i >= n) {
                return Err(config_err(format!("`section_through` {through:?} is off the grid")));
            }
            cfg.section_through = Some(through);
        }
        Command::ConvergeGrid => {
            if !matches!(source, Source::Model(_)) {
                return Err(config_err("`converge-grid` needs a `model`"));
            }
            let sizes = require(&cfg.grid_sizes, "grid_sizes", command)?;
            if sizes.len() < 2 {
                return Err(config_err("`grid_sizes` needs at least two sizes"));
            }
            let Source::Model(model) = &source else { unreachable!() };
            for &n in &sizes {
                let spec = GridSpec::uniform(dim, n).map_err(CliError::from_core)?;
                Grid64::new(spec)
                    .check_aliasing(&model.index_set())
                    .map_err(CliError::from_core)?;
            }
        }
        _ => {}
    }

    let start = match (command, &data) {
        (Command::Verify, Some(d)) => Some(match &cfg.point {
            Some(pt) => DualPoint64::new(d.index_set.clone(), pt.p.clone(), pt.q.clone())
                .map_err(|e| config_err(format!("`point`: {e}")))?,
            None => random_point(
                &d.index_set,
                initial_point(d).map_err(CliError::from_core)?.q[0],
                cfg.seed.unwrap(),
            )?,
        }),
        (Command::Solve, Some(d)) => Some(match cfg.start {
            Start::Flat => initial_point(d).map_err(CliError::from_core)?,
            Start::Random => random_point(
                &d.index_set,
                initial_point(d).map_err(CliError::from_core)?.q[0],
                cfg.seed.unwrap(),
            )?,
        }),
        _ => None,
    };

    Ok(Job {
        command,
        config: cfg,
        out_dir,
        spec,
        source,
        data,
        start,
    })
}

//! JSON run configuration: schema validation (unknown keys rejected, errors
//! name the offending key) and assembly of the black box, parameter space,
//! engine config, and ground-truth context.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use sane_core::acquisition::AcqConfig;
use sane_core::engine::{self, switch_schedule_at, InitMethod, Mode, SaneConfig};
use sane_core::gate::GateMode;
use sane_core::problem::{
    load_grid_blackbox, with_noise, BlackBox, BraninBox, Direction, NoiseSpec, ParameterSpace,
    BRANIN_OPTIMA,
};
use sane_core::surrogate::{FitConfig, KernelSpec};

use crate::error::CliError;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfigFile {
    pub problem: ProblemSection,
    #[serde(default)]
    pub sane: SaneSection,
    /// Labels CSV, resolved relative to the config file's directory.
    #[serde(default)]
    pub labels: Option<PathBuf>,
    /// Output directory; default `sane-out` next to the working directory.
    #[serde(default)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProblemKind {
    /// Negated Branin on `[-5, 15)^2`: a maximization problem with three
    /// equal global optima.
    BraninNeg,
    /// Complete lattice dataset loaded from CSV.
    Grid,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSection {
    pub kind: ProblemKind,
    /// Dataset CSV; grid problems only.
    #[serde(default)]
    pub path: Option<PathBuf>,
    /// Cells per axis for continuous problems; grid problems carry their own
    /// lattice. Default 50.
    #[serde(default)]
    pub resolution: Option<usize>,
    /// Synthetic noise wrapper applied on top of the base problem.
    #[serde(default)]
    pub noise: Option<NoiseSpec>,
    /// Overrides the problem's native direction.
    #[serde(default)]
    pub direction: Option<Direction>,
}

/// Engine knobs; every field optional, falling back to the engine defaults.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SaneSection {
    pub iterations: Option<usize>,
    pub check_interval: Option<usize>,
    pub init_count: Option<usize>,
    pub init_method: Option<InitMethod>,
    /// 1-based iteration at which the schedule flips to the explore phase.
    pub switch_at: Option<usize>,
    /// Explicit per-iteration explore flags; wins over `switch_at`.
    pub switch_schedule: Option<Vec<bool>>,
    pub mode: Option<Mode>,
    pub gate_mode: Option<GateMode>,
    pub kernel: Option<KernelSpec>,
    pub gate_kernel: Option<KernelSpec>,
    pub acq: Option<AcqConfig>,
    pub fit: Option<FitConfig>,
    pub refit_every: Option<usize>,
    pub seed: Option<u64>,
    pub record_details: Option<bool>,
}

/// Everything a command needs to execute a configured experiment.
pub struct Experiment {
    pub bx: Box<dyn BlackBox>,
    pub space: ParameterSpace,
    pub cfg: SaneConfig,
    /// Noise-free values aligned with the engine's candidate order.
    pub truth: Option<Vec<f64>>,
    /// Known optima, normalized coordinates.
    pub optima_norm: Option<Vec<Vec<f64>>>,
    pub labels_path: Option<PathBuf>,
    pub out_dir: PathBuf,
    pub kind: ProblemKind,
}

impl Experiment {
    pub fn kind_name(&self) -> &'static str {
        match self.kind {
            ProblemKind::BraninNeg => "branin-neg",
            ProblemKind::Grid => "grid",
        }
    }
}

pub fn parse_config(text: &str) -> Result<RunConfigFile, CliError> {
    let mut de = serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(&mut de)
        .map_err(|err| CliError::Config(format!("config key `{}`: {}", err.path(), err.inner())))
}

pub fn load_config(path: &Path) -> Result<RunConfigFile, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|err| CliError::Config(format!("cannot read config {}: {err}", path.display())))?;
    parse_config(&text)
}

fn resolve_relative(base_config: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base_config.parent().unwrap_or(Path::new(".")).join(p)
    }
}

fn build_sane_config(section: &SaneSection, direction: Direction) -> Result<SaneConfig, CliError> {
    let mut cfg = SaneConfig::default();
    if let Some(v) = section.iterations {
        cfg.iterations = v;
    }
    if let Some(v) = section.check_interval {
        cfg.check_interval = v;
    }
    if let Some(v) = section.init_count {
        cfg.init_count = v;
    }
    if let Some(v) = section.init_method {
        cfg.init_method = v;
    }
    if let Some(v) = section.mode {
        cfg.mode = v;
    }
    if let Some(v) = section.gate_mode {
        cfg.gate_mode = v;
    }
    if let Some(v) = section.kernel {
        cfg.kernel = v;
    }
    if let Some(v) = section.gate_kernel {
        cfg.gate_kernel = v;
    }
    if let Some(v) = &section.acq {
        cfg.acq = v.clone();
    }
    if let Some(v) = &section.fit {
        cfg.fit = v.clone();
    }
    if let Some(v) = section.refit_every {
        cfg.refit_every = v;
    }
    if let Some(v) = section.seed {
        cfg.seed = v;
    }
    if let Some(v) = section.record_details {
        cfg.record_details = v;
    }
    cfg.direction = direction;
    cfg.switch_schedule = match (&section.switch_schedule, section.switch_at) {
        (Some(explicit), _) => explicit.clone(),
        (None, Some(at)) => switch_schedule_at(cfg.iterations, at),
        // Default: exploit the first half, explore the rest.
        (None, None) => switch_schedule_at(cfg.iterations, cfg.iterations / 2 + 1),
    };
    Ok(cfg)
}

/// Builds the runnable experiment out of a parsed config file. Ground truth
/// (the noise-free surface) is computed from the base problem before any
/// noise wrapper is applied.
pub fn build_experiment(file: &RunConfigFile, config_path: &Path) -> Result<Experiment, CliError> {
    let problem = &file.problem;
    let (base, space): (Box<dyn BlackBox>, ParameterSpace) = match problem.kind {
        ProblemKind::BraninNeg => {
            if problem.path.is_some() {
                return Err(CliError::Config(
                    "config key `problem.path`: only valid for grid problems".into(),
                ));
            }
            let resolution = problem.resolution.unwrap_or(50);
            let space = BraninBox::space(resolution)
                .map_err(|err| CliError::Config(format!("config key `problem.resolution`: {err}")))?;
            (Box::new(BraninBox::maximize_negated()), space)
        }
        ProblemKind::Grid => {
            if problem.resolution.is_some() {
                return Err(CliError::Config(
                    "config key `problem.resolution`: grid datasets carry their own lattice".into(),
                ));
            }
            let Some(path) = &problem.path else {
                return Err(CliError::Config(
                    "config key `problem.path`: required for grid problems".into(),
                ));
            };
            let path = resolve_relative(config_path, path);
            let grid = load_grid_blackbox(&path)
                .map_err(|err| CliError::Config(format!("config key `problem.path`: {err}")))?;
            let space = grid
                .space()
                .map_err(|err| CliError::Config(format!("config key `problem.path`: {err}")))?;
            (Box::new(grid), space)
        }
    };

    let direction = problem.direction.unwrap_or_else(|| base.direction());
    let cfg = build_sane_config(&file.sane, direction)?;

    let (_, candidates_orig) =
        engine::candidate_grid(&space, base.as_ref()).map_err(CliError::from)?;
    let truth = candidates_orig
        .iter()
        .map(|x| base.eval(x))
        .collect::<Result<Vec<f64>, _>>()
        .map_err(|err| CliError::Config(format!("config key `problem`: {err}")))?;

    let optima_norm = match problem.kind {
        ProblemKind::BraninNeg => Some(
            BRANIN_OPTIMA
                .iter()
                .map(|x| space.to_norm(x))
                .collect::<Result<Vec<_>, _>>()
                .map_err(|err| CliError::Runtime(err.to_string()))?,
        ),
        ProblemKind::Grid => None,
    };

    let bx: Box<dyn BlackBox> = match &problem.noise {
        Some(spec) => {
            let wrapped = with_noise(base, spec.clone(), space.clone())
                .map_err(|err| CliError::Config(format!("config key `problem.noise`: {err}")))?;
            Box::new(wrapped)
        }
        None => base,
    };

    let labels_path = file
        .labels
        .as_ref()
        .map(|p| resolve_relative(config_path, p));
    let out_dir = file.out.clone().unwrap_or_else(|| PathBuf::from("sane-out"));

    Ok(Experiment {
        bx,
        space,
        cfg,
        truth: Some(truth),
        optima_norm,
        labels_path,
        out_dir,
        kind: problem.kind,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_branin_config_parses() {
        let file = parse_config(r#"{"problem": {"kind": "branin-neg"}}"#).unwrap();
        let exp = build_experiment(&file, Path::new("config.json")).unwrap();
        assert_eq!(exp.kind_name(), "branin-neg");
        assert_eq!(exp.space.dim(), 2);
        assert_eq!(exp.cfg.direction, Direction::Maximize);
        assert_eq!(exp.truth.as_ref().unwrap().len(), 2500);
        assert_eq!(exp.optima_norm.as_ref().unwrap().len(), 3);
    }

    #[test]
    fn unknown_key_is_named() {
        let err = parse_config(r#"{"problem": {"kind": "branin-neg", "bogus": 1}}"#).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("bogus"), "message was: {msg}");
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn negative_iterations_names_the_key() {
        let err = parse_config(
            r#"{"problem": {"kind": "branin-neg"}, "sane": {"iterations": -5}}"#,
        )
        .unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("iterations"), "message was: {msg}");
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn grid_requires_path() {
        let file = parse_config(r#"{"problem": {"kind": "grid"}}"#).unwrap();
        let Err(err) = build_experiment(&file, Path::new("config.json")) else {
            panic!("expected a config error");
        };
        assert!(err.to_string().contains("problem.path"));
    }

    #[test]
    fn switch_at_builds_schedule() {
        let file = parse_config(
            r#"{"problem": {"kind": "branin-neg"}, "sane": {"iterations": 6, "switch_at": 4}}"#,
        )
        .unwrap();
        let exp = build_experiment(&file, Path::new("config.json")).unwrap();
        assert_eq!(
            exp.cfg.switch_schedule,
            vec![false, false, false, true, true, true]
        );
    }

    #[test]
    fn noise_spec_wraps_problem() {
        let file = parse_config(
            r#"{"problem": {"kind": "branin-neg", "resolution": 10,
                "noise": {"global_sigma": 0.5, "seed": 3}}}"#,
        )
        .unwrap();
        let exp = build_experiment(&file, Path::new("config.json")).unwrap();
        // Truth stays noise-free: the wrapped box differs from it somewhere.
        let truth = exp.truth.as_ref().unwrap();
        let (_, orig) = engine::candidate_grid(&exp.space, exp.bx.as_ref()).unwrap();
        let noisy: Vec<f64> = orig.iter().map(|x| exp.bx.eval(x).unwrap()).collect();
        assert!(truth.iter().zip(&noisy).any(|(t, n)| t != n));
    }
}

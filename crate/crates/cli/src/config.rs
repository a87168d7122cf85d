use std::fmt;
use std::path::{Path, PathBuf};

use clap::ValueEnum;
use listlab_core::geometry::DEFAULT_NODE_BUDGET;
use listlab_core::{Attack, ChannelParams};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    SphericalLs,
    CaLs,
    IcLs,
    IcGoodness,
    Awgn,
    HaarSiegel,
    HaarPoisson,
    BoundsCalc,
    ReductionCheck,
}

impl Experiment {
    pub const ALL: [Experiment; 9] = [
        Experiment::SphericalLs,
        Experiment::CaLs,
        Experiment::IcLs,
        Experiment::IcGoodness,
        Experiment::Awgn,
        Experiment::HaarSiegel,
        Experiment::HaarPoisson,
        Experiment::BoundsCalc,
        Experiment::ReductionCheck,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::SphericalLs => "spherical-ls",
            Experiment::CaLs => "ca-ls",
            Experiment::IcLs => "ic-ls",
            Experiment::IcGoodness => "ic-goodness",
            Experiment::Awgn => "awgn",
            Experiment::HaarSiegel => "haar-siegel",
            Experiment::HaarPoisson => "haar-poisson",
            Experiment::BoundsCalc => "bounds-calc",
            Experiment::ReductionCheck => "reduction-check",
        }
    }

    fn default_budget(self) -> u64 {
        match self {
            Experiment::SphericalLs => 2000,
            _ => DEFAULT_NODE_BUDGET,
        }
    }

    fn default_alpha_factor(self) -> f64 {
        match self {
            Experiment::Awgn => 3.0,
            _ => 4.0,
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config file {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{origin}: {message}")]
    Parse { origin: String, message: String },
    #[error("field `{field}`: {message}")]
    Field { field: String, message: String },
    #[error("missing required field `{0}`")]
    Missing(&'static str),
}

fn field_error(field: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::Field {
        field: field.to_string(),
        message: message.into(),
    }
}

/// Every setting as it may appear in a config file, a flag or `--set`.
/// Integers are signed so that negative values reach validation and are
/// reported against their field.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartialConfig {
    pub experiment: Option<Experiment>,
    pub n: Option<i64>,
    #[serde(rename = "P")]
    pub power: Option<f64>,
    #[serde(rename = "N")]
    pub noise: Option<f64>,
    pub delta: Option<f64>,
    pub seed: Option<u64>,
    pub trials: Option<i64>,
    pub budget: Option<i64>,
    pub workers: Option<i64>,
    pub out: Option<String>,
    /// Period `α` of the constellation as a multiple of `√(nN)`.
    pub alpha_factor: Option<f64>,
    /// One attack name, or `all`.
    pub attack: Option<String>,
    /// `exact` or `net`.
    pub search: Option<String>,
    pub omega: Option<f64>,
    pub volume: Option<f64>,
    pub samples: Option<i64>,
    pub mc_trials: Option<i64>,
    pub resolution: Option<f64>,
    pub q: Option<i64>,
    /// `integer` or `hexagonal`.
    pub coarse: Option<String>,
    pub c1: Option<f64>,
    pub moment_fraction: Option<f64>,
    pub margin: Option<f64>,
    pub codewords: Option<i64>,
}

macro_rules! overlay_fields {
    ($base:ident, $top:ident, $($f:ident),*) => {
        $(
            if let Some(v) = $top.$f {
                if let Some(old) = &$base.$f {
                    if *old != v {
                        log::warn!(
                            "{} = {:?} from the command line overrides {:?} from the config file",
                            stringify!($f), v, old
                        );
                    }
                }
                $base.$f = Some(v);
            }
        )*
    };
}

impl PartialConfig {
    pub fn from_toml_str(text: &str, origin: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError::Parse {
            origin: origin.to_string(),
            message: e.to_string(),
        })
    }

    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml_str(&text, &path.display().to_string())
    }

    /// Parses one `key=value` assignment.  Bare words are taken as strings.
    pub fn from_assignment(assignment: &str) -> Result<Self, ConfigError> {
        let Some((key, value)) = assignment.split_once('=') else {
            return Err(ConfigError::Parse {
                origin: format!("--set {assignment}"),
                message: "expected key=value".into(),
            });
        };
        let (key, value) = (key.trim(), value.trim());
        let origin = format!("--set {assignment}");
        Self::from_toml_str(&format!("{key} = {value}"), &origin)
            .or_else(|_| Self::from_toml_str(&format!("{key} = {value:?}"), &origin))
    }

    /// Values present in `top` replace those in `self`; conflicts are logged.
    pub fn overlay(mut self, top: PartialConfig) -> PartialConfig {
        overlay_fields!(
            self,
            top,
            experiment,
            n,
            power,
            noise,
            delta,
            seed,
            trials,
            budget,
            workers,
            out,
            alpha_factor,
            attack,
            search,
            omega,
            volume,
            samples,
            mc_trials,
            resolution,
            q,
            coarse,
            c1,
            moment_fraction,
            margin,
            codewords
        );
        self
    }

    pub fn resolve(self) -> Result<ExperimentConfig, ConfigError> {
        ExperimentConfig::from_partial(self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IcSearchKind {
    Exact,
    Net,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CoarseKind {
    Integer,
    Hexagonal,
}

/// Experiment-specific settings, all with defaults.
#[derive(Debug, Clone, PartialEq)]
pub struct Knobs {
    pub alpha_factor: f64,
    /// `None` runs every attack.
    pub attack: Option<Attack>,
    pub search: IcSearchKind,
    pub omega: f64,
    pub volume: f64,
    pub samples: usize,
    pub mc_trials: u64,
    pub resolution: f64,
    pub q: Option<u64>,
    pub coarse: CoarseKind,
    pub c1: f64,
    pub moment_fraction: f64,
    pub margin: f64,
    pub codewords: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub experiment: Experiment,
    pub channel: ChannelParams,
    pub seed: u64,
    pub trials: u64,
    /// Node budget of exact searches, or attack centers for spherical codes.
    pub budget: u64,
    pub workers: usize,
    pub out: Option<PathBuf>,
    pub knobs: Knobs,
}

fn positive_int(field: &str, v: i64) -> Result<u64, ConfigError> {
    if v <= 0 {
        return Err(field_error(
            field,
            format!("must be a positive integer, got {v}"),
        ));
    }
    Ok(v as u64)
}

fn positive_real(field: &str, v: f64) -> Result<f64, ConfigError> {
    if !(v > 0.0) || !v.is_finite() {
        return Err(field_error(
            field,
            format!("must be a positive finite number, got {v}"),
        ));
    }
    Ok(v)
}

impl ExperimentConfig {
    fn from_partial(p: PartialConfig) -> Result<Self, ConfigError> {
        let experiment = p.experiment.ok_or(ConfigError::Missing("experiment"))?;
        let n = positive_int("n", p.n.ok_or(ConfigError::Missing("n"))?)? as usize;
        let power = positive_real("P", p.power.ok_or(ConfigError::Missing("P"))?)?;
        let noise = positive_real("N", p.noise.ok_or(ConfigError::Missing("N"))?)?;
        let delta = positive_real("delta", p.delta.ok_or(ConfigError::Missing("delta"))?)?;
        let seed = p.seed.ok_or(ConfigError::Missing("seed"))?;
        let trials = match p.trials {
            Some(t) if t < 0 => {
                return Err(field_error(
                    "trials",
                    format!("must be nonnegative, got {t}"),
                ))
            }
            Some(t) => t as u64,
            None => 1,
        };
        let budget = match p.budget {
            Some(b) => positive_int("budget", b)?,
            None => experiment.default_budget(),
        };
        let workers = match p.workers {
            Some(w) => positive_int("workers", w)? as usize,
            None => 1,
        };
        let channel = ChannelParams::new(n, power, noise, delta)
            .map_err(|e| field_error("channel", e.to_string()))?;

        let attack = match p.attack.as_deref() {
            None | Some("all") => None,
            Some(s) => Some(
                s.parse()
                    .map_err(|e: listlab_core::Error| field_error("attack", e.to_string()))?,
            ),
        };
        let search = match p.search.as_deref() {
            None | Some("exact") => IcSearchKind::Exact,
            Some("net") => IcSearchKind::Net,
            Some(s) => {
                return Err(field_error(
                    "search",
                    format!("expected `exact` or `net`, got {s:?}"),
                ))
            }
        };
        let coarse = match p.coarse.as_deref() {
            None | Some("integer") => CoarseKind::Integer,
            Some("hexagonal") if n == 2 => CoarseKind::Hexagonal,
            Some("hexagonal") => {
                return Err(field_error("coarse", "the hexagonal lattice needs n = 2"))
            }
            Some(s) => {
                return Err(field_error(
                    "coarse",
                    format!("expected `integer` or `hexagonal`, got {s:?}"),
                ))
            }
        };
        let omega = positive_real("omega", p.omega.unwrap_or(0.05))?;
        if omega >= 1.0 {
            return Err(field_error(
                "omega",
                format!("must lie in (0, 1), got {omega}"),
            ));
        }
        let moment_fraction = positive_real("moment_fraction", p.moment_fraction.unwrap_or(0.9))?;
        if moment_fraction >= 1.0 {
            return Err(field_error(
                "moment_fraction",
                format!("must lie in (0, 1), got {moment_fraction}"),
            ));
        }
        let margin = p
            .margin
            .unwrap_or(listlab_core::haar::DEFAULT_MOMENT_MARGIN);
        if !(margin >= 0.0) {
            return Err(field_error(
                "margin",
                format!("must be nonnegative, got {margin}"),
            ));
        }
        let knobs = Knobs {
            alpha_factor: positive_real(
                "alpha_factor",
                p.alpha_factor.unwrap_or(experiment.default_alpha_factor()),
            )?,
            attack,
            search,
            omega,
            volume: positive_real("volume", p.volume.unwrap_or(2.0))?,
            samples: positive_int("samples", p.samples.unwrap_or(1000))? as usize,
            mc_trials: positive_int("mc_trials", p.mc_trials.unwrap_or(10_000))?,
            resolution: positive_real("resolution", p.resolution.unwrap_or(0.05))?,
            q: p.q.map(|q| positive_int("q", q)).transpose()?,
            coarse,
            c1: positive_real("c1", p.c1.unwrap_or(4.0))?,
            moment_fraction,
            margin,
            codewords: positive_int("codewords", p.codewords.unwrap_or(6))? as usize,
        };
        Ok(ExperimentConfig {
            experiment,
            channel,
            seed,
            trials,
            budget,
            workers,
            out: p.out.map(PathBuf::from),
            knobs,
        })
    }

    /// The effective configuration as `# key = value` lines.  The worker
    /// count and output path are left out so that they cannot change the
    /// output bytes.
    pub fn echo(&self) -> String {
        let k = &self.knobs;
        let mut t = toml::Table::new();
        let mut put = |key: &str, v: toml::Value| {
            t.insert(key.to_string(), v);
        };
        put("experiment", self.experiment.name().into());
        put("n", (self.channel.n as i64).into());
        put("P", self.channel.power.into());
        put("N", self.channel.noise.into());
        put("delta", self.channel.delta.into());
        put(
            "seed",
            i64::try_from(self.seed)
                .map_or_else(|_| self.seed.to_string().into(), toml::Value::from),
        );
        put("trials", (self.trials as i64).into());
        put("budget", (self.budget as i64).into());
        put("alpha_factor", k.alpha_factor.into());
        put("attack", k.attack.map_or("all", Attack::name).into());
        put(
            "search",
            match k.search {
                IcSearchKind::Exact => "exact",
                IcSearchKind::Net => "net",
            }
            .into(),
        );
        put("omega", k.omega.into());
        put("volume", k.volume.into());
        put("samples", (k.samples as i64).into());
        put("mc_trials", (k.mc_trials as i64).into());
        put("resolution", k.resolution.into());
        if let Some(q) = k.q {
            put("q", (q as i64).into());
        }
        put(
            "coarse",
            match k.coarse {
                CoarseKind::Integer => "integer",
                CoarseKind::Hexagonal => "hexagonal",
            }
            .into(),
        );
        put("c1", k.c1.into());
        put("moment_fraction", k.moment_fraction.into());
        put("margin", k.margin.into());
        put("codewords", (k.codewords as i64).into());
        let body = toml::to_string(&t).expect("a flat table always serializes");
        body.lines().map(|l| format!("# {l}\n")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn minimal() -> PartialConfig {
        PartialConfig::from_toml_str(
            "experiment = \"bounds-calc\"\nn = 8\nP = 4.0\nN = 1.0\ndelta = 0.1\nseed = 7\n",
            "test",
        )
        .unwrap()
    }

    #[test]
    fn minimal_config_gets_defaults() {
        let cfg = minimal().resolve().unwrap();
        assert_eq!(cfg.trials, 1);
        assert_eq!(cfg.workers, 1);
        assert_eq!(cfg.budget, DEFAULT_NODE_BUDGET);
        assert_eq!(cfg.knobs.attack, None);
        let echo = cfg.echo();
        assert!(echo.lines().all(|l| l.starts_with("# ")));
        assert!(echo.contains("# experiment = \"bounds-calc\""));
        assert!(echo.contains("# omega = 0.05"));
        assert!(!echo.contains("workers"));
    }

    #[test]
    fn flags_override_file() {
        let flags = PartialConfig {
            n: Some(12),
            ..Default::default()
        };
        let cfg = minimal().overlay(flags).resolve().unwrap();
        assert_eq!(cfg.channel.n, 12);
        assert_eq!(cfg.channel.delta, 0.1);
    }

    #[test]
    fn negative_power_names_the_field() {
        let flags = PartialConfig {
            power: Some(-1.0),
            ..Default::default()
        };
        let err = minimal().overlay(flags).resolve().unwrap_err();
        assert!(
            matches!(&err, ConfigError::Field { field, .. } if field == "P"),
            "{err}"
        );
    }

    #[test]
    fn unknown_key_is_rejected_with_location() {
        let err = PartialConfig::from_toml_str("n = 3\nbogus = 1\n", "cfg.toml").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("cfg.toml") && msg.contains("bogus"), "{msg}");
        assert!(msg.contains("line 2"), "{msg}");
    }

    #[test]
    fn type_errors_name_the_key() {
        let err = PartialConfig::from_toml_str("n = \"three\"\n", "cfg.toml").unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("line 1") && msg.contains("n"), "{msg}");
    }

    #[test]
    fn assignments_accept_bare_words() {
        let p = PartialConfig::from_assignment("attack=meb-refined").unwrap();
        assert_eq!(p.attack.as_deref(), Some("meb-refined"));
        let p = PartialConfig::from_assignment("omega = 0.1").unwrap();
        assert_eq!(p.omega, Some(0.1));
        assert!(PartialConfig::from_assignment("omega").is_err());
        assert!(PartialConfig::from_assignment("nonsense=1").is_err());
    }

    #[test]
    fn missing_and_invalid_fields() {
        let mut p = minimal();
        p.seed = None;
        assert!(matches!(p.resolve(), Err(ConfigError::Missing("seed"))));
        let mut p = minimal();
        p.attack = Some("sideways".into());
        assert!(matches!(p.resolve(), Err(ConfigError::Field { field, .. }) if field == "attack"));
        let mut p = minimal();
        p.trials = Some(-2);
        assert!(matches!(p.resolve(), Err(ConfigError::Field { field, .. }) if field == "trials"));
    }

    #[test]
    fn experiment_names_round_trip() {
        for e in Experiment::ALL {
            let p = PartialConfig::from_assignment(&format!("experiment={}", e.name())).unwrap();
            assert_eq!(p.experiment, Some(e));
            assert_eq!(Experiment::from_str(e.name(), false).unwrap(), e);
        }
    }
}

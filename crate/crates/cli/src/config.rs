//! TOML experiment configuration.
//!
//! Every number may be written as a TOML number or as a string such as
//! `"1/3"` or `"0.9"`; both are read as exact rationals (floats through
//! their shortest decimal form). Words and coordinates are 1-based.

use std::fmt;
use std::path::{Path, PathBuf};

use mrp_core::{parse_exact, Field, MapDefinition, MapKind, MapSystem, Sign, Word};
use num_rational::BigRational;
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("invalid config: {0}")]
    Syntax(String),
    #[error("invalid config: {0}")]
    Invalid(String),
}

/// A number written either as a TOML number or as a string.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Number {
    Int(i64),
    Float(f64),
    Text(String),
}

impl Number {
    pub fn exact(&self) -> Result<BigRational, ConfigError> {
        match self {
            Number::Int(i) => Ok(BigRational::from_integer((*i).into())),
            Number::Float(x) if x.is_finite() => Ok(<BigRational as Field>::from_f64(*x)),
            Number::Float(x) => Err(ConfigError::Invalid(format!("{x} is not a finite number"))),
            Number::Text(t) if t.trim().eq_ignore_ascii_case("inf") => {
                Err(ConfigError::Invalid("inf is only accepted where a tolerance is expected".into()))
            }
            Number::Text(t) => parse_exact(t).map_err(|e| ConfigError::Invalid(e.to_string())),
        }
    }

    pub fn value(&self) -> Result<f64, ConfigError> {
        match self {
            Number::Text(t) if t.trim().eq_ignore_ascii_case("inf") => Ok(f64::INFINITY),
            Number::Float(x) if x.is_infinite() => Ok(*x),
            _ => self.exact().map(|r| r.to_f64()),
        }
    }
}

impl fmt::Display for Number {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Number::Int(i) => write!(f, "{i}"),
            Number::Float(x) => write!(f, "{x}"),
            Number::Text(t) => f.write_str(t),
        }
    }
}

fn exact_all(v: &[Number], what: &str) -> Result<Vec<BigRational>, ConfigError> {
    v.iter().map(|n| n.exact().map_err(|e| ConfigError::Invalid(format!("{what}: {e}")))).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum MapConfig {
    Affine {
        matrix: Vec<Vec<Number>>,
        offset: Vec<Number>,
        /// Optional declared sign table, rows of `"+"`, `"-"`, `"0"`.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        types: Option<Vec<Vec<Sign>>>,
    },
    Moebius {
        a: Number,
        b: Number,
        c: Number,
        d: Number,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        types: Option<Vec<Vec<Sign>>>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub lo: Vec<Number>,
    pub hi: Vec<Number>,
    pub transition: Vec<Vec<Number>>,
    pub maps: Vec<MapConfig>,
}

impl SystemConfig {
    pub fn build(&self) -> Result<MapSystem, ConfigError> {
        let maps = self
            .maps
            .iter()
            .enumerate()
            .map(|(i, m)| {
                let what = format!("map {}", i + 1);
                let (kind, types) = match m {
                    MapConfig::Affine { matrix, offset, types } => (
                        MapKind::Affine {
                            matrix: matrix.iter().map(|r| exact_all(r, &what)).collect::<Result<_, _>>()?,
                            offset: exact_all(offset, &what)?,
                        },
                        types,
                    ),
                    MapConfig::Moebius { a, b, c, d, types } => {
                        let [a, b, c, d] = [a, b, c, d].map(|n| n.exact());
                        (MapKind::Moebius { a: a?, b: b?, c: c?, d: d? }, types)
                    }
                };
                let def = MapDefinition::new(kind);
                Ok(match types {
                    Some(t) => def.with_declared_types(t.clone()),
                    None => def,
                })
            })
            .collect::<Result<Vec<_>, ConfigError>>()?;
        let transition = self.transition.iter().map(|r| exact_all(r, "transition")).collect::<Result<Vec<_>, _>>()?;
        MapSystem::new(exact_all(&self.lo, "lo")?, exact_all(&self.hi, "hi")?, maps, transition)
            .map_err(|e| ConfigError::Invalid(format!("system: {e}")))
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModeConfig {
    /// Primitive when the matrix is primitive, else row-positive.
    #[default]
    Auto,
    Primitive,
    RowPositive,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SplitConfig {
    /// Witness words, 1-based (e.g. `"1,1"`). Without them the witness is searched.
    pub a: Option<String>,
    pub b: Option<String>,
    pub max_len: usize,
    pub horizon: usize,
    /// `0` checks every prefix; otherwise this many random words.
    pub horizon_samples: usize,
    pub cloud_size: usize,
    pub mode: ModeConfig,
}

impl Default for SplitConfig {
    fn default() -> Self {
        SplitConfig {
            a: None,
            b: None,
            max_len: 4,
            horizon: 10,
            horizon_samples: 0,
            cloud_size: 16,
            mode: ModeConfig::Auto,
        }
    }
}

impl SplitConfig {
    pub fn words(&self) -> Result<Option<(Word, Word)>, ConfigError> {
        match (&self.a, &self.b) {
            (Some(a), Some(b)) => {
                let parse =
                    |s: &str| s.parse::<Word>().map_err(|e| ConfigError::Invalid(format!("split word {s:?}: {e}")));
                Ok(Some((parse(a)?, parse(b)?)))
            }
            (None, None) => Ok(None),
            _ => Err(ConfigError::Invalid("split.a and split.b must be given together".into())),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OracleConfig {
    /// 1-based coordinates; empty means all.
    pub coordinates: Vec<usize>,
    pub ell_max: usize,
    pub geometric_ell_max: usize,
    pub grid_points: usize,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig { coordinates: Vec::new(), ell_max: 6, geometric_ell_max: 10, grid_points: 33 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum InitialConfig {
    /// Unit mass at one state (1-based) and point.
    Dirac { state: usize, point: Vec<Number> },
    /// Given per-state masses spread over a point cloud of the box.
    Cloud { masses: Vec<Number>, per_state: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OperatorConfig {
    pub n_steps: usize,
    pub particles: usize,
    pub target_samples: usize,
    pub target_depth: usize,
    /// Empty means a Dirac mass at the low corner in state 1, one at the
    /// high corner in the last state, and a stationary-mass cloud.
    pub initials: Vec<InitialConfig>,
}

impl Default for OperatorConfig {
    fn default() -> Self {
        OperatorConfig {
            n_steps: 30,
            particles: 20_000,
            target_samples: 20_000,
            target_depth: 64,
            initials: Vec::new(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SyncConfig {
    pub trials: usize,
    pub n_max: usize,
    pub cloud_size: usize,
}

impl Default for SyncConfig {
    fn default() -> Self {
        SyncConfig { trials: 100, n_max: 40, cloud_size: 256 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ContractConfig {
    pub trials: usize,
    pub n_max: usize,
}

impl Default for ContractConfig {
    fn default() -> Self {
        ContractConfig { trials: 20, n_max: 30 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct WeakHypConfig {
    pub trials: usize,
    pub depth: usize,
    /// A number, or `"inf"`.
    pub tol: Number,
}

impl Default for WeakHypConfig {
    fn default() -> Self {
        WeakHypConfig { trials: 10_000, depth: 40, tol: Number::Text("1e-9".into()) }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CodingConfig {
    /// Periodic patterns (1-based), each repeated to `depth` symbols.
    pub patterns: Vec<String>,
    pub depth: usize,
    pub invariance_samples: usize,
    pub invariance_depth: usize,
}

impl Default for CodingConfig {
    fn default() -> Self {
        CodingConfig { patterns: Vec::new(), depth: 40, invariance_samples: 1000, invariance_depth: 30 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum PhiConfig {
    Coordinate { s: usize },
    CoordinateSquared { s: usize },
    Product { s: usize, t: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ErgodicConfig {
    /// Starting points; empty means the low and high corners of the box.
    pub starts: Vec<Vec<Number>>,
    pub phi: PhiConfig,
    pub n: usize,
    pub reference_samples: usize,
}

impl Default for ErgodicConfig {
    fn default() -> Self {
        ErgodicConfig {
            starts: Vec::new(),
            phi: PhiConfig::Coordinate { s: 1 },
            n: 1_000_000,
            reference_samples: 20_000,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    pub system: SystemConfig,
    #[serde(default)]
    pub split: SplitConfig,
    #[serde(default)]
    pub oracle: OracleConfig,
    #[serde(default)]
    pub operator: OperatorConfig,
    #[serde(default)]
    pub sync: SyncConfig,
    #[serde(default)]
    pub contract: ContractConfig,
    #[serde(default, rename = "weak-hyp")]
    pub weak_hyp: WeakHypConfig,
    #[serde(default)]
    pub coding: CodingConfig,
    #[serde(default)]
    pub ergodic: ErgodicConfig,
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| ConfigError::Syntax(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read { path: path.into(), source })?;
        Self::parse(&text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
        [system]
        lo = [0]
        hi = ["1"]
        transition = [["1/2", 0.5], [0.5, "1/2"]]
        maps = [
            { kind = "affine", matrix = [["1/3"]], offset = [0] },
            { kind = "moebius", a = 1, b = 2, c = 1, d = 3 },
        ]
    "#;

    #[test]
    fn numbers_are_exact() {
        assert_eq!(Number::Float(0.1).exact().unwrap(), parse_exact("1/10").unwrap());
        assert_eq!(Number::Text("1/3".into()).exact().unwrap(), parse_exact("1/3").unwrap());
        assert_eq!(Number::Int(-2).exact().unwrap(), parse_exact("-2").unwrap());
        assert_eq!(Number::Text("inf".into()).value().unwrap(), f64::INFINITY);
        assert!(Number::Text("inf".into()).exact().is_err());
    }

    #[test]
    fn minimal_config_uses_defaults() {
        let cfg = ExperimentConfig::parse(MINIMAL).unwrap();
        assert_eq!(cfg.seed, 0);
        assert_eq!(cfg.oracle, OracleConfig::default());
        let sys = cfg.system.build().unwrap();
        assert_eq!(sys.k(), 2);
        assert!(!sys.all_maps_affine());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let bad = format!("{MINIMAL}\n[sync]\ntrails = 3\n");
        assert!(matches!(ExperimentConfig::parse(&bad), Err(ConfigError::Syntax(_))));
        let bad = format!("colour = 1\n{MINIMAL}");
        assert!(matches!(ExperimentConfig::parse(&bad), Err(ConfigError::Syntax(_))));
    }

    #[test]
    fn invalid_systems_are_reported() {
        let bad = MINIMAL.replace("[0.5, \"1/2\"]", "[0.5, \"0.4\"]");
        let err = ExperimentConfig::parse(&bad).unwrap().system.build().unwrap_err();
        assert!(err.to_string().contains("row 2"), "{err}");
        let bad = MINIMAL.replace("offset = [0]", "offset = [\"0.9\"]");
        let err = ExperimentConfig::parse(&bad).unwrap().system.build().unwrap_err();
        assert!(err.to_string().contains("map 1"), "{err}");
    }

    #[test]
    fn split_words_come_in_pairs() {
        let cfg = SplitConfig { a: Some("1,1".into()), ..Default::default() };
        assert!(cfg.words().is_err());
        let cfg = SplitConfig { a: Some("1,1".into()), b: Some("2,1".into()), ..Default::default() };
        assert_eq!(cfg.words().unwrap(), Some((Word(vec![0, 0]), Word(vec![1, 0]))));
    }
}

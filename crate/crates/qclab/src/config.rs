//! TOML experiment configuration.

use std::fmt;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("{field}: {message}")]
    Field { field: String, message: String },
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("{0}")]
    Parse(String),
}

fn field_err(field: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::Field {
        field: field.to_string(),
        message: message.into(),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    MultiplierCheck,
    ConstantMuExact,
    NeumannRate,
    RegularityTransfer,
    IteratesGrowth,
    CharacteristicFunctionNorm,
    CommutatorCompactness,
    ReflectionSmoothing,
    KernelIdentity,
    BetaPipeline,
    FlatnessBound,
    RiemannKellogg,
    StoilowPipeline,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 13] = [
        Self::MultiplierCheck,
        Self::ConstantMuExact,
        Self::NeumannRate,
        Self::RegularityTransfer,
        Self::IteratesGrowth,
        Self::CharacteristicFunctionNorm,
        Self::CommutatorCompactness,
        Self::ReflectionSmoothing,
        Self::KernelIdentity,
        Self::BetaPipeline,
        Self::FlatnessBound,
        Self::RiemannKellogg,
        Self::StoilowPipeline,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::MultiplierCheck => "multiplier-check",
            Self::ConstantMuExact => "constant-mu-exact",
            Self::NeumannRate => "neumann-rate",
            Self::RegularityTransfer => "regularity-transfer",
            Self::IteratesGrowth => "iterates-growth",
            Self::CharacteristicFunctionNorm => "characteristic-function-norm",
            Self::CommutatorCompactness => "commutator-compactness",
            Self::ReflectionSmoothing => "reflection-smoothing",
            Self::KernelIdentity => "kernel-identity",
            Self::BetaPipeline => "beta-pipeline",
            Self::FlatnessBound => "flatness-bound",
            Self::RiemannKellogg => "riemann-kellogg",
            Self::StoilowPipeline => "stoilow-pipeline",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.name() == name)
    }

    /// Grid ladder used when the config gives none.
    pub fn default_grids(self) -> Vec<usize> {
        match self {
            Self::MultiplierCheck => vec![512],
            Self::ConstantMuExact | Self::StoilowPipeline => vec![256, 512],
            Self::NeumannRate => vec![256],
            Self::RegularityTransfer | Self::CharacteristicFunctionNorm | Self::ReflectionSmoothing => vec![128, 256, 512],
            Self::IteratesGrowth => vec![64],
            Self::CommutatorCompactness => vec![32, 64, 128],
            Self::KernelIdentity => vec![256],
            Self::BetaPipeline | Self::FlatnessBound => vec![1024],
            Self::RiemannKellogg => vec![1024],
        }
    }

    /// Number of grids a refinement study needs; 1 for single-grid runs.
    pub fn ladder_len(self) -> usize {
        self.default_grids().len()
    }

    pub fn randomized(self) -> bool {
        matches!(
            self,
            Self::MultiplierCheck
                | Self::IteratesGrowth
                | Self::CommutatorCompactness
                | Self::KernelIdentity
                | Self::FlatnessBound
                | Self::RiemannKellogg
                | Self::RegularityTransfer
        )
    }

    pub fn default_domain(self) -> DomainSpec {
        match self {
            Self::IteratesGrowth
            | Self::CharacteristicFunctionNorm
            | Self::ReflectionSmoothing
            | Self::KernelIdentity
            | Self::RiemannKellogg => DomainSpec::PerturbedDisc { eps: 0.1, k: 2 },
            _ => DomainSpec::Disc,
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DomainSpec {
    Disc,
    /// Boundary w(t) = e^{it} + ε e^{ikt}.
    PerturbedDisc { eps: f64, k: u32 },
    /// CSV of polygon vertices "x,y", one per line.
    Polygon { path: PathBuf },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MuSpec {
    /// k·χ_Ω, mollified across 4h.
    Constant { k: f64 },
    /// Smooth bump with sup k.
    Bump { k: f64 },
    /// Random band-limited field masked to Ω, scaled to sup k.
    Synthesized { k: f64, modes: u32 },
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Indices {
    pub s: Option<f64>,
    pub p: Option<f64>,
    pub q: Option<f64>,
    pub m: Option<u32>,
    pub sigma: Option<f64>,
    pub eta: Option<f64>,
    pub rho: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    #[serde(default = "default_solver_tol")]
    pub solver: f64,
    #[serde(default = "default_max_iter")]
    pub max_iter: usize,
}

fn default_solver_tol() -> f64 {
    1e-12
}

fn default_max_iter() -> usize {
    300
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            solver: default_solver_tol(),
            max_iter: default_max_iter(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    #[serde(default)]
    pub grids: Vec<usize>,
    pub domain: Option<DomainSpec>,
    pub mu: Option<MuSpec>,
    #[serde(default)]
    pub indices: Indices,
    #[serde(default)]
    pub tolerances: Tolerances,
    pub output: Option<PathBuf>,
    pub seed: Option<u64>,
}

impl ExperimentConfig {
    /// Defaults for `kind`, seeded with 1.
    pub fn for_kind(kind: ExperimentKind) -> Self {
        Self {
            experiment: kind,
            grids: Vec::new(),
            domain: None,
            mu: None,
            indices: Indices::default(),
            tolerances: Tolerances::default(),
            output: None,
            seed: Some(1),
        }
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        // name the field for an unknown experiment id rather than echoing serde
        if let Ok(raw) = text.parse::<toml::Table>() {
            if let Some(id) = raw.get("experiment").and_then(|v| v.as_str()) {
                if ExperimentKind::from_name(id).is_none() {
                    let known: Vec<&str> = ExperimentKind::ALL.iter().map(|k| k.name()).collect();
                    return Err(field_err("experiment", format!("unknown id '{id}' (expected one of {})", known.join(", "))));
                }
            }
        }
        let cfg: Self = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text)
    }

    pub fn grids(&self) -> Vec<usize> {
        if self.grids.is_empty() {
            self.experiment.default_grids()
        } else {
            self.grids.clone()
        }
    }

    /// Replace the ladder by one ending at `n`.
    pub fn set_finest_grid(&mut self, n: usize) {
        let len = self.experiment.ladder_len();
        self.grids = (0..len).rev().map(|k| n >> k).collect();
    }

    pub fn domain(&self) -> DomainSpec {
        self.domain.clone().unwrap_or_else(|| self.experiment.default_domain())
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let kind = self.experiment;
        let grids = self.grids();
        if grids.len() < kind.ladder_len() {
            return Err(field_err("grids", format!("{kind} needs {} grid sizes", kind.ladder_len())));
        }
        if let Some(&g) = grids.iter().find(|&&g| !g.is_power_of_two() || g < 8) {
            return Err(field_err("grids", format!("{g} is not a power of two >= 8")));
        }
        if grids.windows(2).any(|w| w[1] <= w[0]) {
            return Err(field_err("grids", "sizes must increase"));
        }
        if kind.randomized() && self.seed.is_none() {
            return Err(field_err("seed", format!("{kind} draws random probes and needs a seed")));
        }
        let ix = &self.indices;
        if let Some(p) = ix.p {
            if !(p >= 1.0 && p.is_finite()) {
                return Err(field_err("indices.p", "need 1 <= p < inf"));
            }
        }
        if let (Some(q), Some(p)) = (ix.q, ix.p) {
            if q > p {
                return Err(field_err("indices.q", "the local estimator needs q <= p"));
            }
        }
        if let Some(rho) = ix.rho {
            if !(rho > 0.0 && rho < 1.0) {
                return Err(field_err("indices.rho", "need 0 < rho < 1"));
            }
        }
        if let Some(s) = ix.s {
            if !(s > 0.0) || s.fract() == 0.0 {
                return Err(field_err("indices.s", "need positive non-integer s"));
            }
            if kind == ExperimentKind::RegularityTransfer && s * ix.p.unwrap_or(8.0) <= 2.0 {
                return Err(field_err("indices.s", "regularity transfer needs s*p > 2"));
            }
        }
        if let Some(sigma) = ix.sigma {
            if !(sigma > 0.0 && sigma <= 1.0) {
                return Err(field_err("indices.sigma", "need 0 < sigma <= 1"));
            }
        }
        if let Some(eta) = ix.eta {
            if !(eta > 0.0) {
                return Err(field_err("indices.eta", "need eta > 0"));
            }
        }
        if let Some(mu) = &self.mu {
            let k = match mu {
                MuSpec::Constant { k } | MuSpec::Bump { k } | MuSpec::Synthesized { k, .. } => *k,
            };
            if !(k.abs() < 1.0) {
                return Err(field_err("mu.k", "need |k| < 1"));
            }
        }
        if let DomainSpec::PerturbedDisc { eps, k } = self.domain() {
            if !(eps >= 0.0 && eps * (k as f64) < 1.0) {
                return Err(field_err("domain.eps", "need 0 <= eps*k < 1 for a Jordan curve"));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_minimal_and_full() {
        let c = ExperimentConfig::parse("experiment = \"beta-pipeline\"").unwrap();
        assert_eq!(c.experiment, ExperimentKind::BetaPipeline);
        assert_eq!(c.grids(), vec![1024]);
        let text = r#"
experiment = "constant-mu-exact"
grids = [128, 256]
seed = 4
[domain]
kind = "disc"
[mu]
kind = "constant"
k = 0.3
[indices]
p = 4.0
"#;
        let c = ExperimentConfig::parse(text).unwrap();
        assert_eq!(c.mu, Some(MuSpec::Constant { k: 0.3 }));
        assert_eq!(c.indices.p, Some(4.0));
    }

    #[test]
    fn errors_name_the_field() {
        let e = ExperimentConfig::parse("experiment = \"warp-drive\"").unwrap_err();
        assert!(e.to_string().starts_with("experiment:"));
        let e = ExperimentConfig::parse("experiment = \"multiplier-check\"").unwrap_err();
        assert!(e.to_string().starts_with("seed:"));
        let e = ExperimentConfig::parse("experiment = \"beta-pipeline\"\ngrids = [100]").unwrap_err();
        assert!(e.to_string().starts_with("grids:"));
        let e = ExperimentConfig::parse("experiment = \"beta-pipeline\"\n[indices]\nrho = 2.0").unwrap_err();
        assert!(e.to_string().starts_with("indices.rho:"));
        let e = ExperimentConfig::parse("experiment = \"regularity-transfer\"\nseed = 1\n[indices]\ns = 0.2\np = 4.0").unwrap_err();
        assert!(e.to_string().starts_with("indices.s:"));
    }

    #[test]
    fn finest_grid_override() {
        let mut c = ExperimentConfig::for_kind(ExperimentKind::ReflectionSmoothing);
        c.set_finest_grid(256);
        assert_eq!(c.grids(), vec![64, 128, 256]);
        let mut c = ExperimentConfig::for_kind(ExperimentKind::NeumannRate);
        c.set_finest_grid(128);
        assert_eq!(c.grids(), vec![128]);
    }
}

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{ErrorClass, InputError};
use crate::domain::{
    DomainError, GeoLevel, IterLevel, PopulationGroupLevel, Region, Thresholds,
    DEFAULT_RACE_MULTIPLICITY,
};
use crate::planner::MAX_RACE_MULTIPLICITY;

/// Relative tolerance for "per-level budgets sum to the declared total".
const TOTAL_TOLERANCE: f64 = 1e-9;

fn default_multiplicity() -> usize {
    DEFAULT_RACE_MULTIPLICITY
}

/// Paths are resolved against the directory holding the config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InputPaths {
    pub households: PathBuf,
    pub t01001: PathBuf,
    pub geo: PathBuf,
    pub iterations: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub inclusion: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LevelConfig {
    pub geo_level: GeoLevel,
    pub iter_level: IterLevel,
    pub rho_ht: f64,
    pub rho_t: f64,
    // unset thresholds fall back to Thresholds::PLACEHOLDER
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta1: Option<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta2: Option<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta3: Option<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub psi1: Option<i64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub region: Region,
    pub seed: u64,
    #[serde(default = "default_multiplicity")]
    pub race_multiplicity: usize,
    /// Declared total ρ under add/remove neighbours.
    pub total_rho: f64,
    pub inputs: InputPaths,
    #[serde(default)]
    pub levels: Vec<LevelConfig>,
}

impl RunConfig {
    pub fn from_toml(text: &str, file: &str) -> Result<Self, InputError> {
        toml::from_str(text).map_err(|e| {
            let mut err = InputError::new(ErrorClass::Config, file, e.message().to_owned());
            if let Some(span) = e.span() {
                err = err.at(text[..span.start].matches('\n').count() as u64 + 1);
            }
            err
        })
    }

    /// Reads a config file and resolves its input paths.
    pub fn load(path: &Path) -> Result<Self, InputError> {
        let file = path.display().to_string();
        let text = std::fs::read_to_string(path)
            .map_err(|e| InputError::new(ErrorClass::Io, &file, e.to_string()))?;
        let mut cfg = Self::from_toml(&text, &file)?;
        cfg.resolve_paths(path.parent().unwrap_or(Path::new(".")));
        Ok(cfg)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        let i = &mut self.inputs;
        for p in [&mut i.households, &mut i.t01001, &mut i.geo, &mut i.iterations]
            .into_iter()
            .chain(i.inclusion.as_mut())
        {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Checks everything that does not need the input files and builds the
    /// level sequence (indices 1..=n in config order).
    pub fn levels(&self, file: &str) -> Result<Vec<PopulationGroupLevel>, Vec<InputError>> {
        let mut errors = Vec::new();
        let cfg_err = |field: String, msg: String| InputError::new(ErrorClass::Config, file, msg).field(field);

        if !(1..=MAX_RACE_MULTIPLICITY).contains(&self.race_multiplicity) {
            errors.push(cfg_err(
                "race_multiplicity".into(),
                format!("must be in 1..={MAX_RACE_MULTIPLICITY}, got {}", self.race_multiplicity),
            ));
        }
        if !(self.total_rho.is_finite() && self.total_rho > 0.0) {
            errors.push(cfg_err("total_rho".into(), format!("must be positive, got {}", self.total_rho)));
        }

        let mut seen = BTreeSet::new();
        let mut levels = Vec::with_capacity(self.levels.len());
        for (i, l) in self.levels.iter().enumerate() {
            let p = Thresholds::PLACEHOLDER;
            let at = |f: &str| format!("levels[{i}].{f}");
            if !seen.insert((l.geo_level, l.iter_level)) {
                errors.push(cfg_err(at("geo_level"), format!("duplicate level {}-{}", l.geo_level, l.iter_level)));
            }
            let th = Thresholds::new(
                l.theta1.unwrap_or(p.theta1),
                l.theta2.unwrap_or(p.theta2),
                l.theta3.unwrap_or(p.theta3),
                l.psi1.unwrap_or(p.psi1),
            );
            let th = match th {
                Ok(th) => th,
                Err(e) => {
                    errors.push(cfg_err(at("theta1"), e.to_string()));
                    continue;
                }
            };
            match PopulationGroupLevel::new(i + 1, l.geo_level, l.iter_level, l.rho_ht, l.rho_t, th) {
                Ok(level) => levels.push(level),
                Err(e) => {
                    let field = match e {
                        DomainError::NonPositiveRho(r) if r == l.rho_ht => at("rho_ht"),
                        DomainError::NonPositiveRho(_) => at("rho_t"),
                        _ => at("iter_level"),
                    };
                    errors.push(cfg_err(field, e.to_string()));
                }
            }
        }

        if errors.is_empty() {
            let sum: f64 = levels.iter().map(|l| l.rho_ht + l.rho_t).sum();
            if (sum - self.total_rho).abs() > TOTAL_TOLERANCE * self.total_rho.max(1.0) {
                errors.push(
                    InputError::new(
                        ErrorClass::Budget,
                        file,
                        format!("per-level budgets sum to {sum}, declared total is {}", self.total_rho),
                    )
                    .field("total_rho"),
                );
            }
        }
        if errors.is_empty() {
            Ok(levels)
        } else {
            Err(errors)
        }
    }
}

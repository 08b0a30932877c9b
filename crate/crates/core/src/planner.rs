//! Analytic MOE ↔ ρ conversions and what-if evaluation of budget plans.
//!
//! A level release with budget ρ and stability `s` adds `N_Z(s/(2ρ))` noise
//! to each cell; the 95% margin of error is taken as `⌊z·σ⌋`.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::domain::{GeoLevel, IterLevel, TableClass};
use crate::mapper::stability_for_multiplicity;

pub const DEFAULT_CONFIDENCE: f64 = 0.95;
pub const MAX_RACE_MULTIPLICITY: usize = 8;

// ⌊·⌋ guard: rho_from_moe(m) round-trips to exactly m in real arithmetic,
// which f64 can land a hair below.
const FLOOR_EPS: f64 = 1e-9;

/// A request or argument problem tied to a field path such as
/// `levels[2].tenure.moe`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldError {
    pub field: String,
    pub message: String,
}

impl FieldError {
    fn new(field: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            field: field.into(),
            message: message.into(),
        }
    }
}

impl std::fmt::Display for FieldError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

/// Two-sided critical value `Φ⁻¹((1+confidence)/2)`.
pub fn z_for_confidence(confidence: f64) -> Result<f64, FieldError> {
    if !(confidence > 0.0 && confidence < 1.0) {
        return Err(FieldError::new("confidence", format!("must lie in (0, 1), got {confidence}")));
    }
    let n = Normal::standard();
    Ok(n.inverse_cdf((1.0 + confidence) / 2.0))
}

/// `⌊z·√(s/(2ρ))⌋`.
pub fn moe_from_rho(rho: f64, s: usize, z: f64) -> Result<u64, FieldError> {
    if !(rho.is_finite() && rho > 0.0) {
        return Err(FieldError::new("rho", format!("must be positive and finite, got {rho}")));
    }
    if s == 0 {
        return Err(FieldError::new("stability", "must be at least 1"));
    }
    let moe = z * (s as f64 / (2.0 * rho)).sqrt();
    Ok((moe + FLOOR_EPS).floor() as u64)
}

/// `s·z²/(2·moe²)`, the smallest level budget whose MOE is at most `moe`.
pub fn rho_from_moe(moe: u64, s: usize, z: f64) -> Result<f64, FieldError> {
    if moe < 1 {
        return Err(FieldError::new("moe", "must be at least 1"));
    }
    if s == 0 {
        return Err(FieldError::new("stability", "must be at least 1"));
    }
    let m = moe as f64;
    Ok(s as f64 * z * z / (2.0 * m * m))
}

/// Per-class input: exactly one of a MOE target or a budget.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Target {
    Moe(u64),
    Rho(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanLevel {
    pub geo_level: GeoLevel,
    pub iter_level: IterLevel,
    pub household_type: Target,
    pub tenure: Target,
}

fn default_confidence() -> f64 {
    DEFAULT_CONFIDENCE
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanRequest {
    pub levels: Vec<PlanLevel>,
    pub race_multiplicity: usize,
    #[serde(default = "default_confidence")]
    pub confidence: f64,
}

/// Which formula produced a number.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Input,
    RhoFromMoe,
    MoeFromRho,
    DoubledForBounded,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellProvenance {
    pub rho_unbounded: Provenance,
    pub rho_bounded: Provenance,
    pub moe: Provenance,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanCell {
    pub table_class: TableClass,
    pub rho_unbounded: f64,
    pub rho_bounded: f64,
    /// MOE implied by `rho_unbounded`.
    pub moe: u64,
    /// `rho_unbounded` and `rho_bounded` to 4 significant figures.
    pub display: [String; 2],
    pub provenance: CellProvenance,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanLevelResult {
    pub name: String,
    pub geo_level: GeoLevel,
    pub iter_level: IterLevel,
    pub cells: Vec<PlanCell>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanResult {
    pub race_multiplicity: usize,
    pub stability: usize,
    pub confidence: f64,
    pub z: f64,
    pub levels: Vec<PlanLevelResult>,
    pub total_unbounded: f64,
    pub total_bounded: f64,
    pub total_display: [String; 2],
}

/// Fills every (level, table class) cell and sums the totals.
/// All field problems are reported together.
pub fn evaluate_plan(req: &PlanRequest) -> Result<PlanResult, Vec<FieldError>> {
    let mut errors = Vec::new();
    if !(1..=MAX_RACE_MULTIPLICITY).contains(&req.race_multiplicity) {
        errors.push(FieldError::new(
            "race_multiplicity",
            format!("must be in 1..={MAX_RACE_MULTIPLICITY}, got {}", req.race_multiplicity),
        ));
    }
    let z = z_for_confidence(req.confidence).map_err(|e| errors.push(e)).ok();
    for (i, l) in req.levels.iter().enumerate() {
        if l.geo_level == GeoLevel::Aiannh && l.iter_level == IterLevel::Regional {
            errors.push(FieldError::new(format!("levels[{i}]"), "AIANNH-Regional is not a tabulated level"));
        }
        for (key, t) in [("household_type", l.household_type), ("tenure", l.tenure)] {
            match t {
                Target::Moe(0) => errors.push(FieldError::new(
                    format!("levels[{i}].{key}.moe"),
                    "must be at least 1",
                )),
                Target::Rho(r) if !(r.is_finite() && r > 0.0) => errors.push(FieldError::new(
                    format!("levels[{i}].{key}.rho"),
                    format!("must be positive and finite, got {r}"),
                )),
                _ => {}
            }
        }
    }
    let Some(z) = z.filter(|_| errors.is_empty()) else {
        return Err(errors);
    };

    let s = stability_for_multiplicity(req.race_multiplicity);
    let cell = |class, t: Target| -> PlanCell {
        let (rho, from) = match t {
            Target::Moe(m) => (rho_from_moe(m, s, z).expect("validated"), Provenance::RhoFromMoe),
            Target::Rho(r) => (r, Provenance::Input),
        };
        PlanCell {
            table_class: class,
            rho_unbounded: rho,
            rho_bounded: 2.0 * rho,
            moe: moe_from_rho(rho, s, z).expect("validated"),
            display: [sig4(rho), sig4(2.0 * rho)],
            provenance: CellProvenance {
                rho_unbounded: from,
                rho_bounded: Provenance::DoubledForBounded,
                moe: Provenance::MoeFromRho,
            },
        }
    };
    let levels: Vec<PlanLevelResult> = req
        .levels
        .iter()
        .map(|l| PlanLevelResult {
            name: format!("{}-{}", l.geo_level, l.iter_level),
            geo_level: l.geo_level,
            iter_level: l.iter_level,
            cells: vec![
                cell(TableClass::HouseholdType, l.household_type),
                cell(TableClass::Tenure, l.tenure),
            ],
        })
        .collect();
    let total_unbounded: f64 = levels
        .iter()
        .flat_map(|l| &l.cells)
        .map(|c| c.rho_unbounded)
        .sum();
    let total_bounded = 2.0 * total_unbounded;
    Ok(PlanResult {
        race_multiplicity: req.race_multiplicity,
        stability: s,
        confidence: req.confidence,
        z,
        levels,
        total_unbounded,
        total_bounded,
        total_display: [sig4(total_unbounded), sig4(total_bounded)],
    })
}

/// Formats `x` with four significant figures.
pub fn sig4(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let magnitude = x.abs().log10().floor() as i32;
    let decimals = (3 - magnitude).max(0) as usize;
    let scale = 10f64.powi(3 - magnitude);
    format!("{:.*}", decimals, (x * scale).round() / scale)
}

/// The eleven tabulated levels with their published MOE targets
/// (Detailed: Nation/State 3, other geographies 11; Regional: 50).
pub fn reference_levels() -> Vec<(GeoLevel, IterLevel, u64)> {
    use GeoLevel::*;
    use IterLevel::*;
    vec![
        (Nation, Detailed, 3),
        (State, Detailed, 3),
        (County, Detailed, 11),
        (Tract, Detailed, 11),
        (Place, Detailed, 11),
        (Aiannh, Detailed, 11),
        (Nation, Regional, 50),
        (State, Regional, 50),
        (County, Regional, 50),
        (Tract, Regional, 50),
        (Place, Regional, 50),
    ]
}

/// Published per-class budgets for [`reference_levels`], in the same order.
pub fn reference_rhos() -> Vec<f64> {
    reference_levels()
        .into_iter()
        .map(|(_, _, moe)| match moe {
            3 => 1.92,
            11 => 0.14,
            _ => 0.0069,
        })
        .collect()
}

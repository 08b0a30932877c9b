//! Census-domain value types shared across the tabulation pipeline.
//!
//! Basis cell labels live in one constants table per [`TableVariant`]; every
//! other module refers to cells by label or by index into that table, never by
//! an ad hoc position.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Default cap on the number of detailed race codes per householder.
pub const DEFAULT_RACE_MULTIPLICITY: usize = 8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DomainError {
    #[error("{variant} is not a {expected} table variant")]
    WrongTableClass {
        variant: TableVariant,
        expected: TableClass,
    },
    #[error("race code count {count} outside 1..={max}")]
    RaceCodeCount { count: usize, max: usize },
    #[error("duplicate race code {0}")]
    DuplicateRaceCode(u32),
    #[error("thresholds must satisfy theta1 <= theta2 <= theta3 (got {0}, {1}, {2})")]
    ThresholdOrder(i64, i64, i64),
    #[error("privacy-loss parameter must be positive and finite (got {0})")]
    NonPositiveRho(f64),
    #[error("(AIANNH, Regional) is not a tabulated population group level")]
    AiannhRegional,
    #[error("unknown {kind} `{value}`")]
    Unknown { kind: &'static str, value: String },
}

/// Tabulation region; the United States and Puerto Rico are separate passes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Region {
    US,
    PR,
}

impl Region {
    /// State FIPS code of Puerto Rico.
    pub const PR_STATE_CODE: &'static str = "72";

    pub fn code(self) -> &'static str {
        match self {
            Region::US => "US",
            Region::PR => "PR",
        }
    }

    /// Whether a state code belongs to this region.
    pub fn contains_state(self, state: &str) -> bool {
        match self {
            Region::US => state != Self::PR_STATE_CODE,
            Region::PR => state == Self::PR_STATE_CODE,
        }
    }
}

impl fmt::Display for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

impl FromStr for Region {
    type Err = DomainError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "US" => Ok(Region::US),
            "PR" => Ok(Region::PR),
            other => Err(DomainError::Unknown {
                kind: "region",
                value: other.to_owned(),
            }),
        }
    }
}

/// Geographic summary levels with released statistics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum GeoLevel {
    Nation,
    State,
    County,
    Tract,
    Place,
    #[serde(rename = "AIANNH")]
    Aiannh,
}

impl GeoLevel {
    pub const ALL: [GeoLevel; 6] = [
        GeoLevel::Nation,
        GeoLevel::State,
        GeoLevel::County,
        GeoLevel::Tract,
        GeoLevel::Place,
        GeoLevel::Aiannh,
    ];

    pub fn name(self) -> &'static str {
        match self {
            GeoLevel::Nation => "Nation",
            GeoLevel::State => "State",
            GeoLevel::County => "County",
            GeoLevel::Tract => "Tract",
            GeoLevel::Place => "Place",
            GeoLevel::Aiannh => "AIANNH",
        }
    }
}

impl fmt::Display for GeoLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for GeoLevel {
    type Err = DomainError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        GeoLevel::ALL
            .into_iter()
            .find(|l| l.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| DomainError::Unknown {
                kind: "geography level",
                value: s.to_owned(),
            })
    }
}

/// Characteristic iteration level.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum IterLevel {
    Detailed,
    Regional,
}

impl IterLevel {
    pub fn name(self) -> &'static str {
        match self {
            IterLevel::Detailed => "Detailed",
            IterLevel::Regional => "Regional",
        }
    }
}

impl fmt::Display for IterLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for IterLevel {
    type Err = DomainError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.eq_ignore_ascii_case("Detailed") {
            Ok(IterLevel::Detailed)
        } else if s.eq_ignore_ascii_case("Regional") {
            Ok(IterLevel::Regional)
        } else {
            Err(DomainError::Unknown {
                kind: "iteration level",
                value: s.to_owned(),
            })
        }
    }
}

/// Pre-resolved geography of one Census block.
///
/// `county`, `tract` and `place` hold full geographic identifiers, so entity
/// ids are unique across the whole summary level.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GeoCode {
    pub block_id: String,
    pub nation: String,
    pub state: String,
    pub county: String,
    pub tract: String,
    pub place: Option<String>,
    pub aiannh: Option<String>,
}

impl GeoCode {
    /// The record's unique entity at a summary level, if it lies in one.
    pub fn entity(&self, level: GeoLevel) -> Option<&str> {
        match level {
            GeoLevel::Nation => Some(&self.nation),
            GeoLevel::State => Some(&self.state),
            GeoLevel::County => Some(&self.county),
            GeoLevel::Tract => Some(&self.tract),
            GeoLevel::Place => self.place.as_deref(),
            GeoLevel::Aiannh => self.aiannh.as_deref(),
        }
    }
}

/// Detailed race codes and the ethnicity code of a householder.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RaceEth {
    race_codes: Vec<u32>,
    ethnicity_code: u32,
}

impl RaceEth {
    pub fn new(
        race_codes: impl IntoIterator<Item = u32>,
        ethnicity_code: u32,
        race_multiplicity: usize,
    ) -> Result<Self, DomainError> {
        let mut codes: Vec<u32> = race_codes.into_iter().collect();
        codes.sort_unstable();
        if let Some(w) = codes.windows(2).find(|w| w[0] == w[1]) {
            return Err(DomainError::DuplicateRaceCode(w[0]));
        }
        if codes.is_empty() || codes.len() > race_multiplicity {
            return Err(DomainError::RaceCodeCount {
                count: codes.len(),
                max: race_multiplicity,
            });
        }
        Ok(Self {
            race_codes: codes,
            ethnicity_code,
        })
    }

    /// Sorted, distinct race codes.
    pub fn race_codes(&self) -> &[u32] {
        &self.race_codes
    }

    pub fn ethnicity_code(&self) -> u32 {
        self.ethnicity_code
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum HouseholdType {
    MarriedCouple,
    OtherFamilyMaleHouseholder,
    OtherFamilyFemaleHouseholder,
    NonfamilyAlone,
    NonfamilyNotAlone,
}

impl HouseholdType {
    pub const ALL: [HouseholdType; 5] = [
        HouseholdType::MarriedCouple,
        HouseholdType::OtherFamilyMaleHouseholder,
        HouseholdType::OtherFamilyFemaleHouseholder,
        HouseholdType::NonfamilyAlone,
        HouseholdType::NonfamilyNotAlone,
    ];

    /// Numeric code used in microdata files (1..=5).
    pub fn code(self) -> u8 {
        self as u8 + 1
    }

    pub fn from_code(code: u8) -> Option<Self> {
        Self::ALL.get(usize::from(code).checked_sub(1)?).copied()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Tenure {
    OwnedMortgage,
    OwnedFree,
    Renter,
}

impl Tenure {
    pub const ALL: [Tenure; 3] = [Tenure::OwnedMortgage, Tenure::OwnedFree, Tenure::Renter];

    /// Numeric code used in microdata files (1..=3).
    pub fn code(self) -> u8 {
        self as u8 + 1
    }

    pub fn from_code(code: u8) -> Option<Self> {
        Self::ALL.get(usize::from(code).checked_sub(1)?).copied()
    }
}

/// One occupied housing unit, described by its householder.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct HouseholdRecord {
    pub geo: GeoCode,
    pub race_eth: RaceEth,
    pub household_type: HouseholdType,
    pub tenure: Tenure,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum IterationKind {
    RaceAlone,
    RaceAloneOrCombo,
    Ethnicity,
}

impl IterationKind {
    pub fn name(self) -> &'static str {
        match self {
            IterationKind::RaceAlone => "RaceAlone",
            IterationKind::RaceAloneOrCombo => "RaceAloneOrCombo",
            IterationKind::Ethnicity => "Ethnicity",
        }
    }
}

impl FromStr for IterationKind {
    type Err = DomainError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        [
            IterationKind::RaceAlone,
            IterationKind::RaceAloneOrCombo,
            IterationKind::Ethnicity,
        ]
        .into_iter()
        .find(|k| k.name().eq_ignore_ascii_case(s))
        .ok_or_else(|| DomainError::Unknown {
            kind: "iteration kind",
            value: s.to_owned(),
        })
    }
}

/// Inclusive range of integer codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CodeRange {
    pub lo: u32,
    pub hi: u32,
}

impl CodeRange {
    pub fn contains(&self, code: u32) -> bool {
        self.lo <= code && code <= self.hi
    }

    pub fn overlaps(&self, other: &CodeRange) -> bool {
        self.lo <= other.hi && other.lo <= self.hi
    }
}

/// A set of codes stored as sorted, non-overlapping inclusive ranges.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
pub struct CodeSet(Vec<CodeRange>);

impl CodeSet {
    /// Builds a set, rejecting inverted or overlapping ranges.
    pub fn new(mut ranges: Vec<CodeRange>) -> Result<Self, String> {
        if let Some(r) = ranges.iter().find(|r| r.lo > r.hi) {
            return Err(format!("inverted range {}-{}", r.lo, r.hi));
        }
        ranges.sort();
        if let Some(w) = ranges.windows(2).find(|w| w[0].overlaps(&w[1])) {
            return Err(format!(
                "overlapping ranges {}-{} and {}-{}",
                w[0].lo, w[0].hi, w[1].lo, w[1].hi
            ));
        }
        Ok(Self(ranges))
    }

    pub fn ranges(&self) -> &[CodeRange] {
        &self.0
    }

    pub fn contains(&self, code: u32) -> bool {
        // ranges are sorted and disjoint
        match self.0.binary_search_by(|r| r.lo.cmp(&code)) {
            Ok(_) => true,
            Err(0) => false,
            Err(i) => self.0[i - 1].contains(code),
        }
    }

    pub fn intersects(&self, other: &CodeSet) -> bool {
        self.0
            .iter()
            .any(|a| other.0.iter().any(|b| a.overlaps(b)))
    }

    pub fn is_subset_of(&self, other: &CodeSet) -> bool {
        self.0.iter().all(|a| {
            other
                .0
                .iter()
                .any(|b| b.lo <= a.lo && a.hi <= b.hi)
        })
    }
}

impl FromStr for CodeSet {
    type Err = String;

    /// Parses `1170-1179;1200` style range lists.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut ranges = Vec::new();
        for part in s.split(';').map(str::trim).filter(|p| !p.is_empty()) {
            let (lo, hi) = match part.split_once('-') {
                Some((lo, hi)) => (lo.trim(), hi.trim()),
                None => (part, part),
            };
            let lo = lo.parse().map_err(|_| format!("bad code `{lo}`"))?;
            let hi = hi.parse().map_err(|_| format!("bad code `{hi}`"))?;
            ranges.push(CodeRange { lo, hi });
        }
        if ranges.is_empty() {
            return Err("empty code range list".to_owned());
        }
        CodeSet::new(ranges)
    }
}

impl fmt::Display for CodeSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, r) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(";")?;
            }
            if r.lo == r.hi {
                write!(f, "{}", r.lo)?;
            } else {
                write!(f, "{}-{}", r.lo, r.hi)?;
            }
        }
        Ok(())
    }
}

/// A race group tagged alone / alone-or-in-any-combination, or an ethnicity group.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CharacteristicIteration {
    pub iteration_code: String,
    pub kind: IterationKind,
    pub level: IterLevel,
    pub member_codes: CodeSet,
}

/// A (geographic entity, characteristic iteration) pair.
///
/// Ordering is (summary level, entity id, iteration code), which is the
/// canonical stacking order within a population group level.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct PopulationGroup {
    pub geo_level: GeoLevel,
    pub entity_id: String,
    pub iteration_code: String,
}

impl PopulationGroup {
    pub fn new(geo_level: GeoLevel, entity_id: impl Into<String>, iteration: impl Into<String>) -> Self {
        Self {
            geo_level,
            entity_id: entity_id.into(),
            iteration_code: iteration.into(),
        }
    }
}

/// Population thresholds that drive adaptive table-variant selection.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Thresholds {
    pub theta1: i64,
    pub theta2: i64,
    pub theta3: i64,
    pub psi1: i64,
}

impl Thresholds {
    /// Non-normative placeholder values; production values are not public.
    pub const PLACEHOLDER: Thresholds = Thresholds {
        theta1: 50,
        theta2: 200,
        theta3: 500,
        psi1: 50,
    };

    pub fn new(theta1: i64, theta2: i64, theta3: i64, psi1: i64) -> Result<Self, DomainError> {
        if theta1 > theta2 || theta2 > theta3 {
            return Err(DomainError::ThresholdOrder(theta1, theta2, theta3));
        }
        Ok(Self {
            theta1,
            theta2,
            theta3,
            psi1,
        })
    }
}

impl Default for Thresholds {
    fn default() -> Self {
        Self::PLACEHOLDER
    }
}

/// One population group level: a (geography level, iteration level) pair
/// with its per-table-class privacy-loss budgets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PopulationGroupLevel {
    /// 1-based position in the level sequence.
    pub index: usize,
    pub geo_level: GeoLevel,
    pub iter_level: IterLevel,
    pub rho_ht: f64,
    pub rho_t: f64,
    pub thresholds: Thresholds,
}

impl PopulationGroupLevel {
    pub fn new(
        index: usize,
        geo_level: GeoLevel,
        iter_level: IterLevel,
        rho_ht: f64,
        rho_t: f64,
        thresholds: Thresholds,
    ) -> Result<Self, DomainError> {
        if geo_level == GeoLevel::Aiannh && iter_level == IterLevel::Regional {
            return Err(DomainError::AiannhRegional);
        }
        for rho in [rho_ht, rho_t] {
            if !(rho.is_finite() && rho > 0.0) {
                return Err(DomainError::NonPositiveRho(rho));
            }
        }
        Ok(Self {
            index,
            geo_level,
            iter_level,
            rho_ht,
            rho_t,
            thresholds,
        })
    }

    /// Display name such as `State-Detailed`.
    pub fn name(&self) -> String {
        format!("{}-{}", self.geo_level, self.iter_level)
    }

    pub fn rho(&self, class: TableClass) -> f64 {
        match class {
            TableClass::HouseholdType => self.rho_ht,
            TableClass::Tenure => self.rho_t,
        }
    }
}

/// Household type (HT) or tenure (T).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TableClass {
    #[serde(rename = "HT")]
    HouseholdType,
    #[serde(rename = "T")]
    Tenure,
}

impl TableClass {
    pub const ALL: [TableClass; 2] = [TableClass::HouseholdType, TableClass::Tenure];

    pub fn code(self) -> &'static str {
        match self {
            TableClass::HouseholdType => "HT",
            TableClass::Tenure => "T",
        }
    }
}

impl fmt::Display for TableClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum TableVariant {
    T03001,
    T03002,
    T03003,
    T03004,
    T04001,
    T04002,
}

pub const TOTAL: &str = "Total";
pub const FAMILY: &str = "Family Household";
pub const NONFAMILY: &str = "Nonfamily Household";
pub const MARRIED_COUPLE: &str = "Married Couple Family";
pub const OTHER_FAMILY: &str = "Other Family";
pub const MALE_NO_SPOUSE: &str = "Male householder, no spouse present";
pub const FEMALE_NO_SPOUSE: &str = "Female householder, no spouse present";
pub const LIVING_ALONE: &str = "Householder Living Alone";
pub const NOT_LIVING_ALONE: &str = "Householder Not Living Alone";
pub const OWNED_MORTGAGE: &str = "Owned with a mortgage or a loan";
pub const OWNED_FREE: &str = "Owned free and clear";
pub const RENTER: &str = "Renter Occupied";

/// A shell row: its label and the basis indices it sums.
pub type ShellRowDef = (&'static str, &'static [usize]);

impl TableVariant {
    pub const ALL: [TableVariant; 6] = [
        TableVariant::T03001,
        TableVariant::T03002,
        TableVariant::T03003,
        TableVariant::T03004,
        TableVariant::T04001,
        TableVariant::T04002,
    ];

    pub fn class(self) -> TableClass {
        match self {
            TableVariant::T03001
            | TableVariant::T03002
            | TableVariant::T03003
            | TableVariant::T03004 => TableClass::HouseholdType,
            TableVariant::T04001 | TableVariant::T04002 => TableClass::Tenure,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            TableVariant::T03001 => "T03001",
            TableVariant::T03002 => "T03002",
            TableVariant::T03003 => "T03003",
            TableVariant::T03004 => "T03004",
            TableVariant::T04001 => "T04001",
            TableVariant::T04002 => "T04002",
        }
    }

    /// Basis cell labels in canonical order.
    pub fn basis(self) -> &'static [&'static str] {
        match self {
            TableVariant::T03001 | TableVariant::T04001 => &[TOTAL],
            TableVariant::T03002 => &[FAMILY, NONFAMILY],
            TableVariant::T03003 => &[MARRIED_COUPLE, OTHER_FAMILY, LIVING_ALONE, NOT_LIVING_ALONE],
            TableVariant::T03004 => &[
                MARRIED_COUPLE,
                MALE_NO_SPOUSE,
                FEMALE_NO_SPOUSE,
                LIVING_ALONE,
                NOT_LIVING_ALONE,
            ],
            TableVariant::T04002 => &[OWNED_MORTGAGE, OWNED_FREE, RENTER],
        }
    }

    pub fn basis_size(self) -> usize {
        self.basis().len()
    }

    /// Every row of the published shell, top to bottom, with the basis
    /// indices each row aggregates. Basis rows aggregate themselves.
    pub fn shell(self) -> &'static [ShellRowDef] {
        match self {
            TableVariant::T03001 | TableVariant::T04001 => &[(TOTAL, &[0])],
            TableVariant::T03002 => &[(TOTAL, &[0, 1]), (FAMILY, &[0]), (NONFAMILY, &[1])],
            TableVariant::T03003 => &[
                (TOTAL, &[0, 1, 2, 3]),
                (FAMILY, &[0, 1]),
                (MARRIED_COUPLE, &[0]),
                (OTHER_FAMILY, &[1]),
                (NONFAMILY, &[2, 3]),
                (LIVING_ALONE, &[2]),
                (NOT_LIVING_ALONE, &[3]),
            ],
            TableVariant::T03004 => &[
                (TOTAL, &[0, 1, 2, 3, 4]),
                (FAMILY, &[0, 1, 2]),
                (MARRIED_COUPLE, &[0]),
                (OTHER_FAMILY, &[1, 2]),
                (MALE_NO_SPOUSE, &[1]),
                (FEMALE_NO_SPOUSE, &[2]),
                (NONFAMILY, &[3, 4]),
                (LIVING_ALONE, &[3]),
                (NOT_LIVING_ALONE, &[4]),
            ],
            TableVariant::T04002 => &[
                (TOTAL, &[0, 1, 2]),
                (OWNED_MORTGAGE, &[0]),
                (OWNED_FREE, &[1]),
                (RENTER, &[2]),
            ],
        }
    }
}

impl fmt::Display for TableVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for TableVariant {
    type Err = DomainError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        TableVariant::ALL
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or_else(|| DomainError::Unknown {
                kind: "table variant",
                value: s.to_owned(),
            })
    }
}

/// Index of the household-type basis cell `h` falls in for variant `v`.
pub fn ht_basis_index(h: HouseholdType, v: TableVariant) -> Result<usize, DomainError> {
    use HouseholdType::*;
    let idx = match v {
        TableVariant::T03001 => 0,
        TableVariant::T03002 => match h {
            MarriedCouple | OtherFamilyMaleHouseholder | OtherFamilyFemaleHouseholder => 0,
            NonfamilyAlone | NonfamilyNotAlone => 1,
        },
        // the two "no spouse present" categories merge into Other Family
        TableVariant::T03003 => match h {
            MarriedCouple => 0,
            OtherFamilyMaleHouseholder | OtherFamilyFemaleHouseholder => 1,
            NonfamilyAlone => 2,
            NonfamilyNotAlone => 3,
        },
        TableVariant::T03004 => h as usize,
        TableVariant::T04001 | TableVariant::T04002 => {
            return Err(DomainError::WrongTableClass {
                variant: v,
                expected: TableClass::HouseholdType,
            })
        }
    };
    Ok(idx)
}

pub fn ht_basis_cell(h: HouseholdType, v: TableVariant) -> Result<&'static str, DomainError> {
    ht_basis_index(h, v).map(|i| v.basis()[i])
}

/// Index of the tenure basis cell `t` falls in for variant `v`.
pub fn tenure_basis_index(t: Tenure, v: TableVariant) -> Result<usize, DomainError> {
    match v {
        TableVariant::T04001 => Ok(0),
        TableVariant::T04002 => Ok(t as usize),
        _ => Err(DomainError::WrongTableClass {
            variant: v,
            expected: TableClass::Tenure,
        }),
    }
}

pub fn tenure_basis_cell(t: Tenure, v: TableVariant) -> Result<&'static str, DomainError> {
    tenure_basis_index(t, v).map(|i| v.basis()[i])
}

/// Fixed, public total-population counts per population group.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct T01001Counts(BTreeMap<PopulationGroup, i64>);

impl T01001Counts {
    pub fn new() -> Self {
        Self::default()
    }

    /// Inserts a count, returning the previous one if the group was present.
    pub fn insert(&mut self, group: PopulationGroup, count: i64) -> Option<i64> {
        self.0.insert(group, count)
    }

    pub fn get(&self, group: &PopulationGroup) -> Option<i64> {
        self.0.get(group).copied()
    }

    pub fn contains(&self, group: &PopulationGroup) -> bool {
        self.0.contains_key(group)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&PopulationGroup, i64)> {
        self.0.iter().map(|(g, c)| (g, *c))
    }

    pub fn groups(&self) -> BTreeSet<&PopulationGroup> {
        self.0.keys().collect()
    }
}

impl FromIterator<(PopulationGroup, i64)> for T01001Counts {
    fn from_iter<I: IntoIterator<Item = (PopulationGroup, i64)>>(iter: I) -> Self {
        Self(iter.into_iter().collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ht_cells_match_shells() {
        assert_eq!(
            ht_basis_cell(HouseholdType::MarriedCouple, TableVariant::T03004).unwrap(),
            "Married Couple Family"
        );
        assert_eq!(
            ht_basis_cell(HouseholdType::OtherFamilyMaleHouseholder, TableVariant::T03003).unwrap(),
            "Other Family"
        );
        assert_eq!(
            ht_basis_cell(HouseholdType::OtherFamilyFemaleHouseholder, TableVariant::T03003)
                .unwrap(),
            "Other Family"
        );
        assert_eq!(
            ht_basis_cell(HouseholdType::NonfamilyAlone, TableVariant::T03001).unwrap(),
            "Total"
        );
        assert_eq!(
            ht_basis_cell(HouseholdType::NonfamilyNotAlone, TableVariant::T03002).unwrap(),
            "Nonfamily Household"
        );
    }

    #[test]
    fn tenure_cells_match_shells() {
        assert_eq!(
            tenure_basis_cell(Tenure::Renter, TableVariant::T04002).unwrap(),
            "Renter Occupied"
        );
        assert_eq!(
            tenure_basis_cell(Tenure::OwnedFree, TableVariant::T04001).unwrap(),
            "Total"
        );
        assert_eq!(
            tenure_basis_cell(Tenure::OwnedMortgage, TableVariant::T04002).unwrap(),
            "Owned with a mortgage or a loan"
        );
    }

    #[test]
    fn wrong_class_rejected() {
        assert!(ht_basis_cell(HouseholdType::MarriedCouple, TableVariant::T04001).is_err());
        assert!(ht_basis_cell(HouseholdType::MarriedCouple, TableVariant::T04002).is_err());
        assert!(tenure_basis_cell(Tenure::Renter, TableVariant::T03004).is_err());
    }

    #[test]
    fn basis_sizes() {
        let sizes: Vec<usize> = TableVariant::ALL.iter().map(|v| v.basis_size()).collect();
        assert_eq!(sizes, vec![1, 2, 4, 5, 1, 3]);
    }

    #[test]
    fn basis_mapping_is_a_partition() {
        for v in TableVariant::ALL {
            let mut hit = vec![0usize; v.basis_size()];
            match v.class() {
                TableClass::HouseholdType => {
                    for h in HouseholdType::ALL {
                        hit[ht_basis_index(h, v).unwrap()] += 1;
                    }
                    assert_eq!(hit.iter().sum::<usize>(), HouseholdType::ALL.len());
                }
                TableClass::Tenure => {
                    for t in Tenure::ALL {
                        hit[tenure_basis_index(t, v).unwrap()] += 1;
                    }
                    assert_eq!(hit.iter().sum::<usize>(), Tenure::ALL.len());
                }
            }
            // surjective onto the basis
            assert!(hit.iter().all(|&n| n > 0), "{v}: {hit:?}");
        }
    }

    #[test]
    fn shell_basis_rows_are_singletons() {
        for v in TableVariant::ALL {
            for (i, label) in v.basis().iter().enumerate() {
                let row = v.shell().iter().find(|(l, _)| l == label).unwrap();
                assert_eq!(row.1, &[i][..], "{v} {label}");
            }
            assert_eq!(v.shell()[0].0, TOTAL);
            assert_eq!(v.shell()[0].1.len(), v.basis_size());
        }
    }

    #[test]
    fn race_eth_bounds() {
        assert!(RaceEth::new([1, 2, 3], 1, 8).is_ok());
        assert!(matches!(
            RaceEth::new([], 1, 8),
            Err(DomainError::RaceCodeCount { count: 0, .. })
        ));
        assert!(matches!(
            RaceEth::new(1..=9, 1, 8),
            Err(DomainError::RaceCodeCount { count: 9, max: 8 })
        ));
        assert_eq!(RaceEth::new([4, 4], 1, 8), Err(DomainError::DuplicateRaceCode(4)));
    }

    #[test]
    fn thresholds_must_be_ordered() {
        assert!(Thresholds::new(1, 2, 3, 0).is_ok());
        assert!(Thresholds::new(5, 5, 5, 0).is_ok());
        assert!(Thresholds::new(3, 2, 5, 0).is_err());
    }

    #[test]
    fn aiannh_regional_rejected() {
        let th = Thresholds::default();
        assert_eq!(
            PopulationGroupLevel::new(1, GeoLevel::Aiannh, IterLevel::Regional, 1.0, 1.0, th),
            Err(DomainError::AiannhRegional)
        );
        assert!(PopulationGroupLevel::new(1, GeoLevel::Nation, IterLevel::Detailed, 0.0, 1.0, th)
            .is_err());
    }

    #[test]
    fn code_set_parse_and_lookup() {
        let set: CodeSet = "1170-1179;1200;1300-1301".parse().unwrap();
        assert!(set.contains(1170) && set.contains(1179) && set.contains(1200));
        assert!(!set.contains(1180) && !set.contains(1169) && !set.contains(1302));
        assert_eq!(set.to_string(), "1170-1179;1200;1300-1301");
        assert!("5-3".parse::<CodeSet>().is_err());
        assert!("1-5;4-6".parse::<CodeSet>().is_err());
        let sub: CodeSet = "1171-1172".parse().unwrap();
        assert!(sub.is_subset_of(&set));
        assert!(!set.is_subset_of(&sub));
    }

    #[test]
    fn household_codes_round_trip() {
        for h in HouseholdType::ALL {
            assert_eq!(HouseholdType::from_code(h.code()), Some(h));
        }
        for t in Tenure::ALL {
            assert_eq!(Tenure::from_code(t.code()), Some(t));
        }
        assert_eq!(HouseholdType::from_code(0), None);
        assert_eq!(Tenure::from_code(4), None);
    }
}

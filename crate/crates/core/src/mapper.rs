//! The per-level flatmap from household records to population groups, and its
//! data-independent stability.

use std::collections::{BTreeSet, HashMap};

use thiserror::Error;

use crate::domain::{
    CharacteristicIteration, CodeSet, GeoLevel, HouseholdRecord, IterLevel, IterationKind,
    PopulationGroup, PopulationGroupLevel, RaceEth,
};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SpecError {
    #[error("duplicate iteration code `{0}`")]
    DuplicateCode(String),
    #[error("{level} race groups `{a}` and `{b}` overlap")]
    RaceOverlap { level: IterLevel, a: String, b: String },
    #[error("{level} ethnicity groups `{a}` and `{b}` overlap")]
    EthnicityOverlap { level: IterLevel, a: String, b: String },
    #[error("detailed race group `{code}` is contained in {count} regional race groups (expected exactly one)")]
    RegionalContainment { code: String, count: usize },
    #[error("inclusion list names unknown iteration `{0}`")]
    UnknownInclusion(String),
}

/// The characteristic-iteration universe plus per-geography-level inclusion lists.
#[derive(Debug, Clone, Default)]
pub struct IterationSpec {
    iterations: Vec<CharacteristicIteration>,
    by_code: HashMap<String, usize>,
    /// Geography levels absent from this map tabulate every iteration.
    inclusion: HashMap<GeoLevel, BTreeSet<String>>,
}

impl IterationSpec {
    /// Builds a spec after checking the structural invariants of the race and
    /// ethnicity group hierarchy.
    pub fn new(mut iterations: Vec<CharacteristicIteration>) -> Result<Self, SpecError> {
        iterations.sort_by(|a, b| a.iteration_code.cmp(&b.iteration_code));
        let mut by_code = HashMap::with_capacity(iterations.len());
        for (i, it) in iterations.iter().enumerate() {
            if by_code.insert(it.iteration_code.clone(), i).is_some() {
                return Err(SpecError::DuplicateCode(it.iteration_code.clone()));
            }
        }

        for level in [IterLevel::Detailed, IterLevel::Regional] {
            // alone and aoic iterations of one race group share its code set
            let groups = race_groups(&iterations, level);
            check_disjoint(&groups).map_err(|(a, b)| SpecError::RaceOverlap { level, a, b })?;
            let eth: Vec<(&CodeSet, &str)> = iterations
                .iter()
                .filter(|it| it.level == level && it.kind == IterationKind::Ethnicity)
                .map(|it| (&it.member_codes, it.iteration_code.as_str()))
                .collect();
            check_disjoint(&eth).map_err(|(a, b)| SpecError::EthnicityOverlap { level, a, b })?;
        }

        let regional = race_groups(&iterations, IterLevel::Regional);
        if !regional.is_empty() {
            for (codes, name) in race_groups(&iterations, IterLevel::Detailed) {
                let count = regional
                    .iter()
                    .filter(|(r, _)| codes.is_subset_of(r))
                    .count();
                if count != 1 {
                    return Err(SpecError::RegionalContainment {
                        code: name.to_owned(),
                        count,
                    });
                }
            }
        }

        Ok(Self {
            iterations,
            by_code,
            inclusion: HashMap::new(),
        })
    }

    /// Restricts the iterations tabulated at `geo_level` to `codes`.
    pub fn include(
        &mut self,
        geo_level: GeoLevel,
        codes: impl IntoIterator<Item = String>,
    ) -> Result<(), SpecError> {
        let entry = self.inclusion.entry(geo_level).or_default();
        for code in codes {
            if !self.by_code.contains_key(&code) {
                return Err(SpecError::UnknownInclusion(code));
            }
            entry.insert(code);
        }
        Ok(())
    }

    pub fn iterations(&self) -> &[CharacteristicIteration] {
        &self.iterations
    }

    pub fn get(&self, code: &str) -> Option<&CharacteristicIteration> {
        self.by_code.get(code).map(|&i| &self.iterations[i])
    }

    pub fn is_included(&self, geo_level: GeoLevel, code: &str) -> bool {
        self.inclusion
            .get(&geo_level)
            .is_none_or(|set| set.contains(code))
    }

    /// Iterations tabulated for a (geography level, iteration level) pair, in
    /// code order.
    pub fn tabulated(
        &self,
        geo_level: GeoLevel,
        iter_level: IterLevel,
    ) -> impl Iterator<Item = &CharacteristicIteration> {
        self.iterations.iter().filter(move |it| {
            it.level == iter_level && self.is_included(geo_level, &it.iteration_code)
        })
    }

    /// Whether `code` falls in any race group of the spec.
    pub fn covers_race_code(&self, code: u32) -> bool {
        self.iterations
            .iter()
            .any(|it| it.kind != IterationKind::Ethnicity && it.member_codes.contains(code))
    }

    pub fn covers_ethnicity_code(&self, code: u32) -> bool {
        self.iterations
            .iter()
            .any(|it| it.kind == IterationKind::Ethnicity && it.member_codes.contains(code))
    }
}

fn race_groups(its: &[CharacteristicIteration], level: IterLevel) -> Vec<(&CodeSet, &str)> {
    let mut seen: Vec<(&CodeSet, &str)> = Vec::new();
    for it in its
        .iter()
        .filter(|it| it.level == level && it.kind != IterationKind::Ethnicity)
    {
        if !seen.iter().any(|(c, _)| *c == &it.member_codes) {
            seen.push((&it.member_codes, &it.iteration_code));
        }
    }
    seen
}

fn check_disjoint(groups: &[(&CodeSet, &str)]) -> Result<(), (String, String)> {
    for (i, (a, an)) in groups.iter().enumerate() {
        for (b, bn) in &groups[i + 1..] {
            if a.intersects(b) {
                return Err((an.to_string(), bn.to_string()));
            }
        }
    }
    Ok(())
}

/// Characteristic iterations at `iter_level` that a householder belongs to.
///
/// A race group is matched "alone or in any combination" when any race code
/// falls in it, and "alone" when every race code does. At most one ethnicity
/// group matches. Codes outside every group contribute nothing.
pub fn iterations_for<'a>(
    r: &RaceEth,
    iter_level: IterLevel,
    spec: &'a IterationSpec,
) -> Vec<&'a CharacteristicIteration> {
    spec.iterations
        .iter()
        .filter(|it| it.level == iter_level && matches_iteration(r, it))
        .collect()
}

fn matches_iteration(r: &RaceEth, it: &CharacteristicIteration) -> bool {
    let codes = &it.member_codes;
    match it.kind {
        IterationKind::RaceAloneOrCombo => r.race_codes().iter().any(|&c| codes.contains(c)),
        IterationKind::RaceAlone => r.race_codes().iter().all(|&c| codes.contains(c)),
        IterationKind::Ethnicity => codes.contains(r.ethnicity_code()),
    }
}

/// The population groups of `level` that a record belongs to.
pub fn map_record_to_groups(
    r: &HouseholdRecord,
    level: &PopulationGroupLevel,
    spec: &IterationSpec,
) -> Vec<PopulationGroup> {
    let Some(entity) = r.geo.entity(level.geo_level) else {
        return Vec::new();
    };
    iterations_for(&r.race_eth, level.iter_level, spec)
        .into_iter()
        .filter(|it| spec.is_included(level.geo_level, &it.iteration_code))
        .map(|it| PopulationGroup::new(level.geo_level, entity, it.iteration_code.clone()))
        .collect()
}

/// Maximum number of groups any possible record can map to in one level.
///
/// Race groups within a level are disjoint, so a record with `k` codes
/// matches at most `k` alone-or-in-any-combination iterations, and an alone
/// iteration only when every code sits in one group (then exactly one aoic
/// iteration matches). That bounds race iterations by `max(k, 2)`; the
/// ethnicity group adds one.
pub fn stability(_level: &PopulationGroupLevel, race_multiplicity: usize) -> usize {
    stability_for_multiplicity(race_multiplicity)
}

pub fn stability_for_multiplicity(race_multiplicity: usize) -> usize {
    assert!(race_multiplicity >= 1, "race multiplicity must be at least 1");
    race_multiplicity.max(2) + 1
}

//! The tabulation engine: per-level flatmap, adaptive table-variant selection,
//! basis vectorization, stacking and noisy release.
//!
//! The set of groups and cells released is fixed in advance from public
//! inputs only (geography, iteration spec, T01001 counts), so the shape of
//! the output never depends on the microdata.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::Serialize;
use thiserror::Error;

use crate::accountant::{AccountantError, AccountingReport, BudgetLedger, NeighborModel};
use crate::domain::{
    ht_basis_index, tenure_basis_index, GeoCode, GeoLevel, HouseholdRecord, PopulationGroup,
    PopulationGroupLevel, Region, T01001Counts, TableClass, TableVariant, Thresholds,
};
use crate::exec::{fold_chunks, Execution};
use crate::mapper::{map_record_to_groups, stability, IterationSpec};
use crate::mechanisms::rng::NoiseKey;
use crate::mechanisms::{vector_discrete_gaussian_keyed, MechanismError};
use crate::postprocess::{apply_t01001_suppression, level_shells, ReleasedShell};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EngineError {
    #[error(transparent)]
    Budget(#[from] AccountantError),
    #[error(transparent)]
    Mechanism(#[from] MechanismError),
    #[error("level indices must be 1..=n in order (found {found} at position {position})")]
    LevelOrder { position: usize, found: usize },
}

/// How released values are perturbed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NoiseMode {
    /// Exact discrete Gaussian noise from streams keyed by this master seed.
    Seeded(u64),
    /// No noise at all. Output is NOT private and is watermarked as such;
    /// exists only so tests can compare against exact tabulations.
    UnsafeNoiseless,
}

impl NoiseMode {
    pub fn is_noiseless(self) -> bool {
        self == NoiseMode::UnsafeNoiseless
    }
}

/// Entities per geographic summary level.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct GeoUniverse(BTreeMap<GeoLevel, BTreeSet<String>>);

impl GeoUniverse {
    pub fn from_blocks<'a>(blocks: impl IntoIterator<Item = &'a GeoCode>) -> Self {
        let mut map: BTreeMap<GeoLevel, BTreeSet<String>> = BTreeMap::new();
        for b in blocks {
            for level in GeoLevel::ALL {
                if let Some(id) = b.entity(level) {
                    map.entry(level).or_default().insert(id.to_owned());
                }
            }
        }
        Self(map)
    }

    pub fn entities(&self, level: GeoLevel) -> impl Iterator<Item = &str> {
        self.0.get(&level).into_iter().flatten().map(String::as_str)
    }

    pub fn contains(&self, level: GeoLevel, id: &str) -> bool {
        self.0.get(&level).is_some_and(|s| s.contains(id))
    }
}

/// The level set before T01001 filtering.
#[derive(Debug, Clone, PartialEq)]
pub struct LevelCandidates {
    pub level: PopulationGroupLevel,
    /// Sorted in canonical (entity, iteration) order.
    pub groups: Vec<PopulationGroup>,
}

/// Every (entity, iteration) pair of each level.
pub fn candidate_groups(
    levels: &[PopulationGroupLevel],
    geo: &GeoUniverse,
    spec: &IterationSpec,
) -> Vec<LevelCandidates> {
    levels
        .iter()
        .map(|level| {
            let iterations: Vec<&str> = spec
                .tabulated(level.geo_level, level.iter_level)
                .map(|it| it.iteration_code.as_str())
                .collect();
            let mut groups: Vec<PopulationGroup> = geo
                .entities(level.geo_level)
                .flat_map(|e| {
                    iterations
                        .iter()
                        .map(move |c| PopulationGroup::new(level.geo_level, e, *c))
                })
                .collect();
            groups.sort();
            LevelCandidates {
                level: level.clone(),
                groups,
            }
        })
        .collect()
}

/// Household-type variant for a group with T01001 count `c`.
pub fn select_ht_variant(c: i64, th: &Thresholds) -> TableVariant {
    if c > th.theta3 {
        TableVariant::T03004
    } else if c > th.theta2 {
        TableVariant::T03003
    } else if c > th.theta1 {
        TableVariant::T03002
    } else {
        TableVariant::T03001
    }
}

/// Tenure variant for a group with T01001 count `c`.
pub fn select_t_variant(c: i64, th: &Thresholds) -> TableVariant {
    if c > th.psi1 {
        TableVariant::T04002
    } else {
        TableVariant::T04001
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct UniverseEntry {
    pub group: PopulationGroup,
    pub t01001_count: i64,
    pub ht_variant: TableVariant,
    pub t_variant: TableVariant,
}

impl UniverseEntry {
    pub fn variant(&self, class: TableClass) -> TableVariant {
        match class {
            TableClass::HouseholdType => self.ht_variant,
            TableClass::Tenure => self.t_variant,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LevelUniverse {
    pub level: PopulationGroupLevel,
    pub entries: Vec<UniverseEntry>,
}

/// The complete, microdata-independent list of released groups and variants.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupUniverse {
    pub levels: Vec<LevelUniverse>,
}

impl GroupUniverse {
    pub fn build(
        levels: &[PopulationGroupLevel],
        geo: &GeoUniverse,
        spec: &IterationSpec,
        t01001: &T01001Counts,
    ) -> Self {
        let candidates = candidate_groups(levels, geo, spec);
        let kept = apply_t01001_suppression(&candidates, t01001);
        let levels = kept
            .into_iter()
            .map(|lc| {
                let th = lc.level.thresholds;
                let entries = lc
                    .groups
                    .into_iter()
                    .map(|group| {
                        let c = t01001.get(&group).expect("suppression keeps counted groups");
                        UniverseEntry {
                            ht_variant: select_ht_variant(c, &th),
                            t_variant: select_t_variant(c, &th),
                            t01001_count: c,
                            group,
                        }
                    })
                    .collect();
                LevelUniverse {
                    level: lc.level,
                    entries,
                }
            })
            .collect();
        Self { levels }
    }

    /// Number of released basis cells across all levels and classes.
    pub fn cell_count(&self) -> usize {
        self.levels
            .iter()
            .flat_map(|l| &l.entries)
            .map(|e| e.ht_variant.basis_size() + e.t_variant.basis_size())
            .sum()
    }
}

/// Exact basis counts of one population group's records.
///
/// `records` must already be restricted to the group.
pub fn vectorize_population_group<'a>(
    records: impl IntoIterator<Item = &'a HouseholdRecord>,
    c: i64,
    th: &Thresholds,
) -> (Vec<i64>, Vec<i64>) {
    let ht = select_ht_variant(c, th);
    let t = select_t_variant(c, th);
    let mut v_ht = vec![0i64; ht.basis_size()];
    let mut v_t = vec![0i64; t.basis_size()];
    for r in records {
        v_ht[ht_basis_index(r.household_type, ht).expect("HT variant")] += 1;
        v_t[tenure_basis_index(r.tenure, t).expect("T variant")] += 1;
    }
    (v_ht, v_t)
}

/// Position of one released component.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CellLabel {
    pub group: PopulationGroup,
    pub variant: TableVariant,
    pub cell: &'static str,
}

/// A stacked, labelled vector of released integers.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct NoisyVector {
    pub values: Vec<i64>,
    pub labels: Vec<CellLabel>,
}

impl NoisyVector {
    /// Consecutive per-group slices `(group, variant, basis values)`.
    pub fn group_slices(&self) -> impl Iterator<Item = (&PopulationGroup, TableVariant, &[i64])> {
        let mut start = 0;
        std::iter::from_fn(move || {
            let label = self.labels.get(start)?;
            let n = label.variant.basis_size();
            let slice = &self.values[start..start + n];
            start += n;
            Some((&label.group, label.variant, slice))
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LevelRelease {
    pub level: PopulationGroupLevel,
    pub household_type: NoisyVector,
    pub tenure: NoisyVector,
}

/// Stacked exact counts for every universe entry of a level, HT then T.
pub fn stacked_counts(
    records: &[HouseholdRecord],
    universe: &LevelUniverse,
    spec: &IterationSpec,
    exec: Execution,
) -> (Vec<i64>, Vec<i64>) {
    let level = &universe.level;
    let mut index: HashMap<&str, HashMap<&str, usize>> = HashMap::new();
    let (mut ht_off, mut t_off) = (Vec::new(), Vec::new());
    let (mut n_ht, mut n_t) = (0usize, 0usize);
    for (i, e) in universe.entries.iter().enumerate() {
        index
            .entry(e.group.entity_id.as_str())
            .or_default()
            .insert(e.group.iteration_code.as_str(), i);
        ht_off.push(n_ht);
        t_off.push(n_t);
        n_ht += e.ht_variant.basis_size();
        n_t += e.t_variant.basis_size();
    }

    let counts = fold_chunks(
        records,
        exec,
        || vec![0i64; n_ht + n_t],
        |mut acc, r| {
            for g in map_record_to_groups(r, level, spec) {
                let Some(&i) = index
                    .get(g.entity_id.as_str())
                    .and_then(|m| m.get(g.iteration_code.as_str()))
                else {
                    continue;
                };
                let e = &universe.entries[i];
                acc[ht_off[i] + ht_basis_index(r.household_type, e.ht_variant).expect("HT")] += 1;
                acc[n_ht + t_off[i] + tenure_basis_index(r.tenure, e.t_variant).expect("T")] += 1;
            }
            acc
        },
        |mut a, b| {
            a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
            a
        },
    );
    let t = counts[n_ht..].to_vec();
    let mut ht = counts;
    ht.truncate(n_ht);
    (ht, t)
}

fn labels(universe: &LevelUniverse, class: TableClass) -> Vec<CellLabel> {
    universe
        .entries
        .iter()
        .flat_map(|e| {
            let variant = e.variant(class);
            variant.basis().iter().map(move |&cell| CellLabel {
                group: e.group.clone(),
                variant,
                cell,
            })
        })
        .collect()
}

/// Charges the ledger for one table class of a level, then perturbs the
/// stacked vector. Nothing is drawn unless the charge succeeds.
#[allow(clippy::too_many_arguments)]
fn release(
    values: Vec<i64>,
    labels: Vec<CellLabel>,
    level: &PopulationGroupLevel,
    class: TableClass,
    s: usize,
    ledger: &mut BudgetLedger,
    noise: NoiseMode,
    exec: Execution,
) -> Result<NoisyVector, EngineError> {
    let rho_parameter = ledger.charge_level(level, class, s)?.rho_parameter;
    let values = match noise {
        NoiseMode::UnsafeNoiseless => values,
        NoiseMode::Seeded(seed) => vector_discrete_gaussian_keyed(&values, rho_parameter, exec, |i| {
            let l = &labels[i];
            NoiseKey {
                level_index: level.index,
                class,
                entity_id: &l.group.entity_id,
                iteration_code: &l.group.iteration_code,
                cell_label: l.cell,
            }
            .stream(seed)
        })?,
    };
    Ok(NoisyVector { values, labels })
}

/// Tabulates and releases one population group level.
#[allow(clippy::too_many_arguments)]
pub fn run_level(
    records: &[HouseholdRecord],
    universe: &LevelUniverse,
    spec: &IterationSpec,
    race_multiplicity: usize,
    ledger: &mut BudgetLedger,
    noise: NoiseMode,
    exec: Execution,
) -> Result<LevelRelease, EngineError> {
    let level = &universe.level;
    let s = stability(level, race_multiplicity);
    let needed = (level.rho_ht + level.rho_t) * ledger.neighbor_model().factor();
    if needed > ledger.remaining() + crate::accountant::BUDGET_SLACK {
        return Err(AccountantError::BudgetExceeded {
            requested: needed,
            spent: ledger.total_loss(),
            total: ledger.declared_total(),
        }
        .into());
    }
    let (v_ht, v_t) = stacked_counts(records, universe, spec, exec);
    let household_type = release(
        v_ht,
        labels(universe, TableClass::HouseholdType),
        level,
        TableClass::HouseholdType,
        s,
        ledger,
        noise,
        exec,
    )?;
    let tenure = release(
        v_t,
        labels(universe, TableClass::Tenure),
        level,
        TableClass::Tenure,
        s,
        ledger,
        noise,
        exec,
    )?;
    Ok(LevelRelease {
        level: level.clone(),
        household_type,
        tenure,
    })
}

/// Public inputs and parameters of a pipeline run.
#[derive(Debug, Clone, Copy)]
pub struct PipelineParams<'a> {
    pub region: Region,
    pub race_multiplicity: usize,
    pub declared_total: f64,
    pub levels: &'a [PopulationGroupLevel],
    pub geo: &'a GeoUniverse,
    pub spec: &'a IterationSpec,
    pub t01001: &'a T01001Counts,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PipelineOutput {
    pub region: Region,
    pub noiseless: bool,
    pub levels: Vec<LevelRelease>,
    pub shells: Vec<ReleasedShell>,
    pub report: AccountingReport,
}

/// Runs every level in index order under an add/remove-neighbour ledger.
/// Returns nothing but the error if any level fails.
pub fn run_pipeline(
    records: &[HouseholdRecord],
    params: &PipelineParams<'_>,
    noise: NoiseMode,
    exec: Execution,
) -> Result<PipelineOutput, EngineError> {
    for (pos, l) in params.levels.iter().enumerate() {
        if l.index != pos + 1 {
            return Err(EngineError::LevelOrder {
                position: pos + 1,
                found: l.index,
            });
        }
    }
    let universe = GroupUniverse::build(params.levels, params.geo, params.spec, params.t01001);
    let mut ledger = BudgetLedger::new(params.declared_total, NeighborModel::Unbounded)?;
    let mut levels = Vec::with_capacity(universe.levels.len());
    for lu in &universe.levels {
        levels.push(run_level(
            records,
            lu,
            params.spec,
            params.race_multiplicity,
            &mut ledger,
            noise,
            exec,
        )?);
    }
    let shells = levels.iter().flat_map(level_shells).collect();
    Ok(PipelineOutput {
        region: params.region,
        noiseless: noise.is_noiseless(),
        levels,
        shells,
        report: ledger.report(),
    })
}

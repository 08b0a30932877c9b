//! Synthetic geography, iteration spec, households and T01001 counts for
//! demos, tests and benchmarks. Nothing here resembles real census data.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::Rng;

use crate::domain::{
    CharacteristicIteration, GeoCode, GeoLevel, HouseholdRecord, HouseholdType, IterLevel,
    IterationKind, PopulationGroup, RaceEth, Region, T01001Counts, Tenure,
};
use crate::io::{InputPaths, LevelConfig, RunConfig};
use crate::mapper::IterationSpec;
use crate::mechanisms::rng::seeded;
use crate::planner::{reference_levels, reference_rhos};

/// Detailed race groups cover `RACE_BASE..RACE_BASE + 10*DETAILED_RACE_GROUPS`.
pub const RACE_BASE: u32 = 1000;
pub const DETAILED_RACE_GROUPS: u32 = 10;
pub const ETHNICITY_CODES: [u32; 3] = [1, 2, 3];

#[derive(Debug, Clone, PartialEq)]
pub struct SynthParams {
    pub region: Region,
    pub seed: u64,
    pub households: usize,
    pub states: usize,
    pub counties_per_state: usize,
    pub tracts_per_county: usize,
    pub blocks_per_tract: usize,
    pub places_per_state: usize,
    pub aiannh_areas: usize,
    pub race_multiplicity: usize,
    /// Most race codes any generated householder reports.
    pub max_race_codes: usize,
}

impl Default for SynthParams {
    fn default() -> Self {
        Self {
            region: Region::US,
            seed: 1,
            households: 1000,
            states: 2,
            counties_per_state: 2,
            tracts_per_county: 2,
            blocks_per_tract: 3,
            places_per_state: 2,
            aiannh_areas: 1,
            race_multiplicity: 8,
            max_race_codes: 3,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SynthData {
    pub region: Region,
    pub race_multiplicity: usize,
    pub blocks: Vec<GeoCode>,
    pub iterations: Vec<CharacteristicIteration>,
    pub records: Vec<HouseholdRecord>,
    pub t01001: T01001Counts,
}

fn iteration(code: String, kind: IterationKind, level: IterLevel, codes: &str) -> CharacteristicIteration {
    CharacteristicIteration {
        iteration_code: code,
        kind,
        level,
        member_codes: codes.parse().expect("valid code set"),
    }
}

/// Ten detailed and two regional race groups (each alone and in
/// combination), three detailed and two regional ethnicity groups.
pub fn standard_iterations() -> Vec<CharacteristicIteration> {
    use IterationKind::*;
    use IterLevel::*;
    let mut its = Vec::new();
    for g in 0..DETAILED_RACE_GROUPS {
        let lo = RACE_BASE + 10 * g;
        let range = format!("{lo}-{}", lo + 9);
        its.push(iteration(format!("A{:02}", g + 1), RaceAlone, Detailed, &range));
        its.push(iteration(format!("C{:02}", g + 1), RaceAloneOrCombo, Detailed, &range));
    }
    let half = RACE_BASE + 5 * DETAILED_RACE_GROUPS;
    let end = RACE_BASE + 10 * DETAILED_RACE_GROUPS - 1;
    for (i, range) in [format!("{RACE_BASE}-{}", half - 1), format!("{half}-{end}")].iter().enumerate() {
        its.push(iteration(format!("RA{}", i + 1), RaceAlone, Regional, range));
        its.push(iteration(format!("RC{}", i + 1), RaceAloneOrCombo, Regional, range));
    }
    for e in ETHNICITY_CODES {
        its.push(iteration(format!("E{e}"), Ethnicity, Detailed, &e.to_string()));
    }
    its.push(iteration("ER1".into(), Ethnicity, Regional, "1"));
    its.push(iteration("ER2".into(), Ethnicity, Regional, "2-3"));
    its
}

/// Block geography: every block lies in one tract, county and state; some
/// also lie in a place and some in an AIANNH area.
pub fn blocks<R: Rng>(p: &SynthParams, rng: &mut R) -> Vec<GeoCode> {
    let states: Vec<String> = match p.region {
        Region::PR => vec![Region::PR_STATE_CODE.to_owned()],
        Region::US => (1..)
            .map(|s| format!("{s:02}"))
            .filter(|s| s != Region::PR_STATE_CODE)
            .take(p.states)
            .collect(),
    };
    let mut out = Vec::new();
    for state in &states {
        let places: Vec<String> = (1..=p.places_per_state).map(|i| format!("{state}{:05}", i * 10)).collect();
        for c in 1..=p.counties_per_state {
            let county = format!("{state}{:03}", 2 * c - 1);
            for t in 1..=p.tracts_per_county {
                let tract = format!("{county}{:06}", t * 100);
                for b in 1..=p.blocks_per_tract {
                    let place = (rng.gen_bool(0.6) && !places.is_empty())
                        .then(|| places.choose(rng).expect("non-empty").clone());
                    let aiannh = (p.aiannh_areas > 0 && rng.gen_bool(0.3))
                        .then(|| format!("{:04}", rng.gen_range(1..=p.aiannh_areas) * 10));
                    out.push(GeoCode {
                        block_id: format!("{tract}{:04}", 1000 + b),
                        nation: p.region.code().to_owned(),
                        state: state.clone(),
                        county: county.clone(),
                        tract: tract.clone(),
                        place,
                        aiannh,
                    });
                }
            }
        }
    }
    out
}

/// Random households over `blocks`. Most report one race code.
pub fn households<R: Rng>(p: &SynthParams, blocks: &[GeoCode], rng: &mut R) -> Vec<HouseholdRecord> {
    let max_codes = p.max_race_codes.clamp(1, p.race_multiplicity);
    let code_count = RACE_BASE + 10 * DETAILED_RACE_GROUPS;
    (0..p.households)
        .map(|_| {
            let geo = blocks.choose(rng).expect("at least one block").clone();
            let k = if rng.gen_bool(0.8) { 1 } else { rng.gen_range(1..=max_codes) };
            let mut codes: Vec<u32> = Vec::with_capacity(k);
            while codes.len() < k {
                // cluster codes so that "alone" groups are populated
                let c = if codes.is_empty() || rng.gen_bool(0.5) {
                    rng.gen_range(RACE_BASE..code_count)
                } else {
                    (codes[0] / 10 * 10) + rng.gen_range(0..10)
                };
                if !codes.contains(&c) {
                    codes.push(c);
                }
            }
            let eth = *ETHNICITY_CODES.choose(rng).expect("non-empty");
            HouseholdRecord {
                geo,
                race_eth: RaceEth::new(codes, eth, p.race_multiplicity).expect("valid race codes"),
                household_type: *HouseholdType::ALL.choose(rng).expect("non-empty"),
                tenure: *Tenure::ALL.choose(rng).expect("non-empty"),
            }
        })
        .collect()
}

/// Person counts for every group with at least one household, scaled by a
/// random 1 to 4 persons per household.
pub fn t01001_from<R: Rng>(records: &[HouseholdRecord], spec: &IterationSpec, rng: &mut R) -> T01001Counts {
    let mut households: BTreeMap<PopulationGroup, i64> = BTreeMap::new();
    for r in records {
        for geo_level in GeoLevel::ALL {
            let Some(entity) = r.geo.entity(geo_level) else { continue };
            for iter_level in [IterLevel::Detailed, IterLevel::Regional] {
                for it in crate::mapper::iterations_for(&r.race_eth, iter_level, spec) {
                    *households
                        .entry(PopulationGroup::new(geo_level, entity, it.iteration_code.as_str()))
                        .or_default() += 1;
                }
            }
        }
    }
    households
        .into_iter()
        .map(|(g, n)| {
            let persons = (0..n).map(|_| rng.gen_range(1..=4i64)).sum();
            (g, persons)
        })
        .collect()
}

pub fn generate(p: &SynthParams) -> SynthData {
    let mut rng = seeded(p.seed);
    let iterations = standard_iterations();
    let spec = IterationSpec::new(iterations.clone()).expect("standard spec is valid");
    let blocks = blocks(p, &mut rng);
    let records = households(p, &blocks, &mut rng);
    let t01001 = t01001_from(&records, &spec, &mut rng);
    SynthData {
        region: p.region,
        race_multiplicity: p.race_multiplicity,
        blocks,
        iterations,
        records,
        t01001,
    }
}

/// The eleven-level configuration with the published per-class budgets.
pub fn reference_level_configs() -> Vec<LevelConfig> {
    reference_levels()
        .into_iter()
        .zip(reference_rhos())
        .map(|((geo_level, iter_level, _), rho)| LevelConfig {
            geo_level,
            iter_level,
            rho_ht: rho,
            rho_t: rho,
            theta1: None,
            theta2: None,
            theta3: None,
            psi1: None,
        })
        .collect()
}

fn race_codes(r: &RaceEth) -> String {
    let codes: Vec<String> = r.race_codes().iter().map(u32::to_string).collect();
    codes.join("|")
}

/// Writes the four input files and a `config.toml` naming them into `dir`.
/// Returns the config path.
pub fn write_dataset(
    dir: &Path,
    data: &SynthData,
    levels: Vec<LevelConfig>,
    seed: u64,
) -> std::io::Result<PathBuf> {
    std::fs::create_dir_all(dir)?;
    let mut occupied: BTreeMap<&str, usize> = BTreeMap::new();
    for r in &data.records {
        *occupied.entry(r.geo.block_id.as_str()).or_default() += 1;
    }
    let mut geo = String::from("block_id,state,county,tract,place,aiannh,housing_units\n");
    for b in &data.blocks {
        let _ = writeln!(
            geo,
            "{},{},{},{},{},{},{}",
            b.block_id,
            b.state,
            b.county,
            b.tract,
            b.place.as_deref().unwrap_or(""),
            b.aiannh.as_deref().unwrap_or(""),
            occupied.get(b.block_id.as_str()).copied().unwrap_or(0)
        );
    }
    let mut its = String::from("iteration_code,level,kind,code_ranges\n");
    for it in &data.iterations {
        let _ = writeln!(its, "{},{},{},{}", it.iteration_code, it.level, it.kind.name(), it.member_codes);
    }
    let mut hh = String::from("block_id,race_codes,ethnicity_code,household_type,tenure\n");
    for r in &data.records {
        let _ = writeln!(
            hh,
            "{},{},{},{},{}",
            r.geo.block_id,
            race_codes(&r.race_eth),
            r.race_eth.ethnicity_code(),
            r.household_type.code(),
            r.tenure.code()
        );
    }
    let mut t = String::from("geo_level,geo_id,iteration_code,count\n");
    for (g, c) in data.t01001.iter() {
        let _ = writeln!(t, "{},{},{},{c}", g.geo_level, g.entity_id, g.iteration_code);
    }
    std::fs::write(dir.join("geo.csv"), geo)?;
    std::fs::write(dir.join("iterations.csv"), its)?;
    std::fs::write(dir.join("households.csv"), hh)?;
    std::fs::write(dir.join("t01001.csv"), t)?;

    let total_rho = levels.iter().map(|l| l.rho_ht + l.rho_t).sum();
    let config = RunConfig {
        region: data.region,
        seed,
        race_multiplicity: data.race_multiplicity,
        total_rho,
        inputs: InputPaths {
            households: "households.csv".into(),
            t01001: "t01001.csv".into(),
            geo: "geo.csv".into(),
            iterations: "iterations.csv".into(),
            inclusion: None,
        },
        levels,
    };
    let path = dir.join("config.toml");
    std::fs::write(&path, config.to_toml())?;
    Ok(path)
}

/// The standard spec as an [`IterationSpec`].
pub fn standard_spec() -> IterationSpec {
    IterationSpec::new(standard_iterations()).expect("standard spec is valid")
}

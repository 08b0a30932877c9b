use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use super::files::Table;
use super::{ErrorClass, InputError, RunConfig, ValidationReport};
use crate::domain::{
    CharacteristicIteration, CodeSet, GeoCode, GeoLevel, HouseholdRecord, HouseholdType,
    IterLevel, IterationKind, PopulationGroup, PopulationGroupLevel, RaceEth, T01001Counts, Tenure,
};
use crate::engine::{run_pipeline, EngineError, GeoUniverse, NoiseMode, PipelineOutput, PipelineParams};
use crate::exec::Execution;
use crate::mapper::IterationSpec;

// keeps operator logs readable on badly broken inputs
const MAX_ERRORS: usize = 200;

/// Everything a run needs, checked for consistency.
#[derive(Debug, Clone)]
pub struct ValidatedBundle {
    pub config: RunConfig,
    pub levels: Vec<PopulationGroupLevel>,
    pub spec: IterationSpec,
    pub geo: GeoUniverse,
    pub t01001: T01001Counts,
    pub records: Vec<HouseholdRecord>,
    /// Blocks removed because they contain no housing units.
    pub dropped_blocks: usize,
}

impl ValidatedBundle {
    pub fn params(&self) -> PipelineParams<'_> {
        PipelineParams {
            region: self.config.region,
            race_multiplicity: self.config.race_multiplicity,
            declared_total: self.config.total_rho,
            levels: &self.levels,
            geo: &self.geo,
            spec: &self.spec,
            t01001: &self.t01001,
        }
    }

    pub fn run(&self, noise: NoiseMode, exec: Execution) -> Result<PipelineOutput, EngineError> {
        run_pipeline(&self.records, &self.params(), noise, exec)
    }
}

struct Errors(Vec<InputError>);

impl Errors {
    fn push(&mut self, e: InputError) {
        if self.0.len() < MAX_ERRORS {
            self.0.push(e);
        }
    }

    fn extend(&mut self, es: impl IntoIterator<Item = InputError>) {
        es.into_iter().for_each(|e| self.push(e));
    }
}

/// Loads and cross-checks the config and all input files.
///
/// Public inputs (config, iteration spec, geography, T01001) are checked
/// first; household records are read only if those pass.
pub fn validate_inputs(config: &RunConfig, config_file: &str) -> Result<ValidatedBundle, ValidationReport> {
    let mut errs = Errors(Vec::new());
    let levels = config.levels(config_file).unwrap_or_else(|es| {
        errs.extend(es);
        Vec::new()
    });
    let spec = read_iterations(&config.inputs.iterations, config.inputs.inclusion.as_deref(), &mut errs);
    let (blocks, dropped_blocks) = read_geo(&config.inputs.geo, config, &mut errs);
    let geo = GeoUniverse::from_blocks(blocks.values());
    let t01001 = match &spec {
        Some(spec) => read_t01001(&config.inputs.t01001, &geo, spec, &mut errs),
        None => T01001Counts::new(),
    };
    if !errs.0.is_empty() {
        return Err(ValidationReport { errors: errs.0 });
    }
    let spec = spec.expect("no errors implies a spec");
    let records = read_households(&config.inputs.households, config, &blocks, &spec, &mut errs);
    if !errs.0.is_empty() {
        return Err(ValidationReport { errors: errs.0 });
    }
    Ok(ValidatedBundle {
        config: config.clone(),
        levels,
        spec,
        geo,
        t01001,
        records,
        dropped_blocks,
    })
}

fn open(path: &Path, required: &[&str], optional: &[&str], errs: &mut Errors) -> Option<Table> {
    Table::read(path, required, optional).map_err(|e| errs.push(e)).ok()
}

fn read_iterations(path: &Path, inclusion: Option<&Path>, errs: &mut Errors) -> Option<IterationSpec> {
    let t = open(path, &["iteration_code", "level", "kind", "code_ranges"], &[], errs)?;
    let before = errs.0.len();
    let mut its = Vec::with_capacity(t.rows.len());
    for (line, rec) in &t.rows {
        let code = t.get(rec, "iteration_code");
        if code.is_empty() {
            errs.push(t.error(ErrorClass::Schema, *line, "iteration_code", "empty iteration code"));
            continue;
        }
        let level = t.get(rec, "level").parse::<IterLevel>();
        let kind = t.get(rec, "kind").parse::<IterationKind>();
        let codes = t.get(rec, "code_ranges").parse::<CodeSet>();
        match (level, kind, codes) {
            (Ok(level), Ok(kind), Ok(member_codes)) => its.push(CharacteristicIteration {
                iteration_code: code.to_owned(),
                kind,
                level,
                member_codes,
            }),
            (l, k, c) => {
                if let Err(e) = l {
                    errs.push(t.error(ErrorClass::Schema, *line, "level", e.to_string()));
                }
                if let Err(e) = k {
                    errs.push(t.error(ErrorClass::Schema, *line, "kind", e.to_string()));
                }
                if let Err(e) = c {
                    errs.push(t.error(ErrorClass::Schema, *line, "code_ranges", e));
                }
            }
        }
    }
    if errs.0.len() > before {
        return None;
    }
    let mut spec = IterationSpec::new(its)
        .map_err(|e| errs.push(InputError::new(ErrorClass::Schema, &t.file, e.to_string())))
        .ok()?;

    if let Some(path) = inclusion {
        let inc = open(path, &["geo_level", "iteration_code"], &[], errs)?;
        let mut by_level: BTreeMap<GeoLevel, Vec<String>> = BTreeMap::new();
        for (line, rec) in &inc.rows {
            let code = inc.get(rec, "iteration_code");
            match inc.get(rec, "geo_level").parse::<GeoLevel>() {
                Err(e) => errs.push(inc.error(ErrorClass::Schema, *line, "geo_level", e.to_string())),
                Ok(_) if spec.get(code).is_none() => errs.push(inc.error(
                    ErrorClass::Referential,
                    *line,
                    "iteration_code",
                    format!("unknown iteration `{code}`"),
                )),
                Ok(g) => by_level.entry(g).or_default().push(code.to_owned()),
            }
        }
        for (g, codes) in by_level {
            spec.include(g, codes).expect("codes checked above");
        }
    }
    Some(spec)
}

fn read_geo(path: &Path, config: &RunConfig, errs: &mut Errors) -> (BTreeMap<String, GeoCode>, usize) {
    let mut blocks = BTreeMap::new();
    let Some(t) = open(
        path,
        &["block_id", "state", "county", "tract", "place", "aiannh"],
        &["housing_units"],
        errs,
    ) else {
        return (blocks, 0);
    };
    let region = config.region;
    let mut dropped = 0;
    for (line, rec) in &t.rows {
        let line = *line;
        let col = |c: &str| t.get(rec, c);
        let block_id = col("block_id");
        let (state, county, tract) = (col("state"), col("county"), col("tract"));
        let opt = |s: &str| (!s.is_empty()).then(|| s.to_owned());
        let (place, aiannh) = (opt(col("place")), opt(col("aiannh")));

        let mut ok = true;
        for c in ["block_id", "state", "county", "tract"] {
            if col(c).is_empty() {
                errs.push(t.error(ErrorClass::Schema, line, c, "required value is empty"));
                ok = false;
            }
        }
        if !ok {
            continue;
        }
        let referential = |c: &str, msg: String| t.error(ErrorClass::Referential, line, c, msg);
        if !region.contains_state(state) {
            errs.push(referential("state", format!("state `{state}` is outside region {region}")));
        }
        if !county.starts_with(state) {
            errs.push(referential("county", format!("county `{county}` is not in state `{state}`")));
        }
        if !tract.starts_with(county) {
            errs.push(referential("tract", format!("tract `{tract}` is not in county `{county}`")));
        }
        if let Some(p) = &place {
            if !p.starts_with(state) {
                errs.push(referential("place", format!("place `{p}` is not in state `{state}`")));
            }
        }
        if !block_id.starts_with(tract) {
            errs.push(referential("block_id", format!("block `{block_id}` is not in tract `{tract}`")));
        }
        if t.has("housing_units") {
            match col("housing_units").parse::<u64>() {
                Ok(0) => {
                    dropped += 1;
                    continue;
                }
                Ok(_) => {}
                Err(_) => {
                    errs.push(t.error(
                        ErrorClass::Schema,
                        line,
                        "housing_units",
                        format!("`{}` is not a non-negative integer", col("housing_units")),
                    ));
                }
            }
        }
        let code = GeoCode {
            block_id: block_id.to_owned(),
            nation: region.code().to_owned(),
            state: state.to_owned(),
            county: county.to_owned(),
            tract: tract.to_owned(),
            place,
            aiannh,
        };
        if blocks.insert(block_id.to_owned(), code).is_some() {
            errs.push(t.error(ErrorClass::Schema, line, "block_id", format!("duplicate block `{block_id}`")));
        }
    }
    (blocks, dropped)
}

fn read_t01001(path: &Path, geo: &GeoUniverse, spec: &IterationSpec, errs: &mut Errors) -> T01001Counts {
    let mut counts = T01001Counts::new();
    let Some(t) = open(path, &["geo_level", "geo_id", "iteration_code", "count"], &[], errs) else {
        return counts;
    };
    for (line, rec) in &t.rows {
        let line = *line;
        let (geo_id, code) = (t.get(rec, "geo_id"), t.get(rec, "iteration_code"));
        let level = match t.get(rec, "geo_level").parse::<GeoLevel>() {
            Ok(l) => l,
            Err(e) => {
                errs.push(t.error(ErrorClass::Schema, line, "geo_level", e.to_string()));
                continue;
            }
        };
        let count = match t.get(rec, "count").parse::<i64>() {
            Ok(c) if c >= 0 => c,
            _ => {
                errs.push(t.error(
                    ErrorClass::Schema,
                    line,
                    "count",
                    format!("`{}` is not a non-negative integer", t.get(rec, "count")),
                ));
                continue;
            }
        };
        if !geo.contains(level, geo_id) {
            errs.push(t.error(
                ErrorClass::Referential,
                line,
                "geo_id",
                format!("no {level} entity `{geo_id}` in the geography"),
            ));
            continue;
        }
        if spec.get(code).is_none() {
            errs.push(t.error(
                ErrorClass::Referential,
                line,
                "iteration_code",
                format!("unknown iteration `{code}`"),
            ));
            continue;
        }
        if counts.insert(PopulationGroup::new(level, geo_id, code), count).is_some() {
            errs.push(t.error(
                ErrorClass::Schema,
                line,
                "iteration_code",
                format!("duplicate count for ({level}, {geo_id}, {code})"),
            ));
        }
    }
    counts
}

fn read_households(
    path: &Path,
    config: &RunConfig,
    blocks: &BTreeMap<String, GeoCode>,
    spec: &IterationSpec,
    errs: &mut Errors,
) -> Vec<HouseholdRecord> {
    let Some(t) = open(
        path,
        &["block_id", "race_codes", "ethnicity_code", "household_type", "tenure"],
        &[],
        errs,
    ) else {
        return Vec::new();
    };
    let mut covered: HashMap<u32, bool> = HashMap::new();
    let mut records = Vec::with_capacity(t.rows.len());
    for (line, rec) in &t.rows {
        let line = *line;
        let col = |c: &str| t.get(rec, c);
        let before = errs.0.len();
        let schema = |c: &str| t.error(ErrorClass::Schema, line, c, format!("`{}` is not an integer", col(c)));
        let universe = |c: &str, msg: String| t.error(ErrorClass::Universe, line, c, msg);

        let geo = blocks.get(col("block_id"));
        if geo.is_none() {
            errs.push(t.error(
                ErrorClass::Referential,
                line,
                "block_id",
                format!("block `{}` is not in the geography (or has no housing units)", col("block_id")),
            ));
        }
        let codes: Result<Vec<u32>, _> = col("race_codes").split('|').map(|c| c.trim().parse::<u32>()).collect();
        let codes = codes.map_err(|_| errs.push(schema("race_codes"))).unwrap_or_default();
        for &c in &codes {
            let ok = *covered.entry(c).or_insert_with(|| spec.covers_race_code(c));
            if !ok {
                errs.push(universe("race_codes", format!("race code {c} is in no race group")));
            }
        }
        let eth = col("ethnicity_code")
            .parse::<u32>()
            .map_err(|_| errs.push(schema("ethnicity_code")))
            .ok();
        if let Some(e) = eth {
            if !spec.covers_ethnicity_code(e) {
                errs.push(universe("ethnicity_code", format!("ethnicity code {e} is in no ethnicity group")));
            }
        }
        let ht = match col("household_type").parse::<u8>() {
            Ok(c) => HouseholdType::from_code(c)
                .ok_or_else(|| errs.push(universe("household_type", format!("household type {c} outside 1..=5"))))
                .ok(),
            Err(_) => {
                errs.push(schema("household_type"));
                None
            }
        };
        let tenure = match col("tenure").parse::<u8>() {
            Ok(c) => Tenure::from_code(c)
                .ok_or_else(|| errs.push(universe("tenure", format!("tenure {c} outside 1..=3"))))
                .ok(),
            Err(_) => {
                errs.push(schema("tenure"));
                None
            }
        };
        let race_eth = match (codes.is_empty(), eth) {
            (false, Some(e)) => RaceEth::new(codes, e, config.race_multiplicity)
                .map_err(|err| errs.push(universe("race_codes", err.to_string())))
                .ok(),
            _ => None,
        };
        if errs.0.len() > before {
            continue;
        }
        if let (Some(geo), Some(race_eth), Some(household_type), Some(tenure)) = (geo, race_eth, ht, tenure) {
            records.push(HouseholdRecord {
                geo: geo.clone(),
                race_eth,
                household_type,
                tenure,
            });
        }
    }
    records
}

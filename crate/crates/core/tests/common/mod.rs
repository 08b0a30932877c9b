#![allow(dead_code)]

use hhtab_core::domain::{
    CharacteristicIteration, GeoCode, GeoLevel, HouseholdRecord, IterationKind,
    PopulationGroupLevel, Region, T01001Counts, Thresholds,
};
use hhtab_core::engine::{GeoUniverse, NoiseMode, PipelineOutput, PipelineParams};
use hhtab_core::exec::Execution;
use hhtab_core::io::{write_release_csv, OutputRow};
use hhtab_core::mapper::IterationSpec;
use hhtab_core::synth::SynthData;

/// Owned pipeline inputs built from synthetic data.
pub struct Fixture {
    pub region: Region,
    pub race_multiplicity: usize,
    pub levels: Vec<PopulationGroupLevel>,
    pub blocks: Vec<GeoCode>,
    pub iterations: Vec<CharacteristicIteration>,
    pub geo: GeoUniverse,
    pub spec: IterationSpec,
    pub t01001: T01001Counts,
    pub records: Vec<HouseholdRecord>,
}

impl Fixture {
    pub fn new(data: SynthData, levels: Vec<PopulationGroupLevel>) -> Self {
        Self {
            region: data.region,
            race_multiplicity: data.race_multiplicity,
            levels,
            geo: GeoUniverse::from_blocks(&data.blocks),
            spec: IterationSpec::new(data.iterations.clone()).unwrap(),
            blocks: data.blocks,
            iterations: data.iterations,
            t01001: data.t01001,
            records: data.records,
        }
    }

    pub fn total(&self) -> f64 {
        self.levels.iter().map(|l| l.rho_ht + l.rho_t).sum()
    }

    pub fn params(&self) -> PipelineParams<'_> {
        PipelineParams {
            region: self.region,
            race_multiplicity: self.race_multiplicity,
            declared_total: self.total(),
            levels: &self.levels,
            geo: &self.geo,
            spec: &self.spec,
            t01001: &self.t01001,
        }
    }

    pub fn run(&self, noise: NoiseMode, exec: Execution) -> PipelineOutput {
        self.run_on(&self.records, noise, exec)
    }

    pub fn run_on(&self, records: &[HouseholdRecord], noise: NoiseMode, exec: Execution) -> PipelineOutput {
        hhtab_core::engine::run_pipeline(records, &self.params(), noise, exec).unwrap()
    }
}

/// The eleven tabulated levels with the given per-class budgets.
pub fn reference_levels(th: Thresholds) -> Vec<PopulationGroupLevel> {
    hhtab_core::planner::reference_levels()
        .into_iter()
        .zip(hhtab_core::planner::reference_rhos())
        .enumerate()
        .map(|(i, ((g, it, _), rho))| PopulationGroupLevel::new(i + 1, g, it, rho, rho, th).unwrap())
        .collect()
}

pub fn csv_bytes(out: &PipelineOutput) -> Vec<u8> {
    let mut buf = Vec::new();
    write_release_csv(&mut buf, out).unwrap();
    buf
}

pub fn csv_rows(out: &PipelineOutput) -> Vec<OutputRow> {
    hhtab_core::io::read_release_csv(csv_bytes(out).as_slice()).unwrap().1
}

/// (region, level, geo id, iteration, variant, label) with the value dropped.
pub fn row_keys(rows: &[OutputRow]) -> Vec<[String; 6]> {
    rows.iter()
        .map(|r| {
            [
                r.region.clone(),
                r.level.clone(),
                r.geo_id.clone(),
                r.iteration_code.clone(),
                r.table_variant.clone(),
                r.cell_label.clone(),
            ]
        })
        .collect()
}

// Household-type codes: 1 married couple, 2 male no spouse, 3 female no
// spouse, 4 alone, 5 not alone. Tenure: 1 mortgage, 2 free, 3 renter.
const HT_ROWS: [(&str, &[u8]); 9] = [
    ("Total", &[1, 2, 3, 4, 5]),
    ("Family Household", &[1, 2, 3]),
    ("Married Couple Family", &[1]),
    ("Other Family", &[2, 3]),
    ("Male householder, no spouse present", &[2]),
    ("Female householder, no spouse present", &[3]),
    ("Nonfamily Household", &[4, 5]),
    ("Householder Living Alone", &[4]),
    ("Householder Not Living Alone", &[5]),
];
const T_ROWS: [(&str, &[u8]); 4] = [
    ("Total", &[1, 2, 3]),
    ("Owned with a mortgage or a loan", &[1]),
    ("Owned free and clear", &[2]),
    ("Renter Occupied", &[3]),
];

fn ht_rows(c: i64, th: &Thresholds) -> (&'static str, Vec<usize>) {
    if c > th.theta3 {
        ("T03004", (0..9).collect())
    } else if c > th.theta2 {
        ("T03003", vec![0, 1, 2, 3, 6, 7, 8])
    } else if c > th.theta1 {
        ("T03002", vec![0, 1, 6])
    } else {
        ("T03001", vec![0])
    }
}

fn t_rows(c: i64, th: &Thresholds) -> (&'static str, Vec<usize>) {
    if c > th.psi1 {
        ("T04002", vec![0, 1, 2, 3])
    } else {
        ("T04001", vec![0])
    }
}

fn entity(g: &GeoCode, level: GeoLevel, region: Region) -> Option<String> {
    match level {
        GeoLevel::Nation => Some(region.code().to_owned()),
        GeoLevel::State => Some(g.state.clone()),
        GeoLevel::County => Some(g.county.clone()),
        GeoLevel::Tract => Some(g.tract.clone()),
        GeoLevel::Place => g.place.clone(),
        GeoLevel::Aiannh => g.aiannh.clone(),
    }
}

fn member(r: &HouseholdRecord, it: &CharacteristicIteration) -> bool {
    let codes = r.race_eth.race_codes();
    match it.kind {
        IterationKind::RaceAlone => codes.iter().all(|&c| it.member_codes.contains(c)),
        IterationKind::RaceAloneOrCombo => codes.iter().any(|&c| it.member_codes.contains(c)),
        IterationKind::Ethnicity => it.member_codes.contains(r.race_eth.ethnicity_code()),
    }
}

/// Exact tables computed by brute force: for every level and every T01001
/// group of that level, scan all records. Shares no code with the engine.
pub fn naive_tabulate(
    region: Region,
    records: &[HouseholdRecord],
    levels: &[PopulationGroupLevel],
    iterations: &[CharacteristicIteration],
    t01001: &T01001Counts,
) -> Vec<OutputRow> {
    let mut out = Vec::new();
    for level in levels {
        let name = format!("{}-{}", level.geo_level, level.iter_level);
        let mut ht_part = Vec::new();
        let mut t_part = Vec::new();
        for (group, c) in t01001.iter() {
            if group.geo_level != level.geo_level {
                continue;
            }
            let Some(it) = iterations
                .iter()
                .find(|i| i.iteration_code == group.iteration_code && i.level == level.iter_level)
            else {
                continue;
            };
            let inside: Vec<&HouseholdRecord> = records
                .iter()
                .filter(|r| entity(&r.geo, level.geo_level, region).as_deref() == Some(group.entity_id.as_str()))
                .filter(|r| member(r, it))
                .collect();
            let row = |variant: &str, label: &str, value: usize| OutputRow {
                region: region.code().to_owned(),
                level: name.clone(),
                geo_id: group.entity_id.clone(),
                iteration_code: group.iteration_code.clone(),
                table_variant: variant.to_owned(),
                cell_label: label.to_owned(),
                value: value as i64,
            };
            let (v, idx) = ht_rows(c, &level.thresholds);
            for i in idx {
                let (label, codes) = HT_ROWS[i];
                let n = inside.iter().filter(|r| codes.contains(&r.household_type.code())).count();
                ht_part.push(row(v, label, n));
            }
            let (v, idx) = t_rows(c, &level.thresholds);
            for i in idx {
                let (label, codes) = T_ROWS[i];
                let n = inside.iter().filter(|r| codes.contains(&r.tenure.code())).count();
                t_part.push(row(v, label, n));
            }
        }
        out.extend(ht_part);
        out.extend(t_part);
    }
    out
}

pub fn sorted(mut rows: Vec<OutputRow>) -> Vec<OutputRow> {
    rows.sort_by(|a, b| {
        (&a.level, &a.geo_id, &a.iteration_code, &a.table_variant, &a.cell_label).cmp(&(
            &b.level,
            &b.geo_id,
            &b.iteration_code,
            &b.table_variant,
            &b.cell_label,
        ))
    });
    rows
}

/// Whether every shell in parsed output re-sums from its basis rows.
pub fn marginals_consistent(rows: &[OutputRow]) -> bool {
    use std::collections::BTreeMap;
    let mut shells: BTreeMap<(&str, &str, &str, &str), BTreeMap<&str, i64>> = BTreeMap::new();
    for r in rows {
        shells
            .entry((&r.level, &r.geo_id, &r.iteration_code, &r.table_variant))
            .or_default()
            .insert(&r.cell_label, r.value);
    }
    shells.iter().all(|((_, _, _, v), cells)| {
        let v: hhtab_core::domain::TableVariant = v.parse().unwrap();
        v.shell().iter().all(|(label, _)| {
            // sum of basis cells whose code sets lie inside this row's set
            let table = if v.name().starts_with("T03") { &HT_ROWS[..] } else { &T_ROWS[..] };
            let set = table.iter().find(|(l, _)| l == label).unwrap().1;
            let sum: i64 = v
                .basis()
                .iter()
                .filter(|b| {
                    let bset = table.iter().find(|(l, _)| l == *b).unwrap().1;
                    bset.iter().all(|x| set.contains(x))
                })
                .map(|b| cells[b])
                .sum();
            cells.get(label) == Some(&sum)
        })
    })
}

//! Budget-free postprocessing of released bases: marginal aggregation into
//! full table shells, and suppression of groups without T01001 counts.
//!
//! Nothing here reads microdata, draws randomness or touches the ledger.

use serde::Serialize;
use thiserror::Error;

use crate::domain::{PopulationGroup, T01001Counts, TableVariant};
use crate::engine::{LevelCandidates, LevelRelease};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PostprocessError {
    #[error("{variant} expects a basis of length {expected}, got {got}")]
    BasisLength {
        variant: TableVariant,
        expected: usize,
        got: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ShellRow {
    pub label: &'static str,
    pub value: i64,
}

/// A complete published table: basis cells plus every marginal.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TableShell {
    pub variant: TableVariant,
    pub rows: Vec<ShellRow>,
}

impl TableShell {
    pub fn get(&self, label: &str) -> Option<i64> {
        self.rows.iter().find(|r| r.label == label).map(|r| r.value)
    }
}

/// Expands a (noisy) basis vector into the variant's full shell.
pub fn build_shell(variant: TableVariant, basis: &[i64]) -> Result<TableShell, PostprocessError> {
    if basis.len() != variant.basis_size() {
        return Err(PostprocessError::BasisLength {
            variant,
            expected: variant.basis_size(),
            got: basis.len(),
        });
    }
    let rows = variant
        .shell()
        .iter()
        .map(|&(label, children)| ShellRow {
            label,
            value: children.iter().map(|&i| basis[i]).sum(),
        })
        .collect();
    Ok(TableShell { variant, rows })
}

/// Drops every candidate group that has no T01001 count.
pub fn apply_t01001_suppression(
    candidates: &[LevelCandidates],
    t01001: &T01001Counts,
) -> Vec<LevelCandidates> {
    candidates
        .iter()
        .map(|lc| LevelCandidates {
            level: lc.level.clone(),
            groups: lc
                .groups
                .iter()
                .filter(|g| t01001.contains(g))
                .cloned()
                .collect(),
        })
        .collect()
}

/// One released table for one population group.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ReleasedShell {
    pub level_index: usize,
    pub level: String,
    pub group: PopulationGroup,
    pub shell: TableShell,
}

/// Builds the HT and T shells of every group in a level release, in
/// stacking order.
pub fn level_shells(release: &LevelRelease) -> Vec<ReleasedShell> {
    let name = release.level.name();
    let mut out = Vec::new();
    for vector in [&release.household_type, &release.tenure] {
        for (group, variant, basis) in vector.group_slices() {
            out.push(ReleasedShell {
                level_index: release.level.index,
                level: name.clone(),
                group: group.clone(),
                shell: build_shell(variant, basis).expect("slices follow basis sizes"),
            });
        }
    }
    out
}

//! zCDP privacy-loss accounting.
//!
//! A level release that adds `N_Z(s/(2ρ))` noise to a stacked count vector
//! whose L2 sensitivity is `√s` (add/remove neighbours) costs `ρ`; under
//! replace-one neighbours the sensitivity is `√(2s)` and the cost `2ρ`.
//! Costs compose additively.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::domain::{PopulationGroupLevel, TableClass};

/// Absolute slack when comparing spend against the declared total.
pub const BUDGET_SLACK: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AccountantError {
    #[error("privacy-loss parameter must be positive and finite (got {0})")]
    NonPositiveRho(f64),
    #[error("stability must be at least 1")]
    ZeroStability,
    #[error("declared total budget must be positive and finite (got {0})")]
    InvalidTotal(f64),
    #[error("budget exceeded: charging {requested} on top of {spent} exceeds declared total {total}")]
    BudgetExceeded {
        requested: f64,
        spent: f64,
        total: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NeighborModel {
    /// Add or remove one record.
    Unbounded,
    /// Replace one record.
    Bounded,
}

impl NeighborModel {
    /// Squared-sensitivity multiplier relative to the add/remove case.
    pub fn factor(self) -> f64 {
        match self {
            NeighborModel::Unbounded => 1.0,
            NeighborModel::Bounded => 2.0,
        }
    }

    pub fn l2_sensitivity(self, stability: usize) -> f64 {
        (self.factor() * stability as f64).sqrt()
    }
}

/// One noisy release, recorded before its noise is drawn.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Charge {
    pub level_index: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub level: Option<String>,
    pub table_class: TableClass,
    pub stability: usize,
    pub l2_sensitivity: f64,
    /// The ρ handed to the vector mechanism (level budget divided by stability).
    pub rho_parameter: f64,
}

impl Charge {
    /// `l2_sensitivity² · rho_parameter`.
    pub fn effective_cost(&self) -> f64 {
        self.l2_sensitivity * self.l2_sensitivity * self.rho_parameter
    }

    fn cost_under(&self, model: NeighborModel) -> f64 {
        model.factor() * self.stability as f64 * self.rho_parameter
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BudgetLedger {
    declared_total: f64,
    neighbor_model: NeighborModel,
    charges: Vec<Charge>,
}

impl BudgetLedger {
    pub fn new(declared_total: f64, neighbor_model: NeighborModel) -> Result<Self, AccountantError> {
        if !(declared_total.is_finite() && declared_total > 0.0) {
            return Err(AccountantError::InvalidTotal(declared_total));
        }
        Ok(Self {
            declared_total,
            neighbor_model,
            charges: Vec::new(),
        })
    }

    pub fn declared_total(&self) -> f64 {
        self.declared_total
    }

    pub fn neighbor_model(&self) -> NeighborModel {
        self.neighbor_model
    }

    pub fn charges(&self) -> &[Charge] {
        &self.charges
    }

    /// Records a release of a level with budget `rho` and stability `s`.
    /// Fails, leaving the ledger untouched, if the declared total would be
    /// exceeded.
    pub fn charge(
        &mut self,
        level_index: usize,
        table_class: TableClass,
        s: usize,
        rho: f64,
    ) -> Result<&Charge, AccountantError> {
        self.push(level_index, None, table_class, s, rho)
    }

    /// [`charge`](Self::charge) for a configured level and table class.
    pub fn charge_level(
        &mut self,
        level: &PopulationGroupLevel,
        table_class: TableClass,
        s: usize,
    ) -> Result<&Charge, AccountantError> {
        self.push(level.index, Some(level.name()), table_class, s, level.rho(table_class))
    }

    fn push(
        &mut self,
        level_index: usize,
        label: Option<String>,
        table_class: TableClass,
        s: usize,
        rho: f64,
    ) -> Result<&Charge, AccountantError> {
        if !(rho.is_finite() && rho > 0.0) {
            return Err(AccountantError::NonPositiveRho(rho));
        }
        if s == 0 {
            return Err(AccountantError::ZeroStability);
        }
        let charge = Charge {
            level_index,
            level: label,
            table_class,
            stability: s,
            l2_sensitivity: self.neighbor_model.l2_sensitivity(s),
            rho_parameter: rho / s as f64,
        };
        let requested = charge.effective_cost();
        let spent = self.total_loss();
        if spent + requested > self.declared_total + BUDGET_SLACK {
            return Err(AccountantError::BudgetExceeded {
                requested,
                spent,
                total: self.declared_total,
            });
        }
        self.charges.push(charge);
        Ok(self.charges.last().expect("just pushed"))
    }

    /// Remaining headroom before the declared total.
    pub fn remaining(&self) -> f64 {
        self.declared_total - self.total_loss()
    }

    /// Sum of effective costs under this ledger's neighbour model.
    pub fn total_loss(&self) -> f64 {
        self.charges.iter().map(Charge::effective_cost).sum()
    }

    /// Total loss the same releases would incur under `model`.
    pub fn total_under(&self, model: NeighborModel) -> f64 {
        self.charges.iter().map(|c| c.cost_under(model)).sum()
    }

    pub fn report(&self) -> AccountingReport {
        AccountingReport {
            neighbor_model: self.neighbor_model,
            declared_total: self.declared_total,
            charges: self
                .charges
                .iter()
                .map(|c| ChargeRow {
                    level_index: c.level_index,
                    level: c.level.clone(),
                    table_class: c.table_class,
                    stability: c.stability,
                    rho_parameter: c.rho_parameter,
                    l2_unbounded: NeighborModel::Unbounded.l2_sensitivity(c.stability),
                    l2_bounded: NeighborModel::Bounded.l2_sensitivity(c.stability),
                    cost_unbounded: c.cost_under(NeighborModel::Unbounded),
                    cost_bounded: c.cost_under(NeighborModel::Bounded),
                })
                .collect(),
            total_unbounded: self.total_under(NeighborModel::Unbounded),
            total_bounded: self.total_under(NeighborModel::Bounded),
        }
    }
}

/// Machine-readable accounting report written next to the outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccountingReport {
    pub neighbor_model: NeighborModel,
    pub declared_total: f64,
    pub charges: Vec<ChargeRow>,
    pub total_unbounded: f64,
    pub total_bounded: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChargeRow {
    pub level_index: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub level: Option<String>,
    pub table_class: TableClass,
    pub stability: usize,
    pub rho_parameter: f64,
    pub l2_unbounded: f64,
    pub l2_bounded: f64,
    pub cost_unbounded: f64,
    pub cost_bounded: f64,
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn unbounded_cost_equals_level_budget() {
        let mut l = BudgetLedger::new(10.0, NeighborModel::Unbounded).unwrap();
        let c = l.charge(1, TableClass::HouseholdType, 9, 1.92).unwrap();
        assert!((c.effective_cost() - 1.92).abs() < 1e-12);
        assert!((c.l2_sensitivity - 3.0).abs() < 1e-15);
    }

    #[test]
    fn bounded_cost_doubles() {
        let mut l = BudgetLedger::new(10.0, NeighborModel::Bounded).unwrap();
        let c = l.charge(1, TableClass::HouseholdType, 9, 1.92).unwrap();
        assert!((c.effective_cost() - 3.84).abs() < 1e-12);
        assert!((c.l2_sensitivity - 18f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn zero_rho_rejected() {
        let mut l = BudgetLedger::new(1.0, NeighborModel::Unbounded).unwrap();
        assert_eq!(
            l.charge(1, TableClass::Tenure, 9, 0.0),
            Err(AccountantError::NonPositiveRho(0.0))
        );
        assert_eq!(l.charge(1, TableClass::Tenure, 0, 0.5), Err(AccountantError::ZeroStability));
        assert!(l.charges().is_empty());
    }

    #[test]
    fn empty_ledger_is_zero() {
        let l = BudgetLedger::new(1.0, NeighborModel::Unbounded).unwrap();
        assert_eq!(l.total_loss(), 0.0);
        assert_eq!(l.report().total_bounded, 0.0);
    }

    #[test]
    fn fails_closed() {
        let mut l = BudgetLedger::new(1.0, NeighborModel::Unbounded).unwrap();
        l.charge(1, TableClass::HouseholdType, 9, 0.6).unwrap();
        let err = l.charge(1, TableClass::Tenure, 9, 0.6).unwrap_err();
        assert!(matches!(err, AccountantError::BudgetExceeded { .. }));
        assert_eq!(l.charges().len(), 1);
        // exactly filling the budget is allowed
        l.charge(1, TableClass::Tenure, 9, 0.4).unwrap();
    }

    #[test]
    fn decimal_literals_fit_within_slack() {
        let rhos = [1.92, 1.92, 0.14, 0.14, 0.14, 0.14, 0.0069, 0.0069, 0.0069, 0.0069, 0.0069];
        let mut l = BudgetLedger::new(8.869, NeighborModel::Unbounded).unwrap();
        for (i, r) in rhos.iter().enumerate() {
            l.charge(i + 1, TableClass::HouseholdType, 9, *r).unwrap();
            l.charge(i + 1, TableClass::Tenure, 9, *r).unwrap();
        }
        assert!((l.total_loss() - 8.869).abs() < 1e-9);
        assert!((l.total_under(NeighborModel::Bounded) - 17.738).abs() < 1e-9);
    }

    proptest! {
        #[test]
        fn composition_is_additive_and_order_free(
            charges in proptest::collection::vec((1usize..12, 1usize..10, 1e-4f64..2.0), 0..20)
        ) {
            let mut fwd = BudgetLedger::new(1e6, NeighborModel::Unbounded).unwrap();
            let mut rev = BudgetLedger::new(1e6, NeighborModel::Unbounded).unwrap();
            for &(lvl, s, rho) in &charges {
                fwd.charge(lvl, TableClass::HouseholdType, s, rho).unwrap();
            }
            for &(lvl, s, rho) in charges.iter().rev() {
                rev.charge(lvl, TableClass::HouseholdType, s, rho).unwrap();
            }
            let want: f64 = charges.iter().map(|c| c.2).sum();
            prop_assert!((fwd.total_loss() - want).abs() < 1e-9);
            prop_assert!((fwd.total_loss() - rev.total_loss()).abs() < 1e-9);
            let r = fwd.report();
            prop_assert!((r.total_bounded - 2.0 * r.total_unbounded).abs() < 1e-9);
        }
    }
}

//! Deciders for the Σ1-provability logic of HA, its fast variant, and the
//! fast provability logic of self-completing theories. The first two both
//! reduce to `⊢_iGLC A⁺`; the third is iGLC itself.

use thiserror::Error;

use crate::formula::Formula;
use crate::iglc::{decide_iglc, Verdict};
use crate::nnil::NnilError;
use crate::tnnil::tnnil_plus;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum HaError {
    #[error(transparent)]
    Transform(#[from] NnilError),
}

/// `A` is in the logic iff iGLC proves `A⁺`. An `Invalid` countermodel
/// refutes `A⁺`, not necessarily `A`.
pub fn in_ha_sigma1_logic(a: &Formula, budget: u64) -> Result<Verdict, HaError> {
    Ok(decide_iglc(&tnnil_plus(a)?, budget))
}

pub fn in_ha_fast_sigma1_logic(a: &Formula, budget: u64) -> Result<Verdict, HaError> {
    in_ha_sigma1_logic(a, budget)
}

pub fn in_selfcompletion_fast_logic(a: &Formula, budget: u64) -> Verdict {
    decide_iglc(a, budget)
}

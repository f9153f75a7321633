//! Decision procedure for iGLC (intuitionistic Löb logic plus the
//! completeness principle `A -> []A`) and the saturation machinery behind
//! its finite model property.

use std::collections::BTreeSet;

use serde::Serialize;
use thiserror::Error;

use crate::canonical::{Budget, EliminationStats, Exhausted, TypeSpace};
use crate::formula::{subsentences, Formula};
use crate::kripke::{check_frame, KripkeModel, WorldId};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    /// The trace summarizes the elimination run that found no refutation.
    Valid {
        witness: Option<EliminationStats>,
    },
    /// `countermodel` is finite, irreflexive and realistic, and `root`
    /// does not force the query.
    Invalid {
        countermodel: KripkeModel,
        root: WorldId,
    },
    BudgetExceeded,
}

impl Verdict {
    pub fn is_valid(&self) -> bool {
        matches!(self, Verdict::Valid { .. })
    }

    pub fn is_invalid(&self) -> bool {
        matches!(self, Verdict::Invalid { .. })
    }

    pub fn label(&self) -> &'static str {
        match self {
            Verdict::Valid { .. } => "VALID",
            Verdict::Invalid { .. } => "INVALID",
            Verdict::BudgetExceeded => "BUDGET_EXCEEDED",
        }
    }

    pub fn countermodel(&self) -> Option<(&KripkeModel, WorldId)> {
        match self {
            Verdict::Invalid { countermodel, root } => Some((countermodel, *root)),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error, Serialize)]
#[error("step budget exhausted")]
pub struct BudgetExceeded;

impl From<Exhausted> for BudgetExceeded {
    fn from(_: Exhausted) -> Self {
        BudgetExceeded
    }
}

/// Decides `⊢_iGLC a` within `budget` steps.
pub fn decide_iglc(a: &Formula, budget: u64) -> Verdict {
    decide_with(a, &mut Budget::new(budget))
}

pub(crate) fn decide_with(a: &Formula, budget: &mut Budget) -> Verdict {
    match search(a, budget) {
        Ok(v) => v,
        Err(Exhausted) => Verdict::BudgetExceeded,
    }
}

fn search(a: &Formula, budget: &mut Budget) -> Result<Verdict, Exhausted> {
    let mut space = TypeSpace::build(a, budget)?;
    space.eliminate(budget)?;
    let Some(root) = space.refuting_type(a) else {
        return Ok(Verdict::Valid {
            witness: Some(space.stats()),
        });
    };
    let model = space.model_from(root).shrink_refutation(1, a);
    let (countermodel, map) = model.renumbered();
    let root = map[&1];
    verify_countermodel(&countermodel, root, a);
    Ok(Verdict::Invalid { countermodel, root })
}

fn verify_countermodel(m: &KripkeModel, root: WorldId, a: &Formula) {
    let report = check_frame(&m.frame().raw());
    assert!(
        report.is_iglc_frame() && m.forces(root, a) == Ok(false),
        "internal error: countermodel for {a} failed verification ({report:?})"
    );
}

/// `gamma ⊢_iGLC a`, i.e. `⊢ ⋀gamma -> a` (empty `gamma` read as `true`).
pub fn derives_iglc(gamma: &[Formula], a: &Formula, budget: u64) -> Verdict {
    derives_with(gamma, a, &mut Budget::new(budget))
}

fn derives_with(gamma: &[Formula], a: &Formula, budget: &mut Budget) -> Verdict {
    decide_with(
        &Formula::imp(Formula::conj(gamma.iter().cloned()), a.clone()),
        budget,
    )
}

fn derives(
    gamma: &BTreeSet<Formula>,
    a: &Formula,
    budget: &mut Budget,
) -> Result<bool, BudgetExceeded> {
    let gamma: Vec<Formula> = gamma.iter().cloned().collect();
    match derives_with(&gamma, a, budget) {
        Verdict::Valid { .. } => Ok(true),
        Verdict::Invalid { .. } => Ok(false),
        Verdict::BudgetExceeded => Err(BudgetExceeded),
    }
}

/// A set of formulas closed under subsentences.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AdequateSet {
    members: BTreeSet<Formula>,
}

impl AdequateSet {
    /// `sub(a) ∪ { []B : B ∈ sub(a) }`.
    pub fn standard(a: &Formula) -> AdequateSet {
        let base = subsentences(a);
        let boxed: Vec<Formula> = base.iter().cloned().map(Formula::boxed).collect();
        let mut members = base;
        members.extend(boxed);
        AdequateSet { members }
    }

    /// Union of the subsentences of `fs`.
    pub fn closure_of<'a>(fs: impl IntoIterator<Item = &'a Formula>) -> AdequateSet {
        let mut members = BTreeSet::new();
        for f in fs {
            members.extend(subsentences(f));
        }
        AdequateSet { members }
    }

    /// Returns `None` unless `members` is closed under subsentences.
    pub fn from_members(members: BTreeSet<Formula>) -> Option<AdequateSet> {
        let closed = members
            .iter()
            .all(|f| subsentences(f).iter().all(|g| members.contains(g)));
        closed.then_some(AdequateSet { members })
    }

    pub fn members(&self) -> &BTreeSet<Formula> {
        &self.members
    }

    pub fn contains(&self, f: &Formula) -> bool {
        self.members.contains(f)
    }

    /// Enumeration order used by [`saturate`]: by size, then rendering.
    pub fn enumeration_order(&self) -> Vec<Formula> {
        let mut v: Vec<Formula> = self.members.iter().cloned().collect();
        v.sort_by_cached_key(|f| (f.size(), f.render()));
        v
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SaturatedSet {
    members: BTreeSet<Formula>,
}

impl SaturatedSet {
    pub fn members(&self) -> &BTreeSet<Formula> {
        &self.members
    }

    pub fn into_members(self) -> BTreeSet<Formula> {
        self.members
    }
}

/// Checks that `s` is consistent, contains every member of `x` it derives,
/// and contains a disjunct of each of its disjunctions.
pub fn is_saturated(
    s: &BTreeSet<Formula>,
    x: &AdequateSet,
    budget: u64,
) -> Result<bool, BudgetExceeded> {
    is_saturated_with(s, x, &mut Budget::new(budget))
}

fn is_saturated_with(
    s: &BTreeSet<Formula>,
    x: &AdequateSet,
    budget: &mut Budget,
) -> Result<bool, BudgetExceeded> {
    if !s.iter().all(|f| x.contains(f)) {
        return Ok(false);
    }
    if derives(s, &Formula::Bottom, budget)? {
        return Ok(false);
    }
    for b in x.members() {
        if !s.contains(b) && derives(s, b, budget)? {
            return Ok(false);
        }
    }
    for f in s {
        if let Formula::Or(c, d) = f {
            if !s.contains(&**c) && !s.contains(&**d) {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SaturateError {
    #[error("starting set is not contained in the adequate set")]
    NotInAdequateSet,
    #[error("starting set already derives the goal")]
    GoalDerivable,
    #[error(transparent)]
    Budget(#[from] BudgetExceeded),
}

/// Extends `r` to an `x`-saturated set that still does not derive `a`.
///
/// Members of `x` are visited cyclically in [`AdequateSet::enumeration_order`];
/// a derived member is added, and for a derived disjunction the left disjunct
/// is added unless that would derive `a`, in which case the right one is.
/// The loop ends after a full pass that changes nothing.
pub fn saturate(
    r: &BTreeSet<Formula>,
    a: &Formula,
    x: &AdequateSet,
    budget: u64,
) -> Result<SaturatedSet, SaturateError> {
    let mut budget = Budget::new(budget);
    if !r.iter().all(|f| x.contains(f)) {
        return Err(SaturateError::NotInAdequateSet);
    }
    if derives(r, a, &mut budget)? {
        return Err(SaturateError::GoalDerivable);
    }
    let order = x.enumeration_order();
    let mut s = r.clone();
    loop {
        let mut changed = false;
        for b in &order {
            if !derives(&s, b, &mut budget)? {
                continue;
            }
            let mut next = s.clone();
            next.insert(b.clone());
            if let Formula::Or(c, d) = b {
                let mut with_c = next.clone();
                with_c.insert((**c).clone());
                if !derives(&with_c, a, &mut budget)? {
                    next = with_c;
                } else {
                    next.insert((**d).clone());
                }
            }
            if next != s {
                s = next;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    Ok(SaturatedSet { members: s })
}

//! The infinite model obtained from a finite rooted irreflexive realistic
//! model by appending a reversed copy of `1 + ω` below its root.
//!
//! Core worlds are relabelled `1..=r` with `r` the root. Every tail world
//! `i > r` lies below all of `1..=i` and sees `1..i`; world `0` lies below
//! everything and sees every positive world. Atoms are false off the core.
//! Truth sets are computed exactly: a tail world's cone is `1..=i`, so the
//! truncation to `1..=H` is a generated submodel, the tail profiles are
//! antitone and settle before `H`, and world `0` is evaluated clause by
//! clause from the settled profile.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::formula::{subsentences_ordered, Formula};
use crate::kripke::{check_frame, Frame, KripkeModel, RawFrame, WorldId};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SolovayError {
    #[error("core is not a partial order")]
    NotPoset,
    #[error("core lacks the model property")]
    NoModelProperty,
    #[error("core is not irreflexive")]
    NotIrreflexive,
    #[error("core is not realistic")]
    NotRealistic,
    #[error("core has no least world")]
    NoRoot,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExtendedModel {
    core: KripkeModel,
    r: WorldId,
    relabel: BTreeMap<WorldId, WorldId>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TruthSet {
    Finite(BTreeSet<WorldId>),
    All,
}

impl TruthSet {
    pub fn contains(&self, w: WorldId) -> bool {
        match self {
            TruthSet::All => true,
            TruthSet::Finite(s) => s.contains(&w),
        }
    }

    pub fn intersect(&self, other: &TruthSet) -> TruthSet {
        match (self, other) {
            (TruthSet::All, x) | (x, TruthSet::All) => x.clone(),
            (TruthSet::Finite(a), TruthSet::Finite(b)) => {
                TruthSet::Finite(a.intersection(b).copied().collect())
            }
        }
    }

    pub fn union(&self, other: &TruthSet) -> TruthSet {
        match (self, other) {
            (TruthSet::All, _) | (_, TruthSet::All) => TruthSet::All,
            (TruthSet::Finite(a), TruthSet::Finite(b)) => {
                TruthSet::Finite(a.union(b).copied().collect())
            }
        }
    }
}

impl fmt::Display for TruthSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TruthSet::All => write!(f, "ALL"),
            TruthSet::Finite(s) => {
                let items: Vec<String> = s.iter().map(|w| w.to_string()).collect();
                write!(f, "[{}]", items.join(", "))
            }
        }
    }
}

impl Serialize for TruthSet {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            TruthSet::All => s.serialize_str("ALL"),
            TruthSet::Finite(set) => set.serialize(s),
        }
    }
}

/// Validates `core` and relabels it: the root becomes `r = |core|`, the
/// other worlds `1..r` in increasing order of their original ids.
pub fn extend_model(core: &KripkeModel) -> Result<ExtendedModel, SolovayError> {
    let frame = core.frame();
    let report = check_frame(&frame.raw());
    if !report.is_poset {
        return Err(SolovayError::NotPoset);
    }
    if !report.has_model_property {
        return Err(SolovayError::NoModelProperty);
    }
    if !report.irreflexive {
        return Err(SolovayError::NotIrreflexive);
    }
    if !report.realistic {
        return Err(SolovayError::NotRealistic);
    }
    let worlds = frame.worlds();
    let root = worlds
        .iter()
        .copied()
        .find(|&w| worlds.iter().all(|&v| frame.leq().contains(&(w, v))))
        .ok_or(SolovayError::NoRoot)?;

    let r = worlds.len() as WorldId;
    let mut others: Vec<WorldId> = worlds.iter().copied().filter(|&w| w != root).collect();
    others.sort_unstable();
    let mut relabel: BTreeMap<WorldId, WorldId> = others
        .into_iter()
        .enumerate()
        .map(|(i, w)| (w, i as WorldId + 1))
        .collect();
    relabel.insert(root, r);

    let raw = RawFrame::new(
        1..=r,
        frame.leq().iter().map(|(a, b)| (relabel[a], relabel[b])),
        frame.r().iter().map(|(a, b)| (relabel[a], relabel[b])),
    );
    let valuation = core
        .valuation()
        .iter()
        .map(|(p, set)| (p.clone(), set.iter().map(|w| relabel[w]).collect()))
        .collect();
    let core = KripkeModel::new(
        Frame::new(raw).expect("relabelling preserves the frame"),
        valuation,
    )
    .expect("relabelling preserves monotonicity");
    Ok(ExtendedModel { core, r, relabel })
}

/// Forcing data for one formula on worlds `0..=H`.
struct Evaluation {
    subs: Vec<Formula>,
    horizon: WorldId,
    /// `finite[k][j - 1]`: world `j` in `1..=H` forces `subs[k]`
    finite: Vec<Vec<bool>>,
    zero: Vec<bool>,
}

impl ExtendedModel {
    pub fn core(&self) -> &KripkeModel {
        &self.core
    }

    pub fn r(&self) -> WorldId {
        self.r
    }

    /// Original core world id to its label in `1..=r`.
    pub fn relabelling(&self) -> &BTreeMap<WorldId, WorldId> {
        &self.relabel
    }

    pub fn horizon(&self, a: &Formula) -> WorldId {
        self.r + subsentences_ordered(a).len() as WorldId + 1
    }

    /// The generated submodel on worlds `1..=h`.
    pub fn truncation(&self, h: WorldId) -> KripkeModel {
        let r = self.r;
        let h = h.max(r);
        let mut leq: BTreeSet<(WorldId, WorldId)> = self.core.frame().leq().clone();
        let mut rel: BTreeSet<(WorldId, WorldId)> = self.core.frame().r().clone();
        for i in r + 1..=h {
            for j in 1..=i {
                leq.insert((i, j));
                if j < i {
                    rel.insert((i, j));
                }
            }
        }
        let frame = Frame::new(RawFrame::new(1..=h, leq, rel)).expect("truncations are frames");
        KripkeModel::new(frame, self.core.valuation().clone()).expect("core valuation is monotone")
    }

    fn evaluate(&self, a: &Formula) -> Evaluation {
        let subs = subsentences_ordered(a);
        let horizon = self.horizon(a);
        let model = self.truncation(horizon);
        let finite: Vec<Vec<bool>> = subs.iter().map(|f| model.truth_vector(f)).collect();
        let index = |f: &Formula| subs.iter().position(|g| g == f).expect("subformula");
        let everywhere = |k: usize| finite[k].iter().all(|&b| b);
        let mut zero = vec![false; subs.len()];
        for (k, f) in subs.iter().enumerate() {
            zero[k] = match f {
                Formula::Atom(_) | Formula::Bottom => false,
                Formula::And(b, c) => zero[index(b)] && zero[index(c)],
                Formula::Or(b, c) => zero[index(b)] || zero[index(c)],
                Formula::Imp(b, c) => (!zero[index(b)] || zero[index(c)]) && everywhere(k),
                Formula::Box(b) => everywhere(index(b)),
            };
        }
        let eval = Evaluation {
            subs,
            horizon,
            finite,
            zero,
        };
        let last = eval.profile(horizon);
        assert_eq!(
            last,
            eval.profile(horizon - 1),
            "tail profiles must settle before the horizon"
        );
        eval
    }

    /// Subformulas of `a` forced at tail worlds `r+1..=H`, in order.
    pub fn tail_profiles(&self, a: &Formula) -> Vec<BTreeSet<Formula>> {
        let eval = self.evaluate(a);
        (self.r + 1..=eval.horizon)
            .map(|i| eval.profile(i))
            .collect()
    }

    /// Whether world `w` of the infinite model forces `a`.
    pub fn forces(&self, w: WorldId, a: &Formula) -> bool {
        let eval = self.evaluate(a);
        let k = eval.subs.len() - 1;
        match w {
            0 => eval.zero[k],
            w if w <= eval.horizon => eval.finite[k][w as usize - 1],
            _ => eval.finite[k][eval.horizon as usize - 1],
        }
    }

    /// `{i : i forces a}`, which is either finite or everything.
    pub fn truth_set(&self, a: &Formula) -> TruthSet {
        let eval = self.evaluate(a);
        let k = eval.subs.len() - 1;
        if eval.zero[k] {
            return TruthSet::All;
        }
        assert!(
            !eval.finite[k][eval.horizon as usize - 1],
            "a formula true along the whole tail is true at 0"
        );
        TruthSet::Finite(
            (1..=eval.horizon)
                .filter(|&j| eval.finite[k][j as usize - 1])
                .collect(),
        )
    }
}

pub fn truth_set(m: &ExtendedModel, a: &Formula) -> TruthSet {
    m.truth_set(a)
}

pub fn tail_profiles(m: &ExtendedModel, a: &Formula) -> Vec<BTreeSet<Formula>> {
    m.tail_profiles(a)
}

impl Evaluation {
    fn profile(&self, i: WorldId) -> BTreeSet<Formula> {
        self.subs
            .iter()
            .enumerate()
            .filter(|(k, _)| self.finite[*k][i as usize - 1])
            .map(|(_, f)| f.clone())
            .collect()
    }
}

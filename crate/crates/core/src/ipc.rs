//! Intuitionistic propositional logic: a terminating contraction-free
//! sequent search (G4ip) decides derivability; countermodels for failed
//! queries come from the finite canonical model and are verified before
//! they are returned.

use std::cell::RefCell;
use std::collections::{BTreeSet, HashMap};

use thiserror::Error;

use crate::canonical::{Budget, TypeSpace};
use crate::formula::Formula;
use crate::kripke::{KripkeModel, WorldId};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum IpcError {
    #[error("IPC queries must be box-free, got {0}")]
    ContainsBox(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum IpcVerdict {
    Valid,
    /// `world` forces every assumption and not the goal; the modal relation
    /// of `countermodel` is empty.
    Invalid {
        countermodel: KripkeModel,
        world: WorldId,
    },
}

impl IpcVerdict {
    pub fn is_valid(&self) -> bool {
        matches!(self, IpcVerdict::Valid)
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
struct Sequent {
    context: BTreeSet<Formula>,
    goal: Formula,
}

/// G4ip prover with a verdict cache keyed by sequent.
#[derive(Default)]
pub struct Prover {
    memo: HashMap<Sequent, bool>,
}

impl Prover {
    pub fn new() -> Prover {
        Prover::default()
    }

    pub fn cache_len(&self) -> usize {
        self.memo.len()
    }

    /// True iff the conjunction of `assumptions` implies `goal` in IPC.
    /// Inputs must be box-free.
    pub fn derivable(&mut self, assumptions: &[Formula], goal: &Formula) -> bool {
        let seq = Sequent {
            context: assumptions.iter().cloned().collect(),
            goal: goal.clone(),
        };
        self.prove(seq)
    }

    fn prove(&mut self, seq: Sequent) -> bool {
        if let Some(&v) = self.memo.get(&seq) {
            return v;
        }
        let result = self.search(&seq);
        self.memo.insert(seq, result);
        result
    }

    fn search(&mut self, seq: &Sequent) -> bool {
        let ctx = &seq.context;
        let goal = &seq.goal;
        if ctx.contains(&Formula::Bottom) || ctx.contains(goal) {
            return true;
        }

        // Invertible left rules first.
        for f in ctx {
            match f {
                Formula::And(a, b) => {
                    let ctx = replace(ctx, f, [(**a).clone(), (**b).clone()]);
                    return self.prove(Sequent {
                        context: ctx,
                        goal: goal.clone(),
                    });
                }
                Formula::Or(a, b) => {
                    let left = replace(ctx, f, [(**a).clone()]);
                    let right = replace(ctx, f, [(**b).clone()]);
                    return self.prove(Sequent {
                        context: left,
                        goal: goal.clone(),
                    }) && self.prove(Sequent {
                        context: right,
                        goal: goal.clone(),
                    });
                }
                Formula::Imp(a, b) => {
                    let next = match &**a {
                        Formula::Atom(_) if ctx.contains(a) => Some(vec![(**b).clone()]),
                        Formula::Bottom => Some(vec![]),
                        Formula::And(c, d) => Some(vec![Formula::imp(
                            (**c).clone(),
                            Formula::imp((**d).clone(), (**b).clone()),
                        )]),
                        Formula::Or(c, d) => Some(vec![
                            Formula::imp((**c).clone(), (**b).clone()),
                            Formula::imp((**d).clone(), (**b).clone()),
                        ]),
                        _ => None,
                    };
                    if let Some(next) = next {
                        let ctx = replace(ctx, f, next);
                        return self.prove(Sequent {
                            context: ctx,
                            goal: goal.clone(),
                        });
                    }
                }
                _ => {}
            }
        }

        // Invertible right rules.
        match goal {
            Formula::And(a, b) => {
                return self.prove(Sequent {
                    context: ctx.clone(),
                    goal: (**a).clone(),
                }) && self.prove(Sequent {
                    context: ctx.clone(),
                    goal: (**b).clone(),
                });
            }
            Formula::Imp(a, b) => {
                let mut ctx = ctx.clone();
                ctx.insert((**a).clone());
                return self.prove(Sequent {
                    context: ctx,
                    goal: (**b).clone(),
                });
            }
            _ => {}
        }

        // Non-invertible choices.
        if let Formula::Or(a, b) = goal {
            for g in [a, b] {
                if self.prove(Sequent {
                    context: ctx.clone(),
                    goal: (**g).clone(),
                }) {
                    return true;
                }
            }
        }
        for f in ctx {
            if let Formula::Imp(ab, b) = f {
                if let Formula::Imp(c, d) = &**ab {
                    // (C -> D) -> B:  Γ, D -> B ⊢ C -> D  and  Γ, B ⊢ goal
                    let base = replace(ctx, f, []);
                    let mut left = base.clone();
                    left.insert(Formula::imp((**d).clone(), (**b).clone()));
                    let mut right = base;
                    right.insert((**b).clone());
                    if self.prove(Sequent {
                        context: left,
                        goal: Formula::imp((**c).clone(), (**d).clone()),
                    }) && self.prove(Sequent {
                        context: right,
                        goal: goal.clone(),
                    }) {
                        return true;
                    }
                }
            }
        }
        false
    }
}

fn replace(
    ctx: &BTreeSet<Formula>,
    old: &Formula,
    new: impl IntoIterator<Item = Formula>,
) -> BTreeSet<Formula> {
    let mut out = ctx.clone();
    out.remove(old);
    out.extend(new);
    out
}

thread_local! {
    static PROVER: RefCell<Prover> = RefCell::new(Prover::new());
}

fn check_box_free<'a>(fs: impl IntoIterator<Item = &'a Formula>) -> Result<(), IpcError> {
    for f in fs {
        if !f.is_box_free() {
            return Err(IpcError::ContainsBox(f.render()));
        }
    }
    Ok(())
}

/// Derivability check without countermodel construction.
pub fn ipc_derivable(assumptions: &[Formula], goal: &Formula) -> Result<bool, IpcError> {
    check_box_free(assumptions.iter().chain([goal]))?;
    Ok(PROVER.with(|p| p.borrow_mut().derivable(assumptions, goal)))
}

pub fn ipc_valid(a: &Formula) -> Result<bool, IpcError> {
    ipc_derivable(&[], a)
}

pub fn ipc_implies(a: &Formula, b: &Formula) -> Result<bool, IpcError> {
    ipc_derivable(std::slice::from_ref(a), b)
}

pub fn ipc_equiv(a: &Formula, b: &Formula) -> Result<bool, IpcError> {
    Ok(ipc_implies(a, b)? && ipc_implies(b, a)?)
}

/// Decides `assumptions ⊢ goal` in IPC, returning a countermodel when it
/// fails.
pub fn decide_ipc(assumptions: &[Formula], goal: &Formula) -> Result<IpcVerdict, IpcError> {
    if ipc_derivable(assumptions, goal)? {
        return Ok(IpcVerdict::Valid);
    }
    let query = Formula::imp(Formula::conj(assumptions.iter().cloned()), goal.clone());
    let mut budget = Budget::unlimited();
    let mut space = TypeSpace::build(&query, &mut budget).expect("unlimited budget");
    space.eliminate(&mut budget).expect("unlimited budget");
    let root = space
        .refuting_type(&query)
        .expect("underivable sequents have a canonical countermodel");
    let model = space.model_from(root);

    let refutes = |m: &KripkeModel, w: WorldId| {
        assumptions.iter().all(|a| m.forces(w, a) == Ok(true)) && m.forces(w, goal) == Ok(false)
    };
    let world = model
        .frame()
        .worlds()
        .iter()
        .copied()
        .find(|&w| refutes(&model, w))
        .expect("a world above the root separates assumptions from goal");
    let small = model
        .generated_submodel(world)
        .expect("world exists")
        .shrink_while(world, |m| refutes(m, world));
    let (small, map) = small.renumbered();
    let world = map[&world];
    assert!(
        refutes(&small, world) && small.frame().r().is_empty(),
        "IPC countermodel failed verification"
    );
    Ok(IpcVerdict::Invalid {
        countermodel: small,
        world,
    })
}

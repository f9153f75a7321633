//! TNNIL formulas and the `(·)⁺` transformation, which applies the NNIL
//! map `*` to the propositional skeleton of a modal formula and recurses
//! into the boxed parts.

use crate::formula::{modal_decompose, Decomposition, Formula};
use crate::nnil::{nnil_star_with, NnilError, DEFAULT_MAX_ATOMS, DEFAULT_TREE_BUDGET};

/// Membership in TNNIL: atoms and `false`; closed under `&`, `|`, `[]`; and
/// `A -> B` when both are TNNIL and `A` has no implication outside a box.
pub fn is_tnnil(a: &Formula) -> bool {
    match a {
        Formula::Atom(_) | Formula::Bottom => true,
        Formula::And(b, c) | Formula::Or(b, c) => is_tnnil(b) && is_tnnil(c),
        Formula::Box(b) => is_tnnil(b),
        Formula::Imp(b, c) => no_bare_implication(b) && is_tnnil(b) && is_tnnil(c),
    }
}

fn no_bare_implication(a: &Formula) -> bool {
    match a {
        Formula::Atom(_) | Formula::Bottom | Formula::Box(_) => true,
        Formula::And(b, c) | Formula::Or(b, c) => no_bare_implication(b) && no_bare_implication(c),
        Formula::Imp(..) => false,
    }
}

/// `A⁺ = C*(p, []B1⁺, ..., []Bk⁺)` where `A = C(p, []B1, ..., []Bk)`.
pub fn tnnil_plus(a: &Formula) -> Result<Formula, NnilError> {
    tnnil_plus_with(a, DEFAULT_MAX_ATOMS)
}

/// As [`tnnil_plus`], with the skeleton alphabet capped at `max_atoms` at
/// every level.
pub fn tnnil_plus_with(a: &Formula, max_atoms: usize) -> Result<Formula, NnilError> {
    let d = modal_decompose(a);
    let parts = d
        .boxed_parts
        .iter()
        .map(|b| tnnil_plus_with(b, max_atoms))
        .collect::<Result<Vec<_>, _>>()?;
    let skeleton = nnil_star_with(&d.skeleton, max_atoms, DEFAULT_TREE_BUDGET)?;
    let starred = Decomposition {
        skeleton,
        boxed_parts: d.boxed_parts,
        placeholders: d.placeholders,
    };
    Ok(starred.recompose_with(&parts))
}

//! Finite canonical models by type elimination.
//!
//! A *type* is a subset of the subformulas of the query that is closed under
//! the local Hintikka conditions valid in iGLC. Types lacking a witness for
//! some missing implication or box are removed until nothing changes; the
//! survivors, ordered by inclusion and with the canonical modal relation,
//! form a finite irreflexive realistic model in which each survivor forces
//! exactly its own members. The query is an iGLC theorem iff every survivor
//! contains it. On box-free input the modal relation is empty, so the same
//! construction yields intuitionistic countermodels.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};

use fixedbitset::FixedBitSet;

use crate::formula::{subsentences_ordered, Formula};
use crate::kripke::{Frame, KripkeModel, RawFrame, WorldId};

/// Monotone step counter shared by the search phases.
#[derive(Debug, Clone)]
pub struct Budget {
    limit: u64,
    used: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Exhausted;

impl Budget {
    pub const DEFAULT_STEPS: u64 = 10_000_000;

    pub fn new(limit: u64) -> Budget {
        Budget { limit, used: 0 }
    }

    pub fn unlimited() -> Budget {
        Budget::new(u64::MAX)
    }

    pub fn used(&self) -> u64 {
        self.used
    }

    pub fn limit(&self) -> u64 {
        self.limit
    }

    pub fn tick(&mut self, n: u64) -> Result<(), Exhausted> {
        self.used = self.used.saturating_add(n);
        if self.used > self.limit {
            Err(Exhausted)
        } else {
            Ok(())
        }
    }
}

impl Default for Budget {
    fn default() -> Self {
        Budget::new(Budget::DEFAULT_STEPS)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Node {
    Atom,
    Bottom,
    And(usize, usize),
    Or(usize, usize),
    Imp(usize, usize),
    Box(usize),
}

/// Summary of an elimination run, kept as the trace behind a valid verdict.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize)]
pub struct EliminationStats {
    pub subformulas: usize,
    pub types: usize,
    pub survivors: usize,
    pub rounds: usize,
}

pub(crate) struct TypeSpace {
    subs: Vec<Formula>,
    nodes: Vec<Node>,
    types: Vec<FixedBitSet>,
    /// `{B : []B in t}` for each type
    box_contents: Vec<FixedBitSet>,
    /// boxed members of each type
    boxes: Vec<FixedBitSet>,
    alive: Vec<bool>,
    stats: EliminationStats,
}

impl TypeSpace {
    /// Enumerates all locally consistent types over the subformulas of `f`.
    pub(crate) fn build(f: &Formula, budget: &mut Budget) -> Result<TypeSpace, Exhausted> {
        let subs = subsentences_ordered(f);
        let index: HashMap<&Formula, usize> =
            subs.iter().enumerate().map(|(i, g)| (g, i)).collect();
        let nodes: Vec<Node> = subs
            .iter()
            .map(|g| match g {
                Formula::Atom(_) => Node::Atom,
                Formula::Bottom => Node::Bottom,
                Formula::And(a, b) => Node::And(index[&**a], index[&**b]),
                Formula::Or(a, b) => Node::Or(index[&**a], index[&**b]),
                Formula::Imp(a, b) => Node::Imp(index[&**a], index[&**b]),
                Formula::Box(a) => Node::Box(index[&**a]),
            })
            .collect();
        let n = subs.len();
        let mut types = Vec::new();
        let mut current = vec![false; n];
        enumerate(&nodes, 0, &mut current, &mut types, budget)?;

        let box_contents = types
            .iter()
            .map(|t| {
                let mut s = FixedBitSet::with_capacity(n);
                for (i, node) in nodes.iter().enumerate() {
                    if let Node::Box(b) = node {
                        if t.contains(i) {
                            s.insert(*b);
                        }
                    }
                }
                s
            })
            .collect();
        let boxes = types
            .iter()
            .map(|t| {
                let mut s = FixedBitSet::with_capacity(n);
                for (i, node) in nodes.iter().enumerate() {
                    if matches!(node, Node::Box(_)) && t.contains(i) {
                        s.insert(i);
                    }
                }
                s
            })
            .collect();
        let count = types.len();
        Ok(TypeSpace {
            subs,
            nodes,
            types,
            box_contents,
            boxes,
            alive: vec![true; count],
            stats: EliminationStats {
                subformulas: n,
                types: count,
                ..Default::default()
            },
        })
    }

    pub(crate) fn stats(&self) -> EliminationStats {
        self.stats
    }

    fn index_of(&self, f: &Formula) -> Option<usize> {
        self.subs.iter().position(|g| g == f)
    }

    /// Canonical modal relation restricted to realistic pairs: `w` is
    /// included in `v`, `v` contains every `B` with `[]B` in `w`, and `v`
    /// has a boxed member that `w` lacks.
    fn sees(&self, w: usize, v: usize) -> bool {
        self.types[w].is_subset(&self.types[v])
            && self.box_contents[w].is_subset(&self.types[v])
            && !self.boxes[v].is_subset(&self.types[w])
    }

    fn is_witness(&self, w: usize, formula: usize, v: usize) -> bool {
        match self.nodes[formula] {
            Node::Imp(c, d) => {
                self.types[v].contains(c)
                    && !self.types[v].contains(d)
                    && self.types[w].is_subset(&self.types[v])
            }
            Node::Box(c) => !self.types[v].contains(c) && self.sees(w, v),
            _ => unreachable!("only implications and boxes need witnesses"),
        }
    }

    /// Missing implications and boxes of `w`: the formulas needing witnesses.
    fn demands(&self, w: usize) -> impl Iterator<Item = usize> + '_ {
        self.nodes.iter().enumerate().filter_map(move |(i, node)| {
            let needs = matches!(node, Node::Imp(..) | Node::Box(_));
            (needs && !self.types[w].contains(i)).then_some(i)
        })
    }

    /// Removes types without witnesses until a fixpoint is reached.
    pub(crate) fn eliminate(&mut self, budget: &mut Budget) -> Result<(), Exhausted> {
        let count = self.types.len();
        let mut cached: HashMap<(usize, usize), usize> = HashMap::new();
        loop {
            self.stats.rounds += 1;
            let mut removed = Vec::new();
            for w in 0..count {
                if !self.alive[w] {
                    continue;
                }
                let demands: Vec<usize> = self.demands(w).collect();
                for formula in demands {
                    if let Some(&v) = cached.get(&(w, formula)) {
                        if self.alive[v] {
                            continue;
                        }
                    }
                    let mut found = None;
                    for v in 0..count {
                        if !self.alive[v] {
                            continue;
                        }
                        budget.tick(1)?;
                        if self.is_witness(w, formula, v) {
                            found = Some(v);
                            break;
                        }
                    }
                    match found {
                        Some(v) => {
                            cached.insert((w, formula), v);
                        }
                        None => {
                            removed.push(w);
                            break;
                        }
                    }
                }
            }
            if removed.is_empty() {
                break;
            }
            for w in removed {
                self.alive[w] = false;
            }
        }
        self.stats.survivors = self.alive.iter().filter(|a| **a).count();
        Ok(())
    }

    /// A surviving type lacking `target`, smallest first.
    pub(crate) fn refuting_type(&self, target: &Formula) -> Option<usize> {
        let t = self.index_of(target)?;
        (0..self.types.len())
            .filter(|&w| self.alive[w] && !self.types[w].contains(t))
            .min_by_key(|&w| (self.types[w].count_ones(..), w))
    }

    /// Builds a model from `root` by adding, for every world, one surviving
    /// witness per demand, preferring worlds already present. Every world
    /// then forces exactly the members of its type.
    pub(crate) fn model_from(&self, root: usize) -> KripkeModel {
        let mut order = vec![root];
        let mut present: BTreeSet<usize> = [root].into_iter().collect();
        let mut queue: VecDeque<usize> = [root].into_iter().collect();
        while let Some(w) = queue.pop_front() {
            for formula in self.demands(w).collect::<Vec<_>>() {
                if order.iter().any(|&v| self.is_witness(w, formula, v)) {
                    continue;
                }
                let v = (0..self.types.len())
                    .filter(|&v| self.alive[v] && self.is_witness(w, formula, v))
                    .min_by_key(|&v| (self.types[v].count_ones(..), v))
                    .expect("surviving types have witnesses");
                if present.insert(v) {
                    order.push(v);
                    queue.push_back(v);
                }
            }
        }

        let id = |k: usize| (k + 1) as WorldId;
        let mut leq = Vec::new();
        let mut r = Vec::new();
        for (i, &w) in order.iter().enumerate() {
            for (j, &v) in order.iter().enumerate() {
                if self.types[w].is_subset(&self.types[v]) {
                    leq.push((id(i), id(j)));
                }
                if self.sees(w, v) {
                    r.push((id(i), id(j)));
                }
            }
        }
        let frame = Frame::new(RawFrame::new((0..order.len()).map(id), leq, r))
            .expect("canonical structures are frames");
        let mut valuation: BTreeMap<String, BTreeSet<WorldId>> = BTreeMap::new();
        for (k, g) in self.subs.iter().enumerate() {
            if let Formula::Atom(p) = g {
                let set = order
                    .iter()
                    .enumerate()
                    .filter(|(_, &w)| self.types[w].contains(k))
                    .map(|(i, _)| id(i))
                    .collect();
                valuation.insert(p.clone(), set);
            }
        }
        KripkeModel::new(frame, valuation).expect("types are upward closed on atoms")
    }

    #[cfg(test)]
    fn survivors(&self) -> Vec<BTreeSet<&Formula>> {
        (0..self.types.len())
            .filter(|&w| self.alive[w])
            .map(|w| self.types[w].ones().map(|i| &self.subs[i]).collect())
            .collect()
    }
}

// Depth-first assignment of membership in subformula order; conjunctions,
// disjunctions and bottom are determined by their parts, implications and
// boxes are constrained by the local rules, atoms are free.
fn enumerate(
    nodes: &[Node],
    i: usize,
    current: &mut Vec<bool>,
    out: &mut Vec<FixedBitSet>,
    budget: &mut Budget,
) -> Result<(), Exhausted> {
    budget.tick(1)?;
    if i == nodes.len() {
        let mut set = FixedBitSet::with_capacity(nodes.len());
        for (k, &b) in current.iter().enumerate() {
            set.set(k, b);
        }
        out.push(set);
        return Ok(());
    }
    let choices: &[bool] = match nodes[i] {
        Node::Bottom => &[false],
        Node::And(a, b) => {
            if current[a] && current[b] {
                &[true]
            } else {
                &[false]
            }
        }
        Node::Or(a, b) => {
            if current[a] || current[b] {
                &[true]
            } else {
                &[false]
            }
        }
        // C, C -> D give D; D gives C -> D.
        Node::Imp(c, d) => {
            if current[d] {
                &[true]
            } else if current[c] {
                &[false]
            } else {
                &[false, true]
            }
        }
        // B gives []B.
        Node::Box(b) => {
            if current[b] {
                &[true]
            } else {
                &[false, true]
            }
        }
        Node::Atom => &[false, true],
    };
    for &choice in choices {
        current[i] = choice;
        enumerate(nodes, i + 1, current, out, budget)?;
    }
    current[i] = false;
    Ok(())
}

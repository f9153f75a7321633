//! NNIL formulas (no implication nested in the antecedent of another
//! implication) and the `*` map sending a propositional formula to the
//! strongest NNIL formula below it.
//!
//! NNIL formulas are preserved by simulations: if every successor of a
//! world `m` can be matched above a world `k` with the same atoms, NNIL
//! truth moves from `k` to `m`. So `k` fails `A*` exactly when some finite
//! tree refuting `A` is simulated above `k`, and `A*` is the conjunction,
//! over the simulation-minimal refuting trees, of a NNIL formula saying
//! "nothing above here simulates this tree". Those trees are found as a
//! least fixpoint over types of subformulas of `A`.
//!
//! [`enumerate_nnil_classes`] independently lists one representative per
//! NNIL class over a small alphabet, which gives a second way to compute
//! `A*` when the alphabet has at most two atoms.

use std::collections::{BTreeSet, HashMap};
use std::sync::{Arc, Mutex, OnceLock};

use thiserror::Error;

use fixedbitset::FixedBitSet;

use crate::formula::{subsentences_ordered, Formula, PLACEHOLDER_PREFIX};
use crate::ipc::{ipc_equiv, ipc_implies};

pub const DEFAULT_MAX_ATOMS: usize = 3;
pub const DEFAULT_CLASS_BUDGET: usize = 100_000;
pub const DEFAULT_TREE_BUDGET: usize = 2_000_000;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum NnilError {
    #[error("NNIL operations take box-free formulas, got {0}")]
    ContainsBox(String),
    #[error("alphabet of {size} atoms exceeds the limit of {limit}")]
    AlphabetTooLarge { size: usize, limit: usize },
    #[error("NNIL computation exceeded its budget of {0}")]
    ClassBudgetExceeded(usize),
}

fn require_box_free(a: &Formula) -> Result<(), NnilError> {
    if a.is_box_free() {
        Ok(())
    } else {
        Err(NnilError::ContainsBox(a.render()))
    }
}

/// Membership in NNIL: atoms and `false`; closed under `&`, `|`; and
/// `A -> B` when `A` has no implication and `B` is NNIL.
pub fn is_nnil(a: &Formula) -> Result<bool, NnilError> {
    require_box_free(a)?;
    Ok(nnil_shape(a))
}

fn nnil_shape(a: &Formula) -> bool {
    match a {
        Formula::Atom(_) | Formula::Bottom => true,
        Formula::And(b, c) | Formula::Or(b, c) => nnil_shape(b) && nnil_shape(c),
        Formula::Imp(b, c) => b.is_implication_free() && nnil_shape(c),
        Formula::Box(_) => false,
    }
}

/// Disjoint union of small rooted posets with every monotone valuation of
/// the alphabet. Truth vectors on it are compositional, so they serve as
/// cheap fingerprints; equal fingerprints are confirmed by the prover.
struct Probe {
    atoms: Vec<String>,
    /// up-cone of each world (including itself)
    cones: Vec<Vec<usize>>,
    /// atom index -> worlds where it holds
    valuation: Vec<Vec<bool>>,
}

type Fingerprint = Vec<u64>;

impl Probe {
    fn new(atoms: &[String]) -> Probe {
        // shapes as up-cone lists over local indices; index 0 is the root
        let shapes: Vec<Vec<Vec<usize>>> = vec![
            vec![vec![0]],
            vec![vec![0, 1], vec![1]],
            vec![vec![0, 1, 2], vec![1, 2], vec![2]],
            vec![vec![0, 1, 2], vec![1], vec![2]],
        ];
        let mut cones = Vec::new();
        let mut valuation = vec![Vec::new(); atoms.len()];
        for shape in &shapes {
            let n = shape.len();
            let upsets: Vec<u32> = (0..(1u32 << n))
                .filter(|&m| {
                    (0..n).all(|i| m & (1 << i) == 0 || shape[i].iter().all(|&j| m & (1 << j) != 0))
                })
                .collect();
            let mut choice = vec![0usize; atoms.len()];
            loop {
                let base = cones.len();
                for cone in shape {
                    cones.push(cone.iter().map(|j| base + j).collect());
                }
                for (k, &c) in choice.iter().enumerate() {
                    for i in 0..n {
                        valuation[k].push(upsets[c] & (1 << i) != 0);
                    }
                }
                let mut pos = 0;
                while pos < choice.len() {
                    choice[pos] += 1;
                    if choice[pos] < upsets.len() {
                        break;
                    }
                    choice[pos] = 0;
                    pos += 1;
                }
                if pos == choice.len() {
                    break;
                }
            }
        }
        Probe {
            atoms: atoms.to_vec(),
            cones,
            valuation,
        }
    }

    fn words(&self) -> usize {
        self.cones.len().div_ceil(64)
    }

    fn pack_bools(&self, bits: impl Iterator<Item = bool>) -> Fingerprint {
        let mut fp = vec![0u64; self.words()];
        for (i, b) in bits.enumerate() {
            if b {
                fp[i / 64] |= 1 << (i % 64);
            }
        }
        fp
    }

    fn bit(fp: &Fingerprint, i: usize) -> bool {
        fp[i / 64] & (1 << (i % 64)) != 0
    }

    fn bottom(&self) -> Fingerprint {
        vec![0; self.words()]
    }

    fn atom(&self, name: &str) -> Fingerprint {
        let k = self
            .atoms
            .iter()
            .position(|a| a == name)
            .expect("atom in alphabet");
        self.pack_bools(self.valuation[k].iter().copied())
    }

    fn and(a: &Fingerprint, b: &Fingerprint) -> Fingerprint {
        a.iter().zip(b).map(|(x, y)| x & y).collect()
    }

    fn or(a: &Fingerprint, b: &Fingerprint) -> Fingerprint {
        a.iter().zip(b).map(|(x, y)| x | y).collect()
    }

    fn imp(&self, a: &Fingerprint, b: &Fingerprint) -> Fingerprint {
        self.pack_bools(
            self.cones
                .iter()
                .map(|cone| cone.iter().all(|&v| !Self::bit(a, v) || Self::bit(b, v))),
        )
    }

    fn eval(&self, f: &Formula) -> Fingerprint {
        match f {
            Formula::Atom(p) => self.atom(p),
            Formula::Bottom => self.bottom(),
            Formula::And(a, b) => Self::and(&self.eval(a), &self.eval(b)),
            Formula::Or(a, b) => Self::or(&self.eval(a), &self.eval(b)),
            Formula::Imp(a, b) => self.imp(&self.eval(a), &self.eval(b)),
            Formula::Box(_) => unreachable!("box-free input"),
        }
    }
}

/// Formulas up to IPC-equivalence, one representative per class.
struct ClassSet {
    reps: Vec<Formula>,
    fps: Vec<Fingerprint>,
    buckets: HashMap<Fingerprint, Vec<usize>>,
    limit: usize,
}

impl ClassSet {
    fn new(limit: usize) -> ClassSet {
        ClassSet {
            reps: Vec::new(),
            fps: Vec::new(),
            buckets: HashMap::new(),
            limit,
        }
    }

    fn len(&self) -> usize {
        self.reps.len()
    }

    /// Adds `f` unless an equivalent class exists; a smaller equivalent
    /// formula replaces the stored representative. Returns true when a new
    /// class was created.
    fn insert(&mut self, f: Formula, fp: Fingerprint) -> Result<bool, NnilError> {
        if let Some(bucket) = self.buckets.get(&fp) {
            for &k in bucket {
                if ipc_equiv(&f, &self.reps[k]).expect("box-free") {
                    if smaller(&f, &self.reps[k]) {
                        self.reps[k] = f;
                    }
                    return Ok(false);
                }
            }
        }
        if self.reps.len() >= self.limit {
            return Err(NnilError::ClassBudgetExceeded(self.limit));
        }
        let k = self.reps.len();
        self.buckets.entry(fp.clone()).or_default().push(k);
        self.reps.push(f);
        self.fps.push(fp);
        Ok(true)
    }
}

fn smaller(a: &Formula, b: &Formula) -> bool {
    (a.size(), a.render()) < (b.size(), b.render())
}

/// Closes `set` under binary `&` and `|`, pairing only with classes at or
/// beyond `from` on one side.
fn close_lattice(set: &mut ClassSet, mut from: usize) -> Result<(), NnilError> {
    while from < set.len() {
        let end = set.len();
        for j in from..end {
            for i in 0..=j {
                let (a, b) = (set.reps[i].clone(), set.reps[j].clone());
                let fp = Probe::and(&set.fps[i], &set.fps[j]);
                set.insert(Formula::and(a.clone(), b.clone()), fp)?;
                let fp = Probe::or(&set.fps[i], &set.fps[j]);
                set.insert(Formula::or(a, b), fp)?;
            }
        }
        from = end;
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NnilClassTable {
    atoms: Vec<String>,
    representatives: Vec<Formula>,
}

impl NnilClassTable {
    pub fn atoms(&self) -> &[String] {
        &self.atoms
    }

    pub fn representatives(&self) -> &[Formula] {
        &self.representatives
    }

    pub fn len(&self) -> usize {
        self.representatives.len()
    }

    pub fn is_empty(&self) -> bool {
        self.representatives.is_empty()
    }

    /// The representative equivalent to `f`, if any.
    pub fn lookup(&self, f: &Formula) -> Option<&Formula> {
        self.representatives
            .iter()
            .find(|r| ipc_equiv(f, r).unwrap_or(false))
    }

    /// `A*` for a box-free `a` over this table's alphabet.
    pub fn star(&self, a: &Formula) -> Result<Formula, NnilError> {
        require_box_free(a)?;
        let below: Vec<&Formula> = self
            .representatives
            .iter()
            .filter(|r| ipc_implies(r, a).expect("box-free"))
            .collect();
        let disjunction = Formula::disj(below.iter().map(|r| (*r).clone()));
        // the table is closed under |, so the disjunction has a representative
        Ok(self.lookup(&disjunction).cloned().unwrap_or(disjunction))
    }
}

/// Least fixpoint of NNIL classes over `atoms`: start from `false` and the
/// atoms, add `α -> β` for implication-free `α` and known `β`, close under
/// `&` and `|`, and repeat until nothing new appears. Representatives are
/// the smallest formulas found in their class.
pub fn enumerate_nnil_classes(
    atoms: &[String],
    budget: usize,
) -> Result<NnilClassTable, NnilError> {
    enumerate_with_limit(atoms, budget, DEFAULT_MAX_ATOMS)
}

pub fn enumerate_with_limit(
    atoms: &[String],
    budget: usize,
    max_atoms: usize,
) -> Result<NnilClassTable, NnilError> {
    if atoms.len() > max_atoms {
        return Err(NnilError::AlphabetTooLarge {
            size: atoms.len(),
            limit: max_atoms,
        });
    }
    let probe = Probe::new(atoms);
    let seeds: Vec<Formula> = std::iter::once(Formula::Bottom)
        .chain(atoms.iter().map(|p| Formula::atom(p)))
        .collect();

    let mut positive = ClassSet::new(budget);
    for s in &seeds {
        positive.insert(s.clone(), probe.eval(s))?;
    }
    close_lattice(&mut positive, 0)?;

    let mut classes = ClassSet::new(budget);
    for s in &seeds {
        classes.insert(s.clone(), probe.eval(s))?;
    }
    close_lattice(&mut classes, 0)?;
    let mut done = 0;
    while done < classes.len() {
        let end = classes.len();
        for b in done..end {
            for a in 0..positive.len() {
                let f = Formula::imp(positive.reps[a].clone(), classes.reps[b].clone());
                let fp = probe.imp(&positive.fps[a], &classes.fps[b]);
                classes.insert(f, fp)?;
            }
        }
        done = end;
        close_lattice(&mut classes, end)?;
    }

    let mut representatives = classes.reps;
    representatives.sort_by_cached_key(|f| (f.size(), f.render()));
    Ok(NnilClassTable {
        atoms: atoms.to_vec(),
        representatives,
    })
}

fn table_cache() -> &'static Mutex<HashMap<Vec<String>, Arc<NnilClassTable>>> {
    static CACHE: OnceLock<Mutex<HashMap<Vec<String>, Arc<NnilClassTable>>>> = OnceLock::new();
    CACHE.get_or_init(Default::default)
}

/// Shared class table for `atoms`, built on first use.
pub fn class_table(atoms: &[String]) -> Result<Arc<NnilClassTable>, NnilError> {
    if let Some(t) = table_cache().lock().expect("cache lock").get(atoms) {
        return Ok(t.clone());
    }
    let table = Arc::new(enumerate_nnil_classes(atoms, DEFAULT_CLASS_BUDGET)?);
    table_cache()
        .lock()
        .expect("cache lock")
        .entry(atoms.to_vec())
        .or_insert(table.clone());
    Ok(table)
}

/// `A*`: the strongest NNIL formula implying `a` in IPC, up to equivalence.
/// The alphabet of `a` may have at most [`DEFAULT_MAX_ATOMS`] atoms.
pub fn nnil_star(a: &Formula) -> Result<Formula, NnilError> {
    nnil_star_with(a, DEFAULT_MAX_ATOMS, DEFAULT_TREE_BUDGET)
}

pub fn nnil_star_with(a: &Formula, max_atoms: usize, budget: usize) -> Result<Formula, NnilError> {
    require_box_free(a)?;
    if nnil_shape(a) {
        return Ok(a.clone());
    }
    let mut atoms: Vec<String> = a.atoms().into_iter().collect();
    atoms.sort_by_key(|x| x.starts_with(PLACEHOLDER_PREFIX));
    if atoms.len() > max_atoms {
        return Err(NnilError::AlphabetTooLarge {
            size: atoms.len(),
            limit: max_atoms,
        });
    }
    TreeSearch::new(a, atoms, budget).run()
}

/// `A*` via the class table: the table representative of the disjunction of
/// all classes implying `a`.
pub fn nnil_star_by_enumeration(a: &Formula) -> Result<Formula, NnilError> {
    require_box_free(a)?;
    let atoms: Vec<String> = a
        .atoms()
        .into_iter()
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    class_table(&atoms)?.star(a)
}

struct Node {
    val: u32,
    children: Vec<usize>,
    ty: FixedBitSet,
}

struct TreeSearch<'a> {
    target: &'a Formula,
    atoms: Vec<String>,
    subs: Vec<Formula>,
    index: HashMap<Formula, usize>,
    implications: Vec<usize>,
    nodes: Vec<Node>,
    /// roots of the current simulation-minimal trees
    items: Vec<usize>,
    alive: Vec<bool>,
    by_type: HashMap<FixedBitSet, Vec<usize>>,
    sim_memo: HashMap<(usize, usize), bool>,
    budget: usize,
    spent: usize,
}

impl<'a> TreeSearch<'a> {
    fn new(target: &'a Formula, atoms: Vec<String>, budget: usize) -> TreeSearch<'a> {
        let subs = subsentences_ordered(target);
        let index = subs
            .iter()
            .enumerate()
            .map(|(i, f)| (f.clone(), i))
            .collect();
        let implications = subs
            .iter()
            .enumerate()
            .filter(|(_, f)| matches!(f, Formula::Imp(..)))
            .map(|(i, _)| i)
            .collect();
        TreeSearch {
            target,
            atoms,
            subs,
            index,
            implications,
            nodes: Vec::new(),
            items: Vec::new(),
            alive: Vec::new(),
            by_type: HashMap::new(),
            sim_memo: HashMap::new(),
            budget,
            spent: 0,
        }
    }

    /// Type of a root with atoms `val` over children of known types.
    fn root_type(&self, val: u32, children: &[usize]) -> FixedBitSet {
        let mut ty = FixedBitSet::with_capacity(self.subs.len());
        for (i, f) in self.subs.iter().enumerate() {
            let holds = match f {
                Formula::Atom(p) => {
                    let k = self
                        .atoms
                        .iter()
                        .position(|q| q == p)
                        .expect("atom of target");
                    val & (1 << k) != 0
                }
                Formula::Bottom => false,
                Formula::And(b, c) => ty[self.index[&**b]] && ty[self.index[&**c]],
                Formula::Or(b, c) => ty[self.index[&**b]] || ty[self.index[&**c]],
                Formula::Imp(b, c) => {
                    (!ty[self.index[&**b]] || ty[self.index[&**c]])
                        && children.iter().all(|&ch| self.nodes[ch].ty[i])
                }
                Formula::Box(_) => unreachable!("box-free input"),
            };
            ty.set(i, holds);
        }
        ty
    }

    fn descendants_or_self(&self, n: usize, out: &mut Vec<usize>) {
        out.push(n);
        for &c in &self.nodes[n].children {
            self.descendants_or_self(c, out);
        }
    }

    /// Whether the tree at `a` is simulated by the tree at `b`.
    fn simulated(&mut self, a: usize, b: usize) -> bool {
        if let Some(&v) = self.sim_memo.get(&(a, b)) {
            return v;
        }
        let mut result = self.nodes[a].val == self.nodes[b].val;
        if result {
            let mut above = Vec::new();
            self.descendants_or_self(b, &mut above);
            let children = self.nodes[a].children.clone();
            result = children
                .iter()
                .all(|&c| above.iter().any(|&d| self.simulated(c, d)));
        }
        self.sim_memo.insert((a, b), result);
        result
    }

    /// Keeps the candidate tree unless a tree of the same type is simulated
    /// by it; drops stored trees it is simulated by.
    fn offer(&mut self, val: u32, children: Vec<usize>) -> Result<bool, NnilError> {
        self.spent += 1;
        if self.spent > self.budget {
            return Err(NnilError::ClassBudgetExceeded(self.budget));
        }
        let ty = self.root_type(val, &children);
        let cand = self.nodes.len();
        self.nodes.push(Node {
            val,
            children,
            ty: ty.clone(),
        });
        let peers = self.by_type.get(&ty).cloned().unwrap_or_default();
        for &j in &peers {
            if self.simulated(self.items[j], cand) {
                return Ok(false);
            }
        }
        let mut kept = Vec::new();
        for &j in &peers {
            if self.simulated(cand, self.items[j]) {
                self.alive[j] = false;
            } else {
                kept.push(j);
            }
        }
        kept.push(self.items.len());
        self.by_type.insert(ty, kept);
        self.items.push(cand);
        self.alive.push(true);
        Ok(true)
    }

    fn kills(&self, item: usize) -> FixedBitSet {
        let ty = &self.nodes[self.items[item]].ty;
        let mut k = FixedBitSet::with_capacity(self.subs.len());
        for &i in &self.implications {
            k.set(i, !ty[i]);
        }
        k
    }

    fn run(mut self) -> Result<Formula, NnilError> {
        let valuations: Vec<u32> = (0..1u32 << self.atoms.len()).collect();
        for &v in &valuations {
            self.offer(v, Vec::new())?;
        }
        let mut fresh_from = 0;
        loop {
            let round_start = self.items.len();
            let candidates: Vec<usize> = (0..round_start).filter(|&i| self.alive[i]).collect();
            let kills: Vec<FixedBitSet> = candidates.iter().map(|&i| self.kills(i)).collect();
            let mut combos = Vec::new();
            let empty = FixedBitSet::with_capacity(self.subs.len());
            for &v in &valuations {
                let usable: Vec<usize> = (0..candidates.len())
                    .filter(|&c| {
                        let val = self.nodes[self.items[candidates[c]]].val;
                        val & v == v && !kills[c].is_clear()
                    })
                    .collect();
                let mut chosen = Vec::new();
                choose(
                    &usable,
                    &kills,
                    0,
                    &empty,
                    &mut chosen,
                    self.implications.len(),
                    &mut |set| {
                        if set.iter().any(|&c| candidates[c] >= fresh_from) {
                            combos
                                .push((v, set.iter().map(|&c| candidates[c]).collect::<Vec<_>>()));
                        }
                    },
                );
            }
            for (v, set) in combos {
                if set.iter().any(|&i| !self.alive[i]) {
                    continue;
                }
                let children = set.iter().map(|&i| self.items[i]).collect();
                self.offer(v, children)?;
            }
            if self.items.len() == round_start {
                break;
            }
            fresh_from = round_start;
        }
        Ok(self.assemble())
    }

    fn assemble(&mut self) -> Formula {
        let goal = self.index[self.target];
        let refuting: Vec<usize> = (0..self.items.len())
            .filter(|&i| self.alive[i] && !self.nodes[self.items[i]].ty[goal])
            .map(|i| self.items[i])
            .collect();
        let mut minimal = Vec::new();
        for (x, &a) in refuting.iter().enumerate() {
            let dominated = refuting
                .iter()
                .enumerate()
                .any(|(y, &b)| y != x && self.simulated(b, a) && (y < x || !self.simulated(a, b)));
            if !dominated {
                minimal.push(a);
            }
        }
        let mut memo = HashMap::new();
        let mut conjuncts: Vec<Formula> = Vec::new();
        for m in minimal {
            let f = self.unsimulated(m, &mut memo);
            if !conjuncts.contains(&f) {
                conjuncts.push(f);
            }
        }
        let mut i = 0;
        while i < conjuncts.len() {
            let rest = Formula::conj(
                conjuncts
                    .iter()
                    .enumerate()
                    .filter(|&(j, _)| j != i)
                    .map(|(_, f)| f.clone()),
            );
            if conjuncts.len() > 1 && ipc_implies(&rest, &conjuncts[i]).expect("box-free") {
                conjuncts.remove(i);
            } else {
                i += 1;
            }
        }
        Formula::conj(conjuncts)
    }

    /// NNIL formula true at a world iff no world above it simulates `m`.
    fn unsimulated(&self, m: usize, memo: &mut HashMap<usize, Formula>) -> Formula {
        if let Some(f) = memo.get(&m) {
            return f.clone();
        }
        let val = self.nodes[m].val;
        let mut frontier = Vec::new();
        self.frontier(m, val, &mut frontier);
        let mut disjuncts: Vec<Formula> = (0..self.atoms.len())
            .filter(|k| val & (1 << k) == 0)
            .map(|k| Formula::atom(&self.atoms[k]))
            .collect();
        for n in frontier {
            let f = self.unsimulated(n, memo);
            if !disjuncts.contains(&f) {
                disjuncts.push(f);
            }
        }
        let mut i = 0;
        while i < disjuncts.len() {
            let weaker = disjuncts
                .iter()
                .enumerate()
                .any(|(j, d)| j != i && ipc_implies(&disjuncts[i], d).expect("box-free"));
            if weaker {
                disjuncts.remove(i);
            } else {
                i += 1;
            }
        }
        let held: Vec<Formula> = (0..self.atoms.len())
            .filter(|k| val & (1 << k) != 0)
            .map(|k| Formula::atom(&self.atoms[k]))
            .collect();
        let consequent = Formula::disj(disjuncts);
        let f = if held.is_empty() {
            consequent
        } else {
            Formula::imp(Formula::conj(held), consequent)
        };
        memo.insert(m, f.clone());
        f
    }

    /// Nearest nodes above `n` whose atoms differ from `val`.
    fn frontier(&self, n: usize, val: u32, out: &mut Vec<usize>) {
        for &c in &self.nodes[n].children {
            if self.nodes[c].val == val {
                self.frontier(c, val, out);
            } else if !out.contains(&c) {
                out.push(c);
            }
        }
    }
}

/// Subsets of `usable` of size at most `limit` in which every member kills
/// an implication that the earlier members leave alive.
fn choose(
    usable: &[usize],
    kills: &[FixedBitSet],
    from: usize,
    covered: &FixedBitSet,
    chosen: &mut Vec<usize>,
    limit: usize,
    emit: &mut dyn FnMut(&[usize]),
) {
    if !chosen.is_empty() {
        emit(chosen);
    }
    if chosen.len() == limit {
        return;
    }
    for pos in from..usable.len() {
        let c = usable[pos];
        if kills[c].is_subset(covered) {
            continue;
        }
        let mut next = covered.clone();
        next.union_with(&kills[c]);
        chosen.push(c);
        choose(usable, kills, pos + 1, &next, chosen, limit, emit);
        chosen.pop();
    }
}

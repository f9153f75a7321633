//! Test oracles shared by the integration suites: formula enumeration and
//! sampling, frame enumeration, and a bitmask forcing evaluator written
//! independently of the library's own Kripke code.
#![allow(dead_code, clippy::needless_range_loop)]

use std::collections::{BTreeMap, BTreeSet};

use iglc_core::formula::Formula;
use iglc_core::kripke::{Frame, KripkeModel, RawFrame, WorldId};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Seeded generator. `IGLC_SEED` shifts every stream for a different run.
pub fn rng(seed: u64) -> ChaCha8Rng {
    let base = std::env::var("IGLC_SEED")
        .ok()
        .and_then(|s| s.parse::<u64>().ok())
        .unwrap_or(0);
    ChaCha8Rng::seed_from_u64(base.wrapping_mul(0x9e37_79b9_7f4a_7c15).wrapping_add(seed))
}

pub fn f(s: &str) -> Formula {
    iglc_core::parse(s).unwrap_or_else(|e| panic!("{s}: {e}"))
}

#[derive(Clone, Copy, Debug)]
pub enum Node {
    Atom(usize),
    Bottom,
    And(usize, usize),
    Or(usize, usize),
    Imp(usize, usize),
    Box(usize),
}

/// Every formula up to a size bound, stored so that children precede
/// parents. Evaluating the nodes in order evaluates every formula at once.
pub struct Dag {
    pub atoms: Vec<String>,
    pub nodes: Vec<Node>,
    pub formulas: Vec<Formula>,
}

impl Dag {
    pub fn exhaustive(atoms: &[&str], max_size: usize, max_boxdepth: Option<usize>) -> Dag {
        let mut dag = Dag {
            atoms: atoms.iter().map(|s| s.to_string()).collect(),
            nodes: Vec::new(),
            formulas: Vec::new(),
        };
        let mut depth: Vec<usize> = Vec::new();
        let mut by_size: Vec<Vec<usize>> = vec![Vec::new(); max_size + 1];
        let mut fresh: Vec<(Node, Formula, usize)> = atoms
            .iter()
            .enumerate()
            .map(|(i, a)| (Node::Atom(i), Formula::atom(a), 0))
            .collect();
        fresh.push((Node::Bottom, Formula::Bottom, 0));
        for size in 1..=max_size {
            if size > 1 {
                if let Some(max_d) = max_boxdepth {
                    for &c in &by_size[size - 1] {
                        if depth[c] < max_d {
                            fresh.push((
                                Node::Box(c),
                                Formula::boxed(dag.formulas[c].clone()),
                                depth[c] + 1,
                            ));
                        }
                    }
                }
                for left in 1..size - 1 {
                    for &a in &by_size[left] {
                        for &b in &by_size[size - 1 - left] {
                            let d = depth[a].max(depth[b]);
                            let (fa, fb) = (&dag.formulas[a], &dag.formulas[b]);
                            fresh.push((Node::And(a, b), Formula::and(fa.clone(), fb.clone()), d));
                            fresh.push((Node::Or(a, b), Formula::or(fa.clone(), fb.clone()), d));
                            fresh.push((Node::Imp(a, b), Formula::imp(fa.clone(), fb.clone()), d));
                        }
                    }
                }
            }
            for (n, fm, d) in fresh.drain(..) {
                dag.nodes.push(n);
                dag.formulas.push(fm);
                depth.push(d);
                by_size[size].push(dag.nodes.len() - 1);
            }
        }
        dag
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    /// Forcing mask of every formula on `m`.
    pub fn eval(&self, m: &Model) -> Vec<u64> {
        let mut out: Vec<u64> = Vec::with_capacity(self.nodes.len());
        let vals: Vec<u64> = self.atoms.iter().map(|a| m.atom(a)).collect();
        for n in &self.nodes {
            let v = match *n {
                Node::Atom(i) => vals[i],
                Node::Bottom => 0,
                Node::And(a, b) => out[a] & out[b],
                Node::Or(a, b) => out[a] | out[b],
                Node::Imp(a, b) => m.imp(out[a], out[b]),
                Node::Box(a) => m.boxed(out[a]),
            };
            out.push(v);
        }
        out
    }

    /// Classical truth of every formula under one assignment of the atoms.
    pub fn eval_classical(&self, assignment: &[bool]) -> Vec<bool> {
        let mut out: Vec<bool> = Vec::with_capacity(self.nodes.len());
        for n in &self.nodes {
            let v = match *n {
                Node::Atom(i) => assignment[i],
                Node::Bottom => false,
                Node::And(a, b) => out[a] && out[b],
                Node::Or(a, b) => out[a] || out[b],
                Node::Imp(a, b) => !out[a] || out[b],
                Node::Box(_) => panic!("classical evaluation of a box"),
            };
            out.push(v);
        }
        out
    }
}

/// A model on worlds `0..n` with relations as bitmasks: `up[w]` is the
/// `leq`-cone of `w` (including `w`), `r[w]` its modal successors.
#[derive(Clone, Debug)]
pub struct Model {
    pub n: usize,
    pub up: Vec<u64>,
    pub r: Vec<u64>,
    pub val: BTreeMap<String, u64>,
}

impl Model {
    pub fn full(&self) -> u64 {
        if self.n == 64 {
            u64::MAX
        } else {
            (1u64 << self.n) - 1
        }
    }

    pub fn atom(&self, a: &str) -> u64 {
        self.val.get(a).copied().unwrap_or(0)
    }

    pub fn imp(&self, b: u64, c: u64) -> u64 {
        let bad = b & !c;
        (0..self.n)
            .filter(|&w| self.up[w] & bad == 0)
            .fold(0, |m, w| m | 1 << w)
    }

    pub fn boxed(&self, b: u64) -> u64 {
        (0..self.n)
            .filter(|&w| self.r[w] & !b == 0)
            .fold(0, |m, w| m | 1 << w)
    }

    pub fn eval(&self, a: &Formula) -> u64 {
        match a {
            Formula::Atom(p) => self.atom(p),
            Formula::Bottom => 0,
            Formula::And(b, c) => self.eval(b) & self.eval(c),
            Formula::Or(b, c) => self.eval(b) | self.eval(c),
            Formula::Imp(b, c) => self.imp(self.eval(b), self.eval(c)),
            Formula::Box(b) => self.boxed(self.eval(b)),
        }
    }

    pub fn forces(&self, w: usize, a: &Formula) -> bool {
        self.eval(a) & (1 << w) != 0
    }

    pub fn valid(&self, a: &Formula) -> bool {
        self.eval(a) == self.full()
    }

    /// The same model as a library `KripkeModel`, world `i` becoming id `i + 1`.
    pub fn to_kripke(&self) -> KripkeModel {
        let id = |i: usize| i as WorldId + 1;
        let pairs = |rel: &[u64]| {
            let mut out = Vec::new();
            for (a, &m) in rel.iter().enumerate() {
                for b in 0..self.n {
                    if m & (1 << b) != 0 {
                        out.push((id(a), id(b)));
                    }
                }
            }
            out
        };
        let raw = RawFrame::new((0..self.n).map(id), pairs(&self.up), pairs(&self.r));
        let val = self
            .val
            .iter()
            .map(|(p, &m)| {
                let set: BTreeSet<WorldId> =
                    (0..self.n).filter(|&w| m & (1 << w) != 0).map(id).collect();
                (p.clone(), set)
            })
            .collect();
        KripkeModel::new(Frame::new(raw).expect("frame"), val).expect("monotone")
    }

    /// Reads a library model, world ids mapped to their index in `frame().worlds()`.
    pub fn from_kripke(k: &KripkeModel) -> Model {
        let ws = k.frame().worlds();
        let ix = |w: &WorldId| ws.iter().position(|v| v == w).expect("world");
        let n = ws.len();
        assert!(n <= 64);
        let mut up = vec![0u64; n];
        let mut r = vec![0u64; n];
        for (a, b) in k.frame().leq() {
            up[ix(a)] |= 1 << ix(b);
        }
        for (a, b) in k.frame().r() {
            r[ix(a)] |= 1 << ix(b);
        }
        let val = k
            .valuation()
            .iter()
            .map(|(p, s)| (p.clone(), s.iter().fold(0u64, |m, w| m | 1 << ix(w))))
            .collect();
        Model { n, up, r, val }
    }
}

/// A bi-relational frame on `0..n` with bitmask relations.
#[derive(Clone, Debug)]
pub struct SmallFrame {
    pub n: usize,
    pub up: Vec<u64>,
    pub r: Vec<u64>,
}

impl SmallFrame {
    fn has(rel: &[u64], a: usize, b: usize) -> bool {
        rel[a] & (1 << b) != 0
    }

    pub fn model_property(&self) -> bool {
        (0..self.n).all(|a| {
            (0..self.n)
                .filter(|&b| Self::has(&self.up, a, b))
                .all(|b| self.r[b] & !self.r[a] == 0)
        })
    }

    pub fn irreflexive(&self) -> bool {
        (0..self.n).all(|w| !Self::has(&self.r, w, w))
    }

    pub fn realistic(&self) -> bool {
        (0..self.n).all(|w| self.r[w] & !self.up[w] == 0)
    }

    /// `r;r` included in `r;leq`.
    pub fn semi_transitive(&self) -> bool {
        (0..self.n).all(|a| {
            let r_leq = (0..self.n)
                .filter(|&x| Self::has(&self.r, a, x))
                .fold(0u64, |m, x| m | self.up[x]);
            (0..self.n)
                .filter(|&b| Self::has(&self.r, a, b))
                .all(|b| self.r[b] & !r_leq == 0)
        })
    }

    /// Every nonempty set has an `r`-maximal element.
    pub fn conversely_well_founded(&self) -> bool {
        (1u64..1 << self.n).all(|s| (0..self.n).any(|w| s & (1 << w) != 0 && self.r[w] & s == 0))
    }

    /// Upward closed subsets of the carrier.
    pub fn upsets(&self) -> Vec<u64> {
        (0u64..1 << self.n)
            .filter(|&s| (0..self.n).all(|w| s & (1 << w) == 0 || self.up[w] & !s == 0))
            .collect()
    }

    /// Every monotone valuation of `atoms`.
    pub fn models(&self, atoms: &[&str]) -> Vec<Model> {
        let ups = self.upsets();
        let mut out = Vec::new();
        let mut choice = vec![0usize; atoms.len()];
        loop {
            let val = atoms
                .iter()
                .zip(&choice)
                .map(|(a, &k)| (a.to_string(), ups[k]))
                .collect();
            out.push(Model {
                n: self.n,
                up: self.up.clone(),
                r: self.r.clone(),
                val,
            });
            let mut pos = 0;
            loop {
                if pos == choice.len() {
                    return out;
                }
                choice[pos] += 1;
                if choice[pos] < ups.len() {
                    break;
                }
                choice[pos] = 0;
                pos += 1;
            }
        }
    }

    pub fn to_raw(&self) -> RawFrame {
        let pairs = |rel: &[u64]| {
            let mut out = Vec::new();
            for (a, &m) in rel.iter().enumerate() {
                for b in 0..self.n {
                    if m & (1 << b) != 0 {
                        out.push((a as WorldId + 1, b as WorldId + 1));
                    }
                }
            }
            out
        };
        RawFrame::new(
            (1..=self.n as WorldId).collect::<Vec<_>>(),
            pairs(&self.up),
            pairs(&self.r),
        )
    }
}

/// Partial orders on `0..n`, as up-cone masks.
pub fn posets(n: usize) -> Vec<Vec<u64>> {
    let pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|a| (0..n).filter(move |&b| b != a).map(move |b| (a, b)))
        .collect();
    let mut out = Vec::new();
    for bits in 0u64..1 << pairs.len() {
        let mut up: Vec<u64> = (0..n).map(|w| 1u64 << w).collect();
        for (k, &(a, b)) in pairs.iter().enumerate() {
            if bits & (1 << k) != 0 {
                up[a] |= 1 << b;
            }
        }
        let antisymmetric = (0..n)
            .all(|a| (0..n).all(|b| a == b || up[a] & (1 << b) == 0 || up[b] & (1 << a) == 0));
        let transitive =
            (0..n).all(|a| (0..n).all(|b| up[a] & (1 << b) == 0 || up[b] & !up[a] == 0));
        if antisymmetric && transitive {
            out.push(up);
        }
    }
    out
}

/// Every frame on exactly `n` worlds: a partial order plus any relation
/// `r` with the model property.
pub fn frames(n: usize) -> Vec<SmallFrame> {
    let mut out = Vec::new();
    for up in posets(n) {
        for bits in 0u64..1 << (n * n) {
            let r: Vec<u64> = (0..n).map(|a| (bits >> (a * n)) & ((1 << n) - 1)).collect();
            let fr = SmallFrame {
                n,
                up: up.clone(),
                r,
            };
            if fr.model_property() {
                out.push(fr);
            }
        }
    }
    out
}

/// Frames on `1..=max_n` worlds that are irreflexive and realistic.
pub fn iglc_frames(max_n: usize) -> Vec<SmallFrame> {
    (1..=max_n)
        .flat_map(frames)
        .filter(|fr| fr.irreflexive() && fr.realistic())
        .collect()
}

/// A random rooted irreflexive realistic model on `n` worlds. World 0 is
/// the root.
pub fn random_model(rng: &mut impl Rng, n: usize, atoms: &[&str]) -> Model {
    let mut up: Vec<u64> = (0..n).map(|w| 1u64 << w).collect();
    // worlds above the root in a random DAG respecting index order
    for b in 1..n {
        up[0] |= 1 << b;
        for a in 1..b {
            if rng.gen_bool(0.4) {
                up[a] |= 1 << b;
            }
        }
    }
    for a in (0..n).rev() {
        for b in 0..n {
            if up[a] & (1 << b) != 0 {
                up[a] |= up[b];
            }
        }
    }
    let mut r = vec![0u64; n];
    for a in 0..n {
        for b in 0..n {
            if a != b && up[a] & (1 << b) != 0 && rng.gen_bool(0.5) {
                r[a] |= 1 << b;
            }
        }
    }
    // close under the model property
    loop {
        let mut changed = false;
        for a in 0..n {
            for b in 0..n {
                if up[a] & (1 << b) != 0 && r[b] & !r[a] != 0 {
                    r[a] |= r[b];
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    }
    let mut val = BTreeMap::new();
    for a in atoms {
        let mut s = 0u64;
        for w in 0..n {
            if rng.gen_bool(0.4) {
                s |= up[w];
            }
        }
        val.insert(a.to_string(), s);
    }
    Model { n, up, r, val }
}

/// A random formula of exactly `size` nodes.
pub fn random_formula(rng: &mut impl Rng, size: usize, atoms: &[&str], boxes: bool) -> Formula {
    if size <= 1 {
        let k = rng.gen_range(0..=atoms.len());
        return if k == atoms.len() && rng.gen_bool(0.5) {
            Formula::Bottom
        } else {
            Formula::atom(atoms[k.min(atoms.len() - 1)])
        };
    }
    if size == 2 {
        let inner = random_formula(rng, 1, atoms, boxes);
        return if boxes {
            Formula::boxed(inner)
        } else {
            random_formula(rng, 1, atoms, boxes)
        };
    }
    let choice = rng.gen_range(0..if boxes { 4 } else { 3 });
    if choice == 3 {
        return Formula::boxed(random_formula(rng, size - 1, atoms, boxes));
    }
    let left = rng.gen_range(1..size - 1);
    let a = random_formula(rng, left, atoms, boxes);
    let b = random_formula(rng, size - 1 - left, atoms, boxes);
    match choice {
        0 => Formula::and(a, b),
        1 => Formula::or(a, b),
        _ => Formula::imp(a, b),
    }
}

/// `items.iter().map(f)` spread over the available cores, order kept.
pub fn par_map<T: Sync, R: Send>(items: &[T], f: impl Fn(&T) -> R + Sync) -> Vec<R> {
    let threads = std::thread::available_parallelism().map_or(1, |n| n.get());
    let chunk = items.len().div_ceil(threads).max(1);
    std::thread::scope(|s| {
        let handles: Vec<_> = items
            .chunks(chunk)
            .map(|c| s.spawn(|| c.iter().map(&f).collect::<Vec<R>>()))
            .collect();
        handles
            .into_iter()
            .flat_map(|h| h.join().expect("worker panicked"))
            .collect()
    })
}

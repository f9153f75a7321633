//! Finite bi-relational Kripke frames and models: `leq` is the
//! intuitionistic order, `r` the modal accessibility relation.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::formula::Formula;

pub type WorldId = u32;

/// Default cap on frame size for [`valid_on_frame`].
pub const DEFAULT_FRAME_LIMIT: usize = 8;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ModelError {
    #[error("model has no worlds")]
    NoWorlds,
    #[error("duplicate world id {0}")]
    DuplicateWorld(WorldId),
    #[error("unknown world id {0}")]
    UnknownWorld(WorldId),
    #[error("leq is not a partial order: {0}")]
    NotPoset(String),
    #[error("model property fails: {0} leq {1}, {1} r {2} but not {0} r {2}")]
    ModelProperty(WorldId, WorldId, WorldId),
    #[error("valuation of '{atom}' is not upward closed: {from} leq {to}")]
    NotMonotone {
        atom: String,
        from: WorldId,
        to: WorldId,
    },
    #[error("frame has {size} worlds, above the limit of {limit}")]
    FrameTooLarge { size: usize, limit: usize },
    #[error("malformed model file: {0}")]
    Json(String),
}

/// Relations as given, before any validation.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RawFrame {
    pub worlds: Vec<WorldId>,
    pub leq: BTreeSet<(WorldId, WorldId)>,
    pub r: BTreeSet<(WorldId, WorldId)>,
}

impl RawFrame {
    pub fn new(
        worlds: impl IntoIterator<Item = WorldId>,
        leq: impl IntoIterator<Item = (WorldId, WorldId)>,
        r: impl IntoIterator<Item = (WorldId, WorldId)>,
    ) -> RawFrame {
        RawFrame {
            worlds: worlds.into_iter().collect(),
            leq: leq.into_iter().collect(),
            r: r.into_iter().collect(),
        }
    }

    /// Adds `(w, w)` to `leq` for every world.
    pub fn with_reflexive_leq(mut self) -> RawFrame {
        for &w in &self.worlds {
            self.leq.insert((w, w));
        }
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct FrameReport {
    pub is_poset: bool,
    pub has_model_property: bool,
    pub irreflexive: bool,
    pub transitive: bool,
    pub semi_transitive: bool,
    pub realistic: bool,
    pub conversely_well_founded: bool,
}

impl FrameReport {
    /// A frame for IML in the class the iGLC completeness theorem ranges over.
    pub fn is_iglc_frame(&self) -> bool {
        self.is_poset && self.has_model_property && self.irreflexive && self.realistic
    }
}

/// Evaluates every frame property on the raw relations.
pub fn check_frame(f: &RawFrame) -> FrameReport {
    let ws = &f.worlds;
    let leq = |a, b| f.leq.contains(&(a, b));
    let r = |a, b| f.r.contains(&(a, b));

    let reflexive = ws.iter().all(|&w| leq(w, w));
    let antisymmetric = f.leq.iter().all(|&(a, b)| a == b || !leq(b, a));
    let leq_transitive = f
        .leq
        .iter()
        .all(|&(a, b)| ws.iter().all(|&c| !leq(b, c) || leq(a, c)));
    let within = |rel: &BTreeSet<(WorldId, WorldId)>| {
        rel.iter().all(|(a, b)| ws.contains(a) && ws.contains(b))
    };
    let is_poset = !ws.is_empty()
        && within(&f.leq)
        && within(&f.r)
        && reflexive
        && antisymmetric
        && leq_transitive;

    let has_model_property = f
        .leq
        .iter()
        .all(|&(a, b)| ws.iter().all(|&c| !r(b, c) || r(a, c)));
    let irreflexive = ws.iter().all(|&w| !r(w, w));
    let transitive =
        f.r.iter()
            .all(|&(a, b)| ws.iter().all(|&c| !r(b, c) || r(a, c)));
    // r;r included in r;leq
    let semi_transitive = f.r.iter().all(|&(a, b)| {
        ws.iter()
            .filter(|&&c| r(b, c))
            .all(|&c| ws.iter().any(|&x| r(a, x) && leq(x, c)))
    });
    let realistic = f.r.iter().all(|&(a, b)| leq(a, b));
    let conversely_well_founded = is_acyclic(ws, &f.r);

    FrameReport {
        is_poset,
        has_model_property,
        irreflexive,
        transitive,
        semi_transitive,
        realistic,
        conversely_well_founded,
    }
}

// On a finite carrier, converse well-foundedness of r is the absence of
// r-cycles (self-loops included).
fn is_acyclic(worlds: &[WorldId], rel: &BTreeSet<(WorldId, WorldId)>) -> bool {
    let mut indegree: HashMap<WorldId, usize> = worlds.iter().map(|&w| (w, 0)).collect();
    for (_, b) in rel {
        *indegree.entry(*b).or_default() += 1;
    }
    let mut ready: Vec<WorldId> = indegree
        .iter()
        .filter(|(_, &d)| d == 0)
        .map(|(&w, _)| w)
        .collect();
    let mut removed = 0;
    while let Some(w) = ready.pop() {
        removed += 1;
        for (_, b) in rel.range((w, WorldId::MIN)..=(w, WorldId::MAX)) {
            let d = indegree.get_mut(b).expect("world present");
            *d -= 1;
            if *d == 0 {
                ready.push(*b);
            }
        }
    }
    removed == indegree.len()
}

/// A validated frame: `leq` is a partial order and `leq;r` is included in `r`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Frame {
    worlds: Vec<WorldId>,
    leq: BTreeSet<(WorldId, WorldId)>,
    r: BTreeSet<(WorldId, WorldId)>,
    index: HashMap<WorldId, usize>,
    leq_succ: Vec<Vec<usize>>,
    r_succ: Vec<Vec<usize>>,
}

impl Frame {
    /// Builds a frame, adding reflexive `leq` pairs. Rejects anything that
    /// is not a frame for IML.
    pub fn new(raw: RawFrame) -> Result<Frame, ModelError> {
        let raw = raw.with_reflexive_leq();
        if raw.worlds.is_empty() {
            return Err(ModelError::NoWorlds);
        }
        let mut index = HashMap::new();
        for (i, &w) in raw.worlds.iter().enumerate() {
            if index.insert(w, i).is_some() {
                return Err(ModelError::DuplicateWorld(w));
            }
        }
        for &(a, b) in raw.leq.iter().chain(raw.r.iter()) {
            for w in [a, b] {
                if !index.contains_key(&w) {
                    return Err(ModelError::UnknownWorld(w));
                }
            }
        }
        let report = check_frame(&raw);
        if !report.is_poset {
            return Err(ModelError::NotPoset(
                "relation must be reflexive, antisymmetric and transitive".into(),
            ));
        }
        if !report.has_model_property {
            for &(a, b) in &raw.leq {
                for &(b2, c) in &raw.r {
                    if b2 == b && !raw.r.contains(&(a, c)) {
                        return Err(ModelError::ModelProperty(a, b, c));
                    }
                }
            }
        }
        let n = raw.worlds.len();
        let mut leq_succ = vec![Vec::new(); n];
        let mut r_succ = vec![Vec::new(); n];
        for &(a, b) in &raw.leq {
            leq_succ[index[&a]].push(index[&b]);
        }
        for &(a, b) in &raw.r {
            r_succ[index[&a]].push(index[&b]);
        }
        Ok(Frame {
            worlds: raw.worlds,
            leq: raw.leq,
            r: raw.r,
            index,
            leq_succ,
            r_succ,
        })
    }

    pub fn worlds(&self) -> &[WorldId] {
        &self.worlds
    }

    pub fn leq(&self) -> &BTreeSet<(WorldId, WorldId)> {
        &self.leq
    }

    pub fn r(&self) -> &BTreeSet<(WorldId, WorldId)> {
        &self.r
    }

    pub fn len(&self) -> usize {
        self.worlds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.worlds.is_empty()
    }

    pub fn contains(&self, w: WorldId) -> bool {
        self.index.contains_key(&w)
    }

    pub fn index_of(&self, w: WorldId) -> Result<usize, ModelError> {
        self.index
            .get(&w)
            .copied()
            .ok_or(ModelError::UnknownWorld(w))
    }

    pub fn raw(&self) -> RawFrame {
        RawFrame {
            worlds: self.worlds.clone(),
            leq: self.leq.clone(),
            r: self.r.clone(),
        }
    }

    pub fn report(&self) -> FrameReport {
        check_frame(&self.raw())
    }

    /// All `leq`-upward closed sets of worlds, as bitmasks over world indices.
    pub fn upsets(&self) -> Vec<u64> {
        let n = self.len();
        assert!(n <= 63, "upset enumeration needs at most 63 worlds");
        let mut cones = vec![0u64; n];
        for (i, succ) in self.leq_succ.iter().enumerate() {
            for &j in succ {
                cones[i] |= 1 << j;
            }
        }
        // A set is upward closed iff it contains the cone of each member.
        let mut out = Vec::new();
        for mask in 0..(1u64 << n) {
            if (0..n).all(|i| mask & (1 << i) == 0 || mask & cones[i] == cones[i]) {
                out.push(mask);
            }
        }
        out
    }

    /// Sub-frame induced on `keep` (by index).
    fn induced(&self, keep: &[usize]) -> Frame {
        let ids: BTreeSet<WorldId> = keep.iter().map(|&i| self.worlds[i]).collect();
        let raw = RawFrame {
            worlds: keep.iter().map(|&i| self.worlds[i]).collect(),
            leq: self
                .leq
                .iter()
                .filter(|(a, b)| ids.contains(a) && ids.contains(b))
                .copied()
                .collect(),
            r: self
                .r
                .iter()
                .filter(|(a, b)| ids.contains(a) && ids.contains(b))
                .copied()
                .collect(),
        };
        Frame::new(raw).expect("induced subframes of frames are frames")
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KripkeModel {
    frame: Frame,
    valuation: BTreeMap<String, BTreeSet<WorldId>>,
}

impl KripkeModel {
    /// Rejects valuations mentioning unknown worlds or not upward closed.
    pub fn new(
        frame: Frame,
        valuation: BTreeMap<String, BTreeSet<WorldId>>,
    ) -> Result<KripkeModel, ModelError> {
        for (atom, set) in &valuation {
            for &w in set {
                if !frame.contains(w) {
                    return Err(ModelError::UnknownWorld(w));
                }
            }
            for &(a, b) in frame.leq() {
                if set.contains(&a) && !set.contains(&b) {
                    return Err(ModelError::NotMonotone {
                        atom: atom.clone(),
                        from: a,
                        to: b,
                    });
                }
            }
        }
        Ok(KripkeModel { frame, valuation })
    }

    pub fn frame(&self) -> &Frame {
        &self.frame
    }

    pub fn valuation(&self) -> &BTreeMap<String, BTreeSet<WorldId>> {
        &self.valuation
    }

    /// Atoms true at `w`.
    pub fn atoms_at(&self, w: WorldId) -> Vec<&str> {
        self.valuation
            .iter()
            .filter(|(_, set)| set.contains(&w))
            .map(|(p, _)| p.as_str())
            .collect()
    }

    /// Truth of `a` at every world, indexed like `frame().worlds()`.
    pub fn truth_vector(&self, a: &Formula) -> Vec<bool> {
        let n = self.frame.len();
        match a {
            Formula::Atom(p) => match self.valuation.get(p) {
                Some(set) => self.frame.worlds.iter().map(|w| set.contains(w)).collect(),
                None => vec![false; n],
            },
            Formula::Bottom => vec![false; n],
            Formula::And(b, c) => {
                let (tb, tc) = (self.truth_vector(b), self.truth_vector(c));
                tb.iter().zip(&tc).map(|(x, y)| *x && *y).collect()
            }
            Formula::Or(b, c) => {
                let (tb, tc) = (self.truth_vector(b), self.truth_vector(c));
                tb.iter().zip(&tc).map(|(x, y)| *x || *y).collect()
            }
            Formula::Imp(b, c) => {
                let (tb, tc) = (self.truth_vector(b), self.truth_vector(c));
                (0..n)
                    .map(|w| self.frame.leq_succ[w].iter().all(|&v| !tb[v] || tc[v]))
                    .collect()
            }
            Formula::Box(b) => {
                let tb = self.truth_vector(b);
                (0..n)
                    .map(|w| self.frame.r_succ[w].iter().all(|&v| tb[v]))
                    .collect()
            }
        }
    }

    pub fn forces(&self, w: WorldId, a: &Formula) -> Result<bool, ModelError> {
        let i = self.frame.index_of(w)?;
        Ok(self.truth_vector(a)[i])
    }

    /// Restriction to the worlds `leq`-above `root`. Forcing at those worlds
    /// is unchanged.
    pub fn generated_submodel(&self, root: WorldId) -> Result<KripkeModel, ModelError> {
        let i = self.frame.index_of(root)?;
        let mut keep = self.frame.leq_succ[i].clone();
        keep.sort_unstable();
        Ok(self.restrict(&keep))
    }

    fn restrict(&self, keep: &[usize]) -> KripkeModel {
        let frame = self.frame.induced(keep);
        let valuation = self
            .valuation
            .iter()
            .map(|(p, set)| {
                let set = set
                    .iter()
                    .filter(|w| frame.contains(**w))
                    .copied()
                    .collect();
                (p.clone(), set)
            })
            .collect();
        KripkeModel::new(frame, valuation).expect("restriction keeps monotonicity")
    }

    /// Greedily drops worlds other than `root` while `root` still refutes
    /// `a`. Induced substructures keep every frame property we care about.
    pub fn shrink_refutation(&self, root: WorldId, a: &Formula) -> KripkeModel {
        self.shrink_while(root, |m| m.forces(root, a) == Ok(false))
    }

    /// Greedily drops worlds other than `root` while `keep` still holds.
    pub fn shrink_while(
        &self,
        root: WorldId,
        keep_pred: impl Fn(&KripkeModel) -> bool,
    ) -> KripkeModel {
        let mut current = self.clone();
        let mut changed = true;
        while changed {
            changed = false;
            let worlds = current.frame.worlds().to_vec();
            for w in worlds.into_iter().rev() {
                if w == root {
                    continue;
                }
                let keep: Vec<usize> = (0..current.frame.len())
                    .filter(|&i| current.frame.worlds[i] != w)
                    .collect();
                let candidate = current.restrict(&keep);
                if keep_pred(&candidate) {
                    current = candidate;
                    changed = true;
                }
            }
        }
        current
    }

    /// Renumbers worlds `1..=n` in the current order.
    pub fn renumbered(&self) -> (KripkeModel, HashMap<WorldId, WorldId>) {
        let map: HashMap<WorldId, WorldId> = self
            .frame
            .worlds
            .iter()
            .enumerate()
            .map(|(i, &w)| (w, i as WorldId + 1))
            .collect();
        let raw = RawFrame {
            worlds: self.frame.worlds.iter().map(|w| map[w]).collect(),
            leq: self
                .frame
                .leq
                .iter()
                .map(|(a, b)| (map[a], map[b]))
                .collect(),
            r: self.frame.r.iter().map(|(a, b)| (map[a], map[b])).collect(),
        };
        let valuation = self
            .valuation
            .iter()
            .map(|(p, set)| (p.clone(), set.iter().map(|w| map[w]).collect()))
            .collect();
        let model =
            KripkeModel::new(Frame::new(raw).expect("relabeling"), valuation).expect("relabeling");
        (model, map)
    }

    pub fn to_json(&self) -> String {
        let file = ModelFile {
            worlds: self.frame.worlds.clone(),
            leq: self
                .frame
                .leq
                .iter()
                .filter(|(a, b)| a != b)
                .map(|&(a, b)| [a, b])
                .collect(),
            r: self.frame.r.iter().map(|&(a, b)| [a, b]).collect(),
            val: self
                .valuation
                .iter()
                .filter(|(_, set)| !set.is_empty())
                .map(|(p, set)| (p.clone(), set.iter().copied().collect()))
                .collect(),
        };
        serde_json::to_string_pretty(&file).expect("model serializes")
    }

    pub fn from_json(text: &str) -> Result<KripkeModel, ModelError> {
        let file: ModelFile =
            serde_json::from_str(text).map_err(|e| ModelError::Json(e.to_string()))?;
        file.into_model()
    }

    /// Graphviz rendering: solid edges for `r`, dashed edges for the Hasse
    /// diagram of `leq`, nodes labeled with their id and true atoms.
    pub fn to_dot(&self, root: Option<WorldId>) -> String {
        let mut out = String::from("digraph countermodel {\n  rankdir=BT;\n");
        for &w in &self.frame.worlds {
            let atoms = self.atoms_at(w);
            let label = if atoms.is_empty() {
                format!("{w}")
            } else {
                format!("{w}: {}", atoms.join(", "))
            };
            let shape = if Some(w) == root {
                "doublecircle"
            } else {
                "circle"
            };
            let _ = writeln!(out, "  w{w} [label=\"{label}\", shape={shape}];");
        }
        for &(a, b) in &self.frame.r {
            let _ = writeln!(out, "  w{a} -> w{b};");
        }
        for (a, b) in self.hasse_leq() {
            let _ = writeln!(out, "  w{a} -> w{b} [style=dashed, arrowhead=none];");
        }
        out.push_str("}\n");
        out
    }

    /// Covering pairs of the strict order `leq` minus identity.
    pub fn hasse_leq(&self) -> Vec<(WorldId, WorldId)> {
        let leq = &self.frame.leq;
        leq.iter()
            .filter(|(a, b)| a != b)
            .filter(|&&(a, b)| {
                !self
                    .frame
                    .worlds
                    .iter()
                    .any(|&c| c != a && c != b && leq.contains(&(a, c)) && leq.contains(&(c, b)))
            })
            .copied()
            .collect()
    }
}

/// On-disk model format. Reflexive `leq` pairs may be omitted.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct ModelFile {
    pub worlds: Vec<WorldId>,
    #[serde(default)]
    pub leq: Vec<[WorldId; 2]>,
    #[serde(default)]
    pub r: Vec<[WorldId; 2]>,
    #[serde(default)]
    pub val: BTreeMap<String, Vec<WorldId>>,
}

impl ModelFile {
    pub fn raw_frame(&self) -> RawFrame {
        RawFrame::new(
            self.worlds.iter().copied(),
            self.leq.iter().map(|[a, b]| (*a, *b)),
            self.r.iter().map(|[a, b]| (*a, *b)),
        )
        .with_reflexive_leq()
    }

    pub fn into_model(self) -> Result<KripkeModel, ModelError> {
        let frame = Frame::new(self.raw_frame())?;
        let valuation = self
            .val
            .into_iter()
            .map(|(p, ws)| (p, ws.into_iter().collect()))
            .collect();
        KripkeModel::new(frame, valuation)
    }
}

pub fn valid_on_model(m: &KripkeModel, a: &Formula) -> bool {
    m.truth_vector(a).into_iter().all(|b| b)
}

/// Validity under every monotone valuation of the atoms of `a`. Frames
/// above `limit` worlds are refused.
pub fn valid_on_frame(f: &Frame, a: &Formula, limit: usize) -> Result<bool, ModelError> {
    Ok(refute_on_frame(f, a, limit)?.is_none())
}

/// A valuation on `f` under which `a` fails somewhere, if any.
pub fn refute_on_frame(
    f: &Frame,
    a: &Formula,
    limit: usize,
) -> Result<Option<KripkeModel>, ModelError> {
    if f.len() > limit {
        return Err(ModelError::FrameTooLarge {
            size: f.len(),
            limit,
        });
    }
    let atoms: Vec<String> = a.atoms().into_iter().collect();
    let upsets = f.upsets();
    let mut choice = vec![0usize; atoms.len()];
    loop {
        let valuation = atoms
            .iter()
            .zip(&choice)
            .map(|(p, &k)| {
                let set = (0..f.len())
                    .filter(|&i| upsets[k] & (1 << i) != 0)
                    .map(|i| f.worlds[i])
                    .collect();
                (p.clone(), set)
            })
            .collect();
        let model = KripkeModel::new(f.clone(), valuation).expect("upsets are monotone");
        if !valid_on_model(&model, a) {
            return Ok(Some(model));
        }
        // odometer over valuations
        let mut pos = 0;
        loop {
            if pos == choice.len() {
                return Ok(None);
            }
            choice[pos] += 1;
            if choice[pos] < upsets.len() {
                break;
            }
            choice[pos] = 0;
            pos += 1;
        }
    }
}

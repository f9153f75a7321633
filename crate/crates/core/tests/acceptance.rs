//! End-to-end acceptance suite. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any fails.

mod common;

use std::collections::BTreeSet;
use std::time::{Duration, Instant};

use common::{
    f, frames, iglc_frames, posets, random_formula, random_model, rng, Dag, Model, SmallFrame,
};
use iglc_core::formula::{boxdepth, subsentences, Formula};
use iglc_core::ha::{in_ha_fast_sigma1_logic, in_ha_sigma1_logic};
use iglc_core::iglc::{decide_iglc, Verdict};
use iglc_core::ipc::{decide_ipc, ipc_equiv, ipc_implies, ipc_valid, IpcVerdict, Prover};
use iglc_core::kripke::{check_frame, KripkeModel, WorldId};
use iglc_core::nnil::{class_table, is_nnil, nnil_star, nnil_star_by_enumeration, NnilError};
use iglc_core::solovay::{extend_model, TruthSet};
use iglc_core::tnnil::{is_tnnil, tnnil_plus};
use iglc_core::Budget;
use rand::Rng;

const BUDGET: u64 = Budget::DEFAULT_STEPS;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn main() {
    let start = Instant::now();
    let criteria: [Criterion; 7] = [
        ("axiom corpus", axiom_corpus),
        ("refutation corpus", refutation_corpus),
        ("dual-oracle consistency", dual_oracle),
        ("frame correspondence", frame_correspondence),
        ("NNIL adjointness", nnil_adjointness),
        ("TNNIL suite", tnnil_suite),
        ("Solovay semantics", solovay_semantics),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let t = Instant::now();
        let outcome = run();
        report(i + 1, name, outcome, t.elapsed(), &mut failed);
    }
    let t = Instant::now();
    let outcome = ipc_prover(start);
    report(8, "IPC prover", outcome, t.elapsed(), &mut failed);
    if failed > 0 {
        std::process::exit(1);
    }
}

fn report(n: usize, name: &str, outcome: Outcome, took: Duration, failed: &mut usize) {
    let secs = took.as_secs_f64();
    match outcome {
        Ok(detail) => println!("PASS {n} {name} ({secs:.1}s): {detail}"),
        Err(detail) => {
            *failed += 1;
            println!("FAIL {n} {name} ({secs:.1}s): {detail}");
        }
    }
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn axiom_corpus() -> Outcome {
    let start = Instant::now();
    let mut rng = rng(1);
    let atoms = ["p", "q", "r"];
    let sample = |rng: &mut rand_chacha::ChaCha8Rng| {
        let size = rng.gen_range(1..=5);
        random_formula(rng, size, &atoms, true)
    };
    let mut k = Vec::new();
    let mut lob = Vec::new();
    let mut cp = Vec::new();
    for _ in 0..10 {
        let (a, b) = (sample(&mut rng), sample(&mut rng));
        k.push(Formula::imp(
            Formula::boxed(Formula::imp(a.clone(), b.clone())),
            Formula::imp(Formula::boxed(a.clone()), Formula::boxed(b)),
        ));
        lob.push(Formula::imp(
            Formula::boxed(Formula::imp(Formula::boxed(a.clone()), a.clone())),
            Formula::boxed(a.clone()),
        ));
        cp.push(Formula::imp(a.clone(), Formula::boxed(a)));
    }
    let mut composites = Vec::new();
    for i in 0..5 {
        // necessitation of a conjunction of theorems
        composites.push(Formula::boxed(Formula::and(
            k[i].clone(),
            Formula::boxed(lob[i].clone()),
        )));
    }
    for i in 5..10 {
        // theorem T1 closes (T1 -> T2) -> T2 under modus ponens
        composites.push(Formula::imp(
            Formula::imp(cp[i].clone(), Formula::boxed(lob[i].clone())),
            Formula::boxed(lob[i].clone()),
        ));
    }
    let all: Vec<Formula> = [k, lob, cp, composites].concat();
    for a in &all {
        let v = decide_iglc(a, BUDGET);
        ensure(v.is_valid(), || format!("{a}: {}", v.label()))?;
    }
    let took = start.elapsed();
    ensure(took < Duration::from_secs(120), || format!("took {took:?}"))?;
    Ok(format!("{} formulas valid", all.len()))
}

fn check_countermodel(a: &Formula, m: &KripkeModel, root: WorldId) -> Result<(), String> {
    let report = check_frame(&m.frame().raw());
    ensure(
        report.is_poset && report.has_model_property && report.irreflexive && report.realistic,
        || format!("{a}: bad countermodel frame {report:?}"),
    )?;
    ensure(m.forces(root, a) == Ok(false), || {
        format!("{a}: root forces the formula")
    })?;
    let mine = Model::from_kripke(m);
    let ix = m
        .frame()
        .worlds()
        .iter()
        .position(|&w| w == root)
        .expect("root");
    ensure(!mine.forces(ix, a), || {
        format!("{a}: independent evaluation disagrees")
    })
}

fn refutation_corpus() -> Outcome {
    let corpus = [
        "[]p -> p",
        "p | ~p",
        "~~p -> p",
        "[]p -> (q | (q -> p))",
        "[]([]false -> (~p -> (q | r))) -> []([]false -> ((~p -> q) | (~p -> r)))",
    ];
    for s in corpus {
        let a = f(s);
        match decide_iglc(&a, BUDGET) {
            Verdict::Invalid { countermodel, root } => check_countermodel(&a, &countermodel, root)?,
            v => return Err(format!("{s}: {}", v.label())),
        }
    }
    Ok(format!(
        "{} formulas refuted with verified countermodels",
        corpus.len()
    ))
}

fn dual_oracle() -> Outcome {
    let dag = Dag::exhaustive(&["p", "q"], 7, Some(2));
    let small: Vec<Model> = iglc_frames(3)
        .iter()
        .flat_map(|fr| fr.models(&["p", "q"]))
        .collect();
    let mut refuted = vec![false; dag.len()];
    for m in &small {
        let full = m.full();
        for (i, v) in dag.eval(m).into_iter().enumerate() {
            refuted[i] |= v != full;
        }
    }
    let mut rng = rng(3);
    let random: Vec<Model> = (0..1000)
        .map(|_| {
            let n = rng.gen_range(1..=5);
            random_model(&mut rng, n, &["p", "q"])
        })
        .collect();
    let mut random_refuted = vec![false; dag.len()];
    for m in &random {
        let full = m.full();
        for (i, v) in dag.eval(m).into_iter().enumerate() {
            random_refuted[i] |= v != full;
        }
    }
    let mut valid = 0;
    for (i, a) in dag.formulas.iter().enumerate() {
        match decide_iglc(a, BUDGET) {
            Verdict::Valid { .. } => {
                valid += 1;
                ensure(!refuted[i], || {
                    format!("{a}: Valid but refuted on a small model")
                })?;
                ensure(!random_refuted[i], || {
                    format!("{a}: Valid but refuted on a random model")
                })?;
            }
            Verdict::Invalid { countermodel, root } => check_countermodel(a, &countermodel, root)?,
            Verdict::BudgetExceeded => return Err(format!("{a}: budget exceeded")),
        }
    }
    Ok(format!(
        "{} formulas, {valid} valid, {} small models, 1000 random models, 0 violations",
        dag.len(),
        small.len()
    ))
}

fn frame_correspondence() -> Outcome {
    let lob = f("[]([]p -> p) -> []p");
    let cp = f("p -> []p");
    let mut count = 0;
    for n in 1..=3 {
        for fr in frames(n) {
            count += 1;
            let models = fr.models(&["p"]);
            let lob_valid = models.iter().all(|m| m.valid(&lob));
            let cp_valid = models.iter().all(|m| m.valid(&cp));
            let report = check_frame(&fr.to_raw());
            ensure(
                report.semi_transitive == fr.semi_transitive()
                    && report.conversely_well_founded == fr.conversely_well_founded()
                    && report.realistic == fr.realistic(),
                || format!("frame report disagrees on {fr:?}"),
            )?;
            ensure(
                lob_valid == (fr.semi_transitive() && fr.conversely_well_founded()),
                || format!("Löb correspondence fails on {fr:?}"),
            )?;
            ensure(cp_valid == fr.realistic(), || {
                format!("completeness correspondence fails on {fr:?}")
            })?;
        }
    }
    Ok(format!("{count} frames, 0 violations"))
}

fn nnil_adjointness() -> Outcome {
    let dag = Dag::exhaustive(&["p", "q"], 7, None);
    let atoms = vec!["p".to_string(), "q".to_string()];
    let table = class_table(&atoms).map_err(|e| e.to_string())?;
    let reps = table.representatives();
    // intuitionistic models on at most three worlds; a model where B holds
    // and A fails rules out B |- A without calling the prover
    let models: Vec<Model> = (1..=3)
        .flat_map(posets)
        .flat_map(|up| {
            let n = up.len();
            SmallFrame {
                n,
                up,
                r: vec![0; n],
            }
            .models(&["p", "q"])
        })
        .collect();
    let dag_masks: Vec<Vec<u64>> = models.iter().map(|m| dag.eval(m)).collect();
    let rep_masks: Vec<Vec<u64>> = models
        .iter()
        .map(|m| reps.iter().map(|b| m.eval(b)).collect())
        .collect();

    let mut checked_pairs = 0usize;
    for (i, a) in dag.formulas.iter().enumerate() {
        let star = nnil_star(a).map_err(|e| format!("{a}: {e}"))?;
        ensure(ipc_implies(&star, a) == Ok(true), || {
            format!("{a}: A* -> A fails")
        })?;
        let oracle = nnil_star_by_enumeration(a).map_err(|e| e.to_string())?;
        ensure(ipc_equiv(&star, &oracle) == Ok(true), || {
            format!("{a}: A* = {star} but the class table gives {oracle}")
        })?;
        if is_nnil(a) == Ok(true) {
            ensure(ipc_equiv(&star, a) == Ok(true), || {
                format!("{a}: NNIL input not fixed")
            })?;
        }
        let star2 = nnil_star(&star).map_err(|e| e.to_string())?;
        ensure(ipc_equiv(&star2, &star) == Ok(true), || {
            format!("{a}: A** differs from A*")
        })?;

        let mut prover = Prover::new();
        for (j, b) in reps.iter().enumerate() {
            let semantically_below =
                (0..models.len()).all(|k| rep_masks[k][j] & !dag_masks[k][i] == 0);
            if !semantically_below || !prover.derivable(std::slice::from_ref(b), a) {
                continue;
            }
            checked_pairs += 1;
            ensure(prover.derivable(std::slice::from_ref(b), &star), || {
                format!("{b} |- {a} but not {b} |- {star}")
            })?;
        }
    }

    let a = f("(p -> q) -> q");
    let by_table = table.star(&a).map_err(|e| e.to_string())?;
    ensure(ipc_equiv(&by_table, &f("p | q")) == Ok(true), || {
        format!("table gives {by_table}")
    })?;
    let fast = nnil_star(&a).map_err(|e| e.to_string())?;
    ensure(ipc_equiv(&fast, &f("p | q")) == Ok(true), || {
        format!("star gives {fast}")
    })?;
    Ok(format!(
        "{} formulas, {} classes, {checked_pairs} derivable pairs, ((p -> q) -> q)* = {fast}",
        dag.len(),
        reps.len()
    ))
}

fn tnnil_suite() -> Outcome {
    let mut rng = rng(6);
    let atoms = ["p", "q", "r"];
    let (mut done, mut over_cap) = (0, 0);
    let mut sample = Vec::new();
    while done < 10_000 {
        let size = rng.gen_range(1..=8);
        let a = random_formula(&mut rng, size, &atoms, true);
        let plus = match tnnil_plus(&a) {
            Ok(plus) => plus,
            Err(NnilError::AlphabetTooLarge { .. }) => {
                over_cap += 1;
                continue;
            }
            Err(e) => return Err(format!("{a}: {e}")),
        };
        ensure(is_tnnil(&plus), || format!("{a}: {plus} is not TNNIL"))?;
        ensure(boxdepth(&plus) <= boxdepth(&a), || {
            format!("{a}: boxdepth grew in {plus}")
        })?;
        done += 1;
        if done <= 1000 {
            sample.push(a);
        }
    }

    let mut tnnil_inputs = 0;
    while tnnil_inputs < 50 {
        let size = rng.gen_range(3..=9);
        let a = random_formula(&mut rng, size, &atoms, true);
        if !is_tnnil(&a) {
            continue;
        }
        tnnil_inputs += 1;
        let plus = tnnil_plus(&a).map_err(|e| e.to_string())?;
        let v = decide_iglc(&Formula::iff(a.clone(), plus.clone()), BUDGET);
        ensure(v.is_valid(), || format!("{a} <-> {plus}: {}", v.label()))?;
    }

    for (s, expected) in [
        ("p -> []p", true),
        ("[]([]p -> p) -> []p", true),
        ("[]p -> p", false),
    ] {
        let v = in_ha_sigma1_logic(&f(s), BUDGET).map_err(|e| e.to_string())?;
        ensure(
            v.is_valid() == expected && !matches!(v, Verdict::BudgetExceeded),
            || format!("ha-sigma1 on {s}: {}", v.label()),
        )?;
    }

    let corpus: Vec<Formula> = include_str!("../../../corpus/examples.tsv")
        .lines()
        .filter(|l| !l.trim().is_empty() && !l.starts_with('#'))
        .map(|l| f(l.split('\t').nth(2).expect("three columns")))
        .chain(sample)
        .collect();
    for a in &corpus {
        let (x, y) = (
            in_ha_sigma1_logic(a, BUDGET),
            in_ha_fast_sigma1_logic(a, BUDGET),
        );
        let same = match (&x, &y) {
            (Ok(x), Ok(y)) => x.label() == y.label(),
            (Err(x), Err(y)) => x == y,
            _ => false,
        };
        ensure(same, || {
            format!("{a}: ha-sigma1 and ha-fast-sigma1 disagree")
        })?;
    }
    Ok(format!(
        "10000 formulas TNNIL after (+) ({over_cap} skipped over the alphabet cap), 50 TNNIL inputs, {} agreement checks",
        corpus.len()
    ))
}

fn solovay_semantics() -> Outcome {
    let mut rng = rng(7);
    let atoms = ["p", "q"];
    let sample = |rng: &mut rand_chacha::ChaCha8Rng| {
        let size = rng.gen_range(1..=7);
        random_formula(rng, size, &atoms, true)
    };
    for _ in 0..100 {
        let n = rng.gen_range(1..=4);
        let core = random_model(&mut rng, n, &atoms);
        let a = sample(&mut rng);
        let (b, c) = (sample(&mut rng), sample(&mut rng));
        let ext = extend_model(&core.to_kripke()).map_err(|e| e.to_string())?;
        let r = ext.r() as usize;
        let subs = subsentences(&a).len();
        let horizon = ext.horizon(&a) as usize;
        let far = r + subs + 20;
        let oracle = truncation(&core, ext.relabelling(), far);

        let ts = ext.truth_set(&a);
        let mask = oracle.eval(&a);
        let forced = |w: usize| mask & (1 << w) != 0;
        ensure((ts == TruthSet::All) == forced(0), || {
            format!("{a}: world 0 disagrees")
        })?;
        for w in 1..=far {
            ensure(ts.contains(w as WorldId) == forced(w), || {
                format!("{a}: world {w} disagrees")
            })?;
        }
        if let TruthSet::Finite(s) = &ts {
            ensure(s.iter().all(|&w| (w as usize) <= horizon), || {
                format!("{a}: {ts} beyond horizon")
            })?;
            ensure((horizon + 1..=far).all(|w| !forced(w)), || {
                format!("{a}: tail forces a finite set")
            })?;
        } else {
            ensure(mask == oracle.full(), || {
                format!("{a}: ALL but some world refutes")
            })?;
        }

        let subformulas: Vec<Formula> = subsentences(&a).into_iter().collect();
        let masks: Vec<u64> = subformulas.iter().map(|g| oracle.eval(g)).collect();
        let profile = |w: usize| -> BTreeSet<Formula> {
            subformulas
                .iter()
                .zip(&masks)
                .filter(|(_, m)| *m & (1 << w) != 0)
                .map(|(g, _)| g.clone())
                .collect()
        };
        for w in r + 1..far {
            ensure(profile(w + 1).is_subset(&profile(w)), || {
                format!("{a}: profile not antitone at {w}")
            })?;
        }
        let settled = profile(r + 1 + subs);
        ensure((r + 1 + subs..=far).all(|w| profile(w) == settled), || {
            format!("{a}: profiles do not settle within {subs} steps")
        })?;
        for (k, p) in ext.tail_profiles(&a).iter().enumerate() {
            ensure(*p == profile(r + 1 + k), || {
                format!("{a}: tail profile {k} disagrees")
            })?;
        }

        let (tb, tc) = (ext.truth_set(&b), ext.truth_set(&c));
        ensure(
            ext.truth_set(&Formula::and(b.clone(), c.clone())) == tb.intersect(&tc),
            || format!("{b} & {c}: not the intersection"),
        )?;
        ensure(
            ext.truth_set(&Formula::or(b.clone(), c.clone())) == tb.union(&tc),
            || format!("{b} | {c}: not the union"),
        )?;
    }

    let single = Model {
        n: 1,
        up: vec![1],
        r: vec![0],
        val: [("p".to_string(), 1)].into(),
    };
    let ext = extend_model(&single.to_kripke()).map_err(|e| e.to_string())?;
    let ts = ext.truth_set(&f("[]p"));
    ensure(ts == TruthSet::Finite([1, 2].into()), || {
        format!("single-p core: truth_set([]p) = {ts}")
    })?;
    Ok("100 random pairs, truth_set([]p) = [1, 2] on the single-p core".to_string())
}

/// The extended model cut at `far`, with world 0 kept and seeing every
/// positive world up to `far`. Index `i` is world `i`.
fn truncation(
    core: &Model,
    relabel: &std::collections::BTreeMap<WorldId, WorldId>,
    far: usize,
) -> Model {
    let n = far + 1;
    assert!(n <= 64);
    let r = core.n;
    let label = |i: usize| relabel[&(i as WorldId + 1)] as usize;
    let mut up = vec![0u64; n];
    let mut rel = vec![0u64; n];
    for i in 0..core.n {
        for j in 0..core.n {
            if core.up[i] & (1 << j) != 0 {
                up[label(i)] |= 1 << label(j);
            }
            if core.r[i] & (1 << j) != 0 {
                rel[label(i)] |= 1 << label(j);
            }
        }
    }
    for i in r + 1..=far {
        for j in 1..=i {
            up[i] |= 1 << j;
            if j < i {
                rel[i] |= 1 << j;
            }
        }
    }
    let positive = ((1u64 << n) - 1) & !1;
    up[0] = positive | 1;
    rel[0] = positive;
    let val = core
        .val
        .iter()
        .map(|(p, &m)| {
            let moved = (0..core.n)
                .filter(|&i| m & (1 << i) != 0)
                .fold(0u64, |s, i| s | 1 << label(i));
            (p.clone(), moved)
        })
        .collect();
    Model { n, up, r: rel, val }
}

fn ipc_prover(start: Instant) -> Outcome {
    let dag = Dag::exhaustive(&["p", "q"], 7, None);
    let assignments = [[false, false], [false, true], [true, false], [true, true]];
    let tables: Vec<Vec<bool>> = assignments.iter().map(|v| dag.eval_classical(v)).collect();
    let mut tautologies = 0;
    for (i, a) in dag.formulas.iter().enumerate() {
        let tautology = tables.iter().all(|t| t[i]);
        tautologies += tautology as usize;
        let nn = Formula::not(Formula::not(a.clone()));
        ensure(ipc_valid(&nn) == Ok(tautology), || {
            format!("Glivenko fails on {a}")
        })?;
    }
    let peirce = f("((p -> q) -> p) -> p");
    match decide_ipc(&[], &peirce).map_err(|e| e.to_string())? {
        IpcVerdict::Valid => return Err("Peirce's law proved".to_string()),
        IpcVerdict::Invalid {
            countermodel,
            world,
        } => {
            ensure(countermodel.forces(world, &peirce) == Ok(false), || {
                "Peirce countermodel".into()
            })?;
            let mine = Model::from_kripke(&countermodel);
            let ix = countermodel
                .frame()
                .worlds()
                .iter()
                .position(|&w| w == world)
                .expect("world");
            ensure(!mine.forces(ix, &peirce), || {
                "Peirce countermodel fails independent check".into()
            })?;
        }
    }
    let total = start.elapsed();
    ensure(total < Duration::from_secs(600), || {
        format!("suite took {total:?}")
    })?;
    Ok(format!(
        "{} formulas ({tautologies} tautologies), Peirce refuted, suite total {:.1}s",
        dag.len(),
        total.as_secs_f64()
    ))
}

//! Browser bindings: prove a formula and draw its countermodel, apply the
//! TNNIL transformation, and compute Solovay truth sets.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde_json::json;
use wasm_bindgen::prelude::*;

use iglc_core::formula::parse;
use iglc_core::iglc::decide_iglc;
use iglc_core::kripke::{KripkeModel, WorldId};
use iglc_core::solovay::extend_model;
use iglc_core::tnnil::{is_tnnil, tnnil_plus};
use iglc_core::Budget;

/// JSON with the verdict and, when refuted, the countermodel as model JSON,
/// DOT and SVG.
pub fn prove_json(logic: &str, formula: &str) -> Result<String, String> {
    let a = parse(formula).map_err(|e| e.to_string())?;
    let target = match logic {
        "iglc" => a.clone(),
        "ha-sigma1" => tnnil_plus(&a).map_err(|e| e.to_string())?,
        other => return Err(format!("unknown logic '{other}'")),
    };
    let verdict = decide_iglc(&target, Budget::DEFAULT_STEPS);
    let mut out = json!({
        "verdict": verdict.label(),
        "decided": target.render(),
    });
    if let Some((m, root)) = verdict.countermodel() {
        out["root"] = json!(root);
        out["model"] = serde_json::from_str(&m.to_json()).map_err(|e| e.to_string())?;
        out["dot"] = json!(m.to_dot(Some(root)));
        out["svg"] = json!(draw(m, Some(root)));
    }
    Ok(out.to_string())
}

pub fn tnnil_json(formula: &str) -> Result<String, String> {
    let a = parse(formula).map_err(|e| e.to_string())?;
    let plus = tnnil_plus(&a).map_err(|e| e.to_string())?;
    Ok(json!({
        "input_is_tnnil": is_tnnil(&a),
        "output": plus.render(),
    })
    .to_string())
}

pub fn truth_set_json(model: &str, formula: &str) -> Result<String, String> {
    let core = KripkeModel::from_json(model).map_err(|e| e.to_string())?;
    let a = parse(formula).map_err(|e| e.to_string())?;
    let m = extend_model(&core).map_err(|e| e.to_string())?;
    let profiles: Vec<Vec<String>> = m
        .tail_profiles(&a)
        .into_iter()
        .map(|s| s.iter().map(|f| f.render()).collect())
        .collect();
    Ok(json!({
        "r": m.r(),
        "truth_set": m.truth_set(&a).to_string(),
        "tail_profiles": profiles,
        "svg": draw(m.core(), Some(m.r())),
    })
    .to_string())
}

#[wasm_bindgen]
pub fn prove(logic: &str, formula: &str) -> Result<String, JsError> {
    prove_json(logic, formula).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn tnnil(formula: &str) -> Result<String, JsError> {
    tnnil_json(formula).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn truth_set(model: &str, formula: &str) -> Result<String, JsError> {
    truth_set_json(model, formula).map_err(|e| JsError::new(&e))
}

/// Layered drawing: each world sits one row above its highest strict
/// predecessor. Dashed lines are the covering pairs of the order, arrows the
/// modal relation.
pub fn draw(m: &KripkeModel, root: Option<WorldId>) -> String {
    let worlds = m.frame().worlds();
    let leq = m.frame().leq();
    let mut level: BTreeMap<WorldId, usize> = BTreeMap::new();
    let mut pending: Vec<WorldId> = worlds.to_vec();
    while !pending.is_empty() {
        pending.retain(|&w| {
            let below: Vec<WorldId> = worlds
                .iter()
                .copied()
                .filter(|&v| v != w && leq.contains(&(v, w)))
                .collect();
            if below.iter().all(|v| level.contains_key(v)) {
                let l = below.iter().map(|v| level[v] + 1).max().unwrap_or(0);
                level.insert(w, l);
                false
            } else {
                true
            }
        });
    }
    let rows = level.values().max().map_or(1, |l| l + 1);
    let mut by_row: Vec<Vec<WorldId>> = vec![Vec::new(); rows];
    for (&w, &l) in &level {
        by_row[l].push(w);
    }
    let width = by_row.iter().map(Vec::len).max().unwrap_or(1).max(1) * 120;
    let height = rows * 90 + 20;
    let mut pos = BTreeMap::new();
    for (l, row) in by_row.iter().enumerate() {
        for (i, &w) in row.iter().enumerate() {
            let x = (i as f64 + 0.5) * width as f64 / row.len() as f64;
            let y = (height - 50 - l * 90) as f64;
            pos.insert(w, (x, y));
        }
    }

    let mut s = format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width}\" height=\"{height}\" \
         font-family=\"sans-serif\" font-size=\"13\">\
         <defs><marker id=\"arrow\" viewBox=\"0 0 10 10\" refX=\"10\" refY=\"5\" \
         markerWidth=\"7\" markerHeight=\"7\" orient=\"auto\">\
         <path d=\"M0,0 L10,5 L0,10 z\"/></marker></defs>"
    );
    for (a, b) in m.hasse_leq() {
        let ((x1, y1), (x2, y2)) = (pos[&a], pos[&b]);
        let _ = write!(
            s,
            "<line x1=\"{x1}\" y1=\"{y1}\" x2=\"{x2}\" y2=\"{y2}\" stroke=\"#999\" stroke-dasharray=\"4 3\"/>"
        );
    }
    for &(a, b) in m.frame().r() {
        let ((x1, y1), (x2, y2)) = (pos[&a], pos[&b]);
        let (dx, dy) = (x2 - x1, y2 - y1);
        let len = (dx * dx + dy * dy).sqrt().max(1.0);
        let (ux, uy) = (dx / len, dy / len);
        let (sx, sy) = (x1 + ux * 20.0, y1 + uy * 20.0);
        let (ex, ey) = (x2 - ux * 20.0, y2 - uy * 20.0);
        let (cx, cy) = ((sx + ex) / 2.0 + uy * 25.0, (sy + ey) / 2.0 - ux * 25.0);
        let _ = write!(
            s,
            "<path d=\"M{sx:.1},{sy:.1} Q{cx:.1},{cy:.1} {ex:.1},{ey:.1}\" fill=\"none\" \
             stroke=\"#1f5fa8\" marker-end=\"url(#arrow)\"/>"
        );
    }
    for &w in worlds {
        let (x, y) = pos[&w];
        let stroke = if Some(w) == root { 3 } else { 1 };
        let atoms = m.atoms_at(w).join(", ");
        let _ = write!(
            s,
            "<circle cx=\"{x}\" cy=\"{y}\" r=\"18\" fill=\"#fff\" stroke=\"#000\" stroke-width=\"{stroke}\"/>\
             <text x=\"{x}\" y=\"{}\" text-anchor=\"middle\">{w}</text>\
             <text x=\"{}\" y=\"{}\" fill=\"#a33\">{}</text>",
            y + 4.0,
            x + 22.0,
            y - 14.0,
            escape(&atoms)
        );
    }
    s.push_str("</svg>");
    s
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

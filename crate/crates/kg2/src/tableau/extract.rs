//! Countermodel extraction from a complete open branch.
//!
//! The branch's constraint graph (with the implicit `0 <= s <= 1`, `0 < 1`
//! edges) is condensed into strongly connected components; members of one
//! component are order-equivalent and receive one value. Components merged
//! into the component of a constant are forced to that constant; a relational
//! term with no strict upper bound in the transitive closure defaults to 1
//! (together with everything non-strictly above it). The remaining components
//! that contain an atomic structure are ranked by counting the components
//! strictly below them, and valued `rank / n` on the uniform grid just fine
//! enough to separate the ranks. Every constraint of the branch is then
//! re-verified against the built model; a failure here is an engine bug and
//! surfaces as an internal error, never as a verdict.

use std::collections::{HashMap, HashSet};

use crate::model::{Frame, Model, Side};
use crate::syntax::CoreFormula;
use crate::value::Value;

use super::{Branch, EngineError, ExtractStats, Structure, Tableau, CONST_ONE, CONST_ZERO};

/// Iterative Tarjan; returns the component index of each node. Components are
/// numbered in completion order, so every edge between distinct components
/// goes from a higher index to a lower one.
pub(super) fn tarjan_scc(n: usize, edges: &[(usize, usize, bool)]) -> Vec<usize> {
    let mut adj = vec![Vec::new(); n];
    for &(a, b, _) in edges {
        if a != b {
            adj[a].push(b);
        }
    }
    const UNSET: usize = usize::MAX;
    let mut index = vec![UNSET; n];
    let mut low = vec![0usize; n];
    let mut on_stack = vec![false; n];
    let mut comp = vec![UNSET; n];
    let mut stack = Vec::new();
    let mut next_index = 0usize;
    let mut next_comp = 0usize;

    for start in 0..n {
        if index[start] != UNSET {
            continue;
        }
        // Call frames: (node, next child position).
        let mut call: Vec<(usize, usize)> = vec![(start, 0)];
        while let Some(&mut (v, ref mut ci)) = call.last_mut() {
            if *ci == 0 {
                index[v] = next_index;
                low[v] = next_index;
                next_index += 1;
                stack.push(v);
                on_stack[v] = true;
            }
            if *ci < adj[v].len() {
                let w = adj[v][*ci];
                *ci += 1;
                if index[w] == UNSET {
                    call.push((w, 0));
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
            } else {
                if low[v] == index[v] {
                    loop {
                        let w = stack.pop().unwrap();
                        on_stack[w] = false;
                        comp[w] = next_comp;
                        if w == v {
                            break;
                        }
                    }
                    next_comp += 1;
                }
                call.pop();
                if let Some(&mut (parent, _)) = call.last_mut() {
                    low[parent] = low[parent].min(low[v]);
                }
            }
        }
    }
    comp
}

/// Realisation check: every branch constraint must hold when structures are
/// read off the model (formula values by evaluation, relational terms and
/// constants directly).
pub(super) fn check_realisation(t: &Tableau, b: &Branch, model: &Model) -> Result<(), EngineError> {
    let rl = |sid: super::StructId| -> Value {
        match t.structure(sid) {
            Structure::Const(false) => Value::zero(),
            Structure::Const(true) => Value::one(),
            Structure::Rel { sign, from, to } => model.rel(sign, from as usize, to as usize),
            Structure::FormulaAt { world, side, formula } => {
                let pair =
                    crate::eval::eval_at(model, world as usize, &t.formula(formula).to_formula());
                match side {
                    Side::One => pair.pos,
                    Side::Two => pair.neg,
                }
            }
        }
    };
    for &cid in &b.constraints {
        let c = t.constraint(cid);
        let (lv, rv) = (rl(c.lhs), rl(c.rhs));
        let ok = if c.strict { lv < rv } else { lv <= rv };
        if !ok {
            return Err(EngineError::Internal(format!(
                "unrealised constraint {} (values {} vs {})",
                t.render_constraint_id(cid),
                lv,
                rv
            )));
        }
    }
    Ok(())
}

pub(super) fn extract_model(
    t: &Tableau,
    b: &Branch,
) -> Result<(Model, String, ExtractStats), EngineError> {
    let (nodes, index) = t.graph_nodes(b);
    let edges = t.graph_edges(b, &nodes, &index);
    let node_count = nodes.len();
    let comp = tarjan_scc(node_count.max(1), &edges);
    let comp_count = comp.iter().copied().max().map_or(0, |m| m + 1);

    if edges.iter().any(|&(a, c, strict)| strict && comp[a] == comp[c]) {
        return Err(EngineError::Internal(
            "extraction attempted on a closed branch".to_string(),
        ));
    }

    // Condensation edges, and per-component strict/weak "below" sets.
    // Components come out of Tarjan in completion order: inter-component
    // edges go from higher to lower index, so descending order is
    // topological (sources first).
    let mut in_edges: Vec<Vec<(usize, bool)>> = vec![Vec::new(); comp_count];
    let mut out_edges: Vec<Vec<(usize, bool)>> = vec![Vec::new(); comp_count];
    for &(a, c, strict) in &edges {
        let (ca, cc) = (comp[a], comp[c]);
        if ca != cc {
            in_edges[cc].push((ca, strict));
            out_edges[ca].push((cc, strict));
        }
    }

    // below_any[d]: components with a path into d.
    // below_strict[d]: components with a path into d passing a strict edge.
    let mut below_any: Vec<HashSet<usize>> = vec![HashSet::new(); comp_count];
    let mut below_strict: Vec<HashSet<usize>> = vec![HashSet::new(); comp_count];
    for d in (0..comp_count).rev() {
        let incoming = in_edges[d].clone();
        for (c, strict) in incoming {
            if strict {
                let mut add: HashSet<usize> = below_any[c].clone();
                add.insert(c);
                below_strict[d].extend(add);
            } else {
                let strict_of_c = below_strict[c].clone();
                below_strict[d].extend(strict_of_c);
            }
            let mut any: HashSet<usize> = below_any[c].clone();
            any.insert(c);
            below_any[d].extend(any);
        }
    }

    // has_strict_above[c]: some strict edge occurs on a path leaving c.
    let mut has_strict_above = vec![false; comp_count];
    for c in 0..comp_count {
        has_strict_above[c] = out_edges[c]
            .iter()
            .any(|&(d, strict)| strict || has_strict_above[d]);
    }

    let comp_of_struct = |s: Structure| -> Option<usize> {
        t.structure_ids.get(&s).and_then(|id| index.get(id)).map(|&i| comp[i])
    };
    let zero_comp = comp_of_struct(CONST_ZERO);
    let one_comp = comp_of_struct(CONST_ONE);

    // Forced-1 components: the constant's own component, plus relational
    // terms with no strict upper bound and everything weakly above them.
    let mut forced_one = vec![false; comp_count];
    if let Some(c) = one_comp {
        forced_one[c] = true;
    }
    for (i, &sid) in nodes.iter().enumerate() {
        if !matches!(t.structure(sid), Structure::Rel { .. }) {
            continue;
        }
        let c = comp[i];
        if Some(c) == zero_comp || Some(c) == one_comp || has_strict_above[c] {
            continue;
        }
        forced_one[c] = true;
    }
    for c in (0..comp_count).rev() {
        if forced_one[c] {
            for &(d, _) in &out_edges[c] {
                forced_one[d] = true;
            }
        }
    }
    if let Some(z) = zero_comp {
        if forced_one[z] {
            return Err(EngineError::Internal(
                "constant 0 forced to 1 during extraction".to_string(),
            ));
        }
    }

    // Components still to rank: not forced, containing an atomic structure.
    let is_atomic = |s: Structure| {
        matches!(s, Structure::Rel { .. })
            || matches!(
                s,
                Structure::FormulaAt { formula, .. }
                    if matches!(t.formula(formula), CoreFormula::Atom(_))
            )
    };
    let mut ranked: Vec<usize> = Vec::new();
    for (c, &forced) in forced_one.iter().enumerate() {
        if forced || Some(c) == zero_comp {
            continue;
        }
        let has_atomic = nodes
            .iter()
            .enumerate()
            .any(|(i, &sid)| comp[i] == c && is_atomic(t.structure(sid)));
        if has_atomic {
            ranked.push(c);
        }
    }
    let ranked_set: HashSet<usize> = ranked.iter().copied().collect();

    // Longest-chain layering over the strict-below relation: a class sits one
    // layer above the highest ranked class (or the constant 0) strictly below
    // it. This respects every strict constraint, including those mediated by
    // complex structures, with the smallest uniform denominator.
    let mut rank: HashMap<usize, u64> = HashMap::new();
    let mut max_rank = 0u64;
    for c in (0..comp_count).rev() {
        if !ranked_set.contains(&c) {
            continue;
        }
        let mut r = 0u64;
        for d in &below_strict[c] {
            if Some(*d) == zero_comp {
                r = r.max(1);
            } else if let Some(&rd) = rank.get(d) {
                r = r.max(rd + 1);
            }
        }
        max_rank = max_rank.max(r);
        rank.insert(c, r);
    }
    let grid = max_rank + 1;

    let value_of_comp = |c: usize| -> Value {
        if forced_one[c] {
            Value::one()
        } else if let Some(&r) = rank.get(&c) {
            Value::grid(r, grid)
        } else {
            Value::zero()
        }
    };

    // Assemble the model over the branch's worlds, named in creation order.
    let labels: Vec<String> = (0..b.next_world).map(|i| format!("w{i}")).collect();
    let frame = Frame::new(labels).map_err(|e| EngineError::Internal(e.to_string()))?;
    let mut model = Model::new(frame);
    for (i, &sid) in nodes.iter().enumerate() {
        match t.structure(sid) {
            Structure::Rel { sign, from, to } => {
                model
                    .frame_mut()
                    .set_rel(sign, from as usize, to as usize, value_of_comp(comp[i]));
            }
            Structure::FormulaAt { world, side, formula } => {
                if let CoreFormula::Atom(p) = t.formula(formula) {
                    let name = p.clone();
                    model.set_val(side, &name, world as usize, value_of_comp(comp[i]));
                }
            }
            Structure::Const(_) => {}
        }
    }

    // Mandatory self-check: every branch constraint must hold under the
    // realisation that maps structures to their model values.
    check_realisation(t, b, &model)?;

    let atomic_structures = nodes
        .iter()
        .filter(|&&sid| is_atomic(t.structure(sid)))
        .count();
    let mut atomic_classes: Vec<usize> = nodes
        .iter()
        .enumerate()
        .filter(|&(_, &sid)| is_atomic(t.structure(sid)))
        .map(|(i, _)| comp[i])
        .collect();
    atomic_classes.sort_unstable();
    atomic_classes.dedup();
    let stats = ExtractStats {
        atomic_structures,
        class_count: atomic_classes.len(),
        ranked_classes: ranked.len(),
        rank_denominator: grid,
        worlds: b.next_world as usize,
    };
    Ok((model, "w0".to_string(), stats))
}

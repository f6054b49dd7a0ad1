//! Labelled-value satisfiability over a fixed finite value grid.
//!
//! Instead of order constraints, every entry assigns an exact grid value to a
//! formula at a world (`w:i:f = v` with `v` in `{0, 1/denom, .., 1}`) or to a
//! relational edge. A branch dies as soon as one entry would receive two
//! different values. Propositional entries are decomposed by enumerating the
//! value combinations of their immediate subformulas that the connective
//! clauses allow; a modal entry whose value is not the vacuous bound gets a
//! single witness successor attaining it, and every successor additionally
//! receives a guessed value for each other same-sign modal entry, constrained
//! by that entry's universal inequality.
//!
//! Modal witnesses are explored one at a time and their entries discarded as
//! soon as the subtree is decided, so the live entry count stays proportional
//! to one branch of the model (tracked in [`LabelledStats`]); children are
//! independent once the world's own entries are fixed, because all
//! cross-world constraints go through the single connecting edge.

use std::collections::BTreeMap;
use std::time::Instant;

use crate::model::{Frame, Model, Side, Sign};
use crate::syntax::{CoreFormula, Formula};
use crate::tableau::{EngineError, LimitKind, Limits};
use crate::value::Value;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct LabelledStats {
    /// Peak number of simultaneously held labelled entries across the
    /// recursion stack.
    pub max_live_entries: usize,
    /// Value combinations attempted.
    pub guesses: u64,
}

#[derive(Debug)]
pub enum LabelledOutcome {
    SatInGrid { model: Model, stats: LabelledStats },
    NoModelInGrid { stats: LabelledStats },
}

impl LabelledOutcome {
    pub fn stats(&self) -> LabelledStats {
        match self {
            LabelledOutcome::SatInGrid { stats, .. } => *stats,
            LabelledOutcome::NoModelInGrid { stats } => *stats,
        }
    }
}

// Compiled subformula table; children refer to smaller indices.
#[derive(Debug, Clone)]
enum Node {
    Atom(usize),
    Top,
    Bot,
    Neg(usize),
    And(usize, usize),
    Impl(usize, usize),
    Box_(usize),
    Dia(usize),
}

struct Ctx {
    nodes: Vec<Node>,
    atoms: Vec<String>,
    denom: u16,
    started: Instant,
    limits: Limits,
    guesses: u64,
    max_live: usize,
}

type Key = (Side, usize);
type Assign = BTreeMap<Key, u16>;

struct SubWorld {
    /// Atom entries fixed at this world: (side, atom index) -> grid value.
    atoms: BTreeMap<(Side, usize), u16>,
    children: Vec<(Sign, u16, SubWorld)>,
}

fn compile(f: &CoreFormula) -> (Vec<Node>, Vec<String>) {
    let formula = f.to_formula();
    let atoms = formula.atoms();
    let subs = f.subformulas();
    let index: std::collections::HashMap<&CoreFormula, usize> = subs
        .iter()
        .enumerate()
        .map(|(i, s)| (*s, i))
        .collect();
    let nodes = subs
        .iter()
        .map(|s| match s {
            CoreFormula::Atom(p) => Node::Atom(atoms.iter().position(|a| a == p).unwrap()),
            CoreFormula::Top => Node::Top,
            CoreFormula::Bot => Node::Bot,
            CoreFormula::Neg(a) => Node::Neg(index[a.as_ref()]),
            CoreFormula::And(a, b) => Node::And(index[a.as_ref()], index[b.as_ref()]),
            CoreFormula::Impl(a, b) => Node::Impl(index[a.as_ref()], index[b.as_ref()]),
            CoreFormula::Box_(a) => Node::Box_(index[a.as_ref()]),
            CoreFormula::Dia(a) => Node::Dia(index[a.as_ref()]),
        })
        .collect();
    (nodes, atoms)
}

fn residuum(d: u16, a: u16, b: u16) -> u16 {
    if a <= b {
        d
    } else {
        b
    }
}

fn coresiduum(a: u16, b: u16) -> u16 {
    if a <= b {
        0
    } else {
        a
    }
}

impl Ctx {
    fn tick(&mut self) -> Result<(), EngineError> {
        self.guesses += 1;
        if self.guesses.is_multiple_of(1024) && self.started.elapsed() > self.limits.time_budget {
            return Err(EngineError::LimitExceeded {
                limit: LimitKind::Time,
                phase: "labelled",
            });
        }
        if self.guesses as usize > self.limits.max_constraints {
            return Err(EngineError::LimitExceeded {
                limit: LimitKind::Constraints,
                phase: "labelled",
            });
        }
        Ok(())
    }

    /// Value of a binary connective on one side, as a function of the
    /// children's same-side values.
    fn binary_value(&self, node: &Node, side: Side, a: u16, b: u16) -> u16 {
        let d = self.denom;
        match (node, side) {
            (Node::And(..), Side::One) => a.min(b),
            (Node::And(..), Side::Two) => a.max(b),
            (Node::Impl(..), Side::One) => residuum(d, a, b),
            (Node::Impl(..), Side::Two) => coresiduum(b, a),
            _ => unreachable!(),
        }
    }

    fn assign(&self, assign: &mut Assign, key: Key, v: u16) -> bool {
        match assign.get(&key) {
            Some(&old) => old == v,
            None => {
                assign.insert(key, v);
                true
            }
        }
    }

    /// Decomposes propositional entries, then hands over to the modal stage.
    fn solve(
        &mut self,
        assign: Assign,
        depth: usize,
        live_below: usize,
    ) -> Result<Option<SubWorld>, EngineError> {
        self.tick()?;
        if depth > self.limits.max_states {
            return Err(EngineError::LimitExceeded {
                limit: LimitKind::States,
                phase: "labelled",
            });
        }
        // Constants are checked on sight; a mismatch kills the branch.
        for (&(side, fid), &v) in &assign {
            let expect = match (&self.nodes[fid], side) {
                (Node::Top, Side::One) | (Node::Bot, Side::Two) => Some(self.denom),
                (Node::Top, Side::Two) | (Node::Bot, Side::One) => Some(0),
                _ => None,
            };
            if expect.is_some_and(|e| e != v) {
                return Ok(None);
            }
        }
        // Highest-index unexpanded composite non-modal entry first; children
        // have smaller indices, so this is outermost-first.
        let next = assign
            .iter()
            .filter(|(&(_, fid), _)| {
                matches!(
                    self.nodes[fid],
                    Node::Neg(_) | Node::And(..) | Node::Impl(..)
                )
            })
            .map(|(&k, &v)| (k, v))
            .max_by_key(|&((side, fid), _)| (fid, side == Side::Two));

        let Some(((side, fid), v)) = next else {
            return self.modal_stage(assign, depth, live_below);
        };
        let node = self.nodes[fid].clone();
        // Replace the processed entry by entries on its children. Removing it
        // is sound: its value is a function of the children's values, which
        // the chosen combination pins exactly.
        let mut rest = assign.clone();
        rest.remove(&(side, fid));
        match node {
            Node::Neg(a) => {
                let mut merged = rest;
                if !self.assign(&mut merged, (side.other(), a), v) {
                    return Ok(None);
                }
                self.solve(merged, depth, live_below)
            }
            Node::And(l, r) | Node::Impl(l, r) => {
                // Children already pinned by earlier entries leave nothing
                // to enumerate.
                let la: Vec<u16> = match rest.get(&(side, l)) {
                    Some(&a) => vec![a],
                    None => (0..=self.denom).collect(),
                };
                let rb: Vec<u16> = match rest.get(&(side, r)) {
                    Some(&b) => vec![b],
                    None => (0..=self.denom).collect(),
                };
                for &a in &la {
                    for &b in &rb {
                        if self.binary_value(&node, side, a, b) != v {
                            continue;
                        }
                        self.tick()?;
                        let mut merged = rest.clone();
                        if !self.assign(&mut merged, (side, l), a)
                            || !self.assign(&mut merged, (side, r), b)
                        {
                            continue;
                        }
                        if let Some(found) = self.solve(merged, depth, live_below)? {
                            return Ok(Some(found));
                        }
                    }
                }
                Ok(None)
            }
            _ => unreachable!(),
        }
    }

    /// Witness enumeration for modal entries of one world. Children are
    /// solved one at a time; a finished child keeps only its model part.
    fn modal_stage(
        &mut self,
        assign: Assign,
        depth: usize,
        live_below: usize,
    ) -> Result<Option<SubWorld>, EngineError> {
        let live = live_below + assign.len();
        self.max_live = self.max_live.max(live);

        let d = self.denom;
        let modals: Vec<(Side, usize, usize, bool, u16)> = assign
            .iter()
            .filter_map(|(&(side, fid), &v)| match self.nodes[fid] {
                Node::Box_(b) => Some((side, fid, b, true, v)),
                Node::Dia(b) => Some((side, fid, b, false, v)),
                _ => None,
            })
            .collect();

        let mut children = Vec::new();
        for &(side, fid, body, is_box, v) in &modals {
            // Vacuous bounds need no witness: an empty minimum is 1, an empty
            // maximum is 0.
            let min_like = is_box == (side == Side::One);
            if (min_like && v == d) || (!min_like && v == 0) {
                continue;
            }
            let sign = side.sign();
            let mut found = None;
            'combos: for (r, a) in attainment_combos(d, min_like, v) {
                self.tick()?;
                let mut child = Assign::new();
                if !self.assign(&mut child, (side, body), a) {
                    continue;
                }
                // Universal constraints from every same-sign modal entry.
                let others: Vec<(Side, usize, bool, u16)> = modals
                    .iter()
                    .filter(|&&(s2, f2, _, b2, _)| {
                        s2.sign() == sign && !(s2 == side && f2 == fid && b2 == is_box)
                    })
                    .map(|&(s2, _, body2, b2, v2)| (s2, body2, b2, v2))
                    .collect();
                if let Some(sub) = self.expand_universals(child, &others, 0, r, depth, live)? {
                    found = Some((r, sub));
                    break 'combos;
                }
            }
            match found {
                Some((r, sub)) => children.push((sign, r, sub)),
                None => return Ok(None),
            }
        }

        let atoms = assign
            .iter()
            .filter_map(|(&(side, fid), &v)| match self.nodes[fid] {
                Node::Atom(i) => Some(((side, i), v)),
                _ => None,
            })
            .collect();
        Ok(Some(SubWorld { atoms, children }))
    }

    /// Guesses a value at the child for each remaining universal entry, then
    /// solves the child world.
    fn expand_universals(
        &mut self,
        child: Assign,
        others: &[(Side, usize, bool, u16)],
        i: usize,
        r: u16,
        depth: usize,
        live: usize,
    ) -> Result<Option<SubWorld>, EngineError> {
        let d = self.denom;
        let Some(&(side2, body2, is_box2, v2)) = others.get(i) else {
            return self.solve(child, depth + 1, live);
        };
        let min_like2 = is_box2 == (side2 == Side::One);
        let candidates: Vec<u16> = match child.get(&(side2, body2)) {
            Some(&a) => vec![a],
            None => (0..=d).collect(),
        };
        for a2 in candidates {
            let ok = if min_like2 {
                // Every successor term r ->G a2 must stay >= v2.
                residuum(d, r, a2) >= v2
            } else {
                // Every successor term min(r, a2) must stay <= v2.
                r.min(a2) <= v2
            };
            if !ok {
                continue;
            }
            self.tick()?;
            let mut merged = child.clone();
            if !self.assign(&mut merged, (side2, body2), a2) {
                continue;
            }
            if let Some(found) = self.expand_universals(merged, others, i + 1, r, depth, live)? {
                return Ok(Some(found));
            }
        }
        Ok(None)
    }
}

/// Witness `(relation, body)` pairs attaining value `v`, lexicographic.
/// `min_like` selects the residuum (inf) clauses; otherwise the meet (sup)
/// clauses.
fn attainment_combos(d: u16, min_like: bool, v: u16) -> Vec<(u16, u16)> {
    let mut out = Vec::new();
    if min_like {
        // r ->G a = v with v < d: a = v and r > v.
        for r in (v + 1)..=d {
            out.push((r, v));
        }
    } else {
        // min(r, a) = v with v > 0.
        for r in v..=d {
            for a in v..=d {
                if r.min(a) == v {
                    out.push((r, a));
                }
            }
        }
    }
    out
}

fn build_model(root: &SubWorld, atoms: &[String], denom: u16) -> Model {
    fn count(w: &SubWorld) -> usize {
        1 + w.children.iter().map(|(_, _, c)| count(c)).sum::<usize>()
    }
    let total = count(root);
    let labels: Vec<String> = (0..total).map(|i| format!("w{i}")).collect();
    let frame = Frame::new(labels).unwrap();
    let mut model = Model::new(frame);
    for atom in atoms {
        model.register_atom(atom);
    }

    fn fill(
        model: &mut Model,
        atoms: &[String],
        denom: u16,
        w: &SubWorld,
        index: usize,
        next: &mut usize,
    ) {
        for (&(side, atom), &v) in &w.atoms {
            if v > 0 {
                model.set_val(side, &atoms[atom], index, Value::grid(v as u64, denom as u64));
            }
        }
        for (sign, r, child) in &w.children {
            let ci = *next;
            *next += 1;
            if *r > 0 {
                model
                    .frame_mut()
                    .set_rel(*sign, index, ci, Value::grid(*r as u64, denom as u64));
            }
            fill(model, atoms, denom, child, ci, next);
        }
    }
    let mut next = 1;
    fill(&mut model, atoms, denom, root, 0, &mut next);
    model
}

/// Searches for a model with `v(f, w0) = (1, 0)` whose atom and relation
/// values all lie on the grid `{0, 1/denom, .., 1}`.
pub fn labelled_solve(
    f: &Formula,
    denom: u64,
    limits: &Limits,
) -> Result<LabelledOutcome, EngineError> {
    assert!(denom >= 1, "denominator must be positive");
    let core = f.desugar();
    let (nodes, atoms) = compile(&core);
    let root_id = nodes.len() - 1;
    let mut ctx = Ctx {
        nodes,
        atoms,
        denom: denom as u16,
        started: Instant::now(),
        limits: *limits,
        guesses: 0,
        max_live: 0,
    };
    let mut seed = Assign::new();
    seed.insert((Side::One, root_id), ctx.denom);
    seed.insert((Side::Two, root_id), 0);
    let solved = ctx.solve(seed, 0, 0)?;
    let stats = LabelledStats {
        max_live_entries: ctx.max_live,
        guesses: ctx.guesses,
    };
    Ok(match solved {
        Some(root) => LabelledOutcome::SatInGrid {
            model: build_model(&root, &ctx.atoms, ctx.denom),
            stats,
        },
        None => LabelledOutcome::NoModelInGrid { stats },
    })
}

//! Formula-to-formula reductions and the classical-K reference machinery.
//!
//! `sat_falsif_reduce` builds the satisfiability/falsifiability transforms
//! `~~(f -< 0)` and `~~(1 -< f)`. `nabla_transform` prefixes every subformula
//! of a classical-syntax formula with the double Gödel negation;
//! `triangle_transform` dualizes it (swapping meets with joins and boxes with
//! diamonds, turning implications into reversed co-implications, and putting
//! Delta on atoms). A small classical Kripke evaluator and bounded
//! countermodel search drive the cross-checks.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{Frame, Model, ModelError, Side, Sign};
use crate::syntax::Formula;
use crate::value::Value;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ReductionError {
    #[error("connective not in the classical reduction language: {0}")]
    IllegalConnective(String),
    #[error("unknown world `{0}`")]
    UnknownWorld(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReduceMode {
    /// `f` is satisfiable iff the transform is falsifiable.
    SatToFalsif,
    /// `f` is falsifiable iff the transform is satisfiable.
    FalsifToSat,
}

/// The footnote transforms: `~~(f -< 0)` and `~~(1 -< f)`.
pub fn sat_falsif_reduce(f: &Formula, mode: ReduceMode) -> Formula {
    match mode {
        ReduceMode::SatToFalsif => {
            Formula::gneg(Formula::gneg(Formula::coimpl(f.clone(), Formula::Bot)))
        }
        ReduceMode::FalsifToSat => {
            Formula::gneg(Formula::gneg(Formula::coimpl(Formula::Top, f.clone())))
        }
    }
}

/// Checks the precondition for the classical transforms: only
/// `0, and, or, ->, [], <>` and atoms may occur.
fn check_classical(f: &Formula) -> Result<(), ReductionError> {
    match f {
        Formula::Atom(_) | Formula::Bot => Ok(()),
        Formula::And(l, r) | Formula::Or(l, r) | Formula::Impl(l, r) => {
            check_classical(l)?;
            check_classical(r)
        }
        Formula::Box_(a) | Formula::Dia(a) => check_classical(a),
        other => Err(ReductionError::IllegalConnective(format!("{other}"))),
    }
}

/// Wraps every subformula occurrence with `~~`, the root included.
pub fn nabla_transform(f: &Formula) -> Result<Formula, ReductionError> {
    check_classical(f)?;
    fn go(f: &Formula) -> Formula {
        let inner = match f {
            Formula::Atom(p) => Formula::atom(p),
            Formula::Bot => Formula::Bot,
            Formula::And(l, r) => Formula::and(go(l), go(r)),
            Formula::Or(l, r) => Formula::or(go(l), go(r)),
            Formula::Impl(l, r) => Formula::impl_(go(l), go(r)),
            Formula::Box_(a) => Formula::box_(go(a)),
            Formula::Dia(a) => Formula::dia(go(a)),
            _ => unreachable!("checked classical"),
        };
        Formula::gneg(Formula::gneg(inner))
    }
    Ok(go(f))
}

/// The inductive dualization: `p -> ^p`, `and <-> or` swapped, implication to
/// reversed co-implication, `[] <-> <>` swapped. Falsum maps to the constant
/// whose falsity support is 0, i.e. `1`.
pub fn triangle_transform(f: &Formula) -> Result<Formula, ReductionError> {
    check_classical(f)?;
    fn go(f: &Formula) -> Formula {
        match f {
            Formula::Atom(p) => Formula::delta(Formula::atom(p)),
            Formula::Bot => Formula::Top,
            Formula::And(l, r) => Formula::or(go(l), go(r)),
            Formula::Or(l, r) => Formula::and(go(l), go(r)),
            Formula::Impl(l, r) => Formula::coimpl(go(r), go(l)),
            Formula::Box_(a) => Formula::dia(go(a)),
            Formula::Dia(a) => Formula::box_(go(a)),
            _ => unreachable!("checked classical"),
        }
    }
    Ok(go(f))
}

/// A crisp single-relation classical Kripke model.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassicalModel {
    worlds: Vec<String>,
    index: BTreeMap<String, usize>,
    rel: Vec<(usize, usize)>,
    val: BTreeMap<(String, usize), bool>,
}

impl ClassicalModel {
    pub fn new(worlds: Vec<String>) -> Result<Self, ModelError> {
        let mut index = BTreeMap::new();
        for (i, w) in worlds.iter().enumerate() {
            if index.insert(w.clone(), i).is_some() {
                return Err(ModelError::DuplicateWorld(w.clone()));
            }
        }
        Ok(ClassicalModel {
            worlds,
            index,
            rel: Vec::new(),
            val: BTreeMap::new(),
        })
    }

    pub fn worlds(&self) -> &[String] {
        &self.worlds
    }

    pub fn add_edge(&mut self, from: usize, to: usize) {
        if !self.rel.contains(&(from, to)) {
            self.rel.push((from, to));
            self.rel.sort_unstable();
        }
    }

    pub fn set_true(&mut self, atom: &str, world: usize) {
        self.val.insert((atom.to_string(), world), true);
    }

    pub fn holds(&self, atom: &str, world: usize) -> bool {
        self.val
            .get(&(atom.to_string(), world))
            .copied()
            .unwrap_or(false)
    }

    pub fn successors(&self, world: usize) -> impl Iterator<Item = usize> + '_ {
        self.rel
            .iter()
            .filter(move |&&(f, _)| f == world)
            .map(|&(_, t)| t)
    }

    pub fn to_doc(&self) -> ClassicalModelDoc {
        let mut val: BTreeMap<String, BTreeMap<String, String>> = BTreeMap::new();
        for ((atom, w), &b) in &self.val {
            if b {
                val.entry(atom.clone())
                    .or_default()
                    .insert(self.worlds[*w].clone(), "1".to_string());
            }
        }
        ClassicalModelDoc {
            worlds: self.worlds.clone(),
            rel: self
                .rel
                .iter()
                .map(|&(f, t)| (self.worlds[f].clone(), self.worlds[t].clone()))
                .collect(),
            val,
        }
    }

    pub fn from_doc(doc: &ClassicalModelDoc) -> Result<Self, ModelError> {
        let mut m = ClassicalModel::new(doc.worlds.clone())?;
        for (f, t) in &doc.rel {
            let f = *m
                .index
                .get(f)
                .ok_or_else(|| ModelError::UnknownWorld(f.clone()))?;
            let t = *m
                .index
                .get(t)
                .ok_or_else(|| ModelError::UnknownWorld(t.clone()))?;
            m.add_edge(f, t);
        }
        for (atom, per_world) in &doc.val {
            for (w, v) in per_world {
                let wi = *m
                    .index
                    .get(w)
                    .ok_or_else(|| ModelError::UnknownWorld(w.clone()))?;
                match v.as_str() {
                    "1" => m.set_true(atom, wi),
                    "0" => {}
                    other => {
                        return Err(ModelError::Document(format!(
                            "classical values must be \"0\" or \"1\", got {other}"
                        )))
                    }
                }
            }
        }
        Ok(m)
    }
}

/// Serialized classical model: like the fuzzy document but with one `rel`
/// field and boolean values.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassicalModelDoc {
    pub worlds: Vec<String>,
    #[serde(default)]
    pub rel: Vec<(String, String)>,
    #[serde(default)]
    pub val: BTreeMap<String, BTreeMap<String, String>>,
}

/// Textbook classical Kripke satisfaction; `0` is falsum.
pub fn k_eval(m: &ClassicalModel, world: &str, f: &Formula) -> Result<bool, ReductionError> {
    check_classical(f)?;
    let w = *m
        .index
        .get(world)
        .ok_or_else(|| ReductionError::UnknownWorld(world.to_string()))?;
    Ok(k_eval_at(m, w, f))
}

fn k_eval_at(m: &ClassicalModel, w: usize, f: &Formula) -> bool {
    match f {
        Formula::Atom(p) => m.holds(p, w),
        Formula::Bot => false,
        Formula::And(l, r) => k_eval_at(m, w, l) && k_eval_at(m, w, r),
        Formula::Or(l, r) => k_eval_at(m, w, l) || k_eval_at(m, w, r),
        Formula::Impl(l, r) => !k_eval_at(m, w, l) || k_eval_at(m, w, r),
        Formula::Box_(a) => m.successors(w).all(|u| k_eval_at(m, u, a)),
        Formula::Dia(a) => m.successors(w).any(|u| k_eval_at(m, u, a)),
        _ => unreachable!("checked classical"),
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum KOutcome {
    /// No countermodel with up to the requested number of worlds.
    KValidWithin,
    KCounter { model: ClassicalModel, world: String },
}

/// Exhaustive classical countermodel search over models with up to
/// `max_worlds` worlds on the formula's atoms.
pub fn k_countermodel_search(f: &Formula, max_worlds: usize) -> Result<KOutcome, ReductionError> {
    check_classical(f)?;
    let atoms = f.atoms();
    for n in 1..=max_worlds {
        let edge_slots = n * n;
        let val_slots = atoms.len() * n;
        assert!(edge_slots + val_slots < 48, "search space too large");
        let total: u64 = 1u64 << (edge_slots + val_slots);
        for mask in 0..total {
            let mut m = ClassicalModel::new((0..n).map(|i| format!("w{i}")).collect()).unwrap();
            let mut bit = 0;
            for from in 0..n {
                for to in 0..n {
                    if mask >> bit & 1 == 1 {
                        m.add_edge(from, to);
                    }
                    bit += 1;
                }
            }
            for atom in &atoms {
                for w in 0..n {
                    if mask >> bit & 1 == 1 {
                        m.set_true(atom, w);
                    }
                    bit += 1;
                }
            }
            for w in 0..n {
                if !k_eval_at(&m, w, f) {
                    let world = m.worlds[w].clone();
                    return Ok(KOutcome::KCounter { model: m, world });
                }
            }
        }
    }
    Ok(KOutcome::KValidWithin)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EmbedTarget {
    /// The `R+`/`v1` side drives the `~~`-transform direction.
    PositiveSide,
    /// The `R-`/`v2` side drives the Delta-transform direction.
    NegativeSide,
}

/// Embeds a classical model as a crisp mono-relational fuzzy model: both
/// relations copy `rel`, both valuations copy `val` as 0/1. The target only
/// records which side of the embedding a caller intends to read; the carrier
/// is the same either way.
pub fn embed_classical(m: &ClassicalModel, _target: EmbedTarget) -> Model {
    let frame = Frame::new(m.worlds.clone()).expect("labels already distinct");
    let mut out = Model::new(frame);
    for &(f, t) in &m.rel {
        out.frame_mut().set_rel(Sign::Plus, f, t, Value::one());
        out.frame_mut().set_rel(Sign::Minus, f, t, Value::one());
    }
    for ((atom, w), &b) in &m.val {
        if b {
            out.set_val(Side::One, atom, *w, Value::one());
            out.set_val(Side::Two, atom, *w, Value::one());
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::eval;
    use crate::parse::parse;

    #[test]
    fn reduce_transforms_print_as_expected() {
        let p = parse("p").unwrap();
        assert_eq!(
            sat_falsif_reduce(&p, ReduceMode::SatToFalsif).to_string(),
            "~~(p -< 0)"
        );
        assert_eq!(
            sat_falsif_reduce(&p, ReduceMode::FalsifToSat).to_string(),
            "~~(1 -< p)"
        );
    }

    #[test]
    fn nabla_examples() {
        assert_eq!(nabla_transform(&parse("p").unwrap()).unwrap().to_string(), "~~p");
        assert_eq!(
            nabla_transform(&parse("[]p").unwrap()).unwrap().to_string(),
            "~~[]~~p"
        );
        assert!(nabla_transform(&parse("!p").unwrap()).is_err());
        assert!(nabla_transform(&parse("1").unwrap()).is_err());
    }

    #[test]
    fn triangle_examples() {
        assert_eq!(
            triangle_transform(&parse("p -> q").unwrap()).unwrap().to_string(),
            "^q -< ^p"
        );
        assert_eq!(triangle_transform(&parse("[]p").unwrap()).unwrap().to_string(), "<>^p");
        assert_eq!(
            triangle_transform(&parse("p & q").unwrap()).unwrap().to_string(),
            "^p | ^q"
        );
    }

    #[test]
    fn k_eval_examples() {
        let lone = ClassicalModel::new(vec!["w".into()]).unwrap();
        assert!(k_eval(&lone, "w", &parse("[]0").unwrap()).unwrap());
        assert!(!k_eval(&lone, "w", &parse("<>(p | (p -> 0))").unwrap()).unwrap());

        let mut two = ClassicalModel::new(vec!["w".into(), "v".into()]).unwrap();
        two.add_edge(0, 1);
        two.set_true("p", 1);
        assert!(k_eval(&two, "w", &parse("<>p").unwrap()).unwrap());
    }

    #[test]
    fn k_search_examples() {
        assert_eq!(
            k_countermodel_search(&parse("p -> p").unwrap(), 2).unwrap(),
            KOutcome::KValidWithin
        );
        assert!(matches!(
            k_countermodel_search(&parse("[]p -> p").unwrap(), 2).unwrap(),
            KOutcome::KCounter { .. }
        ));
        assert_eq!(
            k_countermodel_search(&parse("[](p & q) -> []p").unwrap(), 2).unwrap(),
            KOutcome::KValidWithin
        );
    }

    #[test]
    fn embedding_preserves_truth_through_both_transforms() {
        // k_eval(m, w, f) iff v1(nabla f) = 1, and iff v2(1 -< triangle f) = 0.
        let mut m = ClassicalModel::new(vec!["a".into(), "b".into()]).unwrap();
        m.add_edge(0, 0);
        m.add_edge(0, 1);
        m.set_true("p", 0);
        m.set_true("q", 1);
        let fuzzy = embed_classical(&m, EmbedTarget::PositiveSide);
        for text in ["p", "p -> q", "[]p", "<>q", "[](p | q)", "p -> 0", "<>(p & q)"] {
            let f = parse(text).unwrap();
            let nab = nabla_transform(&f).unwrap();
            let tri = Formula::coimpl(Formula::Top, triangle_transform(&f).unwrap());
            for w in ["a", "b"] {
                let classical = k_eval(&m, w, &f).unwrap();
                let v_nab = eval(&fuzzy, w, &nab).unwrap();
                assert_eq!(v_nab.pos.is_one(), classical, "{text} at {w}");
                let v_tri = eval(&fuzzy, w, &tri).unwrap();
                assert_eq!(v_tri.neg.is_zero(), classical, "{text} at {w}");
            }
        }
    }

    #[test]
    fn nabla_of_a_k_valid_formula_is_valid() {
        use crate::tableau::{prove_valid, Limits, ProveOutcome};
        let f = parse("p -> p").unwrap();
        assert_eq!(
            k_countermodel_search(&f, 2).unwrap(),
            KOutcome::KValidWithin
        );
        let nab = nabla_transform(&f).unwrap();
        assert!(matches!(
            prove_valid(&nab, &Limits::default()).unwrap(),
            ProveOutcome::Valid
        ));
    }

    #[test]
    fn singleton_reflexive_embedding() {
        let mut m = ClassicalModel::new(vec!["w".into()]).unwrap();
        m.add_edge(0, 0);
        m.set_true("p", 0);
        let fuzzy = embed_classical(&m, EmbedTarget::NegativeSide);
        assert_eq!(fuzzy.rel(Sign::Plus, 0, 0), Value::one());
        assert_eq!(fuzzy.rel(Sign::Minus, 0, 0), Value::one());
        assert_eq!(fuzzy.val(Side::One, "p", 0), Value::one());
        assert_eq!(fuzzy.val(Side::Two, "p", 0), Value::one());
    }

    #[test]
    fn classical_document_round_trip() {
        let mut m = ClassicalModel::new(vec!["w0".into(), "w1".into()]).unwrap();
        m.add_edge(0, 1);
        m.set_true("p", 1);
        let doc = m.to_doc();
        let json = serde_json::to_string(&doc).unwrap();
        let doc2: ClassicalModelDoc = serde_json::from_str(&json).unwrap();
        assert_eq!(doc, doc2);
        assert_eq!(ClassicalModel::from_doc(&doc2).unwrap(), m);
    }
}

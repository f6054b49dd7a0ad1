//! Explicit fuzzy bi-relational Kripke models and their on-disk document form.
//!
//! A model stores two fuzzy accessibility maps `R+`/`R-` and two valuations
//! `v1`/`v2`. Absent entries mean 0, so models are sparse. The document form
//! is JSON with `worlds`, `rplus`/`rminus` as `[from, to, value]` triples and
//! `v1`/`v2` as atom -> world -> value maps; values are `"n"` or `"n/d"` in
//! lowest terms. Round-tripping a canonically sorted document is bit-exact.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::value::Value;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("unknown world `{0}`")]
    UnknownWorld(String),
    #[error("duplicate world label `{0}`")]
    DuplicateWorld(String),
    #[error("invalid value: {0}")]
    Value(#[from] crate::value::ValueError),
    #[error("malformed document: {0}")]
    Document(String),
}

/// Relation sign selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn symbol(self) -> char {
        match self {
            Sign::Plus => '+',
            Sign::Minus => '-',
        }
    }
}

/// A finite bi-relational frame: worlds plus the two fuzzy relations.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Frame {
    worlds: Vec<String>,
    index: BTreeMap<String, usize>,
    rplus: BTreeMap<(usize, usize), Value>,
    rminus: BTreeMap<(usize, usize), Value>,
}

impl Frame {
    pub fn new(worlds: Vec<String>) -> Result<Self, ModelError> {
        let mut index = BTreeMap::new();
        for (i, w) in worlds.iter().enumerate() {
            if index.insert(w.clone(), i).is_some() {
                return Err(ModelError::DuplicateWorld(w.clone()));
            }
        }
        Ok(Frame {
            worlds,
            index,
            rplus: BTreeMap::new(),
            rminus: BTreeMap::new(),
        })
    }

    pub fn worlds(&self) -> &[String] {
        &self.worlds
    }

    pub fn world_count(&self) -> usize {
        self.worlds.len()
    }

    pub fn world_index(&self, label: &str) -> Option<usize> {
        self.index.get(label).copied()
    }

    pub fn require_world(&self, label: &str) -> Result<usize, ModelError> {
        self.world_index(label)
            .ok_or_else(|| ModelError::UnknownWorld(label.to_string()))
    }

    fn relation(&self, sign: Sign) -> &BTreeMap<(usize, usize), Value> {
        match sign {
            Sign::Plus => &self.rplus,
            Sign::Minus => &self.rminus,
        }
    }

    fn relation_mut(&mut self, sign: Sign) -> &mut BTreeMap<(usize, usize), Value> {
        match sign {
            Sign::Plus => &mut self.rplus,
            Sign::Minus => &mut self.rminus,
        }
    }

    /// Relation value, 0 when absent.
    pub fn rel(&self, sign: Sign, from: usize, to: usize) -> Value {
        self.relation(sign)
            .get(&(from, to))
            .cloned()
            .unwrap_or_else(Value::zero)
    }

    /// Stores a relation value; zero entries are dropped to keep sparsity.
    pub fn set_rel(&mut self, sign: Sign, from: usize, to: usize, v: Value) {
        assert!(from < self.worlds.len() && to < self.worlds.len());
        if v.is_zero() {
            self.relation_mut(sign).remove(&(from, to));
        } else {
            self.relation_mut(sign).insert((from, to), v);
        }
    }

    /// Stored (nonzero) edges of one relation in `(from, to)` order.
    pub fn edges(&self, sign: Sign) -> impl Iterator<Item = (usize, usize, &Value)> {
        self.relation(sign).iter().map(|(&(f, t), v)| (f, t, v))
    }

    /// Every stored relation value is 0 or 1.
    pub fn is_crisp(&self) -> bool {
        self.rplus.values().chain(self.rminus.values()).all(Value::is_crisp)
    }

    /// `R+` and `R-` agree pointwise.
    pub fn is_mono_relational(&self) -> bool {
        self.rplus == self.rminus
    }

    pub fn to_doc(&self) -> FrameDoc {
        FrameDoc {
            worlds: self.worlds.clone(),
            rplus: edges_to_doc(self, Sign::Plus),
            rminus: edges_to_doc(self, Sign::Minus),
        }
    }

    pub fn from_doc(doc: &FrameDoc) -> Result<Self, ModelError> {
        let mut frame = Frame::new(doc.worlds.clone())?;
        load_edges(&mut frame, Sign::Plus, &doc.rplus)?;
        load_edges(&mut frame, Sign::Minus, &doc.rminus)?;
        Ok(frame)
    }
}

fn edges_to_doc(frame: &Frame, sign: Sign) -> Vec<(String, String, Value)> {
    frame
        .edges(sign)
        .map(|(f, t, v)| (frame.worlds[f].clone(), frame.worlds[t].clone(), v.clone()))
        .collect()
}

fn load_edges(
    frame: &mut Frame,
    sign: Sign,
    edges: &[(String, String, Value)],
) -> Result<(), ModelError> {
    for (from, to, v) in edges {
        let f = frame.require_world(from)?;
        let t = frame.require_world(to)?;
        frame.set_rel(sign, f, t, v.clone());
    }
    Ok(())
}

/// A model: a frame plus the two valuations. The atom universe is tracked
/// explicitly so that an atom whose stored values are all zero (absent
/// entries mean 0) is still part of the model, which the value-flipping
/// constructions rely on.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Model {
    frame: Frame,
    v1: BTreeMap<(String, usize), Value>,
    v2: BTreeMap<(String, usize), Value>,
    atom_universe: std::collections::BTreeSet<String>,
}

/// Valuation side selector: support of truth (1) or of falsity (2).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Side {
    One,
    Two,
}

impl Side {
    pub fn other(self) -> Side {
        match self {
            Side::One => Side::Two,
            Side::Two => Side::One,
        }
    }

    pub fn number(self) -> u8 {
        match self {
            Side::One => 1,
            Side::Two => 2,
        }
    }

    /// The relation driving this side's modal clauses.
    pub fn sign(self) -> Sign {
        match self {
            Side::One => Sign::Plus,
            Side::Two => Sign::Minus,
        }
    }
}

impl Model {
    pub fn new(frame: Frame) -> Self {
        Model {
            frame,
            v1: BTreeMap::new(),
            v2: BTreeMap::new(),
            atom_universe: std::collections::BTreeSet::new(),
        }
    }

    /// Adds an atom to the universe without storing any value.
    pub fn register_atom(&mut self, atom: &str) {
        self.atom_universe.insert(atom.to_string());
    }

    pub fn frame(&self) -> &Frame {
        &self.frame
    }

    pub fn frame_mut(&mut self) -> &mut Frame {
        &mut self.frame
    }

    pub fn worlds(&self) -> &[String] {
        self.frame.worlds()
    }

    pub fn world_index(&self, label: &str) -> Option<usize> {
        self.frame.world_index(label)
    }

    pub fn rel(&self, sign: Sign, from: usize, to: usize) -> Value {
        self.frame.rel(sign, from, to)
    }

    fn valuation(&self, side: Side) -> &BTreeMap<(String, usize), Value> {
        match side {
            Side::One => &self.v1,
            Side::Two => &self.v2,
        }
    }

    fn valuation_mut(&mut self, side: Side) -> &mut BTreeMap<(String, usize), Value> {
        match side {
            Side::One => &mut self.v1,
            Side::Two => &mut self.v2,
        }
    }

    /// Atom value at a world, 0 when absent.
    pub fn val(&self, side: Side, atom: &str, world: usize) -> Value {
        self.valuation(side)
            .get(&(atom.to_string(), world))
            .cloned()
            .unwrap_or_else(Value::zero)
    }

    pub fn set_val(&mut self, side: Side, atom: &str, world: usize, v: Value) {
        assert!(world < self.frame.world_count());
        self.atom_universe.insert(atom.to_string());
        if v.is_zero() {
            self.valuation_mut(side).remove(&(atom.to_string(), world));
        } else {
            self.valuation_mut(side).insert((atom.to_string(), world), v);
        }
    }

    /// The atom universe, sorted.
    pub fn atoms(&self) -> Vec<String> {
        self.atom_universe.iter().cloned().collect()
    }

    pub fn is_crisp(&self) -> bool {
        self.frame.is_crisp()
    }

    pub fn is_mono_relational(&self) -> bool {
        self.frame.is_mono_relational()
    }

    pub fn to_doc(&self) -> ModelDoc {
        ModelDoc {
            worlds: self.frame.worlds().to_vec(),
            rplus: edges_to_doc(&self.frame, Sign::Plus),
            rminus: edges_to_doc(&self.frame, Sign::Minus),
            v1: valuation_to_doc(self, Side::One),
            v2: valuation_to_doc(self, Side::Two),
        }
    }

    pub fn from_doc(doc: &ModelDoc) -> Result<Self, ModelError> {
        let frame = Frame::from_doc(&FrameDoc {
            worlds: doc.worlds.clone(),
            rplus: doc.rplus.clone(),
            rminus: doc.rminus.clone(),
        })?;
        let mut model = Model::new(frame);
        for (side, map) in [(Side::One, &doc.v1), (Side::Two, &doc.v2)] {
            for (atom, per_world) in map {
                model.register_atom(atom);
                for (world, v) in per_world {
                    let w = model.frame.require_world(world)?;
                    model.set_val(side, atom, w, v.clone());
                }
            }
        }
        Ok(model)
    }
}

fn valuation_to_doc(model: &Model, side: Side) -> BTreeMap<String, BTreeMap<String, Value>> {
    let mut out: BTreeMap<String, BTreeMap<String, Value>> = BTreeMap::new();
    for atom in &model.atom_universe {
        out.insert(atom.clone(), BTreeMap::new());
    }
    for ((atom, world), v) in model.valuation(side) {
        out.entry(atom.clone())
            .or_default()
            .insert(model.frame.worlds()[*world].clone(), v.clone());
    }
    out
}

/// Serialized frame: the model document without valuations.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrameDoc {
    pub worlds: Vec<String>,
    #[serde(default)]
    pub rplus: Vec<(String, String, Value)>,
    #[serde(default)]
    pub rminus: Vec<(String, String, Value)>,
}

/// Serialized model.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelDoc {
    pub worlds: Vec<String>,
    #[serde(default)]
    pub rplus: Vec<(String, String, Value)>,
    #[serde(default)]
    pub rminus: Vec<(String, String, Value)>,
    #[serde(default)]
    pub v1: BTreeMap<String, BTreeMap<String, Value>>,
    #[serde(default)]
    pub v2: BTreeMap<String, BTreeMap<String, Value>>,
}

impl ModelDoc {
    pub fn from_json(text: &str) -> Result<Self, ModelError> {
        serde_json::from_str(text).map_err(|e| ModelError::Document(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("model document serializes")
    }
}

impl FrameDoc {
    pub fn from_json(text: &str) -> Result<Self, ModelError> {
        serde_json::from_str(text).map_err(|e| ModelError::Document(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("frame document serializes")
    }
}

/// Builder-style helper used heavily by tests and the frame constructions.
pub struct ModelBuilder {
    model: Model,
}

impl ModelBuilder {
    pub fn new(worlds: &[&str]) -> Self {
        let frame = Frame::new(worlds.iter().map(|s| s.to_string()).collect())
            .expect("distinct world labels");
        ModelBuilder {
            model: Model::new(frame),
        }
    }

    pub fn rel(mut self, sign: Sign, from: &str, to: &str, v: Value) -> Self {
        let f = self.model.frame.require_world(from).expect("known world");
        let t = self.model.frame.require_world(to).expect("known world");
        self.model.frame_mut().set_rel(sign, f, t, v);
        self
    }

    /// Sets both components of an atom at a world.
    pub fn atom(mut self, name: &str, world: &str, pos: Value, neg: Value) -> Self {
        let w = self.model.frame.require_world(world).expect("known world");
        self.model.set_val(Side::One, name, w, pos);
        self.model.set_val(Side::Two, name, w, neg);
        self
    }

    pub fn build(self) -> Model {
        self.model
    }
}

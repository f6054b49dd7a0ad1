//! The constraint-tableau calculus for KG2± over finitely branching frames.
//!
//! A branch is a set of order constraints between *structures*: labelled
//! formula values `w:i:f`, relational terms `wR+w'` / `wR-w'`, and the
//! constants 0 and 1. Constraints are normalized so the relation always reads
//! `lhs < rhs` or `lhs <= rhs`; rule premises written with `>=`/`>` are
//! matched against flipped constraints.
//!
//! A branch closes exactly when its constraint graph (with the implicit
//! edges `0 <= s`, `s <= 1`, `0 < 1`) has a cycle through a strict edge;
//! each of the textbook closure conditions (`X < X` in the transitive
//! closure, `0 >= 1`, `X > 1`, `X < 0`) is an instance of that test.
//!
//! Saturation fires rules by priority: non-branching propositional rules,
//! then branching propositional rules, then the modal rules that create
//! witness states, then the universal modal rules that run over relational
//! terms already on the branch. Witness rules allocate at most one fresh
//! world per modal structure `w:i:[]f` / `w:i:<>f` and re-use it for later
//! bounds on the same structure; the minimum/maximum in the modal clause is
//! attained at a single successor, so one witness serves every bound, and
//! this is what keeps world creation (and the extracted model, cf. the
//! finite-model-size tests) within the modal nesting of the input.

mod extract;

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::time::{Duration, Instant};

use thiserror::Error;

use crate::model::{Model, Side, Sign};
use crate::syntax::{CoreFormula, Formula};
use crate::value::Value;

pub type FormulaId = u32;
pub type StructId = u32;
pub type ConstraintId = u32;
pub type World = u32;

/// A tableau structure: a labelled formula value, a constant, or a
/// relational term.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Structure {
    FormulaAt {
        world: World,
        side: Side,
        formula: FormulaId,
    },
    Const(bool),
    Rel {
        sign: Sign,
        from: World,
        to: World,
    },
}

pub const CONST_ZERO: Structure = Structure::Const(false);
pub const CONST_ONE: Structure = Structure::Const(true);

/// A normalized constraint: `lhs < rhs` when `strict`, else `lhs <= rhs`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Constraint {
    pub lhs: StructId,
    pub strict: bool,
    pub rhs: StructId,
}

/// Starting configurations.
#[derive(Debug, Clone)]
pub enum Goal {
    /// Seek `v1(f, w0) < 1`.
    Falsify1(CoreFormula),
    /// Seek `v2(f, w0) > 0`.
    Falsify2(CoreFormula),
    /// Seek `v(f, w0) = (1, 0)`.
    Satisfy(CoreFormula),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RuleId {
    Neg1Le,
    Neg1Ge,
    Neg2Le,
    Neg2Ge,
    Impl1Le,
    Impl1Lt,
    Impl1Ge,
    Impl2Ge,
    Impl2Gt,
    Impl2Le,
    And1Ge,
    And1Le,
    And2Le,
    And2Ge,
    Box1Ge,
    Box1Le,
    Box1Lt,
    Dia1Ge,
    Dia1Le,
    Box2Ge,
    Box2Le,
    Dia2Ge,
    Dia2Le,
    Dia2Lt,
}

impl RuleId {
    pub fn name(self) -> &'static str {
        use RuleId::*;
        match self {
            Neg1Le => "neg1_le",
            Neg1Ge => "neg1_ge",
            Neg2Le => "neg2_le",
            Neg2Ge => "neg2_ge",
            Impl1Le => "impl1_le",
            Impl1Lt => "impl1_lt",
            Impl1Ge => "impl1_ge",
            Impl2Ge => "impl2_ge",
            Impl2Gt => "impl2_gt",
            Impl2Le => "impl2_le",
            And1Ge => "and1_ge",
            And1Le => "and1_le",
            And2Le => "and2_le",
            And2Ge => "and2_ge",
            Box1Ge => "box1_ge",
            Box1Le => "box1_le",
            Box1Lt => "box1_lt",
            Dia1Ge => "dia1_ge",
            Dia1Le => "dia1_le",
            Box2Ge => "box2_ge",
            Box2Le => "box2_le",
            Dia2Ge => "dia2_ge",
            Dia2Le => "dia2_le",
            Dia2Lt => "dia2_lt",
        }
    }

    /// Saturation priority: lower fires first.
    fn priority(self) -> u8 {
        use RuleId::*;
        match self {
            Neg1Le | Neg1Ge | Neg2Le | Neg2Ge | Impl1Lt | Impl2Gt | And1Ge | And2Le => 0,
            Impl1Le | Impl2Ge | Impl1Ge | Impl2Le | And1Le | And2Ge => 1,
            Box1Le | Box1Lt | Dia1Ge | Box2Ge | Dia2Le | Dia2Lt => 2,
            Box1Ge | Dia1Le | Box2Le | Dia2Ge => 3,
        }
    }

    /// Witness rules create at most one fresh world per modal structure.
    pub fn is_witness(self) -> bool {
        self.priority() == 2
    }
}

impl fmt::Display for RuleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Resource caps for one saturation run.
#[derive(Debug, Clone, Copy)]
pub struct Limits {
    pub max_states: usize,
    pub max_constraints: usize,
    pub time_budget: Duration,
}

impl Default for Limits {
    fn default() -> Self {
        Limits {
            max_states: 10_000,
            max_constraints: 200_000,
            time_budget: Duration::from_secs(60),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LimitKind {
    States,
    Constraints,
    Time,
}

impl fmt::Display for LimitKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            LimitKind::States => "states",
            LimitKind::Constraints => "constraints",
            LimitKind::Time => "time",
        })
    }
}

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("{limit} limit exceeded while saturating the {phase} tableau")]
    LimitExceeded { limit: LimitKind, phase: &'static str },
    #[error("internal self-check failure: {0}")]
    Internal(String),
}

/// Ranking statistics from one extraction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExtractStats {
    /// Atomic structures (atoms and relational terms) on the branch.
    pub atomic_structures: usize,
    /// Order-equivalence classes containing an atomic structure.
    pub class_count: usize,
    /// Classes that received a counted rank (not forced to 0 or 1).
    pub ranked_classes: usize,
    /// Denominator of the uniform rank grid.
    pub rank_denominator: u64,
    pub worlds: usize,
}

/// Branch status after saturation of one alternative tree.
#[derive(Debug)]
pub enum SaturateOutcome {
    Closed,
    CompleteOpen(Branch),
}

/// One branch of the tableau.
#[derive(Debug, Clone)]
pub struct Branch {
    constraints: Vec<ConstraintId>,
    present: HashSet<ConstraintId>,
    /// Relational structures occurring on the branch, in first-occurrence order.
    rels: Vec<StructId>,
    next_world: World,
    expanded: HashSet<(RuleId, ConstraintId, Option<StructId>)>,
    /// Modal structure -> the witness world created for it.
    witnesses: HashMap<StructId, World>,
    closed: bool,
}

impl Branch {
    pub fn constraint_count(&self) -> usize {
        self.constraints.len()
    }

    pub fn world_count(&self) -> usize {
        self.next_world as usize
    }

    pub fn is_closed_flag(&self) -> bool {
        self.closed
    }

    pub fn constraints(&self) -> &[ConstraintId] {
        &self.constraints
    }
}

// Conclusion templates; `Fresh` stands for the witness world to allocate.
#[derive(Debug, Clone, Copy)]
enum WorldRef {
    W(World),
    Fresh,
}

#[derive(Debug, Clone, Copy)]
enum STemplate {
    Existing(StructId),
    FormulaAt(WorldRef, Side, FormulaId),
    Rel(Sign, WorldRef, WorldRef),
    Const(bool),
}

#[derive(Debug, Clone, Copy)]
struct CTemplate {
    lhs: STemplate,
    strict: bool,
    rhs: STemplate,
}

/// A fireable rule instance.
#[derive(Debug, Clone)]
pub struct RuleInstance {
    pub rule: RuleId,
    pub trigger: ConstraintId,
    /// The relational trigger, for universal rules.
    pub rel: Option<StructId>,
    /// The structure the rule decomposes (the bounded formula value).
    pub subject: StructId,
    alternatives: Vec<Vec<CTemplate>>,
    needs_fresh: bool,
}

/// Rendered form of an instance, for inspection and tests.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RenderedRule {
    pub rule: String,
    pub trigger: String,
    pub alternatives: Vec<Vec<String>>,
}

/// The tableau engine for a single goal: interning tables plus the root branch.
pub struct Tableau {
    formulas: Vec<CoreFormula>,
    formula_ids: HashMap<CoreFormula, FormulaId>,
    structures: Vec<Structure>,
    structure_ids: HashMap<Structure, StructId>,
    constraint_data: Vec<Constraint>,
    constraint_ids: HashMap<Constraint, ConstraintId>,
    root: Branch,
}

/// Builds the starting branch for a goal.
pub fn init_tableau(goal: Goal) -> Tableau {
    Tableau::new(goal)
}

impl Tableau {
    pub fn new(goal: Goal) -> Tableau {
        let mut t = Tableau {
            formulas: Vec::new(),
            formula_ids: HashMap::new(),
            structures: Vec::new(),
            structure_ids: HashMap::new(),
            constraint_data: Vec::new(),
            constraint_ids: HashMap::new(),
            root: Branch {
                constraints: Vec::new(),
                present: HashSet::new(),
                rels: Vec::new(),
                next_world: 1,
                expanded: HashSet::new(),
                witnesses: HashMap::new(),
                closed: false,
            },
        };
        let formula = match &goal {
            Goal::Falsify1(f) | Goal::Falsify2(f) | Goal::Satisfy(f) => f.clone(),
        };
        // The constants are always graph nodes: the implicit bounds
        // 0 <= s <= 1 and 0 < 1 hold whether or not any constraint mentions
        // them, and the extraction ranking relies on paths through them.
        t.intern_structure(CONST_ZERO);
        t.intern_structure(CONST_ONE);
        // Intern the goal formula and all its subformulas up front so that
        // rule conclusions never need to create formula entries.
        for sub in formula.subformulas() {
            t.intern_formula(sub);
        }
        let fid = t.formula_ids[&formula];
        let at = |side| STemplate::FormulaAt(WorldRef::W(0), side, fid);
        let seeds: Vec<(STemplate, bool, STemplate)> = match &goal {
            Goal::Falsify1(_) => vec![(at(Side::One), true, STemplate::Const(true))],
            Goal::Falsify2(_) => vec![(STemplate::Const(false), true, at(Side::Two))],
            Goal::Satisfy(_) => vec![
                (STemplate::Const(true), false, at(Side::One)),
                (at(Side::Two), false, STemplate::Const(false)),
            ],
        };
        let mut root = std::mem::replace(&mut t.root, Branch::placeholder());
        for (lhs, strict, rhs) in seeds {
            let lhs = t.resolve(lhs, None, fid);
            let rhs = t.resolve(rhs, None, fid);
            t.add_constraint(&mut root, lhs, strict, rhs);
        }
        root.closed = t.has_strict_cycle(&root);
        t.root = root;
        t
    }

    pub fn root(&self) -> &Branch {
        &self.root
    }

    fn intern_formula(&mut self, f: &CoreFormula) -> FormulaId {
        if let Some(&id) = self.formula_ids.get(f) {
            return id;
        }
        let id = self.formulas.len() as FormulaId;
        self.formulas.push(f.clone());
        self.formula_ids.insert(f.clone(), id);
        id
    }

    fn formula_id(&self, f: &CoreFormula) -> FormulaId {
        self.formula_ids[f]
    }

    pub fn formula(&self, id: FormulaId) -> &CoreFormula {
        &self.formulas[id as usize]
    }

    fn intern_structure(&mut self, s: Structure) -> StructId {
        let s = normalize_structure(s, &self.formulas);
        if let Some(&id) = self.structure_ids.get(&s) {
            return id;
        }
        let id = self.structures.len() as StructId;
        self.structures.push(s);
        self.structure_ids.insert(s, id);
        id
    }

    fn lookup_structure(&self, s: Structure) -> Option<StructId> {
        let s = normalize_structure(s, &self.formulas);
        self.structure_ids.get(&s).copied()
    }

    pub fn structure(&self, id: StructId) -> Structure {
        self.structures[id as usize]
    }

    pub fn constraint(&self, id: ConstraintId) -> Constraint {
        self.constraint_data[id as usize]
    }

    fn resolve(&mut self, t: STemplate, fresh: Option<World>, _goal: FormulaId) -> StructId {
        let w = |r: WorldRef| match r {
            WorldRef::W(w) => w,
            WorldRef::Fresh => fresh.expect("fresh world allocated"),
        };
        let s = match t {
            STemplate::Existing(id) => return id,
            STemplate::FormulaAt(r, side, f) => Structure::FormulaAt {
                world: w(r),
                side,
                formula: f,
            },
            STemplate::Rel(sign, a, b) => Structure::Rel {
                sign,
                from: w(a),
                to: w(b),
            },
            STemplate::Const(c) => Structure::Const(c),
        };
        self.intern_structure(s)
    }

    fn lookup_resolved(&self, t: STemplate, fresh: Option<World>) -> Option<StructId> {
        let w = |r: WorldRef| match r {
            WorldRef::W(w) => Some(w),
            WorldRef::Fresh => fresh,
        };
        let s = match t {
            STemplate::Existing(id) => return Some(id),
            STemplate::FormulaAt(r, side, f) => Structure::FormulaAt {
                world: w(r)?,
                side,
                formula: f,
            },
            STemplate::Rel(sign, a, b) => Structure::Rel {
                sign,
                from: w(a)?,
                to: w(b)?,
            },
            STemplate::Const(c) => Structure::Const(c),
        };
        self.lookup_structure(s)
    }

    /// Adds a normalized constraint to a branch. Constraints between two
    /// constants that already hold are skipped; everything else is recorded.
    fn add_constraint(&mut self, b: &mut Branch, lhs: StructId, strict: bool, rhs: StructId) {
        if const_trivial(self.structure(lhs), strict, self.structure(rhs)) {
            return;
        }
        let data = Constraint { lhs, strict, rhs };
        let id = if let Some(&id) = self.constraint_ids.get(&data) {
            id
        } else {
            let id = self.constraint_data.len() as ConstraintId;
            self.constraint_data.push(data);
            self.constraint_ids.insert(data, id);
            id
        };
        if b.present.insert(id) {
            b.constraints.push(id);
            for s in [lhs, rhs] {
                if matches!(self.structure(s), Structure::Rel { .. }) && !b.rels.contains(&s) {
                    b.rels.push(s);
                }
            }
        }
    }

    // ----- closure -------------------------------------------------------

    /// Strict-cycle detection over the branch's constraint graph with the
    /// implicit `0 <= s <= 1` and `0 < 1` edges.
    pub fn is_closed(&self, b: &Branch) -> bool {
        self.has_strict_cycle(b)
    }

    fn graph_nodes(&self, b: &Branch) -> (Vec<StructId>, HashMap<StructId, usize>) {
        let mut nodes = Vec::new();
        let mut index = HashMap::new();
        let push = |s: StructId, nodes: &mut Vec<StructId>, index: &mut HashMap<StructId, usize>| {
            index.entry(s).or_insert_with(|| {
                nodes.push(s);
                nodes.len() - 1
            });
        };
        for &c0 in [CONST_ZERO, CONST_ONE].iter() {
            if let Some(id) = self.structure_ids.get(&c0) {
                push(*id, &mut nodes, &mut index);
            }
        }
        for &cid in &b.constraints {
            let c = self.constraint(cid);
            push(c.lhs, &mut nodes, &mut index);
            push(c.rhs, &mut nodes, &mut index);
        }
        (nodes, index)
    }

    /// Edges of the branch graph: branch constraints plus implicit bounds.
    /// Node indices refer to `graph_nodes` output.
    fn graph_edges(
        &self,
        b: &Branch,
        nodes: &[StructId],
        index: &HashMap<StructId, usize>,
    ) -> Vec<(usize, usize, bool)> {
        let mut edges = Vec::new();
        let zero = self
            .structure_ids
            .get(&CONST_ZERO)
            .and_then(|id| index.get(id))
            .copied();
        let one = self
            .structure_ids
            .get(&CONST_ONE)
            .and_then(|id| index.get(id))
            .copied();
        for &cid in &b.constraints {
            let c = self.constraint(cid);
            edges.push((index[&c.lhs], index[&c.rhs], c.strict));
        }
        if let (Some(z), Some(o)) = (zero, one) {
            edges.push((z, o, true));
        }
        for (i, &s) in nodes.iter().enumerate() {
            if matches!(self.structure(s), Structure::Const(_)) {
                continue;
            }
            if let Some(z) = zero {
                edges.push((z, i, false));
            }
            if let Some(o) = one {
                edges.push((i, o, false));
            }
        }
        edges
    }

    fn has_strict_cycle(&self, b: &Branch) -> bool {
        let (nodes, index) = self.graph_nodes(b);
        if nodes.is_empty() {
            return false;
        }
        let edges = self.graph_edges(b, &nodes, &index);
        let scc = extract::tarjan_scc(nodes.len(), &edges);
        edges
            .iter()
            .any(|&(a, b2, strict)| strict && scc[a] == scc[b2])
    }

    // ----- rule discovery -------------------------------------------------

    /// All rule instances currently fireable on `b`, in firing order.
    pub fn applicable_rules(&self, b: &Branch) -> Vec<RuleInstance> {
        let mut out = Vec::new();
        for priority in 0..=3u8 {
            self.collect_applicable(b, priority, &mut out, false);
        }
        out
    }

    /// First fireable instance in priority order, if any.
    fn first_applicable(&self, b: &Branch) -> Option<RuleInstance> {
        for priority in 0..=3u8 {
            let mut out = Vec::new();
            self.collect_applicable(b, priority, &mut out, true);
            if let Some(inst) = out.into_iter().next() {
                return Some(inst);
            }
        }
        None
    }

    fn collect_applicable(
        &self,
        b: &Branch,
        priority: u8,
        out: &mut Vec<RuleInstance>,
        stop_at_first: bool,
    ) {
        for &cid in &b.constraints {
            let c = self.constraint(cid);
            // Each constraint is inspected from both ends: `lhs` is bounded
            // above by `rhs`, and `rhs` is bounded below by `lhs`.
            for upper in [true, false] {
                let (subject, bound) = if upper { (c.lhs, c.rhs) } else { (c.rhs, c.lhs) };
                if self.bound_is_vacuous(upper, c.strict, bound) {
                    continue;
                }
                if self.filtered_by_constant_preference(b, upper, c.strict, subject, bound) {
                    continue;
                }
                for inst in self.match_rules(b, cid, upper, c.strict, subject, bound) {
                    if inst.rule.priority() != priority {
                        continue;
                    }
                    if b.expanded.contains(&(inst.rule, inst.trigger, inst.rel)) {
                        continue;
                    }
                    if self.instance_satisfied(b, &inst) {
                        continue;
                    }
                    out.push(inst);
                    if stop_at_first {
                        return;
                    }
                }
            }
        }
    }

    /// `X <= 1` and `0 <= X` premises are tautologies; no rule needs them.
    fn bound_is_vacuous(&self, upper: bool, strict: bool, bound: StructId) -> bool {
        if strict {
            return false;
        }
        match self.structure(bound) {
            Structure::Const(true) => upper,
            Structure::Const(false) => !upper,
            _ => false,
        }
    }

    /// When both `X < 1` and `X < S` (or `0 < X` and `S < X`) are on the
    /// branch, rules are applied only to the structural constraint.
    fn filtered_by_constant_preference(
        &self,
        b: &Branch,
        upper: bool,
        strict: bool,
        subject: StructId,
        bound: StructId,
    ) -> bool {
        if !strict || !matches!(self.structure(bound), Structure::Const(_)) {
            return false;
        }
        b.constraints.iter().any(|&other| {
            let o = self.constraint(other);
            if !o.strict {
                return false;
            }
            if upper {
                o.lhs == subject && !matches!(self.structure(o.rhs), Structure::Const(_))
            } else {
                o.rhs == subject && !matches!(self.structure(o.lhs), Structure::Const(_))
            }
        })
    }

    fn match_rules(
        &self,
        b: &Branch,
        trigger: ConstraintId,
        upper: bool,
        strict: bool,
        subject: StructId,
        bound: StructId,
    ) -> Vec<RuleInstance> {
        use CoreFormula as C;
        let Structure::FormulaAt { world, side, formula } = self.structure(subject) else {
            return Vec::new();
        };
        let bnd = STemplate::Existing(bound);
        let at = |w: WorldRef, side: Side, f: &C| STemplate::FormulaAt(w, side, self.formula_id(f));
        let here = WorldRef::W(world);
        // Orientation helpers: `le(x, y)` is x <= y or x < y matching the
        // trigger's strictness; `lt`/`wle` force strict / non-strict.
        let le = |x: STemplate, y: STemplate| CTemplate { lhs: x, strict, rhs: y };
        let lt = |x: STemplate, y: STemplate| CTemplate { lhs: x, strict: true, rhs: y };
        let wle = |x: STemplate, y: STemplate| CTemplate { lhs: x, strict: false, rhs: y };
        let one = STemplate::Const(true);
        let zero = STemplate::Const(false);

        let mk = |rule: RuleId, rel: Option<StructId>, alternatives: Vec<Vec<CTemplate>>, needs_fresh: bool| RuleInstance {
            rule,
            trigger,
            rel,
            subject,
            alternatives,
            needs_fresh,
        };

        match (self.formula(formula).clone(), side, upper) {
            (C::Neg(f), side, true) => {
                let rule = if side == Side::One { RuleId::Neg1Le } else { RuleId::Neg2Le };
                vec![mk(rule, None, vec![vec![le(at(here, side.other(), &f), bnd)]], false)]
            }
            (C::Neg(f), side, false) => {
                let rule = if side == Side::One { RuleId::Neg1Ge } else { RuleId::Neg2Ge };
                vec![mk(rule, None, vec![vec![le(bnd, at(here, side.other(), &f))]], false)]
            }
            (C::And(f, g), Side::One, false) => vec![mk(
                RuleId::And1Ge,
                None,
                vec![vec![le(bnd, at(here, Side::One, &f)), le(bnd, at(here, Side::One, &g))]],
                false,
            )],
            (C::And(f, g), Side::One, true) => vec![mk(
                RuleId::And1Le,
                None,
                vec![
                    vec![le(at(here, Side::One, &f), bnd)],
                    vec![le(at(here, Side::One, &g), bnd)],
                ],
                false,
            )],
            (C::And(f, g), Side::Two, true) => vec![mk(
                RuleId::And2Le,
                None,
                vec![vec![le(at(here, Side::Two, &f), bnd), le(at(here, Side::Two, &g), bnd)]],
                false,
            )],
            (C::And(f, g), Side::Two, false) => vec![mk(
                RuleId::And2Ge,
                None,
                vec![
                    vec![le(bnd, at(here, Side::Two, &f))],
                    vec![le(bnd, at(here, Side::Two, &g))],
                ],
                false,
            )],
            (C::Impl(f, g), Side::One, true) => {
                if strict {
                    vec![mk(
                        RuleId::Impl1Lt,
                        None,
                        vec![vec![
                            lt(at(here, Side::One, &g), bnd),
                            lt(at(here, Side::One, &g), at(here, Side::One, &f)),
                        ]],
                        false,
                    )]
                } else {
                    vec![mk(
                        RuleId::Impl1Le,
                        None,
                        vec![
                            vec![wle(one, bnd)],
                            vec![
                                lt(bnd, one),
                                wle(at(here, Side::One, &g), bnd),
                                lt(at(here, Side::One, &g), at(here, Side::One, &f)),
                            ],
                        ],
                        false,
                    )]
                }
            }
            (C::Impl(f, g), Side::One, false) => vec![mk(
                RuleId::Impl1Ge,
                None,
                vec![
                    vec![wle(at(here, Side::One, &f), at(here, Side::One, &g))],
                    vec![le(bnd, at(here, Side::One, &g))],
                ],
                false,
            )],
            (C::Impl(f, g), Side::Two, false) => {
                if strict {
                    vec![mk(
                        RuleId::Impl2Gt,
                        None,
                        vec![vec![
                            lt(bnd, at(here, Side::Two, &g)),
                            lt(at(here, Side::Two, &f), at(here, Side::Two, &g)),
                        ]],
                        false,
                    )]
                } else {
                    vec![mk(
                        RuleId::Impl2Ge,
                        None,
                        vec![
                            vec![wle(bnd, zero)],
                            vec![
                                lt(zero, bnd),
                                wle(bnd, at(here, Side::Two, &g)),
                                lt(at(here, Side::Two, &f), at(here, Side::Two, &g)),
                            ],
                        ],
                        false,
                    )]
                }
            }
            (C::Impl(f, g), Side::Two, true) => vec![mk(
                RuleId::Impl2Le,
                None,
                vec![
                    vec![wle(at(here, Side::Two, &g), at(here, Side::Two, &f))],
                    vec![le(at(here, Side::Two, &g), bnd)],
                ],
                false,
            )],
            // Modal rules. Side one runs over R+, side two over R-.
            (C::Box_(f), Side::One, false) => self.universal_instances(
                b,
                RuleId::Box1Ge,
                trigger,
                subject,
                Sign::Plus,
                world,
                |rel, to| {
                    vec![
                        vec![le(bnd, at(WorldRef::W(to), Side::One, &f))],
                        vec![wle(STemplate::Existing(rel), at(WorldRef::W(to), Side::One, &f))],
                    ]
                },
            ),
            (C::Box_(f), Side::One, true) => {
                let body = at(WorldRef::Fresh, Side::One, &f);
                let rel = STemplate::Rel(Sign::Plus, here, WorldRef::Fresh);
                if strict {
                    vec![mk(
                        RuleId::Box1Lt,
                        None,
                        vec![vec![lt(body, rel), lt(body, bnd)]],
                        true,
                    )]
                } else {
                    vec![mk(
                        RuleId::Box1Le,
                        None,
                        vec![
                            vec![wle(one, bnd)],
                            vec![lt(bnd, one), lt(body, rel), wle(body, bnd)],
                        ],
                        true,
                    )]
                }
            }
            (C::Dia(f), Side::One, false) => {
                let body = at(WorldRef::Fresh, Side::One, &f);
                let rel = STemplate::Rel(Sign::Plus, here, WorldRef::Fresh);
                vec![mk(
                    RuleId::Dia1Ge,
                    None,
                    vec![vec![le(bnd, rel), le(bnd, body)]],
                    true,
                )]
            }
            (C::Dia(f), Side::One, true) => self.universal_instances(
                b,
                RuleId::Dia1Le,
                trigger,
                subject,
                Sign::Plus,
                world,
                |rel, to| {
                    vec![
                        vec![le(at(WorldRef::W(to), Side::One, &f), bnd)],
                        vec![le(STemplate::Existing(rel), bnd)],
                    ]
                },
            ),
            (C::Box_(f), Side::Two, false) => {
                let body = at(WorldRef::Fresh, Side::Two, &f);
                let rel = STemplate::Rel(Sign::Minus, here, WorldRef::Fresh);
                vec![mk(
                    RuleId::Box2Ge,
                    None,
                    vec![vec![le(bnd, rel), le(bnd, body)]],
                    true,
                )]
            }
            (C::Box_(f), Side::Two, true) => self.universal_instances(
                b,
                RuleId::Box2Le,
                trigger,
                subject,
                Sign::Minus,
                world,
                |rel, to| {
                    vec![
                        vec![le(at(WorldRef::W(to), Side::Two, &f), bnd)],
                        vec![le(STemplate::Existing(rel), bnd)],
                    ]
                },
            ),
            (C::Dia(f), Side::Two, false) => self.universal_instances(
                b,
                RuleId::Dia2Ge,
                trigger,
                subject,
                Sign::Minus,
                world,
                |rel, to| {
                    vec![
                        vec![le(bnd, at(WorldRef::W(to), Side::Two, &f))],
                        vec![wle(STemplate::Existing(rel), at(WorldRef::W(to), Side::Two, &f))],
                    ]
                },
            ),
            (C::Dia(f), Side::Two, true) => {
                let body = at(WorldRef::Fresh, Side::Two, &f);
                let rel = STemplate::Rel(Sign::Minus, here, WorldRef::Fresh);
                if strict {
                    vec![mk(
                        RuleId::Dia2Lt,
                        None,
                        vec![vec![lt(body, rel), lt(body, bnd)]],
                        true,
                    )]
                } else {
                    vec![mk(
                        RuleId::Dia2Le,
                        None,
                        vec![
                            vec![wle(one, bnd)],
                            vec![lt(bnd, one), lt(body, rel), wle(body, bnd)],
                        ],
                        true,
                    )]
                }
            }
            _ => Vec::new(),
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn universal_instances(
        &self,
        b: &Branch,
        rule: RuleId,
        trigger: ConstraintId,
        subject: StructId,
        sign: Sign,
        world: World,
        alts: impl Fn(StructId, World) -> Vec<Vec<CTemplate>>,
    ) -> Vec<RuleInstance> {
        let mut out = Vec::new();
        for &rel in &b.rels {
            let Structure::Rel { sign: s, from, to } = self.structure(rel) else {
                continue;
            };
            if s != sign || from != world {
                continue;
            }
            out.push(RuleInstance {
                rule,
                trigger,
                rel: Some(rel),
                subject,
                alternatives: alts(rel, to),
                needs_fresh: false,
            });
        }
        out
    }

    /// True when some alternative's conclusions are all already on the branch
    /// (witness templates are checked against the registered witness world).
    fn instance_satisfied(&self, b: &Branch, inst: &RuleInstance) -> bool {
        let fresh = if inst.needs_fresh {
            match b.witnesses.get(&inst.subject) {
                Some(&w) => Some(w),
                None => return false,
            }
        } else {
            None
        };
        inst.alternatives.iter().any(|alt| {
            alt.iter().all(|c| {
                let (Some(lhs), Some(rhs)) = (
                    self.lookup_resolved(c.lhs, fresh),
                    self.lookup_resolved(c.rhs, fresh),
                ) else {
                    return false;
                };
                if const_trivial(self.structure(lhs), c.strict, self.structure(rhs)) {
                    return true;
                }
                self.constraint_ids
                    .get(&Constraint { lhs, strict: c.strict, rhs })
                    .is_some_and(|id| b.present.contains(id))
            })
        })
    }

    /// Fires an instance, producing one child branch per alternative,
    /// in the printed rule order.
    fn fire(&mut self, b: &Branch, inst: &RuleInstance) -> Vec<Branch> {
        let goal = 0;
        inst.alternatives
            .iter()
            .map(|alt| {
                let mut child = b.clone();
                let needs_fresh = alt.iter().any(|c| {
                    template_mentions_fresh(&c.lhs) || template_mentions_fresh(&c.rhs)
                });
                let fresh = if needs_fresh {
                    Some(*child.witnesses.entry(inst.subject).or_insert_with(|| {
                        let w = child.next_world;
                        child.next_world += 1;
                        w
                    }))
                } else {
                    None
                };
                for c in alt {
                    let lhs = self.resolve(c.lhs, fresh, goal);
                    let rhs = self.resolve(c.rhs, fresh, goal);
                    self.add_constraint(&mut child, lhs, c.strict, rhs);
                }
                child.expanded.insert((inst.rule, inst.trigger, inst.rel));
                child.closed = self.has_strict_cycle(&child);
                child
            })
            .collect()
    }

    /// Depth-first saturation. Returns the first complete open branch in
    /// exploration order, or `Closed` when every alternative closes.
    pub fn saturate(
        &mut self,
        limits: &Limits,
        phase: &'static str,
        mut trace: Option<&mut Vec<String>>,
    ) -> Result<SaturateOutcome, EngineError> {
        let started = Instant::now();
        let mut stack = vec![self.root.clone()];
        while let Some(branch) = stack.pop() {
            if started.elapsed() > limits.time_budget {
                return Err(EngineError::LimitExceeded { limit: LimitKind::Time, phase });
            }
            if branch.world_count() > limits.max_states {
                return Err(EngineError::LimitExceeded { limit: LimitKind::States, phase });
            }
            if branch.constraint_count() > limits.max_constraints {
                return Err(EngineError::LimitExceeded { limit: LimitKind::Constraints, phase });
            }
            if branch.closed {
                if let Some(t) = trace.as_deref_mut() {
                    t.push("closed".to_string());
                }
                continue;
            }
            let Some(inst) = self.first_applicable(&branch) else {
                if let Some(t) = trace.as_deref_mut() {
                    t.push("complete open".to_string());
                }
                return Ok(SaturateOutcome::CompleteOpen(branch));
            };
            let children = self.fire(&branch, &inst);
            if let Some(t) = trace.as_deref_mut() {
                let total = children.len();
                for i in 0..total {
                    t.push(format!(
                        "apply {} to {} alt {}/{}",
                        inst.rule.name(),
                        self.render_constraint_id(inst.trigger),
                        i + 1,
                        total,
                    ));
                }
            }
            for child in children.into_iter().rev() {
                stack.push(child);
            }
        }
        if let Some(t) = trace {
            t.push("all branches closed".to_string());
        }
        Ok(SaturateOutcome::Closed)
    }

    /// Builds a model realising a complete open branch; see `extract`.
    pub fn extract_model(&self, b: &Branch) -> Result<(Model, String), EngineError> {
        extract::extract_model(self, b).map(|(m, w, _)| (m, w))
    }

    /// Extraction together with ranking statistics.
    pub fn extract_model_with_stats(
        &self,
        b: &Branch,
    ) -> Result<(Model, String, ExtractStats), EngineError> {
        extract::extract_model(self, b)
    }

    /// Re-checks that a model realises every constraint of a branch.
    pub fn check_realisation(&self, b: &Branch, m: &Model) -> Result<(), EngineError> {
        extract::check_realisation(self, b, m)
    }

    // ----- rendering ------------------------------------------------------

    pub fn render_structure(&self, id: StructId) -> String {
        match self.structure(id) {
            Structure::FormulaAt { world, side, formula } => {
                format!("w{}:{}:{}", world, side.number(), self.formula(formula))
            }
            Structure::Const(false) => "0".to_string(),
            Structure::Const(true) => "1".to_string(),
            Structure::Rel { sign, from, to } => {
                format!("w{}R{}w{}", from, sign.symbol(), to)
            }
        }
    }

    pub fn render_constraint_id(&self, id: ConstraintId) -> String {
        let c = self.constraint(id);
        self.render_constraint(&c)
    }

    pub fn render_constraint(&self, c: &Constraint) -> String {
        format!(
            "{} {} {}",
            self.render_structure(c.lhs),
            if c.strict { "<" } else { "<=" },
            self.render_structure(c.rhs)
        )
    }

    pub fn render_branch(&self, b: &Branch) -> Vec<String> {
        b.constraints
            .iter()
            .map(|&c| self.render_constraint_id(c))
            .collect()
    }

    /// Rendered rule instances, for tests and debugging. Fresh worlds are
    /// shown with the label they would receive.
    pub fn rendered_rules(&self, b: &Branch) -> Vec<RenderedRule> {
        self.applicable_rules(b)
            .iter()
            .map(|inst| {
                let fresh = b
                    .witnesses
                    .get(&inst.subject)
                    .copied()
                    .unwrap_or(b.next_world);
                RenderedRule {
                    rule: inst.rule.name().to_string(),
                    trigger: self.render_constraint_id(inst.trigger),
                    alternatives: inst
                        .alternatives
                        .iter()
                        .map(|alt| {
                            alt.iter()
                                .map(|c| self.render_template(c, fresh))
                                .collect()
                        })
                        .collect(),
                }
            })
            .collect()
    }

    fn render_template(&self, c: &CTemplate, fresh: World) -> String {
        let rt = |t: &STemplate| -> String {
            let resolve_world = |r: WorldRef| match r {
                WorldRef::W(w) => w,
                WorldRef::Fresh => fresh,
            };
            match *t {
                STemplate::Existing(id) => self.render_structure(id),
                STemplate::Const(false) => "0".to_string(),
                STemplate::Const(true) => "1".to_string(),
                STemplate::FormulaAt(w, side, f) => {
                    // Render through normalization so constants show as 0/1.
                    let s = normalize_structure(
                        Structure::FormulaAt { world: resolve_world(w), side, formula: f },
                        &self.formulas,
                    );
                    match s {
                        Structure::Const(false) => "0".to_string(),
                        Structure::Const(true) => "1".to_string(),
                        Structure::FormulaAt { world, side, formula } => {
                            format!("w{}:{}:{}", world, side.number(), self.formula(formula))
                        }
                        _ => unreachable!(),
                    }
                }
                STemplate::Rel(sign, a, b) => {
                    format!("w{}R{}w{}", resolve_world(a), sign.symbol(), resolve_world(b))
                }
            }
        };
        format!("{} {} {}", rt(&c.lhs), if c.strict { "<" } else { "<=" }, rt(&c.rhs))
    }
}

impl Branch {
    fn placeholder() -> Branch {
        Branch {
            constraints: Vec::new(),
            present: HashSet::new(),
            rels: Vec::new(),
            next_world: 0,
            expanded: HashSet::new(),
            witnesses: HashMap::new(),
            closed: false,
        }
    }
}

fn template_mentions_fresh(t: &STemplate) -> bool {
    match t {
        STemplate::FormulaAt(w, _, _) => matches!(w, WorldRef::Fresh),
        STemplate::Rel(_, a, b) => {
            matches!(a, WorldRef::Fresh) || matches!(b, WorldRef::Fresh)
        }
        _ => false,
    }
}

/// `w:1:1 = 1`, `w:2:1 = 0`, `w:1:0 = 0`, `w:2:0 = 1`.
fn normalize_structure(s: Structure, formulas: &[CoreFormula]) -> Structure {
    if let Structure::FormulaAt { side, formula, .. } = s {
        match (formulas[formula as usize].clone(), side) {
            (CoreFormula::Top, Side::One) | (CoreFormula::Bot, Side::Two) => CONST_ONE,
            (CoreFormula::Top, Side::Two) | (CoreFormula::Bot, Side::One) => CONST_ZERO,
            _ => s,
        }
    } else {
        s
    }
}

/// Constraints between constants that already hold are never recorded.
fn const_trivial(lhs: Structure, strict: bool, rhs: Structure) -> bool {
    match (lhs, rhs) {
        (Structure::Const(a), Structure::Const(b)) => {
            if strict {
                !a & b
            } else {
                a <= b
            }
        }
        _ => false,
    }
}

// ----- top-level verdicts --------------------------------------------------

/// Verdict of the validity procedure.
#[derive(Debug)]
pub enum ProveOutcome {
    Valid,
    Invalid {
        model: Model,
        world: String,
        /// 1 when the countermodel gives `v1 < 1`, 2 when it gives `v2 > 0`.
        side: Side,
    },
}

/// Verdict of the satisfiability procedure.
#[derive(Debug)]
pub enum SatOutcome {
    Sat { model: Model, world: String },
    Unsat,
}

/// Runs the two falsification tableaux. Valid iff both close; otherwise the
/// first open branch yields an extracted, evaluator-verified countermodel.
pub fn prove_valid(f: &Formula, limits: &Limits) -> Result<ProveOutcome, EngineError> {
    prove_valid_traced(f, limits, None)
}

pub fn prove_valid_traced(
    f: &Formula,
    limits: &Limits,
    mut trace: Option<&mut Vec<String>>,
) -> Result<ProveOutcome, EngineError> {
    let core = f.desugar();
    for (goal, side, phase) in [
        (Goal::Falsify1(core.clone()), Side::One, "falsify-1"),
        (Goal::Falsify2(core.clone()), Side::Two, "falsify-2"),
    ] {
        if let Some(t) = trace.as_deref_mut() {
            t.push(format!("tableau {phase}"));
        }
        let mut tableau = Tableau::new(goal);
        match tableau.saturate(limits, phase, trace.as_deref_mut())? {
            SaturateOutcome::Closed => continue,
            SaturateOutcome::CompleteOpen(branch) => {
                let (model, world) = tableau.extract_model(&branch)?;
                let value = crate::eval::eval(&model, &world, f)
                    .map_err(|e| EngineError::Internal(e.to_string()))?;
                let verified = match side {
                    Side::One => !value.pos.is_one(),
                    Side::Two => !value.neg.is_zero(),
                };
                if !verified {
                    return Err(EngineError::Internal(format!(
                        "extracted countermodel does not falsify side {}: v({f}, {world}) = {value}",
                        side.number()
                    )));
                }
                return Ok(ProveOutcome::Invalid { model, world, side });
            }
        }
    }
    Ok(ProveOutcome::Valid)
}

/// Saturates the satisfaction seed `1 <= w0:1:f`, `w0:2:f <= 0`.
pub fn check_sat(f: &Formula, limits: &Limits) -> Result<SatOutcome, EngineError> {
    check_sat_traced(f, limits, None)
}

pub fn check_sat_traced(
    f: &Formula,
    limits: &Limits,
    trace: Option<&mut Vec<String>>,
) -> Result<SatOutcome, EngineError> {
    let mut tableau = Tableau::new(Goal::Satisfy(f.desugar()));
    match tableau.saturate(limits, "satisfy", trace)? {
        SaturateOutcome::Closed => Ok(SatOutcome::Unsat),
        SaturateOutcome::CompleteOpen(branch) => {
            let (model, world) = tableau.extract_model(&branch)?;
            let value = crate::eval::eval(&model, &world, f)
                .map_err(|e| EngineError::Internal(e.to_string()))?;
            if !value.is_designated() {
                return Err(EngineError::Internal(format!(
                    "extracted model does not satisfy: v({f}, {world}) = {value}"
                )));
            }
            Ok(SatOutcome::Sat { model, world })
        }
    }
}

/// Exposes extraction-time value grids for the engine-agreement checks:
/// the least common denominator of all values stored in a model.
pub fn model_denominator(model: &Model) -> num_bigint::BigInt {
    use num_bigint::BigInt;
    use num_integer::Integer;
    let mut denom = BigInt::from(1);
    let mut absorb = |v: &Value| {
        denom = denom.lcm(v.as_rational().denom());
    };
    for sign in [Sign::Plus, Sign::Minus] {
        for (_, _, v) in model.frame().edges(sign) {
            absorb(v);
        }
    }
    for atom in model.atoms() {
        for side in [Side::One, Side::Two] {
            for w in 0..model.worlds().len() {
                absorb(&model.val(side, &atom, w));
            }
        }
    }
    denom
}

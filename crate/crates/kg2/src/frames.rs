//! Frame properties, the star-conflation and splitting constructions, and
//! the definability test harness.
//!
//! Star-conflation swaps the two relations of a crisp model and flips both
//! valuations `(x, y) -> (1-y, 1-x)`; every formula's value flips the same
//! way. Splitting replaces the worlds by edge descriptors so that no world is
//! reachable through both relations, preserving all formula values at the
//! descriptors of a world. The countermodel constructions produce, for a
//! frame violating crispness or mono-relationality, an explicit valuation on
//! which the corresponding defining formula evaluates away from `(1, 0)`.

use std::collections::BTreeMap;
use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::eval::eval_at;
use crate::model::{Frame, Model, Side, Sign};
use crate::parse::parse;
use crate::syntax::Formula;
use crate::value::{TruthPair, Value};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FrameError {
    #[error("model is not crisp (edge {from} -> {to} has value {value})")]
    NotCrisp {
        from: String,
        to: String,
        value: String,
    },
    #[error("edge ({from}, {to}) does not have a strictly fractional value under R{sign}")]
    EdgeNotFractional {
        sign: char,
        from: String,
        to: String,
    },
    #[error("edge ({from}, {to}) has equal values under both relations")]
    EdgeNotDiffering { from: String, to: String },
    #[error("unknown world `{0}`")]
    UnknownWorld(String),
}

/// Exact frame-property flags with witnessing edges for the false ones.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FramePropertyReport {
    pub crisp_plus: bool,
    pub crisp_minus: bool,
    pub mono_relational: bool,
    /// Always true for stored finite frames; reported for completeness.
    pub finitely_branching: bool,
    /// First non-crisp edge of R+, in (from, to) order.
    pub crisp_plus_witness: Option<(String, String, Value)>,
    pub crisp_minus_witness: Option<(String, String, Value)>,
    /// First edge where the two relations differ.
    pub mono_witness: Option<(String, String, Value, Value)>,
}

pub fn frame_report(f: &Frame) -> FramePropertyReport {
    let first_fuzzy = |sign: Sign| {
        f.edges(sign)
            .find(|(_, _, v)| !v.is_crisp())
            .map(|(a, b, v)| (f.worlds()[a].clone(), f.worlds()[b].clone(), v.clone()))
    };
    let crisp_plus_witness = first_fuzzy(Sign::Plus);
    let crisp_minus_witness = first_fuzzy(Sign::Minus);
    let mut mono_witness = None;
    'outer: for a in 0..f.world_count() {
        for b in 0..f.world_count() {
            let plus = f.rel(Sign::Plus, a, b);
            let minus = f.rel(Sign::Minus, a, b);
            if plus != minus {
                mono_witness = Some((
                    f.worlds()[a].clone(),
                    f.worlds()[b].clone(),
                    plus,
                    minus,
                ));
                break 'outer;
            }
        }
    }
    FramePropertyReport {
        crisp_plus: crisp_plus_witness.is_none(),
        crisp_minus: crisp_minus_witness.is_none(),
        mono_relational: mono_witness.is_none(),
        finitely_branching: true,
        crisp_plus_witness,
        crisp_minus_witness,
        mono_witness,
    }
}

/// Star-conflation of a crisp model: relations swapped, valuations flipped
/// `(x, y) -> (1-y, 1-x)`. Atom values are materialized for every atom the
/// model mentions, since the flip turns absent (0) values into 1.
pub fn star(m: &Model) -> Result<Model, FrameError> {
    for sign in [Sign::Plus, Sign::Minus] {
        if let Some((a, b, v)) = m.frame().edges(sign).find(|(_, _, v)| !v.is_crisp()) {
            return Err(FrameError::NotCrisp {
                from: m.worlds()[a].clone(),
                to: m.worlds()[b].clone(),
                value: v.to_string(),
            });
        }
    }
    let frame = Frame::new(m.worlds().to_vec()).expect("labels stay distinct");
    let mut out = Model::new(frame);
    for (sign, source) in [(Sign::Plus, Sign::Minus), (Sign::Minus, Sign::Plus)] {
        for (a, b, v) in m.frame().edges(source) {
            out.frame_mut().set_rel(sign, a, b, v.clone());
        }
    }
    for atom in m.atoms() {
        for w in 0..m.worlds().len() {
            out.set_val(Side::One, &atom, w, m.val(Side::Two, &atom, w).complement());
            out.set_val(Side::Two, &atom, w, m.val(Side::One, &atom, w).complement());
        }
    }
    Ok(out)
}

/// A world of a split model: either the descriptor of an edge `w S w'` or the
/// root descriptor of an `S`-orphan (a world with no `S`-predecessor).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub enum SplitLabel {
    Edge { sign: Sign, from: usize, to: usize },
    Orphan { sign: Sign, to: usize },
}

impl SplitLabel {
    /// The original world this descriptor points at.
    pub fn target(&self) -> usize {
        match self {
            SplitLabel::Edge { to, .. } | SplitLabel::Orphan { to, .. } => *to,
        }
    }

    pub fn sign(&self) -> Sign {
        match self {
            SplitLabel::Edge { sign, .. } | SplitLabel::Orphan { sign, .. } => *sign,
        }
    }

    fn render(&self, worlds: &[String]) -> String {
        match self {
            SplitLabel::Edge { sign, from, to } => format!(
                "[{} R{} {}]",
                worlds[*from],
                sign.symbol(),
                worlds[*to]
            ),
            SplitLabel::Orphan { sign, to } => {
                format!("[- R{} {}]", sign.symbol(), worlds[*to])
            }
        }
    }
}

/// A split model together with the correspondence from original worlds to
/// their descriptor labels.
#[derive(Debug, Clone)]
pub struct Splitting {
    pub model: Model,
    pub labels: Vec<SplitLabel>,
    /// For each original world, the indices of its descriptors (never empty).
    pub classes: Vec<Vec<usize>>,
}

/// Splits a model: one world per positive edge of either relation, plus one
/// orphan descriptor per sign for worlds without predecessors under that
/// sign. An `S`-edge runs from any descriptor into an `S`-descriptor, with
/// the value the source's target had to the descriptor's target under `S`;
/// valuations copy the target world's values.
pub fn split(m: &Model) -> Splitting {
    let n = m.worlds().len();
    let mut labels = Vec::new();
    for sign in [Sign::Plus, Sign::Minus] {
        for (from, to, _) in m.frame().edges(sign) {
            labels.push(SplitLabel::Edge { sign, from, to });
        }
        for to in 0..n {
            let orphan = (0..n).all(|t| m.rel(sign, t, to).is_zero());
            if orphan {
                labels.push(SplitLabel::Orphan { sign, to });
            }
        }
    }
    labels.sort();

    let names: Vec<String> = labels.iter().map(|l| l.render(m.worlds())).collect();
    let frame = Frame::new(names).expect("descriptor labels are distinct");
    let mut out = Model::new(frame);
    for (i, a) in labels.iter().enumerate() {
        for (j, b) in labels.iter().enumerate() {
            let sign = b.sign();
            let v = m.rel(sign, a.target(), b.target());
            if !v.is_zero() {
                out.frame_mut().set_rel(sign, i, j, v);
            }
        }
    }
    for atom in m.atoms() {
        for (i, l) in labels.iter().enumerate() {
            for side in [Side::One, Side::Two] {
                out.set_val(side, &atom, i, m.val(side, &atom, l.target()));
            }
        }
    }
    let mut classes = vec![Vec::new(); n];
    for (i, l) in labels.iter().enumerate() {
        classes[l.target()].push(i);
    }
    Splitting {
        model: out,
        labels,
        classes,
    }
}

/// Defining formulas used by the countermodel constructions and the suite.
pub fn crispness_plus_formula() -> Formula {
    parse("^[]p -> []^p").unwrap()
}

pub fn crispness_minus_formula() -> Formula {
    parse("<>~~p -> ~~<>p").unwrap()
}

/// The biconditional is the conjunction of both implications.
pub fn mono_formula() -> Formula {
    parse("([]p -> !<>!p) & (!<>!p -> []p)").unwrap()
}

pub fn finitely_branching_formulas() -> [Formula; 2] {
    [
        parse("~~[](p | ~p)").unwrap(),
        parse("1 -< <>!(p | ~p)").unwrap(),
    ]
}

/// For a frame with a strictly fractional `R+` edge `w -> w'` of value `x`:
/// the valuation `p = (x, 0)` at `w'` and `(1, 0)` elsewhere makes
/// `^[]p -> []^p` evaluate to `(0, 0)` at `w`. For a fractional `R-` edge of
/// value `y`: `p = (1, wR-u)` at every `u` (which is the published
/// `(1, y)`-at-`w'` valuation whenever `w'` is the only `R-`-successor)
/// makes `<>~~p -> ~~<>p` have falsity support 1 at `w`.
pub fn crispness_countermodel(
    f: &Frame,
    sign: Sign,
    edge: (&str, &str),
) -> Result<(Model, String, Formula), FrameError> {
    let from = f
        .world_index(edge.0)
        .ok_or_else(|| FrameError::UnknownWorld(edge.0.to_string()))?;
    let to = f
        .world_index(edge.1)
        .ok_or_else(|| FrameError::UnknownWorld(edge.1.to_string()))?;
    let v = f.rel(sign, from, to);
    if v.is_crisp() {
        return Err(FrameError::EdgeNotFractional {
            sign: sign.symbol(),
            from: edge.0.to_string(),
            to: edge.1.to_string(),
        });
    }
    let mut model = Model::new(f.clone());
    match sign {
        Sign::Plus => {
            for w in 0..f.world_count() {
                let pos = if w == to { v.clone() } else { Value::one() };
                model.set_val(Side::One, "p", w, pos);
            }
            Ok((model, edge.0.to_string(), crispness_plus_formula()))
        }
        Sign::Minus => {
            for w in 0..f.world_count() {
                model.set_val(Side::One, "p", w, Value::one());
                model.set_val(Side::Two, "p", w, f.rel(Sign::Minus, from, w));
            }
            Ok((model, edge.0.to_string(), crispness_minus_formula()))
        }
    }
}

/// For a frame with `wR+w' = x` and `wR-w' = y`, `x != y`: the valuation
/// `p = (min(x,y), max(x,y))` at `w'` and `(1, 0)` elsewhere falsifies the
/// box/negated-diamond biconditional at `w` (whichever implication direction
/// the order of `x` and `y` puts in the failing role).
pub fn mono_countermodel(f: &Frame, edge: (&str, &str)) -> Result<(Model, String), FrameError> {
    let from = f
        .world_index(edge.0)
        .ok_or_else(|| FrameError::UnknownWorld(edge.0.to_string()))?;
    let to = f
        .world_index(edge.1)
        .ok_or_else(|| FrameError::UnknownWorld(edge.1.to_string()))?;
    let x = f.rel(Sign::Plus, from, to);
    let y = f.rel(Sign::Minus, from, to);
    if x == y {
        return Err(FrameError::EdgeNotDiffering {
            from: edge.0.to_string(),
            to: edge.1.to_string(),
        });
    }
    let mut model = Model::new(f.clone());
    for w in 0..f.world_count() {
        let (pos, neg) = if w == to {
            (x.meet(&y), x.join(&y))
        } else {
            (Value::one(), Value::zero())
        };
        model.set_val(Side::One, "p", w, pos);
        model.set_val(Side::Two, "p", w, neg);
    }
    Ok((model, edge.0.to_string()))
}

/// One violation found by the sampled definability suite.
#[derive(Debug, Clone)]
pub struct SuiteViolation {
    pub formula: Formula,
    pub world: String,
    pub value: TruthPair,
    pub sample: usize,
    /// The valuation (atom `p`, both sides, per world) that produced it.
    pub valuation: BTreeMap<String, (Value, Value)>,
}

#[derive(Debug, Clone)]
pub struct SuiteReport {
    pub seed: u64,
    pub samples: usize,
    pub violations: Vec<SuiteViolation>,
}

impl fmt::Display for SuiteReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "definability suite: seed={} samples={}", self.seed, self.samples)?;
        if self.violations.is_empty() {
            writeln!(f, "no violations")
        } else {
            for v in &self.violations {
                writeln!(
                    f,
                    "violated {} at {} with value {} (sample {})",
                    v.formula, v.world, v.value, v.sample
                )?;
            }
            Ok(())
        }
    }
}

/// Random value with denominator at most 6.
fn sample_value(rng: &mut ChaCha8Rng) -> Value {
    let den = rng.gen_range(1..=6u64);
    let num = rng.gen_range(0..=den);
    Value::grid(num, den)
}

/// Evaluates the defining formulas under `samples` pseudo-random valuations
/// of `p` on the frame, reporting any world where a formula leaves `(1, 0)`.
pub fn definability_suite(f: &Frame, samples: usize, seed: u64) -> SuiteReport {
    let mut formulas = vec![
        crispness_plus_formula(),
        crispness_minus_formula(),
        mono_formula(),
    ];
    formulas.extend(finitely_branching_formulas());

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut violations = Vec::new();
    for sample in 0..samples {
        let mut model = Model::new(f.clone());
        let mut valuation = BTreeMap::new();
        for w in 0..f.world_count() {
            let pos = sample_value(&mut rng);
            let neg = sample_value(&mut rng);
            model.set_val(Side::One, "p", w, pos.clone());
            model.set_val(Side::Two, "p", w, neg.clone());
            valuation.insert(f.worlds()[w].clone(), (pos, neg));
        }
        for formula in &formulas {
            for w in 0..f.world_count() {
                let value = eval_at(&model, w, formula);
                if !value.is_designated() {
                    violations.push(SuiteViolation {
                        formula: formula.clone(),
                        world: f.worlds()[w].clone(),
                        value,
                        sample,
                        valuation: valuation.clone(),
                    });
                }
            }
        }
    }
    SuiteReport {
        seed,
        samples,
        violations,
    }
}

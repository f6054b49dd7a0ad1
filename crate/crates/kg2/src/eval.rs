//! The two-valuation evaluator over explicit models.
//!
//! Modal clauses, with min/max ranging over the whole (finite) world set and
//! absent relation values read as 0:
//!
//! ```text
//! v1([]f, w) = min_u (wR+u ->G v1(f, u))     v2([]f, w) = max_u (wR-u /\G v2(f, u))
//! v1(<>f, w) = max_u (wR+u /\G v1(f, u))     v2(<>f, w) = min_u (wR-u ->G v2(f, u))
//! ```
//!
//! The `v2(<>)` clause is the infimum reading; it is the one the tableau
//! rules and the definability arguments require, and the four-world
//! evaluation vector in the test suite pins it down.
//!
//! Defined connectives are evaluated directly; agreement with evaluation
//! after desugaring is a tested property.

use thiserror::Error;

use crate::model::{Model, Side};
use crate::syntax::Formula;
use crate::value::{TruthPair, Value};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum EvalError {
    #[error("unknown world `{0}`")]
    UnknownWorld(String),
}

/// Evaluates `f` at the world labelled `world`.
pub fn eval(m: &Model, world: &str, f: &Formula) -> Result<TruthPair, EvalError> {
    let w = m
        .world_index(world)
        .ok_or_else(|| EvalError::UnknownWorld(world.to_string()))?;
    Ok(eval_at(m, w, f))
}

/// Evaluates `f` at a world index (must be in range).
pub fn eval_at(m: &Model, w: usize, f: &Formula) -> TruthPair {
    let pos = eval_side(m, Side::One, w, f);
    let neg = eval_side(m, Side::Two, w, f);
    TruthPair::new(pos, neg)
}

fn eval_side(m: &Model, side: Side, w: usize, f: &Formula) -> Value {
    match f {
        Formula::Atom(p) => m.val(side, p, w),
        Formula::Top => match side {
            Side::One => Value::one(),
            Side::Two => Value::zero(),
        },
        Formula::Bot => match side {
            Side::One => Value::zero(),
            Side::Two => Value::one(),
        },
        Formula::Neg(a) => eval_side(m, side.other(), w, a),
        Formula::GNeg(a) => {
            let v = eval_side(m, side, w, a);
            match side {
                Side::One => v.gneg(),
                // v2(~a) = 1 -< v2(a): 0 at 1, else 1.
                Side::Two => Value::one().coresiduum(&v),
            }
        }
        Formula::Delta(a) => {
            let v = eval_side(m, side, w, a);
            match side {
                Side::One => v.delta(),
                // v2(^a) = ~~ v2(a): 0 at 0, else 1.
                Side::Two => v.gneg().gneg(),
            }
        }
        Formula::And(l, r) => {
            let (a, b) = (eval_side(m, side, w, l), eval_side(m, side, w, r));
            match side {
                Side::One => a.meet(&b),
                Side::Two => a.join(&b),
            }
        }
        Formula::Or(l, r) => {
            let (a, b) = (eval_side(m, side, w, l), eval_side(m, side, w, r));
            match side {
                Side::One => a.join(&b),
                Side::Two => a.meet(&b),
            }
        }
        Formula::Impl(l, r) => {
            let (a, b) = (eval_side(m, side, w, l), eval_side(m, side, w, r));
            match side {
                Side::One => a.residuum(&b),
                Side::Two => b.coresiduum(&a),
            }
        }
        Formula::Coimpl(l, r) => {
            let (a, b) = (eval_side(m, side, w, l), eval_side(m, side, w, r));
            match side {
                Side::One => a.coresiduum(&b),
                Side::Two => b.residuum(&a),
            }
        }
        Formula::Box_(a) => {
            let sign = side.sign();
            let mut acc = match side {
                Side::One => Value::one(),
                Side::Two => Value::zero(),
            };
            for u in 0..m.worlds().len() {
                let r = m.rel(sign, w, u);
                let v = eval_side(m, side, u, a);
                acc = match side {
                    Side::One => acc.meet(&r.residuum(&v)),
                    Side::Two => acc.join(&r.meet(&v)),
                };
            }
            acc
        }
        Formula::Dia(a) => {
            let sign = side.sign();
            let mut acc = match side {
                Side::One => Value::zero(),
                Side::Two => Value::one(),
            };
            for u in 0..m.worlds().len() {
                let r = m.rel(sign, w, u);
                let v = eval_side(m, side, u, a);
                acc = match side {
                    Side::One => acc.join(&r.meet(&v)),
                    Side::Two => acc.meet(&r.residuum(&v)),
                };
            }
            acc
        }
    }
}

/// Result of checking `v(f, w) = (1, 0)` at every world of one model.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ModelCheck {
    Holds,
    /// First world (in label-list order) where the value is not `(1, 0)`.
    FailsAt { world: String, value: TruthPair },
}

/// Universal designated-value check over one model.
pub fn check_valid_on_model(m: &Model, f: &Formula) -> ModelCheck {
    for w in 0..m.worlds().len() {
        let v = eval_at(m, w, f);
        if !v.is_designated() {
            return ModelCheck::FailsAt {
                world: m.worlds()[w].clone(),
                value: v,
            };
        }
    }
    ModelCheck::Holds
}

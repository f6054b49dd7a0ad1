//! Brute-force grid oracles: exhaustive model enumeration over a finite value
//! grid, independent of the tableau engine.
//!
//! Models with up to `max_worlds` worlds are enumerated breadth-first in the
//! world count; within one world count the assignment of grid values to slots
//! is lexicographic, relation slots (R+ then R-, in `(from, to)` order) before
//! atom slots (per atom in sorted order, side 1 before side 2, then worlds).
//! The reported countermodel is always the first one in this global order, so
//! parallel scans reduce by chunk order, not arrival.
//!
//! Grid values are represented as indices `0..=denom`; every connective
//! either selects an input or returns a grid endpoint, so index arithmetic is
//! exact.

use rayon::prelude::*;
use thiserror::Error;

use crate::model::{Frame, Model, Side, Sign};
use crate::syntax::Formula;
use crate::value::Value;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum OracleError {
    #[error("enumeration budget exceeded after {examined} models")]
    BudgetExceeded { examined: u64 },
}

/// Enumeration cap. The default is sized for interactive use; the acceptance
/// suites pass explicit budgets.
#[derive(Debug, Clone, Copy)]
pub struct OracleBudget {
    pub max_models: u64,
}

impl Default for OracleBudget {
    fn default() -> Self {
        OracleBudget {
            max_models: 50_000_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum OracleValidOutcome {
    /// No countermodel within the searched class (a bounded claim only).
    Confirmed,
    Countermodel { model: Model, world: String },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum OracleSatOutcome {
    Sat { model: Model, world: String },
    NotFound,
}

// Compiled formula: postorder ops over subformula slots.
#[derive(Debug, Clone, Copy)]
enum Op {
    Atom(usize),
    Top,
    Bot,
    Neg(usize),
    GNeg(usize),
    Delta(usize),
    And(usize, usize),
    Or(usize, usize),
    Impl(usize, usize),
    Coimpl(usize, usize),
    Box_(usize),
    Dia(usize),
}

struct Compiled {
    ops: Vec<Op>,
    atoms: Vec<String>,
}

fn compile(f: &Formula) -> Compiled {
    let atoms = f.atoms();
    let mut ops = Vec::new();
    fn go(f: &Formula, atoms: &[String], ops: &mut Vec<Op>) -> usize {
        let op = match f {
            Formula::Atom(p) => Op::Atom(atoms.iter().position(|a| a == p).unwrap()),
            Formula::Top => Op::Top,
            Formula::Bot => Op::Bot,
            Formula::Neg(a) => Op::Neg(go(a, atoms, ops)),
            Formula::GNeg(a) => Op::GNeg(go(a, atoms, ops)),
            Formula::Delta(a) => Op::Delta(go(a, atoms, ops)),
            Formula::And(l, r) => Op::And(go(l, atoms, ops), go(r, atoms, ops)),
            Formula::Or(l, r) => Op::Or(go(l, atoms, ops), go(r, atoms, ops)),
            Formula::Impl(l, r) => Op::Impl(go(l, atoms, ops), go(r, atoms, ops)),
            Formula::Coimpl(l, r) => Op::Coimpl(go(l, atoms, ops), go(r, atoms, ops)),
            Formula::Box_(a) => Op::Box_(go(a, atoms, ops)),
            Formula::Dia(a) => Op::Dia(go(a, atoms, ops)),
        };
        ops.push(op);
        ops.len() - 1
    }
    go(f, &atoms, &mut ops);
    Compiled { ops, atoms }
}

/// Relation digits for a fixed world count; atom values live in lanes.
struct RelAssign<'a> {
    n: usize,
    /// rplus then rminus, n*n digits each.
    digits: &'a [u8],
}

impl RelAssign<'_> {
    fn rel(&self, sign: Sign, w: usize, u: usize) -> u8 {
        let base = match sign {
            Sign::Plus => 0,
            Sign::Minus => self.n * self.n,
        };
        self.digits[base + w * self.n + u]
    }
}

fn residuum(d: u8, a: u8, b: u8) -> u8 {
    if a <= b {
        d
    } else {
        b
    }
}

fn coresiduum(a: u8, b: u8) -> u8 {
    if a <= b {
        0
    } else {
        a
    }
}

/// Scratch for the lane-batched evaluator: all atom-slot combinations for one
/// relation assignment are evaluated together, one lane per combination.
/// Lanes are ordered exactly like the lexicographic enumeration of the atom
/// slots, so `relation index * lanes + lane` is the global model index.
struct LaneEval {
    n: usize,
    denom: u8,
    lanes: usize,
    /// Precomputed atom slot digits: `atom_lane[slot * lanes + lane]`.
    /// Slot order: per atom (sorted), side 1 then side 2, then worlds.
    atom_lane: Vec<u8>,
    /// `vals[((op * 2 + side) * n + w) * lanes + lane]`.
    vals: Vec<u8>,
}

impl LaneEval {
    fn new(c: &Compiled, n: usize, denom: u8) -> LaneEval {
        let atom_slots = c.atoms.len() * 2 * n;
        let base = denom as usize + 1;
        let lanes = base.pow(atom_slots as u32);
        let mut atom_lane = vec![0u8; atom_slots * lanes];
        for slot in 0..atom_slots {
            // Slot 0 is the most significant digit of the lane index.
            let stride = base.pow((atom_slots - 1 - slot) as u32);
            for (lane, dst) in atom_lane[slot * lanes..(slot + 1) * lanes].iter_mut().enumerate() {
                *dst = ((lane / stride) % base) as u8;
            }
        }
        LaneEval {
            n,
            denom,
            lanes,
            atom_lane,
            vals: vec![0u8; c.ops.len() * 2 * n * lanes],
        }
    }

    fn row(&self, op: usize, side: usize, w: usize) -> std::ops::Range<usize> {
        let start = ((op * 2 + side) * self.n + w) * self.lanes;
        start..start + self.lanes
    }

    fn eval(&mut self, c: &Compiled, rel: &RelAssign) {
        let d = self.denom;
        let n = self.n;
        let lanes = self.lanes;
        for (idx, op) in c.ops.iter().enumerate() {
            for w in 0..n {
                // Split borrows: rows of earlier ops are read-only here.
                let (done, rest) = self.vals.split_at_mut((idx * 2) * n * lanes);
                let (row1, row2) = rest[..2 * n * lanes].split_at_mut(n * lanes);
                let out1 = &mut row1[w * lanes..(w + 1) * lanes];
                let out2 = &mut row2[w * lanes..(w + 1) * lanes];
                let src = |op2: usize, side: usize, w2: usize| -> &[u8] {
                    &done[((op2 * 2 + side) * n + w2) * lanes..((op2 * 2 + side) * n + w2 + 1) * lanes]
                };
                match *op {
                    Op::Atom(i) => {
                        let s1 = (i * 2) * n + w;
                        let s2 = (i * 2 + 1) * n + w;
                        out1.copy_from_slice(&self.atom_lane[s1 * lanes..(s1 + 1) * lanes]);
                        out2.copy_from_slice(&self.atom_lane[s2 * lanes..(s2 + 1) * lanes]);
                    }
                    Op::Top => {
                        out1.fill(d);
                        out2.fill(0);
                    }
                    Op::Bot => {
                        out1.fill(0);
                        out2.fill(d);
                    }
                    Op::Neg(i) => {
                        out1.copy_from_slice(src(i, 1, w));
                        out2.copy_from_slice(src(i, 0, w));
                    }
                    Op::GNeg(i) => {
                        let (a1, a2) = (src(i, 0, w), src(i, 1, w));
                        for l in 0..lanes {
                            out1[l] = if a1[l] == 0 { d } else { 0 };
                            out2[l] = if a2[l] == d { 0 } else { d };
                        }
                    }
                    Op::Delta(i) => {
                        let (a1, a2) = (src(i, 0, w), src(i, 1, w));
                        for l in 0..lanes {
                            out1[l] = if a1[l] == d { d } else { 0 };
                            out2[l] = if a2[l] == 0 { 0 } else { d };
                        }
                    }
                    Op::And(x, y) | Op::Or(x, y) | Op::Impl(x, y) | Op::Coimpl(x, y) => {
                        let (l1, r1) = (src(x, 0, w), src(y, 0, w));
                        let (l2, r2) = (src(x, 1, w), src(y, 1, w));
                        match *op {
                            Op::And(..) => {
                                for l in 0..lanes {
                                    out1[l] = l1[l].min(r1[l]);
                                    out2[l] = l2[l].max(r2[l]);
                                }
                            }
                            Op::Or(..) => {
                                for l in 0..lanes {
                                    out1[l] = l1[l].max(r1[l]);
                                    out2[l] = l2[l].min(r2[l]);
                                }
                            }
                            Op::Impl(..) => {
                                for l in 0..lanes {
                                    out1[l] = residuum(d, l1[l], r1[l]);
                                    out2[l] = coresiduum(r2[l], l2[l]);
                                }
                            }
                            Op::Coimpl(..) => {
                                for l in 0..lanes {
                                    out1[l] = coresiduum(l1[l], r1[l]);
                                    out2[l] = residuum(d, r2[l], l2[l]);
                                }
                            }
                            _ => unreachable!(),
                        }
                    }
                    Op::Box_(i) => {
                        out1.fill(d);
                        out2.fill(0);
                        for u in 0..n {
                            let (rp, rm) = (rel.rel(Sign::Plus, w, u), rel.rel(Sign::Minus, w, u));
                            let (c1, c2) = (src(i, 0, u), src(i, 1, u));
                            for l in 0..lanes {
                                out1[l] = out1[l].min(residuum(d, rp, c1[l]));
                                out2[l] = out2[l].max(rm.min(c2[l]));
                            }
                        }
                    }
                    Op::Dia(i) => {
                        out1.fill(0);
                        out2.fill(d);
                        for u in 0..n {
                            let (rp, rm) = (rel.rel(Sign::Plus, w, u), rel.rel(Sign::Minus, w, u));
                            let (c1, c2) = (src(i, 0, u), src(i, 1, u));
                            for l in 0..lanes {
                                out1[l] = out1[l].max(rp.min(c1[l]));
                                out2[l] = out2[l].min(residuum(d, rm, c2[l]));
                            }
                        }
                    }
                }
            }
        }
    }

    /// First (lane, world) failing validity, in lane-major order.
    fn first_invalid(&self, c: &Compiled) -> Option<(usize, usize)> {
        let root = c.ops.len() - 1;
        for lane in 0..self.lanes {
            for w in 0..self.n {
                if self.vals[self.row(root, 0, w)][lane] != self.denom
                    || self.vals[self.row(root, 1, w)][lane] != 0
                {
                    return Some((lane, w));
                }
            }
        }
        None
    }

    /// First (lane, world) with the designated value.
    fn first_sat(&self, c: &Compiled) -> Option<(usize, usize)> {
        let root = c.ops.len() - 1;
        for lane in 0..self.lanes {
            for w in 0..self.n {
                if self.vals[self.row(root, 0, w)][lane] == self.denom
                    && self.vals[self.row(root, 1, w)][lane] == 0
                {
                    return Some((lane, w));
                }
            }
        }
        None
    }
}

fn decode(index: u128, base: u128, slots: usize, out: &mut [u8]) {
    let mut rest = index;
    for s in (0..slots).rev() {
        out[s] = (rest % base) as u8;
        rest /= base;
    }
}

fn to_exact_model(c: &Compiled, n: usize, denom: u64, rel_digits: &[u8], atom_digits: &[u8]) -> Model {
    let labels: Vec<String> = (0..n).map(|i| format!("w{i}")).collect();
    let frame = Frame::new(labels).unwrap();
    let mut model = Model::new(frame);
    let rel = RelAssign { n, digits: rel_digits };
    for sign in [Sign::Plus, Sign::Minus] {
        for w in 0..n {
            for u in 0..n {
                let dg = rel.rel(sign, w, u);
                if dg > 0 {
                    model.frame_mut().set_rel(sign, w, u, Value::grid(dg as u64, denom));
                }
            }
        }
    }
    for atom in &c.atoms {
        model.register_atom(atom);
    }
    for (i, atom) in c.atoms.iter().enumerate() {
        for (si, side) in [Side::One, Side::Two].into_iter().enumerate() {
            for w in 0..n {
                let dg = atom_digits[(i * 2 + si) * n + w];
                if dg > 0 {
                    model.set_val(side, atom, w, Value::grid(dg as u64, denom));
                }
            }
        }
    }
    model
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Target {
    Invalid,
    Sat,
}

/// Scans one world-count class in the global lexicographic order: relation
/// digits are the enumeration prefix, atom lanes the suffix.
fn scan_class(
    c: &Compiled,
    n: usize,
    denom: u64,
    budget: &OracleBudget,
    examined: &mut u64,
    target: Target,
) -> Result<Option<(Model, String)>, OracleError> {
    let rel_slots = 2 * n * n;
    let atom_slots = c.atoms.len() * 2 * n;
    let base = denom as u128 + 1;
    let rel_total: u128 = base.checked_pow(rel_slots as u32).expect("relation slots fit");
    let lanes: u64 = (denom + 1).checked_pow(atom_slots as u32).expect("atom slots fit");

    // Keep one wave of relation assignments in flight per scan step.
    let chunk: u128 = (1u128 << 22).div_ceil(lanes as u128).max(1);
    let mut start: u128 = 0;
    while start < rel_total {
        if *examined >= budget.max_models {
            return Err(OracleError::BudgetExceeded { examined: *examined });
        }
        let available = ((budget.max_models - *examined) as u128).div_ceil(lanes as u128);
        let wave_chunks = 64.min((rel_total - start).div_ceil(chunk));
        let wave_end = (start + wave_chunks * chunk)
            .min(rel_total)
            .min(start + available.max(1));

        let found = (0..wave_chunks)
            .into_par_iter()
            .find_map_first(|ci| {
                let lo = start + ci * chunk;
                let hi = (lo + chunk).min(wave_end);
                if lo >= hi {
                    return None;
                }
                let mut rel_digits = vec![0u8; rel_slots];
                decode(lo, base, rel_slots, &mut rel_digits);
                let mut lane_eval = LaneEval::new(c, n, denom as u8);
                let top = denom as u8;
                for idx in lo..hi {
                    let rel = RelAssign { n, digits: &rel_digits };
                    lane_eval.eval(c, &rel);
                    let hit = match target {
                        Target::Invalid => lane_eval.first_invalid(c),
                        Target::Sat => lane_eval.first_sat(c),
                    };
                    if let Some((lane, w)) = hit {
                        let mut atom_digits = vec![0u8; atom_slots];
                        decode(lane as u128, base, atom_slots, &mut atom_digits);
                        let model = to_exact_model(c, n, denom, &rel_digits, &atom_digits);
                        return Some((idx, lane as u64, model, format!("w{w}")));
                    }
                    for s in (0..rel_slots).rev() {
                        if rel_digits[s] < top {
                            rel_digits[s] += 1;
                            break;
                        }
                        rel_digits[s] = 0;
                    }
                }
                None
            });

        if let Some((idx, lane, model, world)) = found {
            *examined = examined.saturating_add(((idx - start) as u64).saturating_mul(lanes) + lane + 1);
            return Ok(Some((model, world)));
        }
        let scanned = wave_end.saturating_sub(start);
        *examined = examined.saturating_add((scanned as u64).saturating_mul(lanes));
        start = wave_end;
        if *examined >= budget.max_models && start < rel_total {
            return Err(OracleError::BudgetExceeded { examined: *examined });
        }
    }
    Ok(None)
}

/// Exhaustive countermodel search for `(1,0)`-validity over the grid class.
pub fn oracle_valid(
    f: &Formula,
    max_worlds: usize,
    denom: u64,
    budget: &OracleBudget,
) -> Result<OracleValidOutcome, OracleError> {
    assert!(max_worlds >= 1 && denom >= 1);
    let c = compile(f);
    let mut examined = 0u64;
    for n in 1..=max_worlds {
        if let Some((model, world)) =
            scan_class(&c, n, denom, budget, &mut examined, Target::Invalid)?
        {
            return Ok(OracleValidOutcome::Countermodel { model, world });
        }
    }
    Ok(OracleValidOutcome::Confirmed)
}

/// Exhaustive search for a model and world with value `(1, 0)`.
pub fn oracle_sat(
    f: &Formula,
    max_worlds: usize,
    denom: u64,
    budget: &OracleBudget,
) -> Result<OracleSatOutcome, OracleError> {
    assert!(max_worlds >= 1 && denom >= 1);
    let c = compile(f);
    let mut examined = 0u64;
    for n in 1..=max_worlds {
        if let Some((model, world)) =
            scan_class(&c, n, denom, budget, &mut examined, Target::Sat)?
        {
            return Ok(OracleSatOutcome::Sat { model, world });
        }
    }
    Ok(OracleSatOutcome::NotFound)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::{check_valid_on_model, eval, ModelCheck};
    use crate::parse::parse;

    fn big() -> OracleBudget {
        OracleBudget {
            max_models: u64::MAX,
        }
    }

    #[test]
    fn identity_is_confirmed() {
        let f = parse("p -> p").unwrap();
        assert_eq!(
            oracle_valid(&f, 2, 2, &big()).unwrap(),
            OracleValidOutcome::Confirmed
        );
    }

    #[test]
    fn explosion_has_a_one_world_countermodel() {
        let f = parse("(p & !p) -> q").unwrap();
        match oracle_valid(&f, 1, 1, &big()).unwrap() {
            OracleValidOutcome::Countermodel { model, world } => {
                let v = eval(&model, &world, &f).unwrap();
                assert!(!v.is_designated());
            }
            OracleValidOutcome::Confirmed => panic!("expected countermodel"),
        }
    }

    #[test]
    fn box_interchange_countermodel_within_three_halves_grid() {
        let f = parse("[]p -> []!<>p").unwrap();
        match oracle_valid(&f, 3, 2, &big()).unwrap() {
            OracleValidOutcome::Countermodel { model, world } => {
                assert_eq!(
                    matches!(check_valid_on_model(&model, &f), ModelCheck::Holds),
                    false
                );
                let v = eval(&model, &world, &f).unwrap();
                assert!(!v.is_designated());
            }
            OracleValidOutcome::Confirmed => panic!("expected countermodel"),
        }
    }

    #[test]
    fn sat_examples() {
        let p = parse("p").unwrap();
        match oracle_sat(&p, 1, 1, &big()).unwrap() {
            OracleSatOutcome::Sat { model, world } => {
                assert!(eval(&model, &world, &p).unwrap().is_designated());
            }
            OracleSatOutcome::NotFound => panic!("p is satisfiable"),
        }

        let glut = parse("p & !p").unwrap();
        assert_eq!(
            oracle_sat(&glut, 2, 2, &big()).unwrap(),
            OracleSatOutcome::NotFound
        );
    }

    #[test]
    fn reduced_falsifiable_formula_is_satisfiable_in_small_grid() {
        let f = parse("~(1 -< ([]p -> []!<>p))").unwrap();
        match oracle_sat(&f, 3, 2, &big()).unwrap() {
            OracleSatOutcome::Sat { model, world } => {
                assert!(eval(&model, &world, &f).unwrap().is_designated());
            }
            OracleSatOutcome::NotFound => panic!("expected satisfiable"),
        }
    }

    #[test]
    fn first_countermodel_is_pinned_by_the_enumeration_order() {
        // Relation slots come before atom slots, atoms list side 1 before
        // side 2; the first designated-value model for `p` in the global
        // order is the all-zero model with only v1(p) = 1.
        let f = parse("p").unwrap();
        match oracle_sat(&f, 1, 1, &big()).unwrap() {
            OracleSatOutcome::Sat { model, world } => {
                assert_eq!(world, "w0");
                assert_eq!(
                    model.to_doc().to_json(),
                    r#"{"worlds":["w0"],"rplus":[],"rminus":[],"v1":{"p":{"w0":"1"}},"v2":{"p":{}}}"#
                );
            }
            OracleSatOutcome::NotFound => panic!("p is satisfiable"),
        }
    }

    #[test]
    fn budget_is_honored() {
        let f = parse("p -> p").unwrap();
        let tiny = OracleBudget { max_models: 10 };
        assert!(matches!(
            oracle_valid(&f, 2, 4, &tiny),
            Err(OracleError::BudgetExceeded { .. })
        ));
    }

    #[test]
    fn monotone_grid_refinement() {
        // A countermodel found at denominator d persists at 2d and 3d.
        for text in ["(p & !p) -> q", "[]p -> p", "<>p -> []p"] {
            let f = parse(text).unwrap();
            if let OracleValidOutcome::Countermodel { .. } = oracle_valid(&f, 2, 1, &big()).unwrap()
            {
                for k in [2u64, 3] {
                    assert!(
                        matches!(
                            oracle_valid(&f, 2, k, &big()).unwrap(),
                            OracleValidOutcome::Countermodel { .. }
                        ),
                        "{text} at denom {k}"
                    );
                }
            }
        }
    }
}

//! Shared fixtures: seeded formula corpora and random model generators.
//! Everything here is deterministic in the seed.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeSet;

use kg2::model::{Frame, Model, Side, Sign};
use kg2::syntax::Formula;
use kg2::value::Value;

/// Distinct random formulas over at most two atoms, at most three
/// modalities, parse-tree size at most `max_size`.
pub fn formula_corpus(seed: u64, count: usize, max_size: usize) -> Vec<Formula> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    while out.len() < count {
        let f = gen_formula(&mut rng, max_size);
        if f.size() > max_size || f.modal_metrics().count > 3 {
            continue;
        }
        if seen.insert(f.to_string()) {
            out.push(f);
        }
    }
    out
}

pub fn gen_formula(rng: &mut ChaCha8Rng, budget: usize) -> Formula {
    if budget <= 1 {
        return match rng.gen_range(0..6u8) {
            0 | 1 => Formula::atom("p"),
            2 | 3 => Formula::atom("q"),
            4 => Formula::Top,
            _ => Formula::Bot,
        };
    }
    match rng.gen_range(0..13u8) {
        0 | 1 => gen_formula(rng, 1),
        2 => Formula::neg(gen_formula(rng, budget - 1)),
        3 => Formula::gneg(gen_formula(rng, budget - 1)),
        4 => Formula::delta(gen_formula(rng, budget - 1)),
        5 => Formula::box_(gen_formula(rng, budget - 1)),
        6 => Formula::dia(gen_formula(rng, budget - 1)),
        k => {
            let left = rng.gen_range(1..budget.max(2) - 1 + 1).min(budget - 2).max(1);
            let right = (budget - 1 - left).max(1);
            let (a, b) = (gen_formula(rng, left), gen_formula(rng, right));
            match k {
                7 | 8 => Formula::and(a, b),
                9 => Formula::or(a, b),
                10 | 11 => Formula::impl_(a, b),
                _ => Formula::coimpl(a, b),
            }
        }
    }
}

/// Classical-syntax formulas over `0, &, |, ->, [], <>` and two atoms.
pub fn gen_classical(rng: &mut ChaCha8Rng, budget: usize) -> Formula {
    if budget <= 1 {
        return match rng.gen_range(0..5u8) {
            0 | 1 => Formula::atom("p"),
            2 | 3 => Formula::atom("q"),
            _ => Formula::Bot,
        };
    }
    match rng.gen_range(0..8u8) {
        0 => gen_classical(rng, 1),
        1 => Formula::box_(gen_classical(rng, budget - 1)),
        2 => Formula::dia(gen_classical(rng, budget - 1)),
        k => {
            let left = rng.gen_range(1..(budget - 1).max(2)).min(budget - 2).max(1);
            let right = (budget - 1 - left).max(1);
            let (a, b) = (gen_classical(rng, left), gen_classical(rng, right));
            match k {
                3 | 4 => Formula::and(a, b),
                5 => Formula::or(a, b),
                _ => Formula::impl_(a, b),
            }
        }
    }
}

pub fn random_value(rng: &mut ChaCha8Rng) -> Value {
    let den = rng.gen_range(1..=6u64);
    let num = rng.gen_range(0..=den);
    Value::grid(num, den)
}

/// A random model with 1..=max_worlds worlds; relation edges appear with
/// probability 1/2, crisp when requested, otherwise with denominator <= 6.
pub fn random_model(
    rng: &mut ChaCha8Rng,
    max_worlds: usize,
    atoms: &[&str],
    crisp_relations: bool,
) -> Model {
    let n = rng.gen_range(1..=max_worlds);
    let labels: Vec<String> = (0..n).map(|i| format!("w{i}")).collect();
    let mut m = Model::new(Frame::new(labels).unwrap());
    for sign in [Sign::Plus, Sign::Minus] {
        for a in 0..n {
            for b in 0..n {
                if rng.gen_bool(0.5) {
                    let v = if crisp_relations {
                        Value::one()
                    } else {
                        let den = rng.gen_range(1..=6u64);
                        Value::grid(rng.gen_range(1..=den), den)
                    };
                    m.frame_mut().set_rel(sign, a, b, v);
                }
            }
        }
    }
    for atom in atoms {
        for w in 0..n {
            for side in [Side::One, Side::Two] {
                m.set_val(side, atom, w, random_value(rng));
            }
        }
    }
    m
}

/// A random frame (no valuations).
pub fn random_frame(rng: &mut ChaCha8Rng, max_worlds: usize, crisp: bool) -> Frame {
    random_model(rng, max_worlds, &[], crisp).frame().clone()
}

//! Acceptance suite: one test per criterion, each printing a PASS/FAIL line
//! (visible with `--nocapture`). Tolerances are exact unless stated.

mod common;

use std::time::Instant;

use num_bigint::BigInt;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use kg2::eval::{check_valid_on_model, eval, eval_at, ModelCheck};
use kg2::frames;
use kg2::labelled::{labelled_solve, LabelledOutcome};
use kg2::model::{Model, ModelBuilder, Side, Sign};
use kg2::oracle::{oracle_valid, OracleBudget, OracleValidOutcome};
use kg2::reductions::{
    embed_classical, k_countermodel_search, nabla_transform, sat_falsif_reduce,
    triangle_transform, EmbedTarget, KOutcome, ReduceMode,
};
use kg2::tableau::{check_sat, model_denominator, prove_valid, Limits, ProveOutcome, SatOutcome};
use kg2::value::{val, TruthPair, Value};
use kg2::{parse, Formula};

const CORPUS_SEED: u64 = 0x51CA;
const CORPUS_SIZE: usize = 300;

fn criterion(name: &str, body: impl FnOnce() -> Result<String, String>) {
    let started = Instant::now();
    match body() {
        Ok(detail) => println!(
            "[acceptance {name}] PASS ({:.2?}): {detail}",
            started.elapsed()
        ),
        Err(e) => {
            println!("[acceptance {name}] FAIL ({:.2?}): {e}", started.elapsed());
            panic!("criterion {name} failed: {e}");
        }
    }
}

fn four_world_model() -> Model {
    ModelBuilder::new(&["w0", "w1", "w2", "w3"])
        .rel(Sign::Plus, "w0", "w1", Value::one())
        .rel(Sign::Plus, "w0", "w3", Value::one())
        .rel(Sign::Minus, "w0", "w2", Value::one())
        .rel(Sign::Minus, "w0", "w3", Value::one())
        .atom("p", "w0", Value::one(), Value::zero())
        .atom("p", "w1", val(4, 5), val(1, 4))
        .atom("p", "w2", val(2, 5), val(3, 4))
        .atom("p", "w3", val(3, 5), val(2, 4))
        .build()
}

/// Relational depth from w0 over the union of both relations.
fn relational_depth(m: &Model) -> usize {
    let n = m.worlds().len();
    let mut dist = vec![usize::MAX; n];
    dist[0] = 0;
    let mut queue = std::collections::VecDeque::from([0usize]);
    while let Some(w) = queue.pop_front() {
        for u in 0..n {
            let connected =
                !m.rel(Sign::Plus, w, u).is_zero() || !m.rel(Sign::Minus, w, u).is_zero();
            if connected && dist[u] == usize::MAX {
                dist[u] = dist[w] + 1;
                queue.push_back(u);
            }
        }
    }
    dist.into_iter().filter(|&d| d != usize::MAX).max().unwrap_or(0)
}

#[test]
fn acceptance_01_four_world_evaluation_vector() {
    criterion("1", || {
        let m = four_world_model();
        let started = Instant::now();
        let boxed = eval(&m, "w0", &parse("[]p").unwrap()).unwrap();
        let dia = eval(&m, "w0", &parse("<>p").unwrap()).unwrap();
        let elapsed = started.elapsed();
        if boxed != TruthPair::new(val(3, 5), val(3, 4)) {
            return Err(format!("box value {boxed}, expected (3/5, 3/4)"));
        }
        if dia != TruthPair::new(val(4, 5), val(2, 4)) {
            return Err(format!("diamond value {dia}, expected (4/5, 2/4)"));
        }
        if elapsed.as_millis() >= 10 {
            return Err(format!("evaluation took {elapsed:.2?}, budget 10 ms"));
        }
        Ok(format!("v([]p) = {boxed}, v(<>p) = {dia} in {elapsed:.2?}"))
    });
}

#[test]
fn acceptance_02_one_edge_fuzzy_model() {
    criterion("2", || {
        let m = ModelBuilder::new(&["w", "w1"])
            .rel(Sign::Plus, "w", "w1", val(1, 2))
            .rel(Sign::Minus, "w", "w1", val(1, 2))
            .atom("p", "w1", Value::one(), val(2, 3))
            .build();
        let f = parse("<>~~p -> ~~<>p").unwrap();
        let v = eval(&m, "w", &f).unwrap();
        if !v.neg.is_one() {
            return Err(format!("falsity support {} at w, expected 1", v.neg));
        }
        match prove_valid(&f, &Limits::default()).map_err(|e| e.to_string())? {
            ProveOutcome::Valid => Err("prover calls the interchange valid".into()),
            ProveOutcome::Invalid { model, world, side } => {
                let value = eval(&model, &world, &f).unwrap();
                let verified = match side {
                    Side::One => !value.pos.is_one(),
                    Side::Two => !value.neg.is_zero(),
                };
                if !verified {
                    return Err(format!("countermodel unverified: {value}"));
                }
                Ok(format!(
                    "v2 = 1 on the one-edge model; prover countermodel falsifies side {} with {value}",
                    side.number()
                ))
            }
        }
    });
}

#[test]
fn acceptance_03_worked_example_extraction() {
    criterion("3", || {
        let f = parse("[]p -> []!<>p").unwrap();
        let metrics = f.modal_metrics();
        match prove_valid(&f, &Limits::default()).map_err(|e| e.to_string())? {
            ProveOutcome::Valid => Err("expected Invalid".into()),
            ProveOutcome::Invalid { model, world, .. } => {
                if model.worlds().len() != 3 {
                    return Err(format!("{} worlds, expected 3", model.worlds().len()));
                }
                let depth = relational_depth(&model);
                if depth != 2 {
                    return Err(format!("depth {depth}, expected 2"));
                }
                let allowed = [Value::zero(), val(1, 2), Value::one()];
                let mut all_values = Vec::new();
                for sign in [Sign::Plus, Sign::Minus] {
                    for (_, _, v) in model.frame().edges(sign) {
                        all_values.push(v.clone());
                    }
                }
                for atom in model.atoms() {
                    for side in [Side::One, Side::Two] {
                        for w in 0..model.worlds().len() {
                            all_values.push(model.val(side, &atom, w));
                        }
                    }
                }
                if let Some(bad) = all_values.iter().find(|v| !allowed.contains(v)) {
                    return Err(format!("value {bad} outside {{0, 1/2, 1}}"));
                }
                let v = eval(&model, &world, &f).unwrap();
                if !v.pos.is_zero() {
                    return Err(format!("root truth support {}, expected 0", v.pos));
                }
                // Finite-model bounds for k = 3 modalities.
                let bound = (metrics.count as u64).pow(metrics.count as u32 + 1);
                if model.worlds().len() as u64 > bound || depth > metrics.count {
                    return Err(format!(
                        "bounds violated: {} worlds vs {bound}, depth {depth} vs {}",
                        model.worlds().len(),
                        metrics.count
                    ));
                }
                Ok(format!(
                    "3-world depth-2 countermodel on the half grid, v1 = 0 at {world}; bounds {} <= {bound}",
                    model.worlds().len()
                ))
            }
        }
    });
}

#[test]
fn acceptance_04_paraconsistency() {
    criterion("4", || {
        let mut notes = Vec::new();
        for text in ["(p & !p) -> q", "([](p & !p)) -> []q"] {
            let f = parse(text).unwrap();
            match prove_valid(&f, &Limits::default()).map_err(|e| e.to_string())? {
                ProveOutcome::Valid => return Err(format!("{text} reported valid")),
                ProveOutcome::Invalid { model, world, side } => {
                    let v = eval(&model, &world, &f).unwrap();
                    let verified = match side {
                        Side::One => !v.pos.is_one(),
                        Side::Two => !v.neg.is_zero(),
                    };
                    if !verified {
                        return Err(format!("{text}: countermodel unverified ({v})"));
                    }
                    notes.push(format!("{text} refuted at {world} with {v}"));
                }
            }
        }
        Ok(notes.join("; "))
    });
}

#[test]
fn acceptance_05_prover_oracle_agreement() {
    criterion("5", || {
        let suite_start = Instant::now();
        let corpus = common::formula_corpus(CORPUS_SEED, CORPUS_SIZE, 9);
        let limits = Limits::default();
        let budget = OracleBudget { max_models: u64::MAX };

        let mut rng = ChaCha8Rng::seed_from_u64(0xBEEF);
        let pool: Vec<Model> = (0..1000)
            .map(|_| common::random_model(&mut rng, 4, &["p", "q"], false))
            .collect();

        let mut valid = 0usize;
        let mut invalid = 0usize;
        for f in &corpus {
            match prove_valid(f, &limits).map_err(|e| format!("{f}: {e}"))? {
                ProveOutcome::Invalid { model, world, side } => {
                    invalid += 1;
                    let v = eval(&model, &world, f).unwrap();
                    let verified = match side {
                        Side::One => !v.pos.is_one(),
                        Side::Two => !v.neg.is_zero(),
                    };
                    if !verified {
                        return Err(format!("{f}: unverified countermodel ({v})"));
                    }
                }
                ProveOutcome::Valid => {
                    valid += 1;
                    // Exhaustive grid confirmation. Two atoms at two worlds
                    // and denominator four is beyond desk scale (5^16
                    // candidates), so those formulas are confirmed on the
                    // full (2 worlds, denominator 2) and (1 world,
                    // denominator 4) classes instead.
                    let atoms = f.atoms().len();
                    let confirmations: Vec<(usize, u64)> = if atoms <= 1 {
                        vec![(2, 4)]
                    } else {
                        vec![(2, 2), (1, 4)]
                    };
                    for (worlds, denom) in confirmations {
                        match oracle_valid(f, worlds, denom, &budget)
                            .map_err(|e| format!("{f}: {e}"))?
                        {
                            OracleValidOutcome::Confirmed => {}
                            OracleValidOutcome::Countermodel { world, .. } => {
                                return Err(format!(
                                    "{f}: prover says valid, oracle countermodel at {world} ({worlds} worlds, denom {denom})"
                                ));
                            }
                        }
                    }
                    for (i, m) in pool.iter().enumerate() {
                        if let ModelCheck::FailsAt { world, value } = check_valid_on_model(m, f) {
                            return Err(format!(
                                "{f}: valid verdict falsified on random model {i} at {world} ({value})"
                            ));
                        }
                    }
                }
            }
        }
        let elapsed = suite_start.elapsed();
        if elapsed.as_secs() >= 600 {
            return Err(format!("suite took {elapsed:.2?}, budget 10 min"));
        }
        Ok(format!(
            "{} formulas: {valid} valid (oracle-confirmed + 1000 random models), {invalid} invalid (exactly verified) in {elapsed:.2?}",
            corpus.len()
        ))
    });
}

#[test]
fn acceptance_06_engine_agreement() {
    criterion("6", || {
        let corpus = common::formula_corpus(CORPUS_SEED, CORPUS_SIZE, 9);
        let limits = Limits::default();
        // Grid exhaustion on unsatisfiable instances legitimately needs many
        // value guesses; the cap is a safety valve, not a verdict.
        let grid_limits = Limits {
            max_constraints: 20_000_000,
            ..Limits::default()
        };
        let mut sat_checked = 0usize;
        let mut unsat_checked = 0usize;
        for f in &corpus {
            match check_sat(f, &limits).map_err(|e| format!("{f}: {e}"))? {
                SatOutcome::Sat { model, .. } => {
                    let denom = model_denominator(&model);
                    if denom > BigInt::from(6) {
                        continue;
                    }
                    let denom: u64 = denom.try_into().unwrap();
                    match labelled_solve(f, denom, &grid_limits).map_err(|e| format!("{f}: {e}"))? {
                        LabelledOutcome::SatInGrid { model, .. } => {
                            let v = eval(&model, "w0", f).unwrap();
                            if !v.is_designated() {
                                return Err(format!("{f}: labelled model unverified ({v})"));
                            }
                        }
                        LabelledOutcome::NoModelInGrid { .. } => {
                            return Err(format!(
                                "{f}: tableau model has denominator {denom} but the labelled solver finds nothing"
                            ));
                        }
                    }
                    sat_checked += 1;
                }
                SatOutcome::Unsat => {
                    for denom in 1..=6u64 {
                        if let LabelledOutcome::SatInGrid { .. } =
                            labelled_solve(f, denom, &grid_limits).map_err(|e| format!("{f}: {e}"))?
                        {
                            return Err(format!(
                                "{f}: unsat by tableau but satisfiable in grid 1/{denom}"
                            ));
                        }
                    }
                    unsat_checked += 1;
                }
            }
        }
        Ok(format!(
            "{sat_checked} satisfiable instances matched in-grid, {unsat_checked} unsatisfiable instances clean through denominator 6"
        ))
    });
}

#[test]
fn acceptance_07_star_and_split_laws() {
    criterion("7", || {
        let mut rng = ChaCha8Rng::seed_from_u64(0x07A);
        for round in 0..200 {
            let m = common::random_model(&mut rng, 4, &["p", "q"], true);
            let s = frames::star(&m).map_err(|e| e.to_string())?;
            let f = common::gen_formula(&mut rng, 7);
            for w in 0..m.worlds().len() {
                let v = eval_at(&m, w, &f);
                if eval_at(&s, w, &f) != v.conflate() {
                    return Err(format!("star law fails at round {round}: {f}"));
                }
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(0x075);
        for round in 0..200 {
            let m = common::random_model(&mut rng, 4, &["p", "q"], false);
            let s = frames::split(&m);
            let f = common::gen_formula(&mut rng, 7);
            for w in 0..m.worlds().len() {
                let expect = eval_at(&m, w, &f);
                for &i in &s.classes[w] {
                    if eval_at(&s.model, i, &f) != expect {
                        return Err(format!("split law fails at round {round}: {f}"));
                    }
                }
            }
        }
        Ok("star flip law on 200 crisp models, split preservation on 200 models, all exact".into())
    });
}

#[test]
fn acceptance_08_definability() {
    criterion("8", || {
        let mut rng = ChaCha8Rng::seed_from_u64(0x08D);
        let crisp_formulas = [
            frames::crispness_plus_formula(),
            frames::crispness_minus_formula(),
        ];
        for i in 0..50 {
            let frame = common::random_frame(&mut rng, 3, true);
            let report = frames::definability_suite(&frame, 20, 0x100 + i);
            if let Some(v) = report
                .violations
                .iter()
                .find(|v| crisp_formulas.contains(&v.formula))
            {
                return Err(format!(
                    "crisp frame {i} violates {} at {}",
                    v.formula, v.world
                ));
            }
        }

        for i in 0..50 {
            let mut frame = common::random_frame(&mut rng, 3, true);
            let sign = if i % 2 == 0 { Sign::Plus } else { Sign::Minus };
            frame.set_rel(sign, 0, frame.world_count() - 1, val(1, 2));
            let from = frame.worlds()[0].clone();
            let to = frame.worlds()[frame.world_count() - 1].clone();
            let (model, world, formula) =
                frames::crispness_countermodel(&frame, sign, (&from, &to))
                    .map_err(|e| e.to_string())?;
            let v = eval(&model, &world, &formula).unwrap();
            if v.is_designated() {
                return Err(format!("fractional frame {i}: no violation ({v})"));
            }
            if sign == Sign::Plus {
                let boxed_delta = eval(&model, &world, &parse("[]^p").unwrap()).unwrap();
                if boxed_delta != TruthPair::new(Value::zero(), Value::zero()) {
                    return Err(format!(
                        "fractional frame {i}: v([]^p) = {boxed_delta}, expected (0, 0)"
                    ));
                }
            }
        }

        for i in 0..50 {
            let mut frame = common::random_frame(&mut rng, 3, true);
            frame.set_rel(Sign::Plus, 0, frame.world_count() - 1, Value::one());
            frame.set_rel(Sign::Minus, 0, frame.world_count() - 1, val(1, 3));
            let from = frame.worlds()[0].clone();
            let to = frame.worlds()[frame.world_count() - 1].clone();
            let (model, world) = frames::mono_countermodel(&frame, (&from, &to))
                .map_err(|e| e.to_string())?;
            let v = eval(&model, &world, &frames::mono_formula()).unwrap();
            if v.is_designated() {
                return Err(format!("non-mono frame {i}: no violation"));
            }
        }
        Ok("50 crisp frames clean; 50 crispness and 50 mono constructions give exact violations".into())
    });
}

#[test]
fn acceptance_09_reductions() {
    criterion("9", || {
        // Part one: the classical countermodel embeddings, exact on every
        // bounded countermodel found.
        let mut rng = ChaCha8Rng::seed_from_u64(0x09E);
        let mut counters = 0usize;
        let mut tested = 0usize;
        while tested < 100 {
            let f = common::gen_classical(&mut rng, 7);
            tested += 1;
            if let KOutcome::KCounter { model, world } =
                k_countermodel_search(&f, 2).map_err(|e| e.to_string())?
            {
                counters += 1;
                let fuzzy = embed_classical(&model, EmbedTarget::PositiveSide);
                let nab = nabla_transform(&f).map_err(|e| e.to_string())?;
                let v = eval(&fuzzy, &world, &nab).unwrap();
                if v.pos.is_one() {
                    return Err(format!("{f}: embedded countermodel has v1(nabla) = 1"));
                }
                let tri = Formula::coimpl(
                    Formula::Top,
                    triangle_transform(&f).map_err(|e| e.to_string())?,
                );
                let v = eval(&fuzzy, &world, &tri).unwrap();
                if v.neg.is_zero() {
                    return Err(format!("{f}: embedded countermodel has v2(1 -< tri) = 0"));
                }
            }
        }

        // Part two: the satisfiability/falsifiability round-trips through
        // the `~~(f -< 0)` and `~~(1 -< f)` transforms, over the whole
        // corpus. This direction cannot hold for designated-value
        // satisfiability: `f -< 0` evaluates exactly like `f`, so the
        // transform of any valid formula is itself valid and has no
        // countermodel, while a valid formula is trivially satisfiable.
        // The check is kept as stated and the first counterexample is
        // reported rather than the assertion being weakened.
        let corpus = common::formula_corpus(CORPUS_SEED, CORPUS_SIZE, 9);
        let limits = Limits::default();
        let mut round_trip_failures = Vec::new();
        for f in &corpus {
            let sat = matches!(
                check_sat(f, &limits).map_err(|e| format!("{f}: {e}"))?,
                SatOutcome::Sat { .. }
            );
            let s2f = sat_falsif_reduce(f, ReduceMode::SatToFalsif);
            let s2f_falsifiable = matches!(
                prove_valid(&s2f, &limits).map_err(|e| format!("{s2f}: {e}"))?,
                ProveOutcome::Invalid { .. }
            );
            if sat != s2f_falsifiable {
                round_trip_failures.push(format!(
                    "{f}: satisfiable = {sat} but `{s2f}` falsifiable = {s2f_falsifiable}"
                ));
                continue;
            }
            let falsifiable = matches!(
                prove_valid(f, &limits).map_err(|e| format!("{f}: {e}"))?,
                ProveOutcome::Invalid { .. }
            );
            let f2s = sat_falsif_reduce(f, ReduceMode::FalsifToSat);
            let f2s_sat = matches!(
                check_sat(&f2s, &limits).map_err(|e| format!("{f2s}: {e}"))?,
                SatOutcome::Sat { .. }
            );
            if falsifiable != f2s_sat {
                round_trip_failures.push(format!(
                    "{f}: falsifiable = {falsifiable} but `{f2s}` satisfiable = {f2s_sat}"
                ));
            }
        }
        if !round_trip_failures.is_empty() {
            return Err(format!(
                "classical embeddings exact on {counters}/{tested} countermodels, BUT the \
                 sat/falsifiability round-trip fails on {} of {} formulas; first: {}",
                round_trip_failures.len(),
                corpus.len(),
                round_trip_failures[0]
            ));
        }
        Ok(format!(
            "round-trips agree on {} formulas; {counters}/{tested} classical countermodels embed exactly",
            corpus.len()
        ))
    });
}

#[test]
fn acceptance_10_labelled_memory_shape() {
    criterion("10", || {
        let corpus = common::formula_corpus(CORPUS_SEED, CORPUS_SIZE, 9);
        let limits = Limits {
            max_constraints: 20_000_000,
            ..Limits::default()
        };
        let mut worst_ratio = 0.0f64;
        let mut worst: Option<(String, usize, usize)> = None;
        for f in &corpus {
            let size = f.desugar().size();
            let cap = 4 * size * size;
            for denom in 1..=3u64 {
                let stats = labelled_solve(f, denom, &limits)
                    .map_err(|e| format!("{f}: {e}"))?
                    .stats();
                let ratio = stats.max_live_entries as f64 / (size * size) as f64;
                if ratio > worst_ratio {
                    worst_ratio = ratio;
                    worst = Some((f.to_string(), stats.max_live_entries, size));
                }
                if stats.max_live_entries > cap {
                    return Err(format!(
                        "{f}: live entries {} exceed 4 * {size}^2 at denominator {denom}",
                        stats.max_live_entries
                    ));
                }
            }
        }
        let (wf, wl, ws) = worst.unwrap();
        Ok(format!(
            "live branch stays within 4 * size^2; worst ratio {worst_ratio:.2} ({wl} entries, size {ws}) on {wf}"
        ))
    });
}

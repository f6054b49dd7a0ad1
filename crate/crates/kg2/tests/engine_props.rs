//! Cross-module invariants of the decision engines: extraction realisation,
//! finite-model bounds, ranking sanity, and the star/split value laws.

mod common;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use kg2::eval::eval_at;
use kg2::frames::{split, star};
use kg2::model::Sign;
use kg2::tableau::{prove_valid, Goal, Limits, ProveOutcome, SaturateOutcome, Tableau};
use kg2::Model;

/// Relational depth from w0 over the union of both relations.
fn relational_depth(m: &Model) -> usize {
    let n = m.worlds().len();
    let mut dist = vec![usize::MAX; n];
    dist[0] = 0;
    let mut queue = std::collections::VecDeque::from([0usize]);
    while let Some(w) = queue.pop_front() {
        for u in 0..n {
            let connected = !m.rel(Sign::Plus, w, u).is_zero() || !m.rel(Sign::Minus, w, u).is_zero();
            if connected && dist[u] == usize::MAX {
                dist[u] = dist[w] + 1;
                queue.push_back(u);
            }
        }
    }
    dist.into_iter().filter(|&d| d != usize::MAX).max().unwrap_or(0)
}

#[test]
fn extracted_countermodels_obey_finite_model_bounds() {
    // Size bound from the modality count k: depth <= k and the world count
    // within k^(k+1). For k <= 1 the printed size bound is below the two
    // worlds any witnessed falsification of a box needs, so the bound is
    // read as max(k^(k+1), k+1).
    let corpus = common::formula_corpus(0xFB, 150, 9);
    let limits = Limits::default();
    for f in &corpus {
        let metrics = f.modal_metrics();
        let k = metrics.count;
        if let Ok(ProveOutcome::Invalid { model, .. }) = prove_valid(f, &limits) {
            let bound = (k as u64).pow(k as u32 + 1).max(k as u64 + 1).max(1);
            assert!(
                (model.worlds().len() as u64) <= bound,
                "{f}: {} worlds exceeds {bound}",
                model.worlds().len()
            );
            assert!(
                relational_depth(&model) <= k.max(0),
                "{f}: depth {} exceeds {k}",
                relational_depth(&model)
            );
        }
    }
}

#[test]
fn extraction_realises_every_branch_constraint() {
    let corpus = common::formula_corpus(0xEA, 120, 8);
    let limits = Limits::default();
    for f in &corpus {
        for goal in [
            Goal::Falsify1(f.desugar()),
            Goal::Falsify2(f.desugar()),
            Goal::Satisfy(f.desugar()),
        ] {
            let mut t = Tableau::new(goal);
            if let Ok(SaturateOutcome::CompleteOpen(branch)) =
                t.saturate(&limits, "props", None)
            {
                let (model, _root, stats) = t
                    .extract_model_with_stats(&branch)
                    .expect("extraction self-check holds");
                t.check_realisation(&branch, &model)
                    .expect("re-asserted realisation");
                // Rank sanity: the number of ranked classes stays within
                // twice the atomic structures times the worlds.
                assert!(
                    stats.class_count <= 2 * stats.atomic_structures.max(1) * stats.worlds.max(1),
                    "{f}: {stats:?}"
                );
            }
        }
    }
}

#[test]
fn star_law_and_involution_on_random_crisp_models() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x57A7);
    for round in 0..120 {
        let m = common::random_model(&mut rng, 4, &["p", "q"], true);
        let s = star(&m).expect("crisp relations");
        let f = common::gen_formula(&mut rng, 7);
        for w in 0..m.worlds().len() {
            let v = eval_at(&m, w, &f);
            let sv = eval_at(&s, w, &f);
            assert_eq!(sv, v.conflate(), "round {round}: {f} at w{w}");
        }
        let back = star(&s).expect("still crisp");
        assert_eq!(back, m, "star is an involution");
    }
}

#[test]
fn split_law_on_random_models() {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5B17);
    for round in 0..120 {
        let m = common::random_model(&mut rng, 4, &["p", "q"], false);
        let s = split(&m);
        let f = common::gen_formula(&mut rng, 7);
        for w in 0..m.worlds().len() {
            let expect = eval_at(&m, w, &f);
            assert!(!s.classes[w].is_empty(), "descriptor classes are nonempty");
            for &i in &s.classes[w] {
                assert_eq!(
                    eval_at(&s.model, i, &f),
                    expect,
                    "round {round}: {f} at descriptor {} of w{w}",
                    s.model.worlds()[i]
                );
            }
        }
        // No split world is entered by both relations.
        let n = s.model.worlds().len();
        for a in 0..n {
            for b in 0..n {
                assert!(
                    s.model.rel(Sign::Plus, a, b).is_zero()
                        || s.model.rel(Sign::Minus, a, b).is_zero()
                );
            }
        }
    }
}

#[test]
fn gneg_free_conservativity_step_on_crisp_models() {
    // For formulas without the De Morgan negation, positive falsity support
    // turns into truth-support below 1 on the star model.
    let mut rng = ChaCha8Rng::seed_from_u64(0xC0);
    let mut checked = 0;
    while checked < 80 {
        let f = common::gen_formula(&mut rng, 7);
        if f.to_string().contains('!') {
            continue;
        }
        let m = common::random_model(&mut rng, 3, &["p", "q"], true);
        let s = star(&m).unwrap();
        for w in 0..m.worlds().len() {
            let v = eval_at(&m, w, &f);
            if !v.neg.is_zero() {
                assert!(!eval_at(&s, w, &f).pos.is_one(), "{f} at w{w}");
            }
        }
        checked += 1;
    }
}

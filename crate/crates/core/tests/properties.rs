mod common;

use horizon_eval::assignment::{solve_bruteforce, solve_optimal, BipartiteCostGraph, Edge};
use horizon_eval::baselines::{apportion, fit, predict_most_popular, Baseline, BaselineKind};
use horizon_eval::diagnostics::{entropy, entropy_report};
use horizon_eval::domain::{enumerate_eval_points, slice_horizon_events, Event, PredictedEvent, PredictionSet};
use horizon_eval::ingest::{read_dataset, read_predictions, write_dataset, write_predictions};
use horizon_eval::next_event::next_event_metrics;
use horizon_eval::otd::{otd, otd_bruteforce, OtdInput};
use horizon_eval::tmap::tmap;
use proptest::collection::vec;
use proptest::option;
use proptest::prelude::*;

fn graph_strategy(weights: BoxedStrategy<f64>) -> impl Strategy<Value = BipartiteCostGraph> {
    (0..=6usize, 0..=6usize)
        .prop_flat_map(move |(nl, nr)| (Just(nl), Just(nr), vec(option::weighted(0.5, weights.clone()), nl * nr)))
        .prop_map(|(nl, nr, cells)| {
            let edges = cells
                .into_iter()
                .enumerate()
                .filter_map(|(k, w)| {
                    w.map(|weight| Edge {
                        left: k / nr.max(1),
                        right: k % nr.max(1),
                        weight,
                    })
                })
                .collect();
            BipartiteCostGraph::from_edges(nl, nr, edges).unwrap()
        })
}

fn events_strategy(max: usize, num_classes: usize) -> impl Strategy<Value = Vec<Event>> {
    vec((0.0..10.0f64, 0..num_classes), 0..=max).prop_map(|mut v| {
        v.sort_by(|a, b| a.0.total_cmp(&b.0));
        v.into_iter().map(|(t, l)| Event::new(t, l)).collect()
    })
}

fn otd_input<'a>(pred: &'a [Event], gt: &'a [Event], c_ins: f64, c_del: f64) -> OtdInput<'a> {
    OtdInput {
        pred,
        gt,
        insert_cost: c_ins,
        delete_cost: c_del,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn assignment_matches_exhaustive_search(g in graph_strategy((-10.0..10.0f64).boxed())) {
        let m = solve_optimal(&g);
        prop_assert!(m.is_valid_for(&g));
        let (size, weight) = solve_bruteforce(&g).unwrap();
        prop_assert_eq!(m.len(), size);
        prop_assert!((g.weight_of(&m).unwrap() - weight).abs() < 1e-9);
    }

    #[test]
    fn assignment_with_tied_weights(g in graph_strategy(prop_oneof![Just(-1.0), Just(-2.0), Just(0.0)].boxed())) {
        let m = solve_optimal(&g);
        prop_assert!(m.is_valid_for(&g));
        let (size, weight) = solve_bruteforce(&g).unwrap();
        prop_assert_eq!(m.len(), size);
        prop_assert!((g.weight_of(&m).unwrap() - weight).abs() < 1e-9);
    }

    #[test]
    fn assignment_affine_weights(g in graph_strategy((-10.0..10.0f64).boxed()), a in 0.1..10.0f64, b in -5.0..5.0f64) {
        let m = solve_optimal(&g);
        let edges = g.edges().iter().map(|e| Edge { weight: a * e.weight + b, ..*e }).collect();
        let h = BipartiteCostGraph::from_edges(g.n_left(), g.n_right(), edges).unwrap();
        let mh = solve_optimal(&h);
        prop_assert_eq!(m.len(), mh.len());
        let expected = a * g.weight_of(&m).unwrap() + b * m.len() as f64;
        prop_assert!((h.weight_of(&mh).unwrap() - expected).abs() < 1e-8);
    }

    #[test]
    fn otd_axioms(
        a in events_strategy(6, 3),
        b in events_strategy(6, 3),
        c in 0.0..4.0f64,
        extra in 0.0..2.0f64,
    ) {
        let ab = otd(&otd_input(&a, &b, c, c)).cost;
        prop_assert!(ab >= 0.0);
        prop_assert!((ab - otd_bruteforce(&otd_input(&a, &b, c, c)).unwrap()).abs() < 1e-9);
        prop_assert_eq!(otd(&otd_input(&a, &a, c, c)).cost, 0.0);
        prop_assert_eq!(ab, otd(&otd_input(&b, &a, c, c)).cost);
        let costlier = otd(&otd_input(&a, &b, c, c + extra)).cost;
        prop_assert!(costlier >= ab - 1e-12);
    }

    #[test]
    fn horizon_slices_are_bounded_and_idempotent(
        gt in events_strategy(12, 2),
        pred in vec(0.0..10.0f64, 0..12),
        eval_time in 0.0..10.0f64,
        horizon in 0.5..5.0f64,
    ) {
        let mut times = pred.into_iter().filter(|&t| t >= eval_time).collect::<Vec<_>>();
        times.sort_by(f64::total_cmp);
        let set = PredictionSet::new("s", eval_time, times.iter().map(|&t| PredictedEvent::new(t, vec![1.0, 0.0])).collect()).unwrap();
        let s = slice_horizon_events(&gt, &set, horizon);
        for t in s.gt_window.iter().map(|e| e.t).chain(s.pred_window.iter().map(|p| p.t)) {
            prop_assert!(eval_time < t && t <= eval_time + horizon);
        }
        let again_set = PredictionSet { events: s.pred_window.to_vec(), ..set.clone() };
        let again = slice_horizon_events(s.gt_window, &again_set, horizon);
        prop_assert_eq!(again.gt_window, s.gt_window);
        prop_assert_eq!(again.pred_window, s.pred_window);
    }

    #[test]
    fn eval_points_increase(seed in any::<u64>(), stride in 1..5usize, min_history in 1..5usize) {
        let mut rng = common::rng(seed);
        let gts = common::random_sequences(&mut rng, 1, 20, 3);
        let mut cfg = common::config(3, 3.0, 1.0);
        cfg.eval_stride = stride;
        cfg.min_history = min_history;
        let points = enumerate_eval_points(&gts[0], &cfg);
        prop_assert_eq!(points.first().map(|p| p.index), Some(min_history));
        for w in points.windows(2) {
            prop_assert!(w[1].index > w[0].index);
            prop_assert!(w[1].eval_time >= w[0].eval_time);
        }
    }

    #[test]
    fn tmap_bounded_and_order_invariant(seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        let data = common::small_dataset(&mut rng, 12, 3, 6, seed % 2 == 0);
        let Ok(report) = tmap(&data.instances(), &data.cfg) else { return Ok(()) };
        for ap in report.per_class_ap.iter().flatten() {
            prop_assert!((0.0..=1.0).contains(ap));
        }
        prop_assert!((0.0..=1.0).contains(&report.macro_ap));
        prop_assert!((0.0..=1.0 + 1e-12).contains(&report.weighted));

        let mut shuffled = common::Dataset { gts: data.gts.clone(), preds: data.preds.clone(), cfg: data.cfg.clone() };
        shuffled.gts.reverse();
        shuffled.preds.rotate_left(5);
        let permuted = tmap(&shuffled.instances(), &shuffled.cfg).unwrap();
        prop_assert_eq!(report, permuted);
    }

    #[test]
    fn perfect_predictions_score_one(seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        let cfg = common::config(4, 3.0, 0.5);
        let gts = common::random_sequences(&mut rng, 5, 15, 4);
        let preds: Vec<PredictionSet> = gts
            .iter()
            .flat_map(|g| {
                enumerate_eval_points(g, &cfg).into_iter().map(move |p| {
                    let events = g.events[p.index + 1..]
                        .iter()
                        .map(|e| PredictedEvent::one_hot(e.t, e.label, 4))
                        .collect();
                    PredictionSet::new(g.seq_id.clone(), p.eval_time, events).unwrap()
                })
            })
            .collect();
        let data = common::Dataset { gts, preds, cfg };
        let report = tmap(&data.instances(), &data.cfg).unwrap();
        prop_assert_eq!(report.macro_ap, 1.0);
        prop_assert!((report.weighted - 1.0).abs() < 1e-12);
    }

    #[test]
    fn next_event_invariances(
        raw in vec((0.0..10.0f64, vec(0.0..1.0f64, 3), 0.0..10.0f64, 0..3usize), 1..30),
        a in 0.1..10.0f64,
        b in -5.0..5.0f64,
        shift in -100.0..100.0f64,
    ) {
        let preds: Vec<PredictedEvent> = raw.iter().map(|(t, s, _, _)| PredictedEvent::new(*t, s.clone())).collect();
        let truth: Vec<Event> = raw.iter().map(|&(_, _, t, l)| Event::new(t, l)).collect();
        let pairs: Vec<_> = preds.iter().zip(&truth).collect();
        let base = next_event_metrics(&pairs, 3).unwrap();

        let scaled: Vec<PredictedEvent> = preds.iter().map(|p| PredictedEvent::new(p.t, p.scores.iter().map(|s| a * s + b).collect())).collect();
        let pairs_scaled: Vec<_> = scaled.iter().zip(&truth).collect();
        prop_assert_eq!(next_event_metrics(&pairs_scaled, 3).unwrap().accuracy, base.accuracy);

        let moved_p: Vec<PredictedEvent> = preds.iter().map(|p| PredictedEvent::new(p.t + shift, p.scores.clone())).collect();
        let moved_t: Vec<Event> = truth.iter().map(|e| Event::new(e.t + shift, e.label)).collect();
        let pairs_moved: Vec<_> = moved_p.iter().zip(&moved_t).collect();
        prop_assert!((next_event_metrics(&pairs_moved, 3).unwrap().time_mae - base.time_mae).abs() < 1e-9);
    }

    #[test]
    fn most_popular_apportionment(counts in vec(0..50usize, 1..8), k in 0..40usize) {
        let slots = apportion(&counts, k);
        prop_assert_eq!(slots.iter().sum::<usize>(), k);
        let total: usize = counts.iter().sum();
        if total > 0 {
            for (c, s) in counts.iter().zip(&slots) {
                prop_assert!((*s as f64 - k as f64 * *c as f64 / total as f64).abs() < 1.0);
            }
        }
    }

    #[test]
    fn baselines_never_see_the_future(seed in any::<u64>(), cut in 1..19usize, kind in 0..5usize) {
        let mut rng = common::rng(seed);
        let gts = common::random_sequences(&mut rng, 2, 20, 3);
        let cfg = common::config(3, 4.0, 1.0);
        let baseline = Baseline::new(BaselineKind::ALL[kind], 5);
        let seq = &gts[0];
        let history = &seq.events[..=cut];
        let mut altered = seq.events.clone();
        for e in altered[cut + 1..].iter_mut() {
            e.label = (e.label + 1) % 3;
        }
        let t = seq.events[cut].t;
        let a = baseline.predict(history, "s", t, &cfg).unwrap();
        let b = baseline.predict(&altered[..=cut], "s", t, &cfg).unwrap();
        prop_assert_eq!(&a, &b);
        prop_assert_eq!(a, baseline.predict(history, "s", t, &cfg).unwrap());
        let stats = fit(history, 3).unwrap();
        prop_assert_eq!(predict_most_popular(&stats, "s", t, 7).events.len(), 7);
    }

    #[test]
    fn entropy_bounds_and_window_permutation(seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        let data = common::noisy_dataset(&mut rng, 4, 12, common::config(5, 3.0, 1.0));
        let inst = data.instances();
        let mut windows: Vec<_> = inst.iter().map(|i| i.horizon(&data.cfg)).collect();
        let Ok(r) = entropy_report(&windows, 5) else { return Ok(()) };
        for h in [r.predicted_entropy, r.gt_entropy] {
            prop_assert!((0.0..=5f64.ln() + 1e-12).contains(&h));
        }
        windows.reverse();
        prop_assert_eq!(entropy_report(&windows, 5).unwrap(), r);
        prop_assert_eq!(entropy(&[0, 0, 0]), 0.0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn files_round_trip(seed in any::<u64>()) {
        let mut rng = common::rng(seed);
        let data = common::noisy_dataset(&mut rng, 5, 15, common::config(4, 3.0, 1.0));
        let dir = tempfile::tempdir().unwrap();
        let (g, p) = (dir.path().join("gt.jsonl"), dir.path().join("pred.jsonl"));
        write_dataset(&g, &data.gts).unwrap();
        write_predictions(&p, &data.preds).unwrap();
        let back = common::Dataset {
            gts: read_dataset(&g, 4).unwrap(),
            preds: read_predictions(&p, 4).unwrap(),
            cfg: data.cfg.clone(),
        };
        prop_assert_eq!(&back.gts, &data.gts);
        prop_assert_eq!(&back.preds, &data.preds);
        let a = tmap(&data.instances(), &data.cfg).unwrap();
        let b = tmap(&back.instances(), &back.cfg).unwrap();
        prop_assert!((a.macro_ap - b.macro_ap).abs() < 1e-12);
    }
}

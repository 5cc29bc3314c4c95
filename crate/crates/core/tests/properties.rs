use proptest::prelude::*;

use goodhart_arena::analysis::{detect_divergence, Estimate, SweepPoint, SweepResult};
use goodhart_arena::engine::{retained_count, RngStream, SelectionOperator};
use goodhart_arena::harness::{parse_config, ExperimentConfig};
use goodhart_arena::scenarios::{
    shares, threshold_goal, ContentionConfig, RegressionalConfig, ScenarioDetails, ScenarioId, ScenarioSpec,
    ThresholdConfig,
};
use goodhart_arena::stats::{bootstrap_mean_ci, mean, pearson};

fn scores() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1e6f64..1e6, 1..40)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn quantilizer_keeping_one_is_maximizer(xs in scores(), seed in any::<u64>()) {
        let n = xs.len();
        let q = 1.0 / n as f64;
        prop_assert_eq!(retained_count(q, n), 1);
        let quant = SelectionOperator::quantilizer(n, q).unwrap();
        let max = SelectionOperator::maximizer(n).unwrap();
        let a = quant.choose(&xs, &mut RngStream::new(seed, 1)).unwrap();
        let b = max.choose(&xs, &mut RngStream::new(seed, 2)).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn retained_count_in_range(q in 0.0001f64..=1.0, len in 1usize..10_000) {
        let k = retained_count(q, len);
        prop_assert!(k >= 1 && k <= len);
        prop_assert!(k as f64 >= q * len as f64 - 1e-6);
    }

    #[test]
    fn runs_are_pure_functions_of_seed(seed in any::<u64>(), rep in 0u64..1000, sd in 0.0f64..3.0, n in 1usize..20) {
        let spec = ScenarioSpec::S0(RegressionalConfig { noise_sd: sd, rounds: 4 });
        let op = SelectionOperator::maximizer(n).unwrap();
        prop_assert_eq!(spec.run(Some(&op), seed, rep).unwrap(), spec.run(Some(&op), seed, rep).unwrap());
    }

    #[test]
    fn pearson_is_affine_invariant(
        pts in prop::collection::vec((-100f64..100.0, -100f64..100.0), 3..60),
        a in 0.1f64..10.0, b in -50f64..50.0, c in 0.1f64..10.0, d in -50f64..50.0,
    ) {
        let xs: Vec<f64> = pts.iter().map(|p| p.0).collect();
        let ys: Vec<f64> = pts.iter().map(|p| p.1).collect();
        let xt: Vec<f64> = xs.iter().map(|x| a * x + b).collect();
        let yt: Vec<f64> = ys.iter().map(|y| c * y + d).collect();
        if let (Some(r), Some(rt)) = (pearson(&xs, &ys), pearson(&xt, &yt)) {
            prop_assert!((r - rt).abs() < 1e-9, "{} vs {}", r, rt);
            let flipped: Vec<f64> = yt.iter().map(|y| -y).collect();
            prop_assert!((pearson(&xt, &flipped).unwrap() + r).abs() < 1e-9);
        }
    }

    #[test]
    fn shares_sum_to_one(bids in prop::collection::vec(0f64..100.0, 2..12)) {
        let s = shares(&bids);
        let total: f64 = s.iter().sum();
        prop_assert!((total - 1.0).abs() <= 2f64.powi(-40));
        prop_assert!(s.iter().all(|x| (0.0..=1.0).contains(x)));
    }

    #[test]
    fn equilibrium_shares_sum_to_one_and_welfare_is_bounded(f0 in 0.5f64..20.0, f1 in 0.5f64..20.0, f2 in 0.0f64..20.0) {
        let spec = ScenarioSpec::S2(ContentionConfig { funds: vec![f0, f1, f2], bid_grid_resolution: 0.5, ..Default::default() });
        let ScenarioDetails::Contention(r) = spec.run(None, 0, 0).unwrap().details else { unreachable!() };
        let total: f64 = r.equilibrium.shares.iter().sum();
        prop_assert!((total - 1.0).abs() <= 2f64.powi(-40));
        prop_assert!(r.coordinated.welfare >= r.equilibrium.welfare - 1e-12);
    }

    #[test]
    fn threshold_goal_takes_the_right_branch(
        k in 2usize..8, offset in -5f64..5.0, threshold in 0.5f64..20.0, step in 0.05f64..1.0, seed in any::<u64>(),
    ) {
        let cfg = ThresholdConfig { agent_count: k, offset, threshold, step, max_steps: 40 };
        let op = SelectionOperator::quantilizer(4, 0.5).unwrap();
        let t = ScenarioSpec::S1b(cfg).run(Some(&op), seed, 0).unwrap();
        for s in 0..=40u64 {
            let rows: Vec<_> = t.steps.iter().filter(|r| r.step == s).collect();
            prop_assert_eq!(rows.len(), k);
            let total = rows.iter().fold(0.0, |acc, r| acc + r.metric);
            let expected = threshold_goal(total, offset, threshold);
            prop_assert_eq!(expected, if total <= threshold { offset + total } else { offset - total });
            for r in rows {
                prop_assert_eq!(r.goal, expected);
            }
        }
    }

    #[test]
    fn bootstrap_ci_contains_mean(xs in prop::collection::vec(-1e3f64..1e3, 2..200), seed in any::<u64>()) {
        let (lo, hi) = bootstrap_mean_ci(&xs, 200, 0.95, &mut RngStream::new(seed, 0));
        let m = mean(&xs);
        prop_assert!(lo <= m && m <= hi);
    }

    #[test]
    fn non_decreasing_goal_never_diverges(goals in prop::collection::vec(0f64..10.0, 2..10), sd in 0.001f64..2.0) {
        let mut goals = goals;
        goals.sort_by(f64::total_cmp);
        let est = |m: f64| Estimate { mean: m, sd, ci_lower: m, ci_upper: m };
        let points = goals
            .iter()
            .enumerate()
            .map(|(i, &g)| SweepPoint {
                pressure: i + 1,
                replicates: 100,
                metric: est(g + i as f64),
                goal: est(g),
                gap: est(i as f64),
            })
            .collect();
        let sweep = SweepResult { scenario: ScenarioId::S0, master_seed: 0, grid: (1..=goals.len()).collect(), points };
        prop_assert!(!detect_divergence(&sweep).unwrap().found);
    }

    #[test]
    fn config_round_trips(
        sd in 0f64..5.0, rounds in 1usize..100, seed in any::<u64>(), reps in 1usize..1000,
        funds in prop::collection::vec(0.1f64..50.0, 2..5),
    ) {
        let specs = [
            ScenarioSpec::S0(RegressionalConfig { noise_sd: sd, rounds }),
            ScenarioSpec::S2(ContentionConfig { funds, ..Default::default() }),
        ];
        for spec in specs {
            let mut cfg = ExperimentConfig::new(spec);
            cfg.master_seed = seed;
            cfg.replicates = reps;
            let back = parse_config(&cfg.to_json()).unwrap();
            prop_assert_eq!(back.canonical_json(), cfg.canonical_json());
            prop_assert_eq!(back.digest(), cfg.digest());
        }
    }
}

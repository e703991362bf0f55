use gbnlearn::estimate::linalg::{coordinate_median, median};
use gbnlearn::estimate::{batch_least_squares, least_squares_node, Aggregator};
use gbnlearn::kl::pinsker_tv_bound;
use gbnlearn::{kl_divergence, random_er_dag, random_gbn, random_tree_dag, Dag, GaussianBayesNet, VarianceSpec};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn arb_dag() -> impl Strategy<Value = Dag> {
    (1usize..25, 0.1f64..1.0, any::<u64>(), any::<bool>()).prop_map(|(n, frac, seed, tree)| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        if tree && n >= 2 {
            random_tree_dag(n, &mut rng).unwrap()
        } else {
            let d = (frac * n as f64).max(0.1);
            random_er_dag(n, d, &mut rng).unwrap()
        }
    })
}

fn arb_pair() -> impl Strategy<Value = (GaussianBayesNet, GaussianBayesNet)> {
    (arb_dag(), any::<u64>()).prop_map(|(dag, seed)| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let spec = VarianceSpec::UniformRange { lo: 0.2, hi: 3.0 };
        let p = random_gbn(&dag, (0.2, 1.5), &spec, &mut rng).unwrap();
        let q = random_gbn(&dag, (0.2, 1.5), &spec, &mut rng).unwrap();
        (p, q)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn dag_rebuilds_from_its_edges(dag in arb_dag()) {
        let rebuilt = Dag::new(dag.n(), &dag.edges()).unwrap();
        prop_assert_eq!(&rebuilt, &dag);
        prop_assert_eq!(Dag::from_text(&dag.to_text()).unwrap(), dag);
    }

    #[test]
    fn topological_order_is_a_linear_extension(dag in arb_dag()) {
        let mut pos = vec![usize::MAX; dag.n()];
        for (k, &i) in dag.topological_order().iter().enumerate() {
            pos[i] = k;
        }
        prop_assert!(pos.iter().all(|&p| p < dag.n()));
        for (p, c) in dag.edges() {
            prop_assert!(pos[p] < pos[c]);
        }
    }

    #[test]
    fn random_trees_are_polytrees(n in 2usize..60, seed in any::<u64>()) {
        let dag = random_tree_dag(n, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        prop_assert!(dag.is_polytree());
        prop_assert_eq!(dag.edge_count(), n - 1);
        prop_assert!(dag.max_in_degree() <= 1);
    }

    #[test]
    fn self_divergence_is_zero((p, _q) in arb_pair()) {
        let r = kl_divergence(&p, &p).unwrap();
        prop_assert_eq!(r.kl_total, 0.0);
        prop_assert_eq!(r.tv_upper, 0.0);
    }

    #[test]
    fn divergence_is_nonnegative_and_additive((p, q) in arb_pair()) {
        let r = kl_divergence(&p, &q).unwrap();
        prop_assert!(r.kl_total >= -1e-12);
        let sum: f64 = r.per_node_dcp.iter().sum();
        prop_assert!((sum - r.kl_total).abs() <= 1e-12);
        prop_assert_eq!(r.tv_upper, pinsker_tv_bound(r.kl_total));
        prop_assert_eq!(r.tv_upper, (r.kl_total.max(0.0) / 2.0).sqrt().min(1.0));
    }

    #[test]
    fn model_text_round_trips((p, _q) in arb_pair()) {
        prop_assert_eq!(GaussianBayesNet::from_text(&p.to_text()).unwrap(), p);
    }

    #[test]
    fn median_ignores_order(mut values in prop::collection::vec(-1e6f64..1e6, 1..60), seed in any::<u64>()) {
        let before = median(&values);
        use rand::seq::SliceRandom;
        values.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        prop_assert_eq!(median(&values).to_bits(), before.to_bits());
    }

    #[test]
    fn even_median_averages_central_pair(values in prop::collection::vec(-1e6f64..1e6, 1..30)) {
        let mut doubled = values.clone();
        doubled.extend(values.iter().map(|v| v + 1.0));
        let mut sorted = doubled.clone();
        sorted.sort_by(f64::total_cmp);
        let h = sorted.len() / 2;
        prop_assert_eq!(median(&doubled), (sorted[h - 1] + sorted[h]) / 2.0);
    }

    #[test]
    fn coordinate_median_ignores_batch_order(rows in prop::collection::vec(prop::collection::vec(-10f64..10.0, 3), 1..20)) {
        let vs: Vec<DVector<f64>> = rows.iter().map(|r| DVector::from_vec(r.clone())).collect();
        let mut rev = vs.clone();
        rev.reverse();
        prop_assert_eq!(coordinate_median(&vs), coordinate_median(&rev));
    }

    #[test]
    fn one_batch_is_least_squares(seed in any::<u64>(), p in 1usize..5, extra in 1usize..30) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let k = p + extra;
        let x = DMatrix::from_fn(k, p, |_, _| rand::Rng::random_range(&mut rng, -3.0..3.0));
        let y = DVector::from_fn(k, |_, _| rand::Rng::random_range(&mut rng, -3.0..3.0));
        let ls = least_squares_node(&x, &y).unwrap();
        for agg in [Aggregator::Mean, Aggregator::CoordinateMedian] {
            let b = batch_least_squares(&x, &y, k, agg).unwrap();
            prop_assert_eq!(&b, &ls);
        }
    }
}

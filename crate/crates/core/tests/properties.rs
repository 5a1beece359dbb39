//! Randomized invariants.

mod common;

use approx::assert_relative_eq;
use common::*;
use mrdpg::fit::fit_multi_rdpg_psd;
use mrdpg::graph::write_edge_list;
use mrdpg::inference::{p_value, permute_graphs, statistic_from_psd};
use mrdpg::linalg::orthonormality_error;
use mrdpg::sim::{self, SimulationSpec};
use mrdpg::{
    adjacency_error, match_edge_counts, positive_part, read_edge_list, subspace_distance, EdgeListFormat, FitOptions,
    LatentModel, Link, PValueRule,
};
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

fn rotate(u: &DMatrix<f64>, angle: f64) -> DMatrix<f64> {
    let d = u.ncols();
    let mut q = DMatrix::identity(d, d);
    if d >= 2 {
        let (s, c) = angle.sin_cos();
        q[(0, 0)] = c;
        q[(0, 1)] = -s;
        q[(1, 0)] = s;
        q[(1, 1)] = c;
    }
    u * q
}

fn permute_columns(u: &DMatrix<f64>, order: &[usize], flips: &[bool]) -> DMatrix<f64> {
    let mut out = u.select_columns(order.iter());
    for (j, &f) in flips.iter().enumerate() {
        if f {
            out.column_mut(j).neg_mut();
        }
    }
    out
}

fn order_for(d: usize, shift: usize) -> Vec<usize> {
    (0..d).map(|j| (j + shift) % d).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn positive_part_is_symmetric_psd_and_idempotent(n in 2usize..14, p in 0.05f64..0.95, seed in any::<u64>()) {
        let g = random_graph(n, p, seed);
        let plus = positive_part(&g).unwrap();
        let m = plus.as_matrix();
        prop_assert_eq!(m, &m.transpose());
        let values = jacobi_values_desc(m);
        prop_assert!(values[n - 1] > -1e-9);
        let again = mrdpg::graph::positive_part_symmetric(m).unwrap();
        prop_assert!((again.as_matrix() - m).amax() < 1e-10);
    }

    #[test]
    fn fit_output_invariants(n in 3usize..14, k in 1usize..5, d_raw in 1usize..5, seed in any::<u64>()) {
        let d = d_raw.min(n);
        let psd = random_psd_graphs(n, k, seed);
        let fit = fit_multi_rdpg_psd(&psd, &FitOptions::new(d)).unwrap();
        let u = fit.model.u();
        prop_assert!(orthonormality_error(u) < 1e-8);
        prop_assert!(fit.model.lambdas().iter().all(|l| l.iter().all(|&v| v >= 0.0)));
        for w in fit.objective_trace.windows(2) {
            prop_assert!(w[1] <= w[0] + 1e-10, "trace rose from {} to {}", w[0], w[1]);
        }
        let totals: Vec<f64> = (0..d).map(|j| fit.model.lambdas().iter().map(|l| l[j]).sum()).collect();
        prop_assert!(totals.windows(2).all(|w| w[0] >= w[1]));
        for col in u.column_iter() {
            let peak = col.amax();
            let lead = col.iter().find(|v| v.abs() >= peak * (1.0 - 1e-9)).unwrap();
            prop_assert!(*lead > 0.0);
        }
        let literal = brute_objective(&psd, u, fit.model.lambdas());
        prop_assert!((literal - fit.objective()).abs() < 1e-8 * (1.0 + literal));
    }

    #[test]
    fn subspace_distance_invariances(n in 3usize..10, d_raw in 1usize..4, shift in 0usize..3, flip in any::<[bool; 3]>(), angle in 0.0f64..std::f64::consts::TAU, seed in any::<u64>()) {
        let d = d_raw.min(n);
        let mut r = rng(seed);
        let u = random_orthonormal(n, d, &mut r);
        let v = random_orthonormal(n, d, &mut r);
        let w = random_orthonormal(n, d, &mut r);
        let duv = subspace_distance(&u, &v).unwrap();
        prop_assert!((0.0..=1.0).contains(&duv));
        prop_assert!((duv - subspace_distance(&v, &u).unwrap()).abs() < 1e-12);
        let u2 = permute_columns(&u, &order_for(d, shift), &flip[..d]);
        prop_assert!((subspace_distance(&u2, &v).unwrap() - duv).abs() < 1e-10);
        prop_assert!(subspace_distance(&u, &rotate(&u, angle)).unwrap() < 1e-8);
        let duw = subspace_distance(&u, &w).unwrap();
        let dwv = subspace_distance(&w, &v).unwrap();
        prop_assert!(duv <= duw + dwv + 1e-12);
    }

    #[test]
    fn adjacency_error_ignores_column_relabeling(shift in 0usize..3, flip in any::<[bool; 3]>(), seed in any::<u64>()) {
        let mut r = rng(seed);
        let truth = LatentModel::new(random_orthonormal(8, 3, &mut r), random_weights(3, 2, &mut r), Link::Clamp01).unwrap();
        let u = random_orthonormal(8, 3, &mut r);
        let lambdas = random_weights(3, 2, &mut r);
        let est = LatentModel::new(u.clone(), lambdas.clone(), Link::Identity).unwrap();
        let order = order_for(3, shift);
        let relabeled = LatentModel::new(
            permute_columns(&u, &order, &flip),
            lambdas.iter().map(|l| DVector::from_iterator(3, order.iter().map(|&j| l[j]))).collect(),
            Link::Identity,
        ).unwrap();
        assert_relative_eq!(
            adjacency_error(&truth, &est).unwrap(),
            adjacency_error(&truth, &relabeled).unwrap(),
            max_relative = 1e-10
        );
    }

    #[test]
    fn edge_list_round_trip(n in 1usize..30, p in 0.0f64..1.0, seed in any::<u64>()) {
        let g = random_graph(n, p, seed);
        let mut buf = Vec::new();
        write_edge_list(&g, &mut buf).unwrap();
        let back = read_edge_list(buf.as_slice(), EdgeListFormat::default()).unwrap();
        prop_assert!(back.warnings.is_empty());
        prop_assert_eq!(back.list.to_adjacency(), g);
    }

    #[test]
    fn permutation_preserves_pair_multisets(n in 2usize..12, k in 2usize..5, seed in any::<u64>()) {
        let graphs: Vec<_> = (0..k as u64).map(|g| random_graph(n, 0.5, seed.wrapping_add(g))).collect();
        let permuted = permute_graphs(&graphs, seed).unwrap();
        let sum = |gs: &[mrdpg::AdjacencyMatrix]| gs.iter().fold(DMatrix::zeros(n, n), |acc, g| acc + g.as_matrix());
        prop_assert_eq!(sum(&graphs), sum(&permuted));
        for g in &permuted {
            prop_assert!((0..n).all(|i| !g.has_edge(i, i)));
        }
    }

    #[test]
    fn matched_counts_are_equal_subsets(n in 3usize..15, seed in any::<u64>()) {
        let graphs = vec![random_graph(n, 0.7, seed), random_graph(n, 0.3, seed ^ 1), random_graph(n, 0.5, seed ^ 2)];
        let matched = match_edge_counts(&graphs, seed).unwrap();
        let target = graphs.iter().map(|g| g.edge_count()).min().unwrap();
        for (orig, m) in graphs.iter().zip(&matched) {
            prop_assert_eq!(m.edge_count(), target);
            prop_assert!(m.edges().all(|(i, j)| orig.has_edge(i, j)));
        }
    }

    #[test]
    fn statistic_is_nonnegative(n in 4usize..14, k in 2usize..4, d_raw in 1usize..4, seed in any::<u64>()) {
        let d = d_raw.min(n);
        let psd = random_psd_graphs(n, k, seed);
        let parts = statistic_from_psd(&psd, &FitOptions::new(d)).unwrap();
        prop_assert!(parts.statistic >= -1e-6, "T = {}", parts.statistic);
    }

    #[test]
    fn p_values_in_unit_interval(observed in -1.0f64..1.0, stats in prop::collection::vec(-1.0f64..1.0, 1..50)) {
        let plain = p_value(observed, &stats, PValueRule::Plain);
        let add_one = p_value(observed, &stats, PValueRule::AddOne);
        prop_assert!((0.0..=1.0).contains(&plain));
        prop_assert!(add_one > 0.0 && add_one <= 1.0);
    }
}

#[test]
fn simulation_independent_of_thread_count() {
    let mut spec = SimulationSpec::new(sim::NULL_TYPE1);
    spec.replicates = 6;
    spec.test_permutations = 20;
    spec.seed = 99;
    let run_with = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| sim::run(&spec).unwrap())
    };
    let one = serde_json::to_string(&run_with(1)).unwrap();
    let three = serde_json::to_string(&run_with(3)).unwrap();
    assert_eq!(one, three);

    let mut est = SimulationSpec::new(sim::SETTING1);
    est.replicates = 4;
    est.k = vec![3];
    let pool = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
    let a = serde_json::to_string(&pool.install(|| sim::run(&est).unwrap())).unwrap();
    let b = serde_json::to_string(&sim::run(&est).unwrap()).unwrap();
    assert_eq!(a, b);
}

mod common;

use common::{random_graph, random_model};
use memf_core::ishikawa::graph_size;
use memf_core::memf_block::{build_block_edges, build_blocks, Block};
use memf_core::{
    brute_force_minimize, generate_grid_instance, solve, Dir, EnergyModel, PairCaps, Regularizer, SolveOptions,
    SolveReport, SolverKind, BRUTE_FORCE_CAP,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const FLOW_SOLVERS: [SolverKind; 3] = [SolverKind::Reference, SolverKind::Poly, SolverKind::Block];

fn random_instance(seed: u64, n: usize, l: usize) -> EnergyModel {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let extra = rng.gen_range(0..=n);
    let edges = random_graph(&mut rng, n, extra);
    random_model(&mut rng, n, edges, l, 12)
}

fn check_report(model: &EnergyModel, r: &SolveReport, best: i64) -> Result<(), TestCaseError> {
    prop_assert_eq!(r.energy, best, "{}", r.solver);
    prop_assert_eq!(r.energy, r.flow_total + r.constant);
    prop_assert_eq!(model.evaluate(r.labeling.as_ref().unwrap()).unwrap(), best);
    Ok(())
}

fn without_time(mut r: SolveReport) -> SolveReport {
    r.wall_time_ms = 0.0;
    r
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn solvers_match_brute_force(seed in any::<u64>(), n in 1usize..6, l in 2usize..5) {
        let model = random_instance(seed, n, l);
        let (_, best) = brute_force_minimize(&model, BRUTE_FORCE_CAP).unwrap();
        for kind in FLOW_SOLVERS {
            let r = solve(&model, kind, SolveOptions::default()).unwrap();
            check_report(&model, &r, best)?;
        }
    }

    #[test]
    fn diagnostics_find_no_violations(seed in any::<u64>(), n in 2usize..7, l in 2usize..6) {
        let model = random_instance(seed, n, l);
        for kind in [SolverKind::Poly, SolverKind::Block] {
            let r = solve(&model, kind, SolveOptions::diagnostics()).unwrap();
            let d = r.diagnostics.as_ref().unwrap();
            prop_assert_eq!(d.existence_mismatches, 0, "{}", kind);
            prop_assert_eq!(d.bookkeeping_mismatches, 0, "{}", kind);
            prop_assert!(d.existence_checks > 0);
            if kind == SolverKind::Poly {
                prop_assert_eq!(d.monotonicity_violations, 0);
            }
        }
    }

    #[test]
    fn poly_augmentations_are_bounded(seed in any::<u64>(), side in 2usize..5, l in 2usize..6) {
        let model = generate_grid_instance(side, side, l, Regularizer::Quadratic, 2, 20, seed).unwrap();
        let r = solve(&model, SolverKind::Poly, SolveOptions::default()).unwrap();
        let (nodes, edges) = graph_size(model.num_vertices(), model.edges().len(), l);
        prop_assert!(r.augmentations <= nodes * edges);
    }

    #[test]
    fn blocks_are_maximal_positive_runs(column in prop::collection::vec(0i64..3, 2..10)) {
        let n = column.len() - 1;
        match build_blocks(&column) {
            Err(_) => prop_assert!(column.iter().all(|&c| c > 0)),
            Ok(blocks) => {
                prop_assert_eq!(blocks[0].lo, 1);
                prop_assert_eq!(blocks.last().unwrap().hi, n);
                for w in blocks.windows(2) {
                    prop_assert_eq!(w[0].hi + 1, w[1].lo);
                }
                for b in &blocks {
                    prop_assert!(b.lo <= b.hi);
                    prop_assert!(column[b.lo..b.hi].iter().all(|&c| c > 0));
                    if b.hi < n {
                        prop_assert_eq!(column[b.hi], 0);
                    }
                }
            }
        }
    }

    #[test]
    fn block_arcs_reach_the_lowest_target(seed in any::<u64>(), l in 2usize..7) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = l - 1;
        let col = |rng: &mut ChaCha8Rng| {
            let mut c: Vec<i64> = (0..l).map(|_| rng.gen_range(0..3)).collect();
            c[rng.gen_range(0..l)] = 0;
            c
        };
        let (ci, cj) = (col(&mut rng), col(&mut rng));
        let mut pair = PairCaps::zeros(l);
        for a in 1..=n {
            for b in 1..=n {
                if rng.gen_bool(0.25) {
                    pair.set(Dir::Forward, a, b, 1);
                }
            }
        }
        let (bi, bj) = (build_blocks(&ci).unwrap(), build_blocks(&cj).unwrap());
        let arcs = build_block_edges(&pair, Dir::Forward, &bi, &bj);
        let block_of = |blocks: &[Block], level: usize| blocks.iter().position(|b| b.lo <= level && level <= b.hi).unwrap();
        for (g, b) in bi.iter().enumerate() {
            let expected = (b.lo..=n)
                .flat_map(|a| (1..=n).map(move |m| (a, m)))
                .filter(|&(a, m)| pair.get(Dir::Forward, a, m) > 0)
                .map(|(_, m)| block_of(&bj, m))
                .min();
            prop_assert_eq!(arcs[g], expected);
        }
    }
}

#[test]
fn solves_are_deterministic() {
    let model = generate_grid_instance(6, 5, 5, Regularizer::Huber { delta: 2 }, 2, 30, 11).unwrap();
    for kind in SolverKind::ALL.into_iter().filter(|&k| k != SolverKind::BruteForce) {
        let a = solve(&model, kind, SolveOptions::diagnostics()).unwrap();
        let b = solve(&model, kind, SolveOptions::diagnostics()).unwrap();
        assert_eq!(without_time(a), without_time(b), "{kind}");
    }
}

#[test]
fn storage_is_linear_in_labels() {
    for l in [4, 8, 16] {
        let model = generate_grid_instance(12, 12, l, Regularizer::Quadratic, 1, 20, 3).unwrap();
        let bound = (6 * l * model.edges().len() + 2 * l * model.num_vertices()) as u64;
        let dense = (2 * (l - 1) * (l - 1) * model.edges().len()) as u64;
        for kind in [SolverKind::Poly, SolverKind::Block] {
            let r = solve(&model, kind, SolveOptions::default()).unwrap();
            assert!(r.stored_values_peak <= bound, "{kind} l={l}: {} > {bound}", r.stored_values_peak);
        }
        let r = solve(&model, SolverKind::Reference, SolveOptions::default()).unwrap();
        assert!(r.stored_values_peak >= dense);
    }
}

#[test]
fn degenerate_models() {
    let lone = EnergyModel::new(1, 3, vec![], vec![vec![4, -2, 7]], vec![]).unwrap();
    let two = EnergyModel::new(
        2,
        2,
        vec![(0, 1)],
        vec![vec![0, 0], vec![0, 0]],
        vec![memf_core::PairwiseSpec::Table(vec![0, 0, 0, 0])],
    )
    .unwrap();
    for model in [lone, two] {
        let (_, best) = brute_force_minimize(&model, BRUTE_FORCE_CAP).unwrap();
        for kind in FLOW_SOLVERS {
            let r = solve(&model, kind, SolveOptions::diagnostics()).unwrap();
            assert_eq!(r.energy, best, "{kind}");
            assert_eq!(r.augmentations, 0, "{kind}");
        }
    }
}

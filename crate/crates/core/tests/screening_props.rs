mod common;

use common::*;
use fck::data::{AtomicMatrix, DualWeights, FeatureSet};
use fck::screening::{closure_bound, dedup_atoms, max_normalized_statistic, inclusion_statistic, screen, verify_kkt, PenaltySchedule, PenaltyShape, ScreenConfig, ScreenMode};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone)]
struct Instance {
    a: AtomicMatrix,
    alpha: Vec<f64>,
    tasks: usize,
    schedule: PenaltySchedule,
    mode: ScreenMode,
    max_order: usize,
}

fn build(seed: u64, d: usize, n: usize, mode: ScreenMode, dense: bool, shape_ix: usize, level: f64) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = if dense { random_dense(&mut rng, n, d) } else { random_binary(&mut rng, n, d, 0.45) };
    let tasks = if mode == ScreenMode::Group { rng.gen_range(1..=3) } else { 1 };
    let alpha: Vec<f64> = (0..n * tasks)
        .map(|_| match mode {
            ScreenMode::Nonneg => rng.gen::<f64>(),
            _ => rng.gen::<f64>() * 2.0 - 1.0,
        })
        .collect();
    let shape = match shape_ix {
        0 => PenaltyShape::Flat,
        1 => PenaltyShape::Geometric { base: 1.5 },
        _ => PenaltyShape::SuperGeometric { base: 1.5, exponent: 1.5 },
    };
    Instance { a, alpha, tasks, schedule: PenaltySchedule::new(level, shape), mode, max_order: 20 }
}

fn weights(i: &Instance) -> DualWeights {
    DualWeights::from_alpha(&i.alpha, i.a.n_rows(), i.tasks).unwrap()
}

fn config(i: &Instance) -> ScreenConfig {
    ScreenConfig { max_order: i.max_order, mode: i.mode, ..ScreenConfig::default() }
}

fn mode_strategy() -> impl Strategy<Value = ScreenMode> {
    prop_oneof![Just(ScreenMode::Signed), Just(ScreenMode::Nonneg), Just(ScreenMode::Group)]
}

fn instance_strategy() -> impl Strategy<Value = Instance> {
    (any::<u64>(), 1usize..=12, 1usize..=20, mode_strategy(), any::<bool>(), 0usize..3, 0.2f64..3.0)
        .prop_map(|(seed, d, n, mode, dense, shape, level)| build(seed, d, n, mode, dense, shape, level))
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 100, ..ProptestConfig::default() })]

    #[test]
    fn screen_equals_enumeration(inst in instance_strategy()) {
        let res = screen(&inst.a, &weights(&inst), &inst.schedule, &config(&inst)).unwrap();
        let expect = enumerate_screen(&inst.a, &inst.alpha, inst.tasks, &inst.schedule, inst.mode, inst.max_order);
        let got: Vec<FeatureSet> = res.sets();
        let want: Vec<FeatureSet> = expect.iter().map(|(s, _)| s.clone()).collect();
        prop_assert_eq!(got, want);
        for (e, (_, stat)) in res.emitted.iter().zip(&expect) {
            prop_assert!((e.stat - stat).abs() <= 1e-9 * (1.0 + stat.abs()));
            prop_assert_eq!(e.threshold, inst.schedule.threshold(e.set.order()));
        }
    }

    #[test]
    fn closure_bound_dominates_every_superset(inst in instance_strategy()) {
        let w = weights(&inst);
        let cfg = config(&inst);
        let d = inst.a.n_cols();
        let sets = all_sets(d, d);
        let stats: Vec<f64> = sets
            .iter()
            .map(|u| inclusion_statistic(&inst.a.interaction_column(u).unwrap(), &w, inst.mode).unwrap())
            .collect();
        for u in &sets {
            let bound = closure_bound(&inst.a.interaction_column(u).unwrap(), &w, &cfg).unwrap();
            let pruned = bound <= inst.schedule.threshold(u.order() + 1);
            for (t, &st) in sets.iter().zip(&stats) {
                if t.order() > u.order() && u.is_subset_of(t) {
                    prop_assert!(st <= bound + 1e-12);
                    if pruned {
                        prop_assert!(st <= inst.schedule.threshold(t.order()));
                    }
                }
            }
        }
    }

    #[test]
    fn screen_is_deterministic_and_parallel_safe(inst in instance_strategy()) {
        let w = weights(&inst);
        let cfg = config(&inst);
        let a = screen(&inst.a, &w, &inst.schedule, &cfg).unwrap();
        let b = screen(&inst.a, &w, &inst.schedule, &cfg).unwrap();
        let c = screen(&inst.a, &w, &inst.schedule, &ScreenConfig { parallel: true, ..cfg }).unwrap();
        prop_assert_eq!(&a, &b);
        prop_assert_eq!(a.sets(), c.sets());
        prop_assert_eq!(a.explored_count, c.explored_count);
    }

    #[test]
    fn nonneg_hierarchy_and_explored_bound(seed in any::<u64>(), d in 1usize..=10, n in 1usize..=20, level in 0.2f64..3.0, geo in any::<bool>()) {
        let mut inst = build(seed, d, n, ScreenMode::Nonneg, false, if geo { 1 } else { 2 }, level);
        inst.max_order = d;
        let res = screen(&inst.a, &weights(&inst), &inst.schedule, &config(&inst)).unwrap();
        let emitted: std::collections::HashSet<FeatureSet> = res.sets().into_iter().collect();
        for u in &emitted {
            for k in u.atoms() {
                let rest: Vec<u32> = u.atoms().iter().copied().filter(|a| a != k).collect();
                if !rest.is_empty() {
                    prop_assert!(emitted.contains(&FeatureSet::new(rest).unwrap()));
                }
            }
        }
        let cap: usize = emitted.iter().map(|u| d - u.order()).sum();
        prop_assert!(res.explored_count <= cap);
    }

    #[test]
    fn interaction_columns_match_dense_products(seed in any::<u64>(), d in 1usize..=6, n in 1usize..=15, dense in any::<bool>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = if dense { random_dense(&mut rng, n, d) } else { random_binary(&mut rng, n, d, 0.5) };
        let sets = all_sets(d, d);
        let cols = materialize(&a, &sets);
        for (u, want) in sets.iter().zip(&cols) {
            let got = a.interaction_column(u).unwrap().to_dense(n);
            for (g, w) in got.iter().zip(want) {
                prop_assert!((g - w).abs() < 1e-15);
            }
            for t in &sets {
                if u.is_subset_of(t) {
                    let ct = a.interaction_column(t).unwrap().to_dense(n);
                    prop_assert!(ct.iter().zip(&got).all(|(x, y)| x <= y));
                }
            }
        }
    }

    #[test]
    fn max_normalized_statistic_matches_enumeration(inst in instance_strategy()) {
        let w = weights(&inst);
        let got = max_normalized_statistic(&inst.a, &w, &inst.schedule.shape, &config(&inst)).unwrap();
        let unit = PenaltySchedule::new(0.0, inst.schedule.shape);
        let want = enumerate_screen(&inst.a, &inst.alpha, inst.tasks, &unit, inst.mode, inst.max_order)
            .iter()
            .map(|(s, stat)| stat / inst.schedule.shape.rho(s.order()))
            .fold(0.0, f64::max);
        prop_assert!((got - want).abs() <= 1e-9 * (1.0 + want));
    }

    #[test]
    fn verify_kkt_reports_exactly_the_missing_sets(inst in instance_strategy(), drop in any::<prop::sample::Index>()) {
        let w = weights(&inst);
        let cfg = config(&inst);
        let full = screen(&inst.a, &w, &inst.schedule, &cfg).unwrap().sets();
        prop_assert!(verify_kkt(&inst.a, &w, &inst.schedule, &cfg, &full).unwrap().is_empty());
        if !full.is_empty() {
            let k = drop.index(full.len());
            let mut partial = full.clone();
            let gone = partial.remove(k);
            prop_assert_eq!(verify_kkt(&inst.a, &w, &inst.schedule, &cfg, &partial).unwrap(), vec![gone]);
        }
    }
}

#[test]
fn replicated_column_dedups_to_one() {
    let col: Vec<u32> = vec![0, 2, 3, 7];
    let mut tid = vec![col; 23];
    tid.push(vec![1, 4]);
    let a = AtomicMatrix::from_tidlists(8, tid).unwrap();
    let (reduced, kept) = dedup_atoms(&a, 0.999).unwrap();
    assert_eq!(kept, vec![0, 23]);
    assert_eq!(reduced.n_cols(), 2);
}

use linescan_core::geometry::Vec3;
use linescan_core::localpath::{LocalPath, Viewpoint};
use linescan_core::planner::{
    brute_force_tour, optimal_directions, pso_optimize, pso_optimize_traced, tour_cost, Direction,
    PsoConfig,
};
use proptest::prelude::*;

fn make_paths(ends: &[(f64, f64, f64, f64, f64, f64)]) -> Vec<LocalPath> {
    ends.iter()
        .enumerate()
        .map(|(k, &(ax, ay, az, bx, by, bz))| {
            let a = Vec3::new(ax, ay, az);
            // keep every segment non-degenerate
            let b = a + Vec3::new(bx, by, bz + 1.0);
            let l = (b - a).normalize();
            let vp = |p: Vec3| Viewpoint {
                position: p,
                view_dir: -Vec3::z(),
                motion_dir: l,
                target: p - Vec3::z() * 300.0,
            };
            LocalPath {
                id: k + 1,
                region: 0,
                slab: 0,
                start: vp(a),
                end: vp(b),
                scan_length: (b - a).norm(),
                lateral_width: 0.0,
                exceeds_fov: false,
            }
        })
        .collect()
}

fn instance(max: usize) -> impl Strategy<Value = Vec<LocalPath>> {
    prop::collection::vec(
        (
            0.0..400.0f64,
            0.0..400.0f64,
            0.0..400.0f64,
            -80.0..80.0f64,
            -80.0..80.0f64,
            0.0..80.0f64,
        ),
        1..=max,
    )
    .prop_map(|e| make_paths(&e))
}

fn small_pso(seed: u64) -> PsoConfig {
    PsoConfig {
        swarm_size: 12,
        iterations: 40,
        seed,
        ..Default::default()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn pso_tours_are_valid_and_decompose(paths in instance(9), seed in 0u64..1000) {
        let t = pso_optimize(&paths, 50.0, &small_pso(seed)).unwrap();
        let mut ids = t.order.clone();
        ids.sort_unstable();
        prop_assert_eq!(ids, (1..=paths.len()).collect::<Vec<_>>());
        prop_assert_eq!(t.directions.len(), paths.len());
        prop_assert_eq!(t.scan_times.len(), paths.len());
        prop_assert_eq!(t.transit_times.len(), paths.len() - 1);
        let legs = t.scan_time() + t.transit_time();
        prop_assert!((t.total_time - legs).abs() <= 1e-9);
        let again = tour_cost(&t.order, &t.directions, &paths, 50.0).unwrap();
        prop_assert_eq!(again.total_time, t.total_time);
        // directions are optimal for the returned order
        let best_dirs = optimal_directions(&t.order, &paths, 50.0).unwrap();
        prop_assert_eq!(best_dirs.total_time, t.total_time);
    }

    #[test]
    fn brute_force_never_loses(paths in instance(7), seed in 0u64..1000) {
        let best = brute_force_tour(&paths, 50.0).unwrap();
        let pso = pso_optimize(&paths, 50.0, &small_pso(seed)).unwrap();
        prop_assert!(best.total_time <= pso.total_time);
    }

    #[test]
    fn global_best_never_worsens(paths in instance(9), seed in 0u64..1000) {
        let trace = pso_optimize_traced(&paths, 50.0, &small_pso(seed)).unwrap();
        prop_assert_eq!(trace.best_length_history.len(), 41);
        prop_assert!(trace.best_length_history.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn speed_only_rescales_time(paths in instance(8), seed in 0u64..1000, scale in 0.1f64..10.0) {
        let a = pso_optimize(&paths, 50.0, &small_pso(seed)).unwrap();
        let b = pso_optimize(&paths, 50.0 * scale, &small_pso(seed)).unwrap();
        prop_assert_eq!(&a.order, &b.order);
        prop_assert_eq!(&a.directions, &b.directions);
        prop_assert_eq!(a.total_length, b.total_length);
        prop_assert!(((a.total_time / scale) - b.total_time).abs() <= 1e-9 * b.total_time);
    }
}

#[test]
fn dp_matches_exhaustive_directions() {
    let paths = make_paths(&[
        (0.0, 0.0, 0.0, 50.0, 0.0, 0.0),
        (60.0, 10.0, 0.0, -50.0, 0.0, 0.0),
        (0.0, 40.0, 0.0, 0.0, 30.0, 0.0),
        (100.0, 100.0, 20.0, 10.0, -40.0, 5.0),
        (30.0, 200.0, 0.0, 40.0, 10.0, 0.0),
    ]);
    for order in [[1, 2, 3, 4, 5], [5, 3, 1, 4, 2], [2, 4, 1, 5, 3]] {
        let dp = optimal_directions(&order, &paths, 25.0).unwrap();
        let mut best = f64::INFINITY;
        for mask in 0..32u32 {
            let dirs: Vec<Direction> = (0..5)
                .map(|i| {
                    if mask >> i & 1 == 1 {
                        Direction::Reverse
                    } else {
                        Direction::Forward
                    }
                })
                .collect();
            best = best.min(tour_cost(&order, &dirs, &paths, 25.0).unwrap().total_time);
        }
        assert_eq!(dp.total_time, best);
    }
}

mod common;

use std::collections::BTreeSet;

use common::*;
use cubenet::planner::plan_avoiding;
use cubenet::prefix_sum::PrefixSumCube;
use cubenet::recovery::FailurePlan;
use cubenet::{
    build_flow_graph, color_tree, combined_plan, greedy_divide, min_cut_plan, plan_with_failures,
    recover_region, run_construction, CellId, Color, CubeHierarchy, FailureSet, GridDims, GridValues,
    HierarchyConfig, RecoveryKind, Region,
};
use proptest::prelude::*;
use rand::Rng;

fn fanouts() -> impl Strategy<Value = Vec<usize>> {
    prop_oneof![
        Just(vec![2]),
        Just(vec![2, 2]),
        Just(vec![3, 2]),
        Just(vec![1, 2]),
        Just(vec![2, 3, 2]),
    ]
}

fn setup(w: usize, h: usize, f: Vec<usize>, seed: u64) -> (GridValues, CubeHierarchy, rand_chacha::ChaCha8Rng) {
    let mut rng = rng(seed);
    let dims = GridDims::new(w, h).unwrap();
    let values = random_values(&mut rng, dims);
    let cube = CubeHierarchy::build(&values, HierarchyConfig::new(dims, f).unwrap()).unwrap();
    (values, cube, rng)
}

proptest! {
    #![proptest_config(ProptestConfig {
        cases: 64,
        failure_persistence: None,
        ..ProptestConfig::default()
    })]

    #[test]
    fn cell_sums_match_rectangles(w in 1usize..14, h in 1usize..14, f in fanouts(), seed in any::<u64>()) {
        let (values, cube, _) = setup(w, h, f, seed);
        let config = cube.config();
        for level in 0..=cube.height() {
            let mut level_total = cubenet::value::zero();
            for id in config.cells_at_level(level) {
                let cell = config.cell(id);
                prop_assert_eq!(cube.value(id), values.rect_sum(&cell.bounds));
                prop_assert!(cell.bounds.contains(cell.junction));
                prop_assert!(config.is_junction(cell.junction, level));
                level_total += cube.value(id);
            }
            prop_assert_eq!(level_total, cube.total());
        }
    }

    #[test]
    fn grey_leaves_tile_the_region(w in 1usize..14, h in 1usize..14, f in fanouts(), seed in any::<u64>()) {
        let (_, cube, mut rng) = setup(w, h, f, seed);
        let region = random_region(&mut rng, cube.dims(), 4);
        let tree = color_tree(&cube, &region);
        let mut tiled = Region::empty(cube.dims());
        for id in tree.cells_with(Color::Grey) {
            let node = &tree.nodes[tree.find(id).unwrap()];
            if node.is_leaf() {
                for p in cube.cell(id).bounds.coords() {
                    prop_assert!(tiled.insert(p));
                }
            }
        }
        prop_assert_eq!(tiled, region);
    }

    #[test]
    fn min_cut_is_exact_and_no_worse_than_division(w in 1usize..14, h in 1usize..14, f in fanouts(), seed in any::<u64>()) {
        let (values, cube, mut rng) = setup(w, h, f, seed);
        let region = random_region(&mut rng, cube.dims(), 4);
        let plan = min_cut_plan(&build_flow_graph(&color_tree(&cube, &region)), &cube).unwrap();
        prop_assert_eq!(plan.value, values.region_sum(&region));
        prop_assert_eq!(plan.evaluate(&cube), plan.value);
        prop_assert!(plan.size() <= greedy_divide(&cube, &region).unwrap().len());
    }

    #[test]
    fn combined_plans_bounds(w in 2usize..8, h in 2usize..8, f in fanouts(), seed in any::<u64>()) {
        let (values, cube, mut rng) = setup(w, h, f, seed);
        let regions: Vec<Region> = (0..rng.gen_range(2..=3)).map(|_| random_region(&mut rng, cube.dims(), 3)).collect();
        let trees: Vec<_> = regions.iter().map(|r| color_tree(&cube, r)).collect();
        let out = combined_plan(&trees, &cube).unwrap();
        let mut separate = 0;
        let mut options = Vec::new();
        for (tree, (plan, region)) in trees.iter().zip(out.plans.iter().zip(&regions)) {
            prop_assert_eq!(plan.value, values.region_sum(region));
            let g = build_flow_graph(tree);
            separate += min_cut_plan(&g, &cube).unwrap().size();
            if let Some(cuts) = enumerate_cuts(&g, 12) {
                options.push(cuts.iter().map(|s| cut_reading(&g, &cube, s).1.into_iter().collect::<BTreeSet<CellId>>()).collect::<Vec<_>>());
            }
        }
        prop_assert!(out.retrieval.len() <= separate);
        let joint = cubenet::planner::solve(&cubenet::planner::build_combined_graph(&trees), &cube).unwrap();
        prop_assert_eq!(joint.cut_points.len(), joint.retrieval.len());
        let combos: usize = options.iter().map(Vec::len).product();
        if options.len() == regions.len() && combos <= 20_000 {
            prop_assert!(out.retrieval.len() >= joint_optimum(&options, out.retrieval.len()));
        }
    }

    #[test]
    fn ps_plans_are_exact(w in 1usize..10, h in 1usize..10, f in fanouts(), seed in any::<u64>()) {
        let mut rng = rng(seed);
        let dims = GridDims::new(w, h).unwrap();
        let values = random_values(&mut rng, dims);
        let ps = PrefixSumCube::build(&values, HierarchyConfig::new(dims, f).unwrap()).unwrap();
        let region = random_region(&mut rng, dims, 3);
        let plan = ps.ps_query_plan(&region).unwrap();
        let (v, corners) = ps.rectilinear_sum(&region).unwrap();
        prop_assert_eq!(plan.plan.value, values.region_sum(&region));
        prop_assert_eq!(v, values.region_sum(&region));
        prop_assert!(plan.cost <= corners.len());
        prop_assert!(plan.plan.size() <= plan.cost);
    }

    #[test]
    fn construction_matches_centralized(w in 1usize..16, h in 1usize..16, f in fanouts(), seed in any::<u64>(), redundant in any::<bool>()) {
        let mut rng = rng(seed);
        let dims = GridDims::new(w, h).unwrap();
        let values = random_values(&mut rng, dims);
        let config = HierarchyConfig::new(dims, f).unwrap();
        let a = run_construction(&values, &config, redundant).unwrap();
        let b = run_construction(&values, &config, redundant).unwrap();
        prop_assert_eq!(&a, &b);
        prop_assert_eq!(a.to_hierarchy().unwrap(), CubeHierarchy::build(&values, config.clone()).unwrap());
        prop_assert_eq!(a.stats.total_sent, dims.area());
        prop_assert!(a.stats.max_received <= 3);
    }

    #[test]
    fn failure_planning_trichotomy(w in 2usize..10, h in 2usize..10, f in fanouts(), seed in any::<u64>()) {
        let (values, cube, mut rng) = setup(w, h, f, seed);
        let config = cube.config().clone();
        let region = random_region(&mut rng, cube.dims(), 3);
        let mut failures = FailureSet::new();
        for _ in 0..rng.gen_range(1..=3) {
            let level = rng.gen_range(0..=config.height());
            let (nx, ny) = config.level_shape(level);
            failures.cells.insert(CellId::new(level, rng.gen_range(0..nx), rng.gen_range(0..ny)));
        }
        let unavailable = failures.unavailable(&config);
        match plan_with_failures(&cube, &failures, &region).unwrap() {
            FailurePlan::Exact(plan) => {
                prop_assert!(plan_avoiding(&cube, &region, &unavailable).is_ok());
                prop_assert_eq!(plan.value, values.region_sum(&region));
                prop_assert!(plan.cells().iter().all(|c| !unavailable.contains(c)));
            }
            FailurePlan::Recovered(r) => {
                prop_assert!(plan_avoiding(&cube, &region, &unavailable).is_err());
                if let Some(exact) = r.exact {
                    prop_assert_eq!(exact, values.region_sum(&region));
                }
                prop_assert_eq!(r.value.is_none(), r.kind == RecoveryKind::Unrecoverable);
            }
        }
    }

    #[test]
    fn uniform_data_estimates_exactly(w in 2usize..10, h in 2usize..10, f in fanouts(), seed in any::<u64>(), level_value in 1i64..9) {
        let mut rng = rng(seed);
        let dims = GridDims::new(w, h).unwrap();
        let values = GridValues::from_fn(dims, |_| cubenet::value::from_i64(level_value));
        let cube = CubeHierarchy::build(&values, HierarchyConfig::new(dims, f).unwrap()).unwrap();
        let config = cube.config().clone();
        let region = random_region(&mut rng, dims, 3);
        let level = rng.gen_range(1..=config.height());
        let (nx, ny) = config.level_shape(level);
        let failures = FailureSet::new().with_cell(CellId::new(level, rng.gen_range(0..nx), rng.gen_range(0..ny)));
        let r = recover_region(&cube, &failures, &region).unwrap();
        if let Some(v) = r.value {
            prop_assert!((v - cubenet::value::to_f64(values.region_sum(&region))).abs() < 1e-6);
        }
    }
}

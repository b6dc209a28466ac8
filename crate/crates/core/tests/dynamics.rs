use proptest::prelude::*;

use niche_core::environment::{GrowthModel, Profile1d};
use niche_core::evolution::{
    bump, long_time_classify, DtPolicy, EvolutionOptions, EvolutionSetup, Frame, Outcome, Thresholds,
};
use niche_core::kernel::Kernel;
use niche_core::operator::Grid;
use niche_core::steady_state::{solve_bounded, Classification, SolveOptions};

fn niche(inside: f64) -> GrowthModel {
    GrowthModel::logistic(Profile1d::niche(inside, -1.0, 2.0, 1.0), Profile1d::Constant(1.0)).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn ordered_seeds_stay_ordered(
        c in -0.8f64..0.8,
        lower in prop::collection::vec(0.0f64..0.6, 8),
        gap in prop::collection::vec(0.0f64..0.6, 8),
    ) {
        let (k, g) = (Kernel::uniform(1.0).unwrap(), niche(1.0));
        let grid = Grid::with_spacing(6.0, 0.1).unwrap();
        let setup = EvolutionSetup { kernel: &k, growth: &g, c, grid, frame: Frame::Moving };
        let piece = |v: &[f64], x: f64| v[(((x + 6.0) / 12.0 * 8.0) as usize).min(7)];
        let lo: Vec<f64> = grid.points().iter().map(|&x| piece(&lower, x)).collect();
        let hi: Vec<f64> = grid.points().iter().zip(&lo).map(|(&x, l)| l + piece(&gap, x)).collect();
        let violation = setup.comparison_probe(&lo, &hi, 10.0, DtPolicy::Auto).unwrap();
        prop_assert!(violation <= 1e-13, "violation {violation}");
    }

    #[test]
    fn steady_state_lies_between_zero_and_saturation(c in 0.0f64..0.5, inside in 0.8f64..1.5) {
        let (k, g) = (Kernel::uniform(1.0).unwrap(), niche(inside));
        let grid = Grid::with_spacing(8.0, 0.1).unwrap();
        let res = solve_bounded(grid, &k, &g, c, 0.0, &SolveOptions::default()).unwrap();
        prop_assert_eq!(res.classification, Classification::Nontrivial);
        prop_assert!(res.lambda_p < 0.0);
        prop_assert!(res.u.iter().all(|v| *v >= 0.0 && *v <= g.saturation() + 1e-12));
        prop_assert!(res.bracket.sub_sup <= res.bracket.super_sup + 1e-12);
        prop_assert!(res.residual <= 1e-8);
    }
}

#[test]
fn fast_niche_is_trivial_and_evolution_dies_out() {
    let (k, g) = (Kernel::uniform(1.0).unwrap(), niche(1.0));
    let grid = Grid::with_spacing(12.0, 0.05).unwrap();
    let res = solve_bounded(grid, &k, &g, 1.5, 0.0, &SolveOptions::default()).unwrap();
    assert_eq!(res.classification, Classification::Trivial);
    assert!(res.lambda_p > 0.0);
    let setup = EvolutionSetup {
        kernel: &k,
        growth: &g,
        c: 1.5,
        grid,
        frame: Frame::Moving,
    };
    let trace = setup
        .integrate(&bump(&grid, 0.5, 2.0), 100.0, &EvolutionOptions::default())
        .unwrap();
    assert_eq!(
        long_time_classify(&trace, None, &Thresholds::default()).unwrap(),
        Outcome::Extinct
    );
}

#[test]
fn short_horizon_is_undecided() {
    let (k, g) = (Kernel::uniform(1.0).unwrap(), niche(1.0));
    let grid = Grid::with_spacing(12.0, 0.05).unwrap();
    let setup = EvolutionSetup {
        kernel: &k,
        growth: &g,
        c: 1.5,
        grid,
        frame: Frame::Moving,
    };
    let trace = setup
        .integrate(&bump(&grid, 0.5, 2.0), 0.5, &EvolutionOptions::default())
        .unwrap();
    assert_eq!(
        long_time_classify(&trace, None, &Thresholds::default()).unwrap(),
        Outcome::Undecided
    );
}

//! The public API end to end: synthetic data through screening, models,
//! voting, the designed experiment and its surface fit.

use qualitykit::data::split_train_test;
use qualitykit::doe::{
    build_ccf_design, desirability_optimize, fit_response_surface, predict_mlr, DesirabilitySpec,
    Factor, MlrLevels,
};
use qualitykit::ensembles::{
    fit_boosted_trees, fit_random_forest, variable_importance, BoostConfig, ForestConfig,
    TreeConfig,
};
use qualitykit::screening::{apply_overrides, screen_predictors_with, vote_rankings};
use qualitykit::synth::{generate_synthetic, SIGNAL_VARIABLES};

#[test]
fn synthetic_data_to_response_surface() {
    let d = generate_synthetic(1000, 20, 0.005, 21).unwrap();
    let (train, _) = split_train_test(&d, 0.3, 21).unwrap();
    let forest = ForestConfig {
        n_trees: 60,
        seed: 21,
        ..ForestConfig::default()
    };
    let s = screen_predictors_with(&train, 8, &forest).unwrap();
    let kept = s.selected.top(8);
    assert!(
        SIGNAL_VARIABLES.iter().all(|v| kept.contains(v)),
        "{kept:?}"
    );

    let regular = TreeConfig {
        min_rows_per_leaf: 50,
        ..TreeConfig::default()
    };
    let rf = fit_random_forest(
        &s.dataset,
        &ForestConfig {
            n_trees: 60,
            tree: regular,
            seed: 21,
            ..ForestConfig::default()
        },
    )
    .unwrap();
    let bt = fit_boosted_trees(
        &s.dataset,
        &BoostConfig {
            n_stages: 200,
            min_rows_per_leaf: 50,
            seed: 21,
            ..BoostConfig::default()
        },
    )
    .unwrap();
    let rankings = [
        variable_importance(&rf, "random forest"),
        variable_importance(&bt, "boosted tree"),
    ];
    let voted = vote_rankings(&rankings, 4).unwrap();
    let chosen = apply_overrides(&voted, &[], 3).unwrap().selected;
    assert_eq!(chosen[0], "Machine productivity");

    // a designed experiment over the true factors, answered by the equation
    let factors = vec![
        Factor::from_range("Pigment fastness", 0.75, 1.0).unwrap(),
        Factor::from_range("Machine productivity", 0.45, 0.93).unwrap(),
        Factor::from_range("Pile weight", 1500.0, 2729.0).unwrap(),
    ];
    let design = build_ccf_design(&factors, 3).unwrap();
    let ys: Vec<f64> = design
        .runs()
        .iter()
        .map(|r| {
            predict_mlr(MlrLevels {
                pigment_fastness: r.natural[0],
                machine_productivity: r.natural[1],
                pile_weight: r.natural[2],
            })
        })
        .collect();
    let fit = fit_response_surface(&design, &ys).unwrap();
    // a linear truth: effects are twice the coefficient times the half-range
    let mp = fit.effect("(2) Machine productivity (L)").unwrap();
    assert!((mp.effect - (-0.1482945 * 0.48)).abs() < 1e-12);
    assert!(fit.effect("Pile weight (Q)").unwrap().effect.abs() < 1e-12);
    let opt = desirability_optimize(&fit, &DesirabilitySpec::from_responses(&ys).unwrap()).unwrap();
    assert_eq!(opt.coded, vec![1.0, -1.0, 1.0]);
}

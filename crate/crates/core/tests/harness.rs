use std::collections::BTreeSet;

use boostal::ceal::{CealConfig, CealMode};
use boostal::data::{gen_blobs, gen_friedman1, Task};
use boostal::gbdt::TrainParams;
use boostal::harness::{aggregate_seeds, run_experiment, run_seeds, DatasetSource, ExperimentConfig, Strategy};

fn small_params() -> TrainParams {
    TrainParams { num_stages: 20, max_depth: 3, ..TrainParams::default() }
}

fn blobs_config(n: usize, strategy: Strategy) -> ExperimentConfig {
    let mut c = ExperimentConfig::new(
        DatasetSource::Blobs { n, d: 2, classes: 3, separation: 3.0, seed: 7 },
        Task::Classification,
        strategy,
    );
    c.train_params = small_params();
    c
}

fn friedman_config(n: usize, strategy: Strategy) -> ExperimentConfig {
    let mut c = ExperimentConfig::new(
        DatasetSource::Friedman1 { n, noise_sd: 1.0, seed: 3, features: 10 },
        Task::Regression,
        strategy,
    );
    c.train_params = small_params();
    c
}

#[test]
fn default_schedule_on_a_thousand_row_pool() {
    // 1250 rows with test_fraction 0.2 leaves a 1000-row train pool
    let config = blobs_config(1250, Strategy::Random);
    let data = gen_blobs(1250, 2, 3, 3.0, 7).unwrap();
    let curve = run_experiment(&config, &data, 0).unwrap();
    let sizes: Vec<usize> = curve.records.iter().map(|r| r.n_labelled).collect();
    assert_eq!(sizes, vec![200, 400, 600, 800, 1000]);
    for r in &curve.records {
        assert!(r.metrics["accuracy"].unwrap().is_finite());
        assert_eq!(r.n_pseudo, 0);
    }
}

#[test]
fn budget_one_gives_two_records() {
    let mut config = friedman_config(300, Strategy::Ibug);
    config.budget = Some(1);
    let data = gen_friedman1(300, 1.0, 3).unwrap();
    assert_eq!(run_experiment(&config, &data, 0).unwrap().records.len(), 2);
}

#[test]
fn same_seed_same_curve() {
    for strategy in [Strategy::Random, Strategy::VeTotal, Strategy::Gsx] {
        let config = blobs_config(300, strategy);
        let data = gen_blobs(300, 2, 3, 3.0, 7).unwrap();
        assert_eq!(run_experiment(&config, &data, 5).unwrap(), run_experiment(&config, &data, 5).unwrap());
    }
}

#[test]
fn every_strategy_runs_on_its_task() {
    let blobs = gen_blobs(200, 2, 3, 3.0, 7).unwrap();
    let friedman = gen_friedman1(200, 1.0, 3).unwrap();
    for strategy in Strategy::ALL {
        for (config, data) in [(blobs_config(200, strategy), &blobs), (friedman_config(200, strategy), &friedman)] {
            if config.validate().is_err() {
                continue;
            }
            let curve = run_experiment(&config, data, 1).unwrap();
            assert_eq!(curve.records.len(), 5, "{strategy:?}");
            let sizes: Vec<usize> = curve.records.iter().map(|r| r.n_labelled).collect();
            assert!(sizes.windows(2).all(|w| w[0] < w[1]));
        }
    }
}

#[test]
fn final_iteration_matches_across_strategies() {
    // deterministic fits on the full train pool give the same last record
    let data = gen_friedman1(200, 1.0, 3).unwrap();
    let last: Vec<_> = [Strategy::Random, Strategy::VeRegression, Strategy::Gsx]
        .into_iter()
        .map(|s| run_experiment(&friedman_config(200, s), &data, 2).unwrap().records.pop().unwrap())
        .collect();
    assert!(last.windows(2).all(|w| w[0].metrics == w[1].metrics));
}

#[test]
fn ceal_pseudo_labels_stay_in_pool() {
    let data = gen_blobs(400, 2, 3, 3.0, 7).unwrap();
    for mode in [CealMode::Ceal, CealMode::Mceal, CealMode::Hybrid] {
        let mut config = blobs_config(400, Strategy::Entropy);
        config.ceal = CealConfig::enabled(mode);
        let curve = run_experiment(&config, &data, 0).unwrap();
        let pool_sizes: Vec<usize> = curve.records.iter().map(|r| 320 - r.n_labelled).collect();
        assert_eq!(curve.records[0].n_pseudo, 0);
        for (r, pool) in curve.records.iter().zip(pool_sizes) {
            assert!(r.n_pseudo <= pool);
        }
        if mode != CealMode::Hybrid {
            assert!(curve.records[1].n_pseudo > 0, "{mode:?}");
        }
        assert_eq!(curve.records.last().unwrap().n_pseudo, 0);
    }
}

#[test]
fn regression_ceal_runs() {
    let data = gen_friedman1(300, 1.0, 3).unwrap();
    let mut config = friedman_config(300, Strategy::VeRegression);
    config.ceal = CealConfig::enabled(CealMode::Ceal);
    let curve = run_experiment(&config, &data, 0).unwrap();
    assert!(curve.records[1].n_pseudo > 0);
}

#[test]
fn seeds_run_in_order_and_aggregate() {
    let mut config = blobs_config(200, Strategy::Random);
    config.seeds = vec![3, 1, 2];
    let data = gen_blobs(200, 2, 3, 3.0, 7).unwrap();
    let curves = run_seeds(&config, &data).unwrap();
    assert_eq!(curves.iter().map(|c| c.seed).collect::<Vec<_>>(), vec![3, 1, 2]);
    assert_eq!(curves[1], run_experiment(&config, &data, 1).unwrap());
    let agg = aggregate_seeds(&curves).unwrap();
    assert_eq!(agg.len(), 5 * 2);
    let distinct: BTreeSet<_> = curves.iter().map(|c| c.fingerprint.clone()).collect();
    assert_eq!(distinct.len(), 1);
}

#[test]
fn single_class_start_does_not_abort() {
    // two-row initial set from a 3-class problem is often single-class
    let mut config = blobs_config(40, Strategy::Entropy);
    config.initial_fraction = 0.05;
    config.batch_fraction = 0.05;
    let data = gen_blobs(40, 2, 3, 3.0, 7).unwrap();
    for seed in 0..5 {
        let curve = run_experiment(&config, &data, seed).unwrap();
        assert!(curve.records.iter().all(|r| r.metrics["accuracy"].is_some()));
    }
}

#[test]
fn task_mismatch_is_a_config_error() {
    let config = blobs_config(100, Strategy::Random);
    let data = gen_friedman1(100, 1.0, 3).unwrap();
    assert!(run_experiment(&config, &data, 0).is_err());
}

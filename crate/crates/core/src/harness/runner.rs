use std::collections::BTreeMap;
use std::time::Instant;

use rayon::prelude::*;

use super::config::{ExperimentConfig, Strategy};
use super::curve::{IterationRecord, LearningCurve};
use super::metrics::{accuracy, auc, auc_macro, mse, r2};
use crate::ceal::{filter_classification, filter_regression, CealMode, PseudoLabel};
use crate::data::{encode, fit_encoder, train_test_split, Dataset, EncoderState, Labels, Task};
use crate::error::{Error, Result};
use crate::gbdt::{argmax, fit, BoostedModel, Loss, Targets};
use crate::matrix::Matrix;
use crate::sampling::{gsx_select, random_select, select_top_m};
use crate::uncertainty::{entropy, score_pool, IbugReference, LeafCache, ScoreKind, ScoringContext};

const STREAM_SPLIT: u64 = 1;
const STREAM_INITIAL: u64 = 2;
const STREAM_QUERY: u64 = 3;
const STREAM_MODEL: u64 = 4;

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives an independent RNG seed from a list of words.
pub(crate) fn derive_seed(words: &[u64]) -> u64 {
    words.iter().fold(0x243f_6a88_85a3_08d3, |acc, &w| splitmix(acc ^ splitmix(w)))
}

/// Model plus everything needed to score with it.
struct Round {
    encoder: EncoderState,
    model: BoostedModel<f64>,
    ibug_cache: Option<LeafCache>,
    ibug_targets: Vec<f64>,
}

impl Round {
    fn context(&self, config: &ExperimentConfig) -> ScoringContext<'_, f64> {
        ScoringContext {
            ve_members: config.ve_members,
            ibug_k: config.ibug_k,
            ibug: self.ibug_cache.as_ref().map(|cache| IbugReference { cache, targets: &self.ibug_targets }),
        }
    }
}

fn needs_ibug(config: &ExperimentConfig) -> bool {
    config.strategy == Strategy::Ibug
        || (config.ceal.mode != CealMode::None && config.uncertainty_source().score_kind() == ScoreKind::Ibug)
}

fn train_round(
    dataset: &Dataset,
    config: &ExperimentConfig,
    labelled: &[usize],
    pseudo: &BTreeMap<usize, PseudoLabel<f64>>,
    model_seed: u64,
) -> Result<Round> {
    let encoder = fit_encoder(dataset, labelled, config.encoder_smoothing)?;
    let mut rows: Vec<usize> = labelled.iter().copied().chain(pseudo.keys().copied()).collect();
    rows.sort_unstable();
    let x: Matrix<f64> = encode(dataset, &encoder, &rows)?;
    let mut params = config.train_params.clone();
    params.seed = model_seed;
    let model = match dataset.labels() {
        Labels::Class { values, names } => {
            let y: Vec<usize> = rows
                .iter()
                .map(|r| match pseudo.get(r) {
                    Some(PseudoLabel::Class(c)) => *c,
                    _ => values[*r].expect("oracle rows are labelled"),
                })
                .collect();
            let loss = if names.len() == 2 { Loss::Logistic } else { Loss::Softmax };
            fit(&x, Targets::Classes { labels: &y, count: names.len() }, &params, loss)?
        }
        Labels::Regression(values) => {
            let y: Vec<f64> = rows
                .iter()
                .map(|r| match pseudo.get(r) {
                    Some(PseudoLabel::Value(v)) => *v,
                    _ => values[*r].expect("oracle rows are labelled"),
                })
                .collect();
            fit(&x, Targets::Real(&y), &params, Loss::Squared)?
        }
    };
    let (ibug_cache, ibug_targets) = if needs_ibug(config) {
        let lx: Matrix<f64> = encode(dataset, &encoder, labelled)?;
        let targets =
            labelled.iter().map(|&r| dataset.target_value(r).expect("regression rows are labelled")).collect();
        (Some(LeafCache::build(&model, &lx)?), targets)
    } else {
        (None, Vec::new())
    };
    Ok(Round { encoder, model, ibug_cache, ibug_targets })
}

/// Test-set metrics of a fitted model: accuracy and AUC, or MSE and R².
pub fn evaluate(
    model: &BoostedModel<f64>,
    x: &Matrix<f64>,
    dataset: &Dataset,
    rows: &[usize],
) -> Result<BTreeMap<String, Option<f64>>> {
    let mut out = BTreeMap::new();
    match dataset.labels() {
        Labels::Class { values, names } => {
            let probs: Vec<Vec<f64>> = x.iter_rows().map(|r| model.predict_proba(r, None)).collect::<Result<_>>()?;
            let truth: Vec<usize> = rows.iter().map(|&r| values[r].expect("test rows are labelled")).collect();
            let preds: Vec<usize> = probs.iter().map(|p| argmax(p)).collect();
            out.insert("accuracy".to_string(), Some(accuracy(&preds, &truth)?));
            let area = if names.len() == 2 {
                let pos: Vec<f64> = probs.iter().map(|p| p[1]).collect();
                let hits: Vec<bool> = truth.iter().map(|&t| t == 1).collect();
                auc(&pos, &hits)?
            } else {
                auc_macro(&probs, &truth)?
            };
            out.insert("auc".to_string(), area);
        }
        Labels::Regression(values) => {
            let preds: Vec<f64> = x.iter_rows().map(|r| model.predict(r)).collect::<Result<_>>()?;
            let truth: Vec<f64> = rows.iter().map(|&r| values[r].expect("test rows are labelled")).collect();
            out.insert("mse".to_string(), Some(mse(&preds, &truth)?));
            out.insert("r2".to_string(), Some(r2(&preds, &truth)?));
        }
    }
    Ok(out)
}

fn query(
    dataset: &Dataset,
    config: &ExperimentConfig,
    round: &Round,
    labelled: &[usize],
    pool: &[usize],
    batch: usize,
    query_seed: u64,
) -> Result<Vec<usize>> {
    match config.strategy {
        Strategy::Random => Ok(random_select(pool, batch, query_seed)?.chosen),
        Strategy::Gsx => {
            let rows: Vec<usize> = labelled.iter().chain(pool).copied().collect();
            let x: Matrix<f64> = encode(dataset, &round.encoder, &rows)?;
            let l = labelled.len();
            let labelled_pos: Vec<usize> = (0..l).collect();
            let pool_pos: Vec<usize> = (l..rows.len()).collect();
            Ok(gsx_select(&x, &labelled_pos, &pool_pos, batch)?.chosen.into_iter().map(|p| rows[p]).collect())
        }
        strategy => {
            let kind = strategy.score_kind().expect("uncertainty strategy");
            let x: Matrix<f64> = encode(dataset, &round.encoder, pool)?;
            let scores = score_pool(&round.model, &x, kind, &round.context(config))?;
            Ok(select_top_m(&scores, batch)?.chosen.into_iter().map(|p| pool[p]).collect())
        }
    }
}

fn pseudo_label(
    dataset: &Dataset,
    config: &ExperimentConfig,
    round: &Round,
    pool: &[usize],
    iteration: usize,
) -> Result<BTreeMap<usize, PseudoLabel<f64>>> {
    let x: Matrix<f64> = encode(dataset, &round.encoder, pool)?;
    let ctx = round.context(config);
    let source = config.uncertainty_source().score_kind();
    let set = match config.task {
        Task::Classification => {
            let probs: Vec<Vec<f64>> =
                x.iter_rows().map(|r| round.model.predict_proba(r, None)).collect::<Result<_>>()?;
            let entropies: Vec<f64> = probs.iter().map(|p| entropy(p)).collect::<Result<_>>()?;
            let uncertainties =
                if config.ceal.uses_uncertainty() { Some(score_pool(&round.model, &x, source, &ctx)?) } else { None };
            filter_classification(&probs, &entropies, uncertainties.as_deref(), &config.ceal, iteration)?
        }
        Task::Regression => {
            let preds: Vec<f64> = x.iter_rows().map(|r| round.model.predict(r)).collect::<Result<_>>()?;
            let uncertainties = score_pool(&round.model, &x, source, &ctx)?;
            filter_regression(&preds, &uncertainties, &config.ceal, iteration)?
        }
    };
    Ok(set.labels.into_iter().map(|(pos, label)| (pool[pos], label)).collect())
}

/// Runs one seeded active-learning experiment with a simulated oracle holding every label.
pub fn run_experiment(config: &ExperimentConfig, dataset: &Dataset, seed: u64) -> Result<LearningCurve> {
    config.validate()?;
    if dataset.task() != config.task {
        return Err(Error::config("task", format!("dataset target is a {:?} task", dataset.task())));
    }
    if let Some(row) = (0..dataset.row_count()).find(|&r| !dataset.is_labelled(r)) {
        return Err(Error::invalid(format!("row {row} has no label; the simulated oracle needs every label")));
    }
    let split = train_test_split(dataset, config.test_fraction, derive_seed(&[seed, STREAM_SPLIT]))?;
    let n_train = split.train_idx.len();
    let n_initial = ((config.initial_fraction * n_train as f64).round() as usize).clamp(1, n_train);
    let batch = ((config.batch_fraction * n_train as f64).round() as usize).max(1);

    let mut labelled = random_select(&split.train_idx, n_initial, derive_seed(&[seed, STREAM_INITIAL]))?.chosen;
    labelled.sort_unstable();
    let mut pool: Vec<usize> = split.train_idx.iter().copied().filter(|r| labelled.binary_search(r).is_err()).collect();
    let mut pseudo: BTreeMap<usize, PseudoLabel<f64>> = BTreeMap::new();
    let mut records = Vec::new();

    for iteration in 0.. {
        let start = Instant::now();
        let model_seed = derive_seed(&[config.train_params.seed, seed, STREAM_MODEL, iteration as u64]);
        let round = train_round(dataset, config, &labelled, &pseudo, model_seed)?;
        let test_x: Matrix<f64> = encode(dataset, &round.encoder, &split.test_idx)?;
        let metrics = evaluate(&round.model, &test_x, dataset, &split.test_idx)?;
        records.push(IterationRecord {
            iteration,
            n_labelled: labelled.len(),
            n_pseudo: pseudo.len(),
            metrics,
            wall_time: start.elapsed().as_secs_f64(),
        });
        if pool.is_empty() || config.budget == Some(iteration) {
            break;
        }

        let query_seed = derive_seed(&[seed, STREAM_QUERY, iteration as u64]);
        let mut chosen = query(dataset, config, &round, &labelled, &pool, batch, query_seed)?;
        chosen.sort_unstable();
        labelled.extend_from_slice(&chosen);
        labelled.sort_unstable();
        pool.retain(|r| chosen.binary_search(r).is_err());

        pseudo = if config.ceal.mode != CealMode::None && !pool.is_empty() {
            pseudo_label(dataset, config, &round, &pool, iteration + 1)?
        } else {
            BTreeMap::new()
        };
    }
    Ok(LearningCurve { fingerprint: config.fingerprint(), seed, records })
}

/// Runs every configured seed (in parallel) and returns the curves in seed-list order.
pub fn run_seeds(config: &ExperimentConfig, dataset: &Dataset) -> Result<Vec<LearningCurve>> {
    config.seeds.par_iter().map(|&seed| run_experiment(config, dataset, seed)).collect()
}

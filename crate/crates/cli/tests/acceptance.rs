//! Acceptance suite: one pass/fail line per criterion.

use std::collections::BTreeSet;
use std::path::Path;
use std::time::{Duration, Instant};

use boostal::ceal::{filter_classification, CealConfig, CealMode, ThresholdKind};
use boostal::data::{encode, fit_encoder, gen_blobs, gen_friedman1, Dataset, Labels, Task};
use boostal::gbdt::{fit, BoostedModel, Loss, Node, Targets, TrainParams, Tree};
use boostal::harness::{auc, run_seeds, DatasetSource, ExperimentConfig, LearningCurve, Strategy};
use boostal::uncertainty::{entropy, ibug_affinities, ibug_uncertainty, staged_std, ve_classification, LeafCache};
use boostal::FeatureMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn encoded_all(data: &Dataset) -> FeatureMatrix {
    let rows: Vec<usize> = (0..data.row_count()).collect();
    encode(data, &fit_encoder(data, &rows, 1.0).unwrap(), &rows).unwrap()
}

fn classes(data: &Dataset) -> Vec<usize> {
    match data.labels() {
        Labels::Class { values, .. } => values.iter().map(|v| v.unwrap()).collect(),
        _ => unreachable!(),
    }
}

fn reals(data: &Dataset) -> Vec<f64> {
    match data.labels() {
        Labels::Regression(v) => v.iter().map(|v| v.unwrap()).collect(),
        _ => unreachable!(),
    }
}

fn walk(tree: &Tree<f64>, x: &[f64]) -> (usize, f64) {
    let nodes = tree.nodes();
    let mut i = 0;
    loop {
        match nodes[i] {
            Node::Split { feature, threshold, left, right } => i = if x[feature] < threshold { left } else { right },
            Node::Leaf { value, leaf } => return (leaf, value),
        }
    }
}

fn brute_proba(model: &BoostedModel<f64>, x: &[f64], k: usize) -> Vec<f64> {
    let mut raw = model.base_score().to_vec();
    for stage in &model.stages()[..k] {
        for (r, t) in raw.iter_mut().zip(stage) {
            *r += walk(t, x).1;
        }
    }
    let m = raw.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = raw.iter().map(|r| (r - m).exp()).collect();
    let s: f64 = e.iter().sum();
    e.iter().map(|v| v / s).collect()
}

fn staged_oracle() -> Outcome {
    let start = Instant::now();
    let data = gen_blobs(500, 2, 3, 3.0, 21).unwrap();
    let x = encoded_all(&data);
    let params = TrainParams { num_stages: 100, ..TrainParams::default() };
    let model = fit(&x, Targets::Classes { labels: &classes(&data), count: 3 }, &params, Loss::Softmax).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let q = [rng.random_range(-6.0..6.0), rng.random_range(-6.0..6.0)];
        let staged = model.staged_predict(&q).unwrap();
        for k in 1..=100 {
            for (a, b) in staged[k - 1].iter().zip(brute_proba(&model, &q, k)) {
                worst = worst.max((a - b).abs());
            }
        }
    }
    let elapsed = start.elapsed();
    outcome(worst <= 1e-12 && elapsed < Duration::from_secs(10), format!("max |diff| {worst:.3e}, {elapsed:.2?}"))
}

fn ve_identity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let (mut worst_sum, mut worst_kl, mut min_knowledge) = (0.0f64, 0.0f64, f64::INFINITY);
    for _ in 0..1000 {
        let k = rng.random_range(2..=10);
        let c = rng.random_range(2..=5);
        let members: Vec<Vec<f64>> = (0..k)
            .map(|_| {
                let w: Vec<f64> = (0..c).map(|_| rng.random::<f64>().powi(3)).collect();
                let s: f64 = w.iter().sum();
                w.iter().map(|v| v / s).collect()
            })
            .collect();
        let d = ve_classification(&members).unwrap();
        worst_sum = worst_sum.max((d.knowledge + d.data - d.total).abs());
        min_knowledge = min_knowledge.min(d.knowledge);
        // mutual information as mean KL(member || mean)
        let mean: Vec<f64> = (0..c).map(|j| members.iter().map(|m| m[j]).sum::<f64>() / k as f64).collect();
        let kl = members
            .iter()
            .map(|m| m.iter().zip(&mean).filter(|(p, _)| **p > 0.0).map(|(p, q)| p * (p / q).ln()).sum::<f64>())
            .sum::<f64>()
            / k as f64;
        worst_kl = worst_kl.max((kl - d.knowledge).abs());
    }
    outcome(
        worst_sum <= 1e-12 && min_knowledge >= -1e-12 && worst_kl <= 1e-12,
        format!("max identity gap {worst_sum:.3e}, min knowledge {min_knowledge:.3e}, max KL gap {worst_kl:.3e}"),
    )
}

fn ibug_oracle() -> Outcome {
    let data = gen_friedman1(250, 1.0, 13).unwrap();
    let x = encoded_all(&data);
    let y = reals(&data);
    let train_rows: Vec<usize> = (0..200).collect();
    let train = x.select_rows(&train_rows);
    let params = TrainParams { num_stages: 50, ..TrainParams::default() };
    let model = fit(&train, Targets::Real(&y[..200]), &params, Loss::Squared).unwrap();
    let cache = LeafCache::build(&model, &train).unwrap();
    let train_leaves: Vec<Vec<usize>> =
        train.iter_rows().map(|r| model.stages().iter().map(|s| walk(&s[0], r).0).collect()).collect();
    let mut mismatches = 0;
    for q in 200..250 {
        let query = x.row(q);
        let ql: Vec<usize> = model.stages().iter().map(|s| walk(&s[0], query).0).collect();
        let brute: Vec<u32> =
            train_leaves.iter().map(|l| l.iter().zip(&ql).filter(|(a, b)| a == b).count() as u32).collect();
        if ibug_affinities(&model, &cache, query).unwrap() != brute {
            mismatches += 1;
        }
    }
    outcome(mismatches == 0, format!("{mismatches} of 50 queries differ"))
}

fn monotone_loss() -> Outcome {
    let params = TrainParams { num_stages: 200, ..TrainParams::default() };
    let blobs = gen_blobs(600, 2, 4, 4.0, 17).unwrap();
    let bx = encoded_all(&blobs);
    let labels = classes(&blobs);
    let cls = fit(&bx, Targets::Classes { labels: &labels, count: 4 }, &params, Loss::Softmax).unwrap();
    let by: Vec<f64> = labels.iter().map(|&c| c as f64).collect();
    let cl = cls.staged_loss(&bx, &by).unwrap();

    let fr = gen_friedman1(600, 0.0, 17).unwrap();
    let fx = encoded_all(&fr);
    let fy = reals(&fr);
    let reg = fit(&fx, Targets::Real(&fy), &params, Loss::Squared).unwrap();
    let rl = reg.staged_loss(&fx, &fy).unwrap();

    let rises = |l: &[f64]| l.windows(2).filter(|w| w[1] > w[0]).count();
    let (a, b) = (rises(&cl), rises(&rl));
    outcome(
        a == 0 && b == 0 && cl.len() == 201 && rl.len() == 201,
        format!("increases: blobs {a}, friedman1 {b}; final losses {:.4}, {:.4}", cl[200], rl[200]),
    )
}

fn hand_values() -> Outcome {
    let checks = [
        ("entropy [0.5,0.5]", (entropy(&[0.5, 0.5]).unwrap() - std::f64::consts::LN_2).abs() <= 1e-9),
        ("entropy [0.9,0.1]", (entropy(&[0.9f64, 0.1]).unwrap() - 0.325083).abs() <= 1e-6),
        ("staged_std", (staged_std(&[0.2f64, 0.4, 0.6]).unwrap() - 0.2).abs() <= 1e-12),
        ("ibug variance", (ibug_uncertainty(&[1, 1], &[0.0f64, 2.0], 2).unwrap() - 2.0).abs() <= 1e-12),
        ("auc", auc(&[0.8, 0.6, 0.4], &[true, false, true]).unwrap() == Some(0.5)),
    ];
    let failed: Vec<&str> = checks.iter().filter(|c| !c.1).map(|c| c.0).collect();
    outcome(
        failed.is_empty(),
        if failed.is_empty() { "5 of 5 values".to_string() } else { format!("failed: {failed:?}") },
    )
}

fn run(source: DatasetSource, task: Task, strategy: Strategy, ceal: CealMode, data: &Dataset) -> Vec<LearningCurve> {
    let mut config = ExperimentConfig::new(source, task, strategy);
    config.seeds = (0..10).collect();
    config.ceal = CealConfig::enabled(ceal);
    run_seeds(&config, data).unwrap()
}

/// Labels needed to first reach 90% accuracy; unreached counts as the full pool plus one batch.
fn labels_to_90(curve: &LearningCurve) -> f64 {
    let records = &curve.records;
    match records.iter().find(|r| r.metrics["accuracy"].unwrap() >= 0.9) {
        Some(r) => r.n_labelled as f64,
        None => {
            let last = records.last().unwrap().n_labelled;
            let batch = records[1].n_labelled - records[0].n_labelled;
            (last + batch) as f64
        }
    }
}

fn al_effectiveness() -> Outcome {
    let start = Instant::now();
    let source = DatasetSource::Blobs { n: 2000, d: 2, classes: 4, separation: 4.0, seed: 0 };
    let data = gen_blobs(2000, 2, 4, 4.0, 0).unwrap();
    let mean = |s: Strategy| {
        let curves = run(source.clone(), Task::Classification, s, CealMode::None, &data);
        curves.iter().map(labels_to_90).sum::<f64>() / curves.len() as f64
    };
    let random = mean(Strategy::Random);
    let ent = mean(Strategy::Entropy);
    let ve = mean(Strategy::VeTotal);
    let elapsed = start.elapsed();
    outcome(
        ent <= random && ve <= random && elapsed < Duration::from_secs(300),
        format!("mean labels to 90%: random {random}, entropy {ent}, ve_total {ve}; {elapsed:.1?}"),
    )
}

fn mean_mse(curves: &[LearningCurve], iteration: usize) -> f64 {
    curves.iter().map(|c| c.metric(iteration, "mse").unwrap()).sum::<f64>() / curves.len() as f64
}

fn friedman() -> (DatasetSource, Dataset) {
    (DatasetSource::Friedman1 { n: 2000, noise_sd: 1.0, seed: 0, features: 10 }, gen_friedman1(2000, 1.0, 0).unwrap())
}

fn regression_parity() -> Outcome {
    let (source, data) = friedman();
    let random = run(source.clone(), Task::Regression, Strategy::Random, CealMode::None, &data);
    // train pool is 1600 rows; 60% labelled is 960
    let it = random[0].records.iter().position(|r| r.n_labelled == 960).expect("60% iteration");
    let base = mean_mse(&random, it);
    let mut pass = true;
    let mut parts = vec![format!("random {base:.4}")];
    for s in [Strategy::StagedStd, Strategy::VeRegression, Strategy::Ibug] {
        let m = mean_mse(&run(source.clone(), Task::Regression, s, CealMode::None, &data), it);
        let ok = m <= 1.05 * base;
        pass &= ok;
        parts.push(format!("{} {m:.4} ({:.3}x{})", s.name(), m / base, if ok { "" } else { ", over" }));
    }
    outcome(pass, format!("mean MSE at 960 labels: {}", parts.join(", ")))
}

fn regression_ceal() -> Outcome {
    let (source, data) = friedman();
    let plain = run(source.clone(), Task::Regression, Strategy::VeRegression, CealMode::None, &data);
    let ceal = run(source, Task::Regression, Strategy::VeRegression, CealMode::Ceal, &data);
    let ratios: Vec<f64> = (0..plain[0].records.len()).map(|i| mean_mse(&ceal, i) / mean_mse(&plain, i)).collect();
    let pass = ratios.iter().all(|&r| r <= 1.05);
    outcome(
        pass,
        format!("CEAL / plain MSE per iteration: {:?}", ratios.iter().map(|r| format!("{r:.3}")).collect::<Vec<_>>()),
    )
}

fn hybrid_identity() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let mut mismatches = 0;
    for trial in 0..1000 {
        let n = rng.random_range(1..80);
        let c = rng.random_range(2..=5);
        let probs: Vec<Vec<f64>> = (0..n)
            .map(|_| {
                let w: Vec<f64> = (0..c).map(|_| rng.random::<f64>().powi(4) + 1e-9).collect();
                let s: f64 = w.iter().sum();
                w.iter().map(|v| v / s).collect()
            })
            .collect();
        let ent: Vec<f64> = probs.iter().map(|p| entropy(p).unwrap()).collect();
        let unc: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
        let (de, du) = (rng.random_range(0.0..1.5), rng.random_range(0.0..1.0));
        let config = |mode| {
            if trial % 2 == 0 {
                CealConfig {
                    mode,
                    threshold_kind: ThresholdKind::Absolute,
                    entropy_threshold: Some(de),
                    uncertainty_threshold: Some(du),
                    ..CealConfig::default()
                }
            } else {
                CealConfig { mode, quantile: 0.05 + 0.9 * (trial as f64 / 1000.0), ..CealConfig::default() }
            }
        };
        let set = |mode| -> BTreeSet<usize> {
            filter_classification(&probs, &ent, Some(&unc), &config(mode), 1).unwrap().positions().collect()
        };
        let both: BTreeSet<usize> = set(CealMode::Ceal).intersection(&set(CealMode::Mceal)).copied().collect();
        if set(CealMode::Hybrid) != both {
            mismatches += 1;
        }
    }
    outcome(mismatches == 0, format!("{mismatches} of 1000 scorings differ"))
}

fn determinism(dir: &Path) -> Outcome {
    let cfg = dir.join("config.json");
    std::fs::write(
        &cfg,
        r#"{"dataset": {"blobs": {"n": 600, "d": 3, "classes": 3, "separation": 2.5, "seed": 4}},
            "task": "classification", "strategy": "ve_total", "ceal": {"mode": "hybrid"},
            "train_params": {"num_stages": 60, "subsample": 0.8, "langevin_noise_sd": 0.05},
            "seeds": [1, 2, 3, 4]}"#,
    )
    .unwrap();
    let run_with = |threads: usize, out: &str| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        let outputs = pool.install(|| boostal_cli::cmd_run(&cfg, &dir.join(out), None, false)).unwrap();
        (std::fs::read(outputs.curves).unwrap(), std::fs::read(outputs.aggregate).unwrap())
    };
    let a = run_with(1, "one");
    let b = run_with(4, "four");
    let c = run_with(3, "three");
    let same = a == b && b == c;
    outcome(same, format!("curve CSVs across 1/4/3 threads {}", if same { "identical" } else { "differ" }))
}

type Check<'a> = Box<dyn Fn() -> Outcome + 'a>;

fn main() {
    let start = Instant::now();
    let dir = tempfile::TempDir::new().unwrap();
    let criteria: Vec<(&str, Check)> = vec![
        ("staged oracle", Box::new(staged_oracle)),
        ("VE decomposition identity", Box::new(ve_identity)),
        ("IBUG kernel oracle", Box::new(ibug_oracle)),
        ("boosting monotonicity", Box::new(monotone_loss)),
        ("hand-value suite", Box::new(hand_values)),
        ("AL effectiveness", Box::new(al_effectiveness)),
        ("regression parity", Box::new(regression_parity)),
        ("regression CEAL benefit", Box::new(regression_ceal)),
        ("hybrid set identity", Box::new(hybrid_identity)),
        ("end-to-end determinism", Box::new(|| determinism(dir.path()))),
    ];
    let mut failed = Vec::new();
    for (name, check) in &criteria {
        let o = check();
        println!("{} {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        if !o.pass {
            failed.push(*name);
        }
    }
    let total = start.elapsed();
    let in_time = total < Duration::from_secs(15 * 60);
    println!("{} suite wall time: {total:.1?}", if in_time { "PASS" } else { "FAIL" });
    if !in_time {
        failed.push("suite wall time");
    }
    if failed.is_empty() {
        println!("acceptance: all {} criteria passed", criteria.len() + 1);
    } else {
        println!("acceptance: {} failed: {}", failed.len(), failed.join(", "));
        std::process::exit(1);
    }
}

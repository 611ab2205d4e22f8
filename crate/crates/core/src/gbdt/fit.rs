use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use super::loss::{Loss, PRIOR_FLOOR};
use super::model::BoostedModel;
use super::params::TrainParams;
use super::tree::{Node, Tree};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::scalar::Scalar;

/// Ridge added to every leaf's hessian sum.
const LEAF_RIDGE: f64 = 1.0;

/// Rows × features above which split search fans out across features.
const PARALLEL_SPLIT_WORK: usize = 1 << 15;

/// Training targets.
#[derive(Clone, Copy, Debug)]
pub enum Targets<'a, F> {
    Real(&'a [F]),
    Classes { labels: &'a [usize], count: usize },
}

impl<F: Scalar> Targets<'_, F> {
    fn len(&self) -> usize {
        match self {
            Targets::Real(v) => v.len(),
            Targets::Classes { labels, .. } => labels.len(),
        }
    }

    fn as_scalars(&self) -> Vec<F> {
        match self {
            Targets::Real(v) => v.to_vec(),
            Targets::Classes { labels, .. } => labels.iter().map(|&c| F::from_usize_lossy(c)).collect(),
        }
    }
}

fn check_targets<F: Scalar>(targets: &Targets<'_, F>, loss: Loss) -> Result<Option<usize>> {
    match (targets, loss) {
        (Targets::Real(v), Loss::Squared) => {
            if let Some(i) = v.iter().position(|y| !y.is_finite()) {
                return Err(Error::invalid(format!("target at row {i} is not finite")));
            }
            Ok(None)
        }
        (Targets::Classes { labels, count }, Loss::Logistic | Loss::Softmax) => {
            if loss == Loss::Logistic && *count != 2 {
                return Err(Error::invalid(format!("logistic loss needs 2 classes, got {count}")));
            }
            if *count < 2 {
                return Err(Error::invalid(format!("softmax loss needs at least 2 classes, got {count}")));
            }
            if let Some(i) = labels.iter().position(|&c| c >= *count) {
                return Err(Error::invalid(format!("class label {} at row {i} out of range 0..{count}", labels[i])));
            }
            Ok(Some(*count))
        }
        _ => Err(Error::invalid(format!("targets do not match loss {loss:?}"))),
    }
}

fn base_score<F: Scalar>(targets: &Targets<'_, F>, loss: Loss) -> Vec<F> {
    match targets {
        Targets::Real(v) => vec![v.iter().copied().sum::<F>() / F::from_usize_lossy(v.len())],
        Targets::Classes { labels, count } => {
            let mut freq = vec![0usize; *count];
            for &c in *labels {
                freq[c] += 1;
            }
            let n = labels.len() as f64;
            let prior = |c: usize| (freq[c] as f64 / n).clamp(PRIOR_FLOOR, 1.0 - PRIOR_FLOOR);
            match loss {
                Loss::Logistic => {
                    let p = prior(1);
                    vec![F::lit((p / (1.0 - p)).ln())]
                }
                _ => (0..*count).map(|c| F::lit(prior(c).ln())).collect(),
            }
        }
    }
}

/// Midpoints between distinct values of one feature: every gap when there are at
/// most `max` of them, otherwise the boundaries of `max` equal-frequency bins.
fn candidate_thresholds<F: Scalar>(x: &Matrix<F>, rows: &[u32], feature: usize, max: usize) -> Vec<F> {
    let mut values: Vec<F> = rows.iter().map(|&r| x.get(r as usize, feature)).collect();
    values.sort_by(|a, b| a.partial_cmp(b).expect("finite features"));
    let mut unique = values.clone();
    unique.dedup();
    if unique.len() < 2 {
        return Vec::new();
    }
    let gaps: Vec<usize> = if unique.len() - 1 <= max {
        (0..unique.len() - 1).collect()
    } else {
        let m = values.len();
        let mut set = BTreeSet::new();
        for q in 1..max {
            let v = values[q * m / max];
            let j = unique.partition_point(|u| *u < v);
            if j > 0 {
                set.insert(j - 1);
            }
        }
        set.into_iter().collect()
    };
    let two = F::lit(2.0);
    gaps.into_iter()
        .map(|g| {
            let (a, b) = (unique[g], unique[g + 1]);
            let mid = a + (b - a) / two;
            if mid > a {
                mid
            } else {
                b
            }
        })
        .collect()
}

struct SplitCandidate<F> {
    gain: F,
    feature: usize,
    bin: usize,
}

struct TreeBuilder<'a, F> {
    /// Column-major bins: `bins[f * n_rows + pos]`.
    bins: &'a [u16],
    n_rows: usize,
    thresholds: &'a [Vec<F>],
    grad: &'a [F],
    hess: &'a [F],
    max_depth: usize,
    min_leaf: usize,
    shrinkage: F,
    ridge: F,
    nodes: Vec<Node<F>>,
    leaves: usize,
}

impl<F: Scalar> TreeBuilder<'_, F> {
    fn score(&self, g: F, h: F) -> F {
        g * g / (h + self.ridge)
    }

    fn best_for_feature(&self, f: usize, pos: &[u32], g_sum: F, h_sum: F, parent: F) -> Option<(F, usize)> {
        let thr = &self.thresholds[f];
        if thr.is_empty() {
            return None;
        }
        let col = &self.bins[f * self.n_rows..(f + 1) * self.n_rows];
        let nb = thr.len() + 1;
        let mut hg = vec![F::zero(); nb];
        let mut hh = vec![F::zero(); nb];
        let mut hc = vec![0usize; nb];
        for &p in pos {
            let b = col[p as usize] as usize;
            hg[b] += self.grad[p as usize];
            hh[b] += self.hess[p as usize];
            hc[b] += 1;
        }
        let total = pos.len();
        let (mut gl, mut hl, mut cl) = (F::zero(), F::zero(), 0usize);
        let mut best: Option<(F, usize)> = None;
        for j in 0..thr.len() {
            gl += hg[j];
            hl += hh[j];
            cl += hc[j];
            if cl < self.min_leaf {
                continue;
            }
            if total - cl < self.min_leaf {
                break;
            }
            let gain = self.score(gl, hl) + self.score(g_sum - gl, h_sum - hl) - parent;
            if best.as_ref().is_none_or(|(bg, _)| gain > *bg) {
                best = Some((gain, j));
            }
        }
        best
    }

    fn best_split(&self, pos: &[u32], g_sum: F, h_sum: F) -> Option<SplitCandidate<F>> {
        let parent = self.score(g_sum, h_sum);
        let d = self.thresholds.len();
        let per_feature: Vec<Option<(F, usize)>> = if pos.len() * d >= PARALLEL_SPLIT_WORK {
            (0..d).into_par_iter().map(|f| self.best_for_feature(f, pos, g_sum, h_sum, parent)).collect()
        } else {
            (0..d).map(|f| self.best_for_feature(f, pos, g_sum, h_sum, parent)).collect()
        };
        // fixed feature order keeps the choice independent of thread scheduling
        let mut best: Option<SplitCandidate<F>> = None;
        for (feature, cand) in per_feature.into_iter().enumerate() {
            if let Some((gain, bin)) = cand {
                if gain > F::zero() && best.as_ref().is_none_or(|b| gain > b.gain) {
                    best = Some(SplitCandidate { gain, feature, bin });
                }
            }
        }
        best
    }

    fn build(&mut self, pos: &mut [u32], depth: usize) -> usize {
        let mut g_sum = F::zero();
        let mut h_sum = F::zero();
        for &p in pos.iter() {
            g_sum += self.grad[p as usize];
            h_sum += self.hess[p as usize];
        }
        let idx = self.nodes.len();
        self.nodes.push(Node::Leaf { value: F::zero(), leaf: 0 });

        if depth < self.max_depth && pos.len() >= 2 * self.min_leaf {
            if let Some(split) = self.best_split(pos, g_sum, h_sum) {
                let col = &self.bins[split.feature * self.n_rows..(split.feature + 1) * self.n_rows];
                let mut n_left = 0;
                for i in 0..pos.len() {
                    if col[pos[i] as usize] as usize <= split.bin {
                        pos.swap(i, n_left);
                        n_left += 1;
                    }
                }
                let (lo, hi) = pos.split_at_mut(n_left);
                let left = self.build(lo, depth + 1);
                let right = self.build(hi, depth + 1);
                self.nodes[idx] = Node::Split {
                    feature: split.feature,
                    threshold: self.thresholds[split.feature][split.bin],
                    left,
                    right,
                };
                return idx;
            }
        }
        let value = -g_sum / (h_sum + self.ridge) * self.shrinkage;
        self.nodes[idx] = Node::Leaf { value, leaf: self.leaves };
        self.leaves += 1;
        idx
    }
}

/// Fits a boosted ensemble.
///
/// Each stage fits one tree per raw output to the negative gradients with Newton
/// leaf values `-ΣG / (ΣH + 1)`, shrunk by the learning rate. With `subsample < 1`
/// a stage sees a seeded Bernoulli row sample; with `langevin_noise_sd > 0` Gaussian
/// noise is added to each sampled row's gradients before the tree is grown.
pub fn fit<F: Scalar>(
    x: &Matrix<F>,
    targets: Targets<'_, F>,
    params: &TrainParams,
    loss: Loss,
) -> Result<BoostedModel<F>> {
    params.validate()?;
    let n = x.rows();
    let d = x.cols();
    if n == 0 {
        return Err(Error::Empty("training data has no rows".into()));
    }
    if d == 0 {
        return Err(Error::invalid("training data has no feature columns"));
    }
    if targets.len() != n {
        return Err(Error::invalid(format!("{} targets for {n} rows", targets.len())));
    }
    if let Some(i) = x.as_slice().iter().position(|v| !v.is_finite()) {
        return Err(Error::invalid(format!("feature value at row {}, column {} is not finite", i / d, i % d)));
    }
    let class_count = check_targets(&targets, loss)?;
    let base = base_score(&targets, loss);
    let k = base.len();
    let y = targets.as_scalars();

    let mut raw: Vec<F> = (0..n).flat_map(|_| base.iter().copied()).collect();
    let mut grad = vec![F::zero(); n * k];
    let mut hess = vec![F::zero(); n * k];
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let all_rows: Vec<u32> = (0..n as u32).collect();
    let max_thr = params.max_thresholds_per_feature;
    let full_batch = params.subsample >= 1.0;
    let full_thresholds: Option<Vec<Vec<F>>> =
        full_batch.then(|| (0..d).map(|f| candidate_thresholds(x, &all_rows, f, max_thr)).collect());
    let shrinkage = F::lit(params.learning_rate);
    let noise = F::lit(params.langevin_noise_sd);

    let mut stages = Vec::with_capacity(params.num_stages);
    for _ in 0..params.num_stages {
        let rows: Vec<u32> = if full_batch {
            all_rows.clone()
        } else {
            (0..n as u32).filter(|_| rng.random::<f64>() < params.subsample).collect()
        };
        if rows.is_empty() {
            stages.push(vec![Tree::leaf(F::zero()); k]);
            continue;
        }
        for &r in &rows {
            let r = r as usize;
            let s = r * k..(r + 1) * k;
            loss.grad_hess(&raw[s.clone()], y[r], &mut grad[s.clone()], &mut hess[s]);
        }
        if params.langevin_noise_sd > 0.0 {
            for &r in &rows {
                for c in 0..k {
                    let z: f64 = rng.sample(StandardNormal);
                    grad[r as usize * k + c] += noise * F::lit(z);
                }
            }
        }

        let local_thresholds;
        let thresholds = match &full_thresholds {
            Some(t) => t,
            None => {
                local_thresholds = (0..d).map(|f| candidate_thresholds(x, &rows, f, max_thr)).collect::<Vec<_>>();
                &local_thresholds
            }
        };
        let m = rows.len();
        let mut bins = vec![0u16; d * m];
        for (f, thr) in thresholds.iter().enumerate() {
            for (p, &r) in rows.iter().enumerate() {
                let v = x.get(r as usize, f);
                bins[f * m + p] = thr.partition_point(|t| *t <= v) as u16;
            }
        }

        let mut trees = Vec::with_capacity(k);
        for c in 0..k {
            let g: Vec<F> = rows.iter().map(|&r| grad[r as usize * k + c]).collect();
            let h: Vec<F> = rows.iter().map(|&r| hess[r as usize * k + c]).collect();
            let mut builder = TreeBuilder {
                bins: &bins,
                n_rows: m,
                thresholds,
                grad: &g,
                hess: &h,
                max_depth: params.max_depth,
                min_leaf: params.min_samples_leaf,
                shrinkage,
                ridge: F::lit(LEAF_RIDGE),
                nodes: Vec::new(),
                leaves: 0,
            };
            let mut pos: Vec<u32> = (0..m as u32).collect();
            builder.build(&mut pos, 0);
            trees.push(Tree::from_nodes_unchecked(builder.nodes, builder.leaves));
        }
        for i in 0..n {
            let xi = x.row(i);
            for (c, tree) in trees.iter().enumerate() {
                raw[i * k + c] += tree.predict(xi);
            }
        }
        stages.push(trees);
    }
    BoostedModel::from_parts(params.clone(), loss, class_count, d, base, stages)
}

impl<F: Scalar> BoostedModel<F> {
    /// Mean training loss after each prefix `0..=T` (index 0 is the base score alone).
    /// Classification targets are class indices.
    pub fn staged_loss(&self, x: &Matrix<F>, y: &[F]) -> Result<Vec<F>> {
        if x.rows() != y.len() || x.rows() == 0 {
            return Err(Error::invalid("staged_loss needs aligned, non-empty rows and targets"));
        }
        if x.cols() != self.n_features() {
            return Err(Error::invalid("staged_loss feature count mismatch"));
        }
        let loss = self.loss();
        let t = self.num_stages();
        let mut totals = vec![F::zero(); t + 1];
        for (i, &yi) in y.iter().enumerate() {
            let xi = x.row(i);
            let mut raw = self.base_score().to_vec();
            totals[0] += loss.value(&raw, yi);
            for (s, stage) in self.stages().iter().enumerate() {
                for (r, tree) in raw.iter_mut().zip(stage) {
                    *r += tree.predict(xi);
                }
                totals[s + 1] += loss.value(&raw, yi);
            }
        }
        let nf = F::from_usize_lossy(y.len());
        Ok(totals.into_iter().map(|v| v / nf).collect())
    }
}

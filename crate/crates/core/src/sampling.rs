//! Query selection: top-M by score, uniform random, and GSx greedy input-space diversity.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::scalar::Scalar;

/// A batch chosen for oracle labelling, in pick order.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Selection {
    pub chosen: Vec<usize>,
    pub strategy: String,
}

/// Positions of the `m` highest scores, highest first; ties go to the lower position.
pub fn select_top_m<F: Scalar>(scores: &[F], m: usize) -> Result<Selection> {
    if scores.is_empty() {
        return Err(Error::Empty("pool".into()));
    }
    if m == 0 {
        return Err(Error::invalid("batch size m must be at least 1"));
    }
    if let Some(i) = scores.iter().position(|s| !s.is_finite()) {
        return Err(Error::invalid(format!("score at pool position {i} is not finite")));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].partial_cmp(&scores[a]).expect("finite").then(a.cmp(&b)));
    order.truncate(m);
    Ok(Selection { chosen: order, strategy: "top_m".into() })
}

/// Uniform sample of `min(m, |pool|)` pool entries without replacement, in seeded shuffle order.
pub fn random_select(pool_idx: &[usize], m: usize, seed: u64) -> Result<Selection> {
    if pool_idx.is_empty() {
        return Err(Error::Empty("pool".into()));
    }
    if m == 0 {
        return Err(Error::invalid("batch size m must be at least 1"));
    }
    let mut pool = pool_idx.to_vec();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let take = m.min(pool.len());
    let (chosen, _) = pool.partial_shuffle(&mut rng, take);
    Ok(Selection { chosen: chosen.to_vec(), strategy: "random".into() })
}

fn sq_dist<F: Scalar>(a: &[F], b: &[F]) -> F {
    a.iter().zip(b).map(|(&x, &y)| (x - y) * (x - y)).sum()
}

/// GSx: repeatedly picks the pool row farthest (Euclidean) from every labelled or
/// already-picked row. With no labelled rows the first pick is the pool row nearest
/// the pool centroid. Ties go to the lower pool position. Returns row ids from `pool_idx`.
pub fn gsx_select<F: Scalar>(
    features: &Matrix<F>,
    labelled_idx: &[usize],
    pool_idx: &[usize],
    m: usize,
) -> Result<Selection> {
    if pool_idx.is_empty() {
        return Err(Error::Empty("pool".into()));
    }
    if m == 0 {
        return Err(Error::invalid("batch size m must be at least 1"));
    }
    if let Some(&bad) = pool_idx.iter().chain(labelled_idx).find(|&&i| i >= features.rows()) {
        return Err(Error::invalid(format!("row {bad} outside the feature matrix")));
    }
    let take = m.min(pool_idx.len());
    let mut picked = vec![false; pool_idx.len()];
    let mut chosen = Vec::with_capacity(take);
    let mut min_dist = vec![F::infinity(); pool_idx.len()];

    let update = |min_dist: &mut [F], from: &[F]| {
        for (d, &p) in min_dist.iter_mut().zip(pool_idx) {
            let v = sq_dist(features.row(p), from);
            if v < *d {
                *d = v;
            }
        }
    };

    if labelled_idx.is_empty() {
        let n = F::from_usize_lossy(pool_idx.len());
        let mut centroid = vec![F::zero(); features.cols()];
        for &p in pool_idx {
            for (c, &v) in centroid.iter_mut().zip(features.row(p)) {
                *c += v;
            }
        }
        centroid.iter_mut().for_each(|c| *c /= n);
        let mut first = 0;
        let mut best = F::infinity();
        for (pos, &p) in pool_idx.iter().enumerate() {
            let d = sq_dist(features.row(p), &centroid);
            if d < best {
                best = d;
                first = pos;
            }
        }
        picked[first] = true;
        chosen.push(pool_idx[first]);
        update(&mut min_dist, features.row(pool_idx[first]));
    } else {
        for &l in labelled_idx {
            update(&mut min_dist, features.row(l));
        }
    }

    while chosen.len() < take {
        let mut next = None;
        for pos in 0..pool_idx.len() {
            if !picked[pos] && next.is_none_or(|b: usize| min_dist[pos] > min_dist[b]) {
                next = Some(pos);
            }
        }
        let pos = next.expect("unpicked pool rows remain");
        picked[pos] = true;
        chosen.push(pool_idx[pos]);
        update(&mut min_dist, features.row(pool_idx[pos]));
    }
    Ok(Selection { chosen, strategy: "gsx".into() })
}

use crate::error::{Error, Result};
use crate::gbdt::BoostedModel;
use crate::matrix::Matrix;
use crate::scalar::Scalar;

/// Leaf memberships of the training rows, plus an inverted index per tree.
#[derive(Clone, Debug, PartialEq)]
pub struct LeafCache {
    tree_count: usize,
    row_leaves: Vec<Vec<u32>>,
    /// `postings[tree][leaf]` lists the training rows landing in that leaf, ascending.
    postings: Vec<Vec<Vec<u32>>>,
}

impl LeafCache {
    pub fn build<F: Scalar>(model: &BoostedModel<F>, train_x: &Matrix<F>) -> Result<Self> {
        let trees: Vec<_> = model.stages().iter().flatten().collect();
        let mut postings: Vec<Vec<Vec<u32>>> = trees.iter().map(|t| vec![Vec::new(); t.leaf_count()]).collect();
        let mut row_leaves = Vec::with_capacity(train_x.rows());
        for (i, x) in train_x.iter_rows().enumerate() {
            let leaves = model.leaf_indices(x)?;
            for (t, &leaf) in leaves.iter().enumerate() {
                postings[t][leaf].push(i as u32);
            }
            row_leaves.push(leaves.into_iter().map(|l| l as u32).collect());
        }
        Ok(Self { tree_count: trees.len(), row_leaves, postings })
    }

    pub fn tree_count(&self) -> usize {
        self.tree_count
    }

    pub fn row_count(&self) -> usize {
        self.row_leaves.len()
    }

    pub fn row_leaves(&self, row: usize) -> &[u32] {
        &self.row_leaves[row]
    }
}

/// Tree-ensemble kernel: for each training row, the number of trees in which it
/// shares a leaf with `x`.
pub fn ibug_affinities<F: Scalar>(model: &BoostedModel<F>, cache: &LeafCache, x: &[F]) -> Result<Vec<u32>> {
    if cache.tree_count != model.tree_count() {
        return Err(Error::invalid(format!(
            "leaf cache has {} trees, model has {}",
            cache.tree_count,
            model.tree_count()
        )));
    }
    let leaves = model.leaf_indices(x)?;
    let mut affinity = vec![0u32; cache.row_count()];
    for (t, &leaf) in leaves.iter().enumerate() {
        for &r in cache.postings[t].get(leaf).map_or(&[][..], Vec::as_slice) {
            affinity[r as usize] += 1;
        }
    }
    Ok(affinity)
}

/// Unbiased variance of the targets of the `k` highest-affinity training rows
/// (ties broken by lower row index). `k` is clamped to the number of rows.
pub fn ibug_uncertainty<F: Scalar>(affinities: &[u32], train_targets: &[F], k: usize) -> Result<F> {
    let n = affinities.len();
    if train_targets.len() != n {
        return Err(Error::invalid(format!("{n} affinities but {} targets", train_targets.len())));
    }
    if n < 2 {
        return Err(Error::invalid(format!("IBUG needs at least 2 training rows, got {n}")));
    }
    let k = k.min(n);
    if k < 2 {
        return Err(Error::invalid(format!("IBUG needs k >= 2, got {k}")));
    }
    let mut order: Vec<u32> = (0..n as u32).collect();
    let rank = |a: &u32, b: &u32| affinities[*b as usize].cmp(&affinities[*a as usize]).then(a.cmp(b));
    if k < n {
        order.select_nth_unstable_by(k - 1, rank);
        order.truncate(k);
    }
    order.sort_unstable();
    let vals: Vec<F> = order.iter().map(|&i| train_targets[i as usize]).collect();
    let kf = F::from_usize_lossy(k);
    let mean = vals.iter().copied().sum::<F>() / kf;
    Ok(vals.iter().map(|&v| (v - mean) * (v - mean)).sum::<F>() / (kf - F::one()))
}

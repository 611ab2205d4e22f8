use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{Dataset, Labels};
use crate::error::{Error, Result};

/// Disjoint train/test row indices, each sorted ascending.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SplitIndices {
    pub train_idx: Vec<usize>,
    pub test_idx: Vec<usize>,
}

/// Seeded train/test split. Classification splits are stratified whenever every
/// class has at least two rows and every row is labelled.
pub fn train_test_split(dataset: &Dataset, test_fraction: f64, seed: u64) -> Result<SplitIndices> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::invalid(format!("test_fraction must be in (0, 1), got {test_fraction}")));
    }
    let n = dataset.row_count();
    if n < 2 {
        return Err(Error::invalid(format!("cannot split {n} rows")));
    }
    let n_test = ((n as f64 * test_fraction).round() as usize).clamp(1, n - 1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let strata = match dataset.labels() {
        Labels::Class { values, names } if values.iter().all(Option::is_some) => {
            let mut groups = vec![Vec::new(); names.len()];
            for (i, v) in values.iter().enumerate() {
                groups[v.unwrap()].push(i);
            }
            let present: Vec<Vec<usize>> = groups.into_iter().filter(|g| !g.is_empty()).collect();
            present.iter().all(|g| g.len() >= 2).then_some(present)
        }
        _ => None,
    };

    let mut test_idx = match strata {
        Some(mut groups) => {
            // largest-remainder allocation keeps the total exact
            let quotas: Vec<f64> = groups.iter().map(|g| g.len() as f64 * n_test as f64 / n as f64).collect();
            let mut alloc: Vec<usize> = quotas.iter().map(|q| q.floor() as usize).collect();
            let mut order: Vec<usize> = (0..groups.len()).collect();
            order.sort_by(|&a, &b| {
                (quotas[b] - quotas[b].floor()).total_cmp(&(quotas[a] - quotas[a].floor())).then(a.cmp(&b))
            });
            let mut remaining = n_test - alloc.iter().sum::<usize>();
            for &g in order.iter().cycle() {
                if remaining == 0 {
                    break;
                }
                if alloc[g] < groups[g].len() {
                    alloc[g] += 1;
                    remaining -= 1;
                }
            }
            let mut test = Vec::with_capacity(n_test);
            for (g, take) in groups.iter_mut().zip(alloc) {
                g.shuffle(&mut rng);
                test.extend_from_slice(&g[..take]);
            }
            test
        }
        None => {
            let mut all: Vec<usize> = (0..n).collect();
            all.shuffle(&mut rng);
            all.truncate(n_test);
            all
        }
    };
    test_idx.sort_unstable();
    let mut is_test = vec![false; n];
    for &i in &test_idx {
        is_test[i] = true;
    }
    let train_idx = (0..n).filter(|&i| !is_test[i]).collect();
    Ok(SplitIndices { train_idx, test_idx })
}

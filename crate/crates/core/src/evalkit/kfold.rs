use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::EvalError;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Fold {
    pub train: Vec<String>,
    pub test: Vec<String>,
}

/// Seeded shuffle into `k` disjoint test folds; sizes differ by at most one,
/// larger folds first. Ids inside each list keep their input order.
pub fn kfold(doc_ids: &[String], k: usize, seed: u64) -> Result<Vec<Fold>, EvalError> {
    let n = doc_ids.len();
    if k < 2 || k > n {
        return Err(EvalError::Folds { n, k });
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut fold_of = vec![0usize; n];
    let mut next = 0;
    for f in 0..k {
        let size = n / k + usize::from(f < n % k);
        for &i in &order[next..next + size] {
            fold_of[i] = f;
        }
        next += size;
    }
    Ok((0..k)
        .map(|f| {
            let (test, train): (Vec<_>, Vec<_>) = (0..n).partition(|&i| fold_of[i] == f);
            Fold {
                train: train.into_iter().map(|i| doc_ids[i].clone()).collect(),
                test: test.into_iter().map(|i| doc_ids[i].clone()).collect(),
            }
        })
        .collect())
}

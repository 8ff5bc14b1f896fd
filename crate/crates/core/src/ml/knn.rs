use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::matrix::{squared_distance, Matrix};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnnModel {
    pub k: usize,
    pub train: Matrix,
    pub labels: Vec<u8>,
}

/// Indices of the `k` training rows closest to `query`, nearest first.
/// Equal distances are ordered by row index.
pub fn nearest_neighbours(train: &Matrix, query: &[f64], k: usize) -> Vec<usize> {
    let mut d: Vec<(f64, usize)> = train
        .iter_rows()
        .enumerate()
        .map(|(i, r)| (squared_distance(r, query), i))
        .collect();
    let k = k.min(d.len());
    let cmp = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
    if k < d.len() {
        d.select_nth_unstable_by(k, cmp);
        d.truncate(k);
    }
    d.sort_by(cmp);
    d.into_iter().map(|(_, i)| i).collect()
}

impl KnnModel {
    pub fn fit(x: &Matrix, y: &[u8], k: usize) -> Self {
        KnnModel {
            k,
            train: x.clone(),
            labels: y.to_vec(),
        }
    }

    pub fn predict_row(&self, row: &[f64]) -> u8 {
        let nn = nearest_neighbours(&self.train, row, self.k);
        let ones = nn.iter().filter(|&&i| self.labels[i] == 1).count();
        let zeros = nn.len() - ones;
        match ones.cmp(&zeros) {
            std::cmp::Ordering::Greater => 1,
            std::cmp::Ordering::Less => 0,
            std::cmp::Ordering::Equal => self.labels[nn[0]],
        }
    }

    pub fn predict(&self, x: &Matrix) -> Vec<u8> {
        (0..x.rows())
            .into_par_iter()
            .map(|i| self.predict_row(x.row(i)))
            .collect()
    }
}

//! Exact t-SNE.
//!
//! Affinities are computed over all pairs (O(n^2) per iteration), so inputs
//! above [`MAX_POINTS`] are embedded on a seeded uniform subsample.

use std::io::Write;

use rand::{seq::index, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::matrix::{squared_distance, Matrix};

pub const MAX_POINTS: usize = 5000;
const ENTROPY_TOL: f64 = 1e-5;
const MAX_BISECTIONS: usize = 64;
const DISTANCE_FLOOR: f64 = 1e-12;
const MIN_GAIN: f64 = 0.01;
/// Stream for subsample selection, kept apart from the initialization stream.
const SUBSAMPLE_STREAM: u64 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TsneConfig {
    pub perplexity: f64,
    pub iterations: usize,
    pub learning_rate: f64,
    pub momentum_early: f64,
    pub momentum_late: f64,
    /// Iteration at which momentum switches and exaggeration ends.
    pub switch_iteration: usize,
    pub early_exaggeration: f64,
    pub seed: u64,
}

impl TsneConfig {
    pub fn new(seed: u64) -> Self {
        TsneConfig {
            perplexity: 30.0,
            iterations: 1000,
            learning_rate: 200.0,
            momentum_early: 0.5,
            momentum_late: 0.8,
            switch_iteration: 250,
            early_exaggeration: 12.0,
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EmbedError {
    #[error("t-SNE needs at least 3 points, got {0}")]
    TooFewPoints(usize),
    #[error("perplexity {perplexity} must be positive and below the number of points ({n})")]
    BadPerplexity { perplexity: f64, n: usize },
    #[error("at least {min} iterations are required, got {got}")]
    TooFewIterations { min: usize, got: usize },
    #[error("gradient became NaN at iteration {0}")]
    NanGradient(usize),
    #[error("input contains non-finite values")]
    NonFinite,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Embedding {
    /// `n x 2` coordinates; row `i` belongs to input row `rows[i]`.
    pub coords: Matrix,
    pub rows: Vec<usize>,
    pub subsampled: bool,
    pub final_kl: f64,
    /// KL divergence after each iteration (index 0 is iteration 1).
    pub kl_trace: Vec<f64>,
}

fn entropy_bits(p: &[f64]) -> f64 {
    -p.iter().filter(|v| **v > 0.0).map(|v| v * v.log2()).sum::<f64>()
}

/// Row of conditional probabilities for the given precision `beta`, with the
/// row's own index excluded.
fn row_probabilities(dist: &[f64], i: usize, beta: f64, out: &mut [f64]) -> f64 {
    let dmin = dist
        .iter()
        .enumerate()
        .filter(|(j, _)| *j != i)
        .map(|(_, d)| *d)
        .fold(f64::INFINITY, f64::min);
    let mut z = 0.0;
    for (j, (o, d)) in out.iter_mut().zip(dist).enumerate() {
        *o = if j == i { 0.0 } else { (-beta * (d - dmin)).exp() };
        z += *o;
    }
    for o in out.iter_mut() {
        *o /= z;
    }
    entropy_bits(out)
}

/// Conditional affinities `p_{j|i}` (row `i`), each row calibrated so that
/// its entropy is `log2(perplexity)`.
pub fn conditional_affinities(x: &Matrix, perplexity: f64) -> Result<Matrix, EmbedError> {
    let n = x.rows();
    if n < 3 {
        return Err(EmbedError::TooFewPoints(n));
    }
    if !(perplexity > 0.0 && perplexity < n as f64) {
        return Err(EmbedError::BadPerplexity { perplexity, n });
    }
    let target = perplexity.log2();
    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let dist: Vec<f64> = (0..n)
                .map(|j| squared_distance(x.row(i), x.row(j)).max(DISTANCE_FLOOR))
                .collect();
            let mut p = vec![0.0; n];
            let (mut lo, mut hi) = (0.0f64, f64::INFINITY);
            let mut beta = 1.0;
            for _ in 0..MAX_BISECTIONS {
                let h = row_probabilities(&dist, i, beta, &mut p);
                if (h - target).abs() < ENTROPY_TOL {
                    break;
                }
                if h > target {
                    lo = beta;
                    beta = if hi.is_infinite() { beta * 2.0 } else { (beta + hi) / 2.0 };
                } else {
                    hi = beta;
                    beta = (beta + lo) / 2.0;
                }
            }
            row_probabilities(&dist, i, beta, &mut p);
            p
        })
        .collect();
    Ok(Matrix::from_rows(&rows).expect("rows have equal length"))
}

/// `p_ij = (p_{j|i} + p_{i|j}) / 2n`.
pub fn symmetrize(cond: &Matrix) -> Matrix {
    let n = cond.rows();
    let mut p = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            p.set(i, j, (cond.get(i, j) + cond.get(j, i)) / (2.0 * n as f64));
        }
    }
    p
}

/// Student-t kernel `(1 + |y_i - y_j|^2)^-1` (zero diagonal) and its sum.
fn kernel(y: &Matrix) -> (Matrix, f64) {
    let n = y.rows();
    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            (0..n)
                .map(|j| if i == j { 0.0 } else { 1.0 / (1.0 + squared_distance(y.row(i), y.row(j))) })
                .collect()
        })
        .collect();
    let sums: Vec<f64> = rows.iter().map(|r| r.iter().sum()).collect();
    let total = sums.iter().sum();
    (Matrix::from_rows(&rows).expect("square"), total)
}

/// Joint low-dimensional affinities; sums to 1 over ordered pairs.
pub fn joint_q(y: &Matrix) -> Matrix {
    let (num, total) = kernel(y);
    let n = y.rows();
    let mut q = num;
    for i in 0..n {
        for v in q.row_mut(i) {
            *v /= total;
        }
    }
    q
}

pub fn kl_divergence(p: &Matrix, q: &Matrix) -> f64 {
    p.as_slice()
        .iter()
        .zip(q.as_slice())
        .filter(|(pv, _)| **pv > 0.0)
        .map(|(pv, qv)| pv * (pv / qv.max(f64::MIN_POSITIVE)).ln())
        .sum::<f64>()
        .max(0.0)
}

/// Uniform subsample of `max` sorted row indices, or `None` when `n <= max`.
pub fn subsample_rows(n: usize, max: usize, seed: u64) -> Option<Vec<usize>> {
    if n <= max {
        return None;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(SUBSAMPLE_STREAM);
    let mut idx = index::sample(&mut rng, n, max).into_vec();
    idx.sort_unstable();
    Some(idx)
}

pub fn tsne_embed(x: &Matrix, config: &TsneConfig) -> Result<Embedding, EmbedError> {
    if x.as_slice().iter().any(|v| !v.is_finite()) {
        return Err(EmbedError::NonFinite);
    }
    if config.iterations < config.switch_iteration {
        return Err(EmbedError::TooFewIterations {
            min: config.switch_iteration,
            got: config.iterations,
        });
    }
    let (rows, subsampled) = match subsample_rows(x.rows(), MAX_POINTS, config.seed) {
        Some(idx) => {
            log::info!("embedding a subsample of {} of {} points", idx.len(), x.rows());
            (idx, true)
        }
        None => ((0..x.rows()).collect(), false),
    };
    let data = if subsampled { x.select_rows(&rows) } else { x.clone() };
    let n = data.rows();
    let p = symmetrize(&conditional_affinities(&data, config.perplexity)?);

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let normal = Normal::new(0.0, 1e-4).expect("valid normal");
    let init: Vec<f64> = (0..n * 2).map(|_| normal.sample(&mut rng)).collect();
    let mut y = Matrix::from_vec(n, 2, init).expect("n x 2");
    let mut update = vec![0.0; n * 2];
    let mut gains = vec![1.0f64; n * 2];
    let mut trace = Vec::with_capacity(config.iterations);

    for iter in 0..config.iterations {
        let early = iter < config.switch_iteration;
        let exaggeration = if early { config.early_exaggeration } else { 1.0 };
        let momentum = if early { config.momentum_early } else { config.momentum_late };
        let (num, total) = kernel(&y);
        let grad: Vec<[f64; 2]> = (0..n)
            .into_par_iter()
            .map(|i| {
                let yi = y.row(i);
                let mut g = [0.0; 2];
                for j in 0..n {
                    let w = num.get(i, j);
                    let m = (exaggeration * p.get(i, j) - w / total) * w;
                    let yj = y.row(j);
                    g[0] += m * (yi[0] - yj[0]);
                    g[1] += m * (yi[1] - yj[1]);
                }
                [4.0 * g[0], 4.0 * g[1]]
            })
            .collect();
        if grad.iter().any(|g| g[0].is_nan() || g[1].is_nan()) {
            return Err(EmbedError::NanGradient(iter + 1));
        }
        for (k, g) in grad.iter().flatten().enumerate() {
            gains[k] = if (*g > 0.0) != (update[k] > 0.0) {
                gains[k] + 0.2
            } else {
                (gains[k] * 0.8).max(MIN_GAIN)
            };
            update[k] = momentum * update[k] - config.learning_rate * gains[k] * g;
        }
        for i in 0..n {
            let r = y.row_mut(i);
            r[0] += update[2 * i];
            r[1] += update[2 * i + 1];
        }
        for c in 0..2 {
            let mean = (0..n).map(|i| y.get(i, c)).sum::<f64>() / n as f64;
            for i in 0..n {
                y.set(i, c, y.get(i, c) - mean);
            }
        }
        trace.push(kl_divergence(&p, &joint_q(&y)));
    }
    Ok(Embedding {
        coords: y,
        rows,
        subsampled,
        final_kl: trace.last().copied().unwrap_or(0.0),
        kl_trace: trace,
    })
}

/// One output row of the embedding TSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddedPoint {
    pub commit_id: String,
    pub x: f64,
    pub y: f64,
    pub bug_label: u8,
    pub category_label: u8,
}

/// Writes `commit_id, x, y, bug_label, category_label`, tab-separated.
pub fn write_embedding_tsv<W: Write>(out: W, points: &[EmbeddedPoint]) -> csv::Result<()> {
    let mut w = csv::WriterBuilder::new().delimiter(b'\t').from_writer(out);
    for p in points {
        w.serialize(p)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn gaussian(n: usize, d: usize, seed: u64) -> Matrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let normal = Normal::new(0.0, 1.0).unwrap();
        Matrix::from_vec(n, d, (0..n * d).map(|_| normal.sample(&mut rng)).collect()).unwrap()
    }

    #[test]
    fn equidistant_points_are_uniform() {
        let h = 3f64.sqrt() / 2.0;
        let x = Matrix::from_rows(&[[0.0, 0.0], [1.0, 0.0], [0.5, h]]).unwrap();
        let p = conditional_affinities(&x, 2.0).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let expect = if i == j { 0.0 } else { 0.5 };
                assert!((p.get(i, j) - expect).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn rows_normalized_and_calibrated() {
        let x = gaussian(200, 5, 1);
        let p = conditional_affinities(&x, 30.0).unwrap();
        for i in 0..200 {
            let row = p.row(i);
            assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-10);
            // Entropy recomputed with natural logs, then converted.
            let h: f64 = -row.iter().filter(|v| **v > 0.0).map(|v| v * v.ln()).sum::<f64>() / 2f64.ln();
            assert!((h - 30f64.log2()).abs() < 1e-3);
        }
        let joint = symmetrize(&p);
        assert!((joint.as_slice().iter().sum::<f64>() - 1.0).abs() < 1e-10);
        for i in 0..200 {
            for j in 0..200 {
                assert_eq!(joint.get(i, j), joint.get(j, i));
            }
        }
    }

    #[test]
    fn duplicate_points_do_not_break_search() {
        let x = Matrix::from_rows(&[[1.0, 1.0], [1.0, 1.0], [1.0, 1.0], [2.0, 0.0]]).unwrap();
        let p = conditional_affinities(&x, 2.0).unwrap();
        assert!(p.as_slice().iter().all(|v| v.is_finite()));
    }

    #[test]
    fn q_is_normalized() {
        let y = gaussian(50, 2, 3);
        let q = joint_q(&y);
        assert!((q.as_slice().iter().sum::<f64>() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn kl_invariant_under_rotation() {
        let x = gaussian(40, 4, 5);
        let p = symmetrize(&conditional_affinities(&x, 10.0).unwrap());
        let y = gaussian(40, 2, 6);
        let (s, c) = 0.7f64.sin_cos();
        let mut r = y.clone();
        for i in 0..40 {
            let (a, b) = (y.get(i, 0), y.get(i, 1));
            r.set(i, 0, c * a - s * b);
            r.set(i, 1, s * a + c * b);
        }
        let k1 = kl_divergence(&p, &joint_q(&y));
        let k2 = kl_divergence(&p, &joint_q(&r));
        assert!((k1 - k2).abs() < 1e-8);
        assert!(k1 >= 0.0);
    }

    #[test]
    fn separates_two_clusters_and_is_deterministic() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mut rows = Vec::new();
        for i in 0..100 {
            let centre = if i < 50 { 0.0 } else { 10.0 };
            rows.push((0..5).map(|_| centre + rng.random_range(-1.0..1.0)).collect::<Vec<f64>>());
        }
        let x = Matrix::from_rows(&rows).unwrap();
        let cfg = TsneConfig {
            iterations: 500,
            ..TsneConfig::new(4)
        };
        let e = tsne_embed(&x, &cfg).unwrap();
        let dist = |i: usize, j: usize| squared_distance(e.coords.row(i), e.coords.row(j)).sqrt();
        let (mut intra, mut inter, mut ni, mut nx) = (0.0, 0.0, 0, 0);
        for i in 0..100 {
            for j in i + 1..100 {
                if (i < 50) == (j < 50) {
                    intra += dist(i, j);
                    ni += 1;
                } else {
                    inter += dist(i, j);
                    nx += 1;
                }
            }
        }
        assert!(inter / nx as f64 > 3.0 * intra / ni as f64);
        assert!(e.coords.as_slice().iter().all(|v| v.is_finite()));
        assert_eq!(e.kl_trace.len(), 500);
        assert_eq!(tsne_embed(&x, &cfg).unwrap(), e);
    }

    #[test]
    fn validation() {
        let x = gaussian(10, 2, 0);
        assert!(matches!(tsne_embed(&x.select_rows(&[0, 1]), &TsneConfig::new(0)), Err(EmbedError::TooFewPoints(2))));
        assert!(matches!(tsne_embed(&x, &TsneConfig::new(0)), Err(EmbedError::BadPerplexity { .. })));
        let short = TsneConfig {
            iterations: 10,
            perplexity: 3.0,
            ..TsneConfig::new(0)
        };
        assert!(matches!(tsne_embed(&x, &short), Err(EmbedError::TooFewIterations { .. })));
    }

    #[test]
    fn subsample_is_seeded() {
        assert_eq!(subsample_rows(10, 20, 1), None);
        let a = subsample_rows(100, 10, 1).unwrap();
        assert_eq!(a.len(), 10);
        assert!(a.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(subsample_rows(100, 10, 1).unwrap(), a);
    }

    #[test]
    fn tsv_layout() {
        let mut buf = Vec::new();
        write_embedding_tsv(
            &mut buf,
            &[EmbeddedPoint {
                commit_id: "c".into(),
                x: 0.5,
                y: -1.0,
                bug_label: 1,
                category_label: 4,
            }],
        )
        .unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "commit_id\tx\ty\tbug_label\tcategory_label\nc\t0.5\t-1.0\t1\t4\n");
    }
}

//! Synthetic commit corpora with known class structure.
//!
//! Graph features follow fixed per-class reference means and standard
//! deviations for buggy and non-buggy commits; conventional features overlap
//! heavily between the classes. The result is a controlled testbed, not a
//! clone of any real project.

use std::io::Write;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand::distr::weighted::WeightedIndex;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal as StdNormal};
use statrs::function::erf::erfc;

use crate::dataset::{write_c_csv, CommitRecord, A_DIM, C_DIM};
use crate::graph_metrics::{write_feature_csv, GraphFeatureVector};

pub const MIN_COMMITS: usize = 100;

/// Buggy share over all subject systems (57,271 of 246,279 commits).
pub const DEFAULT_BUGGY_FRACTION: f64 = 0.23;

/// Per-class graph feature parameters, in feature order.
pub const BUGGY_MEANS: [f64; 12] = [56.05, 0.04, 23.05, 43.92, 1.62, 1.62, 12.3, 0.95, 87.84, 3.15, 2.47, 0.99];
pub const CLEAN_MEANS: [f64; 12] = [13.81, 0.05, 14.14, 23.76, 1.24, 1.24, 8.22, 0.82, 47.52, 2.46, 1.96, 0.77];
pub const BUGGY_STDEVS: [f64; 12] = [33.9, 0.04, 5.51, 13.08, 0.33, 0.33, 3.59, 0.17, 26.17, 0.85, 0.53, 0.19];
pub const CLEAN_STDEVS: [f64; 12] = [9.76, 0.05, 5.97, 11.23, 0.48, 0.48, 3.9, 0.28, 22.47, 1.16, 0.81, 0.31];

/// Commit counts per category (None, Merge, Corrective, Preventive, Feature
/// Addition, Non Functional, Perfective), summed over all subject systems.
pub const CATEGORY_COUNTS: [u64; 7] = [96592, 22428, 58023, 13640, 41097, 7192, 7307];

const NUM_CYCLES: usize = 0;
const DENSITY: usize = 1;
const NUM_EDGES: usize = 3;
const AVG_IN: usize = 4;
const AVG_OUT: usize = 5;
const SUM_DEGREE: usize = 8;
/// Integer-valued features (cycles, nodes, edges, max/min degree, self loops).
/// Sum of degrees is derived from the edge count.
const COUNT_FEATURES: [usize; 6] = [NUM_CYCLES, 2, NUM_EDGES, 6, 7, 11];

const BASE_TIMESTAMP: i64 = 1_262_304_000;
const MAX_GAP_SECONDS: i64 = 7200;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub n_commits: usize,
    pub buggy_fraction: f64,
    pub scg_means_buggy: [f64; 12],
    pub scg_means_clean: [f64; 12],
    pub scg_stdevs_buggy: [f64; 12],
    pub scg_stdevs_clean: [f64; 12],
    /// 1 means identical C distributions for both classes; 0 means class
    /// means one standard deviation apart.
    pub c_overlap: f64,
    pub seed: u64,
}

impl SynthSpec {
    pub fn new(n_commits: usize, seed: u64) -> Self {
        SynthSpec {
            n_commits,
            buggy_fraction: DEFAULT_BUGGY_FRACTION,
            scg_means_buggy: BUGGY_MEANS,
            scg_means_clean: CLEAN_MEANS,
            scg_stdevs_buggy: BUGGY_STDEVS,
            scg_stdevs_clean: CLEAN_STDEVS,
            c_overlap: 0.9,
            seed,
        }
    }

    fn validate(&self) -> Result<(), SynthError> {
        if self.n_commits < MIN_COMMITS {
            return Err(SynthError::TooSmall(self.n_commits));
        }
        if !(self.buggy_fraction > 0.0 && self.buggy_fraction < 1.0) {
            return Err(SynthError::Invalid(format!(
                "buggy_fraction must lie in (0, 1), got {}",
                self.buggy_fraction
            )));
        }
        if !(0.0..=1.0).contains(&self.c_overlap) {
            return Err(SynthError::Invalid(format!("c_overlap must lie in [0, 1], got {}", self.c_overlap)));
        }
        let params = self
            .scg_means_buggy
            .iter()
            .chain(&self.scg_means_clean)
            .chain(&self.scg_stdevs_buggy)
            .chain(&self.scg_stdevs_clean);
        if params.clone().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(SynthError::Invalid("graph feature parameters must be finite and non-negative".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SynthError {
    #[error("at least {MIN_COMMITS} commits are needed for a 70/30 split with both classes, got {0}")]
    TooSmall(usize),
    #[error("invalid synth spec: {0}")]
    Invalid(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthCorpus {
    pub spec: SynthSpec,
    /// In timestamp order.
    pub records: Vec<CommitRecord>,
}

/// Normal with mean `mu` and stdev `sigma`, truncated to `[0, inf)`.
#[derive(Debug, Clone, Copy)]
struct TruncatedNormal {
    mu: f64,
    sigma: f64,
}

fn std_normal() -> StdNormal {
    StdNormal::new(0.0, 1.0).expect("standard normal")
}

impl TruncatedNormal {
    /// Mean of the truncated distribution.
    fn mean(self) -> f64 {
        let alpha = -self.mu / self.sigma;
        let tail = 0.5 * erfc(alpha / std::f64::consts::SQRT_2);
        let pdf = (-0.5 * alpha * alpha).exp() / (2.0 * std::f64::consts::PI).sqrt();
        self.mu + self.sigma * pdf / tail
    }

    /// The parent location whose truncation has mean `target`.
    fn with_mean(target: f64, sigma: f64) -> Self {
        let (mut lo, mut hi) = (target - 10.0 * sigma, target);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if (TruncatedNormal { mu: mid, sigma }).mean() < target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        TruncatedNormal {
            mu: 0.5 * (lo + hi),
            sigma,
        }
    }

    fn quantile(self, u: f64) -> f64 {
        let n = std_normal();
        let lo = n.cdf(-self.mu / self.sigma);
        let p = (lo + u * (1.0 - lo)).clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON);
        (self.mu + self.sigma * n.inverse_cdf(p)).max(0.0)
    }
}

/// Latin-hypercube draws: one uniform per stratum of `[0, 1)`, in random
/// order. Sample means then sit much closer to the population mean than
/// with independent draws.
fn stratified_uniforms(rng: &mut ChaCha8Rng, m: usize) -> Vec<f64> {
    let mut strata: Vec<usize> = (0..m).collect();
    strata.shuffle(rng);
    strata
        .into_iter()
        .map(|s| (s as f64 + rng.random::<f64>()) / m as f64)
        .collect()
}

/// Rounds so that every running sum stays within 1/2 of the unrounded one;
/// each value moves to its floor or ceiling and the total is preserved.
fn cumulative_round(values: &mut [f64]) {
    let mut exact = 0.0;
    let mut emitted = 0.0;
    for v in values {
        exact += *v;
        let target = (exact + 0.5).floor();
        *v = target - emitted;
        emitted = target;
    }
}

/// One side's features for the rows of one class.
fn side_features(rng: &mut ChaCha8Rng, m: usize, means: &[f64; 12], stdevs: &[f64; 12]) -> Vec<[f64; 12]> {
    let mut out = vec![[0.0; 12]; m];
    if m == 0 {
        return out;
    }
    for f in 0..12 {
        if f == AVG_OUT || f == SUM_DEGREE {
            continue;
        }
        let mut col: Vec<f64> = if stdevs[f] == 0.0 {
            vec![means[f]; m]
        } else {
            let dist = TruncatedNormal::with_mean(means[f], stdevs[f]);
            stratified_uniforms(rng, m).into_iter().map(|u| dist.quantile(u)).collect()
        };
        if COUNT_FEATURES.contains(&f) {
            cumulative_round(&mut col);
        }
        if f == DENSITY {
            for v in &mut col {
                *v = v.clamp(0.0, 1.0);
            }
        }
        for (row, v) in out.iter_mut().zip(col) {
            row[f] = v;
        }
    }
    // Identities every graph satisfies.
    for row in &mut out {
        row[AVG_OUT] = row[AVG_IN];
        row[SUM_DEGREE] = 2.0 * row[NUM_EDGES];
    }
    out
}

pub fn generate(spec: &SynthSpec) -> Result<SynthCorpus, SynthError> {
    spec.validate()?;
    let n = spec.n_commits;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    let labels: Vec<u8> = (0..n).map(|_| u8::from(rng.random_bool(spec.buggy_fraction))).collect();
    let categories = WeightedIndex::new(CATEGORY_COUNTS).expect("positive weights");
    let category: Vec<u8> = (0..n).map(|_| categories.sample(&mut rng) as u8).collect();
    let mut ts = BASE_TIMESTAMP;
    let stamps: Vec<i64> = (0..n)
        .map(|_| {
            ts += rng.random_range(1..=MAX_GAP_SECONDS);
            ts
        })
        .collect();

    let shift = 1.0 - spec.c_overlap;
    let unit = Normal::new(0.0, 1.0).expect("unit normal");
    let c: Vec<[f64; C_DIM]> = labels
        .iter()
        .map(|&l| {
            let mut row = [0.0; C_DIM];
            for v in &mut row {
                *v = unit.sample(&mut rng) + if l == 1 { shift } else { 0.0 };
            }
            row
        })
        .collect();

    let buggy_rows: Vec<usize> = (0..n).filter(|&i| labels[i] == 1).collect();
    let clean_rows: Vec<usize> = (0..n).filter(|&i| labels[i] == 0).collect();
    let mut sides = [vec![[0.0; A_DIM]; n], vec![[0.0; A_DIM]; n]];
    for side in &mut sides {
        for (rows, means, stdevs) in [
            (&buggy_rows, &spec.scg_means_buggy, &spec.scg_stdevs_buggy),
            (&clean_rows, &spec.scg_means_clean, &spec.scg_stdevs_clean),
        ] {
            let feats = side_features(&mut rng, rows.len(), means, stdevs);
            for (&i, f) in rows.iter().zip(feats) {
                side[i] = f;
            }
        }
    }
    let [a, d] = sides;

    let width = n.to_string().len();
    let records = (0..n)
        .map(|i| CommitRecord {
            commit_id: format!("synth{}-{:0width$}", spec.seed, i),
            author_timestamp: stamps[i],
            c_features: c[i],
            a_features: a[i],
            d_features: d[i],
            bug_label: labels[i],
            category_label: category[i],
        })
        .collect();
    Ok(SynthCorpus {
        spec: spec.clone(),
        records,
    })
}

fn side_rows(records: &[CommitRecord], pick: fn(&CommitRecord) -> [f64; 12]) -> Vec<(String, GraphFeatureVector)> {
    records
        .iter()
        .map(|r| (r.commit_id.clone(), GraphFeatureVector::from_array(&pick(r))))
        .collect()
}

impl SynthCorpus {
    pub fn write_c_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        write_c_csv(out, &self.records)
    }

    pub fn write_a_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        write_feature_csv(out, &side_rows(&self.records, |r| r.a_features))
    }

    pub fn write_d_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        write_feature_csv(out, &side_rows(&self.records, |r| r.d_features))
    }
}

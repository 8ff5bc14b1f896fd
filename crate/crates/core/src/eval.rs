//! Time-ordered train/test evaluation over classifier x feature-combination
//! cells.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::{select_combination, standardize, CommitRecord, DatasetError, FeatureCombination};
use crate::ml::{train, ClassifierConfig, ClassifierKind, MlError};

pub const DEFAULT_TRAIN_FRACTION: f64 = 0.7;

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("train fraction must lie strictly between 0 and 1, got {0}")]
    BadFraction(f64),
    #[error("records are not in timestamp order at position {0}")]
    Unsorted(usize),
    #[error("split of {n} records leaves the {which} partition empty")]
    EmptyPartition { n: usize, which: &'static str },
    #[error(transparent)]
    Dataset(#[from] DatasetError),
    #[error("cell {classifier}/{combination}: {source}")]
    Cell {
        classifier: ClassifierKind,
        combination: FeatureCombination,
        #[source]
        source: MlError,
    },
    #[error("{file}: {source}")]
    Csv {
        file: String,
        #[source]
        source: csv::Error,
    },
}

/// Number of training rows for `n` records.
pub fn train_size(n: usize, train_fraction: f64) -> usize {
    // The epsilon keeps e.g. 0.7 * 10 from flooring to 6.
    (train_fraction * n as f64 + 1e-9).floor() as usize
}

/// Splits time-sorted records into a past (training) prefix and a future
/// (test) suffix.
pub fn time_ordered_split(
    records: &[CommitRecord],
    train_fraction: f64,
) -> Result<(&[CommitRecord], &[CommitRecord]), EvalError> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(EvalError::BadFraction(train_fraction));
    }
    if let Some(i) = records
        .windows(2)
        .position(|w| w[0].author_timestamp > w[1].author_timestamp)
    {
        return Err(EvalError::Unsorted(i + 1));
    }
    let n = records.len();
    let k = train_size(n, train_fraction);
    if k == 0 {
        return Err(EvalError::EmptyPartition { n, which: "train" });
    }
    if k == n {
        return Err(EvalError::EmptyPartition { n, which: "test" });
    }
    Ok(records.split_at(k))
}

/// Buggy (label 1) is the positive class. Degenerate ratios are 0.
pub fn precision_recall_f1(tp: u64, fp: u64, fn_: u64) -> (f64, f64, f64) {
    let ratio = |a: u64, b: u64| if b == 0 { 0.0 } else { a as f64 / b as f64 };
    let p = ratio(tp, tp + fp);
    let r = ratio(tp, tp + fn_);
    let f1 = if p + r == 0.0 { 0.0 } else { 2.0 * p * r / (p + r) };
    (p, r, f1)
}

/// Relative F1 change over the C baseline; undefined when the baseline is 0.
pub fn improvement(f1: f64, f1_c: f64) -> Option<f64> {
    (f1_c != 0.0).then(|| (f1 - f1_c) / f1_c)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    pub tp: u64,
    pub tn: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    #[serde(rename = "improvement_vs_C")]
    pub improvement_vs_c: Option<f64>,
}

impl CellResult {
    pub fn from_predictions(pred: &[u8], truth: &[u8]) -> Self {
        let (mut tp, mut tn, mut fp, mut fn_) = (0, 0, 0, 0);
        for (&p, &t) in pred.iter().zip(truth) {
            match (p, t) {
                (1, 1) => tp += 1,
                (0, 0) => tn += 1,
                (1, 0) => fp += 1,
                _ => fn_ += 1,
            }
        }
        let (precision, recall, f1) = precision_recall_f1(tp, fp, fn_);
        CellResult {
            tp,
            tn,
            fp,
            fn_,
            precision,
            recall,
            f1,
            improvement_vs_c: None,
        }
    }
}

/// Combinations whose F1 is compared against C.
pub const COMPARED: [FeatureCombination; 3] =
    [FeatureCombination::CA, FeatureCombination::CD, FeatureCombination::CAD];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub train_size: usize,
    pub test_size: usize,
    pub cells: BTreeMap<ClassifierKind, BTreeMap<FeatureCombination, CellResult>>,
}

impl EvalReport {
    pub fn cell(&self, k: ClassifierKind, c: FeatureCombination) -> Option<&CellResult> {
        self.cells.get(&k)?.get(&c)
    }

    pub fn cell_count(&self) -> usize {
        self.cells.values().map(BTreeMap::len).sum()
    }
}

/// Runs every (classifier, combination) cell on one time-ordered split.
/// Standardization is fitted on the training rows only.
pub fn run_matrix(
    records: &[CommitRecord],
    configs: &[ClassifierConfig],
    combinations: &[FeatureCombination],
    train_fraction: f64,
) -> Result<EvalReport, EvalError> {
    let (tr, te) = time_ordered_split(records, train_fraction)?;
    let fit: Vec<usize> = (0..tr.len()).collect();
    let (z, _) = standardize(records, &fit)?;
    let (ztr, zte) = z.split_at(tr.len());

    let jobs: Vec<(&ClassifierConfig, FeatureCombination)> = configs
        .iter()
        .flat_map(|c| combinations.iter().map(move |&k| (c, k)))
        .collect();
    let results: Vec<Result<(ClassifierKind, FeatureCombination, CellResult), EvalError>> = jobs
        .par_iter()
        .map(|&(cfg, combo)| {
            let (xtr, ytr) = select_combination(ztr, combo);
            let (xte, yte) = select_combination(zte, combo);
            let cell_err = |source| EvalError::Cell {
                classifier: cfg.kind,
                combination: combo,
                source,
            };
            let model = train(cfg, &xtr, &ytr).map_err(cell_err)?;
            let pred = model.predict(&xte).map_err(cell_err)?;
            Ok((cfg.kind, combo, CellResult::from_predictions(&pred, &yte)))
        })
        .collect();

    let mut cells: BTreeMap<ClassifierKind, BTreeMap<FeatureCombination, CellResult>> = BTreeMap::new();
    for r in results {
        let (k, c, cell) = r?;
        cells.entry(k).or_default().insert(c, cell);
    }
    for row in cells.values_mut() {
        if let Some(base) = row.get(&FeatureCombination::C).map(|c| c.f1) {
            for combo in COMPARED {
                if let Some(cell) = row.get_mut(&combo) {
                    cell.improvement_vs_c = improvement(cell.f1, base);
                }
            }
        }
    }
    Ok(EvalReport {
        train_size: tr.len(),
        test_size: te.len(),
        cells,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct F1Row {
    pub dataset: String,
    pub classifier: ClassifierKind,
    pub combination: FeatureCombination,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

pub fn f1_rows(dataset: &str, report: &EvalReport) -> Vec<F1Row> {
    report
        .cells
        .iter()
        .flat_map(|(k, row)| {
            row.iter().map(move |(c, cell)| F1Row {
                dataset: dataset.to_string(),
                classifier: *k,
                combination: *c,
                precision: cell.precision,
                recall: cell.recall,
                f1: cell.f1,
            })
        })
        .collect()
}

/// Writes `dataset,classifier,combination,precision,recall,f1`.
pub fn write_f1_table<W: Write>(out: W, rows: &[F1Row]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_f1_table<R: Read>(input: R, file: &str) -> Result<Vec<F1Row>, EvalError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    rdr.deserialize()
        .collect::<Result<Vec<F1Row>, _>>()
        .map_err(|source| EvalError::Csv {
            file: file.to_string(),
            source,
        })
}

/// Pairs `(f1 of combo, f1 of C)` per dataset for one classifier, in dataset
/// name order. Datasets missing either cell are skipped.
pub fn paired_f1(rows: &[F1Row], classifier: ClassifierKind, combo: FeatureCombination) -> Vec<(String, f64, f64)> {
    let mut by_ds: BTreeMap<&str, (Option<f64>, Option<f64>)> = BTreeMap::new();
    for r in rows.iter().filter(|r| r.classifier == classifier) {
        let e = by_ds.entry(&r.dataset).or_default();
        if r.combination == combo {
            e.0 = Some(r.f1);
        }
        if r.combination == FeatureCombination::C {
            e.1 = Some(r.f1);
        }
    }
    by_ds
        .into_iter()
        .filter_map(|(d, (a, c))| Some((d.to_string(), a?, c?)))
        .collect()
}

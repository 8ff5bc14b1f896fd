//! Commit records: conventional (C) features joined with the added-side (A)
//! and deleted-side (D) graph features.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::graph_metrics::GraphFeatureVector;
use crate::matrix::Matrix;

pub const C_DIM: usize = 15;
pub const A_DIM: usize = 12;
pub const D_DIM: usize = 12;
pub const FEATURE_DIM: usize = C_DIM + A_DIM + D_DIM;
pub const NUM_CATEGORIES: u8 = 7;

#[derive(Debug, thiserror::Error)]
pub enum DatasetError {
    #[error("{file}: {source}")]
    Csv {
        file: String,
        #[source]
        source: csv::Error,
    },
    #[error("{file}: missing required column `{column}`")]
    MissingColumn { file: String, column: String },
    #[error("{file}: duplicate commit_id `{id}`")]
    DuplicateId { file: String, id: String },
    #[error("{file}, record {record}: column `{column}` has invalid value `{value}`")]
    BadValue {
        file: String,
        record: usize,
        column: String,
        value: String,
    },
    #[error("standardization needs at least one fitting row")]
    EmptyFitSet,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommitRecord {
    pub commit_id: String,
    pub author_timestamp: i64,
    pub c_features: [f64; C_DIM],
    pub a_features: [f64; A_DIM],
    pub d_features: [f64; D_DIM],
    pub bug_label: u8,
    pub category_label: u8,
}

impl CommitRecord {
    /// All 39 features, C then A then D.
    pub fn features(&self) -> [f64; FEATURE_DIM] {
        let mut out = [0.0; FEATURE_DIM];
        out[..C_DIM].copy_from_slice(&self.c_features);
        out[C_DIM..C_DIM + A_DIM].copy_from_slice(&self.a_features);
        out[C_DIM + A_DIM..].copy_from_slice(&self.d_features);
        out
    }

    pub fn set_features(&mut self, f: &[f64]) {
        self.c_features.copy_from_slice(&f[..C_DIM]);
        self.a_features.copy_from_slice(&f[C_DIM..C_DIM + A_DIM]);
        self.d_features.copy_from_slice(&f[C_DIM + A_DIM..FEATURE_DIM]);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum FeatureCombination {
    C,
    A,
    D,
    CA,
    CD,
    AD,
    CAD,
}

impl FeatureCombination {
    pub const ALL: [FeatureCombination; 7] = [
        FeatureCombination::C,
        FeatureCombination::A,
        FeatureCombination::D,
        FeatureCombination::CA,
        FeatureCombination::CD,
        FeatureCombination::AD,
        FeatureCombination::CAD,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            FeatureCombination::C => "C",
            FeatureCombination::A => "A",
            FeatureCombination::D => "D",
            FeatureCombination::CA => "CA",
            FeatureCombination::CD => "CD",
            FeatureCombination::AD => "AD",
            FeatureCombination::CAD => "CAD",
        }
    }

    /// Indices into [`CommitRecord::features`].
    pub fn columns(self) -> Vec<usize> {
        let tag = self.tag();
        let mut out = Vec::new();
        if tag.contains('C') {
            out.extend(0..C_DIM);
        }
        if tag.contains('A') {
            out.extend(C_DIM..C_DIM + A_DIM);
        }
        if tag.contains('D') {
            out.extend(C_DIM + A_DIM..FEATURE_DIM);
        }
        out
    }
}

impl fmt::Display for FeatureCombination {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown feature combination `{0}` (expected one of C, A, D, CA, CD, AD, CAD)")]
pub struct UnknownCombination(pub String);

impl FromStr for FeatureCombination {
    type Err = UnknownCombination;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let up = s.trim().to_ascii_uppercase();
        FeatureCombination::ALL
            .into_iter()
            .find(|c| c.tag() == up)
            .ok_or_else(|| UnknownCombination(s.to_string()))
    }
}

fn c_header() -> Vec<String> {
    let mut h = vec!["commit_id".to_string(), "author_timestamp".to_string()];
    h.extend((1..=C_DIM).map(|i| format!("c{i}")));
    h.push("bug_label".into());
    h.push("category_label".into());
    h
}

fn dataset_header() -> Vec<String> {
    let mut h = vec!["commit_id".to_string(), "author_timestamp".to_string()];
    h.extend((1..=C_DIM).map(|i| format!("c{i}")));
    h.extend((1..=A_DIM).map(|i| format!("a{i}")));
    h.extend((1..=D_DIM).map(|i| format!("d{i}")));
    h.push("bug_label".into());
    h.push("category_label".into());
    h
}

/// Position of a `dataset.csv` feature column (`c1..c15`, `a1..a12`,
/// `d1..d12`) within [`CommitRecord::features`].
pub fn feature_column(name: &str) -> Option<usize> {
    dataset_header()[2..2 + FEATURE_DIM].iter().position(|h| h == name)
}

/// Reads a CSV into header-keyed rows, checking that `required` columns exist.
struct Table {
    file: String,
    positions: HashMap<String, usize>,
    records: Vec<csv::StringRecord>,
}

impl Table {
    fn read<R: Read>(input: R, file: &str, required: &[String]) -> Result<Table, DatasetError> {
        let csv_err = |source| DatasetError::Csv {
            file: file.to_string(),
            source,
        };
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
        let headers = rdr.headers().map_err(csv_err)?.clone();
        let positions: HashMap<String, usize> = headers
            .iter()
            .enumerate()
            .map(|(i, h)| (h.to_string(), i))
            .collect();
        for col in required {
            if !positions.contains_key(col) {
                return Err(DatasetError::MissingColumn {
                    file: file.to_string(),
                    column: col.clone(),
                });
            }
        }
        let records = rdr
            .records()
            .collect::<Result<Vec<_>, _>>()
            .map_err(csv_err)?;
        Ok(Table {
            file: file.to_string(),
            positions,
            records,
        })
    }

    fn field<'r>(&self, rec: &'r csv::StringRecord, column: &str) -> &'r str {
        rec.get(self.positions[column]).unwrap_or("")
    }

    fn parse<T: FromStr>(&self, i: usize, column: &str) -> Result<T, DatasetError> {
        let raw = self.field(&self.records[i], column);
        raw.parse().map_err(|_| self.bad(i, column, raw))
    }

    fn finite(&self, i: usize, column: &str) -> Result<f64, DatasetError> {
        let v: f64 = self.parse(i, column)?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(self.bad(i, column, self.field(&self.records[i], column)))
        }
    }

    fn bad(&self, i: usize, column: &str, value: &str) -> DatasetError {
        DatasetError::BadValue {
            file: self.file.clone(),
            record: i + 1,
            column: column.to_string(),
            value: value.to_string(),
        }
    }

    fn ids(&self) -> Result<Vec<String>, DatasetError> {
        let mut seen = HashSet::new();
        let mut out = Vec::with_capacity(self.records.len());
        for rec in &self.records {
            let id = self.field(rec, "commit_id").to_string();
            if !seen.insert(id.clone()) {
                return Err(DatasetError::DuplicateId {
                    file: self.file.clone(),
                    id,
                });
            }
            out.push(id);
        }
        Ok(out)
    }

    fn labels(&self, i: usize) -> Result<(u8, u8), DatasetError> {
        let bug: u8 = self.parse(i, "bug_label")?;
        if bug > 1 {
            return Err(self.bad(i, "bug_label", self.field(&self.records[i], "bug_label")));
        }
        let cat: u8 = self.parse(i, "category_label")?;
        if cat >= NUM_CATEGORIES {
            return Err(self.bad(
                i,
                "category_label",
                self.field(&self.records[i], "category_label"),
            ));
        }
        Ok((bug, cat))
    }
}

/// Reads a `commit_id,f1..f12` side-feature file.
pub fn read_feature_csv<R: Read>(
    input: R,
    file: &str,
) -> Result<BTreeMap<String, [f64; A_DIM]>, DatasetError> {
    let mut required = vec!["commit_id".to_string()];
    required.extend((1..=A_DIM).map(|i| format!("f{i}")));
    let t = Table::read(input, file, &required)?;
    let ids = t.ids()?;
    let mut out = BTreeMap::new();
    for (i, id) in ids.into_iter().enumerate() {
        let mut f = [0.0; A_DIM];
        for (j, slot) in f.iter_mut().enumerate() {
            *slot = t.finite(i, &format!("f{}", j + 1))?;
        }
        out.insert(id, f);
    }
    Ok(out)
}

/// Left-joins the C table against the A and D features. Commits without a
/// side row get that side's empty-graph vector (all zeros). Output is sorted
/// by `(author_timestamp, commit_id)`.
pub fn load_and_join<R1: Read, R2: Read, R3: Read>(
    c_csv: (R1, &str),
    a_csv: (R2, &str),
    d_csv: (R3, &str),
) -> Result<Vec<CommitRecord>, DatasetError> {
    let t = Table::read(c_csv.0, c_csv.1, &c_header())?;
    let a = read_feature_csv(a_csv.0, a_csv.1)?;
    let d = read_feature_csv(d_csv.0, d_csv.1)?;
    let ids = t.ids()?;
    let zero = GraphFeatureVector::default().to_array();
    let mut out = Vec::with_capacity(ids.len());
    for (i, id) in ids.into_iter().enumerate() {
        let mut c = [0.0; C_DIM];
        for (j, slot) in c.iter_mut().enumerate() {
            *slot = t.finite(i, &format!("c{}", j + 1))?;
        }
        let (bug_label, category_label) = t.labels(i)?;
        out.push(CommitRecord {
            author_timestamp: t.parse(i, "author_timestamp")?,
            c_features: c,
            a_features: a.get(&id).copied().unwrap_or(zero),
            d_features: d.get(&id).copied().unwrap_or(zero),
            bug_label,
            category_label,
            commit_id: id,
        });
    }
    let known: HashSet<&str> = out.iter().map(|r| r.commit_id.as_str()).collect();
    let dropped = a.keys().chain(d.keys()).filter(|id| !known.contains(id.as_str())).count();
    if dropped > 0 {
        log::warn!("{dropped} side-feature rows have no matching commit and were dropped");
    }
    sort_records(&mut out);
    Ok(out)
}

pub fn sort_records(records: &mut [CommitRecord]) {
    records.sort_by(|x, y| {
        (x.author_timestamp, &x.commit_id).cmp(&(y.author_timestamp, &y.commit_id))
    });
}

fn fmt_num(v: f64) -> String {
    v.to_string()
}

pub fn write_dataset_csv<W: Write>(out: W, records: &[CommitRecord]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(dataset_header())?;
    for r in records {
        let mut row = vec![r.commit_id.clone(), r.author_timestamp.to_string()];
        row.extend(r.features().iter().map(|v| fmt_num(*v)));
        row.push(r.bug_label.to_string());
        row.push(r.category_label.to_string());
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a file written by [`write_dataset_csv`]; row order is preserved.
pub fn read_dataset_csv<R: Read>(input: R, file: &str) -> Result<Vec<CommitRecord>, DatasetError> {
    let header = dataset_header();
    let t = Table::read(input, file, &header)?;
    let ids = t.ids()?;
    let feature_cols = &header[2..2 + FEATURE_DIM];
    let mut out = Vec::with_capacity(ids.len());
    for (i, id) in ids.into_iter().enumerate() {
        let mut f = [0.0; FEATURE_DIM];
        for (slot, col) in f.iter_mut().zip(feature_cols) {
            *slot = t.finite(i, col)?;
        }
        let (bug_label, category_label) = t.labels(i)?;
        let mut rec = CommitRecord {
            commit_id: id,
            author_timestamp: t.parse(i, "author_timestamp")?,
            c_features: [0.0; C_DIM],
            a_features: [0.0; A_DIM],
            d_features: [0.0; D_DIM],
            bug_label,
            category_label,
        };
        rec.set_features(&f);
        out.push(rec);
    }
    Ok(out)
}

/// Writes the C table in the schema [`load_and_join`] expects.
pub fn write_c_csv<W: Write>(out: W, records: &[CommitRecord]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(c_header())?;
    for r in records {
        let mut row = vec![r.commit_id.clone(), r.author_timestamp.to_string()];
        row.extend(r.c_features.iter().map(|v| fmt_num(*v)));
        row.push(r.bug_label.to_string());
        row.push(r.category_label.to_string());
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

/// Per-column z-scoring parameters fitted on a subset of rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub means: Vec<f64>,
    pub stdevs: Vec<f64>,
}

impl Standardizer {
    /// Population mean and standard deviation of each column over `fit_rows`.
    pub fn fit(x: &Matrix, fit_rows: &[usize]) -> Result<Self, DatasetError> {
        if fit_rows.is_empty() {
            return Err(DatasetError::EmptyFitSet);
        }
        let n = fit_rows.len() as f64;
        let mut means = vec![0.0; x.cols()];
        for &i in fit_rows {
            for (m, v) in means.iter_mut().zip(x.row(i)) {
                *m += v;
            }
        }
        for m in &mut means {
            *m /= n;
        }
        let mut vars = vec![0.0; x.cols()];
        for &i in fit_rows {
            for ((s, v), m) in vars.iter_mut().zip(x.row(i)).zip(&means) {
                *s += (v - m) * (v - m);
            }
        }
        let stdevs = vars.into_iter().map(|s| (s / n).sqrt()).collect();
        Ok(Standardizer { means, stdevs })
    }

    /// `(x - mean) / stdev`; zero-variance columns only subtract the mean.
    pub fn transform(&self, x: &Matrix) -> Matrix {
        let mut out = x.clone();
        for i in 0..out.rows() {
            for (j, v) in out.row_mut(i).iter_mut().enumerate() {
                let sd = self.stdevs[j];
                *v -= self.means[j];
                if sd > 0.0 {
                    *v /= sd;
                }
            }
        }
        out
    }

    pub fn select(&self, cols: &[usize]) -> Standardizer {
        Standardizer {
            means: cols.iter().map(|&j| self.means[j]).collect(),
            stdevs: cols.iter().map(|&j| self.stdevs[j]).collect(),
        }
    }
}

pub fn feature_matrix(records: &[CommitRecord]) -> Matrix {
    let rows: Vec<[f64; FEATURE_DIM]> = records.iter().map(CommitRecord::features).collect();
    Matrix::from_rows(&rows).unwrap_or_else(|_| Matrix::zeros(0, FEATURE_DIM))
}

/// Z-scores all 39 feature columns using statistics of `fit_rows` only.
pub fn standardize(
    records: &[CommitRecord],
    fit_rows: &[usize],
) -> Result<(Vec<CommitRecord>, Standardizer), DatasetError> {
    let x = feature_matrix(records);
    let st = Standardizer::fit(&x, fit_rows)?;
    let z = st.transform(&x);
    let out = records
        .iter()
        .zip(z.iter_rows())
        .map(|(r, row)| {
            let mut r = r.clone();
            r.set_features(row);
            r
        })
        .collect();
    Ok((out, st))
}

/// Projects onto a combination's columns (C, then A, then D) and returns the
/// bug labels alongside.
pub fn select_combination(records: &[CommitRecord], combo: FeatureCombination) -> (Matrix, Vec<u8>) {
    let x = feature_matrix(records).select_cols(&combo.columns());
    (x, records.iter().map(|r| r.bug_label).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn c_csv(rows: &[(&str, i64, u8)]) -> String {
        let mut s = c_header().join(",");
        s.push('\n');
        for (id, ts, bug) in rows {
            let feats: Vec<String> = (1..=C_DIM).map(|j| (j as i64 * ts).to_string()).collect();
            s.push_str(&format!("{id},{ts},{},{bug},2\n", feats.join(",")));
        }
        s
    }

    fn f_csv(rows: &[(&str, f64)]) -> String {
        let mut s = "commit_id".to_string();
        for i in 1..=12 {
            s.push_str(&format!(",f{i}"));
        }
        s.push('\n');
        for (id, v) in rows {
            s.push_str(id);
            for _ in 0..12 {
                s.push_str(&format!(",{v}"));
            }
            s.push('\n');
        }
        s
    }

    #[test]
    fn feature_column_positions() {
        assert_eq!(feature_column("c1"), Some(0));
        assert_eq!(feature_column("a4"), Some(C_DIM + 3));
        assert_eq!(feature_column("d12"), Some(FEATURE_DIM - 1));
        assert_eq!(feature_column("bug_label"), None);
        assert_eq!(feature_column("a13"), None);
    }

    fn join(c: &str, a: &str, d: &str) -> Result<Vec<CommitRecord>, DatasetError> {
        load_and_join(
            (c.as_bytes(), "c.csv"),
            (a.as_bytes(), "a.csv"),
            (d.as_bytes(), "d.csv"),
        )
    }

    #[test]
    fn missing_side_is_zero() {
        let recs = join(&c_csv(&[("x", 10, 1)]), &f_csv(&[("x", 4.0)]), &f_csv(&[])).unwrap();
        assert_eq!(recs.len(), 1);
        assert_eq!(recs[0].a_features, [4.0; 12]);
        assert_eq!(recs[0].d_features, [0.0; 12]);
    }

    #[test]
    fn sorted_by_timestamp_then_id() {
        let c = c_csv(&[("p", 30, 0), ("q", 10, 0), ("r", 20, 1), ("a", 20, 0)]);
        let recs = join(&c, &f_csv(&[]), &f_csv(&[])).unwrap();
        let order: Vec<(&str, i64)> = recs.iter().map(|r| (r.commit_id.as_str(), r.author_timestamp)).collect();
        assert_eq!(order, vec![("q", 10), ("a", 20), ("r", 20), ("p", 30)]);
    }

    #[test]
    fn sample_dataset_row() {
        // Row 1 of the sample dataset: C1=3, C2=4, C15=1.68; A1=4, A2=0.12,
        // A12=13; D1=4, D2=0.13, D12=13; buggy.
        let mut c = c_header().join(",");
        c.push_str("\n1,0,3,4,0,0,0,0,0,0,0,0,0,0,0,0,1.68,1,0\n");
        let side = |f1: f64, f2: f64, f12: f64| {
            let mut s = "commit_id".to_string();
            for i in 1..=12 {
                s.push_str(&format!(",f{i}"));
            }
            s.push_str(&format!("\n1,{f1},{f2},0,0,0,0,0,0,0,0,0,{f12}\n"));
            s
        };
        let recs = join(&c, &side(4.0, 0.12, 13.0), &side(4.0, 0.13, 13.0)).unwrap();
        let r = &recs[0];
        assert_eq!(r.bug_label, 1);
        assert_eq!((r.c_features[0], r.c_features[1], r.c_features[14]), (3.0, 4.0, 1.68));
        assert_eq!((r.a_features[0], r.a_features[1], r.a_features[11]), (4.0, 0.12, 13.0));
        assert_eq!((r.d_features[0], r.d_features[1], r.d_features[11]), (4.0, 0.13, 13.0));
    }

    #[test]
    fn join_errors() {
        let dup = c_csv(&[("x", 1, 0), ("x", 2, 0)]);
        match join(&dup, &f_csv(&[]), &f_csv(&[])) {
            Err(DatasetError::DuplicateId { id, .. }) => assert_eq!(id, "x"),
            other => panic!("unexpected {other:?}"),
        }
        let dup_side = f_csv(&[("x", 1.0), ("x", 2.0)]);
        assert!(matches!(
            join(&c_csv(&[("x", 1, 0)]), &dup_side, &f_csv(&[])),
            Err(DatasetError::DuplicateId { .. })
        ));
        let no_label = c_csv(&[("x", 1, 0)]).replacen(",bug_label", ",label", 1);
        match join(&no_label, &f_csv(&[]), &f_csv(&[])) {
            Err(DatasetError::MissingColumn { column, .. }) => assert_eq!(column, "bug_label"),
            other => panic!("unexpected {other:?}"),
        }
        let bad_label = c_csv(&[("x", 1, 3)]);
        assert!(matches!(
            join(&bad_label, &f_csv(&[]), &f_csv(&[])),
            Err(DatasetError::BadValue { .. })
        ));
    }

    #[test]
    fn combination_widths() {
        let widths: Vec<usize> = FeatureCombination::ALL.iter().map(|c| c.columns().len()).collect();
        assert_eq!(widths, vec![15, 12, 12, 27, 27, 24, 39]);
        assert_eq!("cad".parse::<FeatureCombination>().unwrap(), FeatureCombination::CAD);
        assert!("X".parse::<FeatureCombination>().is_err());
    }

    #[test]
    fn standardize_examples() {
        let x = Matrix::from_rows(&[[1.0, 5.0], [2.0, 5.0], [3.0, 5.0]]).unwrap();
        let st = Standardizer::fit(&x, &[0, 1, 2]).unwrap();
        let z = st.transform(&x);
        let s = (2.0f64 / 3.0).sqrt();
        for (i, expect) in [-1.0 / s, 0.0, 1.0 / s].iter().enumerate() {
            assert_abs_diff_eq!(z.get(i, 0), *expect, epsilon = 1e-12);
            assert_eq!(z.get(i, 1), 0.0);
        }
        assert_abs_diff_eq!(z.get(0, 0), -1.2247, epsilon = 1e-4);
        let again = Standardizer::fit(&z, &[0, 1, 2]).unwrap().transform(&z);
        for (a, b) in again.as_slice().iter().zip(z.as_slice()) {
            assert_abs_diff_eq!(a, b, epsilon = 1e-12);
        }
        assert!(matches!(Standardizer::fit(&x, &[]), Err(DatasetError::EmptyFitSet)));
    }

    #[test]
    fn dataset_csv_round_trip() {
        let c = c_csv(&[("b", 2, 1), ("a\"q", 1, 0)]);
        let recs = join(&c, &f_csv(&[("b", 0.1 + 0.2)]), &f_csv(&[("a\"q", 1e-300)])).unwrap();
        let mut buf = Vec::new();
        write_dataset_csv(&mut buf, &recs).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("commit_id,author_timestamp,c1,"));
        assert!(text.lines().next().unwrap().ends_with("d12,bug_label,category_label"));
        assert!(text.contains("\"a\"\"q\""));
        assert_eq!(read_dataset_csv(&buf[..], "dataset.csv").unwrap(), recs);
    }

    fn arb_records() -> impl Strategy<Value = Vec<CommitRecord>> {
        prop::collection::vec(
            (prop::collection::vec(-50.0f64..50.0, FEATURE_DIM), 0u8..2, any::<i32>()),
            1..20,
        )
        .prop_map(|rows| {
            rows.into_iter()
                .enumerate()
                .map(|(i, (f, bug, ts))| {
                    let mut r = CommitRecord {
                        commit_id: format!("c{i}"),
                        author_timestamp: ts as i64,
                        c_features: [0.0; C_DIM],
                        a_features: [0.0; A_DIM],
                        d_features: [0.0; D_DIM],
                        bug_label: bug,
                        category_label: 0,
                    };
                    r.set_features(&f);
                    r
                })
                .collect()
        })
    }

    proptest! {
        #[test]
        fn standardize_commutes_with_selection(recs in arb_records(), combo_idx in 0usize..7) {
            let combo = FeatureCombination::ALL[combo_idx];
            let fit: Vec<usize> = (0..recs.len().div_ceil(2)).collect();
            let (z, _) = standardize(&recs, &fit).unwrap();
            let (a, _) = select_combination(&z, combo);
            let (x, _) = select_combination(&recs, combo);
            let b = Standardizer::fit(&x, &fit).unwrap().transform(&x);
            for (u, v) in a.as_slice().iter().zip(b.as_slice()) {
                prop_assert!((u - v).abs() < 1e-9);
            }
        }

        #[test]
        fn join_is_lossless_and_ordered(recs in arb_records()) {
            let mut c = Vec::new();
            write_c_csv(&mut c, &recs).unwrap();
            let out = load_and_join(
                (&c[..], "c"),
                (f_csv(&[]).as_bytes(), "a"),
                (f_csv(&[]).as_bytes(), "d"),
            ).unwrap();
            prop_assert_eq!(out.len(), recs.len());
            for w in out.windows(2) {
                prop_assert!((w[0].author_timestamp, &w[0].commit_id) < (w[1].author_timestamp, &w[1].commit_id));
            }
            for r in &out {
                let orig = recs.iter().find(|o| o.commit_id == r.commit_id).unwrap();
                prop_assert_eq!(r.c_features, orig.c_features);
            }
        }
    }
}

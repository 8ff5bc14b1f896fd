//! Welch's two-sample t-test and the Wilcoxon signed-rank test.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use statrs::function::beta::beta_reg;
use statrs::function::erf::erfc;

/// Largest number of nonzero pairs for which the exact null distribution is
/// used.
pub const EXACT_MAX_N: usize = 25;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Exact,
    NormalApprox,
    TDistribution,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Exact => "exact",
            Method::NormalApprox => "normal_approx",
            Method::TDistribution => "t_distribution",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Alternative {
    #[default]
    TwoSided,
    /// The first sample tends to be larger.
    Greater,
    Less,
}

impl FromStr for Alternative {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "two-sided" | "two_sided" => Ok(Alternative::TwoSided),
            "greater" => Ok(Alternative::Greater),
            "less" => Ok(Alternative::Less),
            _ => Err(format!("unknown alternative `{s}` (expected two-sided, greater or less)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub statistic: f64,
    pub p_value: f64,
    pub n_effective: usize,
    pub method: Method,
    /// Welch-Satterthwaite degrees of freedom; t-test only.
    pub df: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum StatsError {
    #[error("each sample needs at least 2 values (got {0} and {1})")]
    TooSmall(usize, usize),
    #[error("paired samples differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("no nonzero pairs")]
    NoNonzeroPairs,
    #[error("both samples have zero variance but different means")]
    ZeroVariance,
    #[error("non-finite value in sample")]
    NonFinite,
}

fn mean_var(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let m = x.iter().sum::<f64>() / n;
    let v = x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (n - 1.0);
    (m, v)
}

/// Upper tail `P(T >= t)` of Student's t with `df` degrees of freedom.
fn t_upper(t: f64, df: f64) -> f64 {
    let half = 0.5 * beta_reg(df / 2.0, 0.5, df / (df + t * t));
    if t >= 0.0 {
        half
    } else {
        1.0 - half
    }
}

pub fn welch_ttest(a: &[f64], b: &[f64], alt: Alternative) -> Result<TestResult, StatsError> {
    if a.len() < 2 || b.len() < 2 {
        return Err(StatsError::TooSmall(a.len(), b.len()));
    }
    if a.iter().chain(b).any(|v| !v.is_finite()) {
        return Err(StatsError::NonFinite);
    }
    let (ma, va) = mean_var(a);
    let (mb, vb) = mean_var(b);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let n_effective = a.len() + b.len();
    let (sa, sb) = (va / na, vb / nb);
    if sa + sb == 0.0 {
        if ma != mb {
            return Err(StatsError::ZeroVariance);
        }
        return Ok(TestResult {
            statistic: 0.0,
            p_value: 1.0,
            n_effective,
            method: Method::TDistribution,
            df: None,
        });
    }
    let t = (ma - mb) / (sa + sb).sqrt();
    let df = (sa + sb).powi(2) / (sa * sa / (na - 1.0) + sb * sb / (nb - 1.0));
    let p = match alt {
        Alternative::TwoSided => beta_reg(df / 2.0, 0.5, df / (df + t * t)),
        Alternative::Greater => t_upper(t, df),
        Alternative::Less => t_upper(-t, df),
    };
    Ok(TestResult {
        statistic: t,
        p_value: p.clamp(0.0, 1.0),
        n_effective,
        method: Method::TDistribution,
        df: Some(df),
    })
}

/// Ranks of `|d|` (1-based, ties averaged), returned doubled so they are
/// integers.
pub fn doubled_ranks(d: &[f64]) -> Vec<u64> {
    let mut idx: Vec<usize> = (0..d.len()).collect();
    idx.sort_by(|&i, &j| d[i].abs().total_cmp(&d[j].abs()));
    let mut out = vec![0; d.len()];
    let mut start = 0;
    while start < idx.len() {
        let mut end = start + 1;
        while end < idx.len() && d[idx[end]].abs() == d[idx[start]].abs() {
            end += 1;
        }
        // Average of ranks start+1..=end, doubled.
        let r2 = (start + 1 + end) as u64;
        for &i in &idx[start..end] {
            out[i] = r2;
        }
        start = end;
    }
    out
}

/// Counts of sign assignments by doubled positive-rank sum.
fn signed_rank_distribution(ranks2: &[u64]) -> Vec<u64> {
    let total: u64 = ranks2.iter().sum();
    let mut counts = vec![0u64; total as usize + 1];
    counts[0] = 1;
    let mut reach = 0usize;
    for &r in ranks2 {
        let r = r as usize;
        for s in (0..=reach).rev() {
            if counts[s] > 0 {
                counts[s + r] += counts[s];
            }
        }
        reach += r;
    }
    counts
}

/// Normal approximation to the signed-rank null with continuity and tie
/// corrections.
fn normal_approx_p(ranks2: &[u64], wplus2: u64, alt: Alternative) -> f64 {
    let nf = ranks2.len() as f64;
    let mean = nf * (nf + 1.0) / 4.0;
    let mut sorted = ranks2.to_vec();
    sorted.sort_unstable();
    let tie_term: f64 = sorted
        .chunk_by(|x, y| x == y)
        .map(|g| {
            let t = g.len() as f64;
            t * t * t - t
        })
        .sum();
    let sd = (nf * (nf + 1.0) * (2.0 * nf + 1.0) / 24.0 - tie_term / 48.0).sqrt();
    let wplus = wplus2 as f64 / 2.0;
    let upper = |z: f64| 0.5 * erfc(z / std::f64::consts::SQRT_2);
    match alt {
        Alternative::TwoSided => {
            let z = ((wplus - mean).abs() - 0.5).max(0.0) / sd;
            (2.0 * upper(z)).min(1.0)
        }
        Alternative::Greater => upper((wplus - mean - 0.5) / sd),
        Alternative::Less => 1.0 - upper((wplus - mean + 0.5) / sd),
    }
}

pub fn wilcoxon_signed_rank(a: &[f64], b: &[f64], alt: Alternative) -> Result<TestResult, StatsError> {
    if a.len() != b.len() {
        return Err(StatsError::LengthMismatch(a.len(), b.len()));
    }
    if a.iter().chain(b).any(|v| !v.is_finite()) {
        return Err(StatsError::NonFinite);
    }
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).filter(|v| *v != 0.0).collect();
    let n = d.len();
    if n == 0 {
        return Err(StatsError::NoNonzeroPairs);
    }
    let ranks2 = doubled_ranks(&d);
    let total2: u64 = ranks2.iter().sum();
    let wplus2: u64 = d.iter().zip(&ranks2).filter(|(v, _)| **v > 0.0).map(|(_, r)| r).sum();
    let wminus2 = total2 - wplus2;
    let statistic = wplus2.min(wminus2) as f64 / 2.0;

    if n <= EXACT_MAX_N {
        let counts = signed_rank_distribution(&ranks2);
        let all = 2f64.powi(n as i32);
        let cdf = |w2: u64| counts[..=w2 as usize].iter().sum::<u64>() as f64 / all;
        let sf = |w2: u64| counts[w2 as usize..].iter().sum::<u64>() as f64 / all;
        let p = match alt {
            Alternative::TwoSided => (2.0 * cdf(wplus2.min(wminus2))).min(1.0),
            Alternative::Greater => sf(wplus2),
            Alternative::Less => cdf(wplus2),
        };
        return Ok(TestResult {
            statistic,
            p_value: p,
            n_effective: n,
            method: Method::Exact,
            df: None,
        });
    }

    let p = normal_approx_p(&ranks2, wplus2, alt);
    Ok(TestResult {
        statistic,
        p_value: p.clamp(0.0, 1.0),
        n_effective: n,
        method: Method::NormalApprox,
        df: None,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsRow {
    pub comparison: String,
    pub statistic: f64,
    pub p_value: f64,
    pub method: Method,
}

/// Shortest round-trip form, switching to exponent notation for tiny values.
fn fmt_real(v: f64) -> String {
    if v != 0.0 && v.abs() < 1e-6 {
        format!("{v:e}")
    } else {
        v.to_string()
    }
}

/// Writes `comparison,statistic,p_value,method`.
pub fn write_stats_csv<W: Write>(out: W, rows: &[StatsRow]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["comparison", "statistic", "p_value", "method"])?;
    for r in rows {
        w.write_record([
            r.comparison.clone(),
            fmt_real(r.statistic),
            fmt_real(r.p_value),
            r.method.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

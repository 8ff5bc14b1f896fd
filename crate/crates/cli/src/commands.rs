use std::collections::BTreeSet;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use rayon::prelude::*;
use serde::Serialize;

use scg_core::dataset::{
    feature_column, load_and_join, read_dataset_csv, select_combination, sort_records, standardize, write_dataset_csv,
    CommitRecord, FeatureCombination,
};
use scg_core::embed::{tsne_embed, write_embedding_tsv, EmbeddedPoint, TsneConfig};
use scg_core::eval::{f1_rows, paired_f1, read_f1_table, run_matrix, write_f1_table, EvalReport, F1Row, COMPARED};
use scg_core::graph_metrics::{compute_metrics_reporting, write_feature_csv, GraphFeatureVector, CYCLE_CAP};
use scg_core::ml::{ClassifierConfig, ClassifierKind};
use scg_core::patch::parse_patch_bytes;
use scg_core::scg::{commit_graphs, GraphRecord, Side};
use scg_core::stats::{welch_ttest, wilcoxon_signed_rank, write_stats_csv, Alternative, StatsRow};
use scg_core::synth::{generate, SynthSpec};

use crate::artifact::{read_input, Provenance, Staged};
use crate::Command;

pub(crate) fn dispatch(cmd: Command) -> Result<()> {
    match cmd {
        Command::Extract { patches, common } => extract(&patches, &common.out_dir),
        Command::Features { graphs, common } => features(&graphs, &common.out_dir),
        Command::Join {
            c_features,
            a_features,
            d_features,
            common,
        } => join(&c_features, &a_features, &d_features, &common.out_dir),
        Command::Eval {
            dataset,
            seed,
            train_fraction,
            classifiers,
            combos,
            name,
            common,
        } => eval(&dataset, seed, train_fraction, &classifiers, &combos, name, &common.out_dir),
        Command::Stats {
            f1_tables,
            dataset,
            columns,
            alternative,
            common,
        } => match dataset {
            Some(ds) => welch(&ds, &columns, alternative, &common.out_dir),
            None => wilcoxon(&f1_tables, alternative, &common.out_dir),
        },
        Command::Embed {
            dataset,
            seed,
            perplexity,
            iterations,
            combo,
            common,
        } => embed(&dataset, seed, perplexity, iterations, combo, &common.out_dir),
        Command::Synth {
            n,
            seed,
            buggy_fraction,
            c_overlap,
            common,
        } => synth(n, seed, buggy_fraction, c_overlap, &common.out_dir),
    }
}

fn display(path: &Path) -> String {
    path.display().to_string()
}

fn unique<T: Ord + Copy>(items: &[T]) -> Vec<T> {
    let mut seen = BTreeSet::new();
    items.iter().copied().filter(|x| seen.insert(*x)).collect()
}

fn load_dataset(path: &Path, prov: &mut Provenance) -> Result<Vec<CommitRecord>> {
    let bytes = read_input(path, prov)?;
    let mut records = read_dataset_csv(&bytes[..], &display(path))?;
    sort_records(&mut records);
    Ok(records)
}

fn extract(patches: &Path, out_dir: &Path) -> Result<()> {
    let mut prov = Provenance::new("extract", None);
    let mut files: Vec<PathBuf> = fs::read_dir(patches)
        .with_context(|| format!("cannot list {}", patches.display()))?
        .map(|e| e.map(|e| e.path()))
        .collect::<std::io::Result<_>>()?;
    files.retain(|p| p.is_file() && p.extension().is_some_and(|e| e == "patch"));
    files.sort();

    let mut inputs = Vec::with_capacity(files.len());
    for path in &files {
        let id = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .context("patch file without a name")?;
        inputs.push((id, read_input(path, &mut prov)?));
    }
    // Timestamps are irrelevant to graph structure; the dataset takes them
    // from the C table.
    let lines: Vec<String> = inputs
        .par_iter()
        .flat_map_iter(|(id, bytes)| {
            let g = commit_graphs(&parse_patch_bytes(bytes, id, 0));
            [(Side::Added, g.added), (Side::Deleted, g.deleted)]
                .into_iter()
                .filter_map(|(side, graph)| graph.map(|g| GraphRecord::new(id, side, &g).to_json_line()))
                .collect::<Vec<_>>()
        })
        .collect();
    prov.detail("commits", inputs.len());
    prov.detail("graphs", lines.len());

    let mut staged = Staged::new(out_dir)?;
    staged.write_with_sidecar("graphs.jsonl", &prov, |w| {
        for line in &lines {
            writeln!(w, "{line}")?;
        }
        Ok(())
    })?;
    staged.commit()?;
    Ok(())
}

fn features(graphs: &Path, out_dir: &Path) -> Result<()> {
    let mut prov = Provenance::new("features", None);
    let bytes = read_input(graphs, &mut prov)?;
    let text = std::str::from_utf8(&bytes).with_context(|| format!("{} is not UTF-8", graphs.display()))?;
    let records = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str::<GraphRecord>(l)
                .with_context(|| format!("{}:{}: malformed graph record", graphs.display(), i + 1))
        })
        .collect::<Result<Vec<_>>>()?;

    let metrics = records
        .par_iter()
        .map(|r| {
            let g = r
                .to_graph()
                .with_context(|| format!("graph {} side {}", r.commit_id, r.side.tag()))?;
            Ok(compute_metrics_reporting(&g))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut sides: [Vec<(String, GraphFeatureVector)>; 2] = [Vec::new(), Vec::new()];
    let mut capped = Vec::new();
    for (r, (fv, cycles)) in records.iter().zip(metrics) {
        if cycles.capped {
            log::warn!(
                "cycle count of {} side {} stopped at the cap of {CYCLE_CAP}",
                r.commit_id,
                r.side.tag()
            );
            capped.push(format!("{}:{}", r.commit_id, r.side.tag()));
        }
        let slot = match r.side {
            Side::Added => 0,
            Side::Deleted => 1,
        };
        sides[slot].push((r.commit_id.clone(), fv));
    }
    prov.detail("cycle_cap", CYCLE_CAP);
    prov.detail("cycle_count_capped", &capped);

    let mut staged = Staged::new(out_dir)?;
    for (name, rows) in [("features_A.csv", &sides[0]), ("features_D.csv", &sides[1])] {
        staged.write_with_sidecar(name, &prov, |w| Ok(write_feature_csv(w, rows)?))?;
    }
    staged.commit()?;
    Ok(())
}

fn join(c: &Path, a: &Path, d: &Path, out_dir: &Path) -> Result<()> {
    let mut prov = Provenance::new("join", None);
    let cb = read_input(c, &mut prov)?;
    let ab = read_input(a, &mut prov)?;
    let db = read_input(d, &mut prov)?;
    let records = load_and_join(
        (&cb[..], &display(c)),
        (&ab[..], &display(a)),
        (&db[..], &display(d)),
    )?;
    prov.detail("rows", records.len());
    let mut staged = Staged::new(out_dir)?;
    staged.write_with_sidecar("dataset.csv", &prov, |w| Ok(write_dataset_csv(w, &records)?))?;
    staged.commit()?;
    Ok(())
}

#[derive(Serialize)]
struct ReportFile<'a> {
    provenance: &'a Provenance,
    #[serde(flatten)]
    report: &'a EvalReport,
}

fn eval(
    dataset: &Path,
    seed: u64,
    train_fraction: f64,
    classifiers: &[ClassifierKind],
    combos: &[FeatureCombination],
    name: Option<String>,
    out_dir: &Path,
) -> Result<()> {
    let mut prov = Provenance::new("eval", Some(seed));
    let records = load_dataset(dataset, &mut prov)?;
    let configs: Vec<ClassifierConfig> = unique(classifiers)
        .into_iter()
        .map(|k| ClassifierConfig::new(k, seed))
        .collect();
    let combos = unique(combos);
    let report = run_matrix(&records, &configs, &combos, train_fraction)?;

    let name = name.unwrap_or_else(|| {
        dataset
            .parent()
            .and_then(Path::file_name)
            .map_or_else(|| "dataset".to_string(), |n| n.to_string_lossy().into_owned())
    });
    prov.detail("dataset_name", &name);
    prov.detail("train_fraction", train_fraction);
    prov.detail("classifiers", &configs);

    let rows = f1_rows(&name, &report);
    let mut staged = Staged::new(out_dir)?;
    staged.write_json(
        "report.json",
        &ReportFile {
            provenance: &prov,
            report: &report,
        },
    )?;
    staged.write_with_sidecar("f1_table.csv", &prov, |w| Ok(write_f1_table(w, &rows)?))?;
    staged.commit()?;
    Ok(())
}

fn wilcoxon(tables: &[PathBuf], alt: Alternative, out_dir: &Path) -> Result<()> {
    let mut prov = Provenance::new("stats", None);
    let mut rows: Vec<F1Row> = Vec::new();
    for path in tables {
        let bytes = read_input(path, &mut prov)?;
        rows.extend(read_f1_table(&bytes[..], &display(path))?);
    }
    let mut keys = BTreeSet::new();
    for r in &rows {
        ensure!(
            keys.insert((r.dataset.as_str(), r.classifier, r.combination)),
            "dataset `{}` has more than one {} {} row; give each table a distinct dataset name",
            r.dataset,
            r.classifier,
            r.combination
        );
    }

    let mut out = Vec::new();
    for kind in ClassifierKind::ALL {
        for combo in COMPARED {
            let pairs = paired_f1(&rows, kind, combo);
            if pairs.is_empty() {
                continue;
            }
            let with: Vec<f64> = pairs.iter().map(|p| p.1).collect();
            let base: Vec<f64> = pairs.iter().map(|p| p.2).collect();
            let comparison = format!("{kind}: C vs {combo}");
            match wilcoxon_signed_rank(&with, &base, alt) {
                Ok(t) => out.push(StatsRow {
                    comparison,
                    statistic: t.statistic,
                    p_value: t.p_value,
                    method: t.method,
                }),
                Err(e) => log::warn!("skipping {comparison}: {e}"),
            }
        }
    }
    if out.is_empty() {
        bail!("no C-versus-combination comparison could be tested");
    }
    prov.detail("test", "wilcoxon_signed_rank");
    prov.detail("alternative", alt);
    let mut staged = Staged::new(out_dir)?;
    staged.write_with_sidecar("wilcoxon.csv", &prov, |w| Ok(write_stats_csv(w, &out)?))?;
    staged.commit()?;
    Ok(())
}

fn welch(dataset: &Path, columns: &[String], alt: Alternative, out_dir: &Path) -> Result<()> {
    let mut prov = Provenance::new("stats", None);
    let records = load_dataset(dataset, &mut prov)?;
    let mut out = Vec::new();
    for col in columns {
        let idx = feature_column(col).with_context(|| format!("unknown feature column `{col}`"))?;
        let (buggy, clean): (Vec<&CommitRecord>, Vec<&CommitRecord>) = records.iter().partition(|r| r.bug_label == 1);
        let values = |rs: &[&CommitRecord]| rs.iter().map(|r| r.features()[idx]).collect::<Vec<f64>>();
        let t = welch_ttest(&values(&buggy), &values(&clean), alt).with_context(|| format!("column {col}"))?;
        out.push(StatsRow {
            comparison: format!("{col}: buggy vs clean"),
            statistic: t.statistic,
            p_value: t.p_value,
            method: t.method,
        });
    }
    prov.detail("test", "welch_ttest");
    prov.detail("alternative", alt);
    let mut staged = Staged::new(out_dir)?;
    staged.write_with_sidecar("ttest.csv", &prov, |w| Ok(write_stats_csv(w, &out)?))?;
    staged.commit()?;
    Ok(())
}

fn embed(
    dataset: &Path,
    seed: u64,
    perplexity: f64,
    iterations: usize,
    combo: FeatureCombination,
    out_dir: &Path,
) -> Result<()> {
    let mut prov = Provenance::new("embed", Some(seed));
    let records = load_dataset(dataset, &mut prov)?;
    let all: Vec<usize> = (0..records.len()).collect();
    let (z, _) = standardize(&records, &all)?;
    let (x, _) = select_combination(&z, combo);
    let config = TsneConfig {
        perplexity,
        iterations,
        ..TsneConfig::new(seed)
    };
    let emb = tsne_embed(&x, &config)?;
    let points: Vec<EmbeddedPoint> = emb
        .rows
        .iter()
        .enumerate()
        .map(|(i, &r)| EmbeddedPoint {
            commit_id: records[r].commit_id.clone(),
            x: emb.coords.get(i, 0),
            y: emb.coords.get(i, 1),
            bug_label: records[r].bug_label,
            category_label: records[r].category_label,
        })
        .collect();
    if emb.subsampled {
        log::warn!("embedded a seeded subsample of {} of {} points", points.len(), records.len());
    }
    prov.detail("combination", combo);
    prov.detail("tsne", &config);
    prov.detail("subsampled", emb.subsampled);
    prov.detail("points", points.len());
    prov.detail("final_kl", emb.final_kl);
    let mut staged = Staged::new(out_dir)?;
    staged.write_with_sidecar("embedding.tsv", &prov, |w| Ok(write_embedding_tsv(w, &points)?))?;
    staged.commit()?;
    Ok(())
}

#[derive(Serialize)]
struct SpecFile<'a> {
    provenance: &'a Provenance,
    spec: &'a SynthSpec,
}

fn synth(n: usize, seed: u64, buggy_fraction: f64, c_overlap: f64, out_dir: &Path) -> Result<()> {
    let spec = SynthSpec {
        buggy_fraction,
        c_overlap,
        ..SynthSpec::new(n, seed)
    };
    let corpus = generate(&spec)?;
    let mut prov = Provenance::new("synth", Some(seed));
    prov.detail("n_commits", n);
    let mut staged = Staged::new(out_dir)?;
    staged.write_with_sidecar("c_features.csv", &prov, |w| Ok(corpus.write_c_csv(w)?))?;
    staged.write_with_sidecar("features_A.csv", &prov, |w| Ok(corpus.write_a_csv(w)?))?;
    staged.write_with_sidecar("features_D.csv", &prov, |w| Ok(corpus.write_d_csv(w)?))?;
    staged.write_json(
        "spec.json",
        &SpecFile {
            provenance: &prov,
            spec: &corpus.spec,
        },
    )?;
    staged.commit()?;
    Ok(())
}

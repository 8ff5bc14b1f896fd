use scg_core::dataset::{load_and_join, read_dataset_csv, write_dataset_csv, FeatureCombination};
use scg_core::eval::run_matrix;
use scg_core::graph_metrics::{compute_metrics, write_feature_csv, FEATURE_NAMES};
use scg_core::ml::{ClassifierConfig, ClassifierKind};
use scg_core::patch::parse_patch;
use scg_core::scg::{commit_graphs, GraphRecord, Side};
use scg_core::synth::{generate, SynthSpec};

const SAMPLE: &str = include_str!("fixtures/sample_commit.patch");

#[test]
fn sample_patch_to_feature_rows() {
    let patch = parse_patch(SAMPLE, "sample", 0);
    let graphs = commit_graphs(&patch);
    let (added, deleted) = (graphs.added.unwrap(), graphs.deleted.unwrap());
    assert!(added.node_count() <= 24 && deleted.node_count() <= 24);
    // The deleted side keeps the else-block, so it is the larger graph.
    assert!(compute_metrics(&deleted).num_edges > compute_metrics(&added).num_edges);

    for (side, g) in [(Side::Added, &added), (Side::Deleted, &deleted)] {
        let line = GraphRecord::new("sample", side, g).to_json_line();
        let back: GraphRecord = serde_json::from_str(&line).unwrap();
        assert_eq!(&back.to_graph().unwrap(), g);
    }

    let mut csv = Vec::new();
    write_feature_csv(&mut csv, &[("sample".to_string(), compute_metrics(&added))]).unwrap();
    let text = String::from_utf8(csv).unwrap();
    assert_eq!(text.lines().next().unwrap().split(',').count(), 1 + FEATURE_NAMES.len());
}

#[test]
fn synthetic_corpus_through_dataset_and_eval() {
    let corpus = generate(&SynthSpec::new(400, 21)).unwrap();
    let (mut c, mut a, mut d) = (Vec::new(), Vec::new(), Vec::new());
    corpus.write_c_csv(&mut c).unwrap();
    corpus.write_a_csv(&mut a).unwrap();
    corpus.write_d_csv(&mut d).unwrap();
    let joined = load_and_join((&c[..], "c"), (&a[..], "a"), (&d[..], "d")).unwrap();

    let mut ds = Vec::new();
    write_dataset_csv(&mut ds, &joined).unwrap();
    let records = read_dataset_csv(&ds[..], "dataset.csv").unwrap();
    assert_eq!(records, corpus.records);

    let configs: Vec<ClassifierConfig> = ClassifierKind::ALL.iter().map(|&k| ClassifierConfig::new(k, 21)).collect();
    let report = run_matrix(&records, &configs, &FeatureCombination::ALL, 0.7).unwrap();
    assert_eq!(report.cell_count(), 21);
    assert_eq!((report.train_size, report.test_size), (280, 120));
    for kind in ClassifierKind::ALL {
        let c = report.cell(kind, FeatureCombination::C).unwrap();
        let n: u64 = c.tp + c.tn + c.fp + c.fn_;
        assert_eq!(n, 120);
    }
}

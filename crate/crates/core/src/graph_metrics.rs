//! The twelve structural attributes of a source code graph.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::scg::SourceCodeGraph;

/// Enumeration stops once this many cycles have been found.
pub const CYCLE_CAP: u64 = 100_000;

pub const FEATURE_NAMES: [&str; 12] = [
    "num_cycles",
    "density",
    "num_nodes",
    "num_edges",
    "avg_in_degree",
    "avg_out_degree",
    "max_degree",
    "min_degree",
    "sum_degree",
    "avg_degree",
    "median_degree",
    "num_self_loops",
];

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct GraphFeatureVector {
    pub num_cycles: u64,
    pub density: f64,
    pub num_nodes: u64,
    pub num_edges: u64,
    pub avg_in_degree: f64,
    pub avg_out_degree: f64,
    pub max_degree: u64,
    pub min_degree: u64,
    pub sum_degree: u64,
    pub avg_degree: f64,
    pub median_degree: f64,
    pub num_self_loops: u64,
}

impl GraphFeatureVector {
    /// Values in `FEATURE_NAMES` order.
    pub fn to_array(&self) -> [f64; 12] {
        [
            self.num_cycles as f64,
            self.density,
            self.num_nodes as f64,
            self.num_edges as f64,
            self.avg_in_degree,
            self.avg_out_degree,
            self.max_degree as f64,
            self.min_degree as f64,
            self.sum_degree as f64,
            self.avg_degree,
            self.median_degree,
            self.num_self_loops as f64,
        ]
    }

    /// Inverse of [`to_array`](Self::to_array). Count slots are rounded and
    /// clamped at zero.
    pub fn from_array(v: &[f64; 12]) -> Self {
        let count = |x: f64| x.round().max(0.0) as u64;
        GraphFeatureVector {
            num_cycles: count(v[0]),
            density: v[1],
            num_nodes: count(v[2]),
            num_edges: count(v[3]),
            avg_in_degree: v[4],
            avg_out_degree: v[5],
            max_degree: count(v[6]),
            min_degree: count(v[7]),
            sum_degree: count(v[8]),
            avg_degree: v[9],
            median_degree: v[10],
            num_self_loops: count(v[11]),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CycleCount {
    pub count: u64,
    pub capped: bool,
}

pub fn compute_metrics(g: &SourceCodeGraph) -> GraphFeatureVector {
    compute_metrics_reporting(g).0
}

/// Like [`compute_metrics`], also reporting whether cycle enumeration hit
/// [`CYCLE_CAP`].
pub fn compute_metrics_reporting(g: &SourceCodeGraph) -> (GraphFeatureVector, CycleCount) {
    let (labels, edges) = g.indexed();
    let n = labels.len();
    if n == 0 {
        return (
            GraphFeatureVector::default(),
            CycleCount {
                count: 0,
                capped: false,
            },
        );
    }
    let mut degree = vec![0u64; n];
    let mut num_edges = 0;
    let mut self_loops = 0;
    let mut simple = 0u64;
    for &(s, d, m) in &edges {
        num_edges += m;
        degree[s] += m;
        degree[d] += m;
        if s == d {
            self_loops += m;
        } else {
            simple += 1;
        }
    }
    let density = if n <= 1 {
        0.0
    } else {
        simple as f64 / (n * (n - 1)) as f64
    };
    let mut sorted = degree.clone();
    sorted.sort_unstable();
    let median = if n % 2 == 1 {
        sorted[n / 2] as f64
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) as f64 / 2.0
    };
    let sum_degree: u64 = degree.iter().sum();
    let avg_dir = num_edges as f64 / n as f64;
    let cycles = cycles_indexed(n, &edges, CYCLE_CAP);
    let v = GraphFeatureVector {
        num_cycles: cycles.count,
        density,
        num_nodes: n as u64,
        num_edges,
        avg_in_degree: avg_dir,
        avg_out_degree: avg_dir,
        max_degree: sorted[n - 1],
        min_degree: sorted[0],
        sum_degree,
        avg_degree: sum_degree as f64 / n as f64,
        median_degree: median,
        num_self_loops: self_loops,
    };
    (v, cycles)
}

pub fn count_simple_cycles(g: &SourceCodeGraph) -> u64 {
    count_simple_cycles_capped(g, CYCLE_CAP).count
}

pub fn count_simple_cycles_capped(g: &SourceCodeGraph, cap: u64) -> CycleCount {
    let (labels, edges) = g.indexed();
    cycles_indexed(labels.len(), &edges, cap)
}

fn cycles_indexed(n: usize, edges: &[(usize, usize, u64)], cap: u64) -> CycleCount {
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    for &(s, d, _) in edges {
        if s != d {
            adj[s].push(d);
        }
    }
    let count = johnson(&adj, cap);
    CycleCount {
        count,
        capped: count >= cap,
    }
}

/// Vertices of the strongly connected component of `s` in the subgraph
/// induced by vertices `>= s`.
fn component_of(adj: &[Vec<usize>], s: usize) -> Vec<bool> {
    let n = adj.len();
    let mut radj: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (v, ws) in adj.iter().enumerate().skip(s) {
        for &w in ws {
            if w >= s {
                radj[w].push(v);
            }
        }
    }
    let reach = |graph: &[Vec<usize>]| {
        let mut seen = vec![false; n];
        let mut stack = vec![s];
        seen[s] = true;
        while let Some(v) = stack.pop() {
            for &w in &graph[v] {
                if w >= s && !seen[w] {
                    seen[w] = true;
                    stack.push(w);
                }
            }
        }
        seen
    };
    let fwd = reach(adj);
    let bwd = reach(&radj);
    fwd.iter().zip(&bwd).map(|(a, b)| *a && *b).collect()
}

/// Johnson's elementary circuit enumeration, counting only. The circuit
/// search is iterative so deep graphs cannot overflow the stack.
fn johnson(adj: &[Vec<usize>], cap: u64) -> u64 {
    struct Frame {
        v: usize,
        next: usize,
        found: bool,
    }
    let n = adj.len();
    let mut count = 0u64;
    let mut blocked = vec![false; n];
    let mut b_sets: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
    for s in 0..n {
        let comp = component_of(adj, s);
        if comp.iter().filter(|c| **c).count() < 2 {
            continue;
        }
        let sub: Vec<Vec<usize>> = (0..n)
            .map(|v| {
                if comp[v] {
                    adj[v].iter().copied().filter(|w| comp[*w]).collect()
                } else {
                    Vec::new()
                }
            })
            .collect();
        for v in 0..n {
            blocked[v] = false;
            b_sets[v].clear();
        }
        blocked[s] = true;
        let mut stack = vec![Frame {
            v: s,
            next: 0,
            found: false,
        }];
        while let Some(top) = stack.last_mut() {
            let v = top.v;
            if top.next < sub[v].len() {
                let w = sub[v][top.next];
                top.next += 1;
                if w == s {
                    top.found = true;
                    count += 1;
                    if count >= cap {
                        return cap;
                    }
                } else if !blocked[w] {
                    blocked[w] = true;
                    stack.push(Frame {
                        v: w,
                        next: 0,
                        found: false,
                    });
                }
                continue;
            }
            let found = top.found;
            stack.pop();
            if found {
                unblock(v, &mut blocked, &mut b_sets);
            } else {
                for &w in &sub[v] {
                    b_sets[w].insert(v);
                }
            }
            if let Some(parent) = stack.last_mut() {
                parent.found |= found;
            }
        }
    }
    count
}

fn unblock(u: usize, blocked: &mut [bool], b_sets: &mut [BTreeSet<usize>]) {
    let mut work = vec![u];
    while let Some(x) = work.pop() {
        if !blocked[x] {
            continue;
        }
        blocked[x] = false;
        work.extend(std::mem::take(&mut b_sets[x]));
    }
}

/// Writes `commit_id,f1..f12`.
pub fn write_feature_csv<W: std::io::Write>(
    out: W,
    rows: &[(String, GraphFeatureVector)],
) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["commit_id".to_string()];
    header.extend((1..=12).map(|i| format!("f{i}")));
    w.write_record(&header)?;
    for (id, v) in rows {
        let mut rec = vec![id.clone()];
        rec.extend(v.to_array().iter().map(|x| x.to_string()));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::collections::BTreeMap;

    fn complete(k: usize) -> SourceCodeGraph {
        let mut g = SourceCodeGraph::new();
        for i in 0..k {
            for j in 0..k {
                if i != j {
                    g.add_edge(format!("v{i}"), format!("v{j}"), 1);
                }
            }
        }
        g
    }

    /// Counts cycles by enumerating every vertex sequence that starts at its
    /// minimum vertex and checking each consecutive pair for an edge.
    fn brute_force_cycles(g: &SourceCodeGraph) -> u64 {
        let (labels, edges) = g.indexed();
        let n = labels.len();
        let mut has = vec![vec![false; n]; n];
        for (s, d, _) in edges {
            if s != d {
                has[s][d] = true;
            }
        }
        fn extend(path: &mut Vec<usize>, has: &[Vec<bool>], n: usize) -> u64 {
            let first = path[0];
            let last = *path.last().unwrap();
            let mut total = 0;
            if path.len() >= 2 && has[last][first] {
                total += 1;
            }
            for next in first + 1..n {
                if !path.contains(&next) && has[last][next] {
                    path.push(next);
                    total += extend(path, has, n);
                    path.pop();
                }
            }
            total
        }
        (0..n).map(|s| extend(&mut vec![s], &has, n)).sum()
    }

    /// Degrees by scanning the edge list once per node.
    fn brute_force_degrees(g: &SourceCodeGraph) -> BTreeMap<String, u64> {
        g.nodes()
            .map(|v| {
                let d: u64 = g
                    .edges()
                    .map(|(s, t, m)| (u64::from(s == v) + u64::from(t == v)) * m)
                    .sum();
                (v.to_string(), d)
            })
            .collect()
    }

    #[test]
    fn empty_graph_is_all_zero() {
        let v = compute_metrics(&SourceCodeGraph::new());
        assert_eq!(v.to_array(), [0.0; 12]);
    }

    #[test]
    fn complete_three() {
        let g = complete(3);
        let v = compute_metrics(&g);
        assert_eq!(v.density, 1.0);
        assert_eq!(v.num_edges, 6);
        assert_eq!(v.sum_degree, 12);
        assert_eq!(v.avg_degree, 4.0);
        assert_eq!(v.median_degree, 4.0);
        assert_eq!(v.num_self_loops, 0);
        assert_eq!(brute_force_cycles(&g), 5);
        assert_eq!(v.num_cycles, 5);
    }

    #[test]
    fn multi_edge_with_self_loop() {
        let mut g = SourceCodeGraph::new();
        g.add_edge("A", "B", 3);
        g.add_edge("B", "B", 1);
        let v = compute_metrics(&g);
        let deg = brute_force_degrees(&g);
        assert_eq!(deg["A"], 3);
        assert_eq!(deg["B"], 5);
        assert_eq!(v.num_nodes, 2);
        assert_eq!(v.num_edges, 4);
        assert_eq!(v.sum_degree, 8);
        assert_eq!(v.num_self_loops, 1);
        assert_eq!(v.density, 0.5);
        assert_eq!(v.max_degree, 5);
        assert_eq!(v.min_degree, 3);
        assert_eq!(v.median_degree, 4.0);
        assert_eq!(v.num_cycles, 0);
    }

    #[test]
    fn cycle_examples() {
        let mut dag = SourceCodeGraph::new();
        dag.add_edge("a", "b", 1);
        dag.add_edge("a", "c", 2);
        dag.add_edge("b", "d", 1);
        dag.add_edge("c", "d", 1);
        assert_eq!(count_simple_cycles(&dag), 0);

        let mut two = SourceCodeGraph::new();
        two.add_edge("A", "B", 1);
        two.add_edge("B", "A", 1);
        assert_eq!(count_simple_cycles(&two), 1);

        assert_eq!(brute_force_cycles(&complete(4)), 20);
        assert_eq!(count_simple_cycles(&complete(4)), 20);
    }

    #[test]
    fn cap_is_reported() {
        let g = complete(5);
        assert_eq!(count_simple_cycles(&g), 84);
        let c = count_simple_cycles_capped(&g, 10);
        assert_eq!(c, CycleCount { count: 10, capped: true });
        // K9 has far more than the default cap.
        let big = count_simple_cycles_capped(&complete(9), CYCLE_CAP);
        assert!(big.capped);
        assert_eq!(big.count, CYCLE_CAP);
    }

    #[test]
    fn feature_csv_layout() {
        let mut buf = Vec::new();
        write_feature_csv(&mut buf, &[("c1".into(), compute_metrics(&complete(2)))]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), "commit_id,f1,f2,f3,f4,f5,f6,f7,f8,f9,f10,f11,f12");
        assert_eq!(lines.next().unwrap(), "c1,1,1,2,2,1,1,2,2,4,2,2,0");
    }

    fn arb_graph(max_nodes: usize) -> impl Strategy<Value = SourceCodeGraph> {
        (1..=max_nodes).prop_flat_map(|n| {
            prop::collection::vec((0..n, 0..n, 1u64..4), 0..(n * n + 1)).prop_map(move |es| {
                let mut g = SourceCodeGraph::new();
                for i in 0..n {
                    g.add_node(format!("n{i}"));
                }
                for (s, d, m) in es {
                    g.add_edge(format!("n{s}"), format!("n{d}"), m);
                }
                g
            })
        })
    }

    proptest! {
        #[test]
        fn degree_identities(g in arb_graph(10)) {
            let v = compute_metrics(&g);
            prop_assert_eq!(v.sum_degree, 2 * v.num_edges);
            prop_assert_eq!(v.avg_in_degree, v.avg_out_degree);
            prop_assert!((v.avg_in_degree - v.num_edges as f64 / v.num_nodes as f64).abs() < 1e-12);
            prop_assert!(v.min_degree as f64 <= v.median_degree);
            prop_assert!(v.median_degree <= v.max_degree as f64);
            prop_assert!((0.0..=1.0).contains(&v.density));
            let deg = brute_force_degrees(&g);
            prop_assert_eq!(*deg.values().max().unwrap(), v.max_degree);
            prop_assert_eq!(*deg.values().min().unwrap(), v.min_degree);
        }

        #[test]
        fn cycles_match_brute_force(g in arb_graph(8)) {
            prop_assert_eq!(count_simple_cycles(&g), brute_force_cycles(&g));
        }

        #[test]
        fn relabeling_invariance(g in arb_graph(8), perm_seed in any::<u64>()) {
            let labels: Vec<String> = g.nodes().map(String::from).collect();
            let mut shuffled = labels.clone();
            let mut state = perm_seed | 1;
            for i in (1..shuffled.len()).rev() {
                state ^= state << 13;
                state ^= state >> 7;
                state ^= state << 17;
                shuffled.swap(i, (state % (i as u64 + 1)) as usize);
            }
            let map: BTreeMap<&str, String> = labels
                .iter()
                .zip(&shuffled)
                .map(|(a, b)| (a.as_str(), format!("x{b}")))
                .collect();
            let mut h = SourceCodeGraph::new();
            for n in g.nodes() {
                h.add_node(map[n].clone());
            }
            for (s, d, m) in g.edges() {
                h.add_edge(map[s].clone(), map[d].clone(), m);
            }
            prop_assert_eq!(compute_metrics(&g), compute_metrics(&h));
        }
    }
}

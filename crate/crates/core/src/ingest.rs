//! Graph loading and instance construction.

use std::collections::{HashMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::index::{num_pairs, pair_index};
use crate::types::{Norm, ProblemInstance, SparseTriVec};

/// Simple undirected graph on nodes `1..=n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    /// `(i, j)` with `i < j`, sorted.
    edges: Vec<(usize, usize)>,
    /// Original label of node `i` at index `i - 1`.
    labels: Vec<i64>,
}

impl Graph {
    /// Builds a graph from 1-based edges; self-loops and duplicates are dropped.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut set = HashSet::new();
        for &(a, b) in edges {
            if a == 0 || b == 0 || a > n || b > n {
                return Err(Error::arg(format!("edge ({a}, {b}) out of range for n = {n}")));
            }
            if a != b {
                set.insert((a.min(b), a.max(b)));
            }
        }
        let mut edges: Vec<_> = set.into_iter().collect();
        edges.sort_unstable();
        Ok(Graph { n, edges, labels: (1..=n as i64).collect() })
    }

    pub fn num_nodes(&self) -> usize {
        self.n
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn labels(&self) -> &[i64] {
        &self.labels
    }

    fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.n + 1];
        for &(a, b) in &self.edges {
            adj[a].push(b);
            adj[b].push(a);
        }
        adj
    }
}

/// Parses a whitespace-separated edge list. Lines starting with `#` or `%`
/// are comments; tokens after the first two are ignored. Nodes are relabelled
/// `1..=n` in order of first appearance.
pub fn parse_edge_list(reader: impl BufRead) -> Result<Graph> {
    let mut ids: HashMap<i64, usize> = HashMap::new();
    let mut labels = Vec::new();
    let mut raw = Vec::new();
    for (lineno, line) in reader.lines().enumerate() {
        let line = line?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') || t.starts_with('%') {
            continue;
        }
        let mut toks = t.split_whitespace();
        let mut node = || -> Result<usize> {
            let tok = toks.next().ok_or_else(|| Error::Parse { line: lineno + 1, msg: "expected two node ids".into() })?;
            let label: i64 = tok
                .parse()
                .map_err(|_| Error::Parse { line: lineno + 1, msg: format!("bad node id '{tok}'") })?;
            let next = ids.len() + 1;
            Ok(*ids.entry(label).or_insert_with(|| {
                labels.push(label);
                next
            }))
        };
        let a = node()?;
        let b = node()?;
        raw.push((a, b));
    }
    let mut g = Graph::from_edges(labels.len(), &raw)?;
    if g.edges.is_empty() {
        return Err(Error::EmptyGraph);
    }
    g.labels = labels;
    Ok(g)
}

pub fn load_edge_list(path: impl AsRef<Path>) -> Result<Graph> {
    parse_edge_list(BufReader::new(File::open(path)?))
}

/// Largest connected component, relabelled `1..=n'` keeping relative order.
/// Ties go to the component containing the smallest node.
pub fn largest_component(graph: &Graph) -> Graph {
    let adj = graph.adjacency();
    let mut comp = vec![usize::MAX; graph.n + 1];
    let mut best = (0, 0);
    let mut stack = Vec::new();
    let mut count = 0;
    for s in 1..=graph.n {
        if comp[s] != usize::MAX {
            continue;
        }
        let mut size = 0;
        comp[s] = count;
        stack.push(s);
        while let Some(x) = stack.pop() {
            size += 1;
            for &y in &adj[x] {
                if comp[y] == usize::MAX {
                    comp[y] = count;
                    stack.push(y);
                }
            }
        }
        if size > best.0 {
            best = (size, count);
        }
        count += 1;
    }
    let mut new_id = vec![0; graph.n + 1];
    let mut labels = Vec::new();
    for i in 1..=graph.n {
        if comp[i] == best.1 {
            labels.push(graph.labels[i - 1]);
            new_id[i] = labels.len();
        }
    }
    let edges: Vec<_> = graph
        .edges
        .iter()
        .filter(|e| comp[e.0] == best.1)
        .map(|&(a, b)| (new_id[a], new_id[b]))
        .collect();
    Graph { n: labels.len(), edges, labels }
}

/// Dissimilarities and weights assigned to edges and non-edges.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InstanceOptions {
    pub edge_dissim: f64,
    pub nonedge_dissim: f64,
    pub edge_weight: f64,
    pub nonedge_weight: f64,
}

impl Default for InstanceOptions {
    fn default() -> Self {
        InstanceOptions { edge_dissim: 0.0, nonedge_dissim: 1.0, edge_weight: 1.0, nonedge_weight: 1.0 }
    }
}

/// Instance with `x_ij = edge_dissim` on edges and `nonedge_dissim` elsewhere.
pub fn build_instance(graph: &Graph, norm: Norm, opts: &InstanceOptions) -> Result<ProblemInstance> {
    let n = graph.n;
    let mut x = SparseTriVec::constant(n, opts.nonedge_dissim);
    let mut w = SparseTriVec::constant(n, opts.nonedge_weight);
    for &(a, b) in &graph.edges {
        let k = pair_index(a, b, n)?;
        x.set(k, opts.edge_dissim)?;
        w.set(k, opts.edge_weight)?;
    }
    ProblemInstance::new(x, w, norm)
}

/// Dense random instance: dissimilarities uniform on `[0, 2)`, weights
/// uniform on `[0.1, 1)`. Deterministic in `seed`.
pub fn gen_random_instance(n: usize, seed: u64, norm: Norm) -> Result<ProblemInstance> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = num_pairs(n);
    let x: Vec<f64> = (0..m).map(|_| rng.random_range(0.0..2.0)).collect();
    let w: Vec<f64> = (0..m).map(|_| rng.random_range(0.1..1.0)).collect();
    ProblemInstance::from_dense(n, &x, &w, norm)
}

/// Connected random graph: a random recursive tree plus uniformly drawn extra
/// edges until the average degree reaches `avg_degree`.
pub fn gen_random_graph(n: usize, avg_degree: f64, seed: u64) -> Result<Graph> {
    if n < 2 {
        return Err(Error::arg("need at least two nodes"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let max_edges = n * (n - 1) / 2;
    let target = ((avg_degree * n as f64 / 2.0).round() as usize).clamp(n - 1, max_edges);
    let mut set = HashSet::new();
    for v in 2..=n {
        let u = rng.random_range(1..v);
        set.insert((u, v));
    }
    while set.len() < target {
        let a = rng.random_range(1..=n);
        let b = rng.random_range(1..=n);
        if a != b {
            set.insert((a.min(b), a.max(b)));
        }
    }
    let edges: Vec<_> = set.into_iter().collect();
    Graph::from_edges(n, &edges)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Cursor;

    #[test]
    fn parse_relabels_and_dedupes() {
        let text = "# comment\n% other\n10 20\n20 10\n20 30 extra tokens\n30 30\n\n40 10\n";
        let g = parse_edge_list(Cursor::new(text)).unwrap();
        assert_eq!(g.num_nodes(), 4);
        assert_eq!(g.edges(), &[(1, 2), (1, 4), (2, 3)]);
        assert_eq!(g.labels(), &[10, 20, 30, 40]);
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        match parse_edge_list(Cursor::new("1 2\n3 x\n")) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
        match parse_edge_list(Cursor::new("1 2\n3\n")) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
        assert!(matches!(parse_edge_list(Cursor::new("# nothing\n")), Err(Error::EmptyGraph)));
        assert!(matches!(parse_edge_list(Cursor::new("5 5\n")), Err(Error::EmptyGraph)));
    }

    #[test]
    fn largest_component_picks_biggest_then_smallest() {
        let g = Graph::from_edges(7, &[(1, 2), (3, 4), (4, 5), (6, 7)]).unwrap();
        let c = largest_component(&g);
        assert_eq!(c.num_nodes(), 3);
        assert_eq!(c.edges(), &[(1, 2), (2, 3)]);
        assert_eq!(c.labels(), &[3, 4, 5]);
        let tie = Graph::from_edges(4, &[(3, 4), (1, 2)]).unwrap();
        assert_eq!(largest_component(&tie).labels(), &[1, 2]);
    }

    #[test]
    fn instance_from_graph() {
        // path 1-2-3
        let g = Graph::from_edges(3, &[(1, 2), (2, 3)]).unwrap();
        let inst = build_instance(&g, Norm::L1, &InstanceOptions::default()).unwrap();
        assert_eq!(inst.dissim_dense(), &[0.0, 1.0, 0.0]);
        assert_eq!(inst.weights_dense(), &[1.0, 1.0, 1.0]);
        let opts = InstanceOptions { edge_weight: 2.0, nonedge_dissim: 3.0, ..Default::default() };
        let inst = build_instance(&g, Norm::L2, &opts).unwrap();
        assert_eq!(inst.dissim_dense(), &[0.0, 3.0, 0.0]);
        assert_eq!(inst.weights_dense(), &[2.0, 1.0, 2.0]);
    }

    #[test]
    fn random_instance_is_reproducible() {
        let a = gen_random_instance(8, 3, Norm::L1).unwrap();
        let b = gen_random_instance(8, 3, Norm::L1).unwrap();
        let c = gen_random_instance(8, 4, Norm::L1).unwrap();
        assert_eq!(a.dissim_dense(), b.dissim_dense());
        assert_ne!(a.dissim_dense(), c.dissim_dense());
        assert!(a.dissim_dense().iter().all(|&x| (0.0..2.0).contains(&x)));
        assert!(a.weights_dense().iter().all(|&w| (0.1..1.0).contains(&w)));
    }

    #[test]
    fn random_graph_is_connected_with_target_degree() {
        let g = gen_random_graph(300, 8.0, 1).unwrap();
        assert_eq!(g.num_edges(), 1200);
        assert_eq!(largest_component(&g).num_nodes(), 300);
    }
}

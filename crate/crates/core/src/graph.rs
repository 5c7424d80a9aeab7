//! Undirected, unweighted graphs with optional self-loops.
//!
//! Edges are stored once as sorted `(i, j)` pairs with `i <= j`. A compressed
//! row view is built lazily for the spectral code, which only ever needs fast
//! row iteration.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::sync::OnceLock;

use crate::error::{Error, Result};

/// Compressed sparse row adjacency. A self-loop appears exactly once in its
/// row, so row lengths are the degrees.
#[derive(Debug, Clone, PartialEq)]
pub struct Csr {
    offsets: Vec<usize>,
    cols: Vec<u32>,
}

impl Csr {
    pub fn n(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn nnz(&self) -> usize {
        self.cols.len()
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[u32] {
        &self.cols[self.offsets[i]..self.offsets[i + 1]]
    }

    /// `y = A x`.
    pub fn spmv(&self, x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate() {
            let mut acc = 0.0;
            for &j in self.row(i) {
                acc += x[j as usize];
            }
            *yi = acc;
        }
    }
}

#[derive(Debug, Clone)]
pub struct Graph {
    n: usize,
    edges: Vec<(u32, u32)>,
    csr: OnceLock<Csr>,
}

impl PartialEq for Graph {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n && self.edges == other.edges
    }
}

impl Eq for Graph {}

impl Graph {
    /// Builds a graph from arbitrary vertex pairs, normalizing orientation and
    /// dropping duplicates.
    pub fn from_edges<I>(n: usize, pairs: I) -> Result<Graph>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        if n > u32::MAX as usize {
            return Err(Error::InvalidParameter(format!(
                "{n} vertices exceed the u32 index space"
            )));
        }
        let mut edges = Vec::new();
        for (a, b) in pairs {
            for v in [a, b] {
                if v >= n {
                    return Err(Error::VertexOutOfRange { vertex: v, n });
                }
            }
            let (i, j) = if a <= b { (a, b) } else { (b, a) };
            edges.push((i as u32, j as u32));
        }
        Ok(Self::from_normalized(n, edges))
    }

    /// Pairs must already satisfy `i <= j < n`.
    pub(crate) fn from_normalized(n: usize, mut edges: Vec<(u32, u32)>) -> Graph {
        edges.sort_unstable();
        edges.dedup();
        debug_assert!(edges.iter().all(|&(i, j)| i <= j && (j as usize) < n));
        Graph {
            n,
            edges,
            csr: OnceLock::new(),
        }
    }

    pub fn empty(n: usize) -> Graph {
        Self::from_normalized(n, Vec::new())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of undirected edges, self-loops included.
    pub fn m(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[(u32, u32)] {
        &self.edges
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        let key = if a <= b {
            (a as u32, b as u32)
        } else {
            (b as u32, a as u32)
        };
        self.edges.binary_search(&key).is_ok()
    }

    pub fn csr(&self) -> &Csr {
        self.csr.get_or_init(|| {
            let mut counts = vec![0usize; self.n + 1];
            for &(i, j) in &self.edges {
                counts[i as usize + 1] += 1;
                if i != j {
                    counts[j as usize + 1] += 1;
                }
            }
            for k in 0..self.n {
                counts[k + 1] += counts[k];
            }
            let mut fill = counts.clone();
            let mut cols = vec![0u32; counts[self.n]];
            for &(i, j) in &self.edges {
                cols[fill[i as usize]] = j;
                fill[i as usize] += 1;
                if i != j {
                    cols[fill[j as usize]] = i;
                    fill[j as usize] += 1;
                }
            }
            // Edges are sorted by (i, j), so each row's columns come out sorted.
            Csr {
                offsets: counts,
                cols,
            }
        })
    }

    pub fn degrees(&self) -> DegreeVector {
        let csr = self.csr();
        let k: Vec<u64> = (0..self.n).map(|i| csr.row(i).len() as u64).collect();
        let volume = k.iter().sum();
        DegreeVector { k, volume }
    }

    /// `G1 ∪ G2` with the second graph's vertex `i` placed at `placement[i]`.
    pub fn union(&self, other: &Graph, placement: &Placement) -> Result<Graph> {
        placement.check(other.n(), self.n)?;
        let mut edges = self.edges.clone();
        edges.extend(other.edges.iter().map(|&(i, j)| placement.map_edge(i, j)));
        Ok(Self::from_normalized(self.n, edges))
    }

    /// The foreground residual graph: placed signal edges absent from `self`.
    pub fn foreground_residual(&self, signal: &Graph, placement: &Placement) -> Result<Graph> {
        placement.check(signal.n(), self.n)?;
        let edges = signal
            .edges
            .iter()
            .map(|&(i, j)| placement.map_edge(i, j))
            .filter(|e| self.edges.binary_search(e).is_err())
            .collect();
        Ok(Self::from_normalized(self.n, edges))
    }

    /// Whether every vertex has the same degree.
    pub fn regular_degree(&self) -> Option<u64> {
        let k = self.degrees().k;
        let first = *k.first()?;
        k.iter().all(|&d| d == first).then_some(first)
    }
}

/// Observed degrees `k` and the volume `Σ k_i`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DegreeVector {
    pub k: Vec<u64>,
    pub volume: u64,
}

impl DegreeVector {
    pub fn as_f64(&self) -> Vec<f64> {
        self.k.iter().map(|&d| d as f64).collect()
    }
}

/// A sorted set of distinct vertex ids.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct VertexSubset(Vec<u32>);

impl VertexSubset {
    pub fn new<I: IntoIterator<Item = usize>>(ids: I, n: usize) -> Result<VertexSubset> {
        let mut v = Vec::new();
        for id in ids {
            if id >= n {
                return Err(Error::VertexOutOfRange { vertex: id, n });
            }
            v.push(id as u32);
        }
        v.sort_unstable();
        v.dedup();
        Ok(VertexSubset(v))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn contains(&self, v: usize) -> bool {
        self.0.binary_search(&(v as u32)).is_ok()
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().map(|&v| v as usize)
    }

    pub fn to_vec(&self) -> Vec<usize> {
        self.iter().collect()
    }
}

/// Ordered injective map from a signal graph's vertices into the background.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Placement(Vec<u32>);

impl Placement {
    pub fn new(targets: Vec<usize>) -> Placement {
        Placement(targets.into_iter().map(|v| v as u32).collect())
    }

    pub fn identity(n: usize) -> Placement {
        Placement((0..n as u32).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, i: usize) -> usize {
        self.0[i] as usize
    }

    pub fn vertices(&self) -> VertexSubset {
        let mut v = self.0.clone();
        v.sort_unstable();
        VertexSubset(v)
    }

    fn check(&self, signal_n: usize, background_n: usize) -> Result<()> {
        if self.0.len() != signal_n {
            return Err(Error::PlacementSize {
                expected: signal_n,
                got: self.0.len(),
            });
        }
        let mut seen = self.0.clone();
        seen.sort_unstable();
        for w in seen.windows(2) {
            if w[0] == w[1] {
                return Err(Error::PlacementDuplicate(w[0] as usize));
            }
        }
        if let Some(&v) = seen.last() {
            if v as usize >= background_n {
                return Err(Error::VertexOutOfRange {
                    vertex: v as usize,
                    n: background_n,
                });
            }
        }
        Ok(())
    }

    fn map_edge(&self, i: u32, j: u32) -> (u32, u32) {
        let a = self.0[i as usize];
        let b = self.0[j as usize];
        if a <= b {
            (a, b)
        } else {
            (b, a)
        }
    }
}

/// A graph parsed from an edge list, with the original id of each dense index.
#[derive(Debug, Clone)]
pub struct ParsedGraph {
    pub graph: Graph,
    pub original_ids: Vec<i64>,
}

/// Parses a SNAP-style edge list: `#` comments, two integer ids per line.
///
/// Ids are remapped to `0..N` in order of first appearance. Directed inputs
/// are symmetrized, so `a b` and `b a` name the same edge.
pub fn parse_edge_list(text: &str) -> Result<ParsedGraph> {
    let mut index: HashMap<i64, u32> = HashMap::new();
    let mut original_ids = Vec::new();
    let mut edges = Vec::new();
    let mut intern = |id: i64| -> u32 {
        *index.entry(id).or_insert_with(|| {
            original_ids.push(id);
            (original_ids.len() - 1) as u32
        })
    };
    for (lineno, line) in text.lines().enumerate() {
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let mut tokens = trimmed.split_whitespace();
        let mut next_id = |what: &str| -> Result<i64> {
            let tok = tokens.next().ok_or_else(|| Error::Parse {
                line: lineno + 1,
                msg: format!("missing {what} vertex"),
            })?;
            tok.parse::<i64>().map_err(|_| Error::Parse {
                line: lineno + 1,
                msg: format!("invalid vertex id {tok:?}"),
            })
        };
        let a = next_id("source")?;
        let b = next_id("target")?;
        if let Some(extra) = tokens.next() {
            return Err(Error::Parse {
                line: lineno + 1,
                msg: format!("unexpected token {extra:?}"),
            });
        }
        let (ia, ib) = (intern(a), intern(b));
        edges.push(if ia <= ib { (ia, ib) } else { (ib, ia) });
    }
    if edges.is_empty() {
        return Err(Error::EmptyGraph);
    }
    let n = original_ids.len();
    Ok(ParsedGraph {
        graph: Graph::from_normalized(n, edges),
        original_ids,
    })
}

/// Writes a graph as an edge list that parses back to the same graph.
///
/// Each vertex is introduced in index order (by an edge to an earlier vertex,
/// a self-loop, or an edge to its successor) so first-appearance remapping is
/// the identity. Isolated vertices cannot be represented and are dropped on
/// re-parse.
pub fn write_edge_list(g: &Graph) -> String {
    let csr = g.csr();
    let n = g.n();
    let mut emitted = vec![false; g.m()];
    let mut seen = vec![false; n];
    let mut out = String::new();
    let _ = writeln!(out, "# undirected graph: {} vertices, {} edges", n, g.m());

    let edge_index = |a: u32, b: u32| -> usize {
        let key = if a <= b { (a, b) } else { (b, a) };
        g.edges().binary_search(&key).expect("edge from csr")
    };

    for v in 0..n {
        if seen[v] {
            continue;
        }
        let row = csr.row(v);
        if row.is_empty() {
            continue;
        }
        // Rows are sorted, so row[0] is the smallest neighbor.
        let u = row[0] as usize;
        let (first, second) = if u <= v {
            (u, v)
        } else if u == v + 1 || row.iter().any(|&w| w as usize == v + 1) {
            (v, v + 1)
        } else {
            (v, u)
        };
        let idx = edge_index(first as u32, second as u32);
        emitted[idx] = true;
        seen[first] = true;
        seen[second] = true;
        let _ = writeln!(out, "{first}\t{second}");
    }
    for (idx, &(i, j)) in g.edges().iter().enumerate() {
        if !emitted[idx] {
            let _ = writeln!(out, "{i}\t{j}");
        }
    }
    out
}

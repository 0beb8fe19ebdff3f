//! Undirected multigraphs with per-pair multiplicities.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::error::{usage, Error, Result};

/// One aggregated edge record. Always stored with `u < v`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Edge {
    pub u: usize,
    pub v: usize,
    pub mult: u64,
}

/// Undirected multigraph. Parallel edges are kept as a multiplicity on a
/// single record per unordered pair; self-loops are not allowed.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MultiGraph {
    num_vertices: usize,
    edges: Vec<Edge>,
}

impl MultiGraph {
    pub fn empty(num_vertices: usize) -> Self {
        MultiGraph { num_vertices, edges: Vec::new() }
    }

    /// Builds a graph from `(u, v, mult)` triples in any order. Duplicate
    /// pairs are merged by adding multiplicities; zero multiplicities are
    /// dropped.
    pub fn from_edges<I>(num_vertices: usize, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, u64)>,
    {
        let mut acc: BTreeMap<(usize, usize), u64> = BTreeMap::new();
        for (u, v, mult) in edges {
            if u >= num_vertices || v >= num_vertices {
                return usage(format!(
                    "edge ({u}, {v}) out of range for {num_vertices} vertices"
                ));
            }
            if u == v {
                return usage(format!("self-loop at vertex {u}"));
            }
            if mult == 0 {
                continue;
            }
            *acc.entry((u.min(v), u.max(v))).or_insert(0) += mult;
        }
        let edges = acc.into_iter().map(|((u, v), mult)| Edge { u, v, mult }).collect();
        Ok(MultiGraph { num_vertices, edges })
    }

    pub fn num_vertices(&self) -> usize {
        self.num_vertices
    }

    /// Edge records sorted by `(u, v)`.
    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// Number of edges counted with multiplicity, i.e. `|E|`.
    pub fn total_multiplicity(&self) -> u64 {
        self.edges.iter().map(|e| e.mult).sum()
    }

    pub fn degrees(&self) -> Vec<u64> {
        let mut deg = vec![0; self.num_vertices];
        for e in &self.edges {
            deg[e.u] += e.mult;
            deg[e.v] += e.mult;
        }
        deg
    }

    pub fn degree(&self, v: usize) -> u64 {
        self.edges
            .iter()
            .filter(|e| e.u == v || e.v == v)
            .map(|e| e.mult)
            .sum()
    }

    /// The common degree if the graph is regular (and nonempty).
    pub fn regular_degree(&self) -> Option<u64> {
        let deg = self.degrees();
        let first = *deg.first()?;
        deg.iter().all(|&d| d == first).then_some(first)
    }

    /// Neighbour lists with multiplicities, indexed by vertex.
    pub fn adjacency(&self) -> Vec<Vec<(usize, u64)>> {
        let mut adj = vec![Vec::new(); self.num_vertices];
        for e in &self.edges {
            adj[e.u].push((e.v, e.mult));
            adj[e.v].push((e.u, e.mult));
        }
        adj
    }

    pub fn multiplicity(&self, u: usize, v: usize) -> u64 {
        let key = (u.min(v), u.max(v));
        self.edges
            .binary_search_by(|e| (e.u, e.v).cmp(&key))
            .map(|i| self.edges[i].mult)
            .unwrap_or(0)
    }

    /// Disjoint union; vertices of `other` are shifted past ours.
    pub fn disjoint_union(&self, other: &MultiGraph) -> MultiGraph {
        let shift = self.num_vertices;
        let mut edges = self.edges.clone();
        edges.extend(other.edges.iter().map(|e| Edge { u: e.u + shift, v: e.v + shift, mult: e.mult }));
        MultiGraph { num_vertices: shift + other.num_vertices, edges }
    }

    /// True if every edge joins `0..left` to `left..num_vertices`.
    pub fn is_bipartite_split(&self, left: usize) -> bool {
        self.edges.iter().all(|e| e.u < left && e.v >= left)
    }

    /// Serializes to the `p graph` text format, records sorted by `(u, v)`.
    pub fn to_text(&self) -> String {
        let mut out = format!("p graph {} {}\n", self.num_vertices, self.edges.len());
        for e in &self.edges {
            let _ = writeln!(out, "e {} {} {}", e.u, e.v, e.mult);
        }
        out
    }

    /// Parses the `p graph` text format. Records may come in any order and
    /// repeated pairs are aggregated.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut header: Option<(usize, usize)> = None;
        let mut raw = Vec::new();
        for (idx, line) in text.lines().enumerate() {
            let lineno = idx + 1;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            match fields[0] {
                "p" => {
                    if header.is_some() {
                        return parse_err(lineno, "duplicate header");
                    }
                    if fields.len() != 4 || fields[1] != "graph" {
                        return parse_err(lineno, "expected `p graph <vertices> <records>`");
                    }
                    header = Some((field(&fields, 2, lineno)?, field(&fields, 3, lineno)?));
                }
                "e" => {
                    let Some((n, _)) = header else {
                        return parse_err(lineno, "edge record before header");
                    };
                    if fields.len() != 4 {
                        return parse_err(lineno, "expected `e <u> <v> <mult>`");
                    }
                    let u: usize = field(&fields, 1, lineno)?;
                    let v: usize = field(&fields, 2, lineno)?;
                    let mult: u64 = field(&fields, 3, lineno)?;
                    if u >= n || v >= n {
                        return parse_err(lineno, format!("vertex index out of range 0..{n}"));
                    }
                    if u == v {
                        return parse_err(lineno, "self-loop");
                    }
                    if mult == 0 {
                        return parse_err(lineno, "multiplicity must be positive");
                    }
                    raw.push((u, v, mult));
                }
                other => return parse_err(lineno, format!("unknown record type `{other}`")),
            }
        }
        let Some((n, records)) = header else {
            return parse_err(1, "missing `p graph` header");
        };
        if raw.len() != records {
            return parse_err(
                text.lines().count().max(1),
                format!("header declares {records} edge records, found {}", raw.len()),
            );
        }
        MultiGraph::from_edges(n, raw)
    }

    pub fn read_file(path: &std::path::Path) -> Result<Self> {
        Self::from_text(&std::fs::read_to_string(path)?)
    }

    pub fn write_file(&self, path: &std::path::Path) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }
}

fn parse_err<T>(line: usize, msg: impl Into<String>) -> Result<T> {
    Err(Error::Parse { line, msg: msg.into() })
}

fn field<T: std::str::FromStr>(fields: &[&str], i: usize, line: usize) -> Result<T> {
    fields
        .get(i)
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| Error::Parse { line, msg: format!("bad or missing field {i}") })
}

/// Small named graphs used throughout the tests and the CLI examples.
pub mod named {
    use super::MultiGraph;

    pub fn single_edge() -> MultiGraph {
        MultiGraph::from_edges(2, [(0, 1, 1)]).unwrap()
    }

    pub fn path(n: usize) -> MultiGraph {
        MultiGraph::from_edges(n, (1..n).map(|i| (i - 1, i, 1))).unwrap()
    }

    pub fn cycle(n: usize) -> MultiGraph {
        assert!(n >= 3);
        MultiGraph::from_edges(n, (0..n).map(|i| (i, (i + 1) % n, 1))).unwrap()
    }

    pub fn complete(n: usize) -> MultiGraph {
        let mut edges = Vec::new();
        for u in 0..n {
            for v in u + 1..n {
                edges.push((u, v, 1));
            }
        }
        MultiGraph::from_edges(n, edges).unwrap()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn aggregates_duplicates_and_orients_pairs() {
        let g = MultiGraph::from_edges(3, [(1, 0, 2), (0, 1, 1), (2, 1, 1)]).unwrap();
        assert_eq!(g.edges(), &[Edge { u: 0, v: 1, mult: 3 }, Edge { u: 1, v: 2, mult: 1 }]);
        assert_eq!(g.degrees(), vec![3, 4, 1]);
        assert_eq!(g.multiplicity(1, 0), 3);
        assert_eq!(g.total_multiplicity(), 4);
    }

    #[test]
    fn rejects_self_loops_and_out_of_range() {
        assert!(MultiGraph::from_edges(2, [(0, 0, 1)]).is_err());
        assert!(MultiGraph::from_edges(2, [(0, 2, 1)]).is_err());
    }

    #[test]
    fn regularity() {
        assert_eq!(named::cycle(5).regular_degree(), Some(2));
        assert_eq!(named::complete(4).regular_degree(), Some(3));
        assert_eq!(named::path(3).regular_degree(), None);
    }

    #[test]
    fn text_round_trip_and_unsorted_input() {
        let text = "# comment\np graph 4 3\ne 2 3 1\ne 0 1 2\ne 1 0 1\n";
        let g = MultiGraph::from_text(text).unwrap();
        assert_eq!(g.multiplicity(0, 1), 3);
        assert_eq!(g.to_text(), "p graph 4 2\ne 0 1 3\ne 2 3 1\n");
        assert_eq!(MultiGraph::from_text(&g.to_text()).unwrap(), g);
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        match MultiGraph::from_text("p graph 2 1\ne 0 5 1\n") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
        assert!(MultiGraph::from_text("e 0 1 1\n").is_err());
        assert!(MultiGraph::from_text("p graph 2 2\ne 0 1 1\n").is_err());
    }
}

//! Network graphs: construction, validation, and edge-list serialization.
//!
//! A topology is an undirected graph on `m` nodes with no self loops. Nodes
//! are 0-based internally and 1-based in every human-facing format,
//! including the edge-list interchange file.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use rand::Rng;

use crate::rng::SimRng;
use crate::{Error, Result};

/// Undirected connected-checkable graph on `m >= 2` nodes.
///
/// Immutable after construction; edges are stored as `(i, j)` pairs with
/// `i < j`, 0-based.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Topology {
    m: usize,
    edges: BTreeSet<(usize, usize)>,
    adjacency: Vec<Vec<usize>>,
}

impl Topology {
    /// Builds a topology from a node count and edge list. Edges may be given
    /// in either order; self loops and duplicates are rejected.
    pub fn new(m: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        if m < 2 {
            return Err(Error::InvalidSize {
                what: "topology",
                min: 2,
                got: m,
            });
        }
        let mut set = BTreeSet::new();
        for (a, b) in edges {
            if a >= m {
                return Err(Error::NodeOutOfRange { node: a, m });
            }
            if b >= m {
                return Err(Error::NodeOutOfRange { node: b, m });
            }
            if a == b {
                return Err(Error::SelfLoop(a));
            }
            let e = (a.min(b), a.max(b));
            if !set.insert(e) {
                return Err(Error::DuplicateEdge(e.0, e.1));
            }
        }
        let mut adjacency = vec![Vec::new(); m];
        for &(i, j) in &set {
            adjacency[i].push(j);
            adjacency[j].push(i);
        }
        Ok(Self {
            m,
            edges: set,
            adjacency,
        })
    }

    /// Complete graph: all m(m-1)/2 edges.
    pub fn complete(m: usize) -> Result<Self> {
        if m < 2 {
            return Err(Error::InvalidSize {
                what: "complete graph",
                min: 2,
                got: m,
            });
        }
        Self::new(m, (0..m).flat_map(|i| ((i + 1)..m).map(move |j| (i, j))))
    }

    /// Star: node 0 is the hub, edges {0, i} for i = 1..m-1.
    pub fn star(m: usize) -> Result<Self> {
        if m < 2 {
            return Err(Error::InvalidSize {
                what: "star graph",
                min: 2,
                got: m,
            });
        }
        Self::new(m, (1..m).map(|i| (0, i)))
    }

    /// Cycle on m >= 3 nodes.
    pub fn ring(m: usize) -> Result<Self> {
        if m < 3 {
            return Err(Error::InvalidSize {
                what: "ring graph",
                min: 3,
                got: m,
            });
        }
        Self::new(m, (0..m).map(|i| (i, (i + 1) % m)))
    }

    /// Chain 0 - 1 - ... - (m-1).
    pub fn path(m: usize) -> Result<Self> {
        if m < 2 {
            return Err(Error::InvalidSize {
                what: "path graph",
                min: 2,
                got: m,
            });
        }
        Self::new(m, (0..m - 1).map(|i| (i, i + 1)))
    }

    /// Random connected graph: a random spanning tree (each node i >= 1
    /// attaches to a uniform earlier node) plus `extra_edges` distinct
    /// additional edges where capacity allows.
    pub fn random_connected(m: usize, extra_edges: usize, rng: &mut SimRng) -> Result<Self> {
        if m < 2 {
            return Err(Error::InvalidSize {
                what: "random graph",
                min: 2,
                got: m,
            });
        }
        let mut set = BTreeSet::new();
        for i in 1..m {
            let parent = rng.random_range(0..i);
            set.insert((parent, i));
        }
        let capacity = m * (m - 1) / 2;
        let want = (m - 1 + extra_edges).min(capacity);
        while set.len() < want {
            let a = rng.random_range(0..m);
            let b = rng.random_range(0..m);
            if a != b {
                set.insert((a.min(b), a.max(b)));
            }
        }
        Self::new(m, set)
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Edges in sorted order, 0-based, `i < j`.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges.iter().copied()
    }

    pub fn contains_edge(&self, a: usize, b: usize) -> bool {
        a != b && self.edges.contains(&(a.min(b), a.max(b)))
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.adjacency[i]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.adjacency[i].len()
    }

    pub fn is_connected(&self) -> bool {
        let mut seen = vec![false; self.m];
        let mut stack = vec![0usize];
        seen[0] = true;
        let mut count = 1;
        while let Some(v) = stack.pop() {
            for &w in &self.adjacency[v] {
                if !seen[w] {
                    seen[w] = true;
                    count += 1;
                    stack.push(w);
                }
            }
        }
        count == self.m
    }

    /// Tree iff connected with exactly m - 1 edges.
    pub fn is_tree(&self) -> bool {
        self.edges.len() == self.m - 1 && self.is_connected()
    }

    /// A node adjacent to every other node, if one exists.
    pub fn hub(&self) -> Option<usize> {
        (0..self.m).find(|&i| self.adjacency[i].len() == self.m - 1)
    }

    /// Serializes to the edge-list interchange format: first line `m`, then
    /// one `i j` pair per line, 1-based, `i < j`.
    pub fn to_edge_list(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{}", self.m);
        for &(i, j) in &self.edges {
            let _ = writeln!(out, "{} {}", i + 1, j + 1);
        }
        out
    }

    /// Parses the edge-list format. Lines starting with `#` and blank lines
    /// are ignored; the first significant line is the node count.
    pub fn from_edge_list(text: &str) -> Result<Self> {
        let mut m: Option<usize> = None;
        let mut edges = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let lineno = idx + 1;
            if m.is_none() {
                m = Some(line.parse().map_err(|_| Error::Parse {
                    line: lineno,
                    msg: format!("expected node count, got {line:?}"),
                })?);
                continue;
            }
            let mut parts = line.split_whitespace();
            let (a, b) = match (parts.next(), parts.next(), parts.next()) {
                (Some(a), Some(b), None) => (a, b),
                _ => {
                    return Err(Error::Parse {
                        line: lineno,
                        msg: format!("expected `i j`, got {line:?}"),
                    })
                }
            };
            let parse = |s: &str| -> Result<usize> {
                let v: usize = s.parse().map_err(|_| Error::Parse {
                    line: lineno,
                    msg: format!("bad node index {s:?}"),
                })?;
                if v == 0 {
                    return Err(Error::Parse {
                        line: lineno,
                        msg: "node indices are 1-based".into(),
                    });
                }
                Ok(v - 1)
            };
            edges.push((parse(a)?, parse(b)?));
        }
        let m = m.ok_or(Error::Parse {
            line: 0,
            msg: "missing node count line".into(),
        })?;
        Self::new(m, edges)
    }
}

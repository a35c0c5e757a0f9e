//! Finite s-regular undirected graphs.
//!
//! A [`Graph`] is immutable once built. Adjacency lists are kept sorted, so
//! two graphs over the same vertex labelling compare equal exactly when they
//! have the same edge set.

use std::collections::{BTreeSet, VecDeque};
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Graph {
    adjacency: Vec<Vec<usize>>,
    degree: usize,
}

/// The standard graphs supported by [`Graph::named`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NamedGraph {
    Petersen,
    Heawood,
    Cube,
}

impl FromStr for NamedGraph {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "petersen" => Ok(NamedGraph::Petersen),
            "heawood" => Ok(NamedGraph::Heawood),
            "cube" => Ok(NamedGraph::Cube),
            other => Err(Error::UnsupportedGraph(other.to_string())),
        }
    }
}

impl fmt::Display for NamedGraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            NamedGraph::Petersen => "petersen",
            NamedGraph::Heawood => "heawood",
            NamedGraph::Cube => "cube",
        };
        f.write_str(name)
    }
}

/// A pair `y`, `z` at distance three whose intermediate sets
/// `δ1(y) ∩ δ2(z) = {u1}` and `δ2(y) ∩ δ1(z) = {u2}` are singletons.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ConditionIIWitness {
    pub y: usize,
    pub z: usize,
    pub u1: usize,
    pub u2: usize,
}

impl Graph {
    /// Builds a graph from an edge list, validating simplicity, regularity
    /// and connectivity. `n` is the vertex count.
    fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidSize("graph has no vertices".into()));
        }
        let mut adjacency = vec![Vec::new(); n];
        for &(u, v) in edges {
            for w in [u, v] {
                if w >= n {
                    return Err(Error::InvalidVertex { vertex: w, n });
                }
            }
            adjacency[u].push(v);
            adjacency[v].push(u);
        }
        for list in &mut adjacency {
            list.sort_unstable();
        }
        let degree = adjacency[0].len();
        for (vertex, list) in adjacency.iter().enumerate() {
            if list.len() != degree {
                return Err(Error::RegularityViolation {
                    vertex,
                    degree: list.len(),
                    expected: degree,
                });
            }
        }
        if degree == 0 {
            return Err(Error::InvalidSize("graph has no edges".into()));
        }
        let graph = Graph { adjacency, degree };
        if !graph.is_connected() {
            return Err(Error::Disconnected);
        }
        Ok(graph)
    }

    /// The cycle `C_n`.
    pub fn cycle(n: usize) -> Result<Self> {
        if n < 3 {
            return Err(Error::InvalidSize(format!("cycle needs n >= 3, got {n}")));
        }
        let edges: Vec<_> = (0..n).map(|i| (i, (i + 1) % n)).collect();
        Self::from_edges(n, &edges)
    }

    /// The periodic lattice with the given side lengths; degree `2 * sides.len()`.
    ///
    /// Vertex ids are mixed-radix with the first coordinate varying fastest.
    pub fn torus(sides: &[usize]) -> Result<Self> {
        if sides.is_empty() {
            return Err(Error::InvalidSize("torus needs at least one dimension".into()));
        }
        if let Some(&bad) = sides.iter().find(|&&l| l < 3) {
            return Err(Error::InvalidSize(format!("torus side length {bad} < 3")));
        }
        let n = sides
            .iter()
            .try_fold(1usize, |acc, &l| acc.checked_mul(l))
            .ok_or_else(|| Error::InvalidSize("torus vertex count overflows".into()))?;
        let mut edges = Vec::with_capacity(n * sides.len());
        let mut stride = 1;
        for &len in sides {
            for v in 0..n {
                let coord = (v / stride) % len;
                let next = v - coord * stride + ((coord + 1) % len) * stride;
                edges.push((v, next));
            }
            stride *= len;
        }
        Self::from_edges(n, &edges)
    }

    pub fn named(name: NamedGraph) -> Self {
        let (n, edges): (usize, Vec<(usize, usize)>) = match name {
            NamedGraph::Petersen => {
                let mut e = Vec::new();
                for i in 0..5 {
                    e.push((i, (i + 1) % 5));
                    e.push((i, i + 5));
                    e.push((i + 5, (i + 2) % 5 + 5));
                }
                (10, e)
            }
            // LCF notation [5, -5]^7
            NamedGraph::Heawood => {
                let mut e: Vec<_> = (0..14).map(|i| (i, (i + 1) % 14)).collect();
                e.extend((0..14).step_by(2).map(|i| (i, (i + 5) % 14)));
                (14, e)
            }
            NamedGraph::Cube => {
                let mut e = Vec::new();
                for v in 0..8usize {
                    for bit in 0..3 {
                        let w = v ^ (1 << bit);
                        if v < w {
                            e.push((v, w));
                        }
                    }
                }
                (8, e)
            }
        };
        Self::from_edges(n, &edges).expect("named graphs are 3-regular and connected")
    }

    /// Parses a whitespace-separated, 0-indexed edge list. Blank lines and
    /// lines starting with `#` are skipped.
    pub fn from_edge_list(text: &str) -> Result<Self> {
        let mut edges = Vec::new();
        let mut seen = BTreeSet::new();
        let mut n = 0;
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let parse_err = |message: String| Error::Parse {
                line: line_no,
                message,
            };
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 2 {
                return Err(parse_err(format!(
                    "expected two vertex ids, found {} fields",
                    fields.len()
                )));
            }
            let mut ids = [0usize; 2];
            for (slot, field) in ids.iter_mut().zip(&fields) {
                *slot = field
                    .parse()
                    .map_err(|_| parse_err(format!("`{field}` is not a vertex id")))?;
            }
            let [u, v] = ids;
            if u == v {
                return Err(parse_err(format!("self-loop at vertex {u}")));
            }
            if !seen.insert((u.min(v), u.max(v))) {
                return Err(parse_err(format!("duplicate edge {u} {v}")));
            }
            n = n.max(u + 1).max(v + 1);
            edges.push((u, v));
        }
        Self::from_edges(n, &edges)
    }

    /// Serializes to the edge-list format accepted by [`Graph::from_edge_list`].
    pub fn to_edge_list(&self) -> String {
        let mut out = String::new();
        for (u, v) in self.edges() {
            out.push_str(&format!("{u} {v}\n"));
        }
        out
    }

    pub fn vertex_count(&self) -> usize {
        self.adjacency.len()
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn neighbors(&self, x: usize) -> &[usize] {
        &self.adjacency[x]
    }

    pub fn are_adjacent(&self, x: usize, y: usize) -> bool {
        self.adjacency[x].binary_search(&y).is_ok()
    }

    /// Edges `(u, v)` with `u < v`, in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.adjacency
            .iter()
            .enumerate()
            .flat_map(|(u, list)| list.iter().filter(move |&&v| u < v).map(move |&v| (u, v)))
    }

    fn check_vertex(&self, x: usize) -> Result<()> {
        if x < self.vertex_count() {
            Ok(())
        } else {
            Err(Error::InvalidVertex {
                vertex: x,
                n: self.vertex_count(),
            })
        }
    }

    /// BFS distances from `x`; unreachable vertices get `usize::MAX`.
    pub fn distances_from(&self, x: usize) -> Vec<usize> {
        let mut dist = vec![usize::MAX; self.vertex_count()];
        let mut queue = VecDeque::new();
        dist[x] = 0;
        queue.push_back(x);
        while let Some(u) = queue.pop_front() {
            for &v in self.neighbors(u) {
                if dist[v] == usize::MAX {
                    dist[v] = dist[u] + 1;
                    queue.push_back(v);
                }
            }
        }
        dist
    }

    fn is_connected(&self) -> bool {
        self.distances_from(0).iter().all(|&d| d != usize::MAX)
    }

    /// Vertices at graph distance exactly `i` from `x`, sorted.
    pub fn distance_shell(&self, x: usize, i: usize) -> Result<Vec<usize>> {
        self.check_vertex(x)?;
        Ok(self
            .distances_from(x)
            .into_iter()
            .enumerate()
            .filter(|&(_, d)| d == i)
            .map(|(v, _)| v)
            .collect())
    }

    pub fn diameter(&self) -> usize {
        (0..self.vertex_count())
            .flat_map(|x| self.distances_from(x))
            .max()
            .unwrap_or(0)
    }

    pub fn is_triangle_free(&self) -> bool {
        self.edges().all(|(u, v)| {
            // sorted-merge intersection of the two neighbor lists
            let (a, b) = (self.neighbors(u), self.neighbors(v));
            let (mut i, mut j) = (0, 0);
            while i < a.len() && j < b.len() {
                match a[i].cmp(&b[j]) {
                    std::cmp::Ordering::Less => i += 1,
                    std::cmp::Ordering::Greater => j += 1,
                    std::cmp::Ordering::Equal => return false,
                }
            }
            true
        })
    }

    /// The lexicographically smallest `(y, z)` witnessing condition (ii), if any.
    pub fn find_condition_ii(&self) -> Option<ConditionIIWitness> {
        let dist: Vec<Vec<usize>> = (0..self.vertex_count())
            .map(|x| self.distances_from(x))
            .collect();
        for y in 0..self.vertex_count() {
            for z in 0..self.vertex_count() {
                if dist[y][z] != 3 {
                    continue;
                }
                let e12: Vec<usize> = self
                    .neighbors(y)
                    .iter()
                    .copied()
                    .filter(|&u| dist[u][z] == 2)
                    .collect();
                let e21: Vec<usize> = self
                    .neighbors(z)
                    .iter()
                    .copied()
                    .filter(|&u| dist[y][u] == 2)
                    .collect();
                if let ([u1], [u2]) = (e12.as_slice(), e21.as_slice()) {
                    return Some(ConditionIIWitness {
                        y,
                        z,
                        u1: *u1,
                        u2: *u2,
                    });
                }
            }
        }
        None
    }
}

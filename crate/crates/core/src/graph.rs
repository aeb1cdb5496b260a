//! Configuration graphs: which party pairs count as a successful EPR outcome.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::state::{check_distinct, default_labels};

/// Undirected simple graph over opaque party labels. Edges are stored as
/// ordered index pairs `(i, j)` with `i < j` into `labels`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ConfigGraph {
    labels: Vec<String>,
    edges: BTreeSet<(usize, usize)>,
}

impl ConfigGraph {
    pub fn new<S: AsRef<str>>(labels: Vec<String>, edges: &[(S, S)]) -> Result<Self> {
        check_distinct(&labels).map_err(|e| Error::InvalidGraph(e.to_string()))?;
        let find = |l: &str| {
            labels
                .iter()
                .position(|x| x == l)
                .ok_or_else(|| Error::InvalidGraph(format!("edge endpoint `{l}` is not a node")))
        };
        let mut set = BTreeSet::new();
        for (a, b) in edges {
            let (i, j) = (find(a.as_ref())?, find(b.as_ref())?);
            if i == j {
                return Err(Error::InvalidGraph(format!(
                    "self-loop on `{}`",
                    a.as_ref()
                )));
            }
            set.insert((i.min(j), i.max(j)));
        }
        Ok(Self { labels, edges: set })
    }

    pub fn from_index_edges(labels: Vec<String>, edges: &[(usize, usize)]) -> Result<Self> {
        check_distinct(&labels).map_err(|e| Error::InvalidGraph(e.to_string()))?;
        let mut set = BTreeSet::new();
        for &(i, j) in edges {
            if i >= labels.len() || j >= labels.len() {
                return Err(Error::InvalidGraph(format!("edge ({i},{j}) out of range")));
            }
            if i == j {
                return Err(Error::InvalidGraph(format!("self-loop on node {i}")));
            }
            set.insert((i.min(j), i.max(j)));
        }
        Ok(Self { labels, edges: set })
    }

    /// Parses edges written as two-character strings, e.g. `["AB", "AC"]`.
    pub fn from_edge_strings(labels: &str, edges: &[&str]) -> Result<Self> {
        let labels: Vec<String> = labels.chars().map(|c| c.to_string()).collect();
        let pairs: Vec<(String, String)> = edges
            .iter()
            .map(|e| {
                let mut cs = e.chars();
                match (cs.next(), cs.next(), cs.next()) {
                    (Some(a), Some(b), None) => Ok((a.to_string(), b.to_string())),
                    _ => Err(Error::InvalidGraph(format!("bad edge string `{e}`"))),
                }
            })
            .collect::<Result<_>>()?;
        Self::new(labels, &pairs)
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges.iter().copied()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn labeled_edges(&self) -> Vec<(String, String)> {
        self.edges
            .iter()
            .map(|&(i, j)| (self.labels[i].clone(), self.labels[j].clone()))
            .collect()
    }

    pub fn index_of(&self, label: &str) -> Result<usize> {
        self.labels
            .iter()
            .position(|l| l == label)
            .ok_or_else(|| Error::InvalidParty(label.to_string()))
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.edges.contains(&(i.min(j), i.max(j)))
    }

    pub fn degree(&self, i: usize) -> usize {
        self.edges
            .iter()
            .filter(|&&(a, b)| a == i || b == i)
            .count()
    }

    pub fn neighbors(&self, i: usize) -> Vec<usize> {
        (0..self.len())
            .filter(|&j| j != i && self.has_edge(i, j))
            .collect()
    }

    pub fn is_isolated(&self, i: usize) -> bool {
        self.degree(i) == 0
    }

    pub fn is_complete(&self) -> bool {
        let n = self.len();
        self.edges.len() == n * (n.saturating_sub(1)) / 2
    }

    /// Least-connected node; ties go to the lowest index.
    pub fn least_connected(&self) -> Option<usize> {
        (0..self.len()).min_by_key(|&i| (self.degree(i), i))
    }

    /// All nodes sharing the minimum degree, in index order.
    pub fn least_connected_all(&self) -> Vec<usize> {
        let Some(min) = (0..self.len()).map(|i| self.degree(i)).min() else {
            return Vec::new();
        };
        (0..self.len()).filter(|&i| self.degree(i) == min).collect()
    }

    /// `𝒢 ∖ S`: drops the listed nodes and their incident edges.
    pub fn remove_nodes<S: AsRef<str>>(&self, remove: &[S]) -> Result<ConfigGraph> {
        let idx = remove
            .iter()
            .map(|l| self.index_of(l.as_ref()))
            .collect::<Result<Vec<_>>>()?;
        Ok(self.remove_indices(&idx))
    }

    pub fn remove_indices(&self, remove: &[usize]) -> ConfigGraph {
        let keep: Vec<usize> = (0..self.len()).filter(|i| !remove.contains(i)).collect();
        self.induced(&keep)
    }

    /// Subgraph induced on `keep` (indices, kept in the given order).
    pub fn induced(&self, keep: &[usize]) -> ConfigGraph {
        let labels = keep.iter().map(|&i| self.labels[i].clone()).collect();
        let mut edges = BTreeSet::new();
        for (a, &i) in keep.iter().enumerate() {
            for (b, &j) in keep.iter().enumerate().skip(a + 1) {
                if self.has_edge(i, j) {
                    edges.insert((a, b));
                }
            }
        }
        ConfigGraph { labels, edges }
    }

    /// Same graph with nodes listed in `order` (which must be a permutation
    /// of the current labels).
    pub fn reordered<S: AsRef<str>>(&self, order: &[S]) -> Result<ConfigGraph> {
        if order.len() != self.len() {
            return Err(Error::InvalidInput(format!(
                "graph has {} nodes, ordering has {}",
                self.len(),
                order.len()
            )));
        }
        let idx = order
            .iter()
            .map(|l| self.index_of(l.as_ref()))
            .collect::<Result<Vec<_>>>()?;
        let g = self.induced(&idx);
        check_distinct(g.labels())?;
        Ok(g)
    }

    pub fn relabeled(&self, labels: Vec<String>) -> Result<ConfigGraph> {
        if labels.len() != self.len() {
            return Err(Error::InvalidGraph("relabel length mismatch".into()));
        }
        check_distinct(&labels)?;
        Ok(ConfigGraph {
            labels,
            edges: self.edges.clone(),
        })
    }

    /// Finds `perm` with `self.has_edge(perm[i], perm[j]) == other.has_edge(i, j)`
    /// for all `i, j`, i.e. `other`'s node `i` plays the role of `self`'s node
    /// `perm[i]`. Brute force; intended for small graphs.
    pub fn isomorphism_to(&self, other: &ConfigGraph) -> Option<Vec<usize>> {
        self.isomorphisms_to(other).into_iter().next()
    }

    /// Every isomorphism in the sense of [`ConfigGraph::isomorphism_to`].
    pub fn isomorphisms_to(&self, other: &ConfigGraph) -> Vec<Vec<usize>> {
        let n = self.len();
        if n != other.len() || self.edge_count() != other.edge_count() {
            return Vec::new();
        }
        let mut degs_a: Vec<usize> = (0..n).map(|i| self.degree(i)).collect();
        let mut degs_b: Vec<usize> = (0..n).map(|i| other.degree(i)).collect();
        degs_a.sort_unstable();
        degs_b.sort_unstable();
        if degs_a != degs_b {
            return Vec::new();
        }
        let mut out = Vec::new();
        let mut perm = Vec::with_capacity(n);
        let mut used = vec![false; n];
        self.extend_iso(other, &mut perm, &mut used, &mut out);
        out
    }

    fn extend_iso(
        &self,
        other: &ConfigGraph,
        perm: &mut Vec<usize>,
        used: &mut [bool],
        out: &mut Vec<Vec<usize>>,
    ) {
        let i = perm.len();
        if i == self.len() {
            out.push(perm.clone());
            return;
        }
        for cand in 0..self.len() {
            if used[cand] || self.degree(cand) != other.degree(i) {
                continue;
            }
            let ok = (0..i).all(|j| self.has_edge(perm[j], cand) == other.has_edge(j, i));
            if ok {
                used[cand] = true;
                perm.push(cand);
                self.extend_iso(other, perm, used, out);
                perm.pop();
                used[cand] = false;
            }
        }
    }

    pub fn is_isomorphic(&self, other: &ConfigGraph) -> bool {
        self.isomorphism_to(other).is_some()
    }
}

/// Preset names understood by [`graph_catalog`].
pub const PRESETS: &[&str] = &[
    "wedge", "triangle", "I", "I'", "I''", "II", "III-a", "III-b", "III-c", "IV", "V", "VI",
    "pairs", "complete",
];

/// Named configuration presets.
///
/// Three-party: `wedge` (AB, AC) and `triangle`. Four-party families, all on
/// labels `A…D`:
///
/// | name    | edges                 |
/// |---------|-----------------------|
/// | `I`     | AB                    |
/// | `I'`    | AB, AC                |
/// | `I''`   | AB, AC, AD            |
/// | `II`    | AB, AC, BC (D alone)  |
/// | `III-a` | AB, CD                |
/// | `III-b` | AB, BC, CD            |
/// | `III-c` | AB, BC, CD, AD        |
/// | `IV`    | AB, AC, AD, BC, BD    |
/// | `V`     | complete              |
/// | `VI`    | AB, AC, AD, BC        |
///
/// `pairs` (even `n`, labels `1…n`) joins `(1,2), (3,4), …`; `complete` on
/// `1…n` joins everything.
pub fn graph_catalog(name: &str, n: Option<usize>) -> Result<ConfigGraph> {
    let fixed = |size: usize, edges: &[&str]| -> Result<ConfigGraph> {
        if let Some(k) = n {
            if k != size {
                return Err(Error::InvalidInput(format!(
                    "preset `{name}` has {size} nodes, requested {k}"
                )));
            }
        }
        ConfigGraph::from_edge_strings(&"ABCD"[..size], edges)
    };
    match name {
        "wedge" => fixed(3, &["AB", "AC"]),
        "triangle" => fixed(3, &["AB", "AC", "BC"]),
        "I" => fixed(4, &["AB"]),
        "I'" | "I-prime" => fixed(4, &["AB", "AC"]),
        "I''" | "I-double-prime" => fixed(4, &["AB", "AC", "AD"]),
        "II" => fixed(4, &["AB", "AC", "BC"]),
        "III" | "III-a" => fixed(4, &["AB", "CD"]),
        "III-b" => fixed(4, &["AB", "BC", "CD"]),
        "III-c" => fixed(4, &["AB", "BC", "CD", "AD"]),
        "IV" => fixed(4, &["AB", "AC", "AD", "BC", "BD"]),
        "V" => fixed(4, &["AB", "AC", "AD", "BC", "BD", "CD"]),
        "VI" => fixed(4, &["AB", "AC", "AD", "BC"]),
        "pairs" => {
            let k = n.ok_or_else(|| Error::InvalidInput("preset `pairs` needs n".into()))?;
            if k < 2 || k % 2 != 0 {
                return Err(Error::InvalidInput(format!(
                    "`pairs` needs an even n >= 2, got {k}"
                )));
            }
            let labels = numeric_labels(k);
            let edges: Vec<(usize, usize)> = (0..k / 2).map(|p| (2 * p, 2 * p + 1)).collect();
            ConfigGraph::from_index_edges(labels, &edges)
        }
        "complete" => {
            let k = n.ok_or_else(|| Error::InvalidInput("preset `complete` needs n".into()))?;
            if k < 2 {
                return Err(Error::InvalidInput(format!(
                    "`complete` needs n >= 2, got {k}"
                )));
            }
            let edges: Vec<(usize, usize)> = (0..k)
                .flat_map(|i| (i + 1..k).map(move |j| (i, j)))
                .collect();
            ConfigGraph::from_index_edges(numeric_labels(k), &edges)
        }
        _ => Err(Error::UnknownPreset(name.to_string())),
    }
}

fn numeric_labels(n: usize) -> Vec<String> {
    (1..=n).map(|i| i.to_string()).collect()
}

/// Graph JSON: explicit `{"labels": [...], "edges": [["A","B"], ...]}` or a
/// preset `{"preset": "wedge", "n": 3}`.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum GraphSpec {
    Explicit {
        #[serde(default)]
        labels: Option<Vec<String>>,
        edges: Vec<(String, String)>,
    },
    Preset {
        preset: String,
        #[serde(default)]
        n: Option<usize>,
    },
}

impl GraphSpec {
    pub fn build(&self) -> Result<ConfigGraph> {
        match self {
            GraphSpec::Preset { preset, n } => graph_catalog(preset, *n),
            GraphSpec::Explicit { labels, edges } => {
                let labels = match labels {
                    Some(l) => l.clone(),
                    None => {
                        let mut seen: Vec<String> = Vec::new();
                        for (a, b) in edges {
                            for l in [a, b] {
                                if !seen.contains(l) {
                                    seen.push(l.clone());
                                }
                            }
                        }
                        seen
                    }
                };
                ConfigGraph::new(labels, edges)
            }
        }
    }
}

impl From<&ConfigGraph> for GraphSpec {
    fn from(g: &ConfigGraph) -> Self {
        GraphSpec::Explicit {
            labels: Some(g.labels.clone()),
            edges: g.labeled_edges(),
        }
    }
}

impl Serialize for ConfigGraph {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        GraphSpec::from(self).serialize(s)
    }
}

impl<'de> Deserialize<'de> for ConfigGraph {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let spec = GraphSpec::deserialize(d)?;
        spec.build().map_err(serde::de::Error::custom)
    }
}

/// Default-labelled graph from index edges; handy in tests.
pub fn graph_from_indices(n: usize, edges: &[(usize, usize)]) -> Result<ConfigGraph> {
    ConfigGraph::from_index_edges(default_labels(n), edges)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn edge_set(g: &ConfigGraph) -> BTreeSet<String> {
        g.labeled_edges()
            .into_iter()
            .map(|(a, b)| format!("{a}{b}"))
            .collect()
    }

    fn set(xs: &[&str]) -> BTreeSet<String> {
        xs.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn remove_from_triangle() {
        let g = graph_catalog("triangle", None).unwrap();
        let h = g.remove_nodes(&["C"]).unwrap();
        assert_eq!(edge_set(&h), set(&["AB"]));
        assert_eq!(h.labels(), &["A".to_string(), "B".to_string()]);
    }

    #[test]
    fn remove_from_vi_gives_triangle() {
        let g = graph_catalog("VI", None).unwrap();
        let h = g.remove_nodes(&["D"]).unwrap();
        assert_eq!(edge_set(&h), set(&["AB", "AC", "BC"]));
        assert!(h.is_complete());
    }

    #[test]
    fn remove_nothing_is_identity() {
        let g = graph_catalog("IV", None).unwrap();
        let empty: [&str; 0] = [];
        assert_eq!(g.remove_nodes(&empty).unwrap(), g);
        assert!(g.remove_nodes(&["Z"]).is_err());
    }

    #[test]
    fn catalog_examples() {
        let w = graph_catalog("wedge", Some(3)).unwrap();
        assert_eq!(edge_set(&w), set(&["AB", "AC"]));
        let p = graph_catalog("pairs", Some(6)).unwrap();
        assert_eq!(edge_set(&p), set(&["12", "34", "56"]));
        let k = graph_catalog("complete", Some(4)).unwrap();
        assert_eq!(k.edge_count(), 6);
        assert!(k.is_complete());
        assert!(matches!(
            graph_catalog("VII", None),
            Err(Error::UnknownPreset(_))
        ));
        assert!(graph_catalog("pairs", Some(5)).is_err());
        assert!(graph_catalog("wedge", Some(4)).is_err());
    }

    #[test]
    fn invariants_enforced() {
        assert!(ConfigGraph::from_edge_strings("AB", &["AA"]).is_err());
        assert!(ConfigGraph::from_edge_strings("AB", &["AC"]).is_err());
    }

    #[test]
    fn degrees_and_least_party() {
        let g = graph_catalog("VI", None).unwrap();
        assert_eq!(
            (0..4).map(|i| g.degree(i)).collect::<Vec<_>>(),
            vec![3, 2, 2, 1]
        );
        assert_eq!(g.least_connected(), Some(3));
        let g = graph_catalog("IV", None).unwrap();
        assert_eq!(g.least_connected_all(), vec![2, 3]);
    }

    #[test]
    fn isomorphism_check() {
        let sq = graph_catalog("III-c", None).unwrap();
        let other = ConfigGraph::from_edge_strings("ABCD", &["AC", "CB", "BD", "DA"]).unwrap();
        let perm = sq.isomorphism_to(&other).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                if i != j {
                    assert_eq!(sq.has_edge(perm[i], perm[j]), other.has_edge(i, j));
                }
            }
        }
        assert!(!sq.is_isomorphic(&graph_catalog("VI", None).unwrap()));
        // the square has 8 automorphisms
        assert_eq!(sq.isomorphisms_to(&sq).len(), 8);
    }

    #[test]
    fn json_forms() {
        let g: ConfigGraph =
            serde_json::from_str(r#"{"labels":["A","B","C"],"edges":[["A","B"],["A","C"]]}"#)
                .unwrap();
        assert_eq!(g, graph_catalog("wedge", None).unwrap());
        let g: ConfigGraph = serde_json::from_str(r#"{"preset":"wedge","n":3}"#).unwrap();
        assert_eq!(g, graph_catalog("wedge", None).unwrap());
        let back: ConfigGraph = serde_json::from_str(&serde_json::to_string(&g).unwrap()).unwrap();
        assert_eq!(back, g);
        assert!(serde_json::from_str::<ConfigGraph>(r#"{"preset":"nope"}"#).is_err());
    }
}

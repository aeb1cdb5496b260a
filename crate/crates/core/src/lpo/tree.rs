//! Executable protocol trees.
//!
//! A tree is a DAG: subtrees for the standard W state on a given subset are
//! built once and shared. Indefinite rounds are [`TreeNode::Loop`] nodes whose
//! body ends in [`TreeNode::Repeat`] when the round has to be redone; a loop
//! runs its body at most `cap` times and sends the remaining mass to
//! [`Terminal::Truncated`]. Limit policies (`α → 1`) run at `α = 1 − ε`.

use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::phase1::{force_zero, phase1_measurement};
use super::solver::{LpoSolver, NodeRule};
use crate::error::{Error, Result};
use crate::evroutine::{
    ev_tree_ordered, isolation_measurement, prune, require_aligned, EvStep, EvTree,
};
use crate::graph::ConfigGraph;
use crate::measurement::{apply_measurement, LocalMeasurement};
use crate::outcome::{OutcomeDistribution, Terminal};
use crate::state::{standard_w, WState};

pub const DEFAULT_EPSILON: f64 = 1e-3;
pub const DEFAULT_LOOP_CAP: usize = 60;

#[derive(Clone, Debug, PartialEq)]
pub enum TreeNode {
    Leaf(Terminal),
    Measure {
        state: WState,
        graph: ConfigGraph,
        measurement: LocalMeasurement,
        branches: Vec<TreeBranch>,
    },
    Loop {
        label: String,
        cap: usize,
        alpha: f64,
        body: Arc<TreeNode>,
    },
    /// Back to the start of the innermost enclosing loop.
    Repeat,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TreeBranch {
    pub outcome: String,
    pub probability: f64,
    pub child: Arc<TreeNode>,
}

/// Finite, executable rendering of the protocol for one input.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(into = "TreeTable", try_from = "TreeTable")]
pub struct ProtocolTree {
    pub epsilon: f64,
    pub loop_cap: usize,
    pub root: Arc<TreeNode>,
}

/// Builds the protocol tree for `(state, graph)`.
pub fn build_protocol_tree(
    state: &WState,
    graph: &ConfigGraph,
    epsilon: f64,
    loop_cap: usize,
) -> Result<ProtocolTree> {
    let mut solver = LpoSolver::new(graph.clone())?;
    build_protocol_tree_with(&mut solver, state, epsilon, loop_cap)
}

/// As [`build_protocol_tree`], reusing a solver bound to the graph.
pub fn build_protocol_tree_with(
    solver: &mut LpoSolver,
    state: &WState,
    epsilon: f64,
    loop_cap: usize,
) -> Result<ProtocolTree> {
    if !(epsilon > 0.0 && epsilon < 0.5) {
        return Err(Error::InvalidInput(format!(
            "epsilon {epsilon} outside (0, 0.5)"
        )));
    }
    if loop_cap == 0 {
        return Err(Error::InvalidInput("loop cap must be at least 1".into()));
    }
    let graph = solver.graph().clone();
    require_aligned(state, &graph)?;
    let mut b = Builder {
        solver,
        epsilon,
        cap: loop_cap,
        stage3: HashMap::new(),
        rounds: HashMap::new(),
    };
    let root = b.vacuum_removal(state, &graph)?;
    Ok(ProtocolTree {
        epsilon,
        loop_cap,
        root,
    })
}

struct Builder<'a> {
    solver: &'a mut LpoSolver,
    epsilon: f64,
    cap: usize,
    stage3: HashMap<u64, Arc<TreeNode>>,
    rounds: HashMap<u64, Arc<TreeNode>>,
}

fn leaf(t: Terminal) -> Arc<TreeNode> {
    Arc::new(TreeNode::Leaf(t))
}

fn w_label(parties: &[String]) -> String {
    Terminal::StandardW {
        parties: parties.to_vec(),
    }
    .to_string()
}

impl Builder<'_> {
    fn vacuum_removal(&mut self, state: &WState, graph: &ConfigGraph) -> Result<Arc<TreeNode>> {
        let Some((s, g)) = prune(state, graph) else {
            return Ok(leaf(Terminal::Failure));
        };
        if s.is_product() {
            return Ok(leaf(Terminal::Failure));
        }
        if !s.has_vacuum() {
            return self.symmetrize(&s, &g, None);
        }
        let m = phase1_measurement(&s)?;
        let mut branches = Vec::new();
        for (i, b) in apply_measurement(&s, &m)?.into_iter().enumerate() {
            let child = match b.state {
                Some(post) => self.vacuum_removal(&force_zero(post, &m)?, &g)?,
                None => leaf(Terminal::Failure),
            };
            branches.push(TreeBranch {
                outcome: ["clear", "drop"][i].to_string(),
                probability: b.probability,
                child,
            });
        }
        Ok(Arc::new(TreeNode::Measure {
            state: s,
            graph: g,
            measurement: m,
            branches,
        }))
    }

    /// e/v subroutine; standard W terminals continue with the subset stage,
    /// and the terminal on `looping` (if any) repeats the enclosing round.
    fn symmetrize(
        &mut self,
        state: &WState,
        graph: &ConfigGraph,
        looping: Option<u64>,
    ) -> Result<Arc<TreeNode>> {
        let tree = ev_tree_ordered(state, graph, self.solver.options().order)?;
        self.convert(&tree, looping)
    }

    fn convert(&mut self, tree: &EvTree, looping: Option<u64>) -> Result<Arc<TreeNode>> {
        match &tree.step {
            EvStep::Leaf(Terminal::StandardW { parties }) => {
                let mask = self.solver.mask_of(parties)?;
                if Some(mask) == looping {
                    Ok(Arc::new(TreeNode::Repeat))
                } else {
                    self.stage3(mask)
                }
            }
            EvStep::Leaf(t) => Ok(leaf(t.clone())),
            EvStep::Split {
                measurement,
                children,
                ..
            } => {
                let mut branches = Vec::with_capacity(children.len());
                for c in children {
                    branches.push(TreeBranch {
                        outcome: c.outcome.to_string(),
                        probability: c.probability,
                        child: self.convert(&c.subtree, looping)?,
                    });
                }
                Ok(Arc::new(TreeNode::Measure {
                    state: tree.node.state.clone(),
                    graph: tree.node.graph.clone(),
                    measurement: measurement.clone(),
                    branches,
                }))
            }
        }
    }

    fn base(&self, g: &ConfigGraph) -> Option<Arc<TreeNode>> {
        if g.len() < 2 || g.edge_count() == 0 {
            return Some(leaf(Terminal::Failure));
        }
        if g.len() == 2 {
            let l = g.labels();
            return Some(leaf(Terminal::epr(&l[0], &l[1])));
        }
        None
    }

    /// Standard W state on `mask`: weighted measurement by the least party.
    fn stage3(&mut self, mask: u64) -> Result<Arc<TreeNode>> {
        if let Some(n) = self.stage3.get(&mask) {
            return Ok(n.clone());
        }
        let g = self.solver.induced(mask);
        let node = match self.base(&g) {
            Some(n) => n,
            None => {
                let report = self.solver.p3_mask(mask)?;
                match report.rule {
                    NodeRule::Symmetric => self.rounds(mask)?,
                    _ => {
                        let alpha = if report.attained_at_limit {
                            1.0 - self.epsilon
                        } else {
                            report.argmax_alpha
                        };
                        let k = report.least_party.clone().expect("least party");
                        self.weighted_loop(mask, &g, &k, alpha)?
                    }
                }
            }
        };
        self.stage3.insert(mask, node.clone());
        Ok(node)
    }

    fn weighted_loop(
        &mut self,
        mask: u64,
        g: &ConfigGraph,
        k: &str,
        alpha: f64,
    ) -> Result<Arc<TreeNode>> {
        let w = standard_w(g.labels().to_vec())?;
        let m = LocalMeasurement::diagonal(k, &[(alpha, 1.0), (1.0 - alpha, 0.0)])?;
        let out = apply_measurement(&w, &m)?;
        let stay = match &out[0].state {
            Some(y) => self.symmetrize(y, g, Some(mask))?,
            None => leaf(Terminal::Failure),
        };
        let remove = match out[1].state {
            Some(_) => self.stage3(mask & !self.solver.mask_of(&[k])?)?,
            None => leaf(Terminal::Failure),
        };
        let body = Arc::new(TreeNode::Measure {
            state: w,
            graph: g.clone(),
            measurement: m,
            branches: vec![
                TreeBranch {
                    outcome: "stay".into(),
                    probability: out[0].probability,
                    child: stay,
                },
                TreeBranch {
                    outcome: "remove".into(),
                    probability: out[1].probability,
                    child: remove,
                },
            ],
        });
        Ok(Arc::new(TreeNode::Loop {
            label: w_label(g.labels()),
            cap: self.cap,
            alpha,
            body,
        }))
    }

    /// Symmetric rounds: every party in turn measures weakly; the first to
    /// get the removal outcome leaves, and the remainder is symmetrized.
    fn rounds(&mut self, mask: u64) -> Result<Arc<TreeNode>> {
        if let Some(n) = self.rounds.get(&mask) {
            return Ok(n.clone());
        }
        let g = self.solver.induced(mask);
        let node = match self.base(&g) {
            Some(n) => n,
            None if g.len() == 3 && !g.is_complete() => {
                // keep the first target pair, the third party detaches
                let (a, b) = g.edges().next().expect("edge");
                let c = (0..3).find(|&i| i != a && i != b).expect("third party");
                let l = g.labels();
                let w = standard_w(l.to_vec())?;
                let m = isolation_measurement(&l[c]);
                let out = apply_measurement(&w, &m)?;
                Arc::new(TreeNode::Measure {
                    state: w,
                    graph: g.clone(),
                    measurement: m,
                    branches: vec![
                        TreeBranch {
                            outcome: "detach".into(),
                            probability: out[0].probability,
                            child: leaf(Terminal::epr(&l[a], &l[b])),
                        },
                        TreeBranch {
                            outcome: "collapse".into(),
                            probability: out[1].probability,
                            child: leaf(Terminal::Failure),
                        },
                    ],
                })
            }
            None => {
                let alpha = 1.0 - self.epsilon;
                let body = self.round_step(&g, 0, alpha)?;
                Arc::new(TreeNode::Loop {
                    label: w_label(g.labels()),
                    cap: self.cap,
                    alpha,
                    body,
                })
            }
        };
        self.rounds.insert(mask, node.clone());
        Ok(node)
    }

    /// Party `j` measures after parties `0..j` all stayed.
    fn round_step(&mut self, g: &ConfigGraph, j: usize, alpha: f64) -> Result<Arc<TreeNode>> {
        let n = g.len();
        if j == n {
            return Ok(Arc::new(TreeNode::Repeat));
        }
        let weights: Vec<f64> = (0..n).map(|i| if i < j { 1.0 } else { alpha }).collect();
        let total: f64 = weights.iter().sum();
        let state = WState::new(
            weights.iter().map(|w| w / total).collect(),
            g.labels().to_vec(),
        )?;
        let label = &g.labels()[j];
        let m = LocalMeasurement::diagonal(label.clone(), &[(alpha, 1.0), (1.0 - alpha, 0.0)])?;
        let out = apply_measurement(&state, &m)?;
        let stay = self.round_step(g, j + 1, alpha)?;
        let remove = match &out[1].state {
            Some(post) => {
                let rest = post.without_indices(&[j]);
                match rest {
                    Some(rest) => {
                        // equalize over everyone left; isolated parties stay
                        let n = rest.len();
                        let all: Vec<(usize, usize)> = (0..n)
                            .flat_map(|a| (a + 1..n).map(move |b| (a, b)))
                            .collect();
                        let full = ConfigGraph::from_index_edges(rest.labels().to_vec(), &all)?;
                        let tree = ev_tree_ordered(&rest, &full, self.solver.options().order)?;
                        self.convert_rounds(&tree)?
                    }
                    None => leaf(Terminal::Failure),
                }
            }
            None => leaf(Terminal::Failure),
        };
        Ok(Arc::new(TreeNode::Measure {
            state,
            graph: g.clone(),
            measurement: m,
            branches: vec![
                TreeBranch {
                    outcome: "stay".into(),
                    probability: out[0].probability,
                    child: stay,
                },
                TreeBranch {
                    outcome: "remove".into(),
                    probability: out[1].probability,
                    child: remove,
                },
            ],
        }))
    }

    /// Like [`Self::convert`], but standard W terminals continue with rounds.
    fn convert_rounds(&mut self, tree: &EvTree) -> Result<Arc<TreeNode>> {
        match &tree.step {
            EvStep::Leaf(Terminal::StandardW { parties }) => {
                let mask = self.solver.mask_of(parties)?;
                self.rounds(mask)
            }
            EvStep::Leaf(t) => Ok(leaf(t.clone())),
            EvStep::Split {
                measurement,
                children,
                ..
            } => {
                let mut branches = Vec::with_capacity(children.len());
                for c in children {
                    branches.push(TreeBranch {
                        outcome: c.outcome.to_string(),
                        probability: c.probability,
                        child: self.convert_rounds(&c.subtree)?,
                    });
                }
                Ok(Arc::new(TreeNode::Measure {
                    state: tree.node.state.clone(),
                    graph: tree.node.graph.clone(),
                    measurement: measurement.clone(),
                    branches,
                }))
            }
        }
    }
}

fn node_key(n: &Arc<TreeNode>) -> usize {
    Arc::as_ptr(n) as usize
}

/// Terminal distribution of a subtree plus the mass that reaches `Repeat`.
type Partial = (OutcomeDistribution, f64);

fn evaluate(node: &Arc<TreeNode>, memo: &mut HashMap<usize, Partial>) -> Partial {
    if let Some(v) = memo.get(&node_key(node)) {
        return v.clone();
    }
    let v = match node.as_ref() {
        TreeNode::Leaf(t) => (OutcomeDistribution::single(t.clone()), 0.0),
        TreeNode::Repeat => (OutcomeDistribution::new(), 1.0),
        TreeNode::Measure { branches, .. } => {
            let mut d = OutcomeDistribution::new();
            let mut r = 0.0;
            for b in branches {
                let (cd, cr) = evaluate(&b.child, memo);
                d.merge_scaled(&cd, b.probability);
                r += b.probability * cr;
            }
            (d, r)
        }
        TreeNode::Loop { cap, body, .. } => {
            let (d, r) = evaluate(body, memo);
            let r = r.clamp(0.0, 1.0);
            let rounds = if r >= 1.0 {
                *cap as f64
            } else {
                (1.0 - r.powi(*cap as i32)) / (1.0 - r)
            };
            let mut out = OutcomeDistribution::new();
            out.merge_scaled(&d, rounds);
            let truncated = r.powi(*cap as i32);
            if truncated > 0.0 {
                out.add(Terminal::Truncated, truncated);
            }
            (out, 0.0)
        }
    };
    memo.insert(node_key(node), v.clone());
    v
}

impl ProtocolTree {
    /// Exact terminal distribution of the finite tree (truncation included).
    pub fn distribution(&self) -> OutcomeDistribution {
        evaluate(&self.root, &mut HashMap::new()).0
    }

    pub fn success_probability(&self) -> f64 {
        self.distribution().success()
    }

    pub fn truncated_mass(&self) -> f64 {
        self.distribution().probability_of(&Terminal::Truncated)
    }

    /// Distinct nodes (shared subtrees counted once).
    pub fn node_count(&self) -> usize {
        TreeTable::from(self.clone()).nodes.len()
    }

    /// Labels of every loop and leaf, for inspection.
    pub fn labels(&self) -> Vec<String> {
        TreeTable::from(self.clone())
            .nodes
            .iter()
            .filter_map(|n| match &n.node {
                NodeKind::Loop { label, .. } => Some(label.clone()),
                NodeKind::Leaf { terminal } => Some(leaf_label(terminal)),
                _ => None,
            })
            .collect()
    }

    /// Largest deviation of branch probabilities from summing to one.
    pub fn max_branch_defect(&self) -> f64 {
        TreeTable::from(self.clone())
            .nodes
            .iter()
            .filter_map(|n| match &n.node {
                NodeKind::Measure { branches, .. } => {
                    Some((branches.iter().map(|b| b.probability).sum::<f64>() - 1.0).abs())
                }
                _ => None,
            })
            .fold(0.0, f64::max)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("tree serializes")
    }

    pub fn to_dot(&self) -> String {
        let table = TreeTable::from(self.clone());
        let mut out = String::from("digraph protocol {\n  node [fontname=\"monospace\"];\n");
        let mut loops: HashMap<usize, usize> = HashMap::new();
        dot_walk(&table, table.root, None, &mut loops, &mut HashSet::new());
        for rec in &table.nodes {
            let (shape, label) = match &rec.node {
                NodeKind::Leaf { terminal } => ("ellipse", leaf_label(terminal)),
                NodeKind::Measure {
                    state, measurement, ..
                } => {
                    let comps: Vec<String> = state
                        .labels()
                        .iter()
                        .zip(state.components())
                        .map(|(l, x)| format!("{l}:{x:.6}"))
                        .collect();
                    (
                        "box",
                        format!("{} measures\\n({})", measurement.party(), comps.join(", ")),
                    )
                }
                NodeKind::Loop {
                    label, cap, alpha, ..
                } => (
                    "doubleoctagon",
                    format!("{label}\\nloop cap={cap} alpha={alpha:.6}"),
                ),
                NodeKind::Repeat => ("plaintext", "repeat".to_string()),
            };
            let _ = writeln!(out, "  n{} [shape={shape}, label=\"{label}\"];", rec.id);
        }
        for rec in &table.nodes {
            match &rec.node {
                NodeKind::Measure { branches, .. } => {
                    for b in branches {
                        let _ = writeln!(
                            out,
                            "  n{} -> n{} [label=\"{} {:.6}\"];",
                            rec.id, b.child, b.outcome, b.probability
                        );
                    }
                }
                NodeKind::Loop { body, .. } => {
                    let _ = writeln!(out, "  n{} -> n{} [label=\"round\"];", rec.id, body);
                }
                NodeKind::Repeat => {
                    if let Some(target) = loops.get(&rec.id) {
                        let _ = writeln!(out, "  n{} -> n{target} [style=dashed];", rec.id);
                    }
                }
                NodeKind::Leaf { .. } => {}
            }
        }
        out.push_str("}\n");
        out
    }
}

fn leaf_label(t: &Terminal) -> String {
    match t {
        Terminal::Epr { pair } => format!("{} = {t}", w_label(&[pair.0.clone(), pair.1.clone()])),
        _ => t.to_string(),
    }
}

fn dot_walk(
    table: &TreeTable,
    id: usize,
    current_loop: Option<usize>,
    loops: &mut HashMap<usize, usize>,
    seen: &mut HashSet<(usize, Option<usize>)>,
) {
    if !seen.insert((id, current_loop)) {
        return;
    }
    match &table.nodes[id].node {
        NodeKind::Repeat => {
            if let Some(l) = current_loop {
                loops.insert(id, l);
            }
        }
        NodeKind::Loop { body, .. } => dot_walk(table, *body, Some(id), loops, seen),
        NodeKind::Measure { branches, .. } => {
            for b in branches {
                dot_walk(table, b.child, current_loop, loops, seen);
            }
        }
        NodeKind::Leaf { .. } => {}
    }
}

/// Flattened node table: the JSON form of a [`ProtocolTree`].
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TreeTable {
    pub epsilon: f64,
    pub loop_cap: usize,
    pub root: usize,
    pub nodes: Vec<NodeRecord>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct NodeRecord {
    pub id: usize,
    pub node: NodeKind,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum NodeKind {
    Leaf {
        terminal: Terminal,
    },
    Measure {
        state: WState,
        graph: ConfigGraph,
        measurement: LocalMeasurement,
        branches: Vec<BranchRecord>,
    },
    Loop {
        label: String,
        cap: usize,
        alpha: f64,
        body: usize,
    },
    Repeat,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BranchRecord {
    pub outcome: String,
    pub probability: f64,
    pub child: usize,
}

impl From<ProtocolTree> for TreeTable {
    fn from(t: ProtocolTree) -> Self {
        let mut ids = HashMap::new();
        let mut nodes = Vec::new();
        let root = flatten(&t.root, &mut ids, &mut nodes);
        nodes.sort_by_key(|n: &NodeRecord| n.id);
        TreeTable {
            epsilon: t.epsilon,
            loop_cap: t.loop_cap,
            root,
            nodes,
        }
    }
}

fn flatten(
    node: &Arc<TreeNode>,
    ids: &mut HashMap<usize, usize>,
    out: &mut Vec<NodeRecord>,
) -> usize {
    if let Some(&id) = ids.get(&node_key(node)) {
        return id;
    }
    let id = ids.len();
    ids.insert(node_key(node), id);
    let kind = match node.as_ref() {
        TreeNode::Leaf(t) => NodeKind::Leaf {
            terminal: t.clone(),
        },
        TreeNode::Repeat => NodeKind::Repeat,
        TreeNode::Loop {
            label,
            cap,
            alpha,
            body,
        } => NodeKind::Loop {
            label: label.clone(),
            cap: *cap,
            alpha: *alpha,
            body: flatten(body, ids, out),
        },
        TreeNode::Measure {
            state,
            graph,
            measurement,
            branches,
        } => NodeKind::Measure {
            state: state.clone(),
            graph: graph.clone(),
            measurement: measurement.clone(),
            branches: branches
                .iter()
                .map(|b| BranchRecord {
                    outcome: b.outcome.clone(),
                    probability: b.probability,
                    child: flatten(&b.child, ids, out),
                })
                .collect(),
        },
    };
    out.push(NodeRecord { id, node: kind });
    id
}

impl TryFrom<TreeTable> for ProtocolTree {
    type Error = Error;

    fn try_from(t: TreeTable) -> Result<Self> {
        let mut by_id: HashMap<usize, &NodeKind> = HashMap::new();
        for rec in &t.nodes {
            if by_id.insert(rec.id, &rec.node).is_some() {
                return Err(Error::InvalidInput(format!("duplicate node id {}", rec.id)));
            }
        }
        let mut built = HashMap::new();
        let root = rebuild(t.root, &by_id, &mut built, &mut HashSet::new())?;
        Ok(ProtocolTree {
            epsilon: t.epsilon,
            loop_cap: t.loop_cap,
            root,
        })
    }
}

fn rebuild(
    id: usize,
    by_id: &HashMap<usize, &NodeKind>,
    built: &mut HashMap<usize, Arc<TreeNode>>,
    active: &mut HashSet<usize>,
) -> Result<Arc<TreeNode>> {
    if let Some(n) = built.get(&id) {
        return Ok(n.clone());
    }
    let kind = by_id
        .get(&id)
        .ok_or_else(|| Error::InvalidInput(format!("missing node id {id}")))?;
    if !active.insert(id) {
        return Err(Error::InvalidInput(format!("cycle through node {id}")));
    }
    let node = match kind {
        NodeKind::Leaf { terminal } => TreeNode::Leaf(terminal.clone()),
        NodeKind::Repeat => TreeNode::Repeat,
        NodeKind::Loop {
            label,
            cap,
            alpha,
            body,
        } => TreeNode::Loop {
            label: label.clone(),
            cap: *cap,
            alpha: *alpha,
            body: rebuild(*body, by_id, built, active)?,
        },
        NodeKind::Measure {
            state,
            graph,
            measurement,
            branches,
        } => {
            let mut out = Vec::with_capacity(branches.len());
            for b in branches {
                out.push(TreeBranch {
                    outcome: b.outcome.clone(),
                    probability: b.probability,
                    child: rebuild(b.child, by_id, built, active)?,
                });
            }
            TreeNode::Measure {
                state: state.clone(),
                graph: graph.clone(),
                measurement: measurement.clone(),
                branches: out,
            }
        }
    };
    active.remove(&id);
    let node = Arc::new(node);
    built.insert(id, node.clone());
    Ok(node)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::graph_catalog;

    fn tree(name: &str, n: Option<usize>, eps: f64, cap: usize) -> ProtocolTree {
        let g = graph_catalog(name, n).unwrap();
        let w = standard_w(g.labels().to_vec()).unwrap();
        build_protocol_tree(&w, &g, eps, cap).unwrap()
    }

    #[test]
    fn two_parties_single_leaf() {
        let g = ConfigGraph::from_edge_strings("AB", &["AB"]).unwrap();
        let w = standard_w(g.labels().to_vec()).unwrap();
        let t = build_protocol_tree(&w, &g, 0.01, 10).unwrap();
        assert!(matches!(
            t.root.as_ref(),
            TreeNode::Leaf(Terminal::Epr { .. })
        ));
        assert_eq!(t.success_probability(), 1.0);
    }

    #[test]
    fn interior_optimum_needs_no_limit() {
        let t = tree("wedge", None, 1e-3, 60);
        assert!((t.success_probability() - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn limit_policies_converge_with_cap() {
        let t = tree("triangle", None, 0.01, 50);
        let short = t.success_probability();
        let t = tree("triangle", None, 0.01, 5000);
        let long = t.success_probability();
        assert!(long > short);
        assert!(long >= 0.95, "{long}");
        assert!(t.truncated_mass() < 1e-12);
        let t = tree("IV", None, 1e-3, 20_000);
        assert!((t.success_probability() - 5.0 / 6.0).abs() < 2e-3);
    }

    #[test]
    fn truncation_bound() {
        for cap in [1, 5, 60] {
            let t = tree("triangle", None, 1e-3, cap);
            let alpha: f64 = 1.0 - 1e-3;
            assert!(t.truncated_mass() <= alpha.powi(2 * cap as i32) + 1e-12);
            t.distribution().validate().unwrap();
        }
    }

    #[test]
    fn vi_tree_shares_subtrees_and_labels() {
        let t = tree("VI", None, 1e-3, 20_000);
        let labels = t.labels();
        for want in ["W_2^{BC}", "W_2^{AD}", "W_3^{ABD}", "W_3^{ACD}"] {
            assert!(
                labels.iter().any(|l| l.starts_with(want)),
                "{want} missing in {labels:?}"
            );
        }
        assert!((t.success_probability() - (3.0 + 3f64.sqrt()) / 6.0).abs() < 2e-3);
        assert!(t.max_branch_defect() < 1e-12);
    }

    #[test]
    fn symmetric_rounds_approach_baseline() {
        let t = tree("pairs", Some(6), 1e-3, 20_000);
        assert!((t.success_probability() - 0.4).abs() < 5e-3);
    }

    #[test]
    fn vacuum_removal_precedes() {
        let g = graph_catalog("triangle", None).unwrap();
        let s = WState::from_components(vec![0.3, 0.3, 0.2]).unwrap();
        let t = build_protocol_tree(&s, &g, 1e-3, 20_000).unwrap();
        let exact = crate::lpo::p_lpo(&s, &g).unwrap();
        assert!((t.success_probability() - exact).abs() < 2e-3);
        t.distribution().validate().unwrap();
    }

    #[test]
    fn json_round_trip() {
        let t = tree("VI", None, 1e-3, 60);
        let json = t.to_json();
        let back: ProtocolTree = serde_json::from_str(&json).unwrap();
        assert_eq!(back.node_count(), t.node_count());
        assert_eq!(back.to_json(), json);
        let dot = t.to_dot();
        assert!(dot.starts_with("digraph protocol"));
        assert!(dot.contains("style=dashed"));
    }

    #[test]
    fn rejects_bad_parameters() {
        let g = graph_catalog("wedge", None).unwrap();
        let w = standard_w(g.labels().to_vec()).unwrap();
        assert!(build_protocol_tree(&w, &g, 0.0, 10).is_err());
        assert!(build_protocol_tree(&w, &g, 0.6, 10).is_err());
        assert!(build_protocol_tree(&w, &g, 0.1, 0).is_err());
    }
}

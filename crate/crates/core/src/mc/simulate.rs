//! Monte Carlo execution of protocol trees.

use std::collections::HashMap;
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::sample::{stream_rng, RNG_ID};
use crate::error::{Error, Result};
use crate::lpo::{ProtocolTree, TreeNode};
use crate::outcome::Terminal;
use crate::par::{map_indices, Execution};

pub const DEFAULT_BATCH: u64 = 1 << 14;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub trials: u64,
    pub seed: u64,
    /// Trials per RNG stream; batch `b` draws from stream `b`.
    pub batch_size: u64,
    #[serde(skip)]
    pub execution: Execution,
}

impl SimConfig {
    pub fn new(trials: u64, seed: u64) -> Self {
        Self {
            trials,
            seed,
            batch_size: DEFAULT_BATCH,
            execution: Execution::default(),
        }
    }
}

/// Observed versus analytic frequency of one terminal (or of success).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TerminalStat {
    pub terminal: String,
    pub count: u64,
    pub empirical: f64,
    pub analytic: f64,
    /// `√(p̂(1−p̂)/n)`.
    pub std_error: f64,
    /// `(p̂ − p)/√(p(1−p)/n)`; absent when the analytic variance is zero and
    /// the frequencies differ.
    pub z_score: Option<f64>,
}

impl TerminalStat {
    fn new(terminal: String, count: u64, trials: u64, analytic: f64) -> Self {
        let n = trials as f64;
        let empirical = count as f64 / n;
        let std_error = (empirical * (1.0 - empirical) / n).sqrt();
        let sd = (analytic * (1.0 - analytic) / n).sqrt();
        let z_score = if sd > 0.0 {
            Some((empirical - analytic) / sd)
        } else if (empirical - analytic).abs() < 1e-12 {
            Some(0.0)
        } else {
            None
        };
        Self {
            terminal,
            count,
            empirical,
            analytic,
            std_error,
            z_score,
        }
    }

    /// Within `k` analytic standard deviations.
    pub fn within(&self, k: f64) -> bool {
        self.z_score.is_some_and(|z| z.abs() <= k)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimResult {
    pub trials: u64,
    pub seed: u64,
    pub batch_size: u64,
    pub rng: String,
    pub terminals: Vec<TerminalStat>,
    pub success: TerminalStat,
}

impl SimResult {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plain data serializes")
    }
}

struct Plan<'a> {
    root: &'a Arc<TreeNode>,
    terminals: Vec<Terminal>,
    leaf_index: HashMap<usize, usize>,
    truncated: usize,
}

fn key(n: &Arc<TreeNode>) -> usize {
    Arc::as_ptr(n) as usize
}

impl<'a> Plan<'a> {
    fn new(tree: &'a ProtocolTree) -> Self {
        let mut terminals: Vec<Terminal> = tree
            .distribution()
            .sorted()
            .into_iter()
            .map(|(t, _)| t)
            .collect();
        if !terminals.contains(&Terminal::Truncated) {
            terminals.push(Terminal::Truncated);
        }
        let truncated = terminals
            .iter()
            .position(|t| *t == Terminal::Truncated)
            .expect("pushed");
        let mut plan = Plan {
            root: &tree.root,
            terminals,
            leaf_index: HashMap::new(),
            truncated,
        };
        let mut seen = HashMap::new();
        plan.index_leaves(&tree.root, &mut seen);
        plan
    }

    fn index_leaves(&mut self, node: &Arc<TreeNode>, seen: &mut HashMap<usize, ()>) {
        if seen.insert(key(node), ()).is_some() {
            return;
        }
        match node.as_ref() {
            TreeNode::Leaf(t) => {
                let idx = match self.terminals.iter().position(|u| u == t) {
                    Some(i) => i,
                    None => {
                        self.terminals.push(t.clone());
                        self.terminals.len() - 1
                    }
                };
                self.leaf_index.insert(key(node), idx);
            }
            TreeNode::Measure { branches, .. } => {
                for b in branches {
                    self.index_leaves(&b.child, seen);
                }
            }
            TreeNode::Loop { body, .. } => self.index_leaves(body, seen),
            TreeNode::Repeat => {}
        }
    }

    fn trial<R: Rng>(&self, rng: &mut R) -> usize {
        let mut node: &'a Arc<TreeNode> = self.root;
        // (cap, body, rounds run) of each enclosing loop
        let mut frames: Vec<(usize, &'a Arc<TreeNode>, usize)> = Vec::new();
        loop {
            match node.as_ref() {
                TreeNode::Leaf(_) => return self.leaf_index[&key(node)],
                TreeNode::Measure { branches, .. } => {
                    let total: f64 = branches.iter().map(|b| b.probability).sum();
                    let mut u = rng.random::<f64>() * total;
                    let mut next = &branches[branches.len() - 1].child;
                    for b in branches {
                        if u < b.probability {
                            next = &b.child;
                            break;
                        }
                        u -= b.probability;
                    }
                    node = next;
                }
                TreeNode::Loop { cap, body, .. } => {
                    frames.push((*cap, body, 1));
                    node = body;
                }
                TreeNode::Repeat => {
                    let Some((cap, body, rounds)) = frames.last_mut() else {
                        return self.truncated;
                    };
                    if *rounds >= *cap {
                        return self.truncated;
                    }
                    *rounds += 1;
                    node = *body;
                }
            }
        }
    }
}

/// Runs `config.trials` independent executions of the tree and compares the
/// terminal frequencies with the tree's exact distribution.
pub fn simulate(tree: &ProtocolTree, config: &SimConfig) -> Result<SimResult> {
    if config.trials == 0 {
        return Err(Error::InvalidInput("trials must be at least 1".into()));
    }
    if config.batch_size == 0 {
        return Err(Error::InvalidInput("batch size must be at least 1".into()));
    }
    let plan = Plan::new(tree);
    let batches = config.trials.div_ceil(config.batch_size);
    let per_batch = map_indices(batches as usize, config.execution, |b| {
        let mut rng = stream_rng(config.seed, b as u64);
        let start = b as u64 * config.batch_size;
        let n = config.batch_size.min(config.trials - start);
        let mut counts = vec![0u64; plan.terminals.len()];
        for _ in 0..n {
            counts[plan.trial(&mut rng)] += 1;
        }
        counts
    });
    let mut counts = vec![0u64; plan.terminals.len()];
    for c in per_batch {
        for (acc, v) in counts.iter_mut().zip(c) {
            *acc += v;
        }
    }
    let dist = tree.distribution();
    let mut terminals = Vec::new();
    let mut success_count = 0;
    for (t, &c) in plan.terminals.iter().zip(&counts) {
        let p = dist.probability_of(t);
        if t.is_success() {
            success_count += c;
        }
        if c == 0 && p == 0.0 {
            continue;
        }
        terminals.push(TerminalStat::new(t.to_string(), c, config.trials, p));
    }
    Ok(SimResult {
        trials: config.trials,
        seed: config.seed,
        batch_size: config.batch_size,
        rng: RNG_ID.to_string(),
        terminals,
        success: TerminalStat::new(
            "success".into(),
            success_count,
            config.trials,
            dist.success(),
        ),
    })
}

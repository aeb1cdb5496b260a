//! Recursive optimization of the symmetric-state stage over node subsets.

use std::collections::HashMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::fl::p_fl;
use super::phase1::phase1_distribution;
use super::poly::{chebyshev_nodes, maximize_unit_interval, ChebSeries};
use crate::error::{Error, Result};
use crate::evroutine::{ev_distribution_ordered, prune, require_aligned, PartyOrder};
use crate::graph::ConfigGraph;
use crate::outcome::Terminal;
use crate::state::WState;

/// Interpolation nodes per party.
pub const NODES_PER_PARTY: usize = 4;
/// Values at `α = 1` below this count as a common root of numerator and
/// denominator.
pub const DEFLATION_TOL: f64 = 1e-10;
pub const GRID_POINTS: usize = 10_000;
pub const GOLDEN_TOL: f64 = 1e-10;
/// Grid values within this of the best are ties; the smallest `α` wins.
pub const TIE_TOL: f64 = 1e-12;
/// An argmax this close to 1 is reported as the limit `α → 1`.
pub const LIMIT_TOL: f64 = 1e-6;

/// How the measuring party is chosen when several have the least degree.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TieRule {
    /// Partial ties go to the lowest index. When every party has the same
    /// degree (and the subgraph is not complete) there is no least party and
    /// the node runs the symmetric Fortescue-Lo rounds instead.
    #[default]
    Symmetric,
    /// Always the lowest-index least-connected party.
    LowestIndex,
}

/// How a recursion node was resolved.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NodeRule {
    /// Fewer than three parties or no target pair.
    #[default]
    Base,
    /// Weighted measurement by the least-connected party.
    LeastParty,
    /// Symmetric rounds on a regular, non-complete subgraph.
    Symmetric,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LpoOptions {
    /// Order used by the e/v subroutine when several parties qualify.
    #[serde(skip)]
    pub order: PartyOrder,
    pub tie_rule: TieRule,
    /// Also optimize with every tied least-connected party and report the
    /// alternatives. The reported value still uses the lowest index.
    pub diagnose_ties: bool,
}

/// One node of the subset recursion.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimizationReport {
    pub value: f64,
    pub argmax_alpha: f64,
    pub attained_at_limit: bool,
    /// Numerator `f(α)`, monomial coefficients lowest order first.
    pub f_polynomial: Vec<f64>,
    /// Denominator `1 − r(α)` with `r` the return probability; equals
    /// `1 − α^m` unless the measuring party is isolated.
    pub denominator: Vec<f64>,
    pub subgraph_key: String,
    pub parties: Vec<String>,
    pub rule: NodeRule,
    /// Party that performs the weighting measurement (`None` for base cases).
    pub least_party: Option<String>,
    /// Number of `(1 − α)` factors cancelled between numerator and
    /// denominator.
    pub deflations: usize,
    /// Values obtained with each tied least-connected party (diagnostic).
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub tie_values: Vec<(String, f64)>,
}

impl OptimizationReport {
    fn base(parties: Vec<String>, value: f64) -> Self {
        Self {
            value,
            argmax_alpha: 0.0,
            attained_at_limit: false,
            f_polynomial: vec![value],
            denominator: vec![1.0],
            subgraph_key: subgraph_key(&parties),
            parties,
            rule: NodeRule::Base,
            least_party: None,
            deflations: 0,
            tie_values: Vec::new(),
        }
    }

    fn symmetric(parties: Vec<String>, value: f64) -> Self {
        Self {
            argmax_alpha: 1.0,
            attained_at_limit: true,
            rule: NodeRule::Symmetric,
            f_polynomial: Vec::new(),
            denominator: Vec::new(),
            ..Self::base(parties, value)
        }
    }

    /// Best value over tied least-connected parties, if diagnosed.
    pub fn best_of_ties(&self) -> Option<f64> {
        self.tie_values
            .iter()
            .map(|(_, v)| *v)
            .fold(None, |m, v| Some(m.map_or(v, |m: f64| m.max(v))))
    }
}

pub fn subgraph_key(parties: &[String]) -> String {
    if parties.iter().all(|p| p.chars().count() == 1) {
        parties.concat()
    } else {
        parties.join(",")
    }
}

/// Numerator and return probability at one `α`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AlphaSample {
    pub f: f64,
    pub r: f64,
}

/// Memoizing solver bound to one configuration graph. Subsets are bitmasks
/// over the graph's node order.
#[derive(Clone, Debug)]
pub struct LpoSolver {
    graph: ConfigGraph,
    options: LpoOptions,
    memo: HashMap<u64, Arc<OptimizationReport>>,
}

impl LpoSolver {
    pub fn new(graph: ConfigGraph) -> Result<Self> {
        Self::with_options(graph, LpoOptions::default())
    }

    pub fn with_options(graph: ConfigGraph, options: LpoOptions) -> Result<Self> {
        if graph.len() > 63 {
            return Err(Error::InvalidGraph("at most 63 parties supported".into()));
        }
        Ok(Self {
            graph,
            options,
            memo: HashMap::new(),
        })
    }

    pub fn graph(&self) -> &ConfigGraph {
        &self.graph
    }

    pub fn options(&self) -> LpoOptions {
        self.options
    }

    pub fn full_mask(&self) -> u64 {
        (1u64 << self.graph.len()) - 1
    }

    pub fn mask_of<S: AsRef<str>>(&self, parties: &[S]) -> Result<u64> {
        let mut mask = 0u64;
        for p in parties {
            mask |= 1 << self.graph.index_of(p.as_ref())?;
        }
        Ok(mask)
    }

    fn indices(mask: u64) -> Vec<usize> {
        (0..64).filter(|i| mask & (1 << i) != 0).collect()
    }

    pub fn induced(&self, mask: u64) -> ConfigGraph {
        self.graph.induced(&Self::indices(mask))
    }

    /// Memoized reports, largest subsets first.
    pub fn reports(&self) -> Vec<Arc<OptimizationReport>> {
        let mut v: Vec<_> = self.memo.iter().map(|(m, r)| (*m, r.clone())).collect();
        v.sort_by_key(|(m, _)| (std::cmp::Reverse(m.count_ones()), *m));
        v.into_iter().map(|(_, r)| r).collect()
    }

    /// Optimal value for the standard W state on the whole graph.
    pub fn p3(&mut self) -> Result<Arc<OptimizationReport>> {
        self.p3_mask(self.full_mask())
    }

    pub fn p3_subset<S: AsRef<str>>(&mut self, parties: &[S]) -> Result<Arc<OptimizationReport>> {
        let mask = self.mask_of(parties)?;
        self.p3_mask(mask)
    }

    pub fn p3_mask(&mut self, mask: u64) -> Result<Arc<OptimizationReport>> {
        if let Some(r) = self.memo.get(&mask) {
            return Ok(r.clone());
        }
        let report = Arc::new(self.solve(mask)?);
        self.memo.insert(mask, report.clone());
        Ok(report)
    }

    fn solve(&mut self, mask: u64) -> Result<OptimizationReport> {
        let g = self.induced(mask);
        let parties = g.labels().to_vec();
        let n = parties.len();
        if n < 2 || g.edge_count() == 0 {
            return Ok(OptimizationReport::base(parties, 0.0));
        }
        if n == 2 {
            return Ok(OptimizationReport::base(parties, 1.0));
        }
        let ties = g.least_connected_all();
        let idx = Self::indices(mask);
        let symmetric =
            self.options.tie_rule == TieRule::Symmetric && ties.len() == n && !g.is_complete();
        if symmetric && !self.options.diagnose_ties {
            return Ok(OptimizationReport::symmetric(parties, p_fl(&g)?));
        }
        let mut report = self.optimize(mask, idx[ties[0]])?;
        if self.options.diagnose_ties && ties.len() > 1 {
            let mut values = vec![(parties[ties[0]].clone(), report.value)];
            for &t in &ties[1..] {
                let alt = self.optimize(mask, idx[t])?;
                values.push((parties[t].clone(), alt.value));
            }
            report.tie_values = values;
        }
        if symmetric {
            let tie_values = std::mem::take(&mut report.tie_values);
            return Ok(OptimizationReport {
                tie_values,
                ..OptimizationReport::symmetric(report.parties, p_fl(&g)?)
            });
        }
        Ok(report)
    }

    /// Samples `f` and the return probability `r` at `α` for subset `mask`
    /// with party `k` (root index) weighting itself.
    pub fn sample(&mut self, mask: u64, k: usize, alpha: f64) -> Result<AlphaSample> {
        let g = self.induced(mask);
        let s = g.len();
        let m = (s - 1) as f64;
        let sub = self.p3_mask(mask & !(1 << k))?.value;
        let p_alpha = (1.0 + alpha * m) / s as f64;
        let kk = g.index_of(&self.graph.labels()[k])?;
        let comps: Vec<f64> = (0..s)
            .map(|i| if i == kk { 1.0 } else { alpha } / (s as f64 * p_alpha))
            .collect();
        let y = WState::new(comps, g.labels().to_vec())?;
        let dist = ev_distribution_ordered(&y, &g, self.options.order)?;
        let mut f = (1.0 - alpha) * (m / s as f64) * sub;
        let mut r = 0.0;
        for (t, lambda) in dist.into_entries() {
            if let Terminal::StandardW { parties } = t {
                let sm = self.mask_of(&parties)?;
                if sm == mask {
                    r += p_alpha * lambda;
                } else {
                    f += p_alpha * lambda * self.p3_mask(sm)?.value;
                }
            }
        }
        Ok(AlphaSample { f, r })
    }

    /// `f(α)` for the lowest-index least-connected party of the subset.
    pub fn f_alpha_mask(&mut self, mask: u64, alpha: f64) -> Result<f64> {
        let g = self.induced(mask);
        if g.len() < 3 {
            return Err(Error::Precondition(
                "f(α) needs at least three parties".into(),
            ));
        }
        if !(0.0..1.0).contains(&alpha) {
            return Err(Error::InvalidInput(format!("alpha {alpha} outside [0,1)")));
        }
        let k = Self::indices(mask)[g.least_connected().expect("non-empty")];
        Ok(self.sample(mask, k, alpha)?.f)
    }

    fn optimize(&mut self, mask: u64, k: usize) -> Result<OptimizationReport> {
        let g = self.induced(mask);
        let parties = g.labels().to_vec();
        let nodes = chebyshev_nodes(NODES_PER_PARTY * parties.len());
        let mut fv = Vec::with_capacity(nodes.len());
        let mut dv = Vec::with_capacity(nodes.len());
        for &a in &nodes {
            let s = self.sample(mask, k, a)?;
            fv.push(s.f);
            dv.push(1.0 - s.r);
        }
        let f_full = ChebSeries::interpolate(&fv);
        let d_full = ChebSeries::interpolate(&dv);
        let (mut fs, mut ds) = (f_full.clone(), d_full.clone());
        let mut deflations = 0;
        while fs.eval(1.0).abs() < DEFLATION_TOL
            && ds.eval(1.0).abs() < DEFLATION_TOL
            && deflations < parties.len()
        {
            for (j, &a) in nodes.iter().enumerate() {
                fv[j] /= 1.0 - a;
                dv[j] /= 1.0 - a;
            }
            fs = ChebSeries::interpolate(&fv);
            ds = ChebSeries::interpolate(&dv);
            deflations += 1;
        }
        let g_fn = |a: f64| {
            let d = ds.eval(a);
            if d <= 0.0 {
                0.0
            } else {
                fs.eval(a) / d
            }
        };
        let best = maximize_unit_interval(g_fn, GRID_POINTS, GOLDEN_TOL, TIE_TOL);
        let (argmax, value, limit) = if best.argmax >= 1.0 - LIMIT_TOL {
            (1.0, g_fn(1.0), true)
        } else {
            (best.argmax, best.value, false)
        };
        Ok(OptimizationReport {
            value: value.clamp(0.0, 1.0),
            argmax_alpha: argmax,
            attained_at_limit: limit,
            f_polynomial: f_full.trimmed(1e-12).to_monomial(),
            denominator: d_full.trimmed(1e-12).to_monomial(),
            subgraph_key: subgraph_key(&parties),
            parties,
            rule: NodeRule::LeastParty,
            least_party: Some(self.graph.labels()[k].clone()),
            deflations,
            tie_values: Vec::new(),
        })
    }

    /// Total success probability for a (possibly non-symmetric) state whose
    /// labels match the solver's graph.
    pub fn p_lpo(&mut self, state: &WState) -> Result<f64> {
        require_aligned(state, &self.graph)?;
        if state.has_vacuum() {
            let mut total = 0.0;
            for (t, p) in phase1_distribution(state, &self.graph)?.into_entries() {
                if let Terminal::Residual { state, .. } = t {
                    total += p * self.p_lpo_vacuum_free(&state)?;
                }
            }
            return Ok(total);
        }
        self.p_lpo_vacuum_free(state)
    }

    /// Symmetrization followed by the subset recursion. Parties of `state`
    /// may be any subset of the graph's nodes.
    fn p_lpo_vacuum_free(&mut self, state: &WState) -> Result<f64> {
        let mask = self.mask_of(state.labels())?;
        let g = self.induced(mask);
        let Some((s, g)) = prune(state, &g) else {
            return Ok(0.0);
        };
        let mut total = 0.0;
        for (t, lambda) in ev_distribution_ordered(&s, &g, self.options.order)?.into_entries() {
            if let Terminal::StandardW { parties } = t {
                total += lambda * self.p3_mask(self.mask_of(&parties)?)?.value;
            }
        }
        Ok(total)
    }
}

/// Optimal value for the standard W state on all nodes of `graph`.
pub fn p3(graph: &ConfigGraph) -> Result<OptimizationReport> {
    Ok((*LpoSolver::new(graph.clone())?.p3()?).clone())
}

/// `f(α)` for the standard W state on all nodes of `graph`.
pub fn f_alpha(graph: &ConfigGraph, alpha: f64) -> Result<f64> {
    let mut s = LpoSolver::new(graph.clone())?;
    let mask = s.full_mask();
    s.f_alpha_mask(mask, alpha)
}

/// Total success probability of the protocol on `(state, graph)`.
pub fn p_lpo(state: &WState, graph: &ConfigGraph) -> Result<f64> {
    LpoSolver::new(graph.clone())?.p_lpo(state)
}

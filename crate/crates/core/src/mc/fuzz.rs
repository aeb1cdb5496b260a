//! Randomized monotonicity checks under weak measurements.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::sample::{random_measurement, random_state, stream_rng, RNG_ID};
use crate::bounds::{gamma, tau};
use crate::error::{Error, Result};
use crate::graph::{graph_catalog, ConfigGraph};
use crate::measurement::{apply_measurement, LocalMeasurement};
use crate::par::{map_indices, Execution};
use crate::state::WState;

/// Functions that must not increase on average under LOCC.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MonotoneId {
    /// τ on Configurations III.
    Tau,
    /// Γ on Configuration IV.
    Gamma,
    /// Every `x_i`, `i ≥ 1`.
    KtI,
    /// `−x₀`.
    Kt0,
}

impl MonotoneId {
    pub const ALL: [MonotoneId; 4] = [
        MonotoneId::KtI,
        MonotoneId::Kt0,
        MonotoneId::Tau,
        MonotoneId::Gamma,
    ];

    pub fn name(self) -> &'static str {
        match self {
            MonotoneId::Tau => "tau",
            MonotoneId::Gamma => "gamma",
            MonotoneId::KtI => "kt_i",
            MonotoneId::Kt0 => "kt_0",
        }
    }

    /// Graphs the fuzz cycles through, by state index.
    pub fn graphs(self) -> Vec<ConfigGraph> {
        let named = |names: &[&str]| {
            names
                .iter()
                .map(|n| graph_catalog(n, None).expect("built-in preset"))
                .collect()
        };
        match self {
            MonotoneId::Tau => named(&["III-a", "III-b", "III-c"]),
            MonotoneId::Gamma => named(&["IV"]),
            MonotoneId::KtI | MonotoneId::Kt0 => (2..=6)
                .map(|n| graph_catalog("complete", Some(n)).expect("built-in preset"))
                .collect(),
        }
    }

    /// Values that must not increase on average.
    pub fn evaluate(self, state: &WState, graph: &ConfigGraph) -> Result<Vec<f64>> {
        Ok(match self {
            MonotoneId::Tau => vec![tau(state, graph)?.value],
            MonotoneId::Gamma => vec![gamma(state, graph)?.value],
            MonotoneId::KtI => state.components().to_vec(),
            MonotoneId::Kt0 => vec![-state.x0()],
        })
    }
}

impl fmt::Display for MonotoneId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MonotoneId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        MonotoneId::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| {
                Error::InvalidInput(format!("unknown monotone `{s}` (tau, gamma, kt_i, kt_0)"))
            })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FuzzConfig {
    pub n_states: usize,
    pub n_measurements: usize,
    /// Half-width of the box around `(½, ½)` for `(a₁, c₁)`, also bounding
    /// `|b₁|`. At most 0.1 is the weak regime; ½ spans every measurement.
    pub weak_radius: f64,
    pub seed: u64,
    /// Restrict sampled states to `x₀ = 0`.
    pub vacuum_free: bool,
    /// Only diagonal (`b = 0`) measurements.
    pub diagonal: bool,
    #[serde(skip)]
    pub execution: Execution,
}

impl Default for FuzzConfig {
    fn default() -> Self {
        Self {
            n_states: 10_000,
            n_measurements: 10,
            weak_radius: 0.05,
            seed: 0,
            vacuum_free: false,
            diagonal: false,
            execution: Execution::default(),
        }
    }
}

/// The state and measurement behind the largest violation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FuzzWitness {
    pub state: WState,
    pub graph: Vec<(String, String)>,
    pub measurement: LocalMeasurement,
    pub violation: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FuzzReport {
    pub function: String,
    pub config: FuzzConfig,
    pub rng: String,
    pub samples: usize,
    /// Largest average increase observed (negative when every sample
    /// strictly decreased).
    pub max_violation: f64,
    pub worst: Option<FuzzWitness>,
}

impl FuzzReport {
    pub fn passes(&self, tol: f64) -> bool {
        self.max_violation <= tol
    }
}

/// Fuzzes one of the built-in monotones.
pub fn monotone_fuzz(id: MonotoneId, config: &FuzzConfig) -> Result<FuzzReport> {
    fuzz_with(id.name(), &id.graphs(), config, |s, g| id.evaluate(s, g))
}

/// Fuzzes an arbitrary vector of would-be monotones: for each sampled state
/// and measurement, the largest coordinate of `Σ_λ p_λ f(post_λ) − f(pre)`.
/// State `i` uses RNG stream `i` and graph `graphs[i % len]`.
pub fn fuzz_with<F>(
    name: &str,
    graphs: &[ConfigGraph],
    config: &FuzzConfig,
    f: F,
) -> Result<FuzzReport>
where
    F: Fn(&WState, &ConfigGraph) -> Result<Vec<f64>> + Sync + Send,
{
    if graphs.is_empty() {
        return Err(Error::InvalidInput("fuzz needs at least one graph".into()));
    }
    if !(config.weak_radius > 0.0 && config.weak_radius <= 0.5) {
        return Err(Error::InvalidInput(format!(
            "weak radius {} outside (0, 1/2]",
            config.weak_radius
        )));
    }
    let per_state = map_indices(config.n_states, config.execution, |i| {
        fuzz_state(i, &graphs[i % graphs.len()], config, &f)
    });
    let mut worst: Option<FuzzWitness> = None;
    for r in per_state {
        if let Some(w) = r? {
            if worst.as_ref().is_none_or(|b| w.violation > b.violation) {
                worst = Some(w);
            }
        }
    }
    Ok(FuzzReport {
        function: name.to_string(),
        config: *config,
        rng: RNG_ID.to_string(),
        samples: config.n_states * config.n_measurements,
        max_violation: worst.as_ref().map_or(f64::NEG_INFINITY, |w| w.violation),
        worst,
    })
}

fn fuzz_state<F>(
    i: usize,
    graph: &ConfigGraph,
    config: &FuzzConfig,
    f: &F,
) -> Result<Option<FuzzWitness>>
where
    F: Fn(&WState, &ConfigGraph) -> Result<Vec<f64>>,
{
    let mut rng = stream_rng(config.seed, i as u64);
    let labels = graph.labels();
    let state = random_state(&mut rng, labels, config.vacuum_free)?;
    let before = f(&state, graph)?;
    let mut worst: Option<FuzzWitness> = None;
    for _ in 0..config.n_measurements {
        let party = &labels[rng.random_range(0..labels.len())];
        let m = random_measurement(&mut rng, party, config.weak_radius, config.diagonal);
        let mut avg = vec![0.0; before.len()];
        for b in apply_measurement(&state, &m)? {
            let Some(post) = &b.state else { continue };
            for (acc, v) in avg.iter_mut().zip(f(post, graph)?) {
                *acc += b.probability * v;
            }
        }
        let violation = avg
            .iter()
            .zip(&before)
            .map(|(a, b)| a - b)
            .fold(f64::NEG_INFINITY, f64::max);
        if worst.as_ref().is_none_or(|w| violation > w.violation) {
            worst = Some(FuzzWitness {
                state: state.clone(),
                graph: graph.labeled_edges(),
                measurement: m,
                violation,
            });
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(seed: u64) -> FuzzConfig {
        FuzzConfig {
            n_states: 300,
            n_measurements: 5,
            seed,
            ..FuzzConfig::default()
        }
    }

    #[test]
    fn kt_and_monotones_hold() {
        for id in MonotoneId::ALL {
            let r = monotone_fuzz(id, &small(11)).unwrap();
            assert!(r.passes(1e-10), "{id}: {}", r.max_violation);
            assert_eq!(r.samples, 1500);
        }
    }

    #[test]
    fn sign_flip_is_caught() {
        let r = fuzz_with("neg-tau", &MonotoneId::Tau.graphs(), &small(3), |s, g| {
            Ok(vec![-tau(s, g)?.value])
        })
        .unwrap();
        assert!(r.max_violation > 1e-6);
        assert!(r.worst.is_some());
    }

    #[test]
    fn deterministic_across_execution_modes() {
        let mut a = small(5);
        a.execution = Execution::Sequential;
        let mut b = small(5);
        b.execution = Execution::Parallel;
        let ra = monotone_fuzz(MonotoneId::Gamma, &a).unwrap();
        let rb = monotone_fuzz(MonotoneId::Gamma, &b).unwrap();
        assert_eq!(ra.max_violation, rb.max_violation);
        assert_eq!(ra.worst, rb.worst);
    }

    #[test]
    fn parse_ids() {
        assert_eq!("kt_0".parse::<MonotoneId>().unwrap(), MonotoneId::Kt0);
        assert!("nope".parse::<MonotoneId>().is_err());
    }
}

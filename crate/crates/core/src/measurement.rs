//! Local binary (or k-ary) measurements in upper-triangular Kraus form and
//! their action on component vectors.
//!
//! Outcome `λ` on party `k` applies `[[√a_λ, b_λ], [0, √c_λ]]`. On the state
//! `√x₀|0…0⟩ + Σ √xⱼ|eⱼ⟩` this maps
//!
//! ```text
//! xⱼ → a_λ·xⱼ / p_λ   (j ≠ k),    x_k → c_λ·x_k / p_λ,
//! √x₀ → (√(a_λ x₀) + b_λ √x_k) / √p_λ
//! ```

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::state::WState;

/// Completeness tolerance for the three operator-sum identities.
pub const COMPLETENESS_TOL: f64 = 1e-12;
/// Outcomes rarer than this are reported without a post-measurement state.
pub const NULL_OUTCOME_PROB: f64 = 1e-15;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KrausOutcome {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl KrausOutcome {
    pub fn new(a: f64, b: f64, c: f64) -> Self {
        Self { a, b, c }
    }

    pub fn diagonal(a: f64, c: f64) -> Self {
        Self { a, b: 0.0, c }
    }

    /// Operator entries `[[m00, m01], [m10, m11]]`.
    pub fn matrix(&self) -> [[f64; 2]; 2] {
        [[self.a.sqrt(), self.b], [0.0, self.c.sqrt()]]
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LocalMeasurement {
    party: String,
    outcomes: Vec<KrausOutcome>,
}

impl LocalMeasurement {
    /// Validates `Σa = 1`, `Σ√a·b = 0`, `Σ(b² + c) = 1`.
    pub fn new(party: impl Into<String>, outcomes: Vec<KrausOutcome>) -> Result<Self> {
        let party = party.into();
        if outcomes.is_empty() {
            return Err(Error::InvalidMeasurement("no outcomes".into()));
        }
        for o in &outcomes {
            if !(o.a.is_finite() && o.b.is_finite() && o.c.is_finite()) {
                return Err(Error::InvalidMeasurement(
                    "non-finite Kraus parameter".into(),
                ));
            }
            if o.a < 0.0 || o.c < 0.0 {
                return Err(Error::InvalidMeasurement(format!(
                    "a and c must be non-negative (a={}, c={})",
                    o.a, o.c
                )));
            }
        }
        let sum_a: f64 = outcomes.iter().map(|o| o.a).sum();
        let sum_ab: f64 = outcomes.iter().map(|o| o.a.sqrt() * o.b).sum();
        let sum_bc: f64 = outcomes.iter().map(|o| o.b * o.b + o.c).sum();
        let bad = [
            ("sum of a", sum_a - 1.0),
            ("sum of sqrt(a)*b", sum_ab),
            ("sum of b^2 + c", sum_bc - 1.0),
        ]
        .into_iter()
        .find(|(_, dev)| dev.abs() > COMPLETENESS_TOL);
        if let Some((what, dev)) = bad {
            return Err(Error::InvalidMeasurement(format!("{what} off by {dev:e}")));
        }
        Ok(Self { party, outcomes })
    }

    /// Diagonal measurement from `(a, c)` pairs.
    pub fn diagonal(party: impl Into<String>, pairs: &[(f64, f64)]) -> Result<Self> {
        Self::new(
            party,
            pairs
                .iter()
                .map(|&(a, c)| KrausOutcome::diagonal(a, c))
                .collect(),
        )
    }

    /// Two outcomes proportional to the identity: `{(½,0,½), (½,0,½)}`.
    pub fn trivial_split(party: impl Into<String>) -> Self {
        Self::diagonal(party, &[(0.5, 0.5), (0.5, 0.5)]).expect("complete")
    }

    pub fn party(&self) -> &str {
        &self.party
    }

    pub fn outcomes(&self) -> &[KrausOutcome] {
        &self.outcomes
    }

    pub fn is_diagonal(&self) -> bool {
        self.outcomes.iter().all(|o| o.b == 0.0)
    }
}

/// One outcome of a measurement: its probability and the normalized
/// post-measurement state (absent for outcomes below [`NULL_OUTCOME_PROB`]).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Branch {
    pub probability: f64,
    pub state: Option<WState>,
}

/// Component update rule for a local measurement.
pub fn apply_measurement(state: &WState, m: &LocalMeasurement) -> Result<Vec<Branch>> {
    let k = state.index_of(m.party())?;
    let x0 = state.x0();
    let xk = state.component(k);
    let rest: f64 = state.components().iter().sum::<f64>() - xk;
    let mut out = Vec::with_capacity(m.outcomes().len());
    for o in m.outcomes() {
        let zero_amp = (x0 * o.a).sqrt() + o.b * xk.sqrt();
        let p = o.a * rest + o.c * xk + zero_amp * zero_amp;
        if p < NULL_OUTCOME_PROB {
            out.push(Branch {
                probability: p.max(0.0),
                state: None,
            });
            continue;
        }
        let comps: Vec<f64> = state
            .components()
            .iter()
            .enumerate()
            .map(|(j, &x)| if j == k { o.c * x / p } else { o.a * x / p })
            .collect();
        let post = WState::new(comps, state.labels().to_vec())?;
        out.push(Branch {
            probability: p,
            state: Some(post),
        });
    }
    Ok(out)
}

/// Average post-measurement value minus pre-measurement value for
/// `(x₀, x₁, …, x_N)`.
///
/// Outcomes without a state carry (numerically) zero weight and are skipped.
pub fn kt_averages(pre: &WState, outcomes: &[Branch]) -> Result<Vec<f64>> {
    let n = pre.len();
    let total: f64 = outcomes.iter().map(|b| b.probability).sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidInput(format!(
            "outcome probabilities sum to {total}"
        )));
    }
    let mut avg = vec![0.0; n + 1];
    for b in outcomes {
        let Some(s) = &b.state else { continue };
        if s.labels() != pre.labels() {
            return Err(Error::InvalidInput(
                "post-state party set differs from pre-state".into(),
            ));
        }
        avg[0] += b.probability * s.x0();
        for (i, &x) in s.components().iter().enumerate() {
            avg[i + 1] += b.probability * x;
        }
    }
    avg[0] -= pre.x0();
    for i in 0..n {
        avg[i + 1] -= pre.component(i);
    }
    Ok(avg)
}

/// Worst K-T violation in a set of averages: the largest of
/// `-Δx₀` and `Δxᵢ (i ≥ 1)`.
pub fn kt_violation(deltas: &[f64]) -> f64 {
    let mut worst = -deltas[0];
    for &d in &deltas[1..] {
        worst = worst.max(d);
    }
    worst
}

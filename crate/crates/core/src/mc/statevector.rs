//! Amplitude-level oracle: the full `2^N` vector with party `i` on bit `i`.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::measurement::{LocalMeasurement, NULL_OUTCOME_PROB};
use crate::state::WState;

pub const MAX_PARTIES: usize = 12;
/// Largest amplitude tolerated outside Hamming weight ≤ 1.
const SUPPORT_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    parties: usize,
    amps: Vec<Complex64>,
}

impl StateVector {
    /// `√x₀|0…0⟩ + Σ √x_i |e_i⟩`.
    pub fn from_wstate(state: &WState) -> Result<Self> {
        let n = state.len();
        if n > MAX_PARTIES {
            return Err(Error::InvalidInput(format!(
                "state-vector oracle supports at most {MAX_PARTIES} parties, got {n}"
            )));
        }
        let mut amps = vec![Complex64::new(0.0, 0.0); 1 << n];
        amps[0] = Complex64::new(state.x0().sqrt(), 0.0);
        for i in 0..n {
            amps[1 << i] = Complex64::new(state.component(i).sqrt(), 0.0);
        }
        Ok(Self { parties: n, amps })
    }

    pub fn parties(&self) -> usize {
        self.parties
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    /// Applies a 2×2 operator to qubit `party` (unnormalized).
    pub fn apply_local(&self, party: usize, op: [[Complex64; 2]; 2]) -> Self {
        let bit = 1usize << party;
        let mut out = vec![Complex64::new(0.0, 0.0); self.amps.len()];
        for (idx, &amp) in self.amps.iter().enumerate() {
            if amp == Complex64::new(0.0, 0.0) {
                continue;
            }
            let lo = idx & !bit;
            let hi = idx | bit;
            let col = usize::from(idx & bit != 0);
            out[lo] += op[0][col] * amp;
            out[hi] += op[1][col] * amp;
        }
        Self {
            parties: self.parties,
            amps: out,
        }
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            parties: self.parties,
            amps: self.amps.iter().map(|a| a * s).collect(),
        }
    }

    /// Component form of a normalized vector; fails when weight sits outside
    /// Hamming weight ≤ 1.
    pub fn to_wstate(&self, labels: Vec<String>) -> Result<WState> {
        for (idx, a) in self.amps.iter().enumerate() {
            if idx.count_ones() > 1 && a.norm() > SUPPORT_TOL {
                return Err(Error::Consistency(format!(
                    "amplitude {} on basis state {idx:#b} outside the W class",
                    a.norm()
                )));
            }
        }
        let comps = (0..self.parties)
            .map(|i| self.amps[1 << i].norm_sqr())
            .collect();
        WState::new(comps, labels)
    }
}

/// Applies each Kraus operator of `m` to the amplitude vector: outcome
/// probabilities with post-measurement states in component form. Outcomes
/// below the null threshold carry no state, as in the component rule.
pub fn statevector_oracle(
    state: &WState,
    m: &LocalMeasurement,
) -> Result<Vec<(f64, Option<WState>)>> {
    let k = state.index_of(m.party())?;
    let v = StateVector::from_wstate(state)?;
    let mut out = Vec::with_capacity(m.outcomes().len());
    for o in m.outcomes() {
        let mat = o.matrix();
        let op = mat.map(|row| row.map(|x| Complex64::new(x, 0.0)));
        let post = v.apply_local(k, op);
        let p = post.norm_sqr();
        if p < NULL_OUTCOME_PROB {
            out.push((p, None));
            continue;
        }
        let normalized = post.scaled(1.0 / p.sqrt());
        out.push((p, Some(normalized.to_wstate(state.labels().to_vec())?)));
    }
    Ok(out)
}

//! W-class states in component form.
//!
//! A W-class state `√x₀|0…0⟩ + √x₁|10…0⟩ + … + √x_N|0…01⟩` is stored as the
//! vector `(x₁,…,x_N)`; the vacuum weight `x₀ = 1 − Σ xᵢ` is derived.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Components below this are snapped to an exact zero (party disentangled).
pub const ZERO_COMPONENT: f64 = 1e-14;
/// Slack allowed on `Σ xᵢ ≤ 1` and on `x₀ ≥ 0`.
pub const SUM_SLACK: f64 = 1e-12;
/// Relative tolerance used when deciding whether a component is maximal.
pub const MAX_REL_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "WStateJson", into = "WStateJson")]
pub struct WState {
    components: Vec<f64>,
    labels: Vec<String>,
}

#[derive(Serialize, Deserialize)]
struct WStateJson {
    components: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    labels: Option<Vec<String>>,
}

impl TryFrom<WStateJson> for WState {
    type Error = Error;

    fn try_from(raw: WStateJson) -> Result<Self> {
        match raw.labels {
            Some(labels) => WState::new(raw.components, labels),
            None => {
                let labels = default_labels(raw.components.len());
                WState::new(raw.components, labels)
            }
        }
    }
}

impl From<WState> for WStateJson {
    fn from(s: WState) -> Self {
        WStateJson {
            components: s.components,
            labels: Some(s.labels),
        }
    }
}

/// `A, B, C, …` for up to 26 parties, `1, 2, …` beyond that.
pub fn default_labels(n: usize) -> Vec<String> {
    if n <= 26 {
        (0..n)
            .map(|i| ((b'A' + i as u8) as char).to_string())
            .collect()
    } else {
        (1..=n).map(|i| i.to_string()).collect()
    }
}

impl WState {
    pub fn new(components: Vec<f64>, labels: Vec<String>) -> Result<Self> {
        if components.len() < 2 {
            return Err(Error::InvalidState(format!(
                "need at least 2 parties, got {}",
                components.len()
            )));
        }
        if components.len() != labels.len() {
            return Err(Error::InvalidState(format!(
                "{} components but {} labels",
                components.len(),
                labels.len()
            )));
        }
        check_distinct(&labels)?;
        let mut comps = Vec::with_capacity(components.len());
        for (x, l) in components.into_iter().zip(&labels) {
            if !x.is_finite() {
                return Err(Error::InvalidState(format!(
                    "component of {l} is not finite"
                )));
            }
            if x < -SUM_SLACK {
                return Err(Error::InvalidState(format!(
                    "component of {l} is negative ({x})"
                )));
            }
            comps.push(if x < ZERO_COMPONENT { 0.0 } else { x });
        }
        let sum: f64 = comps.iter().sum();
        if sum > 1.0 + SUM_SLACK {
            return Err(Error::InvalidState(format!("components sum to {sum} > 1")));
        }
        Ok(Self {
            components: comps,
            labels,
        })
    }

    /// Convenience constructor with default labels.
    pub fn from_components(components: Vec<f64>) -> Result<Self> {
        let labels = default_labels(components.len());
        Self::new(components, labels)
    }

    pub fn components(&self) -> &[f64] {
        &self.components
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    pub fn component(&self, i: usize) -> f64 {
        self.components[i]
    }

    /// The vacuum weight, clamped at zero inside the slack.
    pub fn x0(&self) -> f64 {
        let x0 = 1.0 - self.components.iter().sum::<f64>();
        if x0 < SUM_SLACK {
            0.0
        } else {
            x0
        }
    }

    pub fn has_vacuum(&self) -> bool {
        self.x0() > 0.0
    }

    pub fn index_of(&self, label: &str) -> Result<usize> {
        self.labels
            .iter()
            .position(|l| l == label)
            .ok_or_else(|| Error::InvalidParty(label.to_string()))
    }

    pub fn max_value(&self) -> f64 {
        self.components.iter().copied().fold(0.0, f64::max)
    }

    /// Index of the maximal component; lowest index wins ties.
    pub fn max_index(&self) -> usize {
        let m = self.max_value();
        self.components
            .iter()
            .position(|&x| is_close_rel(x, m))
            .unwrap_or(0)
    }

    pub fn is_maximal(&self, i: usize) -> bool {
        is_close_rel(self.components[i], self.max_value())
    }

    pub fn nonzero_count(&self) -> usize {
        self.components.iter().filter(|&&x| x > 0.0).count()
    }

    /// At most one party carries weight: no entanglement left.
    pub fn is_product(&self) -> bool {
        self.nonzero_count() <= 1
    }

    /// All components equal and `x₀ = 0`.
    pub fn is_standard_w(&self) -> bool {
        self.x0() == 0.0 && (0..self.len()).all(|i| self.is_maximal(i))
    }

    /// Drops the listed parties, keeping the remaining weights untouched.
    ///
    /// Only meaningful when the dropped parties carry zero weight; returns
    /// `None` when fewer than two parties would remain.
    pub fn without_indices(&self, drop: &[usize]) -> Option<WState> {
        let (components, labels): (Vec<f64>, Vec<String>) = self
            .components
            .iter()
            .zip(&self.labels)
            .enumerate()
            .filter(|(i, _)| !drop.contains(i))
            .map(|(_, (x, l))| (*x, l.clone()))
            .unzip();
        if components.len() < 2 {
            return None;
        }
        Some(WState { components, labels })
    }

    /// Indices of parties whose component is exactly zero.
    pub fn zero_indices(&self) -> Vec<usize> {
        (0..self.len())
            .filter(|&i| self.components[i] == 0.0)
            .collect()
    }

    /// Same weights, parties permuted: new party `j` is old party `perm[j]`.
    pub fn permuted(&self, perm: &[usize]) -> WState {
        WState {
            components: perm.iter().map(|&i| self.components[i]).collect(),
            labels: perm.iter().map(|&i| self.labels[i].clone()).collect(),
        }
    }

    /// Two-party canonical form: Schmidt coefficients written as
    /// `x₀ = 0, x₁ ≥ x₂` with the larger weight on the first label.
    ///
    /// For two qubits the component vector is only unique up to local
    /// unitaries under this convention.
    pub fn two_party_canonical(&self) -> Result<WState> {
        if self.len() != 2 {
            return Err(Error::Precondition(
                "two-party canonical form needs N = 2".into(),
            ));
        }
        let (x0, x1, x2) = (self.x0(), self.components[0], self.components[1]);
        // Amplitude matrix [[√x0, √x2], [√x1, 0]] (rows: party 1, cols: party 2).
        // Singular values squared are the eigenvalues of M Mᵀ.
        let a = x0 + x2;
        let d = x1;
        let b = (x0 * x1).sqrt();
        let tr = a + d;
        let disc = ((a - d) * (a - d) + 4.0 * b * b).sqrt();
        let big = 0.5 * (tr + disc);
        let small = (0.5 * (tr - disc)).max(0.0);
        WState::new(vec![big, small], self.labels.clone())
    }

    pub fn standard(labels: Vec<String>) -> Result<WState> {
        standard_w(labels)
    }
}

/// `|W_M⟩` on the given parties: every component `1/M`, `x₀ = 0`.
pub fn standard_w(labels: Vec<String>) -> Result<WState> {
    let n = labels.len();
    if n < 2 {
        return Err(Error::InvalidState(
            "standard W state needs at least 2 parties".into(),
        ));
    }
    WState::new(vec![1.0 / n as f64; n], labels)
}

pub(crate) fn is_close_rel(x: f64, max: f64) -> bool {
    (max - x).abs() <= MAX_REL_TOL * max.abs().max(f64::MIN_POSITIVE)
}

pub(crate) fn check_distinct(labels: &[String]) -> Result<()> {
    for (i, a) in labels.iter().enumerate() {
        if labels[..i].contains(a) {
            return Err(Error::InvalidInput(format!("duplicate party label `{a}`")));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn labels(s: &str) -> Vec<String> {
        s.chars().map(|c| c.to_string()).collect()
    }

    #[test]
    fn standard_w_examples() {
        let w2 = standard_w(labels("AB")).unwrap();
        assert_eq!(w2.components(), &[0.5, 0.5]);
        let w4 = standard_w(labels("ABCD")).unwrap();
        assert_eq!(w4.components(), &[0.25; 4]);
        assert_eq!(w4.x0(), 0.0);
        let w3 = standard_w(labels("ABC")).unwrap();
        for &x in w3.components() {
            assert!((x - 1.0 / 3.0).abs() < 1e-15);
        }
        assert!(w3.is_standard_w());
        assert!(standard_w(labels("A")).is_err());
    }

    #[test]
    fn rejects_bad_components() {
        assert!(WState::from_components(vec![0.6, 0.5]).is_err());
        assert!(WState::from_components(vec![-0.1, 0.5]).is_err());
        assert!(WState::from_components(vec![0.5]).is_err());
        assert!(WState::new(vec![0.5, 0.5], labels("AA")).is_err());
        assert!(WState::from_components(vec![f64::NAN, 0.5]).is_err());
    }

    #[test]
    fn tiny_components_snap_to_zero() {
        let s = WState::from_components(vec![0.5, 1e-16, 0.5]).unwrap();
        assert_eq!(s.component(1), 0.0);
        assert_eq!(s.zero_indices(), vec![1]);
        // slight overshoot of the sum is clamped
        let s = WState::from_components(vec![0.5, 0.5 + 1e-13]).unwrap();
        assert_eq!(s.x0(), 0.0);
    }

    #[test]
    fn max_tie_goes_to_lowest_index() {
        let s = WState::from_components(vec![0.2, 0.4, 0.4]).unwrap();
        assert_eq!(s.max_index(), 1);
        assert!(s.is_maximal(2));
        assert!(!s.is_maximal(0));
    }

    #[test]
    fn two_party_schmidt_form() {
        let s = WState::from_components(vec![0.5, 0.5]).unwrap();
        let c = s.two_party_canonical().unwrap();
        assert!((c.component(0) - 0.5).abs() < 1e-12);
        // x0 > 0: singular values of [[√x0, √x2], [√x1, 0]]
        let s = WState::from_components(vec![0.3, 0.2]).unwrap();
        let c = s.two_party_canonical().unwrap();
        assert!(c.component(0) >= c.component(1));
        assert!((c.component(0) + c.component(1) - 1.0).abs() < 1e-12);
        // determinant |√x1·√x2| = √(λ1 λ2)
        assert!((c.component(0) * c.component(1) - 0.3 * 0.2).abs() < 1e-12);
    }

    #[test]
    fn json_shape() {
        let s: WState =
            serde_json::from_str(r#"{"components":[0.5,0.3,0.2],"labels":["A","B","C"]}"#).unwrap();
        assert_eq!(s.labels()[2], "C");
        let back = serde_json::to_string(&s).unwrap();
        assert_eq!(
            back,
            r#"{"components":[0.5,0.3,0.2],"labels":["A","B","C"]}"#
        );
        let s: WState = serde_json::from_str(r#"{"components":[0.5,0.5]}"#).unwrap();
        assert_eq!(s.labels(), &["A".to_string(), "B".to_string()]);
        assert!(serde_json::from_str::<WState>(r#"{"components":[0.9,0.9]}"#).is_err());
    }
}

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::ConfigGraph;
use crate::state::WState;

/// Tolerance on `Σ p = 1` for a distribution.
pub const DISTRIBUTION_TOL: f64 = 1e-9;

/// Where a branch of a protocol ends up.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Terminal {
    /// EPR pair between the two named parties (stored in party order).
    Epr {
        pair: (String, String),
    },
    /// Standard W state on the listed parties.
    StandardW {
        parties: Vec<String>,
    },
    Failure,
    /// Hand-off to a later stage of the protocol.
    Residual {
        state: WState,
        graph: ConfigGraph,
    },
    /// Mass left over when a protocol loop is cut off.
    Truncated,
}

impl Terminal {
    pub fn epr(a: &str, b: &str) -> Self {
        Terminal::Epr {
            pair: (a.to_string(), b.to_string()),
        }
    }

    pub fn is_success(&self) -> bool {
        matches!(self, Terminal::Epr { .. })
    }
}

impl fmt::Display for Terminal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Terminal::Epr { pair } => write!(f, "EPR({},{})", pair.0, pair.1),
            Terminal::StandardW { parties } => {
                write!(f, "W_{}^{{{}}}", parties.len(), parties.concat())
            }
            Terminal::Failure => write!(f, "failure"),
            Terminal::Residual { state, .. } => {
                write!(f, "residual[{}]", state.labels().concat())
            }
            Terminal::Truncated => write!(f, "truncated"),
        }
    }
}

/// Probability map over terminals. Equal terminals are merged on insert.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct OutcomeDistribution {
    entries: Vec<(Terminal, f64)>,
}

impl OutcomeDistribution {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn single(t: Terminal) -> Self {
        Self {
            entries: vec![(t, 1.0)],
        }
    }

    pub fn add(&mut self, t: Terminal, p: f64) {
        if let Some(e) = self.entries.iter_mut().find(|(u, _)| *u == t) {
            e.1 += p;
        } else {
            self.entries.push((t, p));
        }
    }

    pub fn merge_scaled(&mut self, other: &OutcomeDistribution, scale: f64) {
        for (t, p) in &other.entries {
            self.add(t.clone(), p * scale);
        }
    }

    pub fn entries(&self) -> &[(Terminal, f64)] {
        &self.entries
    }

    pub fn into_entries(self) -> Vec<(Terminal, f64)> {
        self.entries
    }

    pub fn probability_of(&self, t: &Terminal) -> f64 {
        self.entries
            .iter()
            .filter(|(u, _)| u == t)
            .map(|(_, p)| *p)
            .sum()
    }

    pub fn total(&self) -> f64 {
        self.entries.iter().map(|(_, p)| p).sum()
    }

    pub fn success(&self) -> f64 {
        self.entries
            .iter()
            .filter(|(t, _)| t.is_success())
            .map(|(_, p)| p)
            .sum()
    }

    pub fn failure(&self) -> f64 {
        self.probability_of(&Terminal::Failure)
    }

    pub fn validate(&self) -> Result<()> {
        if let Some((t, p)) = self.entries.iter().find(|(_, p)| *p < -DISTRIBUTION_TOL) {
            return Err(Error::InvalidInput(format!(
                "negative probability {p} for {t}"
            )));
        }
        let total = self.total();
        if (total - 1.0).abs() > DISTRIBUTION_TOL {
            return Err(Error::InvalidInput(format!("probabilities sum to {total}")));
        }
        Ok(())
    }

    /// Entries sorted by terminal display string, for stable output.
    pub fn sorted(&self) -> Vec<(Terminal, f64)> {
        let mut v = self.entries.clone();
        v.sort_by_key(|(t, _)| t.to_string());
        v
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn merges_equal_terminals() {
        let mut d = OutcomeDistribution::new();
        d.add(Terminal::epr("A", "B"), 0.25);
        d.add(Terminal::Failure, 0.5);
        d.add(Terminal::epr("A", "B"), 0.25);
        assert_eq!(d.entries().len(), 2);
        assert!((d.success() - 0.5).abs() < 1e-15);
        d.validate().unwrap();
        d.add(Terminal::Truncated, 0.1);
        assert!(d.validate().is_err());
    }

    #[test]
    fn display_forms() {
        let t = Terminal::StandardW {
            parties: vec!["A".into(), "B".into(), "D".into()],
        };
        assert_eq!(t.to_string(), "W_3^{ABD}");
        assert_eq!(Terminal::epr("B", "C").to_string(), "EPR(B,C)");
    }
}

//! Random states and random complete binary measurements.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};

use crate::error::Result;
use crate::measurement::{KrausOutcome, LocalMeasurement};
use crate::state::WState;

/// Algorithm identifier recorded in reports.
pub const RNG_ID: &str = "ChaCha8Rng";

/// Stream `stream` of the generator seeded with `seed`. Streams are
/// independent, so work split by index is reproducible regardless of how it
/// is scheduled.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Uniform point of the probability simplex in `dim` coordinates
/// (Dirichlet(1, …, 1) by normalized exponentials).
pub fn uniform_simplex<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> Vec<f64> {
    let v: Vec<f64> = (0..dim).map(|_| Exp1.sample(rng)).collect();
    let s: f64 = v.iter().sum();
    v.into_iter().map(|x| x / s).collect()
}

/// Uniform `(x₀, x₁, …, x_N)`; with `vacuum_free` the vacuum is dropped and
/// `(x₁, …, x_N)` is uniform on its own simplex.
pub fn random_state<R: Rng + ?Sized>(
    rng: &mut R,
    labels: &[String],
    vacuum_free: bool,
) -> Result<WState> {
    let n = labels.len();
    let comps = if vacuum_free {
        uniform_simplex(rng, n)
    } else {
        uniform_simplex(rng, n + 1).split_off(1)
    };
    WState::new(comps, labels.to_vec())
}

/// Random complete two-outcome measurement by `party`. `(a₁, c₁)` lie
/// within `radius` of `(½, ½)` and `b₁ ∈ [−radius, radius]`; `(a₂, b₂, c₂)`
/// follow from completeness, rejecting draws with `c₂ < 0`. `radius = ½`
/// covers the full parameter range.
pub fn random_measurement<R: Rng + ?Sized>(
    rng: &mut R,
    party: &str,
    radius: f64,
    diagonal: bool,
) -> LocalMeasurement {
    let r = radius.clamp(0.0, 0.5);
    loop {
        let a1 = 0.5 + r * rng.random_range(-1.0..=1.0);
        let c1 = 0.5 + r * rng.random_range(-1.0..=1.0);
        let b1 = if diagonal {
            0.0
        } else {
            r * rng.random_range(-1.0..=1.0)
        };
        if !(a1 > 0.0 && a1 < 1.0) || c1 < 0.0 {
            continue;
        }
        let a2 = 1.0 - a1;
        let b2 = -a1.sqrt() * b1 / a2.sqrt();
        let c2 = 1.0 - c1 - b1 * b1 - b2 * b2;
        if c2 < 0.0 {
            continue;
        }
        let outcomes = vec![KrausOutcome::new(a1, b1, c1), KrausOutcome::new(a2, b2, c2)];
        if let Ok(m) = LocalMeasurement::new(party.to_string(), outcomes) {
            return m;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::default_labels;

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let a: Vec<u64> = (0..4).map(|_| stream_rng(7, 0).random()).collect();
        let mut r = stream_rng(7, 0);
        let b: u64 = r.random();
        assert_eq!(a[0], b);
        let c: u64 = stream_rng(7, 1).random();
        assert_ne!(b, c);
    }

    #[test]
    fn states_are_valid() {
        let mut rng = stream_rng(1, 0);
        let labels = default_labels(5);
        for _ in 0..200 {
            let s = random_state(&mut rng, &labels, false).unwrap();
            assert!(s.x0() >= 0.0);
            let t = random_state(&mut rng, &labels, true).unwrap();
            assert_eq!(t.x0(), 0.0);
        }
    }

    #[test]
    fn measurements_are_complete() {
        let mut rng = stream_rng(2, 0);
        for radius in [0.05, 0.5] {
            for _ in 0..200 {
                let m = random_measurement(&mut rng, "A", radius, false);
                let o = m.outcomes();
                assert!((o[0].a - 0.5).abs() <= radius + 1e-15);
                assert!((o[0].c - 0.5).abs() <= radius + 1e-15);
            }
        }
    }
}

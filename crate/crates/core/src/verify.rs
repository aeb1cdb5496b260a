//! The acceptance suite as library functions.
//!
//! Each criterion collects named checks. A check may carry a documented
//! known-failure note: the quantity is computed faithfully and reported,
//! but the target is unattainable as stated. A criterion whose only failing
//! checks are documented is reported as [`Status::KnownFailure`].

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::bounds::{
    bound_config, gamma, pairs_comparison, tau, tau6, upper_bound, w_target_bound, Config,
};
use crate::error::Result;
use crate::graph::{graph_catalog, ConfigGraph};
use crate::lpo::{
    build_protocol_tree, p_fl, triangle_lpo, vi_lpo, vi_sorted_graph, wedge_lpo, LpoSolver,
    DEFAULT_EPSILON, DEFAULT_LOOP_CAP,
};
use crate::mc::{
    fuzz_with, monotone_fuzz, random_measurement, random_state, simulate, statevector_oracle,
    stream_rng, FuzzConfig, MonotoneId, SimConfig,
};
use crate::measurement::apply_measurement;
use crate::par::Execution;
use crate::state::{default_labels, standard_w, WState};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
    KnownFailure,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub observed: f64,
    pub expected: Option<f64>,
    pub tolerance: Option<f64>,
    /// Why this check cannot pass as stated, when that is the case.
    pub known_failure: Option<String>,
}

impl Check {
    fn close(name: impl Into<String>, observed: f64, expected: f64, tol: f64) -> Self {
        Self {
            name: name.into(),
            passed: (observed - expected).abs() <= tol,
            observed,
            expected: Some(expected),
            tolerance: Some(tol),
            known_failure: None,
        }
    }

    /// `observed ≤ tol`.
    fn at_most(name: impl Into<String>, observed: f64, tol: f64) -> Self {
        Self {
            name: name.into(),
            passed: observed <= tol,
            observed,
            expected: None,
            tolerance: Some(tol),
            known_failure: None,
        }
    }

    fn flag(name: impl Into<String>, passed: bool) -> Self {
        Self {
            name: name.into(),
            passed,
            observed: f64::from(u8::from(passed)),
            expected: Some(1.0),
            tolerance: None,
            known_failure: None,
        }
    }

    fn known(mut self, why: &str) -> Self {
        self.known_failure = Some(why.to_string());
        self
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriterionResult {
    pub id: u8,
    pub name: String,
    pub status: Status,
    pub elapsed_s: f64,
    pub budget_s: f64,
    pub checks: Vec<Check>,
}

impl CriterionResult {
    fn finish(id: u8, name: &str, budget_s: f64, start: Instant, mut checks: Vec<Check>) -> Self {
        let elapsed_s = start.elapsed().as_secs_f64();
        checks.push(Check::at_most("runtime (s)", elapsed_s, budget_s));
        let status = if checks
            .iter()
            .any(|c| !c.passed && c.known_failure.is_none())
        {
            Status::Fail
        } else if checks.iter().any(|c| !c.passed) {
            Status::KnownFailure
        } else {
            Status::Pass
        };
        Self {
            id,
            name: name.to_string(),
            status,
            elapsed_s,
            budget_s,
            checks,
        }
    }

    /// One-line summary: `PASS 1 exact reference values (0.01s)`, with failing
    /// checks appended.
    pub fn line(&self) -> String {
        let tag = match self.status {
            Status::Pass => "PASS",
            Status::Fail => "FAIL",
            Status::KnownFailure => "FAIL (known)",
        };
        let mut s = format!("{tag} {} {} ({:.2}s)", self.id, self.name, self.elapsed_s);
        for c in self.checks.iter().filter(|c| !c.passed) {
            s.push_str(&format!("; {}: observed {:.12}", c.name, c.observed));
            if let Some(e) = c.expected {
                s.push_str(&format!(" expected {e:.12}"));
            }
            if let Some(t) = c.tolerance {
                s.push_str(&format!(" tol {t:e}"));
            }
        }
        s
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Filter {
    #[default]
    All,
    /// Only the exact-value checks.
    PaperValues,
}

/// Deliberate defects for mutation smoke tests.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Faults {
    /// Fuzz `−τ` in place of `τ`.
    pub tau_sign_flip: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifyOptions {
    pub filter: Filter,
    pub faults: Faults,
    pub seed: u64,
    pub trials: u64,
    #[serde(skip)]
    pub execution: Execution,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            filter: Filter::All,
            faults: Faults::default(),
            seed: 2012,
            trials: 1_000_000,
            execution: Execution::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifySummary {
    /// No criterion failed outside its documented known failures.
    pub passed: bool,
    pub criteria: Vec<CriterionResult>,
    /// `"<id> <criterion>: <check>"` for every undocumented failure.
    pub failures: Vec<String>,
}

pub fn run_verify(opts: &VerifyOptions) -> Result<VerifySummary> {
    let criteria = match opts.filter {
        Filter::PaperValues => vec![exact_values()?],
        Filter::All => vec![
            exact_values()?,
            closed_forms(opts)?,
            oracle_equivalence(opts)?,
            monotone_fuzzing(opts)?,
            monte_carlo(opts)?,
            standard_w_bound()?,
            cited_values()?,
        ],
    };
    let failures: Vec<String> = criteria
        .iter()
        .flat_map(|c| {
            c.checks
                .iter()
                .filter(|k| !k.passed && k.known_failure.is_none())
                .map(move |k| format!("{} {}: {}", c.id, c.name, k.name))
        })
        .collect();
    Ok(VerifySummary {
        passed: failures.is_empty(),
        criteria,
        failures,
    })
}

fn preset(name: &str) -> ConfigGraph {
    graph_catalog(name, None).expect("built-in preset")
}

fn w_on(g: &ConfigGraph) -> WState {
    standard_w(g.labels().to_vec()).expect("labels are distinct")
}

const EXACT_TOL: f64 = 1e-8;

/// Criterion 1: exact values for standard states.
pub fn exact_values() -> Result<CriterionResult> {
    let start = Instant::now();
    let mut checks = Vec::new();
    let wedge = preset("wedge");
    checks.push(Check::close(
        "P_III(W3, wedge)",
        LpoSolver::new(wedge)?.p3()?.value,
        2.0 / 3.0,
        EXACT_TOL,
    ));
    let lpo = |name: &str| -> Result<f64> {
        let g = preset(name);
        LpoSolver::new(g.clone())?.p_lpo(&w_on(&g))
    };
    checks.push(Check::close(
        "P_LPO(W3, triangle)",
        lpo("triangle")?,
        1.0,
        EXACT_TOL,
    ));
    checks.push(Check::close("P_LPO(W4, II)", lpo("II")?, 0.75, EXACT_TOL));
    for p in ["III-a", "III-b", "III-c"] {
        checks.push(Check::close(
            format!("P_LPO(W4, {p})"),
            lpo(p)?,
            2.0 / 3.0,
            EXACT_TOL,
        ));
    }
    checks.push(Check::close(
        "P_LPO(W4, IV)",
        lpo("IV")?,
        5.0 / 6.0,
        EXACT_TOL,
    ));
    checks.push(Check::close("P_LPO(W4, V)", lpo("V")?, 1.0, EXACT_TOL));
    let vi = preset("VI");
    let report = LpoSolver::new(vi.clone())?.p3()?;
    let s3 = 3f64.sqrt();
    checks.push(Check::close(
        "P_LPO(W4, VI)",
        report.value,
        (3.0 + s3) / 6.0,
        EXACT_TOL,
    ));
    checks.push(Check::close(
        "argmax alpha (W4, VI)",
        report.argmax_alpha,
        (s3 - 1.0) / 2.0,
        1e-6,
    ));
    checks.push(Check::close("P_FL(W4, VI)", p_fl(&vi)?, 0.75, EXACT_TOL));
    let w4 = w_on(&vi);
    checks.push(Check::close(
        "tau(W4)",
        tau(&w4, &preset("III-c"))?.value,
        2.0 / 3.0,
        EXACT_TOL,
    ));
    checks.push(Check::close(
        "Gamma(W4)",
        gamma(&w4, &preset("IV"))?.value,
        5.0 / 6.0,
        EXACT_TOL,
    ));
    for n in 2..=5usize {
        let g = graph_catalog("pairs", Some(2 * n))?;
        let (p, sep) = pairs_comparison(n)?;
        let nf = n as f64;
        checks.push(Check::close(
            format!("pairs({}) closed form", 2 * n),
            p,
            2.0 / (2.0 * nf - 1.0),
            EXACT_TOL,
        ));
        checks.push(Check::close(
            format!("pairs({}) SEP", 2 * n),
            sep,
            (1.0 / nf).sqrt(),
            EXACT_TOL,
        ));
        let engine = LpoSolver::new(g.clone())?.p_lpo(&w_on(&g))?;
        let label = if n == 3 {
            "P_LPO(W6, pairs)".to_string()
        } else {
            format!("P_LPO(W{}, pairs)", 2 * n)
        };
        checks.push(Check::close(
            label,
            engine,
            2.0 / (2.0 * nf - 1.0),
            EXACT_TOL,
        ));
    }
    Ok(CriterionResult::finish(
        1,
        "exact reference values",
        1.0,
        start,
        checks,
    ))
}

const STATES: usize = 1000;

fn sorted_state(rng: &mut impl rand::Rng, labels: &[String]) -> Result<WState> {
    let s = random_state(rng, labels, true)?;
    let mut c = s.components().to_vec();
    c.sort_by(|a, b| b.total_cmp(a));
    WState::new(c, labels.to_vec())
}

/// Worst `|engine − formula|` over random `x₀ = 0` states.
fn max_gap(
    graph: &ConfigGraph,
    seed: u64,
    stream: u64,
    sorted: bool,
    formula: impl Fn(&WState) -> Result<f64>,
) -> Result<f64> {
    let mut solver = LpoSolver::new(graph.clone())?;
    let mut rng = stream_rng(seed, stream);
    let mut worst: f64 = 0.0;
    for _ in 0..STATES {
        let s = if sorted {
            sorted_state(&mut rng, graph.labels())?
        } else {
            random_state(&mut rng, graph.labels(), true)?
        };
        worst = worst.max((solver.p_lpo(&s)? - formula(&s)?).abs());
    }
    Ok(worst)
}

const TAU6_NOTE: &str =
    "the printed six-party expression removes an isolated maximal party at no cost, \
contradicting the isolated-node rule that the exact four-party tau agreement relies on; \
W6 still gives 2/5";

/// Criterion 2: engine versus printed closed forms and tight bounds.
pub fn closed_forms(opts: &VerifyOptions) -> Result<CriterionResult> {
    let start = Instant::now();
    let seed = opts.seed;
    let mut checks = Vec::new();
    let comps = |s: &WState| s.components().to_vec();
    let gap = max_gap(&preset("wedge"), seed, 0, true, |s| wedge_lpo(&comps(s)))?;
    checks.push(Check::at_most("wedge closed form", gap, EXACT_TOL));
    let gap = max_gap(&preset("triangle"), seed, 1, true, |s| {
        triangle_lpo(&comps(s))
    })?;
    checks.push(Check::at_most("triangle closed form", gap, EXACT_TOL));
    let gap = max_gap(&vi_sorted_graph(), seed, 2, true, |s| vi_lpo(&comps(s)))?;
    checks.push(Check::at_most("VI closed form", gap, EXACT_TOL));
    let gap = max_gap(&graph_catalog("pairs", Some(6))?, seed, 3, true, tau6)?;
    checks.push(Check::at_most("tau6 on pairs(6)", gap, EXACT_TOL).known(TAU6_NOTE));
    let configs = [
        (Config::I, true),
        (Config::IPrime, true),
        (Config::IDoublePrime, true),
        (Config::II, false),
        (Config::V, false),
    ];
    for (i, (c, sorted)) in configs.into_iter().enumerate() {
        let g = preset(c.preset());
        let gap = max_gap(&g, seed, 10 + i as u64, sorted, |s| {
            Ok(bound_config(s, &g, c)?.value)
        })?;
        checks.push(Check::at_most(
            format!("bound {} tight", c.preset()),
            gap,
            EXACT_TOL,
        ));
    }
    for (i, p) in ["III-a", "III-b", "III-c"].into_iter().enumerate() {
        let g = preset(p);
        let gap = max_gap(&g, seed, 20 + i as u64, false, |s| Ok(tau(s, &g)?.value))?;
        checks.push(Check::at_most(format!("tau tight on {p}"), gap, EXACT_TOL));
    }
    let g = preset("IV");
    let gap = max_gap(&g, seed, 30, false, |s| Ok(gamma(s, &g)?.value))?;
    checks.push(Check::at_most("Gamma tight on IV", gap, EXACT_TOL));
    Ok(CriterionResult::finish(
        2,
        "closed-form agreement",
        30.0,
        start,
        checks,
    ))
}

/// Criterion 3: component rule versus the amplitude-level oracle.
pub fn oracle_equivalence(opts: &VerifyOptions) -> Result<CriterionResult> {
    let start = Instant::now();
    let pairs = 10_000usize;
    let gaps = crate::par::map_indices(pairs, opts.execution, |i| -> Result<(f64, f64)> {
        let mut rng = stream_rng(opts.seed ^ 0x0ac1e, i as u64);
        let n = 2 + i % 7;
        let labels = default_labels(n);
        let s = random_state(&mut rng, &labels, false)?;
        let party = &labels[rand::Rng::random_range(&mut rng, 0..n)];
        let m = random_measurement(&mut rng, party, 0.5, false);
        let core = apply_measurement(&s, &m)?;
        let oracle = statevector_oracle(&s, &m)?;
        let mut dp: f64 = 0.0;
        let mut dx: f64 = 0.0;
        for (b, (p, post)) in core.iter().zip(&oracle) {
            dp = dp.max((b.probability - p).abs());
            match (&b.state, post) {
                (Some(a), Some(o)) => {
                    for (x, y) in a.components().iter().zip(o.components()) {
                        dx = dx.max((x - y).abs());
                    }
                }
                (None, None) => {}
                _ => dx = f64::INFINITY,
            }
        }
        Ok((dp, dx))
    });
    let (mut dp, mut dx): (f64, f64) = (0.0, 0.0);
    for g in gaps {
        let (a, b) = g?;
        dp = dp.max(a);
        dx = dx.max(b);
    }
    let checks = vec![
        Check::at_most("outcome probabilities", dp, 1e-10),
        Check::at_most("post-measurement components", dx, 1e-10),
    ];
    Ok(CriterionResult::finish(
        3,
        "state-vector oracle equivalence",
        60.0,
        start,
        checks,
    ))
}

/// Criterion 4: K-T, τ and Γ under weak measurements.
pub fn monotone_fuzzing(opts: &VerifyOptions) -> Result<CriterionResult> {
    let start = Instant::now();
    let config = FuzzConfig {
        seed: opts.seed,
        execution: opts.execution,
        ..FuzzConfig::default()
    };
    let mut checks = Vec::new();
    for id in MonotoneId::ALL {
        let report = if id == MonotoneId::Tau && opts.faults.tau_sign_flip {
            fuzz_with("tau", &id.graphs(), &config, |s, g| {
                Ok(vec![-tau(s, g)?.value])
            })?
        } else {
            monotone_fuzz(id, &config)?
        };
        checks.push(Check::at_most(
            format!("{id} fuzz"),
            report.max_violation,
            1e-10,
        ));
    }
    Ok(CriterionResult::finish(
        4,
        "monotone fuzz",
        120.0,
        start,
        checks,
    ))
}

const TRUNCATION_NOTE: &str = "limit policies run at alpha = 1 - eps, so a round is repeated with \
probability about (1 - eps)^m; 60 rounds at eps = 1e-3 leave most of the mass truncated";

/// Criterion 5: simulated versus analytic tree values.
pub fn monte_carlo(opts: &VerifyOptions) -> Result<CriterionResult> {
    let start = Instant::now();
    let mut checks = Vec::new();
    for (name, sup) in [("IV", 5.0 / 6.0), ("triangle", 1.0)] {
        let g = preset(name);
        let tree = build_protocol_tree(&w_on(&g), &g, DEFAULT_EPSILON, DEFAULT_LOOP_CAP)?;
        let mut config = SimConfig::new(opts.trials, opts.seed);
        config.execution = opts.execution;
        let r = simulate(&tree, &config)?;
        let z = r.success.z_score.map_or(f64::INFINITY, f64::abs);
        checks.push(Check::at_most(
            format!("{name}: |z| of simulated success"),
            z,
            3.0,
        ));
        checks.push(
            Check::close(
                format!("{name}: analytic tree value vs supremum"),
                r.success.analytic,
                sup,
                2e-3,
            )
            .known(TRUNCATION_NOTE),
        );
    }
    Ok(CriterionResult::finish(
        5,
        "Monte Carlo",
        120.0,
        start,
        checks,
    ))
}

/// Criterion 6: the standard-W bound stays below `N·t` and reaches 1.
pub fn standard_w_bound() -> Result<CriterionResult> {
    let start = Instant::now();
    let mut checks = Vec::new();
    for n in 3..=8usize {
        let top = 1.0 / n as f64;
        let mut worst = f64::NEG_INFINITY;
        for i in 1..=1000 {
            let t = top * i as f64 / 1001.0;
            worst = worst.max(w_target_bound(n, t)? - n as f64 * t);
        }
        checks.push(Check {
            name: format!("N={n}: bound < N t on grid"),
            passed: worst < 0.0,
            observed: worst,
            expected: None,
            tolerance: Some(0.0),
            known_failure: None,
        });
        checks.push(Check::close(
            format!("N={n}: bound at t=1/N"),
            w_target_bound(n, top)?,
            1.0,
            1e-12,
        ));
    }
    Ok(CriterionResult::finish(
        6,
        "standard-W bound",
        10.0,
        start,
        checks,
    ))
}

/// Criterion 7: literature values are reported as cited constants.
pub fn cited_values() -> Result<CriterionResult> {
    let start = Instant::now();
    let vi = preset("VI");
    let r = upper_bound(&w_on(&vi), &vi)?;
    let mut checks = vec![Check::flag(
        "VI separable value 5/6 reported as cited",
        r.as_ref()
            .is_some_and(|b| b.cited && (b.value - 5.0 / 6.0).abs() < 1e-15),
    )];
    let p = graph_catalog("pairs", Some(6))?;
    let r = upper_bound(&w_on(&p), &p)?;
    checks.push(Check::flag(
        "pairs separable value reported as cited",
        r.as_ref().is_some_and(|b| b.cited),
    ));
    let iv = preset("IV");
    let r = upper_bound(&w_on(&iv), &iv)?;
    checks.push(Check::flag(
        "computed bounds are not marked cited",
        r.as_ref().is_some_and(|b| !b.cited),
    ));
    Ok(CriterionResult::finish(
        7,
        "cited reference values",
        1.0,
        start,
        checks,
    ))
}

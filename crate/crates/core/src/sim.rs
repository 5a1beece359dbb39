//! Simulation harness: the two estimation settings, the Type I error study
//! and the power study, each registered as a [`Scenario`].
//!
//! Every replicate draws from seeds derived from `(spec.seed, cell,
//! replicate)` only, so reports are identical however replicates are
//! scheduled.

use std::io::Write;
use std::sync::LazyLock;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::estimators;
use crate::fit::{positive_parts, FitOptions};
use crate::graph::AdjacencyMatrix;
use crate::inference::{permutation_test, PValueRule, TestOptions};
use crate::metrics::{rejection_rate, KsUniform, Summary};
use crate::model::{LatentModel, Link};
use crate::registry::{Named, Registry};
use crate::rng::{derive_seed, seeded};

pub const SETTING1: &str = "setting1";
pub const SETTING2: &str = "setting2";
pub const NULL_TYPE1: &str = "null-typeI";
pub const POWER: &str = "power";

/// Version tag written into every report.
pub const REPORT_FORMAT_VERSION: u32 = 1;

/// Diagonal of `Λ^even`; the six odd orderings are its permutations.
pub const SETTING2_EVEN: [f64; 3] = [11.5, 2.0, 0.5];

/// `Λ^odd` for ordering ids 1..=6, in figure-panel order (a)–(f).
pub const SETTING2_ORDERINGS: [[f64; 3]; 6] = [
    [11.5, 2.0, 0.5],
    [11.5, 0.5, 2.0],
    [2.0, 0.5, 11.5],
    [2.0, 11.5, 0.5],
    [0.5, 11.5, 2.0],
    [0.5, 2.0, 11.5],
];

/// Generative configuration of a simulation study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimulationSpec {
    /// Registered scenario name.
    pub setting: String,
    /// Node counts to sweep.
    pub n: Vec<usize>,
    pub d: usize,
    /// Graph counts to sweep (estimation settings).
    pub k: Vec<usize>,
    /// `Λ^odd` ordering ids in 1..=6 (setting 2).
    pub orderings: Vec<usize>,
    /// Separation parameters in [0,1] (power study).
    pub r: Vec<f64>,
    pub replicates: usize,
    /// Permutation replicates per test.
    pub test_permutations: usize,
    pub alpha: f64,
    pub seed: u64,
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for SimulationSpec {
    fn default() -> Self {
        Self {
            setting: SETTING1.to_string(),
            n: vec![20],
            d: 3,
            k: vec![2],
            orderings: (1..=6).collect(),
            r: vec![0.0, 0.25, 0.5, 0.75, 1.0],
            replicates: 100,
            test_permutations: 200,
            alpha: 0.05,
            seed: 0,
            tolerance: FitOptions::DEFAULT_TOLERANCE,
            max_iterations: FitOptions::DEFAULT_MAX_ITERATIONS,
        }
    }
}

impl SimulationSpec {
    pub fn new(setting: &str) -> Self {
        let mut spec = Self {
            setting: setting.to_string(),
            ..Self::default()
        };
        if setting == NULL_TYPE1 || setting == POWER {
            spec.d = 2;
            spec.replicates = 200;
        }
        spec
    }

    pub fn fit_options(&self) -> FitOptions {
        let mut fit = FitOptions::new(self.d);
        fit.tolerance = self.tolerance;
        fit.max_iterations = self.max_iterations;
        fit
    }

    fn check_common(&self) -> Result<()> {
        if self.replicates == 0 {
            return Err(invalid("replicates must be at least 1"));
        }
        if self.n.is_empty() {
            return Err(invalid("at least one n is required"));
        }
        if self.tolerance.is_nan() || self.tolerance <= 0.0 || self.max_iterations == 0 {
            return Err(invalid("tolerance and max-iterations must be positive"));
        }
        for &n in &self.n {
            build_u_structured(n, self.d)?;
        }
        Ok(())
    }

    fn check_k(&self) -> Result<()> {
        if self.k.is_empty() || self.k.contains(&0) {
            return Err(invalid("graph counts K must be non-empty and positive"));
        }
        Ok(())
    }

    fn check_test(&self) -> Result<()> {
        if self.test_permutations == 0 {
            return Err(invalid("test-permutations must be at least 1"));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(invalid("alpha must lie in (0,1)"));
        }
        Ok(())
    }
}

fn invalid(msg: &str) -> Error {
    Error::InvalidArgument(msg.to_string())
}

/// Normalized ±1 sign-pattern basis: all ones, alternating `(1,-1,…)`, and
/// for `d = 3` the pairs pattern `(1,1,-1,-1,…)`. Requires even `n` for
/// `d = 2` and `n ≡ 0 (mod 4)` for `d = 3`.
pub fn build_u_structured(n: usize, d: usize) -> Result<DMatrix<f64>> {
    let ok = match d {
        2 => n >= 2 && n.is_multiple_of(2),
        3 => n >= 4 && n.is_multiple_of(4),
        _ => false,
    };
    if !ok {
        return Err(Error::InvalidArgument(format!(
            "structured basis needs d in {{2,3}} with n even (d=2) or divisible by 4 (d=3); got n={n}, d={d}"
        )));
    }
    let scale = 1.0 / (n as f64).sqrt();
    Ok(DMatrix::from_fn(n, d, |i, j| {
        let sign = match j {
            0 => 1.0,
            1 if i % 2 == 0 => 1.0,
            1 => -1.0,
            _ if i % 4 < 2 => 1.0,
            _ => -1.0,
        };
        sign * scale
    }))
}

/// Per-replicate metrics of one estimator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimationRow {
    pub n: usize,
    pub k: usize,
    pub ordering: Option<usize>,
    pub replicate: usize,
    pub estimator: String,
    pub subspace_distance: f64,
    pub adjacency_error: f64,
}

/// Aggregate over replicates for one `(n, K, ordering, estimator)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimationCell {
    pub n: usize,
    pub k: usize,
    pub ordering: Option<usize>,
    pub estimator: String,
    pub subspace_distance: Summary,
    pub adjacency_error: Summary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimationReport {
    pub spec: SimulationSpec,
    pub rows: Vec<EstimationRow>,
    pub cells: Vec<EstimationCell>,
}

impl EstimationReport {
    pub fn cell(&self, n: usize, k: usize, ordering: Option<usize>, estimator: &str) -> Option<&EstimationCell> {
        self.cells
            .iter()
            .find(|c| c.n == n && c.k == k && c.ordering == ordering && c.estimator == estimator)
    }
}

/// One simulated test.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestingRow {
    pub n: usize,
    pub r: f64,
    pub replicate: usize,
    pub statistic: f64,
    pub p_value: f64,
    /// Smallest of the observed and permutation statistics.
    pub min_statistic: f64,
}

/// Aggregate over replicates for one `(n, r)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestingCell {
    pub n: usize,
    pub r: f64,
    /// Fraction of p-values below alpha (Type I error under the null, power otherwise).
    pub rejection_rate: f64,
    pub ks_uniform: KsUniform,
    pub min_statistic: f64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestingReport {
    pub spec: SimulationSpec,
    pub rows: Vec<TestingRow>,
    pub cells: Vec<TestingCell>,
}

impl TestingReport {
    pub fn cell(&self, n: usize, r: f64) -> Option<&TestingCell> {
        self.cells.iter().find(|c| c.n == n && c.r == r)
    }

    pub fn p_values(&self, n: usize, r: f64) -> Vec<f64> {
        self.rows
            .iter()
            .filter(|row| row.n == n && row.r == r)
            .map(|row| row.p_value)
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SimulationReport {
    Estimation(EstimationReport),
    Testing(TestingReport),
}

#[derive(Serialize)]
struct SummaryFile<'a, C: Serialize> {
    format: &'static str,
    version: u32,
    spec: &'a SimulationSpec,
    cells: &'a [C],
}

impl SimulationReport {
    pub fn spec(&self) -> &SimulationSpec {
        match self {
            SimulationReport::Estimation(r) => &r.spec,
            SimulationReport::Testing(r) => &r.spec,
        }
    }

    /// One CSV row per replicate (per estimator for estimation studies).
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut writer = csv::Writer::from_writer(out);
        match self {
            SimulationReport::Estimation(r) => {
                for row in &r.rows {
                    writer.serialize(row)?;
                }
                if r.rows.is_empty() {
                    writer.write_record([
                        "n",
                        "k",
                        "ordering",
                        "replicate",
                        "estimator",
                        "subspace_distance",
                        "adjacency_error",
                    ])?;
                }
            }
            SimulationReport::Testing(r) => {
                for row in &r.rows {
                    writer.serialize(row)?;
                }
                if r.rows.is_empty() {
                    writer.write_record(["n", "r", "replicate", "statistic", "p_value", "min_statistic"])?;
                }
            }
        }
        writer.flush()?;
        Ok(())
    }

    /// Versioned JSON summary: spec echo (including the seed) plus the
    /// per-cell aggregates.
    pub fn summary_json(&self) -> Result<String> {
        let json = match self {
            SimulationReport::Estimation(r) => serde_json::to_string_pretty(&SummaryFile {
                format: "mrdpg-simulation-summary",
                version: REPORT_FORMAT_VERSION,
                spec: &r.spec,
                cells: &r.cells,
            })?,
            SimulationReport::Testing(r) => serde_json::to_string_pretty(&SummaryFile {
                format: "mrdpg-simulation-summary",
                version: REPORT_FORMAT_VERSION,
                spec: &r.spec,
                cells: &r.cells,
            })?,
        };
        Ok(json)
    }
}

/// A simulation study selectable by name.
pub trait Scenario: Named + Send + Sync {
    fn validate(&self, spec: &SimulationSpec) -> Result<()>;
    fn run(&self, spec: &SimulationSpec) -> Result<SimulationReport>;
}

fn check_setting(spec: &SimulationSpec, expected: &str) -> Result<()> {
    if spec.setting != expected {
        return Err(Error::InvalidArgument(format!(
            "spec is for `{}`, scenario is `{expected}`",
            spec.setting
        )));
    }
    Ok(())
}

/// Generated truth plus graphs for one replicate.
struct Draw {
    truth: LatentModel,
    graphs: Vec<AdjacencyMatrix>,
}

fn draw_graphs(truth: LatentModel, seed: u64) -> Result<Draw> {
    let graphs = (0..truth.graphs())
        .map(|k| truth.sample_graph(k, derive_seed(seed, 1 + k as u64)))
        .collect::<Result<Vec<_>>>()?;
    Ok(Draw { truth, graphs })
}

fn cell_seed(base: u64, parts: &[u64]) -> u64 {
    parts.iter().fold(base, |acc, &p| derive_seed(acc, p))
}

fn evaluate(
    spec: &SimulationSpec,
    draw: &Draw,
    groups: &[Vec<usize>],
    n: usize,
    ordering: Option<usize>,
    replicate: usize,
) -> Result<Vec<EstimationRow>> {
    let psd = positive_parts(&draw.graphs)?;
    let fit = spec.fit_options();
    estimators()
        .iter()
        .map(|est| {
            let estimate = est.estimate(&psd, groups, &fit)?;
            Ok(EstimationRow {
                n,
                k: draw.graphs.len(),
                ordering,
                replicate,
                estimator: est.name().to_string(),
                subspace_distance: estimate.subspace_distance(draw.truth.u())?,
                adjacency_error: estimate.adjacency_error(&draw.truth)?,
            })
        })
        .collect()
}

fn summarize_estimation(spec: &SimulationSpec, rows: Vec<EstimationRow>) -> EstimationReport {
    let mut cells: Vec<EstimationCell> = Vec::new();
    let mut keys: Vec<(usize, usize, Option<usize>, String)> = Vec::new();
    for row in &rows {
        let key = (row.n, row.k, row.ordering, row.estimator.clone());
        if !keys.contains(&key) {
            keys.push(key);
        }
    }
    for (n, k, ordering, estimator) in keys {
        let selected: Vec<&EstimationRow> = rows
            .iter()
            .filter(|r| r.n == n && r.k == k && r.ordering == ordering && r.estimator == estimator)
            .collect();
        let du: Vec<f64> = selected.iter().map(|r| r.subspace_distance).collect();
        let da: Vec<f64> = selected.iter().map(|r| r.adjacency_error).collect();
        cells.push(EstimationCell {
            n,
            k,
            ordering,
            estimator,
            subspace_distance: Summary::of(&du),
            adjacency_error: Summary::of(&da),
        });
    }
    EstimationReport {
        spec: spec.clone(),
        rows,
        cells,
    }
}

/// Setting 1: `Λᵏ₁₁ ~ U(8,15)`, `Λᵏ₂₂ ~ U(1,4)`, `Λᵏ₃₃ ~ U(0,1)` with the
/// structured basis and identity link. RDPG-separate fits each graph alone.
pub fn run_setting1(spec: &SimulationSpec) -> Result<EstimationReport> {
    Setting1.validate(spec)?;
    let mut rows = Vec::new();
    for &n in &spec.n {
        let u = build_u_structured(n, 3)?;
        for &k in &spec.k {
            let groups: Vec<Vec<usize>> = (0..k).map(|g| vec![g]).collect();
            let chunk = (0..spec.replicates)
                .into_par_iter()
                .map(|rep| {
                    let seed = cell_seed(spec.seed, &[1, n as u64, k as u64, rep as u64]);
                    let mut lrng = seeded(derive_seed(seed, 0));
                    let lambdas = (0..k)
                        .map(|_| {
                            DVector::from_vec(vec![
                                lrng.random_range(8.0..15.0),
                                lrng.random_range(1.0..4.0),
                                lrng.random_range(0.0..1.0),
                            ])
                        })
                        .collect();
                    let truth = LatentModel::new(u.clone(), lambdas, Link::Identity)?;
                    let draw = draw_graphs(truth, seed)?;
                    evaluate(spec, &draw, &groups, n, None, rep)
                })
                .collect::<Result<Vec<_>>>()?;
            rows.extend(chunk.into_iter().flatten());
        }
    }
    Ok(summarize_estimation(spec, rows))
}

/// Setting 2: even-numbered graphs (1-based) use `diag(11.5, 2, 0.5)`, odd
/// ones the chosen ordering; clamp link. RDPG-separate fits the evens and
/// the odds as two groups.
pub fn run_setting2(spec: &SimulationSpec) -> Result<EstimationReport> {
    Setting2.validate(spec)?;
    let mut rows = Vec::new();
    for &n in &spec.n {
        let u = build_u_structured(n, 3)?;
        for &ordering in &spec.orderings {
            let odd = DVector::from_row_slice(&SETTING2_ORDERINGS[ordering - 1]);
            let even = DVector::from_row_slice(&SETTING2_EVEN);
            for &k in &spec.k {
                // graph index g is graph g+1 in 1-based numbering
                let lambdas: Vec<DVector<f64>> = (0..k)
                    .map(|g| if (g + 1) % 2 == 0 { even.clone() } else { odd.clone() })
                    .collect();
                let odds: Vec<usize> = (0..k).filter(|g| (g + 1) % 2 == 1).collect();
                let evens: Vec<usize> = (0..k).filter(|g| (g + 1) % 2 == 0).collect();
                let groups: Vec<Vec<usize>> = [odds, evens].into_iter().filter(|g| !g.is_empty()).collect();
                let truth = LatentModel::new(u.clone(), lambdas, Link::Clamp01)?;
                let chunk = (0..spec.replicates)
                    .into_par_iter()
                    .map(|rep| {
                        let seed = cell_seed(spec.seed, &[2, n as u64, ordering as u64, k as u64, rep as u64]);
                        let draw = draw_graphs(truth.clone(), seed)?;
                        evaluate(spec, &draw, &groups, n, Some(ordering), rep)
                    })
                    .collect::<Result<Vec<_>>>()?;
                rows.extend(chunk.into_iter().flatten());
            }
        }
    }
    Ok(summarize_estimation(spec, rows))
}

/// Null model of the Type I study: `diag(n/4, n/5)` for `d = 2`,
/// `diag(n/2, n/4, n/400)` for `d = 3`.
pub fn null_lambda(n: usize, d: usize) -> Result<DVector<f64>> {
    let nf = n as f64;
    match d {
        2 => Ok(DVector::from_vec(vec![nf / 4.0, nf / 5.0])),
        3 => Ok(DVector::from_vec(vec![nf / 2.0, nf / 4.0, nf / 400.0])),
        _ => Err(Error::InvalidArgument(format!("no null configuration for d={d}"))),
    }
}

/// Alternative pair of the power study at separation `r`.
pub fn power_lambdas(n: usize, d: usize, r: f64) -> Result<(DVector<f64>, DVector<f64>)> {
    let nf = n as f64;
    match d {
        2 => Ok((
            DVector::from_vec(vec![nf / 4.0 * (1.0 + r), nf / 4.0 * (1.0 - r)]),
            DVector::from_vec(vec![nf / 4.0 * (1.0 - r), nf / 4.0 * (1.0 + r)]),
        )),
        3 => Ok((
            DVector::from_vec(vec![nf / 4.0 * (1.0 - r), nf / 5.0 * (1.0 + r), nf / 400.0 * (1.0 - r)]),
            DVector::from_vec(vec![nf / 4.0 * (1.0 + r), nf / 5.0 * (1.0 - r), nf / 400.0 * (1.0 + r)]),
        )),
        _ => Err(Error::InvalidArgument(format!("no power configuration for d={d}"))),
    }
}

fn run_tests(
    spec: &SimulationSpec,
    tag: u64,
    r_values: &[f64],
    truth_for: impl Fn(usize, f64) -> Result<LatentModel> + Sync,
) -> Result<TestingReport> {
    let mut rows = Vec::new();
    let mut cells = Vec::new();
    for &n in &spec.n {
        for &r in r_values {
            let truth = truth_for(n, r)?;
            let chunk = (0..spec.replicates)
                .into_par_iter()
                .map(|rep| {
                    let seed = cell_seed(spec.seed, &[tag, n as u64, r.to_bits(), rep as u64]);
                    let draw = draw_graphs(truth.clone(), seed)?;
                    let options = TestOptions {
                        permutations: spec.test_permutations,
                        seed: derive_seed(seed, u64::MAX),
                        fit: spec.fit_options(),
                        p_value_rule: PValueRule::Plain,
                    };
                    let result = permutation_test(&draw.graphs, &options)?;
                    Ok(TestingRow {
                        n,
                        r,
                        replicate: rep,
                        statistic: result.statistic,
                        p_value: result.p_value,
                        min_statistic: result.min_statistic(),
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            let p: Vec<f64> = chunk.iter().map(|row| row.p_value).collect();
            cells.push(TestingCell {
                n,
                r,
                rejection_rate: rejection_rate(&p, spec.alpha),
                ks_uniform: KsUniform::of(&p),
                min_statistic: chunk.iter().map(|row| row.min_statistic).fold(f64::INFINITY, f64::min),
                count: chunk.len(),
            });
            rows.extend(chunk);
        }
    }
    Ok(TestingReport {
        spec: spec.clone(),
        rows,
        cells,
    })
}

/// Type I study: K = 2 graphs from the same null model (identity link),
/// one permutation test per replicate. Rows carry `r = 0`.
pub fn run_type1(spec: &SimulationSpec) -> Result<TestingReport> {
    NullTypeI.validate(spec)?;
    run_tests(spec, 3, &[0.0], |n, _| {
        let lambda = null_lambda(n, spec.d)?;
        LatentModel::new(
            build_u_structured(n, spec.d)?,
            vec![lambda.clone(), lambda],
            Link::Identity,
        )
    })
}

/// Power study over the `r` grid with link `max(x, 0)`.
pub fn run_power(spec: &SimulationSpec) -> Result<TestingReport> {
    Power.validate(spec)?;
    run_tests(spec, 4, &spec.r, |n, r| {
        let (l1, l2) = power_lambdas(n, spec.d, r)?;
        LatentModel::new(build_u_structured(n, spec.d)?, vec![l1, l2], Link::PositivePart)
    })
}

pub struct Setting1;
pub struct Setting2;
pub struct NullTypeI;
pub struct Power;

impl Named for Setting1 {
    fn name(&self) -> &'static str {
        SETTING1
    }
}

impl Scenario for Setting1 {
    fn validate(&self, spec: &SimulationSpec) -> Result<()> {
        check_setting(spec, SETTING1)?;
        if spec.d != 3 {
            return Err(invalid("setting1 requires d = 3"));
        }
        spec.check_common()?;
        spec.check_k()
    }

    fn run(&self, spec: &SimulationSpec) -> Result<SimulationReport> {
        run_setting1(spec).map(SimulationReport::Estimation)
    }
}

impl Named for Setting2 {
    fn name(&self) -> &'static str {
        SETTING2
    }
}

impl Scenario for Setting2 {
    fn validate(&self, spec: &SimulationSpec) -> Result<()> {
        check_setting(spec, SETTING2)?;
        if spec.d != 3 {
            return Err(invalid("setting2 requires d = 3"));
        }
        if spec.orderings.is_empty() || spec.orderings.iter().any(|&o| !(1..=6).contains(&o)) {
            return Err(invalid("setting2 orderings must be ids in 1..=6"));
        }
        spec.check_common()?;
        spec.check_k()
    }

    fn run(&self, spec: &SimulationSpec) -> Result<SimulationReport> {
        run_setting2(spec).map(SimulationReport::Estimation)
    }
}

impl Named for NullTypeI {
    fn name(&self) -> &'static str {
        NULL_TYPE1
    }
}

impl Scenario for NullTypeI {
    fn validate(&self, spec: &SimulationSpec) -> Result<()> {
        check_setting(spec, NULL_TYPE1)?;
        if !(2..=3).contains(&spec.d) {
            return Err(invalid("null-typeI requires d = 2 or d = 3"));
        }
        spec.check_common()?;
        spec.check_test()
    }

    fn run(&self, spec: &SimulationSpec) -> Result<SimulationReport> {
        run_type1(spec).map(SimulationReport::Testing)
    }
}

impl Named for Power {
    fn name(&self) -> &'static str {
        POWER
    }
}

impl Scenario for Power {
    fn validate(&self, spec: &SimulationSpec) -> Result<()> {
        check_setting(spec, POWER)?;
        if !(2..=3).contains(&spec.d) {
            return Err(invalid("power requires d = 2 or d = 3"));
        }
        if spec.r.is_empty() || spec.r.iter().any(|r| !(0.0..=1.0).contains(r)) {
            return Err(invalid("power r values must lie in [0,1]"));
        }
        spec.check_common()?;
        spec.check_test()
    }

    fn run(&self, spec: &SimulationSpec) -> Result<SimulationReport> {
        run_power(spec).map(SimulationReport::Testing)
    }
}

static SCENARIOS: LazyLock<Registry<dyn Scenario>> = LazyLock::new(|| {
    Registry::<dyn Scenario>::new("simulation setting")
        .with(Box::new(Setting1))
        .with(Box::new(Setting2))
        .with(Box::new(NullTypeI))
        .with(Box::new(Power))
});

pub fn scenarios() -> &'static Registry<dyn Scenario> {
    &SCENARIOS
}

/// Looks up `spec.setting` and runs it.
pub fn run(spec: &SimulationSpec) -> Result<SimulationReport> {
    scenarios().get(&spec.setting)?.run(spec)
}

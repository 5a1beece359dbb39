//! Versioned, self-describing JSON files for fitted models and test results.

use std::io::{Read, Write};

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fit::{FitOptions, MultiRdpgFit};
use crate::inference::TestResult;
use crate::model::LatentModel;

pub const FIT_FORMAT: &str = "mrdpg-fit";
pub const TEST_FORMAT: &str = "mrdpg-test";
pub const FORMAT_VERSION: u32 = 1;

/// Where a graph came from and what was done to it before fitting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputEcho {
    pub source: String,
    pub nodes: usize,
    pub edges: usize,
    /// Edge count before down-sampling, when it happened.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub original_edges: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitFile {
    pub format: String,
    pub version: u32,
    pub n: usize,
    pub d: usize,
    pub k: usize,
    /// `U` in row-major order (`n` rows of `d` values).
    pub u: Vec<f64>,
    pub lambdas: Vec<Vec<f64>>,
    pub objective_trace: Vec<f64>,
    pub converged: bool,
    pub iterations: usize,
    pub options: FitOptions,
    pub inputs: Vec<InputEcho>,
}

impl FitFile {
    pub fn new(fit: &MultiRdpgFit, options: &FitOptions, inputs: Vec<InputEcho>) -> Self {
        let model = &fit.model;
        let u = model.u();
        Self {
            format: FIT_FORMAT.to_string(),
            version: FORMAT_VERSION,
            n: model.n(),
            d: model.d(),
            k: model.graphs(),
            u: (0..u.nrows())
                .flat_map(|i| (0..u.ncols()).map(move |j| u[(i, j)]))
                .collect(),
            lambdas: model.lambdas().iter().map(|l| l.iter().copied().collect()).collect(),
            objective_trace: fit.objective_trace.clone(),
            converged: fit.converged,
            iterations: fit.iterations,
            options: options.clone(),
            inputs,
        }
    }

    /// Rebuilds the fit, re-validating the model invariants.
    pub fn to_fit(&self) -> Result<MultiRdpgFit> {
        if self.u.len() != self.n * self.d || self.lambdas.len() != self.k {
            return Err(Error::DimensionMismatch(format!(
                "fit file declares n={}, d={}, K={} but holds {} basis entries and {} weight vectors",
                self.n,
                self.d,
                self.k,
                self.u.len(),
                self.lambdas.len()
            )));
        }
        let u = DMatrix::from_row_slice(self.n, self.d, &self.u);
        let lambdas = self.lambdas.iter().map(|l| DVector::from_column_slice(l)).collect();
        let model = LatentModel::new(u, lambdas, crate::model::Link::Identity)?;
        Ok(MultiRdpgFit {
            model,
            objective_trace: self.objective_trace.clone(),
            converged: self.converged,
            iterations: self.iterations,
        })
    }

    pub fn write<W: Write>(&self, out: W) -> Result<()> {
        write_json(self, out)
    }

    pub fn read<R: Read>(input: R) -> Result<Self> {
        let file: Self = serde_json::from_reader(input)?;
        check_header(&file.format, file.version, FIT_FORMAT)?;
        Ok(file)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestFile {
    pub format: String,
    pub version: u32,
    pub statistic: f64,
    pub p_value: f64,
    pub null_objective: f64,
    pub alternative_objective: f64,
    pub permutations: usize,
    pub seed: u64,
    /// Seed used for edge-count matching, when it was requested.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub downsample_seed: Option<u64>,
    pub null_statistics: Vec<f64>,
    pub options: crate::inference::TestOptions,
    pub inputs: Vec<InputEcho>,
}

impl TestFile {
    pub fn new(result: &TestResult, inputs: Vec<InputEcho>, downsample_seed: Option<u64>) -> Self {
        Self {
            format: TEST_FORMAT.to_string(),
            version: FORMAT_VERSION,
            statistic: result.statistic,
            p_value: result.p_value,
            null_objective: result.null_objective,
            alternative_objective: result.alternative_objective,
            permutations: result.options.permutations,
            seed: result.options.seed,
            downsample_seed,
            null_statistics: result.null_statistics.clone(),
            options: result.options.clone(),
            inputs,
        }
    }

    pub fn write<W: Write>(&self, out: W) -> Result<()> {
        write_json(self, out)
    }

    pub fn read<R: Read>(input: R) -> Result<Self> {
        let file: Self = serde_json::from_reader(input)?;
        check_header(&file.format, file.version, TEST_FORMAT)?;
        Ok(file)
    }
}

fn write_json<T: Serialize, W: Write>(value: &T, mut out: W) -> Result<()> {
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    Ok(())
}

fn check_header(format: &str, version: u32, expected: &str) -> Result<()> {
    if format != expected {
        return Err(Error::InvalidArgument(format!(
            "expected a `{expected}` file, found `{format}`"
        )));
    }
    if version != FORMAT_VERSION {
        return Err(Error::InvalidArgument(format!(
            "unsupported {expected} version {version} (this build reads {FORMAT_VERSION})"
        )));
    }
    Ok(())
}

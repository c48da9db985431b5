//! Structured run reports.

use crate::linalg::CMatrix;
use num_complex::Complex64;
use serde::Serialize;

pub const SCHEMA: &str = "twochannel-report/1";

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MatrixDump {
    pub rows: usize,
    pub cols: usize,
    pub re: Vec<Vec<f64>>,
    pub im: Vec<Vec<f64>>,
}

impl MatrixDump {
    pub fn new(m: &CMatrix) -> Self {
        let part = |f: fn(&Complex64) -> f64| {
            m.row_iter()
                .map(|r| r.iter().map(f).collect())
                .collect::<Vec<Vec<f64>>>()
        };
        MatrixDump {
            rows: m.nrows(),
            cols: m.ncols(),
            re: part(|z| z.re),
            im: part(|z| z.im),
        }
    }
}

pub fn pair(z: Complex64) -> [f64; 2] {
    [z.re, z.im]
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConfigEcho {
    pub problem: String,
    pub stages: Vec<String>,
    pub tol: f64,
    pub max_iter: usize,
    pub delta: f64,
    pub seed: u64,
    pub channel: usize,
    pub eps_ladder: Vec<f64>,
    pub ladder_unit: String,
    pub onshell_tol: f64,
    pub unitarity_tol: f64,
    pub dump_operators: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProblemSummary {
    pub dim1: usize,
    pub dim2: usize,
    pub discrete1: usize,
    pub discrete2: usize,
    pub bands1: usize,
    pub bands2: usize,
    pub gap: f64,
    pub hs_norm: f64,
    pub operator_norm1: f64,
    pub operator_norm2: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SectionStatus {
    Ok,
    InputError,
    NumericalFailure,
    Skipped,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IterationRow {
    pub k: usize,
    pub step_norm: f64,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SolveSection {
    pub status: SectionStatus,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub certified: bool,
    pub certificate_bound: f64,
    pub certificate_optimal_bound: f64,
    pub certificate_delta: f64,
    pub converged: bool,
    pub iterations: usize,
    pub final_step_norm: f64,
    pub riccati_residual: f64,
    pub residual_limit: f64,
    pub q21_norm: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub oracle_agreement: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub oracle_error: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q21: Option<MatrixDump>,
    pub history: Vec<IterationRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChannelSection {
    pub channel: usize,
    pub eigenvalues: Vec<[f64; 2]>,
    pub imaginary_residue: f64,
    pub weight_min_eigenvalue: f64,
    pub self_adjoint_defect: f64,
    pub symmetrized_defect: f64,
    pub symmetrized_spectrum_mismatch: f64,
    pub v_consistency: f64,
    pub triangular_defect: f64,
    pub triangular_block_mismatch: f64,
    pub probe_self_adjoint_defect: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub h: Option<MatrixDump>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub h_symmetrized: Option<MatrixDump>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub w: Option<MatrixDump>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub x_weight: Option<MatrixDump>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EffectiveSection {
    pub status: SectionStatus,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub spectral_match: f64,
    pub block_diagonal_defect: f64,
    pub block_mismatch: f64,
    pub inverse_mismatch: f64,
    pub unitarity_defect: f64,
    pub subspace_orthogonality: f64,
    pub invariance_defect: f64,
    pub channels: Vec<ChannelSection>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PartitionEntry {
    pub value: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub residual1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub residual2: Option<f64>,
    pub label: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EigenSection {
    pub channel: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub biorthogonality: f64,
    pub normalization: f64,
    pub adjoint_residual: f64,
    pub original_residual: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub completeness: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub weight_identity: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectralSection {
    pub status: SectionStatus,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub counts: [usize; 2],
    pub overlaps: usize,
    pub orphans: usize,
    pub partition: Vec<PartitionEntry>,
    pub eigensystems: Vec<EigenSection>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScatteringRow {
    pub index: usize,
    pub lambda: f64,
    pub s: [f64; 2],
    pub abs_s: f64,
    pub s_boundary: [f64; 2],
    pub t_full: [f64; 2],
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_reduced: Option<[f64; 2]>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub onshell_defect: Option<f64>,
    pub unitarity_defect: f64,
    pub epsilons: Vec<f64>,
    pub s_ladder: Vec<[f64; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScatteringSection {
    pub status: SectionStatus,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub channel: usize,
    pub rule: String,
    pub max_unitarity_defect: f64,
    pub max_abs_t: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_onshell_defect: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub relative_onshell_defect: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wave_operator_defect: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub wave_operator_entrywise_defect: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cross_residual: Option<f64>,
    pub warnings: Vec<String>,
    pub points: Vec<ScatteringRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub limit: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Pass,
    InvariantFailure,
    InputError,
    NumericalFailure,
}

impl Outcome {
    pub fn exit_code(self) -> i32 {
        match self {
            Outcome::Pass => 0,
            Outcome::InvariantFailure => 1,
            Outcome::InputError => 2,
            Outcome::NumericalFailure => 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Summary {
    pub outcome: Outcome,
    pub passed: bool,
    pub certified: bool,
    pub failures: Vec<String>,
    pub checks: Vec<Check>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub schema: String,
    pub config: ConfigEcho,
    pub problem: ProblemSummary,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub solve: Option<SolveSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub effective: Option<EffectiveSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub spectral: Option<SpectralSection>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scattering: Option<ScatteringSection>,
    pub summary: Summary,
}

impl RunReport {
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("reports serialize")
    }

    pub fn sections(&self) -> Vec<&'static str> {
        let mut out = Vec::new();
        if self.solve.is_some() {
            out.push("solve");
        }
        if self.effective.is_some() {
            out.push("effective");
        }
        if self.spectral.is_some() {
            out.push("spectral");
        }
        if self.scattering.is_some() {
            out.push("scattering");
        }
        out
    }
}

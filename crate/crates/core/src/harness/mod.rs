//! Batch pipeline: problem file → solve → verify → scatter → report.

pub mod problem_file;
pub mod report;
pub mod tables;

use crate::effective::{build_effective, symmetrize, verify_effective, weighted_inner_product};
use crate::linalg::{self, CMatrix, CVector};
use crate::model::{Channel, TwoChannelProblem};
use crate::riccati::{
    certify_contraction, oracle_graph_from_projector, solve_riccati, IterationRecord,
    RiccatiSolution, SolverError, SolverOptions,
};
use crate::scattering::{scatter, EpsilonLadder, ScatteringError, ScatteringOptions};
use crate::spectral::{partition_spectrum, verify_eigensystem};
use num_complex::Complex64;
use problem_file::{InputError, ProblemFile};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use report::*;
use std::io::Write as _;
use std::path::{Path, PathBuf};

pub const SPECTRAL_MATCH_TOL: f64 = 1e-8;
pub const SIMILARITY_TOL: f64 = 1e-10;
pub const SELF_ADJOINT_TOL: f64 = 1e-10;
pub const SYMMETRIZED_TOL: f64 = 1e-9;
pub const V_CONSISTENCY_TOL: f64 = 1e-8;
pub const ORACLE_TOL: f64 = 1e-8;
pub const RESIDUAL_FLOOR: f64 = 1e-10;
pub const BIORTHOGONALITY_TOL: f64 = 1e-9;
pub const ADJOINT_TOL: f64 = 1e-9;
pub const ORIGINAL_TOL: f64 = 1e-8;
pub const COMPLETENESS_TOL: f64 = 1e-8;
/// Matrix sizes above which the projector oracle is not attempted.
pub const ORACLE_MAX_DIM: usize = 600;
const PROBE_PAIRS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Stage {
    Solve,
    Verify,
    Scatter,
}

impl Stage {
    pub fn name(self) -> &'static str {
        match self {
            Stage::Solve => "solve",
            Stage::Verify => "verify",
            Stage::Scatter => "scatter",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScatterConfig {
    pub channel: Channel,
    pub ladder: EpsilonLadder,
    pub onshell_tol: f64,
    pub unitarity_tol: f64,
    /// Treat a channel without continuum as an input error instead of
    /// skipping the section.
    pub require_continuum: bool,
}

impl Default for ScatterConfig {
    fn default() -> Self {
        ScatterConfig {
            channel: Channel::One,
            ladder: EpsilonLadder::default(),
            onshell_tol: 1e-3,
            unitarity_tol: 1e-3,
            require_continuum: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub problem_path: PathBuf,
    pub stages: Vec<Stage>,
    pub tol: Option<f64>,
    pub max_iter: Option<usize>,
    pub delta: Option<f64>,
    pub seed: Option<u64>,
    pub scatter: ScatterConfig,
    pub dump_operators: bool,
    pub out: Option<PathBuf>,
}

impl RunConfig {
    pub fn new(problem_path: impl Into<PathBuf>, stages: Vec<Stage>) -> Self {
        RunConfig {
            problem_path: problem_path.into(),
            stages,
            tol: None,
            max_iter: None,
            delta: None,
            seed: None,
            scatter: ScatterConfig::default(),
            dump_operators: false,
            out: None,
        }
    }

    fn validate(&self) -> Result<(), InputError> {
        let bad = |m: &str| Err(InputError::Invalid(m.to_string()));
        if self.stages.is_empty() {
            return bad("no pipeline stage requested");
        }
        let positive = |x: Option<f64>| x.is_none_or(|v| v > 0.0 && v.is_finite());
        if !positive(self.tol) || !positive(self.delta) || self.max_iter == Some(0) {
            return bad("tol, delta and max_iter must be positive");
        }
        let s = &self.scatter;
        if !(s.onshell_tol > 0.0 && s.unitarity_tol > 0.0) {
            return bad("scattering tolerances must be positive");
        }
        let m = s.ladder.multiples();
        if m.is_empty()
            || m.iter().any(|x| !(*x > 0.0 && x.is_finite()))
            || m.windows(2).any(|p| p[1] >= p[0])
        {
            return bad("epsilon ladder must be positive and strictly decreasing");
        }
        Ok(())
    }
}

/// Writes `text` to a temporary file next to `path` and renames it into place.
pub fn write_atomic(path: &Path, text: &str) -> std::io::Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(text.as_bytes())?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| e.error)?;
    Ok(())
}

/// Reads the problem file, runs the requested stages and writes the report
/// to `config.out` when set.
pub fn run(config: &RunConfig) -> Result<RunReport, InputError> {
    config.validate()?;
    let file = ProblemFile::read(&config.problem_path)?;
    let report = run_file(&file, &config.problem_path.display().to_string(), config)?;
    if let Some(out) = &config.out {
        write_atomic(out, &report.to_toml()).map_err(|e| InputError::Io {
            path: out.display().to_string(),
            message: e.to_string(),
        })?;
    }
    Ok(report)
}

/// Runs the pipeline on an already parsed problem file.
pub fn run_file(
    file: &ProblemFile,
    label: &str,
    config: &RunConfig,
) -> Result<RunReport, InputError> {
    config.validate()?;
    let problem = file.build()?;
    let mut options = file.solver_options()?;
    if let Some(tol) = config.tol {
        options.tol = tol;
    }
    if let Some(max_iter) = config.max_iter {
        options.max_iter = max_iter;
    }
    if let Some(delta) = config.delta {
        options.delta = delta;
    }
    let seed = config.seed.or(file.seed()).unwrap_or(0);

    let mut stages = config.stages.clone();
    if stages.iter().any(|s| *s != Stage::Solve) {
        stages.push(Stage::Solve);
    }
    stages.sort();
    stages.dedup();

    let mut checks = Vec::new();
    let mut failures = Vec::new();
    let mut outcome_flags = (false, false);
    let (solve, solution) = solve_stage(&problem, &options, config.dump_operators, &mut checks);
    note_status(
        solve.status,
        "solve",
        &solve.error,
        &mut failures,
        &mut outcome_flags,
    );

    let (effective, spectral) = if stages.contains(&Stage::Verify) {
        match &solution {
            Some(sol) => {
                let e = effective_stage(&problem, sol, seed, config.dump_operators, &mut checks);
                let s = spectral_stage(&problem, sol, &mut checks);
                (Some(e), Some(s))
            }
            None => (Some(skipped_effective()), Some(skipped_spectral())),
        }
    } else {
        (None, None)
    };
    if let Some(e) = &effective {
        note_status(
            e.status,
            "effective",
            &e.error,
            &mut failures,
            &mut outcome_flags,
        );
    }
    if let Some(s) = &spectral {
        note_status(
            s.status,
            "spectral",
            &s.error,
            &mut failures,
            &mut outcome_flags,
        );
    }

    let scattering = if stages.contains(&Stage::Scatter) {
        let s = scattering_stage(&problem, solution.as_ref(), &config.scatter, &mut checks);
        note_status(
            s.status,
            "scattering",
            &s.error,
            &mut failures,
            &mut outcome_flags,
        );
        Some(s)
    } else {
        None
    };

    failures.extend(checks.iter().filter(|c| !c.passed).map(|c| c.name.clone()));
    let (input_error, numerical) = outcome_flags;
    let outcome = if input_error {
        Outcome::InputError
    } else if numerical {
        Outcome::NumericalFailure
    } else if checks.iter().any(|c| !c.passed) {
        Outcome::InvariantFailure
    } else {
        Outcome::Pass
    };
    let (ladder, unit) = match &config.scatter.ladder {
        EpsilonLadder::GridMultiples(m) => (m.clone(), "grid_spacing"),
        EpsilonLadder::BandWidthMultiples(m) => (m.clone(), "band_width"),
    };
    Ok(RunReport {
        schema: SCHEMA.to_string(),
        config: ConfigEcho {
            problem: label.to_string(),
            stages: stages.iter().map(|s| s.name().to_string()).collect(),
            tol: options.tol,
            max_iter: options.max_iter,
            delta: options.delta,
            seed,
            channel: config.scatter.channel.index(),
            eps_ladder: ladder,
            ladder_unit: unit.to_string(),
            onshell_tol: config.scatter.onshell_tol,
            unitarity_tol: config.scatter.unitarity_tol,
            dump_operators: config.dump_operators,
        },
        problem: summarize(&problem),
        solve: Some(solve),
        effective,
        spectral,
        scattering,
        summary: Summary {
            outcome,
            passed: outcome == Outcome::Pass,
            certified: certify_contraction(&problem, options.delta).passed,
            failures,
            checks,
        },
    })
}

fn note_status(
    status: SectionStatus,
    name: &str,
    error: &Option<String>,
    failures: &mut Vec<String>,
    flags: &mut (bool, bool),
) {
    match status {
        SectionStatus::InputError => flags.0 = true,
        SectionStatus::NumericalFailure => flags.1 = true,
        SectionStatus::Ok | SectionStatus::Skipped => return,
    }
    failures.push(format!("{name}: {}", error.as_deref().unwrap_or("failed")));
}

fn check(checks: &mut Vec<Check>, name: impl Into<String>, value: f64, limit: f64) {
    checks.push(Check {
        name: name.into(),
        value,
        limit,
        passed: value <= limit,
    });
}

fn summarize(problem: &TwoChannelProblem) -> ProblemSummary {
    let (a1, a2) = (problem.a1(), problem.a2());
    ProblemSummary {
        dim1: a1.dim(),
        dim2: a2.dim(),
        discrete1: a1.discrete().len(),
        discrete2: a2.discrete().len(),
        bands1: a1.bands().len(),
        bands2: a2.bands().len(),
        gap: problem.gap(),
        hs_norm: problem.hs_norm(),
        operator_norm1: a1.norm(),
        operator_norm2: a2.norm(),
    }
}

fn rows(history: &[IterationRecord]) -> Vec<IterationRow> {
    history
        .iter()
        .map(|r| IterationRow {
            k: r.k,
            step_norm: r.step_norm,
            residual: r.residual,
        })
        .collect()
}

fn solve_stage(
    problem: &TwoChannelProblem,
    options: &SolverOptions,
    dump: bool,
    checks: &mut Vec<Check>,
) -> (SolveSection, Option<RiccatiSolution>) {
    let cert = certify_contraction(problem, options.delta);
    let scale = 1.0 + problem.a1().norm() + problem.a2().norm();
    let residual_limit = options.tol.max(RESIDUAL_FLOOR) * scale;
    let mut section = SolveSection {
        status: SectionStatus::Ok,
        error: None,
        certified: cert.passed,
        certificate_bound: cert.bound,
        certificate_optimal_bound: cert.optimal_bound,
        certificate_delta: cert.delta,
        converged: false,
        iterations: 0,
        final_step_norm: f64::NAN,
        riccati_residual: f64::NAN,
        residual_limit,
        q21_norm: f64::NAN,
        oracle_agreement: None,
        oracle_error: None,
        q21: None,
        history: Vec::new(),
    };
    match solve_riccati(problem, options) {
        Ok(sol) => {
            section.converged = true;
            section.iterations = sol.iterations;
            section.final_step_norm = sol.final_step_norm;
            section.riccati_residual = sol.riccati_residual;
            section.q21_norm = linalg::op_norm(&sol.q21);
            section.history = rows(&sol.history);
            section.q21 = dump.then(|| MatrixDump::new(&sol.q21));
            check(
                checks,
                "solve.riccati_residual",
                sol.riccati_residual,
                residual_limit,
            );
            let (n1, n2) = problem.dims();
            if n1 + n2 <= ORACLE_MAX_DIM {
                match oracle_graph_from_projector(problem) {
                    Ok(q) => {
                        let d = linalg::op_norm(&(&q - &sol.q21));
                        section.oracle_agreement = Some(d);
                        if cert.passed {
                            check(checks, "solve.oracle_agreement", d, ORACLE_TOL);
                        }
                    }
                    Err(e) => section.oracle_error = Some(e.to_string()),
                }
            }
            (section, Some(sol))
        }
        Err(err) => {
            section.status = match err {
                SolverError::Gap { .. } | SolverError::InvalidOption(_) => {
                    SectionStatus::InputError
                }
                SolverError::Singular { .. } | SolverError::NotConverged { .. } => {
                    SectionStatus::NumericalFailure
                }
            };
            if let SolverError::NotConverged {
                iterations,
                step,
                residual,
                history,
            } = &err
            {
                section.iterations = *iterations;
                section.final_step_norm = *step;
                section.riccati_residual = *residual;
                section.history = rows(history);
            }
            section.error = Some(err.to_string());
            (section, None)
        }
    }
}

fn random_vector(rng: &mut ChaCha8Rng, n: usize) -> CVector {
    CVector::from_fn(n, |_, _| {
        Complex64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
    })
}

/// `max |[H f, g] − [f, H g]| / (‖X‖ ‖H‖ ‖f‖ ‖g‖)` over seeded random pairs.
fn probe_self_adjointness(h: &CMatrix, x: &CMatrix, rng: &mut ChaCha8Rng) -> f64 {
    let n = h.nrows();
    let scale = linalg::op_norm(x) * linalg::op_norm(h);
    let mut worst = 0.0_f64;
    for _ in 0..PROBE_PAIRS {
        let f = random_vector(rng, n);
        let g = random_vector(rng, n);
        let lhs = weighted_inner_product(&(h * &f), &g, x).expect("dimensions agree");
        let rhs = weighted_inner_product(&f, &(h * &g), x).expect("dimensions agree");
        let denom = scale * f.norm() * g.norm();
        if denom > 0.0 {
            worst = worst.max((lhs - rhs).norm() / denom);
        }
    }
    worst
}

fn skipped_effective() -> EffectiveSection {
    EffectiveSection {
        status: SectionStatus::Skipped,
        error: Some("requires a converged Riccati solution".into()),
        spectral_match: f64::NAN,
        block_diagonal_defect: f64::NAN,
        block_mismatch: f64::NAN,
        inverse_mismatch: f64::NAN,
        unitarity_defect: f64::NAN,
        subspace_orthogonality: f64::NAN,
        invariance_defect: f64::NAN,
        channels: Vec::new(),
    }
}

fn effective_stage(
    problem: &TwoChannelProblem,
    solution: &RiccatiSolution,
    seed: u64,
    dump: bool,
    checks: &mut Vec<Check>,
) -> EffectiveSection {
    let diag = match verify_effective(problem, solution) {
        Ok(d) => d,
        Err(e) => {
            let mut s = skipped_effective();
            s.status = SectionStatus::NumericalFailure;
            s.error = Some(e.to_string());
            return s;
        }
    };
    check(
        checks,
        "effective.spectral_match",
        diag.spectral_match,
        SPECTRAL_MATCH_TOL,
    );
    check(
        checks,
        "effective.block_diagonal_defect",
        diag.block_diagonal_defect,
        SIMILARITY_TOL,
    );
    check(
        checks,
        "effective.unitarity_defect",
        diag.unitarity_defect,
        SIMILARITY_TOL,
    );
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut channels = Vec::new();
    for c in &diag.channels {
        let k = c.channel.index();
        let eff = build_effective(problem, solution, c.channel);
        let probe = probe_self_adjointness(&eff.h, &eff.x_weight, &mut rng);
        check(
            checks,
            format!("effective.channel{k}.triangular_defect"),
            c.triangular_defect,
            SIMILARITY_TOL,
        );
        check(
            checks,
            format!("effective.channel{k}.self_adjoint_defect"),
            c.self_adjoint_defect,
            SELF_ADJOINT_TOL,
        );
        check(
            checks,
            format!("effective.channel{k}.probe_self_adjoint_defect"),
            probe,
            SELF_ADJOINT_TOL,
        );
        check(
            checks,
            format!("effective.channel{k}.symmetrized_defect"),
            c.symmetrized_defect,
            SYMMETRIZED_TOL,
        );
        check(
            checks,
            format!("effective.channel{k}.v_consistency"),
            c.v_consistency,
            V_CONSISTENCY_TOL,
        );
        let dumps = dump.then(|| {
            (
                MatrixDump::new(&eff.h),
                symmetrize(&eff).ok().map(|m| MatrixDump::new(&m)),
                MatrixDump::new(&eff.w),
                MatrixDump::new(&eff.x_weight),
            )
        });
        let (h, h_symmetrized, w, x_weight) = match dumps {
            Some((h, hs, w, x)) => (Some(h), hs, Some(w), Some(x)),
            None => (None, None, None, None),
        };
        channels.push(ChannelSection {
            channel: k,
            eigenvalues: c.eigenvalues.iter().map(|z| pair(*z)).collect(),
            imaginary_residue: c.imaginary_residue,
            weight_min_eigenvalue: c.weight_min_eigenvalue,
            self_adjoint_defect: c.self_adjoint_defect,
            symmetrized_defect: c.symmetrized_defect,
            symmetrized_spectrum_mismatch: c.symmetrized_spectrum_mismatch,
            v_consistency: c.v_consistency,
            triangular_defect: c.triangular_defect,
            triangular_block_mismatch: c.triangular_block_mismatch,
            probe_self_adjoint_defect: probe,
            h,
            h_symmetrized,
            w,
            x_weight,
        });
    }
    EffectiveSection {
        status: SectionStatus::Ok,
        error: None,
        spectral_match: diag.spectral_match,
        block_diagonal_defect: diag.block_diagonal_defect,
        block_mismatch: diag.block_mismatch,
        inverse_mismatch: diag.inverse_mismatch,
        unitarity_defect: diag.unitarity_defect,
        subspace_orthogonality: diag.subspace_orthogonality,
        invariance_defect: diag.invariance_defect,
        channels,
    }
}

fn skipped_spectral() -> SpectralSection {
    SpectralSection {
        status: SectionStatus::Skipped,
        error: Some("requires a converged Riccati solution".into()),
        counts: [0, 0],
        overlaps: 0,
        orphans: 0,
        partition: Vec::new(),
        eigensystems: Vec::new(),
    }
}

fn spectral_stage(
    problem: &TwoChannelProblem,
    solution: &RiccatiSolution,
    checks: &mut Vec<Check>,
) -> SpectralSection {
    let partition = partition_spectrum(problem, solution);
    check(
        checks,
        "spectral.overlaps_and_orphans",
        (partition.overlaps + partition.orphans) as f64,
        0.0,
    );
    let mut eigensystems = Vec::new();
    let mut status = SectionStatus::Ok;
    let mut error = None;
    for channel in [Channel::One, Channel::Two] {
        let k = channel.index();
        match verify_eigensystem(problem, solution, channel) {
            Ok(d) => {
                check(
                    checks,
                    format!("spectral.channel{k}.biorthogonality"),
                    d.biorthogonality,
                    BIORTHOGONALITY_TOL,
                );
                check(
                    checks,
                    format!("spectral.channel{k}.adjoint_residual"),
                    d.adjoint_residual,
                    ADJOINT_TOL,
                );
                check(
                    checks,
                    format!("spectral.channel{k}.original_residual"),
                    d.original_residual,
                    ORIGINAL_TOL,
                );
                if let Some(v) = d.completeness {
                    check(
                        checks,
                        format!("spectral.channel{k}.completeness"),
                        v,
                        COMPLETENESS_TOL,
                    );
                }
                if let Some(v) = d.weight_identity {
                    check(
                        checks,
                        format!("spectral.channel{k}.weight_identity"),
                        v,
                        COMPLETENESS_TOL,
                    );
                }
                eigensystems.push(EigenSection {
                    channel: k,
                    error: None,
                    biorthogonality: d.biorthogonality,
                    normalization: d.normalization,
                    adjoint_residual: d.adjoint_residual,
                    original_residual: d.original_residual,
                    completeness: d.completeness,
                    weight_identity: d.weight_identity,
                });
            }
            Err(e) => {
                status = SectionStatus::NumericalFailure;
                error = Some(format!("channel {k}: {e}"));
                eigensystems.push(EigenSection {
                    channel: k,
                    error: Some(e.to_string()),
                    biorthogonality: f64::NAN,
                    normalization: f64::NAN,
                    adjoint_residual: f64::NAN,
                    original_residual: f64::NAN,
                    completeness: None,
                    weight_identity: None,
                });
            }
        }
    }
    SpectralSection {
        status,
        error,
        counts: partition.counts,
        overlaps: partition.overlaps,
        orphans: partition.orphans,
        partition: partition
            .rows
            .iter()
            .map(|r| PartitionEntry {
                value: r.value,
                residual1: r.residuals[0],
                residual2: r.residuals[1],
                label: match r.claims.as_slice() {
                    [only] => format!("{}", only.index()),
                    [] => "orphan".into(),
                    _ => "overlap".into(),
                },
            })
            .collect(),
        eigensystems,
    }
}

fn scattering_stage(
    problem: &TwoChannelProblem,
    solution: Option<&RiccatiSolution>,
    config: &ScatterConfig,
    checks: &mut Vec<Check>,
) -> ScatteringSection {
    let options = ScatteringOptions {
        channel: config.channel,
        ladder: config.ladder.clone(),
        ..ScatteringOptions::default()
    };
    let mut section = ScatteringSection {
        status: SectionStatus::Ok,
        error: None,
        channel: config.channel.index(),
        rule: format!("{:?}", options.rule),
        max_unitarity_defect: f64::NAN,
        max_abs_t: f64::NAN,
        max_onshell_defect: None,
        relative_onshell_defect: None,
        wave_operator_defect: None,
        wave_operator_entrywise_defect: None,
        cross_residual: None,
        warnings: Vec::new(),
        points: Vec::new(),
    };
    let result = match scatter(problem, solution, &options) {
        Ok(r) => r,
        Err(e) => {
            section.status = match e {
                ScatteringError::NoContinuum(_) if !config.require_continuum => {
                    SectionStatus::Skipped
                }
                ScatteringError::NoContinuum(_) | ScatteringError::InvalidLadder(_) => {
                    SectionStatus::InputError
                }
                ScatteringError::Singular { .. } | ScatteringError::NotOnShell(_) => {
                    SectionStatus::NumericalFailure
                }
            };
            section.error = Some(e.to_string());
            return section;
        }
    };
    check(
        checks,
        "scattering.unitarity_defect",
        result.max_unitarity_defect,
        config.unitarity_tol,
    );
    if let Some(d) = result.relative_onshell_defect() {
        check(
            checks,
            "scattering.relative_onshell_defect",
            d,
            config.onshell_tol,
        );
    }
    if let Some(w) = &result.wave_operators {
        check(
            checks,
            "scattering.wave_operator_defect",
            w.defect,
            config.unitarity_tol,
        );
    }
    if solution.is_none() {
        section
            .warnings
            .push("no Riccati solution; reduced t-matrix comparison skipped".into());
    }
    section.warnings.extend(result.warnings.iter().cloned());
    section.max_unitarity_defect = result.max_unitarity_defect;
    section.max_abs_t = result.max_abs_t;
    section.max_onshell_defect = result.max_onshell_defect;
    section.relative_onshell_defect = result.relative_onshell_defect();
    section.wave_operator_defect = result.wave_operators.as_ref().map(|w| w.defect);
    section.wave_operator_entrywise_defect =
        result.wave_operators.as_ref().map(|w| w.entrywise_defect);
    section.cross_residual = result.wave_operators.as_ref().map(|w| w.cross_residual);
    section.points = result
        .points
        .iter()
        .map(|p| ScatteringRow {
            index: p.index,
            lambda: p.lambda,
            s: pair(p.s),
            abs_s: p.s.norm(),
            s_boundary: pair(p.s_boundary),
            t_full: pair(p.t_full),
            t_reduced: p.t_reduced.map(pair),
            onshell_defect: p.onshell_defect,
            unitarity_defect: p.unitarity_defect,
            epsilons: p.epsilons.clone(),
            s_ladder: p.s_ladder.iter().map(|z| pair(*z)).collect(),
        })
        .collect();
    section
}

//! Acceptance suite: one PASS/FAIL line per criterion.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::path::PathBuf;
use std::time::{Duration, Instant};
use twochannel::effective::{build_effective, verify_effective};
use twochannel::harness::problem_file::{Meta, ProblemFile};
use twochannel::harness::{run_file, RunConfig, Stage};
use twochannel::kernels::{KernelFamily, KernelSpec};
use twochannel::linalg::{self, CMatrix};
use twochannel::model::{assemble_full, Band, Channel, SpectralOperator, TwoChannelProblem};
use twochannel::random::random_problem;
use twochannel::riccati::{
    oracle_graph_from_projector, solve_riccati, RiccatiSolution, SolverError, SolverOptions,
};
use twochannel::scattering::{scatter, ScatteringOptions, ScatteringResult};
use twochannel::spectral::{partition_spectrum, verify_eigensystem};

const SUITE_SEED: u64 = 20_261_016;
const SUITE_SIZE: usize = 120;

struct Verdict {
    passed: bool,
    detail: String,
}

fn report(id: usize, title: &str, v: &Verdict) -> bool {
    println!(
        "{} criterion {id}: {title}: {}",
        if v.passed { "PASS" } else { "FAIL" },
        v.detail
    );
    v.passed
}

struct Worst(f64);

impl Worst {
    fn new() -> Self {
        Worst(0.0)
    }

    fn see(&mut self, x: f64) {
        if x.is_nan() || x > self.0 {
            self.0 = x;
        }
    }
}

fn suite_dir() -> PathBuf {
    let dir = PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("acceptance-suite");
    std::fs::create_dir_all(&dir).expect("suite directory");
    dir
}

struct Instance {
    seed: u64,
    problem: TwoChannelProblem,
    solution: Result<RiccatiSolution, SolverError>,
}

/// Certified random instances, each written to disk with its seed.
fn build_suite() -> (Vec<Instance>, Duration) {
    let mut rng = ChaCha8Rng::seed_from_u64(SUITE_SEED);
    let dir = suite_dir();
    let options = SolverOptions::default();
    let mut out = Vec::with_capacity(SUITE_SIZE);
    let mut solve_time = Duration::ZERO;
    for _ in 0..SUITE_SIZE {
        let n1 = rng.random_range(2..=8);
        let n2 = rng.random_range(2..=8);
        let ratio = rng.random_range(0.02..0.45);
        let seed = rng.random_range(0..(1u64 << 62));
        let problem = random_problem(n1, n2, ratio, seed);
        let meta = Meta {
            seed: Some(seed),
            label: Some(format!("acceptance n1={n1} n2={n2} ratio={ratio}")),
        };
        let file = ProblemFile::from_problem(&problem, Some(&options), Some(meta));
        std::fs::write(dir.join(format!("{seed}.toml")), file.to_toml()).expect("write instance");
        let start = Instant::now();
        let solution = solve_riccati(&problem, &options);
        solve_time += start.elapsed();
        out.push(Instance {
            seed,
            problem,
            solution,
        });
    }
    (out, solve_time)
}

fn criterion_scalar() -> Verdict {
    let start = Instant::now();
    let p = TwoChannelProblem::from_matrices(
        &[0.0],
        &[2.0],
        CMatrix::from_element(1, 1, Complex64::new(0.5, 0.0)),
    )
    .expect("scalar problem");
    let sol = solve_riccati(&p, &SolverOptions::default()).expect("scalar solve");
    let q_err = (sol.q21[(0, 0)] - Complex64::new(2.0 - 5f64.sqrt(), 0.0)).norm();
    let h1 = build_effective(&p, &sol, Channel::One).h[(0, 0)];
    let h2 = build_effective(&p, &sol, Channel::Two).h[(0, 0)];
    let (eigs, _) = linalg::hermitian_eigen(&assemble_full(&p));
    let h_err = (h1 - Complex64::new(eigs[0], 0.0))
        .norm()
        .max((h2 - Complex64::new(eigs[1], 0.0)).norm());
    let elapsed = start.elapsed();
    Verdict {
        passed: q_err <= 1e-10 && h_err <= 1e-10 && elapsed < Duration::from_secs(1),
        detail: format!(
            "|q21 − (2−√5)| = {q_err:.1e} ≤ 1e-10, |H_α − eig| = {h_err:.1e} ≤ 1e-10, {:.3} s < 1 s",
            elapsed.as_secs_f64()
        ),
    }
}

fn criterion_convergence(suite: &[Instance], solve_time: Duration) -> Verdict {
    let mut failures = Vec::new();
    let mut worst_residual = Worst::new();
    let mut worst_oracle = Worst::new();
    let mut max_iter = 0;
    for inst in suite {
        let p = &inst.problem;
        if !(p.hs_norm() < p.gap() / 2.0) {
            failures.push(format!("{}: not certified", inst.seed));
            continue;
        }
        let sol = match &inst.solution {
            Ok(s) => s,
            Err(e) => {
                failures.push(format!("{}: {e}", inst.seed));
                continue;
            }
        };
        max_iter = max_iter.max(sol.iterations);
        let scale = 1.0 + p.a1().norm() + p.a2().norm();
        worst_residual.see(sol.riccati_residual / scale);
        match oracle_graph_from_projector(p) {
            Ok(q) => worst_oracle.see(linalg::op_norm(&(&q - &sol.q21))),
            Err(e) => failures.push(format!("{}: oracle {e}", inst.seed)),
        }
    }
    let passed = failures.is_empty()
        && max_iter <= 200
        && worst_residual.0 <= 1e-10
        && worst_oracle.0 <= 1e-8
        && solve_time < Duration::from_secs(30);
    Verdict {
        passed,
        detail: format!(
            "{} instances (seed {SUITE_SEED}), max iterations {max_iter} ≤ 200, residual/(1+‖A₁‖+‖A₂‖) ≤ {:.1e} (limit 1e-10), ‖Q − Q_oracle‖ ≤ {:.1e} (limit 1e-8), solve time {:.2} s < 30 s{}",
            suite.len(),
            worst_residual.0,
            worst_oracle.0,
            solve_time.as_secs_f64(),
            failure_note(&failures)
        ),
    }
}

fn failure_note(failures: &[String]) -> String {
    if failures.is_empty() {
        String::new()
    } else {
        format!(
            "; {} failing instance(s) in {}: {}",
            failures.len(),
            suite_dir().display(),
            failures.join(", ")
        )
    }
}

fn solved(suite: &[Instance]) -> impl Iterator<Item = (&Instance, &RiccatiSolution)> {
    suite
        .iter()
        .filter_map(|i| i.solution.as_ref().ok().map(|s| (i, s)))
}

fn criteria_similarity_and_self_adjointness(suite: &[Instance]) -> (Verdict, Verdict) {
    let mut failures = Vec::new();
    let (mut spec, mut block, mut tri, mut unit) =
        (Worst::new(), Worst::new(), Worst::new(), Worst::new());
    let (mut sa, mut sym) = (Worst::new(), Worst::new());
    let mut count = 0;
    for (inst, sol) in solved(suite) {
        match verify_effective(&inst.problem, sol) {
            Ok(d) => {
                count += 1;
                spec.see(d.spectral_match);
                block.see(d.block_diagonal_defect);
                unit.see(d.unitarity_defect);
                for c in &d.channels {
                    tri.see(c.triangular_defect);
                    sa.see(c.self_adjoint_defect);
                    sym.see(c.symmetrized_defect);
                }
            }
            Err(e) => failures.push(format!("{}: {e}", inst.seed)),
        }
    }
    let complete = failures.is_empty() && count == suite.len();
    let similarity = Verdict {
        passed: complete && spec.0 <= 1e-8 && block.0 <= 1e-10 && tri.0 <= 1e-10 && unit.0 <= 1e-10,
        detail: format!(
            "{count} instances, spectrum match {:.1e} ≤ 1e-8, block-diagonal defect {:.1e} ≤ 1e-10, triangular defect {:.1e} ≤ 1e-10, unitarity defect {:.1e} ≤ 1e-10{}",
            spec.0,
            block.0,
            tri.0,
            unit.0,
            failure_note(&failures)
        ),
    };
    let self_adjoint = Verdict {
        passed: complete && sa.0 <= 1e-10 && sym.0 <= 1e-9,
        detail: format!(
            "{count} instances, ‖XH − H*X‖/(‖X‖‖H‖) ≤ {:.1e} (limit 1e-10), ‖H″ − H″*‖/‖H″‖ ≤ {:.1e} (limit 1e-9)",
            sa.0, sym.0
        ),
    };
    (similarity, self_adjoint)
}

fn criterion_partition(suite: &[Instance]) -> Verdict {
    let (mut overlaps, mut orphans, mut eigenvalues, mut count) = (0, 0, 0, 0);
    let mut failures = Vec::new();
    for (inst, sol) in solved(suite) {
        let report = partition_spectrum(&inst.problem, sol);
        count += 1;
        overlaps += report.overlaps;
        orphans += report.orphans;
        eigenvalues += report.rows.len();
        let (n1, n2) = inst.problem.dims();
        if report.counts != [n1, n2] {
            failures.push(format!("{}: counts {:?}", inst.seed, report.counts));
        }
    }
    Verdict {
        passed: count == suite.len() && overlaps == 0 && orphans == 0 && failures.is_empty(),
        detail: format!(
            "{count} instances, {eigenvalues} eigenvectors, {overlaps} overlaps, {orphans} orphans, per-channel counts match dimensions{}",
            failure_note(&failures)
        ),
    }
}

fn criterion_eigensystem(suite: &[Instance]) -> Verdict {
    let (mut bi, mut comp, mut adj, mut orig, mut weight) = (
        Worst::new(),
        Worst::new(),
        Worst::new(),
        Worst::new(),
        Worst::new(),
    );
    let mut failures = Vec::new();
    let mut count = 0;
    for (inst, sol) in solved(suite) {
        for channel in [Channel::One, Channel::Two] {
            match verify_eigensystem(&inst.problem, sol, channel) {
                Ok(d) => {
                    bi.see(d.biorthogonality);
                    adj.see(d.adjoint_residual);
                    orig.see(d.original_residual);
                    comp.see(d.completeness.unwrap_or(f64::NAN));
                    weight.see(d.weight_identity.unwrap_or(f64::NAN));
                }
                Err(e) => failures.push(format!("{} channel {channel}: {e}", inst.seed)),
            }
        }
        count += 1;
    }
    Verdict {
        passed: failures.is_empty()
            && count == suite.len()
            && bi.0 <= 1e-9
            && comp.0 <= 1e-8
            && adj.0 <= 1e-9
            && orig.0 <= 1e-8,
        detail: format!(
            "{count} instances × 2 channels, biorthogonality {:.1e} ≤ 1e-9, completeness {:.1e} ≤ 1e-8, adjoint residual {:.1e} ≤ 1e-9, energy-dependent equation residual {:.1e} ≤ 1e-8 (weight identity {:.1e}){}",
            bi.0,
            comp.0,
            adj.0,
            orig.0,
            weight.0,
            failure_note(&failures)
        ),
    }
}

fn scattering_problem(n: usize, second_band: bool) -> TwoChannelProblem {
    let a1 = SpectralOperator::new(vec![], vec![Band::new(0.0, 1.0, n)]).expect("band");
    let a2 = if second_band {
        SpectralOperator::new(vec![], vec![Band::new(2.0, 3.0, n)]).expect("band")
    } else {
        SpectralOperator::discrete_only(&[2.0]).expect("point")
    };
    KernelSpec {
        family: KernelFamily::Gaussian { width: 1.0 },
        strength: 0.2,
        edge: 1.0,
        phase: 0.0,
    }
    .problem(a1, a2)
    .expect("kernel problem")
}

fn decreasing(v: &[f64]) -> bool {
    v.windows(2).all(|p| p[1] < p[0])
}

fn fmt_seq(v: &[f64]) -> String {
    v.iter()
        .map(|x| format!("{x:.1e}"))
        .collect::<Vec<_>>()
        .join(" → ")
}

fn criterion_scattering() -> Verdict {
    let start = Instant::now();
    let mut passed = true;
    let mut parts = Vec::new();
    for (name, second_band, levels) in [
        ("band-vs-discrete", false, [64, 128, 256]),
        ("band-vs-band", true, [64, 96, 128]),
    ] {
        let mut results: Vec<ScatteringResult> = Vec::new();
        for n in levels {
            let p = scattering_problem(n, second_band);
            let sol = solve_riccati(&p, &SolverOptions::default());
            match sol.map_err(|e| e.to_string()).and_then(|s| {
                scatter(&p, Some(&s), &ScatteringOptions::default()).map_err(|e| e.to_string())
            }) {
                Ok(r) => results.push(r),
                Err(e) => {
                    passed = false;
                    parts.push(format!("{name} n={n}: {e}"));
                }
            }
        }
        if results.len() != levels.len() {
            continue;
        }
        let unitarity: Vec<f64> = results.iter().map(|r| r.max_unitarity_defect).collect();
        let onshell: Vec<f64> = results
            .iter()
            .map(|r| r.relative_onshell_defect().unwrap_or(f64::NAN))
            .collect();
        let wave: Vec<f64> = results
            .iter()
            .map(|r| r.wave_operators.as_ref().map_or(f64::NAN, |w| w.defect))
            .collect();
        let ok = unitarity[0] <= 1e-3
            && decreasing(&unitarity)
            && onshell[0] <= 1e-3
            && decreasing(&onshell)
            && wave.iter().all(|w| *w <= 1e-3);
        passed &= ok;
        parts.push(format!(
            "{name} n={levels:?}: ‖s*s−1‖ {} (≤ 1e-3, decreasing), on-shell |t−T|/max|T| {} (≤ 1e-3, decreasing), Ψ⁻*XΨ⁺ vs s {} (≤ 1e-3)",
            fmt_seq(&unitarity),
            fmt_seq(&onshell),
            fmt_seq(&wave)
        ));
    }
    let elapsed = start.elapsed();
    passed &= elapsed < Duration::from_secs(120);
    parts.push(format!("{:.1} s < 120 s", elapsed.as_secs_f64()));
    Verdict {
        passed,
        detail: parts.join("; "),
    }
}

fn criterion_negative_controls() -> Verdict {
    let overlap = TwoChannelProblem::from_matrices(
        &[0.0, 1.0],
        &[1.0],
        CMatrix::from_element(2, 1, Complex64::new(0.1, 0.0)),
    )
    .expect("overlapping spectra are representable");
    let gap_rejected = matches!(
        solve_riccati(&overlap, &SolverOptions::default()),
        Err(SolverError::Gap { .. })
    );
    let strong = TwoChannelProblem::from_matrices(
        &[0.0],
        &[2.0],
        CMatrix::from_element(1, 1, Complex64::new(1.2, 0.0)),
    )
    .expect("scalar problem");
    let file = ProblemFile::from_problem(&strong, None, None);
    let labeled = match run_file(
        &file,
        "uncertified",
        &RunConfig::new("uncertified", vec![Stage::Verify]),
    ) {
        Ok(r) => !r.summary.certified && r.solve.as_ref().is_some_and(|s| !s.certified),
        Err(_) => false,
    };
    let overlap_file = ProblemFile::from_problem(&overlap, None, None);
    let exit = run_file(
        &overlap_file,
        "overlap",
        &RunConfig::new("overlap", vec![Stage::Solve]),
    )
    .map(|r| r.summary.outcome.exit_code())
    .unwrap_or(-1);
    Verdict {
        passed: gap_rejected && labeled && exit == 2,
        detail: format!(
            "d₀ = 0 rejected with gap error: {gap_rejected} (harness exit code {exit}), ‖B‖₂ = 1.2 ≥ d₀/2 run and labeled uncertified: {labeled}"
        ),
    }
}

fn main() {
    let mut all = true;
    all &= report(1, "scalar closed form", &criterion_scalar());
    let (suite, solve_time) = build_suite();
    all &= report(
        2,
        "certified random suite",
        &criterion_convergence(&suite, solve_time),
    );
    let (similarity, self_adjoint) = criteria_similarity_and_self_adjointness(&suite);
    all &= report(3, "similarity suite", &similarity);
    all &= report(4, "self-adjointness suite", &self_adjoint);
    all &= report(5, "spectral partition suite", &criterion_partition(&suite));
    all &= report(6, "eigen-system suite", &criterion_eigensystem(&suite));
    all &= report(7, "scattering suite", &criterion_scattering());
    all &= report(8, "negative controls", &criterion_negative_controls());
    println!(
        "acceptance: {}",
        if all {
            "all criteria PASS"
        } else {
            "FAILURES present"
        }
    );
    if !all {
        std::process::exit(1);
    }
}

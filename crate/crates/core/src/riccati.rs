//! Fixed-point solution of the stationary Riccati equation
//! `Q A₁ − A₂ Q + Q B₁₂ Q = B₂₁` for the graph operator `Q = Q₂₁`.

use crate::linalg::{self, c, CMatrix, CVector};
use crate::model::{assemble_full, TwoChannelProblem};
use nalgebra::linalg::{Schur, LU};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error("channel spectra are not separated (gap d0 = {gap})")]
    Gap { gap: f64 },
    #[error("resolvent of A1 + B12 X is singular at channel-2 energy mu = {mu} (index {index})")]
    Singular { mu: f64, index: usize },
    #[error("fixed-point iteration did not converge in {iterations} iterations (last step {step:e}, residual {residual:e})")]
    NotConverged {
        iterations: usize,
        step: f64,
        residual: f64,
        history: Vec<IterationRecord>,
    },
    #[error("invalid solver option: {0}")]
    InvalidOption(String),
}

/// How the per-μ resolvents inside the contraction map are realized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ResolventStrategy {
    /// Dense LU for small channel-2 dimension, Schur otherwise.
    #[default]
    Auto,
    /// One dense LU factorization of `(A₁ + B₁₂X − μ)ᵀ` per channel-2 point.
    Lu,
    /// One complex Schur factorization of `A₁ + B₁₂X` per iteration, then a
    /// triangular solve per channel-2 point.
    Schur,
}

const AUTO_LU_LIMIT: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub delta: f64,
    pub strategy: ResolventStrategy,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            tol: 1e-12,
            max_iter: 200,
            delta: 1.0,
            strategy: ResolventStrategy::Auto,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationRecord {
    pub k: usize,
    pub step_norm: f64,
    pub residual: f64,
    pub iterate_norm: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Certificate {
    pub delta: f64,
    /// `d₀ · min{1/(1+δ), δ/(1+δ²)}`.
    pub bound: f64,
    pub hs_norm: f64,
    pub passed: bool,
    /// The δ = 1 bound `d₀/2`.
    pub optimal_bound: f64,
}

/// Checks the contraction condition for a ball of radius `delta`.
pub fn certify_contraction(problem: &TwoChannelProblem, delta: f64) -> Certificate {
    let d0 = problem.gap();
    let factor = (1.0 / (1.0 + delta)).min(delta / (1.0 + delta * delta));
    let bound = d0 * factor;
    let hs_norm = problem.hs_norm();
    Certificate {
        delta,
        bound,
        hs_norm,
        passed: delta > 0.0 && hs_norm < bound,
        optimal_bound: 0.5 * d0,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RiccatiSolution {
    pub q21: CMatrix,
    pub iterations: usize,
    pub final_step_norm: f64,
    pub riccati_residual: f64,
    /// Whether `‖B‖₂ < d₀/2` held.
    pub certified: bool,
    pub certificate: Certificate,
    pub history: Vec<IterationRecord>,
}

impl RiccatiSolution {
    pub fn q12(&self) -> CMatrix {
        -self.q21.adjoint()
    }
}

/// `‖Q A₁ − A₂ Q + Q B₁₂ Q − B₂₁‖`.
pub fn riccati_residual(problem: &TwoChannelProblem, q: &CMatrix) -> f64 {
    linalg::op_norm(&riccati_residual_matrix(problem, q))
}

fn riccati_residual_matrix(problem: &TwoChannelProblem, q: &CMatrix) -> CMatrix {
    let b12 = problem.b12().weighted();
    let mut r = q * &b12 * q - b12.adjoint();
    let p1 = problem.a1().points();
    let p2 = problem.a2().points();
    for i in 0..q.nrows() {
        for j in 0..q.ncols() {
            r[(i, j)] += q[(i, j)] * c(p1[j] - p2[i]);
        }
    }
    r
}

/// One application of the contraction map: row μ of `F(X)` is
/// `B₂₁(μ, ·) (A₁ + B₁₂ X − μ)^{-1}`.
pub fn contraction_map(problem: &TwoChannelProblem, x: &CMatrix) -> Result<CMatrix, SolverError> {
    contraction_map_with(problem, x, ResolventStrategy::Auto)
}

pub fn contraction_map_with(
    problem: &TwoChannelProblem,
    x: &CMatrix,
    strategy: ResolventStrategy,
) -> Result<CMatrix, SolverError> {
    let (n1, n2) = problem.dims();
    let b12 = problem.b12().weighted();
    let b21 = b12.adjoint();
    let mut h1 = &b12 * x;
    for (i, p) in problem.a1().points().iter().enumerate() {
        h1[(i, i)] += c(*p);
    }
    let scale = 1.0 + linalg::max_abs(&h1);
    let small = 1e-13 * scale;
    let mus = problem.a2().points();
    let strategy = match strategy {
        ResolventStrategy::Auto if n2 <= AUTO_LU_LIMIT => ResolventStrategy::Lu,
        ResolventStrategy::Auto => ResolventStrategy::Schur,
        s => s,
    };

    let mut f = CMatrix::zeros(n2, n1);
    match strategy {
        ResolventStrategy::Lu | ResolventStrategy::Auto => {
            let h1t = h1.transpose();
            for (row, mu) in mus.iter().enumerate() {
                let mut m = h1t.clone();
                for i in 0..n1 {
                    m[(i, i)] -= c(*mu);
                }
                let lu = LU::new(m);
                let u = lu.u();
                if (0..n1).any(|i| u[(i, i)].norm() < small) {
                    return Err(SolverError::Singular {
                        mu: *mu,
                        index: row,
                    });
                }
                let rhs: CVector = b21.row(row).transpose();
                let y = lu.solve(&rhs).ok_or(SolverError::Singular {
                    mu: *mu,
                    index: row,
                })?;
                f.set_row(row, &y.transpose());
            }
        }
        ResolventStrategy::Schur => {
            if n1 == 0 {
                return Ok(f);
            }
            let (z, t) = Schur::new(h1).unpack();
            // row-vector solve y (T − μ) = b Z, i.e. (T − μ)ᵀ yᵀ = (b Z)ᵀ
            let bz = &b21 * &z;
            let mut y = CMatrix::zeros(n2, n1);
            for (row, mu) in mus.iter().enumerate() {
                for j in 0..n1 {
                    let mut s = bz[(row, j)];
                    for i in 0..j {
                        s -= y[(row, i)] * t[(i, j)];
                    }
                    let d = t[(j, j)] - c(*mu);
                    if d.norm() < small {
                        return Err(SolverError::Singular {
                            mu: *mu,
                            index: row,
                        });
                    }
                    y[(row, j)] = s / d;
                }
            }
            f = y * z.adjoint();
        }
    }
    Ok(f)
}

/// Iterates `X_{k+1} = F(X_k)` from `X₀ = 0`.
pub fn solve_riccati(
    problem: &TwoChannelProblem,
    options: &SolverOptions,
) -> Result<RiccatiSolution, SolverError> {
    if !(options.tol > 0.0) {
        return Err(SolverError::InvalidOption(format!(
            "tol must be positive, got {}",
            options.tol
        )));
    }
    if !(options.delta > 0.0) {
        return Err(SolverError::InvalidOption(format!(
            "delta must be positive, got {}",
            options.delta
        )));
    }
    if options.max_iter == 0 {
        return Err(SolverError::InvalidOption(
            "max_iter must be at least 1".into(),
        ));
    }
    let gap = problem.gap();
    if !(gap > 0.0) {
        return Err(SolverError::Gap { gap });
    }

    let certificate = certify_contraction(problem, options.delta);
    let certified = problem.hs_norm() < certificate.optimal_bound;
    let (n1, n2) = problem.dims();
    let residual_tol = options.tol * (1.0 + problem.a1().norm() + problem.a2().norm());

    let mut x = CMatrix::zeros(n2, n1);
    let mut history = Vec::new();
    let mut step = f64::INFINITY;
    let mut residual = f64::INFINITY;
    for k in 1..=options.max_iter {
        let next = contraction_map_with(problem, &x, options.strategy)?;
        step = linalg::op_norm(&(&next - &x));
        x = next;
        residual = riccati_residual(problem, &x);
        history.push(IterationRecord {
            k,
            step_norm: step,
            residual,
            iterate_norm: linalg::op_norm(&x),
        });
        if !step.is_finite() {
            break;
        }
        if step < options.tol && residual <= residual_tol {
            return Ok(RiccatiSolution {
                q21: x,
                iterations: k,
                final_step_norm: step,
                riccati_residual: residual,
                certified,
                certificate,
                history,
            });
        }
    }
    Err(SolverError::NotConverged {
        iterations: history.len(),
        step,
        residual,
        history,
    })
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("eigenvalue {value} is equidistant from both channel spectra")]
    Ambiguous { value: f64 },
    #[error("eigenvalue {value} lies farther than d0/2 from both channel spectra")]
    Unaffiliated { value: f64 },
    #[error("{found} eigenvalues affiliate with channel 1, expected {expected}")]
    CountMismatch { found: usize, expected: usize },
    #[error("projector block P11 is singular")]
    SingularBlock,
    #[error("channel spectra are not separated (gap d0 = {gap})")]
    Gap { gap: f64 },
}

/// Recovers `Q₂₁` from the spectral projector of the full Hamiltonian onto
/// the eigenvectors lying within `d₀/2` of `σ₁`: `Q₂₁ = P₂₁ P₁₁^{-1}`.
pub fn oracle_graph_from_projector(problem: &TwoChannelProblem) -> Result<CMatrix, OracleError> {
    let d0 = problem.gap();
    if !(d0 > 0.0) {
        return Err(OracleError::Gap { gap: d0 });
    }
    let (n1, n2) = problem.dims();
    let (values, vectors) = linalg::hermitian_eigen(&assemble_full(problem));
    let mut chosen = Vec::new();
    for (k, z) in values.iter().enumerate() {
        let d1 = problem.a1().distance_to(*z);
        let d2 = problem.a2().distance_to(*z);
        let near1 = d1 < 0.5 * d0;
        let near2 = d2 < 0.5 * d0;
        if d1 == d2 {
            return Err(OracleError::Ambiguous { value: *z });
        }
        match (near1, near2) {
            (true, false) => chosen.push(k),
            (false, true) => {}
            _ => return Err(OracleError::Unaffiliated { value: *z }),
        }
    }
    if chosen.len() != n1 {
        return Err(OracleError::CountMismatch {
            found: chosen.len(),
            expected: n1,
        });
    }
    let n = n1 + n2;
    let v = CMatrix::from_fn(n, n1, |i, j| vectors[(i, chosen[j])]);
    let p = &v * v.adjoint();
    let p11 = p.view((0, 0), (n1, n1)).into_owned();
    let p21 = p.view((n1, 0), (n2, n1)).into_owned();
    let smin = p11
        .singular_values()
        .iter()
        .fold(f64::INFINITY, |m, s| m.min(*s));
    if !(smin > 1e-12) {
        return Err(OracleError::SingularBlock);
    }
    // Q P11 = P21  ⇔  P11 Qᴴ = P21ᴴ, since P11 is Hermitian
    let qh = LU::new(p11)
        .solve(&p21.adjoint())
        .ok_or(OracleError::SingularBlock)?;
    Ok(qh.adjoint())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::ZERO;
    use crate::model::{Band, CouplingBlock, SpectralOperator};
    use num_complex::Complex64;
    use proptest::prelude::*;

    fn scalar() -> TwoChannelProblem {
        TwoChannelProblem::from_matrices(&[0.0], &[2.0], CMatrix::from_element(1, 1, c(0.5)))
            .unwrap()
    }

    const Q_SCALAR: f64 = -0.2360679774997897; // 2 − √5

    #[test]
    fn scalar_first_iterate() {
        let f = contraction_map(&scalar(), &CMatrix::zeros(1, 1)).unwrap();
        assert!((f[(0, 0)] - c(-0.25)).norm() < 1e-15);
    }

    #[test]
    fn scalar_fixed_point() {
        let q = CMatrix::from_element(1, 1, c(2.0 - 5f64.sqrt()));
        let f = contraction_map(&scalar(), &q).unwrap();
        assert!((f - &q).norm() < 1e-12);
    }

    #[test]
    fn scalar_solution() {
        let sol = solve_riccati(&scalar(), &SolverOptions::default()).unwrap();
        assert!((sol.q21[(0, 0)] - c(Q_SCALAR)).norm() < 1e-12);
        assert!(sol.certified);
        assert!(sol.riccati_residual < 1e-12);
        let oracle = oracle_graph_from_projector(&scalar()).unwrap();
        assert!((oracle[(0, 0)] - c(Q_SCALAR)).norm() < 1e-12);
    }

    #[test]
    fn zero_coupling() {
        let p =
            TwoChannelProblem::from_matrices(&[0.0, 1.0], &[3.0], CMatrix::zeros(2, 1)).unwrap();
        let x = CMatrix::from_element(1, 2, c(0.3));
        assert_eq!(contraction_map(&p, &x).unwrap(), CMatrix::zeros(1, 2));
        let sol = solve_riccati(&p, &SolverOptions::default()).unwrap();
        assert_eq!(sol.iterations, 1);
        assert_eq!(sol.q21, CMatrix::zeros(1, 2));
        assert_eq!(
            oracle_graph_from_projector(&p).unwrap(),
            CMatrix::zeros(1, 2)
        );
    }

    #[test]
    fn certificate_examples() {
        let p = scalar();
        let one = certify_contraction(&p, 1.0);
        assert!((one.bound - 1.0).abs() < 1e-15);
        assert!(one.passed);
        let two = certify_contraction(&p, 2.0);
        assert!((two.bound - 2.0 / 3.0).abs() < 1e-15);
        let zero = TwoChannelProblem::from_matrices(&[0.0], &[2.0], CMatrix::zeros(1, 1)).unwrap();
        for delta in [0.01, 0.5, 1.0, 7.0] {
            assert!(certify_contraction(&zero, delta).passed);
        }
    }

    #[test]
    fn overlapping_spectra_rejected() {
        let p =
            TwoChannelProblem::from_matrices(&[0.0, 1.0], &[1.0], CMatrix::zeros(2, 1)).unwrap();
        assert_eq!(
            solve_riccati(&p, &SolverOptions::default()).unwrap_err(),
            SolverError::Gap { gap: 0.0 }
        );
    }

    #[test]
    fn singular_resolvent_detected() {
        let p = scalar();
        // A₁ + B₁₂ X = 2 = μ for X = 4
        let x = CMatrix::from_element(1, 1, c(4.0));
        for strategy in [ResolventStrategy::Lu, ResolventStrategy::Schur] {
            assert!(matches!(
                contraction_map_with(&p, &x, strategy),
                Err(SolverError::Singular { index: 0, .. })
            ));
        }
    }

    #[test]
    fn non_convergence_carries_history() {
        let options = SolverOptions {
            max_iter: 2,
            ..SolverOptions::default()
        };
        match solve_riccati(&scalar(), &options) {
            Err(SolverError::NotConverged { history, .. }) => assert_eq!(history.len(), 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn strategies_agree_on_band_instance() {
        let a1 = SpectralOperator::new(vec![-0.5], vec![Band::new(0.0, 1.0, 12)]).unwrap();
        let a2 = SpectralOperator::new(vec![3.0], vec![Band::new(2.0, 2.5, 9)]).unwrap();
        let entries = CMatrix::from_fn(a1.dim(), a2.dim(), |i, j| {
            if a1.is_endpoint(i) || a2.is_endpoint(j) {
                ZERO
            } else {
                Complex64::new(0.2, 0.1 * (i as f64 - j as f64).sin())
            }
        });
        let block = CouplingBlock::from_kernel(entries, &a1, &a2).unwrap();
        let p = TwoChannelProblem::new(a1, a2, block).unwrap();
        let x = CMatrix::from_fn(p.dims().1, p.dims().0, |i, j| {
            Complex64::new(0.01 * (i + j) as f64, -0.02)
        });
        let lu = contraction_map_with(&p, &x, ResolventStrategy::Lu).unwrap();
        let schur = contraction_map_with(&p, &x, ResolventStrategy::Schur).unwrap();
        assert!((lu - schur).norm() < 1e-12);
    }

    #[test]
    fn mirrored_problem_gives_adjoint_solution() {
        let b = CMatrix::from_row_slice(
            2,
            3,
            &[
                Complex64::new(0.2, 0.1),
                c(-0.1),
                Complex64::new(0.0, 0.3),
                c(0.05),
                Complex64::new(0.1, -0.2),
                c(0.15),
            ],
        );
        let p = TwoChannelProblem::from_matrices(&[-1.0, 0.0], &[2.0, 2.5, 4.0], b).unwrap();
        let opts = SolverOptions::default();
        let q21 = solve_riccati(&p, &opts).unwrap().q21;
        let q12 = solve_riccati(&p.mirrored(), &opts).unwrap().q21;
        assert!((q12 + q21.adjoint()).norm() < 1e-8);
    }

    fn instance() -> impl Strategy<Value = TwoChannelProblem> {
        (1usize..5, 1usize..5, 0.05f64..0.45, any::<u64>())
            .prop_map(|(n1, n2, ratio, seed)| crate::random::random_problem(n1, n2, ratio, seed))
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn certified_runs_satisfy_solver_invariants(p in instance()) {
            let opts = SolverOptions::default();
            let sol = solve_riccati(&p, &opts).unwrap();
            prop_assert!(sol.certified);
            let scale = 1.0 + p.a1().norm() + p.a2().norm();
            prop_assert!(sol.riccati_residual <= opts.tol * scale);
            let f = contraction_map(&p, &sol.q21).unwrap();
            prop_assert!(linalg::op_norm(&(f - &sol.q21)) <= 10.0 * opts.tol);
            for rec in &sol.history {
                prop_assert!(rec.iterate_norm <= 1.0 + 1e-12);
            }
            let hs = p.hs_norm();
            let kappa = hs * hs / ((p.gap() - hs) * (p.gap() - hs));
            for w in sol.history.windows(2).skip(1) {
                if w[0].step_norm > 1e-13 {
                    prop_assert!(w[1].step_norm <= (kappa + 1e-6) * w[0].step_norm + 1e-14);
                }
            }
            let oracle = oracle_graph_from_projector(&p).unwrap();
            let qn = linalg::op_norm(&sol.q21);
            prop_assert!(linalg::op_norm(&(oracle - &sol.q21)) <= 1e-8 * (1.0 + qn));
            let q12 = solve_riccati(&p.mirrored(), &opts).unwrap().q21;
            prop_assert!(linalg::op_norm(&(q12 + sol.q21.adjoint())) <= 1e-8);
        }
    }
}

//! Energy-independent channel Hamiltonians `H_α = A_α + B_{αβ} Q_{βα}` and
//! the similarity transforms built from the graph operator.

use crate::linalg::{self, c, CMatrix, CVector, GeneralEigen};
use crate::model::{assemble_full, Channel, TwoChannelProblem};
use crate::riccati::RiccatiSolution;
use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EffectiveError {
    #[error("weight operator of channel {0} is not positive definite")]
    NotPositiveDefinite(Channel),
    #[error("dimension mismatch: vectors of length {got}, weight of size {expected}")]
    DimensionMismatch { got: usize, expected: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct EffectiveChannel {
    pub channel: Channel,
    /// `H_α = A_α + W_α`.
    pub h: CMatrix,
    /// `W_α = B_{αβ} Q_{βα}`.
    pub w: CMatrix,
    /// `X_α = I + Q_{αβ} Q_{αβ}*`.
    pub x_weight: CMatrix,
    /// `Q_{βα}`, mapping channel α into channel β.
    pub q_out: CMatrix,
    /// `Q_{αβ} = −Q_{βα}*`.
    pub q_in: CMatrix,
}

pub fn build_effective(
    problem: &TwoChannelProblem,
    solution: &RiccatiSolution,
    channel: Channel,
) -> EffectiveChannel {
    let (q_out, q_in) = match channel {
        Channel::One => (solution.q21.clone(), solution.q12()),
        Channel::Two => (solution.q12(), solution.q21.clone()),
    };
    let b = problem.coupling_from(channel);
    let w = &b * &q_out;
    let h = problem.channel(channel).matrix() + &w;
    let n = h.nrows();
    let x_weight = CMatrix::identity(n, n) + &q_in * q_in.adjoint();
    EffectiveChannel {
        channel,
        h,
        w,
        x_weight,
        q_out,
        q_in,
    }
}

/// `⟨X f, g⟩`.
pub fn weighted_inner_product(
    f: &CVector,
    g: &CVector,
    x_weight: &CMatrix,
) -> Result<Complex64, EffectiveError> {
    let n = x_weight.nrows();
    if f.len() != n || g.len() != n {
        return Err(EffectiveError::DimensionMismatch {
            got: f.len().max(g.len()),
            expected: n,
        });
    }
    Ok(linalg::inner(&(x_weight * f), g))
}

/// `H″ = X^{1/2} H X^{-1/2}`.
pub fn symmetrize(effective: &EffectiveChannel) -> Result<CMatrix, EffectiveError> {
    let (root, inv_root) = linalg::hpd_sqrt_pair(&effective.x_weight)
        .ok_or(EffectiveError::NotPositiveDefinite(effective.channel))?;
    Ok(&root * &effective.h * &inv_root)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlockDiagonalization {
    /// `𝒬 = [[I, Q₁₂], [Q₂₁, I]]`.
    pub q_full: CMatrix,
    pub q_full_inverse: CMatrix,
    /// `H′ = 𝒬^{-1} H 𝒬`.
    pub h_prime: CMatrix,
    /// Norm of the off-diagonal blocks of `H′`.
    pub defect: f64,
    /// Distance of the diagonal blocks of `H′` from `H₁`, `H₂`.
    pub block_mismatch: f64,
    /// Distance between the explicit inverse and a generic dense inverse.
    pub inverse_mismatch: f64,
}

fn stack(a: &CMatrix, b: &CMatrix, c_: &CMatrix, d: &CMatrix) -> CMatrix {
    let (n1, n2) = (a.nrows(), d.nrows());
    let mut m = CMatrix::zeros(n1 + n2, n1 + n2);
    m.view_mut((0, 0), (n1, n1)).copy_from(a);
    m.view_mut((0, n1), (n1, n2)).copy_from(b);
    m.view_mut((n1, 0), (n2, n1)).copy_from(c_);
    m.view_mut((n1, n1), (n2, n2)).copy_from(d);
    m
}

fn off_diagonal_norm(m: &CMatrix, n1: usize) -> f64 {
    let n2 = m.nrows() - n1;
    let mut off = m.clone();
    off.view_mut((0, 0), (n1, n1)).fill(c(0.0));
    off.view_mut((n1, n1), (n2, n2)).fill(c(0.0));
    linalg::op_norm(&off)
}

pub fn block_diagonalize(
    problem: &TwoChannelProblem,
    solution: &RiccatiSolution,
) -> Result<BlockDiagonalization, EffectiveError> {
    let (n1, n2) = problem.dims();
    let e1 = build_effective(problem, solution, Channel::One);
    let e2 = build_effective(problem, solution, Channel::Two);
    let q21 = &solution.q21;
    let q12 = solution.q12();
    let i1 = CMatrix::identity(n1, n1);
    let i2 = CMatrix::identity(n2, n2);
    let q_full = stack(&i1, &q12, q21, &i2);

    let x1_inv = e1
        .x_weight
        .clone()
        .try_inverse()
        .ok_or(EffectiveError::NotPositiveDefinite(Channel::One))?;
    let x2_inv = e2
        .x_weight
        .clone()
        .try_inverse()
        .ok_or(EffectiveError::NotPositiveDefinite(Channel::Two))?;
    let zero12 = CMatrix::zeros(n1, n2);
    let zero21 = CMatrix::zeros(n2, n1);
    let q_full_inverse =
        stack(&x1_inv, &zero12, &zero21, &x2_inv) * stack(&i1, &(-&q12), &(-q21), &i2);

    let h = assemble_full(problem);
    let h_prime = &q_full_inverse * &h * &q_full;
    let defect = off_diagonal_norm(&h_prime, n1);
    let block_mismatch = linalg::op_norm(&(h_prime.view((0, 0), (n1, n1)) - &e1.h))
        .max(linalg::op_norm(&(h_prime.view((n1, n1), (n2, n2)) - &e2.h)));
    let inverse_mismatch = match q_full.clone().try_inverse() {
        Some(generic) => linalg::op_norm(&(generic - &q_full_inverse)),
        None => f64::INFINITY,
    };
    Ok(BlockDiagonalization {
        q_full,
        q_full_inverse,
        h_prime,
        defect,
        block_mismatch,
        inverse_mismatch,
    })
}

/// `𝒬 X^{-1/2}` with `X = diag(X₁, X₂)`; unitary in exact arithmetic.
pub fn unitary_rescaling(
    problem: &TwoChannelProblem,
    solution: &RiccatiSolution,
) -> Result<CMatrix, EffectiveError> {
    let (n1, n2) = problem.dims();
    let e1 = build_effective(problem, solution, Channel::One);
    let e2 = build_effective(problem, solution, Channel::Two);
    let (_, r1) = linalg::hpd_sqrt_pair(&e1.x_weight)
        .ok_or(EffectiveError::NotPositiveDefinite(Channel::One))?;
    let (_, r2) = linalg::hpd_sqrt_pair(&e2.x_weight)
        .ok_or(EffectiveError::NotPositiveDefinite(Channel::Two))?;
    let q_full = stack(
        &CMatrix::identity(n1, n1),
        &solution.q12(),
        &solution.q21,
        &CMatrix::identity(n2, n2),
    );
    Ok(q_full * stack(&r1, &CMatrix::zeros(n1, n2), &CMatrix::zeros(n2, n1), &r2))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Triangularization {
    pub channel: Channel,
    /// `𝒪_α = [[I_α, 0], [Q_{βα}, I_β]]`, channel α ordered first.
    pub o_alpha: CMatrix,
    /// `𝒪_α^{-1} H 𝒪_α` in the same ordering.
    pub h_tri: CMatrix,
    /// Norm of the lower-left block.
    pub defect: f64,
    /// Distance of the diagonal blocks from `H_α` and `H_β*`.
    pub block_mismatch: f64,
}

pub fn triangularize(
    problem: &TwoChannelProblem,
    solution: &RiccatiSolution,
    channel: Channel,
) -> Triangularization {
    let eff = build_effective(problem, solution, channel);
    let other = channel.other();
    let na = problem.channel(channel).dim();
    let nb = problem.channel(other).dim();
    let b_ab = problem.coupling_from(channel);
    let h = stack(
        &problem.channel(channel).matrix(),
        &b_ab,
        &b_ab.adjoint(),
        &problem.channel(other).matrix(),
    );
    let ia = CMatrix::identity(na, na);
    let ib = CMatrix::identity(nb, nb);
    let zero = CMatrix::zeros(na, nb);
    let o_alpha = stack(&ia, &zero, &eff.q_out, &ib);
    let o_inverse = stack(&ia, &zero, &(-&eff.q_out), &ib);
    let h_tri = o_inverse * h * &o_alpha;
    let defect = linalg::op_norm(&h_tri.view((na, 0), (nb, na)).into_owned());
    let h_beta_adj = problem.channel(other).matrix() - &eff.q_out * &b_ab;
    let block_mismatch = linalg::op_norm(&(h_tri.view((0, 0), (na, na)) - &eff.h)).max(
        linalg::op_norm(&(h_tri.view((na, na), (nb, nb)) - h_beta_adj)),
    );
    Triangularization {
        channel,
        o_alpha,
        h_tri,
        defect,
        block_mismatch,
    }
}

/// Largest deviation after pairing sorted eigenvalues of `H₁ ⊕ H₂` with
/// those of the full Hamiltonian.
pub fn spectral_match(problem: &TwoChannelProblem, e1: &GeneralEigen, e2: &GeneralEigen) -> f64 {
    let (full, _) = linalg::hermitian_eigen(&assemble_full(problem));
    let mut effective: Vec<Complex64> = e1.values.iter().chain(&e2.values).copied().collect();
    effective.sort_by(|a, b| a.re.total_cmp(&b.re));
    if effective.len() != full.len() {
        return f64::INFINITY;
    }
    full.iter()
        .zip(&effective)
        .fold(0.0_f64, |m, (x, z)| m.max((z - c(*x)).norm()))
}

/// Per-channel invariants of one effective Hamiltonian.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelDiagnostics {
    pub channel: Channel,
    pub eigenvalues: Vec<Complex64>,
    /// Largest `|Im z|` among the eigenvalues.
    pub imaginary_residue: f64,
    /// Smallest eigenvalue of `X_α`.
    pub weight_min_eigenvalue: f64,
    /// `‖X H − H* X‖ / (‖X‖ ‖H‖)`.
    pub self_adjoint_defect: f64,
    /// `‖H″ − H″*‖ / ‖H″‖`.
    pub symmetrized_defect: f64,
    /// Largest eigenvalue distance between `H″` and `H_α`.
    pub symmetrized_spectrum_mismatch: f64,
    /// `max_j ‖W ψ_j − B (z_j − A_β)^{-1} B* ψ_j‖ / ‖ψ_j‖` over eigenpairs
    /// with `z_j` away from `σ_β`.
    pub v_consistency: f64,
    pub triangular_defect: f64,
    pub triangular_block_mismatch: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EffectiveDiagnostics {
    pub channels: [ChannelDiagnostics; 2],
    pub spectral_match: f64,
    pub block_diagonal_defect: f64,
    pub block_mismatch: f64,
    pub inverse_mismatch: f64,
    pub unitarity_defect: f64,
    /// Entrywise size of the Gram block between the two graph subspaces.
    pub subspace_orthogonality: f64,
    /// `‖H [I; Q₂₁] − [I; Q₂₁] H₁‖`.
    pub invariance_defect: f64,
}

/// Energy-dependent potential applied to a vector, `B_{αβ} (z − A_β)^{-1} B_{βα} ψ`.
///
/// Returns `None` when `z` sits on a spectral point of channel β.
pub fn energy_dependent_action(
    problem: &TwoChannelProblem,
    channel: Channel,
    z: Complex64,
    psi: &CVector,
) -> Option<CVector> {
    let b = problem.coupling_from(channel);
    let mut u = b.adjoint() * psi;
    for (k, mu) in problem.channel(channel.other()).points().iter().enumerate() {
        let d = z - c(*mu);
        if d.norm() == 0.0 {
            return None;
        }
        u[k] /= d;
    }
    Some(b * u)
}

fn channel_diagnostics(
    problem: &TwoChannelProblem,
    solution: &RiccatiSolution,
    channel: Channel,
    eig: &GeneralEigen,
) -> Result<ChannelDiagnostics, EffectiveError> {
    let eff = build_effective(problem, solution, channel);
    let (x_values, _) = linalg::hermitian_eigen(&eff.x_weight);
    let xh = &eff.x_weight * &eff.h;
    let scale = linalg::op_norm(&eff.x_weight) * linalg::op_norm(&eff.h);
    let self_adjoint_defect = ratio(linalg::op_norm(&(&xh - xh.adjoint())), scale);
    let h2 = symmetrize(&eff)?;
    let symmetrized_defect = ratio(linalg::hermiticity_defect(&h2), linalg::op_norm(&h2));
    let (sym_values, _) = linalg::hermitian_eigen(&h2);
    let symmetrized_spectrum_mismatch = sym_values
        .iter()
        .zip(&eig.values)
        .fold(0.0_f64, |m, (x, z)| m.max((z - c(*x)).norm()));

    let gap = problem.gap();
    let other = problem.channel(channel.other());
    let mut v_consistency = 0.0_f64;
    for (k, z) in eig.values.iter().enumerate() {
        if other.distance_to(z.re) < 1e-8 * gap {
            continue;
        }
        let psi = eig.vectors.column(k).into_owned();
        if let Some(v) = energy_dependent_action(problem, channel, *z, &psi) {
            v_consistency = v_consistency.max((&eff.w * &psi - v).norm() / psi.norm());
        }
    }
    let tri = triangularize(problem, solution, channel);
    Ok(ChannelDiagnostics {
        channel,
        eigenvalues: eig.values.clone(),
        imaginary_residue: eig.values.iter().fold(0.0_f64, |m, z| m.max(z.im.abs())),
        weight_min_eigenvalue: x_values.first().copied().unwrap_or(1.0),
        self_adjoint_defect,
        symmetrized_defect,
        symmetrized_spectrum_mismatch,
        v_consistency,
        triangular_defect: tri.defect,
        triangular_block_mismatch: tri.block_mismatch,
    })
}

fn ratio(a: f64, b: f64) -> f64 {
    if b > 0.0 {
        a / b
    } else {
        a
    }
}

pub fn verify_effective(
    problem: &TwoChannelProblem,
    solution: &RiccatiSolution,
) -> Result<EffectiveDiagnostics, EffectiveError> {
    let e1 = build_effective(problem, solution, Channel::One);
    let e2 = build_effective(problem, solution, Channel::Two);
    let eig1 = linalg::general_eigen(&e1.h);
    let eig2 = linalg::general_eigen(&e2.h);
    let c1 = channel_diagnostics(problem, solution, Channel::One, &eig1)?;
    let c2 = channel_diagnostics(problem, solution, Channel::Two, &eig2)?;
    let bd = block_diagonalize(problem, solution)?;
    let u = unitary_rescaling(problem, solution)?;
    let n = u.nrows();
    let unitarity_defect = linalg::op_norm(&(u.adjoint() * &u - CMatrix::identity(n, n)));

    let (n1, n2) = problem.dims();
    let q12 = solution.q12();
    let gram = &q12 + solution.q21.adjoint();
    let subspace_orthogonality = linalg::max_abs(&gram);
    let mut graph = CMatrix::zeros(n1 + n2, n1);
    graph.view_mut((0, 0), (n1, n1)).fill_with_identity();
    graph.view_mut((n1, 0), (n2, n1)).copy_from(&solution.q21);
    let invariance_defect = linalg::op_norm(&(assemble_full(problem) * &graph - &graph * &e1.h));

    Ok(EffectiveDiagnostics {
        spectral_match: spectral_match(problem, &eig1, &eig2),
        channels: [c1, c2],
        block_diagonal_defect: bd.defect,
        block_mismatch: bd.block_mismatch,
        inverse_mismatch: bd.inverse_mismatch,
        unitarity_defect,
        subspace_orthogonality,
        invariance_defect,
    })
}

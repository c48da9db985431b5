//! Eigenfunction systems of the effective Hamiltonians: channel partition of
//! the full spectrum, dual vectors, completeness and kernel smoothness.

use crate::effective::{build_effective, energy_dependent_action};
use crate::linalg::{self, c, CMatrix, CVector};
use crate::model::{assemble_full, Channel, PointKind, SpectralOperator, TwoChannelProblem};
use crate::riccati::RiccatiSolution;
use nalgebra::linalg::LU;
use num_complex::Complex64;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpectralError {
    #[error("eigenvalue {value} of H_{channel} lies on the spectrum of the other channel")]
    Resolvent { channel: Channel, value: f64 },
    #[error("eigenvalue cluster at {value} of H_{channel} is defective")]
    Defective { channel: Channel, value: f64 },
    #[error("channel {0} has continuous spectrum; the discrete relation does not apply")]
    NotDiscrete(Channel),
    #[error("full eigenvector at z = {value} is claimed by both channels")]
    Overlap { value: f64 },
    #[error("full eigenvector at z = {value} is claimed by no channel")]
    Orphan { value: f64 },
}

/// A component counts as an `H_α` eigenvector when its residual is below
/// this multiple of `‖u‖ (1 + |z|)`.
pub const AFFILIATION_TOL: f64 = 1e-6;
/// Components smaller than this are treated as absent.
pub const NEGLIGIBLE_COMPONENT: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct PartitionRow {
    pub value: f64,
    /// Relative eigen-residual of each channel component (`None` if the
    /// component is negligible).
    pub residuals: [Option<f64>; 2],
    pub claims: Vec<Channel>,
}

impl PartitionRow {
    pub fn label(&self) -> Option<Channel> {
        match self.claims.as_slice() {
            [only] => Some(*only),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PartitionReport {
    pub rows: Vec<PartitionRow>,
    pub counts: [usize; 2],
    pub overlaps: usize,
    pub orphans: usize,
}

impl PartitionReport {
    pub fn is_partition(&self) -> bool {
        self.overlaps == 0
            && self.orphans == 0
            && self.counts[0] + self.counts[1] == self.rows.len()
    }

    /// First violation as an error, if any.
    pub fn check(&self) -> Result<(), SpectralError> {
        for row in &self.rows {
            match row.claims.len() {
                0 => return Err(SpectralError::Orphan { value: row.value }),
                1 => {}
                _ => return Err(SpectralError::Overlap { value: row.value }),
            }
        }
        Ok(())
    }
}

/// Assigns every eigenvector `U_j` of the full Hamiltonian to the channel
/// whose component is an eigenvector of `H_α` with the same eigenvalue.
pub fn partition_spectrum(
    problem: &TwoChannelProblem,
    solution: &RiccatiSolution,
) -> PartitionReport {
    let (n1, n2) = problem.dims();
    let h1 = build_effective(problem, solution, Channel::One).h;
    let h2 = build_effective(problem, solution, Channel::Two).h;
    let (values, vectors) = linalg::hermitian_eigen(&assemble_full(problem));
    let mut rows = Vec::with_capacity(values.len());
    let mut counts = [0usize; 2];
    let (mut overlaps, mut orphans) = (0, 0);
    for (j, z) in values.iter().enumerate() {
        let u = vectors.column(j);
        let parts = [
            (Channel::One, &h1, u.rows(0, n1).into_owned()),
            (Channel::Two, &h2, u.rows(n1, n2).into_owned()),
        ];
        let mut residuals = [None, None];
        let mut claims = Vec::new();
        for (k, (channel, h, part)) in parts.into_iter().enumerate() {
            let norm = part.norm();
            if norm <= NEGLIGIBLE_COMPONENT {
                continue;
            }
            let r = (h * &part - &part * c(*z)).norm() / (norm * (1.0 + z.abs()));
            residuals[k] = Some(r);
            if r <= AFFILIATION_TOL {
                claims.push(channel);
            }
        }
        match claims.len() {
            0 => orphans += 1,
            1 => counts[claims[0].index() - 1] += 1,
            _ => overlaps += 1,
        }
        rows.push(PartitionRow {
            value: *z,
            residuals,
            claims,
        });
    }
    PartitionReport {
        rows,
        counts,
        overlaps,
        orphans,
    }
}

/// Right eigenvectors of `H_α` paired with their duals.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenSystem {
    pub channel: Channel,
    pub values: Vec<Complex64>,
    /// Unit-norm right eigenvectors `ψ_j`.
    pub right_vectors: CMatrix,
    /// `ψ̃_j = ψ_j − Q_{αβ} u_β` with `u_β = −(A_β − z_j)^{-1} B_{βα} ψ_j`.
    pub raw_dual_vectors: CMatrix,
    /// Duals rescaled within each cluster so that `⟨ψ_j, ψ̃_k⟩ = δ_jk`.
    pub dual_vectors: CMatrix,
    /// Cluster-wise Gram matrix `Ψ̃_rawᴴ Ψ`, zero across clusters.
    pub cluster_gram: CMatrix,
    pub clusters: Vec<std::ops::Range<usize>>,
}

/// Builds the biorthogonal system of channel `α`.
pub fn dual_system(
    problem: &TwoChannelProblem,
    solution: &RiccatiSolution,
    channel: Channel,
) -> Result<EigenSystem, SpectralError> {
    let eff = build_effective(problem, solution, channel);
    let eig = linalg::general_eigen(&eff.h);
    let other = problem.channel(channel.other());
    let b_ba = problem.coupling_from(channel).adjoint();
    let n = eff.h.nrows();
    let guard = 1e-8 * problem.gap();

    let mut raw = CMatrix::zeros(n, n);
    for (j, z) in eig.values.iter().enumerate() {
        if other.distance_to(z.re) <= guard {
            return Err(SpectralError::Resolvent {
                channel,
                value: z.re,
            });
        }
        let psi = eig.vectors.column(j).into_owned();
        let mut u = &b_ba * &psi;
        for (k, mu) in other.points().iter().enumerate() {
            u[k] /= *z - c(*mu);
        }
        // u_β = −(A_β − z)^{-1} B_{βα} ψ = (z − A_β)^{-1} B_{βα} ψ
        raw.set_column(j, &(psi - &eff.q_in * u));
    }

    let mut gram = CMatrix::zeros(n, n);
    let mut dual = CMatrix::zeros(n, n);
    for range in &eig.clusters {
        let len = range.len();
        let psi = eig.vectors.columns(range.start, len);
        let tilde = raw.columns(range.start, len);
        let g = tilde.adjoint() * psi;
        let scale = linalg::max_abs(&g);
        let inverse = LU::new(g.clone()).try_inverse();
        let inverse = match inverse {
            Some(inv) if scale > 0.0 && linalg::max_abs(&inv) * scale < 1e12 => inv,
            _ => {
                return Err(SpectralError::Defective {
                    channel,
                    value: eig.values[range.start].re,
                })
            }
        };
        gram.view_mut((range.start, range.start), (len, len))
            .copy_from(&g);
        dual.columns_mut(range.start, len)
            .copy_from(&(tilde * inverse.adjoint()));
    }

    Ok(EigenSystem {
        channel,
        values: eig.values,
        right_vectors: eig.vectors,
        raw_dual_vectors: raw,
        dual_vectors: dual,
        cluster_gram: gram,
        clusters: eig.clusters,
    })
}

/// `max_{j≠k} |⟨ψ_j, ψ̃_k⟩|` and `max_j |⟨ψ_j, ψ̃_j⟩ − 1|`.
pub fn biorthogonality_defect(system: &EigenSystem) -> (f64, f64) {
    let m = system.dual_vectors.adjoint() * &system.right_vectors;
    let mut off = 0.0_f64;
    let mut diag = 0.0_f64;
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            if i == j {
                diag = diag.max((m[(i, j)] - c(1.0)).norm());
            } else {
                off = off.max(m[(i, j)].norm());
            }
        }
    }
    (off, diag)
}

/// `‖Σ_j ψ_j ψ̃_jᴴ − I‖` for a purely discrete channel.
pub fn completeness_check(
    system: &EigenSystem,
    operator: &SpectralOperator,
) -> Result<f64, SpectralError> {
    if !operator.is_purely_discrete() {
        return Err(SpectralError::NotDiscrete(system.channel));
    }
    let n = system.right_vectors.nrows();
    let sum = &system.right_vectors * system.dual_vectors.adjoint();
    Ok(linalg::op_norm(&(sum - CMatrix::identity(n, n))))
}

/// `‖X_α − Σ_j ψ̃_j ψ̃_jᴴ‖` with each pair scaled symmetrically so that
/// `⟨ψ_j, ψ̃_j⟩ = 1` and `ψ̃_j` stays the dual of the rescaled `ψ_j`.
///
/// In matrix form the sum is `Ψ̃_raw G^{-1} Ψ̃_rawᴴ` with `G` the cluster Gram.
pub fn weight_identity_check(
    system: &EigenSystem,
    x_weight: &CMatrix,
    operator: &SpectralOperator,
) -> Result<f64, SpectralError> {
    if !operator.is_purely_discrete() {
        return Err(SpectralError::NotDiscrete(system.channel));
    }
    let mut sum = CMatrix::zeros(x_weight.nrows(), x_weight.ncols());
    for range in &system.clusters {
        let len = range.len();
        let tilde = system.raw_dual_vectors.columns(range.start, len);
        let g = system
            .cluster_gram
            .view((range.start, range.start), (len, len))
            .into_owned();
        let g_inv = LU::new(g).try_inverse().ok_or(SpectralError::Defective {
            channel: system.channel,
            value: system.values[range.start].re,
        })?;
        sum += tilde * g_inv * tilde.adjoint();
    }
    Ok(linalg::op_norm(&(x_weight - sum)))
}

/// `max_j ‖H_α* ψ̃_j − z̄_j ψ̃_j‖ / (‖ψ̃_j‖ (1 + |z_j|))`.
pub fn adjoint_residual(
    problem: &TwoChannelProblem,
    solution: &RiccatiSolution,
    system: &EigenSystem,
) -> f64 {
    let h_adj = build_effective(problem, solution, system.channel)
        .h
        .adjoint();
    let mut worst = 0.0_f64;
    for (j, z) in system.values.iter().enumerate() {
        let v = system.dual_vectors.column(j);
        let r = (&h_adj * v - v * z.conj()).norm() / (v.norm() * (1.0 + z.norm()));
        worst = worst.max(r);
    }
    worst
}

/// `max_j ‖(A_α + B_{αβ}(z_j − A_β)^{-1}B_{βα} − z_j) ψ_j‖ / ‖ψ_j‖`.
pub fn original_equation_residual(problem: &TwoChannelProblem, system: &EigenSystem) -> f64 {
    let a = problem.channel(system.channel).points();
    let mut worst = 0.0_f64;
    for (j, z) in system.values.iter().enumerate() {
        let psi: CVector = system.right_vectors.column(j).into_owned();
        let Some(v) = energy_dependent_action(problem, system.channel, *z, &psi) else {
            continue;
        };
        let mut r = v;
        for (k, x) in a.iter().enumerate() {
            r[k] += (c(*x) - z) * psi[k];
        }
        worst = worst.max(r.norm() / psi.norm());
    }
    worst
}

#[derive(Debug, Clone, PartialEq)]
pub struct EigenDiagnostics {
    pub channel: Channel,
    pub biorthogonality: f64,
    pub normalization: f64,
    pub adjoint_residual: f64,
    pub original_residual: f64,
    /// `None` for channels with continuous spectrum.
    pub completeness: Option<f64>,
    pub weight_identity: Option<f64>,
}

pub fn verify_eigensystem(
    problem: &TwoChannelProblem,
    solution: &RiccatiSolution,
    channel: Channel,
) -> Result<EigenDiagnostics, SpectralError> {
    let system = dual_system(problem, solution, channel)?;
    let op = problem.channel(channel);
    let (biorthogonality, normalization) = biorthogonality_defect(&system);
    let x = build_effective(problem, solution, channel).x_weight;
    let discrete = op.is_purely_discrete();
    Ok(EigenDiagnostics {
        channel,
        biorthogonality,
        normalization,
        adjoint_residual: adjoint_residual(problem, solution, &system),
        original_residual: original_equation_residual(problem, &system),
        completeness: if discrete {
            Some(completeness_check(&system, op)?)
        } else {
            None
        },
        weight_identity: if discrete {
            Some(weight_identity_check(&system, &x, op)?)
        } else {
            None
        },
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmoothnessStats {
    pub theta: f64,
    pub gamma: f64,
    /// `max |W(λ,λ′) − W(λ″,λ′)| / |λ − λ″|^γ` over node pairs of one band.
    pub holder_quotient: f64,
    /// `max (1+|λ|)^θ (1+|λ′|)^θ |W(λ,λ′)|`.
    pub decay: f64,
}

/// Sampled Hölder and decay statistics of the kernel of a weighted channel
/// operator `Ŵ` (entries are unweighted before measuring).
pub fn kernel_smoothness_probe(
    w_weighted: &CMatrix,
    operator: &SpectralOperator,
    theta: f64,
    gamma: f64,
) -> SmoothnessStats {
    let pts = operator.points();
    let wts = operator.weights();
    let n = pts.len();
    let kernel = CMatrix::from_fn(n, n, |i, j| {
        w_weighted[(i, j)] / c((wts[i] * wts[j]).sqrt())
    });
    let mut decay = 0.0_f64;
    for i in 0..n {
        for j in 0..n {
            let f = ((1.0 + pts[i].abs()) * (1.0 + pts[j].abs())).powf(theta);
            decay = decay.max(f * kernel[(i, j)].norm());
        }
    }
    let mut holder = 0.0_f64;
    for band in 0..operator.bands().len() {
        let range = operator.band_range(band);
        for i in range.clone() {
            for k in (i + 1)..range.end {
                debug_assert!(matches!(operator.kinds()[k], PointKind::Band { .. }));
                let denom = (pts[k] - pts[i]).abs().powf(gamma);
                for j in 0..n {
                    holder = holder.max((kernel[(i, j)] - kernel[(k, j)]).norm() / denom);
                }
            }
        }
    }
    SmoothnessStats {
        theta,
        gamma,
        holder_quotient: holder,
        decay,
    }
}

//! Channel Hamiltonians, coupling blocks and the assembled two-channel operator.
//!
//! Every operator acts on weight-normalized coordinates `f̂ = √w f`, so a
//! kernel `B(λ, μ)` sampled on quadrature grids becomes the matrix
//! `√w(λ) B(λ, μ) √w(μ)` and integral-operator products are plain matrix
//! products.

use crate::linalg::{self, c, CMatrix, ONE, ZERO};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("invalid spectrum: {0}")]
    InvalidSpectrum(String),
    #[error("empty spectrum in channel {0}")]
    EmptySpectrum(usize),
    #[error("dimension mismatch: {what} is {got}, expected {expected}")]
    DimensionMismatch {
        what: &'static str,
        got: String,
        expected: String,
    },
    #[error("coupling entry ({row}, {col}) touches a band endpoint but is {value:e}, not zero")]
    EndpointCoupling { row: usize, col: usize, value: f64 },
    #[error("non-finite coupling entry at ({row}, {col})")]
    NonFinite { row: usize, col: usize },
    #[error("I + N is not positive definite in channel {0}")]
    NotPositiveDefinite(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum QuadratureRule {
    #[default]
    Trapezoid,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Band {
    pub a: f64,
    pub b: f64,
    pub n: usize,
    pub rule: QuadratureRule,
}

impl Band {
    pub fn new(a: f64, b: f64, n: usize) -> Self {
        Band {
            a,
            b,
            n,
            rule: QuadratureRule::Trapezoid,
        }
    }

    pub fn spacing(&self) -> f64 {
        (self.b - self.a) / (self.n - 1) as f64
    }

    pub fn nodes(&self) -> Vec<f64> {
        let h = self.spacing();
        (0..self.n)
            .map(|k| {
                if k + 1 == self.n {
                    self.b
                } else {
                    self.a + h * k as f64
                }
            })
            .collect()
    }

    pub fn weights(&self) -> Vec<f64> {
        let h = self.spacing();
        (0..self.n)
            .map(|k| {
                if k == 0 || k + 1 == self.n {
                    0.5 * h
                } else {
                    h
                }
            })
            .collect()
    }

    pub fn contains(&self, x: f64) -> bool {
        self.a <= x && x <= self.b
    }
}

/// Where an index of a channel's coordinate space comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PointKind {
    Discrete,
    Band { band: usize, node: usize },
}

/// A self-adjoint channel Hamiltonian in diagonal representation.
///
/// Indices are laid out as the discrete eigenvalues first, followed by the
/// nodes of each band in order.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralOperator {
    discrete: Vec<f64>,
    bands: Vec<Band>,
    points: Vec<f64>,
    weights: Vec<f64>,
    kinds: Vec<PointKind>,
}

impl SpectralOperator {
    pub fn new(discrete: Vec<f64>, bands: Vec<Band>) -> Result<Self, ModelError> {
        if let Some(x) = discrete.iter().find(|x| !x.is_finite()) {
            return Err(ModelError::InvalidSpectrum(format!(
                "discrete eigenvalue {x} is not finite"
            )));
        }
        if discrete.windows(2).any(|p| p[1] < p[0]) {
            return Err(ModelError::InvalidSpectrum(
                "discrete eigenvalues must be listed in ascending order".into(),
            ));
        }
        for band in &bands {
            if !(band.a.is_finite() && band.b.is_finite() && band.a < band.b) {
                return Err(ModelError::InvalidSpectrum(format!(
                    "band ({}, {}) needs finite endpoints with a < b",
                    band.a, band.b
                )));
            }
            if band.n < 2 {
                return Err(ModelError::InvalidSpectrum(format!(
                    "band ({}, {}) needs at least 2 points, got {}",
                    band.a, band.b, band.n
                )));
            }
            if let Some(x) = discrete.iter().find(|x| band.contains(**x)) {
                return Err(ModelError::InvalidSpectrum(format!(
                    "discrete eigenvalue {x} lies inside band ({}, {})",
                    band.a, band.b
                )));
            }
        }
        for (i, p) in bands.iter().enumerate() {
            for q in &bands[i + 1..] {
                if p.a <= q.b && q.a <= p.b {
                    return Err(ModelError::InvalidSpectrum(format!(
                        "bands ({}, {}) and ({}, {}) overlap",
                        p.a, p.b, q.a, q.b
                    )));
                }
            }
        }

        let mut points = discrete.clone();
        let mut weights = vec![1.0; discrete.len()];
        let mut kinds = vec![PointKind::Discrete; discrete.len()];
        for (bi, band) in bands.iter().enumerate() {
            points.extend(band.nodes());
            weights.extend(band.weights());
            kinds.extend((0..band.n).map(|node| PointKind::Band { band: bi, node }));
        }
        Ok(SpectralOperator {
            discrete,
            bands,
            points,
            weights,
            kinds,
        })
    }

    pub fn discrete_only(values: &[f64]) -> Result<Self, ModelError> {
        Self::new(values.to_vec(), Vec::new())
    }

    pub fn dim(&self) -> usize {
        self.points.len()
    }

    pub fn discrete(&self) -> &[f64] {
        &self.discrete
    }

    pub fn bands(&self) -> &[Band] {
        &self.bands
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn kinds(&self) -> &[PointKind] {
        &self.kinds
    }

    pub fn is_purely_discrete(&self) -> bool {
        self.bands.is_empty()
    }

    /// True for the first and last node of a band.
    pub fn is_endpoint(&self, index: usize) -> bool {
        match self.kinds[index] {
            PointKind::Discrete => false,
            PointKind::Band { band, node } => node == 0 || node + 1 == self.bands[band].n,
        }
    }

    /// Index range of band `band` within the coordinate space.
    pub fn band_range(&self, band: usize) -> std::ops::Range<usize> {
        let start = self.discrete.len() + self.bands[..band].iter().map(|b| b.n).sum::<usize>();
        start..start + self.bands[band].n
    }

    /// Interior nodes of all bands, the admissible on-shell energies.
    pub fn interior_band_indices(&self) -> Vec<usize> {
        (0..self.dim())
            .filter(|&i| matches!(self.kinds[i], PointKind::Band { .. }) && !self.is_endpoint(i))
            .collect()
    }

    pub fn matrix(&self) -> CMatrix {
        linalg::diag(&self.points)
    }

    /// Operator norm, i.e. the largest spectral value in modulus.
    pub fn norm(&self) -> f64 {
        let d = self.discrete.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
        self.bands
            .iter()
            .fold(d, |m, b| m.max(b.a.abs()).max(b.b.abs()))
    }

    /// Distance from a real energy to the spectrum (bands count as intervals).
    pub fn distance_to(&self, x: f64) -> f64 {
        let d = self
            .discrete
            .iter()
            .fold(f64::INFINITY, |m, s| m.min((s - x).abs()));
        self.bands.iter().fold(d, |m, b| {
            let gap = if x < b.a {
                b.a - x
            } else if x > b.b {
                x - b.b
            } else {
                0.0
            };
            m.min(gap)
        })
    }

    fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// The coupling `B₁₂` as a sampled kernel with the weights of its index sets.
///
/// Rows are channel-1 indices, columns channel-2 indices.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingBlock {
    entries: CMatrix,
    row_weights: Vec<f64>,
    col_weights: Vec<f64>,
}

impl CouplingBlock {
    /// Builds a block from raw kernel values `B(λ, μ)`.
    pub fn from_kernel(
        entries: CMatrix,
        rows: &SpectralOperator,
        cols: &SpectralOperator,
    ) -> Result<Self, ModelError> {
        if entries.nrows() != rows.dim() || entries.ncols() != cols.dim() {
            return Err(ModelError::DimensionMismatch {
                what: "coupling matrix",
                got: format!("{}x{}", entries.nrows(), entries.ncols()),
                expected: format!("{}x{}", rows.dim(), cols.dim()),
            });
        }
        for i in 0..entries.nrows() {
            for j in 0..entries.ncols() {
                let v = entries[(i, j)];
                if !(v.re.is_finite() && v.im.is_finite()) {
                    return Err(ModelError::NonFinite { row: i, col: j });
                }
                if (rows.is_endpoint(i) || cols.is_endpoint(j)) && v != ZERO {
                    return Err(ModelError::EndpointCoupling {
                        row: i,
                        col: j,
                        value: v.norm(),
                    });
                }
            }
        }
        Ok(CouplingBlock {
            entries,
            row_weights: rows.weights().to_vec(),
            col_weights: cols.weights().to_vec(),
        })
    }

    /// Builds a block from its weight-normalized matrix `√w B √w`.
    pub fn from_weighted(
        weighted: &CMatrix,
        rows: &SpectralOperator,
        cols: &SpectralOperator,
    ) -> Result<Self, ModelError> {
        let (rw, cw) = (rows.weights(), cols.weights());
        if weighted.nrows() != rw.len() || weighted.ncols() != cw.len() {
            return Err(ModelError::DimensionMismatch {
                what: "coupling matrix",
                got: format!("{}x{}", weighted.nrows(), weighted.ncols()),
                expected: format!("{}x{}", rw.len(), cw.len()),
            });
        }
        let raw = CMatrix::from_fn(rw.len(), cw.len(), |i, j| {
            weighted[(i, j)] / c((rw[i] * cw[j]).sqrt())
        });
        Self::from_kernel(raw, rows, cols)
    }

    pub fn entries(&self) -> &CMatrix {
        &self.entries
    }

    pub fn row_weights(&self) -> &[f64] {
        &self.row_weights
    }

    pub fn col_weights(&self) -> &[f64] {
        &self.col_weights
    }

    pub fn weighted(&self) -> CMatrix {
        let (rw, cw) = (&self.row_weights, &self.col_weights);
        CMatrix::from_fn(rw.len(), cw.len(), |i, j| {
            self.entries[(i, j)] * c((rw[i] * cw[j]).sqrt())
        })
    }

    /// The block of the opposite direction, `B₂₁ = B₁₂*`.
    pub fn adjoint(&self) -> CouplingBlock {
        CouplingBlock {
            entries: self.entries.adjoint(),
            row_weights: self.col_weights.clone(),
            col_weights: self.row_weights.clone(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(|z| *z == ZERO)
    }
}

/// Weighted Hilbert–Schmidt norm `(Σ w_r w_c |B|²)^{1/2}`.
pub fn hilbert_schmidt_norm(block: &CouplingBlock) -> f64 {
    let mut sum = 0.0;
    for (i, wr) in block.row_weights.iter().enumerate() {
        for (j, wc) in block.col_weights.iter().enumerate() {
            sum += wr * wc * block.entries[(i, j)].norm_sqr();
        }
    }
    sum.sqrt()
}

/// `dist(σ₁, σ₂)`, with bands treated as closed intervals.
pub fn spectral_gap(a1: &SpectralOperator, a2: &SpectralOperator) -> Result<f64, ModelError> {
    if a1.is_empty() {
        return Err(ModelError::EmptySpectrum(1));
    }
    if a2.is_empty() {
        return Err(ModelError::EmptySpectrum(2));
    }
    let mut d = f64::INFINITY;
    for x in &a1.discrete {
        d = d.min(a2.distance_to(*x));
    }
    for band in &a1.bands {
        d = d.min(a2.distance_to(band.a)).min(a2.distance_to(band.b));
        for y in &a2.discrete {
            if band.contains(*y) {
                d = 0.0;
            }
        }
        for other in &a2.bands {
            if band.a <= other.b && other.a <= band.b {
                d = 0.0;
            }
        }
    }
    Ok(d)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TwoChannelProblem {
    a1: SpectralOperator,
    a2: SpectralOperator,
    b12: CouplingBlock,
    gap: f64,
    hs_norm: f64,
}

impl TwoChannelProblem {
    pub fn new(
        a1: SpectralOperator,
        a2: SpectralOperator,
        b12: CouplingBlock,
    ) -> Result<Self, ModelError> {
        if b12.row_weights.len() != a1.dim() || b12.col_weights.len() != a2.dim() {
            return Err(ModelError::DimensionMismatch {
                what: "coupling block",
                got: format!("{}x{}", b12.row_weights.len(), b12.col_weights.len()),
                expected: format!("{}x{}", a1.dim(), a2.dim()),
            });
        }
        let gap = spectral_gap(&a1, &a2)?;
        let hs_norm = hilbert_schmidt_norm(&b12);
        Ok(TwoChannelProblem {
            a1,
            a2,
            b12,
            gap,
            hs_norm,
        })
    }

    /// Scalar-matrix convenience constructor for purely discrete channels.
    pub fn from_matrices(d1: &[f64], d2: &[f64], b12: CMatrix) -> Result<Self, ModelError> {
        let a1 = SpectralOperator::discrete_only(d1)?;
        let a2 = SpectralOperator::discrete_only(d2)?;
        let block = CouplingBlock::from_kernel(b12, &a1, &a2)?;
        Self::new(a1, a2, block)
    }

    pub fn a1(&self) -> &SpectralOperator {
        &self.a1
    }

    pub fn a2(&self) -> &SpectralOperator {
        &self.a2
    }

    pub fn channel(&self, alpha: Channel) -> &SpectralOperator {
        match alpha {
            Channel::One => &self.a1,
            Channel::Two => &self.a2,
        }
    }

    pub fn b12(&self) -> &CouplingBlock {
        &self.b12
    }

    pub fn gap(&self) -> f64 {
        self.gap
    }

    pub fn hs_norm(&self) -> f64 {
        self.hs_norm
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.a1.dim(), self.a2.dim())
    }

    /// Weighted `B_{αβ}` for the given α (rows in channel α).
    pub fn coupling_from(&self, alpha: Channel) -> CMatrix {
        match alpha {
            Channel::One => self.b12.weighted(),
            Channel::Two => self.b12.weighted().adjoint(),
        }
    }

    /// Same problem with the channels exchanged.
    pub fn mirrored(&self) -> TwoChannelProblem {
        TwoChannelProblem {
            a1: self.a2.clone(),
            a2: self.a1.clone(),
            b12: self.b12.adjoint(),
            gap: self.gap,
            hs_norm: self.hs_norm,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Channel {
    One,
    Two,
}

impl Channel {
    pub fn other(self) -> Channel {
        match self {
            Channel::One => Channel::Two,
            Channel::Two => Channel::One,
        }
    }

    pub fn index(self) -> usize {
        match self {
            Channel::One => 1,
            Channel::Two => 2,
        }
    }

    pub fn from_index(i: usize) -> Option<Channel> {
        match i {
            1 => Some(Channel::One),
            2 => Some(Channel::Two),
            _ => None,
        }
    }
}

impl std::fmt::Display for Channel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.index())
    }
}

/// The full Hermitian matrix `[[A₁, B₁₂], [B₂₁, A₂]]` in weighted coordinates.
pub fn assemble_full(problem: &TwoChannelProblem) -> CMatrix {
    let (n1, n2) = problem.dims();
    let b = problem.b12.weighted();
    let mut h = CMatrix::zeros(n1 + n2, n1 + n2);
    for (i, x) in problem.a1.points.iter().enumerate() {
        h[(i, i)] = c(*x);
    }
    for (i, x) in problem.a2.points.iter().enumerate() {
        h[(n1 + i, n1 + i)] = c(*x);
    }
    h.view_mut((0, n1), (n1, n2)).copy_from(&b);
    h.view_mut((n1, 0), (n2, n1)).copy_from(&b.adjoint());
    h
}

/// Result of removing linear energy terms `z N_α` from a problem.
#[derive(Debug, Clone)]
pub struct ReducedProblem {
    pub problem: TwoChannelProblem,
    /// Maps original channel coordinates `u` to reduced ones, per channel.
    pub to_reduced: [CMatrix; 2],
    /// Inverse maps, reduced coordinates back to original ones.
    pub from_reduced: [CMatrix; 2],
}

/// Transforms `H u = z (I + N) u` into a standard problem.
///
/// Each channel with `N_α ≠ 0` becomes the discrete operator
/// `(I+N_α)^{-1/2} A_α (I+N_α)^{-1/2}` in its eigenbasis; channels with
/// `N_α = 0` keep their original representation.
pub fn reduce_linear_term(
    problem: &TwoChannelProblem,
    n1: &CMatrix,
    n2: &CMatrix,
) -> Result<ReducedProblem, ModelError> {
    let mut channels = Vec::with_capacity(2);
    let mut to = Vec::with_capacity(2);
    let mut from = Vec::with_capacity(2);
    for (k, (op, n)) in [(&problem.a1, n1), (&problem.a2, n2)]
        .into_iter()
        .enumerate()
    {
        let dim = op.dim();
        if n.nrows() != dim || n.ncols() != dim {
            return Err(ModelError::DimensionMismatch {
                what: "linear-term matrix",
                got: format!("{}x{}", n.nrows(), n.ncols()),
                expected: format!("{dim}x{dim}"),
            });
        }
        if n.iter().all(|z| *z == ZERO) {
            channels.push(op.clone());
            to.push(CMatrix::identity(dim, dim));
            from.push(CMatrix::identity(dim, dim));
            continue;
        }
        let shifted = CMatrix::identity(dim, dim) + n;
        let (root, inv_root) =
            linalg::hpd_sqrt_pair(&shifted).ok_or(ModelError::NotPositiveDefinite(k + 1))?;
        let a_prime = &inv_root * op.matrix() * &inv_root;
        let (values, vectors) = linalg::hermitian_eigen(&a_prime);
        channels.push(SpectralOperator::discrete_only(&values)?);
        to.push(vectors.adjoint() * &root);
        from.push(&inv_root * &vectors);
    }
    let b = problem.b12.weighted();
    let b_prime = from[0].adjoint() * b * &from[1];
    let a2 = channels.pop().expect("two channels");
    let a1 = channels.pop().expect("two channels");
    let block = CouplingBlock::from_weighted(&b_prime, &a1, &a2)?;
    let reduced = TwoChannelProblem::new(a1, a2, block)?;
    let from1 = from.remove(0);
    let from2 = from.remove(0);
    let to1 = to.remove(0);
    let to2 = to.remove(0);
    Ok(ReducedProblem {
        problem: reduced,
        to_reduced: [to1, to2],
        from_reduced: [from1, from2],
    })
}

/// Convenience: the `k`-th unit vector of length `n` as a complex column.
pub fn unit(n: usize, k: usize) -> linalg::CVector {
    let mut v = linalg::CVector::zeros(n);
    v[k] = ONE;
    v
}

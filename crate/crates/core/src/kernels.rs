//! Built-in coupling kernels sampled on channel grids.

use crate::linalg::CMatrix;
use crate::model::{CouplingBlock, ModelError, PointKind, SpectralOperator, TwoChannelProblem};
use num_complex::Complex64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum KernelFamily {
    /// `K = 1`.
    Constant,
    /// `K = exp(−(λ − μ)² / (2 width²))`.
    Gaussian { width: f64 },
    /// Rank one: `K = u(λ) u(μ)` with `u(x) = 1 / (1 + ((x − center)/width)²)`.
    Separable { center: f64, width: f64 },
}

impl KernelFamily {
    pub fn name(&self) -> &'static str {
        match self {
            KernelFamily::Constant => "constant",
            KernelFamily::Gaussian { .. } => "gaussian",
            KernelFamily::Separable { .. } => "separable",
        }
    }

    fn eval(&self, x: f64, y: f64) -> f64 {
        match *self {
            KernelFamily::Constant => 1.0,
            KernelFamily::Gaussian { width } => (-(x - y).powi(2) / (2.0 * width * width)).exp(),
            KernelFamily::Separable { center, width } => {
                let u = |t: f64| 1.0 / (1.0 + ((t - center) / width).powi(2));
                u(x) * u(y)
            }
        }
    }
}

/// `B₁₂(λ, μ) = strength · e(λ) e(μ) · K(λ, μ) · exp(i phase (λ − μ))`, where
/// the edge profile `e` is `((λ − a)(b − λ)·4/(b − a)²)^edge` on a band
/// `(a, b)` and `1` on discrete points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelSpec {
    pub family: KernelFamily,
    pub strength: f64,
    pub edge: f64,
    pub phase: f64,
}

fn edge_profile(op: &SpectralOperator, index: usize, power: f64) -> f64 {
    match op.kinds()[index] {
        PointKind::Discrete => 1.0,
        PointKind::Band { band, .. } => {
            let b = &op.bands()[band];
            let x = op.points()[index];
            let base = ((x - b.a) * (b.b - x) * 4.0 / (b.b - b.a).powi(2)).max(0.0);
            if base == 0.0 {
                0.0
            } else {
                base.powf(power)
            }
        }
    }
}

impl KernelSpec {
    pub fn validate(&self) -> Result<(), ModelError> {
        let bad = |msg: String| Err(ModelError::InvalidSpectrum(msg));
        if !self.strength.is_finite() {
            return bad(format!("kernel strength {} is not finite", self.strength));
        }
        if !(self.edge > 0.0 && self.edge.is_finite()) {
            return bad(format!(
                "kernel edge exponent must be positive, got {}",
                self.edge
            ));
        }
        if !self.phase.is_finite() {
            return bad(format!("kernel phase {} is not finite", self.phase));
        }
        match self.family {
            KernelFamily::Gaussian { width } | KernelFamily::Separable { width, .. }
                if !(width > 0.0 && width.is_finite()) =>
            {
                bad(format!("kernel width must be positive, got {width}"))
            }
            KernelFamily::Separable { center, .. } if !center.is_finite() => {
                bad(format!("kernel center {center} is not finite"))
            }
            _ => Ok(()),
        }
    }

    /// Raw kernel values on the index sets of the two channels.
    pub fn sample(
        &self,
        a1: &SpectralOperator,
        a2: &SpectralOperator,
    ) -> Result<CMatrix, ModelError> {
        self.validate()?;
        let (p1, p2) = (a1.points(), a2.points());
        let e1: Vec<f64> = (0..p1.len())
            .map(|i| edge_profile(a1, i, self.edge))
            .collect();
        let e2: Vec<f64> = (0..p2.len())
            .map(|j| edge_profile(a2, j, self.edge))
            .collect();
        Ok(CMatrix::from_fn(p1.len(), p2.len(), |i, j| {
            let (x, y) = (p1[i], p2[j]);
            let magnitude = self.strength * e1[i] * e2[j] * self.family.eval(x, y);
            Complex64::from_polar(magnitude, self.phase * (x - y))
        }))
    }

    pub fn problem(
        &self,
        a1: SpectralOperator,
        a2: SpectralOperator,
    ) -> Result<TwoChannelProblem, ModelError> {
        let entries = self.sample(&a1, &a2)?;
        let block = CouplingBlock::from_kernel(entries, &a1, &a2)?;
        TwoChannelProblem::new(a1, a2, block)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Band;

    #[test]
    fn kernels_vanish_at_band_endpoints() {
        let a1 = SpectralOperator::new(vec![-1.0], vec![Band::new(0.0, 1.0, 9)]).unwrap();
        let a2 = SpectralOperator::new(vec![2.0], vec![Band::new(3.0, 4.0, 5)]).unwrap();
        for family in [
            KernelFamily::Constant,
            KernelFamily::Gaussian { width: 0.7 },
            KernelFamily::Separable {
                center: 1.0,
                width: 2.0,
            },
        ] {
            for edge in [0.5, 0.75, 1.0, 2.0] {
                let spec = KernelSpec {
                    family,
                    strength: 0.3,
                    edge,
                    phase: 0.4,
                };
                let p = spec.problem(a1.clone(), a2.clone()).unwrap();
                assert!(p.hs_norm() > 0.0);
            }
        }
    }

    #[test]
    fn discrete_points_keep_full_strength() {
        let a1 = SpectralOperator::discrete_only(&[0.0]).unwrap();
        let a2 = SpectralOperator::discrete_only(&[2.0]).unwrap();
        let spec = KernelSpec {
            family: KernelFamily::Constant,
            strength: 0.5,
            edge: 1.0,
            phase: 0.0,
        };
        let m = spec.sample(&a1, &a2).unwrap();
        assert_eq!(m[(0, 0)], Complex64::new(0.5, 0.0));
    }

    #[test]
    fn invalid_parameters_rejected() {
        let base = KernelSpec {
            family: KernelFamily::Gaussian { width: 0.0 },
            strength: 0.1,
            edge: 1.0,
            phase: 0.0,
        };
        assert!(base.validate().is_err());
        let flat = KernelSpec {
            family: KernelFamily::Constant,
            edge: 0.0,
            ..base
        };
        assert!(flat.validate().is_err());
    }
}

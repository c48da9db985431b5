//! Problem-definition files (TOML).
//!
//! ```toml
//! [channel1]
//! discrete = [0.0]
//! bands = [{ a = 1.0, b = 2.0, n = 64 }]
//!
//! [channel2]
//! discrete = [3.0]
//!
//! [coupling.kernel]
//! family = "gaussian"
//! strength = 0.2
//! width = 1.0
//!
//! [solver]
//! tol = 1e-12
//! ```
//!
//! An explicit coupling is given as `coupling.matrix` (real parts, one row per
//! channel-1 index) with an optional `coupling.matrix_imag`.

use crate::kernels::{KernelFamily, KernelSpec};
use crate::linalg::CMatrix;
use crate::model::{Band, CouplingBlock, SpectralOperator, TwoChannelProblem};
use crate::riccati::SolverOptions;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum InputError {
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("invalid problem: {0}")]
    Invalid(String),
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct Meta {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BandEntry {
    pub a: f64,
    pub b: f64,
    pub n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rule: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct ChannelEntry {
    #[serde(default)]
    pub discrete: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub bands: Vec<BandEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelEntry {
    pub family: String,
    pub strength: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub width: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub center: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub edge: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phase: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct CouplingEntry {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix_imag: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kernel: Option<KernelEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct SolverEntry {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tol: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_iter: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delta: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub meta: Option<Meta>,
    pub channel1: ChannelEntry,
    pub channel2: ChannelEntry,
    pub coupling: CouplingEntry,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub solver: Option<SolverEntry>,
}

fn line_column(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before
        .rfind('\n')
        .map_or(before.len(), |p| before.len() - p - 1)
        + 1;
    (line, column)
}

impl ProblemFile {
    pub fn parse(text: &str) -> Result<Self, InputError> {
        toml::from_str(text).map_err(|e| {
            let (line, column) = e.span().map_or((0, 0), |s| line_column(text, s.start));
            InputError::Parse {
                line,
                column,
                message: e.message().trim().to_string(),
            }
        })
    }

    pub fn read(path: &std::path::Path) -> Result<Self, InputError> {
        let text = std::fs::read_to_string(path).map_err(|e| InputError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        Self::parse(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("problem files serialize")
    }

    pub fn seed(&self) -> Option<u64> {
        self.meta.as_ref().and_then(|m| m.seed)
    }

    pub fn solver_options(&self) -> Result<SolverOptions, InputError> {
        let mut options = SolverOptions::default();
        if let Some(s) = &self.solver {
            if let Some(tol) = s.tol {
                options.tol = tol;
            }
            if let Some(max_iter) = s.max_iter {
                options.max_iter = max_iter;
            }
            if let Some(delta) = s.delta {
                options.delta = delta;
            }
        }
        if !(options.tol > 0.0) || !(options.delta > 0.0) || options.max_iter == 0 {
            return Err(InputError::Invalid(
                "solver tol, delta and max_iter must be positive".into(),
            ));
        }
        Ok(options)
    }

    pub fn build(&self) -> Result<TwoChannelProblem, InputError> {
        let invalid = |e: crate::model::ModelError| InputError::Invalid(e.to_string());
        let a1 = channel_operator(&self.channel1, 1)?;
        let a2 = channel_operator(&self.channel2, 2)?;
        let c = &self.coupling;
        match (&c.matrix, &c.kernel) {
            (Some(re), None) => {
                let entries = coupling_matrix(re, c.matrix_imag.as_deref(), a1.dim(), a2.dim())?;
                let block = CouplingBlock::from_kernel(entries, &a1, &a2).map_err(invalid)?;
                TwoChannelProblem::new(a1, a2, block).map_err(invalid)
            }
            (None, Some(kernel)) => {
                if c.matrix_imag.is_some() {
                    return Err(InputError::Invalid(
                        "coupling.matrix_imag requires coupling.matrix".into(),
                    ));
                }
                kernel_spec(kernel)?.problem(a1, a2).map_err(invalid)
            }
            (Some(_), Some(_)) => Err(InputError::Invalid(
                "coupling takes either `matrix` or `kernel`, not both".into(),
            )),
            (None, None) => Err(InputError::Invalid(
                "coupling needs either `matrix` or `kernel`".into(),
            )),
        }
    }

    /// A file describing `problem` with its coupling written out explicitly.
    pub fn from_problem(
        problem: &TwoChannelProblem,
        solver: Option<&SolverOptions>,
        meta: Option<Meta>,
    ) -> Self {
        let entries = problem.b12().entries();
        let re: Vec<Vec<f64>> = entries
            .row_iter()
            .map(|r| r.iter().map(|z| z.re).collect())
            .collect();
        let has_imag = entries.iter().any(|z| z.im != 0.0);
        let im: Vec<Vec<f64>> = entries
            .row_iter()
            .map(|r| r.iter().map(|z| z.im).collect())
            .collect();
        ProblemFile {
            meta,
            channel1: channel_entry(problem.a1()),
            channel2: channel_entry(problem.a2()),
            coupling: CouplingEntry {
                matrix: Some(re),
                matrix_imag: has_imag.then_some(im),
                kernel: None,
            },
            solver: solver.map(|s| SolverEntry {
                tol: Some(s.tol),
                max_iter: Some(s.max_iter),
                delta: Some(s.delta),
            }),
        }
    }
}

fn channel_operator(entry: &ChannelEntry, index: usize) -> Result<SpectralOperator, InputError> {
    let mut bands = Vec::with_capacity(entry.bands.len());
    for band in &entry.bands {
        match band.rule.as_deref() {
            None | Some("trapezoid") => {}
            Some(other) => {
                return Err(InputError::Invalid(format!(
                    "channel{index}: unknown quadrature rule `{other}` (available: trapezoid)"
                )))
            }
        }
        bands.push(Band::new(band.a, band.b, band.n));
    }
    SpectralOperator::new(entry.discrete.clone(), bands)
        .map_err(|e| InputError::Invalid(format!("channel{index}: {e}")))
}

fn channel_entry(op: &SpectralOperator) -> ChannelEntry {
    ChannelEntry {
        discrete: op.discrete().to_vec(),
        bands: op
            .bands()
            .iter()
            .map(|b| BandEntry {
                a: b.a,
                b: b.b,
                n: b.n,
                rule: None,
            })
            .collect(),
    }
}

fn coupling_matrix(
    re: &[Vec<f64>],
    im: Option<&[Vec<f64>]>,
    n1: usize,
    n2: usize,
) -> Result<CMatrix, InputError> {
    let check = |rows: &[Vec<f64>], name: &str| {
        if rows.len() != n1 || rows.iter().any(|r| r.len() != n2) {
            return Err(InputError::Invalid(format!(
                "coupling.{name} must be {n1}x{n2} (channel-1 rows, channel-2 columns)"
            )));
        }
        Ok(())
    };
    check(re, "matrix")?;
    if let Some(im) = im {
        check(im, "matrix_imag")?;
    }
    Ok(CMatrix::from_fn(n1, n2, |i, j| {
        Complex64::new(re[i][j], im.map_or(0.0, |m| m[i][j]))
    }))
}

fn kernel_spec(entry: &KernelEntry) -> Result<KernelSpec, InputError> {
    let require = |v: Option<f64>, name: &str| {
        v.ok_or_else(|| {
            InputError::Invalid(format!(
                "kernel family `{}` requires `{name}`",
                entry.family
            ))
        })
    };
    let reject = |v: Option<f64>, name: &str| match v {
        Some(_) => Err(InputError::Invalid(format!(
            "kernel family `{}` takes no `{name}`",
            entry.family
        ))),
        None => Ok(()),
    };
    let family = match entry.family.as_str() {
        "constant" => {
            reject(entry.width, "width")?;
            reject(entry.center, "center")?;
            KernelFamily::Constant
        }
        "gaussian" => {
            reject(entry.center, "center")?;
            KernelFamily::Gaussian {
                width: require(entry.width, "width")?,
            }
        }
        "separable" => KernelFamily::Separable {
            center: require(entry.center, "center")?,
            width: require(entry.width, "width")?,
        },
        other => {
            return Err(InputError::Invalid(format!(
                "unknown kernel family `{other}` (available: constant, gaussian, separable)"
            )))
        }
    };
    let spec = KernelSpec {
        family,
        strength: entry.strength,
        edge: entry.edge.unwrap_or(1.0),
        phase: entry.phase.unwrap_or(0.0),
    };
    spec.validate()
        .map_err(|e| InputError::Invalid(e.to_string()))?;
    Ok(spec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random::random_problem;
    use proptest::prelude::*;

    const SCALAR: &str = "[channel1]\ndiscrete = [0.0]\n\n[channel2]\ndiscrete = [2.0]\n\n[coupling]\nmatrix = [[0.5]]\n";

    #[test]
    fn parses_scalar_instance() {
        let file = ProblemFile::parse(SCALAR).unwrap();
        let p = file.build().unwrap();
        assert_eq!(p.dims(), (1, 1));
        assert_eq!(p.gap(), 2.0);
        assert_eq!(file.solver_options().unwrap(), SolverOptions::default());
    }

    #[test]
    fn unknown_key_is_named_with_position() {
        let text = SCALAR.replace("discrete = [2.0]", "discrete = [2.0]\nspectrum = 1");
        match ProblemFile::parse(&text).unwrap_err() {
            InputError::Parse { line, message, .. } => {
                assert!(message.contains("spectrum"), "{message}");
                assert_eq!(line, 6);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn kernel_and_band_instance() {
        let text = "[channel1]\nbands = [{ a = 0.0, b = 1.0, n = 16 }]\n\n[channel2]\ndiscrete = [2.0]\n\n[coupling.kernel]\nfamily = \"gaussian\"\nstrength = 0.2\nwidth = 1.0\nedge = 0.75\n\n[solver]\ntol = 1e-11\nmax_iter = 50\n";
        let file = ProblemFile::parse(text).unwrap();
        let p = file.build().unwrap();
        assert_eq!(p.dims(), (16, 1));
        let opts = file.solver_options().unwrap();
        assert_eq!(opts.tol, 1e-11);
        assert_eq!(opts.max_iter, 50);
    }

    #[test]
    fn structural_errors() {
        let both = SCALAR.replace(
            "matrix = [[0.5]]",
            "matrix = [[0.5]]\n[coupling.kernel]\nfamily = \"constant\"\nstrength = 1.0",
        );
        assert!(matches!(
            ProblemFile::parse(&both).unwrap().build(),
            Err(InputError::Invalid(_))
        ));
        let shape = SCALAR.replace("[[0.5]]", "[[0.5, 0.1]]");
        assert!(ProblemFile::parse(&shape).unwrap().build().is_err());
        let family = SCALAR.replace(
            "matrix = [[0.5]]",
            "[coupling.kernel]\nfamily = \"cubic\"\nstrength = 1.0",
        );
        let err = ProblemFile::parse(&family).unwrap().build().unwrap_err();
        assert!(err.to_string().contains("cubic"));
    }

    #[test]
    fn explicit_round_trip_of_kernel_problem() {
        let text = "[channel1]\ndiscrete = [-2.0]\nbands = [{ a = 0.0, b = 1.0, n = 9 }]\n\n[channel2]\ndiscrete = [2.0, 3.5]\n\n[coupling.kernel]\nfamily = \"separable\"\nstrength = 0.3\ncenter = 0.5\nwidth = 2.0\nphase = 0.7\n";
        let p = ProblemFile::parse(text).unwrap().build().unwrap();
        let regenerated = ProblemFile::from_problem(&p, None, None).to_toml();
        let reparsed = ProblemFile::parse(&regenerated).unwrap();
        assert_eq!(reparsed.build().unwrap(), p);
        assert_eq!(ProblemFile::parse(&reparsed.to_toml()).unwrap(), reparsed);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn random_problems_round_trip(
            n1 in 1usize..6, n2 in 1usize..6, r in 0.01f64..0.9, seed in 0u64..(1 << 62),
        ) {
            let p = random_problem(n1, n2, r, seed);
            let meta = Meta { seed: Some(seed), label: Some("random".into()) };
            let file = ProblemFile::from_problem(&p, Some(&SolverOptions::default()), Some(meta));
            let reparsed = ProblemFile::parse(&file.to_toml()).unwrap();
            prop_assert_eq!(&reparsed, &file);
            prop_assert_eq!(reparsed.build().unwrap(), p);
            prop_assert_eq!(reparsed.seed(), Some(seed));
        }
    }
}

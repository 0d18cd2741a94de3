//! Sampling laws for the scatterer variable.
//!
//! A batch realization is `M` entries in `E ⊂ R^k`, each entry built from `k`
//! independent scalar draws of one base law. The three shipped laws all have
//! unit mean so the stochastic Rastrigin expectation keeps its minimizer.

use serde::Serialize;
use thiserror::Error;

use crate::prng::RngStream;

/// Scalar base law for a single sample component.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum ScalarLaw {
    Uniform { lo: f64, hi: f64 },
    Exponential { rate: f64 },
    Normal { mean: f64, var: f64 },
}

#[derive(Debug, Error)]
pub enum LawError {
    #[error("uniform law requires lo < hi, got [{lo}, {hi}]")]
    InvalidUniform { lo: f64, hi: f64 },
    #[error("exponential law requires rate > 0, got {rate}")]
    InvalidExponential { rate: f64 },
    #[error("normal law requires var > 0, got {var}")]
    InvalidNormal { var: f64 },
}

impl ScalarLaw {
    pub fn uniform(lo: f64, hi: f64) -> Result<Self, LawError> {
        if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(LawError::InvalidUniform { lo, hi });
        }
        Ok(ScalarLaw::Uniform { lo, hi })
    }

    pub fn exponential(rate: f64) -> Result<Self, LawError> {
        if !(rate > 0.0) || !rate.is_finite() {
            return Err(LawError::InvalidExponential { rate });
        }
        Ok(ScalarLaw::Exponential { rate })
    }

    pub fn normal(mean: f64, var: f64) -> Result<Self, LawError> {
        if !(var > 0.0) || !var.is_finite() || !mean.is_finite() {
            return Err(LawError::InvalidNormal { var });
        }
        Ok(ScalarLaw::Normal { mean, var })
    }

    fn draw(&self, stream: &mut RngStream) -> f64 {
        match *self {
            ScalarLaw::Uniform { lo, hi } => lo + (hi - lo) * stream.next_uniform(),
            // Inverse CDF; 1 - u in (0, 1] keeps the logarithm finite.
            ScalarLaw::Exponential { rate } => -(1.0 - stream.next_uniform()).ln() / rate,
            ScalarLaw::Normal { mean, var } => mean + var.sqrt() * stream.next_standard_normal(),
        }
    }

    /// Density θ̂ at a scalar point.
    pub fn density(&self, y: f64) -> f64 {
        match *self {
            ScalarLaw::Uniform { lo, hi } => {
                if y >= lo && y <= hi {
                    1.0 / (hi - lo)
                } else {
                    0.0
                }
            }
            ScalarLaw::Exponential { rate } => {
                if y >= 0.0 {
                    rate * (-rate * y).exp()
                } else {
                    0.0
                }
            }
            ScalarLaw::Normal { mean, var } => {
                let z = (y - mean) * (y - mean) / (2.0 * var);
                (-z).exp() / (2.0 * std::f64::consts::PI * var).sqrt()
            }
        }
    }

    /// Exact mean of the law.
    pub fn mean(&self) -> f64 {
        match *self {
            ScalarLaw::Uniform { lo, hi } => 0.5 * (lo + hi),
            ScalarLaw::Exponential { rate } => 1.0 / rate,
            ScalarLaw::Normal { mean, .. } => mean,
        }
    }
}

/// Product law ν^Y for one sample entry: `components` independent copies of
/// the scalar law (2 for the shipped benchmarks).
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct SampleLaw {
    pub scalar: ScalarLaw,
    pub components: usize,
}

impl SampleLaw {
    pub fn new(scalar: ScalarLaw, components: usize) -> Self {
        assert!(components >= 1);
        SampleLaw { scalar, components }
    }

    /// Density θ̂ of the scalar factor, as used by quadrature cross-checks.
    pub fn density(&self, y_scalar: f64) -> f64 {
        self.scalar.density(y_scalar)
    }
}

/// One drawn sample realization: `size` entries of `components` scalars each.
#[derive(Clone, Debug)]
pub struct SampleBatch {
    data: Vec<f64>,
    size: usize,
    components: usize,
    component_means: Vec<f64>,
}

impl SampleBatch {
    /// Wrap raw entries (row-major, `size * components` values).
    pub fn from_entries(data: Vec<f64>, size: usize, components: usize) -> Self {
        assert_eq!(data.len(), size * components);
        assert!(size >= 1);
        let mut component_means = vec![0.0; components];
        for entry in data.chunks_exact(components) {
            for (acc, v) in component_means.iter_mut().zip(entry) {
                *acc += v;
            }
        }
        for acc in component_means.iter_mut() {
            *acc /= size as f64;
        }
        SampleBatch {
            data,
            size,
            components,
            component_means,
        }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn components(&self) -> usize {
        self.components
    }

    pub fn entry(&self, j: usize) -> &[f64] {
        &self.data[j * self.components..(j + 1) * self.components]
    }

    pub fn entries(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.components)
    }

    /// Componentwise mean over the batch, `(ȳ_1, …, ȳ_k)`.
    pub fn component_means(&self) -> &[f64] {
        &self.component_means
    }
}

/// Draw `ȳ = (y^(1), …, y^(M)) ~ (ν^Y)^{⊗M}`.
///
/// Consumes the scalar draws in entry order, components within an entry in
/// index order, so the stream advance is reproducible.
pub fn draw_batch(law: &SampleLaw, m: usize, stream: &mut RngStream) -> SampleBatch {
    assert!(m >= 1, "sample size M must be at least 1");
    let mut data = Vec::with_capacity(m * law.components);
    for _ in 0..m * law.components {
        data.push(law.scalar.draw(stream));
    }
    SampleBatch::from_entries(data, m, law.components)
}

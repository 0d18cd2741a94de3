//! Laplace-weighted consensus point and diffusion matrices.
//!
//! The consensus point of an ensemble under objective values `v_i` is
//!
//! ```text
//! x^α = Σ_i x_i exp(-α v_i) / Σ_i exp(-α v_i)
//! ```
//!
//! computed with min-shifted exponents (`exp(-α (v_i - min v))`) so the
//! largest weight is exactly one. Raw exponentials would underflow to an
//! all-zero denominator already at α = 30 on Rastrigin-sized values, and the
//! moment experiments push α to 1e5; the shift is algebraically neutral and
//! also makes the point exactly invariant under a common offset of the
//! values.

use serde::Serialize;
use thiserror::Error;

use crate::prng::RngStream;

/// N particle positions in R^d, stored row-major.
#[derive(Clone, Debug)]
pub struct ParticleEnsemble {
    positions: Vec<f64>,
    n: usize,
    d: usize,
}

impl ParticleEnsemble {
    pub fn from_flat(positions: Vec<f64>, n: usize, d: usize) -> Self {
        assert!(n >= 1 && d >= 1);
        assert_eq!(positions.len(), n * d);
        debug_assert!(positions.iter().all(|p| p.is_finite()));
        ParticleEnsemble { positions, n, d }
    }

    /// i.i.d. uniform initialization on `[lo, hi]` per coordinate.
    pub fn init_uniform(n: usize, d: usize, lo: f64, hi: f64, stream: &mut RngStream) -> Self {
        assert!(lo <= hi);
        let positions = (0..n * d)
            .map(|_| lo + (hi - lo) * stream.next_uniform())
            .collect();
        ParticleEnsemble::from_flat(positions, n, d)
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false // n >= 1 by construction
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn positions(&self) -> &[f64] {
        &self.positions
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.positions[i * self.d..(i + 1) * self.d]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.positions[i * self.d..(i + 1) * self.d]
    }
}

/// Exploration geometry around the consensus point.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum DiffusionKind {
    Isotropic,
    Anisotropic,
}

impl DiffusionKind {
    /// κ in `Σ_r D²_rr = κ |x^α - x|²`: d for isotropic, 1 for anisotropic.
    pub fn kappa(self, d: usize) -> f64 {
        match self {
            DiffusionKind::Isotropic => d as f64,
            DiffusionKind::Anisotropic => 1.0,
        }
    }
}

/// Weighted consensus point plus the log-normalizer `log Σ_i exp(-α v_i)`.
#[derive(Clone, Debug)]
pub struct ConsensusPoint {
    pub point: Vec<f64>,
    pub weight_log_norm: f64,
}

#[derive(Debug, Error)]
pub enum ConsensusError {
    #[error("objective value at particle {index} is NaN")]
    NanValue { index: usize },
}

/// Consensus point of `ensemble` under per-particle values `values`.
pub fn consensus_point(
    ensemble: &ParticleEnsemble,
    values: &[f64],
    alpha: f64,
) -> Result<ConsensusPoint, ConsensusError> {
    assert_eq!(values.len(), ensemble.len());
    assert!(alpha > 0.0);
    let mut v_min = f64::INFINITY;
    for (i, v) in values.iter().enumerate() {
        if v.is_nan() {
            return Err(ConsensusError::NanValue { index: i });
        }
        v_min = v_min.min(*v);
    }
    let d = ensemble.dim();
    let mut point = vec![0.0; d];
    let mut weight_sum = 0.0;
    for (i, v) in values.iter().enumerate() {
        let w = (-alpha * (v - v_min)).exp();
        weight_sum += w;
        let row = ensemble.row(i);
        for (acc, x) in point.iter_mut().zip(row) {
            *acc += w * x;
        }
    }
    for acc in point.iter_mut() {
        *acc /= weight_sum;
    }
    Ok(ConsensusPoint {
        point,
        weight_log_norm: weight_sum.ln() - alpha * v_min,
    })
}

/// Diagonal of the diffusion matrix `D(x)` for consensus point `cp`, written
/// into `out`: every entry `|cp - x|` for isotropic, entrywise `cp_r - x_r`
/// for anisotropic.
pub fn diffusion_diag_into(x: &[f64], cp: &[f64], kind: DiffusionKind, out: &mut [f64]) {
    assert_eq!(x.len(), cp.len());
    assert_eq!(x.len(), out.len());
    match kind {
        DiffusionKind::Isotropic => {
            let norm = x
                .iter()
                .zip(cp)
                .map(|(a, b)| (b - a) * (b - a))
                .sum::<f64>()
                .sqrt();
            out.fill(norm);
        }
        DiffusionKind::Anisotropic => {
            for ((o, a), b) in out.iter_mut().zip(x).zip(cp) {
                *o = b - a;
            }
        }
    }
}

/// Allocating variant of [`diffusion_diag_into`].
pub fn diffusion_diag(x: &[f64], cp: &[f64], kind: DiffusionKind) -> Vec<f64> {
    let mut out = vec![0.0; x.len()];
    diffusion_diag_into(x, cp, kind, &mut out);
    out
}

//! Ensemble moments and the approximated moment system.
//!
//! The mean position and variance of the particle distribution evolve, after
//! replacing the moving consensus point by its limit `x̃`, according to
//!
//! ```text
//! dm/dt = -λ m + λ x̃
//! dV/dt = ((λ² + κσ²) - 2λ) V + ((λ² + κσ²)/2) (|m|² - |x̃|²)
//! ```
//!
//! with the variance convention `V = ½ ∫ |x - m|² g dx`. When the interaction
//! frequency `1/η` differs from one the right-hand side carries that factor,
//! which only reparameterizes time and leaves the phase-plane curve intact.

use serde::Serialize;

use crate::consensus::ParticleEnsemble;
use crate::ode::{self, OdeError};

/// Mean position, variance and time of a distribution snapshot.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MomentState {
    pub m: Vec<f64>,
    pub v: f64,
    pub t: f64,
}

impl MomentState {
    pub fn new(m: Vec<f64>, v: f64, t: f64) -> Self {
        MomentState { m, v, t }
    }

    /// Euclidean distance to `(x_ref, 0)` in the (m, V) phase space.
    pub fn distance_to(&self, x_ref: &[f64]) -> f64 {
        let dm: f64 = self
            .m
            .iter()
            .zip(x_ref)
            .map(|(a, b)| (a - b) * (a - b))
            .sum();
        (dm + self.v * self.v).sqrt()
    }
}

/// Empirical moments of an ensemble: `m = (1/N) Σ x_i`,
/// `V = ½ (1/N) Σ |x_i - m|²` (two-pass form of `½(E - |m|²)`).
pub fn empirical_moments(ensemble: &ParticleEnsemble) -> MomentState {
    let n = ensemble.len() as f64;
    let d = ensemble.dim();
    let mut m = vec![0.0; d];
    for i in 0..ensemble.len() {
        for (acc, x) in m.iter_mut().zip(ensemble.row(i)) {
            *acc += x;
        }
    }
    for acc in m.iter_mut() {
        *acc /= n;
    }
    let mut dev = 0.0;
    for i in 0..ensemble.len() {
        for (mu, x) in m.iter().zip(ensemble.row(i)) {
            dev += (x - mu) * (x - mu);
        }
    }
    MomentState::new(m, 0.5 * dev / n, 0.0)
}

/// Parameters of the approximated moment system.
#[derive(Clone, Debug)]
pub struct ApproxSystemParams {
    pub lambda: f64,
    pub sigma: f64,
    /// κ of the diffusion geometry: d (isotropic) or 1 (anisotropic).
    pub kappa: f64,
    /// Equilibrium consensus x̃ (the known minimizer in the experiments).
    pub x_tilde: Vec<f64>,
    /// Right-hand-side factor 1/η.
    pub eta_scale: f64,
}

impl ApproxSystemParams {
    fn gamma(&self) -> f64 {
        self.lambda * self.lambda + self.kappa * self.sigma * self.sigma
    }
}

/// Right-hand side `(dm, dV)` at a state.
pub fn approx_rhs(state: &MomentState, p: &ApproxSystemParams) -> (Vec<f64>, f64) {
    let gamma = p.gamma();
    let dm: Vec<f64> = state
        .m
        .iter()
        .zip(&p.x_tilde)
        .map(|(m, xt)| p.eta_scale * p.lambda * (xt - m))
        .collect();
    let m_sq: f64 = state.m.iter().map(|v| v * v).sum();
    let xt_sq: f64 = p.x_tilde.iter().map(|v| v * v).sum();
    let dv = p.eta_scale * ((gamma - 2.0 * p.lambda) * state.v + 0.5 * gamma * (m_sq - xt_sq));
    (dm, dv)
}

/// Jacobian eigenvalues at the equilibrium `(x̃, 0)`: `-λ` (multiplicity d)
/// and `(λ² + κσ²) - 2λ`, plus the stability flag.
pub fn jacobian_eigen(p: &ApproxSystemParams) -> (f64, f64, bool) {
    let eig_m = -p.lambda;
    let eig_v = p.gamma() - 2.0 * p.lambda;
    (eig_m, eig_v, eig_m < 0.0 && eig_v < 0.0)
}

/// Integrate the approximated system from `s0` and report dense output at
/// `sample_times` (ascending, within `[s0.t, t_end]`).
pub fn integrate_approx_system(
    p: &ApproxSystemParams,
    s0: &MomentState,
    t_end: f64,
    sample_times: &[f64],
    rel_tol: f64,
    abs_tol: f64,
) -> Result<Vec<MomentState>, OdeError> {
    let d = s0.m.len();
    let mut y0 = s0.m.clone();
    y0.push(s0.v);
    let rhs = |_t: f64, y: &[f64], dy: &mut [f64]| {
        let state = MomentState::new(y[..d].to_vec(), y[d], 0.0);
        let (dm, dv) = approx_rhs(&state, p);
        dy[..d].copy_from_slice(&dm);
        dy[d] = dv;
    };
    let sol = ode::integrate(rhs, &y0, s0.t, t_end, rel_tol, abs_tol)?;
    Ok(sample_times
        .iter()
        .map(|&t| {
            let y = sol.sample(t);
            MomentState::new(y[..d].to_vec(), y[d], t)
        })
        .collect())
}

//! Stochastic objectives `F(x, y)` and the sample-average estimator.
//!
//! An objective evaluates one component `F(x, y)` and may additionally expose
//! a closed-form expectation `f(x) = E[F(x, Y)]`, per-realization bounds
//! `F̲(y) ≤ F(x, y) ≤ F̄(y)`, and gradient/Hessian bound constants. The
//! estimator
//!
//! ```text
//! f̂_M(x, ȳ) = (1/M) Σ_j F(x, y^(j))
//! ```
//!
//! is what the optimizers actually minimize; a fresh batch `ȳ` is drawn every
//! iterate by the variable-sample scheme.
//!
//! Objectives that are affine in `y` (the whole shipped family) can report a
//! decomposition `F(x, y) = c_0(x) + Σ_c y_c · c_c(x)`, which collapses the
//! estimator to a dot product with the batch component means. The ensemble
//! evaluators below use that path when present; it is algebraically identical
//! to the literal average and turns the per-iterate cost from `O(N·M·d)` into
//! `O(N·d + M·k)`.

use std::sync::Arc;

use thiserror::Error;

use crate::sampling::SampleBatch;

/// Evaluator for a stochastic objective `F: R^d × E → R`.
pub trait StochasticObjective: Send + Sync {
    /// Search-space dimension `d`.
    fn dim_x(&self) -> usize;

    /// Sample-space dimension `k` of one entry `y ∈ E`.
    fn dim_y(&self) -> usize;

    /// One component evaluation `F(x, y)`.
    fn eval(&self, x: &[f64], y: &[f64]) -> f64;

    /// Closed-form expectation `f(x)`, when known.
    fn expectation(&self, _x: &[f64]) -> Option<f64> {
        None
    }

    /// Per-realization bounds `(F̲(y), F̄(y))`, when the objective has them.
    fn bounds(&self, _y: &[f64]) -> Option<(f64, f64)> {
        None
    }

    /// Gradient bound constant `c_1(y)`, when known.
    fn grad_bound(&self, _y: &[f64]) -> Option<f64> {
        None
    }

    /// Hessian bound constant `c_2(y)`, when known.
    fn hess_bound(&self, _y: &[f64]) -> Option<f64> {
        None
    }

    /// Known global minimizer of the expectation, when there is one.
    fn minimizer(&self) -> Option<Vec<f64>> {
        None
    }

    /// Affine-in-`y` decomposition: fills `coeffs` (length `dim_y`) and
    /// returns the constant term, or `None` if the objective has no such
    /// structure.
    fn y_affine(&self, _x: &[f64], _coeffs: &mut [f64]) -> Option<f64> {
        None
    }
}

#[derive(Debug, Error)]
pub enum ObjectiveError {
    #[error("F(x, y^({entry})) is not finite (value {value}) at x = {x:?}")]
    NonFinite {
        entry: usize,
        value: f64,
        x: Vec<f64>,
    },
    #[error("objective does not supply Assumption-1 bounds")]
    BoundsUnavailable,
    #[error("objective does not supply a closed-form expectation")]
    ExpectationUnavailable,
    #[error("unknown objective `{name}`; known: {known:?}")]
    UnknownObjective {
        name: String,
        known: &'static [&'static str],
    },
}

/// Sample-average estimator `f̂_M(x, ȳ)`, evaluated literally.
pub fn eval_fhat_m(
    obj: &dyn StochasticObjective,
    x: &[f64],
    batch: &SampleBatch,
) -> Result<f64, ObjectiveError> {
    let mut sum = 0.0;
    for (j, y) in batch.entries().enumerate() {
        let v = obj.eval(x, y);
        if !v.is_finite() {
            return Err(ObjectiveError::NonFinite {
                entry: j,
                value: v,
                x: x.to_vec(),
            });
        }
        sum += v;
    }
    Ok(sum / batch.size() as f64)
}

/// Per-batch averages `(f̲_M(ȳ), f̄_M(ȳ))` of the Assumption-1 bounds.
pub fn assumption1_bounds(
    obj: &dyn StochasticObjective,
    batch: &SampleBatch,
) -> Result<(f64, f64), ObjectiveError> {
    let mut lo_sum = 0.0;
    let mut hi_sum = 0.0;
    for y in batch.entries() {
        let (lo, hi) = obj.bounds(y).ok_or(ObjectiveError::BoundsUnavailable)?;
        lo_sum += lo;
        hi_sum += hi;
    }
    let m = batch.size() as f64;
    Ok((lo_sum / m, hi_sum / m))
}

/// `f̂_M` at every row of a flat `n × d` position block.
///
/// Uses the affine decomposition against the batch component means when the
/// objective provides one, otherwise the literal average.
pub fn fhat_values(
    obj: &dyn StochasticObjective,
    positions: &[f64],
    dim: usize,
    batch: &SampleBatch,
    out: &mut Vec<f64>,
) -> Result<(), ObjectiveError> {
    out.clear();
    let mut coeffs = vec![0.0; obj.dim_y()];
    let means = batch.component_means();
    for row in positions.chunks_exact(dim) {
        let value = match obj.y_affine(row, &mut coeffs) {
            Some(base) => base + dot(&coeffs, means),
            None => eval_fhat_m(obj, row, batch)?,
        };
        out.push(value);
    }
    Ok(())
}

/// Averaged estimator over several batches (the `f̂̂_M` of the sY variant) at
/// every row of a flat position block.
pub fn fhat_mean_values(
    obj: &dyn StochasticObjective,
    positions: &[f64],
    dim: usize,
    batches: &[SampleBatch],
    out: &mut Vec<f64>,
) -> Result<(), ObjectiveError> {
    assert!(!batches.is_empty());
    out.clear();
    let k = obj.dim_y();
    let mut coeffs = vec![0.0; k];
    // Equal-size batches, so the grand mean is the mean of batch means.
    let mut grand = vec![0.0; k];
    for b in batches {
        for (acc, v) in grand.iter_mut().zip(b.component_means()) {
            *acc += v;
        }
    }
    for acc in grand.iter_mut() {
        *acc /= batches.len() as f64;
    }
    for row in positions.chunks_exact(dim) {
        let value = match obj.y_affine(row, &mut coeffs) {
            Some(base) => base + dot(&coeffs, &grand),
            None => {
                let mut sum = 0.0;
                for b in batches {
                    sum += eval_fhat_m(obj, row, b)?;
                }
                sum / batches.len() as f64
            }
        };
        out.push(value);
    }
    Ok(())
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

// ---------------------------------------------------------------------------
// Shipped objectives
// ---------------------------------------------------------------------------

/// Stochastic Rastrigin with shifts `B`, `C`:
///
/// ```text
/// F(x, (Y1, Y2)) = (1/d) Σ_r [ Y1 (x_r - B)^2 - 10 Y2 cos(2π(x_r - B)) + 10 ] + C
/// ```
///
/// For unit-mean laws the expectation is the classical Rastrigin function
/// with global minimizer `(B, …, B)`.
#[derive(Clone, Debug)]
pub struct StochasticRastrigin {
    dim: usize,
    shift_b: f64,
    shift_c: f64,
}

impl StochasticRastrigin {
    pub fn new(dim: usize, shift_b: f64, shift_c: f64) -> Self {
        assert!(dim >= 1);
        StochasticRastrigin {
            dim,
            shift_b,
            shift_c,
        }
    }

    /// `(quadratic, cosine)` parts: `(1/d) Σ (x_r-B)^2` and `(10/d) Σ cos(2π(x_r-B))`.
    fn parts(&self, x: &[f64]) -> (f64, f64) {
        let mut quad = 0.0;
        let mut cos = 0.0;
        for &xr in x {
            let t = xr - self.shift_b;
            quad += t * t;
            cos += (2.0 * std::f64::consts::PI * t).cos();
        }
        let d = self.dim as f64;
        (quad / d, 10.0 * cos / d)
    }
}

impl StochasticObjective for StochasticRastrigin {
    fn dim_x(&self) -> usize {
        self.dim
    }

    fn dim_y(&self) -> usize {
        2
    }

    fn eval(&self, x: &[f64], y: &[f64]) -> f64 {
        let (quad, cos) = self.parts(x);
        10.0 + self.shift_c + y[0] * quad - y[1] * cos
    }

    fn expectation(&self, x: &[f64]) -> Option<f64> {
        // E[Y1] = E[Y2] = 1 for all shipped laws.
        let (quad, cos) = self.parts(x);
        Some(10.0 + self.shift_c + quad - cos)
    }

    fn minimizer(&self) -> Option<Vec<f64>> {
        Some(vec![self.shift_b; self.dim])
    }

    fn y_affine(&self, x: &[f64], coeffs: &mut [f64]) -> Option<f64> {
        let (quad, cos) = self.parts(x);
        coeffs[0] = quad;
        coeffs[1] = -cos;
        Some(10.0 + self.shift_c)
    }
}

/// Bounded test objective `F(x, (Y1, Y2)) = Y1 · (1/d) Σ_r (1 - cos x_r)`.
///
/// Satisfies Assumption 1 with `F̲ = min(0, 2 Y1)`, `F̄ = max(0, 2 Y1)`, so it
/// backs every `C_α`/`μ` property that the (globally unbounded) Rastrigin
/// cannot honestly support. The second sample component is ignored.
#[derive(Clone, Debug)]
pub struct BoundedCosineToy {
    dim: usize,
}

impl BoundedCosineToy {
    pub fn new(dim: usize) -> Self {
        assert!(dim >= 1);
        BoundedCosineToy { dim }
    }

    fn shape(&self, x: &[f64]) -> f64 {
        x.iter().map(|xr| 1.0 - xr.cos()).sum::<f64>() / self.dim as f64
    }
}

impl StochasticObjective for BoundedCosineToy {
    fn dim_x(&self) -> usize {
        self.dim
    }

    fn dim_y(&self) -> usize {
        2
    }

    fn eval(&self, x: &[f64], y: &[f64]) -> f64 {
        y[0] * self.shape(x)
    }

    fn expectation(&self, x: &[f64]) -> Option<f64> {
        Some(self.shape(x))
    }

    fn bounds(&self, y: &[f64]) -> Option<(f64, f64)> {
        let hi = 2.0 * y[0];
        Some((hi.min(0.0), hi.max(0.0)))
    }

    fn grad_bound(&self, y: &[f64]) -> Option<f64> {
        Some(y[0].abs())
    }

    fn hess_bound(&self, y: &[f64]) -> Option<f64> {
        Some(y[0].abs())
    }

    fn minimizer(&self) -> Option<Vec<f64>> {
        Some(vec![0.0; self.dim])
    }

    fn y_affine(&self, x: &[f64], coeffs: &mut [f64]) -> Option<f64> {
        coeffs[0] = self.shape(x);
        coeffs[1] = 0.0;
        Some(0.0)
    }
}

/// Convex quadratic `F(x, y) = |x|^2`, independent of the sample.
///
/// Deterministic control case for drift-only contraction checks.
#[derive(Clone, Debug)]
pub struct Quadratic {
    dim: usize,
}

impl Quadratic {
    pub fn new(dim: usize) -> Self {
        assert!(dim >= 1);
        Quadratic { dim }
    }

    fn norm_sq(&self, x: &[f64]) -> f64 {
        x.iter().map(|v| v * v).sum()
    }
}

impl StochasticObjective for Quadratic {
    fn dim_x(&self) -> usize {
        self.dim
    }

    fn dim_y(&self) -> usize {
        2
    }

    fn eval(&self, x: &[f64], _y: &[f64]) -> f64 {
        self.norm_sq(x)
    }

    fn expectation(&self, x: &[f64]) -> Option<f64> {
        Some(self.norm_sq(x))
    }

    fn minimizer(&self) -> Option<Vec<f64>> {
        Some(vec![0.0; self.dim])
    }

    fn y_affine(&self, x: &[f64], coeffs: &mut [f64]) -> Option<f64> {
        coeffs.fill(0.0);
        Some(self.norm_sq(x))
    }
}

// ---------------------------------------------------------------------------
// Registry
// ---------------------------------------------------------------------------

/// Names the CLI accepts for `objective.name`.
pub const REGISTRY_NAMES: &[&str] = &["stochastic_rastrigin", "bounded_cosine_toy", "quadratic"];

/// Build a registered objective. `shift_b`/`shift_c` apply to the Rastrigin
/// family and are ignored by the others.
pub fn build_objective(
    name: &str,
    dim: usize,
    shift_b: f64,
    shift_c: f64,
) -> Result<Arc<dyn StochasticObjective>, ObjectiveError> {
    match name {
        "stochastic_rastrigin" => Ok(Arc::new(StochasticRastrigin::new(dim, shift_b, shift_c))),
        "bounded_cosine_toy" => Ok(Arc::new(BoundedCosineToy::new(dim))),
        "quadratic" => Ok(Arc::new(Quadratic::new(dim))),
        _ => Err(ObjectiveError::UnknownObjective {
            name: name.to_string(),
            known: REGISTRY_NAMES,
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prng::RngStream;
    use crate::sampling::{draw_batch, SampleBatch, SampleLaw, ScalarLaw};

    struct Constant(f64);

    impl StochasticObjective for Constant {
        fn dim_x(&self) -> usize {
            1
        }
        fn dim_y(&self) -> usize {
            2
        }
        fn eval(&self, _x: &[f64], _y: &[f64]) -> f64 {
            self.0
        }
        fn bounds(&self, _y: &[f64]) -> Option<(f64, f64)> {
            Some((self.0, self.0))
        }
    }

    fn batch_of(entries: &[[f64; 2]]) -> SampleBatch {
        let data: Vec<f64> = entries.iter().flatten().copied().collect();
        SampleBatch::from_entries(data, entries.len(), 2)
    }

    #[test]
    fn rastrigin_vanishes_at_origin_when_y2_is_one() {
        let obj = StochasticRastrigin::new(4, 0.0, 0.0);
        let batch = batch_of(&[[0.3, 1.0], [2.7, 1.0], [0.9, 1.0]]);
        let x = vec![0.0; 4];
        let v = eval_fhat_m(&obj, &x, &batch).unwrap();
        assert_eq!(v, 0.0);
    }

    #[test]
    fn rastrigin_single_entry_hand_value() {
        // d=1, y=(2, 0.5), x=1: 2·1 − 10·0.5·cos(2π) + 10 = 7
        let obj = StochasticRastrigin::new(1, 0.0, 0.0);
        let batch = batch_of(&[[2.0, 0.5]]);
        let v = eval_fhat_m(&obj, &[1.0], &batch).unwrap();
        assert!((v - 7.0).abs() < 1e-12, "v = {v}");
    }

    #[test]
    fn constant_objective_averages_to_itself() {
        let obj = Constant(3.25);
        let batch = batch_of(&[[0.5, 0.5], [1.5, 1.5]]);
        assert_eq!(eval_fhat_m(&obj, &[0.0], &batch).unwrap(), 3.25);
        assert_eq!(assumption1_bounds(&obj, &batch).unwrap(), (3.25, 3.25));
    }

    #[test]
    fn rastrigin_expectation_hand_values() {
        let obj = StochasticRastrigin::new(20, 0.0, 0.0);
        assert_eq!(obj.expectation(&vec![0.0; 20]).unwrap(), 0.0);
        let ones = vec![1.0; 20];
        let v = obj.expectation(&ones).unwrap();
        assert!((v - 1.0).abs() < 1e-12, "v = {v}");
    }

    #[test]
    fn rastrigin_at_unit_sample_collapses_to_expectation() {
        let obj = StochasticRastrigin::new(3, 0.5, 2.0);
        let mut stream = RngStream::new(5, 0);
        for _ in 0..50 {
            let x: Vec<f64> = (0..3).map(|_| 6.0 * stream.next_uniform() - 3.0).collect();
            let f = obj.eval(&x, &[1.0, 1.0]);
            let e = obj.expectation(&x).unwrap();
            assert!((f - e).abs() < 1e-12);
        }
    }

    #[test]
    fn toy_bounds_hand_values() {
        let obj = BoundedCosineToy::new(1);
        let ones = batch_of(&[[1.0, 0.0], [1.0, 0.0]]);
        assert_eq!(assumption1_bounds(&obj, &ones).unwrap(), (0.0, 2.0));
        let mixed = batch_of(&[[0.1, 0.0], [1.9, 0.0]]);
        let (lo, hi) = assumption1_bounds(&obj, &mixed).unwrap();
        assert_eq!(lo, 0.0);
        assert!((hi - 2.0).abs() < 1e-15);
    }

    #[test]
    fn bounds_error_when_absent() {
        let obj = StochasticRastrigin::new(2, 0.0, 0.0);
        let batch = batch_of(&[[1.0, 1.0]]);
        assert!(matches!(
            assumption1_bounds(&obj, &batch),
            Err(ObjectiveError::BoundsUnavailable)
        ));
    }

    #[test]
    fn non_finite_component_reports_entry() {
        struct Bad;
        impl StochasticObjective for Bad {
            fn dim_x(&self) -> usize {
                1
            }
            fn dim_y(&self) -> usize {
                2
            }
            fn eval(&self, _x: &[f64], y: &[f64]) -> f64 {
                if y[0] > 1.0 {
                    f64::NAN
                } else {
                    0.0
                }
            }
        }
        let batch = batch_of(&[[0.0, 0.0], [2.0, 0.0]]);
        match eval_fhat_m(&Bad, &[0.5], &batch) {
            Err(ObjectiveError::NonFinite { entry, .. }) => assert_eq!(entry, 1),
            other => panic!("expected NonFinite, got {other:?}"),
        }
    }

    #[test]
    fn fhat_is_permutation_invariant_in_entries() {
        let obj = StochasticRastrigin::new(2, 0.0, 0.0);
        let fwd = batch_of(&[[0.2, 1.3], [1.4, 0.8], [0.9, 0.4]]);
        let rev = batch_of(&[[0.9, 0.4], [1.4, 0.8], [0.2, 1.3]]);
        let x = [0.7, -1.2];
        let a = eval_fhat_m(&obj, &x, &fwd).unwrap();
        let b = eval_fhat_m(&obj, &x, &rev).unwrap();
        assert!((a - b).abs() <= 1e-15 * a.abs().max(1.0));
    }

    #[test]
    fn identical_entries_reduce_to_single_component() {
        let obj = StochasticRastrigin::new(2, 0.0, 0.0);
        let x = [0.37, -1.91];
        let y = [1.3, 0.7];
        let f = obj.eval(&x, &y);
        for m in [1usize, 2, 3, 4, 5, 8] {
            let batch = batch_of(&vec![[1.3, 0.7]; m]);
            let v = eval_fhat_m(&obj, &x, &batch).unwrap();
            if m.is_power_of_two() {
                assert_eq!(v, f, "M = {m}");
            } else {
                assert!((v - f).abs() <= 4.0 * f64::EPSILON * f.abs(), "M = {m}");
            }
        }
    }

    #[test]
    fn affine_path_matches_literal_average() {
        let law = SampleLaw::new(ScalarLaw::uniform(0.1, 1.9).unwrap(), 2);
        let mut stream = RngStream::new(77, 0);
        for obj in [
            &StochasticRastrigin::new(3, 0.0, 0.0) as &dyn StochasticObjective,
            &BoundedCosineToy::new(3),
            &Quadratic::new(3),
        ] {
            let batch = draw_batch(&law, 40, &mut stream);
            let positions: Vec<f64> = (0..5 * 3).map(|_| 6.0 * stream.next_uniform() - 3.0).collect();
            let mut fast = Vec::new();
            fhat_values(obj, &positions, 3, &batch, &mut fast).unwrap();
            for (row, v) in positions.chunks_exact(3).zip(&fast) {
                let lit = eval_fhat_m(obj, row, &batch).unwrap();
                assert!((v - lit).abs() <= 1e-12 * (1.0 + lit.abs()), "{v} vs {lit}");
            }
        }
    }

    #[test]
    fn multi_batch_mean_matches_literal_average() {
        let law = SampleLaw::new(ScalarLaw::exponential(1.0).unwrap(), 2);
        let mut stream = RngStream::new(78, 0);
        let obj = StochasticRastrigin::new(2, 0.0, 0.0);
        let batches: Vec<SampleBatch> = (0..4).map(|_| draw_batch(&law, 15, &mut stream)).collect();
        let positions: Vec<f64> = (0..4 * 2).map(|_| 4.0 * stream.next_uniform() - 2.0).collect();
        let mut fast = Vec::new();
        fhat_mean_values(&obj, &positions, 2, &batches, &mut fast).unwrap();
        for (row, v) in positions.chunks_exact(2).zip(&fast) {
            let mut lit = 0.0;
            for b in &batches {
                lit += eval_fhat_m(&obj, row, b).unwrap();
            }
            lit /= batches.len() as f64;
            assert!((v - lit).abs() <= 1e-12 * (1.0 + lit.abs()));
        }
    }

    #[test]
    fn large_sample_estimator_approaches_expectation() {
        // M = 1e5 uniform entries, 10 random points: |f̂_M - f| < 0.05.
        let obj = StochasticRastrigin::new(3, 0.0, 0.0);
        let law = SampleLaw::new(ScalarLaw::uniform(0.1, 1.9).unwrap(), 2);
        let mut stream = RngStream::new(314, 0);
        let batch = draw_batch(&law, 100_000, &mut stream);
        for _ in 0..10 {
            let x: Vec<f64> = (0..3).map(|_| 6.0 * stream.next_uniform() - 3.0).collect();
            let fhat = eval_fhat_m(&obj, &x, &batch).unwrap();
            let f = obj.expectation(&x).unwrap();
            assert!((fhat - f).abs() < 0.05, "x = {x:?}: {fhat} vs {f}");
        }
    }

    #[test]
    fn toy_bounds_enclose_values_at_random_points() {
        let obj = BoundedCosineToy::new(3);
        let law = SampleLaw::new(ScalarLaw::normal(1.0, 1.0).unwrap(), 2);
        let mut stream = RngStream::new(91, 0);
        let batch = draw_batch(&law, 200, &mut stream);
        for y in batch.entries() {
            let (lo, hi) = obj.bounds(y).unwrap();
            for _ in 0..5 {
                let x: Vec<f64> = (0..3).map(|_| 20.0 * stream.next_uniform() - 10.0).collect();
                let f = obj.eval(&x, y);
                assert!(f >= lo - 1e-12 && f <= hi + 1e-12, "{lo} <= {f} <= {hi}");
            }
        }
    }

    #[test]
    fn normal_law_samples_keep_estimator_finite() {
        // Negative y components are admissible; no domain restriction.
        let obj = StochasticRastrigin::new(2, 0.0, 0.0);
        let law = SampleLaw::new(ScalarLaw::normal(1.0, 1.0).unwrap(), 2);
        let mut stream = RngStream::new(92, 0);
        let batch = draw_batch(&law, 10_000, &mut stream);
        let v = eval_fhat_m(&obj, &[1.7, -0.3], &batch).unwrap();
        assert!(v.is_finite());
    }

    #[test]
    fn registry_rejects_unknown_names() {
        assert!(build_objective("stochastic_rastrigin", 20, 0.0, 0.0).is_ok());
        assert!(build_objective("bounded_cosine_toy", 1, 0.0, 0.0).is_ok());
        assert!(build_objective("quadratic", 2, 0.0, 0.0).is_ok());
        match build_objective("nope", 2, 0.0, 0.0) {
            Err(ObjectiveError::UnknownObjective { name, .. }) => assert_eq!(name, "nope"),
            other => panic!("expected UnknownObjective, got {:?}", other.map(|_| ())),
        }
    }
}

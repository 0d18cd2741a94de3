//! Mapping from parsed config to core types.

use std::sync::Arc;

use lkbo_core::harness::OptimizerKind;
use lkbo_core::objectives::{build_objective, StochasticObjective};
use lkbo_core::{DiffusionKind, OptimizerParams, SampleLaw, ScalarLaw};

use crate::config::{Config, ConfigError};

pub struct BuiltObjective {
    pub objective: Arc<dyn StochasticObjective>,
    pub x_min: Vec<f64>,
    pub name: String,
    pub dim: usize,
}

pub fn objective_from(cfg: &Config) -> Result<BuiltObjective, ConfigError> {
    let name = cfg.require_str("objective.name")?.to_string();
    let dim = cfg.require_usize("objective.dim")?;
    let b = cfg.f64_or("objective.B", 0.0)?;
    let c = cfg.f64_or("objective.C", 0.0)?;
    let objective =
        build_objective(&name, dim, b, c).map_err(|e| ConfigError(format!("objective.name: {e}")))?;
    let x_min = objective
        .minimizer()
        .ok_or_else(|| ConfigError(format!("objective `{name}` has no known minimizer")))?;
    Ok(BuiltObjective {
        objective,
        x_min,
        name,
        dim,
    })
}

pub fn law_from(cfg: &Config) -> Result<SampleLaw, ConfigError> {
    let theta = cfg.str_or("sampling.theta", "uniform")?;
    law_from_theta(cfg, theta)
}

/// Build a law for a named theta, reading that law's parameters from config.
pub fn law_from_theta(cfg: &Config, theta: &str) -> Result<SampleLaw, ConfigError> {
    let scalar = match theta {
        "uniform" => ScalarLaw::uniform(cfg.f64_or("sampling.lo", 0.1)?, cfg.f64_or("sampling.hi", 1.9)?),
        "exponential" => ScalarLaw::exponential(cfg.f64_or("sampling.rate", 1.0)?),
        "normal" => ScalarLaw::normal(cfg.f64_or("sampling.mean", 1.0)?, cfg.f64_or("sampling.var", 1.0)?),
        other => {
            return Err(ConfigError(format!(
                "sampling.theta: unknown law `{other}` (expected uniform, exponential, normal)"
            )))
        }
    };
    let scalar = scalar.map_err(|e| ConfigError(format!("sampling: {e}")))?;
    Ok(SampleLaw::new(scalar, 2))
}

pub fn params_from(cfg: &Config) -> Result<OptimizerParams, ConfigError> {
    let dt = cfg.require_f64("optimizer.dt")?;
    let diffusion = match cfg.str_or("optimizer.diffusion", "anisotropic")? {
        "isotropic" => DiffusionKind::Isotropic,
        "anisotropic" => DiffusionKind::Anisotropic,
        other => {
            return Err(ConfigError(format!(
                "optimizer.diffusion: unknown kind `{other}` (expected isotropic or anisotropic)"
            )))
        }
    };
    let init_box = match cfg.num_list_opt("optimizer.init_box")? {
        None => (-3.0, 3.0),
        Some(v) if v.len() == 2 => (v[0], v[1]),
        Some(v) => {
            return Err(ConfigError(format!(
                "optimizer.init_box: expected [lo, hi], got {} entries",
                v.len()
            )))
        }
    };
    let params = OptimizerParams {
        lambda: cfg.require_f64("optimizer.lambda")?,
        sigma: cfg.require_f64("optimizer.sigma")?,
        alpha: cfg.require_f64("optimizer.alpha")?,
        dt,
        eta: cfg.f64_or("optimizer.eta", dt)?,
        epsilon: cfg.f64_or("optimizer.epsilon", 1.0)?,
        n_particles: cfg.require_usize("optimizer.N")?,
        sample_size: cfg.usize_or("sampling.M", 50)?,
        n_it: cfg.require_usize("optimizer.n_it")?,
        diffusion,
        n_sy: cfg.usize_or("optimizer.n_sY", 1)?,
        init_box,
    };
    params
        .validate()
        .map_err(|e| ConfigError(format!("optimizer parameters: {e}")))?;
    Ok(params)
}

/// Optimizer kind from the bare `optimizer` key (or `optimizer.kind`), with
/// an optional `:n` suffix overriding n_sY, e.g. `lkbo_fvse_sy:50`.
pub fn kind_from(cfg: &Config) -> Result<(OptimizerKind, Option<usize>), ConfigError> {
    let raw = match cfg.str_or("optimizer", "")? {
        "" => cfg.str_or("optimizer.kind", "lkbo_fvse")?.to_string(),
        s => s.to_string(),
    };
    parse_kind(&raw)
}

pub fn parse_kind(raw: &str) -> Result<(OptimizerKind, Option<usize>), ConfigError> {
    let (name, n_sy) = match raw.split_once(':') {
        None => (raw, None),
        Some((name, n)) => {
            let n: usize = n
                .parse()
                .map_err(|_| ConfigError(format!("optimizer `{raw}`: invalid n_sY suffix")))?;
            (name, Some(n))
        }
    };
    let kind: OptimizerKind = name
        .parse()
        .map_err(|e: String| ConfigError(format!("optimizer: {e}")))?;
    Ok((kind, n_sy))
}

pub fn seed_from(cfg: &Config, flag: Option<u64>) -> Result<u64, ConfigError> {
    Ok(flag.or(cfg.u64_opt("seed")?).unwrap_or(0))
}

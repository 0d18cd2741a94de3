//! `diagnose`: convergence-condition report as JSON.
//!
//! Always exits 0 when the report can be computed — a failed concentration
//! condition is a diagnosis, not an error. Exit 2 is reserved for
//! configurations that cannot produce a report at all (no Assumption-1
//! bounds and no user-supplied C_alpha).

use lkbo_core::diagnostics::{
    convergence_mu, convergence_nu, estimate_c_alpha, estimate_omega_norm, ConvergenceReport,
    DiagnosticsError, NuInputs,
};
use lkbo_core::format::to_json_line;
use lkbo_core::RngStream;

use crate::build;
use crate::commands::{CmdError, Ctx};
use crate::config::ConfigError;

pub fn run(ctx: &Ctx) -> Result<(), CmdError> {
    let cfg = &ctx.cfg;
    let built = build::objective_from(cfg)?;
    let law = build::law_from(cfg)?;
    let lambda = cfg.require_f64("optimizer.lambda")?;
    let sigma = cfg.require_f64("optimizer.sigma")?;
    let diffusion = match cfg.str_or("optimizer.diffusion", "anisotropic")? {
        "isotropic" => lkbo_core::DiffusionKind::Isotropic,
        "anisotropic" => lkbo_core::DiffusionKind::Anisotropic,
        other => {
            return Err(ConfigError(format!("optimizer.diffusion: unknown kind `{other}`")).into())
        }
    };
    let kappa = diffusion.kappa(built.dim);
    let alpha = match cfg.f64_opt("diagnose.alpha")? {
        Some(a) => a,
        None => cfg.require_f64("optimizer.alpha").map_err(|_| {
            ConfigError("need diagnose.alpha or optimizer.alpha".into())
        })?,
    };
    let sample_size = cfg.usize_or("sampling.M", 50)?;
    let n_mc = cfg.usize_or("diagnose.n_mc", 10_000)?;

    let mut stream = RngStream::new(ctx.seed, 0);
    let (c_alpha, c_alpha_std_err) = match cfg.f64_opt("diagnose.c_alpha")? {
        Some(c) => (c, 0.0),
        None => estimate_c_alpha(&*built.objective, &law, sample_size, alpha, n_mc, &mut stream)
            .map_err(|e| match e {
                DiagnosticsError::BoundsUnavailable => CmdError::Config(format!(
                    "objective `{}` supplies no Assumption-1 bounds and no diagnose.c_alpha was given",
                    built.name
                )),
                other => CmdError::Numeric(other.to_string()),
            })?,
    };

    let (mu, mu_positive) = convergence_mu(lambda, sigma, kappa, c_alpha);

    let nu_constants = (
        cfg.f64_opt("diagnose.c1")?,
        cfg.f64_opt("diagnose.c2")?,
        cfg.f64_opt("diagnose.f_lower")?,
        cfg.f64_opt("diagnose.v0")?,
    );
    let (nu, nu_feasible) = match nu_constants {
        (Some(c1), Some(c2), Some(f_lower), Some(v0)) if mu_positive => {
            let omega_norm = match cfg.f64_opt("diagnose.omega_norm")? {
                Some(w) => w,
                None => {
                    let omega_mc = cfg.usize_or("diagnose.omega_mc", 10_000)?;
                    let init_box = match cfg.num_list_opt("optimizer.init_box")? {
                        Some(v) if v.len() == 2 => (v[0], v[1]),
                        _ => (-3.0, 3.0),
                    };
                    estimate_omega_norm(&*built.objective, alpha, init_box, omega_mc, &mut stream)
                        .map_err(|e| CmdError::Config(e.to_string()))?
                        .0
                }
            };
            let inputs = NuInputs {
                mu,
                c_alpha,
                alpha,
                lambda,
                sigma,
                kappa,
                c1,
                c2,
                f_lower,
                v0,
                omega_norm,
            };
            let (nu, feasible) =
                convergence_nu(&inputs).map_err(|e| CmdError::Numeric(e.to_string()))?;
            (Some(nu), Some(feasible))
        }
        _ => (None, None),
    };

    let report = ConvergenceReport {
        c_alpha,
        c_alpha_std_err,
        mu,
        mu_positive,
        nu,
        nu_feasible,
    };
    println!("{}", to_json_line(&report));
    Ok(())
}

//! `moments`: empirical (m, V) phase traces next to the approximated ODE.
//!
//! For each initial box the empirical runs across the α sweep share one
//! stream id, hence one initial ensemble — the common-random-numbers setup
//! that makes the α comparison and the ODE pairing meaningful. The ODE is
//! integrated from the shared empirical `(m(0), V(0))` with the `1/η` factor
//! on the right-hand side and sampled on the same `t_h = h·Δt` grid.

use lkbo_core::dsmc::run_lkbo_fvse_traced;
use lkbo_core::moments::{integrate_approx_system, ApproxSystemParams};
use lkbo_core::{RngStream, TraceOptions};

use crate::build;
use crate::commands::optimize::map_run_error;
use crate::commands::{CmdError, Ctx};
use crate::config::ConfigError;
use crate::output::write_moment_trace;

pub fn run(ctx: &Ctx) -> Result<(), CmdError> {
    let cfg = &ctx.cfg;
    let built = build::objective_from(cfg)?;
    let law = build::law_from(cfg)?;
    let base_params = build::params_from(cfg)?;

    let alphas = match cfg.num_list_opt("moments.alphas")? {
        Some(v) if !v.is_empty() => v,
        _ => vec![base_params.alpha],
    };
    let boxes = match cfg.num_list_opt("moments.init_boxes")? {
        None => vec![base_params.init_box],
        Some(v) if v.len() % 2 == 0 && !v.is_empty() => {
            v.chunks_exact(2).map(|c| (c[0], c[1])).collect()
        }
        Some(v) => {
            return Err(ConfigError(format!(
                "moments.init_boxes: expected flattened [lo, hi] pairs, got {} numbers",
                v.len()
            ))
            .into())
        }
    };
    let x_tilde = match cfg.num_list_opt("moments.x_tilde")? {
        Some(v) => {
            if v.len() != built.dim {
                return Err(ConfigError(format!(
                    "moments.x_tilde: expected {} coordinates, got {}",
                    built.dim,
                    v.len()
                ))
                .into());
            }
            v
        }
        None => built.x_min.clone(),
    };
    let rel_tol = cfg.f64_or("moments.rel_tol", 1e-8)?;
    let abs_tol = cfg.f64_or("moments.abs_tol", 1e-10)?;

    let ode_params = ApproxSystemParams {
        lambda: base_params.lambda,
        sigma: base_params.sigma,
        kappa: base_params.diffusion.kappa(built.dim),
        x_tilde,
        eta_scale: 1.0 / base_params.eta,
    };

    for (bi, init_box) in boxes.iter().enumerate() {
        let box_suffix = (boxes.len() > 1).then(|| format!("box{}", bi + 1));
        let mut shared_start = None;
        let mut grid = Vec::new();
        for alpha in &alphas {
            let mut params = base_params.clone();
            params.alpha = *alpha;
            params.init_box = *init_box;
            // One stream id per box: the alpha sweep shares g0.
            let mut stream = RngStream::new(ctx.seed, bi as u64);
            let report = run_lkbo_fvse_traced(
                &params,
                &*built.objective,
                &law,
                &mut stream,
                &TraceOptions::phase(),
            )
            .map_err(map_run_error)?;
            let phase = report.phase.expect("phase tracing requested");
            if shared_start.is_none() {
                shared_start = Some(phase.states[0].clone());
                grid = phase.times.clone();
            }
            let name = trace_name("empirical_trace", &box_suffix, (alphas.len() > 1).then(|| alpha_label(*alpha)));
            write_moment_trace(&ctx.output_dir.join(&name), &phase.states)?;
            println!(
                "wrote {name} (terminal distance to equilibrium {:.6})",
                phase
                    .states
                    .last()
                    .expect("non-empty trace")
                    .distance_to(&ode_params.x_tilde)
            );
        }

        let start = shared_start.expect("at least one alpha");
        let states = integrate_approx_system(
            &ode_params,
            &start,
            *grid.last().expect("non-empty grid"),
            &grid,
            rel_tol,
            abs_tol,
        )
        .map_err(|e| CmdError::Numeric(e.to_string()))?;
        let name = trace_name("ode_trace", &box_suffix, None);
        write_moment_trace(&ctx.output_dir.join(&name), &states)?;
        println!("wrote {name}");
    }
    Ok(())
}

fn trace_name(stem: &str, box_suffix: &Option<String>, alpha_suffix: Option<String>) -> String {
    let mut name = stem.to_string();
    if let Some(b) = box_suffix {
        name.push('_');
        name.push_str(b);
    }
    if let Some(a) = alpha_suffix {
        name.push('_');
        name.push_str(&a);
    }
    name.push_str(".csv");
    name
}

fn alpha_label(alpha: f64) -> String {
    if alpha == alpha.trunc() && alpha.abs() < 1e15 {
        format!("alpha{}", alpha as i64)
    } else {
        format!("alpha{alpha:e}")
    }
}

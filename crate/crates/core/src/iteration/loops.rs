use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use super::bounds::{check_admissible, smallness_gate, AdmissibilityReport, AdmissibleBounds, Certificates, GateReport};
use super::residual::{nonlinear_residual, NonlinearResidual};
use super::taylor::taylor_remainder;
use super::{Init, IterationState, LoopOptions, LoopReport, Solver};
use crate::error::{Error, Result};
use crate::field::{gradient, grad_seminorm, write_field, write_field_tagged, AnyField, Exponent, ScalarField, VectorField};
use crate::linsolve::{
    face_product, h1_norm, l2_norm, solve_decomposed_with, solve_monolithic, viscous_operator, wall_shear,
    DecomposedOptions, LinearizedProblem, LinearSolution,
};
use crate::model::ModelParams;

#[derive(Debug, Clone, PartialEq)]
pub struct InnerOutcome {
    pub r: ScalarField,
    pub u: VectorField,
    pub report: LoopReport,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DensityOutcome {
    pub r: ScalarField,
    pub u: VectorField,
    pub report: LoopReport,
    /// Reports of the inner loops, one per density iterate.
    pub inner: Vec<LoopReport>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OuterOutcome {
    pub state: IterationState,
    pub report: LoopReport,
    /// Reports of the density loops, one per outer iterate.
    pub density: Vec<LoopReport>,
    pub residual: NonlinearResidual,
    pub admissibility: Option<AdmissibilityReport>,
    pub gate: Option<GateReport>,
    /// Damping in effect at the end.
    pub theta: f64,
}

impl OuterOutcome {
    /// Turns a non-converged run into an error carrying the last difference.
    pub fn into_result(self) -> Result<Self> {
        if self.report.converged {
            Ok(self)
        } else {
            Err(Error::NonConvergent {
                what: "outer loop",
                iterations: self.report.iterates,
                last: self.report.errors.last().copied().unwrap_or(f64::NAN),
            })
        }
    }
}

/// The linear problem of one inner step: density offset `rt` and
/// convecting velocity `ub` frozen, variable-viscosity, transport and
/// pressure-remainder terms evaluated at `ut`.
pub(crate) fn inner_problem(
    ub: &VectorField,
    rt: &ScalarField,
    ut: &VectorField,
    params: &ModelParams,
) -> Result<LinearizedProblem> {
    let m = params.m;
    let stress = wall_shear(rt, ut);
    let rho = rt.map(|v| m + v);
    let g = viscous_operator(rt, ut, &stress)
        .scaled(-1.0)
        .sub(&gradient(&taylor_remainder(rt, params)?))
        .add(&face_product(&rho, &params.force))
        .with_walls_zeroed();
    Ok(LinearizedProblem {
        params: params.clone(),
        transport_velocity: ut.clone(),
        convective_velocity: ub.clone(),
        density_offset: rt.clone(),
        rhs_g: g,
        rhs_h: stress.stress_to_traction(),
    })
}

fn linear_solve(prob: &LinearizedProblem, opts: &LoopOptions) -> Result<LinearSolution> {
    match opts.solver {
        Solver::Monolithic => solve_monolithic(prob),
        Solver::Decomposed => {
            let alpha = opts.bounds.map_or(0.1, |b| b.alpha);
            solve_decomposed_with(prob, &DecomposedOptions { alpha, ..DecomposedOptions::default() })
        }
    }
}

/// Records an admissibility failure as a warning, or fails under strict mode.
fn monitor(
    r: &ScalarField,
    u: &VectorField,
    params: &ModelParams,
    opts: &LoopOptions,
    level: &str,
    report: &mut LoopReport,
) -> Result<()> {
    let Some(bounds) = &opts.bounds else { return Ok(()) };
    let adm = check_admissible(&Certificates::measure(r, u, params), bounds);
    if adm.all_pass() {
        return Ok(());
    }
    let msg = format!("{level} iterate {}: {}", report.iterates, adm.summary());
    if opts.strict {
        return Err(Error::Admissibility(msg));
    }
    log::warn!("{msg}");
    report.warnings.push(msg);
    Ok(())
}

/// Velocity loop at frozen density offset `rt` and convecting velocity `ub`,
/// started from `ut = 0`.
pub fn inner_banach(ub: &VectorField, rt: &ScalarField, params: &ModelParams, opts: &LoopOptions) -> Result<InnerOutcome> {
    inner_banach_from(ub, rt, &VectorField::zeros(ub.grid), params, opts)
}

pub fn inner_banach_from(
    ub: &VectorField,
    rt: &ScalarField,
    u0: &VectorField,
    params: &ModelParams,
    opts: &LoopOptions,
) -> Result<InnerOutcome> {
    let mut report = LoopReport::default();
    let mut ut = u0.clone();
    let mut r: ScalarField;
    loop {
        let sol = linear_solve(&inner_problem(ub, rt, &ut, params)?, opts)?;
        let diff = grad_seminorm(&sol.u.sub(&ut), Exponent::TWO);
        let size = grad_seminorm(&sol.u, Exponent::TWO);
        report.push(diff, size);
        ut = sol.u;
        r = sol.r;
        monitor(&r, &ut, params, opts, "inner", &mut report)?;
        if diff <= opts.tol.inner * size {
            report.converged = true;
            break;
        }
        if report.iterates >= opts.max_inner || !diff.is_finite() {
            return Err(Error::NonConvergent { what: "inner loop", iterations: report.iterates, last: diff / size });
        }
    }
    report.final_residual = nonlinear_residual(&r, &ut, params).max();
    Ok(InnerOutcome { r, u: ut, report })
}

/// Density loop at frozen convecting velocity `ub`, started from `r = 0`.
pub fn density_loop(ub: &VectorField, params: &ModelParams, opts: &LoopOptions) -> Result<DensityOutcome> {
    let g = ub.grid;
    density_loop_from(ub, &ScalarField::zeros(g), &VectorField::zeros(g), params, opts)
}

/// Density loop started from `r0`; every inner loop is warm-started from
/// the previous velocity, the first one from `u0`.
pub fn density_loop_from(
    ub: &VectorField,
    r0: &ScalarField,
    u0: &VectorField,
    params: &ModelParams,
    opts: &LoopOptions,
) -> Result<DensityOutcome> {
    let mut report = LoopReport::default();
    let mut inner = Vec::new();
    let mut r = r0.clone();
    let mut u = u0.clone();
    loop {
        let step = inner_banach_from(ub, &r, &u, params, opts)?;
        let diff = l2_norm(&step.r.sub(&r));
        let size = l2_norm(&step.r) + grad_seminorm(&step.u, Exponent::TWO) / params.q_scale();
        report.push(diff, size);
        inner.push(step.report);
        r = step.r;
        u = step.u;
        if diff <= opts.tol.density * size {
            report.converged = true;
            break;
        }
        if report.iterates >= opts.max_density || !diff.is_finite() {
            return Err(Error::NonConvergent { what: "density loop", iterations: report.iterates, last: diff / size });
        }
    }
    report.final_residual = nonlinear_residual(&r, &u, params).max();
    Ok(DensityOutcome { r, u, report, inner })
}

fn write_checkpoint(
    dir: &Path,
    tag: Option<&str>,
    k: usize,
    r: &ScalarField,
    u: &VectorField,
    report: &LoopReport,
    params: &ModelParams,
    theta: f64,
) -> Result<()> {
    for (name, f) in [("r", AnyField::from(r.clone())), ("u", AnyField::from(u.clone()))] {
        let mut file = std::io::BufWriter::new(std::fs::File::create(dir.join(format!("outer{k:04}_{name}.hvf")))?);
        match tag {
            Some(t) => write_field_tagged(&mut file, &f, t)?,
            None => write_field(&mut file, &f)?,
        }
        file.flush()?;
    }
    let c = Certificates::measure(r, u, params);
    let res = nonlinear_residual(r, u, params);
    let mut s = String::new();
    if let Some(t) = tag {
        let _ = writeln!(s, "tag = {t}");
    }
    let _ = writeln!(s, "iterate = {k}");
    let _ = writeln!(s, "m = {:e}\ngamma = {}\ntheta = {theta}", params.m, params.gamma);
    let _ = writeln!(s, "difference = {:e}", report.errors.last().copied().unwrap_or(0.0));
    let ratios: Vec<String> = report.contraction_ratios.iter().map(|x| format!("{x:e}")).collect();
    let _ = writeln!(s, "ratios = [{}]", ratios.join(", "));
    let _ = writeln!(s, "r_bound = {:e}\nenergy = {:e}\nu_bound = {:e}", c.r_bound, c.energy, c.u_bound);
    let _ = writeln!(s, "div_bound = {:e}\nmean = {:e}\nxi = {:e}", c.div_bound, c.mean, c.xi);
    let _ = writeln!(s, "residual_mass = {:e}\nresidual_momentum = {:e}", res.mass, res.momentum);
    let _ = writeln!(s, "residual_bc = {:e}\nresidual_mean = {:e}", res.bc, res.mean);
    std::fs::write(dir.join(format!("outer{k:04}.txt")), s)?;
    Ok(())
}

/// Damped Picard iteration `ub <- ub + theta (T(ub) - ub)`, where `T(ub)` is
/// the velocity returned by [`density_loop`].
///
/// Running out of iterations is not an error: the outcome carries the full
/// ratio history with `converged == false` (see [`OuterOutcome::into_result`]).
pub fn outer_loop(params: &ModelParams, opts: &LoopOptions) -> Result<OuterOutcome> {
    params.validate()?;
    let g = params.grid();
    if !(opts.theta > 0.0 && opts.theta <= 1.0) {
        return Err(Error::InvalidParams(format!("damping must lie in (0, 1], got {}", opts.theta)));
    }
    let mut report = LoopReport::default();
    let gate = opts.bounds.map(|b| smallness_gate(params, &b, &opts.gate));
    if let Some(gr) = &gate {
        if !gr.pass {
            let msg = format!("smallness gate fails: {:.3e} <= {:.3e}", gr.lhs, gr.rhs);
            if opts.strict {
                return Err(Error::BelowRegime(msg));
            }
            log::warn!("{msg}");
            report.warnings.push(msg);
        }
    }
    if let Some(dir) = &opts.checkpoint_dir {
        std::fs::create_dir_all(dir)?;
    }

    let mut ub = match &opts.init {
        Init::Zero => VectorField::zeros(g),
        Init::Velocity(v) => {
            if v.grid != g {
                return Err(Error::GridMismatch);
            }
            v.clone().with_walls_zeroed()
        }
    };
    let mut theta = opts.theta;
    let mut r = ScalarField::zeros(g);
    let mut u = ub.clone();
    let mut density = Vec::new();
    loop {
        let d = density_loop_from(&ub, &r, &u, params, opts)?;
        let diff = h1_norm(&d.u.sub(&ub));
        let size = h1_norm(&d.u);
        let before = report.contraction_ratios.len();
        report.push(diff, size);
        for w in d.report.warnings.iter().chain(d.inner.iter().flat_map(|i| i.warnings.iter())) {
            report.warnings.push(w.clone());
        }
        density.push(d.report);
        r = d.r;
        u = d.u;
        if let Some(dir) = &opts.checkpoint_dir {
            write_checkpoint(dir, opts.checkpoint_tag.as_deref(), report.iterates, &r, &u, &report, params, theta)?;
        }
        monitor(&r, &u, params, opts, "outer", &mut report)?;
        log::debug!("outer {}: difference {diff:.3e} of {size:.3e}", report.iterates);
        if diff <= opts.tol.outer * size {
            report.converged = true;
            break;
        }
        if report.iterates >= opts.max_outer || !diff.is_finite() {
            break;
        }
        if report.contraction_ratios.len() > before && report.contraction_ratios[before] > 0.95 {
            theta *= 0.5;
            log::info!("outer ratio {:.3} > 0.95, damping halved to {theta}", report.contraction_ratios[before]);
        }
        ub = ub.axpy(theta, &u.sub(&ub));
    }

    let residual = nonlinear_residual(&r, &u, params);
    report.final_residual = residual.max();
    if report.converged && report.final_residual > opts.tol.residual {
        let msg = format!("converged but nonlinear residual {:.3e} exceeds {:.1e}", report.final_residual, opts.tol.residual);
        log::warn!("{msg}");
        report.warnings.push(msg);
    }
    let certificates = Certificates::measure(&r, &u, params);
    let admissibility = opts.bounds.map(|b| check_admissible(&certificates, &b));
    Ok(OuterOutcome {
        state: IterationState { r, u, certificates },
        report,
        density,
        residual,
        admissibility,
        gate,
        theta,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Calibration {
    pub bounds: AdmissibleBounds,
    pub certificates: Certificates,
    /// `C_f` divided by the force bracket of [`AdmissibleBounds::force_bracket`].
    pub form_constant: f64,
}

/// Runs the outer loop without bounds and sets `E` and `C_f` to `margin`
/// times the measured certificates.
pub fn calibrate(params: &ModelParams, opts: &LoopOptions, margin: f64, alpha: f64) -> Result<Calibration> {
    let run = outer_loop(params, &LoopOptions { bounds: None, checkpoint_dir: None, ..opts.clone() })?.into_result()?;
    let c = run.state.certificates;
    let bounds = AdmissibleBounds::from_certificates(&c, margin, alpha);
    let form_constant = bounds.c_f / AdmissibleBounds::force_bracket(params, bounds.energy);
    Ok(Calibration { bounds, certificates: c, form_constant })
}

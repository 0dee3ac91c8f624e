use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;
use std::process::ExitCode;

use anyhow::{Context, Result};
use heavyflow::diagnostics::verify::{run_verify_seeded, FaultHooks};
use heavyflow::diagnostics::{
    incompressible_reference_solve, output, params_fingerprint, grid_hash, run_study, StudyConfig, StudyKind,
};
use heavyflow::field::{read_field_tagged, write_csv, AnyField};
use heavyflow::iteration::{calibrate, outer_loop, AdmissibleBounds, Init, LoopReport, OuterOutcome};
use heavyflow::model::ModelParams;
use heavyflow::parallel::{Execution, THREADS_ENV};
use heavyflow::Error;

use crate::artifacts::Artifacts;
use crate::config::{BoundsMode, InitChoice, RunConfig};

pub const EXIT_OK: u8 = 0;
pub const EXIT_NOT_CONVERGED: u8 = 2;
pub const EXIT_VERIFY_FAILED: u8 = 3;

/// Errors that end a run without an accepted solution; everything else is a
/// configuration or I/O problem.
fn is_run_failure(e: &Error) -> bool {
    matches!(
        e,
        Error::NonConvergent { .. } | Error::Admissibility(_) | Error::BelowRegime(_) | Error::Solver { .. }
    )
}

/// Applies the worker cap before any pool is built.
pub fn apply_threads(cfg: &RunConfig) -> Execution {
    if let Some(n) = cfg.run.threads {
        std::env::set_var(THREADS_ENV, n.to_string());
    }
    match heavyflow::parallel::thread_cap() {
        Some(1) => Execution::Sequential,
        _ => Execution::Parallel,
    }
}

fn list(v: &[f64]) -> String {
    let items: Vec<String> = v.iter().map(|x| format!("{x:e}")).collect();
    format!("[{}]", items.join(", "))
}

fn report_lines(s: &mut String, prefix: &str, r: &LoopReport) {
    let _ = writeln!(s, "{prefix}iterates = {}", r.iterates);
    let _ = writeln!(s, "{prefix}converged = {}", r.converged);
    let _ = writeln!(s, "{prefix}errors = {}", list(&r.errors));
    let _ = writeln!(s, "{prefix}ratios = {}", list(&r.contraction_ratios));
    if let Some(q) = r.mean_ratio() {
        let _ = writeln!(s, "{prefix}mean_ratio = {q:e}");
    }
}

fn sidecar(fp: &str, params: &ModelParams, bounds: Option<&AdmissibleBounds>) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "# heavyflow solve");
    let _ = writeln!(s, "config = {fp}");
    let _ = writeln!(s, "params = {}", params_fingerprint(params));
    let _ = writeln!(s, "grid = {}", grid_hash(&params.grid()));
    let _ = writeln!(s, "m = {:e}\ngamma = {}\nfriction = {}\np = {}", params.m, params.gamma, params.friction, params.p_exp);
    if let Some(b) = bounds {
        let _ = writeln!(s, "bound_c_f = {:e}\nbound_energy = {:e}\nbound_alpha = {}", b.c_f, b.energy, b.alpha);
    }
    s
}

fn outcome_lines(s: &mut String, out: &OuterOutcome) {
    report_lines(s, "outer_", &out.report);
    let _ = writeln!(s, "theta = {}", out.theta);
    let density: Vec<String> = out.density.iter().map(|d| d.iterates.to_string()).collect();
    let _ = writeln!(s, "density_iterates = [{}]", density.join(", "));
    let density_ratios: Vec<f64> = out.density.iter().filter_map(|d| d.mean_ratio()).collect();
    let _ = writeln!(s, "density_mean_ratios = {}", list(&density_ratios));
    let r = &out.residual;
    let _ = writeln!(s, "final_residual = {:e}", out.report.final_residual);
    let _ = writeln!(s, "residual_mass = {:e}\nresidual_momentum = {:e}", r.mass, r.momentum);
    let _ = writeln!(s, "residual_bc = {:e}\nresidual_mean = {:e}", r.bc, r.mean);
    let c = &out.state.certificates;
    let _ = writeln!(s, "r_bound = {:e}\nenergy = {:e}\nu_bound = {:e}", c.r_bound, c.energy, c.u_bound);
    let _ = writeln!(s, "div_bound = {:e}\nmean = {:e}\nxi = {:e}", c.div_bound, c.mean, c.xi);
    if let Some(a) = &out.admissibility {
        let _ = writeln!(s, "admissible = {}", a.all_pass());
    }
    if let Some(g) = &out.gate {
        let _ = writeln!(s, "gate_lhs = {:e}\ngate_rhs = {:e}\ngate_pass = {}", g.lhs, g.rhs, g.pass);
    }
    for w in &out.report.warnings {
        let _ = writeln!(s, "warning = {w}");
    }
}

pub fn solve(cfg: &RunConfig) -> Result<ExitCode> {
    apply_threads(cfg);
    let fp = cfg.fingerprint();
    let force = cfg.force_field()?;
    let params = ModelParams::new(cfg.single_mass()?, cfg.model.gamma, cfg.model.friction, cfg.model.p, force)?;
    let mut art = Artifacts::create(&cfg.output.dir, &fp)?;
    art.text("config.toml", &format!("# heavyflow config {fp}\n{}", cfg.canonical()))?;

    let mut opts = cfg.loop_options();
    if cfg.loops.init == InitChoice::Reference {
        let reference = incompressible_reference_solve(&params.force, params.friction)?;
        opts.init = Init::Velocity(reference.u);
    }
    if cfg.loops.checkpoints {
        opts.checkpoint_dir = Some(art.dir().join("checkpoints"));
        opts.checkpoint_tag = Some(art.tag());
    }
    let b = &cfg.bounds;
    let bounds = match b.mode {
        BoundsMode::None => Ok(None),
        BoundsMode::Fixed => Ok(Some(AdmissibleBounds {
            c_f: b.c_f.unwrap_or_default(),
            energy: b.energy.unwrap_or_default(),
            alpha: b.alpha,
        })),
        BoundsMode::Calibrate => calibrate(&params, &opts, b.margin, b.alpha).map(|c| {
            log::info!("calibrated C_f = {:.4e} (form constant {:.4e})", c.bounds.c_f, c.form_constant);
            Some(c.bounds)
        }),
    };
    let run = bounds.and_then(|bd| {
        opts.bounds = bd;
        outer_loop(&params, &opts)
    });

    let mut s = sidecar(&fp, &params, opts.bounds.as_ref());
    let code = match run {
        Ok(out) => {
            outcome_lines(&mut s, &out);
            let r = out.state.r.clone();
            art.field("r.hvf", r.clone().into())?;
            art.field("u.hvf", out.state.u.clone().into())?;
            art.field("rho.hvf", r.map(|v| params.m + v).into())?;
            if out.report.converged {
                println!(
                    "converged in {} outer iterates, residual {:.3e}",
                    out.report.iterates, out.report.final_residual
                );
                EXIT_OK
            } else {
                eprintln!("outer loop did not converge in {} iterates", out.report.iterates);
                EXIT_NOT_CONVERGED
            }
        }
        Err(e) if is_run_failure(&e) => {
            let _ = writeln!(s, "converged = false\nerror = {e}");
            eprintln!("run failed: {e}");
            EXIT_NOT_CONVERGED
        }
        Err(e) => return Err(e.into()),
    };
    art.text("solve.txt", &s)?;
    println!("wrote {} files to {}", art.written().len(), art.dir().display());
    Ok(ExitCode::from(code))
}

pub fn study(cfg: &RunConfig) -> Result<ExitCode> {
    let execution = apply_threads(cfg);
    let fp = cfg.fingerprint();
    let kind: StudyKind = cfg.study.kind.into();
    let mut opts = cfg.loop_options();
    if cfg.bounds.mode == BoundsMode::Fixed {
        opts.bounds = Some(AdmissibleBounds {
            c_f: cfg.bounds.c_f.unwrap_or_default(),
            energy: cfg.bounds.energy.unwrap_or_default(),
            alpha: cfg.bounds.alpha,
        });
    }
    let base = StudyConfig::new(cfg.force_field()?, cfg.model.gamma, cfg.mass_list());
    let study = StudyConfig {
        friction: cfg.model.friction,
        p_exp: cfg.model.p,
        loop_options: opts,
        execution,
        probes: matches!(kind, StudyKind::Contraction | StudyKind::Full),
        reference: matches!(kind, StudyKind::LowMach | StudyKind::Full),
        margin: cfg.bounds.margin,
        ..base
    };
    let report = run_study(&study, kind)?;

    let mut art = Artifacts::create(&cfg.output.dir, &fp)?;
    art.text("config.toml", &format!("# heavyflow config {fp}\n{}", cfg.canonical()))?;
    art.text("study.csv", &output::study_csv(&report, &fp))?;
    let mut plotted: Vec<&str> = report.fits.iter().map(|f| f.quantity).collect();
    plotted.push("u_h1");
    for q in plotted {
        if let Some(svg) = output::loglog_svg(&report, q, &fp) {
            art.text(&format!("{q}.svg"), &svg)?;
        }
    }
    for line in output::summary_lines(&report) {
        println!("{line}");
    }
    println!("wrote {} files to {}", art.written().len(), art.dir().display());
    Ok(ExitCode::from(if report.all_converged() { EXIT_OK } else { EXIT_NOT_CONVERGED }))
}

pub fn verify(cfg: &RunConfig, hooks: FaultHooks) -> Result<ExitCode> {
    let report = run_verify_seeded(hooks, cfg.run.seed);
    print!("{}", report.table());
    if report.all_pass() {
        println!("all identities hold");
        Ok(ExitCode::from(EXIT_OK))
    } else {
        let failed = report.failed().join(", ");
        println!("failed: {failed}");
        eprintln!("verify failed: {failed}");
        Ok(ExitCode::from(EXIT_VERIFY_FAILED))
    }
}

pub fn dump(input: &Path, out: Option<&Path>) -> Result<ExitCode> {
    let mut f = std::io::BufReader::new(
        std::fs::File::open(input).with_context(|| format!("cannot open {}", input.display()))?,
    );
    let (field, tag) = read_field_tagged(&mut f).with_context(|| format!("cannot read {}", input.display()))?;
    let mut buf = Vec::new();
    if let Some(t) = &tag {
        writeln!(buf, "# {t}")?;
    }
    write_csv(&mut buf, &field)?;
    match out {
        Some(p) => std::fs::write(p, &buf).with_context(|| format!("cannot write {}", p.display()))?,
        None => std::io::stdout().lock().write_all(&buf)?,
    }
    let kind = match field {
        AnyField::Scalar(_) => "cell scalar",
        AnyField::Vector(_) => "face vector",
        AnyField::Node(_) => "node scalar",
    };
    let g = field.grid();
    eprintln!("{kind} field on {}x{}", g.nx, g.ny);
    Ok(ExitCode::from(EXIT_OK))
}

use std::fmt;

use super::fingerprint::{grid_hash, params_fingerprint};
use super::fit::{fit_loglog, LineFit};
use super::reference::incompressible_reference_solve;
use crate::error::{Error, Result};
use crate::field::{divergence, grad_seminorm, lp_norm, Exponent, GridSpec, ScalarField, VectorField};
use crate::iteration::{
    density_loop, inner_banach, outer_loop, AdmissibleBounds, Certificates, IterationState, LoopOptions,
};
use crate::linsolve::h1_norm;
use crate::model::ModelParams;
use crate::parallel::{map_collect, Execution};

/// `Xi = m^(gamma-2) ||r||_{1,p} + ||u||_{2,p}`.
pub fn xi(state: &IterationState, params: &ModelParams) -> f64 {
    Certificates::measure(&state.r, &state.u, params).xi
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StudyKind {
    Divergence,
    Contraction,
    LowMach,
    /// All quantities and fits.
    Full,
}

impl StudyKind {
    pub fn name(&self) -> &'static str {
        match self {
            StudyKind::Divergence => "divergence",
            StudyKind::Contraction => "contraction",
            StudyKind::LowMach => "low_mach",
            StudyKind::Full => "full",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudyConfig {
    pub grid: GridSpec,
    pub gamma: f64,
    pub friction: f64,
    pub p_exp: f64,
    pub force: VectorField,
    pub masses: Vec<f64>,
    pub loop_options: LoopOptions,
    pub execution: Execution,
    /// Run the cold-start contraction probes at each converged state.
    pub probes: bool,
    /// Compute the distance to the incompressible reference.
    pub reference: bool,
    /// Safety factor of the calibrated bounds.
    pub margin: f64,
}

impl StudyConfig {
    pub fn new(force: VectorField, gamma: f64, masses: Vec<f64>) -> Self {
        StudyConfig {
            grid: force.grid,
            gamma,
            friction: 1.0,
            p_exp: 4.0,
            force,
            masses,
            loop_options: LoopOptions::default(),
            execution: Execution::Parallel,
            probes: true,
            reference: true,
            margin: 2.0,
        }
    }

    pub fn params(&self, m: f64) -> Result<ModelParams> {
        ModelParams::new(m, self.gamma, self.friction, self.p_exp, self.force.clone())
    }

    fn validate(&self) -> Result<()> {
        if self.masses.len() < 3 {
            return Err(Error::InvalidParams(format!("need >= 3 points to fit, got {}", self.masses.len())));
        }
        if self.force.grid != self.grid {
            return Err(Error::GridMismatch);
        }
        for &m in &self.masses {
            self.params(m)?.validate()?;
        }
        Ok(())
    }
}

/// Diagnostics of one converged (or failed) run. Quantities that could not
/// be computed are NaN.
#[derive(Debug, Clone, PartialEq)]
pub struct StudyRow {
    pub m: f64,
    pub gamma: f64,
    pub converged: bool,
    pub outer_iterates: usize,
    pub xi: f64,
    pub grad_u: f64,
    pub u_h1: f64,
    pub force_l65: f64,
    pub div_lp: f64,
    pub div_scaled: f64,
    pub r_bound: f64,
    pub u_bound: f64,
    /// `|int r| / int |r|`.
    pub mean_rel: f64,
    /// Geometric mean of the cold-start inner ratios.
    pub inner_ratio: f64,
    /// Square of the geometric mean of the cold-start density ratios.
    pub density_ratio_sq: f64,
    pub outer_ratio: f64,
    pub residual_mass: f64,
    pub residual_momentum: f64,
    pub residual_bc: f64,
    pub residual_mean: f64,
    /// `||u - u_inc||_{1,2}`.
    pub dist_inc: f64,
    pub params_fingerprint: String,
    pub grid_hash: String,
    /// Error text when the run failed.
    pub error: Option<String>,
}

impl StudyRow {
    fn failed(params: &ModelParams, err: &Error) -> Self {
        let nan = f64::NAN;
        StudyRow {
            m: params.m,
            gamma: params.gamma,
            converged: false,
            outer_iterates: 0,
            xi: nan,
            grad_u: nan,
            u_h1: nan,
            force_l65: params.force_norm(1.2),
            div_lp: nan,
            div_scaled: nan,
            r_bound: nan,
            u_bound: nan,
            mean_rel: nan,
            inner_ratio: nan,
            density_ratio_sq: nan,
            outer_ratio: nan,
            residual_mass: nan,
            residual_momentum: nan,
            residual_bc: nan,
            residual_mean: nan,
            dist_inc: nan,
            params_fingerprint: params_fingerprint(params),
            grid_hash: grid_hash(&params.grid()),
            error: Some(err.to_string()),
        }
    }

    pub const CSV_HEADER: &'static str = "m,gamma,converged,outer_iterates,xi,grad_u,u_h1,force_l65,div_lp,div_scaled,\
r_bound,u_bound,mean_rel,inner_ratio,density_ratio_sq,outer_ratio,residual_mass,residual_momentum,residual_bc,\
residual_mean,dist_inc,params_fingerprint,grid_hash";

    pub fn csv_line(&self) -> String {
        let f = |v: f64| format!("{v:.16e}");
        [
            f(self.m),
            f(self.gamma),
            (self.converged as u8).to_string(),
            self.outer_iterates.to_string(),
            f(self.xi),
            f(self.grad_u),
            f(self.u_h1),
            f(self.force_l65),
            f(self.div_lp),
            f(self.div_scaled),
            f(self.r_bound),
            f(self.u_bound),
            f(self.mean_rel),
            f(self.inner_ratio),
            f(self.density_ratio_sq),
            f(self.outer_ratio),
            f(self.residual_mass),
            f(self.residual_momentum),
            f(self.residual_bc),
            f(self.residual_mean),
            f(self.dist_inc),
            self.params_fingerprint.clone(),
            self.grid_hash.clone(),
        ]
        .join(",")
    }

    /// Value of a fitted quantity by column name.
    pub fn quantity(&self, name: &str) -> Option<f64> {
        Some(match name {
            "div_lp" => self.div_lp,
            "div_scaled" => self.div_scaled,
            "inner_ratio" => self.inner_ratio,
            "density_ratio_sq" => self.density_ratio_sq,
            "dist_inc" => self.dist_inc,
            "xi" => self.xi,
            "u_h1" => self.u_h1,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Pass,
    Fail,
    /// `R^2` below the threshold.
    Inconclusive,
    /// A run did not converge or a value is missing.
    Void,
    /// No target slope; reported only.
    Reported,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
            Verdict::Inconclusive => "inconclusive",
            Verdict::Void => "void",
            Verdict::Reported => "reported",
        })
    }
}

/// Log-log slope of one quantity against `m`.
#[derive(Debug, Clone, PartialEq)]
pub struct SlopeFit {
    pub quantity: &'static str,
    pub target: Option<f64>,
    pub tol: f64,
    pub fit: Option<LineFit>,
    pub verdict: Verdict,
}

impl SlopeFit {
    fn compute(rows: &[StudyRow], quantity: &'static str, target: Option<f64>, tol: f64) -> Self {
        let ok = rows.iter().all(|r| r.converged);
        let xs: Vec<f64> = rows.iter().map(|r| r.m).collect();
        let ys: Vec<f64> = rows.iter().map(|r| r.quantity(quantity).unwrap_or(f64::NAN)).collect();
        let fit = if ok { fit_loglog(&xs, &ys) } else { None };
        let verdict = match (&fit, target) {
            (None, _) => Verdict::Void,
            (Some(f), _) if !f.conclusive() => Verdict::Inconclusive,
            (Some(_), None) => Verdict::Reported,
            (Some(f), Some(t)) if f.within(t, tol) => Verdict::Pass,
            _ => Verdict::Fail,
        };
        SlopeFit { quantity, target, tol, fit, verdict }
    }

    pub fn summary(&self) -> String {
        let target = self.target.map_or("-".to_string(), |t| format!("{t} +- {}", self.tol));
        match &self.fit {
            Some(f) => format!(
                "{}: slope {:.4} +- {:.4} (95%), R^2 {:.4}, target {target}: {}",
                self.quantity, f.slope, f.half_width, f.r_squared, self.verdict
            ),
            None => format!("{}: no fit, target {target}: {}", self.quantity, self.verdict),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnergyCheck {
    /// `||u||_{1,2} / ||f||_{6/5}` on the smallest-`m` run.
    pub constant: f64,
    /// Largest ratio of the same quotient to `constant` over the sweep.
    pub max_growth: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CertificateCheck {
    pub bounds: AdmissibleBounds,
    /// Worst `|int r| / int |r|`.
    pub worst_mean: f64,
    /// Worst `m^(gamma-1) ||div u||_p / (2 C_f^2)`.
    pub worst_div_fraction: f64,
    /// Worst `Xi / C_f`.
    pub worst_xi_fraction: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LowMachCheck {
    pub distances: Vec<f64>,
    pub monotone: bool,
    /// Last distance over the first.
    pub final_ratio: f64,
    pub pass: bool,
    /// Set for `gamma < 2`, where the asymptotics of the limit differ.
    pub flag: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudyReport {
    pub kind: StudyKind,
    pub gamma: f64,
    pub rows: Vec<StudyRow>,
    pub fits: Vec<SlopeFit>,
    pub energy: Option<EnergyCheck>,
    pub certificates: Option<CertificateCheck>,
    pub low_mach: Option<LowMachCheck>,
    pub notes: Vec<String>,
}

impl StudyReport {
    pub fn all_converged(&self) -> bool {
        self.rows.iter().all(|r| r.converged)
    }

    pub fn fit(&self, quantity: &str) -> Option<&SlopeFit> {
        self.fits.iter().find(|f| f.quantity == quantity)
    }
}

/// Slope target and tolerance for `||div u||_p` against `m`.
pub fn divergence_target(gamma: f64) -> (f64, f64) {
    let tol = if (gamma - 2.0).abs() < 1e-12 { 0.15 } else { 0.2 };
    (-(gamma - 1.0), tol)
}

fn run_row(cfg: &StudyConfig, m: f64, reference: Option<&VectorField>) -> StudyRow {
    let params = match cfg.params(m) {
        Ok(p) => p,
        Err(e) => {
            let dummy = ModelParams { m, gamma: cfg.gamma, friction: cfg.friction, p_exp: cfg.p_exp, force: cfg.force.clone() };
            return StudyRow::failed(&dummy, &e);
        }
    };
    match measure_row(cfg, &params, reference) {
        Ok(row) => row,
        Err(e) => {
            log::warn!("run at m = {m:e} failed: {e}");
            StudyRow::failed(&params, &e)
        }
    }
}

fn measure_row(cfg: &StudyConfig, params: &ModelParams, reference: Option<&VectorField>) -> Result<StudyRow> {
    let out = outer_loop(params, &cfg.loop_options)?;
    let (r, u) = (&out.state.r, &out.state.u);
    let c = &out.state.certificates;
    let p = params.p();
    let (inner_ratio, density_ratio_sq) = if cfg.probes && out.report.converged {
        probes(r, u, params, &cfg.loop_options)?
    } else {
        (f64::NAN, f64::NAN)
    };
    let div_lp = lp_norm(&divergence(u), p);
    Ok(StudyRow {
        m: params.m,
        gamma: params.gamma,
        converged: out.report.converged,
        outer_iterates: out.report.iterates,
        xi: c.xi,
        grad_u: grad_seminorm(u, Exponent::TWO),
        u_h1: h1_norm(u),
        force_l65: params.force_norm(1.2),
        div_lp,
        div_scaled: params.m.powf(params.gamma - 1.0) * div_lp,
        r_bound: c.r_bound,
        u_bound: c.u_bound,
        mean_rel: c.mean,
        inner_ratio,
        density_ratio_sq,
        outer_ratio: out.report.mean_ratio().unwrap_or(f64::NAN),
        residual_mass: out.residual.mass,
        residual_momentum: out.residual.momentum,
        residual_bc: out.residual.bc,
        residual_mean: out.residual.mean,
        dist_inc: reference.map_or(f64::NAN, |v| h1_norm(&u.sub(v))),
        params_fingerprint: params_fingerprint(params),
        grid_hash: grid_hash(&params.grid()),
        error: None,
    })
}

/// Cold-start contraction probes at a converged state: the inner loop with
/// `(ub, rt) = (u, r)` from `ut = 0`, and the density loop with `ub = u`
/// from `r = 0`. Returns the mean inner ratio and the squared mean density
/// ratio (NaN when a loop converged before any ratio was measurable).
pub fn probes(r: &ScalarField, u: &VectorField, params: &ModelParams, opts: &LoopOptions) -> Result<(f64, f64)> {
    let inner = inner_banach(u, r, params, opts)?;
    let density = density_loop(u, params, opts)?;
    Ok((
        inner.report.mean_ratio().unwrap_or(f64::NAN),
        density.report.mean_ratio().map_or(f64::NAN, |q| q * q),
    ))
}

/// Runs every mass of the sweep and evaluates all fits and checks.
pub fn run_study(cfg: &StudyConfig, kind: StudyKind) -> Result<StudyReport> {
    cfg.validate()?;
    let mut notes = Vec::new();
    let reference = if cfg.reference {
        // The wall friction scales like f/m and vanishes in the limit.
        let sol = incompressible_reference_solve(&cfg.force, 0.0)?;
        notes.push(format!("incompressible reference: {} Picard iterates", sol.report.iterates));
        Some(sol.u)
    } else {
        None
    };
    let rows = map_collect(cfg.execution, &cfg.masses, |&m| run_row(cfg, m, reference.as_ref()));
    for r in rows.iter().filter(|r| r.error.is_some()) {
        notes.push(format!("m = {:e}: {}", r.m, r.error.as_deref().unwrap_or("")));
    }
    for r in rows.iter().filter(|r| r.error.is_none() && !r.converged) {
        notes.push(format!("m = {:e}: outer loop did not converge", r.m));
    }

    let (dt, dtol) = divergence_target(cfg.gamma);
    let mut fits = Vec::new();
    if matches!(kind, StudyKind::Divergence | StudyKind::Full) {
        fits.push(SlopeFit::compute(&rows, "div_lp", Some(dt), dtol));
    }
    if matches!(kind, StudyKind::Contraction | StudyKind::Full) && cfg.probes {
        fits.push(SlopeFit::compute(&rows, "inner_ratio", Some(-1.0), 0.15));
        fits.push(SlopeFit::compute(&rows, "density_ratio_sq", Some(-1.0), 0.2));
    }
    if matches!(kind, StudyKind::LowMach | StudyKind::Full) && cfg.reference {
        fits.push(SlopeFit::compute(&rows, "dist_inc", None, 0.0));
    }

    let energy = energy_check(&rows);
    let certificates = certificate_check(&rows, cfg);
    let low_mach = if cfg.reference { Some(low_mach_check(&rows, cfg.gamma)) } else { None };
    Ok(StudyReport { kind, gamma: cfg.gamma, rows, fits, energy, certificates, low_mach, notes })
}

/// Slope of `||div u||_p` against `m`; the prediction is `-(gamma - 1)`.
pub fn divu_scaling_study(cfg: &StudyConfig) -> Result<StudyReport> {
    run_study(&StudyConfig { probes: false, reference: false, ..cfg.clone() }, StudyKind::Divergence)
}

/// Slopes of the inner ratio and the squared density ratio against `m`.
pub fn contraction_scaling_study(cfg: &StudyConfig) -> Result<StudyReport> {
    run_study(&StudyConfig { probes: true, reference: false, ..cfg.clone() }, StudyKind::Contraction)
}

/// Distance to the incompressible reference across the sweep.
pub fn low_mach_consistency(cfg: &StudyConfig) -> Result<StudyReport> {
    run_study(&StudyConfig { probes: false, reference: true, ..cfg.clone() }, StudyKind::LowMach)
}

/// `||u||_{1,2} <= C ||f||_{6/5}` with `C` taken from the smallest mass and
/// at most 10% growth.
pub fn energy_check(rows: &[StudyRow]) -> Option<EnergyCheck> {
    let first = rows.iter().filter(|r| r.converged).min_by(|a, b| a.m.total_cmp(&b.m))?;
    if !(first.force_l65 > 0.0) {
        return None;
    }
    let constant = first.u_h1 / first.force_l65;
    let max_growth = rows
        .iter()
        .filter(|r| r.converged)
        .map(|r| (r.u_h1 / r.force_l65) / constant)
        .fold(0.0, f64::max);
    let max_growth = if constant > 0.0 { max_growth } else { 1.0 };
    Some(EnergyCheck { constant, max_growth, pass: max_growth <= 1.1 })
}

/// Bounds calibrated on the smallest-mass run, checked on every run.
fn certificate_check(rows: &[StudyRow], cfg: &StudyConfig) -> Option<CertificateCheck> {
    let first = rows.iter().filter(|r| r.converged).min_by(|a, b| a.m.total_cmp(&b.m))?;
    let c = Certificates {
        r_bound: first.r_bound,
        energy: first.grad_u,
        u_bound: first.u_bound,
        div_bound: first.div_scaled,
        mean: first.mean_rel,
        xi: first.xi,
    };
    let alpha = cfg.loop_options.bounds.map_or(0.1, |b| b.alpha);
    let bounds = AdmissibleBounds::from_certificates(&c, cfg.margin, alpha);
    let conv: Vec<&StudyRow> = rows.iter().filter(|r| r.converged).collect();
    let worst_mean = conv.iter().map(|r| r.mean_rel).fold(0.0, f64::max);
    let worst_div_fraction =
        conv.iter().map(|r| r.div_scaled / (2.0 * bounds.c_f * bounds.c_f)).fold(0.0, f64::max);
    let worst_xi_fraction = conv.iter().map(|r| r.xi / bounds.c_f).fold(0.0, f64::max);
    let pass = conv.len() == rows.len() && worst_mean <= 1e-12 && worst_div_fraction <= 1.0;
    Some(CertificateCheck { bounds, worst_mean, worst_div_fraction, worst_xi_fraction, pass })
}

fn low_mach_check(rows: &[StudyRow], gamma: f64) -> LowMachCheck {
    let mut sorted: Vec<&StudyRow> = rows.iter().collect();
    sorted.sort_by(|a, b| a.m.total_cmp(&b.m));
    let distances: Vec<f64> = sorted.iter().map(|r| if r.converged { r.dist_inc } else { f64::NAN }).collect();
    let all_zero = distances.iter().all(|d| *d == 0.0);
    let monotone = all_zero || distances.windows(2).all(|w| w[1] < w[0]);
    let final_ratio = match (distances.first(), distances.last()) {
        (Some(&a), Some(&b)) if a > 0.0 => b / a,
        (Some(&a), Some(&b)) if a == 0.0 && b == 0.0 => 0.0,
        _ => f64::NAN,
    };
    let flag = (gamma < 2.0 - 1e-12)
        .then(|| format!("limit structure differs for gamma = {gamma}; no decrease asserted"));
    let pass = monotone && final_ratio <= 0.1;
    LowMachCheck { distances, monotone, final_ratio, pass, flag }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(m: f64, h1: f64, dist: f64) -> StudyRow {
        let params = ModelParams::new(m, 2.0, 1.0, 4.0, VectorField::zeros(GridSpec::unit_square(8))).unwrap();
        let mut r = StudyRow::failed(&params, &Error::ZeroInput);
        r.converged = true;
        r.error = None;
        r.u_h1 = h1;
        r.force_l65 = 1.0;
        r.dist_inc = dist;
        r.div_lp = 1.0 / m;
        r
    }

    #[test]
    fn energy_growth_is_relative_to_smallest_mass() {
        let rows = vec![row(1e3, 1.05, 0.0), row(1e2, 1.0, 0.0), row(1e4, 1.08, 0.0)];
        let e = energy_check(&rows).unwrap();
        assert_eq!(e.constant, 1.0);
        assert!((e.max_growth - 1.08).abs() < 1e-15 && e.pass);
    }

    #[test]
    fn low_mach_requires_strict_decrease() {
        let rows = vec![row(1e2, 1.0, 1.0), row(1e3, 1.0, 0.1), row(1e4, 1.0, 0.01)];
        let c = low_mach_check(&rows, 2.0);
        assert!(c.monotone && c.pass && c.flag.is_none());
        let rows = vec![row(1e2, 1.0, 1.0), row(1e3, 1.0, 1.0), row(1e4, 1.0, 0.01)];
        assert!(!low_mach_check(&rows, 2.0).pass);
        assert!(low_mach_check(&rows, 1.5).flag.is_some());
        assert!(low_mach_check(&rows, 3.0).flag.is_none());
    }

    #[test]
    fn non_converged_row_voids_fit() {
        let mut rows = vec![row(1e2, 1.0, 0.0), row(1e3, 1.0, 0.0), row(1e4, 1.0, 0.0)];
        assert_eq!(SlopeFit::compute(&rows, "div_lp", Some(-1.0), 0.15).verdict, Verdict::Pass);
        rows[1].converged = false;
        assert_eq!(SlopeFit::compute(&rows, "div_lp", Some(-1.0), 0.15).verdict, Verdict::Void);
    }

    #[test]
    fn scattered_data_is_inconclusive() {
        let mut rows = vec![row(1e2, 1.0, 0.0), row(1e3, 1.0, 0.0), row(1e4, 1.0, 0.0), row(1e5, 1.0, 0.0)];
        for (r, v) in rows.iter_mut().zip([1.0, 0.01, 1.0, 0.01]) {
            r.div_lp = v;
        }
        assert_eq!(SlopeFit::compute(&rows, "div_lp", Some(-1.0), 0.15).verdict, Verdict::Inconclusive);
    }

    #[test]
    fn too_few_masses_rejected() {
        let cfg = StudyConfig::new(VectorField::zeros(GridSpec::unit_square(8)), 2.0, vec![1e3]);
        let err = run_study(&cfg, StudyKind::Full).unwrap_err();
        assert!(err.to_string().contains("need >= 3 points to fit"));
    }
}

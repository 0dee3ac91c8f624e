use statrs::distribution::{ContinuousCDF, StudentsT};

/// Below this coefficient of determination a fit is reported as inconclusive.
pub const MIN_R_SQUARED: f64 = 0.95;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    /// 95% confidence half-width of the slope; infinite with two points.
    pub half_width: f64,
    pub n: usize,
}

impl LineFit {
    pub fn conclusive(&self) -> bool {
        self.r_squared >= MIN_R_SQUARED
    }

    /// Whether the slope lies in `target +- tol`.
    pub fn within(&self, target: f64, tol: f64) -> bool {
        (self.slope - target).abs() <= tol
    }
}

/// Ordinary least squares `y = intercept + slope x`. `None` with fewer than
/// two points or no spread in `x`.
pub fn fit_line(pts: &[(f64, f64)]) -> Option<LineFit> {
    let n = pts.len();
    if n < 2 || pts.iter().any(|(x, y)| !x.is_finite() || !y.is_finite()) {
        return None;
    }
    let nf = n as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / nf;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / nf;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    if sxx <= 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = pts.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum();
    let r_squared = if syy > 0.0 { 1.0 - sse / syy } else { 1.0 };
    let half_width = if n > 2 {
        let se = (sse / (nf - 2.0) / sxx).sqrt();
        let t = StudentsT::new(0.0, 1.0, nf - 2.0).expect("positive dof").inverse_cdf(0.975);
        t * se
    } else {
        f64::INFINITY
    };
    Some(LineFit { slope, intercept, r_squared, half_width, n })
}

/// Fit of `ln y` against `ln x`.
pub fn fit_loglog(x: &[f64], y: &[f64]) -> Option<LineFit> {
    if x.len() != y.len() || x.iter().chain(y).any(|v| !(*v > 0.0)) {
        return None;
    }
    let pts: Vec<(f64, f64)> = x.iter().zip(y).map(|(a, b)| (a.ln(), b.ln())).collect();
    fit_line(&pts)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_line() {
        let f = fit_line(&[(0.0, 1.0), (1.0, 3.0), (2.0, 5.0), (3.0, 7.0)]).unwrap();
        assert!((f.slope - 2.0).abs() < 1e-14 && (f.intercept - 1.0).abs() < 1e-14);
        assert!((f.r_squared - 1.0).abs() < 1e-14);
        assert!(f.half_width < 1e-12);
    }

    #[test]
    fn power_law_slope() {
        let x = [1e2, 1e3, 1e4];
        let y: Vec<f64> = x.iter().map(|m: &f64| 3.0 * m.powf(-1.5)).collect();
        let f = fit_loglog(&x, &y).unwrap();
        assert!(f.within(-1.5, 1e-12));
    }

    #[test]
    fn t_quantile_matches_table() {
        // Half-width with 3 dof uses t_{0.975,3} = 3.182446305284263.
        let pts = [(0.0, 0.0), (1.0, 1.1), (2.0, 1.9), (3.0, 3.2), (4.0, 3.9)];
        let f = fit_line(&pts).unwrap();
        let sse: f64 = pts.iter().map(|p| (p.1 - f.intercept - f.slope * p.0).powi(2)).sum();
        let se = (sse / 3.0 / 10.0).sqrt();
        assert!((f.half_width - 3.182446305284263 * se).abs() < 1e-9 * f.half_width);
    }

    #[test]
    fn degenerate_inputs() {
        assert!(fit_line(&[(1.0, 2.0)]).is_none());
        assert!(fit_line(&[(1.0, 2.0), (1.0, 3.0)]).is_none());
        assert!(fit_loglog(&[1.0, 2.0], &[0.0, 1.0]).is_none());
    }
}

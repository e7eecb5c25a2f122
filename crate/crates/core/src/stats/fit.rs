//! Finite-size scaling and sub-threshold fits.

use std::collections::BTreeSet;

use argmin::core::{CostFunction, Executor, State};
use argmin::solver::neldermead::NelderMead;
use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::TrialBatch;

/// Half-width of the fit window around the crossing estimate, relative to it.
const WINDOW: f64 = 0.3;

/// A failure-rate estimate at one distance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatePoint {
    pub d: usize,
    pub rate: f64,
    pub std_error: f64,
}

impl From<&TrialBatch> for RatePoint {
    fn from(b: &TrialBatch) -> Self {
        RatePoint { d: b.d, rate: b.rate(), std_error: b.std_error() }
    }
}

/// Weighted straight-line fit `y = intercept + slope * x`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub slope_err: f64,
    pub intercept_err: f64,
    pub chi2: f64,
    pub dof: usize,
}

/// Least squares line. With `sigma` the points are weighted by `1/sigma^2`
/// and errors come from the weights; without it errors are scaled by the
/// residual variance (NaN when there are no spare degrees of freedom).
pub fn weighted_line(x: &[f64], y: &[f64], sigma: Option<&[f64]>) -> Result<LineFit> {
    if x.len() != y.len() || sigma.is_some_and(|s| s.len() != x.len()) {
        return Err(Error::InvalidArgument("line fit inputs differ in length".into()));
    }
    if x.len() < 2 {
        return Err(Error::Fit(format!("line fit needs two points, got {}", x.len())));
    }
    let w: Vec<f64> = match sigma {
        Some(s) => {
            if s.iter().any(|&v| !(v > 0.0) || !v.is_finite()) {
                return Err(Error::Fit("line fit needs positive finite uncertainties".into()));
            }
            s.iter().map(|v| 1.0 / (v * v)).collect()
        }
        None => vec![1.0; x.len()],
    };
    let (mut s, mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for i in 0..x.len() {
        s += w[i];
        sx += w[i] * x[i];
        sy += w[i] * y[i];
        sxx += w[i] * x[i] * x[i];
        sxy += w[i] * x[i] * y[i];
    }
    let delta = s * sxx - sx * sx;
    if !(delta.abs() > 1e-300) {
        return Err(Error::Fit("line fit abscissae are all equal".into()));
    }
    let intercept = (sxx * sy - sx * sxy) / delta;
    let slope = (s * sxy - sx * sy) / delta;
    let chi2: f64 = (0..x.len()).map(|i| w[i] * (y[i] - intercept - slope * x[i]).powi(2)).sum();
    let dof = x.len() - 2;
    let scale = match sigma {
        Some(_) => 1.0,
        None if dof > 0 => chi2 / dof as f64,
        None => f64::NAN,
    };
    Ok(LineFit {
        slope,
        intercept,
        slope_err: (scale * s / delta).sqrt(),
        intercept_err: (scale * sxx / delta).sqrt(),
        chi2,
        dof,
    })
}

/// Result of the finite-size scaling fit
/// `P = A + B x + C x^2`, `x = (p - p_c) d^(1/nu)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdFit {
    pub p_c: f64,
    /// Jackknife over code distance.
    pub p_c_err: f64,
    pub nu: f64,
    pub nu_err: f64,
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub a_err: f64,
    pub b_err: f64,
    pub c_err: f64,
    pub chi2: f64,
    pub dof: usize,
    pub chi2_per_dof: f64,
    /// Interpolated crossing the window is centred on.
    pub crossing_estimate: f64,
    pub window: (f64, f64),
    pub distances: Vec<usize>,
    /// `(dropped d, p_c, nu)` for each leave-one-distance-out refit.
    pub jackknife: Vec<(usize, f64, f64)>,
    /// Largest change of p_c when one distance is dropped.
    pub max_jackknife_shift: f64,
}

#[derive(Debug, Clone, Copy)]
struct ScalingPoint {
    p: f64,
    d: f64,
    f: f64,
    w: f64,
}

#[derive(Debug, Clone, Copy)]
struct Quadratic {
    coef: [f64; 3],
    err: [f64; 3],
    chi2: f64,
}

/// Weighted least squares for A, B, C at fixed (p_c, nu).
fn quadratic_fit(points: &[ScalingPoint], p_c: f64, nu: f64) -> Option<Quadratic> {
    let mut m = Matrix3::<f64>::zeros();
    let mut v = Vector3::<f64>::zeros();
    for pt in points {
        let x = (pt.p - p_c) * pt.d.powf(1.0 / nu);
        let basis = Vector3::new(1.0, x, x * x);
        m += pt.w * basis * basis.transpose();
        v += pt.w * pt.f * basis;
    }
    let inv = m.try_inverse()?;
    let coef = inv * v;
    let chi2 = points
        .iter()
        .map(|pt| {
            let x = (pt.p - p_c) * pt.d.powf(1.0 / nu);
            pt.w * (pt.f - coef[0] - coef[1] * x - coef[2] * x * x).powi(2)
        })
        .sum::<f64>();
    chi2.is_finite().then(|| Quadratic {
        coef: [coef[0], coef[1], coef[2]],
        err: [inv[(0, 0)].sqrt(), inv[(1, 1)].sqrt(), inv[(2, 2)].sqrt()],
        chi2,
    })
}

struct ScalingCost<'a> {
    points: &'a [ScalingPoint],
    p_range: (f64, f64),
}

impl CostFunction for ScalingCost<'_> {
    type Param = Vec<f64>;
    type Output = f64;

    fn cost(&self, param: &Self::Param) -> std::result::Result<f64, argmin::core::Error> {
        let (p_c, nu) = (param[0], param[1]);
        let span = self.p_range.1 - self.p_range.0;
        if !(0.05..=20.0).contains(&nu) || p_c < self.p_range.0 - span || p_c > self.p_range.1 + span {
            return Ok(f64::MAX);
        }
        Ok(quadratic_fit(self.points, p_c, nu).map_or(f64::MAX, |q| q.chi2))
    }
}

fn minimise_scaling(points: &[ScalingPoint], p0: f64, nu0: &[f64]) -> Result<(f64, f64, Quadratic)> {
    let lo = points.iter().map(|p| p.p).fold(f64::INFINITY, f64::min);
    let hi = points.iter().map(|p| p.p).fold(f64::NEG_INFINITY, f64::max);
    let mut best: Option<(f64, f64, Quadratic)> = None;
    for &nu in nu0 {
        let step = 0.1 * (hi - lo).max(1e-9);
        let simplex = vec![vec![p0, nu], vec![p0 + step, nu], vec![p0, nu * 1.3]];
        let solver = NelderMead::new(simplex)
            .with_sd_tolerance(1e-12)
            .map_err(|e| Error::Fit(format!("optimiser setup: {e}")))?;
        let cost = ScalingCost { points, p_range: (lo, hi) };
        let res = Executor::new(cost, solver)
            .configure(|s| s.max_iters(4000))
            .run()
            .map_err(|e| Error::Fit(format!("optimiser: {e}")))?;
        let Some(param) = res.state().get_best_param().cloned() else { continue };
        if let Some(q) = quadratic_fit(points, param[0], param[1]) {
            if best.as_ref().is_none_or(|b| q.chi2 < b.2.chi2) {
                best = Some((param[0], param[1], q));
            }
        }
    }
    best.ok_or_else(|| Error::Fit("scaling fit did not converge".into()))
}

/// Median of the interpolated crossings of consecutive-distance curves.
fn crossing_estimate(points: &[ScalingPoint], distances: &[usize]) -> Option<f64> {
    let curve = |d: usize| -> Vec<(f64, f64)> {
        points.iter().filter(|pt| pt.d as usize == d).map(|pt| (pt.p, pt.f)).collect()
    };
    let mut crossings = Vec::new();
    for pair in distances.windows(2) {
        let (small, large) = (curve(pair[0]), curve(pair[1]));
        let shared: Vec<(f64, f64)> = small
            .iter()
            .filter_map(|&(p, fs)| large.iter().find(|&&(q, _)| q == p).map(|&(_, fl)| (p, fl - fs)))
            .collect();
        for w in shared.windows(2) {
            let ((p1, g1), (p2, g2)) = (w[0], w[1]);
            if g1 <= 0.0 && g2 > 0.0 || g1 < 0.0 && g2 >= 0.0 {
                crossings.push(p1 + (p2 - p1) * (-g1) / (g2 - g1));
            }
        }
    }
    if crossings.is_empty() {
        return None;
    }
    crossings.sort_by(f64::total_cmp);
    let m = crossings.len();
    Some(if m % 2 == 1 { crossings[m / 2] } else { 0.5 * (crossings[m / 2 - 1] + crossings[m / 2]) })
}

/// Threshold from batches on a (p, d) grid by the critical exponent method.
/// Uses every batch whose p lies within 30% of the interpolated crossing.
/// The error on p_c and nu is the jackknife over code distance.
pub fn fit_threshold(batches: &[TrialBatch]) -> Result<ThresholdFit> {
    let mut points: Vec<ScalingPoint> = batches
        .iter()
        .filter(|b| b.trials > 0)
        .map(|b| {
            // Binomial variance with a half-count floor so empty cells keep a finite weight.
            let n = b.trials as f64;
            let f_var = (b.failures() as f64 + 0.5) / (n + 1.0);
            ScalingPoint { p: b.p, d: b.d as f64, f: b.rate(), w: n / (f_var * (1.0 - f_var)) }
        })
        .collect();
    points.sort_by(|a, b| a.d.total_cmp(&b.d).then(a.p.total_cmp(&b.p)).then(a.f.total_cmp(&b.f)));
    let distances: Vec<usize> = points.iter().map(|p| p.d as usize).collect::<BTreeSet<_>>().into_iter().collect();
    if distances.len() < 3 {
        return Err(Error::Fit(format!("threshold fit needs at least 3 distances, got {}", distances.len())));
    }
    let crossing = crossing_estimate(&points, &distances)
        .ok_or_else(|| Error::Fit("failure-rate curves do not cross in the sampled range".into()))?;
    let window = ((1.0 - WINDOW) * crossing, (1.0 + WINDOW) * crossing);
    points.retain(|pt| pt.p >= window.0 && pt.p <= window.1);
    let p_values: BTreeSet<u64> = points.iter().map(|pt| pt.p.to_bits()).collect();
    let window_distances: BTreeSet<usize> = points.iter().map(|pt| pt.d as usize).collect();
    if p_values.len() < 4 || window_distances.len() < 3 {
        return Err(Error::Fit(format!(
            "fit window [{:.4}, {:.4}] holds {} p values over {} distances; need 4 and 3",
            window.0,
            window.1,
            p_values.len(),
            window_distances.len()
        )));
    }
    let (p_c, nu, q) = minimise_scaling(&points, crossing, &[0.8, 1.5, 2.5])?;
    let lo = points.iter().map(|p| p.p).fold(f64::INFINITY, f64::min);
    let hi = points.iter().map(|p| p.p).fold(f64::NEG_INFINITY, f64::max);
    if p_c < lo || p_c > hi {
        return Err(Error::Fit(format!("fitted p_c = {p_c:.4} outside the sampled range [{lo:.4}, {hi:.4}]")));
    }
    let distances: Vec<usize> = window_distances.into_iter().collect();
    let mut jackknife = Vec::new();
    for &d in &distances {
        let kept: Vec<ScalingPoint> = points.iter().copied().filter(|pt| pt.d as usize != d).collect();
        let (pj, nj, _) = minimise_scaling(&kept, p_c, &[nu])?;
        jackknife.push((d, pj, nj));
    }
    let m = jackknife.len() as f64;
    let spread = |vals: Vec<f64>| -> f64 {
        let mean = vals.iter().sum::<f64>() / m;
        ((m - 1.0) / m * vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>()).sqrt()
    };
    let p_c_err = spread(jackknife.iter().map(|j| j.1).collect());
    let nu_err = spread(jackknife.iter().map(|j| j.2).collect());
    let max_jackknife_shift = jackknife.iter().map(|j| (j.1 - p_c).abs()).fold(0.0, f64::max);
    let dof = points.len().saturating_sub(5);
    Ok(ThresholdFit {
        p_c,
        p_c_err,
        nu,
        nu_err,
        a: q.coef[0],
        b: q.coef[1],
        c: q.coef[2],
        a_err: q.err[0],
        b_err: q.err[1],
        c_err: q.err[2],
        chi2: q.chi2,
        dof,
        chi2_per_dof: if dof > 0 { q.chi2 / dof as f64 } else { f64::NAN },
        crossing_estimate: crossing,
        window,
        distances,
        jackknife,
        max_jackknife_shift,
    })
}

/// Exponent model for failure rates below threshold.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ScalingModel {
    /// `P = A exp(B d^2)`
    QuadraticExponent,
    /// `P = A exp(B d)`
    LinearExponent,
}

/// Log-linear fit of `ln P` against `d` or `d^2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubthresholdFit {
    pub model: ScalingModel,
    pub log_a: f64,
    pub log_a_err: f64,
    pub b: f64,
    pub b_err: f64,
    /// Weighted residual sum of squares in `ln P`.
    pub chi2: f64,
    pub dof: usize,
    pub distances: Vec<usize>,
    /// Distances dropped for having no failures.
    pub excluded: Vec<usize>,
}

pub fn fit_subthreshold(points: &[RatePoint], model: ScalingModel) -> Result<SubthresholdFit> {
    let mut used: Vec<RatePoint> = Vec::new();
    let mut excluded = Vec::new();
    for pt in points {
        if pt.rate > 0.0 {
            used.push(*pt);
        } else {
            excluded.push(pt.d);
        }
    }
    if used.is_empty() {
        return Err(Error::Fit("every point has zero failures".into()));
    }
    if !excluded.is_empty() {
        log::warn!("sub-threshold fit: excluded zero-failure distances {excluded:?}");
    }
    used.sort_by(|a, b| a.d.cmp(&b.d).then(a.rate.total_cmp(&b.rate)));
    let x: Vec<f64> = used
        .iter()
        .map(|pt| match model {
            ScalingModel::QuadraticExponent => (pt.d * pt.d) as f64,
            ScalingModel::LinearExponent => pt.d as f64,
        })
        .collect();
    let y: Vec<f64> = used.iter().map(|pt| pt.rate.ln()).collect();
    let sigma: Vec<f64> = used.iter().map(|pt| pt.std_error / pt.rate).collect();
    let weighted = sigma.iter().all(|s| *s > 0.0 && s.is_finite());
    let line = weighted_line(&x, &y, weighted.then_some(&sigma[..]))?;
    Ok(SubthresholdFit {
        model,
        log_a: line.intercept,
        log_a_err: line.intercept_err,
        b: line.slope,
        b_err: line.slope_err,
        chi2: line.chi2,
        dof: line.dof,
        distances: used.iter().map(|p| p.d).collect(),
        excluded,
    })
}

/// Gradient of `ln P` against `d` at one physical rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GradientPoint {
    pub p: f64,
    /// `ln(p / (1 - p))`
    pub beta: f64,
    pub g: f64,
    pub g_err: f64,
}

/// Low-rate ansatz at one bias: `G(p) = beta/2 + gamma ln 2 + L(eta)/4`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnsatzFit {
    pub eta: f64,
    pub gradients: Vec<GradientPoint>,
    /// Slope of G against beta; 1/2 under the ansatz.
    pub slope: f64,
    pub slope_err: f64,
    /// G extrapolated to beta = 0.
    pub intercept: f64,
    pub intercept_err: f64,
    /// Entropy exponent implied by the intercept at this bias alone.
    pub gamma: f64,
    pub gamma_err: f64,
    pub chi2: f64,
}

/// `ln[(eta + 1/2) / (eta + 1)^2]`
pub fn bias_log_term(eta: f64) -> f64 {
    ((eta + 0.5) / ((eta + 1.0) * (eta + 1.0))).ln()
}

/// Solve `I = gamma ln 2 + L(eta)/4` for gamma.
pub fn gamma_from_intercept(eta: f64, intercept: f64) -> f64 {
    (intercept - 0.25 * bias_log_term(eta)) / std::f64::consts::LN_2
}

/// Fit `ln P = G d + c` at each p, then G against beta.
pub fn fit_ansatz(eta: f64, data: &[(f64, Vec<RatePoint>)]) -> Result<AnsatzFit> {
    let mut gradients = Vec::new();
    for (p, points) in data {
        let fit = fit_subthreshold(points, ScalingModel::LinearExponent)?;
        gradients.push(GradientPoint { p: *p, beta: (p / (1.0 - p)).ln(), g: fit.b, g_err: fit.b_err });
    }
    gradients.sort_by(|a, b| a.p.total_cmp(&b.p));
    let x: Vec<f64> = gradients.iter().map(|g| g.beta).collect();
    let y: Vec<f64> = gradients.iter().map(|g| g.g).collect();
    let s: Vec<f64> = gradients.iter().map(|g| g.g_err).collect();
    let weighted = s.iter().all(|v| *v > 0.0 && v.is_finite());
    let line = weighted_line(&x, &y, weighted.then_some(&s[..]))?;
    let gamma = gamma_from_intercept(eta, line.intercept);
    if !gamma.is_finite() {
        return Err(Error::Fit("ansatz intercept gives a non-finite gamma".into()));
    }
    Ok(AnsatzFit {
        eta,
        gradients,
        slope: line.slope,
        slope_err: line.slope_err,
        intercept: line.intercept,
        intercept_err: line.intercept_err,
        gamma,
        gamma_err: line.intercept_err / std::f64::consts::LN_2,
        chi2: line.chi2,
    })
}

/// Linear fit of the intercepts I(eta) against `L(eta)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GammaEstimate {
    /// Coefficient of `L(eta)`; 1/4 under the ansatz.
    pub slope: f64,
    pub slope_err: f64,
    pub gamma: f64,
    pub gamma_err: f64,
    pub chi2: f64,
}

/// Gamma from ansatz fits at three or more biases.
pub fn estimate_gamma(fits: &[AnsatzFit]) -> Result<GammaEstimate> {
    let etas: BTreeSet<u64> = fits.iter().map(|f| f.eta.to_bits()).collect();
    if etas.len() < 3 {
        return Err(Error::Fit(format!("gamma needs intercepts at 3 or more biases, got {}", etas.len())));
    }
    let mut sorted: Vec<&AnsatzFit> = fits.iter().collect();
    sorted.sort_by(|a, b| a.eta.total_cmp(&b.eta));
    let x: Vec<f64> = sorted.iter().map(|f| bias_log_term(f.eta)).collect();
    let y: Vec<f64> = sorted.iter().map(|f| f.intercept).collect();
    let s: Vec<f64> = sorted.iter().map(|f| f.intercept_err).collect();
    let weighted = s.iter().all(|v| *v > 0.0 && v.is_finite());
    let line = weighted_line(&x, &y, weighted.then_some(&s[..]))?;
    Ok(GammaEstimate {
        slope: line.slope,
        slope_err: line.slope_err,
        gamma: line.intercept / std::f64::consts::LN_2,
        gamma_err: line.intercept_err / std::f64::consts::LN_2,
        chi2: line.chi2,
    })
}

/// Optimal `d_z / d_x` at rate `p` and bias `eta`: `1 - ln(eta) / ln(p)`.
pub fn aspect_ratio_optimum(p: f64, eta: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::InvalidArgument(format!("aspect ratio needs 0 < p < 1, got {p}")));
    }
    if !(eta >= 0.5) || eta.is_infinite() {
        return Err(Error::InvalidArgument(format!("aspect ratio needs finite eta >= 1/2, got {eta}")));
    }
    // The ratio of logs is base independent; base 10 is exact on decimal powers.
    Ok(1.0 - eta.log10() / p.log10())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::code::LatticeGeometry;
    use crate::noise::trial_rng;
    use crate::stats::{DecoderId, NoiseKind};
    use crate::noise::TemporalClosure;
    use rand::Rng;

    fn binomial<R: Rng>(n: u64, f: f64, rng: &mut R) -> u64 {
        (0..n).filter(|_| rng.random::<f64>() < f).count() as u64
    }

    fn batch(d: usize, p: f64, trials: u64, failures: u64) -> TrialBatch {
        TrialBatch {
            geometry: LatticeGeometry::Periodic { rows: d, cols: d },
            noise: NoiseKind::CodeCapacity,
            decoder: DecoderId::Mwpm2d,
            p,
            eta: f64::INFINITY,
            d,
            rounds: 1,
            closure: TemporalClosure::Periodic,
            trials,
            failures_logical: failures,
            failures_temporal: 0,
            seed: 0,
            wall_time: 0.0,
        }
    }

    fn synthetic_grid(seed: u64) -> Vec<TrialBatch> {
        let (p_c, nu, a, b, c) = (0.10, 1.5, 0.3, 1.2, 0.8);
        let mut rng = trial_rng(seed, 0);
        let mut out = Vec::new();
        for d in [8, 12, 16] {
            for i in 0..9 {
                let p = 0.08 + 0.005 * i as f64;
                let x: f64 = (p - p_c) * (d as f64).powf(1.0 / nu);
                let f = (a + b * x + c * x * x).clamp(0.0, 1.0);
                out.push(batch(d, p, 20_000, binomial(20_000, f, &mut rng)));
            }
        }
        out
    }

    #[test]
    fn line_fit_exact() {
        let f = weighted_line(&[1.0, 2.0, 3.0], &[3.0, 5.0, 7.0], None).unwrap();
        assert!((f.slope - 2.0).abs() < 1e-12 && (f.intercept - 1.0).abs() < 1e-12);
        assert!(weighted_line(&[1.0], &[1.0], None).is_err());
        assert!(weighted_line(&[1.0, 1.0], &[1.0, 2.0], None).is_err());
    }

    #[test]
    fn threshold_synthetic_round_trip() {
        let fit = fit_threshold(&synthetic_grid(11)).unwrap();
        let sigma = fit.p_c_err.max(1e-4);
        assert!((fit.p_c - 0.10).abs() < 2.0 * sigma + 1e-4, "{fit:?}");
        assert!((fit.nu - 1.5).abs() < 0.5, "{fit:?}");
        assert!(fit.chi2_per_dof < 3.0, "{fit:?}");
    }

    #[test]
    fn threshold_order_invariant() {
        let grid = synthetic_grid(3);
        let a = fit_threshold(&grid).unwrap();
        let mut shuffled = grid.clone();
        shuffled.reverse();
        shuffled.swap(0, 7);
        let b = fit_threshold(&shuffled).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn threshold_degenerate_inputs() {
        let grid = synthetic_grid(5);
        let single: Vec<TrialBatch> = grid.iter().filter(|b| b.d == 8).cloned().collect();
        assert!(matches!(fit_threshold(&single), Err(Error::Fit(_))));
        // Curves that never cross.
        let mut flat = Vec::new();
        for (k, d) in [8usize, 12, 16].into_iter().enumerate() {
            for i in 0..6 {
                flat.push(batch(d, 0.05 + 0.01 * i as f64, 10_000, 1000 * (k as u64 + 1) + 10 * i));
            }
        }
        assert!(matches!(fit_threshold(&flat), Err(Error::Fit(_))));
    }

    #[test]
    fn subthreshold_synthetic_round_trip() {
        let (log_a, b) = (-1.0, -0.05);
        let mut rng = trial_rng(17, 0);
        let points: Vec<RatePoint> = [5usize, 7, 9, 11]
            .into_iter()
            .map(|d| {
                let f: f64 = (log_a + b * (d * d) as f64).exp();
                let n = 200_000;
                let k = binomial(n, f, &mut rng);
                let rate = k as f64 / n as f64;
                RatePoint { d, rate, std_error: (rate * (1.0 - rate) / n as f64).sqrt() }
            })
            .collect();
        let quad = fit_subthreshold(&points, ScalingModel::QuadraticExponent).unwrap();
        assert!((quad.b - b).abs() < 2.0 * quad.b_err, "{quad:?}");
        let lin = fit_subthreshold(&points, ScalingModel::LinearExponent).unwrap();
        assert!(quad.chi2 < lin.chi2);
    }

    #[test]
    fn subthreshold_zero_handling() {
        let pts = [
            RatePoint { d: 3, rate: 0.1, std_error: 0.01 },
            RatePoint { d: 5, rate: 0.02, std_error: 0.002 },
            RatePoint { d: 7, rate: 0.0, std_error: 0.0 },
        ];
        let f = fit_subthreshold(&pts, ScalingModel::LinearExponent).unwrap();
        assert_eq!(f.excluded, vec![7]);
        let zeros = [RatePoint { d: 3, rate: 0.0, std_error: 0.0 }];
        assert!(fit_subthreshold(&zeros, ScalingModel::LinearExponent).is_err());
    }

    fn ansatz_points(eta: f64, gamma: f64) -> Vec<(f64, Vec<RatePoint>)> {
        [1e-3, 2e-3, 5e-3]
            .into_iter()
            .map(|p: f64| {
                let g = 0.5 * (p / (1.0 - p)).ln() + gamma * std::f64::consts::LN_2 + 0.25 * bias_log_term(eta);
                let pts = [5usize, 7, 9]
                    .into_iter()
                    .map(|d| {
                        let rate = (g * d as f64 + 0.3).exp();
                        RatePoint { d, rate, std_error: 0.01 * rate }
                    })
                    .collect();
                (p, pts)
            })
            .collect()
    }

    #[test]
    fn ansatz_and_gamma_synthetic() {
        let fits: Vec<AnsatzFit> =
            [1.0, 3.0, 10.0, 100.0].into_iter().map(|eta| fit_ansatz(eta, &ansatz_points(eta, 1.8)).unwrap()).collect();
        for f in &fits {
            assert!((f.slope - 0.5).abs() < 1e-9, "{f:?}");
            assert!((f.gamma - 1.8).abs() < 1e-9, "{f:?}");
        }
        let g = estimate_gamma(&fits).unwrap();
        assert!((g.gamma - 1.8).abs() < 1e-6 && (g.slope - 0.25).abs() < 1e-6, "{g:?}");
        assert!(estimate_gamma(&fits[..2]).is_err());
    }

    #[test]
    fn aspect_ratio_examples() {
        assert_eq!(aspect_ratio_optimum(0.01, 100.0).unwrap(), 2.0);
        assert_eq!(aspect_ratio_optimum(0.3, 1.0).unwrap(), 1.0);
        assert_eq!(aspect_ratio_optimum(0.1, 1000.0).unwrap(), 4.0);
        assert!(aspect_ratio_optimum(0.0, 10.0).is_err());
        assert!(aspect_ratio_optimum(1.0, 10.0).is_err());
    }
}

//! Sinusoidal fringe fitting.
//!
//! Data are modelled as `y = m + u·cos(kx) + v·sin(kx)`, which is the same
//! curve as `A·(1 + V·cos(kx + δ))/2 + B` without the A/B degeneracy. The
//! wavenumber is seeded by a variable-projection grid search (the linear
//! parameters are solved exactly at each trial `k`) and then all four
//! parameters are refined with Levenberg–Marquardt.

use std::f64::consts::PI;

use nalgebra::{Matrix3, Matrix4, Vector3, Vector4};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitOptions {
    /// Known wavenumber (rad per unit of x); `None` fits it.
    pub wavenumber: Option<f64>,
    /// RMS residual allowed, relative to the fringe maximum `m + a`.
    pub max_relative_residual: f64,
    pub max_iterations: usize,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self { wavenumber: None, max_relative_residual: 0.25, max_iterations: 200 }
    }
}

impl FitOptions {
    pub fn with_wavenumber(k: f64) -> Self {
        Self { wavenumber: Some(k), ..Self::default() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FringeFit {
    pub mean: f64,
    pub amplitude: f64,
    pub wavenumber: f64,
    /// Phase δ in `m + a·cos(kx + δ)`.
    pub phase: f64,
    pub visibility: f64,
    pub visibility_sigma: f64,
    pub period: f64,
    pub period_sigma: f64,
    pub rms_residual: f64,
}

impl FringeFit {
    /// x positions of fringe maxima inside `[from, to]`.
    pub fn maxima(&self, from: f64, to: f64) -> Vec<f64> {
        let first = ((self.wavenumber * from + self.phase) / (2.0 * PI)).ceil() as i64;
        let mut out = Vec::new();
        let mut n = first;
        loop {
            let x = (2.0 * PI * n as f64 - self.phase) / self.wavenumber;
            if x > to {
                break;
            }
            out.push(x);
            n += 1;
        }
        out
    }
}

fn residual_sum(x: &[f64], y: &[f64], p: &Vector4<f64>) -> f64 {
    x.iter()
        .zip(y)
        .map(|(&xi, &yi)| {
            let (s, c) = (p[3] * xi).sin_cos();
            let r = yi - (p[0] + p[1] * c + p[2] * s);
            r * r
        })
        .sum()
}

/// Linear least squares for (m, u, v) at fixed k. Returns the residual sum
/// of squares alongside.
fn solve_linear(x: &[f64], y: &[f64], k: f64) -> Option<(Vector3<f64>, f64)> {
    let mut ata = Matrix3::<f64>::zeros();
    let mut aty = Vector3::<f64>::zeros();
    for (&xi, &yi) in x.iter().zip(y) {
        let (s, c) = (k * xi).sin_cos();
        let row = Vector3::new(1.0, c, s);
        ata += row * row.transpose();
        aty += row * yi;
    }
    let sol = ata.cholesky()?.solve(&aty);
    let p = Vector4::new(sol[0], sol[1], sol[2], k);
    Some((sol, residual_sum(x, y, &p)))
}

fn initial_wavenumber(x: &[f64], y: &[f64]) -> Result<f64> {
    let span = x[x.len() - 1] - x[0];
    let min_dx = x.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
    // Periods from the full span down to four samples.
    let k_lo = 2.0 * PI / span;
    let k_hi = 2.0 * PI / (4.0 * min_dx);
    if !(k_hi > k_lo) {
        return Err(Error::FitFailed("too few samples per fringe".into()));
    }
    let steps = 2000;
    let mut best = (f64::INFINITY, k_lo);
    for i in 0..=steps {
        let k = k_lo * (k_hi / k_lo).powf(i as f64 / steps as f64);
        if let Some((_, rss)) = solve_linear(x, y, k) {
            if rss < best.0 {
                best = (rss, k);
            }
        }
    }
    Ok(best.1)
}

/// Fits one fringe. `x` must be strictly increasing and cover at least one
/// full period.
pub fn fit_fringe(x: &[f64], y: &[f64], options: &FitOptions) -> Result<FringeFit> {
    let n = x.len();
    if n != y.len() {
        return Err(Error::FitFailed("x and y lengths differ".into()));
    }
    if n < 5 {
        return Err(Error::FitFailed(format!("{n} points is too few")));
    }
    if x.windows(2).any(|w| !(w[1] > w[0])) || y.iter().any(|v| !v.is_finite()) {
        return Err(Error::FitFailed("x must be strictly increasing and y finite".into()));
    }
    let k0 = match options.wavenumber {
        Some(k) => k,
        None => initial_wavenumber(x, y)?,
    };
    let (lin, _) = solve_linear(x, y, k0).ok_or_else(|| Error::FitFailed("singular normal equations".into()))?;
    let mut p = Vector4::new(lin[0], lin[1], lin[2], k0);

    let n_params = if options.wavenumber.is_some() { 3 } else { 4 };
    let mut rss = residual_sum(x, y, &p);
    let mut lambda = 1e-3;
    let mut iterations = if n_params == 4 { options.max_iterations } else { 0 };
    while iterations > 0 {
        iterations -= 1;
        let mut jtj = Matrix4::<f64>::zeros();
        let mut jtr = Vector4::<f64>::zeros();
        for (&xi, &yi) in x.iter().zip(y) {
            let (s, c) = (p[3] * xi).sin_cos();
            let r = yi - (p[0] + p[1] * c + p[2] * s);
            let j = Vector4::new(1.0, c, s, xi * (-p[1] * s + p[2] * c));
            jtj += j * j.transpose();
            jtr += j * r;
        }
        let mut progressed = false;
        for _ in 0..30 {
            let mut a = jtj;
            for d in 0..4 {
                a[(d, d)] *= 1.0 + lambda;
            }
            let Some(chol) = a.cholesky() else {
                lambda *= 10.0;
                continue;
            };
            let step = chol.solve(&jtr);
            let trial = p + step;
            let trial_rss = residual_sum(x, y, &trial);
            if trial_rss <= rss {
                let gain = rss - trial_rss;
                p = trial;
                rss = trial_rss;
                lambda = (lambda * 0.3).max(1e-12);
                progressed = gain > 1e-15 * rss.max(1e-300) && step.norm() > 1e-14 * p.norm();
                break;
            }
            lambda *= 10.0;
        }
        if !progressed {
            break;
        }
    }

    // Covariance from the Jacobian at the solution.
    let mut jtj = Matrix4::<f64>::zeros();
    for &xi in x {
        let (s, c) = (p[3] * xi).sin_cos();
        let j = Vector4::new(1.0, c, s, xi * (-p[1] * s + p[2] * c));
        jtj += j * j.transpose();
    }
    let dof = (n - n_params).max(1) as f64;
    let s2 = rss / dof;
    let cov = if n_params == 4 {
        jtj.try_inverse()
    } else {
        jtj.fixed_view::<3, 3>(0, 0).into_owned().try_inverse().map(|inv| {
            let mut full = Matrix4::zeros();
            full.fixed_view_mut::<3, 3>(0, 0).copy_from(&inv);
            full
        })
    }
    .ok_or_else(|| Error::FitFailed("singular covariance".into()))?
        * s2;

    let (m, u, v, k) = (p[0], p[1], p[2], p[3]);
    let a = u.hypot(v);
    if !(m > 0.0) || !k.is_finite() {
        return Err(Error::FitFailed(format!("non-positive fringe mean {m}")));
    }
    let rms = (rss / n as f64).sqrt();
    if rms > options.max_relative_residual * (m + a) {
        return Err(Error::FitFailed(format!(
            "residual rms {rms:.4e} exceeds {:.2} of fringe maximum {:.4e}",
            options.max_relative_residual,
            m + a
        )));
    }
    let span = x[n - 1] - x[0];
    if k.abs() * span < 2.0 * PI * (1.0 - 1e-9) {
        return Err(Error::FitFailed("data cover less than one fringe period".into()));
    }
    let visibility = a / m;
    let grad = if a > 0.0 {
        Vector4::new(-a / (m * m), u / (a * m), v / (a * m), 0.0)
    } else {
        Vector4::new(0.0, 1.0 / m, 1.0 / m, 0.0)
    };
    let visibility_sigma = (grad.transpose() * cov * grad)[(0, 0)].max(0.0).sqrt();
    let period = 2.0 * PI / k.abs();
    let period_sigma = 2.0 * PI / (k * k) * cov[(3, 3)].max(0.0).sqrt();
    // m + a·cos(kx + δ) = m + u·cos(kx) + v·sin(kx)  ⇒  δ = atan2(−v, u).
    let mut phase = (-v).atan2(u);
    let mut k_out = k;
    if k < 0.0 {
        k_out = -k;
        phase = -phase;
    }
    Ok(FringeFit {
        mean: m,
        amplitude: a,
        wavenumber: k_out,
        phase,
        visibility,
        visibility_sigma,
        period,
        period_sigma,
        rms_residual: rms,
    })
}

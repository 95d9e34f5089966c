//! Poisson maximum-likelihood reconstruction.
//!
//! The unnormalized estimate is M = T†T with T lower triangular (real
//! diagonal, complex below it), which is positive semidefinite for every
//! parameter vector. Expected counts are μ_k = Tr(MΠ_k) + a = S·tᵀQ_k t + a,
//! where S is the total count used to keep parameters of order one and a is
//! the accidental background. The objective is the Poisson deviance
//! Σ(μ_k − n_k − n_k·ln(μ_k/n_k))/S, which differs from the negative
//! log-likelihood by a constant. It is minimized by damped Newton steps that
//! are accepted only when the objective strictly decreases.

use std::sync::OnceLock;

use nalgebra::{Cholesky, SMatrix, SVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, c, Mat4, ZERO};
use crate::state::DensityMatrix;

use super::linear::{linear_reconstruct_data, project_to_physical};
use super::{qst_settings, setting_probabilities, TomographyCounts, SETTING_COUNT};

pub const PARAMETER_COUNT: usize = 16;

pub type Params = SVector<f64, PARAMETER_COUNT>;
pub type Hessian = SMatrix<f64, PARAMETER_COUNT, PARAMETER_COUNT>;

/// Lower off-diagonal positions of T in parameter order.
const OFF_DIAGONAL: [(usize, usize); 6] = [(1, 0), (2, 0), (2, 1), (3, 0), (3, 1), (3, 2)];

/// Eigenvalue floor applied to the linear estimate before it seeds the
/// optimizer, keeping the initial T away from rank deficiency.
const INITIAL_EIGENVALUE_FLOOR: f64 = 1e-4;

/// Basis matrices T_a with T = Σ t_a·T_a.
fn basis() -> [Mat4; PARAMETER_COUNT] {
    std::array::from_fn(|a| {
        let mut m = Mat4::zeros();
        if a < 4 {
            m[(a, a)] = c(1.0, 0.0);
        } else {
            let (i, j) = OFF_DIAGONAL[(a - 4) / 2];
            m[(i, j)] = if (a - 4) % 2 == 0 { c(1.0, 0.0) } else { c(0.0, 1.0) };
        }
        m
    })
}

pub fn t_from_params(t: &Params) -> Mat4 {
    basis().iter().zip(t.iter()).fold(Mat4::zeros(), |acc, (b, &v)| acc + b * c(v, 0.0))
}

/// Parameters of the lower-triangular T with T†T = `m`. `m` must be
/// positive definite.
pub fn params_from_matrix(m: &Mat4) -> Option<Params> {
    // J·M·J = L·L† with J the exchange matrix; then T = J·L†·J.
    let j = Mat4::from_fn(|r, col| if r + col == 3 { c(1.0, 0.0) } else { ZERO });
    let l = Cholesky::new(j * linalg::hermitian_part(m) * j)?.l();
    let t = j * l.adjoint() * j;
    let mut p = Params::zeros();
    for a in 0..4 {
        p[a] = t[(a, a)].re;
    }
    for (m_idx, &(i, k)) in OFF_DIAGONAL.iter().enumerate() {
        p[4 + 2 * m_idx] = t[(i, k)].re;
        p[5 + 2 * m_idx] = t[(i, k)].im;
    }
    Some(p)
}

/// Q_k[a][b] = Re Tr(T_a†·T_b·Π_k), symmetric.
fn quadratic_forms() -> &'static [Hessian; SETTING_COUNT] {
    static FORMS: OnceLock<[Hessian; SETTING_COUNT]> = OnceLock::new();
    FORMS.get_or_init(|| {
        let basis = basis();
        let settings = qst_settings();
        std::array::from_fn(|k| {
            let proj = settings[k].projector();
            let g = Hessian::from_fn(|a, b| linalg::trace(&(basis[a].adjoint() * basis[b] * proj)).re);
            (g + g.transpose()) * 0.5
        })
    })
}

/// The likelihood as a function of the 16 real parameters.
#[derive(Debug, Clone)]
pub struct MleProblem {
    q: &'static [Hessian; SETTING_COUNT],
    data: [f64; SETTING_COUNT],
    accidentals: f64,
    scale: f64,
}

impl MleProblem {
    pub fn new(data: &[f64; SETTING_COUNT], accidentals: f64) -> Result<Self> {
        if data.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::param("counts", "tomography data must be finite and non-negative"));
        }
        let q = quadratic_forms();
        let scale = data.iter().sum::<f64>().max(1.0);
        Ok(Self { q, data: *data, accidentals, scale })
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn expected(&self, t: &Params) -> [f64; SETTING_COUNT] {
        std::array::from_fn(|k| self.scale * t.dot(&(self.q[k] * t)) + self.accidentals)
    }

    /// Σ(μ − n − n·ln(μ/n))/S, the Poisson deviance scaled by the total; +∞
    /// where a setting with counts has zero mean. It vanishes when every mean
    /// equals its count, so differences near the optimum keep full precision.
    pub fn value(&self, t: &Params) -> f64 {
        let mu = self.expected(t);
        let mut f = 0.0;
        for (m, &n) in mu.iter().zip(&self.data) {
            if n > 0.0 {
                if *m <= 0.0 {
                    return f64::INFINITY;
                }
                f += n * excess_minus_log((m - n) / n);
            } else {
                f += m;
            }
        }
        f / self.scale
    }

    pub fn gradient(&self, t: &Params) -> Params {
        let mu = self.expected(t);
        let mut g = Params::zeros();
        for (k, q) in self.q.iter().enumerate() {
            let w = if self.data[k] > 0.0 { 1.0 - self.data[k] / mu[k] } else { 1.0 };
            g += (q * t) * (2.0 * w);
        }
        g
    }

    pub fn hessian(&self, t: &Params) -> Hessian {
        let mu = self.expected(t);
        let mut h = Hessian::zeros();
        for (k, q) in self.q.iter().enumerate() {
            let n = self.data[k];
            let w = if n > 0.0 { 1.0 - n / mu[k] } else { 1.0 };
            h += q * (2.0 * w);
            if n > 0.0 {
                let d = q * t * 2.0;
                h += d * d.transpose() * (n * self.scale / (mu[k] * mu[k]));
            }
        }
        h
    }

    /// Σ(n·ln μ − μ), dropping the parameter-free ln n! terms.
    pub fn log_likelihood(&self, t: &Params) -> f64 {
        self.objective_to_log_likelihood(self.value(t))
    }

    fn objective_to_log_likelihood(&self, f: f64) -> f64 {
        let saturated: f64 = self.data.iter().filter(|&&n| n > 0.0).map(|&n| n * n.ln() - n).sum();
        saturated - f * self.scale
    }

    /// Unnormalized M = S·T†T.
    pub fn matrix(&self, t: &Params) -> Mat4 {
        let tm = t_from_params(t);
        tm.adjoint() * tm * c(self.scale, 0.0)
    }

    /// Starting point from the linear estimate, clamped to be positive
    /// definite and scaled to the observed total.
    pub fn initial_params(&self) -> Params {
        let net = self.data.map(|n| (n - self.accidentals).max(0.0));
        let rho0 = match linear_reconstruct_data(&net) {
            Ok(m) => project_to_physical(&m, INITIAL_EIGENVALUE_FLOOR),
            Err(_) => DensityMatrix::maximally_mixed(),
        };
        let p_sum: f64 = setting_probabilities(&rho0).iter().sum();
        let intensity = (net.iter().sum::<f64>() / p_sum).max(1e-12 * self.scale);
        let m = rho0.matrix() * c(intensity / self.scale, 0.0);
        params_from_matrix(&m).unwrap_or_else(|| {
            let mut p = Params::zeros();
            for a in 0..4 {
                p[a] = (intensity / self.scale / 4.0).sqrt();
            }
            p
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MleOptions {
    pub gradient_tolerance: f64,
    pub improvement_tolerance: f64,
    pub max_iterations: usize,
}

impl Default for MleOptions {
    fn default() -> Self {
        Self { gradient_tolerance: 1e-10, improvement_tolerance: 0.0, max_iterations: 10_000 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MleOutcome {
    pub rho: DensityMatrix,
    /// Tr(M): fitted pairs per setting window.
    pub intensity: f64,
    pub log_likelihood: f64,
    pub iterations: usize,
    pub converged: bool,
    pub gradient_norm: f64,
    /// Log-likelihood after every accepted step, starting with the initial
    /// point; non-decreasing.
    pub likelihood_trace: Vec<f64>,
}

/// x − ln(1 + x), by its series where the direct form cancels.
fn excess_minus_log(x: f64) -> f64 {
    if x.abs() < 1e-3 {
        x * x * (0.5 - x * (1.0 / 3.0 - x * (0.25 - x * (0.2 - x / 6.0))))
    } else {
        x - x.ln_1p()
    }
}

/// Doubles an accepted step while the objective keeps falling. Near a
/// rank-deficient optimum the objective is quartic in the vanishing rows of
/// T and a plain Newton step only shrinks them by a third.
fn extend_step(problem: &MleProblem, t: &Params, step: &Params, f_step: f64) -> (Params, f64) {
    let mut best = (t - step, f_step);
    let mut scale = 2.0;
    while scale <= 64.0 {
        let trial = t - step * scale;
        let f_trial = problem.value(&trial);
        if !(f_trial < best.1) {
            break;
        }
        best = (trial, f_trial);
        scale *= 2.0;
    }
    best
}

pub fn mle_reconstruct_data(data: &[f64; SETTING_COUNT], accidentals: f64, options: &MleOptions) -> Result<MleOutcome> {
    let problem = MleProblem::new(data, accidentals)?;
    let mut t = problem.initial_params();
    let mut f = problem.value(&t);
    if !f.is_finite() {
        return Err(Error::Degenerate("initial estimate assigns zero mean to an observed setting".into()));
    }
    let mut trace = vec![problem.objective_to_log_likelihood(f)];
    let mut lambda = 1e-3;
    let mut converged = false;
    let mut iterations = 0;
    let mut g = problem.gradient(&t);
    while iterations < options.max_iterations {
        if g.norm() < options.gradient_tolerance {
            converged = true;
            break;
        }
        iterations += 1;
        let h = problem.hessian(&t);
        let diag_scale = (h.trace().abs() / PARAMETER_COUNT as f64).max(1e-12);
        let mut accepted = None;
        while lambda < 1e20 {
            let a = h + Hessian::identity() * (lambda * diag_scale);
            if let Some(chol) = a.cholesky() {
                let step = chol.solve(&g);
                let f_trial = problem.value(&(t - step));
                if f_trial < f {
                    accepted = Some(extend_step(&problem, &t, &step, f_trial));
                    break;
                }
            }
            lambda *= 10.0;
        }
        let Some((trial, f_trial)) = accepted else {
            // No descent direction survives at machine precision.
            converged = true;
            break;
        };
        let improvement = f - f_trial;
        let newton_like = lambda <= 1.0;
        t = trial;
        f = f_trial;
        trace.push(problem.objective_to_log_likelihood(f));
        g = problem.gradient(&t);
        lambda = (lambda / 3.0).max(1e-12);
        if newton_like && improvement < options.improvement_tolerance {
            converged = true;
            break;
        }
    }
    let m = problem.matrix(&t);
    let intensity = linalg::trace(&m).re;
    if !(intensity > 0.0) {
        return Err(Error::Degenerate("fitted intensity is zero; no coincidences recorded".into()));
    }
    let rho = DensityMatrix::from_trusted(linalg::hermitian_part(&(m / c(intensity, 0.0))));
    Ok(MleOutcome {
        rho,
        intensity,
        log_likelihood: problem.objective_to_log_likelihood(f),
        iterations,
        converged,
        gradient_norm: g.norm(),
        likelihood_trace: trace,
    })
}

pub fn mle_reconstruct(counts: &TomographyCounts, options: &MleOptions) -> Result<MleOutcome> {
    mle_reconstruct_data(&counts.coincidences(), counts.accidentals, options)
}

/// max over s ≥ 0 of Σ(n·ln(s·p + a) − (s·p + a)) for the probabilities p
/// of `rho`.
pub fn profile_log_likelihood(rho: &DensityMatrix, data: &[f64; SETTING_COUNT], accidentals: f64) -> f64 {
    let p = setting_probabilities(rho);
    let ll = |s: f64| -> f64 {
        p.iter()
            .zip(data)
            .map(|(&pk, &n)| {
                let mu = s * pk + accidentals;
                if n > 0.0 {
                    if mu <= 0.0 {
                        f64::NEG_INFINITY
                    } else {
                        n * mu.ln() - mu
                    }
                } else {
                    -mu
                }
            })
            .sum()
    };
    let p_sum: f64 = p.iter().sum();
    let n_sum: f64 = data.iter().sum();
    if accidentals == 0.0 {
        return ll(n_sum / p_sum);
    }
    // d/ds is decreasing in s; bisect its root.
    let slope = |s: f64| -> f64 {
        p.iter().zip(data).map(|(&pk, &n)| n * pk / (s * pk + accidentals) - pk).sum()
    };
    let (mut lo, mut hi) = (0.0, (n_sum / p_sum).max(1.0) * 2.0);
    if slope(0.0) <= 0.0 {
        return ll(0.0);
    }
    while slope(hi) > 0.0 {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if slope(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    ll(0.5 * (lo + hi))
}

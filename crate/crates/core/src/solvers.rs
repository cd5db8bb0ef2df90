//! TV and l1-Haar reconstruction from partial Fourier measurements under the
//! ball constraint `||D (F_Omega g - y)||_2 <= eps sqrt(m)`.
//!
//! Both problems have the form `min ||K g||_1` subject to `g` in a closed
//! convex set `C`, with `K` the discrete gradient or the Haar transform. They
//! are solved with the first-order primal-dual iteration
//!
//! ```text
//! p      <- clip(p + sigma K gbar)          (projection onto the l_inf unit ball)
//! g_next <- P_C(g - tau K^* p)
//! gbar   <- 2 g_next - g
//! ```
//!
//! with `tau sigma ||K||^2 <= 1`. Because `F` is unitary, `P_C` acts only on
//! the sampled Fourier coefficients: duplicate samples of one frequency
//! collapse into a single weighted target, and the projection onto the
//! resulting weighted ball reduces to a scalar secular equation.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::{gradient, gradient_adjoint, tv_norm, GradientField, Image};
use crate::sampling::SamplingPlan;
use crate::transforms::fourier::Dft2;
use crate::transforms::haar::{haar_forward_slice, haar_inverse_slice};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NoiseModel {
    /// Residual scaled by the plan weights `rho`.
    Weighted,
    /// Plain residual.
    Unweighted,
}

impl std::str::FromStr for NoiseModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "weighted" => Ok(NoiseModel::Weighted),
            "unweighted" => Ok(NoiseModel::Unweighted),
            other => Err(Error::InvalidOption(format!("unknown noise model '{other}'"))),
        }
    }
}

impl std::fmt::Display for NoiseModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            NoiseModel::Weighted => "weighted",
            NoiseModel::Unweighted => "unweighted",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    pub max_iters: usize,
    /// Relative objective change over one check window, and relative iterate change.
    pub primal_tol: f64,
    /// Scaled constraint violation tolerance, see [`SolverReport::converged`].
    pub dual_tol: f64,
    /// Primal step; derived from the operator norm when absent.
    pub tau: Option<f64>,
    /// Dual step; derived from the operator norm when absent.
    pub sigma: Option<f64>,
    pub noise_model: NoiseModel,
    pub epsilon: f64,
    /// Iterations between convergence checks.
    pub check_every: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            max_iters: 20_000,
            primal_tol: 1e-6,
            dual_tol: 1e-6,
            tau: None,
            sigma: None,
            noise_model: NoiseModel::Weighted,
            epsilon: 0.0,
            check_every: 50,
        }
    }
}

impl SolverOptions {
    pub fn with_epsilon(mut self, epsilon: f64) -> Self {
        self.epsilon = epsilon;
        self
    }

    pub fn with_noise_model(mut self, model: NoiseModel) -> Self {
        self.noise_model = model;
        self
    }

    fn validate(&self) -> Result<()> {
        if !(self.epsilon.is_finite() && self.epsilon >= 0.0) {
            return Err(Error::InvalidOption(format!(
                "epsilon must be >= 0, got {}",
                self.epsilon
            )));
        }
        if self.max_iters == 0 || self.check_every == 0 {
            return Err(Error::InvalidOption(
                "max_iters and check_every must be positive".into(),
            ));
        }
        for (name, v) in [
            ("primal_tol", Some(self.primal_tol)),
            ("dual_tol", Some(self.dual_tol)),
            ("tau", self.tau),
            ("sigma", self.sigma),
        ] {
            if let Some(v) = v {
                if !(v.is_finite() && v > 0.0) {
                    return Err(Error::InvalidOption(format!("{name} must be positive, got {v}")));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverReport {
    pub iterations: usize,
    /// `||g_k - g_{k-1}|| / ||g_k||` at the last iteration.
    pub primal_residual: f64,
    /// `max(0, ||D (F_Omega g - y)|| - eps sqrt(m))`.
    pub constraint_violation: f64,
    /// Tolerance the violation was compared against.
    pub violation_tolerance: f64,
    pub objective: f64,
    pub relative_objective_change: f64,
    pub converged: bool,
    /// Estimated `||K||`.
    pub operator_norm: f64,
    pub tau: f64,
    pub sigma: f64,
    /// The constraint set is empty (inconsistent duplicate samples with too small a radius).
    pub infeasible: bool,
}

/// Draws i.i.d. complex Gaussian noise rescaled so that `||D xi||_2 = eps sqrt(m)`
/// (`D = diag(rho)` for the weighted model, identity otherwise) and adds it.
pub fn add_noise(
    clean: &[Complex64],
    plan: &SamplingPlan,
    epsilon: f64,
    model: NoiseModel,
    seed: u64,
) -> Result<Vec<Complex64>> {
    if !(epsilon.is_finite() && epsilon >= 0.0) {
        return Err(Error::InvalidOption(format!("epsilon must be >= 0, got {epsilon}")));
    }
    if clean.len() != plan.m() {
        return Err(Error::SizeMismatch {
            expected: plan.m(),
            got: clean.len(),
        });
    }
    if epsilon == 0.0 {
        return Ok(clean.to_vec());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let xi: Vec<Complex64> = (0..clean.len())
        .map(|_| {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            Complex64::new(re, im) / 2f64.sqrt()
        })
        .collect();
    let norm = weighted_norm(&xi, &plan.rho, model);
    let scale = epsilon * (plan.m() as f64).sqrt() / norm;
    Ok(clean.iter().zip(&xi).map(|(c, x)| c + x * scale).collect())
}

/// `||D x||_2` for the given noise model.
pub fn weighted_norm(x: &[Complex64], rho: &[f64], model: NoiseModel) -> f64 {
    match model {
        NoiseModel::Weighted => x.iter().zip(rho).map(|(v, r)| r * r * v.norm_sqr()).sum::<f64>().sqrt(),
        NoiseModel::Unweighted => x.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt(),
    }
}

/// The data-fidelity set `{g : ||D (F_Omega g - y)||_2 <= radius}` expressed
/// over unique sampled positions of the full spectrum.
#[derive(Debug, Clone)]
struct FidelityBall {
    positions: Vec<usize>,
    weights: Vec<f64>,
    targets: Vec<Complex64>,
    /// Squared radius left after the spread of duplicate samples.
    slack_sq: f64,
    infeasible: bool,
    radius: f64,
    sample_positions: Vec<usize>,
    sample_weights: Vec<f64>,
    y: Vec<Complex64>,
}

impl FidelityBall {
    fn new(y: &[Complex64], plan: &SamplingPlan, opts: &SolverOptions) -> Result<Self> {
        plan.validate()?;
        if y.len() != plan.m() {
            return Err(Error::SizeMismatch {
                expected: plan.m(),
                got: y.len(),
            });
        }
        let n = plan.n;
        let sample_weights: Vec<f64> = match opts.noise_model {
            NoiseModel::Weighted => plan.rho.iter().map(|r| r * r).collect(),
            NoiseModel::Unweighted => vec![1.0; plan.m()],
        };
        let sample_positions: Vec<usize> = plan.freqs.iter().map(|k| k.position(n)).collect();
        let mut slot = vec![usize::MAX; n * n];
        let mut positions = Vec::new();
        let mut weights: Vec<f64> = Vec::new();
        let mut sums: Vec<Complex64> = Vec::new();
        for ((&pos, &w), &v) in sample_positions.iter().zip(&sample_weights).zip(y) {
            if slot[pos] == usize::MAX {
                slot[pos] = positions.len();
                positions.push(pos);
                weights.push(0.0);
                sums.push(Complex64::new(0.0, 0.0));
            }
            weights[slot[pos]] += w;
            sums[slot[pos]] += v * w;
        }
        let targets: Vec<Complex64> = sums.iter().zip(&weights).map(|(s, w)| s / w).collect();
        let spread: f64 = sample_positions
            .iter()
            .zip(&sample_weights)
            .zip(y)
            .map(|((&pos, &w), v)| w * (v - targets[slot[pos]]).norm_sqr())
            .sum();
        let radius = opts.epsilon * (plan.m() as f64).sqrt();
        let slack_sq = radius * radius - spread;
        Ok(Self {
            positions,
            weights,
            targets,
            slack_sq: slack_sq.max(0.0),
            infeasible: slack_sq < -1e-12 * radius.max(1.0).powi(2),
            radius,
            sample_positions,
            sample_weights,
            y: y.to_vec(),
        })
    }

    /// Projects a full spectrum onto the set in place.
    fn project(&self, spectrum: &mut [Complex64]) {
        let mut phi0 = 0.0;
        for ((&pos, &w), t) in self.positions.iter().zip(&self.weights).zip(&self.targets) {
            phi0 += w * (spectrum[pos] - t).norm_sqr();
        }
        if phi0 <= self.slack_sq {
            return;
        }
        let r_sq = self.slack_sq;
        if r_sq <= 1e-300 {
            for (&pos, t) in self.positions.iter().zip(&self.targets) {
                spectrum[pos] = *t;
            }
            return;
        }
        // solve phi(lambda) = r^2 with Newton on phi^{-1/2} - 1/r, started left of the root
        let inv_r = 1.0 / r_sq.sqrt();
        let mut lambda: f64 = 0.0;
        for _ in 0..100 {
            let mut phi = 0.0;
            let mut dphi = 0.0;
            for ((&pos, &w), t) in self.positions.iter().zip(&self.weights).zip(&self.targets) {
                let d = (spectrum[pos] - t).norm_sqr();
                let s = 1.0 / (1.0 + lambda * w);
                phi += w * d * s * s;
                dphi -= 2.0 * w * w * d * s * s * s;
            }
            if phi <= r_sq * (1.0 + 1e-14) {
                break;
            }
            let psi = phi.powf(-0.5) - inv_r;
            let dpsi = -0.5 * phi.powf(-1.5) * dphi;
            let step = -psi / dpsi;
            if !(step.is_finite() && step > 0.0) {
                break;
            }
            lambda += step;
        }
        for ((&pos, &w), t) in self.positions.iter().zip(&self.weights).zip(&self.targets) {
            spectrum[pos] = t + (spectrum[pos] - t) / (1.0 + lambda * w);
        }
    }

    /// `||D (F_Omega g - y)||_2` from the full spectrum of `g`.
    fn residual_norm(&self, spectrum: &[Complex64]) -> f64 {
        self.sample_positions
            .iter()
            .zip(&self.sample_weights)
            .zip(&self.y)
            .map(|((&pos, &w), v)| w * (spectrum[pos] - v).norm_sqr())
            .sum::<f64>()
            .sqrt()
    }
}

/// Analysis operator `K` whose l1 norm is minimized.
trait Analysis {
    fn dual_len(&self) -> usize;
    fn apply(&self, x: &[Complex64], out: &mut [Complex64]);
    fn adjoint(&self, z: &[Complex64], out: &mut [Complex64]);
}

struct GradientOp {
    n: usize,
}

impl Analysis for GradientOp {
    fn dual_len(&self) -> usize {
        2 * self.n * (self.n - 1)
    }

    fn apply(&self, x: &[Complex64], out: &mut [Complex64]) {
        let img = Image::from_complex(self.n, x.to_vec()).expect("sized");
        let g = gradient(&img);
        let split = g.dx.len();
        out[..split].copy_from_slice(&g.dx);
        out[split..].copy_from_slice(&g.dy);
    }

    fn adjoint(&self, z: &[Complex64], out: &mut [Complex64]) {
        let split = (self.n - 1) * self.n;
        let mut g = GradientField::zeros(self.n);
        g.dx.copy_from_slice(&z[..split]);
        g.dy.copy_from_slice(&z[split..]);
        out.copy_from_slice(gradient_adjoint(&g).pixels());
    }
}

struct HaarOp {
    n: usize,
}

impl Analysis for HaarOp {
    fn dual_len(&self) -> usize {
        self.n * self.n
    }

    fn apply(&self, x: &[Complex64], out: &mut [Complex64]) {
        haar_forward_slice(self.n, x, out);
    }

    fn adjoint(&self, z: &[Complex64], out: &mut [Complex64]) {
        haar_inverse_slice(self.n, z, out);
    }
}

fn l2(x: &[Complex64]) -> f64 {
    x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

fn l1(x: &[Complex64]) -> f64 {
    x.iter().map(|z| z.norm()).sum()
}

/// Power-method estimate of `||K||` from `iters` iterations of `K^* K`.
fn operator_norm(op: &impl Analysis, n: usize, iters: usize) -> f64 {
    // deterministic, non-symmetric start vector
    let mut x: Vec<Complex64> = (0..n * n)
        .map(|i| {
            let t = i as f64;
            Complex64::new((0.37 * t + 0.1).sin(), (1.13 * t + 0.3).cos())
        })
        .collect();
    let mut z = vec![Complex64::new(0.0, 0.0); op.dual_len()];
    let mut y = vec![Complex64::new(0.0, 0.0); n * n];
    let mut estimate = 0.0;
    for _ in 0..iters {
        let norm = l2(&x);
        if norm == 0.0 {
            return 0.0;
        }
        x.iter_mut().for_each(|v| *v /= norm);
        op.apply(&x, &mut z);
        op.adjoint(&z, &mut y);
        estimate = l2(&y).sqrt();
        std::mem::swap(&mut x, &mut y);
    }
    estimate
}

/// Estimated `||grad||` on `n x n` images (50 power iterations).
pub fn gradient_operator_norm(n: usize) -> f64 {
    operator_norm(&GradientOp { n }, n, 50)
}

fn solve(
    op: &impl Analysis,
    y: &[Complex64],
    plan: &SamplingPlan,
    opts: &SolverOptions,
) -> Result<(Image, SolverReport)> {
    opts.validate()?;
    let n = plan.n;
    let ball = FidelityBall::new(y, plan, opts)?;
    let dft = Dft2::new(n)?;

    let l_est = operator_norm(op, n, 50) * (1.0 + 1e-3);
    let (tau, sigma) = match (opts.tau, opts.sigma) {
        (Some(t), Some(s)) => (t, s),
        (Some(t), None) => (t, 1.0 / (t * l_est * l_est)),
        (None, Some(s)) => (1.0 / (s * l_est * l_est), s),
        (None, None) => (1.0 / l_est, 1.0 / l_est),
    };

    // start from the projection of zero: the minimum-energy consistent image
    let mut g = vec![Complex64::new(0.0, 0.0); n * n];
    ball.project(&mut g);
    dft.inverse_in_place(&mut g);

    let mut gbar = g.clone();
    let mut dual = vec![Complex64::new(0.0, 0.0); op.dual_len()];
    let mut kx = vec![Complex64::new(0.0, 0.0); op.dual_len()];
    let mut kty = vec![Complex64::new(0.0, 0.0); n * n];
    let mut next = vec![Complex64::new(0.0, 0.0); n * n];

    let objective_of = |x: &[Complex64], buf: &mut Vec<Complex64>| {
        op.apply(x, buf);
        l1(buf)
    };
    let mut last_objective = objective_of(&g, &mut kx);
    let mut rel_obj_change = f64::INFINITY;
    let mut primal_residual = f64::INFINITY;
    let mut converged = false;
    let mut iterations = 0;
    let violation_tolerance = opts.dual_tol * (plan.m() as f64).sqrt() * opts.epsilon.max(1.0);

    while iterations < opts.max_iters {
        iterations += 1;
        op.apply(&gbar, &mut kx);
        for (p, v) in dual.iter_mut().zip(&kx) {
            let q = *p + v * sigma;
            let m = q.norm();
            *p = if m > 1.0 { q / m } else { q };
        }
        op.adjoint(&dual, &mut kty);
        for ((nx, gx), kt) in next.iter_mut().zip(&g).zip(&kty) {
            *nx = gx - kt * tau;
        }
        dft.forward_in_place(&mut next);
        ball.project(&mut next);
        dft.inverse_in_place(&mut next);

        let mut diff = 0.0;
        for ((gb, nx), gx) in gbar.iter_mut().zip(&next).zip(&g) {
            diff += (nx - gx).norm_sqr();
            *gb = nx * 2.0 - gx;
        }
        primal_residual = diff.sqrt() / l2(&next).max(f64::MIN_POSITIVE);
        std::mem::swap(&mut g, &mut next);

        if iterations % opts.check_every == 0 {
            let objective = objective_of(&g, &mut kx);
            rel_obj_change = (objective - last_objective).abs() / objective.max(f64::MIN_POSITIVE);
            if objective == 0.0 && last_objective == 0.0 {
                rel_obj_change = 0.0;
            }
            last_objective = objective;
            if rel_obj_change <= opts.primal_tol && primal_residual <= opts.primal_tol {
                let mut spec = g.clone();
                dft.forward_in_place(&mut spec);
                let violation = (ball.residual_norm(&spec) - ball.radius).max(0.0);
                if violation <= violation_tolerance {
                    converged = true;
                    break;
                }
            }
        }
    }

    let objective = objective_of(&g, &mut kx);
    let mut spec = g.clone();
    dft.forward_in_place(&mut spec);
    let constraint_violation = (ball.residual_norm(&spec) - ball.radius).max(0.0);
    let image = Image::from_complex(n, g)?;
    Ok((
        image,
        SolverReport {
            iterations,
            primal_residual,
            constraint_violation,
            violation_tolerance,
            objective,
            relative_objective_change: rel_obj_change,
            converged,
            operator_norm: l_est,
            tau,
            sigma,
            infeasible: ball.infeasible,
        },
    ))
}

/// `argmin ||g||_TV` subject to `||D (F_Omega g - y)||_2 <= eps sqrt(m)`.
pub fn tv_min_reconstruct(y: &[Complex64], plan: &SamplingPlan, opts: &SolverOptions) -> Result<(Image, SolverReport)> {
    solve(&GradientOp { n: plan.n }, y, plan, opts)
}

/// `argmin ||H g||_1` subject to `||D (F_Omega g - y)||_2 <= eps sqrt(m)`.
pub fn l1_haar_reconstruct(
    y: &[Complex64],
    plan: &SamplingPlan,
    opts: &SolverOptions,
) -> Result<(Image, SolverReport)> {
    solve(&HaarOp { n: plan.n }, y, plan, opts)
}

/// Objective of [`tv_min_reconstruct`].
pub fn tv_objective(g: &Image) -> f64 {
    tv_norm(g)
}

/// Objective of [`l1_haar_reconstruct`].
pub fn haar_objective(g: &Image) -> f64 {
    let mut out = vec![Complex64::new(0.0, 0.0); g.n() * g.n()];
    haar_forward_slice(g.n(), g.pixels(), &mut out);
    l1(&out)
}

/// `||D (F_Omega g - y)||_2` for the given noise model.
pub fn constraint_residual(g: &Image, y: &[Complex64], plan: &SamplingPlan, model: NoiseModel) -> Result<f64> {
    let measured = crate::transforms::partial_dft(g, &plan.freqs)?;
    let diff: Vec<Complex64> = measured.iter().zip(y).map(|(a, b)| a - b).collect();
    Ok(weighted_norm(&diff, &plan.rho, model))
}

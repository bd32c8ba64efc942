//! Bound-constrained minimization of the smoothed weighted sum
//! `F*(q) = μx F̃x(q) + μy F̃y(q)`.
//!
//! Projected BFGS: the search direction comes from a dense inverse-Hessian
//! approximation, steps are projected onto the box and accepted under an
//! Armijo condition. Gradients are central finite differences through the
//! whole `q → q̃(q)` pipeline.
//!
//! [`scaling_method`] and [`weighted_method`] are the two single-objective
//! baselines for a requested aspect ratio `r`: optimize the x-scaled
//! structure with equal weights, or optimize the unscaled structure with
//! weights `(r², 1)` and map the result.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::energy::{self, Material, ObjectiveValues, VolumeNormalization};
use crate::error::{Error, Result};
use crate::fea::{self, ResizeOptions, TrussDesign};
use crate::ground::GroundStructure;
use crate::moga;

/// Which densities the `√(q² + c)` smoothing is applied to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum Smoothing {
    /// The equilibrium-consistent densities `q̃(q)`.
    #[default]
    Equilibrium,
    /// The design variables `q` themselves.
    Raw,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WsConfig {
    pub mu_x: f64,
    pub mu_y: f64,
    pub c: f64,
    pub tol_rel: f64,
    /// Stop once the infinity norm of the projected gradient is below this.
    pub tol_grad: f64,
    pub max_iters: usize,
    /// Relative finite-difference step; the step for `q_i` is
    /// `fd_step · max(1, |q_i|)`.
    pub fd_step: f64,
    /// Starting genome; `None` uses the lifted ground-structure densities.
    pub start: Option<Vec<f64>>,
    pub q_lower: f64,
    pub q_upper: f64,
    /// Number of starts: the start itself, then `start ± δ` pairs with
    /// `δ` uniform in `[−w, w]`.
    pub starts: usize,
    pub start_halfwidth: f64,
    pub rng_seed: u64,
    pub smoothing: Smoothing,
    pub parallel: bool,
}

impl Default for WsConfig {
    fn default() -> Self {
        WsConfig {
            mu_x: 1.0,
            mu_y: 1.0,
            c: 1e-10,
            tol_rel: 1e-8,
            tol_grad: 1e-10,
            max_iters: 500,
            fd_step: 1e-6,
            start: None,
            q_lower: -1000.0,
            q_upper: 1000.0,
            starts: 3,
            start_halfwidth: 10.0,
            rng_seed: 0,
            smoothing: Smoothing::Equilibrium,
            parallel: false,
        }
    }
}

impl WsConfig {
    pub fn with_weights(mut self, mu_x: f64, mu_y: f64) -> Self {
        self.mu_x = mu_x;
        self.mu_y = mu_y;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if !(self.mu_x >= 0.0 && self.mu_y >= 0.0) || self.mu_x + self.mu_y == 0.0 {
            return bad("weights must be nonnegative and not both zero");
        }
        if !(self.c > 0.0) {
            return bad("smoothing constant must be positive");
        }
        if !(self.tol_rel > 0.0 && self.fd_step > 0.0 && self.tol_grad >= 0.0) {
            return bad("tolerances and finite-difference step must be positive");
        }
        if !(self.q_lower < self.q_upper) {
            return bad("empty force-density bounds");
        }
        if self.starts == 0 {
            return bad("at least one start is required");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum WsStatus {
    /// Projected gradient or relative decrease below tolerance.
    Converged,
    IterationLimit,
    /// The line search failed even along steepest descent.
    NoProgress,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WsResult {
    pub q: Vec<f64>,
    pub f_star: f64,
    pub objectives: ObjectiveValues,
    pub iterations: usize,
    pub evaluations: usize,
    pub status: WsStatus,
    /// Accepted objective values, starting with the start point.
    pub history: Vec<f64>,
}

/// `F*(q)`, or `None` if `q` is infeasible.
pub fn objective(g: &GroundStructure, q: &[f64], cfg: &WsConfig, material: Material) -> Option<f64> {
    let d = fea::realize_design(g, q, material).ok()?;
    let smoothed = match cfg.smoothing {
        Smoothing::Equilibrium => &d.q_tilde,
        Smoothing::Raw => &d.q,
    };
    let f = energy::weighted_sum(g, &d.geometry, smoothed, cfg.mu_x, cfg.mu_y, material, cfg.c);
    f.is_finite().then_some(f)
}

struct Evaluator<'a> {
    g: &'a GroundStructure,
    cfg: &'a WsConfig,
    material: Material,
    count: usize,
}

impl Evaluator<'_> {
    fn f(&mut self, q: &[f64]) -> Option<f64> {
        self.count += 1;
        objective(self.g, q, self.cfg, self.material)
    }

    /// Central differences, falling back to one-sided near the bounds or
    /// next to infeasible points.
    fn gradient(&mut self, q: &[f64], fq: f64) -> Vec<f64> {
        let (lo, hi) = (self.cfg.q_lower, self.cfg.q_upper);
        let mut x = q.to_vec();
        let mut grad = vec![0.0; q.len()];
        for i in 0..q.len() {
            let h = self.cfg.fd_step * q[i].abs().max(1.0);
            let fwd = if q[i] + h <= hi {
                x[i] = q[i] + h;
                self.f(&x)
            } else {
                None
            };
            let bwd = if q[i] - h >= lo {
                x[i] = q[i] - h;
                self.f(&x)
            } else {
                None
            };
            x[i] = q[i];
            grad[i] = match (fwd, bwd) {
                (Some(a), Some(b)) => (a - b) / (2.0 * h),
                (Some(a), None) => (a - fq) / h,
                (None, Some(b)) => (fq - b) / h,
                (None, None) => 0.0,
            };
        }
        grad
    }
}

/// Finite-difference gradient of [`objective`] as used by the optimizer.
pub fn fd_gradient(g: &GroundStructure, q: &[f64], cfg: &WsConfig, material: Material) -> Option<Vec<f64>> {
    let mut ev = Evaluator {
        g,
        cfg,
        material,
        count: 0,
    };
    let f = ev.f(q)?;
    Some(ev.gradient(q, f))
}

fn project(x: &mut [f64], lo: f64, hi: f64) {
    for v in x {
        *v = v.clamp(lo, hi);
    }
}

fn free_mask(x: &[f64], grad: &[f64], lo: f64, hi: f64) -> Vec<bool> {
    x.iter()
        .zip(grad)
        .map(|(&v, &gv)| !((v <= lo && gv > 0.0) || (v >= hi && gv < 0.0)))
        .collect()
}

/// Single-start projected BFGS.
pub fn minimize_from(
    g: &GroundStructure,
    start: &[f64],
    cfg: &WsConfig,
    material: Material,
) -> Result<WsResult> {
    cfg.validate()?;
    if start.len() != g.member_count() {
        return Err(Error::Config(format!(
            "start has {} entries, structure has {} members",
            start.len(),
            g.member_count()
        )));
    }
    let (lo, hi) = (cfg.q_lower, cfg.q_upper);
    let n = start.len();
    let mut ev = Evaluator {
        g,
        cfg,
        material,
        count: 0,
    };
    let mut x = start.to_vec();
    project(&mut x, lo, hi);
    let mut f = ev
        .f(&x)
        .ok_or_else(|| Error::StartInfeasible(format!("{:?}", fea::realize_design(g, &x, material).err())))?;
    let mut grad = ev.gradient(&x, f);
    let mut history = vec![f];
    let mut h_inv = DMatrix::<f64>::identity(n, n);
    let mut fresh = true;
    let mut status = WsStatus::IterationLimit;
    let mut iterations = 0;

    while iterations < cfg.max_iters {
        let free = free_mask(&x, &grad, lo, hi);
        let pg = grad
            .iter()
            .zip(&free)
            .fold(0.0_f64, |s, (gv, &fr)| if fr { s.max(gv.abs()) } else { s });
        if pg <= cfg.tol_grad {
            status = WsStatus::Converged;
            break;
        }
        iterations += 1;

        let gvec = DVector::from_iterator(n, grad.iter().zip(&free).map(|(gv, &fr)| if fr { *gv } else { 0.0 }));
        let mut dir = -(&h_inv * &gvec);
        for i in 0..n {
            if !free[i] {
                dir[i] = 0.0;
            }
        }
        if dir.dot(&gvec) >= 0.0 {
            h_inv = DMatrix::identity(n, n);
            fresh = true;
            dir = -gvec.clone();
        }
        if fresh {
            // unit first step in the largest component
            let dmax = dir.amax();
            if dmax > 1.0 {
                dir /= dmax;
            }
        }

        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..60 {
            let mut trial: Vec<f64> = x.iter().zip(dir.iter()).map(|(v, d)| v + step * d).collect();
            project(&mut trial, lo, hi);
            let decrease: f64 = trial.iter().zip(&x).zip(&grad).map(|((t, v), gv)| gv * (t - v)).sum();
            if let Some(ft) = ev.f(&trial) {
                if ft <= f + 1e-4 * decrease && ft <= f {
                    accepted = Some((trial, ft));
                    break;
                }
            }
            step *= 0.5;
        }

        let Some((x_new, f_new)) = accepted else {
            if fresh {
                status = WsStatus::NoProgress;
                break;
            }
            h_inv = DMatrix::identity(n, n);
            fresh = true;
            continue;
        };

        let g_new = ev.gradient(&x_new, f_new);
        let s = DVector::from_iterator(n, x_new.iter().zip(&x).map(|(a, b)| a - b));
        let y = DVector::from_iterator(n, g_new.iter().zip(&grad).map(|(a, b)| a - b));
        let sy = s.dot(&y);
        if sy > 1e-12 * s.norm() * y.norm() && sy > 0.0 {
            if fresh {
                h_inv *= sy / y.dot(&y);
            }
            let rho = 1.0 / sy;
            let hy = &h_inv * &y;
            let yhy = y.dot(&hy);
            // H ← H − ρ(H y sᵀ + s yᵀH) + (ρ² yᵀHy + ρ) s sᵀ
            h_inv -= (&hy * s.transpose() + &s * hy.transpose()) * rho;
            h_inv += (&s * s.transpose()) * (rho * rho * yhy + rho);
            fresh = false;
        }

        let rel = (f - f_new) / f.abs().max(f64::MIN_POSITIVE);
        x = x_new;
        f = f_new;
        grad = g_new;
        history.push(f);
        if rel < cfg.tol_rel {
            if fresh {
                status = WsStatus::Converged;
                break;
            }
            // one more try along steepest descent before giving up
            h_inv = DMatrix::identity(n, n);
            fresh = true;
        }
    }

    let d = fea::realize_design(g, &x, material)?;
    let objectives = energy::split_objectives(g, &d.geometry, &d.q_tilde, material);
    Ok(WsResult {
        q: x,
        f_star: f,
        objectives,
        iterations,
        evaluations: ev.count,
        status,
        history,
    })
}

/// Default start: ground-structure densities with zero-force members lifted.
pub fn default_start(g: &GroundStructure, material: Material) -> Result<Vec<f64>> {
    Ok(moga::lift_zero_densities(&moga::initial_force_densities(g, material)?))
}

/// Multi-start minimization; the best result over all feasible starts wins.
pub fn minimize(g: &GroundStructure, cfg: &WsConfig, material: Material) -> Result<WsResult> {
    cfg.validate()?;
    let base = match &cfg.start {
        Some(s) => s.clone(),
        None => default_start(g, material)?,
    };
    let mut starts = vec![base.clone()];
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.rng_seed);
    while starts.len() < cfg.starts {
        let delta: Vec<f64> = base
            .iter()
            .map(|_| rng.gen_range(-cfg.start_halfwidth..=cfg.start_halfwidth))
            .collect();
        starts.push(base.iter().zip(&delta).map(|(b, d)| b + d).collect());
        if starts.len() < cfg.starts {
            starts.push(base.iter().zip(&delta).map(|(b, d)| b - d).collect());
        }
    }
    let run = |s: &Vec<f64>| minimize_from(g, s, cfg, material);
    let results: Vec<Result<WsResult>> = if cfg.parallel {
        starts.par_iter().map(run).collect()
    } else {
        starts.iter().map(run).collect()
    };
    let mut best: Option<WsResult> = None;
    let mut first_err = None;
    for r in results {
        match r {
            Ok(r) => {
                if best.as_ref().is_none_or(|b| r.f_star < b.f_star) {
                    best = Some(r);
                }
            }
            Err(e) => {
                first_err.get_or_insert(e);
            }
        }
    }
    best.ok_or_else(|| first_err.unwrap_or(Error::StartInfeasible("no start".into())))
}

/// A volume-normalized, fully stressed design for one aspect ratio.
#[derive(Debug, Clone, PartialEq)]
pub struct RatioDesign {
    pub r: f64,
    /// Structure scaled by `(r, 1)`.
    pub structure: GroundStructure,
    pub design: TrussDesign,
    pub normalization: VolumeNormalization,
    pub compliance: f64,
}

/// Realizes `q` on `g` scaled by `(r, 1)`, resizes the areas from the
/// equilibrium-consistent densities until fully stressed, and normalizes
/// the volume.
pub fn realize_scaled(g: &GroundStructure, q: &[f64], r: f64, v_target: f64, material: Material) -> Result<RatioDesign> {
    let scaled = g.scaled(r, 1.0)?;
    let raw = fea::realize_design(&scaled, q, material)?;
    let sized = fea::resize_fully_stressed(&scaled, raw, ResizeOptions::default());
    let (design, normalization) = energy::normalize_volume(&scaled, &sized, v_target)?;
    let compliance = fea::compliance(&design, &scaled);
    Ok(RatioDesign {
        r,
        structure: scaled,
        design,
        normalization,
        compliance,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct MethodResult {
    pub optimum: WsResult,
    pub realized: RatioDesign,
}

impl MethodResult {
    pub fn compliance(&self) -> f64 {
        self.realized.compliance
    }
}

fn check_ratio(r: f64) -> Result<()> {
    if r > 0.0 && r.is_finite() {
        Ok(())
    } else {
        Err(Error::Config(format!("aspect ratio must be positive, got {r}")))
    }
}

/// Optimizes the structure actually scaled by `(r, 1)` with equal weights.
pub fn scaling_method(
    g: &GroundStructure,
    r: f64,
    v_target: f64,
    material: Material,
    base: &WsConfig,
) -> Result<MethodResult> {
    check_ratio(r)?;
    let scaled = g.scaled(r, 1.0)?;
    let mut cfg = base.clone().with_weights(1.0, 1.0);
    if cfg.start.is_none() {
        cfg.start = Some(default_start(&scaled, material)?);
    }
    let optimum = minimize(&scaled, &cfg, material)?;
    let realized = realize_scaled(g, &optimum.q, r, v_target, material)?;
    Ok(MethodResult { optimum, realized })
}

/// Optimizes the unscaled structure with weights `(r², 1)` and realizes the
/// optimum on the structure scaled by `(r, 1)`.
pub fn weighted_method(
    g: &GroundStructure,
    r: f64,
    v_target: f64,
    material: Material,
    base: &WsConfig,
) -> Result<MethodResult> {
    check_ratio(r)?;
    let cfg = base.clone().with_weights(r * r, 1.0);
    let optimum = minimize(g, &cfg, material)?;
    let realized = realize_scaled(g, &optimum.q, r, v_target, material)?;
    Ok(MethodResult { optimum, realized })
}

/// Weighted-sum optima for weights `(r², 1)` on the unscaled structure,
/// rescaled with [`moga::scale_seed`] for injection into the GA.
pub fn ga_seeds(
    g: &GroundStructure,
    ratios: &[f64],
    material: Material,
    base: &WsConfig,
    q_lower: f64,
    q_upper: f64,
) -> Result<Vec<Vec<f64>>> {
    ratios
        .iter()
        .map(|&r| {
            check_ratio(r)?;
            let cfg = base.clone().with_weights(r * r, 1.0);
            let opt = minimize(g, &cfg, material)?;
            Ok(moga::scale_seed(&opt.q, q_lower, q_upper))
        })
        .collect()
}

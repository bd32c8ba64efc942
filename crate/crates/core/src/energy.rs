//! Strain-energy objectives split by coordinate direction.
//!
//! With `Δx_i, Δy_i` the coordinate differences of member `i`,
//! `F_x = Σ (σ̄/E) Δx_i² |q_i|` and `F_y = Σ (σ̄/E) Δy_i² |q_i|`, so that
//! `F_x + F_y = Σ (σ̄/E) L_i² |q_i|`. Scaling x by `√μx` and y by `√μy`
//! leaves `q` unchanged and turns `F` into `μx F_x + μy F_y`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fdm::EquilibriumGeometry;
use crate::fea::{self, TrussDesign};
use crate::ground::GroundStructure;

/// A member is reported as removed when `|q̃_i|` is below this fraction of
/// the largest `|q̃_j|`.
pub const TOPOLOGY_THRESHOLD: f64 = 1e-6;

/// Young's modulus and reference stress level.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Material {
    pub e: f64,
    pub sigma_bar: f64,
}

impl Default for Material {
    fn default() -> Self {
        Material { e: 1.0, sigma_bar: 1.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveValues {
    pub fx: f64,
    pub fy: f64,
    pub f: f64,
}

impl ObjectiveValues {
    pub fn weighted(&self, mu_x: f64, mu_y: f64) -> f64 {
        mu_x * self.fx + mu_y * self.fy
    }
}

/// `(F_x, F_y)` evaluated with the densities `q_eval` on `geom`.
pub fn split_objectives(
    g: &GroundStructure,
    geom: &EquilibriumGeometry,
    q_eval: &[f64],
    material: Material,
) -> ObjectiveValues {
    let coef = material.sigma_bar / material.e;
    let (mut fx, mut fy) = (0.0, 0.0);
    for (k, q) in q_eval.iter().enumerate() {
        let (dx, dy) = geom.delta(g, k);
        fx += coef * dx * dx * q.abs();
        fy += coef * dy * dy * q.abs();
    }
    ObjectiveValues { fx, fy, f: fx + fy }
}

/// Unsplit objective `Σ (σ̄/E) L_i² |q_i|` straight from member lengths.
pub fn total_objective(geom: &EquilibriumGeometry, q_eval: &[f64], material: Material) -> f64 {
    let coef = material.sigma_bar / material.e;
    geom.lengths
        .iter()
        .zip(q_eval)
        .map(|(l, q)| coef * l * l * q.abs())
        .sum()
}

/// Smoothed weighted sum `Σ (σ̄/E) [μx Δx_i² + μy Δy_i²] √(q_i² + c)`.
pub fn weighted_sum(
    g: &GroundStructure,
    geom: &EquilibriumGeometry,
    q_eval: &[f64],
    mu_x: f64,
    mu_y: f64,
    material: Material,
    c: f64,
) -> f64 {
    let coef = material.sigma_bar / material.e;
    q_eval
        .iter()
        .enumerate()
        .map(|(k, q)| {
            let (dx, dy) = geom.delta(g, k);
            coef * (mu_x * dx * dx + mu_y * dy * dy) * (q * q + c).sqrt()
        })
        .sum()
}

/// Members kept in the reported topology.
pub fn retained_members(q_tilde: &[f64]) -> Vec<bool> {
    let qmax = q_tilde.iter().fold(0.0_f64, |s, v| s.max(v.abs()));
    q_tilde
        .iter()
        .map(|v| qmax > 0.0 && v.abs() >= TOPOLOGY_THRESHOLD * qmax)
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VolumeNormalization {
    pub v_target: f64,
    pub v_before: f64,
    /// Area multiplier `V_target / V_before`.
    pub scale: f64,
    pub sigma_bar_adjusted: f64,
}

/// Scales all areas uniformly so the volume equals `v_target` and
/// re-analyses the design. The stress level becomes `σ̄ / s`.
pub fn normalize_volume(
    g: &GroundStructure,
    d: &TrussDesign,
    v_target: f64,
) -> Result<(TrussDesign, VolumeNormalization)> {
    if !(v_target > 0.0) {
        return Err(Error::Config(format!("target volume must be positive, got {v_target}")));
    }
    let v_before = d.volume();
    if !(v_before > 0.0) {
        return Err(Error::ZeroVolume);
    }
    let scale = v_target / v_before;
    let areas: Vec<f64> = d.areas.iter().map(|a| a * scale).collect();
    let an = fea::analyze(g, &d.geometry, &areas, d.material.e)?;
    let material = Material {
        e: d.material.e,
        sigma_bar: d.material.sigma_bar / scale,
    };
    let q_tilde = an
        .axial
        .iter()
        .zip(&d.geometry.lengths)
        .zip(&an.analysed)
        .map(|((n, l), &on)| if on { n / l } else { 0.0 })
        .collect();
    let out = TrussDesign {
        geometry: d.geometry.clone(),
        q: d.q.clone(),
        areas,
        material,
        axial: an.axial,
        q_tilde,
        displacements: an.displacements,
        analysed: an.analysed,
    };
    Ok((
        out,
        VolumeNormalization {
            v_target,
            v_before,
            scale,
            sigma_bar_adjusted: material.sigma_bar,
        },
    ))
}

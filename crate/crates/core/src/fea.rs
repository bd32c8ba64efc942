//! Linear truss analysis that turns a force-density candidate into an
//! equilibrium-consistent design.
//!
//! The candidate `q` fixes the geometry (through [`crate::fdm`]) and the
//! areas `A_i = L_i |q_i| / σ̄`. A displacement solve with only the supports
//! restrained then gives axial forces `Ñ_i` that balance the applied loads,
//! and the equilibrium-consistent force densities `q̃_i = Ñ_i / L_i`.

use nalgebra::{DMatrix, DVector};

use crate::energy::Material;
use crate::error::{Error, Result};
use crate::fdm::{self, EquilibriumGeometry};
use crate::ground::GroundStructure;
use crate::linalg;

/// Members with `A_i` below this fraction of the largest area are left out
/// of the stiffness matrix.
pub const AREA_FLOOR: f64 = 1e-12;

/// Reduced stiffness system over the unrestrained displacement components.
#[derive(Debug, Clone)]
pub struct StiffnessSystem {
    pub k: DMatrix<f64>,
    pub f: DVector<f64>,
    pub u: DVector<f64>,
    /// Equation number of each `(node, component)` pair, `None` when the
    /// component is restrained or the node carries no analysed member.
    pub dofs: Vec<[Option<usize>; 2]>,
    pub condition: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Analysis {
    /// Nodal displacements `[ux, uy]`.
    pub displacements: Vec<[f64; 2]>,
    pub axial: Vec<f64>,
    /// Members that entered the stiffness matrix.
    pub analysed: Vec<bool>,
    pub condition: f64,
}

/// A fully realized structure.
#[derive(Debug, Clone, PartialEq)]
pub struct TrussDesign {
    pub geometry: EquilibriumGeometry,
    /// Force densities the areas were sized from.
    pub q: Vec<f64>,
    pub areas: Vec<f64>,
    pub material: Material,
    /// Axial forces `Ñ` from the displacement solve.
    pub axial: Vec<f64>,
    /// Equilibrium-consistent force densities `Ñ_i / L_i`.
    pub q_tilde: Vec<f64>,
    pub displacements: Vec<[f64; 2]>,
    pub analysed: Vec<bool>,
}

impl TrussDesign {
    pub fn volume(&self) -> f64 {
        self.areas.iter().zip(&self.geometry.lengths).map(|(a, l)| a * l).sum()
    }

    /// Member stresses `Ñ_i / A_i`; zero for members outside the analysis.
    pub fn stresses(&self) -> Vec<f64> {
        self.axial
            .iter()
            .zip(&self.areas)
            .zip(&self.analysed)
            .map(|((n, a), &on)| if on { n / a } else { 0.0 })
            .collect()
    }
}

fn stiffness_system(
    g: &GroundStructure,
    geom: &EquilibriumGeometry,
    areas: &[f64],
    e: f64,
) -> Result<(StiffnessSystem, Vec<bool>)> {
    let n = g.node_count();
    let amax = areas.iter().fold(0.0_f64, |s, a| s.max(*a));
    if !(amax > 0.0) {
        return Err(Error::ZeroVolume);
    }
    let analysed: Vec<bool> = areas
        .iter()
        .zip(&geom.lengths)
        .map(|(&a, &l)| a >= AREA_FLOOR * amax && a > 0.0 && l > 0.0)
        .collect();

    let mut active = vec![false; n];
    for (m, _) in g.members().iter().zip(&analysed).filter(|(_, &on)| on) {
        active[m.a.0] = true;
        active[m.b.0] = true;
    }
    let mut restrained = vec![[false; 2]; n];
    for s in g.supports() {
        restrained[s.node.0] = [s.fix_x, s.fix_y];
    }
    let mut dofs = vec![[None; 2]; n];
    let mut neq = 0;
    for k in 0..n {
        for d in 0..2 {
            if active[k] && !restrained[k][d] {
                dofs[k][d] = Some(neq);
                neq += 1;
            }
        }
    }

    let mut f = DVector::zeros(neq);
    for (k, p) in g.node_loads().iter().enumerate() {
        for d in 0..2 {
            if p[d] == 0.0 {
                continue;
            }
            match dofs[k][d] {
                Some(i) => f[i] += p[d],
                None if !restrained[k][d] => {
                    // load on a node the analysed members no longer reach
                    return Err(Error::SingularStiffness {
                        condition: f64::INFINITY,
                    });
                }
                None => {}
            }
        }
    }

    let mut k_mat = DMatrix::zeros(neq, neq);
    for (idx, m) in g.members().iter().enumerate() {
        if !analysed[idx] {
            continue;
        }
        let (dx, dy) = geom.delta(g, idx);
        let l = geom.lengths[idx];
        let (c, s) = (dx / l, dy / l);
        let stiff = e * areas[idx] / l;
        let dir = [-c, -s, c, s];
        let map = [dofs[m.a.0][0], dofs[m.a.0][1], dofs[m.b.0][0], dofs[m.b.0][1]];
        for i in 0..4 {
            let Some(p) = map[i] else { continue };
            for j in 0..4 {
                if let Some(r) = map[j] {
                    k_mat[(p, r)] += stiff * (dir[i] * dir[j]);
                }
            }
        }
    }
    let fact = linalg::factor_spd(&k_mat).map_err(|condition| Error::SingularStiffness { condition })?;
    let u = fact.solve(&f);
    Ok((
        StiffnessSystem {
            k: k_mat,
            f,
            u,
            dofs,
            condition: fact.condition,
        },
        analysed,
    ))
}

/// Displacement analysis of a truss with the given geometry and areas.
pub fn analyze(g: &GroundStructure, geom: &EquilibriumGeometry, areas: &[f64], e: f64) -> Result<Analysis> {
    let (sys, analysed) = stiffness_system(g, geom, areas, e)?;
    let displacements: Vec<[f64; 2]> = sys
        .dofs
        .iter()
        .map(|d| [d[0].map_or(0.0, |i| sys.u[i]), d[1].map_or(0.0, |i| sys.u[i])])
        .collect();
    let axial = g
        .members()
        .iter()
        .enumerate()
        .map(|(idx, m)| {
            if !analysed[idx] {
                return 0.0;
            }
            let (dx, dy) = geom.delta(g, idx);
            let l = geom.lengths[idx];
            let ua = displacements[m.a.0];
            let ub = displacements[m.b.0];
            let elong = (dx * (ub[0] - ua[0]) + dy * (ub[1] - ua[1])) / l;
            e * areas[idx] / l * elong
        })
        .collect();
    Ok(Analysis {
        displacements,
        axial,
        analysed,
        condition: sys.condition,
    })
}

/// Assembles the reduced stiffness system for inspection.
pub fn stiffness(g: &GroundStructure, geom: &EquilibriumGeometry, areas: &[f64], e: f64) -> Result<StiffnessSystem> {
    stiffness_system(g, geom, areas, e).map(|(s, _)| s)
}

/// Sizes members from the geometry and areas implied by `q`, then analyses
/// the result.
pub fn realize_design(g: &GroundStructure, q: &[f64], material: Material) -> Result<TrussDesign> {
    let geometry = fdm::solve_free_coordinates(g, q)?;
    design_from_geometry(g, geometry, q.to_vec(), material)
}

/// Same as [`realize_design`] with the geometry already solved.
pub fn design_from_geometry(
    g: &GroundStructure,
    geometry: EquilibriumGeometry,
    q: Vec<f64>,
    material: Material,
) -> Result<TrussDesign> {
    let areas: Vec<f64> = geometry
        .lengths
        .iter()
        .zip(&q)
        .map(|(l, qi)| l * qi.abs() / material.sigma_bar)
        .collect();
    let an = analyze(g, &geometry, &areas, material.e)?;
    let q_tilde = an
        .axial
        .iter()
        .zip(&geometry.lengths)
        .zip(&an.analysed)
        .map(|((n, l), &on)| if on { n / l } else { 0.0 })
        .collect();
    Ok(TrussDesign {
        geometry,
        q,
        areas,
        material,
        axial: an.axial,
        q_tilde,
        displacements: an.displacements,
        analysed: an.analysed,
    })
}

/// External work `fᵀu` of the applied loads.
pub fn compliance(d: &TrussDesign, g: &GroundStructure) -> f64 {
    g.node_loads()
        .iter()
        .zip(&d.displacements)
        .map(|(p, u)| p[0] * u[0] + p[1] * u[1])
        .sum()
}

/// `Σ Ñ_i² L_i / (E A_i)`, equal to [`compliance`] for a converged solve.
pub fn member_energy_sum(d: &TrussDesign) -> f64 {
    (0..d.axial.len())
        .filter(|&k| d.analysed[k])
        .map(|k| d.axial[k] * d.axial[k] * d.geometry.lengths[k] / (d.material.e * d.areas[k]))
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResizeOptions {
    pub max_iters: usize,
    /// Stop once every member above the topology threshold has
    /// `| |q̃_i| / |q_i| − 1 | ≤ tol`.
    pub tol: f64,
    /// Members whose `|q̃_i|` falls below this fraction of the largest are
    /// removed, unless removing them leaves a mechanism.
    pub prune: f64,
}

impl Default for ResizeOptions {
    fn default() -> Self {
        ResizeOptions {
            max_iters: 20_000,
            tol: 1e-7,
            prune: 1e-4,
        }
    }
}

/// Worst `| |q̃_i| / |q_i| − 1 |` over members whose `|q̃_i|` is above the
/// topology threshold; 0 when the design is fully stressed.
pub fn stress_ratio_error(d: &TrussDesign) -> f64 {
    let retained = crate::energy::retained_members(&d.q_tilde);
    retained
        .iter()
        .enumerate()
        .filter(|(_, &r)| r)
        .map(|(k, _)| {
            if d.q[k] == 0.0 {
                f64::INFINITY
            } else {
                (d.q_tilde[k].abs() / d.q[k].abs() - 1.0).abs()
            }
        })
        .fold(0.0, f64::max)
}

/// Stress-ratio resizing at fixed geometry: areas are repeatedly resized
/// from the equilibrium-consistent force densities (`q ← q̃`) until the
/// design is fully stressed.
///
/// Since `q̃` balances the free nodes in the current geometry, replacing `q`
/// by `q̃` leaves the force-density equilibrium geometry unchanged; only the
/// area distribution moves. If a resize step turns the truss into a
/// mechanism the last stable design is returned.
pub fn resize_fully_stressed(g: &GroundStructure, design: TrussDesign, opts: ResizeOptions) -> TrussDesign {
    let mut current = design;
    for _ in 0..opts.max_iters {
        if stress_ratio_error(&current) <= opts.tol {
            break;
        }
        let qmax = current.q_tilde.iter().fold(0.0_f64, |s, v| s.max(v.abs()));
        let pruned: Vec<f64> = current
            .q_tilde
            .iter()
            .map(|&v| if v.abs() < opts.prune * qmax { 0.0 } else { v })
            .collect();
        let next = if pruned != current.q_tilde {
            design_from_geometry(g, current.geometry.clone(), pruned, current.material)
                .or_else(|_| design_from_geometry(g, current.geometry.clone(), current.q_tilde.clone(), current.material))
        } else {
            design_from_geometry(g, current.geometry.clone(), current.q_tilde.clone(), current.material)
        };
        match next {
            Ok(next) => current = next,
            Err(_) => break,
        }
    }
    current
}

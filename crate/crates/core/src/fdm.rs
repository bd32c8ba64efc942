//! Force-density matrix and the partitioned equilibrium solve.
//!
//! With force densities `q` fixed, equilibrium is linear in the nodal
//! coordinates: `Q x = pˣ`, `Q y = pʸ`. Free nodes carry no load, so their
//! coordinates solve `Q_free x_free = −Q_link x_fix` (and the same in y).

use std::ops::Deref;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::ground::GroundStructure;
use crate::linalg;

/// Design variable: one force density per member, clamped into its box.
#[derive(Debug, Clone, PartialEq)]
pub struct ForceDensityVector {
    q: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl ForceDensityVector {
    pub fn new(q: Vec<f64>, lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        if q.len() != lower.len() || q.len() != upper.len() {
            return Err(Error::Config("force density and bound lengths differ".into()));
        }
        if lower.iter().zip(&upper).any(|(l, u)| !(l <= u)) {
            return Err(Error::Config("lower bound above upper bound".into()));
        }
        let q = q
            .iter()
            .zip(lower.iter().zip(&upper))
            .map(|(v, (l, u))| v.clamp(*l, *u))
            .collect();
        Ok(ForceDensityVector { q, lower, upper })
    }

    /// Same bounds `[lower, upper]` for every member.
    pub fn with_uniform_bounds(q: Vec<f64>, lower: f64, upper: f64) -> Result<Self> {
        let m = q.len();
        Self::new(q, vec![lower; m], vec![upper; m])
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.q
    }
}

impl Deref for ForceDensityVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.q
    }
}

/// `Q` and its free/fixed partition blocks. Block rows and columns follow the
/// order of [`GroundStructure::free_nodes`] and [`GroundStructure::fixed_nodes`].
#[derive(Debug, Clone, PartialEq)]
pub struct ForceDensityMatrix {
    pub full: DMatrix<f64>,
    pub free: DMatrix<f64>,
    pub link: DMatrix<f64>,
    pub fix: DMatrix<f64>,
}

fn check_len(g: &GroundStructure, q: &[f64]) -> Result<()> {
    if q.len() != g.member_count() {
        return Err(Error::Config(format!(
            "expected {} force densities, got {}",
            g.member_count(),
            q.len()
        )));
    }
    Ok(())
}

pub fn assemble(g: &GroundStructure, q: &[f64]) -> Result<ForceDensityMatrix> {
    check_len(g, q)?;
    let n = g.node_count();
    let mut full = DMatrix::zeros(n, n);
    for (mem, &qk) in g.members().iter().zip(q) {
        let (a, b) = (mem.a.0, mem.b.0);
        full[(a, a)] += qk;
        full[(b, b)] += qk;
        full[(a, b)] -= qk;
        full[(b, a)] -= qk;
    }
    let free = g.free_nodes();
    let fixed = g.fixed_nodes();
    let block = |rows: &[usize], cols: &[usize]| {
        DMatrix::from_fn(rows.len(), cols.len(), |i, j| full[(rows[i], cols[j])])
    };
    Ok(ForceDensityMatrix {
        free: block(free, free),
        link: block(free, fixed),
        fix: block(fixed, fixed),
        full,
    })
}

/// Full nodal coordinates at force-density equilibrium.
#[derive(Debug, Clone, PartialEq)]
pub struct EquilibriumGeometry {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    /// Member lengths, in member order.
    pub lengths: Vec<f64>,
    /// Lower-block right-hand sides `pˣ_fix`, one per fixed node. These hold
    /// support reactions together with the loads implied at loaded nodes.
    pub reactions_x: Vec<f64>,
    pub reactions_y: Vec<f64>,
    /// Condition estimate of `Q_free`.
    pub condition: f64,
}

impl EquilibriumGeometry {
    /// Coordinate differences `(x_b − x_a, y_b − y_a)` of member `k`.
    pub fn delta(&self, g: &GroundStructure, k: usize) -> (f64, f64) {
        let m = g.members()[k];
        (self.x[m.b.0] - self.x[m.a.0], self.y[m.b.0] - self.y[m.a.0])
    }

    pub fn x_free(&self, g: &GroundStructure) -> Vec<f64> {
        g.free_nodes().iter().map(|&k| self.x[k]).collect()
    }

    pub fn y_free(&self, g: &GroundStructure) -> Vec<f64> {
        g.free_nodes().iter().map(|&k| self.y[k]).collect()
    }

    /// Geometry with prescribed coordinates (no equilibrium solve), used for
    /// analysing the ground structure as drawn.
    pub fn from_coords(g: &GroundStructure, coords: &[[f64; 2]]) -> Self {
        let x: Vec<f64> = coords.iter().map(|c| c[0]).collect();
        let y: Vec<f64> = coords.iter().map(|c| c[1]).collect();
        let lengths = member_lengths(g, &x, &y);
        let nf = g.fixed_nodes().len();
        EquilibriumGeometry {
            x,
            y,
            lengths,
            reactions_x: vec![0.0; nf],
            reactions_y: vec![0.0; nf],
            condition: 1.0,
        }
    }
}

fn member_lengths(g: &GroundStructure, x: &[f64], y: &[f64]) -> Vec<f64> {
    g.members()
        .iter()
        .map(|m| {
            let dx = x[m.b.0] - x[m.a.0];
            let dy = y[m.b.0] - y[m.a.0];
            (dx * dx + dy * dy).sqrt()
        })
        .collect()
}

/// Solves for the free-node coordinates with the fixed nodes at their
/// positions in `g`.
pub fn solve_free_coordinates(g: &GroundStructure, q: &[f64]) -> Result<EquilibriumGeometry> {
    solve_for_fixed(g, q, &g.x_fix(), &g.y_fix())
}

/// Same as [`solve_free_coordinates`] with fixed-node coordinates supplied
/// explicitly (in [`GroundStructure::fixed_nodes`] order).
pub fn solve_for_fixed(
    g: &GroundStructure,
    q: &[f64],
    x_fix: &[f64],
    y_fix: &[f64],
) -> Result<EquilibriumGeometry> {
    let qm = assemble(g, q)?;
    let nf = g.fixed_nodes().len();
    if x_fix.len() != nf || y_fix.len() != nf {
        return Err(Error::Config("fixed coordinate length mismatch".into()));
    }
    let fact = linalg::factor_general(&qm.free)
        .map_err(|condition| Error::SingularEquilibrium { condition })?;
    let xf = DVector::from_column_slice(x_fix);
    let yf = DVector::from_column_slice(y_fix);
    let x_free = -fact.solve(&(&qm.link * &xf));
    let y_free = -fact.solve(&(&qm.link * &yf));

    let n = g.node_count();
    let mut x = vec![0.0; n];
    let mut y = vec![0.0; n];
    for (i, &k) in g.free_nodes().iter().enumerate() {
        x[k] = x_free[i];
        y[k] = y_free[i];
    }
    for (i, &k) in g.fixed_nodes().iter().enumerate() {
        x[k] = x_fix[i];
        y[k] = y_fix[i];
    }
    let link_t = qm.link.transpose();
    let rx = &link_t * &x_free + &qm.fix * &xf;
    let ry = &link_t * &y_free + &qm.fix * &yf;
    let lengths = member_lengths(g, &x, &y);
    Ok(EquilibriumGeometry {
        x,
        y,
        lengths,
        reactions_x: rx.iter().copied().collect(),
        reactions_y: ry.iter().copied().collect(),
        condition: fact.condition,
    })
}

/// Largest relative discrepancy between scaled free coordinates and the
/// free coordinates of the scaled structure.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AffineScalingReport {
    /// From scaling x by `alpha`.
    pub x: f64,
    /// From scaling y by `alpha`.
    pub y: f64,
}

impl AffineScalingReport {
    pub fn max(&self) -> f64 {
        self.x.max(self.y)
    }
}

fn relative_gap(expected: &[f64], actual: &[f64]) -> f64 {
    let scale = expected.iter().fold(0.0_f64, |s, v| s.max(v.abs()));
    let gap = expected
        .iter()
        .zip(actual)
        .fold(0.0_f64, |s, (e, a)| s.max((e - a).abs()));
    if scale > 0.0 {
        gap / scale
    } else {
        gap
    }
}

pub fn check_affine_scaling(g: &GroundStructure, q: &[f64], alpha: f64) -> Result<AffineScalingReport> {
    let base = solve_free_coordinates(g, q)?;
    let sx = solve_free_coordinates(&g.scaled(alpha, 1.0)?, q)?;
    let sy = solve_free_coordinates(&g.scaled(1.0, alpha)?, q)?;
    let ex: Vec<f64> = base.x_free(g).iter().map(|v| alpha * v).collect();
    let ey: Vec<f64> = base.y_free(g).iter().map(|v| alpha * v).collect();
    Ok(AffineScalingReport {
        x: relative_gap(&ex, &sx.x_free(g)),
        y: relative_gap(&ey, &sy.y_free(g)),
    })
}

//! Front post-processing: slopes, weight ratios and aspect ratios.
//!
//! Points are sorted by increasing `F_x`. The slope to the previous point is
//! `β_i = (F_y,i − F_y,i−1) / (F_x,i − F_x,i−1)`. An interior point is optimal
//! for weight ratios between `|β_i+1|` and `|β_i|`; the estimate used here is
//! the geometric mean of the two, and `r = √(μx/μy)`.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::energy::Material;
use crate::error::{Error, Result};
use crate::ground::GroundStructure;
use crate::moga::{FrontArchive, FrontPoint};
use crate::wsopt::{self, RatioDesign};

pub const CSV_HEADER: &str = "index,Fx,Fy,beta,mu_ratio,r_est";

const DUPLICATE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParetoPoint {
    pub objectives: [f64; 2],
    pub genome: Vec<f64>,
    /// Slope to the previous point; `None` for the first.
    pub beta: Option<f64>,
    pub mu_ratio: Option<f64>,
    pub r_est: Option<f64>,
}

impl ParetoPoint {
    pub fn fx(&self) -> f64 {
        self.objectives[0]
    }

    pub fn fy(&self) -> f64 {
        self.objectives[1]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatioEstimate {
    pub points: Vec<ParetoPoint>,
    /// `|β|` is not non-increasing along the front.
    pub non_convex: bool,
}

fn near(a: f64, b: f64) -> bool {
    (a - b).abs() <= DUPLICATE_TOL * a.abs().max(b.abs()).max(1.0)
}

/// Sorted by `F_x`, with duplicates and dominated points removed, so that
/// `F_y` is strictly decreasing.
pub fn clean_front(points: &[FrontPoint]) -> Vec<FrontPoint> {
    let mut sorted: Vec<&FrontPoint> = points
        .iter()
        .filter(|p| p.objectives.iter().all(|v| v.is_finite()))
        .collect();
    sorted.sort_by(|a, b| {
        a.objectives[0]
            .total_cmp(&b.objectives[0])
            .then(a.objectives[1].total_cmp(&b.objectives[1]))
    });
    let mut out: Vec<FrontPoint> = Vec::with_capacity(sorted.len());
    for p in sorted {
        if let Some(last) = out.last() {
            let [lx, ly] = last.objectives;
            let [px, py] = p.objectives;
            if (near(lx, px) && near(ly, py)) || py >= ly {
                continue;
            }
        }
        out.push(p.clone());
    }
    out
}

/// The cleaned points that lie on the lower-left convex hull of the front,
/// i.e. those that minimize `μx F_x + μy F_y` for some positive weights.
pub fn supported_points(points: &[FrontPoint]) -> Vec<FrontPoint> {
    let cleaned = clean_front(points);
    let mut hull: Vec<FrontPoint> = Vec::with_capacity(cleaned.len());
    for p in cleaned {
        while hull.len() >= 2 {
            let [ax, ay] = hull[hull.len() - 2].objectives;
            let [bx, by] = hull[hull.len() - 1].objectives;
            let [cx, cy] = p.objectives;
            // drop b unless a → b → c turns counter-clockwise
            if (bx - ax) * (cy - ay) - (by - ay) * (cx - ax) <= 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(p);
    }
    hull
}

fn slopes(points: &[FrontPoint]) -> Vec<Option<f64>> {
    (0..points.len())
        .map(|i| {
            (i > 0).then(|| {
                let [x0, y0] = points[i - 1].objectives;
                let [x1, y1] = points[i].objectives;
                (y1 - y0) / (x1 - x0)
            })
        })
        .collect()
}

/// Slopes and weight-ratio estimates for a front with at least three
/// distinct nondominated points.
pub fn estimate_ratios(front: &FrontArchive) -> Result<RatioEstimate> {
    let cleaned = clean_front(&front.points);
    if cleaned.len() < 3 {
        return Err(Error::TooFewPoints { found: cleaned.len() });
    }
    let betas = slopes(&cleaned);
    let n = cleaned.len();
    let abs = |i: usize| betas[i].map(f64::abs).unwrap();
    let non_convex = (2..n).any(|i| abs(i) > abs(i - 1) * (1.0 + 1e-12));
    let points = cleaned
        .into_iter()
        .enumerate()
        .map(|(i, p)| {
            let mu = if i == 0 {
                abs(1)
            } else if i == n - 1 {
                abs(n - 1)
            } else {
                (abs(i) * abs(i + 1)).sqrt()
            };
            ParetoPoint {
                objectives: p.objectives,
                genome: p.genome,
                beta: betas[i],
                mu_ratio: Some(mu),
                r_est: Some(mu.sqrt()),
            }
        })
        .collect();
    Ok(RatioEstimate { points, non_convex })
}

/// [`estimate_ratios`] restricted to the [`supported_points`] of the front.
/// Points inside dents of a noisy front are never weighted-sum optimal, so
/// their slope-based ratios are meaningless.
pub fn estimate_supported_ratios(front: &FrontArchive) -> Result<RatioEstimate> {
    estimate_ratios(&FrontArchive {
        points: supported_points(&front.points),
    })
}

/// Like [`estimate_ratios`] but accepts short fronts: with two points both
/// get the single slope, with one point nothing is estimated.
pub fn describe_front(front: &FrontArchive) -> Vec<ParetoPoint> {
    if let Ok(est) = estimate_ratios(front) {
        return est.points;
    }
    let cleaned = clean_front(&front.points);
    let betas = slopes(&cleaned);
    let mu = betas.get(1).copied().flatten().map(f64::abs);
    cleaned
        .into_iter()
        .zip(betas)
        .map(|(p, beta)| ParetoPoint {
            objectives: p.objectives,
            genome: p.genome,
            beta,
            mu_ratio: mu,
            r_est: mu.map(f64::sqrt),
        })
        .collect()
}

/// The point whose estimated aspect ratio is nearest to `r`; ties go to the
/// smaller `F_x`.
pub fn solution_for_ratio(points: &[ParetoPoint], r: f64) -> Option<&ParetoPoint> {
    let mut best: Option<(&ParetoPoint, f64)> = None;
    for p in points {
        let Some(est) = p.r_est else { continue };
        let dist = (est - r).abs();
        let better = match best {
            None => true,
            Some((b, d)) => dist < d || (dist == d && p.fx() < b.fx()),
        };
        if better {
            best = Some((p, dist));
        }
    }
    best.map(|(p, _)| p)
}

/// Realizes a front point on the structure scaled by `(r, 1)`.
pub fn realize_at_ratio(
    g: &GroundStructure,
    point: &ParetoPoint,
    r: f64,
    v_target: f64,
    material: Material,
) -> Result<RatioDesign> {
    wsopt::realize_scaled(g, &point.genome, r, v_target, material)
}

fn field(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.16e}")).unwrap_or_default()
}

pub fn front_csv(points: &[ParetoPoint]) -> String {
    let mut s = String::from(CSV_HEADER);
    s.push('\n');
    for (i, p) in points.iter().enumerate() {
        let _ = writeln!(
            s,
            "{i},{:.16e},{:.16e},{},{},{}",
            p.fx(),
            p.fy(),
            field(p.beta),
            field(p.mu_ratio),
            field(p.r_est)
        );
    }
    s
}

#[derive(Debug, Clone, PartialEq)]
pub struct CsvRow {
    pub index: usize,
    pub fx: f64,
    pub fy: f64,
    pub beta: Option<f64>,
    pub mu_ratio: Option<f64>,
    pub r_est: Option<f64>,
}

pub fn parse_front_csv(text: &str) -> Result<Vec<CsvRow>> {
    let mut lines = text.lines();
    if lines.next().map(str::trim) != Some(CSV_HEADER) {
        return Err(Error::Config("front CSV header mismatch".into()));
    }
    let bad = |line: &str| Error::Config(format!("malformed front CSV row: {line}"));
    let num = |s: &str, line: &str| s.parse::<f64>().map_err(|_| bad(line));
    let opt = |s: &str, line: &str| {
        if s.is_empty() {
            Ok(None)
        } else {
            num(s, line).map(Some)
        }
    };
    lines
        .filter(|l| !l.trim().is_empty())
        .map(|line| {
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 6 {
                return Err(bad(line));
            }
            Ok(CsvRow {
                index: f[0].parse().map_err(|_| bad(line))?,
                fx: num(f[1], line)?,
                fy: num(f[2], line)?,
                beta: opt(f[3], line)?,
                mu_ratio: opt(f[4], line)?,
                r_est: opt(f[5], line)?,
            })
        })
        .collect()
}

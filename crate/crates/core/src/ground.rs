//! Ground structures: node grid, member connectivity, supports and loads.
//!
//! Nodes are split into *fixed* nodes (supports and loaded nodes, whose
//! coordinates are prescribed) and *free* nodes (whose coordinates follow
//! from force-density equilibrium). Only supports constrain displacements in
//! the truss analysis; loaded nodes are fixed in position for the shape
//! optimization but move under load.
//!
//! Generated grids number their nodes column-major: bottom to top within a
//! column, columns left to right. For a 3×2 grid the node at column `i`,
//! row `j` is `i * 3 + j`, so node 10 is the right-edge mid-height node.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NodeId(pub usize);

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Member {
    pub a: NodeId,
    pub b: NodeId,
}

impl Member {
    pub fn new(a: usize, b: usize) -> Self {
        Member {
            a: NodeId(a),
            b: NodeId(b),
        }
    }

    fn key(&self) -> (usize, usize) {
        (self.a.0.min(self.b.0), self.a.0.max(self.b.0))
    }
}

/// Displacement constraint at a node. Pin supports set both components.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Support {
    pub node: NodeId,
    pub fix_x: bool,
    pub fix_y: bool,
}

impl Support {
    pub fn pin(node: usize) -> Self {
        Support {
            node: NodeId(node),
            fix_x: true,
            fix_y: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Load {
    pub node: NodeId,
    pub fx: f64,
    pub fy: f64,
}

/// Node coordinates and member connectivity of a rectangular grid, before
/// supports and loads are attached.
#[derive(Debug, Clone, PartialEq)]
pub struct GridLayout {
    pub nx: usize,
    pub ny: usize,
    pub coords: Vec<[f64; 2]>,
    pub members: Vec<Member>,
    pub width: f64,
    pub height: f64,
}

impl GridLayout {
    pub fn node_at(&self, col: usize, row: usize) -> usize {
        col * (self.ny + 1) + row
    }
}

/// Closed-form member count of an `nx × ny` grid with crossing diagonals.
pub fn grid_member_count(nx: usize, ny: usize) -> usize {
    nx * (ny + 1) + ny * (nx + 1) + 2 * nx * ny
}

/// Uniform `nx × ny` grid of `(nx+1)(ny+1)` nodes. Members are listed as all
/// horizontal edges, then all vertical edges, then both diagonals of every
/// cell (the two diagonals cross without a shared node).
pub fn generate_grid(nx: usize, ny: usize, width: f64, height: f64) -> Result<GridLayout> {
    if nx == 0 || ny == 0 {
        return Err(Error::InvalidStructure(format!(
            "grid needs at least one cell in each direction, got {nx}x{ny}"
        )));
    }
    if !(width > 0.0 && height > 0.0) || !width.is_finite() || !height.is_finite() {
        return Err(Error::InvalidStructure(format!(
            "grid dimensions must be positive, got {width}x{height}"
        )));
    }
    let id = |i: usize, j: usize| i * (ny + 1) + j;
    let mut coords = Vec::with_capacity((nx + 1) * (ny + 1));
    for i in 0..=nx {
        for j in 0..=ny {
            coords.push([width * i as f64 / nx as f64, height * j as f64 / ny as f64]);
        }
    }
    let mut members = Vec::with_capacity(grid_member_count(nx, ny));
    for j in 0..=ny {
        for i in 0..nx {
            members.push(Member::new(id(i, j), id(i + 1, j)));
        }
    }
    for i in 0..=nx {
        for j in 0..ny {
            members.push(Member::new(id(i, j), id(i, j + 1)));
        }
    }
    for i in 0..nx {
        for j in 0..ny {
            members.push(Member::new(id(i, j), id(i + 1, j + 1)));
            members.push(Member::new(id(i + 1, j), id(i, j + 1)));
        }
    }
    Ok(GridLayout {
        nx,
        ny,
        coords,
        members,
        width,
        height,
    })
}

/// Immutable problem definition.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundStructure {
    coords: Vec<[f64; 2]>,
    members: Vec<Member>,
    fixed: Vec<bool>,
    free_nodes: Vec<usize>,
    fixed_nodes: Vec<usize>,
    loads: Vec<[f64; 2]>,
    supports: Vec<Support>,
    width: f64,
    height: f64,
}

impl GroundStructure {
    /// Builds and validates a ground structure.
    ///
    /// Fixed nodes are the union of support nodes, loaded nodes and
    /// `extra_fixed`; every other node is free and `coords` only supplies
    /// its initial position.
    pub fn new(
        coords: Vec<[f64; 2]>,
        members: Vec<Member>,
        supports: Vec<Support>,
        loads: Vec<Load>,
        extra_fixed: &[usize],
    ) -> Result<Self> {
        let n = coords.len();
        if n < 2 {
            return Err(Error::InvalidStructure("need at least two nodes".into()));
        }
        if members.is_empty() {
            return Err(Error::InvalidStructure("no members".into()));
        }
        if coords.iter().flatten().any(|c| !c.is_finite()) {
            return Err(Error::InvalidStructure("non-finite coordinate".into()));
        }
        let mut seen = BTreeSet::new();
        for (k, mem) in members.iter().enumerate() {
            if mem.a.0 >= n || mem.b.0 >= n {
                return Err(Error::InvalidStructure(format!(
                    "member {k} references a node outside 0..{n}"
                )));
            }
            if mem.a == mem.b {
                return Err(Error::InvalidStructure(format!("member {k} connects node {} to itself", mem.a)));
            }
            if !seen.insert(mem.key()) {
                return Err(Error::InvalidStructure(format!(
                    "member {k} duplicates the pair ({}, {})",
                    mem.a, mem.b
                )));
            }
        }

        let mut fixed = vec![false; n];
        let mut node_loads = vec![[0.0; 2]; n];
        for s in &supports {
            if s.node.0 >= n {
                return Err(Error::InvalidStructure(format!("support at missing node {}", s.node)));
            }
            fixed[s.node.0] = true;
        }
        for l in &loads {
            if l.node.0 >= n {
                return Err(Error::InvalidStructure(format!("load at missing node {}", l.node)));
            }
            if !(l.fx.is_finite() && l.fy.is_finite()) {
                return Err(Error::InvalidStructure(format!("non-finite load at node {}", l.node)));
            }
            node_loads[l.node.0][0] += l.fx;
            node_loads[l.node.0][1] += l.fy;
            if l.fx != 0.0 || l.fy != 0.0 {
                fixed[l.node.0] = true;
            }
        }
        for &k in extra_fixed {
            if k >= n {
                return Err(Error::InvalidStructure(format!("fixed node {k} does not exist")));
            }
            fixed[k] = true;
        }
        if supports.is_empty() {
            return Err(Error::InvalidStructure("no supports".into()));
        }
        if node_loads.iter().all(|p| p[0] == 0.0 && p[1] == 0.0) {
            return Err(Error::InvalidStructure("no nonzero loads".into()));
        }

        let mut uf = UnionFind::new(n);
        for mem in &members {
            uf.union(mem.a.0, mem.b.0);
        }
        let root = uf.find(0);
        if (1..n).any(|k| uf.find(k) != root) {
            return Err(Error::InvalidStructure("member graph is not connected".into()));
        }

        let free_nodes = (0..n).filter(|&k| !fixed[k]).collect();
        let fixed_nodes = (0..n).filter(|&k| fixed[k]).collect();
        let (lo, hi) = bounding_box(&coords);
        Ok(GroundStructure {
            coords,
            members,
            fixed,
            free_nodes,
            fixed_nodes,
            loads: node_loads,
            supports,
            width: hi[0] - lo[0],
            height: hi[1] - lo[1],
        })
    }

    pub fn from_layout(layout: &GridLayout, supports: Vec<Support>, loads: Vec<Load>) -> Result<Self> {
        let mut g = Self::new(layout.coords.clone(), layout.members.clone(), supports, loads, &[])?;
        g.width = layout.width;
        g.height = layout.height;
        Ok(g)
    }

    /// Default example: pin supports along the whole left edge and a unit
    /// downward load at the right-edge node at mid-height (rounded down for
    /// odd `ny`).
    pub fn cantilever(nx: usize, ny: usize, width: f64, height: f64) -> Result<Self> {
        let layout = generate_grid(nx, ny, width, height)?;
        let supports = (0..=ny).map(|j| Support::pin(layout.node_at(0, j))).collect();
        let load = Load {
            node: NodeId(layout.node_at(nx, ny / 2)),
            fx: 0.0,
            fy: -1.0,
        };
        Self::from_layout(&layout, supports, vec![load])
    }

    /// Anisotropic scaling of every coordinate. Connectivity, loads and node
    /// classification are untouched.
    pub fn scaled(&self, sx: f64, sy: f64) -> Result<Self> {
        if !(sx > 0.0 && sy > 0.0) || !sx.is_finite() || !sy.is_finite() {
            return Err(Error::Config(format!("scale factors must be positive, got ({sx}, {sy})")));
        }
        let mut g = self.clone();
        for c in &mut g.coords {
            c[0] *= sx;
            c[1] *= sy;
        }
        g.width *= sx;
        g.height *= sy;
        Ok(g)
    }

    pub fn node_count(&self) -> usize {
        self.coords.len()
    }

    pub fn member_count(&self) -> usize {
        self.members.len()
    }

    pub fn members(&self) -> &[Member] {
        &self.members
    }

    /// All node coordinates; for free nodes these are the initial positions.
    pub fn coords(&self) -> &[[f64; 2]] {
        &self.coords
    }

    pub fn is_fixed(&self, node: usize) -> bool {
        self.fixed[node]
    }

    pub fn free_nodes(&self) -> &[usize] {
        &self.free_nodes
    }

    pub fn fixed_nodes(&self) -> &[usize] {
        &self.fixed_nodes
    }

    pub fn supports(&self) -> &[Support] {
        &self.supports
    }

    /// Applied load per node, `[px, py]`.
    pub fn node_loads(&self) -> &[[f64; 2]] {
        &self.loads
    }

    pub fn loads(&self) -> Vec<Load> {
        self.loads
            .iter()
            .enumerate()
            .filter(|(_, p)| p[0] != 0.0 || p[1] != 0.0)
            .map(|(k, p)| Load {
                node: NodeId(k),
                fx: p[0],
                fy: p[1],
            })
            .collect()
    }

    pub fn x_fix(&self) -> Vec<f64> {
        self.fixed_nodes.iter().map(|&k| self.coords[k][0]).collect()
    }

    pub fn y_fix(&self) -> Vec<f64> {
        self.fixed_nodes.iter().map(|&k| self.coords[k][1]).collect()
    }

    pub fn width(&self) -> f64 {
        self.width
    }

    pub fn height(&self) -> f64 {
        self.height
    }

    /// True if every node is reachable from node 0 through members.
    pub fn is_connected(&self) -> bool {
        let mut uf = UnionFind::new(self.node_count());
        for m in &self.members {
            uf.union(m.a.0, m.b.0);
        }
        let root = uf.find(0);
        (0..self.node_count()).all(|k| uf.find(k) == root)
    }
}

fn bounding_box(coords: &[[f64; 2]]) -> ([f64; 2], [f64; 2]) {
    let mut lo = [f64::INFINITY; 2];
    let mut hi = [f64::NEG_INFINITY; 2];
    for c in coords {
        for d in 0..2 {
            lo[d] = lo[d].min(c[d]);
            hi[d] = hi[d].max(c[d]);
        }
    }
    (lo, hi)
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut k: usize) -> usize {
        while self.parent[k] != k {
            self.parent[k] = self.parent[self.parent[k]];
            k = self.parent[k];
        }
        k
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra] = rb;
        }
    }
}

/// Problem file schema (TOML).
///
/// ```toml
/// nodes = [[0.0, 0.0], [1.0, 0.0], [0.5, 1.0]]
/// members = [[0, 2], [1, 2]]
/// fixed = []            # optional extra fixed nodes
///
/// [[supports]]
/// node = 0              # x and y default to true (pin)
///
/// [[supports]]
/// node = 1
/// y = false
///
/// [[loads]]
/// node = 2
/// direction = "y"       # "x" or "y"
/// magnitude = -1.0
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub nodes: Vec<[f64; 2]>,
    pub members: Vec<[usize; 2]>,
    #[serde(default)]
    pub fixed: Vec<usize>,
    pub supports: Vec<SupportRecord>,
    pub loads: Vec<LoadRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SupportRecord {
    pub node: usize,
    #[serde(default = "yes")]
    pub x: bool,
    #[serde(default = "yes")]
    pub y: bool,
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    X,
    Y,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LoadRecord {
    pub node: usize,
    pub direction: Direction,
    pub magnitude: f64,
}

impl ProblemFile {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::InvalidStructure(format!("problem file: {e}")))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("problem file serializes")
    }

    pub fn build(&self) -> Result<GroundStructure> {
        let members = self.members.iter().map(|&[a, b]| Member::new(a, b)).collect();
        let supports = self
            .supports
            .iter()
            .map(|s| Support {
                node: NodeId(s.node),
                fix_x: s.x,
                fix_y: s.y,
            })
            .collect();
        let loads = self
            .loads
            .iter()
            .map(|l| {
                let (fx, fy) = match l.direction {
                    Direction::X => (l.magnitude, 0.0),
                    Direction::Y => (0.0, l.magnitude),
                };
                Load {
                    node: NodeId(l.node),
                    fx,
                    fy,
                }
            })
            .collect();
        GroundStructure::new(self.nodes.clone(), members, supports, loads, &self.fixed)
    }

    pub fn from_structure(g: &GroundStructure) -> Self {
        let mut loads = Vec::new();
        for l in g.loads() {
            if l.fx != 0.0 {
                loads.push(LoadRecord {
                    node: l.node.0,
                    direction: Direction::X,
                    magnitude: l.fx,
                });
            }
            if l.fy != 0.0 {
                loads.push(LoadRecord {
                    node: l.node.0,
                    direction: Direction::Y,
                    magnitude: l.fy,
                });
            }
        }
        let loaded: BTreeSet<usize> = loads.iter().map(|l| l.node).collect();
        let supported: BTreeSet<usize> = g.supports().iter().map(|s| s.node.0).collect();
        ProblemFile {
            nodes: g.coords().to_vec(),
            members: g.members().iter().map(|m| [m.a.0, m.b.0]).collect(),
            fixed: g
                .fixed_nodes()
                .iter()
                .copied()
                .filter(|k| !loaded.contains(k) && !supported.contains(k))
                .collect(),
            supports: g
                .supports()
                .iter()
                .map(|s| SupportRecord {
                    node: s.node.0,
                    x: s.fix_x,
                    y: s.fix_y,
                })
                .collect(),
            loads,
        }
    }
}

//! Cost grids and scenarios.
//!
//! Nodes are sampled row-major with row 0 at `y_min`; τ between nodes is the
//! bilinear interpolation of the four enclosing samples.

mod format;
mod generate;
mod pgm;

use thiserror::Error;

pub use format::{format_number, load_scenario, write_scenario, FORMAT_HEADER};
pub use generate::{generate_scenario, resample, GeneratorParams, Preset};
pub use pgm::field_to_pgm;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GridError {
    #[error("parse-error({line}): {reason}")]
    Parse { line: usize, reason: String },
    #[error("invalid-cost")]
    InvalidCost,
    #[error("invalid-endpoint")]
    InvalidEndpoint,
    #[error("invalid-geometry")]
    InvalidGeometry,
    #[error("invalid-generator-params: {0}")]
    InvalidGeneratorParams(String),
    #[error("out-of-domain")]
    OutOfDomain,
}

/// Node index `(ix, iy)`.
pub type Node = (usize, usize);

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridGeometry {
    pub nx: usize,
    pub ny: usize,
    pub x_min: f64,
    pub y_min: f64,
    pub dx: f64,
    pub dy: f64,
}

impl GridGeometry {
    pub fn new(nx: usize, ny: usize, x_min: f64, y_min: f64, dx: f64, dy: f64) -> Result<Self, GridError> {
        let g = Self { nx, ny, x_min, y_min, dx, dy };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<(), GridError> {
        let finite = [self.x_min, self.y_min, self.dx, self.dy].iter().all(|v| v.is_finite());
        if self.nx < 2 || self.ny < 2 || !finite || self.dx <= 0.0 || self.dy <= 0.0 {
            return Err(GridError::InvalidGeometry);
        }
        if self.nx.checked_mul(self.ny).is_none_or(|n| n > 1 << 28) {
            return Err(GridError::InvalidGeometry);
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn index(&self, (ix, iy): Node) -> usize {
        iy * self.nx + ix
    }

    pub fn node(&self, index: usize) -> Node {
        (index % self.nx, index / self.nx)
    }

    pub fn contains_node(&self, (ix, iy): Node) -> bool {
        ix < self.nx && iy < self.ny
    }

    pub fn node_x(&self, ix: usize) -> f64 {
        self.x_min + ix as f64 * self.dx
    }

    pub fn node_y(&self, iy: usize) -> f64 {
        self.y_min + iy as f64 * self.dy
    }

    pub fn x_max(&self) -> f64 {
        self.node_x(self.nx - 1)
    }

    pub fn y_max(&self) -> f64 {
        self.node_y(self.ny - 1)
    }

    pub fn point(&self, (ix, iy): Node) -> (f64, f64) {
        (self.node_x(ix), self.node_y(iy))
    }

    pub fn contains_point(&self, x: f64, y: f64) -> bool {
        x >= self.x_min && x <= self.x_max() && y >= self.y_min && y <= self.y_max()
    }

    /// 4-neighbours in the order west, east, south, north.
    pub fn neighbors(&self, (ix, iy): Node) -> impl Iterator<Item = Node> + '_ {
        let cand = [
            (ix.checked_sub(1), Some(iy)),
            (Some(ix + 1), Some(iy)),
            (Some(ix), iy.checked_sub(1)),
            (Some(ix), Some(iy + 1)),
        ];
        cand.into_iter().filter_map(move |c| match c {
            (Some(x), Some(y)) if x < self.nx && y < self.ny => Some((x, y)),
            _ => None,
        })
    }
}

/// Cell index and fractional offset along one axis, clamped to the last
/// cell at the upper boundary.
pub fn locate_axis(v: f64, min: f64, step: f64, n: usize) -> (usize, f64) {
    let q = (v - min) / step;
    let i = (q.floor().max(0.0) as usize).min(n - 2);
    (i, q - i as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct CostGrid {
    pub geometry: GridGeometry,
    /// Row-major, `ny × nx`.
    pub tau: Vec<f64>,
}

impl CostGrid {
    pub fn new(geometry: GridGeometry, tau: Vec<f64>) -> Result<Self, GridError> {
        geometry.validate()?;
        if tau.len() != geometry.len() {
            return Err(GridError::InvalidGeometry);
        }
        if tau.iter().any(|t| !t.is_finite() || *t <= 0.0) {
            return Err(GridError::InvalidCost);
        }
        Ok(Self { geometry, tau })
    }

    pub fn uniform(geometry: GridGeometry, tau: f64) -> Result<Self, GridError> {
        Self::new(geometry, vec![tau; geometry.len()])
    }

    pub fn at(&self, node: Node) -> f64 {
        self.tau[self.geometry.index(node)]
    }

    /// Bilinear interpolation of τ at `(x, y)`.
    pub fn tau_at(&self, x: f64, y: f64) -> Result<f64, GridError> {
        let g = &self.geometry;
        if !g.contains_point(x, y) {
            return Err(GridError::OutOfDomain);
        }
        let (ix, tx) = locate_axis(x, g.x_min, g.dx, g.nx);
        let (iy, ty) = locate_axis(y, g.y_min, g.dy, g.ny);
        Ok(bilinear(
            [self.at((ix, iy)), self.at((ix + 1, iy)), self.at((ix, iy + 1)), self.at((ix + 1, iy + 1))],
            tx,
            ty,
        ))
    }
}

/// Bilinear blend of cell corners `[v00, v10, v01, v11]`.
pub fn bilinear([v00, v10, v01, v11]: [f64; 4], tx: f64, ty: f64) -> f64 {
    let bottom = v00 + tx * (v10 - v00);
    let top = v01 + tx * (v11 - v01);
    bottom + ty * (top - bottom)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub name: String,
    pub grid: CostGrid,
    /// Point A.
    pub start: Node,
    /// Point B.
    pub goal: Node,
}

impl Scenario {
    pub fn new(name: impl Into<String>, grid: CostGrid, start: Node, goal: Node) -> Result<Self, GridError> {
        let g = &grid.geometry;
        if !g.contains_node(start) || !g.contains_node(goal) || start == goal {
            return Err(GridError::InvalidEndpoint);
        }
        Ok(Self { name: name.into(), grid, start, goal })
    }

    pub fn geometry(&self) -> &GridGeometry {
        &self.grid.geometry
    }
}

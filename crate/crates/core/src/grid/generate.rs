use std::fmt;
use std::str::FromStr;

use super::{CostGrid, GridError, GridGeometry, Scenario};
use crate::rng::RngStream;

const MAX_NODES_PER_AXIS: usize = 4096;
const MAX_FEATURES: usize = 64;
const OBSTACLE_FACTOR: f64 = 20.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    Uniform,
    Obstacles,
    Turbulence,
    PaperLike,
}

impl Preset {
    pub const ALL: [Preset; 4] = [Preset::Uniform, Preset::Obstacles, Preset::Turbulence, Preset::PaperLike];

    pub fn name(self) -> &'static str {
        match self {
            Preset::Uniform => "uniform",
            Preset::Obstacles => "obstacles",
            Preset::Turbulence => "turbulence",
            Preset::PaperLike => "paper-like",
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Preset {
    type Err = GridError;

    fn from_str(s: &str) -> Result<Self, GridError> {
        Preset::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| GridError::InvalidGeneratorParams(format!("unknown preset '{s}'")))
    }
}

/// Overrides of the preset defaults.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct GeneratorParams {
    pub nx: Option<usize>,
    pub ny: Option<usize>,
    pub dx: Option<f64>,
    pub dy: Option<f64>,
    /// Base cost.
    pub tau: Option<f64>,
    /// Number of turbulence blobs.
    pub blobs: Option<usize>,
    /// Number of rectangular obstacles.
    pub obstacles: Option<usize>,
}

struct Resolved {
    nx: usize,
    ny: usize,
    dx: f64,
    dy: f64,
    tau: f64,
    blobs: usize,
    obstacles: usize,
}

fn resolve(preset: Preset, p: &GeneratorParams) -> Result<Resolved, GridError> {
    let (n, h, blobs, obstacles) = match preset {
        Preset::PaperLike => (200, 0.005, 3, 0),
        Preset::Turbulence => (51, 0.02, 3, 0),
        Preset::Obstacles => (51, 0.02, 0, 4),
        Preset::Uniform => (51, 0.02, 0, 0),
    };
    let r = Resolved {
        nx: p.nx.unwrap_or(n),
        ny: p.ny.unwrap_or(n),
        dx: p.dx.unwrap_or(h),
        dy: p.dy.unwrap_or(h),
        tau: p.tau.unwrap_or(1.0),
        blobs: p.blobs.unwrap_or(blobs),
        obstacles: p.obstacles.unwrap_or(obstacles),
    };
    let bad = |m: &str| Err(GridError::InvalidGeneratorParams(m.to_string()));
    if !(2..=MAX_NODES_PER_AXIS).contains(&r.nx) || !(2..=MAX_NODES_PER_AXIS).contains(&r.ny) {
        return bad("node counts must lie in [2, 4096]");
    }
    if !(r.dx.is_finite() && r.dx > 0.0 && r.dy.is_finite() && r.dy > 0.0) {
        return bad("spacings must be positive and finite");
    }
    if !(r.tau.is_finite() && r.tau > 0.0) {
        return bad("base cost must be positive and finite");
    }
    if r.blobs > MAX_FEATURES || r.obstacles > MAX_FEATURES {
        return bad("at most 64 blobs and 64 obstacles");
    }
    Ok(r)
}

/// Builds a seeded scenario. Start and goal sit on the left and right edges
/// of the middle row.
pub fn generate_scenario(preset: Preset, params: &GeneratorParams, seed: u64) -> Result<Scenario, GridError> {
    let r = resolve(preset, params)?;
    let geometry = GridGeometry::new(r.nx, r.ny, 0.0, 0.0, r.dx, r.dy)?;
    let (w, h) = (geometry.x_max(), geometry.y_max());
    let mut rng = RngStream::new(seed);
    let mut tau = vec![r.tau; geometry.len()];

    for _ in 0..r.obstacles {
        let rw = rng.uniform(0.1, 0.25) * w;
        let rh = rng.uniform(0.1, 0.25) * h;
        let x0 = rng.uniform(0.0, w - rw);
        let y0 = rng.uniform(0.0, h - rh);
        for (i, t) in tau.iter_mut().enumerate() {
            let (x, y) = geometry.point(geometry.node(i));
            if x >= x0 && x <= x0 + rw && y >= y0 && y <= y0 + rh {
                *t = r.tau * OBSTACLE_FACTOR;
            }
        }
    }

    let blobs: Vec<[f64; 4]> = (0..r.blobs)
        .map(|_| {
            let cx = rng.uniform(0.0, w);
            let cy = rng.uniform(0.0, h);
            let amp = rng.uniform(2.0, 6.0) * r.tau;
            let sigma = rng.uniform(0.05, 0.12) * w.min(h);
            [cx, cy, amp, sigma]
        })
        .collect();
    if !blobs.is_empty() {
        for (i, t) in tau.iter_mut().enumerate() {
            let (x, y) = geometry.point(geometry.node(i));
            let bump: f64 = blobs
                .iter()
                .map(|[cx, cy, amp, s]| amp * (-((x - cx).powi(2) + (y - cy).powi(2)) / (2.0 * s * s)).exp())
                .sum();
            *t += bump;
        }
    }

    let grid = CostGrid::new(geometry, tau)?;
    let mid = r.ny / 2;
    Scenario::new(format!("{preset}-{seed}"), grid, (0, mid), (r.nx - 1, mid))
}

/// Refines a scenario by `factor` along both axes, sampling τ bilinearly.
pub fn resample(s: &Scenario, factor: usize) -> Result<Scenario, GridError> {
    if factor == 0 {
        return Err(GridError::InvalidGeneratorParams("factor must be positive".into()));
    }
    let g = s.geometry();
    let fine = GridGeometry::new(
        (g.nx - 1) * factor + 1,
        (g.ny - 1) * factor + 1,
        g.x_min,
        g.y_min,
        g.dx / factor as f64,
        g.dy / factor as f64,
    )?;
    let mut tau = Vec::with_capacity(fine.len());
    for iy in 0..fine.ny {
        for ix in 0..fine.nx {
            let (cx, tx) = (ix / factor, (ix % factor) as f64 / factor as f64);
            let (cy, ty) = (iy / factor, (iy % factor) as f64 / factor as f64);
            let (cx1, cy1) = ((cx + 1).min(g.nx - 1), (cy + 1).min(g.ny - 1));
            let corners = [s.grid.at((cx, cy)), s.grid.at((cx1, cy)), s.grid.at((cx, cy1)), s.grid.at((cx1, cy1))];
            tau.push(super::bilinear(corners, tx, ty));
        }
    }
    let grid = CostGrid::new(fine, tau)?;
    let scale = |(x, y): (usize, usize)| (x * factor, y * factor);
    Scenario::new(format!("{}-x{factor}", s.name), grid, scale(s.start), scale(s.goal))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{load_scenario, write_scenario};

    #[test]
    fn uniform_three_by_three() {
        let p = GeneratorParams { nx: Some(3), ny: Some(3), tau: Some(1.0), ..Default::default() };
        let s = generate_scenario(Preset::Uniform, &p, 1).unwrap();
        assert_eq!(s.grid.tau, vec![1.0; 9]);
    }

    #[test]
    fn paper_like_geometry() {
        let s = generate_scenario(Preset::PaperLike, &GeneratorParams::default(), 7).unwrap();
        let g = s.geometry();
        assert_eq!((g.nx, g.ny, g.dx, g.dy), (200, 200, 0.005, 0.005));
        assert_eq!(s.start, (0, 100));
        assert_eq!(s.goal, (199, 100));
        assert_eq!(g.node_y(100), 0.5);
    }

    #[test]
    fn turbulence_without_blobs_is_uniform() {
        let p = GeneratorParams { blobs: Some(0), tau: Some(2.0), ..Default::default() };
        let t = generate_scenario(Preset::Turbulence, &p, 3).unwrap();
        let u = generate_scenario(Preset::Uniform, &p, 3).unwrap();
        assert_eq!(t.grid, u.grid);
    }

    #[test]
    fn invalid_params() {
        let p = GeneratorParams { nx: Some(1), ..Default::default() };
        assert!(matches!(generate_scenario(Preset::Uniform, &p, 0), Err(GridError::InvalidGeneratorParams(_))));
        let p = GeneratorParams { tau: Some(-1.0), ..Default::default() };
        assert!(generate_scenario(Preset::Uniform, &p, 0).is_err());
        assert!("spiral".parse::<Preset>().is_err());
        assert_eq!("paper-like".parse::<Preset>().unwrap(), Preset::PaperLike);
    }

    #[test]
    fn generated_scenarios_round_trip_and_stay_positive() {
        for seed in 0..100u64 {
            let preset = Preset::ALL[(seed % 4) as usize];
            let p = GeneratorParams { nx: Some(9 + (seed % 5) as usize), ny: Some(7), ..Default::default() };
            let s = generate_scenario(preset, &p, seed).unwrap();
            assert!(s.grid.tau.iter().all(|t| t.is_finite() && *t > 0.0));
            if preset == Preset::Turbulence {
                assert!(s.grid.tau.iter().all(|t| *t >= 1.0));
            }
            assert_eq!(load_scenario(&write_scenario(&s)).unwrap(), s);
        }
    }

    #[test]
    fn same_seed_same_scenario() {
        let a = generate_scenario(Preset::Turbulence, &GeneratorParams::default(), 11).unwrap();
        let b = generate_scenario(Preset::Turbulence, &GeneratorParams::default(), 11).unwrap();
        let c = generate_scenario(Preset::Turbulence, &GeneratorParams::default(), 12).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.grid, c.grid);
    }

    #[test]
    fn resampling_keeps_coarse_nodes() {
        let s = generate_scenario(Preset::Turbulence, &GeneratorParams { nx: Some(11), ny: Some(9), ..Default::default() }, 5).unwrap();
        let f = resample(&s, 2).unwrap();
        assert_eq!((f.geometry().nx, f.geometry().ny), (21, 17));
        for iy in 0..9 {
            for ix in 0..11 {
                assert_eq!(f.grid.at((2 * ix, 2 * iy)), s.grid.at((ix, iy)));
            }
        }
        assert_eq!(f.goal, (20, 8));
        let mid = f.grid.at((1, 0));
        assert_eq!(mid, 0.5 * (s.grid.at((0, 0)) + s.grid.at((1, 0))));
    }
}

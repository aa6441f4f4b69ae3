//! Path extraction by pseudo-gradient descent on the arrival field, from the
//! goal back to the start, and the trapezoidal cost of the resulting polyline.

use thiserror::Error;

use crate::fmm::ArrivalField;
use crate::grid::{format_number, CostGrid, GridGeometry, Node, Scenario};
use crate::scalar::{Arith, ScalarError, Site};
use crate::site;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BacktraceError {
    #[error("unaccepted-region")]
    UnacceptedRegion,
    #[error("stagnation")]
    Stagnation,
    #[error("backtrace-diverged")]
    Diverged,
    #[error(transparent)]
    Scalar(#[from] ScalarError),
}

pub const SAMPLES_PER_SEGMENT: usize = 65;
pub const PARAM_TOLERANCE: f64 = 1e-12;
const SNAP_TOLERANCE: f64 = 1e-9;
const INV_PHI: f64 = 0.618_033_988_749_894_9;

pub type Point<N> = (N, N);

#[derive(Debug, Clone, PartialEq)]
pub struct Path<N> {
    /// From the goal B to the start A.
    pub points: Vec<Point<N>>,
    /// Interpolated arrival time at each point.
    pub t: Vec<N>,
    pub cost: N,
}

impl<N> Path<N> {
    pub fn point_count(&self) -> usize {
        self.points.len()
    }

    pub fn values<A: Arith<Num = N>>(&self, a: &A) -> Vec<(f64, f64)> {
        self.points.iter().map(|(x, y)| (a.value(x), a.value(y))).collect()
    }
}

/// Straight segment between two grid nodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Segment {
    pub a: Node,
    pub b: Node,
}

/// Cell containing `(x, y)` with fractional offsets.
pub struct Located<N> {
    pub ix: usize,
    pub iy: usize,
    pub tx: N,
    pub ty: N,
}

fn locate_axis<A: Arith>(
    ar: &mut A,
    site: &'static Site,
    v: &A::Num,
    min: f64,
    step: f64,
    n: usize,
) -> Result<(usize, A::Num), ScalarError> {
    let m = ar.constant(min);
    let h = ar.constant(step);
    let d = ar.sub(v, &m);
    let mut q = ar.div(&d, &h);
    let zero = ar.zero();
    if ar.lt(site!("grid.locate.clamp"), &q, &zero) {
        q = zero;
    }
    let i = (ar.truncate(site, &q)? as usize).min(n - 2);
    let fi = ar.constant(i as f64);
    Ok((i, ar.sub(&q, &fi)))
}

pub fn locate<A: Arith>(ar: &mut A, g: &GridGeometry, (x, y): &Point<A::Num>) -> Result<Located<A::Num>, ScalarError> {
    let (ix, tx) = locate_axis(ar, site!("grid.locate.x"), x, g.x_min, g.dx, g.nx)?;
    let (iy, ty) = locate_axis(ar, site!("grid.locate.y"), y, g.y_min, g.dy, g.ny)?;
    Ok(Located { ix, iy, tx, ty })
}

fn bilinear<A: Arith>(ar: &mut A, [v00, v10, v01, v11]: [&A::Num; 4], tx: &A::Num, ty: &A::Num) -> A::Num {
    let d0 = ar.sub(v10, v00);
    let s0 = ar.mul(tx, &d0);
    let bottom = ar.add(v00, &s0);
    let d1 = ar.sub(v11, v01);
    let s1 = ar.mul(tx, &d1);
    let top = ar.add(v01, &s1);
    let dv = ar.sub(&top, &bottom);
    let sv = ar.mul(ty, &dv);
    ar.add(&bottom, &sv)
}

fn accepted_t<N: Clone>(field: &ArrivalField<N>, node: Node) -> Result<&N, BacktraceError> {
    if field.is_accepted(node) {
        Ok(field.at(node))
    } else {
        Err(BacktraceError::UnacceptedRegion)
    }
}

fn interp_located<A: Arith>(ar: &mut A, field: &ArrivalField<A::Num>, l: &Located<A::Num>) -> Result<A::Num, BacktraceError> {
    let (ix, iy) = (l.ix, l.iy);
    let corners = [
        accepted_t(field, (ix, iy))?,
        accepted_t(field, (ix + 1, iy))?,
        accepted_t(field, (ix, iy + 1))?,
        accepted_t(field, (ix + 1, iy + 1))?,
    ];
    Ok(bilinear(ar, corners, &l.tx, &l.ty))
}

/// Bilinear interpolation of the arrival field.
pub fn interp_t<A: Arith>(ar: &mut A, field: &ArrivalField<A::Num>, p: &Point<A::Num>) -> Result<A::Num, BacktraceError> {
    let l = locate(ar, &field.geometry, p)?;
    interp_located(ar, field, &l)
}

fn snap<A: Arith>(ar: &mut A, t: &A::Num, i: usize, tol: f64) -> Option<usize> {
    let lo = ar.constant(tol);
    if ar.le(site!("backtrace.snap"), t, &lo) {
        return Some(i);
    }
    let hi = ar.constant(1.0 - tol);
    if ar.le(site!("backtrace.snap"), &hi, t) {
        return Some(i + 1);
    }
    None
}

fn cell_edges((cx, cy): Node) -> [Segment; 4] {
    let s = |a, b| Segment { a, b };
    [
        s((cx, cy), (cx + 1, cy)),
        s((cx + 1, cy), (cx + 1, cy + 1)),
        s((cx + 1, cy + 1), (cx, cy + 1)),
        s((cx, cy + 1), (cx, cy)),
    ]
}

fn same_edge(s: &Segment, a: Node, b: Node) -> bool {
    (s.a == a && s.b == b) || (s.a == b && s.b == a)
}

fn ring(g: &GridGeometry, (jx, jy): Node) -> Vec<Segment> {
    const OFFSETS: [(isize, isize); 8] = [(-1, -1), (0, -1), (1, -1), (1, 0), (1, 1), (0, 1), (-1, 1), (-1, 0)];
    let node = |(ox, oy): (isize, isize)| {
        let x = jx.checked_add_signed(ox)?;
        let y = jy.checked_add_signed(oy)?;
        g.contains_node((x, y)).then_some((x, y))
    };
    (0..8)
        .filter_map(|k| Some(Segment { a: node(OFFSETS[k])?, b: node(OFFSETS[(k + 1) % 8])? }))
        .collect()
}

/// Segments searched for the next descent point from a located position: the
/// 8-node ring at a node, the boundary of the two adjacent cells on an edge,
/// the cell boundary strictly inside a cell.
pub fn candidate_segments<A: Arith>(ar: &mut A, g: &GridGeometry, l: &Located<A::Num>) -> Vec<Segment> {
    let tol = SNAP_TOLERANCE * g.dx.min(g.dy);
    let sx = snap(ar, &l.tx, l.ix, tol / g.dx);
    let sy = snap(ar, &l.ty, l.iy, tol / g.dy);
    match (sx, sy) {
        (Some(jx), Some(jy)) => ring(g, (jx, jy)),
        (Some(jx), None) => {
            let shared = ((jx, l.iy), (jx, l.iy + 1));
            let cells = [jx.checked_sub(1), (jx + 1 < g.nx).then_some(jx)];
            cells
                .into_iter()
                .flatten()
                .flat_map(|cx| cell_edges((cx, l.iy)))
                .filter(|s| !same_edge(s, shared.0, shared.1))
                .collect()
        }
        (None, Some(jy)) => {
            let shared = ((l.ix, jy), (l.ix + 1, jy));
            let cells = [jy.checked_sub(1), (jy + 1 < g.ny).then_some(jy)];
            cells
                .into_iter()
                .flatten()
                .flat_map(|cy| cell_edges((l.ix, cy)))
                .filter(|s| !same_edge(s, shared.0, shared.1))
                .collect()
        }
        (None, None) => cell_edges((l.ix, l.iy)).to_vec(),
    }
}

pub struct Descent<N> {
    pub point: Point<N>,
    pub phi: N,
    pub segment: usize,
    pub param: f64,
}

/// Per-segment data for `φ(s) = (T(s) − T(P)) / ‖Q(s) − P‖`.
struct SegmentEval<N> {
    e_t: N,
    d_t: N,
    e_x: N,
    f_x: N,
    e_y: N,
    f_y: N,
}

impl<N: Clone> SegmentEval<N> {
    fn phi<A: Arith<Num = N>>(&self, ar: &mut A, s: f64) -> N {
        let s = ar.constant(s);
        let st = ar.mul(&s, &self.d_t);
        let num = ar.add(&self.e_t, &st);
        let sx = ar.mul(&s, &self.f_x);
        let qx = ar.add(&self.e_x, &sx);
        let sy = ar.mul(&s, &self.f_y);
        let qy = ar.add(&self.e_y, &sy);
        let qx2 = ar.mul(&qx, &qx);
        let qy2 = ar.mul(&qy, &qy);
        let r2 = ar.add(&qx2, &qy2);
        let r = ar.sqrt(&r2);
        ar.div(&num, &r)
    }
}

fn minimize_segment<A: Arith>(ar: &mut A, ev: &SegmentEval<A::Num>) -> (f64, A::Num) {
    let last = (SAMPLES_PER_SEGMENT - 1) as f64;
    let mut best_k = 0;
    let mut best = ev.phi(ar, 0.0);
    for k in 1..SAMPLES_PER_SEGMENT {
        let v = ev.phi(ar, k as f64 / last);
        if ar.lt(site!("backtrace.sample_min"), &v, &best) {
            best_k = k;
            best = v;
        }
    }
    let mut lo = best_k.saturating_sub(1) as f64 / last;
    let mut hi = (best_k + 1).min(SAMPLES_PER_SEGMENT - 1) as f64 / last;
    let mut c = hi - INV_PHI * (hi - lo);
    let mut d = lo + INV_PHI * (hi - lo);
    let mut fc = ev.phi(ar, c);
    let mut fd = ev.phi(ar, d);
    while hi - lo > PARAM_TOLERANCE {
        if ar.le(site!("backtrace.golden"), &fc, &fd) {
            hi = d;
            d = c;
            fd = fc;
            c = hi - INV_PHI * (hi - lo);
            fc = ev.phi(ar, c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + INV_PHI * (hi - lo);
            fd = ev.phi(ar, d);
        }
    }
    let mid = 0.5 * (lo + hi);
    let fm = ev.phi(ar, mid);
    let best_s = best_k as f64 / last;
    if ar.lt(site!("backtrace.golden_accept"), &fm, &best) {
        (mid, fm)
    } else {
        (best_s, best)
    }
}

/// Point on the candidate segments with the steepest descent rate of the
/// interpolated arrival time, seen from `p` with arrival time `tp`.
pub fn steepest_point<A: Arith>(
    ar: &mut A,
    field: &ArrivalField<A::Num>,
    p: &Point<A::Num>,
    tp: &A::Num,
    segments: &[Segment],
) -> Result<Descent<A::Num>, BacktraceError> {
    let g = &field.geometry;
    let mut best: Option<Descent<A::Num>> = None;
    for (i, seg) in segments.iter().enumerate() {
        let ta = accepted_t(field, seg.a)?.clone();
        let tb = accepted_t(field, seg.b)?;
        let (ax, ay) = g.point(seg.a);
        let (bx, by) = g.point(seg.b);
        let (cax, cay) = (ar.constant(ax), ar.constant(ay));
        let (cbx, cby) = (ar.constant(bx), ar.constant(by));
        let ev = SegmentEval {
            e_t: ar.sub(&ta, tp),
            d_t: ar.sub(tb, &ta),
            e_x: ar.sub(&cax, &p.0),
            f_x: ar.sub(&cbx, &cax),
            e_y: ar.sub(&cay, &p.1),
            f_y: ar.sub(&cby, &cay),
        };
        let (s, phi) = minimize_segment(ar, &ev);
        let better = match &best {
            None => true,
            Some(b) => ar.lt(site!("backtrace.segment_min"), &phi, &b.phi),
        };
        if better {
            let cs = ar.constant(s);
            let mx = ar.mul(&cs, &ev.f_x);
            let my = ar.mul(&cs, &ev.f_y);
            let point = (ar.add(&cax, &mx), ar.add(&cay, &my));
            best = Some(Descent { point, phi, segment: i, param: s });
        }
    }
    let best = best.ok_or(BacktraceError::Stagnation)?;
    let zero = ar.zero();
    if !ar.lt(site!("backtrace.descent"), &best.phi, &zero) {
        return Err(BacktraceError::Stagnation);
    }
    Ok(best)
}

fn node_point<A: Arith>(ar: &mut A, g: &GridGeometry, n: Node) -> Point<A::Num> {
    let (x, y) = g.point(n);
    (ar.constant(x), ar.constant(y))
}

fn distance<A: Arith>(ar: &mut A, p: &Point<A::Num>, q: &Point<A::Num>) -> A::Num {
    let dx = ar.sub(&q.0, &p.0);
    let dy = ar.sub(&q.1, &p.1);
    let dx2 = ar.mul(&dx, &dx);
    let dy2 = ar.mul(&dy, &dy);
    let r2 = ar.add(&dx2, &dy2);
    ar.sqrt(&r2)
}

pub fn step_budget(g: &GridGeometry) -> usize {
    10 * (g.nx + g.ny)
}

/// Descends from B until within `max(dx, dy)` of A, then appends A.
pub fn extract_path<A: Arith>(
    ar: &mut A,
    field: &ArrivalField<A::Num>,
    scenario: &Scenario,
) -> Result<Path<A::Num>, BacktraceError> {
    let g = field.geometry;
    let a = node_point(ar, &g, scenario.start);
    let radius = ar.constant(g.dx.max(g.dy));
    let mut p = node_point(ar, &g, scenario.goal);
    let mut points = Vec::new();
    let mut ts = Vec::new();
    let mut steps = 0;
    let arrived_at_a = loop {
        let l = locate(ar, &g, &p)?;
        let tp = interp_located(ar, field, &l)?;
        if let Some(prev) = ts.last() {
            if !ar.lt(site!("backtrace.decrease"), &tp, prev) {
                return Err(BacktraceError::Stagnation);
            }
        }
        points.push(p.clone());
        ts.push(tp.clone());
        let d = distance(ar, &p, &a);
        if ar.le(site!("backtrace.arrived"), &d, &radius) {
            let zero = ar.zero();
            break !ar.lt(site!("backtrace.arrived"), &zero, &d);
        }
        if steps == step_budget(&g) {
            return Err(BacktraceError::Diverged);
        }
        steps += 1;
        let segments = candidate_segments(ar, &g, &l);
        p = steepest_point(ar, field, &p, &tp, &segments)?.point;
    };
    if arrived_at_a {
        points.pop();
        ts.pop();
    }
    points.push(a);
    ts.push(field.at(scenario.start).clone());
    let cost = path_cost(ar, &points, &scenario.grid)?;
    if let Some(e) = ar.take_fault() {
        return Err(e.into());
    }
    Ok(Path { points, t: ts, cost })
}

fn tau_at<A: Arith>(ar: &mut A, grid: &CostGrid, p: &Point<A::Num>) -> Result<A::Num, ScalarError> {
    let l = locate(ar, &grid.geometry, p)?;
    let (ix, iy) = (l.ix, l.iy);
    let c = [(ix, iy), (ix + 1, iy), (ix, iy + 1), (ix + 1, iy + 1)].map(|n| ar.constant(grid.at(n)));
    Ok(bilinear(ar, [&c[0], &c[1], &c[2], &c[3]], &l.tx, &l.ty))
}

/// Trapezoidal line integral of the bilinear cost along the polyline.
pub fn path_cost<A: Arith>(ar: &mut A, points: &[Point<A::Num>], grid: &CostGrid) -> Result<A::Num, ScalarError> {
    let mut total = ar.zero();
    let Some(first) = points.first() else { return Ok(total) };
    let half = ar.constant(0.5);
    let mut prev_tau = tau_at(ar, grid, first)?;
    for w in points.windows(2) {
        let tau = tau_at(ar, grid, &w[1])?;
        let len = distance(ar, &w[0], &w[1]);
        let sum = ar.add(&prev_tau, &tau);
        let mean = ar.mul(&half, &sum);
        let piece = ar.mul(&mean, &len);
        total = ar.add(&total, &piece);
        prev_tau = tau;
    }
    Ok(total)
}

/// Geometric length of a polyline.
pub fn polyline_length(points: &[(f64, f64)]) -> f64 {
    points.windows(2).map(|w| (w[1].0 - w[0].0).hypot(w[1].1 - w[0].1)).sum()
}

pub fn path_to_csv(points: &[(f64, f64)]) -> String {
    let mut out = String::from("x,y\n");
    for (x, y) in points {
        out.push_str(&format!("{},{}\n", format_number(*x), format_number(*y)));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fmm::{solve, NodeState, SolveOptions, SolveStats};
    use crate::grid::{CostGrid, GridGeometry};
    use crate::scalar::Ieee;

    fn field_from(g: GridGeometry, f: impl Fn(f64, f64) -> f64) -> ArrivalField<f64> {
        let t = (0..g.len()).map(|i| {
            let (x, y) = g.point(g.node(i));
            f(x, y)
        });
        ArrivalField {
            geometry: g,
            t: t.collect(),
            state: vec![NodeState::Accepted; g.len()],
            accepted: Vec::new(),
            stats: SolveStats::default(),
        }
    }

    fn unit(nx: usize, ny: usize) -> GridGeometry {
        GridGeometry::new(nx, ny, 0.0, 0.0, 1.0, 1.0).unwrap()
    }

    fn segments_at(g: &GridGeometry, x: f64, y: f64) -> Vec<Segment> {
        let mut a = Ieee::new();
        let l = locate(&mut a, g, &(x, y)).unwrap();
        candidate_segments(&mut a, g, &l)
    }

    #[test]
    fn interpolation() {
        let g = unit(2, 2);
        let f = field_from(g, |x, y| x + y);
        let mut a = Ieee::new();
        assert_eq!(interp_t(&mut a, &f, &(0.5, 0.5)).unwrap(), 1.0);
        assert_eq!(interp_t(&mut a, &f, &(1.0, 0.0)).unwrap(), 1.0);
        let f = field_from(unit(2, 2), |x, _| 2.0 + 2.0 * x);
        assert_eq!(interp_t(&mut a, &f, &(0.5, 0.0)).unwrap(), 3.0);
        let mut f = field_from(unit(3, 3), |x, _| x);
        f.state[8] = NodeState::Far;
        assert_eq!(interp_t(&mut a, &f, &(1.5, 1.5)), Err(BacktraceError::UnacceptedRegion));
        assert_eq!(interp_t(&mut a, &f, &(0.5, 0.5)).unwrap(), 0.5);
    }

    #[test]
    fn segment_sets() {
        let g = unit(4, 4);
        assert_eq!(segments_at(&g, 1.0, 2.0).len(), 8);
        assert_eq!(segments_at(&g, 1.3, 2.6).len(), 4);
        assert_eq!(segments_at(&g, 1.0, 2.5).len(), 6);
        assert_eq!(segments_at(&g, 1.5, 1.0).len(), 6);
        assert_eq!(segments_at(&g, 0.0, 1.5).len(), 3);
        assert_eq!(segments_at(&g, 1.0, 0.0).len(), 4);
        assert_eq!(segments_at(&g, 0.0, 0.0).len(), 2);
        assert_eq!(segments_at(&g, 3.0, 3.0).len(), 2);
        assert_eq!(segments_at(&g, 1.0 + 1e-12, 2.0 - 1e-12).len(), 8);
    }

    #[test]
    fn no_segment_passes_through_the_point() {
        let g = unit(5, 5);
        for (x, y) in [(2.0, 2.0), (2.0, 2.5), (2.5, 2.0), (2.3, 2.7), (0.0, 2.0), (4.0, 4.0)] {
            for s in segments_at(&g, x, y) {
                let (ax, ay) = g.point(s.a);
                let (bx, by) = g.point(s.b);
                let cross = (bx - ax) * (y - ay) - (by - ay) * (x - ax);
                let along = (x - ax) * (bx - ax) + (y - ay) * (by - ay);
                let len2 = (bx - ax).powi(2) + (by - ay).powi(2);
                let interior = cross.abs() < 1e-12 && along > 1e-12 && along < len2 - 1e-12;
                assert!(!interior, "{s:?} contains ({x}, {y})");
            }
        }
    }

    #[test]
    fn planar_wave_descends_due_west() {
        let h = 0.25;
        let g = GridGeometry::new(5, 5, 0.0, 0.0, h, h).unwrap();
        let f = field_from(g, |x, _| x);
        let mut a = Ieee::new();
        let p = (0.5, 0.5);
        let tp = interp_t(&mut a, &f, &p).unwrap();
        let l = locate(&mut a, &g, &p).unwrap();
        let segs = candidate_segments(&mut a, &g, &l);
        let d = steepest_point(&mut a, &f, &p, &tp, &segs).unwrap();
        assert!((d.point.0 - 0.25).abs() < 1e-9 && (d.point.1 - 0.5).abs() < 1e-9, "{:?}", d.point);
        assert!((d.phi + 1.0).abs() < 1e-12);
    }

    #[test]
    fn radial_field_follows_gradient() {
        let h = 0.1;
        let g = GridGeometry::new(21, 21, -1.0, -1.0, h, h).unwrap();
        let f = field_from(g, |x, y| x.hypot(y));
        let mut a = Ieee::new();
        let p = (0.5, 0.0);
        let tp = interp_t(&mut a, &f, &p).unwrap();
        let l = locate(&mut a, &g, &p).unwrap();
        let segs = candidate_segments(&mut a, &g, &l);
        let d = steepest_point(&mut a, &f, &p, &tp, &segs).unwrap();
        assert!((d.point.0 - 0.4).abs() < 1e-9 && d.point.1.abs() < 1e-6, "{:?}", d.point);
    }

    #[test]
    fn stagnation_at_minimum() {
        let g = unit(3, 3);
        let f = field_from(g, |x, y| (x - 1.0).hypot(y - 1.0));
        let mut a = Ieee::new();
        let p = (1.0, 1.0);
        let l = locate(&mut a, &g, &p).unwrap();
        let segs = candidate_segments(&mut a, &g, &l);
        let r = steepest_point(&mut a, &f, &p, &0.0, &segs);
        assert!(matches!(r, Err(BacktraceError::Stagnation)));
    }

    fn uniform(n: usize, start: Node, goal: Node) -> Scenario {
        let h = 1.0 / (n - 1) as f64;
        let g = GridGeometry::new(n, n, 0.0, 0.0, h, h).unwrap();
        Scenario::new("u", CostGrid::uniform(g, 1.0).unwrap(), start, goal).unwrap()
    }

    fn trace(s: &Scenario) -> (ArrivalField<f64>, Path<f64>) {
        let mut a = Ieee::new();
        let f = solve(&mut a, s, SolveOptions::default()).unwrap();
        let p = extract_path(&mut a, &f, s).unwrap();
        (f, p)
    }

    #[test]
    fn same_row_path_is_straight() {
        let s = uniform(21, (2, 10), (18, 10));
        let (_, p) = trace(&s);
        let h = s.geometry().dy;
        for w in p.points.windows(2) {
            assert!(w[1].0 < w[0].0);
        }
        assert!(p.points.iter().all(|(_, y)| (y - 0.5).abs() <= h));
        assert!(p.t.windows(2).all(|w| w[1] < w[0]));
        assert!((p.cost - 0.8).abs() < 1e-12);
    }

    #[test]
    fn adjacent_goal_is_short() {
        let s = uniform(11, (4, 4), (5, 4));
        let (_, p) = trace(&s);
        assert!(p.point_count() <= 3);
        assert_eq!(*p.points.last().unwrap(), (0.4, 0.4));
    }

    #[test]
    fn corner_to_corner() {
        let s = uniform(101, (0, 0), (100, 100));
        let (f, p) = trace(&s);
        let pts = p.values(&Ieee::new());
        let len = polyline_length(&pts);
        let diag = 2f64.sqrt();
        assert!(len >= diag - 1e-9 && len <= 1.05 * diag, "length {len}");
        let tb = *f.at(s.goal);
        assert!((p.cost - tb).abs() / tb <= 0.05);
    }

    #[test]
    fn cost_examples() {
        let g = GridGeometry::new(3, 3, 0.0, 0.0, 0.5, 0.5).unwrap();
        let grid = CostGrid::uniform(g, 2.0).unwrap();
        let mut a = Ieee::new();
        assert_eq!(path_cost(&mut a, &[(0.0, 0.0), (1.0, 0.0)], &grid).unwrap(), 2.0);
        assert_eq!(path_cost(&mut a, &[(0.3, 0.7)], &grid).unwrap(), 0.0);
        assert_eq!(path_cost(&mut a, &[], &grid).unwrap(), 0.0);
    }

    #[test]
    fn csv_export() {
        assert_eq!(path_to_csv(&[(1.0, 0.5), (0.1, 0.0)]), "x,y\n1,0.5\n0.1,0\n");
    }
}

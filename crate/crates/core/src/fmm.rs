//! Fast marching: first-order upwind solution of `‖∇T‖ = τ`, accepting nodes
//! in increasing arrival order from a lazy-deletion binary heap.
//!
//! All arithmetic and every comparison, including the heap ordering, goes
//! through the [`Arith`] back end.

use thiserror::Error;

use crate::grid::{GridGeometry, Node, Scenario};
use crate::scalar::{Arith, ScalarError};
use crate::site;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FmmError {
    #[error("no-valued-neighbor")]
    NoValuedNeighbor,
    #[error("goal-unreachable")]
    GoalUnreachable,
    #[error(transparent)]
    Scalar(#[from] ScalarError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeState {
    Far,
    NarrowBand,
    Accepted,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SolveStats {
    pub pushes: usize,
    pub pops: usize,
    pub stale: usize,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SolveOptions {
    /// Stop once the goal is accepted and every node within
    /// `2·τ_max·(dx + dy)` of its arrival time is accepted too, which covers
    /// the cells the backtrace visits.
    pub early_exit: bool,
}

#[derive(Debug, Clone)]
pub struct ArrivalField<N> {
    pub geometry: GridGeometry,
    pub t: Vec<N>,
    pub state: Vec<NodeState>,
    /// Node indices in acceptance order.
    pub accepted: Vec<usize>,
    pub stats: SolveStats,
}

impl<N: Clone> ArrivalField<N> {
    pub fn at(&self, node: Node) -> &N {
        &self.t[self.geometry.index(node)]
    }

    pub fn state_at(&self, node: Node) -> NodeState {
        self.state[self.geometry.index(node)]
    }

    pub fn is_accepted(&self, node: Node) -> bool {
        self.state_at(node) == NodeState::Accepted
    }

    /// Representative binary64 values, row-major.
    pub fn values<A: Arith<Num = N>>(&self, a: &A) -> Vec<f64> {
        self.t.iter().map(|v| a.value(v)).collect()
    }
}

struct Entry<N> {
    t: N,
    index: usize,
    stamp: u32,
}

/// Binary min-heap ordered by `(T, iy, ix)` with comparisons delegated to
/// the scalar back end.
struct NarrowBand<N> {
    heap: Vec<Entry<N>>,
    stamps: Vec<u32>,
}

impl<N: Clone> NarrowBand<N> {
    fn new(len: usize) -> Self {
        Self { heap: Vec::new(), stamps: vec![0; len] }
    }

    fn before<A: Arith<Num = N>>(a: &mut A, x: &Entry<N>, y: &Entry<N>) -> bool {
        if a.lt(site!("fmm.heap.order"), &x.t, &y.t) {
            return true;
        }
        if a.lt(site!("fmm.heap.order"), &y.t, &x.t) {
            return false;
        }
        // row-major index order is (iy, ix) order
        x.index < y.index
    }

    fn push<A: Arith<Num = N>>(&mut self, a: &mut A, index: usize, t: N) {
        self.stamps[index] += 1;
        self.heap.push(Entry { t, index, stamp: self.stamps[index] });
        let mut i = self.heap.len() - 1;
        while i > 0 {
            let p = (i - 1) / 2;
            if !Self::before(a, &self.heap[i], &self.heap[p]) {
                break;
            }
            self.heap.swap(i, p);
            i = p;
        }
    }

    fn pop<A: Arith<Num = N>>(&mut self, a: &mut A) -> Option<Entry<N>> {
        if self.heap.is_empty() {
            return None;
        }
        let last = self.heap.len() - 1;
        self.heap.swap(0, last);
        let top = self.heap.pop();
        let n = self.heap.len();
        let mut i = 0;
        loop {
            let (l, r) = (2 * i + 1, 2 * i + 2);
            let mut m = i;
            if l < n && Self::before(a, &self.heap[l], &self.heap[m]) {
                m = l;
            }
            if r < n && Self::before(a, &self.heap[r], &self.heap[m]) {
                m = r;
            }
            if m == i {
                break;
            }
            self.heap.swap(i, m);
            i = m;
        }
        top
    }

    fn is_current(&self, e: &Entry<N>) -> bool {
        self.stamps[e.index] == e.stamp
    }

    fn peek(&self) -> Option<&Entry<N>> {
        self.heap.first()
    }
}

/// Grid constants shared by every update.
pub struct Stencil<N> {
    pub dx: N,
    pub dy: N,
    /// `1/dx² + 1/dy²`.
    pub a: N,
    pub inv_dx2: N,
    pub inv_dy2: N,
}

impl<N: Clone> Stencil<N> {
    pub fn new<A: Arith<Num = N>>(ar: &mut A, dx: f64, dy: f64) -> Self {
        let dx = ar.constant(dx);
        let dy = ar.constant(dy);
        let one = ar.constant(1.0);
        let dx2 = ar.mul(&dx, &dx);
        let dy2 = ar.mul(&dy, &dy);
        let inv_dx2 = ar.div(&one, &dx2);
        let inv_dy2 = ar.div(&one, &dy2);
        let a = ar.add(&inv_dx2, &inv_dy2);
        Self { dx, dy, a, inv_dx2, inv_dy2 }
    }
}

/// Candidate arrival time from one horizontal and one vertical upwind value
/// (`None` or `+∞` for a missing side).
pub fn quadrant_update<A: Arith>(
    ar: &mut A,
    s: &Stencil<A::Num>,
    th: Option<&A::Num>,
    tv: Option<&A::Num>,
    tau: &A::Num,
) -> Result<A::Num, FmmError> {
    let th = th.filter(|v| !ar.is_infinite(v));
    let tv = tv.filter(|v| !ar.is_infinite(v));
    let one_sided = |ar: &mut A, t: &A::Num, h: &A::Num| {
        let step = ar.mul(tau, h);
        ar.add(t, &step)
    };
    let (th, tv) = match (th, tv) {
        (None, None) => return Err(FmmError::NoValuedNeighbor),
        (Some(t), None) => return Ok(one_sided(ar, t, &s.dx)),
        (None, Some(t)) => return Ok(one_sided(ar, t, &s.dy)),
        (Some(h), Some(v)) => (h, v),
    };
    // a T² + b T + c = 0 with b = −2(th/dx² + tv/dy²), c = th²/dx² + tv²/dy² − τ²
    let wh = ar.mul(th, &s.inv_dx2);
    let wv = ar.mul(tv, &s.inv_dy2);
    let half_b = ar.add(&wh, &wv);
    let ch = ar.mul(&wh, th);
    let cv = ar.mul(&wv, tv);
    let c0 = ar.add(&ch, &cv);
    let tau2 = ar.mul(tau, tau);
    let c = ar.sub(&c0, &tau2);
    // quarter discriminant (b/2)² − a c
    let hb2 = ar.mul(&half_b, &half_b);
    let ac = ar.mul(&s.a, &c);
    let disc = ar.sub(&hb2, &ac);
    let zero = ar.zero();
    if ar.le(site!("fmm.quadrant.discriminant"), &zero, &disc) {
        let root = ar.sqrt(&disc);
        let num = ar.add(&half_b, &root);
        let t = ar.div(&num, &s.a);
        let upper = if ar.lt(site!("fmm.quadrant.upwind_max"), th, tv) { tv } else { th };
        if ar.le(site!("fmm.quadrant.upwind"), upper, &t) {
            return Ok(t);
        }
    }
    let from_h = one_sided(ar, th, &s.dx);
    let from_v = one_sided(ar, tv, &s.dy);
    Ok(if ar.le(site!("fmm.quadrant.one_sided"), &from_h, &from_v) { from_h } else { from_v })
}

pub struct Solver<'s, A: Arith> {
    scenario: &'s Scenario,
    stencil: Stencil<A::Num>,
    tau: Vec<A::Num>,
    field: ArrivalField<A::Num>,
    band: NarrowBand<A::Num>,
}

impl<'s, A: Arith> Solver<'s, A> {
    /// `T(A) = 0` in the narrow band, every other node far at `+∞`.
    pub fn init(ar: &mut A, scenario: &'s Scenario) -> Self {
        let g = *scenario.geometry();
        let stencil = Stencil::new(ar, g.dx, g.dy);
        let tau = scenario.grid.tau.iter().map(|&t| ar.constant(t)).collect();
        let inf = ar.infinity();
        let mut field = ArrivalField {
            geometry: g,
            t: vec![inf; g.len()],
            state: vec![NodeState::Far; g.len()],
            accepted: Vec::new(),
            stats: SolveStats::default(),
        };
        let mut band = NarrowBand::new(g.len());
        let start = g.index(scenario.start);
        field.t[start] = ar.zero();
        field.state[start] = NodeState::NarrowBand;
        band.push(ar, start, field.t[start].clone());
        field.stats.pushes += 1;
        Self { scenario, stencil, tau, field, band }
    }

    pub fn field(&self) -> &ArrivalField<A::Num> {
        &self.field
    }

    /// Recomputes the tentative value of a non-accepted node from its
    /// accepted neighbours. Returns whether the value improved.
    pub fn update_node(&mut self, ar: &mut A, node: Node) -> Result<bool, FmmError> {
        let g = self.field.geometry;
        let idx = g.index(node);
        if self.field.state[idx] == NodeState::Accepted {
            return Ok(false);
        }
        let (ix, iy) = node;
        let accepted = |n: Option<Node>| {
            n.filter(|&n| g.contains_node(n) && self.field.is_accepted(n)).map(|n| g.index(n))
        };
        let west = accepted(ix.checked_sub(1).map(|x| (x, iy)));
        let east = accepted(Some((ix + 1, iy)));
        let south = accepted(iy.checked_sub(1).map(|y| (ix, y)));
        let north = accepted(Some((ix, iy + 1)));
        let mut best: Option<A::Num> = None;
        for (h, v) in [(east, north), (east, south), (west, south), (west, north)] {
            if h.is_none() && v.is_none() {
                continue;
            }
            let th = h.map(|i| &self.field.t[i]);
            let tv = v.map(|i| &self.field.t[i]);
            let cand = match quadrant_update(ar, &self.stencil, th, tv, &self.tau[idx]) {
                Ok(c) => c,
                Err(FmmError::NoValuedNeighbor) => continue,
                Err(e) => return Err(e),
            };
            best = match best {
                Some(b) if !ar.lt(site!("fmm.update.min"), &cand, &b) => Some(b),
                _ => Some(cand),
            };
        }
        let Some(best) = best else { return Ok(false) };
        let improves = self.field.state[idx] == NodeState::Far
            || ar.lt(site!("fmm.update.improve"), &best, &self.field.t[idx]);
        if !improves {
            return Ok(false);
        }
        self.field.t[idx] = best.clone();
        self.field.state[idx] = NodeState::NarrowBand;
        self.band.push(ar, idx, best);
        self.field.stats.pushes += 1;
        Ok(true)
    }

    /// Accepts the next node, or returns `None` when the band is empty.
    pub fn step(&mut self, ar: &mut A) -> Result<Option<Node>, FmmError> {
        loop {
            let Some(e) = self.band.pop(ar) else { return Ok(None) };
            self.field.stats.pops += 1;
            if !self.band.is_current(&e) || self.field.state[e.index] == NodeState::Accepted {
                self.field.stats.stale += 1;
                continue;
            }
            let g = self.field.geometry;
            self.field.state[e.index] = NodeState::Accepted;
            self.field.accepted.push(e.index);
            let node = g.node(e.index);
            let neighbors: Vec<Node> = g.neighbors(node).collect();
            for nb in neighbors {
                self.update_node(ar, nb)?;
            }
            return Ok(Some(node));
        }
    }

    pub fn run(mut self, ar: &mut A, opts: SolveOptions) -> Result<ArrivalField<A::Num>, FmmError> {
        let goal = self.scenario.goal;
        let mut stop_above: Option<A::Num> = None;
        loop {
            if let (Some(limit), Some(top)) = (&stop_above, self.band.peek()) {
                if ar.lt(site!("fmm.early_exit"), limit, &top.t) {
                    break;
                }
            }
            let Some(node) = self.step(ar)? else { break };
            if opts.early_exit && node == goal {
                let g = self.field.geometry;
                let tau_max = self.scenario.grid.tau.iter().copied().fold(0.0, f64::max);
                let band = ar.constant(2.0 * tau_max * (g.dx + g.dy));
                stop_above = Some(ar.add(self.field.at(goal), &band));
            }
        }
        if let Some(e) = ar.take_fault() {
            return Err(e.into());
        }
        if opts.early_exit && !self.field.is_accepted(goal) {
            return Err(FmmError::GoalUnreachable);
        }
        Ok(self.field)
    }
}

pub fn solve<A: Arith>(ar: &mut A, scenario: &Scenario, opts: SolveOptions) -> Result<ArrivalField<A::Num>, FmmError> {
    Solver::init(ar, scenario).run(ar, opts)
}

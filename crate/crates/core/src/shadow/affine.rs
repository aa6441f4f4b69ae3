//! Affine forms `α₀ + Σ αᵢ·εᵢ`, `εᵢ ∈ [−1, 1]`, with [`ExtFloat`]
//! coefficients.
//!
//! Every coefficient is computed with round-to-nearest at the configured
//! width; the rounding residues of one operation are summed (rounded up) into
//! a single fresh noise symbol, so the represented set always contains the
//! exact result. An operation returns `None` when the result is unbounded
//! (division by a range containing zero, negative square-root domain,
//! coefficients beyond [`EXP_LIMIT`](super::EXP_LIMIT)).

use super::extfloat::{ExtFloat, Rounding};

pub type SymbolId = u64;

pub const DEFAULT_MAX_SYMBOLS: usize = 30;

/// Symbol pool and precision settings for one analysis run.
#[derive(Debug, Clone)]
pub struct AffineCtx {
    pub prec: u32,
    pub budget: usize,
    next_symbol: SymbolId,
}

impl AffineCtx {
    pub fn new(prec: u32, budget: usize) -> Self {
        assert!(budget >= 1, "symbol budget must be positive");
        Self { prec, budget, next_symbol: 1 }
    }

    pub fn fresh(&mut self) -> SymbolId {
        let id = self.next_symbol;
        self.next_symbol += 1;
        id
    }

    pub fn symbols_issued(&self) -> u64 {
        self.next_symbol - 1
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AffineForm {
    pub center: ExtFloat,
    /// Sorted by symbol id, no zero coefficients.
    pub terms: Vec<(SymbolId, ExtFloat)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UnaryOp {
    Inverse,
    Sqrt,
}

/// Accumulated rounding residue of one operation, rounded upward.
struct Residue {
    prec: u32,
    sum: ExtFloat,
}

impl Residue {
    fn new(prec: u32) -> Self {
        Self { prec, sum: ExtFloat::zero() }
    }

    fn note(&mut self, (v, inexact): (ExtFloat, bool)) -> ExtFloat {
        if inexact {
            self.sum = self.sum.add(&v.half_ulp(self.prec), self.prec, Rounding::Up);
        }
        v
    }

    fn extra(&mut self, bound: &ExtFloat) {
        self.sum = self.sum.add(bound, self.prec, Rounding::Up);
    }
}

impl AffineForm {
    pub fn constant(v: ExtFloat) -> Self {
        Self { center: v, terms: Vec::new() }
    }

    pub fn from_f64(v: f64) -> Self {
        Self::constant(ExtFloat::from_f64(v))
    }

    /// `v` widened by `radius` on a fresh symbol.
    pub fn with_radius(ctx: &mut AffineCtx, v: ExtFloat, radius: ExtFloat) -> Self {
        let mut f = Self::constant(v);
        if !radius.is_zero() {
            f.terms.push((ctx.fresh(), radius.abs()));
        }
        f
    }

    pub fn is_constant(&self) -> bool {
        self.terms.is_empty()
    }

    /// `Σ|αᵢ|`, rounded up.
    pub fn radius(&self, prec: u32) -> ExtFloat {
        self.terms.iter().fold(ExtFloat::zero(), |acc, (_, c)| add_abs(&acc, c, prec))
    }

    /// Outward-rounded `[α₀ − Σ|αᵢ|, α₀ + Σ|αᵢ|]`.
    pub fn concretize(&self, prec: u32) -> (ExtFloat, ExtFloat) {
        let r = self.radius(prec);
        (self.center.sub(&r, prec, Rounding::Down), self.center.add(&r, prec, Rounding::Up))
    }

    /// Outward-rounded binary64 enclosure of the concretization.
    pub fn interval_f64(&self, prec: u32) -> (f64, f64) {
        let (lo, hi) = self.concretize(prec);
        (lo.to_f64(Rounding::Down), hi.to_f64(Rounding::Up))
    }

    fn in_range(&self) -> bool {
        self.center.in_range() && self.terms.iter().all(|(_, c)| c.in_range())
    }

    pub fn neg(&self) -> Self {
        Self {
            center: self.center.neg(),
            terms: self.terms.iter().map(|(i, c)| (*i, c.neg())).collect(),
        }
    }
}

fn finish(
    ctx: &mut AffineCtx,
    center: ExtFloat,
    mut terms: Vec<(SymbolId, ExtFloat)>,
    residue: Residue,
) -> Option<AffineForm> {
    if !residue.sum.is_zero() {
        terms.push((ctx.fresh(), residue.sum));
    }
    let f = condense(ctx, AffineForm { center, terms });
    f.in_range().then_some(f)
}

/// `a + s·b` with `s = ±1`.
fn combine(ctx: &mut AffineCtx, a: &AffineForm, b: &AffineForm, negate_b: bool) -> Option<AffineForm> {
    let p = ctx.prec;
    let mut res = Residue::new(p);
    let sb = |c: &ExtFloat| if negate_b { c.neg() } else { c.clone() };
    let center = res.note(a.center.add_r(&sb(&b.center), p, Rounding::Nearest));
    let mut terms = Vec::with_capacity(a.terms.len() + b.terms.len() + 1);
    let (mut i, mut j) = (0, 0);
    while i < a.terms.len() || j < b.terms.len() {
        let ka = a.terms.get(i).map(|t| t.0).unwrap_or(u64::MAX);
        let kb = b.terms.get(j).map(|t| t.0).unwrap_or(u64::MAX);
        if ka < kb {
            terms.push(a.terms[i].clone());
            i += 1;
        } else if kb < ka {
            terms.push((kb, sb(&b.terms[j].1)));
            j += 1;
        } else {
            let c = res.note(a.terms[i].1.add_r(&sb(&b.terms[j].1), p, Rounding::Nearest));
            if !c.is_zero() {
                terms.push((ka, c));
            }
            i += 1;
            j += 1;
        }
    }
    finish(ctx, center, terms, res)
}

pub fn add(ctx: &mut AffineCtx, a: &AffineForm, b: &AffineForm) -> Option<AffineForm> {
    combine(ctx, a, b, false)
}

pub fn sub(ctx: &mut AffineCtx, a: &AffineForm, b: &AffineForm) -> Option<AffineForm> {
    combine(ctx, a, b, true)
}

pub fn mul(ctx: &mut AffineCtx, a: &AffineForm, b: &AffineForm) -> Option<AffineForm> {
    let p = ctx.prec;
    let mut res = Residue::new(p);
    let center = res.note(a.center.mul_r(&b.center, p, Rounding::Nearest));
    let mut terms = Vec::with_capacity(a.terms.len() + b.terms.len() + 1);
    let (mut i, mut j) = (0, 0);
    while i < a.terms.len() || j < b.terms.len() {
        let ka = a.terms.get(i).map(|t| t.0).unwrap_or(u64::MAX);
        let kb = b.terms.get(j).map(|t| t.0).unwrap_or(u64::MAX);
        let (k, c) = if ka < kb {
            i += 1;
            (ka, res.note(a.terms[i - 1].1.mul_r(&b.center, p, Rounding::Nearest)))
        } else if kb < ka {
            j += 1;
            (kb, res.note(b.terms[j - 1].1.mul_r(&a.center, p, Rounding::Nearest)))
        } else {
            let x = res.note(a.terms[i].1.mul_r(&b.center, p, Rounding::Nearest));
            let y = res.note(b.terms[j].1.mul_r(&a.center, p, Rounding::Nearest));
            i += 1;
            j += 1;
            (ka, res.note(x.add_r(&y, p, Rounding::Nearest)))
        };
        if !c.is_zero() {
            terms.push((k, c));
        }
    }
    res.extra(&a.radius(p).mul(&b.radius(p), p, Rounding::Up));
    finish(ctx, center, terms, res)
}

/// `k·a + mu ± delta`.
fn affine_image(
    ctx: &mut AffineCtx,
    a: &AffineForm,
    k: &ExtFloat,
    mu: &ExtFloat,
    delta: &ExtFloat,
) -> Option<AffineForm> {
    let p = ctx.prec;
    let mut res = Residue::new(p);
    let scaled = res.note(a.center.mul_r(k, p, Rounding::Nearest));
    let center = res.note(scaled.add_r(mu, p, Rounding::Nearest));
    let mut terms = Vec::with_capacity(a.terms.len() + 1);
    for (i, c) in &a.terms {
        let v = res.note(c.mul_r(k, p, Rounding::Nearest));
        if !v.is_zero() {
            terms.push((*i, v));
        }
    }
    res.extra(delta);
    finish(ctx, center, terms, res)
}

/// Exactly computed constant, or its nearest value widened by half an ulp.
fn constant_result(ctx: &mut AffineCtx, (v, inexact): (ExtFloat, bool)) -> AffineForm {
    if inexact {
        let r = v.half_ulp(ctx.prec);
        AffineForm::with_radius(ctx, v, r)
    } else {
        AffineForm::constant(v)
    }
}

/// `1/a` by the min-range linearization; `None` if `0 ∈ a`.
pub fn inverse(ctx: &mut AffineCtx, a: &AffineForm) -> Option<AffineForm> {
    let p = ctx.prec;
    if a.is_constant() {
        if a.center.is_zero() {
            return None;
        }
        return Some(constant_result(ctx, ExtFloat::one().div_r(&a.center, p, Rounding::Nearest)));
    }
    let (lo, hi) = a.concretize(p);
    let zero = ExtFloat::zero();
    if lo <= zero && zero <= hi {
        return None;
    }
    if hi.is_negative() {
        return inverse(ctx, &a.neg()).map(|f| f.neg());
    }
    // 0 < lo ≤ x ≤ hi; 1/x = αx + g(x), α = −1/hi², g convex with minimum 2√|α|
    let one = ExtFloat::one();
    let hi2 = hi.mul(&hi, p, Rounding::Nearest);
    let abs_alpha = one.div(&hi2, p, Rounding::Nearest);
    let g_up = |x: &ExtFloat| {
        one.div(x, p, Rounding::Up).add(&abs_alpha.mul(x, p, Rounding::Up), p, Rounding::Up)
    };
    let d_max = std::cmp::max(g_up(&lo), g_up(&hi));
    let d_min = abs_alpha.sqrt(p, Rounding::Down).mul_pow2(1);
    let (mu, delta) = midpoint_radius(&d_min, &d_max, p);
    affine_image(ctx, a, &abs_alpha.neg(), &mu, &delta)
}

/// `√a` by the min-range linearization; `None` if `a` reaches below zero.
pub fn sqrt(ctx: &mut AffineCtx, a: &AffineForm) -> Option<AffineForm> {
    let p = ctx.prec;
    if a.is_constant() {
        if a.center.is_negative() {
            return None;
        }
        return Some(constant_result(ctx, a.center.sqrt_r(p, Rounding::Nearest)));
    }
    let (lo, hi) = a.concretize(p);
    if lo.is_negative() {
        return None;
    }
    // √x = αx + g(x), α = 1/(2√hi), g concave: g ≤ 1/(4α), minimum at an endpoint
    let alpha = ExtFloat::one().div(&hi.sqrt(p, Rounding::Nearest).mul_pow2(1), p, Rounding::Nearest);
    let g_down = |x: &ExtFloat| {
        x.sqrt(p, Rounding::Down).sub(&alpha.mul(x, p, Rounding::Up), p, Rounding::Down)
    };
    let d_min = std::cmp::min(g_down(&lo), g_down(&hi));
    let d_max = ExtFloat::one().div(&alpha.mul_pow2(2), p, Rounding::Up);
    let (mu, delta) = midpoint_radius(&d_min, &d_max, p);
    affine_image(ctx, a, &alpha, &mu, &delta)
}

/// `a / b`; constants are divided directly, otherwise `a · (1/b)`.
pub fn div(ctx: &mut AffineCtx, a: &AffineForm, b: &AffineForm) -> Option<AffineForm> {
    if a.is_constant() && b.is_constant() {
        if b.center.is_zero() {
            return None;
        }
        return Some(constant_result(ctx, a.center.div_r(&b.center, ctx.prec, Rounding::Nearest)));
    }
    let inv = inverse(ctx, b)?;
    mul(ctx, a, &inv)
}

/// Outward-rounded enclosure of `a − b` that consumes no symbols.
pub fn difference_bounds(a: &AffineForm, b: &AffineForm, prec: u32) -> (ExtFloat, ExtFloat) {
    let mut res = Residue::new(prec);
    let center = res.note(a.center.sub_r(&b.center, prec, Rounding::Nearest));
    let mut radius = ExtFloat::zero();
    let (mut i, mut j) = (0, 0);
    while i < a.terms.len() || j < b.terms.len() {
        let ka = a.terms.get(i).map(|t| t.0).unwrap_or(u64::MAX);
        let kb = b.terms.get(j).map(|t| t.0).unwrap_or(u64::MAX);
        let c = if ka < kb {
            i += 1;
            a.terms[i - 1].1.clone()
        } else if kb < ka {
            j += 1;
            b.terms[j - 1].1.clone()
        } else {
            i += 1;
            j += 1;
            res.note(a.terms[i - 1].1.sub_r(&b.terms[j - 1].1, prec, Rounding::Nearest))
        };
        radius = add_abs(&radius, &c, prec);
    }
    let radius = radius.add(&res.sum, prec, Rounding::Up);
    (center.sub(&radius, prec, Rounding::Down), center.add(&radius, prec, Rounding::Up))
}

pub fn unary(ctx: &mut AffineCtx, op: UnaryOp, a: &AffineForm) -> Option<AffineForm> {
    match op {
        UnaryOp::Inverse => inverse(ctx, a),
        UnaryOp::Sqrt => sqrt(ctx, a),
    }
}

/// `mu ≈ (lo + hi)/2` and `delta` with `[lo, hi] ⊆ [mu − delta, mu + delta]`.
fn midpoint_radius(lo: &ExtFloat, hi: &ExtFloat, p: u32) -> (ExtFloat, ExtFloat) {
    let mu = lo.add(hi, p, Rounding::Nearest).mul_pow2(-1);
    let up = hi.sub(&mu, p, Rounding::Up);
    let down = mu.sub(lo, p, Rounding::Up);
    (mu, std::cmp::max(up, down))
}

/// `acc + |c|` rounded up, for non-negative `acc`.
fn add_abs(acc: &ExtFloat, c: &ExtFloat, prec: u32) -> ExtFloat {
    if c.is_negative() {
        acc.sub(c, prec, Rounding::Up)
    } else {
        acc.add(c, prec, Rounding::Up)
    }
}

/// Merges the smallest terms into one fresh symbol until the form fits the
/// budget.
pub fn condense(ctx: &mut AffineCtx, mut a: AffineForm) -> AffineForm {
    if a.terms.len() <= ctx.budget {
        return a;
    }
    let k = a.terms.len() - ctx.budget + 1;
    let mut order: Vec<usize> = (0..a.terms.len()).collect();
    order.select_nth_unstable_by(k - 1, |&x, &y| {
        let (ix, cx) = &a.terms[x];
        let (iy, cy) = &a.terms[y];
        cx.cmp_abs(cy).then(ix.cmp(iy))
    });
    let mut drop = vec![false; a.terms.len()];
    for &idx in &order[..k] {
        drop[idx] = true;
    }
    let mut sum = ExtFloat::zero();
    for ((_, c), _) in a.terms.iter().zip(&drop).filter(|(_, d)| **d) {
        sum = add_abs(&sum, c, ctx.prec);
    }
    let mut kept: Vec<_> = a
        .terms
        .drain(..)
        .zip(drop)
        .filter_map(|(t, d)| (!d).then_some(t))
        .collect();
    kept.push((ctx.fresh(), sum));
    AffineForm { center: a.center, terms: kept }
}

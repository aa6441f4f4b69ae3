//! The shadow back end: binary64 execution alongside an affine ideal, with
//! unstable comparisons and conversions reported per site and resolved by
//! a flow controller.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use super::affine::{self, AffineCtx, AffineForm, DEFAULT_MAX_SYMBOLS};
use super::condint::{conditional_truncation, CondInt, Conversion, GuardId, DEFAULT_MAX_GUARDS};
use super::extfloat::ExtFloat;
use super::value::{Ideal, ShadowScalar};
use crate::eft;
use crate::scalar::{Arith, Relation, ScalarError, Site};

pub const DEFAULT_MANTISSA_BITS: u32 = 319;
pub const DEFAULT_MAX_PATHS: usize = 4;
pub const MIN_MANTISSA_BITS: u32 = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Policy {
    /// The ideal execution is forced onto the float branch.
    Sync,
    /// Each feasible branch is explored as a separate flow.
    Split,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ShadowConfig {
    pub mantissa_bits: u32,
    pub max_symbols: usize,
    pub max_guards: usize,
    pub max_paths: usize,
    pub default_policy: Policy,
    /// Site ids that override the default policy with [`Policy::Sync`].
    pub sync_sites: BTreeSet<String>,
    /// Maintain the per-operation rounding-error ledger.
    pub track_ledger: bool,
}

impl Default for ShadowConfig {
    fn default() -> Self {
        Self {
            mantissa_bits: DEFAULT_MANTISSA_BITS,
            max_symbols: DEFAULT_MAX_SYMBOLS,
            max_guards: DEFAULT_MAX_GUARDS,
            max_paths: DEFAULT_MAX_PATHS,
            default_policy: Policy::Split,
            sync_sites: BTreeSet::new(),
            track_ledger: true,
        }
    }
}

impl ShadowConfig {
    pub fn policy(&self, site: &str) -> Policy {
        if self.sync_sites.contains(site) {
            Policy::Sync
        } else {
            self.default_policy
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SiteKind {
    Branch,
    Conversion,
}

/// Unstable events observed at one site during one flow.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SiteTally {
    pub id: &'static str,
    pub location: String,
    pub kind: SiteKind,
    pub policy: Policy,
    pub hits: u64,
    /// First conditional integer with alternatives seen at a conversion site.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub condint: Option<CondInt>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(untagged)]
pub enum Outcome {
    Branch(bool),
    Integer(u64),
}

/// A point where the flow left the float semantics.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Decision {
    /// Ordinal of the branch point within the flow.
    pub event: usize,
    pub site: &'static str,
    pub float_branch: Outcome,
    pub ideal_branch: Outcome,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BranchPoint {
    pub site: &'static str,
    pub options: usize,
    pub choice: usize,
}

/// Replays a prefix of choices and defaults to the float option (0) after
/// it, recording every branch point met.
#[derive(Debug, Clone, Default)]
pub struct FlowController {
    script: Vec<usize>,
    points: Vec<BranchPoint>,
}

impl FlowController {
    pub fn new(script: Vec<usize>) -> Self {
        Self { script, points: Vec::new() }
    }

    pub fn decide(&mut self, site: &'static str, options: usize) -> usize {
        let k = self.points.len();
        let choice = self.script.get(k).copied().filter(|&c| c < options).unwrap_or(0);
        self.points.push(BranchPoint { site, options, choice });
        choice
    }

    pub fn points(&self) -> &[BranchPoint] {
        &self.points
    }

    pub fn script(&self) -> &[usize] {
        &self.script
    }
}

pub struct ShadowArith {
    cfg: ShadowConfig,
    ctx: AffineCtx,
    flow: FlowController,
    tallies: BTreeMap<&'static str, SiteTally>,
    domain_events: BTreeMap<&'static str, u64>,
    decisions: Vec<Decision>,
    unstable_events: u64,
    next_guard: GuardId,
    fault: Option<ScalarError>,
}

/// Decides `rel(a, b)` for every pair of points of the two ideals, or
/// `None` when the outcome depends on the point.
pub fn ideal_relation(rel: Relation, a: &Ideal, b: &Ideal, prec: u32) -> Option<bool> {
    match (a, b) {
        (Ideal::Top, _) | (_, Ideal::Top) => None,
        (Ideal::PosInf, Ideal::PosInf) => Some(rel != Relation::Lt),
        (Ideal::Form(_), Ideal::PosInf) => Some(rel != Relation::Eq),
        (Ideal::PosInf, Ideal::Form(_)) => Some(false),
        (Ideal::Form(x), Ideal::Form(y)) => {
            let (lo, hi) = affine::difference_bounds(x, y, prec);
            let zero = ExtFloat::zero();
            match rel {
                Relation::Lt if hi < zero => Some(true),
                Relation::Lt if lo >= zero => Some(false),
                Relation::Le if hi <= zero => Some(true),
                Relation::Le if lo > zero => Some(false),
                Relation::Eq if lo.is_zero() && hi.is_zero() => Some(true),
                Relation::Eq if lo > zero || hi < zero => Some(false),
                _ => None,
            }
        }
    }
}

impl ShadowArith {
    pub fn new(cfg: ShadowConfig, flow: FlowController) -> Self {
        let ctx = AffineCtx::new(cfg.mantissa_bits, cfg.max_symbols);
        Self {
            cfg,
            ctx,
            flow,
            tallies: BTreeMap::new(),
            domain_events: BTreeMap::new(),
            decisions: Vec::new(),
            unstable_events: 0,
            next_guard: 0,
            fault: None,
        }
    }

    pub fn config(&self) -> &ShadowConfig {
        &self.cfg
    }

    pub fn prec(&self) -> u32 {
        self.cfg.mantissa_bits
    }

    pub fn flow(&self) -> &FlowController {
        &self.flow
    }

    pub fn tallies(&self) -> &BTreeMap<&'static str, SiteTally> {
        &self.tallies
    }

    pub fn domain_events(&self) -> &BTreeMap<&'static str, u64> {
        &self.domain_events
    }

    pub fn decisions(&self) -> &[Decision] {
        &self.decisions
    }

    pub fn unstable_events(&self) -> u64 {
        self.unstable_events
    }

    /// A value whose ideal is `v` widened by `radius`, for seeding tests and
    /// uncertain inputs.
    pub fn uncertain(&mut self, v: f64, radius: f64) -> ShadowScalar {
        let f = AffineForm::with_radius(&mut self.ctx, ExtFloat::from_f64(v), ExtFloat::from_f64(radius));
        ShadowScalar { float: v, ideal: Ideal::Form(f), ledger: Ideal::zero() }
    }

    fn tally(&mut self, site: &'static Site, kind: SiteKind, condint: Option<&CondInt>) -> Policy {
        self.unstable_events += 1;
        let policy = self.cfg.policy(site.id);
        let t = self.tallies.entry(site.id).or_insert_with(|| SiteTally {
            id: site.id,
            location: site.location(),
            kind,
            policy,
            hits: 0,
            condint: None,
        });
        t.hits += 1;
        if t.condint.is_none() {
            t.condint = condint.cloned();
        }
        policy
    }

    fn domain_event(&mut self, name: &'static str) {
        *self.domain_events.entry(name).or_insert(0) += 1;
    }

    fn fail(&mut self, e: ScalarError) -> ShadowScalar {
        if self.fault.is_none() {
            self.fault = Some(e);
        }
        ShadowScalar { float: f64::NAN, ideal: Ideal::Top, ledger: Ideal::Top }
    }

    fn lift2(
        &mut self,
        a: &Ideal,
        b: &Ideal,
        op: fn(&mut AffineCtx, &AffineForm, &AffineForm) -> Option<AffineForm>,
    ) -> Ideal {
        match (a, b) {
            (Ideal::Form(x), Ideal::Form(y)) => op(&mut self.ctx, x, y).map_or(Ideal::Top, Ideal::Form),
            _ => Ideal::Top,
        }
    }

    fn sum_ledger(&mut self, parts: &[&Ideal]) -> Ideal {
        let mut acc = Ideal::zero();
        for p in parts {
            acc = self.lift2(&acc, p, affine::add);
        }
        acc
    }

    /// Exactly known rounding error `z − exact`.
    fn exact_error(v: f64) -> Ideal {
        Ideal::constant(v)
    }

    /// Rounding error bounded by half an ulp of `z` (zero when exact).
    fn half_ulp_error(&mut self, z: f64, exact: bool) -> Ideal {
        if exact || !z.is_finite() {
            return Ideal::zero();
        }
        let r = ExtFloat::from_f64(eft::ulp(z)).mul_pow2(-1);
        Ideal::Form(AffineForm::with_radius(&mut self.ctx, ExtFloat::zero(), r))
    }

    fn scale(&mut self, a: &Ideal, k: f64) -> Ideal {
        self.lift2(a, &Ideal::constant(k), affine::mul)
    }
}

impl Arith for ShadowArith {
    type Num = ShadowScalar;

    fn constant(&mut self, v: f64) -> ShadowScalar {
        ShadowScalar::constant(v)
    }

    fn infinity(&mut self) -> ShadowScalar {
        ShadowScalar { float: f64::INFINITY, ideal: Ideal::PosInf, ledger: Ideal::zero() }
    }

    fn add(&mut self, a: &ShadowScalar, b: &ShadowScalar) -> ShadowScalar {
        let z = a.float + b.float;
        if z.is_nan() {
            return self.fail(ScalarError::InvalidOperand);
        }
        let ideal = match (&a.ideal, &b.ideal) {
            (Ideal::Top, _) | (_, Ideal::Top) => Ideal::Top,
            (Ideal::PosInf, _) | (_, Ideal::PosInf) => Ideal::PosInf,
            (x, y) => self.lift2(x, y, affine::add),
        };
        let ledger = if !self.cfg.track_ledger || !z.is_finite() {
            Ideal::zero()
        } else {
            let rho = match eft::two_sum(a.float, b.float) {
                Ok(s) => Self::exact_error(-s.e),
                Err(_) => Ideal::Top,
            };
            self.sum_ledger(&[&a.ledger, &b.ledger, &rho])
        };
        ShadowScalar { float: z, ideal, ledger }
    }

    fn sub(&mut self, a: &ShadowScalar, b: &ShadowScalar) -> ShadowScalar {
        let nb = self.neg(b);
        self.add(a, &nb)
    }

    fn mul(&mut self, a: &ShadowScalar, b: &ShadowScalar) -> ShadowScalar {
        let z = a.float * b.float;
        if z.is_nan() {
            return self.fail(ScalarError::InvalidOperand);
        }
        let ideal = match (&a.ideal, &b.ideal) {
            (Ideal::Form(x), Ideal::Form(y)) => {
                affine::mul(&mut self.ctx, x, y).map_or(Ideal::Top, Ideal::Form)
            }
            _ => Ideal::Top,
        };
        let ledger = if !self.cfg.track_ledger || !z.is_finite() {
            Ideal::zero()
        } else {
            let rho = match eft::two_prod(a.float, b.float) {
                Ok(p) => Self::exact_error(-p.e),
                Err(_) => self.half_ulp_error(z, false),
            };
            // z − (af − ea)(bf − eb) = ρ + af·eb + bf·ea − ea·eb
            let t1 = self.scale(&b.ledger, a.float);
            let t2 = self.scale(&a.ledger, b.float);
            let t3 = self.lift2(&a.ledger, &b.ledger, affine::mul);
            let s = self.sum_ledger(&[&rho, &t1, &t2]);
            self.lift2(&s, &t3, affine::sub)
        };
        ShadowScalar { float: z, ideal, ledger }
    }

    fn div(&mut self, a: &ShadowScalar, b: &ShadowScalar) -> ShadowScalar {
        let z = a.float / b.float;
        if z.is_nan() {
            return self.fail(ScalarError::InvalidOperand);
        }
        let ideal = match (&a.ideal, &b.ideal) {
            (Ideal::Form(x), Ideal::Form(y)) => {
                affine::div(&mut self.ctx, x, y).map_or(Ideal::Top, Ideal::Form)
            }
            _ => Ideal::Top,
        };
        let ledger = if !self.cfg.track_ledger || !z.is_finite() {
            Ideal::zero()
        } else {
            let exact = eft::residual_sign_div(a.float, b.float, z) == 0;
            let rho = self.half_ulp_error(z, exact);
            // af/bf − ai/bi = (bf·ea − af·eb) / (bf·bi)
            let t1 = self.scale(&a.ledger, b.float);
            let t2 = self.scale(&b.ledger, a.float);
            let num = self.lift2(&t1, &t2, affine::sub);
            let den = self.scale(&b.ideal, b.float);
            let q = self.lift2(&num, &den, affine::div);
            self.sum_ledger(&[&q, &rho])
        };
        ShadowScalar { float: z, ideal, ledger }
    }

    fn sqrt(&mut self, a: &ShadowScalar) -> ShadowScalar {
        let z = a.float.sqrt();
        if z.is_nan() {
            return self.fail(ScalarError::InvalidOperand);
        }
        let ideal = match &a.ideal {
            Ideal::Form(x) => match affine::sqrt(&mut self.ctx, x) {
                Some(f) => Ideal::Form(f),
                None => {
                    self.domain_event("possible-negative-sqrt");
                    Ideal::Top
                }
            },
            Ideal::PosInf => Ideal::PosInf,
            Ideal::Top => Ideal::Top,
        };
        let ledger = if !self.cfg.track_ledger || !z.is_finite() {
            Ideal::zero()
        } else {
            let exact = eft::residual_sign_sqrt(a.float, z) == 0;
            let rho = self.half_ulp_error(z, exact);
            // √af − √ai = ea / (√af + √ai)
            let root = match affine::sqrt(&mut self.ctx, &AffineForm::from_f64(a.float)) {
                Some(f) => Ideal::Form(f),
                None => Ideal::Top,
            };
            let den = self.lift2(&root, &ideal, affine::add);
            let q = self.lift2(&a.ledger, &den, affine::div);
            self.sum_ledger(&[&q, &rho])
        };
        ShadowScalar { float: z, ideal, ledger }
    }

    fn neg(&mut self, a: &ShadowScalar) -> ShadowScalar {
        let flip = |i: &Ideal| match i {
            Ideal::Form(f) => Ideal::Form(f.neg()),
            _ => Ideal::Top,
        };
        ShadowScalar { float: -a.float, ideal: flip(&a.ideal), ledger: flip(&a.ledger) }
    }

    fn compare(&mut self, site: &'static Site, rel: Relation, a: &ShadowScalar, b: &ShadowScalar) -> bool {
        let float_branch = rel.eval(a.float, b.float);
        let ideal = ideal_relation(rel, &a.ideal, &b.ideal, self.prec());
        if ideal == Some(float_branch) {
            return float_branch;
        }
        if self.tally(site, SiteKind::Branch, None) == Policy::Sync {
            return float_branch;
        }
        let event = self.flow.points().len();
        if self.flow.decide(site.id, 2) == 0 {
            return float_branch;
        }
        self.decisions.push(Decision {
            event,
            site: site.id,
            float_branch: Outcome::Branch(float_branch),
            ideal_branch: Outcome::Branch(!float_branch),
        });
        !float_branch
    }

    fn truncate(&mut self, site: &'static Site, a: &ShadowScalar) -> Result<u64, ScalarError> {
        if a.float.is_nan() || a.float.is_infinite() {
            return Err(ScalarError::InvalidOperand);
        }
        if a.float < 0.0 {
            return Err(ScalarError::NegativeUnsignedConversion);
        }
        let range = a.ideal.concretize(self.prec());
        let conv = conditional_truncation(
            a.float,
            range.as_ref().map(|(lo, hi)| (lo, hi)),
            &mut self.next_guard,
            self.cfg.max_guards,
        );
        let ci = match conv {
            Conversion::Stable(v) => return Ok(v),
            Conversion::Fallback(v) => {
                self.tally(site, SiteKind::Conversion, None);
                self.domain_event("conversion-sync-fallback");
                return Ok(v);
            }
            Conversion::Split(ci) => ci,
        };
        if self.tally(site, SiteKind::Conversion, Some(&ci)) == Policy::Sync {
            return Ok(ci.base);
        }
        let event = self.flow.points().len();
        let choice = self.flow.decide(site.id, 1 + ci.alternatives.len());
        if choice == 0 {
            return Ok(ci.base);
        }
        let v = ci.alternatives[choice - 1].1;
        self.decisions.push(Decision {
            event,
            site: site.id,
            float_branch: Outcome::Integer(ci.base),
            ideal_branch: Outcome::Integer(v),
        });
        Ok(v)
    }

    fn is_infinite(&self, a: &ShadowScalar) -> bool {
        a.float.is_infinite()
    }

    fn value(&self, a: &ShadowScalar) -> f64 {
        a.float
    }

    fn take_fault(&mut self) -> Option<ScalarError> {
        self.fault.take()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::shadow::ErrorBound;
    use crate::site;

    fn arith(cfg: ShadowConfig) -> ShadowArith {
        ShadowArith::new(cfg, FlowController::default())
    }

    fn narrow(s: &mut ShadowArith, v: f64) -> ShadowScalar {
        s.uncertain(v, 1e-90)
    }

    #[test]
    fn decidable_consistent_compare_has_no_event() {
        let mut s = arith(ShadowConfig::default());
        let (a, b) = (narrow(&mut s, 1.0), narrow(&mut s, 2.0));
        assert!(s.lt(site!("t.lt"), &a, &b));
        assert_eq!(s.unstable_events(), 0);
        let inf = s.infinity();
        assert!(s.lt(site!("t.inf"), &a, &inf));
        assert!(!s.lt(site!("t.inf2"), &inf, &inf));
        assert!(s.le(site!("t.inf3"), &inf, &inf));
        assert_eq!(s.unstable_events(), 0);
    }

    #[test]
    fn near_integer_quotient_compare_is_unstable() {
        let mut s = arith(ShadowConfig::default());
        let y = s.constant(0.5);
        let y_min = s.constant(0.0);
        let dy = s.constant(0.005);
        let d = s.sub(&y, &y_min);
        let q = s.div(&d, &dy);
        assert_eq!(q.float, 100.0);
        let hundred = s.constant(100.0);
        // float says q ≥ 100, ideal says q < 100: explored flow 0 keeps the float branch
        assert!(!s.lt(site!("t.guard"), &q, &hundred));
        assert_eq!(s.unstable_events(), 1);
        let t = s.tallies()["t.guard"].clone();
        assert_eq!((t.kind, t.hits), (SiteKind::Branch, 1));
        assert_eq!(s.flow().points().len(), 1);
    }

    #[test]
    fn near_integer_conversion_yields_conditional_integer() {
        let mut s = arith(ShadowConfig::default());
        let q = {
            let d = s.constant(0.5);
            let dy = s.constant(0.005);
            s.div(&d, &dy)
        };
        assert_eq!(s.truncate(site!("t.conv"), &q).unwrap(), 100);
        let t = &s.tallies()["t.conv"];
        assert_eq!(t.condint, Some(CondInt { base: 100, alternatives: vec![(0, 99)] }));
        let (lo, hi) = q.ideal.concretize(319).unwrap();
        let hundred = ExtFloat::from_f64(100.0);
        assert!(hi < hundred);
        assert!(lo > hundred.sub(&ExtFloat::from_f64(2.1e-15), 319, crate::shadow::Rounding::Down));

        // the second flow takes the ideal value
        let mut s = ShadowArith::new(ShadowConfig::default(), FlowController::new(vec![1]));
        let d = s.constant(0.5);
        let dy = s.constant(0.005);
        let q = s.div(&d, &dy);
        assert_eq!(s.truncate(site!("t.conv"), &q).unwrap(), 99);
        assert_eq!(s.decisions().len(), 1);
        assert_eq!(s.decisions()[0].ideal_branch, Outcome::Integer(99));
    }

    #[test]
    fn top_is_undecidable_and_sync_keeps_float_branch() {
        let mut cfg = ShadowConfig::default();
        cfg.sync_sites.insert("t.top".into());
        let mut s = arith(cfg);
        let a = ShadowScalar { float: 1.0, ideal: Ideal::Top, ledger: Ideal::Top };
        let b = s.constant(2.0);
        assert!(s.lt(site!("t.top"), &a, &b));
        assert_eq!(s.unstable_events(), 1);
        assert!(s.flow().points().is_empty());
        assert_eq!(s.truncate(site!("t.top.conv"), &a).unwrap(), 1);
        assert_eq!(s.domain_events()["conversion-sync-fallback"], 1);
    }

    #[test]
    fn division_by_range_containing_zero_is_top() {
        let mut s = arith(ShadowConfig::default());
        let one = s.constant(1.0);
        let z = s.uncertain(0.0, 1.0);
        let z = ShadowScalar { float: 0.5, ..z };
        let q = s.div(&one, &z);
        assert_eq!(q.ideal, Ideal::Top);
        assert_eq!(q.error_bound(128), ErrorBound::Top);
    }

    #[test]
    fn exact_program_has_zero_error() {
        let cfg = ShadowConfig { default_policy: Policy::Sync, ..ShadowConfig::default() };
        let mut s = arith(cfg);
        let a = s.constant(0.75);
        let b = s.constant(4.0);
        let c = s.mul(&a, &b);
        let d = s.add(&c, &a);
        let e = s.div(&d, &b);
        let f = s.sqrt(&b);
        let g = s.sub(&e, &f);
        assert_eq!(g.float, (0.75 * 4.0 + 0.75) / 4.0 - 2.0);
        assert_eq!(g.error_bound(128), ErrorBound::Finite(0.0));
        assert_eq!(hull(&g.ledger), (0.0, 0.0));
    }

    fn hull(i: &Ideal) -> (f64, f64) {
        i.form().unwrap().interval_f64(128)
    }

    #[test]
    fn ledger_and_ideal_enclose_rounding_error() {
        let mut s = arith(ShadowConfig::default());
        let a = s.constant(0.1);
        let b = s.constant(0.2);
        let c = s.add(&a, &b);
        let d = s.mul(&c, &c);
        let e = s.div(&d, &a);
        let f = s.sqrt(&e);
        for v in [&c, &d, &e, &f] {
            let (lo, hi) = hull(&v.ledger);
            assert!(lo <= hi);
            let bound = v.error_bound(319).finite().unwrap();
            assert!(bound > 0.0 && bound < 1e-14, "{bound}");
            // the two enclosures of float − ideal must overlap
            let (elo, ehi) = match v.error_range(319) {
                crate::shadow::Range::Bounded { lo, hi } => (lo, hi),
                r => panic!("{r:?}"),
            };
            assert!(elo <= hi && lo <= ehi);
        }
    }

    #[test]
    fn flow_controller_replays_script() {
        let mut f = FlowController::new(vec![0, 1, 5]);
        assert_eq!(f.decide("a", 2), 0);
        assert_eq!(f.decide("b", 2), 1);
        assert_eq!(f.decide("c", 2), 0);
        assert_eq!(f.decide("d", 3), 0);
        assert_eq!(f.points().len(), 4);
    }
}

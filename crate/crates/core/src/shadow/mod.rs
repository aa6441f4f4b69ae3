//! Shadow execution: every value is a concrete binary64 result paired with
//! an extended-precision affine form of the ideal (real-number) result.

mod affine;
mod arith;
mod condint;
mod explore;
mod extfloat;
mod value;

pub use affine::{AffineCtx, AffineForm, SymbolId, UnaryOp, DEFAULT_MAX_SYMBOLS};
pub use arith::{
    ideal_relation, BranchPoint, Decision, FlowController, Outcome, Policy, ShadowArith,
    ShadowConfig, SiteKind, SiteTally, DEFAULT_MANTISSA_BITS, DEFAULT_MAX_PATHS, MIN_MANTISSA_BITS,
};
pub use condint::{conditional_truncation, CondInt, Conversion, GuardId, DEFAULT_MAX_GUARDS};
pub use explore::{explore_flows, Exploration, FlowResult, FlowStatus, FlowTrace};
pub use extfloat::{ExtFloat, Rounding, EXP_LIMIT};
pub use value::{hull_distance, ErrorBound, Ideal, Range, ShadowScalar};

pub mod affine_ops {
    pub use super::affine::{
        add, condense, difference_bounds, div, inverse, mul, sqrt, sub, unary,
    };
}

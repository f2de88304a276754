//! Symbolic tail classes for coefficient expressions.
//!
//! Divergence of improper integrals cannot be decided numerically, so the
//! diagnostics extract the asymptotic class of an expression at a boundary
//! exactly, within the lattice
//!
//! ```text
//! f(u) ~ coef * u^p * L^ell * E(r)      as u -> limit,
//! ```
//!
//! where at `u -> +inf` the log factor is `L = log u` and `E(r) = exp(r u)`,
//! while at `u -> 0+` (finite boundaries) `L = -log u` and `E(r) = exp(r/u)`.
//! Genuinely superexponential behaviour is kept as a coarse class with its
//! sign, which still decides integrability. Anything outside the lattice
//! collapses to `Unknown`, and every consumer maps `Unknown` to an
//! inconclusive verdict rather than a guess.

use super::expr::{Cmp, Expr};

/// Leading coefficient: an exact value, or a value of known sign or mere
/// finiteness (as produced by convergent integrals and exponentials).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Coef {
    Val(f64),
    Pos,
    Neg,
    AnyFinite,
}

impl Coef {
    fn positive(&self) -> Option<bool> {
        match self {
            Coef::Val(v) if *v > 0.0 => Some(true),
            Coef::Val(v) if *v < 0.0 => Some(false),
            Coef::Val(_) => None,
            Coef::Pos => Some(true),
            Coef::Neg => Some(false),
            Coef::AnyFinite => None,
        }
    }

    fn is_zero(&self) -> bool {
        matches!(self, Coef::Val(v) if *v == 0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassTail {
    pub coef: Coef,
    pub p: f64,
    pub ell: f64,
    pub r: f64,
    /// Set when lower-order terms were dropped (e.g. a finite-point leaf),
    /// so an exact cancellation of leading coefficients is not trusted.
    pub approx: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Tail {
    Class(ClassTail),
    /// Superexponential growth of known sign.
    GrowsSuper { positive: bool },
    /// Superexponential decay of known sign.
    VanishesSuper { positive: bool },
    Unknown,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Boundary {
    PlusInfinity,
    MinusInfinity,
    Finite { at: f64, from_above: bool },
}

impl Boundary {
    fn near_zero(&self) -> bool {
        matches!(self, Boundary::Finite { .. })
    }
}

fn class(coef: Coef, p: f64, ell: f64, r: f64) -> Tail {
    Tail::Class(ClassTail { coef, p, ell, r, approx: false })
}

fn constant(v: f64) -> Tail {
    class(Coef::Val(v), 0.0, 0.0, 0.0)
}

fn zero() -> Tail {
    constant(0.0)
}

impl ClassTail {
    fn is_zero(&self) -> bool {
        self.coef.is_zero()
    }

    /// Lexicographic dominance key: larger key means larger magnitude at
    /// the limit. Components are normalized through `+ 0.0` so a negative
    /// zero cannot perturb `total_cmp`.
    fn key(&self, near_zero: bool) -> (f64, f64, f64) {
        let p = if near_zero { -self.p } else { self.p };
        (self.r + 0.0, p + 0.0, self.ell + 0.0)
    }

    /// Limit of the class at the boundary: 0, a finite constant, or a
    /// signed infinity (`None` when the sign is unknown).
    fn limit(&self, near_zero: bool) -> Lim {
        if self.is_zero() {
            return Lim::Zero;
        }
        let key = self.key(near_zero);
        let neutral = (0.0, 0.0, 0.0);
        match cmp_key(key, neutral) {
            std::cmp::Ordering::Less => Lim::Zero,
            std::cmp::Ordering::Equal => Lim::FiniteConst(self.coef),
            std::cmp::Ordering::Greater => match self.coef.positive() {
                Some(pos) => Lim::Infinite { positive: pos },
                None => Lim::Indeterminate,
            },
        }
    }
}

enum Lim {
    Zero,
    FiniteConst(Coef),
    Infinite { positive: bool },
    Indeterminate,
}

fn cmp_key(a: (f64, f64, f64), b: (f64, f64, f64)) -> std::cmp::Ordering {
    a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)).then(a.2.total_cmp(&b.2))
}

fn coef_add(a: Coef, b: Coef, any_approx: bool) -> Tail {
    match (a, b) {
        (Coef::Val(x), Coef::Val(y)) => {
            let s = x + y;
            if s == 0.0 {
                // Leading terms cancel; lower order is out of reach unless
                // both sides were exact literals all the way down.
                if any_approx {
                    Tail::Unknown
                } else {
                    zero()
                }
            } else {
                class(Coef::Val(s), 0.0, 0.0, 0.0)
            }
        }
        (Coef::Pos, Coef::Pos) => class(Coef::Pos, 0.0, 0.0, 0.0),
        (Coef::Neg, Coef::Neg) => class(Coef::Neg, 0.0, 0.0, 0.0),
        (Coef::Pos, Coef::Val(v)) | (Coef::Val(v), Coef::Pos) if v >= 0.0 => {
            class(Coef::Pos, 0.0, 0.0, 0.0)
        }
        (Coef::Neg, Coef::Val(v)) | (Coef::Val(v), Coef::Neg) if v <= 0.0 => {
            class(Coef::Neg, 0.0, 0.0, 0.0)
        }
        _ => Tail::Unknown,
    }
}

fn coef_mul(a: Coef, b: Coef) -> Coef {
    match (a, b) {
        (Coef::Val(x), Coef::Val(y)) => Coef::Val(x * y),
        (Coef::Val(v), other) | (other, Coef::Val(v)) => {
            if v == 0.0 {
                Coef::Val(0.0)
            } else if v > 0.0 {
                other
            } else {
                match other {
                    Coef::Pos => Coef::Neg,
                    Coef::Neg => Coef::Pos,
                    Coef::Val(_) => unreachable!(),
                    Coef::AnyFinite => Coef::AnyFinite,
                }
            }
        }
        (Coef::Pos, Coef::Pos) | (Coef::Neg, Coef::Neg) => Coef::Pos,
        (Coef::Pos, Coef::Neg) | (Coef::Neg, Coef::Pos) => Coef::Neg,
        _ => Coef::AnyFinite,
    }
}

fn coef_neg(a: Coef) -> Coef {
    match a {
        Coef::Val(v) => Coef::Val(-v),
        Coef::Pos => Coef::Neg,
        Coef::Neg => Coef::Pos,
        Coef::AnyFinite => Coef::AnyFinite,
    }
}

fn coef_recip(a: Coef) -> Option<Coef> {
    match a {
        Coef::Val(v) if v != 0.0 => Some(Coef::Val(1.0 / v)),
        Coef::Val(_) => None,
        Coef::Pos => Some(Coef::Pos),
        Coef::Neg => Some(Coef::Neg),
        Coef::AnyFinite => None,
    }
}

/// Tail of `e` at `boundary`, normalized to the positive variable
/// `u -> +inf` or `u -> 0+`.
pub fn tail(e: &Expr, boundary: Boundary) -> Tail {
    let near_zero = boundary.near_zero();
    match e {
        Expr::Const(c) => constant(*c),
        Expr::Var => match boundary {
            Boundary::PlusInfinity => class(Coef::Val(1.0), 1.0, 0.0, 0.0),
            Boundary::MinusInfinity => class(Coef::Val(-1.0), 1.0, 0.0, 0.0),
            Boundary::Finite { at, from_above } => {
                let side = if from_above { 1.0 } else { -1.0 };
                if at == 0.0 {
                    class(Coef::Val(side), 1.0, 0.0, 0.0)
                } else {
                    // x tends to the nonzero constant `at`; the vanishing
                    // remainder is dropped, so mark the class approximate.
                    Tail::Class(ClassTail {
                        coef: Coef::Val(at),
                        p: 0.0,
                        ell: 0.0,
                        r: 0.0,
                        approx: true,
                    })
                }
            }
        },
        Expr::Neg(a) => neg(tail(a, boundary)),
        Expr::Add(a, b) => add(tail(a, boundary), tail(b, boundary), near_zero),
        Expr::Sub(a, b) => add(tail(a, boundary), neg(tail(b, boundary)), near_zero),
        Expr::Mul(a, b) => mul(tail(a, boundary), tail(b, boundary)),
        Expr::Div(a, b) => div(tail(a, boundary), tail(b, boundary)),
        Expr::Pow(a, k) => match const_value(k) {
            Some(k) => powk(tail(a, boundary), k),
            None => Tail::Unknown,
        },
        Expr::Sqrt(a) => powk(tail(a, boundary), 0.5),
        Expr::Abs(a) => abs(tail(a, boundary)),
        Expr::Exp(a) => exp_tail(tail(a, boundary), near_zero),
        Expr::Log(a) => log_tail(tail(a, boundary), near_zero),
        Expr::Piecewise(branches, otherwise) => {
            for br in branches {
                if branch_active(br.cmp, br.bound, boundary) {
                    return tail(&br.body, boundary);
                }
            }
            tail(otherwise, boundary)
        }
    }
}

/// Whether a piecewise condition holds in a neighbourhood of the boundary.
fn branch_active(cmp: Cmp, bound: f64, boundary: Boundary) -> bool {
    match boundary {
        Boundary::PlusInfinity => matches!(cmp, Cmp::Gt | Cmp::Ge),
        Boundary::MinusInfinity => matches!(cmp, Cmp::Lt | Cmp::Le),
        Boundary::Finite { at, from_above } => match cmp {
            Cmp::Lt => {
                if from_above {
                    at < bound
                } else {
                    at <= bound
                }
            }
            Cmp::Le => {
                if from_above {
                    at < bound
                } else {
                    at <= bound
                }
            }
            Cmp::Gt => {
                if from_above {
                    at >= bound
                } else {
                    at > bound
                }
            }
            Cmp::Ge => {
                if from_above {
                    at >= bound
                } else {
                    at > bound
                }
            }
        },
    }
}

fn const_value(e: &Expr) -> Option<f64> {
    match e {
        Expr::Const(v) => Some(*v),
        Expr::Neg(a) => const_value(a).map(|v| -v),
        Expr::Add(a, b) => Some(const_value(a)? + const_value(b)?),
        Expr::Sub(a, b) => Some(const_value(a)? - const_value(b)?),
        Expr::Mul(a, b) => Some(const_value(a)? * const_value(b)?),
        Expr::Div(a, b) => Some(const_value(a)? / const_value(b)?),
        _ => None,
    }
}

pub fn neg(t: Tail) -> Tail {
    match t {
        Tail::Class(c) => Tail::Class(ClassTail { coef: coef_neg(c.coef), ..c }),
        Tail::GrowsSuper { positive } => Tail::GrowsSuper { positive: !positive },
        Tail::VanishesSuper { positive } => Tail::VanishesSuper { positive: !positive },
        Tail::Unknown => Tail::Unknown,
    }
}

fn add(a: Tail, b: Tail, near_zero: bool) -> Tail {
    use Tail::*;
    match (a, b) {
        (Unknown, _) | (_, Unknown) => Unknown,
        (Class(x), Class(y)) => {
            if x.is_zero() {
                return Class(y);
            }
            if y.is_zero() {
                return Class(x);
            }
            match cmp_key(x.key(near_zero), y.key(near_zero)) {
                std::cmp::Ordering::Greater => Class(x),
                std::cmp::Ordering::Less => Class(y),
                std::cmp::Ordering::Equal => {
                    let approx = x.approx || y.approx;
                    match coef_add(x.coef, y.coef, approx) {
                        Class(sum) => {
                            if sum.is_zero() {
                                zero()
                            } else {
                                Class(ClassTail {
                                    coef: sum.coef,
                                    p: x.p,
                                    ell: x.ell,
                                    r: x.r,
                                    approx,
                                })
                            }
                        }
                        other => other,
                    }
                }
            }
        }
        (GrowsSuper { positive: p1 }, GrowsSuper { positive: p2 }) => {
            if p1 == p2 {
                GrowsSuper { positive: p1 }
            } else {
                Unknown
            }
        }
        // Superexponential growth dominates every class.
        (GrowsSuper { positive }, Class(_)) | (Class(_), GrowsSuper { positive }) => {
            GrowsSuper { positive }
        }
        // Superexponential decay is dominated by every nonzero class.
        (VanishesSuper { .. }, Class(c)) | (Class(c), VanishesSuper { .. }) => {
            if c.is_zero() {
                VanishesSuper { positive: true }
            } else {
                Class(c)
            }
        }
        (GrowsSuper { positive }, VanishesSuper { .. })
        | (VanishesSuper { .. }, GrowsSuper { positive }) => GrowsSuper { positive },
        (VanishesSuper { .. }, VanishesSuper { .. }) => VanishesSuper { positive: true },
    }
}

fn mul(a: Tail, b: Tail) -> Tail {
    use Tail::*;
    match (a, b) {
        (Unknown, _) | (_, Unknown) => Unknown,
        (Class(x), Class(y)) => {
            if x.is_zero() || y.is_zero() {
                return zero();
            }
            Class(ClassTail {
                coef: coef_mul(x.coef, y.coef),
                p: x.p + y.p,
                ell: x.ell + y.ell,
                r: x.r + y.r,
                approx: x.approx || y.approx,
            })
        }
        (Class(c), GrowsSuper { positive }) | (GrowsSuper { positive }, Class(c)) => {
            if c.is_zero() {
                zero()
            } else {
                match c.coef.positive() {
                    Some(pos) => GrowsSuper { positive: pos == positive },
                    None => Unknown,
                }
            }
        }
        (Class(c), VanishesSuper { positive }) | (VanishesSuper { positive }, Class(c)) => {
            if c.is_zero() {
                zero()
            } else {
                match c.coef.positive() {
                    Some(pos) => VanishesSuper { positive: pos == positive },
                    None => Unknown,
                }
            }
        }
        (GrowsSuper { positive: p1 }, GrowsSuper { positive: p2 }) => {
            GrowsSuper { positive: p1 == p2 }
        }
        (VanishesSuper { positive: p1 }, VanishesSuper { positive: p2 }) => {
            VanishesSuper { positive: p1 == p2 }
        }
        (GrowsSuper { .. }, VanishesSuper { .. }) | (VanishesSuper { .. }, GrowsSuper { .. }) => {
            Unknown
        }
    }
}

fn div(a: Tail, b: Tail) -> Tail {
    use Tail::*;
    match (a, b) {
        (Unknown, _) | (_, Unknown) => Unknown,
        (Class(x), Class(y)) => {
            if y.is_zero() {
                return Unknown;
            }
            if x.is_zero() {
                return zero();
            }
            match coef_recip(y.coef) {
                Some(r) => Class(ClassTail {
                    coef: coef_mul(x.coef, r),
                    p: x.p - y.p,
                    ell: x.ell - y.ell,
                    r: x.r - y.r,
                    approx: x.approx || y.approx,
                }),
                None => Unknown,
            }
        }
        (Class(c), GrowsSuper { positive }) => {
            if c.is_zero() {
                zero()
            } else {
                match c.coef.positive() {
                    Some(pos) => VanishesSuper { positive: pos == positive },
                    None => Unknown,
                }
            }
        }
        (Class(c), VanishesSuper { positive }) => {
            if c.is_zero() {
                zero()
            } else {
                match c.coef.positive() {
                    Some(pos) => GrowsSuper { positive: pos == positive },
                    None => Unknown,
                }
            }
        }
        (GrowsSuper { positive }, Class(c)) => match c.coef.positive() {
            Some(pos) if c.r == 0.0 => GrowsSuper { positive: pos == positive },
            _ => Unknown,
        },
        (VanishesSuper { positive }, Class(c)) => match c.coef.positive() {
            Some(pos) if c.r == 0.0 => VanishesSuper { positive: pos == positive },
            _ => Unknown,
        },
        _ => Unknown,
    }
}

fn powk(t: Tail, k: f64) -> Tail {
    use Tail::*;
    if k == 0.0 {
        return constant(1.0);
    }
    match t {
        Unknown => Unknown,
        Class(c) => {
            if c.is_zero() {
                return if k > 0.0 { zero() } else { Unknown };
            }
            let coef = match c.coef {
                Coef::Val(v) => {
                    if v > 0.0 {
                        Coef::Val(v.powf(k))
                    } else if k.fract() == 0.0 {
                        Coef::Val(v.powi(k as i32))
                    } else {
                        return Unknown;
                    }
                }
                Coef::Pos => Coef::Pos,
                Coef::Neg => {
                    if k.fract() == 0.0 {
                        if (k as i64) % 2 == 0 {
                            Coef::Pos
                        } else {
                            Coef::Neg
                        }
                    } else {
                        return Unknown;
                    }
                }
                Coef::AnyFinite => return Unknown,
            };
            Class(ClassTail { coef, p: c.p * k, ell: c.ell * k, r: c.r * k, approx: c.approx })
        }
        GrowsSuper { positive } => {
            if !positive && k.fract() != 0.0 {
                return Unknown;
            }
            let pos = positive || (k as i64) % 2 == 0;
            if k > 0.0 {
                GrowsSuper { positive: pos }
            } else {
                VanishesSuper { positive: pos }
            }
        }
        VanishesSuper { positive } => {
            if !positive && k.fract() != 0.0 {
                return Unknown;
            }
            let pos = positive || (k as i64) % 2 == 0;
            if k > 0.0 {
                VanishesSuper { positive: pos }
            } else {
                GrowsSuper { positive: pos }
            }
        }
    }
}

fn abs(t: Tail) -> Tail {
    match t {
        Tail::Class(c) => {
            let coef = match c.coef {
                Coef::Val(v) => Coef::Val(v.abs()),
                Coef::Pos | Coef::Neg => Coef::Pos,
                Coef::AnyFinite => Coef::AnyFinite,
            };
            Tail::Class(ClassTail { coef, ..c })
        }
        Tail::GrowsSuper { .. } => Tail::GrowsSuper { positive: true },
        Tail::VanishesSuper { .. } => Tail::VanishesSuper { positive: true },
        Tail::Unknown => Tail::Unknown,
    }
}

/// `exp` of a tail. Exact shapes map inside the lattice (linear arguments
/// to exponential rates, logarithmic arguments to powers), superlinear
/// divergence maps to the superexponential classes, and sublinear
/// divergence is surrendered as unknown.
fn exp_tail(t: Tail, near_zero: bool) -> Tail {
    use Tail::*;
    match t {
        Unknown => Unknown,
        GrowsSuper { positive } => {
            if positive {
                GrowsSuper { positive: true }
            } else {
                VanishesSuper { positive: true }
            }
        }
        VanishesSuper { .. } => constant(1.0),
        Class(c) => match c.limit(near_zero) {
            Lim::Zero => constant(1.0),
            Lim::FiniteConst(Coef::Val(v)) => {
                if c.approx {
                    class(Coef::Pos, 0.0, 0.0, 0.0)
                } else {
                    constant(v.exp())
                }
            }
            Lim::FiniteConst(_) => class(Coef::Pos, 0.0, 0.0, 0.0),
            Lim::Indeterminate => Unknown,
            Lim::Infinite { positive } => {
                let lin = if near_zero {
                    // exp(c / u)
                    c.p == -1.0 && c.ell == 0.0 && c.r == 0.0
                } else {
                    // exp(c u)
                    c.p == 1.0 && c.ell == 0.0 && c.r == 0.0
                };
                let logshape = c.p == 0.0 && c.ell == 1.0 && c.r == 0.0;
                if lin {
                    // exp(c u) at infinity, exp(c / u) near zero: both are
                    // the rate-c class.
                    match c.coef {
                        Coef::Val(v) => class(Coef::Pos, 0.0, 0.0, v),
                        _ => Unknown,
                    }
                } else if logshape {
                    match c.coef {
                        // exp(c log u) = u^c at infinity; exp(c (-log u))
                        // = u^{-c} near zero.
                        Coef::Val(v) => {
                            if near_zero {
                                class(Coef::Pos, -v, 0.0, 0.0)
                            } else {
                                class(Coef::Pos, v, 0.0, 0.0)
                            }
                        }
                        _ => Unknown,
                    }
                } else {
                    let superlinear = if near_zero {
                        cmp_key(c.key(true), (0.0, 1.0, 0.0)) == std::cmp::Ordering::Greater
                    } else {
                        cmp_key(c.key(false), (0.0, 1.0, 0.0)) == std::cmp::Ordering::Greater
                    };
                    if superlinear {
                        if positive {
                            GrowsSuper { positive: true }
                        } else {
                            VanishesSuper { positive: true }
                        }
                    } else {
                        // Sublinear divergence: between the power and
                        // exponential scales; outside the lattice.
                        Unknown
                    }
                }
            }
        },
    }
}

/// `log` of a tail; the argument must stay eventually positive.
fn log_tail(t: Tail, near_zero: bool) -> Tail {
    use Tail::*;
    let c = match t {
        Class(c) => c,
        GrowsSuper { .. } | VanishesSuper { .. } | Unknown => return Unknown,
    };
    if c.coef.positive() != Some(true) {
        return Unknown;
    }
    // log(coef u^p L^ell E(r)) splits into r * (u or 1/u), p * log u,
    // ell * log L, log coef; fold the class-representable parts.
    if c.ell != 0.0 {
        return Unknown;
    }
    let mut parts: Vec<Tail> = Vec::new();
    if c.r != 0.0 {
        parts.push(if near_zero {
            class(Coef::Val(c.r), -1.0, 0.0, 0.0)
        } else {
            class(Coef::Val(c.r), 1.0, 0.0, 0.0)
        });
    }
    if c.p != 0.0 {
        // log u = -L near zero.
        parts.push(if near_zero {
            class(Coef::Val(-c.p), 0.0, 1.0, 0.0)
        } else {
            class(Coef::Val(c.p), 0.0, 1.0, 0.0)
        });
    }
    match c.coef {
        Coef::Val(v) if !c.approx => parts.push(constant(v.ln())),
        _ => parts.push(Tail::Class(ClassTail {
            coef: Coef::AnyFinite,
            p: 0.0,
            ell: 0.0,
            r: 0.0,
            approx: true,
        })),
    }
    let mut acc = zero();
    for part in parts {
        acc = add(acc, part, near_zero);
    }
    acc
}

/// Does `∫ f` taken toward the boundary diverge? `None` when undecidable.
pub fn integral_diverges(t: &Tail, near_zero: bool) -> Option<bool> {
    let c = match t {
        Tail::Class(c) => c,
        Tail::GrowsSuper { .. } => return Some(true),
        Tail::VanishesSuper { .. } => return Some(false),
        Tail::Unknown => return None,
    };
    if c.is_zero() {
        return Some(false);
    }
    // Shape first: an integrable shape converges whatever the coefficient.
    let shape_integrable = if near_zero {
        if c.r != 0.0 {
            c.r < 0.0
        } else if c.p != -1.0 {
            c.p > -1.0
        } else {
            c.ell < -1.0
        }
    } else if c.r != 0.0 {
        c.r < 0.0
    } else if c.p != -1.0 {
        c.p < -1.0
    } else {
        c.ell < -1.0
    };
    if shape_integrable {
        return Some(false);
    }
    // Non-integrable shape: diverges as long as the coefficient is nonzero.
    match c.coef {
        Coef::Val(v) if v != 0.0 => Some(true),
        Coef::Pos | Coef::Neg => Some(true),
        _ => None,
    }
}

/// Tail of the cumulative integral `I(u) = ∫ f` taken from a fixed interior
/// point toward the boundary (`∫_{u0}^{u}` at infinity, `∫_u^{u0}` near
/// zero).
pub fn cumulative_tail(t: &Tail, near_zero: bool) -> Tail {
    match integral_diverges(t, near_zero) {
        Some(false) => {
            // Converges: the cumulative tends to a finite, generally
            // unknown constant.
            Tail::Class(ClassTail {
                coef: Coef::AnyFinite,
                p: 0.0,
                ell: 0.0,
                r: 0.0,
                approx: true,
            })
        }
        None => Tail::Unknown,
        Some(true) => {
            let c = match t {
                Tail::Class(c) => *c,
                Tail::GrowsSuper { positive } => {
                    return Tail::GrowsSuper { positive: *positive }
                }
                _ => return Tail::Unknown,
            };
            let coef_val = match c.coef {
                Coef::Val(v) => Some(v),
                _ => None,
            };
            let lift = |v: Option<f64>, fallback_sign: Option<bool>| match (v, fallback_sign) {
                (Some(x), _) => Some(Coef::Val(x)),
                (None, Some(true)) => Some(Coef::Pos),
                (None, Some(false)) => Some(Coef::Neg),
                _ => None,
            };
            if near_zero {
                if c.r > 0.0 {
                    // ∫_u e^{r/v} v^p dv ~ e^{r/u} u^{p+2} / r
                    let coef = lift(coef_val.map(|v| v / c.r), c.coef.positive());
                    return match coef {
                        Some(coef) => Tail::Class(ClassTail {
                            coef,
                            p: c.p + 2.0,
                            ell: c.ell,
                            r: c.r,
                            approx: true,
                        }),
                        None => Tail::Unknown,
                    };
                }
                if c.p < -1.0 {
                    let coef = lift(coef_val.map(|v| -v / (c.p + 1.0)), c.coef.positive());
                    return match coef {
                        Some(coef) => Tail::Class(ClassTail {
                            coef,
                            p: c.p + 1.0,
                            ell: c.ell,
                            r: 0.0,
                            approx: true,
                        }),
                        None => Tail::Unknown,
                    };
                }
                if c.p == -1.0 && c.ell != -1.0 {
                    let coef = lift(coef_val.map(|v| v / (c.ell + 1.0)), c.coef.positive());
                    return match coef {
                        Some(coef) => Tail::Class(ClassTail {
                            coef,
                            p: 0.0,
                            ell: c.ell + 1.0,
                            r: 0.0,
                            approx: true,
                        }),
                        None => Tail::Unknown,
                    };
                }
                Tail::Unknown
            } else {
                if c.r > 0.0 {
                    let coef = lift(coef_val.map(|v| v / c.r), c.coef.positive());
                    return match coef {
                        Some(coef) => Tail::Class(ClassTail {
                            coef,
                            p: c.p,
                            ell: c.ell,
                            r: c.r,
                            approx: true,
                        }),
                        None => Tail::Unknown,
                    };
                }
                if c.p > -1.0 {
                    let coef = lift(coef_val.map(|v| v / (c.p + 1.0)), c.coef.positive());
                    return match coef {
                        Some(coef) => Tail::Class(ClassTail {
                            coef,
                            p: c.p + 1.0,
                            ell: c.ell,
                            r: 0.0,
                            approx: true,
                        }),
                        None => Tail::Unknown,
                    };
                }
                if c.p == -1.0 && c.ell != -1.0 {
                    let coef = lift(coef_val.map(|v| v / (c.ell + 1.0)), c.coef.positive());
                    return match coef {
                        Some(coef) => Tail::Class(ClassTail {
                            coef,
                            p: 0.0,
                            ell: c.ell + 1.0,
                            r: 0.0,
                            approx: true,
                        }),
                        None => Tail::Unknown,
                    };
                }
                Tail::Unknown
            }
        }
    }
}

/// Exponential of a tail, exposed for the scale-density pipeline.
pub fn exponential(t: Tail, near_zero: bool) -> Tail {
    exp_tail(t, near_zero)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(src: &str, b: Boundary) -> Tail {
        tail(&Expr::parse(src).unwrap(), b)
    }

    const INF: Boundary = Boundary::PlusInfinity;
    const NEG_INF: Boundary = Boundary::MinusInfinity;
    const ZERO_PLUS: Boundary = Boundary::Finite { at: 0.0, from_above: true };

    #[test]
    fn polynomial_tails() {
        assert_eq!(t("x", INF), Tail::Class(ClassTail {
            coef: Coef::Val(1.0), p: 1.0, ell: 0.0, r: 0.0, approx: false
        }));
        assert_eq!(t("x^2 + x", INF), Tail::Class(ClassTail {
            coef: Coef::Val(1.0), p: 2.0, ell: 0.0, r: 0.0, approx: false
        }));
        assert_eq!(t("x", NEG_INF), Tail::Class(ClassTail {
            coef: Coef::Val(-1.0), p: 1.0, ell: 0.0, r: 0.0, approx: false
        }));
        assert_eq!(t("abs(x)", NEG_INF), Tail::Class(ClassTail {
            coef: Coef::Val(1.0), p: 1.0, ell: 0.0, r: 0.0, approx: false
        }));
    }

    #[test]
    fn exponential_tails() {
        match t("exp(-x)", INF) {
            Tail::Class(c) => {
                assert_eq!(c.r, -1.0);
                assert_eq!(c.p, 0.0);
            }
            other => panic!("{other:?}"),
        }
        match t("exp(-x)", NEG_INF) {
            Tail::Class(c) => assert_eq!(c.r, 1.0),
            other => panic!("{other:?}"),
        }
        // exp(x^2) is superexponential.
        assert_eq!(t("exp(x^2)", INF), Tail::GrowsSuper { positive: true });
        assert_eq!(t("exp(-x^2)", INF), Tail::VanishesSuper { positive: true });
    }

    #[test]
    fn sqrt_and_ratio_tails() {
        match t("sqrt(1 + x^2)", INF) {
            Tail::Class(c) => {
                assert_eq!(c.p, 1.0);
                assert_eq!(c.r, 0.0);
            }
            other => panic!("{other:?}"),
        }
        // x / (1 + x^2) ~ 1/x.
        match t("x / (1 + x^2)", INF) {
            Tail::Class(c) => assert_eq!(c.p, -1.0),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn log_tails() {
        match t("log(x)", INF) {
            Tail::Class(c) => {
                assert_eq!((c.p, c.ell), (0.0, 1.0));
            }
            other => panic!("{other:?}"),
        }
        match t("log(x)", ZERO_PLUS) {
            Tail::Class(c) => {
                assert_eq!((c.p, c.ell), (0.0, 1.0));
                assert_eq!(c.coef, Coef::Val(-1.0));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn near_zero_tails() {
        match t("x", ZERO_PLUS) {
            Tail::Class(c) => assert_eq!((c.p, c.coef), (1.0, Coef::Val(1.0))),
            other => panic!("{other:?}"),
        }
        match t("1 / x", ZERO_PLUS) {
            Tail::Class(c) => assert_eq!(c.p, -1.0),
            other => panic!("{other:?}"),
        }
        // exp(1/x) near zero is exactly the rate-1 blowup class.
        match t("exp(1/x)", ZERO_PLUS) {
            Tail::Class(c) => {
                assert_eq!(c.r, 1.0);
                assert_eq!(c.p, 0.0);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn cancellation_is_unknown_at_shifted_points() {
        // Exact literal cancellation is resolvable, cancellation against a
        // finite-point leaf is not.
        assert_eq!(t("1 - 1", INF), Tail::Class(ClassTail {
            coef: Coef::Val(0.0), p: 0.0, ell: 0.0, r: 0.0, approx: false
        }));
        let b = Boundary::Finite { at: 2.0, from_above: false };
        assert_eq!(t("x - 2", b), Tail::Unknown);
    }

    #[test]
    fn divergence_decisions_at_infinity() {
        // ∫^inf x dx diverges.
        assert_eq!(integral_diverges(&t("x", INF), false), Some(true));
        // ∫^inf x^{-2} converges.
        assert_eq!(integral_diverges(&t("1 / x^2", INF), false), Some(false));
        // Boundary case 1/x diverges.
        assert_eq!(integral_diverges(&t("1 / x", INF), false), Some(true));
        // ∫^inf e^{-x} converges.
        assert_eq!(integral_diverges(&t("exp(-x)", INF), false), Some(false));
        // ∫^inf x e^{2x} diverges.
        assert_eq!(integral_diverges(&t("x * exp(2 * x)", INF), false), Some(true));
        // ∫^inf 1/(x log^2 x) converges.
        assert_eq!(
            integral_diverges(&t("1 / (x * log(x) * log(x))", INF), false),
            Some(false)
        );
        // ∫^inf 1/(x log x) diverges.
        assert_eq!(integral_diverges(&t("1 / (x * log(x))", INF), false), Some(true));
    }

    #[test]
    fn divergence_decisions_near_zero() {
        assert_eq!(integral_diverges(&t("1 / x", ZERO_PLUS), true), Some(true));
        assert_eq!(integral_diverges(&t("1 / sqrt(x)", ZERO_PLUS), true), Some(false));
        assert_eq!(integral_diverges(&t("x", ZERO_PLUS), true), Some(false));
        assert_eq!(integral_diverges(&t("exp(1/x)", ZERO_PLUS), true), Some(true));
    }

    #[test]
    fn cumulative_of_constant_is_linear() {
        let g = cumulative_tail(&t("2", INF), false);
        match g {
            Tail::Class(c) => {
                assert_eq!(c.p, 1.0);
                assert_eq!(c.coef, Coef::Val(2.0));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn cumulative_of_reciprocal_is_log() {
        let g = cumulative_tail(&t("1 / x", INF), false);
        match g {
            Tail::Class(c) => {
                assert_eq!((c.p, c.ell), (0.0, 1.0));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn exp_of_linear_cumulative_is_exponential() {
        // The scale-density pipeline for constant drift: f = -1, G ~ -u,
        // exp(-G) ~ e^{u}.
        let g = cumulative_tail(&t("-1", INF), false);
        let rho = exponential(neg(g), false);
        match rho {
            Tail::Class(c) => assert_eq!(c.r, 1.0),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn piecewise_selects_boundary_branch() {
        let e = "piecewise(x < 0: exp(x), else: 1/x^2)";
        assert_eq!(integral_diverges(&t(e, INF), false), Some(false));
        match t(e, NEG_INF) {
            Tail::Class(c) => assert_eq!(c.r, -1.0), // exp(x) at -inf ~ e^{-u}
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn pow_with_nonconstant_exponent_is_unknown() {
        assert_eq!(t("x ^ x", INF), Tail::Unknown);
    }
}

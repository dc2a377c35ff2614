//! Forward-mode jets for exact first and second derivatives.
//!
//! A [`Dual`] carries a value together with up to [`MAX_VARS`] first-order
//! derivative lanes. Nesting two levels (`Dual<Dual<f64>>`) propagates exact
//! Hessians through arbitrary arithmetic: seed variable `i` in lane `i` of
//! both layers and read `d[i].d[j]` for the mixed second derivative. Deeper
//! nestings give third and fourth derivatives, which the curvature pipeline
//! uses for spray derivatives along geodesics.
//!
//! All derivatives here are exact up to floating point rounding; no finite
//! differences are used anywhere in this module. Branching primitives (abs,
//! min, max) are intentionally absent: piecewise metrics dispatch on the
//! underlying value before entering jet arithmetic, so every evaluation runs
//! on a single smooth branch.

use crate::error::{Error, Result};
use std::cell::Cell;
use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Neg, Sub};

/// Maximum number of simultaneous derivative lanes (chart + fiber variables
/// in dimension 3).
pub const MAX_VARS: usize = 6;

thread_local! {
    static FAULT: Cell<Option<&'static str>> = const { Cell::new(None) };
}

/// Records the first domain violation seen on this thread since the last
/// [`guard`] entry. Faulting operations return NaN so later arithmetic cannot
/// silently launder the value.
fn raise(primitive: &'static str) {
    FAULT.with(|f| {
        if f.get().is_none() {
            f.set(Some(primitive));
        }
    });
}

/// Runs `f`, converting any domain fault raised during evaluation into an
/// error naming the offending primitive. Guards are meant for public entry
/// points and do not nest; faults are also visible as NaN in the result.
pub fn guard<T>(f: impl FnOnce() -> T) -> Result<T> {
    FAULT.with(|c| c.set(None));
    let value = f();
    match FAULT.with(|c| c.take()) {
        Some(primitive) => Err(Error::JetDomain { primitive }),
        None => Ok(value),
    }
}

/// Scalar type that jet evaluation is generic over: `f64` or any nesting of
/// [`Dual`] around it.
pub trait Real:
    Copy
    + Debug
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + Send
    + Sync
    + 'static
{
    fn from_f64(c: f64) -> Self;
    /// Underlying base value with every derivative lane stripped.
    fn val(&self) -> f64;
    fn sqrt(self) -> Self;
    fn exp(self) -> Self;
    fn ln(self) -> Self;
    fn sin(self) -> Self;
    fn cos(self) -> Self;
    fn sinh(self) -> Self;
    fn cosh(self) -> Self;
    fn powi(self, n: i32) -> Self;
    fn powf(self, p: f64) -> Self;
}

/// Shorthand for lifting an `f64` constant into any jet scalar.
#[inline]
pub fn c<S: Real>(v: f64) -> S {
    S::from_f64(v)
}

impl Real for f64 {
    #[inline]
    fn from_f64(c: f64) -> Self {
        c
    }
    #[inline]
    fn val(&self) -> f64 {
        *self
    }
    #[inline]
    fn sqrt(self) -> Self {
        if self < 0.0 {
            raise("sqrt");
            return f64::NAN;
        }
        f64::sqrt(self)
    }
    #[inline]
    fn exp(self) -> Self {
        f64::exp(self)
    }
    #[inline]
    fn ln(self) -> Self {
        if self <= 0.0 {
            raise("ln");
            return f64::NAN;
        }
        f64::ln(self)
    }
    #[inline]
    fn sin(self) -> Self {
        f64::sin(self)
    }
    #[inline]
    fn cos(self) -> Self {
        f64::cos(self)
    }
    #[inline]
    fn sinh(self) -> Self {
        f64::sinh(self)
    }
    #[inline]
    fn cosh(self) -> Self {
        f64::cosh(self)
    }
    #[inline]
    fn powi(self, n: i32) -> Self {
        f64::powi(self, n)
    }
    #[inline]
    fn powf(self, p: f64) -> Self {
        if self <= 0.0 {
            raise("powf");
            return f64::NAN;
        }
        f64::powf(self, p)
    }
}

/// First-order jet over `T` with [`MAX_VARS`] derivative lanes.
#[derive(Clone, Copy, Debug)]
pub struct Dual<T> {
    pub re: T,
    pub d: [T; MAX_VARS],
}

impl<T: Real> Dual<T> {
    #[inline]
    pub fn constant(v: T) -> Self {
        Dual { re: v, d: [c(0.0); MAX_VARS] }
    }

    /// Variable with unit seed in `lane`.
    #[inline]
    pub fn var(v: T, lane: usize) -> Self {
        let mut d = [c::<T>(0.0); MAX_VARS];
        d[lane] = c(1.0);
        Dual { re: v, d }
    }

    /// Variable with an arbitrary seed in lane 0 (directional derivatives).
    #[inline]
    pub fn seeded(v: T, dv: T) -> Self {
        let mut d = [c::<T>(0.0); MAX_VARS];
        d[0] = dv;
        Dual { re: v, d }
    }

    #[inline]
    fn map_d(self, re: T, factor: T) -> Self {
        let mut d = [c::<T>(0.0); MAX_VARS];
        for i in 0..MAX_VARS {
            d[i] = self.d[i] * factor;
        }
        Dual { re, d }
    }
}

impl<T: Real> Add for Dual<T> {
    type Output = Self;
    #[inline]
    fn add(self, rhs: Self) -> Self {
        let mut d = self.d;
        for i in 0..MAX_VARS {
            d[i] = d[i] + rhs.d[i];
        }
        Dual { re: self.re + rhs.re, d }
    }
}

impl<T: Real> Sub for Dual<T> {
    type Output = Self;
    #[inline]
    fn sub(self, rhs: Self) -> Self {
        let mut d = self.d;
        for i in 0..MAX_VARS {
            d[i] = d[i] - rhs.d[i];
        }
        Dual { re: self.re - rhs.re, d }
    }
}

impl<T: Real> Neg for Dual<T> {
    type Output = Self;
    #[inline]
    fn neg(self) -> Self {
        let mut d = self.d;
        for i in 0..MAX_VARS {
            d[i] = -d[i];
        }
        Dual { re: -self.re, d }
    }
}

impl<T: Real> Mul for Dual<T> {
    type Output = Self;
    #[inline]
    fn mul(self, rhs: Self) -> Self {
        let mut d = [c::<T>(0.0); MAX_VARS];
        for i in 0..MAX_VARS {
            d[i] = self.re * rhs.d[i] + self.d[i] * rhs.re;
        }
        Dual { re: self.re * rhs.re, d }
    }
}

impl<T: Real> Div for Dual<T> {
    type Output = Self;
    #[inline]
    fn div(self, rhs: Self) -> Self {
        if rhs.re.val() == 0.0 {
            raise("div");
        }
        let q = self.re / rhs.re;
        let mut d = [c::<T>(0.0); MAX_VARS];
        for i in 0..MAX_VARS {
            d[i] = (self.d[i] - q * rhs.d[i]) / rhs.re;
        }
        Dual { re: q, d }
    }
}

impl<T: Real> Real for Dual<T> {
    #[inline]
    fn from_f64(v: f64) -> Self {
        Dual::constant(c(v))
    }
    #[inline]
    fn val(&self) -> f64 {
        self.re.val()
    }
    #[inline]
    fn sqrt(self) -> Self {
        // Derivative 1/(2 sqrt) blows up at 0, so 0 is outside the jet domain.
        if self.re.val() <= 0.0 {
            raise("sqrt");
            return Dual::constant(c(f64::NAN));
        }
        let s = self.re.sqrt();
        self.map_d(s, c::<T>(0.5) / s)
    }
    #[inline]
    fn exp(self) -> Self {
        let e = self.re.exp();
        self.map_d(e, e)
    }
    #[inline]
    fn ln(self) -> Self {
        if self.re.val() <= 0.0 {
            raise("ln");
            return Dual::constant(c(f64::NAN));
        }
        self.map_d(self.re.ln(), c::<T>(1.0) / self.re)
    }
    #[inline]
    fn sin(self) -> Self {
        self.map_d(self.re.sin(), self.re.cos())
    }
    #[inline]
    fn cos(self) -> Self {
        self.map_d(self.re.cos(), -self.re.sin())
    }
    #[inline]
    fn sinh(self) -> Self {
        self.map_d(self.re.sinh(), self.re.cosh())
    }
    #[inline]
    fn cosh(self) -> Self {
        self.map_d(self.re.cosh(), self.re.sinh())
    }
    fn powi(self, n: i32) -> Self {
        // Binary exponentiation keeps negative bases exact.
        if n == 0 {
            return Dual::constant(c(1.0));
        }
        if n < 0 {
            return Dual::constant(c::<T>(1.0)) / self.powi(-n);
        }
        let mut acc = Dual::constant(c::<T>(1.0));
        let mut base = self;
        let mut k = n;
        while k > 0 {
            if k & 1 == 1 {
                acc = acc * base;
            }
            base = base * base;
            k >>= 1;
        }
        acc
    }
    #[inline]
    fn powf(self, p: f64) -> Self {
        if self.re.val() <= 0.0 {
            raise("powf");
            return Dual::constant(c(f64::NAN));
        }
        (self.ln() * Dual::constant(c(p))).exp()
    }
}

/// Single-level jet scalar.
pub type D1 = Dual<f64>;
/// Doubly nested jet scalar carrying a full Hessian.
pub type D2 = Dual<Dual<f64>>;

/// Value, gradient and Hessian of a scalar field at a point.
#[derive(Clone, Debug, PartialEq)]
pub struct Jet2 {
    pub value: f64,
    pub grad: Vec<f64>,
    pub hess: Vec<Vec<f64>>,
}

/// Seeds `x` as jet variables, one lane per coordinate in both layers.
pub fn seed2(x: &[f64]) -> Vec<D2> {
    assert!(x.len() <= MAX_VARS, "at most {MAX_VARS} jet variables");
    x.iter()
        .enumerate()
        .map(|(i, &v)| Dual {
            re: Dual::var(v, i),
            d: {
                let mut d = [Dual::constant(0.0); MAX_VARS];
                d[i] = Dual::constant(1.0);
                d
            },
        })
        .collect()
}

/// Evaluates `f` at `x` and returns the exact value, gradient and Hessian.
///
/// `f` must be built from the [`Real`] primitives; any domain violation
/// surfaces as [`Error::JetDomain`] naming the primitive.
pub fn jet2_eval<F>(f: F, x: &[f64]) -> Result<Jet2>
where
    F: FnOnce(&[D2]) -> D2,
{
    let k = x.len();
    let out = guard(|| f(&seed2(x)))?;
    let value = out.re.re;
    let grad: Vec<f64> = (0..k).map(|i| out.re.d[i]).collect();
    let hess: Vec<Vec<f64>> = (0..k)
        .map(|i| (0..k).map(|j| out.d[i].d[j]).collect())
        .collect();
    if !value.is_finite()
        || grad.iter().any(|g| !g.is_finite())
        || hess.iter().flatten().any(|h| !h.is_finite())
    {
        return Err(Error::JetDomain { primitive: "non-finite" });
    }
    Ok(Jet2 { value, grad, hess })
}

/// Requested derivative depth for [`directional_jet`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum JetOrder {
    First,
    Second,
}

/// Directional derivatives of `f` at `x` along `v`.
#[derive(Clone, Copy, Debug)]
pub struct DirectionalJet {
    pub value: f64,
    pub first: f64,
    /// Present only for [`JetOrder::Second`].
    pub second: Option<f64>,
}

/// Evaluates f(x), d/dt f(x + t v) and optionally d2/dt2 f(x + t v) at t = 0.
///
/// The same closure serves both orders; it receives doubly nested scalars and
/// the first-order path simply leaves the inner layer unseeded.
pub fn directional_jet<F>(f: F, x: &[f64], v: &[f64], order: JetOrder) -> Result<DirectionalJet>
where
    F: FnOnce(&[D2]) -> D2,
{
    assert_eq!(x.len(), v.len());
    let seed_inner = order == JetOrder::Second;
    let out = guard(|| {
        let vars: Vec<D2> = x
            .iter()
            .zip(v)
            .map(|(&xi, &vi)| Dual {
                re: if seed_inner { Dual::seeded(xi, vi) } else { Dual::constant(xi) },
                d: {
                    let mut d = [Dual::constant(0.0); MAX_VARS];
                    d[0] = Dual::constant(vi);
                    d
                },
            })
            .collect();
        f(&vars)
    })?;
    let value = out.re.re;
    let first = out.d[0].re;
    let second = match order {
        JetOrder::First => None,
        JetOrder::Second => Some(out.d[0].d[0]),
    };
    if !value.is_finite() || !first.is_finite() || second.is_some_and(|s| !s.is_finite()) {
        return Err(Error::JetDomain { primitive: "non-finite" });
    }
    Ok(DirectionalJet { value, first, second })
}

/// Seeds a slice of base-`S` values as first-order variables, lane `i` for
/// entry `i`. Used by the curvature pipeline to nest jets around jets.
pub(crate) fn dual_vars<S: Real>(vals: &[S]) -> Vec<Dual<S>> {
    vals.iter().enumerate().map(|(i, &v)| Dual::var(v, i)).collect()
}

/// Seeds a slice as second-order variables, lane `i` in both layers.
pub(crate) fn dual2_vars<S: Real>(vals: &[S]) -> Vec<Dual<Dual<S>>> {
    vals.iter()
        .enumerate()
        .map(|(i, &v)| Dual {
            re: Dual::var(v, i),
            d: {
                let mut d = [Dual::constant(c(0.0)); MAX_VARS];
                d[i] = Dual::constant(c(1.0));
                d
            },
        })
        .collect()
}

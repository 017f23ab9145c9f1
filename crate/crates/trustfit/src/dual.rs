//! Forward-mode dual numbers carrying one derivative slot per model parameter.
//!
//! A [`DualScalar`] holds a value plus the partial derivatives of that value
//! with respect to each of the `n` fit parameters. Evaluating a model once
//! over duals seeded with the identity therefore yields one full Jacobian row
//! per data point.
//!
//! Constants are represented with an *empty* slot vector and binary
//! operations treat missing slots as zeros, so promoting literals never
//! allocates. Slots live inline up to 8 parameters (enough for every built-in
//! model) and spill to the heap beyond that.

use core::ops::{Add, Div, Mul, Neg, Sub};

use num_traits::Float;
use smallvec::SmallVec;

type Slots = SmallVec<[f64; 8]>;

/// Scalar abstraction the model evaluator is generic over.
///
/// Implemented by `f64` (plain evaluation) and [`DualScalar`] (evaluation
/// with derivatives). The elementary-function set matches what the built-in
/// models and dual arithmetic support: `+ - * /`, `exp`, `ln`, `sin`, `cos`,
/// `sqrt` and powers.
pub trait Scalar:
    Clone
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + Add<f64, Output = Self>
    + Sub<f64, Output = Self>
    + Mul<f64, Output = Self>
    + Div<f64, Output = Self>
    + Sized
{
    /// Lifts a plain number into the scalar type with zero derivatives.
    fn constant(c: f64) -> Self;
    /// Real part.
    fn value(&self) -> f64;
    fn exp(self) -> Self;
    fn ln(self) -> Self;
    fn sin(self) -> Self;
    fn cos(self) -> Self;
    fn sqrt(self) -> Self;
    fn powi(self, n: i32) -> Self;
    fn powf(self, e: f64) -> Self;
}

impl Scalar for f64 {
    #[inline]
    fn constant(c: f64) -> Self {
        c
    }
    #[inline]
    fn value(&self) -> f64 {
        *self
    }
    #[inline]
    fn exp(self) -> Self {
        Float::exp(self)
    }
    #[inline]
    fn ln(self) -> Self {
        Float::ln(self)
    }
    #[inline]
    fn sin(self) -> Self {
        Float::sin(self)
    }
    #[inline]
    fn cos(self) -> Self {
        Float::cos(self)
    }
    #[inline]
    fn sqrt(self) -> Self {
        Float::sqrt(self)
    }
    #[inline]
    fn powi(self, n: i32) -> Self {
        Float::powi(self, n)
    }
    #[inline]
    fn powf(self, e: f64) -> Self {
        Float::powf(self, e)
    }
}

/// Value plus derivative slots, one per fit parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct DualScalar {
    value: f64,
    derivs: Slots,
}

impl DualScalar {
    /// The `index`-th of `n` independent variables: derivative slots form
    /// the corresponding unit basis vector.
    pub fn variable(value: f64, index: usize, n: usize) -> Self {
        debug_assert!(index < n);
        let mut derivs = Slots::from_elem(0.0, n);
        derivs[index] = 1.0;
        DualScalar { value, derivs }
    }

    /// Derivative with respect to parameter `index`. Missing slots are zero.
    #[inline]
    pub fn deriv(&self, index: usize) -> f64 {
        self.derivs.get(index).copied().unwrap_or(0.0)
    }

    /// Value and every slot finite. Slot count below `n` counts as finite
    /// (structural zeros).
    pub fn is_finite(&self, n: usize) -> bool {
        debug_assert!(self.derivs.len() <= n);
        self.value.is_finite() && self.derivs.iter().all(|d| d.is_finite())
    }

    /// Index of the first non-finite slot, if any.
    pub fn first_bad_slot(&self) -> Option<usize> {
        self.derivs.iter().position(|d| !d.is_finite())
    }

    /// Seeds a full parameter vector: element `j` becomes the `j`-th
    /// independent variable.
    pub fn seed(x: &[f64]) -> alloc::vec::Vec<DualScalar> {
        let n = x.len();
        x.iter()
            .enumerate()
            .map(|(j, &v)| DualScalar::variable(v, j, n))
            .collect()
    }

    /// Chain rule for a unary map: value `f`, slots scaled by `df`.
    #[inline]
    fn lift(self, f: f64, df: f64) -> Self {
        let mut derivs = self.derivs;
        for d in derivs.iter_mut() {
            *d *= df;
        }
        DualScalar { value: f, derivs }
    }
}

/// Combines two slot vectors entry-wise, padding the shorter with zeros.
#[inline]
fn zip_slots(a: &Slots, b: &Slots, f: impl Fn(f64, f64) -> f64) -> Slots {
    let n = a.len().max(b.len());
    let mut out = Slots::with_capacity(n);
    for i in 0..n {
        let x = a.get(i).copied().unwrap_or(0.0);
        let y = b.get(i).copied().unwrap_or(0.0);
        out.push(f(x, y));
    }
    out
}

impl Add for DualScalar {
    type Output = DualScalar;
    fn add(self, rhs: DualScalar) -> DualScalar {
        DualScalar {
            value: self.value + rhs.value,
            derivs: zip_slots(&self.derivs, &rhs.derivs, |a, b| a + b),
        }
    }
}

impl Sub for DualScalar {
    type Output = DualScalar;
    fn sub(self, rhs: DualScalar) -> DualScalar {
        DualScalar {
            value: self.value - rhs.value,
            derivs: zip_slots(&self.derivs, &rhs.derivs, |a, b| a - b),
        }
    }
}

impl Mul for DualScalar {
    type Output = DualScalar;
    // Product rule: the slot combiner legitimately adds inside `mul`.
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn mul(self, rhs: DualScalar) -> DualScalar {
        DualScalar {
            value: self.value * rhs.value,
            derivs: zip_slots(&self.derivs, &rhs.derivs, |da, db| {
                da * rhs.value + self.value * db
            }),
        }
    }
}

impl Div for DualScalar {
    type Output = DualScalar;
    fn div(self, rhs: DualScalar) -> DualScalar {
        let inv = 1.0 / rhs.value;
        let q = self.value * inv;
        DualScalar {
            value: q,
            derivs: zip_slots(&self.derivs, &rhs.derivs, |da, db| (da - q * db) * inv),
        }
    }
}

impl Neg for DualScalar {
    type Output = DualScalar;
    #[inline]
    fn neg(self) -> DualScalar {
        let f = -self.value;
        self.lift(f, -1.0)
    }
}

impl Add<f64> for DualScalar {
    type Output = DualScalar;
    #[inline]
    fn add(mut self, rhs: f64) -> DualScalar {
        self.value += rhs;
        self
    }
}

impl Sub<f64> for DualScalar {
    type Output = DualScalar;
    #[inline]
    fn sub(mut self, rhs: f64) -> DualScalar {
        self.value -= rhs;
        self
    }
}

impl Mul<f64> for DualScalar {
    type Output = DualScalar;
    #[inline]
    fn mul(self, rhs: f64) -> DualScalar {
        let v = self.value * rhs;
        self.lift(v, rhs)
    }
}

impl Div<f64> for DualScalar {
    type Output = DualScalar;
    #[inline]
    fn div(self, rhs: f64) -> DualScalar {
        let inv = 1.0 / rhs;
        let v = self.value * inv;
        self.lift(v, inv)
    }
}

impl Scalar for DualScalar {
    #[inline]
    fn constant(c: f64) -> Self {
        DualScalar {
            value: c,
            derivs: Slots::new(),
        }
    }

    #[inline]
    fn value(&self) -> f64 {
        self.value
    }

    fn exp(self) -> Self {
        let f = Float::exp(self.value);
        self.lift(f, f)
    }

    fn ln(self) -> Self {
        let f = Float::ln(self.value);
        let df = 1.0 / self.value;
        self.lift(f, df)
    }

    fn sin(self) -> Self {
        let f = Float::sin(self.value);
        let df = Float::cos(self.value);
        self.lift(f, df)
    }

    fn cos(self) -> Self {
        let f = Float::cos(self.value);
        let df = -Float::sin(self.value);
        self.lift(f, df)
    }

    fn sqrt(self) -> Self {
        let f = Float::sqrt(self.value);
        self.lift(f, 0.5 / f)
    }

    fn powi(self, n: i32) -> Self {
        let f = Float::powi(self.value, n);
        let df = f64::from(n) * Float::powi(self.value, n - 1);
        self.lift(f, df)
    }

    fn powf(self, e: f64) -> Self {
        let f = Float::powf(self.value, e);
        let df = e * Float::powf(self.value, e - 1.0);
        self.lift(f, df)
    }
}

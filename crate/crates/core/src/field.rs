//! Scalar abstraction shared by the floating-point and exact-rational code paths.
//!
//! Every closed-form solver is written once against [`Field`]. With `f64` the
//! suffix sums use Neumaier compensation; with [`Exact`] all arithmetic is exact,
//! which is what the test oracles and the self-check mode rely on.

use std::fmt::Debug;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{FromPrimitive, Num, Signed, ToPrimitive, Zero};

/// Exact rational scalar.
pub type Exact = BigRational;

/// Running sum that is as accurate as the scalar type allows.
pub trait Accumulator<F>: Default + Clone {
    fn add(&mut self, x: &F);
    fn value(&self) -> F;
}

pub trait Field: Num + Signed + Clone + PartialOrd + Debug + Send + Sync + 'static {
    type Sum: Accumulator<Self>;

    fn from_f64(x: f64) -> Self;
    fn from_ratio(num: i64, den: i64) -> Self;
    fn to_f64(&self) -> f64;
    /// True when `|self| <= tol`. Exact types ignore `tol` and test for zero.
    fn negligible(&self, tol: f64) -> bool;
    /// Whether arithmetic is exact (no rounding slack is ever needed).
    fn is_exact() -> bool;

    fn half() -> Self {
        Self::from_ratio(1, 2)
    }

    fn recip(&self) -> Self {
        Self::one() / self.clone()
    }

    fn complement(&self) -> Self {
        Self::one() - self.clone()
    }

    fn max_of(a: Self, b: Self) -> Self {
        if b > a {
            b
        } else {
            a
        }
    }

    fn min_of(a: Self, b: Self) -> Self {
        if b < a {
            b
        } else {
            a
        }
    }

    fn sum_iter<'a, I: IntoIterator<Item = &'a Self>>(it: I) -> Self {
        let mut acc = Self::Sum::default();
        for x in it {
            acc.add(x);
        }
        acc.value()
    }
}

/// Neumaier's improved Kahan summation.
#[derive(Debug, Clone, Copy, Default)]
pub struct NeumaierSum {
    sum: f64,
    comp: f64,
}

impl NeumaierSum {
    pub fn new() -> Self {
        Self::default()
    }
}

impl Accumulator<f64> for NeumaierSum {
    fn add(&mut self, x: &f64) {
        let x = *x;
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

#[derive(Debug, Clone, Default)]
pub struct ExactSum(Exact);

impl Accumulator<Exact> for ExactSum {
    fn add(&mut self, x: &Exact) {
        self.0 += x;
    }

    fn value(&self) -> Exact {
        self.0.clone()
    }
}

impl Field for f64 {
    type Sum = NeumaierSum;

    fn from_f64(x: f64) -> Self {
        x
    }

    fn from_ratio(num: i64, den: i64) -> Self {
        num as f64 / den as f64
    }

    fn to_f64(&self) -> f64 {
        *self
    }

    fn negligible(&self, tol: f64) -> bool {
        self.abs() <= tol
    }

    fn is_exact() -> bool {
        false
    }
}

impl Field for Exact {
    type Sum = ExactSum;

    fn from_f64(x: f64) -> Self {
        <Exact as FromPrimitive>::from_f64(x).expect("finite value")
    }

    fn from_ratio(num: i64, den: i64) -> Self {
        Exact::new(BigInt::from(num), BigInt::from(den))
    }

    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }

    fn negligible(&self, _tol: f64) -> bool {
        self.is_zero()
    }

    fn is_exact() -> bool {
        true
    }
}

/// Convert a slice between scalar types through `f64`.
pub fn to_f64_vec<F: Field>(xs: &[F]) -> Vec<f64> {
    xs.iter().map(Field::to_f64).collect()
}

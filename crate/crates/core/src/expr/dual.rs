//! Second-order forward-mode differentiation with hyper-dual numbers.
//!
//! A [`Dual2`] carries `a + b·ε₁ + c·ε₂ + d·ε₁ε₂` with `ε₁² = ε₂² = 0`.
//! Seeding `ε₁` on one variable and `ε₂` on another makes `d1`, `d2` the two
//! first partials and `d12` the mixed second partial. Seeding both on the same
//! variable yields the pure second derivative in `d12`. Unlike nested duals
//! there is no subtraction of nearly equal quantities, so the second
//! derivative is exact to rounding.

use std::ops::{Add, Div, Mul, Neg, Sub};

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Dual2 {
    pub value: f64,
    pub d1: f64,
    pub d2: f64,
    pub d12: f64,
}

impl Dual2 {
    pub const fn new(value: f64, d1: f64, d2: f64, d12: f64) -> Self {
        Self { value, d1, d2, d12 }
    }

    pub const fn constant(value: f64) -> Self {
        Self::new(value, 0.0, 0.0, 0.0)
    }

    /// A variable seeded in the directions selected by `along_a` / `along_b`.
    pub const fn variable(value: f64, along_a: bool, along_b: bool) -> Self {
        Self::new(value, if along_a { 1.0 } else { 0.0 }, if along_b { 1.0 } else { 0.0 }, 0.0)
    }

    pub fn has_derivatives(&self) -> bool {
        self.d1 != 0.0 || self.d2 != 0.0 || self.d12 != 0.0
    }

    /// Applies a scalar function given its value and first two derivatives at `self.value`.
    #[inline]
    pub fn chain(self, f: f64, df: f64, ddf: f64) -> Self {
        Self {
            value: f,
            d1: df * self.d1,
            d2: df * self.d2,
            d12: df * self.d12 + ddf * self.d1 * self.d2,
        }
    }

    pub fn sin(self) -> Self {
        let (s, c) = self.value.sin_cos();
        self.chain(s, c, -s)
    }

    pub fn cos(self) -> Self {
        let (s, c) = self.value.sin_cos();
        self.chain(c, -s, -c)
    }

    pub fn tan(self) -> Self {
        let t = self.value.tan();
        let sec2 = 1.0 + t * t;
        self.chain(t, sec2, 2.0 * t * sec2)
    }

    pub fn exp(self) -> Self {
        let e = self.value.exp();
        self.chain(e, e, e)
    }

    /// Natural log; caller guarantees a positive argument.
    pub fn ln(self) -> Self {
        let inv = 1.0 / self.value;
        self.chain(self.value.ln(), inv, -inv * inv)
    }

    /// Square root; caller guarantees a positive argument.
    pub fn sqrt(self) -> Self {
        let s = self.value.sqrt();
        let df = 0.5 / s;
        self.chain(s, df, -0.5 * df / self.value)
    }

    pub fn recip(self) -> Self {
        let inv = 1.0 / self.value;
        self.chain(inv, -inv * inv, 2.0 * inv * inv * inv)
    }

    pub fn powi(self, n: u32) -> Self {
        match n {
            0 => Self::constant(1.0),
            1 => self,
            _ => {
                let x = self.value;
                let xm2 = x.powi(n as i32 - 2);
                let xm1 = xm2 * x;
                let nf = n as f64;
                self.chain(xm1 * x, nf * xm1, nf * (nf - 1.0) * xm2)
            }
        }
    }
}

impl Add for Dual2 {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(self.value + o.value, self.d1 + o.d1, self.d2 + o.d2, self.d12 + o.d12)
    }
}

impl Sub for Dual2 {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self::new(self.value - o.value, self.d1 - o.d1, self.d2 - o.d2, self.d12 - o.d12)
    }
}

impl Mul for Dual2 {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        Self::new(
            self.value * o.value,
            self.d1 * o.value + self.value * o.d1,
            self.d2 * o.value + self.value * o.d2,
            self.d12 * o.value + self.d1 * o.d2 + self.d2 * o.d1 + self.value * o.d12,
        )
    }
}

impl Div for Dual2 {
    type Output = Self;
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn div(self, o: Self) -> Self {
        self * o.recip()
    }
}

impl Neg for Dual2 {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.value, -self.d1, -self.d2, -self.d12)
    }
}

//! Generic scalars for writing problem functions once and evaluating them
//! as plain values, with first derivatives ([`Dual`]) or with first and
//! second derivatives ([`Hyper`]).
//!
//! Both derivative types carry a fixed-capacity gradient so they stay
//! `Copy`; the capacity is picked at run time from the number of local
//! inputs (see [`MAX_LOCAL_INPUTS`]).

use std::fmt::Debug;
use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};

/// Largest number of independent local inputs a derivative evaluation supports.
pub const MAX_LOCAL_INPUTS: usize = 32;

/// Arithmetic needed by problem functions.
///
/// Mixed arithmetic with `f64` is only provided with the scalar on the left,
/// so write `x * 2.0` rather than `2.0 * x`.
pub trait Scalar:
    Copy
    + Debug
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + Add<f64, Output = Self>
    + Sub<f64, Output = Self>
    + Mul<f64, Output = Self>
    + Div<f64, Output = Self>
    + AddAssign
    + SubAssign
    + MulAssign
{
    fn constant(value: f64) -> Self;
    fn value(&self) -> f64;

    fn sin(self) -> Self;
    fn cos(self) -> Self;
    fn exp(self) -> Self;
    fn ln(self) -> Self;
    fn sqrt(self) -> Self;
    fn tanh(self) -> Self;
    fn powi(self, n: i32) -> Self;

    fn zero() -> Self {
        Self::constant(0.0)
    }

    fn square(self) -> Self {
        self * self
    }

    /// `c - self`, handy because `f64 - Scalar` is not available generically.
    fn rsub(self, c: f64) -> Self {
        -self + c
    }
}

impl Scalar for f64 {
    fn constant(value: f64) -> Self {
        value
    }
    fn value(&self) -> f64 {
        *self
    }
    fn sin(self) -> Self {
        f64::sin(self)
    }
    fn cos(self) -> Self {
        f64::cos(self)
    }
    fn exp(self) -> Self {
        f64::exp(self)
    }
    fn ln(self) -> Self {
        f64::ln(self)
    }
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
    fn tanh(self) -> Self {
        f64::tanh(self)
    }
    fn powi(self, n: i32) -> Self {
        f64::powi(self, n)
    }
}

/// Forward-mode dual number with an `N`-entry gradient.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Dual<const N: usize> {
    pub v: f64,
    pub g: [f64; N],
}

impl<const N: usize> Dual<N> {
    pub fn variable(value: f64, index: usize) -> Self {
        let mut g = [0.0; N];
        g[index] = 1.0;
        Self { v: value, g }
    }

    #[inline]
    fn chain(self, f: f64, df: f64) -> Self {
        let mut g = self.g;
        for gi in g.iter_mut() {
            *gi *= df;
        }
        Self { v: f, g }
    }
}

/// Second-order forward-mode number: value, gradient and packed lower
/// triangular Hessian (`T` must equal `N * (N + 1) / 2`).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Hyper<const N: usize, const T: usize> {
    pub v: f64,
    pub g: [f64; N],
    pub h: [f64; T],
}

#[inline]
fn tri(i: usize, j: usize) -> usize {
    // i >= j
    i * (i + 1) / 2 + j
}

impl<const N: usize, const T: usize> Hyper<N, T> {
    const CHECK: () = assert!(T == N * (N + 1) / 2);

    pub fn variable(value: f64, index: usize) -> Self {
        #[allow(clippy::let_unit_value)]
        let _ = Self::CHECK;
        let mut g = [0.0; N];
        g[index] = 1.0;
        Self { v: value, g, h: [0.0; T] }
    }

    /// Hessian entry `(i, j)`.
    pub fn hess(&self, i: usize, j: usize) -> f64 {
        if i >= j {
            self.h[tri(i, j)]
        } else {
            self.h[tri(j, i)]
        }
    }

    #[inline]
    fn chain(self, f: f64, df: f64, d2f: f64) -> Self {
        let mut out = Self { v: f, g: [0.0; N], h: [0.0; T] };
        for i in 0..N {
            out.g[i] = df * self.g[i];
        }
        for i in 0..N {
            let gi = self.g[i];
            let row = i * (i + 1) / 2;
            for j in 0..=i {
                out.h[row + j] = df * self.h[row + j] + d2f * gi * self.g[j];
            }
        }
        out
    }
}

macro_rules! dual_ops {
    ($ty:ty, [$($gen:tt)*]) => {
        impl<$($gen)*> Add for $ty {
            type Output = Self;
            #[inline]
            fn add(mut self, rhs: Self) -> Self {
                self += rhs;
                self
            }
        }
        impl<$($gen)*> Sub for $ty {
            type Output = Self;
            #[inline]
            fn sub(mut self, rhs: Self) -> Self {
                self -= rhs;
                self
            }
        }
        impl<$($gen)*> Add<f64> for $ty {
            type Output = Self;
            #[inline]
            fn add(mut self, rhs: f64) -> Self {
                self.v += rhs;
                self
            }
        }
        impl<$($gen)*> Sub<f64> for $ty {
            type Output = Self;
            #[inline]
            fn sub(mut self, rhs: f64) -> Self {
                self.v -= rhs;
                self
            }
        }
        impl<$($gen)*> Div for $ty {
            type Output = Self;
            #[inline]
            fn div(self, rhs: Self) -> Self {
                self * rhs.recip()
            }
        }
        impl<$($gen)*> Div<f64> for $ty {
            type Output = Self;
            #[inline]
            fn div(self, rhs: f64) -> Self {
                self * (1.0 / rhs)
            }
        }
        impl<$($gen)*> MulAssign for $ty {
            #[inline]
            fn mul_assign(&mut self, rhs: Self) {
                *self = *self * rhs;
            }
        }
        impl<$($gen)*> Neg for $ty {
            type Output = Self;
            #[inline]
            fn neg(self) -> Self {
                self * -1.0
            }
        }
    };
}

dual_ops!(Dual<N>, [const N: usize]);
dual_ops!(Hyper<N, T>, [const N: usize, const T: usize]);

impl<const N: usize> AddAssign for Dual<N> {
    #[inline]
    fn add_assign(&mut self, rhs: Self) {
        self.v += rhs.v;
        for i in 0..N {
            self.g[i] += rhs.g[i];
        }
    }
}

impl<const N: usize> SubAssign for Dual<N> {
    #[inline]
    fn sub_assign(&mut self, rhs: Self) {
        self.v -= rhs.v;
        for i in 0..N {
            self.g[i] -= rhs.g[i];
        }
    }
}

impl<const N: usize> Mul for Dual<N> {
    type Output = Self;
    #[inline]
    fn mul(self, rhs: Self) -> Self {
        let mut g = [0.0; N];
        for i in 0..N {
            g[i] = self.v * rhs.g[i] + rhs.v * self.g[i];
        }
        Self { v: self.v * rhs.v, g }
    }
}

impl<const N: usize> Mul<f64> for Dual<N> {
    type Output = Self;
    #[inline]
    fn mul(mut self, rhs: f64) -> Self {
        self.v *= rhs;
        for gi in self.g.iter_mut() {
            *gi *= rhs;
        }
        self
    }
}

impl<const N: usize> Dual<N> {
    #[inline]
    fn recip(self) -> Self {
        let r = 1.0 / self.v;
        self.chain(r, -r * r)
    }
}

impl<const N: usize, const T: usize> AddAssign for Hyper<N, T> {
    #[inline]
    fn add_assign(&mut self, rhs: Self) {
        self.v += rhs.v;
        for i in 0..N {
            self.g[i] += rhs.g[i];
        }
        for i in 0..T {
            self.h[i] += rhs.h[i];
        }
    }
}

impl<const N: usize, const T: usize> SubAssign for Hyper<N, T> {
    #[inline]
    fn sub_assign(&mut self, rhs: Self) {
        self.v -= rhs.v;
        for i in 0..N {
            self.g[i] -= rhs.g[i];
        }
        for i in 0..T {
            self.h[i] -= rhs.h[i];
        }
    }
}

impl<const N: usize, const T: usize> Mul for Hyper<N, T> {
    type Output = Self;
    #[inline]
    fn mul(self, rhs: Self) -> Self {
        let mut out = Self { v: self.v * rhs.v, g: [0.0; N], h: [0.0; T] };
        for i in 0..N {
            out.g[i] = self.v * rhs.g[i] + rhs.v * self.g[i];
        }
        for i in 0..N {
            let row = i * (i + 1) / 2;
            let (ai, bi) = (self.g[i], rhs.g[i]);
            for j in 0..=i {
                out.h[row + j] = self.v * rhs.h[row + j]
                    + rhs.v * self.h[row + j]
                    + ai * rhs.g[j]
                    + bi * self.g[j];
            }
        }
        out
    }
}

impl<const N: usize, const T: usize> Mul<f64> for Hyper<N, T> {
    type Output = Self;
    #[inline]
    fn mul(mut self, rhs: f64) -> Self {
        self.v *= rhs;
        for gi in self.g.iter_mut() {
            *gi *= rhs;
        }
        for hi in self.h.iter_mut() {
            *hi *= rhs;
        }
        self
    }
}

impl<const N: usize, const T: usize> Hyper<N, T> {
    #[inline]
    fn recip(self) -> Self {
        let r = 1.0 / self.v;
        self.chain(r, -r * r, 2.0 * r * r * r)
    }
}

impl<const N: usize> Scalar for Dual<N> {
    fn constant(value: f64) -> Self {
        Self { v: value, g: [0.0; N] }
    }
    fn value(&self) -> f64 {
        self.v
    }
    fn sin(self) -> Self {
        self.chain(self.v.sin(), self.v.cos())
    }
    fn cos(self) -> Self {
        self.chain(self.v.cos(), -self.v.sin())
    }
    fn exp(self) -> Self {
        let e = self.v.exp();
        self.chain(e, e)
    }
    fn ln(self) -> Self {
        self.chain(self.v.ln(), 1.0 / self.v)
    }
    fn sqrt(self) -> Self {
        let s = self.v.sqrt();
        self.chain(s, 0.5 / s)
    }
    fn tanh(self) -> Self {
        let t = self.v.tanh();
        self.chain(t, 1.0 - t * t)
    }
    fn powi(self, n: i32) -> Self {
        match n {
            0 => Self::constant(1.0),
            1 => self,
            2 => self * self,
            _ => self.chain(self.v.powi(n), n as f64 * self.v.powi(n - 1)),
        }
    }
}

impl<const N: usize, const T: usize> Scalar for Hyper<N, T> {
    fn constant(value: f64) -> Self {
        Self { v: value, g: [0.0; N], h: [0.0; T] }
    }
    fn value(&self) -> f64 {
        self.v
    }
    fn sin(self) -> Self {
        let (s, c) = self.v.sin_cos();
        self.chain(s, c, -s)
    }
    fn cos(self) -> Self {
        let (s, c) = self.v.sin_cos();
        self.chain(c, -s, -c)
    }
    fn exp(self) -> Self {
        let e = self.v.exp();
        self.chain(e, e, e)
    }
    fn ln(self) -> Self {
        let r = 1.0 / self.v;
        self.chain(self.v.ln(), r, -r * r)
    }
    fn sqrt(self) -> Self {
        let s = self.v.sqrt();
        self.chain(s, 0.5 / s, -0.25 / (s * self.v))
    }
    fn tanh(self) -> Self {
        let t = self.v.tanh();
        let d = 1.0 - t * t;
        self.chain(t, d, -2.0 * t * d)
    }
    fn powi(self, n: i32) -> Self {
        match n {
            0 => Self::constant(1.0),
            1 => self,
            2 => self * self,
            _ => {
                let nf = n as f64;
                self.chain(
                    self.v.powi(n),
                    nf * self.v.powi(n - 1),
                    nf * (nf - 1.0) * self.v.powi(n - 2),
                )
            }
        }
    }
}

pub type Dual8 = Dual<8>;
pub type Dual16 = Dual<16>;
pub type Dual32 = Dual<32>;
pub type Hyper8 = Hyper<8, 36>;
pub type Hyper16 = Hyper<16, 136>;
pub type Hyper32 = Hyper<32, 528>;

/// Scalars that carry derivatives with respect to a set of seeded inputs.
pub trait Differentiable: Scalar {
    const CAPACITY: usize;
    fn variable(value: f64, index: usize) -> Self;
    fn gradient_entry(&self, i: usize) -> f64;
    /// Second derivative `(i, j)`; zero for first-order types.
    fn hessian_entry(&self, i: usize, j: usize) -> f64;
    const SECOND_ORDER: bool;
}

impl<const N: usize> Differentiable for Dual<N> {
    const CAPACITY: usize = N;
    const SECOND_ORDER: bool = false;
    fn variable(value: f64, index: usize) -> Self {
        Dual::variable(value, index)
    }
    fn gradient_entry(&self, i: usize) -> f64 {
        self.g[i]
    }
    fn hessian_entry(&self, _i: usize, _j: usize) -> f64 {
        0.0
    }
}

impl<const N: usize, const T: usize> Differentiable for Hyper<N, T> {
    const CAPACITY: usize = N;
    const SECOND_ORDER: bool = true;
    fn variable(value: f64, index: usize) -> Self {
        Hyper::variable(value, index)
    }
    fn gradient_entry(&self, i: usize) -> f64 {
        self.g[i]
    }
    fn hessian_entry(&self, i: usize, j: usize) -> f64 {
        self.hess(i, j)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample<S: Scalar>(x: S, y: S) -> S {
        (x * y).sin() + (x / y).exp() - (x.square() + 1.0).ln() * y.tanh() + x.sqrt() * y.powi(3)
    }

    #[test]
    fn dual_gradient_matches_central_differences() {
        let (x, y) = (0.7, 1.3);
        let d = sample(Dual8::variable(x, 0), Dual8::variable(y, 1));
        let step = f64::EPSILON.cbrt();
        let fx = (sample(x + step, y) - sample(x - step, y)) / (2.0 * step);
        let fy = (sample(x, y + step) - sample(x, y - step)) / (2.0 * step);
        assert!((d.v - sample(x, y)).abs() < 1e-15);
        assert!((d.g[0] - fx).abs() < 1e-8, "{} vs {}", d.g[0], fx);
        assert!((d.g[1] - fy).abs() < 1e-8);
    }

    #[test]
    fn hyper_hessian_matches_dual_differences() {
        let (x, y) = (0.7, 1.3);
        let h = sample(Hyper8::variable(x, 0), Hyper8::variable(y, 1));
        let step = 1e-6;
        let grad = |x: f64, y: f64| {
            let d = sample(Dual8::variable(x, 0), Dual8::variable(y, 1));
            [d.g[0], d.g[1]]
        };
        let dxp = grad(x + step, y);
        let dxm = grad(x - step, y);
        let dyp = grad(x, y + step);
        let dym = grad(x, y - step);
        let hxx = (dxp[0] - dxm[0]) / (2.0 * step);
        let hxy = (dyp[0] - dym[0]) / (2.0 * step);
        let hyy = (dyp[1] - dym[1]) / (2.0 * step);
        assert!((h.hess(0, 0) - hxx).abs() < 1e-7);
        assert!((h.hess(1, 0) - hxy).abs() < 1e-7);
        assert!((h.hess(0, 1) - hxy).abs() < 1e-7);
        assert!((h.hess(1, 1) - hyy).abs() < 1e-7);
        assert_eq!(h.g[0], sample(Dual8::variable(x, 0), Dual8::variable(y, 1)).g[0]);
    }

    #[test]
    fn powi_and_division_second_derivatives() {
        let x = Hyper8::variable(2.0, 0);
        let p = x.powi(4);
        assert_eq!(p.v, 16.0);
        assert_eq!(p.g[0], 32.0);
        assert_eq!(p.hess(0, 0), 48.0);
        let r = Hyper8::constant(1.0) / x;
        assert!((r.hess(0, 0) - 0.25).abs() < 1e-15);
    }
}

//! Scalars for residual evaluation: plain `f64` and forward-mode duals carrying
//! `K` tangent lanes, so one pass yields the value and `K` directional derivatives.

use std::fmt::Debug;
use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};

pub trait Scalar:
    Copy
    + Send
    + Sync
    + Debug
    + PartialEq
    + 'static
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + AddAssign
    + SubAssign
    + MulAssign
    + Add<f64, Output = Self>
    + Sub<f64, Output = Self>
    + Mul<f64, Output = Self>
    + Div<f64, Output = Self>
{
    /// Tangent lanes besides the value.
    const LANES: usize;

    fn cst(v: f64) -> Self;
    fn re(self) -> f64;
    /// Lane 0 is the value, lanes `1..=LANES` are tangents.
    fn lane(self, k: usize) -> f64;
    fn set_lane(&mut self, k: usize, v: f64);

    /// `F(self)` given `F(re)` and `F'(re)`.
    fn chain(self, value: f64, deriv: f64) -> Self;

    fn zero() -> Self {
        Self::cst(0.0)
    }
    fn sqrt(self) -> Self {
        let r = self.re().sqrt();
        self.chain(r, 0.5 / r)
    }
    fn recip(self) -> Self {
        let r = self.re();
        self.chain(1.0 / r, -1.0 / (r * r))
    }
    fn powf(self, p: f64) -> Self {
        let r = self.re();
        self.chain(r.powf(p), p * r.powf(p - 1.0))
    }
}

impl Scalar for f64 {
    const LANES: usize = 0;
    #[inline]
    fn cst(v: f64) -> Self {
        v
    }
    #[inline]
    fn re(self) -> f64 {
        self
    }
    #[inline]
    fn lane(self, _k: usize) -> f64 {
        self
    }
    #[inline]
    fn set_lane(&mut self, _k: usize, v: f64) {
        *self = v;
    }
    #[inline]
    fn chain(self, value: f64, _deriv: f64) -> Self {
        value
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Dual<const K: usize> {
    pub v: f64,
    pub d: [f64; K],
}

impl<const K: usize> Dual<K> {
    pub fn new(v: f64, d: [f64; K]) -> Self {
        Dual { v, d }
    }
    pub fn seed(v: f64, lane: usize) -> Self {
        let mut d = [0.0; K];
        d[lane] = 1.0;
        Dual { v, d }
    }
}

impl<const K: usize> Scalar for Dual<K> {
    const LANES: usize = K;
    #[inline]
    fn cst(v: f64) -> Self {
        Dual { v, d: [0.0; K] }
    }
    #[inline]
    fn re(self) -> f64 {
        self.v
    }
    #[inline]
    fn lane(self, k: usize) -> f64 {
        if k == 0 {
            self.v
        } else {
            self.d[k - 1]
        }
    }
    #[inline]
    fn set_lane(&mut self, k: usize, v: f64) {
        if k == 0 {
            self.v = v
        } else {
            self.d[k - 1] = v
        }
    }
    #[inline]
    fn chain(self, value: f64, deriv: f64) -> Self {
        let mut d = self.d;
        for x in d.iter_mut() {
            *x *= deriv;
        }
        Dual { v: value, d }
    }
}

impl<const K: usize> Add for Dual<K> {
    type Output = Self;
    #[inline]
    fn add(mut self, o: Self) -> Self {
        self.v += o.v;
        for i in 0..K {
            self.d[i] += o.d[i];
        }
        self
    }
}

impl<const K: usize> Sub for Dual<K> {
    type Output = Self;
    #[inline]
    fn sub(mut self, o: Self) -> Self {
        self.v -= o.v;
        for i in 0..K {
            self.d[i] -= o.d[i];
        }
        self
    }
}

impl<const K: usize> Mul for Dual<K> {
    type Output = Self;
    #[inline]
    fn mul(self, o: Self) -> Self {
        let mut d = [0.0; K];
        for i in 0..K {
            d[i] = self.d[i] * o.v + self.v * o.d[i];
        }
        Dual { v: self.v * o.v, d }
    }
}

impl<const K: usize> Div for Dual<K> {
    type Output = Self;
    #[inline]
    fn div(self, o: Self) -> Self {
        let inv = 1.0 / o.v;
        let v = self.v * inv;
        let mut d = [0.0; K];
        for i in 0..K {
            d[i] = (self.d[i] - v * o.d[i]) * inv;
        }
        Dual { v, d }
    }
}

impl<const K: usize> Neg for Dual<K> {
    type Output = Self;
    #[inline]
    fn neg(mut self) -> Self {
        self.v = -self.v;
        for x in self.d.iter_mut() {
            *x = -*x;
        }
        self
    }
}

impl<const K: usize> AddAssign for Dual<K> {
    #[inline]
    fn add_assign(&mut self, o: Self) {
        *self = *self + o;
    }
}

impl<const K: usize> SubAssign for Dual<K> {
    #[inline]
    fn sub_assign(&mut self, o: Self) {
        *self = *self - o;
    }
}

impl<const K: usize> MulAssign for Dual<K> {
    #[inline]
    fn mul_assign(&mut self, o: Self) {
        *self = *self * o;
    }
}

impl<const K: usize> Add<f64> for Dual<K> {
    type Output = Self;
    #[inline]
    fn add(mut self, o: f64) -> Self {
        self.v += o;
        self
    }
}

impl<const K: usize> Sub<f64> for Dual<K> {
    type Output = Self;
    #[inline]
    fn sub(mut self, o: f64) -> Self {
        self.v -= o;
        self
    }
}

impl<const K: usize> Mul<f64> for Dual<K> {
    type Output = Self;
    #[inline]
    fn mul(mut self, o: f64) -> Self {
        self.v *= o;
        for x in self.d.iter_mut() {
            *x *= o;
        }
        self
    }
}

impl<const K: usize> Div<f64> for Dual<K> {
    type Output = Self;
    #[inline]
    fn div(self, o: f64) -> Self {
        self * (1.0 / o)
    }
}

/// Apply a real linear map lane by lane: `out = op(input)` for the value and
/// every tangent.
pub fn lift<T: Scalar>(input: &[T], out: &mut [T], buf_in: &mut Vec<f64>, buf_out: &mut Vec<f64>, mut op: impl FnMut(&[f64], &mut [f64])) {
    buf_in.resize(input.len(), 0.0);
    buf_out.resize(out.len(), 0.0);
    for k in 0..=T::LANES {
        for (b, x) in buf_in.iter_mut().zip(input) {
            *b = x.lane(k);
        }
        op(buf_in, buf_out);
        for (o, b) in out.iter_mut().zip(buf_out.iter()) {
            o.set_lane(k, *b);
        }
    }
}

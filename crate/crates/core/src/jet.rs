//! Truncated Taylor arithmetic used for exact derivatives of the profiles.

use std::ops::{Add, Mul, Sub};

/// Highest total order carried by [`Jet2`].
pub const JET_ORDER: usize = 4;

const FACT: [f64; 13] = [
    1.0,
    1.0,
    2.0,
    6.0,
    24.0,
    120.0,
    720.0,
    5040.0,
    40320.0,
    362880.0,
    3628800.0,
    39916800.0,
    479001600.0,
];

pub fn factorial(n: usize) -> f64 {
    FACT[n]
}

/// Univariate Taylor coefficients `c[k] = f^(k)(x0) / k!`.
#[derive(Debug, Clone, PartialEq)]
pub struct Series(pub Vec<f64>);

impl Series {
    pub fn order(&self) -> usize {
        self.0.len() - 1
    }

    /// Coefficients of `d/dx`, one order shorter.
    pub fn deriv(&self) -> Series {
        Series(
            self.0
                .iter()
                .enumerate()
                .skip(1)
                .map(|(k, c)| k as f64 * c)
                .collect(),
        )
    }

    fn truncated_len(&self, other: &Series) -> usize {
        self.0.len().min(other.0.len())
    }

    pub fn mul(&self, other: &Series) -> Series {
        let n = self.truncated_len(other);
        Series(
            (0..n)
                .map(|k| (0..=k).map(|j| self.0[j] * other.0[k - j]).sum())
                .collect(),
        )
    }

    pub fn sub(&self, other: &Series) -> Series {
        let n = self.truncated_len(other);
        Series((0..n).map(|k| self.0[k] - other.0[k]).collect())
    }

    pub fn scale(&self, a: f64) -> Series {
        Series(self.0.iter().map(|c| a * c).collect())
    }

    /// `k`-th derivative value.
    pub fn derivative(&self, k: usize) -> f64 {
        self.0[k] * factorial(k)
    }
}

/// Bivariate Taylor jet in `(x, t)` truncated at total order [`JET_ORDER`].
///
/// `c[k][l]` holds `d^k_x d^l_t F / (k! l!)`; entries with `k + l > JET_ORDER`
/// are kept at zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet2 {
    c: [[f64; JET_ORDER + 1]; JET_ORDER + 1],
}

impl Jet2 {
    pub fn zero() -> Self {
        Self {
            c: [[0.0; JET_ORDER + 1]; JET_ORDER + 1],
        }
    }

    pub fn constant(v: f64) -> Self {
        let mut j = Self::zero();
        j.c[0][0] = v;
        j
    }

    /// Builds from a closure returning the partial derivative `d^k_x d^l_t`.
    pub fn from_partials(mut partial: impl FnMut(usize, usize) -> f64) -> Self {
        let mut j = Self::zero();
        for k in 0..=JET_ORDER {
            for l in 0..=JET_ORDER - k {
                j.c[k][l] = partial(k, l) / (factorial(k) * factorial(l));
            }
        }
        j
    }

    /// Jet of a function of `x` alone.
    pub fn in_x(coeffs: &[f64]) -> Self {
        let mut j = Self::zero();
        for (k, c) in coeffs.iter().take(JET_ORDER + 1).enumerate() {
            j.c[k][0] = *c;
        }
        j
    }

    /// Jet of a function of `t` alone.
    pub fn in_t(coeffs: &[f64]) -> Self {
        let mut j = Self::zero();
        for (l, c) in coeffs.iter().take(JET_ORDER + 1).enumerate() {
            j.c[0][l] = *c;
        }
        j
    }

    pub fn value(&self) -> f64 {
        self.c[0][0]
    }

    pub fn coeff(&self, k: usize, l: usize) -> f64 {
        self.c[k][l]
    }

    /// `d^k_x d^l_t` of the represented function; zero beyond the order.
    pub fn partial(&self, k: usize, l: usize) -> f64 {
        if k + l > JET_ORDER {
            return 0.0;
        }
        self.c[k][l] * factorial(k) * factorial(l)
    }

    pub fn scale(&self, a: f64) -> Self {
        let mut r = *self;
        r.c.iter_mut().flatten().for_each(|v| *v *= a);
        r
    }

    /// `F(self)` given `F^(m)(value) / m!` for `m = 0..=JET_ORDER`.
    pub fn compose(&self, taylor: &[f64; JET_ORDER + 1]) -> Self {
        let mut shifted = *self;
        shifted.c[0][0] = 0.0;
        let mut r = Jet2::constant(taylor[JET_ORDER]);
        for m in (0..JET_ORDER).rev() {
            r = r * shifted;
            r.c[0][0] += taylor[m];
        }
        r
    }
}

impl Add for Jet2 {
    type Output = Jet2;
    fn add(mut self, rhs: Jet2) -> Jet2 {
        for k in 0..=JET_ORDER {
            for l in 0..=JET_ORDER - k {
                self.c[k][l] += rhs.c[k][l];
            }
        }
        self
    }
}

impl Sub for Jet2 {
    type Output = Jet2;
    fn sub(mut self, rhs: Jet2) -> Jet2 {
        for k in 0..=JET_ORDER {
            for l in 0..=JET_ORDER - k {
                self.c[k][l] -= rhs.c[k][l];
            }
        }
        self
    }
}

impl Mul for Jet2 {
    type Output = Jet2;
    fn mul(self, rhs: Jet2) -> Jet2 {
        let mut r = Jet2::zero();
        for k in 0..=JET_ORDER {
            for l in 0..=JET_ORDER - k {
                let a = self.c[k][l];
                if a == 0.0 {
                    continue;
                }
                for p in 0..=JET_ORDER - k - l {
                    for q in 0..=JET_ORDER - k - l - p {
                        r.c[k + p][l + q] += a * rhs.c[p][q];
                    }
                }
            }
        }
        r
    }
}

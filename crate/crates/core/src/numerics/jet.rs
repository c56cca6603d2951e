use super::scalar::{Real, Scalar};
use std::ops::{Add, Div, Mul, Neg, Sub};

/// Number of independent variables a [`Jet`] tracks.
pub const JET_DIM: usize = 3;

/// Second-order forward-mode jet in up to three variables.
///
/// Carries the value, gradient and Hessian of an expression.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Jet {
    pub v: f64,
    pub g: [f64; JET_DIM],
    pub h: [[f64; JET_DIM]; JET_DIM],
}

impl Jet {
    pub fn constant(v: f64) -> Self {
        Jet { v, g: [0.0; JET_DIM], h: [[0.0; JET_DIM]; JET_DIM] }
    }

    /// The coordinate function `x_i` evaluated at `x`.
    pub fn variable(x: f64, i: usize) -> Self {
        let mut j = Jet::constant(x);
        j.g[i] = 1.0;
        j
    }

    /// Partial derivative along axis `i` as a jet of one order less.
    ///
    /// The Hessian slot of the result is poisoned with NaN.
    pub fn d(&self, i: usize) -> Self {
        Jet { v: self.g[i], g: self.h[i], h: [[f64::NAN; JET_DIM]; JET_DIM] }
    }

    /// Apply a scalar function given `f(v)`, `f'(v)`, `f''(v)`.
    pub fn chain(&self, f0: f64, f1: f64, f2: f64) -> Self {
        let mut out = Jet::constant(f0);
        for i in 0..JET_DIM {
            out.g[i] = f1 * self.g[i];
            for j in 0..JET_DIM {
                out.h[i][j] = f1 * self.h[i][j] + f2 * self.g[i] * self.g[j];
            }
        }
        out
    }

    pub fn scale(&self, c: f64) -> Self {
        let mut out = *self;
        out.v *= c;
        for i in 0..JET_DIM {
            out.g[i] *= c;
            for j in 0..JET_DIM {
                out.h[i][j] *= c;
            }
        }
        out
    }

    pub fn recip(&self) -> Self {
        let r = 1.0 / self.v;
        self.chain(r, -r * r, 2.0 * r * r * r)
    }
}

impl Add for Jet {
    type Output = Jet;
    fn add(mut self, o: Jet) -> Jet {
        self.v += o.v;
        for i in 0..JET_DIM {
            self.g[i] += o.g[i];
            for j in 0..JET_DIM {
                self.h[i][j] += o.h[i][j];
            }
        }
        self
    }
}

impl Sub for Jet {
    type Output = Jet;
    fn sub(self, o: Jet) -> Jet {
        self + (-o)
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

impl Mul for Jet {
    type Output = Jet;
    fn mul(self, o: Jet) -> Jet {
        let mut out = Jet::constant(self.v * o.v);
        for i in 0..JET_DIM {
            out.g[i] = self.v * o.g[i] + o.v * self.g[i];
            for j in 0..JET_DIM {
                out.h[i][j] = self.v * o.h[i][j]
                    + o.v * self.h[i][j]
                    + self.g[i] * o.g[j]
                    + o.g[i] * self.g[j];
            }
        }
        out
    }
}

impl Div for Jet {
    type Output = Jet;
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn div(self, o: Jet) -> Jet {
        self * o.recip()
    }
}

impl Scalar for Jet {
    const EXACT: bool = false;
    fn zero() -> Self {
        Jet::constant(0.0)
    }
    fn one() -> Self {
        Jet::constant(1.0)
    }
    fn from_i64(n: i64) -> Self {
        Jet::constant(n as f64)
    }
    fn to_f64(&self) -> f64 {
        self.v
    }
    fn from_f64(x: f64) -> Self {
        Jet::constant(x)
    }
    fn is_zero(&self) -> bool {
        self.v == 0.0
            && self.g.iter().all(|x| *x == 0.0)
            && self.h.iter().flatten().all(|x| *x == 0.0)
    }
}

impl Real for Jet {
    fn sqrt(self) -> Self {
        let r = self.v.sqrt();
        self.chain(r, 0.5 / r, -0.25 / (r * self.v))
    }
    fn sin(self) -> Self {
        let (s, c) = self.v.sin_cos();
        self.chain(s, c, -s)
    }
    fn cos(self) -> Self {
        let (s, c) = self.v.sin_cos();
        self.chain(c, -s, -c)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn product_rule_and_second_derivative() {
        let x = Jet::variable(0.7, 0);
        let y = Jet::variable(-1.3, 1);
        let f = x * x * y + x.sin();
        assert!((f.g[0] - (2.0 * 0.7 * -1.3 + 0.7f64.cos())).abs() < 1e-14);
        assert!((f.g[1] - 0.49).abs() < 1e-14);
        assert!((f.h[0][0] - (2.0 * -1.3 - 0.7f64.sin())).abs() < 1e-14);
        assert!((f.h[0][1] - 1.4).abs() < 1e-14);
    }

    #[test]
    fn derivative_shift_poisons_hessian() {
        let x = Jet::variable(2.0, 2);
        let f = x * x * x;
        let df = f.d(2);
        assert_eq!(df.v, 12.0);
        assert_eq!(df.g[2], 12.0);
        assert!(df.h[0][0].is_nan());
    }

    #[test]
    fn sqrt_and_quotient() {
        let x = Jet::variable(4.0, 0);
        let r = x.sqrt();
        assert!((r.g[0] - 0.25).abs() < 1e-15);
        assert!((r.h[0][0] + 1.0 / 32.0).abs() < 1e-15);
        let q = Jet::one() / x;
        assert!((q.h[0][0] - 2.0 / 64.0).abs() < 1e-15);
    }
}

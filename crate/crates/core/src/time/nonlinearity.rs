//! Power nonlinearities `f(s) = ±s^{(p−1)/2}` and their divided differences.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// `f(s) = sign · s^{(p−1)/2}` with potential `F(s) = sign · 2/(p+1) · s^{(p+1)/2}`,
/// or the linear case `f ≡ 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Nonlinearity {
    exponent: f64,
    sign: f64,
    linear: bool,
}

impl Default for Nonlinearity {
    fn default() -> Self {
        Nonlinearity::cubic()
    }
}

impl Nonlinearity {
    /// `f(s) = s`.
    pub fn cubic() -> Self {
        Nonlinearity {
            exponent: 3.0,
            sign: 1.0,
            linear: false,
        }
    }

    pub fn power(exponent: f64, sign: f64) -> Result<Self> {
        if !(exponent > 1.0) || !exponent.is_finite() {
            return Err(Error::InvalidArgument(format!("exponent must exceed 1, got {exponent}")));
        }
        if sign != 1.0 && sign != -1.0 {
            return Err(Error::InvalidArgument(format!("sign must be ±1, got {sign}")));
        }
        Ok(Nonlinearity {
            exponent,
            sign,
            linear: false,
        })
    }

    /// `f ≡ 0`: the scheme becomes linear.
    pub fn linear() -> Self {
        Nonlinearity {
            exponent: 3.0,
            sign: 1.0,
            linear: true,
        }
    }

    pub fn is_linear(&self) -> bool {
        self.linear
    }

    pub fn exponent(&self) -> f64 {
        self.exponent
    }

    pub fn sign(&self) -> f64 {
        self.sign
    }

    fn is_cubic(&self) -> bool {
        self.exponent == 3.0
    }

    pub fn f(&self, s: f64) -> f64 {
        if self.linear {
            0.0
        } else if self.is_cubic() {
            self.sign * s
        } else {
            self.sign * s.powf(0.5 * (self.exponent - 1.0))
        }
    }

    #[allow(non_snake_case)]
    pub fn F(&self, s: f64) -> f64 {
        if self.linear {
            0.0
        } else if self.is_cubic() {
            self.sign * 0.5 * s * s
        } else {
            self.sign * 2.0 / (self.exponent + 1.0) * s.powf(0.5 * (self.exponent + 1.0))
        }
    }

    /// `(F(x) − F(y)) / (x − y)`, with its limit `f` on the diagonal.
    pub fn f_tilde(&self, x: f64, y: f64) -> Result<f64> {
        if !(x >= 0.0 && y >= 0.0) {
            return Err(Error::InvalidArgument(format!("f_tilde needs nonnegative arguments, got ({x}, {y})")));
        }
        Ok(self.f_tilde_unchecked(x, y))
    }

    /// [`Self::f_tilde`] without the sign check, for quadrature loops where
    /// the arguments are squared moduli.
    #[inline]
    pub fn f_tilde_unchecked(&self, x: f64, y: f64) -> f64 {
        if self.linear {
            return 0.0;
        }
        if self.is_cubic() {
            return self.sign * 0.5 * (x + y);
        }
        if (x - y).abs() < 1e-12 * x.max(y).max(1.0) {
            self.f(0.5 * (x + y))
        } else {
            (self.F(x) - self.F(y)) / (x - y)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn closed_forms() {
        let cubic = Nonlinearity::cubic();
        assert_eq!(cubic.f_tilde(2.0, 4.0).unwrap(), 3.0);
        let p2 = Nonlinearity::power(2.0, 1.0).unwrap();
        assert!((p2.f_tilde(1.0, 0.0).unwrap() - 2.0 / 3.0).abs() < 1e-15);
        for nl in [cubic, p2, Nonlinearity::power(5.0, -1.0).unwrap()] {
            assert!((nl.f_tilde(1.7, 1.7).unwrap() - nl.f(1.7)).abs() < 1e-15);
        }
        assert!(cubic.f_tilde(-1.0, 0.0).is_err());
        assert_eq!(Nonlinearity::linear().f_tilde(2.0, 3.0).unwrap(), 0.0);
        assert!(Nonlinearity::power(1.0, 1.0).is_err());
        assert!(Nonlinearity::power(3.0, 0.5).is_err());
    }

    proptest! {
        #[test]
        fn potential_derivative_matches(s in 0.1f64..10.0, p in 1.5f64..7.0) {
            let nl = Nonlinearity::power(p, 1.0).unwrap();
            let h = 1e-6 * s;
            let fd = (nl.F(s + h) - nl.F(s - h)) / (2.0 * h);
            prop_assert!((fd - nl.f(s)).abs() <= 1e-8 * nl.f(s).abs().max(1.0));
        }

        #[test]
        fn f_tilde_is_symmetric_divided_difference(x in 0.0f64..50.0, y in 0.0f64..50.0, p in 1.5f64..7.0) {
            let nl = Nonlinearity::power(p, -1.0).unwrap();
            let a = nl.f_tilde(x, y).unwrap();
            prop_assert_eq!(a, nl.f_tilde(y, x).unwrap());
            let scale = nl.F(x).abs().max(nl.F(y).abs()).max(1.0);
            prop_assert!((a * (x - y) - (nl.F(x) - nl.F(y))).abs() <= 1e-12 * scale);
        }
    }
}

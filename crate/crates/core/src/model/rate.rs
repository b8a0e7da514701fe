use crate::error::{Error, Result};
use crate::real::Real;

/// Parametric family of a [`RateFunction`].
#[derive(Debug, Clone, PartialEq)]
pub enum RateKind<T> {
    /// `f(x) = c x^xi` with `c > 0`, `xi >= 1`.
    Power { c: T, xi: T },
    /// `f(x) = sum_k coefficients[k] x^k` with nonnegative coefficients and `coefficients[0] = 0`.
    Polynomial { coefficients: Vec<T> },
}

/// Spiking intensity `f` together with its first two derivatives and its
/// antiderivative `F(x) = int_0^x f`.
///
/// Both families are nondecreasing, convex and vanish at zero, so every value
/// constructed through [`RateFunction::power`] or [`RateFunction::polynomial`]
/// satisfies the standing positivity and monotonicity requirements.
#[derive(Debug, Clone, PartialEq)]
pub struct RateFunction<T: Real = f64> {
    kind: RateKind<T>,
    // integer exponent fast path for `Power`
    int_xi: Option<i32>,
}

impl<T: Real> RateFunction<T> {
    pub fn power(c: T, xi: T) -> Result<Self> {
        if !(c > T::zero()) || !c.is_finite() {
            return Err(Error::InvalidRate(format!("power rate needs c > 0, got {c}")));
        }
        if !(xi >= T::one()) || !xi.is_finite() {
            return Err(Error::InvalidRate(format!("power rate needs xi >= 1, got {xi}")));
        }
        let int_xi = (xi.fract() == T::zero() && xi <= T::lit(64.0)).then(|| xi.to_i32().unwrap());
        Ok(Self { kind: RateKind::Power { c, xi }, int_xi })
    }

    /// `f(x) = x`.
    pub fn linear() -> Self {
        Self::power(T::one(), T::one()).expect("valid")
    }

    /// `f(x) = x^2`.
    pub fn quadratic() -> Self {
        Self::power(T::one(), T::lit(2.0)).expect("valid")
    }

    pub fn polynomial(coefficients: Vec<T>) -> Result<Self> {
        let Some(&c0) = coefficients.first() else {
            return Err(Error::InvalidRate("polynomial rate needs coefficients".into()));
        };
        if c0 != T::zero() {
            return Err(Error::InvalidRate(format!("f(0) = {c0} != 0")));
        }
        if let Some((k, c)) = coefficients.iter().enumerate().find(|(_, c)| !(**c >= T::zero()) || !c.is_finite()) {
            return Err(Error::InvalidRate(format!("coefficient of x^{k} is {c}, must be finite and >= 0")));
        }
        if coefficients.iter().all(|c| *c == T::zero()) {
            return Err(Error::InvalidRate("polynomial rate is identically zero".into()));
        }
        let mut coefficients = coefficients;
        while coefficients.last() == Some(&T::zero()) {
            coefficients.pop();
        }
        Ok(Self { kind: RateKind::Polynomial { coefficients }, int_xi: None })
    }

    pub fn kind(&self) -> &RateKind<T> {
        &self.kind
    }

    #[inline]
    pub fn eval(&self, x: T) -> T {
        match &self.kind {
            RateKind::Power { c, xi } => match self.int_xi {
                Some(1) => *c * x,
                Some(2) => *c * x * x,
                Some(k) => *c * x.powi(k),
                None => *c * x.powf(*xi),
            },
            RateKind::Polynomial { coefficients } => horner(coefficients, x),
        }
    }

    pub fn deriv1(&self, x: T) -> T {
        match &self.kind {
            RateKind::Power { c, xi } => {
                if *xi == T::one() {
                    *c
                } else {
                    *c * *xi * x.powf(*xi - T::one())
                }
            }
            RateKind::Polynomial { coefficients } => {
                let d: Vec<T> = coefficients
                    .iter()
                    .enumerate()
                    .skip(1)
                    .map(|(k, c)| *c * T::from_usize(k).unwrap())
                    .collect();
                horner(&d, x)
            }
        }
    }

    /// Second derivative; `+inf` at zero for power rates with `1 < xi < 2`.
    pub fn deriv2(&self, x: T) -> T {
        match &self.kind {
            RateKind::Power { c, xi } => {
                let two = T::lit(2.0);
                if *xi == T::one() {
                    T::zero()
                } else if *xi == two {
                    two * *c
                } else {
                    *c * *xi * (*xi - T::one()) * x.powf(*xi - two)
                }
            }
            RateKind::Polynomial { coefficients } => {
                let d: Vec<T> = coefficients
                    .iter()
                    .enumerate()
                    .skip(2)
                    .map(|(k, c)| *c * T::from_usize(k * (k - 1)).unwrap())
                    .collect();
                horner(&d, x)
            }
        }
    }

    /// `F(x) = int_0^x f(y) dy` in closed form.
    pub fn antiderivative(&self, x: T) -> T {
        match &self.kind {
            RateKind::Power { c, xi } => *c * x.powf(*xi + T::one()) / (*xi + T::one()),
            RateKind::Polynomial { coefficients } => {
                let a: Vec<T> = std::iter::once(T::zero())
                    .chain(coefficients.iter().enumerate().map(|(k, c)| *c / T::from_usize(k + 1).unwrap()))
                    .collect();
                horner(&a, x)
            }
        }
    }

    /// Growth exponents `(xi, zeta)` with `c x^xi <= f(x) <= C (x^{xi-1} + x^zeta)`.
    pub fn growth_exponents(&self) -> (T, T) {
        match &self.kind {
            RateKind::Power { xi, .. } => (*xi, *xi),
            RateKind::Polynomial { coefficients } => {
                let lo = coefficients.iter().position(|c| *c > T::zero()).unwrap_or(1);
                let hi = coefficients.len() - 1;
                (T::from_usize(lo).unwrap(), T::from_usize(hi).unwrap())
            }
        }
    }

    /// `H(x) = f(x) + arctan x`, the increasing function behind the coupling distance.
    #[inline]
    pub fn h(&self, x: T) -> T {
        self.eval(x) + x.atan()
    }

    /// Converts to another scalar type.
    pub fn cast<U: Real>(&self) -> RateFunction<U> {
        let conv = |v: T| U::lit(v.to_f64_lossy());
        match &self.kind {
            RateKind::Power { c, xi } => RateFunction::power(conv(*c), conv(*xi)).expect("valid"),
            RateKind::Polynomial { coefficients } => {
                RateFunction::polynomial(coefficients.iter().map(|c| conv(*c)).collect()).expect("valid")
            }
        }
    }
}

#[inline]
fn horner<T: Real>(coefficients: &[T], x: T) -> T {
    coefficients.iter().rev().fold(T::zero(), |acc, c| acc * x + *c)
}

//! Approximating functions `psi` on denominators and their chart-side counterparts `Psi` on
//! cusp weights.

use num_traits::{One, Signed, Zero};
use serde::ser::SerializeStruct;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::json::Real;
use crate::rational::{self, Rat};

const TWO_SQRT2: f64 = 2.0 * std::f64::consts::SQRT_2;

#[derive(Clone, Debug, PartialEq)]
pub enum ApproxFunction {
    /// `c x^{-alpha} (ln x)^gamma`.
    Power { coeff: f64, alpha: Rat, gamma: f64 },
    /// `c e^{-rate x / (2 sqrt2)} (x / (2 sqrt2))^gamma`, the shape of weight-side functions.
    Exp { coeff: f64, rate: Rat, gamma: f64 },
    Constant { value: f64 },
    /// Piecewise log-linear interpolation of `(x, y)` samples with `y > 0`, constant beyond
    /// the ends.
    Tabulated { points: Vec<(f64, f64)> },
}

impl ApproxFunction {
    pub fn power(alpha: Rat) -> Result<Self> {
        Self::power_full(1.0, alpha, 0.0)
    }

    pub fn power_full(coeff: f64, alpha: Rat, gamma: f64) -> Result<Self> {
        if !alpha.is_positive() {
            return Err(Error::InvalidParameter("power-law exponent must be positive".into()));
        }
        if !(coeff > 0.0) || !gamma.is_finite() {
            return Err(Error::InvalidParameter("coefficient must be positive".into()));
        }
        Ok(Self::Power { coeff, alpha, gamma })
    }

    pub fn exp(coeff: f64, rate: Rat) -> Result<Self> {
        if rate.is_negative() || !(coeff > 0.0) {
            return Err(Error::InvalidParameter("exponential needs rate >= 0 and coefficient > 0".into()));
        }
        Ok(Self::Exp { coeff, rate, gamma: 0.0 })
    }

    pub fn constant(value: f64) -> Result<Self> {
        if !(value >= 0.0) {
            return Err(Error::InvalidParameter("constant must be non-negative".into()));
        }
        Ok(Self::Constant { value })
    }

    pub fn tabulated(mut points: Vec<(f64, f64)>) -> Result<Self> {
        if points.len() < 2 || points.iter().any(|p| !(p.1 > 0.0) || !p.0.is_finite()) {
            return Err(Error::InvalidParameter("table needs two or more points with positive values".into()));
        }
        points.sort_by(|a, b| a.0.total_cmp(&b.0));
        Ok(Self::Tabulated { points })
    }

    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Self::Power { coeff, alpha, gamma } => {
                let mut v = coeff * x.powf(-rational::to_f64(alpha));
                if *gamma != 0.0 {
                    v *= x.ln().powf(*gamma);
                }
                v
            }
            Self::Exp { coeff, rate, gamma } => {
                let mut v = coeff * (-rational::to_f64(rate) * x / TWO_SQRT2).exp();
                if *gamma != 0.0 {
                    v *= (x / TWO_SQRT2).powf(*gamma);
                }
                v
            }
            Self::Constant { value } => *value,
            Self::Tabulated { points } => {
                let (first, last) = (points[0], points[points.len() - 1]);
                if x <= first.0 {
                    return first.1;
                }
                if x >= last.0 {
                    return last.1;
                }
                let k = points.partition_point(|p| p.0 <= x);
                let (a, b) = (points[k - 1], points[k]);
                let u = (x - a.0) / (b.0 - a.0);
                (a.1.ln() * (1.0 - u) + b.1.ln() * u).exp()
            }
        }
    }

    /// Natural log of the function, evaluated without forming the value itself.
    pub fn ln_eval(&self, x: f64) -> f64 {
        match self {
            Self::Power { coeff, alpha, gamma } => {
                let mut v = coeff.ln() - rational::to_f64(alpha) * x.ln();
                if *gamma != 0.0 {
                    v += gamma * x.ln().ln();
                }
                v
            }
            Self::Exp { coeff, rate, gamma } => {
                let mut v = coeff.ln() - rational::to_f64(rate) * x / TWO_SQRT2;
                if *gamma != 0.0 {
                    v += gamma * (x / TWO_SQRT2).ln();
                }
                v
            }
            Self::Constant { value } => value.ln(),
            Self::Tabulated { .. } => self.eval(x).ln(),
        }
    }

    /// A point beyond which the function is non-increasing.
    pub fn x0(&self) -> f64 {
        match self {
            Self::Power { alpha, gamma, .. } => std::f64::consts::E.max((gamma / rational::to_f64(alpha)).exp()),
            Self::Exp { rate, gamma, .. } => {
                if *gamma <= 0.0 || rate.is_zero() {
                    0.0
                } else {
                    TWO_SQRT2 * gamma / rational::to_f64(rate)
                }
            }
            Self::Constant { .. } => 0.0,
            Self::Tabulated { points } => points[0].0,
        }
    }

    /// Whether `x psi(x) -> 0`, decided from the stored exponents.
    pub fn x_psi_tends_to_zero(&self) -> Option<bool> {
        match self {
            Self::Power { alpha, gamma, .. } => Some(alpha > &Rat::one() || (alpha.is_one() && *gamma < 0.0)),
            Self::Exp { rate, .. } => Some(rate.is_positive()),
            Self::Constant { value } => Some(*value == 0.0),
            Self::Tabulated { .. } => None,
        }
    }

    /// Rejects functions for which `x psi(x) -> 0` fails or cannot be decided.
    pub fn require_x_psi_to_zero(&self) -> Result<()> {
        match self.x_psi_tends_to_zero() {
            Some(true) => Ok(()),
            Some(false) => Err(Error::ApproxHypothesis(format!("x psi(x) does not tend to 0 for {}", self.describe()))),
            None => Err(Error::ApproxHypothesis("x psi(x) -> 0 cannot be decided for tabulated data".into())),
        }
    }

    /// `sigma = limsup ln x / (ln x - ln psi(x))` as an exact rational.
    pub fn sigma(&self) -> Result<Rat> {
        match self {
            Self::Power { alpha, .. } => Ok(Rat::one() / (Rat::one() + alpha)),
            Self::Exp { rate, .. } => Ok(if rate.is_zero() { Rat::one() } else { Rat::zero() }),
            Self::Constant { value } => Ok(if *value == 0.0 { Rat::zero() } else { Rat::one() }),
            Self::Tabulated { .. } => Err(Error::SigmaUndefined("tabulated function has no symbolic order".into())),
        }
    }

    /// Exponent `sigma` for a weight-side function `Psi`, with the dimension of the chart limsup
    /// set equal to `sigma Delta`: `1/rate` for `e^{-rate x/(2 sqrt2)}` with `rate >= 1`, and 1 for
    /// slower decay.
    pub fn chart_sigma(&self) -> Result<Rat> {
        match self {
            Self::Exp { rate, .. } => Ok(if rate > &Rat::one() { Rat::one() / rate } else { Rat::one() }),
            Self::Power { .. } => Ok(Rat::one()),
            Self::Constant { value } => Ok(if *value == 0.0 { Rat::zero() } else { Rat::one() }),
            Self::Tabulated { .. } => Err(Error::SigmaUndefined("tabulated function has no symbolic order".into())),
        }
    }

    /// The weight-side function `Psi(x) = psi(e^{x/(2 sqrt2)}) / e^{x/(2 sqrt2)}`.
    pub fn to_weight_side(&self) -> Result<Self> {
        match self {
            Self::Power { coeff, alpha, gamma } => Ok(Self::Exp { coeff: *coeff, rate: Rat::one() + alpha, gamma: *gamma }),
            Self::Constant { value } => Self::exp(value.max(f64::MIN_POSITIVE), Rat::one()),
            _ => Err(Error::InvalidParameter("only power laws and constants have a weight-side form".into())),
        }
    }

    pub fn describe(&self) -> String {
        match self {
            Self::Power { coeff, alpha, gamma } => {
                let mut s = format!("{coeff} x^-({})", rational::fmt_rat(alpha));
                if *gamma != 0.0 {
                    s.push_str(&format!(" (ln x)^{gamma}"));
                }
                s
            }
            Self::Exp { coeff, rate, gamma } => {
                let mut s = format!("{coeff} exp(-({}) x / 2sqrt2)", rational::fmt_rat(rate));
                if *gamma != 0.0 {
                    s.push_str(&format!(" (x / 2sqrt2)^{gamma}"));
                }
                s
            }
            Self::Constant { value } => format!("{value}"),
            Self::Tabulated { points } => format!("table of {} points", points.len()),
        }
    }
}

impl Serialize for ApproxFunction {
    fn serialize<S: serde::Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        let mut st = ser.serialize_struct("ApproxFunction", 4)?;
        match self {
            Self::Power { coeff, alpha, gamma } => {
                st.serialize_field("kind", "power")?;
                st.serialize_field("coeff", &Real(*coeff))?;
                st.serialize_field("alpha", &rational::fmt_rat(alpha))?;
                st.serialize_field("gamma", &Real(*gamma))?;
            }
            Self::Exp { coeff, rate, gamma } => {
                st.serialize_field("kind", "exp")?;
                st.serialize_field("coeff", &Real(*coeff))?;
                st.serialize_field("rate", &rational::fmt_rat(rate))?;
                st.serialize_field("gamma", &Real(*gamma))?;
            }
            Self::Constant { value } => {
                st.serialize_field("kind", "constant")?;
                st.serialize_field("value", &Real(*value))?;
            }
            Self::Tabulated { points } => {
                st.serialize_field("kind", "tabulated")?;
                let pts: Vec<(Real, Real)> = points.iter().map(|p| (Real(p.0), Real(p.1))).collect();
                st.serialize_field("points", &pts)?;
            }
        }
        st.end()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{rat, ratio};

    #[test]
    fn evaluation() {
        let psi = ApproxFunction::power(rat(2)).unwrap();
        assert_eq!(psi.eval(4.0), 1.0 / 16.0);
        let logged = ApproxFunction::power_full(2.0, ratio(1, 2), 1.0).unwrap();
        assert!((logged.eval(std::f64::consts::E.powi(2)) - 2.0 * 2.0 / std::f64::consts::E).abs() < 1e-12);
        let e = ApproxFunction::exp(3.0, rat(2)).unwrap();
        assert!((e.eval(TWO_SQRT2) - 3.0 * (-2.0f64).exp()).abs() < 1e-15);
        let t = ApproxFunction::tabulated(vec![(10.0, 0.1), (0.0, 10.0)]).unwrap();
        assert!((t.eval(5.0) - 1.0).abs() < 1e-12);
        assert_eq!(t.eval(-1.0), 10.0);
        assert_eq!(t.eval(20.0), 0.1);
    }

    #[test]
    fn hypothesis_and_sigma() {
        assert!(ApproxFunction::power(ratio(1, 2)).unwrap().require_x_psi_to_zero().is_err());
        assert!(ApproxFunction::power(rat(1)).unwrap().require_x_psi_to_zero().is_err());
        assert!(ApproxFunction::power_full(1.0, rat(1), -1.0).unwrap().require_x_psi_to_zero().is_ok());
        assert!(ApproxFunction::constant(1.0).unwrap().require_x_psi_to_zero().is_err());
        assert_eq!(ApproxFunction::power(rat(2)).unwrap().sigma().unwrap(), ratio(1, 3));
        // Scale invariance: the coefficient does not enter sigma.
        assert_eq!(ApproxFunction::power_full(7.0, rat(2), 0.0).unwrap().sigma().unwrap(), ratio(1, 3));
        assert!(matches!(
            ApproxFunction::tabulated(vec![(0.0, 1.0), (1.0, 0.5)]).unwrap().sigma(),
            Err(Error::SigmaUndefined(_))
        ));
    }

    #[test]
    fn weight_side() {
        let psi = ApproxFunction::power(rat(2)).unwrap();
        let big = psi.to_weight_side().unwrap();
        assert_eq!(big.chart_sigma().unwrap(), ratio(1, 3));
        for x in [0.5, 3.0, 10.0] {
            let e = (x / TWO_SQRT2).exp();
            assert!((big.eval(x) - psi.eval(e) / e).abs() < 1e-15);
        }
    }

    #[test]
    fn decreasing_beyond_x0() {
        for f in [
            ApproxFunction::power_full(1.0, ratio(1, 2), 3.0).unwrap(),
            ApproxFunction::Exp { coeff: 1.0, rate: rat(1), gamma: 2.0 },
        ] {
            let x0 = f.x0();
            let mut prev = f.eval(x0 + 1e-9);
            for k in 1..200 {
                let v = f.eval(x0 + k as f64 * 0.37);
                assert!(v <= prev + 1e-15);
                prev = v;
            }
        }
    }

    #[test]
    fn invalid_construction() {
        assert!(ApproxFunction::power(rat(0)).is_err());
        assert!(ApproxFunction::exp(1.0, rat(-1)).is_err());
        assert!(ApproxFunction::tabulated(vec![(0.0, 1.0)]).is_err());
    }
}

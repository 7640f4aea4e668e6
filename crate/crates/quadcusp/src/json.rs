//! JSON conventions: reals are written with 17 significant digits and rationals as `"p/q"`.

use serde::{Serialize, Serializer};
use serde_json::value::RawValue;

use crate::rational::{self, Rat};

/// A real number serialized as a JSON number with 17 significant digits.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Real(pub f64);

pub fn format_real(x: f64) -> String {
    format!("{x:.16e}")
}

impl Serialize for Real {
    fn serialize<S: Serializer>(&self, ser: S) -> Result<S::Ok, S::Error> {
        if self.0.is_finite() {
            let raw = RawValue::from_string(format_real(self.0)).map_err(serde::ser::Error::custom)?;
            raw.serialize(ser)
        } else {
            ser.serialize_str(&self.0.to_string())
        }
    }
}

pub fn ser_real<S: Serializer>(x: &f64, ser: S) -> Result<S::Ok, S::Error> {
    Real(*x).serialize(ser)
}

pub fn ser_reals<S: Serializer>(xs: &[f64], ser: S) -> Result<S::Ok, S::Error> {
    let v: Vec<Real> = xs.iter().map(|&x| Real(x)).collect();
    v.serialize(ser)
}

pub fn ser_opt_real<S: Serializer>(x: &Option<f64>, ser: S) -> Result<S::Ok, S::Error> {
    x.map(Real).serialize(ser)
}

pub fn ser_rat<S: Serializer>(x: &Rat, ser: S) -> Result<S::Ok, S::Error> {
    ser.serialize_str(&rational::fmt_rat(x))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_significant_digits() {
        assert_eq!(format_real(1.0), "1.0000000000000000e0");
        assert_eq!(serde_json::to_string(&Real(0.1)).unwrap(), "1.0000000000000001e-1");
        let back: f64 = serde_json::from_str(&serde_json::to_string(&Real(std::f64::consts::PI)).unwrap()).unwrap();
        assert_eq!(back, std::f64::consts::PI);
        assert_eq!(serde_json::to_string(&Real(f64::NAN)).unwrap(), "\"NaN\"");
    }
}

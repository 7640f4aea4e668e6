//! Named forms used by the experiments and the command line.

use crate::error::{Error, Result};
use crate::forms::{find_isotropic_seed, suspend_form, RatSymForm};
use crate::frame::{witt_frame, CuspFrame};

/// Suspension of the sum of `n` squares: the unit sphere `S^{n-1}`.
pub fn unit_sphere(n: usize) -> RatSymForm {
    suspend_form(&RatSymForm::identity(n)).expect("identity is nondegenerate")
}

/// `z^2 - x^2 - y^2`, the cone over the unit circle.
pub fn circle() -> RatSymForm {
    unit_sphere(2)
}

/// `w^2 - x^2 - y^2 - z^2`, the cone over the unit sphere.
pub fn sphere() -> RatSymForm {
    unit_sphere(3)
}

/// Normal form of signature `(2, 2)`.
pub fn split_22() -> RatSymForm {
    RatSymForm::normal_form(2, 2)
}

/// Looks a form up by name. Accepts `circle`, `sphere`, `sphere<n>` (sum of `n` squares),
/// `normal<p>_<q>` (normal form of signature `(p, q)`) and `third` (the empty quadric
/// `(x^2 + y^2)/3 = 1`).
pub fn named(name: &str) -> Result<RatSymForm> {
    let bad = || Error::Parse(format!("unknown form name {name:?}"));
    match name {
        "circle" => Ok(circle()),
        "sphere" => Ok(sphere()),
        "split22" => Ok(split_22()),
        "third" => suspend_form(&RatSymForm::diagonal(&[
            crate::rational::ratio(1, 3),
            crate::rational::ratio(1, 3),
        ])),
        _ => {
            if let Some(n) = name.strip_prefix("sphere") {
                let n: usize = n.parse().map_err(|_| bad())?;
                if n == 0 {
                    return Err(bad());
                }
                Ok(unit_sphere(n))
            } else if let Some(rest) = name.strip_prefix("normal") {
                let (p, q) = rest.split_once('_').ok_or_else(bad)?;
                let p: usize = p.parse().map_err(|_| bad())?;
                let q: usize = q.parse().map_err(|_| bad())?;
                if p == 0 || q == 0 {
                    return Err(bad());
                }
                Ok(RatSymForm::normal_form(p, q))
            } else {
                Err(bad())
            }
        }
    }
}

/// Frame at the canonical seed of an isotropic form.
pub fn standard_frame(l: &RatSymForm) -> Result<CuspFrame> {
    let v0 = find_isotropic_seed(l, 50)?.ok_or(Error::NotIsotropic)?;
    witt_frame(l, &v0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_resolve() {
        assert_eq!(named("circle").unwrap(), circle());
        assert_eq!(named("sphere3").unwrap(), sphere());
        assert_eq!(named("normal2_2").unwrap().signature(), (2, 2));
        assert_eq!(named("third").unwrap().dim(), 3);
        assert!(named("torus").is_err());
        assert!(named("normal0_2").is_err());
    }

    #[test]
    fn frames_exist() {
        for l in [circle(), sphere(), split_22()] {
            let f = standard_frame(&l).unwrap();
            assert_eq!(f.delta(), l.dim() - 2);
        }
    }
}

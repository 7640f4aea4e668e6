//! Exact rational scalars and dense matrices.

use nalgebra::DMatrix;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

pub type Rat = BigRational;
pub type RatMatrix = Vec<Vec<Rat>>;

pub fn rat(n: i64) -> Rat {
    Rat::from_integer(BigInt::from(n))
}

pub fn ratio(p: i64, q: i64) -> Rat {
    Rat::new(BigInt::from(p), BigInt::from(q))
}

/// Parses `p/q` or a bare integer `p`.
pub fn parse_rat(token: &str) -> Result<Rat> {
    let token = token.trim();
    let bad = || Error::Parse(format!("bad rational token '{token}'"));
    match token.split_once('/') {
        Some((p, q)) => {
            let p: BigInt = p.trim().parse().map_err(|_| bad())?;
            let q: BigInt = q.trim().parse().map_err(|_| bad())?;
            if q.is_zero() {
                return Err(bad());
            }
            Ok(Rat::new(p, q))
        }
        None => match token.split_once('.') {
            Some((int, frac)) if !frac.is_empty() && frac.bytes().all(|c| c.is_ascii_digit()) => {
                let digits: BigInt = format!("{int}{frac}").parse().map_err(|_| bad())?;
                Ok(Rat::new(digits, num_traits::pow(BigInt::from(10), frac.len())))
            }
            Some(_) => Err(bad()),
            None => {
                let p: BigInt = token.parse().map_err(|_| bad())?;
                Ok(Rat::from_integer(p))
            }
        },
    }
}

/// Formats a rational as `p/q` with `q > 0` in lowest terms.
pub fn fmt_rat(x: &Rat) -> String {
    format!("{}/{}", x.numer(), x.denom())
}

pub fn to_f64(x: &Rat) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

/// Exact square root of a non-negative rational, if it is a rational square.
pub fn rational_sqrt(x: &Rat) -> Option<Rat> {
    if x.is_negative() {
        return None;
    }
    let (n, d) = (x.numer(), x.denom());
    let rn = n.sqrt();
    let rd = d.sqrt();
    if &(&rn * &rn) == n && &(&rd * &rd) == d {
        Some(Rat::new(rn, rd))
    } else {
        None
    }
}

pub fn zeros(rows: usize, cols: usize) -> RatMatrix {
    vec![vec![Rat::zero(); cols]; rows]
}

pub fn identity(n: usize) -> RatMatrix {
    let mut m = zeros(n, n);
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = Rat::one();
    }
    m
}

pub fn from_i64(rows: &[Vec<i64>]) -> RatMatrix {
    rows.iter().map(|r| r.iter().map(|&x| rat(x)).collect()).collect()
}

pub fn transpose(a: &RatMatrix) -> RatMatrix {
    if a.is_empty() {
        return Vec::new();
    }
    let (r, c) = (a.len(), a[0].len());
    (0..c).map(|j| (0..r).map(|i| a[i][j].clone()).collect()).collect()
}

pub fn mul(a: &RatMatrix, b: &RatMatrix) -> RatMatrix {
    let n = a.len();
    let k = b.len();
    let m = if k == 0 { 0 } else { b[0].len() };
    let mut out = zeros(n, m);
    for i in 0..n {
        for l in 0..k {
            if a[i][l].is_zero() {
                continue;
            }
            for j in 0..m {
                out[i][j] += &a[i][l] * &b[l][j];
            }
        }
    }
    out
}

pub fn mat_vec(a: &RatMatrix, v: &[Rat]) -> Vec<Rat> {
    a.iter()
        .map(|row| row.iter().zip(v).map(|(x, y)| x * y).sum())
        .collect()
}

pub fn dot(a: &[Rat], b: &[Rat]) -> Rat {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Column `j` of `a`.
pub fn column(a: &RatMatrix, j: usize) -> Vec<Rat> {
    a.iter().map(|row| row[j].clone()).collect()
}

/// Builds a matrix whose columns are the given vectors.
pub fn from_columns(cols: &[Vec<Rat>]) -> RatMatrix {
    if cols.is_empty() {
        return Vec::new();
    }
    let n = cols[0].len();
    (0..n).map(|i| cols.iter().map(|c| c[i].clone()).collect()).collect()
}

/// Determinant by Gaussian elimination over the rationals.
pub fn det(a: &RatMatrix) -> Rat {
    let n = a.len();
    let mut m = a.clone();
    let mut d = Rat::one();
    for col in 0..n {
        let Some(p) = (col..n).find(|&r| !m[r][col].is_zero()) else {
            return Rat::zero();
        };
        if p != col {
            m.swap(p, col);
            d = -d;
        }
        let pivot = m[col][col].clone();
        d *= &pivot;
        for r in col + 1..n {
            if m[r][col].is_zero() {
                continue;
            }
            let f = &m[r][col] / &pivot;
            for c in col..n {
                let delta = &f * &m[col][c];
                m[r][c] -= delta;
            }
        }
    }
    d
}

/// Rank by Gaussian elimination.
pub fn rank(a: &RatMatrix) -> usize {
    let rows = a.len();
    if rows == 0 {
        return 0;
    }
    let cols = a[0].len();
    let mut m = a.clone();
    let mut r = 0;
    for c in 0..cols {
        let Some(p) = (r..rows).find(|&i| !m[i][c].is_zero()) else {
            continue;
        };
        m.swap(p, r);
        let pivot = m[r][c].clone();
        for i in r + 1..rows {
            if m[i][c].is_zero() {
                continue;
            }
            let f = &m[i][c] / &pivot;
            for j in c..cols {
                let delta = &f * &m[r][j];
                m[i][j] -= delta;
            }
        }
        r += 1;
        if r == rows {
            break;
        }
    }
    r
}

/// Inverse by Gauss-Jordan elimination; `None` when singular.
pub fn inverse(a: &RatMatrix) -> Option<RatMatrix> {
    let n = a.len();
    let mut m = a.clone();
    let mut inv = identity(n);
    for col in 0..n {
        let p = (col..n).find(|&r| !m[r][col].is_zero())?;
        m.swap(p, col);
        inv.swap(p, col);
        let pivot = m[col][col].clone();
        for c in 0..n {
            m[col][c] /= &pivot;
            inv[col][c] /= &pivot;
        }
        for r in 0..n {
            if r == col || m[r][col].is_zero() {
                continue;
            }
            let f = m[r][col].clone();
            for c in 0..n {
                let dm = &f * &m[col][c];
                m[r][c] -= dm;
                let di = &f * &inv[col][c];
                inv[r][c] -= di;
            }
        }
    }
    Some(inv)
}

pub fn to_dmatrix(a: &RatMatrix) -> DMatrix<f64> {
    let r = a.len();
    let c = if r == 0 { 0 } else { a[0].len() };
    DMatrix::from_fn(r, c, |i, j| to_f64(&a[i][j]))
}

/// Least common multiple of the denominators of the entries.
pub fn common_denominator<'a>(entries: impl IntoIterator<Item = &'a Rat>) -> BigInt {
    entries
        .into_iter()
        .fold(BigInt::one(), |acc, x| num_integer::lcm(acc, x.denom().clone()))
}

pub fn abs(x: &Rat) -> Rat {
    x.abs()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_format_round_trip() {
        let x = parse_rat("-6/4").unwrap();
        assert_eq!(fmt_rat(&x), "-3/2");
        assert_eq!(parse_rat("7").unwrap(), rat(7));
        assert!(parse_rat("1/0").is_err());
        assert!(parse_rat("x").is_err());
        assert_eq!(fmt_rat(&parse_rat("0.99").unwrap()), "99/100");
        assert_eq!(fmt_rat(&parse_rat("-0.25").unwrap()), "-1/4");
        assert!(parse_rat("1.").is_err());
        assert!(parse_rat("1.2.3").is_err());
    }

    #[test]
    fn determinant_and_inverse() {
        let a = from_i64(&[vec![2, 1, 0], vec![1, 3, 1], vec![0, 1, 4]]);
        assert_eq!(det(&a), rat(18));
        let inv = inverse(&a).unwrap();
        assert_eq!(mul(&a, &inv), identity(3));
        let sing = from_i64(&[vec![1, 2], vec![2, 4]]);
        assert!(inverse(&sing).is_none());
        assert_eq!(rank(&sing), 1);
    }

    #[test]
    fn rational_square_roots() {
        assert_eq!(rational_sqrt(&ratio(9, 4)), Some(ratio(3, 2)));
        assert_eq!(rational_sqrt(&ratio(1, 3)), None);
        assert_eq!(rational_sqrt(&rat(-1)), None);
    }
}

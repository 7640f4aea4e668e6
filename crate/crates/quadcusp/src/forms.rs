//! Exact symmetric rational forms, their isotropic vectors, and the suspension
//! `L_q = x_{n+1}^2 - q(x)` attached to a quadric `q(x) = 1`.

use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rational::{self, Rat, RatMatrix};

pub use crate::frame::witt_frame;

/// A symmetric matrix with exact rational entries, read as the quadratic form
/// `x -> x^T M x` and the bilinear form `(x, y) -> x^T M y`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RatSymForm {
    entries: RatMatrix,
    det: Rat,
    signature: (usize, usize),
}

impl RatSymForm {
    pub fn new(entries: RatMatrix) -> Result<Self> {
        let s = entries.len();
        if s == 0 {
            return Err(Error::InvalidParameter("form of dimension zero".into()));
        }
        for (i, row) in entries.iter().enumerate() {
            if row.len() != s {
                return Err(Error::DimensionMismatch { expected: s, got: row.len() });
            }
            for j in 0..i {
                if entries[i][j] != entries[j][i] {
                    return Err(Error::NotSymmetric(i, j));
                }
            }
        }
        let det = rational::det(&entries);
        let (_, diag) = congruence_diagonalize(&entries);
        let pos = diag.iter().filter(|d| d.is_positive()).count();
        let neg = diag.iter().filter(|d| d.is_negative()).count();
        Ok(Self { entries, det, signature: (pos, neg) })
    }

    pub fn from_i64(rows: &[Vec<i64>]) -> Result<Self> {
        Self::new(rational::from_i64(rows))
    }

    pub fn diagonal(diag: &[Rat]) -> Self {
        let mut m = rational::zeros(diag.len(), diag.len());
        for (i, d) in diag.iter().enumerate() {
            m[i][i] = d.clone();
        }
        Self::new(m).expect("diagonal matrices are symmetric")
    }

    pub fn identity(s: usize) -> Self {
        Self::diagonal(&vec![Rat::one(); s])
    }

    /// The normal form `2x_1x_s + ... + 2x_l x_{s-l+1} + eps(x_{l+1}^2 + ... + x_{s-l}^2)`
    /// of signature `(pos, neg)`, where `l = min(pos, neg)` and `eps` is the sign of `pos - neg`.
    pub fn normal_form(pos: usize, neg: usize) -> Self {
        let s = pos + neg;
        let l = pos.min(neg);
        let eps = if pos >= neg { Rat::one() } else { -Rat::one() };
        let mut m = rational::zeros(s, s);
        for i in 0..l {
            m[i][s - 1 - i] = Rat::one();
            m[s - 1 - i][i] = Rat::one();
        }
        for (i, row) in m.iter_mut().enumerate().take(s - l).skip(l) {
            row[i] = eps.clone();
        }
        Self::new(m).expect("normal form is symmetric")
    }

    pub fn dim(&self) -> usize {
        self.entries.len()
    }

    pub fn entries(&self) -> &RatMatrix {
        &self.entries
    }

    pub fn entry(&self, i: usize, j: usize) -> &Rat {
        &self.entries[i][j]
    }

    pub fn det(&self) -> &Rat {
        &self.det
    }

    pub fn signature(&self) -> (usize, usize) {
        self.signature
    }

    pub fn is_nondegenerate(&self) -> bool {
        !self.det.is_zero()
    }

    pub fn is_definite(&self) -> bool {
        let (p, n) = self.signature;
        self.is_nondegenerate() && (p == 0 || n == 0)
    }

    /// `v^T M v` on a rational vector.
    pub fn eval(&self, v: &[Rat]) -> Result<Rat> {
        self.bilinear(v, v)
    }

    /// `v^T M w` on rational vectors.
    pub fn bilinear(&self, v: &[Rat], w: &[Rat]) -> Result<Rat> {
        let s = self.dim();
        for x in [v, w] {
            if x.len() != s {
                return Err(Error::DimensionMismatch { expected: s, got: x.len() });
            }
        }
        let mut acc = Rat::zero();
        for i in 0..s {
            if v[i].is_zero() {
                continue;
            }
            let row: Rat = (0..s)
                .filter(|&j| !w[j].is_zero())
                .map(|j| &self.entries[i][j] * &w[j])
                .sum();
            acc += &v[i] * row;
        }
        Ok(acc)
    }

    pub fn eval_int(&self, v: &[i64]) -> Result<Rat> {
        let r = to_rat_vec(v);
        self.eval(&r)
    }

    pub fn bilinear_int(&self, v: &[i64], w: &[i64]) -> Result<Rat> {
        self.bilinear(&to_rat_vec(v), &to_rat_vec(w))
    }

    /// The congruent form `B^T M B`.
    pub fn congruent(&self, b: &RatMatrix) -> Result<Self> {
        if b.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: b.len() });
        }
        let bt = rational::transpose(b);
        Self::new(rational::mul(&bt, &rational::mul(&self.entries, b)))
    }

    pub fn to_dmatrix(&self) -> nalgebra::DMatrix<f64> {
        rational::to_dmatrix(&self.entries)
    }

    /// Least common multiple of the denominators of the diagonal entries and of twice the
    /// off-diagonal entries, so that the form maps integer vectors into `(1/N) Z`.
    pub fn value_denominator(&self) -> BigInt {
        let s = self.dim();
        let two = Rat::from_integer(BigInt::from(2));
        let mut terms = Vec::new();
        for i in 0..s {
            terms.push(self.entries[i][i].clone());
            for j in i + 1..s {
                terms.push(&self.entries[i][j] * &two);
            }
        }
        rational::common_denominator(terms.iter())
    }

    /// The matrix scaled by the common denominator of all entries, as `i128`.
    pub fn integer_matrix(&self) -> (Vec<Vec<i128>>, i128) {
        let n = rational::common_denominator(self.entries.iter().flatten());
        let scale = Rat::from_integer(n.clone());
        let m = self
            .entries
            .iter()
            .map(|row| {
                row.iter()
                    .map(|x| (x * &scale).to_integer().to_i128().expect("entry fits in i128"))
                    .collect()
            })
            .collect();
        (m, n.to_i128().expect("denominator fits in i128"))
    }

    /// Reads the text format: the dimension followed by the upper-triangular entries in
    /// row-major order, each a `p/q` token. `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self> {
        let mut tokens = text
            .lines()
            .map(|l| l.split('#').next().unwrap_or(""))
            .flat_map(|l| l.split_whitespace())
            .map(str::to_owned);
        let s: usize = tokens
            .next()
            .ok_or_else(|| Error::Parse("missing dimension".into()))?
            .parse()
            .map_err(|_| Error::Parse("bad dimension".into()))?;
        if s == 0 {
            return Err(Error::Parse("dimension must be positive".into()));
        }
        let mut m = rational::zeros(s, s);
        for i in 0..s {
            for j in i..s {
                let tok = tokens
                    .next()
                    .ok_or_else(|| Error::Parse(format!("missing entry ({i}, {j})")))?;
                let x = rational::parse_rat(&tok)?;
                m[i][j] = x.clone();
                m[j][i] = x;
            }
        }
        if let Some(extra) = tokens.next() {
            return Err(Error::Parse(format!("unexpected trailing token '{extra}'")));
        }
        Self::new(m)
    }

    pub fn to_text(&self) -> String {
        let s = self.dim();
        let mut out = format!("{s}\n");
        for i in 0..s {
            let row: Vec<String> = (i..s).map(|j| rational::fmt_rat(&self.entries[i][j])).collect();
            out.push_str(&row.join(" "));
            out.push('\n');
        }
        out
    }
}

impl fmt::Display for RatSymForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_text())
    }
}

impl Serialize for RatSymForm {
    fn serialize<S: serde::Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeStruct;
        let rows: Vec<Vec<String>> = self
            .entries
            .iter()
            .map(|r| r.iter().map(rational::fmt_rat).collect())
            .collect();
        let mut st = ser.serialize_struct("RatSymForm", 4)?;
        st.serialize_field("dim", &self.dim())?;
        st.serialize_field("entries", &rows)?;
        st.serialize_field("det", &rational::fmt_rat(&self.det))?;
        st.serialize_field("signature", &self.signature)?;
        st.end()
    }
}

impl<'de> Deserialize<'de> for RatSymForm {
    fn deserialize<D: serde::Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Raw {
            entries: Vec<Vec<String>>,
        }
        let raw = Raw::deserialize(de)?;
        let m: Result<RatMatrix> = raw
            .entries
            .iter()
            .map(|r| r.iter().map(|t| rational::parse_rat(t)).collect())
            .collect();
        let m = m.map_err(serde::de::Error::custom)?;
        RatSymForm::new(m).map_err(serde::de::Error::custom)
    }
}

pub fn to_rat_vec(v: &[i64]) -> Vec<Rat> {
    v.iter().map(|&x| rational::rat(x)).collect()
}

/// Exact congruence diagonalization: returns `(P, d)` with `P^T M P = diag(d)`.
pub fn congruence_diagonalize(m: &RatMatrix) -> (RatMatrix, Vec<Rat>) {
    let n = m.len();
    let mut a = m.clone();
    let mut p = rational::identity(n);

    // Adds `f` times column/row `src` into column/row `dst`, keeping `a` symmetric.
    let add = |a: &mut RatMatrix, p: &mut RatMatrix, dst: usize, src: usize, f: &Rat| {
        for row in a.iter_mut() {
            let delta = f * &row[src];
            row[dst] += delta;
        }
        let src_row = a[src].clone();
        for (c, x) in src_row.iter().enumerate() {
            a[dst][c] += f * x;
        }
        for row in p.iter_mut() {
            let delta = f * &row[src];
            row[dst] += delta;
        }
    };

    for k in 0..n {
        if a[k][k].is_zero() {
            if let Some(j) = (k + 1..n).find(|&j| !a[j][j].is_zero()) {
                a.swap(k, j);
                for row in a.iter_mut() {
                    row.swap(k, j);
                }
                for row in p.iter_mut() {
                    row.swap(k, j);
                }
            } else if let Some(j) = (k + 1..n).find(|&j| !a[k][j].is_zero()) {
                add(&mut a, &mut p, k, j, &Rat::one());
            } else {
                continue;
            }
        }
        let pivot = a[k][k].clone();
        for i in k + 1..n {
            if a[i][k].is_zero() {
                continue;
            }
            let f = -(&a[i][k] / &pivot);
            add(&mut a, &mut p, i, k, &f);
        }
    }
    let d = (0..n).map(|i| a[i][i].clone()).collect();
    (p, d)
}

/// Signature `(pos, neg)` of a symmetric rational form.
pub fn signature(f: &RatSymForm) -> (usize, usize) {
    f.signature()
}

/// `v^T M_f w` exactly.
pub fn eval_bilinear(f: &RatSymForm, v: &[Rat], w: &[Rat]) -> Result<Rat> {
    f.bilinear(v, w)
}

/// The suspended form `L_q(x, x_{n+1}) = x_{n+1}^2 - q(x)`.
pub fn suspend_form(q: &RatSymForm) -> Result<RatSymForm> {
    if !q.is_nondegenerate() {
        return Err(Error::Degenerate);
    }
    let n = q.dim();
    let mut m = rational::zeros(n + 1, n + 1);
    for i in 0..n {
        for j in 0..n {
            m[i][j] = -q.entry(i, j).clone();
        }
    }
    m[n][n] = Rat::one();
    RatSymForm::new(m)
}

/// Recovers `q` from a suspension `x_{n+1}^2 - q(x)`.
pub fn desuspend_form(l: &RatSymForm) -> Result<RatSymForm> {
    let s = l.dim();
    if s < 2 {
        return Err(Error::InvalidParameter("suspension needs dimension at least 2".into()));
    }
    let n = s - 1;
    if !l.entry(n, n).is_one() || (0..n).any(|i| !l.entry(i, n).is_zero()) {
        return Err(Error::InvalidParameter("form is not of the shape x_{n+1}^2 - q(x)".into()));
    }
    RatSymForm::new((0..n).map(|i| (0..n).map(|j| -l.entry(i, j).clone()).collect()).collect())
}

/// A primitive integer vector on the isotropic cone of a form, normalized so that its last
/// nonzero coordinate is positive.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct IsotropicVector {
    coords: Vec<i64>,
}

impl IsotropicVector {
    /// Validates isotropy and primitivity, and normalizes the orientation.
    pub fn new(coords: Vec<i64>, form: &RatSymForm) -> Result<Self> {
        if coords.len() != form.dim() {
            return Err(Error::DimensionMismatch { expected: form.dim(), got: coords.len() });
        }
        if coords.iter().all(|&c| c == 0) {
            return Err(Error::ZeroVector);
        }
        let g = coords.iter().fold(0i64, |g, &c| g.gcd(&c));
        if g != 1 {
            return Err(Error::NotPrimitive(g.to_string()));
        }
        if !form.eval_int(&coords)?.is_zero() {
            return Err(Error::NotIsotropic);
        }
        Ok(Self { coords: normalize_orientation(coords) })
    }

    /// Wraps coordinates already known to satisfy the invariants of this type.
    pub(crate) fn trusted(coords: Vec<i64>) -> Self {
        Self { coords }
    }

    pub fn coords(&self) -> &[i64] {
        &self.coords
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    /// Max-norm height.
    pub fn height(&self) -> i64 {
        self.coords.iter().map(|c| c.abs()).max().unwrap_or(0)
    }

    /// Euclidean norm.
    pub fn eheight(&self) -> f64 {
        self.coords.iter().map(|&c| (c as f64) * (c as f64)).sum::<f64>().sqrt()
    }

    pub fn to_rat(&self) -> Vec<Rat> {
        to_rat_vec(&self.coords)
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.coords.iter().map(|&c| c as f64).collect()
    }

    /// The last coordinate, which is the denominator `q` for points `(p, q)` of a quadric.
    pub fn last(&self) -> i64 {
        *self.coords.last().expect("nonempty")
    }
}

/// Flips the sign so that the last nonzero coordinate is positive.
pub fn normalize_orientation(mut coords: Vec<i64>) -> Vec<i64> {
    if let Some(&last) = coords.iter().rev().find(|&&c| c != 0) {
        if last < 0 {
            for c in coords.iter_mut() {
                *c = -*c;
            }
        }
    }
    coords
}

fn is_normalized(coords: &[i64]) -> bool {
    coords.iter().rev().find(|&&c| c != 0).is_some_and(|&c| c > 0)
}

/// Evaluates an integer form matrix on an integer vector.
pub(crate) fn eval_i128(m: &[Vec<i128>], v: &[i64]) -> i128 {
    let s = v.len();
    let mut acc = 0i128;
    for i in 0..s {
        if v[i] == 0 {
            continue;
        }
        let vi = v[i] as i128;
        acc += m[i][i] * vi * vi;
        for j in i + 1..s {
            acc += 2 * m[i][j] * vi * v[j] as i128;
        }
    }
    acc
}

/// Advances `v` through the box `[-h, h]^s` in lexicographic order.
pub(crate) fn next_in_box(v: &mut [i64], h: i64) -> bool {
    for i in (0..v.len()).rev() {
        if v[i] < h {
            v[i] += 1;
            return true;
        }
        v[i] = -h;
    }
    false
}

/// The smallest-height primitive isotropic vector with height at most `height_bound`.
///
/// Within one height, normalized candidates are ordered lexicographically and the largest is
/// returned, so that `diag(-1,-1,-1,1)` yields `(1,0,0,1)`.
pub fn find_isotropic_seed(l: &RatSymForm, height_bound: i64) -> Result<Option<IsotropicVector>> {
    if !l.is_nondegenerate() {
        return Err(Error::Degenerate);
    }
    if l.is_definite() {
        return Ok(None);
    }
    let (m, _) = l.integer_matrix();
    let s = l.dim();
    for h in 1..=height_bound {
        let mut best: Option<Vec<i64>> = None;
        let mut v = vec![-h; s];
        loop {
            let on_shell = v.iter().any(|c| c.abs() == h);
            if on_shell
                && is_normalized(&v)
                && eval_i128(&m, &v) == 0
                && v.iter().fold(0i64, |g, &c| g.gcd(&c)) == 1
                && best.as_ref().is_none_or(|b| v > *b)
            {
                best = Some(v.clone());
            }
            if !next_in_box(&mut v, h) {
                break;
            }
        }
        if let Some(b) = best {
            return Ok(Some(IsotropicVector::trusted(b)));
        }
    }
    Ok(None)
}

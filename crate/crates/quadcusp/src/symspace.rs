//! Geometry of the symmetric spaces `P_s` and `P_s(L)`.
//!
//! Points are positive-definite forms. The metric is `d = sqrt(sum ln^2 lambda_i)` over the
//! eigenvalues of one form relative to the other. Forms built as `B^T diag(e) B` keep their
//! factorization, so that distances to far-out points along diagonal rays are computed from a
//! graded matrix with high relative accuracy.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::ser::SerializeStruct;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::forms::RatSymForm;
use crate::json::Real;
use crate::rational::{self, Rat};

pub const SYMMETRY_TOL: f64 = 1e-12;
pub const DET_TOL: f64 = 1e-9;

const SQRT2: f64 = std::f64::consts::SQRT_2;

#[derive(Clone, Debug)]
struct DiagFactor {
    diag: Vec<f64>,
    basis: DMatrix<f64>,
}

/// A real positive-definite symmetric form with a fixed determinant target.
#[derive(Clone, Debug)]
pub struct PosDefForm {
    m: DMatrix<f64>,
    det_target: f64,
    factor: Option<DiagFactor>,
}

impl PosDefForm {
    /// Checks the matrix is a symmetric positive form with determinant `det_target`.
    pub fn new(m: DMatrix<f64>, det_target: f64) -> Result<Self> {
        let s = m.nrows();
        if m.ncols() != s {
            return Err(Error::DimensionMismatch { expected: s, got: m.ncols() });
        }
        let scale = m.amax().max(f64::MIN_POSITIVE);
        for i in 0..s {
            for j in 0..i {
                if (m[(i, j)] - m[(j, i)]).abs() > SYMMETRY_TOL * scale {
                    return Err(Error::NotSymmetric(i, j));
                }
            }
        }
        let sym = (&m + m.transpose()) * 0.5;
        let chol = sym.clone().cholesky().ok_or(Error::NotPositiveDefinite)?;
        let det: f64 = chol.l().diagonal().iter().map(|x| x * x).product();
        check_det(det, det_target)?;
        Ok(Self { m: sym, det_target, factor: None })
    }

    /// A point of `P_s`: determinant one.
    pub fn unimodular(m: DMatrix<f64>) -> Result<Self> {
        Self::new(m, 1.0)
    }

    /// The form `B^T diag(diag) B`, with determinant `prod(diag) det(B)^2` checked against the
    /// target without forming the (possibly badly conditioned) matrix product first.
    pub fn from_diagonal_congruence(diag: Vec<f64>, basis: DMatrix<f64>, det_target: f64) -> Result<Self> {
        let s = diag.len();
        if basis.nrows() != s || basis.ncols() != s {
            return Err(Error::DimensionMismatch { expected: s, got: basis.nrows() });
        }
        if diag.iter().any(|&d| !(d > 0.0) || !d.is_finite()) {
            return Err(Error::NotPositiveDefinite);
        }
        let det_b = basis.clone().lu().determinant();
        if det_b == 0.0 || !det_b.is_finite() {
            return Err(Error::NotPositiveDefinite);
        }
        let ln_det = diag.iter().map(|d| d.ln()).sum::<f64>() + 2.0 * det_b.abs().ln();
        if (ln_det - det_target.ln()).abs() > DET_TOL {
            return Err(Error::DeterminantMismatch { got: ln_det.exp(), target: det_target });
        }
        let d = DMatrix::from_diagonal(&DVector::from_vec(diag.clone()));
        let m = basis.transpose() * d * &basis;
        let m = (&m + m.transpose()) * 0.5;
        Ok(Self { m, det_target, factor: Some(DiagFactor { diag, basis }) })
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.m
    }

    pub fn det_target(&self) -> f64 {
        self.det_target
    }

    /// `Q(v)`.
    pub fn eval(&self, v: &[f64]) -> f64 {
        match &self.factor {
            Some(f) => {
                let bv = &f.basis * DVector::from_column_slice(v);
                f.diag.iter().zip(bv.iter()).map(|(d, x)| d * x * x).sum()
            }
            None => {
                let v = DVector::from_column_slice(v);
                v.dot(&(&self.m * &v))
            }
        }
    }

    /// The form `Q[B] = B^T Q B`, whose determinant target scales by `det(B)^2`.
    pub fn act(&self, b: &DMatrix<f64>) -> Result<Self> {
        let det_b = b.clone().lu().determinant();
        let target = self.det_target * det_b * det_b;
        match &self.factor {
            Some(f) => Self::from_diagonal_congruence(f.diag.clone(), &f.basis * b, target),
            None => {
                let m = b.transpose() * &self.m * b;
                let m = (&m + m.transpose()) * 0.5;
                Self::new(m, target)
            }
        }
    }

    /// The dual form, with matrix the inverse matrix.
    pub fn dual(&self) -> Self {
        let inv = self.m.clone().cholesky().expect("positive definite").inverse();
        let inv = (&inv + inv.transpose()) * 0.5;
        let factor = self.factor.as_ref().and_then(|f| {
            let binv = f.basis.clone().try_inverse()?;
            Some(DiagFactor { diag: f.diag.iter().map(|d| 1.0 / d).collect(), basis: binv.transpose() })
        });
        Self { m: inv, det_target: 1.0 / self.det_target, factor }
    }

    /// Determinant of the restriction to the span of the last `i` basis vectors.
    pub fn restricted_det(&self, i: usize) -> f64 {
        let s = self.dim();
        let block = self.m.view((s - i, s - i), (i, i)).into_owned();
        match block.clone().cholesky() {
            Some(c) => c.l().diagonal().iter().map(|x| x * x).product(),
            None => block.determinant(),
        }
    }

    /// In the coordinates where the factorized form is diagonal, returns `(diag, K^T D1 K)` for
    /// the other form, as needed for a graded relative eigenproblem.
    fn graded_pair(&self, other: &PosDefForm) -> Option<DMatrix<f64>> {
        let f = self.factor.as_ref()?;
        let binv = f.basis.clone().try_inverse()?;
        let other_in = match &other.factor {
            Some(g) => {
                let k = &g.basis * &binv;
                let d = DMatrix::from_diagonal(&DVector::from_vec(g.diag.clone()));
                k.transpose() * d * k
            }
            None => binv.transpose() * &other.m * &binv,
        };
        let s = self.dim();
        let sq: Vec<f64> = f.diag.iter().map(|d| d.sqrt()).collect();
        Some(DMatrix::from_fn(s, s, |i, j| other_in[(i, j)] / (sq[i] * sq[j])))
    }
}

impl Serialize for PosDefForm {
    fn serialize<S: serde::Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        let rows: Vec<Vec<Real>> = (0..self.dim())
            .map(|i| (0..self.dim()).map(|j| Real(self.m[(i, j)])).collect())
            .collect();
        let mut st = ser.serialize_struct("PosDefForm", 3)?;
        st.serialize_field("dim", &self.dim())?;
        st.serialize_field("entries", &rows)?;
        st.serialize_field("det_target", &Real(self.det_target))?;
        st.end()
    }
}

fn check_det(det: f64, target: f64) -> Result<()> {
    if !(target > 0.0) || ((det - target) / target).abs() > DET_TOL {
        return Err(Error::DeterminantMismatch { got: det, target });
    }
    Ok(())
}

/// Eigenvalues of a symmetric positive-definite matrix by cyclic two-sided Jacobi rotations.
///
/// The stopping rule compares each off-diagonal entry with the geometric mean of the two
/// diagonal entries, which keeps small eigenvalues of graded matrices `D A D` accurate to
/// working precision relative to their own size.
pub fn jacobi_eigenvalues(a: &DMatrix<f64>) -> Vec<f64> {
    let n = a.nrows();
    let mut m = a.clone();
    for _sweep in 0..100 {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[(p, q)];
                let app = m[(p, p)];
                let aqq = m[(q, q)];
                if apq == 0.0 || apq.abs() <= 1e-17 * (app.abs() * aqq.abs()).sqrt() {
                    continue;
                }
                rotated = true;
                let theta = (aqq - app) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let sn = t * c;
                for k in 0..n {
                    let mkp = m[(k, p)];
                    let mkq = m[(k, q)];
                    m[(k, p)] = c * mkp - sn * mkq;
                    m[(k, q)] = sn * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[(p, k)];
                    let mqk = m[(q, k)];
                    m[(p, k)] = c * mpk - sn * mqk;
                    m[(q, k)] = sn * mpk + c * mqk;
                }
                m[(p, q)] = 0.0;
                m[(q, p)] = 0.0;
            }
        }
        if !rotated {
            break;
        }
    }
    (0..n).map(|i| m[(i, i)]).collect()
}

/// Riemannian distance `sqrt(sum ln^2 lambda_i)` between two points.
pub fn distance(q1: &PosDefForm, q2: &PosDefForm) -> Result<f64> {
    if q1.dim() != q2.dim() {
        return Err(Error::DimensionMismatch { expected: q1.dim(), got: q2.dim() });
    }
    if ((q1.det_target - q2.det_target) / q1.det_target).abs() > DET_TOL {
        return Err(Error::InvalidParameter("forms lie in spaces with different determinants".into()));
    }
    let c = if let Some(c) = q2.graded_pair(q1) {
        c
    } else if let Some(c) = q1.graded_pair(q2) {
        c
    } else {
        let chol = q1.m.clone().cholesky().ok_or(Error::NotPositiveDefinite)?;
        let l = chol.l();
        let x = l.solve_lower_triangular(&q2.m).ok_or(Error::NotPositiveDefinite)?;
        let c = l
            .solve_lower_triangular(&x.transpose())
            .ok_or(Error::NotPositiveDefinite)?;
        (&c + c.transpose()) * 0.5
    };
    let eig = jacobi_eigenvalues(&c);
    if eig.iter().any(|&e| !(e > 0.0)) {
        return Err(Error::NotPositiveDefinite);
    }
    Ok(eig.iter().map(|e| e.ln().powi(2)).sum::<f64>().sqrt())
}

/// Busemann function `f_v(Q) = sqrt(2) ln Q(v)` of the horoball with basepoint the isotropic
/// line of `v`.
pub fn busemann_vector(v: &[f64], q: &PosDefForm) -> Result<f64> {
    if v.len() != q.dim() {
        return Err(Error::DimensionMismatch { expected: q.dim(), got: v.len() });
    }
    if v.iter().all(|&x| x == 0.0) {
        return Err(Error::ZeroVector);
    }
    let val = q.eval(v);
    if !(val > 0.0) {
        return Err(Error::NotPositiveDefinite);
    }
    Ok(SQRT2 * val.ln())
}

/// Busemann function of the ray `r_i` in `P_s`:
/// `sqrt(s / ((s-i) i)) ln det Q_i` with `Q_i` the restriction to the last `i` basis vectors.
pub fn busemann_ambient(i: usize, q: &PosDefForm) -> Result<f64> {
    let s = q.dim();
    if i < 1 || i + 1 > s {
        return Err(Error::IndexOutOfRange { index: i, max: s.saturating_sub(1) });
    }
    let c = (s as f64 / ((s - i) as f64 * i as f64)).sqrt();
    Ok(c * q.restricted_det(i).ln())
}

/// A unit-speed diagonal geodesic `t -> B^T diag(e^{r_1 t}, ..., e^{r_s t}) B`.
#[derive(Clone, Debug)]
pub struct DiagonalRay {
    pub rates: Vec<f64>,
    pub basis: DMatrix<f64>,
    pub det_target: f64,
}

impl DiagonalRay {
    pub fn at(&self, t: f64) -> PosDefForm {
        let diag = self.rates.iter().map(|r| (r * t).exp()).collect();
        PosDefForm::from_diagonal_congruence(diag, self.basis.clone(), self.det_target)
            .expect("ray points are positive definite")
    }

    pub fn speed(&self) -> f64 {
        self.rates.iter().map(|r| r * r).sum::<f64>().sqrt()
    }
}

/// The ray `r_i` of `P_s`: the first `s-i` diagonal entries grow like `e^{lambda_i t}` and the
/// last `i` decay like `e^{-mu_i t}`.
pub fn ambient_ray(s: usize, i: usize) -> Result<DiagonalRay> {
    if i < 1 || i + 1 > s {
        return Err(Error::IndexOutOfRange { index: i, max: s.saturating_sub(1) });
    }
    let (sf, fi) = (s as f64, i as f64);
    let lambda = (fi / (sf * (sf - fi))).sqrt();
    let mu = ((sf - fi) / (sf * fi)).sqrt();
    let mut rates = vec![lambda; s - i];
    rates.extend(std::iter::repeat_n(-mu, i));
    Ok(DiagonalRay { rates, basis: DMatrix::identity(s, s), det_target: 1.0 })
}

/// `|(d(Q, r(T)) - T) - f(Q)|`, the gap between a closed-form Busemann value and the defining
/// limit at time `T`.
pub fn busemann_limit_check(f_closed: impl Fn(&PosDefForm) -> f64, ray: &DiagonalRay, q: &PosDefForm, t: f64) -> Result<f64> {
    let d = distance(q, &ray.at(t))?;
    Ok(((d - t) - f_closed(q)).abs())
}

/// Oriented distance `2 sqrt(2) ln |b_L(v, w)|` between the horoballs at `v` and `w`.
pub fn odist(v: &[Rat], w: &[Rat], l: &RatSymForm) -> Result<f64> {
    let b = l.bilinear(v, w)?;
    if num_traits::Zero::is_zero(&b) {
        return Err(Error::NotOpposite);
    }
    Ok(2.0 * SQRT2 * rational::to_f64(&num_traits::Signed::abs(&b)).ln())
}

/// Matrix exponential by scaling and squaring of a Taylor polynomial.
pub fn expm(x: &DMatrix<f64>) -> DMatrix<f64> {
    let n = x.nrows();
    let norm = x.abs().row_sum().max();
    let mut k = 0;
    while norm / 2f64.powi(k) > 0.25 {
        k += 1;
    }
    let y = x / 2f64.powi(k);
    let mut term = DMatrix::identity(n, n);
    let mut sum = DMatrix::identity(n, n);
    for j in 1..=20 {
        term = &term * &y / j as f64;
        sum += &term;
    }
    for _ in 0..k {
        sum = &sum * &sum;
    }
    sum
}

/// A random element of `SO(L)`: the exponential of `M_L^{-1} A` with `A` antisymmetric and
/// entries of standard deviation `scale`.
pub fn random_isometry<R: Rng>(l: &DMatrix<f64>, scale: f64, rng: &mut R) -> DMatrix<f64> {
    let n = l.nrows();
    let mut a = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i + 1..n {
            let x: f64 = rng.sample::<f64, _>(StandardNormal) * scale;
            a[(i, j)] = x;
            a[(j, i)] = -x;
        }
    }
    let linv = l.clone().try_inverse().expect("nondegenerate form");
    expm(&(linv * a))
}

/// A random point of `P_s` with determinant one.
pub fn random_unimodular<R: Rng>(s: usize, scale: f64, rng: &mut R) -> PosDefForm {
    let mut a = DMatrix::zeros(s, s);
    for i in 0..s {
        for j in i..s {
            let x: f64 = rng.sample::<f64, _>(StandardNormal) * scale;
            a[(i, j)] = x;
            a[(j, i)] = x;
        }
    }
    let e = expm(&a);
    let det = e.clone().cholesky().expect("exp of symmetric is positive definite").l().diagonal().product().powi(2);
    let m = e / det.powf(1.0 / s as f64);
    PosDefForm::unimodular((&m + m.transpose()) * 0.5).expect("normalized to determinant one")
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn validation() {
        assert!(PosDefForm::unimodular(DMatrix::identity(3, 3)).is_ok());
        let neg = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -1.0]);
        assert!(PosDefForm::new(neg, 1.0).is_err());
        let asym = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.0, 1.0]);
        assert_eq!(PosDefForm::new(asym, 1.0).unwrap_err(), Error::NotSymmetric(1, 0));
        let big = DMatrix::identity(2, 2) * 2.0;
        assert!(matches!(PosDefForm::unimodular(big), Err(Error::DeterminantMismatch { .. })));
    }

    #[test]
    fn distance_examples() {
        let id = PosDefForm::unimodular(DMatrix::identity(2, 2)).unwrap();
        assert!(distance(&id, &id).unwrap().abs() < 1e-15);
        let e2 = 1f64.exp().powi(2);
        let q2 = PosDefForm::unimodular(DMatrix::from_row_slice(2, 2, &[e2, 0.0, 0.0, 1.0 / e2])).unwrap();
        // Relative eigenvalues e^2 and e^-2 give sqrt(4 + 4).
        assert!((distance(&id, &q2).unwrap() - 8f64.sqrt()).abs() < 1e-12);
        assert!((distance(&q2, &id).unwrap() - 8f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn jacobi_matches_nalgebra_on_moderate_matrices() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let q = random_unimodular(4, 0.7, &mut rng);
            let mut ours = jacobi_eigenvalues(q.matrix());
            let mut theirs: Vec<f64> = q.matrix().clone().symmetric_eigen().eigenvalues.iter().copied().collect();
            ours.sort_by(f64::total_cmp);
            theirs.sort_by(f64::total_cmp);
            for (a, b) in ours.iter().zip(&theirs) {
                assert!((a - b).abs() < 1e-12 * b.abs().max(1.0));
            }
        }
    }

    #[test]
    fn graded_distance_matches_closed_form() {
        // d(I, diag(e^{a t}, e^{-a t})) = sqrt(2) a t, even when t is large.
        let ray = DiagonalRay { rates: vec![0.5f64.sqrt(), -(0.5f64.sqrt())], basis: DMatrix::identity(2, 2), det_target: 1.0 };
        let id = PosDefForm::unimodular(DMatrix::identity(2, 2)).unwrap();
        for t in [1.0, 10.0, 40.0, 80.0] {
            assert!((distance(&id, &ray.at(t)).unwrap() - t).abs() < 1e-12 * t);
        }
        assert!((ray.speed() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn busemann_examples() {
        let id = PosDefForm::unimodular(DMatrix::identity(3, 3)).unwrap();
        for i in 1..3 {
            assert_eq!(busemann_ambient(i, &id).unwrap(), 0.0);
        }
        assert!(busemann_ambient(0, &id).is_err());
        assert!(busemann_ambient(3, &id).is_err());
        let lam = 3.0;
        let q = PosDefForm::unimodular(DMatrix::from_row_slice(2, 2, &[lam, 0.0, 0.0, 1.0 / lam])).unwrap();
        assert!((busemann_ambient(1, &q).unwrap() - SQRT2 * (1.0 / lam).ln()).abs() < 1e-14);
        assert_eq!(busemann_vector(&[0.0, 0.0], &q), Err(Error::ZeroVector));
        let v = [0.3, 0.7];
        let v2 = [0.6, 1.4];
        let diff = busemann_vector(&v2, &q).unwrap() - busemann_vector(&v, &q).unwrap();
        assert!((diff - 2.0 * SQRT2 * 2f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn ambient_rays_have_unit_speed_and_unit_determinant() {
        for s in 2..6 {
            for i in 1..s {
                let r = ambient_ray(s, i).unwrap();
                assert!((r.speed() - 1.0).abs() < 1e-14);
                assert!(r.rates.iter().sum::<f64>().abs() < 1e-14);
                let q = r.at(1.7);
                assert!((busemann_ambient(i, &q).unwrap() + 1.7).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn limit_check_on_the_ray_is_zero() {
        let r = ambient_ray(3, 1).unwrap();
        let q = r.at(2.0);
        for t in [2.0, 5.0, 40.0] {
            let dev = busemann_limit_check(|x| busemann_ambient(1, x).unwrap(), &r, &q, t).unwrap();
            assert!(dev < 1e-12);
        }
    }

    #[test]
    fn dual_and_action() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let q = random_unimodular(3, 0.5, &mut rng);
        let d = q.dual();
        let prod = q.matrix() * d.matrix();
        assert!((prod - DMatrix::identity(3, 3)).amax() < 1e-12);
        let b = DMatrix::from_row_slice(3, 3, &[1.0, 2.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0]);
        let qb = q.act(&b).unwrap();
        let v = [0.2, -0.4, 1.0];
        let bv = &b * DVector::from_column_slice(&v);
        assert!((qb.eval(&v) - q.eval(bv.as_slice())).abs() < 1e-12);
    }

    #[test]
    fn odist_examples() {
        let l0 = RatSymForm::normal_form(2, 2);
        let e1 = crate::forms::to_rat_vec(&[1, 0, 0, 0]);
        let e4 = crate::forms::to_rat_vec(&[0, 0, 0, 1]);
        let two_e4 = crate::forms::to_rat_vec(&[0, 0, 0, 2]);
        assert_eq!(odist(&e1, &e4, &l0).unwrap(), 0.0);
        assert!((odist(&e1, &two_e4, &l0).unwrap() - 2.0 * SQRT2 * 2f64.ln()).abs() < 1e-14);
        assert_eq!(odist(&e1, &e1, &l0), Err(Error::NotOpposite));
    }

    #[test]
    fn isometries_preserve_the_form() {
        let l = RatSymForm::normal_form(2, 2).to_dmatrix();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let g = random_isometry(&l, 0.4, &mut rng);
        assert!((g.transpose() * &l * &g - &l).amax() < 1e-12);
    }
}

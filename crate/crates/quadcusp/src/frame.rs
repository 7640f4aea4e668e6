//! Witt frames: a basis `{v0, w_1, ..., w_{s-2}, w}` in which the form becomes the normal form
//! `2x_1x_s + ... + eps(x_{l+1}^2 + ...)`, together with the geodesic joining the lines of `v0`
//! and `w` and the unipotent chart on the isotropic cone.

use nalgebra::{DMatrix, DVector};
use num_traits::{One, Signed, Zero};
use serde::ser::SerializeStruct;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::forms::{IsotropicVector, RatSymForm};
use crate::json::Real;
use crate::rational::{self, Rat, RatMatrix};
use crate::symspace::{DiagonalRay, PosDefForm};

const SQRT2: f64 = std::f64::consts::SQRT_2;

/// A Witt basis adapted to an isotropic vector `v0`.
#[derive(Clone, Debug)]
pub struct CuspFrame {
    form: RatSymForm,
    v0: IsotropicVector,
    w: Vec<Rat>,
    normal_form: RatSymForm,
    middle_real: DMatrix<f64>,
    basis_exact: Option<RatMatrix>,
    pi: DMatrix<f64>,
    pi_inv: DMatrix<f64>,
    det_abs: f64,
}

/// A scalar coefficient in the middle block: exact when the needed square roots are rational.
#[derive(Clone, Debug)]
enum Coef {
    Exact(Rat),
    Real(f64),
}

impl Coef {
    fn to_f64(&self) -> f64 {
        match self {
            Coef::Exact(r) => rational::to_f64(r),
            Coef::Real(x) => *x,
        }
    }

    fn mul(&self, other: &Coef) -> Coef {
        match (self, other) {
            (Coef::Exact(a), Coef::Exact(b)) => Coef::Exact(a * b),
            _ => Coef::Real(self.to_f64() * other.to_f64()),
        }
    }

    fn neg(&self) -> Coef {
        match self {
            Coef::Exact(a) => Coef::Exact(-a.clone()),
            Coef::Real(x) => Coef::Real(-x),
        }
    }
}

/// `1 / sqrt|d|`, exactly when `|d|` is a rational square.
fn inv_sqrt_abs(d: &Rat) -> Coef {
    match rational::rational_sqrt(&d.abs()) {
        Some(r) => Coef::Exact(Rat::one() / r),
        None => Coef::Real(1.0 / rational::to_f64(&d.abs()).sqrt()),
    }
}

/// Builds the `m x m` matrix `T` sending the Gram matrix `g` of the middle block to the middle
/// normal form: diagonalize, pair one positive with one negative direction into each
/// hyperbolic plane (rationally whenever the ratio of the two values is a rational square),
/// and rescale the remaining directions to `eps`.
fn middle_transform(g: &RatMatrix, target: &RatSymForm) -> (Option<RatMatrix>, DMatrix<f64>) {
    let m = g.len();
    if g == target.entries() {
        return (Some(rational::identity(m)), DMatrix::identity(m, m));
    }
    let (p, d) = crate::forms::congruence_diagonalize(g);
    let pos: Vec<usize> = (0..m).filter(|&i| d[i].is_positive()).collect();
    let neg: Vec<usize> = (0..m).filter(|&i| d[i].is_negative()).collect();
    let n_pairs = pos.len().min(neg.len());

    // Each output column is a list of (diagonal index, coefficient).
    let mut pairs: Vec<(Vec<(usize, Coef)>, Vec<(usize, Coef)>)> = Vec::new();
    let mut used_pos = vec![false; m];
    let mut used_neg = vec![false; m];
    for &i in &pos {
        if pairs.len() == n_pairs {
            break;
        }
        for &j in &neg {
            if used_neg[j] {
                continue;
            }
            if let Some(r) = rational::rational_sqrt(&(-(&d[i] / &d[j]))) {
                // L(e_i + r e_j) = d_i + r^2 d_j = 0 and b(e_i + r e_j, e_i - r e_j) = 2 d_i.
                let half = Rat::one() / (Rat::from_integer(2.into()) * &d[i]);
                let a = vec![(i, Coef::Exact(Rat::one())), (j, Coef::Exact(r.clone()))];
                let b = vec![(i, Coef::Exact(half.clone())), (j, Coef::Exact(-(&r * &half)))];
                pairs.push((a, b));
                used_pos[i] = true;
                used_neg[j] = true;
                break;
            }
        }
    }
    let mut free_neg: Vec<usize> = neg.iter().copied().filter(|&j| !used_neg[j]).collect();
    free_neg.reverse();
    for &i in &pos {
        if pairs.len() == n_pairs {
            break;
        }
        if used_pos[i] {
            continue;
        }
        let j = free_neg.pop().expect("enough negative directions");
        let (ci, cj) = (inv_sqrt_abs(&d[i]), inv_sqrt_abs(&d[j]));
        let half = Coef::Exact(Rat::new(1.into(), 2.into()));
        let a = vec![(i, ci.clone()), (j, cj.clone())];
        let b = vec![(i, ci.mul(&half)), (j, cj.mul(&half).neg())];
        pairs.push((a, b));
        used_pos[i] = true;
        used_neg[j] = true;
    }
    let squares: Vec<Vec<(usize, Coef)>> = (0..m)
        .filter(|&i| !used_pos[i] && !used_neg[i])
        .map(|i| vec![(i, inv_sqrt_abs(&d[i]))])
        .collect();

    let mut columns: Vec<Option<Vec<(usize, Coef)>>> = vec![None; m];
    for (k, (a, b)) in pairs.into_iter().enumerate() {
        columns[k] = Some(a);
        columns[m - 1 - k] = Some(b);
    }
    for (k, sq) in squares.into_iter().enumerate() {
        columns[n_pairs + k] = Some(sq);
    }
    let columns: Vec<Vec<(usize, Coef)>> = columns.into_iter().map(|c| c.expect("every column filled")).collect();

    let exact = columns.iter().flatten().all(|(_, c)| matches!(c, Coef::Exact(_)));
    let p_real = rational::to_dmatrix(&p);
    let mut k_real = DMatrix::zeros(m, m);
    for (col, entries) in columns.iter().enumerate() {
        for (i, c) in entries {
            k_real[(*i, col)] += c.to_f64();
        }
    }
    let t_real = &p_real * &k_real;
    if exact {
        let mut k = rational::zeros(m, m);
        for (col, entries) in columns.iter().enumerate() {
            for (i, c) in entries {
                if let Coef::Exact(r) = c {
                    k[*i][col] += r;
                }
            }
        }
        (Some(rational::mul(&p, &k)), t_real)
    } else {
        (None, t_real)
    }
}

/// Completes an isotropic vector `v0` to a Witt basis in which `L` becomes its normal form.
pub fn witt_frame(l: &RatSymForm, v0: &IsotropicVector) -> Result<CuspFrame> {
    if !l.is_nondegenerate() {
        return Err(Error::Degenerate);
    }
    let s = l.dim();
    if v0.dim() != s {
        return Err(Error::DimensionMismatch { expected: s, got: v0.dim() });
    }
    if !l.eval_int(v0.coords())?.is_zero() {
        return Err(Error::NotIsotropic);
    }
    let v = v0.to_rat();
    let mv = rational::mat_vec(l.entries(), &v);
    let j = (0..s).rev().find(|&j| !mv[j].is_zero()).ok_or(Error::Degenerate)?;
    let beta = mv[j].clone();
    let ly = l.entry(j, j).clone();
    let two = Rat::from_integer(2.into());
    let coef = &ly / (&two * &beta * &beta);
    let mut w: Vec<Rat> = v.iter().map(|x| -(x * &coef)).collect();
    w[j] += Rat::one() / &beta;
    let mw = rational::mat_vec(l.entries(), &w);

    let mut order: Vec<usize> = (1..s.saturating_sub(1)).collect();
    order.push(0);
    if s > 1 {
        order.push(s - 1);
    }
    let mut spanning = vec![v.clone(), w.clone()];
    let mut middle: Vec<Vec<Rat>> = Vec::new();
    for idx in order {
        if middle.len() + 2 == s {
            break;
        }
        let bw = mw[idx].clone();
        let bv = mv[idx].clone();
        let mut x: Vec<Rat> = (0..s).map(|k| -(&bw * &v[k]) - &bv * &w[k]).collect();
        x[idx] += Rat::one();
        let mut trial = spanning.clone();
        trial.push(x.clone());
        if rational::rank(&trial) == trial.len() {
            spanning = trial;
            middle.push(x);
        }
    }
    let m = s - 2;
    let (pos, neg) = l.signature();
    let normal_form = RatSymForm::normal_form(pos, neg);

    let (mid_exact, mid_real): (Option<RatMatrix>, DMatrix<f64>) = if m == 0 {
        (Some(Vec::new()), DMatrix::zeros(s, 0))
    } else {
        let b = rational::from_columns(&middle);
        let gram = rational::mul(&rational::transpose(&b), &rational::mul(l.entries(), &b));
        let target = RatSymForm::normal_form(pos - 1, neg - 1);
        let (t_exact, t_real) = middle_transform(&gram, &target);
        match t_exact {
            Some(t) => {
                let bt = rational::mul(&b, &t);
                let real = rational::to_dmatrix(&bt);
                (Some(bt), real)
            }
            None => (None, rational::to_dmatrix(&b) * t_real),
        }
    };

    let mut pi = DMatrix::zeros(s, s);
    for i in 0..s {
        pi[(i, 0)] = rational::to_f64(&v[i]);
        pi[(i, s - 1)] = rational::to_f64(&w[i]);
        for k in 0..m {
            pi[(i, k + 1)] = mid_real[(i, k)];
        }
    }
    let (basis_exact, pi_inv) = match mid_exact {
        Some(mid) => {
            let cols: Vec<Vec<Rat>> = std::iter::once(v.clone())
                .chain((0..m).map(|k| rational::column(&mid, k)))
                .chain(std::iter::once(w.clone()))
                .collect();
            let basis = rational::from_columns(&cols);
            let check = l.congruent(&basis)?;
            if check != normal_form {
                return Err(Error::InvalidParameter("exact Witt congruence failed".into()));
            }
            let inv = rational::inverse(&basis).ok_or(Error::Degenerate)?;
            (Some(basis), rational::to_dmatrix(&inv))
        }
        None => {
            let inv = pi.clone().try_inverse().ok_or(Error::Degenerate)?;
            (None, inv)
        }
    };
    let middle_real = if m == 0 {
        DMatrix::zeros(0, 0)
    } else {
        RatSymForm::normal_form(pos - 1, neg - 1).to_dmatrix()
    };
    let det_abs = rational::to_f64(&l.det().abs());
    let frame = CuspFrame { form: l.clone(), v0: v0.clone(), w, normal_form, middle_real, basis_exact, pi, pi_inv, det_abs };
    if frame.basis_exact.is_none() && frame.congruence_residual() > 1e-10 {
        return Err(Error::InvalidParameter("real Witt congruence failed".into()));
    }
    Ok(frame)
}

impl CuspFrame {
    pub fn form(&self) -> &RatSymForm {
        &self.form
    }

    pub fn v0(&self) -> &IsotropicVector {
        &self.v0
    }

    /// The opposite vector `w` with `b_L(v0, w) = 1` and `L(w) = 0`.
    pub fn opposite(&self) -> &[Rat] {
        &self.w
    }

    pub fn normal_form(&self) -> &RatSymForm {
        &self.normal_form
    }

    pub fn dim(&self) -> usize {
        self.form.dim()
    }

    /// Dimension `s - 2` of the unipotent chart.
    pub fn delta(&self) -> usize {
        self.dim() - 2
    }

    pub fn is_exact(&self) -> bool {
        self.basis_exact.is_some()
    }

    pub fn basis_exact(&self) -> Option<&RatMatrix> {
        self.basis_exact.as_ref()
    }

    pub fn pi(&self) -> &DMatrix<f64> {
        &self.pi
    }

    pub fn pi_inv(&self) -> &DMatrix<f64> {
        &self.pi_inv
    }

    pub fn det_abs(&self) -> f64 {
        self.det_abs
    }

    /// Matrix of the middle form `L0'` on the chart coordinates.
    pub fn middle_matrix(&self) -> &DMatrix<f64> {
        &self.middle_real
    }

    /// `max |Pi^T M_L Pi - M_L0|`; zero for exact frames.
    pub fn congruence_residual(&self) -> f64 {
        let ml = self.form.to_dmatrix();
        let lhs = self.pi.transpose() * ml * &self.pi;
        (lhs - self.normal_form.to_dmatrix()).amax()
    }

    /// `L0'(b)`.
    pub fn middle_eval(&self, b: &[f64]) -> f64 {
        let v = DVector::from_column_slice(b);
        v.dot(&(&self.middle_real * &v))
    }

    /// Coordinates of an ambient vector in the frame basis.
    pub fn frame_coords(&self, x: &[f64]) -> DVector<f64> {
        &self.pi_inv * DVector::from_column_slice(x)
    }

    /// `diag(e^{t/sqrt2}, 1, ..., 1, e^{-t/sqrt2})`.
    pub fn flow_diagonal(&self, t: f64) -> Vec<f64> {
        let s = self.dim();
        let mut d = vec![1.0; s];
        d[0] = (t / SQRT2).exp();
        d[s - 1] = (-t / SQRT2).exp();
        d
    }

    /// The geodesic `G(t) = Pi^{-T} diag(e^{t/sqrt2}, 1, ..., 1, e^{-t/sqrt2}) Pi^{-1}`,
    /// which runs from the line of `v0` at `-inf` to the line of `w` at `+inf`.
    pub fn geodesic(&self, t: f64) -> PosDefForm {
        PosDefForm::from_diagonal_congruence(self.flow_diagonal(t), self.pi_inv.clone(), self.det_abs)
            .expect("geodesic points are positive definite")
    }

    /// The unit-speed ray `t -> G(-t)` asymptotic to the line of `v0`, along which the Busemann
    /// function of `v0` equals `-t`.
    pub fn ray_to_v0(&self) -> DiagonalRay {
        let s = self.dim();
        let mut rates = vec![0.0; s];
        rates[0] = -1.0 / SQRT2;
        rates[s - 1] = 1.0 / SQRT2;
        DiagonalRay { rates, basis: self.pi_inv.clone(), det_target: self.det_abs }
    }

    /// The unit-speed ray `t -> G(t)` asymptotic to the line of `w`.
    pub fn ray_to_w(&self) -> DiagonalRay {
        let mut r = self.ray_to_v0();
        for x in r.rates.iter_mut() {
            *x = -*x;
        }
        r
    }

    /// The horospherical element `u(b)` in frame coordinates.
    pub fn unipotent_matrix(&self, b: &[f64]) -> DMatrix<f64> {
        let s = self.dim();
        let m = self.delta();
        assert_eq!(b.len(), m, "chart coordinate of wrong length");
        let mb = &self.middle_real * DVector::from_column_slice(b);
        let mut u = DMatrix::identity(s, s);
        for k in 0..m {
            u[(0, k + 1)] = -mb[k];
            u[(k + 1, s - 1)] = b[k];
        }
        u[(0, s - 1)] = -0.5 * self.middle_eval(b);
        u
    }

    /// `u(b)` acting in ambient coordinates: `Pi u(b) Pi^{-1}`.
    pub fn unipotent_ambient(&self, b: &[f64]) -> DMatrix<f64> {
        &self.pi * self.unipotent_matrix(b) * &self.pi_inv
    }

    /// The point `G(t)[u(b)]`.
    pub fn flowed_point(&self, t: f64, b: &[f64]) -> PosDefForm {
        let basis = self.unipotent_matrix(b) * &self.pi_inv;
        PosDefForm::from_diagonal_congruence(self.flow_diagonal(t), basis, self.det_abs)
            .expect("flowed points are positive definite")
    }

    /// The frame-coordinate vector `(-L0'(b)/2, -b, 1)` spanning the chart line at `b`.
    pub fn chart_frame_vector(&self, b: &[f64]) -> DVector<f64> {
        let s = self.dim();
        let mut y = DVector::zeros(s);
        y[0] = -0.5 * self.middle_eval(b);
        for (k, bk) in b.iter().enumerate() {
            y[k + 1] = -bk;
        }
        y[s - 1] = 1.0;
        y
    }

    /// Ambient representative `Pi (-L0'(b)/2, -b, 1)` of the chart line at `b`, which pairs to
    /// one with `v0`.
    pub fn chart_vector(&self, b: &[f64]) -> DVector<f64> {
        &self.pi * self.chart_frame_vector(b)
    }

    /// Unit representative of the chart line at `b`, oriented to pair positively with `v0`.
    pub fn unipotent_point(&self, b: &[f64]) -> DVector<f64> {
        let v = self.chart_vector(b);
        let n = v.norm();
        v / n
    }

    /// Inverse chart: the unique `b` whose chart line is the line of `d`.
    pub fn line_to_unipotent(&self, d: &[f64]) -> Result<Vec<f64>> {
        let s = self.dim();
        if d.len() != s {
            return Err(Error::DimensionMismatch { expected: s, got: d.len() });
        }
        let y = self.frame_coords(d);
        let ys = y[s - 1];
        if ys.abs() <= 1e-12 * y.norm() {
            return Err(Error::LineAtInfinity);
        }
        Ok((1..s - 1).map(|k| -y[k] / ys).collect())
    }

    /// Exact pairing `b_L(v0, w)` with an integer vector.
    pub fn pairing_with_v0(&self, w: &[i64]) -> Result<Rat> {
        self.form.bilinear_int(self.v0.coords(), w)
    }
}

impl Serialize for CuspFrame {
    fn serialize<S: serde::Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        let s = self.dim();
        let pi: Vec<Vec<Real>> = (0..s).map(|i| (0..s).map(|j| Real(self.pi[(i, j)])).collect()).collect();
        let exact: Option<Vec<Vec<String>>> = self
            .basis_exact
            .as_ref()
            .map(|b| b.iter().map(|r| r.iter().map(rational::fmt_rat).collect()).collect());
        let w: Vec<String> = self.w.iter().map(rational::fmt_rat).collect();
        let mut st = ser.serialize_struct("CuspFrame", 7)?;
        st.serialize_field("form", &self.form)?;
        st.serialize_field("v0", self.v0.coords())?;
        st.serialize_field("opposite", &w)?;
        st.serialize_field("normal_form", &self.normal_form)?;
        st.serialize_field("basis_exact", &exact)?;
        st.serialize_field("basis", &pi)?;
        st.serialize_field("delta", &self.delta())?;
        st.end()
    }
}

/// A point of the unipotent chart attached to a frame.
#[derive(Clone, Debug)]
pub struct UnipotentCoord<'a> {
    frame: &'a CuspFrame,
    b: Vec<f64>,
}

impl<'a> UnipotentCoord<'a> {
    pub fn new(frame: &'a CuspFrame, b: Vec<f64>) -> Result<Self> {
        if b.len() != frame.delta() {
            return Err(Error::DimensionMismatch { expected: frame.delta(), got: b.len() });
        }
        Ok(Self { frame, b })
    }

    pub fn coords(&self) -> &[f64] {
        &self.b
    }

    pub fn frame(&self) -> &'a CuspFrame {
        self.frame
    }

    pub fn matrix(&self) -> DMatrix<f64> {
        self.frame.unipotent_matrix(&self.b)
    }

    /// Group law `u(b) u(b') = u(b + b')`.
    pub fn compose(&self, other: &UnipotentCoord<'_>) -> UnipotentCoord<'a> {
        let b = self.b.iter().zip(&other.b).map(|(x, y)| x + y).collect();
        UnipotentCoord { frame: self.frame, b }
    }

    pub fn line(&self) -> DVector<f64> {
        self.frame.unipotent_point(&self.b)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forms::{find_isotropic_seed, suspend_form};
    use crate::rational::ratio;

    fn sphere_frame() -> CuspFrame {
        let l = suspend_form(&RatSymForm::identity(3)).unwrap();
        let v0 = find_isotropic_seed(&l, 3).unwrap().unwrap();
        witt_frame(&l, &v0).unwrap()
    }

    #[test]
    fn normal_form_frame_is_identity() {
        let l0 = RatSymForm::normal_form(3, 1);
        let v0 = IsotropicVector::new(vec![1, 0, 0, 0], &l0).unwrap();
        let f = witt_frame(&l0, &v0).unwrap();
        assert_eq!(f.basis_exact().unwrap(), &rational::identity(4));

        let l22 = RatSymForm::normal_form(2, 2);
        let v0 = IsotropicVector::new(vec![1, 0, 0, 0], &l22).unwrap();
        let f = witt_frame(&l22, &v0).unwrap();
        assert_eq!(f.basis_exact().unwrap(), &rational::identity(4));
    }

    #[test]
    fn hyperbolic_plane_has_no_middle_block() {
        let h = RatSymForm::from_i64(&[vec![0, 1], vec![1, 0]]).unwrap();
        let v0 = IsotropicVector::new(vec![1, 0], &h).unwrap();
        let f = witt_frame(&h, &v0).unwrap();
        assert_eq!(f.basis_exact().unwrap(), &rational::identity(2));
        assert_eq!(f.delta(), 0);
    }

    #[test]
    fn sphere_frame_is_exact() {
        let f = sphere_frame();
        assert!(f.is_exact());
        let check = f.form().congruent(f.basis_exact().unwrap()).unwrap();
        assert_eq!(&check, f.normal_form());
        assert_eq!(f.pairing_with_v0(&[-1, 0, 0, 1]).unwrap(), rational::rat(2));
        assert_eq!(f.opposite(), &[ratio(-1, 2), ratio(0, 1), ratio(0, 1), ratio(1, 2)]);
    }

    #[test]
    fn irrational_middle_uses_real_transform() {
        // q = x^2 + 2y^2 + 5z^2 needs square roots of 2 and 5 in the middle block.
        let q = RatSymForm::diagonal(&[rational::rat(1), rational::rat(2), rational::rat(5)]);
        let l = suspend_form(&q).unwrap();
        let v0 = IsotropicVector::new(vec![1, 0, 0, 1], &l).unwrap();
        let f = witt_frame(&l, &v0).unwrap();
        assert!(!f.is_exact());
        assert!(f.congruence_residual() < 1e-12);
    }

    #[test]
    fn rational_hyperbolic_pairs_stay_exact() {
        // Middle block 2x^2 - 2y^2 is rationally hyperbolic although 2 is not a square.
        let l = RatSymForm::diagonal(&[rational::rat(-1), rational::rat(2), rational::rat(-2), rational::rat(1)]);
        let v0 = IsotropicVector::new(vec![1, 0, 0, 1], &l).unwrap();
        let f = witt_frame(&l, &v0).unwrap();
        assert!(f.is_exact());
        assert_eq!(&f.form().congruent(f.basis_exact().unwrap()).unwrap(), f.normal_form());
    }

    #[test]
    fn chart_examples() {
        let f = sphere_frame();
        let w: Vec<f64> = f.opposite().iter().map(rational::to_f64).collect();
        let b0 = f.line_to_unipotent(&w).unwrap();
        assert!(b0.iter().all(|x| x.abs() < 1e-15));
        let v0 = f.v0().to_f64();
        assert_eq!(f.line_to_unipotent(&v0), Err(Error::LineAtInfinity));
        let lm = f.form().to_dmatrix();
        for b in [[0.3, -0.2], [2.0, 1.5], [-0.7, 0.01]] {
            let d = f.unipotent_point(&b);
            assert!(d.dot(&(&lm * &d)).abs() < 1e-10);
            let back = f.line_to_unipotent(d.as_slice()).unwrap();
            assert!((back[0] - b[0]).abs() < 1e-12 && (back[1] - b[1]).abs() < 1e-12);
        }
    }

    #[test]
    fn geodesic_calibration() {
        let f = sphere_frame();
        let v0 = f.v0().to_f64();
        let w: Vec<f64> = f.opposite().iter().map(rational::to_f64).collect();
        for t in [-30.0, -3.0, 0.0, 4.0, 30.0] {
            let g = f.geodesic(t);
            let fv = crate::symspace::busemann_vector(&v0, &g).unwrap();
            let fw = crate::symspace::busemann_vector(&w, &g).unwrap();
            assert!((fv - t).abs() < 1e-9);
            assert!((fw + t).abs() < 1e-9);
        }
    }

    #[test]
    fn unipotent_group_law() {
        let f = sphere_frame();
        let a = UnipotentCoord::new(&f, vec![0.4, -1.1]).unwrap();
        let b = UnipotentCoord::new(&f, vec![-0.3, 0.25]).unwrap();
        let prod = a.matrix() * b.matrix();
        assert!((prod - a.compose(&b).matrix()).amax() < 1e-12);
        let l0 = f.normal_form().to_dmatrix();
        let u = a.matrix();
        assert!((u.transpose() * &l0 * &u - &l0).amax() < 1e-12);
        assert!(UnipotentCoord::new(&f, vec![1.0]).is_err());
    }
}

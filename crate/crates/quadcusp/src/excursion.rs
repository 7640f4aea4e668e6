//! Cusp excursions of geodesic rays `t -> G(t)[u(b)]`: depth against a finite pool of lattice
//! isotropic vectors, events `depth >= beta t`, the correspondence between excursion rates
//! `phi` and chart approximation functions, and the depth identities for `SL(n+1)` rays.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_traits::{One, Signed, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::approx::ApproxFunction;
use crate::conepoints::{enumerate_isotropic, linear_fit};
use crate::error::{Error, Result};
use crate::forms::IsotropicVector;
use crate::frame::CuspFrame;
use crate::json::{ser_opt_real, ser_real, ser_reals};
use crate::rational::{self, Rat};
use crate::symspace::{ambient_ray, busemann_ambient, PosDefForm};

const SQRT2: f64 = std::f64::consts::SQRT_2;
const TWO_SQRT2: f64 = 2.0 * SQRT2;

/// `(-min_v sqrt2 ln Q(v), argmin)` over a nonempty pool.
pub fn cusp_depth_quadric(q: &PosDefForm, pool: &[IsotropicVector]) -> Result<(f64, IsotropicVector)> {
    let (best, v) = pool
        .iter()
        .map(|v| (q.eval(&v.to_f64()), v))
        .min_by(|a, b| a.0.total_cmp(&b.0))
        .ok_or(Error::EmptyPool)?;
    Ok((-SQRT2 * best.ln(), v.clone()))
}

/// Lattice isotropic vectors in frame coordinates, for fast depth evaluation along rays.
#[derive(Clone, Debug)]
pub struct DepthPool {
    frame: Arc<CuspFrame>,
    vectors: Vec<IsotropicVector>,
    coords: Vec<DVector<f64>>,
    q_max: i64,
}

impl DepthPool {
    pub fn new(frame: Arc<CuspFrame>, vectors: Vec<IsotropicVector>, q_max: i64) -> Result<Self> {
        if vectors.is_empty() {
            return Err(Error::EmptyPool);
        }
        let coords = vectors.iter().map(|v| frame.frame_coords(&v.to_f64())).collect();
        Ok(Self { frame, vectors, coords, q_max })
    }

    /// All primitive cone vectors with last coordinate in `1..=q_max`.
    pub fn enumerate(frame: Arc<CuspFrame>, q_max: i64) -> Result<Self> {
        let vectors = enumerate_isotropic(frame.form(), q_max, None)?;
        Self::new(frame, vectors, q_max)
    }

    pub fn frame(&self) -> &Arc<CuspFrame> {
        &self.frame
    }

    pub fn vectors(&self) -> &[IsotropicVector] {
        &self.vectors
    }

    pub fn q_max(&self) -> i64 {
        self.q_max
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    /// Components `u(b) y_v` of every pool vector; `Q(v)` at `G(t)[u(b)]` is then
    /// `e^{t/sqrt2} z_0^2 + |z_mid|^2 + e^{-t/sqrt2} z_s^2`.
    fn transported(&self, b: &[f64]) -> Vec<(f64, f64, f64)> {
        let u = self.frame.unipotent_matrix(b);
        let s = self.frame.dim();
        self.coords
            .iter()
            .map(|y| {
                let z = &u * y;
                let mid: f64 = (1..s - 1).map(|k| z[k] * z[k]).sum();
                (z[0] * z[0], mid, z[s - 1] * z[s - 1])
            })
            .collect()
    }

    /// Depth of `G(t)[u(b)]` with the index of the minimizing vector.
    pub fn depth(&self, t: f64, b: &[f64]) -> (f64, usize) {
        depth_from(&self.transported(b), t)
    }
}

fn depth_from(z: &[(f64, f64, f64)], t: f64) -> (f64, usize) {
    let (up, down) = ((t / SQRT2).exp(), (-t / SQRT2).exp());
    let (k, best) = z
        .iter()
        .map(|(a, m, c)| up * a + m + down * c)
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .expect("pools are nonempty");
    (-SQRT2 * best.ln(), k)
}

#[derive(Clone, Debug, Serialize)]
pub struct DepthSample {
    #[serde(serialize_with = "ser_real")]
    pub t: f64,
    #[serde(serialize_with = "ser_real")]
    pub depth: f64,
    pub witness: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct ExcursionEvent {
    #[serde(serialize_with = "ser_real")]
    pub t: f64,
    pub witness: Vec<i64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ExcursionTrace {
    #[serde(serialize_with = "ser_reals")]
    pub b: Vec<f64>,
    #[serde(serialize_with = "ser_real")]
    pub beta: f64,
    #[serde(serialize_with = "ser_real")]
    pub t_max: f64,
    #[serde(serialize_with = "ser_real")]
    pub dt: f64,
    pub pool_qmax: i64,
    pub samples: Vec<DepthSample>,
    pub events: Vec<ExcursionEvent>,
}

impl ExcursionTrace {
    /// Sample times with `depth >= beta t`.
    pub fn event_times(&self, beta: f64) -> Vec<f64> {
        self.samples.iter().filter(|s| s.depth >= beta * s.t).map(|s| s.t).collect()
    }

    pub fn last_event(&self, beta: f64) -> Option<f64> {
        self.event_times(beta).last().copied()
    }

    /// Whether an event at level `beta` occurs in the final tenth of the time range.
    pub fn persistent(&self, beta: f64) -> bool {
        self.last_event(beta).is_some_and(|t| t >= 0.9 * self.t_max)
    }
}

/// Samples the depth along `t -> G(t)[u(b)]` on the grid `0, dt, ..., <= t_max` and records
/// the events `depth >= beta t`.
pub fn flow_and_record(pool: &DepthPool, b: &[f64], t_max: f64, dt: f64, beta: f64) -> Result<ExcursionTrace> {
    if !(0.0..=1.0).contains(&beta) {
        return Err(Error::InvalidParameter("beta must lie in [0, 1]".into()));
    }
    if !(dt > 0.0) || !(t_max >= 0.0) {
        return Err(Error::InvalidParameter("need dt > 0 and t_max >= 0".into()));
    }
    if b.len() != pool.frame.delta() {
        return Err(Error::DimensionMismatch { expected: pool.frame.delta(), got: b.len() });
    }
    let z = pool.transported(b);
    let steps = (t_max / dt + 1e-9).floor() as usize;
    let samples: Vec<DepthSample> = (0..=steps)
        .map(|k| {
            let t = k as f64 * dt;
            let (depth, witness) = depth_from(&z, t);
            DepthSample { t, depth, witness }
        })
        .collect();
    let events = samples
        .iter()
        .filter(|s| s.depth >= beta * s.t)
        .map(|s| ExcursionEvent { t: s.t, witness: pool.vectors[s.witness].coords().to_vec() })
        .collect();
    Ok(ExcursionTrace { b: b.to_vec(), beta, t_max, dt, pool_qmax: pool.q_max, samples, events })
}

/// Traces for many starting points, in input order.
pub fn flow_grid(pool: &DepthPool, bs: &[Vec<f64>], t_max: f64, dt: f64, beta: f64) -> Result<Vec<ExcursionTrace>> {
    bs.par_iter().map(|b| flow_and_record(pool, b, t_max, dt, beta)).collect()
}

/// `n^Delta` points of the cube `[lo, hi)^Delta`, offset by the golden ratio so that no grid
/// point is a rational of small height.
pub fn generic_grid(delta: usize, per_axis: usize, lo: f64, hi: f64) -> Vec<Vec<f64>> {
    let phi = (5f64.sqrt() - 1.0) / 2.0;
    let axis: Vec<f64> = (0..per_axis).map(|k| lo + (hi - lo) * (k as f64 + phi) / per_axis as f64).collect();
    let mut out = vec![Vec::new()];
    for _ in 0..delta {
        out = out
            .into_iter()
            .flat_map(|p| axis.iter().map(move |&x| {
                let mut q = p.clone();
                q.push(x);
                q
            }))
            .collect();
    }
    out
}

#[derive(Clone, Debug, Serialize)]
pub struct TraceSummaryRow {
    #[serde(serialize_with = "ser_reals")]
    pub b: Vec<f64>,
    pub events: usize,
    #[serde(serialize_with = "ser_opt_real")]
    pub last_event: Option<f64>,
    pub persistent: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct EventSummary {
    #[serde(serialize_with = "ser_real")]
    pub beta: f64,
    pub rows: Vec<TraceSummaryRow>,
    pub persistent: usize,
    /// Slope of `ln` of the fraction of traces with an event after time `t`, against `t`.
    #[serde(serialize_with = "ser_opt_real")]
    pub persistence_exponent: Option<f64>,
}

pub fn rbeta_event_summary(traces: &[ExcursionTrace], beta: f64) -> EventSummary {
    let rows: Vec<TraceSummaryRow> = traces
        .iter()
        .map(|tr| TraceSummaryRow {
            b: tr.b.clone(),
            events: tr.event_times(beta).len(),
            last_event: tr.last_event(beta),
            persistent: tr.persistent(beta),
        })
        .collect();
    let persistent = rows.iter().filter(|r| r.persistent).count();
    let persistence_exponent = traces.first().and_then(|first| {
        let pts: Vec<(f64, f64)> = (1..10)
            .filter_map(|j| {
                let t = first.t_max * j as f64 / 10.0;
                let frac = rows.iter().filter(|r| r.last_event.is_some_and(|l| l >= t)).count() as f64 / rows.len() as f64;
                (frac > 0.0).then(|| (t, frac.ln()))
            })
            .collect();
        (pts.len() >= 3).then(|| linear_fit(&pts).0)
    });
    EventSummary { beta, rows, persistent, persistence_exponent }
}

/// An excursion rate `phi` with `phi` and `id - phi` increasing.
#[derive(Clone, Debug, PartialEq)]
pub enum PhiSpec {
    /// `phi(t) = slope t - offset`.
    Linear { slope: Rat, offset: Rat },
    /// Piecewise linear through `(t, phi(t))` knots.
    Table(Vec<(f64, f64)>),
}

impl PhiSpec {
    /// `phi(t) = (1 - beta) t`.
    pub fn beta(beta: Rat) -> Self {
        Self::Linear { slope: Rat::one() - beta, offset: Rat::zero() }
    }

    fn check(&self) -> Result<()> {
        match self {
            Self::Linear { slope, .. } => {
                if !slope.is_positive() || slope > &Rat::one() {
                    return Err(Error::Monotonicity("phi needs slope in (0, 1]".into()));
                }
            }
            Self::Table(knots) => {
                if knots.len() < 2 {
                    return Err(Error::Monotonicity("table needs two knots".into()));
                }
                for w in knots.windows(2) {
                    let (dt, dphi) = (w[1].0 - w[0].0, w[1].1 - w[0].1);
                    if !(dt > 0.0 && dphi > 0.0 && dt - dphi >= 0.0) {
                        return Err(Error::Monotonicity("phi or id - phi decreases between knots".into()));
                    }
                }
            }
        }
        Ok(())
    }
}

/// The pair `Phi1(x) = kappa0 e^{-phi^{-1}(x)/(2 sqrt2)}`, `Phi2(x) = c e^{-phi^{-1}(x+1)/(2 sqrt2)}`
/// bracketing the excursion set between chart limsup sets.
pub fn phi_correspondence(phi: &PhiSpec, kappa0: f64, c: f64) -> Result<(ApproxFunction, ApproxFunction)> {
    phi.check()?;
    match phi {
        PhiSpec::Linear { slope, offset } => {
            let rate = Rat::one() / slope;
            let sf = rational::to_f64(slope);
            let of = rational::to_f64(offset);
            let phi1 = ApproxFunction::exp(kappa0 * (-of / (TWO_SQRT2 * sf)).exp(), rate.clone())?;
            let phi2 = ApproxFunction::exp(c * (-(1.0 + of) / (TWO_SQRT2 * sf)).exp(), rate)?;
            Ok((phi1, phi2))
        }
        PhiSpec::Table(knots) => {
            let p1 = knots.iter().map(|&(t, y)| (y, kappa0 * (-t / TWO_SQRT2).exp())).collect();
            let p2 = knots.iter().map(|&(t, y)| (y - 1.0, c * (-t / TWO_SQRT2).exp())).collect();
            Ok((ApproxFunction::tabulated(p1)?, ApproxFunction::tabulated(p2)?))
        }
    }
}

/// Dimension `sigma(Phi1) Delta` predicted for the excursion set of `phi`.
pub fn predicted_excursion_dimension(phi: &PhiSpec, delta: usize) -> Result<Rat> {
    let (phi1, _) = phi_correspondence(phi, 1.0, 1.0)?;
    Ok(phi1.chart_sigma()? * Rat::from_integer((delta as i64).into()))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum SlSlope {
    /// The ray `r_1`: the first `n` coordinates expand.
    One,
    /// The ray `r_n`: only the first coordinate expands.
    N,
}

#[derive(Clone, Debug, Serialize)]
pub struct SlIdentity {
    /// The displayed expression.
    #[serde(serialize_with = "ser_real")]
    pub expression: f64,
    /// `eta_n ln` of the expression.
    #[serde(serialize_with = "ser_real")]
    pub closed_form: f64,
    /// Ambient Busemann function evaluated on the matrix `r(t) u_x`.
    #[serde(serialize_with = "ser_real")]
    pub matrix_form: f64,
}

/// Depth identities along `SL(n+1)` rays. Slope one: `Q = u^T r_1(t) u` with `u(p, q) = (p + q x, q)`,
/// expression `e^{t/sqrt(n(n+1))} |p + q x|^2 + e^{-n t/sqrt(n(n+1))} q^2`, matched against
/// `f_{r_1}(Q[B])` with `B e_s = (p, q)`. Slope `n`: `Q = u^T r_n(t) u` with `u^{-T}(q, p) = (q, p - q x)`,
/// expression `e^{-n t/sqrt(n(n+1))} q^2 + e^{t/sqrt(n(n+1))} |p - q x|^2`, matched against
/// `f_{r_n}(Q[B])` with `B^{-T} e_1 = (q, p)`.
pub fn sl_depth_identity(x: &[f64], p: &[i64], q: i64, t: f64, slope: SlSlope) -> Result<SlIdentity> {
    let n = x.len();
    if p.len() != n {
        return Err(Error::DimensionMismatch { expected: n, got: p.len() });
    }
    if n == 0 {
        return Err(Error::InvalidParameter("need n >= 1".into()));
    }
    if q == 0 && p.iter().all(|&v| v == 0) {
        return Err(Error::ZeroVector);
    }
    let s = n + 1;
    let nf = n as f64;
    let root = (nf * (nf + 1.0)).sqrt();
    let eta = ((nf + 1.0) / nf).sqrt();
    let qf = q as f64;
    let pf: Vec<f64> = p.iter().map(|&v| v as f64).collect();
    match slope {
        SlSlope::One => {
            let shifted: f64 = pf.iter().zip(x).map(|(pi, xi)| (pi + qf * xi).powi(2)).sum();
            let expression = (t / root).exp() * shifted + (-nf * t / root).exp() * qf * qf;
            let mut u = DMatrix::identity(s, s);
            for i in 0..n {
                u[(i, n)] = x[i];
            }
            let point = ambient_ray(s, 1)?.at(t).act(&u)?;
            let mut v = pf.clone();
            v.push(qf);
            let bm = completion_with_last(&v);
            let matrix_form = busemann_ambient(1, &point.act(&bm)?)?;
            Ok(SlIdentity { expression, closed_form: eta * expression.ln(), matrix_form })
        }
        SlSlope::N => {
            let shifted: f64 = pf.iter().zip(x).map(|(pi, xi)| (pi - qf * xi).powi(2)).sum();
            let expression = (-nf * t / root).exp() * qf * qf + (t / root).exp() * shifted;
            let mut u = DMatrix::identity(s, s);
            for i in 0..n {
                u[(0, i + 1)] = x[i];
            }
            let point = ambient_ray(s, n)?.at(t).act(&u)?;
            let mut w = vec![qf];
            w.extend(&pf);
            let m = completion_with_first(&w);
            let bm = m.transpose().try_inverse().ok_or(Error::Degenerate)?;
            let det_b = bm.clone().lu().determinant();
            let matrix_form = busemann_ambient(n, &point.act(&bm)?)? - eta * (det_b * det_b).ln();
            Ok(SlIdentity { expression, closed_form: eta * expression.ln(), matrix_form })
        }
    }
}

/// A nonsingular matrix whose last column is `v`.
fn completion_with_last(v: &[f64]) -> DMatrix<f64> {
    let s = v.len();
    let mut b = DMatrix::identity(s, s);
    if v[s - 1] == 0.0 {
        let k = v.iter().position(|&c| c != 0.0).expect("nonzero vector");
        b[(k, k)] = 0.0;
        b[(s - 1, k)] = 1.0;
    }
    for i in 0..s {
        b[(i, s - 1)] = v[i];
    }
    b
}

/// A nonsingular matrix whose first column is `v`.
fn completion_with_first(v: &[f64]) -> DMatrix<f64> {
    let s = v.len();
    let mut b = DMatrix::identity(s, s);
    if v[0] == 0.0 {
        let k = v.iter().position(|&c| c != 0.0).expect("nonzero vector");
        b[(k, k)] = 0.0;
        b[(0, k)] = 1.0;
    }
    for i in 0..s {
        b[(i, 0)] = v[i];
    }
    b
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;
    use crate::rational::{rat, ratio};
    use crate::sampling;
    use rand::Rng;

    fn circle_pool(q_max: i64) -> DepthPool {
        let frame = Arc::new(catalog::standard_frame(&catalog::circle()).unwrap());
        DepthPool::enumerate(frame, q_max).unwrap()
    }

    #[test]
    fn frame_geodesic_depth() {
        let pool = circle_pool(32);
        let frame = pool.frame().clone();
        for k in 0..=30 {
            let t = k as f64;
            let g = frame.geodesic(t);
            let (d, _) = cusp_depth_quadric(&g, pool.vectors()).unwrap();
            // G(t) runs toward the cusp of w, so the offset d - t settles at -f_w(Id).
            assert!((d - t).abs() < 5.0, "depth {d} at {t}");
            let (fast, _) = pool.depth(t, &[0.0]);
            assert!((fast - d).abs() < 1e-9 * (1.0 + d.abs()));
        }
    }

    #[test]
    fn identity_in_normal_form_has_zero_depth() {
        let q = PosDefForm::unimodular(DMatrix::identity(3, 3)).unwrap();
        let l = catalog::circle();
        let e1 = IsotropicVector::new(vec![1, 0, 1], &l).unwrap();
        let e3 = IsotropicVector::new(vec![0, 1, 1], &l).unwrap();
        // Q(e1 + e3) = 2 for both vectors, so the depth is -sqrt2 ln 2 here; with unit vectors
        // of the normal form the depth is zero.
        let (d, _) = cusp_depth_quadric(&q, &[e1, e3]).unwrap();
        assert!((d + SQRT2 * 2f64.ln()).abs() < 1e-12);
        assert!(matches!(cusp_depth_quadric(&q, &[]), Err(Error::EmptyPool)));
    }

    #[test]
    fn deeper_pool_never_decreases_depth() {
        let small = circle_pool(16);
        let large = circle_pool(64);
        let mut rng = sampling::stream_rng(2, 0);
        for _ in 0..40 {
            let b = [rng.random_range(-2.0..2.0)];
            let t = rng.random_range(0.0..20.0);
            assert!(large.depth(t, &b).0 >= small.depth(t, &b).0 - 1e-12);
        }
    }

    #[test]
    fn traces_at_cusp_points_persist() {
        let pool = circle_pool(64);
        let frame = pool.frame().clone();
        // w = (3, 4, 5) has chart coordinate u_w and weight 2 sqrt2 ln |b_L(v0, w)|.
        let w = [3.0, 4.0, 5.0];
        let b = frame.line_to_unipotent(&w).unwrap();
        let tr = flow_and_record(&pool, &b, 40.0, 0.05, 0.5).unwrap();
        assert!(tr.persistent(0.5));
        assert_eq!(tr.events.len(), tr.event_times(0.5).len());
        let last = tr.samples.last().unwrap();
        assert_eq!(pool.vectors()[last.witness].coords(), &[3, 4, 5]);
    }

    #[test]
    fn events_shrink_as_beta_grows() {
        let pool = circle_pool(64);
        let tr = flow_and_record(&pool, &[0.3141592653], 30.0, 0.05, 0.0).unwrap();
        let mut prev = tr.event_times(0.0);
        for k in 1..=10 {
            let next = tr.event_times(k as f64 / 10.0);
            assert!(next.iter().all(|t| prev.contains(t)));
            prev = next;
        }
        // Beta = 0: every sample with non-negative depth is an event.
        let nonneg = tr.samples.iter().filter(|s| s.depth >= 0.0).count();
        assert_eq!(tr.event_times(0.0).len(), nonneg);
    }

    #[test]
    fn generic_points_stop_at_beta_one() {
        let pool = circle_pool(128);
        let traces = flow_grid(&pool, &generic_grid(1, 20, -1.0, 1.0), 40.0, 0.05, 0.99).unwrap();
        let summary = rbeta_event_summary(&traces, 0.99);
        assert_eq!(summary.persistent, 0);
        assert!(rbeta_event_summary(&[], 0.5).rows.is_empty());
    }

    #[test]
    fn correspondence_is_exact_for_linear_rates() {
        for (b, expect) in [(ratio(1, 4), ratio(3, 4)), (ratio(1, 2), ratio(1, 2)), (ratio(3, 4), ratio(1, 4))] {
            let phi = PhiSpec::beta(b.clone());
            let (phi1, _) = phi_correspondence(&phi, 1.0, 1.0).unwrap();
            assert_eq!(phi1, ApproxFunction::exp(1.0, Rat::one() / (Rat::one() - &b)).unwrap());
            assert_eq!(predicted_excursion_dimension(&phi, 2).unwrap(), expect * rat(2));
        }
        // beta = 1/2: Phi1(x) = kappa0 e^{-x/sqrt2}.
        let (phi1, _) = phi_correspondence(&PhiSpec::beta(ratio(1, 2)), 3.0, 1.0).unwrap();
        assert!((phi1.eval(1.7) - 3.0 * (-1.7 / SQRT2).exp()).abs() < 1e-15);
        // beta = 0 recovers the ubiquity function.
        let (phi1, _) = phi_correspondence(&PhiSpec::beta(rat(0)), 2.0, 1.0).unwrap();
        assert!((phi1.eval(5.0) - 2.0 * (-5.0 / TWO_SQRT2).exp()).abs() < 1e-15);
        assert!(matches!(phi_correspondence(&PhiSpec::beta(rat(1)), 1.0, 1.0), Err(Error::Monotonicity(_))));
        assert!(phi_correspondence(&PhiSpec::Table(vec![(0.0, 0.0), (1.0, 2.0)]), 1.0, 1.0).is_err());
        assert!(phi_correspondence(&PhiSpec::Table(vec![(0.0, 0.0), (2.0, 1.0), (4.0, 1.5)]), 1.0, 1.0).is_ok());
    }

    #[test]
    fn sl_identity_examples() {
        let id = sl_depth_identity(&[0.0, 0.0], &[2, -1], 3, 0.0, SlSlope::One).unwrap();
        assert!((id.expression - 14.0).abs() < 1e-12);
        let mut rng = sampling::stream_rng(4, 0);
        for _ in 0..200 {
            let n = rng.random_range(1..5);
            let x: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let p: Vec<i64> = (0..n).map(|_| rng.random_range(-20..20)).collect();
            let q = rng.random_range(-20..20);
            if q == 0 && p.iter().all(|&v| v == 0) {
                continue;
            }
            let t = rng.random_range(-4.0..4.0);
            for slope in [SlSlope::One, SlSlope::N] {
                let id = sl_depth_identity(&x, &p, q, t, slope).unwrap();
                assert!((id.closed_form - id.matrix_form).abs() < 1e-9 * (1.0 + id.closed_form.abs()), "{id:?}");
            }
        }
        assert!(matches!(sl_depth_identity(&[0.5], &[0], 0, 1.0, SlSlope::One), Err(Error::ZeroVector)));
    }
}

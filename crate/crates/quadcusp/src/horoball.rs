//! Horoball traces on the unipotent chart: the set of chart points `b` whose flowed point
//! `G(t)[u(b)]` lies in the horoball `Hb_w = {f_w <= 0}` of an opposite cone vector `w`.
//!
//! Writing `y = Pi^{-1} w` and `lambda = y_s = b_L(v0, w)`, one has `u(b) y = lambda u(b - u_w) e_s`,
//! so the trace is the translate by `u_w` of the trace of `lambda e_s`, and
//! `f_w(G(t)[u(b)]) = D + sqrt2 ln(e^{t/sqrt2} L0'(c)^2 / 4 + |c|^2 + e^{-t/sqrt2})` with
//! `c = b - u_w` and `D = 2 sqrt2 ln|lambda|`. The trace therefore lies in the ball of radius
//! `e^{-D/(2 sqrt2)} = 1/|lambda|` around `u_w`.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::frame::CuspFrame;
use crate::json::ser_real;
use crate::sampling;

const SQRT2: f64 = std::f64::consts::SQRT_2;

/// Chart data of an opposite cone vector: `u_w`, `lambda = b_L(v0, w)` and `D`.
#[derive(Clone, Debug)]
pub struct TraceCenter {
    pub chart: Vec<f64>,
    pub lambda: f64,
    pub depth: f64,
}

impl TraceCenter {
    pub fn new(frame: &CuspFrame, w: &[f64]) -> Result<Self> {
        let s = frame.dim();
        if w.len() != s {
            return Err(Error::DimensionMismatch { expected: s, got: w.len() });
        }
        let y = frame.frame_coords(w);
        let lambda = y[s - 1];
        if lambda.abs() <= 1e-12 * y.norm() {
            return Err(Error::NotOpposite);
        }
        let chart = (1..s - 1).map(|k| -y[k] / lambda).collect();
        Ok(Self { chart, lambda, depth: 2.0 * SQRT2 * lambda.abs().ln() })
    }

    /// Radius `kappa0 e^{-D/(2 sqrt2)}` of the ball containing every trace, with `kappa0 = 1`.
    pub fn radius(&self) -> f64 {
        1.0 / self.lambda.abs()
    }

    /// Closed-form `f_w(G(t)[u(b)])`.
    pub fn busemann_at(&self, frame: &CuspFrame, t: f64, b: &[f64]) -> f64 {
        let c: Vec<f64> = b.iter().zip(&self.chart).map(|(x, u)| x - u).collect();
        let l0 = frame.middle_eval(&c);
        let norm2: f64 = c.iter().map(|x| x * x).sum();
        let inner = 0.25 * (t / SQRT2).exp() * l0 * l0 + norm2 + (-t / SQRT2).exp();
        self.depth + SQRT2 * inner.ln()
    }
}

/// `f_w(G(t)[u(b)])` evaluated through the closed form.
pub fn trace_busemann(frame: &CuspFrame, w: &[f64], t: f64, b: &[f64]) -> Result<f64> {
    Ok(TraceCenter::new(frame, w)?.busemann_at(frame, t, b))
}

/// `f_w(G(t)[u(b)])` evaluated by building the flowed positive definite form.
pub fn trace_busemann_matrix(frame: &CuspFrame, w: &[f64], t: f64, b: &[f64]) -> Result<f64> {
    TraceCenter::new(frame, w)?;
    Ok(SQRT2 * frame.flowed_point(t, b).eval(w).ln())
}

/// Whether `G(t)[u(b)]` lies in the horoball of `w`.
pub fn trace_membership(frame: &CuspFrame, w: &[f64], t: f64, b: &[f64]) -> Result<bool> {
    Ok(trace_busemann(frame, w, t, b)? <= 0.0)
}

/// Monte-Carlo estimate of the chart measure of a trace.
#[derive(Clone, Debug, Serialize)]
pub struct TraceEstimate {
    #[serde(serialize_with = "ser_real")]
    pub estimate: f64,
    #[serde(serialize_with = "ser_real")]
    pub stderr: f64,
    pub hits: u64,
    pub samples: u64,
    #[serde(serialize_with = "ser_real")]
    pub radius: f64,
}

const CHUNK: u64 = 4096;

/// Estimates the chart measure of the trace of `w` at time `t` by uniform sampling in its
/// bounding ball. Requires `min(a, b) >= 2` for the signature `(a, b)` of the form.
pub fn trace_measure_mc(frame: &CuspFrame, w: &[f64], t: f64, samples: u64, seed: u64) -> Result<TraceEstimate> {
    let (a, b) = frame.form().signature();
    if a.min(b) < 2 {
        return Err(Error::SignatureHypothesis(format!("signature ({a}, {b}) has a side below 2")));
    }
    if samples == 0 {
        return Err(Error::InvalidParameter("samples must be positive".into()));
    }
    let center = TraceCenter::new(frame, w)?;
    let radius = center.radius();
    let chunks = samples.div_ceil(CHUNK);
    let hits: u64 = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = sampling::stream_rng(seed, c);
            let n = CHUNK.min(samples - c * CHUNK);
            (0..n)
                .filter(|_| {
                    let p = sampling::uniform_in_ball(&mut rng, &center.chart, radius);
                    center.busemann_at(frame, t, &p) <= 0.0
                })
                .count() as u64
        })
        .sum();
    let vol = sampling::ball_volume(frame.delta(), radius);
    let p = hits as f64 / samples as f64;
    Ok(TraceEstimate {
        estimate: vol * p,
        stderr: vol * (p * (1.0 - p) / samples as f64).sqrt(),
        hits,
        samples,
        radius,
    })
}

/// Result of testing that trace members stay inside the bounding ball.
#[derive(Clone, Debug, Serialize)]
pub struct InclusionReport {
    pub samples: u64,
    pub members: u64,
    pub violations: u64,
    /// Largest `|b - u_w| e^{D/(2 sqrt2)}` over members; the fitted `kappa0`.
    #[serde(serialize_with = "ser_real")]
    pub kappa0_fitted: f64,
}

/// Samples uniformly in the ball of radius `spread` times the bounding radius and counts
/// members of the trace outside the bounding ball of radius `kappa0 e^{-D/(2 sqrt2)}`.
pub fn trace_inclusion_check(frame: &CuspFrame, w: &[f64], t: f64, kappa0: f64, spread: f64, samples: u64, seed: u64) -> Result<InclusionReport> {
    let center = TraceCenter::new(frame, w)?;
    let bound = kappa0 * center.radius();
    let chunks = samples.div_ceil(CHUNK);
    let parts: Vec<(u64, u64, f64)> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = sampling::stream_rng(seed, c);
            let n = CHUNK.min(samples - c * CHUNK);
            let mut members = 0;
            let mut bad = 0;
            let mut far: f64 = 0.0;
            for _ in 0..n {
                let p = sampling::uniform_in_ball(&mut rng, &center.chart, spread * bound);
                if center.busemann_at(frame, t, &p) <= 0.0 {
                    members += 1;
                    let r = p.iter().zip(&center.chart).map(|(x, u)| (x - u).powi(2)).sum::<f64>().sqrt();
                    far = far.max(r);
                    if r > bound {
                        bad += 1;
                    }
                }
            }
            (members, bad, far)
        })
        .collect();
    let members = parts.iter().map(|p| p.0).sum();
    let violations = parts.iter().map(|p| p.1).sum();
    let far = parts.iter().map(|p| p.2).fold(0.0, f64::max);
    Ok(InclusionReport { samples, members, violations, kappa0_fitted: far / center.radius() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;
    use crate::rational;
    use rand::Rng;

    fn split_frame() -> CuspFrame {
        catalog::standard_frame(&catalog::split_22()).unwrap()
    }

    fn opposite(frame: &CuspFrame) -> Vec<f64> {
        frame.opposite().iter().map(rational::to_f64).collect()
    }

    #[test]
    fn origin_is_in_unit_trace() {
        let f = split_frame();
        let w = opposite(&f);
        for t in [0.0, 0.5, 3.0, 20.0] {
            assert!(trace_membership(&f, &w, t, &[0.0, 0.0]).unwrap());
        }
    }

    #[test]
    fn empty_before_depth() {
        let f = split_frame();
        let w: Vec<f64> = opposite(&f).iter().map(|x| 4.0 * x).collect();
        let d = 2.0 * SQRT2 * 4f64.ln();
        let mut rng = sampling::stream_rng(5, 0);
        for _ in 0..2000 {
            let b = [rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)];
            assert!(!trace_membership(&f, &w, d - 0.01, &b).unwrap());
        }
    }

    #[test]
    fn closed_form_matches_matrix_path() {
        let mut rng = sampling::stream_rng(11, 0);
        for l in [catalog::split_22(), catalog::sphere(), catalog::named("normal3_2").unwrap()] {
            let f = catalog::standard_frame(&l).unwrap();
            let d = f.delta();
            for _ in 0..50 {
                let bw: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
                let scale = rng.random_range(0.3..5.0);
                let w: Vec<f64> = f.chart_vector(&bw).iter().map(|x| scale * x).collect();
                let b: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
                let t = rng.random_range(-3.0..8.0);
                let closed = trace_busemann(&f, &w, t, &b).unwrap();
                let matrix = trace_busemann_matrix(&f, &w, t, &b).unwrap();
                assert!((closed - matrix).abs() < 1e-9 * (1.0 + closed.abs()), "{closed} vs {matrix}");
            }
        }
    }

    #[test]
    fn v0_is_not_opposite() {
        let f = split_frame();
        let v0 = f.v0().to_f64();
        assert!(matches!(trace_membership(&f, &v0, 1.0, &[0.0, 0.0]), Err(Error::NotOpposite)));
    }

    #[test]
    fn mc_requires_split_signature_and_is_deterministic() {
        let circle = catalog::standard_frame(&catalog::circle()).unwrap();
        let w = opposite(&circle);
        assert!(matches!(trace_measure_mc(&circle, &w, 1.0, 100, 1), Err(Error::SignatureHypothesis(_))));
        let f = split_frame();
        let w = opposite(&f);
        let a = trace_measure_mc(&f, &w, 4.0, 20000, 9).unwrap();
        let b = trace_measure_mc(&f, &w, 4.0, 20000, 9).unwrap();
        assert_eq!(a.hits, b.hits);
        // At t = 0 the trace is {|b|^2 + L0'(b)^2/4 <= 0}: empty up to measure zero.
        assert_eq!(trace_measure_mc(&f, &w, 0.0, 5000, 1).unwrap().hits, 0);
    }

    #[test]
    fn mc_matches_quadrature() {
        // Oracle: polar quadrature of {|b|^2 + E b1^2 b2^2 <= R^2} for the split frame, where
        // L0'(b) = 2 b1 b2.
        let f = split_frame();
        let w = opposite(&f);
        let t = 3.0;
        let e = (t / SQRT2).exp();
        let r2 = 1.0 - (-t / SQRT2).exp();
        let n = 20000;
        let mut area = 0.0;
        for k in 0..n {
            let th = (k as f64 + 0.5) * 2.0 * std::f64::consts::PI / n as f64;
            let (c, s) = (th.cos(), th.sin());
            let a = e * c * c * s * s;
            // Solve rho^2 + a rho^4 = r2 for rho^2.
            let rho2 = if a == 0.0 { r2 } else { (-1.0 + (1.0 + 4.0 * a * r2).sqrt()) / (2.0 * a) };
            area += 0.5 * rho2 * 2.0 * std::f64::consts::PI / n as f64;
        }
        let est = trace_measure_mc(&f, &w, t, 200_000, 3).unwrap();
        assert!((est.estimate - area).abs() < 4.0 * est.stderr + 1e-3, "{} vs {area}", est.estimate);
    }

    #[test]
    fn inclusion_holds_with_unit_constant() {
        let f = split_frame();
        let w: Vec<f64> = opposite(&f).iter().map(|x| 2.0 * x).collect();
        let rep = trace_inclusion_check(&f, &w, 6.0, 1.0, 2.0, 20000, 4).unwrap();
        assert!(rep.members > 0);
        assert_eq!(rep.violations, 0);
        assert!(rep.kappa0_fitted <= 1.0);
    }
}

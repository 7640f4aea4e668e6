//! Local ubiquity of cusp points in the unipotent chart: regularity of the ubiquity function,
//! the measure condition on balls, Monte-Carlo estimates of the ubiquity constant, and the
//! divergence classifier for Hausdorff measures of limsup sets.

use std::sync::Arc;

use num_traits::{Signed, Zero};
use rayon::prelude::*;
use serde::Serialize;

use crate::approx::ApproxFunction;
use crate::conepoints::{linear_fit, CuspPool, RegionShape};
use crate::error::{Error, Result};
use crate::json::{ser_opt_real, ser_real, ser_reals};
use crate::rational::{self, Rat};
use crate::sampling;

const TWO_SQRT2: f64 = 2.0 * std::f64::consts::SQRT_2;

/// Resonant points (cusp points with weights `d_w`) in a chart box, with ubiquity function
/// `rho`, sequence `u_n = n T` and regularity factor `lambda`.
#[derive(Clone, Debug)]
pub struct UbiquitySpec {
    pool: Arc<CuspPool>,
    lo: Vec<f64>,
    hi: Vec<f64>,
    rho: ApproxFunction,
    t: f64,
    lambda: f64,
}

impl UbiquitySpec {
    pub fn new(pool: Arc<CuspPool>, rho: ApproxFunction, t: f64, lambda: f64) -> Result<Self> {
        let (lo, hi) = match pool.region().map(|r| r.shape()) {
            Some(RegionShape::Box { lo, hi }) => (lo.clone(), hi.clone()),
            _ => return Err(Error::InvalidRegion("ubiquity needs a pool restricted to a chart box".into())),
        };
        if !(t > 0.0) {
            return Err(Error::InvalidParameter("T must be positive".into()));
        }
        if !(lambda > 0.0 && lambda < 1.0) {
            return Err(Error::InvalidParameter("regularity factor must lie in (0, 1)".into()));
        }
        Ok(Self { pool, lo, hi, rho, t, lambda })
    }

    /// The ubiquity function `kappa e^{-x/(2 sqrt2)}`.
    pub fn standard_rho(kappa: f64) -> Result<ApproxFunction> {
        ApproxFunction::exp(kappa, Rat::from_integer(1.into()))
    }

    pub fn pool(&self) -> &Arc<CuspPool> {
        &self.pool
    }

    pub fn rho(&self) -> &ApproxFunction {
        &self.rho
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn delta(&self) -> usize {
        self.pool.frame().delta()
    }

    /// Number of resonant points with weight at most `m`.
    pub fn count_up_to(&self, m: f64) -> usize {
        self.pool.points().iter().filter(|p| p.dw <= m).count()
    }

    fn in_patch(&self, y: &[f64]) -> bool {
        y.iter().zip(self.lo.iter().zip(&self.hi)).all(|(v, (l, h))| l <= v && v < h)
    }

    fn min_side(&self) -> f64 {
        self.lo.iter().zip(&self.hi).map(|(l, h)| h - l).fold(f64::INFINITY, f64::min)
    }
}

/// True iff `rho(u_{n+1}) <= lambda rho(u_n)` for `n_min <= n < n_max` with `u_n = n t`.
pub fn u_regular(rho: impl Fn(f64) -> f64, t: f64, lambda: f64, n_min: u32, n_max: u32) -> Result<bool> {
    if !(lambda > 0.0 && lambda < 1.0) {
        return Err(Error::InvalidParameter("regularity factor must lie in (0, 1)".into()));
    }
    Ok((n_min..n_max).all(|n| rho((n + 1) as f64 * t) <= lambda * rho(n as f64 * t)))
}

/// Regularity of the spec's `rho` over the 1000 indices from `n_min`.
pub fn u_regular_check(spec: &UbiquitySpec, n_min: u32) -> Result<bool> {
    u_regular(|x| spec.rho.eval(x), spec.t, spec.lambda, n_min, n_min + 1000)
}

#[derive(Clone, Debug, Serialize)]
pub struct MeasureCondition {
    #[serde(serialize_with = "ser_reals")]
    pub radii: Vec<f64>,
    pub balls: usize,
    #[serde(serialize_with = "ser_real")]
    pub a: f64,
    #[serde(serialize_with = "ser_real")]
    pub b: f64,
    /// Fitted exponent of `m(B)` against `R`.
    #[serde(serialize_with = "ser_real")]
    pub fitted_delta: f64,
    pub delta: usize,
    pub holds: bool,
}

/// Fits `a R^delta <= m(B) <= b R^delta` for the chart measure restricted to the patch, over
/// 200 balls centered in the patch across 5 radii.
pub fn measure_condition(spec: &UbiquitySpec, seed: u64) -> Result<MeasureCondition> {
    let d = spec.delta();
    if d == 0 {
        return Err(Error::InvalidParameter("chart of dimension zero".into()));
    }
    let r0 = 0.1 * spec.min_side();
    let radii: Vec<f64> = (0..5).map(|k| r0 / 2f64.powi(k)).collect();
    let per_ball = 2000;
    let data: Vec<(f64, f64)> = (0..200u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = sampling::stream_rng(seed, i);
            let r = radii[(i % 5) as usize];
            let c = sampling::uniform_in_box(&mut rng, &spec.lo, &spec.hi);
            let inside = (0..per_ball).filter(|_| spec.in_patch(&sampling::uniform_in_ball(&mut rng, &c, r))).count();
            (r, sampling::ball_volume(d, r) * inside as f64 / per_ball as f64)
        })
        .collect();
    let ratios: Vec<f64> = data.iter().map(|(r, m)| m / r.powi(d as i32)).collect();
    let a = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    let b = ratios.iter().copied().fold(0.0, f64::max);
    let pts: Vec<(f64, f64)> = data.iter().filter(|p| p.1 > 0.0).map(|(r, m)| (r.ln(), m.ln())).collect();
    let fitted = linear_fit(&pts).0;
    Ok(MeasureCondition {
        radii,
        balls: data.len(),
        a,
        b,
        fitted_delta: fitted,
        delta: d,
        holds: a > 0.0 && b.is_finite() && (fitted - d as f64).abs() <= 0.1 * d as f64,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct BallEstimate {
    #[serde(serialize_with = "ser_reals")]
    pub center: Vec<f64>,
    #[serde(serialize_with = "ser_real")]
    pub radius: f64,
    #[serde(serialize_with = "ser_reals")]
    pub coverage: Vec<f64>,
    pub n0: Option<u32>,
    #[serde(serialize_with = "ser_opt_real")]
    pub kappa: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct KappaReport {
    pub n_range: (u32, u32),
    pub balls: Vec<BallEstimate>,
    pub stabilized: usize,
    /// Infimum of the coverage fraction over stabilized balls and `n >= n0(B)`.
    #[serde(serialize_with = "ser_opt_real")]
    pub kappa_hat: Option<f64>,
}

/// Points sampled per ball for coverage estimates.
pub const COVERAGE_SAMPLES: usize = 400;

fn coverage_fractions(spec: &UbiquitySpec, center: &[f64], radius: f64, ns: &[u32], rng: &mut impl rand::Rng) -> Vec<f64> {
    let rho_max = ns.iter().map(|&n| spec.rho.eval(n as f64 * spec.t)).fold(0.0, f64::max);
    let u_max = ns.iter().copied().max().unwrap_or(0) as f64 * spec.t;
    let near: Vec<(&[f64], f64)> = spec
        .pool
        .points()
        .iter()
        .filter(|p| p.dw <= u_max && dist(&p.chart, center) <= radius + rho_max)
        .map(|p| (p.chart.as_slice(), p.dw))
        .collect();
    let ys: Vec<Vec<f64>> = (0..COVERAGE_SAMPLES).map(|_| sampling::uniform_in_ball(rng, center, radius)).collect();
    ns.iter()
        .map(|&n| {
            let u = n as f64 * spec.t;
            let r = spec.rho.eval(u);
            let covered = ys.iter().filter(|y| near.iter().any(|(c, w)| *w <= u && dist(c, y) <= r)).count();
            covered as f64 / ys.len() as f64
        })
        .collect()
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

/// Estimates the local ubiquity constant: for random balls `B` of radius at most `r1` inside
/// the patch, the fraction of `B` covered by `B(p, rho(u_n))` over resonant `p` with weight at
/// most `u_n`, minimized over `n >= n0(B)`. Here `n0(B)` is the first `n` with
/// `rho(u_n) <= r(B)/2` (or full coverage from `n` on) whose coverage is positive and within 10% of the coverage at `n + 1`;
/// the radius condition skips the trivial regime where a single covering ball swallows `B`.
pub fn local_ubiquity_estimate(spec: &UbiquitySpec, ball_samples: usize, n_range: (u32, u32), r1: f64, seed: u64) -> Result<KappaReport> {
    check_range(spec, n_range)?;
    let ns: Vec<u32> = (n_range.0..=n_range.1).collect();
    let balls: Vec<BallEstimate> = (0..ball_samples as u64).into_par_iter().map(|i| estimate_ball(spec, &ns, r1, seed, i)).collect();
    Ok(summarize(n_range, balls))
}

/// As [`local_ubiquity_estimate`], drawing balls in index order until `stabilized` of them
/// have a stabilization index (at most `max_balls` draws); the infimum runs over those balls.
pub fn local_ubiquity_stabilized(spec: &UbiquitySpec, stabilized: usize, max_balls: usize, n_range: (u32, u32), r1: f64, seed: u64) -> Result<KappaReport> {
    check_range(spec, n_range)?;
    let ns: Vec<u32> = (n_range.0..=n_range.1).collect();
    let mut balls = Vec::new();
    let mut next = 0u64;
    while balls.iter().filter(|b: &&BallEstimate| b.kappa.is_some()).count() < stabilized && (next as usize) < max_balls {
        let end = (next + 64).min(max_balls as u64);
        let batch: Vec<BallEstimate> = (next..end).into_par_iter().map(|i| estimate_ball(spec, &ns, r1, seed, i)).collect();
        balls.extend(batch);
        next = end;
    }
    let mut kept = Vec::new();
    let mut count = 0;
    for b in balls {
        if count == stabilized {
            break;
        }
        count += b.kappa.is_some() as usize;
        kept.push(b);
    }
    Ok(summarize(n_range, kept))
}

fn check_range(spec: &UbiquitySpec, (n_lo, n_hi): (u32, u32)) -> Result<()> {
    if n_lo >= n_hi {
        return Err(Error::InvalidParameter("empty n range".into()));
    }
    let deepest = n_hi as f64 * spec.t;
    if deepest > spec.pool.complete_depth() {
        return Err(Error::InsufficientDepth(format!(
            "u_n = {deepest} exceeds the pool's complete depth {}",
            spec.pool.complete_depth()
        )));
    }
    Ok(())
}

fn estimate_ball(spec: &UbiquitySpec, ns: &[u32], r1: f64, seed: u64, i: u64) -> BallEstimate {
    let mut rng = sampling::stream_rng(seed, i);
    let radius = r1 * 10f64.powf(-rand::Rng::random::<f64>(&mut rng));
    let lo: Vec<f64> = spec.lo.iter().map(|l| l + radius).collect();
    let hi: Vec<f64> = spec.hi.iter().map(|h| h - radius).collect();
    let center = sampling::uniform_in_box(&mut rng, &lo, &hi);
    let coverage = coverage_fractions(spec, &center, radius, ns, &mut rng);
    let n0_idx = (0..coverage.len() - 1).find(|&k| {
        let (a, b) = (coverage[k], coverage[k + 1]);
        let resolved = spec.rho.eval(ns[k] as f64 * spec.t) <= radius / 2.0 || coverage[k..].iter().all(|&c| c == 1.0);
        resolved && a > 0.0 && (a - b).abs() <= 0.1 * a.max(b)
    });
    let kappa = n0_idx.map(|k| coverage[k..].iter().copied().fold(f64::INFINITY, f64::min));
    BallEstimate { center, radius, coverage, n0: n0_idx.map(|k| ns[k]), kappa }
}

fn summarize(n_range: (u32, u32), balls: Vec<BallEstimate>) -> KappaReport {
    let stabilized = balls.iter().filter(|b| b.kappa.is_some()).count();
    let kappa_hat = balls.iter().filter_map(|b| b.kappa).reduce(f64::min);
    KappaReport { n_range, balls, stabilized, kappa_hat }
}

/// Smallest `kappa` on a doubling grid from `2^-6` such that the balls `B(p, kappa e^{-u/(2 sqrt2)})`
/// around resonant points of weight at most `u` cover at least `target` of the patch.
pub fn fit_kappa(pool: &CuspPool, u: f64, target: f64, seed: u64) -> Result<f64> {
    let (lo, hi) = match pool.region().map(|r| r.shape()) {
        Some(RegionShape::Box { lo, hi }) => (lo.clone(), hi.clone()),
        _ => return Err(Error::InvalidRegion("needs a chart box".into())),
    };
    let pts: Vec<&[f64]> = pool.points().iter().filter(|p| p.dw <= u).map(|p| p.chart.as_slice()).collect();
    if pts.is_empty() {
        return Err(Error::EmptyPool);
    }
    let mut rng = sampling::stream_rng(seed, 0);
    let ys: Vec<Vec<f64>> = (0..2000).map(|_| sampling::uniform_in_box(&mut rng, &lo, &hi)).collect();
    let nearest: Vec<f64> = ys
        .par_iter()
        .map(|y| pts.iter().map(|c| dist(c, y)).fold(f64::INFINITY, f64::min))
        .collect();
    let scale = (-u / TWO_SQRT2).exp();
    let mut kappa = 1.0 / 64.0;
    for _ in 0..40 {
        let covered = nearest.iter().filter(|&&d| d <= kappa * scale).count() as f64 / ys.len() as f64;
        if covered >= target {
            return Ok(kappa);
        }
        kappa *= 2.0;
    }
    Err(Error::InvalidParameter("no covering constant found".into()))
}

/// A dimension function `x^s`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PowerDimension {
    #[serde(serialize_with = "crate::json::ser_rat")]
    pub s: Rat,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    MeasureInfinite,
    MeasureFiniteCover,
}

#[derive(Clone, Debug, Serialize)]
pub struct Classification {
    pub verdict: Verdict,
    /// `symbolic` or `numeric`.
    pub method: &'static str,
    /// Decay exponent `s a - delta r` of the summand in units of `T / (2 sqrt2)`, when symbolic.
    pub decay: Option<String>,
    /// The infinite-measure verdict rests on the ubiquity theorem for limsup sets.
    pub conditional: bool,
}

fn exp_rate(f: &ApproxFunction) -> Option<Rat> {
    match f {
        ApproxFunction::Exp { rate, gamma, .. } if *gamma == 0.0 => Some(rate.clone()),
        _ => None,
    }
}

/// Classifies `sum_n phi(psi(u_n)) rho(u_n)^{-delta}` for `phi(x) = x^s`. With `psi` and `rho`
/// pure exponentials in the weight the sum is geometric and diverges iff
/// `s rate(psi) <= delta rate(rho)`; other inputs fall back to [`classify_numeric`].
pub fn divergence_classifier(phi: &PowerDimension, psi: &ApproxFunction, rho: &ApproxFunction, delta: usize, t: f64) -> Result<Classification> {
    if !phi.s.is_positive() {
        return Err(Error::InvalidParameter("dimension exponent must be positive".into()));
    }
    let delta_r = Rat::from_integer((delta as i64).into());
    let classification = match (exp_rate(psi), exp_rate(rho)) {
        (Some(a), Some(r)) if r.is_positive() => {
            let decay = &phi.s * &a - &delta_r * &r;
            let verdict = if decay.is_positive() { Verdict::MeasureFiniteCover } else { Verdict::MeasureInfinite };
            Classification { verdict, method: "symbolic", decay: Some(rational::fmt_rat(&decay)), conditional: verdict == Verdict::MeasureInfinite }
        }
        _ => {
            let verdict = classify_numeric(rational::to_f64(&phi.s), psi, rho, delta, t);
            Classification { verdict, method: "numeric", decay: None, conditional: verdict == Verdict::MeasureInfinite }
        }
    };
    if classification.verdict == Verdict::MeasureInfinite && phi.s > delta_r {
        return Err(Error::InvalidParameter("x^s with s > delta does not dominate x^delta".into()));
    }
    if delta == 0 && !phi.s.is_zero() && classification.verdict == Verdict::MeasureInfinite {
        return Err(Error::InvalidParameter("zero-dimensional chart".into()));
    }
    Ok(classification)
}

/// Partial-sum classification: finite when the mean ratio of the last four summand blocks of
/// 25 terms each is at most the geometric-decay threshold.
pub fn classify_numeric(s: f64, psi: &ApproxFunction, rho: &ApproxFunction, delta: usize, t: f64) -> Verdict {
    let log_term = |n: u32| {
        let u = n as f64 * t;
        s * psi.ln_eval(u) - delta as f64 * rho.ln_eval(u)
    };
    let block = |k: u32| -> f64 {
        let logs: Vec<f64> = (k * 25 + 1..=(k + 1) * 25).map(log_term).collect();
        let m = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        m + logs.iter().map(|l| (l - m).exp()).sum::<f64>().ln()
    };
    let first = block(4);
    let last = block(7);
    let mean_log_ratio = (last - first) / 3.0;
    if mean_log_ratio.is_finite() && mean_log_ratio <= crate::dioph::DECAY_RATIO.ln() {
        Verdict::MeasureFiniteCover
    } else {
        Verdict::MeasureInfinite
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;
    use crate::conepoints::ConeRegion;
    use crate::dioph::default_shell_width;
    use crate::rational::{rat, ratio};

    fn circle_spec(kappa: f64) -> UbiquitySpec {
        let frame = Arc::new(catalog::standard_frame(&catalog::circle()).unwrap());
        let region = ConeRegion::centered_box(frame.clone(), 1.0).unwrap();
        let pool = Arc::new(CuspPool::enumerate(frame, region, 1 << 10).unwrap());
        let t = default_shell_width();
        let lambda = (-t / TWO_SQRT2).exp() * 1.01;
        UbiquitySpec::new(pool, UbiquitySpec::standard_rho(kappa).unwrap(), t, lambda).unwrap()
    }

    #[test]
    fn regularity() {
        let t = 2.0;
        let lambda = (-t / TWO_SQRT2).exp() * 1.01;
        assert!(u_regular(|x| 3.0 * (-x / TWO_SQRT2).exp(), t, lambda, 1, 500).unwrap());
        assert!(!u_regular(|x| 1.0 / x.ln(), t, 0.9, 2, 500).unwrap());
        assert!(u_regular(|x| x, t, 1.0, 1, 5).is_err());
        let spec = circle_spec(1.0);
        assert!(u_regular_check(&spec, 1).unwrap());
    }

    #[test]
    fn measure_condition_in_a_box() {
        let spec = circle_spec(1.0);
        let m = measure_condition(&spec, 2).unwrap();
        assert!(m.holds, "{m:?}");
        // In one dimension a ball centered in the patch keeps at least half its length.
        assert!(m.a >= 0.9 && m.b <= 2.0 + 1e-12);
    }

    #[test]
    fn huge_rho_covers_everything() {
        let spec = circle_spec(1e6);
        let rep = local_ubiquity_estimate(&spec, 10, (3, 6), 0.05, 1).unwrap();
        assert_eq!(rep.kappa_hat, Some(1.0));
        assert_eq!(rep.stabilized, 10);
    }

    #[test]
    fn stabilized_variant_reaches_its_target() {
        let spec = circle_spec(2.0);
        let rep = local_ubiquity_stabilized(&spec, 20, 400, (3, 9), 0.2, 5).unwrap();
        assert_eq!(rep.stabilized, 20);
        assert!(rep.balls.last().unwrap().kappa.is_some());
        let again = local_ubiquity_stabilized(&spec, 20, 400, (3, 9), 0.2, 5).unwrap();
        assert_eq!(rep.kappa_hat, again.kappa_hat);
    }

    #[test]
    fn too_deep_probe_is_rejected() {
        let spec = circle_spec(1.0);
        assert!(matches!(local_ubiquity_estimate(&spec, 3, (3, 40), 0.05, 1), Err(Error::InsufficientDepth(_))));
    }

    #[test]
    fn classifier_examples() {
        let rho = UbiquitySpec::standard_rho(2.0).unwrap();
        let t = default_shell_width();
        // psi = rho and phi = x^delta: every summand is constant.
        let v = divergence_classifier(&PowerDimension { s: rat(1) }, &rho, &rho, 1, t).unwrap();
        assert_eq!(v.verdict, Verdict::MeasureInfinite);
        let psi = ApproxFunction::exp(1.0, rat(3)).unwrap();
        let at = |s: Rat| divergence_classifier(&PowerDimension { s }, &psi, &rho, 1, t).unwrap().verdict;
        assert_eq!(at(ratio(3, 10)), Verdict::MeasureInfinite);
        assert_eq!(at(ratio(1, 3)), Verdict::MeasureInfinite);
        assert_eq!(at(ratio(2, 5)), Verdict::MeasureFiniteCover);
    }

    #[test]
    fn numeric_agrees_with_symbolic_off_the_boundary() {
        let rho = UbiquitySpec::standard_rho(1.0).unwrap();
        let t = default_shell_width();
        for alpha in 1..5 {
            let psi = ApproxFunction::exp(1.0, rat(1 + alpha)).unwrap();
            for k in 1..20 {
                let s = k as f64 / 20.0;
                let crit = 2.0 / (1 + alpha) as f64;
                if (s - crit).abs() < 0.05 {
                    continue;
                }
                let sym = divergence_classifier(&PowerDimension { s: ratio(k, 20) }, &psi, &rho, 2, t).unwrap();
                assert_eq!(sym.verdict, classify_numeric(s, &psi, &rho, 2, t), "alpha {alpha} s {s}");
            }
        }
    }

    #[test]
    fn tabulated_input_goes_numeric() {
        let rho = UbiquitySpec::standard_rho(1.0).unwrap();
        let psi = ApproxFunction::tabulated(vec![(0.0, 1.0), (600.0, (-600.0f64).exp())]).unwrap();
        let c = divergence_classifier(&PowerDimension { s: ratio(1, 2) }, &psi, &rho, 1, 2.0).unwrap();
        assert_eq!(c.method, "numeric");
    }
}

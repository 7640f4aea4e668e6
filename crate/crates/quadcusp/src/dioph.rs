//! Simultaneous Diophantine approximation on rational quadrics: approximant search, the
//! rigidity of approximants off the quadric, the translation into limsup sets of the unipotent
//! chart, and dimension estimates from shell sums.

use num_integer::Integer;
use num_traits::ToPrimitive;
use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::approx::ApproxFunction;
use crate::conepoints::CuspPool;
use crate::error::{Error, Result};
use crate::forms::{IsotropicVector, RatSymForm};
use crate::frame::CuspFrame;
use crate::json::{ser_opt_real, ser_real, ser_reals};
use crate::rational::{self, Rat};
use crate::sampling;

const TWO_SQRT2: f64 = 2.0 * std::f64::consts::SQRT_2;

/// Default shell width, aligning shells of weight with dyadic denominator bins.
pub fn default_shell_width() -> f64 {
    TWO_SQRT2 * std::f64::consts::LN_2
}

/// The point `x` of the quadric whose line `(x, 1)` has chart coordinate `b`.
pub fn chart_to_quadric(frame: &CuspFrame, b: &[f64]) -> Result<Vec<f64>> {
    let v = frame.chart_vector(b);
    let s = frame.dim();
    if v[s - 1].abs() <= 1e-12 * v.norm() {
        return Err(Error::LineAtInfinity);
    }
    Ok((0..s - 1).map(|i| v[i] / v[s - 1]).collect())
}

/// Chart coordinate of the line `(x, 1)`.
pub fn quadric_to_chart(frame: &CuspFrame, x: &[f64]) -> Result<Vec<f64>> {
    let mut v = x.to_vec();
    v.push(1.0);
    frame.line_to_unipotent(&v)
}

fn max_norm_error(x: &[f64], w: &[i64]) -> f64 {
    let q = *w.last().expect("cone vectors are nonempty") as f64;
    x.iter().zip(w).map(|(xi, &p)| (q * xi - p as f64).abs()).fold(0.0, f64::max)
}

#[derive(Clone, Debug, Serialize)]
pub struct Approximant {
    pub point: Vec<i64>,
    pub q: i64,
    #[serde(serialize_with = "ser_real")]
    pub error: f64,
}

/// Pool points `(p, q)` with `q <= q_max` and `|q x - p|_max <= psi(q)`, sorted by `q`.
pub fn approximants(x: &[f64], psi: &ApproxFunction, q_max: i64, pool: &[IsotropicVector]) -> Vec<Approximant> {
    let mut out: Vec<Approximant> = pool
        .iter()
        .filter(|w| w.last() <= q_max && w.dim() == x.len() + 1)
        .filter_map(|w| {
            let q = w.last();
            let err = max_norm_error(x, w.coords());
            (err <= psi.eval(q as f64) + 1e-12 * q as f64).then(|| Approximant {
                point: w.coords()[..x.len()].to_vec(),
                q,
                error: err,
            })
        })
        .collect();
    out.sort_by(|a, b| a.q.cmp(&b.q).then_with(|| a.point.cmp(&b.point)));
    out
}

/// Random points of the real quadric `q(x) = 1`, by scaling Gaussian directions with
/// `q(d) > 0`.
pub fn sample_quadric_points(q: &RatSymForm, count: usize, seed: u64) -> Vec<Vec<f64>> {
    let m = q.to_dmatrix();
    let n = q.dim();
    if q.signature().0 == 0 {
        return Vec::new();
    }
    let mut rng = sampling::stream_rng(seed, 0);
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let d = nalgebra::DVector::from_fn(n, |_, _| rng.sample::<f64, _>(rand_distr::StandardNormal));
        let v = d.dot(&(&m * &d));
        if v > 1e-6 * d.norm_squared() {
            out.push((d / v.sqrt()).iter().copied().collect());
        }
    }
    out
}

/// A rational `p/q` close to a sampled point of the quadric.
#[derive(Clone, Debug, Serialize)]
pub struct RationalHit {
    pub trial: usize,
    pub p: Vec<i64>,
    pub q: i64,
    pub on_quadric: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct LemmaAproxReport {
    pub trials: usize,
    pub q_max: i64,
    pub hits: usize,
    pub on_quadric: usize,
    pub off_quadric: usize,
    /// One more than the largest denominator of an approximant off the quadric.
    pub q0_empirical: i64,
    /// Smallest `q0` with `S psi(q) (2 q X + psi(q)) < 1/N` for all `q >= q0` up to the horizon,
    /// where `S` is the sum of absolute coefficients and `X` bounds `|x|_max`; `None` when no
    /// such `q0` exists within the horizon.
    pub q0_theory: Option<i64>,
    pub value_denominator: String,
    pub off_quadric_examples: Vec<RationalHit>,
    pub pass: bool,
}

const THEORY_HORIZON: i64 = 1_000_000;

/// Exhaustive scan of all rationals `p/q` (lowest terms, `q <= q_max`) with
/// `|x - p/q|_max <= psi(q)/q` around sampled points `x` of `q(x) = 1`, testing `q(p/q) = 1`
/// exactly. Does not check the decay hypothesis on `psi`.
pub fn scan_lemma_aprox(q: &RatSymForm, psi: &ApproxFunction, q_max: i64, trials: usize, seed: u64) -> Result<LemmaAproxReport> {
    if q_max < 1 {
        return Err(Error::InvalidParameter("q_max must be positive".into()));
    }
    let n = q.dim();
    let (a, scale) = q.integer_matrix();
    let xs = sample_quadric_points(q, trials, seed);
    let per_trial: Vec<Vec<RationalHit>> = xs
        .par_iter()
        .enumerate()
        .map(|(trial, x)| {
            let mut hits = Vec::new();
            for qq in 1..=q_max {
                let r = psi.eval(qq as f64);
                let lo: Vec<i64> = x.iter().map(|xi| (qq as f64 * xi - r).ceil() as i64).collect();
                let hi: Vec<i64> = x.iter().map(|xi| (qq as f64 * xi + r).floor() as i64).collect();
                if lo.iter().zip(&hi).any(|(l, h)| l > h) {
                    continue;
                }
                let mut p = lo.clone();
                loop {
                    if p.iter().fold(qq, |g, &v| g.gcd(&v)) == 1 {
                        let on = crate::forms::eval_i128(&a, &p) == scale * (qq as i128) * (qq as i128);
                        hits.push(RationalHit { trial, p: p.clone(), q: qq, on_quadric: on });
                    }
                    let mut k = 0;
                    while k < n {
                        if p[k] < hi[k] {
                            p[k] += 1;
                            break;
                        }
                        p[k] = lo[k];
                        k += 1;
                    }
                    if k == n {
                        break;
                    }
                }
            }
            hits
        })
        .collect();
    let all: Vec<RationalHit> = per_trial.into_iter().flatten().collect();
    let off: Vec<&RationalHit> = all.iter().filter(|h| !h.on_quadric).collect();
    let q0_empirical = off.iter().map(|h| h.q).max().map_or(1, |m| m + 1);

    let big_n = q.value_denominator().to_f64().unwrap_or(f64::INFINITY);
    let s_abs: f64 = q.entries().iter().flatten().map(|e| rational::to_f64(e).abs()).sum();
    let x_bound = xs.iter().flatten().map(|v| v.abs()).fold(0.0, f64::max);
    let g = |qq: i64| {
        let r = psi.eval(qq as f64);
        s_abs * r * (2.0 * qq as f64 * x_bound + r)
    };
    let q0_theory = if xs.is_empty() {
        Some(1)
    } else if g(THEORY_HORIZON) >= 1.0 / big_n {
        None
    } else {
        let last_bad = (1..=THEORY_HORIZON).rev().find(|&qq| g(qq) >= 1.0 / big_n);
        Some(last_bad.map_or(1, |m| m + 1))
    };
    let pass = q0_theory.is_some_and(|t| q0_empirical <= t);
    Ok(LemmaAproxReport {
        trials: xs.len(),
        q_max,
        hits: all.len(),
        on_quadric: all.len() - off.len(),
        off_quadric: off.len(),
        q0_empirical,
        q0_theory,
        value_denominator: q.value_denominator().to_string(),
        off_quadric_examples: off.iter().take(50).map(|h| (*h).clone()).collect(),
        pass,
    })
}

/// [`scan_lemma_aprox`] after checking that `x psi(x) -> 0`.
pub fn check_lemma_aprox(q: &RatSymForm, psi: &ApproxFunction, q_max: i64, trials: usize, seed: u64) -> Result<LemmaAproxReport> {
    psi.require_x_psi_to_zero()?;
    scan_lemma_aprox(q, psi, q_max, trials, seed)
}

#[derive(Clone, Debug, Serialize)]
pub struct DwWeight {
    #[serde(serialize_with = "ser_real")]
    pub dw: f64,
    /// `|d_w - 2 sqrt2 ln |w||` for the Euclidean norm.
    #[serde(serialize_with = "ser_real")]
    pub deviation: f64,
}

/// The weight `d_w = 2 sqrt2 ln |b_L(v0, w)|`.
pub fn dw_weight(w: &[i64], frame: &CuspFrame) -> Result<DwWeight> {
    let b = frame.pairing_with_v0(w)?;
    let bf = rational::to_f64(&b).abs();
    if bf == 0.0 {
        return Err(Error::LineAtInfinity);
    }
    let dw = TWO_SQRT2 * bf.ln();
    let norm = w.iter().map(|&x| (x as f64).powi(2)).sum::<f64>().sqrt();
    Ok(DwWeight { dw, deviation: (dw - TWO_SQRT2 * norm.ln()).abs() })
}

fn chart_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

/// `#{w in pool : |b - u_w| <= Psi(d_w)}`.
pub fn stilde_count(b: &[f64], big_psi: &ApproxFunction, pool: &CuspPool) -> usize {
    pool.points().iter().filter(|p| chart_dist(b, &p.chart) <= big_psi.eval(p.dw)).count()
}

/// Constants of the double inclusion fitted over a pool and sample points.
#[derive(Clone, Debug, Serialize)]
pub struct BracketConstants {
    /// Bounds `q / |b_L(v0, w)|` and its inverse over the pool.
    #[serde(serialize_with = "ser_real")]
    pub l: f64,
    /// Bi-Lipschitz constant between the max-norm on the quadric and the chart distance.
    #[serde(serialize_with = "ser_real")]
    pub lip: f64,
    #[serde(serialize_with = "ser_real")]
    pub l1: f64,
}

pub fn fit_bracket_constants(pool: &CuspPool, xs: &[Vec<f64>]) -> Result<BracketConstants> {
    let frame = pool.frame();
    let mut l: f64 = 1.0;
    for p in pool.points() {
        let b = rational::to_f64(&frame.pairing_with_v0(p.w.coords())?).abs();
        let q = p.w.last() as f64;
        l = l.max(q / b).max(b / q);
    }
    let charts: Vec<Vec<f64>> = xs.iter().map(|x| quadric_to_chart(frame, x)).collect::<Result<_>>()?;
    let lip = xs
        .par_iter()
        .zip(&charts)
        .map(|(x, b)| {
            let mut m: f64 = 1.0;
            for p in pool.points() {
                let q = p.w.last() as f64;
                let e = max_norm_error(x, p.w.coords()) / q;
                let c = chart_dist(b, &p.chart);
                if e > 0.0 && c > 0.0 {
                    m = m.max(e / c).max(c / e);
                }
            }
            m
        })
        .reduce(|| 1.0, f64::max);
    Ok(BracketConstants { l, lip, l1: l * lip * (1.0 + 1e-9) })
}

#[derive(Clone, Debug, Serialize)]
pub struct BracketViolation {
    pub sample: usize,
    pub w: Vec<i64>,
    pub lower_event: bool,
    pub approx_event: bool,
    pub upper_event: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct InclusionReport {
    pub samples: usize,
    pub pool_size: usize,
    pub constants: BracketConstants,
    pub events_lower: usize,
    pub events_approx: usize,
    pub events_upper: usize,
    pub violations: usize,
    pub examples: Vec<BracketViolation>,
}

/// Checks per pool point and sample that `Psi_1`-events are `psi`-approximations and that
/// `psi`-approximations are `Psi_2`-events, with
/// `Psi_1(x) = psi(L E) / (L1 E)`, `Psi_2(x) = L1 psi(E / L) / E` and `E = e^{x/(2 sqrt2)}`.
pub fn inclusion_check(xs: &[Vec<f64>], psi: &ApproxFunction, pool: &CuspPool, constants: &BracketConstants) -> Result<InclusionReport> {
    let frame = pool.frame();
    let mut charts = Vec::with_capacity(xs.len());
    for x in xs {
        let b = quadric_to_chart(frame, x)?;
        if let Some(r) = pool.region() {
            if !r.contains_chart(&b) {
                return Err(Error::InvalidRegion("sample point outside the pool's patch".into()));
            }
        }
        charts.push(b);
    }
    let (l, l1) = (constants.l, constants.l1);
    let thresholds: Vec<(f64, f64)> = pool
        .points()
        .iter()
        .map(|p| {
            let e = (p.dw / TWO_SQRT2).exp();
            (psi.eval(l * e) / (l1 * e), l1 * psi.eval(e / l) / e)
        })
        .collect();
    let per: Vec<(usize, usize, usize, Vec<BracketViolation>)> = xs
        .par_iter()
        .zip(&charts)
        .enumerate()
        .map(|(i, (x, b))| {
            let (mut lo, mut ap, mut up) = (0, 0, 0);
            let mut bad = Vec::new();
            for (p, &(t1, t2)) in pool.points().iter().zip(&thresholds) {
                let q = p.w.last();
                let c = chart_dist(b, &p.chart);
                let e_lo = c <= t1;
                let e_up = c <= t2;
                let e_ap = max_norm_error(x, p.w.coords()) <= psi.eval(q as f64);
                lo += e_lo as usize;
                up += e_up as usize;
                ap += e_ap as usize;
                if (e_lo && !e_ap) || (e_ap && !e_up) {
                    bad.push(BracketViolation {
                        sample: i,
                        w: p.w.coords().to_vec(),
                        lower_event: e_lo,
                        approx_event: e_ap,
                        upper_event: e_up,
                    });
                }
            }
            (lo, ap, up, bad)
        })
        .collect();
    let violations: Vec<BracketViolation> = per.iter().flat_map(|p| p.3.iter().cloned()).collect();
    Ok(InclusionReport {
        samples: xs.len(),
        pool_size: pool.len(),
        constants: constants.clone(),
        events_lower: per.iter().map(|p| p.0).sum(),
        events_approx: per.iter().map(|p| p.1).sum(),
        events_upper: per.iter().map(|p| p.2).sum(),
        violations: violations.len(),
        examples: violations.into_iter().take(50).collect(),
    })
}

/// Chart points near pool points: `u_w + r theta` with `log10 r` uniform in
/// `[-max_exp, -min_exp]`, keeping only points inside the pool's patch.
pub fn sample_near_pool(pool: &CuspPool, count: usize, min_exp: f64, max_exp: f64, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = sampling::stream_rng(seed, 0);
    let d = pool.frame().delta();
    let mut out = Vec::with_capacity(count);
    if pool.is_empty() {
        return out;
    }
    let mut attempts = 0;
    while out.len() < count && attempts < 100 * count {
        attempts += 1;
        let p = &pool.points()[rng.random_range(0..pool.len())];
        let r = 10f64.powf(-rng.random_range(min_exp..=max_exp));
        let dir = sampling::uniform_in_ball(&mut rng, &vec![0.0; d], 1.0);
        let n = dir.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-300);
        let b: Vec<f64> = p.chart.iter().zip(&dir).map(|(c, u)| c + r * u / n).collect();
        if pool.region().is_none_or(|reg| reg.contains_chart(&b)) {
            out.push(b);
        }
    }
    out
}

/// `sigma (n - 1)` for the quadric in `R^n`.
pub fn predicted_dimension(psi: &ApproxFunction, n: usize) -> Result<Rat> {
    psi.require_x_psi_to_zero()?;
    if n < 1 {
        return Err(Error::InvalidParameter("ambient dimension must be positive".into()));
    }
    Ok(psi.sigma()? * Rat::from_integer(((n - 1) as i64).into()))
}

/// Counts of pool points per complete shell `[nT, (n+1)T)` of weight, `n >= 0`.
pub fn shell_counts(pool: &CuspPool, t: f64) -> Result<Vec<(i64, usize)>> {
    if !(t > 0.0) {
        return Err(Error::InvalidParameter("shell width must be positive".into()));
    }
    let depth = pool.complete_depth();
    if !depth.is_finite() {
        return Err(Error::InsufficientDepth("pool has no region, so no completeness bound".into()));
    }
    let n_max = (depth / t).floor() as i64 - 1;
    if n_max < 0 {
        return Ok(Vec::new());
    }
    let mut counts = vec![0usize; (n_max + 1) as usize];
    for p in pool.points() {
        if p.dw >= 0.0 {
            let k = (p.dw / t).floor() as i64;
            if k <= n_max {
                counts[k as usize] += 1;
            }
        }
    }
    Ok(counts.into_iter().enumerate().map(|(k, c)| (k as i64, c)).collect())
}

#[derive(Clone, Debug, Serialize)]
pub struct ShellLaw {
    pub counts: Vec<(i64, usize)>,
    /// Fitted growth rate of `ln count` per unit weight over shells with at least 30 points.
    #[serde(serialize_with = "ser_opt_real")]
    pub rate: Option<f64>,
    /// `Delta / (2 sqrt2)`.
    #[serde(serialize_with = "ser_real")]
    pub expected: f64,
}

pub fn shell_law(pool: &CuspPool, t: f64) -> Result<ShellLaw> {
    let counts = shell_counts(pool, t)?;
    let pts: Vec<(f64, f64)> = counts.iter().filter(|c| c.1 >= 30).map(|c| (c.0 as f64 * t, (c.1 as f64).ln())).collect();
    let rate = (pts.len() >= 3).then(|| crate::conepoints::linear_fit(&pts).0);
    Ok(ShellLaw { counts, rate, expected: pool.frame().delta() as f64 / TWO_SQRT2 })
}

#[derive(Clone, Debug, Serialize)]
pub struct GridVerdict {
    #[serde(serialize_with = "ser_real")]
    pub s: f64,
    pub bounded: bool,
    #[serde(serialize_with = "ser_real")]
    pub mean_ratio: f64,
    #[serde(serialize_with = "ser_reals")]
    pub last_ratios: Vec<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct CrossoverReport {
    #[serde(serialize_with = "ser_real")]
    pub shell_width: f64,
    pub shells: Vec<(i64, usize)>,
    pub grid: Vec<GridVerdict>,
    /// Smallest grid exponent classified bounded.
    #[serde(serialize_with = "ser_opt_real")]
    pub crossover: Option<f64>,
}

/// Geometric-decay threshold for shell increments.
pub const DECAY_RATIO: f64 = 0.9;

/// Upper estimate of the dimension of the chart limsup set of `Psi` from the shell increments
/// `I_n = sum_{w in shell n} Psi(d_w)^s`: `s` is bounded when the mean ratio
/// `(I_N / I_{N-3})^{1/3}` across the last four shells is at most [`DECAY_RATIO`]. The mean
/// smooths the parity oscillation of shell counts on the circle, where pairings are squares or
/// twice squares.
pub fn critical_exponent_upper(pool: &CuspPool, big_psi: &ApproxFunction, t: f64, s_grid: &[f64]) -> Result<CrossoverReport> {
    let shells = shell_counts(pool, t)?;
    let nonempty = shells.iter().filter(|c| c.1 > 0).count();
    if nonempty < 8 {
        return Err(Error::InsufficientDepth(format!("{nonempty} nonempty complete shells, 8 needed")));
    }
    let n_shells = shells.len();
    let mut members: Vec<Vec<f64>> = vec![Vec::new(); n_shells];
    for p in pool.points() {
        if p.dw >= 0.0 {
            let k = (p.dw / t).floor() as usize;
            if k < n_shells {
                members[k].push(big_psi.eval(p.dw));
            }
        }
    }
    let mut grid: Vec<f64> = s_grid.to_vec();
    grid.sort_by(f64::total_cmp);
    let verdicts: Vec<GridVerdict> = grid
        .par_iter()
        .map(|&s| {
            let inc: Vec<f64> = members[n_shells - 4..].iter().map(|m| m.iter().map(|v| v.powf(s)).sum()).collect();
            let ratios: Vec<f64> = inc.windows(2).map(|w| if w[0] > 0.0 { w[1] / w[0] } else { f64::INFINITY }).collect();
            let mean = if inc[0] > 0.0 { (inc[3] / inc[0]).powf(1.0 / 3.0) } else { f64::INFINITY };
            GridVerdict { s, bounded: mean <= DECAY_RATIO, mean_ratio: mean, last_ratios: ratios }
        })
        .collect();
    let crossover = verdicts.iter().find(|v| v.bounded).map(|v| v.s);
    Ok(CrossoverReport { shell_width: t, shells, grid: verdicts, crossover })
}

/// Evenly spaced grid `lo, lo + step, ..., <= hi`.
pub fn uniform_grid(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let n = ((hi - lo) / step + 1e-9).floor() as usize;
    (0..=n).map(|k| lo + k as f64 * step).collect()
}

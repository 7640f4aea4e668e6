//! Enumeration of primitive integer points `(p, q)` on the cone of `L_q`, i.e. rational points
//! `p/q` of the quadric, and the counting histograms used to test their growth and
//! equidistribution.

use std::sync::Arc;

use nalgebra::DMatrix;
use num_integer::Integer;
use num_traits::{Signed, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forms::{desuspend_form, IsotropicVector, RatSymForm};
use crate::frame::CuspFrame;
use crate::json::{ser_opt_real, ser_real};
use crate::rational::{self, Rat};

/// Shape of a region of the projectivized cone.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RegionShape {
    /// Half-open box `[lo, hi)` in chart coordinates.
    Box { lo: Vec<f64>, hi: Vec<f64> },
    /// Lines within `max_angle` of the line of `center`.
    Cap { center: Vec<f64>, max_angle: f64 },
}

/// A relatively compact region of the cone whose closure avoids the hyperplane at infinity
/// `H_0 = ker b_L(v0, .)` of the chart.
#[derive(Clone, Debug)]
pub struct ConeRegion {
    frame: Arc<CuspFrame>,
    shape: RegionShape,
}

fn line_angle(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    (dot.abs() / (na * nb)).min(1.0).acos()
}

impl ConeRegion {
    pub fn chart_box(frame: Arc<CuspFrame>, lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        let d = frame.delta();
        if lo.len() != d || hi.len() != d {
            return Err(Error::DimensionMismatch { expected: d, got: lo.len().min(hi.len()) });
        }
        if lo.iter().zip(&hi).any(|(a, b)| !(a < b) || !a.is_finite() || !b.is_finite()) {
            return Err(Error::InvalidRegion("box needs finite lo < hi in every coordinate".into()));
        }
        Ok(Self { frame, shape: RegionShape::Box { lo, hi } })
    }

    /// The cube `[-r, r)^Delta` around the chart origin.
    pub fn centered_box(frame: Arc<CuspFrame>, r: f64) -> Result<Self> {
        let d = frame.delta();
        Self::chart_box(frame, vec![-r; d], vec![r; d])
    }

    pub fn cap(frame: Arc<CuspFrame>, center: Vec<f64>, max_angle: f64) -> Result<Self> {
        let s = frame.dim();
        if center.len() != s {
            return Err(Error::DimensionMismatch { expected: s, got: center.len() });
        }
        if !(max_angle > 0.0) {
            return Err(Error::InvalidRegion("cap angle must be positive".into()));
        }
        // Angle between the center line and the hyperplane H_0 with normal M_L v0.
        let normal = frame.form().to_dmatrix() * nalgebra::DVector::from_vec(frame.v0().to_f64());
        let to_normal = line_angle(&center, normal.as_slice());
        let to_plane = std::f64::consts::FRAC_PI_2 - to_normal;
        if to_plane <= max_angle {
            return Err(Error::InvalidRegion("cap closure meets the hyperplane at infinity".into()));
        }
        Ok(Self { frame, shape: RegionShape::Cap { center, max_angle } })
    }

    pub fn from_shape(frame: Arc<CuspFrame>, shape: RegionShape) -> Result<Self> {
        match shape {
            RegionShape::Box { lo, hi } => Self::chart_box(frame, lo, hi),
            RegionShape::Cap { center, max_angle } => Self::cap(frame, center, max_angle),
        }
    }

    pub fn frame(&self) -> &Arc<CuspFrame> {
        &self.frame
    }

    pub fn shape(&self) -> &RegionShape {
        &self.shape
    }

    /// Whether the chart point `b` lies in the region.
    pub fn contains_chart(&self, b: &[f64]) -> bool {
        match &self.shape {
            RegionShape::Box { lo, hi } => b.iter().zip(lo.iter().zip(hi)).all(|(x, (l, h))| l <= x && x < h),
            RegionShape::Cap { center, max_angle } => {
                let v = self.frame.chart_vector(b);
                line_angle(v.as_slice(), center) <= *max_angle
            }
        }
    }

    /// Whether the line of the ambient vector `x` lies in the region.
    pub fn contains_line(&self, x: &[f64]) -> bool {
        match &self.shape {
            RegionShape::Cap { center, max_angle } => line_angle(x, center) <= *max_angle,
            RegionShape::Box { .. } => match self.frame.line_to_unipotent(x) {
                Ok(b) => self.contains_chart(&b),
                Err(_) => false,
            },
        }
    }

    /// Lebesgue measure of the region in chart coordinates, for boxes.
    pub fn chart_volume(&self) -> Option<f64> {
        match &self.shape {
            RegionShape::Box { lo, hi } => Some(lo.iter().zip(hi).map(|(l, h)| h - l).product()),
            RegionShape::Cap { .. } => None,
        }
    }

    /// Chart points sampled on a grid with `per_axis` nodes per axis across the bounding box of
    /// the region (for caps: of the chart image of a sample of cap lines).
    pub fn sample_chart_grid(&self, per_axis: usize) -> Vec<Vec<f64>> {
        let (lo, hi) = self.chart_bounds();
        let d = lo.len();
        let mut out = Vec::new();
        let mut idx = vec![0usize; d];
        let steps = per_axis.max(2) - 1;
        loop {
            let b: Vec<f64> = (0..d).map(|k| lo[k] + (hi[k] - lo[k]) * idx[k] as f64 / steps as f64).collect();
            if self.contains_chart(&b) || matches!(self.shape, RegionShape::Box { .. }) {
                out.push(b);
            }
            let mut k = 0;
            while k < d {
                idx[k] += 1;
                if idx[k] <= steps {
                    break;
                }
                idx[k] = 0;
                k += 1;
            }
            if k == d {
                break;
            }
        }
        out
    }

    /// A bounding box of the region in chart coordinates.
    pub fn chart_bounds(&self) -> (Vec<f64>, Vec<f64>) {
        match &self.shape {
            RegionShape::Box { lo, hi } => (lo.clone(), hi.clone()),
            RegionShape::Cap { center, max_angle } => {
                let d = self.frame.delta();
                let c = self.frame.line_to_unipotent(center).unwrap_or_else(|_| vec![0.0; d]);
                // Expand from the center until the cap boundary is passed in every direction.
                let mut r: f64 = 1e-3;
                loop {
                    let mut inside = false;
                    for k in 0..d {
                        for sgn in [-1.0, 1.0] {
                            let mut b = c.clone();
                            b[k] += sgn * r;
                            let v = self.frame.chart_vector(&b);
                            if line_angle(v.as_slice(), center) <= *max_angle {
                                inside = true;
                            }
                        }
                    }
                    if !inside || r > 1e6 {
                        break;
                    }
                    r *= 1.5;
                }
                (c.iter().map(|x| x - 2.0 * r).collect(), c.iter().map(|x| x + 2.0 * r).collect())
            }
        }
    }

    /// `max |x_s|` over sampled chart vectors `x = Pi(-L0'(b)/2, -b, 1)` of the region. A cone
    /// point `(p, q)` in the region has `b_L(v0, (p, q)) >= q / max|x_s|`.
    pub fn max_last_coordinate(&self) -> f64 {
        let s = self.frame.dim();
        self.sample_chart_grid(41)
            .iter()
            .map(|b| self.frame.chart_vector(b)[s - 1].abs())
            .fold(0.0, f64::max)
    }
}

fn quadric_part(l: &RatSymForm) -> Result<Vec<Vec<Rat>>> {
    Ok(desuspend_form(l)?.entries().clone())
}

fn isqrt(x: i128) -> Option<i128> {
    if x < 0 {
        return None;
    }
    let mut r = (x as f64).sqrt() as i128;
    while r * r > x {
        r -= 1;
    }
    while (r + 1) * (r + 1) <= x {
        r += 1;
    }
    (r * r == x).then_some(r)
}

/// Precomputed data for enumerating solutions of `p^T A p = q^2`.
struct Enumerator {
    n: usize,
    a: Vec<Vec<i128>>,
    scale: i128,
    pivot: usize,
    order: Vec<usize>,
    /// Schur complements for nested bounds (definite case).
    schur: Option<Vec<DMatrix<f64>>>,
    /// Per-coordinate box bounds relative to `q` (indefinite case).
    box_bounds: Vec<f64>,
}

impl Enumerator {
    fn new(qm: &[Vec<Rat>], region: Option<&ConeRegion>) -> Result<Option<Self>> {
        let n = qm.len();
        let qform = RatSymForm::new(qm.to_vec())?;
        let (m, scale) = qform.integer_matrix();
        let (pos, neg) = qform.signature();
        if pos == 0 {
            // q(p) <= 0 < q^2: no points.
            return Ok(None);
        }
        let pivot = (0..n).rev().find(|&k| m[k][k] != 0);
        let order: Vec<usize> = match pivot {
            Some(k) => (0..n).filter(|&i| i != k).collect(),
            None => (0..n).collect(),
        };
        let af = qform.to_dmatrix();
        let definite = neg == 0 && pos == n;
        let schur = if definite {
            let k = pivot.expect("definite forms have nonzero diagonal");
            let mut mats = Vec::new();
            for d in 0..order.len() {
                let p: Vec<usize> = order[..=d].to_vec();
                let r: Vec<usize> = order[d + 1..].iter().copied().chain(std::iter::once(k)).collect();
                let app = DMatrix::from_fn(p.len(), p.len(), |i, j| af[(p[i], p[j])]);
                let apr = DMatrix::from_fn(p.len(), r.len(), |i, j| af[(p[i], r[j])]);
                let arr = DMatrix::from_fn(r.len(), r.len(), |i, j| af[(r[i], r[j])]);
                let arr_inv = arr.try_inverse().ok_or(Error::Degenerate)?;
                mats.push(&app - &apr * arr_inv * apr.transpose());
            }
            Some(mats)
        } else {
            None
        };
        let box_bounds = if definite {
            Vec::new()
        } else {
            let region = region.ok_or_else(|| {
                Error::InvalidRegion("indefinite quadrics have infinitely many points per q; a region is required".into())
            })?;
            let s = n + 1;
            let mut bounds = vec![0.0f64; n];
            for b in region.sample_chart_grid(41) {
                let x = region.frame().chart_vector(&b);
                let last = x[s - 1];
                if last.abs() < 1e-9 {
                    return Err(Error::InvalidRegion("region reaches points at infinity of the quadric".into()));
                }
                for i in 0..n {
                    bounds[i] = bounds[i].max((x[i] / last).abs());
                }
            }
            bounds.iter().map(|b| b * 1.25 + 1e-9).collect()
        };
        Ok(Some(Self { n, a: m, scale, pivot: pivot.unwrap_or(n), order, schur, box_bounds }))
    }

    fn solve_q(&self, q: i64) -> Vec<Vec<i64>> {
        let mut out = Vec::new();
        let mut p = vec![0i64; self.n];
        self.recurse(q, 0, &mut p, &mut out);
        out.sort();
        out.dedup();
        out
    }

    fn range(&self, q: i64, depth: usize, p: &[i64]) -> Option<(i64, i64)> {
        let qf = q as f64;
        match &self.schur {
            Some(mats) => {
                let s = &mats[depth];
                let alpha = s[(depth, depth)];
                let mut beta = 0.0;
                let mut gamma = 0.0;
                for i in 0..depth {
                    let pi = p[self.order[i]] as f64;
                    beta += s[(depth, i)] * pi;
                    for j in 0..depth {
                        gamma += s[(i, j)] * pi * p[self.order[j]] as f64;
                    }
                }
                let disc = beta * beta - alpha * (gamma - qf * qf);
                if disc < -1e-9 * qf * qf {
                    return None;
                }
                let r = disc.max(0.0).sqrt();
                let margin = 1e-7 * (1.0 + qf);
                Some((((-beta - r) / alpha - margin).floor() as i64, ((-beta + r) / alpha + margin).ceil() as i64))
            }
            None => {
                let b = (self.box_bounds[self.order[depth]] * qf).ceil() as i64;
                Some((-b, b))
            }
        }
    }

    fn recurse(&self, q: i64, depth: usize, p: &mut Vec<i64>, out: &mut Vec<Vec<i64>>) {
        if depth == self.order.len() {
            self.solve_pivot(q, p, out);
            return;
        }
        let Some((lo, hi)) = self.range(q, depth, p) else {
            return;
        };
        let c = self.order[depth];
        for x in lo..=hi {
            p[c] = x;
            self.recurse(q, depth + 1, p, out);
        }
        p[c] = 0;
    }

    fn solve_pivot(&self, q: i64, p: &mut [i64], out: &mut Vec<Vec<i64>>) {
        let target = self.scale * (q as i128) * (q as i128);
        if self.pivot == self.n {
            // No nonzero diagonal entry: all coordinates were enumerated.
            if crate::forms::eval_i128(&self.a, p) == target {
                out.push(p.to_vec());
            }
            return;
        }
        let k = self.pivot;
        let a = self.a[k][k];
        let mut b = 0i128;
        let mut c = 0i128;
        for &i in &self.order {
            let pi = p[i] as i128;
            if pi == 0 {
                continue;
            }
            b += self.a[k][i] * pi;
            c += self.a[i][i] * pi * pi;
            for &j in &self.order {
                if j > i {
                    c += 2 * self.a[i][j] * pi * p[j] as i128;
                }
            }
        }
        let disc = b * b - a * (c - target);
        let Some(r) = isqrt(disc) else {
            return;
        };
        for num in [-b - r, -b + r] {
            if num % a == 0 {
                p[k] = (num / a) as i64;
                out.push(p.to_vec());
            }
            if r == 0 {
                break;
            }
        }
        p[k] = 0;
    }
}

/// All primitive `(p, q)` with `q(p) = q^2` and `0 < q <= q_max`, optionally restricted to a
/// region, sorted by `q` and then lexicographically by `p`.
pub fn enumerate_isotropic(l: &RatSymForm, q_max: i64, region: Option<&ConeRegion>) -> Result<Vec<IsotropicVector>> {
    enumerate_isotropic_range(l, 1, q_max, region)
}

/// As [`enumerate_isotropic`] over the denominators `q_lo..=q_hi`.
pub fn enumerate_isotropic_range(l: &RatSymForm, q_lo: i64, q_hi: i64, region: Option<&ConeRegion>) -> Result<Vec<IsotropicVector>> {
    let qm = quadric_part(l)?;
    let Some(en) = Enumerator::new(&qm, region)? else {
        return Ok(Vec::new());
    };
    let per_q: Vec<Vec<IsotropicVector>> = (q_lo.max(1)..=q_hi)
        .into_par_iter()
        .map(|q| {
            en.solve_q(q)
                .into_iter()
                .filter(|p| p.iter().fold(q, |g, &x| g.gcd(&x)) == 1)
                .map(|mut p| {
                    p.push(q);
                    p
                })
                .filter(|v| match region {
                    Some(r) => r.contains_line(&v.iter().map(|&x| x as f64).collect::<Vec<_>>()),
                    None => true,
                })
                .map(IsotropicVector::trusted)
                .collect()
        })
        .collect();
    Ok(per_q.into_iter().flatten().collect())
}

/// Bin index `k` with `a^k <= q < a^{k+1}`.
pub fn bin_index(q: i64, base: f64) -> i64 {
    let qf = q as f64;
    let mut k = (qf.ln() / base.ln()).floor() as i64;
    while base.powi(k as i32) > qf {
        k -= 1;
    }
    while base.powi(k as i32 + 1) <= qf {
        k += 1;
    }
    k
}

/// Counts `N(k; O)` of cone points with denominator in `[a^k, a^{k+1})`.
#[derive(Clone, Debug, Serialize)]
pub struct CountingHistogram {
    #[serde(serialize_with = "ser_real")]
    pub base: f64,
    pub q_max: i64,
    pub bins: Vec<u64>,
    /// Largest `k` whose whole denominator range `[a^k, a^{k+1})` lies below `q_max`.
    pub complete_k_max: i64,
    pub region: Option<RegionShape>,
    pub k_min: Option<i64>,
    #[serde(serialize_with = "ser_opt_real")]
    pub fitted_slope: Option<f64>,
    #[serde(serialize_with = "ser_opt_real")]
    pub fit_r2: Option<f64>,
}

impl CountingHistogram {
    pub fn total(&self) -> u64 {
        self.bins.iter().sum()
    }

    pub fn count(&self, k: i64) -> u64 {
        usize::try_from(k).ok().and_then(|k| self.bins.get(k)).copied().unwrap_or(0)
    }

    /// Smallest `k` with at least 30 points.
    pub fn default_k_min(&self) -> Option<i64> {
        self.bins.iter().position(|&n| n >= 30).map(|k| k as i64)
    }
}

/// Histogram of the points in `region` (all points when `None`), with bins up to the bin of
/// `q_max`, and the default exponent fit attached when enough bins are populated.
pub fn counting_histogram(points: &[IsotropicVector], base: f64, region: Option<&ConeRegion>, q_max: i64) -> Result<CountingHistogram> {
    if !(base > 1.0) {
        return Err(Error::InvalidParameter("base must exceed 1".into()));
    }
    let k_max = bin_index(q_max.max(1), base);
    let mut bins = vec![0u64; (k_max + 1) as usize];
    for v in points {
        let q = v.last();
        if q < 1 || q > q_max {
            continue;
        }
        if let Some(r) = region {
            if !r.contains_line(&v.to_f64()) {
                continue;
            }
        }
        bins[bin_index(q, base) as usize] += 1;
    }
    let mut complete_k_max = k_max;
    while complete_k_max >= 0 && base.powi(complete_k_max as i32 + 1) > (q_max + 1) as f64 {
        complete_k_max -= 1;
    }
    let mut hist = CountingHistogram {
        base,
        q_max,
        bins,
        complete_k_max,
        region: region.map(|r| r.shape().clone()),
        k_min: None,
        fitted_slope: None,
        fit_r2: None,
    };
    if let Some(k_min) = hist.default_k_min() {
        if let Ok((slope, r2)) = fit_exponent(&hist, k_min) {
            hist.k_min = Some(k_min);
            hist.fitted_slope = Some(slope);
            hist.fit_r2 = Some(r2);
        }
    }
    Ok(hist)
}

/// Least-squares slope and `r^2` of `log_a N(k)` against `k + 1` over complete nonempty bins
/// with `k >= k_min`.
pub fn fit_exponent(hist: &CountingHistogram, k_min: i64) -> Result<(f64, f64)> {
    let pts: Vec<(f64, f64)> = (k_min.max(0)..=hist.complete_k_max)
        .filter(|&k| hist.count(k) > 0)
        .map(|k| ((k + 1) as f64, (hist.count(k) as f64).ln() / hist.base.ln()))
        .collect();
    if pts.len() < 3 {
        return Err(Error::TooFewBins(pts.len()));
    }
    Ok(linear_fit(&pts))
}

/// Ordinary least squares `y = a + b x`; returns `(b, r^2)`.
pub fn linear_fit(pts: &[(f64, f64)]) -> (f64, f64) {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 { 1.0 } else { (sxy * sxy) / (sxx * syy) };
    (slope, r2)
}

/// `N(k; O1) / N(k; O2)`.
pub fn equidist_ratio(points: &[IsotropicVector], k: i64, o1: &ConeRegion, o2: &ConeRegion, base: f64) -> Result<f64> {
    let count = |o: &ConeRegion| {
        points
            .iter()
            .filter(|v| bin_index(v.last(), base) == k && o.contains_line(&v.to_f64()))
            .count()
    };
    let den = count(o2);
    if den == 0 {
        return Err(Error::EmptyBin(k));
    }
    Ok(count(o1) as f64 / den as f64)
}

/// A cone point seen from a frame: chart coordinate `u_w` and weight
/// `d_w = 2 sqrt2 ln |b_L(v0, w)|`.
#[derive(Clone, Debug, Serialize)]
pub struct PoolPoint {
    pub w: IsotropicVector,
    pub chart: Vec<f64>,
    pub dw: f64,
}

/// A finite pool of cone points in a chart patch, enumerated up to `q_max`.
#[derive(Clone, Debug)]
pub struct CuspPool {
    frame: Arc<CuspFrame>,
    region: Option<ConeRegion>,
    q_max: i64,
    points: Vec<PoolPoint>,
    complete_depth: f64,
}

impl CuspPool {
    /// Builds the pool from enumerated points, dropping points on the hyperplane at infinity.
    pub fn new(frame: Arc<CuspFrame>, points: &[IsotropicVector], region: Option<ConeRegion>, q_max: i64) -> Result<Self> {
        let mut pool = Vec::with_capacity(points.len());
        for w in points {
            let b = frame.pairing_with_v0(w.coords())?;
            if b.is_zero() {
                continue;
            }
            let x = w.to_f64();
            if let Some(r) = &region {
                if !r.contains_line(&x) {
                    continue;
                }
            }
            let chart = frame.line_to_unipotent(&x)?;
            let dw = 2.0 * std::f64::consts::SQRT_2 * rational::to_f64(&b.abs()).ln();
            pool.push(PoolPoint { w: w.clone(), chart, dw });
        }
        let complete_depth = match &region {
            Some(r) => {
                let m = r.max_last_coordinate() * 1.01;
                2.0 * std::f64::consts::SQRT_2 * ((q_max as f64) / m).ln()
            }
            None => f64::NEG_INFINITY,
        };
        Ok(Self { frame, region, q_max, points: pool, complete_depth })
    }

    /// Enumerates the cone of the frame's form up to `q_max` inside `region` and builds the pool.
    pub fn enumerate(frame: Arc<CuspFrame>, region: ConeRegion, q_max: i64) -> Result<Self> {
        let pts = enumerate_isotropic(frame.form(), q_max, Some(&region))?;
        Self::new(frame, &pts, Some(region), q_max)
    }

    pub fn frame(&self) -> &Arc<CuspFrame> {
        &self.frame
    }

    pub fn region(&self) -> Option<&ConeRegion> {
        self.region.as_ref()
    }

    pub fn q_max(&self) -> i64 {
        self.q_max
    }

    pub fn points(&self) -> &[PoolPoint] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Weight below which every cone point of the region is present in the pool.
    pub fn complete_depth(&self) -> f64 {
        self.complete_depth
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;
    use crate::forms::suspend_form;

    #[test]
    fn circle_small() {
        let l = catalog::circle();
        let pts = enumerate_isotropic(&l, 5, None).unwrap();
        let coords: Vec<Vec<i64>> = pts.iter().map(|v| v.coords().to_vec()).collect();
        let mut oracle = Vec::new();
        for q in 1i64..=5 {
            for x in -q..=q {
                for y in -q..=q {
                    if x * x + y * y == q * q && x.gcd(&y).gcd(&q) == 1 {
                        oracle.push(vec![x, y, q]);
                    }
                }
            }
        }
        assert_eq!(coords, oracle);
        assert_eq!(coords.len(), 12);
    }

    #[test]
    fn sphere_unit_and_empty_quadric() {
        let pts = enumerate_isotropic(&catalog::sphere(), 1, None).unwrap();
        assert_eq!(pts.len(), 6);
        let third = suspend_form(&RatSymForm::diagonal(&[rational::ratio(1, 3), rational::ratio(1, 3)])).unwrap();
        assert!(enumerate_isotropic(&third, 200, None).unwrap().is_empty());
    }

    #[test]
    fn ellipse_matches_brute_force() {
        // q = x^2/2 + xy/3 + y^2: exercises rational, non-diagonal coefficients.
        let q = RatSymForm::new(vec![
            vec![rational::ratio(1, 2), rational::ratio(1, 6)],
            vec![rational::ratio(1, 6), rational::rat(1)],
        ])
        .unwrap();
        let l = suspend_form(&q).unwrap();
        let pts = enumerate_isotropic(&l, 60, None).unwrap();
        let mut oracle = Vec::new();
        for qq in 1i64..=60 {
            for x in -3 * qq..=3 * qq {
                for y in -3 * qq..=3 * qq {
                    if 3 * x * x + 2 * x * y + 6 * y * y == 6 * qq * qq && x.gcd(&y).gcd(&qq) == 1 {
                        oracle.push(vec![x, y, qq]);
                    }
                }
            }
        }
        let coords: Vec<Vec<i64>> = pts.iter().map(|v| v.coords().to_vec()).collect();
        assert_eq!(coords, oracle);
        assert!(!oracle.is_empty());
    }

    #[test]
    fn indefinite_quadric_needs_region() {
        let q = RatSymForm::diagonal(&[rational::rat(1), rational::rat(-1)]);
        let l = suspend_form(&q).unwrap();
        assert!(matches!(enumerate_isotropic(&l, 10, None), Err(Error::InvalidRegion(_))));
        let v0 = crate::forms::find_isotropic_seed(&l, 3).unwrap().unwrap();
        let frame = Arc::new(crate::frame::witt_frame(&l, &v0).unwrap());
        let region = ConeRegion::cap(frame, vec![1.0, 0.0, 1.0], 0.3).unwrap();
        let pts = enumerate_isotropic(&l, 40, Some(&region)).unwrap();
        for v in &pts {
            let c = v.coords();
            assert_eq!(c[0] * c[0] - c[1] * c[1], c[2] * c[2]);
            assert!(region.contains_line(&v.to_f64()));
        }
        assert!(!pts.is_empty());
    }

    #[test]
    fn histogram_and_fit() {
        let hist = CountingHistogram {
            base: 2.0,
            q_max: 1 << 10,
            bins: (0..=10).map(|k| 3u64 << (2 * (k + 1))).collect(),
            complete_k_max: 9,
            region: None,
            k_min: None,
            fitted_slope: None,
            fit_r2: None,
        };
        let (slope, r2) = fit_exponent(&hist, 0).unwrap();
        assert!((slope - 2.0).abs() < 1e-12);
        assert!((r2 - 1.0).abs() < 1e-12);
        let empty = counting_histogram(&[], 2.0, None, 100).unwrap();
        assert!(empty.bins.iter().all(|&n| n == 0));
        assert_eq!(empty.bins.len(), 7);
        assert!(matches!(fit_exponent(&empty, 0), Err(Error::TooFewBins(0))));
        assert!(counting_histogram(&[], 1.0, None, 100).is_err());
    }

    #[test]
    fn bins_are_exact_at_powers() {
        assert_eq!(bin_index(1, 2.0), 0);
        assert_eq!(bin_index(2, 2.0), 1);
        assert_eq!(bin_index(3, 2.0), 1);
        assert_eq!(bin_index(4096, 2.0), 12);
        assert_eq!(bin_index(4095, 2.0), 11);
        assert_eq!(bin_index(27, 3.0), 3);
    }

    #[test]
    fn caps_must_avoid_infinity() {
        let l = catalog::circle();
        let frame = Arc::new(catalog::standard_frame(&l).unwrap());
        let v0 = frame.v0().to_f64();
        assert!(ConeRegion::cap(frame.clone(), v0, 0.1).is_err());
        let w: Vec<f64> = frame.opposite().iter().map(rational::to_f64).collect();
        let cap = ConeRegion::cap(frame, w.clone(), 0.3).unwrap();
        assert!(cap.contains_line(&w));
    }
}

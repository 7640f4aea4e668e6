use quadcusp::conepoints::linear_fit;
use quadcusp::horoball::{trace_inclusion_check, trace_measure_mc, InclusionReport, TraceEstimate};
use quadcusp::json::ser_real;
use quadcusp::rational::to_f64;
use serde::Serialize;

use super::cases;
use crate::output::{real, Ctx};
use crate::HarnessError;

const TWO_SQRT2: f64 = 2.0 * std::f64::consts::SQRT_2;
const TAUS: [f64; 9] = [2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0, 10.0];
const DEPTHS: [f64; 5] = [4.0, 6.0, 8.0, 10.0, 12.0];
const TAU_AT_DEPTH: f64 = 2.0;

#[derive(Serialize)]
struct Point {
    #[serde(serialize_with = "ser_real")]
    depth: f64,
    #[serde(serialize_with = "ser_real")]
    tau: f64,
    estimate: TraceEstimate,
}

#[derive(Serialize)]
struct TraceResult {
    form: String,
    tau_series: Vec<Point>,
    depth_series: Vec<Point>,
    #[serde(serialize_with = "ser_real")]
    tau_slope: f64,
    #[serde(serialize_with = "ser_real")]
    tau_intercept: f64,
    #[serde(serialize_with = "ser_real")]
    depth_slope: f64,
    inclusion: InclusionReport,
}

fn fit_with_intercept(pts: &[(f64, f64)]) -> (f64, f64) {
    let (slope, _) = linear_fit(pts);
    let n = pts.len() as f64;
    let intercept = pts.iter().map(|p| p.1 - slope * p.0).sum::<f64>() / n;
    (slope, intercept)
}

pub(super) fn run(ctx: &mut Ctx<'_>) -> Result<(), HarnessError> {
    ctx.set_anchor("horoball traces: Tr_{D+tau}(w) lies in a ball of radius kappa0 e^{-D/(2 sqrt2)} around u_w and has measure e^{-(D Delta + tau)/(2 sqrt2)} up to constants");
    let samples = ctx.cfg.samples;
    let mut rows = Vec::new();
    for case in cases(ctx)? {
        let frame = &case.frame;
        let delta = frame.delta() as f64;
        let w0: Vec<f64> = frame.opposite().iter().map(to_f64).collect();
        let seed = ctx.seed(&format!("{}/measure", case.label));
        // The opposite frame vector pairs to one with v0, so D = 0; scaling by
        // e^{D/(2 sqrt2)} gives the cone vector at depth D.
        let at_depth = |d: f64| -> Vec<f64> { w0.iter().map(|x| x * (d / TWO_SQRT2).exp()).collect() };
        let mut tau_series = Vec::new();
        for (i, &tau) in TAUS.iter().enumerate() {
            let estimate = trace_measure_mc(frame, &w0, tau, samples, seed.wrapping_add(i as u64))?;
            tau_series.push(Point { depth: 0.0, tau, estimate });
        }
        let mut depth_series = Vec::new();
        for (i, &d) in DEPTHS.iter().enumerate() {
            let estimate = trace_measure_mc(frame, &at_depth(d), d + TAU_AT_DEPTH, samples, seed.wrapping_add(100 + i as u64))?;
            depth_series.push(Point { depth: d, tau: TAU_AT_DEPTH, estimate });
        }
        let logs = |series: &[Point], x: fn(&Point) -> f64| -> Vec<(f64, f64)> {
            series.iter().filter(|p| p.estimate.estimate > 0.0).map(|p| (x(p), p.estimate.estimate.ln())).collect()
        };
        let tau_pts = logs(&tau_series, |p| p.tau);
        let depth_pts = logs(&depth_series, |p| p.depth);
        let (tau_slope, tau_intercept) = if tau_pts.len() >= 3 { fit_with_intercept(&tau_pts) } else { (f64::NAN, f64::NAN) };
        let depth_slope = if depth_pts.len() >= 3 { linear_fit(&depth_pts).0 } else { f64::NAN };
        let tau_target = -1.0 / TWO_SQRT2;
        let depth_target = -delta / TWO_SQRT2;
        ctx.check(
            format!("{} log-measure slope in tau", case.label),
            tau_slope,
            format!("{} within 15%", real(tau_target)),
            (tau_slope - tau_target).abs() <= 0.15 * tau_target.abs(),
        );
        ctx.check(
            format!("{} log-measure slope in D", case.label),
            depth_slope,
            format!("{} within 15%", real(depth_target)),
            (depth_slope - depth_target).abs() <= 0.15 * depth_target.abs(),
        );
        let inclusion = trace_inclusion_check(frame, &w0, TAU_AT_DEPTH, 1.0, 1.5, samples.max(100_000), ctx.seed(&format!("{}/inclusion", case.label)))?;
        ctx.check(
            format!("{} inclusion violations", case.label),
            inclusion.violations as f64,
            format!("0 of {}", inclusion.samples),
            inclusion.violations == 0 && inclusion.samples >= 100_000,
        );
        for p in tau_series.iter().chain(&depth_series) {
            rows.push(vec![case.label.clone(), real(p.depth), real(p.tau), real(p.estimate.estimate), real(p.estimate.stderr), p.estimate.hits.to_string()]);
        }
        ctx.result(&case.label, &TraceResult { form: case.form.to_text(), tau_series, depth_series, tau_slope, tau_intercept, depth_slope, inclusion })?;
    }
    ctx.csv("trace.csv", &["form", "D", "tau", "estimate", "stderr", "hits"], &rows)?;
    ctx.text(
        "plot.gp",
        "set datafile separator ','\nset logscale y\nset xlabel 'tau (D = 0) or D (tau = 2)'\nset ylabel 'trace measure'\n\
         plot 'trace.csv' skip 1 using ($2 == 0 ? $3 : 1/0):4 with linespoints title 'D = 0', \\\n     '' skip 1 using ($2 > 0 ? $2 : 1/0):4 with linespoints title 'tau = 2'\n",
    )
}

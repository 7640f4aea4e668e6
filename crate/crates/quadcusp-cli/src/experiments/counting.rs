use quadcusp::conepoints::{counting_histogram, enumerate_isotropic, fit_exponent};
use quadcusp::json::ser_real;
use serde::Serialize;

use super::{cases, within};
use crate::output::Ctx;
use crate::HarnessError;

#[derive(Serialize)]
struct CaseResult {
    form: String,
    q_max: i64,
    #[serde(serialize_with = "ser_real")]
    patch: f64,
    points: u64,
    histogram: quadcusp::conepoints::CountingHistogram,
    k_min: Option<i64>,
    verdict: &'static str,
}

pub(super) fn run(ctx: &mut Ctx<'_>) -> Result<(), HarnessError> {
    ctx.set_anchor("counting law: rational points of denominator below a^k in a chart region grow like a^(k Delta)");
    let mut plot = String::from("set logscale y 2\nset xlabel 'k + 1'\nset ylabel 'N(k; O)'\nset key left\n");
    let mut plots = Vec::new();
    for case in cases(ctx)? {
        let region = case.region()?;
        let points = enumerate_isotropic(&case.form, case.q_max, Some(&region))?;
        let hist = counting_histogram(&points, ctx.cfg.base, Some(&region), case.q_max)?;
        let k_min = ctx.cfg.k_min.or(hist.default_k_min());
        let fit = k_min.map(|k| fit_exponent(&hist, k));
        let target = case.delta() as f64;
        let verdict = match fit {
            Some(Ok((slope, r2))) => {
                ctx.check(format!("{} slope", case.label), slope, format!("{target} +- 0.2"), within(slope, target, 0.2));
                ctx.check(format!("{} r2", case.label), r2, ">= 0.97", r2 >= 0.97);
                "fitted"
            }
            _ => {
                ctx.check(format!("{} slope", case.label), f64::NAN, "insufficient data", false);
                "insufficient data"
            }
        };
        let rows: Vec<Vec<String>> = hist
            .bins
            .iter()
            .enumerate()
            .map(|(k, &n)| vec![k.to_string(), n.to_string(), (k as i64 <= hist.complete_k_max).to_string()])
            .collect();
        let file = format!("counting_{}.csv", case.label);
        ctx.csv(&file, &["k", "count", "complete"], &rows)?;
        plots.push(format!("'{file}' skip 1 using ($1+1):($2) with linespoints title '{}'", case.label));
        ctx.result(
            &case.label,
            &CaseResult { form: case.form.to_text(), q_max: case.q_max, patch: case.patch, points: hist.total(), k_min, histogram: hist, verdict },
        )?;
    }
    plot.push_str("set datafile separator ','\nplot ");
    plot.push_str(&plots.join(", \\\n     "));
    plot.push('\n');
    ctx.text("plot.gp", &plot)
}

use quadcusp::conepoints::{bin_index, enumerate_isotropic, equidist_ratio, ConeRegion};
use quadcusp::json::{ser_opt_real, ser_real};
use serde::Serialize;

use super::cases;
use crate::output::{real, Ctx};
use crate::HarnessError;

#[derive(Serialize)]
struct PairResult {
    name: &'static str,
    k: Option<i64>,
    #[serde(serialize_with = "ser_opt_real")]
    ratio: Option<f64>,
    #[serde(serialize_with = "ser_real")]
    volume_ratio: f64,
}

/// Largest complete bin in which both regions are populated.
fn largest_populated(points: &[quadcusp::IsotropicVector], o1: &ConeRegion, o2: &ConeRegion, base: f64, q_max: i64) -> Option<i64> {
    let mut k = bin_index(q_max, base);
    while k >= 0 && base.powi(k as i32 + 1) > (q_max + 1) as f64 {
        k -= 1;
    }
    (0..=k).rev().find(|&k| {
        let populated = |o: &ConeRegion| points.iter().any(|v| bin_index(v.last(), base) == k && o.contains_line(&v.to_f64()));
        populated(o1) && populated(o2)
    })
}

pub(super) fn run(ctx: &mut Ctx<'_>) -> Result<(), HarnessError> {
    ctx.set_anchor("equidistribution of rational points of the quadric: counts in chart regions are proportional to their measure");
    let base = ctx.cfg.base;
    let mut rows = Vec::new();
    for case in cases(ctx)? {
        if case.delta() != 2 {
            return Err(HarnessError::Config("equidist uses two-dimensional charts".into()));
        }
        let r = case.patch;
        let region = case.region()?;
        let points = enumerate_isotropic(&case.form, case.q_max, Some(&region))?;
        let boxed = |lo: [f64; 2], hi: [f64; 2]| ConeRegion::chart_box(case.frame.clone(), lo.to_vec(), hi.to_vec());
        // Mirror images under b_1 -> -b_1, and a box of twice the area sharing a side.
        let o1 = boxed([-r, -0.4 * r], [-0.2 * r, 0.4 * r])?;
        let o2 = boxed([0.2 * r, -0.4 * r], [r, 0.4 * r])?;
        let o3 = boxed([0.2 * r, -0.8 * r], [r, 0.8 * r])?;
        for (name, a, b, target, lo, hi) in [("congruent", &o1, &o2, 1.0, 0.8, 1.25), ("double", &o3, &o2, 2.0, 1.6, 2.4)] {
            let k = largest_populated(&points, a, b, base, case.q_max);
            let ratio = k.map(|k| equidist_ratio(&points, k, a, b, base)).transpose()?;
            let value = ratio.unwrap_or(f64::NAN);
            ctx.check(format!("{} {name} ratio", case.label), value, format!("[{lo}, {hi}]"), value >= lo && value <= hi);
            let volume_ratio = a.chart_volume().unwrap_or(f64::NAN) / b.chart_volume().unwrap_or(f64::NAN);
            rows.push(vec![case.label.clone(), name.to_string(), k.map_or("".into(), |k| k.to_string()), real(value), real(target)]);
            ctx.result(&format!("{}_{name}", case.label), &PairResult { name, k, ratio, volume_ratio })?;
        }
    }
    ctx.csv("equidist.csv", &["form", "pair", "k", "ratio", "volume_ratio"], &rows)?;
    ctx.text(
        "plot.gp",
        "set datafile separator ','\nset style data histograms\nset ylabel 'N(k; O1) / N(k; O2)'\nplot 'equidist.csv' skip 1 using 4:xtic(2) title 'ratio', '' skip 1 using 5 title 'volume ratio'\n",
    )
}

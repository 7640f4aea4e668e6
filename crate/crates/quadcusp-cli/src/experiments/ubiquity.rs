use std::sync::Arc;

use num_traits::One;
use quadcusp::approx::ApproxFunction;
use quadcusp::conepoints::CuspPool;
use quadcusp::json::{ser_opt_real, ser_real};
use quadcusp::rational::{fmt_rat, rat, ratio, to_f64, Rat};
use quadcusp::ubiquity::{
    classify_numeric, divergence_classifier, fit_kappa, local_ubiquity_stabilized, measure_condition, u_regular_check, KappaReport, MeasureCondition,
    PowerDimension, UbiquitySpec, Verdict,
};
use serde::Serialize;

use super::cases;
use crate::output::{real, Ctx};
use crate::HarnessError;

const MAX_BALLS: usize = 500;
const FIRST_INDEX: u32 = 3;

#[derive(Serialize)]
struct GridPoint {
    alpha: String,
    s: String,
    verdict: Verdict,
    numeric: Verdict,
    expected: Verdict,
}

#[derive(Serialize)]
struct UbiquityResult {
    form: String,
    pool_size: usize,
    #[serde(serialize_with = "ser_real")]
    shell_width: f64,
    #[serde(serialize_with = "ser_real")]
    lambda: f64,
    regular: bool,
    measure_condition: Option<MeasureCondition>,
    #[serde(serialize_with = "ser_opt_real")]
    fitted_kappa: Option<f64>,
    kappa: KappaReport,
    classifier_grid: Vec<GridPoint>,
}

pub(super) fn run(ctx: &mut Ctx<'_>) -> Result<(), HarnessError> {
    ctx.set_anchor("local ubiquity of resonant cusp points with rho(x) = kappa e^{-x/(2 sqrt2)}, and the divergence criterion s <= Delta/(1+alpha)");
    let t = ctx.cfg.shell_width();
    let lambda = (-t / (2.0 * std::f64::consts::SQRT_2)).exp() * 1.01;
    let mut rows = Vec::new();
    for case in cases(ctx)? {
        let delta = case.delta();
        let pool = Arc::new(CuspPool::enumerate(case.frame.clone(), case.region()?, case.q_max)?);
        let rho = UbiquitySpec::standard_rho(ctx.cfg.kappa)?;
        let spec = UbiquitySpec::new(pool.clone(), rho.clone(), t, lambda)?;
        let regular = u_regular_check(&spec, 1)?;
        ctx.check(format!("{} u-regularity of rho", case.label), regular as u8 as f64, "holds", regular);
        let n_hi = (pool.complete_depth() / t).floor().max(0.0) as u32;
        let seed = ctx.seed(&format!("{}/balls", case.label));
        let kappa = local_ubiquity_stabilized(&spec, ctx.cfg.balls, MAX_BALLS, (FIRST_INDEX, n_hi), ctx.cfg.r1, seed)?;
        let k = kappa.kappa_hat.unwrap_or(0.0);
        ctx.check(
            format!("{} kappa_hat over {} stabilized balls", case.label, kappa.stabilized),
            k,
            format!("> 0.05 with {} stabilized balls", ctx.cfg.balls),
            k > 0.05 && kappa.stabilized >= ctx.cfg.balls,
        );
        let measure = measure_condition(&spec, ctx.seed(&format!("{}/measure", case.label))).ok();
        let fitted_kappa = fit_kappa(&pool, 9.0 * t, 0.5, ctx.seed(&format!("{}/fit", case.label))).ok();

        // Divergence classifier on an (alpha, s) grid straddling s = Delta/(1+alpha).
        let mut grid = Vec::new();
        let mut agree = true;
        let mut consistent = true;
        for a in [1, 2, 3, 5] {
            let alpha = rat(a);
            let threshold = Rat::from_integer((delta as i64).into()) / (Rat::one() + &alpha);
            let psi = ApproxFunction::power(alpha.clone())?.to_weight_side()?;
            for offset in [ratio(-1, 10), ratio(-1, 20), rat(0), ratio(1, 20), ratio(1, 10)] {
                let s = &threshold + offset;
                let c = divergence_classifier(&PowerDimension { s: s.clone() }, &psi, &rho, delta, t)?;
                let expected = if s <= threshold { Verdict::MeasureInfinite } else { Verdict::MeasureFiniteCover };
                let numeric = classify_numeric(to_f64(&s), &psi, &rho, delta, t);
                agree &= c.verdict == expected;
                consistent &= numeric == c.verdict;
                rows.push(vec![case.label.clone(), fmt_rat(&alpha), fmt_rat(&s), format!("{:?}", c.verdict), format!("{numeric:?}")]);
                grid.push(GridPoint { alpha: fmt_rat(&alpha), s: fmt_rat(&s), verdict: c.verdict, numeric, expected });
            }
        }
        ctx.check(format!("{} classifier flips at Delta/(1+alpha) on {} points", case.label, grid.len()), agree as u8 as f64, "all agree", agree);
        ctx.check(format!("{} numeric classifier agrees", case.label), consistent as u8 as f64, "all agree", consistent);

        let ball_rows: Vec<Vec<String>> = kappa
            .balls
            .iter()
            .map(|b| {
                let mut r: Vec<String> = b.center.iter().map(|&x| real(x)).collect();
                r.push(real(b.radius));
                r.push(b.n0.map_or("".into(), |n| n.to_string()));
                r.push(b.kappa.map_or("".into(), real));
                r
            })
            .collect();
        let mut header: Vec<String> = (0..delta).map(|i| format!("b{}", i + 1)).collect();
        header.extend(["radius", "n0", "kappa"].map(String::from));
        let header: Vec<&str> = header.iter().map(String::as_str).collect();
        ctx.csv(&format!("balls_{}.csv", case.label), &header, &ball_rows)?;
        ctx.result(
            &case.label,
            &UbiquityResult {
                form: case.form.to_text(),
                pool_size: pool.len(),
                shell_width: t,
                lambda,
                regular,
                measure_condition: measure,
                fitted_kappa,
                kappa,
                classifier_grid: grid,
            },
        )?;
        ctx.text(
            &format!("plot_{}.gp", case.label),
            &format!("set datafile separator ','\nset xlabel 'b1'\nset ylabel 'local kappa'\nplot 'balls_{}.csv' skip 1 using 1:{} with points title 'kappa per ball'\n", case.label, delta + 3),
        )?;
    }
    ctx.csv("classifier.csv", &["form", "alpha", "s", "symbolic", "numeric"], &rows)
}

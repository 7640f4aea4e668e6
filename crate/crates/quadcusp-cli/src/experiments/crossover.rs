use quadcusp::approx::ApproxFunction;
use quadcusp::conepoints::CuspPool;
use quadcusp::dioph::{critical_exponent_upper, predicted_dimension, shell_law, uniform_grid, CrossoverReport, ShellLaw};
use quadcusp::json::{ser_opt_real, ser_real};
use quadcusp::rational::{fmt_rat, to_f64, Rat};
use num_traits::One;
use serde::Serialize;

use super::{cases, rats};
use crate::output::{real, Ctx};
use crate::HarnessError;

#[derive(Serialize)]
struct CrossoverResult {
    form: String,
    alpha: String,
    pool_size: usize,
    #[serde(serialize_with = "ser_real")]
    complete_depth: f64,
    predicted: String,
    #[serde(serialize_with = "ser_opt_real")]
    crossover: Option<f64>,
    shell_law: Option<ShellLaw>,
    report: CrossoverReport,
}

pub(super) fn run(ctx: &mut Ctx<'_>) -> Result<(), HarnessError> {
    ctx.set_anchor("dimension of very well approximable points on the quadric: critical exponent (n-1)/(1+alpha) from shell sums of Psi(d_w)^s");
    let alphas = rats(&ctx.cfg.alpha)?;
    let t = ctx.cfg.shell_width();
    let grid = uniform_grid(0.0, 1.5, 0.01);
    let mut rows = Vec::new();
    let mut plots = Vec::new();
    for case in cases(ctx)? {
        let pool = CuspPool::enumerate(case.frame.clone(), case.region()?, case.q_max)?;
        let n = case.form.dim() - 1;
        for alpha in &alphas {
            let psi = ApproxFunction::power(alpha.clone())?;
            let predicted = predicted_dimension(&psi, n)?;
            let exact = Rat::from_integer(((n - 1) as i64).into()) / (Rat::one() + alpha);
            let label = format!("{} alpha={}", case.label, fmt_rat(alpha));
            ctx.check(format!("{label} predicted dimension"), to_f64(&predicted), format!("exactly {}", fmt_rat(&exact)), predicted == exact);
            let outcome = critical_exponent_upper(&pool, &psi.to_weight_side()?, t, &grid);
            let crossover = outcome.as_ref().ok().and_then(|r| r.crossover);
            let value = crossover.unwrap_or(f64::NAN);
            let target = to_f64(&exact);
            ctx.check(format!("{label} crossover"), value, format!("{} +- 0.15", real(target)), (value - target).abs() <= 0.15);
            let report = outcome?;
            let file = format!("crossover_{}_{}.csv", case.label, fmt_rat(alpha).replace('/', "_"));
            let table: Vec<Vec<String>> = report
                .grid
                .iter()
                .map(|g| vec![real(g.s), real(g.mean_ratio), g.bounded.to_string()])
                .collect();
            ctx.csv(&file, &["s", "mean_ratio", "bounded"], &table)?;
            plots.push(format!("'{file}' skip 1 using 1:2 with lines title '{label}'"));
            rows.push(vec![case.label.clone(), fmt_rat(alpha), fmt_rat(&predicted), real(value)]);
            ctx.result(
                &format!("{}_{}", case.label, fmt_rat(alpha).replace('/', "_")),
                &CrossoverResult {
                    form: case.form.to_text(),
                    alpha: fmt_rat(alpha),
                    pool_size: pool.len(),
                    complete_depth: pool.complete_depth(),
                    predicted: fmt_rat(&predicted),
                    crossover,
                    shell_law: shell_law(&pool, t).ok(),
                    report,
                },
            )?;
        }
    }
    ctx.csv("crossover.csv", &["form", "alpha", "predicted", "crossover"], &rows)?;
    let mut plot = String::from("set datafile separator ','\nset xlabel 's'\nset ylabel 'mean shell ratio'\nset arrow from graph 0, first 0.9 to graph 1, first 0.9 nohead dt 2\nplot ");
    plot.push_str(&plots.join(", \\\n     "));
    plot.push('\n');
    ctx.text("plot.gp", &plot)
}

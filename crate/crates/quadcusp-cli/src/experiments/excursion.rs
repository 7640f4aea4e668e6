use quadcusp::dioph::dw_weight;
use quadcusp::excursion::{flow_and_record, flow_grid, generic_grid, predicted_excursion_dimension, rbeta_event_summary, DepthPool, EventSummary, PhiSpec};
use quadcusp::json::{ser_real, ser_reals};
use quadcusp::rational::{fmt_rat, to_f64, Rat};
use num_traits::One;
use serde::Serialize;

use super::{cases, rats};
use crate::output::{real, Ctx};
use crate::HarnessError;

const GENERIC_BETA: f64 = 0.99;
const CUSP_TRACES: usize = 5;

#[derive(Serialize)]
struct CuspTraces {
    beta: String,
    predicted_dimension: String,
    witnesses: Vec<Vec<i64>>,
    #[serde(serialize_with = "ser_reals")]
    weights: Vec<f64>,
    summary: EventSummary,
}

#[derive(Serialize)]
struct ExcursionResult {
    form: String,
    pool_qmax: i64,
    pool_size: usize,
    cusp_traces: Vec<CuspTraces>,
    generic: EventSummary,
    /// Largest change of the final depth on the generic grid when the pool is doubled.
    #[serde(serialize_with = "ser_real")]
    pool_sensitivity: f64,
}

pub(super) fn run(ctx: &mut Ctx<'_>) -> Result<(), HarnessError> {
    ctx.set_anchor("cusp excursions: points whose ray reaches depth beta t infinitely often, with dimension Delta (1 - beta) from the Phi1 correspondence");
    let betas = rats(&ctx.cfg.beta)?;
    let (t_max, dt) = (ctx.cfg.t_max, ctx.cfg.dt);
    for case in cases(ctx)? {
        let delta = case.delta();
        let pool = DepthPool::enumerate(case.frame.clone(), case.q_max)?;
        let frame = case.frame.clone();
        // Cusp points in the patch, by increasing weight.
        let mut cusp: Vec<(f64, Vec<i64>, Vec<f64>)> = pool
            .vectors()
            .iter()
            .filter_map(|v| {
                let dw = dw_weight(v.coords(), &frame).ok()?.dw;
                let b = frame.line_to_unipotent(&v.to_f64()).ok()?;
                b.iter().all(|x| x.abs() <= case.patch).then(|| (dw, v.coords().to_vec(), b))
            })
            .collect();
        cusp.sort_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1.cmp(&b.1)));

        let mut cusp_traces = Vec::new();
        for beta in &betas {
            let predicted = predicted_excursion_dimension(&PhiSpec::beta(beta.clone()), delta)?;
            let exact = (Rat::one() - beta) * Rat::from_integer((delta as i64).into());
            let label = format!("{} beta={}", case.label, fmt_rat(beta));
            ctx.check(format!("{label} predicted dimension"), to_f64(&predicted), format!("exactly {}", fmt_rat(&exact)), predicted == exact);
            let bf = to_f64(beta);
            let chosen: Vec<&(f64, Vec<i64>, Vec<f64>)> = cusp.iter().filter(|c| c.0 <= 0.9 * (1.0 - bf) * t_max).take(CUSP_TRACES).collect();
            let starts: Vec<Vec<f64>> = chosen.iter().map(|c| c.2.clone()).collect();
            let traces = flow_grid(&pool, &starts, t_max, dt, bf)?;
            let summary = rbeta_event_summary(&traces, bf);
            let all = !chosen.is_empty() && summary.persistent == chosen.len();
            ctx.check(format!("{label} cusp traces persistent"), summary.persistent as f64, format!("all {} persist", chosen.len()), all);
            if let Some(tr) = traces.first() {
                let rows: Vec<Vec<String>> = tr.samples.iter().map(|s| vec![real(s.t), real(s.depth), s.witness.to_string()]).collect();
                ctx.csv(&format!("trace_{}_beta_{}.csv", case.label, fmt_rat(beta).replace('/', "_")), &["t", "depth", "witness"], &rows)?;
            }
            cusp_traces.push(CuspTraces {
                beta: fmt_rat(beta),
                predicted_dimension: fmt_rat(&predicted),
                witnesses: chosen.iter().map(|c| c.1.clone()).collect(),
                weights: chosen.iter().map(|c| c.0).collect(),
                summary,
            });
        }

        let per_axis = (ctx.cfg.balls as f64).powf(1.0 / delta as f64).round().max(1.0) as usize;
        let grid = generic_grid(delta, per_axis, -case.patch, case.patch);
        let traces = flow_grid(&pool, &grid, t_max, dt, GENERIC_BETA)?;
        let generic = rbeta_event_summary(&traces, GENERIC_BETA);
        ctx.check(
            format!("{} generic grid persistent at beta={GENERIC_BETA}", case.label),
            generic.persistent as f64,
            format!("0 of {}", grid.len()),
            generic.persistent == 0,
        );
        if let Some(tr) = traces.first() {
            let rows: Vec<Vec<String>> = tr.samples.iter().map(|s| vec![real(s.t), real(s.depth), s.witness.to_string()]).collect();
            ctx.csv(&format!("trace_{}_generic.csv", case.label), &["t", "depth", "witness"], &rows)?;
        }
        let doubled = DepthPool::enumerate(case.frame.clone(), 2 * case.q_max)?;
        let pool_sensitivity = grid
            .iter()
            .map(|b| flow_and_record(&doubled, b, t_max, t_max, 1.0).map(|d| (d.samples[1].depth - pool.depth(t_max, b).0).abs()))
            .collect::<Result<Vec<f64>, _>>()?
            .into_iter()
            .fold(0.0, f64::max);
        ctx.result(
            &case.label,
            &ExcursionResult { form: case.form.to_text(), pool_qmax: case.q_max, pool_size: pool.len(), cusp_traces, generic, pool_sensitivity },
        )?;
        let mut plot = String::from("set datafile separator ','\nset xlabel 't'\nset ylabel 'depth'\nplot ");
        let mut parts: Vec<String> = betas
            .iter()
            .map(|b| format!("'trace_{}_beta_{}.csv' skip 1 using 1:2 with lines title 'u_w, beta = {}'", case.label, fmt_rat(b).replace('/', "_"), fmt_rat(b)))
            .collect();
        parts.push(format!("'trace_{}_generic.csv' skip 1 using 1:2 with lines title 'generic'", case.label));
        parts.push("x * 0.5 with lines dt 2 title 'beta t, beta = 1/2'".into());
        plot.push_str(&parts.join(", \\\n     "));
        plot.push('\n');
        ctx.text(&format!("plot_{}.gp", case.label), &plot)?;
    }
    Ok(())
}
